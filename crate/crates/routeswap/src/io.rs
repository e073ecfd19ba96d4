//! File formats: network and scenario JSON, flow-state files, trajectory and
//! sweep CSV, and the fixed 12-significant-digit number formatting that keeps
//! reruns byte-identical.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::analysis::{ThetaPhase, UeSolution, DEFAULT_AD_TOL};
use crate::dynamics::{StepperConfig, Termination, TrajectoryRecord};
use crate::error::{Error, Result};
use crate::network::{FlowState, Network, NetworkData};
use crate::protocols::ProtocolParams;
use crate::scenarios::{Reduction, ScenarioSpec, SweepTable};

/// Formats with 12 significant digits in plain decimal notation.
pub fn format_sig(v: f64) -> String {
    format_sig_n(v, 12)
}

/// Formats with `sig` significant digits in plain decimal notation.
pub fn format_sig_n(v: f64, sig: usize) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    if !v.is_finite() {
        return format!("{v}");
    }
    let magnitude = v.abs().log10().floor() as i32;
    let decimals = (sig as i32 - 1 - magnitude).clamp(0, 30) as usize;
    let mut s = format!("{v:.decimals$}");
    if s.contains('.') {
        while s.ends_with('0') {
            s.pop();
        }
        if s.ends_with('.') {
            s.pop();
        }
    }
    if s == "-0" {
        s = "0".to_string();
    }
    s
}

/// Rounds to 12 significant digits by round-tripping through the formatter;
/// used so emitted JSON carries the same precision as the CSV outputs.
pub fn round_sig(v: f64) -> f64 {
    format_sig(v).parse().unwrap_or(v)
}

fn io_err(path: &Path, err: impl std::fmt::Display) -> Error {
    Error::Io(format!("{}: {err}", path.display()))
}

/// Reads a network description file (lenient: may hold violations).
pub fn load_network_data(path: &Path) -> Result<NetworkData> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

/// Reads and compiles a network file, refusing invalid descriptions.
pub fn load_network(path: &Path) -> Result<Network> {
    Network::from_data(load_network_data(path)?)
}

pub fn save_network(path: &Path, data: &NetworkData) -> Result<()> {
    let text = serde_json::to_string_pretty(data).expect("network serializes");
    fs::write(path, text + "\n").map_err(|e| io_err(path, e))
}

/// A flow state keyed by route id, as stored on disk.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FlowFile {
    pub flows: BTreeMap<String, f64>,
    #[serde(default)]
    pub day: u64,
}

impl FlowFile {
    pub fn from_state(net: &Network, state: &FlowState) -> Self {
        FlowFile {
            flows: net
                .routes()
                .iter()
                .zip(&state.flows)
                .map(|(r, &f)| (r.id.clone(), f))
                .collect(),
            day: state.day,
        }
    }

    /// Resolves against a network's route order.
    pub fn into_state(self, net: &Network) -> Result<FlowState> {
        let mut flows = vec![0.0; net.num_routes()];
        for (id, value) in &self.flows {
            let k = net
                .route_position(id)
                .ok_or_else(|| Error::UnknownRoute(id.clone()))?;
            flows[k] = *value;
        }
        if self.flows.len() != net.num_routes() {
            return Err(Error::DimensionMismatch {
                what: "flow file entries",
                expected: net.num_routes(),
                got: self.flows.len(),
            });
        }
        Ok(FlowState::new(flows, self.day))
    }
}

pub fn load_flow_state(path: &Path, net: &Network) -> Result<FlowState> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let file: FlowFile =
        serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    file.into_state(net)
}

pub fn save_flow_state(path: &Path, net: &Network, state: &FlowState) -> Result<()> {
    let file = FlowFile::from_state(net, state);
    let text = serde_json::to_string_pretty(&file).expect("flow file serializes");
    fs::write(path, text + "\n").map_err(|e| io_err(path, e))
}

/// A value grid: either explicit values or an inclusive `[start:step:stop]`
/// range. Ranges expand through integer multiples of the step, so decimal
/// grids come out with exact counts (no fencepost drift).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GridSpec {
    List(Vec<f64>),
    Range { start: f64, step: f64, stop: f64 },
}

impl GridSpec {
    pub fn expand(&self) -> Result<Vec<f64>> {
        match self {
            GridSpec::List(values) => Ok(values.clone()),
            GridSpec::Range { start, step, stop } => {
                if !(*step > 0.0) {
                    return Err(Error::InvalidParameter(format!(
                        "grid step must be > 0, got {step}"
                    )));
                }
                if stop < start {
                    return Err(Error::InvalidParameter(format!(
                        "grid stop {stop} is below start {start}"
                    )));
                }
                // half-a-step slack keeps the inclusive stop robust
                let count = ((stop - start) / step + 0.5).floor() as usize + 1;
                Ok((0..count).map(|i| start + i as f64 * step).collect())
            }
        }
    }
}

/// How the deviation reference is obtained: the literal string `"oracle"`
/// solves the equilibrium at load time; anything else is a flow-file path.
pub const ORACLE_REFERENCE: &str = "oracle";

/// Default tolerance and budget used when the reference is `"oracle"`.
pub const ORACLE_REFERENCE_GAP: f64 = 1e-12;
pub const ORACLE_REFERENCE_ITERS: u64 = 1_000_000;

/// A scenario configuration file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScenarioConfig {
    /// Path of the network file, relative to the config file.
    pub network: String,
    pub protocol: ProtocolParams,
    pub stepper: StepperConfig,
    pub reductions: Vec<Reduction>,
    pub theta_grid: GridSpec,
    pub cap_grid: GridSpec,
    /// `"oracle"` or a flow-file path relative to the config file.
    pub reference: String,
    #[serde(default = "default_ad_cycle")]
    pub ad_cycle: usize,
    #[serde(default = "default_ad_tol")]
    pub ad_tol: f64,
}

fn default_ad_cycle() -> usize {
    2
}
fn default_ad_tol() -> f64 {
    DEFAULT_AD_TOL
}

pub fn load_scenario_config(path: &Path) -> Result<ScenarioConfig> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

impl ScenarioConfig {
    /// Resolves paths (relative to the config file's directory), loads the
    /// network and reference, and expands the grids.
    pub fn resolve(&self, config_path: &Path) -> Result<ScenarioSpec> {
        let base = config_path.parent().unwrap_or_else(|| Path::new("."));
        let network = load_network(&base.join(&self.network))?;
        let reference = if self.reference == ORACLE_REFERENCE {
            crate::analysis::solve_ue_oracle(&network, ORACLE_REFERENCE_GAP, ORACLE_REFERENCE_ITERS)?
                .flows
        } else {
            load_flow_state(&base.join(&self.reference), &network)?
        };
        let spec = ScenarioSpec {
            network,
            reductions: self.reductions.clone(),
            theta_grid: self.theta_grid.expand()?,
            cap_grid: self.cap_grid.expand()?,
            protocol: self.protocol.clone(),
            stepper: self.stepper.clone(),
            reference,
            ad_cycle: self.ad_cycle,
            ad_tol: self.ad_tol,
        };
        spec.validate()?;
        Ok(spec)
    }
}

/// Stable one-word-ish labels for termination verdicts in CSV outputs.
pub fn termination_label(t: &Termination) -> String {
    match t {
        Termination::Converged { .. } => "converged".to_string(),
        Termination::MaxDays => "max_days".to_string(),
        Termination::Cycle { period, .. } => format!("cycle:{period}"),
    }
}

/// Writes the trajectory CSV: one row per recorded day with columns
/// `day, f_<route>..., C_<route>..., v_<link>..., step_norm, rbap_value,
/// lyapunov_value`.
pub fn write_trajectory_csv(path: &Path, net: &Network, traj: &TrajectoryRecord) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| io_err(path, e))?;
    let mut header = vec!["day".to_string()];
    header.extend(net.routes().iter().map(|r| format!("f_{}", r.id)));
    header.extend(net.routes().iter().map(|r| format!("C_{}", r.id)));
    header.extend(net.links().iter().map(|l| format!("v_{}", l.id)));
    header.extend(
        ["step_norm", "rbap_value", "lyapunov_value"]
            .iter()
            .map(|s| s.to_string()),
    );
    w.write_record(&header).map_err(|e| io_err(path, e))?;
    for (state, diag) in traj.states.iter().zip(&traj.diagnostics) {
        let mut row = vec![state.day.to_string()];
        row.extend(state.flows.iter().map(|&x| format_sig(x)));
        row.extend(diag.route_costs.iter().map(|&x| format_sig(x)));
        row.extend(diag.link_flows.iter().map(|&x| format_sig(x)));
        row.push(format_sig(diag.step_norm));
        row.push(format_sig(diag.rbap_value));
        row.push(format_sig(diag.lyapunov_value));
        w.write_record(&row).map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

/// Summary of a single simulation run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunSummary {
    pub termination: String,
    pub days: u64,
    pub ad: f64,
    pub final_flows: BTreeMap<String, f64>,
    pub final_link_flows: BTreeMap<String, f64>,
}

impl RunSummary {
    pub fn build(
        net: &Network,
        traj: &TrajectoryRecord,
        ad: f64,
    ) -> Result<Self> {
        let last = traj.final_state();
        let v = net.link_flows(last)?;
        Ok(RunSummary {
            termination: termination_label(&traj.termination),
            days: last.day,
            ad: round_sig(ad),
            final_flows: net
                .routes()
                .iter()
                .zip(&last.flows)
                .map(|(r, &f)| (r.id.clone(), round_sig(f)))
                .collect(),
            final_link_flows: net
                .links()
                .iter()
                .zip(&v)
                .map(|(l, &f)| (l.id.clone(), round_sig(f)))
                .collect(),
        })
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).expect("value serializes");
    fs::write(path, text + "\n").map_err(|e| io_err(path, e))
}

/// Writes the sweep CSV: `theta, cap_link, cap_fraction, termination, days,
/// ad, phase, error`, one row per cell in grid order.
pub fn write_sweep_csv(path: &Path, table: &SweepTable) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| io_err(path, e))?;
    w.write_record([
        "theta",
        "cap_link",
        "cap_fraction",
        "termination",
        "days",
        "ad",
        "phase",
        "error",
    ])
    .map_err(|e| io_err(path, e))?;
    for outcome in &table.outcomes {
        let phase = table
            .phase_of(outcome.theta)
            .map(|p| p.to_string())
            .unwrap_or_default();
        let row = match &outcome.cell {
            Ok(cell) => [
                format_sig(cell.theta),
                cell.cap.link.clone(),
                format_sig(cell.cap.fraction),
                termination_label(&cell.termination),
                cell.days_to_converge
                    .map(|d| d.to_string())
                    .unwrap_or_default(),
                format_sig(cell.ad),
                phase,
                String::new(),
            ],
            Err(e) => [
                format_sig(outcome.theta),
                String::new(),
                format_sig(outcome.cap_fraction),
                String::new(),
                String::new(),
                String::new(),
                phase,
                e.clone(),
            ],
        };
        w.write_record(&row).map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

/// One sweep cell as emitted in the sweep summary JSON array.
#[derive(Debug, Clone, Serialize)]
pub struct SweepJsonRow {
    pub theta: f64,
    pub cap_link: String,
    pub cap_fraction: f64,
    pub termination: String,
    pub days: Option<u64>,
    pub ad: f64,
    pub phase: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Writes the sweep summary JSON: an array of cells in grid order.
pub fn write_sweep_json(path: &Path, table: &SweepTable) -> Result<()> {
    let rows: Vec<SweepJsonRow> = table
        .outcomes
        .iter()
        .map(|outcome| {
            let phase = table
                .phase_of(outcome.theta)
                .map(|p| p.to_string())
                .unwrap_or_default();
            match &outcome.cell {
                Ok(cell) => SweepJsonRow {
                    theta: round_sig(cell.theta),
                    cap_link: cell.cap.link.clone(),
                    cap_fraction: round_sig(cell.cap.fraction),
                    termination: termination_label(&cell.termination),
                    days: cell.days_to_converge,
                    ad: round_sig(cell.ad),
                    phase,
                    error: None,
                },
                Err(e) => SweepJsonRow {
                    theta: round_sig(outcome.theta),
                    cap_link: String::new(),
                    cap_fraction: round_sig(outcome.cap_fraction),
                    termination: String::new(),
                    days: None,
                    ad: f64::NAN,
                    phase,
                    error: Some(e.clone()),
                },
            }
        })
        .collect();
    write_json(path, &rows)
}

/// Writes the phase JSON (theta, formatted to 12 digits, mapped to label).
pub fn write_phase_json(path: &Path, phases: &[ThetaPhase]) -> Result<()> {
    let map: BTreeMap<String, String> = phases
        .iter()
        .map(|p| (format_sig(p.theta), p.phase.to_string()))
        .collect();
    write_json(path, &map)
}

/// Writes the phase CSV keyed by theta.
pub fn write_phase_csv(path: &Path, phases: &[ThetaPhase]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| io_err(path, e))?;
    w.write_record(["theta", "phase"]).map_err(|e| io_err(path, e))?;
    for p in phases {
        w.write_record([format_sig(p.theta), p.phase.to_string()])
            .map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

/// Rows parsed back from a sweep CSV, enough to re-derive phases.
#[derive(Debug, Clone)]
pub struct SweepCsvRow {
    pub theta: f64,
    pub cap_fraction: f64,
    pub ad: f64,
}

pub fn read_sweep_csv(path: &Path) -> Result<Vec<SweepCsvRow>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| io_err(path, e))?;
    let headers = r.headers().map_err(|e| io_err(path, e))?.clone();
    let col = |name: &str| -> Result<usize> {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Parse(format!("{}: missing column `{name}`", path.display())))
    };
    let (ti, ci, ai, ei) = (col("theta")?, col("cap_fraction")?, col("ad")?, col("error")?);
    let mut rows = Vec::new();
    for record in r.records() {
        let record = record.map_err(|e| io_err(path, e))?;
        if !record.get(ei).unwrap_or("").is_empty() {
            return Err(Error::IncompleteSweep(format!(
                "sweep csv contains a failed cell: {}",
                record.get(ei).unwrap_or("")
            )));
        }
        let parse = |i: usize, what: &str| -> Result<f64> {
            record
                .get(i)
                .unwrap_or("")
                .parse()
                .map_err(|e| Error::Parse(format!("{}: bad {what}: {e}", path.display())))
        };
        rows.push(SweepCsvRow {
            theta: parse(ti, "theta")?,
            cap_fraction: parse(ci, "cap_fraction")?,
            ad: parse(ai, "ad")?,
        });
    }
    Ok(rows)
}

/// The equilibrium report emitted by the `ue` command.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct UeReport {
    pub relative_gap: f64,
    pub iterations: u64,
    pub is_wardrop_ue: bool,
    pub min_costs: BTreeMap<String, f64>,
    pub path_flows: BTreeMap<String, f64>,
    pub link_flows: BTreeMap<String, f64>,
}

impl UeReport {
    pub fn build(net: &Network, sol: &UeSolution, epsilon: f64) -> Result<Self> {
        let check = crate::analysis::is_wardrop_ue(net, &sol.flows, epsilon)?;
        Ok(UeReport {
            relative_gap: sol.relative_gap,
            iterations: sol.iterations,
            is_wardrop_ue: check.is_ue,
            min_costs: net
                .od_pairs()
                .iter()
                .zip(&check.min_costs)
                .map(|(od, &c)| (od.id.clone(), round_sig(c)))
                .collect(),
            path_flows: net
                .routes()
                .iter()
                .zip(&sol.flows.flows)
                .map(|(r, &f)| (r.id.clone(), round_sig(f)))
                .collect(),
            link_flows: net
                .links()
                .iter()
                .zip(&sol.link_flows)
                .map(|(l, &f)| (l.id.clone(), round_sig(f)))
                .collect(),
        })
    }
}

/// Resolves the output directory: the flag if given, else the
/// `ROUTESWAP_OUT` environment variable, else the current directory.
pub fn resolve_out_dir(flag: Option<PathBuf>) -> PathBuf {
    flag.or_else(|| std::env::var_os("ROUTESWAP_OUT").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."))
}

/// Creates the directory (and parents) if needed.
pub fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))
}

/// Writes a violation report, one violation per line.
pub fn print_violations(
    mut out: impl Write,
    violations: &[crate::network::Violation],
) -> std::io::Result<()> {
    for v in violations {
        writeln!(out, "{v}")?;
    }
    Ok(())
}
