//! Command implementations behind the `routeswap` binary.
//!
//! Exit codes are a stable contract: 0 on success, 1 on a domain violation
//! (invalid network, infeasible flows, unreached tolerance), 2 on I/O or
//! parse failures.

use std::path::{Path, PathBuf};

use crate::analysis::{classify_phase, solve_ue_oracle, SweepCellResult};
use crate::analysis::CapDescriptor;
use crate::dynamics::Termination;
use crate::error::Error;
use crate::io::{
    self, load_network_data, load_scenario_config, read_sweep_csv, resolve_out_dir, write_json,
    write_phase_csv, write_phase_json, write_sweep_csv, write_trajectory_csv, RunSummary, UeReport,
};
use crate::network::{validate, Network};
use crate::scenarios::{run_sweep, run_trajectory_for_cell, Reduction};

pub const EXIT_OK: u8 = 0;
pub const EXIT_DOMAIN: u8 = 1;
pub const EXIT_IO: u8 = 2;

fn exit_code_for(err: &Error) -> u8 {
    if err.is_io_or_parse() {
        EXIT_IO
    } else {
        EXIT_DOMAIN
    }
}

fn fail(err: Error) -> u8 {
    eprintln!("error: {err}");
    exit_code_for(&err)
}

/// `validate <network.json>`: prints violations one per line; exit 0 iff
/// there are none.
pub fn cmd_validate(network_path: &Path) -> u8 {
    let data = match load_network_data(network_path) {
        Ok(d) => d,
        Err(e) => return fail(e),
    };
    let violations = validate(&data);
    if violations.is_empty() {
        println!("ok: {} is a valid network", network_path.display());
        EXIT_OK
    } else {
        let mut out = std::io::stderr().lock();
        let _ = io::print_violations(&mut out, &violations);
        EXIT_DOMAIN
    }
}

/// Options for `simulate`.
pub struct SimulateOpts {
    pub scenario: PathBuf,
    pub theta: Option<f64>,
    pub cap_link: Option<String>,
    pub cap_fraction: Option<f64>,
    pub out: Option<PathBuf>,
}

/// `simulate <scenario.json>`: runs one cell and writes `trajectory.csv`
/// plus `summary.json` into the output directory.
pub fn cmd_simulate(opts: &SimulateOpts) -> u8 {
    match simulate_inner(opts) {
        Ok(summary) => {
            println!(
                "{} after {} day(s), ad = {}",
                summary.termination,
                summary.days,
                io::format_sig(summary.ad)
            );
            EXIT_OK
        }
        Err(e) => fail(e),
    }
}

fn simulate_inner(opts: &SimulateOpts) -> crate::Result<RunSummary> {
    let config = load_scenario_config(&opts.scenario)?;
    let mut spec = config.resolve(&opts.scenario)?;

    if let Some(link) = &opts.cap_link {
        spec.reductions = vec![Reduction {
            link: link.clone(),
            fraction: opts.cap_fraction.unwrap_or(0.0),
            day: 0,
        }];
    }
    let theta = match opts.theta {
        Some(t) => {
            if !(t > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "--theta must be > 0, got {t}"
                )));
            }
            t
        }
        None => *spec.theta_grid.first().expect("validated nonempty"),
    };
    let cap = match opts.cap_fraction {
        Some(f) => f,
        None => spec.reductions[0].fraction,
    };

    let (cell, traj) = run_trajectory_for_cell(&spec, theta, cap)?;
    let out_dir = resolve_out_dir(opts.out.clone());
    io::ensure_dir(&out_dir)?;
    write_trajectory_csv(&out_dir.join("trajectory.csv"), &spec.network, &traj)?;
    let summary = RunSummary::build(&spec.network, &traj, cell.ad)?;
    write_json(&out_dir.join("summary.json"), &summary)?;
    Ok(summary)
}

/// Options for `sweep`.
pub struct SweepOpts {
    pub scenario: PathBuf,
    pub jobs: usize,
    pub out: Option<PathBuf>,
}

/// `sweep <scenario.json>`: runs the whole grid and writes `sweep.csv` plus
/// `phases.json`. Output is byte-identical at any `--jobs` level.
pub fn cmd_sweep(opts: &SweepOpts) -> u8 {
    match sweep_inner(opts) {
        Ok((cells, failures, out_dir)) => {
            println!(
                "{cells} cell(s), {failures} failure(s); wrote {}",
                out_dir.display()
            );
            if failures > 0 {
                EXIT_DOMAIN
            } else {
                EXIT_OK
            }
        }
        Err(e) => fail(e),
    }
}

fn sweep_inner(opts: &SweepOpts) -> crate::Result<(usize, usize, PathBuf)> {
    let config = load_scenario_config(&opts.scenario)?;
    let spec = config.resolve(&opts.scenario)?;
    let table = run_sweep(&spec, opts.jobs.max(1))?;
    let out_dir = resolve_out_dir(opts.out.clone());
    io::ensure_dir(&out_dir)?;
    write_sweep_csv(&out_dir.join("sweep.csv"), &table)?;
    io::write_sweep_json(&out_dir.join("sweep.json"), &table)?;
    write_phase_json(&out_dir.join("phases.json"), &table.phases)?;
    io::write_phase_csv(&out_dir.join("phases.csv"), &table.phases)?;
    let failures = table.outcomes.iter().filter(|o| o.cell.is_err()).count();
    Ok((table.outcomes.len(), failures, out_dir))
}

/// Options for `classify`.
pub struct ClassifyOpts {
    pub sweep_csv: PathBuf,
    pub ad_tol: f64,
    pub out: Option<PathBuf>,
}

/// `classify <sweep.csv>`: re-derives the phase table from a sweep CSV and
/// writes `phases.json` and `phases.csv`.
pub fn cmd_classify(opts: &ClassifyOpts) -> u8 {
    match classify_inner(opts) {
        Ok(phases) => {
            for p in &phases {
                println!("{} {}", io::format_sig(p.theta), p.phase);
            }
            EXIT_OK
        }
        Err(e) => fail(e),
    }
}

fn classify_inner(opts: &ClassifyOpts) -> crate::Result<Vec<crate::analysis::ThetaPhase>> {
    let rows = read_sweep_csv(&opts.sweep_csv)?;
    let cells: Vec<SweepCellResult> = rows
        .iter()
        .map(|r| SweepCellResult {
            theta: r.theta,
            cap: CapDescriptor {
                link: String::new(),
                fraction: r.cap_fraction,
            },
            termination: Termination::MaxDays,
            ad: r.ad,
            days_to_converge: None,
        })
        .collect();
    let phases = classify_phase(&cells, opts.ad_tol)?;
    let out_dir = resolve_out_dir(opts.out.clone());
    io::ensure_dir(&out_dir)?;
    write_phase_json(&out_dir.join("phases.json"), &phases)?;
    write_phase_csv(&out_dir.join("phases.csv"), &phases)?;
    Ok(phases)
}

/// Options for `ue`.
pub struct UeOpts {
    pub network: PathBuf,
    pub tol: f64,
    pub max_iters: u64,
    pub epsilon: f64,
    pub out: Option<PathBuf>,
}

impl Default for UeOpts {
    fn default() -> Self {
        UeOpts {
            network: PathBuf::new(),
            tol: 1e-10,
            max_iters: 200_000,
            epsilon: 1e-6,
            out: None,
        }
    }
}

/// `ue <network.json>`: solves the equilibrium and prints/writes the report.
/// Exit 1 with the achieved gap if the tolerance is not reached.
pub fn cmd_ue(opts: &UeOpts) -> u8 {
    let net = match io::load_network(&opts.network) {
        Ok(n) => n,
        Err(e) => return fail(e),
    };
    match ue_inner(&net, opts) {
        Ok(report) => {
            println!(
                "{}",
                serde_json::to_string_pretty(&report).expect("report serializes")
            );
            EXIT_OK
        }
        Err(e) => fail(e),
    }
}

fn ue_inner(net: &Network, opts: &UeOpts) -> crate::Result<UeReport> {
    let sol = solve_ue_oracle(net, opts.tol, opts.max_iters)?;
    let report = UeReport::build(net, &sol, opts.epsilon)?;
    if let Some(dir) = &opts.out {
        io::ensure_dir(dir)?;
        write_json(&dir.join("ue.json"), &report)?;
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::save_network;
    use crate::scenarios::build_example_network;

    #[test]
    fn validate_exit_codes() {
        let dir = tempfile::tempdir().unwrap();
        let good = dir.path().join("good.json");
        save_network(&good, build_example_network().data()).unwrap();
        assert_eq!(cmd_validate(&good), EXIT_OK);

        let mut broken = build_example_network().data().clone();
        broken.routes[0].links.push("missing".into());
        let bad = dir.path().join("bad.json");
        save_network(&bad, &broken).unwrap();
        assert_eq!(cmd_validate(&bad), EXIT_DOMAIN);

        let garbled = dir.path().join("garbled.json");
        std::fs::write(&garbled, "{not json").unwrap();
        assert_eq!(cmd_validate(&garbled), EXIT_IO);

        assert_eq!(cmd_validate(Path::new("/nonexistent/x.json")), EXIT_IO);
    }

    #[test]
    fn ue_on_example_network() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("net.json");
        save_network(&path, build_example_network().data()).unwrap();
        let opts = UeOpts {
            network: path,
            ..UeOpts::default()
        };
        assert_eq!(cmd_ue(&opts), EXIT_OK);
        // unreachable tolerance reports the achieved gap
        let opts = UeOpts {
            network: opts.network,
            tol: 1e-300,
            max_iters: 3,
            ..UeOpts::default()
        };
        assert_eq!(cmd_ue(&opts), EXIT_DOMAIN);
    }
}
