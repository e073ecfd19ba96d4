//! The traffic evolution equation and day-to-day trajectory execution.
//!
//! One day of evolution applies a [`SwapMatrix`] to a [`FlowState`]: each
//! route's flow changes by the total flow swapping onto it minus the total
//! flow swapping off it. The same update scaled by a substep `tau` gives a
//! fixed-step explicit Euler approximation of the continuous-time dynamics.
//!
//! [`run_trajectory`] iterates cost evaluation, swap-matrix construction and
//! stepping until the step norm falls below the convergence tolerance, a
//! cycle is detected, or the day budget runs out. Runs are strictly
//! sequential and deterministic: identical inputs produce bit-identical
//! records.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::{sorted_sum, FlowState, Network};
use crate::protocols::{swap_matrix, ProtocolParams, SwapMatrix};

/// Update mode: whole-day steps or scaled Euler substeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum StepMode {
    #[default]
    Discrete,
    Euler,
}

/// Trajectory execution settings.
///
/// In `euler` mode each iteration advances the clock by `euler_step` days;
/// `max_days` then counts substeps and the schedule maps substep `n` to
/// calendar day `floor(n * euler_step)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StepperConfig {
    pub max_days: u64,
    pub convergence_tol: f64,
    #[serde(default)]
    pub mode: StepMode,
    #[serde(default = "default_euler_step")]
    pub euler_step: f64,
    /// Sampling stride for recorded states (day 0 and the final window are
    /// always kept).
    #[serde(default = "default_record_every")]
    pub record_every: u64,
    /// How many trailing states are always retained.
    #[serde(default = "default_final_window")]
    pub final_window: usize,
    /// Largest cycle period the runner looks for.
    #[serde(default = "default_cycle_period_max")]
    pub cycle_period_max: usize,
    /// Max distance between states one period apart for a cycle to count.
    #[serde(default = "default_cycle_tol")]
    pub cycle_tol: f64,
    /// Days before cycle detection starts.
    #[serde(default = "default_cycle_burn_in")]
    pub cycle_burn_in: u64,
}

fn default_euler_step() -> f64 {
    1.0
}
fn default_record_every() -> u64 {
    1
}
fn default_final_window() -> usize {
    32
}
fn default_cycle_period_max() -> usize {
    8
}
fn default_cycle_tol() -> f64 {
    1e-6
}
fn default_cycle_burn_in() -> u64 {
    100
}

impl StepperConfig {
    /// Whole-day stepping with the given day budget and convergence norm.
    pub fn discrete(max_days: u64, convergence_tol: f64) -> Self {
        Self {
            max_days,
            convergence_tol,
            mode: StepMode::Discrete,
            euler_step: 1.0,
            record_every: 1,
            final_window: default_final_window(),
            cycle_period_max: default_cycle_period_max(),
            cycle_tol: default_cycle_tol(),
            cycle_burn_in: default_cycle_burn_in(),
        }
    }

    /// Euler substepping with step `tau`.
    pub fn euler(max_steps: u64, convergence_tol: f64, tau: f64) -> Self {
        Self {
            mode: StepMode::Euler,
            euler_step: tau,
            ..Self::discrete(max_steps, convergence_tol)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_days < 1 {
            return Err(Error::InvalidParameter("max_days must be >= 1".into()));
        }
        if !(self.convergence_tol > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "convergence_tol must be > 0, got {}",
                self.convergence_tol
            )));
        }
        if !(self.euler_step > 0.0 && self.euler_step <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "euler_step must lie in (0, 1], got {}",
                self.euler_step
            )));
        }
        if self.record_every == 0 {
            return Err(Error::InvalidParameter("record_every must be >= 1".into()));
        }
        if self.cycle_period_max == 0 {
            return Err(Error::InvalidParameter(
                "cycle_period_max must be >= 1".into(),
            ));
        }
        if self.final_window < 2 * self.cycle_period_max {
            return Err(Error::InvalidParameter(format!(
                "final_window {} is too small for cycle_period_max {}",
                self.final_window, self.cycle_period_max
            )));
        }
        Ok(())
    }
}

/// Which network provides day-t costs. Capacity-disruption scenarios swap in
/// a reduced-capacity network for particular days; all networks must share
/// the same topology and entity order.
#[derive(Clone, Copy)]
pub enum NetworkSchedule<'a> {
    Static(&'a Network),
    /// `overrides` replaces the normal network on exactly the listed days.
    WithOverrides {
        normal: &'a Network,
        overrides: &'a [(u64, &'a Network)],
    },
}

impl<'a> NetworkSchedule<'a> {
    pub fn normal(&self) -> &'a Network {
        match self {
            NetworkSchedule::Static(net) => net,
            NetworkSchedule::WithOverrides { normal, .. } => normal,
        }
    }

    pub fn for_day(&self, day: u64) -> &'a Network {
        match self {
            NetworkSchedule::Static(net) => net,
            NetworkSchedule::WithOverrides { normal, overrides } => overrides
                .iter()
                .find(|(d, _)| *d == day)
                .map(|(_, net)| *net)
                .unwrap_or(normal),
        }
    }
}

/// How a trajectory ended.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Termination {
    /// Step norm fell to `convergence_tol`; `day` stamps the first state
    /// that closed the gap.
    Converged { day: u64 },
    MaxDays,
    /// A repeating pattern of the given period (in steps) was found;
    /// `max_deviation` is the largest distance between states one period
    /// apart over the checked window.
    Cycle {
        period: usize,
        max_deviation: f64,
        detected_day: u64,
    },
}

impl Termination {
    pub fn is_converged(&self) -> bool {
        matches!(self, Termination::Converged { .. })
    }
}

/// Per-recorded-day diagnostics. `step_norm` and `rbap_value` describe the
/// step that produced this state (zero on the initial state): the step norm
/// is `||f^t - f^{t-1}||` and the descent value is `sum_k C_k^{t-1} * (f_k^t
/// - f_k^{t-1})` with the costs the step was built from.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DayDiagnostics {
    pub day: u64,
    pub route_costs: Vec<f64>,
    pub link_flows: Vec<f64>,
    pub step_norm: f64,
    pub rbap_value: f64,
    pub lyapunov_value: f64,
}

/// A day-indexed trajectory: recorded states, aligned diagnostics, and the
/// termination verdict.
#[derive(Debug, Clone)]
pub struct TrajectoryRecord {
    pub states: Vec<FlowState>,
    pub diagnostics: Vec<DayDiagnostics>,
    pub termination: Termination,
}

impl TrajectoryRecord {
    /// The last `n` recorded states, newest last.
    pub fn final_states(&self, n: usize) -> Result<&[FlowState]> {
        if self.states.len() < n {
            return Err(Error::WindowTooShort {
                needed: n,
                got: self.states.len(),
            });
        }
        Ok(&self.states[self.states.len() - n..])
    }

    pub fn final_state(&self) -> &FlowState {
        self.states.last().expect("trajectory records day 0")
    }
}

/// One whole-day step of the evolution equation:
/// `f'_k = f_k + sum_p f_p rho_pk - f_k sum_p rho_kp`.
///
/// Rejects over-swapping matrices (any row's total proportion above 1), which
/// would produce negative flows.
pub fn step_discrete(net: &Network, f: &FlowState, rho: &SwapMatrix) -> Result<FlowState> {
    step_euler(net, f, rho, 1.0)
}

/// One Euler substep: `f' = f + tau * (inflow - outflow)`.
///
/// With row sums at most 1 and `tau` in (0, 1], nonnegativity is preserved
/// exactly, including in floating point.
pub fn step_euler(net: &Network, f: &FlowState, rho: &SwapMatrix, tau: f64) -> Result<FlowState> {
    step_with_increments(net, f, rho, tau).map(|(state, _)| state)
}

/// Like [`step_euler`], but also returns the per-route increments
/// `tau * (inflow - outflow)` that were added to the flows. Weighting these
/// increments (rather than re-differencing the states) keeps derived
/// quantities free of flow-magnitude quantization noise when steps are tiny.
pub fn step_with_increments(
    net: &Network,
    f: &FlowState,
    rho: &SwapMatrix,
    tau: f64,
) -> Result<(FlowState, Vec<f64>)> {
    if !(tau > 0.0 && tau <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "tau must lie in (0, 1], got {tau}"
        )));
    }
    if f.flows.len() != net.num_routes() {
        return Err(Error::DimensionMismatch {
            what: "route flows",
            expected: net.num_routes(),
            got: f.flows.len(),
        });
    }
    for block in rho.blocks() {
        if let Some(&k) = block.over_swapping_rows.first() {
            return Err(Error::OverSwapping {
                route: net.routes()[block.members[k]].id.clone(),
                row_sum: block.row_sum(k),
            });
        }
    }

    let mut next = f.flows.clone();
    let mut increments = vec![0.0; f.flows.len()];
    let mut terms: Vec<f64> = Vec::new();
    for block in rho.blocks() {
        let m = block.len();
        for lk in 0..m {
            let k = block.members[lk];
            // inflow: sum over donors p of f_p * rho_pk, order-canonical
            terms.clear();
            for lp in 0..m {
                let r = block.rate(lp, lk);
                if r != 0.0 {
                    terms.push(f.flows[block.members[lp]] * r);
                }
            }
            let inflow = sorted_sum(&mut terms);
            let outflow = f.flows[k] * block.row_sum(lk);
            let delta = tau * (inflow - outflow);
            increments[k] = delta;
            next[k] = f.flows[k] + delta;
        }
    }
    Ok((FlowState::new(next, f.day + 1), increments))
}

/// Euclidean norm of the flow difference between two states.
pub fn step_norm(a: &FlowState, b: &FlowState) -> f64 {
    a.distance(b)
}

/// Searches a window of states for the smallest period `L <=
/// period_max` such that every state in the trailing stretch is within `tol`
/// of the state `L` samples earlier. Checks up to `2L` trailing pairs.
///
/// Errors if the window holds fewer than `2 * period_max` states.
pub fn detect_cycle(window: &[FlowState], period_max: usize, tol: f64) -> Result<Option<CycleInfo>> {
    if window.len() < 2 * period_max {
        return Err(Error::WindowTooShort {
            needed: 2 * period_max,
            got: window.len(),
        });
    }
    let n = window.len();
    'candidate: for period in 1..=period_max {
        let pairs = (2 * period).min(n - period);
        let mut max_dev: f64 = 0.0;
        for t in (n - pairs)..n {
            let dev = window[t].distance(&window[t - period]);
            if dev > tol {
                continue 'candidate;
            }
            max_dev = max_dev.max(dev);
        }
        return Ok(Some(CycleInfo {
            period,
            max_deviation: max_dev,
        }));
    }
    Ok(None)
}

/// A detected cycle: its period in steps and the worst deviation seen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CycleInfo {
    pub period: usize,
    pub max_deviation: f64,
}

/// Classifies the terminal window of a budget-exhausted trajectory as a
/// (quasi-)periodic oscillation, if it is one.
///
/// A trajectory that keeps moving for the whole budget may still be tightly
/// organized around a short cycle without ever locking onto it exactly.
/// This passes the trailing window to [`detect_cycle`] with a tolerance of a
/// quarter of the mean per-step movement, after two guards: every step in
/// the window must exceed `cfg.cycle_tol` (genuine movement) and the
/// smallest step must be at least half the largest (sustained, not
/// decaying). The reported `max_deviation` states how tight the recurrence
/// actually is; exact cycles report ~0, quasi-oscillations report a visible
/// fraction of their amplitude.
pub fn terminal_cycle(traj: &TrajectoryRecord, cfg: &StepperConfig) -> Option<CycleInfo> {
    let n = traj.states.len();
    let w = cfg.final_window.min(n);
    if w < 2 * cfg.cycle_period_max + 1 {
        return None;
    }
    let window = &traj.states[n - w..];
    // windows must be contiguous days for the step statistics to mean anything
    if window.windows(2).any(|p| p[1].day != p[0].day + 1) {
        return None;
    }
    let moves: Vec<f64> = window.windows(2).map(|p| p[0].distance(&p[1])).collect();
    let min = moves.iter().cloned().fold(f64::MAX, f64::min);
    let max = moves.iter().cloned().fold(f64::MIN, f64::max);
    let mean = moves.iter().sum::<f64>() / moves.len() as f64;
    if min <= cfg.cycle_tol || min < 0.5 * max {
        return None;
    }
    detect_cycle(window, cfg.cycle_period_max, 0.25 * mean)
        .ok()
        .flatten()
}

/// Runs the full day-to-day trajectory on a single fixed network.
pub fn run_trajectory(
    net: &Network,
    f0: &FlowState,
    params: &ProtocolParams,
    cfg: &StepperConfig,
) -> Result<TrajectoryRecord> {
    run_trajectory_scheduled(NetworkSchedule::Static(net), f0, params, cfg)
}

/// Runs the full trajectory with per-day network overrides (capacity
/// disruptions).
///
/// Iterates: evaluate previous-day costs, build the swap matrix, step.
/// Terminates when the step norm reaches `convergence_tol`, when a cycle is
/// detected (only while steps stay larger than `cycle_tol`, so slow
/// convergence is never misread as a period-1 cycle), or at the day budget.
pub fn run_trajectory_scheduled(
    schedule: NetworkSchedule<'_>,
    f0: &FlowState,
    params: &ProtocolParams,
    cfg: &StepperConfig,
) -> Result<TrajectoryRecord> {
    cfg.validate()?;
    let normal = schedule.normal();
    params.validate(normal)?;
    normal.check_feasible(f0)?;

    let tau = match cfg.mode {
        StepMode::Discrete => 1.0,
        StepMode::Euler => cfg.euler_step,
    };
    let start_day = f0.day;
    let last_day = start_day + cfg.max_days;

    // Strided records plus a ring of the trailing `final_window` states.
    let mut recorded: BTreeMap<u64, (FlowState, DayDiagnostics)> = BTreeMap::new();
    let mut ring: Vec<(FlowState, DayDiagnostics)> = Vec::with_capacity(cfg.final_window + 1);

    let mut f = f0.clone();
    let mut prev_norm = 0.0;
    let mut prev_rbap = 0.0;
    let mut converged = false;
    let mut cycle_hit: Option<CycleInfo> = None;

    let termination = loop {
        let t = f.day;
        let calendar_day = match cfg.mode {
            StepMode::Discrete => t,
            StepMode::Euler => ((t - start_day) as f64 * tau).floor() as u64 + start_day,
        };
        let net_t = schedule.for_day(calendar_day);
        let (v, _c, costs) = net_t.costs_at(&f)?;
        let lyapunov = net_t.beckmann_potential(&v)?;
        let diag = DayDiagnostics {
            day: t,
            route_costs: costs.clone(),
            link_flows: v,
            step_norm: prev_norm,
            rbap_value: prev_rbap,
            lyapunov_value: lyapunov,
        };

        if (t - start_day).is_multiple_of(cfg.record_every) {
            recorded.insert(t, (f.clone(), diag.clone()));
        }
        ring.push((f.clone(), diag));
        if ring.len() > cfg.final_window {
            ring.remove(0);
        }

        if converged {
            break Termination::Converged { day: t };
        }
        if let Some(info) = cycle_hit.take() {
            break Termination::Cycle {
                period: info.period,
                max_deviation: info.max_deviation,
                detected_day: t,
            };
        }
        if t >= last_day {
            break Termination::MaxDays;
        }

        let rho = swap_matrix(net_t, &costs, params)?;
        let (f_next, increments) = step_with_increments(net_t, &f, &rho, tau)?;
        debug_assert!(normal.check_feasible(&f_next).is_ok());
        prev_norm = step_norm(&f_next, &f);
        prev_rbap = costs
            .iter()
            .zip(&increments)
            .map(|(c, delta)| c * delta)
            .sum();

        if prev_norm <= cfg.convergence_tol {
            converged = true;
        } else if t + 1 >= start_day + cfg.cycle_burn_in
            && ring.len() >= 2 * cfg.cycle_period_max
        {
            // Look for an oscillation over the trailing window plus the new
            // state. Require genuine movement: every consecutive step in the
            // examined stretch must exceed cycle_tol, otherwise this is just
            // slow convergence.
            let mut window: Vec<FlowState> =
                ring.iter().map(|(state, _)| state.clone()).collect();
            window.push(f_next.clone());
            if let Some(info) = detect_cycle(&window, cfg.cycle_period_max, cfg.cycle_tol)? {
                let span = (2 * info.period).min(window.len() - 1);
                let tail = &window[window.len() - 1 - span..];
                let moving = tail
                    .windows(2)
                    .all(|pair| pair[0].distance(&pair[1]) > cfg.cycle_tol);
                if moving {
                    cycle_hit = Some(info);
                }
            }
        }
        f = f_next;
    };

    for (state, diag) in ring {
        recorded.entry(state.day).or_insert((state, diag));
    }
    let mut states = Vec::with_capacity(recorded.len());
    let mut diagnostics = Vec::with_capacity(recorded.len());
    for (_, (state, diag)) in recorded {
        states.push(state);
        diagnostics.push(diag);
    }

    Ok(TrajectoryRecord {
        states,
        diagnostics,
        termination,
    })
}
