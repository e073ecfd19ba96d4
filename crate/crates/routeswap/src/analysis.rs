//! Equilibrium and stability analytics: Wardrop test, Lyapunov potential,
//! oscillation index, phase classification, and an independent user
//! equilibrium solver used as ground truth for the dynamics.

use serde::{Deserialize, Serialize};

use crate::dynamics::{Termination, TrajectoryRecord};
use crate::error::{Error, Result};
use crate::network::{FlowState, Network};

/// Flows below this are treated as unused when testing Wardrop's condition.
pub const FLOW_FLOOR: f64 = 1e-9;

/// Default tolerance separating "returned to equilibrium" from "oscillating"
/// when classifying sweep cells.
pub const DEFAULT_AD_TOL: f64 = 1e-6;

/// Verdict of the user-equilibrium test plus the per-OD minimum costs.
#[derive(Debug, Clone)]
pub struct UeCheck {
    pub is_ue: bool,
    /// Minimum route cost per OD pair, indexed like `Network::od_pairs()`.
    pub min_costs: Vec<f64>,
}

/// Tests Wardrop's first principle at a flow state: every used route of an
/// OD pair costs no more than the OD minimum plus `epsilon`.
pub fn is_wardrop_ue(net: &Network, f: &FlowState, epsilon: f64) -> Result<UeCheck> {
    let (_v, _c, costs) = net.costs_at(f)?;
    let mut min_costs = Vec::with_capacity(net.num_od_pairs());
    let mut is_ue = true;
    for w in 0..net.num_od_pairs() {
        let routes = net.routes_of_od(w);
        let pi = routes
            .iter()
            .map(|&k| costs[k])
            .fold(f64::INFINITY, f64::min);
        min_costs.push(pi);
        for &k in routes {
            if f.flows[k] > FLOW_FLOOR && costs[k] > pi + epsilon {
                is_ue = false;
            }
        }
    }
    Ok(UeCheck { is_ue, min_costs })
}

/// The Beckmann potential at a flow state: per link, the integral of the BPR
/// cost from zero to the link flow, summed over links. Nonnegative, zero iff
/// all link flows are zero, and nonincreasing along continuous-time
/// trajectories of the nonlinear protocol.
pub fn lyapunov_value(net: &Network, f: &FlowState) -> Result<f64> {
    let v = net.link_flows(f)?;
    net.beckmann_potential(&v)
}

/// The descent value of one step: `sum_k C_k^t * (f_k^{next} - f_k^t)` with
/// the costs the step was built from. Nonpositive for every nonlinear
/// protocol step.
pub fn rbap_descent_value(costs: &[f64], f_t: &FlowState, f_next: &FlowState) -> Result<f64> {
    if f_t.flows.len() != costs.len() || f_next.flows.len() != costs.len() {
        return Err(Error::DimensionMismatch {
            what: "route costs vs flows",
            expected: costs.len(),
            got: f_t.flows.len().max(f_next.flows.len()),
        });
    }
    Ok(costs
        .iter()
        .zip(f_next.flows.iter().zip(&f_t.flows))
        .map(|(c, (next, cur))| c * (next - cur))
        .sum())
}

/// Average deviation of the trajectory's terminal cycle from a reference
/// state: the mean, over the last `cycle` recorded states, of the Euclidean
/// distance to `reference`. Zero iff the trajectory ended on the reference.
pub fn ad_index(traj: &TrajectoryRecord, reference: &FlowState, cycle: usize) -> Result<f64> {
    if cycle == 0 {
        return Err(Error::InvalidParameter("cycle must be >= 1".into()));
    }
    let tail = traj.final_states(cycle)?;
    let total: f64 = tail.iter().map(|s| s.distance(reference)).sum();
    Ok(total / cycle as f64)
}

/// Terminal-behavior class of one reaction-sensitivity value across the
/// whole capacity-reduction grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum PhaseLabel {
    /// Every capacity reduction returned to equilibrium.
    Stable,
    /// Mixed outcomes across capacity reductions.
    MetaStable,
    /// Every capacity reduction ended oscillating.
    Unstable,
}

impl std::fmt::Display for PhaseLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            PhaseLabel::Stable => "STABLE",
            PhaseLabel::MetaStable => "META_STABLE",
            PhaseLabel::Unstable => "UNSTABLE",
        };
        f.write_str(s)
    }
}

/// Capacity-reduction descriptor of a sweep cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapDescriptor {
    pub link: String,
    pub fraction: f64,
}

/// Outcome of one (theta, capacity-reduction) sweep cell.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepCellResult {
    pub theta: f64,
    pub cap: CapDescriptor,
    pub termination: Termination,
    /// Average deviation of the terminal cycle from the reference state.
    pub ad: f64,
    pub days_to_converge: Option<u64>,
}

/// Phase of one theta value.
#[derive(Debug, Clone, Serialize)]
pub struct ThetaPhase {
    pub theta: f64,
    pub phase: PhaseLabel,
}

/// Classifies each theta group of a completed sweep. Every theta must cover
/// the same set of capacity fractions, otherwise the group is rejected as
/// incomplete.
pub fn classify_phase(cells: &[SweepCellResult], ad_tol: f64) -> Result<Vec<ThetaPhase>> {
    if cells.is_empty() {
        return Ok(Vec::new());
    }
    let mut thetas: Vec<f64> = Vec::new();
    for cell in cells {
        if !thetas.iter().any(|t| t.to_bits() == cell.theta.to_bits()) {
            thetas.push(cell.theta);
        }
    }
    thetas.sort_by(f64::total_cmp);

    let mut all_fractions: Vec<u64> = cells.iter().map(|c| c.cap.fraction.to_bits()).collect();
    all_fractions.sort_unstable();
    all_fractions.dedup();

    let mut out = Vec::with_capacity(thetas.len());
    for &theta in &thetas {
        let group: Vec<&SweepCellResult> = cells
            .iter()
            .filter(|c| c.theta.to_bits() == theta.to_bits())
            .collect();
        let mut fractions: Vec<u64> = group.iter().map(|c| c.cap.fraction.to_bits()).collect();
        fractions.sort_unstable();
        fractions.dedup();
        if fractions != all_fractions {
            return Err(Error::IncompleteSweep(format!(
                "theta {theta} covers {} capacity reductions, expected {}",
                fractions.len(),
                all_fractions.len()
            )));
        }
        let converged = group.iter().filter(|c| c.ad <= ad_tol).count();
        let phase = if converged == group.len() {
            PhaseLabel::Stable
        } else if converged == 0 {
            PhaseLabel::Unstable
        } else {
            PhaseLabel::MetaStable
        };
        out.push(ThetaPhase { theta, phase });
    }
    Ok(out)
}

/// A solved user equilibrium: path flows, the induced link flows, and the
/// achieved relative gap.
#[derive(Debug, Clone)]
pub struct UeSolution {
    pub flows: FlowState,
    pub link_flows: Vec<f64>,
    pub relative_gap: f64,
    pub iterations: u64,
}

/// Solves the user equilibrium over the explicit route sets by minimizing
/// the Beckmann potential with vertex-exchange descent: the iterate stays a
/// convex combination of single-route assignments, and each pass moves flow
/// from the costliest used route of an OD pair onto its cheapest route, with
/// an exact line search on the potential.
///
/// Stops when the relative gap `(total cost - shortest-route cost) /
/// shortest-route cost` reaches `rel_gap_tol`. If `max_iters` passes are
/// exhausted first, the achieved gap is reported in the error.
pub fn solve_ue_oracle(net: &Network, rel_gap_tol: f64, max_iters: u64) -> Result<UeSolution> {
    if !(rel_gap_tol > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "rel_gap_tol must be > 0, got {rel_gap_tol}"
        )));
    }
    // Start from an equal split per OD pair: feasible and symmetric.
    let mut flows = vec![0.0; net.num_routes()];
    for w in 0..net.num_od_pairs() {
        let routes = net.routes_of_od(w);
        let share = net.od_pairs()[w].demand / routes.len() as f64;
        for &k in routes {
            flows[k] = share;
        }
    }

    let mut gap = f64::INFINITY;
    for iter in 0..max_iters {
        let state = FlowState::new(flows.clone(), 0);
        let (v, c, costs) = net.costs_at(&state)?;
        gap = relative_gap(net, &v, &c, &costs);
        if gap <= rel_gap_tol {
            return Ok(UeSolution {
                flows: FlowState::new(flows, 0),
                link_flows: v,
                relative_gap: gap,
                iterations: iter,
            });
        }
        for w in 0..net.num_od_pairs() {
            pairwise_descent_pass(net, &mut flows, w)?;
        }
    }

    Err(Error::UeNotConverged {
        iterations: max_iters,
        achieved_gap: gap,
        target_gap: rel_gap_tol,
    })
}

/// `(sum_a c_a v_a - sum_w d_w pi_w) / sum_w d_w pi_w`: how far total travel
/// cost sits above the all-shortest-routes lower bound.
fn relative_gap(net: &Network, v: &[f64], c: &[f64], costs: &[f64]) -> f64 {
    let total: f64 = c.iter().zip(v).map(|(c, v)| c * v).sum();
    let mut best = 0.0;
    for w in 0..net.num_od_pairs() {
        let pi = net
            .routes_of_od(w)
            .iter()
            .map(|&k| costs[k])
            .fold(f64::INFINITY, f64::min);
        best += net.od_pairs()[w].demand * pi;
    }
    if best <= 0.0 {
        // Degenerate zero-demand network: already optimal.
        return 0.0;
    }
    (total - best) / best
}

/// Moves flow within one OD pair from its costliest used route to its
/// cheapest route, choosing the amount by bisection on the cost difference
/// (the derivative of the Beckmann potential along the exchange direction).
fn pairwise_descent_pass(net: &Network, flows: &mut [f64], w: usize) -> Result<()> {
    let routes = net.routes_of_od(w);
    if routes.len() < 2 {
        return Ok(());
    }
    let state = FlowState::new(flows.to_vec(), 0);
    let (_v, _c, costs) = net.costs_at(&state)?;

    let best = *routes
        .iter()
        .min_by(|&&a, &&b| costs[a].total_cmp(&costs[b]))
        .expect("nonempty");
    let worst = *routes
        .iter()
        .filter(|&&k| flows[k] > 0.0)
        .max_by(|&&a, &&b| costs[a].total_cmp(&costs[b]))
        .expect("demand-conserving flows have a used route");
    if best == worst || costs[worst] - costs[best] <= 0.0 {
        return Ok(());
    }

    // Cost difference after moving `m` units from worst to best; strictly
    // increasing in m because BPR costs are nondecreasing in flow.
    let diff_after = |m: f64, flows: &[f64]| -> Result<f64> {
        let mut trial = flows.to_vec();
        trial[worst] -= m;
        trial[best] += m;
        let (_v, _c, costs) = net.costs_at(&FlowState::new(trial, 0))?;
        Ok(costs[best] - costs[worst])
    };

    let cap = flows[worst];
    let m = if diff_after(cap, flows)? <= 0.0 {
        // Even moving everything keeps the target no costlier: drop the route.
        cap
    } else {
        let (mut lo, mut hi) = (0.0, cap);
        for _ in 0..90 {
            let mid = 0.5 * (lo + hi);
            if diff_after(mid, flows)? <= 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    };
    flows[worst] -= m;
    flows[best] += m;
    Ok(())
}
