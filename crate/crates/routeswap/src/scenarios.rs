//! The experiment harness: a bundled 17-link example network, one-day
//! capacity reductions, and (theta, reduction) grid sweeps.
//!
//! The example network has 12 nodes, 17 links, two OD pairs of demand 90
//! pcu/min and four three-link routes each. Link parameters are symmetric
//! under the involution that maps route i to route 9-i (links 1<->4, 2<->3,
//! 5<->8, 6<->7, 9<->13, 10<->12, 14<->17, 15<->16, link 11 fixed), so any
//! reduction on the shared link 11 preserves the mirror symmetry of the
//! whole system while a reduction on link 9 breaks it.

use rayon::prelude::*;

use crate::analysis::{ad_index, classify_phase, CapDescriptor, SweepCellResult, ThetaPhase};
use crate::analysis::{solve_ue_oracle, UeSolution, DEFAULT_AD_TOL};
use crate::dynamics::{
    run_trajectory_scheduled, terminal_cycle, NetworkSchedule, StepperConfig, Termination,
    TrajectoryRecord,
};
use crate::error::{Error, Result};
use crate::network::{FlowState, Link, Network, NetworkData, OdPair, Route};
use crate::protocols::{ProtocolParams, Theta};

/// (id, free-flow time min, capacity pcu/min) for the 17 example links.
///
/// Calibrated so that the balanced pattern (20, 20, 25, 25 | 25, 25, 20, 20)
/// loads every link exactly at capacity, where all four route costs of each
/// OD pair meet at 20.125 min: the free-flow times satisfy t9 + t14 = t5 +
/// t10, t1 + t5 = t2 + t6 and t6 + t10 = t11 + t15.
const EXAMPLE_LINKS: [(&str, f64, f64); 17] = [
    ("1", 4.0, 40.0),
    ("2", 3.5, 50.0),
    ("3", 3.5, 50.0),
    ("4", 4.0, 40.0),
    ("5", 5.5, 20.0),
    ("6", 6.0, 25.0),
    ("7", 6.0, 25.0),
    ("8", 5.5, 20.0),
    ("9", 6.5, 20.0),
    ("10", 8.0, 45.0),
    ("11", 6.5, 50.0),
    ("12", 8.0, 45.0),
    ("13", 6.5, 20.0),
    ("14", 7.0, 20.0),
    ("15", 7.5, 25.0),
    ("16", 7.5, 25.0),
    ("17", 7.0, 20.0),
];

/// (id, OD pair, links) for the 8 example routes.
const EXAMPLE_ROUTES: [(&str, &str, [&str; 3]); 8] = [
    ("1", "1-11", ["1", "9", "14"]),
    ("2", "1-11", ["1", "5", "10"]),
    ("3", "1-11", ["2", "6", "10"]),
    ("4", "1-11", ["2", "11", "15"]),
    ("5", "2-12", ["3", "11", "16"]),
    ("6", "2-12", ["3", "7", "12"]),
    ("7", "2-12", ["4", "8", "12"]),
    ("8", "2-12", ["4", "13", "17"]),
];

const EXAMPLE_DEMAND: f64 = 90.0;

/// Reference user equilibrium of the example network, cross-checked against
/// [`solve_example_reference`] (relative gap below 1e-14). By calibration
/// the equilibrium is the balanced pattern that loads every link exactly at
/// capacity: all eight route costs equal 20.125 min bitwise, the swap matrix
/// is identically zero there, and the dynamics hold the state exactly.
const EXAMPLE_REFERENCE_FLOWS: [f64; 8] = [20.0, 20.0, 25.0, 25.0, 25.0, 25.0, 20.0, 20.0];

/// Builds the bundled example network.
pub fn build_example_network() -> Network {
    let data = NetworkData {
        links: EXAMPLE_LINKS
            .iter()
            .map(|&(id, t, cap)| Link {
                id: id.to_string(),
                free_flow_time: t,
                capacity: cap,
            })
            .collect(),
        od_pairs: vec![
            OdPair {
                id: "1-11".into(),
                origin: "1".into(),
                destination: "11".into(),
                demand: EXAMPLE_DEMAND,
            },
            OdPair {
                id: "2-12".into(),
                origin: "2".into(),
                destination: "12".into(),
                demand: EXAMPLE_DEMAND,
            },
        ],
        routes: EXAMPLE_ROUTES
            .iter()
            .map(|&(id, od, links)| Route {
                id: id.to_string(),
                od_pair: od.to_string(),
                links: links.iter().map(|l| l.to_string()).collect(),
            })
            .collect(),
    };
    Network::from_data(data).expect("the bundled example network is well-formed")
}

/// The frozen reference equilibrium of the example network, day 0.
pub fn example_reference_ue() -> FlowState {
    FlowState::new(EXAMPLE_REFERENCE_FLOWS.to_vec(), 0)
}

/// Recomputes the example network's equilibrium with the independent solver
/// (this is how the frozen reference was produced).
pub fn solve_example_reference(rel_gap_tol: f64) -> Result<UeSolution> {
    solve_ue_oracle(&build_example_network(), rel_gap_tol, 2_000_000)
}

/// A one-day capacity reduction: on `day`, the capacity of `link` is scaled
/// by `1 - fraction` for cost evaluation; all other days use normal
/// capacities.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct Reduction {
    pub link: String,
    pub fraction: f64,
    #[serde(default)]
    pub day: u64,
}

/// Returns a copy of the network with one link's capacity scaled by
/// `1 - fraction`. Reductions compose multiplicatively.
pub fn apply_reduction(net: &Network, link: &str, fraction: f64) -> Result<Network> {
    if !(0.0..1.0).contains(&fraction) {
        return Err(Error::InvalidParameter(format!(
            "reduction fraction must lie in [0, 1), got {fraction}"
        )));
    }
    let idx = net
        .link_position(link)
        .ok_or_else(|| Error::UnknownLink(link.to_string()))?;
    let mut data = net.data().clone();
    data.links[idx].capacity *= 1.0 - fraction;
    Network::from_data(data)
}

/// A sweep experiment: the network, its reference equilibrium, a reduction
/// template, the (theta, fraction) grids, and protocol/stepper settings.
#[derive(Debug, Clone)]
pub struct ScenarioSpec {
    pub network: Network,
    /// Reduction template; sweeps substitute each grid fraction into every
    /// entry.
    pub reductions: Vec<Reduction>,
    pub theta_grid: Vec<f64>,
    pub cap_grid: Vec<f64>,
    pub protocol: ProtocolParams,
    pub stepper: StepperConfig,
    /// Deviation reference, normally the pre-disruption equilibrium.
    pub reference: FlowState,
    /// Number of terminal states averaged by the deviation index.
    pub ad_cycle: usize,
    /// Converged/oscillating threshold used for phase classification.
    pub ad_tol: f64,
}

impl ScenarioSpec {
    /// A spec for the bundled example network with its frozen reference.
    pub fn example(
        reductions: Vec<Reduction>,
        theta_grid: Vec<f64>,
        cap_grid: Vec<f64>,
        stepper: StepperConfig,
    ) -> Self {
        Self {
            network: build_example_network(),
            reductions,
            theta_grid,
            cap_grid,
            protocol: ProtocolParams::npsd(0.1),
            stepper,
            reference: example_reference_ue(),
            ad_cycle: 2,
            ad_tol: DEFAULT_AD_TOL,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.stepper.validate()?;
        if self.reductions.is_empty() {
            return Err(Error::InvalidParameter(
                "a scenario needs at least one reduction entry".into(),
            ));
        }
        for r in &self.reductions {
            if self.network.link_position(&r.link).is_none() {
                return Err(Error::UnknownLink(r.link.clone()));
            }
            if !(0.0..1.0).contains(&r.fraction) {
                return Err(Error::InvalidParameter(format!(
                    "reduction fraction must lie in [0, 1), got {}",
                    r.fraction
                )));
            }
        }
        for (name, grid) in [("theta_grid", &self.theta_grid), ("cap_grid", &self.cap_grid)] {
            if grid.is_empty() {
                return Err(Error::InvalidParameter(format!("{name} is empty")));
            }
            if !grid.windows(2).all(|w| w[0] < w[1]) {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be strictly increasing"
                )));
            }
        }
        for f in &self.cap_grid {
            if !(0.0..1.0).contains(f) {
                return Err(Error::InvalidParameter(format!(
                    "cap grid fraction must lie in [0, 1), got {f}"
                )));
            }
        }
        if self.ad_cycle == 0 {
            return Err(Error::InvalidParameter("ad_cycle must be >= 1".into()));
        }
        self.network.check_feasible(&self.reference)?;
        Ok(())
    }

    fn protocol_for_theta(&self, theta: f64) -> ProtocolParams {
        match &self.protocol {
            ProtocolParams::Npsd { cost_epsilon, .. } => ProtocolParams::Npsd {
                theta: Theta::Uniform(theta),
                cost_epsilon: *cost_epsilon,
            },
            other => other.clone(),
        }
    }

    fn cap_descriptor(&self, fraction: f64) -> CapDescriptor {
        let link = self
            .reductions
            .iter()
            .map(|r| r.link.as_str())
            .collect::<Vec<_>>()
            .join("+");
        CapDescriptor { link, fraction }
    }
}

/// Runs one sweep cell: starting from the reference equilibrium, applies the
/// reduction template at fraction `cap`, evolves the dynamics, and measures
/// the terminal deviation from the reference.
pub fn run_scenario(spec: &ScenarioSpec, theta: f64, cap: f64) -> Result<SweepCellResult> {
    run_trajectory_for_cell(spec, theta, cap).map(|(cell, _)| cell)
}

/// Like [`run_scenario`], but also returns the full trajectory record (for
/// CSV emission).
pub fn run_trajectory_for_cell(
    spec: &ScenarioSpec,
    theta: f64,
    cap: f64,
) -> Result<(SweepCellResult, TrajectoryRecord)> {
    spec.validate()?;
    if !(0.0..1.0).contains(&cap) {
        return Err(Error::InvalidParameter(format!(
            "cap fraction must lie in [0, 1), got {cap}"
        )));
    }

    // One reduced network per distinct disruption day; same-day reductions
    // compose.
    let mut days: Vec<u64> = spec.reductions.iter().map(|r| r.day).collect();
    days.sort_unstable();
    days.dedup();
    let mut reduced: Vec<(u64, Network)> = Vec::with_capacity(days.len());
    for &day in &days {
        let mut net = spec.network.clone();
        for r in spec.reductions.iter().filter(|r| r.day == day) {
            net = apply_reduction(&net, &r.link, cap)?;
        }
        reduced.push((day, net));
    }
    let overrides: Vec<(u64, &Network)> = reduced.iter().map(|(d, n)| (*d, n)).collect();
    let schedule = NetworkSchedule::WithOverrides {
        normal: &spec.network,
        overrides: &overrides,
    };

    let protocol = spec.protocol_for_theta(theta);
    let f0 = spec.reference.at_day(0);
    let traj = run_trajectory_scheduled(schedule, &f0, &protocol, &spec.stepper)?;
    let ad = ad_index(&traj, &spec.reference, spec.ad_cycle)?;
    let days_to_converge = match traj.termination {
        Termination::Converged { day } => Some(day),
        _ => None,
    };
    // A run that spends the whole budget may still be a tight
    // quasi-oscillation; report it as the cycle it behaves like.
    let termination = match &traj.termination {
        Termination::MaxDays => match terminal_cycle(&traj, &spec.stepper) {
            Some(info) => Termination::Cycle {
                period: info.period,
                max_deviation: info.max_deviation,
                detected_day: traj.final_state().day,
            },
            None => Termination::MaxDays,
        },
        other => other.clone(),
    };
    let cell = SweepCellResult {
        theta,
        cap: spec.cap_descriptor(cap),
        termination,
        ad,
        days_to_converge,
    };
    Ok((cell, traj))
}

/// One grid cell of a sweep: the requested coordinates plus either the cell
/// result or the error that stopped it.
#[derive(Debug, Clone)]
pub struct SweepOutcome {
    pub theta: f64,
    pub cap_fraction: f64,
    pub cell: std::result::Result<SweepCellResult, String>,
}

/// A completed sweep, cells in (theta, cap) grid order.
#[derive(Debug, Clone)]
pub struct SweepTable {
    pub outcomes: Vec<SweepOutcome>,
    pub phases: Vec<ThetaPhase>,
    /// Why phases could not be classified, if they could not.
    pub phase_error: Option<String>,
}

impl SweepTable {
    /// Phase of a given cell's theta, if classification succeeded.
    pub fn phase_of(&self, theta: f64) -> Option<crate::analysis::PhaseLabel> {
        self.phases
            .iter()
            .find(|p| p.theta.to_bits() == theta.to_bits())
            .map(|p| p.phase)
    }
}

/// Runs the full (theta, cap) grid. Cells are independent; with `jobs > 1`
/// they run on a local thread pool, and the output is identical at any
/// parallelism level because results are collected in grid order.
///
/// Per-cell failures are recorded in the affected cell and the sweep
/// continues.
pub fn run_sweep(spec: &ScenarioSpec, jobs: usize) -> Result<SweepTable> {
    spec.validate()?;
    let grid: Vec<(f64, f64)> = spec
        .theta_grid
        .iter()
        .flat_map(|&t| spec.cap_grid.iter().map(move |&c| (t, c)))
        .collect();

    let execute = |&(theta, cap): &(f64, f64)| -> SweepOutcome {
        SweepOutcome {
            theta,
            cap_fraction: cap,
            cell: run_scenario(spec, theta, cap).map_err(|e| e.to_string()),
        }
    };

    let outcomes: Vec<SweepOutcome> = if jobs <= 1 {
        grid.iter().map(execute).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?;
        pool.install(|| grid.par_iter().map(execute).collect())
    };

    let ok_cells: Vec<SweepCellResult> = outcomes
        .iter()
        .filter_map(|o| o.cell.as_ref().ok().cloned())
        .collect();
    let (phases, phase_error) = if ok_cells.len() == outcomes.len() {
        match classify_phase(&ok_cells, spec.ad_tol) {
            Ok(p) => (p, None),
            Err(e) => (Vec::new(), Some(e.to_string())),
        }
    } else {
        (
            Vec::new(),
            Some(format!(
                "{} of {} cells failed",
                outcomes.len() - ok_cells.len(),
                outcomes.len()
            )),
        )
    };

    Ok(SweepTable {
        outcomes,
        phases,
        phase_error,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn example_network_topology_matches_path_lists() {
        let net = build_example_network();
        assert_eq!(net.num_links(), 17);
        assert_eq!(net.num_routes(), 8);
        assert_eq!(net.num_od_pairs(), 2);
        for (id, od, links) in EXAMPLE_ROUTES {
            let k = net.route_position(id).unwrap();
            let route = &net.routes()[k];
            assert_eq!(route.od_pair, od);
            assert_eq!(route.links, links.to_vec());
        }
        // link 11 is the unique link shared across OD pairs
        let eleven = net.link_position("11").unwrap();
        let users: Vec<&str> = net
            .routes()
            .iter()
            .filter(|r| r.links.iter().any(|l| l == "11"))
            .map(|r| r.id.as_str())
            .collect();
        assert_eq!(users, vec!["4", "5"]);
        for a in 0..net.num_links() {
            if a == eleven {
                continue;
            }
            let ods: std::collections::BTreeSet<usize> = net
                .routes()
                .iter()
                .enumerate()
                .filter(|(k, _)| net.route_uses_link(*k, a))
                .map(|(k, _)| net.od_of_route(k))
                .collect();
            assert!(ods.len() <= 1, "link {a} crosses OD pairs");
        }
    }

    #[test]
    fn example_network_parameters_are_involution_symmetric() {
        let net = build_example_network();
        let pairs = [
            ("1", "4"),
            ("2", "3"),
            ("5", "8"),
            ("6", "7"),
            ("9", "13"),
            ("10", "12"),
            ("11", "11"),
            ("14", "17"),
            ("15", "16"),
        ];
        for (a, b) in pairs {
            let la = &net.links()[net.link_position(a).unwrap()];
            let lb = &net.links()[net.link_position(b).unwrap()];
            assert_eq!(la.free_flow_time, lb.free_flow_time, "{a} vs {b}");
            assert_eq!(la.capacity, lb.capacity, "{a} vs {b}");
        }
    }

    #[test]
    fn reference_ue_is_symmetric_and_feasible() {
        let net = build_example_network();
        let reference = example_reference_ue();
        net.check_feasible(&reference).unwrap();
        for i in 0..4 {
            assert_eq!(
                reference.flows[i],
                reference.flows[7 - i],
                "route {} vs {}",
                i + 1,
                8 - i
            );
        }
    }

    #[test]
    fn reference_link_flows_by_hand() {
        // link 11 carries routes 4 and 5: 25 + 25; private links carry their
        // route's flow; entry/exit links carry two routes of one OD pair
        let net = build_example_network();
        let v = net.link_flows(&example_reference_ue()).unwrap();
        let expected = [
            40.0, 50.0, 50.0, 40.0, // entries: f1+f2, f3+f4, mirrored
            20.0, 25.0, 25.0, 20.0, // private middles of routes 2, 3, 6, 7
            20.0, 45.0, 50.0, 45.0, 20.0, // 9: f1; 10: f2+f3; 11: f4+f5; mirrored
            20.0, 25.0, 25.0, 20.0, // exits of routes 1, 4, 5, 8
        ];
        for (a, link) in net.links().iter().enumerate() {
            assert_eq!(v[a], expected[a], "link {}", link.id);
            // every link is calibrated to sit exactly at capacity here
            assert_eq!(v[a], link.capacity, "link {}", link.id);
        }
    }

    #[test]
    fn free_flow_route_costs_add_up() {
        let net = build_example_network();
        let free_flow = net.link_costs(&vec![0.0; net.num_links()]).unwrap();
        let costs = net.route_costs(&free_flow).unwrap();
        for (k, route) in net.routes().iter().enumerate() {
            let by_hand: f64 = route
                .links
                .iter()
                .map(|id| net.links()[net.link_position(id).unwrap()].free_flow_time)
                .sum();
            assert_eq!(costs[k], by_hand, "route {}", route.id);
        }
    }

    #[test]
    fn apply_reduction_cases() {
        let net = build_example_network();
        let same = apply_reduction(&net, "11", 0.0).unwrap();
        assert_eq!(
            same.links()[same.link_position("11").unwrap()].capacity,
            net.links()[net.link_position("11").unwrap()].capacity
        );
        let half = apply_reduction(&net, "11", 0.5).unwrap();
        assert_eq!(
            half.links()[half.link_position("11").unwrap()].capacity,
            0.5 * net.links()[net.link_position("11").unwrap()].capacity
        );
        for link in net.links() {
            if link.id != "11" {
                let before = link.capacity;
                let after = half.links()[half.link_position(&link.id).unwrap()].capacity;
                assert_eq!(before, after);
            }
        }
        let quarter = apply_reduction(&half, "11", 0.5).unwrap();
        assert_eq!(
            quarter.links()[quarter.link_position("11").unwrap()].capacity,
            0.25 * net.links()[net.link_position("11").unwrap()].capacity
        );
        assert!(apply_reduction(&net, "11", 1.0).is_err());
        assert!(apply_reduction(&net, "99", 0.5).is_err());
    }

    #[test]
    fn zero_cap_cell_stays_at_equilibrium() {
        let spec = ScenarioSpec::example(
            vec![Reduction {
                link: "11".into(),
                fraction: 0.5,
                day: 0,
            }],
            vec![0.1],
            vec![0.0],
            StepperConfig::discrete(2000, 1e-10),
        );
        let cell = run_scenario(&spec, 0.1, 0.0).unwrap();
        assert!(cell.termination.is_converged());
        assert!(cell.ad <= spec.ad_tol, "ad = {}", cell.ad);
    }

    #[test]
    fn scenario_never_mutates_base_network() {
        let spec = ScenarioSpec::example(
            vec![Reduction {
                link: "11".into(),
                fraction: 0.5,
                day: 0,
            }],
            vec![0.1],
            vec![0.5],
            StepperConfig::discrete(300, 1e-8),
        );
        let before: Vec<f64> = spec.network.links().iter().map(|l| l.capacity).collect();
        let _ = run_scenario(&spec, 0.1, 0.5).unwrap();
        let after: Vec<f64> = spec.network.links().iter().map(|l| l.capacity).collect();
        assert_eq!(before, after);
    }

    #[test]
    fn scr_keeps_mirror_symmetry_acr_breaks_it() {
        let net = build_example_network();
        let reference = example_reference_ue();
        let cfg = StepperConfig::discrete(120, 1e-12);
        let protocol = ProtocolParams::npsd(0.15);

        // symmetric reduction: trajectories mirror bit-exactly
        let scr = apply_reduction(&net, "11", 0.5).unwrap();
        let overrides = [(0u64, &scr)];
        let schedule = NetworkSchedule::WithOverrides {
            normal: &net,
            overrides: &overrides,
        };
        let traj =
            run_trajectory_scheduled(schedule, &reference.at_day(0), &protocol, &cfg).unwrap();
        for state in &traj.states {
            for i in 0..4 {
                assert_eq!(
                    state.flows[i].to_bits(),
                    state.flows[7 - i].to_bits(),
                    "day {} route {} vs {}",
                    state.day,
                    i + 1,
                    8 - i
                );
            }
        }

        // asymmetric reduction: day-1 changes differ across the mirror
        let acr = apply_reduction(&net, "9", 0.5).unwrap();
        let overrides = [(0u64, &acr)];
        let schedule = NetworkSchedule::WithOverrides {
            normal: &net,
            overrides: &overrides,
        };
        let traj =
            run_trajectory_scheduled(schedule, &reference.at_day(0), &protocol, &cfg).unwrap();
        let day1 = traj.states.iter().find(|s| s.day == 1).unwrap();
        let d_route1 = day1.flows[0] - reference.flows[0];
        let d_route8 = day1.flows[7] - reference.flows[7];
        assert_ne!(d_route1, d_route8);
    }

    #[test]
    fn sweep_grid_is_complete_and_ordered() {
        let spec = ScenarioSpec::example(
            vec![Reduction {
                link: "11".into(),
                fraction: 0.5,
                day: 0,
            }],
            vec![0.05, 0.1],
            vec![0.2, 0.4],
            StepperConfig::discrete(400, 1e-8),
        );
        let table = run_sweep(&spec, 1).unwrap();
        assert_eq!(table.outcomes.len(), 4);
        let coords: Vec<(f64, f64)> = table
            .outcomes
            .iter()
            .map(|o| (o.theta, o.cap_fraction))
            .collect();
        assert_eq!(coords, vec![(0.05, 0.2), (0.05, 0.4), (0.1, 0.2), (0.1, 0.4)]);
        assert!(table.outcomes.iter().all(|o| o.cell.is_ok()));
        assert!(table.phase_error.is_none());
        assert_eq!(table.phases.len(), 2);
    }

    #[test]
    fn sweep_records_cell_failures_and_continues() {
        // a linear protocol with a huge constant over-swaps once the
        // disruption splits the costs; those cells fail, the rest complete
        let mut spec = ScenarioSpec::example(
            vec![Reduction {
                link: "11".into(),
                fraction: 0.5,
                day: 0,
            }],
            vec![0.1],
            vec![0.0, 0.6],
            StepperConfig::discrete(50, 1e-8),
        );
        spec.protocol = ProtocolParams::pap_fixed(10.0);
        let table = run_sweep(&spec, 1).unwrap();
        assert_eq!(table.outcomes.len(), 2);
        // cap 0: costs stay equal, nothing swaps, the cell converges
        assert!(table.outcomes[0].cell.is_ok());
        // cap 0.6: enormous proportions, rejected as over-swapping
        let err = table.outcomes[1].cell.as_ref().unwrap_err();
        assert!(err.contains("over-swapping"), "{err}");
        assert!(table.phase_error.is_some());
    }

    #[test]
    fn parallel_sweep_matches_serial() {
        let spec = ScenarioSpec::example(
            vec![Reduction {
                link: "11".into(),
                fraction: 0.5,
                day: 0,
            }],
            vec![0.05, 0.28],
            vec![0.3, 0.7],
            StepperConfig::discrete(600, 1e-9),
        );
        let serial = run_sweep(&spec, 1).unwrap();
        let parallel = run_sweep(&spec, 4).unwrap();
        for (a, b) in serial.outcomes.iter().zip(&parallel.outcomes) {
            let (ca, cb) = (a.cell.as_ref().unwrap(), b.cell.as_ref().unwrap());
            assert_eq!(ca.ad.to_bits(), cb.ad.to_bits());
            assert_eq!(ca.termination, cb.termination);
        }
    }
}
