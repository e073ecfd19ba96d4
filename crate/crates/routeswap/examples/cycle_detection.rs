//! High reaction sensitivity: the same disruption no longer dies out but
//! locks into a two-day oscillation, which the runner detects and the
//! deviation index quantifies.

use routeswap::analysis::ad_index;
use routeswap::dynamics::{run_trajectory_scheduled, NetworkSchedule, StepperConfig, Termination};
use routeswap::protocols::ProtocolParams;
use routeswap::scenarios::{apply_reduction, build_example_network, example_reference_ue};

fn main() {
    let net = build_example_network();
    let reference = example_reference_ue();
    let reduced = apply_reduction(&net, "11", 0.5).unwrap();
    let overrides = [(0u64, &reduced)];
    let schedule = NetworkSchedule::WithOverrides {
        normal: &net,
        overrides: &overrides,
    };

    for theta in [0.05, 0.18, 0.25, 0.3] {
        let cfg = StepperConfig::discrete(2000, 1e-10);
        let traj = run_trajectory_scheduled(
            schedule,
            &reference.at_day(0),
            &ProtocolParams::npsd(theta),
            &cfg,
        )
        .unwrap();
        let ad = ad_index(&traj, &reference, 2).unwrap();
        match &traj.termination {
            Termination::Converged { day } => {
                println!("theta {theta:<5} converged at day {day}, ad {ad:.3e}")
            }
            Termination::MaxDays => println!("theta {theta:<5} ran out of days, ad {ad:.3e}"),
            Termination::Cycle {
                period,
                max_deviation,
                detected_day,
            } => {
                println!(
                    "theta {theta:<5} period-{period} cycle from day {detected_day} \
                     (recurrence within {max_deviation:.1e}), ad {ad:.3e}"
                );
                let n = traj.states.len();
                let a = &traj.states[n - 2];
                let b = &traj.states[n - 1];
                println!("        alternating states (routes 4/5):");
                println!(
                    "          day {}: f_4 = {:.4}, f_5 = {:.4}",
                    a.day, a.flows[3], a.flows[4]
                );
                println!(
                    "          day {}: f_4 = {:.4}, f_5 = {:.4}",
                    b.day, b.flows[3], b.flows[4]
                );
            }
        }
    }
}
