//! A one-day capacity cut and the day-to-day recovery: link 11 loses half
//! its capacity on day 0 only, the directly hit routes 4 and 5 shed flow on
//! day 1, and the swaps bring the network back to equilibrium.

use anyhow::Result;
use routeswap::analysis::ad_index;
use routeswap::dynamics::{run_trajectory_scheduled, NetworkSchedule, StepperConfig};
use routeswap::io::format_sig;
use routeswap::protocols::ProtocolParams;
use routeswap::scenarios::{apply_reduction, build_example_network, example_reference_ue};

fn main() -> Result<()> {
    let net = build_example_network();
    let reference = example_reference_ue();
    let reduced = apply_reduction(&net, "11", 0.5)?;

    let overrides = [(0u64, &reduced)];
    let schedule = NetworkSchedule::WithOverrides {
        normal: &net,
        overrides: &overrides,
    };
    let protocol = ProtocolParams::npsd(0.1);
    let cfg = StepperConfig::discrete(2000, 1e-10);
    let traj = run_trajectory_scheduled(schedule, &reference.at_day(0), &protocol, &cfg)?;

    println!("day    f_1     f_2     f_3     f_4     f_5     f_6     f_7     f_8   step norm");
    for (state, diag) in traj.states.iter().zip(&traj.diagnostics).take(12) {
        print!("{:>3}", state.day);
        for f in &state.flows {
            print!(" {f:>7.3}");
        }
        println!("   {:.3e}", diag.step_norm);
    }
    println!("...");
    println!("termination: {:?}", traj.termination);
    println!(
        "deviation from the pre-disruption equilibrium: {}",
        format_sig(ad_index(&traj, &reference, 2)?)
    );

    let day1 = traj.states.iter().find(|s| s.day == 1).expect("recorded");
    println!(
        "day-1 drop on the hit routes: f_4 {} -> {}, f_5 {} -> {}",
        format_sig(reference.flows[3]),
        format_sig(day1.flows[3]),
        format_sig(reference.flows[4]),
        format_sig(day1.flows[4]),
    );
    Ok(())
}
