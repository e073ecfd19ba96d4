//! Solve the user equilibrium of the bundled network from scratch and check
//! it: Wardrop's condition holds, the mirror symmetry of the network shows
//! up in the flows, and the result agrees with the frozen reference.

use anyhow::Result;
use routeswap::analysis::{is_wardrop_ue, solve_ue_oracle};
use routeswap::io::format_sig;
use routeswap::scenarios::{build_example_network, example_reference_ue};

fn main() -> Result<()> {
    let net = build_example_network();
    let sol = solve_ue_oracle(&net, 1e-12, 100_000)?;

    println!(
        "solved in {} iterations, relative gap {:.3e}",
        sol.iterations, sol.relative_gap
    );
    println!("path flows:");
    for (route, flow) in net.routes().iter().zip(&sol.flows.flows) {
        println!("  route {:>2}: {:>12}", route.id, format_sig(*flow));
    }

    let check = is_wardrop_ue(&net, &sol.flows, 1e-6)?;
    println!("wardrop condition: {}", check.is_ue);
    for (od, pi) in net.od_pairs().iter().zip(&check.min_costs) {
        println!("  OD {:>4}: minimum cost {}", od.id, format_sig(*pi));
    }

    println!("mirror symmetry (route i vs 9-i):");
    for i in 0..4 {
        let gap = (sol.flows.flows[i] - sol.flows.flows[7 - i]).abs();
        println!("  |f_{} - f_{}| = {:.2e}", i + 1, 8 - i, gap);
    }

    let reference = example_reference_ue();
    let distance = sol.flows.distance(&reference);
    println!("distance to the frozen reference: {distance:.3e}");
    Ok(())
}
