//! Failure modes of the linear proportional-switch protocol: a too-large
//! swap constant moves more flow off a route than it carries. The stepper
//! refuses such matrices, the classical 1/(B*M) bound avoids them, and the
//! nonlinear protocol cannot produce them at any sensitivity.

use routeswap::dynamics::step_discrete;
use routeswap::network::{FlowState, Link, Network, NetworkData, OdPair, Route};
use routeswap::protocols::{smith_wisten_kappa_bound, swap_matrix, ProtocolParams};

fn two_route_net() -> Network {
    Network::from_data(NetworkData {
        links: vec![
            Link {
                id: "fast".into(),
                free_flow_time: 2.0,
                capacity: 30.0,
            },
            Link {
                id: "slow".into(),
                free_flow_time: 18.0,
                capacity: 30.0,
            },
        ],
        od_pairs: vec![OdPair {
            id: "w".into(),
            origin: "o".into(),
            destination: "d".into(),
            demand: 60.0,
        }],
        routes: vec![
            Route {
                id: "via-slow".into(),
                od_pair: "w".into(),
                links: vec!["slow".into()],
            },
            Route {
                id: "via-fast".into(),
                od_pair: "w".into(),
                links: vec!["fast".into()],
            },
        ],
    })
    .unwrap()
}

fn main() {
    let net = two_route_net();
    let f = FlowState::new(vec![40.0, 20.0], 0);
    let (_, _, costs) = net.costs_at(&f).unwrap();
    println!(
        "costs: via-slow {:.3}, via-fast {:.3} (difference {:.3})",
        costs[0],
        costs[1],
        costs[0] - costs[1]
    );

    // reckless kappa: proportion kappa * diff > 1
    let reckless = ProtocolParams::pap_fixed(0.08);
    let matrix = swap_matrix(&net, &costs, &reckless).unwrap();
    println!(
        "\nkappa = 0.08: row sum {:.3}, over-swapping routes {:?}",
        matrix.blocks()[0].row_sum(0),
        matrix.over_swapping_routes(&net)
    );
    match step_discrete(&net, &f, &matrix) {
        Err(e) => println!("stepper refuses: {e}"),
        Ok(_) => unreachable!("over-swapping must be rejected"),
    }

    // the classical bound keeps proportions feasible for any costs up to B
    let bound = smith_wisten_kappa_bound(&net, 25.0).unwrap();
    let safe = ProtocolParams::pap_fixed(bound);
    let matrix = swap_matrix(&net, &costs, &safe).unwrap();
    let next = step_discrete(&net, &f, &matrix).unwrap();
    println!(
        "\nkappa = 1/(B*M) = {bound}: row sum {:.3}, step ok, flows {:?}",
        matrix.blocks()[0].row_sum(0),
        next.flows
    );

    // the nonlinear protocol is bounded by construction
    for theta in [0.1, 1.0, 100.0] {
        let m = swap_matrix(&net, &costs, &ProtocolParams::npsd(theta)).unwrap();
        println!(
            "npsd theta {theta:>5}: row sum {:.6} (never above 1)",
            m.blocks()[0].row_sum(0)
        );
    }
}
