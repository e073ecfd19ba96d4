//! Cost pipeline on the bundled example network: path flows aggregate to
//! link flows, links price through the BPR function, and route costs add up
//! along each path.

use routeswap::io::format_sig;
use routeswap::scenarios::{apply_reduction, build_example_network, example_reference_ue};

fn main() {
    let net = build_example_network();
    let reference = example_reference_ue();

    println!(
        "example network: {} links, {} routes, {} OD pairs",
        net.num_links(),
        net.num_routes(),
        net.num_od_pairs()
    );
    for od in net.od_pairs() {
        let routes: Vec<&str> = net
            .routes()
            .iter()
            .filter(|r| r.od_pair == od.id)
            .map(|r| r.id.as_str())
            .collect();
        println!(
            "  OD {} ({} -> {}), demand {}: routes {}",
            od.id,
            od.origin,
            od.destination,
            od.demand,
            routes.join(", ")
        );
    }

    let (v, c, costs) = net.costs_at(&reference).unwrap();
    println!("\nat the reference equilibrium:");
    println!("  link   flow  v/O    cost");
    for (a, link) in net.links().iter().enumerate() {
        println!(
            "  {:>4} {:>6} {:>5.2} {:>7}",
            link.id,
            format_sig(v[a]),
            v[a] / link.capacity,
            format_sig(c[a])
        );
    }
    println!("  route costs: all equal at {}", format_sig(costs[0]));
    assert!(costs.iter().all(|&x| x == costs[0]));

    // halving link 11's capacity makes routes 4 and 5 expensive
    let reduced = apply_reduction(&net, "11", 0.5).unwrap();
    let (_, _, disrupted) = reduced.costs_at(&reference).unwrap();
    println!("\nwith link 11 at half capacity:");
    for (k, route) in net.routes().iter().enumerate() {
        let marker = if disrupted[k] > costs[k] + 1e-12 {
            "  <- dearer"
        } else {
            ""
        };
        println!(
            "  route {:>2}: {} min{}",
            route.id,
            format_sig(disrupted[k]),
            marker
        );
    }
}
