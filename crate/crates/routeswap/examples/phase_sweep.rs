//! Sweep reaction sensitivity against disruption depth and classify each
//! sensitivity as stable (always returns to equilibrium), meta-stable
//! (mixed), or unstable (always ends oscillating).

use anyhow::Result;
use routeswap::dynamics::{StepperConfig, Termination};
use routeswap::io::format_sig;
use routeswap::scenarios::{run_sweep, Reduction, ScenarioSpec};

fn main() -> Result<()> {
    let theta_grid: Vec<f64> = (1..=15).map(|i| i as f64 * 0.02).collect();
    let cap_grid = vec![0.3, 0.6, 0.9];
    let spec = ScenarioSpec::example(
        vec![Reduction {
            link: "11".into(),
            fraction: 0.5,
            day: 0,
        }],
        theta_grid,
        cap_grid.clone(),
        StepperConfig::discrete(2000, 1e-10),
    );

    let started = std::time::Instant::now();
    let table = run_sweep(&spec, 4)?;
    println!(
        "{} cells in {:.1?}\n",
        table.outcomes.len(),
        started.elapsed()
    );

    println!("theta  phase        ad by cap fraction {cap_grid:?}");
    for phase in &table.phases {
        let ads: Vec<String> = table
            .outcomes
            .iter()
            .filter(|o| o.theta == phase.theta)
            .map(|o| match &o.cell {
                Ok(cell) => {
                    let tag = match &cell.termination {
                        Termination::Converged { day } => format!("C@{day}"),
                        Termination::MaxDays => "M".into(),
                        Termination::Cycle { period, .. } => format!("P{period}"),
                    };
                    format!("{tag}:{}", format_sig(cell.ad))
                }
                Err(e) => format!("error: {e}"),
            })
            .collect();
        println!(
            "{:>5}  {:<11}  {}",
            format_sig(phase.theta),
            phase.phase.to_string(),
            ads.join("  ")
        );
    }

    let boundary = table
        .phases
        .windows(2)
        .find(|w| w[0].phase != w[1].phase)
        .map(|w| (w[0].theta, w[1].theta));
    if let Some((lo, hi)) = boundary {
        println!("\nphase boundary between theta = {lo} and {hi}");
    }
    Ok(())
}
