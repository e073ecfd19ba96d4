//! Day-to-day route-swapping dynamics on traffic networks.
//!
//! This crate is a numerical laboratory for deterministic rerouting
//! dynamics: travelers on fixed OD pairs re-evaluate their routes each day
//! from the previous day's costs and swap toward cheaper alternatives. Two
//! families of revision protocols are provided behind one interface — the
//! nonlinear pairwise swapping rate and the classical linear
//! proportional-switch rate — together with BPR cost evaluation, trajectory
//! execution with convergence and cycle detection, capacity-disruption
//! scenarios, parameter sweeps, and equilibrium/stability analytics.
//!
//! # Layout
//!
//! * [`network`] — links, routes, OD pairs, flow states, BPR costs.
//! * [`protocols`] — swap-proportion estimators and the swap matrix.
//! * [`dynamics`] — the evolution equation and trajectory runner.
//! * [`analysis`] — Wardrop test, Lyapunov potential, oscillation index,
//!   phase classification, and an independent equilibrium solver.
//! * [`scenarios`] — the bundled example network, one-day capacity
//!   reductions, and (theta, reduction) grid sweeps.
//! * [`io`] — file formats: network/scenario JSON, trajectory and sweep CSV.
//! * [`cli`] — the `routeswap` command-line front end.
//!
//! # Examples
//!
//! Each major capability has a runnable example:
//!
//! ```bash
//! cargo run --example network_costs        # cost pipeline on the bundled network
//! cargo run --example equilibrium_oracle   # solve and verify user equilibrium
//! cargo run --example simulate_disruption  # one-day capacity cut, day-by-day
//! cargo run --example cycle_detection      # oscillations at high sensitivity
//! cargo run --example overswapping_pap     # linear protocol failure modes
//! cargo run --example lyapunov_descent     # potential decrease under Euler substeps
//! cargo run --example phase_sweep          # stable/meta-stable/unstable bands
//! ```

// Validation uses `!(x > 0.0)` on purpose: the negated form also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod cli;
pub mod dynamics;
pub mod error;
pub mod io;
pub mod network;
pub mod protocols;
pub mod scenarios;

pub use error::{Error, Result};
pub use network::{FlowState, Network, NetworkData};
pub use protocols::{ProtocolParams, SwapMatrix};
