//! Revision protocols: the per-day swap-proportion estimators.
//!
//! Three interchangeable protocols are provided behind [`ProtocolParams`]:
//!
//! * `npsd` — nonlinear pairwise swapping: a route sheds flow to each
//!   strictly cheaper route p at rate `(1/|R_k|) * (1 - exp(-theta*(C_k - C_p)))`,
//!   where `R_k` is the candidate set of cheaper routes. Row sums are bounded
//!   by 1 by construction, so flows can never over-swap.
//! * `pap_fixed` — the linear proportional-switch rate `kappa * max(0, C_k - C_p)`
//!   with a fixed `kappa`. Not intrinsically bounded: rows whose total
//!   proportion exceeds 1 are flagged as over-swapping, never clamped.
//! * `pap_he` — the same linear rate with `kappa` recomputed per OD pair each
//!   day as `1 / (sum of pairwise positive cost differences + reluctance)`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::{sorted_sum, Network};

/// Reaction sensitivity, either shared or given per OD pair.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Theta {
    Uniform(f64),
    PerOd(BTreeMap<String, f64>),
}

impl Theta {
    pub fn for_od(&self, od_id: &str) -> Option<f64> {
        match self {
            Theta::Uniform(t) => Some(*t),
            Theta::PerOd(map) => map.get(od_id).copied(),
        }
    }
}

/// Protocol selection plus its parameters. Serializes with a `variant` tag:
/// `{"variant": "npsd", "theta": 0.1, "cost_epsilon": 0.0}` and so on.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum ProtocolParams {
    Npsd {
        theta: Theta,
        #[serde(default)]
        cost_epsilon: f64,
    },
    PapFixed {
        kappa: f64,
        #[serde(default)]
        cost_epsilon: f64,
    },
    PapHe {
        reluctance: f64,
        #[serde(default)]
        cost_epsilon: f64,
    },
}

impl ProtocolParams {
    pub fn npsd(theta: f64) -> Self {
        ProtocolParams::Npsd {
            theta: Theta::Uniform(theta),
            cost_epsilon: 0.0,
        }
    }

    pub fn pap_fixed(kappa: f64) -> Self {
        ProtocolParams::PapFixed {
            kappa,
            cost_epsilon: 0.0,
        }
    }

    pub fn pap_he(reluctance: f64) -> Self {
        ProtocolParams::PapHe {
            reluctance,
            cost_epsilon: 0.0,
        }
    }

    pub fn cost_epsilon(&self) -> f64 {
        match self {
            ProtocolParams::Npsd { cost_epsilon, .. }
            | ProtocolParams::PapFixed { cost_epsilon, .. }
            | ProtocolParams::PapHe { cost_epsilon, .. } => *cost_epsilon,
        }
    }

    /// Checks the parameter invariants against a concrete network.
    pub fn validate(&self, net: &Network) -> Result<()> {
        if self.cost_epsilon() < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "cost_epsilon must be >= 0, got {}",
                self.cost_epsilon()
            )));
        }
        match self {
            ProtocolParams::Npsd { theta, .. } => {
                for od in net.od_pairs() {
                    match theta.for_od(&od.id) {
                        Some(t) if t > 0.0 => {}
                        Some(t) => {
                            return Err(Error::InvalidParameter(format!(
                                "theta for OD pair `{}` must be > 0, got {t}",
                                od.id
                            )))
                        }
                        None => {
                            return Err(Error::InvalidParameter(format!(
                                "no theta given for OD pair `{}`",
                                od.id
                            )))
                        }
                    }
                }
            }
            ProtocolParams::PapFixed { kappa, .. } => {
                if !(*kappa > 0.0) {
                    return Err(Error::InvalidParameter(format!(
                        "kappa must be > 0, got {kappa}"
                    )));
                }
            }
            ProtocolParams::PapHe { reluctance, .. } => {
                if !(*reluctance > 0.0) {
                    return Err(Error::InvalidParameter(format!(
                        "reluctance must be > 0, got {reluctance}"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Candidate routes of route `k`: same OD pair, cost strictly below
/// `C_k - epsilon`. Returns global route indices in network order.
pub fn candidate_indices(net: &Network, k: usize, costs: &[f64], epsilon: f64) -> Vec<usize> {
    let od = net.od_of_route(k);
    net.routes_of_od(od)
        .iter()
        .copied()
        .filter(|&p| p != k && costs[p] < costs[k] - epsilon)
        .collect()
}

/// Id-based variant of [`candidate_indices`].
pub fn candidate_set(
    net: &Network,
    route_id: &str,
    costs: &[f64],
    epsilon: f64,
) -> Result<Vec<String>> {
    check_costs_len(net, costs)?;
    let k = net
        .route_position(route_id)
        .ok_or_else(|| Error::UnknownRoute(route_id.to_string()))?;
    Ok(candidate_indices(net, k, costs, epsilon)
        .into_iter()
        .map(|p| net.routes()[p].id.clone())
        .collect())
}

fn check_costs_len(net: &Network, costs: &[f64]) -> Result<()> {
    if costs.len() != net.num_routes() {
        return Err(Error::DimensionMismatch {
            what: "route costs",
            expected: net.num_routes(),
            got: costs.len(),
        });
    }
    Ok(())
}

fn resolve_pair(net: &Network, from_id: &str, to_id: &str) -> Result<(usize, usize)> {
    let k = net
        .route_position(from_id)
        .ok_or_else(|| Error::UnknownRoute(from_id.to_string()))?;
    let p = net
        .route_position(to_id)
        .ok_or_else(|| Error::UnknownRoute(to_id.to_string()))?;
    if net.od_of_route(k) != net.od_of_route(p) {
        return Err(Error::MismatchedOdPairs {
            from: from_id.to_string(),
            to: to_id.to_string(),
        });
    }
    Ok((k, p))
}

/// Nonlinear swap rate from route `from_id` to `to_id` under the given costs.
///
/// Zero unless `to_id` is in the candidate set; otherwise
/// `max(0, 1 - exp(-theta * (C_k - C_p))) / |R_k|`, which lies in [0, 1].
pub fn npsd_rate(
    net: &Network,
    from_id: &str,
    to_id: &str,
    costs: &[f64],
    params: &ProtocolParams,
) -> Result<f64> {
    check_costs_len(net, costs)?;
    params.validate(net)?;
    let (theta, epsilon) = match params {
        ProtocolParams::Npsd {
            theta,
            cost_epsilon,
        } => (theta, *cost_epsilon),
        _ => {
            return Err(Error::InvalidParameter(
                "npsd_rate requires the npsd variant".into(),
            ))
        }
    };
    let (k, p) = resolve_pair(net, from_id, to_id)?;
    let od_id = &net.od_pairs()[net.od_of_route(k)].id;
    let theta = theta.for_od(od_id).expect("validated above");
    let candidates = candidate_indices(net, k, costs, epsilon);
    if !candidates.contains(&p) {
        return Ok(0.0);
    }
    Ok(npsd_term(theta, costs[k] - costs[p]) / candidates.len() as f64)
}

/// The unnormalized nonlinear swap term `max(0, 1 - exp(-theta * diff))`.
#[inline]
fn npsd_term(theta: f64, cost_diff: f64) -> f64 {
    (1.0 - (-theta * cost_diff).exp()).max(0.0)
}

/// Linear proportional swap rate `kappa * max(0, C_k - C_p)`.
///
/// Unlike the nonlinear rate this is unbounded; callers assembling a
/// [`SwapMatrix`] get over-swapping rows flagged, not repaired.
pub fn pap_rate_fixed(
    net: &Network,
    from_id: &str,
    to_id: &str,
    costs: &[f64],
    params: &ProtocolParams,
) -> Result<f64> {
    check_costs_len(net, costs)?;
    params.validate(net)?;
    let kappa = match params {
        ProtocolParams::PapFixed { kappa, .. } => *kappa,
        _ => {
            return Err(Error::InvalidParameter(
                "pap_rate_fixed requires the pap_fixed variant".into(),
            ))
        }
    };
    let (k, p) = resolve_pair(net, from_id, to_id)?;
    Ok(kappa * (costs[k] - costs[p]).max(0.0))
}

/// The classical safe upper bound for the linear swap constant:
/// `kappa <= 1/(B*M)` where `B` bounds every route cost over the run and `M`
/// is the number of effective routes in the network.
pub fn smith_wisten_kappa_bound(net: &Network, cost_upper_bound: f64) -> Result<f64> {
    if !(cost_upper_bound > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "cost upper bound must be > 0, got {cost_upper_bound}"
        )));
    }
    let m = net.num_routes();
    if m == 0 {
        return Err(Error::InvalidParameter(
            "network has no routes".into(),
        ));
    }
    Ok(1.0 / (cost_upper_bound * m as f64))
}

/// Day-specific `kappa` for the reluctance-parameterized linear protocol:
/// one over (the sum of `max(0, C_p - C_k)` over ordered route pairs of one
/// OD pair, plus the reluctance `H`).
pub fn pap_kappa_he(od_costs: &[f64], reluctance: f64) -> Result<f64> {
    if !(reluctance > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "reluctance must be > 0, got {reluctance}"
        )));
    }
    let mut denom = reluctance;
    for &cp in od_costs {
        for &ck in od_costs {
            denom += (cp - ck).max(0.0);
        }
    }
    Ok(1.0 / denom)
}

/// Swap proportions for one OD pair: a dense `m x m` block with zero
/// diagonal, plus per-row sums and over-swapping flags.
#[derive(Debug, Clone)]
pub struct SwapBlock {
    /// OD-pair index in the owning network.
    pub od: usize,
    /// Global route indices of the block, in network order.
    pub members: Vec<usize>,
    /// Row-major `m x m` swap proportions; entry `(k, p)` is the proportion
    /// of route `members[k]`'s flow that swaps to `members[p]`.
    rho: Vec<f64>,
    /// Per-row total outgoing proportion. For the nonlinear protocol this is
    /// computed as (sum of unnormalized terms) / |R_k|, which cannot exceed
    /// 1.0 even in floating point.
    row_sums: Vec<f64>,
    /// Local row indices whose total proportion exceeds 1 (over-swapping).
    pub over_swapping_rows: Vec<usize>,
}

impl SwapBlock {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Swap proportion from local row `k` to local column `p`.
    pub fn rate(&self, k: usize, p: usize) -> f64 {
        self.rho[k * self.members.len() + p]
    }

    pub fn row_sum(&self, k: usize) -> f64 {
        self.row_sums[k]
    }

    pub fn row(&self, k: usize) -> &[f64] {
        let m = self.members.len();
        &self.rho[k * m..(k + 1) * m]
    }
}

/// All swap proportions for one day, grouped per OD pair.
#[derive(Debug, Clone)]
pub struct SwapMatrix {
    blocks: Vec<SwapBlock>,
}

impl SwapMatrix {
    pub fn blocks(&self) -> &[SwapBlock] {
        &self.blocks
    }

    /// True if any row anywhere over-swaps.
    pub fn has_over_swapping(&self) -> bool {
        self.blocks
            .iter()
            .any(|b| !b.over_swapping_rows.is_empty())
    }

    /// Route ids of all over-swapping rows.
    pub fn over_swapping_routes<'a>(&self, net: &'a Network) -> Vec<&'a str> {
        let mut out = Vec::new();
        for block in &self.blocks {
            for &k in &block.over_swapping_rows {
                out.push(net.routes()[block.members[k]].id.as_str());
            }
        }
        out
    }

    /// Swap proportion between two global route indices (zero across
    /// different OD pairs).
    pub fn rate_between(&self, from: usize, to: usize) -> f64 {
        for block in &self.blocks {
            if let Some(k) = block.members.iter().position(|&r| r == from) {
                return match block.members.iter().position(|&r| r == to) {
                    Some(p) => block.rate(k, p),
                    None => 0.0,
                };
            }
        }
        0.0
    }
}

/// Builds the full swap matrix for the given day costs under the selected
/// protocol.
///
/// Over-swapping rows (possible only for the linear protocols) are flagged in
/// the result rather than clamped; the stepper refuses to apply them.
pub fn swap_matrix(net: &Network, costs: &[f64], params: &ProtocolParams) -> Result<SwapMatrix> {
    check_costs_len(net, costs)?;
    params.validate(net)?;
    let epsilon = params.cost_epsilon();

    let mut blocks = Vec::with_capacity(net.num_od_pairs());
    let mut terms: Vec<f64> = Vec::new();
    for (w, od) in net.od_pairs().iter().enumerate() {
        let members: Vec<usize> = net.routes_of_od(w).to_vec();
        let m = members.len();
        let mut rho = vec![0.0; m * m];
        let mut row_sums = vec![0.0; m];
        let mut over = Vec::new();

        // kappa is per-OD for the reluctance variant, global otherwise.
        let block_kappa = match params {
            ProtocolParams::PapHe { reluctance, .. } => {
                let od_costs: Vec<f64> = members.iter().map(|&k| costs[k]).collect();
                Some(pap_kappa_he(&od_costs, *reluctance)?)
            }
            ProtocolParams::PapFixed { kappa, .. } => Some(*kappa),
            ProtocolParams::Npsd { .. } => None,
        };

        for (lk, &k) in members.iter().enumerate() {
            match params {
                ProtocolParams::Npsd { theta, .. } => {
                    let theta = theta.for_od(&od.id).expect("validated above");
                    let candidates: Vec<usize> = members
                        .iter()
                        .copied()
                        .filter(|&p| p != k && costs[p] < costs[k] - epsilon)
                        .collect();
                    if candidates.is_empty() {
                        continue;
                    }
                    let n = candidates.len() as f64;
                    terms.clear();
                    for &p in &candidates {
                        let t = npsd_term(theta, costs[k] - costs[p]);
                        let lp = members.iter().position(|&r| r == p).unwrap();
                        rho[lk * m + lp] = t / n;
                        terms.push(t);
                    }
                    // Each term is <= 1, so the sorted sum is <= |R_k| exactly
                    // and the quotient is <= 1 exactly.
                    row_sums[lk] = sorted_sum(&mut terms) / n;
                }
                ProtocolParams::PapFixed { .. } | ProtocolParams::PapHe { .. } => {
                    let kappa = block_kappa.expect("set above");
                    terms.clear();
                    for (lp, &p) in members.iter().enumerate() {
                        if p == k {
                            continue;
                        }
                        let diff = costs[k] - costs[p];
                        if diff > epsilon {
                            let r = kappa * diff;
                            rho[lk * m + lp] = r;
                            terms.push(r);
                        }
                    }
                    row_sums[lk] = sorted_sum(&mut terms);
                    if row_sums[lk] > 1.0 {
                        over.push(lk);
                    }
                }
            }
        }

        blocks.push(SwapBlock {
            od: w,
            members,
            rho,
            row_sums,
            over_swapping_rows: over,
        });
    }

    Ok(SwapMatrix { blocks })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{Link, NetworkData, OdPair, Route};
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// One OD pair with n disjoint single-link routes.
    fn parallel_net(n: usize) -> Network {
        Network::from_data(NetworkData {
            links: (0..n)
                .map(|i| Link {
                    id: format!("l{i}"),
                    free_flow_time: 1.0,
                    capacity: 10.0,
                })
                .collect(),
            od_pairs: vec![OdPair {
                id: "w".into(),
                origin: "o".into(),
                destination: "d".into(),
                demand: 10.0,
            }],
            routes: (0..n)
                .map(|i| Route {
                    id: format!("r{i}"),
                    od_pair: "w".into(),
                    links: vec![format!("l{i}")],
                })
                .collect(),
        })
        .unwrap()
    }

    #[test]
    fn candidate_set_strictness() {
        let net = parallel_net(4);
        let costs = [10.0, 8.0, 8.0, 12.0];
        let set = candidate_set(&net, "r0", &costs, 0.0).unwrap();
        assert_eq!(set, vec!["r1".to_string(), "r2".to_string()]);
        // equal costs are not candidates
        let set = candidate_set(&net, "r1", &costs, 0.0).unwrap();
        assert!(set.is_empty());
        // the unique minimum has no candidates either
        let costs = [10.0, 8.0, 9.0, 12.0];
        assert!(candidate_set(&net, "r1", &costs, 0.0).unwrap().is_empty());
    }

    #[test]
    fn candidate_set_unknown_route() {
        let net = parallel_net(2);
        assert!(candidate_set(&net, "nope", &[1.0, 2.0], 0.0).is_err());
    }

    #[test]
    fn npsd_rate_value() {
        // theta=0.1, diff=5, |R|=2: 0.5*(1 - e^{-0.5}) = 0.1967346701436833
        let net = parallel_net(3);
        let costs = [15.0, 10.0, 10.0];
        let params = ProtocolParams::npsd(0.1);
        let r = npsd_rate(&net, "r0", "r1", &costs, &params).unwrap();
        assert_relative_eq!(r, 0.1967346701436833, max_relative = 1e-14);
    }

    #[test]
    fn npsd_rate_zero_when_not_cheaper() {
        let net = parallel_net(2);
        let params = ProtocolParams::npsd(0.5);
        assert_eq!(
            npsd_rate(&net, "r0", "r1", &[10.0, 10.0], &params).unwrap(),
            0.0
        );
        assert_eq!(
            npsd_rate(&net, "r0", "r1", &[10.0, 12.0], &params).unwrap(),
            0.0
        );
    }

    #[test]
    fn npsd_rate_saturates_below_one() {
        let net = parallel_net(2);
        let params = ProtocolParams::npsd(1e6);
        let r = npsd_rate(&net, "r0", "r1", &[1e6, 0.0], &params).unwrap();
        assert!(r <= 1.0 && r > 0.9999);
    }

    #[test]
    fn npsd_rate_rejects_nonpositive_theta() {
        let net = parallel_net(2);
        let params = ProtocolParams::npsd(0.0);
        assert!(npsd_rate(&net, "r0", "r1", &[2.0, 1.0], &params).is_err());
    }

    #[test]
    fn npsd_rate_rejects_cross_od() {
        let mut data = parallel_net(2).data().clone();
        data.od_pairs.push(OdPair {
            id: "w2".into(),
            origin: "o".into(),
            destination: "d".into(),
            demand: 1.0,
        });
        data.links.push(Link {
            id: "lx".into(),
            free_flow_time: 1.0,
            capacity: 1.0,
        });
        data.routes.push(Route {
            id: "rx".into(),
            od_pair: "w2".into(),
            links: vec!["lx".into()],
        });
        let net = Network::from_data(data).unwrap();
        let params = ProtocolParams::npsd(0.1);
        assert!(npsd_rate(&net, "r0", "rx", &[2.0, 1.0, 1.0], &params).is_err());
    }

    #[test]
    fn pap_fixed_values() {
        let net = parallel_net(2);
        let params = ProtocolParams::pap_fixed(0.01);
        let r = pap_rate_fixed(&net, "r0", "r1", &[15.0, 10.0], &params).unwrap();
        assert_relative_eq!(r, 0.05, max_relative = 1e-15);
        // over-unity rate is returned as-is
        let params = ProtocolParams::pap_fixed(0.5);
        let r = pap_rate_fixed(&net, "r0", "r1", &[15.0, 10.0], &params).unwrap();
        assert_relative_eq!(r, 2.5, max_relative = 1e-15);
        // ...and the matrix constructor flags the row
        let m = swap_matrix(&net, &[15.0, 10.0], &params).unwrap();
        assert!(m.has_over_swapping());
        assert_eq!(m.over_swapping_routes(&net), vec!["r0"]);
    }

    #[test]
    fn smith_wisten_bound_values() {
        let net8 = parallel_net(8);
        assert_relative_eq!(
            smith_wisten_kappa_bound(&net8, 20.0).unwrap(),
            0.00625,
            max_relative = 1e-15
        );
        let net1 = parallel_net(1);
        assert_eq!(smith_wisten_kappa_bound(&net1, 1.0).unwrap(), 1.0);
        let net2 = parallel_net(2);
        assert_relative_eq!(
            smith_wisten_kappa_bound(&net1, 5.0).unwrap(),
            2.0 * smith_wisten_kappa_bound(&net2, 5.0).unwrap(),
            max_relative = 1e-15
        );
        assert!(smith_wisten_kappa_bound(&net2, 0.0).is_err());
    }

    #[test]
    fn pap_kappa_he_values() {
        // all equal costs: denominator is just H
        assert_relative_eq!(
            pap_kappa_he(&[7.0, 7.0, 7.0], 2.0).unwrap(),
            0.5,
            max_relative = 1e-15
        );
        // costs (10, 8), H=2: denominator 2 + 0 + 2 = 4
        assert_relative_eq!(pap_kappa_he(&[10.0, 8.0], 2.0).unwrap(), 0.25, max_relative = 1e-15);
        // monotone decreasing in H
        assert!(pap_kappa_he(&[10.0, 8.0], 3.0).unwrap() < pap_kappa_he(&[10.0, 8.0], 2.0).unwrap());
        assert!(pap_kappa_he(&[10.0, 8.0], 0.0).is_err());
    }

    #[test]
    fn swap_matrix_equal_costs_is_zero() {
        let net = parallel_net(3);
        for params in [
            ProtocolParams::npsd(0.3),
            ProtocolParams::pap_fixed(0.01),
            ProtocolParams::pap_he(1.0),
        ] {
            let m = swap_matrix(&net, &[9.0, 9.0, 9.0], &params).unwrap();
            let block = &m.blocks()[0];
            for k in 0..3 {
                for p in 0..3 {
                    assert_eq!(block.rate(k, p), 0.0);
                }
            }
        }
    }

    #[test]
    fn swap_matrix_worked_example() {
        // one OD pair, costs (12, 10, 10), theta=0.2:
        // row 0 has |R|=2, both entries 0.5*(1 - e^{-0.4})
        let net = parallel_net(3);
        let m = swap_matrix(&net, &[12.0, 10.0, 10.0], &ProtocolParams::npsd(0.2)).unwrap();
        let block = &m.blocks()[0];
        let expected = 0.16483997698218035;
        assert_relative_eq!(block.rate(0, 1), expected, max_relative = 1e-14);
        assert_relative_eq!(block.rate(0, 2), expected, max_relative = 1e-14);
        assert_eq!(block.rate(0, 0), 0.0);
        for p in 0..3 {
            assert_eq!(block.rate(1, p), 0.0);
            assert_eq!(block.rate(2, p), 0.0);
        }
    }

    #[test]
    fn npsd_rate_monotone_in_diff_and_theta() {
        let net = parallel_net(2);
        let mut prev = 0.0;
        for i in 1..50 {
            let diff = i as f64 * 0.5;
            let r = npsd_rate(
                &net,
                "r0",
                "r1",
                &[10.0 + diff, 10.0],
                &ProtocolParams::npsd(0.2),
            )
            .unwrap();
            assert!(r > prev);
            prev = r;
        }
        let mut prev = 0.0;
        for i in 1..50 {
            let theta = i as f64 * 0.05;
            let r = npsd_rate(&net, "r0", "r1", &[14.0, 10.0], &ProtocolParams::npsd(theta))
                .unwrap();
            assert!(r > prev);
            prev = r;
        }
    }

    #[test]
    fn npsd_rows_never_over_swap_randomized() {
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0001);
        for _ in 0..2000 {
            let n = rng.gen_range(2..=8);
            let net = parallel_net(n);
            let costs: Vec<f64> = (0..n).map(|_| rng.gen_range(0.1..100.0)).collect();
            let theta = 10f64.powf(rng.gen_range(-3.0..2.0));
            let m = swap_matrix(&net, &costs, &ProtocolParams::npsd(theta)).unwrap();
            let block = &m.blocks()[0];
            for k in 0..n {
                let s = block.row_sum(k);
                assert!((0.0..=1.0).contains(&s), "row sum {s} out of [0,1]");
                // contrary sign: rho_kp * (C_k - C_p) >= 0
                for p in 0..n {
                    assert!(block.rate(k, p) * (costs[k] - costs[p]) >= 0.0);
                }
            }
            assert!(!m.has_over_swapping());
        }
    }

    #[test]
    fn pap_at_smith_wisten_bound_never_over_swaps() {
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0002);
        for _ in 0..500 {
            let n = rng.gen_range(2..=8);
            let net = parallel_net(n);
            let b = rng.gen_range(10.0..200.0);
            let costs: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..1.0) * b).collect();
            let kappa = smith_wisten_kappa_bound(&net, b).unwrap();
            let m = swap_matrix(&net, &costs, &ProtocolParams::pap_fixed(kappa)).unwrap();
            assert!(!m.has_over_swapping());
            for k in 0..n {
                assert!(m.blocks()[0].row_sum(k) <= 1.0);
            }
        }
    }

    #[test]
    fn per_od_theta_applies_blockwise() {
        let mut data = parallel_net(2).data().clone();
        data.od_pairs.push(OdPair {
            id: "w2".into(),
            origin: "o".into(),
            destination: "d".into(),
            demand: 10.0,
        });
        for i in 2..4 {
            data.links.push(Link {
                id: format!("l{i}"),
                free_flow_time: 1.0,
                capacity: 10.0,
            });
            data.routes.push(Route {
                id: format!("r{i}"),
                od_pair: "w2".into(),
                links: vec![format!("l{i}")],
            });
        }
        let net = Network::from_data(data).unwrap();
        let theta: BTreeMap<String, f64> =
            [("w".to_string(), 0.1), ("w2".to_string(), 0.4)].into();
        let params = ProtocolParams::Npsd {
            theta: Theta::PerOd(theta),
            cost_epsilon: 0.0,
        };
        // identical cost gaps, different sensitivities per OD pair
        let costs = [15.0, 10.0, 15.0, 10.0];
        let m = swap_matrix(&net, &costs, &params).unwrap();
        let slow = m.rate_between(0, 1);
        let fast = m.rate_between(2, 3);
        assert_relative_eq!(slow, 1.0 - (-0.5f64).exp(), max_relative = 1e-14);
        assert_relative_eq!(fast, 1.0 - (-2.0f64).exp(), max_relative = 1e-14);
        assert!(fast > slow);

        // a missing OD pair in the map is rejected
        let partial = ProtocolParams::Npsd {
            theta: Theta::PerOd([("w".to_string(), 0.1)].into()),
            cost_epsilon: 0.0,
        };
        assert!(swap_matrix(&net, &costs, &partial).is_err());
    }

    #[test]
    fn protocol_params_serde_shapes() {
        let p = ProtocolParams::npsd(0.1);
        let json = serde_json::to_string(&p).unwrap();
        assert_eq!(json, r#"{"variant":"npsd","theta":0.1,"cost_epsilon":0.0}"#);
        let back: ProtocolParams = serde_json::from_str(&json).unwrap();
        assert!(matches!(back, ProtocolParams::Npsd { .. }));

        let per_od: ProtocolParams = serde_json::from_str(
            r#"{"variant":"npsd","theta":{"w1":0.1,"w2":0.2}}"#,
        )
        .unwrap();
        match per_od {
            ProtocolParams::Npsd { theta, .. } => {
                assert_eq!(theta.for_od("w2"), Some(0.2));
                assert_eq!(theta.for_od("w3"), None);
            }
            _ => panic!("wrong variant"),
        }

        let pap: ProtocolParams =
            serde_json::from_str(r#"{"variant":"pap_fixed","kappa":0.01}"#).unwrap();
        assert!(matches!(pap, ProtocolParams::PapFixed { .. }));
        let he: ProtocolParams =
            serde_json::from_str(r#"{"variant":"pap_he","reluctance":5.0}"#).unwrap();
        assert!(matches!(he, ProtocolParams::PapHe { .. }));
    }
}
