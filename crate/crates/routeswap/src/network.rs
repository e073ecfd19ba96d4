//! Path-based traffic network: links with BPR cost functions, explicit route
//! sets grouped by OD pair, and nonnegative demand-conserving flow states.
//!
//! The network is immutable after construction and all operations here are
//! pure functions, so values can be shared freely across worker threads.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Absolute tolerance for per-OD demand conservation checks.
pub const DEMAND_TOLERANCE: f64 = 1e-9;

/// A directed link with BPR parameters: free-flow time (min) and capacity
/// (pcu/min).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Link {
    pub id: String,
    pub free_flow_time: f64,
    pub capacity: f64,
}

/// An origin-destination pair with a fixed travel demand (pcu/min).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OdPair {
    pub id: String,
    pub origin: String,
    pub destination: String,
    pub demand: f64,
}

/// A route: an ordered list of link ids serving exactly one OD pair.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Route {
    pub id: String,
    pub od_pair: String,
    pub links: Vec<String>,
}

/// Raw network description as read from (or written to) a network JSON file.
///
/// This is the lenient form: it can hold dangling references and bad
/// parameters, which [`validate`] reports as data. [`Network::from_data`]
/// refuses to compile an invalid description.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NetworkData {
    pub links: Vec<Link>,
    pub od_pairs: Vec<OdPair>,
    pub routes: Vec<Route>,
}

/// One invariant violation found in a [`NetworkData`], naming the entity.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    /// "link", "route" or "od_pair".
    pub entity_kind: &'static str,
    pub entity_id: String,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} `{}`: {}",
            self.entity_kind, self.entity_id, self.message
        )
    }
}

fn violation(kind: &'static str, id: &str, message: impl Into<String>) -> Violation {
    Violation {
        entity_kind: kind,
        entity_id: id.to_string(),
        message: message.into(),
    }
}

/// Checks every structural and numeric invariant of a raw network
/// description. Returns an empty list iff the description is well-formed.
pub fn validate(data: &NetworkData) -> Vec<Violation> {
    let mut out = Vec::new();

    let mut link_ids = HashMap::new();
    for link in &data.links {
        if link_ids.insert(link.id.as_str(), ()).is_some() {
            out.push(violation("link", &link.id, "duplicate link id"));
        }
        if !(link.free_flow_time > 0.0) {
            out.push(violation(
                "link",
                &link.id,
                format!("free_flow_time must be > 0, got {}", link.free_flow_time),
            ));
        }
        if !(link.capacity > 0.0) {
            out.push(violation(
                "link",
                &link.id,
                format!("capacity must be > 0, got {}", link.capacity),
            ));
        }
    }

    let mut od_ids = HashMap::new();
    for od in &data.od_pairs {
        if od_ids.insert(od.id.as_str(), ()).is_some() {
            out.push(violation("od_pair", &od.id, "duplicate OD-pair id"));
        }
        if !(od.demand >= 0.0) {
            out.push(violation(
                "od_pair",
                &od.id,
                format!("demand must be >= 0, got {}", od.demand),
            ));
        }
    }

    let mut route_ids = HashMap::new();
    let mut routes_per_od: HashMap<&str, usize> = HashMap::new();
    for route in &data.routes {
        if route_ids.insert(route.id.as_str(), ()).is_some() {
            out.push(violation("route", &route.id, "duplicate route id"));
        }
        if route.links.is_empty() {
            out.push(violation("route", &route.id, "route has no links"));
        }
        for link_id in &route.links {
            if !link_ids.contains_key(link_id.as_str()) {
                out.push(violation(
                    "route",
                    &route.id,
                    format!("references missing link `{link_id}`"),
                ));
            }
        }
        if od_ids.contains_key(route.od_pair.as_str()) {
            *routes_per_od.entry(route.od_pair.as_str()).or_default() += 1;
        } else {
            out.push(violation(
                "route",
                &route.id,
                format!("references missing OD pair `{}`", route.od_pair),
            ));
        }
    }

    for od in &data.od_pairs {
        if routes_per_od.get(od.id.as_str()).copied().unwrap_or(0) == 0 {
            out.push(violation("od_pair", &od.id, "no route serves this OD pair"));
        }
    }

    out
}

/// Compiled, index-resolved network. Construction fails on any
/// [`Violation`], so every `Network` is well-formed by construction.
#[derive(Debug, Clone)]
pub struct Network {
    data: NetworkData,
    link_index: HashMap<String, usize>,
    route_index: HashMap<String, usize>,
    od_index: HashMap<String, usize>,
    /// Per route, the indices of its links (route order preserved).
    route_links: Vec<Vec<usize>>,
    /// Per link, the indices of the routes that use it.
    link_routes: Vec<Vec<usize>>,
    /// Per OD pair, the indices of its routes (input order preserved).
    od_routes: Vec<Vec<usize>>,
    /// Per route, the index of its OD pair.
    route_od: Vec<usize>,
}

impl Network {
    pub fn from_data(data: NetworkData) -> Result<Self> {
        let violations = validate(&data);
        if !violations.is_empty() {
            return Err(Error::InvalidNetwork(violations));
        }

        let link_index: HashMap<String, usize> = data
            .links
            .iter()
            .enumerate()
            .map(|(i, l)| (l.id.clone(), i))
            .collect();
        let route_index: HashMap<String, usize> = data
            .routes
            .iter()
            .enumerate()
            .map(|(i, r)| (r.id.clone(), i))
            .collect();
        let od_index: HashMap<String, usize> = data
            .od_pairs
            .iter()
            .enumerate()
            .map(|(i, w)| (w.id.clone(), i))
            .collect();

        let route_links: Vec<Vec<usize>> = data
            .routes
            .iter()
            .map(|r| r.links.iter().map(|l| link_index[l.as_str()]).collect())
            .collect();
        let mut link_routes = vec![Vec::new(); data.links.len()];
        for (k, links) in route_links.iter().enumerate() {
            for &a in links {
                link_routes[a].push(k);
            }
        }
        let route_od: Vec<usize> = data
            .routes
            .iter()
            .map(|r| od_index[r.od_pair.as_str()])
            .collect();
        let mut od_routes = vec![Vec::new(); data.od_pairs.len()];
        for (k, &w) in route_od.iter().enumerate() {
            od_routes[w].push(k);
        }

        Ok(Self {
            data,
            link_index,
            route_index,
            od_index,
            route_links,
            link_routes,
            od_routes,
            route_od,
        })
    }

    pub fn data(&self) -> &NetworkData {
        &self.data
    }

    pub fn links(&self) -> &[Link] {
        &self.data.links
    }

    pub fn routes(&self) -> &[Route] {
        &self.data.routes
    }

    pub fn od_pairs(&self) -> &[OdPair] {
        &self.data.od_pairs
    }

    pub fn num_links(&self) -> usize {
        self.data.links.len()
    }

    pub fn num_routes(&self) -> usize {
        self.data.routes.len()
    }

    pub fn num_od_pairs(&self) -> usize {
        self.data.od_pairs.len()
    }

    pub fn link_position(&self, id: &str) -> Option<usize> {
        self.link_index.get(id).copied()
    }

    pub fn route_position(&self, id: &str) -> Option<usize> {
        self.route_index.get(id).copied()
    }

    pub fn od_position(&self, id: &str) -> Option<usize> {
        self.od_index.get(id).copied()
    }

    /// Link indices of a route, in route order.
    pub fn links_of_route(&self, route: usize) -> &[usize] {
        &self.route_links[route]
    }

    /// Route indices of an OD pair, in input order.
    pub fn routes_of_od(&self, od: usize) -> &[usize] {
        &self.od_routes[od]
    }

    pub fn od_of_route(&self, route: usize) -> usize {
        self.route_od[route]
    }

    /// Returns `true` if the route uses the link (the 0-1 incidence).
    pub fn route_uses_link(&self, route: usize, link: usize) -> bool {
        self.route_links[route].contains(&link)
    }

    /// Aggregates a path-flow state into link flows: `v_a = sum_k f_k` over
    /// routes k containing link a.
    ///
    /// Summation per link is done in ascending value order so that the result
    /// is invariant under relabelings that permute equal-valued routes; this
    /// keeps symmetric networks bit-exactly symmetric.
    pub fn link_flows(&self, f: &FlowState) -> Result<Vec<f64>> {
        if f.flows.len() != self.num_routes() {
            return Err(Error::DimensionMismatch {
                what: "route flows",
                expected: self.num_routes(),
                got: f.flows.len(),
            });
        }
        let mut v = vec![0.0; self.num_links()];
        let mut terms: Vec<f64> = Vec::new();
        for (a, routes) in self.link_routes.iter().enumerate() {
            terms.clear();
            terms.extend(routes.iter().map(|&k| f.flows[k]));
            v[a] = sorted_sum(&mut terms);
        }
        Ok(v)
    }

    /// BPR link travel times: `c_a = t_a * (1 + 0.15 * (v_a / O_a)^4)`.
    pub fn link_costs(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.num_links() {
            return Err(Error::DimensionMismatch {
                what: "link flows",
                expected: self.num_links(),
                got: v.len(),
            });
        }
        let mut c = vec![0.0; self.num_links()];
        for (a, link) in self.data.links.iter().enumerate() {
            if v[a] < 0.0 {
                return Err(Error::NegativeLinkFlow {
                    link: link.id.clone(),
                    value: v[a],
                });
            }
            c[a] = bpr_cost(link.free_flow_time, link.capacity, v[a]);
        }
        Ok(c)
    }

    /// Additive route costs: `C_k = sum of c_a` over the links of route k.
    pub fn route_costs(&self, c: &[f64]) -> Result<Vec<f64>> {
        if c.len() != self.num_links() {
            return Err(Error::DimensionMismatch {
                what: "link costs",
                expected: self.num_links(),
                got: c.len(),
            });
        }
        Ok(self
            .route_links
            .iter()
            .map(|links| links.iter().map(|&a| c[a]).sum())
            .collect())
    }

    /// Full cost pipeline at a flow state: link flows, link costs, route costs.
    pub fn costs_at(&self, f: &FlowState) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
        let v = self.link_flows(f)?;
        let c = self.link_costs(&v)?;
        let route = self.route_costs(&c)?;
        Ok((v, c, route))
    }

    /// Beckmann potential at a link-flow vector: per link, the integral of
    /// the BPR cost from 0 to `v_a`, summed over links.
    ///
    /// For the BPR function this is `t*v + 0.03*t*v^5/O^4`.
    pub fn beckmann_potential(&self, v: &[f64]) -> Result<f64> {
        if v.len() != self.num_links() {
            return Err(Error::DimensionMismatch {
                what: "link flows",
                expected: self.num_links(),
                got: v.len(),
            });
        }
        let mut total = 0.0;
        for (a, link) in self.data.links.iter().enumerate() {
            if v[a] < 0.0 {
                return Err(Error::NegativeLinkFlow {
                    link: link.id.clone(),
                    value: v[a],
                });
            }
            let t = link.free_flow_time;
            let ratio = v[a] / link.capacity;
            total += t * v[a] + 0.03 * t * v[a] * ratio.powi(4);
        }
        Ok(total)
    }

    /// Checks Eq.-(7)-style feasibility: nonnegativity and per-OD demand
    /// conservation within [`DEMAND_TOLERANCE`].
    pub fn check_feasible(&self, f: &FlowState) -> Result<()> {
        if f.flows.len() != self.num_routes() {
            return Err(Error::DimensionMismatch {
                what: "route flows",
                expected: self.num_routes(),
                got: f.flows.len(),
            });
        }
        for (k, &flow) in f.flows.iter().enumerate() {
            if !(flow >= 0.0) {
                return Err(Error::Infeasible(format!(
                    "flow on route `{}` is negative: {}",
                    self.data.routes[k].id, flow
                )));
            }
        }
        let mut terms: Vec<f64> = Vec::new();
        for (w, od) in self.data.od_pairs.iter().enumerate() {
            terms.clear();
            terms.extend(self.od_routes[w].iter().map(|&k| f.flows[k]));
            let total = sorted_sum(&mut terms);
            if (total - od.demand).abs() > DEMAND_TOLERANCE {
                return Err(Error::Infeasible(format!(
                    "OD pair `{}` carries {} instead of demand {} (|diff| > {:e})",
                    od.id, total, od.demand, DEMAND_TOLERANCE
                )));
            }
        }
        Ok(())
    }
}

/// BPR travel time for one link.
#[inline]
pub fn bpr_cost(free_flow_time: f64, capacity: f64, flow: f64) -> f64 {
    free_flow_time * (1.0 + 0.15 * (flow / capacity).powi(4))
}

/// Sums in ascending value order (sorts the scratch buffer in place).
///
/// Order-canonical so that permuting equal inputs cannot change the result,
/// and summing small terms first keeps accumulation error low.
pub(crate) fn sorted_sum(terms: &mut [f64]) -> f64 {
    terms.sort_by(f64::total_cmp);
    terms.iter().sum()
}

/// A path-flow vector indexed like `Network::routes()`, stamped with a day.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowState {
    pub flows: Vec<f64>,
    pub day: u64,
}

impl FlowState {
    pub fn new(flows: Vec<f64>, day: u64) -> Self {
        Self { flows, day }
    }

    /// Euclidean distance to another flow state.
    pub fn distance(&self, other: &FlowState) -> f64 {
        self.flows
            .iter()
            .zip(&other.flows)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    /// Same flows, restamped to a different day.
    pub fn at_day(&self, day: u64) -> FlowState {
        FlowState {
            flows: self.flows.clone(),
            day,
        }
    }
}
