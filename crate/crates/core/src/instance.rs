//! Network and scenario data: demand nodes, candidate sites, coverage, and
//! equal-probability demand scenarios.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// External node identifier as it appears in instance files.
pub type NodeId = u32;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Site {
    pub opening_cost: u64,
    pub capacity: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub id: NodeId,
    pub x: f64,
    pub y: f64,
    pub is_demand: bool,
    pub site: Option<Site>,
}

/// A facility-location network.
///
/// Demand nodes and candidate sites are addressed by dense positions
/// (`0..num_demand()`, `0..num_sites()`) in order of appearance; the
/// original ids are kept for I/O.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    nodes: Vec<Node>,
    d_max: f64,
    distances: Option<Vec<Vec<f64>>>,
    demand: Vec<usize>,
    sites: Vec<usize>,
    /// `covering[i]` lists the site positions within reach of demand node `i`.
    covering: Vec<Vec<usize>>,
}

impl Instance {
    /// Builds and validates an instance. `distances`, when given, is a full
    /// node-by-node matrix overriding the Euclidean metric.
    pub fn new(nodes: Vec<Node>, d_max: f64, distances: Option<Vec<Vec<f64>>>) -> Result<Self> {
        if !(d_max.is_finite() && d_max > 0.0) {
            return Err(Error::Parse(format!("d_max: must be a positive number, got {d_max}")));
        }
        let mut seen = HashMap::new();
        for (p, n) in nodes.iter().enumerate() {
            if !(n.x.is_finite() && n.y.is_finite()) {
                return Err(Error::Parse(format!("nodes[{p}]: non-finite coordinates")));
            }
            if seen.insert(n.id, p).is_some() {
                return Err(Error::Parse(format!("nodes[{p}].id: duplicate id {}", n.id)));
            }
            if n.site.is_some() && !n.is_demand {
                return Err(Error::Parse(format!(
                    "nodes[{p}]: J must be a subset of I (site {} is not a demand node)",
                    n.id
                )));
            }
        }
        if let Some(d) = &distances {
            if d.len() != nodes.len() || d.iter().any(|r| r.len() != nodes.len()) {
                return Err(Error::Parse(format!(
                    "distances: expected a {0}x{0} matrix",
                    nodes.len()
                )));
            }
            for a in 0..d.len() {
                if d[a][a] != 0.0 {
                    return Err(Error::Parse(format!("distances[{a}][{a}]: must be 0")));
                }
                for b in 0..d.len() {
                    if !(d[a][b].is_finite() && d[a][b] >= 0.0) {
                        return Err(Error::Parse(format!("distances[{a}][{b}]: must be nonnegative")));
                    }
                    if d[a][b] != d[b][a] {
                        return Err(Error::Parse(format!("distances[{a}][{b}]: matrix is not symmetric")));
                    }
                }
            }
        }
        let demand: Vec<usize> = (0..nodes.len()).filter(|&p| nodes[p].is_demand).collect();
        let sites: Vec<usize> = (0..nodes.len()).filter(|&p| nodes[p].site.is_some()).collect();
        let mut inst = Instance { nodes, d_max, distances, demand, sites, covering: Vec::new() };
        inst.covering = (0..inst.demand.len())
            .map(|i| {
                (0..inst.sites.len())
                    .filter(|&j| inst.node_distance(inst.demand[i], inst.sites[j]) <= inst.d_max)
                    .collect()
            })
            .collect();
        Ok(inst)
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn d_max(&self) -> f64 {
        self.d_max
    }

    pub fn num_demand(&self) -> usize {
        self.demand.len()
    }

    pub fn num_sites(&self) -> usize {
        self.sites.len()
    }

    pub fn demand_node(&self, i: usize) -> &Node {
        &self.nodes[self.demand[i]]
    }

    pub fn site_node(&self, j: usize) -> &Node {
        &self.nodes[self.sites[j]]
    }

    pub fn site(&self, j: usize) -> Site {
        self.nodes[self.sites[j]].site.expect("site position")
    }

    pub fn opening_cost(&self, j: usize) -> u64 {
        self.site(j).opening_cost
    }

    pub fn capacity(&self, j: usize) -> u64 {
        self.site(j).capacity
    }

    pub fn opening_costs(&self) -> Vec<u64> {
        (0..self.num_sites()).map(|j| self.opening_cost(j)).collect()
    }

    /// Site positions that cover demand node `i`.
    pub fn covering_sites(&self, i: usize) -> &[usize] {
        &self.covering[i]
    }

    /// Whether demand position `i` is within reach of site position `j`.
    pub fn covers(&self, i: usize, j: usize) -> bool {
        self.covering[i].contains(&j)
    }

    /// Distance between demand position `i` and site position `j`.
    pub fn distance(&self, i: usize, j: usize) -> f64 {
        self.node_distance(self.demand[i], self.sites[j])
    }

    fn node_distance(&self, a: usize, b: usize) -> f64 {
        match &self.distances {
            Some(d) => d[a][b],
            None => {
                let (na, nb) = (&self.nodes[a], &self.nodes[b]);
                (na.x - nb.x).hypot(na.y - nb.y)
            }
        }
    }

    pub fn demand_position(&self, id: NodeId) -> Option<usize> {
        self.demand.iter().position(|&p| self.nodes[p].id == id)
    }

    pub fn site_position(&self, id: NodeId) -> Option<usize> {
        self.sites.iter().position(|&p| self.nodes[p].id == id)
    }

    /// Total opening cost of a first-stage decision.
    pub fn cost_of(&self, open: &[bool]) -> u64 {
        open.iter().enumerate().filter(|(_, &o)| o).map(|(j, _)| self.opening_cost(j)).sum()
    }

    /// Step between consecutive achievable cost levels: the gcd of the
    /// nonzero opening costs (1 when there are none).
    pub fn cost_step(&self) -> u64 {
        let g = (0..self.num_sites()).map(|j| self.opening_cost(j)).fold(0, gcd);
        g.max(1)
    }
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Coverage indicator by node id: 1 when the demand node is within `d_max`
/// of the site (boundary inclusive).
pub fn coverage(instance: &Instance, i: NodeId, j: NodeId) -> Result<u8> {
    let ip = instance
        .demand_position(i)
        .ok_or_else(|| invalid(format!("unknown demand node id {i}")))?;
    let jp = instance
        .site_position(j)
        .ok_or_else(|| invalid(format!("unknown site id {j}")))?;
    Ok(covered(instance.distance(ip, jp), instance.d_max()) as u8)
}

pub(crate) fn covered(distance: f64, d_max: f64) -> bool {
    distance <= d_max
}

/// Equal-probability demand scenarios, `demand[s][i]` for demand position `i`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScenarioSet {
    demand: Vec<Vec<u64>>,
    totals: Vec<u64>,
}

impl ScenarioSet {
    pub fn new(demand: Vec<Vec<u64>>) -> Result<Self> {
        if demand.is_empty() {
            return Err(invalid("a scenario set needs at least one scenario"));
        }
        let width = demand[0].len();
        if let Some(s) = demand.iter().position(|r| r.len() != width) {
            return Err(invalid(format!("scenario {s} has {} entries, expected {width}", demand[s].len())));
        }
        let totals = demand.iter().map(|r| r.iter().sum()).collect();
        Ok(ScenarioSet { demand, totals })
    }

    /// Number of scenarios.
    pub fn len(&self) -> usize {
        self.demand.len()
    }

    pub fn is_empty(&self) -> bool {
        self.demand.is_empty()
    }

    pub fn num_nodes(&self) -> usize {
        self.demand[0].len()
    }

    pub fn demand(&self, s: usize, i: usize) -> u64 {
        self.demand[s][i]
    }

    pub fn scenario(&self, s: usize) -> &[u64] {
        &self.demand[s]
    }

    pub fn rows(&self) -> &[Vec<u64>] {
        &self.demand
    }

    /// Total demand of scenario `s`.
    pub fn total(&self, s: usize) -> u64 {
        self.totals[s]
    }

    pub fn totals(&self) -> &[u64] {
        &self.totals
    }

    fn check_against(&self, instance: &Instance) -> Result<()> {
        if self.num_nodes() != instance.num_demand() {
            return Err(Error::Parse(format!(
                "scenarios: rows have {} entries but the instance has {} demand nodes",
                self.num_nodes(),
                instance.num_demand()
            )));
        }
        Ok(())
    }
}

/// Confidence level expressed through the tail size `k` out of `n` scenarios.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RiskSpec {
    k: usize,
    n: usize,
}

impl RiskSpec {
    pub fn new(k: usize, n: usize) -> Result<Self> {
        if n == 0 || k == 0 || k > n {
            return Err(invalid(format!("k must lie in [1, {n}], got {k}")));
        }
        Ok(RiskSpec { k, n })
    }

    /// `k = round(n (1 - alpha))`.
    pub fn from_alpha(alpha: f64, n: usize) -> Result<Self> {
        if !(0.0..1.0).contains(&alpha) {
            return Err(invalid(format!("alpha must lie in [0, 1), got {alpha}")));
        }
        let k = (n as f64 * (1.0 - alpha)).round() as usize;
        Self::new(k, n)
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn alpha(&self) -> f64 {
        1.0 - self.k as f64 / self.n as f64
    }
}

// ---- JSON format ----

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawNode {
    id: NodeId,
    x: f64,
    y: f64,
    is_site: bool,
    #[serde(default = "yes", skip_serializing_if = "is_true")]
    is_demand: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    opening_cost: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    capacity: Option<i64>,
}

fn yes() -> bool {
    true
}

fn is_true(b: &bool) -> bool {
    *b
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDocument {
    nodes: Vec<RawNode>,
    d_max: f64,
    scenarios: Vec<Vec<i64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    distances: Option<Vec<Vec<f64>>>,
}

/// Parses the JSON instance format.
pub fn parse_instance(bytes: &[u8]) -> Result<(Instance, ScenarioSet)> {
    let raw: RawDocument = serde_json::from_slice(bytes).map_err(|e| Error::Parse(e.to_string()))?;
    let mut nodes = Vec::with_capacity(raw.nodes.len());
    for (p, n) in raw.nodes.into_iter().enumerate() {
        let site = if n.is_site {
            let field = |v: Option<i64>, name: &str| -> Result<u64> {
                let v = v.ok_or_else(|| Error::Parse(format!("nodes[{p}].{name}: required for a site")))?;
                u64::try_from(v).map_err(|_| Error::Parse(format!("nodes[{p}].{name}: negative value {v}")))
            };
            Some(Site {
                opening_cost: field(n.opening_cost, "opening_cost")?,
                capacity: field(n.capacity, "capacity")?,
            })
        } else {
            if n.opening_cost.is_some() || n.capacity.is_some() {
                return Err(Error::Parse(format!(
                    "nodes[{p}]: opening_cost/capacity given for a node that is not a site"
                )));
            }
            None
        };
        nodes.push(Node { id: n.id, x: n.x, y: n.y, is_demand: n.is_demand, site });
    }
    let instance = Instance::new(nodes, raw.d_max, raw.distances)?;
    if raw.scenarios.is_empty() {
        return Err(Error::Parse("scenarios: at least one scenario is required".into()));
    }
    let mut demand = Vec::with_capacity(raw.scenarios.len());
    for (s, row) in raw.scenarios.into_iter().enumerate() {
        if row.len() != instance.num_demand() {
            return Err(Error::Parse(format!(
                "scenarios[{s}]: {} entries but {} demand nodes",
                row.len(),
                instance.num_demand()
            )));
        }
        let row = row
            .into_iter()
            .enumerate()
            .map(|(i, q)| {
                u64::try_from(q).map_err(|_| Error::Parse(format!("scenarios[{s}][{i}]: negative demand {q}")))
            })
            .collect::<Result<Vec<u64>>>()?;
        demand.push(row);
    }
    let scenarios = ScenarioSet::new(demand)?;
    scenarios.check_against(&instance)?;
    Ok((instance, scenarios))
}

/// Serializes to the JSON instance format (pretty-printed).
pub fn serialize_instance(instance: &Instance, scenarios: &ScenarioSet) -> Result<String> {
    scenarios.check_against(instance)?;
    let raw = RawDocument {
        nodes: instance
            .nodes
            .iter()
            .map(|n| RawNode {
                id: n.id,
                x: n.x,
                y: n.y,
                is_site: n.site.is_some(),
                is_demand: n.is_demand,
                opening_cost: n.site.map(|s| s.opening_cost as i64),
                capacity: n.site.map(|s| s.capacity as i64),
            })
            .collect(),
        d_max: instance.d_max,
        scenarios: scenarios.demand.iter().map(|r| r.iter().map(|&q| q as i64).collect()).collect(),
        distances: instance.distances.clone(),
    };
    Ok(serde_json::to_string_pretty(&raw)?)
}

// ---- synthetic generator ----

/// Knobs of the synthetic generator. Defaults mimic a rural region of
/// village clusters with walking-distance coverage.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorParams {
    /// Villages per cluster are drawn uniformly from this range.
    pub cluster_size: (usize, usize),
    /// Distance between neighbouring cluster centres (km).
    pub cluster_spacing: f64,
    /// Radius of a cluster (km).
    pub cluster_radius: f64,
    /// Fraction of nodes that are candidate sites (at least one).
    pub site_fraction: f64,
    pub d_max: f64,
    pub opening_cost: u64,
    /// Capacity multiplier over the per-site share of mean total demand.
    pub capacity_factor: f64,
    pub base_demand: (u64, u64),
    pub demand_factor: (f64, f64),
}

impl Default for GeneratorParams {
    fn default() -> Self {
        GeneratorParams {
            cluster_size: (9, 31),
            cluster_spacing: 14.0,
            cluster_radius: 7.0,
            site_fraction: 0.25,
            d_max: 6.0,
            opening_cost: 5000,
            capacity_factor: 1.5,
            base_demand: (20, 200),
            demand_factor: (0.5, 1.5),
        }
    }
}

/// Per-node base demand together with the multiplicative noise that turns
/// it into scenarios.
#[derive(Debug, Clone, PartialEq)]
pub struct DemandModel {
    pub base: Vec<u64>,
    pub factor: (f64, f64),
}

impl DemandModel {
    /// Estimates base demands as per-node scenario means.
    pub fn estimate(scenarios: &ScenarioSet, factor: (f64, f64)) -> Self {
        let n = scenarios.len() as f64;
        let base = (0..scenarios.num_nodes())
            .map(|i| {
                let sum: u64 = (0..scenarios.len()).map(|s| scenarios.demand(s, i)).sum();
                (sum as f64 / n).round() as u64
            })
            .collect();
        DemandModel { base, factor }
    }

    /// Draws `m` i.i.d. scenarios.
    pub fn sample(&self, m: usize, rng: &mut impl Rng) -> Result<ScenarioSet> {
        if m == 0 {
            return Err(invalid("scenario count must be at least 1"));
        }
        let (lo, hi) = self.factor;
        let rows = (0..m)
            .map(|_| {
                self.base
                    .iter()
                    .map(|&b| {
                        let f = if hi > lo { rng.gen_range(lo..=hi) } else { lo };
                        (b as f64 * f).round().max(0.0) as u64
                    })
                    .collect()
            })
            .collect();
        ScenarioSet::new(rows)
    }
}

fn stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn check_params(p: &GeneratorParams) -> Result<()> {
    let (a, b) = p.cluster_size;
    if a == 0 || a > b {
        return Err(invalid("cluster_size must be a nonempty range of positive sizes"));
    }
    if !(p.site_fraction > 0.0 && p.site_fraction <= 1.0) {
        return Err(invalid("site_fraction must lie in (0, 1]"));
    }
    if !(p.d_max > 0.0) || !(p.capacity_factor >= 0.0) {
        return Err(invalid("d_max must be positive and capacity_factor nonnegative"));
    }
    if p.base_demand.0 > p.base_demand.1 || !(0.0 <= p.demand_factor.0 && p.demand_factor.0 <= p.demand_factor.1) {
        return Err(invalid("demand ranges must be ordered and nonnegative"));
    }
    Ok(())
}

/// The base-demand model the generator uses for `(seed, n_nodes)`.
pub fn demand_model(seed: u64, n_nodes: usize, params: &GeneratorParams) -> Result<DemandModel> {
    check_params(params)?;
    if n_nodes == 0 {
        return Err(invalid("n_nodes must be at least 1"));
    }
    let mut rng = stream(seed, 1);
    let (lo, hi) = params.base_demand;
    let base = (0..n_nodes).map(|_| rng.gen_range(lo..=hi)).collect();
    Ok(DemandModel { base, factor: params.demand_factor })
}

/// Generates a clustered synthetic instance.
///
/// Layout, base demands and scenario noise use separate random streams, so
/// the same seed with a different scenario count yields the same network
/// and a scenario set that extends the smaller one.
pub fn generate_instance(
    seed: u64,
    n_nodes: usize,
    n_scenarios: usize,
    params: &GeneratorParams,
) -> Result<(Instance, ScenarioSet)> {
    if n_scenarios == 0 {
        return Err(invalid("n_scenarios must be at least 1"));
    }
    let model = demand_model(seed, n_nodes, params)?;

    let mut rng = stream(seed, 0);
    let mut sizes = Vec::new();
    let mut placed = 0;
    while placed < n_nodes {
        let s = rng.gen_range(params.cluster_size.0..=params.cluster_size.1).min(n_nodes - placed);
        sizes.push(s);
        placed += s;
    }
    let cols = (sizes.len() as f64).sqrt().ceil() as usize;
    let round3 = |v: f64| (v * 1000.0).round() / 1000.0;
    let mut coords = Vec::with_capacity(n_nodes);
    for (c, &size) in sizes.iter().enumerate() {
        let cx = (c % cols) as f64 * params.cluster_spacing;
        let cy = (c / cols) as f64 * params.cluster_spacing;
        for _ in 0..size {
            let r = params.cluster_radius * rng.gen::<f64>().sqrt();
            let t = rng.gen::<f64>() * std::f64::consts::TAU;
            coords.push((round3(cx + r * t.cos()), round3(cy + r * t.sin())));
        }
    }

    let n_sites = ((params.site_fraction * n_nodes as f64).round() as usize).clamp(1, n_nodes);
    let mut order: Vec<usize> = (0..n_nodes).collect();
    for a in 0..n_sites {
        let b = rng.gen_range(a..n_nodes);
        order.swap(a, b);
    }
    let mut is_site = vec![false; n_nodes];
    for &p in &order[..n_sites] {
        is_site[p] = true;
    }

    let mean_total: u64 = model.base.iter().sum();
    let capacity = (params.capacity_factor * mean_total as f64 / n_sites as f64).round() as u64;
    let nodes = coords
        .into_iter()
        .enumerate()
        .map(|(p, (x, y))| Node {
            id: p as NodeId,
            x,
            y,
            is_demand: true,
            site: is_site[p].then_some(Site { opening_cost: params.opening_cost, capacity }),
        })
        .collect();
    let instance = Instance::new(nodes, params.d_max, None)?;
    let scenarios = model.sample(n_scenarios, &mut stream(seed, 2))?;
    Ok((instance, scenarios))
}

/// How [`subsample_scenarios`] produces its scenarios.
#[derive(Debug, Clone, PartialEq)]
pub enum SampleMode {
    /// The first `m` scenarios of the input (`m ≤ N`).
    Identity,
    /// Draw from the input set: without replacement when `m ≤ N`, with
    /// replacement otherwise.
    Resample,
    /// Draw fresh scenarios from a demand model.
    Regenerate(DemandModel),
}

pub fn subsample_scenarios(scen: &ScenarioSet, m: usize, seed: u64, mode: &SampleMode) -> Result<ScenarioSet> {
    if m == 0 {
        return Err(invalid("m must be at least 1"));
    }
    let n = scen.len();
    let mut rng = stream(seed, 3);
    match mode {
        SampleMode::Identity => {
            if m > n {
                return Err(invalid(format!("identity sampling needs m <= {n}, got {m}")));
            }
            ScenarioSet::new(scen.demand[..m].to_vec())
        }
        SampleMode::Resample => {
            let picks: Vec<usize> = if m <= n {
                rand::seq::index::sample(&mut rng, n, m).into_vec()
            } else {
                (0..m).map(|_| rng.gen_range(0..n)).collect()
            };
            ScenarioSet::new(picks.into_iter().map(|s| scen.demand[s].clone()).collect())
        }
        SampleMode::Regenerate(model) => {
            if model.base.len() != scen.num_nodes() {
                return Err(invalid("demand model does not match the scenario width"));
            }
            model.sample(m, &mut rng)
        }
    }
}
