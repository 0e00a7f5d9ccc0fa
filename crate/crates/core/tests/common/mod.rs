#![allow(dead_code)]

use cvarloc::frontier::{Frontier, FrontierPoint, Provenance};
use cvarloc::instance::{generate_instance, GeneratorParams, Instance, ScenarioSet};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Small generated instance that the enumeration oracles can handle.
pub struct Fixture {
    pub seed: u64,
    pub instance: Instance,
    pub scenarios: ScenarioSet,
}

impl Fixture {
    pub fn n(&self) -> usize {
        self.scenarios.len()
    }

    /// Tail sizes exercised per fixture: 1, ceil(N/2) and N.
    pub fn ks(&self) -> Vec<usize> {
        let n = self.n();
        let mut ks = vec![1, n.div_ceil(2), n];
        ks.dedup();
        ks
    }
}

/// Fixture `seed`: 8..=12 nodes, 3..=6 scenarios, at most 6 sites.
pub fn fixture(seed: u64) -> Fixture {
    let nodes = 8 + (seed % 5) as usize;
    let n = 3 + (seed % 4) as usize;
    let params = GeneratorParams { site_fraction: 0.5, ..Default::default() };
    let (instance, scenarios) = generate_instance(seed, nodes, n, &params).expect("fixture generation");
    Fixture { seed, instance, scenarios }
}

pub fn fixtures(count: u64) -> Vec<Fixture> {
    (0..count).map(fixture).collect()
}

/// Random nondominated set of `1..=max_points` points with positive
/// coordinates.
pub fn random_frontier(seed: u64, max_points: usize) -> Frontier {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = rng.gen_range(1..=max_points);
    let mut cost = rng.gen_range(0..3) * 5000;
    let mut risk = rng.gen_range(500.0..5000.0);
    let mut pts = Vec::new();
    for _ in 0..m {
        pts.push(FrontierPoint { cost, risk, open: vec![], provenance: Provenance::Exact });
        cost += rng.gen_range(1..4) * 5000;
        risk *= rng.gen_range(0.2..0.95);
    }
    Frontier::from_points(pts)
}

/// Frontier made of the given objective pairs.
pub fn frontier_of(points: &[(u64, f64)]) -> Frontier {
    Frontier::from_points(
        points.iter().map(|&(cost, risk)| FrontierPoint { cost, risk, open: vec![], provenance: Provenance::Exact }).collect(),
    )
}
