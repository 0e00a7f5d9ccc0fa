//! Hypervolume, hypervolume gap and the epsilon indicator on hand-made
//! frontiers, with a Monte-Carlo cross-check of the hypervolume.

use cvarloc::frontier::{Frontier, FrontierPoint, Provenance};
use cvarloc::indicators::{hypervolume, reference_point, IndicatorReport};
use cvarloc::oracle::hypervolume_monte_carlo;

fn frontier(points: &[(u64, f64)]) -> Frontier {
    Frontier::from_points(
        points
            .iter()
            .map(|&(cost, risk)| FrontierPoint { cost, risk, open: vec![], provenance: Provenance::Exact })
            .collect(),
    )
}

fn main() -> cvarloc::Result<()> {
    let reference = frontier(&[(0, 900.0), (5000, 420.0), (10000, 150.0), (15000, 40.0)]);
    let approx = frontier(&[(0, 900.0), (10000, 180.0), (15000, 40.0)]);

    let rep = IndicatorReport::compute(&approx, &reference)?;
    println!("{}", rep.to_json()?);

    let same = IndicatorReport::compute(&reference, &reference)?;
    println!("reference vs itself: gH% {} I_eps {}", same.gh_percent, same.i_eps);

    let pts = reference.objectives();
    let r = reference_point(&[&pts]);
    let (mc, se) = hypervolume_monte_carlo(&pts, r, 200_000, 7);
    println!("hypervolume {:.1}, Monte-Carlo {:.1} ± {:.1}", hypervolume(&pts, r)?, mc, se);
    Ok(())
}
