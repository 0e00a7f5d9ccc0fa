//! Matheuristic frontier under a per-point budget, compared with the exact
//! frontier by hypervolume gap.

use std::time::Duration;

use cvarloc::frontier::{epsilon_constraint, matheuristic, DriverOptions, MatheuristicOptions, ModelFamily, Provenance};
use cvarloc::indicators::IndicatorReport;
use cvarloc::instance::{generate_instance, GeneratorParams, RiskSpec};

fn main() -> cvarloc::Result<()> {
    let (inst, scen) = generate_instance(1, 40, 10, &GeneratorParams::default())?;
    let risk = RiskSpec::from_alpha(0.7, scen.len())?;

    let opts = MatheuristicOptions { per_point_budget: Some(Duration::from_secs(1)), ..Default::default() };
    let mat = matheuristic(ModelFamily::Classical, &inst, &scen, risk, &opts)?;
    let proven = mat.frontier.points().iter().filter(|p| p.provenance == Provenance::Exact).count();
    println!("Mat-MA: {} points ({proven} proven) in {:.2}s", mat.frontier.len(), mat.stats.seconds);

    let exact = epsilon_constraint(ModelFamily::Classical, &inst, &scen, risk, &DriverOptions::default())?;
    println!("e-MA:   {} points in {:.2}s", exact.frontier.len(), exact.stats.seconds);

    let rep = IndicatorReport::compute(&mat.frontier, &exact.frontier)?;
    println!("gH% = {:.4}, I_eps = {:.4}", rep.gh_percent, rep.i_eps);
    Ok(())
}
