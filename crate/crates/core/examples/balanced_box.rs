//! Balanced-box search returns the same points as the epsilon-constraint
//! sweep while splitting the objective space into rectangles.

use cvarloc::frontier::{balanced_box, epsilon_constraint, DriverOptions, ModelFamily};
use cvarloc::instance::{generate_instance, GeneratorParams, RiskSpec};

fn main() -> cvarloc::Result<()> {
    let (inst, scen) = generate_instance(2, 30, 8, &GeneratorParams::default())?;
    let risk = RiskSpec::from_alpha(0.7, scen.len())?;
    let opts = DriverOptions::default();

    let bb = balanced_box(ModelFamily::Classical, &inst, &scen, risk, &opts)?;
    let eps = epsilon_constraint(ModelFamily::Classical, &inst, &scen, risk, &opts)?;
    println!("BB-MA: {} points, {} solves, {:.3}s", bb.frontier.len(), bb.stats.solves.len(), bb.stats.seconds);
    println!("e-MA:  {} points, {} solves, {:.3}s", eps.frontier.len(), eps.stats.solves.len(), eps.stats.seconds);
    for p in bb.frontier.points() {
        println!("  cost {:>6} risk {:>10.3}", p.cost, p.risk);
    }
    assert!(bb.frontier.same_points(&eps.frontier, 1e-6));
    Ok(())
}
