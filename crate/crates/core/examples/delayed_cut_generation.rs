//! Solve the subset-CVaR model with the cuts generated lazily by the
//! separation oracle, starting from one seed cut.

use cvarloc::cvar::{delayed_cut_loop, initial_cut, CutLoopOptions, CutPool};
use cvarloc::formulation::{binomial, build_mb, RecourseCompletion};
use cvarloc::instance::{generate_instance, GeneratorParams, RiskSpec};

fn main() -> cvarloc::Result<()> {
    let (inst, scen) = generate_instance(3, 21, 20, &GeneratorParams::default())?;
    let risk = RiskSpec::from_alpha(0.7, scen.len())?;
    let (mut model, family) = build_mb(&inst, &scen, risk)?;
    // spend at most half the total opening cost
    let half: u64 = inst.opening_costs().iter().sum::<u64>() / 2;
    model.set_budget(half as f64)?;

    let mut pool = CutPool::new();
    pool.insert(initial_cut(&scen, risk.k())?);
    let mut completion = RecourseCompletion::new(&model, &inst, &scen);
    let opts = CutLoopOptions { separate: true, ..Default::default() };
    let out = delayed_cut_loop(&model, &family, &mut pool, &opts, Some(&mut completion))?;

    println!("N = {}, k = {}: {} possible subset cuts", scen.len(), risk.k(), binomial(scen.len(), risk.k()));
    println!("status {}, risk {:.3}", out.result.status.as_str(), out.result.objective);
    println!("separator calls {}, cuts generated {}, pool size {}", out.separator_calls, out.new_cuts, pool.len());
    for c in pool.cuts() {
        println!("  {:?}", c.subset);
    }
    println!("open sites: {:?}", model.open_sites(&out.result.values));
    Ok(())
}
