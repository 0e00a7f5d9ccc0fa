//! Recourse of a fixed opening decision: per-scenario uncovered demand from
//! the assignment MILP, checked against assignment enumeration.

use cvarloc::cvar::cvar_topk;
use cvarloc::formulation::{evaluate_uncovered_vector, FirstStageSolution};
use cvarloc::instance::{generate_instance, GeneratorParams};
use cvarloc::oracle::{second_stage_enumerate, OracleBudget};

fn main() -> cvarloc::Result<()> {
    let params = GeneratorParams { site_fraction: 0.5, ..Default::default() };
    let (inst, scen) = generate_instance(5, 10, 6, &params)?;
    let open: Vec<bool> = (0..inst.num_sites()).map(|j| j % 2 == 0).collect();
    let first = FirstStageSolution::new(&inst, open.clone())?;
    println!("open {:?}, cost {}", open, first.cost);

    let unc = evaluate_uncovered_vector(&inst, &scen, &first)?;
    for (s, &u) in unc.iter().enumerate() {
        let brute = second_stage_enumerate(&inst, &scen, &open, s, &OracleBudget::default())?;
        println!("  scenario {s}: demand {:>5} uncovered {:>5} (enumeration {brute})", scen.total(s), u);
        assert_eq!(u, brute);
    }
    let values: Vec<f64> = unc.iter().map(|&u| u as f64).collect();
    println!("CVaR with k = 2: {:.2}", cvar_topk(&values, 2)?);
    Ok(())
}
