//! Knapsack with pairwise conflicts that are only added when an integer
//! candidate violates them.

use cvarloc_milp::{solve_mip, Constraint, LinExpr, MilpModel, ObjSense, Sense, Separation};

fn main() -> cvarloc_milp::Result<()> {
    let profit = [10.0, 13.0, 7.0, 8.0, 11.0, 6.0];
    let weight = [4.0, 6.0, 3.0, 4.0, 5.0, 2.0];
    let conflicts = [(0, 1), (1, 4), (2, 3), (4, 5)];

    let mut m = MilpModel::new();
    let x: Vec<_> = (0..profit.len()).map(|i| m.add_binary(format!("x{i}"))).collect();
    m.add_row("capacity", x.iter().zip(weight).map(|(&v, w)| (v, w)).collect(), Sense::Le, 12.0)?;
    m.set_objective(ObjSense::Maximize, LinExpr::from_terms(x.iter().zip(profit).map(|(&v, p)| (v, p)).collect()))?;

    let mut sep = |values: &[f64]| {
        for &(a, b) in &conflicts {
            if values[x[a].0] + values[x[b].0] > 1.5 {
                println!("  candidate picks {a} and {b}: adding conflict row");
                return Separation::Cut(Constraint::new(format!("conflict_{a}_{b}"), vec![(x[a], 1.0), (x[b], 1.0)], Sense::Le, 1.0));
            }
        }
        Separation::Accept
    };
    let r = solve_mip(&m, None, Some(&mut sep))?;
    let chosen: Vec<usize> = (0..profit.len()).filter(|&i| r.values[x[i].0] > 0.5).collect();
    println!("{}: profit {} with items {:?}", r.status.as_str(), r.objective, chosen);
    println!("{} nodes, {} lazy rows, {} separator calls", r.nodes, r.cuts_added, r.separator_calls);
    Ok(())
}
