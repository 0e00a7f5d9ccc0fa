//! The top-k mean of N outcomes equals the smallest `rho` with
//! `rho >= (1/k) sum_{s in S} v_s` for every k-subset S.

use cvarloc::cvar::cvar_topk;
use cvarloc_milp::{solve_lp, LinExpr, MilpModel, ObjSense, Sense};

fn subsets(n: usize, k: usize, start: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    if cur.len() == k {
        out.push(cur.clone());
        return;
    }
    for s in start..n {
        cur.push(s);
        subsets(n, k, s + 1, cur, out);
        cur.pop();
    }
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let values = [120.0, 35.0, 410.0, 0.0, 95.0, 260.0];
    let n = values.len();
    for k in 1..=n {
        let mut m = MilpModel::new();
        let rho = m.add_continuous("rho", f64::NEG_INFINITY, f64::INFINITY)?;
        let mut all = Vec::new();
        subsets(n, k, 0, &mut Vec::new(), &mut all);
        for (c, s) in all.iter().enumerate() {
            let rhs: f64 = s.iter().map(|&i| values[i]).sum::<f64>() / k as f64;
            m.add_row(format!("cut_{c}"), vec![(rho, 1.0)], Sense::Ge, rhs)?;
        }
        m.set_objective(ObjSense::Minimize, LinExpr::from_terms(vec![(rho, 1.0)]))?;
        let lp = solve_lp(&m);
        let direct = cvar_topk(&values, k)?;
        println!("k={k}: {} cuts, LP {:.6}, top-k mean {:.6}", all.len(), lp.objective, direct);
        assert!((lp.objective - direct).abs() < 1e-9);
    }
    Ok(())
}
