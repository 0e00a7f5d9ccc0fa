//! Product-form basis inverse.
//!
//! `B^-1 = E_k ... E_1`, where every `E_t` is an identity matrix whose column
//! `row` has been replaced by an eta vector. Reinversion builds the etas from
//! scratch; simplex pivots append one eta each.

const PIVOT_TOL: f64 = 1e-9;

#[derive(Debug, Clone)]
struct Eta {
    row: usize,
    pivot: f64,
    entries: Vec<(usize, f64)>,
}

#[derive(Debug, Clone, Default)]
pub(crate) struct Factor {
    etas: Vec<Eta>,
    updates: usize,
}

/// Outcome of a reinversion: `head[p]` is the variable pivoted on row `p`.
pub(crate) struct Reinversion {
    pub factor: Factor,
    pub head: Vec<usize>,
    /// Structural variables dropped from the basis because they were
    /// linearly dependent on the others; replaced by logicals.
    pub rejected: Vec<usize>,
}

impl Factor {
    pub fn updates(&self) -> usize {
        self.updates
    }

    /// Computes `B^-1 a` in place.
    pub fn ftran(&self, a: &mut [f64]) {
        for eta in &self.etas {
            let v = a[eta.row];
            if v != 0.0 {
                a[eta.row] = v * eta.pivot;
                for &(i, e) in &eta.entries {
                    a[i] += e * v;
                }
            }
        }
    }

    /// Computes `c^T B^-1` in place.
    pub fn btran(&self, c: &mut [f64]) {
        for eta in self.etas.iter().rev() {
            let mut s = eta.pivot * c[eta.row];
            for &(i, e) in &eta.entries {
                s += e * c[i];
            }
            c[eta.row] = s;
        }
    }

    /// Records a basis change on `row`, given the entering column already
    /// transformed by [`Factor::ftran`].
    pub fn update(&mut self, row: usize, alpha: &[f64]) {
        self.push_eta(row, alpha);
        self.updates += 1;
    }

    fn push_eta(&mut self, row: usize, w: &[f64]) {
        let piv = w[row];
        let entries: Vec<(usize, f64)> = w
            .iter()
            .enumerate()
            .filter(|&(i, &v)| i != row && v.abs() > 1e-13)
            .map(|(i, &v)| (i, -v / piv))
            .collect();
        self.etas.push(Eta { row, pivot: 1.0 / piv, entries });
    }

    /// Indices that may be nonzero after an ftran of `col`: its rows plus
    /// the entries of every eta whose pivot row was reached before it.
    fn ftran_support(&self, col: &[(usize, f64)], mark: &mut [bool], out: &mut Vec<usize>) {
        out.clear();
        for &(i, _) in col {
            if !mark[i] {
                mark[i] = true;
                out.push(i);
            }
        }
        for eta in &self.etas {
            if mark[eta.row] {
                for &(i, _) in &eta.entries {
                    if !mark[i] {
                        mark[i] = true;
                        out.push(i);
                    }
                }
            }
        }
        for &i in out.iter() {
            mark[i] = false;
        }
    }

    fn push_eta_sparse(&mut self, row: usize, w: &[f64], support: &[usize]) {
        let piv = w[row];
        let entries: Vec<(usize, f64)> = support
            .iter()
            .filter(|&&i| i != row && w[i].abs() > 1e-13)
            .map(|&i| (i, -w[i] / piv))
            .collect();
        self.etas.push(Eta { row, pivot: 1.0 / piv, entries });
    }

    fn push_logical(&mut self, row: usize) {
        self.etas.push(Eta { row, pivot: -1.0, entries: Vec::new() });
    }

    /// Factorizes the basis formed by `basic` (variable indices; logical `i`
    /// is `n_struct + i` with column `-e_i`).
    pub fn reinvert(
        m: usize,
        n_struct: usize,
        cols: &[Vec<(usize, f64)>],
        basic: &[usize],
    ) -> Reinversion {
        let mut factor = Factor::default();
        let mut head = vec![usize::MAX; m];
        let mut assigned = vec![false; m];

        let mut structural = Vec::new();
        for &j in basic {
            if j >= n_struct {
                let i = j - n_struct;
                if !assigned[i] {
                    assigned[i] = true;
                    head[i] = j;
                    factor.push_logical(i);
                }
            } else {
                structural.push(j);
            }
        }

        // Row-wise pattern of the structural columns over rows not already
        // taken by logicals.
        let mut row_cols: Vec<Vec<usize>> = vec![Vec::new(); m];
        let mut row_count = vec![0usize; m];
        let mut col_count = vec![0usize; structural.len()];
        for (k, &j) in structural.iter().enumerate() {
            for &(i, v) in &cols[j] {
                if !assigned[i] && v != 0.0 {
                    row_cols[i].push(k);
                    row_count[i] += 1;
                    col_count[k] += 1;
                }
            }
        }
        let mut done = vec![false; structural.len()];
        let mut singletons: Vec<usize> = (0..m).filter(|&i| !assigned[i] && row_count[i] == 1).collect();
        let mut rejected = Vec::new();
        let mut w = vec![0.0; m];
        let mut mark = vec![false; m];
        let mut touched: Vec<usize> = Vec::new();
        let mut remaining = structural.len();

        while remaining > 0 {
            let mut pick: Option<(usize, Option<usize>)> = None;
            while let Some(r) = singletons.pop() {
                if assigned[r] || row_count[r] != 1 {
                    continue;
                }
                if let Some(&k) = row_cols[r].iter().find(|&&k| !done[k]) {
                    pick = Some((k, Some(r)));
                    break;
                }
            }
            let (k, preferred) = match pick {
                Some(p) => p,
                None => {
                    let k = (0..structural.len())
                        .filter(|&k| !done[k])
                        .min_by_key(|&k| (col_count[k], k))
                        .expect("remaining > 0");
                    (k, None)
                }
            };
            done[k] = true;
            remaining -= 1;
            let j = structural[k];

            for &(i, v) in &cols[j] {
                w[i] += v;
            }
            factor.ftran(&mut w);
            factor.ftran_support(&cols[j], &mut mark, &mut touched);

            let max_free = touched
                .iter()
                .filter(|&&i| !assigned[i])
                .map(|&i| w[i].abs())
                .fold(0.0, f64::max);
            let chosen = if max_free < PIVOT_TOL {
                None
            } else {
                match preferred {
                    Some(r) if w[r].abs() >= 0.01 * max_free => Some(r),
                    _ => touched
                        .iter()
                        .copied()
                        .filter(|&i| !assigned[i] && w[i].abs() >= 0.1 * max_free)
                        .min_by(|&a, &b| {
                            row_count[a]
                                .cmp(&row_count[b])
                                .then(w[b].abs().partial_cmp(&w[a].abs()).unwrap())
                                .then(a.cmp(&b))
                        }),
                }
            };

            let clear = |w: &mut [f64]| {
                for &i in &touched {
                    w[i] = 0.0;
                }
            };
            let Some(p) = chosen else {
                clear(&mut w);
                rejected.push(j);
                for &(i, v) in &cols[j] {
                    if !assigned[i] && v != 0.0 {
                        row_count[i] -= 1;
                        if row_count[i] == 1 {
                            singletons.push(i);
                        }
                    }
                }
                continue;
            };
            factor.push_eta_sparse(p, &w, &touched);
            clear(&mut w);
            assigned[p] = true;
            head[p] = j;
            for &(i, v) in &cols[j] {
                if v != 0.0 && row_count[i] > 0 && i != p {
                    row_count[i] -= 1;
                    if !assigned[i] && row_count[i] == 1 {
                        singletons.push(i);
                    }
                }
            }
            for &kk in &row_cols[p] {
                if !done[kk] {
                    col_count[kk] = col_count[kk].saturating_sub(1);
                }
            }
        }

        for i in 0..m {
            if !assigned[i] {
                assigned[i] = true;
                head[i] = n_struct + i;
                factor.push_logical(i);
            }
        }
        Reinversion { factor, head, rejected }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dense(cols: &[Vec<(usize, f64)>], m: usize, n_struct: usize, head: &[usize]) -> Vec<Vec<f64>> {
        // column p of B is the column of head[p]
        let mut b = vec![vec![0.0; m]; m];
        for (p, &j) in head.iter().enumerate() {
            if j >= n_struct {
                b[j - n_struct][p] = -1.0;
            } else {
                for &(i, v) in &cols[j] {
                    b[i][p] += v;
                }
            }
        }
        b
    }

    #[test]
    fn ftran_inverts_the_basis() {
        let cols = vec![
            vec![(0, 2.0), (1, 1.0)],
            vec![(1, 3.0), (2, 1.0)],
            vec![(0, 1.0), (2, 4.0)],
        ];
        let r = Factor::reinvert(3, 3, &cols, &[0, 1, 2]);
        assert!(r.rejected.is_empty());
        let b = dense(&cols, 3, 3, &r.head);
        for p in 0..3 {
            let mut col: Vec<f64> = (0..3).map(|i| b[i][p]).collect();
            r.factor.ftran(&mut col);
            for (i, v) in col.iter().enumerate() {
                let want = if i == p { 1.0 } else { 0.0 };
                assert!((v - want).abs() < 1e-12, "{col:?}");
            }
        }
        // btran of unit vectors yields rows of B^-1: check e_p^T B^-1 B = e_p^T
        for p in 0..3 {
            let mut e = vec![0.0; 3];
            e[p] = 1.0;
            r.factor.btran(&mut e);
            for q in 0..3 {
                let dot: f64 = (0..3).map(|i| e[i] * b[i][q]).sum();
                let want = if p == q { 1.0 } else { 0.0 };
                assert!((dot - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn dependent_columns_are_replaced_by_logicals() {
        let cols = vec![vec![(0, 1.0), (1, 1.0)], vec![(0, 2.0), (1, 2.0)]];
        let r = Factor::reinvert(2, 2, &cols, &[0, 1]);
        assert_eq!(r.rejected.len(), 1);
        assert!(r.head.iter().any(|&j| j >= 2));
    }
}
