//! Frontier quality indicators: hypervolume, hypervolume gap and the
//! multiplicative epsilon indicator (both objectives minimized).

use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::frontier::Frontier;

/// Area dominated by `points` and bounded by `reference`.
pub fn hypervolume(points: &[(f64, f64)], reference: (f64, f64)) -> Result<f64> {
    if let Some(p) = points.iter().find(|p| !(p.0 < reference.0 && p.1 < reference.1)) {
        return Err(invalid(format!(
            "point ({}, {}) does not dominate the reference point ({}, {})",
            p.0, p.1, reference.0, reference.1
        )));
    }
    let mut sorted = points.to_vec();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    // staircase of points that lower the best risk seen so far
    let mut stair: Vec<(f64, f64)> = Vec::new();
    for &(x, y) in &sorted {
        if stair.last().map_or(true, |l| y < l.1) {
            stair.push((x, y));
        }
    }
    let mut area = 0.0;
    for (p, &(x, y)) in stair.iter().enumerate() {
        let next_x = stair.get(p + 1).map_or(reference.0, |n| n.0);
        area += (next_x - x) * (reference.1 - y);
    }
    Ok(area)
}

/// `100 (HV(R) - HV(A)) / HV(R)`.
pub fn hypervolume_gap(a: &[(f64, f64)], r: &[(f64, f64)], reference: (f64, f64)) -> Result<f64> {
    let hr = hypervolume(r, reference)?;
    if hr <= 0.0 {
        return Err(Error::UndefinedIndicator("reference set has zero hypervolume".into()));
    }
    let ha = hypervolume(a, reference)?;
    Ok(100.0 * (hr - ha) / hr)
}

/// Smallest factor by which `a` must be scaled to weakly dominate `r`:
/// `max_r min_a max(a_1/r_1, a_2/r_2)`. Coordinates must be positive.
pub fn eps_indicator(a: &[(f64, f64)], r: &[(f64, f64)]) -> Result<f64> {
    if a.is_empty() || r.is_empty() {
        return Err(invalid("epsilon indicator needs two nonempty sets"));
    }
    if let Some(p) = a.iter().chain(r).find(|p| !(p.0 > 0.0 && p.1 > 0.0)) {
        return Err(invalid(format!("point ({}, {}) has a nonpositive coordinate", p.0, p.1)));
    }
    Ok(r.iter()
        .map(|q| a.iter().map(|p| (p.0 / q.0).max(p.1 / q.1)).fold(f64::INFINITY, f64::min))
        .fold(f64::NEG_INFINITY, f64::max))
}

/// [`eps_indicator`] after shifting both objectives by +1, so zero cost or
/// zero risk stays admissible.
pub fn eps_indicator_shifted(a: &[(f64, f64)], r: &[(f64, f64)]) -> Result<f64> {
    let shift = |v: &[(f64, f64)]| v.iter().map(|p| (p.0 + 1.0, p.1 + 1.0)).collect::<Vec<_>>();
    eps_indicator(&shift(a), &shift(r))
}

/// Componentwise maximum over all sets plus one.
pub fn reference_point(sets: &[&[(f64, f64)]]) -> (f64, f64) {
    let mut m = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    for p in sets.iter().flat_map(|s| s.iter()) {
        m = (m.0.max(p.0), m.1.max(p.1));
    }
    if m.0 == f64::NEG_INFINITY {
        return (1.0, 1.0);
    }
    (m.0 + 1.0, m.1 + 1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IndicatorReport {
    pub hypervolume_a: f64,
    pub hypervolume_r: f64,
    pub gh_percent: f64,
    pub i_eps: f64,
    pub reference_point: (f64, f64),
}

impl IndicatorReport {
    /// Indicators of `a` against `r` with the reference point from both.
    pub fn compute(a: &Frontier, r: &Frontier) -> Result<Self> {
        let (pa, pr) = (a.objectives(), r.objectives());
        if pr.is_empty() {
            return Err(Error::UndefinedIndicator("empty reference set".into()));
        }
        let reference = reference_point(&[&pa, &pr]);
        Self::compute_at(a, r, reference)
    }

    pub fn compute_at(a: &Frontier, r: &Frontier, reference: (f64, f64)) -> Result<Self> {
        let (pa, pr) = (a.objectives(), r.objectives());
        let hypervolume_a = hypervolume(&pa, reference)?;
        let hypervolume_r = hypervolume(&pr, reference)?;
        Ok(IndicatorReport {
            hypervolume_a,
            hypervolume_r,
            gh_percent: hypervolume_gap(&pa, &pr, reference)?,
            i_eps: eps_indicator_shifted(&pa, &pr)?,
            reference_point: reference,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub const CSV_HEADER: [&'static str; 7] =
        ["label", "hypervolume_a", "hypervolume_r", "gh_percent", "i_eps", "ref_cost", "ref_risk"];

    pub fn csv_record(&self, label: &str) -> Vec<String> {
        vec![
            label.to_string(),
            self.hypervolume_a.to_string(),
            self.hypervolume_r.to_string(),
            self.gh_percent.to_string(),
            self.i_eps.to_string(),
            self.reference_point.0.to_string(),
            self.reference_point.1.to_string(),
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hypervolume_examples() {
        assert_eq!(hypervolume(&[(1.0, 3.0), (3.0, 1.0)], (4.0, 4.0)).unwrap(), 5.0);
        assert_eq!(hypervolume(&[(1.0, 1.0)], (2.0, 2.0)).unwrap(), 1.0);
        assert_eq!(hypervolume(&[], (2.0, 2.0)).unwrap(), 0.0);
        let e = hypervolume(&[(1.0, 5.0)], (4.0, 4.0)).unwrap_err().to_string();
        assert!(e.contains("(1, 5)"), "{e}");
    }

    #[test]
    fn gap_examples() {
        let r = [(1.0, 3.0), (3.0, 1.0)];
        assert_eq!(hypervolume_gap(&r, &r, (4.0, 4.0)).unwrap(), 0.0);
        assert_eq!(hypervolume_gap(&[(1.0, 3.0)], &r, (4.0, 4.0)).unwrap(), 40.0);
        assert!(hypervolume_gap(&[(0.5, 0.5)], &r, (4.0, 4.0)).unwrap() < 0.0);
        assert!(matches!(hypervolume_gap(&r, &[], (4.0, 4.0)), Err(Error::UndefinedIndicator(_))));
    }

    #[test]
    fn epsilon_examples() {
        let r = [(1.0, 3.0), (3.0, 1.0)];
        assert_eq!(eps_indicator(&r, &r).unwrap(), 1.0);
        assert_eq!(eps_indicator(&[(2.0, 4.0)], &[(1.0, 2.0)]).unwrap(), 2.0);
        assert_eq!(eps_indicator(&[(0.5, 1.0)], &[(1.0, 1.0)]).unwrap(), 1.0);
        assert!(eps_indicator(&[], &r).is_err());
        assert!(eps_indicator(&[(0.0, 1.0)], &r).is_err());
        assert_eq!(eps_indicator_shifted(&[(0.0, 1.0)], &[(0.0, 1.0)]).unwrap(), 1.0);
    }
}
