//! Cross-method statistics: winning numbers and Kendall's tau-b.

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use super::QualityRecord;
use crate::error::{Error, Result};

/// Below this many items the tau test enumerates permutations exactly.
pub const EXACT_TAU_BELOW: usize = 8;

/// `values[i][j]`: metric of method `i` on log `j`, lower is better.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankMatrix {
    pub methods: Vec<String>,
    pub logs: Vec<String>,
    pub values: Vec<Vec<Option<f64>>>,
}

impl RankMatrix {
    pub fn new(methods: Vec<String>, logs: Vec<String>) -> Self {
        let values = vec![vec![None; logs.len()]; methods.len()];
        Self { methods, logs, values }
    }

    pub fn from_rows(methods: Vec<String>, logs: Vec<String>, values: Vec<Vec<Option<f64>>>) -> Result<Self> {
        if values.len() != methods.len() || values.iter().any(|r| r.len() != logs.len()) {
            return Err(Error::RaggedMatrix);
        }
        Ok(Self { methods, logs, values })
    }

    /// Returns false if the method or log is unknown.
    pub fn set(&mut self, method: &str, log: &str, value: f64) -> bool {
        let i = self.methods.iter().position(|m| m == method);
        let j = self.logs.iter().position(|l| l == log);
        match (i, j) {
            (Some(i), Some(j)) => {
                self.values[i][j] = Some(value);
                true
            }
            _ => false,
        }
    }

    pub fn missing(&self) -> Vec<(String, String)> {
        let mut holes = Vec::new();
        for (i, row) in self.values.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                if v.is_none() {
                    holes.push((self.methods[i].clone(), self.logs[j].clone()));
                }
            }
        }
        holes
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WinningNumbers {
    pub methods: Vec<String>,
    /// Strict wins over every other method, summed over logs.
    pub totals: Vec<u64>,
    /// `totals` divided by the number of logs.
    pub averages: Vec<f64>,
}

pub fn winning_number(matrix: &RankMatrix) -> Result<WinningNumbers> {
    let holes = matrix.missing();
    if !holes.is_empty() {
        return Err(Error::MissingCells(holes));
    }
    let m = matrix.methods.len();
    let v = |i: usize, j: usize| matrix.values[i][j].expect("checked complete");
    let totals: Vec<u64> = (0..m)
        .map(|i| {
            (0..matrix.logs.len())
                .map(|j| (0..m).filter(|&k| v(i, j) < v(k, j)).count() as u64)
                .sum()
        })
        .collect();
    let n_logs = matrix.logs.len().max(1) as f64;
    Ok(WinningNumbers {
        methods: matrix.methods.clone(),
        averages: totals.iter().map(|&t| t as f64 / n_logs).collect(),
        totals,
    })
}

/// Nondeterminism of the most filtered point of a curve that still keeps at
/// least `min_explained` of the activities.
pub fn value_at_threshold(curve: &[QualityRecord], min_explained: f64) -> Option<f64> {
    curve
        .iter()
        .filter(|r| r.explained_ratio >= min_explained - 1e-12)
        .filter_map(|r| r.nondeterminism.map(|n| (r.steps, n)))
        .max_by_key(|&(steps, _)| steps)
        .map(|(_, n)| n)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TauTest {
    pub tau_b: f64,
    /// Concordant minus discordant pairs.
    pub s: i64,
    /// Normal approximation of `s` with tie-corrected variance.
    pub z: f64,
    /// Two-sided; exact by enumeration for fewer than [`EXACT_TAU_BELOW`] items.
    pub p_value: f64,
    pub exact: bool,
    pub reject_at_05: bool,
}

fn sign(x: f64) -> i64 {
    if x > 0.0 {
        1
    } else if x < 0.0 {
        -1
    } else {
        0
    }
}

fn s_statistic(r1: &[f64], r2: &[f64]) -> i64 {
    let n = r1.len();
    let mut s = 0;
    for i in 0..n {
        for j in i + 1..n {
            s += sign(r1[i] - r1[j]) * sign(r2[i] - r2[j]);
        }
    }
    s
}

/// Sizes of groups of equal values.
fn tie_groups(r: &[f64]) -> Vec<u64> {
    let mut sorted = r.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut groups = Vec::new();
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i;
        while j < sorted.len() && sorted[j] == sorted[i] {
            j += 1;
        }
        groups.push((j - i) as u64);
        i = j;
    }
    groups
}

/// Kendall's tau-b between two rankings given as rank values per item
/// (same item order in both; equal values are ties).
pub fn kendall_tau_b(r1: &[f64], r2: &[f64]) -> Result<TauTest> {
    let n = r1.len();
    if n != r2.len() || n < 2 {
        return Err(Error::RankingMismatch(format!("{} vs {} items", r1.len(), r2.len())));
    }
    let pairs = |g: &[u64]| g.iter().map(|t| t * (t - 1) / 2).sum::<u64>();
    let (t1, t2) = (tie_groups(r1), tie_groups(r2));
    let n0 = (n * (n - 1) / 2) as u64;
    let (n1, n2) = (pairs(&t1), pairs(&t2));
    if n1 == n0 || n2 == n0 {
        return Err(Error::UndefinedCorrelation("every item is tied in one ranking".into()));
    }
    let s = s_statistic(r1, r2);
    let tau_b = s as f64 / (((n0 - n1) as f64) * ((n0 - n2) as f64)).sqrt();

    let nf = n as f64;
    let v = |g: &[u64]| g.iter().map(|&t| (t * (t - 1) * (2 * t + 5)) as f64).sum::<f64>();
    let sum1 = |g: &[u64]| g.iter().map(|&t| (t * (t - 1)) as f64).sum::<f64>();
    let sum2 = |g: &[u64]| g.iter().map(|&t| (t * (t - 1) * t.saturating_sub(2)) as f64).sum::<f64>();
    let mut var = (nf * (nf - 1.0) * (2.0 * nf + 5.0) - v(&t1) - v(&t2)) / 18.0
        + sum1(&t1) * sum1(&t2) / (2.0 * nf * (nf - 1.0));
    if n > 2 {
        var += sum2(&t1) * sum2(&t2) / (9.0 * nf * (nf - 1.0) * (nf - 2.0));
    }
    let z = if var > 0.0 { s as f64 / var.sqrt() } else { 0.0 };

    let (p_value, exact) = if n < EXACT_TAU_BELOW {
        (exact_p(r1, r2, s), true)
    } else {
        (erfc(z.abs() / std::f64::consts::SQRT_2), false)
    };
    Ok(TauTest {
        tau_b,
        s,
        z,
        p_value,
        exact,
        reject_at_05: p_value < 0.05,
    })
}

/// Share of permutations of `r2` whose statistic is at least as extreme.
fn exact_p(r1: &[f64], r2: &[f64], observed: i64) -> f64 {
    fn permute(k: usize, perm: &mut Vec<f64>, r1: &[f64], observed: i64, hits: &mut u64, total: &mut u64) {
        if k == perm.len() {
            *total += 1;
            if s_statistic(r1, perm).abs() >= observed.abs() {
                *hits += 1;
            }
            return;
        }
        for i in k..perm.len() {
            perm.swap(k, i);
            permute(k + 1, perm, r1, observed, hits, total);
            perm.swap(k, i);
        }
    }
    let (mut hits, mut total) = (0, 0);
    permute(0, &mut r2.to_vec(), r1, observed, &mut hits, &mut total);
    hits as f64 / total as f64
}

/// Aligns two orderings of the same items into rank vectors, following the
/// item order of `first`.
pub fn ranks_from_order<S: AsRef<str>>(first: &[S], second: &[S]) -> Result<(Vec<f64>, Vec<f64>)> {
    if first.len() != second.len() {
        return Err(Error::RankingMismatch(format!("{} vs {} items", first.len(), second.len())));
    }
    let mut r1 = Vec::with_capacity(first.len());
    let mut r2 = Vec::with_capacity(first.len());
    for (i, item) in first.iter().enumerate() {
        let j = second
            .iter()
            .position(|s| s.as_ref() == item.as_ref())
            .ok_or_else(|| Error::RankingMismatch(format!("{} missing from second ranking", item.as_ref())))?;
        r1.push(i as f64);
        r2.push(j as f64);
    }
    Ok((r1, r2))
}

/// Harmonic mean of fitness and precision; 0 when both are 0.
pub fn f_score(fitness: f64, precision: f64) -> f64 {
    if fitness + precision == 0.0 {
        0.0
    } else {
        2.0 * fitness * precision / (fitness + precision)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn winning_single_log() {
        let m = RankMatrix::from_rows(
            vec!["m1".into(), "m2".into(), "m3".into()],
            vec!["l".into()],
            vec![vec![Some(1.0)], vec![Some(2.0)], vec![Some(3.0)]],
        )
        .unwrap();
        assert_eq!(winning_number(&m).unwrap().totals, [2, 1, 0]);
    }

    #[test]
    fn ties_win_nothing() {
        let m = RankMatrix::from_rows(
            vec!["a".into(), "b".into()],
            vec!["x".into(), "y".into()],
            vec![vec![Some(1.0), Some(2.0)], vec![Some(1.0), Some(2.0)]],
        )
        .unwrap();
        assert_eq!(winning_number(&m).unwrap().totals, [0, 0]);
    }

    #[test]
    fn missing_cells_are_listed() {
        let mut m = RankMatrix::new(vec!["a".into(), "b".into()], vec!["x".into()]);
        assert!(m.set("a", "x", 1.0));
        match winning_number(&m) {
            Err(Error::MissingCells(h)) => assert_eq!(h, [("b".to_string(), "x".to_string())]),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn tau_examples() {
        let id = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(kendall_tau_b(&id, &id).unwrap().tau_b, 1.0);
        assert_eq!(kendall_tau_b(&id, &[4.0, 3.0, 2.0, 1.0]).unwrap().tau_b, -1.0);
        let t = kendall_tau_b(&id, &[1.0, 3.0, 2.0, 4.0]).unwrap();
        assert!((t.tau_b - 2.0 / 3.0).abs() < 1e-12);
        assert!(t.exact);
        assert!(matches!(
            kendall_tau_b(&id, &[1.0, 1.0, 1.0, 1.0]),
            Err(Error::UndefinedCorrelation(_))
        ));
    }

    #[test]
    fn tau_with_ties() {
        // pairs: 5 untied in r1; tie-adjusted denominators sqrt(5 * 6)
        let t = kendall_tau_b(&[1.0, 1.0, 2.0, 3.0], &[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert!((t.tau_b - 5.0 / 30f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn exact_p_small() {
        // 3 items: only the identity and its reverse reach |S| = 3
        let t = kendall_tau_b(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap();
        assert!((t.p_value - 2.0 / 6.0).abs() < 1e-12);
        assert!(!t.reject_at_05);
    }

    #[test]
    fn f_score_values() {
        assert_eq!(f_score(1.0, 1.0), 1.0);
        assert_eq!(f_score(0.0, 0.0), 0.0);
        assert!((f_score(1.0, 0.5) - 2.0 / 3.0).abs() < 1e-12);
    }
}
