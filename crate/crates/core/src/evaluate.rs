//! Alignment quality metrics and the Friedman rank test.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::folding::{consensus, fold_mfe, EnergyModel};
use crate::seqmodel::{Alignment, GAP};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub dataset: String,
    pub sps: Option<f64>,
    pub sci: f64,
}

/// Column index of every residue in every row, keyed by row id.
fn residue_columns(a: &Alignment) -> HashMap<&str, Vec<usize>> {
    a.ids()
        .iter()
        .enumerate()
        .map(|(r, id)| {
            let cols = a
                .row(r)
                .iter()
                .enumerate()
                .filter(|(_, &b)| b != GAP)
                .map(|(c, _)| c)
                .collect();
            (id.as_str(), cols)
        })
        .collect()
}

/// Sum-of-pairs sensitivity: the fraction of residue pairs sharing a reference
/// column that also share a column in `test`.
///
/// A reference with no residue pair at all scores 1.0 (nothing to recover).
pub fn sps_score(test: &Alignment, reference: &Alignment) -> Result<f64> {
    if test.num_rows() != reference.num_rows() {
        return Err(Error::Mismatch(format!(
            "test has {} rows, reference has {}",
            test.num_rows(),
            reference.num_rows()
        )));
    }
    for (r, id) in reference.ids().iter().enumerate() {
        let t = test
            .row_index(id)
            .ok_or_else(|| Error::Mismatch(format!("reference id '{id}' missing from test")))?;
        if test.degap(t) != reference.degap(r) {
            return Err(Error::Mismatch(format!(
                "row '{id}' has different residues in test and reference"
            )));
        }
    }
    let test_cols = residue_columns(test);
    let rows: Vec<&Vec<usize>> = reference.ids().iter().map(|id| &test_cols[id.as_str()]).collect();

    let n = reference.num_rows();
    let mut next_residue = vec![0usize; n];
    let mut correct: u64 = 0;
    let mut total: u64 = 0;
    let mut occupied: Vec<(usize, usize)> = Vec::with_capacity(n);
    for c in 0..reference.width() {
        occupied.clear();
        for (r, next) in next_residue.iter_mut().enumerate() {
            if reference.row(r)[c] != GAP {
                occupied.push((r, *next));
                *next += 1;
            }
        }
        for x in 0..occupied.len() {
            for y in (x + 1)..occupied.len() {
                let (r1, k1) = occupied[x];
                let (r2, k2) = occupied[y];
                total += 1;
                if rows[r1][k1] == rows[r2][k2] {
                    correct += 1;
                }
            }
        }
    }
    Ok(if total == 0 {
        1.0
    } else {
        correct as f64 / total as f64
    })
}

/// Structure conservation index: consensus MFE over the mean single-sequence MFE.
/// Zero when no row can fold.
pub fn sci_score(a: &Alignment, model: &EnergyModel) -> Result<f64> {
    let cons = consensus(a)?;
    let numerator = fold_mfe(cons.residues(), model).energy;
    let denominator = (0..a.num_rows())
        .map(|r| fold_mfe(&a.degap(r), model).energy)
        .sum::<f64>()
        / a.num_rows() as f64;
    Ok(if denominator < 0.0 {
        numerator / denominator
    } else {
        0.0
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FriedmanResult {
    pub statistic: f64,
    pub df: usize,
    pub p_value: f64,
    pub rank_sums: Vec<f64>,
    pub reject: bool,
}

/// Ascending ranks starting at 1, ties sharing their average rank.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut start = 0;
    while start < idx.len() {
        let mut end = start + 1;
        while end < idx.len() && values[idx[end]] == values[idx[start]] {
            end += 1;
        }
        // positions start..end hold ranks start+1..=end
        let avg = (start + 1 + end) as f64 / 2.0;
        for &i in &idx[start..end] {
            ranks[i] = avg;
        }
        start = end;
    }
    ranks
}

/// Friedman test over `scores[block][treatment]` at significance `alpha`.
pub fn friedman_test(scores: &[Vec<f64>], alpha: f64) -> Result<FriedmanResult> {
    let n = scores.len();
    if n < 2 {
        return Err(Error::InvalidParams(format!("need at least 2 blocks, got {n}")));
    }
    let k = scores[0].len();
    if k < 2 {
        return Err(Error::InvalidParams(format!("need at least 2 treatments, got {k}")));
    }
    if let Some(b) = scores.iter().position(|row| row.len() != k) {
        return Err(Error::InvalidParams(format!("block {b} has a different treatment count")));
    }
    if scores.iter().flatten().any(|v| v.is_nan()) {
        return Err(Error::InvalidParams("scores contain NaN".into()));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidParams(format!("significance level {alpha} outside (0, 1)")));
    }

    let mut rank_sums = vec![0.0; k];
    for block in scores {
        for (sum, r) in rank_sums.iter_mut().zip(average_ranks(block)) {
            *sum += r;
        }
    }
    let (nf, kf) = (n as f64, k as f64);
    let sum_sq: f64 = rank_sums.iter().map(|r| r * r).sum();
    let statistic = (12.0 / (nf * kf * (kf + 1.0)) * sum_sq - 3.0 * nf * (kf + 1.0)).max(0.0);
    let df = k - 1;
    let p_value = chi_square_sf(statistic, df as f64);
    Ok(FriedmanResult {
        statistic,
        df,
        p_value,
        rank_sums,
        reject: p_value < alpha,
    })
}

/// Upper-tail probability of the chi-square distribution.
pub fn chi_square_sf(x: f64, df: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    regularized_gamma_q(df / 2.0, x / 2.0)
}

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        // reflection
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = LANCZOS[0];
    for (i, &c) in LANCZOS.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + LANCZOS_G + 0.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

const GAMMA_EPS: f64 = 1e-16;
const GAMMA_MAX_ITER: usize = 10_000;

/// `P(a, x)` by its power series; converges quickly for `x < a + 1`.
fn gamma_p_series(a: f64, x: f64) -> f64 {
    let mut term = 1.0 / a;
    let mut sum = term;
    let mut ap = a;
    for _ in 0..GAMMA_MAX_ITER {
        ap += 1.0;
        term *= x / ap;
        sum += term;
        if term.abs() < sum.abs() * GAMMA_EPS {
            break;
        }
    }
    sum * (-x + a * x.ln() - ln_gamma(a)).exp()
}

/// `Q(a, x)` by modified Lentz continued fraction; used for `x >= a + 1`.
fn gamma_q_fraction(a: f64, x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..GAMMA_MAX_ITER {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < TINY {
            d = TINY;
        }
        c = b + an / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < GAMMA_EPS {
            break;
        }
    }
    (-x + a * x.ln() - ln_gamma(a)).exp() * h
}

/// Regularized upper incomplete gamma function `Q(a, x) = Γ(a, x) / Γ(a)`.
pub fn regularized_gamma_q(a: f64, x: f64) -> f64 {
    assert!(a > 0.0, "shape must be positive");
    if x <= 0.0 {
        return 1.0;
    }
    if x < a + 1.0 {
        (1.0 - gamma_p_series(a, x)).clamp(0.0, 1.0)
    } else {
        gamma_q_fraction(a, x).clamp(0.0, 1.0)
    }
}
