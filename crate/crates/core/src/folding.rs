//! Consensus extraction and minimum-free-energy folding under a base-pair energy
//! model.
//!
//! Structures are nested (no pseudoknots), pair only `AU`, `GC` and `GU` in either
//! orientation, use each position at most once and keep `j - i >= 4`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seqmodel::{Alignment, RnaSequence, BASES, GAP};

/// Minimum index separation of a base pair.
pub const MIN_PAIR_SEPARATION: usize = 4;

/// Stacking-free energy model: each pair contributes a fixed negative energy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyModel {
    pub gc: f64,
    pub au: f64,
    pub gu: f64,
}

impl Default for EnergyModel {
    fn default() -> Self {
        Self {
            gc: -3.0,
            au: -2.0,
            gu: -1.0,
        }
    }
}

impl EnergyModel {
    pub fn validate(&self) -> Result<()> {
        for (name, e) in [("GC", self.gc), ("AU", self.au), ("GU", self.gu)] {
            if !(e < 0.0 && e.is_finite()) {
                return Err(Error::InvalidParams(format!(
                    "{name} pair energy {e} must be negative and finite"
                )));
            }
        }
        Ok(())
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            gc: self.gc * factor,
            au: self.au * factor,
            gu: self.gu * factor,
        }
    }

    /// Energy of pairing `x` with `y`, or `None` for a non-canonical couple.
    #[inline]
    pub fn pair_energy(&self, x: u8, y: u8) -> Option<f64> {
        match (x, y) {
            (b'G', b'C') | (b'C', b'G') => Some(self.gc),
            (b'A', b'U') | (b'U', b'A') => Some(self.au),
            (b'G', b'U') | (b'U', b'G') => Some(self.gu),
            _ => None,
        }
    }
}

/// Base pairs as 1-based `(i, j)` with `i < j`, sorted by `i`.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SecondaryStructure {
    pairs: Vec<(usize, usize)>,
}

impl SecondaryStructure {
    pub fn new(mut pairs: Vec<(usize, usize)>) -> Self {
        pairs.sort_unstable();
        Self { pairs }
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Checks every pair against `seq`, reporting the first violated criterion.
    pub fn validate(&self, seq: &[u8]) -> Result<()> {
        let len = seq.len();
        let mut partner = vec![0usize; len + 1];
        for &(i, j) in &self.pairs {
            let fail = |criterion| Err(Error::InvalidStructure { i, j, criterion });
            if !(1 <= i && i < j && j <= len) {
                return fail("index order 1 <= i < j <= length");
            }
            if j - i < MIN_PAIR_SEPARATION {
                return fail("minimum separation j - i >= 4");
            }
            if EnergyModel::default().pair_energy(seq[i - 1], seq[j - 1]).is_none() {
                return fail("allowed base couples AU, GC, GU");
            }
            if partner[i] != 0 || partner[j] != 0 {
                return fail("each position paired at most once");
            }
            partner[i] = j;
            partner[j] = i;
        }
        for (a, &(i, j)) in self.pairs.iter().enumerate() {
            for &(k, l) in &self.pairs[a + 1..] {
                if i < k && k < j && j < l {
                    return Err(Error::InvalidStructure {
                        i: k,
                        j: l,
                        criterion: "nesting (no crossing pairs)",
                    });
                }
            }
        }
        Ok(())
    }

    pub fn dot_bracket(&self, len: usize) -> String {
        let mut out = vec![b'.'; len];
        for &(i, j) in &self.pairs {
            out[i - 1] = b'(';
            out[j - 1] = b')';
        }
        String::from_utf8(out).expect("ascii")
    }

    pub fn from_dot_bracket(text: &str) -> Result<Self> {
        let mut stack = Vec::new();
        let mut pairs = Vec::new();
        for (pos, ch) in text.chars().enumerate() {
            match ch {
                '(' => stack.push(pos + 1),
                ')' => {
                    let i = stack
                        .pop()
                        .ok_or_else(|| Error::parse(1, format!("unmatched ')' at {}", pos + 1)))?;
                    pairs.push((i, pos + 1));
                }
                '.' => {}
                other => return Err(Error::parse(1, format!("bad dot-bracket symbol '{other}'"))),
            }
        }
        if let Some(i) = stack.pop() {
            return Err(Error::parse(1, format!("unmatched '(' at {i}")));
        }
        Ok(Self::new(pairs))
    }
}

/// Sum of pair energies after validating `st` against `seq`.
pub fn structure_energy(seq: &[u8], st: &SecondaryStructure, model: &EnergyModel) -> Result<f64> {
    st.validate(seq)?;
    Ok(st
        .pairs()
        .iter()
        .map(|&(i, j)| {
            model
                .pair_energy(seq[i - 1], seq[j - 1])
                .expect("validated pair")
        })
        .sum())
}

/// Per-column consensus symbol, `None` where gaps hold a strict majority.
///
/// Bases tie-break in `A < C < G < U` order.
pub fn consensus_columns(a: &Alignment) -> Vec<Option<u8>> {
    let rows = a.num_rows();
    (0..a.width())
        .map(|c| {
            let mut counts = [0usize; 4];
            let mut gaps = 0usize;
            for r in a.rows() {
                match r[c] {
                    GAP => gaps += 1,
                    b => counts[BASES.iter().position(|&x| x == b).expect("base")] += 1,
                }
            }
            if 2 * gaps > rows {
                return None;
            }
            let mut best = 0;
            for k in 1..4 {
                if counts[k] > counts[best] {
                    best = k;
                }
            }
            Some(BASES[best])
        })
        .collect()
}

pub fn consensus(a: &Alignment) -> Result<RnaSequence> {
    let residues: Vec<u8> = consensus_columns(a).into_iter().flatten().collect();
    if residues.is_empty() {
        return Err(Error::DegenerateConsensus);
    }
    RnaSequence::new("consensus", residues)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Fold {
    pub structure: SecondaryStructure,
    pub energy: f64,
}

/// Minimum-energy nested structure of `seq`.
///
/// `best[i][j]` is the optimum over the half-open window `seq[i..j]`; the last
/// position of a window is either unpaired or paired with some `k`. Ties keep the
/// last position unpaired, then prefer the smallest `k` (widest pair).
pub fn fold_mfe(seq: &[u8], model: &EnergyModel) -> Fold {
    let n = seq.len();
    let stride = n + 1;
    let mut best = vec![0.0f64; stride * stride];
    let at = |i: usize, j: usize| i * stride + j;

    for span in (MIN_PAIR_SEPARATION + 1)..=n {
        for i in 0..=(n - span) {
            let j = i + span;
            let last = j - 1;
            let mut v = best[at(i, last)];
            for k in i..=(last - MIN_PAIR_SEPARATION) {
                if let Some(e) = model.pair_energy(seq[k], seq[last]) {
                    let cand = best[at(i, k)] + e + best[at(k + 1, last)];
                    if cand < v {
                        v = cand;
                    }
                }
            }
            best[at(i, j)] = v;
        }
    }

    let mut pairs = Vec::new();
    let mut stack = vec![(0usize, n)];
    while let Some((i, j)) = stack.pop() {
        if j < i + MIN_PAIR_SEPARATION + 1 {
            continue;
        }
        let last = j - 1;
        let v = best[at(i, j)];
        if v == best[at(i, last)] {
            stack.push((i, last));
            continue;
        }
        let k = (i..=(last - MIN_PAIR_SEPARATION))
            .find(|&k| {
                model
                    .pair_energy(seq[k], seq[last])
                    .is_some_and(|e| best[at(i, k)] + e + best[at(k + 1, last)] == v)
            })
            .expect("traceback follows a recorded optimum");
        pairs.push((k + 1, j));
        stack.push((i, k));
        stack.push((k + 1, last));
    }

    Fold {
        structure: SecondaryStructure::new(pairs),
        energy: best[at(0, n)],
    }
}
