//! Weighted sum-of-pairs similarity, consensus MFE and their weighted aggregate.
//!
//! The aggregate is maximized: `fmo = alpha * wsps - (1 - alpha) * mfe`. Since
//! `mfe <= 0` the energy term never lowers the score.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::folding::{consensus, fold_mfe, EnergyModel, Fold};
use crate::pairwise::{distance, PairScoringParams};
use crate::seqmodel::{Alignment, RnaSequence, SequenceSet};

/// Per-sequence weights for the sum-of-pairs term, looked up by row id.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SequenceWeights {
    #[default]
    Uniform,
    PerSequence(BTreeMap<String, f64>),
}

impl SequenceWeights {
    /// Weights `1 / (1 + mean distance to the others)`, rescaled to mean 1.
    pub fn from_distances(set: &SequenceSet, p: &PairScoringParams) -> Self {
        let n = set.len();
        let raw: Vec<f64> = (0..n)
            .map(|i| {
                let total: f64 = (0..n)
                    .filter(|&j| j != i)
                    .map(|j| distance(set.get(i).residues(), set.get(j).residues(), p))
                    .sum();
                1.0 / (1.0 + total / (n - 1) as f64)
            })
            .collect();
        let mean = raw.iter().sum::<f64>() / n as f64;
        SequenceWeights::PerSequence(
            set.iter()
                .zip(raw)
                .map(|(s, w)| (s.id().to_string(), w / mean))
                .collect(),
        )
    }

    pub fn weight(&self, id: &str) -> f64 {
        match self {
            SequenceWeights::Uniform => 1.0,
            SequenceWeights::PerSequence(map) => map.get(id).copied().unwrap_or(1.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveParams {
    /// Weight on WSPS; the MFE weight is `1 - alpha`.
    pub alpha: f64,
    pub pair_scoring: PairScoringParams,
    pub energy_model: EnergyModel,
    pub weights: SequenceWeights,
}

impl Default for ObjectiveParams {
    fn default() -> Self {
        Self {
            alpha: 0.3,
            pair_scoring: PairScoringParams::default(),
            energy_model: EnergyModel::default(),
            weights: SequenceWeights::Uniform,
        }
    }
}

impl ObjectiveParams {
    pub fn with_alpha(alpha: f64) -> Self {
        Self {
            alpha,
            ..Self::default()
        }
    }

    #[inline]
    pub fn beta(&self) -> f64 {
        1.0 - self.alpha
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::InvalidParams(format!(
                "alpha {} outside [0, 1]",
                self.alpha
            )));
        }
        if let SequenceWeights::PerSequence(map) = &self.weights {
            if let Some((id, w)) = map.iter().find(|(_, w)| !(**w > 0.0 && w.is_finite())) {
                return Err(Error::InvalidParams(format!("weight {w} for '{id}' must be positive")));
            }
        }
        self.pair_scoring.validate()?;
        self.energy_model.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveValue {
    pub wsps: f64,
    pub mfe: f64,
    pub fmo: f64,
}

/// Score of two aligned rows: substitution scores for residue pairs, the gap
/// penalty for residue against gap, nothing for gap against gap.
pub fn pair_score(x: &[u8], y: &[u8], p: &PairScoringParams) -> i64 {
    x.iter().zip(y).map(|(&u, &v)| i64::from(p.column(u, v))).sum()
}

pub fn wsps(a: &Alignment, p: &ObjectiveParams) -> f64 {
    let n = a.num_rows();
    let weights: Vec<f64> = a.ids().iter().map(|id| p.weights.weight(id)).collect();
    let mut total = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            total += weights[i] * weights[j] * pair_score(a.row(i), a.row(j), &p.pair_scoring) as f64;
        }
    }
    total
}

#[inline]
pub fn fmo_aggregate(wsps: f64, mfe: f64, p: &ObjectiveParams) -> f64 {
    p.alpha * wsps - p.beta() * mfe
}

/// Objective value together with the consensus fold it was derived from.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub value: ObjectiveValue,
    pub consensus: RnaSequence,
    pub fold: Fold,
}

pub fn evaluate_detailed(a: &Alignment, p: &ObjectiveParams) -> Result<Evaluation> {
    let consensus = consensus(a)?;
    let fold = fold_mfe(consensus.residues(), &p.energy_model);
    let wsps = wsps(a, p);
    let value = ObjectiveValue {
        wsps,
        mfe: fold.energy,
        fmo: fmo_aggregate(wsps, fold.energy, p),
    };
    Ok(Evaluation {
        value,
        consensus,
        fold,
    })
}

pub fn evaluate_alignment(a: &Alignment, p: &ObjectiveParams) -> Result<ObjectiveValue> {
    evaluate_detailed(a, p).map(|e| e.value)
}
