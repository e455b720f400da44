//! Multistart driver: randomized construction followed by iterative realignment.
//!
//! A refinement pass visits each row in turn, pulls it out, realigns its residues
//! against the consensus of the remaining rows and keeps the result only when the
//! aggregate objective strictly improves. Passes repeat until one makes no change
//! or the pass cap is hit.

use log::{debug, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::construct::{build_distance_matrix, construct_with_matrix, merge_row, ConstructConfig, ConstructionTrace};
use crate::error::{Error, Result};
use crate::folding::consensus_columns;
use crate::objective::{evaluate_alignment, ObjectiveParams, ObjectiveValue};
use crate::pairwise::needleman_wunsch;
use crate::seqmodel::{Alignment, SequenceSet};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraspConfig {
    pub restarts: usize,
    pub max_refine_passes: usize,
    /// `rng_seed` is ignored here; each restart derives its own from `master_seed`.
    pub construct: ConstructConfig,
    pub objective: ObjectiveParams,
    pub master_seed: u64,
    /// Run restarts on the rayon pool. Results do not depend on this flag.
    #[serde(default)]
    pub parallel: bool,
}

impl Default for GraspConfig {
    fn default() -> Self {
        Self {
            restarts: 10,
            max_refine_passes: 50,
            construct: ConstructConfig::default(),
            objective: ObjectiveParams::default(),
            master_seed: 0,
            parallel: true,
        }
    }
}

impl GraspConfig {
    pub fn validate(&self) -> Result<()> {
        if self.restarts == 0 {
            return Err(Error::InvalidParams("restarts must be at least 1".into()));
        }
        if self.max_refine_passes == 0 {
            return Err(Error::InvalidParams("max_refine_passes must be at least 1".into()));
        }
        self.construct.validate()?;
        self.objective.validate()
    }
}

/// SplitMix64 finalizer over `master + (index + 1) * golden-gamma`.
pub fn restart_seed(master_seed: u64, index: usize) -> u64 {
    let mut z = master_seed.wrapping_add((index as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RefineOutcome {
    pub alignment: Alignment,
    pub value: ObjectiveValue,
    pub improved: bool,
    pub accepted_moves: usize,
    /// Rows whose move was skipped because the remainder had no consensus.
    pub skipped_rows: Vec<usize>,
}

/// Realigns `row` against the consensus of the other rows. `None` when the
/// remainder's consensus is empty.
pub fn realign_row(a: &Alignment, row: usize, p: &ObjectiveParams) -> Result<Option<Alignment>> {
    let (remainder, removed) = a.remove_row(row)?;
    let remainder = remainder.canonicalize();
    let columns = consensus_columns(&remainder);
    let consensus: Vec<u8> = columns.iter().flatten().copied().collect();
    if consensus.is_empty() {
        return Ok(None);
    }
    let pw = needleman_wunsch(removed.residues(), &consensus, &p.pair_scoring);
    let guide: Vec<bool> = columns.iter().map(Option::is_some).collect();
    let merged = merge_row(&remainder, &guide, &pw.row_b, &pw.row_a, removed.id(), row);
    Ok(Some(merged.canonicalize()))
}

/// One refinement pass over `order`.
pub fn refine_pass(a: &Alignment, p: &ObjectiveParams, order: &[usize]) -> Result<RefineOutcome> {
    let value = evaluate_alignment(a, p)?;
    refine_pass_from(a, value, p, order)
}

fn refine_pass_from(
    a: &Alignment,
    value: ObjectiveValue,
    p: &ObjectiveParams,
    order: &[usize],
) -> Result<RefineOutcome> {
    if a.num_rows() < 2 {
        return Err(Error::InvalidAlignment("refinement needs at least 2 rows".into()));
    }
    let mut current = a.clone();
    let mut current_value = value;
    let mut accepted = 0;
    let mut skipped = Vec::new();
    for &row in order {
        let Some(candidate) = realign_row(&current, row, p)? else {
            debug!("row {row}: remainder has an empty consensus, move skipped");
            skipped.push(row);
            continue;
        };
        if candidate == current {
            continue;
        }
        let cand_value = match evaluate_alignment(&candidate, p) {
            Ok(v) => v,
            Err(Error::DegenerateConsensus) => {
                debug!("row {row}: candidate has an empty consensus, move skipped");
                skipped.push(row);
                continue;
            }
            Err(e) => return Err(e),
        };
        if cand_value.fmo > current_value.fmo {
            current = candidate;
            current_value = cand_value;
            accepted += 1;
        }
    }
    Ok(RefineOutcome {
        alignment: current,
        value: current_value,
        improved: accepted > 0,
        accepted_moves: accepted,
        skipped_rows: skipped,
    })
}

/// Passes repeated until no move is accepted or `max_passes` have run.
#[derive(Debug, Clone, PartialEq)]
pub struct Refinement {
    pub alignment: Alignment,
    pub value: ObjectiveValue,
    /// fmo after every pass, starting with the unrefined value.
    pub trajectory: Vec<f64>,
    pub passes: usize,
    pub cap_reached: bool,
}

pub fn refine(a: &Alignment, p: &ObjectiveParams, max_passes: usize) -> Result<Refinement> {
    let order: Vec<usize> = (0..a.num_rows()).collect();
    let mut value = evaluate_alignment(a, p)?;
    let mut current = a.clone();
    let mut trajectory = vec![value.fmo];
    let mut passes = 0;
    let mut improved = true;
    while improved && passes < max_passes {
        let out = refine_pass_from(&current, value, p, &order)?;
        passes += 1;
        improved = out.improved;
        current = out.alignment;
        value = out.value;
        trajectory.push(value.fmo);
    }
    Ok(Refinement {
        alignment: current,
        value,
        trajectory,
        passes,
        cap_reached: improved,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RestartRecord {
    pub index: usize,
    pub seed: u64,
    pub initial: ObjectiveValue,
    pub refined: ObjectiveValue,
    pub passes: usize,
    /// The last pass still improved when the cap stopped refinement.
    pub cap_reached: bool,
    pub trajectory: Vec<f64>,
    pub trace: ConstructionTrace,
    pub initial_alignment: Alignment,
    pub refined_alignment: Alignment,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GraspResult {
    pub best: Alignment,
    pub best_value: ObjectiveValue,
    pub best_restart: usize,
    pub per_restart: Vec<RestartRecord>,
}

fn run_restart(
    set: &SequenceSet,
    dm: &crate::construct::DistanceMatrix,
    cfg: &GraspConfig,
    index: usize,
) -> Result<RestartRecord> {
    let seed = restart_seed(cfg.master_seed, index);
    let construct = ConstructConfig {
        rng_seed: seed,
        ..cfg.construct
    };
    let (initial_alignment, trace) =
        construct_with_matrix(set, dm, &construct, &cfg.objective.pair_scoring)?;
    let refined = refine(&initial_alignment, &cfg.objective, cfg.max_refine_passes)?;
    if refined.cap_reached {
        warn!(
            "restart {index}: refinement stopped by the pass cap ({}) while still improving",
            cfg.max_refine_passes
        );
    }
    Ok(RestartRecord {
        index,
        seed,
        initial: evaluate_alignment(&initial_alignment, &cfg.objective)?,
        refined: refined.value,
        passes: refined.passes,
        cap_reached: refined.cap_reached,
        trajectory: refined.trajectory,
        trace,
        initial_alignment,
        refined_alignment: refined.alignment,
    })
}

pub fn grasp_run(set: &SequenceSet, cfg: &GraspConfig) -> Result<GraspResult> {
    cfg.validate()?;
    let dm = build_distance_matrix(set, &cfg.objective.pair_scoring);
    let records: Vec<RestartRecord> = if cfg.parallel {
        (0..cfg.restarts)
            .into_par_iter()
            .map(|r| run_restart(set, &dm, cfg, r))
            .collect::<Result<_>>()?
    } else {
        (0..cfg.restarts)
            .map(|r| run_restart(set, &dm, cfg, r))
            .collect::<Result<_>>()?
    };
    let mut best = 0;
    for (i, r) in records.iter().enumerate() {
        if r.refined.fmo > records[best].refined.fmo {
            best = i;
        }
    }
    Ok(GraspResult {
        best: records[best].refined_alignment.clone(),
        best_value: records[best].refined,
        best_restart: best,
        per_restart: records,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::construct::construct_initial;

    fn aln(rows: &[&str]) -> Alignment {
        Alignment::from_rows(rows.iter().enumerate().map(|(i, r)| (format!("s{i}"), *r))).unwrap()
    }

    const FIVE: &str = ">a\nGGGAUCCAAAGGAUCCC\n>b\nGGAUCCAAAGGAUCCC\n>c\nGGGAUCAAAGGAUCC\n\
                        >d\nGGGUCCAAAGGUCCC\n>e\nGGAUCCAAAGAUCCCA\n";

    #[test]
    fn fixed_point_is_unchanged() {
        let a = aln(&["GGGAAAACCC", "GGGAAAACCC"]);
        let out = refine_pass(&a, &ObjectiveParams::default(), &[0, 1]).unwrap();
        assert!(!out.improved);
        assert_eq!(out.alignment, a);
    }

    #[test]
    fn shifted_pair_improves_or_stays() {
        let a = aln(&["GA-UC", "G-AUC"]);
        let p = ObjectiveParams::default();
        let before = evaluate_alignment(&a, &p).unwrap();
        let out = refine_pass(&a, &p, &[0, 1]).unwrap();
        if out.improved {
            assert!(out.value.fmo > before.fmo);
        } else {
            assert_eq!(out.alignment, a);
            assert_eq!(out.value, before);
        }
        // the gap-free realignment loses the GAAUC consensus hairpin, so it is refused
        assert!(!out.improved);
    }

    #[test]
    fn improving_move_is_accepted() {
        let a = aln(&["GGGAAAA-CCC", "GGGAAAAC-CC"]);
        let p = ObjectiveParams::default();
        let before = evaluate_alignment(&a, &p).unwrap();
        let out = refine_pass(&a, &p, &[0, 1]).unwrap();
        assert!(out.improved);
        assert!(out.value.fmo > before.fmo);
        assert_eq!(out.alignment.row_str(0), "GGGAAAACCC");
    }

    #[test]
    fn refine_pass_rejects_single_row() {
        let a = aln(&["GAUC"]);
        assert!(refine_pass(&a, &ObjectiveParams::default(), &[0]).is_err());
    }

    #[test]
    fn realigned_row_keeps_invariants() {
        let a = aln(&["GGA-UCC", "GG-AUCC", "G-GAUCC"]);
        let sources = a.sequences();
        for r in 0..3 {
            let c = realign_row(&a, r, &ObjectiveParams::default()).unwrap().unwrap();
            c.check_sources(&sources).unwrap();
            assert!(c.is_canonical());
            assert_eq!(c.ids(), a.ids());
        }
    }

    #[test]
    fn trajectory_is_monotone() {
        let set = SequenceSet::from_fasta(FIVE).unwrap();
        let (a, _) = construct_initial(&set, &ConstructConfig::default(), &Default::default()).unwrap();
        let r = refine(&a, &ObjectiveParams::default(), 50).unwrap();
        assert!(r.trajectory.windows(2).all(|w| w[1] >= w[0]));
        assert_eq!(r.trajectory.len(), r.passes + 1);
        assert!(r.passes <= 50);
    }

    #[test]
    fn seeds_are_distinct_and_stable() {
        let seeds: Vec<u64> = (0..8).map(|r| restart_seed(42, r)).collect();
        let mut sorted = seeds.clone();
        sorted.sort_unstable();
        sorted.dedup();
        assert_eq!(sorted.len(), 8);
        assert_eq!(seeds[3], restart_seed(42, 3));
        assert_ne!(restart_seed(1, 0), restart_seed(2, 0));
    }

    #[test]
    fn single_deterministic_restart_matches_pipeline() {
        let set = SequenceSet::from_fasta(FIVE).unwrap();
        let cfg = GraspConfig {
            restarts: 1,
            construct: ConstructConfig {
                p_random: 0.0,
                ..Default::default()
            },
            ..Default::default()
        };
        let res = grasp_run(&set, &cfg).unwrap();
        let (a, _) = construct_initial(&set, &cfg.construct, &cfg.objective.pair_scoring).unwrap();
        let r = refine(&a, &cfg.objective, cfg.max_refine_passes).unwrap();
        assert_eq!(res.best, r.alignment);
        assert_eq!(res.best_value, r.value);
    }

    #[test]
    fn best_is_max_over_restarts() {
        let set = SequenceSet::from_fasta(FIVE).unwrap();
        let cfg = GraspConfig {
            restarts: 6,
            master_seed: 9,
            ..Default::default()
        };
        let res = grasp_run(&set, &cfg).unwrap();
        let max = res
            .per_restart
            .iter()
            .map(|r| r.refined.fmo)
            .fold(f64::NEG_INFINITY, f64::max);
        assert_eq!(res.best_value.fmo, max);
        for r in &res.per_restart {
            assert!(r.refined.fmo >= r.initial.fmo);
            assert!(res.best_value.fmo >= r.initial.fmo);
        }
    }

    #[test]
    fn config_validation() {
        assert!(GraspConfig { restarts: 0, ..Default::default() }.validate().is_err());
        assert!(GraspConfig { max_refine_passes: 0, ..Default::default() }.validate().is_err());
    }
}
