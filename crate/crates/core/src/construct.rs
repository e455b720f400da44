//! Randomized progressive construction of an initial alignment.
//!
//! Start from the closest pair, then repeatedly pick an unaligned sequence (the
//! closest one to the aligned set, or a uniformly random one), align it to its
//! closest already-aligned sequence and propagate the new gaps into every row.
//! A local aligner replaces the global one when the two lengths differ by more
//! than the configured threshold.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pairwise::{distance, needleman_wunsch, smith_waterman, AlignmentKind, PairScoringParams};
use crate::seqmodel::{Alignment, RnaSequence, SequenceSet, GAP};

/// Length difference above which the local aligner is used.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LengthThreshold {
    /// Absolute difference in residues.
    Absolute(usize),
    /// Fraction of the longer length, in `(0, 1]`.
    Relative(f64),
}

impl LengthThreshold {
    pub fn exceeded(&self, len_a: usize, len_b: usize) -> bool {
        let diff = len_a.abs_diff(len_b);
        match *self {
            LengthThreshold::Absolute(k) => diff > k,
            LengthThreshold::Relative(f) => diff as f64 > f * len_a.max(len_b) as f64,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConstructConfig {
    pub k_threshold: LengthThreshold,
    /// A uniform draw `u` picks the closest sequence when `u > p_random` and a
    /// random one otherwise, so the greedy branch fires with probability
    /// `1 - p_random`.
    pub p_random: f64,
    pub rng_seed: u64,
}

impl Default for ConstructConfig {
    fn default() -> Self {
        Self {
            k_threshold: LengthThreshold::Relative(0.2),
            p_random: 0.6,
            rng_seed: 0,
        }
    }
}

impl ConstructConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.p_random) {
            return Err(Error::InvalidParams(format!(
                "p_random {} outside [0, 1]",
                self.p_random
            )));
        }
        if let LengthThreshold::Relative(f) = self.k_threshold {
            if !(f > 0.0 && f <= 1.0) {
                return Err(Error::InvalidParams(format!(
                    "relative length threshold {f} outside (0, 1]"
                )));
            }
        }
        Ok(())
    }
}

/// Symmetric pairwise distances with a zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    n: usize,
    cells: Vec<f64>,
}

impl DistanceMatrix {
    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.cells[i * self.n + j]
    }

    /// Closest pair `(i, j)` with `i < j`; ties go to the lexicographically first.
    pub fn closest_pair(&self) -> (usize, usize) {
        let mut best = (0, 1);
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                if self.get(i, j) < self.get(best.0, best.1) {
                    best = (i, j);
                }
            }
        }
        best
    }

    /// Member of `candidates` nearest to `target`; ties go to the earlier candidate.
    pub fn nearest(&self, target: usize, candidates: &[usize]) -> usize {
        let mut best = candidates[0];
        for &c in &candidates[1..] {
            if self.get(target, c) < self.get(target, best) {
                best = c;
            }
        }
        best
    }
}

pub fn build_distance_matrix(set: &SequenceSet, p: &PairScoringParams) -> DistanceMatrix {
    let n = set.len();
    let upper: Vec<(usize, usize, f64)> = (0..n)
        .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|(i, j)| (i, j, distance(set.get(i).residues(), set.get(j).residues(), p)))
        .collect();
    let mut cells = vec![0.0; n * n];
    for (i, j, d) in upper {
        cells[i * n + j] = d;
        cells[j * n + i] = d;
    }
    DistanceMatrix { n, cells }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Choice {
    Greedy,
    Random,
}

impl Choice {
    fn as_str(self) -> &'static str {
        match self {
            Choice::Greedy => "greedy",
            Choice::Random => "random",
        }
    }
}

fn kind_str(kind: AlignmentKind) -> &'static str {
    match kind {
        AlignmentKind::Global => "global",
        AlignmentKind::Local => "local",
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceStep {
    pub chosen: String,
    pub choice: Choice,
    pub aligner: AlignmentKind,
    pub anchor: String,
}

/// Every randomized decision taken by one construction run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstructionTrace {
    pub seed_pair: (String, String),
    pub seed_aligner: AlignmentKind,
    pub steps: Vec<TraceStep>,
}

impl ConstructionTrace {
    /// One line per decision: step index, chosen id, choice, aligner, anchor id.
    pub fn to_log(&self) -> String {
        let mut out = format!(
            "0\t{}\tseed\t{}\t{}\n",
            self.seed_pair.1,
            kind_str(self.seed_aligner),
            self.seed_pair.0
        );
        for (k, s) in self.steps.iter().enumerate() {
            let _ = writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}",
                k + 1,
                s.chosen,
                s.choice.as_str(),
                kind_str(s.aligner),
                s.anchor
            );
        }
        out
    }
}

/// Picks the next sequence to merge. Exactly one `f64` is drawn per call, plus
/// one index draw on the random branch.
pub fn select_next_sequence<R: Rng + ?Sized>(
    unaligned: &[usize],
    aligned: &[usize],
    dm: &DistanceMatrix,
    p_random: f64,
    rng: &mut R,
) -> (usize, Choice) {
    assert!(!unaligned.is_empty(), "no unaligned sequence left");
    let u: f64 = rng.gen();
    if u > p_random {
        let closeness = |s: usize| {
            aligned
                .iter()
                .map(|&a| dm.get(s, a))
                .fold(f64::INFINITY, f64::min)
        };
        let mut best = unaligned[0];
        for &s in &unaligned[1..] {
            if closeness(s) < closeness(best) || (closeness(s) == closeness(best) && s < best) {
                best = s;
            }
        }
        (best, Choice::Greedy)
    } else if unaligned.len() == 1 {
        (unaligned[0], Choice::Random)
    } else {
        (unaligned[rng.gen_range(0..unaligned.len())], Choice::Random)
    }
}

/// Pairwise alignment of `anchor` and `next` covering both sequences end to end.
/// For the local aligner, unaligned flanks are placed against gaps on either side
/// of the local block.
pub fn full_pairwise(
    anchor: &[u8],
    next: &[u8],
    threshold: LengthThreshold,
    p: &PairScoringParams,
) -> (Vec<u8>, Vec<u8>, AlignmentKind) {
    if !threshold.exceeded(anchor.len(), next.len()) {
        let r = needleman_wunsch(anchor, next, p);
        return (r.row_a, r.row_b, AlignmentKind::Global);
    }
    let r = smith_waterman(anchor, next, p);
    let span = r.span.expect("local alignment carries a span");
    let mut row_a = Vec::with_capacity(anchor.len() + next.len());
    let mut row_b = Vec::with_capacity(anchor.len() + next.len());

    row_a.extend_from_slice(&anchor[..span.a_start]);
    row_b.extend(std::iter::repeat_n(GAP, span.a_start));
    row_a.extend(std::iter::repeat_n(GAP, span.b_start));
    row_b.extend_from_slice(&next[..span.b_start]);

    row_a.extend_from_slice(&r.row_a);
    row_b.extend_from_slice(&r.row_b);

    let a_tail = &anchor[span.a_end..];
    let b_tail = &next[span.b_end..];
    row_a.extend_from_slice(a_tail);
    row_b.extend(std::iter::repeat_n(GAP, a_tail.len()));
    row_a.extend(std::iter::repeat_n(GAP, b_tail.len()));
    row_b.extend_from_slice(b_tail);

    (row_a, row_b, AlignmentKind::Local)
}

/// Adds a row to `a` from a pairwise alignment `(guide_row, new_row)`.
///
/// The residues of `guide_row` sit, in order, on the columns of `a` flagged in
/// `guide_columns`. Gaps in `guide_row` become new columns that are gapped in
/// every existing row; unflagged columns of `a` get a gap in the new row.
pub(crate) fn merge_row(
    a: &Alignment,
    guide_columns: &[bool],
    guide_row: &[u8],
    new_row: &[u8],
    new_id: &str,
    position: usize,
) -> Alignment {
    debug_assert_eq!(guide_columns.len(), a.width());
    debug_assert_eq!(
        guide_columns.iter().filter(|&&g| g).count(),
        guide_row.iter().filter(|&&b| b != GAP).count()
    );
    let n = a.num_rows();
    let cap = a.width() + guide_row.len();
    let mut rows: Vec<Vec<u8>> = (0..n).map(|_| Vec::with_capacity(cap)).collect();
    let mut added = Vec::with_capacity(cap);

    let (mut c, mut t) = (0, 0);
    while c < a.width() || t < guide_row.len() {
        if c < a.width() && !guide_columns[c] {
            for (r, row) in rows.iter_mut().enumerate() {
                row.push(a.row(r)[c]);
            }
            added.push(GAP);
            c += 1;
        } else if t < guide_row.len() && guide_row[t] == GAP {
            for row in rows.iter_mut() {
                row.push(GAP);
            }
            added.push(new_row[t]);
            t += 1;
        } else {
            for (r, row) in rows.iter_mut().enumerate() {
                row.push(a.row(r)[c]);
            }
            added.push(new_row[t]);
            c += 1;
            t += 1;
        }
    }

    let mut ids = a.ids().to_vec();
    ids.insert(position, new_id.to_string());
    rows.insert(position, added);
    Alignment::from_parts(ids, rows)
}

/// Aligns `next` to the degapped `anchor_row` of `a` and propagates the gaps.
pub fn align_and_merge(
    a: &Alignment,
    next: &RnaSequence,
    anchor_row: usize,
    threshold: LengthThreshold,
    p: &PairScoringParams,
) -> Result<(Alignment, AlignmentKind)> {
    if anchor_row >= a.num_rows() {
        return Err(Error::InvalidParams(format!(
            "anchor row {anchor_row} out of range for {} rows",
            a.num_rows()
        )));
    }
    if a.row_index(next.id()).is_some() {
        return Err(Error::InvalidParams(format!(
            "sequence '{}' is already aligned",
            next.id()
        )));
    }
    let anchor = a.degap(anchor_row);
    let (guide_row, new_row, kind) = full_pairwise(&anchor, next.residues(), threshold, p);
    let guide_columns: Vec<bool> = a.row(anchor_row).iter().map(|&b| b != GAP).collect();
    let merged = merge_row(a, &guide_columns, &guide_row, &new_row, next.id(), a.num_rows());
    Ok((merged.canonicalize(), kind))
}

/// Builds one initial alignment. Rows come back in input order.
pub fn construct_initial(
    set: &SequenceSet,
    cfg: &ConstructConfig,
    p: &PairScoringParams,
) -> Result<(Alignment, ConstructionTrace)> {
    let dm = build_distance_matrix(set, p);
    construct_with_matrix(set, &dm, cfg, p)
}

/// As [`construct_initial`], reusing a precomputed distance matrix.
pub fn construct_with_matrix(
    set: &SequenceSet,
    dm: &DistanceMatrix,
    cfg: &ConstructConfig,
    p: &PairScoringParams,
) -> Result<(Alignment, ConstructionTrace)> {
    cfg.validate()?;
    if dm.len() != set.len() {
        return Err(Error::Mismatch("distance matrix size differs from sequence count".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);

    let (i, j) = dm.closest_pair();
    let (mut aln, seed_aligner) = align_and_merge(
        &Alignment::single(set.get(i)),
        set.get(j),
        0,
        cfg.k_threshold,
        p,
    )?;
    let mut aligned = vec![i, j];
    let mut unaligned: Vec<usize> = (0..set.len()).filter(|&s| s != i && s != j).collect();
    let mut steps = Vec::with_capacity(unaligned.len());

    while !unaligned.is_empty() {
        let (next, choice) = select_next_sequence(&unaligned, &aligned, dm, cfg.p_random, &mut rng);
        let anchor = dm.nearest(next, &aligned);
        let anchor_row = aln
            .row_index(set.get(anchor).id())
            .expect("aligned sequences have rows");
        let (merged, kind) = align_and_merge(&aln, set.get(next), anchor_row, cfg.k_threshold, p)?;
        aln = merged;
        steps.push(TraceStep {
            chosen: set.get(next).id().to_string(),
            choice,
            aligner: kind,
            anchor: set.get(anchor).id().to_string(),
        });
        aligned.push(next);
        unaligned.retain(|&s| s != next);
    }

    let order: Vec<&str> = set.iter().map(|s| s.id()).collect();
    let aln = aln.reordered(&order)?;
    let trace = ConstructionTrace {
        seed_pair: (set.get(i).id().to_string(), set.get(j).id().to_string()),
        seed_aligner,
        steps,
    };
    Ok((aln, trace))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(fasta: &str) -> SequenceSet {
        SequenceSet::from_fasta(fasta).unwrap()
    }

    fn seq(id: &str, s: &str) -> RnaSequence {
        RnaSequence::new(id, s).unwrap()
    }

    #[test]
    fn thresholds() {
        assert!(LengthThreshold::Relative(0.2).exceeded(20, 4));
        assert!(!LengthThreshold::Relative(0.2).exceeded(10, 8));
        assert!(LengthThreshold::Relative(0.2).exceeded(10, 7));
        assert!(LengthThreshold::Absolute(3).exceeded(10, 6));
        assert!(!LengthThreshold::Absolute(3).exceeded(10, 7));
    }

    #[test]
    fn config_validation() {
        assert!(ConstructConfig::default().validate().is_ok());
        let bad = ConstructConfig {
            p_random: 1.5,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = ConstructConfig {
            k_threshold: LengthThreshold::Relative(0.0),
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn distance_matrix_small_cases() {
        let p = PairScoringParams::default();
        let dm = build_distance_matrix(&set(">a\nGAUC\n>b\nGAUC\n"), &p);
        assert_eq!(dm.cells, vec![0.0; 4]);
        let dm = build_distance_matrix(&set(">a\nAAAA\n>b\nGGGG\n"), &p);
        assert_eq!(dm.get(0, 1), 1.0);
        assert_eq!(dm.get(1, 0), 1.0);
    }

    #[test]
    fn single_unaligned_is_returned() {
        let p = PairScoringParams::default();
        let dm = build_distance_matrix(&set(">a\nGAUC\n>b\nGAC\n>c\nAAAA\n"), &p);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for p_random in [0.0, 0.6, 1.0] {
            assert_eq!(select_next_sequence(&[2], &[0, 1], &dm, p_random, &mut rng).0, 2);
        }
    }

    #[test]
    fn zero_p_random_is_greedy() {
        let p = PairScoringParams::default();
        let dm = build_distance_matrix(&set(">a\nGAUC\n>b\nAAAA\n>c\nGAC\n>d\nGAUC\n"), &p);
        for seed in 0..20 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (pick, choice) = select_next_sequence(&[1, 2, 3], &[0], &dm, 0.0, &mut rng);
            assert_eq!((pick, choice), (3, Choice::Greedy));
        }
    }

    #[test]
    fn merge_identical_row() {
        let p = PairScoringParams::default();
        let a = Alignment::single(&seq("a", "GAUC"));
        let (m, kind) = align_and_merge(&a, &seq("b", "GAUC"), 0, LengthThreshold::Relative(0.2), &p).unwrap();
        assert_eq!(kind, AlignmentKind::Global);
        assert_eq!(m.row_str(0), "GAUC");
        assert_eq!(m.row_str(1), "GAUC");
    }

    #[test]
    fn merge_shorter_row_global() {
        let p = PairScoringParams::default();
        let a = Alignment::single(&seq("a", "GAUC"));
        let (m, kind) = align_and_merge(&a, &seq("b", "GAC"), 0, LengthThreshold::Relative(0.3), &p).unwrap();
        assert_eq!(kind, AlignmentKind::Global);
        assert_eq!(m.width(), 4);
        assert_eq!(m.row_str(1), "GA-C");
    }

    #[test]
    fn merge_takes_local_path_on_length_gap() {
        let p = PairScoringParams::default();
        let a = Alignment::single(&seq("a", "UUUUUUUUGGCCAUUUUUUU"));
        let (m, kind) = align_and_merge(&a, &seq("b", "GGCC"), 0, LengthThreshold::Relative(0.2), &p).unwrap();
        assert_eq!(kind, AlignmentKind::Local);
        assert_eq!(m.row_str(0), "UUUUUUUUGGCCAUUUUUUU");
        assert_eq!(m.row_str(1), "--------GGCC--------");
    }

    #[test]
    fn local_with_no_hit_places_blocks_side_by_side() {
        let p = PairScoringParams::default();
        let (ra, rb, kind) = full_pairwise(b"AAAAAAAAAA", b"GG", LengthThreshold::Absolute(1), &p);
        assert_eq!(kind, AlignmentKind::Local);
        assert_eq!(ra, b"AAAAAAAAAA--");
        assert_eq!(rb, b"----------GG");
    }

    #[test]
    fn gaps_propagate_into_existing_rows() {
        let p = PairScoringParams::default();
        let a = Alignment::from_rows([("a", "GA-UC"), ("b", "GAAUC")]).unwrap();
        // anchor "GAUC" vs "GAUUC": one inserted column lands in both old rows
        let (m, _) = align_and_merge(&a, &seq("c", "GAUUC"), 0, LengthThreshold::Relative(0.5), &p).unwrap();
        assert_eq!(m.num_rows(), 3);
        for (r, s) in [(0, "GAUC"), (1, "GAAUC"), (2, "GAUUC")] {
            assert_eq!(m.degap(r), s.as_bytes());
        }
        assert!(m.is_canonical());
    }

    #[test]
    fn merge_rejects_bad_anchor() {
        let p = PairScoringParams::default();
        let a = Alignment::single(&seq("a", "GAUC"));
        assert!(align_and_merge(&a, &seq("b", "GAUC"), 1, LengthThreshold::Relative(0.2), &p).is_err());
        assert!(align_and_merge(&a, &seq("a", "GAUC"), 0, LengthThreshold::Relative(0.2), &p).is_err());
    }

    #[test]
    fn two_sequences_equal_pairwise() {
        let p = PairScoringParams::default();
        let s = set(">x\nGGGAUCCA\n>y\nGGAUCCA\n");
        let (aln, trace) = construct_initial(&s, &ConstructConfig::default(), &p).unwrap();
        let nw = needleman_wunsch(b"GGGAUCCA", b"GGAUCCA", &p);
        assert_eq!(aln.row(0), nw.row_a.as_slice());
        assert_eq!(aln.row(1), nw.row_b.as_slice());
        assert!(trace.steps.is_empty());
    }

    #[test]
    fn identical_sequences_need_no_gaps() {
        let p = PairScoringParams::default();
        let s = set(">a\nGGCAUU\n>b\nGGCAUU\n>c\nGGCAUU\n>d\nGGCAUU\n");
        for seed in 0..5 {
            let cfg = ConstructConfig {
                rng_seed: seed,
                ..Default::default()
            };
            let (aln, trace) = construct_initial(&s, &cfg, &p).unwrap();
            assert_eq!(aln.gap_count(), 0);
            assert_eq!(trace.steps.len(), 2);
        }
    }

    #[test]
    fn trace_log_has_one_line_per_decision() {
        let p = PairScoringParams::default();
        let s = set(">a\nGGCAUU\n>b\nGGCAU\n>c\nGCAUU\n>d\nGGAUU\n");
        let (_, trace) = construct_initial(&s, &ConstructConfig::default(), &p).unwrap();
        let log = trace.to_log();
        assert_eq!(log.lines().count(), 3);
        assert!(log.lines().next().unwrap().contains("seed"));
        assert_eq!(log.lines().nth(1).unwrap().split('\t').count(), 5);
    }
}
