//! Brute-force reference implementations shared by the integration tests. None of
//! these reuse the library's dynamic programs.
#![allow(dead_code)]

use std::path::PathBuf;

use graspmorsa::seqmodel::GAP;
use graspmorsa::{Alignment, EnergyModel, PairScoringParams, RnaSequence, SequenceSet};
use rand::Rng;

pub const BASES: &[u8] = b"ACGU";

pub fn samples_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data").join("samples")
}

pub fn load_sample(name: &str) -> SequenceSet {
    let text = std::fs::read_to_string(samples_dir().join(name).join("seqs.fasta")).unwrap();
    SequenceSet::from_fasta(&text).unwrap()
}

pub fn sample_names() -> Vec<String> {
    let mut names: Vec<String> = std::fs::read_dir(samples_dir())
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    names.sort();
    names
}

pub fn random_residues<R: Rng>(rng: &mut R, min: usize, max: usize) -> Vec<u8> {
    let len = rng.gen_range(min..=max);
    (0..len).map(|_| BASES[rng.gen_range(0..4)]).collect()
}

pub fn random_set<R: Rng>(rng: &mut R, n: usize, min: usize, max: usize) -> SequenceSet {
    SequenceSet::new(
        (0..n)
            .map(|i| RnaSequence::new(format!("s{i}"), random_residues(rng, min, max)).unwrap())
            .collect(),
    )
    .unwrap()
}

/// Random alignment of the given sequences: gaps scattered uniformly, then rows
/// padded to a common width. May contain all-gap columns.
pub fn random_alignment<R: Rng>(rng: &mut R, seqs: &[Vec<u8>], extra_gaps: usize) -> Alignment {
    let width = seqs.iter().map(Vec::len).max().unwrap() + extra_gaps;
    let rows: Vec<Vec<u8>> = seqs
        .iter()
        .map(|s| {
            let mut row = s.clone();
            while row.len() < width {
                let at = rng.gen_range(0..=row.len());
                row.insert(at, GAP);
            }
            row
        })
        .collect();
    let ids = (0..seqs.len()).map(|i| format!("s{i}")).collect();
    Alignment::new(ids, rows).unwrap()
}

fn column_score(x: u8, y: u8, p: &PairScoringParams) -> i32 {
    if x == GAP && y == GAP {
        0
    } else if x == GAP || y == GAP {
        p.gap
    } else if x == y {
        p.match_score
    } else {
        p.mismatch
    }
}

/// Maximum over every global alignment, by exhaustive recursion over all paths.
pub fn brute_global(a: &[u8], b: &[u8], p: &PairScoringParams) -> i32 {
    match (a.split_first(), b.split_first()) {
        (None, None) => 0,
        (Some(_), None) => a.len() as i32 * p.gap,
        (None, Some(_)) => b.len() as i32 * p.gap,
        (Some((&x, ra)), Some((&y, rb))) => {
            let diag = column_score(x, y, p) + brute_global(ra, rb, p);
            let up = p.gap + brute_global(ra, b, p);
            let left = p.gap + brute_global(a, rb, p);
            diag.max(up).max(left)
        }
    }
}

/// Maximum over every pair of substrings aligned globally; the empty pair scores 0.
pub fn brute_local(a: &[u8], b: &[u8], p: &PairScoringParams) -> i32 {
    let mut best = 0;
    for i in 0..a.len() {
        for j in (i + 1)..=a.len() {
            for k in 0..b.len() {
                for l in (k + 1)..=b.len() {
                    best = best.max(brute_global(&a[i..j], &b[k..l], p));
                }
            }
        }
    }
    best
}

fn can_pair(x: u8, y: u8) -> bool {
    matches!(
        (x, y),
        (b'A', b'U') | (b'U', b'A') | (b'G', b'C') | (b'C', b'G') | (b'G', b'U') | (b'U', b'G')
    )
}

/// Every valid nested structure (1-based pairs), by include/exclude search over
/// all admissible pairs.
pub fn enumerate_structures(seq: &[u8]) -> Vec<Vec<(usize, usize)>> {
    let n = seq.len();
    let mut candidates = Vec::new();
    for i in 1..=n {
        for j in (i + 4)..=n {
            if can_pair(seq[i - 1], seq[j - 1]) {
                candidates.push((i, j));
            }
        }
    }
    let mut out = Vec::new();
    let mut chosen = Vec::new();
    fn compatible(chosen: &[(usize, usize)], (i, j): (usize, usize)) -> bool {
        chosen.iter().all(|&(k, l)| {
            let disjoint = i != k && i != l && j != k && j != l;
            let crossing = (k < i && i < l && l < j) || (i < k && k < j && j < l);
            disjoint && !crossing
        })
    }
    fn walk(
        idx: usize,
        candidates: &[(usize, usize)],
        chosen: &mut Vec<(usize, usize)>,
        out: &mut Vec<Vec<(usize, usize)>>,
    ) {
        if idx == candidates.len() {
            out.push(chosen.clone());
            return;
        }
        walk(idx + 1, candidates, chosen, out);
        if compatible(chosen, candidates[idx]) {
            chosen.push(candidates[idx]);
            walk(idx + 1, candidates, chosen, out);
            chosen.pop();
        }
    }
    walk(0, &candidates, &mut chosen, &mut out);
    out
}

pub fn pair_energy(x: u8, y: u8, m: &EnergyModel) -> f64 {
    match (x, y) {
        (b'G', b'C') | (b'C', b'G') => m.gc,
        (b'A', b'U') | (b'U', b'A') => m.au,
        (b'G', b'U') | (b'U', b'G') => m.gu,
        _ => panic!("not a pair"),
    }
}

pub fn brute_mfe(seq: &[u8], m: &EnergyModel) -> f64 {
    enumerate_structures(seq)
        .iter()
        .map(|st| st.iter().map(|&(i, j)| pair_energy(seq[i - 1], seq[j - 1], m)).sum::<f64>())
        .fold(0.0, f64::min)
}

/// Direct triple loop over row pairs and columns.
pub fn naive_wsps(a: &Alignment, weights: &[f64], p: &PairScoringParams) -> f64 {
    let mut total = 0.0;
    for i in 0..a.num_rows() {
        for j in 0..a.num_rows() {
            if i >= j {
                continue;
            }
            let mut s = 0i64;
            for c in 0..a.width() {
                s += column_score(a.row(i)[c], a.row(j)[c], p) as i64;
            }
            total += weights[i] * weights[j] * s as f64;
        }
    }
    total
}

/// Set of `(row1, residue1, row2, residue2)` co-columned residue pairs.
fn residue_pairs(a: &Alignment, order: &[String]) -> Vec<(usize, usize, usize, usize)> {
    let rows: Vec<usize> = order.iter().map(|id| a.row_index(id).unwrap()).collect();
    let mut out = Vec::new();
    for (x, &rx) in rows.iter().enumerate() {
        for (y, &ry) in rows.iter().enumerate().skip(x + 1) {
            let (mut kx, mut ky) = (0, 0);
            for c in 0..a.width() {
                let (bx, by) = (a.row(rx)[c], a.row(ry)[c]);
                if bx != GAP && by != GAP {
                    out.push((x, kx, y, ky));
                }
                kx += (bx != GAP) as usize;
                ky += (by != GAP) as usize;
            }
        }
    }
    out
}

pub fn naive_sps(test: &Alignment, reference: &Alignment) -> f64 {
    let order = reference.ids().to_vec();
    let refp = residue_pairs(reference, &order);
    let testp: std::collections::HashSet<_> = residue_pairs(test, &order).into_iter().collect();
    if refp.is_empty() {
        return 1.0;
    }
    refp.iter().filter(|p| testp.contains(p)).count() as f64 / refp.len() as f64
}

/// Friedman statistic with ranks computed by counting.
pub fn naive_friedman(scores: &[Vec<f64>]) -> (f64, Vec<f64>) {
    let n = scores.len() as f64;
    let k = scores[0].len();
    let mut sums = vec![0.0; k];
    for block in scores {
        for (t, &v) in block.iter().enumerate() {
            let less = block.iter().filter(|&&w| w < v).count() as f64;
            let equal = block.iter().filter(|&&w| w == v).count() as f64;
            sums[t] += less + (equal + 1.0) / 2.0;
        }
    }
    let kf = k as f64;
    let ss: f64 = sums.iter().map(|r| r * r).sum();
    (12.0 / (n * kf * (kf + 1.0)) * ss - 3.0 * n * (kf + 1.0), sums)
}

/// Rectangular, round-trips to `sources`, and canonical.
pub fn check_alignment(a: &Alignment, sources: &[RnaSequence]) -> Result<(), String> {
    if a.rows().iter().any(|r| r.len() != a.width()) {
        return Err("ragged rows".into());
    }
    a.check_sources(sources).map_err(|e| e.to_string())?;
    if !a.is_canonical() {
        return Err("all-gap column present".into());
    }
    Ok(())
}

/// Residue-index pairs `((row, k), (row, k))` sharing a column, for checking that
/// merges keep earlier column relations.
pub fn shared_columns(a: &Alignment) -> Vec<((String, usize), (String, usize))> {
    let mut out = Vec::new();
    let mut idx = vec![0usize; a.num_rows()];
    for c in 0..a.width() {
        let here: Vec<(String, usize)> = (0..a.num_rows())
            .filter(|&r| a.row(r)[c] != GAP)
            .map(|r| (a.id(r).to_string(), idx[r]))
            .collect();
        for (r, k) in idx.iter_mut().enumerate() {
            *k += (a.row(r)[c] != GAP) as usize;
        }
        for x in 0..here.len() {
            for y in (x + 1)..here.len() {
                out.push((here[x].clone(), here[y].clone()));
            }
        }
    }
    out
}

/// Pass-by-pass fmo: strictly increasing except for a final non-improving pass,
/// which is present unless the cap stopped refinement.
pub fn trajectory_ok(t: &[f64], cap_reached: bool) -> bool {
    let steps = t.len() - 1;
    let strict = if cap_reached { steps } else { steps.saturating_sub(1) };
    t.windows(2).take(strict).all(|w| w[1] > w[0]) && (cap_reached || t[steps] == t[steps - 1])
}
