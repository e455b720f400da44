//! Global (Needleman-Wunsch) and local (Smith-Waterman) pairwise alignment with a
//! linear gap model, plus the identity distance used to order progressive merges.
//!
//! Both aligners fill a full `(n+1) x (m+1)` score matrix and trace back by
//! re-deriving each step from the scores with fixed priority diagonal > up > left,
//! where "up" consumes a residue of `a` against a gap.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seqmodel::GAP;

/// Residue-level scores. `gap` is charged per gap symbol.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairScoringParams {
    pub match_score: i32,
    pub mismatch: i32,
    pub gap: i32,
}

impl Default for PairScoringParams {
    fn default() -> Self {
        Self {
            match_score: 2,
            mismatch: -1,
            gap: -2,
        }
    }
}

impl PairScoringParams {
    pub fn validate(&self) -> Result<()> {
        if self.match_score <= self.mismatch {
            return Err(Error::InvalidParams(format!(
                "match score {} must exceed mismatch {}",
                self.match_score, self.mismatch
            )));
        }
        if self.gap >= 0 {
            return Err(Error::InvalidParams(format!(
                "gap penalty {} must be negative",
                self.gap
            )));
        }
        Ok(())
    }

    #[inline]
    pub fn substitution(&self, x: u8, y: u8) -> i32 {
        if x == y {
            self.match_score
        } else {
            self.mismatch
        }
    }

    /// Score of one aligned column between two rows.
    #[inline]
    pub fn column(&self, x: u8, y: u8) -> i32 {
        match (x == GAP, y == GAP) {
            (true, true) => 0,
            (true, false) | (false, true) => self.gap,
            (false, false) => self.substitution(x, y),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AlignmentKind {
    Global,
    Local,
}

/// Half-open residue ranges of the two inputs covered by a local alignment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct LocalSpan {
    pub a_start: usize,
    pub a_end: usize,
    pub b_start: usize,
    pub b_end: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairwiseAlignment {
    pub row_a: Vec<u8>,
    pub row_b: Vec<u8>,
    pub score: i32,
    pub kind: AlignmentKind,
    /// Present for local alignments only.
    pub span: Option<LocalSpan>,
}

impl PairwiseAlignment {
    pub fn width(&self) -> usize {
        self.row_a.len()
    }

    pub fn identical_columns(&self) -> usize {
        self.row_a
            .iter()
            .zip(&self.row_b)
            .filter(|(x, y)| x == y && **x != GAP)
            .count()
    }
}

struct Matrix {
    cols: usize,
    cells: Vec<i32>,
}

impl Matrix {
    fn new(rows: usize, cols: usize) -> Self {
        Self {
            cols,
            cells: vec![0; rows * cols],
        }
    }

    #[inline]
    fn get(&self, i: usize, j: usize) -> i32 {
        self.cells[i * self.cols + j]
    }

    #[inline]
    fn set(&mut self, i: usize, j: usize, v: i32) {
        self.cells[i * self.cols + j] = v;
    }
}

enum Step {
    Diagonal,
    Up,
    Left,
}

/// Picks the traceback move that produced `h[i][j]`, honoring diagonal > up > left.
#[inline]
fn backtrack_step(h: &Matrix, a: &[u8], b: &[u8], i: usize, j: usize, p: &PairScoringParams) -> Step {
    let here = h.get(i, j);
    if i > 0 && j > 0 && here == h.get(i - 1, j - 1) + p.substitution(a[i - 1], b[j - 1]) {
        Step::Diagonal
    } else if i > 0 && here == h.get(i - 1, j) + p.gap {
        Step::Up
    } else {
        debug_assert!(j > 0 && here == h.get(i, j - 1) + p.gap);
        Step::Left
    }
}

/// Optimal global alignment of `a` and `b`.
pub fn needleman_wunsch(a: &[u8], b: &[u8], p: &PairScoringParams) -> PairwiseAlignment {
    let (n, m) = (a.len(), b.len());
    let mut h = Matrix::new(n + 1, m + 1);
    for i in 1..=n {
        h.set(i, 0, i as i32 * p.gap);
    }
    for j in 1..=m {
        h.set(0, j, j as i32 * p.gap);
    }
    for i in 1..=n {
        for j in 1..=m {
            let diag = h.get(i - 1, j - 1) + p.substitution(a[i - 1], b[j - 1]);
            let up = h.get(i - 1, j) + p.gap;
            let left = h.get(i, j - 1) + p.gap;
            h.set(i, j, diag.max(up).max(left));
        }
    }

    let mut row_a = Vec::with_capacity(n + m);
    let mut row_b = Vec::with_capacity(n + m);
    let (mut i, mut j) = (n, m);
    while i > 0 || j > 0 {
        match backtrack_step(&h, a, b, i, j, p) {
            Step::Diagonal => {
                i -= 1;
                j -= 1;
                row_a.push(a[i]);
                row_b.push(b[j]);
            }
            Step::Up => {
                i -= 1;
                row_a.push(a[i]);
                row_b.push(GAP);
            }
            Step::Left => {
                j -= 1;
                row_a.push(GAP);
                row_b.push(b[j]);
            }
        }
    }
    row_a.reverse();
    row_b.reverse();
    PairwiseAlignment {
        row_a,
        row_b,
        score: h.get(n, m),
        kind: AlignmentKind::Global,
        span: None,
    }
}

/// Best-scoring local alignment, floored at zero. When no cell is positive the
/// result is empty with score 0. The highest cell is chosen in row-major order.
pub fn smith_waterman(a: &[u8], b: &[u8], p: &PairScoringParams) -> PairwiseAlignment {
    let (n, m) = (a.len(), b.len());
    let mut h = Matrix::new(n + 1, m + 1);
    let (mut best, mut bi, mut bj) = (0, 0, 0);
    for i in 1..=n {
        for j in 1..=m {
            let diag = h.get(i - 1, j - 1) + p.substitution(a[i - 1], b[j - 1]);
            let up = h.get(i - 1, j) + p.gap;
            let left = h.get(i, j - 1) + p.gap;
            let v = diag.max(up).max(left).max(0);
            h.set(i, j, v);
            if v > best {
                best = v;
                bi = i;
                bj = j;
            }
        }
    }

    let mut row_a = Vec::new();
    let mut row_b = Vec::new();
    let (mut i, mut j) = (bi, bj);
    while h.get(i, j) > 0 {
        match backtrack_step(&h, a, b, i, j, p) {
            Step::Diagonal => {
                i -= 1;
                j -= 1;
                row_a.push(a[i]);
                row_b.push(b[j]);
            }
            Step::Up => {
                i -= 1;
                row_a.push(a[i]);
                row_b.push(GAP);
            }
            Step::Left => {
                j -= 1;
                row_a.push(GAP);
                row_b.push(b[j]);
            }
        }
    }
    row_a.reverse();
    row_b.reverse();
    PairwiseAlignment {
        row_a,
        row_b,
        score: best,
        kind: AlignmentKind::Local,
        span: Some(LocalSpan {
            a_start: i,
            a_end: bi,
            b_start: j,
            b_end: bj,
        }),
    }
}

/// `1 - identical columns / width` of the global alignment.
///
/// The inputs are put in lexicographic order first: the traceback priority is not
/// mirror-symmetric, so this keeps `distance(a, b) == distance(b, a)`.
pub fn distance(a: &[u8], b: &[u8], p: &PairScoringParams) -> f64 {
    let (x, y) = if a <= b { (a, b) } else { (b, a) };
    let aln = needleman_wunsch(x, y, p);
    1.0 - aln.identical_columns() as f64 / aln.width() as f64
}
