//! Sequences, alignments and the text formats used to read and write them.
//!
//! Residues are stored as uppercase ASCII bytes over `A`, `C`, `G`, `U`; alignments
//! add the gap byte [`GAP`]. Every ingestion path maps `T` to `U`.

use std::collections::HashSet;
use std::fmt;

use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};

pub const GAP: u8 = b'-';

/// Residue alphabet in tie-break order.
pub const BASES: [u8; 4] = *b"ACGU";

#[inline]
pub fn is_base(b: u8) -> bool {
    matches!(b, b'A' | b'C' | b'G' | b'U')
}

/// Uppercases and maps DNA thymine onto uracil.
#[inline]
fn normalize(b: u8) -> u8 {
    match b.to_ascii_uppercase() {
        b'T' => b'U',
        other => other,
    }
}

/// A gap-free RNA sequence with an identifier.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RnaSequence {
    id: String,
    residues: Vec<u8>,
}

impl RnaSequence {
    pub fn new(id: impl Into<String>, residues: impl Into<Vec<u8>>) -> Result<Self> {
        let id = id.into();
        let residues = residues.into();
        if residues.is_empty() {
            return Err(Error::InvalidSequence(format!("sequence '{id}' is empty")));
        }
        if let Some(&bad) = residues.iter().find(|&&b| !is_base(b)) {
            return Err(Error::InvalidSequence(format!(
                "sequence '{id}' contains symbol '{}'",
                bad as char
            )));
        }
        Ok(Self { id, residues })
    }

    /// Builds a sequence after uppercasing and mapping `T` to `U`.
    pub fn normalized(id: impl Into<String>, text: &str) -> Result<Self> {
        let residues: Vec<u8> = text
            .bytes()
            .filter(|b| !b.is_ascii_whitespace())
            .map(normalize)
            .collect();
        Self::new(id, residues)
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn residues(&self) -> &[u8] {
        &self.residues
    }

    pub fn len(&self) -> usize {
        self.residues.len()
    }

    /// Always false; kept for API symmetry with `len`.
    pub fn is_empty(&self) -> bool {
        self.residues.is_empty()
    }

    pub fn as_str(&self) -> &str {
        // residues are validated ASCII
        std::str::from_utf8(&self.residues).expect("ascii residues")
    }
}

impl fmt::Display for RnaSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// At least two sequences with unique identifiers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SequenceSet {
    sequences: Vec<RnaSequence>,
}

impl SequenceSet {
    pub fn new(sequences: Vec<RnaSequence>) -> Result<Self> {
        if sequences.len() < 2 {
            return Err(Error::InvalidSequence(format!(
                "a sequence set needs at least 2 sequences, got {}",
                sequences.len()
            )));
        }
        check_unique(sequences.iter().map(|s| s.id()))?;
        Ok(Self { sequences })
    }

    pub fn from_fasta(text: &str) -> Result<Self> {
        Self::new(parse_fasta(text)?)
    }

    pub fn len(&self) -> usize {
        self.sequences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sequences.is_empty()
    }

    pub fn get(&self, i: usize) -> &RnaSequence {
        &self.sequences[i]
    }

    pub fn iter(&self) -> std::slice::Iter<'_, RnaSequence> {
        self.sequences.iter()
    }

    pub fn as_slice(&self) -> &[RnaSequence] {
        &self.sequences
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.sequences.iter().position(|s| s.id() == id)
    }
}

fn check_unique<'a>(ids: impl Iterator<Item = &'a str>) -> Result<()> {
    let mut seen = HashSet::new();
    for id in ids {
        if !seen.insert(id) {
            return Err(Error::InvalidSequence(format!("duplicate identifier '{id}'")));
        }
    }
    Ok(())
}

/// Parses FASTA records. Whitespace inside sequence lines is ignored, lowercase is
/// uppercased and `T` becomes `U`. A single record is accepted here; the two-sequence
/// minimum is enforced by [`SequenceSet::new`].
pub fn parse_fasta(text: &str) -> Result<Vec<RnaSequence>> {
    let mut records: Vec<(String, usize, Vec<u8>)> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim_end_matches('\r');
        if let Some(header) = line.strip_prefix('>') {
            let id = header.split_whitespace().next().unwrap_or("").to_string();
            if id.is_empty() {
                return Err(Error::parse(line_no, "header without identifier"));
            }
            records.push((id, line_no, Vec::new()));
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let Some((_, _, body)) = records.last_mut() else {
            return Err(Error::parse(line_no, "sequence data before first '>' header"));
        };
        for ch in line.bytes().filter(|b| !b.is_ascii_whitespace()) {
            let b = normalize(ch);
            if !is_base(b) {
                return Err(Error::parse(
                    line_no,
                    format!("symbol '{}' is not one of A, C, G, U, T", ch as char),
                ));
            }
            body.push(b);
        }
    }
    if records.is_empty() {
        return Err(Error::parse(1, "no FASTA records found"));
    }
    let mut out = Vec::with_capacity(records.len());
    for (id, line_no, body) in records {
        if body.is_empty() {
            return Err(Error::parse(line_no, format!("record '{id}' has an empty body")));
        }
        out.push(RnaSequence::new(id, body)?);
    }
    check_unique(out.iter().map(|s| s.id()))?;
    Ok(out)
}

/// Emits FASTA with 60 residues per line.
pub fn write_fasta<'a>(sequences: impl IntoIterator<Item = &'a RnaSequence>) -> String {
    let mut out = String::new();
    for s in sequences {
        out.push('>');
        out.push_str(s.id());
        out.push('\n');
        for chunk in s.residues().chunks(60) {
            out.push_str(std::str::from_utf8(chunk).expect("ascii residues"));
            out.push('\n');
        }
    }
    out
}

/// A rectangular multiple alignment over `A`, `C`, `G`, `U` and [`GAP`].
///
/// Construction guarantees equal row lengths, unique ids and at least one residue
/// per row. Canonical form (no all-gap column) is not required: reference
/// alignments may carry dead columns; working alignments go through
/// [`Alignment::canonicalize`].
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Alignment {
    ids: Vec<String>,
    rows: Vec<Vec<u8>>,
}

impl Alignment {
    pub fn new(ids: Vec<String>, rows: Vec<Vec<u8>>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::InvalidAlignment("no rows".into()));
        }
        if ids.len() != rows.len() {
            return Err(Error::InvalidAlignment(format!(
                "{} ids for {} rows",
                ids.len(),
                rows.len()
            )));
        }
        check_unique(ids.iter().map(String::as_str))
            .map_err(|e| Error::InvalidAlignment(e.to_string()))?;
        let width = rows[0].len();
        for (id, row) in ids.iter().zip(&rows) {
            if row.len() != width {
                return Err(Error::InvalidAlignment(format!(
                    "row '{id}' has width {}, expected {width}",
                    row.len()
                )));
            }
            if let Some(&bad) = row.iter().find(|&&b| b != GAP && !is_base(b)) {
                return Err(Error::InvalidAlignment(format!(
                    "row '{id}' contains symbol '{}'",
                    bad as char
                )));
            }
            if row.iter().all(|&b| b == GAP) {
                return Err(Error::InvalidAlignment(format!(
                    "row '{id}' has no residues"
                )));
            }
        }
        Ok(Self { ids, rows })
    }

    /// Builds from `(id, row text)` pairs, normalizing case and `T`.
    pub fn from_rows<I, S, R>(rows: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, R)>,
        S: Into<String>,
        R: AsRef<str>,
    {
        let (ids, rows): (Vec<String>, Vec<Vec<u8>>) = rows
            .into_iter()
            .map(|(id, r)| (id.into(), r.as_ref().bytes().map(normalize).collect()))
            .unzip();
        Self::new(ids, rows)
    }

    /// Trusted constructor for internal producers that maintain the invariants.
    pub(crate) fn from_parts(ids: Vec<String>, rows: Vec<Vec<u8>>) -> Self {
        debug_assert!(Self::new(ids.clone(), rows.clone()).is_ok());
        Self { ids, rows }
    }

    pub fn single(seq: &RnaSequence) -> Self {
        Self {
            ids: vec![seq.id().to_string()],
            rows: vec![seq.residues().to_vec()],
        }
    }

    pub fn width(&self) -> usize {
        self.rows[0].len()
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn id(&self, row: usize) -> &str {
        &self.ids[row]
    }

    pub fn rows(&self) -> &[Vec<u8>] {
        &self.rows
    }

    pub fn row(&self, i: usize) -> &[u8] {
        &self.rows[i]
    }

    pub fn row_str(&self, i: usize) -> &str {
        std::str::from_utf8(&self.rows[i]).expect("ascii row")
    }

    pub fn row_index(&self, id: &str) -> Option<usize> {
        self.ids.iter().position(|x| x == id)
    }

    pub fn degap(&self, row: usize) -> Vec<u8> {
        self.rows[row].iter().copied().filter(|&b| b != GAP).collect()
    }

    pub fn sequence(&self, row: usize) -> RnaSequence {
        RnaSequence {
            id: self.ids[row].clone(),
            residues: self.degap(row),
        }
    }

    pub fn sequences(&self) -> Vec<RnaSequence> {
        (0..self.num_rows()).map(|r| self.sequence(r)).collect()
    }

    pub fn column_is_all_gap(&self, col: usize) -> bool {
        self.rows.iter().all(|r| r[col] == GAP)
    }

    pub fn is_canonical(&self) -> bool {
        (0..self.width()).all(|c| !self.column_is_all_gap(c))
    }

    pub fn gap_count(&self) -> usize {
        self.rows.iter().flatten().filter(|&&b| b == GAP).count()
    }

    /// Removes all-gap columns; every row keeps its residues in order.
    pub fn canonicalize(&self) -> Alignment {
        let keep: Vec<usize> = (0..self.width())
            .filter(|&c| !self.column_is_all_gap(c))
            .collect();
        if keep.len() == self.width() {
            return self.clone();
        }
        let rows = self
            .rows
            .iter()
            .map(|r| keep.iter().map(|&c| r[c]).collect())
            .collect();
        Alignment {
            ids: self.ids.clone(),
            rows,
        }
    }

    /// Splits off one row. The remainder is not canonicalized.
    pub fn remove_row(&self, row: usize) -> Result<(Alignment, RnaSequence)> {
        if self.num_rows() < 2 {
            return Err(Error::InvalidAlignment(
                "cannot remove the only row of an alignment".into(),
            ));
        }
        let removed = self.sequence(row);
        let mut ids = self.ids.clone();
        let mut rows = self.rows.clone();
        ids.remove(row);
        rows.remove(row);
        Ok((Alignment { ids, rows }, removed))
    }

    /// Reorders rows to follow `order` (a list of ids).
    pub fn reordered<S: AsRef<str>>(&self, order: &[S]) -> Result<Alignment> {
        if order.len() != self.num_rows() {
            return Err(Error::Mismatch("row count differs from requested order".into()));
        }
        let mut ids = Vec::with_capacity(order.len());
        let mut rows = Vec::with_capacity(order.len());
        for id in order {
            let id = id.as_ref();
            let r = self
                .row_index(id)
                .ok_or_else(|| Error::Mismatch(format!("id '{id}' not in alignment")))?;
            ids.push(id.to_string());
            rows.push(self.rows[r].clone());
        }
        Ok(Alignment { ids, rows })
    }

    /// Checks that degapping each row reproduces the matching source exactly.
    pub fn check_sources(&self, sources: &[RnaSequence]) -> Result<()> {
        if sources.len() != self.num_rows() {
            return Err(Error::Mismatch(format!(
                "{} sources for {} rows",
                sources.len(),
                self.num_rows()
            )));
        }
        for s in sources {
            let r = self
                .row_index(s.id())
                .ok_or_else(|| Error::Mismatch(format!("id '{}' not in alignment", s.id())))?;
            if self.degap(r) != s.residues() {
                return Err(Error::Mismatch(format!(
                    "row '{}' does not degap to its source",
                    s.id()
                )));
            }
        }
        Ok(())
    }
}

impl fmt::Display for Alignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let pad = self.ids.iter().map(String::len).max().unwrap_or(0);
        for (i, id) in self.ids.iter().enumerate() {
            writeln!(f, "{id:<pad$}  {}", self.row_str(i))?;
        }
        Ok(())
    }
}

impl Serialize for Alignment {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let rows: Vec<&str> = (0..self.num_rows()).map(|i| self.row_str(i)).collect();
        let mut st = serializer.serialize_struct("Alignment", 2)?;
        st.serialize_field("ids", &self.ids)?;
        st.serialize_field("rows", &rows)?;
        st.end()
    }
}

fn is_conservation_line(line: &str) -> bool {
    line.starts_with(char::is_whitespace)
        && line.chars().all(|c| matches!(c, ' ' | '\t' | '*' | ':' | '.'))
}

/// Parses a Clustal-style alignment. The optional `CLUSTAL` header and conservation
/// lines are skipped; blocks are concatenated in the name order of the first block.
/// All-gap columns are kept.
pub fn parse_clustal(text: &str) -> Result<Alignment> {
    let mut blocks: Vec<Vec<(usize, String, Vec<u8>)>> = Vec::new();
    let mut current: Vec<(usize, String, Vec<u8>)> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim_end_matches('\r');
        if line_no == 1 && line.trim_start().starts_with("CLUSTAL") {
            continue;
        }
        if line.trim().is_empty() || is_conservation_line(line) {
            if !current.is_empty() {
                blocks.push(std::mem::take(&mut current));
            }
            continue;
        }
        let mut fields = line.split_whitespace();
        let name = fields.next().expect("non-blank line").to_string();
        let segment = fields
            .next()
            .ok_or_else(|| Error::parse(line_no, format!("no segment after name '{name}'")))?;
        if let Some(extra) = fields.next() {
            if extra.parse::<usize>().is_err() || fields.next().is_some() {
                return Err(Error::parse(line_no, "unexpected trailing fields"));
            }
        }
        let mut seg = Vec::with_capacity(segment.len());
        for ch in segment.bytes() {
            let b = normalize(ch);
            if b != GAP && !is_base(b) {
                return Err(Error::parse(
                    line_no,
                    format!("symbol '{}' is not a residue or gap", ch as char),
                ));
            }
            seg.push(b);
        }
        if current.iter().any(|(_, n, _)| *n == name) {
            return Err(Error::parse(line_no, format!("name '{name}' repeated within a block")));
        }
        current.push((line_no, name, seg));
    }
    if !current.is_empty() {
        blocks.push(current);
    }
    let Some(first) = blocks.first() else {
        return Err(Error::parse(1, "no alignment blocks found"));
    };
    let ids: Vec<String> = first.iter().map(|(_, n, _)| n.clone()).collect();
    let mut rows: Vec<Vec<u8>> = vec![Vec::new(); ids.len()];
    for block in &blocks {
        let line_no = block[0].0;
        if block.len() != ids.len() {
            return Err(Error::parse(
                line_no,
                format!("block has {} rows, first block has {}", block.len(), ids.len()),
            ));
        }
        for (ln, name, seg) in block {
            let r = ids
                .iter()
                .position(|x| x == name)
                .ok_or_else(|| Error::parse(*ln, format!("name '{name}' absent from first block")))?;
            rows[r].extend_from_slice(seg);
        }
    }
    Alignment::new(ids, rows).map_err(|e| match e {
        Error::InvalidAlignment(msg) => Error::parse(blocks[0][0].0, msg),
        other => other,
    })
}

/// Emits a Clustal-style alignment with 60 columns per block.
pub fn write_clustal(a: &Alignment) -> String {
    let pad = a.ids().iter().map(String::len).max().unwrap_or(0);
    let mut out = String::from("CLUSTAL W multiple sequence alignment\n\n");
    let mut start = 0;
    while start < a.width() {
        let end = (start + 60).min(a.width());
        for (i, id) in a.ids().iter().enumerate() {
            let seg = std::str::from_utf8(&a.row(i)[start..end]).expect("ascii row");
            out.push_str(&format!("{id:<pad$}  {seg}\n"));
        }
        out.push('\n');
        start = end;
    }
    out
}
