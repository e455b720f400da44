//! Dataset harness: runs construction and refinement over a directory of
//! datasets and reports before/after metrics as CSV or TSV.
//!
//! Layout: one subdirectory per dataset holding `seqs.fasta` and, optionally, a
//! Clustal reference `ref.aln`. Rows come out in dataset-name order.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use log::warn;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evaluate::{sci_score, sps_score};
use crate::grasp::{grasp_run, GraspConfig, GraspResult};
use crate::objective::{evaluate_detailed, SequenceWeights};
use crate::seqmodel::{parse_clustal, Alignment, SequenceSet};

pub const CSV_HEADER: [&str; 12] = [
    "dataset",
    "wsps_before",
    "wsps_after",
    "mfe_before",
    "mfe_after",
    "fmo_before",
    "fmo_after",
    "sps",
    "sci_before",
    "sci_after",
    "seconds",
    "error",
];

pub const SEQUENCES_FILE: &str = "seqs.fasta";
pub const REFERENCE_FILE: &str = "ref.aln";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub wsps_before: f64,
    pub wsps_after: f64,
    pub mfe_before: f64,
    pub mfe_after: f64,
    pub fmo_before: f64,
    pub fmo_after: f64,
    pub sps: Option<f64>,
    pub sci_before: f64,
    pub sci_after: f64,
}

/// One dataset's line of the report. Failed datasets carry only `error`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub dataset: String,
    pub metrics: Option<Metrics>,
    pub seconds: Option<f64>,
    pub error: Option<String>,
}

impl ResultRow {
    pub fn failed(dataset: impl Into<String>, error: impl Into<String>) -> Self {
        Self {
            dataset: dataset.into(),
            metrics: None,
            seconds: None,
            error: Some(error.into()),
        }
    }

    pub fn succeeded(&self) -> bool {
        self.error.is_none()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WeightScheme {
    Uniform,
    Tree,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Tsv,
    /// CSV plus one dot-bracket file per dataset.
    DotBracket,
}

impl ReportFormat {
    pub fn delimiter(self) -> u8 {
        match self {
            ReportFormat::Tsv => b'\t',
            ReportFormat::Csv | ReportFormat::DotBracket => b',',
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchOptions {
    pub config: GraspConfig,
    pub weights: WeightScheme,
    /// Fill the `seconds` column. Off gives byte-reproducible reports.
    pub record_timing: bool,
}

impl Default for BenchOptions {
    fn default() -> Self {
        Self {
            config: GraspConfig::default(),
            weights: WeightScheme::Uniform,
            record_timing: true,
        }
    }
}

/// Everything needed to rerun one dataset.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunManifest {
    pub dataset: String,
    pub input: PathBuf,
    pub reference: Option<PathBuf>,
    pub weights: WeightScheme,
    pub config: GraspConfig,
    pub tool_version: String,
    pub master_seed: u64,
}

/// Final consensus sequence and structure of a dataset.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConsensusStructure {
    pub dataset: String,
    pub sequence: String,
    pub dot_bracket: String,
    pub energy: f64,
}

impl ConsensusStructure {
    pub fn to_dbn(&self) -> String {
        format!(
            ">{} consensus energy={:.4}\n{}\n{}\n",
            self.dataset, self.energy, self.sequence, self.dot_bracket
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetOutcome {
    pub row: ResultRow,
    pub manifest: RunManifest,
    pub structure: Option<ConsensusStructure>,
    pub result: Option<GraspResult>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkOutcome {
    pub rows: Vec<ResultRow>,
    pub manifests: Vec<RunManifest>,
    pub structures: Vec<ConsensusStructure>,
}

impl BenchmarkOutcome {
    pub fn all_succeeded(&self) -> bool {
        self.rows.iter().all(ResultRow::succeeded)
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::InvalidParams(format!("{}: {e}", path.display())))
}

struct Computed {
    metrics: Metrics,
    structure: ConsensusStructure,
    result: GraspResult,
}

fn compute(
    dataset: &str,
    set: &SequenceSet,
    reference: Option<&Alignment>,
    opts: &BenchOptions,
) -> Result<Computed> {
    let mut cfg = opts.config.clone();
    if opts.weights == WeightScheme::Tree {
        cfg.objective.weights = SequenceWeights::from_distances(set, &cfg.objective.pair_scoring);
    }
    let result = grasp_run(set, &cfg)?;
    let first = &result.per_restart[0];
    let model = &cfg.objective.energy_model;
    let after = evaluate_detailed(&result.best, &cfg.objective)?;
    let sps = reference.map(|r| sps_score(&result.best, r)).transpose()?;
    let metrics = Metrics {
        wsps_before: first.initial.wsps,
        wsps_after: after.value.wsps,
        mfe_before: first.initial.mfe,
        mfe_after: after.value.mfe,
        fmo_before: first.initial.fmo,
        fmo_after: after.value.fmo,
        sps,
        sci_before: sci_score(&first.initial_alignment, model)?,
        sci_after: sci_score(&result.best, model)?,
    };
    let structure = ConsensusStructure {
        dataset: dataset.to_string(),
        sequence: after.consensus.as_str().to_string(),
        dot_bracket: after.fold.structure.dot_bracket(after.consensus.len()),
        energy: after.fold.energy,
    };
    Ok(Computed {
        metrics,
        structure,
        result,
    })
}

/// Runs one dataset given its sequence file and optional reference.
pub fn run_dataset(
    dataset: &str,
    input: &Path,
    reference: Option<&Path>,
    opts: &BenchOptions,
) -> DatasetOutcome {
    let manifest = RunManifest {
        dataset: dataset.to_string(),
        input: input.to_path_buf(),
        reference: reference.map(Path::to_path_buf),
        weights: opts.weights,
        config: opts.config.clone(),
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        master_seed: opts.config.master_seed,
    };
    let start = Instant::now();
    let computed = (|| {
        let set = SequenceSet::from_fasta(&read(input)?)?;
        let reference = reference.map(|p| read(p).and_then(|t| parse_clustal(&t))).transpose()?;
        compute(dataset, &set, reference.as_ref(), opts)
    })();
    let seconds = opts.record_timing.then(|| start.elapsed().as_secs_f64());
    match computed {
        Ok(c) => DatasetOutcome {
            row: ResultRow {
                dataset: dataset.to_string(),
                metrics: Some(c.metrics),
                seconds,
                error: None,
            },
            manifest,
            structure: Some(c.structure),
            result: Some(c.result),
        },
        Err(e) => DatasetOutcome {
            row: ResultRow {
                seconds,
                ..ResultRow::failed(dataset, e.to_string())
            },
            manifest,
            structure: None,
            result: None,
        },
    }
}

/// Subdirectories of `root` containing a sequence file, sorted by name.
pub fn discover_datasets(root: &Path) -> Result<Vec<(String, PathBuf)>> {
    let entries = fs::read_dir(root)
        .map_err(|e| Error::InvalidParams(format!("{}: {e}", root.display())))?;
    let mut found = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|e| Error::InvalidParams(format!("{}: {e}", root.display())))?;
        let path = entry.path();
        if path.is_dir() && path.join(SEQUENCES_FILE).is_file() {
            found.push((entry.file_name().to_string_lossy().into_owned(), path));
        }
    }
    found.sort();
    Ok(found)
}

pub fn run_benchmark(root: &Path, opts: &BenchOptions) -> Result<BenchmarkOutcome> {
    opts.config.validate()?;
    let datasets = discover_datasets(root)?;
    if datasets.is_empty() {
        warn!("no datasets found under {}", root.display());
    }
    let outcomes: Vec<DatasetOutcome> = datasets
        .par_iter()
        .map(|(name, dir)| {
            let reference = dir.join(REFERENCE_FILE);
            let reference = reference.is_file().then_some(reference);
            run_dataset(name, &dir.join(SEQUENCES_FILE), reference.as_deref(), opts)
        })
        .collect();
    let mut out = BenchmarkOutcome {
        rows: Vec::with_capacity(outcomes.len()),
        manifests: Vec::with_capacity(outcomes.len()),
        structures: Vec::new(),
    };
    for o in outcomes {
        if let Some(e) = &o.row.error {
            warn!("dataset {} failed: {e}", o.row.dataset);
        }
        out.rows.push(o.row);
        out.manifests.push(o.manifest);
        out.structures.extend(o.structure);
    }
    Ok(out)
}

#[inline]
fn round4(x: f64) -> f64 {
    (x * 1e4).round() / 1e4
}

fn fmt4(x: f64) -> String {
    format!("{:.4}", x)
}

/// Rejects rows whose printed fmo disagrees with their printed wsps and mfe.
pub fn check_row(row: &ResultRow, alpha: f64) -> Result<()> {
    let Some(m) = &row.metrics else {
        return Ok(());
    };
    for (label, w, e, f) in [
        ("before", m.wsps_before, m.mfe_before, m.fmo_before),
        ("after", m.wsps_after, m.mfe_after, m.fmo_after),
    ] {
        let expected = alpha * round4(w) - (1.0 - alpha) * round4(e);
        if (round4(f) - expected).abs() >= 5e-4 || f.is_nan() {
            return Err(Error::Consistency(format!(
                "dataset {}: fmo_{label} {f} does not match {alpha}*wsps - {}*mfe = {expected}",
                row.dataset,
                1.0 - alpha
            )));
        }
    }
    Ok(())
}

/// Renders the report. Reals are printed with four decimals.
pub fn emit_report(rows: &[ResultRow], alpha: f64, delimiter: u8) -> Result<String> {
    for row in rows {
        check_row(row, alpha)?;
    }
    let mut w = csv::WriterBuilder::new()
        .delimiter(delimiter)
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    let io = |e: csv::Error| Error::Consistency(e.to_string());
    w.write_record(CSV_HEADER).map_err(io)?;
    for row in rows {
        let mut rec: Vec<String> = Vec::with_capacity(CSV_HEADER.len());
        rec.push(row.dataset.clone());
        match &row.metrics {
            Some(m) => {
                for v in [m.wsps_before, m.wsps_after, m.mfe_before, m.mfe_after, m.fmo_before, m.fmo_after] {
                    rec.push(fmt4(v));
                }
                rec.push(m.sps.map(fmt4).unwrap_or_default());
                rec.push(fmt4(m.sci_before));
                rec.push(fmt4(m.sci_after));
            }
            None => rec.extend(std::iter::repeat_n(String::new(), 9)),
        }
        rec.push(row.seconds.map(fmt4).unwrap_or_default());
        rec.push(row.error.clone().unwrap_or_default());
        w.write_record(&rec).map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Consistency(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("utf-8 report"))
}

fn parse_opt(field: &str, line: u64) -> Result<Option<f64>> {
    if field.is_empty() {
        return Ok(None);
    }
    field
        .parse::<f64>()
        .map(Some)
        .map_err(|e| Error::parse(line as usize, format!("bad number '{field}': {e}")))
}

/// Reads a report produced by [`emit_report`].
pub fn parse_report(text: &str, delimiter: u8) -> Result<Vec<ResultRow>> {
    let mut r = csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .has_headers(true)
        .from_reader(text.as_bytes());
    let header = r.headers().map_err(|e| Error::parse(1, e.to_string()))?;
    if header.iter().ne(CSV_HEADER) {
        return Err(Error::parse(1, "unexpected report header"));
    }
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| Error::parse(0, e.to_string()))?;
        let line = rec.position().map_or(0, |p| p.line());
        let num = |i: usize| parse_opt(&rec[i], line);
        let values: Vec<Option<f64>> = (1..=9).map(num).collect::<Result<_>>()?;
        let metrics = if rec[1].is_empty() {
            None
        } else {
            let req = |i: usize| values[i - 1].ok_or_else(|| Error::parse(line as usize, format!("missing {}", CSV_HEADER[i])));
            Some(Metrics {
                wsps_before: req(1)?,
                wsps_after: req(2)?,
                mfe_before: req(3)?,
                mfe_after: req(4)?,
                fmo_before: req(5)?,
                fmo_after: req(6)?,
                sps: values[6],
                sci_before: req(8)?,
                sci_after: req(9)?,
            })
        };
        rows.push(ResultRow {
            dataset: rec[0].to_string(),
            metrics,
            seconds: num(10)?,
            error: (!rec[11].is_empty()).then(|| rec[11].to_string()),
        });
    }
    Ok(rows)
}

/// Writes the report, its manifests (`<out>.manifest.json`) and, for
/// [`ReportFormat::DotBracket`], `<dataset>.dbn` next to the report.
pub fn write_outputs(outcome: &BenchmarkOutcome, out: &Path, format: ReportFormat, alpha: f64) -> Result<()> {
    let io = |p: &Path, e: std::io::Error| Error::InvalidParams(format!("{}: {e}", p.display()));
    let report = emit_report(&outcome.rows, alpha, format.delimiter())?;
    fs::write(out, report).map_err(|e| io(out, e))?;
    let manifest_path = PathBuf::from(format!("{}.manifest.json", out.display()));
    let manifest = serde_json::to_string_pretty(&outcome.manifests)
        .map_err(|e| Error::Consistency(e.to_string()))?;
    fs::write(&manifest_path, manifest + "\n").map_err(|e| io(&manifest_path, e))?;
    if format == ReportFormat::DotBracket {
        let dir = out.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
        for s in &outcome.structures {
            let path = dir.join(format!("{}.dbn", s.dataset));
            fs::write(&path, s.to_dbn()).map_err(|e| io(&path, e))?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(name: &str, w: f64, e: f64) -> ResultRow {
        let fmo = 0.3 * w - 0.7 * e;
        ResultRow {
            dataset: name.into(),
            metrics: Some(Metrics {
                wsps_before: w,
                wsps_after: w + 1.0,
                mfe_before: e,
                mfe_after: e,
                fmo_before: fmo,
                fmo_after: fmo + 0.3,
                sps: Some(0.75),
                sci_before: 0.5,
                sci_after: 0.625,
            }),
            seconds: None,
            error: None,
        }
    }

    #[test]
    fn header_only_for_no_rows() {
        let text = emit_report(&[], 0.3, b',').unwrap();
        assert_eq!(
            text,
            "dataset,wsps_before,wsps_after,mfe_before,mfe_after,fmo_before,fmo_after,sps,sci_before,sci_after,seconds,error\n"
        );
    }

    #[test]
    fn four_decimal_formatting() {
        let text = emit_report(&[row("d1", 13.1209, -48.7)], 0.3, b',').unwrap();
        let line = text.lines().nth(1).unwrap();
        assert_eq!(line, "d1,13.1209,14.1209,-48.7000,-48.7000,38.0263,38.3263,0.7500,0.5000,0.6250,,");
    }

    #[test]
    fn inconsistent_row_is_refused() {
        let mut r = row("d1", 10.0, -5.0);
        r.metrics.as_mut().unwrap().fmo_after += 1.0;
        assert!(matches!(emit_report(&[r], 0.3, b','), Err(Error::Consistency(_))));
    }

    #[test]
    fn parse_back_matches() {
        let mut rows = vec![row("a", 10.5, -3.0), row("b", -1.25, -20.5), ResultRow::failed("c", "broken, badly")];
        rows[1].metrics.as_mut().unwrap().sps = None;
        rows[0].seconds = Some(1.5);
        for delim in *b",\t" {
            let text = emit_report(&rows, 0.3, delim).unwrap();
            let back = parse_report(&text, delim).unwrap();
            assert_eq!(back.len(), rows.len());
            for (x, y) in back.iter().zip(&rows) {
                assert_eq!(x.dataset, y.dataset);
                assert_eq!(x.error, y.error);
                assert_eq!(x.seconds, y.seconds);
                match (&x.metrics, &y.metrics) {
                    (Some(a), Some(b)) => {
                        assert_eq!(a.wsps_before, round4(b.wsps_before));
                        assert_eq!(a.fmo_after, round4(b.fmo_after));
                        assert_eq!(a.sps, b.sps.map(round4));
                    }
                    (None, None) => {}
                    _ => panic!("metrics presence differs"),
                }
            }
            assert_eq!(emit_report(&back, 0.3, delim).unwrap(), text);
        }
    }
}
