use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};

use graspmorsa::bench::{run_benchmark, run_dataset, write_outputs, BenchOptions, ReportFormat, WeightScheme};
use graspmorsa::construct::{ConstructConfig, LengthThreshold};
use graspmorsa::seqmodel::write_clustal;
use graspmorsa::{GraspConfig, ObjectiveParams};

#[derive(Parser)]
#[command(name = "graspmorsa", version, about = "GRASP multiobjective RNA structural alignment")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Align one FASTA file and print the best alignment.
    Align {
        #[arg(long)]
        input: PathBuf,
        /// Clustal reference alignment for the SPS score.
        #[arg(long = "ref")]
        reference: Option<PathBuf>,
        /// Write the full run report as JSON.
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        search: SearchArgs,
    },
    /// Run every dataset under a directory and write a results table.
    Bench {
        /// Directory with one subdirectory per dataset (seqs.fasta, optional ref.aln).
        #[arg(long)]
        root: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
        /// Leave the seconds column empty so reruns are byte-identical.
        #[arg(long)]
        no_timing: bool,
        #[command(flatten)]
        search: SearchArgs,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Tsv,
    DotBracket,
}

#[derive(Clone, Copy, ValueEnum)]
enum Weights {
    Uniform,
    Tree,
}

#[derive(Args)]
struct SearchArgs {
    /// Weight on WSPS in the aggregate; MFE gets 1 - alpha.
    #[arg(long, default_value_t = 0.3)]
    alpha: f64,
    /// Absolute length difference that switches to local alignment.
    #[arg(long, conflicts_with = "k_rel")]
    k: Option<usize>,
    /// Length difference, as a fraction of the longer sequence, that switches to local alignment.
    #[arg(long, default_value_t = 0.2)]
    k_rel: f64,
    /// Each merge draws u in [0,1): u > p-random takes the closest sequence,
    /// otherwise a random one. The default 0.6 makes the greedy pick a 40% event.
    #[arg(long, default_value_t = 0.6)]
    p_random: f64,
    #[arg(long, default_value_t = 10)]
    restarts: usize,
    #[arg(long, default_value_t = 50)]
    max_passes: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = Weights::Uniform)]
    weights: Weights,
    /// Run restarts one after another instead of on the thread pool.
    #[arg(long)]
    serial: bool,
}

impl SearchArgs {
    fn options(&self, record_timing: bool) -> anyhow::Result<BenchOptions> {
        let k_threshold = match self.k {
            Some(k) => LengthThreshold::Absolute(k),
            None => LengthThreshold::Relative(self.k_rel),
        };
        let config = GraspConfig {
            restarts: self.restarts,
            max_refine_passes: self.max_passes,
            construct: ConstructConfig {
                k_threshold,
                p_random: self.p_random,
                rng_seed: self.seed,
            },
            objective: ObjectiveParams::with_alpha(self.alpha),
            master_seed: self.seed,
            parallel: !self.serial,
        };
        config.validate()?;
        Ok(BenchOptions {
            config,
            weights: match self.weights {
                Weights::Uniform => WeightScheme::Uniform,
                Weights::Tree => WeightScheme::Tree,
            },
            record_timing,
        })
    }
}

fn usage_error(e: anyhow::Error) -> ExitCode {
    eprintln!("error: {e:#}");
    ExitCode::from(2)
}

fn align(input: PathBuf, reference: Option<PathBuf>, out: Option<PathBuf>, opts: BenchOptions) -> anyhow::Result<()> {
    let name = input
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "input".into());
    let outcome = run_dataset(&name, &input, reference.as_deref(), &opts);
    if let Some(e) = &outcome.row.error {
        bail!("{e}");
    }
    let result = outcome.result.as_ref().expect("successful run has a result");
    let m = outcome.row.metrics.expect("successful run has metrics");
    print!("{}", write_clustal(&result.best));
    if let Some(s) = &outcome.structure {
        println!("consensus  {}", s.sequence);
        println!("structure  {}", s.dot_bracket);
    }
    println!(
        "wsps {:.4} -> {:.4}  mfe {:.4} -> {:.4}  fmo {:.4} -> {:.4}",
        m.wsps_before, m.wsps_after, m.mfe_before, m.mfe_after, m.fmo_before, m.fmo_after
    );
    println!("sci {:.4} -> {:.4}", m.sci_before, m.sci_after);
    if let Some(sps) = m.sps {
        println!("sps {sps:.4}");
    }
    if let Some(path) = out {
        let json = serde_json::json!({
            "manifest": outcome.manifest,
            "metrics": m,
            "structure": outcome.structure,
            "result": result,
        });
        fs::write(&path, serde_json::to_string_pretty(&json)? + "\n")
            .with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match cli.command {
        Command::Align {
            input,
            reference,
            out,
            search,
        } => {
            let opts = match search.options(true) {
                Ok(o) => o,
                Err(e) => return usage_error(e),
            };
            match align(input, reference, out, opts) {
                Ok(()) => ExitCode::SUCCESS,
                Err(e) => {
                    eprintln!("error: {e:#}");
                    ExitCode::from(1)
                }
            }
        }
        Command::Bench {
            root,
            out,
            format,
            no_timing,
            search,
        } => {
            let opts = match search.options(!no_timing) {
                Ok(o) => o,
                Err(e) => return usage_error(e),
            };
            let format = match format {
                Format::Csv => ReportFormat::Csv,
                Format::Tsv => ReportFormat::Tsv,
                Format::DotBracket => ReportFormat::DotBracket,
            };
            let outcome = match run_benchmark(&root, &opts) {
                Ok(o) => o,
                Err(e) => return usage_error(e.into()),
            };
            if let Err(e) = write_outputs(&outcome, &out, format, opts.config.objective.alpha) {
                eprintln!("error: {e}");
                return ExitCode::from(1);
            }
            let failed = outcome.rows.iter().filter(|r| !r.succeeded()).count();
            if failed > 0 {
                eprintln!("{failed} of {} datasets failed", outcome.rows.len());
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            }
        }
    }
}
