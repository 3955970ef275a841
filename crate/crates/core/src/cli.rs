//! Command-line front end.
//!
//! Exit codes: 0 success, 1 usage error, 2 runtime error.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::dataset::{
    augment_split, evaluate, split_dataset, write_dataset, write_histogram_csv, write_report_csv, Closure, Dataset,
    DatasetConfig, Split,
};
use crate::estimators::{EstimatorInput, EstimatorSpec, FlowParams};
use crate::planner::{plan, SearchConfig, StandConfig};
use crate::raster::{jaccard, read_pbm_file, write_pbm_file, RasterConfig};
use crate::rng::RngStream;
use crate::rollgen::{generate_profile, GenConfig};

#[derive(Debug, Parser)]
#[command(name = "rollpass", version, about = "Roll pass generation, estimation and planning")]
struct Cli {
    /// Worker threads (0 = one per core).
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,
    /// More log output on stderr (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args, Serialize)]
struct SeedArg {
    /// Random seed; falls back to $ROLLPASS_SEED, then 0.
    #[arg(long, env = "ROLLPASS_SEED", default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate random roll profiles into DIR/rolls.json.
    GenRolls {
        #[arg(long)]
        count: usize,
        #[command(flatten)]
        seed: SeedArg,
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate a dataset: two samples per scenario.
    GenDataset {
        /// Number of scenarios.
        #[arg(long)]
        count: usize,
        #[command(flatten)]
        seed: SeedArg,
        /// Fraction of displaced material lost by the flow surrogate.
        #[arg(long, default_value_t = 0.5, value_parser = parse_alpha)]
        alpha: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Assign every sample of a dataset to train/val/eval.
    Split {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long, default_value_t = 14_000.0 / 18_800.0)]
        train: f64,
        #[arg(long, default_value_t = 2_000.0 / 18_800.0)]
        val: f64,
        #[arg(long, default_value_t = 2_800.0 / 18_800.0)]
        eval: f64,
        #[command(flatten)]
        seed: SeedArg,
    },
    /// Add flipped and rotated variants of every sample in a split.
    Augment {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long, default_value = "train")]
        split: Split,
        #[command(flatten)]
        seed: SeedArg,
    },
    /// Run one estimator on a sample directory.
    Estimate {
        /// baseline1, baseline2, flow or ext:<command>.
        #[arg(long)]
        estimator: EstimatorSpec,
        /// Directory holding inlet.pbm, over.pbm and under.pbm.
        #[arg(long)]
        sample: PathBuf,
        /// Flow loss fraction; defaults to the sample's meta.json, then 0.5.
        #[arg(long, value_parser = parse_alpha)]
        alpha: Option<f64>,
        /// Output PBM.
        #[arg(long)]
        out: PathBuf,
    },
    /// Score an estimator on a dataset split.
    Evaluate {
        #[arg(long)]
        estimator: EstimatorSpec,
        #[arg(long)]
        dataset: PathBuf,
        /// train, val, eval or all.
        #[arg(long, default_value = "eval")]
        split: SplitArg,
        /// Restrict to one closure kind: all, full (0.0->1.0) or half (0.5->1.0).
        #[arg(long, default_value = "all")]
        closure: ClosureArg,
        /// Flow loss fraction; defaults to the dataset's.
        #[arg(long, value_parser = parse_alpha)]
        alpha: Option<f64>,
        /// Per-sample CSV.
        #[arg(long)]
        report: PathBuf,
        /// Histogram CSV.
        #[arg(long)]
        histogram: Option<PathBuf>,
    },
    /// Search a rolling sequence from an inlet to a target shape.
    Plan {
        #[arg(long)]
        inlet: PathBuf,
        #[arg(long)]
        target: PathBuf,
        #[arg(long)]
        estimator: EstimatorSpec,
        /// Random stands per expansion.
        #[arg(short = 'n', default_value_t = 100)]
        n: usize,
        /// Tree depth.
        #[arg(short = 'd', default_value_t = 2)]
        d: usize,
        /// JSON stand ({"profile": ..., "rotation": 0}) added at every level.
        #[arg(long = "final")]
        final_config: Option<PathBuf>,
        /// Expand only the best B nodes per level.
        #[arg(long)]
        beam: Option<usize>,
        #[arg(long, default_value_t = 0.5, value_parser = parse_alpha)]
        alpha: f64,
        #[command(flatten)]
        seed: SeedArg,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, Debug)]
struct SplitArg(Option<Split>);

impl std::str::FromStr for SplitArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "all" => Ok(Self(None)),
            _ => s.parse().map(|x| Self(Some(x))),
        }
    }
}

#[derive(Clone, Copy, Debug)]
struct ClosureArg(Option<Closure>);

impl std::str::FromStr for ClosureArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "all" => Ok(Self(None)),
            "full" => Ok(Self(Some(Closure::Full))),
            "half" => Ok(Self(Some(Closure::Half))),
            _ => Err(format!("unknown closure {s:?}; expected all, full or half")),
        }
    }
}

fn parse_alpha(s: &str) -> Result<f64, String> {
    let a: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if !(0.0..=1.0).contains(&a) {
        return Err(format!("{a} is outside [0, 1]"));
    }
    Ok(a)
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    let _ = env_logger::Builder::new()
        .filter_level(level)
        .parse_env("RUST_LOG")
        .try_init();
    log::info!("resolved config: {cli:?}");

    let pool = match rayon::ThreadPoolBuilder::new().num_threads(cli.jobs).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return 2;
        }
    };
    match pool.install(|| dispatch(cli.command)) {
        Ok(summary) => {
            println!("{summary}");
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}

#[derive(Serialize)]
struct RollsFile {
    seed: u64,
    generator: GenConfig,
    profiles: Vec<RollsEntry>,
}

#[derive(Serialize)]
struct RollsEntry {
    index: u64,
    profile: crate::geometry::RollProfile,
}

fn dispatch(command: Command) -> Result<String, Failure> {
    match command {
        Command::GenRolls { count, seed, out } => {
            let generator = GenConfig::default();
            let profiles = (0..count as u64)
                .map(|index| {
                    let profile = generate_profile(&mut RngStream::new(seed.seed, index), &generator)?;
                    Ok(RollsEntry { index, profile })
                })
                .collect::<Result<Vec<_>, crate::geometry::GeometryError>>()?;
            std::fs::create_dir_all(&out).context(&out)?;
            let path = out.join("rolls.json");
            let file = RollsFile {
                seed: seed.seed,
                generator,
                profiles,
            };
            let mut text = serde_json::to_string_pretty(&file)?;
            text.push('\n');
            std::fs::write(&path, text).context(&path)?;
            Ok(format!("gen-rolls: wrote {count} profiles to {}", path.display()))
        }
        Command::GenDataset {
            count,
            seed,
            alpha,
            out,
        } => {
            let mut cfg = DatasetConfig::new(seed.seed, count);
            cfg.flow = FlowParams::new(alpha)?;
            log::info!("dataset config: {}", serde_json::to_string(&cfg)?);
            let ds = write_dataset(&out, &cfg)?;
            Ok(format!(
                "gen-dataset: {} samples from {count} scenarios in {}",
                ds.manifest.samples.len(),
                out.display()
            ))
        }
        Command::Split {
            dataset,
            train,
            val,
            eval,
            seed,
        } => {
            let mut ds = Dataset::open(&dataset)?;
            ds.manifest = split_dataset(&ds.manifest, (train, val, eval), seed.seed)?;
            ds.save_manifest()?;
            let c = &ds.manifest.counts;
            Ok(format!(
                "split: train {} / val {} / eval {}",
                c["train"], c["val"], c["eval"]
            ))
        }
        Command::Augment { dataset, split, seed } => {
            let mut ds = Dataset::open(&dataset)?;
            let added = augment_split(&mut ds, split, seed.seed)?;
            Ok(format!(
                "augment: {split} now holds {} samples ({added} added)",
                ds.manifest.count(Some(split))
            ))
        }
        Command::Estimate {
            estimator,
            sample,
            alpha,
            out,
        } => {
            let res = RasterConfig::default().resolution;
            let read = |name: &str| read_pbm_file(sample.join(name), res).context(&sample.join(name));
            let input = EstimatorInput::new(read("inlet.pbm")?, read("over.pbm")?, read("under.pbm")?)?;
            let alpha = match alpha {
                Some(a) => a,
                None => sample_alpha(&sample)?.unwrap_or(FlowParams::default().alpha_loss),
            };
            let est = estimator.build(FlowParams::new(alpha)?);
            let shape = est.estimate(&input)?;
            write_pbm_file(&shape, &out).context(&out)?;
            let mut summary = format!("estimate: {} -> {} ({} px)", est.id(), out.display(), shape.area_px());
            let outlet = sample.join("outlet.pbm");
            if outlet.exists() {
                let reference = read_pbm_file(&outlet, res).context(&outlet)?;
                if let Ok(j) = jaccard(&shape, &reference) {
                    summary.push_str(&format!(", jaccard {j:.6} vs outlet.pbm"));
                }
            }
            Ok(summary)
        }
        Command::Evaluate {
            estimator,
            dataset,
            split,
            closure,
            alpha,
            report,
            histogram,
        } => {
            let ds = Dataset::open(&dataset)?;
            let params = match alpha {
                Some(a) => FlowParams::new(a)?,
                None => ds.manifest.config.flow,
            };
            let est = estimator.build(params);
            let rep = evaluate(&ds, est.as_ref(), split.0, closure.0)?;
            write_report_csv(&rep, &report)?;
            if let Some(h) = &histogram {
                write_histogram_csv(&rep, h)?;
            }
            Ok(format!(
                "evaluate: {} on {} samples, mean jaccard {:.6}, {} failures",
                rep.estimator,
                rep.rows.len(),
                rep.mean_jaccard,
                rep.failures()
            ))
        }
        Command::Plan {
            inlet,
            target,
            estimator,
            n,
            d,
            final_config,
            beam,
            alpha,
            seed,
            out,
        } => {
            let res = RasterConfig::default().resolution;
            let inlet_r = read_pbm_file(&inlet, res).context(&inlet)?;
            let target_r = read_pbm_file(&target, res).context(&target)?;
            let mut cfg = SearchConfig::new(n, d, seed.seed);
            cfg.beam = beam;
            if let Some(path) = &final_config {
                let text = std::fs::read_to_string(path).context(path)?;
                let stand: StandConfig = serde_json::from_str(&text)?;
                cfg.final_config = Some(stand);
            }
            let est = estimator.build(FlowParams::new(alpha)?);
            let p = plan(&inlet_r, &target_r, est.as_ref(), &cfg)?;
            p.save(&out)?;
            Ok(format!(
                "plan: best score {:.6} with {} stand(s) -> {}",
                p.score,
                p.steps.len(),
                out.display()
            ))
        }
    }
}

fn sample_alpha(dir: &Path) -> Result<Option<f64>, Failure> {
    let path = dir.join("meta.json");
    if !path.exists() {
        return Ok(None);
    }
    let text = std::fs::read_to_string(&path).context(&path)?;
    let value: serde_json::Value = serde_json::from_str(&text)?;
    Ok(value.get("alpha_loss").and_then(|v| v.as_f64()))
}

/// Error text for the one-line diagnostic, optionally prefixed by a path.
struct Failure(String);

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl<E: std::error::Error> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure(e.to_string())
    }
}

trait Context<T> {
    fn context(self, path: &Path) -> Result<T, Failure>;
}

impl<T, E: std::error::Error> Context<T> for Result<T, E> {
    fn context(self, path: &Path) -> Result<T, Failure> {
        self.map_err(|e| Failure(format!("{}: {e}", path.display())))
    }
}
