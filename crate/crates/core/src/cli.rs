//! Command-line front end.
//!
//! Exit codes: 0 success, 1 usage error, 2 runtime error.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

use crate::harness::{emit_csv, list_images, run_experiment, solve, Algorithm, ExperimentConfig};
use crate::histogram::build_histogram;
use crate::image_io::{load_image, write_image};
use crate::metrics::MetricReport;
use crate::objectives::{ObjectiveKind, ObjectiveSpec};
use crate::segmenter::segment;
use crate::swarm::SwarmParams;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_RUNTIME: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "swarmthresh",
    version,
    about = "Multilevel Otsu/Kapur thresholding with swarm optimizers"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Threshold one image and print thresholds, fitness and quality metrics.
    Segment(SegmentArgs),
    /// Repeated seeded runs over a set of images, written as CSV reports.
    Experiment(ExperimentArgs),
    /// Exact optimum for one image, objective and number of thresholds.
    Oracle(OracleArgs),
}

#[derive(Debug, Clone, Args, Default)]
struct SwarmFlags {
    /// Iterations per run.
    #[arg(long)]
    iters: Option<usize>,
    /// Total particles (a multiple of 4 for chpso).
    #[arg(long)]
    particles: Option<usize>,
    /// Master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Inertia schedule as start:end, e.g. 0.4:0.9 or 0.9:0.4.
    #[arg(long, value_parser = parse_inertia)]
    inertia: Option<(f64, f64)>,
}

impl SwarmFlags {
    fn apply(&self, params: &mut SwarmParams) {
        if let Some(v) = self.iters {
            params.n_iterations = v;
        }
        if let Some(v) = self.particles {
            params.n_particles = v;
        }
        if let Some(v) = self.seed {
            params.seed = v;
        }
        if let Some((a, b)) = self.inertia {
            params.inertia_start = a;
            params.inertia_end = b;
        }
    }
}

#[derive(Debug, Args)]
struct SegmentArgs {
    #[arg(long)]
    image: PathBuf,
    #[arg(long, default_value = "otsu")]
    objective: ObjectiveKind,
    /// Number of thresholds.
    #[arg(long, default_value_t = 2)]
    levels: usize,
    #[arg(long, default_value = "chpso")]
    algo: Algorithm,
    #[command(flatten)]
    swarm: SwarmFlags,
    /// Directory for the segmented PNG.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct OracleArgs {
    #[arg(long)]
    image: PathBuf,
    #[arg(long, default_value = "otsu")]
    objective: ObjectiveKind,
    #[arg(long, default_value_t = 2)]
    levels: usize,
    /// dp or exhaustive.
    #[arg(long, default_value = "dp")]
    algo: Algorithm,
}

#[derive(Debug, Args)]
struct ExperimentArgs {
    /// Flat `key = value` file using the flag names below; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Image file; may be repeated.
    #[arg(long)]
    image: Vec<PathBuf>,
    /// Directory whose PNG/PGM files are all used.
    #[arg(long)]
    images_dir: Option<PathBuf>,
    /// Comma-separated objectives.
    #[arg(long, value_delimiter = ',')]
    objective: Vec<ObjectiveKind>,
    /// Comma-separated threshold counts.
    #[arg(long, value_delimiter = ',')]
    levels: Vec<usize>,
    /// Comma-separated algorithms.
    #[arg(long, value_delimiter = ',')]
    algo: Vec<Algorithm>,
    #[arg(long)]
    runs: Option<usize>,
    #[command(flatten)]
    swarm: SwarmFlags,
    /// Output directory for CSV reports and segmented images.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    write_segmented: bool,
}

fn parse_inertia(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s
        .split_once(':')
        .ok_or_else(|| format!("expected start:end, got `{s}`"))?;
    let a = a.trim().parse::<f64>().map_err(|e| e.to_string())?;
    let b = b.trim().parse::<f64>().map_err(|e| e.to_string())?;
    Ok((a, b))
}

/// Error split by exit code.
enum Failure {
    Usage(String),
    Runtime(String),
}

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

fn runtime(e: impl std::fmt::Display) -> Failure {
    Failure::Runtime(e.to_string())
}

fn split_list<T: std::str::FromStr<Err = String>>(value: &str) -> Result<Vec<T>, String> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(T::from_str)
        .collect()
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, String>
where
    T::Err: std::fmt::Display,
{
    value
        .trim()
        .parse::<T>()
        .map_err(|e| format!("bad value for `{key}`: {e}"))
}

fn parse_bool(key: &str, value: &str) -> Result<bool, String> {
    match value.trim().to_ascii_lowercase().as_str() {
        "" | "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        other => Err(format!("bad boolean for `{key}`: {other}")),
    }
}

/// Applies a flat `key = value` config file to `cfg`. Relative paths are
/// resolved against the file's directory.
fn apply_config_file(cfg: &mut ExperimentConfig, path: &Path) -> Result<(), Failure> {
    let text = fs::read_to_string(path)
        .map_err(|e| runtime(format!("cannot read config {}: {e}", path.display())))?;
    let base = path.parent().unwrap_or(Path::new("."));
    let resolve = |v: &str| {
        let p = PathBuf::from(v.trim());
        if p.is_absolute() {
            p
        } else {
            base.join(p)
        }
    };
    let mut images = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').unwrap_or((line, ""));
        let key = key.trim().trim_start_matches("--").replace('_', "-");
        let value = value.trim();
        let err = |m: String| usage(format!("{}:{}: {m}", path.display(), lineno + 1));
        match key.as_str() {
            "image" => images.push(resolve(value)),
            "images-dir" => {
                images.extend(list_images(&resolve(value)).map_err(runtime)?);
            }
            "objective" => cfg.objectives = split_list(value).map_err(err)?,
            "levels" => {
                cfg.levels = value
                    .split(',')
                    .map(|v| parse_num::<usize>("levels", v))
                    .collect::<Result<_, _>>()
                    .map_err(err)?
            }
            "algo" => cfg.algorithms = split_list(value).map_err(err)?,
            "runs" => cfg.runs = parse_num(&key, value).map_err(err)?,
            "iters" => cfg.swarm.n_iterations = parse_num(&key, value).map_err(err)?,
            "particles" => cfg.swarm.n_particles = parse_num(&key, value).map_err(err)?,
            "seed" => cfg.swarm.seed = parse_num(&key, value).map_err(err)?,
            "inertia" => {
                let (a, b) = parse_inertia(value).map_err(err)?;
                cfg.swarm.inertia_start = a;
                cfg.swarm.inertia_end = b;
            }
            "out" => cfg.output_dir = resolve(value),
            "write-segmented" => cfg.write_segmented = parse_bool(&key, value).map_err(err)?,
            other => return Err(err(format!("unknown key `{other}`"))),
        }
    }
    if !images.is_empty() {
        cfg.images = images;
    }
    Ok(())
}

fn build_config(args: &ExperimentArgs) -> Result<ExperimentConfig, Failure> {
    let mut cfg = ExperimentConfig::default();
    if let Some(path) = &args.config {
        apply_config_file(&mut cfg, path)?;
    }
    let mut images = args.image.clone();
    if let Some(dir) = &args.images_dir {
        images.extend(list_images(dir).map_err(runtime)?);
    }
    if !images.is_empty() {
        cfg.images = images;
    }
    if !args.objective.is_empty() {
        cfg.objectives = args.objective.clone();
    }
    if !args.levels.is_empty() {
        cfg.levels = args.levels.clone();
    }
    if !args.algo.is_empty() {
        cfg.algorithms = args.algo.clone();
    }
    if let Some(r) = args.runs {
        cfg.runs = r;
    }
    args.swarm.apply(&mut cfg.swarm);
    if let Some(out) = &args.out {
        cfg.output_dir = out.clone();
    }
    if args.write_segmented {
        cfg.write_segmented = true;
    }
    cfg.validate().map_err(|e| usage(e.to_string()))?;
    Ok(cfg)
}

fn fmt_f64(x: f64) -> String {
    if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.to_string()
    } else {
        x.to_string()
    }
}

fn cmd_segment(args: &SegmentArgs, out: &mut dyn Write) -> Result<(), Failure> {
    let mut params = SwarmParams::default();
    args.swarm.apply(&mut params);
    if args.levels == 0 {
        return Err(usage("--levels must be at least 1"));
    }
    if let Algorithm::Pso | Algorithm::Chpso = args.algo {
        let kind = if args.algo == Algorithm::Pso {
            crate::swarm::SwarmAlgorithm::Pso
        } else {
            crate::swarm::SwarmAlgorithm::Chpso
        };
        params.validate(kind).map_err(|e| usage(e.to_string()))?;
    }
    let img = load_image(&args.image).map_err(runtime)?;
    let hist = build_histogram(&img).map_err(runtime)?;
    let spec = ObjectiveSpec::new(args.objective, &hist);
    let sol = solve(args.algo, &spec, args.levels, &params).map_err(runtime)?;
    let seg = segment(&img, &sol.thresholds);
    let metrics = MetricReport::compute(&img, &seg, sol.fitness).map_err(runtime)?;
    let w = |out: &mut dyn Write, s: String| writeln!(out, "{s}").map_err(runtime);
    w(out, format!("image: {}", args.image.display()))?;
    w(out, format!("objective: {}", args.objective))?;
    w(out, format!("algorithm: {}", args.algo))?;
    w(out, format!("m: {}", args.levels))?;
    w(out, format!("thresholds: {}", sol.thresholds))?;
    w(out, format!("fitness: {}", fmt_f64(sol.fitness)))?;
    w(out, format!("mse: {}", fmt_f64(metrics.mse)))?;
    w(out, format!("psnr_db: {}", fmt_f64(metrics.psnr_db)))?;
    w(out, format!("uniformity: {}", fmt_f64(metrics.uniformity)))?;
    w(
        out,
        format!("me_pct: {}", fmt_f64(metrics.misclassification_pct)),
    )?;
    w(out, format!("wall_time_s: {}", sol.wall_time.as_secs_f64()))?;
    if let Some(dir) = &args.out {
        let stem = args
            .image
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "image".into());
        let path = dir.join(format!(
            "{stem}_{}_m{}_{}.png",
            args.objective, args.levels, args.algo
        ));
        write_image(&seg.reconstructed, &path).map_err(runtime)?;
        w(out, format!("segmented: {}", path.display()))?;
    }
    Ok(())
}

fn cmd_oracle(args: &OracleArgs, out: &mut dyn Write) -> Result<(), Failure> {
    if !args.algo.is_exact() {
        return Err(usage("oracle --algo must be dp or exhaustive"));
    }
    let img = load_image(&args.image).map_err(runtime)?;
    let hist = build_histogram(&img).map_err(runtime)?;
    let spec = ObjectiveSpec::new(args.objective, &hist);
    let sol = solve(args.algo, &spec, args.levels, &SwarmParams::default()).map_err(runtime)?;
    writeln!(out, "thresholds: {}", sol.thresholds).map_err(runtime)?;
    writeln!(out, "fitness: {}", fmt_f64(sol.fitness)).map_err(runtime)?;
    Ok(())
}

fn cmd_experiment(args: &ExperimentArgs, out: &mut dyn Write) -> Result<(), Failure> {
    let cfg = build_config(args)?;
    let outcome = run_experiment(&cfg).map_err(runtime)?;
    emit_csv(&outcome, &cfg.output_dir).map_err(runtime)?;
    writeln!(
        out,
        "{} runs, {} summary rows, {} failures -> {}",
        outcome.runs.len(),
        outcome.aggregates.len(),
        outcome.failures.len(),
        cfg.output_dir.display()
    )
    .map_err(runtime)?;
    Ok(())
}

/// Parses `argv` (including the program name) and runs the chosen command,
/// writing normal output to `out` and diagnostics to `err`.
pub fn run_with_io<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{}", e.render());
                    EXIT_OK
                }
                _ => {
                    let _ = write!(err, "{}", e.render());
                    EXIT_USAGE
                }
            };
        }
    };
    let result = match &cli.command {
        Command::Segment(a) => cmd_segment(a, out),
        Command::Experiment(a) => cmd_experiment(a, out),
        Command::Oracle(a) => cmd_oracle(a, out),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(Failure::Usage(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            let _ = writeln!(
                err,
                "usage: swarmthresh <segment|experiment|oracle> [OPTIONS]  (see --help)"
            );
            EXIT_USAGE
        }
        Err(Failure::Runtime(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            EXIT_RUNTIME
        }
    }
}

pub fn cli_main<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_with_io(argv, &mut stdout.lock(), &mut stderr.lock())
}
