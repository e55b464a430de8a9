//! Repeated seeded experiments over image sets, and CSV reporting.
//!
//! Each run's seed is `master ^ mix(fnv1a("<file name>\0<objective>\0<m>\0<algorithm>\0<run>"))`,
//! so seeds depend only on the run's own coordinates. Runs may execute in
//! parallel; reports are assembled in coordinate order, which makes the CSV
//! output independent of scheduling.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use thiserror::Error;

use crate::histogram::build_histogram;
use crate::image_io::{load_image, write_image, GrayImage, ImageIoError};
use crate::metrics::{run_std, MetricReport};
use crate::objectives::{ObjectiveKind, ObjectiveSpec, ThresholdVector};
use crate::oracle::{dp_search, exhaustive_search};
use crate::segmenter::segment;
use crate::swarm::{self, SwarmAlgorithm, SwarmParams};

/// Environment variable capping the worker count (0 or unset: all cores).
pub const THREADS_ENV: &str = "SWARMTHRESH_THREADS";

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid experiment config: {0}")]
    Config(String),
    #[error(transparent)]
    Image(#[from] ImageIoError),
    #[error("i/o error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("csv error on {}: {source}", path.display())]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
    #[error("{0}")]
    Solver(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Algorithm {
    Pso,
    Chpso,
    Exhaustive,
    Dp,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Pso => "pso",
            Algorithm::Chpso => "chpso",
            Algorithm::Exhaustive => "exhaustive",
            Algorithm::Dp => "dp",
        }
    }

    /// Exact solvers are deterministic, so only one run is performed.
    pub fn is_exact(self) -> bool {
        matches!(self, Algorithm::Exhaustive | Algorithm::Dp)
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "pso" => Ok(Algorithm::Pso),
            "chpso" => Ok(Algorithm::Chpso),
            "exhaustive" => Ok(Algorithm::Exhaustive),
            "dp" => Ok(Algorithm::Dp),
            other => Err(format!(
                "unknown algorithm `{other}` (expected pso, chpso, dp or exhaustive)"
            )),
        }
    }
}

/// Result of one optimizer invocation, independent of any image metrics.
#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub thresholds: ThresholdVector,
    pub fitness: f64,
    pub wall_time: Duration,
}

/// Runs `algorithm` on a prepared objective. `params.seed` is used as is.
pub fn solve(
    algorithm: Algorithm,
    spec: &ObjectiveSpec,
    m: usize,
    params: &SwarmParams,
) -> Result<Solution, HarnessError> {
    let started = Instant::now();
    let (thresholds, fitness) = match algorithm {
        Algorithm::Pso | Algorithm::Chpso => {
            let algo = if algorithm == Algorithm::Pso {
                SwarmAlgorithm::Pso
            } else {
                SwarmAlgorithm::Chpso
            };
            let r = swarm::run(algo, spec, m, params)
                .map_err(|e| HarnessError::Solver(e.to_string()))?;
            (r.thresholds, r.maximization_fitness)
        }
        Algorithm::Exhaustive => {
            let r = exhaustive_search(spec, m).map_err(|e| HarnessError::Solver(e.to_string()))?;
            (r.thresholds, r.fitness)
        }
        Algorithm::Dp => {
            let r = dp_search(spec, m).map_err(|e| HarnessError::Solver(e.to_string()))?;
            (r.thresholds, r.fitness)
        }
    };
    Ok(Solution {
        thresholds,
        fitness,
        wall_time: started.elapsed(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub images: Vec<PathBuf>,
    pub objectives: Vec<ObjectiveKind>,
    pub levels: Vec<usize>,
    pub algorithms: Vec<Algorithm>,
    pub runs: usize,
    /// Swarm settings; `seed` is the master seed.
    pub swarm: SwarmParams,
    pub output_dir: PathBuf,
    pub write_segmented: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            images: Vec::new(),
            objectives: vec![ObjectiveKind::Otsu, ObjectiveKind::Kapur],
            levels: vec![2, 3, 4, 5],
            algorithms: vec![Algorithm::Chpso],
            runs: 50,
            swarm: SwarmParams::default(),
            output_dir: PathBuf::from("results"),
            write_segmented: false,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: &str| Err(HarnessError::Config(m.to_string()));
        if self.images.is_empty() {
            return bad("at least one image is required");
        }
        if self.objectives.is_empty() {
            return bad("at least one objective is required");
        }
        if self.algorithms.is_empty() {
            return bad("at least one algorithm is required");
        }
        if self.levels.is_empty() || self.levels.contains(&0) {
            return bad("levels must be a non-empty list of positive integers");
        }
        if self.runs == 0 {
            return bad("runs must be at least 1");
        }
        for algo in &self.algorithms {
            if let Some(sw) = swarm_kind(*algo) {
                self.swarm
                    .validate(sw)
                    .map_err(|e| HarnessError::Config(e.to_string()))?;
            }
        }
        Ok(())
    }
}

fn swarm_kind(a: Algorithm) -> Option<SwarmAlgorithm> {
    match a {
        Algorithm::Pso => Some(SwarmAlgorithm::Pso),
        Algorithm::Chpso => Some(SwarmAlgorithm::Chpso),
        _ => None,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub image: String,
    pub objective: ObjectiveKind,
    pub m: usize,
    pub algorithm: Algorithm,
    pub run_index: usize,
    pub seed: u64,
    pub thresholds: ThresholdVector,
    pub fitness: f64,
    pub mse: f64,
    pub psnr_db: f64,
    pub uniformity: f64,
    pub me_pct: f64,
    pub wall_time_s: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AggregateReport {
    pub image: String,
    pub objective: ObjectiveKind,
    pub m: usize,
    pub algorithm: Algorithm,
    pub runs: usize,
    pub best_thresholds: ThresholdVector,
    pub best_fitness: f64,
    pub mean_fitness: f64,
    pub std_fitness: f64,
    pub mean_psnr: f64,
    /// PSNR of the best-fitness run.
    pub best_psnr: f64,
    pub mean_me_pct: f64,
    pub mean_wall_time_s: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Failure {
    pub image: String,
    pub objective: Option<ObjectiveKind>,
    pub m: Option<usize>,
    pub algorithm: Option<Algorithm>,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ExperimentOutcome {
    pub runs: Vec<RunReport>,
    pub aggregates: Vec<AggregateReport>,
    pub failures: Vec<Failure>,
}

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

fn fnv1a(bytes: &[u8]) -> u64 {
    bytes
        .iter()
        .fold(FNV_OFFSET, |h, &b| (h ^ b as u64).wrapping_mul(FNV_PRIME))
}

/// SplitMix64 finalizer.
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed for one run, derived from the master seed and the run coordinates.
pub fn derive_seed(
    master: u64,
    image_key: &str,
    objective: ObjectiveKind,
    m: usize,
    algorithm: Algorithm,
    run_index: usize,
) -> u64 {
    let key = format!("{image_key}\0{objective}\0{m}\0{algorithm}\0{run_index}");
    master ^ mix64(fnv1a(key.as_bytes()))
}

/// Stable key used for seeding: the file name, falling back to the full path.
pub fn image_key(path: &Path) -> String {
    path.file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

fn image_stem(path: &Path) -> String {
    path.file_stem()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| "image".to_string())
}

/// PNG files (and PGM files) in `dir`, sorted by name.
pub fn list_images(dir: &Path) -> Result<Vec<PathBuf>, HarnessError> {
    let entries = fs::read_dir(dir).map_err(|source| HarnessError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let mut out: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.is_file()
                && p.extension()
                    .map(|e| {
                        let e = e.to_string_lossy().to_ascii_lowercase();
                        e == "png" || e == "pgm"
                    })
                    .unwrap_or(false)
        })
        .collect();
    out.sort();
    Ok(out)
}

struct Prepared {
    label: String,
    key: String,
    image: GrayImage,
    specs: Vec<(ObjectiveKind, ObjectiveSpec)>,
}

#[derive(Clone, Copy)]
struct Job {
    image: usize,
    objective: ObjectiveKind,
    m: usize,
    algorithm: Algorithm,
    run_index: usize,
}

fn worker_count() -> usize {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| {
            std::thread::available_parallelism()
                .map(|n| n.get())
                .unwrap_or(1)
        })
}

fn execute(job: Job, prepared: &[Prepared], cfg: &ExperimentConfig) -> Result<RunReport, String> {
    let p = &prepared[job.image];
    let spec = &p
        .specs
        .iter()
        .find(|(k, _)| *k == job.objective)
        .expect("objective prepared")
        .1;
    let seed = derive_seed(
        cfg.swarm.seed,
        &p.key,
        job.objective,
        job.m,
        job.algorithm,
        job.run_index,
    );
    let params = cfg.swarm.clone().with_seed(seed);
    let sol = solve(job.algorithm, spec, job.m, &params).map_err(|e| e.to_string())?;
    let seg = segment(&p.image, &sol.thresholds);
    let metrics = MetricReport::compute(&p.image, &seg, sol.fitness).map_err(|e| e.to_string())?;
    Ok(RunReport {
        image: p.label.clone(),
        objective: job.objective,
        m: job.m,
        algorithm: job.algorithm,
        run_index: job.run_index,
        seed,
        thresholds: sol.thresholds,
        fitness: sol.fitness,
        mse: metrics.mse,
        psnr_db: metrics.psnr_db,
        uniformity: metrics.uniformity,
        me_pct: metrics.misclassification_pct,
        wall_time_s: sol.wall_time.as_secs_f64(),
    })
}

fn aggregate(group: &[RunReport]) -> AggregateReport {
    let first = &group[0];
    let n = group.len() as f64;
    let mut best = first;
    for r in group {
        if r.fitness > best.fitness {
            best = r;
        }
    }
    let fitnesses: Vec<f64> = group.iter().map(|r| r.fitness).collect();
    AggregateReport {
        image: first.image.clone(),
        objective: first.objective,
        m: first.m,
        algorithm: first.algorithm,
        runs: group.len(),
        best_thresholds: best.thresholds.clone(),
        best_fitness: best.fitness,
        mean_fitness: fitnesses.iter().sum::<f64>() / n,
        std_fitness: run_std(&fitnesses),
        mean_psnr: group.iter().map(|r| r.psnr_db).sum::<f64>() / n,
        best_psnr: best.psnr_db,
        mean_me_pct: group.iter().map(|r| r.me_pct).sum::<f64>() / n,
        mean_wall_time_s: group.iter().map(|r| r.wall_time_s).sum::<f64>() / n,
    }
}

/// Runs every (image, objective, m, algorithm, run) combination of `cfg`.
///
/// Image loading errors are recorded as failures and the remaining images are
/// still processed. Segmented images are written when `cfg.write_segmented`.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutcome, HarnessError> {
    cfg.validate()?;
    let mut outcome = ExperimentOutcome::default();

    let mut prepared = Vec::new();
    for path in &cfg.images {
        let label = path.display().to_string();
        let loaded = load_image(path).map_err(|e| e.to_string()).and_then(|img| {
            build_histogram(&img)
                .map(|h| (img, h))
                .map_err(|e| e.to_string())
        });
        match loaded {
            Ok((image, hist)) => prepared.push(Prepared {
                label,
                key: image_key(path),
                specs: cfg
                    .objectives
                    .iter()
                    .map(|&k| (k, ObjectiveSpec::new(k, &hist)))
                    .collect(),
                image,
            }),
            Err(message) => outcome.failures.push(Failure {
                image: label,
                objective: None,
                m: None,
                algorithm: None,
                message,
            }),
        }
    }

    // Coordinate order: image, objective, m, algorithm, run.
    let mut groups: Vec<Vec<Job>> = Vec::new();
    for image in 0..prepared.len() {
        for &objective in &cfg.objectives {
            for &m in &cfg.levels {
                for &algorithm in &cfg.algorithms {
                    let runs = if algorithm.is_exact() { 1 } else { cfg.runs };
                    groups.push(
                        (0..runs)
                            .map(|run_index| Job {
                                image,
                                objective,
                                m,
                                algorithm,
                                run_index,
                            })
                            .collect(),
                    );
                }
            }
        }
    }
    let jobs: Vec<Job> = groups.iter().flatten().copied().collect();

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(worker_count())
        .build()
        .map_err(|e| HarnessError::Config(e.to_string()))?;
    let results: Vec<Result<RunReport, String>> = pool.install(|| {
        jobs.par_iter()
            .map(|&job| execute(job, &prepared, cfg))
            .collect()
    });

    let mut results = results.into_iter();
    for group in &groups {
        let mut reports = Vec::with_capacity(group.len());
        let mut error = None;
        for _ in group {
            match results.next().expect("one result per job") {
                Ok(r) => reports.push(r),
                Err(e) => error = error.or(Some(e)),
            }
        }
        let job = group[0];
        if let Some(message) = error {
            outcome.failures.push(Failure {
                image: prepared[job.image].label.clone(),
                objective: Some(job.objective),
                m: Some(job.m),
                algorithm: Some(job.algorithm),
                message,
            });
            continue;
        }
        let agg = aggregate(&reports);
        if cfg.write_segmented {
            let p = &prepared[job.image];
            let seg = segment(&p.image, &agg.best_thresholds);
            fs::create_dir_all(&cfg.output_dir).map_err(|source| HarnessError::Io {
                path: cfg.output_dir.clone(),
                source,
            })?;
            let name = format!(
                "{}_{}_m{}_{}.png",
                image_stem(Path::new(&p.label)),
                job.objective,
                job.m,
                job.algorithm
            );
            write_image(&seg.reconstructed, cfg.output_dir.join(name))?;
        }
        outcome.aggregates.push(agg);
        outcome.runs.extend(reports);
    }
    Ok(outcome)
}

/// Formats a float for CSV; infinities become `inf`.
fn num(x: f64) -> String {
    if x == f64::INFINITY {
        "inf".to_string()
    } else if x == f64::NEG_INFINITY {
        "-inf".to_string()
    } else {
        x.to_string()
    }
}

fn write_csv(path: &Path, header: &[&str], rows: Vec<Vec<String>>) -> Result<(), HarnessError> {
    let csv_err = |source: csv::Error| HarnessError::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut w = csv::WriterBuilder::new()
        .quote_style(csv::QuoteStyle::NonNumeric)
        .from_path(path)
        .map_err(csv_err)?;
    w.write_record(header).map_err(csv_err)?;
    for row in rows {
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush().map_err(|source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub const RUNS_HEADER: [&str; 11] = [
    "image",
    "objective",
    "m",
    "algorithm",
    "run_index",
    "seed",
    "thresholds",
    "fitness",
    "psnr_db",
    "uniformity",
    "me_pct",
];

pub const SUMMARY_HEADER: [&str; 12] = [
    "image",
    "objective",
    "m",
    "algorithm",
    "runs",
    "best_thresholds",
    "best_fitness",
    "mean_fitness",
    "std_fitness",
    "mean_psnr",
    "best_psnr",
    "mean_me_pct",
];

/// Writes `runs.csv`, `summary.csv`, `failures.csv` and the timing files.
///
/// Wall-clock columns live in `timing.csv` / `timing_summary.csv` so the
/// other files are byte-reproducible for a fixed master seed.
pub fn emit_csv(outcome: &ExperimentOutcome, output_dir: &Path) -> Result<(), HarnessError> {
    fs::create_dir_all(output_dir).map_err(|source| HarnessError::Io {
        path: output_dir.to_path_buf(),
        source,
    })?;
    let runs = outcome
        .runs
        .iter()
        .map(|r| {
            vec![
                r.image.clone(),
                r.objective.to_string(),
                r.m.to_string(),
                r.algorithm.to_string(),
                r.run_index.to_string(),
                r.seed.to_string(),
                r.thresholds.to_field(),
                num(r.fitness),
                num(r.psnr_db),
                num(r.uniformity),
                num(r.me_pct),
            ]
        })
        .collect();
    write_csv(&output_dir.join("runs.csv"), &RUNS_HEADER, runs)?;

    let summary = outcome
        .aggregates
        .iter()
        .map(|a| {
            vec![
                a.image.clone(),
                a.objective.to_string(),
                a.m.to_string(),
                a.algorithm.to_string(),
                a.runs.to_string(),
                a.best_thresholds.to_field(),
                num(a.best_fitness),
                num(a.mean_fitness),
                num(a.std_fitness),
                num(a.mean_psnr),
                num(a.best_psnr),
                num(a.mean_me_pct),
            ]
        })
        .collect();
    write_csv(&output_dir.join("summary.csv"), &SUMMARY_HEADER, summary)?;

    let failures = outcome
        .failures
        .iter()
        .map(|f| {
            vec![
                f.image.clone(),
                f.objective.map(|o| o.to_string()).unwrap_or_default(),
                f.m.map(|m| m.to_string()).unwrap_or_default(),
                f.algorithm.map(|a| a.to_string()).unwrap_or_default(),
                f.message.clone(),
            ]
        })
        .collect();
    write_csv(
        &output_dir.join("failures.csv"),
        &["image", "objective", "m", "algorithm", "message"],
        failures,
    )?;

    let timing = outcome
        .runs
        .iter()
        .map(|r| {
            vec![
                r.image.clone(),
                r.objective.to_string(),
                r.m.to_string(),
                r.algorithm.to_string(),
                r.run_index.to_string(),
                num(r.wall_time_s),
            ]
        })
        .collect();
    write_csv(
        &output_dir.join("timing.csv"),
        &[
            "image",
            "objective",
            "m",
            "algorithm",
            "run_index",
            "wall_time_s",
        ],
        timing,
    )?;
    let timing_summary = outcome
        .aggregates
        .iter()
        .map(|a| {
            vec![
                a.image.clone(),
                a.objective.to_string(),
                a.m.to_string(),
                a.algorithm.to_string(),
                a.runs.to_string(),
                num(a.mean_wall_time_s),
            ]
        })
        .collect();
    write_csv(
        &output_dir.join("timing_summary.csv"),
        &[
            "image",
            "objective",
            "m",
            "algorithm",
            "runs",
            "mean_wall_time_s",
        ],
        timing_summary,
    )
}
