//! Multilevel grayscale thresholding.
//!
//! Thresholds maximize Otsu's between-class variance or Kapur's entropy and
//! are searched with a global-best PSO, a four-subswarm heterogeneous PSO
//! (CHPSO), or exactly by enumeration / dynamic programming. The harness runs
//! seeded repetitions and reports PSNR, uniformity, misclassification error
//! and run-to-run dispersion.

pub mod cli;
pub mod harness;
pub mod histogram;
pub mod image_io;
pub mod metrics;
pub mod objectives;
pub mod oracle;
pub mod segmenter;
pub mod swarm;

pub use harness::{run_experiment, Algorithm, ExperimentConfig};
pub use histogram::{build_histogram, prefix_moments, Histogram, PrefixMoments};
pub use image_io::{load_image, write_image, GrayImage, LEVELS};
pub use objectives::{decode_position, ObjectiveKind, ObjectiveSpec, ThresholdVector};
pub use oracle::{dp_search, exhaustive_search, OracleResult};
pub use segmenter::{segment, SegmentedImage};
pub use swarm::{SwarmAlgorithm, SwarmParams};
