//! Detection of oscillatory frequencies and of the change points of each
//! oscillation in noisy, non-stationary time series.

pub mod bootstrap;
pub mod detect;
pub mod error;
pub mod rng;
pub mod series;
pub mod signal;
pub mod spectral;
pub mod tuning;

pub use detect::{
    algorithm1, algorithm2, run_pipeline, Bandwidth, FrequencyChangePoints, PipelineConfig,
    PipelineResult, Stage1Config, Stage1Iteration, Stage1Result, Stage2Config, Stage2Iteration,
    Stage2Result, Termination,
};
pub use error::{Error, Result};
pub use num_complex::Complex64;
pub use series::TimeSeries;
pub use signal::{MeanSpec, NoiseKind, NoiseModel};
pub use spectral::{build_grid, FrequencyGrid};
pub use tuning::{MvCurve, TuningOptions};
