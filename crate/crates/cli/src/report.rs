//! JSON layout of `detect` results.
//!
//! Field order is the declaration order below and never depends on hashing,
//! so equal results serialize to equal bytes.

use serde::Serialize;
use spindle_core::{FrequencyGrid, PipelineResult, Termination};

use crate::config::RunConfig;

/// Schema document the report conforms to.
pub const SCHEMA: &str = include_str!("../schema/detect.schema.json");

#[derive(Debug, Serialize)]
pub struct DetectReport {
    pub n: usize,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sampling_rate_hz: Option<f64>,
    pub grid: GridReport,
    pub tuning: TuningReport,
    pub stage1: Stage1Report,
    pub stage2: Vec<Stage2Report>,
}

#[derive(Debug, Serialize)]
pub struct GridReport {
    pub delta0: f64,
    pub mesh: f64,
    pub p: usize,
    pub factor: f64,
}

#[derive(Debug, Serialize)]
pub struct TuningReport {
    pub m: usize,
    /// One entry per detected frequency, in detection order.
    pub m_tilde: Vec<usize>,
    pub m_prime: Vec<usize>,
    pub source: &'static str,
}

#[derive(Debug, Serialize)]
pub struct Stage1Report {
    pub alpha: f64,
    pub replicates: usize,
    pub iterations: Vec<Stage1Row>,
    pub omega_hat_set: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hz_set: Option<Vec<f64>>,
    pub termination: Termination,
}

#[derive(Debug, Serialize)]
pub struct Stage1Row {
    pub omega_hat: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hz: Option<f64>,
    #[serde(rename = "F")]
    pub statistic: f64,
    pub crit: f64,
    pub candidates: usize,
    pub accepted: bool,
}

#[derive(Debug, Serialize)]
pub struct Stage2Report {
    pub omega: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hz: Option<f64>,
    pub beta: f64,
    pub replicates: usize,
    pub m_tilde: usize,
    pub m_prime: usize,
    pub iterations: Vec<Stage2Row>,
    pub change_points: Vec<usize>,
    pub termination: Termination,
}

#[derive(Debug, Serialize)]
pub struct Stage2Row {
    pub b_hat: usize,
    #[serde(rename = "T")]
    pub statistic: f64,
    pub crit: f64,
    pub candidates: usize,
    pub accepted: bool,
}

impl DetectReport {
    pub fn new(n: usize, cfg: &RunConfig, grid: &FrequencyGrid, result: &PipelineResult) -> Self {
        let stage1 = &result.stage1;
        let detected = stage1.detected();
        Self {
            n,
            seed: cfg.seed,
            sampling_rate_hz: cfg.sampling_rate_hz,
            grid: GridReport {
                delta0: grid.delta0(),
                mesh: grid.mesh(),
                p: grid.len(),
                factor: grid.factor(),
            },
            tuning: TuningReport {
                m: result.m,
                m_tilde: result.stage2.iter().map(|s| s.m_tilde).collect(),
                m_prime: result.stage2.iter().map(|s| s.m_prime).collect(),
                source: cfg.bandwidth_source(),
            },
            stage1: Stage1Report {
                alpha: cfg.alpha,
                replicates: cfg.replicates,
                iterations: stage1
                    .iterations
                    .iter()
                    .map(|it| Stage1Row {
                        omega_hat: it.omega_hat,
                        hz: cfg.to_hz(it.omega_hat),
                        statistic: it.statistic,
                        crit: it.critical_value,
                        candidates: it.candidates,
                        accepted: it.accepted,
                    })
                    .collect(),
                hz_set: cfg
                    .sampling_rate_hz
                    .map(|_| detected.iter().filter_map(|&w| cfg.to_hz(w)).collect()),
                omega_hat_set: detected,
                termination: stage1.termination,
            },
            stage2: result
                .stage2
                .iter()
                .map(|s| Stage2Report {
                    omega: s.omega,
                    hz: cfg.to_hz(s.omega),
                    beta: cfg.beta,
                    replicates: cfg.replicates2,
                    m_tilde: s.m_tilde,
                    m_prime: s.m_prime,
                    iterations: s
                        .result
                        .iterations
                        .iter()
                        .map(|it| Stage2Row {
                            b_hat: it.b_hat,
                            statistic: it.statistic,
                            crit: it.critical_value,
                            candidates: it.candidates,
                            accepted: it.accepted,
                        })
                        .collect(),
                    change_points: s.result.change_points(),
                    termination: s.result.termination,
                })
                .collect(),
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report fields are plain data");
        s.push('\n');
        s
    }
}
