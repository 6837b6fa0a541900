//! Iterative frequency detection followed by per-frequency change-point
//! detection.
//!
//! Both loops follow the same shape: evaluate the test statistic over the
//! current candidate set, compare it with a bootstrap critical value computed
//! over the same set, and on rejection record the maximizer and cut a closed
//! neighbourhood around it out of the candidate set. Rejection is strict
//! (`statistic > critical`), so an all-zero input never rejects.

use rayon::prelude::*;
use serde::Serialize;

use crate::bootstrap::{empirical_quantile, multipliers, stage2_bootstrap_stat, Stage1Bootstrap};
use crate::error::{invalid, Error, Result};
use crate::rng::{derive_seed, Domain};
use crate::series::TimeSeries;
use crate::spectral::{dppt_profile, local_contrast_blocks, local_contrast_range, FrequencyGrid};
use crate::tuning::{self, MvCurve, TuningOptions};

pub const STAGE1_MAX_ITERATIONS: usize = 20;
pub const STAGE2_MAX_ITERATIONS: usize = 50;
pub const MIN_REPLICATES: usize = 100;

#[derive(Debug, Clone)]
pub struct Stage1Config {
    pub m: usize,
    pub replicates: usize,
    pub alpha: f64,
    pub grid: FrequencyGrid,
    pub seed: u64,
}

impl Stage1Config {
    pub fn validate(&self, n: usize) -> Result<()> {
        if self.m == 0 || self.m >= n {
            return Err(invalid(
                "m",
                format!("block size {} must satisfy 1 <= m < n = {n}", self.m),
            ));
        }
        check_level("alpha", self.alpha)?;
        check_replicates("replicates", self.replicates)?;
        if self.grid.is_empty() {
            return Err(invalid("grid", "no candidate frequencies"));
        }
        Ok(())
    }

    /// Half-width `ln(m) / (4 sqrt(m))` of the neighbourhood removed around
    /// each detected frequency.
    pub fn exclusion_half_width(&self) -> f64 {
        let m = self.m as f64;
        m.ln() / (4.0 * m.sqrt())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    /// The statistic did not exceed its critical value.
    NotSignificant,
    /// The candidate set ran out before a non-rejection.
    Exhausted,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Stage1Iteration {
    /// Smallest maximizer of the progressive periodogram over `W_k`.
    pub omega_hat: f64,
    /// `F(W_k)`.
    pub statistic: f64,
    pub critical_value: f64,
    /// `|W_k|`.
    pub candidates: usize,
    pub accepted: bool,
    /// Closed interval removed after an accepted iteration.
    pub excluded: Option<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Stage1Result {
    /// Every evaluated iteration; only the last one can be non-accepted.
    pub iterations: Vec<Stage1Iteration>,
    pub termination: Termination,
}

impl Stage1Result {
    /// Detected frequencies in detection order.
    pub fn detected(&self) -> Vec<f64> {
        self.iterations
            .iter()
            .filter(|it| it.accepted)
            .map(|it| it.omega_hat)
            .collect()
    }

    pub fn terminated_at(&self) -> usize {
        self.iterations.len()
    }
}

/// Iterative frequency detection over the grid in `cfg`.
pub fn algorithm1(x: &TimeSeries, cfg: &Stage1Config) -> Result<Stage1Result> {
    let n = x.len();
    cfg.validate(n)?;
    let freqs = cfg.grid.freqs();
    let profile = dppt_profile(x, freqs);
    let mut boot = Stage1Bootstrap::new(
        x.values(),
        freqs,
        cfg.m,
        derive_seed(cfg.seed, Domain::Stage1Multipliers),
        cfg.replicates,
    )?;
    let half = cfg.exclusion_half_width();
    let mut active = vec![true; freqs.len()];
    let mut remaining = freqs.len();
    let mut iterations = Vec::new();

    for _ in 0..STAGE1_MAX_ITERATIONS {
        let Some(k) = profile.argmax(Some(&active)) else {
            return Ok(Stage1Result {
                iterations,
                termination: Termination::Exhausted,
            });
        };
        let omega_hat = freqs[k];
        let statistic = profile.values[k];
        let critical_value = empirical_quantile(&boot.draws(), 1.0 - cfg.alpha)?;
        let accepted = statistic > critical_value;
        let mut record = Stage1Iteration {
            omega_hat,
            statistic,
            critical_value,
            candidates: remaining,
            accepted,
            excluded: None,
        };
        if !accepted {
            iterations.push(record);
            return Ok(Stage1Result {
                iterations,
                termination: Termination::NotSignificant,
            });
        }
        let (lo, hi) = (omega_hat - half, omega_hat + half);
        let start = freqs.partition_point(|&w| w < lo);
        let end = freqs.partition_point(|&w| w <= hi);
        let changed: Vec<usize> = (start..end).filter(|&i| active[i]).collect();
        for &i in &changed {
            active[i] = false;
        }
        remaining -= changed.len();
        boot.refresh(&active, &changed);
        record.excluded = Some((lo, hi));
        iterations.push(record);
    }
    Err(Error::IterationCap {
        stage: "frequency detection",
        cap: STAGE1_MAX_ITERATIONS,
    })
}

#[derive(Debug, Clone)]
pub struct Stage2Config {
    pub m_tilde: usize,
    pub m_prime: usize,
    pub replicates: usize,
    pub beta: f64,
    pub seed: u64,
}

impl Stage2Config {
    pub fn validate(&self, n: usize) -> Result<()> {
        if self.m_prime == 0 || self.m_prime >= self.m_tilde {
            return Err(invalid(
                "m_prime",
                format!(
                    "need 1 <= m' < m~, got m' = {}, m~ = {}",
                    self.m_prime, self.m_tilde
                ),
            ));
        }
        if 4 * self.m_tilde >= n {
            return Err(invalid(
                "m_tilde",
                format!("need m~ < n/4, got m~ = {} with n = {n}", self.m_tilde),
            ));
        }
        check_level("beta", self.beta)?;
        check_replicates("replicates", self.replicates)?;
        Ok(())
    }

    /// Initial anchor range `m~+m'+1 ..= n-m~-m'-2`, the widest range on
    /// which every window of the statistic and the bootstrap stays in
    /// `1..=n`.
    pub fn anchor_range(&self, n: usize) -> Option<(usize, usize)> {
        let lo = self.m_tilde + self.m_prime + 1;
        let hi = n.checked_sub(self.m_tilde + self.m_prime + 2)?;
        (lo <= hi).then_some((lo, hi))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Stage2Iteration {
    /// Smallest maximizer of `T(i)` over `B_k`.
    pub b_hat: usize,
    /// `T(B_k)`.
    pub statistic: f64,
    pub critical_value: f64,
    /// `|B_k|`.
    pub candidates: usize,
    pub accepted: bool,
    /// Closed index interval removed after an accepted iteration.
    pub excluded: Option<(usize, usize)>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Stage2Result {
    pub omega: f64,
    pub iterations: Vec<Stage2Iteration>,
    pub termination: Termination,
}

impl Stage2Result {
    /// Detected change points in detection order.
    pub fn change_points(&self) -> Vec<usize> {
        self.iterations
            .iter()
            .filter(|it| it.accepted)
            .map(|it| it.b_hat)
            .collect()
    }

    pub fn terminated_at(&self) -> usize {
        self.iterations.len()
    }
}

/// Iterative change-point detection for the oscillation at `omega_hat`.
pub fn algorithm2(x: &TimeSeries, omega_hat: f64, cfg: &Stage2Config) -> Result<Stage2Result> {
    let n = x.len();
    cfg.validate(n)?;
    if !(omega_hat > 0.0 && omega_hat < std::f64::consts::PI) {
        return Err(invalid("omega_hat", format!("{omega_hat} outside (0, pi)")));
    }
    let Some((lo, hi)) = cfg.anchor_range(n) else {
        return Err(invalid(
            "m_tilde",
            format!("no admissible anchors for n = {n}"),
        ));
    };
    let t = local_contrast_range(x, omega_hat, cfg.m_tilde, lo, hi)?;
    let d = local_contrast_blocks(
        x,
        omega_hat,
        cfg.m_prime,
        cfg.m_prime + 1,
        n - cfg.m_prime - 1,
    )?;
    let key = derive_seed(cfg.seed, Domain::Stage2Multipliers);
    // Indexed by absolute sample position and fixed across iterations.
    let g: Vec<Vec<f64>> = (0..cfg.replicates)
        .into_par_iter()
        .map(|l| multipliers(key, l as u64, n))
        .collect();

    let mut anchors: Vec<usize> = (lo..=hi).collect();
    let mut iterations = Vec::new();
    for _ in 0..STAGE2_MAX_ITERATIONS {
        let Some(&first) = anchors.first() else {
            return Ok(Stage2Result {
                omega: omega_hat,
                iterations,
                termination: Termination::Exhausted,
            });
        };
        let mut b_hat = first;
        for &i in &anchors[1..] {
            if t.at(i) > t.at(b_hat) {
                b_hat = i;
            }
        }
        let statistic = t.at(b_hat);
        let draws = g
            .par_iter()
            .map(|gl| stage2_bootstrap_stat(&d, cfg.m_tilde, &anchors, gl))
            .collect::<Result<Vec<f64>>>()?;
        let critical_value = empirical_quantile(&draws, 1.0 - cfg.beta)?;
        let accepted = statistic > critical_value;
        let mut record = Stage2Iteration {
            b_hat,
            statistic,
            critical_value,
            candidates: anchors.len(),
            accepted,
            excluded: None,
        };
        if !accepted {
            iterations.push(record);
            return Ok(Stage2Result {
                omega: omega_hat,
                iterations,
                termination: Termination::NotSignificant,
            });
        }
        let cut = (b_hat.saturating_sub(cfg.m_tilde), b_hat + cfg.m_tilde);
        anchors.retain(|&i| i < cut.0 || i > cut.1);
        record.excluded = Some(cut);
        iterations.push(record);
    }
    Err(Error::IterationCap {
        stage: "change-point detection",
        cap: STAGE2_MAX_ITERATIONS,
    })
}

/// A bandwidth given explicitly or chosen by minimum volatility.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Bandwidth {
    Auto,
    Fixed(usize),
}

#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub grid: FrequencyGrid,
    pub m: Bandwidth,
    pub m_tilde: Bandwidth,
    pub m_prime: Bandwidth,
    pub replicates1: usize,
    pub replicates2: usize,
    pub alpha: f64,
    pub beta: f64,
    pub seed: u64,
    pub tuning: TuningOptions,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyChangePoints {
    pub omega: f64,
    pub m_tilde: usize,
    pub m_prime: usize,
    pub m_tilde_curve: Option<MvCurve>,
    pub m_prime_curve: Option<MvCurve>,
    pub result: Stage2Result,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineResult {
    pub m: usize,
    pub m_curve: Option<MvCurve>,
    pub stage1: Stage1Result,
    /// One entry per detected frequency, in detection order.
    pub stage2: Vec<FrequencyChangePoints>,
}

/// Stage 1, then stage 2 at every detected frequency. Automatic bandwidths
/// are tuned before the stage that uses them.
pub fn run_pipeline(x: &TimeSeries, cfg: &PipelineConfig) -> Result<PipelineResult> {
    let n = x.len();
    let (m, m_curve) = match cfg.m {
        Bandwidth::Fixed(m) => (m, None),
        Bandwidth::Auto => {
            let curve = tuning::mv_select_stage1_m(
                x,
                &cfg.grid.subsample(cfg.tuning.freq_points),
                &tuning::default_m_candidates(n),
                cfg.tuning.k_stride(n),
            )?;
            (curve.chosen, Some(curve))
        }
    };
    let stage1 = algorithm1(
        x,
        &Stage1Config {
            m,
            replicates: cfg.replicates1,
            alpha: cfg.alpha,
            grid: cfg.grid.clone(),
            seed: cfg.seed,
        },
    )?;

    let mut stage2 = Vec::new();
    for omega in stage1.detected() {
        let (m_tilde, m_tilde_curve) = match cfg.m_tilde {
            Bandwidth::Fixed(v) => (v, None),
            Bandwidth::Auto => {
                let curve =
                    tuning::mv_select_m_tilde(x, omega, &tuning::default_m_tilde_candidates(n))?;
                (curve.chosen, Some(curve))
            }
        };
        let (m_prime, m_prime_curve) = match cfg.m_prime {
            Bandwidth::Fixed(v) => (v, None),
            Bandwidth::Auto => {
                let curve = tuning::mv_select_m_prime(
                    x,
                    omega,
                    m_tilde,
                    &tuning::default_m_prime_candidates(m_tilde),
                )?;
                (curve.chosen, Some(curve))
            }
        };
        let result = algorithm2(
            x,
            omega,
            &Stage2Config {
                m_tilde,
                m_prime,
                replicates: cfg.replicates2,
                beta: cfg.beta,
                seed: cfg.seed,
            },
        )?;
        stage2.push(FrequencyChangePoints {
            omega,
            m_tilde,
            m_prime,
            m_tilde_curve,
            m_prime_curve,
            result,
        });
    }
    Ok(PipelineResult {
        m,
        m_curve,
        stage1,
        stage2,
    })
}

fn check_level(name: &'static str, level: f64) -> Result<()> {
    if level > 0.0 && level < 1.0 {
        Ok(())
    } else {
        Err(invalid(name, format!("{level} outside (0, 1)")))
    }
}

fn check_replicates(name: &'static str, k: usize) -> Result<()> {
    if k >= MIN_REPLICATES {
        Ok(())
    } else {
        Err(invalid(
            name,
            format!("{k} replicates, need at least {MIN_REPLICATES}"),
        ))
    }
}
