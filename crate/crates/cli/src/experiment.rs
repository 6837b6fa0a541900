//! Monte-Carlo experiment runner.
//!
//! Repetition `r` simulates with seed `seed + r` and runs the detector with
//! the same seed (noise and multipliers use separate key domains). Reps run
//! in parallel and are reported in rep order.

use std::f64::consts::PI;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;
use spindle_core::signal::simulate_series;
use spindle_core::{
    algorithm1, algorithm2, build_grid, run_pipeline, tuning, Bandwidth, MeanSpec, NoiseKind,
    NoiseModel, PipelineConfig, Stage1Config, Stage2Config, TimeSeries, TuningOptions,
};

use crate::config::{power_mean, stage2_null_mean};
use crate::csv_io::{csv_writer, flush, write_row};
use crate::error::{input, CliError, Result};

/// Default refusal threshold in block-multiply units.
pub const DEFAULT_BUDGET: f64 = 1e9;

/// Measured single-thread cost of one multiplier-weighted pass over one
/// block sum, used to turn units into seconds.
pub const SECONDS_PER_BLOCK: f64 = 0.7e-9;

/// Largest change-point error counted as accurate.
pub const CHANGE_POINT_TOLERANCE: usize = 30;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Stage1Null,
    Stage2Null,
    AccuracyTwospindle,
    AccuracyOnespindle,
    PowerCurve,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Stage1Null => "stage1_null",
            ExperimentKind::Stage2Null => "stage2_null",
            ExperimentKind::AccuracyTwospindle => "accuracy_twospindle",
            ExperimentKind::AccuracyOnespindle => "accuracy_onespindle",
            ExperimentKind::PowerCurve => "power_curve",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        [
            ExperimentKind::Stage1Null,
            ExperimentKind::Stage2Null,
            ExperimentKind::AccuracyTwospindle,
            ExperimentKind::AccuracyOnespindle,
            ExperimentKind::PowerCurve,
        ]
        .into_iter()
        .find(|k| k.name() == name)
    }

    fn uses_stage1(self) -> bool {
        self != ExperimentKind::Stage2Null
    }

    fn uses_stage2(self) -> bool {
        matches!(
            self,
            ExperimentKind::Stage2Null
                | ExperimentKind::AccuracyTwospindle
                | ExperimentKind::AccuracyOnespindle
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub kind: ExperimentKind,
    pub model: NoiseKind,
    pub n: usize,
    pub reps: usize,
    /// Each level is used as both `alpha` and `beta`.
    pub levels: Vec<f64>,
    /// Signal amplitudes of the power curve; ignored by other experiments.
    pub amplitudes: Vec<f64>,
    pub replicates: usize,
    pub replicates2: usize,
    pub grid_factor: f64,
    pub delta0: f64,
    pub m: Bandwidth,
    pub m_tilde: Bandwidth,
    pub m_prime: Bandwidth,
    pub seed: u64,
}

impl ExperimentSpec {
    fn base(kind: ExperimentKind, n: usize, reps: usize) -> Self {
        Self {
            kind,
            model: NoiseKind::M1,
            n,
            reps,
            levels: vec![0.05],
            amplitudes: Vec::new(),
            replicates: 300,
            replicates2: 300,
            grid_factor: 0.05,
            delta0: 0.1,
            m: Bandwidth::Auto,
            m_tilde: Bandwidth::Auto,
            m_prime: Bandwidth::Auto,
            seed: 20_240_601,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.reps < 50 {
            return Err(input(format!(
                "reps = {} but experiments need at least 50",
                self.reps
            )));
        }
        if self.levels.is_empty() || self.levels.iter().any(|&l| !(l > 0.0 && l < 1.0)) {
            return Err(input("levels must be non-empty and inside (0, 1)"));
        }
        if self.kind == ExperimentKind::PowerCurve && self.amplitudes.is_empty() {
            return Err(input("power_curve needs at least one amplitude"));
        }
        if NoiseModel::by_kind(self.model).is_none() {
            return Err(input("experiments use the built-in models M1..M4"));
        }
        build_grid(self.n, self.delta0, self.grid_factor)?;
        Ok(())
    }

    fn cells(&self) -> Vec<(f64, Option<f64>)> {
        let amps: Vec<Option<f64>> = if self.kind == ExperimentKind::PowerCurve {
            self.amplitudes.iter().copied().map(Some).collect()
        } else {
            vec![None]
        };
        self.levels
            .iter()
            .flat_map(|&l| amps.iter().map(move |&a| (l, a)))
            .collect()
    }

    /// Stage-2 iterations assumed per detected frequency by the estimate.
    const STAGE2_ITERATIONS: f64 = 3.0;

    /// Estimated block-multiply units. One unit is one bootstrap replicate
    /// swept over every block at one frequency: stage 1 costs `p K` units,
    /// each stage-2 iteration `K0` units per frequency.
    pub fn estimated_units(&self) -> f64 {
        let mut per_rep = 0.0;
        if self.kind.uses_stage1() {
            let p =
                build_grid(self.n, self.delta0, self.grid_factor).map_or(0.0, |g| g.len() as f64);
            per_rep += p * self.replicates as f64;
        }
        if self.kind.uses_stage2() {
            let freqs = self.truth(None).components.len() as f64;
            per_rep += freqs * Self::STAGE2_ITERATIONS * self.replicates2 as f64;
        }
        per_rep * (self.reps * self.cells().len()) as f64
    }

    /// Single-threaded wall-clock estimate; a unit touches about `n` blocks.
    pub fn estimated_seconds(&self) -> f64 {
        self.estimated_units() * self.n as f64 * SECONDS_PER_BLOCK
    }

    pub fn check_budget(&self, budget: f64) -> Result<()> {
        let estimate = self.estimated_units();
        if estimate > budget {
            return Err(CliError::Budget {
                estimate,
                budget,
                seconds: self.estimated_seconds(),
            });
        }
        Ok(())
    }

    fn truth(&self, amplitude: Option<f64>) -> MeanSpec {
        match self.kind {
            ExperimentKind::Stage1Null => MeanSpec::linear_trend(),
            ExperimentKind::Stage2Null => stage2_null_mean(),
            ExperimentKind::AccuracyTwospindle => MeanSpec::two_spindle(self.n),
            ExperimentKind::AccuracyOnespindle => MeanSpec::one_spindle(self.n),
            ExperimentKind::PowerCurve => power_mean(amplitude.unwrap_or(0.0)),
        }
    }

    /// Frequency tolerance `5 n^{-3/2} ln n` used by the accuracy summary.
    pub fn frequency_tolerance(&self) -> f64 {
        let n = self.n as f64;
        5.0 * n.powf(-1.5) * n.ln()
    }
}

/// Preset names, `desk/<experiment>` and `paper/<experiment>`.
pub fn preset_names() -> Vec<String> {
    ["desk", "paper"]
        .iter()
        .flat_map(|scale| {
            [
                "stage1_null",
                "stage2_null",
                "accuracy_twospindle",
                "accuracy_onespindle",
                "power_curve",
            ]
            .iter()
            .map(move |e| format!("{scale}/{e}"))
        })
        .collect()
}

/// Desk presets fit a single workstation; paper presets use the full grid,
/// `K = K0 = 1000` and 1000 reps and take days.
pub fn preset(name: &str) -> Option<ExperimentSpec> {
    let (scale, exp) = name.split_once('/')?;
    let kind = ExperimentKind::parse(exp)?;
    let mut spec = match scale {
        "desk" => match kind {
            ExperimentKind::Stage1Null | ExperimentKind::Stage2Null => {
                ExperimentSpec::base(kind, 500, 200)
            }
            ExperimentKind::AccuracyTwospindle | ExperimentKind::AccuracyOnespindle => {
                ExperimentSpec::base(kind, 1000, 50)
            }
            ExperimentKind::PowerCurve => ExperimentSpec::base(kind, 500, 100),
        },
        "paper" => {
            let n = match kind {
                ExperimentKind::Stage1Null
                | ExperimentKind::Stage2Null
                | ExperimentKind::PowerCurve => 1000,
                _ => 2000,
            };
            let mut s = ExperimentSpec::base(kind, n, 1000);
            s.replicates = 1000;
            s.replicates2 = 1000;
            s.grid_factor = 1.0;
            s.levels = vec![0.05, 0.1];
            s
        }
        _ => return None,
    };
    if kind == ExperimentKind::PowerCurve {
        spec.amplitudes = if scale == "desk" {
            vec![0.0, 0.2, 0.5]
        } else {
            (0..=10).map(|i| i as f64 * 0.05).collect()
        };
    }
    Some(spec)
}

/// Outcome of one repetition at one (level, amplitude) cell.
#[derive(Debug, Clone, PartialEq)]
pub struct RepRecord {
    pub rep: usize,
    pub seed: u64,
    pub level: f64,
    pub amplitude: Option<f64>,
    pub m: Option<usize>,
    /// First-iteration statistic and critical value of the tested stage.
    pub statistic: f64,
    pub critical_value: f64,
    pub rejected: bool,
    pub detected: Vec<f64>,
    /// Per true component: the matched estimate, if any.
    pub matched: Vec<Option<ComponentOutcome>>,
    pub elapsed_ms: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComponentOutcome {
    pub omega_hat: f64,
    pub error: f64,
    pub m_tilde: usize,
    pub m_prime: usize,
    pub change_points: Vec<usize>,
}

impl ComponentOutcome {
    /// Sorted estimates paired with sorted truths; `None` on count mismatch.
    pub fn max_change_point_error(&self, truth: &[usize]) -> Option<usize> {
        if self.change_points.len() != truth.len() {
            return None;
        }
        let mut est = self.change_points.clone();
        est.sort_unstable();
        Some(
            est.iter()
                .zip(truth)
                .map(|(a, b)| a.abs_diff(*b))
                .max()
                .unwrap_or(0),
        )
    }
}

fn noise(spec: &ExperimentSpec) -> NoiseModel {
    NoiseModel::by_kind(spec.model).expect("validated built-in model")
}

fn resolve(
    bw: Bandwidth,
    tune: impl FnOnce() -> spindle_core::Result<usize>,
) -> spindle_core::Result<usize> {
    match bw {
        Bandwidth::Fixed(v) => Ok(v),
        Bandwidth::Auto => tune(),
    }
}

fn stage1_m(
    spec: &ExperimentSpec,
    x: &TimeSeries,
    grid: &spindle_core::FrequencyGrid,
) -> spindle_core::Result<usize> {
    let opts = TuningOptions::default();
    resolve(spec.m, || {
        tuning::mv_select_stage1_m(
            x,
            &grid.subsample(opts.freq_points),
            &tuning::default_m_candidates(x.len()),
            opts.k_stride(x.len()),
        )
        .map(|c| c.chosen)
    })
}

/// Pairs each true frequency with the nearest detection, keeping a detection
/// only for the truth it is closest to.
fn match_components(truth: &[f64], detected: &[f64]) -> Vec<Option<usize>> {
    let nearest_truth = |w: f64| {
        (0..truth.len())
            .min_by(|&a, &b| (truth[a] - w).abs().total_cmp(&(truth[b] - w).abs()))
            .unwrap()
    };
    truth
        .iter()
        .enumerate()
        .map(|(c, &w)| {
            (0..detected.len())
                .filter(|&d| nearest_truth(detected[d]) == c)
                .min_by(|&a, &b| (detected[a] - w).abs().total_cmp(&(detected[b] - w).abs()))
        })
        .collect()
}

fn run_rep(
    spec: &ExperimentSpec,
    rep: usize,
    level: f64,
    amplitude: Option<f64>,
) -> spindle_core::Result<RepRecord> {
    let start = Instant::now();
    let seed = spec.seed.wrapping_add(rep as u64);
    let mean = spec.truth(amplitude);
    let x = simulate_series(&mean, &noise(spec), spec.n, seed)?;
    let grid = build_grid(spec.n, spec.delta0, spec.grid_factor)?;
    let mut record = RepRecord {
        rep,
        seed,
        level,
        amplitude,
        m: None,
        statistic: 0.0,
        critical_value: 0.0,
        rejected: false,
        detected: Vec::new(),
        matched: Vec::new(),
        elapsed_ms: 0.0,
    };
    match spec.kind {
        ExperimentKind::Stage1Null | ExperimentKind::PowerCurve => {
            let m = stage1_m(spec, &x, &grid)?;
            let r = algorithm1(
                &x,
                &Stage1Config {
                    m,
                    replicates: spec.replicates,
                    alpha: level,
                    grid,
                    seed,
                },
            )?;
            let first = &r.iterations[0];
            record.m = Some(m);
            record.statistic = first.statistic;
            record.critical_value = first.critical_value;
            record.detected = r.detected();
            record.rejected = !record.detected.is_empty();
        }
        ExperimentKind::Stage2Null => {
            let omega = PI / 15.0;
            let m_tilde = resolve(spec.m_tilde, || {
                tuning::mv_select_m_tilde(&x, omega, &tuning::default_m_tilde_candidates(spec.n))
                    .map(|c| c.chosen)
            })?;
            let m_prime = resolve(spec.m_prime, || {
                tuning::mv_select_m_prime(
                    &x,
                    omega,
                    m_tilde,
                    &tuning::default_m_prime_candidates(m_tilde),
                )
                .map(|c| c.chosen)
            })?;
            let r = algorithm2(
                &x,
                omega,
                &Stage2Config {
                    m_tilde,
                    m_prime,
                    replicates: spec.replicates2,
                    beta: level,
                    seed,
                },
            )?;
            let first = &r.iterations[0];
            record.statistic = first.statistic;
            record.critical_value = first.critical_value;
            record.rejected = first.accepted;
            record.matched = vec![Some(ComponentOutcome {
                omega_hat: omega,
                error: 0.0,
                m_tilde,
                m_prime,
                change_points: r.change_points(),
            })];
        }
        ExperimentKind::AccuracyTwospindle | ExperimentKind::AccuracyOnespindle => {
            let m = stage1_m(spec, &x, &grid)?;
            let result = run_pipeline(
                &x,
                &PipelineConfig {
                    grid,
                    m: Bandwidth::Fixed(m),
                    m_tilde: spec.m_tilde,
                    m_prime: spec.m_prime,
                    replicates1: spec.replicates,
                    replicates2: spec.replicates2,
                    alpha: level,
                    beta: level,
                    seed,
                    tuning: TuningOptions::default(),
                },
            )?;
            let first = &result.stage1.iterations[0];
            record.m = Some(m);
            record.statistic = first.statistic;
            record.critical_value = first.critical_value;
            record.detected = result.stage1.detected();
            record.rejected = !record.detected.is_empty();
            let truth = mean.frequencies();
            record.matched = match_components(&truth, &record.detected)
                .into_iter()
                .zip(&truth)
                .map(|(d, &w)| {
                    d.map(|d| {
                        let s = &result.stage2[d];
                        ComponentOutcome {
                            omega_hat: s.omega,
                            error: (s.omega - w).abs(),
                            m_tilde: s.m_tilde,
                            m_prime: s.m_prime,
                            change_points: s.result.change_points(),
                        }
                    })
                })
                .collect();
        }
    }
    record.elapsed_ms = start.elapsed().as_secs_f64() * 1e3;
    Ok(record)
}

/// Rate with its binomial standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Rate {
    pub rate: f64,
    pub se: f64,
    pub count: usize,
    pub total: usize,
}

impl Rate {
    pub fn new(count: usize, total: usize) -> Self {
        if total == 0 {
            return Self {
                rate: 0.0,
                se: 0.0,
                count,
                total,
            };
        }
        let p = count as f64 / total as f64;
        Self {
            rate: p,
            se: (p * (1.0 - p) / total as f64).sqrt(),
            count,
            total,
        }
    }
}

/// Mean of squared errors with the standard error of that mean.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Mse {
    pub mse: f64,
    pub se: f64,
    pub count: usize,
}

impl Mse {
    fn new(errors: &[f64]) -> Option<Self> {
        if errors.is_empty() {
            return None;
        }
        let sq: Vec<f64> = errors.iter().map(|e| e * e).collect();
        let k = sq.len() as f64;
        let mean = sq.iter().sum::<f64>() / k;
        let var = if sq.len() > 1 {
            sq.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (k - 1.0)
        } else {
            0.0
        };
        Some(Self {
            mse: mean,
            se: (var / k).sqrt(),
            count: sq.len(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComponentSummary {
    pub omega: f64,
    pub true_change_points: Vec<usize>,
    /// Reps in which this frequency was detected.
    pub detected: Rate,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mse_omega: Option<Mse>,
    /// Among detecting reps: exactly the true number of change points.
    pub change_point_count: Rate,
    /// Per true change point, over reps with the correct count.
    pub mse_change_points: Vec<Mse>,
    /// Among reps with the correct count: every error within tolerance.
    pub change_points_within: Rate,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellSummary {
    pub level: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub amplitude: Option<f64>,
    pub rejection: Rate,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub frequency_count: Option<Rate>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub frequencies_within: Option<Rate>,
    pub components: Vec<ComponentSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub experiment: &'static str,
    pub model: String,
    pub n: usize,
    pub reps: usize,
    pub replicates: usize,
    pub replicates2: usize,
    pub grid_factor: f64,
    pub delta0: f64,
    pub seed: u64,
    pub frequency_tolerance: f64,
    pub change_point_tolerance: usize,
    pub cells: Vec<CellSummary>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutput {
    pub records: Vec<RepRecord>,
    pub summary: Summary,
}

pub fn run(spec: &ExperimentSpec) -> Result<ExperimentOutput> {
    spec.validate()?;
    let jobs: Vec<(usize, f64, Option<f64>)> = spec
        .cells()
        .into_iter()
        .flat_map(|(l, a)| (0..spec.reps).map(move |r| (r, l, a)))
        .collect();
    let records = jobs
        .par_iter()
        .map(|&(rep, level, amp)| run_rep(spec, rep, level, amp))
        .collect::<spindle_core::Result<Vec<_>>>()?;
    let summary = summarize(spec, &records);
    Ok(ExperimentOutput { records, summary })
}

pub fn summarize(spec: &ExperimentSpec, records: &[RepRecord]) -> Summary {
    let cells = spec
        .cells()
        .into_iter()
        .map(|(level, amplitude)| {
            let rows: Vec<&RepRecord> = records
                .iter()
                .filter(|r| r.level == level && r.amplitude == amplitude)
                .collect();
            summarize_cell(spec, level, amplitude, &rows)
        })
        .collect();
    Summary {
        experiment: spec.kind.name(),
        model: spec.model.to_string(),
        n: spec.n,
        reps: spec.reps,
        replicates: spec.replicates,
        replicates2: spec.replicates2,
        grid_factor: spec.grid_factor,
        delta0: spec.delta0,
        seed: spec.seed,
        frequency_tolerance: spec.frequency_tolerance(),
        change_point_tolerance: CHANGE_POINT_TOLERANCE,
        cells,
    }
}

fn summarize_cell(
    spec: &ExperimentSpec,
    level: f64,
    amplitude: Option<f64>,
    rows: &[&RepRecord],
) -> CellSummary {
    let total = rows.len();
    let rejection = Rate::new(rows.iter().filter(|r| r.rejected).count(), total);
    let accuracy = matches!(
        spec.kind,
        ExperimentKind::AccuracyTwospindle | ExperimentKind::AccuracyOnespindle
    );
    let truth = spec.truth(amplitude);
    let mut cell = CellSummary {
        level,
        amplitude,
        rejection,
        frequency_count: None,
        frequencies_within: None,
        components: Vec::new(),
    };
    if accuracy {
        let k = truth.components.len();
        let exact: Vec<&&RepRecord> = rows.iter().filter(|r| r.detected.len() == k).collect();
        let tol = spec.frequency_tolerance();
        let within = exact
            .iter()
            .filter(|r| {
                r.matched
                    .iter()
                    .all(|m| m.as_ref().is_some_and(|m| m.error <= tol))
            })
            .count();
        cell.frequency_count = Some(Rate::new(exact.len(), total));
        cell.frequencies_within = Some(Rate::new(within, exact.len()));
    }
    if accuracy || spec.kind == ExperimentKind::Stage2Null {
        for (c, comp) in truth.components.iter().enumerate() {
            let truth_cps = comp.change_points();
            let outcomes: Vec<&ComponentOutcome> = rows
                .iter()
                .filter_map(|r| r.matched.get(c).and_then(Option::as_ref))
                .collect();
            let errors: Vec<f64> = outcomes.iter().map(|o| o.error).collect();
            let right_count: Vec<&&ComponentOutcome> = outcomes
                .iter()
                .filter(|o| o.change_points.len() == truth_cps.len())
                .collect();
            let within = right_count
                .iter()
                .filter(|o| {
                    o.max_change_point_error(&truth_cps)
                        .is_some_and(|e| e <= CHANGE_POINT_TOLERANCE)
                })
                .count();
            let mse_change_points = (0..truth_cps.len())
                .filter_map(|r| {
                    let errs: Vec<f64> = right_count
                        .iter()
                        .map(|o| {
                            let mut est = o.change_points.clone();
                            est.sort_unstable();
                            est[r] as f64 - truth_cps[r] as f64
                        })
                        .collect();
                    Mse::new(&errs)
                })
                .collect();
            cell.components.push(ComponentSummary {
                omega: comp.omega,
                true_change_points: truth_cps,
                detected: Rate::new(outcomes.len(), total),
                mse_omega: if accuracy { Mse::new(&errors) } else { None },
                change_point_count: Rate::new(right_count.len(), outcomes.len()),
                mse_change_points,
                change_points_within: Rate::new(within, right_count.len()),
            });
        }
    }
    cell
}

fn join<T: ToString>(items: impl IntoIterator<Item = T>, sep: &str) -> String {
    items
        .into_iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(sep)
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

/// Per-rep table. Lists within a cell are `;`-separated; per-component
/// fields are `|`-separated in truth order, empty when unmatched.
pub fn write_table<W: std::io::Write>(w: W, records: &[RepRecord]) -> Result<()> {
    let mut out = csv_writer(w);
    write_row(
        &mut out,
        [
            "rep",
            "seed",
            "level",
            "amplitude",
            "m",
            "statistic",
            "crit",
            "rejected",
            "omega_hat",
            "omega_error",
            "m_tilde",
            "m_prime",
            "change_points",
        ],
    )?;
    for r in records {
        let per = |f: &dyn Fn(&ComponentOutcome) -> String| {
            join(
                r.matched
                    .iter()
                    .map(|m| m.as_ref().map(f).unwrap_or_default()),
                "|",
            )
        };
        write_row(
            &mut out,
            [
                r.rep.to_string(),
                r.seed.to_string(),
                r.level.to_string(),
                opt(r.amplitude),
                opt(r.m),
                r.statistic.to_string(),
                r.critical_value.to_string(),
                r.rejected.to_string(),
                join(&r.detected, ";"),
                per(&|o| o.error.to_string()),
                per(&|o| o.m_tilde.to_string()),
                per(&|o| o.m_prime.to_string()),
                per(&|o| join(&o.change_points, ";")),
            ],
        )?;
    }
    flush(out)
}

/// Wall-clock time per rep; kept apart from the deterministic outputs.
pub fn write_timings<W: std::io::Write>(w: W, records: &[RepRecord]) -> Result<()> {
    let mut out = csv_writer(w);
    write_row(&mut out, ["rep", "level", "amplitude", "elapsed_ms"])?;
    for r in records {
        write_row(
            &mut out,
            [
                r.rep.to_string(),
                r.level.to_string(),
                opt(r.amplitude),
                format!("{:.3}", r.elapsed_ms),
            ],
        )?;
    }
    flush(out)
}
