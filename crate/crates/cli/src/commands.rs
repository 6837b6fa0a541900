//! Argument parsing and command dispatch.
//!
//! Precedence for run settings: built-in defaults, then `--config` file
//! entries, then `--set key=value` pairs, then dedicated flags.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use spindle_core::signal::simulate_series;
use spindle_core::spectral::{cusum_field, dppt_profile, local_contrast_range};
use spindle_core::{
    run_pipeline, tuning, Bandwidth, MvCurve, PipelineConfig, PipelineResult, TimeSeries,
};

use crate::config::{parse_bandwidth, parse_noise_kind, read_entries, Entry, RunConfig, SimConfig};
use crate::csv_io::{csv_writer, flush, read_series, write_row, write_series};
use crate::error::{input, CliError, Result};
use crate::experiment::{self, ExperimentSpec, DEFAULT_BUDGET};
use crate::report::DetectReport;

#[derive(Debug, Parser)]
#[command(
    name = "spindle",
    version,
    about = "Oscillation frequency and change-point detection"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a series from a mean and noise description.
    Simulate(SimulateArgs),
    /// Detect frequencies and their change points; writes JSON.
    Detect(DetectArgs),
    /// Progressive periodogram per grid frequency, or `T(i)` given `--omega`.
    Profile(ProfileArgs),
    /// CUSUM magnitude matrix over time and frequency.
    Heatmap(HeatmapArgs),
    /// Minimum-volatility curve for one bandwidth.
    Tune(TuneArgs),
    /// Monte-Carlo experiment from a named preset.
    Experiment(ExperimentArgs),
}

/// Settings shared by every command that analyses a series.
#[derive(Debug, Args, Default)]
pub struct RunFlags {
    /// `key = value` file applied before the flags below.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Extra `key=value` setting; repeatable, applied after `--config`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub beta: Option<f64>,
    /// Stage-1 block size or `auto`.
    #[arg(long)]
    pub m: Option<String>,
    /// Local window or `auto`.
    #[arg(long)]
    pub m_tilde: Option<String>,
    /// Stage-2 block size or `auto`.
    #[arg(long)]
    pub m_prime: Option<String>,
    /// Stage-1 bootstrap replicates.
    #[arg(long)]
    pub replicates: Option<usize>,
    /// Stage-2 bootstrap replicates.
    #[arg(long)]
    pub replicates2: Option<usize>,
    #[arg(long)]
    pub delta0: Option<f64>,
    #[arg(long)]
    pub grid_factor: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Also report frequencies in Hz at this sampling rate.
    #[arg(long)]
    pub sampling_rate_hz: Option<f64>,
}

impl RunFlags {
    pub fn resolve(&self) -> Result<RunConfig> {
        let mut cfg = RunConfig::default();
        if let Some(path) = &self.config {
            cfg.apply(&read_entries(path)?)?;
        }
        cfg.apply(&set_entries(&self.set)?)?;
        let flags: [(&str, Option<String>); 11] = [
            ("alpha", self.alpha.map(|v| v.to_string())),
            ("beta", self.beta.map(|v| v.to_string())),
            ("m", self.m.clone()),
            ("m_tilde", self.m_tilde.clone()),
            ("m_prime", self.m_prime.clone()),
            ("replicates", self.replicates.map(|v| v.to_string())),
            ("replicates2", self.replicates2.map(|v| v.to_string())),
            ("delta0", self.delta0.map(|v| v.to_string())),
            ("grid_factor", self.grid_factor.map(|v| v.to_string())),
            ("seed", self.seed.map(|v| v.to_string())),
            (
                "sampling_rate_hz",
                self.sampling_rate_hz.map(|v| v.to_string()),
            ),
        ];
        for (key, value) in flags {
            if let Some(v) = value {
                cfg.set(key, &v)
                    .map_err(|e| input(format!("--{}: {e}", key.replace('_', "-"))))?;
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn set_entries(pairs: &[String]) -> Result<Vec<Entry>> {
    pairs
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let (k, v) = p
                .split_once('=')
                .ok_or_else(|| input(format!("--set {p:?}: expected KEY=VALUE")))?;
            Ok(Entry {
                line: i + 1,
                key: k.trim().to_string(),
                value: v.trim().to_string(),
            })
        })
        .collect()
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// `key = value` file describing the series.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Extra `key=value` setting; repeatable, applied after `--config`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Named mean: zero, trend, two_spindle, one_spindle, two_tone, stage2_null.
    #[arg(long)]
    pub mean: Option<String>,
    /// Noise model M1..M4.
    #[arg(long)]
    pub noise: Option<String>,
    /// Output CSV; standard output when omitted.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DetectArgs {
    pub input: PathBuf,
    #[command(flatten)]
    pub run: RunFlags,
    /// Output JSON; standard output when omitted.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ProfileArgs {
    pub input: PathBuf,
    #[command(flatten)]
    pub run: RunFlags,
    /// Emit the local contrast `T(i)` at this frequency instead.
    #[arg(long)]
    pub omega: Option<f64>,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct HeatmapArgs {
    pub input: PathBuf,
    #[arg(long, default_value_t = 0.0)]
    pub freq_min: f64,
    #[arg(long, default_value_t = std::f64::consts::PI)]
    pub freq_max: f64,
    /// Number of equally spaced frequencies, endpoints included.
    #[arg(long, default_value_t = 100)]
    pub freq_count: usize,
    /// Time index step between rows.
    #[arg(long, default_value_t = 1)]
    pub stride: usize,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TuneStage {
    M,
    MTilde,
    MPrime,
}

#[derive(Debug, Args)]
pub struct TuneArgs {
    pub input: PathBuf,
    #[arg(long, value_enum)]
    pub stage: TuneStage,
    /// Frequency for the `m-tilde` and `m-prime` curves.
    #[arg(long)]
    pub omega: Option<f64>,
    /// Comma-separated arithmetic candidates; defaults depend on the stage.
    #[arg(long, value_delimiter = ',')]
    pub candidates: Vec<usize>,
    #[command(flatten)]
    pub run: RunFlags,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    /// Preset such as `desk/stage1_null`; see `--list`.
    #[arg(long, required_unless_present = "list")]
    pub preset: Option<String>,
    /// Print the preset names and their estimated cost.
    #[arg(long)]
    pub list: bool,
    #[arg(long)]
    pub model: Option<String>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub reps: Option<usize>,
    /// Comma-separated significance levels.
    #[arg(long, value_delimiter = ',')]
    pub levels: Vec<f64>,
    /// Comma-separated amplitudes for the power curve.
    #[arg(long, value_delimiter = ',')]
    pub amplitudes: Vec<f64>,
    #[arg(long)]
    pub replicates: Option<usize>,
    #[arg(long)]
    pub replicates2: Option<usize>,
    #[arg(long)]
    pub grid_factor: Option<f64>,
    #[arg(long)]
    pub m: Option<String>,
    #[arg(long)]
    pub m_tilde: Option<String>,
    #[arg(long)]
    pub m_prime: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Refusal threshold in block-multiply units.
    #[arg(long, default_value_t = DEFAULT_BUDGET)]
    pub budget: f64,
    /// Run even when the estimate exceeds the budget.
    #[arg(long)]
    pub force: bool,
    /// Directory receiving table.csv, summary.json and timings.csv.
    #[arg(long, default_value = "experiment-out")]
    pub out_dir: PathBuf,
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate(a) => cmd_simulate(&a),
        Command::Detect(a) => cmd_detect(&a),
        Command::Profile(a) => cmd_profile(&a),
        Command::Heatmap(a) => cmd_heatmap(&a),
        Command::Tune(a) => cmd_tune(&a),
        Command::Experiment(a) => cmd_experiment(&a),
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::io(path, e))
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(create(p)?),
        None => Box::new(std::io::stdout().lock()),
    })
}

fn write_text(path: Option<&Path>, text: &str) -> Result<()> {
    let mut out = output(path)?;
    let target = path.unwrap_or(Path::new("<stdout>"));
    out.write_all(text.as_bytes())
        .and_then(|_| out.flush())
        .map_err(|e| CliError::io(target, e))
}

pub fn simulate_config(a: &SimulateArgs) -> Result<SimConfig> {
    let mut cfg = SimConfig::default();
    if let Some(path) = &a.config {
        cfg.apply(&read_entries(path)?)?;
    }
    cfg.apply(&set_entries(&a.set)?)?;
    if let Some(n) = a.n {
        cfg.n = n;
    }
    if let Some(seed) = a.seed {
        cfg.seed = seed;
    }
    if let Some(mean) = &a.mean {
        cfg.set("mean", mean)?;
    }
    if let Some(noise) = &a.noise {
        cfg.set("noise", noise)?;
    }
    Ok(cfg)
}

pub fn simulate(cfg: &SimConfig) -> Result<TimeSeries> {
    Ok(simulate_series(&cfg.mean()?, &cfg.noise, cfg.n, cfg.seed)?)
}

fn cmd_simulate(a: &SimulateArgs) -> Result<()> {
    let x = simulate(&simulate_config(a)?)?;
    write_series(output(a.output.as_deref())?, &x)
}

pub fn pipeline_config(cfg: &RunConfig, n: usize) -> Result<PipelineConfig> {
    Ok(PipelineConfig {
        grid: cfg.grid(n)?,
        m: cfg.m,
        m_tilde: cfg.m_tilde,
        m_prime: cfg.m_prime,
        replicates1: cfg.replicates,
        replicates2: cfg.replicates2,
        alpha: cfg.alpha,
        beta: cfg.beta,
        seed: cfg.seed,
        tuning: cfg.tuning,
    })
}

/// The full pipeline and its report, as `detect` computes them.
pub fn detect(x: &TimeSeries, cfg: &RunConfig) -> Result<(PipelineResult, DetectReport)> {
    let pc = pipeline_config(cfg, x.len())?;
    let result = run_pipeline(x, &pc)?;
    let report = DetectReport::new(x.len(), cfg, &pc.grid, &result);
    Ok((result, report))
}

fn cmd_detect(a: &DetectArgs) -> Result<()> {
    let cfg = a.run.resolve()?;
    let x = read_series(&a.input)?;
    let (_, report) = detect(&x, &cfg)?;
    write_text(a.output.as_deref(), &report.to_json())
}

fn resolve_m_tilde(x: &TimeSeries, omega: f64, bw: Bandwidth) -> Result<usize> {
    Ok(match bw {
        Bandwidth::Fixed(v) => v,
        Bandwidth::Auto => {
            tuning::mv_select_m_tilde(x, omega, &tuning::default_m_tilde_candidates(x.len()))?
                .chosen
        }
    })
}

fn cmd_profile(a: &ProfileArgs) -> Result<()> {
    let cfg = a.run.resolve()?;
    let x = read_series(&a.input)?;
    let mut out = csv_writer(output(a.output.as_deref())?);
    match a.omega {
        None => {
            let grid = cfg.grid(x.len())?;
            let profile = dppt_profile(&x, grid.freqs());
            let mut header = vec!["omega", "value"];
            if cfg.sampling_rate_hz.is_some() {
                header.insert(1, "hz");
            }
            write_row(&mut out, header)?;
            for (&w, &v) in profile.freqs.iter().zip(&profile.values) {
                let mut row = vec![w.to_string()];
                if let Some(hz) = cfg.to_hz(w) {
                    row.push(hz.to_string());
                }
                row.push(v.to_string());
                write_row(&mut out, row)?;
            }
        }
        Some(omega) => {
            let n = x.len();
            let m_tilde = resolve_m_tilde(&x, omega, cfg.m_tilde)?;
            if 2 * m_tilde + 2 > n {
                return Err(input(format!("m_tilde = {m_tilde} too large for n = {n}")));
            }
            let t = local_contrast_range(&x, omega, m_tilde, m_tilde + 1, n - m_tilde - 1)?;
            write_row(&mut out, ["i", "T"])?;
            for (k, v) in t.values.iter().enumerate() {
                write_row(&mut out, [(t.first + k).to_string(), v.to_string()])?;
            }
        }
    }
    flush(out)
}

fn cmd_heatmap(a: &HeatmapArgs) -> Result<()> {
    if a.freq_count == 0 || a.freq_min.is_nan() || a.freq_max.is_nan() || a.freq_min > a.freq_max {
        return Err(input("need --freq-count >= 1 and --freq-min <= --freq-max"));
    }
    let x = read_series(&a.input)?;
    let freqs: Vec<f64> = if a.freq_count == 1 {
        vec![a.freq_min]
    } else {
        let step = (a.freq_max - a.freq_min) / (a.freq_count - 1) as f64;
        (0..a.freq_count)
            .map(|i| a.freq_min + i as f64 * step)
            .collect()
    };
    let field = cusum_field(&x, &freqs, a.stride)?;
    let mut out = csv_writer(output(a.output.as_deref())?);
    write_row(
        &mut out,
        std::iter::once("i".to_string()).chain(field.freqs.iter().map(f64::to_string)),
    )?;
    for (i, row) in field.rows.iter().zip(&field.values) {
        write_row(
            &mut out,
            std::iter::once(i.to_string()).chain(row.iter().map(f64::to_string)),
        )?;
    }
    flush(out)
}

pub fn tune_curve(x: &TimeSeries, a: &TuneArgs, cfg: &RunConfig) -> Result<MvCurve> {
    let n = x.len();
    let omega = || {
        a.omega
            .ok_or_else(|| input("--omega is required for this stage"))
    };
    let pick = |defaults: Vec<usize>| {
        if a.candidates.is_empty() {
            defaults
        } else {
            a.candidates.clone()
        }
    };
    Ok(match a.stage {
        TuneStage::M => {
            let grid = cfg.grid(n)?;
            tuning::mv_select_stage1_m(
                x,
                &grid.subsample(cfg.tuning.freq_points),
                &pick(tuning::default_m_candidates(n)),
                cfg.tuning.k_stride(n),
            )?
        }
        TuneStage::MTilde => {
            tuning::mv_select_m_tilde(x, omega()?, &pick(tuning::default_m_tilde_candidates(n)))?
        }
        TuneStage::MPrime => {
            let omega = omega()?;
            let m_tilde = resolve_m_tilde(x, omega, cfg.m_tilde)?;
            tuning::mv_select_m_prime(
                x,
                omega,
                m_tilde,
                &pick(tuning::default_m_prime_candidates(m_tilde)),
            )?
        }
    })
}

fn cmd_tune(a: &TuneArgs) -> Result<()> {
    let cfg = a.run.resolve()?;
    let x = read_series(&a.input)?;
    let curve = tune_curve(&x, a, &cfg)?;
    let mut out = csv_writer(output(a.output.as_deref())?);
    write_row(&mut out, ["candidate", "volatility", "chosen"])?;
    for (c, v) in curve.candidates.iter().zip(&curve.volatility) {
        write_row(
            &mut out,
            [
                c.to_string(),
                v.to_string(),
                (*c == curve.chosen).to_string(),
            ],
        )?;
    }
    flush(out)
}

pub fn experiment_spec(a: &ExperimentArgs) -> Result<ExperimentSpec> {
    let name = a.preset.as_deref().unwrap_or_default();
    let mut spec = experiment::preset(name).ok_or_else(|| {
        input(format!(
            "unknown preset {name:?}; expected one of {}",
            experiment::preset_names().join(", ")
        ))
    })?;
    if let Some(model) = &a.model {
        spec.model = parse_noise_kind(model)?;
    }
    if let Some(n) = a.n {
        spec.n = n;
    }
    if let Some(reps) = a.reps {
        spec.reps = reps;
    }
    if !a.levels.is_empty() {
        spec.levels = a.levels.clone();
    }
    if !a.amplitudes.is_empty() {
        spec.amplitudes = a.amplitudes.clone();
    }
    if let Some(k) = a.replicates {
        spec.replicates = k;
    }
    if let Some(k) = a.replicates2 {
        spec.replicates2 = k;
    }
    if let Some(g) = a.grid_factor {
        spec.grid_factor = g;
    }
    if let Some(m) = &a.m {
        spec.m = parse_bandwidth("m", m)?;
    }
    if let Some(m) = &a.m_tilde {
        spec.m_tilde = parse_bandwidth("m_tilde", m)?;
    }
    if let Some(m) = &a.m_prime {
        spec.m_prime = parse_bandwidth("m_prime", m)?;
    }
    if let Some(seed) = a.seed {
        spec.seed = seed;
    }
    spec.validate()?;
    Ok(spec)
}

fn cmd_experiment(a: &ExperimentArgs) -> Result<()> {
    if a.list {
        let mut text = String::from("preset,units,seconds\n");
        for name in experiment::preset_names() {
            let spec = experiment::preset(&name).expect("listed preset");
            text += &format!(
                "{name},{:.3e},{:.0}\n",
                spec.estimated_units(),
                spec.estimated_seconds()
            );
        }
        return write_text(None, &text);
    }
    let spec = experiment_spec(a)?;
    if !a.force {
        spec.check_budget(a.budget)?;
    }
    let result = experiment::run(&spec)?;
    std::fs::create_dir_all(&a.out_dir).map_err(|e| CliError::io(&a.out_dir, e))?;
    let table = a.out_dir.join("table.csv");
    experiment::write_table(create(&table)?, &result.records)?;
    let timings = a.out_dir.join("timings.csv");
    experiment::write_timings(create(&timings)?, &result.records)?;
    let mut json =
        serde_json::to_string_pretty(&result.summary).expect("summary fields are plain data");
    json.push('\n');
    write_text(Some(&a.out_dir.join("summary.json")), &json)?;
    eprintln!("wrote {}", a.out_dir.display());
    Ok(())
}
