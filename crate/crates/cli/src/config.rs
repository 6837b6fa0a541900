//! Flat `key = value` configuration.
//!
//! Blank lines and lines starting with `#` are ignored. Values from a file
//! override the defaults; command-line flags override the file.

use std::f64::consts::PI;
use std::path::Path;

use spindle_core::signal::{
    Coefficient, CoefficientPiece, Innovation, OscillatoryComponent, Segment, Trend,
};
use spindle_core::{
    build_grid, Bandwidth, FrequencyGrid, MeanSpec, NoiseKind, NoiseModel, TuningOptions,
};

use crate::error::{input, CliError, Result};

/// One `key = value` entry with its 1-based line number.
#[derive(Debug, Clone, PartialEq)]
pub struct Entry {
    pub line: usize,
    pub key: String,
    pub value: String,
}

pub fn parse_entries(text: &str) -> Result<Vec<Entry>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(input(format!(
                "config line {}: expected key = value",
                i + 1
            )));
        };
        out.push(Entry {
            line: i + 1,
            key: key.trim().to_string(),
            value: value.trim().to_string(),
        });
    }
    Ok(out)
}

pub fn read_entries(path: &Path) -> Result<Vec<Entry>> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_entries(&text)
}

fn num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| input(format!("{key}: cannot parse {value:?}")))
}

pub fn parse_bandwidth(key: &str, value: &str) -> Result<Bandwidth> {
    if value.eq_ignore_ascii_case("auto") {
        Ok(Bandwidth::Auto)
    } else {
        num(key, value).map(Bandwidth::Fixed)
    }
}

/// Settings of a detection run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub alpha: f64,
    pub beta: f64,
    pub m: Bandwidth,
    pub m_tilde: Bandwidth,
    pub m_prime: Bandwidth,
    /// Stage-1 bootstrap replicates `K`.
    pub replicates: usize,
    /// Stage-2 bootstrap replicates `K0`.
    pub replicates2: usize,
    pub delta0: f64,
    pub grid_factor: f64,
    pub seed: u64,
    /// Display only: frequencies are also reported in Hz when set.
    pub sampling_rate_hz: Option<f64>,
    pub tuning: TuningOptions,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            alpha: 0.05,
            beta: 0.05,
            m: Bandwidth::Auto,
            m_tilde: Bandwidth::Auto,
            m_prime: Bandwidth::Auto,
            replicates: 1000,
            replicates2: 1000,
            delta0: 0.1,
            grid_factor: 0.05,
            seed: 0,
            sampling_rate_hz: None,
            tuning: TuningOptions::default(),
        }
    }
}

impl RunConfig {
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "alpha" => self.alpha = num(key, value)?,
            "beta" => self.beta = num(key, value)?,
            "m" => self.m = parse_bandwidth(key, value)?,
            "m_tilde" => self.m_tilde = parse_bandwidth(key, value)?,
            "m_prime" => self.m_prime = parse_bandwidth(key, value)?,
            "K" | "replicates" => self.replicates = num(key, value)?,
            "K0" | "replicates2" => self.replicates2 = num(key, value)?,
            "delta0" => self.delta0 = num(key, value)?,
            "grid_factor" => self.grid_factor = num(key, value)?,
            "seed" => self.seed = num(key, value)?,
            "sampling_rate_hz" => self.sampling_rate_hz = Some(num(key, value)?),
            "tuning_freq_points" => self.tuning.freq_points = num(key, value)?,
            "tuning_k_points" => self.tuning.k_points = num(key, value)?,
            _ => return Err(input(format!("unknown key {key:?}"))),
        }
        Ok(())
    }

    pub fn apply(&mut self, entries: &[Entry]) -> Result<()> {
        for e in entries {
            self.set(&e.key, &e.value)
                .map_err(|err| input(format!("config line {}: {err}", e.line)))?;
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("alpha", self.alpha), ("beta", self.beta)] {
            if !(v > 0.0 && v < 1.0) {
                return Err(input(format!("{name} = {v} outside (0, 1)")));
            }
        }
        if let Some(rate) = self.sampling_rate_hz {
            if !(rate > 0.0 && rate.is_finite()) {
                return Err(input(format!("sampling_rate_hz = {rate} must be positive")));
            }
        }
        Ok(())
    }

    pub fn grid(&self, n: usize) -> Result<FrequencyGrid> {
        Ok(build_grid(n, self.delta0, self.grid_factor)?)
    }

    pub fn bandwidth_source(&self) -> &'static str {
        let autos = [self.m, self.m_tilde, self.m_prime]
            .iter()
            .filter(|b| **b == Bandwidth::Auto)
            .count();
        match autos {
            0 => "manual",
            3 => "auto",
            _ => "mixed",
        }
    }

    pub fn to_hz(&self, omega: f64) -> Option<f64> {
        self.sampling_rate_hz.map(|rate| omega * rate / (2.0 * PI))
    }
}

/// Generative description used by `simulate`.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub n: usize,
    pub seed: u64,
    /// Named mean, resolved against `n` when the series is generated.
    pub mean_preset: Option<String>,
    pub components: Vec<OscillatoryComponent>,
    pub trend: Trend,
    pub noise: NoiseModel,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            n: 1000,
            seed: 0,
            mean_preset: None,
            components: Vec::new(),
            trend: Trend::Zero,
            noise: NoiseModel::m1(),
        }
    }
}

/// Named means accepted by `mean = ...`.
pub const MEAN_PRESETS: &[&str] = &[
    "zero",
    "trend",
    "two_spindle",
    "one_spindle",
    "two_tone",
    "stage2_null",
];

pub fn mean_preset(name: &str, n: usize) -> Result<MeanSpec> {
    Ok(match name {
        "zero" => MeanSpec::zero(),
        "trend" => MeanSpec::linear_trend(),
        "two_spindle" => MeanSpec::two_spindle(n),
        "one_spindle" => MeanSpec::one_spindle(n),
        "two_tone" => MeanSpec::two_tone(),
        "stage2_null" => stage2_null_mean(),
        _ => {
            return Err(input(format!(
                "unknown mean {name:?}; expected one of {}",
                MEAN_PRESETS.join(", ")
            )))
        }
    })
}

/// `2 sin(pi k / 15)`.
pub fn stage2_null_mean() -> MeanSpec {
    MeanSpec::new(
        vec![OscillatoryComponent::steady(PI / 15.0, 0.0, 2.0)],
        Trend::Zero,
    )
}

/// `A cos(0.2 pi k)`.
pub fn power_mean(amplitude: f64) -> MeanSpec {
    MeanSpec::new(
        vec![OscillatoryComponent::steady(0.2 * PI, amplitude, 0.0)],
        Trend::Zero,
    )
}

pub fn parse_noise_kind(value: &str) -> Result<NoiseKind> {
    match value.to_ascii_uppercase().as_str() {
        "M1" => Ok(NoiseKind::M1),
        "M2" => Ok(NoiseKind::M2),
        "M3" => Ok(NoiseKind::M3),
        "M4" => Ok(NoiseKind::M4),
        "CUSTOM" => Ok(NoiseKind::Custom),
        _ => Err(input(format!(
            "unknown noise model {value:?}; expected M1..M4 or custom"
        ))),
    }
}

fn parse_floats(key: &str, text: &str, sep: char) -> Result<Vec<f64>> {
    text.split(sep).map(|s| num(key, s.trim())).collect()
}

/// `omega; start:amp_cos:amp_sin; start:amp_cos:amp_sin; ...`
fn parse_component(value: &str) -> Result<OscillatoryComponent> {
    let mut parts = value.split(';');
    let omega = num("component", parts.next().unwrap_or("").trim())?;
    let mut segments = Vec::new();
    for seg in parts {
        let f = parse_floats("component", seg, ':')?;
        if f.len() != 3 || f[0] < 0.0 || f[0].fract() != 0.0 {
            return Err(input(format!(
                "component segment {seg:?}: expected start:amp_cos:amp_sin"
            )));
        }
        segments.push(Segment::new(f[0] as usize, f[1], f[2]));
    }
    if segments.is_empty() {
        return Err(input("component: at least one segment required"));
    }
    Ok(OscillatoryComponent::new(omega, segments))
}

/// `omega:amp:start:end`
fn parse_burst(value: &str) -> Result<OscillatoryComponent> {
    let f = parse_floats("burst", value, ':')?;
    if f.len() != 4 || f[2] < 0.0 || f[3] < 0.0 {
        return Err(input(format!(
            "burst {value:?}: expected omega:amp:start:end"
        )));
    }
    Ok(OscillatoryComponent::burst(
        f[0],
        f[1],
        f[2] as usize,
        f[3] as usize,
    ))
}

/// `zero`, `linear:c` or `poly:c0,c1,...`
fn parse_trend(value: &str) -> Result<Trend> {
    if value == "zero" {
        return Ok(Trend::Zero);
    }
    match value.split_once(':') {
        Some(("linear", c)) => Ok(Trend::Linear(num("trend", c)?)),
        Some(("poly", cs)) => Ok(Trend::Polynomial(parse_floats("trend", cs, ',')?)),
        _ => Err(input(format!(
            "trend {value:?}: expected zero, linear:c or poly:c0,c1,..."
        ))),
    }
}

/// `normal` or `t:df`
fn parse_innovation(value: &str) -> Result<Innovation> {
    match value.split_once(':') {
        None if value == "normal" => Ok(Innovation::StandardNormal),
        None if value == "zero" => Ok(Innovation::Zero),
        Some(("t", df)) => Ok(Innovation::StudentT(num("innovation", df)?)),
        _ => Err(input(format!(
            "innovation {value:?}: expected normal, zero or t:df"
        ))),
    }
}

fn parse_piece(text: &str) -> Result<CoefficientPiece> {
    let (kind, args) = text.split_once(':').unwrap_or((text, ""));
    let f = parse_floats("coefficient", args, ':')?;
    match (kind, f.as_slice()) {
        ("const", [c]) => Ok(CoefficientPiece::Const(*c)),
        ("cos", [a]) => Ok(CoefficientPiece::Cos(*a)),
        ("sin", [a]) => Ok(CoefficientPiece::Sin(*a)),
        ("pow", [scale, shift, power]) if power.fract() == 0.0 => Ok(CoefficientPiece::Power {
            scale: *scale,
            shift: *shift,
            power: *power as i32,
        }),
        _ => Err(input(format!(
            "coefficient piece {text:?}: expected const:c, cos:a, sin:a or pow:scale:shift:power"
        ))),
    }
}

/// `piece | break | piece | ...`, e.g. `cos:0.5 | 0.3 | pow:1:0.3:2`.
fn parse_coefficient(value: &str) -> Result<Coefficient> {
    let items: Vec<&str> = value.split('|').map(str::trim).collect();
    let mut breaks = Vec::new();
    let mut pieces = Vec::new();
    for (i, item) in items.iter().enumerate() {
        if i % 2 == 0 {
            pieces.push(parse_piece(item)?);
        } else {
            breaks.push(num("coefficient", item)?);
        }
    }
    if items.len() % 2 == 0 {
        return Err(input("coefficient: must end with a piece"));
    }
    Ok(Coefficient { breaks, pieces })
}

impl SimConfig {
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "n" => self.n = num(key, value)?,
            "seed" => self.seed = num(key, value)?,
            "mean" => {
                mean_preset(value, 16)?;
                self.mean_preset = Some(value.to_string());
            }
            "component" => self.components.push(parse_component(value)?),
            "burst" => self.components.push(parse_burst(value)?),
            "tone" => {
                let f = parse_floats(key, value, ':')?;
                if f.len() != 3 {
                    return Err(input(format!(
                        "tone {value:?}: expected omega:amp_cos:amp_sin"
                    )));
                }
                self.components
                    .push(OscillatoryComponent::steady(f[0], f[1], f[2]));
            }
            "trend" => self.trend = parse_trend(value)?,
            "noise" => {
                let kind = parse_noise_kind(value)?;
                let keep = (self.noise.innovation, self.noise.burn_in);
                self.noise = match NoiseModel::by_kind(kind) {
                    Some(model) => model,
                    None => NoiseModel::custom(self.noise.coefficient.clone(), keep.0),
                };
                self.noise.burn_in = keep.1;
            }
            "innovation" => self.noise.innovation = parse_innovation(value)?,
            "coefficient" => {
                let c = parse_coefficient(value)?;
                self.noise =
                    NoiseModel::custom(c, self.noise.innovation).with_burn_in(self.noise.burn_in);
            }
            "burn_in" => self.noise.burn_in = num(key, value)?,
            _ => return Err(input(format!("unknown key {key:?}"))),
        }
        Ok(())
    }

    pub fn apply(&mut self, entries: &[Entry]) -> Result<()> {
        for e in entries {
            self.set(&e.key, &e.value)
                .map_err(|err| input(format!("config line {}: {err}", e.line)))?;
        }
        Ok(())
    }

    /// Preset mean (if any) plus explicitly listed components and trend.
    pub fn mean(&self) -> Result<MeanSpec> {
        let mut spec = match &self.mean_preset {
            Some(name) => mean_preset(name, self.n)?,
            None => MeanSpec::zero(),
        };
        spec.components.extend(self.components.iter().cloned());
        if self.trend != Trend::Zero {
            spec.trend = self.trend.clone();
        }
        Ok(spec)
    }
}
