//! Synthetic signals `X_i = mu_i + eps_i`.
//!
//! The mean is a finite sum of oscillations whose cosine/sine amplitudes are
//! piecewise constant in time, plus a smooth trend `f(i/n)`. The noise is a
//! time-varying AR(1) recursion `eps_k = a(k/n) eps_{k-1} + e_k` whose
//! coefficient may jump at finitely many break points, which covers the
//! simulation models M1-M4 and user supplied piecewise coefficients.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{StandardNormal, StudentT};

use crate::error::{invalid, Error, Result};
use crate::rng::{derive_seed, stream_rng, Domain};
use crate::series::{TimeSeries, MIN_LEN};

/// Default number of discarded warm-up steps of the noise recursion.
pub const DEFAULT_BURN_IN: usize = 200;

/// Amplitudes in force after sample `start` (1-based, exclusive) until the
/// next segment starts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub start: usize,
    pub amp_cos: f64,
    pub amp_sin: f64,
}

impl Segment {
    pub fn new(start: usize, amp_cos: f64, amp_sin: f64) -> Self {
        Self {
            start,
            amp_cos,
            amp_sin,
        }
    }
}

/// One oscillatory frequency and its piecewise amplitudes.
///
/// Segment `r` covers samples `start_r < i <= start_{r+1}`; the first segment
/// starts at 0 and the last runs to `n`. The interior starts are the change
/// points of this oscillation.
#[derive(Debug, Clone, PartialEq)]
pub struct OscillatoryComponent {
    pub omega: f64,
    pub segments: Vec<Segment>,
}

impl OscillatoryComponent {
    pub fn new(omega: f64, segments: Vec<Segment>) -> Self {
        Self { omega, segments }
    }

    /// A stationary oscillation `a cos(omega i) + b sin(omega i)` on all samples.
    pub fn steady(omega: f64, amp_cos: f64, amp_sin: f64) -> Self {
        Self::new(omega, vec![Segment::new(0, amp_cos, amp_sin)])
    }

    /// `amp cos(omega i)` on `start < i <= end`, zero elsewhere.
    pub fn burst(omega: f64, amp: f64, start: usize, end: usize) -> Self {
        Self::new(
            omega,
            vec![
                Segment::new(0, 0.0, 0.0),
                Segment::new(start, amp, 0.0),
                Segment::new(end, 0.0, 0.0),
            ],
        )
    }

    /// Interior segment starts, i.e. the true change points.
    pub fn change_points(&self) -> Vec<usize> {
        self.segments.iter().skip(1).map(|s| s.start).collect()
    }

    fn validate(&self, n: usize) -> Result<()> {
        if !(self.omega > 0.0 && self.omega < PI) {
            return Err(Error::InvalidSpec(format!(
                "frequency {} outside (0, pi)",
                self.omega
            )));
        }
        let Some(first) = self.segments.first() else {
            return Err(Error::InvalidSpec("component without segments".into()));
        };
        if first.start != 0 {
            return Err(Error::InvalidSpec(
                "first segment must start at index 0".into(),
            ));
        }
        for w in self.segments.windows(2) {
            if w[1].start <= w[0].start {
                return Err(Error::InvalidSpec(
                    "segment starts must be strictly increasing".into(),
                ));
            }
        }
        for s in &self.segments {
            if s.start >= n {
                return Err(Error::InvalidSpec(format!(
                    "segment start {} not below n = {n}",
                    s.start
                )));
            }
            if !(s.amp_cos.is_finite() && s.amp_sin.is_finite()) {
                return Err(Error::InvalidSpec("non-finite amplitude".into()));
            }
        }
        Ok(())
    }
}

/// Smooth baseline `f(t)`, `t in [0, 1]`.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum Trend {
    #[default]
    Zero,
    /// `c t`
    Linear(f64),
    /// `c_0 + c_1 t + c_2 t^2 + ...`
    Polynomial(Vec<f64>),
}

impl Trend {
    pub fn eval(&self, t: f64) -> f64 {
        match self {
            Trend::Zero => 0.0,
            Trend::Linear(c) => c * t,
            Trend::Polynomial(coeffs) => coeffs.iter().rev().fold(0.0, |acc, c| acc * t + c),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct MeanSpec {
    pub components: Vec<OscillatoryComponent>,
    pub trend: Trend,
}

impl MeanSpec {
    pub fn new(components: Vec<OscillatoryComponent>, trend: Trend) -> Self {
        Self { components, trend }
    }

    pub fn zero() -> Self {
        Self::default()
    }

    /// Two short bursts: `2 cos(w1 i)` on `(0.1n, 0.45n]` and `2.5 cos(w2 i)`
    /// on `(0.55n, 0.8n]` with `w1 = 0.17007 * 2pi`, `w2 = 0.38007 * 2pi`.
    pub fn two_spindle(n: usize) -> Self {
        let at = |frac: f64| (frac * n as f64).round() as usize;
        Self::new(
            vec![
                OscillatoryComponent::burst(0.17007 * 2.0 * PI, 2.0, at(0.1), at(0.45)),
                OscillatoryComponent::burst(0.38007 * 2.0 * PI, 2.5, at(0.55), at(0.8)),
            ],
            Trend::Zero,
        )
    }

    /// A single burst `3 cos(0.2 pi i)` on `(0.1n, 0.25n]`.
    pub fn one_spindle(n: usize) -> Self {
        let at = |frac: f64| (frac * n as f64).round() as usize;
        Self::new(
            vec![OscillatoryComponent::burst(
                0.1 * 2.0 * PI,
                3.0,
                at(0.1),
                at(0.25),
            )],
            Trend::Zero,
        )
    }

    /// `2 cos(0.14 pi i) + 1.5 cos(0.6 pi i)`.
    pub fn two_tone() -> Self {
        Self::new(
            vec![
                OscillatoryComponent::steady(0.07 * 2.0 * PI, 2.0, 0.0),
                OscillatoryComponent::steady(0.3 * 2.0 * PI, 1.5, 0.0),
            ],
            Trend::Zero,
        )
    }

    /// The stage-1 null mean `i / n`.
    pub fn linear_trend() -> Self {
        Self::new(Vec::new(), Trend::Linear(1.0))
    }

    /// Frequencies of all components.
    pub fn frequencies(&self) -> Vec<f64> {
        self.components.iter().map(|c| c.omega).collect()
    }

    /// Copy with every oscillatory amplitude multiplied by `c`.
    pub fn scaled_amplitudes(&self, c: f64) -> Self {
        let components = self
            .components
            .iter()
            .map(|comp| {
                OscillatoryComponent::new(
                    comp.omega,
                    comp.segments
                        .iter()
                        .map(|s| Segment::new(s.start, c * s.amp_cos, c * s.amp_sin))
                        .collect(),
                )
            })
            .collect();
        Self::new(components, self.trend.clone())
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        for c in &self.components {
            c.validate(n)?;
        }
        for (i, a) in self.components.iter().enumerate() {
            for b in &self.components[i + 1..] {
                if a.omega == b.omega {
                    return Err(Error::InvalidSpec(format!(
                        "duplicate frequency {}",
                        a.omega
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Closed-form expression for one piece of the AR coefficient `a(t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CoefficientPiece {
    Const(f64),
    /// `amp cos(t)`
    Cos(f64),
    /// `amp sin(t)`
    Sin(f64),
    /// `scale (t - shift)^power`
    Power {
        scale: f64,
        shift: f64,
        power: i32,
    },
}

impl CoefficientPiece {
    pub fn eval(&self, t: f64) -> f64 {
        match *self {
            CoefficientPiece::Const(c) => c,
            CoefficientPiece::Cos(a) => a * t.cos(),
            CoefficientPiece::Sin(a) => a * t.sin(),
            CoefficientPiece::Power {
                scale,
                shift,
                power,
            } => scale * (t - shift).powi(power),
        }
    }
}

/// Piecewise coefficient: `pieces[j]` applies on `breaks[j-1] <= t < breaks[j]`
/// with the outer bounds 0 and 1 implied (the last piece includes `t = 1`).
#[derive(Debug, Clone, PartialEq)]
pub struct Coefficient {
    pub breaks: Vec<f64>,
    pub pieces: Vec<CoefficientPiece>,
}

impl Coefficient {
    pub fn smooth(piece: CoefficientPiece) -> Self {
        Self {
            breaks: Vec::new(),
            pieces: vec![piece],
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        let j = self.breaks.partition_point(|&s| s <= t);
        self.pieces[j].eval(t)
    }

    fn validate(&self) -> Result<()> {
        if self.pieces.len() != self.breaks.len() + 1 {
            return Err(invalid(
                "coefficient",
                format!(
                    "{} break points need {} pieces, got {}",
                    self.breaks.len(),
                    self.breaks.len() + 1,
                    self.pieces.len()
                ),
            ));
        }
        let mut prev = 0.0;
        for &s in &self.breaks {
            if !(s > prev && s < 1.0) {
                return Err(invalid(
                    "coefficient",
                    "break points must be strictly increasing inside (0, 1)",
                ));
            }
            prev = s;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseKind {
    M1,
    M2,
    M3,
    M4,
    Custom,
}

impl std::fmt::Display for NoiseKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            NoiseKind::M1 => "M1",
            NoiseKind::M2 => "M2",
            NoiseKind::M3 => "M3",
            NoiseKind::M4 => "M4",
            NoiseKind::Custom => "custom",
        };
        f.write_str(s)
    }
}

/// Law of the i.i.d. innovations `e_k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Innovation {
    StandardNormal,
    /// Raw Student-t draws, not rescaled to unit variance.
    StudentT(f64),
    /// Degenerate zero law, for noiseless signals.
    Zero,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoiseModel {
    pub kind: NoiseKind,
    pub coefficient: Coefficient,
    pub innovation: Innovation,
    pub burn_in: usize,
}

impl NoiseModel {
    /// `eps_k = 0.5 cos(k/n) eps_{k-1} + e_k`, Gaussian.
    pub fn m1() -> Self {
        Self {
            kind: NoiseKind::M1,
            coefficient: Coefficient::smooth(CoefficientPiece::Cos(0.5)),
            innovation: Innovation::StandardNormal,
            burn_in: DEFAULT_BURN_IN,
        }
    }

    /// M1 up to `t = 0.75`, then `a(t) = t - 0.5`.
    pub fn m2() -> Self {
        Self {
            kind: NoiseKind::M2,
            coefficient: Coefficient {
                breaks: vec![0.75],
                pieces: vec![
                    CoefficientPiece::Cos(0.5),
                    CoefficientPiece::Power {
                        scale: 1.0,
                        shift: 0.5,
                        power: 1,
                    },
                ],
            },
            innovation: Innovation::StandardNormal,
            burn_in: DEFAULT_BURN_IN,
        }
    }

    /// `0.5 cos(t)` on `[0, 0.3)`, `(t - 0.3)^2` on `[0.3, 0.75)`, `0.3 sin(t)` after.
    pub fn m3() -> Self {
        Self {
            kind: NoiseKind::M3,
            coefficient: Coefficient {
                breaks: vec![0.3, 0.75],
                pieces: vec![
                    CoefficientPiece::Cos(0.5),
                    CoefficientPiece::Power {
                        scale: 1.0,
                        shift: 0.3,
                        power: 2,
                    },
                    CoefficientPiece::Sin(0.3),
                ],
            },
            innovation: Innovation::StandardNormal,
            burn_in: DEFAULT_BURN_IN,
        }
    }

    /// `eps_k = 0.6 cos(k/n) eps_{k-1} + e_k`, `e_k ~ t_5`.
    pub fn m4() -> Self {
        Self {
            kind: NoiseKind::M4,
            coefficient: Coefficient::smooth(CoefficientPiece::Cos(0.6)),
            innovation: Innovation::StudentT(5.0),
            burn_in: DEFAULT_BURN_IN,
        }
    }

    pub fn custom(coefficient: Coefficient, innovation: Innovation) -> Self {
        Self {
            kind: NoiseKind::Custom,
            coefficient,
            innovation,
            burn_in: DEFAULT_BURN_IN,
        }
    }

    pub fn by_kind(kind: NoiseKind) -> Option<Self> {
        match kind {
            NoiseKind::M1 => Some(Self::m1()),
            NoiseKind::M2 => Some(Self::m2()),
            NoiseKind::M3 => Some(Self::m3()),
            NoiseKind::M4 => Some(Self::m4()),
            NoiseKind::Custom => None,
        }
    }

    pub fn with_innovation(mut self, innovation: Innovation) -> Self {
        self.innovation = innovation;
        self
    }

    pub fn with_burn_in(mut self, burn_in: usize) -> Self {
        self.burn_in = burn_in;
        self
    }

    /// Checks structure and stability at every time point the recursion
    /// visits for a series of length `n`.
    pub fn validate(&self, n: usize) -> Result<()> {
        self.coefficient.validate()?;
        if let Innovation::StudentT(df) = self.innovation {
            if df.is_nan() || df <= 2.0 {
                return Err(invalid(
                    "innovation",
                    format!("t degrees of freedom {df} <= 2"),
                ));
            }
        }
        for k in 1..=n {
            let t = k as f64 / n as f64;
            let a = self.coefficient.eval(t);
            if a.is_nan() || a.abs() >= 1.0 {
                return Err(Error::UnstableModel { t, value: a.abs() });
            }
        }
        Ok(())
    }

    /// Runs the recursion on caller-supplied innovations.
    ///
    /// `innovations` holds `burn_in + n` values; the first `burn_in` drive the
    /// warm-up with `a(1/n)` frozen and are discarded.
    pub fn filter(&self, innovations: &[f64], n: usize) -> Vec<f64> {
        assert_eq!(innovations.len(), self.burn_in + n);
        let nf = n as f64;
        let a0 = self.coefficient.eval(1.0 / nf);
        let (warm, body) = innovations.split_at(self.burn_in);
        let mut prev = warm.iter().fold(0.0, |e, &z| a0 * e + z);
        body.iter()
            .enumerate()
            .map(|(k, &z)| {
                prev = self.coefficient.eval((k + 1) as f64 / nf) * prev + z;
                prev
            })
            .collect()
    }

    fn draw_innovations(&self, count: usize, seed: u64) -> Vec<f64> {
        let mut rng = stream_rng(derive_seed(seed, Domain::Noise), 0);
        match self.innovation {
            Innovation::StandardNormal => (0..count).map(|_| rng.sample(StandardNormal)).collect(),
            Innovation::StudentT(df) => {
                let t = StudentT::new(df).expect("validated degrees of freedom");
                (0..count).map(|_| rng.sample(t)).collect()
            }
            Innovation::Zero => vec![0.0; count],
        }
    }
}

/// `mu_i = sum_k sum_r (A cos(w_k i) + B sin(w_k i)) 1{b_r < i <= b_{r+1}} + f(i/n)`.
pub fn eval_mean(spec: &MeanSpec, n: usize) -> Result<TimeSeries> {
    if n < MIN_LEN {
        return Err(Error::TooShort { n, min: MIN_LEN });
    }
    spec.validate(n)?;
    let nf = n as f64;
    let mut mu: Vec<f64> = (1..=n).map(|i| spec.trend.eval(i as f64 / nf)).collect();
    for comp in &spec.components {
        for (r, seg) in comp.segments.iter().enumerate() {
            let end = comp.segments.get(r + 1).map_or(n, |s| s.start);
            for i in seg.start + 1..=end {
                let (s, c) = (comp.omega * i as f64).sin_cos();
                mu[i - 1] += seg.amp_cos * c + seg.amp_sin * s;
            }
        }
    }
    TimeSeries::new(mu)
}

pub fn simulate_noise(model: &NoiseModel, n: usize, seed: u64) -> Result<TimeSeries> {
    if n < MIN_LEN {
        return Err(Error::TooShort { n, min: MIN_LEN });
    }
    model.validate(n)?;
    let innovations = model.draw_innovations(model.burn_in + n, seed);
    TimeSeries::new(model.filter(&innovations, n))
}

pub fn simulate_series(
    mean: &MeanSpec,
    noise: &NoiseModel,
    n: usize,
    seed: u64,
) -> Result<TimeSeries> {
    let mu = eval_mean(mean, n)?;
    let eps = simulate_noise(noise, n, seed)?;
    let values = mu
        .values()
        .iter()
        .zip(eps.values())
        .map(|(m, e)| m + e)
        .collect();
    TimeSeries::new(values)
}
