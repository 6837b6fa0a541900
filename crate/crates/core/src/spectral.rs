//! Deterministic spectral statistics.
//!
//! Everything here is evaluated one frequency at a time with O(1) sliding
//! updates in sample order, so a single frequency never depends on how the
//! grid is split across threads. All sample indices are 1-based.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::series::{TimeSeries, MIN_LEN};

/// Steps between exact `sin_cos` refreshes of a rotating phasor.
const PHASOR_REFRESH: usize = 32;

/// `e^{i omega j}` for `j = start, start + 1, ...`, by complex rotation with a
/// periodic exact refresh.
#[derive(Debug, Clone)]
pub(crate) struct Phasor {
    omega: f64,
    step: Complex64,
    current: Complex64,
    index: usize,
    since_refresh: usize,
}

impl Phasor {
    pub(crate) fn new(omega: f64, start: usize) -> Self {
        let (s, c) = omega.sin_cos();
        Self {
            omega,
            step: Complex64::new(c, s),
            current: cis(omega * start as f64),
            index: start,
            since_refresh: 0,
        }
    }
}

impl Iterator for Phasor {
    type Item = Complex64;

    #[inline]
    fn next(&mut self) -> Option<Complex64> {
        let out = self.current;
        self.index += 1;
        self.since_refresh += 1;
        if self.since_refresh == PHASOR_REFRESH {
            self.current = cis(self.omega * self.index as f64);
            self.since_refresh = 0;
        } else {
            self.current *= self.step;
        }
        Some(out)
    }
}

#[inline]
pub(crate) fn cis(theta: f64) -> Complex64 {
    let (s, c) = theta.sin_cos();
    Complex64::new(c, s)
}

/// `e^{i omega j}` for `j = 1..=n`, stored at offset `j - 1`.
pub fn twiddles(omega: f64, n: usize) -> Vec<Complex64> {
    Phasor::new(omega, 1).take(n).collect()
}

/// Candidate frequencies `delta0, delta0 + mesh, ...` up to `pi`.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyGrid {
    delta0: f64,
    mesh: f64,
    factor: f64,
    freqs: Vec<f64>,
}

impl FrequencyGrid {
    pub fn delta0(&self) -> f64 {
        self.delta0
    }

    pub fn mesh(&self) -> f64 {
        self.mesh
    }

    pub fn factor(&self) -> f64 {
        self.factor
    }

    pub fn freqs(&self) -> &[f64] {
        &self.freqs
    }

    pub fn len(&self) -> usize {
        self.freqs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.freqs.is_empty()
    }

    /// Index of the grid point nearest to `omega`.
    pub fn nearest(&self, omega: f64) -> usize {
        let k = ((omega - self.delta0) / self.mesh).round();
        (k.max(0.0) as usize).min(self.freqs.len() - 1)
    }

    /// `count` points spread evenly over the grid by index.
    pub fn subsample(&self, count: usize) -> Vec<f64> {
        let p = self.freqs.len();
        if count >= p {
            return self.freqs.clone();
        }
        if count <= 1 {
            return vec![self.freqs[p / 2]];
        }
        (0..count)
            .map(|k| self.freqs[k * (p - 1) / (count - 1)])
            .collect()
    }
}

/// Grid with mesh `1 / (factor * n^{3/2} * ln n)` starting at `delta0`.
///
/// `factor = 1` is the full-density grid; smaller factors coarsen it.
pub fn build_grid(n: usize, delta0: f64, factor: f64) -> Result<FrequencyGrid> {
    if n < MIN_LEN {
        return Err(Error::TooShort { n, min: MIN_LEN });
    }
    if !(delta0 > 0.0 && delta0 < PI) {
        return Err(invalid("delta0", format!("{delta0} outside (0, pi)")));
    }
    if !(factor > 0.0 && factor <= 1.0) {
        return Err(invalid("grid_factor", format!("{factor} outside (0, 1]")));
    }
    let nf = n as f64;
    let scale = factor * nf.powf(1.5) * nf.ln();
    let mesh = 1.0 / scale;
    let p = ((PI - delta0) * scale).floor() as usize + 1;
    let mut freqs: Vec<f64> = (0..p).map(|k| delta0 + k as f64 / scale).collect();
    while freqs.len() > 1 && *freqs.last().unwrap() > PI {
        freqs.pop();
    }
    Ok(FrequencyGrid {
        delta0,
        mesh,
        factor,
        freqs,
    })
}

/// Partial sums `L(k) = sum_{j<=k} X_j e^{i omega j}`, `k = 1..=n`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProgressiveTransform {
    pub omega: f64,
    sums: Vec<Complex64>,
}

impl ProgressiveTransform {
    /// `L(k)` for 1-based `k`.
    pub fn at(&self, k: usize) -> Complex64 {
        self.sums[k - 1]
    }

    pub fn sums(&self) -> &[Complex64] {
        &self.sums
    }

    pub fn len(&self) -> usize {
        self.sums.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sums.is_empty()
    }
}

pub fn progressive_partial_sums(x: &TimeSeries, omega: f64) -> ProgressiveTransform {
    let mut acc = Complex64::new(0.0, 0.0);
    let sums = x
        .values()
        .iter()
        .zip(Phasor::new(omega, 1))
        .map(|(&v, w)| {
            acc += w * v;
            acc
        })
        .collect();
    ProgressiveTransform { omega, sums }
}

/// `max_k |L(k, omega)| / sqrt(n)`.
pub fn progressive_max(x: &[f64], omega: f64) -> f64 {
    let mut re = 0.0;
    let mut im = 0.0;
    let mut best = 0.0f64;
    for (&v, w) in x.iter().zip(Phasor::new(omega, 1)) {
        re += w.re * v;
        im += w.im * v;
        let s = re * re + im * im;
        if s > best {
            best = s;
        }
    }
    (best / x.len() as f64).sqrt()
}

/// Progressive periodogram `F(omega)` over a frequency list.
#[derive(Debug, Clone, PartialEq)]
pub struct DpptProfile {
    pub freqs: Vec<f64>,
    pub values: Vec<f64>,
}

impl DpptProfile {
    /// Global statistic `F(W)` with its smallest maximizing frequency.
    pub fn statistic(&self) -> Option<(f64, f64)> {
        self.argmax(None).map(|k| (self.freqs[k], self.values[k]))
    }

    /// Smallest index attaining the maximum among `active` points (all when
    /// `None`).
    pub fn argmax(&self, active: Option<&[bool]>) -> Option<usize> {
        let mut best: Option<usize> = None;
        for (k, &v) in self.values.iter().enumerate() {
            if active.is_some_and(|a| !a[k]) {
                continue;
            }
            match best {
                Some(b) if v <= self.values[b] => {}
                _ => best = Some(k),
            }
        }
        best
    }
}

pub fn dppt_profile(x: &TimeSeries, freqs: &[f64]) -> DpptProfile {
    let values = freqs
        .par_iter()
        .map(|&w| progressive_max(x.values(), w))
        .collect();
    DpptProfile {
        freqs: freqs.to_vec(),
        values,
    }
}

/// `|C_n(i, omega)|` with `C_n(i, omega) = [L(i) - (i/n) L(n)] / sqrt(n)`,
/// sampled on rows `i = stride, 2 stride, ...`.
#[derive(Debug, Clone, PartialEq)]
pub struct CusumField {
    pub rows: Vec<usize>,
    pub freqs: Vec<f64>,
    /// Row-major: `values[r][c]` is row `rows[r]`, frequency `freqs[c]`.
    pub values: Vec<Vec<f64>>,
}

impl CusumField {
    pub fn max(&self) -> f64 {
        self.values
            .iter()
            .flat_map(|r| r.iter().copied())
            .fold(0.0, f64::max)
    }

    /// Largest value in one frequency column.
    pub fn column_max(&self, c: usize) -> f64 {
        self.values.iter().map(|r| r[c]).fold(0.0, f64::max)
    }
}

pub fn cusum_field(x: &TimeSeries, freqs: &[f64], stride: usize) -> Result<CusumField> {
    if stride == 0 {
        return Err(invalid("stride", "must be positive"));
    }
    if let Some(&w) = freqs.iter().find(|w| !(0.0..=PI).contains(*w)) {
        return Err(invalid("freqs", format!("{w} outside [0, pi]")));
    }
    let n = x.len();
    let nf = n as f64;
    let rows: Vec<usize> = (stride..=n).step_by(stride).collect();
    let columns: Vec<Vec<f64>> = freqs
        .par_iter()
        .map(|&w| {
            let l = progressive_partial_sums(x, w);
            let total = l.at(n);
            rows.iter()
                .map(|&i| (l.at(i) - total * (i as f64 / nf)).norm() / nf.sqrt())
                .collect()
        })
        .collect();
    let values = (0..rows.len())
        .map(|r| columns.iter().map(|col| col[r]).collect())
        .collect();
    Ok(CusumField {
        rows,
        freqs: freqs.to_vec(),
        values,
    })
}

/// Overlapping block sums `E(j) = C_{j,m} + i S_{j,m}`, `j = 1..=n-m`.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockSums {
    pub omega: f64,
    pub m: usize,
    values: Vec<Complex64>,
}

impl BlockSums {
    /// `E(j)` for 1-based `j`.
    pub fn at(&self, j: usize) -> Complex64 {
        self.values[j - 1]
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Writes `E(j)` for `j = 1..=n-m` into split real/imaginary buffers using
/// twiddles `w[j-1] = e^{i omega j}`.
#[inline]
pub(crate) fn block_sums_into(
    x: &[f64],
    w: &[Complex64],
    m: usize,
    re: &mut [f64],
    im: &mut [f64],
) {
    let n = x.len();
    let count = n - m;
    let mut e = Complex64::new(0.0, 0.0);
    for i in 0..m {
        e += w[i] * x[i];
    }
    re[0] = e.re;
    im[0] = e.im;
    for j in 1..count {
        // E(j+1) = E(j) - X_j w_j + X_{j+m} w_{j+m}, 0-based here.
        e += w[j - 1 + m] * x[j - 1 + m] - w[j - 1] * x[j - 1];
        re[j] = e.re;
        im[j] = e.im;
    }
}

pub fn sliding_block_sums(x: &TimeSeries, m: usize, omega: f64) -> Result<BlockSums> {
    let n = x.len();
    if m == 0 || m >= n {
        return Err(invalid(
            "m",
            format!("block size {m} must satisfy 1 <= m < n = {n}"),
        ));
    }
    let w = twiddles(omega, n);
    let mut re = vec![0.0; n - m];
    let mut im = vec![0.0; n - m];
    block_sums_into(x.values(), &w, m, &mut re, &mut im);
    let values = re
        .into_iter()
        .zip(im)
        .map(|(r, i)| Complex64::new(r, i))
        .collect();
    Ok(BlockSums { omega, m, values })
}

/// Unnormalized contrasts
/// `sum_{l=i-h}^{i} w_l X_l - sum_{l=i+1}^{i+h+1} w_l X_l` for `i = lo..=hi`,
/// maintained with two sliding windows.
fn window_contrast(
    x: &[f64],
    w: &[Complex64],
    half: usize,
    lo: usize,
    hi: usize,
) -> Vec<Complex64> {
    let term = |l: usize| w[l - 1] * x[l - 1];
    let mut left: Complex64 = (lo - half..=lo).map(term).sum();
    let mut right: Complex64 = (lo + 1..=lo + half + 1).map(term).sum();
    let mut out = Vec::with_capacity(hi + 1 - lo);
    out.push(left - right);
    for i in lo + 1..=hi {
        let moved = term(i);
        left += moved - term(i - half - 1);
        right += term(i + half + 1) - moved;
        out.push(left - right);
    }
    out
}

fn check_window(n: usize, half: usize, lo: usize, hi: usize) -> Result<()> {
    let first = half + 1;
    let last = n.saturating_sub(half + 1);
    if lo < first || lo > hi {
        return Err(Error::IndexOutOfRange {
            index: lo,
            lo: first,
            hi: last,
        });
    }
    if hi > last {
        return Err(Error::IndexOutOfRange {
            index: hi,
            lo: first,
            hi: last,
        });
    }
    Ok(())
}

/// Phase-adjusted local contrast `T(i)` over a contiguous range `lo..=hi`.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalContrastProfile {
    pub omega: f64,
    pub m_tilde: usize,
    pub first: usize,
    pub values: Vec<f64>,
}

impl LocalContrastProfile {
    pub fn at(&self, i: usize) -> f64 {
        self.values[i - self.first]
    }

    pub fn last(&self) -> usize {
        self.first + self.values.len() - 1
    }
}

/// `T(i)` for every `i` in `lo..=hi`.
pub fn local_contrast_range(
    x: &TimeSeries,
    omega: f64,
    m_tilde: usize,
    lo: usize,
    hi: usize,
) -> Result<LocalContrastProfile> {
    if m_tilde == 0 {
        return Err(invalid("m_tilde", "must be positive"));
    }
    check_window(x.len(), m_tilde, lo, hi)?;
    let w = twiddles(omega, x.len());
    let norm = (2.0 * m_tilde as f64).sqrt();
    let values = window_contrast(x.values(), &w, m_tilde, lo, hi)
        .into_iter()
        .map(|c| c.norm() / norm)
        .collect();
    Ok(LocalContrastProfile {
        omega,
        m_tilde,
        first: lo,
        values,
    })
}

/// `T(i)` for each `i` in an arbitrary index set.
///
/// `T(i) = |sum_{l=i-m}^{i} e^{i w (l-i)} X_l - sum_{l=i+1}^{i+m+1} e^{i w (l-i)} X_l| / sqrt(2m)`.
pub fn local_contrast_profile(
    x: &TimeSeries,
    omega: f64,
    m_tilde: usize,
    indices: &[usize],
) -> Result<Vec<f64>> {
    let (Some(&lo), Some(&hi)) = (indices.iter().min(), indices.iter().max()) else {
        return Ok(Vec::new());
    };
    let profile = local_contrast_range(x, omega, m_tilde, lo, hi)?;
    Ok(indices.iter().map(|&i| profile.at(i)).collect())
}

/// Phase-free block contrasts `D(i)` for the second-stage bootstrap.
///
/// For any anchor `j`, `Phi_i(j) + i Psi_i(j) = e^{-i omega j} D(i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalContrastBlocks {
    pub omega: f64,
    pub m_prime: usize,
    pub first: usize,
    values: Vec<Complex64>,
}

impl LocalContrastBlocks {
    /// `D(i)` for 1-based `i`.
    pub fn at(&self, i: usize) -> Complex64 {
        self.values[i - self.first]
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn last(&self) -> usize {
        self.first + self.values.len() - 1
    }

    /// `Upsilon_i(j) = Phi_i(j) + i Psi_i(j)`.
    pub fn upsilon(&self, i: usize, j: usize) -> Complex64 {
        cis(-self.omega * j as f64) * self.at(i)
    }
}

pub fn local_contrast_blocks(
    x: &TimeSeries,
    omega: f64,
    m_prime: usize,
    lo: usize,
    hi: usize,
) -> Result<LocalContrastBlocks> {
    if m_prime == 0 {
        return Err(invalid("m_prime", "must be positive"));
    }
    check_window(x.len(), m_prime, lo, hi)?;
    let w = twiddles(omega, x.len());
    let norm = (2.0 * m_prime as f64).sqrt();
    let values = window_contrast(x.values(), &w, m_prime, lo, hi)
        .into_iter()
        .map(|c| c / norm)
        .collect();
    Ok(LocalContrastBlocks {
        omega,
        m_prime,
        first: lo,
        values,
    })
}
