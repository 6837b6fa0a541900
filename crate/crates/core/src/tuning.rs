//! Minimum-volatility bandwidth selection.
//!
//! For a candidate sequence `m_1 < ... < m_l` with common step `d`, a curve
//! `V_m` (a vector of points for the first stage, a scalar for the second) is
//! evaluated at `m_{-2}, ..., m_{l+3}`, where out-of-range members continue
//! the arithmetic sequence and are clamped to the admissible range. The
//! volatility of candidate `i` is the sum over points of the unbiased sample
//! variance of `V_{m_{i-3}}, ..., V_{m_{i+3}}`, and the smallest candidate
//! attaining the minimum is chosen.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid, Result};
use crate::series::TimeSeries;
use crate::spectral::{block_sums_into, local_contrast_blocks, local_contrast_range, twiddles};

/// Neighbours on each side of a candidate in the volatility window.
pub const HALF_WINDOW: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TuningOptions {
    /// Grid points used by the first-stage curve.
    pub freq_points: usize,
    /// Number of partial-sum positions `k` used by the first-stage curve.
    pub k_points: usize,
}

impl Default for TuningOptions {
    fn default() -> Self {
        Self {
            freq_points: 50,
            k_points: 50,
        }
    }
}

impl TuningOptions {
    pub fn k_stride(&self, n: usize) -> usize {
        (n / self.k_points.max(1)).max(1)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MvCurve {
    pub candidates: Vec<usize>,
    pub volatility: Vec<f64>,
    pub chosen: usize,
}

/// `count` arithmetic candidates from `lo` towards `hi` with integer step
/// `max(1, (hi - lo) / (count - 1))`, never exceeding `hi`.
pub fn arithmetic_candidates(lo: usize, hi: usize, count: usize) -> Vec<usize> {
    if hi <= lo || count <= 1 {
        return vec![lo];
    }
    let step = ((hi - lo) / (count - 1)).max(1);
    (0..count)
        .map(|i| lo + i * step)
        .take_while(|&m| m <= hi)
        .collect()
}

/// `floor(n^0.3) ..= floor(n^0.5)` in 8 steps.
pub fn default_m_candidates(n: usize) -> Vec<usize> {
    let nf = n as f64;
    let lo = (nf.powf(0.3).floor() as usize).max(2);
    arithmetic_candidates(lo, nf.sqrt().floor() as usize, 8)
}

/// `floor(n^0.55) ..= floor(n^0.75)` in 8 steps, restricted to `m~ < n/4`.
pub fn default_m_tilde_candidates(n: usize) -> Vec<usize> {
    let nf = n as f64;
    let lo = (nf.powf(0.55).floor() as usize).max(2);
    let mut c = arithmetic_candidates(lo, nf.powf(0.75).floor() as usize, 8);
    c.retain(|&m| 4 * m < n);
    if c.is_empty() {
        c.push(((n.saturating_sub(1)) / 4).max(2));
    }
    c
}

/// `4 ..= floor(m~^0.7)` in 6 steps, restricted to `m' < m~`.
pub fn default_m_prime_candidates(m_tilde: usize) -> Vec<usize> {
    let hi = (m_tilde as f64).powf(0.7).floor() as usize;
    let mut c = arithmetic_candidates(4, hi, 6);
    c.retain(|&m| m < m_tilde);
    if c.is_empty() {
        c.push((m_tilde.saturating_sub(1)).max(1));
    }
    c
}

fn check_candidates(candidates: &[usize]) -> Result<usize> {
    let Some(&first) = candidates.first() else {
        return Err(invalid("candidates", "empty candidate list"));
    };
    if first == 0 {
        return Err(invalid("candidates", "bandwidths must be positive"));
    }
    if candidates.len() == 1 {
        return Ok(1);
    }
    let step = candidates[1].checked_sub(first).filter(|&s| s > 0);
    let Some(step) = step else {
        return Err(invalid("candidates", "must be strictly increasing"));
    };
    if candidates.windows(2).any(|w| w[1] != w[0] + step) {
        return Err(invalid("candidates", "must form an arithmetic sequence"));
    }
    Ok(step)
}

/// `m_{-2}, ..., m_{l+3}` clamped to `[lo, hi]`.
fn extended_bandwidths(candidates: &[usize], step: usize, lo: usize, hi: usize) -> Vec<usize> {
    let first = candidates[0] as i64;
    let step = step as i64;
    let h = HALF_WINDOW as i64;
    (-h..candidates.len() as i64 + h)
        .map(|i| (first + i * step).clamp(lo as i64, hi as i64) as usize)
        .collect()
}

/// Volatility of each candidate from curve values at the extended sequence.
///
/// `table[e]` holds the curve at extended index `e`, i.e. at `m_{e-2}`;
/// `table.len()` must be `l + 6`. Every row must have the same length.
pub fn volatility_from_table(table: &[Vec<f64>]) -> Vec<f64> {
    let w = 2 * HALF_WINDOW + 1;
    if table.len() < w {
        return Vec::new();
    }
    let points = table[0].len();
    (0..=table.len() - w)
        .map(|i| {
            let rows = &table[i..i + w];
            (0..points)
                .map(|p| {
                    let mean = rows.iter().map(|r| r[p]).sum::<f64>() / w as f64;
                    rows.iter().map(|r| (r[p] - mean).powi(2)).sum::<f64>() / (w - 1) as f64
                })
                .sum()
        })
        .collect()
}

fn pick(candidates: &[usize], volatility: Vec<f64>) -> MvCurve {
    let mut best = 0;
    for (i, &v) in volatility.iter().enumerate() {
        if v < volatility[best] {
            best = i;
        }
    }
    MvCurve {
        candidates: candidates.to_vec(),
        chosen: candidates[best],
        volatility,
    }
}

/// Evaluates `curve` once per distinct extended bandwidth.
fn curve_table<F>(bandwidths: &[usize], curve: F) -> Result<Vec<Vec<f64>>>
where
    F: Fn(usize) -> Result<Vec<f64>> + Sync,
{
    let mut distinct = bandwidths.to_vec();
    distinct.sort_unstable();
    distinct.dedup();
    let values: Vec<Vec<f64>> = distinct
        .par_iter()
        .map(|&m| curve(m))
        .collect::<Result<_>>()?;
    Ok(bandwidths
        .iter()
        .map(|m| values[distinct.binary_search(m).unwrap()].clone())
        .collect())
}

/// First-stage block size. The curve is
/// `V(k, w) = sum_{j<=k} |E_{j,m}(w)|^2 / (m (n - m))` at
/// `k = stride, 2 stride, ...` (up to `n` minus the largest evaluated
/// bandwidth) and at every frequency in `freqs`.
pub fn mv_select_stage1_m(
    x: &TimeSeries,
    freqs: &[f64],
    candidates: &[usize],
    k_stride: usize,
) -> Result<MvCurve> {
    let n = x.len();
    let step = check_candidates(candidates)?;
    if *candidates.last().unwrap() >= n {
        return Err(invalid(
            "candidates",
            format!("bandwidth must be below n = {n}"),
        ));
    }
    if freqs.is_empty() {
        return Err(invalid("freqs", "no tuning frequencies"));
    }
    let k_stride = k_stride.max(1);
    let ext = extended_bandwidths(candidates, step, 2, n - 2);
    let k_max = n - ext.iter().max().unwrap();
    let ks: Vec<usize> = (k_stride..=k_max).step_by(k_stride).collect();
    let ks = if ks.is_empty() { vec![k_max] } else { ks };
    let w: Vec<_> = freqs.iter().map(|&f| twiddles(f, n)).collect();
    let table = curve_table(&ext, |m| {
        let norm = (m * (n - m)) as f64;
        let mut re = vec![0.0; n - m];
        let mut im = vec![0.0; n - m];
        let mut out = Vec::with_capacity(ks.len() * w.len());
        for tw in &w {
            block_sums_into(x.values(), tw, m, &mut re, &mut im);
            let mut acc = 0.0;
            let mut next = ks.iter().peekable();
            for j in 0..k_max {
                acc += re[j] * re[j] + im[j] * im[j];
                if next.peek() == Some(&&(j + 1)) {
                    next.next();
                    out.push(acc / norm);
                }
            }
        }
        Ok(out)
    })?;
    Ok(pick(candidates, volatility_from_table(&table)))
}

/// Local window `m~`. The curve is the mean of `T(i)^2` over
/// `i = m~+1 ..= n-m~-1`.
pub fn mv_select_m_tilde(x: &TimeSeries, omega: f64, candidates: &[usize]) -> Result<MvCurve> {
    let n = x.len();
    let step = check_candidates(candidates)?;
    let hi = (n - 2) / 2;
    if *candidates.last().unwrap() > hi {
        return Err(invalid(
            "candidates",
            format!("m~ must be at most {hi} for n = {n}"),
        ));
    }
    let ext = extended_bandwidths(candidates, step, 2, hi);
    let table = curve_table(&ext, |mt| {
        let t = local_contrast_range(x, omega, mt, mt + 1, n - mt - 1)?;
        let mean = t.values.iter().map(|v| v * v).sum::<f64>() / t.values.len() as f64;
        Ok(vec![mean])
    })?;
    Ok(pick(candidates, volatility_from_table(&table)))
}

/// Block window `m'` given `m~`. The curve is
/// `sum_{j=m~+1}^{n-m~-1} sum_{i=j-m~}^{j+m~+1} |D(i)|^2 / (2 m~ (n - 2m~ - 1))`,
/// with `D(i)` taken as zero where its window leaves `1..=n`.
pub fn mv_select_m_prime(
    x: &TimeSeries,
    omega: f64,
    m_tilde: usize,
    candidates: &[usize],
) -> Result<MvCurve> {
    let n = x.len();
    let step = check_candidates(candidates)?;
    if *candidates.last().unwrap() >= m_tilde {
        return Err(invalid(
            "candidates",
            format!("m' must be below m~ = {m_tilde}"),
        ));
    }
    if 2 * m_tilde + 2 > n {
        return Err(invalid(
            "m_tilde",
            format!("{m_tilde} too large for n = {n}"),
        ));
    }
    let ext = extended_bandwidths(candidates, step, 2, n - 2);
    let table = curve_table(&ext, |mp| {
        // prefix[i] = sum_{l<=i} |D(l)|^2, zero outside the valid range.
        let mut prefix = vec![0.0; n + 1];
        if 2 * mp + 2 <= n {
            let d = local_contrast_blocks(x, omega, mp, mp + 1, n - mp - 1)?;
            for i in 1..=n {
                let v = if i >= d.first && i <= d.last() {
                    d.at(i).norm_sqr()
                } else {
                    0.0
                };
                prefix[i] = prefix[i - 1] + v;
            }
        }
        let total: f64 = (m_tilde + 1..=n - m_tilde - 1)
            .map(|j| prefix[j + m_tilde + 1] - prefix[j - m_tilde - 1])
            .sum();
        Ok(vec![total / (2 * m_tilde * (n - 2 * m_tilde - 1)) as f64])
    })?;
    Ok(pick(candidates, volatility_from_table(&table)))
}
