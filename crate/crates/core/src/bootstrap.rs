//! Overlapping-block multiplier bootstrap for both detection stages.
//!
//! Multipliers `G_{j,l}` are a pure function of `(key, l, j)`: replicate `l`
//! reads ChaCha stream `l` from its start. Stage-1 draws are
//!
//! ```text
//! F~_l(W) = max_{w in W} max_{1<=k<=n-m} |sum_{j<=k} E_{j,m}(w) G_{j,l}| / sqrt(m (n-m))
//! ```
//!
//! and are evaluated frequency by frequency, all replicates at once, so the
//! `p x (n-m)` block matrix never exists. Per-frequency maxima are folded
//! into fixed chunks of the grid; removing a neighbourhood from the candidate
//! set only re-sweeps the chunks it cuts.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::rng::fill_standard_normal;
use crate::spectral::{block_sums_into, BlockSums, LocalContrastBlocks, Phasor};

/// Grid points per cached chunk.
pub const CHUNK: usize = 64;

/// Standard normal multipliers `G_{1,l}, ..., G_{count,l}` of replicate `l`.
pub fn multipliers(seed: u64, replicate: u64, count: usize) -> Vec<f64> {
    let mut out = vec![0.0; count];
    fill_standard_normal(seed, replicate, &mut out);
    out
}

/// Nearest-rank quantile: the `ceil(level * K)`-th smallest value.
pub fn empirical_quantile(values: &[f64], level: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::EmptySample);
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(invalid("level", format!("{level} outside (0, 1)")));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let k = sorted.len();
    // Tolerate representation error in products like 0.95 * 300.
    let rank = ((level * k as f64) - 1e-9).ceil().clamp(1.0, k as f64) as usize;
    Ok(sorted[rank - 1])
}

/// Realized bootstrap statistics at one iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct BootstrapDraws {
    pub values: Vec<f64>,
    /// Significance level; the critical value is the `1 - level` quantile.
    pub level: f64,
}

impl BootstrapDraws {
    pub fn critical_value(&self) -> Result<f64> {
        empirical_quantile(&self.values, 1.0 - self.level)
    }
}

/// Stage-1 statistic of one replicate from precomputed block sums.
///
/// `g` holds `G_{1,l}, ..., G_{n-m,l}`.
pub fn stage1_bootstrap_stat(blocks: &[BlockSums], m: usize, n: usize, g: &[f64]) -> f64 {
    let count = n - m;
    let mut best = 0.0f64;
    for b in blocks {
        let mut acc = Complex64::new(0.0, 0.0);
        for (e, &gj) in b.values()[..count].iter().zip(&g[..count]) {
            acc += e * gj;
            best = best.max(acc.norm_sqr());
        }
    }
    (best / (m as f64 * count as f64)).sqrt()
}

/// Stage-1 multipliers laid out row-major by block index `j`: row `j` holds
/// `G_{j,1..=K}` contiguously.
#[derive(Debug, Clone)]
pub struct MultiplierMatrix {
    rows: usize,
    replicates: usize,
    data: Vec<f64>,
}

impl MultiplierMatrix {
    pub fn new(seed: u64, rows: usize, replicates: usize) -> Self {
        let columns: Vec<Vec<f64>> = (0..replicates)
            .into_par_iter()
            .map(|l| multipliers(seed, l as u64, rows))
            .collect();
        let mut data = vec![0.0; rows * replicates];
        for (l, col) in columns.iter().enumerate() {
            for (j, &v) in col.iter().enumerate() {
                data[j * replicates + l] = v;
            }
        }
        Self {
            rows,
            replicates,
            data,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn replicates(&self) -> usize {
        self.replicates
    }

    pub fn row(&self, j: usize) -> &[f64] {
        &self.data[j * self.replicates..(j + 1) * self.replicates]
    }

    /// Multipliers of one replicate, `G_{1,l}..G_{rows,l}`.
    pub fn column(&self, l: usize) -> Vec<f64> {
        (0..self.rows).map(|j| self.row(j)[l]).collect()
    }
}

struct SweepScratch {
    twiddles: Vec<Complex64>,
    er: Vec<f64>,
    ei: Vec<f64>,
    re: Vec<f64>,
    im: Vec<f64>,
    best: Vec<f64>,
}

impl SweepScratch {
    fn new(n: usize, m: usize, k: usize) -> Self {
        Self {
            twiddles: vec![Complex64::new(0.0, 0.0); n],
            er: vec![0.0; n - m],
            ei: vec![0.0; n - m],
            re: vec![0.0; k],
            im: vec![0.0; k],
            best: vec![0.0; k],
        }
    }
}

#[inline(always)]
fn accumulate_generic(
    er: &[f64],
    ei: &[f64],
    g: &MultiplierMatrix,
    re: &mut [f64],
    im: &mut [f64],
    best: &mut [f64],
) {
    for (j, (&a, &b)) in er.iter().zip(ei).enumerate() {
        let row = g.row(j);
        for (((r, i), s), &gl) in re
            .iter_mut()
            .zip(im.iter_mut())
            .zip(best.iter_mut())
            .zip(row)
        {
            let nr = *r + a * gl;
            let ni = *i + b * gl;
            *r = nr;
            *i = ni;
            let q = nr * nr + ni * ni;
            *s = if q > *s { q } else { *s };
        }
    }
}

#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "avx2")]
unsafe fn accumulate_avx2(
    er: &[f64],
    ei: &[f64],
    g: &MultiplierMatrix,
    re: &mut [f64],
    im: &mut [f64],
    best: &mut [f64],
) {
    accumulate_generic(er, ei, g, re, im, best)
}

fn accumulate(
    er: &[f64],
    ei: &[f64],
    g: &MultiplierMatrix,
    re: &mut [f64],
    im: &mut [f64],
    best: &mut [f64],
) {
    #[cfg(target_arch = "x86_64")]
    {
        if std::is_x86_feature_detected!("avx2") {
            // SAFETY: the CPU supports AVX2, checked above. The kernel has no
            // FP contraction, so results match the generic path bit for bit.
            unsafe { accumulate_avx2(er, ei, g, re, im, best) };
            return;
        }
    }
    accumulate_generic(er, ei, g, re, im, best)
}

/// Folds `max_k |sum_{j<=k} E_j(w) G_{j,l}|^2` for every replicate into `out`.
fn sweep_frequency(
    x: &[f64],
    omega: f64,
    m: usize,
    g: &MultiplierMatrix,
    s: &mut SweepScratch,
    out: &mut [f64],
) {
    for (t, w) in s.twiddles.iter_mut().zip(Phasor::new(omega, 1)) {
        *t = w;
    }
    block_sums_into(x, &s.twiddles, m, &mut s.er, &mut s.ei);
    s.re.fill(0.0);
    s.im.fill(0.0);
    s.best.fill(0.0);
    accumulate(&s.er, &s.ei, g, &mut s.re, &mut s.im, &mut s.best);
    for (o, &b) in out.iter_mut().zip(&s.best) {
        if b > *o {
            *o = b;
        }
    }
}

/// Stage-1 bootstrap over a frequency grid with a removable candidate set.
pub struct Stage1Bootstrap<'a> {
    x: &'a [f64],
    freqs: &'a [f64],
    m: usize,
    g: MultiplierMatrix,
    /// Squared per-replicate maxima for each chunk; `None` once the chunk
    /// holds no active frequency.
    chunks: Vec<Option<Vec<f64>>>,
}

impl<'a> Stage1Bootstrap<'a> {
    /// Sweeps every frequency in `freqs` for `replicates` replicates keyed by
    /// `seed`.
    pub fn new(
        x: &'a [f64],
        freqs: &'a [f64],
        m: usize,
        seed: u64,
        replicates: usize,
    ) -> Result<Self> {
        let n = x.len();
        if m == 0 || m >= n {
            return Err(invalid(
                "m",
                format!("block size {m} must satisfy 1 <= m < n = {n}"),
            ));
        }
        if replicates == 0 {
            return Err(invalid("replicates", "must be positive"));
        }
        let g = MultiplierMatrix::new(seed, n - m, replicates);
        let mut boot = Self {
            x,
            freqs,
            m,
            g,
            chunks: Vec::new(),
        };
        let all = vec![true; freqs.len()];
        let n_chunks = freqs.len().div_ceil(CHUNK);
        boot.chunks = (0..n_chunks)
            .into_par_iter()
            .map(|c| boot.sweep_chunk(c, &all))
            .collect();
        Ok(boot)
    }

    pub fn replicates(&self) -> usize {
        self.g.replicates()
    }

    pub fn multipliers(&self) -> &MultiplierMatrix {
        &self.g
    }

    fn sweep_chunk(&self, c: usize, active: &[bool]) -> Option<Vec<f64>> {
        let lo = c * CHUNK;
        let hi = (lo + CHUNK).min(self.freqs.len());
        if !active[lo..hi].iter().any(|&a| a) {
            return None;
        }
        let mut scratch = SweepScratch::new(self.x.len(), self.m, self.g.replicates());
        let mut out = vec![0.0; self.g.replicates()];
        for (&omega, _) in self.freqs[lo..hi]
            .iter()
            .zip(&active[lo..hi])
            .filter(|(_, &a)| a)
        {
            sweep_frequency(self.x, omega, self.m, &self.g, &mut scratch, &mut out);
        }
        Some(out)
    }

    /// Re-sweeps the chunks containing any of `changed` (grid indices) using
    /// only the frequencies still marked active.
    pub fn refresh(&mut self, active: &[bool], changed: &[usize]) {
        let mut touched: Vec<usize> = changed.iter().map(|k| k / CHUNK).collect();
        touched.sort_unstable();
        touched.dedup();
        let updated: Vec<(usize, Option<Vec<f64>>)> = touched
            .par_iter()
            .map(|&c| (c, self.sweep_chunk(c, active)))
            .collect();
        for (c, v) in updated {
            self.chunks[c] = v;
        }
    }

    /// `F~_l(W_k)` for every replicate over the current active set.
    pub fn draws(&self) -> Vec<f64> {
        let norm = self.m as f64 * (self.x.len() - self.m) as f64;
        let mut best = vec![0.0f64; self.g.replicates()];
        for chunk in self.chunks.iter().flatten() {
            for (b, &v) in best.iter_mut().zip(chunk) {
                if v > *b {
                    *b = v;
                }
            }
        }
        best.into_iter().map(|b| (b / norm).sqrt()).collect()
    }
}

/// Stage-2 statistic of one replicate:
///
/// ```text
/// T^_l = max_{j in B} |sum_{i=j-m~}^{j} D(i) G_i - sum_{i=j+1}^{j+m~+1} D(i) G_i| / sqrt(2 m~)
/// ```
///
/// `anchors` must be sorted ascending; `g[i - 1]` is the multiplier at
/// absolute sample position `i`.
pub fn stage2_bootstrap_stat(
    d: &LocalContrastBlocks,
    m_tilde: usize,
    anchors: &[usize],
    g: &[f64],
) -> Result<f64> {
    let (Some(&lo), Some(&hi)) = (anchors.first(), anchors.last()) else {
        return Ok(0.0);
    };
    if lo < d.first + m_tilde || hi + m_tilde + 1 > d.last() {
        return Err(Error::IndexOutOfRange {
            index: if lo < d.first + m_tilde { lo } else { hi },
            lo: d.first + m_tilde,
            hi: d.last().saturating_sub(m_tilde + 1),
        });
    }
    let term = |i: usize| d.at(i) * g[i - 1];
    let mut left: Complex64 = (lo - m_tilde..=lo).map(term).sum();
    let mut right: Complex64 = (lo + 1..=lo + m_tilde + 1).map(term).sum();
    let mut best = 0.0f64;
    let mut next = anchors.iter().peekable();
    for j in lo..=hi {
        if j > lo {
            let moved = term(j);
            left += moved - term(j - m_tilde - 1);
            right += term(j + m_tilde + 1) - moved;
        }
        if next.peek() == Some(&&j) {
            next.next();
            best = best.max((left - right).norm_sqr());
        }
    }
    Ok((best / (2.0 * m_tilde as f64)).sqrt())
}

/// `K0` stage-2 draws for the anchor set, replicate `l` reading stream `l`.
pub fn stage2_draws(
    d: &LocalContrastBlocks,
    m_tilde: usize,
    anchors: &[usize],
    n: usize,
    seed: u64,
    replicates: usize,
) -> Result<Vec<f64>> {
    (0..replicates)
        .into_par_iter()
        .map(|l| {
            let g = multipliers(seed, l as u64, n);
            stage2_bootstrap_stat(d, m_tilde, anchors, &g)
        })
        .collect()
}
