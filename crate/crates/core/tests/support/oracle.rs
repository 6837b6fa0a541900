//! Brute-force oracles for the sliding and streaming computations.
//!
//! Every check recomputes a quantity straight from its defining sum and
//! returns a description of the first mismatch. The deterministic
//! [`suite`] runs each check on fixed inputs.

#![allow(dead_code)]

use spindle_core::bootstrap::{
    empirical_quantile, multipliers, stage1_bootstrap_stat, stage2_bootstrap_stat, Stage1Bootstrap,
};
use spindle_core::spectral::{
    cusum_field, dppt_profile, local_contrast_blocks, local_contrast_range,
    progressive_partial_sums, sliding_block_sums,
};
use spindle_core::{
    algorithm1, algorithm2, build_grid, Complex64, Stage1Config, Stage2Config, TimeSeries,
};

pub type Check = Result<(), String>;

/// Standard normal sample keyed by `seed`.
pub fn gaussian(seed: u64, n: usize) -> Vec<f64> {
    multipliers(seed, 0, n)
}

fn cis(theta: f64) -> Complex64 {
    Complex64::new(theta.cos(), theta.sin())
}

fn series(x: &[f64]) -> TimeSeries {
    TimeSeries::new(x.to_vec()).expect("oracle inputs are valid")
}

fn close(what: &str, got: Complex64, want: Complex64, tol: f64) -> Check {
    if (got - want).norm() <= tol {
        Ok(())
    } else {
        Err(format!("{what}: got {got}, want {want}, tol {tol:e}"))
    }
}

fn close_rel(what: &str, got: f64, want: f64, rel: f64) -> Check {
    if (got - want).abs() <= rel * want.abs().max(1e-300) || got == want {
        Ok(())
    } else {
        Err(format!("{what}: got {got}, want {want}, rel {rel:e}"))
    }
}

/// `sum_{l=lo}^{hi} X_l e^{i omega l}`.
fn direct(x: &[f64], omega: f64, lo: usize, hi: usize) -> Complex64 {
    (lo..=hi).map(|l| cis(omega * l as f64) * x[l - 1]).sum()
}

/// Tolerance for sums over `x`: `rel` times the sum of absolute values.
fn scale(x: &[f64], rel: f64) -> f64 {
    rel * (1.0 + x.iter().map(|v| v.abs()).sum::<f64>())
}

pub fn partial_sums(x: &[f64], omega: f64) -> Check {
    let l = progressive_partial_sums(&series(x), omega);
    let tol = scale(x, 1e-9);
    for k in 1..=x.len() {
        close(&format!("L({k})"), l.at(k), direct(x, omega, 1, k), tol)?;
    }
    Ok(())
}

pub fn block_sums(x: &[f64], m: usize, omega: f64) -> Check {
    let e = sliding_block_sums(&series(x), m, omega).map_err(|e| e.to_string())?;
    let tol = scale(x, 1e-9);
    for j in 1..=x.len() - m {
        close(
            &format!("E({j})"),
            e.at(j),
            direct(x, omega, j, j + m - 1),
            tol,
        )?;
    }
    Ok(())
}

/// `T(i)` over its whole admissible range.
pub fn local_contrast(x: &[f64], omega: f64, m_tilde: usize) -> Check {
    let n = x.len();
    let t = local_contrast_range(&series(x), omega, m_tilde, m_tilde + 1, n - m_tilde - 1)
        .map_err(|e| e.to_string())?;
    let norm = (2.0 * m_tilde as f64).sqrt();
    let tol = scale(x, 1e-9);
    for i in m_tilde + 1..=n - m_tilde - 1 {
        let phase = cis(-omega * i as f64);
        let c =
            phase * (direct(x, omega, i - m_tilde, i) - direct(x, omega, i + 1, i + m_tilde + 1));
        let want = c.norm() / norm;
        if (t.at(i) - want).abs() > tol {
            return Err(format!("T({i}): got {}, want {want}", t.at(i)));
        }
    }
    Ok(())
}

/// `Phi_i(j) + i Psi_i(j)` straight from the cosine and sine sums.
fn upsilon_direct(x: &[f64], omega: f64, m_prime: usize, i: usize, j: usize) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for l in i - m_prime..=i {
        acc += cis(omega * (l as f64 - j as f64)) * x[l - 1];
    }
    for l in i + 1..=i + m_prime + 1 {
        acc -= cis(omega * (l as f64 - j as f64)) * x[l - 1];
    }
    acc / (2.0 * m_prime as f64).sqrt()
}

/// Blocks against their definition at anchor `j`, then modulus invariance
/// of weighted sums under the anchor phase.
pub fn phase_factoring(x: &[f64], omega: f64, m_prime: usize, j: usize, weights: &[f64]) -> Check {
    let n = x.len();
    let d = local_contrast_blocks(&series(x), omega, m_prime, m_prime + 1, n - m_prime - 1)
        .map_err(|e| e.to_string())?;
    for i in d.first..=d.last() {
        close(
            &format!("Upsilon_{i}({j})"),
            d.upsilon(i, j),
            upsilon_direct(x, omega, m_prime, i, j),
            1e-9,
        )?;
    }
    let mut via_d = Complex64::new(0.0, 0.0);
    let mut via_u = Complex64::new(0.0, 0.0);
    for (i, &c) in (d.first..=d.last()).zip(weights.iter().cycle()) {
        via_d += d.at(i) * c;
        via_u += upsilon_direct(x, omega, m_prime, i, j) * c;
    }
    if (via_d.norm() - via_u.norm()).abs() > 1e-9 {
        return Err(format!(
            "weighted modulus: {} vs {}",
            via_d.norm(),
            via_u.norm()
        ));
    }
    Ok(())
}

/// Streaming stage-1 draws against the triple loop over replicates,
/// frequencies and partial-sum positions.
pub fn stage1_streaming(x: &[f64], freqs: &[f64], m: usize, seed: u64, replicates: usize) -> Check {
    let n = x.len();
    let count = n - m;
    let boot = Stage1Bootstrap::new(x, freqs, m, seed, replicates).map_err(|e| e.to_string())?;
    let draws = boot.draws();
    let blocks: Vec<Vec<Complex64>> = freqs
        .iter()
        .map(|&w| (1..=count).map(|j| direct(x, w, j, j + m - 1)).collect())
        .collect();
    let ts = series(x);
    let sliding: Vec<_> = freqs
        .iter()
        .map(|&w| sliding_block_sums(&ts, m, w).unwrap())
        .collect();
    for (l, &got) in draws.iter().enumerate() {
        let g = multipliers(seed, l as u64, count);
        let mut best = 0.0f64;
        for e in &blocks {
            for k in 1..=count {
                let s: Complex64 = (0..k).map(|j| e[j] * g[j]).sum();
                best = best.max(s.norm());
            }
        }
        let want = best / ((m * count) as f64).sqrt();
        close_rel(&format!("stage-1 draw {l}"), got, want, 1e-10)?;
        close_rel(
            &format!("stage-1 per-replicate stat {l}"),
            stage1_bootstrap_stat(&sliding, m, n, &g),
            want,
            1e-10,
        )?;
    }
    Ok(())
}

/// Stage-2 bootstrap statistic against the anchor-phased form
/// `max_j |sum_left Upsilon_i(j) G_i - sum_right Upsilon_i(j) G_i| / sqrt(2 m~)`.
pub fn stage2_upsilon(x: &[f64], omega: f64, m_tilde: usize, m_prime: usize, seed: u64) -> Check {
    let n = x.len();
    let d = local_contrast_blocks(&series(x), omega, m_prime, m_prime + 1, n - m_prime - 1)
        .map_err(|e| e.to_string())?;
    let anchors: Vec<usize> = (m_tilde + m_prime + 1..=n - m_tilde - m_prime - 2).collect();
    for l in 0..4u64 {
        let g = multipliers(seed, l, n);
        let got = stage2_bootstrap_stat(&d, m_tilde, &anchors, &g).map_err(|e| e.to_string())?;
        let mut best = 0.0f64;
        for &j in &anchors {
            let mut acc = Complex64::new(0.0, 0.0);
            for i in j - m_tilde..=j {
                acc += upsilon_direct(x, omega, m_prime, i, j) * g[i - 1];
            }
            for i in j + 1..=j + m_tilde + 1 {
                acc -= upsilon_direct(x, omega, m_prime, i, j) * g[i - 1];
            }
            best = best.max(acc.norm());
        }
        close_rel(
            &format!("stage-2 draw {l}"),
            got,
            best / (2.0 * m_tilde as f64).sqrt(),
            1e-10,
        )?;
    }
    Ok(())
}

/// `F`, `T` and `|C_n|` scale by `|c|`.
pub fn scaling(x: &[f64], c: f64, omega: f64) -> Check {
    let n = x.len();
    let a = series(x);
    let b = a.scaled(c);
    let freqs = [omega, omega * 0.5, 3.0];
    let (pa, pb) = (dppt_profile(&a, &freqs), dppt_profile(&b, &freqs));
    for (u, v) in pa.values.iter().zip(&pb.values) {
        close_rel("F", *v, c.abs() * u, 1e-12)?;
    }
    let mt = (n / 8).max(1);
    let ta = local_contrast_range(&a, omega, mt, mt + 1, n - mt - 1).unwrap();
    let tb = local_contrast_range(&b, omega, mt, mt + 1, n - mt - 1).unwrap();
    for (u, v) in ta.values.iter().zip(&tb.values) {
        if (v - c.abs() * u).abs() > 1e-12 * (1.0 + c.abs() * u) {
            return Err(format!("T: {v} vs {}", c.abs() * u));
        }
    }
    let ca = cusum_field(&a, &freqs, 1).unwrap();
    let cb = cusum_field(&b, &freqs, 1).unwrap();
    for (ra, rb) in ca.values.iter().zip(&cb.values) {
        for (u, v) in ra.iter().zip(rb) {
            if (v - c.abs() * u).abs() > 1e-12 * (1.0 + c.abs() * u) {
                return Err(format!("C_n: {v} vs {}", c.abs() * u));
            }
        }
    }
    Ok(())
}

/// Negating every multiplier leaves both bootstrap statistics unchanged.
pub fn sign_flip(x: &[f64], omega: f64, seed: u64) -> Check {
    let n = x.len();
    let ts = series(x);
    let m = 6;
    let blocks = vec![sliding_block_sums(&ts, m, omega).unwrap()];
    let g = multipliers(seed, 0, n);
    let neg: Vec<f64> = g.iter().map(|v| -v).collect();
    let (a, b) = (
        stage1_bootstrap_stat(&blocks, m, n, &g),
        stage1_bootstrap_stat(&blocks, m, n, &neg),
    );
    if a != b {
        return Err(format!("stage 1: {a} vs {b}"));
    }
    let (mt, mp) = (8, 3);
    let d = local_contrast_blocks(&ts, omega, mp, mp + 1, n - mp - 1).unwrap();
    let anchors: Vec<usize> = (mt + mp + 1..=n - mt - mp - 2).collect();
    let a = stage2_bootstrap_stat(&d, mt, &anchors, &g).unwrap();
    let b = stage2_bootstrap_stat(&d, mt, &anchors, &neg).unwrap();
    if a != b {
        return Err(format!("stage 2: {a} vs {b}"));
    }
    Ok(())
}

/// Nearest-rank quantiles: the `ceil(level K)`-th order statistic.
pub fn quantile_table() -> Check {
    let shuffled = |k: usize| -> Vec<f64> { (0..k).map(|i| ((i * 37) % k + 1) as f64).collect() };
    let table: [(usize, f64, f64); 8] = [
        (1, 0.5, 1.0),
        (3, 0.5, 2.0),
        (4, 0.5, 2.0),
        (10, 0.95, 10.0),
        (20, 0.95, 19.0),
        (300, 0.95, 285.0),
        (1000, 0.95, 950.0),
        (1000, 0.9, 900.0),
    ];
    for (k, level, want) in table {
        let got = empirical_quantile(&shuffled(k), level).map_err(|e| e.to_string())?;
        if got != want {
            return Err(format!("K = {k}, level {level}: got {got}, want {want}"));
        }
    }
    Ok(())
}

fn strictly_decreasing(what: &str, sizes: &[usize]) -> Check {
    if sizes.windows(2).all(|w| w[1] < w[0]) {
        Ok(())
    } else {
        Err(format!(
            "{what} candidate sizes not strictly decreasing: {sizes:?}"
        ))
    }
}

/// Candidate sets shrink strictly on every accepted iteration of both
/// algorithms, checked on inputs with several strong signals.
pub fn candidate_shrinkage() -> Check {
    let n = 400;
    let noise = gaussian(11, n);
    let tones: Vec<f64> = (1..=n)
        .map(|i| {
            let t = i as f64;
            3.0 * (0.5 * t).cos()
                + 3.0 * (1.3 * t).cos()
                + 3.0 * (2.4 * t).sin()
                + 0.3 * noise[i - 1]
        })
        .collect();
    let grid = build_grid(n, 0.1, 0.02).map_err(|e| e.to_string())?;
    let r1 = algorithm1(
        &series(&tones),
        &Stage1Config {
            m: 8,
            replicates: 100,
            alpha: 0.05,
            grid,
            seed: 1,
        },
    )
    .map_err(|e| e.to_string())?;
    if r1.detected().len() < 3 {
        return Err(format!(
            "expected three detections, got {:?}",
            r1.detected()
        ));
    }
    strictly_decreasing(
        "stage 1",
        &r1.iterations
            .iter()
            .map(|it| it.candidates)
            .collect::<Vec<_>>(),
    )?;

    let omega = 0.9;
    let bursts: Vec<f64> = (1..=n)
        .map(|i| {
            let on = (60..140).contains(&i) || (250..330).contains(&i);
            let amp = if on { 3.0 } else { 0.0 };
            amp * (omega * i as f64).cos() + 0.3 * noise[i - 1]
        })
        .collect();
    let r2 = algorithm2(
        &series(&bursts),
        omega,
        &Stage2Config {
            m_tilde: 20,
            m_prime: 5,
            replicates: 100,
            beta: 0.05,
            seed: 2,
        },
    )
    .map_err(|e| e.to_string())?;
    if r2.change_points().len() < 2 {
        return Err(format!(
            "expected change points, got {:?}",
            r2.change_points()
        ));
    }
    strictly_decreasing(
        "stage 2",
        &r2.iterations
            .iter()
            .map(|it| it.candidates)
            .collect::<Vec<_>>(),
    )
}

/// Every check on fixed inputs, labelled.
pub fn suite() -> Vec<(&'static str, Check)> {
    let x256 = gaussian(1, 256);
    let x128 = gaussian(2, 128);
    let x120 = gaussian(3, 120);
    let freqs: Vec<f64> = (0..50).map(|k| 0.1 + k as f64 * 0.06).collect();
    let weights = gaussian(4, 64);
    let run_all = |f: &dyn Fn(f64) -> Check| [0.1, 0.77, 2.0, 3.1].iter().try_for_each(|&w| f(w));
    vec![
        (
            "partial sums vs direct",
            run_all(&|w| partial_sums(&x256, w)),
        ),
        (
            "block sums vs direct",
            run_all(&|w| [1, 7, 40].iter().try_for_each(|&m| block_sums(&x256, m, w))),
        ),
        (
            "local contrast vs direct",
            run_all(&|w| {
                [3, 20]
                    .iter()
                    .try_for_each(|&m| local_contrast(&x256, w, m))
            }),
        ),
        (
            "phase factoring",
            run_all(&|w| {
                [30, 128]
                    .iter()
                    .try_for_each(|&j| phase_factoring(&x256, w, 5, j, &weights))
            }),
        ),
        (
            "stage-1 streaming vs triple loop",
            stage1_streaming(&x128, &freqs, 6, 9, 4),
        ),
        (
            "stage-2 vs anchor-phased form",
            stage2_upsilon(&x120, 0.9, 10, 4, 5),
        ),
        (
            "scaling equivariance",
            [-2.5, 0.3, 7.0]
                .iter()
                .try_for_each(|&c| scaling(&x256, c, 0.77)),
        ),
        ("multiplier sign flip", sign_flip(&x256, 1.1, 6)),
        ("nearest-rank quantiles", quantile_table()),
        ("candidate-set shrinkage", candidate_shrinkage()),
    ]
}
