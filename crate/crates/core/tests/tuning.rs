//! Minimum-volatility selection against hand-computed volatilities.

use spindle_core::signal::simulate_series;
use spindle_core::tuning::{
    arithmetic_candidates, mv_select_m_prime, mv_select_m_tilde, mv_select_stage1_m,
    volatility_from_table,
};
use spindle_core::{MeanSpec, NoiseModel, TimeSeries};

#[test]
fn volatility_table_oracle() {
    // Curve values at m_{-2}..m_{l+3} for l = 2 candidates, two points each.
    let table: Vec<Vec<f64>> = vec![
        vec![1.0, 0.0],
        vec![2.0, 0.0],
        vec![3.0, 0.0],
        vec![4.0, 1.0],
        vec![5.0, 0.0],
        vec![6.0, 0.0],
        vec![7.0, 0.0],
        vec![14.0, 0.0],
    ];
    let v = volatility_from_table(&table);
    // Window 1..7: variance 28/6 plus one spike 1 over 7 points: (1 - 1/7) / 6.
    let first = 28.0 / 6.0 + (6.0 / 7.0) / 6.0;
    // Window 2..8 = {2,3,4,5,6,7,14}: mean 41/7.
    let mean: f64 = 41.0 / 7.0;
    let ss: f64 = [2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 14.0]
        .iter()
        .map(|x: &f64| (x - mean).powi(2))
        .sum();
    let second = ss / 6.0 + (6.0 / 7.0) / 6.0;
    assert_eq!(v.len(), 2);
    assert!((v[0] - first).abs() < 1e-12, "{} vs {first}", v[0]);
    assert!((v[1] - second).abs() < 1e-12, "{} vs {second}", v[1]);
}

#[test]
fn short_tables_give_nothing() {
    assert!(volatility_from_table(&vec![vec![1.0]; 6]).is_empty());
}

#[test]
fn candidates_are_arithmetic() {
    assert_eq!(arithmetic_candidates(4, 14, 6), vec![4, 6, 8, 10, 12, 14]);
    assert_eq!(arithmetic_candidates(5, 5, 8), vec![5]);
    assert_eq!(arithmetic_candidates(3, 6, 8), vec![3, 4, 5, 6]);
}

fn noise(n: usize, seed: u64) -> TimeSeries {
    simulate_series(&MeanSpec::two_spindle(n), &NoiseModel::m1(), n, seed).unwrap()
}

/// Every curve is quadratic in the data, so volatilities scale by `c^4` and
/// the choice is scale free.
#[test]
fn volatility_scales_with_fourth_power() {
    let x = noise(600, 9);
    let c = 3.0;
    let y = x.scaled(c);
    let freqs = [0.4, 1.1, 2.3];
    let check = |a: &spindle_core::MvCurve, b: &spindle_core::MvCurve| {
        assert_eq!(a.chosen, b.chosen);
        for (u, v) in a.volatility.iter().zip(&b.volatility) {
            assert!(
                (v - c.powi(4) * u).abs() <= 1e-9 * v.abs().max(1e-300),
                "{v} vs {}",
                c.powi(4) * u
            );
        }
    };
    let cands = [6, 8, 10, 12];
    check(
        &mv_select_stage1_m(&x, &freqs, &cands, 12).unwrap(),
        &mv_select_stage1_m(&y, &freqs, &cands, 12).unwrap(),
    );
    let mt = [30, 40, 50, 60];
    check(
        &mv_select_m_tilde(&x, 1.0, &mt).unwrap(),
        &mv_select_m_tilde(&y, 1.0, &mt).unwrap(),
    );
    let mp = [4, 6, 8, 10];
    check(
        &mv_select_m_prime(&x, 1.0, 40, &mp).unwrap(),
        &mv_select_m_prime(&y, 1.0, 40, &mp).unwrap(),
    );
}

/// Direct evaluation of the local-window curve for one candidate list.
#[test]
fn m_tilde_curve_matches_direct_evaluation() {
    let n = 300;
    let x = noise(n, 4);
    let omega = 0.8;
    let cands = [20, 24, 28];
    let curve = |mt: usize| -> f64 {
        let t = spindle_core::spectral::local_contrast_range(&x, omega, mt, mt + 1, n - mt - 1)
            .unwrap();
        t.values.iter().map(|v| v * v).sum::<f64>() / t.values.len() as f64
    };
    let ext: Vec<usize> = (-3i64..6)
        .map(|k| (20 + 4 * k).clamp(2, 149) as usize)
        .collect();
    let table: Vec<Vec<f64>> = ext.iter().map(|&m| vec![curve(m)]).collect();
    let want = volatility_from_table(&table);
    let got = mv_select_m_tilde(&x, omega, &cands).unwrap();
    assert_eq!(got.volatility, want);
    let best = (0..3)
        .min_by(|&a, &b| want[a].total_cmp(&want[b]).then(a.cmp(&b)))
        .unwrap();
    assert_eq!(got.chosen, cands[best]);
}

#[test]
fn invalid_candidates_are_rejected() {
    let x = noise(300, 1);
    assert!(mv_select_m_tilde(&x, 1.0, &[20, 25, 31]).is_err());
    assert!(mv_select_m_tilde(&x, 1.0, &[200]).is_err());
    assert!(mv_select_m_prime(&x, 1.0, 20, &[10, 20]).is_err());
    assert!(mv_select_stage1_m(&x, &[], &[4, 6], 10).is_err());
}
