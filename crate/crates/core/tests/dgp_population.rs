use genbayes_core::dgp::{gen_causal, standardize_tau, true_ate_raw};
use genbayes_core::linalg::{ols, Matrix};
use genbayes_core::stats;
use statrs::distribution::{ChiSquared, ContinuousCDF};

#[test]
fn population_moments_at_one_million() {
    let n = 1_000_000;
    let ds = gen_causal(n, 1.0, 2024).unwrap();
    let nf = n as f64;
    for j in 0..3 {
        let c = ds.x.column(j);
        assert!(stats::mean(&c).abs() < 4.0 / nf.sqrt(), "x{j} mean");
        assert!((stats::variance(&c) - 1.0).abs() < 0.01, "x{j} var");
    }

    let truth = ds.truth().unwrap();
    let raw = &truth.raw.as_ref().unwrap().values;
    // tau_raw - 1 = -2 x2 x3 has variance 4; its square has variance 16 * 9 - 16
    let mc_mean = (4.0 / nf).sqrt();
    let mc_var = ((16.0 * 9.0 - 16.0) / nf).sqrt();
    assert!((stats::mean(raw) - 1.0).abs() < 3.0 * mc_mean);
    assert!((stats::variance(raw) - 4.0).abs() < 3.0 * mc_var);
    assert!((true_ate_raw(&ds).unwrap() - 1.0).abs() < 3.0 * mc_mean);

    let s = standardize_tau(raw).unwrap();
    assert!((s.mean - 1.0).abs() < 0.01 && (s.sd - 2.0).abs() < 0.01);

    let treated = ds.z.iter().filter(|&&z| z).count() as f64 / nf;
    let pi_bar = stats::mean(&truth.pi);
    let binom_sd = truth.pi.iter().map(|p| p * (1.0 - p)).sum::<f64>().sqrt() / nf;
    assert!((treated - pi_bar).abs() < 3.0 * binom_sd, "{treated} vs {pi_bar}");
}

/// Logistic regression by iteratively reweighted least squares; returns the deviance.
fn logistic_deviance(x: &Matrix, z: &[bool]) -> f64 {
    let (n, p) = (x.rows(), x.cols());
    let mut beta = vec![0.0; p];
    for _ in 0..50 {
        let mut wx = Matrix::zeros(n, p);
        let mut wy = vec![0.0; n];
        for i in 0..n {
            let eta: f64 = x.row(i).iter().zip(&beta).map(|(a, b)| a * b).sum();
            let mu = 1.0 / (1.0 + (-eta).exp());
            let w = (mu * (1.0 - mu)).max(1e-10);
            let target = eta + (f64::from(u8::from(z[i])) - mu) / w;
            let sw = w.sqrt();
            for (d, s) in wx.row_mut(i).iter_mut().zip(x.row(i)) {
                *d = sw * s;
            }
            wy[i] = sw * target;
        }
        let next = ols(&wx, &Matrix::column_vector(&wy)).unwrap().coef.column(0);
        let step: f64 = next.iter().zip(&beta).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        beta = next;
        if step < 1e-10 {
            break;
        }
    }
    (0..n)
        .map(|i| {
            let eta: f64 = x.row(i).iter().zip(&beta).map(|(a, b)| a * b).sum();
            let mu = (1.0 / (1.0 + (-eta).exp())).clamp(1e-15, 1.0 - 1e-15);
            if z[i] {
                -2.0 * mu.ln()
            } else {
                -2.0 * (1.0 - mu).ln()
            }
        })
        .sum()
}

#[test]
fn covariates_add_nothing_beyond_the_propensity() {
    let chi = ChiSquared::new(3.0).unwrap();
    let mut pvalues = Vec::new();
    for seed in 0..5 {
        let ds = gen_causal(2000, 1.0, 500 + seed).unwrap();
        let pi = &ds.truth().unwrap().pi;
        let n = ds.n();
        let mut reduced = Matrix::zeros(n, 2);
        let mut full = Matrix::zeros(n, 5);
        for i in 0..n {
            let logit = (pi[i] / (1.0 - pi[i])).ln();
            reduced.row_mut(i).copy_from_slice(&[1.0, logit]);
            let x = ds.x.row(i);
            full.row_mut(i).copy_from_slice(&[1.0, logit, x[0], x[1], x[2]]);
        }
        let drop = logistic_deviance(&reduced, &ds.z) - logistic_deviance(&full, &ds.z);
        assert!(drop > -1e-6, "deviance cannot increase with more columns");
        pvalues.push(1.0 - chi.cdf(drop.max(0.0)));
    }
    assert!(pvalues.iter().all(|&p| p > 0.001), "{pvalues:?}");
}
