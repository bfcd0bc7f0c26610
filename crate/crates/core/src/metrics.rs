//! Evaluation against ground truth, plus a linear baseline and self-checks.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::causal::{self, CatePosterior, CausalQuantileNet, Gate, LossComponents, TrainingGate};
use crate::dgp::{fmt_f64, true_ate, CausalDataset, ConjugateModel};
use crate::engine::InverseMap;
use crate::linalg::{ols, Matrix};
use crate::rng::Rng;
use crate::{stats, Error, Result};

/// Quantile levels used for the crossing rate.
pub const CROSSING_GRID: [f64; 9] = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9];

/// Anything that can produce per-unit effect posteriors and outcome quantiles.
pub trait CateModel {
    /// `m` effect draws per unit.
    fn posteriors(&self, ds: &CausalDataset, m: usize, seed: u64) -> Result<Vec<CatePosterior>>;
    /// Average treatment effect on a quantile grid of `grid` points.
    fn ate(&self, ds: &CausalDataset, grid: usize) -> Result<f64>;
    /// Outcome quantile at level `q[i]` for unit `i` under its factual treatment.
    fn outcome_quantiles(&self, ds: &CausalDataset, q: &[f64]) -> Result<Vec<f64>>;
    /// Final training loss, when the model has one.
    fn loss(&self) -> Option<LossComponents> {
        None
    }
}

impl CateModel for CausalQuantileNet {
    fn posteriors(&self, ds: &CausalDataset, m: usize, seed: u64) -> Result<Vec<CatePosterior>> {
        causal::cate_posteriors(self, ds, m, seed)
    }

    fn ate(&self, ds: &CausalDataset, grid: usize) -> Result<f64> {
        causal::ate_lorenz(self, ds, grid)
    }

    fn outcome_quantiles(&self, ds: &CausalDataset, q: &[f64]) -> Result<Vec<f64>> {
        let gate = match self.arch.training_gate {
            TrainingGate::Treatment => Gate::PerUnit(ds.z_f64()),
            TrainingGate::Propensity => Gate::Propensity,
        };
        Ok(causal::predict(self, &ds.x, q, &gate)?.y_quantile)
    }

    fn loss(&self) -> Option<LossComponents> {
        self.loss_trace.last().copied()
    }
}

/// Plug-in model that knows the generating surfaces: its effect posterior is
/// the true effect (zero width) and its outcome quantiles are exact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleModel {
    pub mu: Vec<f64>,
    pub tau: Vec<f64>,
    pub sigma: f64,
}

impl OracleModel {
    pub fn from_dataset(ds: &CausalDataset) -> Result<Self> {
        let t = ds.truth()?;
        Ok(OracleModel {
            mu: t.mu.clone(),
            tau: t.tau.clone(),
            sigma: ds.sigma,
        })
    }

    fn check(&self, ds: &CausalDataset) -> Result<()> {
        if self.tau.len() != ds.n() {
            return Err(Error::dim("oracle units", self.tau.len(), ds.n()));
        }
        Ok(())
    }
}

impl CateModel for OracleModel {
    fn posteriors(&self, ds: &CausalDataset, m: usize, _seed: u64) -> Result<Vec<CatePosterior>> {
        self.check(ds)?;
        Ok(self
            .tau
            .iter()
            .enumerate()
            .map(|(unit, &t)| CatePosterior { unit, draws: vec![t; m] })
            .collect())
    }

    fn ate(&self, ds: &CausalDataset, _grid: usize) -> Result<f64> {
        self.check(ds)?;
        Ok(stats::mean(&self.tau))
    }

    fn outcome_quantiles(&self, ds: &CausalDataset, q: &[f64]) -> Result<Vec<f64>> {
        self.check(ds)?;
        let normal = Normal::standard();
        Ok((0..ds.n())
            .map(|i| {
                let shift = if ds.z[i] { self.tau[i] } else { 0.0 };
                let noise = if self.sigma > 0.0 {
                    self.sigma * normal.inverse_cdf(q[i])
                } else {
                    0.0
                };
                self.mu[i] + shift + noise
            })
            .collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    /// Posterior draws per unit.
    pub m: usize,
    pub level: f64,
    pub seed: u64,
    /// Quantile grid for the ATE.
    pub grid: usize,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            m: 1000,
            level: 0.95,
            seed: 0,
            grid: 99,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub ate_true: f64,
    pub ate_est: f64,
    pub ate_sq_err: f64,
    /// Interval from draw-averaged effects across units.
    pub ate_ci_lo: f64,
    pub ate_ci_hi: f64,
    pub cate_rmse: f64,
    pub cate_corr: f64,
    pub coverage: f64,
    pub avg_interval_length: f64,
    pub crossing_rate: f64,
    pub pit_ks: f64,
    pub baseline_cate_rmse: f64,
    pub loss: Option<LossComponents>,
    pub n: usize,
    pub m: usize,
    pub level: f64,
    pub seed: u64,
}

/// Per-unit summaries backing the report.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitSummary {
    pub cate_mean: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub report: MetricsReport,
    pub units: Vec<UnitSummary>,
    pub posteriors: Vec<CatePosterior>,
}

const REPORT_KEYS: [&str; 22] = [
    "ate_true",
    "ate_est",
    "ate_sq_err",
    "ate_ci_lo",
    "ate_ci_hi",
    "cate_rmse",
    "cate_corr",
    "coverage",
    "avg_interval_length",
    "crossing_rate",
    "pit_ks",
    "baseline_cate_rmse",
    "loss_l_z",
    "loss_l_q",
    "loss_l_mse",
    "loss_l_cross",
    "loss_total",
    "loss_clamped",
    "n",
    "m",
    "level",
    "seed",
];

impl MetricsReport {
    fn values(&self) -> Vec<String> {
        let f = |v: f64| fmt_f64(v);
        let loss = |g: fn(&LossComponents) -> f64| self.loss.as_ref().map(|l| f(g(l))).unwrap_or_default();
        vec![
            f(self.ate_true),
            f(self.ate_est),
            f(self.ate_sq_err),
            f(self.ate_ci_lo),
            f(self.ate_ci_hi),
            f(self.cate_rmse),
            f(self.cate_corr),
            f(self.coverage),
            f(self.avg_interval_length),
            f(self.crossing_rate),
            f(self.pit_ks),
            f(self.baseline_cate_rmse),
            loss(|l| l.l_z),
            loss(|l| l.l_q),
            loss(|l| l.l_mse),
            loss(|l| l.l_cross),
            loss(|l| l.total),
            self.loss.map(|l| l.clamped.to_string()).unwrap_or_default(),
            self.n.to_string(),
            self.m.to_string(),
            f(self.level),
            self.seed.to_string(),
        ]
    }

    /// `key = value` lines; loss entries are omitted for models without one.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for (k, v) in REPORT_KEYS.iter().zip(self.values()) {
            if !v.is_empty() {
                let _ = writeln!(s, "{k} = {v}");
            }
        }
        s
    }

    pub fn csv_header() -> String {
        REPORT_KEYS.join(",")
    }

    pub fn csv_row(&self) -> String {
        self.values().join(",")
    }

    /// Numeric columns by name, for aggregation.
    pub fn numeric_fields(&self) -> Vec<(&'static str, f64)> {
        let mut v = vec![
            ("ate_true", self.ate_true),
            ("ate_est", self.ate_est),
            ("ate_sq_err", self.ate_sq_err),
            ("ate_abs_err", (self.ate_est - self.ate_true).abs()),
            ("cate_rmse", self.cate_rmse),
            ("cate_corr", self.cate_corr),
            ("coverage", self.coverage),
            ("avg_interval_length", self.avg_interval_length),
            ("crossing_rate", self.crossing_rate),
            ("pit_ks", self.pit_ks),
            ("baseline_cate_rmse", self.baseline_cate_rmse),
        ];
        if let Some(l) = &self.loss {
            v.push(("loss_total", l.total));
        }
        v
    }
}

/// Scores `model` on a dataset that carries ground truth.
pub fn evaluate(ds: &CausalDataset, model: &dyn CateModel, cfg: &EvalConfig) -> Result<MetricsReport> {
    Ok(evaluate_detailed(ds, model, cfg)?.report)
}

pub fn evaluate_detailed(ds: &CausalDataset, model: &dyn CateModel, cfg: &EvalConfig) -> Result<Evaluation> {
    let truth = ds.truth()?;
    let n = ds.n();
    let posteriors = model.posteriors(ds, cfg.m, cfg.seed)?;
    if posteriors.len() != n {
        return Err(Error::dim("posteriors", n, posteriors.len()));
    }

    let mut units = Vec::with_capacity(n);
    let (mut covered, mut length) = (0usize, 0.0);
    for (p, &t) in posteriors.iter().zip(&truth.tau) {
        let (lo, hi) = causal::credible_interval(p, cfg.level)?;
        if lo <= t && t <= hi {
            covered += 1;
        }
        length += hi - lo;
        units.push(UnitSummary { cate_mean: p.mean(), ci_lo: lo, ci_hi: hi });
    }
    let means: Vec<f64> = units.iter().map(|u| u.cate_mean).collect();

    let ate_draws: Vec<f64> = (0..cfg.m)
        .map(|j| posteriors.iter().map(|p| p.draws[j]).sum::<f64>() / n as f64)
        .collect();
    let (ate_ci_lo, ate_ci_hi) = causal::interval_of(&ate_draws, cfg.level)?;

    let ate_true = true_ate(ds)?;
    let ate_est = model.ate(ds, cfg.grid)?;
    let baseline = baseline_linear_cate(ds)?;

    let report = MetricsReport {
        ate_true,
        ate_est,
        ate_sq_err: (ate_true - ate_est) * (ate_true - ate_est),
        ate_ci_lo,
        ate_ci_hi,
        cate_rmse: stats::rmse(&means, &truth.tau),
        cate_corr: stats::correlation(&means, &truth.tau),
        coverage: covered as f64 / n as f64,
        avg_interval_length: length / n as f64,
        crossing_rate: crossing_rate(model, ds)?,
        pit_ks: pit_ks(model, ds, cfg.m, cfg.seed)?,
        baseline_cate_rmse: stats::rmse(&baseline, &truth.tau),
        loss: model.loss(),
        n,
        m: cfg.m,
        level: cfg.level,
        seed: cfg.seed,
    };
    Ok(Evaluation { report, units, posteriors })
}

/// Fraction of (unit, adjacent level pair) combinations on [`CROSSING_GRID`]
/// where the quantile readout decreases.
pub fn crossing_rate(model: &dyn CateModel, ds: &CausalDataset) -> Result<f64> {
    let n = ds.n();
    let curves: Vec<Vec<f64>> = CROSSING_GRID
        .iter()
        .map(|&q| model.outcome_quantiles(ds, &vec![q; n]))
        .collect::<Result<_>>()?;
    let mut crossed = 0usize;
    for pair in curves.windows(2) {
        crossed += pair[0].iter().zip(&pair[1]).filter(|(a, b)| b < a).count();
    }
    Ok(crossed as f64 / (n * (CROSSING_GRID.len() - 1)) as f64)
}

/// KS distance of the outcome PIT, each unit scored against `m` quantile draws.
pub fn pit_ks(model: &dyn CateModel, ds: &CausalDataset, m: usize, seed: u64) -> Result<f64> {
    let n = ds.n();
    let mut rng = Rng::derive(seed, u64::MAX);
    let mut draws = vec![Vec::with_capacity(m); n];
    for _ in 0..m {
        let q: Vec<f64> = (0..n).map(|_| rng.uniform()).collect();
        for (d, v) in draws.iter_mut().zip(model.outcome_quantiles(ds, &q)?) {
            d.push(v);
        }
    }
    pit_calibration(&draws, &ds.y)
}

/// PIT of each realized value among its draws (midrank for ties), then the
/// KS distance from uniform.
pub fn pit_calibration(draws: &[Vec<f64>], realized: &[f64]) -> Result<f64> {
    if draws.len() != realized.len() {
        return Err(Error::dim("realized values", draws.len(), realized.len()));
    }
    if draws.len() < 2 {
        return Err(Error::invalid("calibration needs at least two units"));
    }
    let pit: Vec<f64> = draws
        .iter()
        .zip(realized)
        .map(|(d, &r)| {
            if d.len() < 100 {
                return Err(Error::invalid(format!("calibration needs at least 100 draws per unit, got {}", d.len())));
            }
            let below = d.iter().filter(|&&v| v < r).count() as f64;
            let ties = d.iter().filter(|&&v| v == r).count() as f64;
            Ok((below + 0.5 * ties) / d.len() as f64)
        })
        .collect::<Result<_>>()?;
    Ok(stats::ks_uniform(&pit))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LorenzCheck {
    pub quadrature_mean: f64,
    pub sample_mean: f64,
    pub gap: f64,
}

/// Midpoint-grid integral of the nearest-rank quantile function against the
/// arithmetic mean.
pub fn lorenz_check(sample: &[f64], grid: usize) -> Result<LorenzCheck> {
    if sample.len() < 2 {
        return Err(Error::invalid("lorenz check needs at least two values"));
    }
    if grid == 0 {
        return Err(Error::invalid("grid size must be positive"));
    }
    let s = stats::sorted(sample);
    let quad: f64 = causal::midpoint_grid(grid)
        .iter()
        .map(|&u| stats::nearest_rank(&s, u))
        .sum::<f64>()
        / grid as f64;
    // summed in sorted order so grid = n reproduces it bit for bit
    let mean = s.iter().sum::<f64>() / s.len() as f64;
    Ok(LorenzCheck {
        quadrature_mean: quad,
        sample_mean: mean,
        gap: quad - mean,
    })
}

/// Per-unit effects from OLS of `y` on `[1, x, z, x z]`.
pub fn baseline_linear_cate(ds: &CausalDataset) -> Result<Vec<f64>> {
    let (n, p) = (ds.n(), ds.p());
    let cols = 2 + 2 * p;
    let mut design = Matrix::zeros(n, cols);
    for i in 0..n {
        let z = f64::from(u8::from(ds.z[i]));
        let row = design.row_mut(i);
        row[0] = 1.0;
        for k in 0..p {
            let x = ds.x.get(i, k);
            row[1 + k] = x;
            row[2 + p + k] = x * z;
        }
        row[1 + p] = z;
    }
    let fit = ols(&design, &Matrix::column_vector(&ds.y))?;
    let b = fit.coef.column(0);
    Ok((0..n)
        .map(|i| b[1 + p] + (0..p).map(|k| b[2 + p + k] * ds.x.get(i, k)).sum::<f64>())
        .collect())
}

/// Learned posterior against the closed form at one observation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConjugatePoint {
    pub y_obs: Vec<f64>,
    pub mean: f64,
    pub var: f64,
    pub exact_mean: f64,
    pub exact_var: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConjugateReport {
    pub points: Vec<ConjugatePoint>,
    /// KS distance of the PIT of held-out parameters among posterior draws.
    pub pit_ks: f64,
    pub draws: usize,
    pub holdout: usize,
    pub seed: u64,
}

impl ConjugateReport {
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for (i, p) in self.points.iter().enumerate() {
            let ys: Vec<String> = p.y_obs.iter().map(|&v| fmt_f64(v)).collect();
            let _ = writeln!(s, "y_obs_{i} = {}", ys.join(" "));
            let _ = writeln!(s, "post_mean_{i} = {}", fmt_f64(p.mean));
            let _ = writeln!(s, "exact_mean_{i} = {}", fmt_f64(p.exact_mean));
            let _ = writeln!(s, "post_var_{i} = {}", fmt_f64(p.var));
            let _ = writeln!(s, "exact_var_{i} = {}", fmt_f64(p.exact_var));
        }
        let _ = writeln!(s, "pit_ks = {}", fmt_f64(self.pit_ks));
        let _ = writeln!(s, "draws = {}", self.draws);
        let _ = writeln!(s, "holdout = {}", self.holdout);
        let _ = writeln!(s, "seed = {}", self.seed);
        s
    }
}

/// Scores a trained inverse map on the normal-normal model: moments at each
/// observation in `points`, and PIT calibration over `holdout` fresh draws.
pub fn conjugate_report(
    map: &InverseMap,
    model: &ConjugateModel,
    points: &[Vec<f64>],
    draws: usize,
    holdout: usize,
    seed: u64,
) -> Result<ConjugateReport> {
    if map.theta_dim() != 1 || map.data_dim() != model.obs {
        return Err(Error::dim("inverse map data width", model.obs, map.data_dim()));
    }
    let mut out = Vec::with_capacity(points.len());
    for (i, y) in points.iter().enumerate() {
        let d = map.posterior_sample(y, draws, Rng::sub_seed(seed, i as u64))?.into_vec();
        let (exact_mean, exact_var) = model.posterior(y);
        out.push(ConjugatePoint {
            y_obs: y.clone(),
            mean: stats::mean(&d),
            var: stats::variance(&d),
            exact_mean,
            exact_var,
        });
    }

    let mut rng = Rng::derive(seed, u64::MAX);
    let mut all = Vec::with_capacity(holdout);
    let mut truth = Vec::with_capacity(holdout);
    let mut y = vec![0.0; model.obs];
    for i in 0..holdout {
        truth.push(model.sample(&mut rng, &mut y));
        let s = Rng::sub_seed(seed, (points.len() + i) as u64);
        all.push(map.posterior_sample(&y, draws, s)?.into_vec());
    }
    Ok(ConjugateReport {
        points: out,
        pit_ks: pit_calibration(&all, &truth)?,
        draws,
        holdout,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dgp::gen_causal;

    #[test]
    fn oracle_scores_perfectly() {
        let ds = gen_causal(300, 1.0, 4).unwrap();
        let oracle = OracleModel::from_dataset(&ds).unwrap();
        let cfg = EvalConfig { m: 100, ..EvalConfig::default() };
        let r = evaluate(&ds, &oracle, &cfg).unwrap();
        assert_eq!(r.cate_rmse, 0.0);
        assert_eq!(r.coverage, 1.0);
        assert_eq!(r.avg_interval_length, 0.0);
        assert_eq!(r.crossing_rate, 0.0);
        assert_eq!(r.ate_sq_err, (r.ate_true - r.ate_est).powi(2));
        assert!(r.ate_sq_err < 1e-24);
        assert!(r.loss.is_none());
    }

    #[test]
    fn whole_line_intervals_cover_everything() {
        struct Wide;
        impl CateModel for Wide {
            fn posteriors(&self, ds: &CausalDataset, m: usize, _: u64) -> Result<Vec<CatePosterior>> {
                Ok((0..ds.n())
                    .map(|unit| {
                        let mut d = vec![0.0; m];
                        d[0] = f64::NEG_INFINITY;
                        d[m - 1] = f64::INFINITY;
                        CatePosterior { unit, draws: d }
                    })
                    .collect())
            }
            fn ate(&self, _: &CausalDataset, _: usize) -> Result<f64> {
                Ok(0.0)
            }
            fn outcome_quantiles(&self, _: &CausalDataset, q: &[f64]) -> Result<Vec<f64>> {
                Ok(q.to_vec())
            }
        }
        let ds = gen_causal(50, 1.0, 1).unwrap();
        let cfg = EvalConfig { m: 100, level: 0.999, ..EvalConfig::default() };
        assert_eq!(evaluate(&ds, &Wide, &cfg).unwrap().coverage, 1.0);
    }

    #[test]
    fn missing_truth_is_an_error() {
        let ds = gen_causal(50, 1.0, 1).unwrap();
        let oracle = OracleModel::from_dataset(&ds).unwrap();
        let obs = ds.observational();
        assert!(matches!(evaluate(&obs, &oracle, &EvalConfig::default()), Err(Error::MissingGroundTruth)));
    }

    #[test]
    fn lorenz_small_cases() {
        let c = lorenz_check(&[2.5; 10], 7).unwrap();
        assert_eq!((c.quadrature_mean, c.sample_mean, c.gap), (2.5, 2.5, 0.0));
        let c = lorenz_check(&[1.0, 0.0], 2).unwrap();
        assert_eq!(c.quadrature_mean, 0.5);
        assert_eq!(c.gap, 0.0);
        assert!(lorenz_check(&[1.0], 3).is_err());
    }

    #[test]
    fn grid_equal_to_n_is_exact() {
        let mut rng = Rng::new(12);
        for n in [2, 3, 17, 100, 1001] {
            let v: Vec<f64> = (0..n).map(|_| rng.normal(3.0, 7.0)).collect();
            assert_eq!(lorenz_check(&v, n).unwrap().gap, 0.0, "n = {n}");
        }
    }

    #[test]
    fn linear_effect_is_recovered() {
        let mut ds = gen_causal(200, 1.0, 3).unwrap();
        let tau: Vec<f64> = (0..ds.n())
            .map(|i| 0.5 - 1.5 * ds.x.get(i, 0) + 2.0 * ds.x.get(i, 2))
            .collect();
        for i in 0..ds.n() {
            let z = if ds.z[i] { 1.0 } else { 0.0 };
            ds.y[i] = 1.0 + ds.x.get(i, 1) + z * tau[i];
        }
        let est = baseline_linear_cate(&ds).unwrap();
        for (a, b) in est.iter().zip(&tau) {
            assert!((a - b).abs() < 1e-6);
        }
    }

    #[test]
    fn constant_treatment_is_singular() {
        let mut ds = gen_causal(100, 1.0, 3).unwrap();
        ds.z.iter_mut().for_each(|z| *z = true);
        assert!(matches!(baseline_linear_cate(&ds), Err(Error::Singular(_))));
    }

    #[test]
    fn pit_extremes_and_errors() {
        let draws = vec![vec![1.0; 100]; 3];
        assert!((pit_calibration(&draws, &[0.0, 0.0, 0.0]).unwrap() - 1.0).abs() < 1e-12);
        assert!(pit_calibration(&draws[..1], &[0.0]).is_err());
        assert!(pit_calibration(&[vec![1.0; 99], vec![1.0; 99]], &[0.0, 0.0]).is_err());
    }

    #[test]
    fn exact_law_is_calibrated() {
        let ds = gen_causal(1000, 1.0, 8).unwrap();
        let oracle = OracleModel::from_dataset(&ds).unwrap();
        let ks = pit_ks(&oracle, &ds, 200, 3).unwrap();
        assert!(ks < 0.05, "{ks}");
    }

    #[test]
    fn conjugate_report_shapes() {
        use crate::engine::{build_sim_table, train_inverse_map, ArchConfig, BaseDist};
        use crate::nn::{Activation, TrainConfig};
        let model = ConjugateModel::new(0.0, 1.0, 1.0).unwrap();
        let table = build_sim_table(&model, 512, BaseDist::Uniform, 1, 1).unwrap();
        let arch = ArchConfig {
            summary_hidden: vec![4],
            head_hidden: vec![8],
            head_activation: Activation::Relu,
            ..ArchConfig::default()
        };
        let map = train_inverse_map(&table, &arch, &TrainConfig { epochs: 2, ..TrainConfig::default() }).unwrap();
        let r = conjugate_report(&map, &model, &[vec![0.0], vec![2.0]], 100, 5, 3).unwrap();
        assert_eq!(r.points.len(), 2);
        assert_eq!(r.points[1].exact_mean, 1.0);
        assert_eq!(r.points[1].exact_var, 0.5);
        assert!(r.to_text().contains("pit_ks = "));
        let wide = ConjugateModel { obs: 2, ..model };
        assert!(conjugate_report(&map, &wide, &[], 100, 5, 3).is_err());
    }

    #[test]
    fn report_text_and_csv_agree() {
        let ds = gen_causal(120, 1.0, 2).unwrap();
        let oracle = OracleModel::from_dataset(&ds).unwrap();
        let r = evaluate(&ds, &oracle, &EvalConfig { m: 100, ..EvalConfig::default() }).unwrap();
        let text = r.to_text();
        assert!(text.contains("coverage = 1.0000000000000000e0"));
        assert!(!text.contains("loss_total"));
        assert_eq!(MetricsReport::csv_header().split(',').count(), r.csv_row().split(',').count());
    }
}
