//! Seeded synthetic data.
//!
//! Two generators live here:
//!
//! * the heterogeneous-effect causal benchmark: three standard-normal
//!   covariates, a nonlinear prognostic surface
//!   `mu = -6 + 1[x1 > x2] + 6 |x2 - 1|`, treatment probability
//!   `pi = sigmoid(mu)`, effect `tau = 1 - 2 x2 x3` and outcome
//!   `y ~ N(mu + tau z, sigma^2)`;
//! * a conjugate normal-normal model with a closed-form posterior, used to
//!   validate the generic posterior engine.
//!
//! Units are generated in fixed-size chunks, each with its own derived
//! stream, so the output depends only on `(parameters, seed)`.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::linalg::Matrix;
use crate::nn::sigmoid;
use crate::rng::Rng;
use crate::stats;
use crate::{Error, Result};

const CHUNK: usize = 1 << 14;

/// Which effect enters the outcome equation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TauScale {
    /// `y` uses the effect after standardization to mean 0, variance 1.
    Standardized,
    /// `y` uses `1 - 2 x2 x3` directly.
    Raw,
}

impl std::str::FromStr for TauScale {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "standardized" => Ok(TauScale::Standardized),
            "raw" => Ok(TauScale::Raw),
            o => Err(Error::Parse(format!("unknown tau scale `{o}`"))),
        }
    }
}

impl std::fmt::Display for TauScale {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            TauScale::Standardized => "standardized",
            TauScale::Raw => "raw",
        })
    }
}

/// Hidden ground truth of a synthetic causal dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub mu: Vec<f64>,
    /// Effect on the scale reported for evaluation (standardized).
    pub tau: Vec<f64>,
    pub pi: Vec<f64>,
    /// Raw effect and the affine map to `tau`, when known.
    pub raw: Option<RawTau>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RawTau {
    pub values: Vec<f64>,
    pub mean: f64,
    pub sd: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CausalDataset {
    pub x: Matrix,
    pub z: Vec<bool>,
    pub y: Vec<f64>,
    pub truth: Option<GroundTruth>,
    pub sigma: f64,
    pub seed: u64,
}

impl CausalDataset {
    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn p(&self) -> usize {
        self.x.cols()
    }

    pub fn z_f64(&self) -> Vec<f64> {
        self.z.iter().map(|&z| if z { 1.0 } else { 0.0 }).collect()
    }

    pub fn truth(&self) -> Result<&GroundTruth> {
        self.truth.as_ref().ok_or(Error::MissingGroundTruth)
    }

    /// Copy without the ground-truth columns.
    pub fn observational(&self) -> CausalDataset {
        CausalDataset {
            truth: None,
            ..self.clone()
        }
    }

    /// Units `idx`, in order.
    pub fn subset(&self, idx: &[usize]) -> CausalDataset {
        let pick = |v: &[f64]| idx.iter().map(|&i| v[i]).collect::<Vec<_>>();
        CausalDataset {
            x: self.x.select_rows(idx),
            z: idx.iter().map(|&i| self.z[i]).collect(),
            y: pick(&self.y),
            truth: self.truth.as_ref().map(|t| GroundTruth {
                mu: pick(&t.mu),
                tau: pick(&t.tau),
                pi: pick(&t.pi),
                raw: t.raw.as_ref().map(|r| RawTau {
                    values: pick(&r.values),
                    ..*r
                }),
            }),
            sigma: self.sigma,
            seed: self.seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.y.len();
        if n == 0 {
            return Err(Error::invalid("empty dataset"));
        }
        if self.x.rows() != n {
            return Err(Error::dim("covariate rows", n, self.x.rows()));
        }
        if self.z.len() != n {
            return Err(Error::dim("treatment length", n, self.z.len()));
        }
        if let Some(t) = &self.truth {
            for (name, v) in [("mu_true", &t.mu), ("tau_true", &t.tau), ("pi_true", &t.pi)] {
                if v.len() != n {
                    return Err(Error::dim(name, n, v.len()));
                }
            }
        }
        Ok(())
    }
}

/// Parameters of the causal benchmark generator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CausalDgp {
    pub n: usize,
    pub sigma: f64,
    /// Covariate count; columns beyond the third are pure noise.
    pub p: usize,
    pub tau_scale: TauScale,
}

impl CausalDgp {
    pub fn new(n: usize, sigma: f64) -> Self {
        CausalDgp {
            n,
            sigma,
            p: 3,
            tau_scale: TauScale::Standardized,
        }
    }

    pub fn generate(&self, seed: u64) -> Result<CausalDataset> {
        if self.n == 0 {
            return Err(Error::invalid("n must be at least 1"));
        }
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return Err(Error::invalid("sigma must be finite and non-negative"));
        }
        if self.p < 3 {
            return Err(Error::invalid("the benchmark needs at least 3 covariates"));
        }
        let (n, p) = (self.n, self.p);
        let mut x = Matrix::zeros(n, p);
        let mut z = Vec::with_capacity(n);
        let mut noise = Vec::with_capacity(n);
        let mut mu = Vec::with_capacity(n);
        let mut pi = Vec::with_capacity(n);
        let mut tau_raw = Vec::with_capacity(n);

        for (chunk, start) in (0..n).step_by(CHUNK).enumerate() {
            let mut rng = Rng::derive(seed, chunk as u64);
            for i in start..(start + CHUNK).min(n) {
                let row = x.row_mut(i);
                for v in row.iter_mut() {
                    *v = rng.gaussian();
                }
                let (m, t) = surfaces(row[0], row[1], row[2]);
                let prob = sigmoid(m);
                mu.push(m);
                pi.push(prob);
                tau_raw.push(t);
                z.push(rng.bernoulli(prob));
                noise.push(rng.gaussian());
            }
        }

        let (tau, raw) = if n >= 2 {
            let s = standardize_tau(&tau_raw)?;
            (s.values, RawTau { values: tau_raw.clone(), mean: s.mean, sd: s.sd })
        } else {
            // A single unit cannot be standardized; the identity map is used.
            (tau_raw.clone(), RawTau { values: tau_raw.clone(), mean: 0.0, sd: 1.0 })
        };
        let effect = match self.tau_scale {
            TauScale::Standardized => &tau,
            TauScale::Raw => &tau_raw,
        };
        let y = (0..n)
            .map(|i| mu[i] + if z[i] { effect[i] } else { 0.0 } + self.sigma * noise[i])
            .collect();

        Ok(CausalDataset {
            x,
            z,
            y,
            truth: Some(GroundTruth {
                mu,
                tau,
                pi,
                raw: Some(raw),
            }),
            sigma: self.sigma,
            seed,
        })
    }
}

/// `(mu, tau_raw)` at one covariate vector.
#[inline]
pub fn surfaces(x1: f64, x2: f64, x3: f64) -> (f64, f64) {
    let step = if x1 > x2 { 1.0 } else { 0.0 };
    let mu = -6.0 + step + 6.0 * (x2 - 1.0).abs();
    let tau = 1.0 - 2.0 * x2 * x3;
    (mu, tau)
}

/// Benchmark dataset with three covariates and standardized effects.
pub fn gen_causal(n: usize, sigma: f64, seed: u64) -> Result<CausalDataset> {
    CausalDgp::new(n, sigma).generate(seed)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Standardized {
    pub values: Vec<f64>,
    pub mean: f64,
    pub sd: f64,
}

impl Standardized {
    /// Maps a standardized value back to the raw scale.
    pub fn to_raw(&self, v: f64) -> f64 {
        self.mean + self.sd * v
    }
}

/// Centers and scales by the sample mean and the divisor-`n` standard
/// deviation.
pub fn standardize_tau(raw: &[f64]) -> Result<Standardized> {
    if raw.len() < 2 {
        return Err(Error::invalid("standardization needs at least two values"));
    }
    let mean = stats::mean(raw);
    let sd = stats::variance(raw).sqrt();
    if !(sd > 0.0) {
        return Err(Error::invalid("cannot standardize a constant vector"));
    }
    Ok(Standardized {
        values: raw.iter().map(|v| (v - mean) / sd).collect(),
        mean,
        sd,
    })
}

/// Sample average of the ground-truth effect.
pub fn true_ate(ds: &CausalDataset) -> Result<f64> {
    Ok(stats::mean(&ds.truth()?.tau))
}

/// Sample average of the raw-scale effect.
pub fn true_ate_raw(ds: &CausalDataset) -> Result<f64> {
    let t = ds.truth()?;
    t.raw
        .as_ref()
        .map(|r| stats::mean(&r.values))
        .ok_or(Error::MissingGroundTruth)
}

/// `theta ~ N(prior_mean, prior_sd^2)`, then `obs` draws
/// `y_j | theta ~ N(theta, like_sd^2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConjugateModel {
    pub prior_mean: f64,
    pub prior_sd: f64,
    pub like_sd: f64,
    pub obs: usize,
}

impl ConjugateModel {
    pub fn new(prior_mean: f64, prior_sd: f64, like_sd: f64) -> Result<Self> {
        let m = ConjugateModel {
            prior_mean,
            prior_sd,
            like_sd,
            obs: 1,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.prior_sd > 0.0 && self.like_sd > 0.0) {
            return Err(Error::invalid("standard deviations must be positive"));
        }
        if !self.prior_mean.is_finite() {
            return Err(Error::invalid("prior mean must be finite"));
        }
        if self.obs == 0 {
            return Err(Error::invalid("need at least one observation per draw"));
        }
        Ok(())
    }

    pub fn sample(&self, rng: &mut Rng, y: &mut [f64]) -> f64 {
        let theta = rng.normal(self.prior_mean, self.prior_sd);
        for v in y.iter_mut() {
            *v = rng.normal(theta, self.like_sd);
        }
        theta
    }

    /// Closed-form posterior `(mean, variance)` of theta given `y`.
    pub fn posterior(&self, y: &[f64]) -> (f64, f64) {
        let prior_prec = 1.0 / (self.prior_sd * self.prior_sd);
        let like_prec = 1.0 / (self.like_sd * self.like_sd);
        let prec = prior_prec + y.len() as f64 * like_prec;
        let mean = (self.prior_mean * prior_prec + y.iter().sum::<f64>() * like_prec) / prec;
        (mean, 1.0 / prec)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConjugateDataset {
    pub theta: Vec<f64>,
    /// `N x obs`
    pub y: Matrix,
    pub model: ConjugateModel,
}

pub fn gen_conjugate(
    n_draws: usize,
    prior_mean: f64,
    prior_sd: f64,
    like_sd: f64,
    seed: u64,
) -> Result<ConjugateDataset> {
    let model = ConjugateModel::new(prior_mean, prior_sd, like_sd)?;
    gen_conjugate_with(&model, n_draws, seed)
}

pub fn gen_conjugate_with(model: &ConjugateModel, n_draws: usize, seed: u64) -> Result<ConjugateDataset> {
    model.validate()?;
    let mut theta = Vec::with_capacity(n_draws);
    let mut y = Matrix::zeros(n_draws, model.obs);
    for (chunk, start) in (0..n_draws).step_by(CHUNK).enumerate() {
        let mut rng = Rng::derive(seed, chunk as u64);
        for i in start..(start + CHUNK).min(n_draws) {
            theta.push(model.sample(&mut rng, y.row_mut(i)));
        }
    }
    Ok(ConjugateDataset {
        theta,
        y,
        model: *model,
    })
}

/// Floats in CSV artifacts: 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Writes the dataset CSV. With `with_truth` the ground-truth columns
/// `mu_true,tau_true,pi_true` are appended.
pub fn write_csv<W: Write>(ds: &CausalDataset, out: W, with_truth: bool) -> Result<()> {
    let truth = if with_truth { Some(ds.truth()?) } else { None };
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["unit_id".to_owned()];
    header.extend((1..=ds.p()).map(|j| format!("x{j}")));
    header.extend(["z", "y"].map(String::from));
    if truth.is_some() {
        header.extend(["mu_true", "tau_true", "pi_true"].map(String::from));
    }
    w.write_record(&header).map_err(csv_err)?;
    for i in 0..ds.n() {
        let mut rec = vec![i.to_string()];
        rec.extend(ds.x.row(i).iter().map(|&v| fmt_f64(v)));
        rec.push(u8::from(ds.z[i]).to_string());
        rec.push(fmt_f64(ds.y[i]));
        if let Some(t) = truth {
            rec.extend([t.mu[i], t.tau[i], t.pi[i]].map(fmt_f64));
        }
        w.write_record(&rec).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn save_csv(ds: &CausalDataset, path: impl AsRef<Path>, with_truth: bool) -> Result<()> {
    let f = std::fs::File::create(path)?;
    write_csv(ds, std::io::BufWriter::new(f), with_truth)
}

/// Reads a dataset CSV written by [`write_csv`]. Ground truth is attached
/// when all three truth columns are present.
pub fn read_csv<R: Read>(input: R) -> Result<CausalDataset> {
    let mut r = csv::Reader::from_reader(input);
    let headers = r.headers().map_err(csv_err)?.clone();
    let col = |name: &str| headers.iter().position(|h| h == name);
    let xcols: Vec<usize> = (1..)
        .map_while(|j| col(&format!("x{j}")))
        .collect();
    if xcols.is_empty() {
        return Err(Error::Parse("dataset has no covariate columns".into()));
    }
    let zc = col("z").ok_or_else(|| Error::Parse("missing column `z`".into()))?;
    let yc = col("y").ok_or_else(|| Error::Parse("missing column `y`".into()))?;
    let truth_cols = match (col("mu_true"), col("tau_true"), col("pi_true")) {
        (Some(a), Some(b), Some(c)) => Some((a, b, c)),
        _ => None,
    };

    let mut xs = Vec::new();
    let (mut z, mut y) = (Vec::new(), Vec::new());
    let (mut mu, mut tau, mut pi) = (Vec::new(), Vec::new(), Vec::new());
    for (line, rec) in r.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        let num = |c: usize| -> Result<f64> {
            rec.get(c)
                .and_then(|s| s.trim().parse::<f64>().ok())
                .ok_or_else(|| Error::Parse(format!("bad number in row {} column {}", line + 1, c + 1)))
        };
        for &c in &xcols {
            xs.push(num(c)?);
        }
        z.push(match rec.get(zc).map(str::trim) {
            Some("1") => true,
            Some("0") => false,
            other => return Err(Error::Parse(format!("row {}: z must be 0 or 1, got {other:?}", line + 1))),
        });
        y.push(num(yc)?);
        if let Some((a, b, c)) = truth_cols {
            mu.push(num(a)?);
            tau.push(num(b)?);
            pi.push(num(c)?);
        }
    }
    let n = y.len();
    let ds = CausalDataset {
        x: Matrix::from_vec(n, xcols.len(), xs)?,
        z,
        y,
        truth: truth_cols.map(|_| GroundTruth { mu, tau, pi, raw: None }),
        sigma: f64::NAN,
        seed: 0,
    };
    ds.validate()?;
    Ok(ds)
}

pub fn load_csv(path: impl AsRef<Path>) -> Result<CausalDataset> {
    read_csv(std::io::BufReader::new(std::fs::File::open(path)?))
}

pub(crate) fn csv_err(e: csv::Error) -> Error {
    Error::Parse(e.to_string())
}
