//! Simulated `(theta, y, tau)` training triples.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::dgp::{csv_err, fmt_f64, ConjugateModel};
use crate::linalg::Matrix;
use crate::rng::Rng;
use crate::{Error, Result};

const CHUNK: usize = 1 << 14;

/// A prior plus forward model that can be sampled jointly.
pub trait Simulator {
    fn theta_dim(&self) -> usize;
    fn data_dim(&self) -> usize;
    /// Fills one parameter draw and one data draw.
    fn simulate(&self, rng: &mut Rng, theta: &mut [f64], y: &mut [f64]) -> Result<()>;
}

impl Simulator for ConjugateModel {
    fn theta_dim(&self) -> usize {
        1
    }

    fn data_dim(&self) -> usize {
        self.obs
    }

    fn simulate(&self, rng: &mut Rng, theta: &mut [f64], y: &mut [f64]) -> Result<()> {
        theta[0] = self.sample(rng, y);
        Ok(())
    }
}

/// `theta ~ N(mean, sd^2 I_k)` and the deterministic forward map `y = theta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdentitySimulator {
    pub k: usize,
    pub mean: f64,
    pub sd: f64,
}

impl Simulator for IdentitySimulator {
    fn theta_dim(&self) -> usize {
        self.k
    }

    fn data_dim(&self) -> usize {
        self.k
    }

    fn simulate(&self, rng: &mut Rng, theta: &mut [f64], y: &mut [f64]) -> Result<()> {
        for (t, v) in theta.iter_mut().zip(y.iter_mut()) {
            *t = rng.normal(self.mean, self.sd);
            *v = *t;
        }
        Ok(())
    }
}

/// Scalar `theta ~ N(0, 1)` observed through `y_j = a_j theta + s_j e_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearGaussianSimulator {
    pub loadings: Vec<f64>,
    pub noise_sd: Vec<f64>,
}

impl LinearGaussianSimulator {
    /// Coefficients of `E[theta | y]`, which is linear in `y` for this model.
    pub fn posterior_mean_coefficients(&self) -> Vec<f64> {
        let snr: f64 = self
            .loadings
            .iter()
            .zip(&self.noise_sd)
            .map(|(a, s)| a * a / (s * s))
            .sum();
        self.loadings
            .iter()
            .zip(&self.noise_sd)
            .map(|(a, s)| a / (s * s) / (1.0 + snr))
            .collect()
    }
}

impl Simulator for LinearGaussianSimulator {
    fn theta_dim(&self) -> usize {
        1
    }

    fn data_dim(&self) -> usize {
        self.loadings.len()
    }

    fn simulate(&self, rng: &mut Rng, theta: &mut [f64], y: &mut [f64]) -> Result<()> {
        let t = rng.gaussian();
        theta[0] = t;
        for ((v, a), s) in y.iter_mut().zip(&self.loadings).zip(&self.noise_sd) {
            *v = a * t + s * rng.gaussian();
        }
        Ok(())
    }
}

/// Distribution of the baseline noise `tau` fed to the inverse map.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BaseDist {
    Uniform,
    Gaussian,
}

impl BaseDist {
    #[inline]
    pub fn draw(self, rng: &mut Rng) -> f64 {
        match self {
            BaseDist::Uniform => rng.uniform(),
            BaseDist::Gaussian => rng.gaussian(),
        }
    }
}

impl std::str::FromStr for BaseDist {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" => Ok(BaseDist::Uniform),
            "gaussian" => Ok(BaseDist::Gaussian),
            o => Err(Error::Parse(format!("unknown base distribution `{o}`"))),
        }
    }
}

/// `N` simulated triples; row `i` of each block belongs to the same draw.
#[derive(Debug, Clone, PartialEq)]
pub struct SimTable {
    pub theta: Matrix,
    pub y: Matrix,
    pub tau: Matrix,
    pub base: BaseDist,
}

impl SimTable {
    pub fn len(&self) -> usize {
        self.theta.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn theta_dim(&self) -> usize {
        self.theta.cols()
    }

    pub fn data_dim(&self) -> usize {
        self.y.cols()
    }

    pub fn tau_dim(&self) -> usize {
        self.tau.cols()
    }

    /// CSV with column groups `theta_*`, `y_*`, `tau_*`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header: Vec<String> = Vec::new();
        header.extend((1..=self.theta_dim()).map(|j| format!("theta_{j}")));
        header.extend((1..=self.data_dim()).map(|j| format!("y_{j}")));
        header.extend((1..=self.tau_dim()).map(|j| format!("tau_{j}")));
        w.write_record(&header).map_err(csv_err)?;
        for i in 0..self.len() {
            let rec: Vec<String> = self
                .theta
                .row(i)
                .iter()
                .chain(self.y.row(i))
                .chain(self.tau.row(i))
                .map(|&v| fmt_f64(v))
                .collect();
            w.write_record(&rec).map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R, base: BaseDist) -> Result<SimTable> {
        let mut r = csv::Reader::from_reader(input);
        let headers = r.headers().map_err(csv_err)?.clone();
        let count = |prefix: &str| headers.iter().filter(|h| h.starts_with(prefix)).count();
        let (k, n, d) = (count("theta_"), count("y_"), count("tau_"));
        if k + n + d != headers.len() || k == 0 || n == 0 {
            return Err(Error::Parse("expected theta_*, y_*, tau_* column groups".into()));
        }
        let (mut theta, mut y, mut tau) = (Vec::new(), Vec::new(), Vec::new());
        for (line, rec) in r.records().enumerate() {
            let rec = rec.map_err(csv_err)?;
            for (c, field) in rec.iter().enumerate() {
                let v: f64 = field
                    .trim()
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad number in row {} column {}", line + 1, c + 1)))?;
                if c < k {
                    theta.push(v);
                } else if c < k + n {
                    y.push(v);
                } else {
                    tau.push(v);
                }
            }
        }
        let rows = theta.len() / k;
        Ok(SimTable {
            theta: Matrix::from_vec(rows, k, theta)?,
            y: Matrix::from_vec(rows, n, y)?,
            tau: Matrix::from_vec(rows, d, tau)?,
            base,
        })
    }
}

/// Draws `rows` independent triples. Rows are produced in fixed chunks with
/// derived streams, so the table depends only on the arguments.
pub fn build_sim_table(
    sim: &dyn Simulator,
    rows: usize,
    base: BaseDist,
    tau_dim: usize,
    seed: u64,
) -> Result<SimTable> {
    if rows == 0 {
        return Err(Error::invalid("a simulation table needs at least one row"));
    }
    let (k, n) = (sim.theta_dim(), sim.data_dim());
    let mut theta = Matrix::zeros(rows, k);
    let mut y = Matrix::zeros(rows, n);
    let mut tau = Matrix::zeros(rows, tau_dim);
    for (chunk, start) in (0..rows).step_by(CHUNK).enumerate() {
        let mut rng = Rng::derive(seed, chunk as u64);
        for i in start..(start + CHUNK).min(rows) {
            sim.simulate(&mut rng, theta.row_mut(i), y.row_mut(i))
                .map_err(|e| Error::Simulator {
                    row: i,
                    source: Box::new(e),
                })?;
            for t in tau.row_mut(i) {
                *t = base.draw(&mut rng);
            }
        }
    }
    Ok(SimTable { theta, y, tau, base })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats;

    struct Failing;
    impl Simulator for Failing {
        fn theta_dim(&self) -> usize {
            1
        }
        fn data_dim(&self) -> usize {
            1
        }
        fn simulate(&self, rng: &mut Rng, _: &mut [f64], _: &mut [f64]) -> Result<()> {
            if rng.uniform() < 0.01 {
                Err(Error::invalid("boom"))
            } else {
                Ok(())
            }
        }
    }

    #[test]
    fn single_row_is_reproducible() {
        let m = ConjugateModel::new(0.0, 1.0, 1.0).unwrap();
        let a = build_sim_table(&m, 1, BaseDist::Uniform, 1, 17).unwrap();
        let b = build_sim_table(&m, 1, BaseDist::Uniform, 1, 17).unwrap();
        assert_eq!(a, b);
        assert!((0.0..1.0).contains(&a.tau.get(0, 0)));
    }

    #[test]
    fn identity_forward_copies_theta() {
        let s = IdentitySimulator { k: 3, mean: 1.0, sd: 2.0 };
        let t = build_sim_table(&s, 100, BaseDist::Gaussian, 2, 0).unwrap();
        assert_eq!(t.theta, t.y);
        assert_eq!(t.tau_dim(), 2);
    }

    #[test]
    fn conjugate_correlation_matches_algebra() {
        let m = ConjugateModel::new(0.0, 1.0, 0.5).unwrap();
        let t = build_sim_table(&m, 100_000, BaseDist::Uniform, 1, 3).unwrap();
        let r = stats::correlation(&t.theta.column(0), &t.y.column(0));
        // sd_theta / sqrt(sd_theta^2 + sd_lik^2)
        assert!((r - 1.0 / 1.25f64.sqrt()).abs() < 0.01, "{r}");
    }

    #[test]
    fn simulator_failures_carry_the_row() {
        let err = build_sim_table(&Failing, 10_000, BaseDist::Uniform, 1, 0).unwrap_err();
        match err {
            Error::Simulator { row, .. } => assert!(row < 10_000),
            other => panic!("unexpected {other:?}"),
        }
        assert!(build_sim_table(&Failing, 0, BaseDist::Uniform, 1, 0).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let m = ConjugateModel { obs: 2, ..ConjugateModel::new(0.0, 1.0, 1.0).unwrap() };
        let t = build_sim_table(&m, 25, BaseDist::Uniform, 1, 8).unwrap();
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        assert!(buf.starts_with(b"theta_1,y_1,y_2,tau_1\n"));
        let back = SimTable::read_csv(buf.as_slice(), BaseDist::Uniform).unwrap();
        assert_eq!(back, t);
    }

    #[test]
    fn linear_gaussian_coefficients() {
        let s = LinearGaussianSimulator { loadings: vec![1.0], noise_sd: vec![1.0] };
        assert_eq!(s.posterior_mean_coefficients(), vec![0.5]);
    }
}
