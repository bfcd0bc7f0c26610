//! Linear generative model `theta = W S(y) + T eps` with `eps ~ N(0, I_J)`,
//! fitted by ordinary least squares of `theta` on `[S(y), eps]`.
//!
//! For a single-index model the OLS coefficient on `S(y)` is proportional to
//! the true index direction whatever the link, which is what makes the cheap
//! fit useful as a baseline for the network map.

use super::simtable::SimTable;
use crate::linalg::{ols, Matrix};
use crate::rng::Rng;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct LinearGenerative {
    /// `k x s` coefficients on the summary statistic.
    pub w: Matrix,
    /// `k x J` coefficients on the auxiliary normals.
    pub tau_coefs: Matrix,
    pub w_std_err: Matrix,
    pub tau_std_err: Matrix,
    pub residual_sd: Vec<f64>,
}

impl LinearGenerative {
    pub fn n_normals(&self) -> usize {
        self.tau_coefs.cols()
    }

    /// `W s + T eps` for a fresh `eps`.
    pub fn sample(&self, stat: &[f64], rng: &mut Rng) -> Result<Vec<f64>> {
        if stat.len() != self.w.cols() {
            return Err(Error::dim("statistic length", self.w.cols(), stat.len()));
        }
        let eps: Vec<f64> = (0..self.n_normals()).map(|_| rng.gaussian()).collect();
        Ok((0..self.w.rows())
            .map(|r| {
                crate::linalg::dot(self.w.row(r), stat) + crate::linalg::dot(self.tau_coefs.row(r), &eps)
            })
            .collect())
    }
}

/// Fit with the identity summary `S(y) = y`.
pub fn estimate_linear_generative(table: &SimTable, normals: usize, seed: u64) -> Result<LinearGenerative> {
    estimate_linear_generative_with(table, normals, seed, |y| y.to_vec())
}

/// Fit with a caller-supplied summary statistic.
pub fn estimate_linear_generative_with(
    table: &SimTable,
    normals: usize,
    seed: u64,
    summary: impl Fn(&[f64]) -> Vec<f64>,
) -> Result<LinearGenerative> {
    let rows = table.len();
    if rows == 0 {
        return Err(Error::invalid("empty simulation table"));
    }
    let s_dim = summary(table.y.row(0)).len();
    if rows <= s_dim + normals {
        return Err(Error::Singular(format!(
            "{rows} rows for {} coefficients",
            s_dim + normals
        )));
    }
    let mut rng = Rng::new(seed);
    let mut design = Matrix::zeros(rows, s_dim + normals);
    for i in 0..rows {
        let stat = summary(table.y.row(i));
        if stat.len() != s_dim {
            return Err(Error::dim("summary length", s_dim, stat.len()));
        }
        let dst = design.row_mut(i);
        dst[..s_dim].copy_from_slice(&stat);
        for v in &mut dst[s_dim..] {
            *v = rng.gaussian();
        }
    }
    let fit = ols(&design, &table.theta)?;
    // OLS returns (s + J) x k; store parameter-major blocks.
    let coef_t = fit.coef.transpose();
    let se_t = fit.std_err.transpose();
    Ok(LinearGenerative {
        w: coef_t.column_range(0, s_dim),
        tau_coefs: coef_t.column_range(s_dim, s_dim + normals),
        w_std_err: se_t.column_range(0, s_dim),
        tau_std_err: se_t.column_range(s_dim, s_dim + normals),
        residual_sd: fit.residual_var.iter().map(|v| v.sqrt()).collect(),
    })
}
