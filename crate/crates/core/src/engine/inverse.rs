//! The learned inverse map `theta = H(S(y), tau)`.
//!
//! `S` is a [`SummaryNet`] and `H` a dense head reading the statistic next
//! to an embedding of the baseline draw `tau`. In quantile mode each output
//! coordinate `j` is trained with the pinball loss at level `tau_j`, so for a
//! fixed observation the head traces the conditional quantile function and
//! feeding fresh uniforms yields posterior draws. In L2 mode the head is
//! regressed on `theta` directly; with `tau` independent of `theta` that
//! recovers the posterior mean and the draws collapse onto it.

use serde::{Deserialize, Serialize};

use super::simtable::{BaseDist, SimTable};
use super::summary::SummaryNet;
use crate::linalg::Matrix;
use crate::nn::embed::cosine_embed_into;
use crate::nn::optim::{self, mlp_slots, OptState, Schedule, TrainConfig};
use crate::nn::{loss, Activation, Mlp};
use crate::rng::Rng;
use crate::stats;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum TauEmbedding {
    Raw,
    Cosine { dim: usize },
}

impl TauEmbedding {
    pub fn width(self, tau_dim: usize) -> usize {
        match self {
            TauEmbedding::Raw => tau_dim,
            TauEmbedding::Cosine { dim } => tau_dim * dim,
        }
    }

    fn embed(self, tau: &Matrix) -> Matrix {
        match self {
            TauEmbedding::Raw => tau.clone(),
            TauEmbedding::Cosine { dim } => {
                let mut out = Matrix::zeros(tau.rows(), tau.cols() * dim);
                for r in 0..tau.rows() {
                    let dst = out.row_mut(r);
                    for (j, &t) in tau.row(r).iter().enumerate() {
                        cosine_embed_into(t, &mut dst[j * dim..(j + 1) * dim]);
                    }
                }
                out
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HeadLoss {
    Quantile,
    L2,
}

impl std::str::FromStr for HeadLoss {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "quantile" => Ok(HeadLoss::Quantile),
            "l2" => Ok(HeadLoss::L2),
            o => Err(Error::Parse(format!("unknown head loss `{o}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArchConfig {
    pub summary_hidden: Vec<usize>,
    pub summary_activation: Activation,
    pub head_hidden: Vec<usize>,
    pub head_activation: Activation,
    pub embedding: TauEmbedding,
    pub base: BaseDist,
    /// Width of `tau`; quantile mode needs one level per parameter.
    pub tau_dim: Option<usize>,
    pub loss: HeadLoss,
    /// Draw fresh `tau` every epoch instead of reusing the table's column.
    pub resample_tau: bool,
}

impl Default for ArchConfig {
    fn default() -> Self {
        ArchConfig {
            summary_hidden: vec![64, 64],
            summary_activation: Activation::Tanh,
            head_hidden: vec![64, 64, 64],
            head_activation: Activation::Relu,
            embedding: TauEmbedding::Cosine { dim: 32 },
            base: BaseDist::Uniform,
            tau_dim: None,
            loss: HeadLoss::Quantile,
            resample_tau: true,
        }
    }
}

/// Per-column centering and scaling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Affine {
    pub mean: Vec<f64>,
    pub sd: Vec<f64>,
}

impl Affine {
    fn fit(m: &Matrix) -> Affine {
        let (mean, sd) = (0..m.cols())
            .map(|c| {
                let col = m.column(c);
                let sd = stats::variance(&col).sqrt();
                (stats::mean(&col), if sd > 0.0 { sd } else { 1.0 })
            })
            .unzip();
        Affine { mean, sd }
    }

    fn forward(&self, m: &Matrix) -> Matrix {
        let mut out = m.clone();
        for r in 0..out.rows() {
            for ((v, mu), sd) in out.row_mut(r).iter_mut().zip(&self.mean).zip(&self.sd) {
                *v = (*v - mu) / sd;
            }
        }
        out
    }

    fn inverse(&self, m: &Matrix) -> Matrix {
        let mut out = m.clone();
        for r in 0..out.rows() {
            for ((v, mu), sd) in out.row_mut(r).iter_mut().zip(&self.mean).zip(&self.sd) {
                *v = *v * sd + mu;
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InverseMap {
    pub summary: SummaryNet,
    pub head: Mlp,
    pub arch: ArchConfig,
    pub tau_dim: usize,
    pub y_scale: Affine,
    pub theta_scale: Affine,
    /// Mean training loss per epoch.
    pub loss_trace: Vec<f64>,
}

impl InverseMap {
    pub fn theta_dim(&self) -> usize {
        self.head.out_dim()
    }

    pub fn data_dim(&self) -> usize {
        self.summary.data_dim()
    }

    /// Evaluates the map at one observation for every row of `tau`,
    /// returning `tau.rows() x theta_dim` parameter values.
    pub fn evaluate(&self, y_obs: &[f64], tau: &Matrix) -> Result<Matrix> {
        if y_obs.len() != self.data_dim() {
            return Err(Error::dim("observation length", self.data_dim(), y_obs.len()));
        }
        if tau.cols() != self.tau_dim {
            return Err(Error::dim("tau width", self.tau_dim, tau.cols()));
        }
        let ys = self.y_scale.forward(&Matrix::row_vector(y_obs));
        let stat = self.summary.net().predict(&ys)?;
        let mut stats_rows = Matrix::zeros(tau.rows(), stat.cols());
        for r in 0..tau.rows() {
            stats_rows.row_mut(r).copy_from_slice(stat.row(0));
        }
        let input = stats_rows.hstack(&self.arch.embedding.embed(tau))?;
        Ok(self.theta_scale.inverse(&self.head.predict(&input)?))
    }

    /// `draws x theta_dim` posterior draws at `y_obs` from fresh baseline noise.
    pub fn posterior_sample(&self, y_obs: &[f64], draws: usize, seed: u64) -> Result<Matrix> {
        if draws == 0 {
            return Err(Error::invalid("need at least one draw"));
        }
        let mut rng = Rng::new(seed);
        let mut tau = Matrix::zeros(draws, self.tau_dim);
        for v in tau.as_mut_slice() {
            *v = self.arch.base.draw(&mut rng);
        }
        self.evaluate(y_obs, &tau)
    }
}

/// Settings used by the command line and the benchmark for the engine.
pub fn engine_train_config(seed: u64) -> TrainConfig {
    TrainConfig {
        epochs: 30,
        batch_size: 512,
        learning_rate: 5e-3,
        seed,
        schedule: Schedule::Cosine { floor: 0.01 },
        ..TrainConfig::default()
    }
}

/// Free-function form of [`InverseMap::posterior_sample`].
pub fn posterior_sample(map: &InverseMap, y_obs: &[f64], draws: usize, seed: u64) -> Result<Matrix> {
    map.posterior_sample(y_obs, draws, seed)
}

/// Fits `H` and `S` jointly on a simulation table.
pub fn train_inverse_map(table: &SimTable, arch: &ArchConfig, train: &TrainConfig) -> Result<InverseMap> {
    train_inverse_map_with(table, arch, train, |_, _| {})
}

/// Like [`train_inverse_map`], reporting each epoch's mean loss as it completes.
pub fn train_inverse_map_with(
    table: &SimTable,
    arch: &ArchConfig,
    train: &TrainConfig,
    mut on_epoch: impl FnMut(usize, f64),
) -> Result<InverseMap> {
    train.validate()?;
    if table.is_empty() {
        return Err(Error::invalid("empty simulation table"));
    }
    let (k, n) = (table.theta_dim(), table.data_dim());
    let tau_dim = arch.tau_dim.unwrap_or(table.tau_dim());
    if tau_dim == 0 {
        return Err(Error::invalid("tau must have at least one column"));
    }
    if !arch.resample_tau && tau_dim != table.tau_dim() {
        return Err(Error::dim("table tau width", tau_dim, table.tau_dim()));
    }
    if arch.base == BaseDist::Gaussian && matches!(arch.embedding, TauEmbedding::Cosine { .. }) {
        return Err(Error::invalid("cosine embedding needs uniform tau"));
    }
    if arch.loss == HeadLoss::Quantile && (arch.base != BaseDist::Uniform || tau_dim != k) {
        return Err(Error::invalid(
            "quantile mode needs uniform tau with one level per parameter",
        ));
    }

    let mut init = Rng::derive(train.seed, 0);
    let mut summary = SummaryNet::new(n, k, &arch.summary_hidden, arch.summary_activation, &mut init)?;
    let head_in = k + arch.embedding.width(tau_dim);
    let mut head = Mlp::build(
        head_in,
        &arch.head_hidden,
        arch.head_activation,
        k,
        Activation::Identity,
        &mut init,
    );

    let y_scale = Affine::fit(&table.y);
    let theta_scale = Affine::fit(&table.theta);
    let ys = y_scale.forward(&table.y);
    let thetas = theta_scale.forward(&table.theta);

    let rows = table.len();
    let mut order: Vec<usize> = (0..rows).collect();
    let mut shuffle = Rng::derive(train.seed, 1);
    let mut opt = OptState::default();
    let mut trace = Vec::with_capacity(train.epochs);
    let mut tau = if arch.resample_tau {
        Matrix::zeros(rows, tau_dim)
    } else {
        table.tau.clone()
    };

    for epoch in 0..train.epochs {
        let epoch_cfg = train.for_epoch(epoch);
        if arch.resample_tau {
            let mut r = Rng::derive(train.seed, 2 + epoch as u64);
            for v in tau.as_mut_slice() {
                *v = arch.base.draw(&mut r);
            }
        }
        shuffle.shuffle(&mut order);
        let mut total = 0.0;
        for batch in order.chunks(train.batch_size) {
            let yb = ys.select_rows(batch);
            let tb = tau.select_rows(batch);
            let target = thetas.select_rows(batch);

            let st = summary.net().forward_batch(&yb)?;
            let input = st.output().hstack(&arch.embedding.embed(&tb))?;
            let ht = head.forward_batch(&input)?;
            let pred = ht.output();
            let (value, grad) = match arch.loss {
                HeadLoss::Quantile => loss::pinball(pred.as_slice(), target.as_slice(), tb.as_slice()),
                HeadLoss::L2 => loss::mse(pred.as_slice(), target.as_slice()),
            };
            total += value * batch.len() as f64;
            if !value.is_finite() {
                break;
            }
            let d_out = Matrix::from_vec(pred.rows(), pred.cols(), grad)?;
            let hg = head.backward(&ht, &d_out)?;
            let sg = summary.net().backward(&st, &hg.input.column_range(0, k))?;

            let mut slots = mlp_slots(summary.net_mut(), &sg.layers, "summary ");
            slots.extend(mlp_slots(&mut head, &hg.layers, "head "));
            optim::step(&mut slots, &epoch_cfg, &mut opt).map_err(|e| match e {
                Error::NonFinite(_) => Error::Divergence {
                    epoch,
                    last_finite: epoch.checked_sub(1),
                },
                other => other,
            })?;
        }
        let mean = total / rows as f64;
        if !mean.is_finite() {
            return Err(Error::Divergence {
                epoch,
                last_finite: epoch.checked_sub(1),
            });
        }
        on_epoch(epoch, mean);
        trace.push(mean);
    }

    Ok(InverseMap {
        summary,
        head,
        arch: arch.clone(),
        tau_dim,
        y_scale,
        theta_scale,
        loss_trace: trace,
    })
}
