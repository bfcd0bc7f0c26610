//! The quantile causal network.
//!
//! For covariates `x` and quantile level `q`:
//!
//! ```text
//! s      = h(W1 cos_embed(q))             quantile features (width W)
//! pt     = h(W2 x)                        propensity features (8)
//! ph     = W3 pt                          propensity logits (W)
//! z_prob = sigmoid(w_r . ph + b_r)        scalar treatment probability
//! mu     = s o h(W4 [x, pt])              prognostic branch
//! tau    = s o h(W5 x)                    effect branch
//! y_hat  = W6 (mu + tau o g)              (mean response, quantile response)
//! ```
//!
//! `o` is the element-wise product and `g` the treatment gate. The gate is
//! either the observed treatment, a forced value (counterfactual readout), or
//! the soft propensity `sigmoid(ph)`.

use serde::{Deserialize, Serialize};

use super::loss::LossComponents;
use crate::linalg::Matrix;
use crate::nn::embed::cosine_embed_into;
use crate::nn::optim::{layer_slots, ParamSlot};
use crate::nn::{sigmoid, Activation, DenseLayer, LayerGrad};
use crate::rng::Rng;
use crate::{Error, Result};

/// How the quantile level modulates the two branches.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Modulation {
    /// Element-wise by the learned cosine features `s`.
    Embedded,
    /// By the scalar level `q` itself.
    Scalar,
}

/// Gate used while fitting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrainingGate {
    /// The observed treatment indicator.
    Treatment,
    /// The soft propensity `sigmoid(ph)`.
    Propensity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CausalArch {
    pub embed_dim: usize,
    pub width: usize,
    pub prop_width: usize,
    pub activation: Activation,
    pub modulation: Modulation,
    pub training_gate: TrainingGate,
}

impl Default for CausalArch {
    fn default() -> Self {
        CausalArch {
            embed_dim: 32,
            width: 32,
            prop_width: 8,
            activation: Activation::Relu,
            modulation: Modulation::Embedded,
            training_gate: TrainingGate::Treatment,
        }
    }
}

/// Treatment gate for one forward pass.
#[derive(Debug, Clone, PartialEq)]
pub enum Gate {
    /// One value per row, broadcast across the gate width.
    PerUnit(Vec<f64>),
    /// The same value for every row.
    Forced(f64),
    /// `sigmoid(ph)`, as wide as the branches.
    Propensity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CausalQuantileNet {
    pub arch: CausalArch,
    /// W1: cosine features -> W
    pub embed: DenseLayer,
    /// W2: x -> prop_width
    pub prop_hidden: DenseLayer,
    /// W3: prop_width -> W, affine
    pub prop_out: DenseLayer,
    /// W -> 1, sigmoid
    pub prop_head: DenseLayer,
    /// W4: [x, pt] -> W
    pub mu_block: DenseLayer,
    /// W5: x -> W
    pub tau_block: DenseLayer,
    /// W6: W -> 2, affine
    pub out_head: DenseLayer,
    /// Outcome standardization `(y - center) / scale` used in training.
    pub y_center: f64,
    pub y_scale: f64,
    pub trained: bool,
    /// Per-epoch loss components recorded by the trainer.
    #[serde(default)]
    pub loss_trace: Vec<LossComponents>,
}

/// Intermediate values of a batch forward pass.
#[derive(Debug, Clone)]
pub struct CausalTrace {
    pub x: Matrix,
    pub q: Vec<f64>,
    pub emb: Matrix,
    pub s_pre: Matrix,
    /// Modulation actually applied (`s` or broadcast `q`).
    pub modv: Matrix,
    pub pt_pre: Matrix,
    pub pt: Matrix,
    pub ph: Matrix,
    pub z_logit: Matrix,
    pub z_prob: Matrix,
    pub xa: Matrix,
    pub a_pre: Matrix,
    pub a: Matrix,
    pub c_pre: Matrix,
    pub c: Matrix,
    pub gate: Matrix,
    pub gate_is_soft: bool,
    pub h: Matrix,
    /// `B x 2`: standardized (mean, quantile) response.
    pub out: Matrix,
}

impl CausalTrace {
    pub fn y_mean(&self) -> Vec<f64> {
        self.out.column(0)
    }

    pub fn y_quantile(&self) -> Vec<f64> {
        self.out.column(1)
    }

    pub fn z_prob(&self) -> Vec<f64> {
        self.z_prob.column(0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CausalGrads {
    pub embed: LayerGrad,
    pub prop_hidden: LayerGrad,
    pub prop_out: LayerGrad,
    pub prop_head: LayerGrad,
    pub mu_block: LayerGrad,
    pub tau_block: LayerGrad,
    pub out_head: LayerGrad,
}

impl CausalGrads {
    pub fn is_finite(&self) -> bool {
        [
            &self.embed,
            &self.prop_hidden,
            &self.prop_out,
            &self.prop_head,
            &self.mu_block,
            &self.tau_block,
            &self.out_head,
        ]
        .iter()
        .all(|g| g.is_finite())
    }

    pub fn flatten(&self) -> Vec<f64> {
        let mut v = Vec::new();
        for g in [
            &self.embed,
            &self.prop_hidden,
            &self.prop_out,
            &self.prop_head,
            &self.mu_block,
            &self.tau_block,
            &self.out_head,
        ] {
            v.extend_from_slice(g.weights.as_slice());
            v.extend_from_slice(&g.bias);
        }
        v
    }
}

impl CausalQuantileNet {
    pub fn new(p: usize, arch: CausalArch, seed: u64) -> Result<Self> {
        if p == 0 || arch.width == 0 || arch.prop_width == 0 || arch.embed_dim == 0 {
            return Err(Error::invalid("causal net dimensions must be positive"));
        }
        let mut rng = Rng::derive(seed, 0);
        let (w, act) = (arch.width, arch.activation);
        Ok(CausalQuantileNet {
            embed: DenseLayer::glorot(arch.embed_dim, w, act, &mut rng),
            prop_hidden: DenseLayer::glorot(p, arch.prop_width, act, &mut rng),
            prop_out: DenseLayer::glorot(arch.prop_width, w, Activation::Identity, &mut rng),
            prop_head: DenseLayer::glorot(w, 1, Activation::Sigmoid, &mut rng),
            mu_block: DenseLayer::glorot(p + arch.prop_width, w, act, &mut rng),
            tau_block: DenseLayer::glorot(p, w, act, &mut rng),
            out_head: DenseLayer::glorot(w, 2, Activation::Identity, &mut rng),
            arch,
            y_center: 0.0,
            y_scale: 1.0,
            trained: false,
            loss_trace: Vec::new(),
        })
    }

    pub fn p(&self) -> usize {
        self.tau_block.in_dim()
    }

    fn layers(&self) -> [&DenseLayer; 7] {
        [
            &self.embed,
            &self.prop_hidden,
            &self.prop_out,
            &self.prop_head,
            &self.mu_block,
            &self.tau_block,
            &self.out_head,
        ]
    }

    fn layers_mut(&mut self) -> [&mut DenseLayer; 7] {
        [
            &mut self.embed,
            &mut self.prop_hidden,
            &mut self.prop_out,
            &mut self.prop_head,
            &mut self.mu_block,
            &mut self.tau_block,
            &mut self.out_head,
        ]
    }

    pub fn param_count(&self) -> usize {
        self.layers().iter().map(|l| l.param_count()).sum()
    }

    /// All weights and biases in a fixed order (layer by layer, weights first).
    pub fn flat_params(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.param_count());
        for l in self.layers() {
            v.extend_from_slice(l.weights.as_slice());
            v.extend_from_slice(&l.bias);
        }
        v
    }

    pub fn set_flat_params(&mut self, v: &[f64]) -> Result<()> {
        if v.len() != self.param_count() {
            return Err(Error::dim("flat parameter vector", self.param_count(), v.len()));
        }
        let mut off = 0;
        for l in self.layers_mut() {
            let nw = l.weights.as_slice().len();
            l.weights.as_mut_slice().copy_from_slice(&v[off..off + nw]);
            off += nw;
            let nb = l.bias.len();
            l.bias.copy_from_slice(&v[off..off + nb]);
            off += nb;
        }
        Ok(())
    }

    /// Named parameter slots paired with `grads`, for the optimizer.
    pub fn slots<'a>(&'a mut self, grads: &'a CausalGrads) -> Vec<ParamSlot<'a>> {
        let mut out = Vec::with_capacity(14);
        out.extend(layer_slots(&mut self.embed, &grads.embed, "W1 embed"));
        out.extend(layer_slots(&mut self.prop_hidden, &grads.prop_hidden, "W2 propensity"));
        out.extend(layer_slots(&mut self.prop_out, &grads.prop_out, "W3 propensity"));
        out.extend(layer_slots(&mut self.prop_head, &grads.prop_head, "propensity head"));
        out.extend(layer_slots(&mut self.mu_block, &grads.mu_block, "W4 mu"));
        out.extend(layer_slots(&mut self.tau_block, &grads.tau_block, "W5 tau"));
        out.extend(layer_slots(&mut self.out_head, &grads.out_head, "W6 output"));
        out
    }

    /// Batch forward pass on covariates `x` (`B x p`) at levels `q`.
    pub fn forward(&self, x: &Matrix, q: &[f64], gate: &Gate) -> Result<CausalTrace> {
        let b = x.rows();
        if x.cols() != self.p() {
            return Err(Error::dim("covariates", self.p(), x.cols()));
        }
        if q.len() != b {
            return Err(Error::dim("quantile levels", b, q.len()));
        }
        if let Some(bad) = q.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::invalid(format!("quantile level {bad} outside [0, 1]")));
        }
        let w = self.arch.width;

        let mut emb = Matrix::zeros(b, self.arch.embed_dim);
        for (r, &qv) in q.iter().enumerate() {
            cosine_embed_into(qv, emb.row_mut(r));
        }
        let (s_pre, s) = self.embed.forward(&emb)?;
        let modv = match self.arch.modulation {
            Modulation::Embedded => s,
            Modulation::Scalar => {
                let mut m = Matrix::zeros(b, w);
                for (r, &qv) in q.iter().enumerate() {
                    m.row_mut(r).fill(qv);
                }
                m
            }
        };

        let (pt_pre, pt) = self.prop_hidden.forward(x)?;
        let (ph, _) = self.prop_out.forward(&pt)?;
        let (z_logit, z_prob) = self.prop_head.forward(&ph)?;

        let xa = x.hstack(&pt)?;
        let (a_pre, a) = self.mu_block.forward(&xa)?;
        let (c_pre, c) = self.tau_block.forward(x)?;

        let (gate_m, gate_is_soft) = match gate {
            Gate::PerUnit(v) => {
                if v.len() != b {
                    return Err(Error::dim("gate values", b, v.len()));
                }
                let mut m = Matrix::zeros(b, w);
                for (r, &g) in v.iter().enumerate() {
                    m.row_mut(r).fill(g);
                }
                (m, false)
            }
            Gate::Forced(g) => (Matrix::filled(b, w, *g), false),
            Gate::Propensity => (ph.map(sigmoid), true),
        };

        let mut h = Matrix::zeros(b, w);
        for r in 0..b {
            let dst = h.row_mut(r);
            let (mv, av, cv, gv) = (modv.row(r), a.row(r), c.row(r), gate_m.row(r));
            for j in 0..w {
                dst[j] = mv[j] * av[j] + mv[j] * cv[j] * gv[j];
            }
        }
        let (out, _) = self.out_head.forward(&h)?;

        Ok(CausalTrace {
            x: x.clone(),
            q: q.to_vec(),
            emb,
            s_pre,
            modv,
            pt_pre,
            pt,
            ph,
            z_logit,
            z_prob,
            xa,
            a_pre,
            a,
            c_pre,
            c,
            gate: gate_m,
            gate_is_soft,
            h,
            out,
        })
    }

    /// Reverse pass given `dL/d out` (`B x 2`) and `dL/d z_prob` (`B`).
    pub fn backward(&self, t: &CausalTrace, d_out: &Matrix, d_zprob: &[f64]) -> Result<CausalGrads> {
        let b = t.out.rows();
        if (d_out.rows(), d_out.cols()) != (b, 2) {
            return Err(Error::dim("output gradient rows", b, d_out.rows()));
        }
        if d_zprob.len() != b {
            return Err(Error::dim("propensity gradient", b, d_zprob.len()));
        }
        let w = self.arch.width;

        let (g_out, dh) = self.out_head.backward(&t.h, &t.out, &t.out, d_out);

        // h = m*a + m*c*g
        let mut da = Matrix::zeros(b, w);
        let mut dc = Matrix::zeros(b, w);
        let mut dm = Matrix::zeros(b, w);
        let mut dg = Matrix::zeros(b, w);
        for r in 0..b {
            let (dhr, mv, av, cv, gv) = (dh.row(r), t.modv.row(r), t.a.row(r), t.c.row(r), t.gate.row(r));
            for j in 0..w {
                da.row_mut(r)[j] = dhr[j] * mv[j];
                dc.row_mut(r)[j] = dhr[j] * mv[j] * gv[j];
                dm.row_mut(r)[j] = dhr[j] * (av[j] + cv[j] * gv[j]);
                dg.row_mut(r)[j] = dhr[j] * mv[j] * cv[j];
            }
        }

        let (g_tau, _) = self.tau_block.backward(&t.x, &t.c_pre, &t.c, &dc);
        let (g_mu, dxa) = self.mu_block.backward(&t.xa, &t.a_pre, &t.a, &da);
        let g_embed = match self.arch.modulation {
            Modulation::Embedded => self.embed.backward(&t.emb, &t.s_pre, &t.modv, &dm).0,
            Modulation::Scalar => LayerGrad::zeros_like(&self.embed),
        };

        let (g_head, mut dph) =
            self.prop_head
                .backward(&t.ph, &t.z_logit, &t.z_prob, &Matrix::column_vector(d_zprob));
        if t.gate_is_soft {
            for ((d, &g), &dgv) in dph
                .as_mut_slice()
                .iter_mut()
                .zip(t.gate.as_slice())
                .zip(dg.as_slice())
            {
                *d += dgv * g * (1.0 - g);
            }
        }
        let (g_pout, mut dpt) = self.prop_out.backward(&t.pt, &t.ph, &t.ph, &dph);
        let p = self.p();
        for r in 0..b {
            let src = &dxa.row(r)[p..];
            for (d, s) in dpt.row_mut(r).iter_mut().zip(src) {
                *d += s;
            }
        }
        let (g_phid, _) = self.prop_hidden.backward(&t.x, &t.pt_pre, &t.pt, &dpt);

        Ok(CausalGrads {
            embed: g_embed,
            prop_hidden: g_phid,
            prop_out: g_pout,
            prop_head: g_head,
            mu_block: g_mu,
            tau_block: g_tau,
            out_head: g_out,
        })
    }
}

/// Single-unit convenience forward returning
/// `(y_mean, y_quantile, z_prob, mu, tau)` on the training scale.
pub fn forward_causal(
    net: &CausalQuantileNet,
    x: &[f64],
    q: f64,
    gate: f64,
) -> Result<(f64, f64, f64, Vec<f64>, Vec<f64>)> {
    let t = net.forward(&Matrix::row_vector(x), &[q], &Gate::Forced(gate))?;
    let mu = t.modv.hadamard(&t.a).row(0).to_vec();
    let tau = t.modv.hadamard(&t.c).row(0).to_vec();
    Ok((t.out.get(0, 0), t.out.get(0, 1), t.z_prob.get(0, 0), mu, tau))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_arch() -> CausalArch {
        CausalArch {
            embed_dim: 2,
            width: 2,
            prop_width: 2,
            ..CausalArch::default()
        }
    }

    fn layer(rows: usize, cols: usize, w: &[f64], b: &[f64], a: Activation) -> DenseLayer {
        DenseLayer::new(Matrix::from_vec(rows, cols, w.to_vec()).unwrap(), b.to_vec(), a).unwrap()
    }

    #[test]
    fn output_is_two_dimensional() {
        let net = CausalQuantileNet::new(3, CausalArch::default(), 1).unwrap();
        let x = Matrix::filled(4, 3, 0.3);
        let t = net.forward(&x, &[0.1, 0.4, 0.6, 0.9], &Gate::Propensity).unwrap();
        assert_eq!((t.out.rows(), t.out.cols()), (4, 2));
        assert!(t.z_prob().iter().all(|&p| p > 0.0 && p < 1.0));
    }

    #[test]
    fn zero_effect_branch_ignores_the_gate() {
        let mut net = CausalQuantileNet::new(3, CausalArch::default(), 2).unwrap();
        net.tau_block = DenseLayer::zeros(3, 32, Activation::Relu);
        let x = Matrix::from_vec(1, 3, vec![0.5, -1.0, 2.0]).unwrap();
        let a = net.forward(&x, &[0.3], &Gate::Forced(0.0)).unwrap();
        let b = net.forward(&x, &[0.3], &Gate::Forced(1.0)).unwrap();
        let c = net.forward(&x, &[0.3], &Gate::Propensity).unwrap();
        assert_eq!(a.out, b.out);
        assert_eq!(a.out, c.out);
    }

    #[test]
    fn tiny_net_matches_hand_composition() {
        let mut net = CausalQuantileNet::new(1, tiny_arch(), 0).unwrap();
        let relu = Activation::Relu;
        net.embed = layer(2, 2, &[1.0, 0.0, 0.5, 0.5], &[0.0, 0.2], relu);
        net.prop_hidden = layer(2, 1, &[1.0, -1.0], &[0.0, 0.5], relu);
        net.prop_out = layer(2, 2, &[1.0, 0.0, 0.0, 1.0], &[0.0, 0.0], Activation::Identity);
        net.prop_head = layer(1, 2, &[1.0, 1.0], &[0.0], Activation::Sigmoid);
        net.mu_block = layer(2, 3, &[1.0, 0.0, 0.0, 0.0, 1.0, 1.0], &[0.0, 0.0], relu);
        net.tau_block = layer(2, 1, &[2.0, -1.0], &[0.0, 1.0], relu);
        net.out_head = layer(2, 2, &[1.0, 1.0, 1.0, -1.0], &[0.0, 0.1], Activation::Identity);

        let (xv, q) = (0.4f64, 0.25f64);
        let e = [(std::f64::consts::PI * q).cos(), (2.0 * std::f64::consts::PI * q).cos()];
        let s = [e[0].max(0.0), (0.5 * e[0] + 0.5 * e[1] + 0.2).max(0.0)];
        let pt = [xv.max(0.0), (-xv + 0.5).max(0.0)];
        let ph = pt;
        let zp = sigmoid(ph[0] + ph[1]);
        let a = [xv.max(0.0), (pt[0] + pt[1]).max(0.0)];
        let c = [(2.0 * xv).max(0.0), (-xv + 1.0).max(0.0)];
        let g = [sigmoid(ph[0]), sigmoid(ph[1])];
        let h: Vec<f64> = (0..2).map(|j| s[j] * a[j] + s[j] * c[j] * g[j]).collect();
        let y0 = h[0] + h[1];
        let y1 = h[0] - h[1] + 0.1;

        let t = net.forward(&Matrix::row_vector(&[xv]), &[q], &Gate::Propensity).unwrap();
        assert!((t.out.get(0, 0) - y0).abs() < 1e-14);
        assert!((t.out.get(0, 1) - y1).abs() < 1e-14);
        assert!((t.z_prob.get(0, 0) - zp).abs() < 1e-14);
    }

    #[test]
    fn forward_validates_inputs() {
        let net = CausalQuantileNet::new(3, CausalArch::default(), 1).unwrap();
        let x = Matrix::filled(2, 3, 0.0);
        assert!(net.forward(&Matrix::filled(2, 2, 0.0), &[0.5, 0.5], &Gate::Forced(1.0)).is_err());
        assert!(net.forward(&x, &[0.5], &Gate::Forced(1.0)).is_err());
        assert!(net.forward(&x, &[0.5, 1.5], &Gate::Forced(1.0)).is_err());
        assert!(net.forward(&x, &[0.5, 0.5], &Gate::PerUnit(vec![1.0])).is_err());
        assert!(forward_causal(&net, &[0.0, 0.0, 0.0], 0.5, 1.0).is_ok());
    }

    #[test]
    fn flat_params_round_trip() {
        let mut net = CausalQuantileNet::new(3, CausalArch::default(), 5).unwrap();
        let mut v = net.flat_params();
        v[7] += 1.0;
        net.set_flat_params(&v).unwrap();
        assert_eq!(net.flat_params(), v);
        assert!(net.set_flat_params(&v[1..]).is_err());
    }
}
