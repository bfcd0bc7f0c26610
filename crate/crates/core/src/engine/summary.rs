//! Learned summary statistics: a stack of `tanh` (or `relu`) layers followed
//! by an affine output with one unit per parameter.

use serde::{Deserialize, Serialize};

use crate::nn::{Activation, DenseLayer, Mlp};
use crate::rng::Rng;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryNet {
    net: Mlp,
}

impl SummaryNet {
    /// `data_dim -> hidden... -> theta_dim`, hidden layers sharing `activation`.
    pub fn new(
        data_dim: usize,
        theta_dim: usize,
        hidden: &[usize],
        activation: Activation,
        rng: &mut Rng,
    ) -> Result<Self> {
        if !matches!(activation, Activation::Tanh | Activation::Relu) {
            return Err(Error::invalid("summary hidden layers are tanh or relu"));
        }
        if data_dim == 0 || theta_dim == 0 {
            return Err(Error::invalid("summary dimensions must be positive"));
        }
        Ok(SummaryNet {
            net: Mlp::build(data_dim, hidden, activation, theta_dim, Activation::Identity, rng),
        })
    }

    /// Wraps an existing network; the last layer must be affine.
    pub fn from_mlp(net: Mlp) -> Result<Self> {
        if net.layers().last().map(|l| l.activation) != Some(Activation::Identity) {
            return Err(Error::invalid("summary output layer must be affine"));
        }
        Ok(SummaryNet { net })
    }

    /// Same shape with every weight and bias zero.
    pub fn zeroed(&self) -> Self {
        let layers = self
            .net
            .layers()
            .iter()
            .map(|l| DenseLayer::zeros(l.in_dim(), l.out_dim(), l.activation))
            .collect();
        SummaryNet {
            net: Mlp::new(layers).expect("same shape"),
        }
    }

    pub fn net(&self) -> &Mlp {
        &self.net
    }

    pub fn net_mut(&mut self) -> &mut Mlp {
        &mut self.net
    }

    pub fn data_dim(&self) -> usize {
        self.net.in_dim()
    }

    pub fn stat_dim(&self) -> usize {
        self.net.out_dim()
    }

    pub fn summary_forward(&self, y: &[f64]) -> Result<Vec<f64>> {
        Ok(self.net.forward(y)?.output().row(0).to_vec())
    }
}
