//! Dense layers: `post = h(W x + b)`.

use serde::{Deserialize, Serialize};

use crate::linalg::Matrix;
use crate::rng::Rng;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Identity,
    Relu,
    Tanh,
    Sigmoid,
}

impl Activation {
    #[inline]
    pub fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Identity => z,
            Activation::Relu => z.max(0.0),
            Activation::Tanh => z.tanh(),
            Activation::Sigmoid => sigmoid(z),
        }
    }

    /// Derivative expressed through the pre-activation `z` and the output `a`.
    /// `relu'(0)` is taken as 0.
    #[inline]
    pub fn derivative(self, z: f64, a: f64) -> f64 {
        match self {
            Activation::Identity => 1.0,
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => 1.0 - a * a,
            Activation::Sigmoid => a * (1.0 - a),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Activation::Identity => "identity",
            Activation::Relu => "relu",
            Activation::Tanh => "tanh",
            Activation::Sigmoid => "sigmoid",
        }
    }
}

impl std::str::FromStr for Activation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "identity" | "linear" => Ok(Activation::Identity),
            "relu" => Ok(Activation::Relu),
            "tanh" => Ok(Activation::Tanh),
            "sigmoid" => Ok(Activation::Sigmoid),
            other => Err(Error::Parse(format!("unknown activation `{other}`"))),
        }
    }
}

/// Numerically stable logistic function.
#[inline]
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseLayer {
    /// `out x in`
    pub weights: Matrix,
    pub bias: Vec<f64>,
    pub activation: Activation,
}

/// Gradient of a loss with respect to one layer's parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerGrad {
    pub weights: Matrix,
    pub bias: Vec<f64>,
}

impl LayerGrad {
    pub fn zeros_like(layer: &DenseLayer) -> Self {
        LayerGrad {
            weights: Matrix::zeros(layer.out_dim(), layer.in_dim()),
            bias: vec![0.0; layer.out_dim()],
        }
    }

    pub fn add_assign(&mut self, other: &LayerGrad) {
        self.weights.add_assign(&other.weights);
        for (a, b) in self.bias.iter_mut().zip(&other.bias) {
            *a += b;
        }
    }

    pub fn is_finite(&self) -> bool {
        self.weights.is_finite() && self.bias.iter().all(|v| v.is_finite())
    }
}

impl DenseLayer {
    pub fn new(weights: Matrix, bias: Vec<f64>, activation: Activation) -> Result<Self> {
        if bias.len() != weights.rows() {
            return Err(Error::dim("DenseLayer bias", weights.rows(), bias.len()));
        }
        Ok(DenseLayer {
            weights,
            bias,
            activation,
        })
    }

    /// Glorot-uniform weights, zero bias.
    pub fn glorot(in_dim: usize, out_dim: usize, activation: Activation, rng: &mut Rng) -> Self {
        let limit = (6.0 / (in_dim + out_dim) as f64).sqrt();
        let data = (0..in_dim * out_dim)
            .map(|_| (2.0 * rng.uniform() - 1.0) * limit)
            .collect();
        DenseLayer {
            weights: Matrix::from_vec(out_dim, in_dim, data).expect("sized by construction"),
            bias: vec![0.0; out_dim],
            activation,
        }
    }

    pub fn zeros(in_dim: usize, out_dim: usize, activation: Activation) -> Self {
        DenseLayer {
            weights: Matrix::zeros(out_dim, in_dim),
            bias: vec![0.0; out_dim],
            activation,
        }
    }

    #[inline]
    pub fn in_dim(&self) -> usize {
        self.weights.cols()
    }

    #[inline]
    pub fn out_dim(&self) -> usize {
        self.weights.rows()
    }

    pub fn param_count(&self) -> usize {
        self.weights.rows() * self.weights.cols() + self.bias.len()
    }

    /// Pre-activations `X W^T + b` for a batch `X` of shape `(batch x in)`.
    pub fn affine(&self, input: &Matrix) -> Result<Matrix> {
        if input.cols() != self.in_dim() {
            return Err(Error::dim("dense layer input", self.in_dim(), input.cols()));
        }
        let mut pre = input.matmul_transposed(&self.weights);
        for r in 0..pre.rows() {
            for (v, b) in pre.row_mut(r).iter_mut().zip(&self.bias) {
                *v += b;
            }
        }
        Ok(pre)
    }

    /// Returns `(pre, post)` for a batch.
    pub fn forward(&self, input: &Matrix) -> Result<(Matrix, Matrix)> {
        let pre = self.affine(input)?;
        let act = self.activation;
        let post = pre.map(|z| act.apply(z));
        Ok((pre, post))
    }

    /// Back-propagates `d_post` through the activation and the affine map.
    ///
    /// Returns the parameter gradient (summed over the batch) and the
    /// gradient with respect to `input`.
    pub fn backward(
        &self,
        input: &Matrix,
        pre: &Matrix,
        post: &Matrix,
        d_post: &Matrix,
    ) -> (LayerGrad, Matrix) {
        let d_pre = self.activation_backward(pre, post, d_post);
        self.affine_backward(input, &d_pre)
    }

    pub fn activation_backward(&self, pre: &Matrix, post: &Matrix, d_post: &Matrix) -> Matrix {
        let act = self.activation;
        if act == Activation::Identity {
            return d_post.clone();
        }
        let mut d_pre = d_post.clone();
        for ((d, &z), &a) in d_pre
            .as_mut_slice()
            .iter_mut()
            .zip(pre.as_slice())
            .zip(post.as_slice())
        {
            *d *= act.derivative(z, a);
        }
        d_pre
    }

    pub fn affine_backward(&self, input: &Matrix, d_pre: &Matrix) -> (LayerGrad, Matrix) {
        let grad = LayerGrad {
            weights: d_pre.transpose_matmul(input),
            bias: d_pre.column_sums(),
        };
        let d_input = d_pre.matmul(&self.weights);
        (grad, d_input)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sigmoid_is_stable_in_the_tails() {
        assert_eq!(sigmoid(0.0), 0.5);
        assert!(sigmoid(-800.0) >= 0.0 && sigmoid(-800.0).is_finite());
        assert_eq!(sigmoid(800.0), 1.0);
        assert!((sigmoid(2.0) + sigmoid(-2.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn relu_kink_derivative_is_zero() {
        assert_eq!(Activation::Relu.derivative(0.0, 0.0), 0.0);
        assert_eq!(Activation::Relu.derivative(1e-300, 1e-300), 1.0);
    }

    #[test]
    fn bias_length_checked() {
        assert!(DenseLayer::new(Matrix::zeros(2, 3), vec![0.0; 3], Activation::Relu).is_err());
    }

    #[test]
    fn glorot_respects_limit() {
        let mut rng = Rng::new(0);
        let l = DenseLayer::glorot(10, 6, Activation::Tanh, &mut rng);
        let lim = (6.0f64 / 16.0).sqrt();
        assert!(l.weights.as_slice().iter().all(|w| w.abs() <= lim));
        assert_eq!(l.bias, vec![0.0; 6]);
    }
}
