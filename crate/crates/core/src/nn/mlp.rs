use serde::{Deserialize, Serialize};

use super::layer::{Activation, DenseLayer, LayerGrad};
use crate::linalg::Matrix;
use crate::rng::Rng;
use crate::{Error, Result};

/// Feed-forward stack of dense layers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    layers: Vec<DenseLayer>,
}

/// Everything the backward pass needs: the batch input and each layer's
/// pre- and post-activations.
#[derive(Debug, Clone)]
pub struct ForwardTrace {
    pub input: Matrix,
    pub pre: Vec<Matrix>,
    pub post: Vec<Matrix>,
}

impl ForwardTrace {
    pub fn output(&self) -> &Matrix {
        self.post.last().unwrap_or(&self.input)
    }
}

/// Per-layer parameter gradients plus the gradient with respect to the input.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub layers: Vec<LayerGrad>,
    pub input: Matrix,
}

impl Mlp {
    pub fn new(layers: Vec<DenseLayer>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::invalid("an Mlp needs at least one layer"));
        }
        for (k, pair) in layers.windows(2).enumerate() {
            if pair[0].out_dim() != pair[1].in_dim() {
                return Err(Error::dim(
                    format!("layer {} input", k + 1),
                    pair[0].out_dim(),
                    pair[1].in_dim(),
                ));
            }
        }
        Ok(Mlp { layers })
    }

    /// Glorot-initialised net with `hidden` widths sharing one activation and
    /// a final layer of `out_dim` units with `output` activation.
    pub fn build(
        in_dim: usize,
        hidden: &[usize],
        hidden_activation: Activation,
        out_dim: usize,
        output: Activation,
        rng: &mut Rng,
    ) -> Self {
        let mut layers = Vec::with_capacity(hidden.len() + 1);
        let mut prev = in_dim;
        for &h in hidden {
            layers.push(DenseLayer::glorot(prev, h, hidden_activation, rng));
            prev = h;
        }
        layers.push(DenseLayer::glorot(prev, out_dim, output, rng));
        Mlp { layers }
    }

    pub fn layers(&self) -> &[DenseLayer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [DenseLayer] {
        &mut self.layers
    }

    pub fn in_dim(&self) -> usize {
        self.layers[0].in_dim()
    }

    pub fn out_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].out_dim()
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(DenseLayer::param_count).sum()
    }

    /// Forward pass for a single input vector.
    pub fn forward(&self, input: &[f64]) -> Result<ForwardTrace> {
        self.forward_batch(&Matrix::row_vector(input))
    }

    /// Forward pass for a batch with one sample per row.
    pub fn forward_batch(&self, input: &Matrix) -> Result<ForwardTrace> {
        if input.cols() != self.in_dim() {
            return Err(Error::dim("Mlp input", self.in_dim(), input.cols()));
        }
        let mut pre = Vec::with_capacity(self.layers.len());
        let mut post: Vec<Matrix> = Vec::with_capacity(self.layers.len());
        for layer in &self.layers {
            let x = post.last().unwrap_or(input);
            let (z, a) = layer.forward(x)?;
            pre.push(z);
            post.push(a);
        }
        Ok(ForwardTrace {
            input: input.clone(),
            pre,
            post,
        })
    }

    /// Output only, for inference.
    pub fn predict(&self, input: &Matrix) -> Result<Matrix> {
        if input.cols() != self.in_dim() {
            return Err(Error::dim("Mlp input", self.in_dim(), input.cols()));
        }
        let mut x = input.clone();
        for layer in &self.layers {
            x = layer.forward(&x)?.1;
        }
        Ok(x)
    }

    /// Reverse-mode pass. `d_output` is `dLoss/dOutput` with the same shape
    /// as the trace output; parameter gradients are summed over the batch.
    pub fn backward(&self, trace: &ForwardTrace, d_output: &Matrix) -> Result<Gradients> {
        if trace.pre.len() != self.layers.len() || trace.post.len() != self.layers.len() {
            return Err(Error::dim(
                "trace layer count",
                self.layers.len(),
                trace.pre.len(),
            ));
        }
        for (k, (layer, z)) in self.layers.iter().zip(&trace.pre).enumerate() {
            if z.cols() != layer.out_dim() {
                return Err(Error::dim(format!("trace layer {k}"), layer.out_dim(), z.cols()));
            }
        }
        let out = trace.output();
        if (d_output.rows(), d_output.cols()) != (out.rows(), out.cols()) {
            return Err(Error::dim(
                "output gradient",
                out.rows() * out.cols(),
                d_output.rows() * d_output.cols(),
            ));
        }

        let mut grads = Vec::with_capacity(self.layers.len());
        let mut delta = d_output.clone();
        for k in (0..self.layers.len()).rev() {
            let x = if k == 0 {
                &trace.input
            } else {
                &trace.post[k - 1]
            };
            let (g, d_in) = self.layers[k].backward(x, &trace.pre[k], &trace.post[k], &delta);
            grads.push(g);
            delta = d_in;
        }
        grads.reverse();
        Ok(Gradients {
            layers: grads,
            input: delta,
        })
    }

    pub fn zero_grads(&self) -> Vec<LayerGrad> {
        self.layers.iter().map(LayerGrad::zeros_like).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn layer(w: &[f64], rows: usize, cols: usize, b: &[f64], a: Activation) -> DenseLayer {
        DenseLayer::new(Matrix::from_vec(rows, cols, w.to_vec()).unwrap(), b.to_vec(), a).unwrap()
    }

    #[test]
    fn identity_layer_passes_input_through() {
        let net = Mlp::new(vec![layer(
            &[1.0, 0.0, 0.0, 1.0],
            2,
            2,
            &[0.0, 0.0],
            Activation::Identity,
        )])
        .unwrap();
        let t = net.forward(&[3.0, -1.0]).unwrap();
        assert_eq!(t.output().as_slice(), &[3.0, -1.0]);
    }

    #[test]
    fn zero_sigmoid_layer_gives_one_half() {
        let net = Mlp::new(vec![layer(&[0.0], 1, 1, &[0.0], Activation::Sigmoid)]).unwrap();
        for x in [-5.0, 0.0, 12.0] {
            assert_eq!(net.forward(&[x]).unwrap().output().as_slice(), &[0.5]);
        }
    }

    #[test]
    fn two_layer_relu_matches_hand_composition() {
        // W1 = [[1, -2], [0.5, 1]], b1 = [0.1, -0.3]; W2 = [[2, -1]], b2 = [0.25]
        let net = Mlp::new(vec![
            layer(&[1.0, -2.0, 0.5, 1.0], 2, 2, &[0.1, -0.3], Activation::Relu),
            layer(&[2.0, -1.0], 1, 2, &[0.25], Activation::Relu),
        ])
        .unwrap();
        // x = (1.5, 0.2): h1 = relu(1.5 - 0.4 + 0.1, 0.75 + 0.2 - 0.3) = (1.2, 0.65)
        // out = relu(2.4 - 0.65 + 0.25) = 2.0
        let out = net.forward(&[1.5, 0.2]).unwrap();
        assert!((out.output().get(0, 0) - 2.0).abs() < 1e-15);
        // x = (-1, 1): h1 = relu(-1 - 2 + 0.1, -0.5 + 1 - 0.3) = (0, 0.2); out = relu(-0.2 + 0.25)
        let out = net.forward(&[-1.0, 1.0]).unwrap();
        assert!((out.output().get(0, 0) - 0.05).abs() < 1e-15);
    }

    #[test]
    fn dimension_errors_are_structured() {
        let mut rng = Rng::new(0);
        let net = Mlp::build(3, &[4], Activation::Tanh, 1, Activation::Identity, &mut rng);
        match net.forward(&[1.0, 2.0]) {
            Err(Error::Dimension { expected, found, .. }) => assert_eq!((expected, found), (3, 2)),
            other => panic!("unexpected {other:?}"),
        }
        let bad = Mlp::new(vec![
            DenseLayer::zeros(2, 3, Activation::Relu),
            DenseLayer::zeros(4, 1, Activation::Relu),
        ]);
        assert!(bad.is_err());
    }

    #[test]
    fn backward_rejects_foreign_trace() {
        let mut rng = Rng::new(0);
        let a = Mlp::build(2, &[3], Activation::Relu, 1, Activation::Identity, &mut rng);
        let b = Mlp::build(2, &[5, 5], Activation::Relu, 1, Activation::Identity, &mut rng);
        let t = b.forward(&[0.1, 0.2]).unwrap();
        assert!(a.backward(&t, &Matrix::zeros(1, 1)).is_err());
    }

    #[test]
    fn linear_net_at_optimum_has_zero_gradient() {
        // y = 2x + 1 fitted exactly; squared-loss gradient is zero everywhere.
        let net = Mlp::new(vec![layer(&[2.0], 1, 1, &[1.0], Activation::Identity)]).unwrap();
        let x = Matrix::column_vector(&[-1.0, 0.0, 3.0]);
        let t = net.forward_batch(&x).unwrap();
        let target = [-1.0, 1.0, 7.0];
        let d: Vec<f64> = t
            .output()
            .as_slice()
            .iter()
            .zip(target)
            .map(|(p, y)| 2.0 * (p - y))
            .collect();
        let g = net.backward(&t, &Matrix::column_vector(&d)).unwrap();
        assert_eq!(g.layers[0].weights.as_slice(), &[0.0]);
        assert_eq!(g.layers[0].bias, vec![0.0]);
    }

    #[test]
    fn gradient_shapes_match_parameters() {
        let mut rng = Rng::new(9);
        let net = Mlp::build(4, &[7, 3], Activation::Tanh, 2, Activation::Identity, &mut rng);
        let x = Matrix::filled(5, 4, 0.3);
        let t = net.forward_batch(&x).unwrap();
        let g = net.backward(&t, &Matrix::filled(5, 2, 1.0)).unwrap();
        for (l, lg) in net.layers().iter().zip(&g.layers) {
            assert_eq!(lg.weights.rows(), l.weights.rows());
            assert_eq!(lg.weights.cols(), l.weights.cols());
            assert_eq!(lg.bias.len(), l.bias.len());
        }
        assert_eq!((g.input.rows(), g.input.cols()), (5, 4));
    }

    #[test]
    fn forward_does_not_mutate() {
        let mut rng = Rng::new(1);
        let net = Mlp::build(2, &[8], Activation::Relu, 1, Activation::Identity, &mut rng);
        let before = net.clone();
        net.forward(&[0.4, -0.2]).unwrap();
        assert_eq!(net, before);
    }
}
