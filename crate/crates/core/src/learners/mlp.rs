//! Fully connected feed-forward network trained by mini-batch SGD with
//! backpropagation. Classification uses a softmax output with cross-entropy,
//! regression a linear output with mean half-squared error.

use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::linear::softmax;
use crate::error::{Error, Result};
use crate::matrix::{dot, Matrix};
use crate::rng::derived_rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Relu,
    Tanh,
    Logistic,
    Identity,
}

impl Activation {
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Relu => z.max(0.0),
            Activation::Tanh => z.tanh(),
            Activation::Logistic => super::linear::sigmoid(z),
            Activation::Identity => z,
        }
    }

    /// Derivative expressed through the pre-activation `z` and output `a`.
    fn derivative(self, z: f64, a: f64) -> f64 {
        match self {
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => 1.0 - a * a,
            Activation::Logistic => a * (1.0 - a),
            Activation::Identity => 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputKind {
    Softmax,
    Linear,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    /// `out × in`
    pub weights: Matrix,
    pub biases: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Network {
    pub layers: Vec<Layer>,
    pub activation: Activation,
    pub output: OutputKind,
}

struct Trace {
    /// pre-activations per layer
    z: Vec<Vec<f64>>,
    /// activations per layer, `a[0]` is the input
    a: Vec<Vec<f64>>,
}

impl Network {
    /// Layer widths `sizes = [inputs, hidden…, outputs]`; every weight and
    /// bias drawn uniformly from `[−1/√fan_in, 1/√fan_in]`.
    pub fn init(sizes: &[usize], activation: Activation, output: OutputKind, seed: u64) -> Self {
        let mut rng = derived_rng(seed, &[0]);
        let layers = sizes
            .windows(2)
            .map(|w| {
                let (fan_in, fan_out) = (w[0], w[1]);
                let bound = 1.0 / (fan_in.max(1) as f64).sqrt();
                let mut draw = || rng.gen_range(-bound..bound);
                let weights: Vec<f64> = (0..fan_in * fan_out).map(|_| draw()).collect();
                let biases: Vec<f64> = (0..fan_out).map(|_| draw()).collect();
                Layer {
                    weights: Matrix::from_vec(fan_out, fan_in, weights).unwrap(),
                    biases,
                }
            })
            .collect();
        Network {
            layers,
            activation,
            output,
        }
    }

    pub fn n_outputs(&self) -> usize {
        self.layers.last().map_or(0, |l| l.biases.len())
    }

    fn trace(&self, row: &[f64]) -> Trace {
        let mut z = Vec::with_capacity(self.layers.len());
        let mut a = vec![row.to_vec()];
        let last = self.layers.len() - 1;
        for (li, layer) in self.layers.iter().enumerate() {
            let input = a.last().unwrap();
            let zl: Vec<f64> = layer
                .weights
                .iter_rows()
                .zip(&layer.biases)
                .map(|(w, b)| dot(w, input) + b)
                .collect();
            let al = if li == last {
                match self.output {
                    OutputKind::Softmax => softmax(&zl),
                    OutputKind::Linear => zl.clone(),
                }
            } else {
                zl.iter().map(|&v| self.activation.apply(v)).collect()
            };
            z.push(zl);
            a.push(al);
        }
        Trace { z, a }
    }

    /// Class probabilities (softmax output) or predicted values (linear output).
    pub fn forward(&self, row: &[f64]) -> Vec<f64> {
        self.trace(row).a.pop().unwrap()
    }

    fn row_loss(&self, out: &[f64], target: f64) -> f64 {
        match self.output {
            OutputKind::Softmax => -(out[target as usize].max(1e-300)).ln(),
            OutputKind::Linear => 0.5 * (out[0] - target) * (out[0] - target),
        }
    }

    /// Mean loss over the rows of `x`. Targets are class indices for a
    /// softmax network and real values for a linear one.
    pub fn loss(&self, x: &Matrix, targets: &[f64]) -> f64 {
        let total: f64 = x
            .iter_rows()
            .zip(targets)
            .map(|(row, &t)| self.row_loss(&self.forward(row), t))
            .sum();
        total / x.rows() as f64
    }

    /// Gradient of [`Network::loss`] over the given rows, by backpropagation.
    pub fn gradients(&self, x: &Matrix, targets: &[f64]) -> Vec<Layer> {
        let rows: Vec<usize> = (0..x.rows()).collect();
        self.batch_gradients(x, targets, &rows)
    }

    fn batch_gradients(&self, x: &Matrix, targets: &[f64], rows: &[usize]) -> Vec<Layer> {
        let mut grads: Vec<Layer> = self
            .layers
            .iter()
            .map(|l| Layer {
                weights: Matrix::zeros(l.weights.rows(), l.weights.cols()),
                biases: vec![0.0; l.biases.len()],
            })
            .collect();
        let scale = 1.0 / rows.len() as f64;
        for &r in rows {
            let tr = self.trace(x.row(r));
            let out = tr.a.last().unwrap();
            let t = targets[r];
            // dL/dz at the output layer
            let mut delta: Vec<f64> = match self.output {
                OutputKind::Softmax => out
                    .iter()
                    .enumerate()
                    .map(|(k, p)| p - if k == t as usize { 1.0 } else { 0.0 })
                    .collect(),
                OutputKind::Linear => vec![out[0] - t],
            };
            for li in (0..self.layers.len()).rev() {
                let input = &tr.a[li];
                let g = &mut grads[li];
                for (o, d) in delta.iter().enumerate() {
                    let d = d * scale;
                    g.biases[o] += d;
                    for (gw, xi) in g.weights.row_mut(o).iter_mut().zip(input) {
                        *gw += d * xi;
                    }
                }
                if li == 0 {
                    break;
                }
                let w = &self.layers[li].weights;
                let mut prev = vec![0.0; w.cols()];
                for (o, d) in delta.iter().enumerate() {
                    for (p, wv) in prev.iter_mut().zip(w.row(o)) {
                        *p += d * wv;
                    }
                }
                for (j, p) in prev.iter_mut().enumerate() {
                    *p *= self.activation.derivative(tr.z[li - 1][j], tr.a[li][j]);
                }
                delta = prev;
            }
        }
        grads
    }

    /// All weights then biases, layer by layer.
    pub fn params(&self) -> Vec<f64> {
        flatten(&self.layers)
    }

    pub fn set_params(&mut self, values: &[f64]) {
        let mut it = values.iter();
        for l in &mut self.layers {
            for i in 0..l.weights.rows() {
                for w in l.weights.row_mut(i) {
                    *w = *it.next().expect("parameter vector too short");
                }
            }
            for b in &mut l.biases {
                *b = *it.next().expect("parameter vector too short");
            }
        }
    }
}

/// Flattens layers in the order used by [`Network::params`].
pub fn flatten(layers: &[Layer]) -> Vec<f64> {
    let mut out = Vec::new();
    for l in layers {
        out.extend_from_slice(l.weights.as_slice());
        out.extend_from_slice(&l.biases);
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpOptions {
    pub hidden: Vec<usize>,
    pub activation: Activation,
    pub lr: f64,
    pub epochs: usize,
    pub batch: usize,
    pub seed: u64,
}

impl Default for MlpOptions {
    fn default() -> Self {
        MlpOptions {
            hidden: vec![64],
            activation: Activation::Relu,
            lr: 1e-3,
            epochs: 200,
            batch: 32,
            seed: 0,
        }
    }
}

/// Trains a network. `n_classes = Some(k)` builds a `k`-way softmax
/// classifier on class-index targets; `None` a single-output regressor.
pub fn mlp_fit(x: &Matrix, y: &[f64], n_classes: Option<usize>, opts: &MlpOptions) -> Result<Network> {
    let n = x.rows();
    if n == 0 || y.len() != n {
        return Err(Error::model("mlp needs matching, non-empty X and y"));
    }
    if opts.batch == 0 {
        return Err(Error::model("mlp batch size must be positive"));
    }
    let mut sizes = vec![x.cols()];
    sizes.extend(&opts.hidden);
    let (outputs, kind) = match n_classes {
        Some(k) => (k, OutputKind::Softmax),
        None => (1, OutputKind::Linear),
    };
    sizes.push(outputs);
    let mut net = Network::init(&sizes, opts.activation, kind, opts.seed);
    let mut order: Vec<usize> = (0..n).collect();
    for epoch in 0..opts.epochs {
        order.sort_unstable();
        order.shuffle(&mut derived_rng(opts.seed, &[1, epoch as u64]));
        for chunk in order.chunks(opts.batch) {
            let grads = net.batch_gradients(x, y, chunk);
            for (l, g) in net.layers.iter_mut().zip(&grads) {
                for i in 0..l.weights.rows() {
                    for (w, gw) in l.weights.row_mut(i).iter_mut().zip(g.weights.row(i)) {
                        *w -= opts.lr * gw;
                    }
                }
                for (b, gb) in l.biases.iter_mut().zip(&g.biases) {
                    *b -= opts.lr * gb;
                }
            }
        }
    }
    if net.params().iter().any(|v| !v.is_finite()) {
        return Err(Error::model("mlp training diverged to non-finite weights"));
    }
    Ok(net)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_epochs_is_initialization() {
        let x = Matrix::from_rows(&[[0.0, 1.0], [1.0, 0.0]]).unwrap();
        let opts = MlpOptions {
            hidden: vec![3],
            epochs: 0,
            seed: 4,
            ..Default::default()
        };
        let net = mlp_fit(&x, &[0.0, 1.0], Some(2), &opts).unwrap();
        assert_eq!(net, Network::init(&[2, 3, 2], Activation::Relu, OutputKind::Softmax, 4));
    }

    #[test]
    fn init_respects_fan_in_bound() {
        let net = Network::init(&[4, 5, 1], Activation::Tanh, OutputKind::Linear, 1);
        assert!(net.layers[0].weights.as_slice().iter().all(|w| w.abs() <= 0.5));
        let b = 1.0 / 5f64.sqrt();
        assert!(net.layers[1].weights.as_slice().iter().all(|w| w.abs() <= b));
    }

    #[test]
    fn zero_network_has_zero_output_bias_gradient() {
        let mut net = Network::init(&[2, 3, 1], Activation::Relu, OutputKind::Linear, 0);
        let zeros = vec![0.0; net.params().len()];
        net.set_params(&zeros);
        let x = Matrix::from_rows(&[[1.0, 2.0], [-1.0, 0.5]]).unwrap();
        let g = net.gradients(&x, &[0.0, 0.0]);
        assert_eq!(g[1].biases, vec![0.0]);
    }

    #[test]
    fn softmax_output_sums_to_one() {
        let net = Network::init(&[3, 4, 3], Activation::Logistic, OutputKind::Softmax, 2);
        let p = net.forward(&[0.3, -1.0, 2.0]);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn learns_a_simple_regression() {
        let rows: Vec<[f64; 1]> = (0..20).map(|i| [i as f64 / 10.0 - 1.0]).collect();
        let x = Matrix::from_rows(&rows).unwrap();
        let y: Vec<f64> = rows.iter().map(|r| 2.0 * r[0]).collect();
        let opts = MlpOptions {
            hidden: vec![8],
            activation: Activation::Tanh,
            lr: 0.05,
            epochs: 300,
            batch: 4,
            seed: 1,
        };
        let before = Network::init(&[1, 8, 1], Activation::Tanh, OutputKind::Linear, 1).loss(&x, &y);
        let net = mlp_fit(&x, &y, None, &opts).unwrap();
        assert!(net.loss(&x, &y) < 0.05 * before);
    }
}
