//! Fully connected network: ReLU hidden layers, two linear outputs, trained
//! with Adam on mean squared error summed over both targets.
//!
//! Everything is seeded: Glorot-uniform init and the per-epoch shuffle both
//! draw from substreams of the model seed, so training is reproducible.
//! `loss_and_gradients` is public so gradients can be checked against finite
//! differences without touching optimizer state.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::util;

#[derive(Clone, Debug, PartialEq)]
pub struct TrainParams {
    pub hidden_layers: usize,
    pub width: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dense {
    /// `out x in`.
    pub weights: DMatrix<f64>,
    pub bias: DVector<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Network {
    pub layers: Vec<Dense>,
}

/// Per-layer `(weight, bias)` gradients, in layer order.
pub type Gradients = Vec<(DMatrix<f64>, DVector<f64>)>;

fn relu(v: f64) -> f64 {
    v.max(0.0)
}

fn relu_grad(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else {
        0.0
    }
}

impl Network {
    /// Glorot-uniform initialization over `sizes` = [input, hidden.., output].
    pub fn new(sizes: &[usize], rng: &mut ChaCha8Rng) -> Network {
        let layers = sizes
            .windows(2)
            .map(|w| {
                let (fan_in, fan_out) = (w[0], w[1]);
                let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
                Dense {
                    weights: DMatrix::from_fn(fan_out, fan_in, |_, _| {
                        rng.random_range(-limit..limit)
                    }),
                    bias: DVector::zeros(fan_out),
                }
            })
            .collect();
        Network { layers }
    }

    /// Forward pass for one input; ReLU on all but the final layer.
    pub fn forward(&self, input: &DVector<f64>) -> DVector<f64> {
        let mut activation = input.clone();
        for (i, layer) in self.layers.iter().enumerate() {
            let mut z = &layer.weights * &activation + &layer.bias;
            if i + 1 < self.layers.len() {
                z.apply(|v| *v = relu(*v));
            }
            activation = z;
        }
        activation
    }

    pub fn predict(&self, queries: &DMatrix<f64>) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(queries.nrows(), 2);
        for i in 0..queries.nrows() {
            let input = DVector::from_iterator(queries.ncols(), queries.row(i).iter().copied());
            let pred = self.forward(&input);
            out[(i, 0)] = pred[0];
            out[(i, 1)] = pred[1];
        }
        out
    }

    /// Batch loss `mean_rows sum_targets (pred - y)^2` and its gradients in
    /// layer order.
    pub fn loss_and_gradients(&self, x: &DMatrix<f64>, y: &DMatrix<f64>) -> (f64, Gradients) {
        let batch = x.nrows();
        let mut grads: Gradients = self
            .layers
            .iter()
            .map(|l| {
                (
                    DMatrix::zeros(l.weights.nrows(), l.weights.ncols()),
                    DVector::zeros(l.bias.nrows()),
                )
            })
            .collect();

        let mut loss = 0.0;
        for row in 0..batch {
            let input = DVector::from_iterator(x.ncols(), x.row(row).iter().copied());
            // forward, keeping pre-activations and activations
            let mut activations = vec![input];
            let mut pre_activations = Vec::with_capacity(self.layers.len());
            for (i, layer) in self.layers.iter().enumerate() {
                let z = &layer.weights * activations.last().unwrap() + &layer.bias;
                pre_activations.push(z.clone());
                let mut a = z;
                if i + 1 < self.layers.len() {
                    a.apply(|v| *v = relu(*v));
                }
                activations.push(a);
            }

            let output = activations.last().unwrap();
            let target = DVector::from_row_slice(&[y[(row, 0)], y[(row, 1)]]);
            let error = output - &target;
            loss += error.norm_squared();

            // backward
            let mut delta = error * (2.0 / batch as f64);
            for layer_index in (0..self.layers.len()).rev() {
                grads[layer_index].0 += &delta * activations[layer_index].transpose();
                grads[layer_index].1 += &delta;
                if layer_index > 0 {
                    let mut upstream = self.layers[layer_index].weights.transpose() * &delta;
                    for (u, z) in upstream
                        .iter_mut()
                        .zip(pre_activations[layer_index - 1].iter())
                    {
                        *u *= relu_grad(*z);
                    }
                    delta = upstream;
                }
            }
        }
        (loss / batch as f64, grads)
    }
}

struct Adam {
    m: Gradients,
    v: Gradients,
    t: i32,
}

impl Adam {
    fn new(network: &Network) -> Adam {
        let zeros = |n: &Network| {
            n.layers
                .iter()
                .map(|l| {
                    (
                        DMatrix::zeros(l.weights.nrows(), l.weights.ncols()),
                        DVector::zeros(l.bias.nrows()),
                    )
                })
                .collect()
        };
        Adam {
            m: zeros(network),
            v: zeros(network),
            t: 0,
        }
    }

    fn step(
        &mut self,
        network: &mut Network,
        grads: &[(DMatrix<f64>, DVector<f64>)],
        learning_rate: f64,
    ) {
        const BETA1: f64 = 0.9;
        const BETA2: f64 = 0.999;
        const EPS: f64 = 1e-8;
        self.t += 1;
        let bias1 = 1.0 - BETA1.powi(self.t);
        let bias2 = 1.0 - BETA2.powi(self.t);
        for (i, layer) in network.layers.iter_mut().enumerate() {
            let (gw, gb) = &grads[i];
            let (mw, mb) = &mut self.m[i];
            let (vw, vb) = &mut self.v[i];
            for ((((w, g), m), v), _) in layer
                .weights
                .iter_mut()
                .zip(gw.iter())
                .zip(mw.iter_mut())
                .zip(vw.iter_mut())
                .zip(std::iter::repeat(()))
            {
                *m = BETA1 * *m + (1.0 - BETA1) * g;
                *v = BETA2 * *v + (1.0 - BETA2) * g * g;
                *w -= learning_rate * (*m / bias1) / ((*v / bias2).sqrt() + EPS);
            }
            for (((b, g), m), v) in layer
                .bias
                .iter_mut()
                .zip(gb.iter())
                .zip(mb.iter_mut())
                .zip(vb.iter_mut())
            {
                *m = BETA1 * *m + (1.0 - BETA1) * g;
                *v = BETA2 * *v + (1.0 - BETA2) * g * g;
                *b -= learning_rate * (*m / bias1) / ((*v / bias2).sqrt() + EPS);
            }
        }
    }
}

/// Train for a fixed epoch count with per-epoch reshuffled mini-batches.
pub fn train_network(
    x: &DMatrix<f64>,
    y: &DMatrix<f64>,
    params: &TrainParams,
    seed: u64,
) -> Network {
    let mut sizes = vec![x.ncols()];
    sizes.extend(std::iter::repeat_n(params.width, params.hidden_layers));
    sizes.push(2);

    let mut init_rng = util::substream(seed, 0);
    let mut network = Network::new(&sizes, &mut init_rng);
    let mut adam = Adam::new(&network);

    let n = x.nrows();
    for epoch in 0..params.epochs {
        let mut order: Vec<usize> = (0..n).collect();
        let mut rng = util::substream(seed, 1 + epoch as u64);
        for i in (1..n).rev() {
            let j = rng.random_range(0..=i);
            order.swap(i, j);
        }
        for chunk in order.chunks(params.batch_size) {
            let xb = x.select_rows(chunk.iter());
            let yb = y.select_rows(chunk.iter());
            let (_, grads) = network.loss_and_gradients(&xb, &yb);
            adam.step(&mut network, &grads, params.learning_rate);
        }
    }
    network
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_network() -> Network {
        // fixed weights away from ReLU kinks
        Network {
            layers: vec![
                Dense {
                    weights: DMatrix::from_row_slice(2, 3, &[0.4, -0.3, 0.2, 0.1, 0.5, -0.2]),
                    bias: DVector::from_row_slice(&[0.3, 0.25]),
                },
                Dense {
                    weights: DMatrix::from_row_slice(2, 2, &[0.7, -0.4, 0.2, 0.6]),
                    bias: DVector::from_row_slice(&[0.05, -0.1]),
                },
            ],
        }
    }

    #[test]
    #[allow(clippy::needless_range_loop)] // index symmetry across layers/grads
    fn analytic_gradients_match_central_differences() {
        let network = tiny_network();
        let x = DMatrix::from_row_slice(3, 3, &[0.5, 0.2, -0.3, 0.9, -0.1, 0.4, 0.3, 0.8, 0.1]);
        let y = DMatrix::from_row_slice(3, 2, &[0.2, -0.4, 1.0, 0.3, -0.5, 0.6]);
        let (_, grads) = network.loss_and_gradients(&x, &y);

        let eps = 1e-6;
        for layer in 0..network.layers.len() {
            let rows = network.layers[layer].weights.nrows();
            let cols = network.layers[layer].weights.ncols();
            for r in 0..rows {
                for c in 0..cols {
                    let mut plus = network.clone();
                    plus.layers[layer].weights[(r, c)] += eps;
                    let mut minus = network.clone();
                    minus.layers[layer].weights[(r, c)] -= eps;
                    let numeric = (plus.loss_and_gradients(&x, &y).0
                        - minus.loss_and_gradients(&x, &y).0)
                        / (2.0 * eps);
                    let analytic = grads[layer].0[(r, c)];
                    let denom = numeric.abs().max(analytic.abs()).max(1e-8);
                    assert!(
                        (numeric - analytic).abs() / denom < 1e-4,
                        "layer {layer} w[{r},{c}]: analytic {analytic}, numeric {numeric}"
                    );
                }
            }
            for r in 0..network.layers[layer].bias.nrows() {
                let mut plus = network.clone();
                plus.layers[layer].bias[r] += eps;
                let mut minus = network.clone();
                minus.layers[layer].bias[r] -= eps;
                let numeric = (plus.loss_and_gradients(&x, &y).0
                    - minus.loss_and_gradients(&x, &y).0)
                    / (2.0 * eps);
                let analytic = grads[layer].1[r];
                let denom = numeric.abs().max(analytic.abs()).max(1e-8);
                assert!(
                    (numeric - analytic).abs() / denom < 1e-4,
                    "layer {layer} b[{r}]: analytic {analytic}, numeric {numeric}"
                );
            }
        }
    }

    #[test]
    fn training_reduces_loss_on_a_linear_task() {
        let mut rng = util::substream(3, 0);
        let n = 60;
        let x = DMatrix::from_fn(n, 3, |_, _| rng.random_range(-1.0..1.0));
        let y = DMatrix::from_fn(n, 2, |i, j| {
            if j == 0 {
                0.5 * x[(i, 0)] - 0.2 * x[(i, 1)]
            } else {
                0.3 * x[(i, 2)]
            }
        });
        let params = TrainParams {
            hidden_layers: 2,
            width: 8,
            epochs: 150,
            learning_rate: 0.005,
            batch_size: 16,
        };
        let network = train_network(&x, &y, &params, 5);
        let pred = network.predict(&x);
        let mse: f64 = (&pred - &y).iter().map(|e| e * e).sum::<f64>() / n as f64;
        let baseline: f64 = y.iter().map(|v| v * v).sum::<f64>() / n as f64;
        assert!(mse < baseline * 0.3, "mse {mse} vs baseline {baseline}");
    }

    #[test]
    fn training_is_deterministic_for_a_seed() {
        let mut rng = util::substream(4, 0);
        let x = DMatrix::from_fn(20, 2, |_, _| rng.random_range(-1.0..1.0));
        let y = DMatrix::from_fn(20, 2, |_, _| rng.random_range(-1.0..1.0));
        let params = TrainParams {
            hidden_layers: 1,
            width: 4,
            epochs: 10,
            learning_rate: 0.01,
            batch_size: 8,
        };
        let a = train_network(&x, &y, &params, 9);
        let b = train_network(&x, &y, &params, 9);
        assert_eq!(a, b);
    }
}
