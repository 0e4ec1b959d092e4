//! Dense ReLU network mapping a state to one value per action.

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::env::Action;
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq)]
struct Dense<T> {
    inputs: usize,
    outputs: usize,
    /// Row-major `outputs × inputs`.
    weights: Vec<T>,
    biases: Vec<T>,
}

impl<T: Real> Dense<T> {
    fn forward(&self, x: &[T], out: &mut Vec<T>) {
        out.clear();
        for (row, &b) in self.weights.chunks_exact(self.inputs).zip(&self.biases) {
            let mut acc = b;
            for (&w, &xi) in row.iter().zip(x) {
                acc = acc + w * xi;
            }
            out.push(acc);
        }
    }
}

/// Multilayer perceptron with ReLU hidden layers and a linear output layer.
///
/// Weights are drawn from `N(0, 2 / fan_in)`, biases start at zero.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueNetwork<T> {
    layers: Vec<Dense<T>>,
}

/// Parameter gradients, laid out like the network.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients<T> {
    weights: Vec<Vec<T>>,
    biases: Vec<Vec<T>>,
}

impl<T: Real> Gradients<T> {
    /// Flattened in [`ValueNetwork::params`] order.
    pub fn flatten(&self) -> Vec<T> {
        self.weights
            .iter()
            .zip(&self.biases)
            .flat_map(|(w, b)| w.iter().chain(b).copied())
            .collect()
    }
}

impl<T: Real> ValueNetwork<T> {
    /// `sizes` lists every layer width, input first and output last.
    pub fn new<R: Rng + ?Sized>(sizes: &[usize], rng: &mut R) -> Self {
        assert!(sizes.len() >= 2, "network needs input and output sizes");
        assert!(sizes.iter().all(|&s| s > 0), "layer sizes must be positive");
        let layers = sizes
            .windows(2)
            .map(|w| {
                let (inputs, outputs) = (w[0], w[1]);
                let normal = Normal::new(0.0, (2.0 / inputs as f64).sqrt()).expect("finite std");
                Dense {
                    inputs,
                    outputs,
                    weights: (0..inputs * outputs)
                        .map(|_| T::of(normal.sample(rng)))
                        .collect(),
                    biases: vec![T::zero(); outputs],
                }
            })
            .collect();
        Self { layers }
    }

    /// Input, hidden and output widths.
    pub fn sizes(&self) -> Vec<usize> {
        let mut s = vec![self.layers[0].inputs];
        s.extend(self.layers.iter().map(|l| l.outputs));
        s
    }

    #[inline]
    pub fn input_dim(&self) -> usize {
        self.layers[0].inputs
    }

    #[inline]
    pub fn output_dim(&self) -> usize {
        self.layers.last().map_or(0, |l| l.outputs)
    }

    pub fn param_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.len() + l.biases.len())
            .sum()
    }

    /// All parameters, layer by layer, weights then biases.
    pub fn params(&self) -> Vec<T> {
        self.layers
            .iter()
            .flat_map(|l| l.weights.iter().chain(&l.biases).copied())
            .collect()
    }

    /// Overwrites all parameters from a slice in [`Self::params`] order.
    pub fn set_params(&mut self, params: &[T]) {
        assert_eq!(params.len(), self.param_count(), "parameter count mismatch");
        let mut i = 0;
        for l in &mut self.layers {
            let nw = l.weights.len();
            l.weights.copy_from_slice(&params[i..i + nw]);
            i += nw;
            let nb = l.biases.len();
            l.biases.copy_from_slice(&params[i..i + nb]);
            i += nb;
        }
    }

    /// Rebuilds a network from its sizes and flat parameters.
    pub fn from_params(sizes: &[usize], params: &[T]) -> Option<Self> {
        if sizes.len() < 2 || sizes.contains(&0) {
            return None;
        }
        let mut net = Self {
            layers: sizes
                .windows(2)
                .map(|w| Dense {
                    inputs: w[0],
                    outputs: w[1],
                    weights: vec![T::zero(); w[0] * w[1]],
                    biases: vec![T::zero(); w[1]],
                })
                .collect(),
        };
        if params.len() != net.param_count() {
            return None;
        }
        net.set_params(params);
        Some(net)
    }

    pub fn is_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.weights.iter().chain(&l.biases).all(|v| v.is_finite()))
    }

    /// Action values for one state.
    pub fn forward(&self, x: &[T]) -> Vec<T> {
        assert_eq!(x.len(), self.input_dim(), "state dimension mismatch");
        let mut cur = x.to_vec();
        let mut next = Vec::new();
        let last = self.layers.len() - 1;
        for (i, l) in self.layers.iter().enumerate() {
            l.forward(&cur, &mut next);
            if i != last {
                relu(&mut next);
            }
            std::mem::swap(&mut cur, &mut next);
        }
        cur
    }

    /// `max_a q(x, a)`.
    pub fn max_value(&self, x: &[T]) -> T {
        self.forward(x).into_iter().fold(T::neg_infinity(), T::max)
    }

    /// Greedy action; ties go to [`Action::Hold`].
    pub fn greedy(&self, x: &[T]) -> Action {
        let q = self.forward(x);
        if q[1] > q[0] {
            Action::Depart
        } else {
            Action::Hold
        }
    }

    fn zero_gradients(&self) -> Gradients<T> {
        Gradients {
            weights: self
                .layers
                .iter()
                .map(|l| vec![T::zero(); l.weights.len()])
                .collect(),
            biases: self
                .layers
                .iter()
                .map(|l| vec![T::zero(); l.biases.len()])
                .collect(),
        }
    }

    /// Mean squared error of the chosen-action values against `targets`, and its gradient.
    ///
    /// `batch[i] = (state, action, target)`. Only the selected action's output
    /// contributes; the other head receives zero gradient for that sample.
    pub fn td_loss_and_gradient(&self, batch: &[(&[T], Action, T)]) -> (T, Gradients<T>) {
        let n = T::of(batch.len() as f64);
        let mut grads = self.zero_gradients();
        let mut loss = T::zero();
        let depth = self.layers.len();
        let mut acts: Vec<Vec<T>> = vec![Vec::new(); depth + 1];
        for &(x, a, y) in batch {
            acts[0].clear();
            acts[0].extend_from_slice(x);
            for (i, l) in self.layers.iter().enumerate() {
                let (lo, hi) = acts.split_at_mut(i + 1);
                l.forward(&lo[i], &mut hi[0]);
                if i + 1 != depth {
                    relu(&mut hi[0]);
                }
            }
            let q = acts[depth][a.index()];
            let err = q - y;
            loss = loss + err * err;

            let mut delta = vec![T::zero(); self.output_dim()];
            delta[a.index()] = (err + err) / n;
            for i in (0..depth).rev() {
                let l = &self.layers[i];
                let input = &acts[i];
                let gw = &mut grads.weights[i];
                for (o, &d) in delta.iter().enumerate() {
                    if d == T::zero() {
                        continue;
                    }
                    grads.biases[i][o] = grads.biases[i][o] + d;
                    for (g, &xi) in gw[o * l.inputs..(o + 1) * l.inputs].iter_mut().zip(input) {
                        *g = *g + d * xi;
                    }
                }
                if i == 0 {
                    break;
                }
                let mut prev = vec![T::zero(); l.inputs];
                for (o, &d) in delta.iter().enumerate() {
                    if d == T::zero() {
                        continue;
                    }
                    for (p, &w) in prev
                        .iter_mut()
                        .zip(&l.weights[o * l.inputs..(o + 1) * l.inputs])
                    {
                        *p = *p + d * w;
                    }
                }
                // ReLU derivative on the previous layer's output
                for (p, &h) in prev.iter_mut().zip(&acts[i]) {
                    if h <= T::zero() {
                        *p = T::zero();
                    }
                }
                delta = prev;
            }
        }
        (loss / n, grads)
    }

    /// Plain gradient descent step.
    pub fn apply_gradients(&mut self, grads: &Gradients<T>, learning_rate: T) {
        for (l, (gw, gb)) in self
            .layers
            .iter_mut()
            .zip(grads.weights.iter().zip(&grads.biases))
        {
            for (w, &g) in l.weights.iter_mut().zip(gw) {
                *w = *w - learning_rate * g;
            }
            for (b, &g) in l.biases.iter_mut().zip(gb) {
                *b = *b - learning_rate * g;
            }
        }
    }
}

#[inline]
fn relu<T: Real>(v: &mut [T]) {
    for x in v {
        if *x < T::zero() {
            *x = T::zero();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn ten_by_three_hundred_network_shapes() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut sizes = vec![6];
        sizes.extend([300; 10]);
        sizes.push(2);
        let net = ValueNetwork::<f32>::new(&sizes, &mut rng);
        assert_eq!(net.output_dim(), 2);
        assert_eq!(
            net.param_count(),
            6 * 300 + 300 + 9 * (300 * 300 + 300) + 300 * 2 + 2
        );
        let q = net.forward(&[0.1; 6]);
        assert_eq!(q.len(), 2);
        assert!(q.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn params_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let net = ValueNetwork::<f64>::new(&[3, 4, 2], &mut rng);
        let back = ValueNetwork::from_params(&net.sizes(), &net.params()).unwrap();
        assert_eq!(back, net);
        assert!(ValueNetwork::<f64>::from_params(&[3, 4, 2], &[0.0; 5]).is_none());
    }

    #[test]
    fn greedy_breaks_ties_toward_hold() {
        let net = ValueNetwork::<f64>::from_params(&[1, 2], &[0.0, 0.0, 0.5, 0.5]).unwrap();
        assert_eq!(net.greedy(&[1.0]), Action::Hold);
        let net = ValueNetwork::<f64>::from_params(&[1, 2], &[0.0, 0.0, 0.3, 0.7]).unwrap();
        assert_eq!(net.greedy(&[1.0]), Action::Depart);
    }

    #[test]
    fn zero_error_gives_zero_gradient() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let net = ValueNetwork::<f64>::new(&[3, 5, 2], &mut rng);
        let x = [0.2, -0.4, 0.9];
        let q = net.forward(&x);
        let (loss, g) =
            net.td_loss_and_gradient(&[(&x, Action::Hold, q[0]), (&x, Action::Depart, q[1])]);
        assert_eq!(loss, 0.0);
        assert!(g.flatten().iter().all(|&v| v == 0.0));
    }
}
