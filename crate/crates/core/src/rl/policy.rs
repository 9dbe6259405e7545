//! Feed-forward policy: tanh hidden layers and a softmax output, with
//! hand-written backpropagation.

use rand::Rng;

use crate::error::{Error, Result};

/// Dense network whose parameters live in one flat vector, layer by layer,
/// each layer as a row-major `out × in` weight matrix followed by its bias.
#[derive(Clone, Debug, PartialEq)]
pub struct PolicyNet {
    sizes: Vec<usize>,
    params: Vec<f64>,
}

/// Per-layer activations kept for the backward pass.
struct Trace {
    /// `activations[0]` is the input, `activations[l]` the output of layer l.
    activations: Vec<Vec<f64>>,
    probs: Vec<f64>,
}

impl PolicyNet {
    /// All weights and biases zero: every input maps to the uniform distribution.
    pub fn zeros(input_dim: usize, hidden: &[usize], output_dim: usize) -> Result<Self> {
        let mut sizes = Vec::with_capacity(hidden.len() + 2);
        sizes.push(input_dim);
        sizes.extend_from_slice(hidden);
        sizes.push(output_dim);
        if sizes.iter().any(|&s| s == 0) {
            return Err(Error::invalid(format!("layer sizes must be positive: {sizes:?}")));
        }
        let n = sizes.windows(2).map(|w| w[0] * w[1] + w[1]).sum();
        Ok(Self {
            sizes,
            params: vec![0.0; n],
        })
    }

    /// Glorot-uniform hidden weights; the output layer starts at zero so the
    /// initial policy is uniform.
    pub fn new<R: Rng + ?Sized>(
        input_dim: usize,
        hidden: &[usize],
        output_dim: usize,
        rng: &mut R,
    ) -> Result<Self> {
        let mut net = Self::zeros(input_dim, hidden, output_dim)?;
        let n_layers = net.n_layers();
        for l in 0..n_layers - 1 {
            let (fan_in, fan_out) = (net.sizes[l], net.sizes[l + 1]);
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            let (w, _) = net.layer_range(l);
            for p in &mut net.params[w] {
                *p = rng.random_range(-limit..limit);
            }
        }
        Ok(net)
    }

    /// Same architecture, every parameter drawn uniform on `[−scale, scale]`.
    pub fn random_uniform<R: Rng + ?Sized>(
        input_dim: usize,
        hidden: &[usize],
        output_dim: usize,
        scale: f64,
        rng: &mut R,
    ) -> Result<Self> {
        let mut net = Self::zeros(input_dim, hidden, output_dim)?;
        for p in &mut net.params {
            *p = rng.random_range(-scale..=scale);
        }
        Ok(net)
    }

    pub fn input_dim(&self) -> usize {
        self.sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.sizes.last().expect("at least two layers")
    }

    pub fn n_params(&self) -> usize {
        self.params.len()
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    fn n_layers(&self) -> usize {
        self.sizes.len() - 1
    }

    /// Index ranges of layer `l`'s weights and biases.
    fn layer_range(&self, l: usize) -> (std::ops::Range<usize>, std::ops::Range<usize>) {
        let start: usize = self.sizes[..=l]
            .windows(2)
            .map(|w| w[0] * w[1] + w[1])
            .sum();
        let (fan_in, fan_out) = (self.sizes[l], self.sizes[l + 1]);
        let w_end = start + fan_in * fan_out;
        (start..w_end, w_end..w_end + fan_out)
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.input_dim() {
            return Err(Error::invalid(format!(
                "policy expects {} inputs, got {}",
                self.input_dim(),
                x.len()
            )));
        }
        Ok(())
    }

    fn affine(&self, l: usize, input: &[f64]) -> Vec<f64> {
        let (w, b) = self.layer_range(l);
        let weights = &self.params[w];
        let fan_in = self.sizes[l];
        self.params[b]
            .iter()
            .enumerate()
            .map(|(o, bias)| {
                let row = &weights[o * fan_in..(o + 1) * fan_in];
                bias + row.iter().zip(input).map(|(w, x)| w * x).sum::<f64>()
            })
            .collect()
    }

    fn trace(&self, x: &[f64]) -> Trace {
        let n_layers = self.n_layers();
        let mut activations = Vec::with_capacity(n_layers);
        activations.push(x.to_vec());
        for l in 0..n_layers - 1 {
            let h = self.affine(l, &activations[l]);
            activations.push(h.into_iter().map(f64::tanh).collect());
        }
        let logits = self.affine(n_layers - 1, &activations[n_layers - 1]);
        Trace {
            activations,
            probs: softmax(&logits),
        }
    }

    pub fn logits(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_input(x)?;
        let n_layers = self.n_layers();
        let mut h = x.to_vec();
        for l in 0..n_layers - 1 {
            h = self.affine(l, &h).into_iter().map(f64::tanh).collect();
        }
        Ok(self.affine(n_layers - 1, &h))
    }

    /// Action probabilities for one encoded input.
    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_input(x)?;
        Ok(self.trace(x).probs)
    }

    /// Adds `weight · ∂(−log p[action])/∂params` into `grad` and returns
    /// `−weight · log p[action]`.
    pub(crate) fn accumulate_nll(
        &self,
        x: &[f64],
        action: usize,
        weight: f64,
        grad: &mut [f64],
    ) -> Result<f64> {
        self.check_input(x)?;
        if action >= self.output_dim() {
            return Err(Error::invalid(format!(
                "action index {action} out of range for {} outputs",
                self.output_dim()
            )));
        }
        let trace = self.trace(x);
        let value = -weight * trace.probs[action].ln();
        if weight == 0.0 {
            return Ok(value);
        }
        // ∂(−log softmax_a)/∂logits = p − e_a
        let mut delta: Vec<f64> = trace.probs.iter().map(|p| weight * p).collect();
        delta[action] -= weight;

        for l in (0..self.n_layers()).rev() {
            let input = &trace.activations[l];
            let fan_in = self.sizes[l];
            let (w, b) = self.layer_range(l);
            for (o, d) in delta.iter().enumerate() {
                grad[b.start + o] += d;
                let row = &mut grad[w.start + o * fan_in..w.start + (o + 1) * fan_in];
                for (g, x) in row.iter_mut().zip(input) {
                    *g += d * x;
                }
            }
            if l == 0 {
                break;
            }
            let weights = &self.params[w];
            delta = (0..fan_in)
                .map(|i| {
                    let back: f64 = delta
                        .iter()
                        .enumerate()
                        .map(|(o, d)| d * weights[o * fan_in + i])
                        .sum();
                    // tanh' = 1 − tanh²
                    back * (1.0 - input[i] * input[i])
                })
                .collect();
        }
        Ok(value)
    }
}

/// Numerically stable softmax.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|z| (z - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeded_rng;

    #[test]
    fn zero_net_is_uniform() {
        let net = PolicyNet::zeros(16, &[8, 8], 7).unwrap();
        let p = net.forward(&[1.0; 16]).unwrap();
        assert!(p.iter().all(|x| (x - 1.0 / 7.0).abs() < 1e-15));
        let fresh = PolicyNet::new(16, &[8, 8], 7, &mut seeded_rng(1)).unwrap();
        let p = fresh.forward(&[0.5; 16]).unwrap();
        assert!(p.iter().all(|x| (x - 1.0 / 7.0).abs() < 1e-15));
    }

    #[test]
    fn probabilities_positive_and_normalized() {
        let mut rng = seeded_rng(2);
        for _ in 0..200 {
            let net = PolicyNet::random_uniform(10, &[6], 5, 3.0, &mut rng).unwrap();
            let x: Vec<f64> = (0..10).map(|_| rng.random_range(-2.0..2.0)).collect();
            let p = net.forward(&x).unwrap();
            assert!(p.iter().all(|v| *v > 0.0));
            assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn raising_a_logit_raises_its_probability() {
        let mut net = PolicyNet::random_uniform(4, &[3], 5, 1.0, &mut seeded_rng(3)).unwrap();
        let x = [1.0, 0.0, -1.0, 0.5];
        let before = net.forward(&x).unwrap();
        // the output bias of action 2
        let (_, b) = net.layer_range(1);
        net.params_mut()[b.start + 2] += 0.1;
        let after = net.forward(&x).unwrap();
        assert!(after[2] > before[2]);
    }

    #[test]
    fn softmax_is_shift_invariant_and_stable() {
        let p = softmax(&[1000.0, 1000.0]);
        assert_eq!(p, vec![0.5, 0.5]);
        let a = softmax(&[0.1, -0.3, 2.0]);
        let b = softmax(&[5.1, 4.7, 7.0]);
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-15);
        }
    }

    #[test]
    fn rejects_bad_shapes() {
        let net = PolicyNet::zeros(3, &[2], 2).unwrap();
        assert!(net.forward(&[0.0; 4]).is_err());
        let mut g = vec![0.0; net.n_params()];
        assert!(net.accumulate_nll(&[0.0; 3], 2, 1.0, &mut g).is_err());
        assert!(PolicyNet::zeros(3, &[0], 2).is_err());
    }

    #[test]
    fn parameter_count() {
        let net = PolicyNet::zeros(80, &[64, 64], 7).unwrap();
        assert_eq!(net.n_params(), 80 * 64 + 64 + 64 * 64 + 64 + 64 * 7 + 7);
    }
}
