//! Dense feed-forward network with tanh hidden layers and a linear output
//! layer, plus exact input-derivative evaluation and reverse-mode parameter
//! gradients.
//!
//! The solver instantiates the map (x, y, t) -> (psi, p, s11, s12, s22):
//! a stream function, pressure and the three independent stress components.
//! Velocities are recovered from psi downstream, so continuity never enters
//! the loss.

mod checkpoint;
mod eval;
mod jet;

pub use eval::{
    backward, evaluate_batch, evaluate_with_derivatives, evaluate_with_trace, EvalTrace,
    OutputAdjoint, PointEvaluation, PSI, P, S11, S12, S22,
};
pub use jet::{tanh_derivs, triple_idx, Jet, Jet2, Jet3, PAIRS, PAIR_IDX, TRIPLES};

use crate::error::{Error, Result};
use rand::distributions::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Parameters of one dense network.
///
/// `weights[l]` is row-major with shape (layer_sizes[l+1], layer_sizes[l]);
/// `biases[l]` has length layer_sizes[l+1].
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkParams {
    layer_sizes: Vec<usize>,
    weights: Vec<Vec<f64>>,
    biases: Vec<Vec<f64>>,
}

impl NetworkParams {
    /// Glorot-uniform weights (bound sqrt(6 / (fan_in + fan_out))), zero
    /// biases. The draw order is fixed (layer, row, column) so a seed pins
    /// every parameter.
    pub fn init(layer_sizes: &[usize], seed: u64) -> Result<Self> {
        validate_sizes(layer_sizes)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut weights = Vec::with_capacity(layer_sizes.len() - 1);
        let mut biases = Vec::with_capacity(layer_sizes.len() - 1);
        for l in 0..layer_sizes.len() - 1 {
            let fan_in = layer_sizes[l];
            let fan_out = layer_sizes[l + 1];
            let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
            let dist = Uniform::new(-bound, bound);
            let w: Vec<f64> = (0..fan_in * fan_out)
                .map(|_| dist.sample(&mut rng))
                .collect();
            weights.push(w);
            biases.push(vec![0.0; fan_out]);
        }
        Ok(NetworkParams {
            layer_sizes: layer_sizes.to_vec(),
            weights,
            biases,
        })
    }

    /// All-zero parameters of the given shape.
    pub fn zeros(layer_sizes: &[usize]) -> Result<Self> {
        validate_sizes(layer_sizes)?;
        let weights = (0..layer_sizes.len() - 1)
            .map(|l| vec![0.0; layer_sizes[l] * layer_sizes[l + 1]])
            .collect();
        let biases = (0..layer_sizes.len() - 1)
            .map(|l| vec![0.0; layer_sizes[l + 1]])
            .collect();
        Ok(NetworkParams {
            layer_sizes: layer_sizes.to_vec(),
            weights,
            biases,
        })
    }

    /// Build from explicit weights and biases, validating shapes.
    pub fn from_parts(
        layer_sizes: Vec<usize>,
        weights: Vec<Vec<f64>>,
        biases: Vec<Vec<f64>>,
    ) -> Result<Self> {
        validate_sizes(&layer_sizes)?;
        if weights.len() != layer_sizes.len() - 1 || biases.len() != layer_sizes.len() - 1 {
            return Err(Error::InvalidArchitecture(format!(
                "expected {} layers of parameters, got {} weight and {} bias blocks",
                layer_sizes.len() - 1,
                weights.len(),
                biases.len()
            )));
        }
        for l in 0..weights.len() {
            if weights[l].len() != layer_sizes[l] * layer_sizes[l + 1] {
                return Err(Error::InvalidArchitecture(format!(
                    "weight block {} has {} entries, expected {}",
                    l,
                    weights[l].len(),
                    layer_sizes[l] * layer_sizes[l + 1]
                )));
            }
            if biases[l].len() != layer_sizes[l + 1] {
                return Err(Error::InvalidArchitecture(format!(
                    "bias block {} has {} entries, expected {}",
                    l,
                    biases[l].len(),
                    layer_sizes[l + 1]
                )));
            }
        }
        Ok(NetworkParams {
            layer_sizes,
            weights,
            biases,
        })
    }

    pub fn layer_sizes(&self) -> &[usize] {
        &self.layer_sizes
    }

    pub fn input_dim(&self) -> usize {
        self.layer_sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.layer_sizes.last().unwrap()
    }

    pub fn weights(&self) -> &[Vec<f64>] {
        &self.weights
    }

    pub fn biases(&self) -> &[Vec<f64>] {
        &self.biases
    }

    /// Total number of scalar parameters.
    pub fn param_count(&self) -> usize {
        self.layer_sizes
            .windows(2)
            .map(|w| w[0] * w[1] + w[1])
            .sum()
    }

    /// Copy parameters into `out` in flat order: per layer, weights row-major
    /// then biases. This order matches the checkpoint format and the gradient
    /// layout used by the optimizers.
    pub fn write_flat(&self, out: &mut [f64]) {
        assert_eq!(out.len(), self.param_count());
        let mut k = 0;
        for l in 0..self.weights.len() {
            out[k..k + self.weights[l].len()].copy_from_slice(&self.weights[l]);
            k += self.weights[l].len();
            out[k..k + self.biases[l].len()].copy_from_slice(&self.biases[l]);
            k += self.biases[l].len();
        }
    }

    pub fn to_flat(&self) -> Vec<f64> {
        let mut v = vec![0.0; self.param_count()];
        self.write_flat(&mut v);
        v
    }

    /// Overwrite parameters from a flat slice in [`Self::write_flat`] order.
    pub fn read_flat(&mut self, flat: &[f64]) {
        assert_eq!(flat.len(), self.param_count());
        let mut k = 0;
        for l in 0..self.weights.len() {
            let wl = self.weights[l].len();
            self.weights[l].copy_from_slice(&flat[k..k + wl]);
            k += wl;
            let bl = self.biases[l].len();
            self.biases[l].copy_from_slice(&flat[k..k + bl]);
            k += bl;
        }
    }

    /// Plain forward pass.
    pub fn forward(&self, input: &[f64]) -> Result<Vec<f64>> {
        if input.len() != self.input_dim() {
            return Err(Error::InvalidArchitecture(format!(
                "input length {} does not match input dimension {}",
                input.len(),
                self.input_dim()
            )));
        }
        if !input.iter().all(|x| x.is_finite()) {
            let mut p = [0.0; 3];
            for (i, &x) in input.iter().take(3).enumerate() {
                p[i] = x;
            }
            return Err(Error::NonFiniteInput(p[0], p[1], p[2]));
        }
        let n_layers = self.weights.len();
        let mut a = input.to_vec();
        for l in 0..n_layers {
            let n_in = self.layer_sizes[l];
            let n_out = self.layer_sizes[l + 1];
            let mut z = self.biases[l].clone();
            for r in 0..n_out {
                let row = &self.weights[l][r * n_in..(r + 1) * n_in];
                let mut acc = z[r];
                for (w, x) in row.iter().zip(a.iter()) {
                    acc += w * x;
                }
                z[r] = if l + 1 < n_layers { acc.tanh() } else { acc };
            }
            a = z;
        }
        if !a.iter().all(|x| x.is_finite()) {
            return Err(Error::EvaluationOverflow);
        }
        Ok(a)
    }
}

fn validate_sizes(layer_sizes: &[usize]) -> Result<()> {
    if layer_sizes.len() < 2 {
        return Err(Error::InvalidArchitecture(format!(
            "need at least input and output layers, got {:?}",
            layer_sizes
        )));
    }
    if layer_sizes.iter().any(|&n| n == 0) {
        return Err(Error::InvalidArchitecture(format!(
            "zero-width layer in {:?}",
            layer_sizes
        )));
    }
    if layer_sizes[0] > 3 {
        return Err(Error::InvalidArchitecture(format!(
            "input dimension {} exceeds the supported maximum of 3",
            layer_sizes[0]
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn param_count_default_architecture() {
        let sizes: Vec<usize> = [3usize]
            .into_iter()
            .chain(std::iter::repeat(50).take(7))
            .chain([5])
            .collect();
        let net = NetworkParams::zeros(&sizes).unwrap();
        assert_eq!(net.param_count(), 15755);
    }

    #[test]
    fn zero_network_maps_to_zero() {
        let net = NetworkParams::zeros(&[3, 8, 8, 5]).unwrap();
        let out = net.forward(&[0.3, -0.7, 1.4]).unwrap();
        assert_eq!(out, vec![0.0; 5]);
    }

    #[test]
    fn single_affine_layer_of_ones() {
        let net = NetworkParams::from_parts(
            vec![3, 5],
            vec![vec![1.0; 15]],
            vec![vec![0.0; 5]],
        )
        .unwrap();
        let out = net.forward(&[1.0, 2.0, 3.0]).unwrap();
        for y in out {
            assert_eq!(y, 6.0);
        }
    }

    #[test]
    fn one_hidden_unit_is_plain_tanh() {
        let net = NetworkParams::from_parts(
            vec![1, 1, 1],
            vec![vec![1.0], vec![1.0]],
            vec![vec![0.0], vec![0.0]],
        )
        .unwrap();
        let out = net.forward(&[0.5]).unwrap();
        assert_relative_eq!(out[0], 0.4621171572600098, max_relative = 1e-12);
    }

    #[test]
    fn glorot_bounds_and_determinism() {
        let sizes = [3, 16, 16, 5];
        let a = NetworkParams::init(&sizes, 42).unwrap();
        let b = NetworkParams::init(&sizes, 42).unwrap();
        let c = NetworkParams::init(&sizes, 43).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        for l in 0..sizes.len() - 1 {
            let bound = (6.0 / (sizes[l] + sizes[l + 1]) as f64).sqrt();
            assert!(a.weights()[l].iter().all(|w| w.abs() < bound));
            assert!(a.biases()[l].iter().all(|&b| b == 0.0));
        }
    }

    #[test]
    fn rejects_bad_architectures() {
        assert!(NetworkParams::zeros(&[]).is_err());
        assert!(NetworkParams::zeros(&[3]).is_err());
        assert!(NetworkParams::zeros(&[3, 0, 5]).is_err());
        assert!(NetworkParams::zeros(&[4, 5, 5]).is_err());
    }

    #[test]
    fn rejects_non_finite_input() {
        let net = NetworkParams::zeros(&[3, 4, 5]).unwrap();
        assert!(matches!(
            net.forward(&[f64::NAN, 0.0, 0.0]),
            Err(Error::NonFiniteInput(..))
        ));
    }

    #[test]
    fn flat_round_trip() {
        let net = NetworkParams::init(&[3, 7, 5], 9).unwrap();
        let flat = net.to_flat();
        let mut other = NetworkParams::zeros(&[3, 7, 5]).unwrap();
        other.read_flat(&flat);
        assert_eq!(net, other);
    }
}
