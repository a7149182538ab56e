//! Bias-corrected first-order moment updates.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// Moment accumulators for one flat parameter vector.
#[derive(Debug, Clone)]
pub struct AdamState {
    config: AdamConfig,
    first_moment: Vec<f64>,
    second_moment: Vec<f64>,
    step_count: u64,
}

impl AdamState {
    pub fn new(n_params: usize, config: AdamConfig) -> Self {
        AdamState {
            config,
            first_moment: vec![0.0; n_params],
            second_moment: vec![0.0; n_params],
            step_count: 0,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step_count
    }

    /// One in-place update of `params`. Rejects non-finite gradients before
    /// touching any state, so a failed step leaves everything unchanged.
    pub fn step(&mut self, params: &mut [f64], grad: &[f64]) -> Result<()> {
        if params.len() != self.first_moment.len() || grad.len() != params.len() {
            return Err(Error::Configuration(format!(
                "optimizer state sized for {} parameters, got {} params / {} grads",
                self.first_moment.len(),
                params.len(),
                grad.len()
            )));
        }
        if !grad.iter().all(|g| g.is_finite()) {
            return Err(Error::StepRejected(
                "gradient contains non-finite entries".into(),
            ));
        }

        let c = self.config;
        self.step_count += 1;
        let t = self.step_count as i32;
        let bias1 = 1.0 - c.beta1.powi(t);
        let bias2 = 1.0 - c.beta2.powi(t);

        for i in 0..params.len() {
            let g = grad[i];
            let m = c.beta1 * self.first_moment[i] + (1.0 - c.beta1) * g;
            let v = c.beta2 * self.second_moment[i] + (1.0 - c.beta2) * g * g;
            self.first_moment[i] = m;
            self.second_moment[i] = v;
            let m_hat = m / bias1;
            let v_hat = v / bias2;
            params[i] -= c.learning_rate * m_hat / (v_hat.sqrt() + c.epsilon);
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn first_step_moves_by_almost_the_learning_rate() {
        let mut state = AdamState::new(1, AdamConfig::default());
        let mut params = vec![0.0];
        state.step(&mut params, &[0.5]).unwrap();
        // m_hat = g, v_hat = g^2: delta = -lr * g / (|g| + eps).
        assert_relative_eq!(params[0], -9.99999998e-4, max_relative = 1e-6);
        assert!(params[0] > -1e-3);
    }

    #[test]
    fn zero_gradient_leaves_parameters_unchanged() {
        let mut state = AdamState::new(3, AdamConfig::default());
        let mut params = vec![1.0, -2.0, 0.5];
        state.step(&mut params, &[0.0, 0.0, 0.0]).unwrap();
        assert_eq!(params, vec![1.0, -2.0, 0.5]);
    }

    #[test]
    fn identical_runs_are_bitwise_identical() {
        let grads = [
            vec![0.3, -0.7],
            vec![-0.1, 0.2],
            vec![0.05, 0.05],
            vec![1.5, -2.5],
        ];
        let run = || {
            let mut state = AdamState::new(2, AdamConfig::default());
            let mut params = vec![0.1, -0.2];
            for g in &grads {
                state.step(&mut params, g).unwrap();
            }
            params
        };
        let a = run();
        let b = run();
        assert_eq!(a[0].to_bits(), b[0].to_bits());
        assert_eq!(a[1].to_bits(), b[1].to_bits());
    }

    #[test]
    fn update_sign_pattern_is_scale_invariant() {
        let base = [0.3, -0.7, 0.001, -4.0];
        for scale in [0.1, 3.7, 1000.0] {
            let mut s1 = AdamState::new(4, AdamConfig::default());
            let mut s2 = AdamState::new(4, AdamConfig::default());
            let mut p1 = vec![0.0; 4];
            let mut p2 = vec![0.0; 4];
            let scaled: Vec<f64> = base.iter().map(|g| g * scale).collect();
            s1.step(&mut p1, &base).unwrap();
            s2.step(&mut p2, &scaled).unwrap();
            for i in 0..4 {
                assert_eq!(p1[i].signum(), p2[i].signum(), "component {i} scale {scale}");
            }
        }
    }

    #[test]
    fn non_finite_gradient_is_rejected_without_side_effects() {
        let mut state = AdamState::new(2, AdamConfig::default());
        let mut params = vec![1.0, 2.0];
        state.step(&mut params, &[0.1, 0.1]).unwrap();
        let snapshot = params.clone();
        let err = state.step(&mut params, &[f64::NAN, 0.0]).unwrap_err();
        assert!(matches!(err, Error::StepRejected(_)));
        assert_eq!(params, snapshot);
        assert_eq!(state.step_count(), 1);
    }

    #[test]
    fn length_mismatch_is_a_configuration_error() {
        let mut state = AdamState::new(2, AdamConfig::default());
        let mut params = vec![1.0];
        assert!(matches!(
            state.step(&mut params, &[0.1]),
            Err(Error::Configuration(_))
        ));
    }
}
