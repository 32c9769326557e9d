use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self { learning_rate: 1e-3, beta1: 0.9, beta2: 0.999, epsilon: 1e-8 }
    }
}

/// First and second moment estimates plus the step counter.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub t: u64,
}

impl AdamState {
    pub fn new(n: usize) -> Self {
        Self { m: vec![0.0; n], v: vec![0.0; n], t: 0 }
    }
}

/// One bias-corrected Adam update of `params` in place.
pub fn adam_step(params: &mut [f64], grads: &[f64], state: &mut AdamState, cfg: &AdamConfig) -> Result<()> {
    if grads.len() != params.len() || state.m.len() != params.len() || state.v.len() != params.len() {
        return Err(Error::ShapeMismatch { expected: params.len(), actual: grads.len() });
    }
    state.t += 1;
    let c1 = 1.0 - cfg.beta1.powi(state.t as i32);
    let c2 = 1.0 - cfg.beta2.powi(state.t as i32);
    for i in 0..params.len() {
        let g = grads[i];
        state.m[i] = cfg.beta1 * state.m[i] + (1.0 - cfg.beta1) * g;
        state.v[i] = cfg.beta2 * state.v[i] + (1.0 - cfg.beta2) * g * g;
        let m_hat = state.m[i] / c1;
        let v_hat = state.v[i] / c2;
        params[i] -= cfg.learning_rate * m_hat / (v_hat.sqrt() + cfg.epsilon);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_step_moves_by_learning_rate() {
        let cfg = AdamConfig { epsilon: 0.0, ..AdamConfig::default() };
        let mut p = vec![1.0, 1.0, 1.0];
        let mut s = AdamState::new(3);
        adam_step(&mut p, &[0.003, -250.0, 1e-7], &mut s, &cfg).unwrap();
        assert!((p[0] - (1.0 - 1e-3)).abs() < 1e-15);
        assert!((p[1] - (1.0 + 1e-3)).abs() < 1e-15);
        assert!((p[2] - (1.0 - 1e-3)).abs() < 1e-12);
    }

    #[test]
    fn zero_gradient_only_decays_state() {
        let cfg = AdamConfig::default();
        let mut p = vec![2.0];
        let mut s = AdamState { m: vec![0.0], v: vec![0.0], t: 0 };
        adam_step(&mut p, &[0.0], &mut s, &cfg).unwrap();
        assert_eq!(p, vec![2.0]);
        let mut s = AdamState { m: vec![0.5], v: vec![0.25], t: 3 };
        let mut q = vec![2.0];
        let p_before = q.clone();
        adam_step(&mut q, &[0.0], &mut s, &AdamConfig { learning_rate: 0.0, ..cfg }).unwrap();
        assert_eq!(q, p_before);
        assert!((s.m[0] - 0.45).abs() < 1e-15 && (s.v[0] - 0.25 * 0.999).abs() < 1e-15);
    }

    #[test]
    fn converges_on_quadratic() {
        let cfg = AdamConfig { learning_rate: 0.1, ..AdamConfig::default() };
        let mut w = vec![0.0];
        let mut s = AdamState::new(1);
        for _ in 0..200 {
            let g = 2.0 * (w[0] - 3.0);
            adam_step(&mut w, &[g], &mut s, &cfg).unwrap();
        }
        // Scalar recursion written out independently.
        let (mut w2, mut m, mut v) = (0.0f64, 0.0f64, 0.0f64);
        for t in 1..=200 {
            let g = 2.0 * (w2 - 3.0);
            m = 0.9 * m + 0.1 * g;
            v = 0.999 * v + 0.001 * g * g;
            w2 -= 0.1 * (m / (1.0 - 0.9f64.powi(t))) / ((v / (1.0 - 0.999f64.powi(t))).sqrt() + 1e-8);
        }
        assert_eq!(w[0], w2);
        assert!((w[0] - 3.0).abs() < 0.1, "{}", w[0]);
    }
}
