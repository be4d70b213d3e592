use serde::{Deserialize, Serialize};

use super::network::Gradient;
use crate::error::{Error, Result};

/// Adam optimizer state for one parameter set.
///
/// Moments are allocated lazily on the first step, shaped like the
/// gradient blocks they receive.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AdamState {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub step_count: u64,
    pub first_moment: Vec<Vec<f64>>,
    pub second_moment: Vec<Vec<f64>>,
}

impl AdamState {
    pub fn new(learning_rate: f64) -> Self {
        AdamState {
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            step_count: 0,
            first_moment: Vec::new(),
            second_moment: Vec::new(),
        }
    }

    fn validate(&self) -> Result<()> {
        for (name, b) in [("beta1", self.beta1), ("beta2", self.beta2)] {
            if !(0.0..1.0).contains(&b) {
                return Err(Error::InvalidHyperparameter(format!("{name} must be in [0, 1), got {b}")));
            }
        }
        if !(self.learning_rate > 0.0) || !(self.epsilon > 0.0) {
            return Err(Error::InvalidHyperparameter(
                "learning rate and epsilon must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// One bias-corrected Adam update. A non-finite gradient leaves both the
/// parameters and the state untouched.
pub fn adam_step(params: &mut [&mut [f64]], grads: &Gradient, state: &mut AdamState) -> Result<()> {
    state.validate()?;
    if params.len() != grads.blocks.len() {
        return Err(Error::shape("adam_step", params.len(), grads.blocks.len()));
    }
    for (i, (p, g)) in params.iter().zip(&grads.blocks).enumerate() {
        if p.len() != g.len() {
            return Err(Error::shape("adam_step parameter block", p.len(), g.len()));
        }
        if g.iter().any(|v| !v.is_finite()) {
            return Err(Error::Divergence {
                block: i,
                name: format!("block {i}"),
            });
        }
    }
    if state.first_moment.is_empty() {
        state.first_moment = grads.blocks.iter().map(|g| vec![0.0; g.len()]).collect();
        state.second_moment = state.first_moment.clone();
    } else if state.first_moment.len() != grads.blocks.len()
        || state.first_moment.iter().zip(&grads.blocks).any(|(m, g)| m.len() != g.len())
    {
        return Err(Error::shape(
            "adam_step moments",
            "moments shaped like the gradient",
            "a different parameter layout",
        ));
    }

    state.step_count += 1;
    let t = state.step_count as i32;
    let (b1, b2) = (state.beta1, state.beta2);
    let bias1 = 1.0 - b1.powi(t);
    let bias2 = 1.0 - b2.powi(t);
    let lr = state.learning_rate;
    let eps = state.epsilon;
    for (((p, g), m), v) in params
        .iter_mut()
        .zip(&grads.blocks)
        .zip(&mut state.first_moment)
        .zip(&mut state.second_moment)
    {
        for j in 0..g.len() {
            m[j] = b1 * m[j] + (1.0 - b1) * g[j];
            v[j] = b2 * v[j] + (1.0 - b2) * g[j] * g[j];
            let m_hat = m[j] / bias1;
            let v_hat = v[j] / bias2;
            p[j] -= lr * m_hat / (v_hat.sqrt() + eps);
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn step(w: &mut Vec<f64>, g: Vec<f64>, st: &mut AdamState) -> Result<()> {
        let grads = Gradient { blocks: vec![g] };
        adam_step(&mut [w.as_mut_slice()], &grads, st)
    }

    #[test]
    fn zero_gradient_is_fixed_point() {
        let mut w = vec![1.5, -2.0];
        let mut st = AdamState::new(0.1);
        for _ in 0..5 {
            step(&mut w, vec![0.0, 0.0], &mut st).unwrap();
        }
        assert_eq!(w, vec![1.5, -2.0]);
        assert_eq!(st.step_count, 5);
    }

    #[test]
    fn first_step_moves_by_learning_rate() {
        // t=1: m̂ = g, v̂ = g², update = −lr·g/(|g|+ε)
        let mut w = vec![0.0, 0.0, 0.0];
        let mut st = AdamState::new(0.01);
        step(&mut w, vec![3.0, -0.002, 250.0], &mut st).unwrap();
        let expect = |g: f64| -0.01 * g / (g.abs() + 1e-8);
        for (wv, g) in w.iter().zip([3.0, -0.002, 250.0]) {
            assert!((wv - expect(g)).abs() < 1e-15);
            assert!((wv.abs() - 0.01).abs() < 1e-7);
        }
    }

    #[test]
    fn scalar_quadratic_converges() {
        // f(w) = (w − 3)², 200 steps, lr 0.1
        let mut w = vec![0.0];
        let mut st = AdamState::new(0.1);
        for _ in 0..200 {
            let g = 2.0 * (w[0] - 3.0);
            step(&mut w, vec![g], &mut st).unwrap();
        }
        assert!((w[0] - 3.0).abs() < 0.05, "w = {}", w[0]);
    }

    #[test]
    fn non_finite_gradient_is_divergence() {
        let mut w = vec![1.0];
        let mut st = AdamState::new(0.1);
        let err = step(&mut w, vec![f64::NAN], &mut st).unwrap_err();
        assert!(matches!(err, Error::Divergence { block: 0, .. }));
        assert_eq!(w, vec![1.0]);
        assert_eq!(st.step_count, 0);
    }

    #[test]
    fn invalid_betas_rejected() {
        let mut st = AdamState::new(0.1);
        st.beta2 = 1.0;
        assert!(step(&mut vec![0.0], vec![1.0], &mut st).is_err());
    }
}
