use indexmap::IndexMap;

use super::{ParamSet, Real, Tensor};
use crate::error::{Error, Result};

/// Adam optimizer state: per-parameter first and second moments plus the
/// step counter used for bias correction.
#[derive(Clone, Debug)]
pub struct AdamState<F> {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    step: u64,
    moments: IndexMap<String, (Tensor<F>, Tensor<F>)>,
}

impl<F: Real> AdamState<F> {
    /// Standard betas (0.9, 0.999) and epsilon 1e-8.
    pub fn new(learning_rate: f64) -> Self {
        AdamState {
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            step: 0,
            moments: IndexMap::new(),
        }
    }

    pub fn step(&self) -> u64 {
        self.step
    }

    pub fn first_moment(&self, name: &str) -> Option<&Tensor<F>> {
        self.moments.get(name).map(|(m, _)| m)
    }

    pub fn second_moment(&self, name: &str) -> Option<&Tensor<F>> {
        self.moments.get(name).map(|(_, v)| v)
    }
}

/// One bias-corrected Adam update. Parameters without an entry in `grads`
/// are treated as having a zero gradient.
pub fn adam_step<F: Real>(params: &mut ParamSet<F>, grads: &ParamSet<F>, state: &mut AdamState<F>) -> Result<()> {
    for (name, g) in grads {
        let p = params
            .get(name)
            .ok_or_else(|| Error::Training(format!("gradient for unknown parameter `{name}`")))?;
        if p.shape() != g.shape() {
            return Err(Error::Training(format!(
                "gradient shape {:?} for parameter `{name}` of shape {:?}",
                g.shape(),
                p.shape()
            )));
        }
        if !g.is_finite() {
            return Err(Error::Training(format!("non-finite gradient for parameter `{name}`")));
        }
    }

    state.step += 1;
    let t = state.step as i32;
    let b1 = F::from_f64(state.beta1);
    let b2 = F::from_f64(state.beta2);
    let one = F::one();
    let bc1 = F::from_f64(1.0 - state.beta1.powi(t));
    let bc2 = F::from_f64(1.0 - state.beta2.powi(t));
    let lr = F::from_f64(state.learning_rate);
    let eps = F::from_f64(state.epsilon);

    for (name, p) in params.iter_mut() {
        let (m, v) = state
            .moments
            .entry(name.clone())
            .or_insert_with(|| (Tensor::zeros(p.shape()), Tensor::zeros(p.shape())));
        let g = grads.get(name);
        let pd = p.data_mut();
        let md = m.data_mut();
        let vd = v.data_mut();
        for i in 0..pd.len() {
            let gi = g.map_or(F::zero(), |g| g.data()[i]);
            md[i] = b1 * md[i] + (one - b1) * gi;
            vd[i] = b2 * vd[i] + (one - b2) * gi * gi;
            let mhat = md[i] / bc1;
            let vhat = vd[i] / bc2;
            pd[i] -= lr * mhat / (vhat.sqrt() + eps);
        }
    }
    Ok(())
}
