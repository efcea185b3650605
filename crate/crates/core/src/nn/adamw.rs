use crate::error::{Error, Result};
use crate::nn::Parameter;
use crate::scalar::Scalar;

/// AdamW: Adam with decoupled weight decay.
///
/// The decay step shrinks the value directly (`value -= lr · wd · value`)
/// before the bias-corrected Adam update, so decay never flows through the
/// moment estimates. With `weight_decay = 0` this is textbook Adam.
#[derive(Debug, Clone, Copy)]
pub struct AdamW {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub weight_decay: f64,
}

impl AdamW {
    pub fn new(learning_rate: f64, weight_decay: f64) -> Self {
        AdamW {
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            weight_decay,
        }
    }

    /// One optimizer step: consumes and zeroes `p.grad`, updates the moment
    /// buffers and increments `p.step_count`.
    pub fn step<S: Scalar>(&self, name: &str, p: &mut Parameter<S>) -> Result<()> {
        if !p.grad.is_all_finite() {
            return Err(Error::NonFiniteGrad { name: name.to_string() });
        }
        let lr = S::from_f64(self.learning_rate);
        let b1 = S::from_f64(self.beta1);
        let b2 = S::from_f64(self.beta2);
        let eps = S::from_f64(self.epsilon);
        let decay = S::from_f64(self.learning_rate * self.weight_decay);

        p.step_count += 1;
        let t = p.step_count as i32;
        let bc1 = S::one() - b1.powi(t);
        let bc2 = S::one() - b2.powi(t);

        let value = p.value.data_mut();
        let grad = p.grad.data_mut();
        let m1 = p.m1.data_mut();
        let m2 = p.m2.data_mut();
        for i in 0..value.len() {
            value[i] = value[i] - decay * value[i];
            let g = grad[i];
            m1[i] = b1 * m1[i] + (S::one() - b1) * g;
            m2[i] = b2 * m2[i] + (S::one() - b2) * g * g;
            let m_hat = m1[i] / bc1;
            let v_hat = m2[i] / bc2;
            value[i] = value[i] - lr * m_hat / (v_hat.sqrt() + eps);
            grad[i] = S::zero();
        }
        Ok(())
    }
}
