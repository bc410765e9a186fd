//! The Adam update, bias-corrected, without weight decay.

use crate::error::{Error, Result};

/// One parameter tensor with its gradient and moment buffers.
pub struct AdamTarget<'a> {
    pub params: &'a mut [f64],
    pub grads: &'a [f64],
    pub m: &'a mut [f64],
    pub v: &'a mut [f64],
}

/// Optimizer state shared by a set of parameter tensors.
///
/// `step` counts completed updates; one call to [`AdamState::step`] over
/// all targets of a model is one update.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub step: u64,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl AdamState {
    pub fn new(lr: f64) -> Self {
        AdamState {
            step: 0,
            lr,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }

    /// Applies one bias-corrected Adam update to every target.
    ///
    /// If any gradient is non-finite, nothing is updated and the step
    /// counter does not advance.
    pub fn step(&mut self, targets: &mut [AdamTarget<'_>]) -> Result<()> {
        for t in targets.iter() {
            if t.grads.iter().any(|g| !g.is_finite()) {
                return Err(Error::NonFiniteGradient {
                    context: "adam step".into(),
                });
            }
        }
        self.step += 1;
        let t = self.step as i32;
        let bc1 = 1.0 - self.beta1.powi(t);
        let bc2 = 1.0 - self.beta2.powi(t);
        for target in targets {
            for i in 0..target.params.len() {
                let g = target.grads[i];
                target.m[i] = self.beta1 * target.m[i] + (1.0 - self.beta1) * g;
                target.v[i] = self.beta2 * target.v[i] + (1.0 - self.beta2) * g * g;
                let m_hat = target.m[i] / bc1;
                let v_hat = target.v[i] / bc2;
                target.params[i] -= self.lr * m_hat / (v_hat.sqrt() + self.epsilon);
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single(param: f64, grad: f64) -> (Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>) {
        (vec![param], vec![grad], vec![0.0], vec![0.0])
    }

    #[test]
    fn first_step_matches_hand_evaluation() {
        // w = 1, g = 1, lr = 0.0005: bias-corrected m_hat = v_hat = 1,
        // so w' = 1 - lr / (1 + eps) ~= 0.9995.
        let (mut p, g, mut m, mut v) = single(1.0, 1.0);
        let mut adam = AdamState::new(0.0005);
        adam.step(&mut [AdamTarget {
            params: &mut p,
            grads: &g,
            m: &mut m,
            v: &mut v,
        }])
        .unwrap();
        assert_eq!(adam.step, 1);
        assert!((p[0] - 0.9995).abs() < 1e-9, "got {}", p[0]);
    }

    #[test]
    fn zero_gradient_is_a_fixed_point() {
        let (mut p, g, mut m, mut v) = single(0.75, 0.0);
        let mut adam = AdamState::new(0.01);
        for _ in 0..10 {
            adam.step(&mut [AdamTarget {
                params: &mut p,
                grads: &g,
                m: &mut m,
                v: &mut v,
            }])
            .unwrap();
        }
        assert_eq!(p[0], 0.75);
        assert_eq!(adam.step, 10);
    }

    #[test]
    fn identical_states_give_identical_results() {
        let run = || {
            let (mut p, g, mut m, mut v) = single(0.3, -0.2);
            let mut adam = AdamState::new(0.001);
            for _ in 0..5 {
                adam.step(&mut [AdamTarget {
                    params: &mut p,
                    grads: &g,
                    m: &mut m,
                    v: &mut v,
                }])
                .unwrap();
            }
            (p[0], m[0], v[0], adam.step)
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn non_finite_gradient_applies_nothing() {
        let (mut p, g, mut m, mut v) = single(1.0, f64::NAN);
        let mut adam = AdamState::new(0.01);
        let err = adam
            .step(&mut [AdamTarget {
                params: &mut p,
                grads: &g,
                m: &mut m,
                v: &mut v,
            }])
            .unwrap_err();
        assert!(matches!(err, Error::NonFiniteGradient { .. }));
        assert_eq!(p[0], 1.0);
        assert_eq!(m[0], 0.0);
        assert_eq!(adam.step, 0);
    }
}
