use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// First/second moment estimates and the number of completed steps.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub t: u64,
}

impl AdamState {
    pub fn new(n: usize) -> Self {
        Self {
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
        }
    }

    /// One bias-corrected Adam update of `params` in place.
    pub fn step(&mut self, params: &mut [f64], grads: &[f64], cfg: &AdamConfig) {
        assert_eq!(params.len(), grads.len(), "parameter/gradient length mismatch");
        assert_eq!(params.len(), self.m.len(), "optimizer state length mismatch");
        self.t += 1;
        let t = self.t as i32;
        let bc1 = 1.0 - cfg.beta1.powi(t);
        let bc2 = 1.0 - cfg.beta2.powi(t);
        for (((p, &g), m), v) in params
            .iter_mut()
            .zip(grads)
            .zip(self.m.iter_mut())
            .zip(self.v.iter_mut())
        {
            *m = cfg.beta1 * *m + (1.0 - cfg.beta1) * g;
            *v = cfg.beta2 * *v + (1.0 - cfg.beta2) * g * g;
            let m_hat = *m / bc1;
            let v_hat = *v / bc2;
            *p -= cfg.learning_rate * m_hat / (v_hat.sqrt() + cfg.eps);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_step_with_unit_gradient() {
        let mut p = vec![0.0];
        let mut s = AdamState::new(1);
        s.step(&mut p, &[1.0], &AdamConfig::default());
        let expected = -1e-3 / (1.0 + 1e-8);
        assert!((p[0] - expected).abs() < 1e-18);
        assert!((p[0] + 9.999_999_9e-4).abs() < 1e-12);
    }

    #[test]
    fn zero_gradient_is_a_no_op() {
        let mut p = vec![0.3, -2.0];
        let mut s = AdamState::new(2);
        s.step(&mut p, &[0.0, 0.0], &AdamConfig::default());
        assert_eq!(p, vec![0.3, -2.0]);
    }

    #[test]
    fn two_steps_match_scalar_recurrence() {
        // Independent scalar transcription of the update rule.
        fn scalar(theta: f64, g: f64, steps: u32) -> (f64, f64, f64) {
            let (lr, b1, b2, eps) = (1e-3f64, 0.9f64, 0.999f64, 1e-8f64);
            let (mut th, mut m, mut v) = (theta, 0.0f64, 0.0f64);
            for t in 1..=steps {
                m = b1 * m + (1.0 - b1) * g;
                v = b2 * v + (1.0 - b2) * g * g;
                let mh = m / (1.0 - b1.powi(t as i32));
                let vh = v / (1.0 - b2.powi(t as i32));
                th -= lr * mh / (vh.sqrt() + eps);
            }
            (th, m, v)
        }
        let g = 0.37;
        let mut p = vec![1.5];
        let mut s = AdamState::new(1);
        for _ in 0..2 {
            s.step(&mut p, &[g], &AdamConfig::default());
        }
        let (th, m, v) = scalar(1.5, g, 2);
        assert!((p[0] - th).abs() < 1e-12);
        assert!((s.m[0] - m).abs() < 1e-12);
        assert!((s.v[0] - v).abs() < 1e-12);
        assert_eq!(s.t, 2);
    }
}
