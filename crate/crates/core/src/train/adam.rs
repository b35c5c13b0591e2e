use crate::error::{Error, Result};
use crate::gan::Param;

/// Adam hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub lr: f32,
    pub beta1: f32,
    pub beta2: f32,
    pub eps: f32,
}

/// First and second moment accumulators for one parameter list.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    m: Vec<Vec<f32>>,
    v: Vec<Vec<f32>>,
    step: u64,
}

impl AdamState {
    pub fn new(params: &[Param]) -> Self {
        Self {
            m: params.iter().map(|p| vec![0.0; p.len()]).collect(),
            v: params.iter().map(|p| vec![0.0; p.len()]).collect(),
            step: 0,
        }
    }

    pub fn step(&self) -> u64 {
        self.step
    }

    /// One bias-corrected Adam step, applied in place.
    pub fn update(&mut self, params: &mut [Param], grads: &[Vec<f32>], cfg: &AdamConfig) -> Result<()> {
        if params.len() != self.m.len()
            || grads.len() != params.len()
            || params.iter().zip(grads).zip(&self.m).any(|((p, g), m)| p.len() != g.len() || p.len() != m.len())
        {
            return Err(Error::dim("adam_update", "parameter, gradient and state shapes disagree"));
        }
        self.step += 1;
        let t = self.step as i32;
        let c1 = 1.0 - cfg.beta1.powi(t);
        let c2 = 1.0 - cfg.beta2.powi(t);
        for (((p, g), m), v) in params.iter_mut().zip(grads).zip(&mut self.m).zip(&mut self.v) {
            for i in 0..g.len() {
                m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
                v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
                let m_hat = m[i] / c1;
                let v_hat = v[i] / c2;
                p.data[i] -= cfg.lr * m_hat / (v_hat.sqrt() + cfg.eps);
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const CFG: AdamConfig = AdamConfig {
        lr: 2e-4,
        beta1: 0.5,
        beta2: 0.9,
        eps: 1e-8,
    };

    fn param(v: f32) -> Vec<Param> {
        vec![Param {
            name: "p".into(),
            shape: vec![1],
            data: vec![v],
        }]
    }

    #[test]
    fn zero_gradient_is_identity() {
        let mut p = param(1.5);
        let mut s = AdamState::new(&p);
        for _ in 0..3 {
            s.update(&mut p, &[vec![0.0]], &CFG).unwrap();
        }
        assert_eq!(p[0].data[0], 1.5);
    }

    #[test]
    fn first_step_matches_hand_evaluation() {
        // m̂ = g, v̂ = g², so the step is lr·g/(|g| + eps).
        let g = 0.3f32;
        let mut p = param(0.0);
        let mut s = AdamState::new(&p);
        s.update(&mut p, &[vec![g]], &CFG).unwrap();
        let expected = -CFG.lr * g / (g.abs() + CFG.eps);
        assert!((p[0].data[0] - expected).abs() < 1e-10);
    }

    #[test]
    fn constant_gradient_step_approaches_lr() {
        let mut p = param(0.0);
        let mut s = AdamState::new(&p);
        let mut prev = 0.0;
        for _ in 0..200 {
            s.update(&mut p, &[vec![-7.0]], &CFG).unwrap();
            let step = p[0].data[0] - prev;
            prev = p[0].data[0];
            assert!(step > 0.0);
        }
        let last = {
            let before = p[0].data[0];
            s.update(&mut p, &[vec![-7.0]], &CFG).unwrap();
            p[0].data[0] - before
        };
        assert!((last - CFG.lr).abs() < 1e-3 * CFG.lr);
    }

    #[test]
    fn shape_mismatch_errors() {
        let mut p = param(0.0);
        let mut s = AdamState::new(&p);
        assert!(s.update(&mut p, &[vec![0.0, 1.0]], &CFG).is_err());
    }
}
