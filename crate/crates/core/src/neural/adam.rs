use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdamConfig {
    pub lr: f64,
    #[serde(default = "default_beta1")]
    pub beta1: f64,
    #[serde(default = "default_beta2")]
    pub beta2: f64,
    #[serde(default = "default_eps")]
    pub eps: f64,
    /// Rescale the gradient to this global L2 norm when exceeded.
    #[serde(default)]
    pub grad_clip: Option<f64>,
}

fn default_beta1() -> f64 {
    0.9
}
fn default_beta2() -> f64 {
    0.999
}
fn default_eps() -> f64 {
    1e-8
}

impl AdamConfig {
    pub fn with_lr(lr: f64) -> Self {
        Self {
            lr,
            beta1: default_beta1(),
            beta2: default_beta2(),
            eps: default_eps(),
            grad_clip: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lr > 0.0)
            || !(0.0..1.0).contains(&self.beta1)
            || !(0.0..1.0).contains(&self.beta2)
            || !(self.eps > 0.0)
            || self.grad_clip.is_some_and(|c| !(c > 0.0))
        {
            return Err(Error::invalid(format!("bad Adam settings {self:?}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdamState {
    pub config: AdamConfig,
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub t: u64,
}

impl AdamState {
    pub fn new(config: AdamConfig, num_params: usize) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            config,
            m: vec![0.0; num_params],
            v: vec![0.0; num_params],
            t: 0,
        })
    }

    /// One bias-corrected descent step. Parameters are left untouched when
    /// the gradient holds a non-finite entry.
    pub fn step(&mut self, params: &mut [f64], grads: &[f64]) -> Result<()> {
        if params.len() != self.m.len() || grads.len() != self.m.len() {
            return Err(Error::invalid(
                "Adam state, params and grads differ in length",
            ));
        }
        if let Some(i) = grads.iter().position(|g| !g.is_finite()) {
            return Err(Error::Divergence(format!(
                "non-finite gradient at parameter {i}"
            )));
        }
        let c = self.config;
        let mut scale = 1.0;
        if let Some(max_norm) = c.grad_clip {
            let norm = grads.iter().map(|g| g * g).sum::<f64>().sqrt();
            if norm > max_norm {
                scale = max_norm / norm;
            }
        }
        self.t += 1;
        let bc1 = 1.0 - c.beta1.powi(self.t as i32);
        let bc2 = 1.0 - c.beta2.powi(self.t as i32);
        for (((p, &g), m), v) in params
            .iter_mut()
            .zip(grads)
            .zip(&mut self.m)
            .zip(&mut self.v)
        {
            let g = g * scale;
            *m = c.beta1 * *m + (1.0 - c.beta1) * g;
            *v = c.beta2 * *v + (1.0 - c.beta2) * g * g;
            let m_hat = *m / bc1;
            let v_hat = *v / bc2;
            *p -= c.lr * m_hat / (v_hat.sqrt() + c.eps);
        }
        Ok(())
    }
}

/// `target <- tau * online + (1 - tau) * target`.
pub fn soft_update(target: &mut [f64], online: &[f64], tau: f64) -> Result<()> {
    if target.len() != online.len() {
        return Err(Error::invalid("soft update between different shapes"));
    }
    if !(tau > 0.0 && tau <= 1.0) {
        return Err(Error::invalid(format!("tau {tau} outside (0, 1]")));
    }
    if tau == 1.0 {
        target.copy_from_slice(online);
        return Ok(());
    }
    for (t, &o) in target.iter_mut().zip(online) {
        *t = tau * o + (1.0 - tau) * *t;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_step_moves_by_lr() {
        let mut s = AdamState::new(AdamConfig::with_lr(1e-3), 5).unwrap();
        let mut p = vec![0.3; 5];
        s.step(&mut p, &[1.0; 5]).unwrap();
        for x in p {
            assert!((x - (0.3 - 1e-3)).abs() < 1e-6);
        }
    }

    #[test]
    fn zero_gradient_keeps_params_and_decays_moments() {
        let mut s = AdamState::new(AdamConfig::with_lr(1e-3), 2).unwrap();
        let mut p = vec![1.0, -2.0];
        s.step(&mut p, &[0.5, -0.5]).unwrap();
        let (m0, v0) = (s.m.clone(), s.v.clone());
        let before = p.clone();
        s.m.iter_mut().for_each(|m| *m = 0.0);
        s.v.iter_mut().for_each(|v| *v = 0.0);
        s.step(&mut p, &[0.0, 0.0]).unwrap();
        assert_eq!(p, before);
        s.m = m0.clone();
        s.v = v0.clone();
        s.step(&mut p, &[0.0, 0.0]).unwrap();
        assert!((s.m[0] - 0.9 * m0[0]).abs() < 1e-15);
        assert!((s.v[0] - 0.999 * v0[0]).abs() < 1e-18);
    }

    #[test]
    fn identical_calls_identical_results() {
        let run = || {
            let mut s = AdamState::new(AdamConfig::with_lr(1e-2), 3).unwrap();
            let mut p = vec![0.1, 0.2, 0.3];
            for i in 0..10 {
                let g: Vec<f64> = p.iter().map(|x| x * i as f64 - 0.1).collect();
                s.step(&mut p, &g).unwrap();
            }
            (p, s)
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn non_finite_gradient_is_divergence() {
        let mut s = AdamState::new(AdamConfig::with_lr(1e-3), 2).unwrap();
        let mut p = vec![0.0, 0.0];
        assert!(matches!(
            s.step(&mut p, &[1.0, f64::NAN]),
            Err(Error::Divergence(_))
        ));
        assert!(s.step(&mut p, &[f64::INFINITY, 0.0]).is_err());
        assert_eq!(p, vec![0.0, 0.0]);
        assert_eq!(s.t, 0);
    }

    #[test]
    fn clipping_bounds_the_effective_gradient() {
        let mut cfg = AdamConfig::with_lr(1e-3);
        cfg.grad_clip = Some(1.0);
        let mut s = AdamState::new(cfg, 2).unwrap();
        let mut p = vec![0.0, 0.0];
        s.step(&mut p, &[30.0, 40.0]).unwrap();
        assert!((s.m[0] - 0.1 * 0.6).abs() < 1e-12);
        assert!((s.m[1] - 0.1 * 0.8).abs() < 1e-12);
    }

    #[test]
    fn soft_update_examples() {
        let mut t = vec![0.0; 3];
        soft_update(&mut t, &[1.0; 3], 0.005).unwrap();
        assert!(t.iter().all(|x| (x - 0.005).abs() < 1e-15));
        soft_update(&mut t, &[7.0, 8.0, 9.0], 1.0).unwrap();
        assert_eq!(t, vec![7.0, 8.0, 9.0]);
        assert!(soft_update(&mut t, &[1.0], 0.5).is_err());
        assert!(soft_update(&mut t, &[1.0; 3], 0.0).is_err());
    }

    #[test]
    fn soft_update_geometric_gap() {
        let tau = 0.005;
        let mut t = vec![0.0];
        for n in 1..=1000 {
            soft_update(&mut t, &[1.0], tau).unwrap();
            let gap = 1.0 - t[0];
            let want = (1.0 - tau).powi(n);
            assert!((gap - want).abs() < 1e-12, "n={n}");
        }
    }
}
