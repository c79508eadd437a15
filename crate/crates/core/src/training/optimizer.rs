use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lstm::Model;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptimizerKind {
    Sgd,
    Adam,
}

impl fmt::Display for OptimizerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OptimizerKind::Sgd => "sgd",
            OptimizerKind::Adam => "adam",
        })
    }
}

impl FromStr for OptimizerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sgd" => Ok(OptimizerKind::Sgd),
            "adam" => Ok(OptimizerKind::Adam),
            other => Err(Error::Config(format!(
                "unknown optimizer '{other}' (expected sgd or adam)"
            ))),
        }
    }
}

/// Optimizer and epoch-loop settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerConfig {
    pub kind: OptimizerKind,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub epochs: usize,
    pub seed: u64,
    /// Reshuffle window order every epoch. Off keeps chronological order.
    pub shuffle: bool,
    /// Rescale the flattened gradient to at most this L2 norm.
    pub clip_norm: Option<f64>,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            kind: OptimizerKind::Adam,
            learning_rate: 0.001,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            epochs: 20,
            seed: 42,
            shuffle: true,
            clip_norm: None,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate.is_finite() && self.learning_rate >= 0.0) {
            return Err(Error::Config(format!(
                "learning_rate must be finite and non-negative, got {}",
                self.learning_rate
            )));
        }
        for (name, b) in [("beta1", self.beta1), ("beta2", self.beta2)] {
            if !(0.0..1.0).contains(&b) {
                return Err(Error::Config(format!("{name} must lie in [0, 1), got {b}")));
            }
        }
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return Err(Error::Config(format!("epsilon must be positive, got {}", self.epsilon)));
        }
        if self.epochs == 0 {
            return Err(Error::Config("epochs must be at least 1".into()));
        }
        if let Some(c) = self.clip_norm {
            if !(c.is_finite() && c > 0.0) {
                return Err(Error::Config(format!("clip_norm must be positive, got {c}")));
            }
        }
        Ok(())
    }
}

/// Update rule state over a flat parameter vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Optimizer {
    kind: OptimizerKind,
    lr: f64,
    beta1: f64,
    beta2: f64,
    epsilon: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Optimizer {
    pub fn new(config: &OptimizerConfig, n_params: usize) -> Result<Self> {
        config.validate()?;
        let moments = if config.kind == OptimizerKind::Adam {
            n_params
        } else {
            0
        };
        Ok(Optimizer {
            kind: config.kind,
            lr: config.learning_rate,
            beta1: config.beta1,
            beta2: config.beta2,
            epsilon: config.epsilon,
            m: vec![0.0; moments],
            v: vec![0.0; moments],
            t: 0,
        })
    }

    pub fn steps_taken(&self) -> i32 {
        self.t
    }

    pub fn first_moment(&self) -> &[f64] {
        &self.m
    }

    pub fn second_moment(&self) -> &[f64] {
        &self.v
    }

    /// One in-place update of `params` from `grads`.
    pub fn step(&mut self, params: &mut [f64], grads: &[f64]) -> Result<()> {
        if params.len() != grads.len() {
            return Err(Error::Internal(format!(
                "{} gradients for {} parameters",
                grads.len(),
                params.len()
            )));
        }
        match self.kind {
            OptimizerKind::Sgd => {
                for (p, g) in params.iter_mut().zip(grads) {
                    *p -= self.lr * g;
                }
            }
            OptimizerKind::Adam => {
                if self.m.len() != params.len() {
                    return Err(Error::Internal(format!(
                        "optimizer sized for {} parameters, got {}",
                        self.m.len(),
                        params.len()
                    )));
                }
                self.t += 1;
                let bc1 = 1.0 - self.beta1.powi(self.t);
                let bc2 = 1.0 - self.beta2.powi(self.t);
                for i in 0..params.len() {
                    let g = grads[i];
                    self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * g;
                    self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * g * g;
                    let m_hat = self.m[i] / bc1;
                    let v_hat = self.v[i] / bc2;
                    params[i] -= self.lr * m_hat / (v_hat.sqrt() + self.epsilon);
                }
            }
        }
        Ok(())
    }
}

/// Scales `grads` down to L2 norm `max_norm` if it exceeds it. Returns the
/// norm before clipping.
pub fn clip_norm(grads: &mut [f64], max_norm: f64) -> f64 {
    let norm = grads.iter().map(|g| g * g).sum::<f64>().sqrt();
    if norm > max_norm {
        let s = max_norm / norm;
        grads.iter_mut().for_each(|g| *g *= s);
    }
    norm
}

/// Applies one optimizer update to a model from a structurally matching
/// gradient.
pub fn step(params: &mut Model, grads: &Model, optimizer: &mut Optimizer) -> Result<()> {
    if params.kind() != grads.kind() {
        return Err(Error::Internal("gradient belongs to a different model kind".into()));
    }
    let mut flat = params.trainable();
    let g = grads.trainable();
    optimizer.step(&mut flat, &g)?;
    params.set_trainable(&flat)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(kind: OptimizerKind) -> OptimizerConfig {
        OptimizerConfig {
            kind,
            ..OptimizerConfig::default()
        }
    }

    #[test]
    fn sgd_step() {
        let mut opt = Optimizer::new(&cfg(OptimizerKind::Sgd), 1).unwrap();
        let mut p = [1.0];
        opt.step(&mut p, &[2.0]).unwrap();
        assert_eq!(p[0], 0.998);
    }

    #[test]
    fn adam_first_step() {
        let mut opt = Optimizer::new(&cfg(OptimizerKind::Adam), 1).unwrap();
        let mut p = [0.0];
        opt.step(&mut p, &[1.0]).unwrap();
        // m̂ = 1, v̂ = 1 → −lr / (1 + ε)
        assert!((p[0] + 0.001 / (1.0 + 1e-8)).abs() < 1e-15);
        assert!((p[0] + 0.001).abs() < 1e-9);
    }

    #[test]
    fn zero_gradient_leaves_params() {
        let mut opt = Optimizer::new(&cfg(OptimizerKind::Adam), 2).unwrap();
        let mut p = [0.5, -0.25];
        opt.step(&mut p, &[0.0, 0.0]).unwrap();
        assert_eq!(p, [0.5, -0.25]);
        assert_eq!(opt.first_moment(), &[0.0, 0.0]);
        assert_eq!(opt.steps_taken(), 1);
    }

    #[test]
    fn adam_moments_decay_under_zero_gradient() {
        let mut opt = Optimizer::new(&cfg(OptimizerKind::Adam), 1).unwrap();
        let mut p = [0.0];
        opt.step(&mut p, &[1.0]).unwrap();
        let (m, v) = (opt.first_moment()[0], opt.second_moment()[0]);
        opt.step(&mut p, &[0.0]).unwrap();
        assert_eq!(opt.first_moment()[0], 0.9 * m);
        assert_eq!(opt.second_moment()[0], 0.999 * v);
    }

    #[test]
    fn length_mismatch_is_internal() {
        let mut opt = Optimizer::new(&cfg(OptimizerKind::Sgd), 2).unwrap();
        assert!(matches!(opt.step(&mut [0.0, 0.0], &[1.0]), Err(Error::Internal(_))));
    }

    #[test]
    fn config_validation() {
        assert!(OptimizerConfig::default().validate().is_ok());
        for bad in [
            OptimizerConfig {
                learning_rate: -1.0,
                ..OptimizerConfig::default()
            },
            OptimizerConfig {
                beta1: 1.0,
                ..OptimizerConfig::default()
            },
            OptimizerConfig {
                epochs: 0,
                ..OptimizerConfig::default()
            },
            OptimizerConfig {
                clip_norm: Some(0.0),
                ..OptimizerConfig::default()
            },
        ] {
            assert!(matches!(bad.validate(), Err(Error::Config(_))));
        }
    }

    #[test]
    fn clipping() {
        let mut g = [3.0, 4.0];
        assert_eq!(clip_norm(&mut g, 1.0), 5.0);
        assert!((g[0] - 0.6).abs() < 1e-15 && (g[1] - 0.8).abs() < 1e-15);
        let mut g = [0.3, 0.4];
        clip_norm(&mut g, 1.0);
        assert_eq!(g, [0.3, 0.4]);
    }

    #[test]
    fn kinds_parse() {
        assert_eq!("Adam".parse::<OptimizerKind>().unwrap(), OptimizerKind::Adam);
        assert!("rmsprop".parse::<OptimizerKind>().is_err());
    }
}
