use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{AgeError, Result};
use crate::sampling::WalkConfig;
use crate::tensor::{Activation, OptimizerConfig, OptimizerKind};

/// Norm used by translate-model distances.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Norm {
    L1,
    L2,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub n_epoch: usize,
    /// Discriminator passes per epoch.
    pub n_d: usize,
    /// Generator passes per epoch.
    pub n_g: usize,
    /// Fake samples per unit per pass.
    pub n_s: usize,
    pub batch_size: usize,
    /// Weight of the adversarial term (undirected model only).
    pub lambda: f64,
    pub dim: usize,
    /// Transform hidden width; 0 means `dim`.
    pub hidden: usize,
    pub activation: Activation,
    pub seed: u64,
    pub optimizer: OptimizerConfig,
    /// Negative samples per skip-gram pair.
    pub neg_k: usize,
    pub walk: WalkConfig,
    pub margin: f64,
    pub norm: Norm,
    /// Minimize `-log(1 - D(fake))` for the heterogeneous generator
    /// instead of `log(1 - D(fake))`.
    pub negate_fake_term: bool,
    pub threads: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            n_epoch: 20,
            n_d: 15,
            n_g: 5,
            n_s: 1,
            batch_size: 512,
            lambda: 1.0,
            dim: 128,
            hidden: 0,
            activation: Activation::Tanh,
            seed: 0,
            optimizer: OptimizerConfig::default(),
            neg_k: 5,
            walk: WalkConfig::default(),
            margin: 1.0,
            norm: Norm::L2,
            negate_fake_term: false,
            threads: 1,
        }
    }
}

impl TrainConfig {
    pub fn hidden_width(&self) -> usize {
        if self.hidden == 0 {
            self.dim
        } else {
            self.hidden
        }
    }

    pub fn validate(&self) -> Result<()> {
        let counts = [
            ("n_d", self.n_d),
            ("n_g", self.n_g),
            ("n_s", self.n_s),
            ("batch_size", self.batch_size),
            ("dim", self.dim),
            ("neg_k", self.neg_k),
            ("threads", self.threads),
        ];
        for (name, v) in counts {
            if v == 0 {
                return Err(AgeError::invalid(format!("{name} must be positive")));
            }
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(AgeError::invalid(format!("lambda must be finite and >= 0, got {}", self.lambda)));
        }
        if !(self.optimizer.lr > 0.0 && self.optimizer.lr.is_finite()) {
            return Err(AgeError::invalid("learning rate must be positive"));
        }
        if !self.margin.is_finite() {
            return Err(AgeError::invalid("margin must be finite"));
        }
        self.walk.validate()
    }

    /// Every key accepted by [`TrainConfig::set`].
    pub const KEYS: &'static [&'static str] = &[
        "n_epoch",
        "n_d",
        "n_g",
        "n_s",
        "batch_size",
        "lambda",
        "dim",
        "hidden",
        "activation",
        "seed",
        "optimizer",
        "lr",
        "beta1",
        "beta2",
        "adam_eps",
        "neg_k",
        "num_walks",
        "walk_length",
        "window",
        "p",
        "q",
        "margin",
        "norm",
        "negate_fake_term",
        "threads",
    ];

    /// Sets one field from its textual form. Unknown keys are an error.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        match key {
            "n_epoch" => self.n_epoch = parse(key, v)?,
            "n_d" => self.n_d = parse(key, v)?,
            "n_g" => self.n_g = parse(key, v)?,
            "n_s" => self.n_s = parse(key, v)?,
            "batch_size" => self.batch_size = parse(key, v)?,
            "lambda" => self.lambda = parse(key, v)?,
            "dim" => self.dim = parse(key, v)?,
            "hidden" => self.hidden = parse(key, v)?,
            "activation" => {
                self.activation = match v {
                    "tanh" => Activation::Tanh,
                    "relu" => Activation::Relu,
                    _ => return Err(bad(key, v)),
                }
            }
            "seed" => self.seed = parse(key, v)?,
            "optimizer" => {
                self.optimizer.kind = match v {
                    "adam" => OptimizerKind::Adam,
                    "sgd" => OptimizerKind::Sgd,
                    _ => return Err(bad(key, v)),
                }
            }
            "lr" => self.optimizer.lr = parse(key, v)?,
            "beta1" => self.optimizer.beta1 = parse(key, v)?,
            "beta2" => self.optimizer.beta2 = parse(key, v)?,
            "adam_eps" => self.optimizer.eps = parse(key, v)?,
            "neg_k" => self.neg_k = parse(key, v)?,
            "num_walks" => self.walk.num_walks = parse(key, v)?,
            "walk_length" => self.walk.walk_length = parse(key, v)?,
            "window" => self.walk.window = parse(key, v)?,
            "p" => self.walk.p = parse(key, v)?,
            "q" => self.walk.q = parse(key, v)?,
            "margin" => self.margin = parse(key, v)?,
            "norm" => {
                self.norm = match v {
                    "l1" | "L1" => Norm::L1,
                    "l2" | "L2" => Norm::L2,
                    _ => return Err(bad(key, v)),
                }
            }
            "negate_fake_term" => self.negate_fake_term = parse(key, v)?,
            "threads" => self.threads = parse(key, v)?,
            _ => return Err(AgeError::invalid(format!("unknown configuration key `{key}`"))),
        }
        Ok(())
    }

    /// Canonical `key=value` lines, in [`TrainConfig::KEYS`] order.
    pub fn to_kv(&self) -> Vec<(String, String)> {
        let o = &self.optimizer;
        let vals: Vec<String> = vec![
            self.n_epoch.to_string(),
            self.n_d.to_string(),
            self.n_g.to_string(),
            self.n_s.to_string(),
            self.batch_size.to_string(),
            self.lambda.to_string(),
            self.dim.to_string(),
            self.hidden.to_string(),
            match self.activation {
                Activation::Tanh => "tanh".into(),
                Activation::Relu => "relu".into(),
            },
            self.seed.to_string(),
            match o.kind {
                OptimizerKind::Adam => "adam".into(),
                OptimizerKind::Sgd => "sgd".into(),
            },
            o.lr.to_string(),
            o.beta1.to_string(),
            o.beta2.to_string(),
            o.eps.to_string(),
            self.neg_k.to_string(),
            self.walk.num_walks.to_string(),
            self.walk.walk_length.to_string(),
            self.walk.window.to_string(),
            self.walk.p.to_string(),
            self.walk.q.to_string(),
            self.margin.to_string(),
            match self.norm {
                Norm::L1 => "l1".into(),
                Norm::L2 => "l2".into(),
            },
            self.negate_fake_term.to_string(),
            self.threads.to_string(),
        ];
        Self::KEYS.iter().map(|k| k.to_string()).zip(vals).collect()
    }
}

fn parse<T: FromStr>(key: &str, v: &str) -> Result<T>
where
    T::Err: fmt::Display,
{
    v.parse().map_err(|e: T::Err| AgeError::invalid(format!("{key}: cannot parse `{v}`: {e}")))
}

fn bad(key: &str, v: &str) -> AgeError {
    AgeError::invalid(format!("{key}: unsupported value `{v}`"))
}
