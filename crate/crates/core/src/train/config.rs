use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::layers::ActivationKind;

/// Fixed default seed so that two operators get identical models.
pub const DEFAULT_SEED: u64 = 20_220_901;
pub const DEFAULT_EPOCHS: usize = 20;
pub const DEFAULT_BATCH_SIZE: usize = 20;
pub const GRID_EPOCHS: usize = 5;
pub const DEFAULT_LEARNING_RATE: f64 = 0.001;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptimizerKind {
    Adam,
    Rmsprop,
    Nadam,
    Adagrad,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InitKind {
    Uniform,
    Normal,
}

impl OptimizerKind {
    pub const ALL: [OptimizerKind; 4] = [Self::Adam, Self::Rmsprop, Self::Nadam, Self::Adagrad];

    pub fn name(self) -> &'static str {
        match self {
            Self::Adam => "adam",
            Self::Rmsprop => "rmsprop",
            Self::Nadam => "nadam",
            Self::Adagrad => "adagrad",
        }
    }
}

impl InitKind {
    pub const ALL: [InitKind; 2] = [Self::Uniform, Self::Normal];

    pub fn name(self) -> &'static str {
        match self {
            Self::Uniform => "uniform",
            Self::Normal => "normal",
        }
    }
}

impl std::fmt::Display for OptimizerKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::fmt::Display for InitKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for OptimizerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Parameter(format!("unknown optimizer `{s}`")))
    }
}

impl std::str::FromStr for InitKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Parameter(format!("unknown initializer `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub optimizer: OptimizerKind,
    pub initializer: InitKind,
    pub activation: ActivationKind,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    /// Adam / uniform / relu, 20 epochs of batch 20.
    fn default() -> Self {
        TrainConfig {
            optimizer: OptimizerKind::Adam,
            initializer: InitKind::Uniform,
            activation: ActivationKind::Relu,
            epochs: DEFAULT_EPOCHS,
            batch_size: DEFAULT_BATCH_SIZE,
            learning_rate: DEFAULT_LEARNING_RATE,
            seed: DEFAULT_SEED,
        }
    }
}

impl TrainConfig {
    /// Configuration used for each grid-search probe (5 epochs).
    pub fn grid_probe() -> Self {
        TrainConfig {
            epochs: GRID_EPOCHS,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::Parameter("batch size must be at least 1".into()));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate >= 0.0) {
            return Err(Error::Parameter(format!(
                "learning rate must be finite and non-negative, got {}",
                self.learning_rate
            )));
        }
        Ok(())
    }

    /// `optimizer=adam initializer=uniform activation=relu`
    pub fn summary(&self) -> String {
        format!(
            "optimizer={} initializer={} activation={}",
            self.optimizer, self.initializer, self.activation
        )
    }
}
