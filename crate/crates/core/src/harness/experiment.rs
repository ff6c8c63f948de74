use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::analytical::AnalyticalScheme;
use crate::error::{Error, Result};
use crate::model::ChannelConfig;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    Ol,
    Eol,
    Neural,
    /// Analytical time-division stand-in (single-user OL per half block).
    TdOl,
}

impl Scheme {
    pub fn label(self) -> &'static str {
        match self {
            Scheme::Ol => "ol",
            Scheme::Eol => "eol",
            Scheme::Neural => "neural",
            Scheme::TdOl => "td_ol",
        }
    }

    pub fn analytical(self) -> Option<AnalyticalScheme> {
        match self {
            Scheme::Ol => Some(AnalyticalScheme::Ol),
            Scheme::Eol => Some(AnalyticalScheme::Eol),
            Scheme::TdOl => Some(AnalyticalScheme::TdOl),
            Scheme::Neural => None,
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ol" => Ok(Scheme::Ol),
            "eol" => Ok(Scheme::Eol),
            "neural" => Ok(Scheme::Neural),
            "td" | "td_ol" => Ok(Scheme::TdOl),
            other => Err(Error::invalid(format!("unknown scheme `{other}`"))),
        }
    }
}

/// One Monte-Carlo run: scheme, channel, trial budget and seed.
#[derive(Clone, Debug, PartialEq)]
pub struct Experiment {
    pub scheme: Scheme,
    pub config: ChannelConfig,
    /// OL trade-off constant; ignored by the learned codec.
    pub g: f64,
    pub weights: Option<PathBuf>,
    pub trials: u64,
    pub seed: u64,
    /// Worker threads; `None` uses every available core. `GBCF_THREADS` caps both.
    pub workers: Option<usize>,
    /// Stop early once both users have this many block errors.
    /// Runs using it are not covered by the reproducibility guarantee.
    pub min_errors: Option<u64>,
}

impl Experiment {
    pub fn new(scheme: Scheme, config: ChannelConfig, trials: u64, seed: u64) -> Self {
        Self {
            scheme,
            config,
            g: 1.0,
            weights: None,
            trials,
            seed,
            workers: None,
            min_errors: None,
        }
    }

    pub fn with_weights(mut self, path: impl Into<PathBuf>) -> Self {
        self.weights = Some(path.into());
        self
    }

    pub fn with_workers(mut self, workers: usize) -> Self {
        self.workers = Some(workers);
        self
    }

    pub fn with_g(mut self, g: f64) -> Self {
        self.g = g;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::invalid("trials must be at least 1"));
        }
        if self.scheme == Scheme::Neural && self.weights.is_none() {
            return Err(Error::invalid("the neural scheme needs a weights file"));
        }
        if self.workers == Some(0) {
            return Err(Error::invalid("worker count must be at least 1"));
        }
        if self.scheme == Scheme::TdOl && !self.config.blocklength().is_multiple_of(2) {
            return Err(Error::invalid(format!(
                "time division needs an even number of channel uses, got {}",
                self.config.blocklength()
            )));
        }
        Ok(())
    }
}
