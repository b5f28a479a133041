//! Experiment configuration. Every key is optional in the JSON file and falls
//! back to the reference scenario.

use std::path::Path;

use offload_core::channel::{db_to_linear, dbm_to_watts};
use offload_core::{ChannelConfig, ServerConfig};
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub n_tasks: usize,
    pub d_avg_bits: f64,
    pub c_avg_cycles_per_bit: f64,
    pub bandwidth_hz: f64,
    pub g0_db: f64,
    pub theta: f64,
    pub l0_m: f64,
    pub l_m: f64,
    pub n0_dbm_per_hz: f64,
    pub p_max_w: f64,
    pub f_ser_hz: f64,
    /// Energy weight in s/J for single solves.
    pub eta: f64,
    pub seed: u64,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            n_tasks: 20,
            d_avg_bits: 1000.0,
            c_avg_cycles_per_bit: 797.5,
            bandwidth_hz: 1e6,
            g0_db: -40.0,
            theta: 4.0,
            l0_m: 1.0,
            l_m: 100.0,
            n0_dbm_per_hz: -174.0,
            p_max_w: 0.1,
            f_ser_hz: 1e9,
            eta: 10.0,
            seed: 1,
        }
    }
}

impl Config {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self =
            serde_json::from_str(text).map_err(|e| HarnessError::Config(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_tasks == 0 {
            return Err(HarnessError::Config("n_tasks must be at least 1".into()));
        }
        for (name, v) in [
            ("d_avg_bits", self.d_avg_bits),
            ("c_avg_cycles_per_bit", self.c_avg_cycles_per_bit),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(HarnessError::Config(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        if !(self.eta >= 0.0 && self.eta.is_finite()) {
            return Err(HarnessError::Config(format!(
                "eta must be non-negative, got {}",
                self.eta
            )));
        }
        self.channel()?;
        self.server()?;
        Ok(())
    }

    pub fn channel(&self) -> Result<ChannelConfig> {
        ChannelConfig::new(
            self.bandwidth_hz,
            db_to_linear(self.g0_db),
            self.theta,
            self.l0_m,
            self.l_m,
            dbm_to_watts(self.n0_dbm_per_hz),
            self.p_max_w,
        )
        .map_err(|e| HarnessError::Config(format!("channel: {e}")))
    }

    pub fn server(&self) -> Result<ServerConfig> {
        ServerConfig::new(self.f_ser_hz).map_err(|e| HarnessError::Config(format!("server: {e}")))
    }

    pub fn with_f_ser(&self, f_ser_hz: f64) -> Self {
        Self {
            f_ser_hz,
            ..self.clone()
        }
    }
}
