use serde::{Deserialize, Serialize};

use crate::error::{ensure_positive, Result};

/// Durations of one CCR activation round.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TimingParams {
    /// Test signal (s).
    pub t_ts: f64,
    /// Reflected signal (s).
    pub t_rs: f64,
    /// Mean propagation delay (s).
    pub t_delta: f64,
    /// Short inter-frame space (s).
    pub t_sifs: f64,
    /// Data frame length (bits).
    pub l_data: f64,
}

impl Default for TimingParams {
    fn default() -> Self {
        TimingParams {
            t_ts: 0.3e-6,
            t_rs: 0.3e-6,
            t_delta: 3e-9,
            t_sifs: 2e-6,
            l_data: 65536.0 * 8.0,
        }
    }
}

impl TimingParams {
    pub fn validate(&self) -> Result<()> {
        ensure_positive("timing.t_ts", self.t_ts)?;
        ensure_positive("timing.t_rs", self.t_rs)?;
        ensure_positive("timing.t_delta", self.t_delta)?;
        ensure_positive("timing.t_sifs", self.t_sifs)?;
        ensure_positive("timing.l_data", self.l_data)
    }

    /// Signalling overhead per frame. SIFS appears twice: once after the
    /// reflected signal and once after the data frame.
    pub fn t_delay(&self) -> f64 {
        self.t_ts + self.t_delta + self.t_rs + 2.0 * self.t_sifs
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Throughput {
    pub t_data: f64,
    pub t_delay: f64,
    pub t_tot: f64,
    /// bit/s
    pub throughput: f64,
}

impl Throughput {
    pub fn factor(&self) -> f64 {
        self.t_data / self.t_tot
    }
}

pub fn effective_throughput(timing: &TimingParams, zeta_down: f64) -> Result<Throughput> {
    ensure_positive("zeta_down", zeta_down)?;
    let t_data = timing.l_data / zeta_down;
    let t_delay = timing.t_delay();
    let t_tot = t_data + t_delay;
    Ok(Throughput {
        t_data,
        t_delay,
        t_tot,
        throughput: zeta_down * t_data / t_tot,
    })
}
