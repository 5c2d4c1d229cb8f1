use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::channel::{downlink_powers, BeamParams, RxAperture};
use crate::error::{Error, Result};
use crate::geometry::{BeamArrayLayout, Vec3};

/// Power ratio under which two RxAP readings count as "similar".
pub const SIMILAR_POWER_DB: f64 = 3.0;

/// Index of the strongest entry; the lowest index wins ties. `None` when
/// nothing is received at all.
pub fn select_beam_sss(powers: &[f64]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, &p) in powers.iter().enumerate() {
        if p > 0.0 && best.is_none_or(|(_, b)| p > b) {
            best = Some((i, p));
        }
    }
    best.map(|(i, _)| i)
}

/// Same rule applied to the RxAP power matrix.
pub fn select_beam_ccr(matrix: &[f64]) -> Option<usize> {
    select_beam_sss(matrix)
}

pub fn similar_within_db(a: f64, b: f64, tol_db: f64) -> bool {
    a > 0.0 && b > 0.0 && (10.0 * (a / b).log10()).abs() <= tol_db
}

/// SSS beam for a face-up receiver at `p`.
pub fn sss_at(layout: &BeamArrayLayout, beam: &BeamParams, rx: &RxAperture, p: Vec3) -> Option<usize> {
    select_beam_sss(&downlink_powers(layout, beam, p, Vec3::UP, rx))
}

/// How the AP learns where a user is.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "scheme", rename_all = "snake_case", deny_unknown_fields)]
pub enum BenchmarkScheme {
    /// Retroreflector power matrix; no staleness.
    Ccr,
    /// Omnidirectional uplink with classifier latency (s).
    Odtx { delay: f64 },
    /// Image-sensor positioning with latency (s) and position error (m).
    Isvlp { delay: f64, pos_error_std: f64 },
}

impl BenchmarkScheme {
    pub fn delay(&self) -> f64 {
        match *self {
            BenchmarkScheme::Ccr => 0.0,
            BenchmarkScheme::Odtx { delay } | BenchmarkScheme::Isvlp { delay, .. } => delay,
        }
    }

    pub fn label(&self) -> String {
        // 0.0397 * 1e3 prints as 39.699999999999996 otherwise
        let milli = |v: f64| (v * 1e9).round() / 1e6;
        match *self {
            BenchmarkScheme::Ccr => "ccr".into(),
            BenchmarkScheme::Odtx { delay } => format!("odtx_{}ms", milli(delay)),
            BenchmarkScheme::Isvlp {
                delay,
                pos_error_std,
            } => format!("isvlp_{}ms_{}mm", milli(delay), milli(pos_error_std)),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            BenchmarkScheme::Ccr => Ok(()),
            BenchmarkScheme::Odtx { delay } => {
                if delay.is_finite() && delay >= 0.0 {
                    Ok(())
                } else {
                    Err(Error::invalid("scheme.delay", "must be >= 0"))
                }
            }
            BenchmarkScheme::Isvlp {
                delay,
                pos_error_std,
            } => {
                if !(delay.is_finite() && delay >= 0.0) {
                    return Err(Error::invalid("scheme.delay", "must be >= 0"));
                }
                if !(pos_error_std.is_finite() && pos_error_std >= 0.0) {
                    return Err(Error::invalid("scheme.pos_error_std", "must be >= 0"));
                }
                Ok(())
            }
        }
    }
}

/// Beam a scheme activates at time `t`.
///
/// The CCR sees the present position. ODTx acts on the position `delay`
/// seconds ago. IS-VLP does too, with a 2-D Gaussian error of per-axis
/// standard deviation `pos_error_std/√2`.
pub fn benchmark_select<F, R>(
    scheme: &BenchmarkScheme,
    true_position_at: F,
    t: f64,
    layout: &BeamArrayLayout,
    beam: &BeamParams,
    rx: &RxAperture,
    rng: &mut R,
) -> Option<usize>
where
    F: Fn(f64) -> Vec3,
    R: Rng + ?Sized,
{
    let seen = true_position_at(t - scheme.delay());
    let seen = match *scheme {
        BenchmarkScheme::Isvlp { pos_error_std, .. } if pos_error_std > 0.0 => {
            let n = Normal::new(0.0, pos_error_std / std::f64::consts::SQRT_2)
                .expect("validated non-negative");
            Vec3::new(seen.x + n.sample(rng), seen.y + n.sample(rng), seen.z)
        }
        _ => seen,
    };
    sss_at(layout, beam, rx, seen)
}
