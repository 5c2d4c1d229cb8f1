//! Closed-form statistics of the central beam and the rate bounds built on
//! them. These serve as the reference the Monte-Carlo runner is checked
//! against.
//!
//! For a UE at horizontal distance `r` from the centre of the vertically
//! pointing beam, the SNR is
//!
//! ```text
//! γ(r) = γ0 / (h² + r²) · exp(−4 r² / W²(h))
//! ```
//!
//! with `r` distributed as `2r/R²` on the equal-area disk `R = d_cell/√π`.

use std::f64::consts::{LN_10, LN_2, PI};

use crate::channel::{beam_width, BeamParams};
use crate::error::{ensure_positive, Error, Result};
use crate::link::{data_rate, OfdmParams, Receiver};

/// Principal branch of the Lambert W function, `w·e^w = x` with `w ≥ −1`.
///
/// Halley iteration from a branch-point series near `−1/e`, `ln(1+x)` for
/// moderate `x` and `ln x − ln ln x` for large `x`.
pub fn lambert_w0(x: f64) -> Result<f64> {
    const BRANCH: f64 = -1.0 / std::f64::consts::E;
    if x.is_nan() || x < BRANCH {
        return Err(Error::OutOfRange {
            quantity: "Lambert W argument",
            value: x,
            range: "[-1/e, inf)".into(),
        });
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    if x == BRANCH {
        return Ok(-1.0);
    }
    if x.is_infinite() {
        return Ok(f64::INFINITY);
    }
    let mut w = if x < -0.25 {
        let p = (2.0 * (std::f64::consts::E * x + 1.0)).max(0.0).sqrt();
        -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p * p * p
    } else if x < 3.0 {
        0.8 * x.ln_1p()
    } else {
        let l = x.ln();
        l - l.ln()
    };
    for _ in 0..50 {
        let ew = w.exp();
        let f = w * ew - x;
        let wp1 = w + 1.0;
        if wp1 == 0.0 {
            break;
        }
        let denom = ew * wp1 - (w + 2.0) * f / (2.0 * wp1);
        let step = f / denom;
        let next = (w - step).max(-1.0);
        if (next - w).abs() <= 4.0 * f64::EPSILON * next.abs().max(1e-300) {
            w = next;
            break;
        }
        w = next;
    }
    Ok(w)
}

/// Parameters of the central-beam SNR law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CentralBeamParams {
    /// Vertical Tx–UE distance (m).
    pub h: f64,
    /// Equal-area disk radius (m).
    pub r_max: f64,
    /// Beam radius at the UE plane (m).
    pub w_h: f64,
    /// SNR numerator (m²).
    pub gamma0: f64,
}

impl CentralBeamParams {
    pub fn new(h: f64, d_cell: f64, w_h: f64, gamma0: f64) -> Result<Self> {
        ensure_positive("h", h)?;
        ensure_positive("d_cell", d_cell)?;
        ensure_positive("w_h", w_h)?;
        ensure_positive("gamma0", gamma0)?;
        Ok(CentralBeamParams {
            h,
            r_max: (d_cell * d_cell / PI).sqrt(),
            w_h,
            gamma0,
        })
    }

    /// Builds the law from link parameters. The receiver must use a fixed
    /// noise power; the closed forms assume σ_n does not vary with `r`.
    pub fn from_link(beam: &BeamParams, h: f64, d_cell: f64, rx: &Receiver) -> Result<Self> {
        let sigma2 = rx.sigma2.ok_or_else(|| {
            Error::invalid("noise_floor", "closed forms need a fixed noise power, not signal_dependent")
        })?;
        let w_h = beam_width(beam, h);
        let l = &rx.ledger;
        let m = rx.ofdm.m_sub as f64;
        let num = 2.0 * l.r_apd * beam.p_tx_opt * l.a_eff * l.g_apd * h;
        let den = PI * w_h * w_h * (m - 2.0).sqrt() * rx.ofdm.kappa * sigma2.sqrt();
        Self::new(h, d_cell, w_h, (num / den).powi(2))
    }

    pub fn snr(&self, r: f64) -> f64 {
        self.gamma0 / (self.h * self.h + r * r) * (-4.0 * r * r / (self.w_h * self.w_h)).exp()
    }

    /// Support of the SNR in dB, `[γ_db(R), γ_db(0)]`.
    pub fn support_db(&self) -> (f64, f64) {
        (snr_db_central(self, self.r_max), snr_db_central(self, 0.0))
    }
}

/// Central-beam SNR in dB at horizontal offset `r`.
pub fn snr_db_central(cb: &CentralBeamParams, r: f64) -> f64 {
    10.0 * (cb.gamma0 / (cb.h * cb.h + r * r)).log10()
        - 40.0 * r * r / (cb.w_h * cb.w_h * LN_10)
}

/// Offset `r0` at which the SNR equals `gamma_db`.
///
/// Inverting the SNR law gives `r0² = (W²·W0(4γ0·e^{4h²/W²}/(W²·γ)) − 4h²)/4`,
/// whose argument overflows for narrow beams (`4h²/W² > 700`). With
/// `δ = 4r0²/W²` and `c = 4h²/W²` the same root solves
/// `δ + ln(1 + δ/c) = (γ_db(0) − γ) ln10/10`, which is solved here by Newton
/// iteration without forming the exponential.
pub fn r0(cb: &CentralBeamParams, gamma_db: f64) -> f64 {
    let k = (snr_db_central(cb, 0.0) - gamma_db) * LN_10 / 10.0;
    if k <= 0.0 {
        return 0.0;
    }
    let c = 4.0 * cb.h * cb.h / (cb.w_h * cb.w_h);
    let mut d = k;
    for _ in 0..100 {
        let g = d + (d / c).ln_1p() - k;
        let step = g / (1.0 + 1.0 / (c + d));
        d -= step;
        if step.abs() <= 1e-16 * d.abs() {
            break;
        }
    }
    cb.w_h * (d.max(0.0)).sqrt() / 2.0
}

/// `r0` straight from the Lambert W expression, or `None` when its
/// argument is not representable.
pub fn r0_lambert(cb: &CentralBeamParams, gamma_db: f64) -> Option<f64> {
    let w2 = cb.w_h * cb.w_h;
    let expo = 4.0 * cb.h * cb.h / w2 - gamma_db * LN_10 / 10.0;
    let arg = 4.0 * cb.gamma0 * expo.exp() / w2;
    if !arg.is_finite() {
        return None;
    }
    let w = lambert_w0(arg).ok()?;
    Some(((w2 * w - 4.0 * cb.h * cb.h).max(0.0)).sqrt() / 2.0)
}

fn in_support(cb: &CentralBeamParams, gamma_db: f64) -> bool {
    let (lo, hi) = cb.support_db();
    gamma_db >= lo && gamma_db <= hi
}

/// Density of the SNR in dB (per dB).
pub fn snr_pdf_exact(cb: &CentralBeamParams, gamma_db: f64) -> f64 {
    if !in_support(cb, gamma_db) {
        return 0.0;
    }
    let r = r0(cb, gamma_db);
    let (h2, w2, r2) = (cb.h * cb.h, cb.w_h * cb.w_h, r * r);
    LN_10 * (h2 + r2) * w2 / (10.0 * cb.r_max * cb.r_max * (4.0 * h2 + 4.0 * r2 + w2))
}

/// Uniform approximation of [`snr_pdf_exact`], dropping the `r0²` terms.
pub fn snr_pdf_uniform(cb: &CentralBeamParams, gamma_db: f64) -> f64 {
    if !in_support(cb, gamma_db) {
        return 0.0;
    }
    let (h2, w2) = (cb.h * cb.h, cb.w_h * cb.w_h);
    LN_10 * h2 * w2 / (10.0 * cb.r_max * cb.r_max * (4.0 * h2 + w2))
}

/// `P(γ_db ≤ gamma_db) = 1 − r0²/R²`.
pub fn snr_cdf_exact(cb: &CentralBeamParams, gamma_db: f64) -> f64 {
    let (lo, hi) = cb.support_db();
    if gamma_db < lo {
        0.0
    } else if gamma_db >= hi {
        1.0
    } else {
        let r = r0(cb, gamma_db);
        (1.0 - r * r / (cb.r_max * cb.r_max)).clamp(0.0, 1.0)
    }
}

pub fn snr_cdf_uniform(cb: &CentralBeamParams, gamma_db: f64) -> f64 {
    let (lo, hi) = cb.support_db();
    ((gamma_db - lo) / (hi - lo)).clamp(0.0, 1.0)
}

/// SNR below which the `log(1+x) ≈ log x` step of the closed form is
/// considered unreliable (dB).
pub const HIGH_SNR_GUARD_DB: f64 = 15.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AvgRate {
    /// bit/s
    pub rate: f64,
    /// True when the SNR at the disk edge is below [`HIGH_SNR_GUARD_DB`].
    pub low_snr: bool,
}

/// Closed-form average rate of the central beam over its disk.
pub fn avg_rate_central(cb: &CentralBeamParams, ofdm: &OfdmParams, b_l: f64) -> AvgRate {
    let m = ofdm.m_sub as f64;
    let (h2, r2, w2, g0) = (cb.h * cb.h, cb.r_max * cb.r_max, cb.w_h * cb.w_h, cb.gamma0);
    let bracket =
        (h2 + r2) * (g0 / (h2 + r2)).ln() + r2 - h2 * (g0 / h2).ln() - 2.0 * r2 * r2 / w2;
    AvgRate {
        rate: (m - 2.0) / (2.0 * LN_2 * m * r2) * b_l * bracket,
        low_snr: snr_db_central(cb, cb.r_max) < HIGH_SNR_GUARD_DB,
    }
}

/// Disk average of the exact Shannon rate by composite Gauss–Legendre
/// quadrature in `r`.
pub fn avg_rate_central_quadrature(cb: &CentralBeamParams, ofdm: &OfdmParams, b_l: f64) -> f64 {
    const NODES: [(f64, f64); 5] = [
        (0.0, 0.568_888_888_888_888_9),
        (-0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
        (0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
        (-0.906_179_845_938_664, 0.236_926_885_056_189_1),
        (0.906_179_845_938_664, 0.236_926_885_056_189_1),
    ];
    let panels = 200;
    let width = cb.r_max / panels as f64;
    let mut total = 0.0;
    for k in 0..panels {
        let mid = (k as f64 + 0.5) * width;
        let mut s = 0.0;
        for (x, wt) in NODES {
            let r = mid + 0.5 * width * x;
            s += wt * data_rate(ofdm, b_l, cb.snr(r)) * 2.0 * r;
        }
        total += s * 0.5 * width;
    }
    total / (cb.r_max * cb.r_max)
}

/// The central beam's average rate bounds the average over all beams.
pub fn single_user_upper_bound(per_beam_rates: &[f64], central: usize) -> Result<f64> {
    per_beam_rates
        .get(central)
        .copied()
        .ok_or_else(|| Error::invalid("central", "index outside the per-beam rate list"))
}

/// Expected number of occupied beams when `n_ue` users each land in one of
/// `n_beam` equally likely beams.
pub fn avg_active_beams(n_beam: usize, n_ue: usize) -> f64 {
    let n = n_beam as f64;
    if n_beam == 1 {
        return if n_ue == 0 { 0.0 } else { 1.0 };
    }
    n - n * (1.0 - 1.0 / n).powi(n_ue as i32)
}

/// `N̄_a · ζ̄¹` with the closed-form central-beam rate.
pub fn multi_user_upper_bound(
    cb: &CentralBeamParams,
    ofdm: &OfdmParams,
    b_l: f64,
    n_beam: usize,
    n_ue: usize,
) -> f64 {
    avg_active_beams(n_beam, n_ue) * avg_rate_central(cb, ofdm, b_l).rate
}
