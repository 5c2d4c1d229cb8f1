//! Maximum permissible exposure for the 850 nm and 1550 nm bands and the
//! largest transmit power that keeps the cornea below it.

use std::f64::consts::PI;

use crate::channel::{beam_width, BeamParams};
use crate::error::{ensure_positive, Error, Result};

/// Most hazardous position in front of the source (m).
pub const Z_MPH: f64 = 0.1;

/// Default exposure time for continuous operation (s).
pub const T_EXP_CONTINUOUS: f64 = 100.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mpe {
    /// W/m²
    pub e_mpe: f64,
    /// Limiting aperture diameter (m).
    pub d_a: f64,
}

/// `C4 = 10^{0.002(λ_nm − 700)}`.
pub fn c4(lambda_nm: f64) -> f64 {
    10f64.powf(0.002 * (lambda_nm - 700.0))
}

pub fn mpe_lookup(wavelength: f64, t_exp: f64) -> Result<Mpe> {
    let nm = wavelength * 1e9;
    let t = t_exp;
    if (nm - 1550.0).abs() < 0.5 {
        if (0.35..10.0).contains(&t) {
            Ok(Mpe {
                e_mpe: 1e4 / t,
                d_a: 1.5e-3 * t.powf(3.0 / 8.0),
            })
        } else if (10.0..=1e3).contains(&t) {
            Ok(Mpe {
                e_mpe: 1000.0,
                d_a: 3.5e-3,
            })
        } else {
            Err(Error::OutOfRange {
                quantity: "t_exp (s) at 1550 nm",
                value: t,
                range: "[0.35, 1000]".into(),
            })
        }
    } else if (nm - 850.0).abs() < 0.5 {
        let c4 = c4(nm);
        let c7 = 1.0;
        if (1e-3..10.0).contains(&t) {
            Ok(Mpe {
                e_mpe: 18.0 * t.powf(0.75) * c4 / t,
                d_a: 7e-3,
            })
        } else if (10.0..=1e3).contains(&t) {
            Ok(Mpe {
                e_mpe: 10.0 * c4 * c7,
                d_a: 7e-3,
            })
        } else {
            Err(Error::OutOfRange {
                quantity: "t_exp (s) at 850 nm",
                value: t,
                range: "[0.001, 1000]".into(),
            })
        }
    } else {
        Err(Error::OutOfRange {
            quantity: "wavelength (nm)",
            value: nm,
            range: "{850, 1550}".into(),
        })
    }
}

/// Irradiance averaged over a pupil of diameter `d_a` centred on the beam
/// at distance `z`.
pub fn exposure_level(beam: &BeamParams, p_tx: f64, z: f64, d_a: f64) -> Result<f64> {
    ensure_positive("z", z)?;
    ensure_positive("d_a", d_a)?;
    let w = beam_width(beam, z);
    let captured = -(-d_a * d_a / (2.0 * w * w)).exp_m1();
    Ok(p_tx / (PI * (d_a / 2.0).powi(2)) * captured)
}

/// Largest transmit power (W) whose exposure at the most hazardous position
/// equals the MPE.
pub fn max_transmit_power(wavelength: f64, theta_fwhm: f64, t_exp: f64) -> Result<f64> {
    let mpe = mpe_lookup(wavelength, t_exp)?;
    let beam = BeamParams::new(wavelength, theta_fwhm, 0.0)?;
    let w = beam_width(&beam, Z_MPH);
    let captured = -(-mpe.d_a * mpe.d_a / (2.0 * w * w)).exp_m1();
    Ok(PI * mpe.d_a * mpe.d_a * mpe.e_mpe / (4.0 * captured))
}
