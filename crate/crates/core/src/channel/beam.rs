use std::f64::consts::PI;

use crate::error::{ensure_non_negative, ensure_positive, Result};
use crate::geometry::{angles, BeamArrayLayout, LinkAngles, Vec3};

/// One VCSEL beam. `theta_beam` and `w0` are derived from the wavelength
/// and FWHM angle by [`BeamParams::new`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeamParams {
    /// m
    pub wavelength: f64,
    /// rad
    pub theta_fwhm: f64,
    /// 1/e² divergence half-angle (rad).
    pub theta_beam: f64,
    /// Waist radius (m).
    pub w0: f64,
    /// Optical transmit power (W).
    pub p_tx_opt: f64,
}

impl BeamParams {
    pub fn new(wavelength: f64, theta_fwhm: f64, p_tx_opt: f64) -> Result<Self> {
        ensure_positive("wavelength", wavelength)?;
        ensure_positive("theta_fwhm", theta_fwhm)?;
        ensure_non_negative("p_tx_opt", p_tx_opt)?;
        let theta_beam = theta_fwhm / (2.0 * 2f64.ln()).sqrt();
        let w0 = wavelength / (PI * theta_beam);
        Ok(BeamParams {
            wavelength,
            theta_fwhm,
            theta_beam,
            w0,
            p_tx_opt,
        })
    }

    pub fn from_degrees(wavelength_nm: f64, theta_fwhm_deg: f64, p_tx_opt: f64) -> Result<Self> {
        Self::new(wavelength_nm * 1e-9, theta_fwhm_deg.to_radians(), p_tx_opt)
    }

    pub fn with_power(mut self, p_tx_opt: f64) -> Self {
        self.p_tx_opt = p_tx_opt;
        self
    }

    /// Rayleigh range (m).
    pub fn rayleigh_range(&self) -> f64 {
        PI * self.w0 * self.w0 / self.wavelength
    }
}

/// 1/e² beam radius at distance `z` from the waist.
pub fn beam_width(beam: &BeamParams, z: f64) -> f64 {
    let zr = beam.rayleigh_range();
    beam.w0 * (1.0 + (z / zr).powi(2)).sqrt()
}

/// Irradiance (W/m²) at distance `d` and angle `phi` off the beam axis.
/// Zero at or behind the waist plane.
pub fn gaussian_intensity(beam: &BeamParams, d: f64, phi: f64) -> f64 {
    if phi >= PI / 2.0 || !(d > 0.0) {
        return 0.0;
    }
    let (s, c) = phi.sin_cos();
    let w = beam_width(beam, d * c);
    let rho = d * s;
    2.0 * beam.p_tx_opt / (PI * w * w) * (-2.0 * rho * rho / (w * w)).exp()
}

/// Receiver front end on the UE: collecting area, APD gain and field of view.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RxAperture {
    /// m²
    pub a_eff: f64,
    pub g_apd: f64,
    /// FOV half-angle (rad).
    pub psi_c: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DownlinkPower {
    /// Optical power on the detector before avalanche gain (W).
    pub p_opt_pre_gain: f64,
    /// The same after gain (W).
    pub p_rx_ue: f64,
}

pub fn received_power_downlink(
    beam: &BeamParams,
    geom: &LinkAngles,
    rx: &RxAperture,
) -> DownlinkPower {
    if geom.psi > rx.psi_c {
        return DownlinkPower::default();
    }
    let p = gaussian_intensity(beam, geom.d, geom.phi) * rx.a_eff * geom.psi.cos();
    DownlinkPower {
        p_opt_pre_gain: p,
        p_rx_ue: p * rx.g_apd,
    }
}

/// Pre-gain optical power from every beam of the array at one UE.
pub fn downlink_powers(
    layout: &BeamArrayLayout,
    beam: &BeamParams,
    p_ue: Vec3,
    n_ue: Vec3,
    rx: &RxAperture,
) -> Vec<f64> {
    layout
        .beams
        .iter()
        .map(|site| match angles(site.p_tx, site.n_tx, p_ue, n_ue) {
            Ok(g) => received_power_downlink(beam, &g, rx).p_opt_pre_gain,
            Err(_) => 0.0,
        })
        .collect()
}
