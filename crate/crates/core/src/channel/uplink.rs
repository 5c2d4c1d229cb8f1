use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::geometry::Vec3;

/// Omnidirectional uplink transmitter on the UE and the matching receive
/// optics on the ceiling photodiodes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdtxParams {
    /// Lambertian order of each LED.
    pub lambertian_order: f64,
    /// W per LED
    pub p_tx_od: f64,
    /// PD area (m²).
    pub a_od: f64,
    /// Concentrator refractive index.
    pub n_ref: f64,
    /// PD field of view (rad).
    pub psi_fov: f64,
}

impl Default for OdtxParams {
    fn default() -> Self {
        OdtxParams {
            lambertian_order: 2.0,
            p_tx_od: 0.01,
            a_od: 1e-4,
            n_ref: 1.5,
            psi_fov: 60f64.to_radians(),
        }
    }
}

impl OdtxParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambertian_order >= 1.0) {
            return Err(Error::invalid("odtx.lambertian_order", "must be >= 1"));
        }
        crate::error::ensure_positive("odtx.p_tx_od", self.p_tx_od)?;
        crate::error::ensure_positive("odtx.a_od", self.a_od)?;
        crate::error::ensure_positive("odtx.n_ref", self.n_ref)?;
        if !(self.psi_fov > 0.0 && self.psi_fov <= PI / 2.0) {
            return Err(Error::invalid("odtx.psi_fov", "must be in (0, 90] degrees"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CeilingPd {
    pub position: Vec3,
    pub normal: Vec3,
}

/// Five ceiling PDs around `ap_center`: one facing down at the centre and
/// four at `offset` along ±x and ±y, each tilted outward by `tilt`.
pub fn default_pd_constellation(ap_center: Vec3, offset: f64, tilt: f64) -> [CeilingPd; 5] {
    let (s, c) = tilt.sin_cos();
    let pd = |dx: f64, dy: f64| CeilingPd {
        position: ap_center + Vec3::new(dx * offset, dy * offset, 0.0),
        normal: Vec3::new(dx * s, dy * s, -c),
    };
    [
        CeilingPd {
            position: ap_center,
            normal: Vec3::DOWN,
        },
        pd(1.0, 0.0),
        pd(-1.0, 0.0),
        pd(0.0, 1.0),
        pd(0.0, -1.0),
    ]
}

/// Distance and incidence cosine at the PD, or `None` outside its FOV.
fn pd_geometry(odtx: &OdtxParams, ue_pos: Vec3, pd: &CeilingPd) -> Option<(f64, f64, Vec3)> {
    let v = ue_pos - pd.position;
    let d = v.norm();
    if !(d > 0.0) {
        return None;
    }
    let dir = v * (1.0 / d);
    let cos_psi = pd.normal.dot(dir);
    if cos_psi < odtx.psi_fov.cos() {
        return None;
    }
    Some((d, cos_psi, dir))
}

fn odtx_power(odtx: &OdtxParams, d: f64, cos_psi: f64) -> f64 {
    let m = odtx.lambertian_order;
    (m + 1.0) * odtx.p_tx_od * odtx.a_od * odtx.n_ref.powi(2) * cos_psi
        / (2.0 * PI * d * d * odtx.psi_fov.sin().powi(2))
}

/// Optical power (W) at a ceiling PD from the UE's omnidirectional
/// transmitter. Does not depend on how the UE is rotated.
pub fn received_power_uplink(odtx: &OdtxParams, ue_pos: Vec3, pd: &CeilingPd) -> f64 {
    match pd_geometry(odtx, ue_pos, pd) {
        Some((d, cos_psi, _)) => odtx_power(odtx, d, cos_psi),
        None => 0.0,
    }
}

/// Same link with a single Lambertian LED facing along `ue_normal`, so the
/// result picks up the radiance factor `cos^m(phi)`.
pub fn received_power_uplink_single_led(
    odtx: &OdtxParams,
    ue_pos: Vec3,
    ue_normal: Vec3,
    pd: &CeilingPd,
) -> f64 {
    match pd_geometry(odtx, ue_pos, pd) {
        Some((d, cos_psi, dir)) => {
            let cos_phi = ue_normal.dot(-dir);
            if cos_phi <= 0.0 {
                0.0
            } else {
                odtx_power(odtx, d, cos_psi) * cos_phi.powf(odtx.lambertian_order)
            }
        }
        None => 0.0,
    }
}
