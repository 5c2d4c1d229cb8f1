use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::Vec3;

/// Statistical model of the receiver normal. Elevation is measured from the
/// vertical: 0° is facing straight up.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case", deny_unknown_fields)]
pub enum OrientationModel {
    /// Receiver always faces straight up.
    #[default]
    Fixed,
    /// Gaussian elevation (sitting posture); out-of-range draws are rejected.
    M1 { mean_elev_deg: f64, std_elev_deg: f64 },
    /// Elevation uniform on `[0, max_elev]`.
    M2 { max_elev_deg: f64 },
}

impl OrientationModel {
    pub fn m1_default() -> Self {
        OrientationModel::M1 {
            mean_elev_deg: 41.0,
            std_elev_deg: 7.7,
        }
    }

    pub fn m2_default() -> Self {
        OrientationModel::M2 { max_elev_deg: 45.0 }
    }

    pub fn label(&self) -> &'static str {
        match self {
            OrientationModel::Fixed => "fixed",
            OrientationModel::M1 { .. } => "m1",
            OrientationModel::M2 { .. } => "m2",
        }
    }

    pub fn validate(&self) -> crate::Result<()> {
        use crate::Error;
        match *self {
            OrientationModel::Fixed => Ok(()),
            OrientationModel::M1 {
                mean_elev_deg,
                std_elev_deg,
            } => {
                if !(std_elev_deg.is_finite() && std_elev_deg >= 0.0) {
                    return Err(Error::invalid("orientation.std_elev_deg", "must be >= 0"));
                }
                // rejection sampling needs a reasonable acceptance rate
                if !(mean_elev_deg.is_finite()
                    && mean_elev_deg + 3.0 * std_elev_deg > 0.0
                    && mean_elev_deg - 3.0 * std_elev_deg < 90.0)
                {
                    return Err(Error::invalid(
                        "orientation.mean_elev_deg",
                        "distribution has almost no mass in [0, 90) degrees",
                    ));
                }
                if std_elev_deg == 0.0 && !(0.0..90.0).contains(&mean_elev_deg) {
                    return Err(Error::invalid("orientation.mean_elev_deg", "must be in [0, 90)"));
                }
                Ok(())
            }
            OrientationModel::M2 { max_elev_deg } => {
                if (0.0..90.0).contains(&max_elev_deg) {
                    Ok(())
                } else {
                    Err(Error::invalid("orientation.max_elev_deg", "must be in [0, 90)"))
                }
            }
        }
    }
}

/// Draws a unit receiver normal.
pub fn sample_orientation<R: Rng + ?Sized>(model: &OrientationModel, rng: &mut R) -> Vec3 {
    let elevation = match *model {
        OrientationModel::Fixed => return Vec3::UP,
        OrientationModel::M1 {
            mean_elev_deg,
            std_elev_deg,
        } => {
            if std_elev_deg == 0.0 {
                mean_elev_deg
            } else {
                let normal = Normal::new(mean_elev_deg, std_elev_deg)
                    .expect("std validated non-negative");
                loop {
                    let e = normal.sample(rng);
                    if (0.0..90.0).contains(&e) {
                        break e;
                    }
                }
            }
        }
        OrientationModel::M2 { max_elev_deg } => rng.random::<f64>() * max_elev_deg,
    };
    let azimuth = rng.random::<f64>() * std::f64::consts::TAU;
    let (se, ce) = elevation.to_radians().sin_cos();
    let (sa, ca) = azimuth.sin_cos();
    Vec3::new(se * ca, se * sa, ce)
}

/// Elevation of a unit normal from the vertical, in degrees.
pub fn elevation_deg(n: Vec3) -> f64 {
    n.z.clamp(-1.0, 1.0).acos().to_degrees()
}
