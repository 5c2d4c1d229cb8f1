use serde::{Deserialize, Serialize};

use super::{Rect, Vec3};
use crate::error::{ensure_positive, Error, Result};

/// One transmitter of the array: where it sits on the AP, which cell it
/// serves and the unit vector it points along.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BeamSite {
    pub p_tx: Vec3,
    pub p_cell: Vec3,
    pub n_tx: Vec3,
}

/// Square `n_side × n_side` array of beams, each aimed at the centre of its
/// own square cell on the UE plane.
///
/// Beams are indexed row-major starting at zero: index `row * n_side + col`,
/// with `col` increasing along +x and `row` along +y. Cell "k" in a 1-based
/// drawing of a 3×3 array is therefore index `k - 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeamArrayLayout {
    pub n_side: usize,
    /// Cell side length (m).
    pub d_cell: f64,
    /// Transmitter pitch on the AP (m).
    pub d_beam: f64,
    pub ap_center: Vec3,
    /// Height of the UE plane above the floor (m).
    pub ue_plane_height: f64,
    pub beams: Vec<BeamSite>,
}

/// Geometry of one transmitter–receiver pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkAngles {
    /// Distance (m).
    pub d: f64,
    /// Radiance angle at the transmitter (rad).
    pub phi: f64,
    /// Incidence angle at the receiver (rad).
    pub psi: f64,
}

/// Builds the grid array. The AP hangs at `(0, 0, ap_height)`.
pub fn build_grid_array(
    n_side: usize,
    d_cell: f64,
    ap_height: f64,
    ue_height: f64,
    d_beam: f64,
) -> Result<BeamArrayLayout> {
    if n_side == 0 {
        return Err(Error::invalid("n_side", "must be at least 1"));
    }
    ensure_positive("d_cell", d_cell)?;
    ensure_positive("d_beam", d_beam)?;
    ensure_positive("ap_height", ap_height)?;
    if !ue_height.is_finite() || ue_height < 0.0 {
        return Err(Error::invalid("ue_height", "must be non-negative and finite"));
    }
    if ap_height <= ue_height {
        return Err(Error::invalid("ap_height", "must be above the UE plane"));
    }

    let ap_center = Vec3::new(0.0, 0.0, ap_height);
    let half = (n_side as f64 - 1.0) / 2.0;
    let mut beams = Vec::with_capacity(n_side * n_side);
    for row in 0..n_side {
        for col in 0..n_side {
            let u = col as f64 - half;
            let v = row as f64 - half;
            let p_tx = Vec3::new(u * d_beam, v * d_beam, ap_height);
            let p_cell = Vec3::new(u * d_cell, v * d_cell, ue_height);
            let n_tx = (p_cell - p_tx)
                .normalized()
                .ok_or(Error::DegenerateGeometry("transmitter coincides with its cell"))?;
            beams.push(BeamSite { p_tx, p_cell, n_tx });
        }
    }

    Ok(BeamArrayLayout {
        n_side,
        d_cell,
        d_beam,
        ap_center,
        ue_plane_height: ue_height,
        beams,
    })
}

impl BeamArrayLayout {
    pub fn len(&self) -> usize {
        self.beams.len()
    }

    pub fn is_empty(&self) -> bool {
        self.beams.is_empty()
    }

    /// Vertical AP-to-UE-plane distance `h` (m).
    pub fn vertical_distance(&self) -> f64 {
        self.ap_center.z - self.ue_plane_height
    }

    /// Rectangle covered by all cells on the UE plane.
    pub fn footprint(&self) -> Rect {
        let half = self.n_side as f64 * self.d_cell / 2.0;
        Rect::new(-half, half, -half, half)
    }

    /// Cell index containing the planar point, if it lies on the array footprint.
    pub fn cell_of(&self, x: f64, y: f64) -> Option<usize> {
        let side = self.n_side as f64 * self.d_cell;
        let col = ((x + side / 2.0) / self.d_cell).floor();
        let row = ((y + side / 2.0) / self.d_cell).floor();
        let n = self.n_side as f64;
        if (0.0..n).contains(&col) && (0.0..n).contains(&row) {
            Some(row as usize * self.n_side + col as usize)
        } else {
            None
        }
    }

    /// Beam whose cell centre is closest to the point under the AP.
    pub fn central_beam(&self) -> usize {
        let below = Vec3::new(self.ap_center.x, self.ap_center.y, self.ue_plane_height);
        self.beams
            .iter()
            .enumerate()
            .min_by(|(_, a), (_, b)| {
                a.p_cell
                    .planar_distance(below)
                    .total_cmp(&b.p_cell.planar_distance(below))
            })
            .map(|(i, _)| i)
            .unwrap_or(0)
    }

    /// Checks the CCR spacing rule `d_beam >= l_ccr + d_rxap`.
    pub fn check_ccr_spacing(&self, l_ccr: f64, d_rxap: f64) -> Result<()> {
        if self.d_beam + 1e-12 < l_ccr + d_rxap {
            return Err(Error::invalid(
                "d_beam",
                format!(
                    "{} m is below l_ccr + d_rxap = {} m; retroreflected spots would overlap",
                    self.d_beam,
                    l_ccr + d_rxap
                ),
            ));
        }
        Ok(())
    }
}

/// Distance, radiance angle and incidence angle between a transmitter at
/// `p_tx` aimed along `n_tx` and a receiver at `p_ue` facing `n_ue`.
pub fn angles(p_tx: Vec3, n_tx: Vec3, p_ue: Vec3, n_ue: Vec3) -> Result<LinkAngles> {
    let v = p_ue - p_tx;
    let d = v.norm();
    if !(d > 0.0) {
        return Err(Error::DegenerateGeometry("transmitter and receiver coincide"));
    }
    let dir = v * (1.0 / d);
    let phi = n_tx.dot(dir).clamp(-1.0, 1.0).acos();
    let psi = n_ue.dot(-dir).clamp(-1.0, 1.0).acos();
    Ok(LinkAngles { d, phi, psi })
}
