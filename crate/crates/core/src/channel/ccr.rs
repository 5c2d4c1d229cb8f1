use std::f64::consts::PI;

use super::beam::{beam_width, gaussian_intensity, BeamParams};
use crate::error::{ensure_positive, Error, Result};
use crate::geometry::{angles, BeamArrayLayout, UeState, Vec3};

/// Corner-cube retroreflector on the UE and the RxAP photodiodes next to
/// each transmitter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CcrParams {
    /// Cube depth (m).
    pub depth: f64,
    /// Refractive index of the cube.
    pub n_re: f64,
    /// Diameter of the retroreflected spot at the AP (m).
    pub l_ccr: f64,
    /// Radius of the circular entrance face (m).
    pub aperture_radius: f64,
    /// Largest incidence angle that is still retroreflected (rad).
    pub acceptance: f64,
    /// RxAP capture diameter (m).
    pub d_rxap: f64,
}

impl Default for CcrParams {
    fn default() -> Self {
        CcrParams {
            depth: 5e-3,
            n_re: 1.5,
            l_ccr: 5e-3,
            aperture_radius: 2.5e-3,
            acceptance: 45f64.to_radians(),
            d_rxap: 5e-3,
        }
    }
}

impl CcrParams {
    pub fn validate(&self) -> Result<()> {
        ensure_positive("ccr.depth", self.depth)?;
        ensure_positive("ccr.l_ccr", self.l_ccr)?;
        ensure_positive("ccr.aperture_radius", self.aperture_radius)?;
        ensure_positive("ccr.d_rxap", self.d_rxap)?;
        if !(self.n_re > 1.0) {
            return Err(Error::invalid("ccr.n_re", "must exceed 1"));
        }
        if self.l_ccr > 2.0 * self.aperture_radius {
            return Err(Error::invalid("ccr.l_ccr", "cannot exceed the aperture diameter"));
        }
        if !(self.acceptance > 0.0 && self.acceptance < PI / 2.0) {
            return Err(Error::invalid("ccr.acceptance", "must be in (0, 90) degrees"));
        }
        Ok(())
    }

    pub fn aperture_area(&self) -> f64 {
        PI * self.aperture_radius * self.aperture_radius
    }

    /// Fraction of the return spot that lands on the RxAP next to the
    /// source transmitter. The spot is centred on the transmitter and the
    /// RxAP sits beside it, its centre half a diameter away.
    pub fn capture_fraction(&self) -> f64 {
        let spot_r = self.l_ccr / 2.0;
        let pd_r = self.d_rxap / 2.0;
        circle_overlap_area(spot_r, pd_r, pd_r) / (PI * spot_r * spot_r)
    }
}

/// Refraction angle inside the cube.
pub fn ccr_refraction(psi: f64, n_re: f64) -> f64 {
    (psi.sin() / n_re).asin()
}

/// Lateral shift between entrance and exit apertures, `2 L tan(phi')`.
pub fn ccr_displacement(ccr: &CcrParams, psi: f64) -> f64 {
    2.0 * ccr.depth * ccr_refraction(psi, ccr.n_re).tan()
}

/// Area shared by two circles of radii `r1`, `r2` whose centres are `d` apart.
pub fn circle_overlap_area(r1: f64, r2: f64, d: f64) -> f64 {
    if d >= r1 + r2 {
        return 0.0;
    }
    if d <= (r1 - r2).abs() {
        let r = r1.min(r2);
        return PI * r * r;
    }
    let a1 = ((d * d + r1 * r1 - r2 * r2) / (2.0 * d * r1)).clamp(-1.0, 1.0).acos();
    let a2 = ((d * d + r2 * r2 - r1 * r1) / (2.0 * d * r2)).clamp(-1.0, 1.0).acos();
    let k = ((-d + r1 + r2) * (d + r1 - r2) * (d - r1 + r2) * (d + r1 + r2)).max(0.0);
    r1 * r1 * a1 + r2 * r2 * a2 - 0.5 * k.sqrt()
}

/// Share of the entrance face that retroreflects at incidence `psi`.
pub fn ccr_active_area_fraction(ccr: &CcrParams, psi: f64) -> f64 {
    let a = ccr.aperture_radius;
    let d = ccr_displacement(ccr, psi);
    (circle_overlap_area(a, a, d) / (PI * a * a)).clamp(0.0, 1.0)
}

/// Power returned to each RxAP (W) by the CCR of one UE, face up.
///
/// A beam contributes only while the CCR lies inside its 1/e² footprint and
/// within the cube's acceptance angle.
pub fn rxap_power_matrix(
    layout: &BeamArrayLayout,
    beam: &BeamParams,
    ue: &UeState,
    ccr: &CcrParams,
) -> Vec<f64> {
    let capture = ccr.capture_fraction();
    layout
        .beams
        .iter()
        .map(|site| {
            let Ok(g) = angles(site.p_tx, site.n_tx, ue.position, Vec3::UP) else {
                return 0.0;
            };
            if g.psi > ccr.acceptance || g.phi >= PI / 2.0 {
                return 0.0;
            }
            let (s, c) = g.phi.sin_cos();
            if g.d * s > beam_width(beam, g.d * c) {
                return 0.0;
            }
            gaussian_intensity(beam, g.d, g.phi)
                * ccr.aperture_area()
                * g.psi.cos()
                * ccr_active_area_fraction(ccr, g.psi)
                * capture
        })
        .collect()
}

/// Return power at one RxAP labelled with the identity tag of the UE whose
/// modulator imprinted it.
#[derive(Debug, Clone, PartialEq)]
pub struct RxapReading {
    pub ue_id: u32,
    pub powers: Vec<f64>,
}

/// Power matrices of several UEs, kept apart by their tags.
pub fn rxap_readings(
    layout: &BeamArrayLayout,
    beam: &BeamParams,
    ues: &[UeState],
    ccr: &CcrParams,
) -> Vec<RxapReading> {
    ues.iter()
        .map(|ue| RxapReading {
            ue_id: ue.id,
            powers: rxap_power_matrix(layout, beam, ue, ccr),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::build_grid_array;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use proptest::prelude::*;

    fn setup() -> (BeamArrayLayout, BeamParams, CcrParams) {
        let layout = build_grid_array(3, 0.1, 3.5, 1.5, 0.012).unwrap();
        let beam = BeamParams::from_degrees(1550.0, 4.0, 0.06).unwrap();
        (layout, beam, CcrParams::default())
    }

    fn db(a: f64, b: f64) -> f64 {
        10.0 * (a / b).log10()
    }

    #[test]
    fn refraction() {
        assert_eq!(ccr_refraction(0.0, 1.5), 0.0);
        assert_abs_diff_eq!(ccr_refraction(30f64.to_radians(), 1.5).to_degrees(), 19.471, epsilon = 1e-3);
    }

    #[test]
    fn displacement_and_fraction() {
        let ccr = CcrParams::default();
        assert_abs_diff_eq!(ccr_displacement(&ccr, 30f64.to_radians()) * 1e3, 3.536, epsilon = 1e-3);
        assert_eq!(ccr_active_area_fraction(&ccr, 0.0), 1.0);
        let deep = CcrParams { depth: 1.0, ..ccr };
        assert_eq!(ccr_active_area_fraction(&deep, 40f64.to_radians()), 0.0);
    }

    #[test]
    fn lens_area_formula() {
        // equal circles: 2a² acos(D/2a) − (D/2)√(4a² − D²)
        let (a, d) = (2.0f64, 1.3f64);
        let lens = 2.0 * a * a * (d / (2.0 * a)).acos() - d / 2.0 * (4.0 * a * a - d * d).sqrt();
        assert_relative_eq!(circle_overlap_area(a, a, d), lens, max_relative = 1e-12);
        assert_relative_eq!(circle_overlap_area(1.0, 3.0, 0.5), PI, max_relative = 1e-12);
    }

    #[test]
    fn cell_centre_dominates() {
        let (layout, beam, ccr) = setup();
        let ue = UeState::at(0, layout.beams[4].p_cell);
        let m = rxap_power_matrix(&layout, &beam, &ue, &ccr);
        let best = m[4];
        for (i, &p) in m.iter().enumerate() {
            if i != 4 {
                assert!(p == 0.0 || db(best, p) > 6.0, "entry {i}: {} dB", db(best, p));
            }
        }
    }

    #[test]
    fn boundary_is_shared() {
        let (layout, beam, ccr) = setup();
        let ue = UeState::at(0, Vec3::new(-0.05, 0.0, 1.5));
        let m = rxap_power_matrix(&layout, &beam, &ue, &ccr);
        assert!(db(m[3], m[4]).abs() < 3.0);
    }

    #[test]
    fn outer_corner_sees_one_rxap() {
        let (layout, beam, ccr) = setup();
        let ue = UeState::at(0, Vec3::new(-0.15, 0.15, 1.5));
        let m = rxap_power_matrix(&layout, &beam, &ue, &ccr);
        for (i, &p) in m.iter().enumerate() {
            assert_eq!(p > 0.0, i == 6, "entry {i}");
        }
    }

    #[test]
    fn far_away_is_dark() {
        let (layout, beam, ccr) = setup();
        let ue = UeState::at(0, Vec3::new(3.0, 3.0, 1.5));
        assert!(rxap_power_matrix(&layout, &beam, &ue, &ccr).iter().all(|&p| p == 0.0));
    }

    #[test]
    fn readings_keep_tags() {
        let (layout, beam, ccr) = setup();
        let ues = [
            UeState::at(7, layout.beams[0].p_cell),
            UeState::at(3, layout.beams[8].p_cell),
        ];
        let r = rxap_readings(&layout, &beam, &ues, &ccr);
        assert_eq!(r[0].ue_id, 7);
        assert_eq!(r[1].ue_id, 3);
    }

    proptest! {
        #[test]
        fn fraction_non_increasing(a in 0.0f64..1.5, b in 0.0f64..1.5) {
            let ccr = CcrParams::default();
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            prop_assert!(ccr_active_area_fraction(&ccr, hi) <= ccr_active_area_fraction(&ccr, lo));
        }

        #[test]
        fn refraction_bends_toward_normal(psi in 1e-6f64..1.5, n in 1.01f64..3.0) {
            prop_assert!(ccr_refraction(psi, n) < psi);
        }

        #[test]
        fn argmax_scale_invariant(x in -0.15f64..0.15, y in -0.15f64..0.15, k in 0.01f64..100.0) {
            let (layout, beam, ccr) = setup();
            let ue = UeState::at(0, Vec3::new(x, y, 1.5));
            let a = rxap_power_matrix(&layout, &beam, &ue, &ccr);
            let b = rxap_power_matrix(&layout, &beam.with_power(beam.p_tx_opt * k), &ue, &ccr);
            let argmax = |v: &[f64]| v.iter().enumerate().fold((0, f64::MIN), |acc, (i, &p)| if p > acc.1 { (i, p) } else { acc }).0;
            prop_assert_eq!(argmax(&a), argmax(&b));
        }
    }
}
