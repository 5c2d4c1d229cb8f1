//! Multi-user SDMA snapshots.

use super::common::{active_beams, beam_systems, chunk_stream, sdma_shares, stamp, BeamSystem, RunOutput};
use super::config::{IciMode, ScenarioConfig};
use super::engine::{mean_stderr, par_map};
use super::table::ResultTable;
use crate::activation::select_beam_sss;
use crate::analysis::{avg_active_beams, avg_rate_central, avg_rate_central_quadrature};
use crate::channel::downlink_powers;
use crate::error::Result;
use crate::geometry::{sample_orientation, BeamArrayLayout, OrientationModel, Vec3};
use crate::rng::SimRng;

/// Totals of one snapshot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Snapshot {
    /// Sum of user rates with every beam on its own wavelength (bit/s).
    pub total_no_ici: f64,
    /// Same with a shared wavelength; other active beams are interference.
    pub total_ici: f64,
    pub active: usize,
}

/// Drops `n_ue` users uniformly on the footprint and serves each from its
/// strongest beam with equal sharing inside a beam.
pub fn snapshot(
    layout: &BeamArrayLayout,
    sys: &BeamSystem,
    orientation: &OrientationModel,
    n_ue: usize,
    rng: &mut SimRng,
) -> Snapshot {
    let fp = layout.footprint();
    let z = layout.ue_plane_height;
    let powers: Vec<Vec<f64>> = (0..n_ue)
        .map(|_| {
            let (x, y) = fp.sample(rng);
            let n = sample_orientation(orientation, rng);
            downlink_powers(layout, &sys.beam, Vec3::new(x, y, z), n, &sys.aperture)
        })
        .collect();
    let serving: Vec<Option<usize>> = powers.iter().map(|p| select_beam_sss(p)).collect();
    let shares = sdma_shares(&serving, layout.len());
    let active = active_beams(&serving);
    let mut total_no_ici = 0.0;
    let mut total_ici = 0.0;
    let mut interf = Vec::with_capacity(active.len());
    for ((p, s), share) in powers.iter().zip(&serving).zip(&shares) {
        let Some(b) = *s else { continue };
        total_no_ici += share * sys.rx.rate(p[b]);
        interf.clear();
        interf.extend(active.iter().filter(|&&a| a != b).map(|&a| p[a]));
        total_ici += share * sys.rx.rate_from_snr(sys.rx.sinr(p[b], &interf));
    }
    Snapshot {
        total_no_ici,
        total_ici,
        active: active.len(),
    }
}

pub fn multiuser(cfg: &ScenarioConfig) -> Result<RunOutput> {
    let layout = cfg.layout.build()?;
    let h = layout.vertical_distance();
    let systems = beam_systems(cfg, h)?;
    let trials = cfg.samples.multiuser_trials;
    let with_ici = cfg.ici != IciMode::Off;
    let without_ici = cfg.ici != IciMode::On;
    let mut t = ResultTable::new(
        "multiuser",
        &[
            "theta_deg",
            "n_ue",
            "total_no_ici",
            "total_no_ici_stderr",
            "total_ici",
            "total_ici_stderr",
            "active_beams",
            "active_beams_formula",
            "bound_exact",
            "bound_closed",
        ],
    );
    let mut at20 = Vec::new();
    for sys in &systems {
        let cb = sys.central(h, layout.d_cell);
        let central_exact = cb.map(|cb| avg_rate_central_quadrature(&cb, &sys.rx.ofdm, sys.rx.ledger.b_l));
        let central_closed = cb.map(|cb| avg_rate_central(&cb, &sys.rx.ofdm, sys.rx.ledger.b_l).rate);
        for (ui, &n_ue) in cfg.n_ue.iter().enumerate() {
            // users land on the same spots for every angle
            let snaps = par_map(trials, |k| {
                let mut r = chunk_stream(cfg.seed, "multiuser", ui, k);
                snapshot(&layout, sys, &cfg.orientation, n_ue, &mut r)
            });
            let no_ici = mean_stderr(&snaps.iter().map(|s| s.total_no_ici).collect::<Vec<_>>());
            let ici = mean_stderr(&snaps.iter().map(|s| s.total_ici).collect::<Vec<_>>());
            let act = mean_stderr(&snaps.iter().map(|s| s.active as f64).collect::<Vec<_>>());
            let n_a = avg_active_beams(layout.len(), n_ue);
            t.push(vec![
                sys.theta_deg.into(),
                n_ue.into(),
                without_ici.then_some(no_ici.mean).into(),
                without_ici.then_some(no_ici.stderr).into(),
                with_ici.then_some(ici.mean).into(),
                with_ici.then_some(ici.stderr).into(),
                act.mean.into(),
                n_a.into(),
                central_exact.map(|c| c * n_a).into(),
                central_closed.map(|c| c * n_a).into(),
            ])?;
            if n_ue == 20 {
                at20.push(format!(
                    "{} deg {:.1}/{:.1}",
                    sys.theta_deg,
                    no_ici.mean / 1e9,
                    ici.mean / 1e9
                ));
            }
        }
    }
    stamp(&mut t, cfg);
    let summary = if at20.is_empty() {
        format!("{} rows", t.rows.len())
    } else {
        format!("total Gbit/s at 20 users (no ICI/ICI): {}", at20.join(", "))
    };
    Ok(RunOutput {
        table: t,
        summary,
        models: Vec::new(),
    })
}
