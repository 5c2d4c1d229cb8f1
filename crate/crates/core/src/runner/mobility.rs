//! Time-stepped throughput and outage of moving users under each beam
//! activation scheme.

use std::collections::VecDeque;

use super::common::{active_beams, beam_systems, sdma_shares, stamp, BeamSystem, RunOutput};
use super::config::{IciMode, ScenarioConfig};
use super::engine::{mean_stderr, try_par_map};
use super::table::ResultTable;
use crate::activation::{
    benchmark_select, effective_throughput, select_beam_ccr, select_beam_sss, BenchmarkScheme,
    TimingParams,
};
use crate::channel::{downlink_powers, rxap_power_matrix, CcrParams};
use crate::error::{Error, Result};
use crate::geometry::{random_waypoint_step, BeamArrayLayout, MobilityParams, UeState, Vec3};
use crate::rng;

/// Per-scheme results of one replication.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SchemeRun {
    /// Mean over steps of the summed user throughput (bit/s).
    pub throughput: f64,
    /// Fraction of user-steps below the rate threshold.
    pub outage: f64,
    /// Fraction of user-steps served by their strongest beam.
    pub accuracy: f64,
}

/// Fixed inputs of a mobility run.
#[derive(Debug, Clone, Copy)]
pub struct MobilitySetup<'a> {
    pub layout: &'a BeamArrayLayout,
    pub sys: &'a BeamSystem,
    pub ccr: &'a CcrParams,
    pub timing: &'a TimingParams,
    pub schemes: &'a [BenchmarkScheme],
    pub n_ue: usize,
    pub dt: f64,
    pub duration: f64,
    pub r_threshold: f64,
    pub ici: bool,
}

/// Past positions of one user, newest last, spaced `dt` apart.
struct Track {
    past: VecDeque<Vec3>,
    keep: usize,
}

impl Track {
    fn push(&mut self, p: Vec3) {
        self.past.push_back(p);
        while self.past.len() > self.keep {
            self.past.pop_front();
        }
    }

    /// Position `ago` seconds before the newest sample, linearly
    /// interpolated.
    fn at(&self, ago: f64, dt: f64) -> Vec3 {
        let last = self.past.len() - 1;
        let steps = (ago / dt).max(0.0);
        let i0 = (steps.floor() as usize).min(last);
        let f = (steps - i0 as f64).clamp(0.0, 1.0);
        let a = self.past[last - i0];
        if f == 0.0 || i0 == last {
            return a;
        }
        let b = self.past[last - i0 - 1];
        a + (b - a) * f
    }
}

/// One replication: walkers start in the stationary regime, run for the
/// longest scheme delay to fill their position history, then every scheme
/// is scored on the same trajectories.
pub fn replicate(setup: &MobilitySetup<'_>, mobility: &MobilityParams, seed: u64) -> Result<Vec<SchemeRun>> {
    let layout = setup.layout;
    let sys = setup.sys;
    let dt = setup.dt;
    let mut walk = rng::stream(seed, rng::purpose("mobility-walk"), 0);
    let mut noise = rng::stream(seed, rng::purpose("mobility-noise"), 0);
    let z = layout.ue_plane_height;

    let max_delay = setup.schemes.iter().map(|s| s.delay()).fold(0.0, f64::max);
    let lag = (max_delay / dt).ceil() as usize;
    let mut ues: Vec<UeState> = (0..setup.n_ue)
        .map(|i| UeState::stationary(i as u32, mobility, z, &mut walk))
        .collect();
    let mut tracks: Vec<Track> = ues
        .iter()
        .map(|u| Track {
            past: VecDeque::from([u.position]),
            keep: lag + 2,
        })
        .collect();
    for _ in 0..lag {
        for (u, tr) in ues.iter_mut().zip(tracks.iter_mut()) {
            *u = random_waypoint_step(u, mobility, dt, &mut walk);
            tr.push(u.position);
        }
    }

    let steps = ((setup.duration / dt).round() as usize).max(1);
    let ns = setup.schemes.len();
    let mut sum_thr = vec![0.0; ns];
    let mut outages = vec![0usize; ns];
    let mut hits = vec![0usize; ns];
    let mut selected = vec![None; setup.n_ue];
    let mut interf = Vec::new();
    for step in 0..steps {
        for (u, tr) in ues.iter_mut().zip(tracks.iter_mut()) {
            *u = random_waypoint_step(u, mobility, dt, &mut walk);
            tr.push(u.position);
        }
        let now = step as f64 * dt;
        let powers: Vec<Vec<f64>> = ues
            .iter()
            .map(|u| downlink_powers(layout, &sys.beam, u.position, Vec3::UP, &sys.aperture))
            .collect();
        let truth: Vec<Option<usize>> = powers.iter().map(|p| select_beam_sss(p)).collect();

        for (si, scheme) in setup.schemes.iter().enumerate() {
            for (k, u) in ues.iter().enumerate() {
                selected[k] = match scheme {
                    BenchmarkScheme::Ccr => select_beam_ccr(&rxap_power_matrix(layout, &sys.beam, u, setup.ccr)),
                    _ => {
                        let tr = &tracks[k];
                        benchmark_select(scheme, |t| tr.at(now - t, dt), now, layout, &sys.beam, &sys.aperture, &mut noise)
                    }
                };
            }
            let shares = sdma_shares(&selected, layout.len());
            let active = if setup.ici { active_beams(&selected) } else { Vec::new() };
            let mut total = 0.0;
            for k in 0..setup.n_ue {
                let thr = match (selected[k], truth[k]) {
                    (Some(b), Some(t)) if b == t => {
                        let p = &powers[k];
                        let rate = if setup.ici {
                            interf.clear();
                            interf.extend(active.iter().filter(|&&a| a != b).map(|&a| p[a]));
                            sys.rx.rate_from_snr(sys.rx.sinr(p[b], &interf))
                        } else {
                            sys.rx.rate(p[b])
                        };
                        let zeta = shares[k] * rate;
                        if matches!(scheme, BenchmarkScheme::Ccr) && zeta > 0.0 {
                            effective_throughput(setup.timing, zeta)?.throughput
                        } else {
                            zeta
                        }
                    }
                    _ => 0.0,
                };
                if selected[k].is_some() && selected[k] == truth[k] {
                    hits[si] += 1;
                }
                if thr < setup.r_threshold {
                    outages[si] += 1;
                }
                total += thr;
            }
            sum_thr[si] += total;
        }
    }
    let user_steps = (steps * setup.n_ue) as f64;
    Ok((0..ns)
        .map(|si| SchemeRun {
            throughput: sum_thr[si] / steps as f64,
            outage: outages[si] as f64 / user_steps,
            accuracy: hits[si] as f64 / user_steps,
        })
        .collect())
}

pub fn mobility(cfg: &ScenarioConfig) -> Result<RunOutput> {
    if cfg.schemes.is_empty() {
        return Err(Error::config("schemes", "mobility needs at least one scheme"));
    }
    if cfg.ici == IciMode::Both {
        return Err(Error::config("ici", "mobility runs with ici \"on\" or \"off\""));
    }
    let layout = cfg.layout.build()?;
    let ccr = cfg.ccr.params();
    layout.check_ccr_spacing(ccr.l_ccr, ccr.d_rxap).map_err(|e| Error::config("layout.d_beam", e.to_string()))?;
    let systems = beam_systems(cfg, layout.vertical_distance())?;
    let m = &cfg.mobility;
    let reps = m.replications;
    let mut t = ResultTable::new(
        "mobility",
        &[
            "theta_deg",
            "n_ue",
            "scheme",
            "speed",
            "throughput",
            "throughput_stderr",
            "outage",
            "outage_stderr",
            "accuracy",
        ],
    );
    let mut notes = Vec::new();
    for sys in &systems {
        for (ui, &n_ue) in cfg.n_ue.iter().enumerate() {
            let setup = MobilitySetup {
                layout: &layout,
                sys,
                ccr: &ccr,
                timing: &cfg.timing,
                schemes: &cfg.schemes,
                n_ue,
                dt: m.dt,
                duration: m.duration,
                r_threshold: cfg.r_threshold,
                ici: cfg.ici == IciMode::On,
            };
            let runs = try_par_map(m.speeds.len() * reps, |k| {
                let params = m.params(m.speeds[k / reps], layout.footprint());
                let seed = rng::derive_seed(cfg.seed, rng::purpose("mobility"), (ui * m.speeds.len() * reps + k) as u64);
                replicate(&setup, &params, seed)
            })?;
            for (si, scheme) in cfg.schemes.iter().enumerate() {
                for (vi, &speed) in m.speeds.iter().enumerate() {
                    let of = |f: fn(&SchemeRun) -> f64| -> Vec<f64> {
                        runs[vi * reps..(vi + 1) * reps].iter().map(|r| f(&r[si])).collect()
                    };
                    let thr = mean_stderr(&of(|r| r.throughput));
                    let out = mean_stderr(&of(|r| r.outage));
                    let acc = mean_stderr(&of(|r| r.accuracy));
                    t.push(vec![
                        sys.theta_deg.into(),
                        n_ue.into(),
                        scheme.label().into(),
                        speed.into(),
                        thr.mean.into(),
                        thr.stderr.into(),
                        out.mean.into(),
                        out.stderr.into(),
                        acc.mean.into(),
                    ])?;
                    if vi + 1 == m.speeds.len() {
                        notes.push(format!("{} {:.1} Gbit/s", scheme.label(), thr.mean / 1e9));
                    }
                }
            }
        }
    }
    stamp(&mut t, cfg);
    Ok(RunOutput {
        models: Vec::new(),
        summary: format!(
            "throughput at {} m/s: {}",
            m.speeds.last().copied().unwrap_or(0.0),
            notes.join(", ")
        ),
        table: t,
    })
}
