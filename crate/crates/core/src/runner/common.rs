use rand::Rng;

use super::config::ScenarioConfig;
use super::table::ResultTable;
use crate::activation::MlpModel;
use crate::analysis::CentralBeamParams;
use crate::channel::{BeamParams, RxAperture};
use crate::error::Result;
use crate::geometry::Vec3;
use crate::link::{peak_power, Receiver};
use crate::rng::{self, SimRng};

/// Output of one experiment: the table plus a one-line summary for the
/// terminal.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub table: ResultTable,
    pub summary: String,
    /// Trained classifiers to write next to the table, by file stem.
    pub models: Vec<(String, MlpModel)>,
}

/// One divergence angle with its transmit power and receiver.
#[derive(Debug, Clone, Copy)]
pub struct BeamSystem {
    pub theta_deg: f64,
    pub beam: BeamParams,
    pub rx: Receiver,
    pub aperture: RxAperture,
}

impl BeamSystem {
    /// Closed-form law of the central beam for cells of side `d_cell`;
    /// `None` under signal-dependent noise.
    pub fn central(&self, h: f64, d_cell: f64) -> Option<CentralBeamParams> {
        CentralBeamParams::from_link(&self.beam, h, d_cell, &self.rx).ok()
    }
}

/// Beams for every configured angle. The noise reference is the on-axis
/// power at vertical distance `h`.
pub fn beam_systems(cfg: &ScenarioConfig, h: f64) -> Result<Vec<BeamSystem>> {
    let ledger = cfg.receiver.ledger();
    let ofdm = cfg.ofdm.params();
    (0..cfg.beam.theta_fwhm_deg.len())
        .map(|i| {
            let beam = cfg.beam.build(i)?;
            let rx = Receiver::new(ledger, ofdm, cfg.noise.floor(i), peak_power(&beam, h, &ledger))?;
            Ok(BeamSystem {
                theta_deg: cfg.beam.theta_fwhm_deg[i],
                beam,
                rx,
                aperture: ledger.aperture(),
            })
        })
        .collect()
}

/// Stream for chunk `chunk` of sweep point `point` of an experiment.
pub fn chunk_stream(seed: u64, label: &str, point: usize, chunk: usize) -> SimRng {
    rng::stream(rng::derive_seed(seed, rng::purpose(label), point as u64), 0, chunk as u64)
}

/// Uniform point on a disk of radius `r_max` around `c`.
pub fn uniform_disk<R: Rng + ?Sized>(c: Vec3, r_max: f64, rng: &mut R) -> Vec3 {
    let r = r_max * rng.random::<f64>().sqrt();
    let a = rng.random::<f64>() * std::f64::consts::TAU;
    Vec3::new(c.x + r * a.cos(), c.y + r * a.sin(), c.z)
}

/// Equal bandwidth share of each user within its serving beam; zero for
/// users without one.
pub fn sdma_shares(serving: &[Option<usize>], n_beam: usize) -> Vec<f64> {
    let mut count = vec![0usize; n_beam];
    for b in serving.iter().flatten() {
        count[*b] += 1;
    }
    serving
        .iter()
        .map(|s| s.map_or(0.0, |b| 1.0 / count[b] as f64))
        .collect()
}

/// Distinct serving beams in ascending order.
pub fn active_beams(serving: &[Option<usize>]) -> Vec<usize> {
    let mut a: Vec<usize> = serving.iter().flatten().copied().collect();
    a.sort_unstable();
    a.dedup();
    a
}

/// Standard metadata shared by every table.
pub fn stamp(table: &mut ResultTable, cfg: &ScenarioConfig) {
    let mut meta = vec![
        ("experiment".to_owned(), cfg.experiment.name().to_owned()),
        ("seed".to_owned(), cfg.seed.to_string()),
        ("config_hash".to_owned(), cfg.hash()),
        ("build".to_owned(), super::table::BUILD_TAG.to_owned()),
    ];
    meta.append(&mut table.metadata);
    table.metadata = meta;
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn shares_sum_to_one_per_beam(serving in proptest::collection::vec(proptest::option::of(0usize..6), 0..30)) {
            let shares = sdma_shares(&serving, 6);
            for b in active_beams(&serving) {
                let total: f64 = serving.iter().zip(&shares)
                    .filter(|(s, _)| **s == Some(b))
                    .map(|(_, x)| x)
                    .sum();
                prop_assert!((total - 1.0).abs() < 1e-12);
            }
            for (s, x) in serving.iter().zip(&shares) {
                if s.is_none() {
                    prop_assert_eq!(*x, 0.0);
                }
            }
        }
    }

    #[test]
    fn disk_samples_stay_inside() {
        let mut r = rng::stream(1, 2, 3);
        let c = Vec3::new(0.3, -0.2, 1.5);
        for _ in 0..1000 {
            let p = uniform_disk(c, 0.05, &mut r);
            assert!(p.planar_distance(c) <= 0.05);
            assert_eq!(p.z, 1.5);
        }
    }
}
