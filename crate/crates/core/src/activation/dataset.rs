use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::mlp::{predict_beam, MlpModel};
use super::select::sss_at;
use crate::channel::{
    received_power_uplink, received_power_uplink_single_led, BeamParams, CeilingPd, OdtxParams,
    RxAperture,
};
use crate::error::{Error, Result};
use crate::geometry::{sample_orientation, BeamArrayLayout, OrientationModel, Vec3};
use crate::rng;

/// Uplink emitter on the UE.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UplinkTx {
    /// Omnidirectional array; RSS does not depend on orientation.
    #[default]
    Omni,
    /// One Lambertian LED along the UE normal.
    SingleLed,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RssRow {
    /// Power at each ceiling PD (W).
    pub features: [f64; 5],
    /// SSS beam for a face-up receiver at the same spot.
    pub label: usize,
    /// Position scaled to `[0, 1]²` over the array footprint.
    pub position: [f64; 2],
}

/// Labelled RSS rows; the first `n_train` form the training split.
#[derive(Debug, Clone)]
pub struct RssDataset {
    pub rows: Vec<RssRow>,
    pub n_beam: usize,
    pub n_train: usize,
}

impl RssDataset {
    pub fn new(rows: Vec<RssRow>, n_beam: usize, train_fraction: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&train_fraction) {
            return Err(Error::invalid("train_fraction", "must lie in [0, 1]"));
        }
        if let Some(r) = rows.iter().find(|r| r.label >= n_beam) {
            return Err(Error::invalid("label", format!("{} outside {} beams", r.label, n_beam)));
        }
        let n_train = (rows.len() as f64 * train_fraction).round() as usize;
        Ok(RssDataset {
            rows,
            n_beam,
            n_train,
        })
    }

    pub fn train(&self) -> &[RssRow] {
        &self.rows[..self.n_train]
    }

    pub fn test(&self) -> &[RssRow] {
        &self.rows[self.n_train..]
    }
}

/// Everything needed to synthesise RSS rows.
#[derive(Debug, Clone, Copy)]
pub struct RssSetup<'a> {
    pub layout: &'a BeamArrayLayout,
    pub beam: &'a BeamParams,
    pub rx: &'a RxAperture,
    pub odtx: &'a OdtxParams,
    pub pds: &'a [CeilingPd; 5],
    pub orientation: &'a OrientationModel,
    pub uplink: UplinkTx,
}

impl RssSetup<'_> {
    /// RSS at the five PDs for a UE at `p` with normal `n`.
    pub fn rss(&self, p: Vec3, n: Vec3) -> [f64; 5] {
        let mut f = [0.0; 5];
        for (v, pd) in f.iter_mut().zip(self.pds.iter()) {
            *v = match self.uplink {
                UplinkTx::Omni => received_power_uplink(self.odtx, p, pd),
                UplinkTx::SingleLed => received_power_uplink_single_led(self.odtx, p, n, pd),
            };
        }
        f
    }
}

/// `n` rows at uniform positions over the footprint with orientations drawn
/// from the setup's model, split 80/20. Row `i` uses its own random stream.
pub fn generate_training_set(setup: &RssSetup<'_>, n: usize, seed: u64) -> Result<RssDataset> {
    setup.odtx.validate()?;
    setup.orientation.validate()?;
    let fp = setup.layout.footprint();
    let z = setup.layout.ue_plane_height;
    let tag = rng::purpose("rss-row");
    let rows: Vec<RssRow> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut r = rng::stream(seed, tag, i as u64);
            let (x, y) = fp.sample(&mut r);
            let normal = sample_orientation(setup.orientation, &mut r);
            let p = Vec3::new(x, y, z);
            RssRow {
                features: setup.rss(p, normal),
                label: sss_at(setup.layout, setup.beam, setup.rx, p)
                    .or_else(|| setup.layout.cell_of(x, y))
                    .unwrap_or(0),
                position: [(x - fp.x_min) / fp.width(), (y - fp.y_min) / fp.height()],
            }
        })
        .collect();
    RssDataset::new(rows, setup.layout.len(), 0.8)
}

/// Fraction of rows whose predicted beam equals the label.
pub fn activation_accuracy(model: &MlpModel, rows: &[RssRow]) -> Result<f64> {
    if rows.is_empty() {
        return Err(Error::invalid("rows", "empty evaluation set"));
    }
    let mut hits = 0usize;
    for r in rows {
        if predict_beam(model, &r.features)?.index == r.label {
            hits += 1;
        }
    }
    Ok(hits as f64 / rows.len() as f64)
}
