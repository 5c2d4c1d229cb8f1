//! Beam-activation accuracy of the RSS classifier, the single-LED uplink,
//! the position regressor and IS-VLP with a given position error.

use rand_distr::{Distribution, Normal};

use super::common::{beam_systems, stamp, RunOutput};
use super::config::ScenarioConfig;
use super::engine::{par_map, try_par_map};
use super::table::{Cell, ResultTable};
use crate::activation::{
    activation_accuracy, generate_training_set, sss_at, train_mlp, MlpModel, OutputKind, RssDataset,
    RssRow, RssSetup, TrainConfig, UplinkTx,
};
use crate::error::Result;
use crate::geometry::{BeamArrayLayout, OrientationModel, Vec3};
use crate::rng;

fn uplink_label(u: UplinkTx) -> &'static str {
    match u {
        UplinkTx::Omni => "odtx",
        UplinkTx::SingleLed => "single_tx",
    }
}

/// Beam chosen from a normalised position estimate.
pub fn beam_from_position(
    layout: &BeamArrayLayout,
    setup: &RssSetup<'_>,
    normalised: [f64; 2],
) -> Option<usize> {
    let fp = layout.footprint();
    let p = Vec3::new(
        fp.x_min + normalised[0] * fp.width(),
        fp.y_min + normalised[1] * fp.height(),
        layout.ue_plane_height,
    );
    sss_at(layout, setup.beam, setup.rx, p)
}

/// Accuracy of the position regressor when its output is turned into a
/// beam.
pub fn position_accuracy(model: &MlpModel, setup: &RssSetup<'_>, rows: &[RssRow]) -> Result<f64> {
    let mut hits = 0usize;
    for r in rows {
        let out = model.predict(&r.features)?;
        if beam_from_position(setup.layout, setup, [out[0], out[1]]) == Some(r.label) {
            hits += 1;
        }
    }
    Ok(hits as f64 / rows.len().max(1) as f64)
}

/// IS-VLP accuracy on static users: SSS at the true position plus a 2-D
/// Gaussian error of total standard deviation `sigma`.
pub fn isvlp_accuracy(setup: &RssSetup<'_>, rows: &[RssRow], sigma: f64, seed: u64) -> f64 {
    let layout = setup.layout;
    let fp = layout.footprint();
    let hits: usize = par_map(rows.len(), |i| {
        let r = &rows[i];
        let mut g = rng::stream(seed, rng::purpose("isvlp-error"), i as u64);
        let (ex, ey) = if sigma > 0.0 {
            let n = Normal::new(0.0, sigma / std::f64::consts::SQRT_2).expect("sigma >= 0");
            (n.sample(&mut g), n.sample(&mut g))
        } else {
            (0.0, 0.0)
        };
        let p = Vec3::new(
            fp.x_min + r.position[0] * fp.width() + ex,
            fp.y_min + r.position[1] * fp.height() + ey,
            layout.ue_plane_height,
        );
        usize::from(sss_at(layout, setup.beam, setup.rx, p) == Some(r.label))
    })
    .into_iter()
    .sum();
    hits as f64 / rows.len().max(1) as f64
}

struct Job {
    orientation: OrientationModel,
    uplink: UplinkTx,
    output: OutputKind,
}

pub fn train_ann(cfg: &ScenarioConfig) -> Result<RunOutput> {
    let layout = cfg.layout.build()?;
    let sys = beam_systems(cfg, layout.vertical_distance())?[0];
    let odtx = cfg.uplink.odtx();
    let pds = cfg.uplink.pds(&layout);
    let a = &cfg.ann;

    let mut jobs = Vec::new();
    for o in &a.orientations {
        for &u in &a.uplinks {
            jobs.push(Job {
                orientation: *o,
                uplink: u,
                output: OutputKind::Softmax,
            });
            if a.position_variant && u == UplinkTx::Omni {
                jobs.push(Job {
                    orientation: *o,
                    uplink: u,
                    output: OutputKind::Sigmoid,
                });
            }
        }
    }

    let mut t = ResultTable::new(
        "train-ann",
        &[
            "method",
            "orientation",
            "n_hidden",
            "pos_error_m",
            "accuracy_train",
            "accuracy_test",
            "final_loss",
        ],
    );
    let mut notes = Vec::new();
    let mut models = Vec::new();
    // datasets depend only on (orientation, uplink), so both outputs share one
    let results = try_par_map(jobs.len(), |j| {
        let job = &jobs[j];
        let setup = RssSetup {
            layout: &layout,
            beam: &sys.beam,
            rx: &sys.aperture,
            odtx: &odtx,
            pds: &pds,
            orientation: &job.orientation,
            uplink: job.uplink,
        };
        let oi = a.orientations.iter().position(|o| *o == job.orientation).unwrap_or(0);
        let ui = a.uplinks.iter().position(|u| *u == job.uplink).unwrap_or(0);
        let data_seed = rng::derive_seed(cfg.seed, rng::purpose("ann-data"), (oi * 8 + ui) as u64);
        let ds = generate_training_set(&setup, a.rows, data_seed)?;
        let train_cfg = TrainConfig {
            output: job.output,
            ..a.train
        };
        let out = train_mlp(&ds, &train_cfg, rng::derive_seed(cfg.seed, rng::purpose("ann-train"), j as u64))?;
        let (tr, te) = match job.output {
            OutputKind::Softmax => (
                activation_accuracy(&out.model, ds.train())?,
                activation_accuracy(&out.model, ds.test())?,
            ),
            OutputKind::Sigmoid => (
                position_accuracy(&out.model, &setup, ds.train())?,
                position_accuracy(&out.model, &setup, ds.test())?,
            ),
        };
        Ok((out, tr, te))
    })?;

    for (job, (out, tr, te)) in jobs.iter().zip(&results) {
        let method = match job.output {
            OutputKind::Softmax => uplink_label(job.uplink).to_owned(),
            OutputKind::Sigmoid => format!("{}_position", uplink_label(job.uplink)),
        };
        t.push(vec![
            method.clone().into(),
            job.orientation.label().into(),
            a.train.n_hidden.into(),
            Cell::Empty,
            (*tr).into(),
            (*te).into(),
            out.epoch_loss.last().copied().into(),
        ])?;
        notes.push(format!("{method}/{} {:.3}", job.orientation.label(), te));
        if a.save_models {
            models.push((format!("mlp_{}_{}", method, job.orientation.label()), out.model.clone()));
        }
    }

    if !a.isvlp_errors.is_empty() {
        // static users, so orientation and uplink do not matter here
        let setup = RssSetup {
            layout: &layout,
            beam: &sys.beam,
            rx: &sys.aperture,
            odtx: &odtx,
            pds: &pds,
            orientation: &OrientationModel::Fixed,
            uplink: UplinkTx::Omni,
        };
        let ds: RssDataset =
            generate_training_set(&setup, a.rows, rng::derive_seed(cfg.seed, rng::purpose("isvlp-data"), 0))?;
        for (k, &sigma) in a.isvlp_errors.iter().enumerate() {
            let acc = isvlp_accuracy(
                &setup,
                ds.test(),
                sigma,
                rng::derive_seed(cfg.seed, rng::purpose("isvlp"), k as u64),
            );
            t.push(vec![
                "isvlp".into(),
                "-".into(),
                Cell::Empty,
                sigma.into(),
                Cell::Empty,
                acc.into(),
                Cell::Empty,
            ])?;
        }
    }
    stamp(&mut t, cfg);
    Ok(RunOutput {
        summary: format!("test accuracy {}", notes.join(", ")),
        table: t,
        models,
    })
}
