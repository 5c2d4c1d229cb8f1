//! Single-user experiments and the eye-safety table.

use rand::Rng;

use super::common::{beam_systems, chunk_stream, stamp, uniform_disk, RunOutput};
use super::config::ScenarioConfig;
use super::engine::{mean_stderr, par_chunks, par_map};
use super::table::ResultTable;
use crate::activation::select_beam_sss;
use crate::analysis::{
    avg_rate_central, avg_rate_central_quadrature, snr_cdf_exact, snr_cdf_uniform, snr_db_central,
    snr_pdf_exact, snr_pdf_uniform, CentralBeamParams,
};
use crate::channel::{beam_width, downlink_powers, BeamParams};
use crate::error::{Error, Result};
use crate::eyesafety::{exposure_level, max_transmit_power, mpe_lookup, Z_MPH};
use crate::geometry::{sample_orientation, Rect, Vec3};
use crate::link::to_db;

fn fmt_list(xs: &[f64], digits: usize) -> String {
    xs.iter().map(|x| format!("{x:.digits$}")).collect::<Vec<_>>().join("/")
}

fn thetas(cfg: &ScenarioConfig) -> String {
    fmt_list(&cfg.beam.theta_fwhm_deg, 0)
}

/// SNR of the strongest beam over a grid covering the central cell, or
/// the whole footprint when `sweep.full_array_map` is set.
pub fn snr_map(cfg: &ScenarioConfig) -> Result<RunOutput> {
    let layout = cfg.layout.build()?;
    let h = layout.vertical_distance();
    let systems = beam_systems(cfg, h)?;
    let centre = layout.beams[layout.central_beam()].p_cell;
    let half = layout.d_cell / 2.0;
    let region = if cfg.sweep.full_array_map {
        layout.footprint()
    } else {
        Rect::new(centre.x - half, centre.x + half, centre.y - half, centre.y + half)
    };
    let g = cfg.samples.grid;
    let z = layout.ue_plane_height;
    let (ox, oy) = (layout.ap_center.x, layout.ap_center.y);

    let mut t = ResultTable::new("snr-map", &["theta_deg", "x", "y", "beam", "snr_db"]);
    let mut peaks = Vec::new();
    let mut falloffs = Vec::new();
    for sys in &systems {
        let pts = par_map(g * g, |k| {
            let (i, j) = (k % g, k / g);
            let x = region.x_min + region.width() * i as f64 / (g - 1) as f64;
            let y = region.y_min + region.height() * j as f64 / (g - 1) as f64;
            let powers = downlink_powers(&layout, &sys.beam, Vec3::new(x, y, z), Vec3::UP, &sys.aperture);
            let best = select_beam_sss(&powers);
            (x, y, best, best.map(|b| to_db(sys.rx.snr(powers[b]))))
        });
        for (x, y, b, s) in pts {
            t.push(vec![sys.theta_deg.into(), (x - ox).into(), (y - oy).into(), b.into(), s.into()])?;
        }
        let central = layout.central_beam();
        let snr_at = |p: Vec3| {
            let powers = downlink_powers(&layout, &sys.beam, p, Vec3::UP, &sys.aperture);
            to_db(sys.rx.snr(powers[central]))
        };
        let peak = snr_at(centre);
        let corner = snr_at(Vec3::new(centre.x + half, centre.y + half, z));
        t.meta(&format!("peak_snr_db_{}deg", sys.theta_deg), peak);
        t.meta(&format!("corner_falloff_db_{}deg", sys.theta_deg), peak - corner);
        peaks.push(peak);
        falloffs.push(peak - corner);
    }
    stamp(&mut t, cfg);
    Ok(RunOutput {
        models: Vec::new(),
        summary: format!(
            "peak SNR {} dB, cell-corner falloff {} dB at {} deg",
            fmt_list(&peaks, 2),
            fmt_list(&falloffs, 2),
            thetas(cfg)
        ),
        table: t,
    })
}

/// Kolmogorov–Smirnov distance between sorted samples and a CDF.
pub fn ks_statistic(sorted: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let n = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            ((i + 1) as f64 / n - f).max(f - i as f64 / n)
        })
        .fold(0.0, f64::max)
}

fn central_params(cfg: &ScenarioConfig, beam: &BeamParams, rx: &crate::link::Receiver, d_cell: f64) -> Result<CentralBeamParams> {
    CentralBeamParams::from_link(beam, cfg.layout.h(), d_cell, rx).map_err(|e| match e {
        Error::InvalidParameter { reason, .. } => Error::config("noise.mode", reason),
        other => other,
    })
}

/// Histogram of the central-beam SNR in dB for UEs uniform on the
/// equal-area disk, against the exact and uniform densities.
pub fn pdf(cfg: &ScenarioConfig) -> Result<RunOutput> {
    let systems = beam_systems(cfg, cfg.layout.h())?;
    let n = cfg.samples.pdf;
    let bins = cfg.samples.pdf_bins;
    let mut t = ResultTable::new(
        "pdf",
        &["theta_deg", "snr_db", "empirical_density", "exact_density", "uniform_density"],
    );
    let mut notes = Vec::new();
    for (ti, sys) in systems.iter().enumerate() {
        let cb = central_params(cfg, &sys.beam, &sys.rx, cfg.layout.d_cell)?;
        let mut samples: Vec<f64> = par_chunks(n, cfg.samples.chunk, |c, range| {
            let mut r = chunk_stream(cfg.seed, "pdf", ti, c);
            range
                .map(|_| snr_db_central(&cb, cb.r_max * r.random::<f64>().sqrt()))
                .collect::<Vec<f64>>()
        })
        .into_iter()
        .flatten()
        .collect();
        samples.sort_by(f64::total_cmp);
        let ks_exact = ks_statistic(&samples, |g| snr_cdf_exact(&cb, g));
        let ks_uniform = ks_statistic(&samples, |g| snr_cdf_uniform(&cb, g));

        let (lo, hi) = cb.support_db();
        let width = (hi - lo) / bins as f64;
        let mut counts = vec![0usize; bins];
        for s in &samples {
            let k = (((s - lo) / width).floor().max(0.0) as usize).min(bins - 1);
            counts[k] += 1;
        }
        for (k, c) in counts.iter().enumerate() {
            let g = lo + (k as f64 + 0.5) * width;
            t.push(vec![
                sys.theta_deg.into(),
                g.into(),
                (*c as f64 / (n as f64 * width)).into(),
                snr_pdf_exact(&cb, g).into(),
                snr_pdf_uniform(&cb, g).into(),
            ])?;
        }
        let max_dev = (0..=1000)
            .map(|k| {
                let g = lo + (hi - lo) * k as f64 / 1000.0;
                (snr_pdf_exact(&cb, g) / snr_pdf_uniform(&cb, g) - 1.0).abs()
            })
            .fold(0.0, f64::max);
        let th = sys.theta_deg;
        t.meta(&format!("support_db_{th}deg"), format!("{lo} {hi}"));
        t.meta(&format!("ks_exact_{th}deg"), ks_exact);
        t.meta(&format!("ks_uniform_{th}deg"), ks_uniform);
        t.meta(&format!("max_rel_density_gap_{th}deg"), max_dev);
        notes.push(format!(
            "{th} deg: KS exact {ks_exact:.4}, uniform {ks_uniform:.4}, density gap {:.3}%",
            100.0 * max_dev
        ));
    }
    stamp(&mut t, cfg);
    Ok(RunOutput {
        models: Vec::new(),
        summary: notes.join("; "),
        table: t,
    })
}

/// Central-beam average rate against cell size: Monte-Carlo over the
/// equal-area disk with the full channel, closed form and quadrature.
pub fn rate_vs_cell(cfg: &ScenarioConfig) -> Result<RunOutput> {
    let systems = beam_systems(cfg, cfg.layout.h())?;
    let n = cfg.samples.rate;
    let mut t = ResultTable::new(
        "rate-vs-cell",
        &[
            "theta_deg",
            "d_cell",
            "rate_mc",
            "rate_mc_stderr",
            "rate_closed",
            "rate_quadrature",
            "closed_vs_mc",
            "low_snr",
        ],
    );
    let mut best = Vec::new();
    for (ti, sys) in systems.iter().enumerate() {
        for (di, &d) in cfg.sweep.d_cell.iter().enumerate() {
            let layout = cfg.layout.build_with(1, d)?;
            let site = layout.beams[0];
            let r_max = (d * d / std::f64::consts::PI).sqrt();
            let point = ti * cfg.sweep.d_cell.len() + di;
            let rates: Vec<f64> = par_chunks(n, cfg.samples.chunk, |c, range| {
                let mut r = chunk_stream(cfg.seed, "rate-vs-cell", point, c);
                range
                    .map(|_| {
                        let p = uniform_disk(site.p_cell, r_max, &mut r);
                        let nrm = sample_orientation(&cfg.orientation, &mut r);
                        let pw = downlink_powers(&layout, &sys.beam, p, nrm, &sys.aperture)[0];
                        if pw > 0.0 {
                            sys.rx.rate(pw)
                        } else {
                            0.0
                        }
                    })
                    .collect::<Vec<f64>>()
            })
            .into_iter()
            .flatten()
            .collect();
            let mc = mean_stderr(&rates);
            let cb = sys.central(cfg.layout.h(), d);
            let closed = cb.map(|cb| avg_rate_central(&cb, &sys.rx.ofdm, sys.rx.ledger.b_l));
            let quad = cb.map(|cb| avg_rate_central_quadrature(&cb, &sys.rx.ofdm, sys.rx.ledger.b_l));
            t.push(vec![
                sys.theta_deg.into(),
                d.into(),
                mc.mean.into(),
                mc.stderr.into(),
                closed.map(|c| c.rate).into(),
                quad.into(),
                closed.map(|c| c.rate / mc.mean - 1.0).into(),
                closed.map(|c| c.low_snr).into(),
            ])?;
            if (d - cfg.layout.d_cell).abs() < 1e-12 {
                best.push(mc.mean / 1e9);
            }
        }
    }
    stamp(&mut t, cfg);
    let summary = if best.len() == systems.len() {
        format!(
            "mean rate at d_cell = {} m: {} Gbit/s for {} deg",
            cfg.layout.d_cell,
            fmt_list(&best, 2),
            thetas(cfg)
        )
    } else {
        format!("{} rows", t.rows.len())
    };
    Ok(RunOutput {
        table: t,
        summary,
        models: Vec::new(),
    })
}

/// Single-user system rate over the whole footprint against array size,
/// with the central-beam bound.
pub fn rate_vs_array(cfg: &ScenarioConfig) -> Result<RunOutput> {
    let h = cfg.layout.h();
    let systems = beam_systems(cfg, h)?;
    let n = cfg.samples.rate;
    let mut t = ResultTable::new(
        "rate-vs-array",
        &[
            "theta_deg",
            "n_side",
            "rate_mc",
            "rate_mc_stderr",
            "bound_exact",
            "bound_closed",
            "rate_over_bound",
        ],
    );
    let mut worst: f64 = 0.0;
    for (ti, sys) in systems.iter().enumerate() {
        let cb = sys.central(h, cfg.layout.d_cell);
        let bound_exact = cb.map(|cb| avg_rate_central_quadrature(&cb, &sys.rx.ofdm, sys.rx.ledger.b_l));
        let bound_closed = cb.map(|cb| avg_rate_central(&cb, &sys.rx.ofdm, sys.rx.ledger.b_l).rate);
        for (ni, &n_side) in cfg.sweep.n_side.iter().enumerate() {
            let layout = cfg.layout.build_with(n_side, cfg.layout.d_cell)?;
            let fp = layout.footprint();
            let z = layout.ue_plane_height;
            let point = ti * cfg.sweep.n_side.len() + ni;
            let rates: Vec<f64> = par_chunks(n, cfg.samples.chunk, |c, range| {
                let mut r = chunk_stream(cfg.seed, "rate-vs-array", point, c);
                range
                    .map(|_| {
                        let (x, y) = fp.sample(&mut r);
                        let nrm = sample_orientation(&cfg.orientation, &mut r);
                        let powers = downlink_powers(&layout, &sys.beam, Vec3::new(x, y, z), nrm, &sys.aperture);
                        select_beam_sss(&powers).map_or(0.0, |b| sys.rx.rate(powers[b]))
                    })
                    .collect::<Vec<f64>>()
            })
            .into_iter()
            .flatten()
            .collect();
            let mc = mean_stderr(&rates);
            let ratio = bound_exact.map(|b| mc.mean / b);
            if let Some(r) = ratio {
                worst = worst.max(r);
            }
            t.push(vec![
                sys.theta_deg.into(),
                n_side.into(),
                mc.mean.into(),
                mc.stderr.into(),
                bound_exact.into(),
                bound_closed.into(),
                ratio.into(),
            ])?;
        }
    }
    stamp(&mut t, cfg);
    Ok(RunOutput {
        models: Vec::new(),
        summary: format!("largest rate/bound ratio {worst:.4}"),
        table: t,
    })
}

/// Largest eye-safe transmit power per divergence angle.
pub fn eyesafety(cfg: &ScenarioConfig) -> Result<RunOutput> {
    let lambda = cfg.beam.lambda_nm * 1e-9;
    let mpe = mpe_lookup(lambda, cfg.beam.t_exp)?;
    let mut t = ResultTable::new(
        "eyesafety",
        &["theta_deg", "lambda_nm", "t_exp", "p_max_mw", "e_mpe", "d_a_mm", "w_mhp_mm", "exposure_at_p_max"],
    );
    let mut p_mw = Vec::new();
    for &theta in &cfg.beam.theta_fwhm_deg {
        let p = max_transmit_power(lambda, theta.to_radians(), cfg.beam.t_exp)?;
        let beam = BeamParams::new(lambda, theta.to_radians(), p)?;
        let e = exposure_level(&beam, p, Z_MPH, mpe.d_a)?;
        t.push(vec![
            theta.into(),
            cfg.beam.lambda_nm.into(),
            cfg.beam.t_exp.into(),
            (p * 1e3).into(),
            mpe.e_mpe.into(),
            (mpe.d_a * 1e3).into(),
            (beam_width(&beam, Z_MPH) * 1e3).into(),
            e.into(),
        ])?;
        p_mw.push(p * 1e3);
    }
    stamp(&mut t, cfg);
    Ok(RunOutput {
        models: Vec::new(),
        summary: format!(
            "P_max {} mW at {} deg, {} nm, t_exp {} s",
            fmt_list(&p_mw, 1),
            thetas(cfg),
            cfg.beam.lambda_nm,
            cfg.beam.t_exp
        ),
        table: t,
    })
}
