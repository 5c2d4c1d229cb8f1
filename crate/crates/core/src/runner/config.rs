//! Scenario configuration: the JSON schema, per-experiment presets,
//! `--set` overrides and validation.
//!
//! Angles are in degrees and the RIN in dB/Hz here; everything is converted
//! to SI when the physics structs are built.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

use crate::activation::{BenchmarkScheme, TimingParams, TrainConfig, UplinkTx};
use crate::channel::{default_pd_constellation, BeamParams, CcrParams, CeilingPd, OdtxParams};
use crate::error::{Error, Result};
use crate::eyesafety::max_transmit_power;
use crate::geometry::{build_grid_array, BeamArrayLayout, MobilityParams, OrientationModel, Rect};
use crate::link::{from_db, ApdNoiseLedger, NoiseFloor, OfdmParams, BOLTZMANN, ELECTRON_CHARGE};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    #[default]
    SnrMap,
    Pdf,
    RateVsCell,
    RateVsArray,
    Multiuser,
    Mobility,
    Eyesafety,
    TrainAnn,
}

impl Experiment {
    pub const ALL: [Experiment; 8] = [
        Experiment::SnrMap,
        Experiment::Pdf,
        Experiment::RateVsCell,
        Experiment::RateVsArray,
        Experiment::Multiuser,
        Experiment::Mobility,
        Experiment::Eyesafety,
        Experiment::TrainAnn,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::SnrMap => "snr-map",
            Experiment::Pdf => "pdf",
            Experiment::RateVsCell => "rate-vs-cell",
            Experiment::RateVsArray => "rate-vs-array",
            Experiment::Multiuser => "multiuser",
            Experiment::Mobility => "mobility",
            Experiment::Eyesafety => "eyesafety",
            Experiment::TrainAnn => "train-ann",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Experiment::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| Error::config("experiment", format!("unknown experiment `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LayoutConfig {
    /// Beams per side of the square array.
    pub n_side: usize,
    /// Cell side (m).
    pub d_cell: f64,
    /// Height of the AP (m).
    pub ap_height: f64,
    /// Height of the UE plane (m).
    pub ue_height: f64,
    /// Spacing of the VCSELs on the AP (m).
    pub d_beam: f64,
}

impl Default for LayoutConfig {
    fn default() -> Self {
        LayoutConfig {
            n_side: 10,
            d_cell: 0.1,
            ap_height: 3.5,
            ue_height: 1.5,
            d_beam: 0.012,
        }
    }
}

impl LayoutConfig {
    pub fn build(&self) -> Result<BeamArrayLayout> {
        self.build_with(self.n_side, self.d_cell)
    }

    pub fn build_with(&self, n_side: usize, d_cell: f64) -> Result<BeamArrayLayout> {
        build_grid_array(n_side, d_cell, self.ap_height, self.ue_height, self.d_beam)
            .map_err(|e| prefix("layout", e))
    }

    pub fn h(&self) -> f64 {
        self.ap_height - self.ue_height
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BeamConfig {
    pub lambda_nm: f64,
    /// One run per divergence angle.
    pub theta_fwhm_deg: Vec<f64>,
    /// Transmit power per angle (W). Absent means the eye-safety limit.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p_tx_w: Option<Vec<f64>>,
    /// Exposure time used for the eye-safety limit (s).
    pub t_exp: f64,
}

impl Default for BeamConfig {
    fn default() -> Self {
        BeamConfig {
            lambda_nm: 1550.0,
            theta_fwhm_deg: vec![2.0, 4.0, 6.0],
            p_tx_w: None,
            t_exp: crate::eyesafety::T_EXP_CONTINUOUS,
        }
    }
}

impl BeamConfig {
    /// Beam parameters for the `i`-th angle.
    pub fn build(&self, i: usize) -> Result<BeamParams> {
        let theta = self.theta_fwhm_deg[i];
        let lambda = self.lambda_nm * 1e-9;
        let p = match &self.p_tx_w {
            Some(p) => p[i],
            None => max_transmit_power(lambda, theta.to_radians(), self.t_exp)?,
        };
        BeamParams::new(lambda, theta.to_radians(), p).map_err(|e| prefix("beam", e))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ReceiverConfig {
    pub b_l: f64,
    pub a_eff: f64,
    pub psi_c_deg: f64,
    pub g_apd: f64,
    pub r_apd: f64,
    pub rin_db_hz: f64,
    pub r_f: f64,
    pub temperature: f64,
    pub k_a: f64,
    pub p_n: f64,
}

impl Default for ReceiverConfig {
    fn default() -> Self {
        let l = ApdNoiseLedger::default();
        ReceiverConfig {
            b_l: l.b_l,
            a_eff: l.a_eff,
            psi_c_deg: 60.0,
            g_apd: l.g_apd,
            r_apd: l.r_apd,
            rin_db_hz: -155.0,
            r_f: l.r_f,
            temperature: l.temperature,
            k_a: l.k_a,
            p_n: l.p_n,
        }
    }
}

impl ReceiverConfig {
    pub fn ledger(&self) -> ApdNoiseLedger {
        ApdNoiseLedger {
            b_l: self.b_l,
            a_eff: self.a_eff,
            psi_c: self.psi_c_deg.to_radians(),
            g_apd: self.g_apd,
            r_apd: self.r_apd,
            rin: from_db(self.rin_db_hz),
            r_f: self.r_f,
            temperature: self.temperature,
            k_a: self.k_a,
            p_n: self.p_n,
            k_b: BOLTZMANN,
            q: ELECTRON_CHARGE,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OfdmConfig {
    pub m_sub: usize,
    pub kappa: f64,
}

impl Default for OfdmConfig {
    fn default() -> Self {
        let o = OfdmParams::default();
        OfdmConfig {
            m_sub: o.m_sub,
            kappa: o.kappa,
        }
    }
}

impl OfdmConfig {
    pub fn params(&self) -> OfdmParams {
        OfdmParams {
            m_sub: self.m_sub,
            kappa: self.kappa,
        }
    }
}

/// Noise model; see [`NoiseFloor`].
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum NoiseConfig {
    SignalDependent,
    #[default]
    FrozenAtPeak,
    /// One target per entry of `beam.theta_fwhm_deg`.
    Calibrated { target_peak_snr_db: Vec<f64> },
}

impl NoiseConfig {
    pub fn floor(&self, i: usize) -> NoiseFloor {
        match self {
            NoiseConfig::SignalDependent => NoiseFloor::SignalDependent,
            NoiseConfig::FrozenAtPeak => NoiseFloor::FrozenAtPeak,
            NoiseConfig::Calibrated { target_peak_snr_db } => NoiseFloor::Calibrated {
                target_peak_snr_db: target_peak_snr_db[i],
            },
        }
    }

    /// Peak SNRs read off the published SNR maps for 2°, 4° and 6°.
    pub fn published_calibration() -> Self {
        NoiseConfig::Calibrated {
            target_peak_snr_db: vec![27.7, 23.7, 22.7],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IciMode {
    Off,
    On,
    /// Report both; only meaningful for the multi-user experiment.
    #[default]
    Both,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MobilityConfig {
    /// m/s
    pub speeds: Vec<f64>,
    /// Simulated time per replication (s).
    pub duration: f64,
    /// Time step (s).
    pub dt: f64,
    pub pause_time: f64,
    /// Independent replications per (scheme, speed).
    pub replications: usize,
    /// Walking area; the array footprint when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bounds: Option<Rect>,
}

impl Default for MobilityConfig {
    fn default() -> Self {
        MobilityConfig {
            speeds: vec![0.1, 0.5, 1.0, 1.5, 2.0],
            duration: 10.0,
            dt: 1e-3,
            pause_time: 0.0,
            replications: 8,
            bounds: None,
        }
    }
}

impl MobilityConfig {
    pub fn params(&self, speed: f64, footprint: Rect) -> MobilityParams {
        MobilityParams {
            speed,
            bounds: self.bounds.unwrap_or(footprint),
            pause_time: self.pause_time,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SampleConfig {
    /// Grid points per axis for SNR maps.
    pub grid: usize,
    /// Radial samples for the SNR distribution.
    pub pdf: usize,
    pub pdf_bins: usize,
    /// UE positions per point of the rate sweeps.
    pub rate: usize,
    /// Snapshots per point of the multi-user sweep.
    pub multiuser_trials: usize,
    /// Work items per parallel chunk.
    pub chunk: usize,
}

impl Default for SampleConfig {
    fn default() -> Self {
        SampleConfig {
            grid: 41,
            pdf: 1_000_000,
            pdf_bins: 60,
            rate: 200_000,
            multiuser_trials: 4000,
            chunk: 4096,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    /// Cell sizes for `rate-vs-cell` (m).
    pub d_cell: Vec<f64>,
    /// Array sizes for `rate-vs-array`.
    pub n_side: Vec<usize>,
    /// Map the whole footprint instead of the central cell.
    pub full_array_map: bool,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            d_cell: (1..=10).map(|k| 0.02 * k as f64).collect(),
            n_side: vec![1, 2, 3, 5, 10],
            full_array_map: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CcrConfig {
    pub depth: f64,
    pub n_re: f64,
    pub l_ccr: f64,
    pub aperture_radius: f64,
    pub acceptance_deg: f64,
    pub d_rxap: f64,
}

impl Default for CcrConfig {
    fn default() -> Self {
        let c = CcrParams::default();
        CcrConfig {
            depth: c.depth,
            n_re: c.n_re,
            l_ccr: c.l_ccr,
            aperture_radius: c.aperture_radius,
            acceptance_deg: c.acceptance.to_degrees().round(),
            d_rxap: c.d_rxap,
        }
    }
}

impl CcrConfig {
    pub fn params(&self) -> CcrParams {
        CcrParams {
            depth: self.depth,
            n_re: self.n_re,
            l_ccr: self.l_ccr,
            aperture_radius: self.aperture_radius,
            acceptance: self.acceptance_deg.to_radians(),
            d_rxap: self.d_rxap,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct UplinkConfig {
    pub lambertian_order: f64,
    pub p_tx_od: f64,
    pub a_od: f64,
    pub n_ref: f64,
    pub psi_fov_deg: f64,
    /// Horizontal offset of the four tilted PDs from the AP centre (m).
    pub pd_offset: f64,
    pub pd_tilt_deg: f64,
}

impl Default for UplinkConfig {
    fn default() -> Self {
        let o = OdtxParams::default();
        UplinkConfig {
            lambertian_order: o.lambertian_order,
            p_tx_od: o.p_tx_od,
            a_od: o.a_od,
            n_ref: o.n_ref,
            psi_fov_deg: 60.0,
            pd_offset: 0.2,
            pd_tilt_deg: 30.0,
        }
    }
}

impl UplinkConfig {
    pub fn odtx(&self) -> OdtxParams {
        OdtxParams {
            lambertian_order: self.lambertian_order,
            p_tx_od: self.p_tx_od,
            a_od: self.a_od,
            n_ref: self.n_ref,
            psi_fov: self.psi_fov_deg.to_radians(),
        }
    }

    pub fn pds(&self, layout: &BeamArrayLayout) -> [CeilingPd; 5] {
        default_pd_constellation(layout.ap_center, self.pd_offset, self.pd_tilt_deg.to_radians())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnnConfig {
    /// Rows per dataset, split 80/20.
    pub rows: usize,
    pub train: TrainConfig,
    pub orientations: Vec<OrientationModel>,
    pub uplinks: Vec<UplinkTx>,
    /// Also train the position regressor and derive beams from it.
    pub position_variant: bool,
    /// Position errors for the IS-VLP accuracy rows (m).
    pub isvlp_errors: Vec<f64>,
    /// Write each trained classifier next to the CSV.
    pub save_models: bool,
}

impl Default for AnnConfig {
    fn default() -> Self {
        AnnConfig {
            rows: 100_000,
            train: TrainConfig {
                epochs: 60,
                ..TrainConfig::default()
            },
            orientations: vec![
                OrientationModel::Fixed,
                OrientationModel::m1_default(),
                OrientationModel::m2_default(),
            ],
            uplinks: vec![UplinkTx::Omni, UplinkTx::SingleLed],
            position_variant: true,
            isvlp_errors: vec![0.0, 0.005, 0.01, 0.02, 0.03, 0.0397, 0.05],
            save_models: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    /// Also write a whitespace-separated `.dat` copy for gnuplot.
    pub dat: bool,
}

/// Full description of one run. Serialises to the documented JSON schema;
/// unknown keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioConfig {
    pub experiment: Experiment,
    pub seed: u64,
    pub layout: LayoutConfig,
    pub beam: BeamConfig,
    pub receiver: ReceiverConfig,
    pub ofdm: OfdmConfig,
    pub noise: NoiseConfig,
    pub timing: TimingParams,
    /// Receiver orientation for the downlink experiments.
    pub orientation: OrientationModel,
    pub mobility: MobilityConfig,
    pub schemes: Vec<BenchmarkScheme>,
    pub n_ue: Vec<usize>,
    pub ici: IciMode,
    /// Outage threshold (bit/s).
    pub r_threshold: f64,
    pub samples: SampleConfig,
    pub sweep: SweepConfig,
    pub ccr: CcrConfig,
    pub uplink: UplinkConfig,
    pub ann: AnnConfig,
    pub output: OutputConfig,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            experiment: Experiment::default(),
            seed: 1,
            layout: LayoutConfig::default(),
            beam: BeamConfig::default(),
            receiver: ReceiverConfig::default(),
            ofdm: OfdmConfig::default(),
            noise: NoiseConfig::default(),
            timing: TimingParams::default(),
            orientation: OrientationModel::Fixed,
            mobility: MobilityConfig::default(),
            schemes: vec![
                BenchmarkScheme::Ccr,
                BenchmarkScheme::Odtx { delay: 0.03 },
                BenchmarkScheme::Isvlp {
                    delay: 0.0443,
                    pos_error_std: 0.0397,
                },
                BenchmarkScheme::Isvlp {
                    delay: 0.0443,
                    pos_error_std: 0.005,
                },
            ],
            n_ue: vec![1, 2, 4, 6, 8, 10, 15, 20, 30, 40, 50],
            ici: IciMode::Both,
            r_threshold: 2.5e9,
            samples: SampleConfig::default(),
            sweep: SweepConfig::default(),
            ccr: CcrConfig::default(),
            uplink: UplinkConfig::default(),
            ann: AnnConfig::default(),
            output: OutputConfig::default(),
        }
    }
}

impl ScenarioConfig {
    /// Defaults of one experiment.
    pub fn preset(experiment: Experiment) -> Self {
        let mut c = ScenarioConfig {
            experiment,
            ..ScenarioConfig::default()
        };
        match experiment {
            Experiment::SnrMap => c.layout.n_side = 3,
            Experiment::Pdf => {
                c.layout.n_side = 1;
                c.beam.theta_fwhm_deg = vec![4.0];
            }
            Experiment::RateVsCell => c.layout.n_side = 1,
            Experiment::RateVsArray => {}
            Experiment::Multiuser => {}
            Experiment::Mobility => {
                c.beam.theta_fwhm_deg = vec![4.0];
                c.n_ue = vec![5];
                c.ici = IciMode::Off;
            }
            Experiment::Eyesafety => {}
            Experiment::TrainAnn => {
                c.layout.n_side = 3;
                c.beam.theta_fwhm_deg = vec![4.0];
            }
        }
        c
    }

    /// Resolves a configuration the way the CLI does: preset of the
    /// experiment, then the JSON document, then `key=value` overrides.
    pub fn resolve(
        experiment: Option<Experiment>,
        document: Option<&str>,
        overrides: &[String],
    ) -> Result<Self> {
        let user: Value = match document {
            Some(text) => serde_json::from_str(text)
                .map_err(|e| Error::config("<document>", format!("not valid JSON: {e}")))?,
            None => Value::Object(Map::new()),
        };
        if !user.is_object() {
            return Err(Error::config("<document>", "top level must be a JSON object"));
        }
        let from_doc = match user.get("experiment") {
            Some(Value::String(s)) => Some(s.parse::<Experiment>()?),
            Some(_) => return Err(Error::config("experiment", "must be a string")),
            None => None,
        };
        let experiment = experiment.or(from_doc).unwrap_or_default();
        let mut value = serde_json::to_value(ScenarioConfig::preset(experiment))?;
        merge(&mut value, user);
        value["experiment"] = Value::String(experiment.name().into());
        for o in overrides {
            apply_override(&mut value, o)?;
        }
        let cfg: ScenarioConfig = serde_path_to_error::deserialize(value).map_err(|e| {
            let path = e.path().to_string();
            Error::config(path, e.into_inner().to_string())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serialises")
    }

    /// First 16 hex digits of the SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(serde_json::to_vec(self).expect("config serialises"));
        digest[..8].iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn validate(&self) -> Result<()> {
        let l = &self.layout;
        if l.n_side == 0 {
            return Err(Error::config("layout.n_side", "must be at least 1"));
        }
        pos("layout.d_cell", l.d_cell)?;
        pos("layout.d_beam", l.d_beam)?;
        if !(l.ap_height.is_finite() && l.ue_height.is_finite() && l.ap_height > l.ue_height) {
            return Err(Error::config("layout.ap_height", "must exceed layout.ue_height"));
        }

        let b = &self.beam;
        if b.theta_fwhm_deg.is_empty() {
            return Err(Error::config("beam.theta_fwhm_deg", "needs at least one angle"));
        }
        for (i, t) in b.theta_fwhm_deg.iter().enumerate() {
            if !(t.is_finite() && *t > 0.0 && *t < 90.0) {
                return Err(Error::config(format!("beam.theta_fwhm_deg[{i}]"), "must lie in (0, 90)"));
            }
        }
        if let Some(p) = &b.p_tx_w {
            if p.len() != b.theta_fwhm_deg.len() {
                return Err(Error::config("beam.p_tx_w", "needs one power per angle"));
            }
            for (i, v) in p.iter().enumerate() {
                pos(&format!("beam.p_tx_w[{i}]"), *v)?;
            }
        }
        pos("beam.lambda_nm", b.lambda_nm)?;
        pos("beam.t_exp", b.t_exp)?;
        for i in 0..b.theta_fwhm_deg.len() {
            b.build(i).map_err(|e| prefix("beam", e))?;
        }

        let r = &self.receiver;
        if !(r.psi_c_deg > 0.0 && r.psi_c_deg <= 90.0) {
            return Err(Error::config("receiver.psi_c_deg", "must lie in (0, 90]"));
        }
        if !r.rin_db_hz.is_finite() {
            return Err(Error::config("receiver.rin_db_hz", "must be finite"));
        }
        self.receiver.ledger().validate().map_err(as_config)?;
        self.ofdm.params().validate().map_err(as_config)?;

        if let NoiseConfig::Calibrated { target_peak_snr_db } = &self.noise {
            if target_peak_snr_db.len() != b.theta_fwhm_deg.len() {
                return Err(Error::config("noise.target_peak_snr_db", "needs one target per angle"));
            }
            if let Some(i) = target_peak_snr_db.iter().position(|v| !v.is_finite()) {
                return Err(Error::config(format!("noise.target_peak_snr_db[{i}]"), "must be finite"));
            }
        }

        self.timing.validate().map_err(as_config)?;
        self.orientation.validate().map_err(|e| prefix("orientation", e))?;

        let m = &self.mobility;
        for (i, s) in m.speeds.iter().enumerate() {
            if !(s.is_finite() && *s >= 0.0) {
                return Err(Error::config(format!("mobility.speeds[{i}]"), "must be >= 0"));
            }
        }
        pos("mobility.duration", m.duration)?;
        pos("mobility.dt", m.dt)?;
        if m.dt > m.duration {
            return Err(Error::config("mobility.dt", "must not exceed mobility.duration"));
        }
        if !(m.pause_time.is_finite() && m.pause_time >= 0.0) {
            return Err(Error::config("mobility.pause_time", "must be >= 0"));
        }
        if m.replications == 0 {
            return Err(Error::config("mobility.replications", "must be at least 1"));
        }
        if let Some(rect) = &m.bounds {
            rect.validate("mobility.bounds").map_err(as_config)?;
        }

        for (i, s) in self.schemes.iter().enumerate() {
            s.validate().map_err(|e| prefix(&format!("schemes[{i}]"), e))?;
        }
        if self.n_ue.contains(&0) {
            return Err(Error::config("n_ue", "user counts must be at least 1"));
        }
        pos("r_threshold", self.r_threshold)?;

        let s = &self.samples;
        for (name, v) in [
            ("samples.grid", s.grid),
            ("samples.pdf", s.pdf),
            ("samples.pdf_bins", s.pdf_bins),
            ("samples.rate", s.rate),
            ("samples.multiuser_trials", s.multiuser_trials),
            ("samples.chunk", s.chunk),
        ] {
            if v == 0 {
                return Err(Error::config(name, "must be at least 1"));
            }
        }
        if s.grid < 2 {
            return Err(Error::config("samples.grid", "needs at least 2 points per axis"));
        }
        for (i, d) in self.sweep.d_cell.iter().enumerate() {
            pos(&format!("sweep.d_cell[{i}]"), *d)?;
        }
        if self.sweep.n_side.contains(&0) {
            return Err(Error::config("sweep.n_side", "array sizes must be at least 1"));
        }

        self.ccr.params().validate().map_err(|e| prefix("ccr", e))?;
        if !(self.uplink.psi_fov_deg > 0.0 && self.uplink.psi_fov_deg <= 90.0) {
            return Err(Error::config("uplink.psi_fov_deg", "must lie in (0, 90]"));
        }
        self.uplink.odtx().validate().map_err(|e| prefix("uplink", e))?;
        if !(self.uplink.pd_offset.is_finite() && self.uplink.pd_offset >= 0.0) {
            return Err(Error::config("uplink.pd_offset", "must be >= 0"));
        }
        if !(self.uplink.pd_tilt_deg.is_finite() && self.uplink.pd_tilt_deg.abs() < 90.0) {
            return Err(Error::config("uplink.pd_tilt_deg", "must lie in (-90, 90)"));
        }

        let a = &self.ann;
        if a.rows < 10 {
            return Err(Error::config("ann.rows", "needs at least 10 rows"));
        }
        if a.train.n_hidden == 0 || a.train.batch_size == 0 {
            return Err(Error::config("ann.train", "n_hidden and batch_size must be positive"));
        }
        pos("ann.train.learning_rate", a.train.learning_rate)?;
        for (i, o) in a.orientations.iter().enumerate() {
            o.validate().map_err(|e| prefix(&format!("ann.orientations[{i}]"), e))?;
        }
        for (i, e) in a.isvlp_errors.iter().enumerate() {
            if !(e.is_finite() && *e >= 0.0) {
                return Err(Error::config(format!("ann.isvlp_errors[{i}]"), "must be >= 0"));
            }
        }
        Ok(())
    }
}

fn pos(path: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::config(path, format!("must be positive and finite, got {v}")))
    }
}

/// Rewrites a lower-level error as a config error under `section`.
fn prefix(section: &str, e: Error) -> Error {
    match e {
        Error::InvalidParameter { field, reason } => {
            let path = if field.contains('.') {
                field
            } else {
                format!("{section}.{field}")
            };
            Error::Config { path, reason }
        }
        Error::Config { path, reason } => Error::Config {
            path: format!("{section}.{path}"),
            reason,
        },
        other => other,
    }
}

fn as_config(e: Error) -> Error {
    match e {
        Error::InvalidParameter { field, reason } => Error::Config {
            path: field,
            reason,
        },
        other => other,
    }
}

/// Objects merge key by key. A tagged object (one naming its variant)
/// replaces the default wholesale, as do arrays and scalars.
fn merge(base: &mut Value, over: Value) {
    const TAGS: [&str; 3] = ["mode", "model", "scheme"];
    match (base, over) {
        (Value::Object(b), Value::Object(o)) => {
            for (k, v) in o {
                let tagged = v.as_object().is_some_and(|m| TAGS.iter().any(|t| m.contains_key(*t)));
                match b.get_mut(&k) {
                    Some(slot) if !tagged => merge(slot, v),
                    _ => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

/// Applies `path=value`. The value is parsed as JSON and falls back to a
/// plain string. A bare key that is not top-level resolves to the unique
/// nested field of that name.
pub fn apply_override(root: &mut Value, assignment: &str) -> Result<()> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| Error::config(assignment, "override must look like key=value"))?;
    let key = key.trim();
    if key.is_empty() {
        return Err(Error::config(assignment, "empty key"));
    }
    let value = serde_json::from_str(raw.trim()).unwrap_or_else(|_| Value::String(raw.trim().into()));

    let path: Vec<String> = if key.contains('.') || root.get(key).is_some() {
        key.split('.').map(str::to_owned).collect()
    } else {
        let mut hits = Vec::new();
        find_key(root, key, &mut Vec::new(), &mut hits);
        match hits.len() {
            1 => hits.pop().expect("one hit"),
            0 => return Err(Error::config(key, "no such setting")),
            _ => {
                let names: Vec<String> = hits.iter().map(|p| p.join(".")).collect();
                return Err(Error::config(key, format!("ambiguous; use one of {}", names.join(", "))));
            }
        }
    };

    let mut node = root;
    for (i, part) in path.iter().enumerate() {
        let last = i + 1 == path.len();
        let here = path[..=i].join(".");
        node = match node {
            Value::Object(m) => {
                if last {
                    m.insert(part.clone(), value);
                    return Ok(());
                }
                m.entry(part.clone()).or_insert_with(|| Value::Object(Map::new()))
            }
            Value::Array(a) => {
                let idx: usize = part
                    .parse()
                    .map_err(|_| Error::config(&here, "array index expected"))?;
                let len = a.len();
                let slot = a
                    .get_mut(idx)
                    .ok_or_else(|| Error::config(&here, format!("index out of range (len {len})")))?;
                if last {
                    *slot = value;
                    return Ok(());
                }
                slot
            }
            _ => return Err(Error::config(&here, "cannot descend into a scalar")),
        };
    }
    Ok(())
}

fn find_key(node: &Value, key: &str, trail: &mut Vec<String>, hits: &mut Vec<Vec<String>>) {
    if let Value::Object(m) = node {
        for (k, v) in m {
            trail.push(k.clone());
            if k == key {
                hits.push(trail.clone());
            }
            find_key(v, key, trail, hits);
            trail.pop();
        }
    }
}
