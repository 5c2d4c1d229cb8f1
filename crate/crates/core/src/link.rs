//! APD receiver noise, per-subcarrier SNR/SINR and the DCO-OFDM rate.
//!
//! Noise terms take the optical power on the detector *before* avalanche
//! gain and carry the `G²` factors explicitly; the signal current is
//! `R·G·p`.

use crate::channel::{BeamParams, RxAperture};
use crate::error::{ensure_positive, Error, Result};

pub const BOLTZMANN: f64 = 1.380_649e-23;
pub const ELECTRON_CHARGE: f64 = 1.602_176_634e-19;

/// Receiver front end and every noise parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ApdNoiseLedger {
    /// Modulation bandwidth (Hz).
    pub b_l: f64,
    /// m²
    pub a_eff: f64,
    /// FOV half-angle (rad).
    pub psi_c: f64,
    pub g_apd: f64,
    /// Responsivity (A/W).
    pub r_apd: f64,
    /// Relative intensity noise, linear (1/Hz).
    pub rin: f64,
    /// Feedback resistance (Ω).
    pub r_f: f64,
    /// K
    pub temperature: f64,
    /// Ionisation ratio.
    pub k_a: f64,
    /// Ambient optical power on the detector (W).
    pub p_n: f64,
    pub k_b: f64,
    pub q: f64,
}

impl Default for ApdNoiseLedger {
    fn default() -> Self {
        ApdNoiseLedger {
            b_l: 1.5e9,
            a_eff: 1.9635e-5,
            psi_c: 60f64.to_radians(),
            g_apd: 30.0,
            r_apd: 0.9,
            rin: 10f64.powf(-15.5),
            r_f: 50.0,
            temperature: 300.0,
            k_a: 0.7,
            p_n: 1e-6,
            k_b: BOLTZMANN,
            q: ELECTRON_CHARGE,
        }
    }
}

impl ApdNoiseLedger {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("receiver.b_l", self.b_l),
            ("receiver.a_eff", self.a_eff),
            ("receiver.psi_c", self.psi_c),
            ("receiver.g_apd", self.g_apd),
            ("receiver.r_apd", self.r_apd),
            ("receiver.r_f", self.r_f),
            ("receiver.k_b", self.k_b),
            ("receiver.q", self.q),
        ] {
            ensure_positive(name, v)?;
        }
        for (name, v) in [
            ("receiver.rin", self.rin),
            ("receiver.temperature", self.temperature),
            ("receiver.p_n", self.p_n),
        ] {
            crate::error::ensure_non_negative(name, v)?;
        }
        if !(self.k_a > 0.0 && self.k_a < 1.0) {
            return Err(Error::invalid("receiver.k_a", "must lie strictly between 0 and 1"));
        }
        if self.g_apd < 1.0 {
            return Err(Error::invalid("receiver.g_apd", "must be at least 1"));
        }
        Ok(())
    }

    pub fn aperture(&self) -> RxAperture {
        RxAperture {
            a_eff: self.a_eff,
            g_apd: self.g_apd,
            psi_c: self.psi_c,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OfdmParams {
    /// Number of subcarriers, even.
    pub m_sub: usize,
    /// DC-bias conversion factor.
    pub kappa: f64,
}

impl Default for OfdmParams {
    fn default() -> Self {
        OfdmParams {
            m_sub: 512,
            kappa: 3.0,
        }
    }
}

impl OfdmParams {
    pub fn validate(&self) -> Result<()> {
        if self.m_sub < 4 || !self.m_sub.is_multiple_of(2) {
            return Err(Error::invalid("ofdm.m_sub", "must be even and at least 4"));
        }
        ensure_positive("ofdm.kappa", self.kappa)
    }

    /// `(M − 2)·κ²`, the SNR denominator factor.
    fn clip_factor(&self) -> f64 {
        (self.m_sub as f64 - 2.0) * self.kappa * self.kappa
    }
}

/// Noise power spectral densities (A²/Hz).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoisePsd {
    pub thermal: f64,
    pub shot: f64,
    pub rin: f64,
}

impl NoisePsd {
    pub fn total(&self) -> f64 {
        self.thermal + self.shot + self.rin
    }
}

pub fn excess_noise_factor(ledger: &ApdNoiseLedger) -> f64 {
    let g = ledger.g_apd;
    ledger.k_a * g + (1.0 - ledger.k_a) * (2.0 - 1.0 / g)
}

pub fn noise_psd_components(ledger: &ApdNoiseLedger, p_opt_pre_gain: f64) -> NoisePsd {
    let g = ledger.g_apd;
    let r = ledger.r_apd;
    NoisePsd {
        thermal: 4.0 * ledger.k_b * ledger.temperature / ledger.r_f,
        shot: 2.0 * ledger.q * g * g * excess_noise_factor(ledger) * r * (p_opt_pre_gain + ledger.p_n),
        rin: ledger.rin * (r * g * p_opt_pre_gain).powi(2),
    }
}

/// Noise power per subcarrier, σ_n² (A²).
pub fn total_noise_per_subcarrier(
    ledger: &ApdNoiseLedger,
    ofdm: &OfdmParams,
    p_opt_pre_gain: f64,
) -> f64 {
    noise_psd_components(ledger, p_opt_pre_gain).total() * ledger.b_l / ofdm.m_sub as f64
}

fn signal_power(ledger: &ApdNoiseLedger, p: f64) -> f64 {
    (ledger.r_apd * ledger.g_apd * p).powi(2)
}

/// SNR with an explicit per-subcarrier noise power.
pub fn snr_with_noise(ledger: &ApdNoiseLedger, ofdm: &OfdmParams, p: f64, sigma2: f64) -> f64 {
    if p <= 0.0 {
        return 0.0;
    }
    signal_power(ledger, p) / (ofdm.clip_factor() * sigma2)
}

pub fn snr_per_subcarrier(ledger: &ApdNoiseLedger, ofdm: &OfdmParams, p_opt_pre_gain: f64) -> f64 {
    let sigma2 = total_noise_per_subcarrier(ledger, ofdm, p_opt_pre_gain);
    snr_with_noise(ledger, ofdm, p_opt_pre_gain, sigma2)
}

/// SINR with an explicit per-subcarrier noise power. Interfering beams count
/// as Gaussian noise at their full electrical power.
pub fn sinr_with_noise(
    ledger: &ApdNoiseLedger,
    ofdm: &OfdmParams,
    p_signal: f64,
    p_interferers: &[f64],
    sigma2: f64,
) -> f64 {
    if p_signal <= 0.0 {
        return 0.0;
    }
    let interference: f64 = p_interferers.iter().map(|&p| signal_power(ledger, p)).sum();
    signal_power(ledger, p_signal) / (interference + ofdm.clip_factor() * sigma2)
}

pub fn sinr_with_ici(
    ledger: &ApdNoiseLedger,
    ofdm: &OfdmParams,
    p_signal: f64,
    p_interferers: &[f64],
) -> f64 {
    let sigma2 = total_noise_per_subcarrier(ledger, ofdm, p_signal);
    sinr_with_noise(ledger, ofdm, p_signal, p_interferers, sigma2)
}

/// DCO-OFDM rate (bit/s) over the `M/2 − 1` data-bearing subcarriers.
pub fn data_rate(ofdm: &OfdmParams, b_l: f64, gamma: f64) -> f64 {
    let m = ofdm.m_sub as f64;
    (m / 2.0 - 1.0) / m * b_l * gamma.max(0.0).ln_1p() / std::f64::consts::LN_2
}

pub fn to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

pub fn from_db(x_db: f64) -> f64 {
    10f64.powf(x_db / 10.0)
}

/// How the receiver's noise power is set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseFloor {
    /// σ_n² evaluated at the received power of every sample.
    SignalDependent,
    /// σ_n² fixed at its value for the on-axis peak power of the central beam.
    FrozenAtPeak,
    /// As `FrozenAtPeak`, plus an extra white PSD chosen so the peak SNR
    /// equals the target.
    Calibrated { target_peak_snr_db: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkSample {
    pub p_opt_pre_gain: f64,
    pub snr: f64,
    pub snr_db: f64,
    /// bit/s
    pub rate: f64,
}

/// Ledger, OFDM settings and noise policy bundled for repeated evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Receiver {
    pub ledger: ApdNoiseLedger,
    pub ofdm: OfdmParams,
    /// Fixed σ_n², or `None` for the signal-dependent model.
    pub sigma2: Option<f64>,
    /// Extra PSD added by calibration (A²/Hz).
    pub extra_psd: f64,
}

/// On-axis pre-gain power of a beam aimed straight down from height `h`.
pub fn peak_power(beam: &BeamParams, h: f64, ledger: &ApdNoiseLedger) -> f64 {
    crate::channel::gaussian_intensity(beam, h, 0.0) * ledger.a_eff
}

impl Receiver {
    /// `p_peak` is the pre-gain on-axis power of the central beam.
    pub fn new(
        ledger: ApdNoiseLedger,
        ofdm: OfdmParams,
        floor: NoiseFloor,
        p_peak: f64,
    ) -> Result<Self> {
        ledger.validate()?;
        ofdm.validate()?;
        let base = total_noise_per_subcarrier(&ledger, &ofdm, p_peak);
        let (sigma2, extra_psd) = match floor {
            NoiseFloor::SignalDependent => (None, 0.0),
            NoiseFloor::FrozenAtPeak => (Some(base), 0.0),
            NoiseFloor::Calibrated { target_peak_snr_db } => {
                let target = from_db(target_peak_snr_db);
                let sigma2 = signal_power(&ledger, p_peak) / (ofdm.clip_factor() * target);
                if !(sigma2 >= base) {
                    return Err(Error::OutOfRange {
                        quantity: "calibration target SNR (dB)",
                        value: target_peak_snr_db,
                        range: format!(
                            "<= {:.3} (the uncalibrated peak)",
                            to_db(snr_with_noise(&ledger, &ofdm, p_peak, base))
                        ),
                    });
                }
                let extra = (sigma2 - base) * ofdm.m_sub as f64 / ledger.b_l;
                (Some(sigma2), extra)
            }
        };
        Ok(Receiver {
            ledger,
            ofdm,
            sigma2,
            extra_psd,
        })
    }

    pub fn noise(&self, p: f64) -> f64 {
        self.sigma2
            .unwrap_or_else(|| total_noise_per_subcarrier(&self.ledger, &self.ofdm, p))
    }

    pub fn snr(&self, p: f64) -> f64 {
        snr_with_noise(&self.ledger, &self.ofdm, p, self.noise(p))
    }

    pub fn sinr(&self, p: f64, interferers: &[f64]) -> f64 {
        sinr_with_noise(&self.ledger, &self.ofdm, p, interferers, self.noise(p))
    }

    pub fn rate_from_snr(&self, gamma: f64) -> f64 {
        data_rate(&self.ofdm, self.ledger.b_l, gamma)
    }

    pub fn rate(&self, p: f64) -> f64 {
        self.rate_from_snr(self.snr(p))
    }

    pub fn sample(&self, p: f64) -> LinkSample {
        let snr = self.snr(p);
        LinkSample {
            p_opt_pre_gain: p,
            snr,
            snr_db: to_db(snr),
            rate: self.rate_from_snr(snr),
        }
    }
}
