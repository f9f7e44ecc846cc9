//! Closed-form signal, noise and sensitivity model of the double-pass
//! nonlinear interferometer and of the direct-detection (IPDA/DIAL) baseline.
//!
//! Everything here is computed in SI units. Wavelengths enter in µm and cross
//! sections in m²/molecule; conversion to metres happens at the point of use.
//!
//! The model is the weak-gain one: a single pass through the crystal produces
//! `I_s = G·I_i` with `G ≪ 1`, no pump depletion and no exponential
//! amplification. The second-pass field is weak against the first-pass local
//! oscillator, so the fringe behaves like a homodyne measurement limited by
//! the local oscillator's shot noise.

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::spectra::CrossSectionPair;

/// Dry-air number density at ambient conditions, molecules/m³.
pub const DEFAULT_N_AIR: f64 = 2.53e25;

/// Gain above which the weak-gain expansion starts to break down.
pub const HIGH_GAIN_THRESHOLD: f64 = 1e-2;

/// Second-pass to first-pass intensity ratio above which the local
/// oscillator no longer dominates the fringe.
pub const STRONG_RETURN_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PhysicsError {
    /// A quantity that appears in a denominator vanished.
    #[error("degenerate input: {0}")]
    Degenerate(String),
    /// An argument lies outside its physical domain.
    #[error("domain error: {0}")]
    Domain(String),
}

pub type Result<T> = std::result::Result<T, PhysicsError>;

/// CODATA 2018 exact/recommended values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalConstants {
    pub hbar: f64,
    pub c: f64,
    pub mu0: f64,
    pub eps0: f64,
}

pub const CONSTANTS: PhysicalConstants = PhysicalConstants {
    hbar: 1.054_571_817e-34,
    c: 2.997_924_58e8,
    mu0: 1.256_637_062_12e-6,
    eps0: 8.854_187_812_8e-12,
};

/// Energy of one photon at `wavelength_um`, in joules (`ħω = 2πħc/λ`).
pub fn photon_energy(wavelength_um: f64) -> f64 {
    let omega = angular_frequency(wavelength_um);
    CONSTANTS.hbar * omega
}

/// Angular frequency in rad/s of light with vacuum wavelength `wavelength_um`.
pub fn angular_frequency(wavelength_um: f64) -> f64 {
    2.0 * PI * CONSTANTS.c / (wavelength_um * 1e-6)
}

fn require(cond: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(PhysicsError::Domain(msg()))
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    require(v.is_finite() && v > 0.0, || {
        format!("{name} must be finite and > 0, got {v}")
    })
}

fn non_negative(name: &str, v: f64) -> Result<()> {
    require(v.is_finite() && v >= 0.0, || {
        format!("{name} must be finite and >= 0, got {v}")
    })
}

fn unit_interval(name: &str, v: f64) -> Result<()> {
    require(v.is_finite() && v > 0.0 && v <= 1.0, || {
        format!("{name} must be in (0, 1], got {v}")
    })
}

/// Single-pass transmittance of the gas plume, guaranteed to lie in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Transmittance(f64);

impl Transmittance {
    pub const UNITY: Transmittance = Transmittance(1.0);

    pub fn new(value: f64) -> Result<Self> {
        require(value.is_finite() && (0.0..=1.0).contains(&value), || {
            format!("transmittance must be in [0, 1], got {value}")
        })?;
        Ok(Self(value))
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn optical_depth(self) -> f64 {
        -self.0.ln()
    }
}

impl TryFrom<f64> for Transmittance {
    type Error = PhysicsError;

    fn try_from(value: f64) -> Result<Self> {
        Self::new(value)
    }
}

impl From<Transmittance> for f64 {
    fn from(t: Transmittance) -> f64 {
        t.0
    }
}

/// Nonlinear crystal and pump parameters entering the SPDC gain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrystalParams {
    /// Effective second-order nonlinearity, m/V.
    pub chi2: f64,
    /// Crystal length, m.
    pub length: f64,
    /// Signal angular frequency, rad/s.
    pub omega_s: f64,
    /// Signal wave-vector modulus, rad/m.
    pub k_s: f64,
    /// Pump intensity, W/m².
    pub pump_intensity: f64,
}

impl CrystalParams {
    pub fn validate(&self) -> Result<()> {
        positive("chi2", self.chi2)?;
        positive("length", self.length)?;
        positive("omega_s", self.omega_s)?;
        positive("k_s", self.k_s)?;
        // A dark pump is allowed; it simply yields zero gain.
        non_negative("pump_intensity", self.pump_intensity)
    }
}

/// Parameters of the sensing-without-detection instrument.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SensorConfig {
    /// Detector quantum efficiency.
    pub eta: f64,
    /// Single-pass parametric gain `G`.
    pub gain: f64,
    /// Round-trip return efficiency of the target, geometric losses included.
    pub alpha: f64,
    /// Integration time, s.
    pub t_int: f64,
    /// Idler (stimulating laser) power, W.
    pub p_idler: f64,
    /// Signal wavelength, µm.
    pub lambda_signal: f64,
    /// Idler wavelength, µm.
    pub lambda_idler: f64,
}

impl Default for SensorConfig {
    /// Lab-scale operating point with a Lambertian target a few tens of
    /// metres away, probing the 3.221 µm methane line.
    fn default() -> Self {
        Self {
            eta: 0.1,
            gain: 1e-8,
            alpha: 1e-8,
            t_int: 1.0,
            p_idler: 0.02,
            lambda_signal: 1.589,
            lambda_idler: 3.221,
        }
    }
}

impl SensorConfig {
    pub fn validate(&self) -> Result<()> {
        unit_interval("eta", self.eta)?;
        non_negative("gain", self.gain)?;
        unit_interval("alpha", self.alpha)?;
        positive("t_int", self.t_int)?;
        positive("p_idler", self.p_idler)?;
        positive("lambda_signal", self.lambda_signal)?;
        positive("lambda_idler", self.lambda_idler)?;
        require(self.lambda_signal < self.lambda_idler, || {
            format!(
                "lambda_signal ({} µm) must be shorter than lambda_idler ({} µm)",
                self.lambda_signal, self.lambda_idler
            )
        })
    }

    /// Energy of a detected signal photon, J.
    pub fn signal_photon_energy(&self) -> f64 {
        photon_energy(self.lambda_signal)
    }

    /// The direct-detection instrument that shares this sensor's detector,
    /// target, integration time, laser power and detected wavelength.
    pub fn matched_direct(&self) -> DirectConfig {
        DirectConfig {
            eta: self.eta,
            alpha: self.alpha,
            t_int: self.t_int,
            power: self.p_idler,
            lambda_probe: self.lambda_signal,
        }
    }
}

/// Parameters of a direct-detection differential absorption instrument.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DirectConfig {
    pub eta: f64,
    pub alpha: f64,
    /// Integration time, s.
    pub t_int: f64,
    /// Laser power, W (same on and off resonance).
    pub power: f64,
    /// Probe wavelength, µm.
    pub lambda_probe: f64,
}

impl DirectConfig {
    pub fn validate(&self) -> Result<()> {
        unit_interval("eta", self.eta)?;
        unit_interval("alpha", self.alpha)?;
        positive("t_int", self.t_int)?;
        positive("power", self.power)?;
        positive("lambda_probe", self.lambda_probe)
    }
}

/// Geometry and composition of the gas plume.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlumeState {
    /// Plume depth `Z`, m.
    pub depth: f64,
    /// Dry-air volume mixing ratio of methane.
    pub mixing_ratio: f64,
    /// Dry-air number density, molecules/m³.
    pub n_air: f64,
}

impl Default for PlumeState {
    fn default() -> Self {
        Self {
            depth: 1.0,
            mixing_ratio: 0.0,
            n_air: DEFAULT_N_AIR,
        }
    }
}

impl PlumeState {
    pub fn validate(&self) -> Result<()> {
        non_negative("depth", self.depth)?;
        non_negative("mixing_ratio", self.mixing_ratio)?;
        positive("n_air", self.n_air)
    }

    /// Methane number density, molecules/m³.
    pub fn methane_density(&self) -> f64 {
        self.mixing_ratio * self.n_air
    }

    pub fn optical_depth(&self, sigma: f64) -> f64 {
        self.depth * self.methane_density() * sigma
    }
}

/// Conditions under which the weak-gain homodyne picture loses accuracy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RegimeWarning {
    HighGain { gain: f64 },
    StrongReturn { ratio: f64 },
}

impl fmt::Display for RegimeWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RegimeWarning::HighGain { gain } => write!(
                f,
                "gain {gain:e} exceeds {HIGH_GAIN_THRESHOLD:e}; higher-order gain terms are neglected"
            ),
            RegimeWarning::StrongReturn { ratio } => write!(
                f,
                "return ratio alpha*T^2 = {ratio:.3} exceeds {STRONG_RETURN_THRESHOLD}; \
                 the local-oscillator approximation degrades"
            ),
        }
    }
}

pub fn regime_warnings(gain: f64, alpha: f64, t: Transmittance) -> Vec<RegimeWarning> {
    let mut out = Vec::new();
    if gain > HIGH_GAIN_THRESHOLD {
        out.push(RegimeWarning::HighGain { gain });
    }
    let ratio = alpha * t.value().powi(2);
    if ratio > STRONG_RETURN_THRESHOLD {
        out.push(RegimeWarning::StrongReturn { ratio });
    }
    out
}

/// Dimensionless single-pass gain `G = (μ₀ε₀χ⁽²⁾ω_s²L / 2k_s)²·I_p`.
///
/// Standalone helper; nothing else in the crate derives `G` from crystal
/// parameters.
pub fn spdc_gain(crystal: &CrystalParams) -> Result<f64> {
    crystal.validate()?;
    let k = CONSTANTS.mu0 * CONSTANTS.eps0 * crystal.chi2 * crystal.omega_s.powi(2) * crystal.length
        / (2.0 * crystal.k_s);
    Ok(k * k * crystal.pump_intensity)
}

/// First crystal pass: returns `(I_s1, I_i1)`.
pub fn first_pass(gain: f64, idler_intensity: f64) -> (f64, f64) {
    (gain * idler_intensity, idler_intensity * (1.0 + gain))
}

/// Second crystal pass after the idler has crossed the plume twice and
/// returned from the target.
pub fn second_pass(gain: f64, idler_intensity: f64, alpha: f64, t: Transmittance) -> f64 {
    gain * idler_intensity * alpha * t.value().powi(2)
}

/// Interference of the local oscillator with the second-pass field at
/// relative phase `phase = φ_p − φ_i − φ_s`.
pub fn homodyne_intensity(i_lo: f64, i_sig: f64, phase: f64) -> f64 {
    i_lo + i_sig + 2.0 * (i_lo * i_sig).sqrt() * phase.cos()
}

/// Visibility of a two-beam fringe with intensity ratio `r = I_sig/I_LO`.
pub fn fringe_visibility(r: f64) -> f64 {
    2.0 * r.sqrt() / (1.0 + r)
}

/// Max-minus-min fringe counts from mean powers, each extremum integrated
/// for `t_int/2`.
pub fn fringe_amplitude(eta: f64, t_int: f64, photon_energy: f64, p_sig: f64, p_lo: f64) -> f64 {
    2.0 * eta * t_int / photon_energy * (p_sig * p_lo).sqrt()
}

/// Shot-noise variance of the fringe amplitude, local oscillator dominated.
pub fn fringe_variance(eta: f64, t_int: f64, photon_energy: f64, p_lo: f64) -> f64 {
    eta * t_int * p_lo / photon_energy
}

/// Mean number of detected photons produced by the second pass.
pub fn mean_signal_photons(cfg: &SensorConfig, t: Transmittance) -> f64 {
    cfg.eta * cfg.gain * cfg.alpha * t.value().powi(2) * cfg.t_int * cfg.p_idler
        / cfg.signal_photon_energy()
}

/// Mean number of detected local-oscillator photons over the integration time.
pub fn mean_lo_photons(cfg: &SensorConfig) -> f64 {
    cfg.eta * cfg.gain * cfg.t_int * cfg.p_idler / cfg.signal_photon_energy()
}

pub fn snr_without_detection(cfg: &SensorConfig, t: Transmittance) -> Result<f64> {
    let n = mean_signal_photons(cfg, t);
    if n <= 0.0 {
        return Err(PhysicsError::Degenerate(
            "mean signal photon number is zero".into(),
        ));
    }
    Ok(2.0 * n.sqrt())
}

pub fn mean_direct_photons(cfg: &DirectConfig, t: Transmittance) -> f64 {
    cfg.eta * cfg.alpha * t.value().powi(2) * cfg.t_int * cfg.power / photon_energy(cfg.lambda_probe)
}

pub fn snr_direct(cfg: &DirectConfig, t: Transmittance) -> Result<f64> {
    let n = mean_direct_photons(cfg, t);
    if n <= 0.0 {
        return Err(PhysicsError::Degenerate(
            "mean direct photon number is zero".into(),
        ));
    }
    Ok(n.sqrt())
}

/// Beer–Lambert single-pass transmittance through the plume.
pub fn transmittance(plume: &PlumeState, sigma: f64) -> Result<Transmittance> {
    plume.validate()?;
    non_negative("sigma", sigma)?;
    Transmittance::new((-plume.optical_depth(sigma)).exp())
}

fn positive_count(name: &str, v: f64) -> Result<()> {
    require(v.is_finite() && v > 0.0, || {
        format!("{name} must be positive, got {v}")
    })
}

/// Differential absorption optical depth from fringe amplitudes, which
/// scale with the single-pass transmittance.
pub fn daod_from_fringe_amplitudes(r_on: f64, r_off: f64) -> Result<f64> {
    positive_count("r_on", r_on)?;
    positive_count("r_off", r_off)?;
    Ok((r_off / r_on).ln())
}

/// Differential absorption optical depth from direct photon counts, which
/// scale with the round-trip transmittance `T²`.
pub fn daod_direct(n_on: f64, n_off: f64) -> Result<f64> {
    positive_count("n_on", n_on)?;
    positive_count("n_off", n_off)?;
    Ok(0.5 * (n_off / n_on).ln())
}

fn differential(sigma: &CrossSectionPair) -> Result<f64> {
    let d = sigma.differential();
    if !(d > 0.0) {
        return Err(PhysicsError::Degenerate(format!(
            "differential cross section sigma_on - sigma_off is {d:e}, must be > 0"
        )));
    }
    Ok(d)
}

/// Column factor `Z·n_air·Δσ` converting a mixing ratio to a DAOD.
fn column_factor(depth: f64, n_air: f64, sigma: &CrossSectionPair) -> Result<f64> {
    positive("plume depth", depth)?;
    positive("n_air", n_air)?;
    Ok(depth * n_air * differential(sigma)?)
}

pub fn mixing_ratio_from_daod(
    daod: f64,
    depth: f64,
    n_air: f64,
    sigma: &CrossSectionPair,
) -> Result<f64> {
    Ok(daod / column_factor(depth, n_air, sigma)?)
}

/// Mixing-ratio precision from the on/off SNRs by first-order error
/// propagation through the DAOD.
pub fn propagated_sensitivity(
    snr_on: f64,
    snr_off: f64,
    depth: f64,
    n_air: f64,
    sigma: &CrossSectionPair,
) -> Result<f64> {
    positive("snr_on", snr_on)?;
    positive("snr_off", snr_off)?;
    let rel = (snr_on.powi(-2) + snr_off.powi(-2)).sqrt();
    Ok(rel / column_factor(depth, n_air, sigma)?)
}

/// Minimum detectable mixing ratio of the nonlinear interferometer in the
/// optically thin limit `T_on = T_off ≈ 1`.
pub fn sensitivity_without_detection(
    cfg: &SensorConfig,
    depth: f64,
    n_air: f64,
    sigma: &CrossSectionPair,
) -> Result<f64> {
    cfg.validate()?;
    let col = column_factor(depth, n_air, sigma)?;
    let flux = cfg.eta * cfg.gain * cfg.alpha * cfg.t_int * cfg.p_idler;
    if !(flux > 0.0) {
        return Err(PhysicsError::Degenerate(
            "eta*G*alpha*T_int*P_i vanishes (no second-pass signal)".into(),
        ));
    }
    Ok((cfg.signal_photon_energy() / (2.0 * flux)).sqrt() / col)
}

/// Minimum detectable mixing ratio of direct differential absorption
/// sensing in the optically thin limit.
pub fn sensitivity_direct(
    cfg: &DirectConfig,
    depth: f64,
    n_air: f64,
    sigma: &CrossSectionPair,
) -> Result<f64> {
    cfg.validate()?;
    let col = column_factor(depth, n_air, sigma)?;
    let flux = cfg.eta * cfg.alpha * cfg.t_int * cfg.power;
    Ok((photon_energy(cfg.lambda_probe) / (2.0 * flux)).sqrt() / col)
}

/// Ratio of direct to interferometric sensitivity,
/// `(Δσ_MIR / Δσ_SWIR)·√G`. Above 1 the interferometer is more sensitive.
pub fn relative_sensitivity(
    sigma_mir: &CrossSectionPair,
    sigma_swir: &CrossSectionPair,
    gain: f64,
) -> Result<f64> {
    non_negative("gain", gain)?;
    let ratio = differential(sigma_mir)? / differential(sigma_swir)?;
    Ok(ratio * gain.sqrt())
}

/// Gain at which both methods reach the same sensitivity.
pub fn crossover_gain(sigma_mir: &CrossSectionPair, sigma_swir: &CrossSectionPair) -> Result<f64> {
    let ratio = differential(sigma_swir)? / differential(sigma_mir)?;
    Ok(ratio * ratio)
}

/// Signal wavelength from energy conservation, `1/λ_s = 1/λ_p − 1/λ_i`.
pub fn signal_wavelength(lambda_pump: f64, lambda_idler: f64) -> Result<f64> {
    positive("lambda_pump", lambda_pump)?;
    positive("lambda_idler", lambda_idler)?;
    require(lambda_pump < lambda_idler, || {
        format!("pump wavelength {lambda_pump} µm must be shorter than idler {lambda_idler} µm")
    })?;
    Ok(1.0 / (1.0 / lambda_pump - 1.0 / lambda_idler))
}
