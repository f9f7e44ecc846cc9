//! Sensitivity model and simulator for methane sensing with a double-pass
//! nonlinear interferometer.
//!
//! The idler beam probes the gas at a mid-infrared methane line while only
//! the short-wave infrared signal beam is detected. Absorption on the idler
//! path shows up as a loss of fringe visibility in the signal.
//!
//! * [`spectra`]: HITRAN line lists and Lorentzian cross sections.
//! * [`physics`]: closed-form gain, SNR and sensitivity model, including the
//!   direct-detection baseline.
//! * [`fringe`]: shot-noise fringe scans and visibility estimation.
//! * [`sweep`]: gain/return sweeps, CSV/SVG output and Monte Carlo checks.

pub mod fringe;
pub mod physics;
pub mod random;
pub mod spectra;
pub mod sweep;

pub use physics::{PhysicsError, PlumeState, SensorConfig, Transmittance};
pub use spectra::{CrossSectionPair, HitranLine};
