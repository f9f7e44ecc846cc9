//! Monte Carlo check of the propagated mixing-ratio precision.
//!
//! Each trial integrates the fringe maximum and minimum for `T_int/2` each,
//! at both idler wavelengths, draws Poisson counts, and inverts the resulting
//! amplitudes to a mixing ratio. The spread of those mixing ratios is the
//! empirical precision.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{Result, SweepError};
use crate::physics::{self, PhysicsError, PlumeState, SensorConfig};
use crate::random;
use crate::spectra::CrossSectionPair;

const BOOTSTRAP_RESAMPLES: u64 = 200;
const BOOTSTRAP_TAG: u64 = 0xB007_57A9_0000_0001;

/// Smallest mean count accepted for the weakest fringe extremum and for the
/// second-pass signal.
pub const MIN_MEAN_COUNTS: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloSpec {
    pub sensor: SensorConfig,
    pub plume: PlumeState,
    pub sigma_mir: CrossSectionPair,
    pub trials: usize,
    pub rng_seed: u64,
    /// Multiplies every expected count, as a longer integration would.
    #[serde(default = "one")]
    pub counts_scale: f64,
}

fn one() -> f64 {
    1.0
}

impl MonteCarloSpec {
    pub const MIN_TRIALS: usize = 100;
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloResult {
    pub trials: usize,
    /// Trials discarded because a fringe amplitude came out non-positive.
    pub rejected: usize,
    pub mean_x: f64,
    /// Empirical standard deviation of the retrieved mixing ratio.
    pub std_x: f64,
    /// Bootstrap standard error of `std_x`.
    pub std_x_uncertainty: f64,
    /// Closed-form precision in the optically thin limit.
    pub analytic_delta_x: f64,
    /// First-order propagated precision at the plume's actual transmittances.
    pub propagated_delta_x: f64,
    /// Mean counts of the weakest fringe extremum.
    pub min_extremum_counts: f64,
}

/// Mean counts at the fringe maximum and minimum, each integrated for
/// half of the total time.
fn extremum_means(n_lo: f64, n_sig: f64) -> (f64, f64) {
    let cross = 2.0 * (n_lo * n_sig).sqrt();
    (0.5 * (n_lo + n_sig + cross), 0.5 * (n_lo + n_sig - cross))
}

fn sample_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

pub fn run_monte_carlo(spec: &MonteCarloSpec) -> Result<MonteCarloResult> {
    if spec.trials < MonteCarloSpec::MIN_TRIALS {
        return Err(SweepError::Invalid(format!(
            "trials must be >= {}, got {}",
            MonteCarloSpec::MIN_TRIALS,
            spec.trials
        )));
    }
    if !(spec.counts_scale.is_finite() && spec.counts_scale > 0.0) {
        return Err(SweepError::Invalid(format!("counts_scale must be > 0, got {}", spec.counts_scale)));
    }
    spec.sensor.validate()?;
    spec.plume.validate()?;

    let t_on = physics::transmittance(&spec.plume, spec.sigma_mir.sigma_on)?;
    let t_off = physics::transmittance(&spec.plume, spec.sigma_mir.sigma_off)?;
    let n_lo = physics::mean_lo_photons(&spec.sensor) * spec.counts_scale;
    let n_sig_on = physics::mean_signal_photons(&spec.sensor, t_on) * spec.counts_scale;
    let n_sig_off = physics::mean_signal_photons(&spec.sensor, t_off) * spec.counts_scale;
    let (max_on, min_on) = extremum_means(n_lo, n_sig_on);
    let (max_off, min_off) = extremum_means(n_lo, n_sig_off);
    let min_extremum_counts = min_on.min(min_off);
    if !(n_sig_on >= MIN_MEAN_COUNTS && min_extremum_counts >= MIN_MEAN_COUNTS) {
        return Err(PhysicsError::Degenerate(format!(
            "mean counts too low for Gaussian error propagation: signal {n_sig_on:.3e}, \
             weakest fringe extremum {min_extremum_counts:.3e} (need >= {MIN_MEAN_COUNTS})"
        ))
        .into());
    }

    let depth = spec.plume.depth;
    let n_air = spec.plume.n_air;
    let per_daod = physics::mixing_ratio_from_daod(1.0, depth, n_air, &spec.sigma_mir)?;

    let mut xs = Vec::with_capacity(spec.trials);
    let mut rejected = 0;
    for trial in 0..spec.trials as u64 {
        let mut rng = random::stream_rng(spec.rng_seed, trial);
        let mut amplitude = |hi: f64, lo: f64| {
            random::poisson(&mut rng, hi) as f64 - random::poisson(&mut rng, lo) as f64
        };
        let r_on = amplitude(max_on, min_on);
        let r_off = amplitude(max_off, min_off);
        match physics::daod_from_fringe_amplitudes(r_on, r_off) {
            Ok(daod) => xs.push(daod * per_daod),
            Err(_) => rejected += 1,
        }
    }
    if xs.len() < 2 {
        return Err(PhysicsError::Degenerate("every trial produced a non-positive fringe amplitude".into()).into());
    }
    let (mean_x, std_x) = sample_std(&xs);

    let mut boot_rng = random::stream_rng(random::mix64(spec.rng_seed ^ BOOTSTRAP_TAG), 0);
    let mut resample = vec![0.0; xs.len()];
    let boot: Vec<f64> = (0..BOOTSTRAP_RESAMPLES)
        .map(|_| {
            for slot in resample.iter_mut() {
                *slot = xs[boot_rng.random_range(0..xs.len())];
            }
            sample_std(&resample).1
        })
        .collect();
    let (_, std_x_uncertainty) = sample_std(&boot);

    let scaled = SensorConfig { t_int: spec.sensor.t_int * spec.counts_scale, ..spec.sensor };
    let analytic_delta_x = physics::sensitivity_without_detection(&scaled, depth, n_air, &spec.sigma_mir)?;
    let propagated_delta_x = physics::propagated_sensitivity(
        2.0 * n_sig_on.sqrt(),
        2.0 * n_sig_off.sqrt(),
        depth,
        n_air,
        &spec.sigma_mir,
    )?;

    Ok(MonteCarloResult {
        trials: spec.trials,
        rejected,
        mean_x,
        std_x,
        std_x_uncertainty,
        analytic_delta_x,
        propagated_delta_x,
        min_extremum_counts,
    })
}
