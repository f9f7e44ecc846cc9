//! Parameter sweeps of the sensitivity budget over gain and target return,
//! with CSV and SVG output, plus Monte Carlo checks of the error budget.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::physics::{self, PhysicsError, SensorConfig, DEFAULT_N_AIR};
use crate::spectra::{paper_cross_sections, CrossSectionPair};

mod monte_carlo;
mod plot;

pub use monte_carlo::{run_monte_carlo, MonteCarloResult, MonteCarloSpec};
pub use plot::{emit_plot, PlotKind};

#[derive(Debug, Error)]
pub enum SweepError {
    #[error("cell G={gain:e}, alpha={alpha:e}: {source}")]
    Cell {
        gain: f64,
        alpha: f64,
        #[source]
        source: PhysicsError,
    },
    #[error(transparent)]
    Physics(#[from] PhysicsError),
    #[error("invalid sweep: {0}")]
    Invalid(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("sweep CSV: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, SweepError>;

/// Logarithmically spaced gain values from `min` to `max` inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GainGrid {
    pub min: f64,
    pub max: f64,
    pub points_per_decade: u32,
}

impl Default for GainGrid {
    fn default() -> Self {
        Self { min: 1e-8, max: 1e-2, points_per_decade: 10 }
    }
}

impl GainGrid {
    pub fn validate(&self) -> Result<()> {
        if !(self.min.is_finite() && self.max.is_finite() && self.min > 0.0 && self.min < self.max) {
            return Err(SweepError::Invalid(format!(
                "gain grid needs 0 < min < max, got min={} max={}",
                self.min, self.max
            )));
        }
        if self.points_per_decade == 0 {
            return Err(SweepError::Invalid("points_per_decade must be >= 1".into()));
        }
        Ok(())
    }

    /// Grid values. Points sit at `min·10^(i/ppd)`; `max` is included when it
    /// falls on the lattice.
    pub fn values(&self) -> Vec<f64> {
        let lo = self.min.log10();
        let decades = self.max.log10() - lo;
        let ppd = f64::from(self.points_per_decade);
        let count = (decades * ppd + 1e-9).floor() as usize + 1;
        (0..count).map(|i| 10f64.powf(lo + i as f64 / ppd)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSpec {
    pub gain_grid: GainGrid,
    pub alpha_values: Vec<f64>,
    pub base_sensor: SensorConfig,
    /// m
    pub plume_depth: f64,
    /// molecules/m³
    pub n_air: f64,
    pub sigma_mir: CrossSectionPair,
    pub sigma_swir: CrossSectionPair,
}

impl Default for SweepSpec {
    /// G from 10⁻⁸ to 10⁻² and α from a distant Lambertian target to a
    /// perfect retroreflector.
    fn default() -> Self {
        let (sigma_mir, sigma_swir) = paper_cross_sections();
        Self {
            gain_grid: GainGrid::default(),
            alpha_values: vec![1e-8, 1e-6, 1e-4, 1e-2, 1.0],
            base_sensor: SensorConfig::default(),
            plume_depth: 1.0,
            n_air: DEFAULT_N_AIR,
            sigma_mir,
            sigma_swir,
        }
    }
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        self.gain_grid.validate()?;
        if self.alpha_values.is_empty() {
            return Err(SweepError::Invalid("alpha_values is empty".into()));
        }
        if let Some(a) = self.alpha_values.iter().find(|&&a| !(a > 0.0 && a <= 1.0)) {
            return Err(SweepError::Invalid(format!("alpha value {a} outside (0, 1]")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub gain: f64,
    pub alpha: f64,
    /// Interferometer sensitivity, ppm·m.
    pub delta_x_nd: f64,
    /// Direct-detection sensitivity, ppm·m.
    pub delta_x_direct: f64,
    pub r_s: f64,
}

/// Mixing-ratio precision times path depth, in ppm·m.
fn ppm_m(delta_x: f64, depth: f64) -> f64 {
    delta_x * depth * 1e6
}

fn evaluate_cell(spec: &SweepSpec, gain: f64, alpha: f64) -> std::result::Result<SweepRow, PhysicsError> {
    let sensor = SensorConfig { gain, alpha, ..spec.base_sensor };
    let nd = physics::sensitivity_without_detection(&sensor, spec.plume_depth, spec.n_air, &spec.sigma_mir)?;
    let direct = physics::sensitivity_direct(&sensor.matched_direct(), spec.plume_depth, spec.n_air, &spec.sigma_swir)?;
    let r_s = physics::relative_sensitivity(&spec.sigma_mir, &spec.sigma_swir, gain)?;
    Ok(SweepRow {
        gain,
        alpha,
        delta_x_nd: ppm_m(nd, spec.plume_depth),
        delta_x_direct: ppm_m(direct, spec.plume_depth),
        r_s,
    })
}

/// Evaluate every (G, α) cell. The direct baseline shares the sensor's
/// detector, target, integration time, power and detected wavelength.
/// Rows come back ordered by α, then G.
pub fn run_sweep(spec: &SweepSpec) -> Result<Vec<SweepRow>> {
    spec.validate()?;
    let gains = spec.gain_grid.values();
    let mut rows = Vec::with_capacity(gains.len() * spec.alpha_values.len());
    for &alpha in &spec.alpha_values {
        for &gain in &gains {
            let row = evaluate_cell(spec, gain, alpha).map_err(|source| SweepError::Cell { gain, alpha, source })?;
            rows.push(row);
        }
    }
    rows.sort_by(|a, b| a.alpha.total_cmp(&b.alpha).then(a.gain.total_cmp(&b.gain)));
    Ok(rows)
}

/// Gain at which `r_s` crosses 1, interpolated log-log between the two
/// bracketing grid cells of the first α in `rows`.
pub fn rs_crossover(rows: &[SweepRow]) -> Option<f64> {
    let alpha = rows.first()?.alpha;
    let mut series: Vec<&SweepRow> = rows.iter().filter(|r| r.alpha == alpha).collect();
    series.sort_by(|a, b| a.gain.total_cmp(&b.gain));
    series.windows(2).find_map(|w| {
        let (a, b) = (w[0], w[1]);
        if a.r_s <= 1.0 && b.r_s >= 1.0 && a.r_s > 0.0 {
            let (x0, x1) = (a.gain.log10(), b.gain.log10());
            let (y0, y1) = (a.r_s.log10(), b.r_s.log10());
            if y1 == y0 {
                return Some(a.gain);
            }
            Some(10f64.powf(x0 + (0.0 - y0) * (x1 - x0) / (y1 - y0)))
        } else {
            None
        }
    })
}

pub const CSV_HEADER: &str = "gain,alpha,delta_x_nd_ppm_m,delta_x_direct_ppm_m,r_s";

fn sci(v: f64) -> String {
    format!("{v:.8e}")
}

/// Write rows as CSV (9 significant digits, LF endings); returns bytes written.
pub fn emit_csv<W: Write>(rows: &[SweepRow], mut out: W) -> Result<usize> {
    let mut text = String::with_capacity(64 * (rows.len() + 1));
    text.push_str(CSV_HEADER);
    text.push('\n');
    for r in rows {
        let fields = [r.gain, r.alpha, r.delta_x_nd, r.delta_x_direct, r.r_s].map(sci);
        text.push_str(&fields.join(","));
        text.push('\n');
    }
    out.write_all(text.as_bytes())?;
    out.flush()?;
    Ok(text.len())
}

pub fn read_csv<R: Read>(input: R) -> Result<Vec<SweepRow>> {
    let mut reader = csv::Reader::from_reader(input);
    let header: Vec<String> = reader.headers()?.iter().map(String::from).collect();
    if header.join(",") != CSV_HEADER {
        return Err(SweepError::Invalid(format!("unexpected header {header:?}")));
    }
    let mut rows = Vec::new();
    for rec in reader.deserialize() {
        let (gain, alpha, delta_x_nd, delta_x_direct, r_s): (f64, f64, f64, f64, f64) = rec?;
        rows.push(SweepRow { gain, alpha, delta_x_nd, delta_x_direct, r_s });
    }
    Ok(rows)
}
