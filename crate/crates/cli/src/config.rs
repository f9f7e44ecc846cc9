//! Run configuration: a JSON document with lower_snake_case keys. Every
//! field is optional; anything left out falls back to the reference
//! operating point (3.221 µm idler, 1.589 µm signal, η = 0.1, G = 10⁻⁸,
//! α = 10⁻⁸, T_int = 1 s, P_i = 20 mW, n_air = 2.53×10²⁵ m⁻³).

use std::path::Path;

use nlint::fringe::FringeScanConfig;
use nlint::physics::DirectConfig;
use nlint::spectra::{paper_cross_sections, EnvironmentConditions};
use nlint::sweep::{GainGrid, MonteCarloSpec, SweepSpec};
use nlint::{CrossSectionPair, PlumeState, SensorConfig};
use serde::Deserialize;

use crate::Failure;

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PairOverride {
    pub sigma_on: Option<f64>,
    pub sigma_off: Option<f64>,
    pub lambda_on: Option<f64>,
    pub lambda_off: Option<f64>,
}

impl PairOverride {
    fn apply(&self, base: CrossSectionPair) -> CrossSectionPair {
        CrossSectionPair {
            sigma_on: self.sigma_on.unwrap_or(base.sigma_on),
            sigma_off: self.sigma_off.unwrap_or(base.sigma_off),
            lambda_on: self.lambda_on.unwrap_or(base.lambda_on),
            lambda_off: self.lambda_off.unwrap_or(base.lambda_off),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FringeSection {
    /// Defaults to the sensor's idler wavelength.
    pub lambda_idler: Option<f64>,
    /// Defaults to three idler wavelengths.
    pub scan_length: Option<f64>,
    pub steps: usize,
    pub counts_scale: f64,
    pub phase_offset: f64,
    pub rng_seed: u64,
    pub transmittance: f64,
}

impl Default for FringeSection {
    fn default() -> Self {
        Self {
            lambda_idler: None,
            scan_length: None,
            steps: 100,
            counts_scale: 1000.0,
            phase_offset: 0.0,
            rng_seed: 1,
            transmittance: 1.0,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    pub gain_grid: GainGrid,
    pub alpha_values: Vec<f64>,
}

impl Default for SweepSection {
    fn default() -> Self {
        let spec = SweepSpec::default();
        Self { gain_grid: spec.gain_grid, alpha_values: spec.alpha_values }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MonteCarloSection {
    pub trials: usize,
    pub rng_seed: u64,
    pub counts_scale: f64,
}

impl Default for MonteCarloSection {
    fn default() -> Self {
        Self { trials: 10_000, rng_seed: 1, counts_scale: 1.0 }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub sensor: SensorConfig,
    pub plume: PlumeState,
    pub sigma_mir: PairOverride,
    pub sigma_swir: PairOverride,
    /// Direct-detection instrument; defaults to one matched to `sensor`.
    pub direct: Option<DirectConfig>,
    pub environment: EnvironmentConditions,
    pub fringe: FringeSection,
    pub sweep: SweepSection,
    pub monte_carlo: MonteCarloSection,
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, Failure> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path).map_err(|e| Failure::io(format!("{}: {e}", path.display())))?;
        Self::from_json(&text).map_err(|f| f.context(&path.display().to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self, Failure> {
        from_json(text)
    }

    pub fn sigma_mir(&self) -> CrossSectionPair {
        self.sigma_mir.apply(paper_cross_sections().0)
    }

    pub fn sigma_swir(&self) -> CrossSectionPair {
        self.sigma_swir.apply(paper_cross_sections().1)
    }

    pub fn direct(&self) -> DirectConfig {
        self.direct.unwrap_or_else(|| self.sensor.matched_direct())
    }

    /// Check every field after defaulting; errors carry JSON paths.
    pub fn validate(&self) -> Result<(), Failure> {
        let s = &self.sensor;
        unit("$.sensor.eta", s.eta)?;
        at_least_zero("$.sensor.gain", s.gain)?;
        unit("$.sensor.alpha", s.alpha)?;
        positive("$.sensor.t_int", s.t_int)?;
        positive("$.sensor.p_idler", s.p_idler)?;
        positive("$.sensor.lambda_signal", s.lambda_signal)?;
        positive("$.sensor.lambda_idler", s.lambda_idler)?;
        if s.lambda_signal >= s.lambda_idler {
            return Err(Failure::domain(format!(
                "$.sensor.lambda_signal: must be shorter than lambda_idler ({} µm), got {} µm",
                s.lambda_idler, s.lambda_signal
            )));
        }

        let p = &self.plume;
        at_least_zero("$.plume.depth", p.depth)?;
        at_least_zero("$.plume.mixing_ratio", p.mixing_ratio)?;
        positive("$.plume.n_air", p.n_air)?;

        for (name, pair) in [("sigma_mir", self.sigma_mir()), ("sigma_swir", self.sigma_swir())] {
            pair.validate().map_err(|(field, msg)| Failure::domain(format!("$.{name}.{field}: {msg}")))?;
        }

        if let Some(d) = &self.direct {
            unit("$.direct.eta", d.eta)?;
            unit("$.direct.alpha", d.alpha)?;
            positive("$.direct.t_int", d.t_int)?;
            positive("$.direct.power", d.power)?;
            positive("$.direct.lambda_probe", d.lambda_probe)?;
        }

        let env = &self.environment;
        positive("$.environment.pressure", env.pressure)?;
        positive("$.environment.temperature", env.temperature)?;

        let f = &self.fringe;
        if let Some(l) = f.lambda_idler {
            positive("$.fringe.lambda_idler", l)?;
        }
        if let Some(l) = f.scan_length {
            positive("$.fringe.scan_length", l)?;
        }
        if f.steps < FringeScanConfig::MIN_STEPS {
            return Err(Failure::domain(format!(
                "$.fringe.steps: must be >= {}, got {}",
                FringeScanConfig::MIN_STEPS,
                f.steps
            )));
        }
        at_least_zero("$.fringe.counts_scale", f.counts_scale)?;
        if !(0.0..=1.0).contains(&f.transmittance) {
            return Err(Failure::domain(format!("$.fringe.transmittance: must be in [0, 1], got {}", f.transmittance)));
        }

        let g = &self.sweep.gain_grid;
        positive("$.sweep.gain_grid.min", g.min)?;
        positive("$.sweep.gain_grid.max", g.max)?;
        if g.min >= g.max {
            return Err(Failure::domain(format!("$.sweep.gain_grid.max: must exceed min ({}), got {}", g.min, g.max)));
        }
        if g.points_per_decade == 0 {
            return Err(Failure::domain("$.sweep.gain_grid.points_per_decade: must be >= 1".into()));
        }
        if self.sweep.alpha_values.is_empty() {
            return Err(Failure::domain("$.sweep.alpha_values: must not be empty".into()));
        }
        for (i, &a) in self.sweep.alpha_values.iter().enumerate() {
            unit(&format!("$.sweep.alpha_values[{i}]"), a)?;
        }

        let mc = &self.monte_carlo;
        if mc.trials < MonteCarloSpec::MIN_TRIALS {
            return Err(Failure::domain(format!(
                "$.monte_carlo.trials: must be >= {}, got {}",
                MonteCarloSpec::MIN_TRIALS,
                mc.trials
            )));
        }
        positive("$.monte_carlo.counts_scale", mc.counts_scale)?;
        Ok(())
    }

    pub fn fringe_config(&self) -> FringeScanConfig {
        let lambda = self.fringe.lambda_idler.unwrap_or(self.sensor.lambda_idler);
        FringeScanConfig {
            sensor: self.sensor,
            lambda_idler: lambda,
            scan_length: self.fringe.scan_length.unwrap_or(3.0 * lambda),
            steps: self.fringe.steps,
            counts_scale: self.fringe.counts_scale,
            phase_offset: self.fringe.phase_offset,
            rng_seed: self.fringe.rng_seed,
        }
    }

    pub fn sweep_spec(&self) -> SweepSpec {
        SweepSpec {
            gain_grid: self.sweep.gain_grid,
            alpha_values: self.sweep.alpha_values.clone(),
            base_sensor: self.sensor,
            plume_depth: self.plume.depth,
            n_air: self.plume.n_air,
            sigma_mir: self.sigma_mir(),
            sigma_swir: self.sigma_swir(),
        }
    }

    pub fn monte_carlo_spec(&self) -> MonteCarloSpec {
        MonteCarloSpec {
            sensor: self.sensor,
            plume: self.plume,
            sigma_mir: self.sigma_mir(),
            trials: self.monte_carlo.trials,
            rng_seed: self.monte_carlo.rng_seed,
            counts_scale: self.monte_carlo.counts_scale,
        }
    }
}

/// Deserialize, reporting failures against a JSON path such as `$.sensor.eta`.
pub fn from_json<T: serde::de::DeserializeOwned>(text: &str) -> Result<T, Failure> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let loc = if path == "." { "$".to_string() } else { format!("$.{path}") };
        Failure::parse(format!("{loc}: {}", e.inner()))
    })
}

/// A stand-alone sweep document with `SweepSpec` field names.
pub fn load_sweep_spec(path: &Path) -> Result<SweepSpec, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::io(format!("{}: {e}", path.display())))?;
    from_json(&text).map_err(|f| f.context(&path.display().to_string()))
}

fn positive(path: &str, v: f64) -> Result<(), Failure> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Failure::domain(format!("{path}: must be > 0, got {v}")))
    }
}

fn at_least_zero(path: &str, v: f64) -> Result<(), Failure> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(Failure::domain(format!("{path}: must be >= 0, got {v}")))
    }
}

fn unit(path: &str, v: f64) -> Result<(), Failure> {
    if v.is_finite() && v > 0.0 && v <= 1.0 {
        Ok(())
    } else {
        Err(Failure::domain(format!("{path}: must be in (0, 1], got {v}")))
    }
}
