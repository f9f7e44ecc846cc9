//! `nlint`: command-line front end for the nonlinear-interferometer methane
//! sensor model.
//!
//! Settings come from three layers, highest first: command-line flags, the
//! JSON file given with `--config`, then the built-in reference operating
//! point. `NLINT_SEED` in the environment stands in for `--seed` and beats
//! the file.
//!
//! Exit codes: 0 ok, 2 parse error, 3 I/O error, 4 domain or degenerate input.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

pub const EXIT_PARSE: u8 = 2;
pub const EXIT_IO: u8 = 3;
pub const EXIT_DOMAIN: u8 = 4;

/// A failed command: the message for standard error and its exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn parse(message: String) -> Self {
        Self { code: EXIT_PARSE, message }
    }

    pub fn io(message: String) -> Self {
        Self { code: EXIT_IO, message }
    }

    pub fn domain(message: String) -> Self {
        Self { code: EXIT_DOMAIN, message }
    }

    pub fn context(self, what: &str) -> Self {
        Self { message: format!("{what}: {}", self.message), ..self }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::io(e.to_string())
    }
}

#[derive(Debug, Parser)]
#[command(name = "nlint", version, about = "Methane sensing without detection: sensitivity model, fringe simulator and sweeps")]
struct Cli {
    /// JSON run configuration (path). Missing keys take the reference values.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    /// Nonlinear interferometer (sensing without detection)
    Nd,
    /// Direct differential absorption at the signal wavelength
    Direct,
    /// Both, plus their ratio R_S
    Both,
}

/// Operating-point overrides shared by several subcommands.
#[derive(Debug, Clone, Default, clap::Args)]
pub struct SensorFlags {
    /// Detector quantum efficiency η (dimensionless, 0 < x <= 1)
    #[arg(long, value_name = "ETA")]
    pub eta: Option<f64>,
    /// Single-pass parametric gain G (dimensionless)
    #[arg(long, value_name = "G")]
    pub gain: Option<f64>,
    /// Target return fraction α (dimensionless, 0 < x <= 1)
    #[arg(long, value_name = "ALPHA")]
    pub alpha: Option<f64>,
    /// Integration time T_int (s)
    #[arg(long, value_name = "SECONDS")]
    pub t_int: Option<f64>,
    /// Idler power P_i (W)
    #[arg(long, value_name = "WATTS")]
    pub p_idler: Option<f64>,
    /// Plume depth Z (m)
    #[arg(long, value_name = "METRES")]
    pub depth: Option<f64>,
    /// Methane mixing ratio X in the plume (dimensionless, 1e-6 = 1 ppm)
    #[arg(long, value_name = "X")]
    pub mixing_ratio: Option<f64>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Decode a HITRAN .par line list and print it as CSV
    ParseHitran {
        /// HITRAN 160-character line list (path)
        path: PathBuf,
        /// Keep only this HITRAN molecule number (integer, 6 = CH4)
        #[arg(long, value_name = "ID")]
        molecule: Option<u8>,
        /// Lower wavenumber bound, inclusive (cm⁻¹)
        #[arg(long, value_name = "CM-1", default_value_t = 0.0)]
        wn_min: f64,
        /// Upper wavenumber bound, inclusive (cm⁻¹)
        #[arg(long, value_name = "CM-1", default_value_t = f64::INFINITY)]
        wn_max: f64,
        /// Skip malformed records instead of stopping at the first one
        #[arg(long)]
        lenient: bool,
    },
    /// Lorentzian absorption cross section from a HITRAN line list
    Xsection {
        /// HITRAN 160-character line list (path)
        path: PathBuf,
        /// On-resonance vacuum wavelength (µm)
        #[arg(long, value_name = "UM")]
        wavelength: f64,
        /// Off-resonance vacuum wavelength; also prints the differential (µm)
        #[arg(long, value_name = "UM")]
        off: Option<f64>,
        /// HITRAN molecule number to include (integer, 6 = CH4)
        #[arg(long, value_name = "ID", default_value_t = nlint::spectra::METHANE)]
        molecule: u8,
        /// Gas pressure (atm) [default: config, else 1]
        #[arg(long, value_name = "ATM")]
        pressure: Option<f64>,
        /// Gas temperature (K) [default: config, else 296]
        #[arg(long, value_name = "K")]
        temperature: Option<f64>,
        /// Skip malformed records instead of stopping at the first one
        #[arg(long)]
        lenient: bool,
    },
    /// Minimum detectable methane column for the configured sensor
    Sensitivity {
        /// Which detection scheme to report
        #[arg(long, value_enum, default_value_t = Method::Nd)]
        method: Method,
        #[command(flatten)]
        sensor: SensorFlags,
    },
    /// Simulate a fringe scan and estimate its visibility
    Fringe {
        /// Single-pass plume transmittance T (dimensionless, 0 to 1)
        #[arg(long, value_name = "T", default_value_t = 1.0)]
        transmittance: f64,
        /// Write the scan as CSV (path)
        #[arg(long, value_name = "PATH")]
        out: Option<PathBuf>,
        /// Target return fraction α; the return ratio is r = α·T² (dimensionless)
        #[arg(long, value_name = "ALPHA")]
        alpha: Option<f64>,
        /// Mean counts per scan step (counts)
        #[arg(long, value_name = "COUNTS")]
        counts_scale: Option<f64>,
        /// Number of scan positions (integer, >= 8)
        #[arg(long, value_name = "N")]
        steps: Option<usize>,
        /// Total path increment of the scan (µm) [default: 3 idler wavelengths]
        #[arg(long, value_name = "UM")]
        scan_length: Option<f64>,
        /// Random seed (integer)
        #[arg(long, value_name = "SEED", env = "NLINT_SEED")]
        seed: Option<u64>,
    },
    /// Sweep gain and return fraction; write CSV and SVG plots
    Sweep {
        /// Output directory, created if missing (path)
        #[arg(long, value_name = "DIR")]
        out: PathBuf,
        /// Return fraction to include; repeat for several (dimensionless, 0 < x <= 1)
        #[arg(long = "alpha", value_name = "ALPHA")]
        alphas: Vec<f64>,
        /// Gain grid density (points per decade)
        #[arg(long, value_name = "N")]
        points_per_decade: Option<u32>,
        /// Complete sweep document with SweepSpec keys, used instead of --config (path)
        #[arg(long, value_name = "PATH")]
        spec: Option<PathBuf>,
    },
    /// Monte Carlo check of the closed-form precision
    MonteCarlo {
        /// Number of simulated retrievals (integer, >= 100)
        #[arg(long, value_name = "N")]
        trials: Option<usize>,
        /// Multiplier on every expected count (dimensionless)
        #[arg(long, value_name = "FACTOR")]
        counts_scale: Option<f64>,
        /// Random seed (integer)
        #[arg(long, value_name = "SEED", env = "NLINT_SEED")]
        seed: Option<u64>,
        #[command(flatten)]
        sensor: SensorFlags,
    },
}

fn run(cli: Cli) -> Result<(), Failure> {
    let mut cfg = config::RunConfig::load(cli.config.as_deref())?;
    let mut out = std::io::stdout().lock();
    match cli.command {
        Command::ParseHitran { path, molecule, wn_min, wn_max, lenient } => {
            commands::parse_hitran(&path, molecule, wn_min, wn_max, lenient, &mut out)
        }
        Command::Xsection { path, wavelength, off, molecule, pressure, temperature, lenient } => {
            if let Some(p) = pressure {
                cfg.environment.pressure = p;
            }
            if let Some(t) = temperature {
                cfg.environment.temperature = t;
            }
            cfg.validate()?;
            commands::xsection(&cfg, &path, wavelength, off, molecule, lenient, &mut out)
        }
        Command::Sensitivity { method, sensor } => {
            sensor.apply(&mut cfg);
            cfg.validate()?;
            commands::sensitivity(&cfg, method, &mut out)
        }
        Command::Fringe { transmittance, out: path, alpha, counts_scale, steps, scan_length, seed } => {
            if let Some(a) = alpha {
                cfg.sensor.alpha = a;
            }
            if let Some(c) = counts_scale {
                cfg.fringe.counts_scale = c;
            }
            if let Some(s) = steps {
                cfg.fringe.steps = s;
            }
            if let Some(l) = scan_length {
                cfg.fringe.scan_length = Some(l);
            }
            if let Some(s) = seed {
                cfg.fringe.rng_seed = s;
            }
            cfg.fringe.transmittance = transmittance;
            cfg.validate().map_err(|f| {
                if f.message.starts_with("$.fringe.transmittance") {
                    Failure::domain(format!("--transmittance must be in [0, 1], got {transmittance}"))
                } else {
                    f
                }
            })?;
            commands::fringe(&cfg, path.as_deref(), &mut out)
        }
        Command::Sweep { out: dir, alphas, points_per_decade, spec } => {
            let mut spec = match spec {
                Some(path) => config::load_sweep_spec(&path)?,
                None => {
                    cfg.validate()?;
                    cfg.sweep_spec()
                }
            };
            if !alphas.is_empty() {
                spec.alpha_values = alphas;
            }
            if let Some(p) = points_per_decade {
                spec.gain_grid.points_per_decade = p;
            }
            commands::sweep(&spec, &dir, &mut out)
        }
        Command::MonteCarlo { trials, counts_scale, seed, sensor } => {
            sensor.apply(&mut cfg);
            if let Some(t) = trials {
                cfg.monte_carlo.trials = t;
            }
            if let Some(c) = counts_scale {
                cfg.monte_carlo.counts_scale = c;
            }
            if let Some(s) = seed {
                cfg.monte_carlo.rng_seed = s;
            }
            cfg.validate()?;
            commands::monte_carlo(&cfg, &mut out)
        }
    }
}

impl SensorFlags {
    fn apply(&self, cfg: &mut config::RunConfig) {
        let s = &mut cfg.sensor;
        let pairs = [
            (self.eta, &mut s.eta),
            (self.gain, &mut s.gain),
            (self.alpha, &mut s.alpha),
            (self.t_int, &mut s.t_int),
            (self.p_idler, &mut s.p_idler),
        ];
        for (flag, slot) in pairs {
            if let Some(v) = flag {
                *slot = v;
            }
        }
        if let Some(d) = self.depth {
            cfg.plume.depth = d;
        }
        if let Some(x) = self.mixing_ratio {
            cfg.plume.mixing_ratio = x;
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
