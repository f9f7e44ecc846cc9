use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use nlint::fringe::{self, FringeError};
use nlint::physics::{self, PhysicsError, Transmittance};
use nlint::spectra::{self, HitranError, LineFilter, ParseMode};
use nlint::sweep::{self, PlotKind, SweepError, SweepSpec};
use nlint::CrossSectionPair;

use crate::config::RunConfig;
use crate::{Failure, Method};

pub const SWEEP_CSV: &str = "sweep.csv";
pub const RS_PLOT: &str = "rs_vs_gain.svg";
pub const DELTAX_PLOT: &str = "deltax_vs_gain.svg";

impl From<PhysicsError> for Failure {
    fn from(e: PhysicsError) -> Self {
        Failure::domain(e.to_string())
    }
}

impl From<HitranError> for Failure {
    fn from(e: HitranError) -> Self {
        match e {
            HitranError::Io(e) => Failure::io(e.to_string()),
            HitranError::InvalidFilter(_) => Failure::domain(e.to_string()),
            HitranError::RecordLength { .. } | HitranError::FieldParse { .. } => Failure::parse(e.to_string()),
        }
    }
}

impl From<FringeError> for Failure {
    fn from(e: FringeError) -> Self {
        match e {
            FringeError::Csv(_) | FringeError::Format(_) => Failure::parse(e.to_string()),
            _ => Failure::domain(e.to_string()),
        }
    }
}

impl From<SweepError> for Failure {
    fn from(e: SweepError) -> Self {
        match e {
            SweepError::Io(_) | SweepError::Csv(_) => Failure::io(e.to_string()),
            _ => Failure::domain(e.to_string()),
        }
    }
}

/// Four significant digits; plain notation in the readable range.
fn sig(v: f64) -> String {
    let a = v.abs();
    if a != 0.0 && !(1e-3..1e6).contains(&a) {
        return format!("{v:.3e}");
    }
    let decimals = if a == 0.0 { 3 } else { (3 - a.log10().floor() as i32).max(0) as usize };
    format!("{v:.decimals$}")
}

fn open(path: &Path) -> Result<BufReader<File>, Failure> {
    File::open(path).map(BufReader::new).map_err(|e| Failure::io(format!("{}: {e}", path.display())))
}

fn create(path: &Path) -> Result<BufWriter<File>, Failure> {
    File::create(path).map(BufWriter::new).map_err(|e| Failure::io(format!("{}: {e}", path.display())))
}

fn read_lines(path: &Path, filter: &LineFilter, lenient: bool) -> Result<Vec<spectra::HitranLine>, Failure> {
    let mode = if lenient { ParseMode::Lenient } else { ParseMode::Strict };
    let parsed = spectra::parse_hitran_file(open(path)?, filter, mode)
        .map_err(|e| Failure::from(e).context(&path.display().to_string()))?;
    eprintln!("records: {}", parsed.lines.len());
    if lenient {
        eprintln!("skipped: {}", parsed.diagnostics.skipped);
        for e in &parsed.diagnostics.errors {
            eprintln!("  {e}");
        }
    }
    Ok(parsed.lines)
}

pub fn parse_hitran(
    path: &Path,
    molecule: Option<u8>,
    wn_min: f64,
    wn_max: f64,
    lenient: bool,
    out: &mut impl Write,
) -> Result<(), Failure> {
    let filter = LineFilter::new(molecule, wn_min, wn_max)?;
    let lines = read_lines(path, &filter, lenient)?;
    writeln!(
        out,
        "molecule_id,isotopologue_id,wavenumber_cm-1,intensity,einstein_a_s-1,gamma_air,gamma_self,\
         lower_state_energy_cm-1,n_air_exponent,delta_air"
    )?;
    for l in &lines {
        writeln!(
            out,
            "{},{},{},{:e},{:e},{},{},{},{},{}",
            l.molecule_id,
            l.isotopologue_id,
            l.wavenumber,
            l.intensity,
            l.einstein_a,
            l.gamma_air,
            l.gamma_self,
            l.lower_state_energy,
            l.n_air_exponent,
            l.delta_air
        )?;
    }
    Ok(())
}

pub fn xsection(
    cfg: &RunConfig,
    path: &Path,
    wavelength: f64,
    off: Option<f64>,
    molecule: u8,
    lenient: bool,
    out: &mut impl Write,
) -> Result<(), Failure> {
    for (flag, v) in [("--wavelength", Some(wavelength)), ("--off", off)] {
        if let Some(v) = v {
            if !(v.is_finite() && v > 0.0) {
                return Err(Failure::domain(format!("{flag} must be > 0 µm, got {v}")));
            }
        }
    }
    let lines = read_lines(path, &LineFilter { molecule_id: Some(molecule), ..LineFilter::default() }, lenient)?;
    let env = &cfg.environment;
    let on = spectra::cross_section_at(&lines, wavelength, env);
    writeln!(out, "pressure       : {} atm", env.pressure)?;
    writeln!(out, "temperature    : {} K", env.temperature)?;
    writeln!(out, "lines          : {}", lines.len())?;
    writeln!(out, "sigma_on       : {on:.6e} m² at {wavelength} µm")?;
    if let Some(off) = off {
        let sigma_off = spectra::cross_section_at(&lines, off, env);
        writeln!(out, "sigma_off      : {sigma_off:.6e} m² at {off} µm")?;
        writeln!(out, "delta_sigma    : {:.6e} m²", on - sigma_off)?;
    }
    Ok(())
}

/// A vanishing Δσ makes every sensitivity infinite; report it against the
/// config key that is most likely wrong.
fn require_contrast(name: &str, pair: &CrossSectionPair) -> Result<(), Failure> {
    if pair.differential() > 0.0 {
        Ok(())
    } else {
        Err(Failure::domain(format!(
            "$.{name}.sigma_on: equals sigma_off ({:e} m²); the differential cross section must be > 0",
            pair.sigma_off
        )))
    }
}

pub fn sensitivity(cfg: &RunConfig, method: Method, out: &mut impl Write) -> Result<(), Failure> {
    let depth = cfg.plume.depth;
    let n_air = cfg.plume.n_air;
    let mir = cfg.sigma_mir();
    let swir = cfg.sigma_swir();
    let column = |dx: f64| dx * depth * 1e6;
    let mut nd_dx = None;
    let mut direct_dx = None;

    if method != Method::Direct {
        require_contrast("sigma_mir", &mir)?;
        let s = &cfg.sensor;
        let t = physics::transmittance(&cfg.plume, mir.sigma_on)?;
        for w in physics::regime_warnings(s.gain, s.alpha, t) {
            eprintln!("warning: {w}");
        }
        let dx = physics::sensitivity_without_detection(s, depth, n_air, &mir)?;
        writeln!(out, "[nd] sensing without detection")?;
        writeln!(out, "idler wavelength     : {} µm", s.lambda_idler)?;
        writeln!(out, "signal wavelength    : {} µm", s.lambda_signal)?;
        writeln!(out, "mean signal photons  : {}", sig(physics::mean_signal_photons(s, t)))?;
        writeln!(out, "mean LO photons      : {}", sig(physics::mean_lo_photons(s)))?;
        writeln!(out, "snr                  : {}", sig(physics::snr_without_detection(s, t)?))?;
        writeln!(out, "delta_x              : {dx:.4e}")?;
        writeln!(out, "delta_x column       : {} ppm·m", sig(column(dx)))?;
        nd_dx = Some(dx);
    }

    if method != Method::Nd {
        require_contrast("sigma_swir", &swir)?;
        let d = cfg.direct();
        d.validate()?;
        let t = physics::transmittance(&cfg.plume, swir.sigma_on)?;
        let dx = physics::sensitivity_direct(&d, depth, n_air, &swir)?;
        if nd_dx.is_some() {
            writeln!(out)?;
        }
        writeln!(out, "[direct] differential absorption")?;
        writeln!(out, "probe wavelength     : {} µm", d.lambda_probe)?;
        writeln!(out, "mean photons         : {}", sig(physics::mean_direct_photons(&d, t)))?;
        writeln!(out, "snr                  : {}", sig(physics::snr_direct(&d, t)?))?;
        writeln!(out, "delta_x              : {dx:.4e}")?;
        writeln!(out, "delta_x column       : {} ppm·m", sig(column(dx)))?;
        direct_dx = Some(dx);
    }

    if let (Some(nd), Some(direct)) = (nd_dx, direct_dx) {
        let r_s = physics::relative_sensitivity(&mir, &swir, cfg.sensor.gain)?;
        writeln!(out)?;
        writeln!(out, "[comparison]")?;
        writeln!(out, "r_s                  : {r_s:.4e}")?;
        writeln!(out, "delta_x ratio        : {:.4e}", direct / nd)?;
        writeln!(out, "break-even gain      : {:.4e}", physics::crossover_gain(&mir, &swir)?)?;
    }
    Ok(())
}

pub fn fringe(cfg: &RunConfig, path: Option<&Path>, out: &mut impl Write) -> Result<(), Failure> {
    let t = Transmittance::new(cfg.fringe.transmittance)?;
    let fcfg = cfg.fringe_config();
    for w in physics::regime_warnings(fcfg.sensor.gain, fcfg.sensor.alpha, t) {
        eprintln!("warning: {w}");
    }
    let scan = fringe::simulate_scan(&fcfg, t)?;
    if let Some(path) = path {
        let mut w = create(path)?;
        scan.write_csv(&mut w).map_err(|e| Failure::io(format!("{}: {e}", path.display())))?;
        w.flush().map_err(|e| Failure::io(format!("{}: {e}", path.display())))?;
    }
    let est = fringe::estimate_visibility(&scan, Some(fcfg.lambda_idler))?;
    let r = fcfg.sensor.alpha * t.value().powi(2);
    let r_est = fringe::return_ratio_from_visibility(est.visibility);
    if r_est > physics::STRONG_RETURN_THRESHOLD {
        eprintln!("warning: inferred return ratio {r_est:.3} exceeds {}; the r <= 1 root was taken", physics::STRONG_RETURN_THRESHOLD);
    }
    writeln!(out, "steps                : {}", scan.len())?;
    writeln!(out, "scan length          : {} µm", fcfg.scan_length)?;
    writeln!(out, "return ratio         : {r:.4}")?;
    writeln!(out, "model visibility     : {:.4}", physics::fringe_visibility(r))?;
    writeln!(out, "visibility           : {:.4} ± {:.4}", est.visibility, est.visibility_std)?;
    writeln!(out, "period               : {:.4} µm", est.period)?;
    writeln!(out, "mean level           : {:.2} counts", est.mean_level)?;
    writeln!(out, "inferred return ratio: {r_est:.4}")?;
    Ok(())
}

pub fn sweep(spec: &SweepSpec, dir: &Path, out: &mut impl Write) -> Result<(), Failure> {
    let rows = sweep::run_sweep(spec)?;
    std::fs::create_dir_all(dir).map_err(|e| Failure::io(format!("{}: {e}", dir.display())))?;
    let write = |name: &str, f: &dyn Fn(&mut BufWriter<File>) -> Result<usize, SweepError>| -> Result<(), Failure> {
        let path = dir.join(name);
        let mut w = create(&path)?;
        f(&mut w).map_err(|e| Failure::from(e).context(&path.display().to_string()))?;
        Ok(())
    };
    write(SWEEP_CSV, &|w| sweep::emit_csv(&rows, w))?;
    write(RS_PLOT, &|w| sweep::emit_plot(&rows, PlotKind::RsVsGain, w))?;
    write(DELTAX_PLOT, &|w| sweep::emit_plot(&rows, PlotKind::DeltaxVsGain, w))?;

    writeln!(out, "rows                 : {}", rows.len())?;
    writeln!(out, "gain points          : {}", spec.gain_grid.values().len())?;
    writeln!(out, "alpha values         : {}", spec.alpha_values.len())?;
    match sweep::rs_crossover(&rows) {
        Some(g) => writeln!(out, "r_s = 1 at gain      : {g:.4e}")?,
        None => writeln!(out, "r_s = 1 at gain      : outside grid")?,
    }
    for name in [SWEEP_CSV, RS_PLOT, DELTAX_PLOT] {
        writeln!(out, "wrote                : {}", dir.join(name).display())?;
    }
    Ok(())
}

pub fn monte_carlo(cfg: &RunConfig, out: &mut impl Write) -> Result<(), Failure> {
    require_contrast("sigma_mir", &cfg.sigma_mir())?;
    let spec = cfg.monte_carlo_spec();
    let res = sweep::run_monte_carlo(&spec)?;
    let depth = cfg.plume.depth;
    writeln!(out, "trials               : {}", res.trials)?;
    writeln!(out, "rejected             : {}", res.rejected)?;
    writeln!(out, "weakest extremum     : {} counts", sig(res.min_extremum_counts))?;
    writeln!(out, "mean x               : {:.4e}", res.mean_x)?;
    writeln!(out, "std x                : {:.4e} ± {:.1e}", res.std_x, res.std_x_uncertainty)?;
    writeln!(out, "closed form          : {:.4e}", res.analytic_delta_x)?;
    writeln!(out, "propagated           : {:.4e}", res.propagated_delta_x)?;
    writeln!(out, "std / closed form    : {:.4}", res.std_x / res.analytic_delta_x)?;
    writeln!(out, "std x column         : {} ppm·m", sig(res.std_x * depth * 1e6))?;
    Ok(())
}
