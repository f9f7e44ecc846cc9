//! End-to-end acceptance checks. Each criterion prints one PASS/FAIL line;
//! the test fails if any criterion does. Run with
//! `cargo test -p nlint-cli --test acceptance -- --nocapture` to see them.

mod common;

use std::cell::Cell;
use std::time::Instant;

use common::*;
use nlint::fringe::{self, FringeScanConfig};
use nlint::physics::{self, PlumeState, SensorConfig, Transmittance};
use nlint::spectra::{self, paper_cross_sections, HitranError};
use nlint::sweep::{self, MonteCarloSpec, SweepSpec};
use nlint::CrossSectionPair;
use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};

type Outcome = Result<String, String>;

fn check(cond: bool, ok: String, fail: String) -> Outcome {
    if cond {
        Ok(ok)
    } else {
        Err(fail)
    }
}

/// Reference operating point, written out independently of the library
/// defaults.
fn reference_sensor() -> SensorConfig {
    SensorConfig {
        eta: 0.1,
        gain: 1e-8,
        alpha: 1e-8,
        t_int: 1.0,
        p_idler: 0.02,
        lambda_signal: 1.589,
        lambda_idler: 3.221,
    }
}

fn headline_sensitivity() -> Outcome {
    let mir = CrossSectionPair { sigma_on: 1.18e-22, sigma_off: 0.0, lambda_on: 3.221, lambda_off: 3.221 };
    let dx = physics::sensitivity_without_detection(&reference_sensor(), 1.0, 2.53e25, &mir).map_err(|e| e.to_string())?;
    let ppm_m = dx * 1.0 * 1e6;
    // Independent evaluation from CODATA constants.
    let hbar = 1.054_571_817e-34;
    let omega = 2.0 * std::f64::consts::PI * 299_792_458.0 / 1.589e-6;
    let oracle = (hbar * omega / (2.0 * 0.1 * 1e-8 * 1e-8 * 1.0 * 0.02)).sqrt() / (2.53e25 * 1.18e-22) * 1e6;

    let cli = nlint(&["sensitivity", "--method", "nd"]);
    let line = field(&stdout(&cli), "delta_x column").unwrap_or("").to_string();
    let cli_val: f64 = line.trim_end_matches(" ppm·m").parse().unwrap_or(f64::NAN);
    check(
        (ppm_m / 187.0 - 1.0).abs() <= 0.01 && (ppm_m / oracle - 1.0).abs() < 1e-12 && (cli_val / 187.0 - 1.0).abs() <= 0.01,
        format!("δX = {ppm_m:.3} ppm·m (target 187 ± 1%), CLI prints {line:?}"),
        format!("δX = {ppm_m} ppm·m, oracle {oracle}, CLI {line:?}"),
    )
}

fn crossover_gain() -> Outcome {
    let (mir, swir) = paper_cross_sections();
    let g_star = physics::crossover_gain(&mir, &swir).map_err(|e| e.to_string())?;
    let rs_at = physics::relative_sensitivity(&mir, &swir, g_star).map_err(|e| e.to_string())?;

    let rows = sweep::run_sweep(&SweepSpec::default()).map_err(|e| e.to_string())?;
    let mut buf = Vec::new();
    sweep::emit_csv(&rows, &mut buf).map_err(|e| e.to_string())?;
    let from_csv = sweep::read_csv(buf.as_slice()).map_err(|e| e.to_string())?;
    let alpha = from_csv[0].alpha;
    let curve: Vec<_> = from_csv.iter().filter(|r| r.alpha == alpha).collect();
    let bracket = curve.windows(2).find(|w| w[0].r_s < 1.0 && w[1].r_s >= 1.0).map(|w| (w[0].gain, w[1].gain));
    let interpolated = sweep::rs_crossover(&from_csv);

    let in_window = |g: f64| (2.30e-4..=2.40e-4).contains(&g);
    let ok = (rs_at - 1.0).abs() < 1e-12
        && in_window(g_star)
        && bracket.is_some_and(|(a, b)| a < g_star && g_star < b)
        && interpolated.is_some_and(in_window);
    check(
        ok,
        format!(
            "G* = {g_star:.4e}, CSV brackets R_S = 1 in [{:.4e}, {:.4e}], interpolated {:.4e}",
            bracket.map_or(f64::NAN, |b| b.0),
            bracket.map_or(f64::NAN, |b| b.1),
            interpolated.unwrap_or(f64::NAN)
        ),
        format!("G* = {g_star:e}, R_S(G*) = {rs_at}, bracket {bracket:?}, interpolated {interpolated:?}"),
    )
}

fn cross_section_ratio() -> Outcome {
    let (mir, swir) = paper_cross_sections();
    let ratio = mir.differential() / swir.differential();
    let exact = 118.0 / 1.81;
    let rows = sweep::run_sweep(&SweepSpec::default()).map_err(|e| e.to_string())?;
    let worst = rows.iter().map(|r| (r.r_s / (exact * r.gain.sqrt()) - 1.0).abs()).fold(0.0, f64::max);
    check(
        (ratio - 65.19).abs() <= 0.01 && worst < 1e-12,
        format!("ratio {ratio:.4}, R_S vs ratio·√G worst relative error {worst:.1e} over {} cells", rows.len()),
        format!("ratio {ratio}, worst relative error {worst:e}"),
    )
}

fn retroreflector_regime() -> Outcome {
    let spec = SweepSpec { alpha_values: vec![1e-2], ..SweepSpec::default() };
    let rows = sweep::run_sweep(&spec).map_err(|e| e.to_string())?;
    let worst = rows.iter().map(|r| r.delta_x_nd).fold(0.0, f64::max);
    let high: Vec<_> = rows.iter().filter(|r| r.gain > 1e-4).collect();
    let worst_high = high.iter().map(|r| r.delta_x_nd).fold(0.0, f64::max);
    let spans = rows.first().map(|r| r.gain) <= Some(1e-8 * (1.0 + 1e-12))
        && rows.last().map(|r| r.gain) >= Some(1e-2 * (1.0 - 1e-12));
    check(
        spans && worst < 1.0 && !high.is_empty() && worst_high <= 0.005,
        format!("worst δX {worst:.3} ppm·m over G ∈ [1e-8, 1e-2]; worst {:.2} ppb·m for G > 1e-4", worst_high * 1e3),
        format!("worst {worst} ppm·m, worst above 1e-4 {worst_high} ppm·m, spans {spans}"),
    )
}

fn fringe_regime() -> Outcome {
    let start = Instant::now();
    let lambda = 3.221;
    let cfg = FringeScanConfig {
        sensor: SensorConfig { alpha: 0.437, ..reference_sensor() },
        lambda_idler: lambda,
        scan_length: 3.0 * lambda,
        steps: 100,
        counts_scale: 1e3,
        phase_offset: 0.3,
        rng_seed: 20_240_611,
    };
    let scan = fringe::simulate_scan(&cfg, Transmittance::UNITY).map_err(|e| e.to_string())?;
    let est = fringe::estimate_visibility(&scan, Some(lambda)).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed().as_secs_f64();
    let period_err = (est.period / lambda - 1.0).abs();
    check(
        (est.visibility - 0.92).abs() <= 3.0 * est.visibility_std && period_err < 0.01 && elapsed < 1.0,
        format!(
            "V = {:.4} ± {:.4}, period {:.4} µm ({:.2}% off), {elapsed:.3} s",
            est.visibility,
            est.visibility_std,
            est.period,
            period_err * 100.0
        ),
        format!("{est:?}, elapsed {elapsed} s"),
    )
}

fn monte_carlo_oracle() -> Outcome {
    let start = Instant::now();
    let spec = MonteCarloSpec {
        sensor: SensorConfig { alpha: 1e-2, ..reference_sensor() },
        plume: PlumeState::default(),
        sigma_mir: paper_cross_sections().0,
        trials: 10_000,
        rng_seed: 77,
        counts_scale: 1.0,
    };
    let res = sweep::run_monte_carlo(&spec).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed().as_secs_f64();
    let rel = res.std_x / res.analytic_delta_x - 1.0;
    check(
        res.min_extremum_counts >= 1e4 && rel.abs() < 0.1 && elapsed < 30.0,
        format!(
            "std {:.4e} vs closed form {:.4e} ({:+.2}%), weakest extremum {:.2e} counts, {elapsed:.2} s",
            res.std_x,
            res.analytic_delta_x,
            rel * 100.0,
            res.min_extremum_counts
        ),
        format!("{res:?}, elapsed {elapsed} s"),
    )
}

/// Plume parameters drawn so that the on-line optical depth spans weak to
/// strong absorption without underflowing the transmittance.
fn plume_draw() -> impl Strategy<Value = (f64, f64, f64, f64, f64)> {
    (-2.0f64..1.5, 0.0f64..0.9, 0.1f64..100.0, 1e25f64..3e25, -23.0f64..-21.0)
        .prop_map(|(log_od, frac, depth, n_air, log_sigma)| (10f64.powf(log_od), frac, depth, n_air, 10f64.powf(log_sigma)))
}

fn algebraic_round_trips() -> Outcome {
    let mut runner = TestRunner::new(Config { cases: 1000, failure_persistence: None, ..Config::default() });
    let worst_x = Cell::new(0.0f64);
    let worst_daod = Cell::new(0.0f64);
    let result = runner.run(&(plume_draw(), 1e-3f64..1e6), |((od_on, frac, depth, n_air, sigma_on), scale)| {
        let sigma = CrossSectionPair { sigma_on, sigma_off: frac * sigma_on, lambda_on: 3.221, lambda_off: 3.3 };
        let x = od_on / (depth * n_air * sigma_on);
        let plume = PlumeState { depth, mixing_ratio: x, n_air };
        let t_on = physics::transmittance(&plume, sigma.sigma_on).unwrap().value();
        let t_off = physics::transmittance(&plume, sigma.sigma_off).unwrap().value();

        let daod = physics::daod_from_fringe_amplitudes(scale * t_on, scale * t_off).unwrap();
        let back = physics::mixing_ratio_from_daod(daod, depth, n_air, &sigma).unwrap();
        let rel_x = (back / x - 1.0).abs();
        prop_assert!(rel_x < 1e-12, "x {x} -> {back}");

        let direct = physics::daod_direct(scale * t_on * t_on, scale * t_off * t_off).unwrap();
        let rel_d = (direct / daod - 1.0).abs();
        prop_assert!(rel_d < 1e-12, "fringe {daod} vs direct {direct}");
        worst_x.set(worst_x.get().max(rel_x));
        worst_daod.set(worst_daod.get().max(rel_d));
        Ok(())
    });
    match result {
        Ok(()) => Ok(format!(
            "1000 draws, worst X recovery {:.1e}, worst fringe/direct DAOD mismatch {:.1e}",
            worst_x.get(),
            worst_daod.get()
        )),
        Err(e) => Err(e.to_string()),
    }
}

fn malformed_fixtures() -> Result<(), String> {
    let good = methane_record(3_038_498_815);
    let truncated = &good[..159];
    match spectra::parse_hitran_record(truncated) {
        Err(HitranError::RecordLength { length: 159, .. }) => {}
        other => return Err(format!("truncated record gave {other:?}")),
    }
    let garbled = format!("{}3O38.498815{}", &good[..4], &good[15..]);
    match spectra::parse_hitran_record(&garbled) {
        Err(HitranError::FieldParse { field: "wavenumber", columns, .. }) if columns == (4..=15) => {}
        other => return Err(format!("garbled wavenumber gave {other:?}")),
    }
    let blank_gamma = format!("{}     {}", &good[..35], &good[40..]);
    match spectra::parse_hitran_record(&blank_gamma) {
        Err(HitranError::FieldParse { field: "gamma_air", .. }) => {}
        other => return Err(format!("blank gamma_air gave {other:?}")),
    }

    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let path = write(dir.path(), "bad.par", &format!("{good}\n{truncated}\n{good}\n"));
    let strict = nlint(&["parse-hitran", &path]);
    if strict.status.code() != Some(2) || !stderr(&strict).contains("line 2") {
        return Err(format!("strict: {:?} {}", strict.status.code(), stderr(&strict)));
    }
    let lenient = nlint(&["parse-hitran", &path, "--lenient"]);
    if lenient.status.code() != Some(0) || !stderr(&lenient).contains("skipped: 1") {
        return Err(format!("lenient: {:?} {}", lenient.status.code(), stderr(&lenient)));
    }
    let missing = nlint(&["parse-hitran", &dir.path().join("absent.par").to_string_lossy()]);
    if missing.status.code() != Some(3) {
        return Err(format!("missing file: {:?}", missing.status.code()));
    }
    Ok(())
}

fn parser_round_trip() -> Outcome {
    let mut runner = TestRunner::new(Config { cases: 1000, failure_persistence: None, ..Config::default() });
    let result = runner.run(&record_digits(), |digits| {
        let record = digits.to_record();
        let line = spectra::parse_hitran_record(&record).map_err(|e| TestCaseError::fail(e.to_string()))?;
        prop_assert_eq!(line.wavenumber, digits.wavenumber());
        prop_assert_eq!(line.to_record(), record);
        Ok(())
    });
    result.map_err(|e| e.to_string())?;
    malformed_fixtures()?;
    Ok("1000 generated records byte-identical; truncated, garbled and blank fixtures rejected with exit codes 2/0/3".into())
}

#[test]
fn acceptance_criteria() {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("headline sensitivity", headline_sensitivity),
        ("crossover gain", crossover_gain),
        ("cross-section ratio", cross_section_ratio),
        ("retroreflector regime", retroreflector_regime),
        ("fringe regime", fringe_regime),
        ("Monte Carlo vs closed form", monte_carlo_oracle),
        ("algebraic round trips", algebraic_round_trips),
        ("parser round trip", parser_round_trip),
    ];
    let mut failed = Vec::new();
    for (i, (name, f)) in criteria.iter().enumerate() {
        match f() {
            Ok(detail) => println!("PASS {}. {name}: {detail}", i + 1),
            Err(detail) => {
                println!("FAIL {}. {name}: {detail}", i + 1);
                failed.push(i + 1);
            }
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
