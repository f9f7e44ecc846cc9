//! Shared fixtures: a fixed-width record writer that works from the decimal
//! digits of each field rather than from floats, and a runner for the binary.

#![allow(dead_code)]

use std::path::Path;
use std::process::{Command, Output};

use proptest::prelude::*;

/// Digit-level description of one record.
#[derive(Debug, Clone)]
pub struct RecordDigits {
    pub molecule: u8,
    pub isotopologue: u8,
    /// Wavenumber in units of 10⁻⁶ cm⁻¹.
    pub wavenumber_micro: u64,
    /// Mantissa in thousandths (1000..=9999) and decimal exponent.
    pub intensity: (u16, i8),
    pub einstein_a: (u16, i8),
    /// Half widths in units of 10⁻⁴ cm⁻¹/atm.
    pub gamma_air: u16,
    pub gamma_self: u16,
    /// Lower-state energy in units of 10⁻⁴ cm⁻¹.
    pub lower_state: u64,
    /// Temperature exponent in hundredths.
    pub n_air: u16,
    /// Pressure shift in units of 10⁻⁶ cm⁻¹/atm.
    pub delta_air: i32,
    pub trailing: String,
}

fn exponential((mantissa, exp): (u16, i8)) -> String {
    let sign = if exp < 0 { '-' } else { '+' };
    format!("{}.{:03}E{sign}{:02}", mantissa / 1000, mantissa % 1000, exp.unsigned_abs())
}

/// Four decimals below one, written without the leading zero as the
/// 5-character field demands.
fn short_fraction(v: u16) -> String {
    format!(".{v:04}")
}

impl RecordDigits {
    pub fn to_record(&self) -> String {
        let nu = format!("{}.{:06}", self.wavenumber_micro / 1_000_000, self.wavenumber_micro % 1_000_000);
        let e = format!("{}.{:04}", self.lower_state / 10_000, self.lower_state % 10_000);
        let n = format!("{}.{:02}", self.n_air / 100, self.n_air % 100);
        let d = if self.delta_air < 0 {
            format!("-.{:06}", self.delta_air.unsigned_abs())
        } else {
            format!("0.{:06}", self.delta_air)
        };
        let rec = format!(
            "{:>2}{:>1}{:>12}{:>10}{:>10}{:>5}{:>5}{:>10}{:>4}{:>8}{:<93}",
            self.molecule,
            self.isotopologue,
            nu,
            exponential(self.intensity),
            exponential(self.einstein_a),
            short_fraction(self.gamma_air),
            short_fraction(self.gamma_self),
            e,
            n,
            d,
            self.trailing
        );
        assert_eq!(rec.len(), 160, "{rec:?}");
        rec
    }

    pub fn wavenumber(&self) -> f64 {
        self.wavenumber_micro as f64 / 1e6
    }
}

pub fn record_digits() -> impl Strategy<Value = RecordDigits> {
    (
        (1u8..=99, 1u8..=9, 1u64..100_000_000_000),
        ((1000u16..=9999, -99i8..=-1), (1000u16..=9999, -9i8..=9)),
        (1u16..=9999, 0u16..=9999, 0u64..1_000_000_000, 0u16..=999, -99_999i32..=99_999),
        "[ -~]{93}",
    )
        .prop_map(|((molecule, isotopologue, wavenumber_micro), (intensity, einstein_a), rest, trailing)| {
            let (gamma_air, gamma_self, lower_state, n_air, delta_air) = rest;
            RecordDigits {
                molecule,
                isotopologue,
                wavenumber_micro,
                intensity,
                einstein_a,
                gamma_air,
                gamma_self,
                lower_state,
                n_air,
                delta_air,
                trailing,
            }
        })
}

/// A methane line at `wavenumber_micro`·10⁻⁶ cm⁻¹ with a plain tail.
pub fn methane_record(wavenumber_micro: u64) -> String {
    RecordDigits {
        molecule: 6,
        isotopologue: 1,
        wavenumber_micro,
        intensity: (1443, -19),
        einstein_a: (2163, 1),
        gamma_air: 627,
        gamma_self: 810,
        lower_state: 2_199_197,
        n_air: 75,
        delta_air: -7000,
        trailing: "          3 0 0 1 1F2          0 0 0 0 1A1    10  7F1  1    1 0  7F2  2    4  4 4 2 1 7 7    ".chars().take(93).collect(),
    }
    .to_record()
}

pub fn nlint(args: &[&str]) -> Output {
    nlint_env(args, &[])
}

pub fn nlint_env(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_nlint"));
    cmd.args(args).env_remove("NLINT_SEED");
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().expect("run nlint")
}

pub fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

pub fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

pub fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

/// Value following `key :` in the report format.
pub fn field<'a>(report: &'a str, key: &str) -> Option<&'a str> {
    report.lines().find_map(|l| {
        let (k, v) = l.split_once(':')?;
        (k.trim() == key).then(|| v.trim())
    })
}
