//! HITRAN line lists and pressure-broadened absorption cross sections.
//!
//! Records follow the 160-column HITRAN 2004 `.par` layout. Only the first 67
//! columns are decoded; columns 68–160 (quantum numbers, uncertainty and
//! reference codes, flag, statistical weights) are kept verbatim so a decoded
//! line can be written back unchanged.
//!
//! | columns | field                | Fortran format |
//! |---------|----------------------|----------------|
//! | 1–2     | molecule number      | I2             |
//! | 3       | isotopologue number  | I1             |
//! | 4–15    | ν₀, cm⁻¹             | F12.6          |
//! | 16–25   | S, cm⁻¹/(molec·cm⁻²) | E10.3          |
//! | 26–35   | A, s⁻¹               | E10.3          |
//! | 36–40   | γ_air, cm⁻¹/atm      | F5.4           |
//! | 41–45   | γ_self, cm⁻¹/atm     | F5.4           |
//! | 46–55   | E″, cm⁻¹             | F10.4          |
//! | 56–59   | n_air                | F4.2           |
//! | 60–67   | δ_air, cm⁻¹/atm      | F8.6           |
//!
//! Values stay in HITRAN units (cm⁻¹, cm², atm) inside this module. Only the
//! cross sections handed out are converted to m²/molecule.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::io::BufRead;
use std::ops::RangeInclusive;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Characters per record, excluding the line terminator.
pub const RECORD_LENGTH: usize = 160;

/// Reference temperature of HITRAN line parameters, K.
pub const REFERENCE_TEMPERATURE: f64 = 296.0;

/// HITRAN molecule number of methane.
pub const METHANE: u8 = 6;

const CM2_TO_M2: f64 = 1e-4;

#[derive(Debug, Error)]
pub enum HitranError {
    #[error("{}record has {length} characters, expected {RECORD_LENGTH}", line_prefix(*.line))]
    RecordLength { line: Option<usize>, length: usize },
    #[error(
        "{}cannot decode {field} in columns {}-{}: {reason} ({content:?})",
        line_prefix(*.line), .columns.start(), .columns.end()
    )]
    FieldParse {
        line: Option<usize>,
        field: &'static str,
        columns: RangeInclusive<usize>,
        content: String,
        reason: String,
    },
    #[error("invalid filter: {0}")]
    InvalidFilter(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn line_prefix(line: Option<usize>) -> String {
    line.map(|n| format!("line {n}: ")).unwrap_or_default()
}

impl HitranError {
    fn at_line(self, n: usize) -> Self {
        match self {
            HitranError::RecordLength { length, .. } => HitranError::RecordLength { line: Some(n), length },
            HitranError::FieldParse { field, columns, content, reason, .. } => HitranError::FieldParse {
                line: Some(n),
                field,
                columns,
                content,
                reason,
            },
            other => other,
        }
    }

    /// 1-based line number of the offending record, when known.
    pub fn line(&self) -> Option<usize> {
        match self {
            HitranError::RecordLength { line, .. } | HitranError::FieldParse { line, .. } => *line,
            _ => None,
        }
    }
}

/// One decoded transition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HitranLine {
    pub molecule_id: u8,
    pub isotopologue_id: u8,
    /// Transition wavenumber ν₀, cm⁻¹.
    pub wavenumber: f64,
    /// Line intensity S at 296 K, cm⁻¹/(molecule·cm⁻²).
    pub intensity: f64,
    /// Einstein A coefficient, s⁻¹.
    pub einstein_a: f64,
    /// Air-broadened half width at half maximum, cm⁻¹/atm.
    pub gamma_air: f64,
    /// Self-broadened half width at half maximum, cm⁻¹/atm.
    pub gamma_self: f64,
    /// Lower-state energy E″, cm⁻¹.
    pub lower_state_energy: f64,
    /// Temperature exponent of `gamma_air`.
    pub n_air_exponent: f64,
    /// Air pressure shift, cm⁻¹/atm.
    pub delta_air: f64,
    /// Columns 68–160, undecoded.
    pub trailing: String,
}

pub struct Field {
    name: &'static str,
    columns: RangeInclusive<usize>,
}

const fn field(name: &'static str, first: usize, last: usize) -> Field {
    Field { name, columns: first..=last }
}

/// Decoded column ranges, 1-based and inclusive.
pub const MOLECULE: Field = field("molecule_id", 1, 2);
pub const ISOTOPOLOGUE: Field = field("isotopologue_id", 3, 3);
pub const WAVENUMBER: Field = field("wavenumber", 4, 15);
pub const INTENSITY: Field = field("intensity", 16, 25);
pub const EINSTEIN_A: Field = field("einstein_a", 26, 35);
pub const GAMMA_AIR: Field = field("gamma_air", 36, 40);
pub const GAMMA_SELF: Field = field("gamma_self", 41, 45);
pub const LOWER_STATE_ENERGY: Field = field("lower_state_energy", 46, 55);
pub const N_AIR: Field = field("n_air_exponent", 56, 59);
pub const DELTA_AIR: Field = field("delta_air", 60, 67);
const TRAILING_START: usize = 68;

impl Field {
    pub fn name(&self) -> &'static str {
        self.name
    }

    pub fn columns(&self) -> RangeInclusive<usize> {
        self.columns.clone()
    }

    fn width(&self) -> usize {
        self.columns.end() - self.columns.start() + 1
    }

    fn slice<'a>(&self, record: &'a str) -> &'a str {
        &record[self.columns.start() - 1..*self.columns.end()]
    }

    fn error(&self, content: &str, reason: impl Into<String>) -> HitranError {
        HitranError::FieldParse {
            line: None,
            field: self.name,
            columns: self.columns(),
            content: content.to_string(),
            reason: reason.into(),
        }
    }

    fn real(&self, record: &str) -> Result<f64, HitranError> {
        let raw = self.slice(record);
        let text = raw.trim();
        if text.is_empty() {
            return Err(self.error(raw, "blank numeric field"));
        }
        let value: f64 = text
            .parse()
            .map_err(|e: std::num::ParseFloatError| self.error(raw, e.to_string()))?;
        if !value.is_finite() {
            return Err(self.error(raw, "non-finite value"));
        }
        Ok(value)
    }

    fn integer(&self, record: &str) -> Result<u8, HitranError> {
        let raw = self.slice(record);
        let text = raw.trim();
        if text.is_empty() || !text.bytes().all(|b| b.is_ascii_digit()) {
            return Err(self.error(raw, "expected an unsigned integer"));
        }
        text.parse().map_err(|e: std::num::ParseIntError| self.error(raw, e.to_string()))
    }
}

/// Decode one 160-character record.
pub fn parse_hitran_record(record: &str) -> Result<HitranLine, HitranError> {
    let length = record.chars().count();
    if length != RECORD_LENGTH {
        return Err(HitranError::RecordLength { line: None, length });
    }
    if !record.is_ascii() {
        // Column slicing is byte based; a non-ASCII record cannot be trusted.
        let bad = record.char_indices().position(|(_, c)| !c.is_ascii()).unwrap_or(0) + 1;
        return Err(HitranError::FieldParse {
            line: None,
            field: "record",
            columns: bad..=bad,
            content: record.chars().nth(bad - 1).map(String::from).unwrap_or_default(),
            reason: "non-ASCII character".into(),
        });
    }

    let molecule_id = MOLECULE.integer(record)?;
    if !(1..=99).contains(&molecule_id) {
        return Err(MOLECULE.error(MOLECULE.slice(record), "molecule number must be in 1..=99"));
    }
    let isotopologue_id = ISOTOPOLOGUE.integer(record)?;

    let wavenumber = WAVENUMBER.real(record)?;
    if wavenumber <= 0.0 {
        return Err(WAVENUMBER.error(WAVENUMBER.slice(record), "wavenumber must be > 0"));
    }
    let intensity = INTENSITY.real(record)?;
    if intensity < 0.0 {
        return Err(INTENSITY.error(INTENSITY.slice(record), "intensity must be >= 0"));
    }
    let gamma_air = GAMMA_AIR.real(record)?;
    if gamma_air <= 0.0 {
        return Err(GAMMA_AIR.error(GAMMA_AIR.slice(record), "gamma_air must be > 0"));
    }

    Ok(HitranLine {
        molecule_id,
        isotopologue_id,
        wavenumber,
        intensity,
        einstein_a: EINSTEIN_A.real(record)?,
        gamma_air,
        gamma_self: GAMMA_SELF.real(record)?,
        lower_state_energy: LOWER_STATE_ENERGY.real(record)?,
        n_air_exponent: N_AIR.real(record)?,
        delta_air: DELTA_AIR.real(record)?,
        trailing: record[TRAILING_START - 1..].to_string(),
    })
}

/// Fortran `Fw.d` output: fixed notation, leading zero dropped when the
/// field would otherwise overflow.
fn fortran_fixed(value: f64, width: usize, decimals: usize) -> String {
    let mut s = format!("{value:.decimals$}");
    if s.len() > width {
        if let Some(rest) = s.strip_prefix("0.") {
            s = format!(".{rest}");
        } else if let Some(rest) = s.strip_prefix("-0.") {
            s = format!("-.{rest}");
        }
    }
    if s.len() > width {
        return "*".repeat(width);
    }
    format!("{s:>width$}")
}

/// HITRAN-style `E10.3`: one leading digit, signed two-digit exponent.
fn hitran_exponential(value: f64) -> String {
    let s = format!("{value:.3E}");
    let (mantissa, exp) = s.split_once('E').expect("exponential format");
    let exp: i32 = exp.parse().expect("integer exponent");
    let sign = if exp < 0 { '-' } else { '+' };
    let out = format!("{mantissa}E{sign}{:02}", exp.abs());
    if out.len() > 10 {
        return "*".repeat(10);
    }
    format!("{out:>10}")
}

impl HitranLine {
    /// Encode back into a 160-character record.
    pub fn to_record(&self) -> String {
        let mut s = String::with_capacity(RECORD_LENGTH);
        let _ = write!(s, "{:>2}", self.molecule_id);
        let _ = write!(s, "{:>1}", self.isotopologue_id);
        s.push_str(&fortran_fixed(self.wavenumber, WAVENUMBER.width(), 6));
        s.push_str(&hitran_exponential(self.intensity));
        s.push_str(&hitran_exponential(self.einstein_a));
        s.push_str(&fortran_fixed(self.gamma_air, GAMMA_AIR.width(), 4));
        s.push_str(&fortran_fixed(self.gamma_self, GAMMA_SELF.width(), 4));
        s.push_str(&fortran_fixed(self.lower_state_energy, LOWER_STATE_ENERGY.width(), 4));
        s.push_str(&fortran_fixed(self.n_air_exponent, N_AIR.width(), 2));
        s.push_str(&fortran_fixed(self.delta_air, DELTA_AIR.width(), 6));
        let tail_len = RECORD_LENGTH - (TRAILING_START - 1);
        let tail: String = self.trailing.chars().take(tail_len).collect();
        let _ = write!(s, "{tail:<tail_len$}");
        s
    }
}

/// Which records `parse_hitran_file` keeps.
#[derive(Debug, Clone, PartialEq)]
pub struct LineFilter {
    /// `None` keeps every molecule.
    pub molecule_id: Option<u8>,
    /// Inclusive wavenumber window, cm⁻¹.
    pub wavenumber_min: f64,
    pub wavenumber_max: f64,
}

impl LineFilter {
    pub fn new(molecule_id: Option<u8>, wavenumber_min: f64, wavenumber_max: f64) -> Result<Self, HitranError> {
        if !(wavenumber_min < wavenumber_max) {
            return Err(HitranError::InvalidFilter(format!(
                "lower bound {wavenumber_min} must be below upper bound {wavenumber_max}"
            )));
        }
        Ok(Self { molecule_id, wavenumber_min, wavenumber_max })
    }

    pub fn accepts(&self, line: &HitranLine) -> bool {
        self.molecule_id.is_none_or(|m| m == line.molecule_id)
            && line.wavenumber >= self.wavenumber_min
            && line.wavenumber <= self.wavenumber_max
    }
}

impl Default for LineFilter {
    fn default() -> Self {
        Self { molecule_id: None, wavenumber_min: 0.0, wavenumber_max: f64::INFINITY }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ParseMode {
    #[default]
    Strict,
    /// Skip malformed records and count them.
    Lenient,
}

/// Malformed records skipped in lenient mode.
#[derive(Debug, Default)]
pub struct Diagnostics {
    pub skipped: usize,
    /// The first few errors, each tagged with its line number.
    pub errors: Vec<HitranError>,
}

const KEPT_ERRORS: usize = 16;

#[derive(Debug, Default)]
pub struct ParsedLines {
    pub lines: Vec<HitranLine>,
    pub diagnostics: Diagnostics,
}

/// Read a line list, keeping matching records in file order. LF and CRLF
/// terminators are both accepted.
pub fn parse_hitran_file<R: BufRead>(
    reader: R,
    filter: &LineFilter,
    mode: ParseMode,
) -> Result<ParsedLines, HitranError> {
    let mut out = ParsedLines::default();
    for (idx, raw) in reader.lines().enumerate() {
        let raw = raw?;
        let record = raw.strip_suffix('\r').unwrap_or(&raw);
        match parse_hitran_record(record) {
            Ok(line) => {
                if filter.accepts(&line) {
                    out.lines.push(line);
                }
            }
            Err(e) => {
                let e = e.at_line(idx + 1);
                match mode {
                    ParseMode::Strict => return Err(e),
                    ParseMode::Lenient => {
                        out.diagnostics.skipped += 1;
                        if out.diagnostics.errors.len() < KEPT_ERRORS {
                            out.diagnostics.errors.push(e);
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Pressure and temperature of the absorbing gas.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnvironmentConditions {
    /// atm
    pub pressure: f64,
    /// K
    pub temperature: f64,
}

impl Default for EnvironmentConditions {
    fn default() -> Self {
        Self { pressure: 1.0, temperature: REFERENCE_TEMPERATURE }
    }
}

impl EnvironmentConditions {
    pub fn is_valid(&self) -> bool {
        self.pressure.is_finite() && self.pressure > 0.0 && self.temperature.is_finite() && self.temperature > 0.0
    }
}

impl HitranLine {
    /// Pressure-shifted line centre, cm⁻¹.
    pub fn shifted_center(&self, env: &EnvironmentConditions) -> f64 {
        self.wavenumber + self.delta_air * env.pressure
    }

    /// Lorentzian HWHM `γ_air·p·(296/T)^n`, cm⁻¹.
    pub fn lorentz_hwhm(&self, env: &EnvironmentConditions) -> f64 {
        self.gamma_air * env.pressure * (REFERENCE_TEMPERATURE / env.temperature).powf(self.n_air_exponent)
    }
}

/// Absorption cross section of one line at `wavenumber` (cm⁻¹), m²/molecule.
///
/// The intensity is used at its 296 K reference value; no partition-function
/// rescaling is applied, so results are only meaningful near 296 K.
pub fn lorentzian_cross_section(line: &HitranLine, wavenumber: f64, env: &EnvironmentConditions) -> f64 {
    debug_assert!(wavenumber > 0.0);
    let gamma = line.lorentz_hwhm(env);
    let detuning = wavenumber - line.shifted_center(env);
    let sigma_cm2 = line.intensity * (gamma / PI) / (detuning * detuning + gamma * gamma);
    sigma_cm2 * CM2_TO_M2
}

/// Vacuum wavenumber in cm⁻¹ of a wavelength in µm.
pub fn wavelength_to_wavenumber(wavelength_um: f64) -> f64 {
    1e4 / wavelength_um
}

/// Summed cross section of all `lines` at `wavelength_um`, m²/molecule.
pub fn cross_section_at(lines: &[HitranLine], wavelength_um: f64, env: &EnvironmentConditions) -> f64 {
    let nu = wavelength_to_wavenumber(wavelength_um);
    lines.iter().map(|l| lorentzian_cross_section(l, nu, env)).sum()
}

/// Effective on- and off-resonance absorption cross sections.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrossSectionPair {
    /// m²/molecule
    pub sigma_on: f64,
    /// m²/molecule
    pub sigma_off: f64,
    /// µm
    pub lambda_on: f64,
    /// µm
    pub lambda_off: f64,
}

impl CrossSectionPair {
    pub fn differential(&self) -> f64 {
        self.sigma_on - self.sigma_off
    }

    /// Checks `sigma_on >= sigma_off >= 0` and positive wavelengths,
    /// returning the name of the first offending field.
    pub fn validate(&self) -> Result<(), (&'static str, String)> {
        if !(self.sigma_off.is_finite() && self.sigma_off >= 0.0) {
            return Err(("sigma_off", format!("must be >= 0, got {}", self.sigma_off)));
        }
        if !(self.sigma_on.is_finite() && self.sigma_on >= self.sigma_off) {
            return Err(("sigma_on", format!("must be >= sigma_off ({}), got {}", self.sigma_off, self.sigma_on)));
        }
        if !(self.lambda_on.is_finite() && self.lambda_on > 0.0) {
            return Err(("lambda_on", format!("must be > 0, got {}", self.lambda_on)));
        }
        if !(self.lambda_off.is_finite() && self.lambda_off > 0.0) {
            return Err(("lambda_off", format!("must be > 0, got {}", self.lambda_off)));
        }
        Ok(())
    }
}

/// Reference cross sections for the 3.221 µm mid-infrared methane line and
/// the 1.65 µm short-wave infrared line, `(mir, swir)`.
///
/// Off-resonance cross sections are taken as zero; the off-resonance
/// wavelength is set equal to the on-resonance one since only the
/// difference in σ enters the model.
pub fn paper_cross_sections() -> (CrossSectionPair, CrossSectionPair) {
    let mir = CrossSectionPair { sigma_on: 1.18e-22, sigma_off: 0.0, lambda_on: 3.221, lambda_off: 3.221 };
    let swir = CrossSectionPair { sigma_on: 1.81e-24, sigma_off: 0.0, lambda_on: 1.65, lambda_off: 1.65 };
    (mir, swir)
}
