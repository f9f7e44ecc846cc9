//! Phase-scan fringes of the signal detector: simulation with shot noise,
//! visibility estimation, and inversion of on/off-resonance visibilities.
//!
//! Path convention: a scan position `z` is the one-way idler path increment
//! with the return fold already included, so the phase advances by
//! `2π·z/λ_idler` and one fringe period equals exactly one idler wavelength.
//! A mirror-translation axis would show half that period.

use std::f64::consts::PI;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::physics::{self, PhysicsError, SensorConfig, Transmittance};
use crate::random;
use crate::spectra::CrossSectionPair;

#[derive(Debug, Error)]
pub enum FringeError {
    #[error("fit failed: {0}")]
    Fit(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error(transparent)]
    Physics(#[from] PhysicsError),
    #[error("scan CSV: {0}")]
    Csv(#[from] csv::Error),
    #[error("scan CSV: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, FringeError>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FringeScanConfig {
    pub sensor: SensorConfig,
    /// Idler wavelength setting the fringe period, µm.
    pub lambda_idler: f64,
    /// Total path increment covered by the scan, µm.
    pub scan_length: f64,
    pub steps: usize,
    /// Expected counts per step at the fringe mean.
    pub counts_scale: f64,
    /// rad
    pub phase_offset: f64,
    pub rng_seed: u64,
}

impl FringeScanConfig {
    pub const MIN_STEPS: usize = 8;

    pub fn validate(&self) -> Result<()> {
        self.sensor.validate()?;
        let bad = |msg: String| Err(FringeError::Domain(msg));
        if !(self.lambda_idler.is_finite() && self.lambda_idler > 0.0) {
            return bad(format!("lambda_idler must be > 0, got {}", self.lambda_idler));
        }
        if !(self.scan_length.is_finite() && self.scan_length > 0.0) {
            return bad(format!("scan_length must be > 0, got {}", self.scan_length));
        }
        if self.steps < Self::MIN_STEPS {
            return bad(format!("steps must be >= {}, got {}", Self::MIN_STEPS, self.steps));
        }
        if !(self.counts_scale.is_finite() && self.counts_scale >= 0.0) {
            return bad(format!("counts_scale must be >= 0, got {}", self.counts_scale));
        }
        if !self.phase_offset.is_finite() {
            return bad("phase_offset must be finite".into());
        }
        Ok(())
    }

    /// Scan positions, evenly spaced from 0 to `scan_length` inclusive.
    pub fn positions(&self) -> Vec<f64> {
        let step = self.scan_length / (self.steps - 1) as f64;
        (0..self.steps).map(|i| i as f64 * step).collect()
    }
}

/// A phase scan. `sampled` is empty for a noiseless scan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FringeScan {
    /// µm
    pub positions: Vec<f64>,
    pub expected: Vec<f64>,
    pub sampled: Vec<u64>,
}

const CSV_HEADER: [&str; 3] = ["position_um", "expected", "sampled"];

impl FringeScan {
    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    /// Writes `position_um,expected,sampled`; floats use shortest
    /// round-trip formatting so reading back is bit-exact.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
        w.write_record(CSV_HEADER)?;
        for i in 0..self.len() {
            let sampled = self.sampled.get(i).map(u64::to_string).unwrap_or_default();
            w.write_record([self.positions[i].to_string(), self.expected[i].to_string(), sampled])?;
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
        let header = r.headers()?.clone();
        if header.iter().ne(CSV_HEADER) {
            return Err(FringeError::Format(format!("unexpected header {:?}", header)));
        }
        let mut scan = FringeScan { positions: Vec::new(), expected: Vec::new(), sampled: Vec::new() };
        let mut blank_sampled = 0;
        for (i, rec) in r.records().enumerate() {
            let rec = rec?;
            let parse_f = |s: &str| -> Result<f64> {
                s.parse().map_err(|_| FringeError::Format(format!("row {}: bad number {s:?}", i + 1)))
            };
            scan.positions.push(parse_f(&rec[0])?);
            scan.expected.push(parse_f(&rec[1])?);
            if rec[2].is_empty() {
                blank_sampled += 1;
            } else {
                let n = rec[2]
                    .parse()
                    .map_err(|_| FringeError::Format(format!("row {}: bad count {:?}", i + 1, &rec[2])))?;
                scan.sampled.push(n);
            }
        }
        if blank_sampled != 0 && blank_sampled != scan.len() {
            return Err(FringeError::Format("sampled column is only partly filled".into()));
        }
        Ok(scan)
    }
}

/// Noiseless scan. The expected count at position `z` is
/// `counts_scale·(1 + r + 2√r·cos φ)/(1 + r)` with `φ = 2πz/λ_idler + φ₀` and
/// `r = α·T²`, so the period-averaged level equals `counts_scale`.
pub fn expected_fringe(cfg: &FringeScanConfig, t: Transmittance) -> Result<FringeScan> {
    cfg.validate()?;
    let r = cfg.sensor.alpha * t.value().powi(2);
    let positions = cfg.positions();
    let expected = positions
        .iter()
        .map(|&z| {
            let phase = 2.0 * PI * z / cfg.lambda_idler + cfg.phase_offset;
            let level = physics::homodyne_intensity(1.0, r, phase) / (1.0 + r);
            (cfg.counts_scale * level).max(0.0)
        })
        .collect();
    Ok(FringeScan { positions, expected, sampled: Vec::new() })
}

/// Shot-noise-limited scan drawn from random stream `stream` of the
/// configured seed.
pub fn simulate_scan_stream(cfg: &FringeScanConfig, t: Transmittance, stream: u64) -> Result<FringeScan> {
    let mut scan = expected_fringe(cfg, t)?;
    let mut rng = random::stream_rng(cfg.rng_seed, stream);
    scan.sampled = scan.expected.iter().map(|&m| random::poisson(&mut rng, m)).collect();
    Ok(scan)
}

pub fn simulate_scan(cfg: &FringeScanConfig, t: Transmittance) -> Result<FringeScan> {
    simulate_scan_stream(cfg, t, 0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VisibilityEstimate {
    pub visibility: f64,
    pub visibility_std: f64,
    /// µm
    pub period: f64,
    pub mean_level: f64,
}

/// Weighted linear least squares for `A + C cos kz + S sin kz` at fixed `k`.
struct LinearFit {
    params: [f64; 3],
    chi2: f64,
}

fn basis(k: f64, z: f64) -> [f64; 3] {
    let (s, c) = (k * z).sin_cos();
    [1.0, c, s]
}

fn linear_fit(z: &[f64], y: &[f64], w: &[f64], k: f64) -> Option<LinearFit> {
    let mut ata = [[0.0; 3]; 3];
    let mut atb = [0.0; 3];
    for i in 0..z.len() {
        let b = basis(k, z[i]);
        for r in 0..3 {
            atb[r] += w[i] * b[r] * y[i];
            for c in 0..3 {
                ata[r][c] += w[i] * b[r] * b[c];
            }
        }
    }
    let params = solve::<3>(ata, atb)?;
    let chi2 = (0..z.len())
        .map(|i| {
            let b = basis(k, z[i]);
            let m = params[0] * b[0] + params[1] * b[1] + params[2] * b[2];
            w[i] * (y[i] - m).powi(2)
        })
        .sum();
    Some(LinearFit { params, chi2 })
}

/// Gaussian elimination with partial pivoting.
fn solve<const N: usize>(mut a: [[f64; N]; N], mut b: [f64; N]) -> Option<[f64; N]> {
    for col in 0..N {
        let piv = (col..N).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if !(a[piv][col].abs() > 1e-300) {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..N {
            let f = a[row][col] / a[col][col];
            for c in col..N {
                a[row][c] -= f * a[col][c];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = [0.0; N];
    for row in (0..N).rev() {
        let s: f64 = (row + 1..N).map(|c| a[row][c] * x[c]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    x.iter().all(|v| v.is_finite()).then_some(x)
}

fn invert<const N: usize>(a: [[f64; N]; N]) -> Option<[[f64; N]; N]> {
    let mut inv = [[0.0; N]; N];
    for j in 0..N {
        let mut e = [0.0; N];
        e[j] = 1.0;
        let col = solve(a, e)?;
        for i in 0..N {
            inv[i][j] = col[i];
        }
    }
    Some(inv)
}

/// Angular spatial frequency of the strongest periodogram peak.
fn dominant_wavenumber(z: &[f64], y: &[f64], span: f64) -> f64 {
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let dz = span / (z.len() - 1) as f64;
    let f_min = 0.5 / span;
    let f_max = 0.5 / dz;
    let grid = 20 * z.len();
    let mut best = (f_min, -1.0);
    for i in 0..=grid {
        let f = f_min + (f_max - f_min) * i as f64 / grid as f64;
        let k = 2.0 * PI * f;
        let (mut re, mut im) = (0.0, 0.0);
        for (zi, yi) in z.iter().zip(y) {
            let (s, c) = (k * zi).sin_cos();
            re += (yi - mean) * c;
            im += (yi - mean) * s;
        }
        let power = re * re + im * im;
        if power > best.1 {
            best = (f, power);
        }
    }
    2.0 * PI * best.0
}

fn golden_min(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if (b - a).abs() <= 1e-15 * (a.abs() + b.abs()) {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// Fit `A + B·cos(2πz/Λ + φ₀)` to a scan and report `V = |B|/A`.
///
/// Sampled counts are fitted when present, otherwise the expected curve.
/// Each point is weighted by `1/max(y, 1)`. The period search is seeded by
/// `lambda_hint` or, without one, by the strongest periodogram peak, and is
/// refined by Gauss–Newton over all four parameters.
pub fn estimate_visibility(scan: &FringeScan, lambda_hint: Option<f64>) -> Result<VisibilityEstimate> {
    let n = scan.len();
    if n < FringeScanConfig::MIN_STEPS {
        return Err(FringeError::Fit(format!("need at least {} points, got {n}", FringeScanConfig::MIN_STEPS)));
    }
    if scan.expected.len() != n || !(scan.sampled.is_empty() || scan.sampled.len() == n) {
        return Err(FringeError::Fit("scan columns have different lengths".into()));
    }
    let z = &scan.positions;
    let y: Vec<f64> = if scan.sampled.is_empty() {
        scan.expected.clone()
    } else {
        scan.sampled.iter().map(|&c| c as f64).collect()
    };
    let w: Vec<f64> = y.iter().map(|&v| 1.0 / v.max(1.0)).collect();
    let (z_min, z_max) = z.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let span = z_max - z_min;
    if !(span > 0.0) {
        return Err(FringeError::Fit("scan positions do not span any distance".into()));
    }

    let k_seed = match lambda_hint {
        Some(l) if l.is_finite() && l > 0.0 => 2.0 * PI / l,
        Some(l) => return Err(FringeError::Fit(format!("period hint must be > 0, got {l}"))),
        None => dominant_wavenumber(z, &y, span),
    };
    if span * k_seed / (2.0 * PI) < 1.5 {
        return Err(FringeError::Fit(format!(
            "scan spans {:.2} periods, at least 1.5 are needed",
            span * k_seed / (2.0 * PI)
        )));
    }

    // Coarse scan of the profile chi², then golden-section refinement.
    let chi2_at = |k: f64| linear_fit(z, &y, &w, k).map_or(f64::INFINITY, |f| f.chi2);
    let (lo, hi) = (0.8 * k_seed, 1.25 * k_seed);
    let grid = 200;
    let step = (hi - lo) / grid as f64;
    let k_coarse = (0..=grid)
        .map(|i| lo + i as f64 * step)
        .min_by(|a, b| chi2_at(*a).total_cmp(&chi2_at(*b)))
        .expect("non-empty grid");
    let mut k = golden_min(chi2_at, (k_coarse - step).max(lo), (k_coarse + step).min(hi));

    let lin = linear_fit(z, &y, &w, k).ok_or_else(|| FringeError::Fit("singular normal equations".into()))?;
    let [mut a, mut c, mut s] = lin.params;
    let mut chi2 = lin.chi2;

    let lin_cov = sandwich(z, &w, |zi| {
        let b = basis(k, zi);
        (a * b[0] + c * b[1] + s * b[2], b)
    });
    let amp = c.hypot(s);
    let amp_std = lin_cov.map(|m| (0.5 * (m[1][1] + m[2][2])).sqrt()).unwrap_or(f64::INFINITY);
    let resolved = amp > 5.0 * amp_std;

    let mut cov4 = None;
    if resolved {
        for _ in 0..50 {
            let (jtj, jtr) = normal_equations4(z, &y, &w, [a, c, s, k]);
            let Some(delta) = solve::<4>(jtj, jtr) else { break };
            let trial = [a + delta[0], c + delta[1], s + delta[2], k + delta[3]];
            let trial_chi2 = chi2_4(z, &y, &w, trial);
            if !(trial_chi2 <= chi2) {
                break;
            }
            [a, c, s, k] = trial;
            let done = (chi2 - trial_chi2) <= 1e-14 * chi2.max(1e-300);
            chi2 = trial_chi2;
            if done {
                break;
            }
        }
        cov4 = sandwich(z, &w, |zi| model4([a, c, s, k], zi));
        if cov4.is_none() {
            return Err(FringeError::Fit("singular covariance at the optimum".into()));
        }
    }

    if !(a > 0.0) {
        return Err(FringeError::Fit(format!("fitted mean level {a} is not positive")));
    }

    // Covariance of (A, C, S).
    let cov3: [[f64; 3]; 3] = match (cov4, lin_cov) {
        (Some(m), _) => std::array::from_fn(|i| std::array::from_fn(|j| m[i][j])),
        (None, Some(m)) => m,
        (None, None) => return Err(FringeError::Fit("singular normal equations".into())),
    };
    let b = c.hypot(s);
    let visibility_std = if b > 0.0 {
        let g = [-b / (a * a), c / (a * b), s / (a * b)];
        let var: f64 = (0..3).flat_map(|i| (0..3).map(move |j| (i, j))).map(|(i, j)| g[i] * cov3[i][j] * g[j]).sum();
        var.max(0.0).sqrt()
    } else {
        (0.5 * (cov3[1][1] + cov3[2][2])).sqrt() / a
    };

    Ok(VisibilityEstimate {
        visibility: (b / a).clamp(0.0, 1.0),
        visibility_std,
        period: 2.0 * PI / k.abs(),
        mean_level: a,
    })
}

/// Parameter covariance of a weighted least-squares fit whose weights need
/// not match the noise: `H⁻¹·M·H⁻¹` with `H = Σ w·jjᵀ` and
/// `M = Σ w²·μ·jjᵀ`, taking the Poisson variance `μ` from the fitted model.
/// Near a dark fringe the weights floor at one count while the true variance
/// is smaller, so plain `H⁻¹` would overstate the errors.
fn sandwich<const N: usize>(z: &[f64], w: &[f64], model: impl Fn(f64) -> (f64, [f64; N])) -> Option<[[f64; N]; N]> {
    let mut h = [[0.0; N]; N];
    let mut m = [[0.0; N]; N];
    for (&zi, &wi) in z.iter().zip(w) {
        let (mu, j) = model(zi);
        let var = mu.max(0.0);
        for r in 0..N {
            for c in 0..N {
                h[r][c] += wi * j[r] * j[c];
                m[r][c] += wi * wi * var * j[r] * j[c];
            }
        }
    }
    let hi = invert(h)?;
    let mut out = [[0.0; N]; N];
    for r in 0..N {
        for c in 0..N {
            out[r][c] = (0..N).flat_map(|i| (0..N).map(move |j| (i, j))).map(|(i, j)| hi[r][i] * m[i][j] * hi[j][c]).sum();
        }
    }
    Some(out)
}

fn model4(p: [f64; 4], z: f64) -> (f64, [f64; 4]) {
    let [a, c, s, k] = p;
    let (sn, cs) = (k * z).sin_cos();
    let value = a + c * cs + s * sn;
    (value, [1.0, cs, sn, z * (-c * sn + s * cs)])
}

fn chi2_4(z: &[f64], y: &[f64], w: &[f64], p: [f64; 4]) -> f64 {
    z.iter().zip(y).zip(w).map(|((&zi, &yi), &wi)| wi * (yi - model4(p, zi).0).powi(2)).sum()
}

fn normal_equations4(z: &[f64], y: &[f64], w: &[f64], p: [f64; 4]) -> ([[f64; 4]; 4], [f64; 4]) {
    let mut jtj = [[0.0; 4]; 4];
    let mut jtr = [0.0; 4];
    for i in 0..z.len() {
        let (m, j) = model4(p, z[i]);
        let r = y[i] - m;
        for a in 0..4 {
            jtr[a] += w[i] * j[a] * r;
            for b in 0..4 {
                jtj[a][b] += w[i] * j[a] * j[b];
            }
        }
    }
    (jtj, jtr)
}

/// `r = I_s2/I_LO` on the `r ≤ 1` branch of `V = 2√r/(1 + r)`.
pub fn return_ratio_from_visibility(v: f64) -> f64 {
    amplitude_ratio(v).powi(2)
}

/// `√r` for visibility `v`, the root of `v·s² − 2s + v = 0` with `s ≤ 1`.
fn amplitude_ratio(v: f64) -> f64 {
    let w = (1.0 - v * v).max(0.0).sqrt();
    // (1 − w)/v rewritten to avoid cancellation at small v.
    v / (1.0 + w)
}

/// Raised when the inverted return ratio is large enough that the choice of
/// root of the visibility equation matters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AmbiguityWarning {
    pub return_ratio: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransmittanceRatio {
    /// `T_on / T_off`
    pub ratio: f64,
    pub ratio_std: f64,
    /// `ln(T_off / T_on)`, fringe amplitudes scaling as `T`.
    pub daod: f64,
    pub daod_std: f64,
    pub return_ratio_on: f64,
    pub return_ratio_off: f64,
    pub warnings: Vec<AmbiguityWarning>,
}

impl TransmittanceRatio {
    /// Mixing ratio and its 1σ uncertainty.
    pub fn mixing_ratio(&self, depth: f64, n_air: f64, sigma: &CrossSectionPair) -> Result<(f64, f64)> {
        let x = physics::mixing_ratio_from_daod(self.daod, depth, n_air, sigma)?;
        let per_daod = physics::mixing_ratio_from_daod(1.0, depth, n_air, sigma)?;
        Ok((x, self.daod_std * per_daod))
    }
}

/// Compare on- and off-resonance visibilities to obtain `T_on/T_off`.
pub fn transmittance_from_visibilities(v_on: &VisibilityEstimate, v_off: &VisibilityEstimate) -> Result<TransmittanceRatio> {
    for (name, v) in [("on", v_on.visibility), ("off", v_off.visibility)] {
        if !(v > 0.0 && v <= 1.0) {
            return Err(FringeError::Domain(format!("{name}-resonance visibility must be in (0, 1], got {v}")));
        }
    }
    let s_on = amplitude_ratio(v_on.visibility);
    let s_off = amplitude_ratio(v_off.visibility);
    // d ln s / dV = 1 / (V √(1 − V²))
    let rel = |v: &VisibilityEstimate| v.visibility_std / (v.visibility * (1.0 - v.visibility.powi(2)).sqrt());
    let daod_std = rel(v_on).hypot(rel(v_off));
    let ratio = s_on / s_off;

    let mut warnings = Vec::new();
    for s in [s_on, s_off] {
        let r = s * s;
        if r > physics::STRONG_RETURN_THRESHOLD {
            warnings.push(AmbiguityWarning { return_ratio: r });
        }
    }
    Ok(TransmittanceRatio {
        ratio,
        ratio_std: ratio * daod_std,
        daod: (s_off / s_on).ln(),
        daod_std,
        return_ratio_on: s_on * s_on,
        return_ratio_off: s_off * s_off,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn config(alpha: f64, counts: f64) -> FringeScanConfig {
        let lambda = 3.392;
        FringeScanConfig {
            sensor: SensorConfig { alpha, lambda_idler: lambda, lambda_signal: 1.55, ..SensorConfig::default() },
            lambda_idler: lambda,
            scan_length: 3.0 * lambda,
            steps: 100,
            counts_scale: counts,
            phase_offset: 0.3,
            rng_seed: 42,
        }
    }

    fn peaks(scan: &FringeScan) -> Vec<f64> {
        let e = &scan.expected;
        (1..e.len() - 1)
            .filter(|&i| e[i] > e[i - 1] && e[i] >= e[i + 1])
            .map(|i| {
                // Parabolic interpolation of the sampled maximum.
                let (a, b, c) = (e[i - 1], e[i], e[i + 1]);
                let dz = scan.positions[1] - scan.positions[0];
                scan.positions[i] + 0.5 * dz * (a - c) / (a - 2.0 * b + c)
            })
            .collect()
    }

    #[test]
    fn flat_without_return() {
        let mut cfg = config(1e-30, 500.0);
        cfg.sensor.alpha = 1e-30;
        let scan = expected_fringe(&cfg, Transmittance::new(0.0).unwrap()).unwrap();
        assert!(scan.expected.iter().all(|&e| e == 500.0));
        assert!(scan.sampled.is_empty());
    }

    #[test]
    fn period_is_idler_wavelength() {
        let mut cfg = config(0.3, 1000.0);
        cfg.steps = 2000;
        let scan = expected_fringe(&cfg, Transmittance::UNITY).unwrap();
        let p = peaks(&scan);
        assert!(p.len() >= 2);
        for pair in p.windows(2) {
            assert!((pair[1] - pair[0] - cfg.lambda_idler).abs() < 1e-4, "{pair:?}");
        }
    }

    #[test]
    fn perfect_visibility_null() {
        let mut cfg = config(1.0, 800.0);
        cfg.phase_offset = 0.0;
        cfg.steps = 61;
        cfg.scan_length = 3.0 * cfg.lambda_idler;
        let scan = expected_fringe(&cfg, Transmittance::UNITY).unwrap();
        // Position index 10 sits at λ/2.
        assert_relative_eq!(scan.positions[10], cfg.lambda_idler / 2.0, max_relative = 1e-12);
        assert!(scan.expected[10].abs() < 1e-9);
        let min = scan.expected.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(min.abs() < 1e-9);
    }

    #[test]
    fn simulation_is_deterministic() {
        let cfg = config(0.437, 1000.0);
        let a = simulate_scan(&cfg, Transmittance::UNITY).unwrap();
        let b = simulate_scan(&cfg, Transmittance::UNITY).unwrap();
        assert_eq!(a, b);
        let c = simulate_scan_stream(&cfg, Transmittance::UNITY, 1).unwrap();
        assert_ne!(a.sampled, c.sampled);
        let zero = simulate_scan(&FringeScanConfig { counts_scale: 0.0, ..cfg }, Transmittance::UNITY).unwrap();
        assert!(zero.sampled.iter().all(|&s| s == 0));
    }

    #[test]
    fn poisson_mean_at_fixed_position() {
        let cfg = FringeScanConfig { steps: 8, ..config(0.2, 50.0) };
        let idx = 3;
        let trials = 10_000;
        let mut sum = 0.0;
        let mut expected = 0.0;
        for stream in 0..trials {
            let scan = simulate_scan_stream(&cfg, Transmittance::UNITY, stream).unwrap();
            sum += scan.sampled[idx] as f64;
            expected = scan.expected[idx];
        }
        let mean = sum / trials as f64;
        let sigma = (expected / trials as f64).sqrt();
        assert!((mean - expected).abs() < 4.0 * sigma, "{mean} vs {expected}");
    }

    #[test]
    fn rejects_bad_config() {
        let mut cfg = config(0.4, 100.0);
        cfg.steps = 7;
        assert!(matches!(expected_fringe(&cfg, Transmittance::UNITY), Err(FringeError::Domain(_))));
        let cfg = FringeScanConfig { scan_length: 0.0, ..config(0.4, 100.0) };
        assert!(expected_fringe(&cfg, Transmittance::UNITY).is_err());
    }

    #[test]
    fn noiseless_half_visibility() {
        // V = 0.5 ⇒ √r = 0.5/(1 + √0.75)
        let r = return_ratio_from_visibility(0.5);
        assert_relative_eq!(physics::fringe_visibility(r), 0.5, max_relative = 1e-12);
        let cfg = config(r, 2000.0);
        let scan = expected_fringe(&cfg, Transmittance::UNITY).unwrap();
        for hint in [Some(cfg.lambda_idler), None] {
            let est = estimate_visibility(&scan, hint).unwrap();
            assert!((est.visibility - 0.5).abs() < 1e-6, "{est:?}");
            assert!((est.period - cfg.lambda_idler).abs() < 1e-6, "{est:?}");
            assert_relative_eq!(est.mean_level, 2000.0, max_relative = 1e-9);
        }
    }

    #[test]
    fn noiseless_recovery_over_return_ratios() {
        for i in 0..=20 {
            let r = i as f64 / 20.0;
            let cfg = config(r.max(1e-14), 1000.0);
            let scan = expected_fringe(&cfg, Transmittance::UNITY).unwrap();
            let est = estimate_visibility(&scan, Some(cfg.lambda_idler)).unwrap();
            let v = physics::fringe_visibility(r);
            assert!((est.visibility - v).abs() < 1e-6, "r={r}: {} vs {v}", est.visibility);
        }
    }

    #[test]
    fn flat_noisy_scan_has_no_visibility() {
        let cfg = config(1e-12, 1000.0);
        let scan = simulate_scan(&cfg, Transmittance::UNITY).unwrap();
        let est = estimate_visibility(&scan, Some(cfg.lambda_idler)).unwrap();
        assert!(est.visibility < 3.0 * est.visibility_std, "{est:?}");
    }

    #[test]
    fn short_scan_is_rejected() {
        let cfg = FringeScanConfig { scan_length: 3.392, ..config(0.4, 100.0) };
        let scan = expected_fringe(&cfg, Transmittance::UNITY).unwrap();
        assert!(matches!(estimate_visibility(&scan, Some(3.392)), Err(FringeError::Fit(_))));
    }

    #[test]
    fn csv_round_trip() {
        let cfg = config(0.437, 1234.5);
        let scan = simulate_scan(&cfg, Transmittance::new(0.87).unwrap()).unwrap();
        let mut buf = Vec::new();
        scan.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("position_um,expected,sampled\n"));
        assert!(!text.contains('\r'));
        let back = FringeScan::read_csv(buf.as_slice()).unwrap();
        assert_eq!(back, scan);

        let noiseless = expected_fringe(&cfg, Transmittance::UNITY).unwrap();
        let mut buf = Vec::new();
        noiseless.write_csv(&mut buf).unwrap();
        assert_eq!(FringeScan::read_csv(buf.as_slice()).unwrap(), noiseless);
    }

    #[test]
    fn visibility_inversion() {
        let est = |v: f64| VisibilityEstimate { visibility: v, visibility_std: 0.01, period: 3.2, mean_level: 1.0 };
        let same = transmittance_from_visibilities(&est(0.4), &est(0.4)).unwrap();
        assert_relative_eq!(same.ratio, 1.0, max_relative = 1e-15);
        assert_eq!(same.daod, 0.0);

        let v_on = physics::fringe_visibility(0.0025);
        let v_off = physics::fringe_visibility(0.01);
        let out = transmittance_from_visibilities(&est(v_on), &est(v_off)).unwrap();
        assert_relative_eq!(out.ratio, 0.5, max_relative = 1e-12);
        assert_relative_eq!(out.daod, 2f64.ln(), max_relative = 1e-12);
        assert!(out.warnings.is_empty());

        assert!(matches!(transmittance_from_visibilities(&est(0.0), &est(0.5)), Err(FringeError::Domain(_))));
        let strong = transmittance_from_visibilities(&est(0.99), &est(0.5)).unwrap();
        assert_eq!(strong.warnings.len(), 1);
    }

    #[test]
    fn daod_uncertainty_matches_finite_difference() {
        let v_on = 0.3;
        let v_off = 0.6;
        let h = 1e-6;
        let daod = |a: f64, b: f64| (amplitude_ratio(b) / amplitude_ratio(a)).ln();
        let d_on = (daod(v_on + h, v_off) - daod(v_on - h, v_off)) / (2.0 * h);
        let d_off = (daod(v_on, v_off + h) - daod(v_on, v_off - h)) / (2.0 * h);
        let (s_on, s_off) = (0.02, 0.03);
        let fd = (d_on * s_on).hypot(d_off * s_off);
        let est = |v: f64, s: f64| VisibilityEstimate { visibility: v, visibility_std: s, period: 1.0, mean_level: 1.0 };
        let out = transmittance_from_visibilities(&est(v_on, s_on), &est(v_off, s_off)).unwrap();
        assert_relative_eq!(out.daod_std, fd, max_relative = 1e-6);
    }

    #[test]
    fn daod_decreases_with_on_visibility() {
        let est = |v: f64| VisibilityEstimate { visibility: v, visibility_std: 0.0, period: 1.0, mean_level: 1.0 };
        let mut last = f64::INFINITY;
        for i in 1..100 {
            let d = transmittance_from_visibilities(&est(i as f64 / 100.0), &est(0.5)).unwrap().daod;
            assert!(d < last);
            last = d;
        }
    }
}
