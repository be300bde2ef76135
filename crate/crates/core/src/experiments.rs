//! Numerical experiments: Calabi-Yau families, the rank-two weight-one
//! scan and the weight-two slice, with CSV and JSON output.
//!
//! Grid points are independent; they are run in parallel and collected in
//! grid order. Every point uses the same seed, so differences between
//! neighbouring points are not swamped by sampling noise.

use std::io::Write;
use std::time::Instant;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::hodge::{analyze, parabolic_degrees, HodgeError, MarkerKind};
use crate::linalg::{self, CMatrix};
use crate::lyapunov::{estimate, LyapunovError, LyapunovEstimate, RunConfig};
use crate::monodromy::{self, MonodromyError, MonodromySet};
use crate::params::{reduce_mod1, HGParams, ParamError};

/// Allowed slack when checking that eigenvalues of `(TS)^-1` are unimodular.
pub const UNIMODULAR_TOL: f64 = 1e-6;
/// Systematic error allowed on top of `3 stderr` when calling a gap zero.
/// Long runs resolve a bias of a few thousandths in the Calabi-Yau sums
/// that the batch-means error bar does not see.
pub const GAP_ALLOWANCE: f64 = 0.01;
/// Round-trip accuracy required of a realized `(mu1, mu2)`.
pub const REALIZATION_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Monodromy(#[from] MonodromyError),
    #[error(transparent)]
    Lyapunov(#[from] LyapunovError),
    #[error(transparent)]
    Hodge(#[from] HodgeError),
    #[error("(TS)^-1 has eigenvalues off the unit circle for C = {c}, d = {d}")]
    NonUnimodular { c: f64, d: f64 },
    #[error("no real (C, d) realizes (mu1, mu2) = ({mu1}, {mu2})")]
    NoRealization { mu1: f64, mu2: f64 },
    #[error("parameters lie on a chamber wall: {0}")]
    ChamberWall(String),
    #[error("writing results: {0}")]
    Output(String),
}

impl From<ParamError> for ExperimentError {
    fn from(e: ParamError) -> Self {
        ExperimentError::ChamberWall(e.to_string())
    }
}

fn wall(e: HodgeError) -> ExperimentError {
    match e {
        HodgeError::IntegerGamma(_) | HodgeError::InvalidParams(_) => ExperimentError::ChamberWall(e.to_string()),
        other => ExperimentError::Hodge(other),
    }
}

/// One row of the published Calabi-Yau tables.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CyCase {
    pub c: f64,
    pub d: f64,
    pub mu1: f64,
    pub mu2: f64,
    /// Published `lambda_1 + lambda_2`.
    pub sum12: f64,
    /// Published `lambda_1`.
    pub lambda1: f64,
    /// Whether the sum of exponents meets the degree bound.
    pub good: bool,
}

const fn case(c: f64, d: f64, sum12: f64, lambda1: f64, mu1: f64, mu2: f64, good: bool) -> CyCase {
    CyCase { c, d, mu1, mu2, sum12, lambda1, good }
}

/// The seven families with `lambda_1 + lambda_2 = 2 (mu1 + mu2)` followed by
/// the seven with strict inequality.
pub const CY_CASES: [CyCase; 14] = [
    case(46.0, 1.0, 1.0, 0.97, 1.0 / 12.0, 5.0 / 12.0, true),
    case(44.0, 2.0, 1.0, 0.95, 1.0 / 8.0, 3.0 / 8.0, true),
    case(52.0, 4.0, 4.0 / 3.0, 1.27, 1.0 / 6.0, 1.0 / 2.0, true),
    case(50.0, 5.0, 6.0 / 5.0, 1.12, 1.0 / 5.0, 2.0 / 5.0, true),
    case(56.0, 8.0, 3.0 / 2.0, 1.40, 1.0 / 4.0, 1.0 / 2.0, true),
    case(60.0, 12.0, 5.0 / 3.0, 1.53, 1.0 / 3.0, 1.0 / 2.0, true),
    case(64.0, 16.0, 2.0, 1.75, 1.0 / 2.0, 1.0 / 2.0, true),
    case(22.0, 1.0, 0.92, 0.75, 1.0 / 6.0, 1.0 / 6.0, false),
    case(34.0, 1.0, 0.83, 0.77, 1.0 / 10.0, 3.0 / 10.0, false),
    case(32.0, 2.0, 0.97, 0.84, 1.0 / 6.0, 1.0 / 4.0, false),
    case(42.0, 3.0, 1.06, 0.96, 1.0 / 6.0, 1.0 / 3.0, false),
    case(40.0, 4.0, 1.30, 1.07, 1.0 / 4.0, 1.0 / 4.0, false),
    case(48.0, 6.0, 1.31, 1.15, 1.0 / 4.0, 1.0 / 3.0, false),
    case(54.0, 9.0, 1.60, 1.34, 1.0 / 3.0, 1.0 / 3.0, false),
];

fn real_matrix(rows: [[f64; 4]; 4]) -> CMatrix {
    CMatrix::from_fn(4, 4, |i, j| Complex64::new(rows[i][j], 0.0))
}

/// `T` (unipotent, monodromy at 0) and `S` (reflection, monodromy at 1).
pub fn cy_matrices(c: f64, d: f64) -> (CMatrix, CMatrix) {
    let t = real_matrix([
        [1.0, 0.0, 0.0, 0.0],
        [1.0, 1.0, 0.0, 0.0],
        [0.5, 1.0, 1.0, 0.0],
        [1.0 / 6.0, 0.5, 1.0, 1.0],
    ]);
    let s = real_matrix([
        [1.0, -c / 12.0, 0.0, -d],
        [0.0, 1.0, 0.0, 0.0],
        [0.0, 0.0, 1.0, 0.0],
        [0.0, 0.0, 0.0, 1.0],
    ]);
    (t, s)
}

/// `(12 a, 12 b)` for the characteristic polynomial
/// `x^4 - a x^3 + b x^2 - a x + 1` of `(TS)^-1`. Scaling by 12 keeps the
/// coefficients exact for integral `(C, d)`.
fn cy_char_coeffs12(c: f64, d: f64) -> (f64, f64) {
    (48.0 - c - 2.0 * d, 72.0 - 2.0 * c + 8.0 * d)
}

/// `(mu1, mu2)` with `0 <= mu1 <= mu2 <= 1/2` such that `(TS)^-1` has
/// eigenvalues `e^{+-2 pi i mu1}, e^{+-2 pi i mu2}`.
///
/// The polynomial is palindromic, so `cos 2 pi mu` are the roots of
/// `t^2 - (a/2) t + (b - 2)/4`. Solving this in closed form keeps full
/// accuracy where a numerical eigensolver loses half the digits to the
/// repeated eigenvalues of several table entries.
pub fn cy_mu(c: f64, d: f64) -> Result<(f64, f64), ExperimentError> {
    let (a12, b12) = cy_char_coeffs12(c, d);
    let mut disc = a12 * a12 - 48.0 * b12 + 1152.0;
    let scale = 1152.0 + a12 * a12 + 48.0 * b12.abs();
    if disc < 0.0 {
        if disc < -UNIMODULAR_TOL * scale {
            return Err(ExperimentError::NonUnimodular { c, d });
        }
        disc = 0.0;
    }
    let root = disc.sqrt();
    let mut mus = [0.0; 2];
    for (slot, sign) in mus.iter_mut().zip([1.0, -1.0]) {
        let cos = (a12 + sign * root) / 48.0;
        if cos.abs() > 1.0 + UNIMODULAR_TOL {
            return Err(ExperimentError::NonUnimodular { c, d });
        }
        *slot = cos.clamp(-1.0, 1.0).acos() / std::f64::consts::TAU;
    }
    Ok((mus[0].min(mus[1]), mus[0].max(mus[1])))
}

/// Real `(C, d)` whose `(TS)^-1` has the spectrum `e^{+-2 pi i mu1},
/// e^{+-2 pi i mu2}`. The two trace conditions are linear in `(C, d)`.
///
/// The round trip is checked on the characteristic polynomial, which is
/// well conditioned, rather than on the angles, which are not at repeated
/// or real eigenvalues.
pub fn realize_mu(mu1: f64, mu2: f64) -> Result<(f64, f64), ExperimentError> {
    let tau = std::f64::consts::TAU;
    let (c1, c2) = ((tau * mu1).cos(), (tau * mu2).cos());
    let a = 2.0 * (c1 + c2);
    let b = 2.0 + 4.0 * c1 * c2;
    let d = 2.0 - 2.0 * a + b;
    let c = 48.0 - 12.0 * a - 2.0 * d;
    let (a12, b12) = cy_char_coeffs12(c, d);
    let close = (a12 / 12.0 - a).abs() <= REALIZATION_TOL && (b12 / 12.0 - b).abs() <= REALIZATION_TOL;
    if !close || cy_mu(c, d).is_err() {
        return Err(ExperimentError::NoRealization { mu1, mu2 });
    }
    Ok((c, d))
}

/// Monodromy of the family with `M0 = T`, `M1 = S`, carrying the exact local
/// exponents: unipotent at 0 and `+-mu1, +-mu2` at infinity.
pub fn cy_monodromy(c: f64, d: f64) -> Result<MonodromySet, ExperimentError> {
    let (mu1, mu2) = cy_mu(c, d)?;
    cy_monodromy_with(c, d, mu1, mu2)
}

/// As [`cy_monodromy`] with the angles supplied, for realized points where
/// the target angles are more accurate than ones recomputed from `(C, d)`.
pub fn cy_monodromy_with(c: f64, d: f64, mu1: f64, mu2: f64) -> Result<MonodromySet, ExperimentError> {
    let (t, s) = cy_matrices(c, d);
    let ms = monodromy::from_explicit(t, s)?;
    Ok(ms.with_exponents(vec![0.0; 4], vec![mu1, -mu1, mu2, -mu2]))
}

/// Eigenvalue moduli of `(TS)^-1`, for diagnostics.
pub fn cy_moduli(c: f64, d: f64) -> Vec<f64> {
    let (t, s) = cy_matrices(c, d);
    let ts = &t * &s;
    linalg::inverse(&ts).map(|m| linalg::eigenvalues(&m).iter().map(|z| z.norm()).collect()).unwrap_or_default()
}

/// One output record. Parameter columns are experiment specific; all rows
/// of one experiment share them.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultRow {
    pub experiment: String,
    pub point: usize,
    pub params: Vec<(String, f64)>,
    pub lambda: Vec<f64>,
    pub stderr: Vec<f64>,
    pub sum_positive: f64,
    pub sum_positive_stderr: f64,
    pub deg_par: Vec<f64>,
    /// What the exponents are compared against; see [`ResultRow::gap`].
    pub reference: f64,
    /// Measured quantity minus `reference`.
    pub gap: f64,
    pub gap_stderr: f64,
    pub label: String,
    pub runtime_s: f64,
    pub digits: u64,
    pub seed: u64,
}

impl ResultRow {
    pub fn param(&self, name: &str) -> Option<f64> {
        self.params.iter().find(|(k, _)| k == name).map(|&(_, v)| v)
    }

    /// Gap is within three standard errors, plus [`GAP_ALLOWANCE`], of zero.
    pub fn gap_is_zero(&self) -> bool {
        self.gap.abs() <= 3.0 * self.gap_stderr + GAP_ALLOWANCE
    }
}

fn base_row(experiment: &str, point: usize, est: &LyapunovEstimate, cfg: &RunConfig, runtime: f64) -> ResultRow {
    ResultRow {
        experiment: experiment.to_string(),
        point,
        params: Vec::new(),
        lambda: est.exponents.clone(),
        stderr: est.stderr.clone(),
        sum_positive: est.sum_positive,
        sum_positive_stderr: est.sum_positive_stderr,
        deg_par: Vec::new(),
        reference: f64::NAN,
        gap: f64::NAN,
        gap_stderr: f64::NAN,
        label: String::new(),
        runtime_s: runtime,
        digits: est.digits,
        seed: cfg.seed,
    }
}

fn cy_row(
    experiment: &str,
    point: usize,
    c: f64,
    d: f64,
    (mu1, mu2): (f64, f64),
    cfg: &RunConfig,
) -> Result<ResultRow, ExperimentError> {
    let start = Instant::now();
    let est = estimate(&cy_monodromy_with(c, d, mu1, mu2)?, cfg)?;
    let mut row = base_row(experiment, point, &est, cfg, start.elapsed().as_secs_f64());
    row.params = vec![("c".into(), c), ("d".into(), d), ("mu1".into(), mu1), ("mu2".into(), mu2)];
    row.reference = 2.0 * (mu1 + mu2);
    row.gap = est.partial_sum(2) - row.reference;
    row.gap_stderr = est.partial_sum_stderr[1];
    row.label = if row.gap_is_zero() { "good" } else { "bad" }.to_string();
    Ok(row)
}

/// Runs all 14 table families. Rows carry the published values as
/// `expected_sum12` and `expected_lambda1`, and `expected_good` as 0 or 1.
pub fn cy_table(cfg: &RunConfig) -> Result<Vec<ResultRow>, ExperimentError> {
    CY_CASES
        .par_iter()
        .enumerate()
        .map(|(i, case)| {
            let mut row = cy_row("cy-table", i, case.c, case.d, cy_mu(case.c, case.d)?, cfg)?;
            row.params.push(("expected_sum12".into(), case.sum12));
            row.params.push(("expected_lambda1".into(), case.lambda1));
            row.params.push(("expected_good".into(), if case.good { 1.0 } else { 0.0 }));
            Ok(row)
        })
        .collect()
}

/// Points `(i, j) / (2 grid)` with `1 <= i <= j <= grid`.
pub fn mu_grid(grid: usize) -> Vec<(f64, f64)> {
    let step = 0.5 / grid as f64;
    (1..=grid).flat_map(|i| (i..=grid).map(move |j| (i as f64 * step, j as f64 * step))).collect()
}

/// Runs the Calabi-Yau family at each `(mu1, mu2)`, realized by real
/// `(C, d)`. The `line` column is `3 mu2 - mu1 - 1`, zero on the line
/// through `(1/2, 1/2)` along which the bound is attained.
pub fn scan_mu_plane(points: &[(f64, f64)], cfg: &RunConfig) -> Result<Vec<ResultRow>, ExperimentError> {
    points
        .par_iter()
        .enumerate()
        .map(|(i, &(mu1, mu2))| {
            let (c, d) = realize_mu(mu1, mu2)?;
            let mut row = cy_row("scan-mu", i, c, d, (mu1.min(mu2), mu1.max(mu2)), cfg)?;
            row.params.push(("line".into(), 3.0 * mu2 - mu1 - 1.0));
            Ok(row)
        })
        .collect()
}

/// Builds the monodromy, runs the estimator and attaches the degrees.
fn hg_row(
    experiment: &str,
    point: usize,
    params: &HGParams,
    cfg: &RunConfig,
) -> Result<(ResultRow, crate::hodge::Diagram), ExperimentError> {
    let start = Instant::now();
    let diagram = analyze(params).map_err(wall)?;
    let est = estimate(&monodromy::build(params)?, cfg)?;
    let mut row = base_row(experiment, point, &est, cfg, start.elapsed().as_secs_f64());
    row.deg_par = parabolic_degrees(&diagram).deg_par;
    Ok((row, diagram))
}

/// `alpha = (r, 2r)`, `beta = (0, x)`.
pub fn n2_params(r: f64, x: f64) -> Result<HGParams, ExperimentError> {
    Ok(HGParams::new(vec![reduce_mod1(r), reduce_mod1(2.0 * r)], vec![0.0, reduce_mod1(x)])?)
}

/// Zone of `(r, x)` in the rank-two scan, read off the diagram.
///
/// Zone 3 is the alternating order. Otherwise the two `alpha`s are
/// adjacent and the zone depends on which `beta` starts the walk at
/// level 0 (`0` for zones 4 and 5, `x` for zones 1 and 2) and on
/// `floor(gamma)` (0 for zones 1 and 4, 1 for zones 2 and 5).
pub fn n2_zone(r: f64, x: f64) -> Result<u8, ExperimentError> {
    let d = analyze(&n2_params(r, x)?).map_err(wall)?;
    if d.is_alternating() {
        return Ok(3);
    }
    let bottom = d
        .entries
        .iter()
        .find(|m| m.kind == MarkerKind::Beta && m.f == 0)
        .expect("a non-alternating rank-two walk has a beta at level 0");
    Ok(match (bottom.index, d.gamma_floor) {
        (0, 0) => 4,
        (0, _) => 5,
        (_, 0) => 1,
        _ => 2,
    })
}

/// Closed-form `lambda_1` for each zone.
pub fn n2_zone_formula(zone: u8, r: f64, x: f64) -> f64 {
    match zone {
        1 => 2.0 * (1.0 - 2.0 * r),
        2 => 2.0 * (r - x),
        4 => 2.0 * (x - 2.0 * r),
        5 => 2.0 * r,
        _ => 0.0,
    }
}

/// Runs the rank-two family at each `(r, x)`. The reference is
/// `2 deg_par(E^1)` and the gap `lambda_1 - 2 deg_par(E^1)`.
pub fn n2_scan(points: &[(f64, f64)], cfg: &RunConfig) -> Result<Vec<ResultRow>, ExperimentError> {
    points
        .par_iter()
        .enumerate()
        .map(|(i, &(r, x))| {
            let zone = n2_zone(r, x)?;
            let (mut row, _) = hg_row("n2", i, &n2_params(r, x)?, cfg)?;
            row.params = vec![("r".into(), r), ("x".into(), x), ("zone".into(), zone as f64)];
            row.reference = 2.0 * row.deg_par[0];
            row.gap = row.lambda[0] - row.reference;
            row.gap_stderr = row.stderr[0];
            row.label = format!("zone{zone}");
            Ok(row)
        })
        .collect()
}

/// Gaps `theta` between consecutive exponents in the order
/// `0 = alpha_1 < alpha_2 < alpha_3 < beta_1 < beta_2 < beta_3 < 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Weight2Config {
    pub theta: [f64; 5],
}

impl Weight2Config {
    /// The slice `(x, x, 1/2, y, y)`.
    pub fn slice(x: f64, y: f64) -> Self {
        Self { theta: [x, x, 0.5, y, y] }
    }

    pub fn params(&self) -> Result<HGParams, ExperimentError> {
        let t = self.theta;
        if t.iter().any(|&v| v.is_nan() || v <= 0.0) || t.iter().sum::<f64>() >= 1.0 {
            return Err(ExperimentError::ChamberWall(format!(
                "theta = {t:?} must be positive with sum below 1"
            )));
        }
        let mut acc = [0.0; 6];
        for k in 0..5 {
            acc[k + 1] = acc[k] + t[k];
        }
        Ok(HGParams::new(acc[..3].to_vec(), acc[3..].to_vec())?)
    }
}

/// Runs the weight-two slice at each `(x, y)`. The reference is twice the
/// degree of the two top Hodge bundles, `2 (deg_par(E^1) + deg_par(E^2))`,
/// and the gap is `lambda_1` minus that.
pub fn weight2_scan(points: &[(f64, f64)], cfg: &RunConfig) -> Result<Vec<ResultRow>, ExperimentError> {
    points
        .par_iter()
        .enumerate()
        .map(|(i, &(x, y))| {
            let params = Weight2Config::slice(x, y).params()?;
            let (mut row, diagram) = hg_row("weight2", i, &params, cfg)?;
            debug_assert_eq!(diagram.h, vec![1, 1, 1]);
            row.params = vec![("x".into(), x), ("y".into(), y), ("x_plus_y".into(), x + y)];
            row.reference = 2.0 * (row.deg_par[0] + row.deg_par[1]);
            row.gap = row.lambda[0] - row.reference;
            row.gap_stderr = row.stderr[0];
            row.label = if row.gap.abs() <= 3.0 * row.gap_stderr { "equal" } else { "strict" }.to_string();
            Ok(row)
        })
        .collect()
}

/// A single run at arbitrary parameters; the reference is `2 deg_par(E^1)`
/// and the gap compares it with the sum of positive exponents.
pub fn lyap_row(params: &HGParams, cfg: &RunConfig) -> Result<ResultRow, ExperimentError> {
    let (mut row, diagram) = hg_row("lyap", 0, params, cfg)?;
    for (i, &a) in params.alpha().iter().enumerate() {
        row.params.push((format!("alpha_{}", i + 1), a));
    }
    for (j, &b) in params.beta().iter().enumerate() {
        row.params.push((format!("beta_{}", j + 1), b));
    }
    row.reference = 2.0 * row.deg_par[0];
    row.gap = row.sum_positive - row.reference;
    row.gap_stderr = row.sum_positive_stderr;
    row.label = format!("weight{}", diagram.weight());
    Ok(row)
}

/// Column names for `rows`, which must share their parameter names.
pub fn csv_header(rows: &[ResultRow]) -> Vec<String> {
    let n = rows.iter().map(|r| r.lambda.len()).max().unwrap_or(0);
    let mut h = vec!["experiment".to_string(), "point".to_string()];
    if let Some(first) = rows.first() {
        h.extend(first.params.iter().map(|(k, _)| k.clone()));
    }
    h.extend((1..=n).map(|i| format!("lambda_{i}")));
    h.extend((1..=n).map(|i| format!("stderr_{i}")));
    h.extend(["sum_positive", "sum_positive_stderr"].map(String::from));
    h.extend((1..=n).map(|i| format!("deg_par_{i}")));
    h.extend(["reference", "gap", "gap_stderr", "label", "runtime_s", "digits", "seed"].map(String::from));
    h
}

fn fmt(v: f64) -> String {
    if v.is_nan() {
        String::new()
    } else {
        v.to_string()
    }
}

/// Writes `rows` as CSV with one header line and LF line endings.
pub fn write_csv<W: Write>(rows: &[ResultRow], out: W) -> Result<(), ExperimentError> {
    let header = csv_header(rows);
    let n = rows.iter().map(|r| r.lambda.len()).max().unwrap_or(0);
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    let err = |e: csv::Error| ExperimentError::Output(e.to_string());
    w.write_record(&header).map_err(err)?;
    for row in rows {
        let pad = |v: &[f64]| (0..n).map(|i| v.get(i).map_or(String::new(), |&x| fmt(x))).collect::<Vec<_>>();
        let mut rec = vec![row.experiment.clone(), row.point.to_string()];
        rec.extend(row.params.iter().map(|&(_, v)| fmt(v)));
        rec.extend(pad(&row.lambda));
        rec.extend(pad(&row.stderr));
        rec.push(fmt(row.sum_positive));
        rec.push(fmt(row.sum_positive_stderr));
        rec.extend(pad(&row.deg_par));
        rec.extend([fmt(row.reference), fmt(row.gap), fmt(row.gap_stderr), row.label.clone()]);
        rec.extend([fmt(row.runtime_s), row.digits.to_string(), row.seed.to_string()]);
        w.write_record(&rec).map_err(err)?;
    }
    w.flush().map_err(|e| ExperimentError::Output(e.to_string()))
}

/// Rows as a JSON array of flat objects keyed like the CSV columns.
pub fn to_json(rows: &[ResultRow]) -> serde_json::Value {
    let header = csv_header(rows);
    let mut buf = Vec::new();
    write_csv(rows, &mut buf).expect("writing to memory");
    let mut reader = csv::Reader::from_reader(buf.as_slice());
    let objects = reader
        .records()
        .map(|rec| {
            let rec = rec.expect("reading back our own CSV");
            let map = header
                .iter()
                .zip(rec.iter())
                .map(|(k, v)| {
                    let value = match v.parse::<f64>() {
                        Ok(x) if k != "label" && k != "experiment" => serde_json::json!(x),
                        _ if v.is_empty() => serde_json::Value::Null,
                        _ => serde_json::json!(v),
                    };
                    (k.clone(), value)
                })
                .collect::<serde_json::Map<_, _>>();
            serde_json::Value::Object(map)
        })
        .collect();
    serde_json::Value::Array(objects)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_mus_are_exact() {
        for case in CY_CASES {
            let (m1, m2) = cy_mu(case.c, case.d).unwrap();
            assert!((m1 - case.mu1).abs() < 1e-9, "{case:?}: {m1}");
            assert!((m2 - case.mu2).abs() < 1e-9, "{case:?}: {m2}");
        }
    }

    #[test]
    fn table_spectra_are_unimodular() {
        for case in CY_CASES {
            for m in cy_moduli(case.c, case.d) {
                assert!((m - 1.0).abs() < 1e-3, "{case:?}: {m}");
            }
        }
    }

    #[test]
    fn non_unimodular_is_rejected() {
        assert!(matches!(cy_mu(200.0, 1.0), Err(ExperimentError::NonUnimodular { .. })));
    }

    #[test]
    fn realization_round_trips() {
        for case in CY_CASES {
            let (c, d) = realize_mu(case.mu1, case.mu2).unwrap();
            assert!((c - case.c).abs() < 1e-9 && (d - case.d).abs() < 1e-9, "{case:?}: {c} {d}");
        }
        for (m1, m2) in mu_grid(10) {
            realize_mu(m1, m2).unwrap();
        }
    }

    #[test]
    fn zones() {
        assert_eq!(n2_zone(0.1, 0.55).unwrap(), 5);
        assert_eq!(n2_zone(0.4, 0.1).unwrap(), 1);
        assert_eq!(n2_zone(0.2, 0.1).unwrap(), 2);
        assert_eq!(n2_zone(0.3, 0.7).unwrap(), 4);
        assert_eq!(n2_zone(0.3, 0.45).unwrap(), 3);
        assert!(matches!(n2_zone(0.1, 0.2), Err(ExperimentError::ChamberWall(_))));
    }

    #[test]
    fn zone_formulas_agree_with_degrees() {
        for &(r, x) in &[(0.1, 0.55), (0.4, 0.1), (0.2, 0.1), (0.3, 0.7), (0.3, 0.45), (0.05, 0.7), (0.45, 0.2)] {
            let zone = n2_zone(r, x).unwrap();
            let deg = parabolic_degrees(&analyze(&n2_params(r, x).unwrap()).unwrap());
            assert!((2.0 * deg.deg_par[0] - n2_zone_formula(zone, r, x)).abs() < 1e-12, "{r} {x} zone {zone}");
        }
    }

    #[test]
    fn weight2_order() {
        let p = Weight2Config::slice(0.05, 0.1).params().unwrap();
        let d = analyze(&p).unwrap();
        assert_eq!(d.h, vec![1, 1, 1]);
        assert_eq!(d.f_alpha, vec![1, 2, 3]);
        assert!(matches!(Weight2Config::slice(0.2, 0.1).params(), Err(ExperimentError::ChamberWall(_))));
    }

    #[test]
    fn csv_layout() {
        let cfg = RunConfig { digits: 4000, windows: 4, ..RunConfig::default() };
        let rows = n2_scan(&[(0.1, 0.55), (0.3, 0.45)], &cfg).unwrap();
        let mut buf = Vec::new();
        write_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 3);
        assert!(!text.contains('\r'));
        assert!(lines[0].starts_with("experiment,point,r,x,zone,lambda_1,lambda_2,stderr_1"));
        assert!(lines[0].ends_with("reference,gap,gap_stderr,label,runtime_s,digits,seed"));
        assert!(lines[1].starts_with("n2,0,0.1,0.55,5,"));
        let json = to_json(&rows);
        assert_eq!(json[1]["zone"], serde_json::json!(3.0));
        assert_eq!(json[0]["label"], serde_json::json!("zone5"));
    }
}
