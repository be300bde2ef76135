//! Lyapunov spectrum of the monodromy cocycle over the geodesic flow.
//!
//! The accumulator keeps an orthonormal frame, multiplies it by the cocycle
//! factors and periodically re-orthonormalizes it by Gram-Schmidt, adding the
//! log-lengths of the triangular factor to running sums. The exponents are
//! those sums divided by the elapsed time.
//!
//! Time is measured in units of the flow `diag(e^t, e^-t)`, which travels
//! hyperbolic distance `2t` (curvature -1). One continued-fraction digit
//! therefore takes time `ln(1/x)`, half its roof length. This is the unit in
//! which the exponents match parabolic degrees.
//!
//! Error bars come from batch means over windows of equal digit count.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::geodesic::{GaussState, DEFAULT_REFRESH_PERIOD};
use crate::linalg::{self, CMatrix, ONE, ZERO};
use crate::monodromy::MonodromySet;
use crate::winding::{representation, CosetState, RunTable};

/// Frame entries above this abort the run.
pub const OVERFLOW_LIMIT: f64 = 1e150;
/// Frame entries above this force an early renormalization.
const SAFETY_LIMIT: f64 = 1e60;

pub const DEFAULT_QR_PERIOD: u32 = 1;
pub const DEFAULT_WINDOWS: usize = 20;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LyapunovError {
    #[error("frame entry {value:.3e} exceeded {OVERFLOW_LIMIT:e} after {steps} steps; lower the QR period")]
    Overflow { value: f64, steps: u64 },
    #[error("only {completed} of {required} windows completed")]
    InsufficientData { completed: usize, required: usize },
    #[error("factor is {rows}x{cols}, expected {n}x{n}")]
    Dimension { rows: usize, cols: usize, n: usize },
    #[error("invalid run configuration: {0}")]
    Config(String),
}

/// What one unit of "time" is when dividing the log-growth.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub enum Normalization {
    /// Flow time of `diag(e^t, e^-t)`: half the hyperbolic length.
    #[default]
    FlowTime,
    /// Hyperbolic length along the geodesic, the sum of roof times.
    HyperbolicLength,
    /// One unit per continued-fraction digit. Only useful as a control.
    PerDigit,
}

impl Normalization {
    /// Time charged for a digit whose roof length is `roof`.
    pub fn time(self, roof: f64) -> f64 {
        match self {
            Normalization::FlowTime => 0.5 * roof,
            Normalization::HyperbolicLength => roof,
            Normalization::PerDigit => 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub digits: u64,
    pub seed: u64,
    pub workers: usize,
    pub windows: usize,
    pub qr_period: u32,
    pub refresh_period: u32,
    pub normalization: Normalization,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            digits: 1_000_000,
            seed: 1,
            workers: 1,
            windows: DEFAULT_WINDOWS,
            qr_period: DEFAULT_QR_PERIOD,
            refresh_period: DEFAULT_REFRESH_PERIOD,
            normalization: Normalization::FlowTime,
        }
    }
}

impl RunConfig {
    pub fn with_digits(digits: u64) -> Self {
        Self { digits, ..Self::default() }
    }

    pub fn validate(&self) -> Result<(), LyapunovError> {
        let bad = |m: &str| Err(LyapunovError::Config(m.to_string()));
        if self.workers == 0 {
            return bad("workers must be at least 1");
        }
        if self.windows < 2 {
            return bad("at least 2 windows are needed for error bars");
        }
        if self.qr_period == 0 || self.refresh_period == 0 {
            return bad("periods must be positive");
        }
        if self.digits < (self.windows * self.workers) as u64 {
            return bad("fewer digits than windows");
        }
        Ok(())
    }
}

/// Cumulative log-sums and time at a window boundary.
#[derive(Debug, Clone, PartialEq)]
struct Snapshot {
    log_sums: Vec<f64>,
    time: f64,
}

/// Increments over one window.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Window {
    pub log_growth: Vec<f64>,
    pub time: f64,
}

#[derive(Debug, Clone)]
pub struct CocycleAccumulator {
    frame: CMatrix,
    scratch: CMatrix,
    log_diag: Vec<f64>,
    log_sums: Vec<f64>,
    elapsed: f64,
    steps: u64,
    steps_since_qr: u32,
    qr_period: u32,
    window_len: u64,
    snapshots: Vec<Snapshot>,
    /// Largest entry seen above [`OVERFLOW_LIMIT`] since the last step.
    overflow: Option<f64>,
}

impl CocycleAccumulator {
    /// `window_len` is the number of steps per error-bar window; 0 disables
    /// windowing.
    pub fn new(n: usize, qr_period: u32, window_len: u64) -> Self {
        Self {
            frame: linalg::identity(n),
            scratch: CMatrix::zeros(n, n),
            log_diag: vec![0.0; n],
            log_sums: vec![0.0; n],
            elapsed: 0.0,
            steps: 0,
            steps_since_qr: 0,
            qr_period: qr_period.max(1),
            window_len,
            snapshots: vec![Snapshot { log_sums: vec![0.0; n], time: 0.0 }],
            overflow: None,
        }
    }

    pub fn n(&self) -> usize {
        self.frame.nrows()
    }

    pub fn elapsed(&self) -> f64 {
        self.elapsed
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    pub fn frame(&self) -> &CMatrix {
        &self.frame
    }

    /// Log-sums including everything multiplied in so far.
    pub fn log_sums(&mut self) -> &[f64] {
        if self.steps_since_qr > 0 {
            self.renormalize();
        }
        &self.log_sums
    }

    /// `frame <- factor * frame`, without advancing time.
    pub fn multiply(&mut self, factor: &CMatrix) {
        self.scratch.gemm(ONE, factor, &self.frame, ZERO);
        std::mem::swap(&mut self.frame, &mut self.scratch);
        self.guard_growth();
    }

    /// `frame <- factor^T * frame`, without advancing time.
    pub fn multiply_transposed(&mut self, factor: &CMatrix) {
        self.scratch.gemm_tr(ONE, factor, &self.frame, ZERO);
        std::mem::swap(&mut self.frame, &mut self.scratch);
        self.guard_growth();
    }

    /// A long run multiplies in several large matrix powers within one step;
    /// renormalize between them rather than let the frame overflow.
    fn guard_growth(&mut self) {
        let big = linalg::max_abs_entry(&self.frame);
        if big.is_nan() || big > OVERFLOW_LIMIT {
            self.overflow = Some(self.overflow.map_or(big, |b| b.max(big)));
        }
        if big > SAFETY_LIMIT {
            self.renormalize();
        }
    }

    /// Closes one step: adds `dt`, renormalizes on schedule and records a
    /// window boundary when one is due.
    pub fn advance(&mut self, dt: f64) -> Result<(), LyapunovError> {
        self.elapsed += dt;
        self.steps += 1;
        self.steps_since_qr += 1;
        let big = linalg::max_abs_entry(&self.frame);
        if let Some(value) = self.overflow.take() {
            return Err(LyapunovError::Overflow { value, steps: self.steps });
        }
        if big.is_nan() || big > OVERFLOW_LIMIT {
            return Err(LyapunovError::Overflow { value: big, steps: self.steps });
        }
        let window_due = self.window_len > 0 && self.steps.is_multiple_of(self.window_len);
        if self.steps_since_qr >= self.qr_period || big > SAFETY_LIMIT || window_due {
            self.renormalize();
        }
        if window_due {
            self.snapshots.push(Snapshot { log_sums: self.log_sums.clone(), time: self.elapsed });
        }
        Ok(())
    }

    pub fn accumulate(&mut self, factor: &CMatrix, dt: f64) -> Result<(), LyapunovError> {
        if factor.shape() != self.frame.shape() {
            return Err(LyapunovError::Dimension { rows: factor.nrows(), cols: factor.ncols(), n: self.n() });
        }
        self.multiply(factor);
        self.advance(dt)
    }

    fn renormalize(&mut self) {
        linalg::orthonormalize_columns(&mut self.frame, &mut self.log_diag);
        for (s, d) in self.log_sums.iter_mut().zip(&self.log_diag) {
            *s += d;
        }
        self.steps_since_qr = 0;
    }

    /// Per-window increments recorded so far.
    pub fn windows(&self) -> Vec<Window> {
        self.snapshots
            .windows(2)
            .map(|w| Window {
                log_growth: w[1].log_sums.iter().zip(&w[0].log_sums).map(|(b, a)| b - a).collect(),
                time: w[1].time - w[0].time,
            })
            .collect()
    }

    pub fn finalize(&mut self, windows: usize) -> Result<LyapunovEstimate, LyapunovError> {
        let digits = self.steps;
        let time = self.elapsed;
        let sums = self.log_sums().to_vec();
        let parts = vec![WorkerResult { log_sums: sums, time, digits, windows: self.windows() }];
        combine(&parts, windows)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LyapunovEstimate {
    /// Sorted descending.
    pub exponents: Vec<f64>,
    pub stderr: Vec<f64>,
    /// Standard error of `lambda_1 + ... + lambda_k`, for `k = 1..n`.
    pub partial_sum_stderr: Vec<f64>,
    pub sum_positive: f64,
    pub sum_positive_stderr: f64,
    pub elapsed_time: f64,
    pub digits: u64,
    pub windows: usize,
}

impl LyapunovEstimate {
    pub fn n(&self) -> usize {
        self.exponents.len()
    }

    /// `lambda_1 + ... + lambda_k`.
    pub fn partial_sum(&self, k: usize) -> f64 {
        self.exponents[..k].iter().sum()
    }
}

/// Raw output of one worker, with columns already sorted descending.
#[derive(Debug, Clone)]
struct WorkerResult {
    log_sums: Vec<f64>,
    time: f64,
    digits: u64,
    windows: Vec<Window>,
}

impl WorkerResult {
    fn sorted(mut self) -> Self {
        let mut order: Vec<usize> = (0..self.log_sums.len()).collect();
        order.sort_by(|&a, &b| self.log_sums[b].total_cmp(&self.log_sums[a]));
        let permute = |v: &[f64]| order.iter().map(|&i| v[i]).collect::<Vec<f64>>();
        self.log_sums = permute(&self.log_sums);
        for w in &mut self.windows {
            w.log_growth = permute(&w.log_growth);
        }
        self
    }
}

/// Time-weighted batch-means standard error of a ratio estimator
/// `sum(g) / sum(t)` from per-batch `(g, t)`.
pub fn batch_stderr(growth: &[f64], times: &[f64]) -> f64 {
    let k = growth.len();
    if k < 2 {
        return f64::NAN;
    }
    let total_t: f64 = times.iter().sum();
    let mean = growth.iter().sum::<f64>() / total_t;
    let ss: f64 = growth.iter().zip(times).map(|(g, t)| (g - mean * t).powi(2)).sum();
    (ss / (total_t * total_t) * k as f64 / (k as f64 - 1.0)).sqrt()
}

/// Groups consecutive windows into `batches` batches of equal count.
fn batch(windows: &[Window], batches: usize) -> Vec<Window> {
    let per = windows.len() / batches;
    windows
        .chunks(per.max(1))
        .take(batches)
        .map(|chunk| {
            let n = chunk[0].log_growth.len();
            let mut log_growth = vec![0.0; n];
            let mut time = 0.0;
            for w in chunk {
                for (acc, g) in log_growth.iter_mut().zip(&w.log_growth) {
                    *acc += g;
                }
                time += w.time;
            }
            Window { log_growth, time }
        })
        .collect()
}

fn combine(parts: &[WorkerResult], windows_per_worker: usize) -> Result<LyapunovEstimate, LyapunovError> {
    let parts: Vec<WorkerResult> = parts.iter().cloned().map(WorkerResult::sorted).collect();
    let n = parts[0].log_sums.len();
    let mut pooled: Vec<Window> = Vec::new();
    for p in &parts {
        if p.windows.len() < windows_per_worker {
            return Err(LyapunovError::InsufficientData {
                completed: p.windows.len(),
                required: windows_per_worker,
            });
        }
        pooled.extend(batch(&p.windows, windows_per_worker));
    }
    let time: f64 = parts.iter().map(|p| p.time).sum();
    let digits: u64 = parts.iter().map(|p| p.digits).sum();
    let exponents: Vec<f64> = (0..n).map(|i| parts.iter().map(|p| p.log_sums[i]).sum::<f64>() / time).collect();
    let times: Vec<f64> = pooled.iter().map(|w| w.time).collect();
    let column = |f: &dyn Fn(&Window) -> f64| -> f64 {
        let g: Vec<f64> = pooled.iter().map(f).collect();
        batch_stderr(&g, &times)
    };
    let stderr: Vec<f64> = (0..n).map(|i| column(&|w| w.log_growth[i])).collect();
    let partial_sum_stderr: Vec<f64> =
        (1..=n).map(|k| column(&|w| w.log_growth[..k].iter().sum())).collect();
    let positive: Vec<usize> = (0..n).filter(|&i| exponents[i] > 0.0).collect();
    let sum_positive: f64 = positive.iter().map(|&i| exponents[i]).sum();
    let sum_positive_stderr = if positive.is_empty() {
        0.0
    } else {
        column(&|w| positive.iter().map(|&i| w.log_growth[i]).sum())
    };
    Ok(LyapunovEstimate {
        exponents,
        stderr,
        partial_sum_stderr,
        sum_positive,
        sum_positive_stderr,
        elapsed_time: time,
        digits,
        windows: pooled.len(),
    })
}

/// Runs one worker's share of the simulation.
fn run_worker(
    table: &RunTable,
    cfg: &RunConfig,
    stream: u64,
    digits: u64,
) -> Result<WorkerResult, LyapunovError> {
    let window_len = digits / cfg.windows as u64;
    let mut acc = CocycleAccumulator::new(table.n(), cfg.qr_period, window_len);
    let mut gauss = GaussState::with_stream(cfg.seed, stream, cfg.refresh_period);
    let mut coset = CosetState::Id;
    for _ in 0..digits {
        let ev = gauss.step();
        let (_, next) = table.run_factors(coset, ev.letter, ev.digit, |f| acc.multiply_transposed(f));
        coset = next;
        acc.advance(cfg.normalization.time(ev.roof_time))?;
    }
    let log_sums = acc.log_sums().to_vec();
    Ok(WorkerResult { log_sums, time: acc.elapsed(), digits, windows: acc.windows() })
}

/// Estimates the spectrum of the cocycle induced by `ms` along random
/// geodesics.
///
/// The product over a geodesic is `rho(g_1) rho(g_2) ... rho(g_K)`; the frame
/// is advanced by the transposed factors, which builds the transposed product
/// and so has the same singular values. Workers use independent streams of
/// the same seed and split the digit budget evenly.
pub fn estimate(ms: &MonodromySet, cfg: &RunConfig) -> Result<LyapunovEstimate, LyapunovError> {
    cfg.validate()?;
    let table = RunTable::new(&representation(ms));
    let per_worker = cfg.digits / cfg.workers as u64;
    let parts: Result<Vec<WorkerResult>, LyapunovError> = (0..cfg.workers as u64)
        .into_par_iter()
        .map(|w| run_worker(&table, cfg, w, per_worker))
        .collect();
    combine(&parts?, cfg.windows)
}

/// Unitary `n x n` matrix from the QR factorization of `m`.
pub fn unitary_from(m: DMatrix<Complex64>) -> CMatrix {
    let mut q = m;
    let mut logs = vec![0.0; q.ncols()];
    linalg::orthonormalize_columns(&mut q, &mut logs);
    q
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    fn diag(values: &[f64]) -> CMatrix {
        CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
            values.len(),
            values.iter().map(|&v| Complex64::new(v, 0.0)),
        ))
    }

    #[test]
    fn identity_cocycle_is_flat() {
        let mut acc = CocycleAccumulator::new(3, 4, 10);
        for _ in 0..100 {
            acc.accumulate(&linalg::identity(3), 0.7).unwrap();
        }
        let est = acc.finalize(10).unwrap();
        assert!(est.exponents.iter().all(|&l| l.abs() < 1e-15));
    }

    #[test]
    fn diagonal_cocycle() {
        let mut acc = CocycleAccumulator::new(2, 8, 100);
        let f = diag(&[2.0, 0.5]);
        for _ in 0..1000 {
            acc.accumulate(&f, 1.0).unwrap();
        }
        let est = acc.finalize(10).unwrap();
        assert!((est.exponents[0] - 2f64.ln()).abs() < 1e-9);
        assert!((est.exponents[1] + 2f64.ln()).abs() < 1e-9);
        assert!(est.stderr.iter().all(|&s| s < 1e-12), "{:?}", est.stderr);
        assert!((est.sum_positive - 2f64.ln()).abs() < 1e-9);
    }

    #[test]
    fn exponents_come_out_sorted() {
        let mut acc = CocycleAccumulator::new(3, 1, 10);
        let f = diag(&[0.5, 3.0, 1.0]);
        for _ in 0..100 {
            acc.accumulate(&f, 1.0).unwrap();
        }
        let est = acc.finalize(5).unwrap();
        assert!((est.exponents[0] - 3f64.ln()).abs() < 1e-9, "{:?}", est.exponents);
        assert!(est.exponents[1].abs() < 1e-9);
        assert!((est.exponents[2] - 0.5f64.ln()).abs() < 1e-9);
    }

    #[test]
    fn unitary_steps_keep_zero_log_sums() {
        let m = CMatrix::from_fn(3, 3, |i, j| Complex64::new((i * 3 + j) as f64 + 1.0, (i as f64) - (j as f64)));
        let u = unitary_from(m);
        let mut acc = CocycleAccumulator::new(3, 3, 0);
        for _ in 0..1000 {
            acc.accumulate(&u, 1.0).unwrap();
        }
        assert!(acc.log_sums().iter().all(|s| s.abs() < 1e-10));
        assert!(linalg::orthonormality_defect(acc.frame()) < 1e-12);
    }

    #[test]
    fn overflow_is_reported() {
        let mut acc = CocycleAccumulator::new(1, 100, 0);
        let err = acc.accumulate(&diag(&[1e200]), 1.0).unwrap_err();
        assert!(matches!(err, LyapunovError::Overflow { .. }));
    }

    #[test]
    fn too_few_windows() {
        let mut acc = CocycleAccumulator::new(1, 1, 10);
        for _ in 0..15 {
            acc.accumulate(&diag(&[2.0]), 1.0).unwrap();
        }
        assert!(matches!(acc.finalize(2), Err(LyapunovError::InsufficientData { completed: 1, required: 2 })));
    }

    #[test]
    fn batch_stderr_of_constant_rate_is_zero() {
        assert!(batch_stderr(&[2.0, 4.0, 1.0], &[1.0, 2.0, 0.5]) < 1e-15);
        let s = batch_stderr(&[1.0, 3.0], &[1.0, 1.0]);
        // slopes 1 and 3 around mean 2
        assert!((s - 1.0).abs() < 1e-12);
    }

    #[test]
    fn config_validation() {
        assert!(RunConfig::default().validate().is_ok());
        let cfg = RunConfig { windows: 1, ..RunConfig::default() };
        assert!(matches!(cfg.validate(), Err(LyapunovError::Config(_))));
    }
}
