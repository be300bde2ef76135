//! Monodromy of the hypergeometric equation around 0, 1 and infinity.
//!
//! With distinct exponents the local monodromy at 0 is diagonalizable, and in
//! an eigenbasis of `M0` the reflection `M1` is the identity plus a rank-one
//! matrix whose row vector `w` is pinned down by requiring `M_inf` to have
//! eigenvalues `e^{-2 pi i beta_j}`. That is a single `n x n` linear solve.
//!
//! Convention: `M_inf * M0 * M1 = Id`.

use nalgebra::DVector;
use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::linalg::{self, CMatrix, ONE, ZERO};
use crate::params::{HGParams, ParamError};

/// Condition number above which the construction refuses to proceed.
pub const MAX_CONDITION: f64 = 1e12;
pub const RELATION_TOL: f64 = 1e-9;
pub const EIGEN_TOL: f64 = 1e-7;
pub const RANK_TOL: f64 = 1e-8;
pub const MODULUS_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MonodromyError {
    #[error(transparent)]
    InvalidParams(#[from] ParamError),
    #[error("linear system for the rank-one vector is numerically singular (condition {condition:.3e})")]
    SingularSystem { condition: f64 },
    #[error("M0 * M1 is not invertible")]
    SingularMatrix,
    #[error("matrices must be square and of equal size, got {0}x{1} and {2}x{3}")]
    DimensionMismatch(usize, usize, usize, usize),
}

/// Intermediate data of [`build`], kept for diagnostics.
#[derive(Debug, Clone)]
pub struct ConstructionTrace {
    /// `N_ij = 1 / (e^{2 pi i beta_j} - e^{2 pi i alpha_i})`.
    pub n_matrix: CMatrix,
    /// Solution of `w^T N = 1^T`.
    pub w: DVector<Complex64>,
    pub condition: f64,
}

/// Exponents of the local monodromies: `M0` has eigenvalues
/// `e^{2 pi i alpha}` and `M_inf` has `e^{-2 pi i beta}`, with multiplicity.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalExponents {
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct MonodromySet {
    pub m0: CMatrix,
    pub m1: CMatrix,
    pub minf: CMatrix,
    pub trace: Option<ConstructionTrace>,
    /// Known exactly for constructed sets; lets large powers of the cusp
    /// loops be formed without eigenvalue drift.
    pub exponents: Option<LocalExponents>,
}

impl MonodromySet {
    pub fn n(&self) -> usize {
        self.m0.nrows()
    }

    /// `|M_inf M0 M1 - Id|_inf`.
    pub fn relation_residual(&self) -> f64 {
        let r = &self.minf * &self.m0 * &self.m1 - linalg::identity(self.n());
        linalg::inf_norm(&r)
    }

    /// Relation tolerance scaled by the conditioning of the construction.
    pub fn relation_tolerance(&self) -> f64 {
        let cond = self.trace.as_ref().map_or(1.0, |t| t.condition.max(1.0));
        RELATION_TOL * cond
    }

    /// Largest deviation of an eigenvalue modulus of `M0` or `M_inf` from 1.
    pub fn modulus_defect(&self) -> f64 {
        linalg::eigenvalues(&self.m0)
            .into_iter()
            .chain(linalg::eigenvalues(&self.minf))
            .map(|z| (z.norm() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// Attaches exact local exponents to an explicitly given set.
    pub fn with_exponents(mut self, alpha: Vec<f64>, beta: Vec<f64>) -> Self {
        self.exponents = Some(LocalExponents { alpha, beta });
        self
    }

    /// Simultaneous conjugation `P M P^-1` of all three matrices.
    pub fn conjugated(&self, p: &CMatrix) -> Option<Self> {
        let p_inv = linalg::inverse(p)?;
        Some(Self {
            m0: p * &self.m0 * &p_inv,
            m1: p * &self.m1 * &p_inv,
            minf: p * &self.minf * &p_inv,
            trace: None,
            exponents: self.exponents.clone(),
        })
    }
}

/// `det(diag(d) + 1 x^T)`.
///
/// Expands to `prod d_i + sum_i x_i prod_{j != i} d_j`, which stays exact when
/// some `d_i` vanish.
pub fn det_diag_plus_rank_one(d: &[Complex64], x: &[Complex64]) -> Complex64 {
    assert_eq!(d.len(), x.len(), "d and x must have equal length");
    let n = d.len();
    // prefix[i] = d_0 ... d_{i-1}, suffix[i] = d_i ... d_{n-1}
    let mut prefix = vec![ONE; n + 1];
    let mut suffix = vec![ONE; n + 1];
    for i in 0..n {
        prefix[i + 1] = prefix[i] * d[i];
        suffix[n - 1 - i] = suffix[n - i] * d[n - 1 - i];
    }
    let mut total = prefix[n];
    for i in 0..n {
        total += x[i] * prefix[i] * suffix[i + 1];
    }
    total
}

/// Builds `(M0, M1, M_inf)` from distinct parameters.
pub fn build(params: &HGParams) -> Result<MonodromySet, MonodromyError> {
    let n = params.n();
    let a: Vec<Complex64> = params.alpha().iter().map(|&t| linalg::unit(t)).collect();
    let b: Vec<Complex64> = params.beta().iter().map(|&t| linalg::unit(t)).collect();

    let n_matrix = CMatrix::from_fn(n, n, |i, j| ONE / (b[j] - a[i]));
    let nt = n_matrix.transpose();
    let (nt_inv, condition) =
        linalg::inverse_with_condition(&nt).ok_or(MonodromyError::SingularSystem { condition: f64::INFINITY })?;
    if condition.is_nan() || condition > MAX_CONDITION {
        return Err(MonodromyError::SingularSystem { condition });
    }
    let w = &nt_inv * DVector::from_element(n, ONE);

    let m0 = CMatrix::from_diagonal(&DVector::from_vec(a.clone()));
    // M0^-1 1 w^T: row i is w^T / a_i
    let m1 = CMatrix::from_fn(n, n, |i, j| {
        let delta = if i == j { ONE } else { ZERO };
        delta + w[j] / a[i]
    });
    let minf = linalg::inverse(&(&m0 * &m1)).ok_or(MonodromyError::SingularMatrix)?;
    Ok(MonodromySet {
        m0,
        m1,
        minf,
        trace: Some(ConstructionTrace { n_matrix, w, condition }),
        exponents: Some(LocalExponents { alpha: params.alpha().to_vec(), beta: params.beta().to_vec() }),
    })
}

/// Accepts arbitrary `M0`, `M1` and completes the triple with
/// `M_inf = (M0 M1)^-1`. Eigenvalue moduli are not enforced; see
/// [`MonodromySet::modulus_defect`].
pub fn from_explicit(m0: CMatrix, m1: CMatrix) -> Result<MonodromySet, MonodromyError> {
    if !m0.is_square() || m0.shape() != m1.shape() {
        return Err(MonodromyError::DimensionMismatch(m0.nrows(), m0.ncols(), m1.nrows(), m1.ncols()));
    }
    let minf = linalg::inverse(&(&m0 * &m1)).ok_or(MonodromyError::SingularMatrix)?;
    Ok(MonodromySet { m0, m1, minf, trace: None, exponents: None })
}

/// Outcome of one numeric check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Check {
    pub value: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl Check {
    fn at_most(value: f64, tolerance: f64) -> Self {
        Self { value, tolerance, pass: value <= tolerance }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub relation: Check,
    /// Distance between the spectrum of `M0` and `{e^{2 pi i alpha}}`.
    pub m0_spectrum: Check,
    /// Distance between the spectrum of `M_inf` and `{e^{-2 pi i beta}}`.
    pub minf_spectrum: Check,
    pub reflection_rank: usize,
    pub reflection_rank_ok: bool,
}

impl VerifyReport {
    pub fn all_pass(&self) -> bool {
        self.relation.pass && self.m0_spectrum.pass && self.minf_spectrum.pass && self.reflection_rank_ok
    }
}

/// Checks a monodromy triple against the local exponents it should realize.
///
/// Spectra are compared with a matching distance, so multiplicities count.
pub fn verify(ms: &MonodromySet, params: &HGParams) -> VerifyReport {
    let want0: Vec<Complex64> = params.alpha().iter().map(|&t| linalg::unit(t)).collect();
    let want_inf: Vec<Complex64> = params.beta().iter().map(|&t| linalg::unit(-t)).collect();
    let d0 = linalg::matching_distance(&linalg::eigenvalues(&ms.m0), &want0);
    let dinf = linalg::matching_distance(&linalg::eigenvalues(&ms.minf), &want_inf);
    let rank = linalg::numerical_rank(&(&ms.m1 - linalg::identity(ms.n())), RANK_TOL);
    VerifyReport {
        relation: Check::at_most(ms.relation_residual(), ms.relation_tolerance()),
        m0_spectrum: Check::at_most(d0, EIGEN_TOL),
        minf_spectrum: Check::at_most(dinf, EIGEN_TOL),
        reflection_rank: rank,
        reflection_rank_ok: rank == 1,
    }
}
