//! Small dense complex linear algebra on top of `nalgebra`.
//!
//! Everything here works on `n x n` matrices with `n` in the single digits, so
//! the helpers favour clarity over blocking or cache tricks. The one routine
//! on a hot path is [`orthonormalize_columns`], which runs once per cocycle
//! renormalization.

use nalgebra::DMatrix;
use num_complex::Complex64;

pub type CMatrix = DMatrix<Complex64>;

pub const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
pub const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };

/// `e^{2 pi i t}`.
pub fn unit(t: f64) -> Complex64 {
    Complex64::from_polar(1.0, std::f64::consts::TAU * t)
}

pub fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

/// Maximum absolute row sum.
pub fn inf_norm(m: &CMatrix) -> f64 {
    m.row_iter()
        .map(|row| row.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

pub fn max_abs_entry(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Inverse by partial-pivoting LU together with the infinity-norm condition
/// number `|A| |A^-1|`. Returns `None` when a pivot vanishes exactly.
pub fn inverse_with_condition(m: &CMatrix) -> Option<(CMatrix, f64)> {
    let inv = m.clone().lu().try_inverse()?;
    if inv.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return None;
    }
    let cond = inf_norm(m) * inf_norm(&inv);
    Some((inv, cond))
}

pub fn inverse(m: &CMatrix) -> Option<CMatrix> {
    inverse_with_condition(m).map(|(inv, _)| inv)
}

/// Determinant through LU; the dense reference for the rank-one lemma.
pub fn determinant(m: &CMatrix) -> Complex64 {
    m.clone().lu().determinant()
}

/// Eigenvalues from the complex Schur form.
pub fn eigenvalues(m: &CMatrix) -> Vec<Complex64> {
    if m.nrows() == 0 {
        return Vec::new();
    }
    let schur = nalgebra::Schur::new(m.clone());
    let (_, t) = schur.unpack();
    (0..t.nrows()).map(|i| t[(i, i)]).collect()
}

pub fn singular_values(m: &CMatrix) -> Vec<f64> {
    let mut s: Vec<f64> = m.clone().svd(false, false).singular_values.iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Number of singular values above `tol * max(1, sigma_max)`.
pub fn numerical_rank(m: &CMatrix, tol: f64) -> usize {
    let s = singular_values(m);
    let scale = s.first().copied().unwrap_or(0.0).max(1.0);
    s.iter().filter(|&&v| v > tol * scale).count()
}

/// Bottleneck distance between two multisets of complex numbers: the smallest
/// achievable maximum displacement over all perfect matchings.
///
/// Exhaustive over permutations up to 8 points; larger inputs fall back to the
/// Hausdorff distance, which is a lower bound.
pub fn matching_distance(a: &[Complex64], b: &[Complex64]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    if a.is_empty() {
        return 0.0;
    }
    if a.len() > 8 {
        return hausdorff_distance(a, b);
    }
    let mut perm: Vec<usize> = (0..b.len()).collect();
    let mut best = f64::INFINITY;
    permute(&mut perm, 0, &mut |p| {
        let cost = a
            .iter()
            .zip(p)
            .map(|(x, &j)| (x - b[j]).norm())
            .fold(0.0, f64::max);
        if cost < best {
            best = cost;
        }
    });
    best
}

fn permute(p: &mut Vec<usize>, k: usize, visit: &mut impl FnMut(&[usize])) {
    if k == p.len() {
        visit(p);
        return;
    }
    for i in k..p.len() {
        p.swap(k, i);
        permute(p, k + 1, visit);
        p.swap(k, i);
    }
}

pub fn hausdorff_distance(a: &[Complex64], b: &[Complex64]) -> f64 {
    let directed = |u: &[Complex64], v: &[Complex64]| {
        u.iter()
            .map(|x| v.iter().map(|y| (x - y).norm()).fold(f64::INFINITY, f64::min))
            .fold(0.0, f64::max)
    };
    directed(a, b).max(directed(b, a))
}

/// Groups a spectrum into distinct values with multiplicities, merging
/// values closer than `tol`. Each group is represented by its mean.
pub fn group_spectrum(values: &[Complex64], tol: f64) -> Vec<(Complex64, usize)> {
    let mut groups: Vec<(Complex64, Vec<Complex64>)> = Vec::new();
    for &v in values {
        match groups.iter_mut().find(|(c, _)| (c - v).norm() <= tol) {
            Some((_, members)) => members.push(v),
            None => groups.push((v, vec![v])),
        }
    }
    groups
        .into_iter()
        .map(|(_, m)| {
            let k = m.len();
            (m.iter().sum::<Complex64>() / k as f64, k)
        })
        .collect()
}

/// Integer powers of a matrix whose eigenvalues are known exactly.
///
/// Repeated squaring of a matrix with a nontrivial Jordan block is unstable:
/// rounding splits the defective eigenvalue off the unit circle and the
/// split grows exponentially with the exponent. Here the matrix is instead
/// brought to block-diagonal form `P = V diag(B_i) V^-1` over its generalized
/// eigenspaces, and each block `B_i = lambda_i (I + N_i)` with `N_i`
/// nilpotent is raised to the power `m` by the finite binomial series. The
/// result grows polynomially in `m`, as it should.
#[derive(Debug, Clone)]
pub struct SpectralPower {
    v: CMatrix,
    v_inv: CMatrix,
    /// (offset, size, eigenvalue, nilpotent part)
    blocks: Vec<(usize, usize, Complex64, CMatrix)>,
}

impl SpectralPower {
    /// `spectrum` lists the eigenvalues of `p` with multiplicity. Returns
    /// `None` when the generalized eigenspaces do not span.
    pub fn new(p: &CMatrix, spectrum: &[Complex64]) -> Option<Self> {
        let n = p.nrows();
        if spectrum.len() != n {
            return None;
        }
        let groups = group_spectrum(spectrum, 1e-9);
        let mut v = CMatrix::zeros(n, n);
        let mut offsets = Vec::with_capacity(groups.len());
        let mut col = 0;
        for &(lambda, k) in &groups {
            let shifted = p - CMatrix::identity(n, n) * lambda;
            let mut a = identity(n);
            for _ in 0..k {
                a = &a * &shifted;
            }
            // null space of (P - lambda)^k: the k weakest right singular vectors
            let svd = nalgebra::linalg::SVD::new(a, false, true);
            let v_t = svd.v_t?;
            for r in 0..k {
                let row = v_t.row(n - 1 - r);
                for i in 0..n {
                    v[(i, col + r)] = row[i].conj();
                }
            }
            offsets.push((col, k, lambda));
            col += k;
        }
        let v_inv = inverse(&v)?;
        let b = &v_inv * p * &v;
        let blocks = offsets
            .into_iter()
            .map(|(o, k, lambda)| {
                let bi = b.view((o, o), (k, k)).into_owned();
                let nil = bi / lambda - CMatrix::identity(k, k);
                (o, k, lambda, nil)
            })
            .collect();
        Some(Self { v, v_inv, blocks })
    }

    pub fn power(&self, m: u64) -> CMatrix {
        let n = self.v.nrows();
        let mut d = CMatrix::zeros(n, n);
        for (o, k, lambda, nil) in &self.blocks {
            let lambda_m = Complex64::from_polar(
                lambda.norm().powf(m as f64),
                (m as f64 * lambda.arg()).rem_euclid(std::f64::consts::TAU),
            );
            let mut term = CMatrix::identity(*k, *k);
            let mut block = term.clone();
            let mut binom = 1.0;
            for j in 1..*k {
                binom *= (m as f64 - (j - 1) as f64) / j as f64;
                term = &term * nil;
                block += &term * Complex64::new(binom, 0.0);
            }
            d.view_mut((*o, *o), (*k, *k)).copy_from(&(block * lambda_m));
        }
        &self.v * d * &self.v_inv
    }
}

/// Classical Gram-Schmidt with one reorthogonalization pass, applied in
/// place to the columns of `frame`. Writes `ln |R_jj|` into `log_diag`.
///
/// The two-pass variant keeps the columns orthonormal to machine precision,
/// which a single modified Gram-Schmidt sweep does not once the frame has
/// become strongly graded.
pub fn orthonormalize_columns(frame: &mut CMatrix, log_diag: &mut [f64]) {
    let n = frame.ncols();
    let rows = frame.nrows();
    for j in 0..n {
        for _pass in 0..2 {
            for i in 0..j {
                let mut r = ZERO;
                for k in 0..rows {
                    r += frame[(k, i)].conj() * frame[(k, j)];
                }
                for k in 0..rows {
                    let qi = frame[(k, i)];
                    frame[(k, j)] -= r * qi;
                }
            }
        }
        let norm = (0..rows).map(|k| frame[(k, j)].norm_sqr()).sum::<f64>().sqrt();
        log_diag[j] = norm.ln();
        let scale = 1.0 / norm;
        for k in 0..rows {
            frame[(k, j)] *= scale;
        }
    }
}

/// `max |Q^* Q - I|` entrywise.
pub fn orthonormality_defect(q: &CMatrix) -> f64 {
    let g = q.adjoint() * q;
    let n = g.nrows();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            let target = if i == j { ONE } else { ZERO };
            worst = worst.max((g[(i, j)] - target).norm());
        }
    }
    worst
}
