//! Hodge data of a hypergeometric local system read off from the cyclic
//! order of its exponents.
//!
//! Walking once around the circle through the sorted `alpha`s and `beta`s,
//! stepping up at each `alpha` and down at each `beta`, gives the
//! intertwining function `f` (shifted to have minimum 0). The Hodge numbers
//! count `alpha`s per level, the local Hodge invariants put each exponent at
//! a level given by `f`, and the parabolic degrees of the Hodge bundles have
//! a closed form in the same data.
//!
//! [`ds_recursion_oracle`] recomputes the local invariants independently by
//! peeling off one `(alpha, beta)` pair at a time, as in middle convolution.

use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

use crate::params::{reduce_mod1, HGParams, ParamError};

/// Distance from an integer below which `gamma` counts as integral.
pub const INTEGER_GAMMA_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HodgeError {
    #[error(transparent)]
    InvalidParams(#[from] ParamError),
    #[error("gamma = {0} is an integer up to {INTEGER_GAMMA_TOL:e}; the Hodge data jumps on this wall")]
    IntegerGamma(f64),
    #[error("no pair of sub-problems with non-integral gamma exists")]
    NoDecomposition,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum MarkerKind {
    Alpha,
    Beta,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Marker {
    /// Representative in `[alpha_star, alpha_star + 1)`.
    pub value: f64,
    pub kind: MarkerKind,
    /// Index into the original `alpha` or `beta` list.
    pub index: usize,
    pub f: usize,
    /// 1-based position among markers of the same kind, counted from
    /// `alpha_star`.
    pub appearance: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Diagram {
    /// All `2n` markers in cyclic order starting at `alpha_star`.
    pub entries: Vec<Marker>,
    pub alpha_star: f64,
    /// `f` of `alpha_i`, in input order.
    pub f_alpha: Vec<usize>,
    /// `f` of `beta_j`, in input order.
    pub f_beta: Vec<usize>,
    /// `h[i - 1] = #{alpha : f(alpha) = i}` for `i = 1..n`.
    pub h: Vec<usize>,
    pub gamma: f64,
    pub gamma_floor: usize,
    pub gamma_frac: f64,
    /// `(sum of h at even levels, sum at odd levels)`.
    pub signature: (usize, usize),
}

impl Diagram {
    pub fn n(&self) -> usize {
        self.f_alpha.len()
    }

    /// True when `alpha`s and `beta`s alternate around the circle, the
    /// weight-zero case.
    pub fn is_alternating(&self) -> bool {
        self.entries.windows(2).all(|w| w[0].kind != w[1].kind)
    }

    /// Number of nonzero Hodge numbers minus one.
    pub fn weight(&self) -> usize {
        self.h.iter().filter(|&&k| k > 0).count().saturating_sub(1)
    }

    /// Representatives of `alpha` in input order.
    pub fn alpha_reps(&self) -> Vec<f64> {
        self.reps(MarkerKind::Alpha)
    }

    pub fn beta_reps(&self) -> Vec<f64> {
        self.reps(MarkerKind::Beta)
    }

    fn reps(&self, kind: MarkerKind) -> Vec<f64> {
        let mut out = vec![0.0; self.n()];
        for m in self.entries.iter().filter(|m| m.kind == kind) {
            out[m.index] = m.value;
        }
        out
    }
}

/// Where a local invariant lives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Singularity {
    Zero,
    One,
    Infinity,
}

/// One nonzero `nu^p_a = 1`: the eigenvalue `e^{2 pi i a}` of the residue
/// sits in Hodge level `p`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LocalEntry {
    pub singularity: Singularity,
    /// Jump in `[0, 1)`.
    pub jump: f64,
    pub level: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LocalInvariants {
    pub entries: Vec<LocalEntry>,
}

impl LocalInvariants {
    /// Number of entries at `singularity` in level `p`.
    pub fn total(&self, singularity: Singularity, p: usize) -> usize {
        self.entries.iter().filter(|e| e.singularity == singularity && e.level == p).count()
    }

    /// Entries keyed for exact comparison: jumps rounded to 1e-9.
    pub fn canonical(&self) -> BTreeMap<(Singularity, i64, usize), usize> {
        let mut map = BTreeMap::new();
        for e in &self.entries {
            let key = (e.singularity, (e.jump * 1e9).round() as i64 % 1_000_000_000, e.level);
            *map.entry(key).or_insert(0) += 1;
        }
        map
    }

    /// Levels of `alpha_i`, `beta_j` and of the exponent at 1, in input
    /// order, when the entries come from a single parameter set.
    fn from_levels(params: &HGParams, la: &[usize], lb: &[usize], lg: usize) -> Self {
        let mut entries = Vec::with_capacity(2 * params.n() + 1);
        for (&a, &l) in params.alpha().iter().zip(la) {
            entries.push(LocalEntry { singularity: Singularity::Zero, jump: a, level: l });
        }
        for (&b, &l) in params.beta().iter().zip(lb) {
            entries.push(LocalEntry { singularity: Singularity::Infinity, jump: reduce_mod1(-b), level: l });
        }
        entries.push(LocalEntry { singularity: Singularity::One, jump: params.gamma_frac(), level: lg });
        Self { entries }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DegreeReport {
    /// `delta^p` for `p = 1..n`.
    pub delta: Vec<i64>,
    /// Parabolic degree of the Hodge bundle `E^p` for `p = 1..n`.
    pub deg_par: Vec<f64>,
}

impl DegreeReport {
    pub fn total(&self) -> f64 {
        self.deg_par.iter().sum()
    }
}

fn check_gamma(gamma: f64) -> Result<(), HodgeError> {
    let frac = gamma - gamma.floor();
    if !(INTEGER_GAMMA_TOL..=1.0 - INTEGER_GAMMA_TOL).contains(&frac) {
        return Err(HodgeError::IntegerGamma(gamma));
    }
    Ok(())
}

/// Builds the intertwining diagram.
///
/// `f` is intrinsic to the circle; what needs choosing is the base point
/// `alpha_star` that fixes the representatives, hence `gamma` and the
/// appearance order. Every `alpha` right after a zero of `f` is a candidate;
/// the one used is the first whose window `[alpha_star, alpha_star + 1)`
/// ends in `floor(gamma)` consecutive `beta`s, or the first candidate if
/// none does. This makes the degrees invariant under rotating all
/// parameters.
pub fn analyze(params: &HGParams) -> Result<Diagram, HodgeError> {
    let n = params.n();
    check_gamma(params.beta().iter().sum::<f64>() - params.alpha().iter().sum::<f64>())?;

    let mut sorted: Vec<(f64, MarkerKind, usize)> = params
        .alpha()
        .iter()
        .enumerate()
        .map(|(i, &a)| (a, MarkerKind::Alpha, i))
        .chain(params.beta().iter().enumerate().map(|(j, &b)| (b, MarkerKind::Beta, j)))
        .collect();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));

    let mut walk = Vec::with_capacity(2 * n);
    let mut v: i64 = 0;
    for &(_, kind, _) in &sorted {
        v += if kind == MarkerKind::Alpha { 1 } else { -1 };
        walk.push(v);
    }
    let min = *walk.iter().min().expect("n >= 1");
    let f: Vec<usize> = walk.iter().map(|&w| (w - min) as usize).collect();

    let mut fallback = None;
    for zero in (0..2 * n).filter(|&k| f[k] == 0) {
        let start = (zero + 1) % (2 * n);
        let d = diagram_from(&sorted, &f, start);
        if d.gamma_floor == 0
            || d.entries[2 * n - d.gamma_floor..].iter().all(|m| m.kind == MarkerKind::Beta)
        {
            return Ok(d);
        }
        fallback.get_or_insert(d);
    }
    Ok(fallback.expect("the walk attains its minimum"))
}

fn diagram_from(sorted: &[(f64, MarkerKind, usize)], f: &[usize], start: usize) -> Diagram {
    let len = sorted.len();
    let n = len / 2;
    let alpha_star = sorted[start].0;
    debug_assert_eq!(sorted[start].1, MarkerKind::Alpha);
    let mut entries = Vec::with_capacity(len);
    let (mut na, mut nb) = (0, 0);
    let mut f_alpha = vec![0; n];
    let mut f_beta = vec![0; n];
    let (mut sum_a, mut sum_b) = (0.0, 0.0);
    for t in 0..len {
        let k = (start + t) % len;
        let (value, kind, index) = sorted[k];
        let value = if value >= alpha_star { value } else { value + 1.0 };
        let appearance = match kind {
            MarkerKind::Alpha => {
                na += 1;
                f_alpha[index] = f[k];
                sum_a += value;
                na
            }
            MarkerKind::Beta => {
                nb += 1;
                f_beta[index] = f[k];
                sum_b += value;
                nb
            }
        };
        entries.push(Marker { value, kind, index, f: f[k], appearance });
    }
    let mut h = vec![0; n];
    for &fa in &f_alpha {
        h[fa - 1] += 1;
    }
    let gamma = sum_b - sum_a;
    let gamma_floor = gamma.floor() as usize;
    let even: usize = h.iter().enumerate().filter(|(i, _)| (i + 1) % 2 == 0).map(|(_, &k)| k).sum();
    Diagram {
        entries,
        alpha_star,
        f_alpha,
        f_beta,
        h,
        gamma,
        gamma_floor,
        gamma_frac: gamma - gamma.floor(),
        signature: (even, n - even),
    }
}

/// Closed-form local Hodge invariants: `alpha_m` at level `f(alpha_m)` over
/// 0, `-beta_m` at level `f(beta_m) + 1` over infinity, and `gamma` at level
/// `floor(gamma) + 1` over 1.
pub fn local_invariants(params: &HGParams, d: &Diagram) -> LocalInvariants {
    let lb: Vec<usize> = d.f_beta.iter().map(|&f| f + 1).collect();
    LocalInvariants::from_levels(params, &d.f_alpha, &lb, d.gamma_floor + 1)
}

/// `delta^p = -#{beta : f = p - 1, appearance <= n - floor(gamma)}` and
/// `deg_par(E^p) = delta^p + [p = floor(gamma) + 1] {gamma}
///   + sum_{f(alpha) = p} alpha + sum_{f(beta) = p - 1} (1 - beta)`.
pub fn parabolic_degrees(d: &Diagram) -> DegreeReport {
    let n = d.n();
    let mut delta = vec![0i64; n];
    let mut deg_par = vec![0.0; n];
    for p in 1..=n {
        let mut dp = 0i64;
        let mut s = 0.0;
        for m in &d.entries {
            match m.kind {
                MarkerKind::Alpha if m.f == p => s += m.value,
                MarkerKind::Beta if m.f + 1 == p => {
                    s += 1.0 - m.value;
                    if m.appearance + d.gamma_floor <= n {
                        dp -= 1;
                    }
                }
                _ => {}
            }
        }
        if p == d.gamma_floor + 1 {
            s += d.gamma_frac;
        }
        delta[p - 1] = dp;
        deg_par[p - 1] = dp as f64 + s;
    }
    DegreeReport { delta, deg_par }
}

/// `|p - q|`, the number of Lyapunov exponents forced to vanish.
pub fn signature_zeros(d: &Diagram) -> usize {
    d.signature.0.abs_diff(d.signature.1)
}

/// Levels `(alpha levels, beta levels, gamma level)` from the middle
/// convolution recursion, normalized so the lowest `alpha` sits at level 1.
type Levels = (Vec<usize>, Vec<usize>, usize);

/// Levels after lifting one removal; the removed pair is unknown.
type PartialLevels = (Vec<Option<i64>>, Vec<Option<i64>>, i64);

/// Local Hodge invariants computed by induction on the rank.
///
/// Removing `alpha_k` and `beta_j` leaves a rank `n - 1` system; tensoring
/// back and convolving with `alpha_0 = {beta_j - alpha_k}` raises by one the
/// level of every marker strictly between `alpha_k` and `beta_j` on the
/// circle, and raises the exponent at 1 iff `{gamma~} + alpha_0 >= 1`. One
/// removal says nothing about the removed pair, so two removals with disjoint
/// pairs are combined, aligned through the common exponent at 1. Pairs whose
/// reduced `gamma~` is integral are skipped. The base case `n = 1` puts
/// everything in level 1.
pub fn ds_recursion_oracle(params: &HGParams) -> Result<LocalInvariants, HodgeError> {
    check_gamma(params.beta().iter().sum::<f64>() - params.alpha().iter().sum::<f64>())?;
    let (la, lb, lg) = ds_levels(params.alpha(), params.beta())?;
    Ok(LocalInvariants::from_levels(params, &la, &lb, lg))
}

fn reduced_gamma(alpha: &[f64], beta: &[f64], k: usize, j: usize) -> f64 {
    let sa: f64 = alpha.iter().enumerate().filter(|&(i, _)| i != k).map(|(_, a)| a).sum();
    let sb: f64 = beta.iter().enumerate().filter(|&(i, _)| i != j).map(|(_, b)| b).sum();
    reduce_mod1(sb - sa)
}

fn ds_levels(alpha: &[f64], beta: &[f64]) -> Result<Levels, HodgeError> {
    let n = alpha.len();
    if n == 1 {
        return Ok((vec![1], vec![1], 1));
    }
    let usable = |k: usize, j: usize| {
        let g = reduced_gamma(alpha, beta, k, j);
        g > INTEGER_GAMMA_TOL && g < 1.0 - INTEGER_GAMMA_TOL
    };
    let pairs: Vec<(usize, usize)> =
        (0..n).flat_map(|k| (0..n).map(move |j| (k, j))).filter(|&(k, j)| usable(k, j)).collect();
    let (p1, p2) = pairs
        .iter()
        .find_map(|&p| pairs.iter().find(|q| q.0 != p.0 && q.1 != p.1).map(|&q| (p, q)))
        .ok_or(HodgeError::NoDecomposition)?;

    let lift = |k: usize, j: usize| -> Result<PartialLevels, HodgeError> {
        let a2: Vec<f64> = alpha.iter().enumerate().filter(|&(i, _)| i != k).map(|(_, &a)| a).collect();
        let b2: Vec<f64> = beta.iter().enumerate().filter(|&(i, _)| i != j).map(|(_, &b)| b).collect();
        let (la2, lb2, lg2) = ds_levels(&a2, &b2)?;
        let a0 = reduce_mod1(beta[j] - alpha[k]);
        let between = |t: f64| reduce_mod1(t - alpha[k]) < a0;
        let mut la = vec![None; n];
        let mut lb = vec![None; n];
        for (slot, (i, &a)) in alpha.iter().enumerate().filter(|&(i, _)| i != k).enumerate() {
            la[i] = Some(la2[slot] as i64 + between(a) as i64);
        }
        for (slot, (i, &b)) in beta.iter().enumerate().filter(|&(i, _)| i != j).enumerate() {
            lb[i] = Some(lb2[slot] as i64 + between(b) as i64);
        }
        let g_tilde = reduce_mod1(b2.iter().sum::<f64>() - a2.iter().sum::<f64>());
        let lg = lg2 as i64 + (g_tilde + a0 >= 1.0) as i64;
        Ok((la, lb, lg))
    };

    let (la1, lb1, lg1) = lift(p1.0, p1.1)?;
    let (la2, lb2, lg2) = lift(p2.0, p2.1)?;
    let shift = lg1 - lg2;
    let merge = |first: &[Option<i64>], second: &[Option<i64>]| -> Vec<i64> {
        first
            .iter()
            .zip(second)
            .map(|(a, b)| match (a, b) {
                (Some(a), Some(b)) => {
                    debug_assert_eq!(*a, b + shift, "decompositions disagree");
                    *a
                }
                (Some(a), None) => *a,
                (None, Some(b)) => b + shift,
                (None, None) => unreachable!("the two removed pairs are disjoint"),
            })
            .collect()
    };
    let la = merge(&la1, &la2);
    let lb = merge(&lb1, &lb2);
    let base = 1 - la.iter().min().expect("n >= 2");
    let norm = |v: i64| (v + base) as usize;
    Ok((la.into_iter().map(norm).collect(), lb.into_iter().map(norm).collect(), norm(lg1)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(a: &[f64], b: &[f64]) -> HGParams {
        HGParams::new(a.to_vec(), b.to_vec()).unwrap()
    }

    #[test]
    fn alternating_rank_two() {
        let p = params(&[0.3, 0.6], &[0.45, 0.0]);
        let d = analyze(&p).unwrap();
        assert!(d.is_alternating());
        assert_eq!(d.f_alpha, vec![1, 1]);
        assert_eq!(d.f_beta, vec![0, 0]);
        assert_eq!(d.h, vec![2, 0]);
        assert_eq!(signature_zeros(&d), 2);
        assert_eq!(d.weight(), 0);
    }

    #[test]
    fn zone_five_walk() {
        let p = params(&[0.1, 0.2], &[0.0, 0.55]);
        let d = analyze(&p).unwrap();
        assert_eq!(d.f_alpha, vec![1, 2]);
        // beta = 0 is represented by 1 and comes last
        assert_eq!(d.f_beta, vec![0, 1]);
        assert_eq!(d.beta_reps(), vec![1.0, 0.55]);
        assert_eq!(d.h, vec![1, 1]);
        assert!((d.gamma - 1.25).abs() < 1e-12);
        assert_eq!(d.gamma_floor, 1);
        assert_eq!(signature_zeros(&d), 0);
        let deg = parabolic_degrees(&d);
        assert!((deg.deg_par[0] - 0.1).abs() < 1e-12, "{deg:?}");
        assert!((deg.deg_par[1] + 0.1).abs() < 1e-12);
    }

    #[test]
    fn zone_one_degree() {
        let p = params(&[0.4, 0.8], &[0.0, 0.1]);
        let deg = parabolic_degrees(&analyze(&p).unwrap());
        assert!((deg.deg_par[0] - 0.2).abs() < 1e-12, "{deg:?}");
        assert!(deg.total().abs() < 1e-12);
    }

    #[test]
    fn weight_two_order() {
        let p = params(&[0.0, 0.1, 0.25], &[0.4, 0.6, 0.8]);
        let d = analyze(&p).unwrap();
        assert_eq!(d.f_alpha, vec![1, 2, 3]);
        assert_eq!(d.f_beta, vec![2, 1, 0]);
        assert_eq!(d.h, vec![1, 1, 1]);
        assert_eq!(d.signature, (1, 2));
        assert_eq!(signature_zeros(&d), 1);
    }

    #[test]
    fn rank_one() {
        let p = params(&[0.3], &[0.8]);
        let d = analyze(&p).unwrap();
        let deg = parabolic_degrees(&d);
        assert_eq!(deg.delta, vec![-1]);
        assert!(deg.deg_par[0].abs() < 1e-12);
        let li = local_invariants(&p, &d);
        assert_eq!(li.canonical(), ds_recursion_oracle(&p).unwrap().canonical());
        assert!(li.entries.iter().all(|e| e.level == 1));
        let at_inf = li.entries.iter().find(|e| e.singularity == Singularity::Infinity).unwrap();
        assert!((at_inf.jump - 0.2).abs() < 1e-12);
        let at_one = li.entries.iter().find(|e| e.singularity == Singularity::One).unwrap();
        assert!((at_one.jump - 0.5).abs() < 1e-12);
    }

    #[test]
    fn rank_two_local_invariants() {
        // alpha_1 < alpha_2 < beta_1 < beta_2: alpha_2 in level 2
        let p = params(&[0.1, 0.2], &[0.4, 0.7]);
        let li = local_invariants(&p, &analyze(&p).unwrap());
        let level_of = |s: Singularity, jump: f64| {
            li.entries.iter().find(|e| e.singularity == s && (e.jump - jump).abs() < 1e-12).unwrap().level
        };
        assert_eq!(level_of(Singularity::Zero, 0.2), 2);
        assert_eq!(level_of(Singularity::Zero, 0.1), 1);
        assert_eq!(li.canonical(), ds_recursion_oracle(&p).unwrap().canonical());
        // alternating: alpha_2 in level 1
        let p = params(&[0.1, 0.5], &[0.3, 0.7]);
        let li = local_invariants(&p, &analyze(&p).unwrap());
        assert!(li.entries.iter().filter(|e| e.singularity == Singularity::Zero).all(|e| e.level == 1));
        assert_eq!(li.canonical(), ds_recursion_oracle(&p).unwrap().canonical());
    }

    #[test]
    fn totals_match_hodge_numbers() {
        let p = params(&[0.05, 0.3, 0.5], &[0.2, 0.7, 0.9]);
        let d = analyze(&p).unwrap();
        let li = local_invariants(&p, &d);
        for level in 1..=3 {
            assert_eq!(li.total(Singularity::Zero, level), d.h[level - 1]);
            assert_eq!(li.total(Singularity::Infinity, level), d.h[level - 1]);
        }
    }

    #[test]
    fn integer_gamma_is_rejected() {
        let p = params(&[0.1, 0.3], &[0.2, 0.2 + 1e-3]);
        assert!(analyze(&p).is_ok());
        let p = params(&[0.1, 0.3], &[0.25, 0.15]);
        assert!(matches!(analyze(&p), Err(HodgeError::IntegerGamma(_))));
        assert!(matches!(ds_recursion_oracle(&p), Err(HodgeError::IntegerGamma(_))));
    }
}
