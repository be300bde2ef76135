//! Hypergeometric parameters and their textual form.
//!
//! Parameters are accepted as integers, decimals (`0.55`, `-1.25`) or
//! rationals (`1/12`). Decimal and rational inputs are reduced modulo one in
//! exact integer arithmetic before the single conversion to `f64`, so `7/3`
//! and `1/3` map to the same double.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

/// Minimum circular separation for two parameters to count as distinct.
pub const DISTINCT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParamError {
    #[error("cannot parse parameter `{0}`")]
    Syntax(String),
    #[error("parameter `{0}` has a zero denominator")]
    ZeroDenominator(String),
    #[error("parameter `{0}` does not fit in 128-bit rational arithmetic")]
    Overflow(String),
    #[error("rank must be at least 1")]
    Empty,
    #[error("expected {alpha} alphas and {alpha} betas, got {beta} betas")]
    LengthMismatch { alpha: usize, beta: usize },
    #[error("parameter {0} is not finite")]
    NotFinite(f64),
    #[error("parameters {first} and {second} coincide modulo 1")]
    NotDistinct { first: String, second: String },
}

/// An exact rational read from text, kept for the mod-1 reduction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Rational {
    pub num: i128,
    pub den: i128,
}

impl Rational {
    pub fn new(num: i128, den: i128) -> Option<Self> {
        if den == 0 {
            return None;
        }
        let g = gcd(num.unsigned_abs(), den.unsigned_abs()).max(1) as i128;
        let sign = if den < 0 { -1 } else { 1 };
        Some(Self { num: sign * num / g, den: sign * den / g })
    }

    /// Representative in `[0, 1)`.
    pub fn fract(self) -> Self {
        Self { num: self.num.rem_euclid(self.den), den: self.den }
    }

    pub fn to_f64(self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

fn gcd(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

impl FromStr for Rational {
    type Err = ParamError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim();
        let overflow = || ParamError::Overflow(t.to_string());
        let syntax = || ParamError::Syntax(t.to_string());
        if let Some((n, d)) = t.split_once('/') {
            let num = parse_decimal(n.trim()).ok_or_else(syntax)?;
            let den = parse_decimal(d.trim()).ok_or_else(syntax)?;
            if den.num == 0 {
                return Err(ParamError::ZeroDenominator(t.to_string()));
            }
            let a = num.num.checked_mul(den.den).ok_or_else(overflow)?;
            let b = num.den.checked_mul(den.num).ok_or_else(overflow)?;
            return Rational::new(a, b).ok_or_else(syntax);
        }
        parse_decimal(t).ok_or_else(syntax)
    }
}

fn parse_decimal(s: &str) -> Option<Rational> {
    let (neg, body) = match s.as_bytes().first()? {
        b'-' => (true, &s[1..]),
        b'+' => (false, &s[1..]),
        _ => (false, s),
    };
    let (int, frac) = body.split_once('.').unwrap_or((body, ""));
    if int.is_empty() && frac.is_empty() {
        return None;
    }
    if !int.bytes().chain(frac.bytes()).all(|b| b.is_ascii_digit()) {
        return None;
    }
    let mut num: i128 = 0;
    let mut den: i128 = 1;
    for b in int.bytes() {
        num = num.checked_mul(10)?.checked_add((b - b'0') as i128)?;
    }
    for b in frac.bytes() {
        num = num.checked_mul(10)?.checked_add((b - b'0') as i128)?;
        den = den.checked_mul(10)?;
    }
    Rational::new(if neg { -num } else { num }, den)
}

/// Parses one parameter and returns its representative in `[0, 1)`.
pub fn parse_mod1(s: &str) -> Result<f64, ParamError> {
    Ok(s.parse::<Rational>()?.fract().to_f64())
}

/// Parses a comma or whitespace separated list of parameters, reduced mod 1.
pub fn parse_list(s: &str) -> Result<Vec<f64>, ParamError> {
    s.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .map(parse_mod1)
        .collect()
}

pub fn reduce_mod1(x: f64) -> f64 {
    let r = x - x.floor();
    // x slightly below an integer can round up to exactly 1.0
    if r >= 1.0 {
        0.0
    } else {
        r
    }
}

/// Distance on the circle `R/Z`.
pub fn circle_distance(a: f64, b: f64) -> f64 {
    let d = reduce_mod1(a - b);
    d.min(1.0 - d)
}

/// The parameter lists `alpha_1..alpha_n`, `beta_1..beta_n` of the
/// hypergeometric equation, stored reduced to `[0, 1)`.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct HGParams {
    alpha: Vec<f64>,
    beta: Vec<f64>,
}

impl HGParams {
    /// Reduces both lists mod 1 and checks that all `2n` values are pairwise
    /// distinct on the circle.
    pub fn new(alpha: Vec<f64>, beta: Vec<f64>) -> Result<Self, ParamError> {
        if alpha.is_empty() {
            return Err(ParamError::Empty);
        }
        if alpha.len() != beta.len() {
            return Err(ParamError::LengthMismatch { alpha: alpha.len(), beta: beta.len() });
        }
        if let Some(&bad) = alpha.iter().chain(&beta).find(|v| !v.is_finite()) {
            return Err(ParamError::NotFinite(bad));
        }
        let alpha: Vec<f64> = alpha.into_iter().map(reduce_mod1).collect();
        let beta: Vec<f64> = beta.into_iter().map(reduce_mod1).collect();
        let labelled: Vec<(String, f64)> = alpha
            .iter()
            .enumerate()
            .map(|(i, &a)| (format!("alpha_{}", i + 1), a))
            .chain(beta.iter().enumerate().map(|(j, &b)| (format!("beta_{}", j + 1), b)))
            .collect();
        for (i, (ni, vi)) in labelled.iter().enumerate() {
            for (nj, vj) in &labelled[i + 1..] {
                if circle_distance(*vi, *vj) < DISTINCT_TOL {
                    return Err(ParamError::NotDistinct { first: ni.clone(), second: nj.clone() });
                }
            }
        }
        Ok(Self { alpha, beta })
    }

    pub fn parse(alpha: &str, beta: &str) -> Result<Self, ParamError> {
        Self::new(parse_list(alpha)?, parse_list(beta)?)
    }

    pub fn n(&self) -> usize {
        self.alpha.len()
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    pub fn beta(&self) -> &[f64] {
        &self.beta
    }

    /// The same parameters with every value shifted by `delta` mod 1.
    pub fn translated(&self, delta: f64) -> Result<Self, ParamError> {
        Self::new(
            self.alpha.iter().map(|a| a + delta).collect(),
            self.beta.iter().map(|b| b + delta).collect(),
        )
    }

    /// `{sum beta - sum alpha}`, the fractional part of the local exponent at 1.
    pub fn gamma_frac(&self) -> f64 {
        reduce_mod1(self.beta.iter().sum::<f64>() - self.alpha.iter().sum::<f64>())
    }
}

impl fmt::Display for HGParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |v: &[f64]| v.iter().map(|x| format!("{x}")).collect::<Vec<_>>().join(",");
        write!(f, "alpha=({}) beta=({})", join(&self.alpha), join(&self.beta))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rationals_reduce_exactly() {
        assert_eq!(parse_mod1("1/12").unwrap(), 1.0 / 12.0);
        assert_eq!(parse_mod1("13/12").unwrap(), 1.0 / 12.0);
        assert_eq!(parse_mod1("-1/12").unwrap(), 11.0 / 12.0);
        assert_eq!(parse_mod1("-0.3").unwrap(), 0.7);
        assert_eq!(parse_mod1("2").unwrap(), 0.0);
        assert_eq!(parse_mod1("0.55").unwrap(), 0.55);
        assert_eq!(parse_mod1("1.5/3").unwrap(), 0.5);
    }

    #[test]
    fn rejects_garbage() {
        assert!(matches!(parse_mod1("abc"), Err(ParamError::Syntax(_))));
        assert!(matches!(parse_mod1("1/0"), Err(ParamError::ZeroDenominator(_))));
        assert!(matches!(parse_mod1("."), Err(ParamError::Syntax(_))));
        assert!(matches!(parse_mod1("1e3"), Err(ParamError::Syntax(_))));
    }

    #[test]
    fn list_parsing() {
        assert_eq!(parse_list("0, 1/2  3/4").unwrap(), vec![0.0, 0.5, 0.75]);
    }

    #[test]
    fn params_reject_coincidences() {
        let err = HGParams::new(vec![0.25, 1.25], vec![0.0, 0.5]).unwrap_err();
        assert!(matches!(err, ParamError::NotDistinct { .. }), "{err}");
        let err = HGParams::new(vec![0.0], vec![1.0]).unwrap_err();
        assert!(matches!(err, ParamError::NotDistinct { .. }));
        assert!(matches!(HGParams::new(vec![], vec![]), Err(ParamError::Empty)));
        assert!(matches!(
            HGParams::new(vec![0.1], vec![0.2, 0.3]),
            Err(ParamError::LengthMismatch { .. })
        ));
    }

    #[test]
    fn params_are_reduced() {
        let p = HGParams::new(vec![1.25, -0.25], vec![0.5, 2.0]).unwrap();
        assert_eq!(p.alpha(), &[0.25, 0.75]);
        assert_eq!(p.beta(), &[0.5, 0.0]);
        assert!((p.gamma_frac() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn circle_distance_wraps() {
        assert!((circle_distance(0.95, 0.05) - 0.1).abs() < 1e-15);
        assert_eq!(reduce_mod1(-1e-20), 0.0);
    }
}
