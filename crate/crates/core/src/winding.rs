//! Cusp winding of a cutting sequence, tracked exactly through the cosets of
//! the level-2 congruence subgroup.
//!
//! The thrice-punctured sphere is the quotient of the upper half plane by
//! `Gamma(2)`, and `Gamma(2) / {+-Id}` is free on
//! `x = [[1,2],[0,1]]` (a loop around the cusp at infinity) and
//! `y = [[1,0],[2,1]]` (a loop around 0). A letter word in
//! `L = [[1,0],[1,1]]`, `R = [[1,1],[0,1]]` is split as
//! `c * X = gamma * c'` with `c, c'` in a fixed transversal of the six cosets
//! and `gamma` in `Gamma(2)`; the emitted `gamma`s, multiplied in order, give
//! the element of the fundamental group traced out by the geodesic.
//!
//! Two equal letters in a row always return to the starting coset, because
//! `L^2 = y` and `R^2 = x` lie in the normal subgroup `Gamma(2)`. A run of `m`
//! equal letters therefore costs one matrix power plus at most one table step.

use std::fmt;
use std::sync::OnceLock;

use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::geodesic::Letter;
use crate::linalg::{self, CMatrix};
use crate::monodromy::MonodromySet;

pub type Mat2 = [[i64; 2]; 2];

pub const ID: Mat2 = [[1, 0], [0, 1]];
pub const L_MAT: Mat2 = [[1, 0], [1, 1]];
pub const R_MAT: Mat2 = [[1, 1], [0, 1]];
pub const X_MAT: Mat2 = [[1, 2], [0, 1]];
pub const Y_MAT: Mat2 = [[1, 0], [2, 1]];

/// Highest binary power of a pair matrix kept in a [`RunTable`]; runs are
/// shorter than `2^(POWER_LEVELS + 1)` letters.
pub const POWER_LEVELS: usize = 33;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WindingError {
    #[error("step table entry ({coset}, {letter}) does not factor: {detail}")]
    TableInconsistent { coset: CosetState, letter: Letter, detail: String },
    #[error("integer overflow while multiplying 2x2 matrices")]
    Overflow,
}

pub fn mul(a: &Mat2, b: &Mat2) -> Mat2 {
    [
        [a[0][0] * b[0][0] + a[0][1] * b[1][0], a[0][0] * b[0][1] + a[0][1] * b[1][1]],
        [a[1][0] * b[0][0] + a[1][1] * b[1][0], a[1][0] * b[0][1] + a[1][1] * b[1][1]],
    ]
}

pub fn checked_mul(a: &Mat2, b: &Mat2) -> Option<Mat2> {
    let dot = |p: i64, q: i64, r: i64, s: i64| p.checked_mul(q)?.checked_add(r.checked_mul(s)?);
    Some([
        [dot(a[0][0], b[0][0], a[0][1], b[1][0])?, dot(a[0][0], b[0][1], a[0][1], b[1][1])?],
        [dot(a[1][0], b[0][0], a[1][1], b[1][0])?, dot(a[1][0], b[0][1], a[1][1], b[1][1])?],
    ])
}

/// Inverse of a determinant-one matrix.
pub fn adjugate(m: &Mat2) -> Mat2 {
    [[m[1][1], -m[0][1]], [-m[1][0], m[0][0]]]
}

pub fn letter_matrix(letter: Letter) -> Mat2 {
    match letter {
        Letter::L => L_MAT,
        Letter::R => R_MAT,
    }
}

fn residue(m: &Mat2) -> [[u8; 2]; 2] {
    let r = |v: i64| v.rem_euclid(2) as u8;
    [[r(m[0][0]), r(m[0][1])], [r(m[1][0]), r(m[1][1])]]
}

fn negated(m: &Mat2) -> Mat2 {
    [[-m[0][0], -m[0][1]], [-m[1][0], -m[1][1]]]
}

/// Equality in `PSL(2, Z)`.
pub fn equal_up_to_sign(a: &Mat2, b: &Mat2) -> bool {
    a == b || *a == negated(b)
}

/// One of the six right cosets of `Gamma(2)` in `SL(2, Z)`, named by its
/// transversal representative.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum CosetState {
    Id,
    L,
    R,
    LR,
    RL,
    LRL,
}

impl CosetState {
    pub const ALL: [CosetState; 6] =
        [CosetState::Id, CosetState::L, CosetState::R, CosetState::LR, CosetState::RL, CosetState::LRL];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn representative(self) -> Mat2 {
        match self {
            CosetState::Id => ID,
            CosetState::L => L_MAT,
            CosetState::R => R_MAT,
            CosetState::LR => mul(&L_MAT, &R_MAT),
            CosetState::RL => mul(&R_MAT, &L_MAT),
            CosetState::LRL => mul(&mul(&L_MAT, &R_MAT), &L_MAT),
        }
    }

    /// The coset containing `m`, read off from `m mod 2`.
    pub fn of(m: &Mat2) -> CosetState {
        let r = residue(m);
        Self::ALL
            .into_iter()
            .find(|c| residue(&c.representative()) == r)
            .expect("determinant-one matrices reduce to one of six residues mod 2")
    }

    /// Parity of the letter length; it flips with every letter.
    pub fn color(self) -> Color {
        match self {
            CosetState::Id | CosetState::LR | CosetState::RL => Color::White,
            CosetState::L | CosetState::R | CosetState::LRL => Color::Blue,
        }
    }
}

impl fmt::Display for CosetState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Generator {
    X,
    Y,
}

impl Generator {
    pub fn matrix(self) -> Mat2 {
        match self {
            Generator::X => X_MAT,
            Generator::Y => Y_MAT,
        }
    }
}

/// A reduced word `g_1^{e_1} ... g_k^{e_k}` in the free generators `x, y`:
/// exponents are nonzero and neighbours use different generators.
#[derive(Debug, Clone, PartialEq, Eq, Default, Hash, Serialize)]
pub struct Gamma2Word(Vec<(Generator, i64)>);

impl Gamma2Word {
    pub fn new() -> Self {
        Self(Vec::new())
    }

    pub fn letters(&self) -> &[(Generator, i64)] {
        &self.0
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Appends `g^e`, cancelling and merging as needed.
    pub fn push(&mut self, g: Generator, e: i64) {
        if e == 0 {
            return;
        }
        match self.0.last_mut() {
            Some((last, k)) if *last == g => {
                *k += e;
                if *k == 0 {
                    self.0.pop();
                }
            }
            _ => self.0.push((g, e)),
        }
    }

    pub fn append(&mut self, other: &Gamma2Word) {
        for &(g, e) in &other.0 {
            self.push(g, e);
        }
    }

    pub fn inverse(&self) -> Gamma2Word {
        Gamma2Word(self.0.iter().rev().map(|&(g, e)| (g, -e)).collect())
    }

    pub fn is_reduced(&self) -> bool {
        self.0.iter().all(|&(_, e)| e != 0) && self.0.windows(2).all(|w| w[0].0 != w[1].0)
    }

    /// The word as an integer matrix, `None` on overflow.
    pub fn to_matrix(&self) -> Option<Mat2> {
        let mut m = ID;
        for &(g, e) in &self.0 {
            // g^e = [[1, 2e], [0, 1]] or its transpose
            let p = match g {
                Generator::X => [[1, e.checked_mul(2)?], [0, 1]],
                Generator::Y => [[1, 0], [e.checked_mul(2)?, 1]],
            };
            m = checked_mul(&m, &p)?;
        }
        Some(m)
    }

    /// Factors an element of `Gamma(2)` into `x, y` powers up to sign.
    ///
    /// Peels generators off the left while shrinking the first column
    /// `(a, c)` Euclid-style; in `Gamma(2)` the entry `a` stays odd and `c`
    /// even, so `|a| + |c|` strictly drops until `c = 0`. Returns `None` when
    /// `m` is not in `Gamma(2)`.
    pub fn decompose(m: &Mat2) -> Option<Gamma2Word> {
        if residue(m) != residue(&ID) || m[0][0] * m[1][1] - m[0][1] * m[1][0] != 1 {
            return None;
        }
        let mut word = Gamma2Word::new();
        let mut rest = *m;
        while rest[1][0] != 0 {
            let (a, c) = (rest[0][0], rest[1][0]);
            if a.abs() > c.abs() {
                let k = round_div(a, 2 * c);
                word.push(Generator::X, k);
                rest = mul(&[[1, -2 * k], [0, 1]], &rest);
            } else {
                let k = round_div(c, 2 * a);
                word.push(Generator::Y, k);
                rest = mul(&[[1, 0], [-2 * k, 1]], &rest);
            }
        }
        // rest = s * [[1, b], [0, 1]] with s = +-1
        let s = rest[0][0];
        word.push(Generator::X, s * rest[0][1] / 2);
        Some(word)
    }

    /// `rho(word)`, multiplying left to right.
    pub fn evaluate(&self, rho: &Representation) -> CMatrix {
        let mut m = linalg::identity(rho.n());
        for &(g, e) in &self.0 {
            m *= rho.power(g, e);
        }
        m
    }
}

impl fmt::Display for Gamma2Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("1");
        }
        let parts: Vec<String> = self
            .0
            .iter()
            .map(|(g, e)| format!("{}^{}", if *g == Generator::X { "x" } else { "y" }, e))
            .collect();
        f.write_str(&parts.join(" "))
    }
}

/// Nearest integer to `p / q`, for `q != 0`.
fn round_div(p: i64, q: i64) -> i64 {
    (p as f64 / q as f64).round() as i64
}

/// `c * X = gamma * c'`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StepEntry {
    pub word: Gamma2Word,
    pub next: CosetState,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StepTable {
    entries: [[StepEntry; 2]; 6],
}

fn letter_index(letter: Letter) -> usize {
    match letter {
        Letter::L => 0,
        Letter::R => 1,
    }
}

/// Factors every `(coset, letter)` pair and checks each factorization by
/// exact multiplication.
pub fn build_step_table() -> Result<StepTable, WindingError> {
    let mut entries: Vec<[StepEntry; 2]> = Vec::with_capacity(6);
    for c in CosetState::ALL {
        let mut pair: Vec<StepEntry> = Vec::with_capacity(2);
        for letter in [Letter::L, Letter::R] {
            let inconsistent = |detail: String| WindingError::TableInconsistent { coset: c, letter, detail };
            let g = mul(&c.representative(), &letter_matrix(letter));
            let next = CosetState::of(&g);
            let gamma = mul(&g, &adjugate(&next.representative()));
            let word = Gamma2Word::decompose(&gamma)
                .ok_or_else(|| inconsistent(format!("{gamma:?} is not in Gamma(2)")))?;
            let back = word.to_matrix().ok_or(WindingError::Overflow)?;
            if !equal_up_to_sign(&back, &gamma) || !word.is_reduced() {
                return Err(inconsistent(format!("word {word} evaluates to {back:?}, expected {gamma:?}")));
            }
            pair.push(StepEntry { word, next });
        }
        let [l, r]: [StepEntry; 2] = pair.try_into().expect("two letters");
        entries.push([l, r]);
    }
    Ok(StepTable { entries: entries.try_into().expect("six cosets") })
}

/// The step table, built and verified once per process.
pub fn step_table() -> &'static StepTable {
    static TABLE: OnceLock<StepTable> = OnceLock::new();
    TABLE.get_or_init(|| build_step_table().expect("coset transversal is consistent"))
}

impl StepTable {
    pub fn entry(&self, c: CosetState, letter: Letter) -> &StepEntry {
        &self.entries[c.index()][letter_index(letter)]
    }

    pub fn step(&self, c: CosetState, letter: Letter) -> (&Gamma2Word, CosetState) {
        let e = self.entry(c, letter);
        (&e.word, e.next)
    }

    /// Emitted word for two equal letters starting at `c`, which return to `c`.
    pub fn pair_word(&self, c: CosetState, letter: Letter) -> Gamma2Word {
        let (w1, mid) = self.step(c, letter);
        let (w2, back) = self.step(mid, letter);
        debug_assert_eq!(back, c);
        let mut w = w1.clone();
        w.append(w2);
        w
    }

    /// Runs a letter sequence, returning the concatenated reduced word and the
    /// final coset.
    pub fn run_letters(&self, start: CosetState, letters: impl IntoIterator<Item = Letter>) -> (Gamma2Word, CosetState) {
        let mut word = Gamma2Word::new();
        let mut c = start;
        for letter in letters {
            let (w, next) = self.step(c, letter);
            word.append(w);
            c = next;
        }
        (word, c)
    }
}

/// Free function form of [`StepTable::step`] on the shared table.
pub fn step(c: CosetState, letter: Letter) -> (Gamma2Word, CosetState) {
    let (w, next) = step_table().step(c, letter);
    (w.clone(), next)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Cusp {
    /// The cusp at infinity, class of `(1, 0)`.
    A,
    /// The cusp at 0, class of `(0, 1)`.
    B,
    /// The cusp at 1, class of `(1, 1)`.
    C,
}

impl Cusp {
    /// Class of the primitive vector `(p, q)` modulo 2.
    pub fn of_vector(p: i64, q: i64) -> Cusp {
        if q.rem_euclid(2) == 0 {
            Cusp::A
        } else if p.rem_euclid(2) == 0 {
            Cusp::B
        } else {
            Cusp::C
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Cusp::A => "A",
            Cusp::B => "B",
            Cusp::C => "C",
        }
    }
}

impl fmt::Display for Cusp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// The cusp a run of `letter` pivots around when started in coset `c`.
pub fn run_cusp(c: CosetState, letter: Letter) -> Cusp {
    let m = c.representative();
    // L^2 fixes 0 = (0 : 1), R^2 fixes infinity = (1 : 0)
    let col = match letter {
        Letter::L => 1,
        Letter::R => 0,
    };
    Cusp::of_vector(m[0][col], m[1][col])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct WindingEvent {
    pub cusp: Cusp,
    /// Full loops, positive counterclockwise (L runs).
    pub turns: i64,
    pub residual: Option<Letter>,
}

impl WindingEvent {
    pub fn of_run(c: CosetState, letter: Letter, m: u64) -> Self {
        let half = (m / 2) as i64;
        WindingEvent {
            cusp: run_cusp(c, letter),
            turns: if letter == Letter::L { half } else { -half },
            residual: (m % 2 == 1).then_some(letter),
        }
    }
}

/// Eigenvalues, with multiplicity, of the images of the three cusp loops
/// `x`, `y` and `x y^-1`.
#[derive(Debug, Clone, PartialEq)]
pub struct CuspSpectra {
    pub x: Vec<Complex64>,
    pub y: Vec<Complex64>,
    pub xy_inv: Vec<Complex64>,
}

/// Clustering radius used when spectra have to be measured numerically.
/// A defective eigenvalue of multiplicity `k` splits by about `eps^(1/k)`.
pub const NUMERIC_CLUSTER_TOL: f64 = 5e-3;

impl CuspSpectra {
    /// Spectra implied by local exponents: `rho(x) ~ M_inf^-1`,
    /// `rho(y) = M0`, and `rho(x y^-1) ~ M1`, a pseudo-reflection whose
    /// special eigenvalue is its determinant.
    pub fn from_exponents(alpha: &[f64], beta: &[f64]) -> Self {
        let n = alpha.len();
        let mut xy_inv = vec![Complex64::new(1.0, 0.0); n.saturating_sub(1)];
        xy_inv.push(linalg::unit(beta.iter().sum::<f64>() - alpha.iter().sum::<f64>()));
        Self {
            x: beta.iter().map(|&b| linalg::unit(b)).collect(),
            y: alpha.iter().map(|&a| linalg::unit(a)).collect(),
            xy_inv,
        }
    }

    /// Numerically measured spectra with nearby eigenvalues merged.
    pub fn measured(x: &CMatrix, y: &CMatrix, xy_inv: &CMatrix) -> Self {
        let snap = |m: &CMatrix| -> Vec<Complex64> {
            linalg::group_spectrum(&linalg::eigenvalues(m), NUMERIC_CLUSTER_TOL)
                .into_iter()
                .flat_map(|(v, k)| std::iter::repeat_n(v, k))
                .collect()
        };
        Self { x: snap(x), y: snap(y), xy_inv: snap(xy_inv) }
    }

    pub fn of_cusp(&self, cusp: Cusp) -> &[Complex64] {
        match cusp {
            Cusp::A => &self.x,
            Cusp::B => &self.y,
            Cusp::C => &self.xy_inv,
        }
    }
}

/// A representation of the free group on `x, y`.
#[derive(Debug, Clone)]
pub struct Representation {
    x: CMatrix,
    y: CMatrix,
    x_inv: CMatrix,
    y_inv: CMatrix,
    spectra: CuspSpectra,
}

impl Representation {
    pub fn new(x: CMatrix, y: CMatrix) -> Option<Self> {
        let x_inv = linalg::inverse(&x)?;
        let y_inv = linalg::inverse(&y)?;
        let spectra = CuspSpectra::measured(&x, &y, &(&x * &y_inv));
        Some(Self { x, y, x_inv, y_inv, spectra })
    }

    pub fn spectra(&self) -> &CuspSpectra {
        &self.spectra
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn x(&self) -> &CMatrix {
        &self.x
    }

    pub fn y(&self) -> &CMatrix {
        &self.y
    }

    pub fn generator(&self, g: Generator, inverse: bool) -> &CMatrix {
        match (g, inverse) {
            (Generator::X, false) => &self.x,
            (Generator::X, true) => &self.x_inv,
            (Generator::Y, false) => &self.y,
            (Generator::Y, true) => &self.y_inv,
        }
    }

    /// `rho(g)^e` by binary powering.
    pub fn power(&self, g: Generator, e: i64) -> CMatrix {
        matrix_power(self.generator(g, e < 0), e.unsigned_abs())
    }
}

pub fn matrix_power(base: &CMatrix, mut e: u64) -> CMatrix {
    let mut result = linalg::identity(base.nrows());
    let mut sq = base.clone();
    while e > 0 {
        if e & 1 == 1 {
            result = &result * &sq;
        }
        e >>= 1;
        if e > 0 {
            sq = &sq * &sq;
        }
    }
    result
}

/// `rho(x) = M_inf^-1 = M0 M1` and `rho(y) = M0`.
///
/// `x y^-1` is the parabolic fixing the cusp 1, and `rho(x y^-1)` is conjugate
/// to `M1`, so all three cusp loops land in the right conjugacy classes.
pub fn representation(ms: &MonodromySet) -> Representation {
    let x = &ms.m0 * &ms.m1;
    let y_inv = linalg::inverse(&ms.m0).expect("M0 is invertible when M0 M1 is");
    let spectra = match &ms.exponents {
        Some(e) => CuspSpectra::from_exponents(&e.alpha, &e.beta),
        None => CuspSpectra::measured(&x, &ms.m0, &(&x * &y_inv)),
    };
    Representation { x_inv: ms.minf.clone(), y_inv, x, y: ms.m0.clone(), spectra }
}

/// Binary powers `p^(2^k)`, `k < levels`.
///
/// `p` is conjugate to the image of a cusp loop or its inverse, so its
/// spectrum is `spectrum` or the inverse of it; whichever is closer to the
/// measured eigenvalues is used. Falls back to repeated squaring when the
/// spectral form does not reproduce `p`.
fn binary_powers(p: &CMatrix, spectrum: &[Complex64], levels: usize) -> Vec<CMatrix> {
    let measured = linalg::eigenvalues(p);
    let inverted: Vec<Complex64> = spectrum.iter().map(|z| z.inv()).collect();
    let candidate = if linalg::matching_distance(&measured, spectrum)
        <= linalg::matching_distance(&measured, &inverted)
    {
        spectrum.to_vec()
    } else {
        inverted
    };
    let scale = linalg::max_abs_entry(p).max(1.0);
    if let Some(sp) = linalg::SpectralPower::new(p, &candidate) {
        if linalg::max_abs_entry(&(sp.power(1) - p)) <= 1e-8 * scale {
            return (0..levels).map(|k| sp.power(1u64 << k)).collect();
        }
    }
    let mut out = Vec::with_capacity(levels);
    let mut q = p.clone();
    for _ in 0..levels {
        let sq = &q * &q;
        out.push(q);
        q = sq;
    }
    out
}

/// Precomputed images of all run pieces under a representation.
///
/// For every coset `c` and letter `X`: the binary powers
/// `rho(pair)^(2^k)` where `pair` is the word emitted by `XX` from `c`, the
/// single-letter image `rho(step(c, X))`, and the coset reached after an odd
/// run.
#[derive(Debug, Clone)]
pub struct RunTable {
    n: usize,
    pair_powers: Vec<Vec<CMatrix>>,
    single: Vec<CMatrix>,
    next: Vec<CosetState>,
}

impl RunTable {
    pub fn new(rho: &Representation) -> Self {
        let table = step_table();
        let mut pair_powers = Vec::with_capacity(12);
        let mut single = Vec::with_capacity(12);
        let mut next = Vec::with_capacity(12);
        for c in CosetState::ALL {
            for letter in [Letter::L, Letter::R] {
                let p = table.pair_word(c, letter).evaluate(rho);
                let spectrum = rho.spectra().of_cusp(run_cusp(c, letter));
                pair_powers.push(binary_powers(&p, spectrum, POWER_LEVELS));
                let (w, c_next) = table.step(c, letter);
                single.push(w.evaluate(rho));
                next.push(c_next);
            }
        }
        Self { n: rho.n(), pair_powers, single, next }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    fn slot(c: CosetState, letter: Letter) -> usize {
        2 * c.index() + letter_index(letter)
    }

    /// Calls `visit` on the factors whose ordered product is `rho(gamma_run)`
    /// and returns the winding event and the coset after the run.
    pub fn run_factors<'a>(
        &'a self,
        c: CosetState,
        letter: Letter,
        m: u64,
        mut visit: impl FnMut(&'a CMatrix),
    ) -> (WindingEvent, CosetState) {
        let slot = Self::slot(c, letter);
        let mut half = m / 2;
        let mut k = 0;
        while half > 0 {
            if half & 1 == 1 {
                visit(&self.pair_powers[slot][k.min(POWER_LEVELS - 1)]);
            }
            half >>= 1;
            k += 1;
        }
        let event = WindingEvent::of_run(c, letter, m);
        if m % 2 == 1 {
            visit(&self.single[slot]);
            (event, self.next[slot])
        } else {
            (event, c)
        }
    }
}

/// `rho` of the group element swept out by `m` equal letters from coset `c`.
pub fn run_to_monodromy(
    c: CosetState,
    letter: Letter,
    m: u64,
    table: &RunTable,
) -> (CMatrix, WindingEvent, CosetState) {
    assert!(m >= 1, "run length must be positive");
    let mut product = linalg::identity(table.n());
    let (event, next) = table.run_factors(c, letter, m, |f| product = &product * f);
    (product, event, next)
}

/// One row of the winding debug dump.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RunRecord {
    pub run_index: usize,
    pub letter: Letter,
    pub run_length: u64,
    pub cusp: Cusp,
    pub turns: i64,
}

/// Winding events for a digit stream, one per digit, starting at coset `Id`.
pub fn winding_events(digits: &[crate::geodesic::DigitEvent]) -> Vec<RunRecord> {
    let table = step_table();
    let mut c = CosetState::Id;
    let mut out = Vec::with_capacity(digits.len());
    for (i, d) in digits.iter().enumerate() {
        let ev = WindingEvent::of_run(c, d.letter, d.digit);
        if d.digit % 2 == 1 {
            c = table.step(c, d.letter).1;
        }
        out.push(RunRecord { run_index: i, letter: d.letter, run_length: d.digit, cusp: ev.cusp, turns: ev.turns });
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Color {
    White,
    Blue,
}

/// The triangle the geodesic is crossing, seen from its entry edge: the cusp
/// classes at the left and right endpoints of that edge and at the opposite
/// vertex.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct TriangleState {
    pub left: Cusp,
    pub right: Cusp,
    pub opposite: Cusp,
    pub color: Color,
}

impl TriangleState {
    /// The triangle matching coset `c`: the standard edge `(0, infinity)`
    /// moved by the representative of `c`.
    pub fn matched(c: CosetState) -> Self {
        let m = c.representative();
        let left = Cusp::of_vector(m[0][1], m[1][1]);
        let right = Cusp::of_vector(m[0][0], m[1][0]);
        let opposite = [Cusp::A, Cusp::B, Cusp::C]
            .into_iter()
            .find(|&k| k != left && k != right)
            .expect("edge endpoints have distinct classes");
        TriangleState { left, right, opposite, color: c.color() }
    }

    /// Turning left keeps the left vertex; turning right keeps the right one.
    pub fn step(self, letter: Letter) -> Self {
        let color = match self.color {
            Color::White => Color::Blue,
            Color::Blue => Color::White,
        };
        match letter {
            Letter::L => TriangleState { left: self.left, right: self.opposite, opposite: self.right, color },
            Letter::R => TriangleState { left: self.opposite, right: self.right, opposite: self.left, color },
        }
    }

    /// The vertex kept fixed while turning in direction `letter`.
    pub fn pivot(&self, letter: Letter) -> Cusp {
        match letter {
            Letter::L => self.left,
            Letter::R => self.right,
        }
    }
}

pub fn triangle_step(state: TriangleState, letter: Letter) -> TriangleState {
    state.step(letter)
}

/// `rho(x y^-1)`, the image of the loop around the cusp 1.
pub fn cusp_one_image(rho: &Representation) -> CMatrix {
    rho.x() * rho.generator(Generator::Y, true)
}

/// Eigenvalues of `rho(x y^-1)`, for conjugacy-class checks.
pub fn cusp_one_spectrum(rho: &Representation) -> Vec<Complex64> {
    linalg::eigenvalues(&cusp_one_image(rho))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geodesic::Letter::{L, R};

    #[test]
    fn transversal_is_complete() {
        let mut residues: Vec<_> = CosetState::ALL.iter().map(|c| residue(&c.representative())).collect();
        residues.sort();
        residues.dedup();
        assert_eq!(residues.len(), 6);
        assert_eq!(CosetState::LRL.representative(), [[2, 1], [3, 2]]);
    }

    #[test]
    fn documented_table_entries() {
        let t = build_step_table().unwrap();
        assert_eq!(t.step(CosetState::Id, L), (&Gamma2Word::new(), CosetState::L));
        let (w, c) = t.step(CosetState::L, L);
        assert_eq!(w.letters(), &[(Generator::Y, 1)]);
        assert_eq!(c, CosetState::Id);
        let (w, c) = t.step(CosetState::R, R);
        assert_eq!(w.letters(), &[(Generator::X, 1)]);
        assert_eq!(c, CosetState::Id);
    }

    #[test]
    fn pairs_return_to_start() {
        let t = step_table();
        for c in CosetState::ALL {
            for letter in [L, R] {
                let (_, mid) = t.step(c, letter);
                assert_eq!(t.step(mid, letter).1, c);
            }
        }
    }

    #[test]
    fn small_words() {
        let t = step_table();
        let (w, c) = t.run_letters(CosetState::Id, [L, L]);
        assert_eq!(w.letters(), &[(Generator::Y, 1)]);
        assert_eq!(c, CosetState::Id);
        let (w, c) = t.run_letters(CosetState::Id, [R, R, R, R]);
        assert_eq!(w.letters(), &[(Generator::X, 2)]);
        assert_eq!(c, CosetState::Id);
    }

    #[test]
    fn decompose_round_trips() {
        let g = mul(&mul(&X_MAT, &Y_MAT), &adjugate(&mul(&X_MAT, &X_MAT)));
        let w = Gamma2Word::decompose(&g).unwrap();
        assert_eq!(w.letters(), &[(Generator::X, 1), (Generator::Y, 1), (Generator::X, -2)]);
        assert!(Gamma2Word::decompose(&L_MAT).is_none());
        let minus = [[-1, 0], [0, -1]];
        assert!(Gamma2Word::decompose(&minus).unwrap().is_empty());
        let w = Gamma2Word::decompose(&negated(&X_MAT)).unwrap();
        assert!(equal_up_to_sign(&w.to_matrix().unwrap(), &X_MAT));
    }

    #[test]
    fn word_push_cancels() {
        let mut w = Gamma2Word::new();
        w.push(Generator::X, 2);
        w.push(Generator::Y, 1);
        w.push(Generator::Y, -1);
        w.push(Generator::X, -2);
        assert!(w.is_empty());
    }

    #[test]
    fn run_events() {
        assert_eq!(
            WindingEvent::of_run(CosetState::Id, L, 4),
            WindingEvent { cusp: Cusp::B, turns: 2, residual: None }
        );
        assert_eq!(
            WindingEvent::of_run(CosetState::Id, R, 2),
            WindingEvent { cusp: Cusp::A, turns: -1, residual: None }
        );
        assert_eq!(
            WindingEvent::of_run(CosetState::Id, L, 1),
            WindingEvent { cusp: Cusp::B, turns: 0, residual: Some(L) }
        );
    }

    #[test]
    fn triangle_moves() {
        let s = TriangleState { left: Cusp::A, right: Cusp::B, opposite: Cusp::C, color: Color::White };
        assert_eq!(s.step(L), TriangleState { left: Cusp::A, right: Cusp::C, opposite: Cusp::B, color: Color::Blue });
        assert_eq!(s.step(R), TriangleState { left: Cusp::C, right: Cusp::B, opposite: Cusp::A, color: Color::Blue });
        let mut t = s;
        for _ in 0..4 {
            t = t.step(L);
            assert_eq!(t.left, Cusp::A);
        }
    }

    #[test]
    fn matched_triangles_follow_cosets() {
        let table = step_table();
        for c in CosetState::ALL {
            for letter in [L, R] {
                let (_, next) = table.step(c, letter);
                assert_eq!(TriangleState::matched(c).step(letter), TriangleState::matched(next));
            }
        }
        let start = TriangleState::matched(CosetState::Id);
        assert_eq!((start.left, start.right, start.color), (Cusp::B, Cusp::A, Color::White));
    }
}
