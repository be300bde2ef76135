//! The coset automaton must reproduce letter products exactly. Products of
//! a thousand letters overflow any machine integer, so both sides are
//! evaluated with big integers.

use hyplyap::geodesic::Letter;
use hyplyap::winding::{step_table, CosetState, Gamma2Word, Generator};
use num_bigint::BigInt;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Big2 = [[BigInt; 2]; 2];

fn big_identity() -> Big2 {
    [[BigInt::one(), BigInt::zero()], [BigInt::zero(), BigInt::one()]]
}

fn big_mul(a: &Big2, b: &Big2) -> Big2 {
    let e = |i: usize, j: usize| &a[i][0] * &b[0][j] + &a[i][1] * &b[1][j];
    [[e(0, 0), e(0, 1)], [e(1, 0), e(1, 1)]]
}

fn big_from(m: [[i64; 2]; 2]) -> Big2 {
    m.map(|row| row.map(BigInt::from))
}

fn letter(l: Letter) -> Big2 {
    match l {
        Letter::L => big_from([[1, 0], [1, 1]]),
        Letter::R => big_from([[1, 1], [0, 1]]),
    }
}

fn word_matrix(w: &Gamma2Word) -> Big2 {
    w.letters().iter().fold(big_identity(), |acc, &(g, k)| {
        let m = match g {
            Generator::X => [[BigInt::one(), BigInt::from(2 * k)], [BigInt::zero(), BigInt::one()]],
            Generator::Y => [[BigInt::one(), BigInt::zero()], [BigInt::from(2 * k), BigInt::one()]],
        };
        big_mul(&acc, &m)
    })
}

fn equal_up_to_sign(a: &Big2, b: &Big2) -> bool {
    let neg = b.clone().map(|row| row.map(|v| -v));
    a == b || *a == neg
}

#[test]
fn automaton_reconstructs_letter_products() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let table = step_table();
    for trial in 0..1000 {
        let len = rng.random_range(0..=1000);
        let letters: Vec<Letter> =
            (0..len).map(|_| if rng.random_bool(0.5) { Letter::L } else { Letter::R }).collect();
        let start = CosetState::ALL[rng.random_range(0..6)];

        let (word, end) = table.run_letters(start, letters.iter().copied());
        assert!(word.is_reduced());

        let product = letters.iter().fold(big_from(start.representative()), |acc, &l| big_mul(&acc, &letter(l)));
        let rebuilt = big_mul(&word_matrix(&word), &big_from(end.representative()));
        assert!(equal_up_to_sign(&product, &rebuilt), "trial {trial}: length {len}, start {start:?}");
    }
}

#[test]
fn runs_reduce_to_pair_powers() {
    let table = step_table();
    for start in CosetState::ALL {
        for l in [Letter::L, Letter::R] {
            for m in 0..12u32 {
                let (direct, end) = table.run_letters(start, std::iter::repeat_n(l, m as usize));
                let mut paired = Gamma2Word::new();
                for _ in 0..m / 2 {
                    paired.append(&table.pair_word(start, l));
                }
                let mut c = start;
                if m % 2 == 1 {
                    let (w, next) = table.step(start, l);
                    paired.append(w);
                    c = next;
                }
                assert_eq!(c, end);
                assert!(equal_up_to_sign(&word_matrix(&direct), &word_matrix(&paired)));
            }
        }
    }
}
