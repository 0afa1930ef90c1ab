//! Sparse exact arithmetic in the graded super-commutative algebra
//! A = Q[q_1..q_N][eta_1..eta_N].
//!
//! The even variables q_i split into y_1..y_k (slots 0..k) and x_0..x_n
//! (slots k..N), N = n+k+1. Each q_i has an odd partner eta_i of
//! cohomological degree -1; odd variables anticommute and square to zero.
//! Coefficients are exact rationals throughout, so every identity checked
//! elsewhere in the crate is checked with zero tolerance.

mod differential;
mod monomial;
mod parse;
mod polynomial;

pub use differential::{apply_delta, apply_q, ell2_with, eta_contract, k_apply, partial_q, q_apply};
pub use monomial::SuperMonomial;
pub use parse::parse_polynomial;
pub use polynomial::SuperPolynomial;

/// Exact rational scalar. Stored in lowest terms with positive denominator
/// by the backing implementation; all arithmetic is exact.
pub type Scalar = num::BigRational;

/// Rational from an integer.
pub fn scalar(n: i64) -> Scalar {
    Scalar::from_integer(n.into())
}

/// Rational from a numerator/denominator pair.
pub fn scalar_frac(numer: i64, denom: i64) -> Scalar {
    Scalar::new(numer.into(), denom.into())
}

/// The variable layout of one algebra: `n`+1 projective coordinates x_0..x_n
/// and `k` auxiliary variables y_1..y_k.
///
/// Slot convention used everywhere in the crate: slots `0..k` are y_1..y_k,
/// slots `k..n+k+1` are x_0..x_n. Odd slot i is eta_{i+1} in 1-based naming.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Vars {
    pub n: usize,
    pub k: usize,
}

impl Vars {
    pub fn new(n: usize, k: usize) -> Self {
        Vars { n, k }
    }

    /// Number of even variables, N = n + k + 1.
    pub fn total(&self) -> usize {
        self.n + self.k + 1
    }

    pub fn is_y(&self, slot: usize) -> bool {
        slot < self.k
    }

    /// Display name of an even slot: `y1..yk` then `x0..xn`.
    pub fn name(&self, slot: usize) -> String {
        if slot < self.k {
            format!("y{}", slot + 1)
        } else {
            format!("x{}", slot - self.k)
        }
    }

    /// Display name of an odd slot, 1-based: `e1..eN`.
    pub fn eta_name(&self, slot: usize) -> String {
        format!("e{}", slot + 1)
    }

    /// Resolve a variable name to `(slot, odd)`.
    pub fn lookup(&self, name: &str) -> Option<(usize, bool)> {
        let (head, tail) = name.split_at(1);
        let idx: usize = tail.parse().ok()?;
        match head {
            "y" if idx >= 1 && idx <= self.k => Some((idx - 1, false)),
            "x" if idx <= self.n => Some((self.k + idx, false)),
            "e" if idx >= 1 && idx <= self.total() => Some((idx - 1, true)),
            _ => None,
        }
    }
}
