//! The differential operators of the algebra: the odd contraction, the
//! BV Laplacian, twisted Koszul differentials and the bracket descendant.
//!
//! Sign convention: the odd derivative acting on a canonical monomial
//! eta_{i_1}..eta_{i_l} with respect to eta_{i_j} contributes (-1)^{j-1},
//! the parity of odd factors it passes on the way in from the left.

use super::{Scalar, SuperMonomial, SuperPolynomial};

/// d/dq_slot, an even derivation.
pub fn partial_q(p: &SuperPolynomial, slot: usize) -> SuperPolynomial {
    let terms = p
        .terms()
        .iter()
        .filter(|(m, _)| m.exponent(slot) > 0)
        .map(|(m, c)| {
            let e = m.exponent(slot);
            let mut exps = m.exponents().to_vec();
            exps[slot] = e - 1;
            (
                SuperMonomial::new(exps, m.eta_mask()),
                c * Scalar::from_integer(e.into()),
            )
        })
        .collect();
    SuperPolynomial::from_terms(p.vars(), terms)
}

/// d/deta_slot, an odd derivation of cohomological degree +1.
pub fn eta_contract(p: &SuperPolynomial, slot: usize) -> SuperPolynomial {
    let bit = 1u64 << slot;
    let below = bit - 1;
    let terms = p
        .terms()
        .iter()
        .filter(|(m, _)| m.eta_mask() & bit != 0)
        .map(|(m, c)| {
            let preceding = (m.eta_mask() & below).count_ones();
            let coeff = if preceding % 2 == 1 {
                -c.clone()
            } else {
                c.clone()
            };
            (
                SuperMonomial::new(m.exponents().to_vec(), m.eta_mask() & !bit),
                coeff,
            )
        })
        .collect();
    SuperPolynomial::from_terms(p.vars(), terms)
}

/// The BV Laplacian, the sum over slots of d/dq d/deta. Degree +1, charge 0,
/// weight -1; squares to zero.
pub fn apply_delta(p: &SuperPolynomial) -> SuperPolynomial {
    let mut out = SuperPolynomial::zero(p.vars());
    for slot in 0..p.vars().total() {
        out += &partial_q(&eta_contract(p, slot), slot);
    }
    out
}

/// The twisted Koszul differential attached to an even potential `f`:
/// the sum over slots of (df/dq_slot) * d/deta_slot. Callers must pass an
/// even `f`; the partials are recomputed on every call, so hot paths should
/// precompute them and use [`q_apply`].
pub fn apply_q(f: &SuperPolynomial, p: &SuperPolynomial) -> SuperPolynomial {
    debug_assert!(f.is_even(), "potential must be even");
    let partials: Vec<SuperPolynomial> = (0..f.vars().total())
        .map(|slot| partial_q(f, slot))
        .collect();
    q_apply(&partials, p)
}

/// [`apply_q`] with precomputed potential partials, indexed by slot.
pub fn q_apply(partials: &[SuperPolynomial], p: &SuperPolynomial) -> SuperPolynomial {
    let mut out = SuperPolynomial::zero(p.vars());
    for (slot, df) in partials.iter().enumerate() {
        if df.is_zero() {
            continue;
        }
        let contracted = eta_contract(p, slot);
        if !contracted.is_zero() {
            out += &(df * &contracted);
        }
    }
    out
}

/// The total differential for the given potential partials: twisted Koszul
/// plus BV Laplacian. Squares to zero whenever the partials commute with
/// each other, which holds for partials of a single potential.
pub fn k_apply(partials: &[SuperPolynomial], p: &SuperPolynomial) -> SuperPolynomial {
    &q_apply(partials, p) + &apply_delta(p)
}

/// The bracket descendant of a degree +1 operator `op`:
/// l2(a, b) = op(ab) - op(a) b - (-1)^{|a|} a op(b),
/// extended bilinearly over the cohomological-degree components of `a`.
pub fn ell2_with<F>(op: F, a: &SuperPolynomial, b: &SuperPolynomial) -> SuperPolynomial
where
    F: Fn(&SuperPolynomial) -> SuperPolynomial,
{
    let mut out = &op(&(a * b)) - &(&op(a) * b);
    let op_b = op(b);
    for (eta_count, component) in a.components_by_eta_count() {
        let piece = &component * &op_b;
        if eta_count % 2 == 0 {
            out -= &piece;
        } else {
            out += &piece;
        }
    }
    out
}
