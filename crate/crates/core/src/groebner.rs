//! Groebner basis of the Jacobian ideal with cofactor certificates, the
//! charge-zero standard-monomial basis, and the reduction step that rewrites
//! an even charge-zero element as a basis combination plus a twisted-exact
//! remainder term.
//!
//! Every basis element g carries cofactors c_i with g = sum c_i dS/dq_i held
//! exactly at all times, so a division p = sum q_j g_j + r converts directly
//! into p = r + Q_S(lambda) with lambda = sum_i (sum_j q_j c_{ji}) eta_i.

use std::collections::{BTreeSet, HashMap};

use num::{One, Zero};

use crate::algebra::{apply_delta, Scalar, SuperMonomial, SuperPolynomial, Vars};
use crate::error::{Error, Result};
use crate::model::ModelSetup;

/// Monomial order used throughout; kept as data so output can name it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MonomialOrder {
    /// Graded reverse lexicographic, precedence x0 > .. > xn > y1 > .. > yk.
    Grevlex,
}

impl MonomialOrder {
    pub fn name(self) -> &'static str {
        match self {
            MonomialOrder::Grevlex => "grevlex",
        }
    }
}

/// Divisor selection rule during multivariate division.
///
/// The normal form is strategy-independent; the division certificate lambda
/// is not, and downstream consumers exploit that to cross-check outputs that
/// must not depend on it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DivisionStrategy {
    /// Earliest stored divisor whose leading monomial matches.
    FirstMatch,
    /// Latest stored divisor whose leading monomial matches.
    LastMatch,
}

/// One Groebner basis element together with its ideal-membership certificate.
#[derive(Debug, Clone)]
pub struct GbElement {
    poly: SuperPolynomial,
    cofactors: Vec<SuperPolynomial>,
}

impl GbElement {
    pub fn poly(&self) -> &SuperPolynomial {
        &self.poly
    }

    /// Cofactors c_i with poly = sum c_i dS/dq_i, indexed by variable slot.
    pub fn cofactors(&self) -> &[SuperPolynomial] {
        &self.cofactors
    }

    fn leading_monomial(&self) -> &SuperMonomial {
        &self.poly.leading().expect("gb element is nonzero").0
    }

    /// Re-expand the cofactor identity; used by tests and debug assertions.
    pub fn expand_cofactors(&self, model: &ModelSetup) -> SuperPolynomial {
        let mut out = SuperPolynomial::zero(self.poly.vars());
        for (c, partial) in self.cofactors.iter().zip(model.partials()) {
            if !c.is_zero() && !partial.is_zero() {
                out += &(c * partial);
            }
        }
        out
    }
}

/// Reduced Groebner basis of the Jacobian ideal, monic, sorted by leading
/// monomial ascending.
#[derive(Debug, Clone)]
pub struct GroebnerData {
    elements: Vec<GbElement>,
    order: MonomialOrder,
}

impl GroebnerData {
    pub fn elements(&self) -> &[GbElement] {
        &self.elements
    }

    pub fn order(&self) -> MonomialOrder {
        self.order
    }
}

/// Charge-zero standard monomials u_0..u_{mu-1}, sorted by weight then
/// monomial order ascending, with the weight partition alongside.
///
/// This ordering is the canonical basis of the crate: every reported tensor
/// is expressed in it, and the CLI prints it so results can be compared
/// across runs and implementations.
#[derive(Debug, Clone)]
pub struct BasisData {
    basis: Vec<SuperMonomial>,
    weights: Vec<i64>,
    partition: Vec<Vec<usize>>,
    index: HashMap<SuperMonomial, usize>,
    vars: Vars,
}

impl BasisData {
    pub fn mu(&self) -> usize {
        self.basis.len()
    }

    pub fn monomials(&self) -> &[SuperMonomial] {
        &self.basis
    }

    pub fn monomial(&self, index: usize) -> &SuperMonomial {
        &self.basis[index]
    }

    pub fn element(&self, index: usize) -> SuperPolynomial {
        SuperPolynomial::from_monomial(self.vars, self.basis[index].clone(), Scalar::one())
    }

    pub fn weights(&self) -> &[i64] {
        &self.weights
    }

    pub fn weight(&self, index: usize) -> i64 {
        self.weights[index]
    }

    /// Indices grouped by weight, ascending; entry w lists I_w.
    pub fn partition(&self) -> &[Vec<usize>] {
        &self.partition
    }

    pub fn index_of(&self, m: &SuperMonomial) -> Option<usize> {
        self.index.get(m).copied()
    }

    /// Index of u_min = 1.
    pub fn min_index(&self) -> usize {
        0
    }

    /// Index of the unique top-weight element u_max.
    pub fn max_index(&self) -> usize {
        self.basis.len() - 1
    }
}

/// Exponent vectors of length `parts` summing to `total`, lexicographic.
fn compositions(total: u32, parts: usize) -> Vec<Vec<u32>> {
    fn go(total: u32, parts: usize, prefix: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if parts == 1 {
            prefix.push(total);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for first in 0..=total {
            prefix.push(first);
            go(total - first, parts - 1, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    if parts == 0 {
        if total == 0 {
            out.push(Vec::new());
        }
        return out;
    }
    go(total, parts, &mut Vec::new(), &mut out);
    out
}

fn monomial_times_poly(m: &SuperMonomial, p: &SuperPolynomial) -> SuperPolynomial {
    SuperPolynomial::zero(p.vars()).add_scaled_monomial_mul(&Scalar::one(), m, p)
}

fn lcm_monomial(a: &SuperMonomial, b: &SuperMonomial) -> SuperMonomial {
    let exps = a
        .exponents()
        .iter()
        .zip(b.exponents())
        .map(|(&x, &y)| x.max(y))
        .collect();
    SuperMonomial::new(exps, 0)
}

fn coprime(a: &SuperMonomial, b: &SuperMonomial) -> bool {
    a.exponents()
        .iter()
        .zip(b.exponents())
        .all(|(&x, &y)| x.min(y) == 0)
}

/// Full multivariate division of `p` by the monic divisors, reducing the
/// leading term of the working remainder first. Returns the per-divisor
/// quotients and the normal form.
fn divide(
    p: &SuperPolynomial,
    elements: &[GbElement],
    strategy: DivisionStrategy,
) -> (Vec<SuperPolynomial>, SuperPolynomial) {
    let vars = p.vars();
    let mut quotients = vec![SuperPolynomial::zero(vars); elements.len()];
    let mut remainder_terms: Vec<(SuperMonomial, Scalar)> = Vec::new();
    let mut work = p.clone();
    while let Some((lm, lc)) = work.leading().cloned() {
        let matches = |j: &usize| lm.divisible_by(elements[*j].leading_monomial());
        let hit = match strategy {
            DivisionStrategy::FirstMatch => (0..elements.len()).find(matches),
            DivisionStrategy::LastMatch => (0..elements.len()).rev().find(matches),
        };
        match hit {
            Some(j) => {
                let factor = lm.quotient(elements[j].leading_monomial());
                work = work.add_scaled_monomial_mul(&-lc.clone(), &factor, &elements[j].poly);
                quotients[j] += &SuperPolynomial::from_monomial(vars, factor, lc);
            }
            None => {
                remainder_terms.push((lm, lc));
                work = SuperPolynomial::from_terms(vars, work.terms()[1..].to_vec());
            }
        }
    }
    (quotients, SuperPolynomial::from_terms(vars, remainder_terms))
}

fn monic(poly: SuperPolynomial, cofactors: Vec<SuperPolynomial>) -> GbElement {
    let lc = poly.leading().expect("monic input is nonzero").1.clone();
    let inv = lc.recip();
    GbElement {
        poly: poly.scale(&inv),
        cofactors: cofactors.into_iter().map(|c| c.scale(&inv)).collect(),
    }
}

/// Push the division quotients through the divisors' certificates: after
/// r = p - sum q_j g_j, the cofactors of p become those of r.
fn subtract_quotients(
    mut cofactors: Vec<SuperPolynomial>,
    quotients: &[SuperPolynomial],
    elements: &[GbElement],
) -> Vec<SuperPolynomial> {
    for (q, e) in quotients.iter().zip(elements) {
        if q.is_zero() {
            continue;
        }
        for (slot, c) in e.cofactors.iter().enumerate() {
            if !c.is_zero() {
                cofactors[slot] -= &(q * c);
            }
        }
    }
    cofactors
}

/// Buchberger's algorithm on the partials of the potential, with exact
/// cofactor tracking, followed by cofactor-consistent inter-reduction to a
/// reduced monic basis.
pub fn jacobian_groebner(model: &ModelSetup) -> GroebnerData {
    let vars = model.vars();
    let total = vars.total();
    let k = vars.k;

    let mut elements: Vec<GbElement> = Vec::new();
    for (slot, partial) in model.partials().iter().enumerate() {
        if partial.is_zero() {
            continue;
        }
        let mut cof = vec![SuperPolynomial::zero(vars); total];
        cof[slot] = SuperPolynomial::one(vars);
        elements.push(monic(partial.clone(), cof));
    }

    // Pair queue keyed by (lcm degree, indices): Buchberger's normal
    // selection, fully deterministic.
    let mut pairs: BTreeSet<(u64, usize, usize)> = BTreeSet::new();
    let enqueue = |pairs: &mut BTreeSet<(u64, usize, usize)>,
                   elements: &[GbElement],
                   fresh: usize| {
        for old in 0..fresh {
            let a = elements[old].leading_monomial();
            let b = elements[fresh].leading_monomial();
            if !coprime(a, b) {
                pairs.insert((lcm_monomial(a, b).q_degree(), old, fresh));
            }
        }
    };
    for i in 0..elements.len() {
        enqueue(&mut pairs, &elements, i);
    }

    while let Some(&(deg, i, j)) = pairs.iter().next() {
        pairs.remove(&(deg, i, j));
        let lm_i = elements[i].leading_monomial().clone();
        let lm_j = elements[j].leading_monomial().clone();
        let lcm = lcm_monomial(&lm_i, &lm_j);
        let mi = lcm.quotient(&lm_i);
        let mj = lcm.quotient(&lm_j);

        let s = &monomial_times_poly(&mi, &elements[i].poly)
            - &monomial_times_poly(&mj, &elements[j].poly);
        let mut cof: Vec<SuperPolynomial> = Vec::with_capacity(total);
        for slot in 0..total {
            let a = monomial_times_poly(&mi, &elements[i].cofactors[slot]);
            let b = monomial_times_poly(&mj, &elements[j].cofactors[slot]);
            cof.push(&a - &b);
        }

        let (quotients, remainder) = divide(&s, &elements, DivisionStrategy::FirstMatch);
        let cof = subtract_quotients(cof, &quotients, &elements);
        if !remainder.is_zero() {
            elements.push(monic(remainder, cof));
            let fresh = elements.len() - 1;
            enqueue(&mut pairs, &elements, fresh);
        }
    }

    // Minimalize: drop any element whose leading monomial is a multiple of
    // another kept one. Ascending leading-monomial order keeps divisors.
    elements.sort_by(|a, b| a.leading_monomial().cmp_in(b.leading_monomial(), k));
    let mut kept: Vec<GbElement> = Vec::new();
    for e in elements {
        let lm = e.leading_monomial();
        if !kept.iter().any(|f| lm.divisible_by(f.leading_monomial())) {
            kept.push(e);
        }
    }

    // Inter-reduce tails against the other elements, updating cofactors.
    for i in 0..kept.len() {
        let others: Vec<GbElement> = kept
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != i)
            .map(|(_, e)| e.clone())
            .collect();
        let (quotients, remainder) = divide(&kept[i].poly, &others, DivisionStrategy::FirstMatch);
        let cof = subtract_quotients(kept[i].cofactors.clone(), &quotients, &others);
        kept[i] = GbElement {
            poly: remainder,
            cofactors: cof,
        };
    }

    if cfg!(debug_assertions) {
        for e in &kept {
            debug_assert_eq!(e.expand_cofactors(model), e.poly);
            debug_assert!(model.grading().poly_charge(&e.poly).is_some());
        }
    }

    GroebnerData {
        elements: kept,
        order: MonomialOrder::Grevlex,
    }
}

/// Default ceiling on the standard-monomial count before the input is
/// declared non-finite-dimensional.
pub const DEFAULT_BASIS_CAP: usize = 100_000;

/// Enumerate the charge-zero standard monomials weight level by weight
/// level with the default cap.
pub fn charge_zero_basis(model: &ModelSetup, gb: &GroebnerData) -> Result<BasisData> {
    charge_zero_basis_capped(model, gb, DEFAULT_BASIS_CAP)
}

/// As charge_zero_basis with an explicit cap.
///
/// Termination of the level loop at the first empty level is sound: every
/// charge-zero monomial of weight w factors as a product of w charge-zero
/// blocks y_l x^(d_l) of weight 1, so it is divisible by a charge-zero
/// monomial of each lower weight; once a level has no standard monomial,
/// no higher level can have one.
pub fn charge_zero_basis_capped(
    model: &ModelSetup,
    gb: &GroebnerData,
    cap: usize,
) -> Result<BasisData> {
    let vars = model.vars();
    let k = vars.k;
    let n = vars.n;
    let degrees = model.degrees();
    let leading: Vec<&SuperMonomial> = gb.elements.iter().map(|e| e.leading_monomial()).collect();

    let mut basis: Vec<SuperMonomial> = Vec::new();
    let mut weights: Vec<i64> = Vec::new();
    let mut partition: Vec<Vec<usize>> = Vec::new();
    let mut weight = 0u32;
    loop {
        let mut level: Vec<SuperMonomial> = Vec::new();
        for y_part in compositions(weight, k) {
            let x_total: u32 = y_part
                .iter()
                .zip(degrees)
                .map(|(&a, &d)| a * d)
                .sum();
            for x_part in compositions(x_total, n + 1) {
                let mut exps = y_part.clone();
                exps.extend_from_slice(&x_part);
                let m = SuperMonomial::new(exps, 0);
                if !leading.iter().any(|lm| m.divisible_by(lm)) {
                    level.push(m);
                }
            }
        }
        if level.is_empty() {
            break;
        }
        level.sort_by(|a, b| a.cmp_in(b, k));
        let start = basis.len();
        if start + level.len() > cap {
            return Err(Error::NotFiniteDimensional { cap });
        }
        partition.push((start..start + level.len()).collect());
        weights.extend(std::iter::repeat(weight as i64).take(level.len()));
        basis.extend(level);
        weight += 1;
    }

    let top = n as i64 - k as i64;
    if basis.first().map(|m| m.q_degree()) != Some(0) {
        return Err(Error::Normalization(
            "charge-zero basis does not start with the unit monomial".into(),
        ));
    }
    if partition.len() as i64 != top + 1 {
        return Err(Error::Normalization(format!(
            "basis weights span 0..{} but 0..{} was required",
            partition.len() as i64 - 1,
            top
        )));
    }
    if partition[0].len() != 1 || partition[top as usize].len() != 1 {
        return Err(Error::Normalization(
            "bottom and top weight pieces must be one-dimensional".into(),
        ));
    }

    let index = basis
        .iter()
        .cloned()
        .enumerate()
        .map(|(i, m)| (m, i))
        .collect();
    Ok(BasisData {
        basis,
        weights,
        partition,
        index,
        vars,
    })
}

/// Result of rewriting p = sum_rho coefficients[rho] u_rho + Q_S(lambda).
///
/// The coefficients are unique; lambda depends on the division strategy,
/// and delta_lambda is its BV Laplacian, needed by every solver cascade.
#[derive(Debug, Clone)]
pub struct ReductionOutcome {
    pub coefficients: Vec<Scalar>,
    pub lambda: SuperPolynomial,
    pub delta_lambda: SuperPolynomial,
}

/// Reduce an even charge-zero element to the standard-monomial basis.
pub fn reduce_to_basis(
    model: &ModelSetup,
    gb: &GroebnerData,
    basis: &BasisData,
    p: &SuperPolynomial,
    strategy: DivisionStrategy,
) -> Result<ReductionOutcome> {
    if !p.is_even() {
        return Err(Error::ChargeMismatch(
            "reduction input must be even".into(),
        ));
    }
    if !model.grading().has_charge(p, 0) {
        return Err(Error::ChargeMismatch(format!(
            "reduction input must have charge zero, got {:?}",
            model.grading().poly_charge(p)
        )));
    }

    let vars = p.vars();
    let (quotients, remainder) = divide(p, &gb.elements, strategy);

    let mut coefficients = vec![Scalar::zero(); basis.mu()];
    for (m, c) in remainder.terms() {
        let slot = basis.index_of(m).ok_or_else(|| {
            Error::Normalization(format!(
                "normal form contains the non-basis standard monomial {m:?}"
            ))
        })?;
        coefficients[slot] = c.clone();
    }

    let mut lambda = SuperPolynomial::zero(vars);
    for slot in 0..vars.total() {
        let mut f = SuperPolynomial::zero(vars);
        for (q, e) in quotients.iter().zip(&gb.elements) {
            if !q.is_zero() && !e.cofactors[slot].is_zero() {
                f += &(q * &e.cofactors[slot]);
            }
        }
        if !f.is_zero() {
            lambda += &(&f * &SuperPolynomial::eta(vars, slot));
        }
    }
    let delta_lambda = apply_delta(&lambda);

    if cfg!(debug_assertions) {
        let mut check = model.apply_q(&lambda);
        for (slot, c) in coefficients.iter().enumerate() {
            if !c.is_zero() {
                check += &SuperPolynomial::from_monomial(vars, basis.monomial(slot).clone(), c.clone());
            }
        }
        debug_assert_eq!(&check, p, "reduction identity failed");
    }

    Ok(ReductionOutcome {
        coefficients,
        lambda,
        delta_lambda,
    })
}
