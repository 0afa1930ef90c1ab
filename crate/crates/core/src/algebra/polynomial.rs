use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use num::Zero;

use super::{parse, Scalar, SuperMonomial, Vars};

/// Sparse element of the super-commutative algebra over its `Vars`.
///
/// Terms are kept strictly descending in the contextual monomial order with
/// no zero coefficients, so structural equality is semantic equality and the
/// first term is the leading term. Values are immutable in spirit: all
/// operations return fresh polynomials.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SuperPolynomial {
    vars: Vars,
    terms: Vec<(SuperMonomial, Scalar)>,
}

impl SuperPolynomial {
    pub fn zero(vars: Vars) -> Self {
        SuperPolynomial {
            vars,
            terms: Vec::new(),
        }
    }

    pub fn one(vars: Vars) -> Self {
        Self::constant(vars, Scalar::from_integer(1.into()))
    }

    pub fn constant(vars: Vars, c: Scalar) -> Self {
        let mut p = Self::zero(vars);
        if !c.is_zero() {
            p.terms.push((SuperMonomial::unit(vars.total()), c));
        }
        p
    }

    /// The even variable of `slot`.
    pub fn var(vars: Vars, slot: usize) -> Self {
        Self::from_monomial(
            vars,
            SuperMonomial::var(vars.total(), slot),
            Scalar::from_integer(1.into()),
        )
    }

    /// The odd variable of `slot`.
    pub fn eta(vars: Vars, slot: usize) -> Self {
        Self::from_monomial(
            vars,
            SuperMonomial::eta(vars.total(), slot),
            Scalar::from_integer(1.into()),
        )
    }

    pub fn from_monomial(vars: Vars, m: SuperMonomial, c: Scalar) -> Self {
        debug_assert_eq!(m.width(), vars.total());
        let mut p = Self::zero(vars);
        if !c.is_zero() {
            p.terms.push((m, c));
        }
        p
    }

    /// Build from an arbitrary term list: sorts, merges, drops zeros.
    pub fn from_terms(vars: Vars, terms: Vec<(SuperMonomial, Scalar)>) -> Self {
        let mut p = SuperPolynomial { vars, terms };
        p.normalize();
        p
    }

    fn normalize(&mut self) {
        let k = self.vars.k;
        self.terms
            .sort_unstable_by(|(a, _), (b, _)| b.cmp_in(a, k));
        let mut out: Vec<(SuperMonomial, Scalar)> = Vec::with_capacity(self.terms.len());
        for (m, c) in self.terms.drain(..) {
            match out.last_mut() {
                Some((last, acc)) if *last == m => *acc += c,
                _ => out.push((m, c)),
            }
            if let Some((_, acc)) = out.last() {
                if acc.is_zero() {
                    out.pop();
                }
            }
        }
        self.terms = out;
    }

    pub fn vars(&self) -> Vars {
        self.vars
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> &[(SuperMonomial, Scalar)] {
        &self.terms
    }

    pub fn term_count(&self) -> usize {
        self.terms.len()
    }

    /// Leading term under the contextual order (largest monomial).
    pub fn leading(&self) -> Option<&(SuperMonomial, Scalar)> {
        self.terms.first()
    }

    /// True when no odd variable occurs (cohomological degree 0).
    pub fn is_even(&self) -> bool {
        self.terms.iter().all(|(m, _)| m.is_even())
    }

    /// Coefficient of a monomial, zero when absent. Terms are descending,
    /// so the comparator is flipped relative to the stored order.
    pub fn coefficient(&self, m: &SuperMonomial) -> Scalar {
        let k = self.vars.k;
        match self.terms.binary_search_by(|(t, _)| m.cmp_in(t, k)) {
            Ok(i) => self.terms[i].1.clone(),
            Err(_) => Scalar::zero(),
        }
    }

    pub fn scale(&self, c: &Scalar) -> Self {
        if c.is_zero() {
            return Self::zero(self.vars);
        }
        SuperPolynomial {
            vars: self.vars,
            terms: self
                .terms
                .iter()
                .map(|(m, a)| (m.clone(), a * c))
                .collect(),
        }
    }

    /// self + c * m * other, the workhorse of polynomial division.
    pub fn add_scaled_monomial_mul(&self, c: &Scalar, m: &SuperMonomial, other: &Self) -> Self {
        debug_assert_eq!(self.vars, other.vars);
        let mut extra: Vec<(SuperMonomial, Scalar)> = Vec::with_capacity(other.terms.len());
        for (om, oc) in &other.terms {
            if let Some((prod, neg)) = m.mul(om) {
                let mut coeff = c * oc;
                if neg {
                    coeff = -coeff;
                }
                extra.push((prod, coeff));
            }
        }
        let mut all = self.terms.clone();
        all.extend(extra);
        Self::from_terms(self.vars, all)
    }

    /// Split into cohomological-degree components keyed by the number of odd
    /// factors. Summing the pieces recovers the element.
    pub fn components_by_eta_count(&self) -> Vec<(u32, SuperPolynomial)> {
        let mut buckets: std::collections::BTreeMap<u32, Vec<(SuperMonomial, Scalar)>> =
            std::collections::BTreeMap::new();
        for (m, c) in &self.terms {
            buckets
                .entry(m.eta_count())
                .or_default()
                .push((m.clone(), c.clone()));
        }
        buckets
            .into_iter()
            .map(|(count, terms)| (count, SuperPolynomial::from_terms(self.vars, terms)))
            .collect()
    }

    /// Map every coefficient, dropping zeros.
    pub fn map_coefficients(&self, f: impl Fn(&Scalar) -> Scalar) -> Self {
        Self::from_terms(
            self.vars,
            self.terms
                .iter()
                .map(|(m, c)| (m.clone(), f(c)))
                .collect(),
        )
    }
}

impl fmt::Display for SuperPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", parse::render_polynomial(self))
    }
}

impl Add for &SuperPolynomial {
    type Output = SuperPolynomial;
    fn add(self, rhs: &SuperPolynomial) -> SuperPolynomial {
        debug_assert_eq!(self.vars, rhs.vars);
        let k = self.vars.k;
        let mut out = Vec::with_capacity(self.terms.len() + rhs.terms.len());
        let mut a = self.terms.iter().peekable();
        let mut b = rhs.terms.iter().peekable();
        loop {
            match (a.peek(), b.peek()) {
                (Some((ma, ca)), Some((mb, cb))) => match mb.cmp_in(ma, k) {
                    Ordering::Less => {
                        out.push((ma.clone(), ca.clone()));
                        a.next();
                    }
                    Ordering::Greater => {
                        out.push((mb.clone(), cb.clone()));
                        b.next();
                    }
                    Ordering::Equal => {
                        let c = ca.clone() + cb.clone();
                        if !c.is_zero() {
                            out.push((ma.clone(), c));
                        }
                        a.next();
                        b.next();
                    }
                },
                (Some(_), None) => {
                    out.extend(a.cloned());
                    break;
                }
                (None, Some(_)) => {
                    out.extend(b.cloned());
                    break;
                }
                (None, None) => break,
            }
        }
        SuperPolynomial {
            vars: self.vars,
            terms: out,
        }
    }
}

impl Sub for &SuperPolynomial {
    type Output = SuperPolynomial;
    fn sub(self, rhs: &SuperPolynomial) -> SuperPolynomial {
        self + &(-rhs)
    }
}

impl Neg for &SuperPolynomial {
    type Output = SuperPolynomial;
    fn neg(self) -> SuperPolynomial {
        SuperPolynomial {
            vars: self.vars,
            terms: self
                .terms
                .iter()
                .map(|(m, c)| (m.clone(), -c.clone()))
                .collect(),
        }
    }
}

impl Mul for &SuperPolynomial {
    type Output = SuperPolynomial;
    fn mul(self, rhs: &SuperPolynomial) -> SuperPolynomial {
        debug_assert_eq!(self.vars, rhs.vars);
        let mut terms = Vec::with_capacity(self.terms.len() * rhs.terms.len());
        for (ma, ca) in &self.terms {
            for (mb, cb) in &rhs.terms {
                if let Some((m, neg)) = ma.mul(mb) {
                    let mut c = ca * cb;
                    if neg {
                        c = -c;
                    }
                    terms.push((m, c));
                }
            }
        }
        SuperPolynomial::from_terms(self.vars, terms)
    }
}

impl AddAssign<&SuperPolynomial> for SuperPolynomial {
    fn add_assign(&mut self, rhs: &SuperPolynomial) {
        *self = &*self + rhs;
    }
}

impl SubAssign<&SuperPolynomial> for SuperPolynomial {
    fn sub_assign(&mut self, rhs: &SuperPolynomial) {
        *self = &*self - rhs;
    }
}
