//! Formal series in the deformation parameters t^alpha and the quantization
//! parameter hbar, with polynomial coefficients, plus symmetric tensors
//! indexed by sorted multisets of basis indices.
//!
//! A series stores plain monomial coefficients: the value is
//! sum over (r, tau) of terms[(r, tau)] * hbar^r * t^tau where t^tau is the
//! literal product of the t-variables listed in tau. Divided-power factors
//! appear only when a SymTensor is expanded into a series.
//!
//! Exactness bookkeeping: t_exact / h_exact give the largest t-degree and
//! hbar-exponent through which the coefficients are known (None = all of
//! them). Every operation combines the bounds of its inputs so that a
//! truncated intermediate can never masquerade as exact data; coefficients
//! beyond the bounds are dropped eagerly. The low hbar side needs no bound:
//! absence of terms below the minimal stored exponent is a hard fact.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use num::{BigInt, One, Zero};

use crate::algebra::{Scalar, SuperPolynomial, Vars};
use crate::error::{Error, Result};

/// Sorted multiset of basis indices; the exponent of a t-monomial.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MultiIndex(Vec<usize>);

impl MultiIndex {
    pub fn empty() -> Self {
        MultiIndex(Vec::new())
    }

    pub fn new(mut indices: Vec<usize>) -> Self {
        indices.sort_unstable();
        MultiIndex(indices)
    }

    pub fn single(a: usize) -> Self {
        MultiIndex(vec![a])
    }

    pub fn pair(a: usize, b: usize) -> Self {
        MultiIndex::new(vec![a, b])
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn degree(&self) -> i32 {
        self.0.len() as i32
    }

    pub fn multiplicity(&self, a: usize) -> usize {
        self.0.iter().filter(|&&x| x == a).count()
    }

    /// The multiset with one extra copy of `a`.
    pub fn with(&self, a: usize) -> Self {
        let mut v = self.0.clone();
        let pos = v.partition_point(|&x| x <= a);
        v.insert(pos, a);
        MultiIndex(v)
    }

    /// Remove one copy of `a`; None when absent.
    pub fn remove_one(&self, a: usize) -> Option<Self> {
        let pos = self.0.iter().position(|&x| x == a)?;
        let mut v = self.0.clone();
        v.remove(pos);
        Some(MultiIndex(v))
    }

    pub fn merge(&self, other: &Self) -> Self {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        MultiIndex::new(v)
    }

    /// Multiset difference; None unless other is contained in self.
    pub fn subtract(&self, other: &Self) -> Option<Self> {
        let mut remaining = self.0.clone();
        for &x in &other.0 {
            let pos = remaining.iter().position(|&y| y == x)?;
            remaining.remove(pos);
        }
        Some(MultiIndex(remaining))
    }

    /// Product of factorials of the multiplicities, the divided-power factor.
    pub fn multiplicity_factorial(&self) -> Scalar {
        let mut result = BigInt::one();
        let mut run = 0u64;
        let mut prev: Option<usize> = None;
        for &x in &self.0 {
            run = if prev == Some(x) { run + 1 } else { 1 };
            prev = Some(x);
            result *= BigInt::from(run);
        }
        Scalar::from_integer(result)
    }

    /// All splits of the multiset into an ordered pair of sub-multisets.
    pub fn splits(&self) -> Vec<(MultiIndex, MultiIndex)> {
        let mut groups: Vec<(usize, usize)> = Vec::new();
        for &x in &self.0 {
            match groups.last_mut() {
                Some((v, c)) if *v == x => *c += 1,
                _ => groups.push((x, 1)),
            }
        }
        let mut out = vec![(Vec::new(), Vec::new())];
        for &(value, count) in &groups {
            let mut next = Vec::with_capacity(out.len() * (count + 1));
            for (left, right) in out {
                for take in 0..=count {
                    let mut l = left.clone();
                    let mut r = right.clone();
                    l.extend(std::iter::repeat(value).take(take));
                    r.extend(std::iter::repeat(value).take(count - take));
                    next.push((l, r));
                }
            }
            out = next;
        }
        out.into_iter()
            .map(|(l, r)| (MultiIndex(l), MultiIndex(r)))
            .collect()
    }

    /// All multisets of the given degree over indices 0..range.
    pub fn all_of_degree(range: usize, degree: usize) -> Vec<MultiIndex> {
        fn go(range: usize, degree: usize, min: usize, prefix: &mut Vec<usize>, out: &mut Vec<MultiIndex>) {
            if degree == 0 {
                out.push(MultiIndex(prefix.clone()));
                return;
            }
            for next in min..range {
                prefix.push(next);
                go(range, degree - 1, next, prefix, out);
                prefix.pop();
            }
        }
        let mut out = Vec::new();
        go(range, degree, 0, &mut Vec::new(), &mut out);
        out
    }
}

impl Ord for MultiIndex {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0
            .len()
            .cmp(&other.0.len())
            .then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for MultiIndex {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl std::fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self.0.iter().map(usize::to_string).collect();
        write!(f, "{}", parts.join(","))
    }
}

pub fn factorial(n: usize) -> Scalar {
    let mut result = BigInt::one();
    for i in 2..=n {
        result *= BigInt::from(i);
    }
    Scalar::from_integer(result)
}

/// Symmetric tensor: per rank, a map from sorted multisets to values.
/// Missing keys read as zero. Single sorted-key storage is what enforces
/// the index symmetry of everything stored here.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SymTensor<V> {
    ranks: BTreeMap<usize, BTreeMap<MultiIndex, V>>,
}

impl<V> Default for SymTensor<V> {
    fn default() -> Self {
        SymTensor {
            ranks: BTreeMap::new(),
        }
    }
}

impl<V> SymTensor<V> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, key: &MultiIndex) -> Option<&V> {
        self.ranks.get(&key.len())?.get(key)
    }

    pub fn set(&mut self, key: MultiIndex, value: V) {
        self.ranks.entry(key.len()).or_default().insert(key, value);
    }

    pub fn rank_entries(&self, rank: usize) -> impl Iterator<Item = (&MultiIndex, &V)> {
        self.ranks.get(&rank).into_iter().flatten()
    }

    pub fn ranks(&self) -> impl Iterator<Item = usize> + '_ {
        self.ranks.keys().copied()
    }

    pub fn max_rank(&self) -> Option<usize> {
        self.ranks.keys().next_back().copied()
    }

    pub fn entries(&self) -> impl Iterator<Item = (&MultiIndex, &V)> {
        self.ranks.values().flatten()
    }
}

impl SymTensor<SuperPolynomial> {
    /// JSON object {"order": rank, "entries": {"a1,a2": "poly", ...}}.
    pub fn rank_to_json(&self, rank: usize) -> serde_json::Value {
        let mut entries = serde_json::Map::new();
        for (key, value) in self.rank_entries(rank) {
            if !value.is_zero() {
                entries.insert(key.to_string(), serde_json::Value::String(value.to_string()));
            }
        }
        serde_json::json!({"order": rank, "entries": entries})
    }
}

impl SymTensor<Vec<Scalar>> {
    /// JSON object {"order": rank, "entries": {"a1,a2->rho": "p/q", ...}}.
    pub fn rank_to_json(&self, rank: usize) -> serde_json::Value {
        let mut entries = serde_json::Map::new();
        for (key, values) in self.rank_entries(rank) {
            for (rho, value) in values.iter().enumerate() {
                if !value.is_zero() {
                    entries.insert(
                        format!("{key}->{rho}"),
                        serde_json::Value::String(value.to_string()),
                    );
                }
            }
        }
        serde_json::json!({"order": rank, "entries": entries})
    }
}

/// Formal series in t and hbar with polynomial coefficients and exactness
/// bounds. See the module docs for the storage convention.
#[derive(Debug, Clone)]
pub struct FormalSeries {
    vars: Vars,
    terms: BTreeMap<(i32, MultiIndex), SuperPolynomial>,
    t_exact: Option<i32>,
    h_exact: Option<i32>,
}

fn min_bound(a: Option<i32>, b: Option<i32>) -> Option<i32> {
    match (a, b) {
        (Some(x), Some(y)) => Some(x.min(y)),
        (Some(x), None) | (None, Some(x)) => Some(x),
        (None, None) => None,
    }
}

impl FormalSeries {
    pub fn zero(vars: Vars) -> Self {
        FormalSeries {
            vars,
            terms: BTreeMap::new(),
            t_exact: None,
            h_exact: None,
        }
    }

    pub fn one(vars: Vars) -> Self {
        FormalSeries::from_polynomial(SuperPolynomial::one(vars))
    }

    /// A t- and hbar-free series with the given coefficient.
    pub fn from_polynomial(p: SuperPolynomial) -> Self {
        let vars = p.vars();
        let mut s = FormalSeries::zero(vars);
        if !p.is_zero() {
            s.terms.insert((0, MultiIndex::empty()), p);
        }
        s
    }

    pub fn from_terms(
        vars: Vars,
        terms: Vec<((i32, MultiIndex), SuperPolynomial)>,
        t_exact: Option<i32>,
        h_exact: Option<i32>,
    ) -> Self {
        let mut map = BTreeMap::new();
        for (key, p) in terms {
            if p.is_zero() {
                continue;
            }
            match map.entry(key) {
                std::collections::btree_map::Entry::Vacant(e) => {
                    e.insert(p);
                }
                std::collections::btree_map::Entry::Occupied(mut e) => {
                    let sum = &*e.get() + &p;
                    if sum.is_zero() {
                        e.remove();
                    } else {
                        *e.get_mut() = sum;
                    }
                }
            }
        }
        let mut s = FormalSeries {
            vars,
            terms: map,
            t_exact,
            h_exact,
        };
        s.prune();
        s
    }

    fn prune(&mut self) {
        let t_exact = self.t_exact;
        let h_exact = self.h_exact;
        self.terms.retain(|(r, tau), p| {
            !p.is_zero()
                && t_exact.map_or(true, |t| tau.degree() <= t)
                && h_exact.map_or(true, |h| *r <= h)
        });
    }

    pub fn vars(&self) -> Vars {
        self.vars
    }

    pub fn terms(&self) -> &BTreeMap<(i32, MultiIndex), SuperPolynomial> {
        &self.terms
    }

    pub fn t_exact(&self) -> Option<i32> {
        self.t_exact
    }

    pub fn h_exact(&self) -> Option<i32> {
        self.h_exact
    }

    /// Lowest hbar exponent with a nonzero coefficient.
    pub fn min_h(&self) -> Option<i32> {
        self.terms.keys().map(|(r, _)| *r).min()
    }

    pub fn max_h(&self) -> Option<i32> {
        self.terms.keys().map(|(r, _)| *r).max()
    }

    /// Lowest t-degree with a nonzero coefficient.
    pub fn min_t(&self) -> Option<i32> {
        self.terms.keys().map(|(_, tau)| tau.degree()).min()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coefficient(&self, h: i32, tau: &MultiIndex) -> SuperPolynomial {
        self.terms
            .get(&(h, tau.clone()))
            .cloned()
            .unwrap_or_else(|| SuperPolynomial::zero(self.vars))
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut terms = self.terms.clone();
        for (key, p) in &other.terms {
            match terms.entry(key.clone()) {
                std::collections::btree_map::Entry::Vacant(e) => {
                    e.insert(p.clone());
                }
                std::collections::btree_map::Entry::Occupied(mut e) => {
                    let sum = &*e.get() + p;
                    if sum.is_zero() {
                        e.remove();
                    } else {
                        *e.get_mut() = sum;
                    }
                }
            }
        }
        let mut s = FormalSeries {
            vars: self.vars,
            terms,
            t_exact: min_bound(self.t_exact, other.t_exact),
            h_exact: min_bound(self.h_exact, other.h_exact),
        };
        s.prune();
        s
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Self {
        self.map_coefficients(|p| -p)
    }

    pub fn scale(&self, c: &Scalar) -> Self {
        if c.is_zero() {
            let mut s = FormalSeries::zero(self.vars);
            s.t_exact = self.t_exact;
            s.h_exact = self.h_exact;
            return s;
        }
        self.map_coefficients(|p| p.scale(c))
    }

    /// Apply a coefficient-wise map (a polynomial operator that does not
    /// touch t or hbar); exactness bounds carry over unchanged.
    pub fn map_coefficients(&self, f: impl Fn(&SuperPolynomial) -> SuperPolynomial) -> Self {
        let terms = self
            .terms
            .iter()
            .map(|(k, p)| (k.clone(), f(p)))
            .filter(|(_, p)| !p.is_zero())
            .collect();
        FormalSeries {
            vars: self.vars,
            terms,
            t_exact: self.t_exact,
            h_exact: self.h_exact,
        }
    }

    /// Multiply by a t- and hbar-free polynomial.
    pub fn mul_poly(&self, p: &SuperPolynomial) -> Self {
        self.map_coefficients(|q| q * p)
    }

    pub fn mul(&self, other: &Self) -> Self {
        // Unknown data enters the product through three channels: stored
        // terms of one factor times the unknown tail of the other (two
        // ways), and tail times tail. A channel is absent when the factor
        // has no tail (bound None) or no stored terms (floor None); a true
        // zero therefore annihilates even unknown regions, while a series
        // that is merely zero within its bounds does not.
        fn product_bound(
            a_exact: Option<i32>,
            a_floor: Option<i32>,
            b_exact: Option<i32>,
            b_floor: Option<i32>,
        ) -> Option<i32> {
            let mut bound = None;
            if let (Some(b), Some(lo)) = (b_exact, a_floor) {
                bound = min_bound(bound, Some(b + lo));
            }
            if let (Some(a), Some(lo)) = (a_exact, b_floor) {
                bound = min_bound(bound, Some(a + lo));
            }
            if let (Some(a), Some(b)) = (a_exact, b_exact) {
                bound = min_bound(bound, Some(a + b + 1));
            }
            bound
        }
        let h_exact = product_bound(self.h_exact, self.min_h(), other.h_exact, other.min_h());
        let t_exact = product_bound(self.t_exact, self.min_t(), other.t_exact, other.min_t());

        let mut terms: BTreeMap<(i32, MultiIndex), SuperPolynomial> = BTreeMap::new();
        for ((r1, tau1), p1) in &self.terms {
            for ((r2, tau2), p2) in &other.terms {
                let r = r1 + r2;
                if h_exact.map_or(false, |h| r > h) {
                    continue;
                }
                let tau = tau1.merge(tau2);
                if t_exact.map_or(false, |t| tau.degree() > t) {
                    continue;
                }
                let prod = p1 * p2;
                if prod.is_zero() {
                    continue;
                }
                match terms.entry((r, tau)) {
                    std::collections::btree_map::Entry::Vacant(e) => {
                        e.insert(prod);
                    }
                    std::collections::btree_map::Entry::Occupied(mut e) => {
                        let sum = &*e.get() + &prod;
                        if sum.is_zero() {
                            e.remove();
                        } else {
                            *e.get_mut() = sum;
                        }
                    }
                }
            }
        }
        FormalSeries {
            vars: self.vars,
            terms,
            t_exact,
            h_exact,
        }
    }

    /// Multiply by hbar^s. Negative s is legitimate series arithmetic here;
    /// window policy belongs to the connection context.
    pub fn shift_h(&self, s: i32) -> Self {
        FormalSeries {
            vars: self.vars,
            terms: self
                .terms
                .iter()
                .map(|((r, tau), p)| ((r + s, tau.clone()), p.clone()))
                .collect(),
            t_exact: self.t_exact,
            h_exact: self.h_exact.map(|h| h + s),
        }
    }

    /// Partial derivative with respect to t^alpha.
    pub fn d_t(&self, alpha: usize) -> Self {
        let terms = self
            .terms
            .iter()
            .filter_map(|((r, tau), p)| {
                let mult = tau.multiplicity(alpha);
                if mult == 0 {
                    return None;
                }
                let reduced = tau.remove_one(alpha).expect("multiplicity checked");
                Some(((*r, reduced), p.scale(&Scalar::from_integer(BigInt::from(mult)))))
            })
            .collect();
        let mut s = FormalSeries {
            vars: self.vars,
            terms,
            t_exact: self.t_exact.map(|t| t - 1),
            h_exact: self.h_exact,
        };
        s.prune();
        s
    }

    /// Derivative in the variable 1/hbar: hbar^r maps to -r hbar^(r+1).
    pub fn d_hbar_inv(&self) -> Self {
        let terms = self
            .terms
            .iter()
            .filter_map(|((r, tau), p)| {
                if *r == 0 {
                    return None;
                }
                Some(((r + 1, tau.clone()), p.scale(&Scalar::from_integer(BigInt::from(-r)))))
            })
            .collect();
        let mut s = FormalSeries {
            vars: self.vars,
            terms,
            t_exact: self.t_exact,
            h_exact: self.h_exact.map(|h| h + 1),
        };
        s.prune();
        s
    }

    /// The conjugation hbar -> -hbar.
    pub fn star(&self) -> Self {
        let terms = self
            .terms
            .iter()
            .map(|((r, tau), p)| {
                let c = if r.rem_euclid(2) == 1 { -p } else { p.clone() };
                ((*r, tau.clone()), c)
            })
            .collect();
        FormalSeries {
            vars: self.vars,
            terms,
            t_exact: self.t_exact,
            h_exact: self.h_exact,
        }
    }

    /// Restrict the exactness claim to t-degrees <= order, dropping higher
    /// stored coefficients.
    pub fn truncate_t(&self, order: i32) -> Self {
        let mut s = self.clone();
        s.t_exact = Some(min_bound(s.t_exact, Some(order)).unwrap());
        s.prune();
        s
    }

    /// Discard stored terms of t-degree > order without tightening the
    /// exactness claim: the result is a deliberately different series that
    /// agrees with self through degree `order`. Used to cut a deformation
    /// off at a chosen degree while keeping what remains exact.
    pub fn drop_t_above(&self, order: i32) -> Self {
        let mut s = self.clone();
        s.terms.retain(|(_, tau), _| tau.degree() <= order);
        s
    }

    /// Restrict the exactness claim to hbar-exponents <= hi.
    pub fn truncate_h(&self, hi: i32) -> Self {
        let mut s = self.clone();
        s.h_exact = Some(min_bound(s.h_exact, Some(hi)).unwrap());
        s.prune();
        s
    }

    /// Evaluate at t = 0: the t-degree-zero slice as a map over hbar.
    pub fn at_t_zero(&self) -> BTreeMap<i32, SuperPolynomial> {
        self.terms
            .iter()
            .filter(|((_, tau), _)| tau.is_empty())
            .map(|((r, _), p)| (*r, p.clone()))
            .collect()
    }
}

/// Expand a tensor family into the series sum over multisets tau of
/// value(tau) / prod mult! * t^tau, through t-degree `order` inclusive.
///
/// With this convention the iterated derivative of the series at t = 0
/// recovers exactly the stored tensor entry.
pub fn tensor_to_series(
    tensor: &SymTensor<SuperPolynomial>,
    vars: Vars,
    order: i32,
) -> Result<FormalSeries> {
    if order < 0 {
        return Err(Error::OrderExceeded(format!(
            "requested expansion order {order} is negative"
        )));
    }
    let populated = tensor.max_rank().unwrap_or(0) as i32;
    if populated < order {
        return Err(Error::OrderExceeded(format!(
            "tensor populated through rank {populated}, requested order {order}"
        )));
    }
    let mut terms = Vec::new();
    for rank in tensor.ranks() {
        if rank as i32 > order {
            break;
        }
        for (key, value) in tensor.rank_entries(rank) {
            let factor = key.multiplicity_factorial().recip();
            terms.push(((0, key.clone()), value.scale(&factor)));
        }
    }
    Ok(FormalSeries::from_terms(vars, terms, Some(order), None))
}

/// Assemble sum over tau of value(tau) / prod mult! * t^tau through `degree`.
///
/// Keys on which the closure returns `None` are simply absent from the
/// expansion. Solvers exploit this to assemble a slice in which the
/// current step's unknown entries are deliberately left out while the
/// declared exactness bound still reaches their degree; the caller then
/// accounts for the omitted terms by hand.
pub fn tensor_slice_series(
    vars: Vars,
    mu: usize,
    degree: i32,
    value_at: impl Fn(&MultiIndex) -> Option<SuperPolynomial>,
) -> FormalSeries {
    let mut terms = Vec::new();
    for d in 0..=degree.max(0) {
        for tau in MultiIndex::all_of_degree(mu, d as usize) {
            if let Some(v) = value_at(&tau) {
                let factor = tau.multiplicity_factorial().recip();
                terms.push(((0, tau), v.scale(&factor)));
            }
        }
    }
    FormalSeries::from_terms(vars, terms, Some(degree), None)
}

/// Exact truncated product of two series.
pub fn series_multiply(a: &FormalSeries, b: &FormalSeries, order: i32) -> FormalSeries {
    a.mul(b).truncate_t(order)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::scalar;

    fn vars() -> Vars {
        Vars::new(2, 1)
    }

    #[test]
    fn multi_index_ordering_and_ops() {
        let a = MultiIndex::new(vec![2, 0, 1]);
        assert_eq!(a.indices(), &[0, 1, 2]);
        assert!(MultiIndex::pair(5, 5) < MultiIndex::new(vec![0, 0, 0]));
        assert_eq!(a.with(1).indices(), &[0, 1, 1, 2]);
        assert_eq!(a.remove_one(1).unwrap().indices(), &[0, 2]);
        assert_eq!(a.remove_one(7), None);
        assert_eq!(
            MultiIndex::new(vec![0, 0, 1]).subtract(&MultiIndex::single(0)),
            Some(MultiIndex::pair(0, 1))
        );
        assert_eq!(MultiIndex::single(0).subtract(&MultiIndex::single(1)), None);
        assert_eq!(
            MultiIndex::new(vec![3, 3, 3, 1]).multiplicity_factorial(),
            scalar(6)
        );
        assert_eq!(MultiIndex::pair(0, 0).splits().len(), 3);
        assert_eq!(MultiIndex::new(vec![0, 0, 1]).splits().len(), 6);
        assert_eq!(MultiIndex::all_of_degree(3, 2).len(), 6);
        assert_eq!(factorial(5), scalar(120));
    }

    #[test]
    fn tensor_expansion_uses_divided_powers() {
        let vars = vars();
        let u = SuperPolynomial::var(vars, 1);
        let mut t: SymTensor<SuperPolynomial> = SymTensor::new();
        t.set(MultiIndex::pair(0, 0), u.clone());
        let s = tensor_to_series(&t, vars, 2).unwrap();
        assert_eq!(
            s.coefficient(0, &MultiIndex::pair(0, 0)),
            u.scale(&crate::algebra::scalar_frac(1, 2))
        );
        assert!(tensor_to_series(&t, vars, 3).is_err());

        let empty: SymTensor<SuperPolynomial> = SymTensor::new();
        assert!(tensor_to_series(&empty, vars, 0).unwrap().is_zero());
    }

    #[test]
    fn linear_slice_expands_plainly() {
        let vars = vars();
        let mut t: SymTensor<SuperPolynomial> = SymTensor::new();
        t.set(MultiIndex::single(0), SuperPolynomial::one(vars));
        t.set(MultiIndex::single(1), SuperPolynomial::var(vars, 2));
        let s = tensor_to_series(&t, vars, 1).unwrap();
        assert_eq!(s.coefficient(0, &MultiIndex::single(0)), SuperPolynomial::one(vars));
        assert_eq!(s.coefficient(0, &MultiIndex::single(1)), SuperPolynomial::var(vars, 2));
    }

    #[test]
    fn product_matches_expansion() {
        let vars = vars();
        let one = FormalSeries::one(vars);
        let t0 = FormalSeries::from_terms(
            vars,
            vec![((0, MultiIndex::single(0)), SuperPolynomial::one(vars))],
            None,
            None,
        );
        let a = one.add(&t0);
        let b = one.sub(&t0);
        let p = series_multiply(&a, &b, 2);
        assert_eq!(p.coefficient(0, &MultiIndex::empty()), SuperPolynomial::one(vars));
        assert!(p.coefficient(0, &MultiIndex::single(0)).is_zero());
        assert_eq!(
            p.coefficient(0, &MultiIndex::pair(0, 0)),
            -&SuperPolynomial::one(vars)
        );

        let zero = FormalSeries::zero(vars);
        assert!(a.mul(&zero).is_zero());
    }

    #[test]
    fn square_of_linear_series_doubles_mixed_terms() {
        let vars = vars();
        let u0 = SuperPolynomial::var(vars, 1);
        let u1 = SuperPolynomial::var(vars, 2);
        let ell = FormalSeries::from_terms(
            vars,
            vec![
                ((0, MultiIndex::single(0)), u0.clone()),
                ((0, MultiIndex::single(1)), u1.clone()),
            ],
            None,
            None,
        );
        let sq = ell.mul(&ell);
        assert_eq!(sq.coefficient(0, &MultiIndex::pair(0, 1)), (&u0 * &u1).scale(&scalar(2)));
        assert_eq!(sq.coefficient(0, &MultiIndex::pair(0, 0)), &u0 * &u0);
    }

    #[test]
    fn exactness_combines_under_products() {
        let vars = vars();
        // a = 1 known through t-degree 1; b = t0 known everywhere
        let a = FormalSeries::one(vars).truncate_t(1);
        let b = FormalSeries::from_terms(
            vars,
            vec![((0, MultiIndex::single(0)), SuperPolynomial::one(vars))],
            None,
            None,
        );
        let p = a.mul(&b);
        // b's floor is degree 1, so the product is exact through degree 2
        assert_eq!(p.t_exact(), Some(2));

        let h = FormalSeries::one(vars).shift_h(1).truncate_h(3);
        let q = h.mul(&h);
        assert_eq!(q.h_exact(), Some(4));
        assert_eq!(q.min_h(), Some(2));
    }

    #[test]
    fn dropping_differs_from_truncating() {
        let vars = vars();
        let s = FormalSeries::from_terms(
            vars,
            vec![
                ((0, MultiIndex::empty()), SuperPolynomial::one(vars)),
                ((0, MultiIndex::pair(0, 1)), SuperPolynomial::one(vars)),
            ],
            None,
            None,
        );
        let dropped = s.drop_t_above(1);
        assert_eq!(dropped.t_exact(), None);
        assert!(dropped.coefficient(0, &MultiIndex::pair(0, 1)).is_zero());
        let truncated = s.truncate_t(1);
        assert_eq!(truncated.t_exact(), Some(1));
    }

    #[test]
    fn truncated_zero_does_not_annihilate() {
        let vars = vars();
        // zero through t-degree 1, unknown beyond
        let z = FormalSeries::zero(vars).truncate_t(1);
        let b = FormalSeries::from_terms(
            vars,
            vec![((0, MultiIndex::single(0)), SuperPolynomial::one(vars))],
            None,
            None,
        );
        let p = z.mul(&b);
        assert!(p.is_zero());
        // the unknown tail of z starts at degree 2, b's floor is 1
        assert_eq!(p.t_exact(), Some(2));
        // two truncated zeros: only the tail-times-tail channel remains
        let q = z.mul(&z);
        assert_eq!(q.t_exact(), Some(3));
        // a true zero still annihilates the unknown tail of the other factor
        let truncated = b.truncate_t(0);
        let r = FormalSeries::zero(vars).mul(&truncated);
        assert!(r.is_zero());
        assert_eq!(r.t_exact(), None);
    }

    #[test]
    fn derivative_shifts_tensor_keys() {
        let vars = vars();
        let u = SuperPolynomial::var(vars, 1);
        let mut t: SymTensor<SuperPolynomial> = SymTensor::new();
        t.set(MultiIndex::single(0), SuperPolynomial::one(vars));
        t.set(MultiIndex::pair(0, 0), u.clone());
        let s = tensor_to_series(&t, vars, 2).unwrap();
        let d = s.d_t(0);
        // d/dt0 of u t0^2/2 is u t0
        assert_eq!(d.coefficient(0, &MultiIndex::single(0)), u);
        assert_eq!(d.t_exact(), Some(1));
        // second derivative at t = 0 recovers the tensor entry
        let dd = d.d_t(0);
        assert_eq!(dd.coefficient(0, &MultiIndex::empty()), u);
    }

    #[test]
    fn hbar_operations() {
        let vars = vars();
        let h = FormalSeries::one(vars).shift_h(1);
        let d = h.d_hbar_inv();
        assert_eq!(d.coefficient(2, &MultiIndex::empty()), -&SuperPolynomial::one(vars));
        assert!(FormalSeries::one(vars).d_hbar_inv().is_zero());

        let mixed = FormalSeries::one(vars).add(&h);
        let starred = mixed.star();
        assert_eq!(starred.coefficient(0, &MultiIndex::empty()), SuperPolynomial::one(vars));
        assert_eq!(starred.coefficient(1, &MultiIndex::empty()), -&SuperPolynomial::one(vars));
        assert!(starred.star().sub(&mixed).is_zero());

        let down = h.shift_h(-2);
        assert_eq!(down.min_h(), Some(-1));
    }
}
