//! Geometric input validation and assembly of the master potential.
//!
//! A model is a complete intersection in projective n-space cut out by k
//! homogeneous forms G_1..G_k in x_0..x_n. The potential S = sum y_l G_l
//! lives in the enlarged algebra; its partial derivatives generate the
//! Jacobian ideal that every later computation reduces against.

use serde::Deserialize;

use crate::algebra::{
    apply_delta, ell2_with, k_apply, parse_polynomial, q_apply, Scalar, SuperMonomial,
    SuperPolynomial, Vars,
};
use crate::error::{Error, Result};

/// Charge and weight tables for one model.
///
/// Charges: ch(y_l) = -d_l, ch(x_j) = 1, ch(eta_i) = -ch(q_i).
/// Weights: wt(y_l) = 1, wt(x_j) = 0, wt(eta_i) = 1 - wt(q_i).
#[derive(Debug, Clone)]
pub struct Grading {
    vars: Vars,
    degrees: Vec<u32>,
}

impl Grading {
    pub fn new(vars: Vars, degrees: Vec<u32>) -> Self {
        debug_assert_eq!(degrees.len(), vars.k);
        Grading { vars, degrees }
    }

    pub fn charge_of_var(&self, slot: usize) -> i64 {
        if slot < self.vars.k {
            -(self.degrees[slot] as i64)
        } else {
            1
        }
    }

    pub fn weight_of_var(&self, slot: usize) -> i64 {
        if slot < self.vars.k {
            1
        } else {
            0
        }
    }

    pub fn monomial_charge(&self, m: &SuperMonomial) -> i64 {
        let mut ch = 0i64;
        for slot in 0..self.vars.total() {
            ch += self.charge_of_var(slot) * m.exponent(slot) as i64;
        }
        for slot in m.eta_slots() {
            ch -= self.charge_of_var(slot);
        }
        ch
    }

    pub fn monomial_weight(&self, m: &SuperMonomial) -> i64 {
        let mut wt = 0i64;
        for slot in 0..self.vars.total() {
            wt += self.weight_of_var(slot) * m.exponent(slot) as i64;
        }
        for slot in m.eta_slots() {
            wt += 1 - self.weight_of_var(slot);
        }
        wt
    }

    /// Cohomological degree of a monomial, minus the odd factor count.
    pub fn monomial_degree(&self, m: &SuperMonomial) -> i64 {
        -(m.eta_count() as i64)
    }

    /// Charge of a homogeneous polynomial; `None` for zero or mixed charges.
    pub fn poly_charge(&self, p: &SuperPolynomial) -> Option<i64> {
        let mut it = p.terms().iter().map(|(m, _)| self.monomial_charge(m));
        let first = it.next()?;
        it.all(|c| c == first).then_some(first)
    }

    pub fn poly_weight(&self, p: &SuperPolynomial) -> Option<i64> {
        let mut it = p.terms().iter().map(|(m, _)| self.monomial_weight(m));
        let first = it.next()?;
        it.all(|w| w == first).then_some(first)
    }

    pub fn poly_degree(&self, p: &SuperPolynomial) -> Option<i64> {
        let mut it = p.terms().iter().map(|(m, _)| self.monomial_degree(m));
        let first = it.next()?;
        it.all(|d| d == first).then_some(first)
    }

    /// True when every term has the given charge (vacuously true for zero).
    pub fn has_charge(&self, p: &SuperPolynomial, charge: i64) -> bool {
        p.terms()
            .iter()
            .all(|(m, _)| self.monomial_charge(m) == charge)
    }

    /// Split into weight-homogeneous components, ascending.
    pub fn weight_components(&self, p: &SuperPolynomial) -> Vec<(i64, SuperPolynomial)> {
        let mut buckets: std::collections::BTreeMap<i64, Vec<(SuperMonomial, Scalar)>> =
            std::collections::BTreeMap::new();
        for (m, c) in p.terms() {
            buckets
                .entry(self.monomial_weight(m))
                .or_default()
                .push((m.clone(), c.clone()));
        }
        buckets
            .into_iter()
            .map(|(w, terms)| (w, SuperPolynomial::from_terms(p.vars(), terms)))
            .collect()
    }
}

/// Which differential a bracket or verification routine should use.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DifferentialTag {
    /// The BV Laplacian alone.
    Delta,
    /// The twisted Koszul differential of the potential.
    QS,
    /// Twisted Koszul plus Laplacian.
    KS,
}

/// A validated model: variable layout, generator forms, potential, gradings.
#[derive(Debug, Clone)]
pub struct ModelSetup {
    vars: Vars,
    degrees: Vec<u32>,
    generators: Vec<SuperPolynomial>,
    potential: SuperPolynomial,
    partials: Vec<SuperPolynomial>,
    grading: Grading,
    r_element: SuperPolynomial,
}

/// JSON input document for a model.
#[derive(Debug, Deserialize)]
struct ModelDocument {
    n: usize,
    k: usize,
    generators: Vec<String>,
}

impl ModelSetup {
    pub fn vars(&self) -> Vars {
        self.vars
    }

    pub fn n(&self) -> usize {
        self.vars.n
    }

    pub fn k(&self) -> usize {
        self.vars.k
    }

    pub fn degrees(&self) -> &[u32] {
        &self.degrees
    }

    pub fn generators(&self) -> &[SuperPolynomial] {
        &self.generators
    }

    /// The potential S = sum over l of y_l G_l.
    pub fn potential(&self) -> &SuperPolynomial {
        &self.potential
    }

    /// dS/dq_i for every even slot i.
    pub fn partials(&self) -> &[SuperPolynomial] {
        &self.partials
    }

    pub fn grading(&self) -> &Grading {
        &self.grading
    }

    /// Background charge, always zero for an accepted model.
    pub fn background_charge(&self) -> i64 {
        self.degrees.iter().map(|&d| d as i64).sum::<i64>() - (self.vars.n as i64 + 1)
    }

    /// The charge Euler element R = sum ch(q_i) q_i eta_i. It is closed for
    /// the twisted differential, and the bracket with it grades by charge.
    pub fn r_element(&self) -> &SuperPolynomial {
        &self.r_element
    }

    /// Twisted Koszul differential of the model potential.
    pub fn apply_q(&self, p: &SuperPolynomial) -> SuperPolynomial {
        q_apply(&self.partials, p)
    }

    /// Total differential: twisted Koszul plus BV Laplacian.
    pub fn apply_k(&self, p: &SuperPolynomial) -> SuperPolynomial {
        k_apply(&self.partials, p)
    }

    /// Bracket descendant of the selected differential.
    pub fn ell2(
        &self,
        tag: DifferentialTag,
        a: &SuperPolynomial,
        b: &SuperPolynomial,
    ) -> SuperPolynomial {
        match tag {
            DifferentialTag::Delta => ell2_with(apply_delta, a, b),
            DifferentialTag::QS => ell2_with(|p| self.apply_q(p), a, b),
            DifferentialTag::KS => ell2_with(|p| self.apply_k(p), a, b),
        }
    }

    pub fn parse(&self, text: &str) -> Result<SuperPolynomial> {
        parse_polynomial(self.vars, text)
    }
}

/// Validate the raw input and assemble a model.
///
/// Rejects k outside 1..=n, non-homogeneous or constant generators, any
/// generator mentioning a variable other than x_0..x_n, and inputs whose
/// total degree breaks the background-charge condition sum(d) = n+1.
pub fn build_model(n: usize, k: usize, generators: &[&str]) -> Result<ModelSetup> {
    if k < 1 || k > n {
        return Err(Error::BadArity(format!("k = {k} must satisfy 1 <= k <= n = {n}")));
    }
    let vars = Vars::new(n, k);
    if vars.total() > 64 {
        return Err(Error::BadArity(format!(
            "n + k + 1 = {} exceeds the supported 64 variables",
            vars.total()
        )));
    }
    if generators.len() != k {
        return Err(Error::BadArity(format!(
            "expected {k} generators, got {}",
            generators.len()
        )));
    }

    let mut parsed = Vec::with_capacity(k);
    let mut degrees = Vec::with_capacity(k);
    for (index, text) in generators.iter().enumerate() {
        let g = parse_polynomial(vars, text)?;
        let x_only = g.terms().iter().all(|(m, _)| {
            m.is_even() && (0..k).all(|slot| m.exponent(slot) == 0)
        });
        if !x_only {
            return Err(Error::Parse(format!(
                "generator {index} must use only x-variables"
            )));
        }
        let mut total_degrees = g.terms().iter().map(|(m, _)| m.q_degree());
        let d = match total_degrees.next() {
            None => {
                return Err(Error::NotHomogeneous {
                    index,
                    detail: "generator is zero".into(),
                })
            }
            Some(d) => d,
        };
        if !total_degrees.all(|e| e == d) {
            return Err(Error::NotHomogeneous {
                index,
                detail: "terms have different total degrees".into(),
            });
        }
        if d == 0 {
            return Err(Error::NotHomogeneous {
                index,
                detail: "generator is constant".into(),
            });
        }
        degrees.push(d as u32);
        parsed.push(g);
    }

    let c_x: i64 = degrees.iter().map(|&d| d as i64).sum::<i64>() - (n as i64 + 1);
    if c_x != 0 {
        return Err(Error::NonCalabiYau { c_x });
    }

    let mut potential = SuperPolynomial::zero(vars);
    for (slot, g) in parsed.iter().enumerate() {
        potential += &(&SuperPolynomial::var(vars, slot) * g);
    }
    let partials: Vec<SuperPolynomial> = (0..vars.total())
        .map(|slot| crate::algebra::partial_q(&potential, slot))
        .collect();

    let grading = Grading::new(vars, degrees.clone());
    let mut r_element = SuperPolynomial::zero(vars);
    for slot in 0..vars.total() {
        let q_eta = &SuperPolynomial::var(vars, slot) * &SuperPolynomial::eta(vars, slot);
        r_element += &q_eta.scale(&Scalar::from_integer(grading.charge_of_var(slot).into()));
    }

    let model = ModelSetup {
        vars,
        degrees,
        generators: parsed,
        potential,
        partials,
        grading,
        r_element,
    };
    debug_assert_eq!(model.grading.poly_charge(&model.potential), Some(0));
    debug_assert_eq!(model.grading.poly_weight(&model.potential), Some(1));
    Ok(model)
}

/// Build a model from its JSON document {"n":., "k":., "generators":[..]}.
pub fn model_from_json(text: &str) -> Result<ModelSetup> {
    let doc: ModelDocument =
        serde_json::from_str(text).map_err(|e| Error::Parse(format!("model document: {e}")))?;
    let gens: Vec<&str> = doc.generators.iter().map(String::as_str).collect();
    build_model(doc.n, doc.k, &gens)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fermat_cubic_assembles() {
        let m = build_model(2, 1, &["x0^3+x1^3+x2^3"]).unwrap();
        assert_eq!(m.background_charge(), 0);
        assert_eq!(m.degrees(), &[3]);
        let s = m.parse("y1*x0^3+y1*x1^3+y1*x2^3").unwrap();
        assert_eq!(*m.potential(), s);
        // round trip of the rendered potential
        let text = m.potential().to_string();
        assert_eq!(m.parse(&text).unwrap(), *m.potential());
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(matches!(
            build_model(3, 1, &["x0^3+x1^3+x2^3+x3^3"]),
            Err(Error::NonCalabiYau { c_x: -1 })
        ));
        assert!(matches!(
            build_model(2, 1, &["x0^3+x1^2+x2^3"]),
            Err(Error::NotHomogeneous { index: 0, .. })
        ));
        assert!(matches!(build_model(2, 0, &[]), Err(Error::BadArity(_))));
        assert!(matches!(
            build_model(2, 3, &["x0", "x1", "x2"]),
            Err(Error::BadArity(_))
        ));
        assert!(matches!(
            build_model(2, 1, &["y1*x0^2+x1^3"]),
            Err(Error::Parse(_))
        ));
        assert!(matches!(
            build_model(2, 1, &["x0^3+x1^3+i*x2^3"]),
            Err(Error::Parse(_))
        ));
    }

    #[test]
    fn two_quadrics_accepted() {
        let m = build_model(
            3,
            2,
            &["x0^2+x1^2+x2^2+x3^2", "x0^2+2*x1^2+3*x2^2+4*x3^2"],
        )
        .unwrap();
        assert_eq!(m.background_charge(), 0);
        assert_eq!(m.degrees(), &[2, 2]);
    }

    #[test]
    fn partial_gradings_match_tables() {
        let m = build_model(2, 1, &["x0^3+x1^3+x2^3"]).unwrap();
        let g = m.grading();
        for slot in 0..m.vars().total() {
            let p = &m.partials()[slot];
            if p.is_zero() {
                continue;
            }
            assert_eq!(g.poly_charge(p), Some(-g.charge_of_var(slot)));
            assert_eq!(g.poly_weight(p), Some(1 - g.weight_of_var(slot)));
        }
    }

    #[test]
    fn r_element_is_closed_and_euler_grades_by_charge() {
        let m = build_model(2, 1, &["x0^3+x1^3+x2^3"]).unwrap();
        assert!(m.apply_q(m.r_element()).is_zero());
        // background charge zero forces the total differential to kill R too
        assert!(m.apply_k(m.r_element()).is_zero());

        for text in ["y1*x0*x1*x2", "x0^2*e1", "x1*e2*e3", "y1^2*x2"] {
            let f = m.parse(text).unwrap();
            let charge = m.grading().poly_charge(&f).unwrap();
            let bracket = m.ell2(DifferentialTag::KS, m.r_element(), &f);
            assert_eq!(bracket, f.scale(&crate::algebra::scalar(charge)), "{text}");
        }
    }
}
