//! Connection operators on series-valued elements over a deformed
//! potential, and reduction of classes against an hbar-deformed frame.
//!
//! A context fixes the model, its Groebner data, a deformation Gamma of the
//! potential, a t-truncation order and an hbar window. The connection in a
//! t-direction is nabla_alpha = d/dt^alpha + (1/hbar) Gamma_alpha, and in
//! the hbar direction nabla_{1/hbar} = d/d(1/hbar) + (S + Gamma).
//!
//! Window policy: the high hbar side is a truncation, tracked by the series
//! exactness bounds; the low side is a hard floor. An operation that would
//! produce exponents below the floor fails with WindowUnderflow instead of
//! dropping terms, because dropped low-order terms would silently corrupt
//! every higher coefficient of a later cascade.

use std::collections::BTreeMap;

use num::Zero;

use crate::algebra::{apply_delta, eta_contract, partial_q, Scalar, SuperPolynomial};
use crate::error::{Error, Result};
use crate::groebner::{reduce_to_basis, BasisData, DivisionStrategy, GroebnerData};
use crate::model::ModelSetup;
use crate::series::{tensor_to_series, FormalSeries, MultiIndex, SymTensor};

/// Inclusive hbar-exponent window [lo, hi].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HbarWindow {
    pub lo: i32,
    pub hi: i32,
}

impl HbarWindow {
    pub fn new(lo: i32, hi: i32) -> Self {
        HbarWindow { lo, hi }
    }
}

/// Everything needed to differentiate and reduce classes over the deformed
/// potential S + Gamma. Gamma is retained through t-degree `t_order`; the
/// stored order is the effective one, the smaller of the requested order
/// and Gamma's own exactness bound.
pub struct ConnectionContext<'a> {
    model: &'a ModelSetup,
    gb: &'a GroebnerData,
    basis: &'a BasisData,
    gamma: FormalSeries,
    /// dGamma/dt^alpha for each basis index.
    gamma_t_partials: Vec<FormalSeries>,
    /// d(S+Gamma)/dq_i for each variable slot, hbar-free.
    potential_q_partials: Vec<FormalSeries>,
    /// S + Gamma itself as a series.
    deformed_potential: FormalSeries,
    t_order: i32,
    window: HbarWindow,
    strategy: DivisionStrategy,
}

impl<'a> ConnectionContext<'a> {
    /// Build a context from a Gamma series, keeping its terms through
    /// t-degree t_order.
    ///
    /// Gamma must be even, charge zero, hbar-free, and vanish at t = 0.
    /// The effective order is the smaller of t_order and Gamma's own
    /// exactness bound: a Gamma expanded from a tensor stays honestly
    /// bounded, while an exactly-known polynomial Gamma stays exact. When
    /// the effective order reaches 1 the linear part must consist of
    /// exactly the basis elements; with t_order = 0 the cut hides the
    /// linear part, which is how the undeformed operators (Gamma = 0) are
    /// expressed.
    pub fn new(
        model: &'a ModelSetup,
        gb: &'a GroebnerData,
        basis: &'a BasisData,
        gamma: FormalSeries,
        t_order: i32,
        window: HbarWindow,
        strategy: DivisionStrategy,
    ) -> Result<Self> {
        if window.lo > 0 || window.hi < 0 {
            return Err(Error::Normalization(format!(
                "hbar window [{}, {}] must contain 0",
                window.lo, window.hi
            )));
        }
        if t_order < 0 {
            return Err(Error::Normalization(format!(
                "t-truncation order {t_order} is negative"
            )));
        }
        let gamma = gamma.drop_t_above(t_order);
        let t_order = combine_bound(Some(t_order), gamma.t_exact()).unwrap();
        if gamma.terms().keys().any(|(r, _)| *r != 0) {
            return Err(Error::Normalization("Gamma must be hbar-free".into()));
        }
        if gamma.terms().keys().any(|(_, tau)| tau.is_empty()) {
            return Err(Error::Normalization("Gamma must vanish at t = 0".into()));
        }
        for p in gamma.terms().values() {
            if !p.is_even() || !model.grading().has_charge(p, 0) {
                return Err(Error::Normalization(
                    "Gamma coefficients must be even of charge zero".into(),
                ));
            }
        }
        let vars = model.vars();
        let mu = basis.mu();
        let gamma_t_partials: Vec<FormalSeries> = (0..mu).map(|a| gamma.d_t(a)).collect();
        if t_order >= 1 {
            for (alpha, partial) in gamma_t_partials.iter().enumerate() {
                let at_origin = partial.coefficient(0, &MultiIndex::empty());
                if at_origin != basis.element(alpha) {
                    return Err(Error::Normalization(format!(
                        "dGamma/dt^{alpha} at t = 0 must be basis element {alpha}"
                    )));
                }
            }
        }
        let deformed_potential =
            FormalSeries::from_polynomial(model.potential().clone()).add(&gamma);
        let potential_q_partials = (0..vars.total())
            .map(|slot| deformed_potential.map_coefficients(|p| partial_q(p, slot)))
            .collect();
        Ok(ConnectionContext {
            model,
            gb,
            basis,
            gamma,
            gamma_t_partials,
            potential_q_partials,
            deformed_potential,
            t_order,
            window,
            strategy,
        })
    }

    /// Build a context from a Gamma tensor: rank m holds the coefficient of
    /// the divided power t^tau / mult! for |tau| = m, so rank 1 must hold
    /// exactly the basis elements.
    pub fn from_gamma_tensor(
        model: &'a ModelSetup,
        gb: &'a GroebnerData,
        basis: &'a BasisData,
        gamma: &SymTensor<SuperPolynomial>,
        t_order: i32,
        window: HbarWindow,
        strategy: DivisionStrategy,
    ) -> Result<Self> {
        for alpha in 0..basis.mu() {
            let entry = gamma.get(&MultiIndex::single(alpha));
            if entry != Some(&basis.element(alpha)) {
                return Err(Error::Normalization(format!(
                    "Gamma tensor rank-1 entry {alpha} must be basis element {alpha}"
                )));
            }
        }
        let populated = gamma.max_rank().unwrap_or(0) as i32;
        let series = tensor_to_series(gamma, model.vars(), populated)?;
        ConnectionContext::new(model, gb, basis, series, t_order, window, strategy)
    }

    /// Build the context for the linear deformation whose coefficient of
    /// each parameter is the corresponding basis element, exactly, at
    /// every order.
    pub fn linear(
        model: &'a ModelSetup,
        gb: &'a GroebnerData,
        basis: &'a BasisData,
        t_order: i32,
        window: HbarWindow,
        strategy: DivisionStrategy,
    ) -> Result<Self> {
        let vars = model.vars();
        let terms = (0..basis.mu())
            .map(|rho| ((0, MultiIndex::single(rho)), basis.element(rho)))
            .collect();
        let gamma = FormalSeries::from_terms(vars, terms, None, Some(0));
        ConnectionContext::new(model, gb, basis, gamma, t_order, window, strategy)
    }

    pub fn model(&self) -> &ModelSetup {
        self.model
    }

    pub fn groebner(&self) -> &GroebnerData {
        self.gb
    }

    pub fn basis(&self) -> &BasisData {
        self.basis
    }

    pub fn gamma(&self) -> &FormalSeries {
        &self.gamma
    }

    /// dGamma/dt^alpha.
    pub fn gamma_partial(&self, alpha: usize) -> &FormalSeries {
        &self.gamma_t_partials[alpha]
    }

    pub fn t_order(&self) -> i32 {
        self.t_order
    }

    pub fn window(&self) -> HbarWindow {
        self.window
    }

    pub fn strategy(&self) -> DivisionStrategy {
        self.strategy
    }

    /// S + Gamma as a series.
    pub fn deformed_potential(&self) -> &FormalSeries {
        &self.deformed_potential
    }

    fn check_floor(&self, s: &FormalSeries) -> Result<()> {
        if let Some(m) = s.min_h() {
            if m < self.window.lo {
                return Err(Error::WindowUnderflow {
                    exponent: m,
                    floor: self.window.lo,
                });
            }
        }
        Ok(())
    }

    /// The Koszul differential twisted by S + Gamma, coefficient-wise in t.
    pub fn apply_q_deformed(&self, w: &FormalSeries) -> FormalSeries {
        let mut out = FormalSeries::zero(w.vars());
        for (slot, partial) in self.potential_q_partials.iter().enumerate() {
            let contracted = w.map_coefficients(|p| eta_contract(p, slot));
            out = out.add(&partial.mul(&contracted));
        }
        out
    }

    /// Q_{S+Gamma} + hbar Delta, the total differential on series.
    pub fn twisted_differential(&self, w: &FormalSeries) -> FormalSeries {
        self.apply_q_deformed(w)
            .add(&w.map_coefficients(apply_delta).shift_h(1))
    }

    /// nabla_alpha w = d/dt^alpha w + (1/hbar) Gamma_alpha w.
    pub fn nabla_t(&self, alpha: usize, w: &FormalSeries) -> Result<FormalSeries> {
        let lowered = self.gamma_t_partials[alpha].mul(w).shift_h(-1);
        self.check_floor(&lowered)?;
        Ok(w.d_t(alpha).add(&lowered))
    }

    /// hbar nabla_alpha as a single operation; never lowers exponents, so
    /// iterated applications stay window-safe.
    pub fn hbar_nabla_t(&self, alpha: usize, w: &FormalSeries) -> FormalSeries {
        w.d_t(alpha)
            .shift_h(1)
            .add(&self.gamma_t_partials[alpha].mul(w))
    }

    /// nabla_{1/hbar} w = d/d(1/hbar) w + (S + Gamma) w.
    pub fn nabla_hbar_inv(&self, w: &FormalSeries) -> Result<FormalSeries> {
        let out = w.d_hbar_inv().add(&self.deformed_potential.mul(w));
        self.check_floor(&out)?;
        Ok(out)
    }

    /// Reduce w against a frame of mu series normalized by
    /// frame_rho(t=0, hbar=0) = u_rho: returns scalar coefficient series
    /// c_rho and a witness Lambda with
    /// w = sum c_rho frame_rho + (Q_{S+Gamma} + hbar Delta)(Lambda)
    /// through the combined exactness bounds.
    ///
    /// The cascade runs hbar-level-major, then t-degree ascending. At each
    /// key the unknowns enter only through the frame's normalization terms
    /// and through the undeformed Koszul differential; everything else
    /// refers to strictly earlier keys, so a single basis reduction solves
    /// the key. The coefficients are genuinely infinite series in hbar;
    /// the window's high edge is where this reduction stops.
    pub fn reduce_class(&self, w: &FormalSeries, frame: &[FormalSeries]) -> Result<ReducedClass> {
        let vars = w.vars();
        let mu = self.basis.mu();
        if frame.len() != mu {
            return Err(Error::Normalization(format!(
                "frame has {} entries, basis dimension is {mu}",
                frame.len()
            )));
        }
        self.check_floor(w)?;
        let mut frame_h_exact: Option<i32> = None;
        let mut frame_t_exact: Option<i32> = None;
        for (rho, f) in frame.iter().enumerate() {
            if f.min_h().map_or(false, |m| m < 0) {
                return Err(Error::Normalization(format!(
                    "frame element {rho} has negative hbar exponents"
                )));
            }
            if f.coefficient(0, &MultiIndex::empty()) != self.basis.element(rho) {
                return Err(Error::Normalization(format!(
                    "frame element {rho} does not restrict to u_{rho} at t = 0, hbar = 0"
                )));
            }
            frame_h_exact = combine_bound(frame_h_exact, f.h_exact());
            frame_t_exact = combine_bound(frame_t_exact, f.t_exact());
        }

        let Some(r_min) = w.min_h() else {
            // input with no stored terms: zero output, exact as far as the
            // input's own claim reaches
            let t = combine_bound(w.t_exact(), Some(self.t_order)).unwrap();
            let h = combine_bound(w.h_exact(), Some(self.window.hi)).unwrap();
            let zero = FormalSeries::zero(vars).truncate_t(t).truncate_h(h);
            return Ok(ReducedClass {
                coefficients: vec![zero.clone(); mu],
                witness: zero,
            });
        };

        // the equation at hbar-level r touches frame data only through
        // level r - r_min, and every t-degree-d equation touches frame and
        // Gamma data only through degree d
        let mut r_hi = self.window.hi;
        if let Some(h) = w.h_exact() {
            r_hi = r_hi.min(h);
        }
        if let Some(h) = frame_h_exact {
            r_hi = r_hi.min(r_min + h);
        }
        let mut t_hi = self.t_order;
        if let Some(t) = w.t_exact() {
            t_hi = t_hi.min(t);
        }
        if let Some(t) = frame_t_exact {
            t_hi = t_hi.min(t);
        }

        let mut coeffs: Vec<BTreeMap<(i32, MultiIndex), Scalar>> = vec![BTreeMap::new(); mu];
        let mut lambdas: BTreeMap<(i32, MultiIndex), SuperPolynomial> = BTreeMap::new();

        for r in r_min..=r_hi {
            for degree in 0..=t_hi {
                for tau in MultiIndex::all_of_degree(mu, degree as usize) {
                    let mut rhs = w.coefficient(r, &tau);

                    for (rho, frame_rho) in frame.iter().enumerate() {
                        for ((r2, tau2), f) in frame_rho.terms() {
                            if *r2 == 0 && tau2.is_empty() {
                                continue;
                            }
                            let Some(tau1) = tau.subtract(tau2) else {
                                continue;
                            };
                            if let Some(c) = coeffs[rho].get(&(r - r2, tau1)) {
                                rhs -= &f.scale(c);
                            }
                        }
                    }

                    for (slot, partial) in self.potential_q_partials.iter().enumerate() {
                        for ((_, sigma), g) in partial.terms() {
                            if sigma.is_empty() {
                                continue;
                            }
                            let Some(tau1) = tau.subtract(sigma) else {
                                continue;
                            };
                            if let Some(previous) = lambdas.get(&(r, tau1)) {
                                let contracted = eta_contract(previous, slot);
                                if !contracted.is_zero() {
                                    rhs -= &(g * &contracted);
                                }
                            }
                        }
                    }

                    if let Some(previous) = lambdas.get(&(r - 1, tau.clone())) {
                        rhs -= &apply_delta(previous);
                    }

                    if rhs.is_zero() {
                        continue;
                    }
                    let out =
                        reduce_to_basis(self.model, self.gb, self.basis, &rhs, self.strategy)?;
                    for (rho, c) in out.coefficients.into_iter().enumerate() {
                        if !c.is_zero() {
                            coeffs[rho].insert((r, tau.clone()), c);
                        }
                    }
                    if !out.lambda.is_zero() {
                        lambdas.insert((r, tau.clone()), out.lambda);
                    }
                }
            }
        }

        let coefficients = coeffs
            .into_iter()
            .map(|m| {
                FormalSeries::from_terms(
                    vars,
                    m.into_iter()
                        .map(|(k, c)| (k, SuperPolynomial::constant(vars, c)))
                        .collect(),
                    Some(t_hi),
                    Some(r_hi),
                )
            })
            .collect();
        let witness =
            FormalSeries::from_terms(vars, lambdas.into_iter().collect(), Some(t_hi), Some(r_hi));
        Ok(ReducedClass {
            coefficients,
            witness,
        })
    }
}

fn combine_bound(a: Option<i32>, b: Option<i32>) -> Option<i32> {
    match (a, b) {
        (Some(x), Some(y)) => Some(x.min(y)),
        (Some(x), None) | (None, Some(x)) => Some(x),
        (None, None) => None,
    }
}

/// Output of reduce_class: w = sum coefficients[rho] * frame_rho +
/// (Q_{S+Gamma} + hbar Delta)(witness).
#[derive(Debug, Clone)]
pub struct ReducedClass {
    pub coefficients: Vec<FormalSeries>,
    pub witness: FormalSeries,
}
