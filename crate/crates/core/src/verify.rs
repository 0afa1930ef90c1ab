//! Randomized verification suites for the structural identities of the
//! algebra: differential squares and anticommutation, the full bracket
//! axiom set for both total differentials, charge concentration through
//! the Euler re-expansion, and the weak lemma that the Laplacian of a
//! closed odd element is exact.
//!
//! Every suite draws its samples from its own seeded stream, so each is a
//! pure function of the model and the configuration, and reports are
//! byte-stable across runs. Samples are homogeneous in both the odd count
//! and the charge by construction.

use crate::algebra::{
    apply_delta, partial_q, q_apply, scalar, scalar_frac, SuperMonomial,
    SuperPolynomial,
};
use crate::error::Result;
use crate::groebner::{reduce_to_basis, BasisData, DivisionStrategy, GroebnerData};
use crate::model::ModelSetup;
use num::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

/// The selectable suites.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SuiteKind {
    Differentials,
    Dgbv,
    Charge,
    QsDeltaLemma,
}

impl SuiteKind {
    pub fn all() -> Vec<SuiteKind> {
        vec![
            SuiteKind::Differentials,
            SuiteKind::Dgbv,
            SuiteKind::Charge,
            SuiteKind::QsDeltaLemma,
        ]
    }

    pub fn name(self) -> &'static str {
        match self {
            SuiteKind::Differentials => "differentials",
            SuiteKind::Dgbv => "dgbv",
            SuiteKind::Charge => "charge",
            SuiteKind::QsDeltaLemma => "qs-delta-lemma",
        }
    }

    pub fn parse(text: &str) -> Option<Vec<SuiteKind>> {
        match text {
            "all" => Some(SuiteKind::all()),
            "differentials" => Some(vec![SuiteKind::Differentials]),
            "dgbv" => Some(vec![SuiteKind::Dgbv]),
            "charge" => Some(vec![SuiteKind::Charge]),
            "qs-delta-lemma" => Some(vec![SuiteKind::QsDeltaLemma]),
            _ => None,
        }
    }

    /// Stream index inside the seeded generator; fixed per suite so suite
    /// selection never shifts another suite's samples.
    fn stream(self) -> u64 {
        match self {
            SuiteKind::Differentials => 1,
            SuiteKind::Dgbv => 2,
            SuiteKind::Charge => 3,
            SuiteKind::QsDeltaLemma => 4,
        }
    }
}

/// Configuration for one run: the sample stream and the suite selection.
/// The corruption flag replaces the Laplacian with a copy that drops the
/// odd parity sign, a deliberate defect the differential suite must catch.
#[derive(Debug, Clone)]
pub struct SuiteConfig {
    pub seed: u64,
    pub samples: usize,
    pub max_eta: usize,
    pub degree_bound: usize,
    pub suites: Vec<SuiteKind>,
    pub corrupt_delta: bool,
    pub strategy: DivisionStrategy,
}

impl SuiteConfig {
    pub fn new(seed: u64, samples: usize) -> Self {
        SuiteConfig {
            seed,
            samples,
            max_eta: 2,
            degree_bound: 3,
            suites: SuiteKind::all(),
            corrupt_delta: false,
            strategy: DivisionStrategy::FirstMatch,
        }
    }
}

/// One named identity, with the first falsifying sample kept as text.
#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub samples: usize,
    pub counterexample: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteResult {
    pub suite: String,
    pub checks: Vec<CheckResult>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteReport {
    pub seed: u64,
    pub samples: usize,
    pub suites: Vec<SuiteResult>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.suites
            .iter()
            .all(|s| s.checks.iter().all(|c| c.passed))
    }
}

/// Accumulates one identity across the sample loop.
struct Check {
    name: &'static str,
    samples: usize,
    counterexample: Option<String>,
}

impl Check {
    fn new(name: &'static str) -> Self {
        Check {
            name,
            samples: 0,
            counterexample: None,
        }
    }

    fn record(&mut self, residual: &SuperPolynomial, witness: impl Fn() -> String) {
        self.samples += 1;
        if !residual.is_zero() && self.counterexample.is_none() {
            self.counterexample = Some(witness());
        }
    }

    fn finish(self) -> CheckResult {
        CheckResult {
            name: self.name.to_string(),
            passed: self.counterexample.is_none(),
            samples: self.samples,
            counterexample: self.counterexample,
        }
    }
}

/// The Laplacian with the odd parity sign dropped: no longer square-zero,
/// used as the planted defect behind the corruption flag.
fn corrupted_delta(p: &SuperPolynomial) -> SuperPolynomial {
    let mut out = SuperPolynomial::zero(p.vars());
    for slot in 0..p.vars().total() {
        let bit = 1u64 << slot;
        let contracted = SuperPolynomial::from_terms(
            p.vars(),
            p.terms()
                .iter()
                .filter(|(m, _)| m.eta_mask() & bit != 0)
                .map(|(m, c)| {
                    (
                        SuperMonomial::new(m.exponents().to_vec(), m.eta_mask() & !bit),
                        c.clone(),
                    )
                })
                .collect(),
        );
        out += &partial_q(&contracted, slot);
    }
    out
}

/// l2(a, b) = op(ab) - op(a) b - (-1)^{|a|} a op(b) for an eta-homogeneous
/// first argument.
fn bracket(
    op: &dyn Fn(&SuperPolynomial) -> SuperPolynomial,
    a: &SuperPolynomial,
    b: &SuperPolynomial,
) -> SuperPolynomial {
    let mut out = &op(&(a * b)) - &(&op(a) * b);
    let cross = a * &op(b);
    if eta_count(a) % 2 == 0 {
        out -= &cross;
    } else {
        out += &cross;
    }
    out
}

fn eta_count(p: &SuperPolynomial) -> u32 {
    p.terms().first().map(|(m, _)| m.eta_count()).unwrap_or(0)
}

fn signed(p: SuperPolynomial, negative: bool) -> SuperPolynomial {
    if negative {
        p.scale(&scalar(-1))
    } else {
        p
    }
}

/// Random sparse element, homogeneous in odd count and charge: a base
/// monomial with a fixed odd part, padded by products with charge-free
/// even factors.
fn sample_element(
    rng: &mut ChaCha8Rng,
    model: &ModelSetup,
    max_eta: usize,
    degree_bound: usize,
) -> SuperPolynomial {
    let vars = model.vars();
    let total = vars.total();
    let count = rng.gen_range(0..=max_eta.min(total));
    let mut slots = rand::seq::index::sample(rng, total, count).into_vec();
    slots.sort_unstable();

    let mut base = SuperPolynomial::one(vars);
    for _ in 0..rng.gen_range(0..=degree_bound) {
        base = &base * &SuperPolynomial::var(vars, rng.gen_range(0..total));
    }
    for &slot in &slots {
        base = &base * &SuperPolynomial::eta(vars, slot);
    }

    let mut out = SuperPolynomial::zero(vars);
    for padding in 0..rng.gen_range(1..=3u32) {
        let sign = if rng.gen_bool(0.5) { 1 } else { -1 };
        let mut term = base.scale(&scalar(sign * rng.gen_range(1..=3)));
        for _ in 0..padding {
            term = &term * &charge_free_factor(rng, model);
        }
        out = &out + &term;
    }
    out
}

/// One even monomial of charge zero: a y variable times enough random x
/// factors to cancel its charge.
fn charge_free_factor(rng: &mut ChaCha8Rng, model: &ModelSetup) -> SuperPolynomial {
    let vars = model.vars();
    let grading = model.grading();
    let y = rng.gen_range(0..model.k());
    let mut factor = SuperPolynomial::var(vars, y);
    for _ in 0..(-grading.charge_of_var(y)) {
        let x = rng.gen_range(model.k()..vars.total());
        factor = &factor * &SuperPolynomial::var(vars, x);
    }
    factor
}

/// Random even element with exactly two odd factors and total charge zero.
fn sample_closed_witness(rng: &mut ChaCha8Rng, model: &ModelSetup) -> SuperPolynomial {
    let vars = model.vars();
    let total = vars.total();
    let grading = model.grading();
    let mut slots = rand::seq::index::sample(rng, total, 2.min(total)).into_vec();
    slots.sort_unstable();

    let mut base = SuperPolynomial::constant(vars, scalar(rng.gen_range(1..=3)));
    let mut charge: i64 = slots.iter().map(|&s| -grading.charge_of_var(s)).sum();
    while charge != 0 {
        if charge < 0 {
            let x = rng.gen_range(model.k()..total);
            base = &base * &SuperPolynomial::var(vars, x);
            charge += 1;
        } else {
            let y = rng.gen_range(0..model.k());
            base = &base * &SuperPolynomial::var(vars, y);
            charge += grading.charge_of_var(y);
        }
    }
    for &slot in &slots {
        base = &base * &SuperPolynomial::eta(vars, slot);
    }
    base
}

/// Run the selected suites and collect the per-identity outcomes.
pub fn run_suite(
    model: &ModelSetup,
    gb: &GroebnerData,
    basis: &BasisData,
    cfg: &SuiteConfig,
) -> Result<SuiteReport> {
    let delta: Box<dyn Fn(&SuperPolynomial) -> SuperPolynomial> = if cfg.corrupt_delta {
        Box::new(corrupted_delta)
    } else {
        Box::new(apply_delta)
    };

    let mut suites = Vec::new();
    for kind in &cfg.suites {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(kind.stream());
        let result = match kind {
            SuiteKind::Differentials => differentials_suite(model, cfg, &mut rng, &delta),
            SuiteKind::Dgbv => dgbv_suite(model, cfg, &mut rng, &delta),
            SuiteKind::Charge => charge_suite(model, cfg, &mut rng, &delta),
            SuiteKind::QsDeltaLemma => qs_delta_suite(model, gb, basis, cfg, &mut rng, &delta)?,
        };
        suites.push(result);
    }
    Ok(SuiteReport {
        seed: cfg.seed,
        samples: cfg.samples,
        suites,
    })
}

fn differentials_suite(
    model: &ModelSetup,
    cfg: &SuiteConfig,
    rng: &mut ChaCha8Rng,
    delta: &dyn Fn(&SuperPolynomial) -> SuperPolynomial,
) -> SuiteResult {
    let partials = model.partials();
    let q = |p: &SuperPolynomial| q_apply(partials, p);
    let k = |p: &SuperPolynomial| &q(p) + &delta(p);

    let mut q_square = Check::new("Koszul differential squares to zero");
    let mut delta_square = Check::new("Laplacian squares to zero");
    let mut k_square = Check::new("total differential squares to zero");
    let mut anticommute = Check::new("Koszul differential and Laplacian anticommute");

    for _ in 0..cfg.samples {
        let f = sample_element(rng, model, cfg.max_eta, cfg.degree_bound);
        let witness = || f.to_string();
        q_square.record(&q(&q(&f)), witness);
        delta_square.record(&delta(&delta(&f)), witness);
        k_square.record(&k(&k(&f)), witness);
        anticommute.record(&(&q(&delta(&f)) + &delta(&q(&f))), witness);
    }

    SuiteResult {
        suite: SuiteKind::Differentials.name().to_string(),
        checks: vec![
            q_square.finish(),
            delta_square.finish(),
            k_square.finish(),
            anticommute.finish(),
        ],
    }
}

fn dgbv_suite(
    model: &ModelSetup,
    cfg: &SuiteConfig,
    rng: &mut ChaCha8Rng,
    delta: &dyn Fn(&SuperPolynomial) -> SuperPolynomial,
) -> SuiteResult {
    let partials = model.partials();
    let q = |p: &SuperPolynomial| q_apply(partials, p);
    let k = |p: &SuperPolynomial| &q(p) + &delta(p);

    let mut leibniz = Check::new("Koszul differential is a derivation");
    let mut symmetry_delta = Check::new("Laplacian bracket is graded symmetric");
    let mut symmetry_k = Check::new("total bracket is graded symmetric");
    let mut jacobi_delta = Check::new("Laplacian bracket satisfies graded Jacobi");
    let mut jacobi_k = Check::new("total bracket satisfies graded Jacobi");
    let mut poisson_delta = Check::new("Laplacian bracket is a graded derivation of the product");
    let mut poisson_k = Check::new("total bracket is a graded derivation of the product");
    let mut compat_delta = Check::new("Laplacian differentiates its bracket");
    let mut compat_k = Check::new("total differential differentiates its bracket");

    for _ in 0..cfg.samples {
        let a = sample_element(rng, model, cfg.max_eta, cfg.degree_bound);
        let b = sample_element(rng, model, cfg.max_eta, cfg.degree_bound);
        let c = sample_element(rng, model, cfg.max_eta, cfg.degree_bound);
        let pair = || format!("a = {a}; b = {b}");
        let triple = || format!("a = {a}; b = {b}; c = {c}");
        let ea = eta_count(&a) as usize;
        let eb = eta_count(&b) as usize;

        let residual = &(&q(&(&a * &b)) - &(&q(&a) * &b)) - &signed(&a * &q(&b), ea % 2 == 1);
        leibniz.record(&residual, pair);

        for (check_sym, check_jac, check_poi, check_com, op) in [
            (
                &mut symmetry_delta,
                &mut jacobi_delta,
                &mut poisson_delta,
                &mut compat_delta,
                &delta as &dyn Fn(&SuperPolynomial) -> SuperPolynomial,
            ),
            (
                &mut symmetry_k,
                &mut jacobi_k,
                &mut poisson_k,
                &mut compat_k,
                &k as &dyn Fn(&SuperPolynomial) -> SuperPolynomial,
            ),
        ] {
            let residual =
                &bracket(op, &a, &b) - &signed(bracket(op, &b, &a), (ea * eb) % 2 == 1);
            check_sym.record(&residual, pair);

            let lhs = bracket(op, &a, &bracket(op, &b, &c));
            let first = signed(
                bracket(op, &bracket(op, &a, &b), &c),
                (ea + 1) % 2 == 1,
            );
            let second = signed(
                bracket(op, &b, &bracket(op, &a, &c)),
                ((ea + 1) * (eb + 1)) % 2 == 1,
            );
            jacobi_delta_residual(&mut *check_jac, &lhs, &first, &second, triple);

            let residual = &(&bracket(op, &a, &(&b * &c)) - &(&bracket(op, &a, &b) * &c))
                - &signed(&b * &bracket(op, &a, &c), ((ea + 1) * eb) % 2 == 1);
            check_poi.record(&residual, triple);

            let residual = &(&op(&bracket(op, &a, &b)) + &bracket(op, &op(&a), &b))
                + &signed(bracket(op, &a, &op(&b)), ea % 2 == 1);
            check_com.record(&residual, pair);
        }
    }

    SuiteResult {
        suite: SuiteKind::Dgbv.name().to_string(),
        checks: vec![
            leibniz.finish(),
            symmetry_delta.finish(),
            jacobi_delta.finish(),
            poisson_delta.finish(),
            compat_delta.finish(),
            symmetry_k.finish(),
            jacobi_k.finish(),
            poisson_k.finish(),
            compat_k.finish(),
        ],
    }
}

fn jacobi_delta_residual(
    check: &mut Check,
    lhs: &SuperPolynomial,
    first: &SuperPolynomial,
    second: &SuperPolynomial,
    witness: impl Fn() -> String,
) {
    let residual = &(lhs - first) - second;
    check.record(&residual, witness);
}

fn charge_suite(
    model: &ModelSetup,
    cfg: &SuiteConfig,
    rng: &mut ChaCha8Rng,
    delta: &dyn Fn(&SuperPolynomial) -> SuperPolynomial,
) -> SuiteResult {
    let partials = model.partials();
    let k = |p: &SuperPolynomial| &q_apply(partials, p) + &delta(p);
    let grading = model.grading();
    let r = model.r_element();

    let mut concentration = Check::new("closed charged elements re-expand through the charge");

    for _ in 0..cfg.samples {
        let mut g = sample_element(rng, model, cfg.max_eta, cfg.degree_bound);
        for _ in 0..20 {
            if grading.poly_charge(&g) != Some(0) {
                break;
            }
            g = sample_element(rng, model, cfg.max_eta, cfg.degree_bound);
        }
        let f = k(&g);
        let Some(charge) = grading.poly_charge(&f) else {
            continue;
        };
        if charge == 0 || f.is_zero() {
            continue;
        }
        let rescaled = k(&(r * &f).scale(&scalar_frac(1, charge)));
        concentration.record(&(&rescaled - &f), || format!("g = {g}"));
    }

    SuiteResult {
        suite: SuiteKind::Charge.name().to_string(),
        checks: vec![concentration.finish()],
    }
}

fn qs_delta_suite(
    model: &ModelSetup,
    gb: &GroebnerData,
    basis: &BasisData,
    cfg: &SuiteConfig,
    rng: &mut ChaCha8Rng,
    delta: &dyn Fn(&SuperPolynomial) -> SuperPolynomial,
) -> Result<SuiteResult> {
    let partials = model.partials();
    let r = model.r_element();
    let mu = basis.mu();

    let mut euler_products = Check::new("Laplacian annihilates Euler multiples of the basis");
    for rho in 0..mu {
        let product = r * &basis.element(rho);
        euler_products.record(&delta(&product), || basis.element(rho).to_string());
    }

    let mut closed = Check::new("constructed odd elements are closed");
    let mut exactness = Check::new("Laplacian of closed odd elements reduces to zero");

    for _ in 0..cfg.samples {
        let witness_poly = sample_closed_witness(rng, model);
        let mut f = q_apply(partials, &witness_poly);
        for rho in 0..mu {
            let coeff = scalar(rng.gen_range(-2..=2));
            if !coeff.is_zero() {
                f = &f + &(r * &basis.element(rho)).scale(&coeff);
            }
        }
        let witness = || format!("w = {witness_poly}");
        closed.record(&q_apply(partials, &f), witness);
        let reduced = reduce_to_basis(model, gb, basis, &delta(&f), cfg.strategy)?;
        let mut residual = SuperPolynomial::zero(model.vars());
        for (rho, c) in reduced.coefficients.iter().enumerate() {
            if !c.is_zero() {
                residual = &residual + &basis.element(rho).scale(c);
            }
        }
        exactness.record(&residual, witness);
    }

    Ok(SuiteResult {
        suite: SuiteKind::QsDeltaLemma.name().to_string(),
        checks: vec![
            euler_products.finish(),
            closed.finish(),
            exactness.finish(),
        ],
    })
}
