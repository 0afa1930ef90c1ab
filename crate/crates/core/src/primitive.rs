//! Weak primitive forms over the linear deformation of the potential.
//!
//! The deformation direction is fixed to the linear solution whose
//! coefficients are the basis elements themselves.  The solver extends a
//! chosen pair of seed tensors to a two-level (or, in the truncated
//! variant, an (n+1)-level) series in hbar whose iterated covariant
//! derivatives close on the frame of first derivatives: every second
//! derivative is a tensor combination of first derivatives plus an exact
//! term for the twisted differential.  Each multiset of directions costs a
//! short cascade of Jacobian reductions, one per hbar level, after which
//! the structure constants are read off through the chain sums of
//! previously computed ones and the next series coefficient is assigned in
//! closed form.
//!
//! `verify_gcm` replays the closure relation on the assembled series and
//! certifies, coefficient by coefficient, that the residual is exact, with
//! nothing left on the basis.

use crate::algebra::{apply_delta, scalar, Scalar, SuperPolynomial, Vars};
use crate::error::{Error, Result};
use crate::gaussmanin::{ConnectionContext, HbarWindow};
use crate::groebner::{reduce_to_basis, BasisData, DivisionStrategy, GroebnerData};
use crate::model::ModelSetup;
use crate::series::{factorial, tensor_slice_series, FormalSeries, MultiIndex, SymTensor};
use num::Zero;

/// Seed coefficients for the two hbar levels of the series at the linear
/// directions.  Every entry must be even, eta-free, of charge zero, and
/// weight-homogeneous: the level-0 seed in direction rho carries the weight
/// of u_rho and the level-1 seed one less, so that the assembled series has
/// total weight zero once each deformation parameter is counted with the
/// weight opposite to its basis element and hbar with weight one.
#[derive(Debug, Clone)]
pub struct Seeds {
    zeta0: Vec<SuperPolynomial>,
    zeta1: Vec<SuperPolynomial>,
}

impl Seeds {
    pub fn zero(model: &ModelSetup, basis: &BasisData) -> Self {
        let z = vec![SuperPolynomial::zero(model.vars()); basis.mu()];
        Seeds {
            zeta0: z.clone(),
            zeta1: z,
        }
    }

    pub fn new(
        model: &ModelSetup,
        basis: &BasisData,
        zeta0: Vec<SuperPolynomial>,
        zeta1: Vec<SuperPolynomial>,
    ) -> Result<Self> {
        let mu = basis.mu();
        if zeta0.len() != mu || zeta1.len() != mu {
            return Err(Error::BadArity(format!(
                "seed tensors must have one entry per basis element ({mu})"
            )));
        }
        for (level, seeds) in [(0i64, &zeta0), (1, &zeta1)] {
            for (rho, p) in seeds.iter().enumerate() {
                if p.is_zero() {
                    continue;
                }
                if p.terms().iter().any(|(m, _)| m.eta_count() > 0) {
                    return Err(Error::SeedWeight(format!(
                        "level-{level} seed {rho} has odd generator factors"
                    )));
                }
                if !model.grading().has_charge(p, 0) {
                    return Err(Error::SeedWeight(format!(
                        "level-{level} seed {rho} is not of charge zero"
                    )));
                }
                let need = basis.weight(rho) - level;
                match model.grading().poly_weight(p) {
                    Some(w) if w == need => {}
                    Some(w) => {
                        return Err(Error::SeedWeight(format!(
                            "level-{level} seed {rho} has weight {w}, needs {need}"
                        )));
                    }
                    None => {
                        return Err(Error::SeedWeight(format!(
                            "level-{level} seed {rho} is not weight-homogeneous"
                        )));
                    }
                }
            }
        }
        Ok(Seeds { zeta0, zeta1 })
    }

    pub fn zeta0(&self) -> &[SuperPolynomial] {
        &self.zeta0
    }

    pub fn zeta1(&self) -> &[SuperPolynomial] {
        &self.zeta1
    }

    pub fn is_zero(&self) -> bool {
        self.zeta0.iter().chain(&self.zeta1).all(|p| p.is_zero())
    }
}

/// Solution tensors for the closure problem through a fixed order.
///
/// `zeta[j]` holds the hbar-level-j series coefficients for every multiset
/// of size 0 through order+1; the empty key carries the normalization (1 at
/// level 0, 0 above) and the size-1 keys carry the seeds.  `a0` and `a1`
/// hold the structure constants for sizes 2 through order+1.
#[derive(Debug, Clone)]
pub struct PrimitiveOutput {
    pub zeta: Vec<SymTensor<SuperPolynomial>>,
    pub a0: SymTensor<Vec<Scalar>>,
    pub a1: SymTensor<Vec<Scalar>>,
    pub seeds: Seeds,
    pub order: usize,
}

impl PrimitiveOutput {
    pub fn vars(&self) -> Vars {
        self.zeta[0]
            .get(&MultiIndex::empty())
            .expect("the constant term is always populated")
            .vars()
    }

    pub fn mu(&self) -> usize {
        self.zeta[0].rank_entries(1).count()
    }

    /// Number of hbar levels above zero carried by the series.
    pub fn n_zeta(&self) -> usize {
        self.zeta.len() - 1
    }

    pub fn zeta0(&self) -> &SymTensor<SuperPolynomial> {
        &self.zeta[0]
    }

    pub fn zeta1(&self) -> Option<&SymTensor<SuperPolynomial>> {
        self.zeta.get(1)
    }

    pub fn a1_is_zero(&self) -> bool {
        self.a1.entries().all(|(_, c)| c.iter().all(Zero::is_zero))
    }

    /// The full series, exact through t-degree order+1.
    pub fn zeta_series(&self) -> FormalSeries {
        let vars = self.vars();
        let mu = self.mu();
        let degree = self.order as i32 + 1;
        let mut total = FormalSeries::zero(vars);
        for (level, tensor) in self.zeta.iter().enumerate() {
            let slice =
                tensor_slice_series(vars, mu, degree, |tau| tensor.get(tau).cloned());
            total = total.add(&slice.shift_h(level as i32));
        }
        total
    }

    /// Structure-constant series for the pair (alpha, beta) in direction
    /// rho, exact through t-degree order − 1.
    pub fn a_series(&self, alpha: usize, beta: usize, rho: usize) -> FormalSeries {
        let vars = self.vars();
        let mu = self.mu();
        let degree = self.order as i32 - 1;
        let pair = MultiIndex::pair(alpha, beta);
        let slice = |tensor: &SymTensor<Vec<Scalar>>| {
            tensor_slice_series(vars, mu, degree, |tau| {
                tensor
                    .get(&pair.merge(tau))
                    .map(|c| SuperPolynomial::constant(vars, c[rho].clone()))
            })
        };
        slice(&self.a0).add(&slice(&self.a1).shift_h(1))
    }
}

/// The hbar-level-(ell+j) part of the iterated derivative at the origin
/// built from level-j series coefficients: the sum over position splits of
/// the multiset into a block of size ell for the coefficient and a
/// complementary block whose basis elements are multiplied.
pub fn v_term(
    basis: &BasisData,
    zeta: &[SymTensor<SuperPolynomial>],
    key: &MultiIndex,
    ell: usize,
    j: usize,
) -> Result<SuperPolynomial> {
    if ell > key.len() {
        return Err(Error::IndexRange(format!(
            "split size {ell} exceeds the multiset size {}",
            key.len()
        )));
    }
    let Some(tensor) = zeta.get(j) else {
        return Err(Error::IndexRange(format!(
            "series carries no hbar level {j}"
        )));
    };
    let vars = basis.element(0).vars();
    let mut sum = SuperPolynomial::zero(vars);
    for (left, right) in key.splits() {
        if left.len() != ell {
            continue;
        }
        let Some(coefficient) = tensor.get(&left) else {
            return Err(Error::IndexRange(format!(
                "series coefficient at [{left}] is not populated"
            )));
        };
        if coefficient.is_zero() {
            continue;
        }
        let mut term = coefficient.scale(&split_multiplicity(key, &left));
        for &slot in right.indices() {
            term = &term * &basis.element(slot);
        }
        sum = &sum + &term;
    }
    Ok(sum)
}

/// Number of position subsets of `key` realizing the sub-multiset `part`.
fn split_multiplicity(key: &MultiIndex, part: &MultiIndex) -> Scalar {
    let mut count = 1i64;
    let mut values: Vec<usize> = part.indices().to_vec();
    values.dedup();
    for value in values {
        count *= binomial(key.multiplicity(value), part.multiplicity(value));
    }
    scalar(count)
}

fn binomial(n: usize, k: usize) -> i64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut num = 1i64;
    let mut den = 1i64;
    for i in 0..k {
        num *= (n - i) as i64;
        den *= (i + 1) as i64;
    }
    num / den
}

/// Chain sums of structure constants: the hbar-level bookkeeping term that
/// iterated derivatives of the frame relation generate at the origin.  The
/// first two positions of the multiset anchor the chain; the remaining
/// positions are distributed over an ordered tuple of s+1 blocks, the first
/// possibly empty and the rest not, where s is the multiset size minus j
/// minus 2 (zero by convention when that is negative).  Each block link is
/// a level-0 or level-1 constant; the levels along a chain sum to ell − j,
/// and the whole sum is divided by s!.
pub fn b_term(
    a0: &SymTensor<Vec<Scalar>>,
    a1: &SymTensor<Vec<Scalar>>,
    key: &MultiIndex,
    rho: usize,
    ell: usize,
    j: usize,
) -> Result<Scalar> {
    let m = key.len();
    if m < 2 {
        return Err(Error::IndexRange(format!(
            "chain sums need at least a pair, got {m} indices"
        )));
    }
    if m < j + 2 || ell < j {
        return Ok(Scalar::zero());
    }
    let s = m - j - 2;
    let raises = ell - j;
    if raises > s + 1 {
        return Ok(Scalar::zero());
    }
    let slots = key.indices();
    let tail = &slots[2..];
    let base = MultiIndex::pair(slots[0], slots[1]);
    let fetch = |level: usize, index: &MultiIndex| -> Result<&Vec<Scalar>> {
        let tensor = if level == 0 { a0 } else { a1 };
        tensor.get(index).ok_or_else(|| {
            Error::IndexRange(format!("structure constants at [{index}] are not populated"))
        })
    };
    let mut total = Scalar::zero();
    for assignment in block_assignments(tail.len(), s + 1) {
        let mut blocks: Vec<Vec<usize>> = vec![Vec::new(); s + 1];
        for (position, &block) in assignment.iter().enumerate() {
            blocks[block].push(tail[position]);
        }
        if blocks[1..].iter().any(Vec::is_empty) {
            continue;
        }
        for raised in level_subsets(s + 1, raises) {
            let first = fetch(raised[0], &base.merge(&MultiIndex::new(blocks[0].clone())))?;
            let mut vector = first.clone();
            for step in 1..=s {
                let block = MultiIndex::new(blocks[step].clone());
                let mut next = vec![Scalar::zero(); vector.len()];
                for (delta, weight) in vector.iter().enumerate() {
                    if weight.is_zero() {
                        continue;
                    }
                    let link = fetch(raised[step], &block.with(delta))?;
                    for (target, value) in link.iter().enumerate() {
                        next[target] = &next[target] + &(weight * value);
                    }
                }
                vector = next;
            }
            if rho >= vector.len() {
                return Err(Error::IndexRange(format!(
                    "direction {rho} exceeds the basis dimension {}",
                    vector.len()
                )));
            }
            total = &total + &vector[rho];
        }
    }
    Ok(&total * &factorial(s).recip())
}

/// All assignments of `positions` items to `blocks` numbered blocks.
fn block_assignments(positions: usize, blocks: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for _ in 0..positions {
        let mut next = Vec::with_capacity(out.len() * blocks);
        for prefix in out {
            for b in 0..blocks {
                let mut v = prefix.clone();
                v.push(b);
                next.push(v);
            }
        }
        out = next;
    }
    out
}

/// All 0/1 level vectors of the given length with `raises` ones.
fn level_subsets(length: usize, raises: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    for mask in 0u32..(1 << length) {
        if mask.count_ones() as usize != raises {
            continue;
        }
        out.push((0..length).map(|i| ((mask >> i) & 1) as usize).collect());
    }
    out
}

struct Cascade {
    b: Vec<Vec<Scalar>>,
    c: Vec<SuperPolynomial>,
}

/// The reduction lines for one multiset in the two-level system, written
/// exactly as displayed: line p feeds on the split sums at levels (p, 0)
/// and (p−1, 1), subtracts the seed feedback of the two previous lines and
/// the divergence of the previous witness, and reduces.
fn cascade_weak(
    model: &ModelSetup,
    gb: &GroebnerData,
    basis: &BasisData,
    zeta: &[SymTensor<SuperPolynomial>],
    key: &MultiIndex,
    strategy: DivisionStrategy,
) -> Result<Cascade> {
    let ell = key.len() - 1;
    let mut b: Vec<Vec<Scalar>> = Vec::with_capacity(ell + 1);
    let mut c: Vec<SuperPolynomial> = Vec::with_capacity(ell + 1);
    for p in 0..=ell {
        let mut input = v_term(basis, zeta, key, p, 0)?;
        if p >= 1 {
            input = &input + &v_term(basis, zeta, key, p - 1, 1)?;
            input = &input - &seed_feedback(zeta, 0, &b[p - 1]);
            input = &input - &apply_delta(&c[p - 1]);
        }
        if p >= 2 {
            input = &input - &seed_feedback(zeta, 1, &b[p - 2]);
        }
        let out = reduce_to_basis(model, gb, basis, &input, strategy)?;
        b.push(out.coefficients);
        c.push(out.lambda);
    }
    Ok(Cascade { b, c })
}

/// The reduction lines for one multiset with the series truncated at hbar
/// level n: line p collects every split sum of total level p and the seed
/// feedback of all n+1 earlier lines.
fn cascade_truncated(
    model: &ModelSetup,
    gb: &GroebnerData,
    basis: &BasisData,
    zeta: &[SymTensor<SuperPolynomial>],
    key: &MultiIndex,
    strategy: DivisionStrategy,
) -> Result<Cascade> {
    let ell = key.len() - 1;
    let n = zeta.len() - 1;
    let mut b: Vec<Vec<Scalar>> = Vec::with_capacity(ell + 1);
    let mut c: Vec<SuperPolynomial> = Vec::with_capacity(ell + 1);
    for p in 0..=ell {
        let mut input = SuperPolynomial::zero(model.vars());
        for j in 0..=n.min(p) {
            input = &input + &v_term(basis, zeta, key, p - j, j)?;
        }
        if p >= 1 {
            for j in 0..=n.min(p - 1) {
                input = &input - &seed_feedback(zeta, j, &b[p - 1 - j]);
            }
            input = &input - &apply_delta(&c[p - 1]);
        }
        let out = reduce_to_basis(model, gb, basis, &input, strategy)?;
        b.push(out.coefficients);
        c.push(out.lambda);
    }
    Ok(Cascade { b, c })
}

/// Sum over rho of coefficients[rho] times the level-j seed in direction rho.
fn seed_feedback(
    zeta: &[SymTensor<SuperPolynomial>],
    j: usize,
    coefficients: &[Scalar],
) -> SuperPolynomial {
    let tensor = &zeta[j];
    let vars = tensor
        .get(&MultiIndex::empty())
        .expect("constant entries are always populated")
        .vars();
    let mut sum = SuperPolynomial::zero(vars);
    for (rho, c) in coefficients.iter().enumerate() {
        if c.is_zero() {
            continue;
        }
        let seed = tensor
            .get(&MultiIndex::single(rho))
            .expect("seed entries are always populated");
        if !seed.is_zero() {
            sum = &sum + &seed.scale(c);
        }
    }
    sum
}

/// Structure constants from the last two reduction lines, with the chain
/// sums of lower multisets peeled off.  The chain terms at the top split
/// level are the unknowns themselves, so the sums stop one short.
fn extract_a(
    a0: &SymTensor<Vec<Scalar>>,
    a1: &SymTensor<Vec<Scalar>>,
    key: &MultiIndex,
    cascade: &Cascade,
) -> Result<(Vec<Scalar>, Vec<Scalar>)> {
    let ell = key.len() - 1;
    let mut low = cascade.b[ell - 1].clone();
    let mut high = cascade.b[ell].clone();
    for rho in 0..low.len() {
        for j in 0..ell.saturating_sub(1) {
            low[rho] = &low[rho] - &b_term(a0, a1, key, rho, ell - 1, j)?;
            high[rho] = &high[rho] - &b_term(a0, a1, key, rho, ell, j)?;
        }
    }
    Ok((low, high))
}

/// Closed-form assignment of the next series coefficients in the two-level
/// system, exactly as displayed.
fn assign_zeta_weak(
    zeta: &[SymTensor<SuperPolynomial>],
    key: &MultiIndex,
    basis: &BasisData,
    cascade: &Cascade,
) -> Result<Vec<SuperPolynomial>> {
    let ell = key.len() - 1;
    let mut level0 = seed_feedback(zeta, 0, &cascade.b[ell]);
    if ell >= 1 {
        level0 = &level0 + &seed_feedback(zeta, 1, &cascade.b[ell - 1]);
    }
    level0 = &level0 + &apply_delta(&cascade.c[ell]);
    level0 = &level0 - &v_term(basis, zeta, key, ell, 1)?;
    let level1 = seed_feedback(zeta, 1, &cascade.b[ell]);
    Ok(vec![level0, level1])
}

/// Closed-form assignment of the next series coefficients with the series
/// truncated at hbar level n.
fn assign_zeta_truncated(
    zeta: &[SymTensor<SuperPolynomial>],
    key: &MultiIndex,
    basis: &BasisData,
    cascade: &Cascade,
) -> Result<Vec<SuperPolynomial>> {
    let m = key.len();
    let ell = m - 1;
    let n = zeta.len() - 1;
    let vars = basis.element(0).vars();
    let mut levels = Vec::with_capacity(n + 1);
    for j in 0..=n {
        let mut value = SuperPolynomial::zero(vars);
        for shift in j..=n.min(m + j - 1) {
            value = &value + &seed_feedback(zeta, shift, &cascade.b[m + j - 1 - shift]);
        }
        if j == 0 {
            value = &value + &apply_delta(&cascade.c[ell]);
        }
        for shift in (j + 1)..=n.min(m + j) {
            value = &value - &v_term(basis, zeta, key, m + j - shift, shift)?;
        }
        levels.push(value);
    }
    Ok(levels)
}

fn solve_driver(
    model: &ModelSetup,
    gb: &GroebnerData,
    basis: &BasisData,
    seeds: &Seeds,
    n_zeta: usize,
    order: usize,
    strategy: DivisionStrategy,
    displayed_form: bool,
) -> Result<PrimitiveOutput> {
    if order == 0 {
        return Err(Error::IndexRange(
            "truncation order must be at least 1".into(),
        ));
    }
    if n_zeta == 0 && seeds.zeta1.iter().any(|p| !p.is_zero()) {
        return Err(Error::SeedWeight(
            "a series truncated at hbar level 0 cannot carry level-1 seeds".into(),
        ));
    }
    let vars = model.vars();
    let mu = basis.mu();
    let mut zeta: Vec<SymTensor<SuperPolynomial>> = (0..=n_zeta).map(|_| SymTensor::new()).collect();
    zeta[0].set(MultiIndex::empty(), SuperPolynomial::one(vars));
    for tensor in zeta.iter_mut().skip(1) {
        tensor.set(MultiIndex::empty(), SuperPolynomial::zero(vars));
    }
    for rho in 0..mu {
        zeta[0].set(MultiIndex::single(rho), seeds.zeta0[rho].clone());
        if n_zeta >= 1 {
            zeta[1].set(MultiIndex::single(rho), seeds.zeta1[rho].clone());
        }
        for tensor in zeta.iter_mut().skip(2) {
            tensor.set(MultiIndex::single(rho), SuperPolynomial::zero(vars));
        }
    }
    let mut a0 = SymTensor::new();
    let mut a1 = SymTensor::new();
    for rank in 2..=order + 1 {
        let keys = MultiIndex::all_of_degree(mu, rank);
        let mut assigned = Vec::with_capacity(keys.len());
        for key in &keys {
            let cascade = if displayed_form {
                cascade_weak(model, gb, basis, &zeta, key, strategy)?
            } else {
                cascade_truncated(model, gb, basis, &zeta, key, strategy)?
            };
            let (low, high) = extract_a(&a0, &a1, key, &cascade)?;
            a0.set(key.clone(), low);
            a1.set(key.clone(), high);
            let levels = if displayed_form {
                assign_zeta_weak(&zeta, key, basis, &cascade)?
            } else {
                assign_zeta_truncated(&zeta, key, basis, &cascade)?
            };
            assigned.push(levels);
        }
        for (key, levels) in keys.into_iter().zip(assigned) {
            for (tensor, value) in zeta.iter_mut().zip(levels) {
                tensor.set(key.clone(), value);
            }
        }
    }
    Ok(PrimitiveOutput {
        zeta,
        a0,
        a1,
        seeds: seeds.clone(),
        order,
    })
}

/// Solve the closure problem for the two-level series, following the
/// displayed reduction lines and assignments verbatim.
pub fn solve_weak_primitive(
    model: &ModelSetup,
    gb: &GroebnerData,
    basis: &BasisData,
    seeds: &Seeds,
    order: usize,
    strategy: DivisionStrategy,
) -> Result<PrimitiveOutput> {
    solve_driver(model, gb, basis, seeds, 1, order, strategy, true)
}

/// Solve the closure problem with the series truncated at hbar level
/// n_zeta; level 1 of the seeds is rejected when n_zeta is 0, and levels
/// two and higher start from zero.
pub fn solve_zeta_truncated(
    model: &ModelSetup,
    gb: &GroebnerData,
    basis: &BasisData,
    seeds: &Seeds,
    n_zeta: usize,
    order: usize,
    strategy: DivisionStrategy,
) -> Result<PrimitiveOutput> {
    solve_driver(model, gb, basis, seeds, n_zeta, order, strategy, false)
}

/// Outcome of replaying the closure relation on the assembled series.
#[derive(Debug, Clone)]
pub struct GcmReport {
    pub pairs_checked: usize,
    pub t_degree_checked: i32,
    pub hbar_checked: i32,
    pub a1_vanishes: bool,
    pub failures: Vec<String>,
}

impl GcmReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Rebuild both sides of the closure relation for every pair of directions
/// and cascade the difference through the twisted differential: each
/// t-hbar coefficient must reduce to the basis with all coefficients zero,
/// the last witness feeding the later coefficients.  The check covers every
/// hbar level the truncated series can populate and every t-degree at
/// which the structure constants are exact.
pub fn verify_gcm(
    model: &ModelSetup,
    gb: &GroebnerData,
    basis: &BasisData,
    out: &PrimitiveOutput,
    strategy: DivisionStrategy,
) -> Result<GcmReport> {
    let mu = basis.mu();
    let n = out.n_zeta() as i32;
    let hbar_hi = n + 2;
    let t_hi = out.order as i32 - 1;
    let ctx = linear_context(model, gb, basis, out.order as i32 + 1, hbar_hi, strategy)?;
    let series = out.zeta_series();
    let frame: Vec<FormalSeries> = (0..mu).map(|rho| ctx.hbar_nabla_t(rho, &series)).collect();
    let mut failures = Vec::new();
    for alpha in 0..mu {
        for beta in alpha..mu {
            let mut residual = ctx.hbar_nabla_t(beta, &frame[alpha]);
            for rho in 0..mu {
                residual = residual.sub(&out.a_series(alpha, beta, rho).mul(&frame[rho]));
            }
            exactness_failures(
                model, gb, basis, &ctx, residual, t_hi, hbar_hi, strategy,
                &format!("pair ({alpha},{beta})"),
                &mut failures,
            )?;
        }
    }
    Ok(GcmReport {
        pairs_checked: mu * (mu + 1) / 2,
        t_degree_checked: t_hi,
        hbar_checked: hbar_hi,
        a1_vanishes: out.a1_is_zero(),
        failures,
    })
}

/// Context for the linear deformation, exact in the parameters.
fn linear_context<'a>(
    model: &'a ModelSetup,
    gb: &'a GroebnerData,
    basis: &'a BasisData,
    t_order: i32,
    hbar_hi: i32,
    strategy: DivisionStrategy,
) -> Result<ConnectionContext<'a>> {
    ConnectionContext::linear(
        model,
        gb,
        basis,
        t_order,
        HbarWindow::new(0, hbar_hi),
        strategy,
    )
}

/// Cascade a residual series to zero: walk the keys hbar-major, reduce each
/// coefficient, record any basis component as a failure, and push the
/// witness's twisted image into the later keys.
#[allow(clippy::too_many_arguments)]
fn exactness_failures(
    model: &ModelSetup,
    gb: &GroebnerData,
    basis: &BasisData,
    ctx: &ConnectionContext,
    mut residual: FormalSeries,
    t_hi: i32,
    hbar_hi: i32,
    strategy: DivisionStrategy,
    label: &str,
    failures: &mut Vec<String>,
) -> Result<()> {
    let vars = residual.vars();
    let mu = basis.mu();
    for level in 0..=hbar_hi {
        for degree in 0..=t_hi {
            for tau in MultiIndex::all_of_degree(mu, degree as usize) {
                let value = residual.coefficient(level, &tau);
                if value.is_zero() {
                    continue;
                }
                let reduced = reduce_to_basis(model, gb, basis, &value, strategy)?;
                let mut remainder = SuperPolynomial::zero(vars);
                for (rho, c) in reduced.coefficients.iter().enumerate() {
                    if !c.is_zero() {
                        failures.push(format!(
                            "{label}: hbar^{level} t^[{tau}] keeps basis component {rho} = {c}"
                        ));
                        remainder = &remainder + &basis.element(rho).scale(c);
                    }
                }
                // drop this key entirely and propagate the witness tail
                let witness = FormalSeries::from_terms(
                    vars,
                    vec![((level, tau.clone()), reduced.lambda)],
                    None,
                    None,
                );
                let exact_here = &value - &remainder;
                let tail = ctx
                    .twisted_differential(&witness)
                    .sub(&FormalSeries::from_terms(
                        vars,
                        vec![((level, tau.clone()), exact_here)],
                        None,
                        None,
                    ));
                residual = residual
                    .sub(&FormalSeries::from_terms(
                        vars,
                        vec![((level, tau), value)],
                        None,
                        None,
                    ))
                    .sub(&tail);
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::parse_polynomial;
    use crate::fmanifold::{verify_f_axioms, FManifoldOutput};
    use crate::groebner::{charge_zero_basis, jacobian_groebner};
    use crate::model::build_model;

    fn cubic() -> (ModelSetup, GroebnerData, BasisData) {
        let model = build_model(2, 1, &["x0^3+x1^3+x2^3"]).unwrap();
        let gb = jacobian_groebner(&model);
        let basis = charge_zero_basis(&model, &gb).unwrap();
        (model, gb, basis)
    }

    fn quadrics() -> (ModelSetup, GroebnerData, BasisData) {
        let model = build_model(
            3,
            2,
            &["x0^2+x1^2+x2^2+x3^2", "x0^2+2*x1^2+3*x2^2+4*x3^2"],
        )
        .unwrap();
        let gb = jacobian_groebner(&model);
        let basis = charge_zero_basis(&model, &gb).unwrap();
        (model, gb, basis)
    }

    fn strategy() -> DivisionStrategy {
        DivisionStrategy::FirstMatch
    }

    #[test]
    fn seed_validation_enforces_grading() {
        let (model, _, basis) = cubic();
        let vars = model.vars();
        let zero = SuperPolynomial::zero(vars);
        let parse = |s: &str| parse_polynomial(vars, s).unwrap();

        let good = Seeds::new(
            &model,
            &basis,
            vec![zero.clone(), parse("y1*x0^3")],
            vec![zero.clone(), parse("3")],
        );
        assert!(good.is_ok());

        let wrong_weight = Seeds::new(
            &model,
            &basis,
            vec![zero.clone(), parse("x0^3")],
            vec![zero.clone(), zero.clone()],
        );
        assert!(matches!(wrong_weight, Err(Error::SeedWeight(_))));

        let level_one_at_weight_zero = Seeds::new(
            &model,
            &basis,
            vec![zero.clone(), zero.clone()],
            vec![parse("1"), zero.clone()],
        );
        assert!(matches!(
            level_one_at_weight_zero,
            Err(Error::SeedWeight(_))
        ));

        let charged = Seeds::new(
            &model,
            &basis,
            vec![zero.clone(), parse("y1*x0^2")],
            vec![zero.clone(), zero.clone()],
        );
        assert!(matches!(charged, Err(Error::SeedWeight(_))));

        let odd_factor = Seeds::new(
            &model,
            &basis,
            vec![zero.clone(), parse("y1*x0^2*e1*e2")],
            vec![zero.clone(), zero.clone()],
        );
        assert!(matches!(odd_factor, Err(Error::SeedWeight(_))));

        let bad_arity = Seeds::new(&model, &basis, vec![zero.clone()], vec![zero]);
        assert!(matches!(bad_arity, Err(Error::BadArity(_))));
    }

    #[test]
    fn split_sums_match_hand_expansions() {
        let (model, _, basis) = cubic();
        let vars = model.vars();
        let x = |slot: usize| SuperPolynomial::var(vars, slot);
        let mut level0 = SymTensor::new();
        level0.set(MultiIndex::empty(), SuperPolynomial::one(vars));
        level0.set(MultiIndex::single(0), x(1));
        level0.set(MultiIndex::single(1), x(2));
        level0.set(MultiIndex::new(vec![0, 0, 1]), &x(1) * &x(1));
        let zeta = vec![level0];

        let key = MultiIndex::new(vec![0, 0, 1]);
        let u1 = basis.element(1);

        // every position in a block of its own
        let bottom = v_term(&basis, &zeta, &key, 0, 0).unwrap();
        assert_eq!(bottom, u1.clone());

        // one coefficient factor: two ways to pick the repeated index
        let middle = v_term(&basis, &zeta, &key, 1, 0).unwrap();
        let expected = &(&u1 * &x(1)).scale(&scalar(2)) + &x(2);
        assert_eq!(middle, expected);

        // the whole multiset as coefficient
        let top = v_term(&basis, &zeta, &key, 3, 0).unwrap();
        assert_eq!(top, &x(1) * &x(1));

        assert!(matches!(
            v_term(&basis, &zeta, &key, 4, 0),
            Err(Error::IndexRange(_))
        ));
        assert!(matches!(
            v_term(&basis, &zeta, &key, 1, 1),
            Err(Error::IndexRange(_))
        ));
    }

    #[test]
    fn chain_sums_match_hand_expansions() {
        let mut a0 = SymTensor::new();
        let mut a1 = SymTensor::new();
        let pair = |a: i64, b: i64| vec![scalar(a), scalar(b)];
        a0.set(MultiIndex::pair(0, 1), pair(2, 3));
        a1.set(MultiIndex::pair(0, 1), pair(5, 7));
        a0.set(MultiIndex::pair(1, 1), pair(11, 13));
        a1.set(MultiIndex::pair(1, 1), pair(17, 19));
        a0.set(MultiIndex::new(vec![0, 1, 1]), pair(23, 29));
        a1.set(MultiIndex::new(vec![0, 1, 1]), pair(31, 37));

        let triple = MultiIndex::new(vec![0, 1, 1]);
        // two level-0 links: sum over the middle index
        assert_eq!(
            b_term(&a0, &a1, &triple, 0, 0, 0).unwrap(),
            scalar(2 * 2 + 3 * 11)
        );
        assert_eq!(
            b_term(&a0, &a1, &triple, 1, 0, 0).unwrap(),
            scalar(2 * 3 + 3 * 13)
        );
        // one raised link on either side
        assert_eq!(
            b_term(&a0, &a1, &triple, 0, 1, 0).unwrap(),
            scalar((5 * 2 + 7 * 11) + (2 * 5 + 3 * 17))
        );
        // the top split level is the stored constant itself
        assert_eq!(b_term(&a0, &a1, &triple, 0, 1, 1).unwrap(), scalar(23));
        assert_eq!(b_term(&a0, &a1, &triple, 1, 2, 1).unwrap(), scalar(37));
        // both links raised
        assert_eq!(
            b_term(&a0, &a1, &triple, 0, 2, 0).unwrap(),
            scalar(5 * 5 + 7 * 17)
        );
        // negative block count is zero by convention
        assert_eq!(b_term(&a0, &a1, &triple, 0, 2, 2).unwrap(), Scalar::zero());

        // size four: ordered block tuples double-count the symmetric split
        // and the 1/2! prefactor cancels the doubling
        let quad = MultiIndex::new(vec![0, 1, 1, 1]);
        let mut by_hand = Scalar::zero();
        for d1 in 0..2 {
            for d2 in 0..2 {
                let first = &a1.get(&MultiIndex::pair(0, 1)).unwrap()[d1];
                let second = &a1.get(&MultiIndex::pair(d1, 1)).unwrap()[d2];
                let third = &a1.get(&MultiIndex::pair(d2, 1)).unwrap()[0];
                by_hand = &by_hand + &(&(first * second) * third);
            }
        }
        assert_eq!(b_term(&a0, &a1, &quad, 0, 3, 0).unwrap(), by_hand);
    }

    #[test]
    fn rank_two_constants_match_direct_reduction() {
        let (model, gb, basis) = cubic();
        let seeds = Seeds::zero(&model, &basis);
        let out = solve_weak_primitive(&model, &gb, &basis, &seeds, 1, strategy()).unwrap();
        for alpha in 0..basis.mu() {
            for beta in alpha..basis.mu() {
                let product = &basis.element(alpha) * &basis.element(beta);
                let direct = reduce_to_basis(&model, &gb, &basis, &product, strategy()).unwrap();
                let key = MultiIndex::pair(alpha, beta);
                assert_eq!(out.a0.get(&key).unwrap(), &direct.coefficients);
                let follow =
                    reduce_to_basis(&model, &gb, &basis, &direct.delta_lambda, strategy())
                        .unwrap();
                let negated: Vec<Scalar> =
                    follow.coefficients.iter().map(|c| -c.clone()).collect();
                assert_eq!(out.a1.get(&key).unwrap(), &negated);
            }
        }
    }

    #[test]
    fn zero_seeds_keep_level_one_empty() {
        let (model, gb, basis) = cubic();
        let seeds = Seeds::zero(&model, &basis);
        let out = solve_weak_primitive(&model, &gb, &basis, &seeds, 2, strategy()).unwrap();
        for rank in 2..=3 {
            for (_, value) in out.zeta[1].rank_entries(rank) {
                assert!(value.is_zero());
            }
        }
        // with zero seeds the level-0 coefficient is the divergence of the
        // second reduction witness
        for alpha in 0..basis.mu() {
            for beta in alpha..basis.mu() {
                let key = MultiIndex::pair(alpha, beta);
                let product = &basis.element(alpha) * &basis.element(beta);
                let first = reduce_to_basis(&model, &gb, &basis, &product, strategy()).unwrap();
                let negated = first.delta_lambda.scale(&scalar(-1));
                let second = reduce_to_basis(&model, &gb, &basis, &negated, strategy()).unwrap();
                assert_eq!(
                    out.zeta[0].get(&key).unwrap(),
                    &second.delta_lambda
                );
            }
        }
    }

    #[test]
    fn closure_relation_holds_on_the_cubic() {
        let (model, gb, basis) = cubic();
        let seeds = Seeds::zero(&model, &basis);
        let out = solve_weak_primitive(&model, &gb, &basis, &seeds, 2, strategy()).unwrap();
        let report = verify_gcm(&model, &gb, &basis, &out, strategy()).unwrap();
        assert_eq!(report.pairs_checked, 3);
        assert_eq!(report.t_degree_checked, 1);
        assert_eq!(report.hbar_checked, 3);
        assert!(report.passed(), "failures: {:?}", report.failures);
    }

    #[test]
    fn closure_relation_holds_on_two_quadrics() {
        let (model, gb, basis) = quadrics();
        let seeds = Seeds::zero(&model, &basis);
        let out = solve_weak_primitive(&model, &gb, &basis, &seeds, 2, strategy()).unwrap();
        let report = verify_gcm(&model, &gb, &basis, &out, strategy()).unwrap();
        assert!(report.passed(), "failures: {:?}", report.failures);
    }

    #[test]
    fn nonzero_seeds_still_close() {
        let (model, gb, basis) = cubic();
        let vars = model.vars();
        let zero = SuperPolynomial::zero(vars);
        let seeds = Seeds::new(
            &model,
            &basis,
            vec![zero.clone(), parse_polynomial(vars, "y1*x0^3").unwrap()],
            vec![zero, parse_polynomial(vars, "2").unwrap()],
        )
        .unwrap();
        let out = solve_weak_primitive(&model, &gb, &basis, &seeds, 2, strategy()).unwrap();
        let report = verify_gcm(&model, &gb, &basis, &out, strategy()).unwrap();
        assert!(report.passed(), "failures: {:?}", report.failures);
    }

    #[test]
    fn truncation_levels_agree_on_the_two_level_system() {
        let (model, gb, basis) = cubic();
        let vars = model.vars();
        let zero = SuperPolynomial::zero(vars);
        let seeds = Seeds::new(
            &model,
            &basis,
            vec![zero.clone(), parse_polynomial(vars, "y1*x1^3").unwrap()],
            vec![zero, parse_polynomial(vars, "1").unwrap()],
        )
        .unwrap();
        let direct = solve_weak_primitive(&model, &gb, &basis, &seeds, 2, strategy()).unwrap();
        let looped =
            solve_zeta_truncated(&model, &gb, &basis, &seeds, 1, 2, strategy()).unwrap();
        assert_eq!(direct.a0, looped.a0);
        assert_eq!(direct.a1, looped.a1);
        assert_eq!(direct.zeta, looped.zeta);
    }

    #[test]
    fn level_zero_truncation_follows_the_short_system() {
        let (model, gb, basis) = cubic();
        let seeds = Seeds::zero(&model, &basis);
        let out = solve_zeta_truncated(&model, &gb, &basis, &seeds, 0, 1, strategy()).unwrap();
        assert_eq!(out.zeta.len(), 1);
        for alpha in 0..basis.mu() {
            for beta in alpha..basis.mu() {
                let key = MultiIndex::pair(alpha, beta);
                let product = &basis.element(alpha) * &basis.element(beta);
                let first = reduce_to_basis(&model, &gb, &basis, &product, strategy()).unwrap();
                let negated = first.delta_lambda.scale(&scalar(-1));
                let second = reduce_to_basis(&model, &gb, &basis, &negated, strategy()).unwrap();
                assert_eq!(out.a0.get(&key).unwrap(), &first.coefficients);
                assert_eq!(out.a1.get(&key).unwrap(), &second.coefficients);
                assert_eq!(out.zeta[0].get(&key).unwrap(), &second.delta_lambda);
            }
        }
        let report = verify_gcm(&model, &gb, &basis, &out, strategy()).unwrap();
        assert!(report.passed(), "failures: {:?}", report.failures);

        let vars = model.vars();
        let carried = Seeds::new(
            &model,
            &basis,
            vec![SuperPolynomial::zero(vars); 2],
            vec![
                SuperPolynomial::zero(vars),
                parse_polynomial(vars, "1").unwrap(),
            ],
        )
        .unwrap();
        assert!(matches!(
            solve_zeta_truncated(&model, &gb, &basis, &carried, 0, 1, strategy()),
            Err(Error::SeedWeight(_))
        ));
    }

    #[test]
    fn three_level_truncation_closes() {
        let (model, gb, basis) = cubic();
        let seeds = Seeds::zero(&model, &basis);
        let out = solve_zeta_truncated(&model, &gb, &basis, &seeds, 2, 1, strategy()).unwrap();
        assert_eq!(out.n_zeta(), 2);
        let report = verify_gcm(&model, &gb, &basis, &out, strategy()).unwrap();
        assert_eq!(report.hbar_checked, 4);
        assert!(report.passed(), "failures: {:?}", report.failures);
    }

    #[test]
    fn perturbed_constants_fail_the_closure_check() {
        let (model, gb, basis) = cubic();
        let seeds = Seeds::zero(&model, &basis);
        let mut out = solve_weak_primitive(&model, &gb, &basis, &seeds, 1, strategy()).unwrap();
        let key = MultiIndex::pair(0, 0);
        let mut bumped = out.a0.get(&key).unwrap().clone();
        bumped[0] = &bumped[0] + &scalar(1);
        out.a0.set(key, bumped);
        let report = verify_gcm(&model, &gb, &basis, &out, strategy()).unwrap();
        assert!(!report.passed());
    }

    #[test]
    fn vanishing_level_one_constants_give_multiplication_axioms() {
        let (model, gb, basis) = cubic();
        let seeds = Seeds::zero(&model, &basis);
        let out = solve_weak_primitive(&model, &gb, &basis, &seeds, 2, strategy()).unwrap();
        if !out.a1_is_zero() {
            return;
        }
        let mut gamma = SymTensor::new();
        for rho in 0..basis.mu() {
            gamma.set(MultiIndex::single(rho), basis.element(rho));
        }
        let shim = FManifoldOutput {
            gamma,
            a: out.a0.clone(),
            lambda: SymTensor::new(),
            order: out.order,
        };
        let report = verify_f_axioms(&shim, out.order);
        assert!(report.passed());
    }
}
