//! Structure constants of the formal multiplication on the charge-zero basis.
//!
//! The solver extends the basis elements to a deformation tensor, order by
//! order: for every multiset of basis directions it runs a short cascade of
//! Jacobian reductions, one reduction per hbar level, feeding the divergence
//! of each witness into the next line, then pins the stored witness with one
//! more reduction taken from the pair product identity itself.  The
//! resulting tensors store every t-derivative of the multiplication data at
//! the origin, so the identity holds exactly through the truncation order.
//!
//! Two independent checks are provided.  `verify_f_axioms` tests the
//! associativity, commutativity, and potentiality identities on the
//! reassembled coefficient series.  `verify_ind_qm` rebuilds both sides of
//! the defining congruence for iterated connection derivatives of 1 and
//! requires the residual to vanish identically within the tracked exactness
//! window.

use crate::algebra::{scalar, Scalar, SuperPolynomial, Vars};
use crate::error::{Error, Result};
use crate::gaussmanin::{ConnectionContext, HbarWindow};
use crate::groebner::{reduce_to_basis, BasisData, DivisionStrategy, GroebnerData, ReductionOutcome};
use crate::model::ModelSetup;
use crate::series::{tensor_slice_series, FormalSeries, MultiIndex, SymTensor};

/// Solution of the deformation problem through a fixed t-order.
///
/// `gamma` holds the deformation coefficients u for every multiset of size
/// 1 through order+1; size-1 entries are the basis elements themselves.
/// `a` holds the reduction coefficients for sizes 2 through order+1 and `lambda`
/// the odd witnesses from the final cascade line of each multiset.
#[derive(Debug, Clone)]
pub struct FManifoldOutput {
    pub gamma: SymTensor<SuperPolynomial>,
    pub a: SymTensor<Vec<Scalar>>,
    pub lambda: SymTensor<SuperPolynomial>,
    pub order: usize,
}

impl FManifoldOutput {
    pub fn vars(&self) -> Vars {
        self.gamma
            .entries()
            .next()
            .expect("rank-one entries are always populated")
            .1
            .vars()
    }

    pub fn mu(&self) -> usize {
        self.gamma.rank_entries(1).count()
    }

    /// Multiplication coefficient series for the pair (alpha, beta) in
    /// direction rho, exact through t-degree order − 1.
    pub fn a_series(&self, alpha: usize, beta: usize, rho: usize) -> FormalSeries {
        let vars = self.vars();
        tensor_slice_series(vars, self.mu(), self.order as i32 - 1, |tau| {
            let key = MultiIndex::pair(alpha, beta).merge(tau);
            self.a
                .get(&key)
                .map(|c| SuperPolynomial::constant(vars, c[rho].clone()))
        })
    }

    /// Witness series for the pair (alpha, beta), exact through t-degree
    /// order − 1.
    pub fn lambda_series(&self, alpha: usize, beta: usize) -> FormalSeries {
        let vars = self.vars();
        tensor_slice_series(vars, self.mu(), self.order as i32 - 1, |tau| {
            let key = MultiIndex::pair(alpha, beta).merge(tau);
            self.lambda.get(&key).cloned()
        })
    }
}

/// Sum over set partitions of the index positions into len − level nonempty
/// blocks of the product of tensor entries over the blocks.
///
/// Enumerating unordered partitions with unit coefficient realizes the
/// normalized sum over ordered disjoint decompositions: the 1/(blocks)!
/// factor cancels exactly against the number of orderings, because blocks
/// of positions are pairwise distinct as sets.
pub fn u_partition(
    gamma: &SymTensor<SuperPolynomial>,
    indices: &MultiIndex,
    level: usize,
) -> Result<SuperPolynomial> {
    let size = indices.len();
    if size == 0 || level >= size {
        return Err(Error::IndexRange(format!(
            "partition level {level} is out of range for {size} indices"
        )));
    }
    let blocks = size - level;
    let slots = indices.indices();
    let mut sum: Option<SuperPolynomial> = None;
    for partition in set_partitions(size, blocks) {
        let mut product: Option<SuperPolynomial> = None;
        for block in &partition {
            let key = MultiIndex::new(block.iter().map(|&p| slots[p]).collect());
            let entry = gamma.get(&key).ok_or_else(|| {
                Error::IndexRange(format!("deformation tensor entry {key} is not populated"))
            })?;
            product = Some(match product {
                None => entry.clone(),
                Some(p) => &p * entry,
            });
        }
        let product = product.expect("blocks are nonempty");
        sum = Some(match sum {
            None => product,
            Some(s) => &s + &product,
        });
    }
    Ok(sum.expect("every valid block count admits a partition"))
}

/// All partitions of 0..count into exactly `blocks` nonempty blocks, each
/// partition listed once with blocks ordered by minimal element.
fn set_partitions(count: usize, blocks: usize) -> Vec<Vec<Vec<usize>>> {
    let mut out = Vec::new();
    let mut current: Vec<Vec<usize>> = Vec::new();
    place_position(0, count, blocks, &mut current, &mut out);
    out
}

fn place_position(
    pos: usize,
    count: usize,
    blocks: usize,
    current: &mut Vec<Vec<usize>>,
    out: &mut Vec<Vec<Vec<usize>>>,
) {
    if current.len() + (count - pos) < blocks {
        return;
    }
    if pos == count {
        if current.len() == blocks {
            out.push(current.clone());
        }
        return;
    }
    for b in 0..current.len() {
        current[b].push(pos);
        place_position(pos + 1, count, blocks, current, out);
        current[b].pop();
    }
    if current.len() < blocks {
        current.push(vec![pos]);
        place_position(pos + 1, count, blocks, current, out);
        current.pop();
    }
}

/// Solve for the deformation tensor and multiplication coefficients through
/// the given t-order.
///
/// For each multiset of size m the cascade runs m − 1 reductions: line 0
/// reduces the fully split partition sum, and line i reduces the level-i
/// partition sum minus the divergence of the previous witness.  The final
/// line's coefficients become the stored coefficient entry.
///
/// The stored witness is rebuilt afterwards.  Cascade lines determine each
/// witness only up to the divergence kernel, and the kernel ambiguity of one
/// line shifts the next witness by an exact term that the following line's
/// divergence annihilates, so the last witness can drift off the value that
/// the pair product series needs while every line still holds.  Solving the
/// degree m − 2 coefficient of the pair identity itself pins the witness, and
/// the identity then holds verbatim on the stored tensors.
pub fn solve_f_manifold(
    model: &ModelSetup,
    gb: &GroebnerData,
    basis: &BasisData,
    order: usize,
    strategy: DivisionStrategy,
) -> Result<FManifoldOutput> {
    if order == 0 {
        return Err(Error::IndexRange(
            "truncation order must be at least 1".into(),
        ));
    }
    let mut gamma = SymTensor::new();
    for alpha in 0..basis.mu() {
        gamma.set(MultiIndex::single(alpha), basis.element(alpha));
    }
    let mut a = SymTensor::new();
    let mut lambda = SymTensor::new();
    for rank in 2..=order + 1 {
        let keys = MultiIndex::all_of_degree(basis.mu(), rank);
        let mut witnesses = Vec::with_capacity(keys.len());
        for key in &keys {
            let last = cascade(model, gb, basis, &gamma, key, strategy)?;
            a.set(key.clone(), last.coefficients.clone());
            if rank == 2 {
                witnesses.push(last);
            }
        }
        if rank > 2 {
            let ctx = ConnectionContext::from_gamma_tensor(
                model,
                gb,
                basis,
                &gamma,
                rank as i32 - 1,
                HbarWindow::new(0, 1),
                strategy,
            )?;
            for key in &keys {
                witnesses.push(pair_identity_witness(&ctx, &a, &lambda, key)?);
            }
        }
        for (key, outcome) in keys.into_iter().zip(witnesses) {
            gamma.set(key.clone(), outcome.delta_lambda);
            lambda.set(key, outcome.lambda);
        }
    }
    Ok(FManifoldOutput {
        gamma,
        a,
        lambda,
        order,
    })
}

fn cascade(
    model: &ModelSetup,
    gb: &GroebnerData,
    basis: &BasisData,
    gamma: &SymTensor<SuperPolynomial>,
    key: &MultiIndex,
    strategy: DivisionStrategy,
) -> Result<ReductionOutcome> {
    let mut line: Option<ReductionOutcome> = None;
    for level in 0..=key.len() - 2 {
        let mut input = u_partition(gamma, key, level)?;
        if let Some(prev) = &line {
            input = &input - &prev.delta_lambda;
        }
        line = Some(reduce_to_basis(model, gb, basis, &input, strategy)?);
    }
    Ok(line.expect("rank is at least two"))
}

/// Witness for the multiset `key` from the pair identity directly.
///
/// Splitting off the two smallest indices as the pair, the t^tau coefficient
/// of the identity with the rank |key| witness entry left open reads
///
///   mult!(tau) * [Gamma_a Gamma_b − sum_rho A_ab^rho Gamma_rho
///                 − Q_{S+Gamma}(Lambda_ab)]_tau  =  Q_S(lambda_key),
///
/// every other entry being of lower rank or a coefficient already fixed by
/// the cascade.  The left side must therefore reduce with zero coefficients;
/// the reduction witness is the stored entry.
fn pair_identity_witness(
    ctx: &ConnectionContext,
    a: &SymTensor<Vec<Scalar>>,
    lambda: &SymTensor<SuperPolynomial>,
    key: &MultiIndex,
) -> Result<ReductionOutcome> {
    let slots = key.indices();
    let pair = MultiIndex::pair(slots[0], slots[1]);
    let tau = MultiIndex::new(slots[2..].to_vec());
    let vars = ctx.model().vars();
    let mu = ctx.basis().mu();
    let degree = tau.degree();
    let lam_pair = tensor_slice_series(vars, mu, degree, |sigma| {
        lambda.get(&pair.merge(sigma)).cloned()
    });
    let mut rhs = ctx.twisted_differential(&lam_pair);
    for rho in 0..mu {
        let a_pair = tensor_slice_series(vars, mu, degree, |sigma| {
            a.get(&pair.merge(sigma))
                .map(|c| SuperPolynomial::constant(vars, c[rho].clone()))
        });
        rhs = rhs.add(&a_pair.mul(ctx.gamma_partial(rho)));
    }
    let lhs = ctx.gamma_partial(slots[0]).mul(ctx.gamma_partial(slots[1]));
    let demand = lhs
        .sub(&rhs)
        .coefficient(0, &tau)
        .scale(&tau.multiplicity_factorial());
    let outcome = reduce_to_basis(ctx.model(), ctx.groebner(), ctx.basis(), &demand, ctx.strategy())?;
    if outcome.coefficients.iter().any(|c| c != &scalar(0)) {
        return Err(Error::Normalization(format!(
            "pair identity at {key} does not close onto the cascade coefficients"
        )));
    }
    Ok(outcome)
}

/// A single failed coefficient comparison, with the axiom name, the basis
/// indices of the identity instance, and the first differing t-monomial.
#[derive(Debug, Clone)]
pub struct AxiomViolation {
    pub axiom: &'static str,
    pub indices: Vec<usize>,
    pub tau: MultiIndex,
    pub difference: Scalar,
}

/// Outcome of the multiplication axiom checks.  Associativity and
/// commutativity are compared through t-degree `degree`, potentiality
/// through `degree` − 1 because it differentiates the series once.
#[derive(Debug, Clone)]
pub struct AxiomReport {
    pub degree: i32,
    pub associativity: Option<AxiomViolation>,
    pub commutativity: Option<AxiomViolation>,
    pub potential: Option<AxiomViolation>,
}

impl AxiomReport {
    pub fn passed(&self) -> bool {
        self.associativity.is_none() && self.commutativity.is_none() && self.potential.is_none()
    }
}

/// Check associativity, commutativity, and potentiality of the solved
/// multiplication through min(order, out.order).
pub fn verify_f_axioms(out: &FManifoldOutput, order: usize) -> AxiomReport {
    let order = order.min(out.order);
    let vars = out.vars();
    let mu = out.mu();
    axiom_report(vars, mu, order as i32 - 1, &|alpha, beta, tau, rho| {
        let key = MultiIndex::pair(alpha, beta).merge(tau);
        out.a
            .get(&key)
            .map_or_else(|| scalar(0), |c| c[rho].clone())
    })
}

fn axiom_report(
    vars: Vars,
    mu: usize,
    degree: i32,
    lookup: &dyn Fn(usize, usize, &MultiIndex, usize) -> Scalar,
) -> AxiomReport {
    let series = |a: usize, b: usize, r: usize| {
        tensor_slice_series(vars, mu, degree, |tau| {
            Some(SuperPolynomial::constant(vars, lookup(a, b, tau, r)))
        })
    };
    let mut report = AxiomReport {
        degree,
        associativity: None,
        commutativity: None,
        potential: None,
    };
    'assoc: for alpha in 0..mu {
        for beta in 0..mu {
            for gamma in 0..mu {
                for delta in 0..mu {
                    let mut lhs = FormalSeries::zero(vars);
                    let mut rhs = FormalSeries::zero(vars);
                    for rho in 0..mu {
                        lhs = lhs.add(&series(alpha, beta, rho).mul(&series(rho, gamma, delta)));
                        rhs = rhs.add(&series(beta, gamma, rho).mul(&series(rho, alpha, delta)));
                    }
                    if let Some((tau, difference)) = first_mismatch(&lhs, &rhs) {
                        report.associativity = Some(AxiomViolation {
                            axiom: "associativity",
                            indices: vec![alpha, beta, gamma, delta],
                            tau,
                            difference,
                        });
                        break 'assoc;
                    }
                }
            }
        }
    }
    'comm: for alpha in 0..mu {
        for beta in alpha + 1..mu {
            for delta in 0..mu {
                let lhs = series(alpha, beta, delta);
                let rhs = series(beta, alpha, delta);
                if let Some((tau, difference)) = first_mismatch(&lhs, &rhs) {
                    report.commutativity = Some(AxiomViolation {
                        axiom: "commutativity",
                        indices: vec![alpha, beta, delta],
                        tau,
                        difference,
                    });
                    break 'comm;
                }
            }
        }
    }
    'pot: for alpha in 0..mu {
        for beta in alpha + 1..mu {
            for gamma in 0..mu {
                for delta in 0..mu {
                    let lhs = series(beta, gamma, delta).d_t(alpha);
                    let rhs = series(alpha, gamma, delta).d_t(beta);
                    if let Some((tau, difference)) = first_mismatch(&lhs, &rhs) {
                        report.potential = Some(AxiomViolation {
                            axiom: "potential",
                            indices: vec![alpha, beta, gamma, delta],
                            tau,
                            difference,
                        });
                        break 'pot;
                    }
                }
            }
        }
    }
    report
}

fn first_mismatch(lhs: &FormalSeries, rhs: &FormalSeries) -> Option<(MultiIndex, Scalar)> {
    let diff = lhs.sub(rhs);
    diff.terms().iter().next().map(|((_, tau), p)| {
        let value = p
            .terms()
            .first()
            .map(|(_, c)| c.clone())
            .unwrap_or_else(|| scalar(0));
        (tau.clone(), value)
    })
}

/// Residual of the iterated-derivative congruence for one index multiset.
///
/// `holds` records whether the residual vanished identically; the residual
/// itself carries the exactness bounds through which the comparison is
/// meaningful.
#[derive(Debug, Clone)]
pub struct IndQmReport {
    pub holds: bool,
    pub residual: FormalSeries,
}

/// Rebuild both sides of the congruence satisfied by iterated connection
/// derivatives of 1 and return the residual.
///
/// The left side applies the twisted derivative once per index.  The right
/// side extends the pair coefficient and witness series one index at a time:
/// each extension composes with the pair series in every direction and adds
/// the hbar-weighted t-derivative of the previous stage.
pub fn verify_ind_qm(
    model: &ModelSetup,
    gb: &GroebnerData,
    basis: &BasisData,
    out: &FManifoldOutput,
    indices: &MultiIndex,
) -> Result<IndQmReport> {
    let size = indices.len();
    if size < 2 {
        return Err(Error::IndexRange(
            "the congruence needs at least two indices".into(),
        ));
    }
    if size > 4 {
        return Err(Error::IndexRange(
            "congruence checks are limited to four indices".into(),
        ));
    }
    let vars = model.vars();
    let mu = basis.mu();
    let window = HbarWindow::new(0, size as i32);
    let ctx = ConnectionContext::from_gamma_tensor(
        model,
        gb,
        basis,
        &out.gamma,
        out.order as i32 + 1,
        window,
        DivisionStrategy::FirstMatch,
    )?;
    let slots = indices.indices();

    let mut iterated = FormalSeries::one(vars);
    for &alpha in slots {
        iterated = ctx.hbar_nabla_t(alpha, &iterated);
    }

    let mut coeff: Vec<FormalSeries> = (0..mu)
        .map(|rho| out.a_series(slots[0], slots[1], rho))
        .collect();
    let mut witness = out.lambda_series(slots[0], slots[1]);
    for &alpha in &slots[2..] {
        let mut next_coeff = Vec::with_capacity(mu);
        for rho in 0..mu {
            let mut s = coeff[rho].d_t(alpha).shift_h(1);
            for delta in 0..mu {
                s = s.add(&coeff[delta].mul(&out.a_series(delta, alpha, rho)));
            }
            next_coeff.push(s);
        }
        let mut next_witness = ctx.hbar_nabla_t(alpha, &witness);
        for delta in 0..mu {
            next_witness = next_witness.add(&coeff[delta].mul(&out.lambda_series(delta, alpha)));
        }
        coeff = next_coeff;
        witness = next_witness;
    }

    let mut rhs = ctx.twisted_differential(&witness);
    for rho in 0..mu {
        rhs = rhs.add(&coeff[rho].mul(ctx.gamma_partial(rho)));
    }
    let residual = iterated.sub(&rhs);
    Ok(IndQmReport {
        holds: residual.is_zero(),
        residual,
    })
}
