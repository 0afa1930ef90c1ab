//! Independent dimension oracle for the graded Jacobian ring.
//!
//! Computes dim of each (charge 0, weight m) piece of Q[q]/(dS/dq_i) by
//! exact sparse Gaussian elimination on the span of monomial multiples of
//! the partials inside that piece. Deliberately avoids the division and
//! basis machinery of the library so the two paths can cross-check.

use dwork::algebra::Scalar;
use dwork::model::ModelSetup;
use num::{One, Zero};
use std::collections::BTreeMap;

/// All exponent vectors of the given length summing to `total`.
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
    let mut prefix = Vec::new();
    go(total, parts, &mut prefix, &mut out);
    out
}

/// Even monomials of the model algebra with the given charge and weight,
/// as exponent vectors over all n+k+1 slots (y first, then x).
fn graded_monomials(model: &ModelSetup, charge: i64, weight: i64) -> Vec<Vec<u32>> {
    let k = model.k();
    let n = model.n();
    let degrees = model.degrees();
    let mut out = Vec::new();
    if weight < 0 {
        return out;
    }
    for y_part in compositions(weight as u32, k) {
        let y_charge: i64 = y_part
            .iter()
            .zip(degrees)
            .map(|(&a, &d)| -(a as i64) * d as i64)
            .sum();
        let x_total = charge - y_charge;
        if x_total < 0 {
            continue;
        }
        for x_part in compositions(x_total as u32, n + 1) {
            let mut exps = y_part.clone();
            exps.extend_from_slice(&x_part);
            out.push(exps);
        }
    }
    out
}

/// Sparse row: (column, coefficient) sorted by column, no zeros.
type Row = Vec<(usize, Scalar)>;

fn row_axpy(target: &Row, coef: &Scalar, source: &Row) -> Row {
    let mut out = Vec::with_capacity(target.len() + source.len());
    let (mut i, mut j) = (0, 0);
    while i < target.len() || j < source.len() {
        match (target.get(i), source.get(j)) {
            (Some((ci, vi)), Some((cj, vj))) if ci == cj => {
                let v = vi + &(coef * vj);
                if !v.is_zero() {
                    out.push((*ci, v));
                }
                i += 1;
                j += 1;
            }
            (Some((ci, vi)), Some((cj, _))) if ci < cj => {
                out.push((*ci, vi.clone()));
                i += 1;
            }
            (Some(_), Some((cj, vj))) => {
                out.push((*cj, coef * vj));
                j += 1;
            }
            (Some((ci, vi)), None) => {
                out.push((*ci, vi.clone()));
                i += 1;
            }
            (None, Some((cj, vj))) => {
                out.push((*cj, coef * vj));
                j += 1;
            }
            (None, None) => unreachable!(),
        }
    }
    out
}

/// Rank of the row span by elimination with monic pivots.
fn rank(rows: Vec<Row>) -> usize {
    let mut pivots: BTreeMap<usize, Row> = BTreeMap::new();
    for mut row in rows {
        loop {
            let Some((col, coef)) = row.first().cloned() else {
                break;
            };
            match pivots.get(&col) {
                Some(pivot) => {
                    row = row_axpy(&row, &-coef, pivot);
                }
                None => {
                    let inv = Scalar::one() / coef;
                    let monic = row.iter().map(|(c, v)| (*c, v * &inv)).collect();
                    pivots.insert(col, monic);
                    break;
                }
            }
        }
    }
    pivots.len()
}

/// Dimension of the (charge 0, weight `weight`) piece of the Jacobian ring.
pub fn graded_dimension(model: &ModelSetup, weight: i64) -> usize {
    let basis = graded_monomials(model, 0, weight);
    let column: BTreeMap<Vec<u32>, usize> = basis
        .iter()
        .cloned()
        .enumerate()
        .map(|(i, m)| (m, i))
        .collect();

    let grading = model.grading();
    let mut rows: Vec<Row> = Vec::new();
    for (slot, partial) in model.partials().iter().enumerate() {
        if partial.is_zero() {
            continue;
        }
        let mult_charge = grading.charge_of_var(slot);
        let mult_weight = weight - 1 + grading.weight_of_var(slot);
        for mult in graded_monomials(model, mult_charge, mult_weight) {
            let mut entries: BTreeMap<usize, Scalar> = BTreeMap::new();
            for (m, c) in partial.terms() {
                let mut exps = mult.clone();
                for (e, p) in exps.iter_mut().zip(m.exponents()) {
                    *e += p;
                }
                let col = column[&exps];
                let entry = entries.entry(col).or_insert_with(Scalar::zero);
                *entry += c;
            }
            let row: Row = entries.into_iter().filter(|(_, v)| !v.is_zero()).collect();
            if !row.is_empty() {
                rows.push(row);
            }
        }
    }
    basis.len() - rank(rows)
}

/// Dimensions of the weight pieces 0..=max_weight.
pub fn jacobian_profile(model: &ModelSetup, max_weight: i64) -> Vec<usize> {
    (0..=max_weight)
        .map(|w| graded_dimension(model, w))
        .collect()
}
