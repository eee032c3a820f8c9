//! Integer-relation detection by lattice basis reduction.
//!
//! The search lattice is the classic one: rows `(e_i | N * x_i)` for a
//! large scale `N`. A reduced basis surfaces candidate coefficient
//! vectors; a candidate is accepted as a relation only if its residual
//! sits at double-precision noise level relative to its own size, which
//! keeps pigeonhole near-relations out.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Nonzero integer vector `c` with `|sum c_i x_i|` at rounding level.
/// Any returned relation satisfies
/// `residual <= 1e-10 * height * max|x_i|`, usually far below that.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct IntegerRelation {
    pub coefficients: Vec<i64>,
    pub target_values: Vec<f64>,
    pub residual: f64,
}

const LLL_DELTA: f64 = 0.99;
/// Scale of the value column. Chosen so that basis vectors surfaced by
/// the reduction carry residuals orders of magnitude above the
/// acceptance threshold unless they are genuine relations.
const VALUE_SCALE: f64 = 1e12;
/// Relative acceptance threshold: a candidate `c` is a relation only if
/// `|sum c_i x_i| <= ACCEPT_EPS * (1 + |c|_1) * max|x_i|`.
const ACCEPT_EPS: f64 = 1e-14;
const MAX_HEIGHT: u64 = 1 << 40;
const ENTRY_LIMIT: i128 = 1 << 110;

fn gram_schmidt(basis: &[Vec<i128>], mu: &mut [Vec<f64>], norms: &mut [f64]) {
    let rows = basis.len();
    let cols = basis[0].len();
    let mut b_star = vec![vec![0.0f64; cols]; rows];
    for i in 0..rows {
        for t in 0..cols {
            b_star[i][t] = basis[i][t] as f64;
        }
        for j in 0..i {
            let mut num = 0.0;
            for t in 0..cols {
                num += basis[i][t] as f64 * b_star[j][t];
            }
            mu[i][j] = if norms[j] == 0.0 { 0.0 } else { num / norms[j] };
            for t in 0..cols {
                b_star[i][t] -= mu[i][j] * b_star[j][t];
            }
        }
        norms[i] = b_star[i].iter().map(|x| x * x).sum();
    }
}

fn lll_reduce(mut basis: Vec<Vec<i128>>) -> Result<Vec<Vec<i128>>> {
    let rows = basis.len();
    let cols = basis[0].len();
    let mut mu = vec![vec![0.0f64; rows]; rows];
    let mut norms = vec![0.0f64; rows];
    gram_schmidt(&basis, &mut mu, &mut norms);

    let mut k = 1usize;
    while k < rows {
        for j in (0..k).rev() {
            let r = mu[k][j].round();
            if r != 0.0 && r.abs() < 9e18 {
                let ri = r as i128;
                for t in 0..cols {
                    basis[k][t] -= ri * basis[j][t];
                    if basis[k][t].abs() > ENTRY_LIMIT {
                        return Err(Error::HeightOverflow(u64::MAX));
                    }
                }
            }
        }
        gram_schmidt(&basis, &mut mu, &mut norms);
        if norms[k] >= (LLL_DELTA - mu[k][k - 1] * mu[k][k - 1]) * norms[k - 1] {
            k += 1;
        } else {
            basis.swap(k, k - 1);
            gram_schmidt(&basis, &mut mu, &mut norms);
            k = k.max(2) - 1;
        }
    }
    Ok(basis)
}

/// Search for a nonzero integer vector `c`, `|c_i| <= height`, with
/// `sum c_i values_i = 0` at double precision. Returns the first
/// acceptable candidate in reduced-basis order, or `None`.
pub fn integer_relation(values: &[f64], height: u64) -> Result<Option<IntegerRelation>> {
    if values.is_empty() {
        return Err(Error::InvalidArgument(
            "integer relation search needs at least one value".into(),
        ));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument(
            "integer relation search on non-finite values".into(),
        ));
    }
    if height < 2 {
        return Err(Error::InvalidArgument(
            "relation height must be at least 2".into(),
        ));
    }
    if height > MAX_HEIGHT {
        return Err(Error::HeightOverflow(height));
    }
    let m = values.len();
    let scale = values.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    if scale == 0.0 {
        // Everything is zero; the first unit vector is a relation.
        let mut coefficients = vec![0i64; m];
        coefficients[0] = 1;
        return Ok(Some(IntegerRelation {
            coefficients,
            target_values: values.to_vec(),
            residual: 0.0,
        }));
    }

    let mut basis = vec![vec![0i128; m + 1]; m];
    for (i, row) in basis.iter_mut().enumerate() {
        row[i] = 1;
        row[m] = (values[i] / scale * VALUE_SCALE).round() as i128;
    }
    let reduced = lll_reduce(basis)?;

    for row in &reduced {
        let coeffs = &row[..m];
        if coeffs.iter().all(|&c| c == 0) {
            continue;
        }
        if coeffs.iter().any(|&c| c.unsigned_abs() > height as u128) {
            continue;
        }
        let c: Vec<i64> = coeffs.iter().map(|&x| x as i64).collect();
        let residual: f64 = c
            .iter()
            .zip(values)
            .map(|(&ci, &vi)| ci as f64 * vi)
            .sum::<f64>()
            .abs();
        let height_l1: f64 = c.iter().map(|&ci| ci.abs() as f64).sum();
        if residual <= ACCEPT_EPS * (1.0 + height_l1) * scale {
            let mut coefficients = c;
            if let Some(first) = coefficients.iter().find(|&&x| x != 0) {
                if *first < 0 {
                    for x in &mut coefficients {
                        *x = -*x;
                    }
                }
            }
            return Ok(Some(IntegerRelation {
                coefficients,
                target_values: values.to_vec(),
                residual,
            }));
        }
    }
    Ok(None)
}

/// Best rational approximation `p/q` with `q <= max_den` and
/// `|x - p/q| <= tol`, by continued fractions.
pub(crate) fn best_rational(x: f64, max_den: u64, tol: f64) -> Option<(i64, u64)> {
    let mut a = x.floor();
    let (mut p0, mut q0, mut p1, mut q1) = (1i64, 0u64, a as i64, 1u64);
    let mut frac = x - a;
    for _ in 0..64 {
        if (x - p1 as f64 / q1 as f64).abs() <= tol {
            return Some((p1, q1));
        }
        if frac.abs() < 1e-15 {
            break;
        }
        let inv = 1.0 / frac;
        a = inv.floor();
        frac = inv - a;
        if a >= 9e15 {
            break;
        }
        let p2 = (a as i64).checked_mul(p1)?.checked_add(p0)?;
        let q2 = (a as u64).checked_mul(q1)?.checked_add(q0)?;
        if q2 > max_den {
            break;
        }
        (p0, q0, p1, q1) = (p1, q1, p2, q2);
    }
    ((x - p1 as f64 / q1 as f64).abs() <= tol).then_some((p1, q1))
}
