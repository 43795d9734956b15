//! Linear systems over ℚ whose solutions must lie in the local ring ℤ_(p)
//! (rationals with denominator prime to p) in selected coordinates.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

/// p-adic valuation of a nonzero rational.
pub fn valuation(x: &BigRational, p: &BigInt) -> i64 {
    debug_assert!(!x.is_zero());
    let count = |n: &BigInt| {
        let mut n = n.abs();
        let mut e = 0;
        while (&n % p).is_zero() {
            n /= p;
            e += 1;
        }
        e
    };
    count(x.numer()) - count(x.denom())
}

pub fn is_local_integer(x: &BigRational, p: &BigInt) -> bool {
    x.is_zero() || valuation(x, p) >= 0
}

/// Solves `A x = b` with `x_j ∈ ℤ_(p)` whenever `!free[j]` and `x_j ∈ ℚ` otherwise.
///
/// Free columns are eliminated first by rational row operations. The remaining block is
/// reduced with rational row operations and ℤ_(p)-unimodular column operations, pivoting
/// on an entry of least valuation in its row, so the reduced system is diagonal and
/// solvable in ℤ_(p) iff every pivot value is local. Non-pivot coordinates are set to 0.
pub fn solve_local(a: &[Vec<BigRational>], b: &[BigRational], p: u64, free: &[bool]) -> Option<Vec<BigRational>> {
    let n = free.len();
    let pb = BigInt::from(p);
    let mut rows: Vec<Vec<BigRational>> = a
        .iter()
        .zip(b)
        .map(|(r, v)| {
            let mut r = r.clone();
            r.push(v.clone());
            r
        })
        .collect();
    let mut x = vec![BigRational::zero(); n];

    // free columns: plain Gauss-Jordan, pivot rows are set aside
    let mut defs: Vec<(usize, Vec<BigRational>)> = Vec::new();
    for j in (0..n).filter(|&j| free[j]) {
        let Some(r) = rows.iter().position(|row| !row[j].is_zero()) else { continue };
        let mut row = rows.remove(r);
        let inv = row[j].recip();
        for v in row.iter_mut() {
            *v *= &inv;
        }
        for other in rows.iter_mut().chain(defs.iter_mut().map(|(_, r)| r)) {
            let t = other[j].clone();
            if !t.is_zero() {
                for (o, v) in other.iter_mut().zip(&row) {
                    *o -= &t * v;
                }
            }
        }
        defs.push((j, row));
    }

    let cons: Vec<usize> = (0..n).filter(|&j| !free[j]).collect();
    let nc = cons.len();
    let mut w: Vec<Vec<BigRational>> = rows.iter().map(|r| cons.iter().map(|&j| r[j].clone()).collect()).collect();
    let mut rhs: Vec<BigRational> = rows.iter().map(|r| r[n].clone()).collect();
    // x_cons = V y
    let mut v: Vec<Vec<BigRational>> = (0..nc)
        .map(|i| (0..nc).map(|j| if i == j { BigRational::one() } else { BigRational::zero() }).collect())
        .collect();
    let mut used = vec![false; w.len()];
    let mut pivots: Vec<(usize, usize)> = Vec::new();
    let mut k = 0;
    while k < nc {
        let Some(r) = (0..w.len()).find(|&r| !used[r] && w[r][k..].iter().any(|c| !c.is_zero())) else { break };
        let c = (k..nc)
            .filter(|&c| !w[r][c].is_zero())
            .min_by_key(|&c| (valuation(&w[r][c], &pb), c))
            .expect("nonzero entry");
        for row in w.iter_mut().chain(v.iter_mut()) {
            row.swap(k, c);
        }
        let inv = w[r][k].recip();
        for e in w[r].iter_mut() {
            *e *= &inv;
        }
        rhs[r] *= &inv;
        for j in k + 1..nc {
            let t = w[r][j].clone();
            if t.is_zero() {
                continue;
            }
            for row in w.iter_mut().chain(v.iter_mut()) {
                let sub = &t * &row[k];
                row[j] -= sub;
            }
        }
        for i in 0..w.len() {
            if i == r || w[i][k].is_zero() {
                continue;
            }
            let t = w[i][k].clone();
            for j in 0..nc {
                let sub = &t * &w[r][j];
                w[i][j] -= sub;
            }
            let sub = &t * &rhs[r];
            rhs[i] -= sub;
        }
        used[r] = true;
        pivots.push((r, k));
        k += 1;
    }
    if (0..w.len()).any(|i| !used[i] && !rhs[i].is_zero()) {
        return None;
    }
    let mut y = vec![BigRational::zero(); nc];
    for &(r, k) in &pivots {
        if !is_local_integer(&rhs[r], &pb) {
            return None;
        }
        y[k] = rhs[r].clone();
    }
    for (i, &j) in cons.iter().enumerate() {
        x[j] = (0..nc).fold(BigRational::zero(), |acc, t| acc + &v[i][t] * &y[t]);
    }
    for (j, row) in defs.iter().rev() {
        let mut val = row[n].clone();
        for (t, coef) in row[..n].iter().enumerate() {
            if t != *j && !coef.is_zero() {
                val -= coef * &x[t];
            }
        }
        x[*j] = val;
    }
    Some(x)
}
