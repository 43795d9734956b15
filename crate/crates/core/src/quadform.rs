//! Quadratic forms `M(n) = (nA)·n + u·n + v` over 𝔽_p: rank, normalization,
//! perp spaces, isotropy and restriction to affine subspaces.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ffcore::{FpMatrix, PrimeField};
use crate::fpoly::FpMultiPoly;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QuadForm {
    field: PrimeField,
    a: FpMatrix,
    u: Vec<u64>,
    v: u64,
}

/// `V + c` with `V` spanned by linearly independent rows.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AffineSubspace {
    field: PrimeField,
    dim_ambient: usize,
    basis: Vec<Vec<u64>>,
    offset: Vec<u64>,
}

/// Witness that `M(n R + shift) = c n₁² + n₂² + … + n_{d′}² + c′ n_{d′+1} − λ`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NormalizationCert {
    pub r: Vec<Vec<u64>>,
    pub shift: Vec<u64>,
    pub c: u64,
    pub cprime: u64,
    pub lambda: u64,
    pub dprime: usize,
}

#[derive(Serialize, Deserialize)]
struct QuadFormJson {
    p: u64,
    #[serde(rename = "A")]
    a: Vec<Vec<i64>>,
    u: Vec<i64>,
    v: i64,
}

#[derive(Serialize, Deserialize)]
struct SubspaceJson {
    basis: Vec<Vec<i64>>,
    offset: Vec<i64>,
}

impl QuadForm {
    pub fn new(a: FpMatrix, u: Vec<u64>, v: u64) -> Result<Self> {
        if !a.is_symmetric() {
            return Err(Error::NotSymmetric);
        }
        if u.len() != a.rows() {
            return Err(Error::Dimension("linear part length".into()));
        }
        let field = a.field();
        let u = u.into_iter().map(|x| field.reduce(x)).collect();
        Ok(QuadForm { field, a, u, v: field.reduce(v) })
    }

    pub fn from_i64(field: PrimeField, a: &[Vec<i64>], u: &[i64], v: i64) -> Result<Self> {
        let m = FpMatrix::from_i64_rows(field, a)?;
        let u = u.iter().map(|&x| field.reduce_i64(x)).collect();
        Self::new(m, u, field.reduce_i64(v))
    }

    /// `Σ a_i n_i² + u·n + v`.
    pub fn diagonal(field: PrimeField, diag: &[i64], u: &[i64], v: i64) -> Result<Self> {
        let d = diag.len();
        let rows: Vec<Vec<i64>> =
            (0..d).map(|i| (0..d).map(|j| if i == j { diag[i] } else { 0 }).collect()).collect();
        Self::from_i64(field, &rows, u, v)
    }

    /// `n·n − r`.
    pub fn sphere(field: PrimeField, d: usize, r: u64) -> Self {
        let a = FpMatrix::identity(field, d);
        QuadForm { field, a, u: vec![0; d], v: field.neg(field.reduce(r)) }
    }

    /// Reads a polynomial of degree at most 2.
    pub fn from_poly(f: &FpMultiPoly) -> Result<Self> {
        if f.degree() > 2 {
            return Err(Error::DegreeTooLarge { degree: f.degree(), bound: 2 });
        }
        let field = f.field();
        let d = f.nvars();
        let half = field.inv(2);
        let mut a = FpMatrix::zeros(field, d, d);
        let mut u = vec![0; d];
        let mut v = 0;
        for (m, &c) in f.terms() {
            let nz: Vec<usize> = (0..d).filter(|&i| m[i] > 0).collect();
            match (nz.len(), crate::fpoly::total(m)) {
                (0, _) => v = c,
                (1, 1) => u[nz[0]] = c,
                (1, 2) => a.set(nz[0], nz[0], c),
                (2, 2) => {
                    let h = field.mul(c, half);
                    a.set(nz[0], nz[1], h);
                    a.set(nz[1], nz[0], h);
                }
                _ => unreachable!(),
            }
        }
        Self::new(a, u, v)
    }

    pub fn from_json(v: &serde_json::Value) -> Result<Self> {
        let j: QuadFormJson = serde_json::from_value(v.clone()).map_err(|e| Error::Parse(e.to_string()))?;
        let field = PrimeField::new(j.p)?;
        Self::from_i64(field, &j.a, &j.u, j.v)
    }

    pub fn to_json(&self) -> serde_json::Value {
        let j = QuadFormJson {
            p: self.field.p(),
            a: self.a.to_rows().iter().map(|r| r.iter().map(|&x| x as i64).collect()).collect(),
            u: self.u.iter().map(|&x| x as i64).collect(),
            v: self.v as i64,
        };
        serde_json::to_value(j).unwrap()
    }

    pub fn field(&self) -> PrimeField {
        self.field
    }
    pub fn dim(&self) -> usize {
        self.a.rows()
    }
    pub fn matrix(&self) -> &FpMatrix {
        &self.a
    }
    pub fn linear(&self) -> &[u64] {
        &self.u
    }
    pub fn constant(&self) -> u64 {
        self.v
    }

    pub fn rank(&self) -> usize {
        self.a.rank()
    }

    pub fn is_degenerate(&self) -> bool {
        self.rank() < self.dim()
    }

    pub fn is_pure(&self) -> bool {
        self.u.iter().all(|&x| x == 0)
    }

    pub fn is_homogeneous(&self) -> bool {
        self.is_pure() && self.v == 0
    }

    pub fn eval(&self, n: &[u64]) -> u64 {
        let f = self.field;
        let na = self.a.vec_mul(n);
        f.add(f.add(f.dot(&na, n), f.dot(&self.u, n)), self.v)
    }

    /// `(xA)·y`.
    pub fn bilinear(&self, x: &[u64], y: &[u64]) -> u64 {
        self.field.dot(&self.a.vec_mul(x), y)
    }

    /// Gradient `2nA + u` of `M` at `n`.
    pub fn gradient(&self, n: &[u64]) -> Vec<u64> {
        let f = self.field;
        self.a.vec_mul(n).iter().zip(&self.u).map(|(&x, &y)| f.add(f.mul(2, x), y)).collect()
    }

    pub fn to_poly(&self) -> FpMultiPoly {
        let f = self.field;
        let d = self.dim();
        let mut out = FpMultiPoly::zero(f, d);
        for i in 0..d {
            for j in i..d {
                let a = self.a.get(i, j);
                if a == 0 {
                    continue;
                }
                let mut m = vec![0; d];
                m[i] += 1;
                m[j] += 1;
                out.add_term(m, if i == j { a } else { f.mul(2, a) });
            }
            let mut m = vec![0; d];
            m[i] = 1;
            out.add_term(m, self.u[i]);
        }
        out.add_term(vec![0; d], self.v);
        out
    }

    /// Pullback along `y ↦ yS + s`, with `S` of shape k×d.
    pub fn pullback(&self, s: &FpMatrix, shift: &[u64]) -> Result<QuadForm> {
        if s.cols() != self.dim() || shift.len() != self.dim() {
            return Err(Error::Dimension("pullback shape".into()));
        }
        let f = self.field;
        let a2 = s.mul(&self.a)?.mul(&s.transpose())?;
        let sa = self.a.vec_mul(shift);
        let lin: Vec<u64> = sa.iter().zip(&self.u).map(|(&x, &y)| f.add(f.mul(2, x), y)).collect();
        let u2 = s.mul_vec(&lin);
        Self::new(a2, u2, self.eval(shift))
    }

    /// The form restricted to `S` in the coordinates of its basis.
    pub fn restrict(&self, sub: &AffineSubspace) -> Result<QuadForm> {
        let b = FpMatrix::from_rows_sized(self.field, self.dim(), &sub.basis)?;
        self.pullback(&b, &sub.offset)
    }

    /// Constructive normalization: symmetric elimination, completing squares,
    /// scaling to 1 or c, merging c-pairs and absorbing the degenerate linear part.
    pub fn normalize(&self) -> NormalizationCert {
        let f = self.field;
        let d = self.dim();
        let nonres = f.smallest_nonresidue();

        // x = y·S diagonalizes: S A Sᵀ diagonal
        let mut b = self.a.clone();
        let mut s = FpMatrix::identity(f, d);
        let mut rank = 0;
        for i in 0..d {
            let diag = (i..d).find(|&j| b.get(j, j) != 0);
            let pivot = match diag {
                Some(j) => Some(j),
                None => {
                    let off = (i..d).flat_map(|j| (j + 1..d).map(move |k| (j, k))).find(|&(j, k)| b.get(j, k) != 0);
                    off.map(|(j, k)| {
                        // row_j += row_k makes the (j,j) entry 2 b_jk ≠ 0
                        congruence_add(&mut b, &mut s, j, k, 1);
                        j
                    })
                }
            };
            let Some(j) = pivot else { break };
            congruence_swap(&mut b, &mut s, i, j);
            let inv = f.inv(b.get(i, i));
            for k in i + 1..d {
                let factor = f.mul(b.get(k, i), inv);
                if factor != 0 {
                    congruence_add(&mut b, &mut s, k, i, f.neg(factor));
                }
            }
            rank += 1;
        }

        let mut cur = self.pullback(&s, &vec![0; d]).expect("square");
        let mut total_r = s;
        let mut total_shift = vec![0; d];
        let mut apply = |cur: &mut QuadForm, sm: FpMatrix, sh: Vec<u64>| {
            // composing x = y S + s with n = x T + t gives n = y (S T) + (s T + t)
            let new_shift: Vec<u64> =
                total_r.vec_mul(&sh).iter().zip(&total_shift).map(|(&a, &b)| f.add(a, b)).collect();
            total_r = sm.mul(&total_r).expect("square");
            total_shift = new_shift;
            *cur = cur.pullback(&sm, &sh).expect("square");
        };

        // complete squares on the nondegenerate block
        let mut sh = vec![0; d];
        for i in 0..rank {
            let a = cur.a.get(i, i);
            sh[i] = f.neg(f.div(cur.u[i], f.mul(2, a)));
        }
        apply(&mut cur, FpMatrix::identity(f, d), sh);

        // scale diagonal entries to 1 or c
        let mut sm = FpMatrix::identity(f, d);
        let mut is_c = vec![false; rank];
        for (i, flag) in is_c.iter_mut().enumerate() {
            let a = cur.a.get(i, i);
            let t = if f.legendre(a) == 1 {
                f.inv(f.sqrt(a).unwrap())
            } else {
                *flag = true;
                f.sqrt(f.div(nonres, a)).unwrap()
            };
            sm.set(i, i, t);
        }
        apply(&mut cur, sm, vec![0; d]);

        // c x² + c y² = X² + Y² under (x, y) = ((aX + Y)/c, (X − aY)/c), a² + 1 = c
        let cs: Vec<usize> = (0..rank).filter(|&i| is_c[i]).collect();
        if cs.len() >= 2 {
            let a = f.sqrt(f.sub(nonres, 1)).expect("c − 1 is a square");
            let cinv = f.inv(nonres);
            let mut sm = FpMatrix::identity(f, d);
            for pair in cs.chunks(2).filter(|c| c.len() == 2) {
                let (i, j) = (pair[0], pair[1]);
                sm.set(i, i, f.mul(a, cinv));
                sm.set(j, i, cinv);
                sm.set(i, j, cinv);
                sm.set(j, j, f.neg(f.mul(a, cinv)));
            }
            apply(&mut cur, sm, vec![0; d]);
        }
        let c = if cs.len() % 2 == 1 {
            let last = *cs.last().unwrap();
            if last != 0 {
                let mut sm = FpMatrix::identity(f, d);
                sm.set(0, 0, 0);
                sm.set(last, last, 0);
                sm.set(0, last, 1);
                sm.set(last, 0, 1);
                apply(&mut cur, sm, vec![0; d]);
            }
            nonres
        } else {
            1
        };

        // degenerate block: b·x becomes x_{d′+1}
        let mut cprime = 0;
        if let Some(k) = (rank..d).find(|&i| cur.u[i] != 0) {
            let m = d - rank;
            let bvec: Vec<u64> = cur.u[rank..].to_vec();
            let mut h = FpMatrix::zeros(f, m, m);
            for (i, &bi) in bvec.iter().enumerate() {
                h.set(i, 0, bi);
            }
            let mut col = 1;
            for j in 0..m {
                if j == k - rank {
                    continue;
                }
                h.set(j, col, 1);
                col += 1;
            }
            let g = h.inverse().expect("first column nonzero at a pivot-free row");
            let mut sm = FpMatrix::identity(f, d);
            for i in 0..m {
                for j in 0..m {
                    sm.set(rank + i, rank + j, g.get(i, j));
                }
            }
            apply(&mut cur, sm, vec![0; d]);
            cprime = cur.u[rank];
        }
        let lambda = f.neg(cur.v);
        NormalizationCert {
            r: total_r.to_rows(),
            shift: total_shift,
            c: if rank == 0 { 1 } else { c },
            cprime,
            lambda,
            dprime: rank,
        }
    }

    /// `V^{⊥_M} = {n : (mA)·n = 0 for all m ∈ V}` for `V` spanned by `basis`.
    pub fn perp(&self, basis: &[Vec<u64>]) -> Result<Vec<Vec<u64>>> {
        let d = self.dim();
        if basis.is_empty() {
            return Ok(standard_basis(d));
        }
        let b = FpMatrix::from_rows_sized(self.field, d, basis)?;
        Ok(b.mul(&self.a)?.null_space())
    }

    pub fn gram(&self, hs: &[Vec<u64>]) -> FpMatrix {
        let k = hs.len();
        let mut g = FpMatrix::zeros(self.field, k, k);
        for i in 0..k {
            for j in 0..k {
                g.set(i, j, self.bilinear(&hs[i], &hs[j]));
            }
        }
        g
    }

    /// True iff the Gram matrix `((h_i A)·h_j)` is singular.
    pub fn isotropic_test(&self, hs: &[Vec<u64>]) -> bool {
        if hs.is_empty() {
            return false;
        }
        self.gram(hs).determinant().unwrap() == 0
    }

    /// Rank of `M` restricted to `V + c`.
    pub fn restricted_rank(&self, sub: &AffineSubspace) -> Result<usize> {
        Ok(self.restrict(sub)?.rank())
    }

    /// A `k`-dimensional subspace on which `M` is non-isotropic.
    pub fn find_nonisotropic(&self, k: usize) -> Result<Vec<Vec<u64>>> {
        let rank = self.rank();
        if k > rank {
            return Err(Error::RankHypothesisFailed { rank, needed: k });
        }
        let cert = self.normalize();
        Ok(cert.r[..k].to_vec())
    }
}

fn congruence_add(b: &mut FpMatrix, s: &mut FpMatrix, i: usize, j: usize, c: u64) {
    // row_i += c row_j and col_i += c col_j, recorded in S
    let f = b.field();
    let n = b.rows();
    for k in 0..n {
        let v = f.add(b.get(i, k), f.mul(c, b.get(j, k)));
        b.set(i, k, v);
    }
    for k in 0..n {
        let v = f.add(b.get(k, i), f.mul(c, b.get(k, j)));
        b.set(k, i, v);
    }
    for k in 0..s.cols() {
        let v = f.add(s.get(i, k), f.mul(c, s.get(j, k)));
        s.set(i, k, v);
    }
}

fn congruence_swap(b: &mut FpMatrix, s: &mut FpMatrix, i: usize, j: usize) {
    if i == j {
        return;
    }
    b.swap_rows(i, j);
    let n = b.rows();
    for k in 0..n {
        let (x, y) = (b.get(k, i), b.get(k, j));
        b.set(k, i, y);
        b.set(k, j, x);
    }
    s.swap_rows(i, j);
}

pub fn standard_basis(d: usize) -> Vec<Vec<u64>> {
    (0..d).map(|i| (0..d).map(|j| u64::from(i == j)).collect()).collect()
}

impl NormalizationCert {
    /// The standard form `c n₁² + n₂² + … + n_{d′}² + c′ n_{d′+1} − λ`.
    pub fn target(&self, field: PrimeField) -> FpMultiPoly {
        let d = self.shift.len();
        let mut out = FpMultiPoly::zero(field, d);
        for i in 0..self.dprime {
            let mut m = vec![0; d];
            m[i] = 2;
            out.add_term(m, if i == 0 { self.c } else { 1 });
        }
        if self.dprime < d {
            let mut m = vec![0; d];
            m[self.dprime] = 1;
            out.add_term(m, self.cprime);
        }
        out.add_term(vec![0; d], field.neg(self.lambda));
        out
    }

    /// Checks the identity `M(nR + shift) = target` as polynomials.
    pub fn verify(&self, m: &QuadForm) -> bool {
        let f = m.field();
        let Ok(r) = FpMatrix::from_rows(f, &self.r) else { return false };
        if r.rows() != m.dim() || r.determinant().unwrap_or(0) == 0 {
            return false;
        }
        if self.c == 0 {
            return false;
        }
        match m.pullback(&r, &self.shift) {
            Ok(q) => q.to_poly() == self.target(f),
            Err(_) => false,
        }
    }
}

impl AffineSubspace {
    pub fn new(field: PrimeField, dim_ambient: usize, basis: Vec<Vec<u64>>, offset: Vec<u64>) -> Result<Self> {
        if offset.len() != dim_ambient || basis.iter().any(|b| b.len() != dim_ambient) {
            return Err(Error::Dimension("subspace vectors must match the ambient dimension".into()));
        }
        let basis: Vec<Vec<u64>> =
            basis.into_iter().map(|b| b.into_iter().map(|x| field.reduce(x)).collect()).collect();
        let offset = offset.into_iter().map(|x| field.reduce(x)).collect();
        let m = FpMatrix::from_rows_sized(field, dim_ambient, &basis)?;
        if m.rank() != basis.len() {
            return Err(Error::DependentBasis);
        }
        Ok(AffineSubspace { field, dim_ambient, basis, offset })
    }

    pub fn full(field: PrimeField, d: usize) -> Self {
        AffineSubspace { field, dim_ambient: d, basis: standard_basis(d), offset: vec![0; d] }
    }

    pub fn from_json(field: PrimeField, d: usize, v: &serde_json::Value) -> Result<Self> {
        let j: SubspaceJson = serde_json::from_value(v.clone()).map_err(|e| Error::Parse(e.to_string()))?;
        let conv = |x: &Vec<i64>| x.iter().map(|&y| field.reduce_i64(y)).collect::<Vec<u64>>();
        Self::new(field, d, j.basis.iter().map(conv).collect(), conv(&j.offset))
    }

    pub fn to_json(&self) -> serde_json::Value {
        let j = SubspaceJson {
            basis: self.basis.iter().map(|r| r.iter().map(|&x| x as i64).collect()).collect(),
            offset: self.offset.iter().map(|&x| x as i64).collect(),
        };
        serde_json::to_value(j).unwrap()
    }

    pub fn field(&self) -> PrimeField {
        self.field
    }
    pub fn basis(&self) -> &[Vec<u64>] {
        &self.basis
    }
    pub fn offset(&self) -> &[u64] {
        &self.offset
    }
    pub fn dim(&self) -> usize {
        self.basis.len()
    }
    pub fn ambient_dim(&self) -> usize {
        self.dim_ambient
    }
    pub fn codim(&self) -> usize {
        self.dim_ambient - self.basis.len()
    }
    pub fn is_full(&self) -> bool {
        self.codim() == 0
    }

    /// `m B + c`.
    pub fn point(&self, m: &[u64]) -> Vec<u64> {
        let f = self.field;
        let mut out = self.offset.clone();
        for (coef, b) in m.iter().zip(&self.basis) {
            if *coef == 0 {
                continue;
            }
            for (o, &x) in out.iter_mut().zip(b) {
                *o = f.add(*o, f.mul(*coef, x));
            }
        }
        out
    }

    pub fn contains(&self, n: &[u64]) -> bool {
        let f = self.field;
        let diff: Vec<u64> = n.iter().zip(&self.offset).map(|(&a, &b)| f.sub(a, b)).collect();
        let mut rows = self.basis.clone();
        rows.push(diff);
        FpMatrix::from_rows_sized(f, self.dim_ambient, &rows).unwrap().rank() == self.dim()
    }
}

/// Outcome of the parallel-matrix check.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ParallelOutcome {
    /// Hypothesis holds on `W`, `v = 0` and `B = cA`.
    Parallel { c: u64 },
    /// `(nA)·w = 0` but `(nB + v)·w ≠ 0`.
    Witness { n: Vec<u64>, w: Vec<u64> },
}

/// Checks `(nA)·w = 0 ⇒ (nB + v)·w = 0` for all `n ∈ 𝔽_p^d`, `w ∈ W`; exact per `w` by linear algebra.
pub fn parallel_certificate(a: &FpMatrix, b: &FpMatrix, v: &[u64], w_set: &[Vec<u64>]) -> Result<ParallelOutcome> {
    let f = a.field();
    let d = a.rows();
    if !a.is_symmetric() || b.rows() != d || b.cols() != d || v.len() != d {
        return Err(Error::Dimension("parallel check needs square A, B of one size".into()));
    }
    let volume = (f.p() as f64).powi(d as i32);
    if volume > 1e7 {
        return Err(Error::BudgetExceeded { needed: volume, budget: 1e7 });
    }
    let rank = a.rank();
    if rank < 3 {
        return Err(Error::RankHypothesisFailed { rank, needed: 3 });
    }
    for w in w_set {
        let aw = a.mul_vec(w);
        let bw = b.mul_vec(w);
        let vw = f.dot(v, w);
        if vw != 0 {
            return Ok(ParallelOutcome::Witness { n: vec![0; d], w: w.clone() });
        }
        // need bw ∈ span(aw); otherwise some n ⟂ aw has n·bw ≠ 0
        let a_row = FpMatrix::from_rows(f, &[aw.clone()])?;
        if let Some(n) = a_row.null_space().into_iter().find(|n| f.dot(n, &bw) != 0) {
            return Ok(ParallelOutcome::Witness { n, w: w.clone() });
        }
    }
    if v.iter().any(|&x| x != 0) {
        return Err(Error::TheoremRegime("hypothesis holds on W but v ≠ 0".into()));
    }
    let (i, j) = (0..d)
        .flat_map(|i| (0..d).map(move |j| (i, j)))
        .find(|&(i, j)| a.get(i, j) != 0)
        .expect("rank ≥ 3");
    let c = f.div(b.get(i, j), a.get(i, j));
    for i in 0..d {
        for j in 0..d {
            if b.get(i, j) != f.mul(c, a.get(i, j)) {
                return Err(Error::TheoremRegime("hypothesis holds on W but B is not a multiple of A".into()));
            }
        }
    }
    Ok(ParallelOutcome::Parallel { c })
}
