//! Block quadratic functions `F(n₁, …, n_k) = Σ_{i≤j} b_{i,j}(n_iA)·n_j + Σ v_i·n_i + u`,
//! families of them, standard representations, projections, Fubini averages and
//! irreducibility probes on their common zero sets.

use std::collections::BTreeMap;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::counting::{all_points, point_at, point_index, CountReport, BOUND_CONSTANT};
use crate::error::{Error, Result};
use crate::ffcore::{FpMatrix, PrimeField};
use crate::fpoly::FpMultiPoly;
use crate::quadform::QuadForm;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MQuadFn {
    k: usize,
    d: usize,
    /// `b[i][j]` for `i ≤ j`, 0-based blocks.
    b: Vec<Vec<u64>>,
    v: Vec<Vec<u64>>,
    u: u64,
}

impl MQuadFn {
    pub fn zero(k: usize, d: usize) -> Self {
        MQuadFn { k, d, b: vec![vec![0; k]; k], v: vec![vec![0; d]; k], u: 0 }
    }

    pub fn constant(k: usize, d: usize, u: u64) -> Self {
        let mut f = Self::zero(k, d);
        f.u = u;
        f
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Coefficient of `(n_iA)·n_j`, 1-based, either order.
    pub fn b(&self, i: usize, j: usize) -> u64 {
        let (a, c) = if i <= j { (i, j) } else { (j, i) };
        self.b[a - 1][c - 1]
    }

    pub fn set_b(&mut self, i: usize, j: usize, c: u64) {
        let (a, c2) = if i <= j { (i, j) } else { (j, i) };
        self.b[a - 1][c2 - 1] = c;
    }

    /// Linear coefficient vector of block `i`, 1-based.
    pub fn v(&self, i: usize) -> &[u64] {
        &self.v[i - 1]
    }

    pub fn set_v(&mut self, i: usize, v: Vec<u64>) {
        self.v[i - 1] = v;
    }

    pub fn u(&self) -> u64 {
        self.u
    }

    pub fn set_u(&mut self, u: u64) {
        self.u = u;
    }

    /// `M` on block `i` as a function of `k` blocks.
    pub fn from_form(m: &QuadForm, k: usize, i: usize) -> Self {
        let mut f = Self::zero(k, m.dim());
        f.set_b(i, i, 1);
        f.set_v(i, m.linear().to_vec());
        f.u = m.constant();
        f
    }

    pub fn is_pure(&self) -> bool {
        self.v.iter().all(|x| x.iter().all(|&c| c == 0))
    }

    pub fn is_constant(&self) -> bool {
        self.is_pure() && self.b.iter().all(|r| r.iter().all(|&c| c == 0))
    }

    /// Largest 1-based block the function depends on.
    pub fn max_block(&self) -> Option<usize> {
        (1..=self.k).rev().find(|&i| self.depends_on_block(i))
    }

    pub fn depends_on_block(&self, i: usize) -> bool {
        (1..=self.k).any(|j| self.b(i, j) != 0) || self.v(i).iter().any(|&c| c != 0)
    }

    /// `F = Σ_{i≤k′} b_i (n_{k′}A)·n_i + u`.
    pub fn is_nice_form(&self) -> bool {
        if !self.is_pure() {
            return false;
        }
        let pairs = self.pairs();
        let Some(&(_, top)) = pairs.iter().max_by_key(|p| p.1) else { return true };
        pairs.iter().all(|&(_, j)| j == top)
    }

    /// 1-based `(i, j)` with `i ≤ j` and `b_{i,j} ≠ 0`.
    pub fn pairs(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for i in 1..=self.k {
            for j in i..=self.k {
                if self.b(i, j) != 0 {
                    out.push((i, j));
                }
            }
        }
        out
    }

    /// Evaluation with the products `n_iA` supplied.
    pub fn eval_with(&self, field: PrimeField, blocks: &[Vec<u64>], na: &[Vec<u64>]) -> u64 {
        let mut acc = self.u;
        for i in 0..self.k {
            for j in i..self.k {
                let c = self.b[i][j];
                if c != 0 {
                    acc = field.add(acc, field.mul(c, field.dot(&na[i], &blocks[j])));
                }
            }
            acc = field.add(acc, field.dot(&self.v[i], &blocks[i]));
        }
        acc
    }

    pub fn eval(&self, m: &QuadForm, blocks: &[Vec<u64>]) -> u64 {
        let na: Vec<Vec<u64>> = blocks.iter().map(|n| m.matrix().vec_mul(n)).collect();
        self.eval_with(m.field(), blocks, &na)
    }

    /// As a polynomial in `dk` variables, block `i` occupying `(i−1)d .. id`.
    pub fn to_poly(&self, m: &QuadForm) -> FpMultiPoly {
        let f = m.field();
        let d = self.d;
        let nv = d * self.k;
        let mut out = FpMultiPoly::zero(f, nv);
        for i in 0..self.k {
            for j in i..self.k {
                let c = self.b[i][j];
                if c == 0 {
                    continue;
                }
                for s in 0..d {
                    for t in 0..d {
                        let a = m.matrix().get(s, t);
                        if a == 0 {
                            continue;
                        }
                        let mut e = vec![0; nv];
                        e[i * d + s] += 1;
                        e[j * d + t] += 1;
                        out.add_term(e, f.mul(c, a));
                    }
                }
            }
            for s in 0..d {
                let mut e = vec![0; nv];
                e[i * d + s] = 1;
                out.add_term(e, self.v[i][s]);
            }
        }
        out.add_term(vec![0; nv], self.u);
        out
    }

    /// `(v_M(F), v′_M(F))`: sections for blocks `k, k−1, …, 1`, each `b_{i,i}, …, b_{i,1}, v_i`, then `u`.
    pub fn coeff_vectors(&self) -> (Vec<u64>, Vec<u64>) {
        let mut out = Vec::with_capacity(layout_len(self.k, self.d));
        for i in (1..=self.k).rev() {
            for j in (1..=i).rev() {
                out.push(self.b(j, i));
            }
            out.extend_from_slice(self.v(i));
        }
        let vp = out.clone();
        out.push(self.u);
        (out, vp)
    }

    pub fn from_coeff_vector(k: usize, d: usize, w: &[u64]) -> Self {
        let mut f = Self::zero(k, d);
        let mut pos = 0;
        for i in (1..=k).rev() {
            for j in (1..=i).rev() {
                f.set_b(j, i, w[pos]);
                pos += 1;
            }
            f.set_v(i, w[pos..pos + d].to_vec());
            pos += d;
        }
        f.u = w[pos];
        f
    }

    /// Block that owns coefficient position `col` of `v_M`.
    pub fn block_of_column(k: usize, d: usize, col: usize) -> Option<usize> {
        let mut start = 0;
        for i in (1..=k).rev() {
            let len = i + d;
            if col < start + len {
                return Some(i);
            }
            start += len;
        }
        None
    }

    fn to_json(&self) -> serde_json::Value {
        let mut b = serde_json::Map::new();
        for (i, j) in self.pairs() {
            b.insert(format!("{i},{j}"), serde_json::json!(self.b(i, j)));
        }
        serde_json::json!({ "b": b, "v": self.v, "u": self.u })
    }

    fn from_json(v: &serde_json::Value, k: usize, d: usize, field: PrimeField) -> Result<Self> {
        let mut f = Self::zero(k, d);
        if let Some(b) = v.get("b").and_then(|b| b.as_object()) {
            for (key, val) in b {
                let (i, j) = key
                    .split_once(',')
                    .and_then(|(a, c)| Some((a.trim().parse::<usize>().ok()?, c.trim().parse::<usize>().ok()?)))
                    .ok_or_else(|| Error::Parse(format!("bad pair key {key}")))?;
                if i == 0 || j == 0 || i > k || j > k {
                    return Err(Error::Parse(format!("pair {key} out of range")));
                }
                let c = val.as_i64().ok_or_else(|| Error::Parse("b entry must be an integer".into()))?;
                f.set_b(i, j, field.reduce_i64(c));
            }
        }
        if let Some(vs) = v.get("v") {
            let rows: Vec<Vec<i64>> =
                serde_json::from_value(vs.clone()).map_err(|e| Error::Parse(format!("v: {e}")))?;
            if rows.len() != k || rows.iter().any(|r| r.len() != d) {
                return Err(Error::Dimension("linear parts must be k vectors of length d".into()));
            }
            for (i, r) in rows.iter().enumerate() {
                f.v[i] = r.iter().map(|&x| field.reduce_i64(x)).collect();
            }
        }
        f.u = field.reduce_i64(v.get("u").and_then(|u| u.as_i64()).unwrap_or(0));
        Ok(f)
    }
}

fn layout_len(k: usize, d: usize) -> usize {
    k * (k + 1) / 2 + k * d + 1
}

/// An `(M, k)`-family and its common zero set in `(𝔽_p^d)^k`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MFamily {
    pub m: QuadForm,
    pub k: usize,
    pub functions: Vec<MQuadFn>,
}

impl MFamily {
    pub fn new(m: QuadForm, k: usize, functions: Vec<MQuadFn>) -> Result<Self> {
        let d = m.dim();
        if functions.iter().any(|f| f.k != k || f.d != d) {
            return Err(Error::Dimension("family members must share k and d".into()));
        }
        Ok(MFamily { m, k, functions })
    }

    pub fn empty(m: QuadForm, k: usize) -> Self {
        MFamily { m, k, functions: Vec::new() }
    }

    pub fn field(&self) -> PrimeField {
        self.m.field()
    }

    pub fn d(&self) -> usize {
        self.m.dim()
    }

    pub fn len(&self) -> usize {
        self.functions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.functions.is_empty()
    }

    pub fn contains(&self, blocks: &[Vec<u64>]) -> bool {
        let na: Vec<Vec<u64>> = blocks.iter().map(|n| self.m.matrix().vec_mul(n)).collect();
        self.functions.iter().all(|f| f.eval_with(self.field(), blocks, &na) == 0)
    }

    fn matrices(&self) -> (FpMatrix, FpMatrix) {
        let f = self.field();
        let d = self.d();
        let n = layout_len(self.k, d);
        let (full, prime): (Vec<_>, Vec<_>) = self.functions.iter().map(|g| g.coeff_vectors()).unzip();
        (
            FpMatrix::from_rows_sized(f, n, &full).expect("row length"),
            FpMatrix::from_rows_sized(f, n - 1, &prime).expect("row length"),
        )
    }

    /// `{M(n), M(n+h_i) − M(n), (h_iA)·h_j : i < j}` on blocks `(n, h₁, …, h_s)`.
    pub fn gowers(m: &QuadForm, s: usize) -> Self {
        let k = s + 1;
        let d = m.dim();
        let f = m.field();
        let mut fs = vec![MQuadFn::from_form(m, k, 1)];
        for i in 2..=k {
            let mut g = MQuadFn::zero(k, d);
            g.set_b(1, i, 2 % f.p());
            g.set_b(i, i, 1);
            g.set_v(i, m.linear().to_vec());
            fs.push(g);
        }
        for i in 2..=k {
            for j in i + 1..=k {
                let mut g = MQuadFn::zero(k, d);
                g.set_b(i, j, 1);
                fs.push(g);
            }
        }
        MFamily { m: m.clone(), k, functions: fs }
    }

    /// Drops blocks outside `keep` (1-based, increasing); members must not depend on them.
    pub fn restrict_blocks(&self, keep: &[usize]) -> Result<Self> {
        let d = self.d();
        let k2 = keep.len();
        let mut out = Vec::new();
        for g in &self.functions {
            if (1..=self.k).any(|i| !keep.contains(&i) && g.depends_on_block(i)) {
                return Err(Error::Dimension("member depends on a dropped block".into()));
            }
            let mut h = MQuadFn::zero(k2, d);
            for (a, &i) in keep.iter().enumerate() {
                for (c, &j) in keep.iter().enumerate().skip(a) {
                    h.set_b(a + 1, c + 1, g.b(i, j));
                }
                h.set_v(a + 1, g.v(i).to_vec());
            }
            h.u = g.u;
            out.push(h);
        }
        Ok(MFamily { m: self.m.clone(), k: k2, functions: out })
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "k": self.k,
            "functions": self.functions.iter().map(|f| f.to_json()).collect::<Vec<_>>(),
        })
    }

    pub fn from_json(m: QuadForm, v: &serde_json::Value) -> Result<Self> {
        let k = v.get("k").and_then(|k| k.as_u64()).ok_or_else(|| Error::Parse("missing k".into()))? as usize;
        let list = v
            .get("functions")
            .and_then(|f| f.as_array())
            .ok_or_else(|| Error::Parse("missing functions".into()))?;
        let fs = list.iter().map(|x| MQuadFn::from_json(x, k, m.dim(), m.field())).collect::<Result<Vec<_>>>()?;
        Self::new(m, k, fs)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Niceness {
    /// After permuting blocks by `permutation` (new position of old block `i` is `permutation[i−1]`)
    /// and translating by `offset`, every member is of nice form.
    Nice { permutation: Vec<usize>, offset: Vec<Vec<u64>> },
    /// No translate-then-permute change found; general niceness is not decided.
    Unknown,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Flags {
    pub pure: bool,
    pub consistent: bool,
    pub independent: bool,
    pub nice: Niceness,
}

pub fn classify(fam: &MFamily) -> Flags {
    let (full, prime) = fam.matrices();
    let rp = if fam.is_empty() { 0 } else { prime.rank() };
    let rf = if fam.is_empty() { 0 } else { full.rank() };
    Flags {
        pure: fam.functions.iter().all(|f| f.is_pure()),
        consistent: rf == rp,
        independent: rp == fam.len(),
        nice: detect_niceness(fam),
    }
}

/// Translation killing all linear parts, then a block order placing each member's center last.
fn detect_niceness(fam: &MFamily) -> Niceness {
    let f = fam.field();
    let d = fam.d();
    let k = fam.k;
    if k > 8 {
        return Niceness::Unknown;
    }
    // linear part of F(n + c) in block i: v_i + Σ_j β_ij A c_j, with β_ii = 2 b_ii
    let a = fam.m.matrix();
    let mut rows = Vec::new();
    let mut rhs = Vec::new();
    for g in &fam.functions {
        for i in 1..=k {
            for t in 0..d {
                let mut row = vec![0u64; d * k];
                for j in 1..=k {
                    let beta = if i == j { f.mul(2, g.b(i, i)) } else { g.b(i, j) };
                    if beta == 0 {
                        continue;
                    }
                    for s in 0..d {
                        row[(j - 1) * d + s] = f.add(row[(j - 1) * d + s], f.mul(beta, a.get(t, s)));
                    }
                }
                rows.push(row);
                rhs.push(f.neg(g.v(i)[t]));
            }
        }
    }
    let offset: Vec<u64> = if rows.is_empty() {
        vec![0; d * k]
    } else {
        match FpMatrix::from_rows_sized(f, d * k, &rows).and_then(|mm| mm.solve(&rhs)) {
            Ok(sol) => sol.particular,
            Err(_) => return Niceness::Unknown,
        }
    };
    let pair_sets: Vec<Vec<(usize, usize)>> = fam.functions.iter().map(|g| g.pairs()).collect();
    let mut perm: Vec<usize> = (1..=k).collect();
    loop {
        let ok = pair_sets.iter().all(|pairs| {
            // a center block present in every pair, ranked above its partners
            let Some(&(a0, b0)) = pairs.first() else { return true };
            [a0, b0].iter().any(|&c| {
                pairs.iter().all(|&(i, j)| {
                    (i == c || j == c) && {
                        let other = if i == c { j } else { i };
                        other == c || perm[other - 1] < perm[c - 1]
                    }
                })
            })
        });
        if ok {
            return Niceness::Nice {
                permutation: perm,
                offset: offset.chunks(d).map(|c| c.to_vec()).collect(),
            };
        }
        if !next_permutation(&mut perm) {
            return Niceness::Unknown;
        }
    }
}

fn next_permutation(v: &mut [usize]) -> bool {
    let n = v.len();
    if n < 2 {
        return false;
    }
    let mut i = n - 1;
    while i > 0 && v[i - 1] >= v[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = n - 1;
    while v[j] <= v[i - 1] {
        j -= 1;
    }
    v.swap(i - 1, j);
    v[i..].reverse();
    true
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MRepresentation {
    /// Members in row-echelon order, highest block first.
    pub family: MFamily,
    /// `(r₁, …, r_k)`.
    pub dimension_vector: Vec<usize>,
    pub flags: Flags,
    pub total_codim: usize,
}

/// Row-reduces the coefficient vectors; the nonzero rows form an independent representation of the same set.
pub fn standard_rep(fam: &MFamily) -> Result<MRepresentation> {
    let d = fam.d();
    let k = fam.k;
    let mut functions = Vec::new();
    let mut dims = vec![0; k];
    if !fam.is_empty() {
        let (full, _) = fam.matrices();
        let red = full.rref();
        let last = layout_len(k, d) - 1;
        if red.pivots.contains(&last) {
            return Err(Error::Inconsistent);
        }
        for (row, &pc) in red.pivots.iter().enumerate() {
            let block = MQuadFn::block_of_column(k, d, pc).expect("pivot inside a block section");
            dims[block - 1] += 1;
            functions.push(MQuadFn::from_coeff_vector(k, d, red.matrix.row(row)));
        }
    }
    let family = MFamily { m: fam.m.clone(), k, functions };
    let flags = classify(&family);
    Ok(MRepresentation { total_codim: family.len(), family, dimension_vector: dims, flags })
}

pub fn total_codim(fam: &MFamily) -> Result<usize> {
    Ok(standard_rep(fam)?.total_codim)
}

/// `(𝒥_I, 𝒥′_I)` for 1-based blocks `I`: row reduction with the columns of blocks outside `I` first.
/// `alternate` reverses the order of those columns, giving a different split of the same ideal.
pub fn i_projection(fam: &MFamily, blocks: &[usize], alternate: bool) -> Result<(MFamily, MFamily)> {
    let f = fam.field();
    let d = fam.d();
    let k = fam.k;
    if !classify(fam).consistent {
        return Err(Error::Inconsistent);
    }
    let inside = |i: usize| blocks.contains(&i);
    // column ownership: pair (j, i) or linear part of i
    let mut outside_cols = Vec::new();
    let mut inside_cols = Vec::new();
    let mut col = 0;
    for i in (1..=k).rev() {
        for j in (1..=i).rev() {
            if inside(i) && inside(j) {
                inside_cols.push(col);
            } else {
                outside_cols.push(col);
            }
            col += 1;
        }
        for _ in 0..d {
            if inside(i) {
                inside_cols.push(col);
            } else {
                outside_cols.push(col);
            }
            col += 1;
        }
    }
    inside_cols.push(col);
    if alternate {
        outside_cols.reverse();
    }
    let n_out = outside_cols.len();
    let order: Vec<usize> = outside_cols.into_iter().chain(inside_cols).collect();
    let mut proj = MFamily::empty(fam.m.clone(), k);
    let mut rest = MFamily::empty(fam.m.clone(), k);
    if fam.is_empty() {
        return Ok((proj, rest));
    }
    let rows: Vec<Vec<u64>> = fam
        .functions
        .iter()
        .map(|g| {
            let (w, _) = g.coeff_vectors();
            order.iter().map(|&c| w[c]).collect()
        })
        .collect();
    let red = FpMatrix::from_rows_sized(f, order.len(), &rows)?.rref();
    for (r, &pc) in red.pivots.iter().enumerate() {
        let mut w = vec![0u64; order.len()];
        for (pos, &c) in order.iter().enumerate() {
            w[c] = red.matrix.get(r, pos);
        }
        let g = MQuadFn::from_coeff_vector(k, d, &w);
        if pc < n_out {
            rest.functions.push(g);
        } else {
            proj.functions.push(g);
        }
    }
    Ok((proj, rest))
}

fn check_enumeration(fam: &MFamily, budget: f64) -> Result<()> {
    let needed = (fam.field().p() as f64).powi((fam.d() * fam.k) as i32);
    if needed > budget {
        return Err(Error::BudgetExceeded { needed, budget });
    }
    Ok(())
}

/// Members grouped by their largest block (0-based); constants that vanish are dropped.
fn by_level(fam: &MFamily) -> Result<Vec<Vec<MQuadFn>>> {
    let mut levels = vec![Vec::new(); fam.k];
    for g in &fam.functions {
        match g.max_block() {
            Some(b) => levels[b - 1].push(g.clone()),
            None if g.u == 0 => {}
            None => return Err(Error::Inconsistent),
        }
    }
    Ok(levels)
}

struct Walker<'a> {
    field: PrimeField,
    m: &'a QuadForm,
    levels: Vec<Vec<MQuadFn>>,
    cube: Vec<Vec<u64>>,
}

impl<'a> Walker<'a> {
    fn new(fam: &'a MFamily) -> Result<Self> {
        let cube: Vec<Vec<u64>> = all_points(fam.field(), fam.d()).collect();
        Ok(Walker { field: fam.field(), m: &fam.m, levels: by_level(fam)?, cube })
    }
}

impl MQuadFn {
    fn eval_prefix(&self, field: PrimeField, blocks: &[Vec<u64>], na: &[Vec<u64>]) -> u64 {
        let len = blocks.len();
        let mut acc = self.u;
        for i in 0..len {
            for j in i..len {
                let c = self.b[i][j];
                if c != 0 {
                    acc = field.add(acc, field.mul(c, field.dot(&na[i], &blocks[j])));
                }
            }
            acc = field.add(acc, field.dot(&self.v[i], &blocks[i]));
        }
        acc
    }
}

/// All points of `V(𝒥)` in lexicographic order.
pub fn enumerate_mset(fam: &MFamily, budget: f64) -> Result<Vec<Vec<Vec<u64>>>> {
    let rep = standard_rep(fam)?;
    check_enumeration(fam, budget)?;
    let w = Walker::new(&rep.family)?;
    let k = fam.k;
    let parts: Vec<Vec<Vec<Vec<u64>>>> = w
        .cube
        .par_iter()
        .map(|n| {
            let mut out = Vec::new();
            let mut blocks = vec![n.clone()];
            let mut na = vec![w.m.matrix().vec_mul(n)];
            if w.levels[0].iter().all(|g| g.eval_prefix(w.field, &blocks, &na) == 0) {
                w.walk_prefix(1, k, &mut blocks, &mut na, &mut |b| out.push(b.to_vec()));
            }
            out
        })
        .collect();
    Ok(parts.into_iter().flatten().collect())
}

impl<'a> Walker<'a> {
    fn walk_prefix(
        &self,
        from: usize,
        to: usize,
        blocks: &mut Vec<Vec<u64>>,
        na: &mut Vec<Vec<u64>>,
        visit: &mut dyn FnMut(&[Vec<u64>]),
    ) {
        if from == to {
            visit(blocks);
            return;
        }
        for n in &self.cube {
            blocks.push(n.clone());
            na.push(self.m.matrix().vec_mul(n));
            if self.levels[from].iter().all(|g| g.eval_prefix(self.field, blocks, na) == 0) {
                self.walk_prefix(from + 1, to, blocks, na, visit);
            }
            blocks.pop();
            na.pop();
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FubiniReport {
    pub lhs: f64,
    pub rhs: f64,
    pub difference: f64,
    /// `4 p^{−1/2}`.
    pub bound: f64,
    pub pass: bool,
    pub omega_size: u64,
    pub projection_size: u64,
    /// Points of `Ω_I` with an empty fiber; they contribute 0 to the right side.
    pub empty_fibers: u64,
}

/// Both sides of the Fubini identity for `I = {1, …, k′}` and a function bounded by 1.
pub fn fubini_check<F>(fam: &MFamily, kprime: usize, f: F, budget: f64) -> Result<FubiniReport>
where
    F: Fn(&[Vec<u64>]) -> f64 + Sync,
{
    let rep = standard_rep(fam)?;
    let r = rep.total_codim;
    let rank = fam.m.rank();
    if rank < 2 * r + 1 {
        return Err(Error::RankHypothesisFailed { rank, needed: 2 * r + 1 });
    }
    if kprime == 0 || kprime >= fam.k {
        return Err(Error::Dimension("need 1 ≤ k′ ≤ k − 1".into()));
    }
    check_enumeration(fam, budget)?;
    let w = Walker::new(&rep.family)?;
    let mut base = Vec::new();
    {
        let mut blocks = Vec::new();
        let mut na = Vec::new();
        w.walk_prefix(0, kprime, &mut blocks, &mut na, &mut |b| base.push(b.to_vec()));
    }
    let fibers: Vec<(f64, u64)> = base
        .par_iter()
        .map(|x| {
            let mut blocks = x.clone();
            let mut na: Vec<Vec<u64>> = x.iter().map(|n| w.m.matrix().vec_mul(n)).collect();
            let mut sum = 0.0;
            let mut cnt = 0u64;
            w.walk_prefix(kprime, fam.k, &mut blocks, &mut na, &mut |b| {
                sum += f(b);
                cnt += 1;
            });
            (sum, cnt)
        })
        .collect();
    let total: u64 = fibers.iter().map(|x| x.1).sum();
    let total_sum: f64 = fibers.iter().map(|x| x.0).sum();
    let lhs = if total == 0 { 0.0 } else { total_sum / total as f64 };
    let inner: f64 = fibers.iter().filter(|x| x.1 > 0).map(|x| x.0 / x.1 as f64).sum();
    let rhs = if base.is_empty() { 0.0 } else { inner / base.len() as f64 };
    let bound = BOUND_CONSTANT / (fam.field().p() as f64).sqrt();
    let difference = (lhs - rhs).abs();
    Ok(FubiniReport {
        lhs,
        rhs,
        difference,
        bound,
        pass: difference <= bound,
        omega_size: total,
        projection_size: base.len() as u64,
        empty_fibers: fibers.iter().filter(|x| x.1 == 0).count() as u64,
    })
}

/// A ±1 function of the tuple, reproducible from `seed` and independent of evaluation order.
pub fn random_sign(p: u64, seed: u64) -> impl Fn(&[Vec<u64>]) -> f64 + Sync {
    let base = ChaCha8Rng::seed_from_u64(seed);
    move |blocks: &[Vec<u64>]| {
        let idx = blocks.iter().fold(0u128, |acc, n| acc * (p as u128).pow(n.len() as u32) + point_index(p, n) as u128);
        let mut rng = base.clone();
        rng.set_word_pos(idx);
        if rng.next_u32() & 1 == 1 {
            1.0
        } else {
            -1.0
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CardinalityReport {
    pub method: String,
    pub count: f64,
    pub std_error: f64,
    pub samples: u64,
    pub main_term: f64,
    pub error_bound: f64,
    pub ratio: f64,
    pub pass: bool,
}

/// Sample count of the Monte-Carlo fallback.
pub const MC_SAMPLES: u64 = 1_000_000;

/// `|Ω|` against `p^{dk−r}` with error `4 p^{dk−r−1/2}`: exact when `p^{dk}` fits the budget,
/// otherwise stratified sampling over the first block with a 3σ allowance.
pub fn mset_cardinality_check(fam: &MFamily, budget: f64, seed: u64) -> Result<CardinalityReport> {
    let rep = standard_rep(fam)?;
    let r = rep.total_codim;
    let p = fam.field().p() as f64;
    let dk = (fam.d() * fam.k) as f64;
    let main = p.powf(dk - r as f64);
    let err = p.powf(dk - r as f64 - 0.5);
    if check_enumeration(fam, budget).is_ok() {
        let n = enumerate_mset(fam, budget)?.len() as u64;
        let c = CountReport::new(n, main, err);
        return Ok(CardinalityReport {
            method: "exact".into(),
            count: n as f64,
            std_error: 0.0,
            samples: 0,
            main_term: main,
            error_bound: err,
            ratio: c.ratio,
            pass: c.pass,
        });
    }
    let (hits, n) = sample_hits(fam, MC_SAMPLES, seed);
    let frac = hits as f64 / n as f64;
    let total = p.powf(dk);
    let count = frac * total;
    let std_error = total * (frac * (1.0 - frac) / n as f64).sqrt();
    let ratio = (count - main).abs() / err;
    Ok(CardinalityReport {
        method: "monte-carlo".into(),
        count,
        std_error,
        samples: n,
        main_term: main,
        error_bound: err,
        ratio,
        pass: (count - main).abs() <= BOUND_CONSTANT * err + 3.0 * std_error,
    })
}

const CHUNK: u64 = 10_000;

/// Uniform tuples with the first block cycling through 𝔽_p^d; returns `(hits, samples)`.
fn sample_hits(fam: &MFamily, samples: u64, seed: u64) -> (u64, u64) {
    let p = fam.field().p();
    let d = fam.d();
    let k = fam.k;
    let strata = p.pow(d as u32);
    let chunks = samples.div_ceil(CHUNK);
    let hits: u64 = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c);
            let mut h = 0;
            for t in c * CHUNK..((c + 1) * CHUNK).min(samples) {
                let mut blocks = vec![point_at(p, d, t % strata)];
                for _ in 1..k {
                    blocks.push((0..d).map(|_| rng.gen_range(0..p)).collect());
                }
                h += u64::from(fam.contains(&blocks));
            }
            h
        })
        .sum();
    (hits, samples)
}

/// Uniform samples of `Ω` by rejection, reproducible from `seed`.
pub fn sample_mset(fam: &MFamily, count: usize, seed: u64, max_tries: u64) -> Result<Vec<Vec<Vec<u64>>>> {
    let p = fam.field().p();
    let d = fam.d();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    let mut tries = 0;
    while out.len() < count {
        if tries >= max_tries {
            return Err(Error::BudgetExceeded { needed: max_tries as f64 + 1.0, budget: max_tries as f64 });
        }
        tries += 1;
        let blocks: Vec<Vec<u64>> = (0..fam.k).map(|_| (0..d).map(|_| rng.gen_range(0..p)).collect()).collect();
        if fam.contains(&blocks) {
            out.push(blocks);
        }
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ProbeKind {
    Contained,
    Small,
    /// Neither small nor contained: a theorem violation at the tested size.
    Middle,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeVerdict {
    pub kind: ProbeKind,
    /// Points of the (sampled or full) set where `P` vanishes.
    pub zeros: u64,
    pub size: u64,
    pub fraction: f64,
    /// First point where `P ≠ 0`, flattened.
    pub witness: Option<Vec<u64>>,
    pub sampled: bool,
}

/// `|V(P) ∩ Ω| ≤ δ|Ω|` or `Ω ⊆ V(P)` for each polynomial in `dk` variables; exhaustive when
/// `p^{dk}` fits the budget, otherwise on `samples` uniform points drawn by rejection.
pub fn irreducibility_probe(
    fam: &MFamily,
    polys: &[FpMultiPoly],
    delta: f64,
    budget: f64,
    samples: usize,
    seed: u64,
) -> Result<Vec<ProbeVerdict>> {
    let nv = fam.d() * fam.k;
    if polys.iter().any(|q| q.nvars() != nv) {
        return Err(Error::Dimension("probe polynomials must have dk variables".into()));
    }
    let sampled = check_enumeration(fam, budget).is_err();
    let pts: Vec<Vec<u64>> = if sampled {
        let p = fam.field().p() as f64;
        let tries = (samples as f64 * p.powi(standard_rep(fam)?.total_codim as i32) * 50.0).min(budget) as u64;
        sample_mset(fam, samples, seed, tries)?
    } else {
        enumerate_mset(fam, budget)?
    }
    .into_iter()
    .map(|b| b.concat())
    .collect();
    let size = pts.len() as u64;
    Ok(polys
        .par_iter()
        .map(|q| {
            let ev = q.compile();
            let mut zeros = 0;
            let mut witness = None;
            for x in &pts {
                if ev.eval(x) == 0 {
                    zeros += 1;
                } else if witness.is_none() {
                    witness = Some(x.clone());
                }
            }
            let fraction = if size == 0 { 0.0 } else { zeros as f64 / size as f64 };
            let kind = if zeros == size {
                ProbeKind::Contained
            } else if fraction <= delta {
                ProbeKind::Small
            } else {
                ProbeKind::Middle
            };
            ProbeVerdict { kind, zeros, size, fraction, witness, sampled }
        })
        .collect())
}

/// Random polynomial of degree at most `s` in `nvars` variables with every monomial present with probability `density`.
pub fn random_poly(field: PrimeField, nvars: usize, s: usize, density: f64, rng: &mut impl Rng) -> FpMultiPoly {
    let mut out = FpMultiPoly::zero(field, nvars);
    for e in crate::fpoly::monomials_up_to(nvars, s) {
        if rng.gen_bool(density) {
            out.add_term(e, rng.gen_range(0..field.p()));
        }
    }
    out
}

/// Counts of `V(𝒥)` per block prefix, handy for dimension-vector sanity checks.
pub fn prefix_counts(fam: &MFamily, budget: f64) -> Result<BTreeMap<usize, u64>> {
    let rep = standard_rep(fam)?;
    check_enumeration(fam, budget)?;
    let w = Walker::new(&rep.family)?;
    let mut out = BTreeMap::new();
    for t in 1..=fam.k {
        let mut c = 0u64;
        let mut blocks = Vec::new();
        let mut na = Vec::new();
        w.walk_prefix(0, t, &mut blocks, &mut na, &mut |_| c += 1);
        out.insert(t, c);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::counting::{enumerate_gowers, QuadSet};

    fn k(p: u64) -> PrimeField {
        PrimeField::new(p).unwrap()
    }

    #[test]
    fn coeff_vector_layout() {
        let f = k(5);
        let d = 3;
        let c = MQuadFn::constant(2, d, 4);
        let (v, vp) = c.coeff_vectors();
        assert_eq!(v.len(), 3 + 2 * d + 1);
        assert_eq!(vp.len(), 3 + 2 * d);
        assert!(v[..v.len() - 1].iter().all(|&x| x == 0));
        assert_eq!(*v.last().unwrap(), 4);

        let mut g = MQuadFn::zero(1, d);
        g.set_b(1, 1, 1);
        assert_eq!(g.coeff_vectors().0, vec![1, 0, 0, 0, 0]);

        // k = 2: (b22, b21, v2, b11, v1, u)
        let mut h = MQuadFn::zero(2, d);
        h.set_b(2, 2, 1);
        h.set_b(1, 2, 2);
        h.set_b(1, 1, 3);
        h.set_v(2, vec![4, 0, 0]);
        h.set_v(1, vec![0, 0, 1]);
        h.set_u(2);
        assert_eq!(h.coeff_vectors().0, vec![1, 2, 4, 0, 0, 3, 0, 0, 1, 2]);
        assert_eq!(MQuadFn::from_coeff_vector(2, d, &h.coeff_vectors().0), h);

        let m = QuadForm::diagonal(f, &[1, 2, 3], &[0, 1, 0], 2).unwrap();
        let poly = h.to_poly(&m);
        for blocks in [vec![vec![1, 2, 3], vec![4, 0, 1]], vec![vec![0, 3, 3], vec![2, 2, 2]]] {
            assert_eq!(poly.eval_fp(&blocks.concat()), h.eval(&m, &blocks));
        }
    }

    #[test]
    fn classify_examples() {
        let f = k(5);
        let m = QuadForm::sphere(f, 3, 0);
        let one = MFamily::new(m.clone(), 1, vec![MQuadFn::constant(1, 3, 1)]).unwrap();
        assert!(!classify(&one).consistent);

        let mut a = MQuadFn::zero(2, 3);
        a.set_b(1, 1, 1);
        let mut b = MQuadFn::zero(2, 3);
        b.set_b(1, 2, 1);
        let fam = MFamily::new(m.clone(), 2, vec![a, b]).unwrap();
        let fl = classify(&fam);
        assert!(fl.independent && fl.consistent && fl.pure);

        let g = MFamily::gowers(&QuadForm::sphere(f, 3, 1), 2);
        let fl = classify(&g);
        assert!(fl.independent && fl.consistent);
        assert!(matches!(fl.nice, Niceness::Nice { .. }));
    }

    #[test]
    fn niceness_needs_translation() {
        let f = k(7);
        let m = QuadForm::diagonal(f, &[1, 1, 1], &[2, 4, 6], 0).unwrap();
        let fam = MFamily::new(m.clone(), 1, vec![MQuadFn::from_form(&m, 1, 1)]).unwrap();
        match classify(&fam).nice {
            Niceness::Nice { offset, .. } => {
                // M(n + c) has no linear part: 2c + u = 0
                assert_eq!(offset[0], vec![6, 5, 4]);
            }
            Niceness::Unknown => panic!("sphere should be nice"),
        }
    }

    #[test]
    fn standard_rep_examples() {
        let f = k(5);
        let m = QuadForm::sphere(f, 3, 1);
        let g = MFamily::gowers(&m, 1);
        let rep = standard_rep(&g).unwrap();
        assert_eq!(rep.dimension_vector, vec![1, 1]);
        assert_eq!(standard_rep(&rep.family).unwrap().family, rep.family);

        let mut fs = g.functions.clone();
        let (v1, _) = fs[0].coeff_vectors();
        let (v2, _) = fs[1].coeff_vectors();
        let sum: Vec<u64> = v1.iter().zip(&v2).map(|(&a, &b)| f.add(a, b)).collect();
        fs.push(MQuadFn::from_coeff_vector(2, 3, &sum));
        let red = standard_rep(&MFamily::new(m.clone(), 2, fs).unwrap()).unwrap();
        assert_eq!(red.total_codim, 2);

        for s in 0..=3 {
            let rep = standard_rep(&MFamily::gowers(&m, s)).unwrap();
            let mut want = vec![1];
            want.extend(1..=s);
            assert_eq!(rep.dimension_vector, want);
            assert_eq!(rep.total_codim, (s * s + s + 2) / 2);
        }
        assert_eq!(total_codim(&MFamily::empty(m.clone(), 2)).unwrap(), 0);
        assert_eq!(total_codim(&MFamily::gowers(&m, 0)).unwrap(), 1);
        assert_eq!(total_codim(&MFamily::gowers(&m, 2)).unwrap(), 4);

        let bad = MFamily::new(m.clone(), 1, vec![MQuadFn::constant(1, 3, 2)]).unwrap();
        assert_eq!(standard_rep(&bad), Err(Error::Inconsistent));
    }

    #[test]
    fn standard_rep_preserves_points() {
        let f = k(5);
        let m = QuadForm::sphere(f, 3, 2);
        let g = MFamily::gowers(&m, 1);
        let mut fs = g.functions.clone();
        let (v1, _) = fs[0].coeff_vectors();
        let (v2, _) = fs[1].coeff_vectors();
        fs.push(MQuadFn::from_coeff_vector(2, 3, &v1.iter().zip(&v2).map(|(&a, &b)| f.add(a, f.mul(3, b))).collect::<Vec<_>>()));
        let fam = MFamily::new(m.clone(), 2, fs).unwrap();
        let all: Vec<Vec<Vec<u64>>> = all_points(f, 6).map(|x| vec![x[..3].to_vec(), x[3..].to_vec()]).filter(|b| fam.contains(b)).collect();
        assert_eq!(enumerate_mset(&fam, 1e7).unwrap(), all);
    }

    #[test]
    fn gowers_family_matches_box() {
        let f = k(5);
        for d in 3..=4 {
            let m = QuadForm::sphere(f, d, 1);
            let fam = MFamily::gowers(&m, 1);
            let got = enumerate_mset(&fam, 1e8).unwrap();
            let want = enumerate_gowers(&QuadSet::sphere(f, d, 1), 1, true, 1e9).unwrap().tuples.unwrap();
            assert_eq!(got, want);
        }
        assert_eq!(MFamily::gowers(&QuadForm::sphere(f, 3, 1), 0).len(), 1);
        assert_eq!(MFamily::gowers(&QuadForm::sphere(f, 3, 1), 1).len(), 2);
        assert_eq!(MFamily::gowers(&QuadForm::sphere(f, 3, 1), 2).len(), 4);
    }

    #[test]
    fn projection_examples() {
        let f = k(5);
        let m = QuadForm::sphere(f, 3, 1);
        let g = MFamily::gowers(&m, 2);
        let (p, r) = i_projection(&g, &[1, 2, 3], false).unwrap();
        assert_eq!(p.len(), 4);
        assert!(r.is_empty());

        let (p, r) = i_projection(&g, &[1, 2], false).unwrap();
        assert_eq!(p.len(), 2);
        assert_eq!(r.len(), 2);
        let restricted = p.restrict_blocks(&[1, 2]).unwrap();
        let box1 = MFamily::gowers(&m, 1);
        assert_eq!(enumerate_mset(&restricted, 1e7).unwrap(), enumerate_mset(&box1, 1e7).unwrap());
        let (p2, _) = i_projection(&g, &[1, 2], true).unwrap();
        assert_eq!(
            enumerate_mset(&p2.restrict_blocks(&[1, 2]).unwrap(), 1e7).unwrap(),
            enumerate_mset(&restricted, 1e7).unwrap()
        );

        let single = MFamily::gowers(&m, 0);
        let (p, r) = i_projection(&single, &[], false).unwrap();
        assert!(p.is_empty());
        assert_eq!(r.len(), 1);
    }

    #[test]
    fn cardinality_examples() {
        let f = k(5);
        let m = QuadForm::sphere(f, 3, 1);
        let rep = mset_cardinality_check(&MFamily::gowers(&m, 0), 1e8, 1).unwrap();
        assert_eq!(rep.count, 30.0);
        assert_eq!(rep.main_term, 25.0);
        let rep = mset_cardinality_check(&MFamily::empty(m.clone(), 2), 1e8, 1).unwrap();
        assert_eq!(rep.count, 5f64.powi(6));
        assert!(rep.pass);
    }

    #[test]
    fn fubini_constant_function() {
        let f = k(5);
        let m = QuadForm::sphere(f, 5, 1);
        let rep = fubini_check(&MFamily::gowers(&m, 1), 1, |_| 1.0, 1e8).unwrap();
        assert_eq!(rep.lhs, 1.0);
        assert_eq!(rep.rhs, 1.0);
        let v = enumerate_mset(&MFamily::gowers(&m, 0), 1e8).unwrap().len() as u64;
        assert_eq!(rep.omega_size, v * v);
        assert_eq!(rep.projection_size, v);
    }

    #[test]
    fn probe_examples() {
        let f = k(5);
        let m = QuadForm::sphere(f, 4, 1);
        let fam = MFamily::gowers(&m, 0);
        let mp = fam.functions[0].to_poly(&m);
        let contained = &mp * &FpMultiPoly::var(f, 4, 2);
        let polys = vec![contained, FpMultiPoly::constant(f, 4, 3), FpMultiPoly::var(f, 4, 0)];
        let v = irreducibility_probe(&fam, &polys, 0.3, 1e8, 0, 1).unwrap();
        assert_eq!(v[0].kind, ProbeKind::Contained);
        assert_eq!(v[1].kind, ProbeKind::Small);
        assert_eq!(v[1].zeros, 0);
        assert_eq!(v[2].kind, ProbeKind::Small);
    }

    #[test]
    fn random_sign_is_order_free() {
        let g = random_sign(5, 9);
        let a = vec![vec![1, 2, 3], vec![0, 0, 4]];
        assert_eq!(g(&a), g(&a));
        let vals: Vec<f64> = all_points(k(5), 3).map(|x| g(&[x])).collect();
        let plus = vals.iter().filter(|&&x| x > 0.0).count();
        assert!(plus > 40 && plus < 85);
    }
}
