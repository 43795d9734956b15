//! Long division by a quadratic form over 𝔽_p, Nullstellensatz certificates,
//! the irreducibility dichotomy and the polynomial equations solvable on quadrics.
//! The ℤ/p solvers live in [`lifted`].

pub mod lifted;
pub mod local;

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::counting::{check_budget, count_where, enumerate_zeros, point_index, scan};
use crate::error::{Error, Result};
use crate::ffcore::{FpMatrix, PrimeField};
use crate::fpoly::{monomials_up_to, total, FpMultiPoly, Monomial};
use crate::quadform::QuadForm;

/// `P(nB) = M(nB)Q(n) + n₁R₁(n′) + R₀(n′)` with `n′ = (n₂, …, n_d)`.
#[derive(Clone, Debug, PartialEq)]
pub struct DivisionCert {
    /// 1-based pivot pair `(i, j)`.
    pub pivot: (usize, usize),
    pub b: FpMatrix,
    pub q: FpMultiPoly,
    pub r1: FpMultiPoly,
    pub r0: FpMultiPoly,
}

impl DivisionCert {
    pub fn is_exact(&self) -> bool {
        self.r1.is_zero() && self.r0.is_zero()
    }

    /// Re-expands the identity and checks the degree bounds.
    pub fn verify(&self, p: &FpMultiPoly, m: &QuadForm) -> bool {
        let d = m.dim();
        let Ok(mb) = m.pullback(&self.b, &vec![0; d]) else { return false };
        let pb = change_vars(p, &self.b);
        let x1 = FpMultiPoly::var(m.field(), d, 0);
        let rhs = &(&(&mb.to_poly() * &self.q) + &(&x1 * &self.r1)) + &self.r0;
        let s = p.degree();
        let bounded = self.q.is_zero() || self.q.degree() + 2 <= s;
        pb == rhs
            && bounded
            && (self.r1.is_zero() || self.r1.degree() < s)
            && self.r0.degree() <= s
            && !self.r1.depends_on(0)
            && !self.r0.depends_on(0)
    }

    /// `Q(nB⁻¹)`; equals `R` with `P = MR` when the certificate is exact.
    pub fn quotient_original(&self) -> Result<FpMultiPoly> {
        Ok(change_vars(&self.q, &self.b.inverse()?))
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "pivot": [self.pivot.0, self.pivot.1],
            "B": self.b.to_rows(),
            "Q": crate::fpoly::fp_poly_to_json(&self.q),
            "R1": crate::fpoly::fp_poly_to_json(&self.r1),
            "R0": crate::fpoly::fp_poly_to_json(&self.r0),
        })
    }
}

/// `f(nB)`.
pub fn change_vars(f: &FpMultiPoly, b: &FpMatrix) -> FpMultiPoly {
    let field = f.field();
    let images: Vec<FpMultiPoly> = (0..b.cols()).map(|j| FpMultiPoly::linear(field, &b.col(j), 0)).collect();
    f.substitute(&images).expect("square change of variables")
}

fn check_degree(p: &FpMultiPoly) -> Result<()> {
    let q = p.field().p() as usize;
    if p.degree() >= q {
        return Err(Error::DegreeTooLarge { degree: p.degree(), bound: q - 1 });
    }
    Ok(())
}

/// Division by `M` with nonzero upper-left entry, cancelling `n₁^e` for `e ≥ 2` from the top down.
pub fn standard_division(p: &FpMultiPoly, m: &QuadForm) -> Result<DivisionCert> {
    check_degree(p)?;
    let (q, r1, r0) = long_divide(p, m)?;
    Ok(DivisionCert { pivot: (1, 1), b: FpMatrix::identity(m.field(), m.dim()), q, r1, r0 })
}

fn long_divide(p: &FpMultiPoly, m: &QuadForm) -> Result<(FpMultiPoly, FpMultiPoly, FpMultiPoly)> {
    let f = m.field();
    let d = m.dim();
    if p.nvars() != d {
        return Err(Error::Dimension("polynomial and form arity".into()));
    }
    let a11 = m.matrix().get(0, 0);
    if a11 == 0 {
        return Err(Error::ZeroPivot);
    }
    let inv = f.inv(a11);
    let mp = m.to_poly();
    let mut rem = p.clone();
    let mut q = FpMultiPoly::zero(f, d);
    loop {
        let top = rem
            .terms()
            .iter()
            .filter(|(e, _)| e[0] >= 2)
            .max_by(|a, b| a.0[0].cmp(&b.0[0]).then(b.0.cmp(a.0)))
            .map(|(e, &c)| (e.clone(), c));
        let Some((mut e, c)) = top else { break };
        e[0] -= 2;
        let c = f.mul(c, inv);
        let mut t = FpMultiPoly::zero(f, d);
        t.add_term(e.clone(), c);
        q.add_term(e, c);
        rem = &rem - &(&t * &mp);
    }
    let mut r1 = FpMultiPoly::zero(f, d);
    let mut r0 = FpMultiPoly::zero(f, d);
    for (e, &c) in rem.terms() {
        let mut e2 = e.clone();
        if e[0] == 1 {
            e2[0] = 0;
            r1.add_term(e2, c);
        } else {
            r0.add_term(e2, c);
        }
    }
    Ok((q, r1, r0))
}

/// The first diagonal pivot, else the first off-diagonal one, with the change of variables `n ↦ nB`.
///
/// `B_{i,i}` has rows `e_i, e_1, …, e_{i−1}, e_{i+1}, …`; `B_{i,j}` has rows `e_i + e_j, e_i − e_j`
/// followed by the remaining unit vectors in order.
pub fn pivot_change(a: &FpMatrix) -> Result<(usize, usize, FpMatrix)> {
    if !a.is_symmetric() {
        return Err(Error::NotSymmetric);
    }
    let f = a.field();
    let d = a.rows();
    let unit = |i: usize| -> Vec<u64> {
        let mut v = vec![0; d];
        v[i] = 1;
        v
    };
    if let Some(i) = (0..d).find(|&i| a.get(i, i) != 0) {
        let mut rows = vec![unit(i)];
        rows.extend((0..d).filter(|&k| k != i).map(unit));
        return Ok((i + 1, i + 1, FpMatrix::from_rows(f, &rows)?));
    }
    for i in 0..d {
        for j in i + 1..d {
            if a.get(i, j) != 0 {
                let mut plus = vec![0; d];
                let mut minus = vec![0; d];
                plus[i] = 1;
                plus[j] = 1;
                minus[i] = 1;
                minus[j] = f.neg(1);
                let mut rows = vec![plus, minus];
                rows.extend((0..d).filter(|&k| k != i && k != j).map(unit));
                return Ok((i + 1, j + 1, FpMatrix::from_rows(f, &rows)?));
            }
        }
    }
    Err(Error::ZeroForm)
}

/// Division after the pivot change chosen by [`pivot_change`].
pub fn divide(p: &FpMultiPoly, m: &QuadForm) -> Result<DivisionCert> {
    check_degree(p)?;
    let (i, j, b) = pivot_change(m.matrix())?;
    let mb = m.pullback(&b, &vec![0; m.dim()])?;
    let pb = change_vars(p, &b);
    let (q, r1, r0) = long_divide(&pb, &mb)?;
    Ok(DivisionCert { pivot: (i, j), b, q, r1, r0 })
}

/// First point of 𝔽_p^d in lexicographic order satisfying `pred`.
pub fn first_point<F>(field: PrimeField, d: usize, pred: F) -> Option<Vec<u64>>
where
    F: Fn(&[u64]) -> bool + Sync,
{
    let p = field.p();
    if d == 0 {
        return pred(&[]).then(Vec::new);
    }
    let slab = p.pow(d as u32 - 1);
    (0..p).into_par_iter().find_map_first(|first| {
        let mut pt = vec![0u64; d];
        pt[0] = first;
        for idx in 0..slab {
            let mut r = idx;
            for i in (1..d).rev() {
                pt[i] = r % p;
                r /= p;
            }
            if pred(&pt) {
                return Some(pt.clone());
            }
        }
        None
    })
}

/// First `n ∈ V(M)` (lexicographic) with `P(n) ≠ 0`.
pub fn vanishing_witness(p: &FpMultiPoly, m: &QuadForm, budget: f64) -> Result<Option<Vec<u64>>> {
    check_budget(m.field().p(), m.dim(), budget)?;
    let ev = p.compile();
    Ok(first_point(m.field(), m.dim(), |n| m.eval(n) == 0 && ev.eval(n) != 0))
}

#[derive(Clone, Debug, PartialEq)]
pub enum NullOutcome {
    /// `P = MR`, with the division certificate it was read off from.
    Divides { r: FpMultiPoly, cert: DivisionCert },
    /// `n ∈ V(M)` with `P(n) = value ≠ 0`.
    Witness { n: Vec<u64>, value: u64 },
    /// `V(M) ⊆ V(P)` but the remainder is nonzero; only possible below the theorem regime.
    Anomaly { cert: DivisionCert },
}

/// Either `P = MR` with `deg R ≤ deg P − 2`, or a point of `V(M)` where `P` does not vanish.
pub fn nullstellensatz(p: &FpMultiPoly, m: &QuadForm, budget: f64) -> Result<NullOutcome> {
    let rank = m.rank();
    if rank < 3 {
        return Err(Error::RankHypothesisFailed { rank, needed: 3 });
    }
    let cert = divide(p, m)?;
    if cert.is_exact() {
        let r = cert.quotient_original()?;
        debug_assert!(&m.to_poly() * &r == *p);
        return Ok(NullOutcome::Divides { r, cert });
    }
    match vanishing_witness(p, m, budget)? {
        Some(n) => {
            let value = p.eval_fp(&n);
            Ok(NullOutcome::Witness { n, value })
        }
        None => Ok(NullOutcome::Anomaly { cert }),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum DichotomyKind {
    Contained,
    SmallIntersection,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DichotomyVerdict {
    pub kind: DichotomyKind,
    /// `|V(M) ∩ V(P)|`.
    pub count: u64,
    pub vm_count: u64,
    /// `4 p^{d−2}`.
    pub bound: f64,
    pub within_bound: bool,
    /// `count ≤ δ|V(M)|`.
    pub delta_ok: bool,
    pub certificate: Option<DivisionCert>,
    pub witness: Option<Vec<u64>>,
}

/// Exact count of `V(M) ∩ V(P)`, with a division certificate when `V(M) ⊆ V(P)` and a witness otherwise.
pub fn dichotomy(p: &FpMultiPoly, m: &QuadForm, delta: f64, budget: f64) -> Result<DichotomyVerdict> {
    let f = m.field();
    let d = m.dim();
    check_budget(f.p(), d, budget)?;
    check_degree(p)?;
    let ev = p.compile();
    let vm_count = count_where(f, d, |n| m.eval(n) == 0);
    let count = count_where(f, d, |n| m.eval(n) == 0 && ev.eval(n) == 0);
    let bound = crate::counting::BOUND_CONSTANT * (f.p() as f64).powi(d as i32 - 2);
    let mut verdict = DichotomyVerdict {
        kind: DichotomyKind::SmallIntersection,
        count,
        vm_count,
        bound,
        within_bound: count as f64 <= bound,
        delta_ok: count as f64 <= delta * vm_count as f64,
        certificate: None,
        witness: None,
    };
    if count == vm_count {
        verdict.kind = DichotomyKind::Contained;
        verdict.certificate = Some(divide(p, m)?);
    } else {
        verdict.witness = vanishing_witness(p, m, budget)?;
    }
    Ok(verdict)
}

#[derive(Clone, Debug, PartialEq)]
pub enum AntiderivOutcome {
    /// `Q = MQ′`.
    Quotient(FpMultiPoly),
    /// `Q = MW + a` with `a ≠ 0`: the hypotheses hold but `M(0) ≠ 0` leaves a constant behind.
    ConstantOffset { w: FpMultiPoly, a: u64 },
    /// `∂₁M ∂_iQ − ∂_iM ∂₁Q` does not vanish at `n ∈ V(M)`; `i` is 1-based.
    HypothesisFailed { i: usize, n: Vec<u64> },
}

/// Anti-derivative on `V(M)`: proportional gradients force `Q` into the ideal of `M`.
pub fn antiderivative(q: &FpMultiPoly, m: &QuadForm, budget: f64) -> Result<AntiderivOutcome> {
    let f = m.field();
    let d = m.dim();
    if q.constant_term() != 0 {
        return Err(Error::HypothesisFailed("Q(0) must vanish".into()));
    }
    let mp = m.to_poly();
    let dm1 = mp.partial(0);
    let dq1 = q.partial(0);
    for i in 1..d {
        let diff = &(&dm1 * &q.partial(i)) - &(&mp.partial(i) * &dq1);
        if let NullOutcome::Witness { n, .. } = nullstellensatz(&diff, m, budget)? {
            return Ok(AntiderivOutcome::HypothesisFailed { i: i + 1, n });
        }
    }
    match nullstellensatz(q, m, budget)? {
        NullOutcome::Divides { r, .. } => Ok(AntiderivOutcome::Quotient(r)),
        _ => {
            let zeros = enumerate_zeros(m, None, budget)?;
            let a = zeros.first().map(|n| q.eval_fp(n)).unwrap_or(0);
            let shifted = q - &FpMultiPoly::constant(f, d, a);
            match nullstellensatz(&shifted, m, budget)? {
                NullOutcome::Divides { r, .. } if a != 0 => Ok(AntiderivOutcome::ConstantOffset { w: r, a }),
                _ => Err(Error::TheoremRegime("gradient condition holds but Q is not in the ideal of M".into())),
            }
        }
    }
}

/// Coefficients `c` with `Σ c_j columns_j` matching `target` on every monomial accepted by `constrained`.
pub fn solve_combination<F>(target: &FpMultiPoly, columns: &[FpMultiPoly], constrained: F) -> Option<Vec<u64>>
where
    F: Fn(&Monomial) -> bool,
{
    let field = target.field();
    let mut rows: BTreeMap<Monomial, usize> = BTreeMap::new();
    for e in target.terms().keys().chain(columns.iter().flat_map(|c| c.terms().keys())) {
        if constrained(e) && !rows.contains_key(e) {
            let k = rows.len();
            rows.insert(e.clone(), k);
        }
    }
    if columns.is_empty() {
        return target.terms().keys().all(|e| !constrained(e)).then(Vec::new);
    }
    if rows.is_empty() {
        return Some(vec![0; columns.len()]);
    }
    let mut a = FpMatrix::zeros(field, rows.len(), columns.len());
    for (j, c) in columns.iter().enumerate() {
        for (e, &v) in c.terms() {
            if let Some(&i) = rows.get(e) {
                a.set(i, j, v);
            }
        }
    }
    let mut rhs = vec![0; rows.len()];
    for (e, &v) in target.terms() {
        if let Some(&i) = rows.get(e) {
            rhs[i] = v;
        }
    }
    a.solve(&rhs).ok().map(|s| s.particular)
}

/// `X` with `deg X ≤ x_deg` and `deg(F − MX) ≤ rem_deg`, or `None`.
pub fn reduce_mod_form(fpoly: &FpMultiPoly, m: &QuadForm, x_deg: i64, rem_deg: i64) -> Option<FpMultiPoly> {
    let field = m.field();
    let d = m.dim();
    let mp = m.to_poly();
    let monos: Vec<Monomial> = if x_deg < 0 { Vec::new() } else { monomials_up_to(d, x_deg as usize) };
    let cols: Vec<FpMultiPoly> = monos
        .iter()
        .map(|e| {
            let mut t = FpMultiPoly::zero(field, d);
            t.add_term(e.clone(), 1);
            &t * &mp
        })
        .collect();
    let sol = solve_combination(fpoly, &cols, |e| total(e) as i64 > rem_deg)?;
    let mut x = FpMultiPoly::zero(field, d);
    for (e, c) in monos.into_iter().zip(sol) {
        x.add_term(e, c);
    }
    Some(x)
}

/// Value table of `f` over 𝔽_p^d in lexicographic index order.
pub fn value_table(f: &FpMultiPoly) -> Vec<u64> {
    let ev = f.compile();
    scan(f.field(), f.nvars(), |n| Some(ev.eval(n)))
}

/// Exhaustive lexicographic scans over `Box_s(V(M))` with tabulated membership.
pub struct CubeScanner {
    field: PrimeField,
    d: usize,
    member: Vec<bool>,
    pts: Vec<Vec<u64>>,
}

impl CubeScanner {
    pub fn new(m: &QuadForm, budget: f64) -> Result<Self> {
        let field = m.field();
        let d = m.dim();
        check_budget(field.p(), d, budget)?;
        let member = scan(field, d, |n| Some(m.eval(n) == 0));
        let pts = enumerate_zeros(m, None, budget)?;
        Ok(CubeScanner { field, d, member, pts })
    }

    pub fn points(&self) -> &[Vec<u64>] {
        &self.pts
    }

    pub fn index(&self, n: &[u64]) -> usize {
        point_index(self.field.p(), n) as usize
    }

    /// Rough number of partial cubes visited for `Box_s`.
    pub fn work_estimate(&self, s: usize) -> f64 {
        let v = self.pts.len() as f64;
        let p = self.field.p() as f64;
        let s = s as i32;
        let saving = if s >= 2 { (s - 1) * (s - 2) / 2 } else { 0 };
        v.powi(s + 1) / p.powi(saving)
    }

    /// First `(n, h₁, …, h_s)` in lexicographic order with `violates(vertices)`, where
    /// `vertices[mask]` is the table index of `n + Σ_{i ∈ mask} h_i`.
    pub fn first_violation<F>(&self, s: usize, budget: f64, violates: F) -> Result<Option<Vec<Vec<u64>>>>
    where
        F: Fn(&[usize]) -> bool + Sync,
    {
        let work = self.work_estimate(s);
        if work > budget {
            return Err(Error::BudgetExceeded { needed: work, budget });
        }
        let f = self.field;
        Ok(self.pts.par_iter().find_map_first(|n| {
            let mut hs: Vec<Vec<u64>> = self
                .pts
                .iter()
                .map(|m| m.iter().zip(n).map(|(&a, &b)| f.sub(a, b)).collect())
                .collect();
            hs.sort();
            let mut verts = vec![n.clone()];
            let mut chosen = Vec::with_capacity(s);
            self.extend(&hs, s, &mut verts, &mut chosen, &violates).map(|found| {
                let mut out = vec![n.clone()];
                out.extend(found);
                out
            })
        }))
    }

    fn extend<F>(
        &self,
        hs: &[Vec<u64>],
        s: usize,
        verts: &mut Vec<Vec<u64>>,
        chosen: &mut Vec<Vec<u64>>,
        violates: &F,
    ) -> Option<Vec<Vec<u64>>>
    where
        F: Fn(&[usize]) -> bool,
    {
        if chosen.len() == s {
            let idx: Vec<usize> = verts.iter().map(|v| self.index(v)).collect();
            return violates(&idx).then(|| chosen.clone());
        }
        let f = self.field;
        let base = verts.len();
        for h in hs {
            let mut ok = true;
            for k in 0..base {
                let v: Vec<u64> = verts[k].iter().zip(h).map(|(&a, &b)| f.add(a, b)).collect();
                if k > 0 && !self.member[self.index(&v)] {
                    ok = false;
                    verts.truncate(base);
                    break;
                }
                verts.push(v);
            }
            if !ok {
                continue;
            }
            chosen.push(h.clone());
            let found = self.extend(hs, s, verts, chosen, violates);
            chosen.pop();
            verts.truncate(base);
            if found.is_some() {
                return found;
            }
        }
        None
    }

    pub fn dim(&self) -> usize {
        self.d
    }
}

/// `Σ_{S ⊆ [k]} (−1)^{k−|S|} table[vertices[S]]` over the first `k` directions.
pub fn cube_difference(field: PrimeField, table: &[u64], vertices: &[usize], k: usize) -> u64 {
    let mut acc = 0;
    for mask in 0..1usize << k {
        let v = table[vertices[mask]];
        if (k - mask.count_ones() as usize) % 2 == 0 {
            acc = field.add(acc, v);
        } else {
            acc = field.sub(acc, v);
        }
    }
    acc
}

#[derive(Clone, Debug, PartialEq)]
pub enum IntrinsicOutcome {
    /// `g = M g₁ + g₂` with `deg g₁ ≤ s − 2`, `deg g₂ ≤ s − 1`.
    Decomposed { g1: FpMultiPoly, g2: FpMultiPoly },
    /// `(n, h₁, …, h_s) ∈ Box_s(V(M))` with `Δ_{h_s}…Δ_{h₁} g(n) ≠ 0`.
    Witness(Vec<Vec<u64>>),
    /// Neither: the degree-`s` part is not divisible and no cube detects it.
    Undecided,
}

/// Splits `g` of degree at most `s` into an `M`-multiple and a lower-degree part.
pub fn intrinsic_decompose(g: &FpMultiPoly, m: &QuadForm, s: usize, budget: f64) -> Result<IntrinsicOutcome> {
    check_degree(g)?;
    if g.degree() > s {
        return Err(Error::DegreeTooLarge { degree: g.degree(), bound: s });
    }
    if let Some(g1) = reduce_mod_form(g, m, s as i64 - 2, s as i64 - 1) {
        let g2 = g - &(&m.to_poly() * &g1);
        return Ok(IntrinsicOutcome::Decomposed { g1, g2 });
    }
    let scanner = CubeScanner::new(m, budget)?;
    let table = value_table(g);
    let f = m.field();
    match scanner.first_violation(s, budget, |v| cube_difference(f, &table, v, s) != 0)? {
        Some(w) => Ok(IntrinsicOutcome::Witness(w)),
        None => Ok(IntrinsicOutcome::Undecided),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GowersFactorization {
    pub p1: FpMultiPoly,
    pub p2: FpMultiPoly,
    pub q1: FpMultiPoly,
    pub q2: FpMultiPoly,
}

#[derive(Clone, Debug, PartialEq)]
pub enum GowersOutcome {
    Factored(GowersFactorization),
    /// A cube of `Box_s(V(M))` where the equation fails.
    HypothesisFailed(Vec<Vec<u64>>),
    /// The equation holds on all of `Box_s(V(M))` but no degree-bounded factorization exists.
    NoSolution,
}

/// `Δ_{h_{s−1}}…Δ_{h₁}P(n) + Δ_{h_s}…Δ_{h₁}Q(n) = 0` on `Box_s(V(M))` forces
/// `P = MP₁ + P₂`, `Q = MQ₁ + Q₂` with `deg P₂ ≤ s − 2`, `deg Q₂ ≤ s − 1`.
pub fn gowers_equation_solve(
    p: &FpMultiPoly,
    q: &FpMultiPoly,
    m: &QuadForm,
    s: usize,
    k: usize,
    budget: f64,
) -> Result<GowersOutcome> {
    if s == 0 {
        return Err(Error::HypothesisFailed("s must be positive".into()));
    }
    check_degree(p)?;
    check_degree(q)?;
    if q.degree() > k || (!p.is_zero() && p.degree() + 1 > k) {
        return Err(Error::DegreeTooLarge { degree: q.degree().max(p.degree() + 1), bound: k });
    }
    let f = m.field();
    let scanner = CubeScanner::new(m, budget)?;
    let tp = value_table(p);
    let tq = value_table(q);
    let found = scanner.first_violation(s, budget, |v| {
        f.add(cube_difference(f, &tp, v, s - 1), cube_difference(f, &tq, v, s)) != 0
    })?;
    if let Some(w) = found {
        return Ok(GowersOutcome::HypothesisFailed(w));
    }
    let k = k as i64;
    let s = s as i64;
    let (Some(p1), Some(q1)) = (reduce_mod_form(p, m, k - 3, s - 2), reduce_mod_form(q, m, k - 2, s - 1)) else {
        return Ok(GowersOutcome::NoSolution);
    };
    let mp = m.to_poly();
    let p2 = p - &(&mp * &p1);
    let q2 = q - &(&mp * &q1);
    Ok(GowersOutcome::Factored(GowersFactorization { p1, p2, q1, q2 }))
}

impl GowersFactorization {
    pub fn verify(&self, p: &FpMultiPoly, q: &FpMultiPoly, m: &QuadForm, s: usize, k: usize) -> bool {
        let mp = m.to_poly();
        let within = |f: &FpMultiPoly, b: i64| f.is_zero() || (f.degree() as i64) <= b;
        let (s, k) = (s as i64, k as i64);
        &(&mp * &self.p1) + &self.p2 == *p
            && &(&mp * &self.q1) + &self.q2 == *q
            && within(&self.p1, k - 3)
            && within(&self.p2, s - 2)
            && within(&self.q1, k - 2)
            && within(&self.q2, s - 1)
    }
}

/// `P = M P₀ + Σ_i (M(n + h_i) − M(n)) P_i` with `deg P₀ ≤ s − 2`, `deg P_i ≤ s − 1`.
pub fn shifted_representation(p: &FpMultiPoly, m: &QuadForm, hs: &[Vec<u64>]) -> Result<Option<Vec<FpMultiPoly>>> {
    check_degree(p)?;
    let field = m.field();
    let d = m.dim();
    let s = p.degree();
    let mp = m.to_poly();
    let mut generators = vec![(mp.clone(), s as i64 - 2)];
    for h in hs {
        generators.push((&mp.shift(h)? - &mp, s as i64 - 1));
    }
    let mut cols = Vec::new();
    let mut owners = Vec::new();
    for (gi, (gen, deg)) in generators.iter().enumerate() {
        if *deg < 0 {
            continue;
        }
        for e in monomials_up_to(d, *deg as usize) {
            let mut t = FpMultiPoly::zero(field, d);
            t.add_term(e.clone(), 1);
            cols.push(&t * gen);
            owners.push((gi, e));
        }
    }
    let Some(sol) = solve_combination(p, &cols, |_| true) else { return Ok(None) };
    let mut parts = vec![FpMultiPoly::zero(field, d); generators.len()];
    for ((gi, e), c) in owners.into_iter().zip(sol) {
        parts[gi].add_term(e, c);
    }
    Ok(Some(parts))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fpoly::FpMultiPoly;

    fn k(p: u64) -> PrimeField {
        PrimeField::new(p).unwrap()
    }

    fn poly(f: PrimeField, d: usize, terms: &[(Vec<u32>, u64)]) -> FpMultiPoly {
        let mut out = FpMultiPoly::zero(f, d);
        for (e, c) in terms {
            out.add_term(e.clone(), *c);
        }
        out
    }

    #[test]
    fn standard_division_examples() {
        let f = k(7);
        let m = QuadForm::sphere(f, 3, 2);
        let r = poly(f, 3, &[(vec![1, 0, 0], 1), (vec![0, 0, 0], 1)]);
        let p = &m.to_poly() * &r;
        let c = standard_division(&p, &m).unwrap();
        assert_eq!(c.q, r);
        assert!(c.is_exact());
        assert!(c.verify(&p, &m));

        let x1 = FpMultiPoly::var(f, 3, 0);
        let c = standard_division(&x1, &m).unwrap();
        assert!(c.q.is_zero());
        assert_eq!(c.r1, FpMultiPoly::one(f, 3));
        assert!(c.r0.is_zero());

        let f5 = k(5);
        let m = QuadForm::diagonal(f5, &[1, 1], &[0, 0], 0).unwrap();
        let x3 = poly(f5, 2, &[(vec![3, 0], 1)]);
        let c = standard_division(&x3, &m).unwrap();
        assert!(c.verify(&x3, &m));
        // x³ = x(x² + y²) − x y²
        assert_eq!(c.q, FpMultiPoly::var(f5, 2, 0));
        assert_eq!(c.r1, poly(f5, 2, &[(vec![0, 2], 4)]));

        let z = QuadForm::diagonal(f5, &[0, 1], &[0, 0], 0).unwrap();
        assert_eq!(standard_division(&x3, &z), Err(Error::ZeroPivot));
    }

    #[test]
    fn pivot_change_examples() {
        let f = k(5);
        let a = FpMatrix::from_i64_rows(f, &[vec![2, 1], vec![1, 0]]).unwrap();
        let (i, j, b) = pivot_change(&a).unwrap();
        assert_eq!((i, j), (1, 1));
        assert_eq!(b, FpMatrix::identity(f, 2));

        let anti = FpMatrix::from_i64_rows(f, &[vec![0, 1], vec![1, 0]]).unwrap();
        let (i, j, b) = pivot_change(&anti).unwrap();
        assert_eq!((i, j), (1, 2));
        let c = b.mul(&anti).unwrap().mul(&b.transpose()).unwrap();
        // (e₁ + e₂) A (e₁ + e₂)ᵀ = 2 a₁₂
        assert_eq!(c.get(0, 0), 2);

        let dg = FpMatrix::from_i64_rows(f, &[vec![0, 0], vec![0, 3]]).unwrap();
        let (i, j, b) = pivot_change(&dg).unwrap();
        assert_eq!((i, j), (2, 2));
        assert_eq!(b.to_rows(), vec![vec![0, 1], vec![1, 0]]);

        let d3 = FpMatrix::from_i64_rows(f, &[vec![0, 0, 0], vec![0, 0, 0], vec![0, 0, 4]]).unwrap();
        let (_, _, b) = pivot_change(&d3).unwrap();
        assert_eq!(b.mul(&d3).unwrap().mul(&b.transpose()).unwrap().get(0, 0), 4);

        assert_eq!(pivot_change(&FpMatrix::zeros(f, 2, 2)).map(|x| x.0), Err(Error::ZeroForm));
    }

    #[test]
    fn divide_with_pivot_recovers_multiple() {
        let f = k(7);
        let m = QuadForm::from_i64(f, &[vec![0, 1, 0], vec![1, 0, 0], vec![0, 0, 0]], &[0, 0, 1], 3).unwrap();
        let r = poly(f, 3, &[(vec![0, 1, 1], 2), (vec![1, 0, 0], 5)]);
        let p = &m.to_poly() * &r;
        let c = divide(&p, &m).unwrap();
        assert_eq!(c.pivot, (1, 2));
        assert!(c.verify(&p, &m));
        assert!(c.is_exact());
        assert_eq!(c.quotient_original().unwrap(), r);
    }

    #[test]
    fn nullstellensatz_examples() {
        let f = k(7);
        let m = QuadForm::sphere(f, 4, 2);
        let r = poly(f, 4, &[(vec![1, 1, 0, 0], 3), (vec![0, 0, 0, 1], 1)]);
        let p = &m.to_poly() * &r;
        match nullstellensatz(&p, &m, 1e6).unwrap() {
            NullOutcome::Divides { r: got, .. } => assert_eq!(&m.to_poly() * &got, p),
            o => panic!("{o:?}"),
        }
        match nullstellensatz(&FpMultiPoly::one(f, 4), &m, 1e6).unwrap() {
            NullOutcome::Witness { n, value } => {
                assert_eq!(m.eval(&n), 0);
                assert_eq!(value, 1);
            }
            o => panic!("{o:?}"),
        }
        // M·R + adjustment by n₁: the adjustment does not vanish on V(M)
        let adj = &p + &FpMultiPoly::var(f, 4, 0);
        match nullstellensatz(&adj, &m, 1e6).unwrap() {
            NullOutcome::Witness { n, value } => {
                assert_eq!(m.eval(&n), 0);
                assert_ne!(value, 0);
                assert_eq!(adj.eval_fp(&n), value);
            }
            o => panic!("{o:?}"),
        }
    }

    #[test]
    fn dichotomy_examples() {
        let f = k(5);
        let m = QuadForm::sphere(f, 4, 2);
        let r = poly(f, 4, &[(vec![0, 1, 0, 0], 1)]);
        let v = dichotomy(&(&m.to_poly() * &r), &m, 0.5, 1e6).unwrap();
        assert_eq!(v.kind, DichotomyKind::Contained);
        assert!(v.certificate.unwrap().is_exact());

        let v = dichotomy(&FpMultiPoly::var(f, 4, 0), &m, 0.5, 1e6).unwrap();
        assert_eq!(v.kind, DichotomyKind::SmallIntersection);
        // n₁ = 0 leaves n₂² + n₃² + n₄² = 2 in 𝔽_5³: 5² − 5 = 20 points
        assert_eq!(v.count, 20);
        assert!(v.within_bound);

        let v = dichotomy(&FpMultiPoly::constant(f, 4, 3), &m, 0.5, 1e6).unwrap();
        assert_eq!(v.kind, DichotomyKind::SmallIntersection);
        assert_eq!(v.count, 0);
    }

    #[test]
    fn antiderivative_examples() {
        let f = k(5);
        let m = QuadForm::sphere(f, 3, 0);
        let w = poly(f, 3, &[(vec![0, 1, 0], 2), (vec![1, 0, 0], 1)]);
        let q = &m.to_poly() * &w;
        assert_eq!(antiderivative(&q, &m, 1e6).unwrap(), AntiderivOutcome::Quotient(w));

        let m1 = QuadForm::sphere(f, 3, 1);
        match antiderivative(&FpMultiPoly::var(f, 3, 0), &m1, 1e6).unwrap() {
            AntiderivOutcome::HypothesisFailed { i, n } => {
                assert_eq!(i, 2);
                assert_eq!(m1.eval(&n), 0);
            }
            o => panic!("{o:?}"),
        }
        assert_eq!(
            antiderivative(&FpMultiPoly::zero(f, 3), &m1, 1e6).unwrap(),
            AntiderivOutcome::Quotient(FpMultiPoly::zero(f, 3))
        );

        // Q = M − M(0) has Q(0) = 0 and proportional gradients, yet Q = M·1 + 1
        let q = &m1.to_poly() + &FpMultiPoly::one(f, 3);
        assert_eq!(
            antiderivative(&q, &m1, 1e6).unwrap(),
            AntiderivOutcome::ConstantOffset { w: FpMultiPoly::one(f, 3), a: 1 }
        );
    }

    #[test]
    fn intrinsic_examples() {
        let f = k(5);
        let m = QuadForm::sphere(f, 5, 1);
        let g1 = FpMultiPoly::one(f, 5);
        let g2 = poly(f, 5, &[(vec![1, 0, 0, 0, 0], 3), (vec![0, 0, 0, 0, 0], 1)]);
        let g = &(&m.to_poly() * &g1) + &g2;
        match intrinsic_decompose(&g, &m, 2, 1e9).unwrap() {
            IntrinsicOutcome::Decomposed { g1: a, g2: b } => {
                assert_eq!(&(&m.to_poly() * &a) + &b, g);
                assert!(b.degree() <= 1);
            }
            o => panic!("{o:?}"),
        }
        let sq = poly(f, 5, &[(vec![2, 0, 0, 0, 0], 1)]);
        match intrinsic_decompose(&sq, &m, 2, 1e9).unwrap() {
            IntrinsicOutcome::Witness(w) => {
                let t = value_table(&sq);
                let sc = CubeScanner::new(&m, 1e6).unwrap();
                let verts: Vec<usize> = (0..4)
                    .map(|mask: usize| {
                        let mut v = w[0].clone();
                        for (i, h) in w[1..].iter().enumerate() {
                            if mask >> i & 1 == 1 {
                                v = v.iter().zip(h).map(|(&a, &b)| f.add(a, b)).collect();
                            }
                        }
                        assert_eq!(m.eval(&v), 0);
                        sc.index(&v)
                    })
                    .collect();
                assert_ne!(cube_difference(f, &t, &verts, 2), 0);
            }
            o => panic!("{o:?}"),
        }
        let low = FpMultiPoly::var(f, 5, 3);
        assert_eq!(
            intrinsic_decompose(&low, &m, 2, 1e9).unwrap(),
            IntrinsicOutcome::Decomposed { g1: FpMultiPoly::zero(f, 5), g2: low }
        );
    }

    #[test]
    fn gowers_equation_examples() {
        let f = k(5);
        let m = QuadForm::sphere(f, 4, 1);
        let mp = m.to_poly();
        // P = 0, Q = M g₁ + g₂ with s = k = 2
        let q = &(&mp * &FpMultiPoly::one(f, 4)) + &FpMultiPoly::var(f, 4, 2);
        match gowers_equation_solve(&FpMultiPoly::zero(f, 4), &q, &m, 2, 2, 1e9).unwrap() {
            GowersOutcome::Factored(fac) => assert!(fac.verify(&FpMultiPoly::zero(f, 4), &q, &m, 2, 2)),
            o => panic!("{o:?}"),
        }
        // s = 1, k = 3: P = M P₁ with deg P₁ = 0, Q = M Q₁ + c
        let p = mp.scale_u64(2);
        let q = &(&mp * &FpMultiPoly::var(f, 4, 1)) + &FpMultiPoly::constant(f, 4, 4);
        match gowers_equation_solve(&p, &q, &m, 1, 3, 1e9).unwrap() {
            GowersOutcome::Factored(fac) => assert!(fac.verify(&p, &q, &m, 1, 3)),
            o => panic!("{o:?}"),
        }
        let bad = FpMultiPoly::var(f, 4, 0);
        assert!(matches!(
            gowers_equation_solve(&bad, &q, &m, 1, 3, 1e9).unwrap(),
            GowersOutcome::HypothesisFailed(_)
        ));
    }

    #[test]
    fn shifted_representation_reexpands() {
        let f = k(7);
        let m = QuadForm::sphere(f, 5, 3);
        let h = vec![1, 2, 0, 0, 0];
        let mp = m.to_poly();
        let dm = &mp.shift(&h).unwrap() - &mp;
        let p = &(&mp * &FpMultiPoly::var(f, 5, 4)) + &(&dm * &poly(f, 5, &[(vec![0, 0, 2, 0, 0], 1)]));
        let parts = shifted_representation(&p, &m, &[h]).unwrap().unwrap();
        assert_eq!(&(&mp * &parts[0]) + &(&dm * &parts[1]), p);
        assert!(parts[0].degree() <= 1 && parts[1].degree() <= 2);
    }
}
