//! Exact enumeration of zero sets of quadratic forms, character sums over them,
//! and the count estimates as checkable reports.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ffcore::{FpMatrix, PrimeField};
use crate::quadform::{AffineSubspace, QuadForm};

/// Default cap on the number of points an enumeration may visit.
pub const DEFAULT_BUDGET: f64 = 1e8;

/// Constant used for every O(·) bound.
pub const BOUND_CONSTANT: f64 = 4.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CountReport {
    pub exact: u64,
    pub main_term: f64,
    pub error_bound: f64,
    pub constant_used: f64,
    /// `|exact − main_term| / error_bound`.
    pub ratio: f64,
    pub pass: bool,
}

impl CountReport {
    pub fn new(exact: u64, main_term: f64, error_bound: f64) -> Self {
        let ratio = (exact as f64 - main_term).abs() / error_bound;
        CountReport {
            exact,
            main_term,
            error_bound,
            constant_used: BOUND_CONSTANT,
            ratio,
            pass: ratio <= BOUND_CONSTANT,
        }
    }
}

/// Lexicographic iterator over 𝔽_p^d.
pub struct Points {
    p: u64,
    cur: Option<Vec<u64>>,
}

impl Iterator for Points {
    type Item = Vec<u64>;
    fn next(&mut self) -> Option<Vec<u64>> {
        let out = self.cur.clone()?;
        let mut next = out.clone();
        let mut i = next.len();
        loop {
            if i == 0 {
                self.cur = None;
                break;
            }
            i -= 1;
            next[i] += 1;
            if next[i] < self.p {
                self.cur = Some(next);
                break;
            }
            next[i] = 0;
        }
        Some(out)
    }
}

pub fn all_points(field: PrimeField, d: usize) -> Points {
    Points { p: field.p(), cur: Some(vec![0; d]) }
}

/// The point with lexicographic index `idx`.
pub fn point_at(p: u64, d: usize, mut idx: u64) -> Vec<u64> {
    let mut out = vec![0; d];
    for i in (0..d).rev() {
        out[i] = idx % p;
        idx /= p;
    }
    out
}

pub fn point_index(p: u64, n: &[u64]) -> u64 {
    n.iter().fold(0, |acc, &x| acc * p + x)
}

pub fn check_budget(p: u64, dim: usize, budget: f64) -> Result<()> {
    let needed = (p as f64).powi(dim as i32);
    if needed > budget {
        return Err(Error::BudgetExceeded { needed, budget });
    }
    Ok(())
}

/// Applies `f` to every point of 𝔽_p^dim in slabs by first coordinate; results in lexicographic order.
pub fn scan<T, F>(field: PrimeField, dim: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(&[u64]) -> Option<T> + Sync,
{
    let p = field.p();
    if dim == 0 {
        return f(&[]).into_iter().collect();
    }
    let slab = p.pow(dim as u32 - 1);
    let parts: Vec<Vec<T>> = (0..p)
        .into_par_iter()
        .map(|first| {
            let mut out = Vec::new();
            let mut pt = vec![0u64; dim];
            pt[0] = first;
            for idx in 0..slab {
                let mut r = idx;
                for i in (1..dim).rev() {
                    pt[i] = r % p;
                    r /= p;
                }
                if let Some(v) = f(&pt) {
                    out.push(v);
                }
            }
            out
        })
        .collect();
    parts.into_iter().flatten().collect()
}

/// Counts points of 𝔽_p^dim satisfying `pred`.
pub fn count_where<F>(field: PrimeField, dim: usize, pred: F) -> u64
where
    F: Fn(&[u64]) -> bool + Sync,
{
    let p = field.p();
    if dim == 0 {
        return u64::from(pred(&[]));
    }
    let slab = p.pow(dim as u32 - 1);
    (0..p)
        .into_par_iter()
        .map(|first| {
            let mut pt = vec![0u64; dim];
            pt[0] = first;
            let mut c = 0u64;
            for idx in 0..slab {
                let mut r = idx;
                for i in (1..dim).rev() {
                    pt[i] = r % p;
                    r /= p;
                }
                c += u64::from(pred(&pt));
            }
            c
        })
        .sum()
}

/// `Ω = V(M) ∩ (V + c)`.
#[derive(Clone, Debug)]
pub struct QuadSet {
    pub form: QuadForm,
    pub sub: AffineSubspace,
    equations: Vec<Vec<u64>>,
}

impl QuadSet {
    pub fn new(form: QuadForm, sub: Option<AffineSubspace>) -> Result<Self> {
        let d = form.dim();
        let sub = sub.unwrap_or_else(|| AffineSubspace::full(form.field(), d));
        if sub.ambient_dim() != d {
            return Err(Error::Dimension("subspace and form differ in dimension".into()));
        }
        let equations = if sub.basis().is_empty() {
            crate::quadform::standard_basis(d)
        } else {
            FpMatrix::from_rows(form.field(), sub.basis())?.null_space()
        };
        Ok(QuadSet { form, sub, equations })
    }

    pub fn sphere(field: PrimeField, d: usize, r: u64) -> Self {
        Self::new(QuadForm::sphere(field, d, r), None).unwrap()
    }

    pub fn field(&self) -> PrimeField {
        self.form.field()
    }

    pub fn dim(&self) -> usize {
        self.form.dim()
    }

    pub fn contains(&self, n: &[u64]) -> bool {
        let f = self.field();
        if self.form.eval(n) != 0 {
            return false;
        }
        self.equations.iter().all(|h| {
            let mut acc = 0;
            for ((&x, &c), &e) in n.iter().zip(self.sub.offset()).zip(h) {
                acc = f.add(acc, f.mul(f.sub(x, c), e));
            }
            acc == 0
        })
    }

    /// Points in lexicographic order.
    pub fn points(&self, budget: f64) -> Result<Vec<Vec<u64>>> {
        enumerate_zeros(&self.form, Some(&self.sub), budget)
    }
}

/// `V(M) ∩ (V + c)`, sorted lexicographically.
pub fn enumerate_zeros(m: &QuadForm, sub: Option<&AffineSubspace>, budget: f64) -> Result<Vec<Vec<u64>>> {
    let f = m.field();
    match sub {
        None => {
            check_budget(f.p(), m.dim(), budget)?;
            Ok(scan(f, m.dim(), |n| (m.eval(n) == 0).then(|| n.to_vec())))
        }
        Some(s) => {
            check_budget(f.p(), s.dim(), budget)?;
            let mut pts = scan(f, s.dim(), |t| {
                let n = s.point(t);
                (m.eval(&n) == 0).then_some(n)
            });
            pts.sort();
            Ok(pts)
        }
    }
}

/// `|V(M) ∩ (V + c)|` against `p^{d−r−1}` with error `p^{d−r−1−(s−2)/2}`, s the restricted rank.
pub fn zero_count_check(m: &QuadForm, sub: Option<&AffineSubspace>, budget: f64) -> Result<CountReport> {
    let full = AffineSubspace::full(m.field(), m.dim());
    let s_ref = sub.unwrap_or(&full);
    let s = m.restricted_rank(s_ref)?;
    if s < 3 {
        return Err(Error::RankHypothesisFailed { rank: s, needed: 3 });
    }
    let exact = enumerate_zeros(m, sub, budget)?.len() as u64;
    let p = m.field().p() as f64;
    let e = s_ref.dim() as f64 - 1.0;
    Ok(CountReport::new(exact, p.powf(e), p.powf(e - (s as f64 - 2.0) / 2.0)))
}

/// Neumaier-compensated sum of complex numbers.
pub fn compensated_sum<I: IntoIterator<Item = Complex64>>(xs: I) -> Complex64 {
    let (mut sr, mut cr, mut si, mut ci) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for z in xs {
        let t = sr + z.re;
        cr += if sr.abs() >= z.re.abs() { (sr - t) + z.re } else { (z.re - t) + sr };
        sr = t;
        let t = si + z.im;
        ci += if si.abs() >= z.im.abs() { (si - t) + z.im } else { (z.im - t) + si };
        si = t;
    }
    Complex64::new(sr + cr, si + ci)
}

/// `exp(2πi k/p)` for `k = 0..p`.
pub fn roots_of_unity(p: u64) -> Vec<Complex64> {
    (0..p)
        .map(|k| {
            let t = 2.0 * std::f64::consts::PI * k as f64 / p as f64;
            Complex64::new(t.cos(), t.sin())
        })
        .collect()
}

/// `Σ_k hist[k] · exp(2πi k/p)`.
pub fn histogram_sum(hist: &[u64], table: &[Complex64]) -> Complex64 {
    compensated_sum(hist.iter().zip(table).map(|(&h, &w)| w * h as f64))
}

/// `E_{n ∈ V(M)} exp(ξ·τ(n)/p)`; summands are grouped by the residue of `ξ·n`.
pub fn exp_sum(m: &QuadForm, xi: &[i64], budget: f64) -> Result<Complex64> {
    let pts = enumerate_zeros(m, None, budget)?;
    exp_sum_over(m.field(), &pts, xi)
}

pub fn exp_sum_over(field: PrimeField, pts: &[Vec<u64>], xi: &[i64]) -> Result<Complex64> {
    if pts.is_empty() {
        return Err(Error::HypothesisFailed("empty zero set".into()));
    }
    let p = field.p();
    let xr: Vec<u64> = xi.iter().map(|&x| field.reduce_i64(x)).collect();
    let mut hist = vec![0u64; p as usize];
    for n in pts {
        hist[field.dot(&xr, n) as usize] += 1;
    }
    Ok(histogram_sum(&hist, &roots_of_unity(p)) / pts.len() as f64)
}

/// `Σ_{n ∈ 𝔽_p} exp(j n²/p)`.
pub fn gauss_sum(field: PrimeField, j: u64) -> Result<Complex64> {
    let j = field.reduce(j);
    if j == 0 {
        return Err(Error::HypothesisFailed("gauss sum needs j ≠ 0".into()));
    }
    let p = field.p();
    let mut hist = vec![0u64; p as usize];
    for n in 0..p {
        hist[field.mul(j, field.mul(n, n)) as usize] += 1;
    }
    Ok(histogram_sum(&hist, &roots_of_unity(p)))
}

/// `#{n : M(n) is a square or zero}` against `p^d/2`.
pub fn quadratic_root_count(m: &QuadForm, budget: f64) -> Result<CountReport> {
    let f = m.field();
    let d = m.dim();
    check_budget(f.p(), d, budget)?;
    let r = m.rank();
    let exponent = match r {
        0 | 1 => return Err(Error::RankHypothesisFailed { rank: r, needed: 2 }),
        2 => 0.5,
        _ => (r as f64 - 2.0) / 2.0,
    };
    let squares: Vec<bool> = (0..f.p()).map(|x| f.is_square(x)).collect();
    let exact = count_where(f, d, |n| squares[m.eval(n) as usize]);
    let main = (f.p() as f64).powi(d as i32) / 2.0;
    Ok(CountReport::new(exact, main, main * (f.p() as f64).powf(-exponent)))
}

/// `V(M)^{h₁,…,h_r}` with its count report against `p^{d−r−1}`.
pub fn enumerate_vmh(m: &QuadForm, hs: &[Vec<u64>], budget: f64) -> Result<(Vec<Vec<u64>>, CountReport)> {
    let f = m.field();
    let d = m.dim();
    let r = hs.len();
    if m.is_degenerate() {
        return Err(Error::RankHypothesisFailed { rank: m.rank(), needed: d });
    }
    if r > 0 {
        let rows: Vec<Vec<u64>> = hs.iter().map(|h| m.matrix().vec_mul(h)).collect();
        if FpMatrix::from_rows_sized(f, d, &rows)?.rank() < r {
            return Err(Error::DependentShifts);
        }
    }
    if d < 2 * r + 3 {
        return Err(Error::RankHypothesisFailed { rank: d, needed: 2 * r + 3 });
    }
    check_budget(f.p(), d, budget)?;
    let pts = scan(f, d, |n| {
        if m.eval(n) != 0 {
            return None;
        }
        let ok = hs.iter().all(|h| {
            let shifted: Vec<u64> = n.iter().zip(h).map(|(&a, &b)| f.add(a, b)).collect();
            m.eval(&shifted) == 0
        });
        ok.then(|| n.to_vec())
    });
    let p = f.p() as f64;
    let e = d as f64 - r as f64 - 1.0;
    let report = CountReport::new(pts.len() as u64, p.powf(e), p.powf(e - 0.5));
    Ok((pts, report))
}

/// Whether all `2^s` vertices `n + Σ_{i∈S} h_i` lie in Ω.
pub fn in_gowers_set(omega: &QuadSet, n: &[u64], hs: &[Vec<u64>]) -> bool {
    let f = omega.field();
    (0u32..1 << hs.len()).all(|mask| {
        let mut v = n.to_vec();
        for (i, h) in hs.iter().enumerate() {
            if mask >> i & 1 == 1 {
                for (x, &y) in v.iter_mut().zip(h) {
                    *x = f.add(*x, y);
                }
            }
        }
        omega.contains(&v)
    })
}

/// Membership through the quadratic description: `n ∈ V(M)^{h}`, `h_i ∈ V`, `(h_i A)·h_j = 0` for `i ≠ j`.
pub fn in_gowers_set_structural(omega: &QuadSet, n: &[u64], hs: &[Vec<u64>]) -> bool {
    let f = omega.field();
    let m = &omega.form;
    if !omega.contains(n) {
        return false;
    }
    for (i, h) in hs.iter().enumerate() {
        let shifted: Vec<u64> = n.iter().zip(h).map(|(&a, &b)| f.add(a, b)).collect();
        if !omega.contains(&shifted) {
            return false;
        }
        for g in &hs[..i] {
            if m.bilinear(h, g) != 0 {
                return false;
            }
        }
    }
    true
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GowersCount {
    pub s: usize,
    pub count: u64,
    /// `p^{(s+1)(d−r)−(s(s+1)/2+1)}`.
    pub predicted: f64,
    /// Whether `rank(M|_{V+c}) ≥ s² + s + 3`.
    pub rank_hypothesis: bool,
    /// Tuples `(n, h₁, …, h_s)` in lexicographic order, when listing was requested.
    pub tuples: Option<Vec<Vec<Vec<u64>>>>,
}

/// `Box_s(Ω)` by fiber iteration: each new `h_j` is `m − n` for `m ∈ Ω`, and all new vertices are checked.
pub fn enumerate_gowers(omega: &QuadSet, s: usize, list: bool, budget: f64) -> Result<GowersCount> {
    let f = omega.field();
    let pts = omega.points(budget)?;
    let work_estimate = (pts.len() as f64).powi(s as i32 + 1);
    if list && (f.p() as f64).powi(((s + 1) * omega.dim()) as i32) > budget {
        return Err(Error::BudgetExceeded {
            needed: (f.p() as f64).powi(((s + 1) * omega.dim()) as i32),
            budget,
        });
    }
    if work_estimate > budget {
        return Err(Error::BudgetExceeded { needed: work_estimate, budget });
    }
    let per_root: Vec<(u64, Vec<Vec<Vec<u64>>>)> = pts
        .par_iter()
        .map(|n| {
            let mut tuples = Vec::new();
            let mut hs: Vec<Vec<u64>> = Vec::new();
            let c = extend_cube(omega, &pts, n, &mut hs, s, list, &mut tuples);
            (c, tuples)
        })
        .collect();
    let count = per_root.iter().map(|(c, _)| c).sum();
    let tuples = list.then(|| {
        let mut all: Vec<Vec<Vec<u64>>> = per_root.into_iter().flat_map(|(_, t)| t).collect();
        all.sort();
        all
    });
    let d = omega.dim() as i32;
    let r = omega.sub.codim() as i32;
    let s_i = s as i32;
    let exponent = (s_i + 1) * (d - r) - (s_i * (s_i + 1) / 2 + 1);
    let restricted = omega.form.restricted_rank(&omega.sub)?;
    Ok(GowersCount {
        s,
        count,
        predicted: (f.p() as f64).powi(exponent),
        rank_hypothesis: restricted >= s * s + s + 3,
        tuples,
    })
}

fn extend_cube(
    omega: &QuadSet,
    pts: &[Vec<u64>],
    n: &[u64],
    hs: &mut Vec<Vec<u64>>,
    s: usize,
    list: bool,
    out: &mut Vec<Vec<Vec<u64>>>,
) -> u64 {
    if hs.len() == s {
        if list {
            let mut t = vec![n.to_vec()];
            t.extend(hs.iter().cloned());
            out.push(t);
        }
        return 1;
    }
    let f = omega.field();
    let j = hs.len();
    let mut total = 0;
    for m in pts {
        let h: Vec<u64> = m.iter().zip(n).map(|(&a, &b)| f.sub(a, b)).collect();
        // new vertices: n + h + Σ_{i∈S} h_i for nonempty S ⊆ {0..j}
        let ok = (1u32..1 << j).all(|mask| {
            let mut v = m.clone();
            for (i, g) in hs.iter().enumerate() {
                if mask >> i & 1 == 1 {
                    for (x, &y) in v.iter_mut().zip(g) {
                        *x = f.add(*x, y);
                    }
                }
            }
            omega.contains(&v)
        });
        if ok {
            hs.push(h);
            total += extend_cube(omega, pts, n, hs, s, list, out);
            hs.pop();
        }
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;

    fn k(p: u64) -> PrimeField {
        PrimeField::new(p).unwrap()
    }

    /// #{(x, y) ∈ 𝔽_p² : x² + y² = t}, by brute force.
    fn two_square_count(p: u64, t: u64) -> u64 {
        let mut c = 0;
        for x in 0..p {
            for y in 0..p {
                if (x * x + y * y) % p == t % p {
                    c += 1;
                }
            }
        }
        c
    }

    #[test]
    fn sphere_count_matches_fibers() {
        let f = k(5);
        let m = QuadForm::sphere(f, 3, 1);
        let pts = enumerate_zeros(&m, None, DEFAULT_BUDGET).unwrap();
        assert_eq!(pts.len(), 30);
        let fibers: Vec<u64> = (0..5).map(|t| two_square_count(5, (1 + 25 - t * t) % 5)).collect();
        assert_eq!(fibers, vec![4, 9, 4, 4, 9]);
        assert_eq!(fibers.iter().sum::<u64>(), 30);
        assert!(pts.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn trivial_zero_sets() {
        let f = k(5);
        let one = QuadForm::diagonal(f, &[0, 0], &[0, 0], 1).unwrap();
        assert!(enumerate_zeros(&one, None, DEFAULT_BUDGET).unwrap().is_empty());
        let zero = QuadForm::diagonal(f, &[0, 0], &[0, 0], 0).unwrap();
        assert_eq!(enumerate_zeros(&zero, None, DEFAULT_BUDGET).unwrap().len(), 25);
        assert!(matches!(enumerate_zeros(&zero, None, 10.0), Err(Error::BudgetExceeded { .. })));
    }

    #[test]
    fn zero_count_examples() {
        let f = k(5);
        let m = QuadForm::sphere(f, 3, 1);
        let rep = zero_count_check(&m, None, DEFAULT_BUDGET).unwrap();
        assert_eq!(rep.exact, 30);
        assert_eq!(rep.main_term, 25.0);
        assert!(rep.pass);
        let zero = QuadForm::diagonal(f, &[0, 0, 0], &[0, 0, 0], 0).unwrap();
        assert!(matches!(zero_count_check(&zero, None, DEFAULT_BUDGET), Err(Error::RankHypothesisFailed { .. })));
        // hyperplane n₃ = 1 in d = 4, restricted rank 3
        let m4 = QuadForm::sphere(f, 4, 1);
        let s = AffineSubspace::new(f, 4, vec![vec![1, 0, 0, 0], vec![0, 1, 0, 0], vec![0, 0, 0, 1]], vec![0, 0, 1, 0])
            .unwrap();
        let rep = zero_count_check(&m4, Some(&s), DEFAULT_BUDGET).unwrap();
        assert_eq!(rep.main_term, 25.0);
        let brute = all_points(f, 4).filter(|n| n[2] == 1 && m4.eval(n) == 0).count() as u64;
        assert_eq!(rep.exact, brute);
    }

    #[test]
    fn exp_sum_examples() {
        let f = k(5);
        let m = QuadForm::sphere(f, 3, 1);
        let z = exp_sum(&m, &[0, 0, 0], DEFAULT_BUDGET).unwrap();
        assert!((z - Complex64::new(1.0, 0.0)).norm() < 1e-12);
        let z = exp_sum(&m, &[1, 0, 0], DEFAULT_BUDGET).unwrap();
        let expected = 5.0 * (5f64.sqrt() - 1.0) / 2.0 / 30.0;
        assert!((z.norm() - expected).abs() < 1e-12, "{z}");
        let z = exp_sum(&m, &[5, 10, -15], DEFAULT_BUDGET).unwrap();
        assert!((z - Complex64::new(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn gauss_sum_examples() {
        let g = gauss_sum(k(5), 1).unwrap();
        assert!((g.re - 5f64.sqrt()).abs() < 1e-9 && g.im.abs() < 1e-9);
        let g = gauss_sum(k(7), 1).unwrap();
        assert!((g.norm() - 7f64.sqrt()).abs() < 1e-9);
        // G(j) = legendre(j) G(1)
        for p in [5u64, 7, 11, 13] {
            let f = k(p);
            let g1 = gauss_sum(f, 1).unwrap();
            for j in 1..p {
                let gj = gauss_sum(f, j).unwrap();
                assert!((gj - g1 * f.legendre(j) as f64).norm() < 1e-9);
            }
        }
    }

    #[test]
    fn quadratic_root_examples() {
        let f = k(5);
        let m = QuadForm::diagonal(f, &[1, 1], &[0, 0], 0).unwrap();
        let rep = quadratic_root_count(&m, DEFAULT_BUDGET).unwrap();
        assert_eq!(rep.exact, 17);
        assert_eq!(rep.main_term, 12.5);
        let nonsq = QuadForm::diagonal(f, &[1, 1, 1], &[0, 0, 0], 0).unwrap();
        assert!(quadratic_root_count(&nonsq, DEFAULT_BUDGET).is_ok());
    }

    #[test]
    fn vmh_examples() {
        let f = k(5);
        let m = QuadForm::sphere(f, 5, 1);
        let (pts, _) = enumerate_vmh(&m, &[], DEFAULT_BUDGET).unwrap();
        assert_eq!(pts, enumerate_zeros(&m, None, DEFAULT_BUDGET).unwrap());
        let (_, rep) = enumerate_vmh(&m, &[vec![1, 0, 0, 0, 0]], DEFAULT_BUDGET).unwrap();
        assert_eq!(rep.main_term, 125.0);
        assert!(rep.pass, "{rep:?}");
        let h = vec![1, 0, 0, 0, 0];
        assert!(matches!(enumerate_vmh(&m, &[h.clone(), h], DEFAULT_BUDGET), Err(Error::DependentShifts)));
    }

    #[test]
    fn gowers_examples() {
        let f = k(5);
        let omega = QuadSet::sphere(f, 3, 1);
        let b0 = enumerate_gowers(&omega, 0, true, DEFAULT_BUDGET).unwrap();
        assert_eq!(b0.count, 30);
        let b1 = enumerate_gowers(&omega, 1, true, DEFAULT_BUDGET).unwrap();
        assert_eq!(b1.count, 900);
        for t in b1.tuples.as_ref().unwrap() {
            assert!(in_gowers_set(&omega, &t[0], &t[1..]));
        }
        let empty = QuadSet::new(QuadForm::diagonal(f, &[0, 0, 0], &[0, 0, 0], 1).unwrap(), None).unwrap();
        for s in 0..3 {
            assert_eq!(enumerate_gowers(&empty, s, false, DEFAULT_BUDGET).unwrap().count, 0);
        }
    }

    #[test]
    fn gowers_membership_descriptions_agree() {
        let f = k(5);
        let omega = QuadSet::sphere(f, 3, 1);
        let pts = omega.points(DEFAULT_BUDGET).unwrap();
        for n in pts.iter().step_by(3) {
            for h1 in all_points(f, 3).step_by(7) {
                for h2 in all_points(f, 3).step_by(11) {
                    let hs = vec![h1.clone(), h2.clone()];
                    assert_eq!(in_gowers_set(&omega, n, &hs), in_gowers_set_structural(&omega, n, &hs));
                }
            }
        }
    }
}
