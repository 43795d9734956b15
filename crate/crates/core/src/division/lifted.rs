//! Solvers for quadratic forms `M(n) = ((nA)·n + u·n + v)/p` on ℤ^d taking values in ℤ/p.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use super::local::{is_local_integer, solve_local};
use super::{nullstellensatz, NullOutcome};
use crate::counting::enumerate_zeros;
use crate::error::{Error, Result};
use crate::ffcore::{FpMatrix, PrimeField};
use crate::fpoly::{
    fiber_poly, induce, integer_lift, is_partially_p_periodic_on, monomials_up_to, rat, Monomial,
    RatMultiPoly, TauIota,
};
use crate::quadform::QuadForm;

/// `M(n) = ((nA)·n + u·n + v)/p` with integer data.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ZpQuadForm {
    pub p: u64,
    #[serde(rename = "A")]
    pub a: Vec<Vec<i64>>,
    pub u: Vec<i64>,
    pub v: i64,
}

impl ZpQuadForm {
    pub fn new(p: u64, a: Vec<Vec<i64>>, u: Vec<i64>, v: i64) -> Result<Self> {
        PrimeField::new(p)?;
        let d = a.len();
        if a.iter().any(|r| r.len() != d) || u.len() != d {
            return Err(Error::Dimension("form data".into()));
        }
        if (0..d).any(|i| (0..d).any(|j| a[i][j] != a[j][i])) {
            return Err(Error::NotSymmetric);
        }
        Ok(ZpQuadForm { p, a, u, v })
    }

    /// The lift `(τ(A), τ(u), τ(v))/p` of a form over 𝔽_p.
    pub fn lift(m: &QuadForm) -> Self {
        let ti = TauIota::new(m.field());
        let d = m.dim();
        let a = (0..d).map(|i| (0..d).map(|j| ti.tau(m.matrix().get(i, j))).collect()).collect();
        ZpQuadForm { p: m.field().p(), a, u: ti.tau_vec(m.linear()), v: ti.tau(m.constant()) }
    }

    pub fn dim(&self) -> usize {
        self.u.len()
    }

    pub fn field(&self) -> PrimeField {
        PrimeField::new(self.p).expect("validated prime")
    }

    /// The induced form `M̄ = ι∘(pM)∘τ` over 𝔽_p.
    pub fn reduce(&self) -> QuadForm {
        let f = self.field();
        let a = FpMatrix::from_i64_rows(f, &self.a).expect("square");
        let u = self.u.iter().map(|&x| f.reduce_i64(x)).collect();
        QuadForm::new(a, u, f.reduce_i64(self.v)).expect("symmetric")
    }

    pub fn p_rank(&self) -> usize {
        self.reduce().rank()
    }

    pub fn to_poly(&self) -> RatMultiPoly {
        let d = self.dim();
        let p = self.p as i64;
        let mut out = RatMultiPoly::rat_zero(d);
        for i in 0..d {
            for j in i..d {
                let c = if i == j { self.a[i][i] } else { 2 * self.a[i][j] };
                let mut e = vec![0; d];
                e[i] += 1;
                e[j] += 1;
                out.add_term(e, rat(c, p));
            }
            let mut e = vec![0; d];
            e[i] = 1;
            out.add_term(e, rat(self.u[i], p));
        }
        out.add_term(vec![0; d], rat(self.v, p));
        out
    }

    /// `τ(V(M̄))`, the residues mod p of `V_p(M) = {n ∈ ℤ^d : M(n) ∈ ℤ}`.
    pub fn residue_points(&self, budget: f64) -> Result<Vec<Vec<i64>>> {
        let ti = TauIota::new(self.field());
        Ok(enumerate_zeros(&self.reduce(), None, budget)?.iter().map(|n| ti.tau_vec(n)).collect())
    }

    fn require_rank(&self) -> Result<()> {
        let rank = self.p_rank();
        if rank < 3 {
            return Err(Error::RankHypothesisFailed { rank, needed: 3 });
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum LiftOutcome {
    /// `P = M P₁ + P₀`, `P₁` with integer coefficients, `P₀` integer-valued.
    Decomposed { p1: RatMultiPoly, p0: RatMultiPoly },
    /// `n` with `M(n) ∈ ℤ` and `P(n) ∉ ℤ`.
    Witness(Vec<i64>),
}

/// Nullstellensatz through the τ/ι correspondence: solve `F = M̄ R̄` over 𝔽_p and lift `R̄`.
pub fn lift_nullstellensatz(p: &RatMultiPoly, m: &ZpQuadForm, budget: f64) -> Result<LiftOutcome> {
    m.require_rank()?;
    let field = m.field();
    let big_f = induce(p, field)?;
    let mbar = m.reduce();
    match nullstellensatz(&big_f, &mbar, budget)? {
        NullOutcome::Divides { r, .. } => {
            let p1 = integer_lift(&r);
            let p0 = p - &(&m.to_poly() * &p1);
            if !p0.is_integer_valued() {
                return Err(Error::TheoremRegime("remainder of the lift is not integer-valued".into()));
            }
            Ok(LiftOutcome::Decomposed { p1, p0 })
        }
        NullOutcome::Witness { n, .. } => Ok(LiftOutcome::Witness(TauIota::new(field).tau_vec(&n))),
        NullOutcome::Anomaly { .. } => {
            Err(Error::TheoremRegime("V(M) inside V(P) without divisibility".into()))
        }
    }
}

/// `Q₀ f = Σ_i Mⁱ R_i`.
#[derive(Clone, Debug, PartialEq)]
pub struct VanishingDecomposition {
    pub q0: BigInt,
    /// `R_0, …, R_{⌊s/2⌋}`.
    pub r: Vec<RatMultiPoly>,
    /// Whether `p^{⌊deg f/2⌋} f` is integer-valued.
    pub p_power_integral: bool,
}

impl VanishingDecomposition {
    pub fn verify(&self, f: &RatMultiPoly, m: &ZpQuadForm) -> bool {
        let mp = m.to_poly();
        let s = f.degree();
        let mut acc = RatMultiPoly::rat_zero(f.nvars());
        let mut pw = RatMultiPoly::rat_const(f.nvars(), BigRational::one());
        for (i, r) in self.r.iter().enumerate() {
            if !r.is_integer_valued() || (!r.is_zero() && r.degree() + 2 * i > s) {
                return false;
            }
            acc = &acc + &(&pw * r);
            pw = &pw * &mp;
        }
        !self.q0.is_multiple_of(&BigInt::from(m.p)) && acc == f.scale(&BigRational::from_integer(self.q0.clone()))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum VanishingOutcome {
    Decomposed(VanishingDecomposition),
    /// A residue `n₀ ∈ τ(V(M̄))` whose fiber `m ↦ f(n₀ + pm)` is not integer-valued.
    NotSphereIntegral(Vec<i64>),
}

/// `m ↦ f(n₀ + pm)` integer-valued for every `n₀ ∈ τ(V(M̄))`, or the first failing `n₀`.
pub fn sphere_integral_witness(f: &RatMultiPoly, m: &ZpQuadForm, budget: f64) -> Result<Option<Vec<i64>>> {
    Ok(m.residue_points(budget)?.into_iter().find(|n0| !fiber_poly(f, m.p, n0).is_integer_valued()))
}

/// Solves `Σ_i Mⁱ R_i = f` for `R_i` integer-valued after clearing a denominator prime to `p`.
pub fn sphere_vanishing_decompose(f: &RatMultiPoly, m: &ZpQuadForm, budget: f64) -> Result<VanishingOutcome> {
    m.require_rank()?;
    if let Some(n0) = sphere_integral_witness(f, m, budget)? {
        return Ok(VanishingOutcome::NotSphereIntegral(n0));
    }
    let s = f.degree();
    let d = f.nvars();
    let mp = m.to_poly();
    let mut blocks = Vec::new();
    let mut pw = RatMultiPoly::rat_const(d, BigRational::one());
    for i in 0..=s / 2 {
        blocks.push(Block { multiplier: pw.clone(), degree: s - 2 * i, free: false });
        pw = &pw * &mp;
    }
    let Some(parts) = solve_blocks(f, &blocks, m.p) else {
        return Err(Error::TheoremRegime("no local solution for the sphere-integral decomposition".into()));
    };
    let q0 = common_denominator(&parts);
    let qr = BigRational::from_integer(q0.clone());
    let r: Vec<RatMultiPoly> = parts.iter().map(|x| x.scale(&qr)).collect();
    let pk = BigRational::from_integer(BigInt::from(m.p).pow((s / 2) as u32));
    Ok(VanishingOutcome::Decomposed(VanishingDecomposition {
        q0,
        r,
        p_power_integral: f.scale(&pk).is_integer_valued(),
    }))
}

/// `Q₀ f = C + R₀/p + Σ_{i≥2} Mⁱ R_i`.
#[derive(Clone, Debug, PartialEq)]
pub struct PeriodicDecomposition {
    pub q0: BigInt,
    pub c: BigRational,
    pub r0: RatMultiPoly,
    /// `(i, R_i)` for `2 ≤ i ≤ ⌊s/2⌋`.
    pub r: Vec<(usize, RatMultiPoly)>,
}

impl PeriodicDecomposition {
    pub fn verify(&self, f: &RatMultiPoly, m: &ZpQuadForm) -> bool {
        let d = f.nvars();
        let s = f.degree();
        let mp = m.to_poly();
        let mut acc = RatMultiPoly::rat_const(d, self.c.clone());
        acc = &acc + &self.r0.scale(&rat(1, m.p as i64));
        if !self.r0.is_integer_valued() || self.r0.degree() > s {
            return false;
        }
        for (i, r) in &self.r {
            if *i < 2 || !r.is_integer_valued() || (!r.is_zero() && r.degree() + 2 * i > s) {
                return false;
            }
            acc = &acc + &(&mp.pow(*i as u32) * r);
        }
        !self.q0.is_multiple_of(&BigInt::from(m.p)) && acc == f.scale(&BigRational::from_integer(self.q0.clone()))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum PeriodicOutcome {
    Decomposed(PeriodicDecomposition),
    /// A residue `n₀ ∈ τ(V(M̄))` whose fiber is not periodic modulo ℤ.
    NotPartiallyPeriodic(Vec<i64>),
}

/// Solves `f = C + R₀/p + Σ_{i≥2} Mⁱ R_i` with a free constant `C`.
pub fn sphere_periodic_decompose(f: &RatMultiPoly, m: &ZpQuadForm, budget: f64) -> Result<PeriodicOutcome> {
    m.require_rank()?;
    let omega = m.residue_points(budget)?;
    if !is_partially_p_periodic_on(f, m.p, &omega) {
        let n0 = omega
            .into_iter()
            .find(|n0| !is_partially_p_periodic_on(f, m.p, std::slice::from_ref(n0)))
            .expect("some fiber fails");
        return Ok(PeriodicOutcome::NotPartiallyPeriodic(n0));
    }
    let s = f.degree();
    let d = f.nvars();
    let mp = m.to_poly();
    let mut blocks = vec![
        Block { multiplier: RatMultiPoly::rat_const(d, BigRational::one()), degree: 0, free: true },
        Block { multiplier: RatMultiPoly::rat_const(d, rat(1, m.p as i64)), degree: s, free: false },
    ];
    for i in 2..=s / 2 {
        blocks.push(Block { multiplier: mp.pow(i as u32), degree: s - 2 * i, free: false });
    }
    let Some(mut parts) = solve_blocks(f, &blocks, m.p) else {
        return Err(Error::TheoremRegime("no local solution for the periodic decomposition".into()));
    };
    let pb = BigInt::from(m.p);
    let pr = BigRational::from_integer(pb.clone());
    let mut c = parts[0].constant_term();
    // prefer C = 0 when the constant can be carried by R₀
    if !c.is_zero() && is_local_integer(&(&c * &pr), &pb) {
        parts[1] = &parts[1] + &RatMultiPoly::rat_const(d, &c * &pr);
        c = BigRational::zero();
    }
    let q0 = common_denominator(&parts[1..]);
    let qr = BigRational::from_integer(q0.clone());
    Ok(PeriodicOutcome::Decomposed(PeriodicDecomposition {
        c: &c * &qr,
        r0: parts[1].scale(&qr),
        r: parts[2..].iter().enumerate().map(|(t, x)| (t + 2, x.scale(&qr))).collect(),
        q0,
    }))
}

struct Block {
    multiplier: RatMultiPoly,
    degree: usize,
    free: bool,
}

/// Finds `X_b` with `Σ_b multiplier_b · X_b = target`, each `X_b` of degree at most `degree_b`,
/// expressed in the binomial basis with ℤ_(p) coordinates unless the block is free.
fn solve_blocks(target: &RatMultiPoly, blocks: &[Block], p: u64) -> Option<Vec<RatMultiPoly>> {
    let d = target.nvars();
    let mut cols: Vec<BTreeMap<Monomial, BigRational>> = Vec::new();
    let mut owners: Vec<(usize, Monomial)> = Vec::new();
    let mut free = Vec::new();
    for (bi, b) in blocks.iter().enumerate() {
        for e in monomials_up_to(d, b.degree) {
            let basis = RatMultiPoly::binomial(d, &e);
            cols.push((&b.multiplier * &basis).binomial_coeffs());
            owners.push((bi, e));
            free.push(b.free);
        }
    }
    let tc = target.binomial_coeffs();
    let mut keys: Vec<Monomial> = tc.keys().cloned().collect();
    for c in &cols {
        keys.extend(c.keys().cloned());
    }
    keys.sort();
    keys.dedup();
    let a: Vec<Vec<BigRational>> = keys
        .iter()
        .map(|k| cols.iter().map(|c| c.get(k).cloned().unwrap_or_else(BigRational::zero)).collect())
        .collect();
    let b: Vec<BigRational> = keys.iter().map(|k| tc.get(k).cloned().unwrap_or_else(BigRational::zero)).collect();
    let x = solve_local(&a, &b, p, &free)?;
    let mut coeffs: Vec<BTreeMap<Monomial, BigRational>> = vec![BTreeMap::new(); blocks.len()];
    for ((bi, e), v) in owners.into_iter().zip(x) {
        if !v.is_zero() {
            coeffs[bi].insert(e, v);
        }
    }
    Some(coeffs.iter().map(|c| RatMultiPoly::from_binomial_coeffs(d, c)).collect())
}

/// lcm of the binomial-coefficient denominators.
fn common_denominator(parts: &[RatMultiPoly]) -> BigInt {
    let mut l = BigInt::one();
    for x in parts {
        for c in x.binomial_coeffs().values() {
            l = l.lcm(c.denom());
        }
    }
    l
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fpoly::{rat_int, regular_lift, FpMultiPoly};

    fn sphere(p: u64, d: usize, r: i64) -> ZpQuadForm {
        let a = (0..d).map(|i| (0..d).map(|j| i64::from(i == j)).collect()).collect();
        ZpQuadForm::new(p, a, vec![0; d], -r).unwrap()
    }

    #[test]
    fn reduce_and_poly() {
        let m = sphere(5, 3, 1);
        assert_eq!(m.reduce(), QuadForm::sphere(PrimeField::new(5).unwrap(), 3, 1));
        assert_eq!(m.to_poly().eval_i64(&[1, 0, 0]).unwrap(), rat_int(0));
        assert_eq!(m.to_poly().eval_i64(&[2, 1, 0]).unwrap(), rat(4, 5));
        assert_eq!(m.residue_points(1e6).unwrap().len(), 30);
        assert_eq!(ZpQuadForm::lift(&m.reduce()).reduce(), m.reduce());
    }

    #[test]
    fn lift_examples() {
        let m = sphere(7, 4, 2);
        let mp = m.to_poly();
        let r = RatMultiPoly::from_i64_terms(4, &[(vec![1, 0, 0, 0], 3, 1), (vec![0, 0, 0, 0], -2, 1)]).unwrap();
        let s = RatMultiPoly::binomial(4, &[2, 0, 1, 0]);
        let p = &(&mp * &r) + &s;
        match lift_nullstellensatz(&p, &m, 1e6).unwrap() {
            LiftOutcome::Decomposed { p1, p0 } => {
                assert!(p1.has_integer_coeffs() && p0.is_integer_valued());
                assert_eq!(&(&mp * &p1) + &p0, p);
            }
            o => panic!("{o:?}"),
        }
        // regular lift of F = n₁: not vanishing on V(M̄)
        let f = PrimeField::new(7).unwrap();
        let big = FpMultiPoly::var(f, 4, 0);
        match lift_nullstellensatz(&regular_lift(&big), &m, 1e6).unwrap() {
            LiftOutcome::Witness(n) => {
                assert!(mp.eval_i64(&n).unwrap().is_integer());
                assert!(!regular_lift(&big).eval_i64(&n).unwrap().is_integer());
            }
            o => panic!("{o:?}"),
        }
        assert_eq!(
            lift_nullstellensatz(&s, &m, 1e6).unwrap(),
            LiftOutcome::Decomposed { p1: RatMultiPoly::rat_zero(4), p0: s.clone() }
        );
    }

    #[test]
    fn vanishing_examples() {
        let m = sphere(5, 3, 1);
        let mp = m.to_poly();
        match sphere_vanishing_decompose(&mp, &m, 1e6).unwrap() {
            VanishingOutcome::Decomposed(dec) => {
                assert!(dec.verify(&mp, &m));
                assert_eq!(dec.q0, BigInt::one());
                assert!(dec.r[0].is_zero());
                assert_eq!(dec.r[1], RatMultiPoly::rat_const(3, BigRational::one()));
            }
            o => panic!("{o:?}"),
        }
        let r = RatMultiPoly::binomial(3, &[1, 0, 0]);
        let f = &(&mp * &mp) * &r;
        match sphere_vanishing_decompose(&f, &m, 1e6).unwrap() {
            VanishingOutcome::Decomposed(dec) => {
                assert!(dec.verify(&f, &m));
                assert_eq!(dec.q0, BigInt::one());
                assert!(dec.p_power_integral);
            }
            o => panic!("{o:?}"),
        }
        let bad = RatMultiPoly::rat_var(3, 0).scale(&rat(1, 5));
        assert!(matches!(sphere_vanishing_decompose(&bad, &m, 1e6).unwrap(), VanishingOutcome::NotSphereIntegral(_)));
    }

    #[test]
    fn vanishing_with_prime_to_p_denominator() {
        let m = sphere(5, 4, 1);
        let mp = m.to_poly();
        // M(M + 1)/2 is integral on V_p(M) but needs Q₀ = 2
        let f = (&(&mp * &mp) + &mp).scale(&rat(1, 2));
        match sphere_vanishing_decompose(&f, &m, 1e6).unwrap() {
            VanishingOutcome::Decomposed(dec) => {
                assert!(dec.verify(&f, &m));
                assert_eq!(dec.q0, BigInt::from(2));
            }
            o => panic!("{o:?}"),
        }
    }

    #[test]
    fn periodic_examples() {
        let m = sphere(5, 4, 1);
        let mp = m.to_poly();
        let g = RatMultiPoly::binomial(4, &[1, 2, 0, 0]);
        let g1 = &g + &RatMultiPoly::rat_const(4, rat_int(3));
        let f = g1.scale(&rat(1, 5));
        match sphere_periodic_decompose(&f, &m, 1e6).unwrap() {
            PeriodicOutcome::Decomposed(dec) => {
                assert!(dec.verify(&f, &m));
                assert!(dec.c.is_zero());
                assert_eq!(dec.r0, g1);
            }
            o => panic!("{o:?}"),
        }
        let c = rat(1, 25);
        let f = &(&mp * &mp) + &RatMultiPoly::rat_const(4, c.clone());
        match sphere_periodic_decompose(&f, &m, 1e6).unwrap() {
            PeriodicOutcome::Decomposed(dec) => {
                assert!(dec.verify(&f, &m));
                assert_eq!(dec.c, c);
                assert!(dec.r0.is_zero());
            }
            o => panic!("{o:?}"),
        }
        let bad = RatMultiPoly::rat_var(4, 0).scale(&rat(1, 25));
        assert!(matches!(sphere_periodic_decompose(&bad, &m, 1e6).unwrap(), PeriodicOutcome::NotPartiallyPeriodic(_)));
    }
}
