//! Sparse multivariate polynomials over 𝔽_p and ℚ, the τ/ι maps, liftings,
//! the binomial basis and periodicity predicates.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ffcore::PrimeField;

/// Exponent tuple of a monomial.
pub type Monomial = Vec<u32>;

/// Coefficient ring of a [`MultiPoly`].
pub trait CoeffRing: Clone + fmt::Debug + PartialEq {
    type Elem: Clone + fmt::Debug + PartialEq;
    fn zero(&self) -> Self::Elem;
    fn one(&self) -> Self::Elem;
    fn is_zero(&self, a: &Self::Elem) -> bool;
    fn add(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;
    fn mul(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;
    fn neg(&self, a: &Self::Elem) -> Self::Elem;
    fn from_i64(&self, a: i64) -> Self::Elem;
    /// Exponent normal form; identity unless x^p = x is imposed.
    fn reduce_exp(&self, e: u32) -> u32 {
        e
    }
    fn sub(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem {
        self.add(a, &self.neg(b))
    }
}

impl CoeffRing for PrimeField {
    type Elem = u64;
    fn zero(&self) -> u64 {
        0
    }
    fn one(&self) -> u64 {
        1
    }
    fn is_zero(&self, a: &u64) -> bool {
        *a == 0
    }
    fn add(&self, a: &u64, b: &u64) -> u64 {
        PrimeField::add(self, *a, *b)
    }
    fn mul(&self, a: &u64, b: &u64) -> u64 {
        PrimeField::mul(self, *a, *b)
    }
    fn neg(&self, a: &u64) -> u64 {
        PrimeField::neg(self, *a)
    }
    fn from_i64(&self, a: i64) -> u64 {
        self.reduce_i64(a)
    }
    fn reduce_exp(&self, e: u32) -> u32 {
        let p = self.p() as u32;
        if e < p {
            e
        } else {
            (e - 1) % (p - 1) + 1
        }
    }
}

/// The rational numbers with arbitrary precision.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub struct Rationals;

impl CoeffRing for Rationals {
    type Elem = BigRational;
    fn zero(&self) -> BigRational {
        BigRational::zero()
    }
    fn one(&self) -> BigRational {
        BigRational::one()
    }
    fn is_zero(&self, a: &BigRational) -> bool {
        a.is_zero()
    }
    fn add(&self, a: &BigRational, b: &BigRational) -> BigRational {
        a + b
    }
    fn mul(&self, a: &BigRational, b: &BigRational) -> BigRational {
        a * b
    }
    fn neg(&self, a: &BigRational) -> BigRational {
        -a
    }
    fn from_i64(&self, a: i64) -> BigRational {
        BigRational::from_integer(BigInt::from(a))
    }
    fn sub(&self, a: &BigRational, b: &BigRational) -> BigRational {
        a - b
    }
}

pub fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

pub fn rat_int(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

/// Sparse polynomial in `nvars` variables with coefficients in `R`.
#[derive(Clone, PartialEq)]
pub struct MultiPoly<R: CoeffRing> {
    ring: R,
    nvars: usize,
    terms: BTreeMap<Monomial, R::Elem>,
}

pub type FpMultiPoly = MultiPoly<PrimeField>;
pub type RatMultiPoly = MultiPoly<Rationals>;

impl<R: CoeffRing> fmt::Debug for MultiPoly<R>
where
    R::Elem: fmt::Display,
{
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self)
    }
}

impl<R: CoeffRing> fmt::Display for MultiPoly<R>
where
    R::Elem: fmt::Display,
{
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (m, c) in self.terms.iter().rev() {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "{}", c)?;
            for (i, &e) in m.iter().enumerate() {
                match e {
                    0 => {}
                    1 => write!(f, "*n{}", i + 1)?,
                    _ => write!(f, "*n{}^{}", i + 1, e)?,
                }
            }
        }
        Ok(())
    }
}

impl<R: CoeffRing> MultiPoly<R> {
    pub fn zero(ring: R, nvars: usize) -> Self {
        MultiPoly { ring, nvars, terms: BTreeMap::new() }
    }

    pub fn constant(ring: R, nvars: usize, c: R::Elem) -> Self {
        let mut p = Self::zero(ring, nvars);
        p.add_term(vec![0; nvars], c);
        p
    }

    pub fn one(ring: R, nvars: usize) -> Self {
        let c = ring.one();
        Self::constant(ring, nvars, c)
    }

    /// The coordinate function `n_i` (0-based).
    pub fn var(ring: R, nvars: usize, i: usize) -> Self {
        assert!(i < nvars);
        let mut m = vec![0; nvars];
        m[i] = 1;
        let c = ring.one();
        let mut p = Self::zero(ring, nvars);
        p.add_term(m, c);
        p
    }

    pub fn from_terms<I>(ring: R, nvars: usize, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Monomial, R::Elem)>,
    {
        let mut p = Self::zero(ring, nvars);
        for (m, c) in terms {
            if m.len() != nvars {
                return Err(Error::Dimension(format!(
                    "monomial of arity {} in a polynomial of {} variables",
                    m.len(),
                    nvars
                )));
            }
            p.add_term(m, c);
        }
        Ok(p)
    }

    /// Linear polynomial `Σ a_i n_i + c`.
    pub fn linear(ring: R, coeffs: &[R::Elem], c: R::Elem) -> Self {
        let nvars = coeffs.len();
        let mut p = Self::constant(ring.clone(), nvars, c);
        for (i, a) in coeffs.iter().enumerate() {
            let mut m = vec![0; nvars];
            m[i] = 1;
            p.add_term(m, a.clone());
        }
        p
    }

    pub fn add_term(&mut self, mut m: Monomial, c: R::Elem) {
        debug_assert_eq!(m.len(), self.nvars);
        if self.ring.is_zero(&c) {
            return;
        }
        for e in m.iter_mut() {
            *e = self.ring.reduce_exp(*e);
        }
        match self.terms.get_mut(&m) {
            Some(old) => {
                let s = self.ring.add(old, &c);
                if self.ring.is_zero(&s) {
                    self.terms.remove(&m);
                } else {
                    *old = s;
                }
            }
            None => {
                self.terms.insert(m, c);
            }
        }
    }

    #[inline]
    pub fn ring(&self) -> &R {
        &self.ring
    }
    #[inline]
    pub fn nvars(&self) -> usize {
        self.nvars
    }
    #[inline]
    pub fn terms(&self) -> &BTreeMap<Monomial, R::Elem> {
        &self.terms
    }
    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }
    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coeff(&self, m: &[u32]) -> R::Elem {
        self.terms.get(m).cloned().unwrap_or_else(|| self.ring.zero())
    }

    pub fn constant_term(&self) -> R::Elem {
        self.coeff(&vec![0; self.nvars])
    }

    /// Total degree; the zero polynomial has degree 0.
    pub fn degree(&self) -> usize {
        self.terms.keys().map(|m| total(m)).max().unwrap_or(0)
    }

    pub fn degree_in(&self, var: usize) -> usize {
        self.terms.keys().map(|m| m[var] as usize).max().unwrap_or(0)
    }

    pub fn is_constant(&self) -> bool {
        self.terms.keys().all(|m| total(m) == 0)
    }

    pub fn is_homogeneous(&self) -> bool {
        let mut degs = self.terms.keys().map(|m| total(m));
        match degs.next() {
            None => true,
            Some(d) => degs.all(|e| e == d),
        }
    }

    pub fn homogeneous_part(&self, k: usize) -> Self {
        let mut out = Self::zero(self.ring.clone(), self.nvars);
        for (m, c) in &self.terms {
            if total(m) == k {
                out.terms.insert(m.clone(), c.clone());
            }
        }
        out
    }

    /// Whether `n_var` appears in some term.
    pub fn depends_on(&self, var: usize) -> bool {
        self.terms.keys().any(|m| m[var] > 0)
    }

    pub fn scale(&self, c: &R::Elem) -> Self {
        let mut out = Self::zero(self.ring.clone(), self.nvars);
        if self.ring.is_zero(c) {
            return out;
        }
        for (m, a) in &self.terms {
            let v = self.ring.mul(a, c);
            if !self.ring.is_zero(&v) {
                out.terms.insert(m.clone(), v);
            }
        }
        out
    }

    fn check_same(&self, other: &Self) {
        assert_eq!(self.nvars, other.nvars, "polynomial arity mismatch");
        assert!(self.ring == other.ring, "polynomial ring mismatch");
    }

    pub fn add_poly(&self, other: &Self) -> Self {
        self.check_same(other);
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), c.clone());
        }
        out
    }

    pub fn sub_poly(&self, other: &Self) -> Self {
        self.check_same(other);
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), self.ring.neg(c));
        }
        out
    }

    pub fn neg_poly(&self) -> Self {
        let mut out = Self::zero(self.ring.clone(), self.nvars);
        for (m, c) in &self.terms {
            out.terms.insert(m.clone(), self.ring.neg(c));
        }
        out
    }

    pub fn mul_poly(&self, other: &Self) -> Self {
        self.check_same(other);
        let mut out = Self::zero(self.ring.clone(), self.nvars);
        for (m1, c1) in &self.terms {
            for (m2, c2) in &other.terms {
                let m: Monomial = m1.iter().zip(m2).map(|(a, b)| a + b).collect();
                out.add_term(m, self.ring.mul(c1, c2));
            }
        }
        out
    }

    pub fn pow(&self, e: u32) -> Self {
        let mut acc = Self::one(self.ring.clone(), self.nvars);
        for _ in 0..e {
            acc = acc.mul_poly(self);
        }
        acc
    }

    fn elem_pow(&self, b: &R::Elem, e: u32) -> R::Elem {
        let mut acc = self.ring.one();
        for _ in 0..e {
            acc = self.ring.mul(&acc, b);
        }
        acc
    }

    /// Evaluates at a point of `R^nvars`.
    pub fn eval(&self, point: &[R::Elem]) -> Result<R::Elem> {
        if point.len() != self.nvars {
            return Err(Error::Dimension(format!(
                "point of arity {} for a polynomial in {} variables",
                point.len(),
                self.nvars
            )));
        }
        let mut acc = self.ring.zero();
        for (m, c) in &self.terms {
            let mut t = c.clone();
            for (x, &e) in point.iter().zip(m) {
                if e > 0 {
                    t = self.ring.mul(&t, &self.elem_pow(x, e));
                }
            }
            acc = self.ring.add(&acc, &t);
        }
        Ok(acc)
    }

    /// Composition `f(g_1, …, g_nvars)`; the images share one arity.
    pub fn substitute(&self, images: &[Self]) -> Result<Self> {
        if images.len() != self.nvars {
            return Err(Error::Dimension("substitution arity".into()));
        }
        let out_vars = images.first().map_or(0, |g| g.nvars);
        if images.iter().any(|g| g.nvars != out_vars) {
            return Err(Error::Dimension("substitution images differ in arity".into()));
        }
        let mut powers: Vec<Vec<Self>> = images
            .iter()
            .map(|g| vec![Self::one(self.ring.clone(), out_vars), g.clone()])
            .collect();
        let mut out = Self::zero(self.ring.clone(), out_vars);
        for (m, c) in &self.terms {
            let mut t = Self::constant(self.ring.clone(), out_vars, c.clone());
            for (i, &e) in m.iter().enumerate() {
                if e == 0 {
                    continue;
                }
                while powers[i].len() <= e as usize {
                    let next = powers[i].last().unwrap().mul_poly(&images[i]);
                    powers[i].push(next);
                }
                t = t.mul_poly(&powers[i][e as usize]);
            }
            out = out.add_poly(&t);
        }
        Ok(out)
    }

    /// `f(n + h)`.
    pub fn shift(&self, h: &[R::Elem]) -> Result<Self> {
        if h.len() != self.nvars {
            return Err(Error::Dimension("shift arity".into()));
        }
        let images: Vec<Self> = (0..self.nvars)
            .map(|i| {
                let mut v = Self::var(self.ring.clone(), self.nvars, i);
                v.add_term(vec![0; self.nvars], h[i].clone());
                v
            })
            .collect();
        self.substitute(&images)
    }

    /// Difference operator `Δ_h f(n) = f(n + h) − f(n)`.
    pub fn delta(&self, h: &[R::Elem]) -> Result<Self> {
        Ok(self.shift(h)?.sub_poly(self))
    }

    /// Formal partial derivative in `n_var`.
    pub fn partial(&self, var: usize) -> Self {
        let mut out = Self::zero(self.ring.clone(), self.nvars);
        for (m, c) in &self.terms {
            if m[var] == 0 {
                continue;
            }
            let mut m2 = m.clone();
            m2[var] -= 1;
            out.add_term(m2, self.ring.mul(c, &self.ring.from_i64(m[var] as i64)));
        }
        out
    }

    /// Re-embeds into `new_nvars` variables, sending `n_i` to `n_{map[i]}`.
    pub fn embed(&self, new_nvars: usize, map: &[usize]) -> Self {
        assert_eq!(map.len(), self.nvars);
        let mut out = Self::zero(self.ring.clone(), new_nvars);
        for (m, c) in &self.terms {
            let mut m2 = vec![0; new_nvars];
            for (i, &e) in m.iter().enumerate() {
                m2[map[i]] += e;
            }
            out.add_term(m2, c.clone());
        }
        out
    }

    /// All monomials in `nvars` variables of total degree at most `deg`, in increasing order.
    pub fn monomials_up_to(nvars: usize, deg: usize) -> Vec<Monomial> {
        monomials_up_to(nvars, deg)
    }
}

pub fn total(m: &[u32]) -> usize {
    m.iter().map(|&e| e as usize).sum()
}

/// Monomials of total degree ≤ `deg`, ordered by degree then lexicographically.
pub fn monomials_up_to(nvars: usize, deg: usize) -> Vec<Monomial> {
    let mut out = Vec::new();
    for k in 0..=deg {
        monomials_of_degree(nvars, k, &mut Vec::new(), &mut out);
    }
    out
}

fn monomials_of_degree(nvars: usize, k: usize, prefix: &mut Vec<u32>, out: &mut Vec<Monomial>) {
    if prefix.len() + 1 == nvars {
        prefix.push(k as u32);
        out.push(prefix.clone());
        prefix.pop();
        return;
    }
    if nvars == 0 {
        if k == 0 {
            out.push(Vec::new());
        }
        return;
    }
    for e in (0..=k).rev() {
        prefix.push(e as u32);
        monomials_of_degree(nvars, k - e, prefix, out);
        prefix.pop();
    }
}

impl<'a, R: CoeffRing> Add for &'a MultiPoly<R> {
    type Output = MultiPoly<R>;
    fn add(self, rhs: Self) -> MultiPoly<R> {
        self.add_poly(rhs)
    }
}
impl<'a, R: CoeffRing> Sub for &'a MultiPoly<R> {
    type Output = MultiPoly<R>;
    fn sub(self, rhs: Self) -> MultiPoly<R> {
        self.sub_poly(rhs)
    }
}
impl<'a, R: CoeffRing> Mul for &'a MultiPoly<R> {
    type Output = MultiPoly<R>;
    fn mul(self, rhs: Self) -> MultiPoly<R> {
        self.mul_poly(rhs)
    }
}
impl<'a, R: CoeffRing> Neg for &'a MultiPoly<R> {
    type Output = MultiPoly<R>;
    fn neg(self) -> MultiPoly<R> {
        self.neg_poly()
    }
}

impl FpMultiPoly {
    pub fn field(&self) -> PrimeField {
        self.ring
    }

    /// Evaluation at a point given by canonical representatives, without allocation.
    pub fn eval_fp(&self, point: &[u64]) -> u64 {
        debug_assert_eq!(point.len(), self.nvars);
        let f = self.ring;
        let mut acc = 0u64;
        for (m, &c) in &self.terms {
            let mut t = c;
            for (&x, &e) in point.iter().zip(m) {
                if e > 0 {
                    t = f.mul(t, f.pow(x, e as u64));
                }
            }
            acc = f.add(acc, t);
        }
        acc
    }

    pub fn scale_u64(&self, c: u64) -> Self {
        self.scale(&(c % self.ring.p()))
    }

    pub fn compile(&self) -> FpEvaluator {
        FpEvaluator::new(self)
    }
}

/// Term list with a precomputed power table, for evaluating one polynomial at many points.
#[derive(Clone, Debug)]
pub struct FpEvaluator {
    field: PrimeField,
    nvars: usize,
    max_exp: usize,
    terms: Vec<(Vec<(usize, usize)>, u64)>,
    pow_table: Vec<Vec<u64>>,
}

impl FpEvaluator {
    pub fn new(f: &FpMultiPoly) -> Self {
        let field = f.field();
        let p = field.p();
        let max_exp = f.terms.keys().flat_map(|m| m.iter().copied()).max().unwrap_or(0) as usize;
        let pow_table: Vec<Vec<u64>> = (0..p)
            .map(|x| {
                let mut row = Vec::with_capacity(max_exp + 1);
                let mut acc = 1;
                for _ in 0..=max_exp {
                    row.push(acc);
                    acc = field.mul(acc, x);
                }
                row
            })
            .collect();
        let terms = f
            .terms
            .iter()
            .map(|(m, &c)| {
                let vars =
                    m.iter().enumerate().filter(|(_, &e)| e > 0).map(|(i, &e)| (i, e as usize)).collect();
                (vars, c)
            })
            .collect();
        FpEvaluator { field, nvars: f.nvars, max_exp, terms, pow_table }
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn max_exp(&self) -> usize {
        self.max_exp
    }

    #[inline]
    pub fn eval(&self, point: &[u64]) -> u64 {
        let p = self.field.p();
        let mut acc = 0u64;
        for (vars, c) in &self.terms {
            let mut t = *c;
            for &(i, e) in vars {
                t = t * self.pow_table[point[i] as usize][e] % p;
            }
            acc += t;
            if acc >= p {
                acc -= p;
            }
        }
        acc
    }
}

/// The maps τ: 𝔽_p → {0,…,p−1} and ι: ℤ → 𝔽_p (extended to rationals with denominators prime to p).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TauIota {
    field: PrimeField,
}

impl TauIota {
    pub fn new(field: PrimeField) -> Self {
        TauIota { field }
    }

    pub fn tau(&self, x: u64) -> i64 {
        (x % self.field.p()) as i64
    }

    pub fn tau_vec(&self, x: &[u64]) -> Vec<i64> {
        x.iter().map(|&v| self.tau(v)).collect()
    }

    pub fn iota_int(&self, n: &BigInt) -> u64 {
        let p = BigInt::from(self.field.p());
        n.mod_floor(&p).to_u64().unwrap()
    }

    /// ι of a rational whose denominator is prime to p.
    pub fn iota(&self, x: &BigRational) -> Option<u64> {
        let den = self.iota_int(x.denom());
        if den == 0 {
            return None;
        }
        Some(self.field.div(self.iota_int(x.numer()), den))
    }
}

impl RatMultiPoly {
    pub fn rat_zero(nvars: usize) -> Self {
        Self::zero(Rationals, nvars)
    }

    pub fn rat_const(nvars: usize, c: BigRational) -> Self {
        Self::constant(Rationals, nvars, c)
    }

    pub fn rat_var(nvars: usize, i: usize) -> Self {
        Self::var(Rationals, nvars, i)
    }

    pub fn from_i64_terms(nvars: usize, terms: &[(Vec<u32>, i64, i64)]) -> Result<Self> {
        Self::from_terms(Rationals, nvars, terms.iter().map(|(m, a, b)| (m.clone(), rat(*a, *b))))
    }

    pub fn eval_int(&self, point: &[BigInt]) -> Result<BigRational> {
        let pt: Vec<BigRational> = point.iter().map(|x| BigRational::from_integer(x.clone())).collect();
        self.eval(&pt)
    }

    pub fn eval_i64(&self, point: &[i64]) -> Result<BigRational> {
        let pt: Vec<BigRational> = point.iter().map(|&x| rat_int(x)).collect();
        self.eval(&pt)
    }

    pub fn scale_rat(&self, c: &BigRational) -> Self {
        self.scale(c)
    }

    pub fn has_integer_coeffs(&self) -> bool {
        self.terms.values().all(|c| c.is_integer())
    }

    /// Coefficients in the basis `C(n, i) = ∏_j C(n_j, i_j)`.
    pub fn binomial_coeffs(&self) -> BTreeMap<Monomial, BigRational> {
        let mut cache: BTreeMap<u32, Vec<BigInt>> = BTreeMap::new();
        let mut out: BTreeMap<Monomial, BigRational> = BTreeMap::new();
        for (m, c) in &self.terms {
            // n^a = Σ_k S(a,k) k! C(n,k) in each coordinate
            let per_var: Vec<Vec<BigInt>> = m
                .iter()
                .map(|&a| cache.entry(a).or_insert_with(|| surjection_numbers(a)).clone())
                .collect();
            let mut idx = vec![0u32; m.len()];
            loop {
                let mut coeff = c.clone();
                for (j, &k) in idx.iter().enumerate() {
                    coeff *= BigRational::from_integer(per_var[j][k as usize].clone());
                }
                if !coeff.is_zero() {
                    let e = out.entry(idx.clone()).or_insert_with(BigRational::zero);
                    *e += coeff;
                }
                // odometer over 0..=m[j]
                let mut j = 0;
                loop {
                    if j == m.len() {
                        out.retain(|_, v| !v.is_zero());
                        break;
                    }
                    if idx[j] < m[j] {
                        idx[j] += 1;
                        break;
                    }
                    idx[j] = 0;
                    j += 1;
                }
                if j == m.len() {
                    break;
                }
            }
        }
        out.retain(|_, v| !v.is_zero());
        out
    }

    /// Inverse of [`binomial_coeffs`](Self::binomial_coeffs).
    pub fn from_binomial_coeffs(nvars: usize, coeffs: &BTreeMap<Monomial, BigRational>) -> Self {
        let mut out = Self::rat_zero(nvars);
        let mut cache: BTreeMap<u32, RatMultiPoly> = BTreeMap::new();
        for (i, c) in coeffs {
            let mut t = Self::rat_const(nvars, c.clone());
            for (j, &k) in i.iter().enumerate() {
                if k == 0 {
                    continue;
                }
                let uni = cache.entry(k).or_insert_with(|| binomial_poly_univariate(k)).clone();
                t = &t * &uni.embed(nvars, &[j]);
            }
            out = &out + &t;
        }
        out
    }

    /// Binomial polynomial `C(n, i)` as a polynomial.
    pub fn binomial(nvars: usize, i: &[u32]) -> Self {
        let mut c = BTreeMap::new();
        c.insert(i.to_vec(), BigRational::one());
        Self::from_binomial_coeffs(nvars, &c)
    }

    /// Integer-valued on ℤ^d iff every binomial-basis coefficient is an integer.
    pub fn is_integer_valued(&self) -> bool {
        self.binomial_coeffs().values().all(|c| c.is_integer())
    }

    /// Takes values in (1/q)ℤ.
    pub fn takes_values_in(&self, q: &BigInt) -> bool {
        let qq = BigRational::from_integer(q.clone());
        self.binomial_coeffs().values().all(|c| (c * &qq).is_integer())
    }

    /// Largest exponent e with p^e dividing some denominator of the binomial coefficients.
    pub fn p_denominator_exponent(&self, p: u64) -> u32 {
        let pb = BigInt::from(p);
        self.binomial_coeffs()
            .values()
            .map(|c| {
                let mut d = c.denom().clone();
                let mut e = 0;
                while d.is_multiple_of(&pb) {
                    d /= &pb;
                    e += 1;
                }
                e
            })
            .max()
            .unwrap_or(0)
    }

    /// Product of the p-free parts of the binomial-coefficient denominators (their lcm).
    pub fn p_free_denominator(&self, p: u64) -> BigInt {
        let pb = BigInt::from(p);
        let mut l = BigInt::one();
        for c in self.binomial_coeffs().values() {
            let mut d = c.denom().clone();
            while d.is_multiple_of(&pb) {
                d /= &pb;
            }
            l = l.lcm(&d);
        }
        l
    }

    /// Substitutes an affine change of variables `n ↦ n L + t` given by integer/rational data.
    pub fn affine_substitute(&self, l: &[Vec<BigRational>], t: &[BigRational]) -> Result<Self> {
        let k = l.len();
        let images: Vec<Self> = (0..self.nvars)
            .map(|j| {
                let col: Vec<BigRational> = (0..k).map(|i| l[i][j].clone()).collect();
                Self::linear(Rationals, &col, t[j].clone())
            })
            .collect();
        self.substitute(&images)
    }
}

/// k! · S(a, k) for k = 0..=a, the coefficients of n^a in the binomial basis.
fn surjection_numbers(a: u32) -> Vec<BigInt> {
    // S(a,k) via the triangle, then multiply by k!
    let a = a as usize;
    let mut s = vec![vec![BigInt::zero(); a + 1]; a + 1];
    s[0][0] = BigInt::one();
    for n in 1..=a {
        for k in 1..=n {
            s[n][k] = &s[n - 1][k - 1] + BigInt::from(k) * &s[n - 1][k];
        }
    }
    let mut fact = BigInt::one();
    (0..=a)
        .map(|k| {
            if k > 0 {
                fact *= BigInt::from(k);
            }
            &s[a][k] * &fact
        })
        .collect()
}

fn binomial_poly_univariate(k: u32) -> RatMultiPoly {
    let mut acc = RatMultiPoly::rat_const(1, BigRational::one());
    for j in 0..k {
        let lin = RatMultiPoly::linear(Rationals, &[rat_int(1)], rat_int(-(j as i64)));
        acc = &acc * &lin;
    }
    let mut fact = BigInt::one();
    for j in 1..=k {
        fact *= BigInt::from(j);
    }
    acc.scale(&BigRational::new(BigInt::one(), fact))
}

/// ι∘pf∘τ for `f` taking values in ℤ/p with degree < p.
pub fn induce(f: &RatMultiPoly, field: PrimeField) -> Result<FpMultiPoly> {
    let p = field.p();
    if f.degree() >= p as usize {
        return Err(Error::DegreeTooLarge { degree: f.degree(), bound: p as usize - 1 });
    }
    let pf = f.scale(&rat_int(p as i64));
    if !pf.is_integer_valued() {
        return Err(Error::ValueRange("polynomial does not take values in Z/p".into()));
    }
    let ti = TauIota::new(field);
    let mut out = FpMultiPoly::zero(field, f.nvars());
    for (m, c) in pf.terms() {
        // denominators of pf divide deg(f)!, which is prime to p
        let v = ti.iota(c).expect("denominator prime to p");
        out.add_term(m.clone(), v);
    }
    Ok(out)
}

/// The lifting with coefficients in {0, 1/p, …, (p−1)/p}.
pub fn regular_lift(big_f: &FpMultiPoly) -> RatMultiPoly {
    let p = big_f.field().p() as i64;
    let mut out = RatMultiPoly::rat_zero(big_f.nvars());
    for (m, &c) in big_f.terms() {
        out.add_term(m.clone(), rat(c as i64, p));
    }
    out
}

/// Plain integer lift of the coefficients of `F`, i.e. τ applied coefficientwise.
pub fn integer_lift(big_f: &FpMultiPoly) -> RatMultiPoly {
    let mut out = RatMultiPoly::rat_zero(big_f.nvars());
    for (m, &c) in big_f.terms() {
        out.add_term(m.clone(), rat_int(c as i64));
    }
    out
}

/// Whether `f` is a lifting of `F`: deg f < p, f takes ℤ/p values and induces `F`.
pub fn is_lifting_of(f: &RatMultiPoly, big_f: &FpMultiPoly) -> bool {
    match induce(f, big_f.field()) {
        Ok(g) => g == *big_f,
        Err(_) => false,
    }
}

/// Splits an integer-valued `f` of degree < p as `f/p = f₁ + f₂/p`.
pub fn p_expand(f: &RatMultiPoly, p: u64) -> Result<(RatMultiPoly, RatMultiPoly)> {
    if f.degree() >= p as usize {
        return Err(Error::DegreeTooLarge { degree: f.degree(), bound: p as usize - 1 });
    }
    if !f.is_integer_valued() {
        return Err(Error::NotIntegerValued);
    }
    let field = PrimeField::new(p)?;
    let ti = TauIota::new(field);
    let mut f2 = RatMultiPoly::rat_zero(f.nvars());
    for (m, c) in f.terms() {
        let v = ti.iota(c).expect("denominator prime to p");
        f2.add_term(m.clone(), rat_int(v as i64));
    }
    let f1 = (f - &f2).scale(&rat(1, p as i64));
    debug_assert!(f1.is_integer_valued());
    Ok((f1, f2))
}

/// Decides f(n+pm) − f(n) ∈ ℤ for all n, m ∈ ℤ^d.
pub fn is_p_periodic(f: &RatMultiPoly, p: u64) -> bool {
    let d = f.nvars();
    let pr = rat_int(p as i64);
    let images: Vec<RatMultiPoly> = (0..d)
        .map(|i| {
            let mut v = RatMultiPoly::rat_var(2 * d, i);
            v.add_term(unit(2 * d, d + i), pr.clone());
            v
        })
        .collect();
    let shifted = f.substitute(&images).expect("arity");
    let base = f.embed(2 * d, &(0..d).collect::<Vec<_>>());
    (&shifted - &base).is_integer_valued()
}

/// Decides f(n+pm) − f(n) ∈ ℤ for n ∈ Ω + pℤ^d and m ∈ ℤ^d.
pub fn is_partially_p_periodic_on(f: &RatMultiPoly, p: u64, omega: &[Vec<i64>]) -> bool {
    omega.iter().all(|n0| fiber_is_periodic(f, p, n0))
}

/// m ↦ f(n₀ + pm) has integral non-constant binomial coefficients.
pub fn fiber_is_periodic(f: &RatMultiPoly, p: u64, n0: &[i64]) -> bool {
    fiber_poly(f, p, n0)
        .binomial_coeffs()
        .iter()
        .all(|(i, c)| i.iter().all(|&e| e == 0) || c.is_integer())
}

/// The polynomial m ↦ f(n₀ + pm).
pub fn fiber_poly(f: &RatMultiPoly, p: u64, n0: &[i64]) -> RatMultiPoly {
    let d = f.nvars();
    let images: Vec<RatMultiPoly> = (0..d)
        .map(|i| RatMultiPoly::linear(Rationals, &scaled_unit(d, i, p as i64), rat_int(n0[i])))
        .collect();
    f.substitute(&images).expect("arity")
}

fn unit(n: usize, i: usize) -> Monomial {
    let mut m = vec![0; n];
    m[i] = 1;
    m
}

fn scaled_unit(n: usize, i: usize, s: i64) -> Vec<BigRational> {
    (0..n).map(|j| if j == i { rat_int(s) } else { BigRational::zero() }).collect()
}

/// Lift of a composition: `outer ∘ (p·inner)`, accepted only for degrees at most √p.
pub fn compose_lift(outer: &RatMultiPoly, inner: &[RatMultiPoly], p: u64) -> Result<RatMultiPoly> {
    let bound = (p as f64).sqrt();
    let din = inner.iter().map(|g| g.degree()).max().unwrap_or(0);
    if din as f64 > bound {
        return Err(Error::DegreeTooLarge { degree: din, bound: bound.floor() as usize });
    }
    if outer.degree() as f64 >= bound {
        return Err(Error::DegreeTooLarge { degree: outer.degree(), bound: bound.ceil() as usize - 1 });
    }
    let pr = rat_int(p as i64);
    let scaled: Vec<RatMultiPoly> = inner.iter().map(|g| g.scale(&pr)).collect();
    outer.substitute(&scaled)
}

/// Integer-valuedness of `a - b` for two rationals-polys viewed mod ℤ.
pub fn congruent_mod_integer_valued(a: &RatMultiPoly, b: &RatMultiPoly) -> bool {
    (a - b).is_integer_valued()
}

/// Nearest representative of a rational modulo 1 in [0, 1).
pub fn frac(x: &BigRational) -> BigRational {
    x - x.floor()
}

pub fn is_integer(x: &BigRational) -> bool {
    x.is_integer()
}

pub fn abs_rat(x: &BigRational) -> BigRational {
    x.abs()
}

// ---------------------------------------------------------------------------
// JSON form

#[derive(Serialize, Deserialize)]
struct TermJson {
    exp: Vec<u32>,
    coeff: serde_json::Value,
}

#[derive(Serialize, Deserialize)]
struct PolyJson {
    nvars: usize,
    terms: Vec<TermJson>,
}

pub fn parse_rational(s: &str) -> Result<BigRational> {
    let s = s.trim();
    let (n, d) = match s.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (s, "1"),
    };
    let n: BigInt = n.parse().map_err(|_| Error::Parse(format!("bad rational '{s}'")))?;
    let d: BigInt = d.parse().map_err(|_| Error::Parse(format!("bad rational '{s}'")))?;
    if d.is_zero() {
        return Err(Error::Parse(format!("zero denominator in '{s}'")));
    }
    Ok(BigRational::new(n, d))
}

pub fn format_rational(x: &BigRational) -> String {
    if x.is_integer() {
        x.numer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

fn json_to_rational(v: &serde_json::Value) -> Result<BigRational> {
    match v {
        serde_json::Value::String(s) => parse_rational(s),
        serde_json::Value::Number(n) => n
            .as_i64()
            .map(rat_int)
            .ok_or_else(|| Error::Parse(format!("coefficient {n} is not an integer"))),
        _ => Err(Error::Parse("coefficient must be a string or an integer".into())),
    }
}

pub fn rat_poly_to_json(f: &RatMultiPoly) -> serde_json::Value {
    let terms: Vec<TermJson> = f
        .terms()
        .iter()
        .map(|(m, c)| TermJson { exp: m.clone(), coeff: serde_json::Value::String(format_rational(c)) })
        .collect();
    serde_json::to_value(PolyJson { nvars: f.nvars(), terms }).unwrap()
}

pub fn rat_poly_from_json(v: &serde_json::Value) -> Result<RatMultiPoly> {
    let pj: PolyJson = serde_json::from_value(v.clone()).map_err(|e| Error::Parse(e.to_string()))?;
    let mut terms = Vec::new();
    for t in &pj.terms {
        terms.push((t.exp.clone(), json_to_rational(&t.coeff)?));
    }
    RatMultiPoly::from_terms(Rationals, pj.nvars, terms)
}

pub fn fp_poly_to_json(f: &FpMultiPoly) -> serde_json::Value {
    let terms: Vec<TermJson> =
        f.terms().iter().map(|(m, &c)| TermJson { exp: m.clone(), coeff: c.into() }).collect();
    serde_json::to_value(PolyJson { nvars: f.nvars(), terms }).unwrap()
}

pub fn fp_poly_from_json(v: &serde_json::Value, field: PrimeField) -> Result<FpMultiPoly> {
    let pj: PolyJson = serde_json::from_value(v.clone()).map_err(|e| Error::Parse(e.to_string()))?;
    let mut terms = Vec::new();
    for t in &pj.terms {
        let c = match &t.coeff {
            serde_json::Value::Number(n) => n
                .as_i64()
                .map(|x| field.reduce_i64(x))
                .ok_or_else(|| Error::Parse(format!("coefficient {n} is not an integer")))?,
            serde_json::Value::String(s) => {
                let r = parse_rational(s)?;
                TauIota::new(field)
                    .iota(&r)
                    .ok_or_else(|| Error::Parse(format!("denominator of {s} divisible by p")))?
            }
            _ => return Err(Error::Parse("coefficient must be an integer".into())),
        };
        if t.exp.iter().any(|&e| e as u64 >= field.p()) {
            return Err(Error::Parse("exponent must be below p".into()));
        }
        terms.push((t.exp.clone(), c));
    }
    FpMultiPoly::from_terms(field, pj.nvars, terms)
}
