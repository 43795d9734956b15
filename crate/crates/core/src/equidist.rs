//! Polynomial sequences into the torus `ℝ^m/ℤ^m` restricted to point sets of 𝔽_p^d:
//! Fourier scans over horizontal characters, constancy checks, the spherical Weyl
//! dichotomy with divisibility certificates, and a Leibman-dichotomy probe.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::counting::{compensated_sum, enumerate_zeros};
use crate::division::lifted::{lift_nullstellensatz, LiftOutcome, ZpQuadForm};
use crate::error::{Error, Result};
use crate::ffcore::PrimeField;
use crate::fpoly::{
    format_rational, frac, is_p_periodic, is_partially_p_periodic_on, monomials_up_to, parse_rational, rat_int,
    total, Monomial, RatMultiPoly, TauIota,
};
use crate::quadform::QuadForm;

/// `g = (g₁, …, g_m)`, each `g_j(n) = Σ_i c_{j,i} C(n, i)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TorusPolySeq {
    d: usize,
    s: usize,
    coeffs: Vec<BTreeMap<Monomial, BigRational>>,
}

impl TorusPolySeq {
    pub fn new(d: usize, s: usize, coeffs: Vec<BTreeMap<Monomial, BigRational>>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::Dimension("torus dimension must be positive".into()));
        }
        for c in &coeffs {
            for i in c.keys() {
                if i.len() != d {
                    return Err(Error::Dimension("binomial index length differs from d".into()));
                }
                if total(i) > s {
                    return Err(Error::DegreeTooLarge { degree: total(i), bound: s });
                }
            }
        }
        let coeffs = coeffs
            .into_iter()
            .map(|mut c| {
                c.retain(|_, v| !v.is_zero());
                c
            })
            .collect();
        Ok(TorusPolySeq { d, s, coeffs })
    }

    pub fn from_polys(polys: &[RatMultiPoly]) -> Result<Self> {
        let d = polys.first().map(|f| f.nvars()).ok_or_else(|| Error::Dimension("no components".into()))?;
        if polys.iter().any(|f| f.nvars() != d) {
            return Err(Error::Dimension("components must share d".into()));
        }
        let s = polys.iter().map(|f| f.degree()).max().unwrap_or(0);
        Self::new(d, s, polys.iter().map(|f| f.binomial_coeffs()).collect())
    }

    pub fn to_polys(&self) -> Vec<RatMultiPoly> {
        self.coeffs.iter().map(|c| RatMultiPoly::from_binomial_coeffs(self.d, c)).collect()
    }

    pub fn m(&self) -> usize {
        self.coeffs.len()
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn s(&self) -> usize {
        self.s
    }

    pub fn coeffs(&self) -> &[BTreeMap<Monomial, BigRational>] {
        &self.coeffs
    }

    /// Common denominator of all coefficients; every value lies in `(1/L)ℤ^m`.
    pub fn denominator(&self) -> BigInt {
        self.coeffs
            .iter()
            .flat_map(|c| c.values())
            .fold(BigInt::one(), |acc, v| acc.lcm(v.denom()))
    }

    pub fn to_json(&self) -> serde_json::Value {
        let mut idx: BTreeMap<&Monomial, Vec<String>> = BTreeMap::new();
        for (j, c) in self.coeffs.iter().enumerate() {
            for i in c.keys() {
                idx.entry(i).or_insert_with(|| vec!["0".to_string(); self.m()])[j] = format_rational(&c[i]);
            }
        }
        serde_json::json!({
            "m": self.m(),
            "d": self.d,
            "s": self.s,
            "coeffs": idx.into_iter().map(|(i, v)| serde_json::json!({"index": i, "value": v})).collect::<Vec<_>>(),
        })
    }

    pub fn from_json(v: &serde_json::Value) -> Result<Self> {
        let m = v.get("m").and_then(|x| x.as_u64()).ok_or_else(|| Error::Parse("missing m".into()))? as usize;
        let s = v.get("s").and_then(|x| x.as_u64()).ok_or_else(|| Error::Parse("missing s".into()))? as usize;
        let list = v.get("coeffs").and_then(|x| x.as_array()).ok_or_else(|| Error::Parse("missing coeffs".into()))?;
        let mut d = v.get("d").and_then(|x| x.as_u64()).map(|x| x as usize);
        let mut coeffs = vec![BTreeMap::new(); m];
        for e in list {
            let i: Vec<u32> = e
                .get("index")
                .and_then(|x| serde_json::from_value(x.clone()).ok())
                .ok_or_else(|| Error::Parse("bad index".into()))?;
            let vals = e.get("value").and_then(|x| x.as_array()).ok_or_else(|| Error::Parse("bad value".into()))?;
            if vals.len() != m {
                return Err(Error::Dimension("value length differs from m".into()));
            }
            if *d.get_or_insert(i.len()) != i.len() {
                return Err(Error::Dimension("index lengths differ".into()));
            }
            for (j, x) in vals.iter().enumerate() {
                let q = match x {
                    serde_json::Value::String(t) => parse_rational(t)?,
                    serde_json::Value::Number(n) => {
                        rat_int(n.as_i64().ok_or_else(|| Error::Parse("non-integer number".into()))?)
                    }
                    _ => return Err(Error::Parse("value entries must be strings or integers".into())),
                };
                *coeffs[j].entry(i.clone()).or_insert_with(BigRational::zero) += q;
            }
        }
        Self::new(d.ok_or_else(|| Error::Parse("cannot infer d".into()))?, s, coeffs)
    }
}

/// Binomial coefficient `C(n, i)` for any integer `n`.
fn binom_int(n: &BigInt, i: u32) -> BigInt {
    let mut num = BigInt::one();
    let mut den = BigInt::one();
    for t in 0..i {
        num *= n - BigInt::from(t);
        den *= BigInt::from(t + 1);
    }
    num / den
}

/// `g(n) mod ℤ^m`, each coordinate in `[0, 1)`.
pub fn seq_eval(g: &TorusPolySeq, n: &[i64]) -> Result<Vec<BigRational>> {
    if n.len() != g.d {
        return Err(Error::Dimension("point length differs from d".into()));
    }
    let nb: Vec<BigInt> = n.iter().map(|&x| BigInt::from(x)).collect();
    Ok(g.coeffs
        .iter()
        .map(|c| {
            let v = c.iter().fold(BigRational::zero(), |acc, (i, a)| {
                let b = i.iter().zip(&nb).fold(BigInt::one(), |t, (&e, x)| t * binom_int(x, e));
                acc + a * BigRational::from_integer(b)
            });
            frac(&v)
        })
        .collect())
}

/// Values `L·g(τ(n)) mod L` on a point set, exact in machine integers.
struct Residues {
    l: u64,
    /// `[point][coordinate]`.
    values: Vec<Vec<u64>>,
}

impl Residues {
    fn new(g: &TorusPolySeq, field: PrimeField, pts: &[Vec<u64>]) -> Result<Self> {
        let l = g
            .denominator()
            .to_u64()
            .filter(|&l| l < 1 << 62)
            .ok_or_else(|| Error::ValueRange("common denominator exceeds 2^62".into()))?;
        let lb = BigInt::from(l);
        let terms: Vec<(Monomial, Vec<u64>)> = {
            let mut all: BTreeMap<Monomial, Vec<u64>> = BTreeMap::new();
            for (j, c) in g.coeffs.iter().enumerate() {
                for (i, a) in c {
                    let scaled = (a * BigRational::from_integer(lb.clone())).to_integer().mod_floor(&lb);
                    all.entry(i.clone()).or_insert_with(|| vec![0; g.m()])[j] = scaled.to_u64().expect("below L");
                }
            }
            all.into_iter().collect()
        };
        // C(x, e) mod L for 0 ≤ x < p, e ≤ s
        let p = field.p();
        let table: Vec<Vec<u64>> = (0..p)
            .map(|x| (0..=g.s as u32).map(|e| binom_int(&BigInt::from(x), e).mod_floor(&lb).to_u64().unwrap()).collect())
            .collect();
        let m = g.m();
        let values = pts
            .par_iter()
            .map(|n| {
                let mut acc = vec![0u128; m];
                for (i, a) in &terms {
                    let mut b: u128 = 1;
                    for (&e, &x) in i.iter().zip(n) {
                        if e != 0 {
                            b = b * table[x as usize][e as usize] as u128 % l as u128;
                        }
                    }
                    for j in 0..m {
                        acc[j] = (acc[j] + b * a[j] as u128) % l as u128;
                    }
                }
                acc.into_iter().map(|x| x as u64).collect()
            })
            .collect();
        Ok(Residues { l, values })
    }

    fn phase(&self, k: &[i64], idx: usize) -> u64 {
        let l = self.l as i128;
        let t = k.iter().zip(&self.values[idx]).fold(0i128, |acc, (&kj, &v)| (acc + kj as i128 % l * v as i128) % l);
        t.rem_euclid(l) as u64
    }

    fn fourier(&self, k: &[i64]) -> f64 {
        let n = self.values.len();
        if n == 0 {
            return 0.0;
        }
        let l = self.l as f64;
        let s = compensated_sum((0..n).map(|i| {
            let t = self.phase(k, i) as f64 / l;
            Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * t)
        }));
        (s / n as f64).norm()
    }

    /// `Some(c)` when `k·g` takes the single value `c/L` mod 1.
    fn constant(&self, k: &[i64]) -> Option<u64> {
        let first = if self.values.is_empty() { 0 } else { self.phase(k, 0) };
        (0..self.values.len()).all(|i| self.phase(k, i) == first).then_some(first)
    }
}

/// Nonzero `k ∈ ℤ^m` with `|k|₁ ≤ K` and first nonzero entry positive, by norm then lexicographically.
pub fn frequencies(m: usize, budget: usize) -> Vec<Vec<i64>> {
    let mut out = Vec::new();
    for norm in 1..=budget as i64 {
        let mut level = Vec::new();
        let mut cur = vec![0i64; m];
        fill(&mut cur, 0, norm, &mut level);
        level.retain(|k: &Vec<i64>| k.iter().find(|&&x| x != 0).is_some_and(|&x| x > 0));
        level.sort();
        out.extend(level);
    }
    out
}

fn fill(cur: &mut Vec<i64>, pos: usize, left: i64, out: &mut Vec<Vec<i64>>) {
    if pos == cur.len() {
        if left == 0 {
            out.push(cur.clone());
        }
        return;
    }
    for a in -left..=left {
        cur[pos] = a;
        fill(cur, pos + 1, left - a.abs(), out);
    }
    cur[pos] = 0;
}

/// `⌈δ⁻²⌉`, capped at 1000.
pub fn default_freq_budget(delta: f64) -> usize {
    ((1.0 / (delta * delta)).ceil() as usize).clamp(1, 1000)
}

#[derive(Clone, Debug, PartialEq)]
pub enum Verdict {
    Equidistributed { delta: f64 },
    /// `k·g ≡ constant` on the set.
    Obstructed { k: Vec<i64>, constant: BigRational },
    /// A large Fourier coefficient with no constant character within the frequency budget.
    Unresolved { k: Vec<i64> },
}

#[derive(Clone, Debug, PartialEq)]
pub struct EquidistReport {
    pub max_fourier: f64,
    pub witness_k: Option<Vec<i64>>,
    pub verdict: Verdict,
    pub points: usize,
    pub frequencies: usize,
}

impl EquidistReport {
    pub fn to_json(&self) -> serde_json::Value {
        let verdict = match &self.verdict {
            Verdict::Equidistributed { delta } => serde_json::json!({"kind": "equidistributed", "delta": delta}),
            Verdict::Obstructed { k, constant } => {
                serde_json::json!({"kind": "obstructed", "k": k, "constant": format_rational(constant)})
            }
            Verdict::Unresolved { k } => serde_json::json!({"kind": "unresolved", "k": k}),
        };
        serde_json::json!({
            "max_fourier": self.max_fourier,
            "witness_k": self.witness_k,
            "verdict": verdict,
            "points": self.points,
            "frequencies": self.frequencies,
        })
    }
}

const TIE: f64 = 1e-9;

fn check_points(g: &TorusPolySeq, pts: &[Vec<u64>]) -> Result<()> {
    if pts.iter().any(|n| n.len() != g.d) {
        return Err(Error::Dimension("point length differs from d".into()));
    }
    Ok(())
}

/// `max_{0<|k|₁≤K} |E_{n∈Ω} e(k·g(τ(n)))|` and the resulting branch.
pub fn equidist_test(
    g: &TorusPolySeq,
    field: PrimeField,
    pts: &[Vec<u64>],
    delta: f64,
    freq_budget: usize,
) -> Result<EquidistReport> {
    if freq_budget == 0 {
        return Err(Error::ValueRange("frequency budget must be at least 1".into()));
    }
    check_points(g, pts)?;
    let res = Residues::new(g, field, pts)?;
    let ks = frequencies(g.m(), freq_budget);
    let values: Vec<f64> = ks.par_iter().map(|k| res.fourier(k)).collect();
    let (best, max) = values
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |(bi, bv), (i, &v)| if v > bv { (i, v) } else { (bi, bv) });
    let verdict = if max < delta - TIE {
        Verdict::Equidistributed { delta }
    } else {
        match search(&res, &ks) {
            Some((k, c)) => Verdict::Obstructed { k, constant: BigRational::new(c.into(), res.l.into()) },
            None if max <= delta => Verdict::Equidistributed { delta },
            None => Verdict::Unresolved { k: ks[best].clone() },
        }
    };
    Ok(EquidistReport { max_fourier: max, witness_k: Some(ks[best].clone()), verdict, points: pts.len(), frequencies: ks.len() })
}

fn search(res: &Residues, ks: &[Vec<i64>]) -> Option<(Vec<i64>, u64)> {
    ks.par_iter().find_map_first(|k| res.constant(k).map(|c| (k.clone(), c)))
}

/// First `k` (in [`frequencies`] order) with `k·g` constant mod ℤ on the set, and that constant.
pub fn character_search(
    g: &TorusPolySeq,
    field: PrimeField,
    pts: &[Vec<u64>],
    freq_budget: usize,
) -> Result<Option<(Vec<i64>, BigRational)>> {
    check_points(g, pts)?;
    let res = Residues::new(g, field, pts)?;
    Ok(search(&res, &frequencies(g.m(), freq_budget)).map(|(k, c)| (k, BigRational::new(c.into(), res.l.into()))))
}

/// Whether `k·g(τ(n))` mod ℤ is the same at every point, with that value (0 on an empty set).
pub fn constancy_check(
    k: &[i64],
    g: &TorusPolySeq,
    field: PrimeField,
    pts: &[Vec<u64>],
) -> Result<(bool, BigRational)> {
    if k.len() != g.m() {
        return Err(Error::Dimension("frequency length differs from m".into()));
    }
    check_points(g, pts)?;
    let res = Residues::new(g, field, pts)?;
    let first = if pts.is_empty() { 0 } else { res.phase(k, 0) };
    let ok = res.constant(k).is_some();
    Ok((ok, BigRational::new(first.into(), res.l.into())))
}

#[derive(Clone, Debug, PartialEq)]
pub enum WeylOutcome {
    SumSmall { value: f64 },
    /// `g = (n·n − τ(r)) g₁ + p g₂ + a` with `g₁`, `g₂` integer-valued.
    Constant { value: f64, a: i64, g1: RatMultiPoly, g2: RatMultiPoly },
}

impl WeylOutcome {
    pub fn value(&self) -> f64 {
        match self {
            WeylOutcome::SumSmall { value } | WeylOutcome::Constant { value, .. } => *value,
        }
    }
}

/// `(n·n − τ(r))/p` as a form over `ℤ_(p)`.
pub fn sphere_lift(p: u64, d: usize, r: u64) -> Result<ZpQuadForm> {
    let a = (0..d).map(|i| (0..d).map(|j| i64::from(i == j)).collect()).collect();
    ZpQuadForm::new(p, a, vec![0; d], -((r % p) as i64))
}

/// Checks `g = (n·n − τ(r)) g₁ + p g₂ + a` symbolically, with `g₁`, `g₂` integer-valued.
pub fn verify_weyl_certificate(g: &RatMultiPoly, p: u64, r: u64, a: i64, g1: &RatMultiPoly, g2: &RatMultiPoly) -> bool {
    let d = g.nvars();
    let Ok(m) = sphere_lift(p, d, r) else { return false };
    let mm = m.to_poly().scale_rat(&rat_int(p as i64));
    let rebuilt = &(&(&mm * g1) + &g2.scale_rat(&rat_int(p as i64))) + &RatMultiPoly::rat_const(d, rat_int(a));
    g1.is_integer_valued() && g2.is_integer_valued() && rebuilt == *g
}

/// `|E_{n ∈ V(n·n − r)} e(g(τ(n))/p)|` for integer-valued `g`, with a divisibility certificate when large.
pub fn weyl_dichotomy(g: &RatMultiPoly, p: u64, r: u64, delta: f64, budget: f64) -> Result<WeylOutcome> {
    if !g.is_integer_valued() {
        return Err(Error::NotIntegerValued);
    }
    let field = PrimeField::new(p)?;
    let d = g.nvars();
    let pts = enumerate_zeros(&QuadForm::sphere(field, d, r), None, budget)?;
    if pts.is_empty() {
        return Err(Error::HypothesisFailed("empty sphere".into()));
    }
    let seq = TorusPolySeq::from_polys(&[g.scale_rat(&BigRational::new(1.into(), p.into()))])?;
    let res = Residues::new(&seq, field, &pts)?;
    let value = res.fourier(&[1]);
    if value <= delta {
        return Ok(WeylOutcome::SumSmall { value });
    }
    let s = g.degree();
    let note = if d < s + 13 { " (outside the proven range d ≥ s + 13)" } else { "" };
    let Some(c) = res.constant(&[1]) else {
        return Err(Error::DichotomyViolation(format!("|sum| = {value:.6} > δ but g/p is not constant on the sphere{note}")));
    };
    // c/L with L = p·(denominator of g's binomial coefficients) = p
    let a = i64::try_from(c * p / res.l).expect("small constant");
    let shifted = (g - &RatMultiPoly::rat_const(d, rat_int(a))).scale_rat(&BigRational::new(1.into(), p.into()));
    let m = sphere_lift(p, d, r)?;
    match lift_nullstellensatz(&shifted, &m, budget)? {
        LiftOutcome::Decomposed { p1, p0 } => {
            if !verify_weyl_certificate(g, p, r, a, &p1, &p0) {
                return Err(Error::DichotomyViolation(format!("certificate failed to re-expand{note}")));
            }
            Ok(WeylOutcome::Constant { value, a, g1: p1, g2: p0 })
        }
        LiftOutcome::Witness(n) => Err(Error::DichotomyViolation(format!(
            "g/p is constant on the sphere but the lift has a witness {n:?}{note}"
        ))),
    }
}

/// Random sequence of degree ≤ s with coefficients in `(1/p)ℤ`, plus occasional `1/p²` terms,
/// kept only when partially p-periodic on the set.
pub fn random_periodic_seq(
    field: PrimeField,
    d: usize,
    m: usize,
    s: usize,
    omega: &[Vec<i64>],
    full_space: bool,
    rng: &mut impl Rng,
) -> Option<TorusPolySeq> {
    let p = field.p() as i64;
    let mons = monomials_up_to(d, s);
    for _ in 0..100 {
        let mut coeffs = vec![BTreeMap::new(); m];
        for c in coeffs.iter_mut() {
            for i in &mons {
                if rng.gen_bool(0.5) {
                    c.insert(i.clone(), BigRational::new(rng.gen_range(0..p).into(), p.into()));
                }
            }
            if rng.gen_bool(0.5) {
                let i = mons[rng.gen_range(0..mons.len())].clone();
                *c.entry(i).or_insert_with(BigRational::zero) += BigRational::new(rng.gen_range(1..p).into(), (p * p).into());
            }
        }
        let g = TorusPolySeq::new(d, s, coeffs).ok()?;
        let ok = g.to_polys().iter().all(|f| {
            if full_space {
                is_p_periodic(f, p as u64)
            } else {
                is_partially_p_periodic_on(f, p as u64, omega)
            }
        });
        if ok {
            return Some(g);
        }
    }
    None
}

#[derive(Clone, Debug, PartialEq)]
pub struct LeibmanTrial {
    pub seq: TorusPolySeq,
    pub report: EquidistReport,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LeibmanStats {
    pub trials: usize,
    pub equidistributed: usize,
    pub obstructed: usize,
    /// Trials where neither branch held at the tested `(δ, K)`.
    pub exceptions: Vec<LeibmanTrial>,
    /// Generator failures (no partially periodic sample found).
    pub skipped: usize,
    pub hypotheses_met: bool,
}

impl LeibmanStats {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "trials": self.trials,
            "equidistributed": self.equidistributed,
            "obstructed": self.obstructed,
            "skipped": self.skipped,
            "hypotheses_met": self.hypotheses_met,
            "exceptions": self.exceptions.iter().map(|t| serde_json::json!({
                "seq": t.seq.to_json(),
                "report": t.report.to_json(),
            })).collect::<Vec<_>>(),
        })
    }
}

/// Runs the `(δ, K)` dichotomy on random partially p-periodic sequences of degree ≤ s on `Ω`.
/// `full_space` marks `Ω = 𝔽_p^d`, which carries no dimension hypothesis; otherwise `d ≥ s + 13` is required.
#[allow(clippy::too_many_arguments)]
pub fn leibman_probe(
    field: PrimeField,
    pts: &[Vec<u64>],
    d: usize,
    m: usize,
    s: usize,
    delta: f64,
    trials: usize,
    freq_budget: usize,
    full_space: bool,
    seed: u64,
) -> Result<LeibmanStats> {
    let tau = TauIota::new(field);
    let omega: Vec<Vec<i64>> = pts.iter().map(|n| tau.tau_vec(n)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut stats = LeibmanStats {
        trials,
        equidistributed: 0,
        obstructed: 0,
        exceptions: Vec::new(),
        skipped: 0,
        hypotheses_met: full_space || d >= s + 13,
    };
    for _ in 0..trials {
        let Some(g) = random_periodic_seq(field, d, m, s, &omega, full_space, &mut rng) else {
            stats.skipped += 1;
            continue;
        };
        let report = equidist_test(&g, field, pts, delta, freq_budget)?;
        match report.verdict {
            Verdict::Equidistributed { .. } => stats.equidistributed += 1,
            Verdict::Obstructed { .. } => stats.obstructed += 1,
            Verdict::Unresolved { .. } => stats.exceptions.push(LeibmanTrial { seq: g, report }),
        }
    }
    Ok(stats)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::counting::all_points;
    use crate::fpoly::rat;

    fn field(p: u64) -> PrimeField {
        PrimeField::new(p).unwrap()
    }

    fn single(d: usize, s: usize, terms: &[(Vec<u32>, BigRational)]) -> TorusPolySeq {
        TorusPolySeq::new(d, s, vec![terms.iter().cloned().collect()]).unwrap()
    }

    #[test]
    fn seq_eval_examples() {
        let c = single(1, 0, &[(vec![0], rat(7, 3))]);
        assert_eq!(seq_eval(&c, &[4]).unwrap(), vec![rat(1, 3)]);
        let g = single(1, 1, &[(vec![1], rat(1, 5))]);
        assert_eq!(seq_eval(&g, &[5]).unwrap(), vec![rat_int(0)]);
        let h = single(1, 2, &[(vec![2], rat(1, 5))]);
        assert_eq!(seq_eval(&h, &[4]).unwrap(), vec![rat(1, 5)]);
        assert_eq!(seq_eval(&h, &[-1]).unwrap(), vec![rat(1, 5)]);
    }

    #[test]
    fn json_roundtrip() {
        let g = TorusPolySeq::new(
            2,
            2,
            vec![
                [(vec![1, 1], rat(1, 7)), (vec![0, 0], rat(2, 3))].into_iter().collect(),
                [(vec![2, 0], rat(-1, 49))].into_iter().collect(),
            ],
        )
        .unwrap();
        assert_eq!(TorusPolySeq::from_json(&g.to_json()).unwrap(), g);
        assert_eq!(TorusPolySeq::from_polys(&g.to_polys()).unwrap().coeffs(), g.coeffs());
    }

    #[test]
    fn frequency_order() {
        assert_eq!(frequencies(1, 3), vec![vec![1], vec![2], vec![3]]);
        assert_eq!(frequencies(2, 1), vec![vec![0, 1], vec![1, 0]]);
        assert_eq!(frequencies(2, 2)[2..], [vec![0, 2], vec![1, -1], vec![1, 1], vec![2, 0]]);
        assert_eq!(default_freq_budget(0.3), 12);
        assert_eq!(default_freq_budget(0.01), 1000);
    }

    #[test]
    fn sphere_sequences() {
        let f = field(5);
        let pts = enumerate_zeros(&QuadForm::sphere(f, 3, 1), None, 1e6).unwrap();
        assert_eq!(pts.len(), 30);

        // (n·n)/p is τ(r)/p on the sphere
        let nn = single(3, 2, &[(vec![2, 0, 0], rat(2, 5)), (vec![1, 0, 0], rat(1, 5)), (vec![0, 2, 0], rat(2, 5)), (vec![0, 1, 0], rat(1, 5)), (vec![0, 0, 2], rat(2, 5)), (vec![0, 0, 1], rat(1, 5))]);
        let rep = equidist_test(&nn, f, &pts, 0.2, 4).unwrap();
        assert_eq!(rep.verdict, Verdict::Obstructed { k: vec![1], constant: rat(1, 5) });
        assert_eq!(constancy_check(&[1], &nn, f, &pts).unwrap(), (true, rat(1, 5)));
        assert!(constancy_check(&[3], &nn, f, &pts).unwrap().0);

        // n₁/p: 6 + 6·2cos(2π/5) + 6·2cos(4π/5) over 30 points
        let lin = single(3, 1, &[(vec![1, 0, 0], rat(1, 5))]);
        let oracle = {
            let s: Complex64 = pts
                .iter()
                .map(|n| Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * n[0] as f64 / 5.0))
                .sum();
            s.norm() / 30.0
        };
        let rep = equidist_test(&lin, f, &pts, 0.2, 1).unwrap();
        assert!((rep.max_fourier - oracle).abs() < 1e-12);
        assert!((rep.max_fourier - 0.10300).abs() < 1e-5);
        assert_eq!(rep.verdict, Verdict::Equidistributed { delta: 0.2 });
        // k = 2 already reaches 0.2697
        let rep = equidist_test(&lin, f, &pts, 0.2, 4).unwrap();
        assert_eq!(rep.witness_k, Some(vec![2]));
        assert!((rep.max_fourier - 0.269672).abs() < 1e-5);
        assert!(matches!(rep.verdict, Verdict::Unresolved { .. }));
        // k = 5 kills the denominator
        assert_eq!(character_search(&lin, f, &pts, 5).unwrap(), Some((vec![5], rat_int(0))));
    }

    #[test]
    fn trivial_sequences() {
        let f = field(5);
        let pts: Vec<Vec<u64>> = all_points(f, 2).collect();
        let zero = TorusPolySeq::new(2, 0, vec![BTreeMap::new()]).unwrap();
        let rep = equidist_test(&zero, f, &pts, 0.5, 3).unwrap();
        assert_eq!(rep.verdict, Verdict::Obstructed { k: vec![1], constant: rat_int(0) });
        assert!((rep.max_fourier - 1.0).abs() < 1e-12);
        let g = single(2, 1, &[(vec![1, 0], rat(1, 5))]);
        assert!(constancy_check(&[1], &g, f, &pts[..1]).unwrap().0);
        assert_eq!(constancy_check(&[0], &g, f, &pts).unwrap(), (true, rat_int(0)));
    }

    #[test]
    fn linear_combination_obstruction() {
        let f = field(5);
        let pts: Vec<Vec<u64>> = all_points(f, 2).collect();
        let g = TorusPolySeq::new(
            2,
            1,
            vec![
                [(vec![1, 0], rat(1, 5))].into_iter().collect(),
                [(vec![1, 0], rat(-1, 5)), (vec![0, 0], rat(1, 2))].into_iter().collect(),
            ],
        )
        .unwrap();
        assert_eq!(character_search(&g, f, &pts, 4).unwrap(), Some((vec![1, 1], rat(1, 2))));
    }

    #[test]
    fn weyl_examples() {
        let p = 7;
        let d = 4;
        // constructed constant branch
        let m = sphere_lift(p, d, 1).unwrap().to_poly().scale_rat(&rat_int(7));
        let g1 = RatMultiPoly::rat_var(d, 0);
        let g2 = &RatMultiPoly::rat_var(d, 1) * &RatMultiPoly::rat_var(d, 2);
        let g = &(&(&m * &g1) + &g2.scale_rat(&rat_int(7))) + &RatMultiPoly::rat_const(d, rat_int(3));
        match weyl_dichotomy(&g, p, 1, 0.5, 1e8).unwrap() {
            WeylOutcome::Constant { value, a, g1, g2 } => {
                assert!((value - 1.0).abs() < 1e-12);
                assert_eq!(a, 3);
                assert!(verify_weyl_certificate(&g, p, 1, a, &g1, &g2));
            }
            other => panic!("{other:?}"),
        }

        // g constant
        let c = RatMultiPoly::rat_const(d, rat_int(17));
        match weyl_dichotomy(&c, p, 1, 0.5, 1e8).unwrap() {
            WeylOutcome::Constant { a, g1, g2, .. } => {
                assert_eq!(a, 3);
                assert!(g1.is_zero());
                assert_eq!(g2, RatMultiPoly::rat_const(d, rat_int(2)));
            }
            other => panic!("{other:?}"),
        }

        // n₁³ on the sphere, against direct summation over 𝔽_7⁴
        let cube = RatMultiPoly::rat_var(d, 0).pow(3);
        let direct = {
            let fld = field(p);
            let mut s = Complex64::new(0.0, 0.0);
            let mut n = 0;
            for x in all_points(fld, d) {
                if x.iter().map(|&t| t * t).sum::<u64>() % p == 1 {
                    s += Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * (x[0].pow(3) % p) as f64 / p as f64);
                    n += 1;
                }
            }
            s.norm() / n as f64
        };
        // cubes mod 7 lie in {0, ±1}: the sum is large without constancy at this small d
        assert!((direct - 0.670554).abs() < 1e-6);
        match weyl_dichotomy(&cube, p, 1, 0.7, 1e8).unwrap() {
            WeylOutcome::SumSmall { value } => assert!((value - direct).abs() < 1e-12),
            other => panic!("{other:?}"),
        }
        assert!(matches!(weyl_dichotomy(&cube, p, 1, 0.5, 1e8), Err(Error::DichotomyViolation(_))));
        assert_eq!(weyl_dichotomy(&RatMultiPoly::rat_var(d, 0).scale_rat(&rat(1, 2)), p, 1, 0.5, 1e8), Err(Error::NotIntegerValued));
    }

    #[test]
    fn leibman_examples() {
        let f = field(5);
        let pts: Vec<Vec<u64>> = all_points(f, 4).collect();
        let stats = leibman_probe(f, &pts, 4, 1, 2, 0.3, 5, 20, true, 3).unwrap();
        assert!(stats.exceptions.is_empty());
        assert_eq!(stats.equidistributed + stats.obstructed + stats.skipped, 5);

        // sphere, constant plus multiples of the sphere equation
        let sph = enumerate_zeros(&QuadForm::sphere(f, 3, 2), None, 1e6).unwrap();
        let mut coeffs = sphere_lift(5, 3, 2).unwrap().to_poly();
        coeffs = &(&coeffs * &RatMultiPoly::rat_var(3, 1)) + &RatMultiPoly::rat_const(3, rat(2, 5));
        let g = TorusPolySeq::from_polys(&[coeffs]).unwrap();
        let rep = equidist_test(&g, f, &sph, 0.3, 10).unwrap();
        assert_eq!(rep.verdict, Verdict::Obstructed { k: vec![1], constant: rat(2, 5) });
    }
}
