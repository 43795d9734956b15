use std::collections::BTreeMap;

use num_rational::BigRational;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use sphere_hofa::counting::{enumerate_zeros, exp_sum_over, BOUND_CONSTANT};
use sphere_hofa::division::divide;
use sphere_hofa::equidist::{constancy_check, TorusPolySeq};
use sphere_hofa::fpoly::{induce, is_lifting_of, monomials_up_to, rat, rat_int, regular_lift};
use sphere_hofa::msets::{enumerate_mset, fubini_check, standard_rep, MFamily, MQuadFn};
use sphere_hofa::{FpMatrix, FpMultiPoly, PrimeField, QuadForm, RatMultiPoly};

fn prime() -> impl Strategy<Value = u64> {
    prop::sample::select(vec![5u64, 7, 11, 13])
}

fn rand_form(f: PrimeField, d: usize, min_rank: usize, rng: &mut ChaCha8Rng) -> QuadForm {
    loop {
        let mut a = FpMatrix::zeros(f, d, d);
        for i in 0..d {
            for j in i..d {
                let x = rng.gen_range(0..f.p());
                a.set(i, j, x);
                a.set(j, i, x);
            }
        }
        let u = (0..d).map(|_| rng.gen_range(0..f.p())).collect();
        let m = QuadForm::new(a, u, rng.gen_range(0..f.p())).unwrap();
        if m.rank() >= min_rank {
            return m;
        }
    }
}

fn rand_fp(f: PrimeField, d: usize, deg: usize, rng: &mut ChaCha8Rng) -> FpMultiPoly {
    let mut out = FpMultiPoly::zero(f, d);
    for e in monomials_up_to(d, deg) {
        out.add_term(e, rng.gen_range(0..f.p()));
    }
    out
}

/// `(1/p) Σ c_e C(n, e)`: the general ℤ/p-valued polynomial of degree ≤ deg.
fn rand_zp_valued(p: u64, d: usize, deg: usize, rng: &mut ChaCha8Rng) -> RatMultiPoly {
    let mut c = BTreeMap::new();
    let bound = 3 * p as i64;
    for e in monomials_up_to(d, deg) {
        c.insert(e, rat(rng.gen_range(-bound..=bound), p as i64));
    }
    RatMultiPoly::from_binomial_coeffs(d, &c)
}

fn config(cases: u32) -> ProptestConfig {
    ProptestConfig { cases, failure_persistence: None, ..ProptestConfig::default() }
}

proptest! {
    #![proptest_config(config(64))]

    #[test]
    fn field_axioms(p in prime(), a in 0u64..1000, b in 0u64..1000, c in 0u64..1000) {
        let f = PrimeField::new(p).unwrap();
        let (a, b, c) = (f.reduce(a), f.reduce(b), f.reduce(c));
        prop_assert_eq!(f.add(f.add(a, b), c), f.add(a, f.add(b, c)));
        prop_assert_eq!(f.mul(a, f.add(b, c)), f.add(f.mul(a, b), f.mul(a, c)));
        prop_assert_eq!(f.sub(f.add(a, b), b), a);
        if a != 0 {
            prop_assert_eq!(f.mul(a, f.inv(a)), 1);
        }
    }

    #[test]
    fn rref_is_idempotent(p in prime(), seed in any::<u64>(), rows in 1usize..5, cols in 1usize..6) {
        let f = PrimeField::new(p).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data: Vec<Vec<u64>> = (0..rows).map(|_| (0..cols).map(|_| rng.gen_range(0..p)).collect()).collect();
        let a = FpMatrix::from_rows(f, &data).unwrap();
        let r = a.rref();
        prop_assert_eq!(r.matrix.rref(), r.clone());
        prop_assert_eq!(a.rank(), a.transpose().rank());
    }

    #[test]
    fn normalization_certificates_verify(p in prime(), seed in any::<u64>(), d in 2usize..6) {
        let f = PrimeField::new(p).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = rand_form(f, d, 1, &mut rng);
        prop_assert!(m.normalize().verify(&m));
    }

    #[test]
    fn division_round_trip(p in prime(), seed in any::<u64>(), d in 3usize..5, deg in 0usize..3) {
        let f = PrimeField::new(p).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = rand_form(f, d, 3, &mut rng);
        let r = rand_fp(f, d, deg, &mut rng);
        let big_p = &m.to_poly() * &r;
        let cert = divide(&big_p, &m).unwrap();
        prop_assert!(cert.is_exact());
        prop_assert!(cert.verify(&big_p, &m));
        prop_assert_eq!(&m.to_poly() * &cert.quotient_original().unwrap(), big_p);
    }

    #[test]
    fn binomial_basis_round_trip(seed in any::<u64>(), d in 1usize..4, deg in 0usize..5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut g = RatMultiPoly::rat_zero(d);
        for e in monomials_up_to(d, deg) {
            g.add_term(e, rat(rng.gen_range(-20..20), rng.gen_range(1..7)));
        }
        prop_assert_eq!(RatMultiPoly::from_binomial_coeffs(d, &g.binomial_coeffs()), g);
    }

    #[test]
    fn lifts_round_trip(p in prime(), seed in any::<u64>(), d in 1usize..4, deg in 0usize..5) {
        let f = PrimeField::new(p).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let big_f = rand_fp(f, d, deg, &mut rng);
        prop_assert_eq!(induce(&regular_lift(&big_f), f).unwrap(), big_f);
    }

    #[test]
    fn lifts_respect_ring_operations(p in prime(), seed in any::<u64>(), d in 1usize..3) {
        let f = PrimeField::new(p).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let half = ((p - 1) / 2) as usize;
        let a = rand_zp_valued(p, d, rng.gen_range(0..=half), &mut rng);
        let b = rand_zp_valued(p, d, rng.gen_range(0..=half), &mut rng);
        let (fa, fb) = (induce(&a, f).unwrap(), induce(&b, f).unwrap());
        prop_assert!(is_lifting_of(&(&a + &b), &(&fa + &fb)));
        prop_assert!(is_lifting_of(&(&a * &b).scale_rat(&rat_int(p as i64)), &(&fa * &fb)));
    }

    #[test]
    fn standard_rep_is_idempotent_and_keeps_points(seed in any::<u64>(), count in 1usize..3) {
        let f = PrimeField::new(5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = rand_form(f, 3, 3, &mut rng);
        let (k, d) = (2, 3);
        let len = k * (k + 1) / 2 + k * d + 1;
        let fs: Vec<MQuadFn> = (0..count)
            .map(|_| MQuadFn::from_coeff_vector(k, d, &(0..len).map(|_| rng.gen_range(0..5)).collect::<Vec<_>>()))
            .collect();
        let fam = MFamily::new(m, k, fs).unwrap();
        if let Ok(rep) = standard_rep(&fam) {
            let again = standard_rep(&rep.family).unwrap();
            prop_assert_eq!(&again.family, &rep.family);
            prop_assert_eq!(enumerate_mset(&fam, 1e7).unwrap(), enumerate_mset(&rep.family, 1e7).unwrap());
        }
    }

    #[test]
    fn exp_sum_bound(p in prop::sample::select(vec![5u64, 7]), seed in any::<u64>(), d in 3usize..5) {
        let f = PrimeField::new(p).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = rand_form(f, d, 3, &mut rng);
        let pts = enumerate_zeros(&m, None, 1e7).unwrap();
        prop_assume!(!pts.is_empty());
        let xi: Vec<i64> = loop {
            let x: Vec<i64> = (0..d).map(|_| rng.gen_range(0..p as i64)).collect();
            if x.iter().any(|&c| c != 0) {
                break x;
            }
        };
        let s = exp_sum_over(f, &pts, &xi).unwrap().norm();
        let r = m.rank() as f64;
        prop_assert!(s <= BOUND_CONSTANT * (p as f64).powf(-(r - 2.0) / 2.0) + 1e-12);
    }

    #[test]
    fn constancy_survives_scaling(c in 1i64..5, t in 1i64..6, seed in any::<u64>()) {
        let f = PrimeField::new(5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pts = enumerate_zeros(&QuadForm::sphere(f, 3, 1), None, 1e6).unwrap();
        // (c/p)(n·n) plus an integer-coefficient part is constant mod 1 on the sphere
        let mut g = RatMultiPoly::rat_zero(3);
        for i in 0..3 {
            let mut e = vec![0u32; 3];
            e[i] = 2;
            g.add_term(e.clone(), rat(c, 5));
            e[i] = 1;
            g.add_term(e, rat_int(rng.gen_range(-3..4)));
        }
        let seq = TorusPolySeq::from_polys(&[g]).unwrap();
        prop_assert!(constancy_check(&[1], &seq, f, &pts).unwrap().0);
        prop_assert!(constancy_check(&[t], &seq, f, &pts).unwrap().0);
    }

}

proptest! {
    #![proptest_config(config(4))]

    #[test]
    fn fubini_exact_for_constant_function(p in prop::sample::select(vec![5u64, 7]), r in 1u64..5) {
        let f = PrimeField::new(p).unwrap();
        let m = QuadForm::sphere(f, 5, r);
        let rep = fubini_check(&MFamily::gowers(&m, 1), 1, |_| 1.0, 1e9).unwrap();
        prop_assert_eq!(rep.difference, 0.0);
    }
}

#[test]
fn zp_valued_generator_is_zp_valued() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let g = rand_zp_valued(7, 2, 3, &mut rng);
    assert!(g.scale_rat(&rat_int(7)).is_integer_valued());
    let _: BigRational = g.constant_term();
}
