mod common;

use common::{c, full, max_abs_diff, q5, rational};
use hmvf::field::{make_field, FieldElement, FieldSpec};
use hmvf::linalg::{commuting_residual, diagonal, from_real_rows, identity, unitarity_defect};
use hmvf::modfun::{random_sl2, Sl2};
use hmvf::rep::{perm_rep_mod_p, residue_field, translation_rep, trivial_rep};
use hmvf::Error;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn random_pairs(field: &hmvf::field::Field, seed: u64, count: usize) -> Vec<(Sl2, Sl2)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| (random_sl2(field, &mut rng, 4), random_sl2(field, &mut rng, 4)))
        .collect()
}

#[test]
fn trivial_images() {
    let q = rational();
    let one = trivial_rep(&q, 1).unwrap();
    assert_eq!(one.eval(&Sl2::s()).unwrap(), identity(1));
    let three = trivial_rep(&q, 3).unwrap();
    assert_eq!(three.eval(&Sl2::translation(FieldElement::ONE)).unwrap(), identity(3));
    assert_eq!(three.homomorphism_residual(&random_pairs(&q, 1, 50)).unwrap(), 0.0);
    assert!(trivial_rep(&q, 0).is_err());
}

#[test]
fn permutation_rep_over_rationals_mod_two() {
    let q = rational();
    let rho = perm_rep_mod_p(&q, FieldElement::integer(2)).unwrap();
    assert_eq!(rho.dim(), 3);
    // points are [0], [1], [inf]
    assert_eq!(rho.permutation(&Sl2::translation(FieldElement::ONE)).unwrap(), vec![1, 0, 2]);
    assert_eq!(rho.permutation(&Sl2::s()).unwrap(), vec![2, 1, 0]);
    let t = rho.eval(&Sl2::translation(FieldElement::ONE)).unwrap();
    assert_eq!(t, from_real_rows(&[&[0.0, 1.0, 0.0], &[1.0, 0.0, 0.0], &[0.0, 0.0, 1.0]]));
}

#[test]
fn permutation_rep_sizes() {
    let f = q5();
    assert_eq!(perm_rep_mod_p(&f, FieldElement::integer(2)).unwrap().dim(), 5);
    assert_eq!(perm_rep_mod_p(&f, FieldElement::integer(3)).unwrap().dim(), 10);
    // sqrt 5 = 2w - 1 is ramified with residue field F_5
    assert_eq!(perm_rep_mod_p(&f, FieldElement::new(-1, 2)).unwrap().dim(), 6);
    // 11 = (4 - w)(3 + w) splits
    let p = FieldElement::new(4, -1);
    assert_eq!(f.norm(p), 11);
    assert_eq!(perm_rep_mod_p(&f, p).unwrap().dim(), 12);
    assert_eq!(perm_rep_mod_p(&rational(), FieldElement::integer(7)).unwrap().dim(), 8);
}

#[test]
fn non_primes_are_rejected() {
    let f = q5();
    for p in [FieldElement::integer(4), FieldElement::integer(11), FieldElement::ONE, FieldElement::ZERO] {
        assert!(perm_rep_mod_p(&f, p).is_err(), "{p:?}");
    }
    assert!(matches!(perm_rep_mod_p(&rational(), FieldElement::integer(6)), Err(Error::NotPrime(_))));
}

#[test]
fn residue_field_reduction_is_a_ring_map() {
    let f = q5();
    let rf = residue_field(&f, FieldElement::integer(3)).unwrap();
    assert_eq!(rf.size(), 9);
    assert_eq!(rf.characteristic(), 3);
    let x = FieldElement::new(5, -7);
    let y = FieldElement::new(-2, 4);
    let lhs = rf.reduce(f.mul(x, y));
    let rhs = rf.reduce(f.mul(rf_lift(rf.reduce(x)), rf_lift(rf.reduce(y))));
    assert_eq!(lhs, rhs);
}

fn rf_lift(x: (u64, u64)) -> FieldElement {
    FieldElement::new(x.0 as i64, x.1 as i64)
}

#[test]
fn permutation_reps_are_homomorphisms() {
    for (d, p) in [(1, FieldElement::integer(2)), (1, FieldElement::integer(5)), (5, FieldElement::integer(2)), (5, FieldElement::new(-1, 2)), (2, FieldElement::new(0, 1)), (13, FieldElement::integer(2))] {
        let f = if d == 1 { rational() } else { make_field(FieldSpec::Quadratic(d)).unwrap() };
        let rho = perm_rep_mod_p(&f, p).unwrap();
        assert!(rho.homomorphism_residual(&random_pairs(&f, d as u64, 50)).unwrap() <= 1e-10);
        let l = full(&f);
        let images = rho.translation_images(&l).unwrap();
        assert_eq!(commuting_residual(&images).unwrap(), 0.0);
        for g in images.iter().chain([rho.eval(&Sl2::s()).unwrap()].iter()) {
            assert_eq!(unitarity_defect(g), 0.0);
        }
    }
}

#[test]
fn minus_identity_action_is_checked_directly() {
    for (f, p) in [(rational(), FieldElement::integer(2)), (rational(), FieldElement::integer(5)), (q5(), FieldElement::integer(2))] {
        let rho = perm_rep_mod_p(&f, p).unwrap();
        let minus = Sl2::s().mul(&f, &Sl2::s());
        let sigma = rho.permutation(&minus).unwrap();
        // [x : y] and [-x : -y] are the same projective point
        assert_eq!(sigma, (0..rho.dim()).collect::<Vec<_>>());
    }
}

#[test]
fn translation_only_examples() {
    let q = rational();
    let lq = full(&q);
    let jordan = from_real_rows(&[&[1.0, 1.0], &[0.0, 1.0]]);
    let rho = translation_rep(&lq, vec![jordan]).unwrap();
    let t3 = rho.eval(&Sl2::translation(FieldElement::integer(3))).unwrap();
    assert_eq!(t3, from_real_rows(&[&[1.0, 3.0], &[0.0, 1.0]]));
    let tm2 = rho.eval(&Sl2::translation(FieldElement::integer(-2))).unwrap();
    assert!(max_abs_diff(&tm2, &from_real_rows(&[&[1.0, -2.0], &[0.0, 1.0]])) < 1e-15);
    assert!(matches!(rho.eval(&Sl2::s()), Err(Error::NonTranslation)));

    let f = q5();
    let l = full(&f);
    let a1 = diagonal(&[c(0.0, 1.0), c(1.0, 0.0)]);
    let a2 = diagonal(&[c(1.0, 0.0), c(-1.0, 0.0)]);
    let rho = translation_rep(&l, vec![a1, a2]).unwrap();
    let t = rho.eval(&Sl2::translation(FieldElement::new(1, 1))).unwrap();
    assert_eq!(t, diagonal(&[c(0.0, 1.0), c(-1.0, 0.0)]));
    assert!(!rho.is_unitary_kind());
}

#[test]
fn translation_only_validation() {
    let l = full(&rational());
    let e = from_real_rows(&[&[1.0, 1.0], &[0.0, 1.0]]);
    let f = from_real_rows(&[&[1.0, 0.0], &[1.0, 1.0]]);
    assert!(matches!(translation_rep(&full(&q5()), vec![e.clone(), f]), Err(Error::NonCommuting(_))));
    assert!(matches!(translation_rep(&l, vec![e.clone(), e]), Err(Error::DimensionMismatch(_))));
    let singular = from_real_rows(&[&[1.0, 1.0], &[1.0, 1.0]]);
    assert!(matches!(translation_rep(&l, vec![singular]), Err(Error::Singular(_))));
}
