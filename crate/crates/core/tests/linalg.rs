mod common;

use common::{c, commuting_unipotents, max_abs_diff, random_sbtsd_instance, strict_upper};
use hmvf::linalg::{
    commuting_residual, diagonal, from_real_rows, generalized_eigenspaces, identity, nilpotent_exp,
    principal_exponent, sbtsd, spectral_norm, unipotent_log, unitary_simdiag, unitriangular_side,
    CMatrix, SbtsdOptions, Triangle,
};
use hmvf::Error;
use num_complex::Complex64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

fn real(rows: &[&[f64]]) -> CMatrix {
    from_real_rows(rows)
}

#[test]
fn commuting_residual_examples() {
    assert_eq!(commuting_residual(&[identity(2), identity(2)]).unwrap(), 0.0);
    let d1 = real(&[&[1.0, 0.0], &[0.0, 2.0]]);
    let d2 = real(&[&[3.0, 0.0], &[0.0, 4.0]]);
    assert_eq!(commuting_residual(&[d1, d2]).unwrap(), 0.0);
    // the commutator is diag(1, -1)
    let e = real(&[&[0.0, 1.0], &[0.0, 0.0]]);
    let f = real(&[&[0.0, 0.0], &[1.0, 0.0]]);
    assert_eq!(commuting_residual(&[e, f]).unwrap(), 1.0);
    assert!(matches!(
        commuting_residual(&[identity(2), identity(3)]),
        Err(Error::DimensionMismatch(_))
    ));
}

#[test]
fn sbtsd_identity() {
    let r = sbtsd(&[identity(3)], &SbtsdOptions::default()).unwrap();
    assert_eq!(r.block_sizes, vec![3]);
    assert!((r.eigenvalues[0][0] - c(1.0, 0.0)).norm() < 1e-14);
    assert!(max_abs_diff(&r.unipotent[0], &identity(3)) < 1e-14);
}

#[test]
fn sbtsd_diagonal_pair() {
    let a = real(&[&[1.0, 0.0], &[0.0, 2.0]]);
    let b = real(&[&[5.0, 0.0], &[0.0, 5.0]]);
    let r = sbtsd(&[a, b], &SbtsdOptions::default()).unwrap();
    assert_eq!(r.block_sizes, vec![1, 1]);
    let mut first: Vec<f64> = r.eigenvalues[0].iter().map(|z| z.re).collect();
    first.sort_by(f64::total_cmp);
    assert!((first[0] - 1.0).abs() < 1e-12 && (first[1] - 2.0).abs() < 1e-12);
    assert!(r.eigenvalues[1].iter().all(|z| (z - c(5.0, 0.0)).norm() < 1e-12));
}

#[test]
fn sbtsd_jordan_pair() {
    let a = real(&[&[1.0, 1.0], &[0.0, 1.0]]);
    let b = real(&[&[2.0, 3.0], &[0.0, 2.0]]);
    let r = sbtsd(&[a.clone(), b.clone()], &SbtsdOptions::default()).unwrap();
    assert_eq!(r.block_sizes, vec![2]);
    assert!((r.eigenvalues[0][0] - c(1.0, 0.0)).norm() < 1e-12);
    assert!((r.eigenvalues[1][0] - c(2.0, 0.0)).norm() < 1e-12);
    // the basis is free up to upper triangular changes, so compare invariantly
    for (i, (m, lambda)) in [(a, 1.0), (b, 2.0)].into_iter().enumerate() {
        let s = &r.unipotent[i];
        let bi = &r.change_of_basis_inverse * m * &r.change_of_basis;
        assert!(max_abs_diff(&(s * bi / c(lambda, 0.0)), &identity(2)) < 1e-12);
        assert_eq!(unitriangular_side(s, 1e-12), Ok(Triangle::Upper));
    }
    // S_2 = S_1^(3/2) since B_2 / 2 = (B_1)^(3/2)
    let ratio = r.unipotent[1][(0, 1)] / r.unipotent[0][(0, 1)];
    assert!((ratio - c(1.5, 0.0)).norm() < 1e-12);
    let conj = &r.change_of_basis_inverse * real(&[&[1.0, -1.0], &[0.0, 1.0]]) * &r.change_of_basis;
    assert!(max_abs_diff(&conj, &r.unipotent[0]) < 1e-12);
}

#[test]
fn sbtsd_rejects_bad_input() {
    let e = real(&[&[0.0, 1.0], &[0.0, 0.0]]);
    let f = real(&[&[0.0, 0.0], &[1.0, 0.0]]);
    assert!(matches!(sbtsd(&[e.clone() + identity(2), f + identity(2)], &SbtsdOptions::default()), Err(Error::NonCommuting(_))));
    assert!(matches!(sbtsd(&[e], &SbtsdOptions::default()), Err(Error::Singular(_))));
    assert!(sbtsd(&[], &SbtsdOptions::default()).is_err());
}

#[test]
fn sbtsd_randomized_invariants() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..40 {
        let inst = random_sbtsd_instance(&mut rng);
        let r = sbtsd(&inst.family, &SbtsdOptions::default()).unwrap();
        assert_eq!(r.block_sizes.iter().sum::<usize>(), inst.family[0].nrows());
        let offsets = r.block_offsets();
        for (i, a) in inst.family.iter().enumerate() {
            let b = &r.change_of_basis_inverse * a * &r.change_of_basis;
            assert!(max_abs_diff(&b, &r.transformed[i]) <= 1e-8 * spectral_norm(a).max(1.0));
            for j in 0..r.block_count() {
                let blk = r.block_of(&r.transformed[i], j);
                let lambda = r.eigenvalues[i][j];
                for k in 0..blk.nrows() {
                    assert!((blk[(k, k)] - lambda).norm() < 1e-12);
                    for l in 0..k {
                        assert_eq!(blk[(k, l)], c(0.0, 0.0));
                    }
                }
                let s = r.block_of(&r.unipotent[i], j);
                assert!(max_abs_diff(&(s * blk / lambda), &identity(r.block_sizes[j])) < 1e-9);
                let mu = r.exponents[i][j];
                assert!((0.0..1.0).contains(&mu.re));
                assert!(((c(0.0, 2.0 * PI) * mu).exp() - lambda).norm() < 1e-10);
            }
            assert_eq!(offsets.len(), r.block_count());
        }
    }
}

#[test]
fn generalized_eigenspaces_are_stable() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..30 {
        let inst = random_sbtsd_instance(&mut rng);
        let a1 = &inst.family[0];
        let r = a1.nrows();
        let spaces = generalized_eigenspaces(a1, &SbtsdOptions::default()).unwrap();
        assert_eq!(spaces.iter().map(|s| s.basis.ncols()).sum::<usize>(), r);
        for space in &spaces {
            let mut shifted = a1 - identity(r) * space.eigenvalue;
            let base = shifted.clone();
            for _ in 1..r {
                shifted = &shifted * &base;
            }
            for ai in &inst.family {
                let moved = &shifted * ai * &space.basis;
                let scale = spectral_norm(&base).powi(r as i32).max(1.0) * spectral_norm(ai);
                assert!(spectral_norm(&moved) <= 1e-8 * scale);
            }
        }
    }
}

#[test]
fn log_examples() {
    assert_eq!(unipotent_log(&identity(3)).unwrap(), CMatrix::zeros(3, 3));
    let u = real(&[&[1.0, 1.0], &[0.0, 1.0]]);
    assert!(max_abs_diff(&unipotent_log(&u).unwrap(), &real(&[&[0.0, 1.0], &[0.0, 0.0]])) < 1e-15);
    let u3 = real(&[&[1.0, 1.0, 1.0], &[0.0, 1.0, 1.0], &[0.0, 0.0, 1.0]]);
    let n3 = real(&[&[0.0, 1.0, 0.5], &[0.0, 0.0, 1.0], &[0.0, 0.0, 0.0]]);
    let log = unipotent_log(&u3).unwrap();
    assert!(max_abs_diff(&log, &n3) < 1e-15);
    for (u, n) in [(identity(3), CMatrix::zeros(3, 3)), (u, unipotent_log(&real(&[&[1.0, 1.0], &[0.0, 1.0]])).unwrap()), (u3, n3)] {
        assert!(max_abs_diff(&nilpotent_exp(&n).unwrap(), &u) < 1e-15);
    }
    assert!(matches!(unipotent_log(&real(&[&[2.0, 0.0], &[0.0, 1.0]])), Err(Error::NotUnitriangular(_))));
}

#[test]
fn lower_triangular_logs_stay_lower() {
    let u = real(&[&[1.0, 0.0], &[3.0, 1.0]]);
    let n = unipotent_log(&u).unwrap();
    assert_eq!(n[(0, 1)], c(0.0, 0.0));
    assert!((n[(1, 0)] - c(3.0, 0.0)).norm() < 1e-15);
}

#[test]
fn principal_exponent_branch() {
    for (lambda, mu) in [(c(1.0, 0.0), 0.0), (c(-1.0, 0.0), 0.5), (c(0.0, 1.0), 0.25), (c(0.0, -1.0), 0.75)] {
        assert!((principal_exponent(lambda) - c(mu, 0.0)).norm() < 1e-15);
    }
    // modulus enters the imaginary part
    let z = principal_exponent(c(2.0, 0.0));
    assert!(((c(0.0, 2.0 * PI) * z).exp() - c(2.0, 0.0)).norm() < 1e-14);
}

#[test]
fn unitary_simdiag_examples() {
    let r = unitary_simdiag(&[identity(2)]).unwrap();
    assert!(max_abs_diff(&(r.basis.adjoint() * &r.basis), &identity(2)) < 1e-14);

    let swap = real(&[&[0.0, 1.0], &[1.0, 0.0]]);
    let r = unitary_simdiag(std::slice::from_ref(&swap)).unwrap();
    let mut d: Vec<f64> = r.diagonals[0].iter().map(|z| z.re).collect();
    d.sort_by(f64::total_cmp);
    assert!((d[0] + 1.0).abs() < 1e-12 && (d[1] - 1.0).abs() < 1e-12);
    let t = &r.basis;
    let conj = t.adjoint() * swap * t;
    assert!(max_abs_diff(&conj, &diagonal(&r.diagonals[0])) < 1e-12);

    let cycle = real(&[&[0.0, 0.0, 1.0], &[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0]]);
    let r = unitary_simdiag(std::slice::from_ref(&cycle)).unwrap();
    let w = (c(0.0, 2.0 * PI / 3.0)).exp();
    for want in [c(1.0, 0.0), w, w.conj()] {
        assert!(r.diagonals[0].iter().any(|z| (z - want).norm() < 1e-12));
    }
    let conj = r.basis.adjoint() * cycle * &r.basis;
    assert!(max_abs_diff(&conj, &diagonal(&r.diagonals[0])) < 1e-12);

    let not_unitary = real(&[&[1.0, 1.0], &[0.0, 1.0]]);
    assert!(matches!(unitary_simdiag(&[not_unitary]), Err(Error::NotUnitary(_))));
}

#[test]
fn unitary_simdiag_commuting_family() {
    let d1 = diagonal(&[c(1.0, 0.0), c(1.0, 0.0), c(-1.0, 0.0)]);
    let d2 = diagonal(&[c(0.0, 1.0), c(1.0, 0.0), c(0.0, 1.0)]);
    let q = unitary_simdiag(&[real(&[&[0.0, 1.0, 0.0], &[0.0, 0.0, 1.0], &[1.0, 0.0, 0.0]])]).unwrap().basis;
    let fam: Vec<CMatrix> = [d1, d2].iter().map(|d| &q * d * q.adjoint()).collect();
    let r = unitary_simdiag(&fam).unwrap();
    for (a, diag) in fam.iter().zip(&r.diagonals) {
        let conj = r.basis.adjoint() * a * &r.basis;
        assert!(max_abs_diff(&conj, &diagonal(diag)) < 1e-9);
        assert!(diag.iter().all(|z| (z.norm() - 1.0).abs() < 1e-9));
    }
}

fn unitriangular(entries: Vec<(f64, f64)>, r: usize) -> CMatrix {
    let mut it = entries.into_iter();
    CMatrix::from_fn(r, r, |i, j| {
        if i == j {
            c(1.0, 0.0)
        } else if j > i {
            let (a, b) = it.next().unwrap();
            Complex64::new(a, b)
        } else {
            c(0.0, 0.0)
        }
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn log_exp_roundtrip(r in 1usize..=8, entries in proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 28)) {
        let u = unitriangular(entries, r);
        let n = unipotent_log(&u).unwrap();
        for i in 0..r {
            for j in 0..=i {
                prop_assert_eq!(n[(i, j)], c(0.0, 0.0));
            }
        }
        let back = nilpotent_exp(&n).unwrap();
        prop_assert!(max_abs_diff(&back, &u) <= 1e-12);
    }

    #[test]
    fn commuting_unipotents_split_into_one_block(seed in 0u64..1000, r in 1usize..=4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let fam: Vec<CMatrix> = commuting_unipotents(&mut rng, r, 2)
            .into_iter()
            .map(|u| u * c(0.0, 1.0))
            .collect();
        let res = sbtsd(&fam, &SbtsdOptions::default()).unwrap();
        prop_assert_eq!(res.block_count(), 1);
        prop_assert!(res.eigenvalues.iter().all(|e| (e[0] - c(0.0, 1.0)).norm() < 1e-8));
    }

    #[test]
    fn strictly_upper_exp_is_unitriangular(seed in 0u64..1000, r in 1usize..=6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = strict_upper(&mut rng, r);
        let u = nilpotent_exp(&n).unwrap();
        prop_assert_eq!(unitriangular_side(&u, 0.0), Ok(Triangle::Upper));
    }
}
