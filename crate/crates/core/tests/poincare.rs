mod common;

use common::{c, e4_divisor_sum, q5, rational};
use hmvf::field::{Field, FieldElement};
use hmvf::linalg::{from_real_rows, spectral_norm, CMatrix};
use hmvf::modfun::{mobius, sample_points_in, transformation_residual_with, FunctionHandle, Sl2, WeightMatrix};
use hmvf::poincare::{
    complete_row, convergence_diagnostic, cusp_limit_check, enumerate_cosets, eval_poincare, CuspDirection,
    PoincareSpec, TruncatedSeries,
};
use hmvf::rep::{perm_rep_mod_p, translation_rep, trivial_rep};
use hmvf::Error;
use num_complex::Complex64;
use std::collections::BTreeSet;

fn weight(row: &[i64]) -> WeightMatrix {
    WeightMatrix::new(vec![row.to_vec()]).unwrap()
}

fn e4_spec() -> PoincareSpec {
    PoincareSpec::new(&trivial_rep(&rational(), 1).unwrap(), &weight(&[4]), &[vec![0]], true).unwrap()
}

/// Coprime bottom rows in the embedding box, by scanning coordinates.
fn brute_force_rows(field: &Field, bound: f64) -> BTreeSet<(FieldElement, FieldElement)> {
    let scan = (4.0 * bound).ceil() as i64 + 2;
    let bs: Vec<i64> = if field.degree() == 1 { vec![0] } else { (-scan..=scan).collect() };
    let mut elems = Vec::new();
    for a in -scan..=scan {
        for &b in &bs {
            let x = FieldElement::new(a, b);
            if field.embed(x).iter().all(|s| s.abs() <= bound + 1e-12) {
                elems.push(x);
            }
        }
    }
    let mut rows = BTreeSet::new();
    for &cc in &elems {
        for &d in &elems {
            if cc.is_zero() && d.is_zero() {
                continue;
            }
            let (g, _, _) = field.euclid_gcd(cc, d).unwrap();
            if field.is_unit(g) {
                rows.insert((cc, d));
            }
        }
    }
    rows
}

#[test]
fn rational_cosets_at_unit_bound() {
    let q = rational();
    let reps = enumerate_cosets(&q, 1.0).unwrap();
    assert_eq!(reps.len(), 8);
    let rows: BTreeSet<(i64, i64)> = reps.iter().map(|m| (m.c.a, m.d.a)).collect();
    let want: BTreeSet<(i64, i64)> = [(0, 1), (0, -1), (1, 0), (-1, 0), (1, 1), (1, -1), (-1, 1), (-1, -1)].into();
    assert_eq!(rows, want);
}

#[test]
fn cosets_match_brute_force() {
    for field in [rational(), q5()] {
        for bound in [0.5, 1.0, 2.0, 3.0, 4.5] {
            let reps = enumerate_cosets(&field, bound).unwrap();
            let rows: BTreeSet<_> = reps.iter().map(|m| (m.c, m.d)).collect();
            assert_eq!(rows.len(), reps.len(), "duplicate bottom rows");
            assert_eq!(rows, brute_force_rows(&field, bound), "bound {bound}");
            for m in &reps {
                assert_eq!(field.mul(m.a, m.d) - field.mul(m.b, m.c), FieldElement::ONE);
            }
        }
    }
    // units of the golden field have conjugates of size 1.618, so only +-1 fit
    assert_eq!(enumerate_cosets(&q5(), 1.0).unwrap().len(), 8);
    assert!(enumerate_cosets(&q5(), 0.5).unwrap().is_empty());
}

#[test]
fn completion_examples() {
    let q = rational();
    let m = complete_row(&q, FieldElement::integer(3), FieldElement::integer(5)).unwrap();
    assert_eq!((m.a.a, m.b.a, m.c.a, m.d.a), (2, 3, 3, 5));
    let m = complete_row(&q, FieldElement::ZERO, FieldElement::integer(-1)).unwrap();
    assert_eq!((m.a.a, m.b.a), (-1, 0));
    assert!(complete_row(&q, FieldElement::integer(2), FieldElement::integer(4)).is_err());

    let f = q5();
    let (cc, d) = (FieldElement::new(3, 1), FieldElement::new(1, 2));
    let m = complete_row(&f, cc, d).unwrap();
    assert_eq!(f.mul(m.a, m.d) - f.mul(m.b, m.c), FieldElement::ONE);
    // a / c has rational coordinates in [0, 1)
    let ac = f.embed(m.a).iter().zip(f.embed(cc)).map(|(x, y)| x / y).collect::<Vec<_>>();
    let w = f.omega_embeddings();
    let q = (ac[0] - ac[1]) / (w[0] - w[1]);
    let p = ac[0] - q * w[0];
    assert!((0.0..1.0).contains(&(p + 1e-12)) && (0.0..1.0).contains(&(q + 1e-12)));
}

#[test]
fn empty_truncation_is_zero() {
    let spec = PoincareSpec::new(&perm_rep_mod_p(&q5(), FieldElement::integer(2)).unwrap(), &weight(&[3, 3]), &[vec![1, 1]], false).unwrap();
    let g = eval_poincare(&spec, 0.5, &[c(0.1, 1.0), c(-0.2, 1.3)]).unwrap();
    assert_eq!(g, CMatrix::zeros(5, 5));
    let report = convergence_diagnostic(&spec, &[c(0.1, 1.0), c(-0.2, 1.3)], &[0.5, 0.75]).unwrap();
    assert_eq!(report.rows[1].delta, Some(0.0));
}

#[test]
fn identity_term_is_the_exponential() {
    let f = q5();
    let spec = PoincareSpec::new(&trivial_rep(&f, 1).unwrap(), &weight(&[4, 4]), &[vec![1, 1]], false).unwrap();
    let tau = [c(0.3, 1.1), c(-0.4, 0.9)];
    // nu = (1, 1) in dual coordinates; its real vector is D (1, 1)
    let l = spec.lattice();
    let real = l.dual_vector(&[1, 1]).real().to_vec();
    let phase: Complex64 = real.iter().zip(&tau).map(|(x, z)| z * x).sum();
    let want = (c(0.0, 2.0 * std::f64::consts::PI) * phase).exp();
    let got = spec.term(&Sl2::identity(), &tau).unwrap()[(0, 0)];
    assert!((got - want).norm() < 1e-14);
}

#[test]
fn eisenstein_oracle_at_moderate_bound() {
    let spec = e4_spec();
    let series = TruncatedSeries::new(&spec, 100.0).unwrap();
    for tau in [c(0.0, 2.0), c(0.5, 1.5)] {
        let got = series.eval(&[tau]).unwrap()[(0, 0)] / 2.0;
        let want = e4_divisor_sum(tau);
        assert!(((got - want) / want).norm() < 1e-5);
    }
}

#[test]
fn termwise_translation_invariance() {
    for (spec, n) in [
        (PoincareSpec::new(&perm_rep_mod_p(&q5(), FieldElement::integer(2)).unwrap(), &weight(&[3, 3]), &[vec![1, 1]], false).unwrap(), 2),
        (PoincareSpec::new(&perm_rep_mod_p(&rational(), FieldElement::integer(3)).unwrap(), &weight(&[4]), &[vec![1]], false).unwrap(), 1),
    ] {
        let field = spec.field().clone();
        let series = TruncatedSeries::new(&spec, 3.0).unwrap();
        let tau = &sample_points_in(n, 1, 1, (-1.0, 1.0), (1.0, 2.0))[0];
        for m in series.representatives().iter().take(40) {
            let base = spec.term(m, tau).unwrap();
            for x in [FieldElement::ONE, field.omega(), FieldElement::new(-2, 1)] {
                let moved = spec.term(&Sl2::translation(x).mul(&field, m), tau).unwrap();
                assert!(spectral_norm(&(moved - &base)) <= 1e-10 * spectral_norm(&base).max(1e-300) + 1e-300);
            }
        }
    }
}

#[test]
fn truncations_converge() {
    let spec = e4_spec();
    for tau in [c(0.0, 1.0), c(0.0, 2.0)] {
        let report = convergence_diagnostic(&spec, &[tau], &[5.0, 10.0, 20.0]).unwrap();
        let d: Vec<f64> = report.rows.iter().filter_map(|r| r.delta).collect();
        assert!(d[1] < d[0] && !report.non_monotone);
    }
    let low = convergence_diagnostic(&spec, &[c(0.0, 1.0)], &[5.0, 10.0]).unwrap().rows[1].delta.unwrap();
    let high = convergence_diagnostic(&spec, &[c(0.0, 2.0)], &[5.0, 10.0]).unwrap().rows[1].delta.unwrap();
    assert!(high < low);
    assert!(convergence_diagnostic(&spec, &[c(0.0, 1.0)], &[5.0]).is_err());
}

#[test]
fn absolute_sums_stabilize() {
    let spec = PoincareSpec::new(&perm_rep_mod_p(&q5(), FieldElement::integer(2)).unwrap(), &weight(&[3, 3]), &[vec![1, 1]], false).unwrap();
    let tau = [c(0.2, 1.4), c(-0.1, 1.2)];
    let sums: Vec<f64> = [4.0, 8.0, 16.0]
        .iter()
        .map(|&b| {
            let series = TruncatedSeries::new(&spec, b).unwrap();
            series.representatives().iter().map(|m| spectral_norm(&spec.term(m, &tau).unwrap())).sum()
        })
        .collect();
    assert!(sums[2] - sums[1] < sums[1] - sums[0]);
    assert!(sums.iter().all(|s| s.is_finite()));
}

#[test]
fn rational_transformation_law() {
    let q = rational();
    let spec = PoincareSpec::new(&perm_rep_mod_p(&q, FieldElement::integer(2)).unwrap(), &weight(&[4]), &[vec![1]], false).unwrap();
    let pts = sample_points_in(1, 5, 3, (-1.0, 1.0), (1.2, 2.0));
    let mut last = f64::INFINITY;
    for bound in [25.0, 50.0, 100.0] {
        let series = TruncatedSeries::new(&spec, bound).unwrap();
        let h = FunctionHandle::new(&q, 3, WeightMatrix::uniform(&[4], 3).unwrap(), move |tau| series.eval(tau));
        let mut worst: f64 = 0.0;
        for g in [Sl2::s(), Sl2::translation(FieldElement::ONE)] {
            let rho = spec.rho_in_basis(&g).unwrap();
            worst = worst.max(transformation_residual_with(&h, &rho, &g, &pts).unwrap());
        }
        assert!(worst < last);
        last = worst;
    }
    assert!(last <= 1e-2, "{last}");
}

#[test]
fn cusp_values_decay() {
    // no cusp forms of weight 4 exist, so this series vanishes up to truncation
    let zero = PoincareSpec::new(&trivial_rep(&rational(), 1).unwrap(), &weight(&[4]), &[vec![1]], false).unwrap();
    let values = cusp_limit_check(&zero, 100.0, CuspDirection::Axis(0), &[2.0, 4.0, 8.0]).unwrap();
    assert!(values.iter().all(|&v| v < 1e-5), "{values:?}");
    // weight 12 gives a nonzero multiple of the discriminant
    let spec = PoincareSpec::new(&trivial_rep(&rational(), 1).unwrap(), &weight(&[12]), &[vec![1]], false).unwrap();
    let values = cusp_limit_check(&spec, 100.0, CuspDirection::Axis(0), &[2.0, 4.0, 8.0]).unwrap();
    assert!(values[1] < values[0] && values[2] < values[1], "{values:?}");
    assert!(values[2] <= 1e-3);
    let ratio = values[1] / values[0];
    assert!((ratio.ln() / (-4.0 * std::f64::consts::PI) - 1.0).abs() < 1e-3, "{values:?}");
    assert!(matches!(
        cusp_limit_check(&e4_spec(), 10.0, CuspDirection::Diagonal, &[2.0, 4.0]),
        Err(Error::Assumption(_))
    ));
    assert!(cusp_limit_check(&spec, 10.0, CuspDirection::Diagonal, &[4.0, 2.0]).is_err());
}

#[test]
fn spec_validation() {
    let f = q5();
    let rho = perm_rep_mod_p(&f, FieldElement::integer(2)).unwrap();
    // weights must exceed 2
    assert!(matches!(PoincareSpec::new(&rho, &weight(&[2, 3]), &[vec![1, 1]], false), Err(Error::Assumption(_))));
    // nu must be totally positive
    assert!(PoincareSpec::new(&rho, &weight(&[3, 3]), &[vec![0, 0]], false).is_err());
    let jordan = translation_rep(&hmvf::lattice::translation_lattice(&rational(), hmvf::lattice::SubgroupSpec::Full).unwrap(), vec![from_real_rows(&[&[1.0, 1.0], &[0.0, 1.0]])]).unwrap();
    assert!(matches!(PoincareSpec::new(&jordan, &weight(&[4]), &[vec![1]], false), Err(Error::Assumption(_))));
    let spec = PoincareSpec::new(&rho, &weight(&[3, 3]), &[vec![1, 1]], false).unwrap();
    assert_eq!(spec.weight().c(), 5);
    assert!(spec.mu().iter().flatten().all(|m| (0.0..1.0).contains(m)));
    assert!(TruncatedSeries::new(&spec, -1.0).is_err());
    assert!(TruncatedSeries::new(&spec, 2.0).unwrap().eval(&[c(0.0, 1.0), c(0.0, -1.0)]).is_err());
}

#[test]
fn original_basis_conjugates_back() {
    let spec = PoincareSpec::new(&perm_rep_mod_p(&rational(), FieldElement::integer(2)).unwrap(), &weight(&[4]), &[vec![1]], false).unwrap();
    let series = TruncatedSeries::new(&spec, 10.0).unwrap();
    let tau = [c(0.1, 1.3)];
    let diff = series.eval_original_basis(&tau).unwrap() - spec.basis() * series.eval(&tau).unwrap();
    assert_eq!(spectral_norm(&diff), 0.0);
    let moved = mobius(spec.field(), &Sl2::s(), &tau).unwrap();
    assert!(moved[0].im > 0.0);
}
