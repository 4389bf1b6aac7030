//! Truncated Poincare series: convergence, transformation law and the cusp.
//!
//! `cargo run --release --example poincare`

use hmvf::field::{make_field, FieldElement, FieldSpec};
use hmvf::modfun::{sample_points_in, transformation_residual, FunctionHandle, Sl2, WeightMatrix};
use hmvf::poincare::{convergence_diagnostic, cusp_limit_check, CuspDirection, PoincareSpec, TruncatedSeries};
use hmvf::rep::perm_rep_mod_p;
use num_complex::Complex64;

fn main() -> hmvf::Result<()> {
    let field = make_field(FieldSpec::Rational)?;
    let rep = perm_rep_mod_p(&field, FieldElement::integer(2))?;
    // one weight row, repeated for every column
    let weight = WeightMatrix::new(vec![vec![12]])?;
    let spec = PoincareSpec::new(&rep, &weight, &[vec![1]], false)?;

    let tau = [Complex64::new(0.1, 1.1)];
    let report = convergence_diagnostic(&spec, &tau, &[5.0, 10.0, 20.0, 40.0])?;
    for row in &report.rows {
        println!("B = {:>4}: change {:?}", row.bound, row.delta);
    }

    let series = TruncatedSeries::new(&spec, 40.0)?;
    println!("{} cosets at B = 40", series.coset_count());
    let g = FunctionHandle::new(&field, rep.dim(), spec.weight().clone(), move |tau| series.eval_original_basis(tau));
    // a truncated series converges slowly near the real axis
    let points = sample_points_in(1, 8, 7, (-0.5, 0.5), (0.8, 1.6));
    for (name, gamma) in [("S", Sl2::s()), ("T", Sl2::translation(FieldElement::ONE))] {
        println!("{name}: residual {:e}", transformation_residual(&g, &rep, &gamma, &points)?);
    }

    let values = cusp_limit_check(&spec, 20.0, CuspDirection::Diagonal, &[1.0, 2.0, 4.0])?;
    println!("max |G(i lambda)| for lambda = 1, 2, 4: {values:?}");
    Ok(())
}
