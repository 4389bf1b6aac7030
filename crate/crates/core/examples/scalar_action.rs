//! Multiplying a vector-valued form by a scalar form adds the weights.
//!
//! `cargo run --release --example scalar_action`

use hmvf::field::{make_field, FieldElement, FieldSpec};
use hmvf::modfun::{
    sample_points_in, scalar_module_action, transformation_residual, FunctionHandle, MatrixFunction, Sl2,
    WeightMatrix,
};
use hmvf::poincare::{PoincareSpec, TruncatedSeries};
use hmvf::rep::{perm_rep_mod_p, trivial_rep};

fn main() -> hmvf::Result<()> {
    let field = make_field(FieldSpec::Rational)?;

    let one = trivial_rep(&field, 1)?;
    let k4 = WeightMatrix::new(vec![vec![4]])?;
    // weight 4 converges slowly, so this factor dominates the residuals
    let e4 = TruncatedSeries::new(&PoincareSpec::new(&one, &k4, &[], true)?, 60.0)?;
    let e4 = FunctionHandle::new(&field, 1, k4, move |tau| e4.eval(tau));

    let rep = perm_rep_mod_p(&field, FieldElement::integer(2))?;
    let k12 = WeightMatrix::new(vec![vec![12]])?;
    let spec = PoincareSpec::new(&rep, &k12, &[vec![1]], false)?;
    let p = TruncatedSeries::new(&spec, 60.0)?;
    let p = FunctionHandle::new(&field, rep.dim(), spec.weight().clone(), move |tau| p.eval_original_basis(tau));

    let product = scalar_module_action(e4, p)?;
    println!("weight rows of the product: {:?}", product.weight().rows());
    // a truncated series converges slowly near the real axis
    let points = sample_points_in(1, 6, 3, (-0.5, 0.5), (0.8, 1.6));
    for (name, gamma) in [("S", Sl2::s()), ("T", Sl2::translation(FieldElement::ONE))] {
        println!("{name}: residual {:e}", transformation_residual(&product, &rep, &gamma, &points)?);
    }
    Ok(())
}
