//! Polynomial Fourier expansion of a vector-valued function whose
//! translation matrix is a Jordan block.
//!
//! `cargo run --example pipeline`

use std::f64::consts::PI;

use hmvf::field::{make_field, FieldSpec};
use hmvf::lattice::{translation_lattice, SubgroupSpec};
use hmvf::linalg::from_real_rows;
use hmvf::pfe::{evaluate_pfe, expansion_pipeline, PipelineOptions};
use num_complex::Complex64;

fn q(n: f64, z: Complex64) -> Complex64 {
    (Complex64::new(0.0, 2.0 * PI * n) * z).exp()
}

fn main() -> hmvf::Result<()> {
    let field = make_field(FieldSpec::Rational)?;
    let lattice = translation_lattice(&field, SubgroupSpec::Full)?;

    // g = (tau theta + theta2, theta) with g(tau + 1) = [[1,1],[0,1]] g(tau)
    let theta = |z: Complex64| q(1.0, z) + q(2.0, z) * 0.5;
    let g = move |tau: &[Complex64]| -> hmvf::Result<Vec<Complex64>> {
        let z = tau[0];
        Ok(vec![z * theta(z) + q(1.0, z) * Complex64::i(), theta(z)])
    };
    let t = from_real_rows(&[&[1.0, 1.0], &[0.0, 1.0]]);
    let out = expansion_pipeline(&g, 2, &[t], &lattice, &PipelineOptions::for_rank(1))?;

    for (k, e) in out.expansions.iter().enumerate() {
        println!("component {k}:");
        for term in &e.terms {
            println!("  {:.6} tau^{:?} e(({:?} + {:.3}) tau)", term.a, term.t, term.v, term.u[0].re);
        }
    }
    let tau = [Complex64::new(0.3, 1.1)];
    let direct = g(&tau)?;
    for (k, e) in out.expansions.iter().enumerate() {
        println!("component {k} at tau: expansion {:.12}, direct {:.12}", evaluate_pfe(e, &tau), direct[k]);
    }
    println!(
        "law {:e}, cocycle {:e}, periodicity {:e}",
        out.law_residual, out.cocycle_residual, out.periodicity_residual
    );
    Ok(())
}
