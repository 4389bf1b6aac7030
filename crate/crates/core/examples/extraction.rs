//! Twisted Fourier coefficients of a function over Q(sqrt 5).
//!
//! `cargo run --example extraction`

use std::f64::consts::PI;

use hmvf::field::{make_field, FieldSpec};
use hmvf::lattice::{translation_lattice, SubgroupSpec};
use hmvf::pfe::{twisted_fourier_extract, ExtractOptions};
use num_complex::Complex64;

fn main() -> hmvf::Result<()> {
    let field = make_field(FieldSpec::Quadratic(5))?;
    let lattice = translation_lattice(&field, SubgroupSpec::Full)?;

    // f(tau + v_i) = exp(2 pi i mu_i) f(tau)
    let mu = [Complex64::new(0.125, 0.0), Complex64::new(0.5, 0.0)];
    let u = lattice.from_basis_pairings(&mu);
    let term = |coords: &[i64]| {
        let v = lattice.dual_vector(coords).real().to_vec();
        let freq: Vec<f64> = v.iter().zip(&u).map(|(a, b)| a + b.re).collect();
        move |tau: &[Complex64]| {
            let phase: Complex64 = freq.iter().zip(tau).map(|(w, z)| z * *w).sum();
            (Complex64::new(0.0, 2.0 * PI) * phase).exp()
        }
    };
    let (f1, f2) = (term(&[0, 1]), term(&[-1, 2]));
    let f = |tau: &[Complex64]| -> hmvf::Result<Complex64> { Ok(f1(tau) * 3.0 - f2(tau) * 2.0) };

    let ex = twisted_fourier_extract(&f, &lattice, &mu, &ExtractOptions::for_rank(2))?;
    for (v, a) in ex.coefficients.iter().filter(|(_, a)| a.norm() > 1e-8) {
        println!("v = {:?}: a = {a:.10}", v.coords());
    }
    println!("periodicity residual {:e}", ex.periodicity_residual);
    Ok(())
}
