//! Weak derivatives `d_{i,u} g(tau) = g(tau + v_i) / lambda_{i,u} - g(tau)`
//! with `lambda_{i,u} = exp(2 pi i u . v_i)`.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::lattice::TranslationLattice;

use super::{canonicalize, PfeTerm, PolynomialFourierExpansion};

fn binomial(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

fn twist(x: Complex64) -> Complex64 {
    (Complex64::new(0.0, 2.0 * PI) * x).exp()
}

/// `d_{i,u}` applied term by term; the result is canonical.
///
/// A term with shift `u'` is multiplied by `exp(2 pi i (u' - u) . v_i)` and
/// its monomial `(tau + v_i)^t` is expanded binomially; the integral pairing
/// of `v` with `v_i` contributes nothing.
pub fn weak_derivative(
    e: &PolynomialFourierExpansion,
    direction: usize,
    u: &[Complex64],
) -> Result<PolynomialFourierExpansion> {
    let lattice = &e.lattice;
    let n = lattice.rank();
    if direction >= n || u.len() != n {
        return Err(Error::DimensionMismatch("direction or shift out of range".into()));
    }
    let vi = lattice.basis_vector(direction);
    let base = lattice.basis_pairings(u)[direction];
    let mut terms = Vec::new();
    for term in &e.terms {
        let ratio = twist(lattice.basis_pairings(&term.u)[direction] - base);
        // odometer over s <= t
        let mut s = vec![0u32; n];
        loop {
            let factor: f64 = (0..n)
                .map(|j| binomial(term.t[j], s[j]) * vi[j].powi((term.t[j] - s[j]) as i32))
                .product();
            if factor != 0.0 {
                terms.push(PfeTerm {
                    u: term.u.clone(),
                    t: s.clone(),
                    v: term.v.clone(),
                    a: term.a * ratio * factor,
                });
            }
            let mut k = n;
            let done = loop {
                if k == 0 {
                    break true;
                }
                k -= 1;
                if s[k] < term.t[k] {
                    s[k] += 1;
                    for x in s.iter_mut().skip(k + 1) {
                        *x = 0;
                    }
                    break false;
                }
            };
            if done {
                break;
            }
        }
        terms.push(PfeTerm {
            a: -term.a,
            ..term.clone()
        });
    }
    Ok(canonicalize(&PolynomialFourierExpansion::new(lattice, terms)))
}

/// `d_{i,u}` on a function handle.
pub fn weak_derivative_fn<F>(
    f: F,
    lattice: &TranslationLattice,
    direction: usize,
    u: &[Complex64],
) -> Result<impl Fn(&[Complex64]) -> Result<Complex64> + Send + Sync>
where
    F: Fn(&[Complex64]) -> Result<Complex64> + Send + Sync,
{
    let n = lattice.rank();
    if direction >= n || u.len() != n {
        return Err(Error::DimensionMismatch("direction or shift out of range".into()));
    }
    let vi = lattice.basis_vector(direction);
    let lambda = twist(lattice.basis_pairings(u)[direction]);
    Ok(move |tau: &[Complex64]| {
        let shifted: Vec<Complex64> = tau.iter().zip(&vi).map(|(z, x)| z + x).collect();
        Ok(f(&shifted)? / lambda - f(tau)?)
    })
}

/// `d'_{i,u} g(tau) = g(tau + h_i e_i) / exp(2 pi i u_i h_i) - g(tau)`.
///
/// Needs an axis period `h_i`, which exists only for `F = Q`.
pub fn axis_weak_derivative_fn<F>(
    f: F,
    lattice: &TranslationLattice,
    axis: usize,
    u: &[Complex64],
) -> Result<impl Fn(&[Complex64]) -> Result<Complex64> + Send + Sync>
where
    F: Fn(&[Complex64]) -> Result<Complex64> + Send + Sync,
{
    let periods = lattice.axis_periods();
    let h = periods
        .get(axis)
        .copied()
        .flatten()
        .ok_or_else(|| Error::Assumption(format!("lattice has no period along axis {axis}")))?
        as f64;
    if u.len() != lattice.rank() {
        return Err(Error::DimensionMismatch("shift length".into()));
    }
    let lambda = twist(u[axis] * h);
    Ok(move |tau: &[Complex64]| {
        let mut shifted = tau.to_vec();
        shifted[axis] += h;
        Ok(f(&shifted)? / lambda - f(tau)?)
    })
}
