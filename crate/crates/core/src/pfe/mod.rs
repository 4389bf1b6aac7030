//! Polynomial Fourier expansions
//!
//! `g(tau) = sum a * tau^t * exp(2 pi i (v + u) . tau)`
//!
//! over finitely many shifts `u`, multidegrees `t` and dual vectors `v`.

pub mod derivative;
pub mod extract;
pub mod pipeline;
pub mod poly;

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{LatticeJson, TranslationLattice};
use crate::serial::{complex_from_json, complex_to_json, ComplexJson};

pub use derivative::{weak_derivative, weak_derivative_fn, axis_weak_derivative_fn};
pub use extract::{twisted_fourier_extract, ExtractOptions, Extraction};
pub use pipeline::{expansion_pipeline, PipelineOptions, PipelineOutput};
pub use poly::{build_P, Poly, PolyMatrix, PolyMatrixP};

/// Coefficients at or below this modulus are dropped by [`canonicalize`].
pub const DROP_TOL: f64 = 1e-12;
/// Accepted negative slack in the holomorphy inequality.
pub const HOLOMORPHY_TOL: f64 = 1e-12;
/// Grid on which `u . v_i` is snapped for the canonical representative.
const U_GRID: f64 = (1u64 << 40) as f64;

/// One term `a * tau^t * exp(2 pi i (v + u) . tau)`.
#[derive(Clone, Debug, PartialEq)]
pub struct PfeTerm {
    pub u: Vec<Complex64>,
    pub t: Vec<u32>,
    /// Dual-basis coordinates of `v`.
    pub v: Vec<i64>,
    pub a: Complex64,
}

/// Total frequency `v + u` of a term as a real-space vector.
pub fn frequency(lattice: &TranslationLattice, term: &PfeTerm) -> Vec<Complex64> {
    let v = lattice.dual_vector(&term.v);
    v.real().iter().zip(&term.u).map(|(&x, &u)| u + x).collect()
}

/// `a * tau^t * exp(2 pi i (v + u) . tau)`.
pub fn evaluate_term(lattice: &TranslationLattice, term: &PfeTerm, tau: &[Complex64]) -> Complex64 {
    let freq = frequency(lattice, term);
    let phase: Complex64 = freq.iter().zip(tau).map(|(f, z)| f * z).sum();
    term.a * poly::monomial(tau, &term.t) * (Complex64::new(0.0, 2.0 * PI) * phase).exp()
}

#[derive(Clone, Debug)]
pub struct PolynomialFourierExpansion {
    pub lattice: TranslationLattice,
    pub terms: Vec<PfeTerm>,
    pub canonical: bool,
}

impl PolynomialFourierExpansion {
    pub fn new(lattice: &TranslationLattice, terms: Vec<PfeTerm>) -> Self {
        PolynomialFourierExpansion {
            lattice: lattice.clone(),
            terms,
            canonical: false,
        }
    }

    pub fn empty(lattice: &TranslationLattice) -> Self {
        Self::new(lattice, Vec::new())
    }

    pub fn evaluate(&self, tau: &[Complex64]) -> Complex64 {
        evaluate_pfe(self, tau)
    }

    /// Distinct canonical shifts `u`, in canonical order.
    pub fn shifts(&self) -> Vec<Vec<Complex64>> {
        let mut out: Vec<Vec<Complex64>> = Vec::new();
        for t in &self.terms {
            if !out.iter().any(|u| u == &t.u) {
                out.push(t.u.clone());
            }
        }
        out
    }

    pub fn to_json(&self) -> PfeJson {
        PfeJson {
            lattice: self.lattice.to_json(),
            terms: self
                .terms
                .iter()
                .map(|t| TermJson {
                    u: t.u.iter().map(|&z| complex_to_json(z)).collect(),
                    t: t.t.clone(),
                    v: t.v.clone(),
                    a: complex_to_json(t.a),
                })
                .collect(),
            canonical: self.canonical,
        }
    }

    pub fn from_json(json: &PfeJson) -> Result<Self> {
        let lattice = TranslationLattice::from_json(&json.lattice)?;
        let n = lattice.rank();
        let terms = json
            .terms
            .iter()
            .map(|t| {
                if t.u.len() != n || t.t.len() != n || t.v.len() != n {
                    return Err(Error::InvalidInput(format!(
                        "expansion term has wrong length for rank {n}"
                    )));
                }
                Ok(PfeTerm {
                    u: t.u.iter().map(complex_from_json).collect::<Result<_>>()?,
                    t: t.t.clone(),
                    v: t.v.clone(),
                    a: complex_from_json(&t.a)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(PolynomialFourierExpansion {
            lattice,
            terms,
            canonical: json.canonical,
        })
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(&self.to_json()).expect("expansion serializes")
    }
}

/// `sum a * tau^t * exp(2 pi i (v + u) . tau)`.
pub fn evaluate_pfe(e: &PolynomialFourierExpansion, tau: &[Complex64]) -> Complex64 {
    e.terms
        .iter()
        .map(|t| evaluate_term(&e.lattice, t, tau))
        .sum()
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
struct CanonicalKey {
    re: Vec<i64>,
    im: Vec<i64>,
    t: Vec<u32>,
    v: Vec<i64>,
}

/// Canonical form with the default drop threshold [`DROP_TOL`].
pub fn canonicalize(e: &PolynomialFourierExpansion) -> PolynomialFourierExpansion {
    canonicalize_with(e, DROP_TOL)
}

/// Reduces every `u` modulo the dual lattice so that the real parts of the
/// pairings `u . v_i` lie in `[0, 1)`, moves the integer shift into `v`,
/// merges equal `(u, t, v)`, drops coefficients with modulus `<= drop_tol`
/// and sorts.
///
/// Pairings are snapped to a `2^-40` grid, so representatives that differ by
/// rounding noise merge and the output is a deterministic function of the
/// terms, independent of their order.
pub fn canonicalize_with(e: &PolynomialFourierExpansion, drop_tol: f64) -> PolynomialFourierExpansion {
    let lattice = &e.lattice;
    let n = lattice.rank();
    let grid = U_GRID as i64;
    let mut groups: BTreeMap<CanonicalKey, Vec<Complex64>> = BTreeMap::new();
    for term in &e.terms {
        let w = lattice.basis_pairings(&term.u);
        let mut re = Vec::with_capacity(n);
        let mut im = Vec::with_capacity(n);
        let mut v = term.v.clone();
        for i in 0..n {
            let q = (w[i].re * U_GRID).round() as i64;
            let shift = q.div_euclid(grid);
            re.push(q - shift * grid);
            im.push((w[i].im * U_GRID).round() as i64);
            v[i] += shift;
        }
        groups
            .entry(CanonicalKey {
                re,
                im,
                t: term.t.clone(),
                v,
            })
            .or_default()
            .push(term.a);
    }
    let mut terms = Vec::with_capacity(groups.len());
    for (key, mut parts) in groups {
        parts.sort_by(|x, y| match x.re.total_cmp(&y.re) {
            Ordering::Equal => x.im.total_cmp(&y.im),
            o => o,
        });
        let a: Complex64 = parts.iter().sum();
        if a.norm() <= drop_tol {
            continue;
        }
        let w: Vec<Complex64> = key
            .re
            .iter()
            .zip(&key.im)
            .map(|(&r, &i)| Complex64::new(r as f64 / U_GRID, i as f64 / U_GRID))
            .collect();
        terms.push(PfeTerm {
            u: lattice.from_basis_pairings(&w),
            t: key.t,
            v: key.v,
            a,
        });
    }
    PolynomialFourierExpansion {
        lattice: lattice.clone(),
        terms,
        canonical: true,
    }
}

/// Whether every term satisfies `v_k + Re(u_k) >= 0` (up to
/// [`HOLOMORPHY_TOL`]), with the violating terms.
pub fn holomorphic_at_infinity(e: &PolynomialFourierExpansion) -> (bool, Vec<PfeTerm>) {
    let violating: Vec<PfeTerm> = e
        .terms
        .iter()
        .filter(|t| t.a.norm() > 0.0)
        .filter(|t| frequency(&e.lattice, t).iter().any(|f| f.re < -HOLOMORPHY_TOL))
        .cloned()
        .collect();
    (violating.is_empty(), violating)
}

/// On-disk form of an expansion.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PfeJson {
    pub lattice: LatticeJson,
    pub terms: Vec<TermJson>,
    pub canonical: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermJson {
    pub u: Vec<ComplexJson>,
    pub t: Vec<u32>,
    pub v: Vec<i64>,
    pub a: ComplexJson,
}
