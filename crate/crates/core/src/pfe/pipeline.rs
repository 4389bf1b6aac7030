//! Polynomial Fourier expansions of a column satisfying a translation law.
//!
//! Given `g(tau + v_i) = A_i g(tau)`, the translation matrices are put in
//! block-triangular form `A_i = T B_i T^-1`. On block `j` the coordinates
//! `l_j = (T^-1 g)_j` pick up `B_ij = lambda_ij S_ij^-1` under translation, so
//! `h_j = P_j l_j` is twisted-periodic with multipliers `lambda_ij`. Each
//! `h_j` is expanded by [`extract_components_scaled`] and `g = sum_j T_j P_j^-1 h_j`
//! is multiplied out symbolically.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::lattice::TranslationLattice;
use crate::linalg::{sbtsd, CMatrix, SbtsdOptions, SbtsdResult};
use crate::modfun::sample_points;

use super::extract::{extract_components_scaled, ExtractOptions, VectorFn};
use super::poly::build_P;
use super::{canonicalize, PfeTerm, PolynomialFourierExpansion};

const LAW_SEED: u64 = 0x5eed_0002;
const COCYCLE_SEED: u64 = 0x5eed_0003;

#[derive(Clone, Debug)]
pub struct PipelineOptions {
    pub extract: ExtractOptions,
    pub sbtsd: SbtsdOptions,
    /// Largest relative violation of the translation law accepted.
    pub tol_law: f64,
    /// Terms below this fraction of the largest coefficient of their
    /// component are dropped.
    pub rel_floor: f64,
}

impl PipelineOptions {
    pub fn for_rank(n: usize) -> Self {
        PipelineOptions {
            extract: ExtractOptions::for_rank(n),
            sbtsd: SbtsdOptions::default(),
            tol_law: 1e-8,
            rel_floor: 1e-10,
        }
    }
}

#[derive(Clone, Debug)]
pub struct PipelineOutput {
    /// One canonical expansion per component of the column.
    pub expansions: Vec<PolynomialFourierExpansion>,
    pub decomposition: SbtsdResult,
    /// Relative residual of the translation law at the probe points.
    pub law_residual: f64,
    /// `max |P(tau + v_t) - P(tau) S_t|` over blocks and probe points.
    pub cocycle_residual: f64,
    /// Largest relative residual of `h(tau + v_t) = lambda_t h(tau)`.
    pub periodicity_residual: f64,
    pub warnings: Vec<String>,
}

fn vec_norm(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Relative residual of `g(tau + v_i) = A_i g(tau)` at seeded probe points.
pub fn translation_law_residual(
    column: &VectorFn,
    translations: &[CMatrix],
    lattice: &TranslationLattice,
) -> Result<f64> {
    let n = lattice.rank();
    let mut worst: f64 = 0.0;
    for tau in sample_points(n, 5, LAW_SEED) {
        let base = column(&tau)?;
        let base_vec = CMatrix::from_column_slice(base.len(), 1, &base);
        for (i, a) in translations.iter().enumerate() {
            let v = lattice.basis_vector(i);
            let shifted: Vec<Complex64> = tau.iter().zip(&v).map(|(z, x)| z + x).collect();
            let moved = column(&shifted)?;
            let predicted = a * &base_vec;
            let diff: Vec<Complex64> = moved.iter().zip(predicted.iter()).map(|(x, y)| x - y).collect();
            let scale = vec_norm(&moved).max(vec_norm(&base)).max(f64::MIN_POSITIVE);
            let d = vec_norm(&diff);
            if d > 0.0 {
                worst = worst.max(d / scale);
            }
        }
    }
    Ok(worst)
}

/// Expands every component of `column`, an `r`-vector valued function with
/// `column(tau + v_i) = translations[i] * column(tau)`.
pub fn expansion_pipeline(
    column: &VectorFn,
    r: usize,
    translations: &[CMatrix],
    lattice: &TranslationLattice,
    opts: &PipelineOptions,
) -> Result<PipelineOutput> {
    let n = lattice.rank();
    if translations.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "{} translation matrices for a rank-{n} lattice",
            translations.len()
        )));
    }
    if translations.iter().any(|a| a.nrows() != r || a.ncols() != r) {
        return Err(Error::DimensionMismatch(format!("translation matrices must be {r}x{r}")));
    }
    let law_residual = translation_law_residual(column, translations, lattice)?;
    if law_residual > opts.tol_law {
        return Err(Error::TranslationLaw(law_residual));
    }
    let dec = sbtsd(translations, &opts.sbtsd)?;
    let offsets = dec.block_offsets();
    let probes = sample_points(n, 10, COCYCLE_SEED);

    let mut per_component: Vec<Vec<PfeTerm>> = vec![Vec::new(); r];
    let mut cocycle_residual: f64 = 0.0;
    let mut periodicity_residual: f64 = 0.0;
    let mut warnings = Vec::new();
    for (j, (&size, &start)) in dec.block_sizes.iter().zip(&offsets).enumerate() {
        let s_blocks: Vec<CMatrix> = dec.unipotent.iter().map(|s| dec.block_of(s, j)).collect();
        let p = build_P(&s_blocks, lattice.basis_matrix())?;
        cocycle_residual =
            cocycle_residual.max(p.cocycle_residual(&s_blocks, lattice.basis_matrix(), &probes));
        let w = dec.change_of_basis_inverse.rows(start, size).into_owned();
        // h is formed with cancellation, so it is judged against |P| |W| |g|
        let w_norm = w.norm();
        let h = |tau: &[Complex64]| -> Result<(Vec<Complex64>, f64)> {
            let g = column(tau)?;
            let pt = p.eval(tau);
            let l = &w * CMatrix::from_column_slice(r, 1, &g);
            let scale = pt.norm() * w_norm * vec_norm(&g);
            Ok(((pt * l).iter().copied().collect(), scale))
        };
        let mu = dec.block_exponents(j);
        let extracted = extract_components_scaled(&h, size, lattice, &mu, &opts.extract)?;
        let shift = extracted[0].shift.clone();
        for ex in &extracted {
            periodicity_residual = periodicity_residual.max(ex.periodicity_residual);
            warnings.extend(ex.warnings.iter().map(|w| format!("block {j}: {w}")));
        }
        let pinv = p.symbolic_inverse();
        for (k, terms) in per_component.iter_mut().enumerate() {
            for a in 0..size {
                let tk = dec.change_of_basis[(k, start + a)];
                if tk == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for (b, ex) in extracted.iter().enumerate() {
                    for (t, c) in pinv.entry(a, b).terms() {
                        for (v, coeff) in &ex.coefficients {
                            if coeff.norm() == 0.0 {
                                continue;
                            }
                            terms.push(PfeTerm {
                                u: shift.clone(),
                                t: t.clone(),
                                v: v.coords().to_vec(),
                                a: tk * c * coeff,
                            });
                        }
                    }
                }
            }
        }
    }
    let expansions = per_component
        .into_iter()
        .map(|terms| {
            let mut e = canonicalize(&PolynomialFourierExpansion::new(lattice, terms));
            let peak = e.terms.iter().fold(0.0f64, |m, t| m.max(t.a.norm()));
            e.terms.retain(|t| t.a.norm() > opts.rel_floor * peak);
            e
        })
        .collect();
    Ok(PipelineOutput {
        expansions,
        decomposition: dec,
        law_residual,
        cocycle_residual,
        periodicity_residual,
        warnings,
    })
}
