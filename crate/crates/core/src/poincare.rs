//! Truncated Poincare series for unitary representations.
//!
//! `G(tau) = sum_M rho(M)^-1 diag(exp(2 pi i e_q . M tau)) J_k(M, tau)^-1`
//!
//! over cosets `Lambda \ Gamma_F`, where `rho` is written in a unitary basis
//! diagonalizing the translations, column `q` belongs to block `j` and
//! `e_q = nu_j + mu_j M^-1` combines the dual shift `nu_j` with the block's
//! translation exponents.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::field::{Field, FieldElement};
use crate::lattice::{translation_lattice, SubgroupSpec, TranslationLattice};
use crate::linalg::{max_entry_norm, principal_exponent, spectral_norm, unitary_simdiag, CMatrix};
use crate::modfun::{int_pow, Sl2, WeightMatrix};
use crate::rep::Representation;

/// Cosets per parallel work item.
const CHUNK: usize = 1024;
/// Terms larger than this signal a point too close to the real axis.
const OVERFLOW_GUARD: f64 = 1e12;

/// All `x` in `O_F` with `max_j |sigma_j(x)| <= bound`, sorted.
pub fn elements_in_box(field: &Field, bound: f64) -> Vec<FieldElement> {
    if !(bound >= 0.0) {
        return Vec::new();
    }
    let slack = 1e-12 * bound.max(1.0);
    let b = bound + slack;
    let mut out = Vec::new();
    if field.is_rational() {
        let m = b.floor() as i64;
        return (-m..=m).map(FieldElement::integer).collect();
    }
    let w = field.omega_embeddings();
    let spread = (w[0] - w[1]).abs();
    let bmax = (2.0 * b / spread).floor() as i64;
    for bb in -bmax..=bmax {
        let lo = w.iter().map(|s| -b - bb as f64 * s).fold(f64::MIN, f64::max);
        let hi = w.iter().map(|s| b - bb as f64 * s).fold(f64::MAX, f64::min);
        if lo > hi {
            continue;
        }
        for a in lo.ceil() as i64..=hi.floor() as i64 {
            let x = FieldElement::new(a, bb);
            if field.embed(x).iter().all(|s| s.abs() <= b) {
                out.push(x);
            }
        }
    }
    out.sort();
    out
}

/// Completes a coprime bottom row `(c, d)` to a matrix of `SL_2(O_F)`.
///
/// `a` is reduced modulo `c` so that `a / c = p + q w` with `p, q` in
/// `[0, 1)`; for `c = 0` the matrix is `diag(d^-1, d)`.
pub fn complete_row(field: &Field, c: FieldElement, d: FieldElement) -> Result<Sl2> {
    if c.is_zero() {
        let a = field
            .unit_inverse(d)
            .ok_or_else(|| Error::InvalidInput("row (0, d) with d not a unit".into()))?;
        return Sl2::new(field, a, FieldElement::ZERO, c, d);
    }
    let (g, _, t) = field.euclid_gcd(c, d)?;
    let ginv = field
        .unit_inverse(g)
        .ok_or_else(|| Error::InvalidInput("bottom row is not coprime".into()))?;
    // s c + t d = 1 after scaling, so a = t, b = -s
    let a = field.mul(t, ginv);
    let n = field.norm_form(c);
    let (p, q) = field.div_coordinates(a, c);
    let (p, q, n) = if n < 0 { (-p, -q, -n) } else { (p, q, n) };
    let k = FieldElement::new(p.div_euclid(n) as i64, q.div_euclid(n) as i64);
    let a = a - field.mul(k, c);
    let b = field
        .exact_div(field.mul(a, d) - FieldElement::ONE, c)
        .ok_or_else(|| Error::Numerical("completion is not integral".into()))?;
    Sl2::new(field, a, b, c, d)
}

/// One representative per coset `Lambda \ Gamma_F` whose bottom row lies in
/// the embedding box of size `bound`, in lexicographic order of `(c, d)`.
pub fn enumerate_cosets(field: &Field, bound: f64) -> Result<Vec<Sl2>> {
    let elems = elements_in_box(field, bound);
    let mut out = Vec::new();
    for &c in &elems {
        for &d in &elems {
            if c.is_zero() && d.is_zero() {
                continue;
            }
            let coprime = if c.is_zero() {
                field.is_unit(d)
            } else if d.is_zero() {
                field.is_unit(c)
            } else {
                field.is_unit(field.euclid_gcd(c, d)?.0)
            };
            if coprime {
                out.push(complete_row(field, c, d)?);
            }
        }
    }
    Ok(out)
}

/// Validated data of a Poincare series.
#[derive(Clone, Debug)]
pub struct PoincareSpec {
    field: Field,
    lattice: TranslationLattice,
    rep: Representation,
    /// Unitary `T` diagonalizing `rho(T_i)`.
    basis: CMatrix,
    block_sizes: Vec<usize>,
    /// `mu[j][i]`, real parts in `[0, 1)`.
    mu: Vec<Vec<f64>>,
    /// Dual coordinates of `nu_j`.
    nu: Vec<Vec<i64>>,
    weight: WeightMatrix,
    eisenstein: bool,
    /// `e_q` for every column.
    exponents: Vec<Vec<f64>>,
}

impl PoincareSpec {
    /// `nu` holds one row of dual coordinates per block, or a single row used
    /// for every block; `weight` holds `r` rows or a single row used for
    /// every column. In Eisenstein mode `nu` is ignored and set to zero.
    pub fn new(
        rep: &Representation,
        weight: &WeightMatrix,
        nu: &[Vec<i64>],
        eisenstein: bool,
    ) -> Result<Self> {
        if !rep.is_unitary_kind() {
            return Err(Error::Assumption(
                "Poincare series need a representation with unitary images".into(),
            ));
        }
        let field = rep.field().clone();
        let n = field.degree();
        let r = rep.dim();
        let lattice = translation_lattice(&field, SubgroupSpec::Full)?;
        let translations = rep.translation_images(&lattice)?;
        let sd = unitary_simdiag(&translations)?;
        let s_image = sd.basis.adjoint() * rep.eval(&Sl2::s())? * &sd.basis;
        let s_norm = spectral_norm(&s_image);
        if (s_norm - 1.0).abs() > 1e-9 {
            return Err(Error::NotUnitary(s_norm - 1.0));
        }

        let weight = match weight.c() {
            c if c == r => weight.clone(),
            1 => WeightMatrix::uniform(&weight.rows()[0], r)?,
            c => {
                return Err(Error::DimensionMismatch(format!(
                    "weight has {c} rows, representation has dimension {r}"
                )))
            }
        };
        if weight.n() != n {
            return Err(Error::DimensionMismatch("weight rows must have one entry per embedding".into()));
        }
        weight.check_poincare()?;

        let t = sd.block_sizes.len();
        let mut starts = Vec::with_capacity(t);
        let mut acc = 0;
        for &m in &sd.block_sizes {
            starts.push(acc);
            acc += m;
        }
        let mu: Vec<Vec<f64>> = starts
            .iter()
            .map(|&s| (0..n).map(|i| principal_exponent(sd.diagonals[i][s]).re).collect())
            .collect();

        let nu: Vec<Vec<i64>> = if eisenstein {
            vec![vec![0; n]; t]
        } else {
            let rows = match nu.len() {
                l if l == t => nu.to_vec(),
                1 => vec![nu[0].clone(); t],
                l => {
                    return Err(Error::DimensionMismatch(format!(
                        "{l} nu rows for {t} blocks"
                    )))
                }
            };
            for row in &rows {
                if row.len() != n {
                    return Err(Error::DimensionMismatch("nu rows need one entry per embedding".into()));
                }
                let real = lattice.dual_vector(row);
                if real.real().iter().any(|&x| x <= 0.0) {
                    return Err(Error::Assumption(format!(
                        "nu = {row:?} is not totally positive"
                    )));
                }
            }
            rows
        };

        let mut exponents = Vec::with_capacity(r);
        for (j, &m) in sd.block_sizes.iter().enumerate() {
            let shift = lattice.from_basis_pairings(&mu[j]);
            let nu_real = lattice.dual_vector(&nu[j]);
            let e: Vec<f64> = nu_real.real().iter().zip(&shift).map(|(a, b)| a + b).collect();
            for _ in 0..m {
                exponents.push(e.clone());
            }
        }
        Ok(PoincareSpec {
            field,
            lattice,
            rep: rep.clone(),
            basis: sd.basis,
            block_sizes: sd.block_sizes,
            mu,
            nu,
            weight,
            eisenstein,
            exponents,
        })
    }

    pub fn field(&self) -> &Field {
        &self.field
    }

    pub fn lattice(&self) -> &TranslationLattice {
        &self.lattice
    }

    pub fn representation(&self) -> &Representation {
        &self.rep
    }

    pub fn basis(&self) -> &CMatrix {
        &self.basis
    }

    pub fn block_sizes(&self) -> &[usize] {
        &self.block_sizes
    }

    pub fn mu(&self) -> &[Vec<f64>] {
        &self.mu
    }

    pub fn nu(&self) -> &[Vec<i64>] {
        &self.nu
    }

    pub fn weight(&self) -> &WeightMatrix {
        &self.weight
    }

    pub fn is_eisenstein(&self) -> bool {
        self.eisenstein
    }

    /// `e_q = nu_j + mu_j M^-1` for every column `q`.
    pub fn column_exponents(&self) -> &[Vec<f64>] {
        &self.exponents
    }

    /// `rho(g)` in the diagonalizing basis.
    pub fn rho_in_basis(&self, g: &Sl2) -> Result<CMatrix> {
        Ok(self.basis.adjoint() * self.rep.eval(g)? * &self.basis)
    }

    /// Single summand for the representative `m`, in the diagonalizing basis.
    pub fn term(&self, m: &Sl2, tau: &[Complex64]) -> Result<CMatrix> {
        let coset = CosetData::new(self, *m);
        let r = self.rep.dim();
        let mut acc = vec![Complex64::new(0.0, 0.0); r * r];
        accumulate(self, &coset, tau, &mut acc)?;
        Ok(self.basis.adjoint() * CMatrix::from_row_slice(r, r, &acc))
    }
}

/// Per-coset data independent of `tau`.
#[derive(Clone, Debug)]
struct CosetData {
    emb: Vec<[f64; 4]>,
    perm: Vec<u32>,
}

impl CosetData {
    fn new(spec: &PoincareSpec, m: Sl2) -> Self {
        let perm = spec
            .rep
            .permutation(&m)
            .expect("unitary kinds are permutations")
            .into_iter()
            .map(|p| p as u32)
            .collect();
        CosetData {
            emb: m.embedded(&spec.field),
            perm,
        }
    }
}

/// Adds `rho(M)^T (T D J^-1)` row-permuted into `acc` (row-major `r x r`).
fn accumulate(spec: &PoincareSpec, coset: &CosetData, tau: &[Complex64], acc: &mut [Complex64]) -> Result<()> {
    let r = spec.rep.dim();
    let n = tau.len();
    let mut moved = [Complex64::new(0.0, 0.0); 2];
    let mut cz = [Complex64::new(0.0, 0.0); 2];
    for j in 0..n {
        let e = &coset.emb[j];
        cz[j] = tau[j] * e[2] + e[3];
        moved[j] = (tau[j] * e[0] + e[1]) / cz[j];
    }
    let mut column = vec![Complex64::new(0.0, 0.0); r];
    let mut last_weight: Option<(&Vec<i64>, Complex64)> = None;
    for (q, slot) in column.iter_mut().enumerate() {
        let row = &spec.weight.rows()[q];
        let jinv = match last_weight {
            Some((w, v)) if w == row => v,
            _ => {
                let v = (0..n).fold(Complex64::new(1.0, 0.0), |a, j| a * int_pow(cz[j], -row[j]));
                last_weight = Some((row, v));
                v
            }
        };
        let phase: Complex64 = spec.exponents[q]
            .iter()
            .zip(&moved[..n])
            .map(|(e, z)| z * *e)
            .sum();
        let value = (Complex64::new(0.0, 2.0 * PI) * phase).exp() * jinv;
        if !(value.norm() <= OVERFLOW_GUARD) {
            return Err(Error::Numerical(format!(
                "Poincare term of size {:e} exceeds the overflow guard",
                value.norm()
            )));
        }
        *slot = value;
    }
    for i in 0..r {
        let src = coset.perm[i] as usize;
        for q in 0..r {
            acc[i * r + q] += spec.basis[(src, q)] * column[q];
        }
    }
    Ok(())
}

/// A Poincare series truncated to the cosets in a box.
#[derive(Clone, Debug)]
pub struct TruncatedSeries {
    spec: PoincareSpec,
    bound: f64,
    cosets: Vec<CosetData>,
    representatives: Vec<Sl2>,
}

impl TruncatedSeries {
    pub fn new(spec: &PoincareSpec, bound: f64) -> Result<Self> {
        if !(bound > 0.0 && bound.is_finite()) {
            return Err(Error::InvalidInput(format!("truncation bound {bound} must be positive")));
        }
        let representatives = enumerate_cosets(&spec.field, bound)?;
        let cosets = representatives
            .par_iter()
            .map(|m| CosetData::new(spec, *m))
            .collect();
        Ok(TruncatedSeries {
            spec: spec.clone(),
            bound,
            cosets,
            representatives,
        })
    }

    pub fn spec(&self) -> &PoincareSpec {
        &self.spec
    }

    pub fn bound(&self) -> f64 {
        self.bound
    }

    pub fn coset_count(&self) -> usize {
        self.cosets.len()
    }

    pub fn representatives(&self) -> &[Sl2] {
        &self.representatives
    }

    /// Value in the diagonalizing basis. Chunks of cosets are summed in
    /// parallel and combined in enumeration order, so the result does not
    /// depend on the number of threads.
    pub fn eval(&self, tau: &[Complex64]) -> Result<CMatrix> {
        let n = self.spec.field.degree();
        if tau.len() != n || tau.iter().any(|z| !(z.im > 0.0)) {
            return Err(Error::InvalidInput("point is not in the upper half-space".into()));
        }
        let r = self.spec.rep.dim();
        let partials: Vec<Result<Vec<Complex64>>> = self
            .cosets
            .par_chunks(CHUNK)
            .map(|chunk| {
                let mut acc = vec![Complex64::new(0.0, 0.0); r * r];
                for coset in chunk {
                    accumulate(&self.spec, coset, tau, &mut acc)?;
                }
                Ok(acc)
            })
            .collect();
        let mut total = vec![Complex64::new(0.0, 0.0); r * r];
        for part in partials {
            for (t, p) in total.iter_mut().zip(part?) {
                *t += p;
            }
        }
        Ok(self.spec.basis.adjoint() * CMatrix::from_row_slice(r, r, &total))
    }

    /// `T G(tau)`, the value with rows in the original basis.
    pub fn eval_original_basis(&self, tau: &[Complex64]) -> Result<CMatrix> {
        Ok(&self.spec.basis * self.eval(tau)?)
    }
}

/// `G` at bound `bound`.
pub fn eval_poincare(spec: &PoincareSpec, bound: f64, tau: &[Complex64]) -> Result<CMatrix> {
    TruncatedSeries::new(spec, bound)?.eval(tau)
}

#[derive(Clone, Debug)]
pub struct ConvergenceRow {
    pub bound: f64,
    pub value: CMatrix,
    /// Spectral norm of the change from the previous bound.
    pub delta: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct ConvergenceReport {
    pub rows: Vec<ConvergenceRow>,
    /// Some delta exceeded its predecessor.
    pub non_monotone: bool,
}

/// Values at increasing bounds and the successive differences.
pub fn convergence_diagnostic(spec: &PoincareSpec, tau: &[Complex64], bounds: &[f64]) -> Result<ConvergenceReport> {
    if bounds.len() < 2 || bounds.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::InvalidInput("need at least two ascending bounds".into()));
    }
    let mut rows: Vec<ConvergenceRow> = Vec::with_capacity(bounds.len());
    for &b in bounds {
        let value = eval_poincare(spec, b, tau)?;
        let delta = rows.last().map(|prev| spectral_norm(&(&value - &prev.value)));
        rows.push(ConvergenceRow { bound: b, value, delta });
    }
    let deltas: Vec<f64> = rows.iter().filter_map(|r| r.delta).collect();
    let non_monotone = deltas.windows(2).any(|w| w[1] > w[0]);
    Ok(ConvergenceReport { rows, non_monotone })
}

/// Direction of approach to the cusp.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CuspDirection {
    /// `tau = i lambda (1, ..., 1)`.
    Diagonal,
    /// `tau = i lambda e_k`, only meaningful for `n = 1`.
    Axis(usize),
}

/// Largest entry modulus of `G(i lambda (1, ..., 1))` for each `lambda`.
pub fn cusp_limit_check(
    spec: &PoincareSpec,
    bound: f64,
    direction: CuspDirection,
    lambdas: &[f64],
) -> Result<Vec<f64>> {
    if spec.eisenstein {
        return Err(Error::Assumption(
            "cusp limit is not zero for the Eisenstein extension".into(),
        ));
    }
    let n = spec.field.degree();
    if let CuspDirection::Axis(k) = direction {
        if n != 1 || k != 0 {
            return Err(Error::InvalidInput(
                "single-axis cusp approach is only defined for n = 1".into(),
            ));
        }
    }
    if lambdas.iter().any(|&l| !(l >= 1.0)) || lambdas.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::InvalidInput("lambdas must be ascending and >= 1".into()));
    }
    let series = TruncatedSeries::new(spec, bound)?;
    lambdas
        .iter()
        .map(|&l| {
            let tau = vec![Complex64::new(0.0, l); n];
            Ok(max_entry_norm(&series.eval(&tau)?))
        })
        .collect()
}
