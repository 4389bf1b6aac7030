//! Automorphy factors, the slash action and matrix-valued modular functions.

use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::field::{Field, FieldElement};
use crate::linalg::{spectral_norm, CMatrix};
use crate::rep::Representation;

/// An element `[[a, b], [c, d]]` of `SL_2(O_F)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Sl2 {
    pub a: FieldElement,
    pub b: FieldElement,
    pub c: FieldElement,
    pub d: FieldElement,
}

impl Sl2 {
    /// Checks `ad - bc = 1` exactly.
    pub fn new(
        field: &Field,
        a: FieldElement,
        b: FieldElement,
        c: FieldElement,
        d: FieldElement,
    ) -> Result<Self> {
        let det = field.mul(a, d) - field.mul(b, c);
        if det != FieldElement::ONE {
            return Err(Error::InvalidInput(format!(
                "determinant is {} + {}w, not 1",
                det.a, det.b
            )));
        }
        Ok(Sl2 { a, b, c, d })
    }

    pub fn identity() -> Self {
        Sl2 {
            a: FieldElement::ONE,
            b: FieldElement::ZERO,
            c: FieldElement::ZERO,
            d: FieldElement::ONE,
        }
    }

    /// `S = [[0, -1], [1, 0]]`.
    pub fn s() -> Self {
        Sl2 {
            a: FieldElement::ZERO,
            b: -FieldElement::ONE,
            c: FieldElement::ONE,
            d: FieldElement::ZERO,
        }
    }

    /// `T^x = [[1, x], [0, 1]]`.
    pub fn translation(x: FieldElement) -> Self {
        Sl2 {
            b: x,
            ..Sl2::identity()
        }
    }

    pub fn mul(&self, field: &Field, o: &Sl2) -> Sl2 {
        Sl2 {
            a: field.mul(self.a, o.a) + field.mul(self.b, o.c),
            b: field.mul(self.a, o.b) + field.mul(self.b, o.d),
            c: field.mul(self.c, o.a) + field.mul(self.d, o.c),
            d: field.mul(self.c, o.b) + field.mul(self.d, o.d),
        }
    }

    pub fn inverse(&self) -> Sl2 {
        Sl2 {
            a: self.d,
            b: -self.b,
            c: -self.c,
            d: self.a,
        }
    }

    /// `(sigma_j(a), sigma_j(b), sigma_j(c), sigma_j(d))` for each embedding.
    pub fn embedded(&self, field: &Field) -> Vec<[f64; 4]> {
        (0..field.degree())
            .map(|j| {
                [
                    field.embed_one(self.a, j),
                    field.embed_one(self.b, j),
                    field.embed_one(self.c, j),
                    field.embed_one(self.d, j),
                ]
            })
            .collect()
    }
}

fn check_point(field: &Field, tau: &[Complex64]) -> Result<()> {
    if tau.len() != field.degree() {
        return Err(Error::DimensionMismatch(format!(
            "point has {} coordinates, field degree is {}",
            tau.len(),
            field.degree()
        )));
    }
    if tau.iter().any(|z| !(z.im > 0.0) || !z.re.is_finite()) {
        return Err(Error::InvalidInput("point is not in the upper half-plane".into()));
    }
    Ok(())
}

/// Componentwise fractional-linear action through the real embeddings.
pub fn mobius(field: &Field, g: &Sl2, tau: &[Complex64]) -> Result<Vec<Complex64>> {
    check_point(field, tau)?;
    Ok(g.embedded(field)
        .iter()
        .zip(tau)
        .map(|(e, &z)| (z * e[0] + e[1]) / (z * e[2] + e[3]))
        .collect())
}

/// `z^k` by repeated multiplication; negative `k` inverts.
pub fn int_pow(z: Complex64, k: i64) -> Complex64 {
    let mut acc = Complex64::new(1.0, 0.0);
    let mut base = if k < 0 { z.inv() } else { z };
    let mut e = k.unsigned_abs();
    while e > 0 {
        if e & 1 == 1 {
            acc *= base;
        }
        base *= base;
        e >>= 1;
    }
    acc
}

/// `prod_j (sigma_j(c) tau_j + sigma_j(d))^{k_j}` from pre-embedded entries.
pub fn automorphy_j_embedded(emb: &[[f64; 4]], tau: &[Complex64], k: &[i64]) -> Complex64 {
    emb.iter()
        .zip(tau)
        .zip(k)
        .fold(Complex64::new(1.0, 0.0), |acc, ((e, &z), &kj)| {
            acc * int_pow(z * e[2] + e[3], kj)
        })
}

pub fn automorphy_j(field: &Field, g: &Sl2, tau: &[Complex64], k: &[i64]) -> Result<Complex64> {
    check_point(field, tau)?;
    if k.len() != field.degree() {
        return Err(Error::DimensionMismatch("weight row length".into()));
    }
    Ok(automorphy_j_embedded(&g.embedded(field), tau, k))
}

/// Integer weight matrix `k` with rows `k_1, ..., k_c`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WeightMatrix {
    rows: Vec<Vec<i64>>,
}

impl WeightMatrix {
    pub fn new(rows: Vec<Vec<i64>>) -> Result<Self> {
        let n = rows.first().map_or(0, |r| r.len());
        if rows.is_empty() || n == 0 || rows.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidInput("weight matrix must be a non-empty rectangle".into()));
        }
        Ok(WeightMatrix { rows })
    }

    /// `c` copies of the same row.
    pub fn uniform(row: &[i64], c: usize) -> Result<Self> {
        WeightMatrix::new(vec![row.to_vec(); c])
    }

    pub fn rows(&self) -> &[Vec<i64>] {
        &self.rows
    }

    pub fn c(&self) -> usize {
        self.rows.len()
    }

    pub fn n(&self) -> usize {
        self.rows[0].len()
    }

    /// Every entry is at least 3.
    pub fn check_poincare(&self) -> Result<()> {
        if self.rows.iter().flatten().any(|&k| k < 3) {
            return Err(Error::Assumption(
                "Poincare series need every weight entry > 2".into(),
            ));
        }
        Ok(())
    }

    /// Rows `alpha + beta_i`.
    pub fn shifted(&self, alpha: &[i64]) -> Result<Self> {
        if alpha.len() != self.n() {
            return Err(Error::DimensionMismatch("weight shift length".into()));
        }
        WeightMatrix::new(
            self.rows
                .iter()
                .map(|r| r.iter().zip(alpha).map(|(b, a)| a + b).collect())
                .collect(),
        )
    }
}

/// Diagonal `c x c` matrix of the row automorphy factors.
#[allow(non_snake_case)]
pub fn automorphy_J(field: &Field, g: &Sl2, tau: &[Complex64], k: &WeightMatrix) -> Result<CMatrix> {
    check_point(field, tau)?;
    if k.n() != field.degree() {
        return Err(Error::DimensionMismatch("weight matrix width".into()));
    }
    let emb = g.embedded(field);
    let c = k.c();
    let mut out = CMatrix::zeros(c, c);
    for (i, row) in k.rows().iter().enumerate() {
        out[(i, i)] = automorphy_j_embedded(&emb, tau, row);
    }
    Ok(out)
}

/// A function `H^n -> M_{r,c}(C)` with its declared weight.
pub trait MatrixFunction: Send + Sync {
    fn rows(&self) -> usize;
    fn cols(&self) -> usize;
    fn weight(&self) -> &WeightMatrix;
    fn field(&self) -> &Field;
    fn eval(&self, tau: &[Complex64]) -> Result<CMatrix>;
}

type EvalFn = dyn Fn(&[Complex64]) -> Result<CMatrix> + Send + Sync;

/// A [`MatrixFunction`] backed by a closure.
#[derive(Clone)]
pub struct FunctionHandle {
    rows: usize,
    cols: usize,
    weight: WeightMatrix,
    field: Field,
    f: Arc<EvalFn>,
}

impl FunctionHandle {
    pub fn new<F>(field: &Field, rows: usize, weight: WeightMatrix, f: F) -> Self
    where
        F: Fn(&[Complex64]) -> Result<CMatrix> + Send + Sync + 'static,
    {
        FunctionHandle {
            rows,
            cols: weight.c(),
            weight,
            field: field.clone(),
            f: Arc::new(f),
        }
    }
}

impl MatrixFunction for FunctionHandle {
    fn rows(&self) -> usize {
        self.rows
    }
    fn cols(&self) -> usize {
        self.cols
    }
    fn weight(&self) -> &WeightMatrix {
        &self.weight
    }
    fn field(&self) -> &Field {
        &self.field
    }
    fn eval(&self, tau: &[Complex64]) -> Result<CMatrix> {
        (self.f)(tau)
    }
}

/// `(G|_k gamma)(tau) = G(gamma tau) J(gamma, tau)^-1`.
pub fn slash(g_fn: &dyn MatrixFunction, gamma: &Sl2, tau: &[Complex64]) -> Result<CMatrix> {
    let field = g_fn.field();
    let moved = mobius(field, gamma, tau)?;
    let j = automorphy_J(field, gamma, tau, g_fn.weight())?;
    let jinv = j.map_with_location(|r, c, z| if r == c { z.inv() } else { z });
    let value = g_fn.eval(&moved)?;
    if value.shape() != (g_fn.rows(), g_fn.cols()) {
        return Err(Error::DimensionMismatch(format!(
            "function value is {}x{}, declared {}x{}",
            value.nrows(),
            value.ncols(),
            g_fn.rows(),
            g_fn.cols()
        )));
    }
    Ok(value * jinv)
}

/// `max_tau |G(gamma tau) J(gamma, tau)^-1 - rho_gamma G(tau)|` in the
/// spectral norm, with `rho_gamma` given explicitly.
pub fn transformation_residual_with(
    g_fn: &dyn MatrixFunction,
    rho_gamma: &CMatrix,
    gamma: &Sl2,
    samples: &[Vec<Complex64>],
) -> Result<f64> {
    if rho_gamma.nrows() != g_fn.rows() {
        return Err(Error::DimensionMismatch("representation and function rows".into()));
    }
    let mut worst: f64 = 0.0;
    for tau in samples {
        let slashed = slash(g_fn, gamma, tau)?;
        let diff = slashed - rho_gamma * g_fn.eval(tau)?;
        worst = worst.max(spectral_norm(&diff));
    }
    Ok(worst)
}

pub fn transformation_residual(
    g_fn: &dyn MatrixFunction,
    rho: &Representation,
    gamma: &Sl2,
    samples: &[Vec<Complex64>],
) -> Result<f64> {
    transformation_residual_with(g_fn, &rho.eval(gamma)?, gamma, samples)
}

/// `g * G` for a scalar `g` of weight `alpha`.
pub struct ScalarProduct<A, B> {
    g: A,
    big: B,
    weight: WeightMatrix,
}

impl<A: MatrixFunction, B: MatrixFunction> MatrixFunction for ScalarProduct<A, B> {
    fn rows(&self) -> usize {
        self.big.rows()
    }
    fn cols(&self) -> usize {
        self.big.cols()
    }
    fn weight(&self) -> &WeightMatrix {
        &self.weight
    }
    fn field(&self) -> &Field {
        self.big.field()
    }
    fn eval(&self, tau: &[Complex64]) -> Result<CMatrix> {
        let s = self.g.eval(tau)?[(0, 0)];
        Ok(self.big.eval(tau)? * s)
    }
}

/// The graded module action `(g G)(tau) = g(tau) G(tau)` of weight rows
/// `alpha + beta_i`.
pub fn scalar_module_action<A: MatrixFunction, B: MatrixFunction>(
    g: A,
    big: B,
) -> Result<ScalarProduct<A, B>> {
    if g.field() != big.field() {
        return Err(Error::InvalidInput("scalar and matrix functions live over different fields".into()));
    }
    if g.rows() != 1 || g.cols() != 1 {
        return Err(Error::DimensionMismatch("scalar factor must be 1x1".into()));
    }
    let weight = big.weight().shifted(&g.weight().rows()[0])?;
    Ok(ScalarProduct { g, big, weight })
}

/// Seeded points with real parts in `re` and imaginary parts in `im`.
pub fn sample_points_in(
    n: usize,
    count: usize,
    seed: u64,
    re: (f64, f64),
    im: (f64, f64),
) -> Vec<Vec<Complex64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            (0..n)
                .map(|_| Complex64::new(rng.random_range(re.0..re.1), rng.random_range(im.0..im.1)))
                .collect()
        })
        .collect()
}

/// Seeded points with `Re in [-1, 1]` and `Im in [0.8, 2.5]`.
pub fn sample_points(n: usize, count: usize, seed: u64) -> Vec<Vec<Complex64>> {
    sample_points_in(n, count, seed, (-1.0, 1.0), (0.8, 2.5))
}

/// Product of `len` random generators `S` and `T^x` with small `x`.
pub fn random_sl2<R: Rng>(field: &Field, rng: &mut R, len: usize) -> Sl2 {
    let mut g = Sl2::identity();
    for _ in 0..len {
        let step = if rng.random_bool(0.4) {
            Sl2::s()
        } else {
            let x = field.element(rng.random_range(-2..=2), rng.random_range(-1..=1));
            Sl2::translation(x)
        };
        g = g.mul(field, &step);
    }
    g
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{make_field, FieldSpec};

    #[test]
    fn determinant_enforced() {
        let q = make_field(FieldSpec::Rational).unwrap();
        let two = FieldElement::integer(2);
        assert!(Sl2::new(&q, two, FieldElement::ZERO, FieldElement::ZERO, two).is_err());
        let g = Sl2::new(&q, two, FieldElement::integer(3), FieldElement::integer(3), FieldElement::integer(4));
        assert!(g.is_err());
        let g = Sl2::new(&q, two, FieldElement::integer(3), FieldElement::integer(1), two).unwrap();
        assert_eq!(g.mul(&q, &g.inverse()), Sl2::identity());
    }

    #[test]
    fn negative_powers() {
        let z = Complex64::new(0.3, 1.7);
        assert!((int_pow(z, -3) * int_pow(z, 3) - 1.0).norm() < 1e-14);
        assert_eq!(int_pow(z, 0), Complex64::new(1.0, 0.0));
    }

    #[test]
    fn points_outside_half_plane_rejected() {
        let q = make_field(FieldSpec::Rational).unwrap();
        assert!(mobius(&q, &Sl2::s(), &[Complex64::new(1.0, 0.0)]).is_err());
    }
}
