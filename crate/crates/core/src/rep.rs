//! Representations of the Hilbert modular group with direct evaluation.
//!
//! No representation here ever decomposes a matrix into generators: the
//! trivial and permutation kinds evaluate any element of `SL_2(O_F)`
//! directly, and the translation-only kind is defined on lattice
//! translations alone.

use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{Field, FieldElement};
use crate::lattice::TranslationLattice;
use crate::linalg::{commuting_residual, identity, max_entry_norm, CMatrix};
use crate::modfun::Sl2;
use crate::serial::{matrix_from_json, matrix_to_json, MatrixJson};

/// Largest projective line accepted for the permutation kind.
const MAX_POINTS: u64 = 4097;

fn is_rational_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut p = 2;
    while p * p <= n {
        if n.is_multiple_of(p) {
            return false;
        }
        p += 1;
    }
    true
}

fn pow_mod(mut b: u64, mut e: u64, m: u64) -> u64 {
    let mut acc = 1 % m;
    b %= m;
    while e > 0 {
        if e & 1 == 1 {
            acc = acc * b % m;
        }
        b = b * b % m;
        e >>= 1;
    }
    acc
}

/// The residue field `O_F / p`, either `F_q` or `F_q[w]/(w^2 - tr w + nm)`.
#[derive(Clone, Debug)]
pub struct ResidueField {
    q: u64,
    /// `Some(w)` when `O_F/p = F_q` with `w` the image of the generator.
    omega_image: Option<u64>,
    trace: u64,
    norm: u64,
    /// Inverse of each element index (zero maps to zero).
    inverses: Vec<u32>,
}

impl ResidueField {
    fn prime(q: u64, omega_image: u64) -> Self {
        let inverses = (0..q)
            .map(|x| if x == 0 { 0 } else { pow_mod(x, q - 2, q) as u32 })
            .collect();
        ResidueField {
            q,
            omega_image: Some(omega_image),
            trace: 0,
            norm: 0,
            inverses,
        }
    }

    fn inert(q: u64, trace: u64, norm: u64) -> Self {
        let mut rf = ResidueField {
            q,
            omega_image: None,
            trace,
            norm,
            inverses: Vec::new(),
        };
        let size = q * q;
        let mut inverses = vec![0u32; size as usize];
        for x in 1..size {
            if inverses[x as usize] != 0 {
                continue;
            }
            let ex = rf.element_at(x);
            for y in 1..size {
                if rf.mul(ex, rf.element_at(y)) == (1, 0) {
                    inverses[x as usize] = y as u32;
                    inverses[y as usize] = x as u32;
                    break;
                }
            }
        }
        rf.inverses = inverses;
        rf
    }

    /// Number of elements.
    pub fn size(&self) -> u64 {
        if self.omega_image.is_some() {
            self.q
        } else {
            self.q * self.q
        }
    }

    pub fn characteristic(&self) -> u64 {
        self.q
    }

    fn index(&self, x: (u64, u64)) -> u64 {
        x.0 + self.q * x.1
    }

    fn element_at(&self, i: u64) -> (u64, u64) {
        (i % self.q, i / self.q)
    }

    fn reduce_int(&self, a: i64) -> u64 {
        a.rem_euclid(self.q as i64) as u64
    }

    /// Image of `a + b*w`.
    pub fn reduce(&self, x: FieldElement) -> (u64, u64) {
        match self.omega_image {
            Some(w) => ((self.reduce_int(x.a) + self.reduce_int(x.b) * w) % self.q, 0),
            None => (self.reduce_int(x.a), self.reduce_int(x.b)),
        }
    }

    fn add(&self, x: (u64, u64), y: (u64, u64)) -> (u64, u64) {
        ((x.0 + y.0) % self.q, (x.1 + y.1) % self.q)
    }

    fn mul(&self, x: (u64, u64), y: (u64, u64)) -> (u64, u64) {
        let q = self.q;
        if self.omega_image.is_some() {
            return (x.0 * y.0 % q, 0);
        }
        // w^2 = tr*w - nm
        let bd = x.1 * y.1 % q;
        let c0 = (x.0 * y.0 + (q - self.norm % q) * bd) % q;
        let c1 = (x.0 * y.1 + x.1 * y.0 + self.trace * bd) % q;
        (c0, c1)
    }

    fn inv(&self, x: (u64, u64)) -> (u64, u64) {
        self.element_at(self.inverses[self.index(x) as usize] as u64)
    }
}

/// Validates that `p` is prime in `O_F` and builds `O_F/p`.
pub fn residue_field(field: &Field, p: FieldElement) -> Result<ResidueField> {
    let n = field.norm(p).unsigned_abs();
    if n > (MAX_POINTS as u128) * (MAX_POINTS as u128) {
        return Err(Error::InvalidInput(format!("residue field of norm {n} is too large")));
    }
    let n = n as u64;
    if is_rational_prime(n) {
        if n + 1 > MAX_POINTS {
            return Err(Error::InvalidInput(format!("residue field of size {n} is too large")));
        }
        if field.is_rational() {
            return Ok(ResidueField::prime(n, 0));
        }
        // p = a + b*w with q not dividing b, so w = -a/b mod q.
        let rf = ResidueField::prime(n, 0);
        let b = rf.reduce_int(p.b);
        let a = rf.reduce_int(p.a);
        let binv = pow_mod(b, n - 2, n);
        let w = (n - a) % n * binv % n;
        let tr = rf.reduce_int(field.omega_trace());
        let nm = rf.reduce_int(field.omega_norm());
        debug_assert_eq!((w * w + n * n - tr * w % n + nm) % n, 0);
        return Ok(ResidueField::prime(n, w));
    }
    let q = (n as f64).sqrt().round() as u64;
    if q * q == n && is_rational_prime(q) && !field.is_rational() {
        let associate = field
            .exact_div(p, FieldElement::integer(q as i64))
            .is_some_and(|u| field.is_unit(u));
        let tr = (field.omega_trace().rem_euclid(q as i64)) as u64;
        let nm = (field.omega_norm().rem_euclid(q as i64)) as u64;
        let inert = (0..q).all(|x| !(x * x + q * q - tr * x % q + nm).is_multiple_of(q));
        if associate && inert {
            if n + 1 > MAX_POINTS {
                return Err(Error::InvalidInput(format!(
                    "residue field of size {n} is too large"
                )));
            }
            return Ok(ResidueField::inert(q, tr, nm));
        }
    }
    Err(Error::NotPrime(format!(
        "{} + {}w has norm {n}",
        p.a, p.b
    )))
}

/// The action of `SL_2(O_F)` on `P^1(O_F/p)` by fractional-linear maps.
///
/// Points are indexed by residue-field elements, with infinity last.
#[derive(Clone, Debug)]
pub struct ProjectiveLine {
    residue: ResidueField,
}

impl ProjectiveLine {
    pub fn points(&self) -> usize {
        self.residue.size() as usize + 1
    }

    pub fn residue_field(&self) -> &ResidueField {
        &self.residue
    }

    fn infinity(&self) -> u64 {
        self.residue.size()
    }

    fn point_of(&self, x: (u64, u64), y: (u64, u64)) -> u64 {
        if y == (0, 0) {
            self.infinity()
        } else {
            self.residue.index(self.residue.mul(x, self.residue.inv(y)))
        }
    }

    /// `sigma` with `gamma [x:y]` equal to point `sigma[i]` for point `i`.
    pub fn permutation(&self, g: &Sl2) -> Vec<usize> {
        let rf = &self.residue;
        let (a, b, c, d) = (rf.reduce(g.a), rf.reduce(g.b), rf.reduce(g.c), rf.reduce(g.d));
        let mut sigma = Vec::with_capacity(self.points());
        for i in 0..rf.size() {
            let z = rf.element_at(i);
            let top = rf.add(rf.mul(a, z), b);
            let bottom = rf.add(rf.mul(c, z), d);
            sigma.push(self.point_of(top, bottom) as usize);
        }
        sigma.push(self.point_of(a, c) as usize);
        sigma
    }
}

/// Matrix with `P[sigma(i), i] = 1`.
pub fn permutation_matrix(sigma: &[usize]) -> CMatrix {
    let r = sigma.len();
    let mut m = CMatrix::zeros(r, r);
    for (i, &s) in sigma.iter().enumerate() {
        m[(s, i)] = Complex64::new(1.0, 0.0);
    }
    m
}

#[derive(Clone, Debug)]
#[allow(clippy::large_enum_variant)]
pub enum RepKind {
    Trivial,
    PermModP {
        prime: FieldElement,
        line: ProjectiveLine,
    },
    /// Commuting `A_i = rho(T_{a_i})` for the basis `a_i` of `S_H`.
    TranslationOnly {
        lattice: TranslationLattice,
        matrices: Vec<CMatrix>,
        inverses: Vec<CMatrix>,
    },
}

/// A representation `rho : H -> GL_r(C)` evaluated directly on matrices.
#[derive(Clone, Debug)]
pub struct Representation {
    dim: usize,
    field: Field,
    kind: RepKind,
}

impl fmt::Display for Representation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            RepKind::Trivial => write!(f, "trivial:{}", self.dim),
            RepKind::PermModP { prime, .. } => write!(f, "permmod:{},{}", prime.a, prime.b),
            RepKind::TranslationOnly { .. } => write!(f, "translation:{}", self.dim),
        }
    }
}

pub fn trivial_rep(field: &Field, r: usize) -> Result<Representation> {
    if r == 0 {
        return Err(Error::InvalidInput("representation dimension must be positive".into()));
    }
    Ok(Representation {
        dim: r,
        field: field.clone(),
        kind: RepKind::Trivial,
    })
}

/// Permutation representation on `P^1(O_F/p)`.
pub fn perm_rep_mod_p(field: &Field, p: FieldElement) -> Result<Representation> {
    let residue = residue_field(field, p)?;
    let line = ProjectiveLine { residue };
    Ok(Representation {
        dim: line.points(),
        field: field.clone(),
        kind: RepKind::PermModP { prime: p, line },
    })
}

/// Representation known only on the translations of `lattice`.
pub fn translation_rep(lattice: &TranslationLattice, matrices: Vec<CMatrix>) -> Result<Representation> {
    if matrices.len() != lattice.rank() {
        return Err(Error::DimensionMismatch(format!(
            "{} translation matrices for a rank-{} lattice",
            matrices.len(),
            lattice.rank()
        )));
    }
    let residual = commuting_residual(&matrices)?;
    let scale = matrices.iter().map(max_entry_norm).fold(1.0f64, f64::max);
    if residual > 1e-10 * scale * scale {
        return Err(Error::NonCommuting(residual));
    }
    let inverses = matrices
        .iter()
        .map(|a| {
            a.clone()
                .try_inverse()
                .ok_or(Error::Singular(0.0))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Representation {
        dim: matrices[0].nrows(),
        field: lattice.field().clone(),
        kind: RepKind::TranslationOnly {
            lattice: lattice.clone(),
            matrices,
            inverses,
        },
    })
}

impl Representation {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn field(&self) -> &Field {
        &self.field
    }

    pub fn kind(&self) -> &RepKind {
        &self.kind
    }

    /// Whether every image is a permutation matrix or the identity.
    pub fn is_unitary_kind(&self) -> bool {
        !matches!(self.kind, RepKind::TranslationOnly { .. })
    }

    /// Point permutation of `rho(gamma)` for the trivial and permutation kinds.
    pub fn permutation(&self, g: &Sl2) -> Option<Vec<usize>> {
        match &self.kind {
            RepKind::Trivial => Some((0..self.dim).collect()),
            RepKind::PermModP { line, .. } => Some(line.permutation(g)),
            RepKind::TranslationOnly { .. } => None,
        }
    }

    pub fn eval(&self, g: &Sl2) -> Result<CMatrix> {
        match &self.kind {
            RepKind::Trivial => Ok(identity(self.dim)),
            RepKind::PermModP { line, .. } => Ok(permutation_matrix(&line.permutation(g))),
            RepKind::TranslationOnly {
                lattice,
                matrices,
                inverses,
            } => {
                let is_translation = g.a == FieldElement::ONE
                    && g.d == FieldElement::ONE
                    && g.c.is_zero();
                if !is_translation {
                    return Err(Error::NonTranslation);
                }
                let m = lattice
                    .lattice_coordinates(g.b)
                    .ok_or(Error::NonTranslation)?;
                let mut out = identity(self.dim);
                for (i, &k) in m.iter().enumerate() {
                    let base = if k >= 0 { &matrices[i] } else { &inverses[i] };
                    for _ in 0..k.unsigned_abs() {
                        out = &out * base;
                    }
                }
                Ok(out)
            }
        }
    }

    /// `rho(T_{a_i})` for the basis `a_i` of the lattice.
    pub fn translation_images(&self, lattice: &TranslationLattice) -> Result<Vec<CMatrix>> {
        lattice
            .basis()
            .iter()
            .map(|&a| self.eval(&Sl2::translation(a)))
            .collect()
    }

    /// `max |rho(g h) - rho(g) rho(h)|` over the given pairs.
    pub fn homomorphism_residual(&self, pairs: &[(Sl2, Sl2)]) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for (g, h) in pairs {
            let gh = g.mul(&self.field, h);
            let diff = self.eval(&gh)? - self.eval(g)? * self.eval(h)?;
            worst = worst.max(max_entry_norm(&diff));
        }
        Ok(worst)
    }
}

/// File format of `custom:` representations: the translation matrices.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TranslationRepJson {
    pub matrices: Vec<MatrixJson>,
}

impl TranslationRepJson {
    pub fn from_matrices(ms: &[CMatrix]) -> Self {
        TranslationRepJson {
            matrices: ms.iter().map(matrix_to_json).collect(),
        }
    }

    pub fn to_matrices(&self) -> Result<Vec<CMatrix>> {
        self.matrices.iter().map(matrix_from_json).collect()
    }
}
