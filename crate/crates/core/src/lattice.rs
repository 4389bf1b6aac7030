//! Translation lattices `Lambda_H = iota(S_H)` and their duals.
//!
//! A subgroup `H` enters only through `S_H`, which is either the whole ring
//! of integers or a principal ideal `c*O_F`. Dual vectors are stored by their
//! integer coordinates with respect to the dual basis, which makes them
//! hashable and exactly serializable.

use std::cmp::Ordering;
use std::hash::{Hash, Hasher};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{make_field, Field, FieldElement, FieldSpec};
use crate::serial::{format_f64, parse_f64};

/// Which translation subgroup is meant.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SubgroupSpec {
    /// `S_H = O_F`.
    Full,
    /// `S_H = c*O_F`.
    IdealScaled(FieldElement),
}

#[derive(Clone, Debug)]
pub struct TranslationLattice {
    field: Field,
    generator: FieldElement,
    basis: Vec<FieldElement>,
    /// Columns are the embedded basis vectors `v_i`.
    basis_matrix: DMatrix<f64>,
    basis_inverse: DMatrix<f64>,
    /// Columns are the dual basis vectors `d_j`, i.e. `(M^T)^-1`.
    dual_matrix: DMatrix<f64>,
}

impl PartialEq for TranslationLattice {
    fn eq(&self, other: &Self) -> bool {
        self.field == other.field && self.basis == other.basis
    }
}

/// A vector of `Lambda_H^*` given by integer coordinates in the dual basis.
#[derive(Clone, Debug)]
pub struct DualVector {
    coords: Vec<i64>,
    real: Vec<f64>,
}

impl DualVector {
    pub fn coords(&self) -> &[i64] {
        &self.coords
    }

    /// Real coordinates `sum_j m_j d_j`.
    pub fn real(&self) -> &[f64] {
        &self.real
    }

    pub fn is_zero(&self) -> bool {
        self.coords.iter().all(|&m| m == 0)
    }
}

impl PartialEq for DualVector {
    fn eq(&self, other: &Self) -> bool {
        self.coords == other.coords
    }
}

impl Eq for DualVector {}

impl Hash for DualVector {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.coords.hash(state);
    }
}

impl PartialOrd for DualVector {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for DualVector {
    fn cmp(&self, other: &Self) -> Ordering {
        self.coords.cmp(&other.coords)
    }
}

/// Builds the translation lattice of the subgroup described by `spec`.
pub fn translation_lattice(field: &Field, spec: SubgroupSpec) -> Result<TranslationLattice> {
    let c = match spec {
        SubgroupSpec::Full => FieldElement::ONE,
        SubgroupSpec::IdealScaled(c) => {
            if c.is_zero() {
                return Err(Error::InvalidInput(
                    "ideal generator must be non-zero".into(),
                ));
            }
            c
        }
    };
    let c = field.element(c.a, c.b);
    let basis: Vec<FieldElement> = if field.is_rational() {
        vec![c]
    } else {
        vec![c, field.mul(c, field.omega())]
    };
    TranslationLattice::from_basis(field.clone(), c, basis)
}

impl TranslationLattice {
    fn from_basis(field: Field, generator: FieldElement, basis: Vec<FieldElement>) -> Result<Self> {
        let n = field.degree();
        let mut m = DMatrix::<f64>::zeros(n, n);
        for (i, a) in basis.iter().enumerate() {
            for (j, x) in field.embed(*a).into_iter().enumerate() {
                m[(j, i)] = x;
            }
        }
        let inv = m
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::Numerical("lattice basis matrix is singular".into()))?;
        let dual = inv.transpose();
        Ok(TranslationLattice {
            field,
            generator,
            basis,
            basis_matrix: m,
            basis_inverse: inv,
            dual_matrix: dual,
        })
    }

    pub fn field(&self) -> &Field {
        &self.field
    }

    pub fn rank(&self) -> usize {
        self.basis.len()
    }

    /// `c` with `S_H = c*O_F`.
    pub fn generator(&self) -> FieldElement {
        self.generator
    }

    /// The `Z`-basis `a_1, ..., a_n` of `S_H`.
    pub fn basis(&self) -> &[FieldElement] {
        &self.basis
    }

    /// `M`, whose columns are the embedded basis vectors.
    pub fn basis_matrix(&self) -> &DMatrix<f64> {
        &self.basis_matrix
    }

    pub fn basis_inverse(&self) -> &DMatrix<f64> {
        &self.basis_inverse
    }

    /// `D = (M^T)^-1`, whose columns span the dual lattice.
    pub fn dual_matrix(&self) -> &DMatrix<f64> {
        &self.dual_matrix
    }

    /// The embedded basis vector `v_i`.
    pub fn basis_vector(&self, i: usize) -> Vec<f64> {
        self.basis_matrix.column(i).iter().copied().collect()
    }

    pub fn dual_vector(&self, coords: &[i64]) -> DualVector {
        let n = self.rank();
        assert_eq!(coords.len(), n, "dual coordinate length");
        let real = (0..n)
            .map(|j| (0..n).map(|i| self.dual_matrix[(j, i)] * coords[i] as f64).sum())
            .collect();
        DualVector {
            coords: coords.to_vec(),
            real,
        }
    }

    /// Integer coordinates of `x` in the basis of `S_H`, if `x` lies in it.
    pub fn lattice_coordinates(&self, x: FieldElement) -> Option<Vec<i64>> {
        let q = self.field.exact_div(x, self.generator)?;
        Some(if self.field.is_rational() {
            vec![q.a]
        } else {
            vec![q.a, q.b]
        })
    }

    /// The lattice element `sum m_i a_i`.
    pub fn element_from_coordinates(&self, m: &[i64]) -> FieldElement {
        self.basis
            .iter()
            .zip(m)
            .fold(FieldElement::ZERO, |acc, (a, &k)| {
                acc + FieldElement::new(a.a * k, a.b * k)
            })
    }

    /// Real vector `M * m`.
    pub fn lattice_vector(&self, m: &[i64]) -> Vec<f64> {
        let n = self.rank();
        (0..n)
            .map(|j| (0..n).map(|i| self.basis_matrix[(j, i)] * m[i] as f64).sum())
            .collect()
    }

    /// Row vector `w * M^-1`, i.e. the vector `u` with `u . v_i = w_i`.
    pub fn from_basis_pairings<T>(&self, w: &[T]) -> Vec<T>
    where
        T: Copy + std::ops::Mul<f64, Output = T> + std::iter::Sum<T>,
    {
        let n = self.rank();
        (0..n)
            .map(|j| (0..n).map(|i| w[i] * self.basis_inverse[(i, j)]).sum())
            .collect()
    }

    /// Row vector `u * M`, the pairings `u . v_i`.
    pub fn basis_pairings<T>(&self, u: &[T]) -> Vec<T>
    where
        T: Copy + std::ops::Mul<f64, Output = T> + std::iter::Sum<T>,
    {
        let n = self.rank();
        (0..n)
            .map(|i| (0..n).map(|j| u[j] * self.basis_matrix[(j, i)]).sum())
            .collect()
    }

    /// All dual vectors with `max_j |v_j| <= box_bound`, in lexicographic
    /// order of their integer coordinates.
    pub fn enumerate_dual(&self, box_bound: f64) -> Vec<DualVector> {
        if !(box_bound >= 0.0) {
            return Vec::new();
        }
        let n = self.rank();
        // m_i = v . v_i, so |m_i| <= |v|_inf * |v_i|_1.
        let limits: Vec<i64> = (0..n)
            .map(|i| {
                let l1: f64 = self.basis_matrix.column(i).iter().map(|x| x.abs()).sum();
                (box_bound * l1).ceil() as i64
            })
            .collect();
        let slack = 1e-12 * box_bound.max(1.0);
        let mut out = Vec::new();
        let mut m: Vec<i64> = limits.iter().map(|l| -l).collect();
        loop {
            let v = self.dual_vector(&m);
            if v.real.iter().all(|x| x.abs() <= box_bound + slack) {
                out.push(v);
            }
            // odometer increment, last coordinate fastest
            let mut k = n;
            loop {
                if k == 0 {
                    return out;
                }
                k -= 1;
                if m[k] < limits[k] {
                    m[k] += 1;
                    for (mm, l) in m.iter_mut().zip(&limits).skip(k + 1) {
                        *mm = -l;
                    }
                    break;
                }
            }
        }
    }

    /// Minimal `h_i > 0` with `h_i e_i` in the lattice, per axis.
    ///
    /// For a quadratic field every embedding is injective, so a lattice point
    /// with a vanishing coordinate is zero and no axis period exists.
    pub fn axis_periods(&self) -> Vec<Option<u64>> {
        if self.field.is_rational() {
            vec![Some(self.generator.a.unsigned_abs())]
        } else {
            vec![None; self.rank()]
        }
    }

    /// Largest deviation of `d_j . v_i` from `delta_ij`.
    pub fn duality_residual(&self) -> f64 {
        let prod = self.basis_matrix.transpose() * &self.dual_matrix;
        let n = self.rank();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((prod[(i, j)] - target).abs());
            }
        }
        worst
    }

    pub fn to_json(&self) -> LatticeJson {
        let n = self.rank();
        let flat = |m: &DMatrix<f64>| {
            let mut v = Vec::with_capacity(n * n);
            for r in 0..n {
                for c in 0..n {
                    v.push(format_f64(m[(r, c)]));
                }
            }
            v
        };
        LatticeJson {
            field: self.field.spec().to_string(),
            basis_integer_coords: self.basis.iter().map(|a| [a.a, a.b]).collect(),
            m: flat(&self.basis_matrix),
            d: flat(&self.dual_matrix),
        }
    }

    /// Rebuilds a lattice from its JSON form; the stored matrices must agree
    /// with the recomputed ones.
    pub fn from_json(json: &LatticeJson) -> Result<Self> {
        let spec: FieldSpec = json.field.parse()?;
        let field = make_field(spec)?;
        let basis: Vec<FieldElement> = json
            .basis_integer_coords
            .iter()
            .map(|&[a, b]| FieldElement::new(a, b))
            .collect();
        if basis.len() != field.degree() || basis.is_empty() {
            return Err(Error::InvalidInput("lattice basis has wrong length".into()));
        }
        let generator = basis[0];
        let expected = translation_lattice(&field, SubgroupSpec::IdealScaled(generator))?;
        if expected.basis != basis {
            return Err(Error::InvalidInput(
                "lattice basis is not of the form {c, c*w}".into(),
            ));
        }
        let n = field.degree();
        for (name, stored, ours) in [
            ("M", &json.m, &expected.basis_matrix),
            ("D", &json.d, &expected.dual_matrix),
        ] {
            if stored.len() != n * n {
                return Err(Error::InvalidInput(format!("{name} has wrong size")));
            }
            for (k, s) in stored.iter().enumerate() {
                let x = parse_f64(s)?;
                if (x - ours[(k / n, k % n)]).abs() > 1e-12 * x.abs().max(1.0) {
                    return Err(Error::InvalidInput(format!(
                        "{name} does not match the basis"
                    )));
                }
            }
        }
        Ok(expected)
    }
}

/// Serialized lattice: `{field, basis_integer_coords, M, D}` with row-major
/// decimal strings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeJson {
    pub field: String,
    pub basis_integer_coords: Vec<[i64; 2]>,
    #[serde(rename = "M")]
    pub m: Vec<String>,
    #[serde(rename = "D")]
    pub d: Vec<String>,
}
