//! Polynomials in `tau_1, ..., tau_n` and the unitriangular matrix `P(tau)`.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{identity, nilpotent_exp, unipotent_log, CMatrix};

/// Sparse polynomial: multidegree to coefficient.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Poly {
    n: usize,
    terms: BTreeMap<Vec<u32>, Complex64>,
}

impl Poly {
    pub fn zero(n: usize) -> Self {
        Poly {
            n,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(n: usize, c: Complex64) -> Self {
        let mut p = Poly::zero(n);
        p.add_term(vec![0; n], c);
        p
    }

    /// `sum_j coeffs[j] tau_j`.
    pub fn linear(coeffs: &[Complex64]) -> Self {
        let n = coeffs.len();
        let mut p = Poly::zero(n);
        for (j, &c) in coeffs.iter().enumerate() {
            let mut t = vec![0; n];
            t[j] = 1;
            p.add_term(t, c);
        }
        p
    }

    pub fn vars(&self) -> usize {
        self.n
    }

    pub fn add_term(&mut self, t: Vec<u32>, c: Complex64) {
        if c == Complex64::new(0.0, 0.0) {
            return;
        }
        *self.terms.entry(t).or_insert(Complex64::new(0.0, 0.0)) += c;
    }

    /// Monomials in increasing multidegree order.
    pub fn terms(&self) -> impl Iterator<Item = (&Vec<u32>, &Complex64)> {
        self.terms.iter()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.values().all(|c| *c == Complex64::new(0.0, 0.0))
    }

    pub fn total_degree(&self) -> u32 {
        self.terms
            .keys()
            .map(|t| t.iter().sum::<u32>())
            .max()
            .unwrap_or(0)
    }

    pub fn add(&self, o: &Poly) -> Poly {
        let mut out = self.clone();
        for (t, &c) in &o.terms {
            out.add_term(t.clone(), c);
        }
        out
    }

    pub fn scale(&self, s: Complex64) -> Poly {
        let mut out = Poly::zero(self.n);
        for (t, &c) in &self.terms {
            out.add_term(t.clone(), c * s);
        }
        out
    }

    pub fn mul(&self, o: &Poly) -> Poly {
        let mut out = Poly::zero(self.n);
        for (t1, &c1) in &self.terms {
            for (t2, &c2) in &o.terms {
                let t: Vec<u32> = t1.iter().zip(t2).map(|(a, b)| a + b).collect();
                out.add_term(t, c1 * c2);
            }
        }
        out
    }

    pub fn eval(&self, tau: &[Complex64]) -> Complex64 {
        self.terms
            .iter()
            .map(|(t, &c)| c * monomial(tau, t))
            .sum()
    }
}

/// `tau^t = prod_j tau_j^{t_j}`.
pub fn monomial(tau: &[Complex64], t: &[u32]) -> Complex64 {
    tau.iter()
        .zip(t)
        .fold(Complex64::new(1.0, 0.0), |acc, (&z, &k)| {
            (0..k).fold(acc, |a, _| a * z)
        })
}

/// Square matrix of polynomials.
#[derive(Clone, Debug, PartialEq)]
pub struct PolyMatrix {
    size: usize,
    entries: Vec<Poly>,
}

impl PolyMatrix {
    pub fn from_constant(n: usize, m: &CMatrix) -> Self {
        let size = m.nrows();
        let mut entries = Vec::with_capacity(size * size);
        for r in 0..size {
            for c in 0..size {
                entries.push(Poly::constant(n, m[(r, c)]));
            }
        }
        PolyMatrix { size, entries }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn entry(&self, r: usize, c: usize) -> &Poly {
        &self.entries[r * self.size + c]
    }

    pub fn mul(&self, o: &PolyMatrix) -> PolyMatrix {
        let s = self.size;
        let n = self.entries[0].vars();
        let mut entries = Vec::with_capacity(s * s);
        for r in 0..s {
            for c in 0..s {
                let mut acc = Poly::zero(n);
                for k in 0..s {
                    acc = acc.add(&self.entry(r, k).mul(o.entry(k, c)));
                }
                entries.push(acc);
            }
        }
        PolyMatrix { size: s, entries }
    }

    pub fn add(&self, o: &PolyMatrix) -> PolyMatrix {
        PolyMatrix {
            size: self.size,
            entries: self.entries.iter().zip(&o.entries).map(|(a, b)| a.add(b)).collect(),
        }
    }

    pub fn scale(&self, s: Complex64) -> PolyMatrix {
        PolyMatrix {
            size: self.size,
            entries: self.entries.iter().map(|p| p.scale(s)).collect(),
        }
    }

    pub fn eval(&self, tau: &[Complex64]) -> CMatrix {
        CMatrix::from_fn(self.size, self.size, |r, c| self.entry(r, c).eval(tau))
    }
}

/// `P(tau) = exp(sum_i (M^-1 tau)_i log S_i)` for commuting unitriangular `S_i`.
#[derive(Clone, Debug)]
pub struct PolyMatrixP {
    logs: Vec<CMatrix>,
    basis_inverse: DMatrix<f64>,
}

/// Builds `P` from the unipotent factors of one block and the lattice basis
/// matrix `M`.
#[allow(non_snake_case)]
pub fn build_P(s_list: &[CMatrix], basis_matrix: &DMatrix<f64>) -> Result<PolyMatrixP> {
    let n = basis_matrix.nrows();
    if s_list.len() != n || basis_matrix.ncols() != n {
        return Err(Error::DimensionMismatch(format!(
            "{} unipotent factors for a rank-{n} lattice",
            s_list.len()
        )));
    }
    let size = s_list[0].nrows();
    if s_list.iter().any(|s| s.nrows() != size || s.ncols() != size) {
        return Err(Error::DimensionMismatch("unipotent factors differ in size".into()));
    }
    let logs = s_list.iter().map(unipotent_log).collect::<Result<Vec<_>>>()?;
    let basis_inverse = basis_matrix
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::InvalidInput("lattice basis matrix is singular".into()))?;
    Ok(PolyMatrixP {
        logs,
        basis_inverse,
    })
}

impl PolyMatrixP {
    pub fn size(&self) -> usize {
        self.logs[0].nrows()
    }

    pub fn logs(&self) -> &[CMatrix] {
        &self.logs
    }

    fn exponent(&self, tau: &[Complex64], sign: f64) -> CMatrix {
        let n = self.logs.len();
        let mut x = CMatrix::zeros(self.size(), self.size());
        for i in 0..n {
            let coord: Complex64 = (0..n).map(|j| tau[j] * self.basis_inverse[(i, j)]).sum();
            x += &self.logs[i] * (coord * sign);
        }
        x
    }

    fn exp_of(x: &CMatrix) -> CMatrix {
        if x.nrows() == 1 {
            return identity(1);
        }
        // the sum of commuting strictly triangular logs stays strictly triangular
        nilpotent_exp(x).expect("sum of strictly triangular logs")
    }

    pub fn eval(&self, tau: &[Complex64]) -> CMatrix {
        Self::exp_of(&self.exponent(tau, 1.0))
    }

    /// `P(tau)^-1 = exp(-X(tau))`.
    pub fn eval_inverse(&self, tau: &[Complex64]) -> CMatrix {
        Self::exp_of(&self.exponent(tau, -1.0))
    }

    fn symbolic_exp(&self, sign: f64) -> PolyMatrix {
        let n = self.logs.len();
        let size = self.size();
        // X = sum_i l_i(tau) L_i with l_i the i-th row of M^-1
        let mut x = PolyMatrix::from_constant(n, &CMatrix::zeros(size, size));
        for i in 0..n {
            let row: Vec<Complex64> = (0..n)
                .map(|j| Complex64::new(sign * self.basis_inverse[(i, j)], 0.0))
                .collect();
            let li = Poly::linear(&row);
            let entries = (0..size * size)
                .map(|k| li.scale(self.logs[i][(k / size, k % size)]))
                .collect();
            x = x.add(&PolyMatrix { size, entries });
        }
        let mut out = PolyMatrix::from_constant(n, &identity(size));
        let mut power = PolyMatrix::from_constant(n, &identity(size));
        let mut factorial = 1.0;
        for k in 1..size {
            power = power.mul(&x);
            factorial *= k as f64;
            out = out.add(&power.scale(Complex64::new(1.0 / factorial, 0.0)));
        }
        out
    }

    /// `P(tau)` with polynomial entries.
    pub fn symbolic(&self) -> PolyMatrix {
        self.symbolic_exp(1.0)
    }

    /// `P(tau)^-1` with polynomial entries.
    pub fn symbolic_inverse(&self) -> PolyMatrix {
        self.symbolic_exp(-1.0)
    }

    /// `max |P(tau + v_t) - P(tau) S_t|` over the given points and all `t`.
    pub fn cocycle_residual(&self, s_list: &[CMatrix], basis_matrix: &DMatrix<f64>, points: &[Vec<Complex64>]) -> f64 {
        let mut worst: f64 = 0.0;
        for tau in points {
            let p = self.eval(tau);
            for (t, s) in s_list.iter().enumerate() {
                let shifted: Vec<Complex64> = tau
                    .iter()
                    .enumerate()
                    .map(|(j, &z)| z + basis_matrix[(j, t)])
                    .collect();
                let diff = self.eval(&shifted) - &p * s;
                worst = worst.max(crate::linalg::max_entry_norm(&diff));
            }
        }
        worst
    }
}
