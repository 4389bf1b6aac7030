//! Dense complex linear algebra for commuting families.
//!
//! The centrepiece is [`sbtsd`], which puts a commuting family of invertible
//! matrices into simultaneous block-triangular form with shared block sizes:
//! the space is split into generalized eigenspaces of the first matrix, each
//! piece is split again by the next matrix, and each final joint piece is
//! triangularized by repeatedly deflating a common eigenvector.
//!
//! Spectra are computed in floating point, so eigenvalues are grouped by an
//! explicit clustering rule and every grouping is confirmed by a rank test on
//! `(A - lambda)^m`.

use std::cmp::Ordering;
use std::f64::consts::PI;

use nalgebra::{DMatrix, Schur};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

pub fn identity(r: usize) -> CMatrix {
    CMatrix::identity(r, r)
}

/// Complex matrix from real row-major data.
pub fn from_real_rows(rows: &[&[f64]]) -> CMatrix {
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, |r| r.len());
    CMatrix::from_fn(nrows, ncols, |r, c| Complex64::new(rows[r][c], 0.0))
}

pub fn diagonal(entries: &[Complex64]) -> CMatrix {
    let r = entries.len();
    CMatrix::from_fn(r, r, |i, j| if i == j { entries[i] } else { ZERO })
}

/// `max_{i,j} |a_ij|`.
pub fn max_entry_norm(a: &CMatrix) -> f64 {
    a.iter().fold(0.0, |m, z| m.max(z.norm()))
}

/// Largest singular value.
pub fn spectral_norm(a: &CMatrix) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    if a.nrows() == 1 || a.ncols() == 1 {
        return a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    }
    a.clone()
        .singular_values()
        .iter()
        .fold(0.0f64, |m, &s| m.max(s))
}

/// Singular values in ascending order.
pub fn singular_values_ascending(a: &CMatrix) -> Vec<f64> {
    let mut s: Vec<f64> = a.clone().singular_values().iter().copied().collect();
    s.sort_by(f64::total_cmp);
    s
}

fn check_square_family(family: &[CMatrix]) -> Result<usize> {
    let first = family
        .first()
        .ok_or_else(|| Error::InvalidInput("empty matrix family".into()))?;
    let r = first.nrows();
    if r == 0 {
        return Err(Error::InvalidInput("zero-dimensional matrices".into()));
    }
    for (i, a) in family.iter().enumerate() {
        if a.nrows() != r || a.ncols() != r {
            return Err(Error::DimensionMismatch(format!(
                "matrix {i} is {}x{}, expected {r}x{r}",
                a.nrows(),
                a.ncols()
            )));
        }
        if a.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidInput(format!("matrix {i} has non-finite entries")));
        }
    }
    Ok(r)
}

/// `max_{i<j} max-entry(A_i A_j - A_j A_i)`.
pub fn commuting_residual(family: &[CMatrix]) -> Result<f64> {
    check_square_family(family)?;
    let mut worst: f64 = 0.0;
    for i in 0..family.len() {
        for j in i + 1..family.len() {
            let c = &family[i] * &family[j] - &family[j] * &family[i];
            worst = worst.max(max_entry_norm(&c));
        }
    }
    Ok(worst)
}

/// `mu = log(lambda) / (2 pi i)` with real part in `[0, 1)`.
///
/// Real parts within `1e-10` of an integer are snapped to zero.
pub fn principal_exponent(lambda: Complex64) -> Complex64 {
    let mut re = lambda.arg() / (2.0 * PI);
    if re < 0.0 {
        re += 1.0;
    }
    if re.abs() < 1e-10 || (1.0 - re).abs() < 1e-10 {
        re = 0.0;
    }
    let im = -lambda.norm().ln() / (2.0 * PI);
    Complex64::new(re, im)
}

/// Tolerances for [`sbtsd`].
#[derive(Clone, Copy, Debug)]
pub struct SbtsdOptions {
    /// Largest accepted commutator entry, relative to `max(1, |A|^2)`.
    pub tol_commute: f64,
    /// Initial relative distance below which eigenvalues are clustered.
    pub tol_cluster: f64,
    /// Singular-value threshold for kernels, relative to `|A - lambda|^m`.
    pub tol_rank: f64,
    /// Largest relative cluster radius tried before giving up.
    pub max_cluster: f64,
}

impl Default for SbtsdOptions {
    fn default() -> Self {
        SbtsdOptions {
            tol_commute: 1e-10,
            tol_cluster: 1e-8,
            tol_rank: 1e-10,
            max_cluster: 1e-1,
        }
    }
}

/// A generalized eigenspace: orthonormal basis columns and the eigenvalue.
#[derive(Clone, Debug)]
pub struct EigenSpace {
    pub eigenvalue: Complex64,
    pub basis: CMatrix,
}

fn eigenvalues(a: &CMatrix) -> Result<Vec<Complex64>> {
    let r = a.nrows();
    if r == 1 {
        return Ok(vec![a[(0, 0)]]);
    }
    let schur = Schur::try_new(a.clone(), f64::EPSILON, 100_000)
        .ok_or_else(|| Error::Numerical("Schur iteration did not converge".into()))?;
    let (_, t) = schur.unpack();
    Ok((0..r).map(|i| t[(i, i)]).collect())
}

fn cluster(values: &[Complex64], tol: f64) -> Vec<Vec<usize>> {
    let n = values.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], i: usize) -> usize {
        let mut i = i;
        while p[i] != i {
            p[i] = p[p[i]];
            i = p[i];
        }
        i
    }
    for i in 0..n {
        for j in i + 1..n {
            let scale = 1f64.max(values[i].norm()).max(values[j].norm());
            if (values[i] - values[j]).norm() <= tol * scale {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut root_slot = vec![usize::MAX; n];
    for i in 0..n {
        let root = find(&mut parent, i);
        if root_slot[root] == usize::MAX {
            root_slot[root] = groups.len();
            groups.push(Vec::new());
        }
        groups[root_slot[root]].push(i);
    }
    groups
}

fn matrix_power(a: &CMatrix, k: usize) -> CMatrix {
    let mut out = identity(a.nrows());
    for _ in 0..k {
        out = &out * a;
    }
    out
}

/// Right singular vectors for the `count` smallest singular values, with the
/// full ascending singular-value list.
fn smallest_right_singular_vectors(a: &CMatrix, count: usize) -> (CMatrix, Vec<f64>) {
    let cols = a.ncols();
    let padded;
    let a = if a.nrows() < cols {
        padded = a.clone().resize_vertically(cols, ZERO);
        &padded
    } else {
        a
    };
    let svd = a.clone().svd(false, true);
    let v_t = svd.v_t.expect("requested V^T");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&i, &j| svd.singular_values[i].total_cmp(&svd.singular_values[j]));
    let values = order.iter().map(|&i| svd.singular_values[i]).collect();
    let mut basis = CMatrix::zeros(cols, count);
    for (k, &i) in order.iter().take(count).enumerate() {
        for c in 0..cols {
            basis[(c, k)] = v_t[(i, c)].conj();
        }
    }
    (basis, values)
}

/// Ordering key of an eigenvalue: principal exponent, then modulus.
fn eigen_cmp(a: Complex64, b: Complex64) -> Ordering {
    let (ma, mb) = (principal_exponent(a).re, principal_exponent(b).re);
    if (ma - mb).abs() > 1e-9 {
        return ma.total_cmp(&mb);
    }
    let (ra, rb) = (a.norm(), b.norm());
    if (ra - rb).abs() > 1e-9 * ra.max(rb).max(1.0) {
        return ra.total_cmp(&rb);
    }
    Ordering::Equal
}

fn tuple_cmp(a: &[Complex64], b: &[Complex64]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        match eigen_cmp(*x, *y) {
            Ordering::Equal => continue,
            o => return o,
        }
    }
    Ordering::Equal
}

/// Generalized eigenspaces `ker (A - lambda)^k` of a square matrix, with `k`
/// the algebraic multiplicity, ordered by eigenvalue.
///
/// Eigenvalues are clustered with the relative radius `tol_cluster`; a
/// grouping is accepted only if every cluster mean has a kernel of exactly
/// the cluster's multiplicity and the eigenspaces together are
/// well-conditioned. Otherwise the radius grows tenfold, up to
/// `max_cluster`, which recombines defective eigenvalues that rounding has
/// split apart.
pub fn generalized_eigenspaces(a: &CMatrix, opts: &SbtsdOptions) -> Result<Vec<EigenSpace>> {
    let m = a.nrows();
    let eig = eigenvalues(a)?;
    let mut tol = opts.tol_cluster;
    loop {
        let groups = cluster(&eig, tol);
        let mut spaces = Vec::with_capacity(groups.len());
        let mut consistent = true;
        for g in &groups {
            let mean = g.iter().map(|&i| eig[i]).sum::<Complex64>() / g.len() as f64;
            if g.len() == m {
                spaces.push(EigenSpace {
                    eigenvalue: mean,
                    basis: identity(m),
                });
                continue;
            }
            let shifted = a - identity(m) * mean;
            let scale = shifted.norm().max(1.0);
            // the algebraic multiplicity bounds the Jordan chain length
            let k = g.len();
            let power = matrix_power(&shifted, k);
            let (basis, sv) = smallest_right_singular_vectors(&power, k);
            let threshold = opts.tol_rank * scale.powi(k as i32);
            let kernel_dim = sv.iter().take_while(|&&s| s <= threshold).count();
            if kernel_dim != g.len() {
                consistent = false;
                break;
            }
            spaces.push(EigenSpace {
                eigenvalue: mean,
                basis,
            });
        }
        if consistent && spaces.len() > 1 {
            // rounding splits a defective eigenvalue into nearly parallel eigenvectors
            let cols: Vec<_> = spaces.iter().flat_map(|s| s.basis.column_iter()).collect();
            let joint = CMatrix::from_columns(&cols);
            consistent = singular_values_ascending(&joint)[0] >= opts.tol_rank.sqrt();
        }
        if consistent {
            spaces.sort_by(|x, y| eigen_cmp(x.eigenvalue, y.eigenvalue));
            for w in spaces.windows(2) {
                if eigen_cmp(w[0].eigenvalue, w[1].eigenvalue) == Ordering::Equal {
                    return Err(Error::Clustering(format!(
                        "distinct clusters {} and {} are indistinguishable",
                        w[0].eigenvalue, w[1].eigenvalue
                    )));
                }
            }
            return Ok(spaces);
        }
        tol *= 10.0;
        if tol > opts.max_cluster {
            return Err(Error::Clustering(format!(
                "no clustering up to relative radius {:e} matches the kernel dimensions",
                opts.max_cluster
            )));
        }
    }
}

/// Output of [`sbtsd`].
#[derive(Clone, Debug)]
pub struct SbtsdResult {
    /// `T`; its columns are the new basis of `C^r`.
    pub change_of_basis: CMatrix,
    pub change_of_basis_inverse: CMatrix,
    /// `m_1, ..., m_t`.
    pub block_sizes: Vec<usize>,
    /// `eigenvalues[i][j]` is `lambda_{i,j}`.
    pub eigenvalues: Vec<Vec<Complex64>>,
    /// `B_i = T^-1 A_i T`, cleaned to exact block upper-triangular form.
    pub transformed: Vec<CMatrix>,
    /// Block-diagonal `S_i = (B_i / lambda_i)^-1`, upper unitriangular.
    pub unipotent: Vec<CMatrix>,
    /// `exponents[i][j]` is the principal `mu_{i,j}`.
    pub exponents: Vec<Vec<Complex64>>,
    /// Largest entry of `T^-1 A_i T` that the cleaning removed, relative to
    /// `max(1, |A_i|)`.
    pub pattern_residual: f64,
}

impl SbtsdResult {
    pub fn block_count(&self) -> usize {
        self.block_sizes.len()
    }

    /// Start index of each block.
    pub fn block_offsets(&self) -> Vec<usize> {
        self.block_sizes
            .iter()
            .scan(0, |acc, &m| {
                let start = *acc;
                *acc += m;
                Some(start)
            })
            .collect()
    }

    /// Eigenvalue tuple `(lambda_{1,j}, ..., lambda_{n,j})` of block `j`.
    pub fn block_eigenvalues(&self, j: usize) -> Vec<Complex64> {
        self.eigenvalues.iter().map(|row| row[j]).collect()
    }

    /// Exponent tuple `(mu_{1,j}, ..., mu_{n,j})` of block `j`.
    pub fn block_exponents(&self, j: usize) -> Vec<Complex64> {
        self.exponents.iter().map(|row| row[j]).collect()
    }

    /// The `m_j x m_j` diagonal block `j` of a block-diagonal matrix.
    pub fn block_of(&self, m: &CMatrix, j: usize) -> CMatrix {
        let start = self.block_offsets()[j];
        let size = self.block_sizes[j];
        m.view((start, start), (size, size)).into_owned()
    }
}

/// Common-eigenvector deflation of a commuting family restricted to one
/// joint generalized eigenspace. Returns a unitary `U` with every
/// `U^* R_i U` upper triangular.
fn joint_triangularize(family: &[CMatrix], lambdas: &[Complex64]) -> CMatrix {
    let m = family[0].nrows();
    if m == 1 {
        return identity(1);
    }
    let mut stacked = CMatrix::zeros(m * family.len(), m);
    for (k, (r, &l)) in family.iter().zip(lambdas).enumerate() {
        let shifted = r - identity(m) * l;
        stacked.view_mut((k * m, 0), (m, m)).copy_from(&shifted);
    }
    let (x, _) = smallest_right_singular_vectors(&stacked, 1);
    let mut augmented = CMatrix::zeros(m, m + 1);
    augmented.column_mut(0).copy_from(&x.column(0));
    augmented.view_mut((0, 1), (m, m)).copy_from(&identity(m));
    let q = augmented.qr().q();
    let q = q.columns(0, m).into_owned();
    let reduced: Vec<CMatrix> = family
        .iter()
        .map(|r| (q.adjoint() * r * &q).view((1, 1), (m - 1, m - 1)).into_owned())
        .collect();
    let inner = joint_triangularize(&reduced, lambdas);
    let mut lift = identity(m);
    lift.view_mut((1, 1), (m - 1, m - 1)).copy_from(&inner);
    q * lift
}

/// Scales each column so that its first largest-modulus entry is real and
/// positive.
fn normalize_column_phases(t: &mut CMatrix) {
    for mut col in t.column_iter_mut() {
        let peak = col.iter().fold(0.0f64, |m, z| m.max(z.norm()));
        if peak == 0.0 {
            continue;
        }
        let pivot = col
            .iter()
            .find(|z| z.norm() >= peak * (1.0 - 1e-9))
            .copied()
            .expect("a maximal entry exists");
        let phase = pivot.conj() / pivot.norm();
        for z in col.iter_mut() {
            *z *= phase;
        }
    }
}

/// Upper-unitriangular inverse of `b / lambda`.
fn unipotent_factor(b: &CMatrix, lambda: Complex64) -> CMatrix {
    let m = b.nrows();
    let h = b.map(|z| z / lambda);
    let mut s = identity(m);
    // back substitution for h * s = I with unit diagonal
    for col in 0..m {
        for row in (0..col).rev() {
            let mut acc = ZERO;
            for k in row + 1..=col {
                acc += h[(row, k)] * s[(k, col)];
            }
            s[(row, col)] = -acc;
        }
    }
    s
}

/// Simultaneous block-triangularization with shared block sizes.
pub fn sbtsd(family: &[CMatrix], opts: &SbtsdOptions) -> Result<SbtsdResult> {
    let r = check_square_family(family)?;
    let scale = family.iter().map(max_entry_norm).fold(1.0f64, f64::max);
    let residual = commuting_residual(family)?;
    if residual > opts.tol_commute * scale * scale {
        return Err(Error::NonCommuting(residual));
    }
    for a in family {
        let smin = singular_values_ascending(a)[0];
        if smin <= 1e-12 * scale {
            return Err(Error::Singular(smin));
        }
    }

    // Successive splitting into joint generalized eigenspaces.
    let mut pieces: Vec<(CMatrix, Vec<Complex64>)> = vec![(identity(r), Vec::new())];
    for a in family {
        let mut next = Vec::new();
        for (q, tuple) in pieces {
            let restricted = q.adjoint() * a * &q;
            for space in generalized_eigenspaces(&restricted, opts)? {
                let mut t = tuple.clone();
                t.push(space.eigenvalue);
                next.push((&q * &space.basis, t));
            }
        }
        pieces = next;
    }
    pieces.sort_by(|x, y| tuple_cmp(&x.1, &y.1));

    let mut columns: Vec<CMatrix> = Vec::with_capacity(pieces.len());
    let mut block_sizes = Vec::with_capacity(pieces.len());
    for (q, tuple) in &pieces {
        let restricted: Vec<CMatrix> = family.iter().map(|a| q.adjoint() * a * q).collect();
        let u = joint_triangularize(&restricted, tuple);
        let mut basis = q * u;
        normalize_column_phases(&mut basis);
        block_sizes.push(basis.ncols());
        columns.push(basis);
    }
    if block_sizes.iter().sum::<usize>() != r {
        return Err(Error::Clustering(
            "generalized eigenspaces do not span the whole space".into(),
        ));
    }
    let mut t = CMatrix::zeros(r, r);
    let mut offset = 0;
    for basis in &columns {
        t.view_mut((0, offset), (r, basis.ncols())).copy_from(basis);
        offset += basis.ncols();
    }
    let t_inv = t
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::Numerical("change of basis is singular".into()))?;

    let offsets: Vec<usize> = block_sizes
        .iter()
        .scan(0, |acc, &m| {
            let s = *acc;
            *acc += m;
            Some(s)
        })
        .collect();
    let mut pattern_residual: f64 = 0.0;
    let mut transformed = Vec::with_capacity(family.len());
    let mut unipotent = Vec::with_capacity(family.len());
    let mut eigen_rows = Vec::with_capacity(family.len());
    let mut exponent_rows = Vec::with_capacity(family.len());
    for a in family {
        let x = &t_inv * a * &t;
        let a_scale = max_entry_norm(a).max(1.0);
        let mut b = CMatrix::zeros(r, r);
        let mut s = CMatrix::zeros(r, r);
        let mut lambdas = Vec::with_capacity(block_sizes.len());
        for (&start, &size) in offsets.iter().zip(&block_sizes) {
            let lambda = (start..start + size).map(|k| x[(k, k)]).sum::<Complex64>()
                / size as f64;
            for i in start..start + size {
                for j in i..start + size {
                    b[(i, j)] = if i == j { lambda } else { x[(i, j)] };
                }
                pattern_residual = pattern_residual.max((x[(i, i)] - lambda).norm() / a_scale);
            }
            let blk = b.view((start, start), (size, size)).into_owned();
            s.view_mut((start, start), (size, size))
                .copy_from(&unipotent_factor(&blk, lambda));
            lambdas.push(lambda);
        }
        for i in 0..r {
            for j in 0..r {
                let in_pattern = offsets
                    .iter()
                    .zip(&block_sizes)
                    .any(|(&st, &sz)| i >= st && j >= i && j < st + sz);
                if !in_pattern {
                    pattern_residual = pattern_residual.max(x[(i, j)].norm() / a_scale);
                }
            }
        }
        exponent_rows.push(lambdas.iter().map(|&l| principal_exponent(l)).collect());
        eigen_rows.push(lambdas);
        transformed.push(b);
        unipotent.push(s);
    }
    if pattern_residual > 1e-6 {
        return Err(Error::Numerical(format!(
            "block-triangular pattern violated by {pattern_residual:e}"
        )));
    }
    Ok(SbtsdResult {
        change_of_basis: t,
        change_of_basis_inverse: t_inv,
        block_sizes,
        eigenvalues: eigen_rows,
        transformed,
        unipotent,
        exponents: exponent_rows,
        pattern_residual,
    })
}

/// Which triangle holds the off-diagonal part of a triangular matrix.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Triangle {
    Upper,
    Lower,
}

fn strict_part_norms(a: &CMatrix) -> (f64, f64) {
    let r = a.nrows();
    let mut upper: f64 = 0.0;
    let mut lower: f64 = 0.0;
    for i in 0..r {
        for j in 0..r {
            if j > i {
                upper = upper.max(a[(i, j)].norm());
            } else if j < i {
                lower = lower.max(a[(i, j)].norm());
            }
        }
    }
    (upper, lower)
}

/// Side of a unitriangular matrix, or the deviation if it is not one.
pub fn unitriangular_side(u: &CMatrix, tol: f64) -> std::result::Result<Triangle, f64> {
    if u.nrows() != u.ncols() {
        return Err(f64::INFINITY);
    }
    let diag_dev = (0..u.nrows()).fold(0.0f64, |m, i| m.max((u[(i, i)] - ONE).norm()));
    let (upper, lower) = strict_part_norms(u);
    let side = if lower <= tol {
        Triangle::Upper
    } else if upper <= tol {
        Triangle::Lower
    } else {
        return Err(upper.min(lower).max(diag_dev));
    };
    if diag_dev > tol {
        return Err(diag_dev);
    }
    Ok(side)
}

fn strictly_triangular_side(n: &CMatrix, tol: f64) -> std::result::Result<Triangle, f64> {
    if n.nrows() != n.ncols() {
        return Err(f64::INFINITY);
    }
    let diag = (0..n.nrows()).fold(0.0f64, |m, i| m.max(n[(i, i)].norm()));
    let (upper, lower) = strict_part_norms(n);
    if diag > tol {
        return Err(diag);
    }
    if lower <= tol {
        Ok(Triangle::Upper)
    } else if upper <= tol {
        Ok(Triangle::Lower)
    } else {
        Err(upper.min(lower))
    }
}

fn keep_strict(a: &CMatrix, side: Triangle) -> CMatrix {
    CMatrix::from_fn(a.nrows(), a.ncols(), |i, j| match side {
        Triangle::Upper if j > i => a[(i, j)],
        Triangle::Lower if j < i => a[(i, j)],
        _ => ZERO,
    })
}

/// Logarithm of a unitriangular matrix as the finite series
/// `sum_{k<r} (-1)^{k+1} (U - I)^k / k`.
pub fn unipotent_log(u: &CMatrix) -> Result<CMatrix> {
    let side = unitriangular_side(u, 1e-10).map_err(Error::NotUnitriangular)?;
    let r = u.nrows();
    let x = keep_strict(u, side);
    let mut out = CMatrix::zeros(r, r);
    let mut power = x.clone();
    for k in 1..r.max(1) {
        let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
        out += &power * Complex64::new(sign / k as f64, 0.0);
        power = &power * &x;
    }
    Ok(keep_strict(&out, side))
}

/// Exponential of a strictly triangular matrix as the finite series
/// `sum_{k<r} N^k / k!`.
pub fn nilpotent_exp(n: &CMatrix) -> Result<CMatrix> {
    let side = strictly_triangular_side(n, 1e-10).map_err(Error::NotUnitriangular)?;
    let r = n.nrows();
    let x = keep_strict(n, side);
    let mut out = identity(r);
    let mut power = identity(r);
    let mut factorial = 1.0;
    for k in 1..r.max(1) {
        power = &power * &x;
        factorial *= k as f64;
        out += &power * Complex64::new(1.0 / factorial, 0.0);
    }
    let mut cleaned = keep_strict(&out, side);
    for i in 0..r {
        cleaned[(i, i)] = ONE;
    }
    Ok(cleaned)
}

/// Largest entry of `A^* A - I`.
pub fn unitarity_defect(a: &CMatrix) -> f64 {
    if a.nrows() != a.ncols() {
        return f64::INFINITY;
    }
    max_entry_norm(&(a.adjoint() * a - identity(a.nrows())))
}

/// Result of [`unitary_simdiag`].
#[derive(Clone, Debug)]
pub struct SimultaneousDiagonalization {
    /// Unitary `T` with every `T^* A_i T` diagonal.
    pub basis: CMatrix,
    /// `diagonals[i]` is the diagonal of `T^* A_i T`.
    pub diagonals: Vec<Vec<Complex64>>,
    /// Sizes of the runs of equal eigenvalue tuples.
    pub block_sizes: Vec<usize>,
}

/// Simultaneous unitary diagonalization of commuting unitary matrices.
pub fn unitary_simdiag(family: &[CMatrix]) -> Result<SimultaneousDiagonalization> {
    let r = check_square_family(family)?;
    for a in family {
        let d = unitarity_defect(a);
        if d > 1e-10 {
            return Err(Error::NotUnitary(d));
        }
    }
    let res = sbtsd(family, &SbtsdOptions::default())?;
    let mut basis = res.change_of_basis.clone().qr().q();
    normalize_column_phases(&mut basis);
    let mut diagonals = Vec::with_capacity(family.len());
    for a in family {
        let d = basis.adjoint() * a * &basis;
        let mut off: f64 = 0.0;
        for i in 0..r {
            for j in 0..r {
                if i != j {
                    off = off.max(d[(i, j)].norm());
                }
            }
        }
        if off > 1e-9 {
            return Err(Error::Numerical(format!(
                "unitary diagonalization left off-diagonal entry {off:e}"
            )));
        }
        diagonals.push((0..r).map(|i| d[(i, i)]).collect::<Vec<_>>());
    }
    Ok(SimultaneousDiagonalization {
        basis,
        diagonals,
        block_sizes: res.block_sizes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn principal_exponent_branch() {
        assert_eq!(principal_exponent(c(1.0)), c(0.0));
        assert!((principal_exponent(c(-1.0)).re - 0.5).abs() < 1e-15);
        let mu = principal_exponent(Complex64::new(0.0, -1.0));
        assert!((mu.re - 0.75).abs() < 1e-15);
        let near_one = Complex64::from_polar(1.0, -1e-13);
        assert_eq!(principal_exponent(near_one).re, 0.0);
        let grow = principal_exponent(c(2.0));
        assert!((grow.im + 2f64.ln() / (2.0 * PI)).abs() < 1e-15);
    }

    #[test]
    fn singular_input_rejected() {
        let a = from_real_rows(&[&[1.0, 0.0], &[0.0, 0.0]]);
        assert!(matches!(
            sbtsd(&[a], &SbtsdOptions::default()),
            Err(Error::Singular(_))
        ));
    }

    #[test]
    fn dimension_mismatch_reported() {
        let a = identity(2);
        let b = identity(3);
        assert!(matches!(
            commuting_residual(&[a, b]),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn non_unitriangular_log_rejected() {
        let a = from_real_rows(&[&[2.0, 1.0], &[0.0, 1.0]]);
        assert!(unipotent_log(&a).is_err());
        let full = from_real_rows(&[&[1.0, 1.0], &[1.0, 1.0]]);
        assert!(unipotent_log(&full).is_err());
    }

    #[test]
    fn lower_triangular_log_stays_lower() {
        let u = from_real_rows(&[&[1.0, 0.0, 0.0], &[2.0, 1.0, 0.0], &[1.0, -1.0, 1.0]]);
        let n = unipotent_log(&u).unwrap();
        assert_eq!(n[(0, 1)], ZERO);
        let back = nilpotent_exp(&n).unwrap();
        assert!(max_entry_norm(&(back - u)) < 1e-14);
    }

    #[test]
    fn norms_differ_on_ones_matrix() {
        let a = from_real_rows(&[&[1.0, 1.0], &[1.0, 1.0]]);
        assert_eq!(max_entry_norm(&a), 1.0);
        assert!((spectral_norm(&a) - 2.0).abs() < 1e-14);
        // max-entry norm is not submultiplicative: |A^2| = 2 > 1 * 1
        assert_eq!(max_entry_norm(&(&a * &a)), 2.0);
    }
}
