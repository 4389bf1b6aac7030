#![allow(dead_code)]

use std::collections::BTreeMap;
use std::f64::consts::PI;

use hmvf::field::{make_field, Field, FieldSpec};
use hmvf::lattice::{translation_lattice, SubgroupSpec, TranslationLattice};
use hmvf::linalg::{identity, singular_values_ascending, CMatrix};
use hmvf::pfe::{PfeTerm, PolynomialFourierExpansion};
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn rational() -> Field {
    make_field(FieldSpec::Rational).unwrap()
}

pub fn q5() -> Field {
    make_field(FieldSpec::Quadratic(5)).unwrap()
}

pub fn full(field: &Field) -> TranslationLattice {
    translation_lattice(field, SubgroupSpec::Full).unwrap()
}

pub fn e(x: Complex64) -> Complex64 {
    (c(0.0, 2.0 * PI) * x).exp()
}

pub fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    (a - b).iter().fold(0.0, |m, z| m.max(z.norm()))
}

pub fn sigma3(m: u64) -> u64 {
    (1..=m).filter(|d| m.is_multiple_of(*d)).map(|d| d * d * d).sum()
}

/// `1 + 240 sum sigma_3(m) q^m` summed until the tail is negligible.
pub fn e4_divisor_sum(tau: Complex64) -> Complex64 {
    let q = e(tau);
    let mut sum = c(1.0, 0.0);
    let mut qm = c(1.0, 0.0);
    for m in 1..400u64 {
        qm *= q;
        let term = qm * (240.0 * sigma3(m) as f64);
        sum += term;
        if term.norm() < 1e-20 * sum.norm() {
            break;
        }
    }
    sum
}

pub fn random_complex<R: Rng>(rng: &mut R) -> Complex64 {
    c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
}

pub fn random_matrix<R: Rng>(rng: &mut R, r: usize) -> CMatrix {
    CMatrix::from_fn(r, r, |_, _| random_complex(rng))
}

/// Random matrix with condition number at most 20.
pub fn well_conditioned<R: Rng>(rng: &mut R, r: usize) -> CMatrix {
    loop {
        let t = random_matrix(rng, r) + identity(r) * c(1.5, 0.0);
        let s = singular_values_ascending(&t);
        if s[0] > 0.0 && s[r - 1] / s[0] <= 20.0 {
            return t;
        }
    }
}

/// Random strictly upper triangular matrix.
pub fn strict_upper<R: Rng>(rng: &mut R, r: usize) -> CMatrix {
    CMatrix::from_fn(r, r, |i, j| if j > i { random_complex(rng) } else { c(0.0, 0.0) })
}

/// Commuting unitriangular matrices `I + p_i(N)` for one nilpotent `N`.
pub fn commuting_unipotents<R: Rng>(rng: &mut R, r: usize, count: usize) -> Vec<CMatrix> {
    let n = strict_upper(rng, r);
    (0..count)
        .map(|_| {
            let mut u = identity(r);
            let mut power = n.clone();
            for _ in 1..r {
                u += &power * random_complex(rng);
                power = &power * &n;
            }
            u
        })
        .collect()
}

pub fn block_diagonal(blocks: &[CMatrix]) -> CMatrix {
    let r: usize = blocks.iter().map(|b| b.nrows()).sum();
    let mut out = CMatrix::zeros(r, r);
    let mut off = 0;
    for b in blocks {
        let m = b.nrows();
        out.view_mut((off, off), (m, m)).copy_from(b);
        off += m;
    }
    out
}

pub fn unit_circle<R: Rng>(rng: &mut R) -> Complex64 {
    Complex64::from_polar(1.0, 2.0 * PI * rng.random_range(0.0..1.0))
}

/// A commuting family in disguise, with its true block data.
pub struct SbtsdInstance {
    pub family: Vec<CMatrix>,
    /// `(block size, eigenvalue tuple)` per block.
    pub blocks: Vec<(usize, Vec<Complex64>)>,
}

/// Blocks `lambda_ij (I + p_ij(N_j))` with pairwise separated eigenvalue
/// tuples, conjugated by a random well-conditioned matrix.
pub fn random_sbtsd_instance(rng: &mut ChaCha8Rng) -> SbtsdInstance {
    let count = rng.random_range(1..=3);
    let r = rng.random_range(1..=6);
    let mut sizes = Vec::new();
    let mut left = r;
    while left > 0 {
        let m = rng.random_range(1..=left.min(3));
        sizes.push(m);
        left -= m;
    }
    let mut tuples: Vec<Vec<Complex64>> = Vec::new();
    while tuples.len() < sizes.len() {
        let cand: Vec<Complex64> = (0..count)
            .map(|_| unit_circle(rng) * rng.random_range(0.5..2.0))
            .collect();
        let separated = tuples.iter().all(|t| {
            t.iter().zip(&cand).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max) > 0.3
        });
        if separated {
            tuples.push(cand);
        }
    }
    let mut per_matrix: Vec<Vec<CMatrix>> = vec![Vec::new(); count];
    for (m, lambda) in sizes.iter().zip(&tuples) {
        let us = commuting_unipotents(rng, *m, count);
        for i in 0..count {
            per_matrix[i].push(&us[i] * lambda[i]);
        }
    }
    let t = well_conditioned(rng, r);
    let tinv = t.clone().try_inverse().unwrap();
    let family = per_matrix
        .iter()
        .map(|blocks| &t * block_diagonal(blocks) * &tinv)
        .collect();
    SbtsdInstance {
        family,
        blocks: sizes.into_iter().zip(tuples).collect(),
    }
}

/// Whether two `(size, eigenvalue tuple)` multisets agree up to `tol`.
pub fn same_block_multiset(a: &[(usize, Vec<Complex64>)], b: &[(usize, Vec<Complex64>)], tol: f64) -> bool {
    if a.len() != b.len() {
        return false;
    }
    let mut used = vec![false; b.len()];
    a.iter().all(|(m, l)| {
        let hit = b.iter().enumerate().position(|(k, (m2, l2))| {
            !used[k]
                && m == m2
                && l.iter().zip(l2).all(|(x, y)| (x - y).norm() <= tol)
        });
        match hit {
            Some(k) => {
                used[k] = true;
                true
            }
            None => false,
        }
    })
}

/// Dual coordinates whose real image lies in the box `[-bound, bound]^n`,
/// found by scanning integer coordinates.
pub fn dual_brute_force(lattice: &TranslationLattice, bound: f64, scan: i64) -> Vec<Vec<i64>> {
    let n = lattice.rank();
    let d = lattice.dual_matrix();
    let mut out = Vec::new();
    let mut m = vec![-scan; n];
    loop {
        let inside = (0..n).all(|j| {
            let x: f64 = (0..n).map(|k| d[(j, k)] * m[k] as f64).sum();
            x.abs() <= bound + 1e-12
        });
        if inside {
            out.push(m.clone());
        }
        let mut k = n;
        loop {
            if k == 0 {
                return out;
            }
            k -= 1;
            if m[k] < scan {
                m[k] += 1;
                break;
            }
            m[k] = -scan;
        }
    }
}

/// Real vector `D m` computed from the dual matrix.
pub fn dual_real(lattice: &TranslationLattice, m: &[i64]) -> Vec<f64> {
    let d = lattice.dual_matrix();
    let n = lattice.rank();
    (0..n).map(|j| (0..n).map(|k| d[(j, k)] * m[k] as f64).sum()).collect()
}

/// `u` with pairings `u . v_i = w_i`, computed as `D w`.
pub fn shift_from_pairings(lattice: &TranslationLattice, w: &[f64]) -> Vec<Complex64> {
    let d = lattice.dual_matrix();
    let n = lattice.rank();
    (0..n)
        .map(|j| c((0..n).map(|k| d[(j, k)] * w[k]).sum(), 0.0))
        .collect()
}

/// Frequencies `v` kept on the well-conditioned side for extraction at
/// `y0 = 1`: the first dual coordinate in `{-1, 0}` and the rest within
/// `[-4, 4]`.
pub fn friendly_dual<R: Rng>(rng: &mut R, n: usize) -> Vec<i64> {
    let mut v = vec![rng.random_range(-1..=0)];
    for _ in 1..n {
        v.push(rng.random_range(-4..=4));
    }
    v
}

/// Term map keyed by `(snapped pairings of u, t, v)`, summing duplicates.
pub type TermMap = BTreeMap<(Vec<i64>, Vec<u32>, Vec<i64>), Complex64>;

pub fn term_map(lattice: &TranslationLattice, terms: &[PfeTerm]) -> TermMap {
    let mut out = TermMap::new();
    for term in terms {
        let mut v = term.v.clone();
        let mut key_u = Vec::new();
        for (i, vi) in v.iter_mut().enumerate() {
            let basis = lattice.basis_vector(i);
            let w: f64 = term.u.iter().zip(&basis).map(|(u, x)| u.re * x).sum();
            let k = w.floor();
            let frac = w - k;
            let (frac, k) = if frac > 1.0 - 1e-9 { (0.0, k + 1.0) } else { (frac, k) };
            *vi += k as i64;
            key_u.push((frac * 1e6).round() as i64);
        }
        *out.entry((key_u, term.t.clone(), v)).or_insert(c(0.0, 0.0)) += term.a;
    }
    out
}

/// Largest coefficient difference between two term maps.
pub fn term_map_distance(a: &TermMap, b: &TermMap) -> f64 {
    let mut worst: f64 = 0.0;
    for (k, x) in a {
        worst = worst.max((x - b.get(k).copied().unwrap_or_default()).norm());
    }
    for (k, y) in b {
        if !a.contains_key(k) {
            worst = worst.max(y.norm());
        }
    }
    worst
}

fn binomial(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

fn factorial(k: u32) -> f64 {
    (1..=k).fold(1.0, |acc, i| acc * i as f64)
}

/// A column with a Jordan translation law and its expansion computed by
/// hand.
pub struct SyntheticColumn {
    pub lattice: TranslationLattice,
    pub translations: Vec<CMatrix>,
    /// `source[k]` lists the terms of component `k`.
    pub source: Vec<Vec<PfeTerm>>,
}

impl SyntheticColumn {
    pub fn r(&self) -> usize {
        self.source.len()
    }

    pub fn eval(&self, tau: &[Complex64]) -> Vec<Complex64> {
        self.source
            .iter()
            .map(|terms| {
                terms
                    .iter()
                    .map(|t| {
                        let f: Vec<Complex64> = dual_real(&self.lattice, &t.v)
                            .iter()
                            .zip(&t.u)
                            .map(|(x, u)| u + x)
                            .collect();
                        let mono: Complex64 = tau
                            .iter()
                            .zip(&t.t)
                            .map(|(z, &p)| z.powu(p))
                            .product();
                        t.a * mono * e(dot(&f, tau))
                    })
                    .sum()
            })
            .collect()
    }
}

/// Builds `g = T l` where on block `j` the coordinates are
/// `l = exp(-s(tau) N_j) h` with `s(tau) = sum_i c_i (M^-1 tau)_i` and `h`
/// twisted-periodic with exponent `mu_j`. Then `g(tau + v_i) = A_i g(tau)`
/// with `A_i = T diag(lambda_ij exp(-c_ij N_j)) T^-1`.
pub fn synthetic_column(rng: &mut ChaCha8Rng, field: &Field, max_block: usize) -> SyntheticColumn {
    let lattice = full(field);
    let n = lattice.rank();
    let minv = lattice.basis_inverse().clone();
    let block_count = rng.random_range(1..=2);
    let sizes: Vec<usize> = (0..block_count).map(|_| rng.random_range(1..=max_block)).collect();
    let r: usize = sizes.iter().sum();
    // distinct dyadic exponents per block keep the shifts apart
    let mut mus: Vec<Vec<f64>> = Vec::new();
    while mus.len() < block_count {
        let mu: Vec<f64> = (0..n).map(|_| rng.random_range(0..16) as f64 / 16.0).collect();
        if !mus.contains(&mu) {
            mus.push(mu);
        }
    }
    let t = well_conditioned(rng, r);
    let tinv = t.clone().try_inverse().unwrap();
    let mut blocks_per_translation: Vec<Vec<CMatrix>> = vec![Vec::new(); n];
    let mut source: Vec<Vec<PfeTerm>> = vec![Vec::new(); r];
    let mut offset = 0;
    for (j, &m) in sizes.iter().enumerate() {
        let nil = CMatrix::from_fn(m, m, |a, b| {
            if b == a + 1 {
                c(rng.random_range(0.5..1.5), 0.0)
            } else if b > a + 1 {
                c(rng.random_range(-0.5..0.5), 0.0)
            } else {
                c(0.0, 0.0)
            }
        });
        let coef: Vec<f64> = (0..n).map(|_| rng.random_range(0.5..1.5)).collect();
        for i in 0..n {
            let lambda = e(c(mus[j][i], 0.0));
            // exp(-c_i N)
            let mut x = identity(m);
            let mut power = identity(m);
            for p in 1..m as u32 {
                power = &power * &nil;
                x += &power * c((-coef[i]).powi(p as i32) / factorial(p), 0.0);
            }
            blocks_per_translation[i].push(x * lambda);
        }
        // s(tau) = sum_j w_j tau_j
        let w: Vec<f64> = (0..n).map(|col| (0..n).map(|i| coef[i] * minv[(i, col)]).sum()).collect();
        let u = shift_from_pairings(&lattice, &mus[j]);
        // h_b as a sum of a few twisted exponentials
        let h: Vec<Vec<(Vec<i64>, Complex64)>> = (0..m)
            .map(|_| {
                let mut terms: Vec<(Vec<i64>, Complex64)> = Vec::new();
                for _ in 0..rng.random_range(1..=3) {
                    let mut v = friendly_dual(rng, n);
                    // bound the growth spread between blocks at the probe heights
                    if v[0] as f64 + mus[j][0] < -0.5 {
                        v[0] += 1;
                    }
                    if terms.iter().all(|(x, _)| *x != v) {
                        terms.push((v, random_complex(rng) + c(0.5, 0.0)));
                    }
                }
                terms
            })
            .collect();
        // l_a = sum_b sum_p (-s)^p / p! (N^p)_{ab} h_b
        let mut power = identity(m);
        for p in 0..m as u32 {
            if p > 0 {
                power = &power * &nil;
            }
            let sign = if p % 2 == 0 { 1.0 } else { -1.0 };
            // multinomial expansion of s^p
            let mut monos: Vec<(Vec<u32>, f64)> = Vec::new();
            if n == 1 {
                monos.push((vec![p], w[0].powi(p as i32)));
            } else {
                for a in 0..=p {
                    monos.push((vec![a, p - a], binomial(p, a) * w[0].powi(a as i32) * w[1].powi((p - a) as i32)));
                }
            }
            for a in 0..m {
                for b in 0..m {
                    let nab = power[(a, b)];
                    if nab.norm() == 0.0 {
                        continue;
                    }
                    for (v, hv) in &h[b] {
                        for (tt, mc) in &monos {
                            let base = nab * hv * (sign * mc / factorial(p));
                            for (k, row) in source.iter_mut().enumerate() {
                                row.push(PfeTerm {
                                    u: u.clone(),
                                    t: tt.clone(),
                                    v: v.clone(),
                                    a: t[(k, offset + a)] * base,
                                });
                            }
                        }
                    }
                }
            }
        }
        offset += m;
    }
    let translations = blocks_per_translation
        .iter()
        .map(|blocks| &t * block_diagonal(blocks) * &tinv)
        .collect();
    SyntheticColumn {
        lattice,
        translations,
        source,
    }
}

/// A random canonical-friendly expansion with dyadic shift pairings.
pub fn random_expansion(rng: &mut ChaCha8Rng, lattice: &TranslationLattice, count: usize) -> PolynomialFourierExpansion {
    let n = lattice.rank();
    let terms = (0..count)
        .map(|_| {
            let w: Vec<f64> = (0..n).map(|_| rng.random_range(0..64) as f64 / 64.0).collect();
            PfeTerm {
                u: shift_from_pairings(lattice, &w),
                t: (0..n).map(|_| rng.random_range(0..3)).collect(),
                v: (0..n).map(|_| rng.random_range(-3..=3)).collect(),
                a: random_complex(rng) + c(1.5, 0.0),
            }
        })
        .collect();
    PolynomialFourierExpansion::new(lattice, terms)
}
