//! Fourier coefficients of twisted-periodic functions.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::lattice::{DualVector, TranslationLattice};
use crate::modfun::sample_points;

/// Seed of the periodicity probe points.
const PROBE_SEED: u64 = 0x5eed_0001;

/// Quadrature parameters for [`twisted_fourier_extract`].
#[derive(Clone, Debug)]
pub struct ExtractOptions {
    /// Height of the sampling contour, one entry per coordinate.
    pub y0: Vec<f64>,
    /// Samples per lattice direction; a power of two, at least 16.
    pub grid: usize,
    /// Only dual vectors with `max_j |v_j| <= dual_bound` are returned.
    pub dual_bound: f64,
    /// Relative tolerance of the periodicity probe.
    pub tol_periodic: f64,
    /// Transform entries below `noise_rel` times the largest sample, or the
    /// largest reported input size, are treated as zero.
    pub noise_rel: f64,
}

impl ExtractOptions {
    pub fn for_rank(n: usize) -> Self {
        ExtractOptions {
            y0: vec![1.0; n],
            grid: 64,
            dual_bound: 8.0,
            tol_periodic: 1e-8,
            noise_rel: 1e-12,
        }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if self.y0.len() != n || self.y0.iter().any(|&y| !(y > 0.0 && y.is_finite())) {
            return Err(Error::InvalidInput("y0 must have one positive entry per coordinate".into()));
        }
        if self.grid < 16 || !self.grid.is_power_of_two() {
            return Err(Error::InvalidInput(format!(
                "grid {} is not a power of two >= 16",
                self.grid
            )));
        }
        if !(self.dual_bound >= 0.0) || !(self.tol_periodic > 0.0) || !(self.noise_rel >= 0.0) {
            return Err(Error::InvalidInput("extraction tolerances out of range".into()));
        }
        Ok(())
    }
}

/// Result of [`twisted_fourier_extract`].
#[derive(Clone, Debug)]
pub struct Extraction {
    /// `(v, a_v)` in lexicographic order of the dual coordinates.
    pub coefficients: Vec<(DualVector, Complex64)>,
    /// The shift `u = mu M^-1`.
    pub shift: Vec<Complex64>,
    /// Largest transform entry on the Nyquist shell relative to the largest
    /// entry overall.
    pub nyquist_ratio: f64,
    /// Largest relative residual of the periodicity probe.
    pub periodicity_residual: f64,
    pub warnings: Vec<String>,
}

impl Extraction {
    pub fn coefficient(&self, coords: &[i64]) -> Complex64 {
        self.coefficients
            .iter()
            .find(|(v, _)| v.coords() == coords)
            .map_or(Complex64::new(0.0, 0.0), |(_, a)| *a)
    }
}

pub type ScalarFn<'a> = dyn Fn(&[Complex64]) -> Result<Complex64> + Sync + 'a;
pub type VectorFn<'a> = dyn Fn(&[Complex64]) -> Result<Vec<Complex64>> + Sync + 'a;
/// Values together with the size of the inputs they were computed from.
pub type ScaledFn<'a> = dyn Fn(&[Complex64]) -> Result<(Vec<Complex64>, f64)> + Sync + 'a;

fn norm(v: impl Iterator<Item = Complex64>) -> f64 {
    v.map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Checks `f(tau + v_i) = exp(2 pi i mu_i) f(tau)` at seeded probe points and
/// returns the largest residual relative to the Euclidean norm of the values.
pub fn periodicity_residual(f: &VectorFn, lattice: &TranslationLattice, mu: &[Complex64]) -> Result<f64> {
    let scaled = |tau: &[Complex64]| -> Result<(Vec<Complex64>, f64)> { Ok((f(tau)?, 0.0)) };
    scaled_periodicity_residual(&scaled, lattice, mu)
}

/// [`periodicity_residual`] for a function that also reports the size of the
/// inputs its values were computed from; the residual is taken relative to
/// the larger of the two, so values formed with cancellation are judged
/// against their inputs.
pub fn scaled_periodicity_residual(f: &ScaledFn, lattice: &TranslationLattice, mu: &[Complex64]) -> Result<f64> {
    let n = lattice.rank();
    let mut worst: f64 = 0.0;
    for tau in sample_points(n, 5, PROBE_SEED) {
        let (base, base_scale) = f(&tau)?;
        for (i, m) in mu.iter().enumerate() {
            let v = lattice.basis_vector(i);
            let shifted: Vec<Complex64> = tau.iter().zip(&v).map(|(z, x)| z + x).collect();
            let (moved, moved_scale) = f(&shifted)?;
            let factor = (Complex64::new(0.0, 2.0 * PI) * m).exp();
            let diff = norm(moved.iter().zip(&base).map(|(mv, b)| mv - factor * b));
            if diff > 0.0 {
                let scale = norm(moved.iter().copied())
                    .max(norm(base.iter().copied()))
                    .max(base_scale)
                    .max(moved_scale);
                worst = worst.max(diff / scale);
            }
        }
    }
    Ok(worst)
}

/// In-place n-dimensional forward DFT of a row-major `grid^n` array, scaled
/// by `grid^-n`.
fn dft_nd(data: &mut [Complex64], n: usize, grid: usize) {
    let fft = FftPlanner::<f64>::new().plan_fft_forward(grid);
    let mut line = vec![Complex64::new(0.0, 0.0); grid];
    let total = data.len();
    for axis in 0..n {
        let stride = grid.pow((n - 1 - axis) as u32);
        for start in 0..total {
            // first element of each line along this axis
            if !(start / stride).is_multiple_of(grid) {
                continue;
            }
            for (k, slot) in line.iter_mut().enumerate() {
                *slot = data[start + k * stride];
            }
            fft.process(&mut line);
            for (k, value) in line.iter().enumerate() {
                data[start + k * stride] = *value;
            }
        }
    }
    let scale = 1.0 / total as f64;
    for z in data.iter_mut() {
        *z *= scale;
    }
}

/// Coefficients `a_v` of `f(tau) = sum_v a_v exp(2 pi i (v + mu M^-1) . tau)`
/// for a function with `f(tau + v_i) = exp(2 pi i mu_i) f(tau)`.
///
/// The function is untwisted, sampled on the grid `M (j / N) + i y0` over one
/// lattice cell and transformed; the returned coefficients are those of dual
/// vectors inside the box `dual_bound` whose coordinates fit the grid.
pub fn twisted_fourier_extract(
    f: &ScalarFn,
    lattice: &TranslationLattice,
    mu: &[Complex64],
    opts: &ExtractOptions,
) -> Result<Extraction> {
    let wrapped = |tau: &[Complex64]| -> Result<Vec<Complex64>> { Ok(vec![f(tau)?]) };
    Ok(extract_components(&wrapped, 1, lattice, mu, opts)?.remove(0))
}

/// [`twisted_fourier_extract`] for every component of a vector-valued
/// function sharing one exponent, sampling the function once.
pub fn extract_components(
    f: &VectorFn,
    count: usize,
    lattice: &TranslationLattice,
    mu: &[Complex64],
    opts: &ExtractOptions,
) -> Result<Vec<Extraction>> {
    let scaled = |tau: &[Complex64]| -> Result<(Vec<Complex64>, f64)> { Ok((f(tau)?, 0.0)) };
    extract_components_scaled(&scaled, count, lattice, mu, opts)
}

/// [`extract_components`] for a function that also reports the size of its
/// inputs. Both the periodicity probe and the noise floor are measured
/// against that size, see [`scaled_periodicity_residual`].
pub fn extract_components_scaled(
    f: &ScaledFn,
    count: usize,
    lattice: &TranslationLattice,
    mu: &[Complex64],
    opts: &ExtractOptions,
) -> Result<Vec<Extraction>> {
    let n = lattice.rank();
    opts.validate(n)?;
    if mu.len() != n {
        return Err(Error::DimensionMismatch("exponent length".into()));
    }
    let probe = scaled_periodicity_residual(f, lattice, mu)?;
    if probe > opts.tol_periodic {
        return Err(Error::NotTwistedPeriodic(probe));
    }
    let shift = lattice.from_basis_pairings(mu);
    let grid = opts.grid;
    let total = grid.pow(n as u32);
    let m = lattice.basis_matrix();
    let samples: Vec<Result<(Vec<Complex64>, f64)>> = (0..total)
        .into_par_iter()
        .map(|flat| {
            let mut idx = vec![0usize; n];
            let mut rest = flat;
            for k in (0..n).rev() {
                idx[k] = rest % grid;
                rest /= grid;
            }
            let tau: Vec<Complex64> = (0..n)
                .map(|r| {
                    let x: f64 = (0..n).map(|c| m[(r, c)] * idx[c] as f64 / grid as f64).sum();
                    Complex64::new(x, opts.y0[r])
                })
                .collect();
            let untwist = (Complex64::new(0.0, -2.0 * PI) * dot(&shift, &tau)).exp();
            let (values, scale) = f(&tau)?;
            if values.len() != count {
                return Err(Error::DimensionMismatch(format!(
                    "function returned {} components, expected {count}",
                    values.len()
                )));
            }
            Ok((values.into_iter().map(|z| z * untwist).collect(), scale * untwist.norm()))
        })
        .collect();
    let samples = samples.into_iter().collect::<Result<Vec<_>>>()?;
    let input_peak = samples.iter().fold(0.0f64, |acc, s| acc.max(s.1));
    let dual: Vec<DualVector> = lattice
        .enumerate_dual(opts.dual_bound)
        .into_iter()
        .filter(|v| v.coords().iter().all(|c| c.abs() < (grid / 2) as i64))
        .collect();
    (0..count)
        .map(|k| {
            let mut data: Vec<Complex64> = samples.iter().map(|s| s.0[k]).collect();
            if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                return Err(Error::Numerical("non-finite sample during extraction".into()));
            }
            let peak_sample = data.iter().fold(input_peak, |acc, z| acc.max(z.norm()));
            dft_nd(&mut data, n, grid);
            Ok(collect_coefficients(&data, &dual, n, grid, peak_sample, &shift, probe, opts))
        })
        .collect()
}

#[allow(clippy::too_many_arguments)]
fn collect_coefficients(
    data: &[Complex64],
    dual: &[DualVector],
    n: usize,
    grid: usize,
    peak_sample: f64,
    shift: &[Complex64],
    probe: f64,
    opts: &ExtractOptions,
) -> Extraction {
    let index_of = |coords: &[i64]| -> usize {
        coords
            .iter()
            .fold(0usize, |acc, &c| acc * grid + c.rem_euclid(grid as i64) as usize)
    };
    let peak = data.iter().fold(0.0f64, |acc, z| acc.max(z.norm()));
    let mut shell: f64 = 0.0;
    for (flat, z) in data.iter().enumerate() {
        let mut rest = flat;
        let mut on_shell = false;
        for _ in 0..n {
            if rest % grid == grid / 2 {
                on_shell = true;
            }
            rest /= grid;
        }
        if on_shell {
            shell = shell.max(z.norm());
        }
    }
    let nyquist_ratio = if peak > 0.0 { shell / peak } else { 0.0 };
    let mut warnings = Vec::new();
    if nyquist_ratio > 1e-9 {
        warnings.push(format!(
            "possible aliasing: Nyquist shell carries {nyquist_ratio:.3e} of the peak coefficient"
        ));
    }
    let floor = opts.noise_rel * peak_sample;
    let coefficients = dual
        .iter()
        .map(|v| {
            let raw = data[index_of(v.coords())];
            let a = if raw.norm() <= floor {
                Complex64::new(0.0, 0.0)
            } else {
                // undo the contour damping exp(-2 pi v . y0)
                let damping: f64 = v.real().iter().zip(&opts.y0).map(|(x, y)| x * y).sum();
                raw * (2.0 * PI * damping).exp()
            };
            (v.clone(), a)
        })
        .collect();
    Extraction {
        coefficients,
        shift: shift.to_vec(),
        nyquist_ratio,
        periodicity_residual: probe,
        warnings,
    }
}
