//! Exact arithmetic in `Q` and in the norm-Euclidean real quadratic fields
//! `Q(sqrt d)`, `d in {2, 3, 5, 13}`.
//!
//! Elements of the ring of integers are stored as integer coordinates
//! `a + b*w` with respect to the integral basis `{1, w}`, where
//! `w = sqrt d` for `d = 2, 3 (mod 4)` and `w = (1 + sqrt d)/2` for
//! `d = 1 (mod 4)`. Ring operations never touch floating point. The two real
//! embeddings of `w` are carried as fixed-point decimals with at least 50
//! digits and are rounded to `f64` only when a caller asks for embedded
//! coordinates.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_traits::Signed;

use crate::error::{Error, Result};

/// Default number of decimal digits carried for embedding values.
pub const DEFAULT_PRECISION_DIGITS: u32 = 60;

/// Environment variable overriding [`DEFAULT_PRECISION_DIGITS`].
pub const PRECISION_ENV: &str = "HMVF_PRECISION";

/// Discriminants of the supported real quadratic fields.
pub const SUPPORTED_DISCRIMINANTS: [i64; 4] = [2, 3, 5, 13];

/// Working precision in decimal digits, honouring `HMVF_PRECISION`.
///
/// Values below 20 digits are raised to 20 since the double-double split of
/// the embedding needs at least that many.
pub fn working_precision() -> u32 {
    std::env::var(PRECISION_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<u32>().ok())
        .map(|p| p.clamp(20, 1000))
        .unwrap_or(DEFAULT_PRECISION_DIGITS)
}

/// A real number stored as `mantissa * 10^-digits`.
#[derive(Clone, PartialEq, Eq)]
pub struct FixedReal {
    mantissa: BigInt,
    digits: u32,
}

impl FixedReal {
    fn from_integer(n: i64, digits: u32) -> Self {
        FixedReal {
            mantissa: BigInt::from(n) * BigInt::from(10u32).pow(digits),
            digits,
        }
    }

    /// `floor(sqrt(n) * 10^digits)`.
    fn sqrt_of(n: i64, digits: u32) -> Self {
        let scaled = BigInt::from(n) * BigInt::from(10u32).pow(2 * digits);
        FixedReal {
            mantissa: scaled.sqrt(),
            digits,
        }
    }

    fn add(&self, other: &FixedReal) -> FixedReal {
        debug_assert_eq!(self.digits, other.digits);
        FixedReal {
            mantissa: &self.mantissa + &other.mantissa,
            digits: self.digits,
        }
    }

    fn sub(&self, other: &FixedReal) -> FixedReal {
        debug_assert_eq!(self.digits, other.digits);
        FixedReal {
            mantissa: &self.mantissa - &other.mantissa,
            digits: self.digits,
        }
    }

    fn scale(&self, k: i64) -> FixedReal {
        FixedReal {
            mantissa: &self.mantissa * BigInt::from(k),
            digits: self.digits,
        }
    }

    fn halve(&self) -> FixedReal {
        FixedReal {
            mantissa: &self.mantissa / BigInt::from(2),
            digits: self.digits,
        }
    }

    /// Number of fractional decimal digits carried.
    pub fn digits(&self) -> u32 {
        self.digits
    }

    /// Correctly rounded conversion to `f64`.
    pub fn to_f64(&self) -> f64 {
        self.to_decimal_string()
            .parse::<f64>()
            .expect("fixed-point decimal always parses")
    }

    /// Full-precision decimal expansion.
    pub fn to_decimal_string(&self) -> String {
        let neg = self.mantissa.is_negative();
        let digits = self.mantissa.abs().to_string();
        let width = self.digits as usize;
        let padded = if digits.len() <= width {
            format!("{}{}", "0".repeat(width + 1 - digits.len()), digits)
        } else {
            digits
        };
        let (int_part, frac_part) = padded.split_at(padded.len() - width);
        format!("{}{}.{}", if neg { "-" } else { "" }, int_part, frac_part)
    }
}

impl fmt::Debug for FixedReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_decimal_string())
    }
}

/// An element `a + b*w` of the ring of integers.
///
/// For `F = Q` the second coordinate is always zero.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct FieldElement {
    pub a: i64,
    pub b: i64,
}

impl FieldElement {
    pub const ZERO: FieldElement = FieldElement { a: 0, b: 0 };
    pub const ONE: FieldElement = FieldElement { a: 1, b: 0 };

    pub const fn new(a: i64, b: i64) -> Self {
        FieldElement { a, b }
    }

    pub const fn integer(a: i64) -> Self {
        FieldElement { a, b: 0 }
    }

    pub fn is_zero(&self) -> bool {
        self.a == 0 && self.b == 0
    }
}

impl std::ops::Add for FieldElement {
    type Output = FieldElement;
    fn add(self, o: FieldElement) -> FieldElement {
        FieldElement::new(self.a + o.a, self.b + o.b)
    }
}

impl std::ops::Sub for FieldElement {
    type Output = FieldElement;
    fn sub(self, o: FieldElement) -> FieldElement {
        FieldElement::new(self.a - o.a, self.b - o.b)
    }
}

impl std::ops::Neg for FieldElement {
    type Output = FieldElement;
    fn neg(self) -> FieldElement {
        FieldElement::new(-self.a, -self.b)
    }
}

/// Which field is meant by a spec string.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum FieldSpec {
    Rational,
    Quadratic(i64),
}

impl fmt::Display for FieldSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FieldSpec::Rational => write!(f, "Q"),
            FieldSpec::Quadratic(d) => write!(f, "Q(sqrt:{d})"),
        }
    }
}

impl FromStr for FieldSpec {
    type Err = Error;

    /// Parses `"Q"` or `"Q(sqrt:d)"`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "Q" {
            return Ok(FieldSpec::Rational);
        }
        let inner = s
            .strip_prefix("Q(sqrt:")
            .and_then(|r| r.strip_suffix(')'))
            .ok_or_else(|| Error::InvalidInput(format!("bad field spec {s:?}")))?;
        let d = inner
            .trim()
            .parse::<i64>()
            .map_err(|_| Error::InvalidInput(format!("bad discriminant in {s:?}")))?;
        Ok(FieldSpec::Quadratic(d))
    }
}

/// `F = Q` or a supported real quadratic field, with its embedding data.
#[derive(Clone)]
pub struct Field {
    spec: FieldSpec,
    /// Trace and norm of `w`, i.e. `w^2 = trace*w - norm`.
    omega_trace: i64,
    omega_norm: i64,
    sigma_exact: Vec<FixedReal>,
    /// Double-double split of each embedding of `w`.
    sigma_hi: Vec<f64>,
    sigma_lo: Vec<f64>,
    fundamental_unit: Option<FieldElement>,
}

impl fmt::Debug for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Field")
            .field("spec", &self.spec)
            .field("sigma", &self.sigma_hi)
            .finish()
    }
}

impl PartialEq for Field {
    fn eq(&self, other: &Self) -> bool {
        self.spec == other.spec
    }
}

impl Eq for Field {}

fn is_squarefree(d: i64) -> bool {
    let mut p = 2;
    while p * p <= d {
        if d % (p * p) == 0 {
            return false;
        }
        p += 1;
    }
    true
}

/// Builds `Q` or `Q(sqrt d)`.
pub fn make_field(spec: FieldSpec) -> Result<Field> {
    make_field_with_precision(spec, working_precision())
}

pub fn make_field_with_precision(spec: FieldSpec, digits: u32) -> Result<Field> {
    match spec {
        FieldSpec::Rational => {
            let one = FixedReal::from_integer(1, digits);
            Ok(Field {
                spec,
                omega_trace: 0,
                omega_norm: 0,
                sigma_exact: vec![one],
                sigma_hi: vec![1.0],
                sigma_lo: vec![0.0],
                fundamental_unit: None,
            })
        }
        FieldSpec::Quadratic(d) => {
            if d < 2 || !is_squarefree(d) {
                return Err(Error::UnsupportedField(format!(
                    "{d} is not a squarefree integer >= 2"
                )));
            }
            if !SUPPORTED_DISCRIMINANTS.contains(&d) {
                return Err(Error::UnsupportedField(format!(
                    "Q(sqrt {d}) is outside the norm-Euclidean set {SUPPORTED_DISCRIMINANTS:?}"
                )));
            }
            let root = FixedReal::sqrt_of(d, digits);
            let (trace, norm, s1, s2) = if d % 4 == 1 {
                let one = FixedReal::from_integer(1, digits);
                (1, (1 - d) / 4, one.add(&root).halve(), one.sub(&root).halve())
            } else {
                (0, -d, root.clone(), root.scale(-1))
            };
            let unit = match d {
                2 => FieldElement::new(1, 1),
                3 => FieldElement::new(2, 1),
                5 => FieldElement::new(0, 1),
                13 => FieldElement::new(1, 1),
                _ => unreachable!(),
            };
            let split = |x: &FixedReal| {
                let hi = x.to_f64();
                let hi_exact = parse_fixed(&format!("{hi:.40}"), digits);
                (hi, x.sub(&hi_exact).to_f64())
            };
            let (h1, l1) = split(&s1);
            let (h2, l2) = split(&s2);
            Ok(Field {
                spec,
                omega_trace: trace,
                omega_norm: norm,
                sigma_exact: vec![s1, s2],
                sigma_hi: vec![h1, h2],
                sigma_lo: vec![l1, l2],
                fundamental_unit: Some(unit),
            })
        }
    }
}

fn parse_fixed(s: &str, digits: u32) -> FixedReal {
    let neg = s.starts_with('-');
    let s = s.trim_start_matches('-');
    let (int_part, frac) = s.split_once('.').unwrap_or((s, ""));
    let mut frac = frac.to_string();
    frac.truncate(digits as usize);
    while frac.len() < digits as usize {
        frac.push('0');
    }
    let m: BigInt = format!("{int_part}{frac}").parse().expect("decimal digits");
    FixedReal {
        mantissa: if neg { -m } else { m },
        digits,
    }
}

impl Field {
    pub fn spec(&self) -> FieldSpec {
        self.spec
    }

    /// Degree `n = [F : Q]`.
    pub fn degree(&self) -> usize {
        self.sigma_hi.len()
    }

    pub fn is_rational(&self) -> bool {
        self.spec == FieldSpec::Rational
    }

    /// Trace of the integral generator `w`.
    pub fn omega_trace(&self) -> i64 {
        self.omega_trace
    }

    /// Norm of the integral generator `w`.
    pub fn omega_norm(&self) -> i64 {
        self.omega_norm
    }

    /// Embedding values `sigma_j(w)` at working precision.
    pub fn omega_embeddings_exact(&self) -> &[FixedReal] {
        &self.sigma_exact
    }

    /// Embedding values `sigma_j(w)` rounded to `f64`.
    pub fn omega_embeddings(&self) -> &[f64] {
        &self.sigma_hi
    }

    pub fn precision_digits(&self) -> u32 {
        self.sigma_exact[0].digits()
    }

    /// Fundamental unit for the quadratic fields (`None` for `Q`).
    pub fn fundamental_unit(&self) -> Option<FieldElement> {
        self.fundamental_unit
    }

    /// Builds `a + b*w`, folding `b` into `a` for `Q` where `w = 1`.
    pub fn element(&self, a: i64, b: i64) -> FieldElement {
        if self.is_rational() {
            FieldElement::new(a + b, 0)
        } else {
            FieldElement::new(a, b)
        }
    }

    /// The generator `w` as an element.
    pub fn omega(&self) -> FieldElement {
        self.element(0, 1)
    }

    pub fn mul(&self, x: FieldElement, y: FieldElement) -> FieldElement {
        let bd = x.b * y.b;
        FieldElement::new(
            x.a * y.a - bd * self.omega_norm,
            x.a * y.b + x.b * y.a + bd * self.omega_trace,
        )
    }

    pub fn conjugate(&self, x: FieldElement) -> FieldElement {
        if self.is_rational() {
            x
        } else {
            FieldElement::new(x.a + x.b * self.omega_trace, -x.b)
        }
    }

    /// Exact norm `sigma_1(x) * ... * sigma_n(x)`.
    pub fn norm(&self, x: FieldElement) -> i128 {
        if self.is_rational() {
            x.a as i128
        } else {
            self.norm_form(x)
        }
    }

    /// `x * conj(x) = a^2 + ab*tr(w) + b^2*N(w)`, which is `a^2` over `Q`.
    pub(crate) fn norm_form(&self, x: FieldElement) -> i128 {
        let (a, b) = (x.a as i128, x.b as i128);
        a * a + a * b * self.omega_trace as i128 + b * b * self.omega_norm as i128
    }

    pub fn trace(&self, x: FieldElement) -> i64 {
        if self.is_rational() {
            x.a
        } else {
            2 * x.a + x.b * self.omega_trace
        }
    }

    pub fn is_unit(&self, x: FieldElement) -> bool {
        self.norm_form(x).abs() == 1
    }

    /// Inverse of a unit.
    pub fn unit_inverse(&self, x: FieldElement) -> Option<FieldElement> {
        match self.norm_form(x) {
            1 => Some(self.conjugate(x)),
            -1 => Some(-self.conjugate(x)),
            _ => None,
        }
    }

    /// Exact quotient `x / y` when it lies in the ring of integers.
    pub fn exact_div(&self, x: FieldElement, y: FieldElement) -> Option<FieldElement> {
        let n = self.norm_form(y);
        if n == 0 {
            return None;
        }
        let (p, q) = self.div_coordinates(x, y);
        if p % n == 0 && q % n == 0 {
            Some(FieldElement::new((p / n) as i64, (q / n) as i64))
        } else {
            None
        }
    }

    /// Coordinates `(p, q)` with `x / y = (p + q*w) / N(y)`.
    pub(crate) fn div_coordinates(&self, x: FieldElement, y: FieldElement) -> (i128, i128) {
        let yc = self.conjugate(y);
        let (xa, xb, ya, yb) = (x.a as i128, x.b as i128, yc.a as i128, yc.b as i128);
        let bd = xb * yb;
        (
            xa * ya - bd * self.omega_norm as i128,
            xa * yb + xb * ya + bd * self.omega_trace as i128,
        )
    }

    /// Real embeddings `(sigma_1(x), ..., sigma_n(x))`, each within one ulp.
    pub fn embed(&self, x: FieldElement) -> Vec<f64> {
        (0..self.degree()).map(|j| self.embed_one(x, j)).collect()
    }

    #[inline]
    pub fn embed_one(&self, x: FieldElement, j: usize) -> f64 {
        if self.is_rational() {
            return x.a as f64;
        }
        let (a, b) = (x.a as f64, x.b as f64);
        let hi = b * self.sigma_hi[j];
        let err = b.mul_add(self.sigma_hi[j], -hi);
        a + hi + (err + b * self.sigma_lo[j])
    }

    /// Embeddings at working precision.
    pub fn embed_exact(&self, x: FieldElement) -> Vec<FixedReal> {
        let digits = self.precision_digits();
        if self.is_rational() {
            return vec![FixedReal::from_integer(x.a, digits)];
        }
        self.sigma_exact
            .iter()
            .map(|s| FixedReal::from_integer(x.a, digits).add(&s.scale(x.b)))
            .collect()
    }

    /// Nearest-integer style Euclidean quotient: minimises `|N(x - q*y)|`.
    fn euclid_quotient(&self, x: FieldElement, y: FieldElement) -> FieldElement {
        let n = self.norm_form(y);
        let (p, q) = self.div_coordinates(x, y);
        let round = |v: i128| -> i64 {
            let (v, d) = if n < 0 { (-v, -n) } else { (v, n) };
            (2 * v + d).div_euclid(2 * d) as i64
        };
        let base = FieldElement::new(round(p), if self.is_rational() { 0 } else { round(q) });
        let mut best = base;
        let mut best_norm = self.norm_form(x - self.mul(base, y)).abs();
        let db: &[i64] = if self.is_rational() { &[0] } else { &[-1, 0, 1] };
        for da in -1..=1 {
            for &dbb in db {
                let cand = FieldElement::new(base.a + da, base.b + dbb);
                let nn = self.norm_form(x - self.mul(cand, y)).abs();
                if nn < best_norm {
                    best = cand;
                    best_norm = nn;
                }
            }
        }
        best
    }

    /// Extended Euclidean algorithm: `(g, s, t)` with `s*a + t*b = g` and
    /// `g` generating the ideal `(a, b)`.
    pub fn euclid_gcd(
        &self,
        a: FieldElement,
        b: FieldElement,
    ) -> Result<(FieldElement, FieldElement, FieldElement)> {
        if a.is_zero() && b.is_zero() {
            return Err(Error::InvalidInput("gcd(0, 0) is undefined".into()));
        }
        let (mut r0, mut r1) = (a, b);
        let (mut s0, mut s1) = (FieldElement::ONE, FieldElement::ZERO);
        let (mut t0, mut t1) = (FieldElement::ZERO, FieldElement::ONE);
        while !r1.is_zero() {
            let q = self.euclid_quotient(r0, r1);
            let r2 = r0 - self.mul(q, r1);
            if self.norm_form(r2).abs() >= self.norm_form(r1).abs() {
                return Err(Error::Numerical(format!(
                    "Euclidean division failed to reduce the norm in {}",
                    self.spec
                )));
            }
            (r0, r1) = (r1, r2);
            (s0, s1) = (s1, s0 - self.mul(q, s1));
            (t0, t1) = (t1, t0 - self.mul(q, t1));
        }
        Ok((r0, s0, t0))
    }
}
