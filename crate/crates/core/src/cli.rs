//! Command-line driver: argument parsing, job configuration and JSON reports.

use std::f64::consts::PI;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::field::{make_field, Field, FieldElement, FieldSpec};
use crate::lattice::{translation_lattice, SubgroupSpec, TranslationLattice};
use crate::linalg::{
    commuting_residual, from_real_rows, max_entry_norm, sbtsd, unitarity_defect, CMatrix,
    SbtsdOptions,
};
use crate::modfun::{
    random_sl2, sample_points, transformation_residual_with, FunctionHandle, MatrixFunction, Sl2,
    WeightMatrix,
};
use crate::pfe::{expansion_pipeline, ExtractOptions, PipelineOptions};
use crate::poincare::{convergence_diagnostic, cusp_limit_check, CuspDirection, PoincareSpec, TruncatedSeries};
use crate::rep::{perm_rep_mod_p, translation_rep, trivial_rep, Representation, TranslationRepJson};
use crate::serial::{complex_to_json, format_f64, matrix_from_json, matrix_to_json, Decimal, MatrixJson};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Parser)]
#[command(name = "hmvf", version, about = "Matrix-valued Hilbert modular forms toolkit")]
pub struct Cli {
    /// Seed for every random choice.
    #[arg(long, global = true, default_value_t = 42)]
    pub seed: u64,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simultaneous block-triangular form of commuting matrices.
    Sbtsd {
        /// JSON file `{"matrices": [...]}`.
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Polynomial Fourier expansions of a builtin column.
    Expand {
        #[arg(long)]
        config: Option<PathBuf>,
        /// `scalar`, `jordan`, `jordan2` or `poincare`.
        #[arg(long, default_value = "jordan")]
        family: String,
        /// Column of the Poincare series to expand.
        #[arg(long, default_value_t = 0)]
        column: usize,
        /// Directory receiving one expansion file per component.
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Transformation-law residuals.
    Verify {
        #[arg(long)]
        config: Option<PathBuf>,
        /// `poincare` or `constant`.
        #[arg(long, default_value = "poincare")]
        function: String,
        /// Comma-separated `S`, `T1`..`Tn` or `rand` (a random word).
        #[arg(long, default_value = "S,T1")]
        gamma: String,
        #[arg(long, default_value_t = 10)]
        samples: usize,
        /// Override of the truncation bound.
        #[arg(long)]
        bound: Option<f64>,
        /// Exit with status 3 when a residual exceeds this.
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Poincare series evaluation and diagnostics.
    Poincare {
        #[command(subcommand)]
        action: PoincareAction,
    },
    /// Translation lattice data.
    Lattice {
        #[command(subcommand)]
        action: LatticeAction,
    },
    /// Representation checks.
    Rep {
        #[command(subcommand)]
        action: RepAction,
    },
}

#[derive(Debug, Args, Clone, Default)]
pub struct SeriesArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub field: Option<String>,
    #[arg(long)]
    pub rep: Option<String>,
    /// Weight row, e.g. `3,3`; repeat for several rows.
    #[arg(long)]
    pub weight: Vec<String>,
    /// Dual coordinates of nu, e.g. `1,1`; repeat once per block.
    #[arg(long)]
    pub nu: Vec<String>,
    #[arg(long)]
    pub eisenstein: bool,
    /// Write the value in the original basis instead of the diagonalizing one.
    #[arg(long)]
    pub original_basis: bool,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum PoincareAction {
    Eval {
        #[command(flatten)]
        series: SeriesArgs,
        #[arg(long)]
        bound: Option<f64>,
        /// `re,im` per coordinate.
        #[arg(long, allow_hyphen_values = true)]
        tau: String,
    },
    Converge {
        #[command(flatten)]
        series: SeriesArgs,
        #[arg(long, default_value = "5,10,20")]
        bounds: String,
        #[arg(long, allow_hyphen_values = true)]
        tau: String,
    },
    Cusp {
        #[command(flatten)]
        series: SeriesArgs,
        #[arg(long)]
        bound: Option<f64>,
        #[arg(long, default_value = "2,4,8")]
        lambdas: String,
        /// Approach along a single axis (only for `Q`).
        #[arg(long)]
        axis: Option<usize>,
    },
}

#[derive(Debug, Subcommand)]
pub enum LatticeAction {
    Info {
        #[arg(long, default_value = "Q")]
        field: String,
        /// Generator `c = a + b w` of `S_H = c O_F`, as `a,b`.
        #[arg(long, default_value = "1,0", allow_hyphen_values = true)]
        scale: String,
        #[arg(long, default_value_t = 2.0)]
        dual_bound: f64,
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

#[derive(Debug, Subcommand)]
pub enum RepAction {
    Check {
        #[arg(long, default_value = "Q")]
        field: String,
        #[arg(long)]
        rep: String,
        #[arg(long, default_value_t = 50)]
        pairs: usize,
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

fn default_field() -> String {
    "Q".into()
}
fn default_scale() -> [i64; 2] {
    [1, 0]
}
fn default_rep() -> String {
    "trivial:1".into()
}
fn default_bound() -> f64 {
    10.0
}
fn default_grid() -> usize {
    64
}
fn default_dual_bound() -> f64 {
    8.0
}
fn default_tol() -> f64 {
    1e-8
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct FieldSection {
    #[serde(default = "default_field")]
    pub spec: String,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct LatticeSection {
    #[serde(default = "default_scale")]
    pub scale: [i64; 2],
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RepSection {
    #[serde(default = "default_rep")]
    pub spec: String,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct WeightSection {
    /// Empty means weight 4 in every embedding.
    #[serde(default)]
    pub rows: Vec<Vec<i64>>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct PoincareSection {
    #[serde(default)]
    pub nu: Vec<Vec<i64>>,
    #[serde(default = "default_bound")]
    pub bound: f64,
    #[serde(default)]
    pub eisenstein: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ExtractionSection {
    #[serde(default)]
    pub y0: Option<Vec<f64>>,
    #[serde(default = "default_grid")]
    pub grid: usize,
    #[serde(default = "default_dual_bound")]
    pub dual_bound: f64,
    #[serde(default = "default_tol")]
    pub tol: f64,
}

macro_rules! section_default {
    ($($t:ty),*) => {$(
        impl Default for $t {
            fn default() -> Self {
                toml::from_str("").expect("empty section uses defaults")
            }
        }
    )*};
}
section_default!(FieldSection, LatticeSection, RepSection, WeightSection, PoincareSection, ExtractionSection);

/// Job configuration read from TOML.
#[derive(Clone, Debug, Default, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct JobConfig {
    #[serde(default)]
    pub field: FieldSection,
    #[serde(default)]
    pub lattice: LatticeSection,
    #[serde(default)]
    pub rep: RepSection,
    #[serde(default)]
    pub weight: WeightSection,
    #[serde(default)]
    pub poincare: PoincareSection,
    #[serde(default)]
    pub extraction: ExtractionSection,
}

impl JobConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: JobConfig =
            toml::from_str(text).map_err(|e| Error::InvalidInput(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        let spec: FieldSpec = self.field.spec.parse()?;
        let field = make_field(spec)?;
        if self.lattice.scale == [0, 0] {
            return Err(Error::InvalidInput("lattice scale must be nonzero".into()));
        }
        if field.is_rational() && self.lattice.scale[1] != 0 {
            return Err(Error::InvalidInput("lattice scale over Q has no w coordinate".into()));
        }
        if self.weight.rows.iter().any(|r| r.len() != field.degree())
        {
            return Err(Error::InvalidInput(format!(
                "weight rows need {} entries each",
                field.degree()
            )));
        }
        if self.weight.rows.iter().flatten().any(|k| k.abs() > 64) {
            return Err(Error::InvalidInput("weights must lie in [-64, 64]".into()));
        }
        if self.poincare.nu.iter().any(|r| r.len() != field.degree()) {
            return Err(Error::InvalidInput("nu rows need one entry per embedding".into()));
        }
        if !(self.poincare.bound > 0.0 && self.poincare.bound <= 1000.0) {
            return Err(Error::InvalidInput("poincare.bound must lie in (0, 1000]".into()));
        }
        let ex = &self.extraction;
        if !(16..=4096).contains(&ex.grid) || !ex.grid.is_power_of_two() {
            return Err(Error::InvalidInput("extraction.grid must be a power of two in [16, 4096]".into()));
        }
        if !(ex.dual_bound >= 0.0 && ex.dual_bound <= 64.0) {
            return Err(Error::InvalidInput("extraction.dual_bound must lie in [0, 64]".into()));
        }
        if !(ex.tol > 0.0 && ex.tol < 1.0) {
            return Err(Error::InvalidInput("extraction.tol must lie in (0, 1)".into()));
        }
        if let Some(y0) = &ex.y0 {
            if y0.len() != field.degree() || y0.iter().any(|&y| !(y > 0.0 && y <= 10.0)) {
                return Err(Error::InvalidInput("extraction.y0 entries must lie in (0, 10]".into()));
            }
        }
        Ok(())
    }

    pub fn field(&self) -> Result<Field> {
        make_field(self.field.spec.parse()?)
    }

    pub fn lattice(&self, field: &Field) -> Result<TranslationLattice> {
        let [a, b] = self.lattice.scale;
        translation_lattice(field, SubgroupSpec::IdealScaled(field.element(a, b)))
    }

    pub fn extract_options(&self, n: usize) -> ExtractOptions {
        let mut o = ExtractOptions::for_rank(n);
        if let Some(y0) = &self.extraction.y0 {
            o.y0 = y0.clone();
        }
        o.grid = self.extraction.grid;
        o.dual_bound = self.extraction.dual_bound;
        o.tol_periodic = self.extraction.tol;
        o
    }

    /// SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let text = serde_json::to_string(self).expect("config serializes");
        let digest = Sha256::digest(text.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

fn parse_ints(s: &str) -> Result<Vec<i64>> {
    s.split(',')
        .map(|p| {
            p.trim()
                .parse::<i64>()
                .map_err(|_| Error::InvalidInput(format!("not an integer list: {s:?}")))
        })
        .collect()
}

fn parse_floats(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|p| {
            let x = p
                .trim()
                .parse::<f64>()
                .map_err(|_| Error::InvalidInput(format!("not a number list: {s:?}")))?;
            if x.is_finite() {
                Ok(x)
            } else {
                Err(Error::InvalidInput(format!("non-finite number in {s:?}")))
            }
        })
        .collect()
}

/// `re,im` pairs, one per coordinate.
pub fn parse_tau(s: &str, n: usize) -> Result<Vec<Complex64>> {
    let xs = parse_floats(s)?;
    if xs.len() != 2 * n {
        return Err(Error::InvalidInput(format!("tau needs {} numbers", 2 * n)));
    }
    let tau: Vec<Complex64> = xs.chunks(2).map(|c| Complex64::new(c[0], c[1])).collect();
    if tau.iter().any(|z| z.im <= 0.0) {
        return Err(Error::InvalidInput("tau must lie in the upper half-space".into()));
    }
    Ok(tau)
}

/// Builds a representation from `trivial:r`, `permmod:p`, `permmod:a,b` or
/// `custom:file.json`.
pub fn parse_rep(spec: &str, field: &Field, lattice: &TranslationLattice) -> Result<Representation> {
    let (kind, arg) = spec
        .split_once(':')
        .ok_or_else(|| Error::InvalidInput(format!("bad representation spec {spec:?}")))?;
    match kind {
        "trivial" => {
            let r = arg
                .trim()
                .parse::<usize>()
                .map_err(|_| Error::InvalidInput(format!("bad dimension in {spec:?}")))?;
            trivial_rep(field, r)
        }
        "permmod" => {
            let c = parse_ints(arg)?;
            let p = match c.as_slice() {
                [a] => FieldElement::integer(*a),
                [a, b] => field.element(*a, *b),
                _ => return Err(Error::InvalidInput(format!("bad prime in {spec:?}"))),
            };
            perm_rep_mod_p(field, p)
        }
        "custom" => {
            let text = fs::read_to_string(arg)?;
            let json: TranslationRepJson = serde_json::from_str(&text)?;
            translation_rep(lattice, json.to_matrices()?)
        }
        _ => Err(Error::InvalidInput(format!("unknown representation kind {kind:?}"))),
    }
}

struct Context {
    seed: u64,
    config_hash: Option<String>,
}

impl Context {
    fn meta(&self) -> Value {
        json!({
            "seed": self.seed,
            "config_hash": self.config_hash,
            "version": VERSION,
        })
    }
}

fn emit(value: &Value, output: Option<&Path>) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    match output {
        Some(p) => fs::write(p, text + "\n")?,
        None => {
            let mut out = std::io::stdout().lock();
            match writeln!(out, "{text}") {
                Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => {}
                r => r?,
            }
        }
    }
    Ok(())
}

fn dec(x: f64) -> Value {
    serde_json::to_value(Decimal::of(x)).expect("decimal serializes")
}

fn cplx(z: Complex64) -> Value {
    serde_json::to_value(complex_to_json(z)).expect("complex serializes")
}

/// Input of the `sbtsd` command.
#[derive(Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct MatricesJson {
    pub matrices: Vec<MatrixJson>,
}

fn cmd_sbtsd(ctx: &Context, input: &Path, output: Option<&Path>) -> Result<()> {
    let json: MatricesJson = serde_json::from_str(&fs::read_to_string(input)?)?;
    let family = json
        .matrices
        .iter()
        .map(matrix_from_json)
        .collect::<Result<Vec<_>>>()?;
    let res = sbtsd(&family, &SbtsdOptions::default())?;
    let report = json!({
        "meta": ctx.meta(),
        "T": matrix_to_json(&res.change_of_basis),
        "T_inverse": matrix_to_json(&res.change_of_basis_inverse),
        "block_sizes": res.block_sizes,
        "eigenvalues": res.eigenvalues.iter().map(|row| row.iter().map(|&z| cplx(z)).collect::<Vec<_>>()).collect::<Vec<_>>(),
        "exponents": res.exponents.iter().map(|row| row.iter().map(|&z| cplx(z)).collect::<Vec<_>>()).collect::<Vec<_>>(),
        "B": res.transformed.iter().map(matrix_to_json).collect::<Vec<_>>(),
        "S": res.unipotent.iter().map(matrix_to_json).collect::<Vec<_>>(),
        "pattern_residual": dec(res.pattern_residual),
    });
    emit(&report, output)
}

/// A builtin column `g` with its translation matrices.
type Column = (
    Box<dyn Fn(&[Complex64]) -> Result<Vec<Complex64>> + Sync>,
    usize,
    Vec<CMatrix>,
);

fn e(freq: &[f64], tau: &[Complex64]) -> Complex64 {
    let phase: Complex64 = freq.iter().zip(tau).map(|(f, z)| z * *f).sum();
    (Complex64::new(0.0, 2.0 * PI) * phase).exp()
}

fn builtin_column(family: &str, lattice: &TranslationLattice) -> Result<Column> {
    let n = lattice.rank();
    let dual = |c: &[i64]| lattice.dual_vector(c).real().to_vec();
    match family {
        "scalar" => {
            // multiplier exp(2 pi i 0.3) along every basis direction
            let mu = vec![Complex64::new(0.3, 0.0); n];
            let u: Vec<f64> = lattice.from_basis_pairings(&mu).iter().map(|z| z.re).collect();
            let f1: Vec<f64> = dual(&vec![1; n]).iter().zip(&u).map(|(a, b)| a + b).collect();
            let f2: Vec<f64> = dual(&vec![2; n]).iter().zip(&u).map(|(a, b)| a + b).collect();
            let lambda = (Complex64::new(0.0, 2.0 * PI * 0.3)).exp();
            let g = move |tau: &[Complex64]| Ok(vec![e(&f1, tau) * 3.0 - e(&f2, tau) * 2.0]);
            Ok((Box::new(g), 1, vec![CMatrix::from_element(1, 1, lambda); n]))
        }
        "jordan" => {
            if n != 1 {
                return Err(Error::InvalidInput("the jordan family needs F = Q".into()));
            }
            let h = lattice.basis_vector(0)[0];
            let theta = move |z: Complex64| e(&[1.0 / h], &[z]) + e(&[2.0 / h], &[z]) * 0.5;
            let theta2 = move |z: Complex64| e(&[1.0 / h], &[z]) * Complex64::new(0.0, 1.0);
            // g = (tau theta / h + theta2, theta) obeys g(tau + h) = [[1,1],[0,1]] g(tau)
            let g = move |tau: &[Complex64]| {
                let z = tau[0];
                Ok(vec![z / h * theta(z) + theta2(z), theta(z)])
            };
            Ok((Box::new(g), 2, vec![from_real_rows(&[&[1.0, 1.0], &[0.0, 1.0]])]))
        }
        "jordan2" => {
            // g = exp(sum_i (M^-1 tau)_i N_i) h with N_1 = J, N_2 = 2 J and
            // h twisted-periodic with exponent 0
            if n != 2 {
                return Err(Error::InvalidInput("the jordan2 family needs a quadratic field".into()));
            }
            let minv = lattice.basis_inverse().clone();
            let f1 = dual(&[1, 1]);
            let f2 = dual(&[1, 2]);
            let g = move |tau: &[Complex64]| {
                let x: Complex64 = (0..2).map(|j| tau[j] * minv[(0, j)]).sum::<Complex64>()
                    + (0..2).map(|j| tau[j] * minv[(1, j)] * 2.0).sum::<Complex64>();
                let h0 = e(&f1, tau);
                let h1 = e(&f2, tau) * 2.0 - e(&f1, tau);
                Ok(vec![h0 + x * h1, h1])
            };
            let a1 = from_real_rows(&[&[1.0, 1.0], &[0.0, 1.0]]);
            let a2 = from_real_rows(&[&[1.0, 2.0], &[0.0, 1.0]]);
            Ok((Box::new(g), 2, vec![a1, a2]))
        }
        _ => Err(Error::InvalidInput(format!("unknown family {family:?}"))),
    }
}

fn cmd_expand(ctx: &Context, cfg: &JobConfig, family: &str, column: usize, out_dir: &Path) -> Result<()> {
    let field = cfg.field()?;
    let n = field.degree();
    let mut opts = PipelineOptions::for_rank(n);
    opts.extract = cfg.extract_options(n);
    let (out, lattice) = if family == "poincare" {
        let spec = poincare_spec_from(cfg, &SeriesArgs::default())?;
        let series = TruncatedSeries::new(&spec, cfg.poincare.bound)?;
        let r = spec.representation().dim();
        if column >= r {
            return Err(Error::InvalidInput(format!("column {column} out of range 0..{r}")));
        }
        let lattice = spec.lattice().clone();
        let translations = lattice
            .basis()
            .iter()
            .map(|&a| spec.rho_in_basis(&Sl2::translation(a)))
            .collect::<Result<Vec<_>>>()?;
        // a truncated series obeys the translation law only up to truncation
        opts.tol_law = cfg.extraction.tol;
        let col = move |tau: &[Complex64]| -> Result<Vec<Complex64>> {
            let v = series.eval(tau)?;
            Ok(v.column(column).iter().copied().collect())
        };
        (expansion_pipeline(&col, r, &translations, &lattice, &opts)?, lattice)
    } else {
        let lattice = cfg.lattice(&field)?;
        let (g, r, translations) = builtin_column(family, &lattice)?;
        (expansion_pipeline(&*g, r, &translations, &lattice, &opts)?, lattice)
    };
    fs::create_dir_all(out_dir)?;
    let mut files = Vec::new();
    for (k, e) in out.expansions.iter().enumerate() {
        let path = out_dir.join(format!("component_{k}.json"));
        fs::write(&path, e.to_json_string() + "\n")?;
        files.push(path.display().to_string());
    }
    let report = json!({
        "meta": ctx.meta(),
        "lattice": lattice.to_json(),
        "files": files,
        "terms": out.expansions.iter().map(|e| e.terms.len()).collect::<Vec<_>>(),
        "block_sizes": out.decomposition.block_sizes,
        "law_residual": dec(out.law_residual),
        "cocycle_residual": dec(out.cocycle_residual),
        "periodicity_residual": dec(out.periodicity_residual),
        "warnings": out.warnings,
    });
    emit(&report, None)
}

fn poincare_spec_from(cfg: &JobConfig, args: &SeriesArgs) -> Result<PoincareSpec> {
    let field_spec = args.field.clone().unwrap_or_else(|| cfg.field.spec.clone());
    let field = make_field(field_spec.parse()?)?;
    let lattice = translation_lattice(&field, SubgroupSpec::Full)?;
    let rep_spec = args.rep.clone().unwrap_or_else(|| cfg.rep.spec.clone());
    let rep = parse_rep(&rep_spec, &field, &lattice)?;
    let rows = if args.weight.is_empty() {
        if cfg.weight.rows.is_empty() {
            vec![vec![4; field.degree()]]
        } else {
            cfg.weight.rows.clone()
        }
    } else {
        args.weight.iter().map(|s| parse_ints(s)).collect::<Result<_>>()?
    };
    let nu = if args.nu.is_empty() {
        cfg.poincare.nu.clone()
    } else {
        args.nu.iter().map(|s| parse_ints(s)).collect::<Result<_>>()?
    };
    let eisenstein = args.eisenstein || cfg.poincare.eisenstein;
    if !eisenstein && nu.is_empty() {
        return Err(Error::InvalidInput("nu is required unless --eisenstein is set".into()));
    }
    PoincareSpec::new(&rep, &WeightMatrix::new(rows)?, &nu, eisenstein)
}

fn series_config(args: &SeriesArgs) -> Result<JobConfig> {
    match &args.config {
        Some(p) => JobConfig::load(p),
        None => Ok(JobConfig::default()),
    }
}

fn spec_report(spec: &PoincareSpec) -> Value {
    json!({
        "field": spec.field().spec().to_string(),
        "rep": spec.representation().to_string(),
        "weight": spec.weight().rows(),
        "nu": spec.nu(),
        "mu": spec.mu().iter().map(|r| r.iter().map(|&x| dec(x)).collect::<Vec<_>>()).collect::<Vec<_>>(),
        "block_sizes": spec.block_sizes(),
        "eisenstein": spec.is_eisenstein(),
        "basis": matrix_to_json(spec.basis()),
    })
}

fn cmd_poincare(ctx: &mut Context, action: &PoincareAction) -> Result<()> {
    match action {
        PoincareAction::Eval { series, bound, tau } => {
            let cfg = series_config(series)?;
            ctx.config_hash = Some(cfg.hash());
            let spec = poincare_spec_from(&cfg, series)?;
            let b = bound.unwrap_or(cfg.poincare.bound);
            let tau = parse_tau(tau, spec.field().degree())?;
            let s = TruncatedSeries::new(&spec, b)?;
            let value = if series.original_basis {
                s.eval_original_basis(&tau)?
            } else {
                s.eval(&tau)?
            };
            let report = json!({
                "meta": ctx.meta(),
                "spec": spec_report(&spec),
                "tau": tau.iter().map(|&z| cplx(z)).collect::<Vec<_>>(),
                "B": dec(b),
                "cosets": s.coset_count(),
                "value": matrix_to_json(&value),
                "deltas": Vec::<Value>::new(),
            });
            emit(&report, series.output.as_deref())
        }
        PoincareAction::Converge { series, bounds, tau } => {
            let cfg = series_config(series)?;
            ctx.config_hash = Some(cfg.hash());
            let spec = poincare_spec_from(&cfg, series)?;
            let tau = parse_tau(tau, spec.field().degree())?;
            let bounds = parse_floats(bounds)?;
            let rep = convergence_diagnostic(&spec, &tau, &bounds)?;
            let report = json!({
                "meta": ctx.meta(),
                "spec": spec_report(&spec),
                "tau": tau.iter().map(|&z| cplx(z)).collect::<Vec<_>>(),
                "rows": rep.rows.iter().map(|r| json!({
                    "B": dec(r.bound),
                    "value": matrix_to_json(&r.value),
                    "delta": r.delta.map(dec),
                })).collect::<Vec<_>>(),
                "deltas": rep.rows.iter().filter_map(|r| r.delta).map(dec).collect::<Vec<_>>(),
                "non_monotone": rep.non_monotone,
            });
            emit(&report, series.output.as_deref())
        }
        PoincareAction::Cusp { series, bound, lambdas, axis } => {
            let cfg = series_config(series)?;
            ctx.config_hash = Some(cfg.hash());
            let spec = poincare_spec_from(&cfg, series)?;
            let b = bound.unwrap_or(cfg.poincare.bound);
            let lambdas = parse_floats(lambdas)?;
            let dir = axis.map_or(CuspDirection::Diagonal, CuspDirection::Axis);
            let values = cusp_limit_check(&spec, b, dir, &lambdas)?;
            let report = json!({
                "meta": ctx.meta(),
                "spec": spec_report(&spec),
                "B": dec(b),
                "lambdas": lambdas.iter().map(|&x| dec(x)).collect::<Vec<_>>(),
                "magnitudes": values.iter().map(|&x| dec(x)).collect::<Vec<_>>(),
            });
            emit(&report, series.output.as_deref())
        }
    }
}

fn parse_gammas(list: &str, field: &Field, lattice: &TranslationLattice, seed: u64) -> Result<Vec<(String, Sl2)>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    list.split(',')
        .map(|name| {
            let name = name.trim();
            let g = match name {
                "S" => Sl2::s(),
                "rand" => random_sl2(field, &mut rng, 3),
                _ => {
                    let idx = name
                        .strip_prefix('T')
                        .and_then(|i| i.parse::<usize>().ok())
                        .filter(|&i| i >= 1 && i <= lattice.rank())
                        .ok_or_else(|| Error::InvalidInput(format!("unknown group element {name:?}")))?;
                    Sl2::translation(lattice.basis()[idx - 1])
                }
            };
            Ok((name.to_string(), g))
        })
        .collect()
}

type RhoFn = dyn Fn(&Sl2) -> Result<CMatrix>;

#[allow(clippy::too_many_arguments)]
fn cmd_verify(
    ctx: &Context,
    cfg: &JobConfig,
    function: &str,
    gamma: &str,
    samples: usize,
    bound: Option<f64>,
    tol: Option<f64>,
    output: Option<&Path>,
) -> Result<()> {
    let field = cfg.field()?;
    let n = field.degree();
    let points = sample_points(n, samples.max(1), ctx.seed);
    let (handle, rho_of): (Box<dyn MatrixFunction>, Box<RhoFn>) = match function {
        "poincare" => {
            let spec = poincare_spec_from(cfg, &SeriesArgs::default())?;
            let b = bound.unwrap_or(cfg.poincare.bound);
            let series = TruncatedSeries::new(&spec, b)?;
            let r = spec.representation().dim();
            let h = FunctionHandle::new(&field, r, spec.weight().clone(), move |tau| series.eval(tau));
            (Box::new(h), Box::new(move |g: &Sl2| spec.rho_in_basis(g)))
        }
        "constant" => {
            let lattice = translation_lattice(&field, SubgroupSpec::Full)?;
            let rep = parse_rep(&cfg.rep.spec, &field, &lattice)?;
            if !matches!(rep.kind(), crate::rep::RepKind::Trivial) {
                return Err(Error::InvalidInput("the constant function needs a trivial representation".into()));
            }
            let r = rep.dim();
            let weight = WeightMatrix::uniform(&vec![0; n], r)?;
            let h = FunctionHandle::new(&field, r, weight, move |_| Ok(crate::linalg::identity(r)));
            (Box::new(h), Box::new(move |g: &Sl2| rep.eval(g)))
        }
        _ => return Err(Error::InvalidInput(format!("unknown function {function:?}"))),
    };
    let lattice = translation_lattice(&field, SubgroupSpec::Full)?;
    let gammas = parse_gammas(gamma, &field, &lattice, ctx.seed)?;
    let mut rows = Vec::new();
    let mut worst: f64 = 0.0;
    for (name, g) in &gammas {
        let res = transformation_residual_with(handle.as_ref(), &rho_of(g)?, g, &points)?;
        worst = worst.max(res);
        rows.push(json!({"gamma": name, "residual": dec(res)}));
    }
    let report = json!({
        "meta": ctx.meta(),
        "function": function,
        "samples": points.len(),
        "residuals": rows,
        "max_residual": dec(worst),
        "tol": tol.map(dec),
    });
    emit(&report, output)?;
    if let Some(t) = tol {
        if worst > t {
            return Err(Error::Numerical(format!(
                "transformation residual {} exceeds tolerance {}",
                format_f64(worst),
                format_f64(t)
            )));
        }
    }
    Ok(())
}

fn cmd_lattice_info(ctx: &Context, field: &str, scale: &str, dual_bound: f64, output: Option<&Path>) -> Result<()> {
    let field = make_field(field.parse()?)?;
    let c = parse_ints(scale)?;
    let gen = match c.as_slice() {
        [a] => FieldElement::integer(*a),
        [a, b] => field.element(*a, *b),
        _ => return Err(Error::InvalidInput(format!("bad scale {scale:?}"))),
    };
    let lattice = translation_lattice(&field, SubgroupSpec::IdealScaled(gen))?;
    let dual = lattice.enumerate_dual(dual_bound);
    let report = json!({
        "meta": ctx.meta(),
        "lattice": lattice.to_json(),
        "omega_embeddings": field.omega_embeddings_exact().iter().map(|x| x.to_decimal_string()).collect::<Vec<_>>(),
        "precision_digits": field.precision_digits(),
        "duality_residual": dec(lattice.duality_residual()),
        "axis_periods": lattice.axis_periods(),
        "dual_bound": dec(dual_bound),
        "dual_count": dual.len(),
        "dual_vectors": dual.iter().map(|v| v.coords().to_vec()).collect::<Vec<_>>(),
    });
    emit(&report, output)
}

fn cmd_rep_check(ctx: &Context, field: &str, rep: &str, pairs: usize, output: Option<&Path>) -> Result<()> {
    let field = make_field(field.parse()?)?;
    let lattice = translation_lattice(&field, SubgroupSpec::Full)?;
    let rep = parse_rep(rep, &field, &lattice)?;
    let translations = rep.translation_images(&lattice)?;
    let commute = commuting_residual(&translations)?;
    let mut report = json!({
        "meta": ctx.meta(),
        "rep": rep.to_string(),
        "dim": rep.dim(),
        "translation_commuting_residual": dec(commute),
    });
    if rep.is_unitary_kind() {
        let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed);
        let list: Vec<(Sl2, Sl2)> = (0..pairs)
            .map(|_| (random_sl2(&field, &mut rng, 3), random_sl2(&field, &mut rng, 3)))
            .collect();
        let minus = Sl2::new(&field, -FieldElement::ONE, FieldElement::ZERO, FieldElement::ZERO, -FieldElement::ONE)?;
        let minus_image = rep.eval(&minus)?;
        report["homomorphism_residual"] = dec(rep.homomorphism_residual(&list)?);
        report["pairs"] = json!(pairs);
        report["unitarity_defect_S"] = dec(unitarity_defect(&rep.eval(&Sl2::s())?));
        report["minus_identity_trivial"] =
            json!(max_entry_norm(&(minus_image - crate::linalg::identity(rep.dim()))) == 0.0);
    }
    emit(&report, output)
}

/// Parses arguments and runs the chosen command.
pub fn run(cli: Cli) -> Result<()> {
    let pool = match cli.threads {
        Some(0) => return Err(Error::InvalidInput("--threads must be positive".into())),
        Some(t) => Some(
            rayon::ThreadPoolBuilder::new()
                .num_threads(t)
                .build()
                .map_err(|e| Error::InvalidInput(format!("thread pool: {e}")))?,
        ),
        None => None,
    };
    let job = move || dispatch(&cli);
    match pool {
        Some(p) => p.install(job),
        None => job(),
    }
}

fn load_config(path: Option<&Path>, ctx: &mut Context) -> Result<JobConfig> {
    let cfg = match path {
        Some(p) => JobConfig::load(p)?,
        None => JobConfig::default(),
    };
    ctx.config_hash = Some(cfg.hash());
    Ok(cfg)
}

fn dispatch(cli: &Cli) -> Result<()> {
    let mut ctx = Context {
        seed: cli.seed,
        config_hash: None,
    };
    match &cli.command {
        Command::Sbtsd { input, output } => cmd_sbtsd(&ctx, input, output.as_deref()),
        Command::Expand { config, family, column, out_dir } => {
            let cfg = load_config(config.as_deref(), &mut ctx)?;
            cmd_expand(&ctx, &cfg, family, *column, out_dir)
        }
        Command::Verify { config, function, gamma, samples, bound, tol, output } => {
            let cfg = load_config(config.as_deref(), &mut ctx)?;
            cmd_verify(&ctx, &cfg, function, gamma, *samples, *bound, *tol, output.as_deref())
        }
        Command::Poincare { action } => cmd_poincare(&mut ctx, action),
        Command::Lattice { action: LatticeAction::Info { field, scale, dual_bound, output } } => {
            cmd_lattice_info(&ctx, field, scale, *dual_bound, output.as_deref())
        }
        Command::Rep { action: RepAction::Check { field, rep, pairs, output } } => {
            cmd_rep_check(&ctx, field, rep, *pairs, output.as_deref())
        }
    }
}

/// Entry point used by the binary: returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
