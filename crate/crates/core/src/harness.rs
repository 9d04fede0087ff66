//! Batch verification runs driven by a JSON config.
//!
//! A run executes the requested checks in a fixed order, writes
//! `report.csv` and `summary.json` to the output directory, and compares
//! each check's sup-ratio with `pins.json`, which is created on the first
//! run and never rewritten afterwards.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::analysis::{
    default_phi, hardy_norm_proxy, lemma31_scan, lemma32_scan, maximal_at, origin_limit_scan, theorem31_scan,
    uniformity_factor, AnnulusQuadrature, Criterion, Lemma31Options, ReportRow, ScanGrid, VerificationReport,
};
use crate::analysis::{derivative_orders, hardy_littlewood_integral};
use crate::atoms::{
    make_atom_on, min_moment_order, random_decomposition, Atom, AtomParams, AtomicDecomposition, CoefficientLaw,
    DecompositionParams,
};
use crate::dilation::Dilation;
use crate::error::{Error, Result};
use crate::sampling::{halton_points, Ball, Grid, SampledFunction};
use crate::varexp::{
    ball_grid, default_resolution, indicator_norm, log_holder_check, luxemburg_norm, modular, ExponentFunction, Piece,
};

/// Allowed growth of a sup-ratio over its pin.
pub const PIN_GROWTH: f64 = 1.1;
/// Largest ratio between sup-ratios across atom scales.
pub const UNIFORMITY_LIMIT: f64 = 4.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Check {
    #[serde(rename = "dilation")]
    Dilation,
    #[serde(rename = "varexp")]
    Varexp,
    #[serde(rename = "atoms")]
    Atoms,
    #[serde(rename = "lemma31")]
    Lemma31,
    #[serde(rename = "lemma32")]
    Lemma32,
    #[serde(rename = "theorem31")]
    Theorem31,
    #[serde(rename = "theorem41")]
    Theorem41,
    #[serde(rename = "hardy-littlewood")]
    HardyLittlewood,
    #[serde(rename = "maximal")]
    Maximal,
}

impl Check {
    pub fn name(self) -> &'static str {
        match self {
            Check::Dilation => "dilation",
            Check::Varexp => "varexp",
            Check::Atoms => "atoms",
            Check::Lemma31 => "lemma31",
            Check::Lemma32 => "lemma32",
            Check::Theorem31 => "theorem31",
            Check::Theorem41 => "theorem41",
            Check::HardyLittlewood => "hardy-littlewood",
            Check::Maximal => "maximal",
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PieceSpec {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub value: f64,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExponentSpec {
    pub family: String,
    pub p0: Option<f64>,
    pub p_inf: Option<f64>,
    pub amplitude: Option<f64>,
    pub pieces: Option<Vec<PieceSpec>>,
    pub otherwise: Option<f64>,
}

/// `r` as a number or the string `"inf"`.
#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
pub enum RSpec {
    Finite(f64),
    Named(String),
}

impl RSpec {
    fn value(&self) -> Result<f64> {
        match self {
            RSpec::Finite(r) => Ok(*r),
            RSpec::Named(s) if s == "inf" || s == "infinity" => Ok(f64::INFINITY),
            RSpec::Named(s) => Err(Error::Config(format!("r must be a number or \"inf\", got {s:?}"))),
        }
    }
}

fn default_r() -> RSpec {
    RSpec::Finite(2.0)
}

fn default_seed() -> u64 {
    1
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtomSpec {
    pub x0: Option<Vec<f64>>,
    #[serde(default)]
    pub k0: i32,
    #[serde(default = "default_r")]
    pub r: RSpec,
    /// `null` picks the smallest admissible order.
    pub s: Option<usize>,
    #[serde(default = "default_seed")]
    pub seed: u64,
}

impl Default for AtomSpec {
    fn default() -> Self {
        Self { x0: None, k0: 0, r: default_r(), s: None, seed: default_seed() }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoefficientSpec {
    pub law: String,
    #[serde(default = "default_low")]
    pub low: f64,
    #[serde(default = "default_high")]
    pub high: f64,
}

fn default_low() -> f64 {
    1e-3
}

fn default_high() -> f64 {
    1e3
}

impl Default for CoefficientSpec {
    fn default() -> Self {
        Self { law: "log_uniform".into(), low: default_low(), high: default_high() }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecompositionSpec {
    #[serde(default = "default_count")]
    pub count: usize,
    #[serde(default)]
    pub coefficients: CoefficientSpec,
    #[serde(default = "default_ball_range")]
    pub ball_range: [i32; 2],
    #[serde(default = "default_spread")]
    pub spread: f64,
    #[serde(default = "default_decomposition_seed")]
    pub seed: u64,
}

fn default_count() -> usize {
    3
}

fn default_ball_range() -> [i32; 2] {
    [-1, 1]
}

fn default_spread() -> f64 {
    1.0
}

fn default_decomposition_seed() -> u64 {
    7
}

impl Default for DecompositionSpec {
    fn default() -> Self {
        Self {
            count: default_count(),
            coefficients: CoefficientSpec::default(),
            ball_range: default_ball_range(),
            spread: default_spread(),
            seed: default_decomposition_seed(),
        }
    }
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    /// Nodes per axis; must be a power of two. Defaults depend on the dimension.
    pub resolution: Option<usize>,
    /// Relative padding of fitted grids around their ball.
    pub box_padding: Option<f64>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanSpec {
    #[serde(default = "default_k_min")]
    pub k_min: i32,
    #[serde(default = "default_k_max")]
    pub k_max: i32,
    #[serde(default = "default_directions")]
    pub directions: usize,
    #[serde(default = "default_radial")]
    pub radial: usize,
    /// Geometric sequence `2^{−j}`, `j = 1..=deltas`.
    #[serde(default = "default_deltas")]
    pub deltas: usize,
    #[serde(default = "default_annulus_points")]
    pub annulus_points: usize,
}

fn default_k_min() -> i32 {
    -6
}

fn default_k_max() -> i32 {
    6
}

fn default_directions() -> usize {
    16
}

fn default_radial() -> usize {
    2
}

fn default_deltas() -> usize {
    12
}

fn default_annulus_points() -> usize {
    2048
}

impl Default for ScanSpec {
    fn default() -> Self {
        Self {
            k_min: default_k_min(),
            k_max: default_k_max(),
            directions: default_directions(),
            radial: default_radial(),
            deltas: default_deltas(),
            annulus_points: default_annulus_points(),
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub dimension: usize,
    /// Row-major entries of `A`.
    pub matrix: Vec<f64>,
    pub lambda_minus: Option<f64>,
    pub lambda_plus: Option<f64>,
    pub exponent: ExponentSpec,
    #[serde(default)]
    pub atom: AtomSpec,
    #[serde(default)]
    pub decomposition: DecompositionSpec,
    #[serde(default)]
    pub grid: GridSpec,
    #[serde(default)]
    pub scan: ScanSpec,
    pub checks: Vec<Check>,
    /// Relative paths are taken from the config file's directory.
    pub output_dir: PathBuf,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let config: RunConfig = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        let mut config = Self::from_json(&text)?;
        if config.output_dir.is_relative() {
            let base = path.parent().unwrap_or_else(|| Path::new("."));
            config.output_dir = base.join(&config.output_dir);
        }
        Ok(config)
    }

    fn validate(&self) -> Result<()> {
        let n = self.dimension;
        if !(1..=3).contains(&n) {
            return Err(Error::Config(format!("dimension {n} not in 1..=3")));
        }
        if self.matrix.len() != n * n {
            return Err(Error::Config(format!("matrix has {} entries, dimension {n} needs {}", self.matrix.len(), n * n)));
        }
        if let Some(m) = self.grid.resolution {
            if !m.is_power_of_two() || m < 8 {
                return Err(Error::Config(format!("grid resolution {m} must be a power of two of at least 8")));
            }
        }
        if let Some(pad) = self.grid.box_padding {
            if !(pad >= 0.0 && pad.is_finite()) {
                return Err(Error::Config(format!("box padding {pad} must be nonnegative")));
            }
        }
        if self.checks.is_empty() {
            return Err(Error::Config("checks must not be empty".into()));
        }
        if let Some(x0) = &self.atom.x0 {
            if x0.len() != n {
                return Err(Error::Config(format!("atom x0 has {} coordinates, expected {n}", x0.len())));
            }
        }
        if self.scan.k_min >= self.scan.k_max {
            return Err(Error::Config("scan needs k_min < k_max".into()));
        }
        if self.decomposition.ball_range[0] > self.decomposition.ball_range[1] {
            return Err(Error::Config("decomposition ball_range is empty".into()));
        }
        Ok(())
    }

    /// Requested checks in dependency order, without repeats.
    pub fn ordered_checks(&self) -> Vec<Check> {
        let mut checks = self.checks.clone();
        checks.sort();
        checks.dedup();
        checks
    }
}

pub fn build_exponent(spec: &ExponentSpec, d: &Arc<Dilation>) -> Result<ExponentFunction> {
    let need = |v: Option<f64>, name: &str| v.ok_or_else(|| Error::Config(format!("exponent family {} needs {name}", spec.family)));
    match spec.family.as_str() {
        "constant" => ExponentFunction::constant(need(spec.p0, "p0")?),
        "log_perturbed" => ExponentFunction::log_perturbed(need(spec.p_inf, "p_inf")?, need(spec.amplitude, "amplitude")?, d.clone()),
        "piecewise_test" => {
            let pieces = spec
                .pieces
                .as_ref()
                .ok_or_else(|| Error::Config("piecewise_test needs pieces".into()))?
                .iter()
                .map(|p| Piece { lo: p.lo.clone(), hi: p.hi.clone(), value: p.value })
                .collect();
            ExponentFunction::piecewise(pieces, spec.otherwise.unwrap_or(1.0))
        }
        other => Err(Error::Config(format!("unknown exponent family {other:?}"))),
    }
}

/// Sup-ratio pins keyed by check name.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Pins(pub BTreeMap<String, f64>);

impl Pins {
    pub fn load(path: &Path) -> Result<Option<Self>> {
        if !path.exists() {
            return Ok(None);
        }
        Ok(Some(serde_json::from_str(&fs::read_to_string(path)?)?))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, serde_json::to_string_pretty(self)? + "\n")?;
        Ok(())
    }

    pub fn get(&self, check: &str) -> Option<f64> {
        self.0.get(check).copied()
    }
}

/// `sup ≤ 1.1·pin`.
pub fn within_pin(sup: f64, pin: f64) -> bool {
    sup <= PIN_GROWTH * pin || sup == pin
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CriterionSummary {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CheckSummary {
    pub check: String,
    pub sup_ratio: f64,
    pub pinned: Option<f64>,
    pub slope: Option<f64>,
    pub criteria_pass: bool,
    pub verdict: String,
    pub criteria: Vec<CriterionSummary>,
    pub warnings: Vec<String>,
}

impl CheckSummary {
    pub fn passed(&self) -> bool {
        self.verdict == "pass"
    }
}

pub fn verdict(criteria_pass: bool, sup: f64, pin: Option<f64>) -> &'static str {
    if criteria_pass && pin.is_none_or(|p| within_pin(sup, p)) {
        "pass"
    } else {
        "fail"
    }
}

#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub output_dir: PathBuf,
    pub summaries: Vec<CheckSummary>,
    pub pins_created: bool,
}

impl RunOutcome {
    pub fn failing(&self) -> Vec<&str> {
        self.summaries.iter().filter(|s| !s.passed()).map(|s| s.check.as_str()).collect()
    }
}

/// Shared state built once per run.
struct Context {
    config: RunConfig,
    d: Arc<Dilation>,
    p: ExponentFunction,
    resolution: usize,
    padding: f64,
    s: usize,
    r: f64,
    x0: Vec<f64>,
}

impl Context {
    fn new(config: RunConfig) -> Result<Self> {
        let n = config.dimension;
        let d = Arc::new(Dilation::with_rates(
            nalgebra::DMatrix::from_row_slice(n, n, &config.matrix),
            config.lambda_minus,
            config.lambda_plus,
        )?);
        let p = build_exponent(&config.exponent, &d)?;
        let s = config.atom.s.unwrap_or_else(|| min_moment_order(&p, &d));
        let smin = min_moment_order(&p, &d);
        if s < smin {
            return Err(Error::Config(format!("atom s = {s} is below the admissible minimum {smin}")));
        }
        let r = config.atom.r.value()?;
        let x0 = config.atom.x0.clone().unwrap_or_else(|| vec![0.0; n]);
        Ok(Self {
            resolution: config.grid.resolution.unwrap_or_else(|| default_resolution(n)),
            padding: config.grid.box_padding.unwrap_or(0.02),
            d,
            p,
            s,
            r,
            x0,
            config,
        })
    }

    fn atom_grid(&self, center: &[f64], k0: i32, resolution: usize) -> Result<Grid> {
        let half = self.d.ball_half_extents(k0).into_iter().fold(0.0, f64::max);
        Grid::new(center.to_vec(), (1.0 + self.padding) * half, resolution)
    }

    fn atom(&self, center: &[f64], k0: i32, resolution: usize) -> Result<Atom> {
        let params = AtomParams {
            ball: Ball { center: center.to_vec(), scale: k0 },
            r: self.r,
            s: self.s,
            seed: self.config.atom.seed,
        };
        make_atom_on(&self.d, &self.p, &params, &self.atom_grid(center, k0, resolution)?)
    }

    fn decomposition(&self) -> Result<AtomicDecomposition> {
        let spec = &self.config.decomposition;
        let law = match spec.coefficients.law.as_str() {
            "unit" => CoefficientLaw::Unit,
            "log_uniform" => CoefficientLaw::LogUniform { low: spec.coefficients.low, high: spec.coefficients.high },
            other => return Err(Error::Config(format!("unknown coefficient law {other:?}"))),
        };
        random_decomposition(
            &self.d,
            &self.p,
            &DecompositionParams {
                count: spec.count,
                law,
                scales: (spec.ball_range[0], spec.ball_range[1]),
                spread: spec.spread,
                r: self.r,
                s: self.s,
                seed: spec.seed,
                resolution: Some(self.resolution),
                shared_grid: false,
            },
        )
    }

    fn scan(&self) -> Result<ScanGrid> {
        let s = &self.config.scan;
        ScanGrid::new(&self.d, (s.k_min, s.k_max), s.directions, s.radial)
    }
}

fn row(point: impl Into<String>, measured: f64, bound: f64, pass: bool) -> ReportRow {
    ReportRow { point: point.into(), measured, bound, ratio: measured / bound, pass }
}

fn report(check: Check, params: String) -> VerificationReport {
    VerificationReport {
        check: check.name().to_string(),
        params,
        rows: Vec::new(),
        sup_ratio: 0.0,
        slope: None,
        criteria: Vec::new(),
        warnings: Vec::new(),
    }
}

/// Volume of `Δ` by quasi-Monte-Carlo with its 3σ Monte-Carlo band.
pub fn ellipsoid_volume_qmc(d: &Dilation, samples: usize) -> (f64, f64) {
    let half = d.ball_half_extents(0);
    let lo: Vec<f64> = half.iter().map(|h| -h).collect();
    let box_volume: f64 = half.iter().map(|h| 2.0 * h).product();
    let inside = halton_points(&lo, &half, samples).iter().filter(|x| d.in_ball(0, x)).count();
    let frac = inside as f64 / samples as f64;
    let sigma = box_volume * (frac * (1.0 - frac) / samples as f64).sqrt();
    (box_volume * frac, 3.0 * sigma)
}

/// Seeded points with log-uniform radii in `[10^lo, 10^hi]`.
pub fn log_radial_points(dim: usize, count: usize, lo: f64, hi: f64, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let r = 10f64.powf(rng.random_range(lo..hi));
            let mut u: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
            let norm = u.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-12);
            u.iter_mut().for_each(|v| *v *= r / norm);
            u
        })
        .collect()
}

fn check_dilation(ctx: &Context) -> Result<VerificationReport> {
    let d = &ctx.d;
    let mut rep = report(
        Check::Dilation,
        format!("b={:.6e};lambda_minus={:.6e};lambda_plus={:.6e}", d.b(), d.lambda_minus(), d.lambda_plus()),
    );
    let (vol, band) = ellipsoid_volume_qmc(d, 1 << 16);
    rep.rows.push(ReportRow {
        point: "volume".into(),
        measured: vol,
        bound: 1.0,
        ratio: vol,
        pass: (vol - 1.0).abs() <= band,
    });
    let e = d.ellipsoid();
    let inclusion = e.expansion * e.expansion * e.mu_max;
    rep.rows.push(row("expansion_inclusion", inclusion, 1.0, inclusion <= 1.0 + 1e-12));
    let pts = log_radial_points(d.dim(), 1000, -3.0, 3.0, 17);
    let mut mismatches = 0usize;
    for x in &pts {
        let base = d.shell_index(x);
        for k in -4..=4 {
            if d.shell_index(&d.apply_power(k, x)) != base.map(|i| i + k) {
                mismatches += 1;
            }
        }
    }
    rep.rows.push(row("homogeneity_mismatches", mismatches as f64, 1.0, mismatches == 0));
    let band = d.comparability_band(&pts)?;
    rep.rows.push(row("band_large_lower", band.large.lower, 1.0, band.large.lower.is_finite() && band.large.lower > 0.0));
    rep.rows.push(row("band_large_upper", band.large.upper, 1.0, band.large.upper.is_finite()));
    rep.rows.push(row("band_small_lower", band.small.lower, 1.0, band.small.lower.is_finite() && band.small.lower > 0.0));
    rep.rows.push(row("band_small_upper", band.small.upper, 1.0, band.small.upper.is_finite()));
    rep.sup_ratio = band.spread();
    rep.criteria.push(Criterion::at_least("band_finite", if band.all_finite_positive() { 1.0 } else { 0.0 }, 1.0));
    Ok(rep)
}

fn check_varexp(ctx: &Context) -> Result<VerificationReport> {
    let (d, p) = (&ctx.d, &ctx.p);
    let mut rep = report(Check::Varexp, format!("family={};p_minus={};p_plus={}", p.family(), p.p_minus(), p.p_plus()));
    let k0 = ctx.config.atom.k0;
    let grid = ball_grid(d, &ctx.x0, k0, ctx.resolution)?;
    let f = SampledFunction::from_fn(grid, |x| {
        if d.in_dilated_ball(&ctx.x0, k0, x) {
            1.0 + x.iter().map(|v| v * v).sum::<f64>()
        } else {
            0.0
        }
    });
    let norm = luxemburg_norm(p, &f)?;
    for t in [0.1, 1.0, 7.0] {
        let scaled = luxemburg_norm(p, &f.scaled(t))?;
        let r = row(format!("homogeneity;t={t}"), scaled, t * norm, false);
        let pass = (r.ratio - 1.0).abs() <= 1e-6;
        rep.rows.push(ReportRow { pass, ..r });
    }
    let unit = modular(p, &f.scaled(1.0 / norm));
    rep.rows.push(row("unit_ball_modular", unit, 1.0, (unit - 1.0).abs() <= 1e-4));
    let mut sup: f64 = 0.0;
    for k in -2..=2 {
        let v = indicator_norm(p, d, &ctx.x0, k)?;
        let a = d.b().powf(k as f64 / p.p_minus());
        let b = d.b().powf(k as f64 / p.p_plus());
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let r = row(format!("indicator_norm;k={k}"), v, hi, v >= lo * (1.0 - 1e-4) && v <= hi * (1.0 + 1e-4));
        sup = sup.max(r.ratio);
        rep.rows.push(r);
    }
    rep.sup_ratio = sup;
    let samples = log_radial_points(d.dim(), 200, -3.0, 3.0, 23);
    let lh = log_holder_check(p, d, &samples)?;
    rep.rows.push(row("log_holder_c_log", lh.c_log, 1.0, lh.c_log.is_finite()));
    if let (Some(c), ExponentFunction::LogPerturbed { amplitude, .. }) = (lh.c_infinity, p) {
        rep.rows.push(row("log_holder_c_infinity", c, amplitude.abs(), c <= amplitude.abs() * (1.0 + 1e-9)));
    }
    if !lh.conforming {
        rep.warnings.push("exponent family is not log-Hölder continuous".into());
    }
    Ok(rep)
}

fn check_atoms(ctx: &Context, out: &Path) -> Result<VerificationReport> {
    let k0 = ctx.config.atom.k0;
    let atom = ctx.atom(&ctx.x0, k0, ctx.resolution)?;
    let mut rep = report(Check::Atoms, format!("k0={k0};s={};r={};seed={}", ctx.s, ctx.r, ctx.config.atom.seed));
    let check = atom.validate(&ctx.d, &ctx.p)?;
    rep.rows.push(row("support", if check.support_ok { 1.0 } else { 0.0 }, 1.0, check.support_ok));
    rep.rows.push(row("size", check.size_ratio, 1.0, check.size_ratio <= 1.0 + crate::atoms::SIZE_TOLERANCE));
    rep.rows.push(row(
        "moments",
        check.max_moment_residual,
        crate::atoms::MOMENT_TOLERANCE,
        check.max_moment_residual <= crate::atoms::MOMENT_TOLERANCE,
    ));
    rep.sup_ratio = check.size_ratio;
    atom.write(out, "atom")?;
    Ok(rep)
}

fn merge_scale_reports(check: Check, params: String, reports: Vec<(i32, VerificationReport)>) -> VerificationReport {
    let mut rep = report(check, params);
    let sups: Vec<f64> = reports.iter().map(|(_, r)| r.sup_ratio).collect();
    let mut slope: Option<f64> = None;
    for (k0, r) in reports {
        for row in r.rows {
            rep.rows.push(ReportRow { point: format!("k0={k0};{}", row.point), ..row });
        }
        for c in r.criteria {
            rep.criteria.push(Criterion { name: format!("k0={k0};{}", c.name), ..c });
        }
        for w in r.warnings {
            rep.warnings.push(format!("k0={k0}: {w}"));
        }
        if let Some(s) = r.slope {
            slope = Some(slope.map_or(s, |v| v.min(s)));
        }
    }
    rep.sup_ratio = sups.iter().cloned().fold(0.0, f64::max);
    rep.slope = slope;
    rep.criteria.push(Criterion::at_most("k0_uniformity", uniformity_factor(&sups), UNIFORMITY_LIMIT));
    rep
}

fn check_lemma31(ctx: &Context) -> Result<VerificationReport> {
    let origin = vec![0.0; ctx.d.dim()];
    let alphas = derivative_orders(ctx.d.dim(), ctx.s);
    let opts = Lemma31Options::default();
    let reports = (-2..=2)
        .map(|k0| {
            let atom = ctx.atom(&origin, k0, ctx.resolution)?;
            Ok((k0, lemma31_scan(&atom, &ctx.d, &alphas, &opts)?))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(merge_scale_reports(Check::Lemma31, format!("s={};r={};k0=-2..2", ctx.s, ctx.r), reports))
}

fn check_lemma32(ctx: &Context) -> Result<VerificationReport> {
    let s = &ctx.config.scan;
    let reports = (-3..=3)
        .map(|k0| {
            // Coarse atoms reach their Taylor regime only below ρ* = b^{−k0}.
            let scan = ScanGrid::new(&ctx.d, (s.k_min - k0.max(0), s.k_max), s.directions, s.radial)?;
            let atom = ctx.atom(&ctx.x0, k0, ctx.resolution)?;
            Ok((k0, lemma32_scan(&atom, &ctx.d, &ctx.p, &scan)?))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(merge_scale_reports(Check::Lemma32, format!("s={};r={};k0=-3..3", ctx.s, ctx.r), reports))
}

fn single_atom_decomposition(atom: Atom) -> Result<AtomicDecomposition> {
    AtomicDecomposition::new(vec![Complex64::new(1.0, 0.0)], vec![atom])
}

fn check_maximal(ctx: &Context) -> Result<VerificationReport> {
    let d = &ctx.d;
    let k0 = ctx.config.atom.k0;
    // The maximal function is evaluated by direct quadrature per output node,
    // so it runs on coarser grids than the Fourier scans.
    let m = (ctx.resolution / 2).max(16);
    let atom = ctx.atom(&ctx.x0, k0, m)?;
    let phi = default_phi(d, m)?;
    let n_expr = single_atom_decomposition(atom.clone())?.norm_expression(&ctx.p, d)?;
    let half = d.ball_half_extents(k0).into_iter().fold(0.0, f64::max);
    let out_m = match d.dim() {
        1 => 256,
        2 => 48,
        _ => 16,
    };
    let output = Grid::new(ctx.x0.clone(), 4.0 * half, out_m)?;
    let narrow = hardy_norm_proxy(atom.samples(), &phi, d, &ctx.p, (-3, 3), &output)?;
    let proxy = hardy_norm_proxy(atom.samples(), &phi, d, &ctx.p, (-6, 6), &output)?;
    let mut rep = report(Check::Maximal, format!("k0={k0};i_range=[-6,6];output_m={out_m}"));
    rep.rows.push(row("proxy_over_expression", proxy / n_expr, 1.0, (1e-2..=1e2).contains(&(proxy / n_expr))));
    rep.rows.push(row("truncation_monotone", proxy, narrow, proxy >= narrow));
    // Decay away from the atom: ρ(x − x0) = b^{k0} against b^{k0+3}.
    let mut u = vec![0.0; d.dim()];
    u[0] = 1.0;
    let t0 = 1.5 / d.ball_gauge(k0, &u);
    let base: Vec<f64> = u.iter().map(|v| v * t0).collect();
    let near: Vec<f64> = base.iter().zip(&ctx.x0).map(|(v, c)| v + c).collect();
    let far: Vec<f64> = d.apply_power(3, &base).iter().zip(&ctx.x0).map(|(v, c)| v + c).collect();
    let vals = maximal_at(atom.samples(), &phi, d, (-6, 6), &[near, far])?;
    rep.rows.push(row("decay_b3_over_b0", vals[1], vals[0], vals[1] <= vals[0]));
    rep.sup_ratio = proxy / n_expr;
    Ok(rep)
}

fn run_check(ctx: &Context, check: Check, out: &Path) -> Result<VerificationReport> {
    match check {
        Check::Dilation => check_dilation(ctx),
        Check::Varexp => check_varexp(ctx),
        Check::Atoms => check_atoms(ctx, out),
        Check::Lemma31 => check_lemma31(ctx),
        Check::Lemma32 => check_lemma32(ctx),
        Check::Theorem31 => theorem31_scan(&ctx.decomposition()?, &ctx.d, &ctx.p, &ctx.scan()?),
        Check::Theorem41 => {
            let deltas: Vec<f64> = (1..=ctx.config.scan.deltas as i32).map(|j| 2f64.powi(-j)).collect();
            origin_limit_scan(&ctx.decomposition()?, &ctx.d, &ctx.p, ctx.config.scan.directions, &deltas)
        }
        Check::HardyLittlewood => {
            let s = &ctx.config.scan;
            let quad = AnnulusQuadrature::new(&ctx.d, s.annulus_points);
            hardy_littlewood_integral(&ctx.decomposition()?, &ctx.d, &ctx.p, (s.k_min, s.k_max), &quad)
        }
        Check::Maximal => check_maximal(ctx),
    }
}

fn write_report_csv(path: &Path, reports: &[VerificationReport]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["check", "params", "point", "measured", "bound", "ratio", "pass"])?;
    for rep in reports {
        for r in &rep.rows {
            w.write_record([
                rep.check.as_str(),
                rep.params.as_str(),
                r.point.as_str(),
                &format!("{:.12e}", r.measured),
                &format!("{:.12e}", r.bound),
                &format!("{:.12e}", r.ratio),
                if r.pass { "pass" } else { "fail" },
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Execute a config file end to end.
pub fn run(config_path: &Path) -> Result<RunOutcome> {
    run_config(RunConfig::load(config_path)?)
}

pub fn run_config(config: RunConfig) -> Result<RunOutcome> {
    let out = config.output_dir.clone();
    let checks = config.ordered_checks();
    let ctx = Context::new(config)?;
    fs::create_dir_all(&out)?;
    let reports = checks.iter().map(|&c| run_check(&ctx, c, &out)).collect::<Result<Vec<_>>>()?;
    write_report_csv(&out.join("report.csv"), &reports)?;

    let pins_path = out.join("pins.json");
    let existing = Pins::load(&pins_path)?;
    let pins_created = existing.is_none();
    let pins = match existing {
        Some(p) => p,
        None => {
            let p = Pins(reports.iter().map(|r| (r.check.clone(), r.sup_ratio)).collect());
            p.save(&pins_path)?;
            p
        }
    };
    let summaries: Vec<CheckSummary> = reports
        .iter()
        .map(|r| {
            let pinned = pins.get(&r.check);
            let criteria_pass = r.criteria_pass();
            let mut warnings = r.warnings.clone();
            if pinned.is_none() {
                warnings.push("no pin stored for this check".into());
            }
            CheckSummary {
                check: r.check.clone(),
                sup_ratio: r.sup_ratio,
                pinned,
                slope: r.slope,
                criteria_pass,
                verdict: verdict(criteria_pass, r.sup_ratio, pinned).to_string(),
                criteria: r
                    .criteria
                    .iter()
                    .map(|c| CriterionSummary { name: c.name.clone(), value: c.value, threshold: c.threshold, pass: c.pass })
                    .collect(),
                warnings,
            }
        })
        .collect();
    fs::write(out.join("summary.json"), serde_json::to_string_pretty(&summaries)? + "\n")?;
    Ok(RunOutcome { output_dir: out, summaries, pins_created })
}

/// Summary rows re-judged against the directory's current `pins.json`.
pub fn load_report(dir: &Path) -> Result<Vec<CheckSummary>> {
    let summary_path = dir.join("summary.json");
    if !summary_path.exists() {
        return Err(Error::Config(format!("{} has no summary.json", dir.display())));
    }
    let mut summaries: Vec<CheckSummary> = serde_json::from_str(&fs::read_to_string(summary_path)?)?;
    let pins = Pins::load(&dir.join("pins.json"))?.unwrap_or_default();
    for s in &mut summaries {
        s.pinned = pins.get(&s.check);
        s.verdict = verdict(s.criteria_pass, s.sup_ratio, s.pinned).to_string();
    }
    Ok(summaries)
}

/// Fixed-width table of check, sup ratio, pin, slope and verdict.
pub fn render_table(summaries: &[CheckSummary]) -> String {
    let fmt = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |x| format!("{x:.6e}"));
    let mut out = format!("{:<18} {:>14} {:>14} {:>14} {:>8}\n", "check", "sup_ratio", "pinned", "slope", "verdict");
    for s in summaries {
        out += &format!(
            "{:<18} {:>14} {:>14} {:>14} {:>8}\n",
            s.check,
            format!("{:.6e}", s.sup_ratio),
            fmt(s.pinned),
            fmt(s.slope),
            s.verdict
        );
    }
    out
}
