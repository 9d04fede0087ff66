//! Fourier-side scans: atom transforms, the bound-ratio checks on adjoint
//! shells, the origin limit, the Hardy–Littlewood shell sums and the
//! truncated radial maximal function.

use std::f64::consts::{PI, TAU};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::atoms::{multi_indices, Atom, AtomicDecomposition};
use crate::dilation::Dilation;
use crate::error::{Error, Result};
use crate::sampling::{dft_separable, dilate_samples, halton_points, Grid, SampledFunction, Value};
use crate::varexp::{luxemburg_norm, ExponentFunction};

/// Allowed shortfall of a fitted log-log slope below its predicted rate.
pub const SLOPE_SLACK: f64 = 0.15;
/// Relative disagreement allowed between the two routes to `â`.
pub const ROUTE_TOLERANCE: f64 = 1e-3;

#[derive(Clone, Debug, Serialize)]
pub struct ReportRow {
    pub point: String,
    pub measured: f64,
    pub bound: f64,
    pub ratio: f64,
    pub pass: bool,
}

/// A named scalar test: `value` against `threshold`, with its outcome.
#[derive(Clone, Debug, Serialize)]
pub struct Criterion {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    pub pass: bool,
}

impl Criterion {
    pub fn at_most(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        Self { name: name.into(), value, threshold, pass: value <= threshold }
    }

    pub fn at_least(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        Self { name: name.into(), value, threshold, pass: value >= threshold }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct VerificationReport {
    pub check: String,
    pub params: String,
    pub rows: Vec<ReportRow>,
    pub sup_ratio: f64,
    pub slope: Option<f64>,
    pub criteria: Vec<Criterion>,
    pub warnings: Vec<String>,
}

impl VerificationReport {
    fn new(check: &str, params: String) -> Self {
        Self {
            check: check.to_string(),
            params,
            rows: Vec::new(),
            sup_ratio: 0.0,
            slope: None,
            criteria: Vec::new(),
            warnings: Vec::new(),
        }
    }

    fn finish_sup(&mut self) {
        self.sup_ratio = self.rows.iter().map(|r| r.ratio).fold(0.0, f64::max);
    }

    /// Every row and every criterion passes.
    pub fn criteria_pass(&self) -> bool {
        self.rows.iter().all(|r| r.pass) && self.criteria.iter().all(|c| c.pass)
    }

    pub fn criterion(&self, name: &str) -> Option<&Criterion> {
        self.criteria.iter().find(|c| c.name == name)
    }
}

pub fn format_point(x: &[f64]) -> String {
    x.iter().map(|v| format!("{v:.6e}")).collect::<Vec<_>>().join(";")
}

/// Least-squares slope of `ys` against `xs`.
pub fn fit_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// `max / min` of positive values.
pub fn uniformity_factor(values: &[f64]) -> f64 {
    let max = values.iter().cloned().fold(0.0, f64::max);
    let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
    max / min
}

/// `Σ|α_i|^t − (Σ|α_i|)^t`, nonnegative for `t ∈ (0, 1]`.
pub fn subadditivity_gap(alphas: &[f64], t: f64) -> f64 {
    let sum_t: f64 = alphas.iter().map(|a| a.abs().powf(t)).sum();
    let sum: f64 = alphas.iter().map(|a| a.abs()).sum();
    sum_t - sum.powf(t)
}

/// `max{ρ^{e₋}, ρ^{e₊}}` with `ρ⁰ = 1`.
fn two_branch_max(rho: f64, e_minus: f64, e_plus: f64) -> f64 {
    let pow = |e: f64| if e == 0.0 { 1.0 } else { rho.powf(e) };
    pow(e_minus).max(pow(e_plus))
}

/// `x ↦ factor · Σ_j v_j e^{−2πi x_j·(Mx)} hⁿ`.
#[derive(Clone, Debug)]
pub struct Transform {
    grid: Grid,
    values: Vec<Complex64>,
    map: DMatrix<f64>,
    factor: f64,
}

impl Transform {
    pub fn frequency(&self, x: &[f64]) -> Vec<f64> {
        (&self.map * DVector::from_column_slice(x)).iter().cloned().collect()
    }

    pub fn eval(&self, x: &[f64]) -> Complex64 {
        dft_separable(&self.grid, &self.values, &self.frequency(x)) * self.factor
    }

    /// Whether the evaluation frequency for `x` exceeds the aliasing guard.
    pub fn aliased(&self, x: &[f64]) -> bool {
        let f = self.frequency(x);
        f.iter().map(|v| v * v).sum::<f64>().sqrt() > self.grid.aliasing_guard()
    }
}

/// Direct quadrature of `â`.
pub fn atom_transform(atom: &Atom) -> Transform {
    let grid = atom.samples().grid().clone();
    let n = grid.dim();
    Transform {
        values: atom.samples().values().iter().map(|v| v.to_complex()).collect(),
        grid,
        map: DMatrix::identity(n, n),
        factor: 1.0,
    }
}

/// `x ↦ ∂^α(𝔉 D_A^{k₀} a)(x)`, by quadrature on the atom's own nodes pulled
/// back to `ξ_j = A^{−k₀}x_j`. The pull-back keeps the discrete vanishing
/// moments of the atom exact.
pub fn derivative_transform(atom: &Atom, d: &Dilation, alpha: &[usize]) -> Result<Transform> {
    let order: usize = alpha.iter().sum();
    if order > atom.s() {
        return Err(Error::InvalidArgument(format!("|alpha| = {order} exceeds the moment order {}", atom.s())));
    }
    if alpha.len() != d.dim() {
        return Err(Error::InvalidArgument("multi-index dimension mismatch".into()));
    }
    let k0 = atom.ball().scale;
    let inv = d.power(-k0);
    let grid = atom.samples().grid().clone();
    let n = grid.dim();
    let mut x = vec![0.0; n];
    let unit = Complex64::new(0.0, -2.0 * PI);
    let values = atom
        .samples()
        .values()
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            if v == 0.0 || order == 0 {
                return Complex64::new(v, 0.0);
            }
            grid.node_into(i, &mut x);
            let mut w = Complex64::new(v, 0.0);
            for (r, &ar) in alpha.iter().enumerate() {
                let xi: f64 = (0..n).map(|c| inv[(r, c)] * x[c]).sum();
                w *= (unit * xi).powu(ar as u32);
            }
            w
        })
        .collect();
    Ok(Transform { grid, values, map: inv.transpose(), factor: d.b().powi(-k0) })
}

pub fn atom_ft_derivative(atom: &Atom, d: &Dilation, alpha: &[usize], x: &[f64]) -> Result<Complex64> {
    Ok(derivative_transform(atom, d, alpha)?.eval(x))
}

/// `â = b^{k₀}(D_{A*}^{k₀} 𝔉 D_A^{k₀} a)`, with `D_A^{k₀}a` resampled by interpolation.
pub fn dilation_route_transform(atom: &Atom, d: &Dilation) -> Result<Transform> {
    let k0 = atom.ball().scale;
    let pulled = dilate_samples(atom.samples(), d, k0, None)?;
    Ok(Transform {
        grid: pulled.grid().clone(),
        values: pulled.values().iter().map(|v| v.to_complex()).collect(),
        map: d.power(k0).transpose(),
        factor: d.b().powi(k0),
    })
}

/// Evenly spread unit vectors.
pub fn directions(dim: usize, count: usize) -> Vec<Vec<f64>> {
    let count = count.max(1);
    match dim {
        1 => {
            if count == 1 {
                vec![vec![1.0]]
            } else {
                vec![vec![1.0], vec![-1.0]]
            }
        }
        2 => (0..count)
            .map(|j| {
                let t = TAU * (j as f64 + 0.25) / count as f64;
                vec![t.cos(), t.sin()]
            })
            .collect(),
        _ => {
            let golden = PI * (3.0 - 5f64.sqrt());
            (0..count)
                .map(|j| {
                    let z = 1.0 - 2.0 * (j as f64 + 0.5) / count as f64;
                    let r = (1.0 - z * z).sqrt();
                    let t = golden * j as f64;
                    vec![r * t.cos(), r * t.sin(), z]
                })
                .collect()
        }
    }
}

#[derive(Clone, Debug)]
pub struct ScanPoint {
    pub x: Vec<f64>,
    pub shell: i32,
    pub rho_star: f64,
}

/// Points on the adjoint shells `(A*)ᵏB₀* ∖ (A*)^{k−1}B₀*`, `k ∈ [k_min, k_max]`.
#[derive(Clone, Debug)]
pub struct ScanGrid {
    points: Vec<ScanPoint>,
    k_range: (i32, i32),
}

impl ScanGrid {
    /// `directions` rays per shell with `radial` points each, placed at cell
    /// midpoints between the inner and outer shell boundary along the ray.
    pub fn new(d: &Dilation, k_range: (i32, i32), directions_count: usize, radial: usize) -> Result<Self> {
        let (k_min, k_max) = k_range;
        if k_min > k_max || radial == 0 {
            return Err(Error::InvalidArgument(format!("empty scan [{k_min}, {k_max}]")));
        }
        let adj = d.adjoint();
        let mut base = Vec::new();
        for u in directions(d.dim(), directions_count) {
            let t0 = 1.0 / adj.ball_gauge(0, &u);
            let t1 = 1.0 / adj.ball_gauge(1, &u);
            for i in 0..radial {
                let t = t0 + (i as f64 + 0.5) / radial as f64 * (t1 - t0);
                base.push(u.iter().map(|v| v * t).collect::<Vec<f64>>());
            }
        }
        let mut points = Vec::new();
        for k in k_min..=k_max {
            for y in &base {
                let x = adj.apply_power(k - 1, y);
                if adj.shell_index(&x) == Some(k - 1) {
                    points.push(ScanPoint { x, shell: k, rho_star: adj.b().powi(k - 1) });
                }
            }
        }
        Ok(Self { points, k_range })
    }

    pub fn points(&self) -> &[ScanPoint] {
        &self.points
    }

    pub fn k_range(&self) -> (i32, i32) {
        self.k_range
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

fn aliasing_warning(report: &mut VerificationReport, count: usize, total: usize) {
    if count > 0 {
        report.warnings.push(format!("AliasingRisk: {count} of {total} points beyond the grid guard"));
    }
}

#[derive(Clone, Debug)]
pub struct Lemma31Options {
    pub radii: Vec<f64>,
    pub directions: usize,
    /// Slopes are fitted over `|x| ≤ slope_cutoff`.
    pub slope_cutoff: f64,
}

impl Default for Lemma31Options {
    fn default() -> Self {
        let radii = (0..=40).map(|i| 10f64.powf(-3.0 + 5.0 * i as f64 / 40.0)).collect();
        Self { radii, directions: 8, slope_cutoff: 0.1 }
    }
}

/// `|∂^α(𝔉D^{k₀}a)(x)| / (b^{−k₀/r}‖a‖_{L^r}·min{1, |x|^{s−|α|+1}})` along rays.
pub fn lemma31_scan(atom: &Atom, d: &Dilation, alphas: &[Vec<usize>], opts: &Lemma31Options) -> Result<VerificationReport> {
    let k0 = atom.ball().scale;
    let s = atom.s();
    let mut report = VerificationReport::new(
        "lemma31",
        format!("k0={k0};s={s};r={};alphas={}", atom.r(), alphas.len()),
    );
    let scale = if atom.r().is_finite() { d.b().powf(-(k0 as f64) / atom.r()) } else { 1.0 };
    let norm = scale * atom.lr_norm();
    let dirs = directions(d.dim(), opts.directions);
    let mut worst_slope = f64::INFINITY;
    let mut aliased = 0;
    let mut total = 0;
    for alpha in alphas {
        let order: usize = alpha.iter().sum();
        let t = derivative_transform(atom, d, alpha)?;
        let expected = (s - order + 1) as f64;
        let mut alpha_slope = f64::INFINITY;
        for u in &dirs {
            let pts: Vec<Vec<f64>> = opts.radii.iter().map(|r| u.iter().map(|v| v * r).collect()).collect();
            let vals: Vec<f64> = pts.par_iter().map(|x| t.eval(x).norm()).collect();
            let (mut lx, mut ly) = (Vec::new(), Vec::new());
            for ((x, &r), &v) in pts.iter().zip(&opts.radii).zip(&vals) {
                total += 1;
                if t.aliased(x) {
                    aliased += 1;
                }
                let bound = norm * r.powf(expected).min(1.0);
                let ratio = v / bound;
                report.rows.push(ReportRow {
                    point: format!("alpha={alpha:?};{}", format_point(x)),
                    measured: v,
                    bound,
                    ratio,
                    pass: ratio.is_finite(),
                });
                if r <= opts.slope_cutoff && v > 0.0 {
                    lx.push(r.ln());
                    ly.push(v.ln());
                }
            }
            if lx.len() >= 2 {
                alpha_slope = alpha_slope.min(fit_slope(&lx, &ly));
            }
        }
        report.criteria.push(Criterion::at_least(
            format!("small_x_slope{alpha:?}"),
            alpha_slope,
            expected - SLOPE_SLACK,
        ));
        worst_slope = worst_slope.min(alpha_slope - expected);
    }
    report.slope = Some(worst_slope);
    report.finish_sup();
    aliasing_warning(&mut report, aliased, total);
    Ok(report)
}

fn exponent_pair(p: &ExponentFunction) -> (f64, f64) {
    (1.0 / p.p_minus() - 1.0, 1.0 / p.p_plus() - 1.0)
}

/// Per-shell maxima `(ln ρ*, ln max|F|)` over shells with `ρ* ≤ 1`.
/// Shell-wise maxima fitted over `ρ* ≤ cutoff`.
fn near_origin_fit(points: &[ScanPoint], values: &[f64], cutoff: f64) -> Option<f64> {
    let mut shells: Vec<(i32, f64, f64)> = Vec::new();
    for (pt, &v) in points.iter().zip(values) {
        if pt.rho_star > cutoff {
            continue;
        }
        match shells.iter_mut().find(|s| s.0 == pt.shell) {
            Some(s) => s.2 = s.2.max(v),
            None => shells.push((pt.shell, pt.rho_star, v)),
        }
    }
    let (lx, ly): (Vec<f64>, Vec<f64>) =
        shells.iter().filter(|s| s.2 > 0.0).map(|s| (s.1.ln(), s.2.ln())).unzip();
    (lx.len() >= 2).then(|| fit_slope(&lx, &ly))
}

/// Predicted near-origin rate `(s+1)·ln λ₋ / ln b` of `|â|` in `ρ*`.
pub fn near_origin_rate(d: &Dilation, s: usize) -> f64 {
    (s + 1) as f64 * d.lambda_minus().ln() / d.b().ln()
}

/// `|â(x)| / max{ρ*^{1/p₋−1}, ρ*^{1/p₊−1}}` with the dual-route cross-check.
pub fn lemma32_scan(atom: &Atom, d: &Dilation, p: &ExponentFunction, scan: &ScanGrid) -> Result<VerificationReport> {
    let k0 = atom.ball().scale;
    let mut report = VerificationReport::new(
        "lemma32",
        format!("k0={k0};s={};r={};family={}", atom.s(), atom.r(), p.family()),
    );
    let (e_minus, e_plus) = exponent_pair(p);
    let direct = atom_transform(atom);
    let route = dilation_route_transform(atom, d)?;
    let pairs: Vec<(Complex64, Complex64)> =
        scan.points().par_iter().map(|pt| (direct.eval(&pt.x), route.eval(&pt.x))).collect();
    let mut peak: f64 = 0.0;
    let mut gap: f64 = 0.0;
    let mut aliased = 0;
    let mut compared = 0;
    for (pt, (a, b)) in scan.points().iter().zip(&pairs) {
        let v = a.norm();
        peak = peak.max(v);
        // Past either guard the two sums no longer approximate the same integral.
        if direct.aliased(&pt.x) {
            aliased += 1;
        } else if !route.aliased(&pt.x) {
            compared += 1;
            gap = gap.max((a - b).norm());
        }
        let bound = two_branch_max(pt.rho_star, e_minus, e_plus);
        let ratio = v / bound;
        report.rows.push(ReportRow {
            point: format!("k={};{}", pt.shell, format_point(&pt.x)),
            measured: v,
            bound,
            ratio,
            pass: ratio.is_finite(),
        });
    }
    if compared > 0 {
        report.criteria.push(Criterion::at_most("route_agreement", gap / peak, ROUTE_TOLERANCE));
    } else {
        report.warnings.push("no scan point lies inside both aliasing guards".into());
    }
    let values: Vec<f64> = pairs.iter().map(|(a, _)| a.norm()).collect();
    if let Some(slope) = near_origin_fit(scan.points(), &values, d.b().powi(-k0 - 1)) {
        report.criteria.push(Criterion::at_least(
            "near_origin_slope",
            slope,
            near_origin_rate(d, atom.s()) - SLOPE_SLACK,
        ));
        report.slope = Some(slope);
    }
    report.finish_sup();
    aliasing_warning(&mut report, aliased, scan.len());
    Ok(report)
}

/// `F(x) = Σ λ_i â_i(x)` evaluator.
pub struct DecompositionTransform {
    terms: Vec<(Complex64, Transform)>,
}

impl DecompositionTransform {
    pub fn new(decomp: &AtomicDecomposition) -> Self {
        let terms = decomp.coefficients().iter().zip(decomp.atoms()).map(|(c, a)| (*c, atom_transform(a))).collect();
        Self { terms }
    }

    pub fn eval(&self, x: &[f64]) -> Complex64 {
        self.terms.iter().map(|(c, t)| c * t.eval(x)).sum()
    }

    pub fn aliased(&self, x: &[f64]) -> bool {
        self.terms.iter().any(|(_, t)| t.aliased(x))
    }
}

/// `|F(x)| / (N(f)·max{ρ*^{1/p₋−1}, ρ*^{1/p₊−1}})` with `N` the atomic norm expression.
pub fn theorem31_scan(
    decomp: &AtomicDecomposition,
    d: &Dilation,
    p: &ExponentFunction,
    scan: &ScanGrid,
) -> Result<VerificationReport> {
    let mut report = VerificationReport::new(
        "theorem31",
        format!("terms={};family={};norm=atomic_expression", decomp.len(), p.family()),
    );
    let (e_minus, e_plus) = exponent_pair(p);
    let norm = decomp.norm_expression(p, d)?;
    let f = DecompositionTransform::new(decomp);
    let values: Vec<f64> = scan.points().par_iter().map(|pt| f.eval(&pt.x).norm()).collect();
    let mut aliased = 0;
    for (pt, &v) in scan.points().iter().zip(&values) {
        if f.aliased(&pt.x) {
            aliased += 1;
        }
        let bound = norm * two_branch_max(pt.rho_star, e_minus, e_plus);
        let ratio = v / bound;
        report.rows.push(ReportRow {
            point: format!("k={};{}", pt.shell, format_point(&pt.x)),
            measured: v,
            bound,
            ratio,
            pass: ratio.is_finite(),
        });
    }
    report.finish_sup();
    // Both F and N are 1-homogeneous in the coefficients.
    let t = 10.0;
    let norm_t = decomp.rescaled(t).norm_expression(p, d)?;
    let sup_t = scan
        .points()
        .iter()
        .zip(&values)
        .map(|(pt, &v)| t * v / (norm_t * two_branch_max(pt.rho_star, e_minus, e_plus)))
        .fold(0.0, f64::max);
    report.criteria.push(Criterion::at_most(
        "rescale_invariance",
        (sup_t / report.sup_ratio - 1.0).abs(),
        1e-6,
    ));
    aliasing_warning(&mut report, aliased, scan.len());
    Ok(report)
}

/// Rate `1 − 1/p₋ + (s+1)·ln λ₋/ln b` of the origin limit.
pub fn origin_rate(d: &Dilation, p: &ExponentFunction, s: usize) -> f64 {
    1.0 - 1.0 / p.p_minus() + near_origin_rate(d, s)
}

/// `|F(δ_j u)| / ρ*(δ_j u)^{1/p₋−1}` as `δ_j ↓ 0` along each direction.
pub fn origin_limit_scan(
    decomp: &AtomicDecomposition,
    d: &Dilation,
    p: &ExponentFunction,
    directions_count: usize,
    deltas: &[f64],
) -> Result<VerificationReport> {
    if deltas.len() < 2 || deltas.windows(2).any(|w| !(w[1] < w[0]) || w[1] <= 0.0) {
        return Err(Error::InvalidArgument("deltas must be positive and strictly decreasing".into()));
    }
    let s = decomp.atoms().iter().map(|a| a.s()).min().unwrap_or(0);
    let rate = origin_rate(d, p, s);
    let mut report = VerificationReport::new(
        "theorem41",
        format!("terms={};s={s};family={};deltas={}", decomp.len(), p.family(), deltas.len()),
    );
    let e = 1.0 / p.p_minus() - 1.0;
    let adj = d.adjoint();
    let f = DecompositionTransform::new(decomp);
    let mut worst_decay: f64 = 0.0;
    let mut worst_slope = f64::INFINITY;
    let mut monotone = true;
    let mut aliased = 0;
    for u in directions(d.dim(), directions_count) {
        let pts: Vec<Vec<f64>> = deltas.iter().map(|t| u.iter().map(|v| v * t).collect()).collect();
        let vals: Vec<f64> = pts.par_iter().map(|x| f.eval(x).norm()).collect();
        let mut ratios = Vec::with_capacity(pts.len());
        // Per-level maxima, in order of decreasing ρ*.
        let mut levels: Vec<(f64, f64)> = Vec::new();
        for (x, &v) in pts.iter().zip(&vals) {
            if f.aliased(x) {
                aliased += 1;
            }
            let rho = adj.step_quasi_norm(x);
            let bound = if e == 0.0 { 1.0 } else { rho.powf(e) };
            let ratio = v / bound;
            ratios.push(ratio);
            report.rows.push(ReportRow {
                point: format_point(x),
                measured: v,
                bound,
                ratio,
                pass: ratio.is_finite(),
            });
            match levels.last_mut() {
                Some(last) if last.0 == rho => last.1 = last.1.max(ratio),
                _ => levels.push((rho, ratio)),
            }
        }
        worst_decay = worst_decay.max(ratios[ratios.len() - 1] / ratios[0]);
        let tail = &levels[levels.len() / 2..];
        if tail.windows(2).any(|w| w[1].1 > w[0].1) {
            monotone = false;
        }
        let (lx, ly): (Vec<f64>, Vec<f64>) =
            levels.iter().filter(|l| l.1 > 0.0).map(|l| (l.0.ln(), l.1.ln())).unzip();
        if lx.len() >= 2 {
            worst_slope = worst_slope.min(fit_slope(&lx, &ly));
        }
    }
    let at_origin = f.eval(&vec![0.0; d.dim()]).norm();
    let mass: f64 = decomp.coefficients().iter().zip(decomp.atoms()).map(|(c, a)| c.norm() * a.l1_norm()).sum();
    report.criteria.push(Criterion::at_most("final_over_initial", worst_decay, 1e-2));
    report.criteria.push(Criterion::at_least("eventually_decreasing", if monotone { 1.0 } else { 0.0 }, 1.0));
    report.criteria.push(Criterion::at_least("rate_slope", worst_slope, rate - SLOPE_SLACK));
    report.criteria.push(Criterion::at_most("value_at_origin", at_origin / mass, 1e-8));
    report.slope = Some(worst_slope);
    report.finish_sup();
    let total = report.rows.len();
    aliasing_warning(&mut report, aliased, total);
    Ok(report)
}

/// Quasi-uniform points of the base adjoint annulus `B₁* ∖ B₀*`, equal weights
/// summing to `|B₁* ∖ B₀*| = b − 1`.
#[derive(Clone, Debug)]
pub struct AnnulusQuadrature {
    points: Vec<Vec<f64>>,
    weight: f64,
}

impl AnnulusQuadrature {
    pub fn new(d: &Dilation, box_points: usize) -> Self {
        let adj = d.adjoint();
        let half = adj.ball_half_extents(1);
        let lo: Vec<f64> = half.iter().map(|h| -h).collect();
        let points: Vec<Vec<f64>> = halton_points(&lo, &half, box_points)
            .into_iter()
            .filter(|y| adj.in_ball(1, y) && !adj.in_ball(0, y))
            .collect();
        let weight = (adj.b() - 1.0) / points.len().max(1) as f64;
        Self { points, weight }
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn weight(&self) -> f64 {
        self.weight
    }
}

/// Exponents `(p₊ − p₊/p₋ − 1, p₊ − 2)` of the two weight branches; the first
/// is written as `(p₊ − 2) + (1 − p₊/p₋)` so the branches coincide exactly for
/// constant exponents.
pub fn weight_exponents(p: &ExponentFunction) -> (f64, f64) {
    let (pm, pp) = (p.p_minus(), p.p_plus());
    ((pp - 2.0) + (1.0 - pp / pm), pp - 2.0)
}

/// Shell sums `I(k)`, with their total over `k_range` against `N(f)`.
pub fn hardy_littlewood_integral(
    decomp: &AtomicDecomposition,
    d: &Dilation,
    p: &ExponentFunction,
    k_range: (i32, i32),
    quadrature: &AnnulusQuadrature,
) -> Result<VerificationReport> {
    let (k_min, k_max) = k_range;
    if k_min >= k_max {
        return Err(Error::InvalidArgument(format!("k range [{k_min}, {k_max}] too short")));
    }
    let pp = p.p_plus();
    if pp > 1.0 {
        return Err(Error::InvalidArgument("the Hardy–Littlewood weight needs p+ <= 1".into()));
    }
    let (e1, e2) = weight_exponents(p);
    let adj = d.adjoint();
    let b = adj.b();
    let f = DecompositionTransform::new(decomp);
    let norm = decomp.norm_expression(p, d)?;
    let wide = (k_min - 2, k_max + 2);
    let mut aliased = 0;
    let mut total_points = 0;
    let mut sums = Vec::new();
    for k in wide.0..=wide.1 {
        let rho = b.powi(k - 1);
        let weight = rho.powf(e1).min(rho.powf(e2));
        let pts: Vec<Vec<f64>> = quadrature.points().iter().map(|y| adj.apply_power(k - 1, y)).collect();
        let vals: Vec<f64> = pts.par_iter().map(|x| f.eval(x).norm().powf(pp)).collect();
        aliased += pts.iter().filter(|x| f.aliased(x)).count();
        total_points += pts.len();
        let integral: f64 = vals.iter().sum::<f64>() * quadrature.weight() * rho;
        sums.push((k, integral * weight));
    }
    let mut report = VerificationReport::new(
        "hardy-littlewood",
        format!("terms={};family={};k=[{k_min},{k_max}];norm=atomic_expression", decomp.len(), p.family()),
    );
    let inner: Vec<(i32, f64)> = sums.iter().cloned().filter(|(k, _)| (k_min..=k_max).contains(k)).collect();
    let third = ((k_max - k_min + 1) / 3).max(1);
    let mut worst_outer: f64 = 0.0;
    let lookup = |k: i32| sums.iter().find(|s| s.0 == k).map(|s| s.1).unwrap_or(0.0);
    let center = (k_min + k_max) as f64 / 2.0;
    for &(k, v) in &inner {
        // Compare with the neighbour one shell closer to the centre.
        let toward = if (k as f64) < center { k + 1 } else if (k as f64) > center { k - 1 } else { k };
        let neighbour = lookup(toward);
        let ratio = if toward == k { 1.0 } else { v / neighbour };
        let outer = k < k_min + third || k > k_max - third;
        if outer {
            worst_outer = worst_outer.max(ratio);
        }
        report.rows.push(ReportRow {
            point: format!("k={k}"),
            measured: v,
            bound: neighbour,
            ratio,
            pass: if outer { ratio <= 0.9 } else { ratio.is_finite() },
        });
    }
    let total = |range: (i32, i32)| -> f64 {
        sums.iter().filter(|(k, _)| (range.0..=range.1).contains(k)).map(|s| s.1).sum::<f64>().powf(1.0 / pp) / norm
    };
    let value = total(k_range);
    let widened = total(wide);
    report.sup_ratio = value;
    report.criteria.push(Criterion::at_most("outer_decay", worst_outer, 0.9));
    report.criteria.push(Criterion::at_most("widening_change", (widened / value - 1.0).abs(), 0.05));
    if p.p_minus() == p.p_plus() {
        report.criteria.push(Criterion::at_most("branch_gap", (e1 - e2).abs(), 0.0));
    }
    aliasing_warning(&mut report, aliased, total_points);
    Ok(report)
}

/// `φ(x) = (1 − q(x)/c)⁴` on `Δ`, zero outside.
pub fn default_phi(d: &Dilation, resolution: usize) -> Result<SampledFunction> {
    let half = d.ball_half_extents(0).into_iter().fold(0.0, f64::max);
    let grid = Grid::centered(d.dim(), 1.02 * half, resolution)?;
    let phi = SampledFunction::from_fn(grid, |x| {
        let g = d.ball_gauge(0, x);
        if g < 1.0 {
            (1.0 - g * g).powi(4)
        } else {
            0.0
        }
    });
    if phi.integrate() == 0.0 {
        return Err(Error::InvalidArgument("kernel has zero integral".into()));
    }
    Ok(phi)
}

struct MaximalContext<'a, T: Value> {
    f: &'a SampledFunction<T>,
    phi: &'a SampledFunction,
    d: &'a Dilation,
    scales: Vec<ScaleTerm>,
    f_nodes: Vec<(Vec<f64>, T)>,
    phi_nodes: Vec<(Vec<f64>, f64)>,
    f_box: (Vec<f64>, Vec<f64>),
}

struct ScaleTerm {
    forward: DMatrix<f64>,
    backward: DMatrix<f64>,
    weight: f64,
    /// Quadrature over the kernel's nodes (true) or over `f`'s nodes.
    kernel_nodes: bool,
    reach: f64,
}

impl<'a, T: Value> MaximalContext<'a, T> {
    fn new(f: &'a SampledFunction<T>, phi: &'a SampledFunction, d: &'a Dilation, i_range: (i32, i32)) -> Result<Self> {
        let (lo, hi) = i_range;
        if lo > hi {
            return Err(Error::InvalidArgument(format!("empty scale range [{lo}, {hi}]")));
        }
        if phi.integrate() == 0.0 {
            return Err(Error::InvalidArgument("kernel has zero integral".into()));
        }
        let n = d.dim();
        let phi_reach = phi.grid().half_width() * (n as f64).sqrt();
        let hf = f.grid().spacing();
        let hp = phi.grid().spacing();
        let scales = (lo..=hi)
            .map(|i| {
                let backward = d.power(-i);
                let spread = backward.norm();
                ScaleTerm {
                    forward: d.power(i),
                    weight: d.b().powi(i),
                    kernel_nodes: spread * hp <= hf,
                    reach: spread * phi_reach,
                    backward,
                }
            })
            .collect();
        let collect = |g: &Grid, vals: &[T]| -> Vec<(Vec<f64>, T)> {
            vals.iter().enumerate().filter(|(_, v)| !v.is_zero()).map(|(i, v)| (g.node(i), *v)).collect()
        };
        let f_nodes = collect(f.grid(), f.values());
        let phi_nodes = phi
            .values()
            .iter()
            .enumerate()
            .filter(|(_, v)| **v != 0.0)
            .map(|(i, v)| (phi.grid().node(i), *v))
            .collect();
        let f_box = f.nonzero_bounds().unwrap_or_else(|| (vec![0.0; n], vec![0.0; n]));
        Ok(Self { f, phi, d, scales, f_nodes, phi_nodes, f_box })
    }

    fn distance_to_support(&self, x: &[f64]) -> f64 {
        let (lo, hi) = &self.f_box;
        x.iter()
            .enumerate()
            .map(|(a, v)| (lo[a] - v).max(v - hi[a]).max(0.0).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    fn term(&self, scale: &ScaleTerm, x: &[f64]) -> f64 {
        let n = self.d.dim();
        if self.f_nodes.is_empty() || self.distance_to_support(x) > scale.reach {
            return 0.0;
        }
        let mut acc = T::default();
        let mut y = [0.0; 3];
        let mut z = [0.0; 3];
        if scale.kernel_nodes {
            // ∫ φ(u) f(x − A^{−i}u) du over the kernel's nodes.
            for (u, w) in &self.phi_nodes {
                for r in 0..n {
                    y[r] = x[r] - (0..n).map(|c| scale.backward[(r, c)] * u[c]).sum::<f64>();
                }
                acc = acc + self.f.interpolate(&y[..n]) * *w;
            }
            acc = acc * self.phi.grid().cell_volume();
        } else {
            // Σ_j f(x_j)·bⁱφ(Aⁱ(x − x_j)) hⁿ over f's nodes.
            for (xj, v) in &self.f_nodes {
                for a in 0..n {
                    z[a] = x[a] - xj[a];
                }
                for (r, yr) in y.iter_mut().enumerate().take(n) {
                    *yr = (0..n).map(|c| scale.forward[(r, c)] * z[c]).sum();
                }
                let k = self.phi.interpolate(&y[..n]);
                if k != 0.0 {
                    acc = acc + *v * k;
                }
            }
            acc = acc * (scale.weight * self.f.grid().cell_volume());
        }
        acc.modulus()
    }

    fn at(&self, x: &[f64]) -> f64 {
        self.scales.iter().map(|s| self.term(s, x)).fold(0.0, f64::max)
    }
}

/// `M_φ f(x) = max_{i ∈ i_range} |f ∗ φ_i(x)|` with `φ_i = bⁱφ(Aⁱ·)`.
pub fn maximal_at<T: Value>(
    f: &SampledFunction<T>,
    phi: &SampledFunction,
    d: &Dilation,
    i_range: (i32, i32),
    points: &[Vec<f64>],
) -> Result<Vec<f64>> {
    let ctx = MaximalContext::new(f, phi, d, i_range)?;
    Ok(points.par_iter().map(|x| ctx.at(x)).collect())
}

/// Truncated radial maximal function sampled on `output`.
pub fn radial_maximal<T: Value>(
    f: &SampledFunction<T>,
    phi: &SampledFunction,
    d: &Dilation,
    i_range: (i32, i32),
    output: &Grid,
) -> Result<SampledFunction> {
    let ctx = MaximalContext::new(f, phi, d, i_range)?;
    let values: Vec<f64> = (0..output.len()).into_par_iter().map(|i| ctx.at(&output.node(i))).collect();
    SampledFunction::new(output.clone(), values)
}

/// `‖M_φ f‖_{L^{p(·)}}` over `output`; a lower bound for the Hardy quasi-norm.
pub fn hardy_norm_proxy<T: Value>(
    f: &SampledFunction<T>,
    phi: &SampledFunction,
    d: &Dilation,
    p: &ExponentFunction,
    i_range: (i32, i32),
    output: &Grid,
) -> Result<f64> {
    luxemburg_norm(p, &radial_maximal(f, phi, d, i_range, output)?)
}

/// All `α` with `|α| ≤ s`.
pub fn derivative_orders(dim: usize, s: usize) -> Vec<Vec<usize>> {
    multi_indices(dim, s)
}
