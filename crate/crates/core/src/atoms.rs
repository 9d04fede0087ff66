//! Anisotropic `(p(·), r, s)`-atoms and finite atomic decompositions.

use std::path::Path;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::dilation::Dilation;
use crate::error::{Error, Result};
use crate::sampling::{union_quadrature, Ball, Grid, SampledFunction};
use crate::varexp::{
    ball_grid, boundary_subdivisions, default_resolution, indicator_norm_on, ExponentFunction, ModularTerms,
};

/// Largest number of terms accepted in a decomposition.
pub const MAX_TERMS: usize = 64;
pub const SIZE_TOLERANCE: f64 = 1e-6;
pub const MOMENT_TOLERANCE: f64 = 1e-8;
const GRAM_CONDITION_LIMIT: f64 = 1e12;
const DEGENERATE_MASS: f64 = 1e-6;

/// `s_min = max(0, ⌊(1/p₋ − 1)·ln b / ln λ₋⌋)`.
pub fn min_moment_order(p: &ExponentFunction, d: &Dilation) -> usize {
    moment_order_for(p.p_minus(), d.b(), d.lambda_minus())
}

pub fn moment_order_for(p_minus: f64, b: f64, lambda_minus: f64) -> usize {
    let v = ((1.0 / p_minus - 1.0) * b.ln() / lambda_minus.ln()).floor();
    if v > 0.0 {
        v as usize
    } else {
        0
    }
}

/// Multi-indices `γ ∈ ℕⁿ` with `|γ| ≤ max_degree`, by degree then lexicographically.
pub fn multi_indices(dim: usize, max_degree: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    for degree in 0..=max_degree {
        let mut current = vec![0; dim];
        fill_degree(&mut current, 0, degree, &mut out);
    }
    out
}

fn fill_degree(current: &mut Vec<usize>, axis: usize, remaining: usize, out: &mut Vec<Vec<usize>>) {
    if axis + 1 == current.len() {
        current[axis] = remaining;
        out.push(current.clone());
        return;
    }
    for v in (0..=remaining).rev() {
        current[axis] = v;
        fill_degree(current, axis + 1, remaining - v, out);
    }
}

#[inline]
pub fn monomial(x: &[f64], gamma: &[usize]) -> f64 {
    x.iter().zip(gamma).map(|(v, &g)| v.powi(g as i32)).product()
}

/// Everything needed to build one atom.
#[derive(Clone, Debug, PartialEq)]
pub struct AtomParams {
    pub ball: Ball,
    /// Integrability exponent in `(1, ∞]`.
    pub r: f64,
    pub s: usize,
    pub seed: u64,
}

#[derive(Clone, Debug, Serialize)]
pub struct MomentResidual {
    pub gamma: Vec<usize>,
    pub value: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct AtomCheck {
    pub support_ok: bool,
    /// `‖a‖_{L^r}·‖1_B‖ / |B|^{1/r}`; at most `1 + 1e-6` for a valid atom.
    pub size_ratio: f64,
    /// Largest `|∫a·xᵞ| / ‖a‖_{L¹}` over `|γ| ≤ s`.
    pub max_moment_residual: f64,
    pub pass: bool,
}

#[derive(Clone, Debug)]
pub struct Atom {
    params: AtomParams,
    samples: SampledFunction,
    lr_norm: f64,
    l1_norm: f64,
    indicator_norm: f64,
    ball_volume: f64,
    moment_residuals: Vec<MomentResidual>,
}

fn lr_norm(f: &SampledFunction, r: f64) -> f64 {
    f.lr_norm(r)
}

fn validate_params(d: &Dilation, params: &AtomParams) -> Result<()> {
    if params.ball.center.len() != d.dim() {
        return Err(Error::InvalidArgument(format!(
            "ball center has {} coordinates, dilation acts on dimension {}",
            params.ball.center.len(),
            d.dim()
        )));
    }
    if !(params.r > 1.0) {
        return Err(Error::InvalidArgument(format!("r = {} must exceed 1", params.r)));
    }
    Ok(())
}

/// Build an atom on a grid fitted to its ball.
pub fn make_atom(d: &Dilation, p: &ExponentFunction, params: &AtomParams, resolution: Option<usize>) -> Result<Atom> {
    validate_params(d, params)?;
    let m = resolution.unwrap_or_else(|| default_resolution(d.dim()));
    let grid = ball_grid(d, &params.ball.center, params.ball.scale, m)?;
    make_atom_on(d, p, params, &grid)
}

/// Build an atom on a given grid, which must contain the ball.
///
/// The seed `ψ·P` (a smooth bump in ellipsoid coordinates times a random
/// polynomial) is projected onto the complement of `span{ψ·zᵞ : |γ| ≤ s}`
/// along the grid moments, which leaves exactly vanishing discrete moments
/// while keeping the atom as smooth as the bump. It is then rescaled to meet
/// the size condition with equality.
pub fn make_atom_on(d: &Dilation, p: &ExponentFunction, params: &AtomParams, grid: &Grid) -> Result<Atom> {
    validate_params(d, params)?;
    let n = d.dim();
    let Ball { center, scale } = &params.ball;
    let half = d.ball_half_extents(*scale);
    for a in 0..n {
        if (center[a] - grid.center()[a]).abs() + half[a] > grid.half_width() {
            return Err(Error::SupportOverflow(format!(
                "ball {center:?} + B_{scale} does not fit the grid on axis {a}"
            )));
        }
    }
    let ell = half.iter().cloned().fold(0.0, f64::max);

    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let seed_terms = multi_indices(n, params.s + 2);
    let coeffs: Vec<f64> = seed_terms.iter().map(|_| rng.sample(StandardNormal)).collect();
    let basis = multi_indices(n, params.s);
    let nb = basis.len();

    // Nodes inside the ball with their bump weight, scaled coordinates and seed value.
    // Seed coordinates y = A^{−k₀}(x − x₀)/ℓ₀ fill the unit box for every k₀.
    let ell0 = d.ball_half_extents(0).into_iter().fold(0.0, f64::max);
    let inv = d.power(-*scale) / ell0;
    let mut idx = Vec::new();
    let mut bump = Vec::new();
    let mut zs = Vec::new();
    let mut seed_vals = Vec::new();
    let mut x = vec![0.0; n];
    let mut rel = vec![0.0; n];
    for i in 0..grid.len() {
        grid.node_into(i, &mut x);
        for a in 0..n {
            rel[a] = x[a] - center[a];
        }
        let g = d.ball_gauge(*scale, &rel);
        if g >= 1.0 {
            continue;
        }
        let y: Vec<f64> = (0..n).map(|r| (0..n).map(|c| inv[(r, c)] * rel[c]).sum()).collect();
        let poly: f64 = seed_terms.iter().zip(&coeffs).map(|(t, c)| c * monomial(&y, t)).sum();
        let psi = (1.0 - g * g).powi(4);
        idx.push(i);
        bump.push(psi);
        seed_vals.push(psi * poly);
        zs.extend(rel.iter().map(|v| v / ell));
    }
    if idx.len() < 4 * nb {
        return Err(Error::GramIllConditioned { condition: f64::INFINITY });
    }
    let z = |k: usize| &zs[k * n..(k + 1) * n];
    let powers: Vec<Vec<f64>> = (0..idx.len()).map(|k| basis.iter().map(|g| monomial(z(k), g)).collect()).collect();

    let mut gram = DMatrix::<f64>::zeros(nb, nb);
    for (k, row) in powers.iter().enumerate() {
        for i in 0..nb {
            for j in 0..=i {
                gram[(i, j)] += bump[k] * row[i] * row[j];
            }
        }
    }
    for i in 0..nb {
        for j in 0..i {
            gram[(j, i)] = gram[(i, j)];
        }
    }
    let eig = SymmetricEigen::new(gram.clone());
    let (lo, hi) = eig
        .eigenvalues
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), &v| (lo.min(v), hi.max(v.abs())));
    let condition = if lo > 0.0 { hi / lo } else { f64::INFINITY };
    if condition > GRAM_CONDITION_LIMIT {
        return Err(Error::GramIllConditioned { condition });
    }
    let chol = gram.cholesky().ok_or(Error::GramIllConditioned { condition })?;

    let mut vals = seed_vals.clone();
    let seed_mass: f64 = seed_vals.iter().map(|v| v * v).sum();
    for _ in 0..4 {
        let mut moments = DVector::<f64>::zeros(nb);
        let mut scale_ref = 0.0;
        for (k, row) in powers.iter().enumerate() {
            for i in 0..nb {
                moments[i] += vals[k] * row[i];
            }
            scale_ref += vals[k].abs();
        }
        if moments.amax() <= 1e-16 * scale_ref {
            break;
        }
        let c = chol.solve(&moments);
        for (k, row) in powers.iter().enumerate() {
            let corr: f64 = row.iter().zip(c.iter()).map(|(m, ci)| m * ci).sum();
            vals[k] -= bump[k] * corr;
        }
    }
    let kept: f64 = vals.iter().map(|v| v * v).sum::<f64>() / seed_mass.max(f64::MIN_POSITIVE);
    if !(kept >= DEGENERATE_MASS) {
        return Err(Error::DegenerateSeed { kept });
    }

    let mut samples = SampledFunction::zeros(grid.clone());
    for (k, &i) in idx.iter().enumerate() {
        samples.values_mut()[i] = vals[k];
    }
    let ball_volume = d.b().powi(*scale);
    let indicator_norm = indicator_norm_on(p, d, center, *scale, grid)?;
    let target = ball_volume.powf(1.0 / params.r) / indicator_norm;
    let current = lr_norm(&samples, params.r);
    let samples = samples.scaled(target / current).with_support(params.ball.clone());

    let atom = Atom::assemble(d, params.clone(), samples, indicator_norm);
    let check = atom.validate(d, p)?;
    if !check.pass {
        return Err(Error::ConstructionFailed(format!("atom failed validation: {check:?}")));
    }
    Ok(atom)
}

/// `make_atom` retried with derived seeds while the seed is degenerate.
pub fn make_atom_retrying(
    d: &Dilation,
    p: &ExponentFunction,
    params: &AtomParams,
    resolution: Option<usize>,
    attempts: usize,
) -> Result<Atom> {
    let mut last = None;
    for t in 0..attempts.max(1) as u64 {
        let mut tried = params.clone();
        tried.seed = params.seed.wrapping_add(t.wrapping_mul(0x9E37_79B9_7F4A_7C15));
        match make_atom(d, p, &tried, resolution) {
            Err(e @ Error::DegenerateSeed { .. }) => last = Some(e),
            other => return other,
        }
    }
    Err(last.expect("at least one attempt"))
}

fn raw_moments(f: &SampledFunction, s: usize) -> Vec<MomentResidual> {
    let grid = f.grid();
    let n = grid.dim();
    let gammas = multi_indices(n, s);
    let mut sums = vec![0.0; gammas.len()];
    let mut x = vec![0.0; n];
    for (i, &v) in f.values().iter().enumerate() {
        if v == 0.0 {
            continue;
        }
        grid.node_into(i, &mut x);
        for (acc, g) in sums.iter_mut().zip(&gammas) {
            *acc += v * monomial(&x, g);
        }
    }
    let vol = grid.cell_volume();
    gammas
        .into_iter()
        .zip(sums)
        .map(|(gamma, s)| MomentResidual { gamma, value: (s * vol).abs() })
        .collect()
}

impl Atom {
    fn assemble(d: &Dilation, params: AtomParams, samples: SampledFunction, indicator_norm: f64) -> Self {
        let lr = lr_norm(&samples, params.r);
        let l1 = samples.lr_norm(1.0);
        let moment_residuals = raw_moments(&samples, params.s);
        let ball_volume = d.b().powi(params.ball.scale);
        Self { params, samples, lr_norm: lr, l1_norm: l1, indicator_norm, ball_volume, moment_residuals }
    }

    pub fn params(&self) -> &AtomParams {
        &self.params
    }

    pub fn ball(&self) -> &Ball {
        &self.params.ball
    }

    pub fn r(&self) -> f64 {
        self.params.r
    }

    pub fn s(&self) -> usize {
        self.params.s
    }

    pub fn samples(&self) -> &SampledFunction {
        &self.samples
    }

    pub fn lr_norm(&self) -> f64 {
        self.lr_norm
    }

    pub fn l1_norm(&self) -> f64 {
        self.l1_norm
    }

    /// `‖1_B‖_{L^{p(·)}}` used for the size condition.
    pub fn indicator_norm(&self) -> f64 {
        self.indicator_norm
    }

    /// `|B| = b^{k₀}`.
    pub fn ball_volume(&self) -> f64 {
        self.ball_volume
    }

    pub fn moment_residuals(&self) -> &[MomentResidual] {
        &self.moment_residuals
    }

    /// Re-check support, size and moments from the samples alone.
    pub fn validate(&self, d: &Dilation, p: &ExponentFunction) -> Result<AtomCheck> {
        let grid = self.samples.grid();
        let Ball { center, scale } = &self.params.ball;
        let mut x = vec![0.0; grid.dim()];
        let support_ok = self.samples.values().iter().enumerate().all(|(i, &v)| {
            v == 0.0 || {
                grid.node_into(i, &mut x);
                d.in_dilated_ball(center, *scale, &x)
            }
        });
        let indicator = indicator_norm_on(p, d, center, *scale, grid)?;
        let lr = lr_norm(&self.samples, self.params.r);
        let size_ratio = lr * indicator / d.b().powi(*scale).powf(1.0 / self.params.r);
        let l1 = self.samples.lr_norm(1.0);
        let max_moment_residual = raw_moments(&self.samples, self.params.s)
            .iter()
            .map(|m| m.value / l1)
            .fold(0.0, f64::max);
        let pass = support_ok && size_ratio <= 1.0 + SIZE_TOLERANCE && max_moment_residual <= MOMENT_TOLERANCE;
        Ok(AtomCheck { support_ok, size_ratio, max_moment_residual, pass })
    }

    /// Samples as CSV plus a JSON sidecar describing the atom.
    pub fn write(&self, dir: &Path, stem: &str) -> Result<()> {
        self.samples.write_csv(&dir.join(format!("{stem}.csv")))?;
        #[derive(Serialize)]
        struct Sidecar<'a> {
            center: &'a [f64],
            scale: i32,
            r: Option<f64>,
            s: usize,
            seed: u64,
            resolution: usize,
            half_width: f64,
            lr_norm: f64,
            l1_norm: f64,
            indicator_norm: f64,
            moment_residuals: &'a [MomentResidual],
        }
        let grid = self.samples.grid();
        let sidecar = Sidecar {
            center: &self.params.ball.center,
            scale: self.params.ball.scale,
            r: self.params.r.is_finite().then_some(self.params.r),
            s: self.params.s,
            seed: self.params.seed,
            resolution: grid.resolution(),
            half_width: grid.half_width(),
            lr_norm: self.lr_norm,
            l1_norm: self.l1_norm,
            indicator_norm: self.indicator_norm,
            moment_residuals: &self.moment_residuals,
        };
        std::fs::write(dir.join(format!("{stem}.json")), serde_json::to_string_pretty(&sidecar)?)?;
        Ok(())
    }
}

/// `f = Σ λ_i a_i` with finitely many terms.
#[derive(Clone, Debug)]
pub struct AtomicDecomposition {
    coefficients: Vec<Complex64>,
    atoms: Vec<Atom>,
}

impl AtomicDecomposition {
    pub fn new(coefficients: Vec<Complex64>, atoms: Vec<Atom>) -> Result<Self> {
        if atoms.is_empty() || atoms.len() != coefficients.len() {
            return Err(Error::InvalidArgument(format!(
                "{} coefficients for {} atoms",
                coefficients.len(),
                atoms.len()
            )));
        }
        if atoms.len() > MAX_TERMS {
            return Err(Error::InvalidArgument(format!("at most {MAX_TERMS} terms, got {}", atoms.len())));
        }
        Ok(Self { coefficients, atoms })
    }

    pub fn coefficients(&self) -> &[Complex64] {
        &self.coefficients
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn balls(&self) -> Vec<Ball> {
        self.atoms.iter().map(|a| a.ball().clone()).collect()
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// Same atoms with every coefficient multiplied by `t`.
    pub fn rescaled(&self, t: f64) -> Self {
        Self { coefficients: self.coefficients.iter().map(|c| c * t).collect(), atoms: self.atoms.clone() }
    }

    pub fn norm_expression(&self, p: &ExponentFunction, d: &Dilation) -> Result<f64> {
        atomic_norm_expression(p, d, &self.coefficients, &self.balls())
    }

    pub fn coefficient_sum_check(&self, p: &ExponentFunction, d: &Dilation) -> Result<CoefficientSumCheck> {
        coefficient_sum_check(p, d, &self.coefficients, &self.balls())
    }

    /// `Σ λ_i a_i` on the atoms' common grid.
    pub fn synthesize(&self) -> Result<SampledFunction<Complex64>> {
        let grid = self.atoms[0].samples().grid();
        if let Some(other) = self.atoms.iter().find(|a| a.samples().grid() != grid) {
            return Err(Error::GridMismatch(format!(
                "atoms live on different grids ({:?} vs {:?})",
                grid.center(),
                other.samples().grid().center()
            )));
        }
        let mut out = SampledFunction::<Complex64>::zeros(grid.clone());
        for (c, atom) in self.coefficients.iter().zip(&self.atoms) {
            for (o, &v) in out.values_mut().iter_mut().zip(atom.samples().values()) {
                *o += c * v;
            }
        }
        Ok(out)
    }
}

/// Grid covering every ball of the family with a little padding.
pub fn covering_grid(d: &Dilation, balls: &[Ball], resolution: usize) -> Result<Grid> {
    let n = d.dim();
    let mut lo = vec![f64::INFINITY; n];
    let mut hi = vec![f64::NEG_INFINITY; n];
    for ball in balls {
        let half = d.ball_half_extents(ball.scale);
        for a in 0..n {
            lo[a] = lo[a].min(ball.center[a] - half[a]);
            hi[a] = hi[a].max(ball.center[a] + half[a]);
        }
    }
    let center: Vec<f64> = (0..n).map(|a| 0.5 * (lo[a] + hi[a])).collect();
    let half = (0..n).map(|a| 0.5 * (hi[a] - lo[a])).fold(0.0, f64::max);
    Grid::new(center, 1.02 * half, resolution)
}

/// `‖{Σ_i [|λ_i|·1_{B_i}/‖1_{B_i}‖]^{p̲}}^{1/p̲}‖_{L^{p(·)}}`.
///
/// The indicator norms are evaluated on the same quadrature as the outer
/// norm, so a single term gives exactly `|λ₁|` up to bisection tolerance.
pub fn atomic_norm_expression(p: &ExponentFunction, d: &Dilation, coefficients: &[Complex64], balls: &[Ball]) -> Result<f64> {
    if coefficients.len() != balls.len() || balls.is_empty() {
        return Err(Error::InvalidArgument("need one ball per coefficient".into()));
    }
    let grid = covering_grid(d, balls, default_resolution(d.dim()))?;
    let pairs: Vec<(Vec<f64>, i32)> = balls.iter().map(|b| (b.center.clone(), b.scale)).collect();
    let quad = union_quadrature(&grid, d, &pairs, boundary_subdivisions(d.dim()));
    let inside = |ball: &Ball, x: &[f64]| d.in_dilated_ball(&ball.center, ball.scale, x);
    let weights: Vec<f64> = balls
        .iter()
        .zip(coefficients)
        .map(|(ball, c)| {
            let norm = ModularTerms::from_points(p, &quad, |x| if inside(ball, x) { 1.0 } else { 0.0 }).luxemburg()?;
            Ok(c.norm() / norm)
        })
        .collect::<Result<_>>()?;
    let pu = p.p_underline();
    let g = |x: &[f64]| {
        let s: f64 = balls
            .iter()
            .zip(&weights)
            .filter(|(b, w)| **w > 0.0 && inside(b, x))
            .map(|(_, w)| w.powf(pu))
            .sum();
        s.powf(1.0 / pu)
    };
    ModularTerms::from_points(p, &quad, g).luxemburg()
}

#[derive(Clone, Debug, Serialize)]
pub struct CoefficientSumCheck {
    pub coefficient_sum: f64,
    pub expression: f64,
    pub pass: bool,
}

/// `Σ|λ_i| ≤ N·(1 + 1e-4)` for the atomic norm expression `N`.
pub fn coefficient_sum_check(
    p: &ExponentFunction,
    d: &Dilation,
    coefficients: &[Complex64],
    balls: &[Ball],
) -> Result<CoefficientSumCheck> {
    let coefficient_sum: f64 = coefficients.iter().map(|c| c.norm()).sum();
    let expression = if coefficient_sum == 0.0 { 0.0 } else { atomic_norm_expression(p, d, coefficients, balls)? };
    Ok(CoefficientSumCheck { coefficient_sum, expression, pass: coefficient_sum <= expression * (1.0 + 1e-4) })
}

/// How decomposition coefficients are drawn.
#[derive(Clone, Debug, PartialEq)]
pub enum CoefficientLaw {
    /// Every coefficient equals one.
    Unit,
    /// Modulus log-uniform in `[low, high]`, phase uniform.
    LogUniform { low: f64, high: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct DecompositionParams {
    pub count: usize,
    pub law: CoefficientLaw,
    /// Inclusive range of ball scales `k₀`.
    pub scales: (i32, i32),
    /// Centres are drawn uniformly from `[−spread, spread]ⁿ`.
    pub spread: f64,
    pub r: f64,
    pub s: usize,
    pub seed: u64,
    pub resolution: Option<usize>,
    /// Build every atom on one covering grid so the sum can be synthesized.
    pub shared_grid: bool,
}

/// Seeded coefficients and balls for a random decomposition.
pub fn random_terms(d: &Dilation, params: &DecompositionParams) -> Result<(Vec<Complex64>, Vec<Ball>)> {
    if params.count == 0 || params.count > MAX_TERMS {
        return Err(Error::InvalidArgument(format!("decomposition count {} not in 1..={MAX_TERMS}", params.count)));
    }
    let (klo, khi) = params.scales;
    if klo > khi {
        return Err(Error::InvalidArgument(format!("empty scale range [{klo}, {khi}]")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut coefficients = Vec::with_capacity(params.count);
    let mut balls = Vec::with_capacity(params.count);
    for _ in 0..params.count {
        let c = match params.law {
            CoefficientLaw::Unit => Complex64::new(1.0, 0.0),
            CoefficientLaw::LogUniform { low, high } => {
                if !(low > 0.0 && high >= low) {
                    return Err(Error::InvalidArgument(format!("bad log-uniform range [{low}, {high}]")));
                }
                let modulus = (rng.random_range(0.0..=1.0) * (high / low).ln()).exp() * low;
                let phase: f64 = rng.random_range(0.0..std::f64::consts::TAU);
                Complex64::from_polar(modulus, phase)
            }
        };
        let scale = rng.random_range(klo..=khi);
        let center = (0..d.dim())
            .map(|_| if params.spread > 0.0 { rng.random_range(-params.spread..=params.spread) } else { 0.0 })
            .collect();
        coefficients.push(c);
        balls.push(Ball { center, scale });
    }
    Ok((coefficients, balls))
}

pub fn random_decomposition(d: &Dilation, p: &ExponentFunction, params: &DecompositionParams) -> Result<AtomicDecomposition> {
    let (coefficients, balls) = random_terms(d, params)?;
    let m = params.resolution.unwrap_or_else(|| default_resolution(d.dim()));
    let shared = if params.shared_grid { Some(covering_grid(d, &balls, m)?) } else { None };
    let atoms = balls
        .into_iter()
        .enumerate()
        .map(|(i, ball)| {
            let atom_params = AtomParams { ball, r: params.r, s: params.s, seed: params.seed ^ ((i as u64 + 1) << 32) };
            match &shared {
                Some(grid) => make_atom_on(d, p, &atom_params, grid),
                None => make_atom_retrying(d, p, &atom_params, Some(m), 4),
            }
        })
        .collect::<Result<Vec<_>>>()?;
    AtomicDecomposition::new(coefficients, atoms)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::sync::Arc;

    fn two_i() -> Dilation {
        Dilation::from_row_slice(2, &[2.0, 0.0, 0.0, 2.0]).unwrap()
    }

    fn params(center: Vec<f64>, scale: i32, r: f64, s: usize, seed: u64) -> AtomParams {
        AtomParams { ball: Ball { center, scale }, r, s, seed }
    }

    #[test]
    fn moment_order_examples() {
        let d = two_i();
        assert_eq!(min_moment_order(&ExponentFunction::constant(1.0).unwrap(), &d), 0);
        // λ₋ slightly below 2 keeps ln b / ln λ₋ just above 2.
        assert_eq!(min_moment_order(&ExponentFunction::constant(0.5).unwrap(), &d), 2);
        assert_eq!(moment_order_for(2.0 / 3.0, 4.0, 2.0), 1);
    }

    #[test]
    fn moment_order_monotonicity() {
        let ps = [0.2, 0.35, 0.5, 0.7, 0.95];
        let ratios = [1.0, 1.3, 1.7, 2.2, 3.0];
        for (i, &ratio) in ratios.iter().enumerate() {
            let lambda = 1.5f64;
            let b = lambda.powf(ratio * 2.0);
            for w in ps.windows(2) {
                assert!(moment_order_for(w[1], b, lambda) <= moment_order_for(w[0], b, lambda));
            }
            if i > 0 {
                let b0 = lambda.powf(ratios[i - 1] * 2.0);
                for &p in &ps {
                    assert!(moment_order_for(p, b, lambda) >= moment_order_for(p, b0, lambda));
                }
            }
        }
    }

    #[test]
    fn multi_index_counts() {
        assert_eq!(multi_indices(1, 3).len(), 4);
        assert_eq!(multi_indices(2, 2), vec![vec![0, 0], vec![1, 0], vec![0, 1], vec![2, 0], vec![1, 1], vec![0, 2]]);
        assert_eq!(multi_indices(3, 3).len(), 20);
    }

    #[test]
    fn atom_examples() {
        let d = two_i();
        let p = ExponentFunction::constant(0.5).unwrap();
        let atom = make_atom(&d, &p, &params(vec![0.3, -0.2], 0, 2.0, 2, 7), Some(96)).unwrap();
        let check = atom.validate(&d, &p).unwrap();
        assert!(check.pass, "{check:?}");
        assert!(atom.samples().integrate().abs() <= 1e-8 * atom.l1_norm());
        assert_relative_eq!(check.size_ratio, 1.0, max_relative = 1e-6);
    }

    #[test]
    fn sup_norm_atom_and_variable_exponent() {
        let d = Dilation::from_row_slice(2, &[1.5, 0.5, -0.25, 2.0]).unwrap();
        let p = ExponentFunction::log_perturbed(0.6, 0.3, Arc::new(d.clone())).unwrap();
        let s = min_moment_order(&p, &d);
        let atom = make_atom(&d, &p, &params(vec![1.0, 0.0], -1, f64::INFINITY, s, 3), Some(96)).unwrap();
        let check = atom.validate(&d, &p).unwrap();
        assert!(check.pass, "{check:?}");
    }

    #[test]
    fn next_moment_is_not_projected() {
        let d = two_i();
        let p = ExponentFunction::constant(1.0).unwrap();
        for seed in 0..10 {
            for s in 0..=2 {
                let atom = make_atom(&d, &p, &params(vec![0.0, 0.0], 0, 2.0, s, seed), Some(64)).unwrap();
                // Moments of order s+1 in ball-normalised coordinates.
                let ell = d.ball_half_extents(0)[0];
                let mut best: f64 = 0.0;
                for gamma in multi_indices(2, s + 1).into_iter().filter(|g| g.iter().sum::<usize>() == s + 1) {
                    let m = atom.samples().integrate_weighted(|x| monomial(&[x[0] / ell, x[1] / ell], &gamma));
                    best = best.max(m.abs());
                }
                assert!(best > 1e-3 * atom.l1_norm(), "seed {seed}, s {s}: {best}");
            }
        }
    }

    #[test]
    fn grid_must_cover_the_ball() {
        let d = two_i();
        let p = ExponentFunction::constant(1.0).unwrap();
        let grid = Grid::centered(2, 0.3, 32).unwrap();
        assert!(matches!(
            make_atom_on(&d, &p, &params(vec![0.0, 0.0], 0, 2.0, 0, 1), &grid),
            Err(Error::SupportOverflow(_))
        ));
    }

    #[test]
    fn gram_conditioning_is_guarded() {
        let d = two_i();
        let p = ExponentFunction::constant(1.0).unwrap();
        // A handful of nodes cannot support cubic moments.
        let r = make_atom(&d, &p, &params(vec![0.0, 0.0], 0, 2.0, 3, 1), Some(6));
        assert!(matches!(r, Err(Error::GramIllConditioned { .. })));
    }

    #[test]
    fn norm_expression_examples() {
        let d = two_i();
        let one = ExponentFunction::constant(1.0).unwrap();
        let half = ExponentFunction::constant(0.5).unwrap();
        let ball = Ball { center: vec![0.0, 0.0], scale: 1 };
        let c = [Complex64::new(0.0, 2.5)];
        for p in [&one, &half] {
            let n = atomic_norm_expression(p, &d, &c, std::slice::from_ref(&ball)).unwrap();
            assert_relative_eq!(n, 2.5, max_relative = 1e-6);
        }
        let far = [Ball { center: vec![-2.0, 0.0], scale: 0 }, Ball { center: vec![2.0, 0.0], scale: 0 }];
        let unit = [Complex64::new(1.0, 0.0); 2];
        assert_relative_eq!(atomic_norm_expression(&one, &d, &unit, &far).unwrap(), 2.0, max_relative = 1e-3);
        let t = 3.7;
        let scaled: Vec<Complex64> = unit.iter().map(|c| c * t).collect();
        let a = atomic_norm_expression(&half, &d, &unit, &far).unwrap();
        let b = atomic_norm_expression(&half, &d, &scaled, &far).unwrap();
        assert_relative_eq!(b, t * a, max_relative = 1e-6);
    }

    #[test]
    fn coefficient_sum_examples() {
        let d = two_i();
        let p = ExponentFunction::log_perturbed(0.5, 0.3, Arc::new(d.clone())).unwrap();
        let ball = Ball { center: vec![0.2, 0.0], scale: -1 };
        let single = coefficient_sum_check(&p, &d, &[Complex64::new(1.0, 0.0)], std::slice::from_ref(&ball)).unwrap();
        assert!(single.pass);
        assert_relative_eq!(single.coefficient_sum, single.expression, max_relative = 1e-4);
        let zero = coefficient_sum_check(&p, &d, &[Complex64::new(0.0, 0.0)], &[ball]).unwrap();
        assert!(zero.pass && zero.expression == 0.0);
    }

    #[test]
    fn synthesis() {
        let d = two_i();
        let p = ExponentFunction::constant(1.0).unwrap();
        let atom = make_atom(&d, &p, &params(vec![0.0, 0.0], 0, 2.0, 1, 5), Some(48)).unwrap();
        let one = AtomicDecomposition::new(vec![Complex64::new(1.0, 0.0)], vec![atom.clone()]).unwrap();
        let f = one.synthesize().unwrap();
        assert!(f.values().iter().zip(atom.samples().values()).all(|(a, b)| a.re == *b && a.im == 0.0));
        let cancel = AtomicDecomposition::new(
            vec![Complex64::new(1.0, 0.0), Complex64::new(-1.0, 0.0)],
            vec![atom.clone(), atom.clone()],
        )
        .unwrap();
        assert!(cancel.synthesize().unwrap().values().iter().all(|v| v.norm() == 0.0));
        let other = make_atom(&d, &p, &params(vec![1.0, 0.0], 0, 2.0, 1, 5), Some(48)).unwrap();
        let mixed = AtomicDecomposition::new(vec![Complex64::new(1.0, 0.0); 2], vec![atom, other]).unwrap();
        assert!(matches!(mixed.synthesize(), Err(Error::GridMismatch(_))));
    }

    #[test]
    fn shared_grid_decomposition_has_zero_mean() {
        let d = two_i();
        let p = ExponentFunction::constant(0.8).unwrap();
        let params = DecompositionParams {
            count: 3,
            law: CoefficientLaw::LogUniform { low: 1e-3, high: 1e3 },
            scales: (-1, 1),
            spread: 1.0,
            r: 2.0,
            s: 1,
            seed: 11,
            resolution: Some(128),
            shared_grid: true,
        };
        let decomp = random_decomposition(&d, &p, &params).unwrap();
        let f = decomp.synthesize().unwrap();
        let scale: f64 = decomp.coefficients().iter().zip(decomp.atoms()).map(|(c, a)| c.norm() * a.l1_norm()).sum();
        assert!(f.integrate().norm() <= 1e-8 * scale);
        assert!(decomp.coefficient_sum_check(&p, &d).unwrap().pass);
    }
}
