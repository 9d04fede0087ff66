//! Expansive matrices and the geometry they generate.
//!
//! A [`Dilation`] owns the matrix `A`, its eigenvalue moduli, the unit-volume
//! ellipsoid `Δ = {x : xᵀPx < c}` with `Δ ⊂ rΔ ⊂ AΔ`, and the quadratic forms
//! of the dilated balls `B_j = AʲΔ`, from which the step quasi-norm
//! `ρ(x) = bⁱ` for `x ∈ B_{i+1} ∖ B_i` is read off by integer search.

use std::f64::consts::PI;
use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

/// Index range for cached ball forms and the hard cap on search steps.
const INDEX_CAP: i32 = 200;
const DEFAULT_DEPTH: usize = 60;
const MAX_DEPTH: usize = 480;

/// Volume of the Euclidean unit ball in dimension `n`.
pub fn unit_ball_volume(n: usize) -> f64 {
    match n {
        1 => 2.0,
        2 => PI,
        3 => 4.0 * PI / 3.0,
        _ => {
            // Γ recursion, not reached for supported dimensions.
            let mut v = [1.0, 2.0];
            for k in 2..=n {
                let next = 2.0 * PI / k as f64 * v[0];
                v = [v[1], next];
            }
            v[1]
        }
    }
}

/// Eigenvalue moduli of `A` and `b = |det A|`.
#[derive(Clone, Debug, PartialEq)]
pub struct Spectrum {
    /// Sorted ascending.
    pub moduli: Vec<f64>,
    pub b: f64,
}

impl Spectrum {
    pub fn min_modulus(&self) -> f64 {
        self.moduli[0]
    }

    pub fn max_modulus(&self) -> f64 {
        *self.moduli.last().unwrap()
    }
}

/// Eigenvalue moduli through the characteristic polynomial, for `n ≤ 3`.
///
/// Fails with `SingularMatrix` when `|det A| < 1e-12` and with `NotExpansive`
/// when the smallest modulus does not exceed `1 + 1e-12`.
pub fn spectrum(matrix: &DMatrix<f64>) -> Result<Spectrum> {
    let n = matrix.nrows();
    if n != matrix.ncols() || !(1..=3).contains(&n) {
        return Err(Error::InvalidArgument(format!(
            "expected a square matrix of size 1, 2 or 3, got {}x{}",
            matrix.nrows(),
            matrix.ncols()
        )));
    }
    if matrix.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("matrix has non-finite entries".into()));
    }
    let det = matrix.determinant();
    if det.abs() < 1e-12 {
        return Err(Error::SingularMatrix { det: det.abs() });
    }
    let mut moduli = match n {
        1 => vec![matrix[(0, 0)].abs()],
        2 => quadratic_moduli(matrix.trace(), det),
        _ => cubic_moduli(matrix, det),
    };
    moduli.sort_by(|a, b| a.total_cmp(b));
    let spec = Spectrum { moduli, b: det.abs() };
    if spec.min_modulus() <= 1.0 + 1e-12 {
        return Err(Error::NotExpansive { min_modulus: spec.min_modulus() });
    }
    Ok(spec)
}

fn quadratic_moduli(trace: f64, det: f64) -> Vec<f64> {
    let disc = trace * trace - 4.0 * det;
    if disc < 0.0 {
        let m = det.sqrt();
        vec![m, m]
    } else {
        // Larger root first, the other from the product to avoid cancellation.
        let s = disc.sqrt();
        let big = if trace >= 0.0 { 0.5 * (trace + s) } else { 0.5 * (trace - s) };
        let small = if big != 0.0 { det / big } else { 0.0 };
        vec![big.abs(), small.abs()]
    }
}

fn cubic_moduli(m: &DMatrix<f64>, det: f64) -> Vec<f64> {
    // λ³ − c2 λ² + c1 λ − c0
    let c2 = m.trace();
    let c1 = m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)] + m[(0, 0)] * m[(2, 2)]
        - m[(0, 2)] * m[(2, 0)]
        + m[(1, 1)] * m[(2, 2)]
        - m[(1, 2)] * m[(2, 1)];
    let c0 = det;
    let (a, b, c) = (-c2, c1, -c0);
    let p = b - a * a / 3.0;
    let q = 2.0 * a * a * a / 27.0 - a * b / 3.0 + c;
    let disc = (q / 2.0).powi(2) + (p / 3.0).powi(3);
    let shift = -a / 3.0;
    let poly = |x: f64| ((x + a) * x + b) * x + c;
    let dpoly = |x: f64| (3.0 * x + 2.0 * a) * x + b;
    let polish = |mut x: f64| {
        for _ in 0..3 {
            let d = dpoly(x);
            if d == 0.0 {
                break;
            }
            let step = poly(x) / d;
            if !step.is_finite() {
                break;
            }
            x -= step;
        }
        x
    };
    if disc > 0.0 {
        let sd = disc.sqrt();
        let t = (-q / 2.0 + sd).cbrt() + (-q / 2.0 - sd).cbrt();
        let real = polish(t + shift);
        let pair = (c0 / real).abs().sqrt();
        vec![real.abs(), pair, pair]
    } else if p.abs() < 1e-300 {
        vec![shift.abs(); 3]
    } else {
        let r = 2.0 * (-p / 3.0).sqrt();
        let arg = ((3.0 * q) / (2.0 * p) * (-3.0 / p).sqrt()).clamp(-1.0, 1.0);
        let phi = arg.acos() / 3.0;
        (0..3)
            .map(|k| polish(r * (phi - 2.0 * PI * k as f64 / 3.0).cos() + shift).abs())
            .collect()
    }
}

/// The unit-volume ellipsoid `Δ = {x : xᵀPx < c}` with `Δ ⊂ rΔ ⊂ AΔ`.
#[derive(Clone, Debug)]
pub struct Ellipsoid {
    /// Symmetric positive definite, normalised to trace `n`.
    pub form: DMatrix<f64>,
    pub level: f64,
    /// `r = 1/√μ_max`.
    pub expansion: f64,
    /// Largest generalized eigenvalue of `(A⁻ᵀPA⁻¹, P)`.
    pub mu_max: f64,
    /// Series truncation depth that produced `form`.
    pub depth: usize,
}

impl Ellipsoid {
    /// `c^{n/2}·V_n/√det P`, which the construction sets to 1.
    pub fn volume(&self) -> f64 {
        let n = self.form.nrows();
        self.level.powf(n as f64 / 2.0) * unit_ball_volume(n) / self.form.determinant().sqrt()
    }
}

/// Lyapunov-type series `Σ_{j≤J} ρ₀^{2j} (A⁻ʲ)ᵀA⁻ʲ` with `ρ₀ = (1+λ₋)/2`,
/// rescaled to unit volume. The depth doubles from 60 until `r > 1 + 1e-6`.
pub fn construct_ellipsoid(matrix: &DMatrix<f64>, lambda_minus: f64) -> Result<Ellipsoid> {
    let n = matrix.nrows();
    let inverse = matrix
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::SingularMatrix { det: matrix.determinant().abs() })?;
    let rho0 = 0.5 * (1.0 + lambda_minus);
    let mut depth = DEFAULT_DEPTH;
    loop {
        let mut form = DMatrix::<f64>::zeros(n, n);
        let mut power = DMatrix::<f64>::identity(n, n);
        let mut weight = 1.0;
        for _ in 0..=depth {
            form += (power.transpose() * &power) * weight;
            power = &inverse * power;
            weight *= rho0 * rho0;
        }
        let trace = form.trace();
        form *= n as f64 / trace;
        form = 0.5 * (&form + form.transpose());
        let pulled = inverse.transpose() * &form * &inverse;
        let mu_max = generalized_max_eigenvalue(&pulled, &form)?;
        let expansion = 1.0 / mu_max.sqrt();
        if expansion.is_finite() && expansion > 1.0 + 1e-6 {
            let level = (form.determinant().sqrt() / unit_ball_volume(n)).powf(2.0 / n as f64);
            return Ok(Ellipsoid { form, level, expansion, mu_max, depth });
        }
        if depth >= MAX_DEPTH {
            return Err(Error::ConstructionFailed(format!(
                "no expansion factor above 1 (r = {expansion:.6}) after depth {depth}"
            )));
        }
        depth *= 2;
    }
}

/// Largest `μ` with `Mv = μPv`, via the Cholesky factor of `P`.
fn generalized_max_eigenvalue(m: &DMatrix<f64>, p: &DMatrix<f64>) -> Result<f64> {
    let chol = p
        .clone()
        .cholesky()
        .ok_or_else(|| Error::ConstructionFailed("ellipsoid form is not positive definite".into()))?;
    let l = chol.l();
    let l_inv = l
        .try_inverse()
        .ok_or_else(|| Error::ConstructionFailed("singular Cholesky factor".into()))?;
    let mut reduced = &l_inv * m * l_inv.transpose();
    reduced = 0.5 * (&reduced + reduced.transpose());
    let eig = SymmetricEigen::new(reduced);
    Ok(eig.eigenvalues.iter().cloned().fold(f64::NEG_INFINITY, f64::max))
}

/// Result of a comparability scan in one regime of `ρ`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RegimeBand {
    /// `min |x|/ρ(x)^{e_low}`, a lower constant `1/C`.
    pub lower: f64,
    /// `max |x|/ρ(x)^{e_high}`, an upper constant `C`.
    pub upper: f64,
    pub samples: usize,
}

/// Empirical constants in `|x| ≍ ρ(x)^{ln λ±/ln b}` for `ρ > 1` and `ρ ≤ 1`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ComparabilityBand {
    pub exponent_minus: f64,
    pub exponent_plus: f64,
    pub large: RegimeBand,
    pub small: RegimeBand,
}

impl ComparabilityBand {
    /// Ratio of the largest upper constant to the smallest lower constant.
    /// When the two exponents coincide this is the spread of `|x|/ρ(x)^e`.
    pub fn spread(&self) -> f64 {
        self.large.upper.max(self.small.upper) / self.large.lower.min(self.small.lower)
    }

    pub fn all_finite_positive(&self) -> bool {
        [self.large.lower, self.large.upper, self.small.lower, self.small.upper]
            .iter()
            .all(|v| v.is_finite() && *v > 0.0)
    }
}

/// Cached quadratic forms `Q_j = (A⁻ʲ)ᵀ P A⁻ʲ`, so that `x ∈ B_j ⟺ xᵀQ_jx < c`.
#[derive(Clone, Debug)]
struct BallForms {
    lo: i32,
    hi: i32,
    /// Row-major `n×n` blocks for `j = lo..=hi`.
    data: Vec<f64>,
}

impl BallForms {
    fn build(matrix: &DMatrix<f64>, inverse: &DMatrix<f64>, form: &DMatrix<f64>) -> Self {
        let n = form.nrows();
        let finite = |m: &DMatrix<f64>| m.iter().all(|v| v.is_finite());
        let mut up = Vec::new();
        let mut q = form.clone();
        for _ in 0..INDEX_CAP {
            q = inverse.transpose() * &q * inverse;
            if !finite(&q) {
                break;
            }
            up.push(q.clone());
        }
        let mut down = Vec::new();
        let mut q = form.clone();
        for _ in 0..INDEX_CAP {
            q = matrix.transpose() * &q * matrix;
            if !finite(&q) {
                break;
            }
            down.push(q.clone());
        }
        let lo = -(down.len() as i32);
        let hi = up.len() as i32;
        let mut data = Vec::with_capacity((down.len() + up.len() + 1) * n * n);
        let mut push = |m: &DMatrix<f64>| {
            for i in 0..n {
                for k in 0..n {
                    data.push(m[(i, k)]);
                }
            }
        };
        for m in down.iter().rev() {
            push(m);
        }
        push(form);
        for m in &up {
            push(m);
        }
        Self { lo, hi, data }
    }

    #[inline]
    fn block(&self, j: i32, n: usize) -> &[f64] {
        let start = (j - self.lo) as usize * n * n;
        &self.data[start..start + n * n]
    }
}

#[inline]
fn quad(q: &[f64], x: &[f64]) -> f64 {
    let n = x.len();
    let mut acc = 0.0;
    for i in 0..n {
        let row = &q[i * n..(i + 1) * n];
        let mut s = 0.0;
        for k in 0..n {
            s += row[k] * x[k];
        }
        acc += x[i] * s;
    }
    acc
}

/// An expansive matrix together with its derived geometry. Immutable after
/// construction; all queries are pure.
#[derive(Debug)]
pub struct Dilation {
    matrix: DMatrix<f64>,
    inverse: DMatrix<f64>,
    spectrum: Spectrum,
    lambda_minus: f64,
    lambda_plus: f64,
    ellipsoid: Ellipsoid,
    tau: i32,
    forms: BallForms,
    seed_scale: f64,
    adjoint: OnceLock<Box<Dilation>>,
}

impl Clone for Dilation {
    fn clone(&self) -> Self {
        let adjoint = OnceLock::new();
        if let Some(a) = self.adjoint.get() {
            let _ = adjoint.set(a.clone());
        }
        Self {
            matrix: self.matrix.clone(),
            inverse: self.inverse.clone(),
            spectrum: self.spectrum.clone(),
            lambda_minus: self.lambda_minus,
            lambda_plus: self.lambda_plus,
            ellipsoid: self.ellipsoid.clone(),
            tau: self.tau,
            forms: self.forms.clone(),
            seed_scale: self.seed_scale,
            adjoint,
        }
    }
}

impl Dilation {
    /// Builds the geometry with the default rates `λ₋ = (1−10⁻³)·min|λ|`,
    /// `λ₊ = (1+10⁻³)·max|λ|`.
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        Self::with_rates(matrix, None, None)
    }

    /// Row-major constructor.
    pub fn from_row_slice(n: usize, entries: &[f64]) -> Result<Self> {
        if entries.len() != n * n {
            return Err(Error::InvalidArgument(format!(
                "expected {} matrix entries, got {}",
                n * n,
                entries.len()
            )));
        }
        Self::new(DMatrix::from_row_slice(n, n, entries))
    }

    /// Builds the geometry with explicit working rates. Requires
    /// `1 < λ₋ ≤ min|λ|` and `λ₊ ≥ max|λ|`.
    pub fn with_rates(
        matrix: DMatrix<f64>,
        lambda_minus: Option<f64>,
        lambda_plus: Option<f64>,
    ) -> Result<Self> {
        let d = Self::build(matrix, lambda_minus, lambda_plus)?;
        let adj = Self::build(d.matrix.transpose(), Some(d.lambda_minus), Some(d.lambda_plus))?;
        let _ = d.adjoint.set(Box::new(adj));
        Ok(d)
    }

    fn build(matrix: DMatrix<f64>, lambda_minus: Option<f64>, lambda_plus: Option<f64>) -> Result<Self> {
        let spectrum = spectrum(&matrix)?;
        let lambda_minus = lambda_minus.unwrap_or((1.0 - 1e-3) * spectrum.min_modulus());
        let lambda_plus = lambda_plus.unwrap_or((1.0 + 1e-3) * spectrum.max_modulus());
        if !(lambda_minus > 1.0 && lambda_minus <= spectrum.min_modulus() * (1.0 + 1e-12)) {
            return Err(Error::InvalidArgument(format!(
                "lambda_minus = {lambda_minus} must lie in (1, {}]",
                spectrum.min_modulus()
            )));
        }
        if !(lambda_plus >= spectrum.max_modulus() * (1.0 - 1e-12)) {
            return Err(Error::InvalidArgument(format!(
                "lambda_plus = {lambda_plus} must be at least {}",
                spectrum.max_modulus()
            )));
        }
        let inverse = matrix
            .clone()
            .try_inverse()
            .ok_or(Error::SingularMatrix { det: spectrum.b })?;
        let ellipsoid = construct_ellipsoid(&matrix, lambda_minus)?;
        let r = ellipsoid.expansion;
        let mut tau = (2f64.ln() / r.ln()).ceil() as i32;
        while r.powi(tau - 1) >= 2.0 {
            tau -= 1;
        }
        while r.powi(tau) < 2.0 {
            tau += 1;
        }
        let forms = BallForms::build(&matrix, &inverse, &ellipsoid.form);
        let n = matrix.nrows();
        let seed_scale = (1.0 / unit_ball_volume(n)).powf(1.0 / n as f64);
        Ok(Self {
            matrix,
            inverse,
            spectrum,
            lambda_minus,
            lambda_plus,
            ellipsoid,
            tau,
            forms,
            seed_scale,
            adjoint: OnceLock::new(),
        })
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn inverse(&self) -> &DMatrix<f64> {
        &self.inverse
    }

    pub fn spectrum(&self) -> &Spectrum {
        &self.spectrum
    }

    /// `b = |det A|`.
    pub fn b(&self) -> f64 {
        self.spectrum.b
    }

    pub fn eig_min(&self) -> f64 {
        self.spectrum.min_modulus()
    }

    pub fn eig_max(&self) -> f64 {
        self.spectrum.max_modulus()
    }

    pub fn lambda_minus(&self) -> f64 {
        self.lambda_minus
    }

    pub fn lambda_plus(&self) -> f64 {
        self.lambda_plus
    }

    pub fn ellipsoid(&self) -> &Ellipsoid {
        &self.ellipsoid
    }

    pub fn expansion_factor(&self) -> f64 {
        self.ellipsoid.expansion
    }

    /// `τ = inf{k ∈ ℤ : r^k ≥ 2}`.
    pub fn tau(&self) -> i32 {
        self.tau
    }

    /// The geometry of `Aᵀ`, which houses `ρ*`.
    pub fn adjoint(&self) -> &Dilation {
        self.adjoint.get_or_init(|| {
            let adj = Self::build(self.matrix.transpose(), Some(self.lambda_minus), Some(self.lambda_plus))
                .expect("adjoint shares the spectrum of an already valid dilation");
            Box::new(adj)
        })
    }

    /// `A^k` as a dense matrix.
    pub fn power(&self, k: i32) -> DMatrix<f64> {
        let base = if k >= 0 { &self.matrix } else { &self.inverse };
        let mut out = DMatrix::identity(self.dim(), self.dim());
        for _ in 0..k.unsigned_abs() {
            out = base * out;
        }
        out
    }

    /// `A^k x`.
    pub fn apply_power(&self, k: i32, x: &[f64]) -> Vec<f64> {
        let v = self.power(k) * DVector::from_column_slice(x);
        v.iter().cloned().collect()
    }

    /// Range of ball indices with cached forms.
    pub fn index_range(&self) -> (i32, i32) {
        (self.forms.lo, self.forms.hi)
    }

    /// `xᵀQ_jx` for the ball `B_j`; membership is `< c`.
    pub fn ball_form_value(&self, j: i32, x: &[f64]) -> f64 {
        let j = j.clamp(self.forms.lo, self.forms.hi);
        quad(self.forms.block(j, self.dim()), x)
    }

    /// `x ∈ B_j` (strict inequality; the boundary belongs to the outer shell).
    pub fn in_ball(&self, j: i32, x: &[f64]) -> bool {
        self.ball_form_value(j, x) < self.ellipsoid.level
    }

    /// `x ∈ center + B_j`.
    pub fn in_dilated_ball(&self, center: &[f64], j: i32, x: &[f64]) -> bool {
        let mut y = [0.0; 3];
        for i in 0..x.len() {
            y[i] = x[i] - center[i];
        }
        self.in_ball(j, &y[..x.len()])
    }

    /// Ellipsoidal radius `√(xᵀQ_jx / c)`; `< 1` inside `B_j`.
    pub fn ball_gauge(&self, j: i32, x: &[f64]) -> f64 {
        (self.ball_form_value(j, x) / self.ellipsoid.level).max(0.0).sqrt()
    }

    /// Lipschitz constant of [`Self::ball_gauge`] with respect to `|·|`.
    pub fn ball_gauge_lipschitz(&self, j: i32) -> f64 {
        let n = self.dim();
        let q = DMatrix::from_row_slice(n, n, self.forms.block(j.clamp(self.forms.lo, self.forms.hi), n));
        let eig = SymmetricEigen::new(0.5 * (&q + q.transpose()));
        let top = eig.eigenvalues.iter().cloned().fold(0.0, f64::max);
        (top / self.ellipsoid.level).sqrt()
    }

    /// Half-extents of the axis-aligned bounding box of `B_j`.
    pub fn ball_half_extents(&self, j: i32) -> Vec<f64> {
        let n = self.dim();
        let ak = self.power(j);
        let p_inv = self
            .ellipsoid
            .form
            .clone()
            .try_inverse()
            .expect("ellipsoid form is positive definite");
        let cov = &ak * p_inv * ak.transpose();
        (0..n).map(|i| (self.ellipsoid.level * cov[(i, i)]).sqrt()).collect()
    }

    /// `i` with `x ∈ B_{i+1} ∖ B_i`, or `None` for `x = 0`.
    ///
    /// Membership in `B_j` is monotone in `j`, so the minimal member index is
    /// found by galloping from a scale-based seed and then bisecting.
    pub fn shell_index(&self, x: &[f64]) -> Option<i32> {
        let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            return None;
        }
        let (lo_bound, hi_bound) = (self.forms.lo, self.forms.hi);
        let n = self.dim() as f64;
        let seed = (n * (norm / self.seed_scale).ln() / self.b().ln()).ceil();
        let seed = if seed.is_finite() { seed as i64 } else { 0 };
        let seed = seed.clamp(lo_bound as i64, hi_bound as i64) as i32;
        let member = |j: i32| self.in_ball(j, x);

        let mut budget = INDEX_CAP;
        // Invariant: `outside` not a member, `inside` a member.
        let (mut outside, mut inside);
        if member(seed) {
            inside = seed;
            let mut step = 1;
            loop {
                let probe = (inside - step).max(lo_bound);
                budget -= 1;
                if !member(probe) {
                    outside = probe;
                    break;
                }
                inside = probe;
                if probe == lo_bound || budget <= 0 {
                    return Some(lo_bound - 1);
                }
                step *= 2;
            }
        } else {
            outside = seed;
            let mut step = 1;
            loop {
                let probe = (outside + step).min(hi_bound);
                budget -= 1;
                if member(probe) {
                    inside = probe;
                    break;
                }
                outside = probe;
                if probe == hi_bound || budget <= 0 {
                    return Some(hi_bound);
                }
                step *= 2;
            }
        }
        while inside - outside > 1 {
            let mid = outside + (inside - outside) / 2;
            if member(mid) {
                inside = mid;
            } else {
                outside = mid;
            }
        }
        Some(inside - 1)
    }

    /// Step homogeneous quasi-norm `ρ(x)`.
    pub fn step_quasi_norm(&self, x: &[f64]) -> f64 {
        match self.shell_index(x) {
            None => 0.0,
            Some(i) => self.b().powi(i),
        }
    }

    /// Empirical constants of the comparability `|x| ≍ ρ(x)^{ln λ±/ln b}`.
    pub fn comparability_band(&self, samples: &[Vec<f64>]) -> Result<ComparabilityBand> {
        let lb = self.b().ln();
        let e_minus = self.lambda_minus.ln() / lb;
        let e_plus = self.lambda_plus.ln() / lb;
        let empty = RegimeBand { lower: f64::INFINITY, upper: 0.0, samples: 0 };
        let (mut large, mut small) = (empty, empty);
        for x in samples {
            let Some(i) = self.shell_index(x) else { continue };
            let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            let rho = self.b().powi(i);
            let log_rho = i as f64 * lb;
            if rho > 1.0 {
                large.lower = large.lower.min(norm / (e_minus * log_rho).exp());
                large.upper = large.upper.max(norm / (e_plus * log_rho).exp());
                large.samples += 1;
            } else {
                small.lower = small.lower.min(norm / (e_plus * log_rho).exp());
                small.upper = small.upper.max(norm / (e_minus * log_rho).exp());
                small.samples += 1;
            }
        }
        if large.samples == 0 {
            return Err(Error::EmptyRegime("rho(x) > 1"));
        }
        if small.samples == 0 {
            return Err(Error::EmptyRegime("rho(x) <= 1"));
        }
        Ok(ComparabilityBand { exponent_minus: e_minus, exponent_plus: e_plus, large, small })
    }
}
