//! Variable exponents `p(·)`, the modular `∫|f|^{p(x)}` and the
//! Luxemburg–Nakano quasi-norm.

use std::f64::consts::E;
use std::sync::Arc;

use crate::dilation::Dilation;
use crate::error::{Error, Result};
use crate::sampling::{union_quadrature, Grid, PointQuadrature, SampledFunction, Value};

/// Relative width of the final bisection bracket.
pub const LUXEMBURG_TOLERANCE: f64 = 1e-8;
const MAX_BISECTIONS: usize = 80;
const BRACKET_DOUBLINGS: i32 = 120;

/// Axis-aligned box `[lo, hi)` carrying a constant exponent value.
#[derive(Clone, Debug, PartialEq)]
pub struct Piece {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub value: f64,
}

impl Piece {
    fn contains(&self, x: &[f64]) -> bool {
        x.iter().zip(&self.lo).zip(&self.hi).all(|((v, l), h)| *v >= *l && *v < *h)
    }
}

#[derive(Clone, Debug)]
pub enum ExponentFunction {
    Constant { p0: f64 },
    /// `p(x) = min{1, p_∞ + c_a / ln(e + ρ(x))}` with `ρ` the step quasi-norm of `dilation`.
    LogPerturbed { p_inf: f64, amplitude: f64, dilation: Arc<Dilation> },
    /// Test-only step exponent; the first piece containing `x` wins.
    Piecewise { pieces: Vec<Piece>, otherwise: f64 },
}

fn check_exponent(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v <= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("{name} = {v} is outside (0, 1]")))
    }
}

impl ExponentFunction {
    pub fn constant(p0: f64) -> Result<Self> {
        check_exponent("p0", p0)?;
        Ok(Self::Constant { p0 })
    }

    pub fn log_perturbed(p_inf: f64, amplitude: f64, dilation: Arc<Dilation>) -> Result<Self> {
        check_exponent("p_inf", p_inf)?;
        if !amplitude.is_finite() || p_inf + amplitude <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "p_inf + amplitude = {} must be positive",
                p_inf + amplitude
            )));
        }
        Ok(Self::LogPerturbed { p_inf, amplitude, dilation })
    }

    pub fn piecewise(pieces: Vec<Piece>, otherwise: f64) -> Result<Self> {
        check_exponent("otherwise", otherwise)?;
        for piece in &pieces {
            check_exponent("piece value", piece.value)?;
            if piece.lo.len() != piece.hi.len() {
                return Err(Error::InvalidArgument("piece corners differ in dimension".into()));
            }
        }
        Ok(Self::Piecewise { pieces, otherwise })
    }

    pub fn family(&self) -> &'static str {
        match self {
            Self::Constant { .. } => "constant",
            Self::LogPerturbed { .. } => "log_perturbed",
            Self::Piecewise { .. } => "piecewise_test",
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            Self::Constant { p0 } => *p0,
            Self::LogPerturbed { p_inf, amplitude, dilation } => {
                let rho = dilation.step_quasi_norm(x);
                (p_inf + amplitude / (E + rho).ln()).min(1.0)
            }
            Self::Piecewise { pieces, otherwise } => {
                pieces.iter().find(|p| p.contains(x)).map_or(*otherwise, |p| p.value)
            }
        }
    }

    pub fn p_minus(&self) -> f64 {
        match self {
            Self::Constant { p0 } => *p0,
            Self::LogPerturbed { p_inf, amplitude, .. } => {
                if *amplitude >= 0.0 {
                    *p_inf
                } else {
                    p_inf + amplitude
                }
            }
            Self::Piecewise { pieces, otherwise } => pieces.iter().map(|p| p.value).fold(*otherwise, f64::min),
        }
    }

    pub fn p_plus(&self) -> f64 {
        match self {
            Self::Constant { p0 } => *p0,
            Self::LogPerturbed { p_inf, amplitude, .. } => {
                if *amplitude >= 0.0 {
                    (p_inf + amplitude).min(1.0)
                } else {
                    *p_inf
                }
            }
            Self::Piecewise { pieces, otherwise } => pieces.iter().map(|p| p.value).fold(*otherwise, f64::max),
        }
    }

    /// `p̲ = min{p₋, 1}`.
    pub fn p_underline(&self) -> f64 {
        self.p_minus().min(1.0)
    }

    /// Limit of `p` at infinity, when the family has one.
    pub fn p_infinity(&self) -> Option<f64> {
        match self {
            Self::Constant { p0 } => Some(*p0),
            Self::LogPerturbed { p_inf, .. } => Some(*p_inf),
            Self::Piecewise { .. } => None,
        }
    }

    pub fn is_log_holder_family(&self) -> bool {
        !matches!(self, Self::Piecewise { .. })
    }
}

/// `(|f(x)|, p(x), weight)` for the nonzero quadrature nodes.
#[derive(Clone, Debug, Default)]
pub struct ModularTerms {
    terms: Vec<(f64, f64, f64)>,
}

impl ModularTerms {
    pub fn from_sampled<T: Value>(p: &ExponentFunction, f: &SampledFunction<T>) -> Self {
        let grid = f.grid();
        let vol = grid.cell_volume();
        let mut x = vec![0.0; grid.dim()];
        let terms = f
            .values()
            .iter()
            .enumerate()
            .filter(|(_, v)| !v.is_zero())
            .map(|(i, v)| {
                grid.node_into(i, &mut x);
                (v.modulus(), p.eval(&x), vol)
            })
            .collect();
        Self { terms }
    }

    /// Terms for `F` evaluated at the points of a quadrature.
    pub fn from_points(p: &ExponentFunction, quad: &PointQuadrature, f: impl Fn(&[f64]) -> f64) -> Self {
        let terms = (0..quad.len())
            .filter_map(|q| {
                let x = quad.point(q);
                let v = f(x).abs();
                (v != 0.0).then(|| (v, p.eval(x), quad.weights()[q]))
            })
            .collect();
        Self { terms }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// `∫|f/λ|^{p(x)}`.
    pub fn modular(&self, lambda: f64) -> f64 {
        let inv = 1.0 / lambda;
        self.terms.iter().map(|(a, p, w)| w * (a * inv).powf(*p)).sum()
    }

    /// Smallest `λ` with `modular(λ) ≤ 1`, by bisection in `log λ`.
    pub fn luxemburg(&self) -> Result<f64> {
        if self.is_zero() {
            return Ok(0.0);
        }
        let m1 = self.modular(1.0);
        let (mut lo, mut hi) = (1.0f64, 1.0f64);
        if !m1.is_finite() {
            return Err(Error::BracketFailure);
        }
        if m1 > 1.0 {
            let mut k = 0;
            while self.modular(hi) > 1.0 {
                k += 1;
                if k > BRACKET_DOUBLINGS {
                    return Err(Error::BracketFailure);
                }
                lo = hi;
                hi *= 2.0;
            }
        } else {
            let mut k = 0;
            while self.modular(lo) <= 1.0 {
                k += 1;
                if k > BRACKET_DOUBLINGS {
                    return Err(Error::BracketFailure);
                }
                hi = lo;
                lo *= 0.5;
            }
        }
        // Invariant: modular(lo) > 1 ≥ modular(hi).
        for _ in 0..MAX_BISECTIONS {
            if (hi - lo) <= LUXEMBURG_TOLERANCE * hi {
                break;
            }
            let mid = (lo * hi).sqrt();
            if self.modular(mid) > 1.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok((lo * hi).sqrt())
    }
}

/// Quadrature of `∫|f(x)|^{p(x)} dx` on `f`'s grid.
pub fn modular<T: Value>(p: &ExponentFunction, f: &SampledFunction<T>) -> f64 {
    ModularTerms::from_sampled(p, f).modular(1.0)
}

/// `‖f‖_{L^{p(·)}} = inf{λ > 0 : ∫|f/λ|^{p(x)} ≤ 1}`.
pub fn luxemburg_norm<T: Value>(p: &ExponentFunction, f: &SampledFunction<T>) -> Result<f64> {
    ModularTerms::from_sampled(p, f).luxemburg()
}

/// Default resolution per axis for a dimension.
pub fn default_resolution(dim: usize) -> usize {
    match dim {
        1 => 512,
        2 => 192,
        _ => 48,
    }
}

/// Sub-cells per axis used on cells cut by a ball boundary.
pub fn boundary_subdivisions(dim: usize) -> usize {
    if dim <= 2 {
        8
    } else {
        4
    }
}

/// Grid centred at `x0` just covering `x0 + B_{k0}`.
pub fn ball_grid(d: &Dilation, x0: &[f64], k0: i32, resolution: usize) -> Result<Grid> {
    let half = d.ball_half_extents(k0).into_iter().fold(0.0, f64::max);
    Grid::new(x0.to_vec(), 1.02 * half, resolution)
}

/// `‖1_{x₀+B_{k₀}}‖_{L^{p(·)}}` on the default fitted grid.
pub fn indicator_norm(p: &ExponentFunction, d: &Dilation, x0: &[f64], k0: i32) -> Result<f64> {
    let grid = ball_grid(d, x0, k0, default_resolution(d.dim()))?;
    indicator_norm_on(p, d, x0, k0, &grid)
}

/// `‖1_{x₀+B_{k₀}}‖_{L^{p(·)}}` with boundary-refined quadrature on `grid`.
pub fn indicator_norm_on(p: &ExponentFunction, d: &Dilation, x0: &[f64], k0: i32, grid: &Grid) -> Result<f64> {
    let quad = union_quadrature(grid, d, &[(x0.to_vec(), k0)], boundary_subdivisions(d.dim()));
    ModularTerms::from_points(p, &quad, |_| 1.0).luxemburg()
}

#[derive(Clone, Debug, PartialEq)]
pub struct LogHolderDiagnostics {
    /// Smallest `C` with `|p(x)−p(y)| ≤ C / ln(e + 1/ρ(x−y))` over the pairs.
    pub c_log: f64,
    /// Smallest `C` with `|p(x)−p_∞| ≤ C / ln(e + ρ(x))` over the points.
    pub c_infinity: Option<f64>,
    pub p_infinity: Option<f64>,
    pub pairs: usize,
    pub conforming: bool,
}

/// Empirical log-Hölder constants of `p` over all pairs of `samples`.
pub fn log_holder_check(p: &ExponentFunction, d: &Dilation, samples: &[Vec<f64>]) -> Result<LogHolderDiagnostics> {
    let n = samples.len();
    let pairs = n * n.saturating_sub(1) / 2;
    if pairs < 1000 {
        return Err(Error::InvalidArgument(format!(
            "log-Hölder check needs at least 1000 pairs, got {pairs}"
        )));
    }
    let values: Vec<f64> = samples.iter().map(|x| p.eval(x)).collect();
    let mut c_log: f64 = 0.0;
    let mut diff = vec![0.0; d.dim()];
    for i in 0..n {
        for j in i + 1..n {
            let dp = (values[i] - values[j]).abs();
            if dp == 0.0 {
                continue;
            }
            for (a, v) in diff.iter_mut().enumerate() {
                *v = samples[i][a] - samples[j][a];
            }
            let rho = d.step_quasi_norm(&diff);
            if rho == 0.0 {
                continue;
            }
            c_log = c_log.max(dp * (E + 1.0 / rho).ln());
        }
    }
    let p_infinity = p.p_infinity();
    let c_infinity = p_infinity.map(|pi| {
        samples
            .iter()
            .zip(&values)
            .map(|(x, v)| (v - pi).abs() * (E + d.step_quasi_norm(x)).ln())
            .fold(0.0, f64::max)
    });
    Ok(LogHolderDiagnostics { c_log, c_infinity, p_infinity, pairs, conforming: p.is_log_holder_family() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn unit_interval(value: f64) -> SampledFunction {
        let grid = Grid::new(vec![1.0], 1.0, 512).unwrap();
        SampledFunction::from_fn(grid, move |x| if x[0] < 1.0 { value } else { 0.0 })
    }

    fn two_i() -> Arc<Dilation> {
        Arc::new(Dilation::from_row_slice(2, &[2.0, 0.0, 0.0, 2.0]).unwrap())
    }

    #[test]
    fn modular_examples() {
        let half = ExponentFunction::constant(0.5).unwrap();
        let one = ExponentFunction::constant(1.0).unwrap();
        assert_relative_eq!(modular(&half, &unit_interval(1.0)), 1.0, epsilon = 1e-12);
        assert_relative_eq!(modular(&one, &unit_interval(2.0)), 2.0, epsilon = 1e-12);
        assert_relative_eq!(modular(&half, &unit_interval(2.0)), 2f64.sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn luxemburg_examples() {
        let p = ExponentFunction::constant(0.75).unwrap();
        assert_relative_eq!(luxemburg_norm(&p, &unit_interval(16.0)).unwrap(), 16.0, max_relative = 1e-8);
        let zero: SampledFunction = SampledFunction::zeros(Grid::centered(1, 1.0, 8).unwrap());
        assert_eq!(luxemburg_norm(&p, &zero).unwrap(), 0.0);
    }

    #[test]
    fn piecewise_hand_oracle() {
        // With t = λ^{−1/2}: t² + t = 1, so λ = ((1+√5)/2)² = (3+√5)/2.
        let p = ExponentFunction::piecewise(
            vec![Piece { lo: vec![0.0], hi: vec![1.0], value: 1.0 }, Piece { lo: vec![1.0], hi: vec![2.0], value: 0.5 }],
            1.0,
        )
        .unwrap();
        let grid = Grid::new(vec![1.0], 1.0, 512).unwrap();
        let f = SampledFunction::from_fn(grid, |_| 1.0);
        let norm = luxemburg_norm(&p, &f).unwrap();
        assert_relative_eq!(norm, (3.0 + 5f64.sqrt()) / 2.0, max_relative = 1e-8);
    }

    #[test]
    fn non_integrable_input_fails_to_bracket() {
        let terms = ModularTerms { terms: vec![(1.0, 1.0, f64::INFINITY)] };
        assert!(matches!(terms.luxemburg(), Err(Error::BracketFailure)));
    }

    #[test]
    fn extremes() {
        let d = two_i();
        let up = ExponentFunction::log_perturbed(0.8, 0.1, d.clone()).unwrap();
        assert_eq!(up.p_minus(), 0.8);
        assert_relative_eq!(up.p_plus(), 0.9, epsilon = 1e-15);
        let capped = ExponentFunction::log_perturbed(0.8, 0.5, d.clone()).unwrap();
        assert_eq!(capped.p_plus(), 1.0);
        assert_eq!(capped.eval(&[0.0, 0.0]), 1.0);
        let down = ExponentFunction::log_perturbed(0.8, -0.3, d.clone()).unwrap();
        assert_relative_eq!(down.p_minus(), 0.5, epsilon = 1e-15);
        assert_eq!(down.p_plus(), 0.8);
        assert!(ExponentFunction::log_perturbed(0.2, -0.3, d).is_err());
        assert!(ExponentFunction::constant(1.5).is_err());
        assert_eq!(ExponentFunction::constant(0.4).unwrap().p_underline(), 0.4);
    }

    fn scattered(n: usize, seed: u64) -> Vec<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| {
                let r: f64 = 10f64.powf(rng.random_range(-3.0..3.0));
                let t: f64 = rng.random_range(0.0..std::f64::consts::TAU);
                vec![r * t.cos(), r * t.sin()]
            })
            .collect()
    }

    #[test]
    fn log_holder_constants() {
        let d = two_i();
        let pts = scattered(100, 1);
        let c = log_holder_check(&ExponentFunction::constant(0.7).unwrap(), &d, &pts).unwrap();
        assert_eq!((c.c_log, c.c_infinity), (0.0, Some(0.0)));
        let p = ExponentFunction::log_perturbed(0.8, 0.1, d.clone()).unwrap();
        let c = log_holder_check(&p, &d, &pts).unwrap();
        assert!(c.c_infinity.unwrap() <= 0.1 + 1e-12);
        assert!(c.conforming && c.c_log.is_finite());
        let pw = ExponentFunction::piecewise(vec![Piece { lo: vec![0.0, 0.0], hi: vec![1.0, 1.0], value: 0.5 }], 1.0).unwrap();
        assert!(!log_holder_check(&pw, &d, &pts).unwrap().conforming);
        assert!(log_holder_check(&p, &d, &pts[..20]).is_err());
    }

    #[test]
    fn decay_constant_on_many_points() {
        let d = two_i();
        let p = ExponentFunction::log_perturbed(0.8, 0.1, d.clone()).unwrap();
        for x in scattered(10_000, 2) {
            let rho = d.step_quasi_norm(&x);
            assert!((p.eval(&x) - 0.8).abs() * (E + rho).ln() <= 0.1 + 1e-12);
        }
    }

    #[test]
    fn indicator_norm_examples() {
        let d = two_i();
        let one = ExponentFunction::constant(1.0).unwrap();
        assert_relative_eq!(indicator_norm(&one, &d, &[0.0, 0.0], 0).unwrap(), 1.0, max_relative = 1e-4);
        let shear = Dilation::from_row_slice(2, &[1.5, 0.7, -0.4, 2.2]).unwrap();
        assert_relative_eq!(indicator_norm(&one, &shear, &[0.3, -1.0], 0).unwrap(), 1.0, max_relative = 1e-4);
        let p0 = ExponentFunction::constant(0.6).unwrap();
        for k in -2..=2 {
            let expect = d.b().powf(k as f64 / 0.6);
            assert_relative_eq!(indicator_norm(&p0, &d, &[0.5, 0.0], k).unwrap(), expect, max_relative = 1e-4);
        }
    }

    #[test]
    fn indicator_norm_is_bracketed_by_extremes() {
        let d = two_i();
        let p = ExponentFunction::log_perturbed(0.6, 0.3, d.clone()).unwrap();
        for k in -2..=2 {
            let v = indicator_norm(&p, &d, &[0.0, 0.0], k).unwrap();
            let a = d.b().powf(k as f64 / p.p_minus());
            let b = d.b().powf(k as f64 / p.p_plus());
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            assert!(v >= lo * (1.0 - 1e-4) && v <= hi * (1.0 + 1e-4), "k = {k}: {v} not in [{lo}, {hi}]");
        }
    }

    fn step_function(levels: &[f64]) -> SampledFunction {
        let m = 8 * levels.len();
        let grid = Grid::new(vec![levels.len() as f64 / 2.0], levels.len() as f64 / 2.0, m).unwrap();
        let levels = levels.to_vec();
        SampledFunction::from_fn(grid, move |x| levels[(x[0].floor() as usize).min(levels.len() - 1)])
    }

    proptest! {
        #[test]
        fn constant_exponent_closed_form(levels in prop::collection::vec(-5.0f64..5.0, 1..6), p0 in 0.1f64..=1.0) {
            let f = step_function(&levels);
            let p = ExponentFunction::constant(p0).unwrap();
            let closed = levels.iter().map(|v| v.abs().powf(p0)).sum::<f64>().powf(1.0 / p0);
            let norm = luxemburg_norm(&p, &f).unwrap();
            prop_assert!((norm - closed).abs() <= 1e-4 * closed.max(1e-300));
        }

        #[test]
        fn homogeneity_unit_ball_and_monotonicity(levels in prop::collection::vec(0.01f64..5.0, 1..6), bump in 0.0f64..2.0) {
            let d = two_i();
            let p = ExponentFunction::log_perturbed(0.5, 0.4, d).unwrap();
            let lift = |v: &[f64]| -> SampledFunction {
                let g = step_function(v);
                let grid = Grid::new(vec![g.grid().center()[0], 0.5], g.grid().half_width().max(0.5), g.grid().resolution()).unwrap();
                SampledFunction::from_fn(grid, move |x| g.interpolate(&[x[0]]))
            };
            let f = lift(&levels);
            let norm = luxemburg_norm(&p, &f).unwrap();
            for t in [0.1, 1.0, 7.0] {
                let scaled = luxemburg_norm(&p, &f.scaled(t)).unwrap();
                prop_assert!((scaled - t * norm).abs() <= 1e-6 * t * norm);
            }
            let unit = modular(&p, &f.scaled(1.0 / norm));
            prop_assert!((unit - 1.0).abs() <= 1e-4);
            let bigger: Vec<f64> = levels.iter().map(|v| v + bump).collect();
            prop_assert!(luxemburg_norm(&p, &lift(&bigger)).unwrap() >= norm * (1.0 - 1e-8));
        }
    }
}
