//! Uniform midpoint grids and the quadratures built on them.
//!
//! Every integral in the crate is a midpoint rule `hⁿ·Σ f(x_j)` over the nodes
//! of a [`Grid`], summed in a fixed order so that results are reproducible.

use std::f64::consts::PI;
use std::io::Write;
use std::ops::{Add, Mul};
use std::path::Path;

use num_complex::Complex64;

use crate::dilation::Dilation;
use crate::error::{Error, Result};

/// Fraction of the Nyquist frequency `1/(2h)` below which `dft_at` is trusted.
pub const ALIASING_SAFETY: f64 = 0.5;

/// Scalars a [`SampledFunction`] can carry.
pub trait Value:
    Copy + Send + Sync + Default + Add<Output = Self> + Mul<f64, Output = Self> + 'static
{
    fn modulus(self) -> f64;
    fn to_complex(self) -> Complex64;
    fn is_zero(self) -> bool;
    /// `self · c`.
    fn mul_complex(self, c: Complex64) -> Complex64;
}

impl Value for f64 {
    #[inline]
    fn modulus(self) -> f64 {
        self.abs()
    }
    #[inline]
    fn to_complex(self) -> Complex64 {
        Complex64::new(self, 0.0)
    }
    #[inline]
    fn is_zero(self) -> bool {
        self == 0.0
    }
    #[inline]
    fn mul_complex(self, c: Complex64) -> Complex64 {
        Complex64::new(self * c.re, self * c.im)
    }
}

impl Value for Complex64 {
    #[inline]
    fn modulus(self) -> f64 {
        self.norm()
    }
    #[inline]
    fn to_complex(self) -> Complex64 {
        self
    }
    #[inline]
    fn is_zero(self) -> bool {
        self.re == 0.0 && self.im == 0.0
    }
    #[inline]
    fn mul_complex(self, c: Complex64) -> Complex64 {
        self * c
    }
}

/// The cube `center + [−L, L]ⁿ` split into `mⁿ` cells with midpoint nodes.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    center: Vec<f64>,
    half_width: f64,
    resolution: usize,
}

impl Grid {
    pub fn new(center: Vec<f64>, half_width: f64, resolution: usize) -> Result<Self> {
        if !(1..=3).contains(&center.len()) {
            return Err(Error::InvalidArgument(format!("grid dimension {} not in 1..=3", center.len())));
        }
        if !(half_width > 0.0 && half_width.is_finite()) || resolution == 0 {
            return Err(Error::InvalidArgument(format!(
                "grid needs a positive half-width and resolution, got L = {half_width}, m = {resolution}"
            )));
        }
        if center.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidArgument("grid center must be finite".into()));
        }
        Ok(Self { center, half_width, resolution })
    }

    pub fn centered(dim: usize, half_width: f64, resolution: usize) -> Result<Self> {
        Self::new(vec![0.0; dim], half_width, resolution)
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    /// `h = 2L/m`.
    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / self.resolution as f64
    }

    /// `hⁿ`.
    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.dim() as i32)
    }

    pub fn len(&self) -> usize {
        self.resolution.pow(self.dim() as u32)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Coordinate of node `t` along `axis`.
    #[inline]
    pub fn coord(&self, axis: usize, t: usize) -> f64 {
        self.center[axis] - self.half_width + (t as f64 + 0.5) * self.spacing()
    }

    /// Coordinates of the flat (row-major, axis 0 slowest) node index.
    #[inline]
    pub fn node_into(&self, mut index: usize, out: &mut [f64]) {
        let m = self.resolution;
        for axis in (0..self.dim()).rev() {
            out[axis] = self.coord(axis, index % m);
            index /= m;
        }
    }

    pub fn node(&self, index: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.node_into(index, &mut out);
        out
    }

    /// Per-axis integer node indices of a flat index.
    fn unflatten(&self, mut index: usize, out: &mut [usize]) {
        let m = self.resolution;
        for axis in (0..self.dim()).rev() {
            out[axis] = index % m;
            index /= m;
        }
    }

    fn flatten(&self, idx: &[usize]) -> usize {
        idx.iter().fold(0, |acc, &t| acc * self.resolution + t)
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(&self.center)
            .all(|(xi, ci)| (xi - ci).abs() <= self.half_width)
    }

    /// Grid with the same box and twice the resolution.
    pub fn refined(&self) -> Self {
        Self { resolution: self.resolution * 2, ..self.clone() }
    }

    /// Nyquist bound `1/(2h)` times [`ALIASING_SAFETY`].
    pub fn aliasing_guard(&self) -> f64 {
        ALIASING_SAFETY / (2.0 * self.spacing())
    }

    /// Offset of the first node in units of `h`, used for lattice checks.
    fn origin_in_cells(&self, axis: usize, h: f64) -> f64 {
        (self.center[axis] - self.half_width) / h + 0.5
    }
}

/// A ball `center + B_scale` known to contain the support of a function.
#[derive(Clone, Debug, PartialEq)]
pub struct Ball {
    pub center: Vec<f64>,
    pub scale: i32,
}

/// Samples of a compactly supported function at the nodes of a [`Grid`].
#[derive(Clone, Debug)]
pub struct SampledFunction<T: Value = f64> {
    grid: Grid,
    values: Vec<T>,
    support: Option<Ball>,
}

impl<T: Value> SampledFunction<T> {
    pub fn new(grid: Grid, values: Vec<T>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "{} values for a grid with {} nodes",
                values.len(),
                grid.len()
            )));
        }
        if values.iter().any(|v| !v.modulus().is_finite()) {
            return Err(Error::InvalidArgument("sampled values must be finite".into()));
        }
        Ok(Self { grid, values, support: None })
    }

    pub fn from_fn(grid: Grid, f: impl Fn(&[f64]) -> T) -> Self {
        let mut x = vec![0.0; grid.dim()];
        let values = (0..grid.len())
            .map(|i| {
                grid.node_into(i, &mut x);
                f(&x)
            })
            .collect();
        Self { grid, values, support: None }
    }

    pub fn zeros(grid: Grid) -> Self {
        let values = vec![T::default(); grid.len()];
        Self { grid, values, support: None }
    }

    pub fn with_support(mut self, hint: Ball) -> Self {
        self.support = Some(hint);
        self
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [T] {
        &mut self.values
    }

    pub fn support(&self) -> Option<&Ball> {
        self.support.as_ref()
    }

    pub fn dim(&self) -> usize {
        self.grid.dim()
    }

    pub fn map<U: Value>(&self, f: impl Fn(T) -> U) -> SampledFunction<U> {
        SampledFunction {
            grid: self.grid.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
            support: self.support.clone(),
        }
    }

    pub fn scaled(&self, t: f64) -> Self {
        SampledFunction {
            grid: self.grid.clone(),
            values: self.values.iter().map(|&v| v * t).collect(),
            support: self.support.clone(),
        }
    }

    /// `hⁿ·Σ f(x_j)`.
    pub fn integrate(&self) -> T {
        let mut acc = T::default();
        for &v in &self.values {
            acc = acc + v;
        }
        acc * self.grid.cell_volume()
    }

    /// `hⁿ·Σ w(x_j)·f(x_j)`.
    pub fn integrate_weighted(&self, weight: impl Fn(&[f64]) -> f64) -> T {
        let mut x = vec![0.0; self.dim()];
        let mut acc = T::default();
        for (i, &v) in self.values.iter().enumerate() {
            if v.is_zero() {
                continue;
            }
            self.grid.node_into(i, &mut x);
            acc = acc + v * weight(&x);
        }
        acc * self.grid.cell_volume()
    }

    /// `‖f‖_{L^r}` for `r ≥ 1`; `r = ∞` is the max over nodes.
    pub fn lr_norm(&self, r: f64) -> f64 {
        if r.is_infinite() {
            return self.values.iter().map(|v| v.modulus()).fold(0.0, f64::max);
        }
        let s: f64 = self.values.iter().map(|v| v.modulus().powf(r)).sum();
        (s * self.grid.cell_volume()).powf(1.0 / r)
    }

    /// Quadrature of `f(x)·e^{−2πi x·ξ}`, evaluated separably axis by axis.
    ///
    /// The midpoint rule is only trustworthy below the grid's Nyquist bound;
    /// see [`Self::aliasing_risk`].
    pub fn dft_at(&self, xi: &[f64]) -> Complex64 {
        dft_separable(&self.grid, &self.values, xi)
    }

    /// `Some(AliasingRisk)` when `|ξ|` exceeds the grid's aliasing guard.
    pub fn aliasing_risk(&self, xi: &[f64]) -> Option<Error> {
        let norm = xi.iter().map(|v| v * v).sum::<f64>().sqrt();
        let guard = self.grid.aliasing_guard();
        (norm > guard).then_some(Error::AliasingRisk { norm, guard })
    }

    /// [`Self::dft_at`] that fails past the aliasing guard.
    pub fn dft_at_checked(&self, xi: &[f64]) -> Result<Complex64> {
        match self.aliasing_risk(xi) {
            Some(e) => Err(e),
            None => Ok(self.dft_at(xi)),
        }
    }

    /// Multilinear interpolation at an arbitrary point; zero outside the box.
    pub fn interpolate(&self, x: &[f64]) -> T {
        let n = self.dim();
        let h = self.grid.spacing();
        let m = self.grid.resolution as isize;
        let mut base = [0isize; 3];
        let mut frac = [0.0; 3];
        for axis in 0..n {
            let u = (x[axis] - (self.grid.center[axis] - self.grid.half_width)) / h - 0.5;
            if !(u > -1.0 && u < m as f64) {
                return T::default();
            }
            let f = u.floor();
            base[axis] = f as isize;
            frac[axis] = u - f;
        }
        let mut acc = T::default();
        'corner: for corner in 0..(1usize << n) {
            let mut w = 1.0;
            let mut flat = 0usize;
            for axis in 0..n {
                let bit = (corner >> axis) & 1;
                let t = base[axis] + bit as isize;
                if t < 0 || t >= m {
                    continue 'corner;
                }
                w *= if bit == 1 { frac[axis] } else { 1.0 - frac[axis] };
                flat = flat * m as usize + t as usize;
            }
            if w != 0.0 {
                acc = acc + self.values[flat] * w;
            }
        }
        acc
    }

    /// Keys cubic-convolution interpolation (`a = −½`), treating values
    /// beyond the box as zero. Third-order accurate for smooth data.
    pub fn interpolate_cubic(&self, x: &[f64]) -> T {
        let n = self.dim();
        let h = self.grid.spacing();
        let m = self.grid.resolution as isize;
        let mut base = [0isize; 3];
        let mut weights = [[0.0; 4]; 3];
        for axis in 0..n {
            let u = (x[axis] - (self.grid.center[axis] - self.grid.half_width)) / h - 0.5;
            if !(u > -2.0 && u < (m + 1) as f64) {
                return T::default();
            }
            let f = u.floor();
            base[axis] = f as isize - 1;
            let t = u - f;
            for (j, w) in weights[axis].iter_mut().enumerate() {
                *w = keys_kernel(t + 1.0 - j as f64);
            }
        }
        let mut acc = T::default();
        'corner: for corner in 0..(1usize << (2 * n)) {
            let mut w = 1.0;
            let mut flat = 0usize;
            for axis in 0..n {
                let j = (corner >> (2 * axis)) & 3;
                let t = base[axis] + j as isize;
                if t < 0 || t >= m {
                    continue 'corner;
                }
                w *= weights[axis][j];
                flat = flat * m as usize + t as usize;
            }
            if w != 0.0 {
                acc = acc + self.values[flat] * w;
            }
        }
        acc
    }

    /// Axis-aligned bounding box `(lo, hi)` of the cells carrying nonzero values.
    pub fn nonzero_bounds(&self) -> Option<(Vec<f64>, Vec<f64>)> {
        let n = self.dim();
        let h = self.grid.spacing();
        let mut lo = vec![f64::INFINITY; n];
        let mut hi = vec![f64::NEG_INFINITY; n];
        let mut x = vec![0.0; n];
        let mut any = false;
        for (i, v) in self.values.iter().enumerate() {
            if v.is_zero() {
                continue;
            }
            any = true;
            self.grid.node_into(i, &mut x);
            for a in 0..n {
                lo[a] = lo[a].min(x[a] - 0.5 * h);
                hi[a] = hi[a].max(x[a] + 0.5 * h);
            }
        }
        any.then_some((lo, hi))
    }

    /// CSV dump: one row per node, coordinates then value (modulus for
    /// complex samples is not taken; real and imaginary parts are written).
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        let n = self.dim();
        let axes = ["x1", "x2", "x3"];
        writeln!(out, "{},re,im", axes[..n].join(","))?;
        let mut x = vec![0.0; n];
        for (i, v) in self.values.iter().enumerate() {
            self.grid.node_into(i, &mut x);
            let c = v.to_complex();
            for xi in &x {
                write!(out, "{xi:.12e},")?;
            }
            writeln!(out, "{:.12e},{:.12e}", c.re, c.im)?;
        }
        Ok(())
    }
}

/// `exp(−2πi·x_t·ξ)` for the nodes along one axis.
fn twiddles(grid: &Grid, axis: usize, xi: f64) -> Vec<Complex64> {
    (0..grid.resolution)
        .map(|t| {
            let (s, c) = (-2.0 * PI * grid.coord(axis, t) * xi).sin_cos();
            Complex64::new(c, s)
        })
        .collect()
}

#[inline]
fn contract<T: Value>(row: &[T], tw: &[Complex64]) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for (v, w) in row.iter().zip(tw) {
        acc += v.mul_complex(*w);
    }
    acc
}

pub(crate) fn dft_separable<T: Value>(grid: &Grid, values: &[T], xi: &[f64]) -> Complex64 {
    let n = grid.dim();
    let m = grid.resolution;
    let tw: Vec<Vec<Complex64>> = (0..n).map(|a| twiddles(grid, a, xi[a])).collect();
    let total = match n {
        1 => contract(values, &tw[0]),
        2 => {
            let mut acc = Complex64::new(0.0, 0.0);
            for (t0, row) in values.chunks_exact(m).enumerate() {
                acc += contract(row, &tw[1]) * tw[0][t0];
            }
            acc
        }
        _ => {
            let mut acc = Complex64::new(0.0, 0.0);
            for (t0, slab) in values.chunks_exact(m * m).enumerate() {
                let mut inner = Complex64::new(0.0, 0.0);
                for (t1, row) in slab.chunks_exact(m).enumerate() {
                    inner += contract(row, &tw[2]) * tw[1][t1];
                }
                acc += inner * tw[0][t0];
            }
            acc
        }
    };
    total * grid.cell_volume()
}

/// Grid covering `A^{−k}·(support of f)` with `f`'s resolution, or `None` for `f = 0`.
pub fn dilation_target(f: &SampledFunction<impl Value>, d: &Dilation, k: i32) -> Option<Grid> {
    let (lo, hi) = f.nonzero_bounds()?;
    let (blo, bhi) = mapped_box(d, -k, &lo, &hi);
    let n = f.dim();
    let center: Vec<f64> = (0..n).map(|a| 0.5 * (blo[a] + bhi[a])).collect();
    let half = (0..n).map(|a| 0.5 * (bhi[a] - blo[a])).fold(0.0, f64::max);
    let m = f.grid().resolution();
    // One spare cell on each side for the interpolation stencil.
    let half = half * m as f64 / (m as f64 - 2.0).max(1.0);
    Grid::new(center, half.max(f64::MIN_POSITIVE), m).ok()
}

/// Bounding box of `A^k·[lo, hi]`.
fn mapped_box(d: &Dilation, k: i32, lo: &[f64], hi: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let n = lo.len();
    let mut blo = vec![f64::INFINITY; n];
    let mut bhi = vec![f64::NEG_INFINITY; n];
    let mut corner = vec![0.0; n];
    for c in 0..(1usize << n) {
        for a in 0..n {
            corner[a] = if (c >> a) & 1 == 1 { hi[a] } else { lo[a] };
        }
        let y = d.apply_power(k, &corner);
        for a in 0..n {
            blo[a] = blo[a].min(y[a]);
            bhi[a] = bhi[a].max(y[a]);
        }
    }
    (blo, bhi)
}

fn keys_kernel(t: f64) -> f64 {
    let t = t.abs();
    if t <= 1.0 {
        (1.5 * t - 2.5) * t * t + 1.0
    } else if t < 2.0 {
        ((-0.5 * t + 2.5) * t - 4.0) * t + 2.0
    } else {
        0.0
    }
}

/// `x ↦ f(Aᵏx)` resampled by multilinear interpolation onto `target` (or onto
/// a grid fitted to `A^{−k}·supp f` when `target` is `None`).
///
/// Fails with `SupportOverflow` when the dilated support leaves the target box.
pub fn dilate_samples<T: Value>(
    f: &SampledFunction<T>,
    d: &Dilation,
    k: i32,
    target: Option<&Grid>,
) -> Result<SampledFunction<T>> {
    if k == 0 && target.is_none_or(|t| t == f.grid()) {
        return Ok(f.clone());
    }
    let grid = match target {
        Some(t) => {
            if let Some((lo, hi)) = f.nonzero_bounds() {
                let (blo, bhi) = mapped_box(d, -k, &lo, &hi);
                let tol = 1e-9 * t.half_width();
                for a in 0..f.dim() {
                    let (tlo, thi) = (t.center()[a] - t.half_width(), t.center()[a] + t.half_width());
                    if blo[a] < tlo - tol || bhi[a] > thi + tol {
                        return Err(Error::SupportOverflow(format!(
                            "dilated support [{:.4}, {:.4}] escapes target box [{:.4}, {:.4}] on axis {a}",
                            blo[a], bhi[a], tlo, thi
                        )));
                    }
                }
            }
            t.clone()
        }
        None => match dilation_target(f, d, k) {
            Some(g) => g,
            None => return Ok(f.clone()),
        },
    };
    Ok(dilate_onto(f, d, k, &grid))
}

/// [`dilate_samples`] without the support check; values leaving the target
/// box are dropped.
pub fn dilate_onto<T: Value>(f: &SampledFunction<T>, d: &Dilation, k: i32, target: &Grid) -> SampledFunction<T> {
    let ak = d.power(k);
    let n = f.dim();
    let mut y = vec![0.0; n];
    let mut z = vec![0.0; n];
    let values = (0..target.len())
        .map(|i| {
            target.node_into(i, &mut y);
            for r in 0..n {
                z[r] = (0..n).map(|c| ak[(r, c)] * y[c]).sum();
            }
            f.interpolate_cubic(&z)
        })
        .collect();
    let support = f.support.as_ref().map(|s| Ball {
        center: d.apply_power(-k, &s.center),
        scale: s.scale - k,
    });
    SampledFunction { grid: target.clone(), values, support }
}

fn lattice_offsets(f: &Grid, g: &Grid) -> Result<Vec<isize>> {
    let h = f.spacing();
    if (g.spacing() - h).abs() > 1e-12 * h || f.dim() != g.dim() {
        return Err(Error::GridMismatch(format!(
            "convolution needs equal spacing and dimension (h = {h}, {})",
            g.spacing()
        )));
    }
    (0..f.dim())
        .map(|a| {
            let o = g.origin_in_cells(a, h);
            let r = o.round();
            if (o - r).abs() > 1e-9 {
                Err(Error::GridMismatch(format!(
                    "kernel nodes are off the difference lattice on axis {a} (offset {o})"
                )))
            } else {
                Ok(r as isize)
            }
        })
        .collect()
}

/// `(f∗g)(x_k) = hⁿ·Σ_j f(x_j)·g(x_k − x_j)` on `f`'s grid.
///
/// `g`'s nodes must sit on the difference lattice `hℤⁿ` (an odd resolution
/// centred at the origin does); contributions landing outside `f`'s box are
/// dropped.
pub fn convolve_onto<T: Value>(f: &SampledFunction<T>, g: &SampledFunction<f64>) -> Result<SampledFunction<T>> {
    let fg = f.grid();
    let gg = g.grid();
    let offsets = lattice_offsets(fg, gg)?;
    let n = fg.dim();
    let mf = fg.resolution() as isize;
    let mg = gg.resolution();
    let g_nz: Vec<(Vec<isize>, f64)> = g
        .values()
        .iter()
        .enumerate()
        .filter(|(_, v)| **v != 0.0)
        .map(|(i, &v)| {
            let mut idx = [0usize; 3];
            gg.unflatten(i, &mut idx[..n]);
            ((0..n).map(|a| idx[a] as isize + offsets[a]).collect(), v)
        })
        .collect();
    let _ = mg;
    let vol = fg.cell_volume();
    let mut out = vec![T::default(); fg.len()];
    let mut jdx = [0usize; 3];
    let mut kdx = [0usize; 3];
    for (j, &fv) in f.values().iter().enumerate() {
        if fv.is_zero() {
            continue;
        }
        fg.unflatten(j, &mut jdx[..n]);
        'kernel: for (shift, gv) in &g_nz {
            for a in 0..n {
                let t = jdx[a] as isize + shift[a];
                if t < 0 || t >= mf {
                    continue 'kernel;
                }
                kdx[a] = t as usize;
            }
            let k = fg.flatten(&kdx[..n]);
            out[k] = out[k] + fv * (gv * vol);
        }
    }
    Ok(SampledFunction { grid: fg.clone(), values: out, support: None })
}

/// Discrete convolution on `f`'s grid; fails with `SupportOverflow` when the
/// support of the result leaves the box.
pub fn convolve(f: &SampledFunction<f64>, g: &SampledFunction<f64>) -> Result<SampledFunction<f64>> {
    if let (Some((flo, fhi)), Some((glo, ghi))) = (f.nonzero_bounds(), g.nonzero_bounds()) {
        let grid = f.grid();
        let h = grid.spacing();
        for a in 0..f.dim() {
            // Node-level bounds of the sum set, padded by half a cell.
            let lo = flo[a] + glo[a] + 0.5 * h;
            let hi = fhi[a] + ghi[a] - 0.5 * h;
            let (blo, bhi) = (grid.center()[a] - grid.half_width(), grid.center()[a] + grid.half_width());
            if lo < blo - 1e-9 * h || hi > bhi + 1e-9 * h {
                return Err(Error::SupportOverflow(format!(
                    "supports sum [{lo:.4}, {hi:.4}] leaves [{blo:.4}, {bhi:.4}] on axis {a}"
                )));
            }
        }
    }
    convolve_onto(f, g)
}

/// A weighted point set `Σ w_q·F(y_q)`.
#[derive(Clone, Debug)]
pub struct PointQuadrature {
    dim: usize,
    points: Vec<f64>,
    weights: Vec<f64>,
}

impl PointQuadrature {
    pub fn new(dim: usize, points: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if points.len() != dim * weights.len() {
            return Err(Error::InvalidArgument("points and weights disagree in length".into()));
        }
        Ok(Self { dim, points, weights })
    }

    /// All nodes of a grid with weight `hⁿ`.
    pub fn from_grid(grid: &Grid) -> Self {
        let mut points = Vec::with_capacity(grid.len() * grid.dim());
        let mut x = vec![0.0; grid.dim()];
        for i in 0..grid.len() {
            grid.node_into(i, &mut x);
            points.extend_from_slice(&x);
        }
        Self { dim: grid.dim(), points, weights: vec![grid.cell_volume(); grid.len()] }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn point(&self, q: usize) -> &[f64] {
        &self.points[q * self.dim..(q + 1) * self.dim]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn integrate(&self, f: impl Fn(&[f64]) -> f64) -> f64 {
        (0..self.len()).map(|q| self.weights[q] * f(self.point(q))).sum()
    }
}

/// Quadrature over the union of dilated balls `x_i + B_{k_i}` on `grid`.
///
/// Cells wholly inside some ball keep their midpoint; cells cut by a ball
/// boundary are split into `subdivisions^n` sub-cells, and only sub-cell
/// centres inside the union are kept. The cut test uses the Lipschitz bound
/// of the ellipsoidal gauge, so no boundary cell is missed.
pub fn union_quadrature(grid: &Grid, d: &Dilation, balls: &[(Vec<f64>, i32)], subdivisions: usize) -> PointQuadrature {
    let n = grid.dim();
    let h = grid.spacing();
    let half_diag = 0.5 * h * (n as f64).sqrt();
    let lips: Vec<f64> = balls.iter().map(|(_, k)| d.ball_gauge_lipschitz(*k)).collect();
    let inside_union = |x: &[f64], y: &mut [f64]| {
        balls.iter().any(|(c, k)| {
            for a in 0..n {
                y[a] = x[a] - c[a];
            }
            d.in_ball(*k, y)
        })
    };
    let s = subdivisions.max(1);
    let sub_h = h / s as f64;
    let sub_vol = sub_h.powi(n as i32);
    let mut points = Vec::new();
    let mut weights = Vec::new();
    let mut x = vec![0.0; n];
    let mut y = vec![0.0; n];
    let mut z = vec![0.0; n];
    for i in 0..grid.len() {
        grid.node_into(i, &mut x);
        let mut inside = false;
        let mut cut = false;
        for ((c, k), lip) in balls.iter().zip(&lips) {
            for a in 0..n {
                y[a] = x[a] - c[a];
            }
            let g = d.ball_gauge(*k, &y);
            let margin = lip * half_diag;
            if g + margin < 1.0 {
                inside = true;
                break;
            }
            if g - margin <= 1.0 {
                cut = true;
            }
        }
        if inside {
            points.extend_from_slice(&x);
            weights.push(grid.cell_volume());
        } else if cut {
            for sub in 0..s.pow(n as u32) {
                let mut rem = sub;
                for a in (0..n).rev() {
                    let t = rem % s;
                    rem /= s;
                    z[a] = x[a] - 0.5 * h + (t as f64 + 0.5) * sub_h;
                }
                if inside_union(&z, &mut y) {
                    points.extend_from_slice(&z);
                    weights.push(sub_vol);
                }
            }
        }
    }
    PointQuadrature { dim: n, points, weights }
}

/// Radical inverse of `index` in `base`; coordinate of the Halton sequence.
pub fn halton(mut index: u64, base: u64) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    while index > 0 {
        f /= base as f64;
        r += f * (index % base) as f64;
        index /= base;
    }
    r
}

/// First primes, used as Halton bases per axis.
pub const HALTON_BASES: [u64; 3] = [2, 3, 5];

/// Quasi-uniform points of `[lo, hi]` (Halton, skipping the origin-biased start).
pub fn halton_points(lo: &[f64], hi: &[f64], count: usize) -> Vec<Vec<f64>> {
    (1..=count as u64)
        .map(|i| {
            lo.iter()
                .zip(hi)
                .zip(HALTON_BASES)
                .map(|((l, h), base)| l + (h - l) * halton(i + 20, base))
                .collect()
        })
        .collect()
}
