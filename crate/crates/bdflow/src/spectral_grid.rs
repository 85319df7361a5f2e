//! Periodic-domain fields and exact spectral differential operators.
//!
//! All fields live on a uniform grid over the torus `[0, L)^dim` with a
//! power-of-two number of points per axis. Differentiation, Laplacian
//! inversion and dealiasing act mode-wise on the discrete Fourier
//! transform; the forward transform is normalized so the zero mode
//! equals the mean of the field.

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};
use thiserror::Error;

pub mod io;

#[derive(Debug, Error, PartialEq)]
pub enum GridError {
    #[error("points_per_axis must be a power of two >= 8, got {0}")]
    NonPowerOfTwo(usize),
    #[error("spatial dimension must be 2 or 3, got {0}")]
    BadDim(usize),
    #[error("inverse Laplacian requires a mean-free field (|mean| = {0:.3e})")]
    NonZeroMean(f64),
    #[error("grids do not match")]
    GridMismatch,
}

/// Uniform periodic grid with integer wavenumber bookkeeping.
#[derive(Debug)]
pub struct Grid {
    dim: usize,
    n: usize,
    length: f64,
}

fn plan_cache() -> &'static Mutex<HashMap<(usize, bool), Arc<dyn Fft<f64>>>> {
    static CACHE: OnceLock<Mutex<HashMap<(usize, bool), Arc<dyn Fft<f64>>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

fn plan(n: usize, forward: bool) -> Arc<dyn Fft<f64>> {
    let mut cache = plan_cache().lock().unwrap();
    cache
        .entry((n, forward))
        .or_insert_with(|| {
            let mut planner = FftPlanner::new();
            if forward {
                planner.plan_fft_forward(n)
            } else {
                planner.plan_fft_inverse(n)
            }
        })
        .clone()
}

impl Grid {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn points_per_axis(&self) -> usize {
        self.n
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    /// Total number of grid points.
    pub fn len(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Grid spacing `L / n`.
    pub fn spacing(&self) -> f64 {
        self.length / self.n as f64
    }

    /// Quadrature weight of one grid point, `(L/n)^dim`.
    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.dim as i32)
    }

    /// Integer wavenumber for a 1-d index.
    pub fn int_wavenumber(&self, i: usize) -> i64 {
        if i <= self.n / 2 - 1 {
            i as i64
        } else {
            i as i64 - self.n as i64
        }
    }

    /// Physical wavenumber `2 pi k / L`; the Nyquist mode is mapped to 0
    /// so odd derivatives of real fields stay real.
    pub fn deriv_wavenumber(&self, i: usize) -> f64 {
        if i == self.n / 2 {
            0.0
        } else {
            2.0 * PI * self.int_wavenumber(i) as f64 / self.length
        }
    }

    /// Physical coordinates of a flat index.
    pub fn coords(&self, flat: usize) -> Vec<f64> {
        let mut idx = self.axis_indices(flat);
        let h = self.spacing();
        idx.drain(..).map(|i| i as f64 * h).collect()
    }

    /// Per-axis indices of a flat (row-major) index.
    pub fn axis_indices(&self, flat: usize) -> Vec<usize> {
        let mut out = vec![0usize; self.dim];
        let mut rem = flat;
        for a in (0..self.dim).rev() {
            out[a] = rem % self.n;
            rem /= self.n;
        }
        out
    }

    /// Squared physical wavenumber radius of a flat spectral index.
    pub fn k_sq(&self, flat: usize) -> f64 {
        self.axis_indices(flat)
            .iter()
            .map(|&i| {
                let k = self.deriv_wavenumber(i);
                k * k
            })
            .sum()
    }

    /// Largest resolvable wavenumber radius (Nyquist corner).
    pub fn nyquist_radius(&self) -> f64 {
        let kmax = PI * self.n as f64 / self.length;
        kmax * (self.dim as f64).sqrt()
    }
}

/// Build a grid, rejecting non-power-of-two sizes and dims outside {2, 3}.
pub fn make_grid(dim: usize, points_per_axis: usize, length: f64) -> Result<Arc<Grid>, GridError> {
    if dim != 2 && dim != 3 {
        return Err(GridError::BadDim(dim));
    }
    if points_per_axis < 8 || !points_per_axis.is_power_of_two() {
        return Err(GridError::NonPowerOfTwo(points_per_axis));
    }
    Ok(Arc::new(Grid {
        dim,
        n: points_per_axis,
        length,
    }))
}

/// Real scalar samples on a grid.
#[derive(Debug, Clone)]
pub struct ScalarField {
    grid: Arc<Grid>,
    values: Vec<f64>,
}

/// Complex spectral coefficients of a scalar field (same layout as the grid).
#[derive(Debug, Clone)]
pub struct Spectrum {
    grid: Arc<Grid>,
    coeffs: Vec<Complex64>,
}

impl Spectrum {
    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    /// Apply a real multiplier depending on the flat spectral index.
    pub fn multiply(&self, f: impl Fn(usize) -> f64) -> Spectrum {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| c * f(i))
            .collect();
        Spectrum {
            grid: self.grid.clone(),
            coeffs,
        }
    }

    pub fn to_physical(&self) -> ScalarField {
        let mut data = self.coeffs.clone();
        fft_nd(&self.grid, &mut data, false);
        ScalarField {
            grid: self.grid.clone(),
            values: data.iter().map(|c| c.re).collect(),
        }
    }
}

/// In-place n-dimensional FFT along all axes. Forward divides by n^dim.
fn fft_nd(grid: &Grid, data: &mut [Complex64], forward: bool) {
    let n = grid.n;
    let dim = grid.dim;
    let fft = plan(n, forward);
    let mut line = vec![Complex64::default(); n];
    for axis in 0..dim {
        // stride between consecutive entries of a line along `axis`
        let stride = n.pow((dim - 1 - axis) as u32);
        let lines = data.len() / n;
        for l in 0..lines {
            // base index of line l for this axis
            let block = stride * n;
            let outer = l / stride;
            let inner = l % stride;
            let base = outer * block + inner;
            for (j, item) in line.iter_mut().enumerate() {
                *item = data[base + j * stride];
            }
            fft.process(&mut line);
            for (j, item) in line.iter().enumerate() {
                data[base + j * stride] = *item;
            }
        }
    }
    if forward {
        let scale = 1.0 / data.len() as f64;
        for c in data.iter_mut() {
            *c *= scale;
        }
    }
}

impl ScalarField {
    pub fn zeros(grid: &Arc<Grid>) -> ScalarField {
        ScalarField {
            grid: grid.clone(),
            values: vec![0.0; grid.len()],
        }
    }

    pub fn constant(grid: &Arc<Grid>, c: f64) -> ScalarField {
        ScalarField {
            grid: grid.clone(),
            values: vec![c; grid.len()],
        }
    }

    /// Sample a function of the physical coordinates.
    pub fn from_fn(grid: &Arc<Grid>, f: impl Fn(&[f64]) -> f64) -> ScalarField {
        let values = (0..grid.len()).map(|i| f(&grid.coords(i))).collect();
        ScalarField {
            grid: grid.clone(),
            values,
        }
    }

    pub fn from_values(grid: &Arc<Grid>, values: Vec<f64>) -> Result<ScalarField, GridError> {
        if values.len() != grid.len() {
            return Err(GridError::GridMismatch);
        }
        Ok(ScalarField {
            grid: grid.clone(),
            values,
        })
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn to_spectral(&self) -> Spectrum {
        let mut data: Vec<Complex64> = self.values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        fft_nd(&self.grid, &mut data, true);
        Spectrum {
            grid: self.grid.clone(),
            coeffs: data,
        }
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    pub fn remove_mean(&self) -> ScalarField {
        let m = self.mean();
        self.map(|v| v - m)
    }

    /// Integral over the torus by the (spectrally exact) trapezoid rule.
    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.cell_volume()
    }

    pub fn min(&self) -> f64 {
        self.values.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn l2_norm(&self) -> f64 {
        (self.values.iter().map(|v| v * v).sum::<f64>() * self.grid.cell_volume()).sqrt()
    }

    /// Lattice L^p norm; `None` means p = infinity.
    pub fn lp_norm(&self, p: Option<f64>) -> f64 {
        match p {
            None => self.max_abs(),
            Some(p) => (self
                .values
                .iter()
                .map(|v| v.abs().powf(p))
                .sum::<f64>()
                * self.grid.cell_volume())
            .powf(1.0 / p),
        }
    }

    pub fn inner(&self, other: &ScalarField) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b)
            .sum::<f64>()
            * self.grid.cell_volume()
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> ScalarField {
        ScalarField {
            grid: self.grid.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn add(&self, other: &ScalarField) -> ScalarField {
        self.zip(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &ScalarField) -> ScalarField {
        self.zip(other, |a, b| a - b)
    }

    pub fn scale(&self, c: f64) -> ScalarField {
        self.map(|v| c * v)
    }

    pub fn zip(&self, other: &ScalarField, f: impl Fn(f64, f64) -> f64) -> ScalarField {
        ScalarField {
            grid: self.grid.clone(),
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    /// Pointwise product followed by two-thirds dealiasing; exact for
    /// inputs band-limited below n/3.
    pub fn mul_dealias(&self, other: &ScalarField) -> ScalarField {
        dealias(&self.zip(other, |a, b| a * b))
    }
}

/// Real vector field: `dim` scalar components.
#[derive(Debug, Clone)]
pub struct VectorField {
    grid: Arc<Grid>,
    components: Vec<ScalarField>,
}

impl VectorField {
    pub fn zeros(grid: &Arc<Grid>) -> VectorField {
        VectorField {
            grid: grid.clone(),
            components: (0..grid.dim()).map(|_| ScalarField::zeros(grid)).collect(),
        }
    }

    pub fn new(components: Vec<ScalarField>) -> VectorField {
        assert_eq!(components.len(), components[0].grid.dim());
        VectorField {
            grid: components[0].grid.clone(),
            components,
        }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn component(&self, j: usize) -> &ScalarField {
        &self.components[j]
    }

    pub fn components(&self) -> &[ScalarField] {
        &self.components
    }

    pub fn map(&self, f: impl Fn(&ScalarField) -> ScalarField) -> VectorField {
        VectorField {
            grid: self.grid.clone(),
            components: self.components.iter().map(f).collect(),
        }
    }

    pub fn add(&self, other: &VectorField) -> VectorField {
        VectorField {
            grid: self.grid.clone(),
            components: self
                .components
                .iter()
                .zip(&other.components)
                .map(|(a, b)| a.add(b))
                .collect(),
        }
    }

    pub fn sub(&self, other: &VectorField) -> VectorField {
        VectorField {
            grid: self.grid.clone(),
            components: self
                .components
                .iter()
                .zip(&other.components)
                .map(|(a, b)| a.sub(b))
                .collect(),
        }
    }

    pub fn scale(&self, c: f64) -> VectorField {
        self.map(|f| f.scale(c))
    }

    pub fn max_abs(&self) -> f64 {
        let n = self.grid.len();
        (0..n)
            .map(|i| {
                self.components
                    .iter()
                    .map(|c| c.values[i] * c.values[i])
                    .sum::<f64>()
                    .sqrt()
            })
            .fold(0.0f64, f64::max)
    }

    pub fn l2_norm(&self) -> f64 {
        self.components
            .iter()
            .map(|c| {
                let n = c.l2_norm();
                n * n
            })
            .sum::<f64>()
            .sqrt()
    }

    /// Pointwise dot product with another vector field, dealiased.
    pub fn dot_dealias(&self, other: &VectorField) -> ScalarField {
        let mut acc = ScalarField::zeros(&self.grid);
        for (a, b) in self.components.iter().zip(&other.components) {
            acc = acc.add(&a.mul_dealias(b));
        }
        acc
    }
}

/// Antisymmetric matrix field storing the strictly upper entries.
///
/// For dim = 2 the single entry is (0,1); for dim = 3 the order is
/// (0,1), (0,2), (1,2).
#[derive(Debug, Clone)]
pub struct CurlField {
    grid: Arc<Grid>,
    upper: Vec<ScalarField>,
}

/// Index pairs (i, j) with i < j for the stored entries.
pub fn upper_pairs(dim: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for i in 0..dim {
        for j in (i + 1)..dim {
            out.push((i, j));
        }
    }
    out
}

impl CurlField {
    pub fn zeros(grid: &Arc<Grid>) -> CurlField {
        CurlField {
            grid: grid.clone(),
            upper: upper_pairs(grid.dim())
                .iter()
                .map(|_| ScalarField::zeros(grid))
                .collect(),
        }
    }

    pub fn from_upper(grid: &Arc<Grid>, upper: Vec<ScalarField>) -> CurlField {
        assert_eq!(upper.len(), upper_pairs(grid.dim()).len());
        CurlField {
            grid: grid.clone(),
            upper,
        }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn upper(&self) -> &[ScalarField] {
        &self.upper
    }

    pub fn upper_mut(&mut self) -> &mut [ScalarField] {
        &mut self.upper
    }

    fn slot(&self, i: usize, j: usize) -> usize {
        upper_pairs(self.grid.dim())
            .iter()
            .position(|&(a, b)| (a, b) == (i, j))
            .expect("upper index")
    }

    /// Entry (i, j); antisymmetry is structural.
    pub fn entry(&self, i: usize, j: usize) -> ScalarField {
        if i == j {
            ScalarField::zeros(&self.grid)
        } else if i < j {
            self.upper[self.slot(i, j)].clone()
        } else {
            self.upper[self.slot(j, i)].scale(-1.0)
        }
    }

    pub fn map(&self, f: impl Fn(&ScalarField) -> ScalarField) -> CurlField {
        CurlField {
            grid: self.grid.clone(),
            upper: self.upper.iter().map(f).collect(),
        }
    }

    pub fn add(&self, other: &CurlField) -> CurlField {
        CurlField {
            grid: self.grid.clone(),
            upper: self
                .upper
                .iter()
                .zip(&other.upper)
                .map(|(a, b)| a.add(b))
                .collect(),
        }
    }

    pub fn sub(&self, other: &CurlField) -> CurlField {
        CurlField {
            grid: self.grid.clone(),
            upper: self
                .upper
                .iter()
                .zip(&other.upper)
                .map(|(a, b)| a.sub(b))
                .collect(),
        }
    }

    pub fn scale(&self, c: f64) -> CurlField {
        self.map(|f| f.scale(c))
    }

    /// Sum over all N^2 entries of the squared matrix, pointwise
    /// (each antisymmetric pair counted twice).
    pub fn frobenius_sq(&self) -> ScalarField {
        let mut acc = ScalarField::zeros(&self.grid);
        for e in &self.upper {
            acc = acc.add(&e.zip(e, |a, b| 2.0 * a * b));
        }
        acc
    }

    pub fn l2_norm(&self) -> f64 {
        self.frobenius_sq().integral().max(0.0).sqrt()
    }

    /// For dim = 3, the cyclic compatibility residual
    /// `d_i w_jk + d_j w_ki + d_k w_ij` (zero field for dim = 2).
    pub fn compatibility_residual(&self) -> ScalarField {
        if self.grid.dim() < 3 {
            return ScalarField::zeros(&self.grid);
        }
        let (i, j, k) = (0, 1, 2);
        derivative(&self.entry(j, k), i)
            .add(&derivative(&self.entry(k, i), j))
            .add(&derivative(&self.entry(i, j), k))
    }
}

/// Spectral partial derivative along `axis`.
pub fn derivative(f: &ScalarField, axis: usize) -> ScalarField {
    let grid = f.grid().clone();
    let mut spec = f.to_spectral();
    for (flat, c) in spec.coeffs_mut().iter_mut().enumerate() {
        let idx = grid.axis_indices(flat);
        let k = grid.deriv_wavenumber(idx[axis]);
        *c *= Complex64::new(0.0, k);
    }
    spec.to_physical()
}

/// Exact spectral gradient.
pub fn gradient(f: &ScalarField) -> VectorField {
    VectorField {
        grid: f.grid.clone(),
        components: (0..f.grid.dim()).map(|a| derivative(f, a)).collect(),
    }
}

/// Exact spectral divergence.
pub fn divergence(w: &VectorField) -> ScalarField {
    let mut acc = ScalarField::zeros(&w.grid);
    for (a, c) in w.components.iter().enumerate() {
        acc = acc.add(&derivative(c, a));
    }
    acc
}

/// Matrix curl: entry (i, j) = d_i w_j - d_j w_i.
pub fn curl_matrix(w: &VectorField) -> CurlField {
    let upper = upper_pairs(w.grid.dim())
        .iter()
        .map(|&(i, j)| derivative(w.component(j), i).sub(&derivative(w.component(i), j)))
        .collect();
    CurlField {
        grid: w.grid.clone(),
        upper,
    }
}

/// Divergence of an antisymmetric matrix field: component j = sum_i d_i w_ij.
pub fn div_of_curl(omega: &CurlField) -> VectorField {
    let dim = omega.grid.dim();
    let components = (0..dim)
        .map(|j| {
            let mut acc = ScalarField::zeros(&omega.grid);
            for i in 0..dim {
                if i != j {
                    acc = acc.add(&derivative(&omega.entry(i, j), i));
                }
            }
            acc
        })
        .collect();
    VectorField {
        grid: omega.grid.clone(),
        components,
    }
}

fn laplacian_multiplier(grid: &Grid, flat: usize) -> f64 {
    let idx = grid.axis_indices(flat);
    -idx.iter()
        .map(|&i| {
            let k = grid.deriv_wavenumber(i);
            k * k
        })
        .sum::<f64>()
}

pub fn laplacian(f: &ScalarField) -> ScalarField {
    let grid = f.grid.clone();
    f.to_spectral()
        .multiply(|flat| laplacian_multiplier(&grid, flat))
        .to_physical()
}

/// Mode-wise inverse of the Laplacian on k != 0; the zero mode must be
/// absent (mean-free gauge) and is mapped to zero.
pub fn inverse_laplacian(f: &ScalarField) -> Result<ScalarField, GridError> {
    let norm = f.l2_norm();
    let mean = f.mean();
    if mean.abs() > 1e-12 * norm.max(1e-300) && mean.abs() > 1e-300 {
        return Err(GridError::NonZeroMean(mean.abs()));
    }
    let grid = f.grid.clone();
    Ok(f
        .to_spectral()
        .multiply(|flat| {
            let m = laplacian_multiplier(&grid, flat);
            if m == 0.0 {
                0.0
            } else {
                1.0 / m
            }
        })
        .to_physical())
}

/// Zero all modes with any integer |k_j| > n/3 (two-thirds rule).
pub fn dealias(f: &ScalarField) -> ScalarField {
    let grid = f.grid.clone();
    let cut = grid.points_per_axis() as f64 / 3.0;
    f.to_spectral()
        .multiply(|flat| {
            let keep = grid
                .axis_indices(flat)
                .iter()
                .all(|&i| (grid.int_wavenumber(i).abs() as f64) <= cut);
            if keep {
                1.0
            } else {
                0.0
            }
        })
        .to_physical()
}

pub fn dealias_vector(w: &VectorField) -> VectorField {
    w.map(dealias)
}
