//! Periodic sampling grid on `[0, L)` and functions sampled on it.
//!
//! A [`GridFunction`] holds spatial samples. Its [`Spectrum`] holds Fourier
//! coefficients `c_m` with `x_j = sum_m c_m exp(i w_m x_j)`, so that
//! `<x, y> = h sum_j x_j conj(y_j) = L sum_m c_m conj(d_m)`.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    n: usize,
    length: f64,
}

impl Grid {
    pub fn new(n: usize, length: f64) -> Result<Self> {
        if n < 2 || !n.is_power_of_two() {
            return Err(invalid(format!("grid size must be a power of two >= 2, got {n}")));
        }
        if !(length.is_finite() && length > 0.0) {
            return Err(invalid(format!("grid length must be positive, got {length}")));
        }
        Ok(Self { n, length })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn spacing(&self) -> f64 {
        self.length / self.n as f64
    }

    /// FFT bin `m` as a signed index in `[-n/2, n/2)`.
    pub fn signed_index(&self, m: usize) -> i64 {
        if m < self.n / 2 {
            m as i64
        } else {
            m as i64 - self.n as i64
        }
    }

    /// Angular frequency of FFT bin `m`.
    pub fn frequency(&self, m: usize) -> f64 {
        2.0 * PI * self.signed_index(m) as f64 / self.length
    }

    pub fn frequencies(&self) -> Vec<f64> {
        (0..self.n).map(|m| self.frequency(m)).collect()
    }

    pub fn nyquist(&self) -> f64 {
        PI * self.n as f64 / self.length
    }

    pub fn points(&self) -> Vec<f64> {
        let h = self.spacing();
        (0..self.n).map(|j| j as f64 * h).collect()
    }

    pub(crate) fn check_same(&self, other: &Grid) -> Result<()> {
        if self.n != other.n || self.length != other.length {
            return Err(Error::GridMismatch(format!(
                "(n={}, L={}) vs (n={}, L={})",
                self.n, self.length, other.n, other.length
            )));
        }
        Ok(())
    }

    /// Fails when `omega` is not strictly below the Nyquist frequency.
    pub fn check_resolves(&self, omega: f64) -> Result<()> {
        if omega.abs() >= self.nyquist() {
            return Err(Error::Unresolved { omega, nyquist: self.nyquist() });
        }
        Ok(())
    }
}

type Plans = (Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>);

fn plans(n: usize) -> Plans {
    static CACHE: OnceLock<Mutex<HashMap<usize, Plans>>> = OnceLock::new();
    let mut cache = CACHE.get_or_init(|| Mutex::new(HashMap::new())).lock().unwrap();
    cache
        .entry(n)
        .or_insert_with(|| {
            let mut planner = FftPlanner::new();
            (planner.plan_fft_forward(n), planner.plan_fft_inverse(n))
        })
        .clone()
}

/// Fourier coefficients of spatial samples.
pub fn samples_to_coeffs(samples: &[Complex64]) -> Vec<Complex64> {
    let n = samples.len();
    let mut buf = samples.to_vec();
    plans(n).0.process(&mut buf);
    let s = 1.0 / n as f64;
    buf.iter_mut().for_each(|c| *c *= s);
    buf
}

/// Spatial samples of Fourier coefficients.
pub fn coeffs_to_samples(coeffs: &[Complex64]) -> Vec<Complex64> {
    let mut buf = coeffs.to_vec();
    plans(buf.len()).1.process(&mut buf);
    buf
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    grid: Grid,
    samples: Vec<Complex64>,
}

impl GridFunction {
    pub fn new(grid: Grid, samples: Vec<Complex64>) -> Result<Self> {
        if samples.len() != grid.n() {
            return Err(invalid(format!("expected {} samples, got {}", grid.n(), samples.len())));
        }
        Ok(Self { grid, samples })
    }

    pub fn zeros(grid: Grid) -> Self {
        Self { grid, samples: vec![Complex64::new(0.0, 0.0); grid.n()] }
    }

    pub fn from_real(grid: Grid, values: &[f64]) -> Result<Self> {
        Self::new(grid, values.iter().map(|&v| Complex64::new(v, 0.0)).collect())
    }

    pub fn from_fn(grid: Grid, f: impl Fn(f64) -> Complex64) -> Self {
        let samples = grid.points().into_iter().map(f).collect();
        Self { grid, samples }
    }

    /// Unit-norm spike at sample `j` (value `1/sqrt(h)`).
    pub fn spike(grid: Grid, j: usize) -> Result<Self> {
        if j >= grid.n() {
            return Err(invalid(format!("sample index {j} out of range")));
        }
        let mut f = Self::zeros(grid);
        f.samples[j] = Complex64::new(1.0 / grid.spacing().sqrt(), 0.0);
        Ok(f)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<Complex64> {
        self.samples
    }

    pub fn spectrum(&self) -> Spectrum {
        Spectrum { grid: self.grid, coeffs: samples_to_coeffs(&self.samples) }
    }

    pub fn inner(&self, other: &GridFunction) -> Result<Complex64> {
        self.grid.check_same(&other.grid)?;
        let s: Complex64 = self.samples.iter().zip(&other.samples).map(|(a, b)| a * b.conj()).sum();
        Ok(s * self.grid.spacing())
    }

    pub fn norm(&self) -> f64 {
        let s: f64 = self.samples.iter().map(|c| c.norm_sqr()).sum();
        (s * self.grid.spacing()).sqrt()
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self { grid: self.grid, samples: self.samples.iter().map(|c| c * s).collect() }
    }

    /// `self + s * other`
    pub fn axpy(&self, s: f64, other: &GridFunction) -> Result<Self> {
        self.grid.check_same(&other.grid)?;
        let samples = self.samples.iter().zip(&other.samples).map(|(a, b)| a + b * s).collect();
        Ok(Self { grid: self.grid, samples })
    }

    pub fn sub(&self, other: &GridFunction) -> Result<Self> {
        self.axpy(-1.0, other)
    }

    pub fn add(&self, other: &GridFunction) -> Result<Self> {
        self.axpy(1.0, other)
    }

    pub fn max_imag(&self) -> f64 {
        self.samples.iter().map(|c| c.im.abs()).fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    grid: Grid,
    coeffs: Vec<Complex64>,
}

impl Spectrum {
    pub fn new(grid: Grid, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != grid.n() {
            return Err(invalid(format!("expected {} coefficients, got {}", grid.n(), coeffs.len())));
        }
        Ok(Self { grid, coeffs })
    }

    pub fn zeros(grid: Grid) -> Self {
        Self { grid, coeffs: vec![Complex64::new(0.0, 0.0); grid.n()] }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    pub fn to_grid_function(&self) -> GridFunction {
        GridFunction { grid: self.grid, samples: coeffs_to_samples(&self.coeffs) }
    }

    pub fn inner(&self, other: &Spectrum) -> Result<Complex64> {
        self.grid.check_same(&other.grid)?;
        let s: Complex64 = self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a * b.conj()).sum();
        Ok(s * self.grid.length())
    }

    pub fn norm(&self) -> f64 {
        let s: f64 = self.coeffs.iter().map(|c| c.norm_sqr()).sum();
        (s * self.grid.length()).sqrt()
    }
}

/// Closed subspace described by the set of Fourier bins it may occupy.
#[derive(Debug, Clone, PartialEq)]
pub enum Subspace {
    Full,
    Mask(Vec<bool>),
}

impl Subspace {
    pub fn from_frequencies(grid: &Grid, keep: impl Fn(f64) -> bool) -> Self {
        Subspace::Mask(grid.frequencies().into_iter().map(keep).collect())
    }

    pub fn contains_bin(&self, m: usize) -> bool {
        match self {
            Subspace::Full => true,
            Subspace::Mask(mask) => mask[m],
        }
    }

    pub fn dimension(&self, grid: &Grid) -> usize {
        match self {
            Subspace::Full => grid.n(),
            Subspace::Mask(mask) => mask.iter().filter(|&&b| b).count(),
        }
    }

    pub fn project_coeffs(&self, coeffs: &mut [Complex64]) {
        if let Subspace::Mask(mask) = self {
            for (c, &keep) in coeffs.iter_mut().zip(mask) {
                if !keep {
                    *c = Complex64::new(0.0, 0.0);
                }
            }
        }
    }

    pub fn project(&self, x: &GridFunction) -> GridFunction {
        if matches!(self, Subspace::Full) {
            return x.clone();
        }
        let mut s = x.spectrum();
        self.project_coeffs(s.coeffs_mut());
        s.to_grid_function()
    }

    /// `|P x - x| <= tol |x|`
    pub fn contains(&self, x: &GridFunction, tol: f64) -> bool {
        let p = self.project(x);
        let d = p.sub(x).map(|d| d.norm()).unwrap_or(f64::INFINITY);
        d <= tol * x.norm()
    }

    pub(crate) fn check_len(&self, grid: &Grid) -> Result<()> {
        match self {
            Subspace::Mask(mask) if mask.len() != grid.n() => {
                Err(invalid(format!("subspace mask has {} bins, grid has {}", mask.len(), grid.n())))
            }
            _ => Ok(()),
        }
    }
}
