use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::dfd::{FourierMultiplier, ForwardOperator};
use crate::error::{invalid, Result};
use crate::grid::{Grid, GridFunction, Spectrum};

use super::mittag_leffler::mittag_leffler;

/// Forward map `theta_0 -> theta_T` of the (time-fractional) heat equation:
/// multiplication by `m(w) = E_{gamma,1}(-w^2 T^gamma)`.
#[derive(Debug, Clone)]
pub struct HeatOperator {
    gamma: f64,
    t: f64,
    multiplier: Vec<f64>,
    op: FourierMultiplier,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HeatParams {
    pub gamma: f64,
    pub t: f64,
}

impl HeatOperator {
    pub fn new(grid: Grid, gamma: f64, t: f64) -> Result<Self> {
        if !(gamma > 0.0 && gamma <= 1.0) {
            return Err(invalid(format!("gamma must lie in (0, 1], got {gamma}")));
        }
        if !(t > 0.0 && t.is_finite()) {
            return Err(invalid(format!("T must be positive, got {t}")));
        }
        let tg = t.powf(gamma);
        let n = grid.n();
        // m depends on |w| only: evaluate the nonnegative half and mirror.
        let half: Vec<f64> = (0..=n / 2)
            .into_par_iter()
            .map(|m| {
                let w = grid.frequency(m);
                mittag_leffler(gamma, -w * w * tg)
            })
            .collect::<Result<_>>()?;
        let multiplier: Vec<f64> = (0..n).map(|m| half[m.min(n - m)]).collect();
        let op = FourierMultiplier::from_real(grid, &multiplier)?;
        Ok(Self { gamma, t, multiplier, op })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn params(&self) -> HeatParams {
        HeatParams { gamma: self.gamma, t: self.t }
    }

    /// `m(w_m)` per Fourier bin. For `gamma = 1` high modes underflow to `0`.
    pub fn multiplier(&self) -> &[f64] {
        &self.multiplier
    }

    pub fn as_multiplier(&self) -> &FourierMultiplier {
        &self.op
    }

    pub fn forward(&self, theta0: &GridFunction) -> Result<GridFunction> {
        self.op.apply(theta0)
    }
}

impl ForwardOperator for HeatOperator {
    fn grid(&self) -> &Grid {
        self.op.grid()
    }

    fn apply(&self, x: &GridFunction) -> Result<GridFunction> {
        self.op.apply(x)
    }

    fn apply_adjoint(&self, y: &GridFunction) -> Result<GridFunction> {
        self.op.apply_adjoint(y)
    }

    fn apply_adjoint_spectrum(&self, y: &Spectrum) -> Result<Spectrum> {
        self.op.apply_adjoint_spectrum(y)
    }
}

/// `|theta|_{H^p}^2 = L sum_m (1 + w_m^2)^p |c_m|^2`
pub fn sobolev_norm(x: &GridFunction, p: f64) -> f64 {
    let grid = x.grid();
    let s = x.spectrum();
    let sum: f64 = s
        .coeffs()
        .iter()
        .enumerate()
        .map(|(m, c): (usize, &Complex64)| {
            let w = grid.frequency(m);
            (1.0 + w * w).powf(p) * c.norm_sqr()
        })
        .sum();
    (grid.length() * sum).sqrt()
}
