//! Band-limited Meyer wavelets, built directly on the periodic grid.
//!
//! With `psi_hat(xi) = int psi(x) e^{-i xi x} dx` the element
//! `psi_{j,k}(x) = 2^{j/2} psi(2^j x - k)` periodized to `[0, L)` has
//! Fourier coefficients `c_m = L^{-1} 2^{-j/2} psi_hat(w_m / 2^j) e^{-i w_m k / 2^j}`.
//! Levels `j_min..=j_max` together with the scaling functions at `j_min`
//! form an orthonormal basis of `V_{j_max + 1}`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid, Result};
use crate::frames::{Frame, IndexSet, Label, SparseSpectrum};
use crate::grid::{Grid, Subspace};

/// `nu(t) = t^4 (35 - 84 t + 70 t^2 - 20 t^3)` clamped to `[0, 1]`.
pub fn nu(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else if t >= 1.0 {
        1.0
    } else {
        t.powi(4) * (35.0 - 84.0 * t + 70.0 * t * t - 20.0 * t.powi(3))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeyerWavelet {
    /// Inner edge of the mother wavelet's Fourier support.
    pub a_u: f64,
    /// Outer edge of the mother wavelet's Fourier support.
    pub b_u: f64,
}

impl Default for MeyerWavelet {
    fn default() -> Self {
        Self { a_u: 2.0 * PI / 3.0, b_u: 8.0 * PI / 3.0 }
    }
}

impl MeyerWavelet {
    /// `|psi_hat(xi)|`; the phase is `e^{i xi / 2}`.
    pub fn psi_hat_abs(&self, xi: f64) -> f64 {
        let a = xi.abs();
        if a <= 2.0 * PI / 3.0 || a >= 8.0 * PI / 3.0 {
            0.0
        } else if a <= 4.0 * PI / 3.0 {
            (0.5 * PI * nu(3.0 * a / (2.0 * PI) - 1.0)).sin()
        } else {
            (0.5 * PI * nu(3.0 * a / (4.0 * PI) - 1.0)).cos()
        }
    }

    pub fn psi_hat(&self, xi: f64) -> Complex64 {
        Complex64::from_polar(self.psi_hat_abs(xi), 0.5 * xi)
    }

    pub fn phi_hat(&self, xi: f64) -> f64 {
        let a = xi.abs();
        if a <= 2.0 * PI / 3.0 {
            1.0
        } else if a >= 4.0 * PI / 3.0 {
            0.0
        } else {
            (0.5 * PI * nu(3.0 * a / (2.0 * PI) - 1.0)).cos()
        }
    }

    /// Largest `|w|` below which the basis reproduces every mode exactly.
    pub fn identity_radius(&self, j_max: i32) -> f64 {
        2f64.powi(j_max) * 4.0 * PI / 3.0
    }

    /// Largest `|w|` touched by level `j`.
    pub fn support_radius(&self, j: i32) -> f64 {
        2f64.powi(j) * self.b_u
    }

    /// Orthonormal Meyer basis on levels `j_min..=j_max`, as a frame over
    /// `{|w| <= identity_radius(j_max)}`.
    ///
    /// Scaling functions at level `j_min` carry the label `(j_min - 1, k)`,
    /// wavelets `(j, k)` with `0 <= k < 2^j L`.
    pub fn frame(&self, grid: &Grid, j_min: i32, j_max: i32) -> Result<Frame> {
        if *self != Self::default() {
            return Err(invalid("only the standard Meyer support [2pi/3, 8pi/3] is implemented"));
        }
        if j_min > j_max {
            return Err(invalid(format!("empty level range {j_min}..={j_max}")));
        }
        grid.check_resolves(self.support_radius(j_max))?;
        let periods = |j: i32| -> Result<u64> {
            let m = grid.length() * 2f64.powi(j);
            let r = m.round();
            if r < 1.0 || (m - r).abs() > 1e-9 * m {
                return Err(invalid(format!("2^{j} L = {m} must be a positive integer")));
            }
            Ok(r as u64)
        };
        periods(j_min)?;

        let mut blocks: Vec<(i32, bool)> = vec![(j_min, true)];
        blocks.extend((j_min..=j_max).map(|j| (j, false)));
        let mut labels = Vec::new();
        let mut elements = Vec::new();
        for (j, scaling) in blocks {
            let m_count = periods(j)?;
            let support = self.block_support(grid, j, scaling);
            let level = if scaling { j - 1 } else { j };
            let block: Vec<SparseSpectrum> = (0..m_count)
                .into_par_iter()
                .map(|k| Self::translate(&support, m_count, k, !scaling))
                .collect();
            labels.extend((0..m_count).map(|k| Label(vec![level, k as i32])));
            elements.extend(block);
        }
        let r = self.identity_radius(j_max);
        let subspace = Subspace::from_frequencies(grid, |w| w.abs() <= r);
        Ok(Frame::new(grid.clone(), IndexSet::new(labels)?, elements, subspace)?
            .with_tight_constant(1.0)?
            .with_minimal(Some(true))
            .with_truncation(format!("Meyer levels {j_min}..={j_max} plus scaling at {j_min}")))
    }

    /// `(bin, signed index, L^{-1} 2^{-j/2} |psi_hat| or |phi_hat|)` on the
    /// support of one block.
    fn block_support(&self, grid: &Grid, j: i32, scaling: bool) -> Vec<(u32, i64, f64)> {
        let s = 2f64.powi(j);
        let norm = 1.0 / (grid.length() * s.sqrt());
        (0..grid.n())
            .filter_map(|m| {
                let xi = grid.frequency(m) / s;
                let a = if scaling { self.phi_hat(xi) } else { self.psi_hat_abs(xi) };
                (a != 0.0).then_some((m as u32, grid.signed_index(m), norm * a))
            })
            .collect()
    }

    /// The phase `xi/2 - w k / 2^j` equals `(pi/M)(m' - 2 (m' k mod M))`
    /// with `M = 2^j L`; scaling functions lack the `xi/2` part.
    fn translate(support: &[(u32, i64, f64)], m_count: u64, k: u64, wavelet: bool) -> SparseSpectrum {
        let big_m = m_count as i64;
        let k = k as i64;
        let shift = if wavelet { 1 } else { 0 };
        let mut indices = Vec::with_capacity(support.len());
        let mut values = Vec::with_capacity(support.len());
        for &(bin, signed, amp) in support {
            let r = (signed * k).rem_euclid(big_m);
            indices.push(bin);
            let phase = PI * (shift * signed - 2 * r) as f64 / big_m as f64;
            values.push(Complex64::from_polar(amp, phase));
        }
        SparseSpectrum { indices, values }
    }
}
