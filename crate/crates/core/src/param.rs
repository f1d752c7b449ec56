//! Choice of the regularization parameter: the a priori rule
//! `alpha = phi^{-1}(Theta^{-1}(A_v delta^2 / E^2))` and the discrepancy
//! principle `d(alpha) = tau sqrt(B_v) delta`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dfd::DfdSystem;
use crate::error::{invalid, Error, Result};
use crate::filters::Filter;
use crate::grid::GridFunction;
use crate::source::IndexFunction;

/// Frame bounds entering the parameter rules and error bounds. `a_v`
/// stands in for `|v|_inf^2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrameConstants {
    pub a_u: f64,
    pub b_u: f64,
    pub a_v: f64,
    pub b_v: f64,
}

impl FrameConstants {
    /// Bounds recorded on the system's frames.
    pub fn from_system(sys: &DfdSystem) -> Result<Self> {
        let u = sys.u().bounds().ok_or_else(|| invalid("u frame has no recorded bounds"))?;
        let v = sys.v().bounds().ok_or_else(|| invalid("v frame has no recorded bounds"))?;
        Ok(Self { a_u: u.lower, b_u: u.upper, a_v: v.lower, b_v: v.upper })
    }

    fn check(&self) -> Result<()> {
        let all = [self.a_u, self.b_u, self.a_v, self.b_v];
        if all.iter().any(|c| !(c.is_finite() && *c > 0.0)) || self.a_u > self.b_u || self.a_v > self.b_v {
            return Err(invalid(format!("inconsistent frame constants {self:?}")));
        }
        Ok(())
    }
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if !(v.is_finite() && v > 0.0) {
        return Err(invalid(format!("{name} must be positive, got {v}")));
    }
    Ok(())
}

/// `phi^{-1}(Theta^{-1}(a_v delta^2 / E^2))`
pub fn a_priori_alpha(phi: &IndexFunction, delta: f64, e: f64, a_v: f64) -> Result<f64> {
    check_positive("delta", delta)?;
    check_positive("E", e)?;
    check_positive("A_v", a_v)?;
    let w = a_v * delta * delta / (e * e);
    let z = phi.theta_inv(w).map_err(|err| match err {
        Error::Domain(msg) => Error::Domain(format!("delta too large for the source class: {msg}")),
        other => other,
    })?;
    phi.inverse(z)
}

/// `(sum r_alpha(kappa_l^2)^2 |b_l|^2)^{1/2}` for `b_l = <y, v_l>`.
pub fn discrepancy_from_coeffs(sys: &DfdSystem, filter: &Filter, alpha: f64, b: &[Complex64]) -> f64 {
    let s: f64 = sys
        .kappa()
        .iter()
        .zip(b)
        .map(|(&k, c)| filter.residual(alpha, k * k).powi(2) * c.norm_sqr())
        .sum();
    s.sqrt()
}

pub fn discrepancy(sys: &DfdSystem, filter: &Filter, alpha: f64, y: &GridFunction) -> Result<f64> {
    check_positive("alpha", alpha)?;
    let b = sys.v().analysis(y)?;
    Ok(discrepancy_from_coeffs(sys, filter, alpha, &b))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MorozovConfig {
    pub tau: f64,
    pub b_v: f64,
    pub a_v: f64,
    /// `lim_{alpha -> inf} r_alpha`
    pub rho: f64,
    pub bracket: (f64, f64),
    /// Absolute tolerance on `|d(alpha) - tau sqrt(B_v) delta|`.
    pub tol: f64,
    pub max_iter: usize,
}

impl MorozovConfig {
    pub fn new(tau: f64, a_v: f64, b_v: f64, rho: f64) -> Self {
        Self { tau, b_v, a_v, rho, bracket: (1e-12, 1e4), tol: 1e-12, max_iter: 400 }
    }

    fn check(&self) -> Result<()> {
        if !(self.tau > 1.0 && self.tau.is_finite()) {
            return Err(invalid(format!("tau must exceed 1, got {}", self.tau)));
        }
        check_positive("B_v", self.b_v)?;
        check_positive("A_v", self.a_v)?;
        check_positive("rho", self.rho)?;
        check_positive("tol", self.tol)?;
        let (lo, hi) = self.bracket;
        if !(lo > 0.0 && hi > lo && hi.is_finite()) {
            return Err(invalid(format!("bracket ({lo}, {hi}) must be positive and ordered")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MorozovSolution {
    pub alpha: f64,
    /// `d(alpha)` at the returned `alpha`.
    pub residual: f64,
    pub target: f64,
    pub iterations: usize,
}

/// Bracket expansions by `2^4` tried on each side, `2^60` in total.
const EXPANSIONS: usize = 15;

/// Width of the final `ln alpha` bracket, so that the root does not
/// depend on the starting bracket where `d` is flat.
const LN_ALPHA_WIDTH: f64 = 1e-10;

/// Solves `d(alpha) = tau sqrt(B_v) delta` by bisection in `ln alpha`.
///
/// Fails with [`Error::NotSolvable`] unless `tau sqrt(B_v) delta <
/// rho sqrt(A_v) |P y|`, where `P` projects onto the range subspace.
pub fn morozov_solve(
    sys: &DfdSystem,
    filter: &Filter,
    cfg: &MorozovConfig,
    y: &GridFunction,
    delta: f64,
) -> Result<MorozovSolution> {
    cfg.check()?;
    check_positive("delta", delta)?;
    let target = cfg.tau * cfg.b_v.sqrt() * delta;
    let py = sys.range_subspace().project(y).norm();
    let limit = cfg.rho * cfg.a_v.sqrt() * py;
    if target >= limit {
        return Err(Error::NotSolvable { lhs: target, rhs: limit });
    }
    let b = sys.v().analysis(y)?;
    let d = |a: f64| discrepancy_from_coeffs(sys, filter, a, &b);

    let (mut lo, mut hi) = cfg.bracket;
    let mut iterations = 0;
    let mut tries = 0;
    while d(lo) > target {
        lo /= 16.0;
        tries += 1;
        if tries > EXPANSIONS {
            return Err(Error::BracketNotFound { lo, hi });
        }
    }
    tries = 0;
    while d(hi) < target {
        hi *= 16.0;
        tries += 1;
        if tries > EXPANSIONS {
            return Err(Error::BracketNotFound { lo, hi });
        }
    }

    let (mut a, mut bb) = (lo.ln(), hi.ln());
    let mut best = (f64::INFINITY, lo);
    while iterations < cfg.max_iter {
        iterations += 1;
        let mid = 0.5 * (a + bb);
        let alpha = mid.exp();
        let dm = d(alpha);
        let gap = (dm - target).abs();
        if gap < best.0 {
            best = (gap, alpha);
        }
        if mid <= a || mid >= bb {
            break;
        }
        if gap <= cfg.tol && bb - a <= LN_ALPHA_WIDTH {
            return Ok(MorozovSolution { alpha, residual: dm, target, iterations });
        }
        if dm < target {
            a = mid;
        } else {
            bb = mid;
        }
    }
    if best.0 <= cfg.tol {
        let alpha = best.1;
        return Ok(MorozovSolution { alpha, residual: d(alpha), target, iterations });
    }
    Err(Error::NotConverged { what: "Morozov bisection", iterations, last_change: best.0 })
}

/// How a reconstruction picks `alpha` from the data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Rule {
    Fixed(f64),
    Morozov(MorozovConfig),
}

impl Rule {
    pub fn alpha(&self, sys: &DfdSystem, filter: &Filter, y: &GridFunction, delta: f64) -> Result<f64> {
        match self {
            Rule::Fixed(a) => {
                check_positive("alpha", *a)?;
                Ok(*a)
            }
            Rule::Morozov(cfg) => Ok(morozov_solve(sys, filter, cfg, y, delta)?.alpha),
        }
    }
}

/// `sqrt(B_u / A_u) (tau + 1) E sqrt(Theta^{-1}(A_v delta^2 / E^2))`, for
/// concave `phi` only.
pub fn posterior_error_bound(phi: &IndexFunction, e: f64, delta: f64, c: &FrameConstants, tau: f64) -> Result<f64> {
    if !phi.is_concave() {
        return Err(invalid(format!("the discrepancy-principle bound needs concave phi, {phi} is not")));
    }
    c.check()?;
    check_positive("E", e)?;
    check_positive("delta", delta)?;
    let z = phi.theta_inv(c.a_v * delta * delta / (e * e))?;
    Ok((c.b_u / c.a_u).sqrt() * (tau + 1.0) * e * z.sqrt())
}

/// `(A_u A_v)^{-1/2} (gamma1 sqrt(B_v) + gamma2 sqrt(A_v)) E sqrt(Theta^{-1}(A_v delta^2 / E^2))`
pub fn apriori_error_bound(
    phi: &IndexFunction,
    e: f64,
    delta: f64,
    c: &FrameConstants,
    gamma1: f64,
    gamma2: f64,
) -> Result<f64> {
    c.check()?;
    check_positive("E", e)?;
    check_positive("delta", delta)?;
    let z = phi.theta_inv(c.a_v * delta * delta / (e * e))?;
    Ok((gamma1 * c.b_v.sqrt() + gamma2 * c.a_v.sqrt()) / (c.a_u * c.a_v).sqrt() * e * z.sqrt())
}
