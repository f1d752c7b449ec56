//! Regularizing filters `g_alpha(mu)` and numerical checks of the conditions
//! the convergence theory places on them.
//!
//! All checks evaluate on logarithmic grids in `mu` and `alpha` and refine
//! suprema locally, so the reported constants are attained values rather
//! than grid samples.

use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{invalid, Result};
use crate::source::IndexFunction;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FilterKind {
    Tikhonov,
    SpectralCutoff,
    Custom,
}

/// Constants a filter claims to satisfy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FilterConstants {
    /// `sup |mu g_alpha(mu)|`
    pub c_g: f64,
    /// `sup sqrt(alpha mu) |g_alpha(mu)|`
    pub gamma1: f64,
    /// Range of `alpha * sup_mu g_alpha(mu)`.
    pub ell_star: f64,
    pub ell_upper: f64,
    /// Limit of the residual `1 - mu g_alpha(mu)` as `alpha -> inf`.
    pub rho: f64,
}

type FilterFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

#[derive(Clone)]
pub struct Filter {
    kind: FilterKind,
    name: String,
    func: Option<FilterFn>,
    constants: FilterConstants,
}

impl fmt::Debug for Filter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Filter").field("name", &self.name).field("constants", &self.constants).finish()
    }
}

impl Filter {
    /// `g_alpha(mu) = 1 / (alpha + mu)`
    pub fn tikhonov() -> Self {
        Self {
            kind: FilterKind::Tikhonov,
            name: "tikhonov".into(),
            func: None,
            constants: FilterConstants { c_g: 1.0, gamma1: 0.5, ell_star: 1.0, ell_upper: 1.0, rho: 1.0 },
        }
    }

    /// `g_alpha(mu) = 1 / mu` for `mu >= alpha`, else `0`.
    pub fn spectral_cutoff() -> Self {
        Self {
            kind: FilterKind::SpectralCutoff,
            name: "cutoff".into(),
            func: None,
            constants: FilterConstants { c_g: 1.0, gamma1: 1.0, ell_star: 1.0, ell_upper: 1.0, rho: 1.0 },
        }
    }

    pub fn custom(
        name: impl Into<String>,
        constants: FilterConstants,
        f: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self { kind: FilterKind::Custom, name: name.into(), func: Some(Arc::new(f)), constants }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "tikhonov" => Ok(Self::tikhonov()),
            "cutoff" | "spectral_cutoff" | "spectral-cutoff" => Ok(Self::spectral_cutoff()),
            other => Err(invalid(format!("unknown filter '{other}' (expected tikhonov or cutoff)"))),
        }
    }

    pub fn kind(&self) -> FilterKind {
        self.kind
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn constants(&self) -> &FilterConstants {
        &self.constants
    }

    pub fn eval(&self, alpha: f64, mu: f64) -> f64 {
        match self.kind {
            FilterKind::Tikhonov => 1.0 / (alpha + mu),
            FilterKind::SpectralCutoff => {
                if mu >= alpha && mu > 0.0 {
                    1.0 / mu
                } else {
                    0.0
                }
            }
            FilterKind::Custom => (self.func.as_ref().expect("custom filter has a function"))(alpha, mu),
        }
    }

    /// `r_alpha(mu) = 1 - mu g_alpha(mu)`
    pub fn residual(&self, alpha: f64, mu: f64) -> f64 {
        match self.kind {
            FilterKind::Tikhonov => alpha / (alpha + mu),
            _ => 1.0 - mu * self.eval(alpha, mu),
        }
    }

    /// Largest `p` of `phi = mu^(p/2)` with `|r_alpha(mu)| sqrt(phi(mu)) <=
    /// gamma2 sqrt(phi(alpha))`.
    pub fn qualification(&self) -> Option<f64> {
        match self.kind {
            FilterKind::Tikhonov => Some(4.0),
            FilterKind::SpectralCutoff => None,
            FilterKind::Custom => Some(0.0),
        }
    }
}

/// Logarithmic evaluation grids.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct CheckGrid {
    pub mu_min: f64,
    /// `a*`, the upper end of the spectral range.
    pub mu_max: f64,
    pub alpha_min: f64,
    pub alpha_max: f64,
    pub points_per_decade: usize,
}

impl Default for CheckGrid {
    fn default() -> Self {
        Self { mu_min: 1e-6, mu_max: 1.0, alpha_min: 1e-6, alpha_max: 1.0, points_per_decade: 200 }
    }
}

pub(crate) fn log_grid(lo: f64, hi: f64, per_decade: usize) -> Vec<f64> {
    if !(lo > 0.0 && hi >= lo) {
        return Vec::new();
    }
    let decades = (hi / lo).log10();
    let count = ((decades * per_decade as f64).round() as usize).max(1);
    (0..=count).map(|i| lo * 10f64.powf(decades * i as f64 / count as f64)).collect()
}

/// Maximizes `f` over a log grid, then refines around the best point by
/// golden-section search in `ln mu`.
fn refined_sup(grid: &[f64], f: impl Fn(f64) -> f64) -> f64 {
    let vals: Vec<f64> = grid.iter().map(|&m| f(m)).collect();
    let (best, &fbest) = match vals.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)) {
        Some(v) => v,
        None => return f64::NAN,
    };
    if !fbest.is_finite() {
        return fbest;
    }
    let mut a = grid[best.saturating_sub(1)].ln();
    let mut b = grid[(best + 1).min(grid.len() - 1)].ln();
    let g = |t: f64| f(t.exp());
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (g(c), g(d));
    for _ in 0..80 {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = g(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = g(d);
        }
    }
    fbest.max(fc).max(fd)
}

#[derive(Debug, Clone, Serialize)]
pub struct ConditionCReport {
    /// `sqrt(mu) g_alpha(mu)` finite on the grid.
    pub c1_finite: bool,
    pub c2_sup: f64,
    pub c2_holds: bool,
    /// `|mu g_alpha(mu) - 1|` at the smallest alpha, over `mu >= 100 alpha_min`.
    pub c3_max_defect: f64,
    pub c3_monotone: bool,
    pub c3_holds: bool,
    pub passed: bool,
}

/// Boundedness and pointwise convergence of `mu g_alpha(mu)`.
pub fn check_condition_c(f: &Filter, grid: &CheckGrid) -> ConditionCReport {
    let mus = log_grid(grid.mu_min, grid.mu_max, grid.points_per_decade);
    let mut alphas = log_grid(grid.alpha_min, grid.alpha_max, grid.points_per_decade);
    alphas.reverse();

    let mut finite = true;
    let mut sup: f64 = 0.0;
    for &a in &alphas {
        for &m in &mus {
            let g = f.eval(a, m);
            if !(g * m.sqrt()).is_finite() {
                finite = false;
            }
            sup = sup.max((m * g).abs());
        }
        finite &= f.eval(a, 0.0).is_finite();
    }

    let mut monotone = true;
    let mut max_defect: f64 = 0.0;
    for &m in &mus {
        let mut prev = f64::INFINITY;
        for &a in &alphas {
            let d = (m * f.eval(a, m) - 1.0).abs();
            if d > prev + 1e-12 {
                monotone = false;
            }
            prev = d;
        }
        if m >= 100.0 * grid.alpha_min {
            max_defect = max_defect.max(prev);
        }
    }
    let c2_holds = finite && sup <= f.constants().c_g * (1.0 + 1e-12);
    let c3_holds = monotone && max_defect <= 1e-2;
    ConditionCReport {
        c1_finite: finite,
        c2_sup: sup,
        c2_holds,
        c3_max_defect: max_defect,
        c3_monotone: monotone,
        c3_holds,
        passed: finite && c2_holds && c3_holds,
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RateConditionReport {
    pub gamma1_est: f64,
    pub gamma1_holds: bool,
    pub gamma2_est: f64,
    /// `sup_mu |r| sqrt(phi(mu)/phi(alpha))` grows without bound as alpha decreases.
    pub gamma2_divergent: bool,
    pub passed: bool,
}

/// Estimates `gamma1 = sup sqrt(alpha mu) |g|` and
/// `gamma2 = sup |r_alpha(mu)| sqrt(phi(mu) / phi(alpha))`.
pub fn check_rate_condition(f: &Filter, phi: &IndexFunction, grid: &CheckGrid) -> Result<RateConditionReport> {
    let top = grid.mu_max.min(phi.mu_max());
    let mus = log_grid(grid.mu_min, top, grid.points_per_decade);
    let alphas = log_grid(grid.alpha_min, grid.alpha_max.min(phi.mu_max()), grid.points_per_decade);
    if mus.is_empty() || alphas.is_empty() {
        return Err(invalid("empty evaluation grid"));
    }

    let mut gamma1: f64 = 0.0;
    let mut per_alpha = Vec::with_capacity(alphas.len());
    for &a in &alphas {
        let s1 = refined_sup(&mus, |m| (a * m).sqrt() * f.eval(a, m).abs());
        gamma1 = gamma1.max(s1);
        let pa = phi.eval(a)?;
        let s2 = refined_sup(&mus, |m| match phi.eval(m) {
            Ok(pm) => f.residual(a, m).abs() * (pm / pa).sqrt(),
            Err(_) => f64::NAN,
        });
        per_alpha.push(s2);
    }
    let gamma2 = per_alpha.iter().copied().fold(0.0, f64::max);

    // alphas ascend: the first decade holds the smallest alphas.
    let decade = grid.points_per_decade.min(per_alpha.len());
    let small: f64 = per_alpha[..decade].iter().copied().fold(0.0, f64::max);
    let large: f64 = per_alpha[per_alpha.len() - decade..].iter().copied().fold(0.0, f64::max);
    let divergent = !gamma2.is_finite() || small > 10.0 * large;

    let gamma1_holds = gamma1 <= f.constants().gamma1 + 1e-9;
    Ok(RateConditionReport {
        gamma1_est: gamma1,
        gamma1_holds,
        gamma2_est: gamma2,
        gamma2_divergent: divergent,
        passed: gamma1_holds && !divergent,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct DiscrepancyConditionReport {
    /// Estimated `lim_{alpha -> inf} r_alpha(mu)`.
    pub rho_est: f64,
    pub rho_defect: f64,
    pub b1_limit_holds: bool,
    pub b1_continuity_holds: bool,
    pub b2_nonnegative: bool,
    /// Largest `r - g / ell_alpha` (must be `<= 0`).
    pub b2_residual_excess: f64,
    pub b2_residual_holds: bool,
    pub ell_min: f64,
    pub ell_max: f64,
    pub b2_ell_holds: bool,
    pub passed: bool,
}

/// Conditions used by the discrepancy principle: a residual limit `rho`,
/// continuity in `alpha`, and `0 <= r <= g / ell_alpha` with
/// `alpha ell_alpha` bounded above and below.
pub fn check_discrepancy_condition(f: &Filter, grid: &CheckGrid) -> DiscrepancyConditionReport {
    let mus = log_grid(grid.mu_min, grid.mu_max, grid.points_per_decade);
    let alphas = log_grid(grid.alpha_min, grid.alpha_max, grid.points_per_decade);

    let probe = 1e9 * grid.mu_max;
    let rs: Vec<f64> = mus.iter().map(|&m| f.residual(probe, m)).collect();
    let rho = rs.iter().sum::<f64>() / rs.len() as f64;
    let rho_defect = rs.iter().map(|r| (r - rho).abs()).fold(0.0, f64::max);
    let b1_limit = rho > 0.0 && rho_defect <= 1e-6;

    let mut continuity = true;
    let mut nonneg = true;
    let mut excess = f64::NEG_INFINITY;
    let mut ell_min = f64::INFINITY;
    let mut ell_max: f64 = 0.0;
    for &a in &alphas {
        let ell = mus.iter().map(|&m| f.eval(a, m)).fold(f.eval(a, 0.0), f64::max);
        ell_min = ell_min.min(a * ell);
        ell_max = ell_max.max(a * ell);
        let a2 = a * (1.0 + 1e-9);
        for &m in &mus {
            let g = f.eval(a, m);
            let r = f.residual(a, m);
            if g < 0.0 || r < -1e-12 {
                nonneg = false;
            }
            excess = excess.max(r - g / ell);
            if (f.eval(a2, m) - g).abs() > 1e-6 * g.abs().max(1e-300) {
                continuity = false;
            }
        }
    }
    let c = f.constants();
    let residual_holds = excess <= 1e-12;
    let ell_holds = ell_min >= c.ell_star * (1.0 - 1e-9) && ell_max <= c.ell_upper * (1.0 + 1e-9);
    DiscrepancyConditionReport {
        rho_est: rho,
        rho_defect,
        b1_limit_holds: b1_limit,
        b1_continuity_holds: continuity,
        b2_nonnegative: nonneg,
        b2_residual_excess: excess,
        b2_residual_holds: residual_holds,
        ell_min,
        ell_max,
        b2_ell_holds: ell_holds,
        passed: b1_limit && continuity && nonneg && residual_holds && ell_holds,
    }
}
