//! Worst-case errors: the lower bound
//! `beta |u|_sup^{-1} E sqrt(Theta^{-1}(|v|_inf^2 delta^2 / E^2))`, valid on
//! noise levels covered by the intervals `D_l = [delta*_l, delta*_l / beta]`,
//! and Monte-Carlo estimates of the worst-case error from below.

use rayon::prelude::*;
use serde::Serialize;

use crate::dfd::{noise, regularize, regularize_adjoint, DfdSystem, ForwardOperator};
use crate::error::{invalid, Error, Result};
use crate::filters::Filter;
use crate::frames::SolveOptions;
use crate::grid::GridFunction;
use crate::param::Rule;
use crate::source::{source_norm, IndexFunction};

/// `delta*_l = E sqrt(kappa^2 phi(kappa^2)) / v_inf`
pub fn delta_star(kappa: f64, phi: &IndexFunction, e: f64, v_inf: f64) -> Result<f64> {
    if !(e > 0.0 && v_inf > 0.0 && kappa > 0.0) {
        return Err(invalid("delta* needs positive kappa, E and |v|_inf"));
    }
    let mu = kappa * kappa;
    Ok(e * (mu * phi.eval(mu)?).sqrt() / v_inf)
}

/// `delta*` for every label whose `kappa^2` lies in the domain of `phi`;
/// the others are skipped since they certify nothing.
pub fn delta_stars(kappa: &[f64], phi: &IndexFunction, e: f64, v_inf: f64) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(kappa.len());
    for &k in kappa {
        match delta_star(k, phi, e, v_inf) {
            Ok(d) => out.push(d),
            Err(Error::Domain(_)) => {}
            Err(err) => return Err(err),
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Serialize)]
pub struct DensityReport {
    pub beta: f64,
    /// Distinct `delta*` values, descending.
    pub delta_stars: Vec<f64>,
    /// Smallest `delta*`; nothing below it is covered by a finite system.
    pub floor: f64,
    /// `[floor, delta0]` when it is covered without gaps.
    pub covered_interval: Option<(f64, f64)>,
    /// Open gaps inside `[floor, delta0]`, ascending.
    pub gaps: Vec<(f64, f64)>,
}

impl DensityReport {
    pub fn covered(&self) -> bool {
        self.covered_interval.is_some()
    }

    /// `delta` lies in some `[delta*_l, delta*_l / beta]`.
    pub fn covers(&self, delta: f64) -> bool {
        self.delta_stars.iter().any(|&d| delta >= d * (1.0 - ABUT) && delta <= d / self.beta * (1.0 + ABUT))
    }
}

/// Relative slack under which two intervals count as touching.
const ABUT: f64 = 1e-12;

pub fn density_check(delta_stars: &[f64], beta: f64, delta0: f64) -> Result<DensityReport> {
    if !(beta > 0.0 && beta < 1.0) {
        return Err(invalid(format!("beta must lie in (0, 1), got {beta}")));
    }
    if !(delta0 > 0.0) {
        return Err(invalid(format!("delta0 must be positive, got {delta0}")));
    }
    let mut ds: Vec<f64> = delta_stars.iter().copied().filter(|d| d.is_finite() && *d > 0.0).collect();
    if ds.is_empty() {
        return Err(Error::Degenerate("no finite delta* values".into()));
    }
    ds.sort_by(|a, b| b.total_cmp(a));
    ds.dedup_by(|a, b| (*a - *b).abs() <= ABUT * b.abs());
    let floor = *ds.last().expect("nonempty");

    let mut gaps = Vec::new();
    let mut reach = floor;
    for &d in ds.iter().rev() {
        if d >= delta0 {
            break;
        }
        if d > reach * (1.0 + ABUT) {
            gaps.push((reach, d));
        }
        reach = reach.max(d / beta);
    }
    if reach * (1.0 + ABUT) < delta0 {
        let next = ds.iter().rev().find(|&&d| d > reach).copied();
        gaps.push((reach, next.map_or(delta0, |n| n.min(delta0))));
    }
    let covered_interval = (gaps.is_empty() && floor <= delta0).then_some((floor, delta0));
    Ok(DensityReport { beta, delta_stars: ds, floor, covered_interval, gaps })
}

/// `beta E sqrt(Theta^{-1}(v_inf^2 delta^2 / E^2)) / u_sup`
pub fn lower_bound(phi: &IndexFunction, e: f64, delta: f64, u_sup: f64, v_inf: f64, beta: f64) -> Result<f64> {
    if !(e > 0.0 && delta > 0.0 && u_sup > 0.0 && v_inf > 0.0 && beta > 0.0) {
        return Err(invalid("lower_bound needs positive E, delta, |u|_sup, |v|_inf and beta"));
    }
    let z = phi.theta_inv(v_inf * v_inf * delta * delta / (e * e))?;
    Ok(beta * e * z.sqrt() / u_sup)
}

fn real_part(x: &GridFunction) -> GridFunction {
    let re: Vec<f64> = x.samples().iter().map(|c| c.re).collect();
    GridFunction::from_real(*x.grid(), &re).expect("same length")
}

/// Unit real noise direction maximizing `|R_alpha e|`, by power iteration
/// on `R_alpha* R_alpha` over the range subspace. Returns the direction
/// and `|R_alpha e|`.
pub fn worst_case_noise(
    sys: &DfdSystem,
    filter: &Filter,
    alpha: f64,
    iterations: usize,
    seed: u64,
    opts: &SolveOptions,
) -> Result<(GridFunction, f64)> {
    let range = sys.range_subspace();
    let mut e = noise(sys.grid(), range, 1.0, seed)?;
    let mut sigma = 0.0;
    for _ in 0..iterations.max(1) {
        let x = regularize(sys, filter, alpha, &e, opts)?;
        let next = real_part(&range.project(&regularize_adjoint(sys, filter, alpha, &x, opts)?));
        let nn = next.norm();
        if nn == 0.0 {
            return Err(Error::Degenerate("the reconstruction annihilates the range".into()));
        }
        let s = nn.sqrt();
        e = next.scaled(1.0 / nn);
        let done = (s - sigma).abs() <= 1e-10 * s;
        sigma = s;
        if done {
            break;
        }
    }
    let sigma = regularize(sys, filter, alpha, &e, opts)?.norm();
    Ok((e, sigma))
}

#[derive(Debug, Clone, Serialize)]
pub struct WorstCase {
    /// Largest error found.
    pub value: f64,
    /// Largest error among single-element witnesses (`0` if none applies).
    pub witness: f64,
    /// Largest error among random source-set members.
    pub random: f64,
    pub witnesses_used: usize,
    pub draws: usize,
}

pub struct WorstCaseSetup<'a> {
    pub op: &'a dyn ForwardOperator,
    pub sys: &'a DfdSystem,
    pub filter: &'a Filter,
    pub rule: Rule,
    pub phi: IndexFunction,
    pub e: f64,
    pub opts: SolveOptions,
}

/// Monte-Carlo lower estimate of the worst-case error at noise level
/// `delta`.
///
/// For a fixed `alpha` every `x = c u_l` with source norm `E` and
/// `|K x| <= delta` is a witness: `y = 0` is admissible data for both
/// `x` and `-x`, so the error is at least `|x|`. These are scanned for
/// every label. Random members of the source set are then reconstructed
/// from data perturbed by `+-delta e`, `e` the worst noise direction, and
/// by a Gaussian draw of norm `delta`.
pub fn empirical_worst_case(setup: &WorstCaseSetup<'_>, delta: f64, draws: usize, seed: u64) -> Result<WorstCase> {
    let WorstCaseSetup { op, sys, filter, rule, phi, e, opts } = setup;
    if !(delta > 0.0 && *e > 0.0) {
        return Err(invalid("empirical_worst_case needs positive delta and E"));
    }
    let grid = sys.grid();

    let mut witness = 0.0f64;
    let mut witnesses_used = 0;
    if let Rule::Fixed(_) = rule {
        let found: Vec<Option<f64>> = (0..sys.len())
            .into_par_iter()
            .map(|i| -> Result<Option<f64>> {
                let u = sys.u().element(i);
                let s = source_norm(&u, sys, phi)?;
                if !(s > 0.0) {
                    return Ok(None);
                }
                let x = u.scaled(e / s.sqrt());
                Ok((op.apply(&x)?.norm() <= delta).then(|| x.norm()))
            })
            .collect::<Result<_>>()?;
        for w in found.into_iter().flatten() {
            witnesses_used += 1;
            witness = witness.max(w);
        }
    }

    let adversarial = match rule {
        Rule::Fixed(alpha) => Some(worst_case_noise(sys, filter, *alpha, 200, seed ^ 0xad5e, opts)?.0),
        Rule::Morozov(_) => None,
    };
    let errors: Vec<f64> = (0..draws)
        .into_par_iter()
        .map(|i| -> Result<f64> {
            let draw_seed = seed.wrapping_add(1 + i as u64);
            let raw = noise(grid, sys.u().subspace(), 1.0, draw_seed)?;
            let s = source_norm(&raw, sys, phi)?;
            let x = raw.scaled(e / s.sqrt());
            let y = op.apply(&x)?;
            let mut perturbations = vec![noise(grid, sys.range_subspace(), delta, draw_seed ^ 0x9e37_79b9)?];
            if let Some(dir) = &adversarial {
                perturbations.push(dir.scaled(delta));
                perturbations.push(dir.scaled(-delta));
            }
            let mut worst = 0.0f64;
            for p in perturbations {
                let yd = y.add(&p)?;
                let alpha = match rule.alpha(sys, filter, &yd, delta) {
                    Ok(a) => a,
                    Err(Error::NotSolvable { .. }) => continue,
                    Err(err) => return Err(err),
                };
                let xr = regularize(sys, filter, alpha, &yd, opts)?;
                worst = worst.max(xr.sub(&x)?.norm());
            }
            Ok(worst)
        })
        .collect::<Result<_>>()?;
    let random = errors.into_iter().fold(0.0, f64::max);
    Ok(WorstCase { value: witness.max(random), witness, random, witnesses_used, draws })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn delta_star_values() {
        let lin = IndexFunction::poly(2.0).unwrap();
        assert!((delta_star(0.25, &lin, 1.0, 1.0).unwrap() - 2f64.powi(-4)).abs() < 1e-16);
        assert!((delta_star(1.0, &lin, 3.0, 2.0).unwrap() - 1.5).abs() < 1e-16);
        let log = IndexFunction::log(1.0).unwrap();
        let k = (-1f64).exp();
        let want = (k * k / 2.0).sqrt();
        assert!((delta_star(k, &log, 1.0, 1.0).unwrap() - want).abs() < 1e-16);
        assert!(delta_star(1.0, &log, 1.0, 1.0).is_err());
        assert_eq!(delta_stars(&[1.0, k], &log, 1.0, 1.0).unwrap().len(), 1);
    }

    #[test]
    fn geometric_sequence_coverage() {
        let ds: Vec<f64> = (0..8).map(|k| 2f64.powi(-4 * k)).collect();
        let r = density_check(&ds, 2f64.powi(-4), 1.0).unwrap();
        assert!(r.covered() && r.gaps.is_empty(), "{r:?}");
        assert_eq!(r.floor, 2f64.powi(-28));
        let r = density_check(&ds, 0.25, 1.0).unwrap();
        assert_eq!(r.gaps.len(), 7);
        assert!(!r.covered());
        let (a, b) = r.gaps[0];
        assert!((a - 2f64.powi(-26)).abs() < 1e-20 && b == 2f64.powi(-24));
        assert!(r.covers(2f64.powi(-27)) && !r.covers(2f64.powi(-25)));
    }

    #[test]
    fn lower_bound_closed_form() {
        // phi = mu: Theta^{-1}(w) = sqrt(w)
        let lin = IndexFunction::poly(2.0).unwrap();
        let b = lower_bound(&lin, 2.0, 1e-4, 1.0, 1.0, 0.5).unwrap();
        let want = 0.5 * 2.0 * (1e-4f64 / 2.0).sqrt();
        assert!((b - want).abs() < 1e-15);
        // homogeneous in E at fixed delta / E
        let b2 = lower_bound(&lin, 4.0, 2e-4, 1.0, 1.0, 0.5).unwrap();
        assert!((b2 - 2.0 * b).abs() < 1e-15);
    }
}
