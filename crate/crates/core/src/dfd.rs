//! Diagonal frame decompositions `K* v_l = kappa_l u_l` and the
//! reconstructions built on them.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::filters::Filter;
use crate::frames::{Coeffs, Frame, Label, SolveOptions};
use crate::grid::{Grid, GridFunction, Spectrum, Subspace};

pub trait ForwardOperator: Send + Sync {
    fn grid(&self) -> &Grid;
    fn apply(&self, x: &GridFunction) -> Result<GridFunction>;
    fn apply_adjoint(&self, y: &GridFunction) -> Result<GridFunction>;

    /// `K*` on Fourier coefficients. Multipliers override this to skip the
    /// FFT round trip, whose roundoff swamps `kappa u` when `kappa` is tiny.
    fn apply_adjoint_spectrum(&self, y: &Spectrum) -> Result<Spectrum> {
        Ok(self.apply_adjoint(&y.to_grid_function())?.spectrum())
    }
}

/// `K x = F^{-1}(m F x)` on a periodic grid.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierMultiplier {
    grid: Grid,
    symbol: Vec<Complex64>,
}

impl FourierMultiplier {
    pub fn new(grid: Grid, symbol: Vec<Complex64>) -> Result<Self> {
        if symbol.len() != grid.n() {
            return Err(invalid(format!("symbol has {} bins, grid has {}", symbol.len(), grid.n())));
        }
        if symbol.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(invalid("symbol has non-finite entries"));
        }
        Ok(Self { grid, symbol })
    }

    pub fn from_real(grid: Grid, symbol: &[f64]) -> Result<Self> {
        Self::new(grid, symbol.iter().map(|&s| Complex64::new(s, 0.0)).collect())
    }

    pub fn symbol(&self) -> &[Complex64] {
        &self.symbol
    }

    fn multiply(&self, x: &GridFunction, conj: bool) -> Result<GridFunction> {
        self.grid.check_same(x.grid())?;
        let mut s = x.spectrum();
        for (c, m) in s.coeffs_mut().iter_mut().zip(&self.symbol) {
            *c *= if conj { m.conj() } else { *m };
        }
        Ok(s.to_grid_function())
    }
}

impl ForwardOperator for FourierMultiplier {
    fn grid(&self) -> &Grid {
        &self.grid
    }

    fn apply(&self, x: &GridFunction) -> Result<GridFunction> {
        self.multiply(x, false)
    }

    fn apply_adjoint(&self, y: &GridFunction) -> Result<GridFunction> {
        self.multiply(y, true)
    }

    fn apply_adjoint_spectrum(&self, y: &Spectrum) -> Result<Spectrum> {
        self.grid.check_same(y.grid())?;
        let coeffs = y.coeffs().iter().zip(&self.symbol).map(|(c, m)| c * m.conj()).collect();
        Spectrum::new(self.grid.clone(), coeffs)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DfdSystem {
    u: Frame,
    v: Frame,
    kappa: Vec<f64>,
}

impl DfdSystem {
    pub fn new(u: Frame, v: Frame, kappa: Vec<f64>) -> Result<Self> {
        u.grid().check_same(v.grid())?;
        if u.index_set() != v.index_set() {
            return Err(invalid("u and v frames are indexed differently"));
        }
        if kappa.len() != u.len() {
            return Err(invalid(format!("{} values of kappa for {} elements", kappa.len(), u.len())));
        }
        if let Some(k) = kappa.iter().find(|k| !(k.is_finite() && **k > 0.0)) {
            return Err(invalid(format!("kappa must be positive and finite, got {k}")));
        }
        Ok(Self { u, v, kappa })
    }

    pub fn u(&self) -> &Frame {
        &self.u
    }

    pub fn v(&self) -> &Frame {
        &self.v
    }

    pub fn kappa(&self) -> &[f64] {
        &self.kappa
    }

    pub fn labels(&self) -> &[Label] {
        self.u.labels()
    }

    pub fn len(&self) -> usize {
        self.kappa.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kappa.is_empty()
    }

    pub fn grid(&self) -> &Grid {
        self.u.grid()
    }

    pub fn kappa_min(&self) -> f64 {
        self.kappa.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn kappa_max(&self) -> f64 {
        self.kappa.iter().copied().fold(0.0, f64::max)
    }

    /// Subspace in which data and noise live.
    pub fn range_subspace(&self) -> &Subspace {
        self.v.subspace()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DfdReport {
    pub passed: bool,
    pub tol: f64,
    pub max_residual: f64,
    pub worst_label: String,
    pub checked: usize,
}

/// Checks `|K* v_l - kappa_l u_l| <= tol |kappa_l u_l|` for every element.
pub fn verify_dfd(op: &dyn ForwardOperator, sys: &DfdSystem, tol: f64) -> Result<DfdReport> {
    op.grid().check_same(sys.grid())?;
    let residuals: Vec<Result<f64>> = (0..sys.len())
        .into_par_iter()
        .map(|i| {
            let n = sys.grid().n();
            let v = Spectrum::new(sys.grid().clone(), sys.v.elements()[i].to_dense(n))?;
            let ks = op.apply_adjoint_spectrum(&v)?;
            let mut target = sys.u.elements()[i].to_dense(n);
            target.iter_mut().for_each(|c| *c *= sys.kappa[i]);
            let target = Spectrum::new(sys.grid().clone(), target)?;
            let denom = target.norm();
            if denom == 0.0 {
                return Err(Error::Degenerate(format!("element {} of u vanishes", sys.labels()[i])));
            }
            let diff: f64 = ks.coeffs().iter().zip(target.coeffs()).map(|(a, b)| (a - b).norm_sqr()).sum();
            Ok((diff * sys.grid().length()).sqrt() / denom)
        })
        .collect();
    let mut max_residual: f64 = 0.0;
    let mut worst = 0;
    for (i, r) in residuals.into_iter().enumerate() {
        let r = r?;
        if r > max_residual || r.is_nan() {
            max_residual = r;
            worst = i;
        }
    }
    Ok(DfdReport {
        passed: max_residual <= tol,
        tol,
        max_residual,
        worst_label: sys.labels()[worst].to_string(),
        checked: sys.len(),
    })
}

/// Cap on accumulated coefficient energy relative to `|y|^2`.
pub const PICARD_CAP: f64 = 1e12;

/// `sum kappa_l^{-1} <y, v_l> dual(u)_l`, refusing when the coefficient
/// energy exceeds `PICARD_CAP |y|^2`.
pub fn picard_solve(sys: &DfdSystem, y: &GridFunction, opts: &SolveOptions) -> Result<GridFunction> {
    let b = sys.v.analysis(y)?;
    let a: Coeffs = b.iter().zip(&sys.kappa).map(|(c, k)| c / *k).collect();
    let cap = PICARD_CAP * y.norm().powi(2);
    let mut order: Vec<usize> = (0..a.len()).collect();
    order.sort_by(|&i, &j| sys.kappa[j].total_cmp(&sys.kappa[i]));
    let mut partial = 0.0;
    for i in order {
        partial += a[i].norm_sqr();
        if partial > cap {
            return Err(Error::Divergent { partial, cap });
        }
    }
    sys.u.dual_synthesis(&a, opts)
}

/// Filter factors `kappa_l g_alpha(kappa_l^2)`.
pub fn filter_factors(sys: &DfdSystem, filter: &Filter, alpha: f64) -> Vec<f64> {
    sys.kappa.iter().map(|&k| k * filter.eval(alpha, k * k)).collect()
}

/// `sum kappa_l g_alpha(kappa_l^2) <y, v_l> dual(u)_l`
pub fn regularize(
    sys: &DfdSystem,
    filter: &Filter,
    alpha: f64,
    y: &GridFunction,
    opts: &SolveOptions,
) -> Result<GridFunction> {
    let b = sys.v.analysis(y)?;
    regularize_from_coeffs(sys, filter, alpha, &b, opts)
}

/// Same as [`regularize`] with precomputed `<y, v_l>`.
pub fn regularize_from_coeffs(
    sys: &DfdSystem,
    filter: &Filter,
    alpha: f64,
    b: &[Complex64],
    opts: &SolveOptions,
) -> Result<GridFunction> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(invalid(format!("alpha must be positive, got {alpha}")));
    }
    if b.len() != sys.len() {
        return Err(invalid("coefficient count does not match the system"));
    }
    let f = filter_factors(sys, filter, alpha);
    let a: Coeffs = b.iter().zip(&f).map(|(c, fi)| c * *fi).collect();
    sys.u.dual_synthesis(&a, opts)
}

/// Adjoint of `y -> regularize(y)`.
pub fn regularize_adjoint(
    sys: &DfdSystem,
    filter: &Filter,
    alpha: f64,
    x: &GridFunction,
    opts: &SolveOptions,
) -> Result<GridFunction> {
    let d = sys.u.dual_apply(x, opts)?;
    let c = sys.u.analysis(&d)?;
    let f = filter_factors(sys, filter, alpha);
    let a: Coeffs = c.iter().zip(&f).map(|(ci, fi)| ci * *fi).collect();
    sys.v.synthesis(&a)
}

/// `|v|_sup / (kappa_min |u|_inf)`, a bound on the operator norm of the
/// Picard reconstruction. Needs bounds recorded on both frames.
pub fn stable_pseudoinverse_bound(sys: &DfdSystem) -> Result<f64> {
    let bu = sys.u.bounds().ok_or_else(|| invalid("u frame has no recorded bounds"))?;
    let bv = sys.v.bounds().ok_or_else(|| invalid("v frame has no recorded bounds"))?;
    Ok(bv.sup_norm() / (sys.kappa_min() * bu.inf_norm()))
}

/// Gaussian noise projected onto `subspace` and rescaled to norm `delta`.
/// Samples are real and drawn in one sequential pass from `seed`.
pub fn noise(grid: &Grid, subspace: &Subspace, delta: f64, seed: u64) -> Result<GridFunction> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    noise_from_rng(grid, subspace, delta, &mut rng)
}

pub(crate) fn noise_from_rng(
    grid: &Grid,
    subspace: &Subspace,
    delta: f64,
    rng: &mut ChaCha8Rng,
) -> Result<GridFunction> {
    if !(delta >= 0.0 && delta.is_finite()) {
        return Err(invalid(format!("noise level must be nonnegative, got {delta}")));
    }
    let raw: Vec<f64> = (0..grid.n()).map(|_| StandardNormal.sample(rng)).collect();
    let e = subspace.project(&GridFunction::from_real(*grid, &raw)?);
    let ne = e.norm();
    if ne == 0.0 {
        return Err(Error::Degenerate("noise vanished under projection".into()));
    }
    Ok(e.scaled(delta / ne))
}

/// `y + e` with `e` from [`noise`].
pub fn add_noise(y: &GridFunction, subspace: &Subspace, delta: f64, seed: u64) -> Result<GridFunction> {
    let e = noise(y.grid(), subspace, delta, seed)?;
    y.add(&e)
}

/// Unit-norm vector of a real band-limited function: convenience for tests
/// and examples.
pub fn random_in_subspace(grid: &Grid, subspace: &Subspace, seed: u64) -> Result<GridFunction> {
    noise(grid, subspace, 1.0, seed)
}

/// Spectrum helper: apply `f(omega)` to every Fourier coefficient.
pub fn apply_symbol(x: &GridFunction, f: impl Fn(f64) -> Complex64) -> GridFunction {
    let grid = *x.grid();
    let mut s: Spectrum = x.spectrum();
    for (m, c) in s.coeffs_mut().iter_mut().enumerate() {
        *c *= f(grid.frequency(m));
    }
    s.to_grid_function()
}
