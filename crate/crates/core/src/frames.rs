//! Frames over subspaces of periodic grid functions.
//!
//! Elements are stored as sparse Fourier coefficient lists. Every
//! construction in this crate is defined in the frequency domain and most
//! elements occupy a narrow band, so analysis and synthesis never need a
//! dense element matrix.

use std::cmp::Ordering;
use std::fmt;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::grid::{Grid, GridFunction, Spectrum, Subspace};

pub type Coeffs = Vec<Complex64>;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Multi-index label of a frame element, ordered lexicographically.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Label(pub Vec<i32>);

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|v| v.to_string()).collect();
        write!(f, "({})", parts.join(","))
    }
}

/// Sorted, duplicate-free labels sharing one arity.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndexSet {
    labels: Vec<Label>,
}

impl IndexSet {
    pub fn new(labels: Vec<Label>) -> Result<Self> {
        if let Some(first) = labels.first() {
            let arity = first.0.len();
            if labels.iter().any(|l| l.0.len() != arity) {
                return Err(invalid("labels of mixed arity"));
            }
        }
        for w in labels.windows(2) {
            match w[0].cmp(&w[1]) {
                Ordering::Less => {}
                Ordering::Equal => return Err(invalid(format!("duplicate label {}", w[0]))),
                Ordering::Greater => return Err(invalid(format!("labels not sorted at {}", w[1]))),
            }
        }
        Ok(Self { labels })
    }

    /// Consecutive one-component labels `(0), (1), ...`.
    pub fn range(count: usize) -> Self {
        Self { labels: (0..count as i32).map(|i| Label(vec![i])).collect() }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn arity(&self) -> usize {
        self.labels.first().map_or(0, |l| l.0.len())
    }

    pub fn position(&self, label: &Label) -> Option<usize> {
        self.labels.binary_search(label).ok()
    }
}

/// Nonzero Fourier coefficients of one element.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseSpectrum {
    pub indices: Vec<u32>,
    pub values: Vec<Complex64>,
}

impl SparseSpectrum {
    pub fn from_dense(coeffs: &[Complex64]) -> Self {
        let mut indices = Vec::new();
        let mut values = Vec::new();
        for (m, &c) in coeffs.iter().enumerate() {
            if c != ZERO {
                indices.push(m as u32);
                values.push(c);
            }
        }
        Self { indices, values }
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// `sum_m c[m] conj(w_m)`, without the factor `L`.
    fn dot(&self, coeffs: &[Complex64]) -> Complex64 {
        self.indices.iter().zip(&self.values).map(|(&m, w)| coeffs[m as usize] * w.conj()).sum()
    }

    fn add_scaled_to(&self, a: Complex64, out: &mut [Complex64]) {
        for (&m, w) in self.indices.iter().zip(&self.values) {
            out[m as usize] += a * w;
        }
    }

    pub fn to_dense(&self, n: usize) -> Vec<Complex64> {
        let mut out = vec![ZERO; n];
        self.add_scaled_to(Complex64::new(1.0, 0.0), &mut out);
        out
    }

    /// Squared norm on a grid of length `L`.
    pub fn norm_sqr(&self, length: f64) -> f64 {
        length * self.values.iter().map(|c| c.norm_sqr()).sum::<f64>()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrameBounds {
    pub lower: f64,
    pub upper: f64,
}

impl FrameBounds {
    /// `|w|_inf`
    pub fn inf_norm(&self) -> f64 {
        self.lower.sqrt()
    }

    /// `|w|_sup`
    pub fn sup_norm(&self) -> f64 {
        self.upper.sqrt()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct BoundsOptions {
    pub trials: usize,
    pub tol: f64,
    pub seed: u64,
    /// Cap on Krylov steps; `None` means `10 n`.
    pub max_iter: Option<usize>,
}

impl Default for BoundsOptions {
    fn default() -> Self {
        Self { trials: 1, tol: 1e-8, seed: 0x5eed, max_iter: None }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SolveOptions {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self { tol: 1e-12, max_iter: 5000 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    grid: Grid,
    index_set: IndexSet,
    elements: Vec<SparseSpectrum>,
    subspace: Subspace,
    bounds: Option<FrameBounds>,
    tight_constant: Option<f64>,
    minimal: Option<bool>,
    truncation: String,
}

impl Frame {
    pub fn new(grid: Grid, index_set: IndexSet, elements: Vec<SparseSpectrum>, subspace: Subspace) -> Result<Self> {
        if index_set.is_empty() {
            return Err(Error::Degenerate("frame has no elements".into()));
        }
        if elements.len() != index_set.len() {
            return Err(invalid(format!("{} labels for {} elements", index_set.len(), elements.len())));
        }
        subspace.check_len(&grid)?;
        let n = grid.n() as u32;
        if elements.iter().any(|e| e.indices.iter().any(|&m| m >= n) || e.indices.len() != e.values.len()) {
            return Err(invalid("element coefficient index out of range"));
        }
        Ok(Self {
            grid,
            index_set,
            elements,
            subspace,
            bounds: None,
            tight_constant: None,
            minimal: None,
            truncation: String::new(),
        })
    }

    pub fn from_functions(grid: Grid, index_set: IndexSet, funcs: &[GridFunction], subspace: Subspace) -> Result<Self> {
        let mut elements = Vec::with_capacity(funcs.len());
        for f in funcs {
            grid.check_same(f.grid())?;
            elements.push(SparseSpectrum::from_dense(f.spectrum().coeffs()));
        }
        Self::new(grid, index_set, elements, subspace)
    }

    pub fn with_tight_constant(mut self, c: f64) -> Result<Self> {
        if !(c.is_finite() && c > 0.0) {
            return Err(invalid(format!("tight constant must be positive, got {c}")));
        }
        self.tight_constant = Some(c);
        self.bounds = Some(FrameBounds { lower: c * c, upper: c * c });
        Ok(self)
    }

    /// Records bounds; a tight constant that disagrees with them is dropped.
    pub fn with_bounds(mut self, bounds: FrameBounds) -> Self {
        if let Some(c) = self.tight_constant {
            if bounds.lower != c * c || bounds.upper != c * c {
                self.tight_constant = None;
            }
        }
        self.bounds = Some(bounds);
        self
    }

    pub fn with_minimal(mut self, minimal: Option<bool>) -> Self {
        self.minimal = minimal;
        self
    }

    pub fn with_truncation(mut self, desc: impl Into<String>) -> Self {
        self.truncation = desc.into();
        self
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn index_set(&self) -> &IndexSet {
        &self.index_set
    }

    pub fn labels(&self) -> &[Label] {
        self.index_set.labels()
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn elements(&self) -> &[SparseSpectrum] {
        &self.elements
    }

    pub fn subspace(&self) -> &Subspace {
        &self.subspace
    }

    pub fn bounds(&self) -> Option<FrameBounds> {
        self.bounds
    }

    pub fn tight_constant(&self) -> Option<f64> {
        self.tight_constant
    }

    pub fn minimal(&self) -> Option<bool> {
        self.minimal
    }

    pub fn truncation(&self) -> &str {
        &self.truncation
    }

    pub fn nnz(&self) -> usize {
        self.elements.iter().map(|e| e.nnz()).sum()
    }

    pub fn element(&self, i: usize) -> GridFunction {
        Spectrum::new(self.grid, self.elements[i].to_dense(self.grid.n()))
            .expect("element length matches grid")
            .to_grid_function()
    }

    /// `<x, w_lambda>` for every element.
    pub fn analysis(&self, x: &GridFunction) -> Result<Coeffs> {
        self.grid.check_same(x.grid())?;
        Ok(self.analysis_coeffs(x.spectrum().coeffs()))
    }

    pub fn analysis_spectrum(&self, x: &Spectrum) -> Result<Coeffs> {
        self.grid.check_same(x.grid())?;
        Ok(self.analysis_coeffs(x.coeffs()))
    }

    pub(crate) fn analysis_coeffs(&self, c: &[Complex64]) -> Coeffs {
        let l = self.grid.length();
        if self.nnz() > 1 << 16 {
            self.elements.par_iter().map(|e| e.dot(c) * l).collect()
        } else {
            self.elements.iter().map(|e| e.dot(c) * l).collect()
        }
    }

    /// `sum a_lambda w_lambda`
    pub fn synthesis(&self, a: &[Complex64]) -> Result<GridFunction> {
        Ok(self.synthesis_spectrum(a)?.to_grid_function())
    }

    pub fn synthesis_spectrum(&self, a: &[Complex64]) -> Result<Spectrum> {
        if a.len() != self.len() {
            return Err(invalid(format!("{} coefficients for {} elements", a.len(), self.len())));
        }
        Spectrum::new(self.grid, self.synthesis_coeffs(a))
    }

    pub(crate) fn synthesis_coeffs(&self, a: &[Complex64]) -> Vec<Complex64> {
        let mut out = vec![ZERO; self.grid.n()];
        for (e, &ai) in self.elements.iter().zip(a) {
            if ai != ZERO {
                e.add_scaled_to(ai, &mut out);
            }
        }
        out
    }

    /// `S x = sum <x, w> w`
    pub fn apply_frame_operator(&self, x: &GridFunction) -> Result<GridFunction> {
        let a = self.analysis(x)?;
        self.synthesis(&a)
    }

    /// `P S P` on Fourier coefficients.
    fn restricted_operator(&self, c: &[Complex64]) -> Vec<Complex64> {
        let mut pc = c.to_vec();
        self.subspace.project_coeffs(&mut pc);
        let a = self.analysis_coeffs(&pc);
        let mut out = self.synthesis_coeffs(&a);
        self.subspace.project_coeffs(&mut out);
        out
    }

    /// `sum |<x, w>|^2`
    pub fn frame_norm_sqr(&self, x: &GridFunction) -> Result<f64> {
        Ok(self.analysis(x)?.iter().map(|c| c.norm_sqr()).sum())
    }

    /// Extreme eigenvalues of `P S P` on the frame's subspace, by Lanczos
    /// iteration with full reorthogonalization from random starts.
    ///
    /// The upper estimate can only undershoot `B` and the lower one can only
    /// overshoot `A`; both converge to the residual tolerance `tol`.
    pub fn estimate_bounds(&self, opts: &BoundsOptions) -> Result<FrameBounds> {
        let dim = self.subspace.dimension(&self.grid);
        if dim == 0 {
            return Err(Error::Degenerate("subspace is empty".into()));
        }
        let cap = opts.max_iter.unwrap_or(10 * self.grid.n()).min(dim).max(1);
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        let mut lower = f64::INFINITY;
        let mut upper: f64 = 0.0;
        for _ in 0..opts.trials.max(1) {
            let start: Vec<f64> = (0..self.grid.n()).map(|_| StandardNormal.sample(&mut rng)).collect();
            let (lo, hi) = self.lanczos_extremes(&start, cap, dim, opts.tol)?;
            lower = lower.min(lo);
            upper = upper.max(hi);
        }
        if !(lower > 0.0) {
            return Err(Error::Degenerate(format!("lower frame bound estimate {lower:e} is not positive")));
        }
        Ok(FrameBounds { lower, upper })
    }

    fn lanczos_extremes(&self, start: &[f64], cap: usize, dim: usize, tol: f64) -> Result<(f64, f64)> {
        let l = self.grid.length();
        let dot = |a: &[Complex64], b: &[Complex64]| -> Complex64 {
            a.iter().zip(b).map(|(x, y)| x * y.conj()).sum::<Complex64>() * l
        };
        let norm = |a: &[Complex64]| dot(a, a).re.max(0.0).sqrt();

        let mut q0 = crate::grid::samples_to_coeffs(
            &start.iter().map(|&v| Complex64::new(v, 0.0)).collect::<Vec<_>>(),
        );
        self.subspace.project_coeffs(&mut q0);
        let nq = norm(&q0);
        if nq == 0.0 {
            return Err(Error::Degenerate("random start vanished under projection".into()));
        }
        q0.iter_mut().for_each(|c| *c /= nq);

        let mut basis: Vec<Vec<Complex64>> = vec![q0];
        let mut alpha: Vec<f64> = Vec::new();
        let mut beta: Vec<f64> = Vec::new();
        let mut last_change = f64::INFINITY;

        for k in 0..cap {
            let mut w = self.restricted_operator(&basis[k]);
            let a = dot(&w, &basis[k]).re;
            alpha.push(a);
            for _ in 0..2 {
                for q in &basis {
                    let h = dot(&w, q);
                    w.iter_mut().zip(q).for_each(|(wi, qi)| *wi -= h * qi);
                }
            }
            let b = norm(&w);
            let (lo, hi) = tridiag_extremes(&alpha, &beta);
            let scale = hi.abs().max(f64::MIN_POSITIVE);
            if b <= 1e-13 * scale || alpha.len() >= dim {
                // Krylov space is invariant: Ritz values are exact.
                return Ok((lo, hi));
            }
            let r_lo = b * ritz_last_component(&alpha, &beta, lo).abs();
            let r_hi = b * ritz_last_component(&alpha, &beta, hi).abs();
            last_change = r_lo.max(r_hi) / scale;
            if k >= 2 && last_change <= tol {
                return Ok((lo, hi));
            }
            beta.push(b);
            w.iter_mut().for_each(|c| *c /= b);
            basis.push(w);
        }
        Err(Error::NotConverged { what: "frame bound estimate", iterations: cap, last_change })
    }

    /// `S^{-1} x`; for a tight frame with constant `c` this is `x / c^2`.
    pub fn dual_apply(&self, x: &GridFunction, opts: &SolveOptions) -> Result<GridFunction> {
        self.grid.check_same(x.grid())?;
        if let Some(c) = self.tight_constant {
            return Ok(x.scaled(1.0 / (c * c)));
        }
        let mut b = x.spectrum().coeffs().to_vec();
        self.subspace.project_coeffs(&mut b);
        let z = self.conjugate_gradient(&b, opts)?;
        Ok(Spectrum::new(self.grid, z)?.to_grid_function())
    }

    /// `sum a_lambda dual(w)_lambda`
    pub fn dual_synthesis(&self, a: &[Complex64], opts: &SolveOptions) -> Result<GridFunction> {
        let s = self.synthesis(a)?;
        self.dual_apply(&s, opts)
    }

    /// `sum <x, w> dual(w)`
    pub fn reconstruct(&self, x: &GridFunction, opts: &SolveOptions) -> Result<GridFunction> {
        let a = self.analysis(x)?;
        self.dual_synthesis(&a, opts)
    }

    fn conjugate_gradient(&self, b: &[Complex64], opts: &SolveOptions) -> Result<Vec<Complex64>> {
        let l = self.grid.length();
        let dot = |a: &[Complex64], c: &[Complex64]| -> f64 {
            a.iter().zip(c).map(|(x, y)| (x * y.conj()).re).sum::<f64>() * l
        };
        let bnorm = dot(b, b).sqrt();
        let mut x = vec![ZERO; b.len()];
        if bnorm == 0.0 {
            return Ok(x);
        }
        let mut r = b.to_vec();
        let mut p = r.clone();
        let mut rr = dot(&r, &r);
        for _ in 0..opts.max_iter {
            if rr.sqrt() <= opts.tol * bnorm {
                return Ok(x);
            }
            let ap = self.restricted_operator(&p);
            let pap = dot(&p, &ap);
            if !(pap > 0.0) {
                return Err(Error::Degenerate("frame operator is not positive on the subspace".into()));
            }
            let step = rr / pap;
            x.iter_mut().zip(&p).for_each(|(xi, pi)| *xi += pi * step);
            r.iter_mut().zip(&ap).for_each(|(ri, ai)| *ri -= ai * step);
            let rr_new = dot(&r, &r);
            let beta = rr_new / rr;
            p.iter_mut().zip(&r).for_each(|(pi, ri)| *pi = ri + *pi * beta);
            rr = rr_new;
        }
        if rr.sqrt() <= opts.tol * bnorm {
            return Ok(x);
        }
        Err(Error::NotConverged {
            what: "conjugate gradient for the dual frame",
            iterations: opts.max_iter,
            last_change: rr.sqrt() / bnorm,
        })
    }
}

/// Number of eigenvalues of the symmetric tridiagonal matrix below `x`.
fn sturm_count(alpha: &[f64], beta: &[f64], x: f64) -> usize {
    let mut count = 0;
    let mut d = 1.0;
    for i in 0..alpha.len() {
        let off = if i == 0 { 0.0 } else { beta[i - 1] * beta[i - 1] };
        d = alpha[i] - x - if i == 0 { 0.0 } else { off / d };
        if d == 0.0 {
            d = -f64::EPSILON * (alpha[i].abs() + x.abs()).max(f64::MIN_POSITIVE);
        }
        if d < 0.0 {
            count += 1;
        }
    }
    count
}

fn tridiag_extremes(alpha: &[f64], beta: &[f64]) -> (f64, f64) {
    let k = alpha.len();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..k {
        let r = if i > 0 { beta[i - 1].abs() } else { 0.0 } + if i + 1 < k { beta[i].abs() } else { 0.0 };
        lo = lo.min(alpha[i] - r);
        hi = hi.max(alpha[i] + r);
    }
    let bisect = |target: usize| {
        let (mut a, mut b) = (lo, hi);
        for _ in 0..200 {
            let mid = 0.5 * (a + b);
            if mid <= a || mid >= b {
                break;
            }
            if sturm_count(alpha, beta, mid) > target {
                b = mid;
            } else {
                a = mid;
            }
        }
        0.5 * (a + b)
    };
    (bisect(0), bisect(k - 1))
}

/// Last component of the unit eigenvector of the tridiagonal matrix for
/// eigenvalue `theta`, by two steps of inverse iteration.
fn ritz_last_component(alpha: &[f64], beta: &[f64], theta: f64) -> f64 {
    let k = alpha.len();
    if k == 1 {
        return 1.0;
    }
    let shift = theta + 1e-14 * theta.abs().max(1e-300);
    let mut s = vec![1.0; k];
    for _ in 0..2 {
        // Thomas algorithm on (T - shift I) z = s.
        let mut c = vec![0.0; k];
        let mut d = vec![0.0; k];
        let mut diag = alpha[0] - shift;
        if diag == 0.0 {
            diag = 1e-300;
        }
        c[0] = if k > 1 { beta[0] / diag } else { 0.0 };
        d[0] = s[0] / diag;
        for i in 1..k {
            let mut m = alpha[i] - shift - beta[i - 1] * c[i - 1];
            if m == 0.0 {
                m = 1e-300;
            }
            c[i] = if i + 1 < k { beta[i] / m } else { 0.0 };
            d[i] = (s[i] - beta[i - 1] * d[i - 1]) / m;
        }
        let mut z = vec![0.0; k];
        z[k - 1] = d[k - 1];
        for i in (0..k - 1).rev() {
            z[i] = d[i] - c[i] * z[i + 1];
        }
        let nz = z.iter().map(|v| v * v).sum::<f64>().sqrt();
        if !nz.is_finite() || nz == 0.0 {
            return 0.0;
        }
        s = z.into_iter().map(|v| v / nz).collect();
    }
    s[k - 1]
}
