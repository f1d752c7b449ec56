//! DFD systems for the heat operators: wavelet-vaguelette for `gamma < 1`,
//! band-partitioned wavelets for `gamma = 1`.

use num_complex::Complex64;
use serde::Serialize;

use crate::dfd::{DfdSystem, ForwardOperator};
use crate::error::{invalid, Result};
use crate::frames::{BoundsOptions, Frame, FrameBounds, IndexSet, Label, SparseSpectrum};
use crate::grid::Subspace;

use super::meyer::MeyerWavelet;
use super::mittag_leffler::envelope_constants;
use super::operator::HeatOperator;

/// `kappa = 2^{-2 j}` for `j >= 1`, else `1`.
pub fn wvd_kappa(level: i32) -> f64 {
    if level >= 1 {
        2f64.powi(-2 * level)
    } else {
        1.0
    }
}

/// `kappa = e^{-N T}`
pub fn band_kappa(n: u32, t: f64) -> f64 {
    (-(n as f64) * t).exp()
}

/// Range of `kappa / m(w)` over one level's Fourier support: predicted
/// from the Mittag-Leffler envelope and measured on the grid.
#[derive(Debug, Clone, Serialize)]
pub struct LevelBracket {
    pub level: i32,
    pub kappa: f64,
    pub predicted: (f64, f64),
    pub measured: (f64, f64),
}

#[derive(Debug, Clone, Serialize)]
pub struct WvdInfo {
    pub gamma: f64,
    pub t: f64,
    pub j_min: i32,
    pub j_max: i32,
    pub a_u: f64,
    pub b_u: f64,
    /// `c_lo <= (1 + x) E_gamma(-x) <= c_hi` measured on `[0, x_max]`.
    pub c_lo: f64,
    pub c_hi: f64,
    pub x_max: f64,
    pub levels: Vec<LevelBracket>,
    pub u_bounds: FrameBounds,
    pub v_bounds: FrameBounds,
}

#[derive(Debug, Clone, Serialize)]
pub struct BandInfo {
    pub t: f64,
    pub j_min: i32,
    pub j_max: i32,
    pub n_max: u32,
    /// Labels dropped because the band misses the wavelet's support.
    pub pruned: usize,
    pub u_bounds: FrameBounds,
    pub v_bounds: FrameBounds,
}

/// Wavelet-vaguelette decomposition: `u` the Meyer basis, and
/// `F v = kappa F u / m` so that `K* v = kappa u` holds bin by bin.
pub fn build_wvd(op: &HeatOperator, wavelet: &MeyerWavelet, j_min: i32, j_max: i32) -> Result<(DfdSystem, WvdInfo)> {
    if op.gamma() >= 1.0 {
        return Err(invalid("the wavelet-vaguelette construction needs gamma < 1"));
    }
    let grid = op.grid();
    let u = wavelet.frame(grid, j_min, j_max)?;
    let m = op.multiplier();
    let tg = op.t().powf(op.gamma());
    let x_max = grid.nyquist().powi(2) * tg;
    let (c_lo, c_hi) = envelope_constants(op.gamma(), x_max)?;

    let mut kappa = Vec::with_capacity(u.len());
    let mut v_elems = Vec::with_capacity(u.len());
    let mut levels: Vec<LevelBracket> = Vec::new();
    for (label, e) in u.labels().iter().zip(u.elements()) {
        let level = label.0[0];
        let k = wvd_kappa(level);
        let mut values = Vec::with_capacity(e.nnz());
        let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
        for (&bin, &c) in e.indices.iter().zip(&e.values) {
            let mult = m[bin as usize];
            if !(mult > 0.0) {
                return Err(invalid(format!("heat multiplier vanishes at bin {bin}")));
            }
            let r = k / mult;
            lo = lo.min(r);
            hi = hi.max(r);
            values.push(c * r);
        }
        v_elems.push(SparseSpectrum { indices: e.indices.clone(), values });
        kappa.push(k);
        match levels.last_mut() {
            Some(b) if b.level == level => {
                b.measured = (b.measured.0.min(lo), b.measured.1.max(hi));
            }
            _ => {
                let (w_lo, w_hi) = if level < j_min {
                    (0.0, wavelet.identity_radius(j_min))
                } else {
                    (2f64.powi(level) * wavelet.a_u, 2f64.powi(level) * wavelet.b_u)
                };
                let predicted = (k * (1.0 + w_lo * w_lo * tg) / c_hi, k * (1.0 + w_hi * w_hi * tg) / c_lo);
                levels.push(LevelBracket { level, kappa: k, predicted, measured: (lo, hi) });
            }
        }
    }

    let v = Frame::new(grid.clone(), u.index_set().clone(), v_elems, u.subspace().clone())?
        .with_minimal(Some(true))
        .with_truncation(u.truncation().to_string());
    let v_bounds = v.estimate_bounds(&BoundsOptions::default())?;
    let v = v.with_bounds(v_bounds);
    let u_bounds = u.bounds().expect("Meyer frame carries its tight constant");
    let info = WvdInfo {
        gamma: op.gamma(),
        t: op.t(),
        j_min,
        j_max,
        a_u: wavelet.a_u,
        b_u: wavelet.b_u,
        c_lo,
        c_hi,
        x_max,
        levels,
        u_bounds,
        v_bounds,
    };
    Ok((DfdSystem::new(u, v, kappa)?, info))
}

/// Band-partitioned DFD for the classical heat operator: `u_{l,N}` is `u_l`
/// restricted to `N <= w^2 < N + 1`, `kappa = e^{-N T}` and
/// `F v = e^{(w^2 - N) T} F u_{l,N}`.
pub fn build_band_dfd(
    op: &HeatOperator,
    wavelet: &MeyerWavelet,
    j_min: i32,
    j_max: i32,
    n_max: u32,
) -> Result<(DfdSystem, BandInfo)> {
    if op.gamma() != 1.0 {
        return Err(invalid("the band-partitioned construction needs gamma = 1"));
    }
    let grid = op.grid();
    let radius = ((n_max + 1) as f64).sqrt();
    if radius > wavelet.identity_radius(j_max) {
        return Err(invalid(format!(
            "bands up to |w| = {radius:.3} exceed the wavelet identity region {:.3}; raise j_max",
            wavelet.identity_radius(j_max)
        )));
    }
    grid.check_resolves(radius)?;
    let base = wavelet.frame(grid, j_min, j_max)?;
    let t = op.t();
    let band_of = |bin: u32| -> Option<u32> {
        let w = grid.frequency(bin as usize);
        let n = (w * w).floor();
        (n <= n_max as f64).then_some(n as u32)
    };

    let mut entries: Vec<(Label, SparseSpectrum, SparseSpectrum, f64)> = Vec::new();
    let mut pruned = 0usize;
    for (label, e) in base.labels().iter().zip(base.elements()) {
        let mut split: Vec<(Vec<u32>, Vec<Complex64>)> = vec![(Vec::new(), Vec::new()); n_max as usize + 1];
        for (&bin, &c) in e.indices.iter().zip(&e.values) {
            if let Some(n) = band_of(bin) {
                split[n as usize].0.push(bin);
                split[n as usize].1.push(c);
            }
        }
        for (n, (indices, values)) in split.into_iter().enumerate() {
            if indices.is_empty() {
                pruned += 1;
                continue;
            }
            let n = n as u32;
            let v_values = indices
                .iter()
                .zip(&values)
                .map(|(&bin, &c)| {
                    let w = grid.frequency(bin as usize);
                    c * ((w * w - n as f64) * t).exp()
                })
                .collect();
            let mut l = label.0.clone();
            l.push(n as i32);
            entries.push((
                Label(l),
                SparseSpectrum { indices: indices.clone(), values },
                SparseSpectrum { indices, values: v_values },
                band_kappa(n, t),
            ));
        }
    }
    entries.sort_by(|a, b| a.0.cmp(&b.0));

    let mask = Subspace::from_frequencies(grid, |w| w * w < (n_max + 1) as f64);
    // On the mask S_v is multiplication by e^{2 (w^2 - N) T}.
    let (mut d_lo, mut d_hi) = (f64::INFINITY, 0.0f64);
    for bin in 0..grid.n() {
        if mask.contains_bin(bin) {
            let w = grid.frequency(bin);
            let d = (2.0 * (w * w - (w * w).floor()) * t).exp();
            d_lo = d_lo.min(d);
            d_hi = d_hi.max(d);
        }
    }
    let v_bounds = FrameBounds { lower: d_lo, upper: d_hi };

    let labels = entries.iter().map(|e| e.0.clone()).collect();
    let index_set = IndexSet::new(labels)?;
    let kappa = entries.iter().map(|e| e.3).collect();
    let (u_elems, v_elems): (Vec<_>, Vec<_>) = entries.into_iter().map(|e| (e.1, e.2)).unzip();
    let trunc = format!("Meyer levels {j_min}..={j_max}, bands N <= {n_max}");
    let u = Frame::new(grid.clone(), index_set.clone(), u_elems, mask.clone())?
        .with_tight_constant(1.0)?
        .with_truncation(trunc.clone());
    let v = Frame::new(grid.clone(), index_set, v_elems, mask)?.with_bounds(v_bounds).with_truncation(trunc);
    let info = BandInfo {
        t,
        j_min,
        j_max,
        n_max,
        pruned,
        u_bounds: FrameBounds { lower: 1.0, upper: 1.0 },
        v_bounds,
    };
    Ok((DfdSystem::new(u, v, kappa)?, info))
}
