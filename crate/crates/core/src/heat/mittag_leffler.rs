//! Mittag-Leffler function `E_{g,1}(z)` for real `z <= 0` and `0 < g <= 1`.
//!
//! Three evaluation paths:
//! - `|z| <= 1`: power series with compensated summation.
//! - large `|z|`: the algebraic expansion `-sum_k z^{-k} / Gamma(1 - g k)`,
//!   used only when its smallest term is below double precision.
//! - otherwise: adaptive Gauss-Kronrod quadrature of
//!   `E_g(-x) = sin(g pi)/(g pi) int_0^inf exp(-(x w)^{1/g}) / (w^2 + 2 w cos(g pi) + 1) dw`,
//!   whose integrand is positive and smooth.
//!
//! `g = 1` returns `exp(z)`.

use std::f64::consts::PI;

use statrs::function::gamma::{gamma, ln_gamma};

use crate::error::{invalid, Result};

const SERIES_MAX: f64 = 1.0;

pub fn mittag_leffler(g: f64, z: f64) -> Result<f64> {
    if !(g > 0.0 && g <= 1.0) {
        return Err(invalid(format!("Mittag-Leffler order must lie in (0, 1], got {g}")));
    }
    if !(z <= 0.0 && z.is_finite()) {
        return Err(invalid(format!("Mittag-Leffler argument must be finite and <= 0, got {z}")));
    }
    if g == 1.0 {
        return Ok(z.exp());
    }
    let x = -z;
    if x == 0.0 {
        return Ok(1.0);
    }
    if x <= SERIES_MAX {
        return Ok(series(g, x));
    }
    if let Some(v) = asymptotic(g, x) {
        return Ok(v);
    }
    Ok(quadrature(g, x))
}

fn series(g: f64, x: f64) -> f64 {
    let mut sum = 1.0;
    let mut comp = 0.0;
    let mut k = 1;
    loop {
        let t = (-x).powi(k) / gamma(g * k as f64 + 1.0);
        let s = sum + t;
        comp += if sum.abs() >= t.abs() { (sum - s) + t } else { (t - s) + sum };
        sum = s;
        if t.abs() < 1e-18 * sum.abs() && k > 3 || k > 400 {
            break;
        }
        k += 1;
    }
    sum + comp
}

/// Sum of the asymptotic expansion truncated before its smallest term,
/// or `None` when that term is not negligible.
fn asymptotic(g: f64, x: f64) -> Option<f64> {
    let lx = x.ln();
    let mut sum = 0.0;
    let mut comp = 0.0;
    let mut smallest = f64::INFINITY;
    for k in 1..4000 {
        let a = g * k as f64;
        // 1/Gamma(1 - a) = Gamma(a) sin(pi a) / pi
        let r = a - 2.0 * (a / 2.0).floor();
        let s = (PI * r).sin();
        let mag = (ln_gamma(a) - k as f64 * lx).exp() / PI;
        let t = -(if k % 2 == 0 { 1.0 } else { -1.0 }) * mag * s;
        if mag > smallest && mag > 0.0 {
            break;
        }
        smallest = smallest.min(mag);
        let ns = sum + t;
        comp += if sum.abs() >= t.abs() { (sum - ns) + t } else { (t - ns) + sum };
        sum = ns;
        if mag < 1e-18 * sum.abs() {
            return Some(sum + comp);
        }
    }
    let total = sum + comp;
    (smallest < 1e-17 * total.abs()).then_some(total)
}

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

/// Kronrod-15 value and its difference from the embedded Gauss-7 rule.
fn gk15(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = fc * WGK[7];
    let mut gsum = fc * WG[3];
    for i in 0..7 {
        let d = h * XGK[i];
        let s = f(c - d) + f(c + d);
        k += WGK[i] * s;
        if i % 2 == 1 {
            gsum += WG[i / 2] * s;
        }
    }
    (k * h, ((k - gsum) * h).abs())
}

fn adaptive(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
    let (k, err) = gk15(f, a, b);
    if err <= tol || err <= 50.0 * f64::EPSILON * k.abs() || depth >= 30 {
        return k;
    }
    let m = 0.5 * (a + b);
    adaptive(f, a, m, 0.5 * tol, depth + 1) + adaptive(f, m, b, 0.5 * tol, depth + 1)
}

fn quadrature(g: f64, x: f64) -> f64 {
    let (sn, c) = (g * PI).sin_cos();
    let inv = 1.0 / g;
    // w^2 + 2 w c + 1 without cancellation near w = -c
    let f = |w: f64| (-(x * w).powf(inv)).exp() / ((w + c) * (w + c) + sn * sn);

    // Beyond `upper` the exponential factor underflows.
    let upper = 745f64.powf(g) / x;
    let scale = 1.0 / x;
    let mut pts = vec![0.0, upper];
    for i in -8..40 {
        let p = scale * 2f64.powi(i);
        if p < upper {
            pts.push(p);
        }
    }
    if c < 0.0 {
        let (peak, width) = (-c, sn);
        for k in [-4.0, -2.0, -1.0, -0.5, 0.0, 0.5, 1.0, 2.0, 4.0] {
            let p = peak + k * width;
            if p > 0.0 && p < upper {
                pts.push(p);
            }
        }
    }
    pts.sort_by(f64::total_cmp);
    pts.dedup();

    let rough: f64 = pts.windows(2).map(|w| gk15(&f, w[0], w[1]).0).sum();
    let tol = 1e-15 * rough.abs() / pts.len() as f64;
    let integral: f64 = pts.windows(2).map(|w| adaptive(&f, w[0], w[1], tol, 0)).sum();
    sn / (g * PI) * integral
}

/// Observed `(min, max)` of `(1 + x) E_{g,1}(-x)` over `[0, x_max]`,
/// sampled at `0` and on a log grid with 50 points per decade from `1e-4`.
pub fn envelope_constants(g: f64, x_max: f64) -> Result<(f64, f64)> {
    if !(x_max >= 0.0 && x_max.is_finite()) {
        return Err(invalid(format!("x_max must be finite and nonnegative, got {x_max}")));
    }
    let mut lo: f64 = 1.0;
    let mut hi: f64 = 1.0;
    if x_max > 1e-4 {
        for x in crate::filters::log_grid(1e-4, x_max, 50) {
            let v = (1.0 + x) * mittag_leffler(g, -x)?;
            lo = lo.min(v);
            hi = hi.max(v);
        }
    }
    Ok((lo, hi))
}
