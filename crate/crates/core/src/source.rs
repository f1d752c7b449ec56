//! Index functions `phi`, the induced function `Theta(mu) = mu phi^{-1}(mu)`
//! and source sets `{x : sum phi(kappa^2)^{-1} |<x, u>|^2 <= E^2}`.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum IndexFunction {
    /// `phi(mu) = mu^(p/2)`
    Poly { p: f64 },
    /// `phi(mu) = (-ln mu)^(-p)` on `(0, e^{-max(1,p)}]`
    Log { p: f64 },
}

impl IndexFunction {
    pub fn poly(p: f64) -> Result<Self> {
        if !(p.is_finite() && p > 0.0) {
            return Err(invalid(format!("poly exponent must be positive, got {p}")));
        }
        Ok(Self::Poly { p })
    }

    pub fn log(p: f64) -> Result<Self> {
        if !(p.is_finite() && p > 0.0) {
            return Err(invalid(format!("log exponent must be positive, got {p}")));
        }
        Ok(Self::Log { p })
    }

    pub fn p(&self) -> f64 {
        match *self {
            Self::Poly { p } | Self::Log { p } => p,
        }
    }

    /// Right end of the domain on which `phi` is used.
    ///
    /// For `Log` this is `e^{-max(1, p)}`: there `phi(mu)/mu` is
    /// non-increasing and `Theta` is convex.
    pub fn mu_max(&self) -> f64 {
        match *self {
            Self::Poly { .. } => f64::INFINITY,
            Self::Log { p } => (-p.max(1.0)).exp(),
        }
    }

    /// `phi(mu_max)`, the right end of the range of `phi`.
    pub fn z_max(&self) -> f64 {
        match *self {
            Self::Poly { .. } => f64::INFINITY,
            Self::Log { p } => p.max(1.0).powf(-p),
        }
    }

    /// `phi(t mu) >= t phi(mu)` for `t` in `(0, 1)` on the whole domain,
    /// which is what the error bounds for the discrepancy principle use.
    pub fn is_concave(&self) -> bool {
        match *self {
            Self::Poly { p } => p <= 2.0,
            Self::Log { .. } => true,
        }
    }

    pub fn eval(&self, mu: f64) -> Result<f64> {
        if !(mu > 0.0 && mu <= self.mu_max()) {
            return Err(Error::Domain(format!("{self}: mu = {mu:e} outside (0, {:e}]", self.mu_max())));
        }
        Ok(match *self {
            Self::Poly { p } => mu.powf(0.5 * p),
            Self::Log { p } => (-mu.ln()).powf(-p),
        })
    }

    pub fn inverse(&self, z: f64) -> Result<f64> {
        if !(z > 0.0 && z <= self.z_max()) {
            return Err(Error::Domain(format!("{self}: phi^-1 at {z:e} outside (0, {:e}]", self.z_max())));
        }
        Ok(match *self {
            Self::Poly { p } => z.powf(2.0 / p),
            Self::Log { p } => (-z.powf(-1.0 / p)).exp(),
        })
    }

    /// `1 / phi(mu)`, the source-norm weight. `Log` extends continuously to
    /// `(0, 1]` with weight `0` at `mu = 1`.
    pub fn source_weight(&self, mu: f64) -> Result<f64> {
        match *self {
            Self::Log { p } if mu > 0.0 && mu <= 1.0 => Ok((-mu.ln()).powf(p)),
            _ => Ok(1.0 / self.eval(mu)?),
        }
    }

    /// `Theta(z) = z phi^{-1}(z)`
    pub fn theta(&self, z: f64) -> Result<f64> {
        Ok(z * self.inverse(z)?)
    }

    /// Largest admissible argument of `theta_inv`.
    pub fn theta_max(&self) -> f64 {
        match *self {
            Self::Poly { .. } => f64::INFINITY,
            Self::Log { .. } => self.z_max() * self.mu_max(),
        }
    }

    /// `Theta^{-1}(w)` by bisection in `ln z`.
    pub fn theta_inv(&self, w: f64) -> Result<f64> {
        if !(w > 0.0 && w.is_finite()) {
            return Err(Error::Domain(format!("{self}: Theta^-1 at {w:e}")));
        }
        let zmax = self.z_max();
        // Theta(z_max) itself may round a few ulps above theta_max.
        if w > self.theta_max() * (1.0 + 1e-12) {
            return Err(Error::Domain(format!("{self}: Theta^-1 at {w:e} exceeds {:e}", self.theta_max())));
        }
        let w = w.min(self.theta_max());
        let th = |z: f64| self.theta(z).unwrap_or(f64::INFINITY);
        let mut lo = zmax.min(1.0);
        let mut hi = lo;
        let step = 2f64.powi(16);
        let mut guard = 0;
        while th(lo) > w {
            lo /= step;
            guard += 1;
            if guard > 80 || lo == 0.0 {
                return Err(Error::BracketNotFound { lo, hi });
            }
        }
        while hi < zmax && th(hi) < w {
            hi = (hi * step).min(zmax);
            guard += 1;
            if guard > 160 {
                return Err(Error::BracketNotFound { lo, hi });
            }
        }
        let (mut a, mut b) = (lo.ln(), hi.ln());
        for _ in 0..200 {
            let mid = 0.5 * (a + b);
            if mid <= a || mid >= b {
                break;
            }
            if th(mid.exp()) < w {
                a = mid;
            } else {
                b = mid;
            }
        }
        Ok((0.5 * (a + b)).exp())
    }
}

impl fmt::Display for IndexFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Poly { p } => write!(f, "poly:p={p}"),
            Self::Log { p } => write!(f, "log:p={p}"),
        }
    }
}

impl FromStr for IndexFunction {
    type Err = Error;

    /// `poly:p=<real>` or `log:p=<real>`
    fn from_str(s: &str) -> Result<Self> {
        let (kind, rest) = s.trim().split_once(':').ok_or_else(|| invalid(format!("bad index function '{s}'")))?;
        let value = rest
            .trim()
            .strip_prefix("p=")
            .and_then(|v| v.trim().parse::<f64>().ok())
            .ok_or_else(|| invalid(format!("bad exponent in '{s}'")))?;
        match kind.trim() {
            "poly" => Self::poly(value),
            "log" => Self::log(value),
            other => Err(invalid(format!("unknown index function kind '{other}'"))),
        }
    }
}

/// `sum phi(kappa_l^2)^{-1} |c_l|^2` for analysis coefficients `c = <x, u_l>`.
pub fn source_norm_sq(phi: &IndexFunction, coeffs: &[Complex64], kappa: &[f64]) -> Result<f64> {
    if coeffs.len() != kappa.len() {
        return Err(invalid(format!("{} coefficients for {} values of kappa", coeffs.len(), kappa.len())));
    }
    let mut s = 0.0;
    for (c, &k) in coeffs.iter().zip(kappa) {
        let w = phi.source_weight(k * k)?;
        s += w * c.norm_sqr();
    }
    Ok(s)
}

/// `sum phi(kappa_l^2)^{-1} |<x, u_l>|^2`; `x` lies in the source set of
/// radius `E` iff this is at most `E^2`.
pub fn source_norm(x: &crate::grid::GridFunction, sys: &crate::dfd::DfdSystem, phi: &IndexFunction) -> Result<f64> {
    source_norm_sq(phi, &sys.u().analysis(x)?, sys.kappa())
}

pub fn in_source_set(phi: &IndexFunction, coeffs: &[Complex64], kappa: &[f64], e: f64) -> Result<bool> {
    Ok(source_norm_sq(phi, coeffs, kappa)? <= e * e)
}

/// Source radius `E` implied by a Sobolev norm for the band-partitioned
/// heat decomposition with `kappa_N = e^{-N T}`, `phi = Log(p)`.
///
/// Each band `N <= w^2 < N + 1` carries weight `(2 N T)^p <= (2T)^p w^{2p}`,
/// so `E = (2T)^{p/2} sqrt(B_u) |theta|_{H^p}` for a `u`-frame with upper
/// bound `B_u`.
pub fn sobolev_to_source(p: f64, hp_norm: f64, t: f64, b_u: f64) -> Result<f64> {
    if !(p > 0.0 && hp_norm >= 0.0 && t > 0.0 && b_u > 0.0) {
        return Err(invalid("sobolev_to_source needs p, T, B_u > 0 and a nonnegative norm"));
    }
    Ok((2.0 * t).powf(0.5 * p) * b_u.sqrt() * hp_norm)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn poly_theta_closed_forms() {
        let phi = IndexFunction::poly(2.0).unwrap();
        assert!((phi.theta(0.2).unwrap() - 0.04).abs() < 1e-15);
        let phi4 = IndexFunction::poly(4.0).unwrap();
        assert!((phi4.theta_inv(0.008).unwrap() - 0.04).abs() < 1e-14);
        for &p in &[0.5f64, 1.0, 2.0, 3.0, 7.0] {
            let phi = IndexFunction::poly(p).unwrap();
            for &z in &[1e-8f64, 1e-3, 0.3, 2.0, 50.0] {
                let want = z.powf((p + 2.0) / p);
                assert!((phi.theta(z).unwrap() - want).abs() <= 1e-14 * want);
                let back = phi.theta_inv(want).unwrap();
                assert!((back - z).abs() <= 1e-13 * z, "p={p} z={z} back={back}");
            }
        }
    }

    #[test]
    fn log_values() {
        let phi = IndexFunction::log(1.0).unwrap();
        assert!((phi.eval((-2f64).exp()).unwrap() - 0.5).abs() < 1e-15);
        assert!((phi.inverse(0.5).unwrap() - (-2f64).exp()).abs() < 1e-16);
        assert!(phi.eval(0.5).is_err());
        assert!(phi.eval(0.0).is_err());
    }

    #[test]
    fn log_theta_inverse_against_closed_form_theta() {
        for &p in &[0.5, 1.0, 2.0] {
            let phi = IndexFunction::log(p).unwrap();
            for &frac in &[0.05f64, 0.1, 0.5, 1.0] {
                let z = frac * phi.z_max();
                let w = z * (-z.powf(-1.0 / p)).exp();
                let back = phi.theta_inv(w).unwrap();
                assert!((back - z).abs() <= 1e-12 * z, "p={p} z={z} back={back}");
            }
            assert!(phi.theta_inv(phi.theta_max() * 1.01).is_err());
        }
    }

    #[test]
    fn domain_edges() {
        let phi = IndexFunction::log(2.0).unwrap();
        assert_eq!(phi.mu_max(), (-2f64).exp());
        assert!(phi.eval(0.2).is_err());
        assert_eq!(phi.source_weight(1.0).unwrap(), 0.0);
        assert!(phi.source_weight(1.5).is_err());
        assert!(IndexFunction::poly(-1.0).is_err());
        assert!(IndexFunction::poly(2.0).unwrap().eval(-1.0).is_err());
    }

    #[test]
    fn parse_round_trip() {
        let phi: IndexFunction = "poly:p=2".parse().unwrap();
        assert_eq!(phi, IndexFunction::Poly { p: 2.0 });
        let phi: IndexFunction = " log:p=0.5 ".parse().unwrap();
        assert_eq!(phi, IndexFunction::Log { p: 0.5 });
        assert_eq!(phi.to_string().parse::<IndexFunction>().unwrap(), phi);
        assert!("poly:q=2".parse::<IndexFunction>().is_err());
        assert!("cheb:p=2".parse::<IndexFunction>().is_err());
    }

    #[test]
    fn concavity_flags() {
        assert!(IndexFunction::poly(2.0).unwrap().is_concave());
        assert!(!IndexFunction::poly(2.5).unwrap().is_concave());
        assert!(IndexFunction::log(3.0).unwrap().is_concave());
    }

    #[test]
    fn source_norm_weights() {
        let phi = IndexFunction::poly(2.0).unwrap();
        let c = [Complex64::new(0.5, 0.0), Complex64::new(0.0, 0.25)];
        let k = [1.0, 0.5];
        let s = source_norm_sq(&phi, &c, &k).unwrap();
        assert!((s - (0.25 + 0.0625 * 4.0)).abs() < 1e-15);
        assert!(in_source_set(&phi, &c, &k, 0.71).unwrap());
        assert!(!in_source_set(&phi, &c, &k, 0.70).unwrap());
    }
}
