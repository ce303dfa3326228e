//! Linear stability of the straight cylinder under area and volume constraints.
//!
//! Growth rates follow the generalized eigenproblem of the constrained flow
//! linearized at the cylinder of radius `r`; the (0,0) mode is removed by the
//! constraints and (0,±1) are the translational zero modes.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::CoreError;

/// Distance from the pole of the pearling neutral curve inside which evaluation is refused.
pub const POLE_GUARD: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub c0: f64,
    pub r: f64,
    pub l: f64,
    pub lambda2: f64,
    /// `None` means "on the trivial branch": derived from the cylinder condition.
    pub lambda1: Option<f64>,
}

impl ModelParams {
    pub fn new(c0: f64, l: f64, lambda2: f64) -> Result<Self, CoreError> {
        Self::with_radius(c0, 1.0, l, lambda2)
    }

    pub fn with_radius(c0: f64, r: f64, l: f64, lambda2: f64) -> Result<Self, CoreError> {
        let p = Self { c0, r, l, lambda2, lambda1: None };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), CoreError> {
        if !(self.r > 0.0) {
            return Err(CoreError::NonPositive("r", self.r));
        }
        if !(self.l > 0.0) {
            return Err(CoreError::NonPositive("L", self.l));
        }
        Ok(())
    }

    pub fn lambda1(&self) -> f64 {
        self.lambda1
            .unwrap_or_else(|| cylinder_lambda1(self.lambda2, self.c0, self.r))
    }

    pub fn wavenumber(&self, m: i32) -> f64 {
        2.0 * PI * m as f64 / self.l
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Mode {
    pub m: i32,
    pub n: i32,
}

impl Mode {
    pub fn new(m: i32, n: i32) -> Self {
        Self { m, n }
    }

    pub fn k(&self, l: f64) -> f64 {
        2.0 * PI * self.m as f64 / l
    }

    /// Modes related by (m,n) → (±m,±n) share a growth rate.
    pub fn multiplicity(&self) -> u32 {
        if self.m == 0 || self.n == 0 {
            2
        } else {
            4
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DispersionValue {
    pub mode: Mode,
    pub mu: f64,
    pub multiplicity: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StabilityWindow {
    pub lambda2_lo: f64,
    pub lambda2_hi: f64,
    pub lo_mode: Option<Mode>,
    pub hi_mode: Option<Mode>,
    pub exists: bool,
}

pub fn lambda1_on_cylinder(lambda2: f64, c0: f64, r: f64) -> Result<f64, CoreError> {
    if !(r > 0.0) {
        return Err(CoreError::NonPositive("r", r));
    }
    Ok(cylinder_lambda1(lambda2, c0, r))
}

fn cylinder_lambda1(lambda2: f64, c0: f64, r: f64) -> f64 {
    0.5 * (1.0 / (2.0 * r * r) - 2.0 * r * lambda2 - 2.0 * c0 * c0)
}

/// Growth rate μ(k, n) at λ₂ for a cylinder of radius `params.r`; k may be any real.
pub fn dispersion(params: &ModelParams, k: f64, n: i32) -> f64 {
    growth_rate(params.r, params.c0, params.lambda2, k, n as f64)
}

// Written in t = k² + (n²−1)/r² so that the translational modes vanish exactly.
fn growth_rate(r: f64, c0: f64, lambda2: f64, k: f64, n: f64) -> f64 {
    let t = k * k + (n * n - 1.0) / (r * r);
    -0.5 * t * t + r * lambda2 * t - (1.0 / r - 2.0 * c0) * k * k / r
}

/// ∂μ/∂λ₂ at fixed (k, n) for r = 1.
pub fn dispersion_lambda2_slope(k: f64, n: i32) -> f64 {
    k * k + (n * n) as f64 - 1.0
}

pub fn pearl_neutral_lambda2(kappa: f64, c0: f64) -> Result<f64, CoreError> {
    if !(kappa > 0.0) {
        return Err(CoreError::NonPositive("kappa", kappa));
    }
    if c0 == 0.5 {
        return Ok((kappa - 1.0) / 2.0);
    }
    if (kappa - 1.0).abs() < POLE_GUARD {
        return Err(CoreError::Pole { what: "pearling neutral curve", at: kappa });
    }
    Ok(0.5 * (kappa * kappa - 4.0 * c0 * kappa + 1.0) / (kappa - 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PearlExtrema {
    pub kappa_minus: f64,
    pub kappa_plus: f64,
    /// κ₋ lies in (0,1): pearling first sets in at a finite wavelength.
    pub finite_wavelength: bool,
}

impl PearlExtrema {
    pub fn critical_period(&self) -> Option<f64> {
        (self.kappa_minus > 0.0).then(|| 2.0 * PI / self.kappa_minus.sqrt())
    }
}

pub fn pearl_extrema(c0: f64) -> Option<PearlExtrema> {
    if c0 > 0.5 {
        return None;
    }
    let d = (2.0 - 4.0 * c0).sqrt();
    let kappa_minus = 1.0 - d;
    Some(PearlExtrema {
        kappa_minus,
        kappa_plus: 1.0 + d,
        finite_wavelength: kappa_minus > 0.0 && kappa_minus < 1.0,
    })
}

pub fn coil_neutral_lambda2(k: f64, c0: f64) -> f64 {
    0.5 * k * k + 1.0 - 2.0 * c0
}

pub fn wrinkle_neutral_lambda2(n: i32) -> Result<f64, CoreError> {
    if n.abs() <= 1 {
        return Err(CoreError::InvalidMode { m: 0, n });
    }
    let n2 = (n * n) as f64;
    Ok((-0.5 * n2 * n2 + n2 - 0.5) / (1.0 - n2))
}

/// λ₂ at which μ(k_m, n) vanishes.
pub fn bifurcation_point(m: i32, n: i32, l: f64, c0: f64, r: f64) -> Result<f64, CoreError> {
    if !(r > 0.0) {
        return Err(CoreError::NonPositive("r", r));
    }
    if !(l > 0.0) {
        return Err(CoreError::NonPositive("L", l));
    }
    if m == 0 && n.abs() <= 1 {
        return Err(CoreError::InvalidMode { m, n });
    }
    let k = 2.0 * PI * m as f64 / l;
    let r2 = r * r;
    let nf = n as f64;
    let s = k * k + nf * nf / r2;
    let den = (1.0 - nf * nf) / r2 - k * k;
    if den.abs() < POLE_GUARD {
        return Err(CoreError::Pole { what: "bifurcation point denominator", at: den });
    }
    let num = -0.5 * s * s + s / r2 - (1.0 / r - 2.0 * c0) * k * k / r - 1.0 / (2.0 * r2 * r2);
    // μ is affine in λ₂ with slope r·s − 1/r = −r·den.
    Ok(num / (r * den))
}

/// Window of stable λ₂ for a cylinder of period `l` (r = 1), scanning the
/// discrete modes: μ is affine in λ₂ with slope k² + n² − 1, so each mode
/// bounds the window from below (negative slope) or above (positive slope).
pub fn stability_window(c0: f64, l: f64) -> Result<StabilityWindow, CoreError> {
    if !(l > 0.0) {
        return Err(CoreError::NonPositive("L", l));
    }
    let mut lo = f64::NEG_INFINITY;
    let mut hi = f64::INFINITY;
    let mut lo_mode = None;
    let mut hi_mode = None;
    let m_max = (WINDOW_SCAN_K * l / (2.0 * PI)).ceil() as i32;
    for m in 0..=m_max {
        for n in 0..=WINDOW_SCAN_N {
            if m == 0 && n <= 1 {
                continue;
            }
            let k = 2.0 * PI * m as f64 / l;
            let slope = dispersion_lambda2_slope(k, n);
            if slope.abs() < POLE_GUARD {
                continue;
            }
            let v = bifurcation_point(m, n, l, c0, 1.0)?;
            if slope < 0.0 && v > lo {
                lo = v;
                lo_mode = Some(Mode::new(m, n));
            } else if slope > 0.0 && v < hi {
                hi = v;
                hi_mode = Some(Mode::new(m, n));
            }
        }
    }
    let k1 = 2.0 * PI / l;
    let exists = lo < hi && !(c0 > 0.5 && k1 <= 1.0);
    Ok(StabilityWindow { lambda2_lo: lo, lambda2_hi: hi, lo_mode, hi_mode, exists })
}

// Thresholds grow like k²/2 and n²/2, so modes beyond these never bound the window
// for |c0| of order one.
const WINDOW_SCAN_K: f64 = 12.0;
const WINDOW_SCAN_N: i32 = 12;

/// All μ(k_m, n) with |m| ≤ max_m, 0 ≤ n ≤ max_n, (m,n) ≠ (0,0), one entry per
/// symmetry class (m ≥ 0, n ≥ 0), sorted by descending μ.
pub fn cylinder_spectrum(params: &ModelParams, max_m: i32, max_n: i32) -> Vec<DispersionValue> {
    let mut out = Vec::new();
    for m in 0..=max_m.max(0) {
        for n in 0..=max_n.max(0) {
            if m == 0 && n == 0 {
                continue;
            }
            let mode = Mode::new(m, n);
            out.push(DispersionValue {
                mode,
                mu: dispersion(params, mode.k(params.l), n),
                multiplicity: mode.multiplicity(),
            });
        }
    }
    out.sort_by(|a, b| b.mu.total_cmp(&a.mu).then(a.mode.m.cmp(&b.mode.m)).then(a.mode.n.cmp(&b.mode.n)));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pearling_curve_matches_bifurcation_point() {
        let k = 2.0 * PI / 10.0;
        let a = pearl_neutral_lambda2(k * k, 0.0).unwrap();
        let b = bifurcation_point(1, 0, 10.0, 0.0, 1.0).unwrap();
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn pole_is_rejected() {
        assert!(pearl_neutral_lambda2(1.0 + 1e-9, 0.0).is_err());
        assert_eq!(pearl_neutral_lambda2(1.0, 0.5).unwrap(), 0.0);
    }
}
