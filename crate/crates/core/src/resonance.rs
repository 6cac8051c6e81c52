//! Transmission resonances of the double-delta barrier.
//!
//! `|T|^2 = 1` where `alpha sin(kd) + cos(kd) = 0`, `alpha = mu gamma / (hbar^2 k)`.
//! On branch `n` this is `g(k) = k d + atan(hbar^2 k / (mu gamma)) = n pi`; `g`
//! is strictly increasing and the arctangent lies in `(0, pi/2)`, so branch `n`
//! has exactly one root, inside `((n - 1/2) pi / d, n pi / d)`.

use std::f64::consts::PI;

use crate::error::{ensure_positive, Error, Result};
use crate::model::PhysicalParams;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Resonance {
    /// Branch index, `n >= 1`.
    pub n: u64,
    pub k: f64,
    /// Dwell time between the deltas at `k`.
    pub tau_d: f64,
    /// Half-width of the `|T|^2` peak, `sqrt(2 / |d^2|T|^2/dk^2|)`.
    pub width: f64,
}

fn branch_residual(gamma: f64, d: f64, params: &PhysicalParams, k: f64, n: u64) -> f64 {
    let ratio = params.hbar * params.hbar / (params.mu * gamma);
    k * d + (ratio * k).atan() - n as f64 * PI
}

/// Root of branch `n`, bisected until the bracket is below `1e-12 max(1, k)`.
pub fn branch_root(gamma: f64, d: f64, params: &PhysicalParams, n: u64) -> f64 {
    let mut lo = (n as f64 - 0.5) * PI / d;
    let mut hi = n as f64 * PI / d;
    loop {
        let mid = 0.5 * (lo + hi);
        if hi - lo < 1e-12 * mid.max(1.0) || mid <= lo || mid >= hi {
            return mid;
        }
        if branch_residual(gamma, d, params, mid, n) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
}

/// `sqrt(2 / |f''|)` for `f = |T|^2` at a root, from the exact curvature
/// `f'' = -8 alpha^2 B'^2`, `B = alpha sin(kd) + cos(kd)`.
fn peak_width(gamma: f64, d: f64, params: &PhysicalParams, k: f64) -> f64 {
    let alpha = params.mu * gamma / (params.hbar * params.hbar * k);
    let (sn, cs) = (k * d).sin_cos();
    let db = -alpha / k * sn + alpha * d * cs - d * sn;
    1.0 / (2.0 * (alpha * db).abs())
}

/// `(mu / hbar k^3) [2 mu gamma / hbar^2 + (2 mu^2 gamma^2 / hbar^4 + k^2) d]`.
pub fn resonant_dwell(k: f64, gamma: f64, d: f64, params: &PhysicalParams) -> f64 {
    let (hbar, mu) = (params.hbar, params.mu);
    let h2 = hbar * hbar;
    mu / (hbar * k.powi(3)) * (2.0 * mu * gamma / h2 + (2.0 * mu * mu * gamma * gamma / (h2 * h2) + k * k) * d)
}

/// All resonances with `k_min <= k <= k_max`, in increasing order.
pub fn find_resonances(gamma: f64, d: f64, params: &PhysicalParams, k_min: f64, k_max: f64) -> Result<Vec<Resonance>> {
    ensure_positive("gamma", gamma)?;
    ensure_positive("d", d)?;
    ensure_positive("k_min", k_min)?;
    if !(k_max.is_finite() && k_max > k_min) {
        return Err(Error::InvalidParameter {
            name: "k_max",
            reason: format!("must exceed k_min = {k_min}, got {k_max}"),
        });
    }
    // Branch n can only reach [k_min, k_max] if its bracket does.
    let first = ((k_min * d / PI).floor() as u64).max(1);
    let last = (k_max * d / PI + 0.5).ceil() as u64;
    let mut out = Vec::new();
    for n in first..=last {
        let k = branch_root(gamma, d, params, n);
        if k < k_min || k > k_max {
            continue;
        }
        out.push(Resonance {
            n,
            k,
            tau_d: resonant_dwell(k, gamma, d, params),
            width: peak_width(gamma, d, params, k),
        });
    }
    Ok(out)
}
