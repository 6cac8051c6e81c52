//! Post-selected averages over the packet's wave-number distribution.
//!
//! With `w(k) = |A(k)|^2 / 2pi` on the window `[k_lo, k_hi]`:
//!
//! ```text
//! P_T = int w |T|^2           <t_T> = int w |T|^2 t_T / P_T
//! P_R = int w |R|^2           <t_R> = int w |R|^2 t_R / P_R
//! mean dwell = int w tau_D
//! ```
//!
//! All six integrals share one adaptive Gauss-Kronrod partition. The clock
//! times inside the integrand are exact phase derivatives, so the integrand is
//! smooth to machine precision and the error estimates are meaningful.

use crate::clock::exact_clock_times;
use crate::error::{Error, Result};
use crate::model::{GaussianPacket, PhysicalParams, Potential, Shape};
use crate::quadrature::{integrate, Integral, QuadratureOptions};
use crate::resonance::find_resonances;
use crate::scatter::amplitudes;

/// Smallest wave number included in any average.
pub const K_FLOOR: f64 = 1e-6;

/// Initial uniform panels across the window, before resonance seeds.
const BASE_PANELS: usize = 8;

/// Absolute error floor, relative to the natural scale of each integral.
const FLOOR: f64 = 1e-22;

/// Above this initial overlap with the clock window the asymptotic picture is doubtful.
const LOCALIZATION_WARNING: f64 = 1e-9;

/// Relative quadrature error estimates of the reported quantities.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct AverageErrors {
    pub p_t: f64,
    pub p_r: f64,
    pub avg_t: f64,
    pub avg_r: f64,
    pub mean_dwell: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AverageTimes {
    /// Transmitted-ensemble average of the transmission clock time.
    pub avg_t: f64,
    /// Reflected-ensemble average of the reflection clock time; zero when `p_r` is at roundoff level.
    pub avg_r: f64,
    pub mean_dwell: f64,
    pub p_t: f64,
    pub p_r: f64,
    /// `mu L / (hbar k0)` for the clock-window length `L`.
    pub t_free: f64,
    /// Incident mass outside the integration window (including all `k <= 0`).
    pub excluded_mass: f64,
    pub errors: AverageErrors,
    pub k_range: (f64, f64),
    pub evaluations: usize,
}

impl AverageTimes {
    /// `|mean_dwell - (p_t avg_t + p_r avg_r)| / mean_dwell`.
    pub fn decomposition_residual(&self) -> f64 {
        (self.mean_dwell - (self.p_t * self.avg_t + self.p_r * self.avg_r)).abs() / self.mean_dwell
    }

    /// `|p_t + p_r - 1|`.
    pub fn unitarity_residual(&self) -> f64 {
        (self.p_t + self.p_r - 1.0).abs()
    }
}

/// `[max(K_FLOOR, k0 - W dk), k0 + W dk]` with `dk = 1 / (2 sigma)`.
pub fn integration_window(packet: &GaussianPacket, opts: &QuadratureOptions) -> (f64, f64) {
    let half = opts.window * packet.momentum_spread();
    ((packet.k0 - half).max(K_FLOOR), packet.k0 + half)
}

/// Initial panel boundaries: a uniform partition, plus `k_n` and `k_n +- 3 width`
/// for every double-delta resonance in the window when `resonance_split` is on.
pub fn breakpoints(
    potential: &Potential,
    params: &PhysicalParams,
    k_lo: f64,
    k_hi: f64,
    opts: &QuadratureOptions,
) -> Result<Vec<f64>> {
    let mut out: Vec<f64> = (0..=BASE_PANELS)
        .map(|i| k_lo + (k_hi - k_lo) * i as f64 / BASE_PANELS as f64)
        .collect();
    if let Shape::DoubleDelta { strength, separation } = *potential.shape() {
        if opts.resonance_split && strength > 0.0 {
            for r in find_resonances(strength, separation, params, k_lo, k_hi)? {
                for x in [r.k - 3.0 * r.width, r.k, r.k + 3.0 * r.width] {
                    if x > k_lo && x < k_hi {
                        out.push(x);
                    }
                }
            }
        }
    }
    out.sort_by(f64::total_cmp);
    out.dedup();
    out[0] = k_lo;
    *out.last_mut().unwrap() = k_hi;
    Ok(out)
}

fn check_localization(packet: &GaussianPacket, potential: &Potential) {
    let overlap = packet.probability_right_of(potential.clock_window().left);
    if overlap > LOCALIZATION_WARNING {
        log::warn!(
            "initial packet overlaps the clock window with probability {overlap:e}; averages assume it starts fully to the left"
        );
    }
}

fn ratio_error(num: (f64, f64), den: (f64, f64)) -> f64 {
    let rel = |(v, e): (f64, f64)| if v != 0.0 { e / v.abs() } else { 0.0 };
    rel(num) + rel(den)
}

fn raw_integrals(
    packet: &GaussianPacket,
    potential: &Potential,
    params: &PhysicalParams,
    opts: &QuadratureOptions,
) -> Result<(Integral<5>, (f64, f64), f64)> {
    opts.validate()?;
    check_localization(packet, potential);
    let (k_lo, k_hi) = integration_window(packet, opts);
    let breaks = breakpoints(potential, params, k_lo, k_hi, opts)?;
    let t_free = params.mu * potential.clock_window().length() / (params.hbar * packet.k0);
    let f = |k: f64| -> Result<[f64; 5]> {
        let w = packet.incident_density(k);
        let c = exact_clock_times(potential, params, k)?;
        let (wt, wr) = (w * c.prob_t, w * c.prob_r);
        Ok([wt, wt * c.t_t, wr, c.t_r.map_or(0.0, |t| wr * t), w * c.tau_d])
    };
    let floor = [FLOOR, FLOOR * t_free, FLOOR, FLOOR * t_free, FLOOR * t_free];
    let integral = integrate(f, &breaks, opts.rel_tol, floor, opts.max_depth)?;
    Ok((integral, (k_lo, k_hi), t_free))
}

/// Average clock times, channel probabilities and mean dwell time of `packet`.
pub fn averaged_times(
    packet: &GaussianPacket,
    potential: &Potential,
    params: &PhysicalParams,
    opts: &QuadratureOptions,
) -> Result<AverageTimes> {
    let (ig, k_range, t_free) = raw_integrals(packet, potential, params, opts)?;
    let [p_t, wt, p_r, wr, dwell] = ig.value;
    let e = ig.error;
    let avg_t = if p_t > FLOOR { wt / p_t } else { 0.0 };
    let avg_r = if p_r > FLOOR { wr / p_r } else { 0.0 };
    let rel = |v: f64, err: f64| if v != 0.0 { err / v.abs() } else { 0.0 };
    Ok(AverageTimes {
        avg_t,
        avg_r,
        mean_dwell: dwell,
        p_t,
        p_r,
        t_free,
        excluded_mass: packet.momentum_mass_outside(k_range.0, k_range.1),
        errors: AverageErrors {
            p_t: rel(p_t, e[0]),
            p_r: rel(p_r, e[2]),
            avg_t: ratio_error((wt, e[1]), (p_t, e[0])),
            avg_r: ratio_error((wr, e[3]), (p_r, e[2])),
            mean_dwell: rel(dwell, e[4]),
        },
        k_range,
        evaluations: ig.evaluations,
    })
}

/// `int dk/2pi |A|^2 tau_D` over the integration window.
pub fn mean_dwell(
    packet: &GaussianPacket,
    potential: &Potential,
    params: &PhysicalParams,
    opts: &QuadratureOptions,
) -> Result<f64> {
    opts.validate()?;
    check_localization(packet, potential);
    let (k_lo, k_hi) = integration_window(packet, opts);
    let breaks = breakpoints(potential, params, k_lo, k_hi, opts)?;
    let t_free = params.mu * potential.clock_window().length() / (params.hbar * packet.k0);
    let f = |k: f64| -> Result<[f64; 1]> {
        Ok([packet.incident_density(k) * crate::clock::dwell_time(potential, params, k)?])
    };
    Ok(integrate(f, &breaks, opts.rel_tol, [FLOOR * t_free], opts.max_depth)?.value[0])
}

/// Incident and post-selected wave-number densities at one `k`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpectralPoint {
    pub k: f64,
    /// `|A|^2 / 2pi`.
    pub rho_inc: f64,
    /// `|A T|^2 / (2pi P_T)`.
    pub rho_t: f64,
    /// `|A R|^2 / (2pi P_R)`; zero when `P_R` is at roundoff level.
    pub rho_r: f64,
}

/// Densities on `k_grid`, normalised by `P_T` and `P_R` over the integration window.
pub fn spectral_densities(
    packet: &GaussianPacket,
    potential: &Potential,
    params: &PhysicalParams,
    k_grid: &[f64],
    opts: &QuadratureOptions,
) -> Result<Vec<SpectralPoint>> {
    if k_grid.first().is_some_and(|&k| k <= 0.0) || k_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter {
            name: "k_grid",
            reason: "must be positive and strictly increasing".into(),
        });
    }
    opts.validate()?;
    let (k_lo, k_hi) = integration_window(packet, opts);
    let breaks = breakpoints(potential, params, k_lo, k_hi, opts)?;
    let probs = |k: f64| -> Result<[f64; 2]> {
        let s = amplitudes(potential, params, k, 0.0)?;
        let w = packet.incident_density(k);
        Ok([w * s.prob_t, w * s.prob_r])
    };
    let norm = integrate(probs, &breaks, opts.rel_tol, [FLOOR, FLOOR], opts.max_depth)?.value;
    k_grid
        .iter()
        .map(|&k| {
            let [wt, wr] = probs(k)?;
            Ok(SpectralPoint {
                k,
                rho_inc: packet.incident_density(k),
                rho_t: if norm[0] > FLOOR { wt / norm[0] } else { 0.0 },
                rho_r: if norm[1] > FLOOR { wr / norm[1] } else { 0.0 },
            })
        })
        .collect()
}
