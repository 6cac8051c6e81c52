//! Stationary clock times from the perturbation derivative of the scattering
//! phases, and the analytic dwell times they are compared against.
//!
//! `t_T = -hbar d(arg T)/dV` at `V = 0`, where `V` is a constant potential
//! added over the clock window. The derivative is a central difference of the
//! phase of the amplitude ratio `T(+h) / T(-h)`, extrapolated once
//! (Richardson, steps `h` and `h/2`).

use num_complex::Complex64;

use crate::error::{ensure_positive, Result};
use crate::model::{Element, PhysicalParams, Potential, Shape};
use crate::quadrature;
use crate::scatter::{amplitudes, element_matrix, layout_amplitudes, perturbation_sensitivity, ScatteringResult};

/// Below this `|R|` the reflection phase is not defined numerically.
pub const REFLECTION_FLOOR: f64 = 1e-12;

/// Relative Richardson error above which a clock time is reported with a warning.
pub const TRUNCATION_WARNING: f64 = 1e-6;

/// Clock and dwell times at one wave number.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ClockTimes {
    pub k: f64,
    pub t_t: f64,
    /// `None` when `|R| <= REFLECTION_FLOOR`.
    pub t_r: Option<f64>,
    pub tau_d: f64,
    pub prob_t: f64,
    pub prob_r: f64,
    /// Richardson estimate of the relative truncation error of `t_t`.
    pub truncation_error: f64,
    /// `| |T(+h)| / |T(-h)| - 1 |`: how far the first-order phase-only picture is from exact.
    pub modulus_shift: f64,
}

/// Raw phase derivatives with their error estimates.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhaseDerivative {
    pub t_t: f64,
    pub t_r: Option<f64>,
    pub err_t: f64,
    pub err_r: f64,
    pub modulus_shift: f64,
    pub base: ScatteringResult,
}

/// Default perturbation step: `1e-6` of the smallest relevant energy gap,
/// rounded to a power of two so that `E +- step` carry no rounding.
pub fn default_step(potential: &Potential, params: &PhysicalParams, k: f64) -> f64 {
    let e = params.dispersion_energy(k);
    let gap = match potential.shape() {
        Shape::DoubleDelta { .. } => e,
        _ => {
            let window = potential.clock_window();
            potential
                .segments()
                .iter()
                .filter(|s| s.end > window.left && s.start < window.right)
                .map(|s| (s.height - e).abs())
                .fold(e, f64::min)
        }
    };
    // Exactly at a segment height the gap vanishes; T is analytic there.
    let raw = 1e-6 * gap.max(1e-3 * e);
    2f64.powi(raw.log2().round() as i32)
}

struct Central {
    t: f64,
    r: Option<f64>,
    shift: f64,
}

fn central(potential: &Potential, params: &PhysicalParams, k: f64, h: f64) -> Result<Central> {
    let plus = layout_amplitudes(&potential.layout(h), params, k)?;
    let minus = layout_amplitudes(&potential.layout(-h), params, k)?;
    let scale = -params.hbar / (2.0 * h);
    let reflects = plus.r.norm() > REFLECTION_FLOOR && minus.r.norm() > REFLECTION_FLOOR;
    Ok(Central {
        t: scale * (plus.t / minus.t).arg(),
        r: reflects.then(|| scale * (plus.r / minus.r).arg()),
        shift: (plus.t.norm() / minus.t.norm() - 1.0).abs(),
    })
}

fn richardson(fine: f64, coarse: f64) -> f64 {
    (4.0 * fine - coarse) / 3.0
}

fn warn_truncation(k: f64, value: f64, err: f64) {
    let rel = err / value.abs().max(f64::MIN_POSITIVE);
    if rel > TRUNCATION_WARNING {
        log::warn!("clock time at k = {k}: Richardson error estimate {rel:e} exceeds {TRUNCATION_WARNING:e}");
    }
}

/// One Richardson level from central differences at `step` and `step / 2`.
///
/// `err_*` is `|D(step/2) - D(step)| / 3`, the error estimate of the finer
/// difference, which bounds the extrapolated value.
pub fn phase_derivatives(potential: &Potential, params: &PhysicalParams, k: f64, step: f64) -> Result<PhaseDerivative> {
    ensure_positive("step", step)?;
    let base = amplitudes(potential, params, k, 0.0)?;
    let coarse = central(potential, params, k, step)?;
    let fine = central(potential, params, k, 0.5 * step)?;
    let t_t = richardson(fine.t, coarse.t);
    let err_t = (fine.t - coarse.t).abs() / 3.0;
    let (t_r, err_r) = match (fine.r, coarse.r, base.r.norm() > REFLECTION_FLOOR) {
        (Some(f), Some(c), true) => (Some(richardson(f, c)), (f - c).abs() / 3.0),
        _ => (None, 0.0),
    };
    warn_truncation(k, t_t, err_t);
    Ok(PhaseDerivative {
        t_t,
        t_r,
        err_t,
        err_r,
        modulus_shift: coarse.shift,
        base,
    })
}

/// Largest step tried by [`adaptive_phase_derivatives`], as a fraction of the energy.
const MAX_STEP_FRACTION: f64 = 0.05;

/// Richardson-extrapolated phase derivatives with the step chosen per `k`.
///
/// Starting from `step`, the step is doubled and the extrapolation repeated;
/// successive extrapolations differ by roundoff at small steps and by
/// truncation at large ones, and the pair with the smallest difference is
/// kept. Strong, low-energy barriers have clock times so short that the phase
/// shift at the default step is lost in roundoff; this recovers them without
/// giving up accuracy near narrow resonances.
pub fn adaptive_phase_derivatives(
    potential: &Potential,
    params: &PhysicalParams,
    k: f64,
    step: f64,
) -> Result<PhaseDerivative> {
    ensure_positive("step", step)?;
    let base = amplitudes(potential, params, k, 0.0)?;
    let e = params.dispersion_energy(k);
    let reflects = base.r.norm() > REFLECTION_FLOOR;

    let mut prev = central(potential, params, k, 0.5 * step)?;
    let mut h = step;
    let mut last_t: Option<f64> = None;
    let mut last_r: Option<f64> = None;
    let mut best_t = (f64::NAN, f64::INFINITY);
    let mut best_r: (Option<f64>, f64) = (None, f64::INFINITY);
    let mut shift = 0.0;
    for _ in 0..32 {
        let cur = central(potential, params, k, h)?;
        if last_t.is_none() {
            shift = cur.shift;
        }
        let rt = richardson(prev.t, cur.t);
        if let Some(lt) = last_t {
            let err = (rt - lt).abs();
            if err < best_t.1 {
                best_t = (lt, err);
            }
        }
        let rr = match (prev.r, cur.r) {
            (Some(f), Some(c)) if reflects => Some(richardson(f, c)),
            _ => None,
        };
        if let (Some(lr), Some(r)) = (last_r, rr) {
            let err = (r - lr).abs();
            if err < best_r.1 {
                best_r = (Some(lr), err);
            }
        }
        last_t = Some(rt);
        last_r = rr;

        let t_done = best_t.1 <= 1e-13 * best_t.0.abs() || best_t.1 * 1e3 < (rt - best_t.0).abs();
        let r_done = !reflects
            || rr.is_none()
            || best_r.1 <= 1e-13 * best_r.0.map_or(0.0, f64::abs)
            || best_r.0.is_some_and(|b| best_r.1 * 1e3 < (rr.unwrap() - b).abs());
        if (t_done && r_done) || 2.0 * h > MAX_STEP_FRACTION * e {
            break;
        }
        prev = cur;
        h *= 2.0;
    }
    if best_t.0.is_nan() {
        // Never got two extrapolations: fall back to the single level.
        return phase_derivatives(potential, params, k, step);
    }
    let (t_r, err_r) = if reflects && best_r.0.is_some() {
        best_r
    } else {
        (None, 0.0)
    };
    warn_truncation(k, best_t.0, best_t.1);
    Ok(PhaseDerivative {
        t_t: best_t.0,
        t_r,
        err_t: best_t.1,
        err_r,
        modulus_shift: shift,
        base,
    })
}

pub fn clock_time_transmission(potential: &Potential, params: &PhysicalParams, k: f64, step: f64) -> Result<f64> {
    Ok(phase_derivatives(potential, params, k, step)?.t_t)
}

/// Reflection clock time; `None` where `|R|` is below [`REFLECTION_FLOOR`].
pub fn clock_time_reflection(potential: &Potential, params: &PhysicalParams, k: f64, step: f64) -> Result<Option<f64>> {
    Ok(phase_derivatives(potential, params, k, step)?.t_r)
}

/// All stationary times at `k` with the default step.
pub fn clock_times(potential: &Potential, params: &PhysicalParams, k: f64) -> Result<ClockTimes> {
    let step = default_step(potential, params, k);
    let pd = adaptive_phase_derivatives(potential, params, k, step)?;
    Ok(ClockTimes {
        k,
        t_t: pd.t_t,
        t_r: pd.t_r,
        tau_d: dwell_time(potential, params, k)?,
        prob_t: pd.base.prob_t,
        prob_r: pd.base.prob_r,
        truncation_error: pd.err_t / pd.t_t.abs().max(f64::MIN_POSITIVE),
        modulus_shift: pd.modulus_shift,
    })
}

/// Stationary times with the phase derivatives taken exactly, by
/// differentiating the transfer-matrix product instead of differencing it.
///
/// Smooth in `k` to machine precision, which is what the wave-number
/// quadratures need; [`clock_times`] is the finite-difference counterpart.
pub fn exact_clock_times(potential: &Potential, params: &PhysicalParams, k: f64) -> Result<ClockTimes> {
    let s = perturbation_sensitivity(potential, params, k)?;
    let t_r = if s.base.r.norm() > REFLECTION_FLOOR {
        s.dln_r.map(|d| -params.hbar * d.im)
    } else {
        None
    };
    let step = default_step(potential, params, k);
    Ok(ClockTimes {
        k,
        t_t: -params.hbar * s.dln_t.im,
        t_r,
        tau_d: dwell_time(potential, params, k)?,
        prob_t: s.base.prob_t,
        prob_r: s.base.prob_r,
        truncation_error: 0.0,
        modulus_shift: 2.0 * step * s.dln_t.re.abs(),
    })
}

/// Dwell time in `[0, a]` for a rectangular barrier, both below and above the barrier top.
pub fn dwell_rectangular(v0: f64, a: f64, params: &PhysicalParams, k: f64) -> f64 {
    let (hbar, mu) = (params.hbar, params.mu);
    let e = params.dispersion_energy(k);
    // Signed q^2; negative above the barrier where q = i k1.
    let q_sq = params.kinetic_wavenumber_sq(v0 - e);
    let z = q_sq * a * a;
    let k_sq = k * k;
    if z.abs() < 1e-6 {
        // tanh(x)/x, sech^2(x) and their difference over x^2 as series in z = x^2.
        let t = 1.0 - z / 3.0 + 2.0 * z * z / 15.0 - 17.0 * z * z * z / 315.0;
        let s = 1.0 - z + 2.0 * z * z / 3.0 - 17.0 * z * z * z / 45.0;
        let u = 2.0 / 3.0 - 8.0 * z / 15.0 + 34.0 * z * z / 105.0 - 496.0 * z * z * z / 2835.0;
        let num = k_sq * a * a * u + t + s;
        let den = 4.0 * k_sq + (q_sq - k_sq).powi(2) * a * a * t * t;
        return 2.0 * mu * k * a / hbar * num / den;
    }
    if z > 0.0 {
        let q = q_sq.sqrt();
        let x = q * a;
        let th = x.tanh();
        let sech_sq = if x > 350.0 { 0.0 } else { 1.0 / x.cosh().powi(2) };
        let num = (k_sq + q_sq) * th + x * (q_sq - k_sq) * sech_sq;
        let den = 4.0 * q_sq * k_sq + (q_sq - k_sq).powi(2) * th * th;
        2.0 * mu * k / (hbar * q) * num / den
    } else {
        let k1_sq = -q_sq;
        let k1 = k1_sq.sqrt();
        let y = k1 * a;
        let (sn, cs) = y.sin_cos();
        let num = y * (k1_sq + k_sq) - (k_sq - k1_sq) * sn * cs;
        let den = 4.0 * k1_sq * k_sq * cs * cs + (k1_sq + k_sq).powi(2) * sn * sn;
        2.0 * mu * k / (hbar * k1) * num / den
    }
}

/// Dwell time between the two deltas of a double-delta barrier.
pub fn dwell_double_delta(gamma: f64, d: f64, params: &PhysicalParams, k: f64) -> f64 {
    let (hbar, mu) = (params.hbar, params.mu);
    let alpha = mu * gamma / (hbar * hbar * k);
    let kd = k * d;
    let (sn, cs) = kd.sin_cos();
    let num = (1.0 + 2.0 * alpha * alpha) * kd + 2.0 * alpha * sn * sn - alpha * alpha * (2.0 * kd).sin();
    let bracket = alpha * sn + cs;
    let den = 1.0 + 4.0 * alpha * alpha * bracket * bracket;
    mu / (hbar * k * k) * num / den
}

/// Dwell time in the clock window: closed forms for the two barrier families,
/// otherwise `(mu / hbar k) * integral of |psi|^2` over the window.
pub fn dwell_time(potential: &Potential, params: &PhysicalParams, k: f64) -> Result<f64> {
    let w = potential.clock_window();
    match *potential.shape() {
        Shape::Rectangular { height, width } if w.left == 0.0 && w.right == width => {
            Ok(dwell_rectangular(height, width, params, k))
        }
        Shape::DoubleDelta { strength, separation } if w.left == 0.0 && w.right == separation => {
            Ok(dwell_double_delta(strength, separation, params, k))
        }
        _ => dwell_time_numeric(potential, params, k),
    }
}

/// `(mu / hbar k) * integral over the clock window of |psi|^2` for unit incident amplitude.
///
/// The stationary state is built from the transmitted side, `psi = T e^{ikz}`,
/// and carried leftwards, the direction in which evanescent solutions grow.
pub fn dwell_time_numeric(potential: &Potential, params: &PhysicalParams, k: f64) -> Result<f64> {
    let layout = potential.layout(0.0);
    let s = layout_amplitudes(&layout, params, k)?;
    let energy = params.dispersion_energy(k);
    let window = potential.clock_window();
    let ik = Complex64::new(0.0, k);

    let state_at = |z: f64| -> [Complex64; 2] {
        let e = Complex64::from_polar(1.0, k * z);
        [s.t * e, ik * s.t * e]
    };
    let free_slab = |w: f64| Element::Slab { width: w, height: 0.0 };

    // Regions (left, right, element) covering the window, with the state at each right edge.
    let mut pieces: Vec<(f64, f64, Element)> = Vec::new();
    let mut z = layout.start;
    for el in &layout.elements {
        match *el {
            Element::Slab { width, .. } => {
                pieces.push((z, z + width, *el));
                z += width;
            }
            Element::Delta { .. } => pieces.push((z, z, *el)),
        }
    }
    if window.left < layout.start {
        pieces.insert(0, (window.left, layout.start, free_slab(layout.start - window.left)));
    }
    if window.right > layout.end {
        pieces.push((layout.end, window.right, free_slab(window.right - layout.end)));
    }

    let mut state = state_at(pieces.last().map_or(layout.end, |p| p.1));
    let mut total = 0.0;
    for &(left, right, el) in pieces.iter().rev() {
        match el {
            Element::Delta { strength } => {
                let g = params.kinetic_wavenumber_sq(strength);
                state = [state[0], state[1] - g * state[0]];
            }
            Element::Slab { height, .. } => {
                let back = |dz: f64| -> [Complex64; 2] {
                    let m = element_matrix(&Element::Slab { width: -dz, height }, params, energy);
                    let sc = m.log_scale.exp();
                    [
                        (state[0] * m.m[0][0] + state[1] * m.m[0][1]) * sc,
                        (state[0] * m.m[1][0] + state[1] * m.m[1][1]) * sc,
                    ]
                };
                let lo = left.max(window.left);
                let hi = right.min(window.right);
                if hi > lo {
                    let n = (((hi - lo) * k.max(1e-3)).ceil() as usize).clamp(1, 4096);
                    let breaks: Vec<f64> = (0..=n).map(|i| lo + (hi - lo) * i as f64 / n as f64).collect();
                    let r =
                        quadrature::integrate(|zz| Ok([back(right - zz)[0].norm_sqr()]), &breaks, 1e-12, [0.0], 40)?;
                    total += r.value[0];
                }
                state = back(right - left);
            }
        }
    }
    Ok(params.mu / (params.hbar * k) * total)
}

/// `|tau_D - (|T|^2 t_T + |R|^2 t_R)| / tau_D`; an undefined `t_R` contributes nothing.
pub fn weighted_relation_residual(potential: &Potential, params: &PhysicalParams, k: f64) -> Result<f64> {
    let c = clock_times(potential, params, k)?;
    let weighted = c.prob_t * c.t_t + c.t_r.map_or(0.0, |t| c.prob_r * t);
    Ok((c.tau_d - weighted).abs() / c.tau_d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ClockWindow, DeltaBarrier, Segment};

    fn au() -> PhysicalParams {
        PhysicalParams::default()
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    #[test]
    fn rectangular_clock_times_equal_dwell() {
        let v = Potential::rectangular(0.5, 10.0).unwrap();
        let c = clock_times(&v, &au(), 0.7).unwrap();
        let tau = dwell_rectangular(0.5, 10.0, &au(), 0.7);
        assert!(rel(c.t_t, tau) < 1e-6, "{} vs {tau}", c.t_t);
        assert!(rel(c.t_r.unwrap(), tau) < 1e-6);
        assert_eq!(c.tau_d, tau);
    }

    #[test]
    fn double_delta_clock_times_equal_dwell() {
        let v = Potential::double_delta(16.0, 5.0).unwrap();
        let c = clock_times(&v, &au(), 1.2).unwrap();
        let tau = dwell_double_delta(16.0, 5.0, &au(), 1.2);
        assert!(rel(c.t_t, tau) < 1e-6);
        assert!(rel(c.t_r.unwrap(), c.t_t) < 1e-6);
    }

    #[test]
    fn free_traversal_time() {
        let au = au();
        let free = Potential::rectangular(0.0, 10.0).unwrap();
        let c = clock_times(&free, &au, 0.7).unwrap();
        assert!(rel(c.t_t, 10.0 / 0.7) < 1e-9);
        assert!(rel(c.tau_d, 10.0 / 0.7) < 1e-12);
        assert!(c.t_r.is_none());
        assert!(weighted_relation_residual(&free, &au, 0.7).unwrap() < 1e-10);
        let free_dd = Potential::double_delta(0.0, 5.0).unwrap();
        assert!(rel(dwell_double_delta(0.0, 5.0, &au, 1.2), 5.0 / 1.2) < 1e-15);
        assert!(weighted_relation_residual(&free_dd, &au, 1.2).unwrap() < 1e-10);
    }

    #[test]
    fn weighted_relation_examples() {
        let au = au();
        let rect = Potential::rectangular(0.5, 10.0).unwrap();
        assert!(weighted_relation_residual(&rect, &au, 0.7).unwrap() < 1e-6);
        let dd = Potential::double_delta(16.0, 5.0).unwrap();
        assert!(weighted_relation_residual(&dd, &au, 1.2).unwrap() < 1e-6);
    }

    #[test]
    fn relation_on_k_grid() {
        let au = au();
        let rect = Potential::rectangular(0.5, 10.0).unwrap();
        let dd = Potential::double_delta(16.0, 5.0).unwrap();
        for i in 0..100 {
            let k = 0.05 + 1.95 * i as f64 / 99.0;
            assert!(
                weighted_relation_residual(&rect, &au, k).unwrap() < 1e-6,
                "rect k = {k}"
            );
            assert!(weighted_relation_residual(&dd, &au, k).unwrap() < 1e-6, "dd k = {k}");
        }
    }

    #[test]
    fn opaque_limit_of_rectangular_dwell() {
        let au = au();
        let (k, v0) = (0.7f64, 0.5);
        let q = (2.0 * v0 - k * k).sqrt();
        let limit = 2.0 * k / (q * (k * k + q * q));
        assert!(rel(dwell_rectangular(v0, 500.0, &au, k), limit) < 1e-8);
        let t200 = dwell_rectangular(v0, 200.0, &au, k);
        let t400 = dwell_rectangular(v0, 400.0, &au, k);
        assert!(rel(t200, t400) < 1e-10);
        assert!(dwell_rectangular(v0, 1e-9, &au, k) < 1e-8);
    }

    #[test]
    fn rectangular_dwell_monotone_then_saturating() {
        let au = au();
        let mut prev = 0.0;
        for i in 1..=20 {
            let t = dwell_rectangular(0.5, 0.1 * i as f64, &au, 0.7);
            assert!(t > prev);
            prev = t;
        }
    }

    #[test]
    fn rectangular_dwell_continuous_across_barrier_top() {
        let au = au();
        // E = V0 at k = 1; the series branch covers |k - 1| < ~5e-9 and the two
        // closed forms lie on either side. Equal spacings must give equal steps
        // up to curvature, which is ~1e-13 relative here.
        let tau = |k: f64| dwell_rectangular(0.5, 10.0, &au, k);
        for &h in &[2e-9, 3e-9, 4e-9, 6e-9, 1e-8, 1e-6, 1e-5] {
            let (lo, mid, hi) = (tau(1.0 - h), tau(1.0), tau(1.0 + h));
            let jump = ((hi - mid) - (mid - lo)).abs() / mid;
            assert!(jump < 1e-9 + 1e4 * h * h, "h = {h}: {lo} {mid} {hi}");
        }
        for &(a, b) in &[(1.0 - 4e-9, 1.0 - 6e-9), (1.0 + 4e-9, 1.0 + 6e-9)] {
            assert!(rel(tau(a), tau(b)) < 1e-7);
        }
        // Near the crossing the series and the closed forms agree with the clock.
        let v = Potential::rectangular(0.5, 10.0).unwrap();
        for &k in &[1.0 - 1e-5, 1.0, 1.0 + 1e-5, 1.0 + 1e-3, 1.2] {
            let t = clock_time_transmission(&v, &au, k, default_step(&v, &au, k)).unwrap();
            assert!(rel(t, dwell_rectangular(0.5, 10.0, &au, k)) < 1e-6, "k = {k}");
        }
    }

    #[test]
    fn numeric_dwell_matches_closed_forms() {
        let au = au();
        let rect = Potential::rectangular(0.5, 10.0).unwrap();
        let dd = Potential::double_delta(16.0, 5.0).unwrap();
        for &k in &[0.4, 0.7, 1.1, 1.6] {
            let n = dwell_time_numeric(&rect, &au, k).unwrap();
            assert!(rel(n, dwell_rectangular(0.5, 10.0, &au, k)) < 1e-9, "rect k = {k}");
            let n = dwell_time_numeric(&dd, &au, k).unwrap();
            assert!(rel(n, dwell_double_delta(16.0, 5.0, &au, k)) < 1e-9, "dd k = {k}");
        }
    }

    #[test]
    fn asymmetric_potential_satisfies_relation() {
        let au = au();
        let v = Potential::piecewise(
            vec![
                Segment {
                    start: 0.0,
                    end: 2.0,
                    height: 0.8,
                },
                Segment {
                    start: 3.0,
                    end: 4.5,
                    height: 0.3,
                },
            ],
            vec![DeltaBarrier {
                position: 2.5,
                strength: 0.7,
            }],
            ClockWindow::new(0.0, 4.5).unwrap(),
        )
        .unwrap();
        for &k in &[0.5, 0.9, 1.4] {
            let c = clock_times(&v, &au, k).unwrap();
            assert!(weighted_relation_residual(&v, &au, k).unwrap() < 1e-6);
            // t_T and t_R differ for an asymmetric barrier.
            assert!(rel(c.t_t, c.t_r.unwrap()) > 1e-4);
        }
    }

    #[test]
    fn resonant_dwell_formula() {
        let au = au();
        // First resonance of (16, 5): k d + atan(k / 16) = pi.
        let mut lo = 0.5 * std::f64::consts::PI / 5.0;
        let mut hi = std::f64::consts::PI / 5.0;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid * 5.0 + (mid / 16.0).atan() < std::f64::consts::PI {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let kn = 0.5 * (lo + hi);
        let expect = 1.0 / kn.powi(3) * (2.0 * 16.0 + (2.0 * 256.0 + kn * kn) * 5.0);
        assert!(rel(dwell_double_delta(16.0, 5.0, &au, kn), expect) < 1e-8);
    }

    #[test]
    fn off_resonance_dwell_scales_as_inverse_gamma_squared() {
        let au = au();
        let r = dwell_double_delta(512.0, 5.0, &au, 1.2) / dwell_double_delta(256.0, 5.0, &au, 1.2);
        assert!((r / 0.25 - 1.0).abs() < 0.05, "{r}");
    }

    #[test]
    fn richardson_convergence() {
        let au = au();
        let v = Potential::rectangular(0.5, 10.0).unwrap();
        let h = default_step(&v, &au, 0.7);
        let a = phase_derivatives(&v, &au, 0.7, h).unwrap();
        let b = phase_derivatives(&v, &au, 0.7, 0.5 * h).unwrap();
        assert!((a.t_t - b.t_t).abs() <= 4.0 * a.err_t.max(1e-12 * a.t_t));
        // Second-order behaviour with a coarse step where truncation dominates roundoff.
        let coarse = 1e-2;
        let d1 = (phase_derivatives(&v, &au, 0.7, coarse).unwrap().err_t * 3.0).abs();
        let d2 = (phase_derivatives(&v, &au, 0.7, 0.5 * coarse).unwrap().err_t * 3.0).abs();
        assert!((d1 / d2 - 4.0).abs() < 0.2, "{}", d1 / d2);
    }

    #[test]
    fn reflection_flag_at_resonance() {
        let au = au();
        let v = Potential::double_delta(0.0, 5.0).unwrap();
        let c = clock_times(&v, &au, 1.0).unwrap();
        assert!(c.t_r.is_none());
        assert!(rel(c.t_t, 5.0) < 1e-9);
    }

    #[test]
    fn bad_inputs() {
        let v = Potential::rectangular(0.5, 10.0).unwrap();
        assert!(clock_time_transmission(&v, &au(), 0.0, 1e-6).is_err());
        assert!(clock_time_transmission(&v, &au(), 0.7, 0.0).is_err());
    }

    #[test]
    fn exact_times_match_finite_differences() {
        let au = au();
        let asym = Potential::piecewise(
            vec![
                Segment {
                    start: 0.0,
                    end: 3.0,
                    height: 0.4,
                },
                Segment {
                    start: 3.0,
                    end: 7.0,
                    height: 0.9,
                },
            ],
            vec![DeltaBarrier {
                position: 7.0,
                strength: 2.0,
            }],
            ClockWindow::new(-1.0, 8.0).unwrap(),
        )
        .unwrap();
        let cases = [
            Potential::rectangular(0.5, 10.0).unwrap(),
            Potential::double_delta(16.0, 5.0).unwrap(),
            asym,
        ];
        for v in &cases {
            for i in 0..40 {
                let k = 0.1 + 0.05 * i as f64;
                let fd = clock_times(v, &au, k).unwrap();
                let ex = exact_clock_times(v, &au, k).unwrap();
                assert!(rel(fd.t_t, ex.t_t) < 1e-7, "{k}: {} {}", fd.t_t, ex.t_t);
                if let (Some(a), Some(b)) = (fd.t_r, ex.t_r) {
                    assert!(rel(a, b) < 1e-7, "{k}: {a} {b}");
                }
                let weighted = ex.prob_t * ex.t_t + ex.t_r.map_or(0.0, |t| ex.prob_r * t);
                assert!(rel(weighted, ex.tau_d) < 1e-9, "{k}: {weighted} {}", ex.tau_d);
            }
        }
    }

    #[test]
    fn exact_times_in_deep_opaque_barrier() {
        let au = au();
        let v = Potential::rectangular(0.5, 400.0).unwrap();
        let ex = exact_clock_times(&v, &au, 0.7).unwrap();
        let fd = clock_times(&v, &au, 0.7).unwrap();
        assert!(rel(ex.t_t, ex.tau_d) < 1e-9);
        assert!(rel(fd.t_t, ex.t_t) < 1e-7);
    }
}
