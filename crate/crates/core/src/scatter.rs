//! Stationary scattering amplitudes from a transfer-matrix engine.
//!
//! The engine propagates the state vector `(psi, psi')` through the flattened
//! potential with real 2x2 matrices. Evanescent slabs contribute factors
//! `cosh(qw)`, `sinh(qw)` that are split into an `e^{qw}` scale, carried in the
//! log domain, and an O(1) remainder, so arbitrarily opaque barriers neither
//! overflow nor lose the phase of `T`.
//!
//! The result is converted to the amplitude basis `(a, b)` of
//! `psi = a e^{ikz} + b e^{-ikz}` on either side, where `T = 1/M22` and
//! `R = -M21/M22`.

use std::ops::Mul;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::{Element, Layout, PhysicalParams, Potential};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Below this `|kappa w|` a slab is evaluated from its Taylor series.
const SERIES_THRESHOLD: f64 = 1e-3;

/// Amplitudes at one wave number.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScatteringResult {
    pub k: f64,
    pub t: Complex64,
    pub r: Complex64,
    pub phase_t: f64,
    pub phase_r: f64,
    pub prob_t: f64,
    pub prob_r: f64,
    /// `ln |T|^2`, finite even where `prob_t` underflows.
    pub ln_prob_t: f64,
}

/// Complex 2x2 matrix acting on `(right-going, left-going)` amplitudes, with an
/// overall factor `exp(log_scale)` kept out of the entries.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TransferMatrix {
    pub m: [[Complex64; 2]; 2],
    pub log_scale: f64,
}

impl TransferMatrix {
    pub fn identity() -> Self {
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        Self {
            m: [[one, zero], [zero, one]],
            log_scale: 0.0,
        }
    }

    pub fn determinant(&self) -> Complex64 {
        self.m[0][0] * self.m[1][1] - self.m[0][1] * self.m[1][0]
    }

    /// `ln |det|` including the carried scale.
    pub fn log_abs_determinant(&self) -> f64 {
        self.determinant().norm().ln() + 2.0 * self.log_scale
    }

    /// Re-express a matrix built around `z = 0` for an element located at `z0`.
    pub fn translated(&self, k: f64, z0: f64) -> Self {
        let e = Complex64::from_polar(1.0, 2.0 * k * z0);
        let mut out = *self;
        out.m[0][1] = self.m[0][1] / e;
        out.m[1][0] = self.m[1][0] * e;
        out
    }

    /// Left-incidence transmission amplitude.
    pub fn transmission(&self) -> Complex64 {
        (-self.log_scale).exp() / self.m[1][1]
    }

    pub fn reflection(&self) -> Complex64 {
        -self.m[1][0] / self.m[1][1]
    }
}

impl Mul for TransferMatrix {
    type Output = TransferMatrix;

    fn mul(self, rhs: TransferMatrix) -> TransferMatrix {
        let a = &self.m;
        let b = &rhs.m;
        let mut m = [[Complex64::new(0.0, 0.0); 2]; 2];
        for (i, row) in m.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = a[i][0] * b[0][j] + a[i][1] * b[1][j];
            }
        }
        TransferMatrix {
            m,
            log_scale: self.log_scale + rhs.log_scale,
        }
    }
}

/// Real state-vector propagator `exp(log_scale) * m`.
#[derive(Clone, Copy, Debug)]
pub(crate) struct StateMatrix {
    pub m: [[f64; 2]; 2],
    pub log_scale: f64,
}

impl StateMatrix {
    fn identity() -> Self {
        Self {
            m: [[1.0, 0.0], [0.0, 1.0]],
            log_scale: 0.0,
        }
    }

    /// `self` applied after `first`.
    fn after(&self, first: &StateMatrix) -> StateMatrix {
        let a = &self.m;
        let b = &first.m;
        let mut m = [[0.0; 2]; 2];
        for (i, row) in m.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = a[i][0] * b[0][j] + a[i][1] * b[1][j];
            }
        }
        let mut out = StateMatrix {
            m,
            log_scale: self.log_scale + first.log_scale,
        };
        out.renormalize();
        out
    }

    fn renormalize(&mut self) {
        let big = self.m.iter().flatten().fold(0.0f64, |acc, v| acc.max(v.abs()));
        if big > 1e100 || (big > 0.0 && big < 1e-100) {
            let (_, e) = libm::frexp(big);
            for v in self.m.iter_mut().flatten() {
                *v = libm::ldexp(*v, -e);
            }
            self.log_scale += e as f64 * std::f64::consts::LN_2;
        }
    }

    #[allow(dead_code)]
    pub(crate) fn apply(&self, state: [f64; 2]) -> [f64; 2] {
        [
            self.m[0][0] * state[0] + self.m[0][1] * state[1],
            self.m[1][0] * state[0] + self.m[1][1] * state[1],
        ]
    }
}

/// `cos(y)` and `sin(y)/y` as functions of the signed square `s = y^2`
/// (hyperbolic for `s < 0`), with the series used near `s = 0`.
///
/// Returns the pair divided by `exp(shift)` together with `shift`, so that the
/// growing hyperbolic branch stays O(1).
pub(crate) fn cos_sinc(s: f64) -> (f64, f64, f64) {
    if s.abs() < SERIES_THRESHOLD * SERIES_THRESHOLD {
        let c = 1.0 - s / 2.0 + s * s / 24.0 - s * s * s / 720.0;
        let sc = 1.0 - s / 6.0 + s * s / 120.0 - s * s * s / 5040.0;
        (c, sc, 0.0)
    } else if s > 0.0 {
        let y = s.sqrt();
        (y.cos(), y.sin() / y, 0.0)
    } else {
        let x = (-s).sqrt();
        if x < 1.0 {
            (x.cosh(), x.sinh() / x, 0.0)
        } else {
            let d = (-2.0 * x).exp();
            (0.5 * (1.0 + d), 0.5 * (1.0 - d) / x, x)
        }
    }
}

/// Propagator for a slab of width `w` with squared local wave number `kappa_sq`.
pub(crate) fn slab_matrix(kappa_sq: f64, w: f64) -> StateMatrix {
    let (c, sc, shift) = cos_sinc(kappa_sq * w * w);
    StateMatrix {
        m: [[c, w * sc], [-kappa_sq * w * sc, c]],
        log_scale: shift,
    }
}

pub(crate) fn element_matrix(element: &Element, params: &PhysicalParams, energy: f64) -> StateMatrix {
    match *element {
        Element::Slab { width, height } => slab_matrix(params.kinetic_wavenumber_sq(energy - height), width),
        Element::Delta { strength } => StateMatrix {
            m: [[1.0, 0.0], [params.kinetic_wavenumber_sq(strength), 1.0]],
            log_scale: 0.0,
        },
    }
}

pub(crate) fn state_propagator(layout: &Layout, params: &PhysicalParams, k: f64) -> StateMatrix {
    let energy = params.dispersion_energy(k);
    layout.elements.iter().fold(StateMatrix::identity(), |acc, el| {
        element_matrix(el, params, energy).after(&acc)
    })
}

fn check_k(k: f64) -> Result<()> {
    if k.is_finite() && k > 0.0 {
        Ok(())
    } else {
        Err(Error::NonPositiveWaveNumber(k))
    }
}

/// `W(zr)^{-1} P W(zl)` with `W(z) = [[e^{ikz}, e^{-ikz}], [ik e^{ikz}, -ik e^{-ikz}]]`.
fn to_amplitude_basis(p: &[[f64; 2]; 2], zl: f64, zr: f64, k: f64) -> [[Complex64; 2]; 2] {
    let ik = I * k;
    let el = Complex64::from_polar(1.0, k * zl);
    let er = Complex64::from_polar(1.0, k * zr);
    let w_l = [[el, el.inv()], [ik * el, -ik * el.inv()]];
    let mut pw = [[Complex64::new(0.0, 0.0); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            pw[i][j] = p[i][0] * w_l[0][j] + p[i][1] * w_l[1][j];
        }
    }
    let winv_r = [[0.5 / er, 0.5 / (er * ik)], [0.5 * er, -0.5 * er / ik]];
    let mut m = [[Complex64::new(0.0, 0.0); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            m[i][j] = winv_r[i][0] * pw[0][j] + winv_r[i][1] * pw[1][j];
        }
    }
    m
}

/// Amplitude-basis transfer matrix from `layout.start` to `layout.end`.
fn amplitude_matrix(layout: &Layout, params: &PhysicalParams, k: f64) -> TransferMatrix {
    let p = state_propagator(layout, params, k);
    TransferMatrix {
        m: to_amplitude_basis(&p.m, layout.start, layout.end, k),
        log_scale: p.log_scale,
    }
}

/// Full transfer matrix of `potential` (clock perturbation included) at wave number `k`.
pub fn transfer_matrix(
    potential: &Potential,
    params: &PhysicalParams,
    k: f64,
    perturbation: f64,
) -> Result<TransferMatrix> {
    check_k(k)?;
    Ok(amplitude_matrix(&potential.layout(perturbation), params, k))
}

pub(crate) fn layout_amplitudes(layout: &Layout, params: &PhysicalParams, k: f64) -> Result<ScatteringResult> {
    result_from_matrix(&amplitude_matrix(layout, params, k), k)
}

fn result_from_matrix(tm: &TransferMatrix, k: f64) -> Result<ScatteringResult> {
    let m22 = tm.m[1][1];
    if !(m22.norm().is_finite() && m22.norm() > 0.0 && tm.log_scale.is_finite()) {
        return Err(Error::SingularTransfer { k, m22: m22.norm() });
    }
    let t = tm.transmission();
    let r = tm.reflection();
    let ln_prob_t = -2.0 * tm.log_scale - m22.norm_sqr().ln();
    let prob_t = (-2.0 * tm.log_scale).exp() / m22.norm_sqr();
    Ok(ScatteringResult {
        k,
        t,
        r,
        phase_t: -m22.arg(),
        phase_r: r.arg(),
        prob_t,
        prob_r: r.norm_sqr(),
        ln_prob_t,
    })
}

/// Stationary amplitudes for left incidence with `perturbation` added over the clock window.
pub fn amplitudes(
    potential: &Potential,
    params: &PhysicalParams,
    k: f64,
    perturbation: f64,
) -> Result<ScatteringResult> {
    check_k(k)?;
    if perturbation != 0.0 {
        let e = params.dispersion_energy(k);
        let gap = (e - potential.max_height()).abs();
        let scale = if gap > 0.0 { e.min(gap) } else { e };
        if perturbation.abs() > 1e-2 * scale {
            log::warn!(
                "clock perturbation {perturbation:e} is not small against the energy scale {scale:e} at k = {k}"
            );
        }
    }
    layout_amplitudes(&potential.layout(perturbation), params, k)
}

/// Amplitudes for incidence from the right, `psi = e^{-ikz} + R' e^{ikz}` beyond
/// the potential, obtained by running the engine on the mirrored layout.
pub fn amplitudes_from_right(
    potential: &Potential,
    params: &PhysicalParams,
    k: f64,
    perturbation: f64,
) -> Result<ScatteringResult> {
    check_k(k)?;
    let layout = potential.layout(perturbation);
    let mirrored = Layout {
        start: -layout.end,
        end: -layout.start,
        elements: layout.elements.iter().rev().copied().collect(),
    };
    layout_amplitudes(&mirrored, params, k)
}

/// First-order response of the amplitudes to the clock perturbation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhaseSensitivity {
    pub base: ScatteringResult,
    /// `d ln T / dV` at `V = 0`.
    pub dln_t: Complex64,
    /// `d ln R / dV`; `None` when `R` vanishes.
    pub dln_r: Option<Complex64>,
}

/// Derivatives of `cos y` and `sin y / y` with respect to `s = y^2`, on the scale of [`cos_sinc`].
fn cos_sinc_derivative(s: f64, c: f64, sc: f64) -> (f64, f64) {
    let dsc = if s.abs() < 1e-2 {
        -1.0 / 6.0 + s / 60.0 - s * s / 1680.0 + s * s * s / 90720.0
    } else {
        (c - sc) / (2.0 * s)
    };
    (-0.5 * sc, dsc)
}

fn mat_mul(a: &[[f64; 2]; 2], b: &[[f64; 2]; 2]) -> [[f64; 2]; 2] {
    let mut m = [[0.0; 2]; 2];
    for (i, row) in m.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    m
}

/// Exact `d ln T / dV` and `d ln R / dV` for a constant `V` added over the
/// clock window, by forward-mode differentiation of the slab product.
pub fn perturbation_sensitivity(potential: &Potential, params: &PhysicalParams, k: f64) -> Result<PhaseSensitivity> {
    check_k(k)?;
    let (layout, inside) = potential.marked_layout(0.0);
    let energy = params.dispersion_energy(k);
    let dkappa_sq = -2.0 * params.mu / (params.hbar * params.hbar);

    let mut p = [[1.0, 0.0], [0.0, 1.0]];
    let mut dp = [[0.0; 2]; 2];
    let mut log_scale = 0.0;
    for (el, &in_window) in layout.elements.iter().zip(&inside) {
        let m = element_matrix(el, params, energy);
        let next_dp = match *el {
            Element::Slab { width: w, height } if in_window => {
                let kappa_sq = params.kinetic_wavenumber_sq(energy - height);
                let s = kappa_sq * w * w;
                let (c, sc, _) = cos_sinc(s);
                let (dc, dsc) = cos_sinc_derivative(s, c, sc);
                let ds = dkappa_sq * w * w;
                let dm = [[dc * ds, w * dsc * ds], [-(sc + s * dsc) * w * dkappa_sq, dc * ds]];
                let a = mat_mul(&dm, &p);
                let b = mat_mul(&m.m, &dp);
                [
                    [a[0][0] + b[0][0], a[0][1] + b[0][1]],
                    [a[1][0] + b[1][0], a[1][1] + b[1][1]],
                ]
            }
            _ => mat_mul(&m.m, &dp),
        };
        p = mat_mul(&m.m, &p);
        dp = next_dp;
        log_scale += m.log_scale;
        let big = p
            .iter()
            .chain(dp.iter())
            .flatten()
            .fold(0.0f64, |acc, v| acc.max(v.abs()));
        if big > 1e100 || (big > 0.0 && big < 1e-100) {
            let (_, e) = libm::frexp(big);
            for v in p.iter_mut().chain(dp.iter_mut()).flatten() {
                *v = libm::ldexp(*v, -e);
            }
            log_scale += e as f64 * std::f64::consts::LN_2;
        }
    }
    let tm = TransferMatrix {
        m: to_amplitude_basis(&p, layout.start, layout.end, k),
        log_scale,
    };
    let dm = to_amplitude_basis(&dp, layout.start, layout.end, k);
    let base = result_from_matrix(&tm, k)?;
    let dln_m22 = dm[1][1] / tm.m[1][1];
    let m21 = tm.m[1][0];
    let dln_r = (m21.norm() > 0.0 && base.r.norm() > 0.0).then(|| dm[1][0] / m21 - dln_m22);
    Ok(PhaseSensitivity {
        base,
        dln_t: -dln_m22,
        dln_r,
    })
}

/// `1 / (1 + 4 alpha^2 (alpha sin kd + cos kd)^2)`, `alpha = mu gamma / (hbar^2 k)`.
pub fn closed_form_dd_prob_t(gamma: f64, d: f64, params: &PhysicalParams, k: f64) -> Result<f64> {
    check_k(k)?;
    let alpha = params.mu * gamma / (params.hbar * params.hbar * k);
    let bracket = alpha * (k * d).sin() + (k * d).cos();
    Ok(1.0 / (1.0 + 4.0 * alpha * alpha * bracket * bracket))
}

/// Matching matrix of a single delta of the given strength placed at the origin.
pub fn delta_matching_matrix(strength: f64, params: &PhysicalParams, k: f64) -> Result<TransferMatrix> {
    check_k(k)?;
    let beta = -I * (params.mu * strength / (params.hbar * params.hbar * k));
    let one = Complex64::new(1.0, 0.0);
    Ok(TransferMatrix {
        m: [[one + beta, beta], [-beta, one - beta]],
        log_scale: 0.0,
    })
}
