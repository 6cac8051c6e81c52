//! Physical parameters, barrier potentials and the Gaussian initial packet.

use std::f64::consts::{PI, SQRT_2};

use num_complex::Complex64;

use crate::error::{ensure_non_negative, ensure_positive, Error, Result};

/// Unit system: reduced Planck constant and particle mass.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhysicalParams {
    pub hbar: f64,
    pub mu: f64,
}

impl Default for PhysicalParams {
    /// Atomic units, `hbar = mu = 1`.
    fn default() -> Self {
        Self { hbar: 1.0, mu: 1.0 }
    }
}

impl PhysicalParams {
    pub fn new(hbar: f64, mu: f64) -> Result<Self> {
        ensure_positive("hbar", hbar)?;
        ensure_positive("mu", mu)?;
        Ok(Self { hbar, mu })
    }

    pub fn atomic() -> Self {
        Self::default()
    }

    /// Free-particle dispersion `E(k) = hbar^2 k^2 / (2 mu)`.
    pub fn dispersion_energy(&self, k: f64) -> f64 {
        self.hbar * self.hbar * k * k / (2.0 * self.mu)
    }

    /// `2 mu E / hbar^2`, the squared local wave number for kinetic energy `e`.
    pub fn kinetic_wavenumber_sq(&self, e: f64) -> f64 {
        2.0 * self.mu * e / (self.hbar * self.hbar)
    }

    /// Group velocity `hbar k / mu`.
    pub fn velocity(&self, k: f64) -> f64 {
        self.hbar * k / self.mu
    }
}

/// Constant-height piece `[start, end)` of a piecewise potential.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Segment {
    pub start: f64,
    pub end: f64,
    pub height: f64,
}

/// Point interaction `strength * delta(z - position)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DeltaBarrier {
    pub position: f64,
    pub strength: f64,
}

/// Region where the clock perturbation is switched on.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ClockWindow {
    pub left: f64,
    pub right: f64,
}

impl ClockWindow {
    pub fn new(left: f64, right: f64) -> Result<Self> {
        if !(left.is_finite() && right.is_finite() && right > left) {
            return Err(Error::InvalidParameter {
                name: "clock_window",
                reason: format!("need finite left < right, got [{left}, {right}]"),
            });
        }
        Ok(Self { left, right })
    }

    pub fn length(&self) -> f64 {
        self.right - self.left
    }

    pub fn contains(&self, z: f64) -> bool {
        z > self.left && z < self.right
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Shape {
    /// `V0` on `[0, a]`.
    Rectangular { height: f64, width: f64 },
    /// `gamma delta(z) + gamma delta(z - d)`.
    DoubleDelta { strength: f64, separation: f64 },
    Piecewise {
        segments: Vec<Segment>,
        deltas: Vec<DeltaBarrier>,
    },
}

/// A static one-dimensional potential together with its clock window.
///
/// The potential vanishes outside the union of its segments and deltas.
#[derive(Clone, Debug, PartialEq)]
pub struct Potential {
    shape: Shape,
    window: ClockWindow,
}

/// One piece of a potential as seen by the transfer-matrix engine.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Element {
    Slab { width: f64, height: f64 },
    Delta { strength: f64 },
}

/// Potential flattened into consecutive elements starting at `start`.
#[derive(Clone, Debug, PartialEq)]
pub struct Layout {
    pub start: f64,
    pub end: f64,
    pub elements: Vec<Element>,
}

impl Potential {
    /// Rectangular barrier of height `v0` on `[0, a]`. `v0 = 0` is accepted as the free limit.
    pub fn rectangular(v0: f64, a: f64) -> Result<Self> {
        ensure_non_negative("v0", v0)?;
        ensure_positive("a", a)?;
        Ok(Self {
            shape: Shape::Rectangular { height: v0, width: a },
            window: ClockWindow::new(0.0, a)?,
        })
    }

    /// Two equal deltas at `0` and `d`. `gamma = 0` is accepted as the free limit.
    pub fn double_delta(gamma: f64, d: f64) -> Result<Self> {
        ensure_non_negative("gamma", gamma)?;
        ensure_positive("d", d)?;
        Ok(Self {
            shape: Shape::DoubleDelta {
                strength: gamma,
                separation: d,
            },
            window: ClockWindow::new(0.0, d)?,
        })
    }

    pub fn piecewise(mut segments: Vec<Segment>, mut deltas: Vec<DeltaBarrier>, window: ClockWindow) -> Result<Self> {
        segments.sort_by(|a, b| a.start.total_cmp(&b.start));
        deltas.sort_by(|a, b| a.position.total_cmp(&b.position));
        for s in &segments {
            if !(s.start.is_finite() && s.end.is_finite() && s.height.is_finite() && s.end > s.start) {
                return Err(Error::InvalidParameter {
                    name: "segments",
                    reason: format!("bad segment {s:?}"),
                });
            }
        }
        for pair in segments.windows(2) {
            if pair[1].start < pair[0].end {
                return Err(Error::InvalidParameter {
                    name: "segments",
                    reason: format!("overlapping segments {:?} and {:?}", pair[0], pair[1]),
                });
            }
        }
        for d in &deltas {
            if !(d.position.is_finite() && d.strength.is_finite()) {
                return Err(Error::InvalidParameter {
                    name: "deltas",
                    reason: format!("bad delta {d:?}"),
                });
            }
        }
        Ok(Self {
            shape: Shape::Piecewise { segments, deltas },
            window,
        })
    }

    /// Zero potential with a clock window `[0, length]`.
    pub fn free(length: f64) -> Result<Self> {
        ensure_positive("length", length)?;
        Self::piecewise(Vec::new(), Vec::new(), ClockWindow::new(0.0, length)?)
    }

    pub fn with_clock_window(mut self, window: ClockWindow) -> Self {
        self.window = window;
        self
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn clock_window(&self) -> ClockWindow {
        self.window
    }

    fn segments_and_deltas(&self) -> (Vec<Segment>, Vec<DeltaBarrier>) {
        match &self.shape {
            Shape::Rectangular { height, width } => (
                vec![Segment {
                    start: 0.0,
                    end: *width,
                    height: *height,
                }],
                Vec::new(),
            ),
            Shape::DoubleDelta { strength, separation } => (
                Vec::new(),
                vec![
                    DeltaBarrier {
                        position: 0.0,
                        strength: *strength,
                    },
                    DeltaBarrier {
                        position: *separation,
                        strength: *strength,
                    },
                ],
            ),
            Shape::Piecewise { segments, deltas } => (segments.clone(), deltas.clone()),
        }
    }

    /// Value of the regular (non-delta) part of the potential at `z`.
    pub fn regular_value(&self, z: f64) -> f64 {
        let (segments, _) = self.segments_and_deltas();
        segments
            .iter()
            .filter(|s| z >= s.start && z < s.end)
            .map(|s| s.height)
            .sum()
    }

    pub fn deltas(&self) -> Vec<DeltaBarrier> {
        self.segments_and_deltas().1
    }

    pub fn segments(&self) -> Vec<Segment> {
        self.segments_and_deltas().0
    }

    /// Largest regular height, used to size finite-difference steps.
    pub fn max_height(&self) -> f64 {
        self.segments().iter().map(|s| s.height).fold(0.0, f64::max)
    }

    /// Flatten into slabs and deltas, adding `perturbation` over the clock window.
    pub fn layout(&self, perturbation: f64) -> Layout {
        self.marked_layout(perturbation).0
    }

    /// [`Potential::layout`] plus, per element, whether it lies in the clock window.
    pub(crate) fn marked_layout(&self, perturbation: f64) -> (Layout, Vec<bool>) {
        let (segments, deltas) = self.segments_and_deltas();
        let mut cuts: Vec<f64> = Vec::with_capacity(2 * segments.len() + deltas.len() + 2);
        for s in &segments {
            cuts.push(s.start);
            cuts.push(s.end);
        }
        cuts.extend(deltas.iter().map(|d| d.position));
        cuts.push(self.window.left);
        cuts.push(self.window.right);
        cuts.sort_by(f64::total_cmp);
        cuts.dedup();

        let mut elements = Vec::with_capacity(2 * cuts.len());
        let mut inside = Vec::with_capacity(2 * cuts.len());
        let mut di = 0;
        for (i, &z) in cuts.iter().enumerate() {
            while di < deltas.len() && deltas[di].position == z {
                if deltas[di].strength != 0.0 {
                    elements.push(Element::Delta {
                        strength: deltas[di].strength,
                    });
                    inside.push(false);
                }
                di += 1;
            }
            if let Some(&next) = cuts.get(i + 1) {
                let mid = 0.5 * (z + next);
                let mut height: f64 = segments
                    .iter()
                    .filter(|s| mid >= s.start && mid < s.end)
                    .map(|s| s.height)
                    .sum();
                let in_window = self.window.contains(mid);
                if in_window {
                    height += perturbation;
                }
                elements.push(Element::Slab {
                    width: next - z,
                    height,
                });
                inside.push(in_window);
            }
        }
        let layout = Layout {
            start: cuts[0],
            end: *cuts.last().unwrap(),
            elements,
        };
        (layout, inside)
    }

    /// True for the two built-in families, which are mirror-symmetric about their centre.
    pub fn is_symmetric(&self) -> bool {
        !matches!(self.shape, Shape::Piecewise { .. })
    }
}

/// Gaussian packet `Phi(z,0) = (2 pi)^{-1/4} sigma^{-1/2} exp(i k0 z - (z - z0)^2 / (4 sigma^2))`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GaussianPacket {
    pub k0: f64,
    pub sigma: f64,
    pub z0: f64,
}

/// Below this `k0 * sigma` the negative-k tail of `|A|^2` is no longer negligible.
pub const MIN_K0_SIGMA: f64 = 5.0;

impl GaussianPacket {
    pub fn new(k0: f64, sigma: f64, z0: f64) -> Result<Self> {
        ensure_positive("k0", k0)?;
        ensure_positive("sigma", sigma)?;
        if !(z0.is_finite() && z0 < 0.0) {
            return Err(Error::InvalidParameter {
                name: "z0",
                reason: format!("must be finite and < 0, got {z0}"),
            });
        }
        if k0 * sigma < MIN_K0_SIGMA {
            log::warn!(
                "k0*sigma = {} < {MIN_K0_SIGMA}: negative-k components are not negligible",
                k0 * sigma
            );
        }
        Ok(Self { k0, sigma, z0 })
    }

    /// Standard deviation of `|A(k)|^2`, `1 / (2 sigma)`.
    pub fn momentum_spread(&self) -> f64 {
        0.5 / self.sigma
    }

    /// `A(k) = (8 pi)^{1/4} sqrt(sigma) exp(-sigma^2 (k - k0)^2 - i (k - k0) z0)`.
    pub fn fourier_amplitude(&self, k: f64) -> Complex64 {
        let dk = k - self.k0;
        let modulus = (8.0 * PI).powf(0.25) * self.sigma.sqrt() * (-self.sigma * self.sigma * dk * dk).exp();
        Complex64::from_polar(modulus, -dk * self.z0)
    }

    /// `|A(k)|^2 / (2 pi)`, the incident wave-number density.
    pub fn incident_density(&self, k: f64) -> f64 {
        self.fourier_amplitude(k).norm_sqr() / (2.0 * PI)
    }

    pub fn wavefunction(&self, z: f64) -> Complex64 {
        let u = z - self.z0;
        let modulus = (2.0 * PI).powf(-0.25) / self.sigma.sqrt() * (-u * u / (4.0 * self.sigma * self.sigma)).exp();
        Complex64::from_polar(modulus, self.k0 * z)
    }

    /// Mass of `|Phi(z,0)|^2` on `z > 0`.
    pub fn initial_right_probability(&self) -> f64 {
        self.probability_right_of(0.0)
    }

    pub fn probability_right_of(&self, z: f64) -> f64 {
        0.5 * libm::erfc((z - self.z0) / (self.sigma * SQRT_2))
    }

    /// Mass of the incident density `|A|^2 / 2pi` lying outside `[k_lo, k_hi]`.
    pub fn momentum_mass_outside(&self, k_lo: f64, k_hi: f64) -> f64 {
        let s = self.momentum_spread() * SQRT_2;
        0.5 * libm::erfc((self.k0 - k_lo) / s) + 0.5 * libm::erfc((k_hi - self.k0) / s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fig1_packet() -> GaussianPacket {
        GaussianPacket::new(0.7, 10.0, -80.0).unwrap()
    }

    /// Trapezoidal Fourier transform of the position-space packet.
    fn trapezoid_ft(p: &GaussianPacket, k: f64) -> Complex64 {
        let half = 12.0 * p.sigma;
        let n = 24_000;
        let h = 2.0 * half / n as f64;
        (0..=n)
            .map(|i| {
                let z = p.z0 - half + i as f64 * h;
                let w = if i == 0 || i == n { 0.5 } else { 1.0 };
                p.wavefunction(z) * Complex64::from_polar(w * h, -k * z)
            })
            .sum()
    }

    #[test]
    fn dispersion_values() {
        let p = PhysicalParams::default();
        assert_eq!(p.dispersion_energy(0.0), 0.0);
        assert_eq!(p.dispersion_energy(1.0), 0.5);
        assert!((p.dispersion_energy(0.7) - 0.245).abs() < 1e-15);
    }

    #[test]
    fn amplitude_at_centre_is_real_and_peaked() {
        let p = fig1_packet();
        let a = p.fourier_amplitude(0.7);
        assert!((a.norm() - (8.0 * PI).powf(0.25) * 10f64.sqrt()).abs() < 1e-12);
        assert_eq!(a.arg(), 0.0);
    }

    #[test]
    fn amplitude_matches_numerical_fourier_transform() {
        let p = fig1_packet();
        let dk = 5.0 / p.sigma;
        for i in 0..=20 {
            let k = p.k0 - dk + 2.0 * dk * i as f64 / 20.0;
            let exact = p.fourier_amplitude(k);
            let numeric = trapezoid_ft(&p, k);
            let scale = exact.norm().max(1e-300);
            // The closed form decays to ~1e-22 of the peak at the window edges; compare
            // against the peak there since the oracle carries absolute roundoff.
            let peak = p.fourier_amplitude(p.k0).norm();
            assert!(
                (exact - numeric).norm() / scale < 1e-8 || (exact - numeric).norm() / peak < 1e-14,
                "k = {k}: {exact} vs {numeric}"
            );
        }
    }

    #[test]
    fn amplitude_is_normalised() {
        let p = GaussianPacket::new(1.2, 6.0, -48.0).unwrap();
        // Simpson on +-12 momentum std.
        let (lo, hi) = (p.k0 - 12.0 * p.momentum_spread(), p.k0 + 12.0 * p.momentum_spread());
        let n = 4000;
        let h = (hi - lo) / n as f64;
        let sum: f64 = (0..=n)
            .map(|i| {
                let w = if i == 0 || i == n {
                    1.0
                } else if i % 2 == 1 {
                    4.0
                } else {
                    2.0
                };
                w * p.incident_density(lo + i as f64 * h)
            })
            .sum::<f64>()
            * h
            / 3.0;
        assert!((sum - 1.0).abs() < 1e-10, "{sum}");
    }

    #[test]
    fn initial_right_probability_fig1() {
        let p = fig1_packet();
        let v = p.initial_right_probability();
        assert!(v < 1e-15);
        // 0.5 * erfc(8 / sqrt 2) at 40 digits.
        assert!((v - 6.220960574271784e-16).abs() / 6.22e-16 < 1e-10, "{v}");
        let far = GaussianPacket::new(0.7, 10.0, -1e4).unwrap();
        assert_eq!(far.initial_right_probability(), 0.0);
    }

    #[test]
    fn invalid_packets_rejected() {
        assert!(GaussianPacket::new(0.7, 10.0, 1.0).is_err());
        assert!(GaussianPacket::new(-0.7, 10.0, -1.0).is_err());
        assert!(GaussianPacket::new(0.7, 0.0, -1.0).is_err());
        assert!(PhysicalParams::new(0.0, 1.0).is_err());
    }

    #[test]
    fn layout_of_double_delta_with_perturbation() {
        let v = Potential::double_delta(16.0, 5.0).unwrap();
        let l = v.layout(0.01);
        assert_eq!(l.start, 0.0);
        assert_eq!(l.end, 5.0);
        assert_eq!(
            l.elements,
            vec![
                Element::Delta { strength: 16.0 },
                Element::Slab {
                    width: 5.0,
                    height: 0.01
                },
                Element::Delta { strength: 16.0 },
            ]
        );
    }

    #[test]
    fn layout_splits_at_window_edges() {
        let v = Potential::piecewise(
            vec![Segment {
                start: 0.0,
                end: 4.0,
                height: 1.0,
            }],
            vec![],
            ClockWindow::new(1.0, 6.0).unwrap(),
        )
        .unwrap();
        let l = v.layout(0.5);
        assert_eq!(
            l.elements,
            vec![
                Element::Slab {
                    width: 1.0,
                    height: 1.0
                },
                Element::Slab {
                    width: 3.0,
                    height: 1.5
                },
                Element::Slab {
                    width: 2.0,
                    height: 0.5
                },
            ]
        );
    }

    #[test]
    fn overlapping_segments_rejected() {
        let segs = vec![
            Segment {
                start: 0.0,
                end: 2.0,
                height: 1.0,
            },
            Segment {
                start: 1.0,
                end: 3.0,
                height: 1.0,
            },
        ];
        assert!(Potential::piecewise(segs, vec![], ClockWindow::new(0.0, 3.0).unwrap()).is_err());
    }

    proptest::proptest! {
        #[test]
        fn right_probability_monotone(z0 in -200.0f64..-1.0, sigma in 0.5f64..30.0) {
            let p = GaussianPacket::new(1.0, sigma, z0).unwrap();
            let further = GaussianPacket::new(1.0, sigma, z0 - 1.0).unwrap();
            let narrower = GaussianPacket::new(1.0, sigma * 0.9, z0).unwrap();
            proptest::prop_assert!(further.initial_right_probability() <= p.initial_right_probability());
            proptest::prop_assert!(narrower.initial_right_probability() <= p.initial_right_probability());
        }
    }
}
