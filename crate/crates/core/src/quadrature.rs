//! Adaptive Gauss-Kronrod (7/15) quadrature for several integrands sharing panels.
//!
//! Each panel carries the Kronrod estimate and `|K - G|` per component. The
//! panel with the largest error relative to its component's running total is
//! bisected until every component meets its relative tolerance (or falls below
//! its absolute floor). Totals are always summed in left-to-right panel order.

use crate::error::{Error, Result};

#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_838_258_730,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];

#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

/// Gauss weights on the odd-indexed Kronrod nodes (and the centre).
#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// Options for the wave-number integrals.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadratureOptions {
    pub rel_tol: f64,
    /// Half-width of the k window in units of the packet's momentum spread.
    pub window: f64,
    pub max_depth: u32,
    /// Pre-seed panel boundaries at resonances (double delta only).
    pub resonance_split: bool,
}

impl Default for QuadratureOptions {
    fn default() -> Self {
        Self {
            rel_tol: 1e-9,
            window: 12.0,
            max_depth: 40,
            resonance_split: true,
        }
    }
}

impl QuadratureOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0 && self.rel_tol <= 1e-3) {
            return Err(Error::InvalidParameter {
                name: "rel_tol",
                reason: format!("must lie in (0, 1e-3], got {}", self.rel_tol),
            });
        }
        if !(self.window >= 6.0 && self.window.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "window",
                reason: format!("must be >= 6, got {}", self.window),
            });
        }
        if self.max_depth == 0 {
            return Err(Error::InvalidParameter {
                name: "max_depth",
                reason: "must be positive".into(),
            });
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Integral<const N: usize> {
    pub value: [f64; N],
    pub error: [f64; N],
    pub evaluations: usize,
    pub panels: usize,
}

impl<const N: usize> Integral<N> {
    /// Error estimate relative to the value, per component.
    pub fn relative_error(&self) -> [f64; N] {
        std::array::from_fn(|i| {
            if self.value[i] != 0.0 {
                self.error[i] / self.value[i].abs()
            } else {
                self.error[i]
            }
        })
    }
}

struct Panel<const N: usize> {
    a: f64,
    b: f64,
    depth: u32,
    value: [f64; N],
    error: [f64; N],
}

fn gauss_kronrod<const N: usize, F>(f: &F, a: f64, b: f64) -> Result<([f64; N], [f64; N])>
where
    F: Fn(f64) -> Result<[f64; N]>,
{
    let centre = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut kronrod = [0.0; N];
    let mut gauss = [0.0; N];
    let fc = f(centre)?;
    for i in 0..N {
        kronrod[i] = WGK[7] * fc[i];
        gauss[i] = WG[3] * fc[i];
    }
    for j in 0..7 {
        let dx = half * XGK[j];
        let f1 = f(centre - dx)?;
        let f2 = f(centre + dx)?;
        for i in 0..N {
            let s = f1[i] + f2[i];
            kronrod[i] += WGK[j] * s;
            if j % 2 == 1 {
                gauss[i] += WG[j / 2] * s;
            }
        }
    }
    let mut err = [0.0; N];
    for i in 0..N {
        kronrod[i] *= half;
        gauss[i] *= half;
        err[i] = (kronrod[i] - gauss[i]).abs();
    }
    Ok((kronrod, err))
}

const MAX_PANELS: usize = 200_000;

/// Integrate `f` over `[breaks[0], breaks.last()]`, starting from the panels
/// delimited by `breaks` (sorted, deduplicated by the caller or here).
pub fn integrate<const N: usize, F>(
    f: F,
    breaks: &[f64],
    rel_tol: f64,
    abs_floor: [f64; N],
    max_depth: u32,
) -> Result<Integral<N>>
where
    F: Fn(f64) -> Result<[f64; N]>,
{
    let mut cuts: Vec<f64> = breaks.iter().copied().filter(|x| x.is_finite()).collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    if cuts.len() < 2 {
        return Err(Error::InvalidParameter {
            name: "breaks",
            reason: "need at least two distinct finite points".into(),
        });
    }

    let mut panels: Vec<Panel<N>> = Vec::with_capacity(4 * cuts.len());
    for w in cuts.windows(2) {
        let (value, error) = gauss_kronrod(&f, w[0], w[1])?;
        panels.push(Panel {
            a: w[0],
            b: w[1],
            depth: 0,
            value,
            error,
        });
    }
    let mut evaluations = 15 * panels.len();

    loop {
        let mut total = [0.0; N];
        let mut err = [0.0; N];
        for p in &panels {
            for i in 0..N {
                total[i] += p.value[i];
                err[i] += p.error[i];
            }
        }
        let target: [f64; N] = std::array::from_fn(|i| (rel_tol * total[i].abs()).max(abs_floor[i]));
        if (0..N).all(|i| err[i] <= target[i]) {
            return Ok(Integral {
                value: total,
                error: err,
                evaluations,
                panels: panels.len(),
            });
        }

        // Worst panel, measured against each component's own target.
        let mut worst = 0;
        let mut worst_score = -1.0;
        for (idx, p) in panels.iter().enumerate() {
            let score = (0..N)
                .filter(|&i| err[i] > target[i])
                .map(|i| p.error[i] / target[i].max(f64::MIN_POSITIVE))
                .fold(0.0, f64::max);
            if score > worst_score {
                worst_score = score;
                worst = idx;
            }
        }
        let achieved = (0..N)
            .map(|i| err[i] / total[i].abs().max(f64::MIN_POSITIVE))
            .fold(0.0, f64::max);
        let p = &panels[worst];
        if p.depth >= max_depth || panels.len() >= MAX_PANELS {
            return Err(Error::QuadratureNotConverged {
                rel_tol,
                max_depth,
                achieved,
            });
        }
        let (a, b, depth) = (p.a, p.b, p.depth + 1);
        let mid = 0.5 * (a + b);
        let (lv, le) = gauss_kronrod(&f, a, mid)?;
        let (rv, re) = gauss_kronrod(&f, mid, b)?;
        evaluations += 30;
        panels[worst] = Panel {
            a,
            b: mid,
            depth,
            value: lv,
            error: le,
        };
        panels.insert(
            worst + 1,
            Panel {
                a: mid,
                b,
                depth,
                value: rv,
                error: re,
            },
        );
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_is_exact_on_one_panel() {
        let r = integrate(|x| Ok([x.powi(5) - 2.0 * x * x + 1.0]), &[0.0, 2.0], 1e-12, [0.0], 5).unwrap();
        let exact = 64.0 / 6.0 - 16.0 / 3.0 + 2.0;
        assert!((r.value[0] - exact).abs() < 1e-13);
        assert_eq!(r.panels, 1);
    }

    #[test]
    fn narrow_lorentzian_with_seed() {
        let w: f64 = 1e-6;
        let f = |x: f64| Ok([w / ((x - 0.3).powi(2) + w * w), 1.0]);
        let exact = (0.7 / w).atan() + (0.3 / w).atan();
        let r = integrate(f, &[0.0, 0.3, 1.0], 1e-10, [0.0, 0.0], 60).unwrap();
        assert!((r.value[0] - exact).abs() / exact < 1e-9, "{}", r.value[0]);
        assert!((r.value[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn components_converge_independently() {
        // Second component is 1e-20 times smaller and much more oscillatory.
        let f = |x: f64| Ok([x.exp(), 1e-20 * (40.0 * x).cos()]);
        let r = integrate(f, &[0.0, 1.0], 1e-10, [0.0, 0.0], 40).unwrap();
        assert!((r.value[0] - (1f64.exp() - 1.0)).abs() < 1e-12);
        let exact = 1e-20 * (40f64).sin() / 40.0;
        assert!((r.value[1] - exact).abs() / exact.abs() < 1e-9);
    }

    #[test]
    fn depth_exhaustion_is_an_error() {
        let f = |x: f64| Ok([if x < 0.123_456_789 { 0.0 } else { 1.0 }]);
        let err = integrate(f, &[0.0, 1.0], 1e-15, [0.0], 3).unwrap_err();
        assert!(matches!(err, Error::QuadratureNotConverged { .. }));
    }

    #[test]
    fn options_validation() {
        assert!(QuadratureOptions::default().validate().is_ok());
        let bad = QuadratureOptions {
            rel_tol: 0.1,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let narrow = QuadratureOptions {
            window: 4.0,
            ..Default::default()
        };
        assert!(narrow.validate().is_err());
    }
}
