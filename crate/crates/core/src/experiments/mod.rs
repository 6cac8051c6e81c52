//! Parameter sweeps that regenerate the average-time figures, with CSV and
//! SVG output.

mod csv;
mod plot;

pub use self::csv::{emit_csv, emit_spectrum_csv, read_csv, CSV_COLUMNS};
pub use self::plot::{emit_plot, emit_spectrum_plot, PlotStyle};

use rayon::prelude::*;

use crate::average::{averaged_times, spectral_densities, AverageTimes, SpectralPoint};
use crate::error::{Error, Result};
use crate::model::{GaussianPacket, PhysicalParams, Potential};
use crate::quadrature::QuadratureOptions;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweepKind {
    /// Rectangular barrier width `a`.
    Width,
    /// Double-delta strength `gamma`.
    Gamma,
    /// Double-delta separation `d`.
    Separation,
    /// Wave number `k` of the spectral densities.
    Spectrum,
}

impl SweepKind {
    pub fn name(self) -> &'static str {
        match self {
            SweepKind::Width => "width",
            SweepKind::Gamma => "gamma",
            SweepKind::Separation => "separation",
            SweepKind::Spectrum => "spectrum",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "width" => Some(SweepKind::Width),
            "gamma" => Some(SweepKind::Gamma),
            "separation" => Some(SweepKind::Separation),
            "spectrum" => Some(SweepKind::Spectrum),
            _ => None,
        }
    }

    /// Name of the swept quantity in output headers.
    pub fn variable(self) -> &'static str {
        match self {
            SweepKind::Width => "a",
            SweepKind::Gamma => "gamma",
            SweepKind::Separation => "d",
            SweepKind::Spectrum => "k",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scale {
    Linear,
    Log,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Variable {
    pub start: f64,
    pub stop: f64,
    pub count: usize,
    pub scale: Scale,
}

impl Variable {
    /// Default grid for `kind`: 40 log points for gamma, 60 linear otherwise.
    pub fn default_for(kind: SweepKind, start: f64, stop: f64) -> Self {
        let (count, scale) = match kind {
            SweepKind::Gamma => (40, Scale::Log),
            _ => (60, Scale::Linear),
        };
        Self {
            start,
            stop,
            count,
            scale,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.count < 2 {
            return Err(Error::InvalidSweep(format!("count must be >= 2, got {}", self.count)));
        }
        if !(self.start.is_finite() && self.stop.is_finite() && self.start < self.stop) {
            return Err(Error::InvalidSweep(format!(
                "need start < stop, got {} and {}",
                self.start, self.stop
            )));
        }
        if self.scale == Scale::Log && self.start <= 0.0 {
            return Err(Error::InvalidSweep("log scale needs start > 0".into()));
        }
        Ok(())
    }

    pub fn values(&self) -> Vec<f64> {
        let last = (self.count - 1) as f64;
        (0..self.count)
            .map(|i| {
                let f = i as f64 / last;
                if i + 1 == self.count {
                    return self.stop;
                }
                match self.scale {
                    Scale::Linear => self.start + f * (self.stop - self.start),
                    Scale::Log => self.start * (self.stop / self.start).powf(f),
                }
            })
            .collect()
    }
}

/// Parameters held fixed during a sweep; the swept one is ignored.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FixedParams {
    pub v0: f64,
    pub a: f64,
    pub gamma: f64,
    pub d: f64,
    pub k0: f64,
    pub sigma: f64,
    pub z0: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepSpec {
    pub kind: SweepKind,
    pub fixed: FixedParams,
    pub variable: Variable,
    pub quadrature: QuadratureOptions,
    pub params: PhysicalParams,
    /// Worker threads for row evaluation; `None` uses all cores.
    pub workers: Option<usize>,
    /// Spectrum sweeps only: use the rectangular barrier instead of the double delta.
    pub rectangular_spectrum: bool,
}

impl SweepSpec {
    /// Average times against the barrier width: `V0 = 0.5`, `k0 = 0.7`, `sigma = 10`, `z0 = -80`.
    pub fn fig1() -> Self {
        Self::preset(
            SweepKind::Width,
            FixedParams {
                v0: 0.5,
                a: 10.0,
                gamma: 16.0,
                d: 5.0,
                k0: 0.7,
                sigma: 10.0,
                z0: -80.0,
            },
            Variable::default_for(SweepKind::Width, 1.0, 100.0),
        )
    }

    /// Transmission probability against gamma: `d = 5`, `k0 = 1.2`, `sigma = 6`, `z0 = -48`.
    pub fn fig3() -> Self {
        Self::preset(
            SweepKind::Gamma,
            FixedParams {
                v0: 0.5,
                a: 10.0,
                gamma: 16.0,
                d: 5.0,
                k0: 1.2,
                sigma: 6.0,
                z0: -48.0,
            },
            Variable::default_for(SweepKind::Gamma, 1.0, 64.0),
        )
    }

    /// Average times against the separation: `gamma = 16`, `k0 = 1.2`, `sigma = 20`, `z0 = -160`.
    pub fn fig4() -> Self {
        Self::preset(
            SweepKind::Separation,
            FixedParams {
                v0: 0.5,
                a: 10.0,
                gamma: 16.0,
                d: 5.0,
                k0: 1.2,
                sigma: 20.0,
                z0: -160.0,
            },
            Variable::default_for(SweepKind::Separation, 1.0, 200.0),
        )
    }

    /// Spectral densities: `gamma = 16`, `d = 50`, `k0 = 1.2`, `sigma = 6`, `z0 = -48`.
    pub fn fig2() -> Self {
        let mut spec = Self::fig3();
        spec.kind = SweepKind::Spectrum;
        spec.fixed.d = 50.0;
        spec.variable = Variable {
            start: 0.9,
            stop: 1.5,
            count: 601,
            scale: Scale::Linear,
        };
        spec
    }

    fn preset(kind: SweepKind, fixed: FixedParams, variable: Variable) -> Self {
        Self {
            kind,
            fixed,
            variable,
            quadrature: QuadratureOptions::default(),
            params: PhysicalParams::default(),
            workers: None,
            rectangular_spectrum: false,
        }
    }

    pub fn packet(&self) -> Result<GaussianPacket> {
        GaussianPacket::new(self.fixed.k0, self.fixed.sigma, self.fixed.z0)
    }

    /// Potential at swept value `x` (ignored for spectra).
    pub fn potential_at(&self, x: f64) -> Result<Potential> {
        let f = &self.fixed;
        match self.kind {
            SweepKind::Width => Potential::rectangular(f.v0, x),
            SweepKind::Gamma => Potential::double_delta(x, f.d),
            SweepKind::Separation => Potential::double_delta(f.gamma, x),
            SweepKind::Spectrum if self.rectangular_spectrum => Potential::rectangular(f.v0, f.a),
            SweepKind::Spectrum => Potential::double_delta(f.gamma, f.d),
        }
    }

    /// Check every input before any row is computed.
    pub fn validate(&self) -> Result<()> {
        self.variable.validate()?;
        self.quadrature.validate()?;
        self.packet()?;
        if self.workers == Some(0) {
            return Err(Error::InvalidSweep("workers must be >= 1".into()));
        }
        for x in [self.variable.start, self.variable.stop] {
            self.potential_at(x)?;
        }
        if self.kind == SweepKind::Spectrum && self.variable.start <= 0.0 {
            return Err(Error::InvalidSweep("spectrum needs k > 0".into()));
        }
        Ok(())
    }

    fn pool(&self) -> Result<rayon::ThreadPool> {
        let mut b = rayon::ThreadPoolBuilder::new();
        if let Some(w) = self.workers {
            b = b.num_threads(w);
        }
        b.build()
            .map_err(|e| Error::InvalidSweep(format!("cannot start worker pool: {e}")))
    }
}

/// One sweep point. Failed points carry NaN values and the error in `status`.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub x: f64,
    pub avg_t: f64,
    pub avg_r: f64,
    pub mean_dwell: f64,
    pub t_free: f64,
    pub p_t: f64,
    pub p_r: f64,
    pub err_avg_t: f64,
    pub err_avg_r: f64,
    pub err_mean_dwell: f64,
    pub err_p_t: f64,
    pub err_p_r: f64,
    /// `|p_t + p_r - 1|`.
    pub unitarity_residual: f64,
    /// `|mean_dwell - (p_t avg_t + p_r avg_r)| / mean_dwell`.
    pub decomposition_residual: f64,
    /// `"ok"` or the error message.
    pub status: String,
}

impl SweepRow {
    pub fn from_average(x: f64, a: &AverageTimes) -> Self {
        Self {
            x,
            avg_t: a.avg_t,
            avg_r: a.avg_r,
            mean_dwell: a.mean_dwell,
            t_free: a.t_free,
            p_t: a.p_t,
            p_r: a.p_r,
            err_avg_t: a.errors.avg_t,
            err_avg_r: a.errors.avg_r,
            err_mean_dwell: a.errors.mean_dwell,
            err_p_t: a.errors.p_t,
            err_p_r: a.errors.p_r,
            unitarity_residual: a.unitarity_residual(),
            decomposition_residual: a.decomposition_residual(),
            status: "ok".into(),
        }
    }

    pub fn failed(x: f64, err: &Error) -> Self {
        let nan = f64::NAN;
        Self {
            x,
            avg_t: nan,
            avg_r: nan,
            mean_dwell: nan,
            t_free: nan,
            p_t: nan,
            p_r: nan,
            err_avg_t: nan,
            err_avg_r: nan,
            err_mean_dwell: nan,
            err_p_t: nan,
            err_p_r: nan,
            unitarity_residual: nan,
            decomposition_residual: nan,
            status: err.to_string().replace([',', '\n'], ";"),
        }
    }

    pub fn is_ok(&self) -> bool {
        self.status == "ok"
    }
}

/// Evaluate every point of an average-time sweep, in parallel, ordered by `x`.
pub fn run_sweep(spec: &SweepSpec) -> Result<Vec<SweepRow>> {
    if spec.kind == SweepKind::Spectrum {
        return Err(Error::InvalidSweep(
            "spectrum sweeps produce densities; use run_spectrum".into(),
        ));
    }
    spec.validate()?;
    let packet = spec.packet()?;
    let xs = spec.variable.values();
    let row = |&x: &f64| {
        let out = spec
            .potential_at(x)
            .and_then(|v| averaged_times(&packet, &v, &spec.params, &spec.quadrature));
        match out {
            Ok(a) => SweepRow::from_average(x, &a),
            Err(e) => {
                log::warn!("sweep point {} = {x} failed: {e}", spec.kind.variable());
                SweepRow::failed(x, &e)
            }
        }
    };
    Ok(spec.pool()?.install(|| xs.par_iter().map(row).collect()))
}

/// Spectral densities on the sweep's `k` grid.
pub fn run_spectrum(spec: &SweepSpec) -> Result<Vec<SpectralPoint>> {
    if spec.kind != SweepKind::Spectrum {
        return Err(Error::InvalidSweep(format!(
            "{} is not a spectrum sweep",
            spec.kind.name()
        )));
    }
    spec.validate()?;
    let packet = spec.packet()?;
    let v = spec.potential_at(0.0)?;
    spectral_densities(&packet, &v, &spec.params, &spec.variable.values(), &spec.quadrature)
}

/// Least-squares line through `(x, y)`: `(slope, intercept, r_squared)`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len().min(y.len()) as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    let slope = sxy / sxx;
    let r2 = if syy > 0.0 { sxy * sxy / (sxx * syy) } else { 1.0 };
    (slope, my - slope * mx, r2)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grids() {
        let lin = Variable::default_for(SweepKind::Width, 1.0, 100.0);
        let v = lin.values();
        assert_eq!(v.len(), 60);
        assert_eq!(v[0], 1.0);
        assert_eq!(v[59], 100.0);
        let log = Variable::default_for(SweepKind::Gamma, 1.0, 64.0).values();
        assert_eq!(log.len(), 40);
        assert!((log[1] / log[0] - log[2] / log[1]).abs() < 1e-12);
        assert!(Variable { count: 1, ..lin }.validate().is_err());
        assert!(Variable {
            start: 5.0,
            stop: 1.0,
            ..lin
        }
        .validate()
        .is_err());
    }

    #[test]
    fn fit_of_exact_line() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let y = [3.0, 5.0, 7.0, 9.0];
        let (m, b, r2) = linear_fit(&x, &y);
        assert!((m - 2.0).abs() < 1e-14 && (b - 1.0).abs() < 1e-14 && (r2 - 1.0).abs() < 1e-14);
    }

    #[test]
    fn spec_validation() {
        let mut s = SweepSpec::fig1();
        s.fixed.sigma = -1.0;
        assert!(s.validate().is_err());
        let mut s = SweepSpec::fig3();
        s.workers = Some(0);
        assert!(run_sweep(&s).is_err());
        assert!(run_spectrum(&SweepSpec::fig1()).is_err());
        assert!(run_sweep(&SweepSpec::fig2()).is_err());
    }
}
