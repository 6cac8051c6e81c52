//! Dispatch of a validated configuration to the library.

use std::fmt::Write as _;
use std::io::Write;
use std::path::PathBuf;

use tunnel_clock::average::averaged_times;
use tunnel_clock::clock::clock_times;
use tunnel_clock::experiments::{
    emit_csv, emit_plot, emit_spectrum_csv, emit_spectrum_plot, run_spectrum, run_sweep, PlotStyle,
};
use tunnel_clock::propagate::{evolve_with_snapshots, write_density_csv};
use tunnel_clock::resonance::find_resonances;
use tunnel_clock::{amplitudes, PhysicalParams};

use crate::config::{Job, RunConfig};

/// Provenance header: program, subcommand and every resolved parameter.
fn header(cfg: &RunConfig) -> String {
    let mut s = format!(
        "# tunnel-clock {} {}\n# units: atomic (hbar = mu = 1)\n",
        env!("CARGO_PKG_VERSION"),
        cfg.subcommand.name()
    );
    for (k, v) in &cfg.values {
        let _ = writeln!(s, "# {k} = {v}");
    }
    s
}

fn kv(out: &mut String, key: &str, value: impl std::fmt::Display) {
    let _ = writeln!(out, "{key}={value}");
}

fn num(v: f64) -> String {
    format!("{v:.12e}")
}

/// Execute `cfg`, writing results to `stdout`. Errors are one-line diagnostics.
pub fn run(cfg: &RunConfig, stdout: &mut dyn Write) -> Result<(), String> {
    if cfg.dump_config {
        return stdout
            .write_all(cfg.to_config_text().as_bytes())
            .map_err(|e| format!("cannot write output: {e}"));
    }
    let job = cfg.job().map_err(|e| e.to_string())?;
    let params = PhysicalParams::default();
    let mut out = header(cfg);
    let fail = |e: tunnel_clock::Error| e.to_string();
    match job {
        Job::Stationary { potential, k } => {
            let s = amplitudes(&potential, &params, k, 0.0).map_err(fail)?;
            let c = clock_times(&potential, &params, k).map_err(fail)?;
            kv(&mut out, "k", num(k));
            kv(&mut out, "t_re", num(s.t.re));
            kv(&mut out, "t_im", num(s.t.im));
            kv(&mut out, "r_re", num(s.r.re));
            kv(&mut out, "r_im", num(s.r.im));
            kv(&mut out, "prob_t", num(s.prob_t));
            kv(&mut out, "prob_r", num(s.prob_r));
            kv(&mut out, "phase_t", num(s.phase_t));
            kv(&mut out, "phase_r", num(s.phase_r));
            kv(&mut out, "tau_d", num(c.tau_d));
            kv(&mut out, "t_t", num(c.t_t));
            kv(&mut out, "t_r", c.t_r.map_or("undefined".into(), num));
            kv(&mut out, "truncation_error", num(c.truncation_error));
        }
        Job::Average {
            potential,
            packet,
            quadrature,
        } => {
            let a = averaged_times(&packet, &potential, &params, &quadrature).map_err(fail)?;
            kv(&mut out, "avg_t", num(a.avg_t));
            kv(&mut out, "avg_r", num(a.avg_r));
            kv(&mut out, "mean_dwell", num(a.mean_dwell));
            kv(&mut out, "t_free", num(a.t_free));
            kv(&mut out, "p_t", num(a.p_t));
            kv(&mut out, "p_r", num(a.p_r));
            kv(&mut out, "err_avg_t", num(a.errors.avg_t));
            kv(&mut out, "err_avg_r", num(a.errors.avg_r));
            kv(&mut out, "err_mean_dwell", num(a.errors.mean_dwell));
            kv(&mut out, "err_p_t", num(a.errors.p_t));
            kv(&mut out, "err_p_r", num(a.errors.p_r));
            kv(&mut out, "unitarity_residual", num(a.unitarity_residual()));
            kv(&mut out, "decomposition_residual", num(a.decomposition_residual()));
            kv(&mut out, "excluded_mass", num(a.excluded_mass));
            kv(&mut out, "k_min", num(a.k_range.0));
            kv(&mut out, "k_max", num(a.k_range.1));
            kv(&mut out, "evaluations", a.evaluations);
        }
        Job::Sweep {
            spec,
            out: csv,
            plot,
            plot_scale,
            log_y,
            title,
        } => {
            let rows = run_sweep(&spec).map_err(fail)?;
            emit_csv(&rows, &csv).map_err(fail)?;
            if let Some(path) = &plot {
                let style = PlotStyle {
                    title,
                    x_label: spec.kind.variable().into(),
                    log_y,
                    scale_others: plot_scale,
                    ..Default::default()
                };
                emit_plot(&rows, &style, path).map_err(fail)?;
            }
            let failed = rows.iter().filter(|r| !r.is_ok()).count();
            kv(&mut out, "rows", rows.len());
            kv(&mut out, "failed_rows", failed);
            kv(&mut out, "csv", csv.display());
            if let Some(path) = plot {
                kv(&mut out, "plot", path.display());
            }
        }
        Job::Spectrum {
            spec,
            out: csv,
            plot,
            title,
        } => {
            let points = run_spectrum(&spec).map_err(fail)?;
            emit_spectrum_csv(&points, &csv).map_err(fail)?;
            if let Some(path) = &plot {
                let style = PlotStyle {
                    title,
                    x_label: "k".into(),
                    y_label: "density".into(),
                    ..Default::default()
                };
                emit_spectrum_plot(&points, &style, path).map_err(fail)?;
            }
            kv(&mut out, "points", points.len());
            kv(&mut out, "csv", csv.display());
            if let Some(path) = plot {
                kv(&mut out, "plot", path.display());
            }
        }
        Job::Resonances { gamma, d, k_min, k_max } => {
            let res = find_resonances(gamma, d, &params, k_min, k_max).map_err(fail)?;
            kv(&mut out, "count", res.len());
            out.push_str("n,k,tau_d,width\n");
            for r in res {
                let _ = writeln!(out, "{},{},{},{}", r.n, num(r.k), num(r.tau_d), num(r.width));
            }
        }
        Job::Propagate {
            potential,
            packet,
            grid,
            dt,
            t_max,
            snapshot_times,
            snapshot_prefix,
        } => {
            let (report, snaps) =
                evolve_with_snapshots(&packet, &potential, &params, &grid, dt, t_max, &snapshot_times).map_err(fail)?;
            kv(&mut out, "p_t", num(report.p_t));
            kv(&mut out, "p_r", num(report.p_r));
            kv(&mut out, "p_inside", num(report.p_inside));
            kv(&mut out, "norm_drift", num(report.norm_drift));
            kv(&mut out, "final_time", num(report.final_time));
            kv(&mut out, "steps", report.steps);
            kv(&mut out, "max_boundary_density", num(report.max_boundary_density));
            if let Some(prefix) = snapshot_prefix {
                for (i, (time, density)) in snaps.iter().enumerate() {
                    let path = PathBuf::from(format!("{}_{i}.csv", prefix.display()));
                    write_density_csv(&path, density).map_err(fail)?;
                    kv(
                        &mut out,
                        &format!("snapshot_{i}"),
                        format!("{} t={}", path.display(), num(*time)),
                    );
                }
            }
        }
    }
    stdout
        .write_all(out.as_bytes())
        .map_err(|e| format!("cannot write output: {e}"))
}
