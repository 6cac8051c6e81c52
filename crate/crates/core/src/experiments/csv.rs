use std::io::Write;
use std::path::Path;

use super::SweepRow;
use crate::average::SpectralPoint;
use crate::error::{Error, Result};

/// Column order of sweep tables.
pub const CSV_COLUMNS: [&str; 15] = [
    "x",
    "avg_t",
    "avg_r",
    "mean_dwell",
    "t_free",
    "p_t",
    "p_r",
    "err_avg_t",
    "err_avg_r",
    "err_mean_dwell",
    "err_p_t",
    "err_p_r",
    "unitarity_residual",
    "decomposition_residual",
    "status",
];

const UNITS: &str =
    "# units: atomic (hbar = mu = 1); times in hbar/Hartree; x in bohr (a, d) or Hartree*bohr (gamma); err_* relative";

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Twelve significant digits.
fn num(v: f64) -> String {
    format!("{v:.11e}")
}

fn write_lines(path: &Path, lines: impl Iterator<Item = String>) -> Result<()> {
    let io = io_err(path);
    let file = std::fs::File::create(path).map_err(&io)?;
    let mut w = std::io::BufWriter::new(file);
    for line in lines {
        w.write_all(line.as_bytes()).map_err(&io)?;
        w.write_all(b"\n").map_err(&io)?;
    }
    w.flush().map_err(&io)
}

/// Write sweep rows: a units comment, the header, then one line per row.
pub fn emit_csv(rows: &[SweepRow], path: &Path) -> Result<()> {
    let header = [UNITS.to_string(), CSV_COLUMNS.join(",")];
    let body = rows.iter().map(|r| {
        let values = [
            r.x,
            r.avg_t,
            r.avg_r,
            r.mean_dwell,
            r.t_free,
            r.p_t,
            r.p_r,
            r.err_avg_t,
            r.err_avg_r,
            r.err_mean_dwell,
            r.err_p_t,
            r.err_p_r,
            r.unitarity_residual,
            r.decomposition_residual,
        ];
        let mut cells: Vec<String> = values.iter().map(|&v| num(v)).collect();
        cells.push(r.status.clone());
        cells.join(",")
    });
    write_lines(path, header.into_iter().chain(body))
}

/// Parse a file written by [`emit_csv`].
pub fn read_csv(path: &Path) -> Result<Vec<SweepRow>> {
    let bad = |msg: String| Error::InvalidSweep(format!("{}: {msg}", path.display()));
    let mut reader = ::csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_path(path)
        .map_err(|e| bad(e.to_string()))?;
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| bad(e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    if header != CSV_COLUMNS {
        return Err(bad(format!("unexpected header {header:?}")));
    }
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| bad(e.to_string()))?;
        let mut v = [0.0; 14];
        for (i, slot) in v.iter_mut().enumerate() {
            *slot = record[i]
                .parse()
                .map_err(|e| bad(format!("column {}: {e}", CSV_COLUMNS[i])))?;
        }
        rows.push(SweepRow {
            x: v[0],
            avg_t: v[1],
            avg_r: v[2],
            mean_dwell: v[3],
            t_free: v[4],
            p_t: v[5],
            p_r: v[6],
            err_avg_t: v[7],
            err_avg_r: v[8],
            err_mean_dwell: v[9],
            err_p_t: v[10],
            err_p_r: v[11],
            unitarity_residual: v[12],
            decomposition_residual: v[13],
            status: record[14].to_string(),
        });
    }
    Ok(rows)
}

/// Write spectral densities with columns `k,rho_inc,rho_t,rho_r`.
pub fn emit_spectrum_csv(points: &[SpectralPoint], path: &Path) -> Result<()> {
    let header = [
        "# units: atomic (hbar = mu = 1); k in 1/bohr; densities in bohr".to_string(),
        "k,rho_inc,rho_t,rho_r".to_string(),
    ];
    let body = points
        .iter()
        .map(|p| format!("{},{},{},{}", num(p.k), num(p.rho_inc), num(p.rho_t), num(p.rho_r)));
    write_lines(path, header.into_iter().chain(body))
}
