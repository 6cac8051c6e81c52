//! Crank-Nicolson propagation of the initial packet on a uniform grid.
//!
//! `(1 + i dt H / 2hbar) psi(t + dt) = (1 - i dt H / 2hbar) psi(t)` with the
//! three-point Laplacian and hard walls. The left-hand tridiagonal matrix is
//! factorised once. A delta of strength `gamma` becomes a potential `gamma / dz`
//! on its nearest node, which on the lattice is exactly a derivative jump of
//! `2 mu (gamma - E dz) / hbar^2`.

use std::io::Write;
use std::path::Path;

use num_complex::Complex64;

use crate::error::{ensure_positive, Error, Result};
use crate::model::{GaussianPacket, PhysicalParams, Potential};

/// Smallest admissible grid.
pub const MIN_POINTS: usize = 1 << 10;

/// `dz * k_max` must stay below this.
pub const RESOLUTION_LIMIT: f64 = 0.1;

/// Largest `dt * E_max / hbar`.
pub const TIME_STEP_LIMIT: f64 = 0.5;

/// Boundary-node density above which the hard walls are felt.
pub const BOUNDARY_DENSITY_LIMIT: f64 = 1e-10;

/// Largest mass left inside the clock window at the final time.
pub const INSIDE_LIMIT: f64 = 1e-3;

/// Initial packet mass allowed outside the grid.
pub const CONTAINMENT_LIMIT: f64 = 1e-12;

/// Significant wave numbers reach `k0 + SIGNIFICANT_SPREADS / (2 sigma)`.
const SIGNIFICANT_SPREADS: f64 = 6.0;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid1D {
    pub z_min: f64,
    pub z_max: f64,
    pub n_points: usize,
}

impl Grid1D {
    pub fn new(z_min: f64, z_max: f64, n_points: usize) -> Result<Self> {
        if !(z_min.is_finite() && z_max.is_finite() && z_max > z_min) {
            return Err(Error::InvalidParameter {
                name: "grid",
                reason: format!("need finite z_min < z_max, got [{z_min}, {z_max}]"),
            });
        }
        if n_points < MIN_POINTS {
            return Err(Error::InvalidParameter {
                name: "n_points",
                reason: format!("need at least {MIN_POINTS}, got {n_points}"),
            });
        }
        Ok(Self { z_min, z_max, n_points })
    }

    /// Grid with spacing as close to `dz` as fits `[z_min, z_max]` exactly.
    pub fn with_spacing(z_min: f64, z_max: f64, dz: f64) -> Result<Self> {
        ensure_positive("dz", dz)?;
        let cells = ((z_max - z_min) / dz).round().max(1.0) as usize;
        Self::new(z_min, z_max, cells + 1)
    }

    pub fn dz(&self) -> f64 {
        (self.z_max - self.z_min) / (self.n_points - 1) as f64
    }

    pub fn z(&self, i: usize) -> f64 {
        self.z_min + i as f64 * self.dz()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PropagationReport {
    /// Mass right of the clock window.
    pub p_t: f64,
    /// Mass left of the clock window.
    pub p_r: f64,
    pub p_inside: f64,
    /// Largest `|norm(t) / norm(0) - 1|` over all steps.
    pub norm_drift: f64,
    pub final_time: f64,
    pub steps: usize,
    pub max_boundary_density: f64,
}

/// Wave function on the grid nodes at `time`.
#[derive(Clone, Debug, PartialEq)]
pub struct WaveState {
    pub psi: Vec<Complex64>,
    pub time: f64,
}

impl WaveState {
    /// `Phi(z, 0)` sampled on the nodes.
    pub fn initial(packet: &GaussianPacket, grid: &Grid1D) -> Self {
        Self {
            psi: (0..grid.n_points).map(|i| packet.wavefunction(grid.z(i))).collect(),
            time: 0.0,
        }
    }

    pub fn norm(&self, grid: &Grid1D) -> f64 {
        self.psi.iter().map(|p| p.norm_sqr()).sum::<f64>() * grid.dz()
    }
}

/// `(z, |psi|^2)` on every node.
pub fn snapshot_density(state: &WaveState, grid: &Grid1D) -> Vec<(f64, f64)> {
    state
        .psi
        .iter()
        .enumerate()
        .map(|(i, p)| (grid.z(i), p.norm_sqr()))
        .collect()
}

/// Write a density snapshot as CSV with columns `z,density`.
pub fn write_density_csv(path: &Path, density: &[(f64, f64)]) -> Result<()> {
    let io = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    let file = std::fs::File::create(path).map_err(io)?;
    let mut w = std::io::BufWriter::new(file);
    writeln!(w, "z,density").map_err(io)?;
    for (z, d) in density {
        writeln!(w, "{z:.11e},{d:.11e}").map_err(io)?;
    }
    w.flush().map_err(io)
}

/// Potential on the nodes: cell averages of the regular part plus `gamma / dz`
/// at the node nearest each delta.
pub fn node_potential(potential: &Potential, grid: &Grid1D) -> Vec<f64> {
    let dz = grid.dz();
    let segments = potential.segments();
    let mut v: Vec<f64> = (0..grid.n_points)
        .map(|i| {
            let (lo, hi) = (grid.z(i) - 0.5 * dz, grid.z(i) + 0.5 * dz);
            segments
                .iter()
                .map(|s| s.height * (hi.min(s.end) - lo.max(s.start)).max(0.0))
                .sum::<f64>()
                / dz
        })
        .collect();
    for d in potential.deltas() {
        let i = ((d.position - grid.z_min) / dz).round();
        if i >= 0.0 && (i as usize) < grid.n_points {
            v[i as usize] += d.strength / dz;
        }
    }
    v
}

/// Largest significant wave number of the packet.
pub fn significant_k_max(packet: &GaussianPacket) -> f64 {
    packet.k0 + SIGNIFICANT_SPREADS * packet.momentum_spread()
}

/// `0.5 mu dz^2 / hbar`.
pub fn default_time_step(params: &PhysicalParams, grid: &Grid1D) -> f64 {
    0.5 * params.mu * grid.dz().powi(2) / params.hbar
}

fn validate(packet: &GaussianPacket, params: &PhysicalParams, grid: &Grid1D, dt: f64, t_max: f64) -> Result<()> {
    ensure_positive("dt", dt)?;
    ensure_positive("t_max", t_max)?;
    let k_max = significant_k_max(packet);
    if grid.dz() * k_max >= RESOLUTION_LIMIT {
        return Err(Error::InvalidParameter {
            name: "dz",
            reason: format!(
                "dz * k_max = {} must be < {RESOLUTION_LIMIT} (k_max = {k_max})",
                grid.dz() * k_max
            ),
        });
    }
    let left_tail = 0.5 * libm::erfc((packet.z0 - grid.z_min) / (packet.sigma * std::f64::consts::SQRT_2));
    let outside = packet.probability_right_of(grid.z_max) + left_tail;
    if outside >= CONTAINMENT_LIMIT {
        return Err(Error::InvalidParameter {
            name: "grid",
            reason: format!("initial packet mass outside the grid is {outside:e}"),
        });
    }
    let e_max = params.dispersion_energy(k_max);
    if dt * e_max / params.hbar >= TIME_STEP_LIMIT {
        return Err(Error::InvalidParameter {
            name: "dt",
            reason: format!(
                "dt * E_max / hbar = {} must be < {TIME_STEP_LIMIT}",
                dt * e_max / params.hbar
            ),
        });
    }
    Ok(())
}

/// Crank-Nicolson stepper with the tridiagonal factorisation cached.
pub struct Propagator {
    grid: Grid1D,
    /// `(2 beta + V_j) / beta`; with `inv_lb = 1 / (lambda beta)` this is the
    /// right-hand-side diagonal divided by the off-diagonal `-i lambda beta`.
    diag: Vec<f64>,
    inv_lb: f64,
    /// Thomas sweep coefficients `c'_j = off / denom_j`.
    c_prime: Vec<Complex64>,
    scratch: Vec<Complex64>,
    dt: f64,
}

impl Propagator {
    pub fn new(potential: &Potential, params: &PhysicalParams, grid: Grid1D, dt: f64) -> Result<Self> {
        ensure_positive("dt", dt)?;
        let v = node_potential(potential, &grid);
        let beta = params.hbar * params.hbar / (2.0 * params.mu * grid.dz().powi(2));
        let lambda = dt / (2.0 * params.hbar);
        let off = Complex64::new(0.0, -lambda * beta);
        let n = grid.n_points;
        let mut c_prime = vec![Complex64::new(0.0, 0.0); n];
        let mut diag = Vec::with_capacity(n);
        for j in 0..n {
            let h = 2.0 * beta + v[j];
            diag.push(h / beta);
            let a = Complex64::new(1.0, lambda * h);
            let denom = if j == 0 { a } else { a - off * c_prime[j - 1] };
            c_prime[j] = off / denom;
        }
        Ok(Self {
            grid,
            diag,
            inv_lb: 1.0 / (lambda * beta),
            c_prime,
            scratch: vec![Complex64::new(0.0, 0.0); n],
            dt,
        })
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    /// Advance one step; returns the new norm.
    pub fn step(&mut self, state: &mut WaveState) -> f64 {
        let psi = &mut state.psi;
        let n = psi.len();
        let zero = Complex64::new(0.0, 0.0);
        // Forward sweep on the system divided through by the off-diagonal.
        let mut prev_d = zero;
        let mut left = zero;
        for j in 0..n {
            let right = if j + 1 < n { psi[j + 1] } else { zero };
            let r = psi[j] * Complex64::new(self.diag[j], self.inv_lb) - (left + right);
            left = psi[j];
            let d = flush((r - prev_d) * self.c_prime[j]);
            self.scratch[j] = d;
            prev_d = d;
        }
        let mut next = zero;
        let mut norm = 0.0;
        for j in (0..n).rev() {
            let x = flush(self.scratch[j] - self.c_prime[j] * next);
            psi[j] = x;
            norm += x.norm_sqr();
            next = x;
        }
        state.time += self.dt;
        norm * self.grid.dz()
    }
}

/// Amplitudes this small would decay into subnormals, which are very slow.
#[inline(always)]
fn flush(x: Complex64) -> Complex64 {
    if x.re.abs() + x.im.abs() < 1e-150 {
        Complex64::new(0.0, 0.0)
    } else {
        x
    }
}

/// Channel masses relative to the clock window.
fn channel_masses(state: &WaveState, grid: &Grid1D, potential: &Potential) -> (f64, f64, f64) {
    let w = potential.clock_window();
    let dz = grid.dz();
    let (mut left, mut inside, mut right) = (0.0, 0.0, 0.0);
    for (i, p) in state.psi.iter().enumerate() {
        let z = grid.z(i);
        let m = p.norm_sqr() * dz;
        if z < w.left {
            left += m;
        } else if z > w.right {
            right += m;
        } else {
            inside += m;
        }
    }
    (right, left, inside)
}

/// Density table `(z, |psi|^2)` taken at the given time.
pub type Snapshot = (f64, Vec<(f64, f64)>);

/// Propagate to `t_max` and also return density snapshots at the steps
/// nearest each of `snapshot_times`.
pub fn evolve_with_snapshots(
    packet: &GaussianPacket,
    potential: &Potential,
    params: &PhysicalParams,
    grid: &Grid1D,
    dt: f64,
    t_max: f64,
    snapshot_times: &[f64],
) -> Result<(PropagationReport, Vec<Snapshot>)> {
    validate(packet, params, grid, dt, t_max)?;
    let steps = (t_max / dt).ceil() as usize;
    let dt = t_max / steps as f64;
    let mut prop = Propagator::new(potential, params, *grid, dt)?;
    let mut state = WaveState::initial(packet, grid);
    let norm0 = state.norm(grid);
    let mut wanted: Vec<(usize, f64)> = snapshot_times
        .iter()
        .filter(|&&t| (0.0..=t_max).contains(&t))
        .map(|&t| ((t / dt).round() as usize, t))
        .collect();
    wanted.sort_by_key(|w| w.0);
    let mut snapshots = Vec::with_capacity(wanted.len());
    let mut next_snap = 0;
    let take = |state: &WaveState, step: usize, next: &mut usize, out: &mut Vec<Snapshot>| {
        while *next < wanted.len() && wanted[*next].0 == step {
            out.push((state.time, snapshot_density(state, grid)));
            *next += 1;
        }
    };
    take(&state, 0, &mut next_snap, &mut snapshots);

    let last = grid.n_points - 1;
    let mut drift: f64 = 0.0;
    let mut edge: f64 = 0.0;
    for s in 1..=steps {
        let norm = prop.step(&mut state);
        drift = drift.max((norm / norm0 - 1.0).abs());
        let boundary = state.psi[0].norm_sqr().max(state.psi[last].norm_sqr());
        edge = edge.max(boundary);
        if boundary > BOUNDARY_DENSITY_LIMIT {
            return Err(Error::BoundaryReached {
                density: boundary,
                time: state.time,
            });
        }
        take(&state, s, &mut next_snap, &mut snapshots);
    }
    let (p_t, p_r, p_inside) = channel_masses(&state, grid, potential);
    if p_inside > INSIDE_LIMIT {
        return Err(Error::AsymptoticConditionUnmet {
            mass_inside: p_inside,
            time: state.time,
        });
    }
    Ok((
        PropagationReport {
            p_t,
            p_r,
            p_inside,
            norm_drift: drift,
            final_time: state.time,
            steps,
            max_boundary_density: edge,
        },
        snapshots,
    ))
}

/// Propagate `packet` to `t_max` and report where the probability ended up.
pub fn evolve(
    packet: &GaussianPacket,
    potential: &Potential,
    params: &PhysicalParams,
    grid: &Grid1D,
    dt: f64,
    t_max: f64,
) -> Result<PropagationReport> {
    Ok(evolve_with_snapshots(packet, potential, params, grid, dt, t_max, &[])?.0)
}
