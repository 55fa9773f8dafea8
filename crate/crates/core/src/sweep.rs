//! Fast sweeping extension of band distances to the whole grid.
//!
//! The band values are frozen as boundary data (absolute values, so the
//! sweep solves the unsigned problem) and every other voxel is relaxed with
//! the Godunov upwind update over the eight axis orderings until the largest
//! change in a cycle falls below the tolerance. The high-order variant then
//! keeps sweeping with third-order WENO one-sided differences in place of the
//! plain neighbour values.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interp::SplineInterpolant;
use crate::narrowband::{
    select_narrowband, solve_narrowband_with, CPConfig, NarrowbandSolution, DEFAULT_STENCIL,
};
use crate::volume::{GridGeometry, MaskField, ScalarField};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepOrder {
    First,
    High,
}

impl std::str::FromStr for SweepOrder {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "first" | "1" => Ok(Self::First),
            "high" | "3" => Ok(Self::High),
            other => Err(Error::InvalidArgument(format!(
                "unknown sweep order `{other}`"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub order: SweepOrder,
    /// Largest per-cycle change accepted as converged (distance units).
    pub tolerance: f64,
    /// Cycle budget for each stage.
    pub max_sweep_cycles: usize,
    /// Voxels held fixed. `None` freezes exactly the solved seed voxels.
    pub frozen: Option<MaskField>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            order: SweepOrder::High,
            tolerance: 1e-10,
            max_sweep_cycles: 100,
            frozen: None,
        }
    }
}

impl SweepConfig {
    pub fn with_order(order: SweepOrder) -> Self {
        Self {
            order,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepReport {
    pub order: SweepOrder,
    /// Cycles of the first-order stage, including the converged one.
    pub first_order_cycles: usize,
    /// Cycles of the high-order stage (zero for first order).
    pub high_order_cycles: usize,
    /// Largest update of every cycle, first-order stage then high-order.
    pub trace: Vec<f64>,
}

impl SweepReport {
    pub fn cycles(&self) -> usize {
        self.first_order_cycles + self.high_order_cycles
    }
}

const WENO_EPS: f64 = 1e-6;

struct Grid {
    dims: [usize; 3],
    stride: [usize; 3],
    inv_h2: [f64; 3],
    sentinel: f64,
}

impl Grid {
    /// Smaller of the two axis neighbours, ignoring those off the grid.
    #[inline]
    fn neighbour_min(&self, u: &[f64], idx: usize, pos: [usize; 3], axis: usize) -> f64 {
        let s = self.stride[axis];
        let mut a = self.sentinel;
        if pos[axis] > 0 {
            a = a.min(u[idx - s]);
        }
        if pos[axis] + 1 < self.dims[axis] {
            a = a.min(u[idx + s]);
        }
        a
    }

    /// Third-order WENO upwind value along one axis, or `None` when the
    /// five-point stencil leaves the grid or touches an unknown voxel.
    #[inline]
    fn weno_min(&self, u: &[f64], idx: usize, pos: [usize; 3], axis: usize) -> Option<f64> {
        let s = self.stride[axis];
        let p = pos[axis];
        if p < 2 || p + 2 >= self.dims[axis] {
            return None;
        }
        let m2 = u[idx - 2 * s];
        let m1 = u[idx - s];
        let c = u[idx];
        let p1 = u[idx + s];
        let p2 = u[idx + 2 * s];
        let limit = 0.5 * self.sentinel;
        if m2 >= limit || m1 >= limit || c >= limit || p1 >= limit || p2 >= limit {
            return None;
        }
        let centre = (p1 - 2.0 * c + m1).powi(2) + WENO_EPS;
        let qm = WENO_EPS + (c - 2.0 * m1 + m2).powi(2);
        let qp = WENO_EPS + (c - 2.0 * p1 + p2).powi(2);
        // w = 1 / (1 + 2 r²) with r = q / centre, written with one division each.
        let c2 = centre * centre;
        let wm = c2 / (c2 + 2.0 * qm * qm);
        let wp = c2 / (c2 + 2.0 * qp * qp);
        // h times the one-sided derivatives.
        let central = 0.5 * (p1 - m1);
        let hdm = (1.0 - wm) * central + wm * 0.5 * (3.0 * c - 4.0 * m1 + m2);
        let hdp = (1.0 - wp) * central + wp * 0.5 * (-3.0 * c + 4.0 * p1 - p2);
        Some((c - hdm).min(c + hdp))
    }

    /// Largest root of `Σ ((t - aᵢ)⁺ / hᵢ)² = 1` over the sorted neighbour
    /// values, using only the terms consistent with the root.
    #[inline]
    fn godunov(&self, a: [f64; 3]) -> f64 {
        let mut p = [
            (a[0], self.inv_h2[0]),
            (a[1], self.inv_h2[1]),
            (a[2], self.inv_h2[2]),
        ];
        if p[1].0 < p[0].0 {
            p.swap(0, 1);
        }
        if p[2].0 < p[1].0 {
            p.swap(1, 2);
        }
        if p[1].0 < p[0].0 {
            p.swap(0, 1);
        }
        let (a0, w0) = p[0];
        let mut t = a0 + self.h_of_weight(w0);
        let (mut sw, mut swa, mut swa2) = (w0, w0 * a0, w0 * a0 * a0);
        for &(ai, wi) in &p[1..] {
            if t <= ai {
                break;
            }
            sw += wi;
            swa += wi * ai;
            swa2 += wi * ai * ai;
            let disc = swa * swa - sw * (swa2 - 1.0);
            if disc < 0.0 {
                break;
            }
            t = (swa + disc.sqrt()) / sw;
        }
        t
    }

    #[inline]
    fn h_of_weight(&self, w: f64) -> f64 {
        1.0 / w.sqrt()
    }
}

fn for_each_in_sweep(dims: [usize; 3], dir: usize, mut f: impl FnMut(usize, [usize; 3])) {
    let [nx, ny, nz] = dims;
    let flip = |n: usize, rev: bool, v: usize| if rev { n - 1 - v } else { v };
    for kk in 0..nz {
        let k = flip(nz, dir & 4 != 0, kk);
        for jj in 0..ny {
            let j = flip(ny, dir & 2 != 0, jj);
            let row = nx * (j + ny * k);
            for ii in 0..nx {
                let i = flip(nx, dir & 1 != 0, ii);
                f(row + i, [i, j, k]);
            }
        }
    }
}

/// A high-order stage whose largest update has dropped below this many
/// tolerances and then fails to reach a new minimum for `STALL_CYCLES`
/// cycles is at its rounding floor and counts as converged.
const STALL_FACTOR: f64 = 1e4;
const STALL_CYCLES: usize = 2;

fn run_cycles(
    grid: &Grid,
    u: &mut [f64],
    frozen: &[bool],
    high: bool,
    cfg: &SweepConfig,
    trace: &mut Vec<f64>,
) -> Result<usize> {
    let mut best = f64::INFINITY;
    let mut since_best = 0;
    for cycle in 1..=cfg.max_sweep_cycles {
        let mut max_change: f64 = 0.0;
        for dir in 0..8 {
            for_each_in_sweep(grid.dims, dir, |idx, pos| {
                if frozen[idx] {
                    return;
                }
                let first = [
                    grid.neighbour_min(u, idx, pos, 0),
                    grid.neighbour_min(u, idx, pos, 1),
                    grid.neighbour_min(u, idx, pos, 2),
                ];
                let floor = first[0].min(first[1]).min(first[2]);
                if floor >= grid.sentinel {
                    return;
                }
                let old = u[idx];
                let new = if high {
                    let a = [
                        grid.weno_min(u, idx, pos, 0).unwrap_or(first[0]),
                        grid.weno_min(u, idx, pos, 1).unwrap_or(first[1]),
                        grid.weno_min(u, idx, pos, 2).unwrap_or(first[2]),
                    ];
                    let t = grid.godunov(a);
                    if t.is_finite() {
                        t.max(floor)
                    } else {
                        grid.godunov(first)
                    }
                } else {
                    old.min(grid.godunov(first))
                };
                max_change = max_change.max((new - old).abs());
                u[idx] = new;
            });
        }
        trace.push(max_change);
        if max_change < cfg.tolerance {
            return Ok(cycle);
        }
        if max_change < best {
            best = max_change;
            since_best = 0;
        } else {
            since_best += 1;
        }
        if high && best < STALL_FACTOR * cfg.tolerance && since_best >= STALL_CYCLES {
            return Ok(cycle);
        }
    }
    Err(Error::SweepNotConverged {
        cycles: cfg.max_sweep_cycles,
    })
}

/// Extends the absolute seed distances over `geometry`.
pub fn sweep_unsigned(
    seed: &NarrowbandSolution,
    geometry: GridGeometry,
    cfg: &SweepConfig,
) -> Result<(ScalarField, SweepReport)> {
    if !(cfg.tolerance > 0.0) || cfg.max_sweep_cycles == 0 {
        return Err(Error::InvalidArgument(
            "sweep tolerance and cycle budget must be positive".into(),
        ));
    }
    if seed.mask.geometry != geometry {
        return Err(Error::GeometryMismatch);
    }
    if seed.distances.is_empty() {
        return Err(Error::NoSeed);
    }
    let sentinel = 10.0 * geometry.diagonal().max(geometry.min_spacing());
    let mut u = vec![sentinel; geometry.len()];
    let frozen = match &cfg.frozen {
        Some(m) => {
            if m.geometry != geometry {
                return Err(Error::GeometryMismatch);
            }
            m.bits.clone()
        }
        None => seed.solved_mask().bits,
    };
    for (&i, &d) in &seed.distances {
        u[i] = d.abs();
    }
    let h = geometry.spacing;
    let grid = Grid {
        dims: geometry.dims,
        stride: [1, geometry.dims[0], geometry.dims[0] * geometry.dims[1]],
        inv_h2: [
            1.0 / (h[0] * h[0]),
            1.0 / (h[1] * h[1]),
            1.0 / (h[2] * h[2]),
        ],
        sentinel,
    };
    let mut trace = Vec::new();
    let first_order_cycles = run_cycles(&grid, &mut u, &frozen, false, cfg, &mut trace)?;
    let high_order_cycles = match cfg.order {
        SweepOrder::First => 0,
        SweepOrder::High => run_cycles(&grid, &mut u, &frozen, true, cfg, &mut trace)?,
    };
    Ok((
        ScalarField {
            geometry,
            values: u,
        },
        SweepReport {
            order: cfg.order,
            first_order_cycles,
            high_order_cycles,
            trace,
        },
    ))
}

/// `sign(ψ) |u|`, with ψ = 0 taken as positive.
pub fn reattach_sign(unsigned: &ScalarField, psi: &ScalarField) -> Result<ScalarField> {
    unsigned.check_same_grid(&psi.geometry)?;
    Ok(ScalarField {
        geometry: psi.geometry,
        values: unsigned
            .values
            .iter()
            .zip(&psi.values)
            .map(|(&u, &p)| if p < 0.0 { -u.abs() } else { u.abs() })
            .collect(),
    })
}

/// Everything the full pipeline produces.
#[derive(Debug, Clone)]
pub struct Embedding {
    pub phi: ScalarField,
    pub narrowband: NarrowbandSolution,
    pub sweep: SweepReport,
}

/// Band selection, closest-point solve, sweeping and sign reattachment.
pub fn solve_full(psi: &ScalarField, cp: &CPConfig, sweep: &SweepConfig) -> Result<Embedding> {
    let has_neg = psi.values.iter().any(|&v| v < 0.0);
    let has_pos = psi.values.iter().any(|&v| v >= 0.0);
    if !(has_neg && has_pos) {
        return Err(Error::NoZeroCrossing);
    }
    let mask = select_narrowband(psi, DEFAULT_STENCIL)?;
    let interp = SplineInterpolant::new(psi, 3)?;
    let narrowband = solve_narrowband_with(&interp, psi, &mask, cp)?;
    let (unsigned, report) = sweep_unsigned(&narrowband, psi.geometry, sweep)?;
    Ok(Embedding {
        phi: reattach_sign(&unsigned, psi)?,
        narrowband,
        sweep: report,
    })
}
