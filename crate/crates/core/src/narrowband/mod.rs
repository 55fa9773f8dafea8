//! High-order distances on the shell of voxels around the zero level set.
//!
//! Every band voxel is projected onto the interpolated surface with the
//! collinear closest-point iteration; the distance to that point, signed by
//! `ψ` at the voxel, is the embedding there. Voxels whose iteration does
//! not converge are left to the sweeping stage.

mod closest_point;
mod morphology;

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;

pub use closest_point::{
    closest_point, collinear_closest_point, on_surface, regularized_sign, CPConfig, ClosestPoint,
};
pub use morphology::{dilate_cross, erode_cross, select_narrowband};

use crate::error::{Error, Result};
use crate::interp::SplineInterpolant;
use crate::volume::{MaskField, ScalarField};

pub const DEFAULT_STENCIL: usize = 5;

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct NarrowbandStats {
    pub band_voxels: usize,
    pub solved: usize,
    pub fallback: usize,
    /// `histogram[n]` counts voxels that needed `n` vector-field steps in
    /// total; the last bucket collects everything beyond.
    pub step_histogram: Vec<usize>,
    /// Same for collinearity corrections.
    pub correction_histogram: Vec<usize>,
    pub max_residual: f64,
}

#[derive(Debug, Clone)]
pub struct NarrowbandSolution {
    pub mask: MaskField,
    /// Signed distances of the solved voxels, keyed by flat index.
    pub distances: BTreeMap<usize, f64>,
    /// Band voxels the iteration could not solve.
    pub fallback: Vec<usize>,
    pub stats: NarrowbandStats,
}

impl NarrowbandSolution {
    /// Seeds a solution from known values, e.g. an analytic distance
    /// sampled on the band.
    pub fn from_values(mask: MaskField, values: &ScalarField) -> Result<Self> {
        values.check_same_grid(&mask.geometry)?;
        let distances: BTreeMap<usize, f64> =
            mask.indices().map(|i| (i, values.values[i])).collect();
        let stats = NarrowbandStats {
            band_voxels: distances.len(),
            solved: distances.len(),
            ..Default::default()
        };
        Ok(Self {
            mask,
            distances,
            fallback: Vec::new(),
            stats,
        })
    }

    pub fn distance(&self, idx: usize) -> Option<f64> {
        self.distances.get(&idx).copied()
    }

    /// Dense copy with `fill` everywhere no distance is known.
    pub fn to_field(&self, fill: f64) -> ScalarField {
        let mut f = ScalarField::filled(self.mask.geometry, fill);
        for (&i, &d) in &self.distances {
            f.values[i] = d;
        }
        f
    }

    /// Mask of voxels with a solved distance.
    pub fn solved_mask(&self) -> MaskField {
        let mut m = MaskField::empty(self.mask.geometry);
        for &i in self.distances.keys() {
            m.bits[i] = true;
        }
        m
    }
}

const HISTOGRAM_BUCKETS: usize = 32;

fn bump(hist: &mut Vec<usize>, n: usize) {
    if hist.is_empty() {
        hist.resize(HISTOGRAM_BUCKETS + 1, 0);
    }
    hist[n.min(HISTOGRAM_BUCKETS)] += 1;
}

enum Outcome {
    Zero,
    Solved(f64, ClosestPoint),
    Failed(ClosestPoint),
}

/// Solves the band with an interpolant built from `psi`.
pub fn solve_narrowband(
    psi: &ScalarField,
    mask: &MaskField,
    cfg: &CPConfig,
) -> Result<NarrowbandSolution> {
    let interp = SplineInterpolant::new(psi, 3)?;
    solve_narrowband_with(&interp, psi, mask, cfg)
}

/// Solves the band against an existing cubic interpolant of `psi`.
pub fn solve_narrowband_with(
    interp: &SplineInterpolant,
    psi: &ScalarField,
    mask: &MaskField,
    cfg: &CPConfig,
) -> Result<NarrowbandSolution> {
    cfg.validate()?;
    psi.check_same_grid(&mask.geometry)?;
    psi.check_same_grid(interp.geometry())?;
    let band: Vec<usize> = mask.indices().collect();
    if band.is_empty() {
        return Err(Error::EmptyMask);
    }
    let g = psi.geometry;
    let outcomes: Vec<Result<Outcome>> = band
        .par_iter()
        .map(|&idx| {
            let s = psi.values[idx];
            if s == 0.0 {
                return Ok(Outcome::Zero);
            }
            let x = g.world_of(idx);
            let cp = collinear_closest_point(interp, x, cfg)?;
            if !cp.converged {
                return Ok(Outcome::Failed(cp));
            }
            let y = cp.point;
            let d = ((x[0] - y[0]).powi(2) + (x[1] - y[1]).powi(2) + (x[2] - y[2]).powi(2)).sqrt();
            Ok(Outcome::Solved(d.copysign(s), cp))
        })
        .collect();

    let mut distances = BTreeMap::new();
    let mut fallback = Vec::new();
    let mut stats = NarrowbandStats {
        band_voxels: band.len(),
        ..Default::default()
    };
    for (&idx, out) in band.iter().zip(outcomes) {
        match out? {
            Outcome::Zero => {
                distances.insert(idx, 0.0);
                bump(&mut stats.step_histogram, 0);
                bump(&mut stats.correction_histogram, 0);
            }
            Outcome::Solved(d, cp) => {
                distances.insert(idx, d);
                bump(&mut stats.step_histogram, cp.iterations);
                bump(&mut stats.correction_histogram, cp.corrections);
                stats.max_residual = stats.max_residual.max(cp.residual);
            }
            Outcome::Failed(cp) => {
                fallback.push(idx);
                bump(&mut stats.step_histogram, cp.iterations);
                bump(&mut stats.correction_histogram, cp.corrections);
            }
        }
    }
    stats.solved = distances.len();
    stats.fallback = fallback.len();
    Ok(NarrowbandSolution {
        mask: mask.clone(),
        distances,
        fallback,
        stats,
    })
}
