//! Grid-refinement studies on the analytic phantoms.
//!
//! Each level builds the phantom at spacing `h`, converts it to the
//! biphasic density `ρ1 = 100, ρ2 = 0` with a width-2 transition, thresholds
//! at 50 without smoothing and runs one stage of the pipeline. The
//! narrowband stage is scored on the solved band voxels; the sweeping stage
//! is seeded with exact distances on the band and scored everywhere else.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::narrowband::{
    select_narrowband, solve_narrowband, CPConfig, NarrowbandSolution, DEFAULT_STENCIL,
};
use crate::phantom::{
    midphase_threshold, order_estimate, phantom_geometry, synth_density, AnalyticSurface,
};
use crate::sweep::{reattach_sign, sweep_unsigned, SweepConfig, SweepOrder};
use crate::volume::{error_norms, MaskField, ScalarField};

pub const STUDY_RHO1: f64 = 100.0;
pub const STUDY_RHO2: f64 = 0.0;
pub const STUDY_EPS: f64 = 2.0;

/// Finest phantom spacing accepted by default (a 321³ grid).
pub const DEFAULT_MIN_SPACING: f64 = 0.0625;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Narrowband,
    Sweep(SweepOrder),
}

impl Stage {
    pub fn label(&self) -> &'static str {
        match self {
            Stage::Narrowband => "narrowband",
            Stage::Sweep(SweepOrder::First) => "sweep-first",
            Stage::Sweep(SweepOrder::High) => "sweep-high",
        }
    }
}

impl std::str::FromStr for Stage {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "narrowband" => Ok(Stage::Narrowband),
            "sweep-first" => Ok(Stage::Sweep(SweepOrder::First)),
            "sweep-high" | "sweep" => Ok(Stage::Sweep(SweepOrder::High)),
            other => Err(Error::InvalidArgument(format!("unknown stage `{other}`"))),
        }
    }
}

pub const STUDY_CSV_HEADER: &str =
    "surface,stage,h,l1,linf,order_l1,order_linf,scored_voxels,fallback,mean_cp_steps,first_order_cycles,high_order_cycles";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StudyRow {
    pub surface: String,
    pub stage: Stage,
    pub h: f64,
    pub l1: f64,
    pub linf: f64,
    /// Orders against the previous, coarser level.
    pub order_l1: Option<f64>,
    pub order_linf: Option<f64>,
    pub scored_voxels: usize,
    /// Band voxels left unsolved by the closest-point iteration.
    pub fallback: usize,
    pub mean_cp_steps: Option<f64>,
    pub first_order_cycles: Option<usize>,
    pub high_order_cycles: Option<usize>,
}

impl StudyRow {
    /// One CSV row in [`STUDY_CSV_HEADER`] order; absent values are empty.
    pub fn csv_row(&self) -> String {
        fn opt<T: ToString>(v: Option<T>) -> String {
            v.map(|v| v.to_string()).unwrap_or_default()
        }
        format!(
            "{},{},{},{:e},{:e},{},{},{},{},{},{},{}",
            self.surface,
            self.stage.label(),
            self.h,
            self.l1,
            self.linf,
            opt(self.order_l1),
            opt(self.order_linf),
            self.scored_voxels,
            self.fallback,
            opt(self.mean_cp_steps),
            opt(self.first_order_cycles),
            opt(self.high_order_cycles)
        )
    }
}

/// Spacings must be at least `min_spacing` and halve from one level to the next.
pub fn check_spacings(hs: &[f64], min_spacing: f64) -> Result<()> {
    if hs.is_empty() {
        return Err(Error::InvalidArgument("no spacings given".into()));
    }
    for &h in hs {
        if !(h >= min_spacing) {
            return Err(Error::InvalidArgument(format!(
                "spacing {h} is below the memory floor {min_spacing}"
            )));
        }
        phantom_geometry(h)?;
    }
    for w in hs.windows(2) {
        if ((w[0] / w[1]) - 2.0).abs() > 1e-9 {
            return Err(Error::InvalidArgument(format!(
                "spacings must halve at each level, got {} then {}",
                w[0], w[1]
            )));
        }
    }
    Ok(())
}

/// Analytic distance and the thresholded density field `ψ` of a phantom.
pub fn phantom_fields(surface: &AnalyticSurface, h: f64) -> Result<(ScalarField, ScalarField)> {
    let phi = surface.sample(phantom_geometry(h)?);
    let rho = synth_density(&phi, STUDY_RHO1, STUDY_RHO2, STUDY_EPS)?;
    let t = midphase_threshold(STUDY_RHO1, STUDY_RHO2);
    Ok((phi, rho.map(|r| t - r)))
}

fn mean_steps(sol: &NarrowbandSolution) -> f64 {
    let hist = &sol.stats.step_histogram;
    let total: usize = hist.iter().sum();
    if total == 0 {
        return 0.0;
    }
    hist.iter()
        .enumerate()
        .map(|(n, c)| (n * c) as f64)
        .sum::<f64>()
        / total as f64
}

/// One refinement level; the orders are left empty.
pub fn study_level(surface: &AnalyticSurface, h: f64, stage: Stage) -> Result<StudyRow> {
    let (phi, psi) = phantom_fields(surface, h)?;
    let band = select_narrowband(&psi, DEFAULT_STENCIL)?;
    let mut row = StudyRow {
        surface: surface.name().to_string(),
        stage,
        h,
        l1: 0.0,
        linf: 0.0,
        order_l1: None,
        order_linf: None,
        scored_voxels: 0,
        fallback: 0,
        mean_cp_steps: None,
        first_order_cycles: None,
        high_order_cycles: None,
    };
    let norms = match stage {
        Stage::Narrowband => {
            let sol = solve_narrowband(&psi, &band, &CPConfig::for_spacing(h))?;
            row.fallback = sol.fallback.len();
            row.mean_cp_steps = Some(mean_steps(&sol));
            error_norms(&sol.to_field(0.0), &phi, &sol.solved_mask())?
        }
        Stage::Sweep(order) => {
            let seed = NarrowbandSolution::from_values(band.clone(), &phi)?;
            let (unsigned, report) =
                sweep_unsigned(&seed, phi.geometry, &SweepConfig::with_order(order))?;
            row.first_order_cycles = Some(report.first_order_cycles);
            if order == SweepOrder::High {
                row.high_order_cycles = Some(report.high_order_cycles);
            }
            let off: MaskField = band.complement();
            error_norms(&reattach_sign(&unsigned, &phi)?, &phi, &off)?
        }
    };
    row.l1 = norms.l1;
    row.linf = norms.linf;
    row.scored_voxels = norms.count;
    Ok(row)
}

/// All levels of a study with the observed orders filled in.
pub fn run_study(
    surface: &AnalyticSurface,
    hs: &[f64],
    stage: Stage,
    min_spacing: f64,
) -> Result<Vec<StudyRow>> {
    check_spacings(hs, min_spacing)?;
    let mut rows: Vec<StudyRow> = Vec::with_capacity(hs.len());
    for &h in hs {
        let mut row = study_level(surface, h, stage)?;
        if let Some(prev) = rows.last() {
            row.order_l1 = order_estimate(prev.l1, row.l1).ok();
            row.order_linf = order_estimate(prev.linf, row.linf).ok();
        }
        rows.push(row);
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spacing_checks() {
        assert!(check_spacings(&[0.5, 0.25, 0.125], DEFAULT_MIN_SPACING).is_ok());
        assert!(check_spacings(&[0.5, 0.125], DEFAULT_MIN_SPACING).is_err());
        assert!(check_spacings(&[0.25, 0.5], DEFAULT_MIN_SPACING).is_err());
        assert!(check_spacings(&[0.0625 / 2.0], DEFAULT_MIN_SPACING).is_err());
        assert!(check_spacings(&[0.3], DEFAULT_MIN_SPACING).is_err());
        assert!(check_spacings(&[], DEFAULT_MIN_SPACING).is_err());
    }

    #[test]
    fn stage_names_round_trip() {
        for s in [
            Stage::Narrowband,
            Stage::Sweep(SweepOrder::First),
            Stage::Sweep(SweepOrder::High),
        ] {
            assert_eq!(s.label().parse::<Stage>().unwrap(), s);
        }
        assert!("fast".parse::<Stage>().is_err());
    }

    #[test]
    fn psi_crosses_zero_on_the_surface() {
        let (phi, psi) = phantom_fields(&AnalyticSurface::sphere(), 0.5).unwrap();
        for (p, s) in phi.values.iter().zip(&psi.values) {
            assert_eq!(p.partial_cmp(&0.0), s.partial_cmp(&0.0));
        }
    }

    #[test]
    fn coarse_sphere_study() {
        let rows = run_study(
            &AnalyticSurface::sphere(),
            &[1.0, 0.5],
            Stage::Narrowband,
            DEFAULT_MIN_SPACING,
        )
        .unwrap();
        assert_eq!(rows.len(), 2);
        assert!(rows[0].order_l1.is_none());
        assert!(rows[1].order_l1.unwrap() > 3.0);
        assert_eq!(
            rows[1].csv_row().split(',').count(),
            STUDY_CSV_HEADER.split(',').count()
        );
        let sweep = study_level(
            &AnalyticSurface::sphere(),
            1.0,
            Stage::Sweep(SweepOrder::First),
        )
        .unwrap();
        assert!(sweep.l1 > 0.0 && sweep.high_order_cycles.is_none());
    }
}
