//! Everything the page shows, computed on one phantom at one spacing.

use ctsdf::morpho::{measure, MorphometryReport};
use ctsdf::narrowband::{collinear_closest_point, CPConfig};
use ctsdf::phantom::AnalyticSurface;
use ctsdf::study::phantom_fields;
use ctsdf::sweep::{solve_full, SweepConfig};
use ctsdf::{Result, ScalarField, SplineInterpolant, Vec3};

/// Coarsest and finest spacing the page offers; finer grids take too long
/// to solve in a browser tab.
pub const SPACINGS: [f64; 2] = [1.0, 0.5];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum View {
    Analytic,
    Solved,
    Error,
}

impl std::str::FromStr for View {
    type Err = ctsdf::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "analytic" => Ok(View::Analytic),
            "solved" => Ok(View::Solved),
            "error" => Ok(View::Error),
            other => Err(ctsdf::Error::InvalidArgument(format!(
                "unknown view `{other}`"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Probe {
    pub point: Vec3,
    pub exact: Option<Vec3>,
    pub converged: bool,
    pub iterations: usize,
}

pub struct Scene {
    surface: AnalyticSurface,
    h: f64,
    analytic: ScalarField,
    psi: ScalarField,
    interp: SplineInterpolant,
    solved: Option<ScalarField>,
}

impl Scene {
    pub fn new(surface: &str, h: f64) -> Result<Self> {
        if !SPACINGS.contains(&h) {
            return Err(ctsdf::Error::InvalidArgument(format!(
                "demo spacing must be one of {SPACINGS:?}"
            )));
        }
        let surface = AnalyticSurface::by_name(surface)?;
        let (analytic, psi) = phantom_fields(&surface, h)?;
        let interp = SplineInterpolant::new(&psi, 3)?;
        Ok(Self {
            surface,
            h,
            analytic,
            psi,
            interp,
            solved: None,
        })
    }

    /// Nodes per axis.
    pub fn size(&self) -> usize {
        self.analytic.geometry.dims[0]
    }

    /// Runs the full pipeline on the thresholded density, once.
    pub fn solved(&mut self) -> Result<&ScalarField> {
        if self.solved.is_none() {
            let emb = solve_full(
                &self.psi,
                &CPConfig::for_spacing(self.h),
                &SweepConfig::default(),
            )?;
            self.solved = Some(emb.phi);
        }
        Ok(self.solved.as_ref().unwrap())
    }

    /// Plane `z = k`, x fastest.
    pub fn slice(&mut self, view: View, k: usize) -> Result<Vec<f64>> {
        let n = self.size();
        if k >= n {
            return Err(ctsdf::Error::InvalidArgument(format!(
                "slice {k} outside 0..{n}"
            )));
        }
        let range = k * n * n..(k + 1) * n * n;
        Ok(match view {
            View::Analytic => self.analytic.values[range].to_vec(),
            View::Solved => self.solved()?.values[range].to_vec(),
            View::Error => {
                let truth = self.analytic.values[range.clone()].to_vec();
                let solved = &self.solved()?.values[range];
                solved
                    .iter()
                    .zip(truth)
                    .map(|(s, t)| (s - t).abs())
                    .collect()
            }
        })
    }

    /// Closest point on the reconstructed surface, next to the exact one.
    pub fn probe(&self, x: Vec3) -> Result<Probe> {
        let cp = collinear_closest_point(&self.interp, x, &CPConfig::for_spacing(self.h))?;
        Ok(Probe {
            point: cp.point,
            exact: self.surface.closest_point(x),
            converged: cp.converged,
            iterations: cp.iterations,
        })
    }

    pub fn morphometry(&self) -> Result<MorphometryReport> {
        measure(&self.analytic, 2.0 * self.h)
    }
}
