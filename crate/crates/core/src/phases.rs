//! Regularised Heaviside/Dirac kernels and biphasic density estimation.
//!
//! With inside-is-negative embeddings the inner phase indicator is
//! `θε(-φ)`. Phase densities are the indicator-weighted means of the
//! (smoothed) density image, integrated with Simpson weights.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::volume::{integrate_with, ScalarField};

/// Smoothed Heaviside with support `[-eps, eps]`; C¹ at the support ends.
#[inline]
pub fn heaviside_eps(x: f64, eps: f64) -> f64 {
    if x > eps {
        1.0
    } else if x < -eps {
        0.0
    } else {
        let r = x / eps;
        0.5 * (1.0 + r + (std::f64::consts::PI * r).sin() / std::f64::consts::PI)
    }
}

/// Derivative of [`heaviside_eps`].
#[inline]
pub fn dirac_eps(x: f64, eps: f64) -> f64 {
    if x.abs() > eps {
        0.0
    } else {
        (1.0 + (std::f64::consts::PI * x / eps).cos()) / (2.0 * eps)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhaseDensities {
    /// Density of the phase inside the embedding (`φ < 0`).
    pub rho1: f64,
    /// Density of the phase outside the embedding.
    pub rho2: f64,
    /// Regularisation width used for the indicator.
    pub eps: f64,
}

fn check_eps(eps: f64) -> Result<()> {
    if eps > 0.0 && eps.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "eps must be positive, got {eps}"
        )))
    }
}

/// Chan–Vese style phase means of `rho_smoothed` split by `φ`.
pub fn estimate_phases(
    rho_smoothed: &ScalarField,
    phi: &ScalarField,
    eps: f64,
) -> Result<PhaseDensities> {
    check_eps(eps)?;
    rho_smoothed.check_same_grid(&phi.geometry)?;
    let g = &phi.geometry;
    let inside = |idx: usize| heaviside_eps(-phi.values[idx], eps);
    let mass1 = integrate_with(g, inside)?;
    let mass2 = integrate_with(g, |idx| 1.0 - inside(idx))?;
    let first = integrate_with(g, |idx| rho_smoothed.values[idx] * inside(idx))?;
    let second = integrate_with(g, |idx| rho_smoothed.values[idx] * (1.0 - inside(idx)))?;
    // Relative to the total mass, so tiny grids are not misjudged.
    let total = mass1 + mass2;
    if mass1 <= 1e-12 * total {
        return Err(Error::EmptyPhase("inside"));
    }
    if mass2 <= 1e-12 * total {
        return Err(Error::EmptyPhase("outside"));
    }
    Ok(PhaseDensities {
        rho1: first / mass1,
        rho2: second / mass2,
        eps,
    })
}

/// Two-phase density image `ρ1 θε(-φ) + ρ2 (1 - θε(-φ))`.
pub fn reconstruct_density(phi: &ScalarField, phases: &PhaseDensities) -> Result<ScalarField> {
    check_eps(phases.eps)?;
    let (r1, r2, eps) = (phases.rho1, phases.rho2, phases.eps);
    Ok(phi.map(|p| {
        let t = heaviside_eps(-p, eps);
        r1 * t + r2 * (1.0 - t)
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::volume::{integrate_simpson, GridGeometry};
    use proptest::prelude::*;
    use std::f64::consts::PI;

    #[test]
    fn heaviside_values() {
        assert_eq!(heaviside_eps(0.0, 2.0), 0.5);
        assert!((heaviside_eps(2.0, 2.0) - 1.0).abs() < 1e-15);
        assert!(heaviside_eps(-2.0, 2.0).abs() < 1e-15);
        assert_eq!(heaviside_eps(7.0, 2.0), 1.0);
        assert_eq!(heaviside_eps(-7.0, 2.0), 0.0);
        let want = 0.5 * (0.5 - 1.0 / PI);
        assert!((heaviside_eps(-1.0, 2.0) - want).abs() < 1e-15);
        assert!((want - 0.090845).abs() < 1e-6);
    }

    #[test]
    fn dirac_values() {
        assert_eq!(dirac_eps(0.0, 0.5), 2.0);
        assert!(dirac_eps(0.5, 0.5).abs() < 1e-15);
        assert!(dirac_eps(-0.5, 0.5).abs() < 1e-15);
        assert_eq!(dirac_eps(0.6, 0.5), 0.0);
    }

    #[test]
    fn dirac_integrates_to_one() {
        let eps = 0.8;
        let g =
            GridGeometry::new([33, 1, 1], [2.0 * eps / 32.0, 1.0, 1.0], [-eps, 0.0, 0.0]).unwrap();
        let f = ScalarField::from_fn(g, |x| dirac_eps(x[0], eps));
        assert!((integrate_simpson(&f).unwrap() - 1.0).abs() < 1e-6);
    }

    proptest! {
        #[test]
        fn heaviside_symmetric_and_monotone(x in -5.0f64..5.0, dx in 0.0f64..1.0, eps in 0.1f64..3.0) {
            prop_assert!((heaviside_eps(x, eps) + heaviside_eps(-x, eps) - 1.0).abs() < 1e-14);
            prop_assert!(heaviside_eps(x + dx, eps) >= heaviside_eps(x, eps) - 1e-15);
        }

        #[test]
        fn dirac_is_heaviside_derivative(x in -3.0f64..3.0, eps in 0.2f64..3.0) {
            prop_assume!((x.abs() - eps).abs() > 1e-3);
            let step = 1e-6 * eps;
            let fd = (heaviside_eps(x + step, eps) - heaviside_eps(x - step, eps)) / (2.0 * step);
            prop_assert!((fd - dirac_eps(x, eps)).abs() <= 1e-8 / eps, "{} vs {}", fd, dirac_eps(x, eps));
        }
    }

    fn sphere(n: usize, r: f64) -> ScalarField {
        let g = GridGeometry::cube(n, -10.0, 10.0).unwrap();
        ScalarField::from_fn(g, |x| (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt() - r)
    }

    #[test]
    fn constant_density() {
        let phi = sphere(21, 5.0);
        let rho = ScalarField::filled(phi.geometry, 42.0);
        let p = estimate_phases(&rho, &phi, 2.0).unwrap();
        assert!((p.rho1 - 42.0).abs() < 1e-10 && (p.rho2 - 42.0).abs() < 1e-10);
    }

    #[test]
    fn swapping_sign_swaps_phases() {
        let phi = sphere(41, 5.0);
        let rho = phi.map(|p| 100.0 * heaviside_eps(-p, 2.0) + 0.3 * p);
        let a = estimate_phases(&rho, &phi, 1.0).unwrap();
        let b = estimate_phases(&rho, &phi.map(|p| -p), 1.0).unwrap();
        assert!((a.rho1 - b.rho2).abs() < 1e-10 && (a.rho2 - b.rho1).abs() < 1e-10);
    }

    #[test]
    fn empty_phase_is_named() {
        let phi = sphere(21, 50.0); // everything inside
        let rho = ScalarField::filled(phi.geometry, 1.0);
        assert!(matches!(
            estimate_phases(&rho, &phi, 1.0),
            Err(Error::EmptyPhase("outside"))
        ));
        let phi = sphere(21, -5.0);
        assert!(matches!(
            estimate_phases(&rho, &phi, 1.0),
            Err(Error::EmptyPhase("inside"))
        ));
    }

    #[test]
    fn reconstruction_preserves_mean_density() {
        let phi = sphere(41, 5.0);
        let rho = phi.map(|p| 100.0 * heaviside_eps(-p, 2.0));
        let p = estimate_phases(&rho, &phi, 1.0).unwrap();
        let rec = reconstruct_density(&phi, &p).unwrap();
        let (a, b) = (
            integrate_simpson(&rho).unwrap(),
            integrate_simpson(&rec).unwrap(),
        );
        assert!(((a - b) / a).abs() < 1e-12, "{a} vs {b}");
        // Deep inside the reconstruction is exactly ρ1.
        let c = phi.geometry.index(20, 20, 20);
        assert_eq!(rec.values[c], p.rho1);
    }

    #[test]
    fn joint_rescaling_invariance() {
        let phi = sphere(41, 5.0);
        let rho = phi.map(|p| 80.0 * heaviside_eps(-p, 1.5) + 5.0);
        let a = estimate_phases(&rho, &phi, 0.7).unwrap();
        let b = estimate_phases(&rho, &phi.map(|p| 3.0 * p), 2.1).unwrap();
        assert!((a.rho1 - b.rho1).abs() < 1e-9 && (a.rho2 - b.rho2).abs() < 1e-9);
    }
}
