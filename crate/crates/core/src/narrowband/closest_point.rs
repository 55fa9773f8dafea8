use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interp::SplineInterpolant;
use crate::volume::Vec3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CPConfig {
    /// Step length λ of the vector-field iteration (world units).
    pub step: f64,
    /// Sign regularisation width δ (world units).
    pub delta: f64,
    /// Stopping distance, `h³` by default.
    pub tolerance: f64,
    /// Once the stopping test passes, the same update keeps running until
    /// the distance estimate `|ψ̃|/|∇ψ̃|` drops below this (or stops
    /// improving). Equal to `tolerance` gives the bare iteration.
    pub refine_to: f64,
    /// Damping β of the collinearity correction.
    pub beta: f64,
    /// Cap applied separately to the inner and outer loops.
    pub max_iters: usize,
}

impl CPConfig {
    pub fn for_spacing(h: f64) -> Self {
        Self {
            step: h,
            delta: h,
            tolerance: h * h * h,
            refine_to: 1e-10,
            beta: 0.5,
            max_iters: 100,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64| v > 0.0 && v.is_finite();
        if !positive(self.step) || !positive(self.delta) || !positive(self.tolerance) {
            return Err(Error::InvalidArgument(format!(
                "step, delta and tolerance must be positive: {self:?}"
            )));
        }
        if !positive(self.refine_to) || self.refine_to > self.tolerance {
            return Err(Error::InvalidArgument(format!(
                "refine_to must lie in (0, tolerance], got {}",
                self.refine_to
            )));
        }
        if !(self.beta > 0.0 && self.beta <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "beta must lie in (0, 1], got {}",
                self.beta
            )));
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidArgument(
                "max_iters must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// `ψ / sqrt(ψ² + |∇ψ|² δ²)`, zero when both ψ and the gradient vanish.
#[inline]
pub fn regularized_sign(psi: f64, grad_mag: f64, delta: f64) -> f64 {
    let denom = (psi * psi + grad_mag * grad_mag * delta * delta).sqrt();
    if denom == 0.0 {
        0.0
    } else {
        psi / denom
    }
}

/// Stopping test for the vector-field iteration. Scaling by the gradient
/// makes it a distance test independent of the units of ψ.
#[inline]
pub fn on_surface(value: f64, grad_mag: f64, tolerance: f64) -> bool {
    value.abs() <= tolerance * grad_mag
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClosestPoint {
    pub point: Vec3,
    pub converged: bool,
    /// Vector-field steps taken (summed over all inner solves for the
    /// collinear variant).
    pub iterations: usize,
    /// Collinearity corrections; zero for the plain variant.
    pub corrections: usize,
    /// Tangential residual `|z|` at the returned point.
    pub residual: f64,
}

fn norm(v: Vec3) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

fn check_interp(interp: &SplineInterpolant) -> Result<()> {
    if interp.order() < 3 {
        return Err(Error::InvalidArgument(
            "closest point iteration needs a cubic interpolant".into(),
        ));
    }
    Ok(())
}

/// Continues the update from an accepted point, keeping the best iterate.
fn refine(
    interp: &SplineInterpolant,
    mut y: Vec3,
    mut v: f64,
    mut g: Vec3,
    cfg: &CPConfig,
    budget: usize,
) -> (Vec3, usize) {
    let mut gm = norm(g);
    let mut best = (y, v.abs() / gm);
    for it in 0..budget {
        if best.1 <= cfg.refine_to || gm == 0.0 {
            return (best.0, it);
        }
        let s = cfg.step * regularized_sign(v, gm, cfg.delta) / gm;
        for a in 0..3 {
            y[a] -= s * g[a];
        }
        (v, g) = interp.eval_with_gradient(y).expect("cubic interpolant");
        gm = norm(g);
        let est = v.abs() / gm;
        if !(est < best.1) {
            return (best.0, it + 1);
        }
        best = (y, est);
    }
    (best.0, budget)
}

fn descend(interp: &SplineInterpolant, x: Vec3, cfg: &CPConfig) -> ClosestPoint {
    let mut y = x;
    for it in 0..=cfg.max_iters {
        // Order was checked by the caller.
        let (v, g) = interp.eval_with_gradient(y).expect("cubic interpolant");
        let gm = norm(g);
        if on_surface(v, gm, cfg.tolerance) {
            let (point, extra) = refine(interp, y, v, g, cfg, cfg.max_iters - it);
            return ClosestPoint {
                point,
                converged: true,
                iterations: it + extra,
                corrections: 0,
                residual: 0.0,
            };
        }
        if it == cfg.max_iters || gm == 0.0 {
            return ClosestPoint {
                point: y,
                converged: false,
                iterations: it,
                corrections: 0,
                residual: f64::NAN,
            };
        }
        let s = cfg.step * regularized_sign(v, gm, cfg.delta) / gm;
        for a in 0..3 {
            y[a] -= s * g[a];
        }
    }
    unreachable!()
}

/// Projects `x` onto the zero level set of the interpolant by descending
/// the normalised gradient field.
pub fn closest_point(interp: &SplineInterpolant, x: Vec3, cfg: &CPConfig) -> Result<ClosestPoint> {
    check_interp(interp)?;
    Ok(descend(interp, x, cfg))
}

/// Like [`closest_point`], then repeatedly removes the component of
/// `x - y` tangent to the surface at `y` until the displacement is normal.
pub fn collinear_closest_point(
    interp: &SplineInterpolant,
    x: Vec3,
    cfg: &CPConfig,
) -> Result<ClosestPoint> {
    check_interp(interp)?;
    let mut cp = descend(interp, x, cfg);
    if !cp.converged {
        return Ok(cp);
    }
    let mut total = cp.iterations;
    for outer in 1..=cfg.max_iters {
        let y = cp.point;
        let g = interp.eval_gradient(y)?;
        let gm = norm(g);
        if gm == 0.0 {
            break;
        }
        let n = [g[0] / gm, g[1] / gm, g[2] / gm];
        let q = [x[0] - y[0], x[1] - y[1], x[2] - y[2]];
        let qn = q[0] * n[0] + q[1] * n[1] + q[2] * n[2];
        let z = [q[0] - qn * n[0], q[1] - qn * n[1], q[2] - qn * n[2]];
        let zm = norm(z);
        if zm <= cfg.tolerance {
            return Ok(ClosestPoint {
                point: y,
                converged: true,
                iterations: total,
                corrections: outer,
                residual: zm,
            });
        }
        let start = [
            y[0] + cfg.beta * z[0],
            y[1] + cfg.beta * z[1],
            y[2] + cfg.beta * z[2],
        ];
        cp = descend(interp, start, cfg);
        total += cp.iterations;
        if !cp.converged {
            return Ok(ClosestPoint {
                iterations: total,
                corrections: outer,
                ..cp
            });
        }
    }
    Ok(ClosestPoint {
        point: cp.point,
        converged: false,
        iterations: total,
        corrections: cfg.max_iters,
        residual: f64::NAN,
    })
}
