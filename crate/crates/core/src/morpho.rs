//! Curvature and integral morphometry read directly from an embedding.
//!
//! Surface integrals use the regularised Dirac `δε(φ)|∇φ|`, volumes the
//! Heaviside `θε(-φ)`; derivatives are fourth-order central differences.
//! Curvature averages are normalised by the surface area.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::phases::{dirac_eps, heaviside_eps};
use crate::volume::{gradient4, gradient_hessian4, integrate_with, ScalarField};

/// Gradients below this magnitude give no curvature.
pub const GRADIENT_GUARD: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Curvature {
    pub mean: f64,
    pub gaussian: f64,
    pub grad_mag: f64,
}

/// Mean and Gaussian curvature of the level set through a voxel, or `None`
/// when the gradient vanishes there.
pub fn curvature_at(phi: &ScalarField, i: usize, j: usize, k: usize) -> Option<Curvature> {
    let (g, m) = gradient_hessian4(phi, i, j, k);
    let [xx, yy, zz, xy, xz, yz] = m;
    let g2 = g[0] * g[0] + g[1] * g[1] + g[2] * g[2];
    let gm = g2.sqrt();
    if gm < GRADIENT_GUARD {
        return None;
    }
    let mg = [
        xx * g[0] + xy * g[1] + xz * g[2],
        xy * g[0] + yy * g[1] + yz * g[2],
        xz * g[0] + yz * g[1] + zz * g[2],
    ];
    let gmg = g[0] * mg[0] + g[1] * mg[1] + g[2] * mg[2];
    let mean = 0.5 * (g2 * (xx + yy + zz) - gmg) / (g2 * gm);
    let adj = [
        [yy * zz - yz * yz, xz * yz - xy * zz, xy * yz - xz * yy],
        [xz * yz - xy * zz, xx * zz - xz * xz, xy * xz - xx * yz],
        [xy * yz - xz * yy, xy * xz - xx * yz, xx * yy - xy * xy],
    ];
    let mut gag = 0.0;
    for a in 0..3 {
        for b in 0..3 {
            gag += g[a] * adj[a][b] * g[b];
        }
    }
    Some(Curvature {
        mean,
        gaussian: gag / (g2 * g2),
        grad_mag: gm,
    })
}

#[derive(Debug, Clone)]
pub struct CurvatureFields {
    pub mean: ScalarField,
    pub gaussian: ScalarField,
    /// Voxels with a vanishing gradient (set to zero).
    pub degenerate: usize,
    /// Voxels whose curvature hit the `2/h`, `4/h²` bounds.
    pub clamped: usize,
}

fn clamp_curvature(c: Curvature, h: f64) -> (f64, f64, bool) {
    let (hb, kb) = (2.0 / h, 4.0 / (h * h));
    let hm = c.mean.clamp(-hb, hb);
    let kg = c.gaussian.clamp(-kb, kb);
    (hm, kg, hm != c.mean || kg != c.gaussian)
}

fn check_dims(phi: &ScalarField) -> Result<()> {
    if phi.geometry.dims.iter().any(|&n| n < 5) {
        return Err(Error::GridTooSmall(format!(
            "curvature needs at least 5 samples per axis, got {:?}",
            phi.geometry.dims
        )));
    }
    Ok(())
}

/// Clamped mean (`H`) and Gaussian (`K`) curvature at every voxel.
pub fn curvature_fields(phi: &ScalarField) -> Result<CurvatureFields> {
    check_dims(phi)?;
    let g = phi.geometry;
    let h = g.min_spacing();
    let per: Vec<(f64, f64, u8)> = (0..g.len())
        .into_par_iter()
        .map(|idx| {
            let [i, j, k] = g.coords(idx);
            match curvature_at(phi, i, j, k) {
                None => (0.0, 0.0, 1),
                Some(c) => {
                    let (hm, kg, clamped) = clamp_curvature(c, h);
                    (hm, kg, if clamped { 2 } else { 0 })
                }
            }
        })
        .collect();
    Ok(CurvatureFields {
        mean: ScalarField {
            geometry: g,
            values: per.iter().map(|p| p.0).collect(),
        },
        gaussian: ScalarField {
            geometry: g,
            values: per.iter().map(|p| p.1).collect(),
        },
        degenerate: per.iter().filter(|p| p.2 == 1).count(),
        clamped: per.iter().filter(|p| p.2 == 2).count(),
    })
}

pub const CSV_HEADER: &str =
    "volume,area,mean_h,mean_k,total_h,total_k,chi,tv,bvtv,bs,smi,tbpf,connd,eps,degenerate,clamped";

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MorphometryReport {
    pub volume: f64,
    pub area: f64,
    pub mean_h: f64,
    pub mean_k: f64,
    pub total_h: f64,
    pub total_k: f64,
    pub chi: f64,
    pub tv: f64,
    pub bvtv: f64,
    pub bs: f64,
    pub smi: f64,
    pub tbpf: f64,
    pub connd: f64,
    pub eps: f64,
    pub degenerate: usize,
    pub clamped: usize,
}

impl MorphometryReport {
    /// One CSV row in [`CSV_HEADER`] order.
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.volume,
            self.area,
            self.mean_h,
            self.mean_k,
            self.total_h,
            self.total_k,
            self.chi,
            self.tv,
            self.bvtv,
            self.bs,
            self.smi,
            self.tbpf,
            self.connd,
            self.eps,
            self.degenerate,
            self.clamped
        )
    }
}

/// Raw integrals of an embedding.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Integrals {
    pub volume: f64,
    pub area: f64,
    pub total_h: f64,
    pub total_k: f64,
    pub tv: f64,
    pub eps: f64,
    pub degenerate: usize,
    pub clamped: usize,
}

/// Volume, area and total curvatures of `{φ < 0}`. Curvature is only
/// evaluated where the Dirac kernel is nonzero.
pub fn integrals(phi: &ScalarField, eps: f64) -> Result<Integrals> {
    check_dims(phi)?;
    let g = phi.geometry;
    let h = g.min_spacing();
    if !(eps >= h) || !eps.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "eps must be at least the spacing {h}, got {eps}"
        )));
    }
    let volume = integrate_with(&g, |idx| heaviside_eps(-phi.values[idx], eps))?;
    let shell = |idx: usize| phi.values[idx].abs() <= eps;
    let area = integrate_with(&g, |idx| {
        if !shell(idx) {
            return 0.0;
        }
        let [i, j, k] = g.coords(idx);
        let gr = gradient4(phi, i, j, k);
        dirac_eps(phi.values[idx], eps) * (gr[0] * gr[0] + gr[1] * gr[1] + gr[2] * gr[2]).sqrt()
    })?;
    let curv = |idx: usize| -> Option<(f64, f64, f64, bool)> {
        let [i, j, k] = g.coords(idx);
        let c = curvature_at(phi, i, j, k)?;
        let (hm, kg, clamped) = clamp_curvature(c, h);
        Some((
            hm,
            kg,
            dirac_eps(phi.values[idx], eps) * c.grad_mag,
            clamped,
        ))
    };
    let total_h = integrate_with(&g, |idx| {
        if !shell(idx) {
            return 0.0;
        }
        curv(idx).map_or(0.0, |(hm, _, w, _)| hm * w)
    })?;
    let total_k = integrate_with(&g, |idx| {
        if !shell(idx) {
            return 0.0;
        }
        curv(idx).map_or(0.0, |(_, kg, w, _)| kg * w)
    })?;
    let (degenerate, clamped) = (0..g.len())
        .into_par_iter()
        .filter(|&idx| shell(idx))
        .map(|idx| match curv(idx) {
            None => (1usize, 0usize),
            Some((_, _, _, c)) => (0, c as usize),
        })
        .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
    Ok(Integrals {
        volume,
        area,
        total_h,
        total_k,
        tv: g.extent_volume(),
        eps,
        degenerate,
        clamped,
    })
}

/// Derived bone metrics from the raw integrals.
pub fn bone_metrics(m: &Integrals) -> Result<MorphometryReport> {
    if !(m.area > 0.0) {
        return Err(Error::EmptySurface);
    }
    let mean_h = m.total_h / m.area;
    let chi = m.total_k / (2.0 * std::f64::consts::PI);
    Ok(MorphometryReport {
        volume: m.volume,
        area: m.area,
        mean_h,
        mean_k: m.total_k / m.area,
        total_h: m.total_h,
        total_k: m.total_k,
        chi,
        tv: m.tv,
        bvtv: m.volume / m.tv,
        bs: m.area,
        smi: 12.0 * mean_h * m.volume / m.area,
        tbpf: 2.0 * mean_h,
        connd: (1.0 - chi) / m.tv,
        eps: m.eps,
        degenerate: m.degenerate,
        clamped: m.clamped,
    })
}

/// Integrals followed by [`bone_metrics`].
pub fn measure(phi: &ScalarField, eps: f64) -> Result<MorphometryReport> {
    bone_metrics(&integrals(phi, eps)?)
}
