use rayon::prelude::*;

use super::{mirror_index, ScalarField};
use crate::error::{Error, Result};

/// Truncated, renormalised 1-D Gaussian taps for standard deviation
/// `sigma_vox` (in samples), radius `ceil(3 sigma)`.
pub(crate) fn gaussian_kernel(sigma_vox: f64) -> Vec<f64> {
    let radius = (3.0 * sigma_vox).ceil() as isize;
    let mut taps: Vec<f64> = (-radius..=radius)
        .map(|t| (-0.5 * (t as f64 / sigma_vox).powi(2)).exp())
        .collect();
    let sum: f64 = taps.iter().sum();
    taps.iter_mut().for_each(|t| *t /= sum);
    taps
}

/// Convolves every line along `axis` with the centred `kernel`, mirroring
/// at the ends.
pub(crate) fn convolve_axis(field: &ScalarField, axis: usize, kernel: &[f64]) -> Vec<f64> {
    let g = field.geometry;
    let n = g.dims[axis];
    let radius = (kernel.len() / 2) as isize;
    let stride = match axis {
        0 => 1,
        1 => g.dims[0],
        _ => g.dims[0] * g.dims[1],
    };
    let src = &field.values;
    (0..g.len())
        .into_par_iter()
        .map(|idx| {
            let pos = g.coords(idx)[axis] as isize;
            let base = idx - pos as usize * stride;
            kernel
                .iter()
                .enumerate()
                .map(|(t, w)| w * src[base + mirror_index(pos + t as isize - radius, n) * stride])
                .sum()
        })
        .collect()
}

/// Separable Gaussian blur with physical standard deviation `sigma`.
pub fn gaussian_smooth(field: &ScalarField, sigma: f64) -> Result<ScalarField> {
    if !(sigma >= 0.0) || !sigma.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "sigma must be non-negative, got {sigma}"
        )));
    }
    if sigma == 0.0 {
        return Ok(field.clone());
    }
    let mut out = field.clone();
    for axis in 0..3 {
        if field.geometry.dims[axis] == 1 {
            continue;
        }
        let kernel = gaussian_kernel(sigma / field.geometry.spacing[axis]);
        out.values = convolve_axis(&out, axis, &kernel);
    }
    Ok(out)
}
