//! Rectilinear 3-D grids and the fields sampled on them.
//!
//! Every field in the crate stores its samples in a flat vector with the
//! x index varying fastest: the voxel `(i, j, k)` lives at
//! `i + nx * (j + ny * k)`. The world position of that voxel is
//! `origin + (i, j, k) * spacing`, componentwise.

mod filter;
mod metaimage;
mod quadrature;
mod stencil;

pub use filter::gaussian_smooth;
pub use metaimage::{read_metaimage, write_metaimage, write_metaimage_with, ElementType};
pub(crate) use quadrature::integrate_with;
pub use quadrature::{error_norms, integrate_simpson, simpson_weights, Norms};
pub use stencil::{derivatives4, gradient4, gradient_hessian4, Derivatives};

use crate::error::{Error, Result};

pub type Vec3 = [f64; 3];

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct GridGeometry {
    pub dims: [usize; 3],
    pub spacing: Vec3,
    pub origin: Vec3,
}

impl GridGeometry {
    pub fn new(dims: [usize; 3], spacing: Vec3, origin: Vec3) -> Result<Self> {
        if dims.iter().any(|&n| n == 0) {
            return Err(Error::InvalidArgument(format!(
                "dims must be positive, got {dims:?}"
            )));
        }
        if spacing.iter().any(|&h| !(h > 0.0 && h.is_finite())) {
            return Err(Error::InvalidArgument(format!(
                "spacing must be positive and finite, got {spacing:?}"
            )));
        }
        if origin.iter().any(|o| !o.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "origin must be finite, got {origin:?}"
            )));
        }
        Ok(Self {
            dims,
            spacing,
            origin,
        })
    }

    /// Isotropic grid with `n` nodes per axis spanning `[lo, hi]` inclusive.
    pub fn cube(n: usize, lo: f64, hi: f64) -> Result<Self> {
        if n < 2 || !(hi > lo) {
            return Err(Error::InvalidArgument(format!(
                "cube needs n >= 2 and hi > lo, got n={n}, [{lo}, {hi}]"
            )));
        }
        let h = (hi - lo) / (n - 1) as f64;
        Self::new([n; 3], [h; 3], [lo; 3])
    }

    pub fn len(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.dims[0] * (j + self.dims[1] * k)
    }

    #[inline]
    pub fn coords(&self, idx: usize) -> [usize; 3] {
        let nx = self.dims[0];
        let ny = self.dims[1];
        [idx % nx, (idx / nx) % ny, idx / (nx * ny)]
    }

    #[inline]
    pub fn world(&self, i: usize, j: usize, k: usize) -> Vec3 {
        [
            self.origin[0] + i as f64 * self.spacing[0],
            self.origin[1] + j as f64 * self.spacing[1],
            self.origin[2] + k as f64 * self.spacing[2],
        ]
    }

    #[inline]
    pub fn world_of(&self, idx: usize) -> Vec3 {
        let [i, j, k] = self.coords(idx);
        self.world(i, j, k)
    }

    /// Continuous (fractional) voxel coordinates of a world point.
    #[inline]
    pub fn to_voxel(&self, x: Vec3) -> Vec3 {
        [
            (x[0] - self.origin[0]) / self.spacing[0],
            (x[1] - self.origin[1]) / self.spacing[1],
            (x[2] - self.origin[2]) / self.spacing[2],
        ]
    }

    /// Smallest voxel edge; the length scale `h` used by all tolerances.
    pub fn min_spacing(&self) -> f64 {
        self.spacing.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn voxel_volume(&self) -> f64 {
        self.spacing.iter().product()
    }

    /// Physical volume of the box spanned by the voxel centres. Degenerate
    /// (single-sample) axes contribute a factor of one.
    pub fn extent_volume(&self) -> f64 {
        (0..3)
            .map(|a| {
                if self.dims[a] > 1 {
                    (self.dims[a] - 1) as f64 * self.spacing[a]
                } else {
                    1.0
                }
            })
            .product()
    }

    pub fn diagonal(&self) -> f64 {
        (0..3)
            .map(|a| ((self.dims[a] - 1) as f64 * self.spacing[a]).powi(2))
            .sum::<f64>()
            .sqrt()
    }
}

/// Whole-sample symmetric reflection of an index into `0..n`
/// (`-1 -> 1`, `n -> n - 2`), repeated as needed.
#[inline]
pub fn mirror_index(i: isize, n: usize) -> usize {
    if n == 1 {
        return 0;
    }
    let period = 2 * (n as isize - 1);
    let mut m = i.rem_euclid(period);
    if m >= n as isize {
        m = period - m;
    }
    m as usize
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    pub geometry: GridGeometry,
    pub values: Vec<f64>,
}

impl ScalarField {
    pub fn new(geometry: GridGeometry, values: Vec<f64>) -> Result<Self> {
        if values.len() != geometry.len() {
            return Err(Error::InvalidArgument(format!(
                "field has {} values, geometry needs {}",
                values.len(),
                geometry.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("field values must be finite".into()));
        }
        Ok(Self { geometry, values })
    }

    pub fn filled(geometry: GridGeometry, value: f64) -> Self {
        Self {
            geometry,
            values: vec![value; geometry.len()],
        }
    }

    /// Samples `f` at every voxel centre (world coordinates).
    pub fn from_fn(geometry: GridGeometry, f: impl Fn(Vec3) -> f64 + Sync) -> Self {
        use rayon::prelude::*;
        let values = (0..geometry.len())
            .into_par_iter()
            .map(|idx| f(geometry.world_of(idx)))
            .collect();
        Self { geometry, values }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.values[self.geometry.index(i, j, k)]
    }

    /// Value at a possibly out-of-range index, mirrored back into the grid.
    #[inline]
    pub fn get_mirrored(&self, i: isize, j: isize, k: isize) -> f64 {
        let [nx, ny, nz] = self.geometry.dims;
        self.get(
            mirror_index(i, nx),
            mirror_index(j, ny),
            mirror_index(k, nz),
        )
    }

    pub fn map(&self, f: impl Fn(f64) -> f64 + Sync) -> Self {
        use rayon::prelude::*;
        Self {
            geometry: self.geometry,
            values: self.values.par_iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    pub(crate) fn check_same_grid(&self, other: &GridGeometry) -> Result<()> {
        if &self.geometry == other {
            Ok(())
        } else {
            Err(Error::GeometryMismatch)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MaskField {
    pub geometry: GridGeometry,
    pub bits: Vec<bool>,
}

impl MaskField {
    pub fn empty(geometry: GridGeometry) -> Self {
        Self {
            geometry,
            bits: vec![false; geometry.len()],
        }
    }

    pub fn full(geometry: GridGeometry) -> Self {
        Self {
            geometry,
            bits: vec![true; geometry.len()],
        }
    }

    pub fn from_fn(geometry: GridGeometry, f: impl Fn(usize) -> bool) -> Self {
        Self {
            geometry,
            bits: (0..geometry.len()).map(f).collect(),
        }
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.bits
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(|(i, _)| i)
    }

    pub fn complement(&self) -> Self {
        Self {
            geometry: self.geometry,
            bits: self.bits.iter().map(|b| !b).collect(),
        }
    }

    /// Voxels at least `collar` samples away from every grid face.
    pub fn interior(geometry: GridGeometry, collar: usize) -> Self {
        let [nx, ny, nz] = geometry.dims;
        Self::from_fn(geometry, |idx| {
            let [i, j, k] = geometry.coords(idx);
            i >= collar
                && j >= collar
                && k >= collar
                && i + collar < nx
                && j + collar < ny
                && k + collar < nz
        })
    }

    pub fn as_field(&self) -> ScalarField {
        ScalarField {
            geometry: self.geometry,
            values: self
                .bits
                .iter()
                .map(|&b| if b { 1.0 } else { 0.0 })
                .collect(),
        }
    }
}
