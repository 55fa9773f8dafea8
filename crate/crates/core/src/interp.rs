//! Continuous reconstruction of sampled fields with B-splines.
//!
//! Cubic interpolants are built by the classic causal/anti-causal recursive
//! prefilter (pole `z = sqrt(3) - 2`) with whole-sample mirror boundaries,
//! so the spline passes through every sample and can be differentiated
//! analytically. Linear interpolants keep the samples as coefficients.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::volume::{mirror_index, GridGeometry, ScalarField, Vec3};

const CUBIC_POLE: f64 = -0.267_949_192_431_122_7; // sqrt(3) - 2
const HORIZON_TOL: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct SplineInterpolant {
    geometry: GridGeometry,
    order: u32,
    coefficients: Vec<f64>,
}

fn causal_init(c: &[f64], z: f64) -> f64 {
    let n = c.len();
    let horizon = (HORIZON_TOL.ln() / z.abs().ln()).ceil() as usize;
    if horizon < n {
        let mut zn = z;
        let mut sum = c[0];
        for &ck in &c[1..horizon] {
            sum += zn * ck;
            zn *= z;
        }
        sum
    } else {
        // Full mirror-symmetric sum.
        let iz = 1.0 / z;
        let mut zn = z;
        let mut z2n = z.powi(n as i32 - 1);
        let mut sum = c[0] + z2n * c[n - 1];
        z2n *= z2n * iz;
        for &ck in &c[1..n - 1] {
            sum += (zn + z2n) * ck;
            zn *= z;
            z2n *= iz;
        }
        sum / (1.0 - zn * zn)
    }
}

fn anticausal_init(c: &[f64], z: f64) -> f64 {
    let n = c.len();
    (z / (z * z - 1.0)) * (z * c[n - 2] + c[n - 1])
}

/// In-place cubic prefilter of one line of samples.
fn prefilter_line(c: &mut [f64]) {
    let n = c.len();
    if n < 2 {
        return;
    }
    let z = CUBIC_POLE;
    let gain = (1.0 - z) * (1.0 - 1.0 / z);
    c.iter_mut().for_each(|v| *v *= gain);
    c[0] = causal_init(c, z);
    for k in 1..n {
        c[k] += z * c[k - 1];
    }
    c[n - 1] = anticausal_init(c, z);
    for k in (0..n - 1).rev() {
        c[k] = z * (c[k + 1] - c[k]);
    }
}

fn prefilter_axis(values: &mut [f64], dims: [usize; 3], axis: usize) {
    let [nx, ny, nz] = dims;
    let n = dims[axis];
    if n < 2 {
        return;
    }
    match axis {
        0 => values.par_chunks_mut(nx).for_each(prefilter_line),
        1 => values.par_chunks_mut(nx * ny).for_each(|slab| {
            let mut line = vec![0.0; ny];
            for i in 0..nx {
                for j in 0..ny {
                    line[j] = slab[i + nx * j];
                }
                prefilter_line(&mut line);
                for j in 0..ny {
                    slab[i + nx * j] = line[j];
                }
            }
        }),
        _ => {
            // Gather z-lines by column; each column is independent.
            let plane = nx * ny;
            let columns: Vec<Vec<f64>> = (0..plane)
                .into_par_iter()
                .map(|p| {
                    let mut line: Vec<f64> = (0..nz).map(|k| values[p + plane * k]).collect();
                    prefilter_line(&mut line);
                    line
                })
                .collect();
            for (p, line) in columns.into_iter().enumerate() {
                for (k, v) in line.into_iter().enumerate() {
                    values[p + plane * k] = v;
                }
            }
        }
    }
}

#[inline]
fn cubic_weights(t: f64) -> [f64; 4] {
    let s = 1.0 - t;
    [
        s * s * s / 6.0,
        (4.0 - 6.0 * t * t + 3.0 * t * t * t) / 6.0,
        (1.0 + 3.0 * t + 3.0 * t * t - 3.0 * t * t * t) / 6.0,
        t * t * t / 6.0,
    ]
}

#[inline]
fn cubic_derivative_weights(t: f64) -> [f64; 4] {
    let s = 1.0 - t;
    [
        -0.5 * s * s,
        (-4.0 * t + 3.0 * t * t) / 2.0,
        (1.0 + 2.0 * t - 3.0 * t * t) / 2.0,
        0.5 * t * t,
    ]
}

/// Mirrors a continuous coordinate into `[0, n - 1]`.
#[inline]
fn mirror_coordinate(u: f64, n: usize) -> f64 {
    if n == 1 {
        return 0.0;
    }
    let last = (n - 1) as f64;
    if (0.0..=last).contains(&u) {
        return u;
    }
    let period = 2.0 * last;
    let m = u.rem_euclid(period);
    if m > last {
        period - m
    } else {
        m
    }
}

impl SplineInterpolant {
    /// Builds an interpolant of `order` 1 (linear) or 3 (cubic).
    pub fn new(field: &ScalarField, order: u32) -> Result<Self> {
        if order != 1 && order != 3 {
            return Err(Error::InvalidArgument(format!(
                "spline order must be 1 or 3, got {order}"
            )));
        }
        let dims = field.geometry.dims;
        if dims.iter().any(|&n| n < order as usize + 1) {
            return Err(Error::GridTooSmall(format!(
                "order {order} spline needs {} samples per axis, got {dims:?}",
                order + 1
            )));
        }
        let mut coefficients = field.values.clone();
        if order == 3 {
            for axis in 0..3 {
                prefilter_axis(&mut coefficients, dims, axis);
            }
        }
        Ok(Self {
            geometry: field.geometry,
            order,
            coefficients,
        })
    }

    pub fn geometry(&self) -> &GridGeometry {
        &self.geometry
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    /// True when `x` lies inside the physical extent of the grid.
    pub fn contains(&self, x: Vec3) -> bool {
        let u = self.geometry.to_voxel(x);
        (0..3).all(|a| u[a] >= 0.0 && u[a] <= (self.geometry.dims[a] - 1) as f64)
    }

    #[inline]
    fn coefficient(&self, i: isize, j: isize, k: isize) -> f64 {
        let [nx, ny, nz] = self.geometry.dims;
        let idx = self.geometry.index(
            mirror_index(i, nx),
            mirror_index(j, ny),
            mirror_index(k, nz),
        );
        self.coefficients[idx]
    }

    /// Base index and fractional offset along each axis.
    #[inline]
    fn locate(&self, x: Vec3) -> ([isize; 3], Vec3) {
        let u = self.geometry.to_voxel(x);
        let mut base = [0isize; 3];
        let mut frac = [0.0; 3];
        for a in 0..3 {
            let n = self.geometry.dims[a];
            let ua = mirror_coordinate(u[a], n);
            let mut b = ua.floor();
            if n > 1 && b as usize >= n - 1 {
                b = (n - 2) as f64;
            }
            base[a] = b as isize;
            frac[a] = ua - b;
        }
        (base, frac)
    }

    pub fn eval(&self, x: Vec3) -> f64 {
        let (base, t) = self.locate(x);
        if self.order == 1 {
            let mut acc = 0.0;
            for dk in 0..2 {
                let wz = if dk == 0 { 1.0 - t[2] } else { t[2] };
                for dj in 0..2 {
                    let wy = if dj == 0 { 1.0 - t[1] } else { t[1] };
                    for di in 0..2 {
                        let wx = if di == 0 { 1.0 - t[0] } else { t[0] };
                        acc += wx
                            * wy
                            * wz
                            * self.coefficient(base[0] + di, base[1] + dj, base[2] + dk);
                    }
                }
            }
            return acc;
        }
        let wx = cubic_weights(t[0]);
        let wy = cubic_weights(t[1]);
        let wz = cubic_weights(t[2]);
        let mut acc = 0.0;
        for (c, wzc) in wz.iter().enumerate() {
            let k = base[2] + c as isize - 1;
            let mut plane = 0.0;
            for (b, wyb) in wy.iter().enumerate() {
                let j = base[1] + b as isize - 1;
                let mut row = 0.0;
                for (a, wxa) in wx.iter().enumerate() {
                    row += wxa * self.coefficient(base[0] + a as isize - 1, j, k);
                }
                plane += wyb * row;
            }
            acc += wzc * plane;
        }
        acc
    }

    /// Value and world-space gradient of the cubic interpolant.
    pub fn eval_with_gradient(&self, x: Vec3) -> Result<(f64, Vec3)> {
        if self.order < 3 {
            return Err(Error::InvalidArgument(
                "gradients need a cubic interpolant".into(),
            ));
        }
        let (base, t) = self.locate(x);
        let w = [
            cubic_weights(t[0]),
            cubic_weights(t[1]),
            cubic_weights(t[2]),
        ];
        let d = [
            cubic_derivative_weights(t[0]),
            cubic_derivative_weights(t[1]),
            cubic_derivative_weights(t[2]),
        ];
        let [nx, ny, nz] = self.geometry.dims;
        // Resolve the 4 mirrored indices per axis once.
        let ix: [usize; 4] = std::array::from_fn(|a| mirror_index(base[0] + a as isize - 1, nx));
        let iy: [usize; 4] = std::array::from_fn(|a| mirror_index(base[1] + a as isize - 1, ny));
        let iz: [usize; 4] = std::array::from_fn(|a| mirror_index(base[2] + a as isize - 1, nz));
        let (mut v, mut gx, mut gy, mut gz) = (0.0, 0.0, 0.0, 0.0);
        for c in 0..4 {
            let (mut pv, mut px, mut py, mut pz) = (0.0, 0.0, 0.0, 0.0);
            for b in 0..4 {
                let row_base = nx * (iy[b] + ny * iz[c]);
                let (mut rv, mut rx) = (0.0, 0.0);
                for a in 0..4 {
                    let coef = self.coefficients[row_base + ix[a]];
                    rv += w[0][a] * coef;
                    rx += d[0][a] * coef;
                }
                pv += w[1][b] * rv;
                px += w[1][b] * rx;
                py += d[1][b] * rv;
                pz += w[1][b] * rv;
            }
            v += w[2][c] * pv;
            gx += w[2][c] * px;
            gy += w[2][c] * py;
            gz += d[2][c] * pz;
        }
        let h = self.geometry.spacing;
        Ok((v, [gx / h[0], gy / h[1], gz / h[2]]))
    }

    pub fn eval_gradient(&self, x: Vec3) -> Result<Vec3> {
        self.eval_with_gradient(x).map(|(_, g)| g)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn geometry() -> GridGeometry {
        GridGeometry::new([9, 7, 8], [0.5, 0.4, 0.6], [-2.0, -1.0, 0.5]).unwrap()
    }

    #[test]
    fn weights_partition_unity() {
        for t in [0.0, 0.2, 0.5, 0.99] {
            let w = cubic_weights(t);
            assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-15);
            let d = cubic_derivative_weights(t);
            assert!(d.iter().sum::<f64>().abs() < 1e-15);
        }
    }

    #[test]
    fn constant_field() {
        let f = ScalarField::filled(geometry(), 2.5);
        let s = SplineInterpolant::new(&f, 3).unwrap();
        for x in [[-2.0, -1.0, 0.5], [0.13, 0.77, 2.2], [1.99, 1.4, 4.7]] {
            assert!((s.eval(x) - 2.5).abs() < 1e-12);
            let g = s.eval_gradient(x).unwrap();
            assert!(g.iter().all(|c| c.abs() < 1e-12));
        }
    }

    #[test]
    fn linear_interpolant_has_no_gradient() {
        let f = ScalarField::filled(geometry(), 1.0);
        let s = SplineInterpolant::new(&f, 1).unwrap();
        assert!(s.eval_gradient([0.0; 3]).is_err());
        assert!(SplineInterpolant::new(&f, 2).is_err());
    }

    #[test]
    fn too_small_grid() {
        let g = GridGeometry::new([3, 9, 9], [1.0; 3], [0.0; 3]).unwrap();
        assert!(SplineInterpolant::new(&ScalarField::filled(g, 0.0), 3).is_err());
        assert!(SplineInterpolant::new(&ScalarField::filled(g, 0.0), 1).is_ok());
    }

    /// Grid large enough that the mirror kink of an affine ramp decays below
    /// 1e-10 in the middle voxels.
    fn wide_geometry() -> GridGeometry {
        GridGeometry::new([48, 48, 48], [0.5, 0.4, 0.6], [-12.0, -9.0, -14.0]).unwrap()
    }

    #[test]
    fn linear_midpoint() {
        let f = ScalarField::from_fn(wide_geometry(), |x| 3.0 * x[0] - x[1] + 2.0 * x[2]);
        for order in [1, 3] {
            let s = SplineInterpolant::new(&f, order).unwrap();
            let x = [-0.75, 0.2, 0.7];
            assert!((s.eval(x) - (3.0 * x[0] - x[1] + 2.0 * x[2])).abs() < 1e-10);
        }
    }

    #[test]
    fn out_of_domain_points_mirror() {
        let f = ScalarField::from_fn(geometry(), |x| x[0] * x[0] + x[1]);
        let s = SplineInterpolant::new(&f, 3).unwrap();
        // Reflection about the first x sample at -2.0.
        let a = s.eval([-2.3, 0.1, 1.0]);
        let b = s.eval([-1.7, 0.1, 1.0]);
        assert!((a - b).abs() < 1e-12);
        assert!(!s.contains([-2.3, 0.1, 1.0]));
    }

    #[test]
    fn sphere_sdf_off_grid() {
        let g = GridGeometry::cube(81, -10.0, 10.0).unwrap();
        let f = ScalarField::from_fn(g, |x| {
            (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt() - 5.0
        });
        let s = SplineInterpolant::new(&f, 3).unwrap();
        assert!((s.eval([5.3, 0.0, 0.0]) - 0.3).abs() < 1e-3);
        let n = s.eval_gradient([6.0, 0.0, 0.0]).unwrap();
        assert!((n[0] - 1.0).abs() < 1e-3 && n[1].abs() < 1e-3 && n[2].abs() < 1e-3);
    }

    fn random_field(seed: &[f64]) -> ScalarField {
        let g = geometry();
        ScalarField::new(
            g,
            (0..g.len())
                .map(|i| seed[i % seed.len()] * ((i * 7919) % 13) as f64)
                .collect(),
        )
        .unwrap()
    }

    proptest! {
        #[test]
        fn reproduces_samples(seed in proptest::collection::vec(-5.0f64..5.0, 11)) {
            let f = random_field(&seed);
            let s = SplineInterpolant::new(&f, 3).unwrap();
            let scale = f.values.iter().fold(1.0f64, |m, v| m.max(v.abs()));
            for idx in 0..f.geometry.len() {
                let x = f.geometry.world_of(idx);
                prop_assert!((s.eval(x) - f.values[idx]).abs() <= 1e-8 * scale);
            }
        }

        #[test]
        fn gradient_matches_finite_differences(
            seed in proptest::collection::vec(-5.0f64..5.0, 11),
            u in proptest::array::uniform3(0.05f64..0.95),
        ) {
            let f = random_field(&seed);
            let s = SplineInterpolant::new(&f, 3).unwrap();
            let g = f.geometry;
            let x: Vec3 = std::array::from_fn(|a| g.origin[a] + (1.0 + u[a] * (g.dims[a] - 3) as f64) * g.spacing[a]);
            let grad = s.eval_gradient(x).unwrap();
            for a in 0..3 {
                let step = 1e-4 * g.spacing[a];
                let mut xp = x; xp[a] += step;
                let mut xm = x; xm[a] -= step;
                let fd = (s.eval(xp) - s.eval(xm)) / (2.0 * step);
                prop_assert!((fd - grad[a]).abs() <= 1e-5, "{} vs {}", fd, grad[a]);
            }
        }

        #[test]
        fn affine_reproduction(a in proptest::array::uniform3(-3.0f64..3.0), b in -5.0f64..5.0, u in proptest::array::uniform3(0.1f64..0.9)) {
            let g = wide_geometry();
            let f = ScalarField::from_fn(g, |x| a[0] * x[0] + a[1] * x[1] + a[2] * x[2] + b);
            let s = SplineInterpolant::new(&f, 3).unwrap();
            let x: Vec3 = std::array::from_fn(|k| g.origin[k] + (19.0 + 9.0 * u[k]) * g.spacing[k]);
            let (v, grad) = s.eval_with_gradient(x).unwrap();
            prop_assert!((v - (a[0] * x[0] + a[1] * x[1] + a[2] * x[2] + b)).abs() <= 1e-10);
            for k in 0..3 {
                prop_assert!((grad[k] - a[k]).abs() <= 1e-10);
            }
        }
    }
}
