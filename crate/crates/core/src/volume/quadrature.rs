use rayon::prelude::*;

use super::{GridGeometry, MaskField, ScalarField};
use crate::error::{Error, Result};

/// Composite Simpson weights for `n` samples at spacing `h`.
///
/// Even sample counts integrate the last interval with the trapezoid rule;
/// two samples fall back to the trapezoid rule entirely. A single sample is
/// a degenerate axis and gets weight one.
pub fn simpson_weights(n: usize, h: f64) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![1.0],
        2 => vec![0.5 * h, 0.5 * h],
        _ => {
            let m = if n % 2 == 1 { n } else { n - 1 };
            let mut w = vec![0.0; n];
            for (i, wi) in w.iter_mut().enumerate().take(m) {
                *wi = if i == 0 || i == m - 1 {
                    h / 3.0
                } else if i % 2 == 1 {
                    4.0 * h / 3.0
                } else {
                    2.0 * h / 3.0
                };
            }
            if m < n {
                w[n - 2] += 0.5 * h;
                w[n - 1] += 0.5 * h;
            }
            w
        }
    }
}

/// Integrates `integrand(idx)` over the grid with separable Simpson weights.
/// Slabs are reduced in a fixed order, so the result does not depend on
/// thread scheduling.
pub(crate) fn integrate_with(
    geometry: &GridGeometry,
    integrand: impl Fn(usize) -> f64 + Sync,
) -> Result<f64> {
    if geometry.dims.iter().all(|&n| n < 2) {
        return Err(Error::GridTooSmall(
            "Simpson integration needs at least one axis with two samples".into(),
        ));
    }
    let [nx, ny, nz] = geometry.dims;
    let wx = simpson_weights(nx, geometry.spacing[0]);
    let wy = simpson_weights(ny, geometry.spacing[1]);
    let wz = simpson_weights(nz, geometry.spacing[2]);
    let slabs: Vec<f64> = (0..nz)
        .into_par_iter()
        .map(|k| {
            let mut slab = 0.0;
            for j in 0..ny {
                let mut row = 0.0;
                let base = nx * (j + ny * k);
                for i in 0..nx {
                    let v = integrand(base + i);
                    if v != 0.0 {
                        row += wx[i] * v;
                    }
                }
                slab += wy[j] * row;
            }
            wz[k] * slab
        })
        .collect();
    Ok(slabs.iter().sum())
}

/// `∫ field dV` over the grid extent.
pub fn integrate_simpson(field: &ScalarField) -> Result<f64> {
    integrate_with(&field.geometry, |idx| field.values[idx])
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct Norms {
    /// Mean absolute difference over the mask.
    pub l1: f64,
    pub linf: f64,
    pub count: usize,
}

/// Error norms restricted to the masked voxels.
pub fn error_norms(
    candidate: &ScalarField,
    truth: &ScalarField,
    mask: &MaskField,
) -> Result<Norms> {
    candidate.check_same_grid(&truth.geometry)?;
    if mask.geometry != candidate.geometry {
        return Err(Error::GeometryMismatch);
    }
    let (mut sum, mut max, mut count) = (0.0f64, 0.0f64, 0usize);
    for idx in mask.indices() {
        let d = (candidate.values[idx] - truth.values[idx]).abs();
        sum += d;
        max = max.max(d);
        count += 1;
    }
    if count == 0 {
        return Err(Error::EmptyMask);
    }
    Ok(Norms {
        l1: sum / count as f64,
        linf: max,
        count,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn line(n: usize, h: f64) -> GridGeometry {
        GridGeometry::new([n, 1, 1], [h, 1.0, 1.0], [0.0; 3]).unwrap()
    }

    #[test]
    fn quadratic_and_cubic_are_exact() {
        let g = line(5, 0.5);
        let sq = ScalarField::from_fn(g, |x| x[0] * x[0]);
        assert!((integrate_simpson(&sq).unwrap() - 8.0 / 3.0).abs() < 1e-14);
        let cube = ScalarField::from_fn(g, |x| x[0].powi(3));
        assert!((integrate_simpson(&cube).unwrap() - 4.0).abs() < 1e-14);
    }

    #[test]
    fn constant_times_volume() {
        let g = GridGeometry::new([5, 7, 9], [0.5, 0.25, 2.0], [1.0; 3]).unwrap();
        let f = ScalarField::filled(g, 3.0);
        let v = 2.0 * 1.5 * 16.0;
        assert!((integrate_simpson(&f).unwrap() - 3.0 * v).abs() < 1e-12);
    }

    #[test]
    fn even_counts_use_trailing_trapezoid() {
        let w = simpson_weights(4, 1.0);
        assert_eq!(w, vec![1.0 / 3.0, 4.0 / 3.0, 1.0 / 3.0 + 0.5, 0.5]);
        assert_eq!(simpson_weights(2, 2.0), vec![1.0, 1.0]);
        // Linear functions stay exact.
        let f = ScalarField::from_fn(line(6, 0.5), |x| 2.0 * x[0] + 1.0);
        assert!((integrate_simpson(&f).unwrap() - (2.5 * 2.5 + 2.5)).abs() < 1e-13);
    }

    #[test]
    fn all_degenerate_axes_rejected() {
        let g = GridGeometry::new([1, 1, 1], [1.0; 3], [0.0; 3]).unwrap();
        assert!(integrate_simpson(&ScalarField::filled(g, 1.0)).is_err());
    }

    #[test]
    fn norms() {
        let g = line(4, 1.0);
        let truth = ScalarField::filled(g, 0.0);
        let cand = ScalarField::new(g, vec![1.0, -2.0, 3.0, 100.0]).unwrap();
        let mask = MaskField::from_fn(g, |i| i < 3);
        let n = error_norms(&cand, &truth, &mask).unwrap();
        assert_eq!((n.l1, n.linf, n.count), (2.0, 3.0, 3));
        let same = error_norms(&truth, &truth, &mask).unwrap();
        assert_eq!((same.l1, same.linf), (0.0, 0.0));
        assert!(matches!(
            error_norms(&cand, &truth, &MaskField::empty(g)),
            Err(Error::EmptyMask)
        ));
    }

    proptest! {
        #[test]
        fn separable_cubics_exact(
            a in proptest::array::uniform4(-3.0f64..3.0),
            b in proptest::array::uniform4(-3.0f64..3.0),
            c in proptest::array::uniform4(-3.0f64..3.0),
            n in prop_oneof![Just(3usize), Just(5), Just(9)],
            h in 0.1f64..1.0,
        ) {
            let p = |q: [f64; 4], t: f64| q[0] + q[1] * t + q[2] * t * t + q[3] * t * t * t;
            let ip = |q: [f64; 4], t: f64| q[0] * t + q[1] * t * t / 2.0 + q[2] * t.powi(3) / 3.0 + q[3] * t.powi(4) / 4.0;
            let g = GridGeometry::new([n, n + 2, n], [h, h * 0.5, h * 1.5], [0.0; 3]).unwrap();
            let f = ScalarField::from_fn(g, |x| p(a, x[0]) * p(b, x[1]) * p(c, x[2]));
            let lx = (n - 1) as f64 * h;
            let ly = (n + 1) as f64 * h * 0.5;
            let lz = (n - 1) as f64 * h * 1.5;
            let exact = ip(a, lx) * ip(b, ly) * ip(c, lz);
            let got = integrate_simpson(&f).unwrap();
            prop_assert!((got - exact).abs() <= 1e-12 * exact.abs().max(1.0), "{} vs {}", got, exact);
        }
    }
}
