//! Fourth-order central differences with mirrored boundaries.

use rayon::prelude::*;

use super::{ScalarField, Vec3};
use crate::error::{Error, Result};

const D1: [f64; 5] = [1.0 / 12.0, -8.0 / 12.0, 0.0, 8.0 / 12.0, -1.0 / 12.0];
const D2: [f64; 5] = [
    -1.0 / 12.0,
    16.0 / 12.0,
    -30.0 / 12.0,
    16.0 / 12.0,
    -1.0 / 12.0,
];

/// Gradient and Hessian fields. Hessian components are ordered
/// `xx, yy, zz, xy, xz, yz`.
#[derive(Debug, Clone)]
pub struct Derivatives {
    pub gradient: [ScalarField; 3],
    pub hessian: [ScalarField; 6],
}

fn check_dims(field: &ScalarField) -> Result<()> {
    if field.geometry.dims.iter().any(|&n| n < 5) {
        return Err(Error::GridTooSmall(format!(
            "fourth-order stencils need 5 samples per axis, got {:?}",
            field.geometry.dims
        )));
    }
    Ok(())
}

const AXES: [[isize; 3]; 3] = [[1, 0, 0], [0, 1, 0], [0, 0, 1]];

#[inline]
fn sample(
    field: &ScalarField,
    p: [isize; 3],
    a: [isize; 3],
    s: isize,
    b: [isize; 3],
    t: isize,
) -> f64 {
    field.get_mirrored(
        p[0] + a[0] * s + b[0] * t,
        p[1] + a[1] * s + b[1] * t,
        p[2] + a[2] * s + b[2] * t,
    )
}

/// Gradient at voxel `(i, j, k)`.
pub fn gradient4(field: &ScalarField, i: usize, j: usize, k: usize) -> Vec3 {
    let p = [i as isize, j as isize, k as isize];
    let h = field.geometry.spacing;
    let mut g = [0.0; 3];
    for (a, ga) in g.iter_mut().enumerate() {
        let mut acc = 0.0;
        for (s, c) in D1.iter().enumerate() {
            if *c != 0.0 {
                acc += c * sample(field, p, AXES[a], s as isize - 2, [0; 3], 0);
            }
        }
        *ga = acc / h[a];
    }
    g
}

/// Gradient and Hessian at voxel `(i, j, k)`.
pub fn gradient_hessian4(field: &ScalarField, i: usize, j: usize, k: usize) -> (Vec3, [f64; 6]) {
    let p = [i as isize, j as isize, k as isize];
    let h = field.geometry.spacing;
    let g = gradient4(field, i, j, k);
    let mut hess = [0.0; 6];
    for a in 0..3 {
        let mut acc = 0.0;
        for (s, c) in D2.iter().enumerate() {
            acc += c * sample(field, p, AXES[a], s as isize - 2, [0; 3], 0);
        }
        hess[a] = acc / (h[a] * h[a]);
    }
    for (slot, (a, b)) in [(0usize, 1usize), (0, 2), (1, 2)].into_iter().enumerate() {
        let mut acc = 0.0;
        for (s, cs) in D1.iter().enumerate() {
            if *cs == 0.0 {
                continue;
            }
            for (t, ct) in D1.iter().enumerate() {
                if *ct == 0.0 {
                    continue;
                }
                acc += cs * ct * sample(field, p, AXES[a], s as isize - 2, AXES[b], t as isize - 2);
            }
        }
        hess[3 + slot] = acc / (h[a] * h[b]);
    }
    (g, hess)
}

/// Per-voxel gradient and Hessian of `field`.
pub fn derivatives4(field: &ScalarField) -> Result<Derivatives> {
    check_dims(field)?;
    let g = field.geometry;
    let per_voxel: Vec<(Vec3, [f64; 6])> = (0..g.len())
        .into_par_iter()
        .map(|idx| {
            let [i, j, k] = g.coords(idx);
            gradient_hessian4(field, i, j, k)
        })
        .collect();
    let component = |f: &dyn Fn(&(Vec3, [f64; 6])) -> f64| ScalarField {
        geometry: g,
        values: per_voxel.iter().map(f).collect(),
    };
    Ok(Derivatives {
        gradient: [
            component(&|v| v.0[0]),
            component(&|v| v.0[1]),
            component(&|v| v.0[2]),
        ],
        hessian: [
            component(&|v| v.1[0]),
            component(&|v| v.1[1]),
            component(&|v| v.1[2]),
            component(&|v| v.1[3]),
            component(&|v| v.1[4]),
            component(&|v| v.1[5]),
        ],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::volume::GridGeometry;
    use proptest::prelude::*;

    fn grid(h: f64) -> GridGeometry {
        GridGeometry::new([9, 9, 9], [h, h * 1.25, h * 0.75], [-1.0, 0.5, -2.0]).unwrap()
    }

    #[test]
    fn linear_field() {
        let f = ScalarField::from_fn(grid(0.5), |x| 2.0 * x[0] - 3.0 * x[1] + 0.5 * x[2] + 1.0);
        let d = derivatives4(&f).unwrap();
        let idx = f.geometry.index(4, 4, 4);
        assert!((d.gradient[0].values[idx] - 2.0).abs() < 1e-12);
        assert!((d.gradient[1].values[idx] + 3.0).abs() < 1e-12);
        assert!((d.gradient[2].values[idx] - 0.5).abs() < 1e-12);
        for hc in &d.hessian {
            assert!(hc.values[idx].abs() < 1e-11);
        }
    }

    #[test]
    fn quadratic_second_derivative() {
        let f = ScalarField::from_fn(grid(0.3), |x| x[0] * x[0]);
        let (_, h) = gradient_hessian4(&f, 4, 3, 5);
        assert!((h[0] - 2.0).abs() < 1e-10);
    }

    #[test]
    fn quartic_odd_symmetry() {
        let g = GridGeometry::new([9, 5, 5], [1.0; 3], [-4.0, 0.0, 0.0]).unwrap();
        let f = ScalarField::from_fn(g, |x| x[0].powi(4));
        let grad = gradient4(&f, 4, 2, 2);
        assert_eq!(grad[0], 0.0);
    }

    #[test]
    fn too_small() {
        let g = GridGeometry::new([4, 9, 9], [1.0; 3], [0.0; 3]).unwrap();
        assert!(derivatives4(&ScalarField::filled(g, 0.0)).is_err());
    }

    proptest! {
        #[test]
        fn quartic_polynomials_differentiate_exactly(c in proptest::collection::vec(-2.0f64..2.0, 15)) {
            // x^a y^b z^c with a + b + c <= 4: first derivatives are exact at interior voxels.
            let monomials: Vec<[i32; 3]> = (0..=4).flat_map(|a| (0..=4 - a).flat_map(move |b| (0..=4 - a - b).map(move |cc| [a, b, cc]))).take(15).collect();
            let eval = |x: Vec3| monomials.iter().zip(&c).map(|(m, w)| w * x[0].powi(m[0]) * x[1].powi(m[1]) * x[2].powi(m[2])).sum::<f64>();
            let deriv = |x: Vec3, axis: usize| monomials.iter().zip(&c).map(|(m, w)| {
                if m[axis] == 0 { return 0.0; }
                let mut e = *m; e[axis] -= 1;
                w * m[axis] as f64 * x[0].powi(e[0]) * x[1].powi(e[1]) * x[2].powi(e[2])
            }).sum::<f64>();
            let f = ScalarField::from_fn(grid(0.4), eval);
            for (i, j, k) in [(2, 2, 2), (4, 5, 3), (6, 6, 6)] {
                let got = gradient4(&f, i, j, k);
                let x = f.geometry.world(i, j, k);
                for a in 0..3 {
                    let want = deriv(x, a);
                    prop_assert!((got[a] - want).abs() <= 1e-9 * want.abs().max(1.0));
                }
            }
        }
    }
}
