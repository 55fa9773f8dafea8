//! Analytic test surfaces, synthetic biphasic densities and the
//! refinement-order estimator.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::phases::heaviside_eps;
use crate::volume::{GridGeometry, ScalarField, Vec3};

/// Half-width of the cubic phantom domain `[-10, 10]^3`.
pub const PHANTOM_HALF_WIDTH: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Shape {
    Sphere {
        r: f64,
    },
    /// Tube radius `a` swept around a circle of radius `c` in the xy plane.
    Torus {
        a: f64,
        c: f64,
    },
    /// Two spheres of radius `r` centred at `±d/2` on the x axis.
    DoubleSpheres {
        r: f64,
        d: f64,
    },
    /// Infinite cylinder of radius `r` along z.
    Cylinder {
        r: f64,
    },
    /// Plate `|x| <= half_width`.
    Slab {
        half_width: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnalyticSurface {
    pub shape: Shape,
    #[serde(default)]
    pub center: Vec3,
}

#[inline]
/// Exact signed distance to the union of two spheres centred at
/// `(±d/2, 0, 0)`. Outside it is the nearer sphere; inside, the nearer of
/// the two exposed caps, whose closest point is either radial or on the
/// crease circle in the plane `x = 0`.
fn double_sphere_sdf(p: Vec3, r: f64, d: f64) -> f64 {
    let c = 0.5 * d;
    let n1 = norm([p[0] - c, p[1], p[2]]);
    let n2 = norm([p[0] + c, p[1], p[2]]);
    let outside = (n1 - r).min(n2 - r);
    if outside >= 0.0 || d >= 2.0 * r {
        return outside;
    }
    let crease = (r * r - c * c).sqrt();
    let rho = (p[1] * p[1] + p[2] * p[2]).sqrt();
    let to_crease = (p[0] * p[0] + (rho - crease).powi(2)).sqrt();
    // Cap of the sphere centred at `side * c`, exposed where `side * x >= 0`.
    let cap = |n: f64, side: f64| {
        if n == 0.0 {
            return r;
        }
        let x_on_sphere = side * c + r * (p[0] - side * c) / n;
        if side * x_on_sphere >= 0.0 {
            (n - r).abs()
        } else {
            to_crease
        }
    };
    -cap(n1, 1.0).min(cap(n2, -1.0))
}

fn norm(v: Vec3) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

impl AnalyticSurface {
    pub fn new(shape: Shape) -> Result<Self> {
        let ok = match shape {
            Shape::Sphere { r } => r > 0.0,
            Shape::Torus { a, c } => a > 0.0 && c > a,
            Shape::DoubleSpheres { r, d } => r > 0.0 && d > 0.0,
            Shape::Cylinder { r } => r > 0.0,
            Shape::Slab { half_width } => half_width > 0.0,
        };
        if !ok {
            return Err(Error::InvalidArgument(format!(
                "invalid surface parameters {shape:?}"
            )));
        }
        Ok(Self {
            shape,
            center: [0.0; 3],
        })
    }

    /// Sphere of radius 5.
    pub fn sphere() -> Self {
        Self::new(Shape::Sphere { r: 5.0 }).unwrap()
    }

    /// Torus with tube radius 2 and centre-circle radius 3.
    pub fn torus() -> Self {
        Self::new(Shape::Torus { a: 2.0, c: 3.0 }).unwrap()
    }

    /// Two radius-5 spheres separated by `3√3`.
    pub fn double_spheres() -> Self {
        Self::new(Shape::DoubleSpheres {
            r: 5.0,
            d: 3.0 * 3f64.sqrt(),
        })
        .unwrap()
    }

    pub fn translated(mut self, by: Vec3) -> Self {
        for a in 0..3 {
            self.center[a] += by[a];
        }
        self
    }

    pub fn name(&self) -> &'static str {
        match self.shape {
            Shape::Sphere { .. } => "sphere",
            Shape::Torus { .. } => "torus",
            Shape::DoubleSpheres { .. } => "double_spheres",
            Shape::Cylinder { .. } => "cylinder",
            Shape::Slab { .. } => "slab",
        }
    }

    /// Parses the CLI names `sphere`, `torus`, `double_spheres` (and the
    /// auxiliary `cylinder`, `slab`) with their default parameters.
    pub fn by_name(name: &str) -> Result<Self> {
        match name {
            "sphere" => Ok(Self::sphere()),
            "torus" => Ok(Self::torus()),
            "double_spheres" | "double-spheres" => Ok(Self::double_spheres()),
            "cylinder" => Self::new(Shape::Cylinder { r: 3.0 }),
            "slab" => Self::new(Shape::Slab { half_width: 2.0 }),
            other => Err(Error::InvalidArgument(format!("unknown surface `{other}`"))),
        }
    }

    #[inline]
    fn local(&self, x: Vec3) -> Vec3 {
        [
            x[0] - self.center[0],
            x[1] - self.center[1],
            x[2] - self.center[2],
        ]
    }

    /// Signed distance (inside negative) at a world point.
    pub fn sdf(&self, x: Vec3) -> f64 {
        let p = self.local(x);
        match self.shape {
            Shape::Sphere { r } => norm(p) - r,
            Shape::Torus { a, c } => {
                let q = (p[0] * p[0] + p[1] * p[1]).sqrt() - c;
                (q * q + p[2] * p[2]).sqrt() - a
            }
            Shape::DoubleSpheres { r, d } => double_sphere_sdf(p, r, d),
            Shape::Cylinder { r } => (p[0] * p[0] + p[1] * p[1]).sqrt() - r,
            Shape::Slab { half_width } => p[0].abs() - half_width,
        }
    }

    /// Closest surface point, when it is unique and known in closed form.
    pub fn closest_point(&self, x: Vec3) -> Option<Vec3> {
        let p = self.local(x);
        let c0 = self.center;
        let back = |q: Vec3| [q[0] + c0[0], q[1] + c0[1], q[2] + c0[2]];
        let radial = |p: Vec3, centre: Vec3, r: f64| -> Option<Vec3> {
            let v = [p[0] - centre[0], p[1] - centre[1], p[2] - centre[2]];
            let n = norm(v);
            (n > 0.0).then(|| {
                [
                    centre[0] + r * v[0] / n,
                    centre[1] + r * v[1] / n,
                    centre[2] + r * v[2] / n,
                ]
            })
        };
        match self.shape {
            Shape::Sphere { r } => radial(p, [0.0; 3], r).map(back),
            Shape::Torus { a, c } => {
                let rho = (p[0] * p[0] + p[1] * p[1]).sqrt();
                if rho == 0.0 {
                    return None;
                }
                let core = [c * p[0] / rho, c * p[1] / rho, 0.0];
                radial(p, core, a).map(back)
            }
            Shape::DoubleSpheres { r, d } => {
                // Valid outside the union, where the nearer sphere wins.
                if self.sdf(x) < 0.0 || p[0] == 0.0 {
                    return None;
                }
                let side = p[0].signum() * 0.5 * d;
                radial(p, [side, 0.0, 0.0], r).map(back)
            }
            Shape::Cylinder { r } => {
                let rho = (p[0] * p[0] + p[1] * p[1]).sqrt();
                (rho > 0.0).then(|| back([r * p[0] / rho, r * p[1] / rho, p[2]]))
            }
            Shape::Slab { half_width } => {
                (p[0] != 0.0).then(|| back([p[0].signum() * half_width, p[1], p[2]]))
            }
        }
    }

    /// Distance from `x` to the medial axis (shock set) of the distance
    /// function, for the parts the phantoms exercise.
    pub fn medial_distance(&self, x: Vec3) -> f64 {
        let p = self.local(x);
        let rho = (p[0] * p[0] + p[1] * p[1]).sqrt();
        match self.shape {
            Shape::Sphere { .. } => norm(p),
            Shape::Torus { c, .. } => {
                let core = ((rho - c).powi(2) + p[2] * p[2]).sqrt();
                core.min(rho)
            }
            Shape::DoubleSpheres { d, .. } => {
                // The plane between the spheres and, inside, the segment
                // joining the centres (equidistant from the crease circle).
                let along = (p[0].abs() - 0.5 * d).max(0.0);
                let off_axis = p[1] * p[1] + p[2] * p[2];
                let segment = (along * along + off_axis).sqrt();
                p[0].abs().min(segment)
            }
            Shape::Cylinder { .. } => rho,
            Shape::Slab { .. } => p[0].abs(),
        }
    }

    /// Exact signed distance sampled on `geometry`.
    pub fn sample(&self, geometry: GridGeometry) -> ScalarField {
        ScalarField::from_fn(geometry, |x| self.sdf(x))
    }
}

/// `analytic_sdf` entry point: the surface's distance field on `geometry`.
pub fn analytic_sdf(surface: &AnalyticSurface, geometry: GridGeometry) -> ScalarField {
    surface.sample(geometry)
}

/// Phantom grid `[-10, 10]^3` at spacing `h`, endpoints included, so
/// halving `h` nests the grids.
pub fn phantom_geometry(h: f64) -> Result<GridGeometry> {
    let cells = 2.0 * PHANTOM_HALF_WIDTH / h;
    if !(h > 0.0) || (cells - cells.round()).abs() > 1e-9 {
        return Err(Error::InvalidArgument(format!(
            "phantom spacing must divide 20 evenly, got {h}"
        )));
    }
    GridGeometry::cube(
        cells.round() as usize + 1,
        -PHANTOM_HALF_WIDTH,
        PHANTOM_HALF_WIDTH,
    )
}

/// Biphasic density `ρ1 θε(-φ) + ρ2 (1 - θε(-φ))`.
pub fn synth_density(phi: &ScalarField, rho1: f64, rho2: f64, eps: f64) -> Result<ScalarField> {
    if !(eps > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "eps must be positive, got {eps}"
        )));
    }
    Ok(phi.map(|p| {
        let t = heaviside_eps(-p, eps);
        rho1 * t + rho2 * (1.0 - t)
    }))
}

/// Observed order of accuracy `log2(err_h / err_{h/2})`.
pub fn order_estimate(err_h: f64, err_h2: f64) -> Result<f64> {
    if !(err_h > 0.0 && err_h2 > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "order estimate needs positive errors, got {err_h} and {err_h2}"
        )));
    }
    Ok((err_h / err_h2).log2())
}

/// Threshold halfway between the two phase densities.
pub fn midphase_threshold(rho1: f64, rho2: f64) -> f64 {
    0.5 * (rho1 + rho2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::volume::gradient4;
    use proptest::prelude::*;

    #[test]
    fn sphere_values() {
        assert_eq!(AnalyticSurface::sphere().sdf([0.0; 3]), -5.0);
    }

    #[test]
    fn torus_values() {
        let t = AnalyticSurface::torus();
        assert_eq!(t.sdf([5.0, 0.0, 0.0]), 0.0);
        assert_eq!(t.sdf([0.0; 3]), 1.0);
        assert!(AnalyticSurface::new(Shape::Torus { a: 3.0, c: 2.0 }).is_err());
    }

    #[test]
    fn double_sphere_midpoint() {
        // The origin is nearest to the crease circle of radius sqrt(25 - 27/4).
        let v = AnalyticSurface::double_spheres().sdf([0.0; 3]);
        assert!((v + (25.0f64 - 6.75).sqrt()).abs() < 1e-14);
        assert!((v + 4.272).abs() < 1e-3);
    }

    #[test]
    fn double_sphere_matches_brute_force() {
        // Dense sampling of the exposed caps of the union boundary.
        let surf = AnalyticSurface::double_spheres();
        let (r, c) = (5.0, 1.5 * 3f64.sqrt());
        let mut pts = Vec::new();
        for it in 0..200 {
            let th = std::f64::consts::PI * (it as f64 + 0.5) / 200.0;
            for ip in 0..200 {
                let ph = 2.0 * std::f64::consts::PI * ip as f64 / 200.0;
                let u = [th.cos(), th.sin() * ph.cos(), th.sin() * ph.sin()];
                for side in [-1.0, 1.0] {
                    let q = [side * c + r * u[0], r * u[1], r * u[2]];
                    if side * q[0] >= 0.0 {
                        pts.push(q);
                    }
                }
            }
        }
        for x in [
            [0.0, 0.0, 0.0],
            [1.0, 1.0, 0.0],
            [0.3, -2.0, 3.5],
            [2.5, 0.0, 0.0],
            [-4.0, 1.0, 1.0],
            [6.0, 5.0, 0.0],
            [0.0, 7.0, 0.0],
        ] {
            let brute = pts
                .iter()
                .map(|q| norm([x[0] - q[0], x[1] - q[1], x[2] - q[2]]))
                .fold(f64::INFINITY, f64::min);
            let v = surf.sdf(x);
            assert!((v.abs() - brute).abs() < 0.1, "{x:?}: {v} vs {brute}");
            assert!(v.abs() <= brute + 1e-12);
        }
    }

    #[test]
    fn density_limits() {
        let g = GridGeometry::new([3, 1, 1], [1.0; 3], [0.0; 3]).unwrap();
        let phi = ScalarField::new(g, vec![-3.0, 0.0, 3.0]).unwrap();
        let rho = synth_density(&phi, 100.0, 0.0, 2.0).unwrap();
        assert_eq!(rho.values, vec![100.0, 50.0, 0.0]);
    }

    #[test]
    fn orders() {
        assert_eq!(order_estimate(0.4, 0.1).unwrap(), 2.0);
        assert_eq!(order_estimate(0.3, 0.3).unwrap(), 0.0);
        assert!((order_estimate(6.43e-5, 3.26e-6).unwrap() - 4.30).abs() < 0.005);
        assert!(order_estimate(0.0, 1.0).is_err());
        assert!(order_estimate(1.0, -1.0).is_err());
    }

    #[test]
    fn thresholds() {
        assert_eq!(midphase_threshold(100.0, 0.0), 50.0);
        assert_eq!(midphase_threshold(7.5, 7.5), 7.5);
        assert!((midphase_threshold(646.6, 3.8) - 325.2).abs() < 1e-12);
    }

    #[test]
    fn grid_nesting() {
        let g = phantom_geometry(0.25).unwrap();
        assert_eq!(g.dims, [81; 3]);
        assert_eq!(g.world(40, 40, 40), [0.0; 3]);
        assert_eq!(phantom_geometry(0.5).unwrap().dims, [41; 3]);
        assert!(phantom_geometry(0.3).is_err());
    }

    #[test]
    fn unit_gradient_away_from_medial_axis() {
        let h = 0.25;
        let g = phantom_geometry(h).unwrap();
        for surf in [
            AnalyticSurface::sphere(),
            AnalyticSurface::torus(),
            AnalyticSurface::double_spheres(),
        ] {
            let phi = surf.sample(g);
            let mut worst: f64 = 0.0;
            for idx in (0..g.len()).step_by(7) {
                let [i, j, k] = g.coords(idx);
                if [i, j, k].iter().any(|&c| c < 2 || c + 2 >= g.dims[0]) {
                    continue;
                }
                let x = g.world(i, j, k);
                if surf.medial_distance(x) < 4.0 * h {
                    continue;
                }
                let gr = gradient4(&phi, i, j, k);
                worst =
                    worst.max(((gr[0] * gr[0] + gr[1] * gr[1] + gr[2] * gr[2]).sqrt() - 1.0).abs());
            }
            // Inside the double sphere the distance switches from the caps to
            // the crease circle across a cone where it is only C¹.
            let bound = if surf.name() == "double_spheres" {
                2e-2
            } else {
                1e-3
            };
            assert!(worst < bound, "{}: {worst}", surf.name());
        }
    }

    #[test]
    fn closest_points() {
        let s = AnalyticSurface::sphere();
        assert_eq!(s.closest_point([6.0, 0.0, 0.0]), Some([5.0, 0.0, 0.0]));
        let t = AnalyticSurface::torus();
        let y = t.closest_point([6.0, 0.0, 1.0]).unwrap();
        assert!(t.sdf(y).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn density_is_bounded(p in -10.0f64..10.0, r1 in -50.0f64..200.0, r2 in -50.0f64..200.0, eps in 0.1f64..3.0) {
            let g = GridGeometry::new([1, 1, 1], [1.0; 3], [0.0; 3]).unwrap();
            let phi = ScalarField::filled(g, p);
            let v = synth_density(&phi, r1, r2, eps).unwrap().values[0];
            prop_assert!(v >= r1.min(r2) - 1e-12 && v <= r1.max(r2) + 1e-12);
        }

        #[test]
        fn order_is_scale_invariant(a in 1e-9f64..1.0, b in 1e-9f64..1.0, s in 1e-3f64..1e3) {
            let m1 = order_estimate(a, b).unwrap();
            let m2 = order_estimate(a * s, b * s).unwrap();
            prop_assert!((m1 - m2).abs() < 1e-9);
        }
    }
}
