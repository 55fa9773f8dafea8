use std::collections::BTreeMap;

use ctsdf::mesh::{
    marching_cubes, read_ply, sample_vertex_channel, write_ply_with, PlyFormat, TriMesh,
};
use ctsdf::morpho::{curvature_fields, measure};
use ctsdf::phantom::{phantom_geometry, AnalyticSurface};
use ctsdf::{ScalarField, SplineInterpolant};

const H: f64 = 0.25;

fn sample(name: &str) -> ScalarField {
    AnalyticSurface::by_name(name)
        .unwrap()
        .sample(phantom_geometry(H).unwrap())
}

#[test]
fn morphometry_is_translation_invariant() {
    let g = phantom_geometry(H).unwrap();
    let a = measure(&AnalyticSurface::sphere().sample(g), 2.0 * H).unwrap();
    let b = measure(
        &AnalyticSurface::sphere()
            .translated([0.3, -0.2, 0.1])
            .sample(g),
        2.0 * H,
    )
    .unwrap();
    for (x, y) in [
        (a.volume, b.volume),
        (a.area, b.area),
        (a.mean_h, b.mean_h),
        (a.chi, b.chi),
    ] {
        assert!(((x - y) / x).abs() < 5e-3, "{x} vs {y}");
    }
}

#[test]
fn disjoint_spheres_have_euler_four() {
    let g = phantom_geometry(H).unwrap();
    let phi = ScalarField::from_fn(g, |x| {
        let d = |c: f64| ((x[0] - c).powi(2) + x[1] * x[1] + x[2] * x[2]).sqrt() - 3.0;
        d(-5.0).min(d(5.0))
    });
    let m = measure(&phi, 2.0 * H).unwrap();
    assert!((m.chi - 4.0).abs() < 0.1, "{}", m.chi);
    let mesh = marching_cubes(&phi, 0.0);
    assert_eq!(mesh.component_count(), 2);
    assert_eq!(mesh.euler_characteristic(), 4);
}

#[test]
fn slab_is_plate_like() {
    let m = measure(&sample("slab"), 2.0 * H).unwrap();
    assert!(m.smi.abs() < 0.2, "{}", m.smi);
    assert!(m.chi.abs() < 0.1, "{}", m.chi);
}

#[test]
fn mesh_euler_matches_integral_euler() {
    for (name, want) in [("sphere", 2), ("torus", 0)] {
        let phi = sample(name);
        let mesh = marching_cubes(&phi, 0.0);
        assert!(mesh.is_closed_manifold(), "{name}");
        assert_eq!(mesh.euler_characteristic(), want, "{name}");
        let chi = measure(&phi, 2.0 * H).unwrap().chi;
        assert!((chi - want as f64).abs() < 0.1, "{name}: {chi}");
    }
}

#[test]
fn vertex_curvature_channels() {
    let phi = sample("sphere");
    let c = curvature_fields(&phi).unwrap();
    let mesh = marching_cubes(&phi, 0.0);
    let (mesh, outside) =
        sample_vertex_channel(mesh, &SplineInterpolant::new(&c.mean, 1).unwrap(), "H").unwrap();
    assert_eq!(outside, 0);
    let h = mesh.channel("H").unwrap();
    let mean = h.iter().sum::<f64>() / h.len() as f64;
    assert!((mean - 0.2).abs() < 0.01, "{mean}");

    let flat = ScalarField::filled(phi.geometry, 7.5);
    let (mesh, _) =
        sample_vertex_channel(mesh, &SplineInterpolant::new(&flat, 3).unwrap(), "c").unwrap();
    assert!(mesh
        .channel("c")
        .unwrap()
        .iter()
        .all(|&v| (v - 7.5).abs() < 1e-9));

    let phi = sample("torus");
    let c = curvature_fields(&phi).unwrap();
    let (mesh, _) = sample_vertex_channel(
        marching_cubes(&phi, 0.0),
        &SplineInterpolant::new(&c.gaussian, 1).unwrap(),
        "K",
    )
    .unwrap();
    let k = mesh.channel("K").unwrap();
    // Outer equator 1/(2·5), inner equator -1/(2·1).
    let (lo, hi) = k
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, u), &v| {
            (l.min(v), u.max(v))
        });
    assert!(lo < -0.3 && hi > 0.07, "{lo} {hi}");
}

#[test]
fn ply_round_trip_keeps_channels() {
    let phi = sample("sphere");
    let c = curvature_fields(&phi).unwrap();
    let (mesh, _) = sample_vertex_channel(
        marching_cubes(&phi, 0.0),
        &SplineInterpolant::new(&c.mean, 1).unwrap(),
        "H",
    )
    .unwrap();
    let dir = tempfile::tempdir().unwrap();
    for format in [PlyFormat::Ascii, PlyFormat::BinaryLittleEndian] {
        let path = dir.path().join("m.ply");
        write_ply_with(&mesh, &path, format, &["stage mesh".to_string()]).unwrap();
        let back = read_ply(&path).unwrap();
        assert_eq!(back.triangles, mesh.triangles);
        assert_eq!(back.vertices.len(), mesh.vertices.len());
        let max = back
            .vertices
            .iter()
            .zip(&mesh.vertices)
            .flat_map(|(a, b)| (0..3).map(move |i| (a[i] - b[i]).abs()))
            .fold(0.0, f64::max);
        assert!(max < 1e-12, "{format:?}: {max}");
        assert_eq!(back.channel("H").unwrap().len(), mesh.vertices.len());
        assert_eq!(back.euler_characteristic(), 2);
    }
    let empty = TriMesh {
        channels: BTreeMap::new(),
        ..TriMesh::default()
    };
    let path = dir.path().join("e.ply");
    write_ply_with(&empty, &path, PlyFormat::Ascii, &[]).unwrap();
    assert!(read_ply(&path).unwrap().is_empty());
}
