//! Marching cubes with the per-case triangulation derived on the fly.
//!
//! Every cube face contributes segments between the crossings on its
//! edges; walking each face counter-clockwise (seen from outside the cube),
//! an entry into the region below the level is joined to the next exit.
//! On a face with two diagonal corners below the level this keeps those
//! corners apart, and since both cubes sharing the face make the same
//! choice the surface is watertight. The segments chain into closed loops
//! that are fanned into triangles. Vertices are welded by grid edge, or by
//! grid node when a node lies exactly on the level.
//!
//! A fan diagonal joining two crossings on the same face could be emitted by
//! the neighbouring cube too, giving an edge with four triangles. Loops that
//! admit no fan without such a diagonal are split around an extra vertex at
//! their centroid instead.

use rayon::prelude::*;

use super::{TriMesh, MIN_TRIANGLE_AREA};
use crate::volume::ScalarField;

/// Corners of the six faces, counter-clockwise seen from outside. Corner
/// `c` sits at offset `(c & 1, (c >> 1) & 1, (c >> 2) & 1)`.
const FACES: [[usize; 4]; 6] = [
    [0, 4, 6, 2],
    [1, 3, 7, 5],
    [0, 1, 5, 4],
    [2, 6, 7, 3],
    [0, 2, 3, 1],
    [4, 5, 7, 6],
];

/// Local id in `0..12` of the edge joining corners `a` and `b`.
#[inline]
fn local_edge(a: usize, b: usize) -> usize {
    let axis = (a ^ b).trailing_zeros() as usize;
    let low = a & b;
    let rank = match axis {
        0 => (low >> 1) & 3,
        1 => (low & 1) | ((low >> 1) & 2),
        _ => low & 3,
    };
    axis * 4 + rank
}

/// Lower corner and axis of a local edge.
#[inline]
fn edge_corner(e: usize) -> (usize, usize) {
    let (axis, rank) = (e / 4, e % 4);
    let low = match axis {
        0 => rank << 1,
        1 => (rank & 1) | ((rank & 2) << 1),
        _ => rank,
    };
    (low, axis)
}

/// Bit `f` is set when the local edge lies on face `f`.
fn edge_faces() -> [u8; 12] {
    let mut m = [0u8; 12];
    for (f, face) in FACES.iter().enumerate() {
        for i in 0..4 {
            m[local_edge(face[i], face[(i + 1) % 4])] |= 1 << f;
        }
    }
    m
}

/// Apex of a fan over `ring` whose diagonals never join two edges of a
/// common face.
fn fan_apex(ring: &[usize], faces: &[u8; 12]) -> Option<usize> {
    let m = ring.len();
    (0..m).find(|&a| (2..m - 1).all(|d| faces[ring[a]] & faces[ring[(a + d) % m]] == 0))
}

/// Loops of local edges through one cube, or nothing when it is uncut.
fn cube_loops(below: [bool; 8], out: &mut Vec<Vec<usize>>) {
    let mut succ = [usize::MAX; 12];
    for face in &FACES {
        let mut crossings = [(0usize, false); 4];
        let mut n = 0;
        for i in 0..4 {
            let (a, b) = (face[i], face[(i + 1) % 4]);
            if below[a] != below[b] {
                crossings[n] = (local_edge(a, b), below[b]);
                n += 1;
            }
        }
        for i in 0..n {
            let (edge, entry) = crossings[i];
            if entry {
                succ[edge] = crossings[(i + 1) % n].0;
            }
        }
    }
    let mut seen = [false; 12];
    for start in 0..12 {
        if succ[start] == usize::MAX || seen[start] {
            continue;
        }
        let mut ring = Vec::with_capacity(6);
        let mut e = start;
        while !seen[e] {
            seen[e] = true;
            ring.push(e);
            e = succ[e];
        }
        out.push(ring);
    }
}

/// Triangle mesh of `{field = level}` with vertices on grid edges.
pub fn marching_cubes(field: &ScalarField, level: f64) -> TriMesh {
    let g = field.geometry;
    let [nx, ny, nz] = g.dims;
    if nx < 2 || ny < 2 || nz < 2 {
        return TriMesh::default();
    }
    let v = &field.values;
    let n = g.len() as u64;
    let stride = [1, nx, nx * ny];
    let faces = edge_faces();
    // Edge vertices, then node vertices, then cell centroids.
    let edge_key = |node: usize, axis: usize| node as u64 * 3 + axis as u64;
    let node_key = |node: usize| 3 * n + node as u64;
    let cell_key = |base: usize| 4 * n + base as u64;

    let slabs: Vec<Vec<[u64; 3]>> = (0..nz - 1)
        .into_par_iter()
        .map(|k| {
            let mut tris = Vec::new();
            let mut loops = Vec::new();
            for j in 0..ny - 1 {
                for i in 0..nx - 1 {
                    let base = g.index(i, j, k);
                    let corner =
                        |c: usize| base + (c & 1) + ((c >> 1) & 1) * nx + ((c >> 2) & 1) * nx * ny;
                    let below: [bool; 8] = std::array::from_fn(|c| v[corner(c)] < level);
                    if below.iter().all(|&b| b) || below.iter().all(|&b| !b) {
                        continue;
                    }
                    loops.clear();
                    cube_loops(below, &mut loops);
                    for ring in &loops {
                        let keys: Vec<u64> = ring
                            .iter()
                            .map(|&e| {
                                let (c, axis) = edge_corner(e);
                                let (a, b) = (corner(c), corner(c) + stride[axis]);
                                if v[a] == level {
                                    node_key(a)
                                } else if v[b] == level {
                                    node_key(b)
                                } else {
                                    edge_key(a, axis)
                                }
                            })
                            .collect();
                        let m = keys.len();
                        match fan_apex(ring, &faces) {
                            Some(a) => {
                                for d in 1..m - 1 {
                                    tris.push([keys[a], keys[(a + d) % m], keys[(a + d + 1) % m]]);
                                }
                            }
                            None => {
                                let c = cell_key(base);
                                for d in 0..m {
                                    tris.push([c, keys[d], keys[(d + 1) % m]]);
                                }
                            }
                        }
                    }
                }
            }
            tris
        })
        .collect();
    let tris: Vec<[u64; 3]> = slabs.into_iter().flatten().collect();

    let mut keys: Vec<u64> = tris.iter().flatten().copied().collect();
    keys.sort_unstable();
    keys.dedup();
    let mut positions: Vec<[f64; 3]> = keys
        .iter()
        .map(|&k| {
            if k >= 4 * n {
                return [f64::NAN; 3];
            }
            if k >= 3 * n {
                return g.world_of((k - 3 * n) as usize);
            }
            let (node, axis) = ((k / 3) as usize, (k % 3) as usize);
            let (a, b) = (v[node], v[node + stride[axis]]);
            let t = (level - a) / (b - a);
            let mut p = g.world_of(node);
            p[axis] += t * g.spacing[axis];
            p
        })
        .collect();
    let index_of = |k: u64| keys.binary_search(&k).unwrap() as u32;
    // Centroids average the other vertices of their triangles.
    let mut sums: std::collections::BTreeMap<u32, ([f64; 3], usize)> = Default::default();
    for t in &tris {
        if t[0] >= 4 * n {
            let e = sums.entry(index_of(t[0])).or_insert(([0.0; 3], 0));
            let p = positions[index_of(t[1]) as usize];
            for a in 0..3 {
                e.0[a] += p[a];
            }
            e.1 += 1;
        }
    }
    for (i, (s, c)) in sums {
        positions[i as usize] = s.map(|x| x / c as f64);
    }

    let mut mesh = TriMesh {
        vertices: positions,
        triangles: tris.iter().map(|t| t.map(index_of)).collect(),
        ..Default::default()
    };
    // Node vertices can collapse a triangle onto an edge.
    let keep: Vec<bool> = (0..mesh.triangles.len())
        .map(|t| {
            let [a, b, c] = mesh.triangles[t];
            a != b && b != c && a != c && mesh.triangle_area(t) > MIN_TRIANGLE_AREA
        })
        .collect();
    let mut it = keep.iter();
    mesh.triangles.retain(|_| *it.next().unwrap());
    compact(mesh)
}

/// Drops vertices no triangle references.
fn compact(mut mesh: TriMesh) -> TriMesh {
    let mut remap = vec![u32::MAX; mesh.vertices.len()];
    let mut vertices = Vec::new();
    for t in &mut mesh.triangles {
        for v in t.iter_mut() {
            if remap[*v as usize] == u32::MAX {
                remap[*v as usize] = vertices.len() as u32;
                vertices.push(mesh.vertices[*v as usize]);
            }
            *v = remap[*v as usize];
        }
    }
    mesh.vertices = vertices;
    mesh
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phantom::{phantom_geometry, AnalyticSurface};
    use crate::volume::{gradient4, GridGeometry};
    use proptest::prelude::*;
    use std::f64::consts::PI;

    #[test]
    fn edge_ids_round_trip() {
        let mut seen = [false; 12];
        for a in 0..8usize {
            for bit in 0..3 {
                let b = a ^ (1 << bit);
                let e = local_edge(a, b);
                assert_eq!(e, local_edge(b, a));
                assert_eq!(edge_corner(e), (a & b, bit));
                seen[e] = true;
            }
        }
        assert!(seen.iter().all(|&s| s));
    }

    #[test]
    fn faces_point_outward() {
        for (f, face) in FACES.iter().enumerate() {
            let p = |c: usize| [(c & 1) as f64, ((c >> 1) & 1) as f64, ((c >> 2) & 1) as f64];
            let n = super::super::cross(
                super::super::sub(p(face[1]), p(face[0])),
                super::super::sub(p(face[2]), p(face[1])),
            );
            let axis = f / 2;
            let sign = if f % 2 == 0 { -1.0 } else { 1.0 };
            assert_eq!(n[axis], sign);
        }
    }

    #[test]
    fn every_case_closes() {
        // Every crossing edge lies on exactly one loop and the loops pair
        // entries with exits, for all 256 sign patterns.
        for case in 0..256usize {
            let below: [bool; 8] = std::array::from_fn(|c| case >> c & 1 == 1);
            let mut loops = Vec::new();
            cube_loops(below, &mut loops);
            let crossed = (0..12)
                .filter(|&e| {
                    let (c, axis) = edge_corner(e);
                    below[c] != below[c | 1 << axis]
                })
                .count();
            assert_eq!(
                loops.iter().map(Vec::len).sum::<usize>(),
                crossed,
                "case {case}"
            );
            assert!(loops.iter().all(|l| l.len() >= 3));
        }
    }

    #[test]
    fn no_crossing_gives_empty_mesh() {
        let g = GridGeometry::cube(5, 0.0, 1.0).unwrap();
        assert!(marching_cubes(&ScalarField::filled(g, 1.0), 0.0).is_empty());
        assert!(marching_cubes(&ScalarField::filled(g, -1.0), 0.0).is_empty());
    }

    #[test]
    fn sphere_mesh() {
        let g = phantom_geometry(0.25).unwrap();
        let phi = AnalyticSurface::sphere().sample(g);
        let m = marching_cubes(&phi, 0.0);
        assert!(m.is_closed_manifold());
        assert_eq!(m.euler_characteristic(), 2);
        assert_eq!(m.component_count(), 1);
        assert!(
            (m.area() / (4.0 * PI * 25.0) - 1.0).abs() < 0.02,
            "{}",
            m.area()
        );
        // Normals point away from the centre, toward increasing φ.
        for t in 0..m.triangles.len() {
            let n = m.triangle_normal(t);
            let c = m.vertices[m.triangles[t][0] as usize];
            assert!(n[0] * c[0] + n[1] * c[1] + n[2] * c[2] > 0.0);
        }
    }

    #[test]
    fn torus_mesh() {
        let g = phantom_geometry(0.25).unwrap();
        let phi = AnalyticSurface::torus().sample(g);
        let m = marching_cubes(&phi, 0.0);
        assert!(m.is_closed_manifold());
        assert_eq!(m.euler_characteristic(), 0);
        // Orientation against the field gradient at the nearest node.
        let mut agree = 0;
        for t in 0..m.triangles.len() {
            let n = m.triangle_normal(t);
            let c = m.vertices[m.triangles[t][0] as usize];
            let u = g.to_voxel(c).map(|x| x.round() as usize);
            let gr = gradient4(&phi, u[0], u[1], u[2]);
            if n[0] * gr[0] + n[1] * gr[1] + n[2] * gr[2] > 0.0 {
                agree += 1;
            }
        }
        assert_eq!(agree, m.triangles.len());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn random_fields_are_watertight_inside(seed in any::<u64>(), level in -0.3f64..0.3) {
            // Random values on a small grid; cubes touching the boundary may
            // leave open edges there, but every other edge joins two triangles.
            let g = GridGeometry::cube(6, 0.0, 1.0).unwrap();
            let mut s = seed | 1;
            let values: Vec<f64> = (0..g.len()).map(|_| {
                s ^= s << 13; s ^= s >> 7; s ^= s << 17;
                (s % 10_000) as f64 / 10_000.0 - 0.5
            }).collect();
            let f = ScalarField::new(g, values).unwrap();
            let m = marching_cubes(&f, level);
            let range = f.max() - f.min();
            for (&(a, b), &n) in &m.edge_uses() {
                let (pa, pb) = (m.vertices[a as usize], m.vertices[b as usize]);
                let on_boundary = |p: [f64; 3]| p.iter().any(|&x| x <= 1e-12 || x >= 1.0 - 1e-12);
                if !(on_boundary(pa) && on_boundary(pb)) {
                    prop_assert_eq!(n, 2);
                }
            }
            // Edge vertices sit on the level along their edge.
            for p in &m.vertices {
                let u = g.to_voxel(*p);
                let off: Vec<usize> = (0..3).filter(|&a| (u[a] - u[a].round()).abs() > 1e-9).collect();
                // Centroid vertices sit off the grid lines.
                if let [axis] = off[..] {
                    let mut lo = u.map(|x| x.round() as usize);
                    lo[axis] = u[axis].floor() as usize;
                    let mut hi = lo;
                    hi[axis] += 1;
                    let (va, vb) = (f.get(lo[0], lo[1], lo[2]), f.get(hi[0], hi[1], hi[2]));
                    let t = u[axis] - lo[axis] as f64;
                    prop_assert!((va + t * (vb - va) - level).abs() <= 1e-9 * range);
                }
            }
        }
    }
}
