//! Level-set triangle meshes: marching cubes, topology counts and
//! per-vertex channels sampled from the volume.

mod marching;
mod ply;

use std::collections::{BTreeMap, HashMap};

use crate::error::{Error, Result};
use crate::interp::SplineInterpolant;
use crate::volume::Vec3;

pub use marching::marching_cubes;
pub use ply::{read_ply, write_ply, write_ply_with, PlyFormat};

/// Triangles smaller than this are dropped during extraction.
pub const MIN_TRIANGLE_AREA: f64 = 1e-12;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TriMesh {
    pub vertices: Vec<Vec3>,
    /// Counter-clockwise seen from the side where the field increases.
    pub triangles: Vec<[u32; 3]>,
    pub channels: BTreeMap<String, Vec<f64>>,
}

fn sub(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn cross(a: Vec3, b: Vec3) -> Vec3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn find(parent: &mut [u32], mut x: u32) -> u32 {
    while parent[x as usize] != x {
        parent[x as usize] = parent[parent[x as usize] as usize];
        x = parent[x as usize];
    }
    x
}

impl TriMesh {
    pub fn is_empty(&self) -> bool {
        self.triangles.is_empty()
    }

    /// Area-weighted normal (twice the area, unnormalised) of a triangle.
    pub fn triangle_normal(&self, t: usize) -> Vec3 {
        let [a, b, c] = self.triangles[t].map(|i| self.vertices[i as usize]);
        cross(sub(b, a), sub(c, a))
    }

    pub fn triangle_area(&self, t: usize) -> f64 {
        let n = self.triangle_normal(t);
        0.5 * (n[0] * n[0] + n[1] * n[1] + n[2] * n[2]).sqrt()
    }

    pub fn area(&self) -> f64 {
        (0..self.triangles.len())
            .map(|t| self.triangle_area(t))
            .sum()
    }

    /// Triangles using each undirected edge.
    pub fn edge_uses(&self) -> HashMap<(u32, u32), usize> {
        let mut uses = HashMap::new();
        for t in &self.triangles {
            for e in 0..3 {
                let (a, b) = (t[e], t[(e + 1) % 3]);
                *uses.entry((a.min(b), a.max(b))).or_insert(0) += 1;
            }
        }
        uses
    }

    pub fn edge_count(&self) -> usize {
        self.edge_uses().len()
    }

    /// `V - E + F` over the vertices referenced by triangles.
    pub fn euler_characteristic(&self) -> i64 {
        let mut used = vec![false; self.vertices.len()];
        for t in &self.triangles {
            for &v in t {
                used[v as usize] = true;
            }
        }
        let v = used.iter().filter(|&&u| u).count() as i64;
        v - self.edge_count() as i64 + self.triangles.len() as i64
    }

    /// Every edge is shared by exactly two triangles.
    pub fn is_closed_manifold(&self) -> bool {
        !self.is_empty() && self.edge_uses().values().all(|&n| n == 2)
    }

    /// Connected components of the triangles, joined through shared vertices.
    pub fn component_labels(&self) -> Vec<u32> {
        let mut parent: Vec<u32> = (0..self.vertices.len() as u32).collect();
        for t in &self.triangles {
            let r0 = find(&mut parent, t[0]);
            for &v in &t[1..] {
                let r = find(&mut parent, v);
                if r != r0 {
                    parent[r as usize] = r0;
                }
            }
        }
        let mut labels = HashMap::new();
        self.triangles
            .iter()
            .map(|t| {
                let root = find(&mut parent, t[0]);
                let next = labels.len() as u32;
                *labels.entry(root).or_insert(next)
            })
            .collect()
    }

    pub fn component_count(&self) -> usize {
        self.component_labels()
            .iter()
            .copied()
            .max()
            .map_or(0, |m| m as usize + 1)
    }

    /// Euler characteristic of every component, in label order.
    pub fn component_euler(&self) -> Vec<i64> {
        let labels = self.component_labels();
        let n = labels.iter().copied().max().map_or(0, |m| m as usize + 1);
        let mut parts: Vec<TriMesh> = vec![TriMesh::default(); n];
        for (t, &l) in self.triangles.iter().zip(&labels) {
            parts[l as usize].triangles.push(*t);
        }
        parts
            .into_iter()
            .map(|mut p| {
                p.vertices = self.vertices.clone();
                p.euler_characteristic()
            })
            .collect()
    }

    pub fn channel(&self, name: &str) -> Option<&[f64]> {
        self.channels.get(name).map(|v| v.as_slice())
    }
}

/// Adds channel `name` sampled from `interp` at every vertex. Vertices
/// outside the grid are clamped onto it; their count is returned.
pub fn sample_vertex_channel(
    mut mesh: TriMesh,
    interp: &SplineInterpolant,
    name: &str,
) -> Result<(TriMesh, usize)> {
    if name.is_empty() || name.chars().any(char::is_whitespace) {
        return Err(Error::InvalidArgument(format!("bad channel name `{name}`")));
    }
    let g = interp.geometry();
    let mut outside = 0;
    let values = mesh
        .vertices
        .iter()
        .map(|&v| {
            if interp.contains(v) {
                return interp.eval(v);
            }
            outside += 1;
            let mut c = v;
            for a in 0..3 {
                let hi = g.origin[a] + g.spacing[a] * (g.dims[a] - 1) as f64;
                c[a] = c[a].clamp(g.origin[a], hi);
            }
            interp.eval(c)
        })
        .collect();
    mesh.channels.insert(name.to_string(), values);
    Ok((mesh, outside))
}
