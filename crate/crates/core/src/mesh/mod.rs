//! Planar triangle meshes with boundary markers.

mod generate;
mod io;
mod wall;

use std::collections::HashMap;

pub use generate::{eccentric_annulus, offset_circles, unit_square};
pub use io::{read_mesh, write_mesh};
pub use wall::{point_segment_distance, wall_distance, WallDistanceField};

use crate::error::{Error, Result};

/// Boundary condition tag carried by a boundary edge.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Marker {
    /// No-slip wall: `v = 0`, `k = 0`.
    Wall,
    Other,
}

impl Marker {
    pub fn as_str(self) -> &'static str {
        match self {
            Marker::Wall => "wall",
            Marker::Other => "other",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "wall" => Some(Marker::Wall),
            "other" => Some(Marker::Other),
            _ => None,
        }
    }
}

/// A conforming, counterclockwise-oriented triangulation.
///
/// Edges are numbered in order of first appearance while walking the
/// triangles; local edge `e` of a triangle joins local vertices `e` and
/// `(e + 1) % 3`. Quadratic nodes are numbered vertices first, then one
/// midpoint per edge.
#[derive(Clone, Debug, PartialEq)]
pub struct TriMesh {
    vertices: Vec<[f64; 2]>,
    triangles: Vec<[usize; 3]>,
    edges: Vec<[usize; 2]>,
    triangle_edges: Vec<[usize; 3]>,
    edge_markers: Vec<Option<Marker>>,
    boundary_edges: Vec<usize>,
}

impl TriMesh {
    /// Builds and validates a mesh. `boundary` must tag every boundary edge
    /// exactly once, by its vertex pair in either order.
    pub fn new(
        vertices: Vec<[f64; 2]>,
        triangles: Vec<[usize; 3]>,
        boundary: &[([usize; 2], Marker)],
    ) -> Result<Self> {
        let nv = vertices.len();
        for (t, tri) in triangles.iter().enumerate() {
            if let Some(&bad) = tri.iter().find(|&&v| v >= nv) {
                return Err(Error::Topology(format!(
                    "triangle {t} references vertex {bad} but the mesh has {nv} vertices"
                )));
            }
            if tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2] {
                return Err(Error::Topology(format!("triangle {t} repeats a vertex")));
            }
            let area = signed_area(&vertices, tri);
            if !(area > 0.0) {
                return Err(Error::Orientation { index: t, area });
            }
        }

        let mut lookup: HashMap<[usize; 2], usize> = HashMap::new();
        let mut edges = Vec::new();
        let mut incidence: Vec<u32> = Vec::new();
        let mut triangle_edges = Vec::with_capacity(triangles.len());
        for tri in &triangles {
            let mut te = [0; 3];
            for (e, slot) in te.iter_mut().enumerate() {
                let key = edge_key(tri[e], tri[(e + 1) % 3]);
                let id = *lookup.entry(key).or_insert_with(|| {
                    edges.push(key);
                    incidence.push(0);
                    edges.len() - 1
                });
                incidence[id] += 1;
                *slot = id;
            }
            triangle_edges.push(te);
        }
        if let Some(id) = incidence.iter().position(|&c| c > 2) {
            let [a, b] = edges[id];
            return Err(Error::Topology(format!(
                "edge ({a}, {b}) is shared by {} triangles",
                incidence[id]
            )));
        }

        let mut edge_markers = vec![None; edges.len()];
        for &(pair, marker) in boundary {
            let key = edge_key(pair[0], pair[1]);
            let id = match lookup.get(&key) {
                Some(&id) if incidence[id] == 1 => id,
                _ => {
                    return Err(Error::Topology(format!(
                        "dangling boundary edge ({}, {}): not on the mesh boundary",
                        pair[0], pair[1]
                    )))
                }
            };
            if edge_markers[id].replace(marker).is_some() {
                return Err(Error::Topology(format!(
                    "boundary edge ({}, {}) is tagged twice",
                    pair[0], pair[1]
                )));
            }
        }
        let mut boundary_edges = Vec::new();
        for (id, &count) in incidence.iter().enumerate() {
            if count == 1 {
                if edge_markers[id].is_none() {
                    let [a, b] = edges[id];
                    return Err(Error::Topology(format!(
                        "boundary edge ({a}, {b}) carries no marker"
                    )));
                }
                boundary_edges.push(id);
            }
        }

        // Wall edges must form closed polylines: even degree at every vertex.
        let mut degree = vec![0u32; nv];
        for &id in &boundary_edges {
            if edge_markers[id] == Some(Marker::Wall) {
                degree[edges[id][0]] += 1;
                degree[edges[id][1]] += 1;
            }
        }
        if let Some(v) = degree.iter().position(|d| d % 2 == 1) {
            return Err(Error::Topology(format!(
                "wall polyline is open at vertex {v}"
            )));
        }

        Ok(TriMesh {
            vertices,
            triangles,
            edges,
            triangle_edges,
            edge_markers,
            boundary_edges,
        })
    }

    pub fn vertices(&self) -> &[[f64; 2]] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn edges(&self) -> &[[usize; 2]] {
        &self.edges
    }

    /// Global edge ids of each triangle's local edges.
    pub fn triangle_edges(&self) -> &[[usize; 3]] {
        &self.triangle_edges
    }

    pub fn boundary_edges(&self) -> &[usize] {
        &self.boundary_edges
    }

    pub fn edge_marker(&self, edge: usize) -> Option<Marker> {
        self.edge_markers[edge]
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    /// Vertices plus edge midpoints.
    pub fn n_quadratic_nodes(&self) -> usize {
        self.vertices.len() + self.edges.len()
    }

    /// Coordinates of a quadratic node (vertex or edge midpoint).
    pub fn node(&self, i: usize) -> [f64; 2] {
        let nv = self.vertices.len();
        if i < nv {
            self.vertices[i]
        } else {
            let [a, b] = self.edges[i - nv];
            let (pa, pb) = (self.vertices[a], self.vertices[b]);
            [0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1])]
        }
    }

    pub fn signed_area(&self, t: usize) -> f64 {
        signed_area(&self.vertices, &self.triangles[t])
    }

    pub fn area(&self) -> f64 {
        (0..self.triangles.len()).map(|t| self.signed_area(t)).sum()
    }

    pub fn edge_length(&self, edge: usize) -> f64 {
        let [a, b] = self.edges[edge];
        let (pa, pb) = (self.vertices[a], self.vertices[b]);
        (pa[0] - pb[0]).hypot(pa[1] - pb[1])
    }

    /// (shortest, longest) edge length.
    pub fn edge_length_range(&self) -> (f64, f64) {
        (0..self.edges.len())
            .map(|e| self.edge_length(e))
            .fold((f64::INFINITY, 0.0), |(lo, hi), h| (lo.min(h), hi.max(h)))
    }

    /// Wall-marked boundary edges as vertex pairs.
    pub fn wall_edges(&self) -> impl Iterator<Item = usize> + '_ {
        self.boundary_edges
            .iter()
            .copied()
            .filter(|&e| self.edge_markers[e] == Some(Marker::Wall))
    }

    /// Boundary edges with their marker, as stored in mesh files.
    pub fn boundary_tags(&self) -> Vec<([usize; 2], Marker)> {
        self.boundary_edges
            .iter()
            .map(|&e| (self.edges[e], self.edge_markers[e].expect("boundary edge is tagged")))
            .collect()
    }

    /// Quadratic nodes lying on Wall edges (both endpoints and the midpoint).
    pub fn wall_nodes(&self) -> Vec<bool> {
        let nv = self.vertices.len();
        let mut on_wall = vec![false; self.n_quadratic_nodes()];
        for e in self.wall_edges() {
            let [a, b] = self.edges[e];
            on_wall[a] = true;
            on_wall[b] = true;
            on_wall[nv + e] = true;
        }
        on_wall
    }
}

fn edge_key(a: usize, b: usize) -> [usize; 2] {
    if a < b {
        [a, b]
    } else {
        [b, a]
    }
}

fn signed_area(vertices: &[[f64; 2]], tri: &[usize; 3]) -> f64 {
    let [a, b, c] = [vertices[tri[0]], vertices[tri[1]], vertices[tri[2]]];
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square_pieces() -> (Vec<[f64; 2]>, Vec<[usize; 3]>) {
        let v = vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
        let t = vec![[0, 1, 2], [0, 2, 3]];
        (v, t)
    }

    #[test]
    fn edges_and_boundary_are_consistent() {
        let (v, t) = square_pieces();
        let tags: Vec<_> = [[0, 1], [1, 2], [2, 3], [3, 0]]
            .iter()
            .map(|&p| (p, Marker::Wall))
            .collect();
        let mesh = TriMesh::new(v, t, &tags).unwrap();
        assert_eq!(mesh.n_edges(), 5);
        assert_eq!(mesh.boundary_edges().len(), 4);
        assert_eq!(mesh.wall_nodes().iter().filter(|&&w| w).count(), 8);
        assert!((mesh.area() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn clockwise_triangle_is_rejected() {
        let (v, mut t) = square_pieces();
        t[1] = [0, 3, 2];
        let err = TriMesh::new(v, t, &[]).unwrap_err();
        assert!(matches!(err, Error::Orientation { index: 1, .. }), "{err}");
    }

    #[test]
    fn interior_edge_cannot_be_tagged() {
        let (v, t) = square_pieces();
        let mut tags: Vec<_> = [[0, 1], [1, 2], [2, 3], [3, 0]]
            .iter()
            .map(|&p| (p, Marker::Wall))
            .collect();
        tags.push(([0, 2], Marker::Other));
        assert!(matches!(TriMesh::new(v, t, &tags), Err(Error::Topology(_))));
    }

    #[test]
    fn untagged_boundary_and_open_wall_are_rejected() {
        let (v, t) = square_pieces();
        let tags = vec![([0, 1], Marker::Wall)];
        assert!(matches!(
            TriMesh::new(v.clone(), t.clone(), &tags),
            Err(Error::Topology(_))
        ));
        let tags = vec![
            ([0, 1], Marker::Wall),
            ([1, 2], Marker::Other),
            ([2, 3], Marker::Other),
            ([3, 0], Marker::Other),
        ];
        let err = TriMesh::new(v, t, &tags).unwrap_err();
        assert!(err.to_string().contains("open"), "{err}");
    }
}
