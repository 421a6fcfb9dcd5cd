use super::TriMesh;
use crate::error::{Error, Result};

/// Distance to the nearest Wall-marked boundary point at every quadratic
/// node: vertices first, then edge midpoints.
#[derive(Clone, Debug, PartialEq)]
pub struct WallDistanceField {
    values: Vec<f64>,
    n_vertices: usize,
}

impl WallDistanceField {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn at_vertex(&self, v: usize) -> f64 {
        self.values[v]
    }

    pub fn at_midpoint(&self, edge: usize) -> f64 {
        self.values[self.n_vertices + edge]
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }
}

pub fn point_segment_distance(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
    let (px, py) = (p[0] - a[0], p[1] - a[1]);
    let len2 = dx * dx + dy * dy;
    let s = if len2 > 0.0 {
        ((px * dx + py * dy) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    (px - s * dx).hypot(py - s * dy)
}

/// Exact Euclidean distance from each quadratic node to the Wall polyline,
/// by minimization over all wall segments. Nodes on wall edges get exactly 0.
pub fn wall_distance(mesh: &TriMesh) -> Result<WallDistanceField> {
    let segments: Vec<([f64; 2], [f64; 2])> = mesh
        .wall_edges()
        .map(|e| {
            let [a, b] = mesh.edges()[e];
            (mesh.vertices()[a], mesh.vertices()[b])
        })
        .collect();
    if segments.is_empty() {
        return Err(Error::Config(
            "wall distance requested on a mesh without Wall edges".into(),
        ));
    }
    let on_wall = mesh.wall_nodes();
    let values = (0..mesh.n_quadratic_nodes())
        .map(|i| {
            if on_wall[i] {
                return 0.0;
            }
            let p = mesh.node(i);
            segments
                .iter()
                .map(|&(a, b)| point_segment_distance(p, a, b))
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    Ok(WallDistanceField {
        values,
        n_vertices: mesh.n_vertices(),
    })
}
