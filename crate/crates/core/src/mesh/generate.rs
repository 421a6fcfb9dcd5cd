use std::f64::consts::PI;

use spade::{
    AngleLimit, ConstrainedDelaunayTriangulation, Point2, RefinementParameters, Triangulation,
};

use super::{Marker, TriMesh};
use crate::error::{Error, Result};

/// Triangulation of the unit square with `n × n` cells split along one
/// diagonal each, `2n²` triangles. Diagonals in each quadrant point at the
/// nearest corner so no triangle has all three vertices on the boundary
/// (for `n ≥ 2`); that keeps Taylor–Hood inf-sup stable. All sides are walls.
pub fn unit_square(n: usize) -> Result<TriMesh> {
    if n == 0 {
        return Err(Error::InvalidParameter(
            "unit square subdivision count must be at least 1".into(),
        ));
    }
    let h = 1.0 / n as f64;
    let id = |i: usize, j: usize| j * (n + 1) + i;
    let mut vertices = Vec::with_capacity((n + 1) * (n + 1));
    for j in 0..=n {
        for i in 0..=n {
            // i * h would not hit 1.0 exactly for every n.
            let x = if i == n { 1.0 } else { i as f64 * h };
            let y = if j == n { 1.0 } else { j as f64 * h };
            vertices.push([x, y]);
        }
    }
    let mut triangles = Vec::with_capacity(2 * n * n);
    for j in 0..n {
        for i in 0..n {
            let (a, b, c, d) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
            let left = 2 * i < n;
            let bottom = 2 * j < n;
            if left == bottom {
                triangles.push([a, b, c]);
                triangles.push([a, c, d]);
            } else {
                triangles.push([a, b, d]);
                triangles.push([b, c, d]);
            }
        }
    }
    let mut boundary = Vec::with_capacity(4 * n);
    for k in 0..n {
        boundary.push(([id(k, 0), id(k + 1, 0)], Marker::Wall));
        boundary.push(([id(n, k), id(n, k + 1)], Marker::Wall));
        boundary.push(([id(k + 1, n), id(k, n)], Marker::Wall));
        boundary.push(([id(0, k + 1), id(0, k)], Marker::Wall));
    }
    TriMesh::new(vertices, triangles, &boundary)
}

#[derive(Clone, Copy, Debug)]
struct C64(f64, f64);

impl C64 {
    fn polar(r: f64, phi: f64) -> Self {
        C64(r * phi.cos(), r * phi.sin())
    }
    fn scale(self, s: f64) -> Self {
        C64(self.0 * s, self.1 * s)
    }
    fn mul(self, o: C64) -> Self {
        C64(self.0 * o.0 - self.1 * o.1, self.0 * o.1 + self.1 * o.0)
    }
    fn div(self, o: C64) -> Self {
        let d = o.0 * o.0 + o.1 * o.1;
        C64((self.0 * o.0 + self.1 * o.1) / d, (self.1 * o.0 - self.0 * o.1) / d)
    }
    fn arg(self) -> f64 {
        self.1.atan2(self.0)
    }
}

/// Möbius map of the unit disk onto itself carrying the real point `a` to
/// the origin, and its inverse.
fn to_concentric(z: C64, a: f64) -> C64 {
    C64(z.0 - a, z.1).div(C64(1.0 - a * z.0, -a * z.1))
}

fn from_concentric(w: C64, a: f64) -> C64 {
    C64(w.0 + a, w.1).div(C64(1.0 + a * w.0, a * w.1))
}

/// Structured triangulation of the region between the circle of radius `r1`
/// about the origin and the circle of radius `r2` about `center`.
///
/// The pair of circles is carried to a concentric annulus `ρ < |w| < 1` by
/// the Möbius map `w = (ζ − a)/(1 − a ζ)` (in coordinates `ζ = z/r1`
/// rotated so the inner center lies on the positive real axis). A polar grid
/// with `n_t` rays and `n_r` log-spaced rings is built there and mapped back.
/// Ray angles are the images of `n_t` equally spaced points on the outer
/// circle, so the outer wall carries uniformly spaced nodes; for concentric
/// circles the map is the identity. Both circles are tagged [`Marker::Wall`].
pub fn eccentric_annulus(
    n_r: usize,
    n_t: usize,
    r1: f64,
    r2: f64,
    center: [f64; 2],
) -> Result<TriMesh> {
    if n_r == 0 || n_t < 3 {
        return Err(Error::InvalidParameter(format!(
            "annulus needs n_r >= 1 and n_t >= 3 (got n_r = {n_r}, n_t = {n_t})"
        )));
    }
    if !(r1.is_finite() && r2.is_finite() && r2 > 0.0 && r2 < r1) {
        return Err(Error::InvalidGeometry(format!(
            "radii must satisfy 0 < r2 < r1 (got r1 = {r1}, r2 = {r2})"
        )));
    }
    let offset = center[0].hypot(center[1]);
    if !(offset + r2 < r1) {
        return Err(Error::InvalidGeometry(format!(
            "inner circle (center ({}, {}), radius {r2}) is not strictly inside the outer circle of radius {r1}",
            center[0], center[1]
        )));
    }

    let d = offset / r1;
    let s = r2 / r1;
    let alpha = if offset > 0.0 { center[1].atan2(center[0]) } else { 0.0 };
    let a = if d > 0.0 {
        // a and 1/a are inverse points of both circles.
        let sum = (1.0 + d * d - s * s) / d;
        0.5 * (sum - (sum * sum - 4.0).sqrt())
    } else {
        0.0
    };
    let rho = to_concentric(C64(d + s, 0.0), a).0.abs();

    let mut phi = Vec::with_capacity(n_t);
    let mut prev = f64::NEG_INFINITY;
    for j in 0..n_t {
        let theta = 2.0 * PI * j as f64 / n_t as f64;
        let mut p = to_concentric(C64::polar(1.0, theta), a).arg();
        while p < prev {
            p += 2.0 * PI;
        }
        prev = p;
        phi.push(p);
    }

    let rotation = C64::polar(1.0, alpha);
    let mut vertices = Vec::with_capacity((n_r + 1) * n_t);
    for i in 0..=n_r {
        let radius = rho * (1.0 / rho).powf(i as f64 / n_r as f64);
        for (j, &p) in phi.iter().enumerate() {
            let point = if i == n_r {
                let theta = 2.0 * PI * j as f64 / n_t as f64 + alpha;
                [r1 * theta.cos(), r1 * theta.sin()]
            } else {
                let zeta = from_concentric(C64::polar(radius, p), a);
                let z = zeta.mul(rotation).scale(r1);
                if i == 0 {
                    let (dx, dy) = (z.0 - center[0], z.1 - center[1]);
                    let len = dx.hypot(dy);
                    [center[0] + r2 * dx / len, center[1] + r2 * dy / len]
                } else {
                    [z.0, z.1]
                }
            };
            vertices.push(point);
        }
    }

    let id = |i: usize, j: usize| i * n_t + (j % n_t);
    let mut triangles = Vec::with_capacity(2 * n_r * n_t);
    for i in 0..n_r {
        for j in 0..n_t {
            triangles.push([id(i, j), id(i + 1, j), id(i + 1, j + 1)]);
            triangles.push([id(i, j), id(i + 1, j + 1), id(i, j + 1)]);
        }
    }
    let mut boundary = Vec::with_capacity(2 * n_t);
    for j in 0..n_t {
        boundary.push(([id(0, j), id(0, j + 1)], Marker::Wall));
        boundary.push(([id(n_r, j), id(n_r, j + 1)], Marker::Wall));
    }
    TriMesh::new(vertices, triangles, &boundary)
}

/// Unstructured Delaunay triangulation of the region between the circle of
/// radius `r1` about the origin and the circle of radius `r2` about
/// `center`, with `n_outer` and `n_inner` equally spaced nodes on the two
/// walls. Interior nodes are inserted until every triangle has area below
/// `√3/4 · h_max²` and no angle below 25°. Boundary segments are never split.
pub fn offset_circles(
    n_outer: usize,
    n_inner: usize,
    h_max: f64,
    r1: f64,
    r2: f64,
    center: [f64; 2],
) -> Result<TriMesh> {
    if n_outer < 3 || n_inner < 3 {
        return Err(Error::InvalidParameter(format!(
            "each circle needs at least 3 nodes (got {n_outer} and {n_inner})"
        )));
    }
    if !(h_max.is_finite() && h_max > 0.0) {
        return Err(Error::InvalidParameter(format!("h_max must be positive (got {h_max})")));
    }
    if !(r1.is_finite() && r2.is_finite() && r2 > 0.0 && r2 < r1) {
        return Err(Error::InvalidGeometry(format!(
            "radii must satisfy 0 < r2 < r1 (got r1 = {r1}, r2 = {r2})"
        )));
    }
    if !(center[0].hypot(center[1]) + r2 < r1) {
        return Err(Error::InvalidGeometry(format!(
            "inner circle (center ({}, {}), radius {r2}) is not strictly inside the outer circle of radius {r1}",
            center[0], center[1]
        )));
    }

    let ring = |n: usize, r: f64, c: [f64; 2]| -> Vec<[f64; 2]> {
        (0..n)
            .map(|j| {
                let theta = 2.0 * PI * j as f64 / n as f64;
                [c[0] + r * theta.cos(), c[1] + r * theta.sin()]
            })
            .collect()
    };
    let rings = [ring(n_outer, r1, [0.0, 0.0]), ring(n_inner, r2, center)];

    let mut cdt = ConstrainedDelaunayTriangulation::<Point2<f64>>::new();
    let mut ring_handles = Vec::with_capacity(2);
    for points in &rings {
        let mut handles = Vec::with_capacity(points.len());
        for &[x, y] in points {
            let h = cdt
                .insert(Point2::new(x, y))
                .map_err(|e| Error::InvalidGeometry(format!("cannot insert ({x}, {y}): {e:?}")))?;
            handles.push(h);
        }
        for j in 0..handles.len() {
            cdt.add_constraint(handles[j], handles[(j + 1) % handles.len()]);
        }
        ring_handles.push(handles);
    }

    let params = RefinementParameters::<f64>::new()
        .exclude_outer_faces(true)
        .keep_constraint_edges()
        .with_angle_limit(AngleLimit::from_deg(25.0))
        .with_max_allowed_area(0.25 * 3f64.sqrt() * h_max * h_max)
        .with_max_additional_vertices(2_000_000);
    let result = cdt.refine(params);
    if !result.refinement_complete {
        return Err(Error::InvalidParameter(format!("mesh refinement did not finish for h_max = {h_max}")));
    }
    let excluded: std::collections::HashSet<_> = result.excluded_faces.into_iter().collect();

    let mut index = vec![usize::MAX; cdt.num_vertices()];
    let mut vertices = Vec::new();
    // Wall nodes first, in ring order.
    for handles in &ring_handles {
        for h in handles {
            index[h.index()] = vertices.len();
            let p = cdt.vertex(*h).position();
            vertices.push([p.x, p.y]);
        }
    }
    let mut triangles = Vec::new();
    for face in cdt.inner_faces() {
        if excluded.contains(&face.fix()) {
            continue;
        }
        let mut tri = [0usize; 3];
        for (slot, v) in face.vertices().iter().enumerate() {
            let i = v.fix().index();
            if index[i] == usize::MAX {
                index[i] = vertices.len();
                let p = v.position();
                vertices.push([p.x, p.y]);
            }
            tri[slot] = index[i];
        }
        triangles.push(tri);
    }
    let mut boundary = Vec::with_capacity(n_outer + n_inner);
    let mut offset = 0;
    for n in [n_outer, n_inner] {
        for j in 0..n {
            boundary.push(([offset + j, offset + (j + 1) % n], Marker::Wall));
        }
        offset += n;
    }
    TriMesh::new(vertices, triangles, &boundary)
}
