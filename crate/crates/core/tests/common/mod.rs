//! Reference pieces shared by the integration tests: a collapsed Gauss rule,
//! barycentric P1/P2 bases on physical triangles and a dense solver. None of
//! it goes through the crate's own element code.

#![allow(dead_code)]

use std::collections::BTreeMap;

use urans::TriMesh;

/// Gauss–Legendre nodes and weights on [0, 1], by Newton iteration on the
/// Legendre recurrence.
pub fn gauss01(n: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        out.push((0.5 * (1.0 + x), 0.5 * w));
    }
    out
}

/// Points (barycentric) and weights summing to 1 on a triangle; exact for
/// total degree `2n − 2`.
pub fn duffy(n: usize) -> Vec<([f64; 3], f64)> {
    let g = gauss01(n);
    let mut out = Vec::new();
    for &(u, wu) in &g {
        for &(s, ws) in &g {
            let v = s * (1.0 - u);
            out.push(([1.0 - u - v, u, v], 2.0 * wu * ws * (1.0 - u)));
        }
    }
    out
}

pub struct Tri {
    pub x: [[f64; 2]; 3],
    pub area: f64,
    /// Gradients of the barycentric coordinates.
    pub dl: [[f64; 2]; 3],
}

impl Tri {
    pub fn new(x: [[f64; 2]; 3]) -> Self {
        let det = (x[1][0] - x[0][0]) * (x[2][1] - x[0][1]) - (x[2][0] - x[0][0]) * (x[1][1] - x[0][1]);
        let mut dl = [[0.0; 2]; 3];
        for i in 0..3 {
            let (j, k) = ((i + 1) % 3, (i + 2) % 3);
            dl[i] = [(x[j][1] - x[k][1]) / det, (x[k][0] - x[j][0]) / det];
        }
        Tri { x, area: 0.5 * det, dl }
    }

    pub fn point(&self, l: [f64; 3]) -> [f64; 2] {
        let mut p = [0.0; 2];
        for i in 0..3 {
            p[0] += l[i] * self.x[i][0];
            p[1] += l[i] * self.x[i][1];
        }
        p
    }

    pub fn bary(&self, p: [f64; 2]) -> [f64; 3] {
        let mut l = [0.0; 3];
        for i in 0..3 {
            let (j, k) = ((i + 1) % 3, (i + 2) % 3);
            let d = (self.x[j][0] - p[0]) * (self.x[k][1] - p[1]) - (self.x[k][0] - p[0]) * (self.x[j][1] - p[1]);
            l[i] = 0.5 * d / self.area;
        }
        l
    }

    /// P2 values at the vertices then at the midpoints of edges (1,2), (2,0), (0,1).
    pub fn p2(&self, l: [f64; 3]) -> ([f64; 6], [[f64; 2]; 6]) {
        let mut v = [0.0; 6];
        let mut g = [[0.0; 2]; 6];
        for i in 0..3 {
            v[i] = l[i] * (2.0 * l[i] - 1.0);
            for c in 0..2 {
                g[i][c] = (4.0 * l[i] - 1.0) * self.dl[i][c];
            }
            let (j, k) = ((i + 1) % 3, (i + 2) % 3);
            v[3 + i] = 4.0 * l[j] * l[k];
            for c in 0..2 {
                g[3 + i][c] = 4.0 * (l[j] * self.dl[k][c] + l[k] * self.dl[j][c]);
            }
        }
        (v, g)
    }
}

/// Quadratic node numbering built from coordinates only: vertices keep their
/// indices, edge midpoints follow in order of first appearance.
pub struct P2Nodes {
    pub coords: Vec<[f64; 2]>,
    pub local: Vec<[usize; 6]>,
    pub boundary: Vec<bool>,
}

impl P2Nodes {
    pub fn new(mesh: &TriMesh) -> Self {
        let nv = mesh.n_vertices();
        let mut coords = mesh.vertices().to_vec();
        let mut edges: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        let mut count: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        let mut local = Vec::new();
        for t in mesh.triangles() {
            let mut l = [t[0], t[1], t[2], 0, 0, 0];
            for i in 0..3 {
                let (a, b) = (t[(i + 1) % 3], t[(i + 2) % 3]);
                let key = (a.min(b), a.max(b));
                *count.entry(key).or_default() += 1;
                let id = *edges.entry(key).or_insert_with(|| {
                    let (p, q) = (coords[a], coords[b]);
                    coords.push([0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1])]);
                    coords.len() - 1
                });
                l[3 + i] = id;
            }
            local.push(l);
        }
        let mut boundary = vec![false; coords.len()];
        for (&(a, b), &c) in &count {
            if c == 1 {
                boundary[a] = true;
                boundary[b] = true;
                boundary[edges[&(a, b)]] = true;
            }
        }
        assert!(boundary[..nv].iter().any(|&b| b));
        P2Nodes { coords, local, boundary }
    }

    pub fn tri(&self, mesh: &TriMesh, t: usize) -> Tri {
        let v = mesh.triangles()[t];
        Tri::new(v.map(|i| mesh.vertices()[i]))
    }
}

/// Maps each quadratic node of `disc` to ours by coordinates.
pub fn match_nodes(ours: &[[f64; 2]], theirs: impl Fn(usize) -> [f64; 2], n: usize) -> Vec<usize> {
    assert_eq!(ours.len(), n);
    (0..n)
        .map(|i| {
            let p = theirs(i);
            let (j, d) = ours
                .iter()
                .enumerate()
                .map(|(j, q)| (j, (p[0] - q[0]).hypot(p[1] - q[1])))
                .min_by(|a, b| a.1.total_cmp(&b.1))
                .unwrap();
            assert!(d < 1e-12, "node {i} at {p:?} has no partner");
            j
        })
        .collect()
}

/// Gaussian elimination with partial pivoting.
pub fn dense_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for c in 0..n {
        let p = (c..n).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs())).unwrap();
        assert!(a[p][c].abs() > 1e-300, "singular matrix at column {c}");
        a.swap(c, p);
        b.swap(c, p);
        for r in c + 1..n {
            let f = a[r][c] / a[c][c];
            if f != 0.0 {
                for k in c..n {
                    a[r][k] -= f * a[c][k];
                }
                b[r] -= f * b[c];
            }
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|k| a[r][k] * x[k]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    x
}

pub fn max_rel_diff(a: &[f64], b: &[f64]) -> f64 {
    let scale = b.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(1e-300);
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max) / scale
}
