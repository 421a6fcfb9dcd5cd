//! Taylor–Hood (P2 velocity / P1 pressure) and P1 scalar finite elements.

pub mod assembly;
pub mod basis;
pub mod functionals;
pub mod quadrature;
pub mod sparse;

pub use assembly::{
    assemble_momentum_system, assemble_scalar_transport, velocity_block, MomentumInputs,
    ScalarTransportInputs, VelocityTerms,
};
pub use basis::{eval_basis, BasisValues, Element};
pub use functionals::{integrate_functional, Functional};
pub use quadrature::QuadratureRule;
pub use sparse::{DirectSolver, SparseMatrix, Triplets};

use crate::error::Result;
use crate::mesh::{wall_distance, TriMesh, WallDistanceField};

/// Global numbering of the velocity, pressure and scalar unknowns.
///
/// Velocity uses blocked storage: component `c` of quadratic node `i` is dof
/// `c * n_nodes + i`. The saddle-point system orders unknowns as
/// `[u_x, u_y, p, λ]` where `λ` enforces the zero-mean pressure gauge.
#[derive(Clone, Debug)]
pub struct DofMap {
    n_vertices: usize,
    n_nodes: usize,
    local_nodes: Vec<[usize; 6]>,
    velocity_fixed: Vec<bool>,
    scalar_fixed: Vec<bool>,
}

impl DofMap {
    pub fn new(mesh: &TriMesh) -> Self {
        let nv = mesh.n_vertices();
        let local_nodes = mesh
            .triangles()
            .iter()
            .zip(mesh.triangle_edges())
            .map(|(t, e)| [t[0], t[1], t[2], nv + e[0], nv + e[1], nv + e[2]])
            .collect();
        let velocity_fixed = mesh.wall_nodes();
        let scalar_fixed = velocity_fixed[..nv].to_vec();
        DofMap {
            n_vertices: nv,
            n_nodes: mesh.n_quadratic_nodes(),
            local_nodes,
            velocity_fixed,
            scalar_fixed,
        }
    }

    /// Quadratic nodes of each triangle in local P2 order.
    pub fn local_nodes(&self, t: usize) -> &[usize; 6] {
        &self.local_nodes[t]
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn n_velocity(&self) -> usize {
        2 * self.n_nodes
    }

    pub fn n_pressure(&self) -> usize {
        self.n_vertices
    }

    pub fn n_scalar(&self) -> usize {
        self.n_vertices
    }

    pub fn n_system(&self) -> usize {
        self.n_velocity() + self.n_pressure() + 1
    }

    pub fn velocity_dof(&self, node: usize, component: usize) -> usize {
        component * self.n_nodes + node
    }

    pub fn pressure_offset(&self) -> usize {
        self.n_velocity()
    }

    pub fn multiplier(&self) -> usize {
        self.n_velocity() + self.n_pressure()
    }

    /// Whether quadratic node `i` carries a Dirichlet velocity value.
    pub fn velocity_node_fixed(&self, node: usize) -> bool {
        self.velocity_fixed[node]
    }

    pub fn velocity_dof_fixed(&self, dof: usize) -> bool {
        self.velocity_fixed[dof % self.n_nodes]
    }

    pub fn scalar_fixed(&self, vertex: usize) -> bool {
        self.scalar_fixed[vertex]
    }

    pub fn constrained_velocity_dofs(&self) -> Vec<usize> {
        (0..self.n_velocity())
            .filter(|&d| self.velocity_dof_fixed(d))
            .collect()
    }

    pub fn constrained_scalar_dofs(&self) -> Vec<usize> {
        (0..self.n_vertices).filter(|&v| self.scalar_fixed[v]).collect()
    }
}

/// Velocity and pressure coefficients at one time level.
#[derive(Clone, Debug, PartialEq)]
pub struct FlowState {
    pub velocity: Vec<f64>,
    pub pressure: Vec<f64>,
}

impl FlowState {
    pub fn zeros(dofs: &DofMap) -> Self {
        FlowState {
            velocity: vec![0.0; dofs.n_velocity()],
            pressure: vec![0.0; dofs.n_pressure()],
        }
    }

    /// Nodal interpolant of a velocity field (pressure left at zero).
    pub fn interpolate(disc: &Discretization, f: impl Fn([f64; 2]) -> [f64; 2]) -> Self {
        let mut state = FlowState::zeros(&disc.dofs);
        state.velocity = disc.interpolate_velocity(f);
        state
    }

    pub fn velocity_norm(&self) -> f64 {
        self.velocity.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// A mesh together with its dof map, wall distance and cached element
/// geometry at the quadrature points.
#[derive(Clone, Debug)]
pub struct Discretization {
    pub mesh: TriMesh,
    pub dofs: DofMap,
    pub wall: WallDistanceField,
    pub rule: QuadratureRule,
    p2_ref: Vec<[f64; 6]>,
    p1_ref: Vec<[f64; 3]>,
    jw: Vec<f64>,
    points: Vec<[f64; 2]>,
    p2_grad: Vec<[[f64; 2]; 6]>,
    p1_grad: Vec<[[f64; 2]; 3]>,
    wall_q: Vec<f64>,
    area: f64,
}

impl Discretization {
    pub fn new(mesh: TriMesh) -> Result<Self> {
        Self::with_rule(mesh, QuadratureRule::degree5())
    }

    pub fn with_rule(mesh: TriMesh, rule: QuadratureRule) -> Result<Self> {
        let wall = wall_distance(&mesh)?;
        let dofs = DofMap::new(&mesh);
        let nq = rule.len();
        let p2_ref: Vec<_> = rule.points.iter().map(|&p| basis::p2_values(p)).collect();
        let p1_ref: Vec<_> = rule.points.iter().map(|&p| basis::p1_values(p)).collect();
        let p2_ref_grad: Vec<_> = rule.points.iter().map(|&p| basis::p2_gradients(p)).collect();

        let nt = mesh.n_triangles();
        let mut jw = Vec::with_capacity(nt * nq);
        let mut points = Vec::with_capacity(nt * nq);
        let mut p2_grad = Vec::with_capacity(nt * nq);
        let mut p1_grad = Vec::with_capacity(nt);
        let mut wall_q = Vec::with_capacity(nt * nq);
        for (t, tri) in mesh.triangles().iter().enumerate() {
            let [a, b, c] = tri.map(|v| mesh.vertices()[v]);
            let j = [[b[0] - a[0], c[0] - a[0]], [b[1] - a[1], c[1] - a[1]]];
            let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
            // Physical gradient = J^{-T} · reference gradient.
            let inv_t = [
                [j[1][1] / det, -j[1][0] / det],
                [-j[0][1] / det, j[0][0] / det],
            ];
            let map_grad = |g: [f64; 2]| {
                [
                    inv_t[0][0] * g[0] + inv_t[0][1] * g[1],
                    inv_t[1][0] * g[0] + inv_t[1][1] * g[1],
                ]
            };
            p1_grad.push(basis::P1_GRADIENTS.map(map_grad));
            let nodes = dofs.local_nodes(t);
            for q in 0..nq {
                let [xi, eta] = rule.points[q];
                jw.push(rule.weights[q] * det);
                points.push([
                    a[0] + j[0][0] * xi + j[0][1] * eta,
                    a[1] + j[1][0] * xi + j[1][1] * eta,
                ]);
                p2_grad.push(p2_ref_grad[q].map(map_grad));
                let y: f64 = (0..6).map(|i| wall.values()[nodes[i]] * p2_ref[q][i]).sum();
                wall_q.push(y.max(0.0));
            }
        }
        let area = mesh.area();
        Ok(Discretization {
            mesh,
            dofs,
            wall,
            rule,
            p2_ref,
            p1_ref,
            jw,
            points,
            p2_grad,
            p1_grad,
            wall_q,
            area,
        })
    }

    pub fn n_elements(&self) -> usize {
        self.mesh.n_triangles()
    }

    pub fn n_q(&self) -> usize {
        self.rule.len()
    }

    /// Number of (element, quadrature point) pairs.
    pub fn n_points(&self) -> usize {
        self.jw.len()
    }

    /// |Ω|
    pub fn area(&self) -> f64 {
        self.area
    }

    #[inline]
    pub(crate) fn idx(&self, t: usize, q: usize) -> usize {
        t * self.rule.len() + q
    }

    /// Quadrature weight times Jacobian determinant.
    #[inline]
    pub fn jw(&self, t: usize, q: usize) -> f64 {
        self.jw[self.idx(t, q)]
    }

    #[inline]
    pub fn point(&self, t: usize, q: usize) -> [f64; 2] {
        self.points[self.idx(t, q)]
    }

    /// Interpolated wall distance at a quadrature point, clamped at 0.
    #[inline]
    pub fn wall_distance_at(&self, t: usize, q: usize) -> f64 {
        self.wall_q[self.idx(t, q)]
    }

    #[inline]
    pub(crate) fn p2_values(&self, q: usize) -> &[f64; 6] {
        &self.p2_ref[q]
    }

    #[inline]
    pub(crate) fn p1_values(&self, q: usize) -> &[f64; 3] {
        &self.p1_ref[q]
    }

    #[inline]
    pub(crate) fn p2_gradients(&self, t: usize, q: usize) -> &[[f64; 2]; 6] {
        &self.p2_grad[self.idx(t, q)]
    }

    #[inline]
    pub(crate) fn p1_gradients(&self, t: usize) -> &[[f64; 2]; 3] {
        &self.p1_grad[t]
    }

    pub fn velocity_at(&self, v: &[f64], t: usize, q: usize) -> [f64; 2] {
        let nodes = self.dofs.local_nodes(t);
        let n = self.dofs.n_nodes();
        let phi = &self.p2_ref[q];
        let mut out = [0.0; 2];
        for a in 0..6 {
            out[0] += v[nodes[a]] * phi[a];
            out[1] += v[n + nodes[a]] * phi[a];
        }
        out
    }

    /// `g[i][j] = ∂_j v_i` at a quadrature point.
    pub fn velocity_gradient_at(&self, v: &[f64], t: usize, q: usize) -> [[f64; 2]; 2] {
        let nodes = self.dofs.local_nodes(t);
        let n = self.dofs.n_nodes();
        let grads = self.p2_gradients(t, q);
        let mut g = [[0.0; 2]; 2];
        for a in 0..6 {
            let (vx, vy) = (v[nodes[a]], v[n + nodes[a]]);
            g[0][0] += vx * grads[a][0];
            g[0][1] += vx * grads[a][1];
            g[1][0] += vy * grads[a][0];
            g[1][1] += vy * grads[a][1];
        }
        g
    }

    /// P1 interpolation of vertex values at a quadrature point.
    pub fn scalar_at(&self, k: &[f64], t: usize, q: usize) -> f64 {
        let tri = &self.mesh.triangles()[t];
        let psi = &self.p1_ref[q];
        (0..3).map(|r| k[tri[r]] * psi[r]).sum()
    }

    /// `|∇ˢv|²` at every quadrature point.
    pub fn sym_grad_sq(&self, v: &[f64]) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n_points());
        for t in 0..self.n_elements() {
            for q in 0..self.n_q() {
                out.push(sym_grad_sq(self.velocity_gradient_at(v, t, q)));
            }
        }
        out
    }

    pub fn interpolate_velocity(&self, f: impl Fn([f64; 2]) -> [f64; 2]) -> Vec<f64> {
        let n = self.dofs.n_nodes();
        let mut v = vec![0.0; 2 * n];
        for i in 0..n {
            let [fx, fy] = f(self.mesh.node(i));
            v[i] = fx;
            v[n + i] = fy;
        }
        v
    }

    pub fn interpolate_scalar(&self, f: impl Fn([f64; 2]) -> f64) -> Vec<f64> {
        self.mesh.vertices().iter().map(|&p| f(p)).collect()
    }

    /// Per-quadrature-point field from a closure of the physical point.
    pub fn quadrature_field(&self, f: impl Fn(usize, usize) -> f64) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n_points());
        for t in 0..self.n_elements() {
            for q in 0..self.n_q() {
                out.push(f(t, q));
            }
        }
        out
    }
}

/// `∇ˢv : ∇ˢv` for a velocity gradient `g[i][j] = ∂_j v_i`.
#[inline]
pub fn sym_grad_sq(g: [[f64; 2]; 2]) -> f64 {
    let off = 0.5 * (g[0][1] + g[1][0]);
    g[0][0] * g[0][0] + g[1][1] * g[1][1] + 2.0 * off * off
}
