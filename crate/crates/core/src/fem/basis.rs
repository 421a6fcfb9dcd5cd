//! Lagrange shape functions on the reference triangle.
//!
//! Local numbering: vertices 0, 1, 2 at (0,0), (1,0), (0,1); for P2 the
//! midpoints follow as 3 = edge(0,1), 4 = edge(1,2), 5 = edge(2,0).

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Element {
    P1,
    P2,
}

impl Element {
    pub fn n_local(self) -> usize {
        match self {
            Element::P1 => 3,
            Element::P2 => 6,
        }
    }
}

/// Values and reference gradients of all local shape functions.
#[derive(Clone, Debug, PartialEq)]
pub struct BasisValues {
    pub values: Vec<f64>,
    pub gradients: Vec<[f64; 2]>,
}

const TOL: f64 = 1e-12;

pub fn eval_basis(element: Element, point: [f64; 2]) -> Result<BasisValues> {
    let [xi, eta] = point;
    if !(xi >= -TOL && eta >= -TOL && xi + eta <= 1.0 + TOL) {
        return Err(Error::Domain { xi, eta });
    }
    Ok(match element {
        Element::P1 => BasisValues {
            values: p1_values(point).to_vec(),
            gradients: P1_GRADIENTS.to_vec(),
        },
        Element::P2 => BasisValues {
            values: p2_values(point).to_vec(),
            gradients: p2_gradients(point).to_vec(),
        },
    })
}

pub(crate) const P1_GRADIENTS: [[f64; 2]; 3] = [[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]];

pub(crate) fn p1_values([xi, eta]: [f64; 2]) -> [f64; 3] {
    [1.0 - xi - eta, xi, eta]
}

pub(crate) fn p2_values(point: [f64; 2]) -> [f64; 6] {
    let [l0, l1, l2] = p1_values(point);
    [
        l0 * (2.0 * l0 - 1.0),
        l1 * (2.0 * l1 - 1.0),
        l2 * (2.0 * l2 - 1.0),
        4.0 * l0 * l1,
        4.0 * l1 * l2,
        4.0 * l2 * l0,
    ]
}

pub(crate) fn p2_gradients(point: [f64; 2]) -> [[f64; 2]; 6] {
    let [l0, l1, l2] = p1_values(point);
    let [g0, g1, g2] = P1_GRADIENTS;
    let scale = |g: [f64; 2], s: f64| [g[0] * s, g[1] * s];
    let add = |a: [f64; 2], b: [f64; 2]| [a[0] + b[0], a[1] + b[1]];
    [
        scale(g0, 4.0 * l0 - 1.0),
        scale(g1, 4.0 * l1 - 1.0),
        scale(g2, 4.0 * l2 - 1.0),
        add(scale(g0, 4.0 * l1), scale(g1, 4.0 * l0)),
        add(scale(g1, 4.0 * l2), scale(g2, 4.0 * l1)),
        add(scale(g2, 4.0 * l0), scale(g0, 4.0 * l2)),
    ]
}

/// Reference coordinates of the local nodes.
pub fn reference_nodes(element: Element) -> &'static [[f64; 2]] {
    const NODES: [[f64; 2]; 6] = [
        [0.0, 0.0],
        [1.0, 0.0],
        [0.0, 1.0],
        [0.5, 0.0],
        [0.5, 0.5],
        [0.0, 0.5],
    ];
    &NODES[..element.n_local()]
}
