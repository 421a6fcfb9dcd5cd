use super::{sym_grad_sq, Discretization};

/// Integrand of [`integrate_functional`].
#[derive(Clone, Copy)]
pub enum Functional<'a> {
    /// `|v|²`
    L2Sq,
    /// `|∇ˢv|²`
    SymGradSq,
    /// `|∇×v|²`
    CurlSq,
    /// `f·v`
    Dot(&'a dyn Fn([f64; 2]) -> [f64; 2]),
    /// `w |∇ˢv|²` with `w` given at every quadrature point.
    WeightedSymGradSq(&'a [f64]),
}

/// `∫_Ω` of the chosen density of the velocity field `v`.
pub fn integrate_functional(disc: &Discretization, kind: Functional, v: &[f64]) -> f64 {
    let mut total = 0.0;
    for t in 0..disc.n_elements() {
        let mut local = 0.0;
        for q in 0..disc.n_q() {
            let density = match kind {
                Functional::L2Sq => {
                    let u = disc.velocity_at(v, t, q);
                    u[0] * u[0] + u[1] * u[1]
                }
                Functional::SymGradSq => sym_grad_sq(disc.velocity_gradient_at(v, t, q)),
                Functional::CurlSq => {
                    let g = disc.velocity_gradient_at(v, t, q);
                    let w = g[1][0] - g[0][1];
                    w * w
                }
                Functional::Dot(f) => {
                    let u = disc.velocity_at(v, t, q);
                    let fx = f(disc.point(t, q));
                    fx[0] * u[0] + fx[1] * u[1]
                }
                Functional::WeightedSymGradSq(w) => {
                    w[disc.idx(t, q)] * sym_grad_sq(disc.velocity_gradient_at(v, t, q))
                }
            };
            local += disc.jw(t, q) * density;
        }
        total += local;
    }
    total
}
