//! Element loops for the momentum saddle-point system and the P1 scalar
//! transport system.

use super::{Discretization, SparseMatrix, Triplets};
use crate::error::{Error, Result};

/// Terms of an unconstrained velocity block `2N × 2N`.
#[derive(Clone, Copy, Debug, Default)]
pub struct VelocityTerms<'a> {
    /// Coefficient on the mass matrix.
    pub mass: f64,
    /// Effective viscosity `2ν + ν_T` at every quadrature point.
    pub viscosity: Option<&'a [f64]>,
    /// Transport velocity of the skew convection form.
    pub convection: Option<&'a [f64]>,
}

/// Inputs of one backward Euler momentum system.
#[derive(Clone, Copy, Debug)]
pub struct MomentumInputs<'a> {
    pub dt: f64,
    /// `2ν + ν_T` at every quadrature point.
    pub viscosity: &'a [f64],
    /// Lagged transport velocity; `None` drops convection (Stokes).
    pub advecting: Option<&'a [f64]>,
    /// Velocity at `t_n`.
    pub previous: &'a [f64],
    /// Body force at every quadrature point, at `t_{n+1}`.
    pub forcing: &'a [[f64; 2]],
    /// Dirichlet data as a full velocity vector; `None` means no-slip.
    pub boundary: Option<&'a [f64]>,
}

/// Inputs of one backward Euler step of the P1 transport-reaction equation
/// with homogeneous Dirichlet walls.
#[derive(Clone, Copy, Debug)]
pub struct ScalarTransportInputs<'a> {
    pub dt: f64,
    pub velocity: &'a [f64],
    /// Diffusivity at every quadrature point.
    pub diffusion: &'a [f64],
    /// Reaction coefficient at every quadrature point.
    pub reaction: &'a [f64],
    /// Source at every quadrature point.
    pub source: &'a [f64],
    pub previous: &'a [f64],
}

fn check_finite(disc: &Discretization, t: usize, field: &[f64], what: &str) -> Result<()> {
    let base = disc.idx(t, 0);
    if field[base..base + disc.n_q()].iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NumericalInput {
            element: t,
            what: what.to_string(),
        })
    }
}

/// Local 12×12 velocity matrix, rows and columns ordered `(component, node)`.
fn velocity_element(
    disc: &Discretization,
    t: usize,
    terms: &VelocityTerms,
    k: &mut [[f64; 12]; 12],
) {
    *k = [[0.0; 12]; 12];
    for q in 0..disc.n_q() {
        let w = disc.jw(t, q);
        let phi = disc.p2_values(q);
        let g = disc.p2_gradients(t, q);
        let nu = terms.viscosity.map_or(0.0, |v| v[disc.idx(t, q)]);
        let adv = match terms.convection {
            Some(lag) => {
                let wq = disc.velocity_at(lag, t, q);
                let mut adv = [0.0; 6];
                for a in 0..6 {
                    adv[a] = wq[0] * g[a][0] + wq[1] * g[a][1];
                }
                adv
            }
            None => [0.0; 6],
        };
        for b in 0..6 {
            for a in 0..6 {
                let dot = g[a][0] * g[b][0] + g[a][1] * g[b][1];
                let diag = terms.mass * phi[a] * phi[b]
                    + 0.5 * (adv[a] * phi[b] - adv[b] * phi[a])
                    + 0.5 * nu * dot;
                for d in 0..2 {
                    for c in 0..2 {
                        let mut v = 0.5 * nu * g[a][d] * g[b][c];
                        if c == d {
                            v += diag;
                        }
                        k[d * 6 + b][c * 6 + a] += w * v;
                    }
                }
            }
        }
    }
}

fn velocity_globals(disc: &Discretization, t: usize) -> [usize; 12] {
    let nodes = disc.dofs.local_nodes(t);
    let n = disc.dofs.n_nodes();
    let mut out = [0; 12];
    for a in 0..6 {
        out[a] = nodes[a];
        out[6 + a] = n + nodes[a];
    }
    out
}

/// Unconstrained velocity block (no boundary conditions, no pressure).
pub fn velocity_block(disc: &Discretization, terms: VelocityTerms) -> Result<SparseMatrix> {
    let nt = disc.n_elements();
    let mut trip = Triplets::with_capacity(disc.dofs.n_velocity(), nt * 144);
    let mut k = [[0.0; 12]; 12];
    for t in 0..nt {
        if let Some(v) = terms.viscosity {
            check_finite(disc, t, v, "viscosity")?;
        }
        velocity_element(disc, t, &terms, &mut k);
        let gl = velocity_globals(disc, t);
        for i in 0..12 {
            for j in 0..12 {
                trip.push(gl[i], gl[j], k[i][j]);
            }
        }
    }
    Ok(trip.to_matrix())
}

/// Backward Euler Navier–Stokes saddle-point system in unknowns
/// `[u_x, u_y, p, λ]`.
///
/// Dirichlet velocity dofs are eliminated symmetrically: their rows become
/// identity rows and their columns move to the right-hand side. The pattern
/// of the returned triplets depends only on the mesh.
pub fn assemble_momentum_system(
    disc: &Discretization,
    input: &MomentumInputs,
) -> Result<(Triplets, Vec<f64>)> {
    if !(input.dt > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "time step must be positive (got {})",
            input.dt
        )));
    }
    let dofs = &disc.dofs;
    let n_sys = dofs.n_system();
    let p_off = dofs.pressure_offset();
    let lambda = dofs.multiplier();
    let nt = disc.n_elements();
    let mut trip = Triplets::with_capacity(n_sys, nt * (144 + 2 * 36 + 6) + dofs.n_velocity());
    let mut rhs = vec![0.0; n_sys];

    let zero_bc;
    let g = match input.boundary {
        Some(g) => g,
        None => {
            zero_bc = vec![0.0; dofs.n_velocity()];
            &zero_bc
        }
    };
    let terms = VelocityTerms {
        mass: 1.0 / input.dt,
        viscosity: Some(input.viscosity),
        convection: input.advecting,
    };
    let mut k = [[0.0; 12]; 12];
    for t in 0..nt {
        check_finite(disc, t, input.viscosity, "viscosity")?;
        let base = disc.idx(t, 0);
        if input.forcing[base..base + disc.n_q()]
            .iter()
            .any(|f| !(f[0].is_finite() && f[1].is_finite()))
        {
            return Err(Error::NumericalInput {
                element: t,
                what: "forcing".into(),
            });
        }
        velocity_element(disc, t, &terms, &mut k);
        let gl = velocity_globals(disc, t);
        let tri = disc.mesh.triangles()[t];

        let mut b = [[0.0; 12]; 3];
        let mut m = [0.0; 3];
        let mut load = [0.0; 12];
        for q in 0..disc.n_q() {
            let w = disc.jw(t, q);
            let phi = disc.p2_values(q);
            let psi = disc.p1_values(q);
            let grads = disc.p2_gradients(t, q);
            let f = input.forcing[disc.idx(t, q)];
            let vo = disc.velocity_at(input.previous, t, q);
            for a in 0..6 {
                for c in 0..2 {
                    load[c * 6 + a] += w * phi[a] * (f[c] + vo[c] / input.dt);
                }
            }
            for r in 0..3 {
                m[r] += w * psi[r];
                for a in 0..6 {
                    for c in 0..2 {
                        b[r][c * 6 + a] -= w * psi[r] * grads[a][c];
                    }
                }
            }
        }

        for i in 0..12 {
            let gi = gl[i];
            if dofs.velocity_dof_fixed(gi) {
                continue;
            }
            rhs[gi] += load[i];
            for j in 0..12 {
                let gj = gl[j];
                if dofs.velocity_dof_fixed(gj) {
                    rhs[gi] -= k[i][j] * g[gj];
                } else {
                    trip.push(gi, gj, k[i][j]);
                }
            }
        }
        for r in 0..3 {
            let gp = p_off + tri[r];
            for j in 0..12 {
                let gj = gl[j];
                if dofs.velocity_dof_fixed(gj) {
                    rhs[gp] -= b[r][j] * g[gj];
                } else {
                    trip.push(gp, gj, b[r][j]);
                    trip.push(gj, gp, b[r][j]);
                }
            }
            trip.push(lambda, gp, m[r]);
            trip.push(gp, lambda, m[r]);
        }
    }
    for d in dofs.constrained_velocity_dofs() {
        trip.push(d, d, 1.0);
        rhs[d] = g[d];
    }
    Ok((trip, rhs))
}

/// Backward Euler system for
/// `k_t + v·∇k − ∇·(D∇k) + R k = S` with `k = 0` on walls, P1 in space,
/// convection in skew form.
pub fn assemble_scalar_transport(
    disc: &Discretization,
    input: &ScalarTransportInputs,
) -> Result<(Triplets, Vec<f64>)> {
    if !(input.dt > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "time step must be positive (got {})",
            input.dt
        )));
    }
    let dofs = &disc.dofs;
    let n = dofs.n_scalar();
    let nt = disc.n_elements();
    let mut trip = Triplets::with_capacity(n, nt * 9 + n);
    let mut rhs = vec![0.0; n];
    for t in 0..nt {
        check_finite(disc, t, input.diffusion, "diffusivity")?;
        check_finite(disc, t, input.reaction, "reaction coefficient")?;
        check_finite(disc, t, input.source, "source")?;
        let tri = disc.mesh.triangles()[t];
        let grads = disc.p1_gradients(t);
        let mut k = [[0.0; 3]; 3];
        let mut load = [0.0; 3];
        for q in 0..disc.n_q() {
            let w = disc.jw(t, q);
            let idx = disc.idx(t, q);
            let psi = disc.p1_values(q);
            let v = disc.velocity_at(input.velocity, t, q);
            let kold = disc.scalar_at(input.previous, t, q);
            let (diff, react, src) = (input.diffusion[idx], input.reaction[idx], input.source[idx]);
            let mut adv = [0.0; 3];
            for a in 0..3 {
                adv[a] = v[0] * grads[a][0] + v[1] * grads[a][1];
            }
            for b in 0..3 {
                load[b] += w * psi[b] * (src + kold / input.dt);
                for a in 0..3 {
                    let dot = grads[a][0] * grads[b][0] + grads[a][1] * grads[b][1];
                    k[b][a] += w
                        * ((1.0 / input.dt + react) * psi[a] * psi[b]
                            + 0.5 * (adv[a] * psi[b] - adv[b] * psi[a])
                            + diff * dot);
                }
            }
        }
        for i in 0..3 {
            if dofs.scalar_fixed(tri[i]) {
                continue;
            }
            rhs[tri[i]] += load[i];
            for j in 0..3 {
                if !dofs.scalar_fixed(tri[j]) {
                    trip.push(tri[i], tri[j], k[i][j]);
                }
            }
        }
    }
    for v in dofs.constrained_scalar_dofs() {
        trip.push(v, v, 1.0);
    }
    Ok((trip, rhs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::sparse::solve;
    use crate::mesh::unit_square;
    use proptest::prelude::*;

    fn disc(n: usize) -> Discretization {
        Discretization::new(unit_square(n).unwrap()).unwrap()
    }

    #[test]
    fn homogeneous_problem_has_zero_solution() {
        let d = disc(3);
        let np = d.n_points();
        let nu = vec![0.2; np];
        let zero = vec![0.0; d.dofs.n_velocity()];
        let f = vec![[0.0; 2]; np];
        let (trip, rhs) = assemble_momentum_system(
            &d,
            &MomentumInputs {
                dt: 0.1,
                viscosity: &nu,
                advecting: Some(&zero),
                previous: &zero,
                forcing: &f,
                boundary: None,
            },
        )
        .unwrap();
        let x = solve(&trip.to_matrix(), &rhs).unwrap();
        assert!(x.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn viscous_block_is_linear_in_coefficient() {
        let d = disc(2);
        let np = d.n_points();
        let (nu, c) = (0.5, 0.3);
        let eff = vec![2.0 * nu + c; np];
        let unit = vec![1.0; np];
        let a = velocity_block(&d, VelocityTerms { viscosity: Some(&eff), ..Default::default() }).unwrap();
        let b = velocity_block(&d, VelocityTerms { viscosity: Some(&unit), ..Default::default() }).unwrap();
        let scale = 2.0 * nu + c;
        let mut worst: f64 = 0.0;
        a.for_each(|r, col, v| worst = worst.max((v - scale * b.get(r, col)).abs()));
        assert!(worst < 1e-13 * a.max_abs());
    }

    #[test]
    fn mass_and_viscous_blocks_are_symmetric() {
        let d = disc(3);
        let nu: Vec<f64> = (0..d.n_points()).map(|i| 0.1 + (i % 7) as f64 * 0.01).collect();
        for terms in [
            VelocityTerms { mass: 1.0, ..Default::default() },
            VelocityTerms { viscosity: Some(&nu), ..Default::default() },
        ] {
            let m = velocity_block(&d, terms).unwrap();
            assert!(m.max_asymmetry() <= 1e-12 * m.max_abs());
        }
    }

    #[test]
    fn viscous_form_matches_hand_integral_of_shear() {
        // v = (y, 0): ∫ |∇ˢv|² = 1/2 on the unit square; with coefficient 1
        // the bilinear form is exactly that integral.
        let d = disc(2);
        let v = d.interpolate_velocity(|[_, y]| [y, 0.0]);
        let one = vec![1.0; d.n_points()];
        let a = velocity_block(&d, VelocityTerms { viscosity: Some(&one), ..Default::default() }).unwrap();
        assert!((a.bilinear(&v, &v) - 0.5).abs() < 1e-13);
    }

    #[test]
    fn wrong_sign_viscosity_element_is_named() {
        let d = disc(2);
        let mut nu = vec![1.0; d.n_points()];
        nu[d.idx(5, 2)] = f64::NAN;
        let err = velocity_block(&d, VelocityTerms { viscosity: Some(&nu), ..Default::default() })
            .unwrap_err();
        assert!(matches!(err, Error::NumericalInput { element: 5, .. }));
    }

    /// Interior rows away from walls reduce to the scalar backward Euler
    /// update when applied to a uniform field.
    fn check_uniform_rows(kold: f64, src: f64, expect: f64) {
        let d = disc(6);
        let np = d.n_points();
        let (dt, tau) = (0.01, 0.1);
        let r = std::f64::consts::SQRT_2 / (2.0 * tau);
        let zero_q = vec![0.0; np];
        let vel = vec![0.0; d.dofs.n_velocity()];
        let (trip, rhs) = assemble_scalar_transport(
            &d,
            &ScalarTransportInputs {
                dt,
                velocity: &vel,
                diffusion: &zero_q,
                reaction: &vec![r; np],
                source: &vec![src; np],
                previous: &vec![kold; d.dofs.n_scalar()],
            },
        )
        .unwrap();
        let a = trip.to_matrix();
        let value = expect / (1.0 + dt * r);
        let ax = a.matvec(&vec![value; d.dofs.n_scalar()]);
        let mut near_wall = vec![false; d.dofs.n_scalar()];
        for tri in d.mesh.triangles() {
            if tri.iter().any(|&v| d.dofs.scalar_fixed(v)) {
                for &v in tri {
                    near_wall[v] = true;
                }
            }
        }
        let mut checked = 0;
        for v in 0..d.dofs.n_scalar() {
            if !near_wall[v] {
                assert!((ax[v] - rhs[v]).abs() < 1e-14, "row {v}");
                checked += 1;
            }
        }
        assert!(checked > 0);
        let x = solve(&a, &rhs).unwrap();
        for v in d.dofs.constrained_scalar_dofs() {
            assert_eq!(x[v], 0.0);
        }
    }

    #[test]
    fn reaction_only_rows_decay_like_the_ode() {
        check_uniform_rows(1.0, 0.0, 1.0);
    }

    #[test]
    fn constant_source_rows_match_hand_solution() {
        let (s, dt) = (2.5, 0.01);
        check_uniform_rows(0.0, s, s * dt);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(20))]
        #[test]
        fn convection_matrix_is_skew(seed in any::<u64>()) {
            use rand::{Rng, SeedableRng};
            let d = disc(3);
            let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
            let w: Vec<f64> = (0..d.dofs.n_velocity()).map(|_| rng.random_range(-1.0..1.0)).collect();
            let n = velocity_block(&d, VelocityTerms { convection: Some(&w), ..Default::default() }).unwrap();
            let u: Vec<f64> = (0..d.dofs.n_velocity()).map(|_| rng.random_range(-1.0..1.0)).collect();
            let uu: f64 = u.iter().map(|x| x * x).sum();
            prop_assert!(n.bilinear(&u, &u).abs() <= 1e-12 * uu);
        }
    }
}
