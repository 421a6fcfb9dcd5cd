//! Coupled backward Euler time stepping.

use log::warn;
use faer::linalg::solvers::SolveLstsq;
use faer::Mat;

use crate::closures::{step_ln_k_ode, Closure, ClosureKind, TurbState};
use crate::error::{Error, Result};
use crate::fem::{assemble_momentum_system, DirectSolver, Discretization, FlowState, MomentumInputs};
use crate::statistics::{
    budget_terms, enstrophy, eps_model, kinetic_energy, taylor_microscale, turbulence_intensity,
    BudgetInputs, StatsRecord,
};

/// Body force and boundary velocity of a scenario.
pub trait Forcing {
    fn force(&self, x: [f64; 2], t: f64) -> [f64; 2];

    /// Dirichlet velocity on walls; no-slip unless overridden.
    fn boundary_velocity(&self, _x: [f64; 2], _t: f64) -> [f64; 2] {
        [0.0, 0.0]
    }

    fn has_boundary_data(&self) -> bool {
        false
    }
}

impl<F: Fn([f64; 2], f64) -> [f64; 2]> Forcing for F {
    fn force(&self, x: [f64; 2], t: f64) -> [f64; 2] {
        self(x, t)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StepperConfig {
    pub dt: f64,
    /// Kinematic viscosity ν.
    pub nu: f64,
    /// Relative velocity increment that ends the Picard iteration.
    pub picard_tol: f64,
    pub picard_max: usize,
    /// Anderson mixing depth for the Picard iteration; 0 is plain Picard.
    pub anderson: usize,
    pub filter: bool,
    /// Time at which the TKE model is switched on.
    pub t_star: f64,
    /// Reynolds number in the TKE initialisation.
    pub reynolds: f64,
    /// Include the convection term (false gives unsteady Stokes).
    pub convection: bool,
}

impl Default for StepperConfig {
    fn default() -> Self {
        StepperConfig {
            dt: 0.01,
            nu: 1e-4,
            picard_tol: 1e-9,
            picard_max: 20,
            anderson: 0,
            filter: false,
            t_star: 1.0,
            reynolds: 1e4,
            convection: true,
        }
    }
}

impl StepperConfig {
    pub fn validate(&self) -> Result<()> {
        let check = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")))
            }
        };
        check("dt", self.dt)?;
        check("nu", self.nu)?;
        check("picard_tol", self.picard_tol)?;
        check("reynolds", self.reynolds)?;
        if self.picard_max == 0 {
            return Err(Error::InvalidParameter("picard_max must be at least 1".into()));
        }
        if !self.t_star.is_finite() {
            return Err(Error::InvalidParameter("t_star must be finite".into()));
        }
        Ok(())
    }
}

/// Anderson mixing of a fixed-point iteration `x ← g(x)`.
///
/// With depth `m` the next iterate is `g_k − ΔG γ`, where `γ` minimises
/// `‖f_k − ΔF γ‖` over the last `m` differences of the residuals
/// `f = g(x) − x` and of the images `g`. The weights sum to one, so affine
/// constraints shared by every `g` (boundary values, discrete divergence)
/// carry over to the mixed iterate. Depth 0 returns `g` unchanged.
#[derive(Clone, Debug)]
struct Anderson {
    depth: usize,
    last: Option<(Vec<f64>, Vec<f64>)>,
    d_f: Vec<Vec<f64>>,
    d_g: Vec<Vec<f64>>,
}

impl Anderson {
    fn new(depth: usize) -> Self {
        Anderson { depth, last: None, d_f: Vec::new(), d_g: Vec::new() }
    }

    fn next(&mut self, x: &[f64], g: &[f64]) -> Vec<f64> {
        if self.depth == 0 {
            return g.to_vec();
        }
        let f: Vec<f64> = g.iter().zip(x).map(|(g, x)| g - x).collect();
        if let Some((f_old, g_old)) = self.last.take() {
            if self.d_f.len() == self.depth {
                self.d_f.remove(0);
                self.d_g.remove(0);
            }
            self.d_f.push(f.iter().zip(&f_old).map(|(a, b)| a - b).collect());
            self.d_g.push(g.iter().zip(&g_old).map(|(a, b)| a - b).collect());
        }
        self.last = Some((f.clone(), g.to_vec()));
        let m = self.d_f.len();
        if m == 0 {
            return g.to_vec();
        }
        let a = Mat::from_fn(f.len(), m, |i, j| self.d_f[j][i]);
        let rhs = Mat::from_fn(f.len(), 1, |i, _| f[i]);
        let gamma = a.qr().solve_lstsq(&rhs);
        if (0..m).any(|j| !gamma[(j, 0)].is_finite()) {
            self.d_f.clear();
            self.d_g.clear();
            return g.to_vec();
        }
        let mut out = g.to_vec();
        for (j, dg) in self.d_g.iter().enumerate() {
            let c = gamma[(j, 0)];
            for (o, d) in out.iter_mut().zip(dg) {
                *o -= c * d;
            }
        }
        out
    }
}

/// Everything that changes from one step to the next.
#[derive(Clone, Debug, PartialEq)]
pub struct SimulationState {
    pub t: f64,
    pub step: usize,
    pub flow: FlowState,
    /// Velocity at `t_{n−1}`, kept for the time filter.
    pub previous_velocity: Option<Vec<f64>>,
    pub turb: TurbState,
}

/// Outcome of one Picard solve.
#[derive(Clone, Debug)]
pub struct PicardOutcome {
    pub flow: FlowState,
    pub iterations: usize,
    pub converged: bool,
    /// Relative increment after each iteration.
    pub increments: Vec<f64>,
}

/// `v̂ = v_new − (1/3)(v_new − 2 v_n + v_{n−1})`
pub fn time_filter(v_new: &[f64], v_n: &[f64], v_nm1: &[f64]) -> Vec<f64> {
    v_new
        .iter()
        .zip(v_n)
        .zip(v_nm1)
        .map(|((a, b), c)| a - (a - 2.0 * b + c) / 3.0)
        .collect()
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub struct Stepper {
    disc: Discretization,
    closure: Closure,
    config: StepperConfig,
    state: SimulationState,
    t0: f64,
    solver: DirectSolver,
    k_solver: DirectSolver,
    last_increments: Vec<f64>,
}

impl Stepper {
    pub fn new(disc: Discretization, closure: Closure, config: StepperConfig) -> Result<Self> {
        closure.validate()?;
        config.validate()?;
        let mut turb = TurbState::Absent;
        if config.t_star <= 0.0 && closure.kind != ClosureKind::Nse {
            turb = closure.init_k(&disc, config.reynolds)?;
        }
        let state = SimulationState {
            t: 0.0,
            step: 0,
            flow: FlowState::zeros(&disc.dofs),
            previous_velocity: None,
            turb,
        };
        Ok(Stepper {
            disc,
            closure,
            config,
            state,
            t0: 0.0,
            solver: DirectSolver::new(),
            k_solver: DirectSolver::new(),
            last_increments: Vec::new(),
        })
    }

    /// Starts from a given velocity at time `t`.
    pub fn with_initial_velocity(mut self, t: f64, velocity: Vec<f64>) -> Result<Self> {
        if velocity.len() != self.disc.dofs.n_velocity() {
            return Err(Error::InvalidParameter(format!(
                "initial velocity has {} entries, expected {}",
                velocity.len(),
                self.disc.dofs.n_velocity()
            )));
        }
        self.t0 = t;
        self.state.t = t;
        self.state.flow.velocity = velocity;
        if self.state.turb.is_absent() && t >= self.config.t_star && self.closure.kind != ClosureKind::Nse {
            self.state.turb = self.closure.init_k(&self.disc, self.config.reynolds)?;
        }
        Ok(self)
    }

    pub fn disc(&self) -> &Discretization {
        &self.disc
    }

    pub fn closure(&self) -> &Closure {
        &self.closure
    }

    pub fn config(&self) -> &StepperConfig {
        &self.config
    }

    pub fn state(&self) -> &SimulationState {
        &self.state
    }

    pub fn time(&self) -> f64 {
        self.state.t
    }

    /// Relative Picard increments of the last step.
    pub fn last_increments(&self) -> &[f64] {
        &self.last_increments
    }

    /// `ν_T` of the current state at every quadrature point.
    pub fn nu_t(&self) -> Result<Vec<f64>> {
        self.closure.nu_t(&self.disc, &self.state.turb)
    }

    fn forcing_at(&self, forcing: &dyn Forcing, t: f64) -> Vec<[f64; 2]> {
        let d = &self.disc;
        let mut out = Vec::with_capacity(d.n_points());
        for e in 0..d.n_elements() {
            for q in 0..d.n_q() {
                out.push(forcing.force(d.point(e, q), t));
            }
        }
        out
    }

    /// Fixed-point iteration on the transport velocity with `ν_T` frozen,
    /// starting from the current velocity.
    pub fn picard_momentum_solve(&mut self, forcing: &dyn Forcing, t_new: f64, nu_t: &[f64]) -> Result<PicardOutcome> {
        let d = &self.disc;
        let f = self.forcing_at(forcing, t_new);
        let viscosity: Vec<f64> = nu_t.iter().map(|n| 2.0 * self.config.nu + n).collect();
        let boundary = forcing
            .has_boundary_data()
            .then(|| d.interpolate_velocity(|x| forcing.boundary_velocity(x, t_new)));
        let n_vel = d.dofs.n_velocity();
        let p_off = d.dofs.pressure_offset();
        let mut lag = self.state.flow.velocity.clone();
        let mut increments = Vec::new();
        let mut flow = self.state.flow.clone();
        let mut converged = false;
        let mut mixer = Anderson::new(self.config.anderson);
        for _ in 0..self.config.picard_max {
            let (a, b) = assemble_momentum_system(
                d,
                &MomentumInputs {
                    dt: self.config.dt,
                    viscosity: &viscosity,
                    advecting: self.config.convection.then_some(&lag[..]),
                    previous: &self.state.flow.velocity,
                    forcing: &f,
                    boundary: boundary.as_deref(),
                },
            )?;
            let x = self.solver.solve(&a, &b)?;
            let v = &x[..n_vel];
            let diff: f64 = v.iter().zip(&lag).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
            let inc = diff / norm(v).max(f64::MIN_POSITIVE);
            increments.push(inc);
            flow = FlowState {
                velocity: v.to_vec(),
                pressure: x[p_off..p_off + d.dofs.n_pressure()].to_vec(),
            };
            if inc <= self.config.picard_tol || !self.config.convection {
                converged = true;
                break;
            }
            lag = mixer.next(&lag, v);
        }
        if !converged && self.config.picard_max > 1 {
            warn!(
                "Picard iteration stopped at t = {t_new} after {} iterations (increment {:e})",
                increments.len(),
                increments.last().copied().unwrap_or(f64::NAN)
            );
        }
        Ok(PicardOutcome {
            iterations: increments.len(),
            flow,
            converged,
            increments,
        })
    }

    /// One coupled step: momentum, optional filter, TKE update, statistics.
    pub fn advance(&mut self, forcing: &dyn Forcing) -> Result<StatsRecord> {
        let dt = self.config.dt;
        let t_new = self.t0 + (self.state.step + 1) as f64 * dt;
        let nu_t = self.closure.nu_t(&self.disc, &self.state.turb)?;

        let outcome = self.picard_momentum_solve(forcing, t_new, &nu_t)?;
        self.last_increments = outcome.increments.clone();
        let mut flow = outcome.flow;
        if self.config.filter {
            if let Some(prev) = &self.state.previous_velocity {
                flow.velocity = time_filter(&flow.velocity, &self.state.flow.velocity, prev);
            }
        }

        let d = &self.disc;
        let turb_old = self.state.turb.clone();
        let mut eps = 0.0;
        let active = t_new >= self.config.t_star - 1e-9 * dt;
        let turb_new = match (&turb_old, active) {
            (_, false) => turb_old.clone(),
            (_, true) if self.closure.kind == ClosureKind::Nse => TurbState::Absent,
            (TurbState::Absent, true) => {
                let k = self.closure.init_k(d, self.config.reynolds)?;
                eps = self.closure.eps_of(d, &k, &flow.velocity)?;
                k
            }
            (TurbState::FieldK(k_old), true) => {
                eps = self.closure.eps_of(d, &turb_old, &flow.velocity)?;
                TurbState::FieldK(self.closure.step_k_pde(d, &flow.velocity, k_old, dt, &mut self.k_solver)?)
            }
            (TurbState::ScalarK { ln_k }, true) => {
                let c = self.closure.half_eq_eps_per_k(d, &flow.velocity);
                eps = c * ln_k.exp();
                TurbState::ScalarK {
                    ln_k: step_ln_k_ode(*ln_k, c, dt, self.closure.tau)?,
                }
            }
        };

        let f = self.forcing_at(forcing, t_new);
        let terms = budget_terms(
            d,
            &self.closure,
            &BudgetInputs {
                v_new: &flow.velocity,
                v_old: &self.state.flow.velocity,
                turb_new: &turb_new,
                turb_old: &turb_old,
                nu_t: &nu_t,
                forcing: &f,
                dt,
                nu: self.config.nu,
            },
        );
        let k_avg = turb_new.k_average(d);
        let record = StatsRecord {
            t: t_new,
            kinetic_energy: kinetic_energy(d, &flow.velocity),
            enstrophy: enstrophy(d, &flow.velocity),
            taylor_microscale: taylor_microscale(d, &flow.velocity),
            turbulence_intensity: turbulence_intensity(d, &turb_new, &flow.velocity),
            k_avg,
            eps,
            eps_model: eps_model(d, &self.closure, self.config.nu, &flow.velocity, k_avg),
            budget_residual: terms.residual(),
            picard_iters: outcome.iterations,
            budget_scale: terms.scale(),
            picard_converged: outcome.converged,
            ln_k: match &turb_new {
                TurbState::ScalarK { ln_k } => Some(*ln_k),
                _ => None,
            },
        };
        record.check_finite()?;

        let old = std::mem::replace(&mut self.state.flow, flow);
        self.state.previous_velocity = Some(old.velocity);
        self.state.turb = turb_new;
        self.state.step += 1;
        self.state.t = t_new;
        Ok(record)
    }
}
