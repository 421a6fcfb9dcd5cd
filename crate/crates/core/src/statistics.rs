//! Volume-averaged flow statistics, energy budget and scale diagnostics.

use crate::closures::{Closure, ClosureKind, TurbState};
use crate::error::{Error, Result};
use crate::fem::{integrate_functional, sym_grad_sq, Discretization, Functional};

/// One row of the statistics series. `None` marks an undefined statistic.
#[derive(Clone, Debug, PartialEq)]
pub struct StatsRecord {
    pub t: f64,
    pub kinetic_energy: f64,
    pub enstrophy: f64,
    pub taylor_microscale: Option<f64>,
    pub turbulence_intensity: Option<f64>,
    pub k_avg: f64,
    pub eps: f64,
    pub eps_model: f64,
    pub budget_residual: f64,
    pub picard_iters: usize,
    /// Largest term of the energy budget, for relative residuals.
    pub budget_scale: f64,
    pub picard_converged: bool,
    /// `ln k(t)` for the 1/2-equation model; stays exact after `k_avg`
    /// underflows.
    pub ln_k: Option<f64>,
}

impl StatsRecord {
    pub const COLUMNS: [&'static str; 10] = [
        "t",
        "kinetic_energy",
        "enstrophy",
        "taylor_microscale",
        "turbulence_intensity",
        "k_avg",
        "eps",
        "eps_model",
        "budget_residual",
        "picard_iters",
    ];

    /// Values in [`StatsRecord::COLUMNS`] order.
    pub fn values(&self) -> [Option<f64>; 10] {
        [
            Some(self.t),
            Some(self.kinetic_energy),
            Some(self.enstrophy),
            self.taylor_microscale,
            self.turbulence_intensity,
            Some(self.k_avg),
            Some(self.eps),
            Some(self.eps_model),
            Some(self.budget_residual),
            Some(self.picard_iters as f64),
        ]
    }

    /// First non-finite statistic, if any.
    pub fn check_finite(&self) -> Result<()> {
        for (name, v) in Self::COLUMNS.iter().zip(self.values()) {
            if let Some(v) = v {
                if !v.is_finite() {
                    return Err(Error::NonFinite { name, t: self.t });
                }
            }
        }
        Ok(())
    }
}

/// `(1/|Ω|) ∫ ½|v|²`
pub fn kinetic_energy(disc: &Discretization, v: &[f64]) -> f64 {
    0.5 * integrate_functional(disc, Functional::L2Sq, v) / disc.area()
}

/// `(1/|Ω|) ∫ ½|∇×v|²`
pub fn enstrophy(disc: &Discretization, v: &[f64]) -> f64 {
    0.5 * integrate_functional(disc, Functional::CurlSq, v) / disc.area()
}

/// `(1/15) (∫|∇ˢv|² / ∫|v|²)^{-1/2}`; undefined for a strain-free field.
pub fn taylor_microscale(disc: &Discretization, v: &[f64]) -> Option<f64> {
    let s = integrate_functional(disc, Functional::SymGradSq, v);
    let l2 = integrate_functional(disc, Functional::L2Sq, v);
    (s > 0.0).then(|| (l2 / s).sqrt() / 15.0)
}

/// `∫2k / ∫(2k + |v|²)`; undefined when both vanish.
pub fn turbulence_intensity(disc: &Discretization, turb: &TurbState, v: &[f64]) -> Option<f64> {
    let k = 2.0 * turb.k_average(disc) * disc.area();
    let den = k + integrate_functional(disc, Functional::L2Sq, v);
    (den > 0.0).then(|| k / den)
}

/// Terms of the discrete energy equality over one step, all divided by |Ω|.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct BudgetTerms {
    /// `(E_{n+1} − E_n)/dt`, plus `(k_{n+1} − k_n)/dt` when `k(t)` is carried.
    pub storage: f64,
    /// Backward Euler dissipation `|v_{n+1} − v_n|²/(2 dt |Ω|)`.
    pub numerical: f64,
    /// `∫ 2ν |∇ˢv_{n+1}|² / |Ω|`.
    pub viscous: f64,
    /// Model term: `∫ ν_T |∇ˢv_{n+1}|² / |Ω|` or, when `k` is carried,
    /// `(√2/2)τ⁻¹ k_{n+1}`.
    pub model: f64,
    /// `∫ f·v_{n+1} / |Ω|`.
    pub forcing: f64,
}

impl BudgetTerms {
    pub fn residual(&self) -> f64 {
        self.storage + self.numerical + self.viscous + self.model - self.forcing
    }

    pub fn scale(&self) -> f64 {
        [self.storage, self.numerical, self.viscous, self.model, self.forcing]
            .iter()
            .fold(0.0_f64, |m, v| m.max(v.abs()))
    }
}

/// States entering one step of the budget.
pub struct BudgetInputs<'a> {
    pub v_new: &'a [f64],
    pub v_old: &'a [f64],
    pub turb_new: &'a TurbState,
    pub turb_old: &'a TurbState,
    /// `ν_T` used by the momentum solve, at every quadrature point.
    pub nu_t: &'a [f64],
    /// Body force at `t_{n+1}`, at every quadrature point.
    pub forcing: &'a [[f64; 2]],
    pub dt: f64,
    pub nu: f64,
}

/// Discrete analogue of the energy equality over one backward Euler step.
///
/// With `k(t)` carried on both sides of the step (1/2-equation model) the
/// `k` equation is added and the eddy-viscosity dissipation is replaced by
/// the `k` decay term. Otherwise the momentum identity alone is used, with
/// the eddy viscosity the momentum solve saw. For the 1-equation models the
/// volume-averaged `k` is added in the same way; that identity is not exact
/// since the transport PDE has wall fluxes.
pub fn budget_terms(disc: &Discretization, closure: &Closure, input: &BudgetInputs) -> BudgetTerms {
    let area = disc.area();
    let dt = input.dt;
    let mut storage = 0.0;
    let mut numerical = 0.0;
    let mut viscous = 0.0;
    let mut eddy = 0.0;
    let mut forcing = 0.0;
    for t in 0..disc.n_elements() {
        for q in 0..disc.n_q() {
            let w = disc.jw(t, q);
            let a = disc.velocity_at(input.v_new, t, q);
            let b = disc.velocity_at(input.v_old, t, q);
            let (na, nb) = (a[0] * a[0] + a[1] * a[1], b[0] * b[0] + b[1] * b[1]);
            let d = [a[0] - b[0], a[1] - b[1]];
            storage += w * 0.5 * (na - nb);
            numerical += w * 0.5 * (d[0] * d[0] + d[1] * d[1]);
            let s = sym_grad_sq(disc.velocity_gradient_at(input.v_new, t, q));
            viscous += w * 2.0 * input.nu * s;
            eddy += w * input.nu_t[disc.idx(t, q)] * s;
            let f = input.forcing[disc.idx(t, q)];
            forcing += w * (f[0] * a[0] + f[1] * a[1]);
        }
    }
    let mut terms = BudgetTerms {
        storage: storage / (dt * area),
        numerical: numerical / (dt * area),
        viscous: viscous / area,
        model: eddy / area,
        forcing: forcing / area,
    };
    let carries_k = !input.turb_old.is_absent() && closure.kind != ClosureKind::Nse;
    if carries_k {
        let (k_new, k_old) = (input.turb_new.k_average(disc), input.turb_old.k_average(disc));
        let decay = match closure.kind {
            ClosureKind::OneEqPrandtl => prandtl_decay(disc, closure, input.turb_new),
            _ => closure.decay_rate() * k_new,
        };
        terms.storage += (k_new - k_old) / dt;
        terms.model = decay;
    }
    terms
}

fn prandtl_decay(disc: &Discretization, closure: &Closure, turb: &TurbState) -> f64 {
    let TurbState::FieldK(k) = turb else { return 0.0 };
    let mut total = 0.0;
    for t in 0..disc.n_elements() {
        for q in 0..disc.n_q() {
            let kq = disc.scalar_at(k, t, q).max(0.0);
            total += disc.jw(t, q) * kq * kq.sqrt() / closure.mixing_length(disc.wall_distance_at(t, q));
        }
    }
    total / disc.area()
}

/// Signed residual of [`budget_terms`].
pub fn budget_residual(disc: &Discretization, closure: &Closure, input: &BudgetInputs) -> f64 {
    budget_terms(disc, closure, input).residual()
}

/// `ε_model = (1/|Ω|) ∫ 2ν|∇ˢv|² + (√2/2)τ⁻¹ k`, the resolved viscous
/// dissipation (with the same `2ν` as the momentum equation) plus the model
/// dissipation of `k`.
pub fn eps_model(disc: &Discretization, closure: &Closure, nu: f64, v: &[f64], k_avg: f64) -> f64 {
    let resolved = 2.0 * nu * integrate_functional(disc, Functional::SymGradSq, v) / disc.area();
    let model = if closure.kind == ClosureKind::Nse { 0.0 } else { closure.decay_rate() * k_avg };
    resolved + model
}

/// Trapezoidal `∫ g dt` over records with `t ∈ [a, b]`.
fn trapezoid(records: &[&StatsRecord], g: impl Fn(&StatsRecord) -> f64) -> f64 {
    records
        .windows(2)
        .map(|w| 0.5 * (w[1].t - w[0].t) * (g(w[0]) + g(w[1])))
        .sum()
}

fn window(records: &[StatsRecord], start: f64, len: f64) -> Vec<&StatsRecord> {
    let tol = 1e-9 * len.abs().max(1.0);
    records
        .iter()
        .filter(|r| r.t >= start - tol && r.t <= start + len + tol)
        .collect()
}

/// `| (μτ/T) ∫k − (√2 μ τ²/T) ∫ε |` over `[start, start + T]`.
pub fn corollary_residual(records: &[StatsRecord], mu: f64, tau: f64, start: f64, len: f64) -> Result<f64> {
    let w = window(records, start, len);
    if w.len() < 2 || !(len > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "time window [{start}, {}] holds {} samples, need at least 2",
            start + len,
            w.len()
        )));
    }
    let ik = trapezoid(&w, |r| r.k_avg);
    let ie = trapezoid(&w, |r| r.eps);
    Ok((mu * tau / len * ik - std::f64::consts::SQRT_2 * mu * tau * tau / len * ie).abs())
}

/// Time average of one column over `[start, end]` by the trapezoidal rule.
pub fn time_average(records: &[StatsRecord], start: f64, end: f64, g: impl Fn(&StatsRecord) -> f64) -> Option<f64> {
    let w = window(records, start, end - start);
    if w.len() < 2 {
        return None;
    }
    let span = w[w.len() - 1].t - w[0].t;
    Some(trapezoid(&w, g) / span)
}

/// Force, velocity, length and time scales of a run.
#[derive(Clone, Debug, PartialEq)]
pub struct ScaleReport {
    /// `F = ((1/|Ω|) ∫|f|²)^{1/2}`
    pub force: f64,
    /// `U`, from the running time average of `(1/|Ω|) ∫|v|²`.
    pub velocity: f64,
    /// `L`, the smallest of [`ScaleReport::length_candidates`].
    pub length: f64,
    /// `|Ω|^{1/2}`, `F / sup|∇ˢf|`, `F / ‖∇ˢf‖`, `(F / ‖Δf‖)^{1/2}`.
    pub length_candidates: [f64; 4],
    /// `T* = L / U`
    pub turnover: f64,
    pub reynolds: f64,
    pub tau_over_turnover: f64,
    /// `4 (1 + Re⁻¹) U³ / L`
    pub dissipation_bound: f64,
    /// `(1/T) ∫ ε_model dt`
    pub mean_eps_model: f64,
}

/// Scales of a forcing field (evaluated at a fixed time) and a completed
/// series. Derivatives of `f` are taken by central differences.
pub fn scale_report(
    disc: &Discretization,
    f: &dyn Fn([f64; 2]) -> [f64; 2],
    records: &[StatsRecord],
    nu: f64,
    tau: f64,
) -> Result<ScaleReport> {
    let area = disc.area();
    let h = 1e-4 * area.sqrt();
    let grad = |p: [f64; 2]| {
        let mut g = [[0.0; 2]; 2];
        for j in 0..2 {
            let (mut a, mut b) = (p, p);
            a[j] += h;
            b[j] -= h;
            let (fa, fb) = (f(a), f(b));
            for i in 0..2 {
                g[i][j] = (fa[i] - fb[i]) / (2.0 * h);
            }
        }
        g
    };
    let lap = |p: [f64; 2]| {
        let c = f(p);
        let mut out = [0.0; 2];
        for j in 0..2 {
            let (mut a, mut b) = (p, p);
            a[j] += h;
            b[j] -= h;
            let (fa, fb) = (f(a), f(b));
            for i in 0..2 {
                out[i] += (fa[i] - 2.0 * c[i] + fb[i]) / (h * h);
            }
        }
        out
    };
    let (mut ff, mut gg, mut ll, mut sup) = (0.0, 0.0, 0.0, 0.0_f64);
    for t in 0..disc.n_elements() {
        for q in 0..disc.n_q() {
            let p = disc.point(t, q);
            let w = disc.jw(t, q);
            let v = f(p);
            ff += w * (v[0] * v[0] + v[1] * v[1]);
            let s = sym_grad_sq(grad(p));
            gg += w * s;
            sup = sup.max(s.sqrt());
            let l = lap(p);
            ll += w * (l[0] * l[0] + l[1] * l[1]);
        }
    }
    let force = (ff / area).sqrt();
    if !(force > 0.0) {
        return Err(Error::UndefinedScale("forcing vanishes identically".into()));
    }
    let ratio = |den: f64| if den > 0.0 { force / den } else { f64::INFINITY };
    let candidates = [
        area.sqrt(),
        ratio(sup),
        ratio((gg / area).sqrt()),
        ratio((ll / area).sqrt()).sqrt(),
    ];
    let length = candidates.iter().copied().fold(f64::INFINITY, f64::min);
    let (t0, t1) = match (records.first(), records.last()) {
        (Some(a), Some(b)) if b.t > a.t => (a.t, b.t),
        _ => return Err(Error::UndefinedScale("series spans no time".into())),
    };
    let refs: Vec<&StatsRecord> = records.iter().collect();
    let u2 = trapezoid(&refs, |r| 2.0 * r.kinetic_energy) / (t1 - t0);
    let velocity = u2.sqrt();
    if !(velocity > 0.0) {
        return Err(Error::UndefinedScale("velocity vanishes over the series".into()));
    }
    let turnover = length / velocity;
    let reynolds = velocity * length / nu;
    Ok(ScaleReport {
        force,
        velocity,
        length,
        length_candidates: candidates,
        turnover,
        reynolds,
        tau_over_turnover: tau / turnover,
        dissipation_bound: 4.0 * (1.0 + 1.0 / reynolds) * velocity.powi(3) / length,
        mean_eps_model: trapezoid(&refs, |r| r.eps_model) / (t1 - t0),
    })
}
