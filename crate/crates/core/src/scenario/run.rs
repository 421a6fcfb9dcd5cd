//! Run drivers: single runs, the closure comparison, the manufactured
//! solution study and the verification suite.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use log::info;
use rayon::prelude::*;

use super::config::{MeshSpec, RunConfig};
use super::forcing::{ForcingSpec, Manufactured};
use super::output::{write_field_vtk, StatsWriter};
use crate::closures::{Closure, ClosureKind};
use crate::error::{Error, Result};
use crate::fem::{Discretization, FlowState};
use crate::mesh::{eccentric_annulus, offset_circles, read_mesh, unit_square, TriMesh};
use crate::statistics::{scale_report, time_average, ScaleReport, StatsRecord};
use crate::stepper::{Forcing, SimulationState, Stepper, StepperConfig};

pub fn build_mesh(spec: &MeshSpec) -> Result<TriMesh> {
    match spec {
        MeshSpec::OffsetCircles { n_outer, n_inner, h_max, r1, r2, center } => {
            offset_circles(*n_outer, *n_inner, *h_max, *r1, *r2, *center)
        }
        MeshSpec::Annulus { n_r, n_t, r1, r2, center } => eccentric_annulus(*n_r, *n_t, *r1, *r2, *center),
        MeshSpec::UnitSquare { n } => unit_square(*n),
        MeshSpec::File(path) => {
            let file = File::open(path).map_err(|e| Error::io(path, e))?;
            read_mesh(std::io::BufReader::new(file))
        }
    }
}

/// Number of worker threads from `URANS_THREADS`, if set.
pub fn thread_cap() -> Option<usize> {
    std::env::var("URANS_THREADS").ok()?.parse().ok().filter(|&n| n > 0)
}

fn pool() -> Result<rayon::ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(n) = thread_cap() {
        b = b.num_threads(n);
    }
    b.build().map_err(|e| Error::Config(format!("thread pool: {e}")))
}

/// Result of a completed run.
#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub records: Vec<StatsRecord>,
    pub scales: Option<ScaleReport>,
    pub final_state: SimulationState,
    pub stats_path: PathBuf,
    /// `max_t [E(t) + k(t)]`
    pub max_energy_plus_k: f64,
    pub n_triangles: usize,
    pub edge_range: (f64, f64),
    /// Wall-clock time of the run.
    pub seconds: f64,
}

/// Runs a configuration, writing `stats.csv`, snapshots, `scales.txt` and
/// `config.ini` into the output directory. On failure a `PARTIAL` marker
/// holding the error is left next to the partial output.
pub fn run(config: &RunConfig) -> Result<RunOutcome> {
    config.validate()?;
    let mesh = build_mesh(&config.mesh)?;
    run_on_mesh(config, mesh)
}

pub fn run_on_mesh(config: &RunConfig, mesh: TriMesh) -> Result<RunOutcome> {
    let dir = &config.output.dir;
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let marker = dir.join("PARTIAL");
    let _ = fs::remove_file(&marker);
    let result = run_inner(config, mesh);
    if let Err(e) = &result {
        let _ = fs::write(&marker, format!("{e}\n"));
    }
    result
}

fn run_inner(config: &RunConfig, mesh: TriMesh) -> Result<RunOutcome> {
    let clock = std::time::Instant::now();
    let dir = &config.output.dir;
    let write = |name: &str, text: String| -> Result<()> {
        let p = dir.join(name);
        fs::write(&p, text).map_err(|e| Error::io(&p, e))
    };
    write("config.ini", config.serialize())?;

    let n_triangles = mesh.n_triangles();
    let edge_range = mesh.edge_length_range();
    let disc = Discretization::new(mesh)?;
    let forcing = config.forcing.build(config.stepper.nu);
    let mut stepper = Stepper::new(disc, config.closure, config.stepper.clone())?;

    let stats_path = dir.join("stats.csv");
    let file = File::create(&stats_path).map_err(|e| Error::io(&stats_path, e))?;
    let d = stepper.disc();
    let metadata = vec![
        ("closure".to_string(), config.closure.kind.to_string()),
        ("config_hash".to_string(), config.hash()),
        ("triangles".to_string(), n_triangles.to_string()),
        ("unknowns".to_string(), d.dofs.n_system().to_string()),
        ("h_min".to_string(), format!("{:.6e}", edge_range.0)),
        ("h_max".to_string(), format!("{:.6e}", edge_range.1)),
        ("dt".to_string(), format!("{:?}", config.stepper.dt)),
        ("filter".to_string(), if config.stepper.filter { "on" } else { "off" }.to_string()),
    ];
    let mut csv = StatsWriter::new(BufWriter::new(file), &metadata).map_err(|e| Error::io(&stats_path, e))?;

    let n_steps = (config.t_final / config.stepper.dt).round() as usize;
    let mut snapshots: Vec<f64> = config.output.snapshot_times.clone();
    snapshots.sort_by(f64::total_cmp);
    let mut next_snap = 0;
    let mut records = Vec::with_capacity(n_steps);
    let mut max_ek: f64 = 0.0;
    for _ in 0..n_steps {
        let rec = stepper.advance(forcing.as_ref())?;
        csv.write(&rec).map_err(|e| Error::io(&stats_path, e))?;
        max_ek = max_ek.max(rec.kinetic_energy + rec.k_avg);
        while next_snap < snapshots.len() && snapshots[next_snap] <= rec.t + 0.5 * config.stepper.dt {
            let p = dir.join(format!("field_{:09.4}.vtk", rec.t));
            let f = File::create(&p).map_err(|e| Error::io(&p, e))?;
            let s = stepper.state();
            write_field_vtk(BufWriter::new(f), stepper.disc(), &s.flow, stepper.closure(), &s.turb, rec.t)
                .map_err(|e| Error::io(&p, e))?;
            next_snap += 1;
        }
        records.push(rec);
    }
    csv.flush().map_err(|e| Error::io(&stats_path, e))?;

    let scales = if config.forcing != ForcingSpec::Zero && !records.is_empty() {
        let t_end = config.t_final;
        let f = |x: [f64; 2]| forcing.force(x, t_end);
        scale_report(stepper.disc(), &f, &records, config.stepper.nu, config.closure.tau).ok()
    } else {
        None
    };
    let mut text = String::new();
    match &scales {
        Some(s) => {
            let c = s.length_candidates;
            text.push_str(&format!(
                "force = {:.10e}\nvelocity = {:.10e}\nlength = {:.10e}\nlength_candidates = {:.6e}, {:.6e}, {:.6e}, {:.6e}\nturnover = {:.10e}\nreynolds = {:.10e}\ntau_over_turnover = {:.10e}\ndissipation_bound = {:.10e}\nmean_eps_model = {:.10e}\n",
                s.force, s.velocity, s.length, c[0], c[1], c[2], c[3], s.turnover, s.reynolds, s.tau_over_turnover, s.dissipation_bound, s.mean_eps_model
            ));
        }
        None => text.push_str("undefined\n"),
    }
    text.push_str(&format!("max_energy_plus_k = {max_ek:.10e}\n"));
    write("scales.txt", text)?;

    Ok(RunOutcome {
        records,
        scales,
        final_state: stepper.state().clone(),
        stats_path,
        max_energy_plus_k: max_ek,
        n_triangles,
        edge_range,
        seconds: clock.elapsed().as_secs_f64(),
    })
}

/// Outcome of [`compare`].
#[derive(Debug)]
pub struct CompareOutcome {
    pub runs: Vec<(String, RunOutcome)>,
    pub window: (f64, f64),
}

impl CompareOutcome {
    pub fn get(&self, label: &str) -> Option<&RunOutcome> {
        self.runs.iter().find(|(l, _)| l == label).map(|(_, r)| r)
    }

    /// Time average of a statistic over the comparison window.
    pub fn mean(&self, label: &str, g: impl Fn(&StatsRecord) -> f64) -> Option<f64> {
        let r = self.get(label)?;
        time_average(&r.records, self.window.0, self.window.1, g)
    }
}

/// Label of the NSE run on the reference mesh.
pub const REFERENCE_LABEL: &str = "nse-fine";

/// Runs all four closures on the configured mesh and, when `reference` is
/// given, NSE on that mesh. Each run writes into `<dir>/<label>/`; a
/// `summary.csv` of time averages over `[5, t_final]` goes to `<dir>`.
pub fn compare(config: &RunConfig, reference: Option<&MeshSpec>) -> Result<CompareOutcome> {
    let base = config.output.dir.clone();
    let mut jobs: Vec<(String, RunConfig)> = ClosureKind::ALL
        .iter()
        .map(|&kind| {
            let mut c = config.clone();
            c.closure.kind = kind;
            c.output.dir = base.join(kind.as_str());
            (kind.as_str().to_string(), c)
        })
        .collect();
    if let Some(mesh) = reference {
        let mut c = config.clone();
        c.closure.kind = ClosureKind::Nse;
        c.mesh = mesh.clone();
        c.output.dir = base.join(REFERENCE_LABEL);
        jobs.push((REFERENCE_LABEL.to_string(), c));
    }
    // Largest job first so it overlaps the others when threads allow.
    jobs.reverse();
    let results: Vec<Result<(String, RunOutcome)>> =
        pool()?.install(|| jobs.par_iter().map(|(l, c)| run(c).map(|r| (l.clone(), r))).collect());
    let mut runs = results.into_iter().collect::<Result<Vec<_>>>()?;
    runs.reverse();
    let window = (5.0_f64.min(config.t_final), config.t_final);
    let outcome = CompareOutcome { runs, window };

    let mut text = String::from("label,mean_kinetic_energy,mean_k,mean_enstrophy,mean_taylor_microscale,max_energy_plus_k\n");
    for (label, r) in &outcome.runs {
        let m = |g: &dyn Fn(&StatsRecord) -> f64| {
            time_average(&r.records, window.0, window.1, g).map_or(String::new(), |v| format!("{v:.10e}"))
        };
        text.push_str(&format!(
            "{label},{},{},{},{},{:.10e}\n",
            m(&|r| r.kinetic_energy),
            m(&|r| r.k_avg),
            m(&|r| r.enstrophy),
            m(&|r| r.taylor_microscale.unwrap_or(f64::NAN)),
            r.max_energy_plus_k
        ));
    }
    fs::create_dir_all(&base).map_err(|e| Error::io(&base, e))?;
    let p = base.join("summary.csv");
    fs::write(&p, text).map_err(|e| Error::io(&p, e))?;
    Ok(outcome)
}

/// Polynomial Navier–Stokes solution `v = (y², x²)`, `p = x − ½`, which
/// lies in the Taylor–Hood space; steady, with nonhomogeneous wall data.
#[derive(Clone, Copy, Debug)]
pub struct PolynomialFlow {
    pub nu: f64,
}

impl PolynomialFlow {
    pub fn velocity(&self, [x, y]: [f64; 2]) -> [f64; 2] {
        [y * y, x * x]
    }
}

impl Forcing for PolynomialFlow {
    fn force(&self, [x, y]: [f64; 2], _t: f64) -> [f64; 2] {
        [2.0 * x * x * y - 2.0 * self.nu + 1.0, 2.0 * x * y * y - 2.0 * self.nu]
    }

    fn boundary_velocity(&self, x: [f64; 2], _t: f64) -> [f64; 2] {
        self.velocity(x)
    }

    fn has_boundary_data(&self) -> bool {
        true
    }
}

/// `‖v_h − v‖_{L²}` over the domain.
pub fn l2_velocity_error(disc: &Discretization, v: &[f64], exact: impl Fn([f64; 2]) -> [f64; 2]) -> f64 {
    let mut s = 0.0;
    for t in 0..disc.n_elements() {
        for q in 0..disc.n_q() {
            let a = disc.velocity_at(v, t, q);
            let b = exact(disc.point(t, q));
            s += disc.jw(t, q) * ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2));
        }
    }
    s.sqrt()
}

/// Parameters of the manufactured-solution study.
#[derive(Clone, Debug)]
pub struct MmsConfig {
    pub nu: f64,
    pub spatial_n: Vec<usize>,
    pub temporal_n: usize,
    pub temporal_dt: Vec<f64>,
    pub t_final: f64,
    pub picard_tol: f64,
}

impl Default for MmsConfig {
    fn default() -> Self {
        MmsConfig {
            nu: 0.05,
            spatial_n: vec![8, 16, 32],
            temporal_n: 32,
            temporal_dt: vec![0.1, 0.05, 0.025],
            t_final: 1.0,
            picard_tol: 1e-10,
        }
    }
}

#[derive(Clone, Debug)]
pub struct MmsRow {
    pub study: &'static str,
    pub n: usize,
    pub dt: f64,
    pub filter: bool,
    pub error: f64,
    pub picard_iters: usize,
}

#[derive(Clone, Debug)]
pub struct MmsReport {
    pub rows: Vec<MmsRow>,
    /// Error of the steady polynomial solution in the discrete space.
    pub consistency_error: f64,
    pub spatial_order: f64,
    pub temporal_order: f64,
    pub temporal_order_filtered: f64,
}

impl MmsReport {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("study,n,dt,filter,l2_error,picard_iters\n");
        for r in &self.rows {
            s.push_str(&format!(
                "{},{},{:?},{},{:.10e},{}\n",
                r.study,
                r.n,
                r.dt,
                if r.filter { "on" } else { "off" },
                r.error,
                r.picard_iters
            ));
        }
        s.push_str(&format!(
            "# consistency_error={:.3e}\n# spatial_order={:.4}\n# temporal_order={:.4}\n# temporal_order_filtered={:.4}\n",
            self.consistency_error, self.spatial_order, self.temporal_order, self.temporal_order_filtered
        ));
        s
    }
}

/// Least-squares slope of `ln e` against `ln h`.
pub fn fitted_order(h: &[f64], e: &[f64]) -> f64 {
    let n = h.len() as f64;
    let xs: Vec<f64> = h.iter().map(|v| v.ln()).collect();
    let ys: Vec<f64> = e.iter().map(|v| v.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let num: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let den: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    num / den
}

fn square_disc(n: usize) -> Result<Discretization> {
    Discretization::new(unit_square(n)?)
}

/// Steady solve: a single backward Euler step with a huge time step,
/// iterated to Picard convergence.
fn steady_solve(disc: Discretization, nu: f64, forcing: &dyn Forcing, tol: f64) -> Result<(FlowState, usize)> {
    let cfg = StepperConfig {
        dt: 1e12,
        nu,
        picard_tol: tol,
        picard_max: 50,
                anderson: 3,
        filter: false,
        t_star: f64::MAX,
        reynolds: 1.0,
        convection: true,
    };
    let mut s = Stepper::new(disc, Closure::new(ClosureKind::Nse), cfg)?;
    let r = s.advance(forcing)?;
    Ok((s.state().flow.clone(), r.picard_iters))
}

/// Error of the polynomial solution `v = (y², x²)` on an `n × n` square.
pub fn consistency_error(n: usize, nu: f64) -> Result<f64> {
    let disc = square_disc(n)?;
    let flow = PolynomialFlow { nu };
    let (state, _) = steady_solve(disc.clone(), nu, &flow, 1e-13)?;
    Ok(l2_velocity_error(&disc, &state.velocity, |x| flow.velocity(x)))
}

/// Spatial and temporal convergence of the manufactured solution.
pub fn mms_study(cfg: &MmsConfig) -> Result<MmsReport> {
    let mut rows = Vec::new();

    let steady = Manufactured::new(cfg.nu, true);
    let mut hs = Vec::new();
    let mut es = Vec::new();
    for &n in &cfg.spatial_n {
        let disc = square_disc(n)?;
        let (state, iters) = steady_solve(disc.clone(), cfg.nu, &steady, cfg.picard_tol)?;
        let e = l2_velocity_error(&disc, &state.velocity, |x| steady.velocity(x, 0.0));
        info!("mms space n = {n}: error {e:.3e}");
        rows.push(MmsRow { study: "space", n, dt: f64::INFINITY, filter: false, error: e, picard_iters: iters });
        hs.push(1.0 / n as f64);
        es.push(e);
    }
    let spatial_order = fitted_order(&hs, &es);

    let unsteady = Manufactured::new(cfg.nu, false);
    let disc = square_disc(cfg.temporal_n)?;
    let mut orders = [0.0; 2];
    for (slot, filter) in [false, true].into_iter().enumerate() {
        let mut errs = Vec::new();
        for &dt in &cfg.temporal_dt {
            let sc = StepperConfig {
                dt,
                nu: cfg.nu,
                picard_tol: cfg.picard_tol,
                picard_max: 50,
                anderson: 3,
                filter,
                t_star: f64::MAX,
                reynolds: 1.0,
                convection: true,
            };
            let v0 = disc.interpolate_velocity(|x| unsteady.velocity(x, 0.0));
            let mut s = Stepper::new(disc.clone(), Closure::new(ClosureKind::Nse), sc)?.with_initial_velocity(0.0, v0)?;
            let steps = (cfg.t_final / dt).round() as usize;
            let mut iters = 0;
            for _ in 0..steps {
                iters = iters.max(s.advance(&unsteady)?.picard_iters);
            }
            let t = s.time();
            let e = l2_velocity_error(&disc, &s.state().flow.velocity, |x| unsteady.velocity(x, t));
            info!("mms time dt = {dt} filter = {filter}: error {e:.3e}");
            rows.push(MmsRow { study: "time", n: cfg.temporal_n, dt, filter, error: e, picard_iters: iters });
            errs.push(e);
        }
        orders[slot] = fitted_order(&cfg.temporal_dt, &errs);
    }

    Ok(MmsReport {
        rows,
        consistency_error: consistency_error(4, cfg.nu)?,
        spatial_order,
        temporal_order: orders[0],
        temporal_order_filtered: orders[1],
    })
}

/// Summary of [`verify`].
#[derive(Clone, Debug)]
pub struct VerifyReport {
    /// Largest `|budget residual| / largest budget term` per closure.
    pub energy: Vec<(ClosureKind, f64)>,
    /// Whether every `k(t_n)` of the 1/2-equation run was positive.
    pub k_positive: bool,
    pub steps: usize,
}

/// Energy-identity runs (filter off) for NSE and the 1/2-equation model,
/// with a positivity check on `k(t)`.
pub fn verify(config: &RunConfig, steps: usize) -> Result<VerifyReport> {
    let mesh = build_mesh(&config.mesh)?;
    let disc = Discretization::new(mesh)?;
    let forcing = config.forcing.build(config.stepper.nu);
    let mut energy = Vec::new();
    let mut k_positive = true;
    for kind in [ClosureKind::Nse, ClosureKind::HalfEq] {
        let mut closure = config.closure;
        closure.kind = kind;
        let sc = StepperConfig { filter: false, ..config.stepper.clone() };
        let mut s = Stepper::new(disc.clone(), closure, sc)?;
        let mut worst: f64 = 0.0;
        for _ in 0..steps {
            let r = s.advance(forcing.as_ref())?;
            if r.budget_scale > 0.0 {
                worst = worst.max(r.budget_residual.abs() / r.budget_scale);
            }
            if kind == ClosureKind::HalfEq && r.t >= config.stepper.t_star - 1e-9 && !(r.k_avg > 0.0) {
                k_positive = false;
            }
        }
        energy.push((kind, worst));
    }
    Ok(VerifyReport { energy, k_positive, steps })
}

/// Writes `text` to `dir/name`.
pub fn write_report(dir: &Path, name: &str, text: &str) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let p = dir.join(name);
    let mut f = File::create(&p).map_err(|e| Error::io(&p, e))?;
    f.write_all(text.as_bytes()).map_err(|e| Error::io(&p, e))
}
