//! Acceptance suite for the offset-circles benchmark and the convergence
//! studies. Prints one PASS/FAIL line per criterion.
//!
//! Failures are reported and the binary still exits 0 so the rest of the
//! workspace test run is unaffected; set `URANS_ACCEPTANCE_STRICT=1` to turn
//! any failure into a nonzero exit status.

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use urans::closures::step_k_ode;
use urans::scenario::run::{compare, fitted_order, mms_study, run, verify, CompareOutcome, MmsConfig, REFERENCE_LABEL};
use urans::scenario::{MeshSpec, RunConfig};
use urans::statistics::corollary_residual;
use urans::ClosureKind;

const POSITIVITY_MINUTES: f64 = 10.0;
const SMALL_TAU: f64 = 1e-3;
const SMALL_TAU_RATIO: f64 = 1e-3;
const SMALL_TAU_MINUTES: f64 = 10.0;
const ENERGY_STEPS: usize = 200;
const ENERGY_PICARD_TOL: f64 = 1e-11;
const ENERGY_RELATIVE: f64 = 1e-8;
const ODE_MIN_ORDER: f64 = 0.9;
const MMS_SPACE_ORDER: f64 = 2.5;
const MMS_TIME_ORDER: (f64, f64) = (0.8, 1.2);
const MMS_FILTER_ORDER: f64 = 1.8;
const MMS_MINUTES: f64 = 15.0;
const COROLLARY_RATIO: f64 = 0.7;
const KE_BAND: f64 = 0.2;
const COMPARE_MINUTES: f64 = 45.0;

struct Report {
    lines: Vec<(u32, bool, String)>,
}

impl Report {
    fn record(&mut self, id: u32, pass: bool, detail: String) {
        println!("criterion {id}: {} {detail}", if pass { "PASS" } else { "FAIL" });
        self.lines.push((id, pass, detail));
    }

    fn error(&mut self, id: u32, e: impl std::fmt::Display) {
        self.record(id, false, format!("run failed: {e}"));
    }
}

fn out_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("acceptance")
}

fn benchmark(kind: ClosureKind, dir: &str) -> RunConfig {
    let mut c = RunConfig::benchmark(kind);
    c.output.dir = out_dir().join(dir);
    c
}

fn positivity(rep: &mut Report, cmp: &CompareOutcome) {
    let Some(r) = cmp.get(ClosureKind::HalfEq.as_str()) else {
        return rep.error(1, "no half-eq run");
    };
    let t_star = RunConfig::benchmark(ClosureKind::HalfEq).stepper.t_star;
    let active: Vec<_> = r.records.iter().filter(|x| x.t >= t_star - 1e-9).collect();
    let bad = active.iter().filter(|x| !(x.k_avg > 0.0)).count();
    let min = active.iter().map(|x| x.k_avg).fold(f64::INFINITY, f64::min);
    let minutes = r.seconds / 60.0;
    rep.record(
        1,
        !active.is_empty() && bad == 0 && minutes <= POSITIVITY_MINUTES,
        format!(
            "k(t_n) > 0 at {}/{} steps after t*, min k = {min:.3e}, runtime {minutes:.1} min",
            active.len() - bad,
            active.len()
        ),
    );
}

fn small_tau(rep: &mut Report) -> Option<f64> {
    let mut cfg = benchmark(ClosureKind::HalfEq, "half-eq-small-tau");
    cfg.closure.tau = SMALL_TAU;
    let r = match run(&cfg) {
        Ok(r) => r,
        Err(e) => {
            rep.error(2, e);
            return None;
        }
    };
    let ln: Vec<(f64, f64)> = r.records.iter().filter_map(|x| x.ln_k.map(|l| (x.t, l))).collect();
    let increasing = ln.windows(2).filter(|w| !(w[1].1 < w[0].1)).count();
    let (first, last) = (ln.first().copied(), ln.last().copied());
    let ratio_ln = match (first, last) {
        (Some(a), Some(b)) => b.1 - a.1,
        _ => f64::NAN,
    };
    let minutes = r.seconds / 60.0;
    rep.record(
        2,
        ln.len() > 1 && increasing == 0 && ratio_ln <= SMALL_TAU_RATIO.ln() && minutes <= SMALL_TAU_MINUTES,
        format!(
            "tau = {SMALL_TAU}: {} non-decreasing steps of {}, ln(k({:.2})/k({:.2})) = {ratio_ln:.1} (bound {:.2}), runtime {minutes:.1} min",
            increasing,
            ln.len().saturating_sub(1),
            last.map_or(f64::NAN, |x| x.0),
            first.map_or(f64::NAN, |x| x.0),
            SMALL_TAU_RATIO.ln()
        ),
    );
    Some(r.max_energy_plus_k)
}

fn energy_identity(rep: &mut Report) {
    let mut cfg = benchmark(ClosureKind::Nse, "verify");
    cfg.stepper.picard_tol = ENERGY_PICARD_TOL;
    cfg.stepper.picard_max = 50;
    cfg.stepper.anderson = 3;
    match verify(&cfg, ENERGY_STEPS) {
        Ok(v) => {
            let worst = v.energy.iter().map(|x| x.1).fold(0.0, f64::max);
            let detail: Vec<String> = v.energy.iter().map(|(k, r)| format!("{k} {r:.2e}")).collect();
            rep.record(
                3,
                worst <= ENERGY_RELATIVE,
                format!("{} steps, max |residual| / largest term: {} (bound {ENERGY_RELATIVE:e})", v.steps, detail.join(", ")),
            );
        }
        Err(e) => rep.error(3, e),
    }
}

fn ode_order(rep: &mut Report) {
    let tau = 0.1;
    let t_end = 1.0;
    let exact = (-(2f64.sqrt() / 2.0) * t_end / tau).exp();
    let dts = [0.02, 0.01, 0.005];
    let mut errors = Vec::new();
    for dt in dts {
        let n = (t_end / dt).round() as usize;
        let mut k = 1.0;
        for _ in 0..n {
            k = step_k_ode(k, 0.0, dt, tau).expect("nonnegative source");
        }
        errors.push((k - exact).abs());
    }
    let order = fitted_order(&dts, &errors);
    rep.record(
        4,
        order >= ODE_MIN_ORDER,
        format!("errors at t = 1: {:.3e}, {:.3e}, {:.3e}; fitted order {order:.3}", errors[0], errors[1], errors[2]),
    );
}

fn mms(rep: &mut Report) {
    let clock = Instant::now();
    match mms_study(&MmsConfig::default()) {
        Ok(m) => {
            let minutes = clock.elapsed().as_secs_f64() / 60.0;
            let pass = m.spatial_order >= MMS_SPACE_ORDER
                && (MMS_TIME_ORDER.0..=MMS_TIME_ORDER.1).contains(&m.temporal_order)
                && m.temporal_order_filtered >= MMS_FILTER_ORDER
                && minutes <= MMS_MINUTES;
            rep.record(
                5,
                pass,
                format!(
                    "space order {:.3}, time order {:.3} (filter off), {:.3} (filter on), P2-exact error {:.1e}, runtime {minutes:.1} min",
                    m.spatial_order, m.temporal_order, m.temporal_order_filtered, m.consistency_error
                ),
            );
        }
        Err(e) => rep.error(5, e),
    }
}

fn corollary(rep: &mut Report, cmp: &CompareOutcome) {
    let Some(r) = cmp.get(ClosureKind::HalfEq.as_str()) else {
        return rep.error(6, "no half-eq run");
    };
    let c = RunConfig::benchmark(ClosureKind::HalfEq);
    let t_star = c.stepper.t_star;
    let res = |len| corollary_residual(&r.records, c.closure.mu, c.closure.tau, t_star, len);
    match (res(4.0), res(8.0)) {
        (Ok(a), Ok(b)) => rep.record(
            6,
            b <= COROLLARY_RATIO * a,
            format!("r(4) = {a:.3e}, r(8) = {b:.3e}, ratio {:.3}", b / a),
        ),
        (Err(e), _) | (_, Err(e)) => rep.error(6, e),
    }
}

fn ordering(rep: &mut Report, cmp: &CompareOutcome) {
    let one = ClosureKind::OneEqKinematic.as_str();
    let half = ClosureKind::HalfEq.as_str();
    let k = |l| cmp.mean(l, |r| r.k_avg);
    let e = |l| cmp.mean(l, |r| r.kinetic_energy);
    let (Some(k1), Some(kh), Some(eh), Some(er)) = (k(one), k(half), e(half), e(REFERENCE_LABEL)) else {
        return rep.error(7, "missing run or empty averaging window");
    };
    let minutes: f64 = ClosureKind::ALL
        .iter()
        .filter_map(|c| cmp.get(c.as_str()))
        .map(|r| r.seconds)
        .sum::<f64>()
        / 60.0;
    let rel = (eh - er) / er;
    let k_order = k1 > kh;
    let below = eh < er;
    let within = rel.abs() <= KE_BAND;
    rep.record(
        7,
        k_order && below && within && minutes <= COMPARE_MINUTES,
        format!(
            "mean k over [{}, {}]: one-eq {k1:.3e} {} half-eq {kh:.3e}; mean energy half-eq {eh:.4} vs fine NSE {er:.4} ({:+.1}%, below: {below}, within {:.0}%: {within}); four runs {minutes:.1} min",
            cmp.window.0,
            cmp.window.1,
            if k_order { ">" } else { "<=" },
            100.0 * rel,
            100.0 * KE_BAND
        ),
    );
}

fn boundedness(rep: &mut Report, cmp: Option<&CompareOutcome>, small_tau: Option<f64>) {
    let mut parts = Vec::new();
    let mut ok = cmp.is_some() && small_tau.is_some();
    if let Some(cmp) = cmp {
        for (label, r) in &cmp.runs {
            let finite = r.max_energy_plus_k.is_finite()
                && r.records.iter().all(|x| x.values().iter().flatten().all(|v| v.is_finite()));
            ok &= finite;
            parts.push(format!("{label} {:.4}", r.max_energy_plus_k));
        }
    }
    if let Some(m) = small_tau {
        ok &= m.is_finite();
        parts.push(format!("half-eq tau={SMALL_TAU} {m:.4}"));
    }
    rep.record(8, ok, format!("all statistics finite; max_t [E + k]: {}", parts.join(", ")));
}

fn main() -> ExitCode {
    let strict = std::env::var("URANS_ACCEPTANCE_STRICT").is_ok_and(|v| v == "1");
    let mut rep = Report { lines: Vec::new() };
    println!("acceptance output in {}", out_dir().display());

    ode_order(&mut rep);
    energy_identity(&mut rep);
    mms(&mut rep);
    let tau_run = small_tau(&mut rep);

    let base = benchmark(ClosureKind::Nse, "compare");
    let cmp = match compare(&base, Some(&MeshSpec::fine())) {
        Ok(c) => Some(c),
        Err(e) => {
            for id in [1, 6, 7] {
                rep.error(id, &e);
            }
            None
        }
    };
    if let Some(c) = &cmp {
        positivity(&mut rep, c);
        corollary(&mut rep, c);
        ordering(&mut rep, c);
    }
    boundedness(&mut rep, cmp.as_ref(), tau_run);

    rep.lines.sort_by_key(|l| l.0);
    let passed = rep.lines.iter().filter(|l| l.1).count();
    println!("\nsummary ({passed}/{} passed)", rep.lines.len());
    for (id, pass, detail) in &rep.lines {
        println!("  {id}. {} {detail}", if *pass { "PASS" } else { "FAIL" });
    }
    if strict && passed < rep.lines.len() {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
