use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use log::{error, info};

use urans::scenario::run::{build_mesh, compare, mms_study, run, verify, write_report, MmsConfig, REFERENCE_LABEL};
use urans::scenario::{MeshSpec, RunConfig};
use urans::{ClosureKind, Error, Result};

#[derive(Parser)]
#[command(name = "urans", version, about = "2D finite-element URANS solver")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Switch {
    On,
    Off,
}

#[derive(clap::Args)]
struct Common {
    /// key = value configuration file; benchmark defaults when omitted
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_parser = parse_closure)]
    closure: Option<ClosureKind>,
    #[arg(long, value_enum)]
    filter: Option<Switch>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the configured mesh and write it in the text mesh format
    Mesh {
        #[command(flatten)]
        common: Common,
        /// Use the NSE reference mesh instead of the configured one
        #[arg(long)]
        fine: bool,
        /// Destination file
        #[arg(long)]
        file: PathBuf,
    },
    /// Run a single simulation
    Run {
        #[command(flatten)]
        common: Common,
    },
    /// Run all four closures plus the fine-mesh NSE reference
    Compare {
        #[command(flatten)]
        common: Common,
        /// Skip the fine-mesh reference run
        #[arg(long)]
        no_reference: bool,
    },
    /// Manufactured-solution convergence study
    Mms {
        #[arg(long, default_value = "out/mms")]
        out: PathBuf,
        #[arg(long, default_value_t = 0.05)]
        nu: f64,
    },
    /// Energy identity and positivity checks
    Verify {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 200)]
        steps: usize,
    },
}

fn parse_closure(s: &str) -> std::result::Result<ClosureKind, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn load(common: &Common, default_out: &str) -> Result<RunConfig> {
    let mut cfg = match &common.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::benchmark(ClosureKind::Nse),
    };
    if let Some(k) = common.closure {
        cfg.closure.kind = k;
    }
    if let Some(f) = common.filter {
        cfg.stepper.filter = matches!(f, Switch::On);
    }
    match &common.out {
        Some(o) => cfg.output.dir = o.clone(),
        None if common.config.is_none() => cfg.output.dir = PathBuf::from(default_out),
        None => {}
    }
    cfg.validate()?;
    Ok(cfg)
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Mesh { common, fine, file } => {
            let cfg = load(&common, "out")?;
            let spec = if fine { MeshSpec::fine() } else { cfg.mesh };
            let mesh = build_mesh(&spec)?;
            let (lo, hi) = mesh.edge_length_range();
            let f = File::create(&file).map_err(|e| Error::io(&file, e))?;
            urans::mesh::write_mesh(&mesh, BufWriter::new(f)).map_err(|e| Error::io(&file, e))?;
            println!(
                "{}: {} vertices, {} triangles, edges {lo:.6}..{hi:.6}",
                file.display(),
                mesh.n_vertices(),
                mesh.n_triangles()
            );
        }
        Command::Run { common } => {
            let cfg = load(&common, "out/run")?;
            let out = run(&cfg)?;
            let last = out.records.last();
            println!(
                "{}: {} steps, final E = {:.6e}, k = {:.6e}, max(E + k) = {:.6e}",
                out.stats_path.display(),
                out.records.len(),
                last.map_or(0.0, |r| r.kinetic_energy),
                last.map_or(0.0, |r| r.k_avg),
                out.max_energy_plus_k
            );
        }
        Command::Compare { common, no_reference } => {
            let cfg = load(&common, "out/compare")?;
            let reference = MeshSpec::fine();
            let out = compare(&cfg, (!no_reference).then_some(&reference))?;
            let (a, b) = out.window;
            println!("time averages over [{a}, {b}]");
            println!("{:<16} {:>14} {:>14}", "run", "energy", "k");
            for (label, _) in &out.runs {
                println!(
                    "{label:<16} {:>14.6e} {:>14.6e}",
                    out.mean(label, |r| r.kinetic_energy).unwrap_or(f64::NAN),
                    out.mean(label, |r| r.k_avg).unwrap_or(f64::NAN)
                );
            }
            if out.get(REFERENCE_LABEL).is_some() {
                info!("summary written to {}", cfg.output.dir.join("summary.csv").display());
            }
        }
        Command::Mms { out, nu } => {
            let report = mms_study(&MmsConfig { nu, ..MmsConfig::default() })?;
            let text = report.to_csv();
            write_report(&out, "mms.csv", &text)?;
            print!("{text}");
        }
        Command::Verify { common, steps } => {
            let mut cfg = load(&common, "out/verify")?;
            cfg.stepper.picard_tol = cfg.stepper.picard_tol.min(1e-11);
            cfg.stepper.picard_max = cfg.stepper.picard_max.max(50);
            let report = verify(&cfg, steps)?;
            let mut text = String::from("closure,max_relative_budget_residual\n");
            for (kind, r) in &report.energy {
                text.push_str(&format!("{kind},{r:.3e}\n"));
            }
            text.push_str(&format!("# k_positive={}\n# steps={}\n", report.k_positive, report.steps));
            write_report(&cfg.output.dir, "verify.csv", &text)?;
            print!("{text}");
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            error!("{e}");
            ExitCode::FAILURE
        }
    }
}
