//! Flat `key = value` run configuration with `[section]` headers.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use super::forcing::ForcingSpec;
use crate::closures::{Closure, ClosureKind};
use crate::error::{Error, Result};
use crate::stepper::StepperConfig;

#[derive(Clone, Debug, PartialEq)]
pub enum MeshSpec {
    /// Constrained Delaunay mesh of the region between two circles with
    /// `n_outer` / `n_inner` boundary points and interior edges near `h_max`.
    OffsetCircles {
        n_outer: usize,
        n_inner: usize,
        h_max: f64,
        r1: f64,
        r2: f64,
        center: [f64; 2],
    },
    /// Structured mapped mesh of the same region.
    Annulus {
        n_r: usize,
        n_t: usize,
        r1: f64,
        r2: f64,
        center: [f64; 2],
    },
    UnitSquare {
        n: usize,
    },
    File(PathBuf),
}

impl MeshSpec {
    /// The coarse benchmark mesh: 40 points on the outer circle, 20 on the
    /// inner one.
    pub fn coarse() -> Self {
        MeshSpec::OffsetCircles {
            n_outer: 40,
            n_inner: 20,
            h_max: 0.15,
            r1: 1.0,
            r2: 0.1,
            center: [0.5, 0.0],
        }
    }

    /// The NSE reference mesh: 80 outer and 60 inner points.
    pub fn fine() -> Self {
        MeshSpec::OffsetCircles {
            n_outer: 80,
            n_inner: 60,
            h_max: 0.08,
            r1: 1.0,
            r2: 0.1,
            center: [0.5, 0.0],
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct OutputSpec {
    pub dir: PathBuf,
    /// Times at which field snapshots are written.
    pub snapshot_times: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub mesh: MeshSpec,
    pub closure: Closure,
    pub stepper: StepperConfig,
    pub t_final: f64,
    pub forcing: ForcingSpec,
    pub output: OutputSpec,
}

impl RunConfig {
    /// The offset-circles benchmark: τ = 0.1, μ = 0.55, ν = 1e-4, L = 1,
    /// Δt = 0.01, T = 15, t* = 1.
    pub fn benchmark(kind: ClosureKind) -> Self {
        RunConfig {
            mesh: MeshSpec::coarse(),
            closure: Closure::new(kind),
            stepper: StepperConfig {
                dt: 0.01,
                nu: 1e-4,
                picard_tol: 1e-6,
                picard_max: 1,
                anderson: 0,
                filter: false,
                t_star: 1.0,
                reynolds: 1e4,
                convection: true,
            },
            t_final: 15.0,
            forcing: ForcingSpec::OffsetCircles,
            output: OutputSpec {
                dir: PathBuf::from("out"),
                snapshot_times: Vec::new(),
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.closure.validate()?;
        self.stepper.validate()?;
        if !(self.t_final >= 0.0 && self.t_final.is_finite()) {
            return Err(Error::Config(format!("t_final must be nonnegative, got {}", self.t_final)));
        }
        if !(self.stepper.t_star >= 0.0) {
            return Err(Error::Config(format!("t_star must be nonnegative, got {}", self.stepper.t_star)));
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let table = Table::parse(text)?;
        let mut cfg = RunConfig::benchmark(ClosureKind::Nse);

        let kind = table.str("mesh", "kind").unwrap_or("offset-circles");
        let r1 = table.f64("mesh", "r1")?.unwrap_or(1.0);
        let r2 = table.f64("mesh", "r2")?.unwrap_or(0.1);
        let center = [
            table.f64("mesh", "cx")?.unwrap_or(0.5),
            table.f64("mesh", "cy")?.unwrap_or(0.0),
        ];
        cfg.mesh = match kind {
            "offset-circles" => MeshSpec::OffsetCircles {
                n_outer: table.usize("mesh", "n_outer")?.unwrap_or(40),
                n_inner: table.usize("mesh", "n_inner")?.unwrap_or(20),
                h_max: table.f64("mesh", "h_max")?.unwrap_or(0.15),
                r1,
                r2,
                center,
            },
            "annulus" => MeshSpec::Annulus {
                n_r: table.usize("mesh", "n_r")?.unwrap_or(8),
                n_t: table.usize("mesh", "n_t")?.unwrap_or(40),
                r1,
                r2,
                center,
            },
            "unit-square" => MeshSpec::UnitSquare {
                n: table.usize("mesh", "n")?.unwrap_or(8),
            },
            "file" => MeshSpec::File(PathBuf::from(
                table
                    .str("mesh", "path")
                    .ok_or_else(|| Error::Config("[mesh] kind = file needs a path".into()))?,
            )),
            other => return Err(Error::Config(format!("unknown mesh kind `{other}`"))),
        };

        let c = &mut cfg.closure;
        if let Some(m) = table.str("closure", "model") {
            c.kind = m.parse()?;
        }
        let s = &mut cfg.stepper;
        s.nu = table.f64("closure", "nu")?.unwrap_or(s.nu);
        c.tau = table.f64("closure", "tau")?.unwrap_or(c.tau);
        c.mu = table.f64("closure", "mu")?.unwrap_or(c.mu);
        c.kappa = table.f64("closure", "kappa")?.unwrap_or(c.kappa);
        c.length_scale = table.f64("closure", "length_scale")?.unwrap_or(c.length_scale);
        c.l_min = table.f64("closure", "l_min")?.unwrap_or(1e-6 * c.length_scale);
        c.periodic = table.bool("closure", "periodic")?.unwrap_or(false);
        s.reynolds = table.f64("closure", "reynolds")?.unwrap_or(c.length_scale / s.nu);

        s.dt = table.f64("stepper", "dt")?.unwrap_or(s.dt);
        s.t_star = table.f64("stepper", "t_star")?.unwrap_or(s.t_star);
        s.filter = table.bool("stepper", "filter")?.unwrap_or(s.filter);
        s.picard_tol = table.f64("stepper", "picard_tol")?.unwrap_or(s.picard_tol);
        s.picard_max = table.usize("stepper", "picard_max")?.unwrap_or(s.picard_max);
        s.anderson = table.usize("stepper", "anderson")?.unwrap_or(s.anderson);
        s.convection = table.bool("stepper", "convection")?.unwrap_or(true);
        cfg.t_final = table.f64("stepper", "t_final")?.unwrap_or(cfg.t_final);

        if let Some(f) = table.str("forcing", "kind") {
            cfg.forcing = f.parse()?;
        }
        if let Some(d) = table.str("output", "dir") {
            cfg.output.dir = PathBuf::from(d);
        }
        if let Some(list) = table.str("output", "snapshot_times") {
            cfg.output.snapshot_times = list
                .split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(|s| {
                    s.parse::<f64>()
                        .map_err(|_| Error::Config(format!("bad snapshot time `{s}`")))
                })
                .collect::<Result<_>>()?;
        }
        table.reject_unused()?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn serialize(&self) -> String {
        let mut out = String::new();
        let w = &mut out;
        let _ = writeln!(w, "[mesh]");
        match &self.mesh {
            MeshSpec::OffsetCircles { n_outer, n_inner, h_max, r1, r2, center } => {
                let _ = writeln!(w, "kind = offset-circles\nn_outer = {n_outer}\nn_inner = {n_inner}\nh_max = {h_max:?}");
                let _ = writeln!(w, "r1 = {r1:?}\nr2 = {r2:?}\ncx = {:?}\ncy = {:?}", center[0], center[1]);
            }
            MeshSpec::Annulus { n_r, n_t, r1, r2, center } => {
                let _ = writeln!(w, "kind = annulus\nn_r = {n_r}\nn_t = {n_t}");
                let _ = writeln!(w, "r1 = {r1:?}\nr2 = {r2:?}\ncx = {:?}\ncy = {:?}", center[0], center[1]);
            }
            MeshSpec::UnitSquare { n } => {
                let _ = writeln!(w, "kind = unit-square\nn = {n}");
            }
            MeshSpec::File(p) => {
                let _ = writeln!(w, "kind = file\npath = {}", p.display());
            }
        }
        let c = &self.closure;
        let s = &self.stepper;
        let _ = writeln!(w, "\n[closure]\nmodel = {}\nnu = {:?}\ntau = {:?}\nmu = {:?}", c.kind, s.nu, c.tau, c.mu);
        let _ = writeln!(w, "kappa = {:?}\nlength_scale = {:?}\nl_min = {:?}", c.kappa, c.length_scale, c.l_min);
        let _ = writeln!(w, "periodic = {}\nreynolds = {:?}", c.periodic, s.reynolds);
        let _ = writeln!(w, "\n[stepper]\ndt = {:?}\nt_final = {:?}\nt_star = {:?}", s.dt, self.t_final, s.t_star);
        let _ = writeln!(w, "filter = {}\npicard_tol = {:?}\npicard_max = {}", if s.filter { "on" } else { "off" }, s.picard_tol, s.picard_max);
        let _ = writeln!(w, "anderson = {}\nconvection = {}", s.anderson, s.convection);
        let _ = writeln!(w, "\n[forcing]\nkind = {}", self.forcing);
        let times: Vec<String> = self.output.snapshot_times.iter().map(|t| format!("{t:?}")).collect();
        let _ = writeln!(w, "\n[output]\ndir = {}\nsnapshot_times = {}", self.output.dir.display(), times.join(", "));
        out
    }

    /// SHA-256 of the serialized configuration, hex encoded.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.serialize().as_bytes()))
    }
}

struct Entry {
    value: String,
    line: usize,
    used: std::cell::Cell<bool>,
}

struct Table {
    entries: BTreeMap<(String, String), Entry>,
}

impl Table {
    fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        let mut section = String::new();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.split('#').next().unwrap_or("");
            let trimmed = line.trim();
            if trimmed.is_empty() {
                continue;
            }
            let indent = line.len() - line.trim_start().len() + 1;
            if let Some(rest) = trimmed.strip_prefix('[') {
                let name = rest.strip_suffix(']').ok_or(Error::Parse {
                    line: line_no,
                    column: indent,
                    message: "unterminated section header".into(),
                })?;
                section = name.trim().to_string();
                continue;
            }
            let Some((key, value)) = trimmed.split_once('=') else {
                return Err(Error::Parse {
                    line: line_no,
                    column: indent,
                    message: "expected `key = value`".into(),
                });
            };
            let key = key.trim().to_string();
            if key.is_empty() {
                return Err(Error::Parse {
                    line: line_no,
                    column: indent,
                    message: "empty key".into(),
                });
            }
            let entry = Entry {
                value: value.trim().to_string(),
                line: line_no,
                used: std::cell::Cell::new(false),
            };
            if entries.insert((section.clone(), key.clone()), entry).is_some() {
                return Err(Error::Parse {
                    line: line_no,
                    column: indent,
                    message: format!("duplicate key `{key}` in [{section}]"),
                });
            }
        }
        Ok(Table { entries })
    }

    fn get(&self, section: &str, key: &str) -> Option<&Entry> {
        let e = self.entries.get(&(section.to_string(), key.to_string()))?;
        e.used.set(true);
        Some(e)
    }

    fn str(&self, section: &str, key: &str) -> Option<&str> {
        self.get(section, key).map(|e| e.value.as_str())
    }

    fn typed<T: std::str::FromStr>(&self, section: &str, key: &str, what: &str) -> Result<Option<T>> {
        match self.get(section, key) {
            None => Ok(None),
            Some(e) => e.value.parse().map(Some).map_err(|_| Error::Parse {
                line: e.line,
                column: 1,
                message: format!("[{section}] {key}: expected {what}, got `{}`", e.value),
            }),
        }
    }

    fn f64(&self, section: &str, key: &str) -> Result<Option<f64>> {
        self.typed(section, key, "a number")
    }

    fn usize(&self, section: &str, key: &str) -> Result<Option<usize>> {
        self.typed(section, key, "a nonnegative integer")
    }

    fn bool(&self, section: &str, key: &str) -> Result<Option<bool>> {
        match self.get(section, key) {
            None => Ok(None),
            Some(e) => match e.value.as_str() {
                "on" | "true" | "yes" => Ok(Some(true)),
                "off" | "false" | "no" => Ok(Some(false)),
                _ => Err(Error::Parse {
                    line: e.line,
                    column: 1,
                    message: format!("[{section}] {key}: expected on/off, got `{}`", e.value),
                }),
            },
        }
    }

    fn reject_unused(&self) -> Result<()> {
        for ((section, key), e) in &self.entries {
            if !e.used.get() {
                return Err(Error::Parse {
                    line: e.line,
                    column: 1,
                    message: format!("unknown key `{key}` in [{section}]"),
                });
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn empty_file_gives_benchmark_defaults() {
        let cfg = RunConfig::parse("").unwrap();
        assert_eq!(cfg, RunConfig::benchmark(ClosureKind::Nse));
    }

    #[test]
    fn parse_sections() {
        let cfg = RunConfig::parse(
            "# comment\n[mesh]\nkind = unit-square\nn = 16\n[closure]\nmodel = half-eq # trailing\ntau = 1e-3\n[stepper]\nfilter = on\nt_final = 2\n[output]\nsnapshot_times = 1, 2.5\n",
        )
        .unwrap();
        assert_eq!(cfg.mesh, MeshSpec::UnitSquare { n: 16 });
        assert_eq!(cfg.closure.kind, ClosureKind::HalfEq);
        assert_eq!(cfg.closure.tau, 1e-3);
        assert!(cfg.stepper.filter);
        assert_eq!(cfg.t_final, 2.0);
        assert_eq!(cfg.output.snapshot_times, vec![1.0, 2.5]);
    }

    #[test]
    fn errors_name_the_line() {
        let err = RunConfig::parse("[closure]\ntau = fast\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
        let err = RunConfig::parse("[closure]\ncolour = red\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
        let err = RunConfig::parse("[stepper\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
        assert!(matches!(RunConfig::parse("[closure]\ntau = -1\n"), Err(Error::InvalidParameter(_))));
        assert!(matches!(RunConfig::parse("[closure]\nmodel = sa\n"), Err(Error::Config(_))));
    }

    #[test]
    fn hash_tracks_content() {
        let a = RunConfig::benchmark(ClosureKind::HalfEq);
        let mut b = a.clone();
        assert_eq!(a.hash(), b.hash());
        b.closure.tau = 0.2;
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
    }

    fn arb_config() -> impl Strategy<Value = RunConfig> {
        let mesh = prop_oneof![
            (3usize..200, 3usize..100, 0.01f64..1.0, 1.0f64..5.0, 0.01f64..0.5, -0.4f64..0.4, -0.4f64..0.4)
                .prop_map(|(n_outer, n_inner, h_max, r1, r2, cx, cy)| MeshSpec::OffsetCircles { n_outer, n_inner, h_max, r1, r2, center: [cx, cy] }),
            (1usize..50, 3usize..100).prop_map(|(n_r, n_t)| MeshSpec::Annulus { n_r, n_t, r1: 1.0, r2: 0.1, center: [0.5, 0.0] }),
            (1usize..64).prop_map(|n| MeshSpec::UnitSquare { n }),
            "[a-z]{1,8}/[a-z]{1,8}\\.mesh".prop_map(|p| MeshSpec::File(PathBuf::from(p))),
        ];
        let kind = prop_oneof![
            Just(ClosureKind::Nse),
            Just(ClosureKind::OneEqKinematic),
            Just(ClosureKind::OneEqPrandtl),
            Just(ClosureKind::HalfEq)
        ];
        let forcing = prop_oneof![
            Just(ForcingSpec::OffsetCircles),
            Just(ForcingSpec::Zero),
            any::<bool>().prop_map(|steady| ForcingSpec::Mms { steady })
        ];
        (
            mesh,
            kind,
            (1e-6f64..1.0, 1e-4f64..1.0, 0.1f64..1.0, 0.1f64..1.0, 0.5f64..2.0, 0.0f64..1e-3, any::<bool>()),
            (1e-4f64..0.1, 0.0f64..20.0, 0.0f64..5.0, any::<bool>(), 1e-12f64..1e-3, 1usize..50, any::<bool>(), 1.0f64..1e6),
            forcing,
            proptest::collection::vec(0.0f64..20.0, 0..4),
        )
            .prop_map(|(mesh, kind, c, s, forcing, snaps)| {
                let mut cfg = RunConfig::benchmark(kind);
                cfg.mesh = mesh;
                cfg.stepper.nu = c.0;
                cfg.closure.tau = c.1;
                cfg.closure.mu = c.2;
                cfg.closure.kappa = c.3;
                cfg.closure.length_scale = c.4;
                cfg.closure.l_min = c.5;
                cfg.closure.periodic = c.6;
                cfg.stepper.dt = s.0;
                cfg.t_final = s.1;
                cfg.stepper.t_star = s.2;
                cfg.stepper.filter = s.3;
                cfg.stepper.picard_tol = s.4;
                cfg.stepper.picard_max = s.5;
                cfg.stepper.convection = s.6;
                cfg.stepper.reynolds = s.7;
                cfg.stepper.anderson = s.5 % 6;
                cfg.forcing = forcing;
                cfg.output.snapshot_times = snaps;
                cfg.output.dir = PathBuf::from("runs/x");
                cfg
            })
    }

    proptest! {
        #[test]
        fn config_round_trip(cfg in arb_config()) {
            let text = cfg.serialize();
            let back = RunConfig::parse(&text).unwrap();
            prop_assert_eq!(back, cfg);
        }
    }
}
