//! Statistics CSV and legacy VTK field output.

use std::io::{self, BufRead, Write};

use crate::closures::{Closure, TurbState};
use crate::error::{Error, Result};
use crate::fem::{Discretization, FlowState};
use crate::statistics::StatsRecord;

/// Streams [`StatsRecord`]s as CSV, preceded by `# key=value` metadata lines.
pub struct StatsWriter<W: Write> {
    out: W,
}

impl<W: Write> StatsWriter<W> {
    pub fn new(mut out: W, metadata: &[(String, String)]) -> io::Result<Self> {
        for (k, v) in metadata {
            writeln!(out, "# {k}={v}")?;
        }
        writeln!(out, "{}", StatsRecord::COLUMNS.join(","))?;
        Ok(StatsWriter { out })
    }

    pub fn write(&mut self, r: &StatsRecord) -> io::Result<()> {
        let vals = r.values();
        let n = vals.len();
        for (i, v) in vals.into_iter().enumerate() {
            if i == n - 1 {
                write!(self.out, "{}", r.picard_iters)?;
            } else if let Some(v) = v {
                write!(self.out, "{v:.16e},")?;
            } else {
                write!(self.out, ",")?;
            }
        }
        writeln!(self.out)
    }

    pub fn flush(&mut self) -> io::Result<()> {
        self.out.flush()
    }

    pub fn into_inner(self) -> W {
        self.out
    }
}

/// Metadata and records of a stats CSV.
#[derive(Clone, Debug, Default)]
pub struct StatsTable {
    pub metadata: Vec<(String, String)>,
    pub records: Vec<StatsRecord>,
}

impl StatsTable {
    pub fn meta(&self, key: &str) -> Option<&str> {
        self.metadata.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }
}

pub fn read_stats_csv<R: BufRead>(reader: R) -> Result<StatsTable> {
    let mut table = StatsTable::default();
    let mut header_seen = false;
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|e| Error::Parse {
            line: line_no,
            column: 1,
            message: e.to_string(),
        })?;
        if let Some(meta) = line.strip_prefix("# ") {
            if let Some((k, v)) = meta.split_once('=') {
                table.metadata.push((k.to_string(), v.to_string()));
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        if !header_seen {
            let cols: Vec<&str> = line.split(',').collect();
            if cols != StatsRecord::COLUMNS {
                return Err(Error::Parse {
                    line: line_no,
                    column: 1,
                    message: format!("unexpected header `{line}`"),
                });
            }
            header_seen = true;
            continue;
        }
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != StatsRecord::COLUMNS.len() {
            return Err(Error::Parse {
                line: line_no,
                column: 1,
                message: format!("expected {} cells, found {}", StatsRecord::COLUMNS.len(), cells.len()),
            });
        }
        let mut col = 1;
        let mut vals = [None; 10];
        for (j, c) in cells.iter().enumerate() {
            if !c.is_empty() {
                vals[j] = Some(c.parse::<f64>().map_err(|_| Error::Parse {
                    line: line_no,
                    column: col,
                    message: format!("bad number `{c}`"),
                })?);
            }
            col += c.len() + 1;
        }
        let need = |j: usize| {
            vals[j].ok_or_else(|| Error::Parse {
                line: line_no,
                column: 1,
                message: format!("missing `{}`", StatsRecord::COLUMNS[j]),
            })
        };
        table.records.push(StatsRecord {
            t: need(0)?,
            kinetic_energy: need(1)?,
            enstrophy: need(2)?,
            taylor_microscale: vals[3],
            turbulence_intensity: vals[4],
            k_avg: need(5)?,
            eps: need(6)?,
            eps_model: need(7)?,
            budget_residual: need(8)?,
            picard_iters: need(9)? as usize,
            budget_scale: f64::NAN,
            picard_converged: true,
            ln_k: None,
        });
    }
    if !header_seen {
        return Err(Error::Parse {
            line: 1,
            column: 1,
            message: "missing header line".into(),
        });
    }
    Ok(table)
}

/// `ν_T` at every quadratic node.
pub fn nodal_nu_t(disc: &Discretization, closure: &Closure, turb: &TurbState) -> Vec<f64> {
    let k = nodal_k(disc, turb);
    (0..disc.dofs.n_nodes())
        .map(|i| {
            let y = disc.wall.values()[i];
            match turb {
                TurbState::Absent => 0.0,
                _ => closure.nu_t_at(k.as_ref().map_or(0.0, |k| k[i]), y),
            }
        })
        .collect()
}

/// `k` at every quadratic node (linear interpolation to edge midpoints).
pub fn nodal_k(disc: &Discretization, turb: &TurbState) -> Option<Vec<f64>> {
    match turb {
        TurbState::Absent => None,
        TurbState::ScalarK { ln_k } => Some(vec![ln_k.exp(); disc.dofs.n_nodes()]),
        TurbState::FieldK(k) => Some(p1_to_nodes(disc, k)),
    }
}

fn p1_to_nodes(disc: &Discretization, v: &[f64]) -> Vec<f64> {
    let mut out = v.to_vec();
    out.extend(disc.mesh.edges().iter().map(|[a, b]| 0.5 * (v[*a] + v[*b])));
    out
}

/// Legacy ASCII VTK unstructured grid of quadratic triangles with point
/// data `velocity`, `pressure`, `nu_t` and, for a `k(x, t)` field, `k`.
pub fn write_field_vtk<W: Write>(
    mut out: W,
    disc: &Discretization,
    flow: &FlowState,
    closure: &Closure,
    turb: &TurbState,
    t: f64,
) -> io::Result<()> {
    let n = disc.dofs.n_nodes();
    let nt = disc.n_elements();
    writeln!(out, "# vtk DataFile Version 3.0")?;
    writeln!(out, "urans field t={t:.16e} closure={}", closure.kind)?;
    writeln!(out, "ASCII\nDATASET UNSTRUCTURED_GRID")?;
    writeln!(out, "POINTS {n} double")?;
    for i in 0..n {
        let [x, y] = disc.mesh.node(i);
        writeln!(out, "{x:.16e} {y:.16e} 0")?;
    }
    writeln!(out, "CELLS {nt} {}", nt * 7)?;
    for t in 0..nt {
        let l = disc.dofs.local_nodes(t);
        writeln!(out, "6 {} {} {} {} {} {}", l[0], l[1], l[2], l[3], l[4], l[5])?;
    }
    writeln!(out, "CELL_TYPES {nt}")?;
    for _ in 0..nt {
        writeln!(out, "22")?;
    }
    writeln!(out, "POINT_DATA {n}")?;
    writeln!(out, "VECTORS velocity double")?;
    for i in 0..n {
        writeln!(out, "{:.16e} {:.16e} 0", flow.velocity[i], flow.velocity[n + i])?;
    }
    let scalar = |out: &mut W, name: &str, v: &[f64]| -> io::Result<()> {
        writeln!(out, "SCALARS {name} double 1\nLOOKUP_TABLE default")?;
        for x in v {
            writeln!(out, "{x:.16e}")?;
        }
        Ok(())
    };
    scalar(&mut out, "pressure", &p1_to_nodes(disc, &flow.pressure))?;
    scalar(&mut out, "nu_t", &nodal_nu_t(disc, closure, turb))?;
    if let TurbState::FieldK(k) = turb {
        scalar(&mut out, "k", &p1_to_nodes(disc, k))?;
    }
    Ok(())
}
