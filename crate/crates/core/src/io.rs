//! CSV exports of nodal fields, tables and particle snapshots.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::driver::{ConvergenceTable, DensityRow, ErrorRow, StepSummary};
use crate::error::{IfePicError, Result};
use crate::geometry::CartesianGrid;
use crate::pic::ParticleSet;

/// Enough digits to round-trip any f64.
fn num(v: f64) -> String {
    format!("{v:.17e}")
}

/// `x,y,value` rows, `j` outer and `i` inner.
pub fn export_nodal_field(values: &[f64], grid: &CartesianGrid, path: &Path) -> Result<()> {
    if values.len() != grid.node_count() {
        return Err(IfePicError::InvalidConfig(format!(
            "array has {} entries, grid has {} nodes",
            values.len(),
            grid.node_count()
        )));
    }
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "x,y,value")?;
    for (node, v) in values.iter().enumerate() {
        let p = grid.node_position(node);
        writeln!(w, "{},{},{}", num(p[0]), num(p[1]), num(*v))?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a file written by [`export_nodal_field`], returning positions and
/// values in file order.
pub fn read_nodal_field(path: &Path) -> Result<Vec<([f64; 2], f64)>> {
    let reader = BufReader::new(File::open(path)?);
    let mut out = Vec::new();
    for (k, line) in reader.lines().enumerate() {
        let line = line?;
        if k == 0 {
            if line != "x,y,value" {
                return Err(IfePicError::Parse(format!("unexpected header {line:?}")));
            }
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 3 {
            return Err(IfePicError::Parse(format!("line {}: expected 3 columns", k + 1)));
        }
        let parse = |s: &str| s.parse::<f64>().map_err(|e| IfePicError::Parse(format!("line {}: {e}", k + 1)));
        out.push(([parse(cols[0])?, parse(cols[1])?], parse(cols[2])?));
    }
    Ok(out)
}

/// A header plus preformatted rows.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut s = self.header.join(",");
        s.push('\n');
        for r in &self.rows {
            s.push_str(&r.join(","));
            s.push('\n');
        }
        s
    }
}

pub fn export_table(table: &Table, path: &Path) -> Result<()> {
    std::fs::write(path, table.to_csv())?;
    Ok(())
}

pub fn density_table(rows: &[DensityRow]) -> Table {
    let mut t = Table::new(&["N", "rho_bar_std", "err_std", "rho_bar_imp", "err_imp"]);
    for r in rows {
        t.push(vec![
            r.n.to_string(),
            num(r.rho_bar_standard),
            num(r.err_standard),
            num(r.rho_bar_improved),
            num(r.err_improved),
        ]);
    }
    t
}

pub fn potential_table(rows: &[ErrorRow]) -> Table {
    let mut t = Table::new(&["N", "err_traditional", "err_improved"]);
    for r in rows {
        t.push(vec![r.n.to_string(), num(r.traditional), num(r.improved)]);
    }
    t
}

pub fn convergence_table(table: &ConvergenceTable) -> Table {
    let mut t = Table::new(&["mesh", "err_traditional", "err_improved"]);
    for r in &table.rows {
        t.push(vec![format!("{0}x{0}", r.n), num(r.traditional), num(r.improved)]);
    }
    t.push(vec!["rate".into(), num(table.rate_traditional), num(table.rate_improved)]);
    t
}

pub fn cycle_table(steps: &[StepSummary]) -> Table {
    let mut t = Table::new(&["step", "active", "particle_charge", "deposited_charge", "residual", "iterations"]);
    for s in steps {
        t.push(vec![
            s.step.to_string(),
            s.active.to_string(),
            num(s.particle_charge),
            num(s.deposited_charge),
            num(s.residual),
            s.iterations.to_string(),
        ]);
    }
    t
}

/// `x,y,vx,vy,q` snapshot of the active particles.
pub fn export_particles(particles: &ParticleSet, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "x,y,vx,vy,q")?;
    for k in 0..particles.len() {
        writeln!(
            w,
            "{},{},{},{},{}",
            num(particles.x[k]),
            num(particles.y[k]),
            num(particles.vx[k]),
            num(particles.vy[k]),
            num(particles.q[k])
        )?;
    }
    w.flush()?;
    Ok(())
}
