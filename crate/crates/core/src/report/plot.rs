//! Flat CSV tables for external plotters.
//!
//! | kind         | columns                                              |
//! |--------------|------------------------------------------------------|
//! | `trajectory` | `j, R_j, delta_j, E_j, dE, dpsi, simple, residual`   |
//! | `histogram`  | `bin_lo, bin_hi, count, fraction`                    |
//! | `field`      | `x1, …, xd, gamma, in_mask, grad_norm`               |
//! | `spectrum`   | `operator, index, energy`                            |
//!
//! Reals are written as `{:.16e}`, booleans as `0`/`1`.

use std::path::{Path, PathBuf};

use super::{ResultRecord, RunError};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PlotKind {
    Trajectory,
    Histogram,
    Field,
    Spectrum,
}

impl PlotKind {
    pub const ALL: [PlotKind; 4] = [PlotKind::Trajectory, PlotKind::Histogram, PlotKind::Field, PlotKind::Spectrum];

    pub fn name(self) -> &'static str {
        match self {
            PlotKind::Trajectory => "trajectory",
            PlotKind::Histogram => "histogram",
            PlotKind::Field => "field",
            PlotKind::Spectrum => "spectrum",
        }
    }

    pub fn parse(s: &str) -> Result<Self, RunError> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| RunError::UnknownKind(s.to_string()))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PlotTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

fn real(v: f64) -> String {
    format!("{v:.16e}")
}

fn flag(b: bool) -> String {
    if b { "1" } else { "0" }.to_string()
}

pub fn plot_table(record: &ResultRecord, kind: &str) -> Result<PlotTable, RunError> {
    let kind = PlotKind::parse(kind)?;
    let header = |cols: &[&str]| cols.iter().map(|c| c.to_string()).collect::<Vec<_>>();
    match kind {
        PlotKind::Trajectory => {
            let m = record.multiscale.as_ref().ok_or(RunError::MissingOutput("multiscale"))?;
            let rows = m
                .trajectory
                .certificates
                .iter()
                .map(|c| {
                    vec![
                        c.level.to_string(),
                        c.radius.to_string(),
                        real(m.schedule.delta(c.level)),
                        real(c.energy),
                        real(c.energy_diff),
                        real(c.vector_diff),
                        flag(c.simplicity_radius > 0.0),
                        real(c.residual),
                    ]
                })
                .collect();
            Ok(PlotTable {
                header: header(&["j", "R_j", "delta_j", "E_j", "dE", "dpsi", "simple", "residual"]),
                rows,
            })
        }
        PlotKind::Histogram => {
            let ac = record.ac_estimate.as_ref().ok_or(RunError::MissingOutput("ac-estimate"))?;
            let rows = ac
                .coverage
                .bins
                .iter()
                .map(|b| vec![real(b.lo), real(b.hi), b.count.to_string(), real(b.fraction)])
                .collect();
            Ok(PlotTable {
                header: header(&["bin_lo", "bin_hi", "count", "fraction"]),
                rows,
            })
        }
        PlotKind::Field => {
            let ext = record.extension.as_ref().ok_or(RunError::MissingOutput("extension"))?;
            let f = &ext.gamma.field;
            let mut cols: Vec<String> = (1..=f.grid.dim).map(|j| format!("x{j}")).collect();
            cols.extend(header(&["gamma", "in_mask", "grad_norm"]));
            let rows = (0..f.grid.len())
                .map(|i| {
                    let mut row: Vec<String> = f.grid.point(i).into_iter().map(real).collect();
                    row.extend([real(f.values[i]), flag(f.mask[i]), real(f.grad_norm[i])]);
                    row
                })
                .collect();
            Ok(PlotTable { header: cols, rows })
        }
        PlotKind::Spectrum => {
            let s = record.spectrum.as_ref().ok_or(RunError::MissingOutput("spectrum"))?;
            let rows = [("dual", &s.dual), ("primal", &s.primal)]
                .into_iter()
                .flat_map(|(name, b)| {
                    b.energies
                        .iter()
                        .enumerate()
                        .map(move |(i, &e)| vec![name.to_string(), i.to_string(), real(e)])
                })
                .collect();
            Ok(PlotTable {
                header: header(&["operator", "index", "energy"]),
                rows,
            })
        }
    }
}

/// Writes `<dir>/<kind>.csv`.
pub fn emit_plotdata(record: &ResultRecord, kind: &str, dir: &Path) -> Result<PathBuf, RunError> {
    let table = plot_table(record, kind)?;
    let path = dir.join(format!("{kind}.csv"));
    let io = |e: csv::Error| RunError::Io(format!("{}: {e}", path.display()));
    let mut w = csv::Writer::from_path(&path).map_err(io)?;
    w.write_record(&table.header).map_err(io)?;
    for row in &table.rows {
        w.write_record(row).map_err(io)?;
    }
    w.flush().map_err(|e| RunError::Io(format!("{}: {e}", path.display())))?;
    Ok(path)
}
