//! CSV tables of run results.

use std::fmt::Write as _;
use std::path::Path;

use super::{SweepPoint, TimeSeries};
use crate::geometry::CavityRoof;

/// A comma-separated table with a header row.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Csv {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

/// Fifteen significant digits.
pub fn num(v: f64) -> String {
    format!("{v:.14e}")
}

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        Self {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        assert_eq!(row.len(), self.header.len(), "row width");
        self.rows.push(row);
    }

    pub fn render(&self) -> String {
        let mut s = self.header.join(",");
        s.push('\n');
        for r in &self.rows {
            let _ = writeln!(s, "{}", r.join(","));
        }
        s
    }
}

pub fn write_csv(path: &Path, csv: &Csv) -> std::io::Result<()> {
    std::fs::write(path, csv.render())
}

/// One row of the steady summary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SteadySummary {
    pub n_e: usize,
    pub cells: usize,
    pub tau_b: f64,
    pub u_b: f64,
    pub x_detach: Option<f64>,
    pub x_reattach: Option<f64>,
}

pub fn steady_csv(rows: &[SteadySummary]) -> Csv {
    let mut c = Csv::new(&["n_e", "cells", "tau_b", "u_b", "x_detach", "x_reattach"]);
    for r in rows {
        c.push(vec![
            r.n_e.to_string(),
            r.cells.to_string(),
            num(r.tau_b),
            num(r.u_b),
            opt(r.x_detach),
            opt(r.x_reattach),
        ]);
    }
    c
}

pub fn sweep_csv(points: &[SweepPoint]) -> Csv {
    let mut c = Csv::new(&[
        "N",
        "u_b",
        "tau_b",
        "u_b_scaled",
        "tau_scaled",
        "V",
        "x_detach",
        "x_reattach",
        "converged",
    ]);
    for p in points {
        c.push(vec![
            num(p.n_eff),
            num(p.u_b),
            num(p.tau_b),
            num(p.u_b_scaled),
            num(p.tau_scaled),
            num(p.volume),
            opt(p.x_detach),
            opt(p.x_reattach),
            (p.converged as u8).to_string(),
        ]);
    }
    c
}

pub fn series_csv(series: &TimeSeries) -> Csv {
    let mut c = Csv::new(&["t", "N", "tau_b", "u_b", "V", "x_detach", "x_reattach"]);
    for r in &series.records {
        c.push(vec![
            num(r.t),
            num(r.n_eff),
            num(r.tau_b),
            num(r.u_b),
            num(r.volume),
            opt(r.x_detach),
            opt(r.x_reattach),
        ]);
    }
    c
}

pub fn roof_csv(snapshots: &[(f64, CavityRoof)]) -> Csv {
    let mut c = Csv::new(&["t", "x", "theta"]);
    for (t, roof) in snapshots {
        for (x, th) in roof.x.iter().zip(&roof.theta) {
            c.push(vec![num(*t), num(*x), num(*th)]);
        }
    }
    c
}

pub fn multiplier_csv(profile: &[(f64, f64)]) -> Csv {
    let mut c = Csv::new(&["x", "lambda"]);
    for (x, l) in profile {
        c.push(vec![num(*x), num(*l)]);
    }
    c
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fifteen_significant_digits() {
        assert_eq!(num(0.1), "1.00000000000000e-1");
        assert_eq!(num(-2.5e-7), "-2.50000000000000e-7");
        assert_eq!(num(1.0 / 3.0).len(), "3.33333333333333e-1".len());
    }

    #[test]
    fn renders_header_and_empty_options() {
        let c = steady_csv(&[SteadySummary {
            n_e: 16,
            cells: 96,
            tau_b: 0.0,
            u_b: 1.0,
            x_detach: None,
            x_reattach: None,
        }]);
        assert_eq!(
            c.render(),
            "n_e,cells,tau_b,u_b,x_detach,x_reattach\n16,96,0.00000000000000e0,1.00000000000000e0,,\n"
        );
    }
}
