//! Nodal displacement fields on a radial grid.
//!
//! A field stores the in-plane displacement u and the deflection slope
//! wp = w' at the grid nodes; both are piecewise linear in r. The deflection
//! itself is recovered as the exact trapezoid integral of wp, so w(0) = 0
//! holds by construction and the outer condition w(1) = 1 - delta is the
//! single linear constraint c . wp = 1 - delta with trapezoid weights c.
//! The center values u(0) and wp(0) are pinned to zero.

use std::fmt::Write as _;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::grid::Grid;

/// Model parameters: relative thickness h and indentation depth delta.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Params {
    pub h: f64,
    pub delta: f64,
}

impl Params {
    pub fn new(h: f64, delta: f64) -> Result<Params> {
        if !(h.is_finite() && h > 0.0 && h <= 0.5) {
            return Err(Error::InvalidParameter(format!(
                "thickness h must lie in (0, 1/2], got {h}"
            )));
        }
        if !(delta.is_finite() && (0.0..=1.0).contains(&delta)) {
            return Err(Error::InvalidParameter(format!(
                "indentation delta must lie in [0, 1], got {delta}"
            )));
        }
        Ok(Params { h, delta })
    }
}

/// Piecewise-linear nodal field (u, wp) on a shared grid.
#[derive(Clone, Debug)]
pub struct RadialField {
    pub grid: Arc<Grid>,
    pub u: Vec<f64>,
    pub wp: Vec<f64>,
}

impl RadialField {
    /// The zero field: undeformed cone reference, u = 0, wp = 0.
    pub fn zeros(grid: Arc<Grid>) -> RadialField {
        let n = grid.nodes().len();
        RadialField {
            grid,
            u: vec![0.0; n],
            wp: vec![0.0; n],
        }
    }

    pub fn n_nodes(&self) -> usize {
        self.u.len()
    }

    /// Deflection w at the nodes: trapezoid integral of wp from 0.
    pub fn w(&self) -> Vec<f64> {
        let cells = self.grid.cells();
        let mut w = Vec::with_capacity(self.wp.len());
        let mut acc = 0.0;
        w.push(0.0);
        for (i, c) in cells.iter().enumerate() {
            acc += 0.5 * c.dx * (self.wp[i] + self.wp[i + 1]);
            w.push(acc);
        }
        w
    }

    /// Deflection at the outer rim, w(1).
    pub fn w_rim(&self) -> f64 {
        self.grid
            .trapezoid()
            .iter()
            .zip(&self.wp)
            .map(|(c, p)| c * p)
            .sum()
    }

    /// Pins the center values and shifts wp by the smallest correction
    /// enforcing w(1) = 1 - delta exactly (orthogonal projection onto the
    /// trapezoid constraint, leaving the pinned component untouched).
    pub fn project_onto_bc(&mut self, delta: f64) {
        self.u[0] = 0.0;
        self.wp[0] = 0.0;
        let c = self.grid.trapezoid();
        let mut dot = 0.0;
        let mut nrm = 0.0;
        for i in 1..self.wp.len() {
            dot += c[i] * self.wp[i];
            nrm += c[i] * c[i];
        }
        let lambda = (1.0 - delta - dot) / nrm;
        for i in 1..self.wp.len() {
            self.wp[i] += lambda * c[i];
        }
    }

    /// Serializes the field as CSV with header r,u,w,wp.
    pub fn to_csv(&self) -> String {
        let w = self.w();
        let mut out = String::with_capacity(80 * self.n_nodes());
        out.push_str("r,u,w,wp\n");
        for i in 0..self.n_nodes() {
            writeln!(
                out,
                "{:.16e},{:.16e},{:.16e},{:.16e}",
                self.grid.nodes()[i],
                self.u[i],
                w[i],
                self.wp[i]
            )
            .unwrap();
        }
        out
    }

    /// Parses a field written by `to_csv`. The grid is rebuilt from the r
    /// column; the w column is ignored (wp is the stored unknown).
    pub fn from_csv(text: &str) -> Result<RadialField> {
        let mut lines = text.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("empty field file".into()))?;
        let cols: Vec<&str> = header.split(',').map(str::trim).collect();
        if cols != ["r", "u", "w", "wp"] {
            return Err(Error::Parse(format!(
                "expected header r,u,w,wp, got {header:?}"
            )));
        }
        let mut r = Vec::new();
        let mut u = Vec::new();
        let mut wp = Vec::new();
        for (k, line) in lines.enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 4 {
                return Err(Error::Parse(format!(
                    "line {}: expected 4 fields, got {}",
                    k + 2,
                    f.len()
                )));
            }
            let parse = |s: &str| -> Result<f64> {
                s.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Parse(format!("line {}: {e}", k + 2)))
            };
            r.push(parse(f[0])?);
            u.push(parse(f[1])?);
            wp.push(parse(f[3])?);
        }
        let grid = Arc::new(Grid::from_nodes(r)?);
        Ok(RadialField { grid, u, wp })
    }
}

/// Boundary-condition residuals and weighted-norm finiteness diagnostics.
#[derive(Clone, Copy, Debug, serde::Serialize)]
pub struct AdmissibilityReport {
    /// |w(0)|; zero by construction of w.
    pub center_w: f64,
    /// |w(1) - (1 - delta)|.
    pub rim: f64,
    /// Norm of u in the 1/r-weighted space; infinite when u(0) != 0.
    pub norm_u_inv_r: f64,
    /// Norm of u' in the r-weighted space.
    pub norm_du_r: f64,
    /// Norm of w' in the 1/r-weighted space; infinite when wp(0) != 0.
    pub norm_wp_inv_r: f64,
    /// Norm of w'' in the r-weighted space.
    pub norm_dwp_r: f64,
    pub admissible: bool,
}

/// Checks the rim deflection against `tol` and the weighted norms for
/// finiteness (a nonzero center value makes the 1/r weight diverge).
pub fn check_admissible(field: &RadialField, delta: f64, tol: f64) -> AdmissibilityReport {
    let g = &field.grid;
    let rim = (field.w_rim() - (1.0 - delta)).abs();
    let norm_u_inv_r = g.form_inv_r(&field.u).sqrt();
    let norm_du_r = g.form_grad_r(&field.u).sqrt();
    let norm_wp_inv_r = g.form_inv_r(&field.wp).sqrt();
    let norm_dwp_r = g.form_grad_r(&field.wp).sqrt();
    let finite = [norm_u_inv_r, norm_du_r, norm_wp_inv_r, norm_dwp_r]
        .iter()
        .all(|n| n.is_finite());
    AdmissibilityReport {
        center_w: 0.0,
        rim,
        norm_u_inv_r,
        norm_du_r,
        norm_wp_inv_r,
        norm_dwp_r,
        admissible: rim <= tol && finite,
    }
}
