//! Radial grids on [0, 1] with geometric refinement toward the origin.
//!
//! The energy carries 1/r weights and a boundary layer of width ~h/5 near
//! r = 0, so `make_grid` grades the first cells geometrically (first width
//! h/20, ratio at most 1.25) out to r = min(4h, 1/2) and fills the rest
//! uniformly. Each cell stores exact closed-form quadrature data: the
//! 1/r-weighted quadratic form of the linear shape functions (series below
//! t = 0.1 to dodge cancellation, log form above) and a three-point Gauss
//! rule that is exact for the degree-5 stretch integrand.

use crate::error::{Error, Result};

/// Relative GL3 node positions on [0, 1] and their weights.
pub const GL3_POS: [f64; 3] = [
    0.5 - 0.387_298_334_620_741_7,
    0.5,
    0.5 + 0.387_298_334_620_741_7,
];
pub const GL3_WEIGHT: [f64; 3] = [5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0];

/// Per-cell precomputed quadrature data for [a, b].
#[derive(Clone, Debug)]
pub struct Cell {
    pub a: f64,
    pub b: f64,
    pub dx: f64,
    pub inv_dx: f64,
    /// 1/r-weighted shape form: integral of (va*(1-s) + vb*s)^2 / r equals
    /// g0*va^2 + 2*g1*va*vb + g2*vb^2. The first cell pins va = 0 and the
    /// exact integral is vb^2/2.
    pub g0: f64,
    pub g1: f64,
    pub g2: f64,
    /// (b^2 - a^2)/2, the exact integral of r over the cell.
    pub half_b2a2: f64,
    /// Absolute GL3 radii and the combined weights dx * w_i * r_i.
    pub gl_r: [f64; 3],
    pub gl_wr: [f64; 3],
}

fn shape_form(t: f64) -> (f64, f64, f64) {
    if t < 0.1 {
        // alternating series in t = dx/a; 15 terms reach ~1e-17 at t = 0.1
        let mut g0 = 0.0;
        let mut g1 = 0.0;
        let mut g2 = 0.0;
        let mut tm = 1.0;
        for m in 1..=15 {
            tm *= -t;
            let mf = m as f64;
            let term = -tm; // (-1)^{m+1} t^m
            g0 += 2.0 * term / (mf * (mf + 1.0) * (mf + 2.0));
            g1 += term / ((mf + 1.0) * (mf + 2.0));
            g2 += term / (mf + 2.0);
        }
        (g0, g1, g2)
    } else {
        let l = t.ln_1p();
        let t2 = t * t;
        let g0 = ((1.0 + t) * (1.0 + t) * l - 1.5 * t2 - t) / t2;
        let g1 = (0.5 * t2 + t - (1.0 + t) * l) / t2;
        let g2 = (0.5 * t2 - t + l) / t2;
        (g0, g1, g2)
    }
}

impl Cell {
    fn new(a: f64, b: f64) -> Cell {
        let dx = b - a;
        let (g0, g1, g2) = if a == 0.0 {
            (0.0, 0.0, 0.5)
        } else {
            shape_form(dx / a)
        };
        let mut gl_r = [0.0; 3];
        let mut gl_wr = [0.0; 3];
        for i in 0..3 {
            gl_r[i] = a + dx * GL3_POS[i];
            gl_wr[i] = dx * GL3_WEIGHT[i] * gl_r[i];
        }
        Cell {
            a,
            b,
            dx,
            inv_dx: 1.0 / dx,
            g0,
            g1,
            g2,
            half_b2a2: 0.5 * (b * b - a * a),
            gl_r,
            gl_wr,
        }
    }
}

/// How a policy grid was graded; grids built from explicit nodes carry none.
#[derive(Clone, Debug)]
pub struct Grading {
    pub core_cells: usize,
    pub first_width: f64,
    pub ratio: f64,
    pub core_radius: f64,
    pub tail_cells: usize,
    pub tail_width: f64,
}

/// Strictly increasing radii r_0 = 0 < ... < r_N = 1 with cell tables.
#[derive(Clone, Debug)]
pub struct Grid {
    nodes: Vec<f64>,
    cells: Vec<Cell>,
    trap: Vec<f64>,
    grading: Option<Grading>,
}

impl Grid {
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    pub fn n_cells(&self) -> usize {
        self.cells.len()
    }

    /// Trapezoid weights c with c . v = integral of the piecewise-linear
    /// nodal function v over [0, 1].
    pub fn trapezoid(&self) -> &[f64] {
        &self.trap
    }

    pub fn grading(&self) -> Option<&Grading> {
        self.grading.as_ref()
    }

    pub fn min_width(&self) -> f64 {
        self.cells.iter().fold(f64::INFINITY, |m, c| m.min(c.dx))
    }

    /// Exact integral of v(r)^2 / r for piecewise-linear nodal v.
    /// Infinite unless v vanishes at the center node.
    pub fn form_inv_r(&self, v: &[f64]) -> f64 {
        if v[0] != 0.0 {
            return f64::INFINITY;
        }
        let mut acc = 0.0;
        for (i, c) in self.cells.iter().enumerate() {
            let (va, vb) = (v[i], v[i + 1]);
            acc += c.g0 * va * va + 2.0 * c.g1 * va * vb + c.g2 * vb * vb;
        }
        acc
    }

    /// Exact integral of v'(r)^2 * r for piecewise-linear nodal v.
    pub fn form_grad_r(&self, v: &[f64]) -> f64 {
        let mut acc = 0.0;
        for (i, c) in self.cells.iter().enumerate() {
            let s = (v[i + 1] - v[i]) * c.inv_dx;
            acc += s * s * c.half_b2a2;
        }
        acc
    }

    /// Builds a grid from explicit nodes (r_0 = 0, r_N = 1, increasing).
    pub fn from_nodes(nodes: Vec<f64>) -> Result<Grid> {
        if nodes.len() < 2 {
            return Err(Error::InvalidParameter(
                "grid needs at least two nodes".into(),
            ));
        }
        if !nodes.iter().all(|r| r.is_finite()) {
            return Err(Error::NonFinite("grid nodes".into()));
        }
        if nodes[0] != 0.0 || *nodes.last().unwrap() != 1.0 {
            return Err(Error::InvalidParameter(
                "grid must span exactly [0, 1]".into(),
            ));
        }
        if nodes.windows(2).any(|p| p[1] <= p[0]) {
            return Err(Error::InvalidParameter(
                "grid nodes must be strictly increasing".into(),
            ));
        }
        Ok(Grid::assemble(nodes, None))
    }

    fn assemble(nodes: Vec<f64>, grading: Option<Grading>) -> Grid {
        let n = nodes.len() - 1;
        let cells: Vec<Cell> = (0..n).map(|i| Cell::new(nodes[i], nodes[i + 1])).collect();
        let mut trap = vec![0.0; n + 1];
        for (i, c) in cells.iter().enumerate() {
            trap[i] += 0.5 * c.dx;
            trap[i + 1] += 0.5 * c.dx;
        }
        Grid {
            nodes,
            cells,
            trap,
            grading,
        }
    }
}

/// Builds the policy grid for `n_cells` cells at thickness `h`.
pub fn make_grid(n_cells: usize, h: f64) -> Result<Grid> {
    if !(h.is_finite() && h > 0.0 && h <= 0.5) {
        return Err(Error::InvalidParameter(format!(
            "thickness h must lie in (0, 1/2], got {h}"
        )));
    }
    if n_cells < 16 {
        return Err(Error::InvalidParameter(format!(
            "n_cells must be at least 16, got {n_cells}"
        )));
    }
    let r_star = (4.0 * h).min(0.5);
    let d0_cap = h / 20.0;
    let mut n_core = (n_cells / 4).max(8);
    let (widths, ratio) = loop {
        let n_tail = n_cells as i64 - n_core as i64;
        if n_tail < 4 {
            return Err(Error::BoundaryLayer(format!(
                "{n_cells} cells cannot resolve scale h = {h}"
            )));
        }
        let uniform = r_star / n_core as f64;
        if uniform <= d0_cap {
            break (vec![uniform; n_core], 1.0);
        }
        // geometric: first width h/20, common ratio at most 1.25
        let reach = |rho: f64| d0_cap * (rho.powi(n_core as i32) - 1.0) / (rho - 1.0);
        if reach(1.25) >= r_star {
            let mut lo = 1.0 + 1e-12;
            let mut hi = 1.25;
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if reach(mid) < r_star {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let rho = 0.5 * (lo + hi);
            let w: Vec<f64> = (0..n_core).map(|i| d0_cap * rho.powi(i as i32)).collect();
            break (w, rho);
        }
        n_core += 1;
    };

    let mut nodes = Vec::with_capacity(n_cells + 1);
    nodes.push(0.0);
    let mut r = 0.0;
    for w in &widths {
        r += w;
        nodes.push(r);
    }
    let core_radius = r;
    let n_tail = n_cells - n_core;
    let tail_width = (1.0 - core_radius) / n_tail as f64;
    for i in 1..n_tail {
        nodes.push(core_radius + tail_width * i as f64);
    }
    nodes.push(1.0);

    let grading = Grading {
        core_cells: n_core,
        first_width: widths[0],
        ratio,
        core_radius,
        tail_cells: n_tail,
        tail_width,
    };
    Ok(Grid::assemble(nodes, Some(grading)))
}
