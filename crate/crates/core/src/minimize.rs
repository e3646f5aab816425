//! Multi-start projected quasi-Newton minimization of the discrete energy.
//!
//! The energy is strictly convex and quadratic in u for fixed wp, with a
//! field-independent tridiagonal Hessian, so u is eliminated exactly: one
//! factorization per grid, one back-substitution per evaluation. The outer
//! descent then runs over wp alone, whose center value stays pinned at
//! zero while the rim condition c . wp = 1 - delta (trapezoid weights c)
//! is kept by moving along directions projected onto the constraint
//! tangent. Feasibility is exact linear algebra rather than a penalty.
//!
//! The reduced landscape still has two wells (upright and inverted slope),
//! so descent runs from several starts: the flatten and invert
//! deformations, a scaled cone with the cell-wise stretch-minimizing u,
//! and smooth random perturbations. Each start descends independently (in
//! parallel) with a limited-memory secant method, diagonal preconditioning
//! from the quadratic part of the energy, and a backtracking Armijo line
//! search; the best converged start wins, with deterministic tie-breaking.

use std::sync::Arc;

use rand::{Rng as _, SeedableRng as _};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::constructions::{construct_flatten, construct_invert};
use crate::energy::{energy, energy_gradient, EnergyBreakdown};
use crate::error::{Error, Result};
use crate::field::{Params, RadialField};
use crate::grid::{Grid, GL3_POS};

/// Default seed for the random starts.
pub const DEFAULT_SEED: u64 = 0x5EED;

/// Outcome of a minimization run.
#[derive(Clone, Debug, serde::Serialize)]
pub struct MinResult {
    /// Best field found; serialized separately as CSV, not JSON.
    #[serde(skip)]
    pub field: RadialField,
    /// Energy of `field`, re-evaluated at the end.
    pub breakdown: EnergyBreakdown,
    /// Max-norm of the full projected gradient at `field`.
    pub kkt_residual: f64,
    /// Final energy of every start, in start order.
    pub starts: Vec<f64>,
    /// Iterations used by the winning start.
    pub iterations: usize,
    /// Whether the winning start met the gradient tolerance.
    pub converged: bool,
    /// Seed that generated the random starts.
    pub seed: u64,
}

fn safe_total(field: &RadialField, params: &Params) -> f64 {
    match energy(field, params) {
        Ok(e) if e.total.is_finite() && !e.diverged => e.total,
        _ => f64::INFINITY,
    }
}

/// Admissible starting fields: flatten, invert (when h <= delta), the
/// scaled cone with cell-wise stretch-minimizing u, and smooth random
/// perturbations of flatten with amplitudes 0.1*delta and 0.1*h.
pub fn initial_set(params: &Params, grid: Arc<Grid>) -> Vec<RadialField> {
    initial_set_seeded(params, grid, DEFAULT_SEED)
}

pub fn initial_set_seeded(params: &Params, grid: Arc<Grid>, seed: u64) -> Vec<RadialField> {
    let delta = params.delta;
    let mut starts = Vec::new();

    let flatten = construct_flatten(params, grid.clone()).expect("flatten is unconditional");
    starts.push(flatten.clone());

    if params.h <= delta {
        starts.push(construct_invert(params, grid.clone()).expect("preconditions checked"));
    }

    // scaled cone: wp = 1 - delta away from the pinned center, u chosen per
    // cell to minimize the radial stretch
    let mut cone = RadialField::zeros(grid.clone());
    for v in cone.wp.iter_mut().skip(1) {
        *v = 1.0 - delta;
    }
    for (i, c) in grid.cells().iter().enumerate() {
        let (pa, pb) = (cone.wp[i], cone.wp[i + 1]);
        let mut numer = 0.0;
        for k in 0..3 {
            let p = pa + (pb - pa) * GL3_POS[k];
            numer += c.gl_wr[k] * (1.0 - p * p);
        }
        let du_star = numer / c.half_b2a2;
        cone.u[i + 1] = cone.u[i] + du_star * c.dx;
    }
    cone.project_onto_bc(delta);
    starts.push(cone);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for amplitude in [0.1 * delta, 0.1 * params.h] {
        let mut f = flatten.clone();
        let coeffs: Vec<f64> = (0..6).map(|_| rng.gen_range(-1.0..1.0)).collect();
        for (i, &r) in grid.nodes().iter().enumerate().skip(1) {
            let mut p = 0.0;
            for (k, a) in coeffs.iter().enumerate() {
                p += a * ((k + 1) as f64 * std::f64::consts::PI * r).sin();
            }
            f.wp[i] += amplitude * p / 3.0;
        }
        f.project_onto_bc(delta);
        starts.push(f);
    }
    starts
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn inf_norm(a: &[f64]) -> f64 {
    a.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

fn axpy(y: &mut [f64], a: f64, x: &[f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

/// LDL-style factorization of the symmetric positive definite tridiagonal
/// u-Hessian over the free nodes 1..=n.
struct TriFactor {
    dhat: Vec<f64>,
    low: Vec<f64>,
    off: Vec<f64>,
}

impl TriFactor {
    fn build(grid: &Grid) -> TriFactor {
        let n = grid.n_cells();
        let mut diag = vec![0.0; n];
        let mut off = vec![0.0; n - 1];
        for (i, c) in grid.cells().iter().enumerate() {
            let sw = 2.0 * c.half_b2a2 * c.inv_dx * c.inv_dx;
            diag[i] += 2.0 * c.g2 + sw;
            if i >= 1 {
                diag[i - 1] += 2.0 * c.g0 + sw;
                off[i - 1] += 2.0 * c.g1 - sw;
            }
        }
        let mut dhat = diag;
        let mut low = vec![0.0; n - 1];
        for i in 1..n {
            low[i - 1] = off[i - 1] / dhat[i - 1];
            dhat[i] -= low[i - 1] * off[i - 1];
        }
        TriFactor { dhat, low, off }
    }

    fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let n = rhs.len();
        let mut x = rhs.to_vec();
        for i in 1..n {
            let carry = self.low[i - 1] * x[i - 1];
            x[i] -= carry;
        }
        x[n - 1] /= self.dhat[n - 1];
        for i in (0..n - 1).rev() {
            x[i] = (x[i] - self.off[i] * x[i + 1]) / self.dhat[i];
        }
        x
    }
}

/// Diagonal of the field-independent quadratic wp-terms, plus the stretch
/// curvature estimated at the well bottoms |wp| = 1, floored away from zero.
fn wp_diagonal(grid: &Grid, h: f64) -> Vec<f64> {
    let n = grid.nodes().len();
    let h2 = h * h;
    let mut d = vec![0.0; n];
    for (i, c) in grid.cells().iter().enumerate() {
        let sw = 2.0 * c.half_b2a2 * c.inv_dx * c.inv_dx;
        d[i] += h2 * (2.0 * c.g0 + sw);
        d[i + 1] += h2 * (2.0 * c.g2 + sw);
        for k in 0..3 {
            let xi = GL3_POS[k];
            d[i] += 8.0 * c.gl_wr[k] * (1.0 - xi) * (1.0 - xi);
            d[i + 1] += 8.0 * c.gl_wr[k] * xi * xi;
        }
    }
    let top = d.iter().fold(0.0f64, |m, v| m.max(*v));
    let floor = 1e-8 * top.max(1.0);
    for v in &mut d {
        *v = v.max(floor);
    }
    d
}

/// One start's final state plus its full energy trace (for descent checks).
pub(crate) struct StartOutcome {
    pub(crate) field: RadialField,
    pub(crate) total: f64,
    pub(crate) kkt: f64,
    pub(crate) iterations: usize,
    pub(crate) converged: bool,
    #[cfg_attr(not(test), allow(dead_code))]
    pub(crate) trace: Vec<f64>,
}

struct Workspace<'a> {
    params: &'a Params,
    grid: &'a Grid,
    tri: TriFactor,
    cvec: Vec<f64>,
    cnorm2: f64,
    precond: Vec<f64>,
    tol: f64,
    max_iter: usize,
}

impl Workspace<'_> {
    /// Minimizer of the energy over u at fixed wp, with one step of
    /// iterative refinement.
    fn solve_u(&self, wp: &[f64]) -> Vec<f64> {
        let n = self.grid.n_cells();
        let mut rhs = vec![0.0; n];
        for (i, c) in self.grid.cells().iter().enumerate() {
            let (pa, pb) = (wp[i], wp[i + 1]);
            let mut sq = 0.0;
            for k in 0..3 {
                let p = pa + (pb - pa) * GL3_POS[k];
                sq += c.gl_wr[k] * (p * p - 1.0);
            }
            let sq = 2.0 * c.inv_dx * sq;
            if i >= 1 {
                rhs[i - 1] += sq;
            }
            rhs[i] -= sq;
        }
        let mut x = self.tri.solve(&rhs);
        // one refinement pass keeps the u-block of the KKT residual at
        // rounding level even on graded grids
        let mut resid = rhs.clone();
        for (i, c) in self.grid.cells().iter().enumerate() {
            let sw = 2.0 * c.half_b2a2 * c.inv_dx * c.inv_dx;
            let xa = if i >= 1 { x[i - 1] } else { 0.0 };
            let xb = x[i];
            if i >= 1 {
                resid[i - 1] -= (2.0 * c.g0 + sw) * xa + (2.0 * c.g1 - sw) * xb;
            }
            resid[i] -= (2.0 * c.g1 - sw) * xa + (2.0 * c.g2 + sw) * xb;
        }
        let corr = self.tri.solve(&resid);
        for (xi, ci) in x.iter_mut().zip(&corr) {
            *xi += ci;
        }
        let mut u = Vec::with_capacity(n + 1);
        u.push(0.0);
        u.extend_from_slice(&x);
        u
    }

    fn field_for(&self, wp: &[f64], grid: Arc<Grid>) -> RadialField {
        RadialField {
            grid,
            u: self.solve_u(wp),
            wp: wp.to_vec(),
        }
    }

    /// Removes the component along the rim constraint and re-pins index 0.
    fn project_tangent(&self, v: &mut [f64]) {
        v[0] = 0.0;
        let mut d = 0.0;
        for i in 1..v.len() {
            d += self.cvec[i] * v[i];
        }
        let lambda = d / self.cnorm2;
        for i in 1..v.len() {
            v[i] -= lambda * self.cvec[i];
        }
    }

    /// Projected wp-gradient of the reduced energy plus the full-gradient
    /// KKT residual (u-block included for honesty; it sits at rounding
    /// level by construction).
    fn gradient(&self, field: &RadialField) -> (Vec<f64>, f64) {
        let g = energy_gradient(field, self.params).expect("iterates stay finite");
        let mut gw = g.dwp;
        self.project_tangent(&mut gw);
        let kkt = inf_norm(&gw).max(inf_norm(&g.du));
        (gw, kkt)
    }
}

fn descend(start: RadialField, grid: Arc<Grid>, ws: &Workspace) -> StartOutcome {
    let memory = 10;
    let mut trace = vec![safe_total(&start, ws.params)];
    let mut wp = start.wp;
    {
        // exact projection onto the affine constraint before descending
        let mut field = RadialField {
            grid: grid.clone(),
            u: start.u,
            wp,
        };
        field.project_onto_bc(ws.params.delta);
        wp = field.wp;
    }
    let mut field = ws.field_for(&wp, grid.clone());
    let mut total = safe_total(&field, ws.params);
    trace.push(total);
    if !total.is_finite() {
        return StartOutcome {
            kkt: f64::INFINITY,
            total,
            field,
            iterations: 0,
            converged: false,
            trace,
        };
    }
    let (mut grad, mut kkt) = ws.gradient(&field);
    let mut pairs: Vec<(Vec<f64>, Vec<f64>, f64)> = Vec::new();
    let mut iterations = 0;
    let mut converged = false;
    let mut flat_steps = 0;

    while iterations < ws.max_iter {
        if kkt <= ws.tol * total.abs().max(1.0) {
            converged = true;
            break;
        }

        // two-loop recursion with diagonal-preconditioned seed matrix
        let mut q = grad.clone();
        let mut alphas = Vec::with_capacity(pairs.len());
        for (s, y, rho) in pairs.iter().rev() {
            let a = rho * dot(s, &q);
            axpy(&mut q, -a, y);
            alphas.push(a);
        }
        let gamma = if let Some((s, y, _)) = pairs.last() {
            let ydy: f64 = y
                .iter()
                .zip(&ws.precond)
                .map(|(yi, di)| yi * yi / di)
                .sum();
            (dot(s, y) / ydy).max(1e-12)
        } else {
            1.0
        };
        for (qi, di) in q.iter_mut().zip(&ws.precond) {
            *qi *= gamma / di;
        }
        for ((s, y, rho), a) in pairs.iter().zip(alphas.iter().rev()) {
            let b = rho * dot(y, &q);
            axpy(&mut q, a - b, s);
        }
        let mut dir = q;
        for v in &mut dir {
            *v = -*v;
        }
        ws.project_tangent(&mut dir);

        let mut slope = dot(&grad, &dir);
        if !(slope < 0.0) {
            // secant model lost descent; restart from preconditioned steepest
            pairs.clear();
            dir = grad.iter().zip(&ws.precond).map(|(g, d)| -g / d).collect();
            ws.project_tangent(&mut dir);
            slope = dot(&grad, &dir);
            if !(slope < 0.0) {
                break;
            }
        }

        // Armijo backtracking by halving; the sufficient-decrease test gets
        // a rounding allowance so polishing can continue once the true
        // decrease per step falls below the resolution of the energy itself
        let noise = 4.0 * f64::EPSILON * total.abs();
        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..50 {
            let mut wp_trial = wp.clone();
            axpy(&mut wp_trial[1..], step, &dir[1..]);
            let trial = ws.field_for(&wp_trial, grid.clone());
            let trial_total = safe_total(&trial, ws.params);
            if trial_total <= total + (1e-4 * step * slope).min(0.0) + noise {
                accepted = Some((wp_trial, trial, trial_total));
                break;
            }
            if step * slope.abs() <= noise {
                // halving further cannot separate the decrease from rounding
                break;
            }
            step *= 0.5;
        }
        let Some((new_wp, new_field, new_total)) = accepted else {
            break;
        };
        if new_total >= total - noise {
            flat_steps += 1;
            if flat_steps >= 50 {
                break;
            }
        } else {
            flat_steps = 0;
        }

        let (new_grad, new_kkt) = ws.gradient(&new_field);
        let s: Vec<f64> = dir.iter().map(|d| step * d).collect();
        let mut y = new_grad.clone();
        axpy(&mut y, -1.0, &grad);
        let sy = dot(&s, &y);
        if sy > 1e-14 * inf_norm(&s) * inf_norm(&y) {
            if pairs.len() == memory {
                pairs.remove(0);
            }
            pairs.push((s, y, 1.0 / sy));
        }

        wp = new_wp;
        field = new_field;
        total = new_total;
        grad = new_grad;
        kkt = new_kkt;
        trace.push(total);
        iterations += 1;

        if iterations % 50 == 0 {
            // exact re-projection guards against drift accumulated by steps
            field.project_onto_bc(ws.params.delta);
            wp = field.wp.clone();
        }
    }

    if !converged {
        converged = kkt <= ws.tol * total.abs().max(1.0);
    }
    StartOutcome {
        field,
        total,
        kkt,
        iterations,
        converged,
        trace,
    }
}

pub(crate) fn run_starts(
    params: &Params,
    grid: Arc<Grid>,
    tol: f64,
    max_iter: usize,
    seed: u64,
) -> Result<Vec<StartOutcome>> {
    if !(tol.is_finite() && tol > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "gradient tolerance must be positive, got {tol}"
        )));
    }
    let mut cvec = grid.trapezoid().to_vec();
    cvec[0] = 0.0;
    let cnorm2 = cvec.iter().map(|c| c * c).sum();
    let ws = Workspace {
        params,
        grid: &grid,
        tri: TriFactor::build(&grid),
        cvec,
        cnorm2,
        precond: wp_diagonal(&grid, params.h),
        tol,
        max_iter,
    };
    let starts = initial_set_seeded(params, grid.clone(), seed);
    Ok(starts
        .into_par_iter()
        .map(|f| descend(f, grid.clone(), &ws))
        .collect())
}

fn pick_best(outcomes: &[StartOutcome]) -> usize {
    let converged: Vec<usize> = (0..outcomes.len())
        .filter(|&i| outcomes[i].converged)
        .collect();
    let pool = if converged.is_empty() {
        (0..outcomes.len()).collect()
    } else {
        converged
    };
    let mut best = pool[0];
    for &i in &pool[1..] {
        let (a, b) = (&outcomes[i], &outcomes[best]);
        let tie = 1e-12 * a.total.abs().max(b.total.abs()).max(1.0);
        let better = if (a.total - b.total).abs() <= tie {
            (a.kkt, i) < (b.kkt, best)
        } else {
            a.total < b.total
        };
        if better {
            best = i;
        }
    }
    best
}

/// Minimizes the energy over the admissible class with the default seed.
///
/// `tol` is relative: a start converges when the projected-gradient
/// max-norm falls below `tol * max(1, |E|)`.
pub fn minimize(params: &Params, grid: Arc<Grid>, tol: f64, max_iter: usize) -> Result<MinResult> {
    minimize_seeded(params, grid, tol, max_iter, DEFAULT_SEED)
}

pub fn minimize_seeded(
    params: &Params,
    grid: Arc<Grid>,
    tol: f64,
    max_iter: usize,
    seed: u64,
) -> Result<MinResult> {
    let outcomes = run_starts(params, grid, tol, max_iter, seed)?;
    let starts: Vec<f64> = outcomes.iter().map(|o| o.total).collect();
    let best = pick_best(&outcomes);
    let winner = &outcomes[best];
    let breakdown = energy(&winner.field, params)?;
    Ok(MinResult {
        field: winner.field.clone(),
        breakdown,
        kkt_residual: winner.kkt,
        starts,
        iterations: winner.iterations,
        converged: winner.converged,
        seed,
    })
}
