//! Sweep orchestration, regime classification, and profile diagnostics.
//!
//! A sweep runs the constructions and the minimizer over a grid of
//! (h, delta) points and stores one record per point: energies, the
//! predicted scaling bound, the well-exit radius tau, a regime label
//! decided from the computed minimizer, and a map of monitored
//! diagnostic ratios. Records serialize to JSON lines keyed by
//! (h, delta, cells, seed) so interrupted sweeps can resume, and the
//! exponent fits behind the scaling plots are plain least squares on
//! log-log data.

use std::collections::{BTreeMap, HashSet};
use std::io::{BufRead as _, Write as _};
use std::path::Path;
use std::sync::Arc;

use rayon::prelude::*;

use crate::constructions::{construct_flatten, construct_invert, predicted_bound};
use crate::energy::energy;
use crate::error::{Error, Result};
use crate::field::{Params, RadialField};
use crate::grid::make_grid;
use crate::minimize::minimize_seeded;

/// Slope wells: the admissible low-strain ranges of wp.
pub const WELL_UP: (f64, f64) = (0.5, 1.5);
pub const WELL_DOWN: (f64, f64) = (-1.5, -0.5);

fn in_well(p: f64) -> bool {
    (p > WELL_UP.0 && p < WELL_UP.1) || (p > WELL_DOWN.0 && p < WELL_DOWN.1)
}

/// Deformation regime decided from the computed minimizer.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    Cone,
    BoundaryLayer,
    Inversion,
}

impl std::fmt::Display for Regime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Regime::Cone => "cone",
            Regime::BoundaryLayer => "boundary-layer",
            Regime::Inversion => "inversion",
        };
        f.write_str(s)
    }
}

/// One sweep point: parameters, energies, and diagnostics.
#[derive(Clone, Debug, serde::Serialize, serde::Deserialize)]
pub struct SweepRecord {
    pub h: f64,
    pub delta: f64,
    pub cells: usize,
    pub seed: u64,
    pub e_min: Option<f64>,
    pub e_invert: Option<f64>,
    pub e_flatten: Option<f64>,
    pub bound: f64,
    pub tau: Option<f64>,
    pub regime: Option<Regime>,
    pub converged: bool,
    pub kkt: Option<f64>,
    pub diagnostics: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl SweepRecord {
    /// Resume key; two records collide exactly when every keyed input
    /// matches bit-for-bit.
    pub fn key(&self) -> String {
        sweep_key(self.h, self.delta, self.cells, self.seed)
    }
}

pub fn sweep_key(h: f64, delta: f64, cells: usize, seed: u64) -> String {
    format!("{h:.16e}|{delta:.16e}|{cells}|{seed}")
}

/// Largest radius at which the piecewise-linear slope leaves both wells;
/// 0 when wp stays inside a well on all of (0, 1].
pub fn well_exit_radius(field: &RadialField) -> f64 {
    let nodes = field.grid.nodes();
    for i in (0..nodes.len() - 1).rev() {
        let (a, b) = (nodes[i], nodes[i + 1]);
        let (p, q) = (field.wp[i], field.wp[i + 1]);
        if !in_well(q) {
            return b;
        }
        let same_up = p > WELL_UP.0 && q > WELL_UP.0 && p < WELL_UP.1;
        let same_down = p < WELL_DOWN.1 && q < WELL_DOWN.1 && p > WELL_DOWN.0;
        if same_up || same_down {
            // a linear segment with both ends in one well stays inside it
            continue;
        }
        // p is outside q's well (possibly in the other well, which still
        // forces a pass through the gap); the last outside point is the
        // crossing of the well boundary nearest p on q's side
        let t = if q > WELL_UP.0 {
            if p <= WELL_UP.0 {
                WELL_UP.0
            } else {
                WELL_UP.1
            }
        } else if p >= WELL_DOWN.1 {
            WELL_DOWN.1
        } else {
            WELL_DOWN.0
        };
        return a + (t - p) / (q - p) * (b - a);
    }
    0.0
}

/// Integral of the piecewise-quadratic 1 - wp^2 over [x0, x1] inside one
/// cell; Simpson is exact for quadratics.
fn cell_excess(field: &RadialField, i: usize, x0: f64, x1: f64) -> f64 {
    let nodes = field.grid.nodes();
    let (a, b) = (nodes[i], nodes[i + 1]);
    let lerp = |x: f64| {
        let s = (x - a) / (b - a);
        field.wp[i] + s * (field.wp[i + 1] - field.wp[i])
    };
    let q = |x: f64| 1.0 - lerp(x) * lerp(x);
    (x1 - x0) / 6.0 * (q(x0) + 4.0 * q(0.5 * (x0 + x1)) + q(x1))
}

/// Excess function g_a on I_a = [a, 2a]: the running integral of 1 - wp^2
/// started at a, shifted to zero trapezoid mean over the sample points.
/// Samples are the grid nodes inside the interval plus both endpoints.
pub fn excess_function(field: &RadialField, a: f64) -> Result<Vec<(f64, f64)>> {
    if !(a > 0.0 && a <= 0.5) {
        return Err(Error::InvalidParameter(format!(
            "excess radius must lie in (0, 1/2], got {a}"
        )));
    }
    let b = 2.0 * a;
    let nodes = field.grid.nodes();
    let mut xs = vec![a];
    for &r in nodes {
        if r > a && r < b {
            xs.push(r);
        }
    }
    xs.push(b);

    let mut out = Vec::with_capacity(xs.len());
    let mut acc = 0.0;
    let mut x_prev = a;
    let mut cell = nodes.partition_point(|&r| r <= a).saturating_sub(1);
    out.push((a, 0.0));
    for &x in &xs[1..] {
        // advance cell by cell, integrating exactly
        while nodes[cell + 1] < x {
            acc += cell_excess(field, cell, x_prev, nodes[cell + 1]);
            x_prev = nodes[cell + 1];
            cell += 1;
        }
        acc += cell_excess(field, cell, x_prev, x);
        x_prev = x;
        out.push((x, acc));
    }

    // zero mean under trapezoid weights on the samples
    let mut mass = 0.0;
    let mut mean = 0.0;
    for w in out.windows(2) {
        let dx = w[1].0 - w[0].0;
        mass += dx;
        mean += 0.5 * dx * (w[0].1 + w[1].1);
    }
    let c = -mean / mass;
    for p in &mut out {
        p.1 += c;
    }
    Ok(out)
}

/// L2 norm of piecewise-linear samples, exact for the linear interpolant.
fn pl_l2_norm(xs: &[f64], fs: &[f64]) -> f64 {
    let mut acc = 0.0;
    for i in 0..xs.len() - 1 {
        let (p, q) = (fs[i], fs[i + 1]);
        acc += (xs[i + 1] - xs[i]) * (p * p + p * q + q * q) / 3.0;
    }
    acc.max(0.0).sqrt()
}

/// Lemma-style oscillation ratio osc(f) / (|f|^{3/4} |f''|^{1/4} + |I|^{-1/2} |f|)
/// with L2 norms taken of the piecewise-linear interpolants of the samples.
pub fn oscillation_check(xs: &[f64], fs: &[f64], f2s: &[f64]) -> Result<f64> {
    if xs.len() < 2 || xs.len() != fs.len() || xs.len() != f2s.len() {
        return Err(Error::InvalidParameter(
            "oscillation check needs matched samples of length >= 2".into(),
        ));
    }
    let osc = fs.iter().fold(f64::NEG_INFINITY, |m, v| m.max(*v))
        - fs.iter().fold(f64::INFINITY, |m, v| m.min(*v));
    let nf = pl_l2_norm(xs, fs);
    let nf2 = pl_l2_norm(xs, f2s);
    let len = xs[xs.len() - 1] - xs[0];
    let denom = nf.powf(0.75) * nf2.powf(0.25) + nf / len.sqrt();
    if denom == 0.0 {
        if osc == 0.0 {
            return Ok(0.0);
        }
        return Err(Error::InvalidParameter(
            "zero norms with nonzero oscillation".into(),
        ));
    }
    Ok(osc / denom)
}

/// Regime label from the computed minimizer. `None` when unconverged.
pub fn classify_regime(
    params: &Params,
    field: &RadialField,
    tau: f64,
    converged: bool,
) -> Option<Regime> {
    if !converged {
        return None;
    }
    if params.delta <= params.h {
        return Some(Regime::Cone);
    }
    // every admissible slope exits the wells inside the core (wp(0) = 0
    // and the optimal transition lives at scale ~h), so the inversion
    // gate never probes below 2h
    let gate = (params.delta / 8.0).max(2.0 * params.h);
    if tau > gate {
        return Some(Regime::Inversion);
    }
    let upright = field
        .grid
        .nodes()
        .iter()
        .zip(&field.wp)
        .filter(|(&r, _)| r >= gate)
        .all(|(_, &p)| p > WELL_UP.0 && p < WELL_UP.1);
    if upright {
        Some(Regime::BoundaryLayer)
    } else {
        Some(Regime::Inversion)
    }
}

/// Least-squares fit of log(response) against log(predictor).
#[derive(Clone, Debug, serde::Serialize)]
pub struct ExponentFit {
    pub slope: f64,
    pub intercept: f64,
    pub stderr: f64,
    pub points: usize,
    pub axis: String,
}

pub fn fit_exponent(points: &[(f64, f64)], axis: &str) -> Result<ExponentFit> {
    if points.len() < 4 {
        return Err(Error::InvalidParameter(format!(
            "exponent fit needs >= 4 points, got {}",
            points.len()
        )));
    }
    for &(x, y) in points {
        if !(x > 0.0 && y > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "exponent fit needs positive data, got ({x}, {y})"
            )));
        }
    }
    let n = points.len() as f64;
    let logs: Vec<(f64, f64)> = points.iter().map(|&(x, y)| (x.ln(), y.ln())).collect();
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ssr: f64 = logs
        .iter()
        .map(|p| {
            let e = p.1 - (intercept + slope * p.0);
            e * e
        })
        .sum();
    let dof = (points.len() - 2).max(1) as f64;
    let stderr = (ssr / dof / sxx).sqrt();
    Ok(ExponentFit {
        slope,
        intercept,
        stderr,
        points: points.len(),
        axis: axis.to_string(),
    })
}

/// Shared knobs for one sweep point.
#[derive(Clone, Copy, Debug)]
pub struct SweepConfig {
    pub cells: usize,
    pub seed: u64,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            cells: 1024,
            seed: crate::minimize::DEFAULT_SEED,
            tol: 1e-8,
            max_iter: 6000,
        }
    }
}

/// Monitored diagnostics of a converged minimizer.
fn diagnostics(params: &Params, field: &RadialField, e_min: f64) -> BTreeMap<String, f64> {
    let mut map = BTreeMap::new();
    let nodes = field.grid.nodes();

    // whole-domain L2 of the well excess 1 - wp^2
    let fs: Vec<f64> = field.wp.iter().map(|p| 1.0 - p * p).collect();
    map.insert("one_minus_wp2_l2".into(), pl_l2_norm(nodes, &fs));

    // L1 of wp over the core [0, min(4h, 1)]
    let lim = (4.0 * params.h).min(1.0);
    let mut l1 = 0.0;
    for i in 0..nodes.len() - 1 {
        if nodes[i] >= lim {
            break;
        }
        let x1 = nodes[i + 1].min(lim);
        let s = (x1 - nodes[i]) / (nodes[i + 1] - nodes[i]);
        let q = field.wp[i] + s * (field.wp[i + 1] - field.wp[i]);
        l1 += 0.5 * (x1 - nodes[i]) * (field.wp[i].abs() + q.abs());
    }
    map.insert("wp_l1_core".into(), l1);

    // excess-function ratio |g_a| / (a^{1/2} E^{1/2}) at a = delta/4
    let a = params.delta / 4.0;
    if a > 0.0 && a <= 0.5 && e_min > 0.0 {
        if let Ok(g) = excess_function(field, a) {
            let xs: Vec<f64> = g.iter().map(|p| p.0).collect();
            let gs: Vec<f64> = g.iter().map(|p| p.1).collect();
            let ratio = pl_l2_norm(&xs, &gs) / (a.sqrt() * e_min.sqrt());
            map.insert("excess_ratio".into(), ratio);

            // oscillation ratio of g_a; g'' = -2 wp wp' from cell slopes
            let mut f2 = vec![0.0; xs.len()];
            for (k, &x) in xs.iter().enumerate() {
                let i = nodes
                    .partition_point(|&r| r <= x)
                    .saturating_sub(1)
                    .min(nodes.len() - 2);
                let slope = (field.wp[i + 1] - field.wp[i]) / (nodes[i + 1] - nodes[i]);
                let s = (x - nodes[i]) / (nodes[i + 1] - nodes[i]);
                let p = field.wp[i] + s * (field.wp[i + 1] - field.wp[i]);
                f2[k] = -2.0 * p * slope;
            }
            if let Ok(r) = oscillation_check(&xs, &gs, &f2) {
                map.insert("oscillation_ratio".into(), r);
            }
        }
    }
    map
}

/// Runs constructions, minimizer, and diagnostics at one parameter point.
/// Failures land in the record's `error` field; the function never panics
/// on numerical trouble.
pub fn sweep_point(h: f64, delta: f64, cfg: &SweepConfig) -> SweepRecord {
    let mut rec = SweepRecord {
        h,
        delta,
        cells: cfg.cells,
        seed: cfg.seed,
        e_min: None,
        e_invert: None,
        e_flatten: None,
        bound: f64::NAN,
        tau: None,
        regime: None,
        converged: false,
        kkt: None,
        diagnostics: BTreeMap::new(),
        error: None,
    };
    let params = match Params::new(h, delta) {
        Ok(p) => p,
        Err(e) => {
            rec.error = Some(e.to_string());
            return rec;
        }
    };
    rec.bound = predicted_bound(&params);
    let grid = match make_grid(cfg.cells, h) {
        Ok(g) => Arc::new(g),
        Err(e) => {
            rec.error = Some(e.to_string());
            return rec;
        }
    };

    if let Ok(f) = construct_flatten(&params, grid.clone()) {
        rec.e_flatten = energy(&f, &params).ok().map(|b| b.total);
    }
    if h <= delta {
        if let Ok(f) = construct_invert(&params, grid.clone()) {
            rec.e_invert = energy(&f, &params).ok().map(|b| b.total);
        }
    }

    match minimize_seeded(&params, grid, cfg.tol, cfg.max_iter, cfg.seed) {
        Ok(res) => {
            rec.e_min = Some(res.breakdown.total);
            rec.kkt = Some(res.kkt_residual);
            rec.converged = res.converged;
            let tau = well_exit_radius(&res.field);
            rec.tau = Some(tau);
            rec.regime = classify_regime(&params, &res.field, tau, res.converged);
            rec.diagnostics = diagnostics(&params, &res.field, res.breakdown.total);
        }
        Err(e) => rec.error = Some(e.to_string()),
    }
    rec
}

/// Full cartesian sweep; points already in `skip` (by key) are not rerun.
/// Points run in parallel; the output preserves input order.
pub fn sweep(
    h_list: &[f64],
    delta_list: &[f64],
    cfg: &SweepConfig,
    skip: &HashSet<String>,
) -> Vec<SweepRecord> {
    let mut points = Vec::new();
    for &h in h_list {
        for &d in delta_list {
            if !skip.contains(&sweep_key(h, d, cfg.cells, cfg.seed)) {
                points.push((h, d));
            }
        }
    }
    points
        .into_par_iter()
        .map(|(h, d)| sweep_point(h, d, cfg))
        .collect()
}

/// Reads a JSON-lines sweep file; blank lines are skipped.
pub fn read_records(path: &Path) -> Result<Vec<SweepRecord>> {
    let file = match std::fs::File::open(path) {
        Ok(f) => f,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(e) => return Err(e.into()),
    };
    let mut out = Vec::new();
    for line in std::io::BufReader::new(file).lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line)?);
    }
    Ok(out)
}

/// Appends records as JSON lines.
pub fn append_records(path: &Path, records: &[SweepRecord]) -> Result<()> {
    let mut file = std::fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)?;
    for r in records {
        serde_json::to_writer(&mut file, r)?;
        file.write_all(b"\n")?;
    }
    Ok(())
}

fn csv_opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| format!("{x:.16e}"))
}

/// Summary table of a record set.
pub fn summary_csv(records: &[SweepRecord]) -> String {
    let mut out = String::from("h,delta,e_min,e_invert,e_flatten,bound,tau,regime\n");
    for r in records {
        out.push_str(&format!(
            "{:.16e},{:.16e},{},{},{},{:.16e},{},{}\n",
            r.h,
            r.delta,
            csv_opt(r.e_min),
            csv_opt(r.e_invert),
            csv_opt(r.e_flatten),
            r.bound,
            csv_opt(r.tau),
            r.regime.map_or_else(String::new, |g| g.to_string()),
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{make_grid, Grid};
    use approx::assert_relative_eq;

    fn grid(n: usize, h: f64) -> Arc<Grid> {
        Arc::new(make_grid(n, h).unwrap())
    }

    fn uniform_field(n: usize, wp: impl Fn(f64) -> f64) -> RadialField {
        let nodes: Vec<f64> = (0..=n).map(|i| i as f64 / n as f64).collect();
        let g = Arc::new(Grid::from_nodes(nodes).unwrap());
        let mut f = RadialField::zeros(g.clone());
        for (i, &r) in g.nodes().iter().enumerate() {
            f.wp[i] = wp(r);
        }
        f
    }

    #[test]
    fn well_exit_of_plain_profiles() {
        let cone = uniform_field(64, |_| 1.0);
        assert_eq!(well_exit_radius(&cone), 0.0);

        let step = uniform_field(200, |r| if r <= 0.3 { 0.0 } else { 1.0 });
        let tau = well_exit_radius(&step);
        assert!((tau - 0.3).abs() <= 1.0 / 200.0, "tau = {tau}");

        let inverted = uniform_field(64, |_| -1.0);
        assert_eq!(well_exit_radius(&inverted), 0.0);

        // sign change forces a pass through the gap even with endpoints in wells
        let flip = uniform_field(64, |r| if r < 0.5 { -1.0 } else { 1.0 });
        let tau = well_exit_radius(&flip);
        assert!(tau > 0.4 && tau < 0.6, "tau = {tau}");
    }

    #[test]
    fn excess_of_constant_profiles() {
        let cone = uniform_field(128, |_| 1.0);
        for (_, g) in excess_function(&cone, 0.25).unwrap() {
            assert!(g.abs() <= 1e-15);
        }

        let flat = uniform_field(128, |_| 0.0);
        let a = 0.25;
        for (r, g) in excess_function(&flat, a).unwrap() {
            assert_relative_eq!(g, (r - a) - a / 2.0, epsilon = 1e-13);
        }
    }

    #[test]
    fn oscillation_ratio_reference_values() {
        let n = 2001;
        let xs: Vec<f64> = (0..n).map(|i| i as f64 / (n - 1) as f64).collect();

        let fs = vec![3.25; n];
        let f2 = vec![0.0; n];
        assert_eq!(oscillation_check(&xs, &fs, &f2).unwrap(), 0.0);

        // zero-mean linear on [0,1]: osc * |I|^{1/2} / |f| = 2 sqrt(3)
        let fs: Vec<f64> = xs.iter().map(|x| x - 0.5).collect();
        let ratio = oscillation_check(&xs, &fs, &f2).unwrap();
        assert_relative_eq!(ratio, 2.0 * 3.0_f64.sqrt(), max_relative = 1e-12);

        // sines of increasing frequency share one bound
        let mut worst = 0.0f64;
        for k in [1.0, 2.0, 4.0, 8.0] {
            let xs: Vec<f64> = (0..n)
                .map(|i| 2.0 * std::f64::consts::PI * i as f64 / (n - 1) as f64)
                .collect();
            let fs: Vec<f64> = xs.iter().map(|x| (k * x).sin()).collect();
            let f2: Vec<f64> = xs.iter().map(|x| -k * k * (k * x).sin()).collect();
            worst = worst.max(oscillation_check(&xs, &fs, &f2).unwrap());
        }
        assert!(worst <= 2.0, "sine ratios reached {worst}");
    }

    #[test]
    fn exponent_fit_recovers_pure_power() {
        let pts: Vec<(f64, f64)> = (1..=6)
            .map(|i| {
                let x = 10.0_f64.powi(-i);
                (x, x.powf(1.5))
            })
            .collect();
        let fit = fit_exponent(&pts, "h").unwrap();
        assert_relative_eq!(fit.slope, 1.5, max_relative = 1e-12);
        assert!(fit.stderr <= 1e-10);
        assert!(fit_exponent(&pts[..3], "h").is_err());
        assert!(fit_exponent(&[(0.1, 0.0), (0.2, 1.0), (0.3, 1.0), (0.4, 1.0)], "h").is_err());
    }

    #[test]
    fn cone_rule_classifies_without_looking_at_the_field() {
        let params = Params::new(1e-3, 1e-4).unwrap();
        let f = RadialField::zeros(grid(64, 1e-3));
        assert_eq!(
            classify_regime(&params, &f, 0.9, true),
            Some(Regime::Cone)
        );
        assert_eq!(classify_regime(&params, &f, 0.9, false), None);
    }

    #[test]
    fn deep_indentation_classifies_as_inversion() {
        let cfg = SweepConfig {
            cells: 1024,
            ..SweepConfig::default()
        };
        let rec = sweep_point(1e-3, 0.5, &cfg);
        assert!(rec.error.is_none());
        assert!(rec.converged);
        assert_eq!(rec.regime, Some(Regime::Inversion));
        let tau = rec.tau.unwrap();
        assert!(
            tau >= 0.5 / 8.0 && tau <= 0.5,
            "inverted well exit at {tau}"
        );
        // dominance over both constructions
        let ceiling = rec.e_invert.unwrap().min(rec.e_flatten.unwrap());
        assert!(rec.e_min.unwrap() <= ceiling + 1e-8 * ceiling);
    }

    #[test]
    fn shallow_indentation_classifies_as_boundary_layer() {
        let cfg = SweepConfig {
            cells: 1024,
            ..SweepConfig::default()
        };
        let rec = sweep_point(1e-4, 5e-4, &cfg);
        assert!(rec.error.is_none());
        assert!(rec.converged);
        assert_eq!(rec.regime, Some(Regime::BoundaryLayer));
    }

    #[test]
    fn sweep_replicates_single_minimize() {
        let cfg = SweepConfig {
            cells: 256,
            ..SweepConfig::default()
        };
        let recs = sweep(&[0.05], &[0.4], &cfg, &HashSet::new());
        assert_eq!(recs.len(), 1);
        let params = Params::new(0.05, 0.4).unwrap();
        let direct =
            minimize_seeded(&params, grid(256, 0.05), cfg.tol, cfg.max_iter, cfg.seed).unwrap();
        assert_eq!(recs[0].e_min.unwrap(), direct.breakdown.total);
    }

    #[test]
    fn sweep_counts_and_resume_roundtrip() {
        let cfg = SweepConfig {
            cells: 128,
            tol: 1e-7,
            max_iter: 2000,
            ..SweepConfig::default()
        };
        let hs = [0.05, 0.1];
        let ds = [0.0, 0.4];
        let recs = sweep(&hs, &ds, &cfg, &HashSet::new());
        assert_eq!(recs.len(), 4);

        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sweep.jsonl");
        append_records(&path, &recs[..2]).unwrap();
        let loaded = read_records(&path).unwrap();
        assert_eq!(loaded.len(), 2);
        let done: HashSet<String> = loaded.iter().map(|r| r.key()).collect();
        let rest = sweep(&hs, &ds, &cfg, &done);
        assert_eq!(rest.len(), 2);
        append_records(&path, &rest).unwrap();
        let all = read_records(&path).unwrap();
        assert_eq!(all.len(), 4);
        let keys: HashSet<String> = all.iter().map(|r| r.key()).collect();
        assert_eq!(keys.len(), 4);

        let csv = summary_csv(&all);
        assert_eq!(csv.lines().count(), 5);
        assert!(csv.starts_with("h,delta,e_min,e_invert,e_flatten,bound,tau,regime"));
    }

    #[test]
    fn energy_grows_with_indentation_depth() {
        let cfg = SweepConfig {
            cells: 512,
            ..SweepConfig::default()
        };
        let recs = sweep(&[5e-3], &[0.2, 0.4, 0.6, 0.8], &cfg, &HashSet::new());
        let es: Vec<f64> = recs.iter().map(|r| r.e_min.unwrap()).collect();
        for w in es.windows(2) {
            assert!(
                w[1] >= w[0] * (1.0 - 1e-6),
                "energy decreased with depth: {} -> {}",
                w[0],
                w[1]
            );
        }
    }
}
