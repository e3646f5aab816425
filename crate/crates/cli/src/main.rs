//! Command-line front end for the indented-cone energy library.
//!
//! Six subcommands cover the workflow: `evaluate` prices a stored field,
//! `construct` emits a reference field, `minimize` searches for the energy
//! minimum at one parameter point, `pyramid` prices the symmetry-broken
//! construction, `sweep` runs resumable parameter grids, and `diagnose`
//! summarizes a sweep corpus with exponent fits and regime counts.
//!
//! Exit codes: 0 on success; 2 when a flag or input violates a documented
//! precondition (the message names it); 1 on numerical failure, with the
//! partial record still written. All files are UTF-8 and every float is
//! serialized with 17 significant digits.

use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde_json::{json, Value};

use vkcone::{
    construct_flatten, construct_invert, energy, fit_exponent, make_grid, minimize_seeded,
    read_records, summary_csv, sweep, sweep_key, Error, Params, PyramidAssembly, PyramidOptions,
    QuadOptions, RadialField, SweepConfig, SweepRecord, DEFAULT_SEED,
};

#[derive(Parser)]
#[command(
    name = "vkcone",
    version,
    about = "Indented-cone elastic energy: evaluate, construct, minimize, sweep",
    long_about = None
)]
struct Cli {
    /// Worker threads for sweep and pyramid; other commands run on one
    /// thread. Defaults to the available parallelism.
    #[arg(long, global = true)]
    jobs: Option<usize>,

    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Evaluate the energy of a field CSV at thickness h; prints the
    /// breakdown as JSON on standard output
    Evaluate(EvaluateArgs),
    /// Emit a reference construction as a field CSV (r,u,w,wp)
    Construct(ConstructArgs),
    /// Minimize the energy at one (h, delta) point; prints the result as
    /// JSON and writes the minimizing field as CSV
    Minimize(MinimizeArgs),
    /// Price the pyramid construction; prints the per-patch breakdown as
    /// JSON and writes a sampled deflection grid as CSV
    Pyramid(PyramidArgs),
    /// Run an (h, delta) sweep; appends JSON-lines records and rewrites
    /// the summary CSV. With --resume, already-recorded keys are skipped
    Sweep(SweepArgs),
    /// Summarize a sweep corpus: exponent fits, regime counts, and the
    /// monitored diagnostic ratios
    Diagnose(DiagnoseArgs),
}

#[derive(clap::Args)]
struct EvaluateArgs {
    /// Field CSV with columns r,u,w,wp
    #[arg(long)]
    field: PathBuf,
    /// Dimensionless thickness, in (0, 1/2]
    #[arg(long)]
    h: f64,
    /// Indentation depth, in [0, 1]; echoed only, the energy needs h
    #[arg(long, default_value_t = 0.0)]
    delta: f64,
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    /// Inverted-cap construction (needs h <= delta)
    Invert,
    /// Flattened-rim construction
    Flatten,
}

#[derive(clap::Args)]
struct ConstructArgs {
    /// Which reference construction to build
    #[arg(long, value_enum)]
    kind: KindArg,
    /// Dimensionless thickness, in (0, 1/2]
    #[arg(long)]
    h: f64,
    /// Indentation depth, in [0, 1]
    #[arg(long)]
    delta: f64,
    /// Grid cells (>= 16)
    #[arg(long, default_value_t = 1024)]
    cells: usize,
    /// Output path; standard output when omitted
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(clap::Args)]
struct MinimizeArgs {
    /// Dimensionless thickness, in (0, 1/2]
    #[arg(long)]
    h: f64,
    /// Indentation depth, in [0, 1]
    #[arg(long)]
    delta: f64,
    /// Grid cells (>= 16)
    #[arg(long, default_value_t = 1024)]
    cells: usize,
    /// Gradient tolerance, relative to max(1, |E|)
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    /// Iteration cap per start
    #[arg(long = "max-iter", default_value_t = 6000)]
    max_iter: usize,
    /// Seed for the randomized starts
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Also write the result JSON here
    #[arg(long)]
    out: Option<PathBuf>,
    /// Where to write the minimizing field CSV
    #[arg(long = "field-out", default_value = "field.csv")]
    field_out: PathBuf,
}

#[derive(clap::Args)]
struct PyramidArgs {
    /// Dimensionless thickness, in (0, 1/16)
    #[arg(long)]
    h: f64,
    /// Gauss-Legendre points per quadrature panel (>= 2)
    #[arg(long = "quad-points", default_value_t = 8)]
    quad_points: usize,
    /// Mesh halvings used to assess quadrature convergence
    #[arg(long, default_value_t = 1)]
    refine: usize,
    /// Also write the result JSON here
    #[arg(long)]
    out: Option<PathBuf>,
    /// Where to write the sampled deflection CSV (512x512 on [-1,1]^2)
    #[arg(long = "field-out", default_value = "pyramid_w.csv")]
    field_out: PathBuf,
}

#[derive(clap::Args)]
struct SweepArgs {
    /// Flat key=value config file; flags override its entries
    #[arg(long)]
    config: Option<PathBuf>,
    /// Thickness list, comma-separated
    #[arg(long, value_delimiter = ',')]
    h: Vec<f64>,
    /// Indentation list, comma-separated
    #[arg(long, value_delimiter = ',')]
    delta: Vec<f64>,
    /// Grid cells (>= 16) [default: 1024]
    #[arg(long)]
    cells: Option<usize>,
    /// Seed for the randomized starts [default: 24301]
    #[arg(long)]
    seed: Option<u64>,
    /// Gradient tolerance [default: 1e-8]
    #[arg(long)]
    tol: Option<f64>,
    /// Iteration cap per start [default: 6000]
    #[arg(long = "max-iter")]
    max_iter: Option<usize>,
    /// Records file, JSON lines, appended [default: sweep.jsonl]
    #[arg(long)]
    out: Option<PathBuf>,
    /// Summary table, rewritten from all records [default: sweep_summary.csv]
    #[arg(long)]
    summary: Option<PathBuf>,
    /// Skip (h, delta, cells, seed) keys already present in the records file
    #[arg(long)]
    resume: bool,
}

#[derive(clap::Args)]
struct DiagnoseArgs {
    /// Records file written by sweep (JSON lines)
    #[arg(long)]
    records: PathBuf,
}

/// A failed run: validation errors name the violated precondition and
/// exit 2; numerical errors exit 1 after persisting what was computed.
enum Failure {
    Validation(String),
    Numerical(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Failure {
        match e {
            Error::InvalidParameter(_) | Error::BoundaryLayer(_) | Error::Parse(_) => {
                Failure::Validation(e.to_string())
            }
            _ => Failure::Numerical(e.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    // parallelism stays confined to sweep and pyramid patch evaluation
    let threads = match cli.command {
        Cmd::Sweep(_) | Cmd::Pyramid(_) => cli.jobs.unwrap_or(0),
        _ => 1,
    };
    if rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .is_err()
    {
        eprintln!("error: could not size the worker pool");
        return ExitCode::from(1);
    }
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Validation(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Numerical(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

fn run(cmd: Cmd) -> Result<(), Failure> {
    match cmd {
        Cmd::Evaluate(a) => cmd_evaluate(a),
        Cmd::Construct(a) => cmd_construct(a),
        Cmd::Minimize(a) => cmd_minimize(a),
        Cmd::Pyramid(a) => cmd_pyramid(a),
        Cmd::Sweep(a) => cmd_sweep(a),
        Cmd::Diagnose(a) => cmd_diagnose(a),
    }
}

// ---------------------------------------------------------------- output

/// Serializes a JSON value with every float at 17 significant digits.
/// Integers stay integers; object keys come out sorted.
fn json_17(v: &Value) -> String {
    let mut out = String::new();
    fmt_value(v, &mut out);
    out
}

fn fmt_value(v: &Value, out: &mut String) {
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => {
            let _ = write!(out, "{b}");
        }
        Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                let _ = write!(out, "{i}");
            } else if let Some(u) = n.as_u64() {
                let _ = write!(out, "{u}");
            } else {
                let _ = write!(out, "{:.16e}", n.as_f64().unwrap_or(f64::NAN));
            }
        }
        Value::String(s) => {
            out.push_str(&serde_json::to_string(s).expect("string serializes"));
        }
        Value::Array(items) => {
            out.push('[');
            for (k, item) in items.iter().enumerate() {
                if k > 0 {
                    out.push(',');
                }
                fmt_value(item, out);
            }
            out.push(']');
        }
        Value::Object(map) => {
            out.push('{');
            for (k, (key, item)) in map.iter().enumerate() {
                if k > 0 {
                    out.push(',');
                }
                out.push_str(&serde_json::to_string(key).expect("key serializes"));
                out.push(':');
                fmt_value(item, out);
            }
            out.push('}');
        }
    }
}

fn to_value<T: serde::Serialize>(t: &T) -> Result<Value, Failure> {
    serde_json::to_value(t).map_err(|e| Failure::Numerical(format!("serialization: {e}")))
}

fn read_input(path: &Path, what: &str) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| {
        Failure::Validation(format!(
            "{what} must name a readable file, got {}: {e}",
            path.display()
        ))
    })
}

fn write_output(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text)
        .map_err(|e| Failure::Numerical(format!("writing {}: {e}", path.display())))
}

// -------------------------------------------------------------- evaluate

fn cmd_evaluate(a: EvaluateArgs) -> Result<(), Failure> {
    let params = Params::new(a.h, a.delta)?;
    let text = read_input(&a.field, "--field")?;
    let field = RadialField::from_csv(&text)?;
    let breakdown = energy(&field, &params)?;
    println!("{}", json_17(&to_value(&breakdown)?));
    Ok(())
}

// ------------------------------------------------------------- construct

fn cmd_construct(a: ConstructArgs) -> Result<(), Failure> {
    let params = Params::new(a.h, a.delta)?;
    let grid = Arc::new(make_grid(a.cells, a.h)?);
    let field = match a.kind {
        KindArg::Invert => construct_invert(&params, grid)?,
        KindArg::Flatten => construct_flatten(&params, grid)?,
    };
    let csv = field.to_csv();
    match &a.out {
        Some(path) => write_output(path, &csv)?,
        None => print!("{csv}"),
    }
    Ok(())
}

// -------------------------------------------------------------- minimize

fn cmd_minimize(a: MinimizeArgs) -> Result<(), Failure> {
    let params = Params::new(a.h, a.delta)?;
    let grid = Arc::new(make_grid(a.cells, a.h)?);
    if !(a.tol.is_finite() && a.tol > 0.0) {
        return Err(Failure::Validation(format!(
            "--tol must be a positive finite number, got {}",
            a.tol
        )));
    }
    if a.max_iter == 0 {
        return Err(Failure::Validation("--max-iter must be at least 1".into()));
    }

    match minimize_seeded(&params, grid, a.tol, a.max_iter, a.seed) {
        Ok(res) => {
            write_output(&a.field_out, &res.field.to_csv())?;
            let mut v = to_value(&res)?;
            if let Value::Object(map) = &mut v {
                map.insert("h".into(), json!(a.h));
                map.insert("delta".into(), json!(a.delta));
                map.insert("cells".into(), json!(a.cells));
                map.insert("tol".into(), json!(a.tol));
                map.insert("max_iter".into(), json!(a.max_iter));
                map.insert(
                    "field_csv".into(),
                    json!(a.field_out.display().to_string()),
                );
            }
            let text = json_17(&v);
            println!("{text}");
            if let Some(path) = &a.out {
                write_output(path, &(text + "\n"))?;
            }
            Ok(())
        }
        Err(e) => {
            let failure = Failure::from(e);
            if let Failure::Numerical(msg) = &failure {
                let partial = json!({
                    "h": a.h, "delta": a.delta, "cells": a.cells,
                    "tol": a.tol, "max_iter": a.max_iter, "seed": a.seed,
                    "error": msg,
                });
                let text = json_17(&partial);
                println!("{text}");
                if let Some(path) = &a.out {
                    let _ = fs::write(path, text + "\n");
                }
            }
            Err(failure)
        }
    }
}

// --------------------------------------------------------------- pyramid

const PYRAMID_SAMPLES: usize = 512;

fn cmd_pyramid(a: PyramidArgs) -> Result<(), Failure> {
    if a.quad_points < 2 {
        return Err(Failure::Validation(format!(
            "--quad-points must be at least 2, got {}",
            a.quad_points
        )));
    }
    let assembly = PyramidAssembly::assemble(a.h)?;

    // sampled deflection grid first, so a quadrature failure still
    // leaves the field on disk next to the partial record
    let n = PYRAMID_SAMPLES;
    let coord = |k: usize| -1.0 + 2.0 * k as f64 / (n - 1) as f64;
    let rows: Vec<String> = (0..n)
        .into_par_iter()
        .map(|j| {
            let x2 = coord(j);
            let mut line = String::with_capacity(72 * n);
            for i in 0..n {
                let x1 = coord(i);
                let w = assembly.w([x1, x2]);
                let _ = writeln!(line, "{x1:.16e},{x2:.16e},{w:.16e}");
            }
            line
        })
        .collect();
    let mut csv = String::from("x1,x2,w\n");
    csv.extend(rows);
    write_output(&a.field_out, &csv)?;

    let opts = PyramidOptions {
        quad: QuadOptions {
            points: a.quad_points,
            refine: a.refine,
        },
    };
    match assembly.energy(&opts) {
        Ok(report) => {
            let mut v = to_value(&report)?;
            if let Value::Object(map) = &mut v {
                map.insert("quad_points".into(), json!(a.quad_points));
                map.insert("refine".into(), json!(a.refine));
                map.insert(
                    "field_csv".into(),
                    json!(a.field_out.display().to_string()),
                );
            }
            let text = json_17(&v);
            println!("{text}");
            if let Some(path) = &a.out {
                write_output(path, &(text + "\n"))?;
            }
            Ok(())
        }
        Err(e) => {
            let failure = Failure::from(e);
            if let Failure::Numerical(msg) = &failure {
                let partial = json!({
                    "h": a.h, "quad_points": a.quad_points, "refine": a.refine,
                    "field_csv": a.field_out.display().to_string(),
                    "error": msg,
                });
                let text = json_17(&partial);
                println!("{text}");
                if let Some(path) = &a.out {
                    let _ = fs::write(path, text + "\n");
                }
            }
            Err(failure)
        }
    }
}

// ----------------------------------------------------------------- sweep

struct SweepSettings {
    h: Vec<f64>,
    delta: Vec<f64>,
    cells: usize,
    seed: u64,
    tol: f64,
    max_iter: usize,
    out: PathBuf,
    summary: PathBuf,
    resume: bool,
}

impl Default for SweepSettings {
    fn default() -> Self {
        let cfg = SweepConfig::default();
        SweepSettings {
            h: Vec::new(),
            delta: Vec::new(),
            cells: cfg.cells,
            seed: cfg.seed,
            tol: cfg.tol,
            max_iter: cfg.max_iter,
            out: PathBuf::from("sweep.jsonl"),
            summary: PathBuf::from("sweep_summary.csv"),
            resume: false,
        }
    }
}

fn parse_f64_list(text: &str, key: &str) -> Result<Vec<f64>, Failure> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<f64>().map_err(|_| {
                Failure::Validation(format!("config key `{key}` has a non-numeric entry `{s}`"))
            })
        })
        .collect()
}

fn parse_scalar<T: std::str::FromStr>(text: &str, key: &str) -> Result<T, Failure> {
    text.trim().parse::<T>().map_err(|_| {
        Failure::Validation(format!("config key `{key}` has an unparsable value `{text}`"))
    })
}

/// Flat key=value config: one pair per line, `#` starts a comment,
/// lists are comma-separated. Unknown keys are rejected.
fn apply_config(settings: &mut SweepSettings, path: &Path) -> Result<(), Failure> {
    let text = read_input(path, "--config")?;
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            Failure::Validation(format!(
                "config line {} is not key = value: `{raw}`",
                lineno + 1
            ))
        })?;
        let (key, value) = (key.trim(), value.trim());
        match key {
            "h" => settings.h = parse_f64_list(value, key)?,
            "delta" => settings.delta = parse_f64_list(value, key)?,
            "cells" => settings.cells = parse_scalar(value, key)?,
            "seed" => settings.seed = parse_scalar(value, key)?,
            "tol" => settings.tol = parse_scalar(value, key)?,
            "max_iter" => settings.max_iter = parse_scalar(value, key)?,
            "out" => settings.out = PathBuf::from(value),
            "summary" => settings.summary = PathBuf::from(value),
            "resume" => settings.resume = parse_scalar::<bool>(value, key)?,
            other => {
                return Err(Failure::Validation(format!(
                    "unknown config key `{other}`; known keys: h, delta, cells, \
                     seed, tol, max_iter, out, summary, resume"
                )))
            }
        }
    }
    Ok(())
}

fn cmd_sweep(a: SweepArgs) -> Result<(), Failure> {
    let mut s = SweepSettings::default();
    if let Some(path) = &a.config {
        apply_config(&mut s, path)?;
    }
    // flags override the config file
    if !a.h.is_empty() {
        s.h = a.h.clone();
    }
    if !a.delta.is_empty() {
        s.delta = a.delta.clone();
    }
    if let Some(v) = a.cells {
        s.cells = v;
    }
    if let Some(v) = a.seed {
        s.seed = v;
    }
    if let Some(v) = a.tol {
        s.tol = v;
    }
    if let Some(v) = a.max_iter {
        s.max_iter = v;
    }
    if let Some(v) = &a.out {
        s.out = v.clone();
    }
    if let Some(v) = &a.summary {
        s.summary = v.clone();
    }
    s.resume |= a.resume;

    if s.h.is_empty() {
        return Err(Failure::Validation(
            "sweep needs at least one thickness (flag --h or config key h)".into(),
        ));
    }
    if s.delta.is_empty() {
        return Err(Failure::Validation(
            "sweep needs at least one indentation (flag --delta or config key delta)".into(),
        ));
    }
    if !(s.tol.is_finite() && s.tol > 0.0) {
        return Err(Failure::Validation(format!(
            "tol must be a positive finite number, got {}",
            s.tol
        )));
    }
    if s.max_iter == 0 {
        return Err(Failure::Validation("max_iter must be at least 1".into()));
    }
    // validate the full grid of points before any work is dispatched
    for &h in &s.h {
        make_grid(s.cells, h)?;
        for &d in &s.delta {
            Params::new(h, d)?;
        }
    }

    let mut skip = HashSet::new();
    if s.resume && s.out.exists() {
        for rec in read_records(&s.out)? {
            skip.insert(rec.key());
        }
    }
    let requested = s.h.len() * s.delta.len();
    let cfg = SweepConfig {
        cells: s.cells,
        seed: s.seed,
        tol: s.tol,
        max_iter: s.max_iter,
    };
    let records = sweep(&s.h, &s.delta, &cfg, &skip);

    // persist before judging success so failed points keep their record
    let mut lines = String::new();
    for rec in &records {
        lines.push_str(&json_17(&to_value(rec)?));
        lines.push('\n');
    }
    append_file(&s.out, &lines)?;
    let all = read_records(&s.out)?;
    write_output(&s.summary, &summary_csv(&all))?;

    let skipped = s
        .h
        .iter()
        .flat_map(|&h| s.delta.iter().map(move |&d| (h, d)))
        .filter(|&(h, d)| skip.contains(&sweep_key(h, d, s.cells, s.seed)))
        .count();
    let failed: Vec<String> = records
        .iter()
        .filter_map(|r| r.error.as_ref().map(|e| format!("({}, {}): {e}", r.h, r.delta)))
        .collect();
    let report = json!({
        "points_requested": requested,
        "points_run": records.len(),
        "points_skipped": skipped,
        "points_failed": failed.len(),
        "records": s.out.display().to_string(),
        "summary": s.summary.display().to_string(),
    });
    println!("{}", json_17(&report));

    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::Numerical(format!(
            "{} sweep point(s) failed, records kept in {}: {}",
            failed.len(),
            s.out.display(),
            failed.join("; ")
        )))
    }
}

fn append_file(path: &Path, text: &str) -> Result<(), Failure> {
    use std::io::Write as _;
    let mut file = fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .map_err(|e| Failure::Numerical(format!("opening {}: {e}", path.display())))?;
    file.write_all(text.as_bytes())
        .map_err(|e| Failure::Numerical(format!("writing {}: {e}", path.display())))
}

// -------------------------------------------------------------- diagnose

/// Groups f64 keys bit-exactly; sweep keys are reproduced verbatim so
/// records from the same run always coalesce.
fn group_by<F: Fn(&SweepRecord) -> f64>(
    records: &[SweepRecord],
    key: F,
) -> BTreeMap<u64, (f64, Vec<SweepRecord>)> {
    let mut map: BTreeMap<u64, (f64, Vec<SweepRecord>)> = BTreeMap::new();
    for r in records {
        let k = key(r);
        map.entry(k.to_bits())
            .or_insert_with(|| (k, Vec::new()))
            .1
            .push(r.clone());
    }
    map
}

fn cmd_diagnose(a: DiagnoseArgs) -> Result<(), Failure> {
    if !a.records.exists() {
        return Err(Failure::Validation(format!(
            "--records must name an existing sweep file, got {}",
            a.records.display()
        )));
    }
    let records = read_records(&a.records)?;
    if records.is_empty() {
        return Err(Failure::Validation(format!(
            "records file {} has no entries",
            a.records.display()
        )));
    }

    let mut regimes: BTreeMap<String, usize> = BTreeMap::new();
    let mut max_ratio: BTreeMap<String, f64> = BTreeMap::new();
    let mut converged = 0usize;
    let mut errors = 0usize;
    for r in &records {
        if let Some(g) = r.regime {
            *regimes.entry(g.to_string()).or_insert(0) += 1;
        }
        converged += usize::from(r.converged);
        errors += usize::from(r.error.is_some());
        for (name, value) in &r.diagnostics {
            let slot = max_ratio.entry(name.clone()).or_insert(f64::NEG_INFINITY);
            if *value > *slot {
                *slot = *value;
            }
        }
    }

    // e_min vs h at fixed delta
    let mut fits_vs_h = Vec::new();
    for (_, (delta, group)) in group_by(&records, |r| r.delta) {
        let pts: Vec<(f64, f64)> = group
            .iter()
            .filter_map(|r| r.e_min.map(|e| (r.h, e)))
            .filter(|&(_, e)| e > 0.0)
            .collect();
        if let Ok(fit) = fit_exponent(&pts, "h") {
            let mut v = to_value(&fit)?;
            if let Value::Object(map) = &mut v {
                map.insert("delta".into(), json!(delta));
            }
            fits_vs_h.push(v);
        }
    }

    // indentation excess e_min(delta) - e_min(0) vs delta at fixed h,
    // available only when the group carries its own delta = 0 anchor
    let mut excess_fits = Vec::new();
    for (_, (h, group)) in group_by(&records, |r| r.h) {
        let base = group
            .iter()
            .find(|r| r.delta == 0.0)
            .and_then(|r| r.e_min);
        let Some(base) = base else { continue };
        let pts: Vec<(f64, f64)> = group
            .iter()
            .filter(|r| r.delta > 0.0)
            .filter_map(|r| r.e_min.map(|e| (r.delta, e - base)))
            .filter(|&(_, e)| e > 0.0)
            .collect();
        if let Ok(fit) = fit_exponent(&pts, "delta") {
            let mut v = to_value(&fit)?;
            if let Value::Object(map) = &mut v {
                map.insert("h".into(), json!(h));
            }
            excess_fits.push(v);
        }
    }

    let report = json!({
        "records": records.len(),
        "converged": converged,
        "errors": errors,
        "regimes": regimes,
        "max_diagnostics": max_ratio,
        "fits_vs_h": fits_vs_h,
        "excess_fits_vs_delta": excess_fits,
    });
    println!("{}", json_17(&report));
    Ok(())
}
