use std::f64::consts::PI;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use vfe_core::algebraic::{build_polygon, closure_residual, RationalTime, SkewPolygon};
use vfe_core::analysis::{
    affine_fit, compare_tangent_midpoints, compare_trajectories, fit_center_speed, holder_exponent,
    phi_uniform_grid, z_normalized, AffineFit, Reference, Side, SpeedFit,
};
use vfe_core::gauss::{gauss_sum_closed, gauss_sum_direct, GaussArgs};
use vfe_core::io::{fmt17, load_run, save_run, write_json, write_polygon_csv};
use vfe_core::reproduce::{
    comparison_checks, comparison_row, holder_checks, holder_fit, midpoint_check, reference_comparison,
    reference_speed, riemann_check, riemann_rows, simulate_standard, speed_checks, Check, ComparisonRow,
    RiemannRow, Scale, StandardRun,
};
use vfe_core::spectral::{run, GridSpec, Trajectory};
use vfe_core::{Result, VfeError};

use crate::config::{RunConfig, Target};

/// Environment variable naming the directory that relative output paths
/// are resolved against.
pub const OUT_DIR_ENV: &str = "VFE_OUT_DIR";

/// What a command produced, for the caller to print and turn into an exit code.
#[derive(Debug, Default)]
pub struct Outcome {
    pub lines: Vec<String>,
    /// False when a reproduction check failed.
    pub accepted: bool,
}

impl Outcome {
    fn ok(lines: Vec<String>) -> Self {
        Outcome { lines, accepted: true }
    }
}

pub fn output_dir(out: &Path) -> PathBuf {
    match std::env::var_os(OUT_DIR_ENV) {
        Some(root) if !root.is_empty() => Path::new(&root).join(out),
        _ => out.to_path_buf(),
    }
}

fn prepare(config: &RunConfig) -> Result<Option<PathBuf>> {
    config.validate()?;
    match config.out() {
        Some(out) => {
            let dir = output_dir(out);
            fs::create_dir_all(&dir)?;
            config.save(&dir.join("config.txt"))?;
            Ok(Some(dir))
        }
        None => Ok(None),
    }
}

pub fn execute(config: &RunConfig) -> Result<Outcome> {
    let dir = prepare(config)?;
    let dir = dir.as_deref().unwrap_or(Path::new("."));
    match config {
        RunConfig::Gauss { a, b, c } => gauss(*a, *b, *c),
        RunConfig::Algebraic { m, p, q, .. } => algebraic(*m, *p, *q, dir),
        RunConfig::Simulate { m, nodes_per_side, steps, dump_times, .. } => {
            let spec = GridSpec::new(*m, *nodes_per_side, *steps)?;
            simulate(&spec, &dump_times.resolve(*m)?, dir)
        }
        RunConfig::Analyze { manifest, phi_terms, holder_window, holder_at, .. } => {
            analyze(manifest, *phi_terms, *holder_window, *holder_at, dir)
        }
        RunConfig::Reproduce { target, scale, ms, nodes_per_side, .. } => {
            reproduce(*target, *scale, ms, nodes_per_side.unwrap_or(scale.nodes_per_side()), dir)
        }
    }
}

fn gauss(a: i64, b: i64, c: i64) -> Result<Outcome> {
    let args = GaussArgs::new(a, b, c)?;
    let closed = gauss_sum_closed(args)?;
    let direct = gauss_sum_direct(args);
    let diff = (closed - direct).norm();
    Ok(Outcome::ok(vec![
        format!("G({a}, {b}, {c})"),
        format!("direct  {} {}", fmt17(direct.re), fmt17(direct.im)),
        format!("closed  {} {}", fmt17(closed.re), fmt17(closed.im)),
        format!("|G|     {}", fmt17(closed.norm())),
        format!("agree   {} (difference {diff:.3e})", diff < 1e-10),
    ]))
}

#[derive(Serialize)]
struct PolygonDocument<'a> {
    m: u32,
    p: i64,
    q: i64,
    t: f64,
    rho: f64,
    psi_hat0: f64,
    closure_residual: f64,
    side_count: usize,
    polygon: &'a SkewPolygon,
}

fn algebraic(m: u32, p: i64, q: i64, dir: &Path) -> Result<Outcome> {
    let time = RationalTime::new(m, p, q)?;
    let residual = closure_residual(&time).max();
    let poly = build_polygon(&time)?;
    let meta = poly.meta.ok_or_else(|| VfeError::InvalidArgument("polygon has no rational-time metadata".into()))?;
    let mut csv = Vec::new();
    write_polygon_csv(&poly, &mut csv)?;
    fs::write(dir.join("polygon.csv"), csv)?;
    let doc = PolygonDocument {
        m,
        p,
        q,
        t: time.value(),
        rho: meta.rho,
        psi_hat0: meta.psi_hat0,
        closure_residual: residual,
        side_count: poly.side_count(),
        polygon: &poly,
    };
    write_json(&dir.join("polygon.json"), &doc)?;
    Ok(Outcome::ok(vec![
        format!("M = {m}, t = {p}/{q} of the period"),
        format!("closure residual {residual:.3e}"),
        format!("sides {}", poly.side_count()),
        format!("written to {}", dir.display()),
    ]))
}

fn simulate(spec: &GridSpec, dump_times: &[f64], dir: &Path) -> Result<Outcome> {
    let start = Instant::now();
    let traj = run(spec, dump_times)?;
    let wall = start.elapsed().as_secs_f64();
    let manifest = save_run(dir, &traj, wall)?;
    let speed = fit_center_speed(&traj)?;
    Ok(Outcome::ok(vec![
        format!("M = {}, N = {}, {} steps of {:.6e}", spec.m, spec.n, spec.steps, spec.dt()),
        format!("c_M = {:.10}, max |h - c_M t| = {:.6e}", speed.c_m, speed.max_deviation),
        format!("{} states kept, {wall:.1} s", traj.dumps.len()),
        format!("manifest {}", manifest.display()),
    ]))
}

#[derive(Debug, Serialize)]
struct ComparisonSummary {
    states: usize,
    half_cell: f64,
    nodes: f64,
    reference: Option<f64>,
}

#[derive(Debug, Serialize)]
struct HolderSummary {
    p: i64,
    q: i64,
    exponent: f64,
    intercept: f64,
    r_squared: f64,
    window: (f64, f64),
    pairs: usize,
}

#[derive(Debug, Serialize)]
struct AnalysisReport {
    m: u32,
    nodes_per_side: usize,
    steps: usize,
    t_final: f64,
    speed: SpeedFit,
    reference_max_deviation: Option<f64>,
    comparison: Option<ComparisonSummary>,
    midpoint_error: Option<f64>,
    affine: Option<AffineFit>,
    holder: Option<HolderSummary>,
    notes: Vec<String>,
}

/// Dumps lying on the `k / 1260` grid of the period, paired with their exact times.
fn comparable(traj: &Trajectory) -> Result<(Vec<vfe_core::spectral::SpectralState>, Vec<RationalTime>)> {
    let m = traj.spec.m;
    let period = RationalTime::period(m);
    let mut states = Vec::new();
    let mut times = Vec::new();
    for d in &traj.dumps {
        let k = (d.time / period * 1260.0).round();
        if (0.0..=1260.0).contains(&k) && (d.time - k * period / 1260.0).abs() <= 1e-9 * period {
            states.push(d.clone());
            times.push(RationalTime::from_fraction(m, k as i64, 1260)?);
        }
    }
    Ok((states, times))
}

fn lines_csv(header: &str, rows: impl Iterator<Item = Vec<f64>>) -> String {
    let mut s = format!("{header}\n");
    for row in rows {
        let cells: Vec<String> = row.into_iter().map(fmt17).collect();
        let _ = writeln!(s, "{}", cells.join(","));
    }
    s
}

fn analyze(
    manifest: &Path,
    phi_terms: usize,
    window: (f64, f64),
    (p, q): (i64, i64),
    dir: &Path,
) -> Result<Outcome> {
    let traj = load_run(manifest)?;
    let spec = traj.spec;
    let nps = spec.nodes_per_side();
    let speed = fit_center_speed(&traj)?;
    let mut notes = Vec::new();

    let (states, times) = comparable(&traj)?;
    let comparison = if states.is_empty() {
        notes.push("no stored states on the k/1260 grid; comparison skipped".into());
        None
    } else {
        Some(ComparisonSummary {
            states: states.len(),
            half_cell: compare_trajectories(&states, &times, speed.c_m, Reference::HalfCell)?,
            nodes: compare_trajectories(&states, &times, speed.c_m, Reference::Nodes)?,
            reference: reference_comparison(spec.m, nps).filter(|_| states.len() == 1261),
        })
    };

    let midpoint_error = match traj.dump_near(2.0 * PI / 27.0) {
        Some(state) if spec.m == 3 && (state.time - 2.0 * PI / 27.0).abs() <= 1e-9 => {
            Some(compare_tangent_midpoints(state)?)
        }
        _ => None,
    };

    let z = z_normalized(&traj, speed.c_m);
    fs::write(
        dir.join("z.csv"),
        lines_csv("tau,re,im", z.iter().map(|(t, z)| vec![*t, z.re, z.im])),
    )?;

    let period = RationalTime::period(spec.m);
    let full_period = (spec.t_final - period).abs() <= 1e-12 * period;
    let affine = if full_period {
        let phi = phi_uniform_grid(spec.steps, phi_terms);
        fs::write(
            dir.join("phi.csv"),
            lines_csv(
                "tau,re,im",
                phi.iter().enumerate().map(|(i, v)| vec![i as f64 / spec.steps as f64, v.re, v.im]),
            ),
        )?;
        let zs: Vec<_> = z.iter().map(|p| p.1).collect();
        Some(affine_fit(&zs, &phi)?)
    } else {
        notes.push("run does not cover exactly one period; Riemann fit skipped".into());
        None
    };

    let holder = match holder_exponent(&z, p as f64 / q as f64, window, Side::Both) {
        Ok(fit) => {
            fs::write(
                dir.join("holder.csv"),
                lines_csv("ln_dt,ln_dz", fit.pairs.iter().map(|&(a, b)| vec![a, b])),
            )?;
            Some(HolderSummary {
                p,
                q,
                exponent: fit.exponent,
                intercept: fit.intercept,
                r_squared: fit.r_squared,
                window: fit.window,
                pairs: fit.pairs.len(),
            })
        }
        Err(e @ (VfeError::InsufficientData { .. } | VfeError::DegenerateFit(_))) => {
            notes.push(format!("Holder fit at {p}/{q} skipped: {e}"));
            None
        }
        Err(e) => return Err(e),
    };

    let report = AnalysisReport {
        m: spec.m,
        nodes_per_side: nps,
        steps: spec.steps,
        t_final: spec.t_final,
        speed,
        reference_max_deviation: reference_speed(spec.m, nps).filter(|_| full_period),
        comparison,
        midpoint_error,
        affine,
        holder,
        notes,
    };
    write_json(&dir.join("report.json"), &report)?;

    let mut lines = vec![format!("c_M = {:.10}, max |h - c_M t| = {:.6e}", speed.c_m, speed.max_deviation)];
    if let Some(c) = &report.comparison {
        lines.push(format!(
            "comparison over {} states: {:.6e} (corners half a cell early), {:.6e} (corners at nodes)",
            c.states, c.half_cell, c.nodes
        ));
    }
    if let Some(e) = report.midpoint_error {
        lines.push(format!("tangent midpoint error {e:.6e}"));
    }
    if let Some(a) = &report.affine {
        lines.push(format!("Riemann fit lambda = {:.6}, max abs err {:.6e}", a.lambda, a.max_abs_err));
    }
    if let Some(h) = &report.holder {
        lines.push(format!("Holder exponent at {}/{}: {:.4} (r^2 {:.4})", h.p, h.q, h.exponent, h.r_squared));
    }
    lines.extend(report.notes.iter().cloned());
    lines.push(format!("report {}", dir.join("report.json").display()));
    Ok(Outcome::ok(lines))
}

#[derive(Debug, Serialize)]
struct SpeedRow {
    m: u32,
    c_m: f64,
    max_deviation: f64,
    reference: Option<f64>,
}

#[derive(Debug, Serialize)]
struct ReproductionReport {
    target: &'static str,
    scale: Scale,
    nodes_per_side: usize,
    speed: Vec<SpeedRow>,
    comparison: Vec<ComparisonRow>,
    riemann: Vec<RiemannRow>,
    holder: Option<HolderSummary>,
    checks: Vec<Check>,
    pass: bool,
}

fn reproduce(target: Target, scale: Scale, ms: &[u32], nps: usize, dir: &Path) -> Result<Outcome> {
    let dumps = target == Target::Table2;
    let runs: Vec<StandardRun> = ms.par_iter().map(|&m| simulate_standard(m, nps, dumps)).collect::<Result<_>>()?;
    let refs: Vec<&StandardRun> = runs.iter().collect();

    let mut report = ReproductionReport {
        target: target.name(),
        scale,
        nodes_per_side: nps,
        speed: runs
            .iter()
            .map(|r| SpeedRow {
                m: r.m,
                c_m: r.speed.c_m,
                max_deviation: r.speed.max_deviation,
                reference: reference_speed(r.m, nps),
            })
            .collect(),
        comparison: vec![],
        riemann: vec![],
        holder: None,
        checks: vec![],
        pass: true,
    };

    match target {
        Target::Table1 => report.checks = speed_checks(&refs, scale),
        Target::Table2 => {
            report.comparison = runs.iter().map(comparison_row).collect::<Result<_>>()?;
            report.checks = comparison_checks(&report.comparison, scale);
            if let Some(r) = runs.iter().find(|r| r.m == 3) {
                report.checks.push(midpoint_check(r)?);
            }
        }
        Target::Riemann => {
            report.riemann = riemann_rows(&refs)?;
            report.checks.push(riemann_check(&report.riemann));
        }
        Target::Holder => {
            for r in &runs {
                let fit = holder_fit(r, 1, 5)?;
                report.checks.extend(holder_checks(&fit));
                report.holder = Some(HolderSummary {
                    p: 1,
                    q: 5,
                    exponent: fit.exponent,
                    intercept: fit.intercept,
                    r_squared: fit.r_squared,
                    window: fit.window,
                    pairs: fit.pairs.len(),
                });
            }
        }
    }
    report.pass = report.checks.iter().all(|c| c.pass);
    write_json(&dir.join("report.json"), &report)?;

    let mut lines: Vec<String> = report.checks.iter().map(Check::line).collect();
    for row in &report.speed {
        lines.push(format!("M = {}: c_M = {:.6}, max |h - c_M t| = {:.6e}", row.m, row.c_m, row.max_deviation));
    }
    for row in &report.comparison {
        lines.push(format!(
            "M = {}: comparison {:.6e} (corners half a cell early), {:.6e} (corners at nodes)",
            row.m, row.half_cell, row.nodes
        ));
    }
    for row in &report.riemann {
        lines.push(format!("M = {}: lambda = {:.6}, max abs err {:.6e}", row.m, row.fit.lambda, row.fit.max_abs_err));
    }
    if report.checks.is_empty() {
        lines.push(format!("no reference values at {nps} nodes per side; nothing checked"));
    }
    lines.push(format!("report {}", dir.join("report.json").display()));
    Ok(Outcome { lines, accepted: report.pass })
}

/// Exit status for an error: 2 for bad input, 3 for numerical failures.
pub fn exit_code(err: &VfeError) -> u8 {
    match err {
        VfeError::InvalidArgument(_) | VfeError::NoInverse { .. } | VfeError::Parse(_) => 2,
        VfeError::ClosureFailure { .. }
        | VfeError::DegenerateAlignment(_)
        | VfeError::BlowUp { .. }
        | VfeError::DegenerateFit(_)
        | VfeError::InsufficientData { .. } => 3,
        VfeError::Io(_) | VfeError::Json(_) => 1,
    }
}
