//! Published reference values for the regular-polygon experiments and the
//! checks that compare a set of runs against them.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::analysis::{
    affine_fit, compare_tangent_midpoints, compare_trajectories, fit_center_speed, holder_exponent,
    phi_uniform_grid, standard_rational_times, z_normalized, AffineFit, HolderFit, Reference, Side, SpeedFit,
    DEFAULT_HOLDER_WINDOW, DEFAULT_PHI_TERMS,
};
use crate::error::{Result, VfeError};
use crate::spectral::{min_steps, run, standard_dump_times, GridSpec, Trajectory};

/// Nodes per side of the reference columns: `512 * 2^r`, `r = 0..5`.
pub const REFERENCE_NODES: [usize; 5] = [512, 1024, 2048, 4096, 8192];
/// Time steps paired with `512` nodes per side; the count grows as `4^r`.
pub const BASE_STEPS: usize = 151_200;

/// `max_n |h(t_n) - c_M t_n|` for `M = 3..=10` and each column of
/// [`REFERENCE_NODES`], followed by `c_M` at the finest resolution.
///
/// The `M = 4`, 512-node entry is printed as `1.2398e-6` in the source
/// table; the neighbouring columns and a rerun both give `1.2398e-5`, which
/// is what is stored here.
pub const SPEED_TABLE: [(u32, [f64; 5], f64); 8] = [
    (3, [4.3096e-5, 2.1206e-5, 1.0886e-5, 5.7953e-6, 3.1123e-6], 0.7644),
    (4, [1.2398e-5, 6.1344e-6, 3.2140e-6, 1.7316e-6, 9.4280e-7], 0.8826),
    (5, [4.8504e-6, 2.4191e-6, 1.2807e-6, 6.9338e-7, 3.7928e-7], 0.9286),
    (6, [2.2848e-6, 1.1441e-6, 6.0905e-7, 3.3044e-7, 1.8113e-7], 0.9517),
    (7, [1.2167e-6, 6.1060e-7, 3.2607e-7, 1.7710e-7, 9.7195e-8], 0.9650),
    (8, [7.0721e-7, 3.5594e-7, 1.9014e-7, 1.0333e-7, 5.6754e-8], 0.9735),
    (9, [4.3905e-7, 2.2140e-7, 1.1828e-7, 6.4303e-8, 3.5336e-8], 0.9792),
    (10, [2.8697e-7, 1.4489e-7, 7.7407e-8, 4.2093e-8, 2.3139e-8], 0.9832),
];

/// Global maximum distance between the numerical and exact curves over the
/// 1261 comparison times.
pub const COMPARISON_TABLE: [(u32, [f64; 5]); 8] = [
    (3, [2.4847e-3, 1.3841e-3, 8.1211e-4, 4.9718e-4, 3.0091e-4]),
    (4, [1.1221e-3, 6.9665e-4, 4.2717e-4, 2.5917e-4, 1.7505e-4]),
    (5, [6.8414e-4, 4.2545e-4, 2.6125e-4, 1.5874e-4, 1.1378e-4]),
    (6, [4.6057e-4, 2.8717e-4, 1.7670e-4, 1.0754e-4, 7.9642e-5]),
    (7, [3.3170e-4, 2.0724e-4, 1.2772e-4, 7.7832e-5, 5.8787e-5]),
    (8, [2.5059e-4, 1.5680e-4, 9.6744e-5, 5.9010e-5, 4.5144e-5]),
    (9, [1.9616e-4, 1.2288e-4, 7.5878e-5, 4.6313e-5, 3.5743e-5]),
    (10, [1.5782e-4, 9.8943e-5, 6.1137e-5, 3.7334e-5, 2.8994e-5]),
];

/// Tangent midpoint error for the triangle at `t_{1,3}` with 8192 nodes per side.
pub const MIDPOINT_FINE: f64 = 3.3976e-10;

/// Resolution presets for the reproduction runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    /// The coarsest published column, 512 nodes per side.
    Desk,
    /// The finest published column, 8192 nodes per side.
    Paper,
}

impl Scale {
    pub fn nodes_per_side(self) -> usize {
        match self {
            Scale::Desk => 512,
            Scale::Paper => 8192,
        }
    }

    /// Relative half-width of the band accepted around a published value.
    fn band(self) -> (f64, f64) {
        match self {
            Scale::Desk => (0.5, 2.0),
            Scale::Paper => (0.99, 1.01),
        }
    }
}

impl std::str::FromStr for Scale {
    type Err = VfeError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "desk" => Ok(Scale::Desk),
            "paper" => Ok(Scale::Paper),
            _ => Err(VfeError::invalid(format!("scale must be desk or paper, got {s:?}"))),
        }
    }
}

fn column(nodes_per_side: usize) -> Option<usize> {
    REFERENCE_NODES.iter().position(|&n| n == nodes_per_side)
}

pub fn reference_speed(m: u32, nodes_per_side: usize) -> Option<f64> {
    let c = column(nodes_per_side)?;
    SPEED_TABLE.iter().find(|r| r.0 == m).map(|r| r.1[c])
}

pub fn reference_c_m(m: u32) -> Option<f64> {
    SPEED_TABLE.iter().find(|r| r.0 == m).map(|r| r.2)
}

pub fn reference_comparison(m: u32, nodes_per_side: usize) -> Option<f64> {
    let c = column(nodes_per_side)?;
    COMPARISON_TABLE.iter().find(|r| r.0 == m).map(|r| r.1[c])
}

/// Steps over one period: `151200 * 4^r` for `512 * 2^r` nodes per side,
/// otherwise the stability minimum rounded up to a multiple of 1260 so the
/// comparison times fall on steps.
pub fn standard_steps(m: u32, nodes_per_side: usize) -> usize {
    if nodes_per_side >= 512 && nodes_per_side.is_power_of_two() {
        let ratio = nodes_per_side / 512;
        BASE_STEPS * ratio * ratio
    } else {
        let period = 2.0 * PI / (m as f64).powi(2);
        min_steps(m, nodes_per_side, period).div_ceil(1260) * 1260
    }
}

/// One simulation over a full period with the standard step count.
#[derive(Debug, Clone)]
pub struct StandardRun {
    pub m: u32,
    pub nodes_per_side: usize,
    pub trajectory: Trajectory,
    pub speed: SpeedFit,
}

/// Runs `M` at `nodes_per_side`; with `dumps` the 1261 comparison states are kept.
pub fn simulate_standard(m: u32, nodes_per_side: usize, dumps: bool) -> Result<StandardRun> {
    let spec = GridSpec::new(m, nodes_per_side, standard_steps(m, nodes_per_side))?;
    let times = if dumps { standard_dump_times(m) } else { vec![] };
    let trajectory = run(&spec, &times)?;
    let speed = fit_center_speed(&trajectory)?;
    Ok(StandardRun { m, nodes_per_side, trajectory, speed })
}

/// A measured value checked against an accepted interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub criterion: u32,
    pub name: String,
    pub measured: f64,
    pub expected: f64,
    pub lower: f64,
    pub upper: f64,
    pub pass: bool,
}

impl Check {
    pub fn within(criterion: u32, name: impl Into<String>, measured: f64, expected: f64, lower: f64, upper: f64) -> Self {
        let pass = measured.is_finite() && measured >= lower && measured <= upper;
        Check { criterion, name: name.into(), measured, expected, lower, upper, pass }
    }

    /// `measured <= limit`.
    pub fn at_most(criterion: u32, name: impl Into<String>, measured: f64, limit: f64) -> Self {
        Self::within(criterion, name, measured, limit, f64::NEG_INFINITY, limit)
    }

    pub fn line(&self) -> String {
        format!("{} [{}] {}", if self.pass { "PASS" } else { "FAIL" }, self.criterion, self.detail())
    }

    pub fn detail(&self) -> String {
        format!(
            "{}: measured {:.6e}, expected {:.6e}, accepted [{:.4e}, {:.4e}]",
            self.name, self.measured, self.expected, self.lower, self.upper
        )
    }
}

/// Deviation of `h` from linear growth and, for the triangle, `c_3`.
pub fn speed_checks(runs: &[&StandardRun], scale: Scale) -> Vec<Check> {
    let (lo, hi) = scale.band();
    let mut checks = Vec::new();
    for r in runs {
        if let Some(expected) = reference_speed(r.m, r.nodes_per_side) {
            checks.push(Check::within(
                5,
                format!("max |h - c_M t|, M = {}, N/M = {}", r.m, r.nodes_per_side),
                r.speed.max_deviation,
                expected,
                lo * expected,
                hi * expected,
            ));
        }
        let c_ref = reference_c_m(r.m);
        let c_tol = if r.nodes_per_side == 8192 { Some(5e-4) } else if r.m == 3 { Some(5e-3) } else { None };
        if let (Some(expected), Some(tol)) = (c_ref, c_tol) {
            checks.push(Check::within(
                5,
                format!("c_M, M = {}, N/M = {}", r.m, r.nodes_per_side),
                r.speed.c_m,
                expected,
                expected - tol,
                expected + tol,
            ));
        }
    }
    checks
}

/// Numerical-versus-exact distance for one run, against both corner placements.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub m: u32,
    pub nodes_per_side: usize,
    pub half_cell: f64,
    pub nodes: f64,
    pub reference: Option<f64>,
}

pub fn comparison_row(r: &StandardRun) -> Result<ComparisonRow> {
    let dumps = &r.trajectory.dumps;
    if dumps.len() != 1261 {
        return Err(VfeError::invalid(format!("run has {} dumps, need the 1261 comparison states", dumps.len())));
    }
    let times = standard_rational_times(r.m)?;
    Ok(ComparisonRow {
        m: r.m,
        nodes_per_side: r.nodes_per_side,
        half_cell: compare_trajectories(dumps, &times, r.speed.c_m, Reference::HalfCell)?,
        nodes: compare_trajectories(dumps, &times, r.speed.c_m, Reference::Nodes)?,
        reference: reference_comparison(r.m, r.nodes_per_side),
    })
}

/// Gate on the half-cell comparison; the node-placed value is reported alongside.
pub fn comparison_checks(rows: &[ComparisonRow], scale: Scale) -> Vec<Check> {
    let (lo, hi) = scale.band();
    rows.iter()
        .filter_map(|row| {
            let expected = row.reference?;
            Some(Check::within(
                6,
                format!("max |X_num - c_M t e3 - X_alg|, M = {}, N/M = {}", row.m, row.nodes_per_side),
                row.half_cell,
                expected,
                lo * expected,
                hi * expected,
            ))
        })
        .collect()
}

/// Tangent error at the side midpoints for the triangle at `t_{1,3}`.
pub fn midpoint_check(r: &StandardRun) -> Result<Check> {
    let state = r
        .trajectory
        .dump_near(2.0 * PI / 27.0)
        .ok_or_else(|| VfeError::invalid("run has no state at t_{1,3}"))?;
    let err = compare_tangent_midpoints(state)?;
    let limit = if r.nodes_per_side >= 8192 { 1e-8 } else { 1e-5 };
    Ok(Check::at_most(7, format!("tangent midpoints at t_13, N/M = {}", r.nodes_per_side), err, limit))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RiemannRow {
    pub m: u32,
    pub fit: AffineFit,
}

/// Affine fit of `z_M` to `phi` for each run. All runs must share a step count.
pub fn riemann_rows(runs: &[&StandardRun]) -> Result<Vec<RiemannRow>> {
    let steps = match runs.first() {
        Some(r) => r.trajectory.spec.steps,
        None => return Ok(vec![]),
    };
    if runs.iter().any(|r| r.trajectory.spec.steps != steps) {
        return Err(VfeError::invalid("runs use different step counts"));
    }
    let phi = phi_uniform_grid(steps, DEFAULT_PHI_TERMS);
    runs.iter()
        .map(|r| {
            let z: Vec<_> = z_normalized(&r.trajectory, r.speed.c_m).into_iter().map(|p| p.1).collect();
            Ok(RiemannRow { m: r.m, fit: affine_fit(&z, &phi)? })
        })
        .collect()
}

/// Counts the places where the affine-fit error fails to drop as `M` grows.
pub fn riemann_check(rows: &[RiemannRow]) -> Check {
    let increases = rows
        .windows(2)
        .filter(|w| !(w[1].fit.max_abs_err < w[0].fit.max_abs_err))
        .count();
    let ms: Vec<String> = rows.iter().map(|r| r.m.to_string()).collect();
    Check::within(
        8,
        format!("non-decreasing steps of max |phi - lambda z_M - mu| over M = {}", ms.join(",")),
        increases as f64,
        0.0,
        0.0,
        0.0,
    )
}

/// Two-sided Hölder fit of `z_M` at `p / q` of the period.
pub fn holder_fit(r: &StandardRun, p: i64, q: i64) -> Result<HolderFit> {
    let z = z_normalized(&r.trajectory, r.speed.c_m);
    holder_exponent(&z, p as f64 / q as f64, DEFAULT_HOLDER_WINDOW, Side::Both)
}

pub fn holder_checks(fit: &HolderFit) -> Vec<Check> {
    vec![
        Check::within(9, "Holder exponent of z_M at t_15", fit.exponent, 0.5, 0.4, 0.6),
        Check::within(9, "r^2 of the Holder fit", fit.r_squared, 1.0, 0.95, 1.0),
    ]
}
