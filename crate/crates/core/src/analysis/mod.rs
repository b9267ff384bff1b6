//! Cross-checks between the exact polygons and the numerical solution, and
//! diagnostics of the corner trajectory `X(0, t)`.

mod riemann;

use std::f64::consts::PI;

use nalgebra::{Rotation3, Vector3};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algebraic::{build_polygon, RationalTime};
use crate::error::{Result, VfeError};
use crate::spectral::{expand_state, SpectralState, Trajectory};

pub use riemann::{
    affine_fit, holder_exponent, phi_series, phi_uniform_grid, z_normalized, z_of_t, AffineFit, HolderFit, Side,
    DEFAULT_HOLDER_WINDOW, DEFAULT_PHI_TERMS, MIN_HOLDER_SAMPLES,
};

/// Linear fit `h(t) ~ c_M t` of the centre-of-mass height.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpeedFit {
    pub c_m: f64,
    /// `max_n |h(t_n) - c_M t_n|`.
    pub max_deviation: f64,
}

pub fn fit_center_speed(traj: &Trajectory) -> Result<SpeedFit> {
    fit_center_speed_samples(&traj.times, &traj.height)
}

/// `c_M = h(t_final) / t_final`, with `t_final` the last sample time.
pub fn fit_center_speed_samples(times: &[f64], heights: &[f64]) -> Result<SpeedFit> {
    if times.len() != heights.len() {
        return Err(VfeError::invalid(format!("{} times but {} heights", times.len(), heights.len())));
    }
    let (&t_final, &h_final) = match (times.last(), heights.last()) {
        (Some(t), Some(h)) => (t, h),
        _ => return Err(VfeError::invalid("empty trajectory")),
    };
    if t_final <= 0.0 {
        return Err(VfeError::invalid(format!("trajectory must end at a positive time, ends at {t_final}")));
    }
    let c_m = h_final / t_final;
    let max_deviation = times
        .iter()
        .zip(heights)
        .map(|(t, h)| (h - c_m * t).abs())
        .fold(0.0, f64::max);
    Ok(SpeedFit { c_m, max_deviation })
}

/// Where the exact solution puts the corners relative to the grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Reference {
    /// Corners at the nodes `s = 2 pi k / M`: `X_alg(s_j, t)` as built.
    Nodes,
    /// Corners where the sampled initial tangent jumps, half a cell before
    /// each corner node. Since `X` moves with a velocity that depends on `T`
    /// alone, the numerical curve follows `X_0(s) + Y(s, t) - Y(s, 0)` with
    /// `Y(s, t) = X_alg(s + ds/2, t)`.
    HalfCell,
}

/// Per-state maximum over the stored nodes of
/// `|X_num(s_j, t) - c_M t e_3 - X_ref(s_j, t)|`. The exact polygon is
/// shifted vertically so that its centre of mass sits at height zero and is
/// sampled between vertices by linear interpolation.
pub fn comparison_errors(
    num: &[SpectralState],
    alg_times: &[RationalTime],
    c_m: f64,
    reference: Reference,
) -> Result<Vec<f64>> {
    if num.len() != alg_times.len() {
        return Err(VfeError::invalid(format!(
            "{} numerical states but {} exact times",
            num.len(),
            alg_times.len()
        )));
    }
    let initial = match num.first() {
        Some(state) => build_polygon(&RationalTime::new(state.m, 0, 1)?)?,
        None => return Ok(vec![]),
    };
    num.par_iter()
        .zip(alg_times.par_iter())
        .map(|(state, time)| {
            if time.m != state.m {
                return Err(VfeError::invalid(format!("state has M = {}, exact time has M = {}", state.m, time.m)));
            }
            let tol = 1e-9 * RationalTime::period(time.m);
            if (state.time - time.value()).abs() > tol {
                return Err(VfeError::invalid(format!(
                    "state at t = {} does not match exact time {}/{} (t = {})",
                    state.time,
                    time.p,
                    time.q,
                    time.value()
                )));
            }
            let mut poly = build_polygon(time)?;
            poly.vertical_offset = -poly.mass_center_height();
            let drift = Vector3::new(0.0, 0.0, c_m * state.time);
            let half = PI / state.n as f64;
            Ok(state
                .x
                .iter()
                .enumerate()
                .map(|(j, x)| {
                    let s = state.arc_length(j);
                    let exact = match reference {
                        Reference::Nodes => poly.position_at(s),
                        Reference::HalfCell => {
                            poly.position_at(s + half) - initial.position_at(s + half) + initial.position_at(s)
                        }
                    };
                    (x - drift - exact).norm()
                })
                .fold(0.0, f64::max))
        })
        .collect()
}

/// Global maximum of [`comparison_errors`].
pub fn compare_trajectories(
    num: &[SpectralState],
    alg_times: &[RationalTime],
    c_m: f64,
    reference: Reference,
) -> Result<f64> {
    Ok(comparison_errors(num, alg_times, c_m, reference)?.into_iter().fold(0.0, f64::max))
}

/// The `k / 1260` fractions of the period matching
/// [`standard_dump_times`](crate::spectral::standard_dump_times).
pub fn standard_rational_times(m: u32) -> Result<Vec<RationalTime>> {
    (0..=1260).map(|k| RationalTime::from_fraction(m, k, 1260)).collect()
}

/// Exact tangents of the triangle at `t_{1,3}` on the nine sides, in order
/// of arc length. The first three are closed-form; the rest follow by the
/// threefold rotation.
pub fn triangle_third_tangents() -> [Vector3<f64>; 9] {
    let c2 = 2f64.cbrt();
    let c4 = 4f64.cbrt();
    let root = (c4 - 1.0).sqrt();
    let first = [
        Vector3::new(c2 - 1.0, -root, 1.0 - c4),
        Vector3::new(1.0, 0.0, 0.0),
        Vector3::new(c2 - 1.0, root, c4 - 1.0),
    ];
    let mut out = [Vector3::zeros(); 9];
    for b in 0..3 {
        let r = Rotation3::from_axis_angle(&Vector3::z_axis(), 2.0 * PI * b as f64 / 3.0);
        for (i, v) in first.iter().enumerate() {
            out[3 * b + i] = r * v.normalize();
        }
    }
    out
}

/// Largest componentwise error between the numerical tangent at the node
/// nearest the centre of each of the nine sides and the exact tangent, for
/// the triangle at `t_{1,3} = 2 pi / 27`.
pub fn compare_tangent_midpoints(state: &SpectralState) -> Result<f64> {
    if state.m != 3 {
        return Err(VfeError::invalid(format!("midpoint check is defined for M = 3, got M = {}", state.m)));
    }
    let target = 2.0 * PI / 27.0;
    if (state.time - target).abs() > 1e-9 {
        return Err(VfeError::invalid(format!("state is at t = {}, expected 2 pi / 27", state.time)));
    }
    let (_, t) = expand_state(state);
    let n = state.n as f64;
    let exact = triangle_third_tangents();
    let mut worst = 0.0f64;
    for (i, e) in exact.iter().enumerate() {
        let centre = 2.0 * PI * (2 * i + 1) as f64 / 18.0;
        let j = (centre * n / (2.0 * PI)).round() as usize % state.n;
        worst = worst.max((t[j] - e).amax());
    }
    Ok(worst)
}
