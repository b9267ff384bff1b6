//! Pseudo-spectral integration of the binormal flow `X_t = T x T_s`,
//! `T_t = T x T_ss` for an initially regular `M`-gon.
//!
//! The solution keeps the `2 pi / M` rotational symmetry of the initial
//! polygon, so only the nodes of the first side are stored. Derivatives are
//! taken with `N / M`-point transforms (see [`ReducedSpectral`]).

mod derivative;
mod stepper;

use std::f64::consts::PI;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Result, VfeError};

pub use derivative::{FullSpectral, ReducedSpectral, Symmetry, TangentDerivatives};
pub use stepper::{expand_state, run, run_from, run_full, Integrator, Trajectory, BLOWUP_DEFECT};

/// Empirical stability constant: RK4 is stable for `dt <= C / N^2`.
pub const STABILITY_C: f64 = 11.3;

/// Resolution and time stepping of a simulation over `[0, t_final]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub m: u32,
    /// Total number of nodes `N` on the closed curve.
    pub n: usize,
    pub steps: usize,
    pub t_final: f64,
}

impl GridSpec {
    /// Integrates over one period `2 pi / M^2` with `nodes_per_side = N / M`.
    pub fn new(m: u32, nodes_per_side: usize, steps: usize) -> Result<Self> {
        Self::with_final_time(m, nodes_per_side, steps, 2.0 * PI / (m as f64 * m as f64))
    }

    pub fn with_final_time(m: u32, nodes_per_side: usize, steps: usize, t_final: f64) -> Result<Self> {
        if m < 3 {
            return Err(VfeError::invalid(format!("need at least 3 sides, got M = {m}")));
        }
        if nodes_per_side < 2 || !nodes_per_side.is_power_of_two() {
            return Err(VfeError::invalid(format!(
                "nodes per side must be a power of two >= 2, got {nodes_per_side}"
            )));
        }
        if steps == 0 {
            return Err(VfeError::invalid("at least one time step is required"));
        }
        if !(t_final.is_finite() && t_final > 0.0) {
            return Err(VfeError::invalid(format!("final time must be positive, got {t_final}")));
        }
        let spec = GridSpec { m, n: m as usize * nodes_per_side, steps, t_final };
        let bound = STABILITY_C / (spec.n as f64).powi(2);
        if spec.dt() > bound {
            return Err(VfeError::invalid(format!(
                "dt = {:e} exceeds the stability bound {bound:e}; use at least {} steps",
                spec.dt(),
                min_steps(m, nodes_per_side, t_final)
            )));
        }
        Ok(spec)
    }

    pub fn nodes_per_side(&self) -> usize {
        self.n / self.m as usize
    }

    pub fn dt(&self) -> f64 {
        self.t_final / self.steps as f64
    }

    pub fn ds(&self) -> f64 {
        2.0 * PI / self.n as f64
    }

    /// Step index closest to time `t`, clamped to `[0, steps]`.
    pub fn nearest_step(&self, t: f64) -> usize {
        ((t / self.dt()).round().max(0.0) as usize).min(self.steps)
    }
}

/// Smallest step count over `[0, t_final]` satisfying `dt <= C / N^2`.
pub fn min_steps(m: u32, nodes_per_side: usize, t_final: f64) -> usize {
    let n = m as f64 * nodes_per_side as f64;
    (t_final * n * n / STABILITY_C).ceil() as usize
}

/// Times `(2 pi / M^2)(k / 1260)`, `k = 0..=1260`, at which full states are kept.
pub fn standard_dump_times(m: u32) -> Vec<f64> {
    let period = 2.0 * PI / (m as f64 * m as f64);
    (0..=1260).map(|k| period * k as f64 / 1260.0).collect()
}

/// Position and tangent on the nodes `s_j = 2 pi j / N`, `j < N / M`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralState {
    pub m: u32,
    pub n: usize,
    pub time: f64,
    pub x: Vec<Vector3<f64>>,
    pub t: Vec<Vector3<f64>>,
}

impl SpectralState {
    pub fn nodes_per_side(&self) -> usize {
        self.x.len()
    }

    pub fn arc_length(&self, j: usize) -> f64 {
        2.0 * PI * j as f64 / self.n as f64
    }

    /// Mean height `(M / N) sum X3`, which is the height of the centre of mass.
    pub fn center_height(&self) -> f64 {
        self.x.iter().map(|v| v.z).sum::<f64>() / self.x.len() as f64
    }

    /// Largest `| |T| - 1 |` over the nodes.
    pub fn unit_defect(&self) -> f64 {
        self.t.iter().map(|v| (v.norm() - 1.0).abs()).fold(0.0, f64::max)
    }
}

/// Regular `M`-gon of perimeter `2 pi` in the plane `z = 0`, sampled on the
/// first side. Vertex `k` sits at `-i pi e^{i pi (2k - 1)/M} / (M sin(pi/M))`;
/// the first side runs along `+x`. The node at the corner `s = 0` takes the
/// tangent of the side that starts there.
pub fn initial_state(m: u32, nodes_per_side: usize) -> Result<SpectralState> {
    if m < 3 || nodes_per_side < 2 {
        return Err(VfeError::invalid(format!(
            "need M >= 3 and at least 2 nodes per side, got M = {m}, N/M = {nodes_per_side}"
        )));
    }
    let mf = m as f64;
    let n = m as usize * nodes_per_side;
    let radius = PI / (mf * (PI / mf).sin());
    let start = Vector3::new(-radius * (PI / mf).sin(), -radius * (PI / mf).cos(), 0.0);
    let ds = 2.0 * PI / n as f64;
    let x = (0..nodes_per_side).map(|j| start + Vector3::new(j as f64 * ds, 0.0, 0.0)).collect();
    let t = vec![Vector3::x(); nodes_per_side];
    Ok(SpectralState { m, n, time: 0.0, x, t })
}
