use nalgebra::{Rotation3, Vector3};
use serde::{Deserialize, Serialize};

use super::derivative::{FullSpectral, ReducedSpectral, TangentDerivatives};
use super::{initial_state, GridSpec, SpectralState};
use crate::error::{Result, VfeError};

/// Largest `| |T| - 1 |` tolerated before renormalization. Stable runs stay
/// orders of magnitude below this; once the scheme goes unstable the defect
/// grows past it within a few steps.
pub const BLOWUP_DEFECT: f64 = 0.5;

/// Classical RK4 for `X_t = T x T_s`, `T_t = T x T_ss`. Only `T` enters the
/// right-hand side. After each step `T` is rescaled to unit length.
pub struct Integrator<D> {
    ops: D,
    steps_taken: usize,
    stage: Vec<Vector3<f64>>,
    ts: Vec<Vector3<f64>>,
    tss: Vec<Vector3<f64>>,
    vx: Vec<Vector3<f64>>,
    vt: Vec<Vector3<f64>>,
    sum_x: Vec<Vector3<f64>>,
    sum_t: Vec<Vector3<f64>>,
}

impl<D: TangentDerivatives> Integrator<D> {
    pub fn new(ops: D) -> Self {
        let n = ops.len();
        let z = vec![Vector3::zeros(); n];
        Integrator {
            ops,
            steps_taken: 0,
            stage: z.clone(),
            ts: z.clone(),
            tss: z.clone(),
            vx: z.clone(),
            vt: z.clone(),
            sum_x: z.clone(),
            sum_t: z,
        }
    }

    pub fn steps_taken(&self) -> usize {
        self.steps_taken
    }

    pub fn ops(&self) -> &D {
        &self.ops
    }

    /// Right-hand side evaluated at `self.stage`, written to `vx`, `vt`.
    fn velocity(&mut self) {
        self.ops.tangent_derivatives(&self.stage, &mut self.ts, &mut self.tss);
        for j in 0..self.stage.len() {
            self.vx[j] = self.stage[j].cross(&self.ts[j]);
            self.vt[j] = self.stage[j].cross(&self.tss[j]);
        }
    }

    /// Advances `(x, t)` by `dt` in place.
    pub fn step(&mut self, x: &mut [Vector3<f64>], t: &mut [Vector3<f64>], dt: f64) -> Result<()> {
        let n = self.ops.len();
        if x.len() != n || t.len() != n {
            return Err(VfeError::invalid(format!(
                "state has {} / {} nodes, operator expects {n}",
                x.len(),
                t.len()
            )));
        }
        let step = self.steps_taken;
        self.stage.copy_from_slice(t);
        // (weight in the final sum, offset of the next stage)
        let stages = [(1.0, 0.5 * dt), (2.0, 0.5 * dt), (2.0, dt), (1.0, 0.0)];
        for (i, &(weight, next)) in stages.iter().enumerate() {
            self.velocity();
            for j in 0..n {
                if i == 0 {
                    self.sum_x[j] = self.vx[j];
                    self.sum_t[j] = self.vt[j];
                } else {
                    self.sum_x[j] += weight * self.vx[j];
                    self.sum_t[j] += weight * self.vt[j];
                }
                self.stage[j] = t[j] + next * self.vt[j];
            }
        }
        let mut worst = 0.0f64;
        for j in 0..n {
            x[j] += dt / 6.0 * self.sum_x[j];
            let raw = t[j] + dt / 6.0 * self.sum_t[j];
            let norm = raw.norm();
            if !norm.is_finite() || !x[j].iter().all(|v| v.is_finite()) {
                return Err(VfeError::BlowUp { step, reason: format!("non-finite value at node {j}") });
            }
            worst = worst.max((norm - 1.0).abs());
            t[j] = raw / norm;
        }
        if worst > BLOWUP_DEFECT {
            return Err(VfeError::BlowUp {
                step,
                reason: format!("tangent length drifted by {worst:e} before renormalization"),
            });
        }
        self.steps_taken += 1;
        Ok(())
    }
}

impl Integrator<ReducedSpectral> {
    pub fn for_state(state: &SpectralState) -> Result<Self> {
        Ok(Integrator::new(ReducedSpectral::new(state.m as usize, state.n)?))
    }

    /// Advances a reduced state by `dt`, updating its time.
    pub fn step_state(&mut self, state: &mut SpectralState, dt: f64) -> Result<()> {
        self.step(&mut state.x, &mut state.t, dt)?;
        state.time += dt;
        Ok(())
    }
}

/// Time history of a reduced simulation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub spec: GridSpec,
    /// `k dt` for `k = 0..=steps`.
    pub times: Vec<f64>,
    /// `X(0, t)` at every step.
    pub corner: Vec<Vector3<f64>>,
    /// Height of the centre of mass at every step.
    pub height: Vec<f64>,
    /// Full states at the requested times, each taken at the nearest step.
    pub dumps: Vec<SpectralState>,
}

impl Trajectory {
    pub fn final_time(&self) -> f64 {
        *self.times.last().expect("trajectory has at least the initial sample")
    }

    /// The dump whose time is closest to `t`.
    pub fn dump_near(&self, t: f64) -> Option<&SpectralState> {
        self.dumps
            .iter()
            .min_by(|a, b| (a.time - t).abs().total_cmp(&(b.time - t).abs()))
    }
}

/// Runs the reduced solver from the regular polygon over `spec`, keeping full
/// states at the steps nearest to `dump_times`.
pub fn run(spec: &GridSpec, dump_times: &[f64]) -> Result<Trajectory> {
    run_from(spec, initial_state(spec.m, spec.nodes_per_side())?, dump_times)
}

/// As [`run`], starting from an arbitrary state on the grid of `spec`.
pub fn run_from(spec: &GridSpec, mut state: SpectralState, dump_times: &[f64]) -> Result<Trajectory> {
    if state.m != spec.m || state.n != spec.n || state.x.len() != spec.nodes_per_side() || state.t.len() != state.x.len() {
        return Err(VfeError::invalid("initial state does not match the grid"));
    }
    let mut integrator = Integrator::for_state(&state)?;
    let dt = spec.dt();
    let mut wanted: Vec<usize> = dump_times.iter().map(|&t| spec.nearest_step(t)).collect();
    wanted.sort_unstable();
    wanted.dedup();
    let mut next_dump = wanted.iter().peekable();

    let mut times = Vec::with_capacity(spec.steps + 1);
    let mut corner = Vec::with_capacity(spec.steps + 1);
    let mut height = Vec::with_capacity(spec.steps + 1);
    let mut dumps = Vec::with_capacity(wanted.len());
    for k in 0..=spec.steps {
        if k > 0 {
            integrator.step(&mut state.x, &mut state.t, dt)?;
            // Recomputed rather than accumulated so that step k sits exactly at k dt.
            state.time = k as f64 * dt;
        }
        times.push(state.time);
        corner.push(state.x[0]);
        height.push(state.center_height());
        if next_dump.peek() == Some(&&k) {
            next_dump.next();
            dumps.push(state.clone());
        }
    }
    Ok(Trajectory { spec: *spec, times, corner, height, dumps })
}

/// Rotated copies of a reduced state filling all `N` nodes.
pub fn expand_state(state: &SpectralState) -> (Vec<Vector3<f64>>, Vec<Vector3<f64>>) {
    let m = state.m as usize;
    let mut x = Vec::with_capacity(state.n);
    let mut t = Vec::with_capacity(state.n);
    for b in 0..m {
        let r = Rotation3::from_axis_angle(&Vector3::z_axis(), 2.0 * std::f64::consts::PI * b as f64 / m as f64);
        x.extend(state.x.iter().map(|v| r * v));
        t.extend(state.t.iter().map(|v| r * v));
    }
    (x, t)
}

/// Integrates the same problem on all `N` nodes, component by component,
/// without using the rotational symmetry. Returns the final `(X, T)`.
pub fn run_full(spec: &GridSpec) -> Result<(Vec<Vector3<f64>>, Vec<Vector3<f64>>)> {
    let (mut x, mut t) = expand_state(&initial_state(spec.m, spec.nodes_per_side())?);
    let mut integrator = Integrator::new(FullSpectral::new(spec.n)?);
    for _ in 0..spec.steps {
        integrator.step(&mut x, &mut t, spec.dt())?;
    }
    Ok((x, t))
}
