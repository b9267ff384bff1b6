use std::f64::consts::PI;

use nalgebra::{Matrix3, Rotation3, Unit, Vector3};
use serde::{Deserialize, Serialize};

use super::{closure_residual, delta_train, propagate_frame, Frame, RationalTime, CLOSURE_FAILURE_TOL};
use crate::error::{Result, VfeError};

/// Provenance of a polygon built from a rational time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolygonMeta {
    pub time: RationalTime,
    pub rho: f64,
    pub psi_hat0: f64,
}

/// Closed polygon sampled at the `Mq` arc-length points `s_k = 2 pi k / (M q)`.
///
/// `tangents[k]` is the constant tangent on `(s_k, s_{k+1})`. A vertex whose
/// delta coefficient vanishes is kept for uniform indexing and flagged
/// virtual; the two segments meeting there are collinear.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkewPolygon {
    pub m: u32,
    pub vertices: Vec<Vector3<f64>>,
    pub tangents: Vec<Vector3<f64>>,
    pub virtual_vertex: Vec<bool>,
    pub side_length: f64,
    /// `X(2 pi) - X(0)` before the closing vertex was dropped.
    pub closure_gap: f64,
    /// Vertical shift applied on top of the aligned vertices when sampling
    /// positions, e.g. the drift `c_M t` measured by a simulation.
    pub vertical_offset: f64,
    pub meta: Option<PolygonMeta>,
}

impl SkewPolygon {
    /// Integrates `tangents` from the origin with equal sides of length
    /// `2 pi / tangents.len()`.
    pub fn from_tangents(m: u32, tangents: Vec<Vector3<f64>>) -> Result<Self> {
        let n = tangents.len();
        if m == 0 || n == 0 || !n.is_multiple_of(m as usize) {
            return Err(VfeError::invalid(format!("{n} sides are not a multiple of M = {m}")));
        }
        let side_length = 2.0 * PI / n as f64;
        let mut vertices = Vec::with_capacity(n);
        let mut x = Vector3::zeros();
        for t in &tangents {
            vertices.push(x);
            x += side_length * t;
        }
        let closure_gap = (x - vertices[0]).norm();
        Ok(SkewPolygon {
            m,
            vertices,
            tangents,
            virtual_vertex: vec![false; n],
            side_length,
            closure_gap,
            vertical_offset: 0.0,
            meta: None,
        })
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// Vertices per initial side, i.e. the index stride of `2 pi / M`.
    pub fn stride(&self) -> usize {
        self.len() / self.m as usize
    }

    pub fn arc_length(&self, k: usize) -> f64 {
        k as f64 * self.side_length
    }

    /// Number of genuine corners: adjacent tangents that differ.
    pub fn side_count(&self) -> usize {
        let n = self.len();
        (0..n)
            .filter(|&k| (self.tangents[k] - self.tangents[(k + n - 1) % n]).norm() > 1e-9)
            .count()
    }

    /// Largest `|T_{k-1} . T_k - cos rho|` over genuine corners.
    pub fn corner_angle_defect(&self, rho: f64) -> f64 {
        let n = self.len();
        let cos_rho = rho.cos();
        (0..n)
            .filter(|&k| !self.virtual_vertex[k])
            .map(|k| (self.tangents[(k + n - 1) % n].dot(&self.tangents[k]) - cos_rho).abs())
            .fold(0.0, f64::max)
    }

    /// Largest deviation of a side from `side_length` (closing side included).
    pub fn side_length_defect(&self) -> f64 {
        let n = self.len();
        (0..n)
            .map(|k| ((self.vertices[(k + 1) % n] - self.vertices[k]).norm() - self.side_length).abs())
            .fold(0.0, f64::max)
    }

    /// Spread in height of the `M` points `X(2 pi k / M)`.
    pub fn coplanarity_defect(&self) -> f64 {
        let heights: Vec<f64> = (0..self.m as usize).map(|k| self.vertices[k * self.stride()].z).collect();
        let lo = heights.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = heights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        hi - lo
    }

    /// Largest `|X(s + 2 pi / M) - R_z(2 pi / M) X(s)|` over vertices.
    pub fn rotation_symmetry_defect(&self) -> f64 {
        let n = self.len();
        let stride = self.stride();
        let rot = Rotation3::from_axis_angle(&Vector3::z_axis(), 2.0 * PI / self.m as f64);
        (0..n)
            .map(|k| (self.vertices[(k + stride) % n] - rot * self.vertices[k]).norm())
            .fold(0.0, f64::max)
    }

    /// Mean height over arc length, which for equal sides is the vertex mean.
    pub fn mass_center_height(&self) -> f64 {
        self.vertices.iter().map(|v| v.z).sum::<f64>() / self.len() as f64 + self.vertical_offset
    }

    /// Position at arc length `s` by linear interpolation between vertices,
    /// including `vertical_offset`.
    pub fn position_at(&self, s: f64) -> Vector3<f64> {
        let n = self.len();
        let u = (s / self.side_length).rem_euclid(n as f64);
        let k = (u.floor() as usize).min(n - 1);
        let frac = u - k as f64;
        let a = self.vertices[k];
        let b = self.vertices[(k + 1) % n];
        let mut x = a + (b - a) * frac;
        x.z += self.vertical_offset;
        x
    }

    /// Tangent on the segment containing `s`.
    pub fn tangent_at(&self, s: f64) -> Vector3<f64> {
        let n = self.len();
        let u = (s / self.side_length).rem_euclid(n as f64);
        self.tangents[(u.floor() as usize).min(n - 1)]
    }

    fn transform(&mut self, rotation: &Matrix3<f64>) {
        for v in self.vertices.iter_mut() {
            *v = rotation * *v;
        }
        for t in self.tangents.iter_mut() {
            *t = rotation * *t;
        }
    }
}

/// Exact polygon at `t_pq`, placed in space by [`align_polygon`].
pub fn build_polygon(time: &RationalTime) -> Result<SkewPolygon> {
    let closure = closure_residual(time);
    if closure.trace > CLOSURE_FAILURE_TOL {
        return Err(VfeError::ClosureFailure { residual: closure.trace, tolerance: CLOSURE_FAILURE_TOL });
    }
    let train = delta_train(time);
    let segments = time.segments();
    let frames = propagate_frame(&train, &Frame::identity(), segments)?;
    let mut raw = SkewPolygon::from_tangents(time.m, frames.iter().map(Frame::tangent).collect())?;
    if raw.closure_gap > CLOSURE_FAILURE_TOL {
        return Err(VfeError::ClosureFailure { residual: raw.closure_gap, tolerance: CLOSURE_FAILURE_TOL });
    }
    let q = train.coefficients.len();
    raw.virtual_vertex = (0..segments).map(|k| train.coefficients[k % q].norm() == 0.0).collect();
    raw.meta = Some(PolygonMeta { time: *time, rho: train.rho, psi_hat0: train.psi_hat0 });
    align_polygon(raw, time.m)
}

/// Rigid placement from the symmetries of the regular polygon: the points
/// `X(2 pi k / M)` span a horizontal plane traversed counterclockwise,
/// `X(2 pi / M) - X(0)` points along `+x`, and their mean lies on the z-axis.
/// The height is left as produced.
pub fn align_polygon(mut raw: SkewPolygon, m: u32) -> Result<SkewPolygon> {
    let n = raw.len();
    if m == 0 || n == 0 || !n.is_multiple_of(m as usize) {
        return Err(VfeError::invalid(format!("{n} vertices are not a multiple of M = {m}")));
    }
    raw.m = m;
    let stride = raw.stride();
    let x0 = raw.vertices[0];
    let chord_plus = raw.vertices[stride % n] - x0;
    let chord_minus = x0 - raw.vertices[(n - stride) % n];
    let (v_plus, v_minus) = match (chord_plus.try_normalize(1e-14), chord_minus.try_normalize(1e-14)) {
        (Some(a), Some(b)) => (a, b),
        _ => return Err(VfeError::DegenerateAlignment("zero chord across s = 0".into())),
    };
    let w = v_minus
        .cross(&v_plus)
        .try_normalize(1e-14)
        .ok_or_else(|| VfeError::DegenerateAlignment("chords across s = 0 are parallel".into()))?;

    let up = Vector3::z();
    let r1 = match Unit::try_new(w.cross(&up), 1e-14) {
        Some(axis) => Rotation3::from_axis_angle(&axis, w.z.clamp(-1.0, 1.0).acos()),
        None if w.z > 0.0 => Rotation3::identity(),
        None => Rotation3::from_axis_angle(&Vector3::x_axis(), PI),
    };
    let v_new = r1 * v_plus;
    let r2 = Rotation3::from_axis_angle(&Vector3::z_axis(), -v_new.y.atan2(v_new.x));
    let rotation = (r2 * r1).into_inner();
    raw.transform(&rotation);

    let mut center = Vector3::zeros();
    for k in 0..m as usize {
        center += raw.vertices[k * stride];
    }
    center /= m as f64;
    for v in raw.vertices.iter_mut() {
        v.x -= center.x;
        v.y -= center.y;
    }
    Ok(raw)
}
