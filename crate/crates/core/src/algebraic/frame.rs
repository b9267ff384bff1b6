use nalgebra::{Matrix3, Quaternion, Rotation3, UnitQuaternion, Vector3};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{delta_train, DeltaTrain, RationalTime};
use crate::error::{Result, VfeError};

const ORTHONORMAL_TOL: f64 = 1e-12;

/// Orthonormal right-handed triple `(T, e1, e2)` stored as the rows of a matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Frame {
    rows: Matrix3<f64>,
}

impl Frame {
    pub fn identity() -> Self {
        Frame { rows: Matrix3::identity() }
    }

    pub fn from_vectors(t: Vector3<f64>, e1: Vector3<f64>, e2: Vector3<f64>) -> Result<Self> {
        let frame = Frame { rows: Matrix3::from_rows(&[t.transpose(), e1.transpose(), e2.transpose()]) };
        let defect = frame.orthonormality_defect();
        if defect > ORTHONORMAL_TOL {
            return Err(VfeError::invalid(format!(
                "frame is not orthonormal and right-handed (defect {defect:e})"
            )));
        }
        Ok(frame)
    }

    pub fn tangent(&self) -> Vector3<f64> {
        self.rows.row(0).transpose()
    }

    pub fn e1(&self) -> Vector3<f64> {
        self.rows.row(1).transpose()
    }

    pub fn e2(&self) -> Vector3<f64> {
        self.rows.row(2).transpose()
    }

    pub fn as_matrix(&self) -> &Matrix3<f64> {
        &self.rows
    }

    /// Largest of `|R R^T - I|` entries and `|det R - 1|`.
    pub fn orthonormality_defect(&self) -> f64 {
        let gram = self.rows * self.rows.transpose() - Matrix3::identity();
        gram.amax().max((self.rows.determinant() - 1.0).abs())
    }

    fn rotated(&self, corner: &Matrix3<f64>) -> Frame {
        Frame { rows: corner * self.rows }
    }
}

/// Frame jump across a delta of strength `rho e^{i theta}`: the rotation by
/// `rho` about the axis `(0, sin theta, -cos theta)`, acting on the stacked rows
/// `(T, e1, e2)`.
pub fn corner_rotation(coefficient: Complex64) -> Matrix3<f64> {
    let rho = coefficient.norm();
    if rho == 0.0 {
        return Matrix3::identity();
    }
    let theta = coefficient.arg();
    let (s_r, c_r) = rho.sin_cos();
    let (s_t, c_t) = theta.sin_cos();
    Matrix3::new(
        c_r,
        s_r * c_t,
        s_r * s_t,
        -s_r * c_t,
        c_r * c_t * c_t + s_t * s_t,
        (c_r - 1.0) * c_t * s_t,
        -s_r * s_t,
        (c_r - 1.0) * c_t * s_t,
        c_r * s_t * s_t + c_t * c_t,
    )
}

/// Frames on the segments `k = 0..segments`, where segment `k` follows the
/// `k`-th delta: `F_k = M_{k mod q} ... M_0 F_initial`.
pub fn propagate_frame(train: &DeltaTrain, initial: &Frame, segments: usize) -> Result<Vec<Frame>> {
    let q = train.coefficients.len();
    if q == 0 || !segments.is_multiple_of(q) {
        return Err(VfeError::invalid(format!(
            "segment count {segments} is not a multiple of the train length {q}"
        )));
    }
    let defect = initial.orthonormality_defect();
    if defect > ORTHONORMAL_TOL {
        return Err(VfeError::invalid(format!("initial frame is not orthonormal (defect {defect:e})")));
    }
    // M_k is periodic in k with period q, so F_{jq+r} = (M_r ... M_0) P^j F_0
    // with P the full-period product. Products are composed as quaternions and
    // expanded with the homogeneous formula, which is orthogonal to rounding
    // for any quaternion norm; long matrix chains accumulate ~1e-17 of
    // orthogonality defect per product.
    let mut partial = Vec::with_capacity(q);
    let mut acc = Quaternion::identity();
    for &c in &train.coefficients {
        acc = rotation_quaternion(&corner_rotation(c)) * acc;
        partial.push(acc);
    }
    let period = acc;
    let mut frames = Vec::with_capacity(segments);
    let mut power = Quaternion::identity();
    for _ in 0..segments / q {
        frames.extend(partial.iter().map(|p| initial.rotated(&homogeneous_matrix(&(p * power)))));
        power = period * power;
    }
    Ok(frames)
}

fn rotation_quaternion(m: &Matrix3<f64>) -> Quaternion<f64> {
    UnitQuaternion::from_rotation_matrix(&Rotation3::from_matrix_unchecked(*m)).into_inner()
}

/// Rotation matrix of `q / |q|`, computed without normalizing `q` first.
fn homogeneous_matrix(q: &Quaternion<f64>) -> Matrix3<f64> {
    let (w, x, y, z) = (q.w, q.i, q.j, q.k);
    let n = q.norm_squared();
    Matrix3::new(
        w * w + x * x - y * y - z * z,
        2.0 * (x * y - w * z),
        2.0 * (x * z + w * y),
        2.0 * (x * y + w * z),
        w * w - x * x + y * y - z * z,
        2.0 * (y * z - w * x),
        2.0 * (x * z - w * y),
        2.0 * (y * z + w * x),
        w * w - x * x - y * y + z * z,
    ) / n
}

/// How far the product of one period of corner rotations is from being a
/// rotation by `2 pi / M`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Closure {
    /// `|Tr(M) - 1 - 2 cos(2 pi / M)|`.
    pub trace: f64,
    /// Largest entry of `M^M - I`.
    pub power: f64,
}

impl Closure {
    pub fn max(&self) -> f64 {
        self.trace.max(self.power)
    }
}

pub fn closure_residual(time: &RationalTime) -> Closure {
    let train = delta_train(time);
    let period = train
        .coefficients
        .iter()
        .fold(Matrix3::identity(), |acc, &c| corner_rotation(c) * acc);
    let m = time.m as f64;
    let trace = (period.trace() - 1.0 - 2.0 * (2.0 * std::f64::consts::PI / m).cos()).abs();
    let mut power = Matrix3::identity();
    for _ in 0..time.m {
        power = period * power;
    }
    Closure { trace, power: (power - Matrix3::identity()).amax() }
}
