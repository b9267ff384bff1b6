//! Exact solution of the binormal flow at rational times.
//!
//! At `t_pq = (2 pi / M^2)(p / q)` the curvature function of an evolving
//! regular `M`-gon is a train of `q` Dirac deltas per initial side whose
//! coefficients are generalized quadratic Gauss sums `G(-p, m, q)`. Crossing
//! a delta of strength `rho e^{i theta}` rotates the `(T, e1, e2)` frame by a
//! closed-form rotation; chaining these rotations and integrating the
//! tangent yields the skew polygon, which is then placed in space using the
//! rotation and mirror symmetries of the regular polygon.

mod frame;
mod polygon;

use std::f64::consts::PI;

use num_complex::Complex64;
use num_integer::Integer;
use serde::{Deserialize, Serialize};

use crate::error::{Result, VfeError};
use crate::gauss::{gauss_sum_closed, GaussArgs};

pub use frame::{closure_residual, corner_rotation, propagate_frame, Closure, Frame};
pub use polygon::{align_polygon, build_polygon, PolygonMeta, SkewPolygon};

/// Tolerance on the trace residual beyond which a polygon is declared open.
pub const CLOSURE_FAILURE_TOL: f64 = 1e-8;

/// The rational time `t_pq = (2 pi / M^2)(p / q)` for an initial `M`-gon.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RationalTime {
    pub m: u32,
    pub p: i64,
    pub q: i64,
}

impl RationalTime {
    pub fn new(m: u32, p: i64, q: i64) -> Result<Self> {
        if m < 3 {
            return Err(VfeError::invalid(format!("need at least 3 sides, got M = {m}")));
        }
        if q < 1 {
            return Err(VfeError::invalid(format!("q must be positive, got {q}")));
        }
        if p.gcd(&q) != 1 {
            return Err(VfeError::invalid(format!("gcd({p}, {q}) != 1")));
        }
        Ok(RationalTime { m, p, q })
    }

    /// Reduces `num / den` to lowest terms first.
    pub fn from_fraction(m: u32, num: i64, den: i64) -> Result<Self> {
        if den < 1 {
            return Err(VfeError::invalid(format!("denominator must be positive, got {den}")));
        }
        let g = num.gcd(&den).max(1);
        Self::new(m, num / g, den / g)
    }

    /// Time period of the polygon dynamics, `2 pi / M^2`.
    pub fn period(m: u32) -> f64 {
        2.0 * PI / (m as f64 * m as f64)
    }

    pub fn value(&self) -> f64 {
        Self::period(self.m) * self.p as f64 / self.q as f64
    }

    /// Number of Dirac deltas over the whole curve, counting vanishing ones.
    pub fn segments(&self) -> usize {
        self.m as usize * self.q as usize
    }
}

/// Curvature function on one period `[0, 2 pi / M)` at a rational time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaTrain {
    pub time: RationalTime,
    /// Arc-length positions `2 pi m / (M q)`, `m = 0..q`.
    pub positions: Vec<f64>,
    /// `alpha_m + i beta_m`; zero where the Gauss sum vanishes.
    pub coefficients: Vec<Complex64>,
    pub rho: f64,
    pub psi_hat0: f64,
}

impl DeltaTrain {
    pub fn nonzero_count(&self) -> usize {
        self.coefficients.iter().filter(|c| c.norm() > 0.0).count()
    }
}

/// Angle between adjacent sides of the polygon at `t_pq`:
/// `cos rho = 2 cos^{2/q}(pi/M) - 1` for odd `q` and `2 cos^{4/q}(pi/M) - 1`
/// for even `q`.
pub fn rho_angle(m: u32, q: i64) -> f64 {
    assert!(m >= 3 && q >= 1, "rho_angle: need M >= 3 and q >= 1");
    let exponent = if q % 2 == 1 { 2.0 / q as f64 } else { 4.0 / q as f64 };
    let cos_rho = 2.0 * (PI / m as f64).cos().powf(exponent) - 1.0;
    cos_rho.clamp(-1.0, 1.0).acos()
}

/// Zeroth Fourier coefficient of the curvature function, chosen real and
/// positive so that the polygon closes.
pub fn psi_hat0(time: &RationalTime) -> f64 {
    let rho = rho_angle(time.m, time.q);
    let m = time.m as f64;
    let q = time.q as f64;
    let root = if time.q % 2 == 1 { q.sqrt() } else { (q / 2.0).sqrt() };
    m * root / (2.0 * PI) * rho
}

/// Limit of [`psi_hat0`] as `q` grows without bound.
pub fn psi_hat0_limit(m: u32) -> f64 {
    let m = m as f64;
    m * 2f64.sqrt() / PI * (-(PI / m).cos().ln()).sqrt()
}

/// Delta coefficients `(2 pi / (M q)) psi_hat0 G(-p, m, q)` on one period.
pub fn delta_train(time: &RationalTime) -> DeltaTrain {
    let RationalTime { m, p, q } = *time;
    let rho = rho_angle(m, q);
    let psi0 = psi_hat0(time);
    let spacing = 2.0 * PI / (m as f64 * q as f64);
    let scale = spacing * psi0;
    let positions = (0..q).map(|k| k as f64 * spacing).collect();
    let coefficients = (0..q)
        .map(|k| {
            let args = GaussArgs { a: -p, b: k, c: q };
            gauss_sum_closed(args).expect("RationalTime guarantees gcd(p, q) = 1") * scale
        })
        .collect();
    DeltaTrain { time: *time, positions, coefficients, rho, psi_hat0: psi0 }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gauss::gauss_sum_direct;

    #[test]
    fn rational_time_validation() {
        assert!(RationalTime::new(2, 1, 1).is_err());
        assert!(RationalTime::new(3, 2, 4).is_err());
        assert!(RationalTime::new(3, 1, 0).is_err());
        let t = RationalTime::from_fraction(3, 630, 1260).unwrap();
        assert_eq!((t.p, t.q), (1, 2));
        let zero = RationalTime::from_fraction(4, 0, 1260).unwrap();
        assert_eq!((zero.p, zero.q), (0, 1));
        assert!((RationalTime::new(3, 1, 3).unwrap().value() - 2.0 * PI / 27.0).abs() < 1e-15);
    }

    #[test]
    fn rho_small_cases() {
        assert!((rho_angle(3, 1) - 2.0 * PI / 3.0).abs() < 1e-14);
        assert!((rho_angle(3, 2) - 2.0 * PI / 3.0).abs() < 1e-14);
        let expected = (2.0 * (PI / 4.0).cos().powf(2.0 / 3.0) - 1.0).acos();
        assert_eq!(rho_angle(4, 3), expected);
    }

    #[test]
    fn rho_equal_for_q_and_2q_when_q_odd() {
        for m in 3..=12 {
            for q in (1..=41).step_by(2) {
                assert_eq!(rho_angle(m, q), rho_angle(m, 2 * q), "M={m} q={q}");
            }
        }
    }

    #[test]
    fn psi_hat0_examples() {
        for m in 3..=20 {
            let half = RationalTime::new(m, 1, 2).unwrap();
            assert!((psi_hat0(&half) - 1.0).abs() < 1e-13, "M={m}");
            let start = RationalTime::new(m, 1, 1).unwrap();
            assert!((psi_hat0(&start) - 1.0).abs() < 1e-13, "M={m}");
        }
    }

    #[test]
    fn psi_hat0_large_q_limit() {
        let t = RationalTime::new(3, 1, 1_000_001).unwrap();
        assert!((psi_hat0(&t) - psi_hat0_limit(3)).abs() < 1e-4);
    }

    #[test]
    fn train_at_time_zero_is_one_real_delta() {
        let train = delta_train(&RationalTime::new(3, 1, 1).unwrap());
        assert_eq!(train.coefficients.len(), 1);
        let c = train.coefficients[0];
        assert!((c - Complex64::new(2.0 * PI / 3.0, 0.0)).norm() < 1e-13);
        assert!((c.norm() - train.rho).abs() < 1e-13);
    }

    #[test]
    fn train_at_half_period_shifts_delta_to_midpoint() {
        for m in 3..=10u32 {
            let train = delta_train(&RationalTime::new(m, 1, 2).unwrap());
            assert_eq!(train.coefficients[0], Complex64::new(0.0, 0.0));
            let c = train.coefficients[1];
            assert!((c - Complex64::new(2.0 * PI / m as f64, 0.0)).norm() < 1e-13, "M={m}");
        }
    }

    #[test]
    fn train_parity_pattern_q_even() {
        let train = delta_train(&RationalTime::new(3, 1, 4).unwrap());
        assert_eq!(train.nonzero_count(), 2);
        for c in train.coefficients.iter().filter(|c| c.norm() > 0.0) {
            assert!((c.norm() - train.rho).abs() < 1e-12);
        }
        for q in (2..=30).step_by(2) {
            for p in (1..q).filter(|p| p.gcd(&q) == 1) {
                let train = delta_train(&RationalTime::new(5, p, q).unwrap());
                assert_eq!(train.nonzero_count(), q as usize / 2);
            }
        }
    }

    #[test]
    fn train_coefficients_match_direct_sums() {
        let time = RationalTime::new(4, 3, 7).unwrap();
        let train = delta_train(&time);
        let scale = 2.0 * PI / 28.0 * train.psi_hat0;
        for (k, c) in train.coefficients.iter().enumerate() {
            let direct = gauss_sum_direct(GaussArgs { a: -3, b: k as i64, c: 7 }) * scale;
            assert!((c - direct).norm() < 1e-12);
            assert!((c.norm() - train.rho).abs() < 1e-12);
        }
    }
}
