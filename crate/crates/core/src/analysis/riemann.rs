use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, VfeError};
use crate::spectral::Trajectory;

/// Terms kept in the theta-type series for `phi`.
pub const DEFAULT_PHI_TERMS: usize = 8192;
/// Range of `|t - t_pq|`, in units of the period, used by the Hölder fit.
pub const DEFAULT_HOLDER_WINDOW: (f64, f64) = (1e-4, 1e-2);
pub const MIN_HOLDER_SAMPLES: usize = 8;

/// Corner trajectory in the plane through the z-axis:
/// `z(t) = -|(X1(0,t), X2(0,t))| + i X3(0,t)`.
pub fn z_of_t(traj: &Trajectory) -> Vec<(f64, Complex64)> {
    traj.times
        .iter()
        .zip(&traj.corner)
        .map(|(&t, x)| (t, Complex64::new(-x.x.hypot(x.y), x.z)))
        .collect()
}

/// `z_M(tau) = z(P tau) - i c_M P tau` on `tau in [0, 1]`, with `P = 2 pi / M^2`.
pub fn z_normalized(traj: &Trajectory, c_m: f64) -> Vec<(f64, Complex64)> {
    let period = 2.0 * PI / (traj.spec.m as f64).powi(2);
    z_of_t(traj)
        .into_iter()
        .map(|(t, z)| (t / period, z - Complex64::new(0.0, c_m * t)))
        .collect()
}

/// `phi(t) = -sum_{k=1}^{K} e^{-2 pi i k^2 t} / (pi k^2)`.
pub fn phi_series(t: f64, terms: usize) -> Complex64 {
    // Smallest terms first; phases reduced modulo one before scaling by 2 pi.
    let mut sum = Complex64::new(0.0, 0.0);
    for k in (1..=terms as u64).rev() {
        let k2 = (k * k) as f64;
        let phase = (k2 * t).rem_euclid(1.0);
        sum += Complex64::from_polar(1.0 / (PI * k2), -2.0 * PI * phase);
    }
    -sum
}

/// `phi(i / intervals)` for `i = 0..=intervals`. Phases are exact integer
/// residues `k^2 i mod intervals`, looked up in a table of roots of unity.
/// Each value sums the same terms in the same order as [`phi_series`].
pub fn phi_uniform_grid(intervals: usize, terms: usize) -> Vec<Complex64> {
    assert!(intervals > 0, "phi_uniform_grid: need at least one interval");
    const CHUNK: usize = 4096;
    let n = intervals as u64;
    let roots: Vec<Complex64> = (0..n)
        .map(|r| Complex64::from_polar(1.0, -2.0 * PI * r as f64 / n as f64))
        .collect();
    let mut out = vec![Complex64::new(0.0, 0.0); intervals + 1];
    out.par_chunks_mut(CHUNK).enumerate().for_each(|(c, chunk)| {
        let first = (c * CHUNK) as u64;
        for k in (1..=terms as u64).rev() {
            let step = (k * k) % n;
            let w = 1.0 / (PI * (k * k) as f64);
            let mut r = ((step as u128 * first as u128) % n as u128) as u64;
            for v in chunk.iter_mut() {
                *v += roots[r as usize] * w;
                r += step;
                if r >= n {
                    r -= n;
                }
            }
        }
        for v in chunk.iter_mut() {
            *v = -*v;
        }
    });
    out
}

/// Real scaling and complex shift minimising `sum |phi - lambda z - mu|^2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AffineFit {
    pub lambda: f64,
    pub mu: Complex64,
    /// `max |phi - lambda z - mu|`.
    pub max_abs_err: f64,
    /// `max |(phi - lambda z - mu) / phi|` over samples with `phi != 0`.
    pub max_rel_err: f64,
}

pub fn affine_fit(z: &[Complex64], phi: &[Complex64]) -> Result<AffineFit> {
    if z.len() != phi.len() {
        return Err(VfeError::invalid(format!("{} z samples but {} phi samples", z.len(), phi.len())));
    }
    if z.is_empty() {
        return Err(VfeError::invalid("no samples to fit"));
    }
    let n = z.len() as f64;
    let z_mean = z.iter().sum::<Complex64>() / n;
    let phi_mean = phi.iter().sum::<Complex64>() / n;
    let var = z.iter().map(|v| (v - z_mean).norm_sqr()).sum::<f64>() / n;
    let scale = z.iter().map(|v| v.norm_sqr()).sum::<f64>() / n;
    if !(var > 1e-28 * scale.max(f64::MIN_POSITIVE)) {
        return Err(VfeError::DegenerateFit("z samples are constant".into()));
    }
    let cov = z
        .iter()
        .zip(phi)
        .map(|(a, b)| (a - z_mean) * (b - phi_mean).conj())
        .sum::<Complex64>()
        / n;
    let lambda = cov.re / var;
    let mu = phi_mean - lambda * z_mean;
    let mut max_abs_err = 0.0f64;
    let mut max_rel_err = 0.0f64;
    for (a, b) in z.iter().zip(phi) {
        let r = (b - lambda * a - mu).norm();
        max_abs_err = max_abs_err.max(r);
        if b.norm() > 0.0 {
            max_rel_err = max_rel_err.max(r / b.norm());
        }
    }
    Ok(AffineFit { lambda, mu, max_abs_err, max_rel_err })
}

/// Which side of `t_pq` the Hölder fit uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Side {
    Left,
    Right,
    Both,
}

/// Power-law fit `|z(t) - z(t_pq)| ~ C |t - t_pq|^alpha`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HolderFit {
    pub exponent: f64,
    /// `ln C`.
    pub intercept: f64,
    pub r_squared: f64,
    pub window: (f64, f64),
    pub side: Side,
    /// `(ln |t - t_pq|, ln |z(t) - z(t_pq)|)` for the samples in the window.
    pub pairs: Vec<(f64, f64)>,
}

/// Least-squares slope of `ln |z(t) - z(t_pq)|` against `ln |t - t_pq|` for
/// samples with `window.0 <= |t - t_pq| <= window.1`. `z(t_pq)` is taken
/// from the sample closest to `t_pq`.
pub fn holder_exponent(samples: &[(f64, Complex64)], t_pq: f64, window: (f64, f64), side: Side) -> Result<HolderFit> {
    let (lo, hi) = window;
    if !(lo > 0.0 && hi > lo) {
        return Err(VfeError::invalid(format!("window must satisfy 0 < lo < hi, got ({lo}, {hi})")));
    }
    let (_, z0) = samples
        .iter()
        .min_by(|a, b| (a.0 - t_pq).abs().total_cmp(&(b.0 - t_pq).abs()))
        .ok_or(VfeError::InsufficientData { found: 0, needed: MIN_HOLDER_SAMPLES })?;
    let pairs: Vec<(f64, f64)> = samples
        .iter()
        .filter(|(t, _)| match side {
            Side::Left => *t < t_pq,
            Side::Right => *t > t_pq,
            Side::Both => true,
        })
        .filter_map(|&(t, z)| {
            let d = (t - t_pq).abs();
            let dz = (z - z0).norm();
            (d >= lo && d <= hi && dz > 0.0).then(|| (d.ln(), dz.ln()))
        })
        .collect();
    if pairs.len() < MIN_HOLDER_SAMPLES {
        return Err(VfeError::InsufficientData { found: pairs.len(), needed: MIN_HOLDER_SAMPLES });
    }
    let n = pairs.len() as f64;
    let mx = pairs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pairs.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx = pairs.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
    let sxy = pairs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>();
    let syy = pairs.iter().map(|p| (p.1 - my).powi(2)).sum::<f64>();
    if sxx <= 0.0 {
        return Err(VfeError::DegenerateFit("all samples at the same distance from t_pq".into()));
    }
    let exponent = sxy / sxx;
    let r_squared = if syy > 0.0 { sxy * sxy / (sxx * syy) } else { 1.0 };
    Ok(HolderFit { exponent, intercept: my - exponent * mx, r_squared, window, side, pairs })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::GridSpec;
    use nalgebra::Vector3;
    use proptest::prelude::*;

    #[test]
    fn phi_at_zero() {
        let k = DEFAULT_PHI_TERMS;
        let v = phi_series(0.0, k);
        assert!(v.im.abs() < 1e-15);
        // The tail sum_{k > K} 1/(pi k^2) lies between 1/(pi (K+1)) and 1/(pi K).
        let gap = v.re + PI / 6.0;
        assert!(gap <= 1.0 / (PI * k as f64) && gap >= 1.0 / (PI * (k + 1) as f64), "{gap:e}");
    }

    #[test]
    fn phi_is_periodic() {
        for t in [0.0, 0.1, 0.37, 0.5] {
            assert!((phi_series(t + 1.0, 500) - phi_series(t, 500)).norm() < 1e-12);
        }
    }

    #[test]
    fn truncation_bound_on_grid() {
        let k = 256;
        let reference = 1 << 14;
        for i in 0..1000 {
            let t = i as f64 / 1000.0;
            let err = (phi_series(t, k) - phi_series(t, reference)).norm();
            assert!(err <= 1.0 / (PI * k as f64), "t={t}: {err:e}");
        }
    }

    #[test]
    fn uniform_grid_matches_direct_sum() {
        let grid = phi_uniform_grid(360, 700);
        assert_eq!(grid.len(), 361);
        for (i, v) in grid.iter().enumerate().step_by(7) {
            assert!((v - phi_series(i as f64 / 360.0, 700)).norm() < 1e-12, "i={i}");
        }
        assert_eq!(grid[0], grid[360]);
    }

    fn sample_phi(n: usize) -> Vec<Complex64> {
        phi_uniform_grid(n, 64)
    }

    #[test]
    fn affine_identity_and_synthetic() {
        let phi = sample_phi(200);
        let fit = affine_fit(&phi, &phi).unwrap();
        assert!((fit.lambda - 1.0).abs() < 1e-12);
        assert!(fit.mu.norm() < 1e-12);
        assert!(fit.max_abs_err < 1e-12);
        let shift = Complex64::new(1.0, 1.0);
        let z: Vec<Complex64> = phi.iter().map(|p| 2.0 * p + shift).collect();
        let fit = affine_fit(&z, &phi).unwrap();
        assert!((fit.lambda - 0.5).abs() < 1e-12);
        assert!((fit.mu + 0.5 * shift).norm() < 1e-12);
        assert!(fit.max_abs_err < 1e-12 && fit.max_rel_err < 1e-10);
    }

    #[test]
    fn affine_fit_errors() {
        let phi = sample_phi(20);
        assert!(matches!(
            affine_fit(&vec![Complex64::new(0.3, 0.1); 21], &phi),
            Err(VfeError::DegenerateFit(_))
        ));
        assert!(affine_fit(&phi[1..], &phi).is_err());
        assert!(affine_fit(&[], &[]).is_err());
    }

    proptest! {
        #[test]
        fn affine_residual_invariant_under_refit(a in 0.2f64..5.0, re in -3.0f64..3.0, im in -3.0f64..3.0) {
            let phi = sample_phi(100);
            let z: Vec<Complex64> = phi.iter().enumerate()
                .map(|(i, p)| 1.3 * p + Complex64::new(0.01 * (i as f64).sin(), 0.02 * (0.3 * i as f64).cos()))
                .collect();
            let base = affine_fit(&z, &phi).unwrap();
            let shift = Complex64::new(re, im);
            let moved: Vec<Complex64> = z.iter().map(|v| a * v + shift).collect();
            let refit = affine_fit(&moved, &phi).unwrap();
            prop_assert!((refit.max_abs_err - base.max_abs_err).abs() < 1e-12);
            prop_assert!((refit.lambda * a - base.lambda).abs() < 1e-10);
        }
    }

    fn power_law(alpha: f64, t0: f64) -> Vec<(f64, Complex64)> {
        (0..=20000)
            .map(|i| {
                let t = i as f64 / 20000.0;
                (t, Complex64::new((t - t0).abs().powf(alpha), 0.0))
            })
            .collect()
    }

    #[test]
    fn holder_on_exact_power_laws() {
        for alpha in [0.5, 1.0] {
            let fit = holder_exponent(&power_law(alpha, 0.2), 0.2, DEFAULT_HOLDER_WINDOW, Side::Both).unwrap();
            assert!((fit.exponent - alpha).abs() < 1e-3, "{}", fit.exponent);
            assert!(fit.r_squared > 0.999);
            let left = holder_exponent(&power_law(alpha, 0.2), 0.2, DEFAULT_HOLDER_WINDOW, Side::Left).unwrap();
            assert!(left.pairs.len() < fit.pairs.len());
            assert!((left.exponent - alpha).abs() < 1e-3);
        }
    }

    #[test]
    fn holder_needs_enough_samples() {
        let coarse: Vec<(f64, Complex64)> = power_law(0.5, 0.2).into_iter().step_by(1000).collect();
        assert!(matches!(
            holder_exponent(&coarse, 0.2, DEFAULT_HOLDER_WINDOW, Side::Both),
            Err(VfeError::InsufficientData { .. })
        ));
        assert!(holder_exponent(&power_law(0.5, 0.2), 0.2, (1e-2, 1e-4), Side::Both).is_err());
    }

    #[test]
    fn z_extraction() {
        let spec = GridSpec { m: 3, n: 24, steps: 2, t_final: 2.0 * PI / 9.0 };
        let traj = Trajectory {
            spec,
            times: vec![0.0, PI / 9.0, 2.0 * PI / 9.0],
            corner: vec![Vector3::new(3.0, -4.0, 0.0), Vector3::new(0.0, -1.0, 0.5), Vector3::new(3.0, -4.0, 1.0)],
            height: vec![0.0; 3],
            dumps: vec![],
        };
        let z = z_of_t(&traj);
        assert_eq!(z[0].1, Complex64::new(-5.0, 0.0));
        let c_m = 1.0 / (2.0 * PI / 9.0);
        let zm = z_normalized(&traj, c_m);
        assert!((zm[2].0 - 1.0).abs() < 1e-15);
        assert!((zm[2].1 - zm[0].1).norm() < 1e-15);
    }
}
