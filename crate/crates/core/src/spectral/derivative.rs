use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::Vector3;
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Result, VfeError};

/// How a field transforms under the `2 pi / M` rotation about the z-axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Symmetry {
    /// Horizontal pair `Z = T1 + i T2`, multiplied by `e^{2 pi i / M}` per
    /// block; only frequencies `M k + 1` are present.
    Twisted,
    /// Vertical component, repeated per block; only frequencies `M k`.
    Invariant,
}

/// Derivative operators on the first `N / M` nodes of an `N`-point periodic grid.
pub trait TangentDerivatives {
    fn len(&self) -> usize;

    /// Fills `ts` and `tss` with the first and second arc-length derivatives of `t`.
    fn tangent_derivatives(&mut self, t: &[Vector3<f64>], ts: &mut [Vector3<f64>], tss: &mut [Vector3<f64>]);
}

/// Spectral `d/ds`, `d^2/ds^2` with `N / M`-point transforms.
pub struct ReducedSpectral {
    m: usize,
    total: usize,
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    /// `e^{-2 pi i j / N}`
    twist: Vec<Complex64>,
    twisted_weights: [Vec<Complex64>; 2],
    invariant_weights: [Vec<Complex64>; 2],
    buf_a: Vec<Complex64>,
    buf_b: Vec<Complex64>,
    buf_c: Vec<Complex64>,
    scratch: Vec<Complex64>,
}

/// Signed frequency `M k' + shift` for reduced index `k`, with `k' = k` or
/// `k - n` picked so the result lies in `[-N/2, N/2 - 1]`.
fn frequency(k: usize, n: usize, m: usize, shift: i64) -> i64 {
    let half = (n * m / 2) as i64;
    let a = (m * k) as i64 + shift;
    let b = a - (n * m) as i64;
    if (-half..half).contains(&a) {
        a
    } else {
        debug_assert!((-half..half).contains(&b));
        b
    }
}

fn weights(n: usize, m: usize, shift: i64) -> [Vec<Complex64>; 2] {
    let nyquist = -((n * m / 2) as i64);
    let first = (0..n)
        .map(|k| {
            let f = frequency(k, n, m, shift);
            if f == nyquist {
                Complex64::new(0.0, 0.0)
            } else {
                Complex64::new(0.0, f as f64)
            }
        })
        .collect();
    let second = (0..n)
        .map(|k| {
            let f = frequency(k, n, m, shift) as f64;
            Complex64::new(-f * f, 0.0)
        })
        .collect();
    [first, second]
}

impl ReducedSpectral {
    /// `m` may be 1, in which case this is an ordinary `N`-point operator.
    pub fn new(m: usize, total: usize) -> Result<Self> {
        if m == 0 || total == 0 || !total.is_multiple_of(m) {
            return Err(VfeError::invalid(format!("N = {total} is not a positive multiple of M = {m}")));
        }
        let n = total / m;
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        let scratch_len = forward.get_inplace_scratch_len().max(inverse.get_inplace_scratch_len());
        let twist = (0..n)
            .map(|j| Complex64::from_polar(1.0, -2.0 * PI * j as f64 / total as f64))
            .collect();
        Ok(ReducedSpectral {
            m,
            total,
            n,
            forward,
            inverse,
            twist,
            twisted_weights: weights(n, m, 1),
            invariant_weights: weights(n, m, 0),
            buf_a: vec![Complex64::default(); n],
            buf_b: vec![Complex64::default(); n],
            buf_c: vec![Complex64::default(); n],
            scratch: vec![Complex64::default(); scratch_len],
        })
    }

    pub fn sides(&self) -> usize {
        self.m
    }

    pub fn total_nodes(&self) -> usize {
        self.total
    }

    /// Derivative of order 1 or 2 of a reduced-grid field. For
    /// [`Symmetry::Invariant`] only the real part of the input is meaningful.
    pub fn derivative(&self, field: &[Complex64], order: u8, symmetry: Symmetry) -> Result<Vec<Complex64>> {
        if field.len() != self.n {
            return Err(VfeError::invalid(format!(
                "field has {} samples, reduced grid has {}",
                field.len(),
                self.n
            )));
        }
        if !(1..=2).contains(&order) {
            return Err(VfeError::invalid(format!("derivative order must be 1 or 2, got {order}")));
        }
        let w = match symmetry {
            Symmetry::Twisted => &self.twisted_weights[order as usize - 1],
            Symmetry::Invariant => &self.invariant_weights[order as usize - 1],
        };
        let mut buf: Vec<Complex64> = match symmetry {
            Symmetry::Twisted => field.iter().zip(&self.twist).map(|(f, t)| f * t).collect(),
            Symmetry::Invariant => field.iter().map(|f| Complex64::new(f.re, 0.0)).collect(),
        };
        self.forward.process(&mut buf);
        for (b, w) in buf.iter_mut().zip(w) {
            *b *= w;
        }
        self.inverse.process(&mut buf);
        let scale = 1.0 / self.n as f64;
        Ok(match symmetry {
            Symmetry::Twisted => buf.iter().zip(&self.twist).map(|(b, t)| b * t.conj() * scale).collect(),
            Symmetry::Invariant => buf.iter().map(|b| Complex64::new(b.re * scale, 0.0)).collect(),
        })
    }
}

impl TangentDerivatives for ReducedSpectral {
    fn len(&self) -> usize {
        self.n
    }

    fn tangent_derivatives(&mut self, t: &[Vector3<f64>], ts: &mut [Vector3<f64>], tss: &mut [Vector3<f64>]) {
        let n = self.n;
        let scale = 1.0 / n as f64;

        // Horizontal pair: one forward and two inverse transforms.
        for j in 0..n {
            self.buf_a[j] = Complex64::new(t[j].x, t[j].y) * self.twist[j];
        }
        self.forward.process_with_scratch(&mut self.buf_a, &mut self.scratch);
        let [w1, w2] = &self.twisted_weights;
        for k in 0..n {
            self.buf_b[k] = self.buf_a[k] * w1[k];
            self.buf_c[k] = self.buf_a[k] * w2[k];
        }
        self.inverse.process_with_scratch(&mut self.buf_b, &mut self.scratch);
        self.inverse.process_with_scratch(&mut self.buf_c, &mut self.scratch);
        for j in 0..n {
            let untwist = self.twist[j].conj() * scale;
            let d1 = self.buf_b[j] * untwist;
            let d2 = self.buf_c[j] * untwist;
            ts[j].x = d1.re;
            ts[j].y = d1.im;
            tss[j].x = d2.re;
            tss[j].y = d2.im;
        }

        // Vertical component is real with real derivatives, so both orders
        // come back from one inverse transform as real and imaginary parts.
        for j in 0..n {
            self.buf_a[j] = Complex64::new(t[j].z, 0.0);
        }
        self.forward.process_with_scratch(&mut self.buf_a, &mut self.scratch);
        let [w1, w2] = &self.invariant_weights;
        let i = Complex64::new(0.0, 1.0);
        for k in 0..n {
            self.buf_b[k] = self.buf_a[k] * (w1[k] + i * w2[k]);
        }
        self.inverse.process_with_scratch(&mut self.buf_b, &mut self.scratch);
        for j in 0..n {
            ts[j].z = self.buf_b[j].re * scale;
            tss[j].z = self.buf_b[j].im * scale;
        }
    }
}

/// Component-wise `N`-point spectral derivatives with no symmetry assumed.
pub struct FullSpectral {
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    first: Vec<Complex64>,
    second: Vec<Complex64>,
    buf: Vec<Complex64>,
    out: Vec<Complex64>,
}

impl FullSpectral {
    pub fn new(n: usize) -> Result<Self> {
        if n < 2 || !n.is_multiple_of(2) {
            return Err(VfeError::invalid(format!("full grid needs an even node count, got {n}")));
        }
        let mut planner = FftPlanner::new();
        let [first, second] = weights(n, 1, 0);
        Ok(FullSpectral {
            n,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
            first,
            second,
            buf: vec![Complex64::default(); n],
            out: vec![Complex64::default(); n],
        })
    }
}

impl TangentDerivatives for FullSpectral {
    fn len(&self) -> usize {
        self.n
    }

    fn tangent_derivatives(&mut self, t: &[Vector3<f64>], ts: &mut [Vector3<f64>], tss: &mut [Vector3<f64>]) {
        let scale = 1.0 / self.n as f64;
        let i = Complex64::new(0.0, 1.0);
        for c in 0..3 {
            for j in 0..self.n {
                self.buf[j] = Complex64::new(t[j][c], 0.0);
            }
            self.forward.process(&mut self.buf);
            for k in 0..self.n {
                self.out[k] = self.buf[k] * (self.first[k] + i * self.second[k]);
            }
            self.inverse.process(&mut self.out);
            for j in 0..self.n {
                ts[j][c] = self.out[j].re * scale;
                tss[j][c] = self.out[j].im * scale;
            }
        }
    }
}
