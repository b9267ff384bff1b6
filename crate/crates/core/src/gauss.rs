//! Generalized quadratic Gauss sums
//!
//! ```text
//! G(a, b, c) = sum_{l=0}^{c-1} exp(2 pi i (a l^2 + b l) / c)
//! ```
//!
//! Two independent evaluation paths are provided: [`gauss_sum_direct`] sums
//! the series term by term and serves as the reference, while
//! [`gauss_sum_closed`] reduces the sum to Gauss's classical `b = 0` values by
//! splitting `c = 2^r c'` multiplicatively and completing the square in each
//! factor. All modular arithmetic is exact; only the final value is a float.

use std::f64::consts::PI;

use num_complex::Complex64;
use num_integer::Integer;

use crate::error::{Result, VfeError};

/// Arguments `(a, b, c)` of `G(a, b, c)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct GaussArgs {
    pub a: i64,
    pub b: i64,
    pub c: i64,
}

impl GaussArgs {
    pub fn new(a: i64, b: i64, c: i64) -> Result<Self> {
        if c < 1 {
            return Err(VfeError::invalid(format!("modulus c must be >= 1, got {c}")));
        }
        Ok(GaussArgs { a, b, c })
    }

    fn check_coprime(&self) -> Result<()> {
        if self.c < 1 {
            return Err(VfeError::invalid(format!("modulus c must be >= 1, got {}", self.c)));
        }
        if self.a.gcd(&self.c) != 1 {
            return Err(VfeError::invalid(format!(
                "gcd({}, {}) != 1; closed form needs coprime a and c",
                self.a, self.c
            )));
        }
        Ok(())
    }
}

/// `exp(2 pi i num / den)` with `num` reduced exactly modulo `den` first.
fn root_of_unity(num: i128, den: i128) -> Complex64 {
    let r = num.rem_euclid(den);
    Complex64::from_polar(1.0, 2.0 * PI * (r as f64) / (den as f64))
}

/// Literal summation of `G(a, b, c)`. Accepts any `a`, `b` and `c >= 1`.
pub fn gauss_sum_direct(args: GaussArgs) -> Complex64 {
    let GaussArgs { a, b, c } = args;
    assert!(c >= 1, "gauss_sum_direct: c must be >= 1");
    let (a, b, c) = (a as i128, b as i128, c as i128);
    (0..c).map(|l| root_of_unity(a * l * l + b * l, c)).sum()
}

/// Jacobi symbol `(a / n)` for odd `n >= 1`.
pub fn jacobi_symbol(a: i64, n: i64) -> Result<i32> {
    if n < 1 || n % 2 == 0 {
        return Err(VfeError::invalid(format!(
            "Jacobi symbol needs an odd positive modulus, got {n}"
        )));
    }
    let mut a = a.rem_euclid(n);
    let mut n = n;
    let mut sign = 1;
    while a != 0 {
        while a % 2 == 0 {
            a /= 2;
            if matches!(n % 8, 3 | 5) {
                sign = -sign;
            }
        }
        std::mem::swap(&mut a, &mut n);
        if a % 4 == 3 && n % 4 == 3 {
            sign = -sign;
        }
        a %= n;
    }
    Ok(if n == 1 { sign } else { 0 })
}

/// Inverse of `a` modulo `c`, in `[0, c)`, by the extended Euclidean algorithm.
pub fn mod_inverse(a: i64, c: i64) -> Result<i64> {
    if c < 1 {
        return Err(VfeError::invalid(format!("modulus must be >= 1, got {c}")));
    }
    let (mut r0, mut r1) = (a.rem_euclid(c) as i128, c as i128);
    let (mut s0, mut s1) = (1i128, 0i128);
    while r1 != 0 {
        let q = r0 / r1;
        (r0, r1) = (r1, r0 - q * r1);
        (s0, s1) = (s1, s0 - q * s1);
    }
    if r0 != 1 && c != 1 {
        return Err(VfeError::NoInverse { a, c });
    }
    Ok(s0.rem_euclid(c as i128) as i64)
}

/// Closed-form evaluation of `G(a, b, c)`; requires `gcd(a, c) = 1`.
pub fn gauss_sum_closed(args: GaussArgs) -> Result<Complex64> {
    args.check_coprime()?;
    let GaussArgs { a, b, c } = args;
    let twos = c.trailing_zeros();
    let odd = c >> twos;
    let pow2 = 1i64 << twos;
    if pow2 == 1 {
        return Ok(closed_odd(a, b, odd));
    }
    if odd == 1 {
        return Ok(closed_pow2(a, b, pow2));
    }
    // G(a, b, c' 2^r) = G(a c', b, 2^r) G(a 2^r, b, c')
    let a_pow2 = ((a as i128) * (odd as i128)).rem_euclid(pow2 as i128) as i64;
    let a_odd = ((a as i128) * (pow2 as i128)).rem_euclid(odd as i128) as i64;
    Ok(closed_pow2(a_pow2, b, pow2) * closed_odd(a_odd, b, odd))
}

/// Odd modulus: complete the square with the inverse of `4a`.
fn closed_odd(a: i64, b: i64, c: i64) -> Complex64 {
    debug_assert!(c % 2 == 1);
    if c == 1 {
        return Complex64::new(1.0, 0.0);
    }
    let a = a.rem_euclid(c);
    let phi = mod_inverse((4 * a as i128).rem_euclid(c as i128) as i64, c)
        .expect("4a is invertible for odd c coprime to a");
    let shift = root_of_unity(-(phi as i128) * (b as i128) * (b as i128), c as i128);
    let legendre = jacobi_symbol(a, c).expect("c is odd") as f64;
    let root = (c as f64).sqrt();
    let base = if c % 4 == 1 {
        Complex64::new(legendre * root, 0.0)
    } else {
        Complex64::new(0.0, legendre * root)
    };
    shift * base
}

/// Power-of-two modulus (`a` odd).
fn closed_pow2(a: i64, b: i64, c: i64) -> Complex64 {
    debug_assert!(c >= 2 && c.count_ones() == 1);
    let a = a.rem_euclid(c);
    if c == 2 {
        return if b.rem_euclid(2) == 1 {
            Complex64::new(2.0, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        };
    }
    if b.rem_euclid(2) == 1 {
        return Complex64::new(0.0, 0.0);
    }
    let phi = mod_inverse(a, c).expect("a is odd");
    let half_b = (b / 2) as i128;
    // exp(-pi i phi b^2 / (2c)) = exp(-2 pi i phi (b/2)^2 / c)
    let shift = root_of_unity(-(phi as i128) * half_b * half_b, c as i128);
    let symbol = jacobi_symbol(c, a).expect("a is odd and positive") as f64;
    let i_pow = match a % 4 {
        1 => Complex64::new(0.0, 1.0),
        3 => Complex64::new(0.0, -1.0),
        _ => unreachable!("a is odd"),
    };
    shift * (Complex64::new(1.0, 0.0) + i_pow) * (symbol * (c as f64).sqrt())
}

/// `|G(a, b, c)|` from the parity rule; requires `gcd(a, c) = 1`.
pub fn gauss_magnitude(args: GaussArgs) -> Result<f64> {
    args.check_coprime()?;
    let GaussArgs { b, c, .. } = args;
    let c_f = c as f64;
    if c % 2 == 1 {
        Ok(c_f.sqrt())
    } else if (c / 2 - b).rem_euclid(2) == 0 {
        Ok((2.0 * c_f).sqrt())
    } else {
        Ok(0.0)
    }
}
