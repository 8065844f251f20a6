//! Modified Bessel functions of the second kind for integer and half-integer
//! order, and the scaled radial profiles `s^mu K_mu(s)` built from them.

use std::f64::consts::{FRAC_PI_2, PI};

use crate::error::{Error, Result};

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// `(K_0(s), K_1(s))` for `s > 0`.
///
/// Power series for `s <= 2`, Steed's continued fraction (Temme's CF2) above.
pub fn k0_k1(s: f64) -> (f64, f64) {
    debug_assert!(s > 0.0);
    if s <= 2.0 {
        k01_series(s)
    } else {
        k01_steed(s)
    }
}

fn k01_series(s: f64) -> (f64, f64) {
    let t = 0.25 * s * s;
    let log_term = (0.5 * s).ln();
    // term0_k = t^k / (k!)^2, term1_k = t^k / (k! (k+1)!)
    let mut term0 = 1.0;
    let mut term1 = 1.0;
    let mut harmonic = 0.0; // H_k
    let mut i0 = 1.0;
    let mut i1_sum = 1.0;
    let mut k0_sum = 0.0;
    // psi(k+1) + psi(k+2) = -2 gamma + H_k + H_{k+1}
    let mut k1_sum = -2.0 * EULER_GAMMA + 1.0;
    for k in 1..60 {
        let kf = k as f64;
        term0 *= t / (kf * kf);
        term1 *= t / (kf * (kf + 1.0));
        harmonic += 1.0 / kf;
        i0 += term0;
        i1_sum += term1;
        k0_sum += harmonic * term0;
        k1_sum += (-2.0 * EULER_GAMMA + 2.0 * harmonic + 1.0 / (kf + 1.0)) * term1;
        if term0 < 1e-18 * i0 && term1 < 1e-18 * i1_sum {
            break;
        }
    }
    let k0 = -(log_term + EULER_GAMMA) * i0 + k0_sum;
    let i1 = 0.5 * s * i1_sum;
    let k1 = 1.0 / s + log_term * i1 - 0.25 * s * k1_sum;
    (k0, k1)
}

fn k01_steed(x: f64) -> (f64, f64) {
    const EPS: f64 = 1e-17;
    let mut b = 2.0 * (1.0 + x);
    let mut d = 1.0 / b;
    let mut delh = d;
    let mut h = d;
    let mut q1 = 0.0;
    let mut q2 = 1.0;
    let a1 = 0.25;
    let mut q = a1;
    let mut c = a1;
    let mut a = -a1;
    let mut s = 1.0 + q * delh;
    for i in 2..10_000 {
        let fi = i as f64;
        a -= 2.0 * (fi - 1.0);
        c = -a * c / fi;
        let qnew = (q1 - b * q2) / a;
        q1 = q2;
        q2 = qnew;
        q += c * qnew;
        b += 2.0;
        d = 1.0 / (b + a * d);
        delh *= b * d - 1.0;
        h += delh;
        let dels = q * delh;
        s += dels;
        if (dels / s).abs() < EPS {
            break;
        }
    }
    h *= a1;
    let k0 = (PI / (2.0 * x)).sqrt() * (-x).exp() / s;
    let k1 = k0 * (x + 0.5 - h) / x;
    (k0, k1)
}

/// Returns `Some(n)` when `mu = n/2` for a non-negative integer `n`.
fn twice_order(mu: f64) -> Option<u32> {
    let two = 2.0 * mu;
    (mu >= 0.0 && two.fract() == 0.0 && two <= 400.0).then_some(two as u32)
}

/// `K_mu(s)` for `mu` in `{0, 1/2, 1, 3/2, ...}` and `s > 0`.
pub fn bessel_k(mu: f64, s: f64) -> Result<f64> {
    if !(s > 0.0) || !s.is_finite() {
        return Err(Error::InvalidArgument(format!("Bessel argument must be positive, got {s}")));
    }
    let two = twice_order(mu).ok_or(Error::UnsupportedOrder(mu))?;
    if two % 2 == 1 {
        // K_{n+1/2}(s) = sqrt(pi/(2s)) e^{-s} sum_k (n+k)! / (k! (n-k)!) (2s)^{-k}
        let n = (two / 2) as usize;
        let mut sum = 0.0;
        let mut coef = 1.0; // (n+k)!/(k!(n-k)!) at k = 0
        let inv = 1.0 / (2.0 * s);
        let mut pow = 1.0;
        for k in 0..=n {
            sum += coef * pow;
            let kf = k as f64;
            coef *= (n as f64 + kf + 1.0) * (n as f64 - kf) / (kf + 1.0);
            pow *= inv;
        }
        return Ok((FRAC_PI_2 / s).sqrt() * (-s).exp() * sum);
    }
    let n = two / 2;
    let (k0, k1) = k0_k1(s);
    if n == 0 {
        return Ok(k0);
    }
    let (mut prev, mut cur) = (k0, k1);
    for m in 1..n {
        let next = prev + 2.0 * m as f64 / s * cur;
        prev = cur;
        cur = next;
    }
    Ok(cur)
}

/// `Gamma(x)` for positive integer or half-integer `x`.
pub fn gamma_half_integer(x: f64) -> f64 {
    let two = twice_order(x).expect("integer or half-integer argument");
    assert!(two > 0, "Gamma has a pole at 0");
    if two.is_multiple_of(2) {
        (1..two / 2).map(f64::from).product()
    } else {
        // Gamma(1/2) = sqrt(pi), Gamma(x + 1) = x Gamma(x)
        let mut g = PI.sqrt();
        let mut a = 0.5;
        while a < x - 0.25 {
            g *= a;
            a += 1.0;
        }
        g
    }
}

/// The scaled profile `g_mu(s) = s^mu K_mu(s)` of order `mu` (integer or half-integer).
///
/// `g_mu` is positive and strictly decreasing on `(0, inf)`, with
/// `g_mu(0+) = 2^(mu-1) Gamma(mu)` for `mu > 0`, and satisfies
/// `d/ds g_mu(s) = -s g_{mu-1}(s)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RadialProfile {
    pub mu: f64,
}

impl RadialProfile {
    pub fn new(mu: f64) -> Result<Self> {
        twice_order(mu).ok_or(Error::UnsupportedOrder(mu))?;
        Ok(Self { mu })
    }

    /// Limit at `s = 0`; infinite for `mu = 0`.
    pub fn at_zero(&self) -> f64 {
        if self.mu == 0.0 {
            f64::INFINITY
        } else {
            2f64.powf(self.mu - 1.0) * gamma_half_integer(self.mu)
        }
    }

    pub fn eval(&self, s: f64) -> f64 {
        if s == 0.0 {
            return self.at_zero();
        }
        profile_ladder(self.mu, s)[0]
    }
}

/// `[g_mu(s), g_{mu-1}(s), g_{mu-2}(s)]` for `mu >= 2`, `s >= 0`.
///
/// Uses the recurrence `g_{m+1} = 2m g_m + s^2 g_{m-1}`, which only adds
/// positive terms. Entries of negative order are `NaN`; `g_0(0)` is infinite.
pub fn profile_ladder(mu: f64, s: f64) -> [f64; 3] {
    let two = twice_order(mu).expect("integer or half-integer order") as i32;
    let mut out = [f64::NAN; 3];
    // `lo` holds s^2 g_{m-1}, `cur` holds g_m, starting at m = 1 or m = 1/2.
    let (mut m2, mut lo, mut cur, g_minus) = if two % 2 == 0 {
        if s == 0.0 {
            (2, 0.0, 1.0, f64::INFINITY)
        } else {
            let (k0, k1) = k0_k1(s);
            (2, s * s * k0, s * k1, k0)
        }
    } else {
        let e = (FRAC_PI_2).sqrt() * (-s).exp();
        (1, s * e, e, f64::NAN)
    };
    // Record g at orders two-4, two-2, two (in units of 1/2).
    let mut record = |order2: i32, value: f64| {
        let slot = (two - order2) / 2;
        if (0..3).contains(&slot) && (two - order2) % 2 == 0 {
            out[slot as usize] = value;
        }
    };
    if two % 2 == 0 {
        record(0, g_minus);
    } else if s > 0.0 {
        record(-1, lo / (s * s));
    }
    record(m2, cur);
    while m2 < two {
        let next = m2 as f64 * cur + lo; // 2m g_m with m = m2/2
        lo = s * s * cur;
        cur = next;
        m2 += 2;
        record(m2, cur);
    }
    out
}
