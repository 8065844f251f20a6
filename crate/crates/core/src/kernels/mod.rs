//! Sobolev-reproducing Matérn kernels with closed-form first and second
//! derivatives.
//!
//! With `nu = tau - d/2` and `g_mu(s) = s^mu K_mu(s)`, the kernel is
//! `Phi(x, y) = c * g_nu(eps * |x - y|)` where `c = 1 / (2^(nu-1) Gamma(nu))`
//! makes `Phi(x, x) = 1`. Because `g_mu' = -s g_{mu-1}`, the gradient and
//! Hessian in `x` are
//!
//! ```text
//! grad = psi(r) (x - y),            psi(r) = -c eps^2 g_{nu-1}(eps r)
//! hess = psi(r) I + c eps^4 g_{nu-2}(eps r) (x - y)(x - y)^T
//! ```
//!
//! which stay finite at `r = 0` without any cancellation.

pub mod bessel;

use crate::error::{invalid, Error, Result};
use crate::geometry::{Point, MAX_DIM};
use crate::pde::{Coefficients, EllipticOperator};

pub use bessel::{bessel_k, gamma_half_integer, k0_k1, profile_ladder, RadialProfile};

/// Scaled distances beyond this return zero for the kernel and its derivatives.
pub const UNDERFLOW_CUTOFF: f64 = 700.0;

/// Matérn kernel parameters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MaternSpec {
    pub tau: u32,
    pub dim: usize,
    pub eps: f64,
    nu: f64,
    norm_c: f64,
}

impl MaternSpec {
    pub fn new(tau: u32, dim: usize, eps: f64) -> Result<Self> {
        if !(1..=MAX_DIM).contains(&dim) {
            return Err(Error::UnsupportedDimension(dim));
        }
        if !(eps > 0.0) || !eps.is_finite() {
            return Err(invalid(format!("shape parameter must be positive, got {eps}")));
        }
        let nu = tau as f64 - dim as f64 / 2.0;
        if nu <= 0.0 {
            return Err(invalid(format!("smoothness {tau} must exceed d/2 = {}", dim as f64 / 2.0)));
        }
        let norm_c = 1.0 / (2f64.powf(nu - 1.0) * gamma_half_integer(nu));
        Ok(Self { tau, dim, eps, nu, norm_c })
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn norm_c(&self) -> f64 {
        self.norm_c
    }

    /// `Phi(x, y)`.
    #[inline]
    pub fn eval(&self, x: &Point, y: &Point) -> f64 {
        self.eval_r(x.dist(y))
    }

    /// The kernel as a function of distance.
    #[inline]
    pub fn eval_r(&self, r: f64) -> f64 {
        let s = self.eps * r;
        if s > UNDERFLOW_CUTOFF {
            return 0.0;
        }
        if s == 0.0 {
            return 1.0;
        }
        self.norm_c * profile_ladder(self.nu, s)[0]
    }

    /// Value, gradient and Hessian of `Phi(., y)` at `x`.
    pub fn jet(&self, x: &Point, y: &Point) -> Result<KernelJet> {
        if self.nu < 2.0 {
            return Err(invalid(format!(
                "second derivatives need nu >= 2, got nu = {} (tau = {}, d = {})",
                self.nu, self.tau, self.dim
            )));
        }
        Ok(self.jet_unchecked(x, y))
    }

    #[inline]
    pub(crate) fn jet_unchecked(&self, x: &Point, y: &Point) -> KernelJet {
        let dim = self.dim;
        let mut diff = [0.0; MAX_DIM];
        for k in 0..dim {
            diff[k] = x[k] - y[k];
        }
        let r = diff.iter().map(|d| d * d).sum::<f64>().sqrt();
        let s = self.eps * r;
        let mut jet = KernelJet { dim, value: 0.0, gradient: [0.0; MAX_DIM], hessian: [[0.0; MAX_DIM]; MAX_DIM] };
        if s > UNDERFLOW_CUTOFF {
            return jet;
        }
        let [g0, g1, g2] = profile_ladder(self.nu, s);
        let eps2 = self.eps * self.eps;
        jet.value = if s == 0.0 { 1.0 } else { self.norm_c * g0 };
        let psi = -self.norm_c * eps2 * g1;
        // The outer-product term vanishes at r = 0 even when g_{nu-2}(0) is infinite.
        let outer = if s == 0.0 { 0.0 } else { self.norm_c * eps2 * eps2 * g2 };
        for i in 0..dim {
            jet.gradient[i] = psi * diff[i];
            for j in 0..dim {
                let id = if i == j { psi } else { 0.0 };
                jet.hessian[i][j] = id + outer * (diff[i] * diff[j]);
            }
        }
        jet
    }

    /// `[L Phi(., y)](x)` for the operator `L` with coefficients frozen at `x`.
    #[inline]
    pub fn apply_coefficients(&self, coeffs: &Coefficients, x: &Point, y: &Point) -> f64 {
        coeffs.apply(&self.jet_unchecked(x, y))
    }
}

/// Value, gradient and Hessian of a kernel translate at one point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KernelJet {
    pub dim: usize,
    pub value: f64,
    pub gradient: [f64; MAX_DIM],
    pub hessian: [[f64; MAX_DIM]; MAX_DIM],
}

impl KernelJet {
    pub fn laplacian(&self) -> f64 {
        (0..self.dim).map(|k| self.hessian[k][k]).sum()
    }
}

pub fn matern_eval(spec: &MaternSpec, x: &Point, y: &Point) -> f64 {
    spec.eval(x, y)
}

pub fn matern_jet(spec: &MaternSpec, x: &Point, y: &Point) -> Result<KernelJet> {
    spec.jet(x, y)
}

/// Applies `L u = sum a_ij u_ij - sum b_i u_i - c u` to `Phi(., y)` at `x`.
pub fn apply_elliptic(spec: &MaternSpec, op: &EllipticOperator, x: &Point, y: &Point) -> Result<f64> {
    let jet = spec.jet(x, y)?;
    Ok(op.coefficients(x).apply(&jet))
}
