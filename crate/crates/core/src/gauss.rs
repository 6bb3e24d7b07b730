//! Closed-form Gaussian integrals over the whole real line.
//!
//! These are the ground truth for every quantity in the crate that has an
//! analytic value; nothing here depends on grids or quadrature.

use alloc::format;

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{domain, Result};
use crate::linalg::{real, C64};

/// Exponent `−a·y² + b·y + c` of the integrand `∫ exp(−a y² + b y + c) dy`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianExponent {
    pub a: f64,
    pub b: C64,
    pub c: C64,
}

impl GaussianExponent {
    pub fn new(a: f64, b: C64, c: C64) -> Result<Self> {
        if !(a > 0.0) || !a.is_finite() {
            return Err(domain(format!("quadratic coefficient must be positive, got {a}")));
        }
        Ok(Self { a, b, c })
    }

    pub fn centered(a: f64) -> Result<Self> {
        Self::new(a, real(0.0), real(0.0))
    }

    /// `√(π/a)·exp(b²/(4a) + c)`, by completing the square.
    pub fn integral(&self) -> C64 {
        let prefactor = (core::f64::consts::PI / self.a).sqrt();
        (self.b * self.b / (4.0 * self.a) + self.c).exp() * prefactor
    }
}

pub fn gauss_integral(e: &GaussianExponent) -> Result<C64> {
    // Re-validate: the fields are public.
    GaussianExponent::new(e.a, e.b, e.c).map(|e| e.integral())
}

/// `g(x, z) = ∫ e^{−(x−y)²−x²} e^{−(y−z)²−z²} dy`.
///
/// Collecting powers of `y` gives `−2y² + 2(x+z)y − 2x² − 2z²`, so
/// `g(x, z) = √(π/2)·exp((x+z)²/2 − 2x² − 2z²)`.
pub fn smoothed_metric_kernel(x: f64, z: f64) -> f64 {
    let exponent = GaussianExponent {
        a: 2.0,
        b: real(2.0 * (x + z)),
        c: real(-2.0 * x * x - 2.0 * z * z),
    };
    exponent.integral().re
}

/// `∫ e^{−αx²} e^{−βx²} dx = √(π/(α+β))`.
pub fn gaussian_inner(alpha: f64, beta: f64) -> Result<f64> {
    let s = alpha + beta;
    if !(s > 0.0) {
        return Err(domain(format!("α + β must be positive, got {s}")));
    }
    Ok((core::f64::consts::PI / s).sqrt())
}
