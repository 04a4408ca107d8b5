//! Lévy measures of the time-scaled subordinator driving the variance process.

mod assumptions;
mod gamma;

pub use assumptions::{validate_assumptions, AssumptionReport, Criterion, CriterionResult};
pub use gamma::{gamma1, gamma3, gamma_upper};

use num_complex::Complex64;
use std::f64::consts::PI;

use crate::error::{domain, Error, Result};

/// Distance kept from the pole of the cumulant.
pub const CUMULANT_MARGIN: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LevyFamily {
    /// Background driver of an IG-OU variance process.
    InverseGaussian { a: f64, b: f64 },
    /// Background driver of a Gamma-OU variance process.
    Gamma { a: f64, b: f64 },
    /// No jumps at all; the variance decays deterministically.
    Null,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevyMeasure {
    family: LevyFamily,
    lambda: f64,
}

fn check(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        domain(format!("{name} must be positive and finite, got {v}"))
    }
}

impl LevyMeasure {
    pub fn inverse_gaussian(a: f64, b: f64, lambda: f64) -> Result<Self> {
        check("a", a)?;
        check("b", b)?;
        check("lambda", lambda)?;
        Ok(Self { family: LevyFamily::InverseGaussian { a, b }, lambda })
    }

    pub fn gamma(a: f64, b: f64, lambda: f64) -> Result<Self> {
        check("a", a)?;
        check("b", b)?;
        check("lambda", lambda)?;
        Ok(Self { family: LevyFamily::Gamma { a, b }, lambda })
    }

    /// The zero measure. Only useful as a degenerate reference case.
    ///
    /// # Panics
    /// If `lambda` is not positive and finite.
    pub fn null(lambda: f64) -> Self {
        assert!(lambda > 0.0 && lambda.is_finite(), "lambda must be positive");
        Self { family: LevyFamily::Null, lambda }
    }

    pub fn family(&self) -> LevyFamily {
        self.family
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn is_null(&self) -> bool {
        matches!(self.family, LevyFamily::Null)
    }

    /// Same measure with its intensity rescaled to a new `lambda`.
    pub fn with_lambda(&self, lambda: f64) -> Result<Self> {
        check("lambda", lambda)?;
        Ok(Self { family: self.family, lambda })
    }

    pub fn name(&self) -> &'static str {
        match self.family {
            LevyFamily::InverseGaussian { .. } => "IG-OU",
            LevyFamily::Gamma { .. } => "Gamma-OU",
            LevyFamily::Null => "null",
        }
    }

    /// `(c0, c1, c2)` with `f(z) = (c0 z^{-3/2} + c1 z^{-1/2}) e^{-c2 z}` for the IG case.
    pub(crate) fn ig_constants(a: f64, b: f64, lambda: f64) -> (f64, f64, f64) {
        let c0 = lambda * a / (2.0 * (2.0 * PI).sqrt());
        (c0, c0 * b * b, 0.5 * b * b)
    }

    /// Exponential decay rate of the density at infinity.
    pub fn decay_rate(&self) -> f64 {
        match self.family {
            LevyFamily::InverseGaussian { b, .. } => 0.5 * b * b,
            LevyFamily::Gamma { b, .. } => b,
            LevyFamily::Null => f64::INFINITY,
        }
    }

    /// Density of the measure at `z > 0`.
    pub fn density(&self, z: f64) -> Result<f64> {
        if !(z > 0.0) {
            return domain(format!("density needs z > 0, got {z}"));
        }
        Ok(match self.family {
            LevyFamily::InverseGaussian { a, b } => {
                let (c0, c1, c2) = Self::ig_constants(a, b, self.lambda);
                (c0 * z.powf(-1.5) + c1 / z.sqrt()) * (-c2 * z).exp()
            }
            LevyFamily::Gamma { a, b } => self.lambda * a * b * (-b * z).exp(),
            LevyFamily::Null => 0.0,
        })
    }

    /// `nu([u, inf))`.
    pub fn tail_mass(&self, u: f64) -> Result<f64> {
        if !(u > 0.0) {
            return domain(format!("tail mass needs u > 0, got {u}"));
        }
        match self.family {
            LevyFamily::InverseGaussian { a, b } => {
                let (c0, c1, c2) = Self::ig_constants(a, b, self.lambda);
                Ok(c0 * gamma3(c2, u)? + c1 * gamma1(c2, u)?)
            }
            LevyFamily::Gamma { a, b } => Ok(self.lambda * a * (-b * u).exp()),
            LevyFamily::Null => Ok(0.0),
        }
    }

    /// `int_u^inf e^{-|rho| z} nu(dz)`.
    pub fn tilted_tail(&self, u: f64, rho_abs: f64) -> Result<f64> {
        if !(u > 0.0) {
            return domain(format!("tilted tail needs u > 0, got {u}"));
        }
        if !(rho_abs >= 0.0 && rho_abs.is_finite()) {
            return domain(format!("tilt must be nonnegative, got {rho_abs}"));
        }
        match self.family {
            LevyFamily::InverseGaussian { a, b } => {
                let (c0, c1, c2) = Self::ig_constants(a, b, self.lambda);
                let c = c2 + rho_abs;
                Ok(c0 * gamma3(c, u)? + c1 * gamma1(c, u)?)
            }
            LevyFamily::Gamma { a, b } => {
                let c = b + rho_abs;
                Ok(self.lambda * a * b * (-c * u).exp() / c)
            }
            LevyFamily::Null => Ok(0.0),
        }
    }

    /// `int_0^inf z nu(dz)`, which is `lambda a / b` for both families.
    pub fn first_moment(&self) -> f64 {
        match self.family {
            LevyFamily::InverseGaussian { a, b } | LevyFamily::Gamma { a, b } => {
                self.lambda * a / b
            }
            LevyFamily::Null => 0.0,
        }
    }

    /// Martingale drift `mu = int (1 - e^{rho z}) nu(dz) = -kappa(rho)`.
    pub fn drift_mu(&self, rho: f64) -> Result<f64> {
        if !(rho <= 0.0 && rho.is_finite()) {
            return domain(format!("leverage must be nonpositive, got {rho}"));
        }
        let r = -rho;
        Ok(match self.family {
            LevyFamily::InverseGaussian { a, b } => self.lambda * a * r / (b * b + 2.0 * r).sqrt(),
            LevyFamily::Gamma { a, b } => self.lambda * a * r / (b + r),
            LevyFamily::Null => 0.0,
        })
    }

    /// Upper limit for `Re theta` in [`Self::cumulant`].
    pub fn cumulant_bound(&self) -> f64 {
        self.decay_rate()
    }

    /// `kappa(theta) = int (e^{theta z} - 1) nu(dz)` for `Re theta < bound - CUMULANT_MARGIN`.
    pub fn cumulant(&self, theta: Complex64) -> Result<Complex64> {
        let bound = self.cumulant_bound();
        if !(theta.re <= bound - CUMULANT_MARGIN) || !theta.im.is_finite() {
            return Err(Error::Strip { re_theta: theta.re, bound });
        }
        Ok(match self.family {
            LevyFamily::InverseGaussian { a, b } => {
                self.lambda * a * theta / (b * b - 2.0 * theta).sqrt()
            }
            LevyFamily::Gamma { a, b } => self.lambda * a * theta / (b - theta),
            LevyFamily::Null => Complex64::new(0.0, 0.0),
        })
    }
}
