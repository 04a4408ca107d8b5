//! Conditional characteristic function of the terminal log price.
//!
//! Given the jumps, `X_T` is Gaussian with variance `IV`, so
//!
//! ```text
//! E[e^{iuX_T}] = exp{ iu(x + (r + mu) tau) - (u^2 + iu)/2 eps(tau) Sigma_t^2
//!                     + int_0^tau kappa(iu rho - (u^2 + iu)/2 eps(s)) ds }
//! ```
//!
//! with `kappa` the cumulant of the measure. The time integral is smooth and
//! evaluated by Gauss-Legendre quadrature.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::levy::{LevyMeasure, CUMULANT_MARGIN};
use crate::model::{epsilon, BnsParams, MarketState};
use crate::quadrature::GaussLegendre;

const NODES: usize = 64;

/// Per-state constants reused across frequencies.
pub(crate) struct CfContext {
    nu: LevyMeasure,
    rho: f64,
    drift: f64,
    diffusive: f64,
    eps_tau: f64,
    coarse: Vec<(f64, f64)>,
    fine: Vec<(f64, f64)>,
}

impl CfContext {
    pub(crate) fn new(params: &BnsParams, state: &MarketState) -> Result<Self> {
        let tau = state.tau(params)?;
        let lambda = params.lambda();
        let eps_nodes = |n: usize| {
            GaussLegendre::cached(n)
                .mapped(0.0, tau)
                .map(|(s, w)| (epsilon(lambda, s), w))
                .collect::<Vec<_>>()
        };
        let eps_tau = epsilon(lambda, tau);
        Ok(Self {
            nu: *params.nu(),
            rho: params.rho(),
            drift: state.x + (params.rate() + params.mu()) * tau,
            diffusive: eps_tau * state.sigma_t_sq,
            eps_tau,
            coarse: eps_nodes(NODES),
            fine: eps_nodes(2 * NODES),
        })
    }

    /// Largest `Re theta` met along the time integral; `Re theta` is affine in `eps`.
    pub(crate) fn max_re_theta(&self, u: Complex64) -> f64 {
        let iu = Complex64::i() * u;
        let q = 0.5 * (u * u + iu);
        let at = |e: f64| (iu * self.rho - q * e).re;
        at(0.0).max(at(self.eps_tau))
    }

    fn check_strip(&self, u: Complex64) -> Result<()> {
        let bound = self.nu.cumulant_bound();
        let re = self.max_re_theta(u);
        if re > bound - CUMULANT_MARGIN {
            return Err(Error::Strip { re_theta: re, bound });
        }
        Ok(())
    }

    fn time_integral(&self, nodes: &[(f64, f64)], iu_rho: Complex64, q: Complex64) -> Result<Complex64> {
        let mut acc = Complex64::new(0.0, 0.0);
        for &(e, w) in nodes {
            acc += w * self.nu.cumulant(iu_rho - q * e)?;
        }
        Ok(acc)
    }

    /// Value and `|log phi_64 - log phi_128|` for the time integral.
    pub(crate) fn eval(&self, u: Complex64) -> Result<(Complex64, f64)> {
        self.check_strip(u)?;
        let iu = Complex64::i() * u;
        let q = 0.5 * (u * u + iu);
        let base = iu * self.drift - q * self.diffusive;
        if self.nu.is_null() {
            return Ok((base.exp(), 0.0));
        }
        let a = self.time_integral(&self.coarse, iu * self.rho, q)?;
        let b = self.time_integral(&self.fine, iu * self.rho, q)?;
        Ok(((base + b).exp(), (a - b).norm()))
    }
}

/// `E[e^{iuX_T} | X_t, Sigma_t^2]` for complex `u` inside the admissible strip.
pub fn char_fn(params: &BnsParams, state: &MarketState, u: Complex64) -> Result<Complex64> {
    Ok(CfContext::new(params, state)?.eval(u)?.0)
}

/// [`char_fn`] together with an estimate of its absolute quadrature error.
pub fn char_fn_with_error(
    params: &BnsParams,
    state: &MarketState,
    u: Complex64,
) -> Result<(Complex64, f64)> {
    let (phi, log_err) = CfContext::new(params, state)?.eval(u)?;
    Ok((phi, phi.norm() * log_err))
}
