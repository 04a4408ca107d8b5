//! Reference call prices: Fourier inversion of the characteristic function,
//! cross-checked against Monte Carlo.

mod charfn;
mod fft;

pub use charfn::{char_fn, char_fn_with_error};
pub use fft::{fft_call_prices, fft_price, CfGrid, PriceCurve};

use std::fmt;

use crate::error::{domain, Error, Result};
use crate::model::{mc_call_price, BnsParams, MarketState, McConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Fourier,
    MonteCarlo,
    Payoff,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Fourier => "fft",
            Method::MonteCarlo => "mc",
            Method::Payoff => "payoff",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferencePrice {
    pub price: f64,
    /// FFT refinement estimate, or three Monte Carlo standard errors.
    pub error: f64,
    pub method: Method,
}

/// Paths used to size the Monte Carlo fallback.
const PILOT_PATHS: usize = 20_000;
/// Upper limit on Monte Carlo paths for the fallback.
const MAX_PATHS: usize = 20_000_000;

/// Monte Carlo price with enough paths that `3 SE <= tol`, if affordable.
pub fn mc_reference(params: &BnsParams, state: &MarketState, tol: f64, seed: u64) -> Result<ReferencePrice> {
    let pilot = mc_call_price(params, state, McConfig { n_paths: PILOT_PATHS, seed, ..McConfig::default() })?;
    let needed = (3.0 * pilot.std_error / tol).powi(2) * PILOT_PATHS as f64;
    let n_paths = (needed.ceil() as usize).clamp(PILOT_PATHS, MAX_PATHS);
    let mc = if n_paths == PILOT_PATHS {
        pilot
    } else {
        mc_call_price(params, state, McConfig { n_paths, seed, ..McConfig::default() })?
    };
    Ok(ReferencePrice { price: mc.price, error: 3.0 * mc.std_error, method: Method::MonteCarlo })
}

/// Reference price to absolute tolerance `tol`.
///
/// Uses the Fourier pricer when its refinement estimate meets `tol`. Otherwise
/// falls back to Monte Carlo; if the Fourier pricer produced a finite
/// estimate the two must agree within their combined error.
pub fn reference_price(params: &BnsParams, state: &MarketState, tol: f64, seed: u64) -> Result<ReferencePrice> {
    if !(tol > 0.0) {
        return domain(format!("tolerance must be positive, got {tol}"));
    }
    if state.tau(params)? == 0.0 {
        let payoff = (state.spot() - state.strike).max(0.0);
        return Ok(ReferencePrice { price: payoff, error: 0.0, method: Method::Payoff });
    }
    let fft = match fft_price(params, state, CfGrid::default(), tol) {
        Ok(c) => return Ok(ReferencePrice { price: c.centre_price(), error: c.error_estimate, method: Method::Fourier }),
        Err(Error::FourierNonConvergence { .. }) => {
            fft_call_prices(params, state, CfGrid { n: 1 << 16, ..CfGrid::default() }).ok()
        }
        Err(Error::Strip { .. }) => None,
        Err(e) => return Err(e),
    };
    let mc = mc_reference(params, state, tol, seed)?;
    if let Some(c) = fft {
        check_agreement(c.centre_price(), c.error_estimate, mc.price, mc.error / 3.0)?;
    }
    Ok(mc)
}

/// Errors unless `|fft - mc| <= fft_err + 3 mc_se`.
pub fn check_agreement(fft: f64, fft_err: f64, mc: f64, mc_se: f64) -> Result<()> {
    if (fft - mc).abs() <= fft_err + 3.0 * mc_se {
        Ok(())
    } else {
        Err(Error::OracleDisagreement { fft, fft_err, mc, mc_err: 3.0 * mc_se })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::approx::bs_price;
    use crate::levy::LevyMeasure;

    fn nv() -> BnsParams {
        let nu = LevyMeasure::inverse_gaussian(0.0872, 11.98, 2.4958).unwrap();
        BnsParams::new(-4.7039, nu, 0.0041, 468.44, 0.0319, 0.0833).unwrap()
    }

    #[test]
    fn payoff_at_maturity() {
        let p = nv();
        let s = MarketState::new(0.0833, 470f64.ln(), 0.004, 460.0).unwrap();
        let r = reference_price(&p, &s, 1e-3, 1).unwrap();
        assert_eq!(r.method, Method::Payoff);
        assert!((r.price - 10.0).abs() < 1e-10);
    }

    #[test]
    fn intrinsic_bound_deep_itm() {
        let p = nv();
        let s = MarketState::initial(&p, 400.0).unwrap();
        let r = reference_price(&p, &s, 1e-5 * 468.44, 1).unwrap();
        assert_eq!(r.method, Method::Fourier);
        assert!(r.price >= 468.44 - 400.0 * (-0.0319f64 * 0.0833).exp() - r.error);
        assert!(r.price > bs_price(&p, &s).unwrap() - 1.0);
    }

    #[test]
    fn agreement_check() {
        assert!(check_agreement(1.0, 0.01, 1.02, 0.01).is_ok());
        assert!(matches!(check_agreement(1.0, 0.01, 1.1, 0.01), Err(Error::OracleDisagreement { .. })));
    }
}
