//! Short-maturity approximations: Black-Scholes price plus a jump correction.
//!
//! With `m = x - ln K` and `sigma^2 = Sigma_t^2` the moneyness regimes are
//! deep OTM (`m <= -2 sigma^2`), near ATM (`|m| < 2 sigma^2`) and ITM
//! (`m >= 2 sigma^2`). Both corrections integrate the payoff change caused by a
//! single large volatility jump against the Lévy measure, from the jump size
//! `Z0` that moves the forward onto the strike (or `Zbar = 2 sigma^2 / |rho|`).

use std::fmt;

use crate::blackscholes::{self, BsInputs};
use crate::error::{Error, Result};
use crate::model::{BnsParams, MarketState};
use crate::normal;
use crate::quadrature::{self, Estimate, Tolerance};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Regime {
    DeepOtm,
    NearAtm,
    Itm,
}

impl Regime {
    /// Regime of log-moneyness `m` at variance `sigma2`. The ITM boundary
    /// belongs to ITM and the OTM boundary to deep OTM.
    pub fn classify(m: f64, sigma2: f64) -> Regime {
        let edge = 2.0 * sigma2;
        if m >= edge {
            Regime::Itm
        } else if m <= -edge {
            Regime::DeepOtm
        } else {
            Regime::NearAtm
        }
    }

    pub fn of(state: &MarketState) -> Regime {
        Regime::classify(state.moneyness(), state.sigma_t_sq)
    }

    pub fn label(&self) -> &'static str {
        match self {
            Regime::DeepOtm => "DEEP_OTM",
            Regime::NearAtm => "NEAR_ATM",
            Regime::Itm => "ITM",
        }
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Formula {
    V1,
    V2,
    V3,
    BsOnly,
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Formula::V1 => "V1",
            Formula::V2 => "V2",
            Formula::V3 => "V3",
            Formula::BsOnly => "BS_ONLY",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ApproxResult {
    pub price: f64,
    pub regime: Regime,
    pub formula: Formula,
    /// False when the formula is used outside the regime it was derived for.
    pub applicable: bool,
    /// The added correction alone.
    pub correction: f64,
}

/// Quantities shared by both corrections.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrectionInputs {
    /// `(x - ln K + r tau) / |rho|`; may be nonpositive.
    pub z0: f64,
    /// `2 Sigma_t^2 / |rho|`.
    pub zbar: f64,
    pub d_plus: f64,
    pub d_minus: f64,
    tau: f64,
    discounted_strike: f64,
    spot: f64,
}

impl CorrectionInputs {
    pub fn new(params: &BnsParams, state: &MarketState) -> Result<Self> {
        let tau = state.tau(params)?;
        let inp = bs_inputs(params, state, tau)?;
        let (d_plus, d_minus) = blackscholes::d_plus_minus(&inp)?;
        let r = params.rate();
        let abs_rho = -params.rho();
        Ok(Self {
            z0: (state.moneyness() + r * tau) / abs_rho,
            zbar: 2.0 * state.sigma_t_sq / abs_rho,
            d_plus,
            d_minus,
            tau,
            discounted_strike: state.strike * (-r * tau).exp(),
            spot: state.spot(),
        })
    }

    /// Lower limit `max(Z0, Zbar)` of the ATM/ITM correction.
    pub fn lower_limit(&self) -> f64 {
        self.z0.max(self.zbar)
    }
}

fn bs_inputs(params: &BnsParams, state: &MarketState, tau: f64) -> Result<BsInputs> {
    BsInputs::new(tau, state.x, state.sigma_t_sq, state.strike, params.rate())
}

/// `BS(t, X_t, Sigma_t^2)`.
pub fn bs_price(params: &BnsParams, state: &MarketState) -> Result<f64> {
    let tau = state.tau(params)?;
    Ok(blackscholes::price(&bs_inputs(params, state, tau)?))
}

/// `tau int_{max(Z0, Zbar)}^inf (K e^{-r tau} Phi(D-) - e^{x + rho z} Phi(D+)) nu(dz)`.
pub fn correction_atm_itm(params: &BnsParams, state: &MarketState) -> Result<f64> {
    let c = CorrectionInputs::new(params, state)?;
    let nu = params.nu();
    let lower = c.lower_limit();
    let a = c.discounted_strike * normal::cdf(c.d_minus) * nu.tail_mass(lower)?;
    let b = c.spot * normal::cdf(c.d_plus) * nu.tilted_tail(lower, -params.rho())?;
    Ok(c.tau * (a - b))
}

/// `tau int_{Z0}^inf (K e^{-r tau} - e^{x + rho z}) nu(dz)`; needs `Z0 > 0`.
pub fn correction_itm(params: &BnsParams, state: &MarketState) -> Result<f64> {
    let c = CorrectionInputs::new(params, state)?;
    if !(c.z0 > 0.0) {
        return Err(Error::Regime {
            regime: Regime::of(state).label(),
            reason: format!("ITM correction needs Z0 > 0, got {}", c.z0),
        });
    }
    let nu = params.nu();
    let a = c.discounted_strike * nu.tail_mass(c.z0)?;
    let b = c.spot * nu.tilted_tail(c.z0, -params.rho())?;
    Ok(c.tau * (a - b))
}

fn correction_by_quadrature<G: Fn(f64) -> f64>(
    params: &BnsParams,
    lower: f64,
    tau: f64,
    g: G,
) -> Result<Estimate> {
    let nu = params.nu();
    if nu.is_null() {
        return Ok(Estimate { value: 0.0, error: 0.0 });
    }
    let est = quadrature::tail(
        |z| {
            let f = nu.density(z).unwrap_or(0.0);
            if f == 0.0 {
                0.0
            } else {
                g(z) * f
            }
        },
        lower,
        Tolerance::new(1e-300, 1e-12),
    )?;
    Ok(Estimate { value: tau * est.value, error: tau * est.error })
}

/// [`correction_atm_itm`] by direct quadrature of its integrand.
pub fn correction_atm_itm_by_quadrature(
    params: &BnsParams,
    state: &MarketState,
) -> Result<Estimate> {
    let c = CorrectionInputs::new(params, state)?;
    let (kp, sp) = (c.discounted_strike * normal::cdf(c.d_minus), normal::cdf(c.d_plus));
    let (x, rho) = (state.x, params.rho());
    correction_by_quadrature(params, c.lower_limit(), c.tau, |z| kp - (x + rho * z).exp() * sp)
}

/// [`correction_itm`] by direct quadrature of its integrand.
pub fn correction_itm_by_quadrature(params: &BnsParams, state: &MarketState) -> Result<Estimate> {
    let c = CorrectionInputs::new(params, state)?;
    if !(c.z0 > 0.0) {
        return Err(Error::Regime {
            regime: Regime::of(state).label(),
            reason: format!("ITM correction needs Z0 > 0, got {}", c.z0),
        });
    }
    let (k, x, rho) = (c.discounted_strike, state.x, params.rho());
    correction_by_quadrature(params, c.z0, c.tau, |z| k - (x + rho * z).exp())
}

fn at_maturity(state: &MarketState, formula: Formula) -> ApproxResult {
    ApproxResult {
        price: (state.spot() - state.strike).max(0.0),
        regime: Regime::of(state),
        formula,
        applicable: true,
        correction: 0.0,
    }
}

fn bs_only(bs: f64, regime: Regime) -> ApproxResult {
    ApproxResult { price: bs, regime, formula: Formula::BsOnly, applicable: false, correction: 0.0 }
}

/// `BS + correction_atm_itm`, defined for `m > -2 sigma^2`. Deep OTM states
/// get the Black-Scholes price flagged as not applicable.
pub fn approx_v1(params: &BnsParams, state: &MarketState) -> Result<ApproxResult> {
    if state.tau(params)? == 0.0 {
        return Ok(at_maturity(state, Formula::V1));
    }
    let regime = Regime::of(state);
    let bs = bs_price(params, state)?;
    if regime == Regime::DeepOtm {
        return Ok(bs_only(bs, regime));
    }
    let correction = correction_atm_itm(params, state)?;
    Ok(ApproxResult { price: bs + correction, regime, formula: Formula::V1, applicable: true, correction })
}

/// `BS + correction_itm`. Derived for the ITM regime; it is still evaluated
/// whenever `Z0 > 0` but then flagged as not applicable.
pub fn approx_v2(params: &BnsParams, state: &MarketState) -> Result<ApproxResult> {
    if state.tau(params)? == 0.0 {
        return Ok(at_maturity(state, Formula::V2));
    }
    let regime = Regime::of(state);
    let bs = bs_price(params, state)?;
    let correction = correction_itm(params, state)?;
    Ok(ApproxResult {
        price: bs + correction,
        regime,
        formula: Formula::V2,
        applicable: regime == Regime::Itm,
        correction,
    })
}

/// Piecewise combination: the ITM correction in the ITM regime and the
/// ATM/ITM correction near the money. Deep OTM as in [`approx_v1`].
pub fn approx_v3(params: &BnsParams, state: &MarketState) -> Result<ApproxResult> {
    if state.tau(params)? == 0.0 {
        return Ok(at_maturity(state, Formula::V3));
    }
    let regime = Regime::of(state);
    let bs = bs_price(params, state)?;
    let correction = match regime {
        Regime::DeepOtm => return Ok(bs_only(bs, regime)),
        Regime::Itm => correction_itm(params, state)?,
        Regime::NearAtm => correction_atm_itm(params, state)?,
    };
    Ok(ApproxResult { price: bs + correction, regime, formula: Formula::V3, applicable: true, correction })
}

/// `tau` times the Lévy integral of the jump operator applied to BS, the
/// term both corrections approximate.
pub fn additional_term_oracle(params: &BnsParams, state: &MarketState) -> Result<Estimate> {
    let tau = state.tau(params)?;
    let inp = bs_inputs(params, state, tau)?;
    let est = blackscholes::levy_integral(&inp, params.rho(), params.nu(), 1e-10)?;
    Ok(Estimate { value: tau * est.value, error: tau * est.error })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::levy::LevyMeasure;

    fn nv() -> BnsParams {
        let nu = LevyMeasure::inverse_gaussian(0.0872, 11.98, 2.4958).unwrap();
        BnsParams::new(-4.7039, nu, 0.0041, 468.44, 0.0319, 0.0833).unwrap()
    }

    fn state(p: &BnsParams, k: f64) -> MarketState {
        MarketState::initial(p, k).unwrap()
    }

    #[test]
    fn regime_boundaries() {
        assert_eq!(Regime::classify(0.02, 0.01), Regime::Itm);
        assert_eq!(Regime::classify(-0.02, 0.01), Regime::DeepOtm);
        assert_eq!(Regime::classify(0.0199, 0.01), Regime::NearAtm);
        assert_eq!(Regime::classify(-0.0199, 0.01), Regime::NearAtm);
    }

    #[test]
    fn correction_inputs_are_consistent() {
        let p = nv();
        let c = CorrectionInputs::new(&p, &state(&p, 460.0)).unwrap();
        assert!((c.d_plus - c.d_minus - (0.0041f64 * 0.0833).sqrt()).abs() < 1e-14);
        assert!((c.zbar - 2.0 * 0.0041 / 4.7039).abs() < 1e-16);
        // At the root the ITM integrand vanishes.
        let root = c.discounted_strike - (state(&p, 460.0).x - 4.7039 * c.z0).exp();
        assert!(root.abs() < 1e-10);
    }

    #[test]
    fn closed_forms_match_quadrature() {
        let p = nv();
        for k in [440.0, 455.2457, 468.44, 470.0] {
            let s = state(&p, k);
            let closed = correction_atm_itm(&p, &s).unwrap();
            let quad = correction_atm_itm_by_quadrature(&p, &s).unwrap().value;
            assert!((closed / quad - 1.0).abs() < 1e-8, "K={k}: {closed} {quad}");
        }
        for k in [400.0, 455.2457, 466.0] {
            let s = state(&p, k);
            let closed = correction_itm(&p, &s).unwrap();
            let quad = correction_itm_by_quadrature(&p, &s).unwrap().value;
            assert!(closed >= 0.0);
            assert!((closed / quad - 1.0).abs() < 1e-8, "K={k}: {closed} {quad}");
        }
    }

    #[test]
    fn v3_follows_regime() {
        let p = nv();
        for k in [440.0, 468.44] {
            let s = state(&p, k);
            let v3 = approx_v3(&p, &s).unwrap();
            let other = if Regime::of(&s) == Regime::Itm { approx_v2(&p, &s) } else { approx_v1(&p, &s) }.unwrap();
            assert_eq!(v3.price, other.price);
        }
        let deep_otm = state(&p, 480.0);
        let v1 = approx_v1(&p, &deep_otm).unwrap();
        assert!(!v1.applicable && v1.formula == Formula::BsOnly && v1.correction == 0.0);
        assert!(!approx_v3(&p, &deep_otm).unwrap().applicable);
        assert!(approx_v2(&p, &deep_otm).is_err());
        assert!(!approx_v2(&p, &state(&p, 468.0)).unwrap().applicable);
    }

    #[test]
    fn maturity_returns_payoff() {
        let p = nv();
        let s = MarketState::new(0.0833, 470f64.ln(), 0.004, 460.0).unwrap();
        for r in [approx_v1(&p, &s), approx_v2(&p, &s), approx_v3(&p, &s)] {
            let r = r.unwrap();
            assert!((r.price - 10.0).abs() < 1e-10 && r.correction == 0.0);
        }
        assert!(correction_atm_itm(&p, &s).is_err());
        assert!(correction_itm(&p, &s).is_err());
    }

    #[test]
    fn null_measure_reduces_to_black_scholes() {
        let p = nv().with_measure(LevyMeasure::null(2.4958)).unwrap();
        for k in [440.0, 468.44, 500.0] {
            let s = state(&p, k);
            let bs = bs_price(&p, &s).unwrap();
            assert_eq!(approx_v1(&p, &s).unwrap().price, bs);
            assert_eq!(approx_v3(&p, &s).unwrap().price, bs);
            assert_eq!(additional_term_oracle(&p, &s).unwrap().value, 0.0);
        }
    }
}
