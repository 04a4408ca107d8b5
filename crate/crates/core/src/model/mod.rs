//! Model parameters, state, the `eps(t)` kernel and terminal simulation.

mod simulate;

pub use simulate::{
    mc_call_price, simulate_terminal, small_jump_threshold, Estimator, McConfig, McResult,
    TerminalSample,
};

use crate::error::{domain, Error, Result};
use crate::levy::{validate_assumptions, LevyMeasure};

/// `eps(t) = (1 - e^{-lambda t}) / lambda`, with limit `t` as `lambda -> 0`.
pub fn epsilon(lambda: f64, t: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    if lambda * t < 1e-300 {
        return t;
    }
    -(-lambda * t).exp_m1() / lambda
}

/// `int_0^t eps(s) ds = (t - eps(t)) / lambda`.
pub(crate) fn epsilon_integral(lambda: f64, t: f64) -> f64 {
    let x = lambda * t;
    if x < 1e-4 {
        // t^2/2 - lambda t^3/6 + lambda^2 t^4/24
        t * t * (0.5 - x / 6.0 + x * x / 24.0)
    } else {
        (t - epsilon(lambda, t)) / lambda
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BnsParams {
    rho: f64,
    nu: LevyMeasure,
    sigma0_sq: f64,
    s0: f64,
    rate: f64,
    horizon: f64,
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        domain(format!("{name} must be positive and finite, got {v}"))
    }
}

impl BnsParams {
    /// Validated parameters: the measure must also satisfy every criterion of
    /// [`validate_assumptions`] up to `horizon`.
    pub fn new(
        rho: f64,
        nu: LevyMeasure,
        sigma0_sq: f64,
        s0: f64,
        rate: f64,
        horizon: f64,
    ) -> Result<Self> {
        let p = Self::relaxed(rho, nu, sigma0_sq, s0, rate, horizon)?;
        let report = validate_assumptions(&nu, rho, horizon);
        if !report.passed() {
            return Err(Error::Assumption(report.to_string().trim_end().replace('\n', "; ")));
        }
        Ok(p)
    }

    /// Parameters with only the elementary domain checks. The exponential
    /// moment needed by the Fourier pricer is still enforced where it is used.
    pub fn relaxed(
        rho: f64,
        nu: LevyMeasure,
        sigma0_sq: f64,
        s0: f64,
        rate: f64,
        horizon: f64,
    ) -> Result<Self> {
        if !(rho < 0.0 && rho.is_finite()) {
            return domain(format!("leverage must be negative, got {rho}"));
        }
        positive("initial variance", sigma0_sq)?;
        positive("initial price", s0)?;
        positive("horizon", horizon)?;
        if !(rate >= 0.0 && rate.is_finite()) {
            return domain(format!("rate must be nonnegative, got {rate}"));
        }
        Ok(Self { rho, nu, sigma0_sq, s0, rate, horizon })
    }

    /// Copy with a different maturity, keeping the elementary checks only.
    pub fn with_horizon(&self, horizon: f64) -> Result<Self> {
        Self::relaxed(self.rho, self.nu, self.sigma0_sq, self.s0, self.rate, horizon)
    }

    /// Copy with a different measure.
    pub fn with_measure(&self, nu: LevyMeasure) -> Result<Self> {
        Self::relaxed(self.rho, nu, self.sigma0_sq, self.s0, self.rate, self.horizon)
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }
    pub fn nu(&self) -> &LevyMeasure {
        &self.nu
    }
    pub fn lambda(&self) -> f64 {
        self.nu.lambda()
    }
    pub fn sigma0_sq(&self) -> f64 {
        self.sigma0_sq
    }
    pub fn s0(&self) -> f64 {
        self.s0
    }
    pub fn rate(&self) -> f64 {
        self.rate
    }
    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// Martingale drift, always derived from the measure.
    pub fn mu(&self) -> f64 {
        self.nu.drift_mu(self.rho).expect("rho < 0 is enforced at construction")
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarketState {
    pub t: f64,
    pub x: f64,
    pub sigma_t_sq: f64,
    pub strike: f64,
}

impl MarketState {
    pub fn new(t: f64, x: f64, sigma_t_sq: f64, strike: f64) -> Result<Self> {
        if !(t >= 0.0 && t.is_finite()) {
            return domain(format!("time must be nonnegative, got {t}"));
        }
        if !x.is_finite() {
            return domain("log price must be finite");
        }
        positive("variance", sigma_t_sq)?;
        positive("strike", strike)?;
        Ok(Self { t, x, sigma_t_sq, strike })
    }

    /// State at time zero with the parameters' initial price and variance.
    pub fn initial(params: &BnsParams, strike: f64) -> Result<Self> {
        Self::new(0.0, params.s0().ln(), params.sigma0_sq(), strike)
    }

    /// Time to maturity; errors if the state lies beyond the horizon.
    pub fn tau(&self, params: &BnsParams) -> Result<f64> {
        let tau = params.horizon() - self.t;
        if tau < 0.0 {
            return domain(format!("state time {} exceeds horizon {}", self.t, params.horizon()));
        }
        Ok(tau)
    }

    pub fn spot(&self) -> f64 {
        self.x.exp()
    }

    /// Log-moneyness `x - ln K`.
    pub fn moneyness(&self) -> f64 {
        self.x - self.strike.ln()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn nv_measure() -> LevyMeasure {
        LevyMeasure::inverse_gaussian(0.0872, 11.98, 2.4958).unwrap()
    }

    #[test]
    fn epsilon_basics() {
        assert_eq!(epsilon(2.0, 0.0), 0.0);
        assert_eq!(epsilon(0.0, 0.7), 0.7);
        assert!((epsilon(1e-12, 0.7) - 0.7).abs() < 1e-12);
        // Evaluated with 30-digit arithmetic.
        let want = 0.075_211_095_537_930_877;
        let got = epsilon(2.4958, 0.0833);
        assert!((got - want).abs() < 1e-15, "{got}");
        for t in [1e-3, 0.1, 1.0, 10.0] {
            let e = epsilon(0.8, t);
            assert!(e > 0.0 && e <= t);
        }
    }

    #[test]
    fn epsilon_integral_branches_agree() {
        for &(l, t) in &[(1e-3, 0.09), (2.4958, 0.4), (0.0636, 0.0833)] {
            let direct = (t - epsilon(l, t)) / l;
            let gl = crate::quadrature::GaussLegendre::cached(64).integrate(|s| epsilon(l, s), 0.0, t);
            assert!((epsilon_integral(l, t) - gl).abs() < 1e-14, "{l} {t}");
            assert!((direct - gl).abs() < 1e-9);
        }
    }

    #[test]
    fn strict_constructor_runs_assumption_checks() {
        let nu = nv_measure();
        assert!(BnsParams::new(-4.7039, nu, 0.0041, 468.44, 0.0319, 0.0833).is_ok());
        assert!(BnsParams::new(0.0, nu, 0.0041, 468.44, 0.0319, 0.0833).is_err());
        let weak = LevyMeasure::gamma(1.0, 0.1, 0.5).unwrap();
        let err = BnsParams::new(-1.0, weak, 0.01, 100.0, 0.0, 1.0).unwrap_err();
        assert!(matches!(err, Error::Assumption(ref s) if s.contains("exponential moment")));
        assert!(BnsParams::relaxed(-1.0, weak, 0.01, 100.0, 0.0, 1.0).is_ok());
    }

    #[test]
    fn mu_is_derived_from_measure() {
        let p = BnsParams::new(-4.7039, nv_measure(), 0.0041, 468.44, 0.0319, 0.0833).unwrap();
        assert_eq!(p.mu(), nv_measure().drift_mu(-4.7039).unwrap());
    }

    #[test]
    fn state_time_to_maturity() {
        let p = BnsParams::new(-4.7039, nv_measure(), 0.0041, 468.44, 0.0319, 0.0833).unwrap();
        let s = MarketState::initial(&p, 468.44).unwrap();
        assert_eq!(s.tau(&p).unwrap(), 0.0833);
        assert!(s.moneyness().abs() < 1e-15);
        let late = MarketState::new(0.1, 6.0, 0.004, 400.0).unwrap();
        assert!(late.tau(&p).is_err());
        assert!(MarketState::new(0.0, 6.0, 0.0, 400.0).is_err());
    }
}
