//! Black-Scholes call price as a function of `(tau, x, sigma^2)` with
//! `x` the log spot, plus the shift/jump operators built on it.

use crate::error::{domain, Result};
use crate::levy::LevyMeasure;
use crate::normal;
use crate::quadrature::{self, Estimate, Tolerance};

/// Inputs of the Black-Scholes function.
///
/// `tau` is the time to maturity, `x` the log asset price and `sigma2` the
/// (annualized) variance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BsInputs {
    tau: f64,
    x: f64,
    sigma2: f64,
    strike: f64,
    rate: f64,
}

impl BsInputs {
    pub fn new(tau: f64, x: f64, sigma2: f64, strike: f64, rate: f64) -> Result<Self> {
        if !(sigma2 > 0.0 && sigma2.is_finite()) {
            return domain(format!("variance must be positive, got {sigma2}"));
        }
        if !(strike > 0.0 && strike.is_finite()) {
            return domain(format!("strike must be positive, got {strike}"));
        }
        if !(tau >= 0.0 && tau.is_finite()) {
            return domain(format!("time to maturity must be nonnegative, got {tau}"));
        }
        if !(rate >= 0.0 && rate.is_finite()) {
            return domain(format!("rate must be nonnegative, got {rate}"));
        }
        if !x.is_finite() {
            return domain("log price must be finite");
        }
        Ok(BsInputs {
            tau,
            x,
            sigma2,
            strike,
            rate,
        })
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }
    pub fn x(&self) -> f64 {
        self.x
    }
    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }
    pub fn strike(&self) -> f64 {
        self.strike
    }
    pub fn rate(&self) -> f64 {
        self.rate
    }

    /// Same inputs at log price `x + a` and variance `sigma2 + b`.
    pub fn shifted(&self, a: f64, b: f64) -> Result<Self> {
        BsInputs::new(self.tau, self.x + a, self.sigma2 + b, self.strike, self.rate)
    }

    fn discounted_strike(&self) -> f64 {
        self.strike * (-self.rate * self.tau).exp()
    }

    /// Total standard deviation `sigma sqrt(tau)`.
    fn total_sd(&self) -> f64 {
        (self.sigma2 * self.tau).sqrt()
    }

    fn require_positive_tau(&self, op: &str) -> Result<()> {
        if self.tau > 0.0 {
            Ok(())
        } else {
            domain(format!("{op} is undefined at maturity (tau = 0)"))
        }
    }
}

/// Call price; at `tau = 0` the payoff `(e^x - K)^+`.
pub fn price(inp: &BsInputs) -> f64 {
    let spot = inp.x.exp();
    if inp.tau == 0.0 {
        return (spot - inp.strike).max(0.0);
    }
    let (dp, dm) = d_pair(inp);
    let dk = inp.discounted_strike();
    let intrinsic = (spot - dk).max(0.0);
    let value = if dm > 0.0 {
        // Put-call parity keeps precision when both CDFs are close to one.
        let put = dk * normal::sf(dm) - spot * normal::sf(dp);
        spot - dk + put.max(0.0)
    } else {
        spot * normal::cdf(dp) - dk * normal::cdf(dm)
    };
    value.clamp(intrinsic, spot)
}

fn d_pair(inp: &BsInputs) -> (f64, f64) {
    let s = inp.total_sd();
    let m = (inp.x - inp.strike.ln() + inp.rate * inp.tau) / s;
    (m + 0.5 * s, m - 0.5 * s)
}

/// `(d+, d-)`.
pub fn d_plus_minus(inp: &BsInputs) -> Result<(f64, f64)> {
    inp.require_positive_tau("d+-")?;
    Ok(d_pair(inp))
}

/// `(d+_{rho z}, d-_{rho z})`: the pair shifted by a log-price jump `rho z`.
pub fn d_plus_minus_shifted(inp: &BsInputs, rho_z: f64) -> Result<(f64, f64)> {
    let (dp, dm) = d_plus_minus(inp)?;
    let shift = rho_z / inp.total_sd();
    Ok((dp + shift, dm + shift))
}

/// Sensitivity to the variance, `d BS / d sigma^2`.
pub fn dsigma2(inp: &BsInputs) -> Result<f64> {
    let (_, dm) = d_plus_minus(inp)?;
    let sigma = inp.sigma2.sqrt();
    Ok(inp.tau.sqrt() / (2.0 * sigma) * inp.discounted_strike() * normal::pdf(dm))
}

/// Log-price delta `d BS / dx = e^x Phi(d+)`.
pub fn dx(inp: &BsInputs) -> Result<f64> {
    let (dp, _) = d_plus_minus(inp)?;
    Ok(inp.x.exp() * normal::cdf(dp))
}

/// Finite difference operator `BS(x + a, sigma^2 + b) - BS(x, sigma^2)`.
pub fn shift_difference(a: f64, b: f64, inp: &BsInputs) -> Result<f64> {
    if inp.sigma2 + b <= 0.0 {
        return domain(format!(
            "shifted variance must stay positive: {} + {b}",
            inp.sigma2
        ));
    }
    let moved = inp.shifted(a, b)?;
    Ok(price(&moved) - price(inp))
}

/// Jump operator by its defining formula,
/// `BS(x + rho z) - BS(x) + dx BS (1 - e^{rho z})`.
pub fn jump_operator_by_definition(z: f64, rho: f64, inp: &BsInputs) -> Result<f64> {
    check_jump(z)?;
    let diff = shift_difference(rho * z, 0.0, inp)?;
    Ok(diff - dx(inp)? * (rho * z).exp_m1())
}

/// Jump operator in its `Phi`-difference form,
/// `e^{x + rho z}(Phi(d+_{rho z}) - Phi(d+)) - K e^{-r tau}(Phi(d-_{rho z}) - Phi(d-))`.
pub fn jump_operator_phi_form(z: f64, rho: f64, inp: &BsInputs) -> Result<f64> {
    check_jump(z)?;
    let (dp, dm) = d_plus_minus(inp)?;
    let (dpz, dmz) = d_plus_minus_shifted(inp, rho * z)?;
    Ok((inp.x + rho * z).exp() * normal::cdf_diff(dpz, dp)
        - inp.discounted_strike() * normal::cdf_diff(dmz, dm))
}

/// Jump operator used by the Levy integral.
///
/// The two `O(rho z)` pieces of the `Phi` form cancel to `O((rho z)^2)`, so for
/// jumps much smaller than the diffusive scale a fourth-order Taylor
/// expansion in `y = rho z` replaces them.
pub fn jump_operator(z: f64, rho: f64, inp: &BsInputs) -> Result<f64> {
    check_jump(z)?;
    inp.require_positive_tau("jump operator")?;
    let s = inp.total_sd();
    let y = rho * z;
    if (y / s).abs() >= 1e-3 {
        return jump_operator_phi_form(z, rho, inp);
    }
    let (dp, _) = d_pair(inp);
    let base = inp.x.exp() * normal::pdf(dp);
    let g2 = base / s;
    let g3 = base * (2.0 / s - dp / (s * s));
    let g4 = base * (3.0 / s - 3.0 * dp / (s * s) + (dp * dp - 1.0) / (s * s * s));
    let y2 = y * y;
    Ok(y2 * (g2 / 2.0 + y * g3 / 6.0 + y2 * g4 / 24.0))
}

fn check_jump(z: f64) -> Result<()> {
    if z > 0.0 && z.is_finite() {
        Ok(())
    } else {
        domain(format!("jump size must be positive, got {z}"))
    }
}

/// Levy integral of the jump operator, `int_0^inf L^z BS nu(dz)`.
///
/// Split at `z = 1`. On `(0, 1]` the substitution `z = s^2` turns the
/// `z^{1/2}` behaviour of `L^z f(z)` near the origin into a smooth integrand;
/// `[1, inf)` is compactified. The jump size that moves the log price onto the
/// strike is passed as a breakpoint.
pub fn levy_integral(
    inp: &BsInputs,
    rho: f64,
    nu: &LevyMeasure,
    abs_tol: f64,
) -> Result<Estimate> {
    levy_integral_with(inp, rho, nu, abs_tol, Rule::GaussKronrod)
}

/// Node family used by [`levy_integral_with`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rule {
    GaussKronrod,
    TanhSinh,
}

/// [`levy_integral`] with an explicit node family.
pub fn levy_integral_with(
    inp: &BsInputs,
    rho: f64,
    nu: &LevyMeasure,
    abs_tol: f64,
    rule: Rule,
) -> Result<Estimate> {
    inp.require_positive_tau("Levy integral")?;
    if rho >= 0.0 {
        return domain(format!("leverage must be negative, got {rho}"));
    }
    if nu.is_null() {
        return Ok(Estimate {
            value: 0.0,
            error: 0.0,
        });
    }
    let integrand = |z: f64| -> f64 {
        if z <= 0.0 {
            return 0.0;
        }
        let f = nu.density(z).unwrap_or(0.0);
        if f == 0.0 {
            return 0.0;
        }
        jump_operator(z, rho, inp).map(|l| l * f).unwrap_or(f64::NAN)
    };
    let near = |s: f64| 2.0 * s * integrand(s * s);
    let tol = Tolerance::new(0.5 * abs_tol, 1e-13);
    match rule {
        Rule::GaussKronrod => {
            let mut breaks = vec![0.0];
            let root = (inp.x - inp.strike.ln() + inp.rate * inp.tau) / rho.abs();
            if root > 0.0 && root < 1.0 {
                breaks.push(root.sqrt());
            }
            breaks.push(1.0);
            let a = quadrature::adaptive_with_breaks(near, &breaks, tol)?;
            let b = quadrature::semi_infinite(integrand, 1.0, tol)?;
            Ok(a + b)
        }
        Rule::TanhSinh => {
            let a = quadrature::tanh_sinh(integrand, 0.0, 1.0, tol)?;
            let b = quadrature::tanh_sinh_semi_infinite(integrand, 1.0, tol)?;
            Ok(a + b)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn atm(tau: f64) -> BsInputs {
        BsInputs::new(tau, 100f64.ln(), 0.04, 100.0, 0.0).unwrap()
    }

    #[test]
    fn payoff_at_maturity() {
        let inp = BsInputs::new(0.0, 110f64.ln(), 0.04, 100.0, 0.05).unwrap();
        assert!((price(&inp) - 10.0).abs() < 1e-12);
        let otm = BsInputs::new(0.0, 90f64.ln(), 0.04, 100.0, 0.05).unwrap();
        assert_eq!(price(&otm), 0.0);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(BsInputs::new(1.0, 0.0, 0.0, 100.0, 0.0).is_err());
        assert!(BsInputs::new(1.0, 0.0, 0.04, -1.0, 0.0).is_err());
        assert!(BsInputs::new(-1.0, 0.0, 0.04, 1.0, 0.0).is_err());
        let at_maturity = atm(0.0);
        assert!(d_plus_minus(&at_maturity).is_err());
        assert!(dsigma2(&at_maturity).is_err());
        assert!(jump_operator(0.1, -1.0, &at_maturity).is_err());
        assert!(jump_operator(0.0, -1.0, &atm(1.0)).is_err());
        assert!(shift_difference(0.0, -0.05, &atm(1.0)).is_err());
    }

    #[test]
    fn tiny_strike_approaches_spot() {
        let inp = BsInputs::new(1.0, 100f64.ln(), 0.04, 1e-12, 0.01).unwrap();
        assert!((price(&inp) - 100.0).abs() < 1e-9);
    }

    #[test]
    fn atm_d_pair_is_symmetric() {
        let inp = atm(0.5);
        let (dp, dm) = d_plus_minus(&inp).unwrap();
        let half = 0.5 * (0.04f64 * 0.5).sqrt();
        assert!((dp - half).abs() < 1e-15 && (dm + half).abs() < 1e-15);
    }

    #[test]
    fn shifted_d_pair_equals_recomputation() {
        let inp = BsInputs::new(0.3, 4.7, 0.03, 105.0, 0.02).unwrap();
        let rz = -0.37;
        let (a, b) = d_plus_minus_shifted(&inp, rz).unwrap();
        let (c, d) = d_plus_minus(&inp.shifted(rz, 0.0).unwrap()).unwrap();
        assert!((a - c).abs() < 1e-12 && (b - d).abs() < 1e-12);
    }

    #[test]
    fn zero_shift_is_zero() {
        assert_eq!(shift_difference(0.0, 0.0, &atm(1.0)).unwrap(), 0.0);
    }

    #[test]
    fn shift_difference_telescopes() {
        let inp = atm(0.7);
        let (a, b) = (-0.2, 0.03);
        let full = shift_difference(a, b, &inp).unwrap();
        let var_leg = shift_difference(0.0, b, &inp).unwrap();
        let x_leg = shift_difference(a, 0.0, &inp.shifted(0.0, b).unwrap()).unwrap();
        assert!((full - (var_leg + x_leg)).abs() < 1e-12);
    }

    #[test]
    fn vega_decays_for_huge_variance() {
        let inp = BsInputs::new(1.0, 100f64.ln(), 1e6, 100.0, 0.0).unwrap();
        assert!(dsigma2(&inp).unwrap() < 1e-6);
    }

    #[test]
    fn jump_operator_vanishes_for_small_jumps() {
        let inp = atm(0.25);
        let l = jump_operator(1e-9, -4.7, &inp).unwrap();
        assert!(l.abs() < 1e-12);
    }

    #[test]
    fn taylor_branch_joins_phi_form() {
        let inp = atm(0.25);
        let s = (0.04f64 * 0.25).sqrt();
        let rho: f64 = -2.0;
        // Straddle the branch switch at |rho z| = 1e-3 s.
        let z_switch = 1e-3 * s / rho.abs();
        let below = jump_operator(z_switch * 0.999_999, rho, &inp).unwrap();
        let above = jump_operator(z_switch * 1.000_001, rho, &inp).unwrap();
        assert!(((below - above) / above).abs() < 1e-5);
    }

    #[test]
    fn levy_integral_of_null_measure_is_zero() {
        let nu = LevyMeasure::null(1.0);
        let e = levy_integral(&atm(0.1), -1.0, &nu, 1e-10).unwrap();
        assert_eq!(e.value, 0.0);
    }
}
