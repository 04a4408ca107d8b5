//! Damped-transform (Carr-Madan) call prices on a log-strike grid.
//!
//! The grid is centred so that its middle node sits exactly on the log of the
//! requested strike; other strikes in the window are read off by cubic
//! interpolation. Errors are estimated by refining the frequency step and by
//! extending the frequency range.

use num_complex::Complex64;
use rustfft::FftPlanner;
use std::f64::consts::PI;

use super::charfn::CfContext;
use crate::error::{domain, Error, Result};
use crate::model::{BnsParams, MarketState};

/// Largest grid the refinement loop will try.
const MAX_N: usize = 1 << 21;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CfGrid {
    /// Frequency step.
    pub eta: f64,
    /// Number of nodes, a power of two.
    pub n: usize,
    /// Damping exponent applied to the call price.
    pub alpha: f64,
    /// Half-width of the log-strike window reported around the centre.
    pub strike_window: f64,
}

impl Default for CfGrid {
    fn default() -> Self {
        Self { eta: 0.25, n: 4096, alpha: 1.5, strike_window: 0.5 }
    }
}

impl CfGrid {
    pub fn new(eta: f64, n: usize, alpha: f64, strike_window: f64) -> Result<Self> {
        let g = Self { eta, n, alpha, strike_window };
        g.validate()?;
        Ok(g)
    }

    fn validate(&self) -> Result<()> {
        if !(self.eta > 0.0 && self.eta.is_finite()) {
            return domain(format!("eta must be positive, got {}", self.eta));
        }
        if !self.n.is_power_of_two() || self.n < 16 {
            return domain(format!("grid size must be a power of two >= 16, got {}", self.n));
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return domain(format!("damping must be positive, got {}", self.alpha));
        }
        if !(self.strike_window > 0.0) {
            return domain("strike window must be positive");
        }
        Ok(())
    }

    /// Log-strike spacing `2 pi / (n eta)`.
    pub fn log_strike_step(&self) -> f64 {
        2.0 * PI / (self.n as f64 * self.eta)
    }
}

/// Call prices on the log-strike nodes inside the window.
#[derive(Debug, Clone, PartialEq)]
pub struct PriceCurve {
    pub log_strikes: Vec<f64>,
    pub prices: Vec<f64>,
    /// Largest price change under `eta -> eta/2, n -> 2n` and under `n -> 2n`,
    /// plus the time-quadrature error of the characteristic function.
    pub error_estimate: f64,
    pub step_error: f64,
    pub range_error: f64,
    pub grid: CfGrid,
}

impl PriceCurve {
    /// Index of the node at the centre strike.
    pub fn centre(&self) -> usize {
        self.log_strikes.len() / 2
    }

    /// Price at the centre strike, on a grid node.
    pub fn centre_price(&self) -> f64 {
        self.prices[self.centre()]
    }

    /// Cubic interpolation in log strike.
    pub fn price_at(&self, strike: f64) -> Result<f64> {
        let k = strike.ln();
        let (lo, hi) = (self.log_strikes[1], self.log_strikes[self.log_strikes.len() - 2]);
        if !(k >= lo && k <= hi) {
            return domain(format!("strike {strike} outside the priced window"));
        }
        let h = self.log_strikes[1] - self.log_strikes[0];
        let i = (((k - self.log_strikes[0]) / h).floor() as usize).clamp(1, self.log_strikes.len() - 3);
        let t = (k - self.log_strikes[i]) / h;
        let p = |j: usize| self.prices[j];
        let (p0, p1, p2, p3) = (p(i - 1), p(i), p(i + 1), p(i + 2));
        // Lagrange cubic through nodes i-1..i+2 at offset t from node i.
        Ok(-t * (t - 1.0) * (t - 2.0) / 6.0 * p0 + (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0 * p1
            - (t + 1.0) * t * (t - 2.0) / 2.0 * p2
            + (t + 1.0) * t * (t - 1.0) / 6.0 * p3)
    }
}

/// Prices on all `n` nodes centred at `k_centre`, and a bound on the
/// contribution of the characteristic-function quadrature error.
fn raw_prices(ctx: &CfContext, tau: f64, rate: f64, grid: &CfGrid, k_centre: f64) -> Result<(Vec<f64>, f64)> {
    let (n, eta, alpha) = (grid.n, grid.eta, grid.alpha);
    let step = grid.log_strike_step();
    let k0 = k_centre - step * (n / 2) as f64;
    let disc = (-rate * tau).exp();
    let mut buf = Vec::with_capacity(n);
    let mut cf_err = 0.0;
    for j in 0..n {
        let v = eta * j as f64;
        let u = Complex64::new(v, -(alpha + 1.0));
        let (phi, log_err) = ctx.eval(u)?;
        let denom = Complex64::new(alpha * alpha + alpha - v * v, (2.0 * alpha + 1.0) * v);
        let psi = disc * phi / denom;
        let simpson = if j == 0 { 1.0 / 3.0 } else if j % 2 == 1 { 4.0 / 3.0 } else { 2.0 / 3.0 };
        let w = eta * simpson;
        cf_err += w * psi.norm() * log_err;
        buf.push(psi * Complex64::new(0.0, -v * k0).exp() * w);
    }
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let prices = buf
        .iter()
        .enumerate()
        .map(|(m, c)| {
            let k = k0 + step * m as f64;
            (-alpha * k).exp() / PI * c.re
        })
        .collect();
    let worst_damp = (-alpha * (k_centre - grid.strike_window)).exp().max((-alpha * (k_centre + grid.strike_window)).exp());
    Ok((prices, worst_damp / PI * cf_err))
}

/// Checks that the damped payoff transform exists for this state.
fn check_damping(ctx: &CfContext, alpha: f64) -> Result<()> {
    let u = Complex64::new(0.0, -(alpha + 1.0));
    ctx.eval(u).map(|_| ())
}

/// FFT price curve around the state's strike with a refinement error estimate.
pub fn fft_call_prices(params: &BnsParams, state: &MarketState, grid: CfGrid) -> Result<PriceCurve> {
    grid.validate()?;
    let tau = state.tau(params)?;
    if tau == 0.0 {
        return domain("Fourier pricing needs tau > 0");
    }
    let ctx = CfContext::new(params, state)?;
    check_damping(&ctx, grid.alpha)?;
    let kc = state.strike.ln();
    let r = params.rate();
    let (base, cf_err) = raw_prices(&ctx, tau, r, &grid, kc)?;
    let finer = CfGrid { eta: 0.5 * grid.eta, n: 2 * grid.n, ..grid };
    let (fine, _) = raw_prices(&ctx, tau, r, &finer, kc)?;
    let wider = CfGrid { n: 2 * grid.n, ..grid };
    let (wide, _) = raw_prices(&ctx, tau, r, &wider, kc)?;

    let step = grid.log_strike_step();
    let half = (grid.strike_window / step).floor().max(2.0) as usize;
    let half = half.min(grid.n / 2 - 1);
    let c = grid.n / 2;
    let mut log_strikes = Vec::with_capacity(2 * half + 1);
    let mut prices = Vec::with_capacity(2 * half + 1);
    let (mut step_error, mut range_error) = (0.0f64, 0.0f64);
    for m in c - half..=c + half {
        let off = m as isize - c as isize;
        log_strikes.push(kc + step * off as f64);
        prices.push(base[m]);
        // The finer grid has the same strike spacing; the wider one half of it.
        let fi = (grid.n as isize + off) as usize;
        step_error = step_error.max((base[m] - fine[fi]).abs());
        let wi = (grid.n as isize + 2 * off) as usize;
        range_error = range_error.max((base[m] - wide[wi]).abs());
    }
    Ok(PriceCurve {
        log_strikes,
        prices,
        error_estimate: step_error.max(range_error) + cf_err,
        step_error,
        range_error,
        grid,
    })
}

/// Price at the state's strike, refining the grid until the estimate is at most `tol`.
pub fn fft_price(params: &BnsParams, state: &MarketState, grid: CfGrid, tol: f64) -> Result<PriceCurve> {
    if !(tol > 0.0) {
        return domain(format!("tolerance must be positive, got {tol}"));
    }
    let mut g = grid;
    loop {
        let curve = fft_call_prices(params, state, g)?;
        if curve.error_estimate <= tol {
            return Ok(curve);
        }
        if 2 * g.n > MAX_N {
            return Err(Error::FourierNonConvergence { estimate: curve.error_estimate, requested: tol });
        }
        if curve.step_error > curve.range_error {
            g = CfGrid { eta: 0.5 * g.eta, n: 2 * g.n, ..g };
        } else {
            g = CfGrid { n: 2 * g.n, ..g };
        }
    }
}
