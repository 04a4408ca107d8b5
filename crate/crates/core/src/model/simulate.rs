//! Exact-conditional simulation of `(X_T, Sigma_T^2, IV)` and Monte Carlo call prices.
//!
//! Given the jump path of the subordinator the log price is Gaussian, so only
//! the jumps are sampled. Gamma-OU drivers are compound Poisson and sampled
//! exactly. IG-OU drivers have infinitely many small jumps: jumps above a
//! threshold `delta` are sampled exactly, and those below are replaced by their
//! mean, with the price drift adjusted so the discounted price stays an exact
//! martingale.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Poisson, StandardNormal};
use rayon::prelude::*;

use super::{epsilon, epsilon_integral, BnsParams, MarketState};
use crate::blackscholes::{self, BsInputs};
use crate::error::{domain, Result};
use crate::levy::{LevyFamily, LevyMeasure};

/// Paths per work unit. Fixed so the reduction order does not depend on the
/// number of worker threads.
const CHUNK: usize = 2048;

/// Neglected small-jump variance relative to the diffusive variance.
const SMALL_JUMP_VARIANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TerminalSample {
    pub x_t: f64,
    pub sigma_sq: f64,
    pub integrated_var: f64,
    /// Number of explicitly sampled jumps.
    pub n_jumps: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Estimator {
    /// Black-Scholes price averaged over jump paths.
    #[default]
    ConditionalGaussian,
    /// Discounted payoff of a full terminal draw.
    Payoff,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McConfig {
    pub n_paths: usize,
    pub seed: u64,
    pub estimator: Estimator,
}

impl Default for McConfig {
    fn default() -> Self {
        Self { n_paths: 100_000, seed: 0, estimator: Estimator::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McResult {
    pub price: f64,
    pub std_error: f64,
    pub n_paths: usize,
}

/// `gamma(a, x) = int_0^x e^{-t} t^{a-1} dt` by its positive series; meant for small `x`.
fn lower_gamma_series(a: f64, x: f64) -> f64 {
    let mut term = 1.0 / a;
    let mut sum = term;
    for k in 1..200 {
        term *= x / (a + k as f64);
        sum += term;
        if term < sum * 1e-17 {
            break;
        }
    }
    x.powf(a) * (-x).exp() * sum
}

/// `(int_0^delta z nu(dz), int_0^delta z^2 nu(dz))` for the IG measure.
fn ig_small_moments(c0: f64, c1: f64, c2: f64, delta: f64) -> (f64, f64) {
    let x = c2 * delta;
    let g = |a: f64| lower_gamma_series(a, x) / c2.powf(a);
    (c0 * g(0.5) + c1 * g(1.5), c0 * g(1.5) + c1 * g(2.5))
}

/// Truncation level for the IG small jumps at time to maturity `tau`, or `None`
/// for finite-activity measures.
///
/// The replaced jumps carry variance `(rho^2 + 1) tau int_0^delta z^2 nu(dz)`
/// (price and integrated variance); `delta` keeps it below a fixed fraction of
/// the diffusive variance `eps(tau) Sigma_t^2`, and at most `0.1 / c2` so the
/// big-jump sampler stays efficient.
pub fn small_jump_threshold(params: &BnsParams, sigma_t_sq: f64, tau: f64) -> Option<f64> {
    let LevyFamily::InverseGaussian { a, b } = params.nu().family() else {
        return None;
    };
    let (c0, c1, c2) = LevyMeasure::ig_constants(a, b, params.lambda());
    let cap = 0.1 / c2;
    if tau <= 0.0 {
        return Some(cap);
    }
    let rho = params.rho();
    let budget =
        SMALL_JUMP_VARIANCE * epsilon(params.lambda(), tau) * sigma_t_sq / ((rho * rho + 1.0) * tau);
    let second = |d: f64| ig_small_moments(c0, c1, c2, d).1;
    if second(cap) <= budget {
        return Some(cap);
    }
    let (mut lo, mut hi) = (1e-40f64.ln(), cap.ln());
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if second(mid.exp()) <= budget {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(lo.exp())
}

/// Sampler of the jumps of `H` on an interval of length `tau`.
enum JumpSampler {
    None,
    Compound { count: Poisson<f64>, size: Exp<f64> },
    IgBig { count: Option<Poisson<f64>>, delta: f64, c2: f64, p_first: f64 },
}

/// Per-path constants shared by every draw.
struct PathSetup {
    sampler: JumpSampler,
    tau: f64,
    lambda: f64,
    rho: f64,
    /// `x + (r + mu) tau` with `mu` compensating the sampled jumps only.
    base_drift: f64,
    base_sigma: f64,
    base_iv: f64,
}

impl PathSetup {
    fn new(params: &BnsParams, state: &MarketState, tau: f64) -> Result<Self> {
        let lambda = params.lambda();
        let nu = params.nu();
        let s2 = state.sigma_t_sq;
        let eps = epsilon(lambda, tau);
        let mut base_sigma = (-lambda * tau).exp() * s2;
        let mut base_iv = eps * s2;
        let mut mu = params.mu();
        let sampler = match nu.family() {
            LevyFamily::Null => JumpSampler::None,
            LevyFamily::Gamma { a, b } => {
                let mean = lambda * a * tau;
                let count = Poisson::new(mean.max(f64::MIN_POSITIVE))
                    .map_err(|e| crate::Error::Domain(format!("jump count: {e}")))?;
                let size = Exp::new(b).map_err(|e| crate::Error::Domain(format!("jump size: {e}")))?;
                JumpSampler::Compound { count, size }
            }
            LevyFamily::InverseGaussian { a, b } => {
                let (c0, c1, c2) = LevyMeasure::ig_constants(a, b, lambda);
                let delta = small_jump_threshold(params, s2, tau).expect("IG has a threshold");
                let (m1, _) = ig_small_moments(c0, c1, c2, delta);
                base_sigma += m1 * eps;
                base_iv += m1 * epsilon_integral(lambda, tau);
                let w0 = c0 * crate::levy::gamma3(c2, delta)?;
                let w1 = c1 * crate::levy::gamma1(c2, delta)?;
                // Only the drift of the sampled jumps is compensated explicitly.
                mu = nu.tail_mass(delta)? - nu.tilted_tail(delta, -params.rho())?;
                let mean = tau * (w0 + w1);
                let count = if mean > 0.0 {
                    Some(
                        Poisson::new(mean)
                            .map_err(|e| crate::Error::Domain(format!("jump count: {e}")))?,
                    )
                } else {
                    None
                };
                JumpSampler::IgBig { count, delta, c2, p_first: w0 / (w0 + w1) }
            }
        };
        let base_drift = state.x + (params.rate() + mu) * tau;
        Ok(Self { sampler, tau, lambda, rho: params.rho(), base_drift, base_sigma, base_iv })
    }

    fn big_ig_jump<R: Rng>(rng: &mut R, delta: f64, c2: f64, p_first: f64) -> f64 {
        if rng.random::<f64>() < p_first {
            // z^{-3/2} e^{-c2 z} on [delta, inf): Pareto(1/2) proposal.
            loop {
                let u = 1.0 - rng.random::<f64>();
                let z = delta / (u * u);
                if rng.random::<f64>() < (-c2 * (z - delta)).exp() {
                    return z;
                }
            }
        } else {
            // z^{-1/2} e^{-c2 z} on [delta, inf): Gamma(1/2, c2) conditioned on z >= delta.
            loop {
                let g: f64 = rng.sample(StandardNormal);
                let z = g * g / (2.0 * c2);
                if z >= delta {
                    return z;
                }
            }
        }
    }

    fn jump_size<R: Rng>(&self, rng: &mut R) -> f64 {
        match &self.sampler {
            JumpSampler::None => 0.0,
            JumpSampler::Compound { size, .. } => size.sample(rng),
            JumpSampler::IgBig { delta, c2, p_first, .. } => Self::big_ig_jump(rng, *delta, *c2, *p_first),
        }
    }

    /// Jump functionals `(sum e^{-lambda s} z, sum eps(s) z, sum z, count)` with
    /// `s` the remaining time at each jump.
    fn jumps<R: Rng>(&self, rng: &mut R) -> (f64, f64, f64, u64) {
        let count = match &self.sampler {
            JumpSampler::None | JumpSampler::IgBig { count: None, .. } => return (0.0, 0.0, 0.0, 0),
            JumpSampler::Compound { count, .. } => count.sample(rng) as u64,
            JumpSampler::IgBig { count: Some(count), .. } => count.sample(rng) as u64,
        };
        let (mut decay, mut integrated, mut total) = (0.0, 0.0, 0.0);
        for _ in 0..count {
            let s = self.tau * rng.random::<f64>();
            let z = self.jump_size(rng);
            decay += (-self.lambda * s).exp() * z;
            integrated += epsilon(self.lambda, s) * z;
            total += z;
        }
        (decay, integrated, total, count)
    }

    /// Conditional mean of `X_T` given the jumps, the jump-path sample and `IV`.
    fn conditional<R: Rng>(&self, rng: &mut R) -> (f64, TerminalSample) {
        let (decay, integrated, total, n) = self.jumps(rng);
        let iv = self.base_iv + integrated;
        let mean = self.base_drift - 0.5 * iv + self.rho * total;
        let sample =
            TerminalSample { x_t: mean, sigma_sq: self.base_sigma + decay, integrated_var: iv, n_jumps: n };
        (mean, sample)
    }
}

fn path_rng(seed: u64, path: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(path as u64);
    rng
}

/// Terminal draws on `n_paths` independent paths.
///
/// Path `i` uses its own stream of the seeded generator, so the output is the
/// same for any thread count.
pub fn simulate_terminal(
    params: &BnsParams,
    state: &MarketState,
    n_paths: usize,
    seed: u64,
) -> Result<Vec<TerminalSample>> {
    if n_paths == 0 {
        return domain("need at least one path");
    }
    let tau = state.tau(params)?;
    let setup = PathSetup::new(params, state, tau)?;
    Ok((0..n_paths)
        .into_par_iter()
        .map(|i| {
            let mut rng = path_rng(seed, i);
            let (mean, mut s) = setup.conditional(&mut rng);
            let g: f64 = rng.sample(StandardNormal);
            s.x_t = mean + s.integrated_var.sqrt() * g;
            s
        })
        .collect())
}

/// Running mean and centered sum of squares, merged in a fixed order.
#[derive(Clone, Copy, Default)]
struct Moments {
    n: f64,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, v: f64) {
        self.n += 1.0;
        let d = v - self.mean;
        self.mean += d / self.n;
        self.m2 += d * (v - self.mean);
    }

    fn merge(self, o: Moments) -> Moments {
        if self.n == 0.0 {
            return o;
        }
        let n = self.n + o.n;
        let d = o.mean - self.mean;
        Moments { n, mean: self.mean + d * o.n / n, m2: self.m2 + o.m2 + d * d * self.n * o.n / n }
    }
}

/// Monte Carlo call price with its standard error.
pub fn mc_call_price(params: &BnsParams, state: &MarketState, cfg: McConfig) -> Result<McResult> {
    if cfg.n_paths < 100 {
        return domain(format!("need at least 100 paths, got {}", cfg.n_paths));
    }
    let tau = state.tau(params)?;
    if tau == 0.0 {
        let payoff = (state.spot() - state.strike).max(0.0);
        return Ok(McResult { price: payoff, std_error: 0.0, n_paths: cfg.n_paths });
    }
    let setup = PathSetup::new(params, state, tau)?;
    let (k, r) = (state.strike, params.rate());
    let disc = (-r * tau).exp();
    let n_chunks = cfg.n_paths.div_ceil(CHUNK);
    let chunks: Vec<Result<Moments>> = (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let mut m = Moments::default();
            for i in c * CHUNK..((c + 1) * CHUNK).min(cfg.n_paths) {
                let mut rng = path_rng(cfg.seed, i);
                let (mean, s) = setup.conditional(&mut rng);
                let iv = s.integrated_var;
                let v = match cfg.estimator {
                    Estimator::ConditionalGaussian => {
                        let x = mean + 0.5 * iv - r * tau;
                        blackscholes::price(&BsInputs::new(tau, x, iv / tau, k, r)?)
                    }
                    Estimator::Payoff => {
                        let g: f64 = rng.sample(StandardNormal);
                        disc * ((mean + iv.sqrt() * g).exp() - k).max(0.0)
                    }
                };
                m.push(v);
            }
            Ok(m)
        })
        .collect();
    let mut total = Moments::default();
    for m in chunks {
        total = total.merge(m?);
    }
    let var = total.m2 / (total.n - 1.0);
    Ok(McResult { price: total.mean, std_error: (var / total.n).sqrt(), n_paths: cfg.n_paths })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::{self, Tolerance};

    fn nv(horizon: f64) -> BnsParams {
        let nu = LevyMeasure::inverse_gaussian(0.0872, 11.98, 2.4958).unwrap();
        BnsParams::new(-4.7039, nu, 0.0041, 468.44, 0.0319, horizon).unwrap()
    }

    #[test]
    fn lower_gamma_series_matches_quadrature() {
        for &(a, x) in &[(0.5, 1e-6), (1.5, 0.05), (2.5, 0.1), (0.5, 0.7)] {
            let q = quadrature::adaptive(|t: f64| (-t).exp() * t.powf(a - 1.0), 0.0, x, Tolerance::relative(1e-13))
                .unwrap()
                .value;
            assert!((lower_gamma_series(a, x) / q - 1.0).abs() < 1e-11, "{a} {x}");
        }
    }

    #[test]
    fn small_moments_match_density_quadrature() {
        let p = nv(0.0833);
        let LevyFamily::InverseGaussian { a, b } = p.nu().family() else { unreachable!() };
        let (c0, c1, c2) = LevyMeasure::ig_constants(a, b, p.lambda());
        let delta = 3e-4;
        let (m1, m2) = ig_small_moments(c0, c1, c2, delta);
        let q = |k: i32| {
            quadrature::adaptive(|s: f64| 2.0 * s * (s * s).powi(k) * p.nu().density(s * s).unwrap(), 0.0, delta.sqrt(), Tolerance::relative(1e-12))
                .unwrap()
                .value
        };
        assert!((m1 / q(1) - 1.0).abs() < 1e-10);
        assert!((m2 / q(2) - 1.0).abs() < 1e-10);
    }

    #[test]
    fn threshold_meets_budget_and_cap() {
        let p = nv(0.0833);
        let d = small_jump_threshold(&p, 0.0041, 0.0833).unwrap();
        assert!(d > 0.0 && d <= 0.1 / (0.5 * 11.98 * 11.98));
        let gam = p.with_measure(LevyMeasure::gamma(1.0, 5.0, 2.0).unwrap()).unwrap();
        assert!(small_jump_threshold(&gam, 0.0041, 0.0833).is_none());
    }

    #[test]
    fn simulation_is_reproducible_and_bounded() {
        let p = nv(0.0833);
        let s = MarketState::initial(&p, 468.44).unwrap();
        let a = simulate_terminal(&p, &s, 500, 7).unwrap();
        let b = simulate_terminal(&p, &s, 500, 7).unwrap();
        assert_eq!(a, b);
        let floor_sigma = (-p.lambda() * 0.0833f64).exp() * 0.0041;
        let floor_iv = epsilon(p.lambda(), 0.0833) * 0.0041;
        assert!(a.iter().all(|t| t.sigma_sq >= floor_sigma && t.integrated_var >= floor_iv));
        assert!(simulate_terminal(&p, &s, 0, 7).is_err());
    }

    #[test]
    fn mc_needs_enough_paths_and_pays_off_at_maturity() {
        let p = nv(0.0833);
        let s = MarketState::initial(&p, 468.44).unwrap();
        let cfg = McConfig { n_paths: 10, ..McConfig::default() };
        assert!(mc_call_price(&p, &s, cfg).is_err());
        let done = MarketState::new(0.0833, 470f64.ln(), 0.004, 460.0).unwrap();
        let r = mc_call_price(&p, &done, McConfig::default()).unwrap();
        assert!((r.price - 10.0).abs() < 1e-9 && r.std_error == 0.0);
    }

    #[test]
    fn moments_merge_matches_single_pass() {
        let data: Vec<f64> = (0..1000).map(|i| ((i * 37) % 101) as f64 * 0.1).collect();
        let mut whole = Moments::default();
        data.iter().for_each(|&v| whole.push(v));
        let mut a = Moments::default();
        let mut b = Moments::default();
        data[..313].iter().for_each(|&v| a.push(v));
        data[313..].iter().for_each(|&v| b.push(v));
        let m = a.merge(b);
        assert!((m.mean - whole.mean).abs() < 1e-12 && (m.m2 / whole.m2 - 1.0).abs() < 1e-12);
    }
}
