//! Checks that a measure fits the regularity conditions the approximations rely on.

use std::fmt;

use super::{LevyFamily, LevyMeasure};
use crate::model::epsilon;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Criterion {
    /// `int_1^inf e^{2 eps(T) z} nu(dz) < inf`.
    ExponentialMoment,
    /// `f(z) <= C0 gamma(z) e^{-C1 z}` with `gamma(z) = max(z^{-3/2}, z^{-1/2})`.
    Envelope,
    /// `f` decreasing on `(0, inf)`.
    MonotoneDensity,
}

impl fmt::Display for Criterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Criterion::ExponentialMoment => "exponential moment",
            Criterion::Envelope => "density envelope",
            Criterion::MonotoneDensity => "monotone density",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CriterionResult {
    pub criterion: Criterion,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AssumptionReport {
    pub results: Vec<CriterionResult>,
    /// Fitted `(C0, C1)` when an envelope was found.
    pub envelope: Option<(f64, f64)>,
}

impl AssumptionReport {
    pub fn passed(&self) -> bool {
        self.results.iter().all(|r| r.passed)
    }

    pub fn failures(&self) -> Vec<Criterion> {
        self.results.iter().filter(|r| !r.passed).map(|r| r.criterion).collect()
    }
}

impl fmt::Display for AssumptionReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in &self.results {
            let tag = if r.passed { "pass" } else { "FAIL" };
            writeln!(f, "{tag} {}: {}", r.criterion, r.detail)?;
        }
        Ok(())
    }
}

fn gamma_env(z: f64) -> f64 {
    if z < 1.0 {
        z.powf(-1.5)
    } else {
        z.powf(-0.5)
    }
}

fn log_grid(lo: f64, hi: f64, n: usize) -> impl Iterator<Item = f64> {
    let (l, h) = (lo.ln(), hi.ln());
    (0..n).map(move |i| (l + (h - l) * i as f64 / (n - 1) as f64).exp())
}

/// Smallest `C0` with `f <= C0 gamma e^{-c1 z}`, from a log grid refined by golden section.
fn fit_c0(nu: &LevyMeasure, c1: f64) -> Option<f64> {
    let ratio = |z: f64| nu.density(z).ok().map(|f| f / (gamma_env(z) * (-c1 * z).exp()));
    let hi = 200.0 / c1;
    let grid: Vec<f64> = log_grid(1e-12, hi, 2001).collect();
    let vals: Vec<f64> = grid.iter().map(|&z| ratio(z)).collect::<Option<_>>()?;
    if vals.iter().any(|v| !v.is_finite()) {
        return None;
    }
    let (imax, &vmax) = vals.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1))?;
    let (mut a, mut b) = (grid[imax.saturating_sub(1)].ln(), grid[(imax + 1).min(grid.len() - 1)].ln());
    let g = |t: f64| ratio(t.exp()).unwrap_or(0.0);
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..100 {
        let c = b - phi * (b - a);
        let d = a + phi * (b - a);
        if g(c) > g(d) {
            b = d;
        } else {
            a = c;
        }
    }
    let best = vmax.max(g(0.5 * (a + b)));
    // Small safety margin over the sampled supremum.
    Some(best * (1.0 + 1e-6))
}

/// Reports each criterion for `nu` with leverage `rho` up to `horizon`.
pub fn validate_assumptions(nu: &LevyMeasure, rho: f64, horizon: f64) -> AssumptionReport {
    let eps2 = 2.0 * epsilon(nu.lambda(), horizon);
    let mut results = Vec::with_capacity(3);

    let (moment_ok, moment_detail) = match nu.family() {
        LevyFamily::InverseGaussian { b, .. } => {
            let c2 = 0.5 * b * b;
            (c2 > eps2, format!("b^2/2 = {c2:.6} vs 2 eps(T) = {eps2:.6}"))
        }
        LevyFamily::Gamma { b, .. } => (b > eps2, format!("b = {b:.6} vs 2 eps(T) = {eps2:.6}")),
        LevyFamily::Null => (true, "no jumps".into()),
    };
    let moment_ok = moment_ok && rho < 0.0 && horizon > 0.0;
    results.push(CriterionResult {
        criterion: Criterion::ExponentialMoment,
        passed: moment_ok,
        detail: if rho < 0.0 && horizon > 0.0 {
            moment_detail
        } else {
            format!("{moment_detail}; needs rho < 0 and T > 0 (rho = {rho}, T = {horizon})")
        },
    });

    let envelope = if nu.is_null() {
        Some((0.0, 1.0))
    } else {
        let c1 = 0.5 * nu.decay_rate();
        fit_c0(nu, c1).map(|c0| (c0, c1))
    };
    let envelope_ok = match envelope {
        Some((c0, c1)) if !nu.is_null() => log_grid(1e-12, 400.0 / c1, 5000)
            .all(|z| nu.density(z).is_ok_and(|f| f <= c0 * gamma_env(z) * (-c1 * z).exp())),
        Some(_) => true,
        None => false,
    };
    results.push(CriterionResult {
        criterion: Criterion::Envelope,
        passed: envelope_ok,
        detail: match envelope {
            Some((c0, c1)) => format!("C0 = {c0:.6e}, C1 = {c1:.6e}"),
            None => "no finite envelope found".into(),
        },
    });

    let monotone = if nu.is_null() {
        true
    } else {
        let dens: Vec<f64> = log_grid(1e-10, 100.0 / nu.decay_rate(), 1000)
            .map(|z| nu.density(z).unwrap_or(f64::NAN))
            .collect();
        dens.windows(2).all(|w| w[1] <= w[0])
    };
    results.push(CriterionResult {
        criterion: Criterion::MonotoneDensity,
        passed: monotone,
        detail: if monotone { "decreasing on sampled grid".into() } else { "increase detected".into() },
    });

    AssumptionReport { results, envelope: envelope.filter(|_| envelope_ok) }
}
