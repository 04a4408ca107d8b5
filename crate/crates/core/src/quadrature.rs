//! Numerical integration.
//!
//! Three independent node families live here:
//!
//! * globally adaptive 21-point Gauss-Kronrod (the workhorse, QUADPACK-style
//!   error estimate),
//! * tanh-sinh (double exponential) level doubling, used to cross-check the
//!   Gauss-Kronrod results on integrands with endpoint singularities,
//! * fixed Gauss-Legendre rules for smooth integrands (the characteristic
//!   function time integral).
//!
//! Improper integrals on `[a, inf)` are mapped onto `[0, 1)` by
//! `z = a + t / (1 - t)`.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::sync::OnceLock;

use crate::error::{Error, Result};

/// Stopping rule for the adaptive integrators.
///
/// Integration stops once the error estimate falls below
/// `max(abs, rel * |value|)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
    pub max_intervals: usize,
}

impl Tolerance {
    pub fn new(abs: f64, rel: f64) -> Self {
        Tolerance {
            abs,
            rel,
            max_intervals: 4000,
        }
    }

    pub fn absolute(abs: f64) -> Self {
        Self::new(abs, 0.0)
    }

    pub fn relative(rel: f64) -> Self {
        Self::new(0.0, rel)
    }

    fn target(&self, value: f64) -> f64 {
        self.abs.max(self.rel * value.abs())
    }
}

/// An integral together with its error estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
}

impl std::ops::Add for Estimate {
    type Output = Estimate;
    fn add(self, rhs: Estimate) -> Estimate {
        Estimate {
            value: self.value + rhs.value,
            error: self.error + rhs.error,
        }
    }
}

const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];

const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_600_525_690_272,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

// Gauss weights for the odd-indexed Kronrod nodes.
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

/// One application of the 21-point Kronrod rule with QUADPACK's error scaling.
fn gk21<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Estimate {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut resg = 0.0;
    let mut resk = WGK[10] * fc;
    let mut resabs = resk.abs();
    let mut fv1 = [0.0; 10];
    let mut fv2 = [0.0; 10];
    for j in 0..10 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        fv1[j] = f1;
        fv2[j] = f2;
        resk += WGK[j] * (f1 + f2);
        resabs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            resg += WG[j / 2] * (f1 + f2);
        }
    }
    let reskh = 0.5 * resk;
    let mut resasc = WGK[10] * (fc - reskh).abs();
    for j in 0..10 {
        resasc += WGK[j] * ((fv1[j] - reskh).abs() + (fv2[j] - reskh).abs());
    }
    let value = resk * half;
    resabs *= half.abs();
    resasc *= half.abs();
    let mut err = ((resk - resg) * half).abs();
    if resasc != 0.0 && err != 0.0 {
        err = resasc * (200.0 * err / resasc).powf(1.5).min(1.0);
    }
    if resabs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * resabs);
    }
    Estimate { value, error: err }
}

struct Interval {
    a: f64,
    b: f64,
    est: Estimate,
}

impl PartialEq for Interval {
    fn eq(&self, other: &Self) -> bool {
        self.est.error == other.est.error
    }
}
impl Eq for Interval {}
impl PartialOrd for Interval {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Interval {
    fn cmp(&self, other: &Self) -> Ordering {
        self.est.error.total_cmp(&other.est.error)
    }
}

/// Globally adaptive Gauss-Kronrod over `[a, b]`.
pub fn adaptive<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: Tolerance) -> Result<Estimate> {
    adaptive_with_breaks(f, &[a, b], tol)
}

/// Globally adaptive Gauss-Kronrod over consecutive panels `points[0..n]`.
///
/// Breakpoints let the caller flag kinks or sharp transitions so the first
/// bisections are not wasted finding them.
pub fn adaptive_with_breaks<F: Fn(f64) -> f64>(
    f: F,
    points: &[f64],
    tol: Tolerance,
) -> Result<Estimate> {
    let mut heap = BinaryHeap::new();
    let mut total = Estimate {
        value: 0.0,
        error: 0.0,
    };
    for w in points.windows(2) {
        if w[1] <= w[0] {
            continue;
        }
        let est = gk21(&f, w[0], w[1]);
        total = total + est;
        heap.push(Interval {
            a: w[0],
            b: w[1],
            est,
        });
    }
    if !(total.value.is_finite() && total.error.is_finite()) {
        return Err(Error::Quadrature {
            achieved: f64::INFINITY,
            requested: tol.target(0.0),
        });
    }
    while total.error > tol.target(total.value) {
        if heap.len() >= tol.max_intervals {
            return Err(Error::Quadrature {
                achieved: total.error,
                requested: tol.target(total.value),
            });
        }
        let worst = heap.pop().expect("heap never empty while error > 0");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // Interval has collapsed to adjacent floats; nothing left to gain.
            return Err(Error::Quadrature {
                achieved: total.error,
                requested: tol.target(total.value),
            });
        }
        let left = gk21(&f, worst.a, mid);
        let right = gk21(&f, mid, worst.b);
        total.value += left.value + right.value - worst.est.value;
        total.error += left.error + right.error - worst.est.error;
        heap.push(Interval {
            a: worst.a,
            b: mid,
            est: left,
        });
        heap.push(Interval {
            a: mid,
            b: worst.b,
            est: right,
        });
        // Resum periodically so cancellation in the running totals cannot drift.
        if heap.len() % 64 == 0 {
            total = heap.iter().fold(
                Estimate {
                    value: 0.0,
                    error: 0.0,
                },
                |acc, iv| acc + iv.est,
            );
        }
    }
    Ok(total)
}

/// Maps `[a, inf)` to `[0, 1)` via `z = a + t/(1-t)`.
fn to_unit<F: Fn(f64) -> f64>(f: F, a: f64) -> impl Fn(f64) -> f64 {
    move |t: f64| {
        if t >= 1.0 {
            return 0.0;
        }
        let s = 1.0 - t;
        let v = f(a + t / s);
        if v == 0.0 {
            0.0
        } else {
            v / (s * s)
        }
    }
}

/// `int_a^inf f(z) dz` by Gauss-Kronrod on the compactified interval.
pub fn semi_infinite<F: Fn(f64) -> f64>(f: F, a: f64, tol: Tolerance) -> Result<Estimate> {
    adaptive(to_unit(f, a), 0.0, 1.0, tol)
}

/// `int_u^inf f(z) dz` for integrands with a power-law singularity just below
/// `u` (e.g. `z^{-3/2}` Levy densities with small `u`).
///
/// Geometric panels `u, 2u, 4u, ...` up to 1 resolve the power law; the
/// remainder is compactified.
pub fn tail<F: Fn(f64) -> f64>(f: F, u: f64, tol: Tolerance) -> Result<Estimate> {
    let mut points = vec![u];
    let mut z = u;
    while z < 1.0 {
        z = (2.0 * z).min(1.0);
        points.push(z);
    }
    let upper = *points.last().unwrap();
    let near = adaptive_with_breaks(&f, &points, tol)?;
    let far = semi_infinite(&f, upper, tol)?;
    Ok(near + far)
}

/// Tanh-sinh quadrature on `[a, b]`; never evaluates the endpoints.
pub fn tanh_sinh<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: Tolerance) -> Result<Estimate> {
    use std::f64::consts::FRAC_PI_2;
    let half = 0.5 * (b - a);
    // Node at parameter t, returned as (distance from a, distance from b, weight).
    let node = |t: f64| {
        let u = FRAC_PI_2 * t.sinh();
        // 1 - tanh(|u|) computed without cancellation.
        let e = (-2.0 * u.abs()).exp();
        let comp = 2.0 * e / (1.0 + e);
        let w = FRAC_PI_2 * t.cosh() * comp * (2.0 - comp);
        let (from_a, from_b) = if u >= 0.0 {
            (half * (2.0 - comp), half * comp)
        } else {
            (half * comp, half * (2.0 - comp))
        };
        (from_a, from_b, w * half)
    };
    let eval = |t: f64| -> f64 {
        let (da, db, w) = node(t);
        if w == 0.0 || da <= 0.0 || db <= 0.0 {
            return 0.0;
        }
        let x = if da < db { a + da } else { b - db };
        if x <= a || x >= b {
            return 0.0;
        }
        w * f(x)
    };
    let t_max = 4.0;
    let mut h = 1.0;
    let mut sum = eval(0.0);
    let mut k = 1;
    while (k as f64) * h <= t_max {
        let t = k as f64 * h;
        sum += eval(t) + eval(-t);
        k += 1;
    }
    let mut prev = sum * h;
    for _level in 0..12 {
        h *= 0.5;
        let mut k = 1;
        loop {
            let t = k as f64 * h;
            if t > t_max {
                break;
            }
            sum += eval(t) + eval(-t);
            k += 2;
        }
        let cur = sum * h;
        let err = (cur - prev).abs();
        if err <= tol.target(cur) {
            return Ok(Estimate {
                value: cur,
                error: err,
            });
        }
        prev = cur;
    }
    Err(Error::Quadrature {
        achieved: f64::NAN,
        requested: tol.target(prev),
    })
}

/// Tanh-sinh on `[a, inf)` via the same compactification as [`semi_infinite`].
pub fn tanh_sinh_semi_infinite<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    tol: Tolerance,
) -> Result<Estimate> {
    tanh_sinh(to_unit(f, a), 0.0, 1.0, tol)
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    /// Computes the `n`-point rule by Newton iteration on `P_n`.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1);
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        GaussLegendre { nodes, weights }
    }

    /// Cached 64- and 128-point rules; other sizes are built on demand.
    pub fn cached(n: usize) -> &'static GaussLegendre {
        static GL64: OnceLock<GaussLegendre> = OnceLock::new();
        static GL128: OnceLock<GaussLegendre> = OnceLock::new();
        match n {
            64 => GL64.get_or_init(|| GaussLegendre::new(64)),
            128 => GL128.get_or_init(|| GaussLegendre::new(128)),
            _ => Box::leak(Box::new(GaussLegendre::new(n))),
        }
    }

    /// Nodes mapped to `[a, b]` paired with scaled weights.
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let c = 0.5 * (a + b);
        let h = 0.5 * (b - a);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(&x, &w)| (c + h * x, h * w))
    }

    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F, a: f64, b: f64) -> f64 {
        self.mapped(a, b).map(|(x, w)| w * f(x)).sum()
    }
}

/// `(P_n(x), P_n'(x))` by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kronrod_rule_is_exact_to_degree_31() {
        for deg in 0..=31 {
            let est = gk21(&|x: f64| x.powi(deg), -1.0, 1.0);
            let exact = if deg % 2 == 1 {
                0.0
            } else {
                2.0 / (deg as f64 + 1.0)
            };
            assert!((est.value - exact).abs() < 1e-14, "degree {deg}");
        }
    }

    #[test]
    fn embedded_gauss_rule_is_exact_to_degree_19() {
        for deg in (0..=19).step_by(2) {
            let mut g = 0.0;
            for j in (1..10).step_by(2) {
                g += WG[j / 2] * 2.0 * XGK[j].powi(deg);
            }
            assert!((g - 2.0 / (deg as f64 + 1.0)).abs() < 1e-14, "degree {deg}");
        }
    }

    #[test]
    fn adaptive_handles_sqrt_singularity() {
        let est = adaptive(|x: f64| 1.0 / x.sqrt(), 0.0, 1.0, Tolerance::relative(1e-12)).unwrap();
        assert!((est.value - 2.0).abs() < 1e-10);
    }

    #[test]
    fn semi_infinite_exponential() {
        let est = semi_infinite(|x: f64| (-x).exp(), 0.0, Tolerance::relative(1e-13)).unwrap();
        assert!((est.value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn tail_of_power_law() {
        // int_u^inf z^{-3/2} e^{-z} dz, compared against the closed form
        // 2 e^{-u}/sqrt(u) - 2 sqrt(pi) erfc(sqrt(u)).
        let u: f64 = 1e-6;
        let est = tail(|z: f64| z.powf(-1.5) * (-z).exp(), u, Tolerance::relative(1e-13)).unwrap();
        let exact = 2.0 * (-u).exp() / u.sqrt()
            - 2.0 * std::f64::consts::PI.sqrt() * libm::erfc(u.sqrt());
        assert!((est.value / exact - 1.0).abs() < 1e-11);
    }

    #[test]
    fn tanh_sinh_matches_closed_forms() {
        let est = tanh_sinh(|x: f64| 1.0 / x.sqrt(), 0.0, 1.0, Tolerance::relative(1e-12)).unwrap();
        assert!((est.value - 2.0).abs() < 1e-11);
        let est =
            tanh_sinh_semi_infinite(|x: f64| (-x).exp(), 0.0, Tolerance::relative(1e-12)).unwrap();
        assert!((est.value - 1.0).abs() < 1e-11);
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        for &n in &[5usize, 64, 128] {
            let rule = GaussLegendre::new(n);
            let sum: f64 = rule.weights.iter().sum();
            assert!((sum - 2.0).abs() < 1e-13);
            let deg = (2 * n - 1).min(40) as i32;
            let v = rule.integrate(|x| x.powi(deg - 1), 0.0, 1.0);
            assert!((v - 1.0 / deg as f64).abs() < 1e-13, "n={n}");
        }
    }

    #[test]
    fn exhausted_budget_reports_error() {
        let tol = Tolerance {
            abs: 1e-30,
            rel: 0.0,
            max_intervals: 3,
        };
        let r = adaptive(|x: f64| (50.0 * x).sin().abs(), 0.0, 10.0, tol);
        assert!(matches!(r, Err(Error::Quadrature { .. })));
    }
}
