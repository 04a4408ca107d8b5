//! Named parameter sets and a plain `key = value` configuration format.

use std::fmt;
use std::path::Path;

use crate::error::{Error, Result};
use crate::levy::LevyMeasure;
use crate::model::BnsParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    InverseGaussian,
    Gamma,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParameterSet {
    pub name: String,
    pub family: Family,
    pub rho: f64,
    pub lambda: f64,
    pub a: f64,
    pub b: f64,
    pub sigma_t_sq: f64,
    pub s_t: f64,
    pub r: f64,
}

impl ParameterSet {
    /// IG-OU set fitted by Nicolato and Venardos.
    pub fn nv() -> Self {
        Self {
            name: "NV".into(),
            family: Family::InverseGaussian,
            rho: -4.7039,
            lambda: 2.4958,
            a: 0.0872,
            b: 11.98,
            sigma_t_sq: 0.0041,
            s_t: 468.44,
            r: 0.0319,
        }
    }

    /// IG-OU set fitted by Schoutens.
    pub fn sch() -> Self {
        Self {
            name: "Sch".into(),
            family: Family::InverseGaussian,
            rho: -0.1926,
            lambda: 0.0636,
            a: 6.2410,
            b: 0.7995,
            sigma_t_sq: 0.0156,
            s_t: 1124.47,
            r: 0.007,
        }
    }

    /// `nv`, `sch`, or a path to a configuration file.
    pub fn resolve(name_or_path: &str) -> Result<Self> {
        match name_or_path.to_ascii_lowercase().as_str() {
            "nv" => Ok(Self::nv()),
            "sch" => Ok(Self::sch()),
            _ => Self::from_file(name_or_path),
        }
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        text.parse()
    }

    pub fn measure(&self) -> Result<LevyMeasure> {
        match self.family {
            Family::InverseGaussian => LevyMeasure::inverse_gaussian(self.a, self.b, self.lambda),
            Family::Gamma => LevyMeasure::gamma(self.a, self.b, self.lambda),
        }
    }

    /// Model parameters at maturity `horizon`, without the assumption checks so
    /// maturity sweeps can pass through horizons where they fail.
    pub fn params(&self, horizon: f64) -> Result<BnsParams> {
        BnsParams::relaxed(self.rho, self.measure()?, self.sigma_t_sq, self.s_t, self.r, horizon)
    }

    /// Model parameters with the assumption checks enforced.
    pub fn validated_params(&self, horizon: f64) -> Result<BnsParams> {
        BnsParams::new(self.rho, self.measure()?, self.sigma_t_sq, self.s_t, self.r, horizon)
    }

    pub fn x0(&self) -> f64 {
        self.s_t.ln()
    }

    /// `e^{X - 2 Sigma^2}`, the ITM regime boundary.
    pub fn itm_boundary(&self) -> f64 {
        (self.x0() - 2.0 * self.sigma_t_sq).exp()
    }

    /// `e^{X + 2 Sigma^2}`, the deep OTM boundary.
    pub fn otm_boundary(&self) -> f64 {
        (self.x0() + 2.0 * self.sigma_t_sq).exp()
    }

    /// Fixed ITM strike `e^{X - 2 Sigma^2} - 0.02 e^X` used for maturity sweeps.
    pub fn itm_strike(&self) -> f64 {
        self.itm_boundary() - 0.02 * self.s_t
    }

    /// Lowest strike of the strike sweeps, `e^{X - 2 Sigma^2} - 0.05 e^X`.
    pub fn sweep_low_strike(&self) -> f64 {
        self.itm_boundary() - 0.05 * self.s_t
    }
}

impl fmt::Display for ParameterSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let family = match self.family {
            Family::InverseGaussian => "ig",
            Family::Gamma => "gamma",
        };
        write!(
            f,
            "name={} family={family} rho={} lambda={} a={} b={} sigma_sq={} s0={} r={}",
            self.name, self.rho, self.lambda, self.a, self.b, self.sigma_t_sq, self.s_t, self.r
        )
    }
}

impl std::str::FromStr for ParameterSet {
    type Err = Error;

    /// Lines of `key = value`; `#` starts a comment. Keys: `name`, `family`
    /// (`ig` or `gamma`), `rho`, `lambda`, `a`, `b`, `sigma_sq`, `s0`, `r`.
    fn from_str(text: &str) -> Result<Self> {
        let mut set = ParameterSet {
            name: "custom".into(),
            family: Family::InverseGaussian,
            rho: f64::NAN,
            lambda: f64::NAN,
            a: f64::NAN,
            b: f64::NAN,
            sigma_t_sq: f64::NAN,
            s_t: f64::NAN,
            r: f64::NAN,
        };
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", no + 1)))?;
            let (key, value) = (key.trim(), value.trim());
            let num = || {
                value
                    .parse::<f64>()
                    .map_err(|_| Error::Config(format!("line {}: {key} is not a number: {value}", no + 1)))
            };
            match key {
                "name" => set.name = value.to_string(),
                "family" => {
                    set.family = match value.to_ascii_lowercase().as_str() {
                        "ig" | "ig_ou" | "inverse_gaussian" => Family::InverseGaussian,
                        "gamma" | "gamma_ou" => Family::Gamma,
                        other => return Err(Error::Config(format!("unknown family {other}"))),
                    }
                }
                "rho" => set.rho = num()?,
                "lambda" => set.lambda = num()?,
                "a" => set.a = num()?,
                "b" => set.b = num()?,
                "sigma_sq" | "sigma_t_sq" => set.sigma_t_sq = num()?,
                "s0" | "s_t" => set.s_t = num()?,
                "r" | "rate" => set.r = num()?,
                other => return Err(Error::Config(format!("line {}: unknown key {other}", no + 1))),
            }
        }
        let fields = [
            ("rho", set.rho),
            ("lambda", set.lambda),
            ("a", set.a),
            ("b", set.b),
            ("sigma_sq", set.sigma_t_sq),
            ("s0", set.s_t),
            ("r", set.r),
        ];
        if let Some((k, _)) = fields.iter().find(|(_, v)| v.is_nan()) {
            return Err(Error::Config(format!("missing key {k}")));
        }
        set.params(1.0)?;
        Ok(set)
    }
}
