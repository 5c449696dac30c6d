//! JSON formats for gambles.
//!
//! ```text
//! {"type": "discrete", "outcomes": [[200, 0.5], [-100, 0.5]]}
//! {"type": "density", "family": "uniform", "a": -100, "b": 200}
//! {"type": "density", "family": "beta", "alpha": 2, "beta": 3, "a": -100, "b": 200}
//! {"type": "density", "family": "lognormal", "mu": 1, "sigma": 2, "theta": -10}
//! {"type": "density", "family": "tabulated", "x": [-1, 0, 2], "density": [0.2, 0.5, 0.1]}
//! ```

use serde::{Deserialize, Serialize};

use crate::error::{Result, RiskError};
use crate::family::{Family, Tabulated};
use crate::gamble::{DensityGamble, DiscreteGamble, Gamble};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase", deny_unknown_fields)]
pub enum FamilySpec {
    Uniform {
        a: f64,
        b: f64,
    },
    Beta {
        alpha: f64,
        beta: f64,
        a: f64,
        b: f64,
    },
    Lognormal {
        mu: f64,
        sigma: f64,
        theta: f64,
    },
    Tabulated {
        x: Vec<f64>,
        density: Vec<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum GambleSpec {
    Discrete { outcomes: Vec<[f64; 2]> },
    Density(FamilySpec),
}

impl FamilySpec {
    pub fn to_family(&self) -> Result<Family> {
        Ok(match self {
            FamilySpec::Uniform { a, b } => Family::Uniform { a: *a, b: *b },
            FamilySpec::Beta { alpha, beta, a, b } => Family::Beta {
                alpha: *alpha,
                beta: *beta,
                a: *a,
                b: *b,
            },
            FamilySpec::Lognormal { mu, sigma, theta } => Family::Lognormal {
                mu: *mu,
                sigma: *sigma,
                theta: *theta,
            },
            FamilySpec::Tabulated { x, density } => {
                Family::Tabulated(Tabulated::new(x.clone(), density.clone())?)
            }
        })
    }

    /// Names of the scalar parameters, in declaration order.
    pub fn parameter_names(&self) -> &'static [&'static str] {
        match self {
            FamilySpec::Uniform { .. } => &["a", "b"],
            FamilySpec::Beta { .. } => &["alpha", "beta", "a", "b"],
            FamilySpec::Lognormal { .. } => &["mu", "sigma", "theta"],
            FamilySpec::Tabulated { .. } => &[],
        }
    }

    /// Copy with the named scalar parameter replaced.
    pub fn with_parameter(&self, name: &str, value: f64) -> Result<FamilySpec> {
        let mut s = self.clone();
        let slot = match (&mut s, name) {
            (FamilySpec::Uniform { a, .. }, "a") => a,
            (FamilySpec::Uniform { b, .. }, "b") => b,
            (FamilySpec::Beta { alpha, .. }, "alpha") => alpha,
            (FamilySpec::Beta { beta, .. }, "beta") => beta,
            (FamilySpec::Beta { a, .. }, "a") => a,
            (FamilySpec::Beta { b, .. }, "b") => b,
            (FamilySpec::Lognormal { mu, .. }, "mu") => mu,
            (FamilySpec::Lognormal { sigma, .. }, "sigma") => sigma,
            (FamilySpec::Lognormal { theta, .. }, "theta") => theta,
            _ => {
                return Err(RiskError::Parse(format!(
                    "family has no parameter '{name}' (expected one of {:?})",
                    self.parameter_names()
                )))
            }
        };
        *slot = value;
        Ok(s)
    }
}

impl GambleSpec {
    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn build(&self) -> Result<Gamble> {
        Ok(match self {
            GambleSpec::Discrete { outcomes } => {
                DiscreteGamble::new(outcomes.iter().map(|o| (o[0], o[1])))?.into()
            }
            GambleSpec::Density(f) => DensityGamble::new(f.to_family()?)?.into(),
        })
    }
}

/// Parses and validates a gamble.
pub fn gamble_from_json(s: &str) -> Result<Gamble> {
    GambleSpec::from_json(s)?.build()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::RiskError;

    #[test]
    fn parses_each_kind() {
        let cases = [
            r#"{"type": "discrete", "outcomes": [[200, 0.5], [-100, 0.5]]}"#,
            r#"{"type": "density", "family": "uniform", "a": -100, "b": 200}"#,
            r#"{"type": "density", "family": "beta", "alpha": 2, "beta": 3, "a": -100, "b": 200}"#,
            r#"{"type": "density", "family": "lognormal", "mu": 1, "sigma": 2, "theta": -10}"#,
            r#"{"type": "density", "family": "tabulated", "x": [-1, 0, 2], "density": [0.2, 0.5, 0.1]}"#,
        ];
        for c in cases {
            let g = gamble_from_json(c).unwrap();
            assert!(g.stats().mean > 0.0, "{c}");
        }
    }

    #[test]
    fn rejects_unknown_fields_and_families() {
        for c in [
            r#"{"type": "density", "family": "uniform", "a": -100, "b": 200, "c": 1}"#,
            r#"{"type": "density", "family": "gamma", "k": 2}"#,
            r#"{"type": "mixture"}"#,
            r#"{"type": "discrete", "outcomes": [[1, 0.5, 3]]}"#,
        ] {
            assert!(matches!(gamble_from_json(c), Err(RiskError::Parse(_))), "{c}");
        }
    }

    #[test]
    fn validation_errors_are_not_parse_errors() {
        let e = gamble_from_json(r#"{"type": "density", "family": "uniform", "a": -100, "b": 50}"#)
            .unwrap_err();
        assert!(matches!(e, RiskError::NotAGamble { .. }));
    }

    #[test]
    fn parameter_replacement() {
        let f = FamilySpec::Beta {
            alpha: 2.0,
            beta: 3.0,
            a: -100.0,
            b: 200.0,
        };
        assert_eq!(
            f.with_parameter("beta", 3.5).unwrap(),
            FamilySpec::Beta {
                alpha: 2.0,
                beta: 3.5,
                a: -100.0,
                b: 200.0
            }
        );
        assert!(f.with_parameter("theta", 1.0).is_err());
    }

    #[test]
    fn round_trips() {
        let s = GambleSpec::Density(FamilySpec::Lognormal {
            mu: 1.0,
            sigma: 2.0,
            theta: -3.0,
        });
        let j = serde_json::to_string(&s).unwrap();
        assert_eq!(GambleSpec::from_json(&j).unwrap(), s);
    }
}
