//! The expected log-growth `phi(lambda) = E log(1 + lambda X)` and its slope.
//!
//! `phi` is strictly concave on `[0, 1/L]` with `phi(0) = 0` and
//! `phi'(0) = E X > 0`. For discrete gambles it diverges to `-inf` at
//! `lambda* = 1/L`; for densities it stays finite there or diverges to
//! `-inf`, and its sign at `lambda*` decides the riskiness regime.
//!
//! Internally a point on `[0, lambda*]` carries `slack = 1 - lambda L` and
//! `log_slack = -ln(slack)` computed directly rather than by subtraction, so
//! points arbitrarily close to `lambda*` stay distinguishable.

use crate::error::{Result, RiskError};
use crate::family::LeftEnd;
use crate::gamble::{neumaier_sum, DensityGamble, DiscreteGamble, Gamble};
use crate::quadrature::Estimate;

/// Default absolute tolerance for `phi` evaluations and root residuals.
pub const DEFAULT_TOL: f64 = 1e-10;

/// Value of `phi` at `lambda` with an absolute error bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhiEvaluation {
    pub lambda: f64,
    /// May be `-inf` at `lambda = 1/L`.
    pub value: f64,
    pub abs_error_bound: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Point {
    pub lambda: f64,
    pub slack: f64,
    pub log_slack: f64,
}

impl Point {
    pub fn from_log_slack(t: f64, max_loss: f64) -> Point {
        if t.is_infinite() {
            return Point::boundary(max_loss);
        }
        Point {
            lambda: -(-t).exp_m1() / max_loss,
            slack: (-t).exp(),
            log_slack: t,
        }
    }

    pub fn boundary(max_loss: f64) -> Point {
        Point {
            lambda: 1.0 / max_loss,
            slack: 0.0,
            log_slack: f64::INFINITY,
        }
    }

    /// `1 + lambda x` where `u = x + L`.
    #[inline]
    fn growth(&self, x: f64, u: f64) -> f64 {
        if self.slack > 0.5 {
            1.0 + self.lambda * x
        } else {
            self.slack + self.lambda * u
        }
    }

    /// `log(1 + lambda x)` where `u = x + L`.
    #[inline]
    fn log_growth(&self, x: f64, u: f64) -> f64 {
        if u == 0.0 {
            -self.log_slack
        } else if self.slack > 0.5 {
            (self.lambda * x).ln_1p()
        } else {
            (self.slack + self.lambda * u).ln()
        }
    }

    /// `x / (1 + lambda x) * d lambda / d log_slack`, with
    /// `d lambda / d log_slack = slack / L`.
    #[inline]
    fn slope_term(&self, x: f64, u: f64, max_loss: f64) -> f64 {
        if u == 0.0 {
            -1.0
        } else {
            x * (self.slack / max_loss) / self.growth(x, u)
        }
    }
}

/// `phi` and its derivative with respect to `log_slack`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Eval {
    pub phi: Estimate,
    pub slope: f64,
}

pub(crate) fn discrete_eval(g: &DiscreteGamble, p: Point, with_slope: bool) -> Eval {
    let l = g.max_loss();
    let outcomes = g.outcomes();
    let terms = outcomes.iter().map(|o| o.prob * p.log_growth(o.value, o.value + l));
    let value = neumaier_sum(terms.clone());
    let magnitude: f64 = terms.map(f64::abs).sum();
    let slope = if with_slope {
        neumaier_sum(
            outcomes
                .iter()
                .map(|o| o.prob * p.slope_term(o.value, o.value + l, l)),
        )
    } else {
        f64::NAN
    };
    let n = outcomes.len() as f64;
    Eval {
        phi: Estimate::new(value, 4.0 * f64::EPSILON * magnitude * n.sqrt().max(1.0)),
        slope,
    }
}

pub(crate) fn density_eval(g: &DensityGamble, p: Point, tol: f64, with_slope: bool) -> Eval {
    let l = g.max_loss();
    let fam = g.family();
    let mut phi = fam.expect(
        |u| p.log_growth(u - l, u),
        LeftEnd::Log { lambda: p.lambda },
        tol,
    );
    if !phi.value.is_finite() || (phi.value < -1e3 && !(phi.error < 1e3)) {
        phi = Estimate::new(f64::NEG_INFINITY, 0.0);
    }
    let slope = if with_slope {
        fam.expect(|u| p.slope_term(u - l, u, l), LeftEnd::Bounded, tol)
            .value
    } else {
        f64::NAN
    };
    Eval { phi, slope }
}

pub(crate) fn eval(g: &Gamble, p: Point, tol: f64, with_slope: bool) -> Eval {
    match g {
        Gamble::Discrete(d) => discrete_eval(d, p, with_slope),
        Gamble::Density(d) => density_eval(d, p, tol, with_slope),
    }
}

fn point_for(g: &Gamble, lambda: f64) -> Result<Point> {
    let l = g.max_loss();
    let max = 1.0 / l;
    let ratio = lambda * l;
    if !(lambda >= 0.0) || ratio > 1.0 + 4.0 * f64::EPSILON {
        return Err(RiskError::OutOfDomain { lambda, max });
    }
    if ratio >= 1.0 {
        return match g {
            Gamble::Discrete(_) => Err(RiskError::OutOfDomain { lambda, max }),
            Gamble::Density(_) => Ok(Point::boundary(l)),
        };
    }
    Ok(Point {
        lambda,
        slack: 1.0 - ratio,
        log_slack: -(-ratio).ln_1p(),
    })
}

/// `E log(1 + lambda X)` at the default tolerance.
///
/// Discrete gambles accept `0 <= lambda < 1/L`; density gambles also accept
/// `lambda = 1/L`.
pub fn phi(g: &Gamble, lambda: f64) -> Result<PhiEvaluation> {
    phi_with_tol(g, lambda, DEFAULT_TOL)
}

pub fn phi_with_tol(g: &Gamble, lambda: f64, tol: f64) -> Result<PhiEvaluation> {
    if lambda == 0.0 {
        return Ok(PhiEvaluation {
            lambda,
            value: 0.0,
            abs_error_bound: 0.0,
        });
    }
    let p = point_for(g, lambda)?;
    let e = eval(g, p, tol, false);
    Ok(PhiEvaluation {
        lambda,
        value: e.phi.value,
        abs_error_bound: e.phi.error,
    })
}

/// `phi(1/L)`; always `-inf` for discrete gambles, whose loss atom has
/// positive mass.
pub fn phi_at_max_loss(g: &Gamble, tol: f64) -> PhiEvaluation {
    let l = g.max_loss();
    let e = eval(g, Point::boundary(l), tol, false);
    PhiEvaluation {
        lambda: 1.0 / l,
        value: e.phi.value,
        abs_error_bound: e.phi.error,
    }
}

/// `phi'(lambda) = E[X / (1 + lambda X)]` for `0 <= lambda < 1/L`.
pub fn phi_derivative(g: &Gamble, lambda: f64) -> Result<f64> {
    let p = point_for(g, lambda)?;
    if p.slack == 0.0 {
        return Err(RiskError::OutOfDomain {
            lambda,
            max: 1.0 / g.max_loss(),
        });
    }
    if lambda == 0.0 {
        return Ok(g.stats().mean);
    }
    let l = g.max_loss();
    Ok(match g {
        Gamble::Discrete(d) => neumaier_sum(
            d.outcomes()
                .iter()
                .map(|o| o.prob * o.value / p.growth(o.value, o.value + l)),
        ),
        Gamble::Density(d) => {
            d.family()
                .expect(|u| (u - l) / p.growth(u - l, u), LeftEnd::Bounded, 1e-11)
                .value
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::family::Family;

    fn bernoulli() -> Gamble {
        DiscreteGamble::new([(200.0, 0.5), (-100.0, 0.5)])
            .unwrap()
            .into()
    }

    fn uniform(a: f64, b: f64) -> Gamble {
        DensityGamble::new(Family::Uniform { a, b }).unwrap().into()
    }

    #[test]
    fn zero_lambda_is_exactly_zero() {
        assert_eq!(phi(&bernoulli(), 0.0).unwrap().value, 0.0);
        assert_eq!(phi(&uniform(-100.0, 200.0), 0.0).unwrap().value, 0.0);
    }

    #[test]
    fn bernoulli_root_is_one_over_two_hundred() {
        // (1 + 200 l)(1 - 100 l) = 1  =>  l = 1/200
        let e = phi(&bernoulli(), 1.0 / 200.0).unwrap();
        assert!(e.value.abs() < 1e-15, "{e:?}");
        // at 1/2000 phi is 0.5 ln(1.045), not zero
        let e = phi(&bernoulli(), 1.0 / 2000.0).unwrap();
        assert!((e.value - 0.5 * 1.045f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn uniform_boundary_is_log3_minus_one() {
        let e = phi(&uniform(-100.0, 200.0), 0.01).unwrap();
        let exact = 3.0f64.ln() - 1.0;
        assert!((e.value - exact).abs() < 1e-10, "{e:?}");
        assert!(e.abs_error_bound <= 1e-10);
    }

    #[test]
    fn discrete_rejects_boundary_and_beyond() {
        let g = bernoulli();
        assert!(matches!(phi(&g, 0.01), Err(RiskError::OutOfDomain { .. })));
        assert!(matches!(phi(&g, -1e-3), Err(RiskError::OutOfDomain { .. })));
        assert_eq!(phi_at_max_loss(&g, DEFAULT_TOL).value, f64::NEG_INFINITY);
        let u = uniform(-100.0, 200.0);
        assert!(matches!(phi(&u, 0.0101), Err(RiskError::OutOfDomain { .. })));
    }

    #[test]
    fn derivative_at_zero_is_the_mean() {
        assert_eq!(phi_derivative(&bernoulli(), 0.0).unwrap(), 50.0);
        let u = uniform(-100.0, 200.0);
        assert!((phi_derivative(&u, 0.0).unwrap() - 50.0).abs() < 1e-12);
    }

    #[test]
    fn bernoulli_derivative_two_term_sum() {
        // 0.5 * 200 / 1.1 + 0.5 * (-100) / 0.95 = 100/1.1 - 50/0.95
        let expected = 100.0 / 1.1 - 50.0 / 0.95;
        let d = phi_derivative(&bernoulli(), 1.0 / 2000.0).unwrap();
        assert!((d - expected).abs() < 1e-12);
        assert!((d - 38.278).abs() < 1e-3);
    }

    #[test]
    fn lognormal_boundary_matches_closed_form() {
        // phi(1/L) = E log((X - theta)/(-theta)) = mu - ln(-theta)
        for theta in [-10.0, -2.0, -1.0] {
            let g: Gamble = DensityGamble::new(Family::Lognormal {
                mu: 1.0,
                sigma: 2.0,
                theta,
            })
            .unwrap()
            .into();
            let e = phi_at_max_loss(&g, 1e-12);
            assert!((e.value - (1.0 - (-theta as f64).ln())).abs() < 1e-10, "{e:?}");
        }
    }

    #[test]
    fn beta_boundary_matches_digamma_form() {
        // E log(T) = psi(alpha) - psi(alpha + beta); alpha = 2, beta = 3
        // psi(2) - psi(5) = -(1/2 + 1/3 + 1/4)
        let g: Gamble = DensityGamble::new(Family::Beta {
            alpha: 2.0,
            beta: 3.0,
            a: -100.0,
            b: 200.0,
        })
        .unwrap()
        .into();
        let exact = 3.0f64.ln() - (0.5 + 1.0 / 3.0 + 0.25);
        let e = phi_at_max_loss(&g, 1e-12);
        assert!((e.value - exact).abs() < 1e-10, "{e:?}");
    }
}
