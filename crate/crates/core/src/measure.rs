//! Extended riskiness `rho(X)`.
//!
//! If `phi(1/L) < 0` the riskiness is the reciprocal of the unique positive
//! root of `phi`; otherwise it is the maximal loss `L`. Discrete gambles
//! always fall in the first regime because their loss atom drives `phi` to
//! `-inf` at `1/L`.

use serde::Serialize;

use crate::error::{Result, RiskError};
use crate::gamble::{DensityGamble, DiscreteGamble, Gamble};
use crate::phi::{self, phi_at_max_loss, Point, DEFAULT_TOL};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    /// `phi(1/L) < 0`: riskiness solves `E log(1 + X/rho) = 0`.
    EquationSolved,
    /// `phi(1/L) >= 0`: riskiness is the maximal loss.
    MaximalLoss,
}

impl Regime {
    pub fn as_str(&self) -> &'static str {
        match self {
            Regime::EquationSolved => "equation-solved",
            Regime::MaximalLoss => "maximal-loss",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RiskinessResult {
    pub rho: f64,
    pub lambda: f64,
    pub regime: Regime,
    /// `|phi(1/rho)|` in the equation-solved regime, zero otherwise.
    pub residual: f64,
}

/// Root of `phi` on `(0, 1/L)`, found in the coordinate `t = -ln(1 - lambda L)`.
///
/// The bracket starts at `lambda = min(1e-12, lambda*/2)` and is widened
/// toward `lambda*` by doubling `t`; safeguarded Newton steps are taken
/// inside it, falling back to bisection whenever a step leaves the bracket.
pub(crate) fn solve_root<F>(eval: F, max_loss: f64, tol: f64) -> Result<(Point, f64)>
where
    F: Fn(Point, bool) -> phi::Eval,
{
    let lambda_star = 1.0 / max_loss;
    let mut lambda_lo = (1e-12f64).min(0.5 * lambda_star);
    let mut lo = -(-lambda_lo * max_loss).ln_1p();
    let mut phi_lo = eval(Point::from_log_slack(lo, max_loss), false).phi.value;
    let mut guard = 0;
    while !(phi_lo > 0.0) {
        lambda_lo *= 0.5;
        lo = -(-lambda_lo * max_loss).ln_1p();
        phi_lo = eval(Point::from_log_slack(lo, max_loss), false).phi.value;
        guard += 1;
        if guard > 200 || lo == 0.0 {
            return Err(RiskError::Numerical(
                "phi is not positive next to zero".into(),
            ));
        }
    }

    let mut hi = lo.max(1.0);
    loop {
        let v = eval(Point::from_log_slack(hi, max_loss), false).phi.value;
        if v < 0.0 {
            break;
        }
        if v > 0.0 {
            lo = hi;
        }
        if hi > 1e7 {
            let b = eval(Point::boundary(max_loss), false).phi.value;
            if b < 0.0 {
                // root sits closer to 1/L than a double can resolve
                return Ok((Point::boundary(max_loss), b.abs()));
            }
            return Err(RiskError::Numerical("no sign change below 1/L".into()));
        }
        hi *= 2.0;
    }

    let mut t = if hi / lo > 8.0 { (lo * hi).sqrt() } else { 0.5 * (lo + hi) };
    let mut best = (Point::from_log_slack(t, max_loss), f64::INFINITY);
    for _ in 0..400 {
        let p = Point::from_log_slack(t, max_loss);
        let e = eval(p, true);
        let v = e.phi.value;
        if v.abs() < best.1 {
            best = (p, v.abs());
        }
        if v > 0.0 {
            lo = t;
        } else if v < 0.0 {
            hi = t;
        } else {
            return Ok((p, 0.0));
        }
        let newton = t - v / e.slope;
        let step_ok = newton.is_finite() && newton > lo && newton < hi;
        let next = if step_ok {
            newton
        } else if hi / lo > 8.0 {
            (lo * hi).sqrt()
        } else {
            0.5 * (lo + hi)
        };
        let tiny_step = (next - t).abs() <= 4.0 * f64::EPSILON * t;
        let narrow = hi - lo <= 4.0 * f64::EPSILON * hi;
        if (v.abs() <= tol && tiny_step) || narrow {
            break;
        }
        t = next;
    }
    if best.1 > tol {
        return Err(RiskError::Numerical(format!(
            "root solve stalled with residual {:e}",
            best.1
        )));
    }
    Ok(best)
}

fn from_root(p: Point, residual: f64) -> RiskinessResult {
    RiskinessResult {
        rho: 1.0 / p.lambda,
        lambda: p.lambda,
        regime: Regime::EquationSolved,
        residual,
    }
}

/// Foster-Hart riskiness of a discrete gamble.
pub fn static_riskiness(g: &DiscreteGamble) -> RiskinessResult {
    let l = g.max_loss();
    let (p, residual) = solve_root(|p, slope| phi::discrete_eval(g, p, slope), l, DEFAULT_TOL)
        .expect("phi of a validated discrete gamble changes sign on (0, 1/L)");
    from_root(p, residual)
}

/// Extended riskiness of a density gamble at the default tolerance.
pub fn extended_riskiness(g: &DensityGamble) -> Result<RiskinessResult> {
    extended_riskiness_with_tol(g, DEFAULT_TOL)
}

/// Extended riskiness of a density gamble.
///
/// Fails with [`RiskError::BoundarySignAmbiguous`] when `phi(1/L)` lies
/// within its own error bound of zero.
pub fn extended_riskiness_with_tol(g: &DensityGamble, tol: f64) -> Result<RiskinessResult> {
    let l = g.max_loss();
    let quad_tol = 0.1 * tol;
    let gamble = Gamble::Density(g.clone());
    let s = phi_at_max_loss(&gamble, quad_tol);
    if s.value.is_nan() {
        return Err(RiskError::Numerical("phi(1/L) evaluated to NaN".into()));
    }
    if s.value.abs() <= s.abs_error_bound {
        return Err(RiskError::BoundarySignAmbiguous {
            value: s.value,
            bound: s.abs_error_bound,
        });
    }
    if s.value > 0.0 {
        return Ok(RiskinessResult {
            rho: l,
            lambda: 1.0 / l,
            regime: Regime::MaximalLoss,
            residual: 0.0,
        });
    }
    let (p, residual) = solve_root(|p, slope| phi::density_eval(g, p, quad_tol, slope), l, tol)?;
    Ok(from_root(p, residual))
}

/// Riskiness of either kind of gamble.
pub fn riskiness(g: &Gamble) -> Result<RiskinessResult> {
    riskiness_with_tol(g, DEFAULT_TOL)
}

pub fn riskiness_with_tol(g: &Gamble, tol: f64) -> Result<RiskinessResult> {
    match g {
        Gamble::Discrete(d) => Ok(static_riskiness(d)),
        Gamble::Density(d) => extended_riskiness_with_tol(d, tol),
    }
}

/// A wealth level at which the gamble is certainly acceptable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AcceptanceWealth {
    pub wealth: f64,
    pub moment_bound: f64,
    pub magnitude_bound: f64,
    /// False on a half-line support, where `|X/W| <= 1/2` only holds on the
    /// truncated support and the guarantee is not certified.
    pub certified: bool,
}

/// Upper tail probability beyond which a half-line support is truncated.
const TAIL_TRUNCATION: f64 = 1e-12;

/// `W0 = max(2 E[X^2] / E[X], 2 ess sup |X|)`.
///
/// With `|X / W0| <= 1/2`, `log(1 + x) >= x - 2 x^2` gives
/// `phi(1/W0) >= (E X - 2 E X^2 / W0) / W0 >= 0`.
pub fn acceptance_wealth_bound(g: &Gamble) -> AcceptanceWealth {
    let s = g.stats();
    let moment_bound = 2.0 * s.second_moment / s.mean;
    let (upper, certified) = match g {
        Gamble::Density(d) if !d.support().is_bounded() => {
            let fam = d.family();
            (fam.quantile(1.0 - TAIL_TRUNCATION), false)
        }
        _ => (g.max_gain(), true),
    };
    let magnitude_bound = 2.0 * s.max_loss.max(upper.abs());
    AcceptanceWealth {
        wealth: moment_bound.max(magnitude_bound),
        moment_bound,
        magnitude_bound,
        certified,
    }
}

/// Like [`acceptance_wealth_bound`] but refuses uncertified bounds.
pub fn certified_acceptance_wealth(g: &Gamble) -> Result<f64> {
    let w = acceptance_wealth_bound(g);
    if w.certified {
        Ok(w.wealth)
    } else {
        Err(RiskError::UnboundedGamble)
    }
}

/// No-bankruptcy acceptance rule: accept iff `E log(1 + X / wealth) >= 0`.
pub fn accept(g: &Gamble, wealth: f64) -> bool {
    accept_with_tol(g, wealth, DEFAULT_TOL)
}

pub fn accept_with_tol(g: &Gamble, wealth: f64, tol: f64) -> bool {
    if !(wealth > 0.0) {
        return false;
    }
    match phi::phi_with_tol(g, 1.0 / wealth, 0.1 * tol) {
        Ok(e) => e.value >= 0.0,
        Err(_) => false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::family::Family;

    fn two_point(win: f64, loss: f64) -> DiscreteGamble {
        DiscreteGamble::new([(win, 0.5), (-loss, 0.5)]).unwrap()
    }

    #[test]
    fn two_point_closed_forms() {
        // (1 + w/r)(1 - l/r) = 1  =>  r = w l / (w - l)
        for (w, l, expected) in [
            (200.0, 100.0, 200.0),
            (600.0, 100.0, 120.0),
            (1000.0, 200.0, 250.0),
            (6000.0, 240.0, 250.0),
            (840.0, 105.0, 120.0),
        ] {
            let r = static_riskiness(&two_point(w, l));
            assert!((r.rho - expected).abs() <= 1e-9 * expected, "{w},{l}: {r:?}");
            assert_eq!(r.regime, Regime::EquationSolved);
            assert!(r.residual <= 1e-10);
        }
    }

    #[test]
    fn uniform_on_minus_100_200_is_maximal_loss() {
        let g = DensityGamble::new(Family::Uniform { a: -100.0, b: 200.0 }).unwrap();
        let r = extended_riskiness(&g).unwrap();
        assert_eq!(r.regime, Regime::MaximalLoss);
        assert_eq!(r.rho, 100.0);
    }

    #[test]
    fn uniform_below_critical_gain_solves_equation() {
        let g = DensityGamble::new(Family::Uniform { a: -100.0, b: 150.0 }).unwrap();
        let r = extended_riskiness(&g).unwrap();
        assert_eq!(r.regime, Regime::EquationSolved);
        assert!(r.rho > 100.0);
        assert!(r.residual <= 1e-10);
        // closed form phi for the uniform, evaluated at the returned lambda
        let lam = r.lambda;
        let (a, b) = (-100.0f64, 150.0f64);
        let f = |x: f64| (1.0 + lam * x) * ((1.0 + lam * x).ln() - 1.0) / lam;
        let exact = (f(b) - f(a)) / (b - a);
        assert!(exact.abs() < 1e-9, "{exact}");
    }

    #[test]
    fn exact_critical_gain_is_ambiguous() {
        let b = 100.0 * (std::f64::consts::E - 1.0);
        let g = DensityGamble::new(Family::Uniform { a: -100.0, b }).unwrap();
        let s = phi_at_max_loss(&Gamble::Density(g.clone()), 1e-12);
        assert!(s.value.abs() < 1e-12);
        assert!(matches!(
            extended_riskiness(&g),
            Err(RiskError::BoundarySignAmbiguous { .. })
        ));
        // either side of it rho is continuous at L
        for (bb, regime) in [(b - 1e-3, Regime::EquationSolved), (b + 1e-3, Regime::MaximalLoss)] {
            let g = DensityGamble::new(Family::Uniform { a: -100.0, b: bb }).unwrap();
            let r = extended_riskiness(&g).unwrap();
            assert_eq!(r.regime, regime);
            assert!((r.rho - 100.0).abs() < 1e-2, "{r:?}");
        }
    }

    #[test]
    fn lognormal_below_threshold_solves_equation() {
        let g = DensityGamble::new(Family::Lognormal {
            mu: 1.0,
            sigma: 2.0,
            theta: -10.0,
        })
        .unwrap();
        let r = extended_riskiness(&g).unwrap();
        assert_eq!(r.regime, Regime::EquationSolved);
        assert!(r.rho > 10.0);
        assert!(r.residual <= 1e-10);
    }

    #[test]
    fn beta_above_critical_shape_solves_equation() {
        let g = DensityGamble::new(Family::Beta {
            alpha: 2.0,
            beta: 3.5,
            a: -100.0,
            b: 200.0,
        })
        .unwrap();
        let r = extended_riskiness(&g).unwrap();
        assert_eq!(r.regime, Regime::EquationSolved);
        assert!(r.rho > 100.0);
    }

    #[test]
    fn acceptance_bound_for_bernoulli() {
        let g: Gamble = two_point(200.0, 100.0).into();
        let w = acceptance_wealth_bound(&g);
        assert_eq!(w.moment_bound, 1000.0);
        assert_eq!(w.magnitude_bound, 400.0);
        assert_eq!(w.wealth, 1000.0);
        assert!(w.certified);
        let v = phi::phi(&g, 1.0 / w.wealth).unwrap().value;
        assert!((v - 0.5 * (1.2f64.ln() + 0.9f64.ln())).abs() < 1e-15);
        assert!(v > 0.0);
    }

    #[test]
    fn acceptance_bound_is_not_certified_on_half_line() {
        let g: Gamble = DensityGamble::new(Family::Lognormal {
            mu: 0.0,
            sigma: 0.5,
            theta: -0.5,
        })
        .unwrap()
        .into();
        assert!(!acceptance_wealth_bound(&g).certified);
        assert_eq!(certified_acceptance_wealth(&g), Err(RiskError::UnboundedGamble));
    }

    #[test]
    fn acceptance_threshold_for_bernoulli() {
        let g: Gamble = two_point(200.0, 100.0).into();
        assert!(accept(&g, 2000.0));
        assert!(accept(&g, 200.0));
        assert!(!accept(&g, 199.0));
        assert!(!accept(&g, 100.0));
        assert!(!accept(&g, 50.0));
    }

    #[test]
    fn uniform_accepted_at_its_maximal_loss() {
        let g: Gamble = DensityGamble::new(Family::Uniform { a: -100.0, b: 200.0 })
            .unwrap()
            .into();
        assert!(accept(&g, 100.0));
        assert!(!accept(&g, 99.99));
    }
}
