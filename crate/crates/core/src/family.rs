//! Density families a gamble may follow.
//!
//! Every family is handled in the offset coordinate `u = x + L`, the distance
//! from the left end of the support. Near that end `1 + x/L = u/L`, so
//! working in `u` keeps the boundary logarithm free of cancellation.

use std::f64::consts::{FRAC_1_SQRT_2, LN_2, SQRT_2};

use statrs::function::beta::{beta_reg, ln_beta};
use statrs::function::erf::{erfc, erfc_inv};

use crate::error::{Result, RiskError};
use crate::quadrature::{graded, integrate, Estimate};

/// Fraction of the support width treated as the boundary sliver.
const BOUNDARY_FRACTION: f64 = 1e-6;
/// Standard-normal half-width covered by lognormal quadrature.
const NORMAL_SPAN: f64 = 40.0;
const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Support of a density gamble.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Support {
    Compact { lower: f64, upper: f64 },
    HalfLine { lower: f64 },
}

impl Support {
    pub fn lower(&self) -> f64 {
        match *self {
            Support::Compact { lower, .. } | Support::HalfLine { lower } => lower,
        }
    }

    pub fn upper(&self) -> Option<f64> {
        match *self {
            Support::Compact { upper, .. } => Some(upper),
            Support::HalfLine { .. } => None,
        }
    }

    pub fn is_bounded(&self) -> bool {
        matches!(self, Support::Compact { .. })
    }
}

/// Piecewise-linear density through tabulated points, renormalized to unit mass.
#[derive(Debug, Clone, PartialEq)]
pub struct Tabulated {
    xs: Vec<f64>,
    density: Vec<f64>,
    cum: Vec<f64>,
}

impl Tabulated {
    pub fn new(xs: Vec<f64>, density: Vec<f64>) -> Result<Self> {
        if xs.len() < 2 || xs.len() != density.len() {
            return Err(RiskError::not_a_gamble(
                "tabulated density needs at least two points and matching lengths",
            ));
        }
        if xs.iter().chain(density.iter()).any(|v| !v.is_finite()) {
            return Err(RiskError::not_a_gamble("tabulated values must be finite"));
        }
        if xs.windows(2).any(|w| w[1] <= w[0]) {
            return Err(RiskError::not_a_gamble(
                "tabulated support points must be strictly increasing",
            ));
        }
        if density.iter().any(|&d| d <= 0.0) {
            return Err(RiskError::not_a_gamble(
                "density is not strictly positive on its support",
            ));
        }
        let area: f64 = xs
            .windows(2)
            .zip(density.windows(2))
            .map(|(x, d)| 0.5 * (d[0] + d[1]) * (x[1] - x[0]))
            .sum();
        let density: Vec<f64> = density.iter().map(|d| d / area).collect();
        let mut cum = Vec::with_capacity(xs.len());
        let mut acc = 0.0;
        cum.push(0.0);
        for (x, d) in xs.windows(2).zip(density.windows(2)) {
            acc += 0.5 * (d[0] + d[1]) * (x[1] - x[0]);
            cum.push(acc);
        }
        Ok(Tabulated { xs, density, cum })
    }

    pub fn points(&self) -> &[f64] {
        &self.xs
    }

    /// Normalized density values at [`Tabulated::points`].
    pub fn density_values(&self) -> &[f64] {
        &self.density
    }

    fn width(&self) -> f64 {
        self.xs[self.xs.len() - 1] - self.xs[0]
    }

    fn segment(&self, u: f64) -> usize {
        let x = self.xs[0] + u;
        match self.xs.partition_point(|&p| p <= x) {
            0 => 0,
            i => (i - 1).min(self.xs.len() - 2),
        }
    }

    fn pdf_u(&self, u: f64) -> f64 {
        if u < 0.0 || u > self.width() {
            return 0.0;
        }
        let i = self.segment(u);
        let h = self.xs[i + 1] - self.xs[i];
        let s = (u - (self.xs[i] - self.xs[0])).clamp(0.0, h);
        self.density[i] + (self.density[i + 1] - self.density[i]) * s / h
    }

    fn cdf_u(&self, u: f64) -> f64 {
        if u <= 0.0 {
            return 0.0;
        }
        if u >= self.width() {
            return 1.0;
        }
        let i = self.segment(u);
        let h = self.xs[i + 1] - self.xs[i];
        let s = (u - (self.xs[i] - self.xs[0])).clamp(0.0, h);
        let slope = (self.density[i + 1] - self.density[i]) / h;
        let total = self.cum[self.cum.len() - 1];
        ((self.cum[i] + self.density[i] * s + 0.5 * slope * s * s) / total).min(1.0)
    }

    fn quantile_u(&self, p: f64) -> f64 {
        let total = self.cum[self.cum.len() - 1];
        let target = p * total;
        let i = match self.cum.partition_point(|&c| c <= target) {
            0 => 0,
            i => (i - 1).min(self.xs.len() - 2),
        };
        let h = self.xs[i + 1] - self.xs[i];
        let a = 0.5 * (self.density[i + 1] - self.density[i]) / h;
        let b = self.density[i];
        let r = (target - self.cum[i]).max(0.0);
        let s = 2.0 * r / (b + (b * b + 4.0 * a * r).max(0.0).sqrt());
        (self.xs[i] - self.xs[0] + s.min(h)).min(self.width())
    }

    fn raw_moment(&self, k: i32) -> f64 {
        // Simpson is exact for (linear density) * x^k with k <= 2
        let total = self.cum[self.cum.len() - 1];
        let mut acc = 0.0;
        for i in 0..self.xs.len() - 1 {
            let (x0, x1) = (self.xs[i], self.xs[i + 1]);
            let (d0, d1) = (self.density[i], self.density[i + 1]);
            let xm = 0.5 * (x0 + x1);
            let dm = 0.5 * (d0 + d1);
            acc += (x1 - x0) / 6.0
                * (x0.powi(k) * d0 + 4.0 * xm.powi(k) * dm + x1.powi(k) * d1);
        }
        acc / total
    }
}

/// A parametric or tabulated density on `[-L, M]` or `[-L, inf)`.
#[derive(Debug, Clone, PartialEq)]
pub enum Family {
    /// Uniform on `[a, b]`.
    Uniform { a: f64, b: f64 },
    /// Beta(`alpha`, `beta`) rescaled to `[a, b]`; `alpha` shapes the left end.
    Beta { alpha: f64, beta: f64, a: f64, b: f64 },
    /// `theta + exp(N(mu, sigma^2))`; `sigma` is the standard deviation of
    /// `log(X - theta)`.
    Lognormal { mu: f64, sigma: f64, theta: f64 },
    Tabulated(Tabulated),
}

/// How an integrand behaves at the left end of the support.
#[derive(Debug, Clone, Copy)]
pub(crate) enum LeftEnd {
    /// The integrand is `log(slack + lambda * u)` with `slack = 1 - lambda * L`,
    /// so it is dominated by `|log(lambda * u)|` near `u = 0`.
    Log { lambda: f64 },
    /// The integrand is bounded and monotone next to `u = 0`.
    Bounded,
}

impl Family {
    pub(crate) fn check_parameters(&self) -> Result<()> {
        let finite = |vals: &[f64]| vals.iter().all(|v| v.is_finite());
        match self {
            Family::Uniform { a, b } => {
                if !finite(&[*a, *b]) || a >= b {
                    return Err(RiskError::not_a_gamble("uniform requires finite a < b"));
                }
            }
            Family::Beta { alpha, beta, a, b } => {
                if !finite(&[*alpha, *beta, *a, *b]) || a >= b {
                    return Err(RiskError::not_a_gamble("beta requires finite a < b"));
                }
                if *alpha <= 0.0 || *beta <= 0.0 {
                    return Err(RiskError::not_a_gamble("beta shapes must be positive"));
                }
            }
            Family::Lognormal { mu, sigma, theta } => {
                if !finite(&[*mu, *sigma, *theta]) || *sigma <= 0.0 {
                    return Err(RiskError::not_a_gamble(
                        "lognormal requires finite parameters and sigma > 0",
                    ));
                }
            }
            Family::Tabulated(_) => {}
        }
        if self.support().lower() >= 0.0 {
            return Err(RiskError::not_a_gamble(
                "support has no negative part, so there is no loss mass",
            ));
        }
        Ok(())
    }

    pub fn support(&self) -> Support {
        match self {
            Family::Uniform { a, b } | Family::Beta { a, b, .. } => {
                Support::Compact { lower: *a, upper: *b }
            }
            Family::Lognormal { theta, .. } => Support::HalfLine { lower: *theta },
            Family::Tabulated(t) => Support::Compact {
                lower: t.xs[0],
                upper: t.xs[t.xs.len() - 1],
            },
        }
    }

    /// `L = -lower end of the support`.
    pub fn max_loss(&self) -> f64 {
        -self.support().lower()
    }

    /// Width of a compact support; `None` on a half-line.
    pub fn width(&self) -> Option<f64> {
        match self.support() {
            Support::Compact { lower, upper } => Some(upper - lower),
            Support::HalfLine { .. } => None,
        }
    }

    /// Returns the family of `c * X` for `c > 0`.
    pub fn scaled(&self, c: f64) -> Family {
        match self {
            Family::Uniform { a, b } => Family::Uniform { a: c * a, b: c * b },
            Family::Beta { alpha, beta, a, b } => Family::Beta {
                alpha: *alpha,
                beta: *beta,
                a: c * a,
                b: c * b,
            },
            Family::Lognormal { mu, sigma, theta } => Family::Lognormal {
                mu: mu + c.ln(),
                sigma: *sigma,
                theta: c * theta,
            },
            Family::Tabulated(t) => Family::Tabulated(Tabulated {
                xs: t.xs.iter().map(|x| c * x).collect(),
                density: t.density.iter().map(|d| d / c).collect(),
                cum: t.cum.clone(),
            }),
        }
    }

    /// Density at `x`.
    pub fn pdf(&self, x: f64) -> f64 {
        self.pdf_u(x + self.max_loss())
    }

    /// Distribution function at `x`.
    pub fn cdf(&self, x: f64) -> f64 {
        self.cdf_u(x + self.max_loss())
    }

    pub(crate) fn pdf_u(&self, u: f64) -> f64 {
        if u <= 0.0 {
            return 0.0;
        }
        match self {
            Family::Uniform { a, b } => {
                if u <= b - a {
                    1.0 / (b - a)
                } else {
                    0.0
                }
            }
            Family::Beta { alpha, beta, a, b } => {
                let w = b - a;
                let t = u / w;
                if t >= 1.0 {
                    return 0.0;
                }
                beta_shape(*alpha, *beta, t.ln(), (-t).ln_1p()) / w
            }
            Family::Lognormal { mu, sigma, .. } => {
                let z = (u.ln() - mu) / sigma;
                INV_SQRT_2PI * (-0.5 * z * z).exp() / (sigma * u)
            }
            Family::Tabulated(t) => t.pdf_u(u),
        }
    }

    /// `P(X + L <= u)`.
    pub(crate) fn cdf_u(&self, u: f64) -> f64 {
        if u <= 0.0 {
            return 0.0;
        }
        match self {
            Family::Uniform { a, b } => (u / (b - a)).min(1.0),
            Family::Beta { alpha, beta, a, b } => {
                let t = u / (b - a);
                if t >= 1.0 {
                    1.0
                } else {
                    beta_reg(*alpha, *beta, t)
                }
            }
            Family::Lognormal { mu, sigma, .. } => {
                normal_cdf((u.ln() - mu) / sigma)
            }
            Family::Tabulated(t) => t.cdf_u(u),
        }
    }

    /// `P(X + L > u)`, computed without cancellation in the upper tail.
    pub(crate) fn sf_u(&self, u: f64) -> f64 {
        match self {
            Family::Lognormal { mu, sigma, .. } => {
                if u <= 0.0 {
                    1.0
                } else {
                    normal_cdf(-(u.ln() - mu) / sigma)
                }
            }
            Family::Beta { alpha, beta, a, b } => {
                let t = u / (b - a);
                if t <= 0.0 {
                    1.0
                } else if t >= 1.0 {
                    0.0
                } else {
                    beta_reg(*beta, *alpha, 1.0 - t)
                }
            }
            _ => 1.0 - self.cdf_u(u),
        }
    }

    /// Inverse distribution function in the offset coordinate, `p` in `(0, 1)`.
    pub(crate) fn quantile_u(&self, p: f64) -> f64 {
        match self {
            Family::Uniform { a, b } => p * (b - a),
            Family::Beta { alpha, beta, a, b } => (b - a) * beta_quantile(*alpha, *beta, p),
            Family::Lognormal { mu, sigma, .. } => {
                (mu + sigma * normal_quantile(p)).exp()
            }
            Family::Tabulated(t) => t.quantile_u(p),
        }
    }

    /// Inverse distribution function, `p` in `(0, 1)`.
    pub fn quantile(&self, p: f64) -> f64 {
        self.quantile_u(p) - self.max_loss()
    }

    /// `(E X, E X^2)` from closed forms.
    pub(crate) fn moments(&self) -> (f64, f64) {
        match self {
            Family::Uniform { a, b } => (0.5 * (a + b), (a * a + a * b + b * b) / 3.0),
            Family::Beta { alpha, beta, a, b } => {
                let s = alpha + beta;
                let w = b - a;
                let et = alpha / s;
                let et2 = alpha * (alpha + 1.0) / (s * (s + 1.0));
                ((alpha * b + beta * a) / s, a * a + 2.0 * a * w * et + w * w * et2)
            }
            Family::Lognormal { mu, sigma, theta } => {
                let m1 = (mu + 0.5 * sigma * sigma).exp();
                let m2 = (2.0 * mu + 2.0 * sigma * sigma).exp();
                (theta + m1, theta * theta + 2.0 * theta * m1 + m2)
            }
            Family::Tabulated(t) => (t.raw_moment(1), t.raw_moment(2)),
        }
    }

    /// Computes `E[h(X + L)]` by quadrature to absolute tolerance `tol`.
    pub(crate) fn expect<H: Fn(f64) -> f64>(&self, h: H, left: LeftEnd, tol: f64) -> Estimate {
        match self {
            Family::Uniform { a, b } => {
                let w = b - a;
                let dens = 1.0 / w;
                let delta = BOUNDARY_FRACTION * w;
                let rem = |s: f64| match left {
                    LeftEnd::Log { lambda } => log_envelope(dens, 1.0, s, lambda),
                    LeftEnd::Bounded => h(0.0).abs().max(h(s).abs()) * s * dens,
                };
                let near = graded(|d| h(d) * dens, delta, 0.5 * tol, rem);
                let far = integrate(|u| h(u) * dens, delta, w, 0.5 * tol);
                near + far
            }
            Family::Beta { alpha, beta, a, b } => {
                let (alpha, beta, w) = (*alpha, *beta, b - a);
                let ln_b = ln_beta(alpha, beta);
                let shape = |ln_t: f64, ln_1mt: f64| {
                    ((alpha - 1.0) * ln_t + (beta - 1.0) * ln_1mt - ln_b).exp()
                };
                let dt = BOUNDARY_FRACTION;
                // f_u(u) <= k * u^(alpha - 1) on the left sliver
                let k = ((beta - 1.0) * (-dt).ln_1p()).exp().max(1.0)
                    * (-ln_b - alpha * w.ln()).exp();
                let rem_left = |s: f64| match left {
                    LeftEnd::Log { lambda } => log_envelope(k, alpha, w * s, lambda),
                    LeftEnd::Bounded => {
                        h(0.0).abs().max(h(w * s).abs()) * beta_reg(alpha, beta, s.min(1.0))
                    }
                };
                let near = graded(
                    |d| h(w * d) * shape(d.ln(), (-d).ln_1p()),
                    dt,
                    tol / 3.0,
                    rem_left,
                );
                let right_singular = beta < 1.0;
                let hi = if right_singular { 1.0 - dt } else { 1.0 };
                let mid = integrate(|t| h(w * t) * shape(t.ln(), (-t).ln_1p()), dt, hi, tol / 3.0);
                let mut total = near + mid;
                if right_singular {
                    let rem_right = |s: f64| {
                        h(w).abs().max(h(w * (1.0 - s)).abs()) * beta_reg(beta, alpha, s.min(1.0))
                    };
                    total += graded(
                        |d| h(w * (1.0 - d)) * shape((-d).ln_1p(), d.ln()),
                        dt,
                        tol / 3.0,
                        rem_right,
                    );
                }
                total
            }
            Family::Lognormal { mu, sigma, .. } => {
                let (mu, sigma) = (*mu, *sigma);
                let g = |s: f64| h((mu + sigma * s).exp()) * INV_SQRT_2PI * (-0.5 * s * s).exp();
                let span = NORMAL_SPAN;
                let mut total = integrate(&g, -span, -8.0, tol / 3.0)
                    + integrate(&g, -8.0, 8.0, tol / 3.0)
                    + integrate(&g, 8.0, span, tol / 3.0);
                let tail = normal_cdf(-span);
                let dens_at_span = INV_SQRT_2PI * (-0.5 * span * span).exp();
                total.error += match left {
                    LeftEnd::Log { lambda } => {
                        // |log(slack + lambda u)| <= ln 2 + |ln lambda + mu + sigma s| on both tails
                        let c = (lambda.ln() + mu).abs();
                        2.0 * ((LN_2 + c + sigma * span) * tail + sigma * dens_at_span)
                    }
                    LeftEnd::Bounded => {
                        2.0 * tail
                            * h((mu - sigma * span).exp())
                                .abs()
                                .max(h((mu + sigma * span).exp()).abs())
                    }
                };
                total
            }
            Family::Tabulated(t) => {
                let h0 = t.xs[1] - t.xs[0];
                let delta = (BOUNDARY_FRACTION * t.width()).min(h0);
                let k = t.density[0].max(t.pdf_u(delta)) / t.cum[t.cum.len() - 1];
                let total_mass = t.cum[t.cum.len() - 1];
                let rem = |s: f64| match left {
                    LeftEnd::Log { lambda } => log_envelope(k, 1.0, s, lambda),
                    LeftEnd::Bounded => h(0.0).abs().max(h(s).abs()) * t.cdf_u(s),
                };
                let f = |u: f64| h(u) * t.pdf_u(u) / total_mass;
                let n_seg = t.xs.len() - 1;
                let seg_tol = 0.5 * tol / n_seg as f64;
                let mut total = graded(&f, delta, 0.5 * tol, rem);
                total += integrate(&f, delta, h0, seg_tol);
                for i in 1..n_seg {
                    let lo = t.xs[i] - t.xs[0];
                    let hi = t.xs[i + 1] - t.xs[0];
                    total += integrate(&f, lo, hi, seg_tol);
                }
                total
            }
        }
    }
}

/// `int_0^w k u^(a-1) |log(lambda u)| du`, valid while `lambda * w < 1`.
fn log_envelope(k: f64, a: f64, w: f64, lambda: f64) -> f64 {
    if lambda * w >= 1.0 {
        return f64::INFINITY;
    }
    k * w.powf(a) / a * (-(lambda * w).ln() + 1.0 / a)
}

fn beta_shape(alpha: f64, beta: f64, ln_t: f64, ln_1mt: f64) -> f64 {
    ((alpha - 1.0) * ln_t + (beta - 1.0) * ln_1mt - ln_beta(alpha, beta)).exp()
}

pub(crate) fn normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z * FRAC_1_SQRT_2)
}

pub(crate) fn normal_quantile(p: f64) -> f64 {
    -SQRT_2 * erfc_inv(2.0 * p)
}

/// Inverse regularized incomplete beta by bisection, to `1e-13` in `t`.
fn beta_quantile(alpha: f64, beta: f64, p: f64) -> f64 {
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    while hi - lo > 2.0 * f64::EPSILON * hi && hi > f64::MIN_POSITIVE {
        let mid = 0.5 * (lo + hi);
        if beta_reg(alpha, beta, mid) < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}
