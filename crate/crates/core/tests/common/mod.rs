#![allow(dead_code)]

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use riskiness::dyadic::dyadic_grid;
use riskiness::sim::{simulate, SimulationSpec};
use riskiness::{
    acceptance_wealth_bound, phi_derivative, phi_with_tol, riskiness, DensityGamble,
    DiscreteGamble, Family, Gamble,
};

/// Plain bisection for a decreasing sign change of `f` on `[lo, hi]`.
pub fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let pos_lo = f(lo) > 0.0;
    for _ in 0..2000 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if (f(mid) > 0.0) == pos_lo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// `E log(1 + lambda X)` for `X ~ Uniform(a, b)`, in closed form.
pub fn uniform_phi(a: f64, b: f64, lambda: f64) -> f64 {
    let g = |x: f64| {
        let y = 1.0 + lambda * x;
        if y == 0.0 {
            0.0
        } else {
            y * (y.ln() - 1.0)
        }
    };
    (g(b) - g(a)) / (lambda * (b - a))
}

/// Riskiness of a discrete law by bisection on `rho`.
pub fn discrete_rho(outcomes: &[(f64, f64)]) -> f64 {
    let l = -outcomes.iter().map(|o| o.0).fold(f64::INFINITY, f64::min);
    let f = |rho: f64| -> f64 { outcomes.iter().map(|&(x, p)| p * (x / rho).ln_1p()).sum() };
    bisect(|rho| -f(rho), l * (1.0 + 1e-12), 1e12)
}

/// Composite Simpson rule with `n` (even) panels.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + i as f64 * h);
    }
    s * h / 3.0
}

/// `E log T` for `T ~ Beta(alpha, beta)` from a 10^6-panel Simpson rule,
/// normalized by the same rule. Needs `alpha > 1` for a bounded integrand.
pub fn beta_mean_log_oracle(alpha: f64, beta: f64) -> f64 {
    let n = 1_000_000;
    let kernel = |t: f64| {
        if t <= 0.0 || t >= 1.0 {
            0.0
        } else {
            t.powf(alpha - 1.0) * (1.0 - t).powf(beta - 1.0)
        }
    };
    let mass = simpson(kernel, 0.0, 1.0, n);
    let m = simpson(|t| if t <= 0.0 { 0.0 } else { kernel(t) * t.ln() }, 0.0, 1.0, n);
    m / mass
}

pub fn two_point(win: f64, loss: f64) -> Gamble {
    DiscreteGamble::new([(win, 0.5), (-loss, 0.5)])
        .unwrap()
        .into()
}

pub fn uniform(a: f64, b: f64) -> DensityGamble {
    DensityGamble::new(Family::Uniform { a, b }).unwrap()
}

/// A random valid discrete gamble with 2 to 6 outcomes.
pub fn random_discrete(rng: &mut ChaCha8Rng) -> DiscreteGamble {
    loop {
        let k = rng.random_range(2..=6);
        let scale = 10f64.powf(rng.random_range(-1.0..3.0));
        let mut w: Vec<f64> = (0..k).map(|_| rng.random_range(0.05..1.0)).collect();
        let total: f64 = w.iter().sum();
        w.iter_mut().for_each(|p| *p /= total);
        let last = 1.0 - w[..k - 1].iter().sum::<f64>();
        w[k - 1] = last;
        let mut xs: Vec<f64> = (0..k).map(|_| scale * rng.random_range(-1.0..3.0)).collect();
        xs[0] = -scale * rng.random_range(0.1..1.0);
        if let Ok(g) = DiscreteGamble::new(xs.into_iter().zip(w)) {
            return g;
        }
    }
}

/// A random valid density gamble; `bounded` restricts to compact supports.
pub fn random_density(rng: &mut ChaCha8Rng, bounded: bool) -> DensityGamble {
    loop {
        let kind = if bounded {
            rng.random_range(0..2)
        } else {
            rng.random_range(0..3)
        };
        let scale = 10f64.powf(rng.random_range(-1.0..2.0));
        let fam = match kind {
            0 => Family::Uniform {
                a: -scale,
                b: scale * rng.random_range(1.05..4.0),
            },
            1 => Family::Beta {
                alpha: rng.random_range(0.6..5.0),
                beta: rng.random_range(0.6..5.0),
                a: -scale,
                b: scale * rng.random_range(0.5..5.0),
            },
            _ => Family::Lognormal {
                mu: rng.random_range(-0.5..1.5),
                sigma: rng.random_range(0.2..1.5),
                theta: -scale * rng.random_range(0.2..1.0),
            },
        };
        let fam = match fam {
            Family::Lognormal { mu, sigma, theta } => Family::Lognormal {
                mu: mu + scale.ln(),
                sigma,
                theta,
            },
            f => f,
        };
        if let Ok(g) = DensityGamble::new(fam) {
            return g;
        }
    }
}

pub fn random_gamble(rng: &mut ChaCha8Rng) -> Gamble {
    if rng.random_bool(0.5) {
        random_discrete(rng).into()
    } else {
        random_density(rng, false).into()
    }
}

pub type Check = Result<(), String>;

/// Midpoint concavity of `phi` on a grid of `[0, 1/L)`.
pub fn check_concavity(g: &Gamble) -> Check {
    let l = g.max_loss();
    let tol = 1e-12;
    let pts: Vec<f64> = (0..=16).map(|i| 0.97 * i as f64 / (16.0 * l)).collect();
    for w in pts.windows(3) {
        let e: Vec<_> = w
            .iter()
            .map(|&x| phi_with_tol(g, x, tol).map_err(|e| e.to_string()))
            .collect::<Result<_, _>>()?;
        let slack = e.iter().map(|v| v.abs_error_bound).sum::<f64>() + 1e-13;
        if e[1].value < 0.5 * (e[0].value + e[2].value) - slack {
            return Err(format!("midpoint concavity fails at {:?}", w));
        }
    }
    Ok(())
}

/// `phi'` against a central difference, relative to `max(|phi'|, E X)`.
pub fn check_derivative(g: &Gamble, frac: f64) -> Check {
    let l = g.max_loss();
    let lambda = frac / l;
    let h = 1e-4 * lambda.min(1.0 / l - lambda);
    let f = |x: f64| phi_with_tol(g, x, 1e-14).map(|e| e.value);
    let fd = (f(lambda + h).map_err(|e| e.to_string())? - f(lambda - h).map_err(|e| e.to_string())?)
        / (2.0 * h);
    let d = phi_derivative(g, lambda).map_err(|e| e.to_string())?;
    let scale = d.abs().max(g.stats().mean);
    if (d - fd).abs() > 1e-4 * scale {
        return Err(format!("phi'({lambda}) = {d}, difference quotient {fd}"));
    }
    Ok(())
}

pub fn check_homogeneity(g: &Gamble) -> Check {
    let r = riskiness(g).map_err(|e| e.to_string())?.rho;
    for c in [0.5, 2.0, 10.0] {
        let s = g.scaled(c).map_err(|e| e.to_string())?;
        let rc = riskiness(&s).map_err(|e| e.to_string())?.rho;
        if (rc - c * r).abs() > 1e-8 * c * r {
            return Err(format!("rho({c} X) = {rc}, {c} rho(X) = {}", c * r));
        }
    }
    Ok(())
}

pub fn check_rho_at_least_l(g: &Gamble) -> Check {
    let r = riskiness(g).map_err(|e| e.to_string())?;
    let l = g.max_loss();
    if r.rho < l {
        return Err(format!("rho {} below L {l}", r.rho));
    }
    if r.regime == riskiness::Regime::EquationSolved && !(r.rho > l) {
        // root closer to 1/L than one ulp: phi must still be positive there
        let below = (1.0 / l).next_down();
        let v = phi_with_tol(g, below, 1e-12).map_err(|e| e.to_string())?.value;
        if !(r.rho == l && v > 0.0) {
            return Err(format!("equation-solved rho {} not above L {l}", r.rho));
        }
    }
    Ok(())
}

pub fn check_wealth_bound(g: &Gamble) -> Check {
    let w = acceptance_wealth_bound(g).wealth;
    let v = phi_with_tol(g, 1.0 / w, 1e-12).map_err(|e| e.to_string())?.value;
    if v < -1e-10 {
        return Err(format!("phi(1/{w}) = {v}"));
    }
    Ok(())
}

/// `X_n <= X_{n+1} <= X` at sampled points, levels 1 to 8.
pub fn check_domination(g: &DensityGamble, rng: &mut ChaCha8Rng) -> Check {
    let grids: Vec<_> = (1..=8)
        .map(|n| dyadic_grid(g, n).map_err(|e| e.to_string()))
        .collect::<Result<_, _>>()?;
    for _ in 0..200 {
        let x = g.family().quantile(rng.random_range(1e-9..1.0 - 1e-9));
        let vals: Vec<f64> = grids.iter().map(|gr| gr.value_at(x)).collect();
        for (n, w) in vals.windows(2).enumerate() {
            if !(w[0] <= w[1] && w[1] <= x) {
                return Err(format!("levels {} and {} at x = {x}: {:?}", n + 1, n + 2, w));
            }
        }
    }
    Ok(())
}

/// Same seed gives bit-identical statistics, regardless of thread count.
pub fn check_reproducible(g: &Gamble, seed: u64) -> Check {
    let w0 = 1.5 * riskiness(g).map_err(|e| e.to_string())?.rho;
    let mut spec = SimulationSpec::iid(g.clone(), w0, 200, 16, seed);
    spec.record_paths = 2;
    let a = simulate(&spec).map_err(|e| e.to_string())?;
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let b = pool.install(|| simulate(&spec)).map_err(|e| e.to_string())?;
    if a != b {
        return Err("simulation differs between runs".into());
    }
    if a.min_wealth <= 0.0 {
        return Err(format!("wealth reached {}", a.min_wealth));
    }
    Ok(())
}
