//! Dyadic discretizations `X_n` of density gambles, increasing to `X`.
//!
//! On a compact support `[-L, M]` level `n` has `2^n` equal cells. On a
//! half-line `[-L, inf)` cells have width `L / 2^n` up to `-L + n L`, where an
//! overflow atom collects the upper tail. Every point of a cell is mapped to
//! the cell's left end, so `X_n <= X_{n+1} <= X` pointwise.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Result, RiskError};
use crate::gamble::{neumaier_sum, DensityGamble, DiscreteGamble, Gamble};
use crate::measure::{extended_riskiness, static_riskiness};

/// Default level for compact supports.
pub const DEFAULT_N_MAX_COMPACT: u32 = 15;
/// Default level for half-line supports.
pub const DEFAULT_N_MAX_HALF_LINE: u32 = 12;

/// Largest level accepted; `2^n` atoms must fit comfortably in memory.
pub const MAX_LEVEL: u32 = 24;

#[derive(Debug, Clone, PartialEq)]
pub struct DyadicGrid {
    pub level: u32,
    /// `(x_k, P(x_k <= X < x_{k+1}))`; the last atom carries the upper tail.
    pub atoms: Vec<(f64, f64)>,
    max_loss: f64,
    step: f64,
}

impl DyadicGrid {
    /// Value of `X_n` at a point `x` of the support.
    pub fn value_at(&self, x: f64) -> f64 {
        let last = self.atoms.len() - 1;
        let raw = ((x + self.max_loss) / self.step).floor();
        let mut k = if raw.is_nan() || raw < 0.0 {
            0
        } else {
            (raw as usize).min(last)
        };
        while k > 0 && self.atoms[k].0 > x {
            k -= 1;
        }
        self.atoms[k].0
    }

    pub fn mean(&self) -> f64 {
        neumaier_sum(self.atoms.iter().map(|&(x, p)| x * p))
    }

    pub fn total_mass(&self) -> f64 {
        neumaier_sum(self.atoms.iter().map(|&(_, p)| p))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DyadicApproximation {
    pub grid: DyadicGrid,
    pub gamble: DiscreteGamble,
}

impl DyadicApproximation {
    pub fn level(&self) -> u32 {
        self.grid.level
    }
}

/// Grid and masses of level `n`, without checking that they form a gamble.
pub fn dyadic_grid(g: &DensityGamble, n: u32) -> Result<DyadicGrid> {
    if n == 0 || n > MAX_LEVEL {
        return Err(RiskError::Numerical(format!(
            "dyadic level must lie in 1..={MAX_LEVEL}, got {n}"
        )));
    }
    let fam = g.family();
    let l = g.max_loss();
    let cells = 1usize << n;
    let scale = (cells as f64).recip();
    let (step, count) = match fam.width() {
        Some(w) => (w * scale, cells),
        None => (l * scale, cells * n as usize),
    };
    let bounded = fam.width().is_some();
    // F(u) near the left end, S(u) near the right, to keep differences accurate
    let median = fam.quantile_u(0.5);
    let lower_mass = |u0: f64, u1: f64| {
        if u1 <= median {
            fam.cdf_u(u1) - fam.cdf_u(u0)
        } else {
            fam.sf_u(u0) - fam.sf_u(u1)
        }
    };
    let mut atoms = Vec::with_capacity(count + usize::from(!bounded));
    for k in 0..count {
        let u0 = k as f64 * step;
        let mass = if bounded && k + 1 == count {
            fam.sf_u(u0)
        } else {
            lower_mass(u0, (k + 1) as f64 * step).max(0.0)
        };
        atoms.push((u0 - l, mass));
    }
    if !bounded {
        let u0 = count as f64 * step;
        atoms.push((u0 - l, fam.sf_u(u0)));
    }
    Ok(DyadicGrid {
        level: n,
        atoms,
        max_loss: l,
        step,
    })
}

/// The level-`n` discretization as a discrete gamble.
///
/// Fails with [`RiskError::NotYetAGamble`] while the induced mean is not
/// positive; callers should increase `n`.
pub fn discretize(g: &DensityGamble, n: u32) -> Result<DyadicApproximation> {
    let grid = dyadic_grid(g, n)?;
    let mean = grid.mean();
    if !(mean > 0.0) {
        return Err(RiskError::NotYetAGamble { n, mean });
    }
    let gamble = DiscreteGamble::new(grid.atoms.iter().copied().filter(|&(_, p)| p > 0.0))?;
    Ok(DyadicApproximation { grid, gamble })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Level {
    pub n: u32,
    pub lambda: f64,
    pub rho: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceReport {
    /// Valid levels in increasing order.
    pub levels: Vec<Level>,
    /// Levels whose induced mean was not yet positive.
    pub skipped: Vec<u32>,
    /// `lambda` at the highest valid level.
    pub limit_estimate: Option<f64>,
    /// `1 / rho(X)`.
    pub target: f64,
    pub monotone: bool,
    /// `|limit_estimate - target|`.
    pub gap: Option<f64>,
}

/// Slack allowed when checking that `lambda_n` is nondecreasing.
pub const MONOTONE_SLACK: f64 = 1e-12;

/// Roots `lambda_n` for `n = 1..=n_max` and their distance to `1 / rho(X)`.
pub fn lambda_sequence(g: &DensityGamble, n_max: u32) -> Result<ConvergenceReport> {
    let target = 1.0 / extended_riskiness(g)?.rho;
    let outcomes: Vec<(u32, Result<Level>)> = (1..=n_max)
        .into_par_iter()
        .map(|n| {
            let level = discretize(g, n).map(|d| {
                let r = static_riskiness(&d.gamble);
                Level {
                    n,
                    lambda: r.lambda,
                    rho: r.rho,
                }
            });
            (n, level)
        })
        .collect();
    let mut levels = Vec::new();
    let mut skipped = Vec::new();
    for (n, r) in outcomes {
        match r {
            Ok(l) => levels.push(l),
            Err(RiskError::NotYetAGamble { .. }) => skipped.push(n),
            Err(e) => return Err(e),
        }
    }
    let monotone = levels
        .windows(2)
        .all(|w| w[1].lambda >= w[0].lambda - MONOTONE_SLACK);
    let limit_estimate = levels.last().map(|l| l.lambda);
    Ok(ConvergenceReport {
        gap: limit_estimate.map(|l| (l - target).abs()),
        levels,
        skipped,
        limit_estimate,
        target,
        monotone,
    })
}

/// Default `n_max` for the support type of `g`.
pub fn default_n_max(g: &DensityGamble) -> u32 {
    if Gamble::Density(g.clone()).is_bounded() {
        DEFAULT_N_MAX_COMPACT
    } else {
        DEFAULT_N_MAX_HALF_LINE
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::family::Family;

    fn uniform(a: f64, b: f64) -> DensityGamble {
        DensityGamble::new(Family::Uniform { a, b }).unwrap()
    }

    #[test]
    fn uniform_level_one() {
        let grid = dyadic_grid(&uniform(-100.0, 200.0), 1).unwrap();
        assert_eq!(grid.atoms, vec![(-100.0, 0.5), (50.0, 0.5)]);
        assert_eq!(grid.mean(), -25.0);
        assert_eq!(
            discretize(&uniform(-100.0, 200.0), 1),
            Err(RiskError::NotYetAGamble { n: 1, mean: -25.0 })
        );
    }

    #[test]
    fn uniform_level_two() {
        let d = discretize(&uniform(-100.0, 200.0), 2).unwrap();
        let xs: Vec<f64> = d.grid.atoms.iter().map(|a| a.0).collect();
        assert_eq!(xs, vec![-100.0, -25.0, 50.0, 125.0]);
        for a in &d.grid.atoms {
            assert!((a.1 - 0.25).abs() < 1e-15);
        }
        assert!((d.gamble.stats().mean - 12.5).abs() < 1e-12);
    }

    #[test]
    fn lognormal_level_three_has_overflow_atom() {
        let g = DensityGamble::new(Family::Lognormal {
            mu: 1.0,
            sigma: 2.0,
            theta: -1.0,
        })
        .unwrap();
        let grid = dyadic_grid(&g, 3).unwrap();
        assert_eq!(grid.atoms.len(), 3 * 8 + 1);
        assert_eq!(grid.atoms[0].0, -1.0);
        assert_eq!(grid.atoms[1].0, -0.875);
        let (x_last, p_last) = *grid.atoms.last().unwrap();
        assert_eq!(x_last, 2.0);
        assert!((p_last - g.family().sf_u(3.0)).abs() < 1e-16);
        assert!((grid.total_mass() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn masses_sum_to_one() {
        let fams = [
            Family::Uniform { a: -1.0, b: 3.0 },
            Family::Beta { alpha: 2.0, beta: 3.0, a: -100.0, b: 200.0 },
            Family::Beta { alpha: 0.6, beta: 0.8, a: -1.0, b: 2.0 },
        ];
        for f in fams {
            let g = DensityGamble::new(f).unwrap();
            for n in [1, 5, 12] {
                let grid = dyadic_grid(&g, n).unwrap();
                assert!((grid.total_mass() - 1.0).abs() < 1e-12, "{n}");
                assert!(grid.atoms[0].1 > 0.0);
            }
        }
    }

    #[test]
    fn grids_nest_across_levels() {
        let g = uniform(-100.0, 237.3);
        let coarse = dyadic_grid(&g, 4).unwrap();
        let fine = dyadic_grid(&g, 5).unwrap();
        for (k, a) in coarse.atoms.iter().enumerate() {
            assert_eq!(a.0, fine.atoms[2 * k].0);
        }
    }

    #[test]
    fn maximal_loss_regime_converges_to_one_over_l() {
        let r = lambda_sequence(&uniform(-100.0, 200.0), 10).unwrap();
        assert_eq!(r.skipped, vec![1]);
        assert!(r.monotone);
        assert_eq!(r.target, 0.01);
        for l in &r.levels {
            assert!(l.lambda <= 0.01);
        }
        assert!(r.limit_estimate.unwrap() > 0.0099);
    }
}
