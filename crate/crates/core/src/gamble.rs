//! Gambles: random payoffs with positive mean and a positive probability of
//! loss, given either by finitely many outcomes or by a strictly positive
//! density on `[-L, M]` or `[-L, inf)`.

use crate::error::{Result, RiskError};
use crate::family::{Family, LeftEnd, Support};

/// Discrete probabilities must sum to one within this tolerance.
pub const PROBABILITY_TOLERANCE: f64 = 1e-12;
/// A density must integrate to one within this tolerance.
pub const DENSITY_TOLERANCE: f64 = 1e-9;

/// Summary statistics of a validated gamble.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GambleStats {
    pub mean: f64,
    pub second_moment: f64,
    pub max_loss: f64,
    pub prob_negative: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Outcome {
    pub value: f64,
    pub prob: f64,
}

/// A gamble with finitely many outcomes.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteGamble {
    outcomes: Vec<Outcome>,
    stats: GambleStats,
}

impl DiscreteGamble {
    /// Validates `(value, probability)` pairs.
    pub fn new<I>(outcomes: I) -> Result<Self>
    where
        I: IntoIterator<Item = (f64, f64)>,
    {
        let outcomes: Vec<Outcome> = outcomes
            .into_iter()
            .map(|(value, prob)| Outcome { value, prob })
            .collect();
        if outcomes.len() < 2 {
            return Err(RiskError::not_a_gamble("need at least two outcomes"));
        }
        if outcomes
            .iter()
            .any(|o| !o.value.is_finite() || !o.prob.is_finite())
        {
            return Err(RiskError::not_a_gamble("outcomes must be finite"));
        }
        if outcomes.iter().any(|o| o.prob <= 0.0 || o.prob > 1.0) {
            return Err(RiskError::not_a_gamble("probabilities must lie in (0, 1]"));
        }
        let total = neumaier_sum(outcomes.iter().map(|o| o.prob));
        if (total - 1.0).abs() > PROBABILITY_TOLERANCE {
            return Err(RiskError::not_a_gamble(format!(
                "probabilities sum to {total}, not 1"
            )));
        }
        let mean = neumaier_sum(outcomes.iter().map(|o| o.prob * o.value));
        let second_moment = neumaier_sum(outcomes.iter().map(|o| o.prob * o.value * o.value));
        let prob_negative = neumaier_sum(outcomes.iter().filter(|o| o.value < 0.0).map(|o| o.prob));
        let max_loss = -outcomes
            .iter()
            .map(|o| o.value)
            .fold(f64::INFINITY, f64::min);
        if prob_negative <= 0.0 {
            return Err(RiskError::not_a_gamble("no outcome is a loss"));
        }
        if mean <= 0.0 {
            return Err(RiskError::not_a_gamble(format!("mean {mean} is not positive")));
        }
        Ok(DiscreteGamble {
            outcomes,
            stats: GambleStats {
                mean,
                second_moment,
                max_loss,
                prob_negative,
            },
        })
    }

    pub fn outcomes(&self) -> &[Outcome] {
        &self.outcomes
    }

    pub fn stats(&self) -> GambleStats {
        self.stats
    }

    pub fn max_loss(&self) -> f64 {
        self.stats.max_loss
    }

    pub fn max_gain(&self) -> f64 {
        self.outcomes
            .iter()
            .map(|o| o.value)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// The gamble `c * X`, `c > 0`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        DiscreteGamble::new(self.outcomes.iter().map(|o| (c * o.value, o.prob)))
    }
}

/// A gamble with a strictly positive density on its support.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityGamble {
    family: Family,
    stats: GambleStats,
}

impl DensityGamble {
    pub fn new(family: Family) -> Result<Self> {
        family.check_parameters()?;
        let mass = family.expect(|_| 1.0, LeftEnd::Bounded, 1e-12);
        if !mass.value.is_finite() || (mass.value - 1.0).abs() > DENSITY_TOLERANCE {
            return Err(RiskError::not_a_gamble(format!(
                "density integrates to {}, not 1",
                mass.value
            )));
        }
        let (mean, second_moment) = family.moments();
        if !mean.is_finite() || !second_moment.is_finite() {
            return Err(RiskError::not_a_gamble("moments are not finite"));
        }
        let max_loss = family.max_loss();
        let prob_negative = family.cdf_u(max_loss);
        if prob_negative <= 0.0 {
            return Err(RiskError::not_a_gamble("no probability mass below zero"));
        }
        if mean <= 0.0 {
            return Err(RiskError::not_a_gamble(format!("mean {mean} is not positive")));
        }
        Ok(DensityGamble {
            family,
            stats: GambleStats {
                mean,
                second_moment,
                max_loss,
                prob_negative,
            },
        })
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    pub fn support(&self) -> Support {
        self.family.support()
    }

    pub fn stats(&self) -> GambleStats {
        self.stats
    }

    pub fn max_loss(&self) -> f64 {
        self.stats.max_loss
    }

    pub fn scaled(&self, c: f64) -> Result<Self> {
        DensityGamble::new(self.family.scaled(c))
    }
}

/// Either kind of gamble.
#[derive(Debug, Clone, PartialEq)]
pub enum Gamble {
    Discrete(DiscreteGamble),
    Density(DensityGamble),
}

impl Gamble {
    pub fn stats(&self) -> GambleStats {
        match self {
            Gamble::Discrete(g) => g.stats(),
            Gamble::Density(g) => g.stats(),
        }
    }

    /// `L(X) = ess sup(-X)`.
    pub fn max_loss(&self) -> f64 {
        self.stats().max_loss
    }

    /// `ess sup X`, infinite on a half-line support.
    pub fn max_gain(&self) -> f64 {
        match self {
            Gamble::Discrete(g) => g.max_gain(),
            Gamble::Density(g) => g.support().upper().unwrap_or(f64::INFINITY),
        }
    }

    pub fn is_bounded(&self) -> bool {
        match self {
            Gamble::Discrete(_) => true,
            Gamble::Density(g) => g.support().is_bounded(),
        }
    }

    pub fn scaled(&self, c: f64) -> Result<Gamble> {
        Ok(match self {
            Gamble::Discrete(g) => Gamble::Discrete(g.scaled(c)?),
            Gamble::Density(g) => Gamble::Density(g.scaled(c)?),
        })
    }
}

impl From<DiscreteGamble> for Gamble {
    fn from(g: DiscreteGamble) -> Self {
        Gamble::Discrete(g)
    }
}

impl From<DensityGamble> for Gamble {
    fn from(g: DensityGamble) -> Self {
        Gamble::Density(g)
    }
}

/// Maximal loss of a validated gamble.
pub fn max_loss(g: &Gamble) -> f64 {
    g.max_loss()
}

pub(crate) fn neumaier_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    if !sum.is_finite() {
        return sum;
    }
    sum + comp
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bernoulli_stats() {
        let g = DiscreteGamble::new([(200.0, 0.5), (-100.0, 0.5)]).unwrap();
        let s = g.stats();
        assert_eq!(s.mean, 50.0);
        assert_eq!(s.max_loss, 100.0);
        assert_eq!(s.prob_negative, 0.5);
        assert_eq!(s.second_moment, 25_000.0);
    }

    #[test]
    fn discrete_rejections() {
        let cases: Vec<Vec<(f64, f64)>> = vec![
            vec![(1.0, 1.0)],
            vec![(1.0, 0.5), (-1.0, 0.4)],
            vec![(1.0, 0.5), (2.0, 0.5)],
            vec![(1.0, 0.5), (-2.0, 0.5)],
            vec![(1.0, 1.0), (-2.0, 0.0)],
            vec![(f64::NAN, 0.5), (-2.0, 0.5)],
        ];
        for c in cases {
            assert!(
                matches!(DiscreteGamble::new(c.clone()), Err(RiskError::NotAGamble { .. })),
                "{c:?}"
            );
        }
    }

    #[test]
    fn uniform_stats() {
        let g = DensityGamble::new(Family::Uniform { a: -100.0, b: 200.0 }).unwrap();
        let s = g.stats();
        assert!((s.mean - 50.0).abs() < 1e-12);
        assert_eq!(s.max_loss, 100.0);
        assert!((s.prob_negative - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn uniform_with_negative_mean_is_rejected() {
        let e = DensityGamble::new(Family::Uniform { a: -100.0, b: 50.0 }).unwrap_err();
        assert!(matches!(e, RiskError::NotAGamble { .. }));
    }

    #[test]
    fn lognormal_mean_below_zero_is_rejected() {
        // mean = -25 + e^3 < 0
        let e = DensityGamble::new(Family::Lognormal {
            mu: 1.0,
            sigma: 2.0,
            theta: -25.0,
        })
        .unwrap_err();
        assert!(matches!(e, RiskError::NotAGamble { .. }));
    }

    #[test]
    fn max_loss_of_each_kind() {
        let b = DiscreteGamble::new([(200.0, 0.5), (-100.0, 0.5)]).unwrap();
        assert_eq!(max_loss(&b.into()), 100.0);
        for upper in [150.0, 200.0, 1e4] {
            let u = DensityGamble::new(Family::Uniform { a: -100.0, b: upper }).unwrap();
            assert_eq!(max_loss(&u.into()), 100.0);
        }
        let ln = DensityGamble::new(Family::Lognormal {
            mu: 1.0,
            sigma: 2.0,
            theta: -10.0,
        })
        .unwrap();
        assert_eq!(max_loss(&ln.into()), 10.0);
    }

    #[test]
    fn support_without_losses_is_rejected() {
        assert!(DensityGamble::new(Family::Uniform { a: 0.0, b: 1.0 }).is_err());
        assert!(DensityGamble::new(Family::Lognormal {
            mu: 0.0,
            sigma: 1.0,
            theta: 0.5
        })
        .is_err());
    }
}
