//! Wealth processes under the no-bankruptcy acceptance rule.
//!
//! At each step the offered gamble is accepted iff `E log(1 + X / W) >= 0`;
//! on acceptance a draw of `X` is added to wealth, otherwise wealth is kept.
//! Path `i` draws from a ChaCha8 stream seeded with the master seed and
//! `stream = i`, so results do not depend on scheduling.

use rand::distr::{Distribution, Open01};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, RiskError};
use crate::gamble::Gamble;
use crate::phi::DEFAULT_TOL;
use crate::measure::{accept_with_tol, riskiness, Regime};
use crate::spec::GambleSpec;

/// Fractions of `W0` reported as ruin-proximity thresholds.
pub const THRESHOLDS: [f64; 3] = [1e-1, 1e-3, 1e-6];
/// Two-sided 99% standard normal quantile.
pub const Z_99: f64 = 2.5758293035489004;
/// Minimum number of acceptance events for the submartingale check.
pub const MIN_EVENTS: u64 = 10_000;

/// Relative slack on the precomputed riskiness threshold.
const THRESHOLD_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AcceptanceRoute {
    /// Compare wealth with the riskiness of each gamble, computed once.
    #[default]
    Precomputed,
    /// Evaluate `phi(1/W)` at every offer.
    Direct,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationSpecJson {
    /// Offered at every step; exclusive with `rotation`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamble: Option<GambleSpec>,
    /// Offered in turn, step `t` offering `rotation[t % len]`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rotation: Option<Vec<GambleSpec>>,
    pub initial_wealth: f64,
    pub horizon: u64,
    pub paths: u64,
    #[serde(default)]
    pub seed: u64,
    pub loss_floor: f64,
    #[serde(default)]
    pub record_paths: usize,
    #[serde(default)]
    pub route: AcceptanceRoute,
}

/// A validated simulation setup.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationSpec {
    pub gambles: Vec<Gamble>,
    pub initial_wealth: f64,
    pub horizon: u64,
    pub paths: u64,
    pub seed: u64,
    pub loss_floor: f64,
    /// Number of leading paths whose full trajectories are kept.
    pub record_paths: usize,
    pub route: AcceptanceRoute,
}

impl SimulationSpec {
    pub fn iid(gamble: Gamble, initial_wealth: f64, horizon: u64, paths: u64, seed: u64) -> Self {
        let loss_floor = gamble.max_loss();
        SimulationSpec {
            gambles: vec![gamble],
            initial_wealth,
            horizon,
            paths,
            seed,
            loss_floor,
            record_paths: 0,
            route: AcceptanceRoute::Precomputed,
        }
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let raw: SimulationSpecJson = serde_json::from_str(s)?;
        let specs = match (raw.gamble, raw.rotation) {
            (Some(g), None) => vec![g],
            (None, Some(r)) => r,
            _ => {
                return Err(RiskError::SpecInvalid(
                    "give exactly one of 'gamble' or 'rotation'".into(),
                ))
            }
        };
        let gambles = specs.iter().map(GambleSpec::build).collect::<Result<Vec<_>>>()?;
        Ok(SimulationSpec {
            gambles,
            initial_wealth: raw.initial_wealth,
            horizon: raw.horizon,
            paths: raw.paths,
            seed: raw.seed,
            loss_floor: raw.loss_floor,
            record_paths: raw.record_paths,
            route: raw.route,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.initial_wealth > 0.0 && self.initial_wealth.is_finite()) {
            return Err(RiskError::SpecInvalid(format!(
                "initial wealth must be positive, got {}",
                self.initial_wealth
            )));
        }
        if !(self.loss_floor > 0.0) {
            return Err(RiskError::SpecInvalid("loss floor must be positive".into()));
        }
        if self.gambles.is_empty() {
            return Err(RiskError::SpecInvalid("no gambles offered".into()));
        }
        if self.paths == 0 {
            return Err(RiskError::SpecInvalid("need at least one path".into()));
        }
        for (i, g) in self.gambles.iter().enumerate() {
            if !g.is_bounded() {
                return Err(RiskError::SpecInvalid(format!(
                    "gamble {i} has unbounded support"
                )));
            }
            if g.max_loss() < self.loss_floor {
                return Err(RiskError::SpecInvalid(format!(
                    "gamble {i} has maximal loss {} below the floor {}",
                    g.max_loss(),
                    self.loss_floor
                )));
            }
        }
        Ok(())
    }
}

/// Running count, mean and sum of squared deviations.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct IncrementSummary {
    pub count: u64,
    pub mean: f64,
    pub m2: f64,
}

impl IncrementSummary {
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let d = x - self.mean;
        self.mean += d / self.count as f64;
        self.m2 += d * (x - self.mean);
    }

    pub fn merge(&mut self, other: &IncrementSummary) {
        if other.count == 0 {
            return;
        }
        if self.count == 0 {
            *self = *other;
            return;
        }
        let n = (self.count + other.count) as f64;
        let d = other.mean - self.mean;
        let w = other.count as f64 / n;
        self.mean += d * w;
        self.m2 += other.m2 + d * d * self.count as f64 * w;
        self.count += other.count;
    }

    pub fn from_slice(xs: &[f64]) -> Self {
        let mut s = IncrementSummary::default();
        for &x in xs {
            s.push(x);
        }
        s
    }

    /// Summary of the negated sample.
    pub fn negated(&self) -> Self {
        IncrementSummary {
            mean: -self.mean,
            ..*self
        }
    }

    pub fn variance(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            self.m2 / (self.count - 1) as f64
        }
    }

    /// Half-width of the 99% normal confidence interval for the mean.
    pub fn half_width(&self) -> f64 {
        if self.count == 0 {
            f64::INFINITY
        } else {
            Z_99 * (self.variance() / self.count as f64).sqrt()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PathSummary {
    pub final_wealth: f64,
    pub min_wealth: f64,
    pub accepted: u64,
    pub rejected: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub path: u64,
    /// `W_0, ..., W_T`.
    pub wealth: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThresholdFraction {
    pub threshold: f64,
    pub fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WealthPathStats {
    pub initial_wealth: f64,
    pub horizon: u64,
    pub paths: Vec<PathSummary>,
    pub min_wealth: f64,
    pub below: Vec<ThresholdFraction>,
    /// `log W_{t+1} - log W_t` over acceptance events.
    pub increments: IncrementSummary,
    pub trajectories: Vec<Trajectory>,
}

/// Aggregate part of [`WealthPathStats`] for reporting.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationSummary {
    pub paths: usize,
    pub horizon: u64,
    pub initial_wealth: f64,
    pub min_wealth: f64,
    pub mean_final_wealth: f64,
    pub accepted: u64,
    pub rejected: u64,
    pub below: Vec<ThresholdFraction>,
    pub increment_mean: f64,
    pub increment_half_width: f64,
    pub acceptance_events: u64,
}

impl WealthPathStats {
    pub fn summary(&self) -> SimulationSummary {
        let n = self.paths.len();
        SimulationSummary {
            paths: n,
            horizon: self.horizon,
            initial_wealth: self.initial_wealth,
            min_wealth: self.min_wealth,
            mean_final_wealth: self.paths.iter().map(|p| p.final_wealth).sum::<f64>() / n as f64,
            accepted: self.paths.iter().map(|p| p.accepted).sum(),
            rejected: self.paths.iter().map(|p| p.rejected).sum(),
            below: self.below.clone(),
            increment_mean: self.increments.mean,
            increment_half_width: self.increments.half_width(),
            acceptance_events: self.increments.count,
        }
    }
}

enum Sampler {
    Discrete { values: Vec<f64>, cum: Vec<f64> },
    Density(Gamble),
}

struct Offer {
    gamble: Gamble,
    max_loss: f64,
    threshold: f64,
    discrete: bool,
    sampler: Sampler,
}

impl Offer {
    fn new(g: &Gamble) -> Result<Offer> {
        let threshold = match riskiness(g) {
            Ok(r) => r.rho * (1.0 - THRESHOLD_SLACK),
            // phi(1/L) is numerically zero: the rule accepts at L
            Err(RiskError::BoundarySignAmbiguous { .. }) => g.max_loss(),
            Err(e) => return Err(e),
        };
        let sampler = match g {
            Gamble::Discrete(d) => {
                let mut acc = 0.0;
                let mut cum = Vec::with_capacity(d.outcomes().len());
                for o in d.outcomes() {
                    acc += o.prob;
                    cum.push(acc);
                }
                Sampler::Discrete {
                    values: d.outcomes().iter().map(|o| o.value).collect(),
                    cum,
                }
            }
            Gamble::Density(_) => Sampler::Density(g.clone()),
        };
        Ok(Offer {
            gamble: g.clone(),
            max_loss: g.max_loss(),
            threshold,
            discrete: matches!(g, Gamble::Discrete(_)),
            sampler,
        })
    }

    fn accepts(&self, w: f64, route: AcceptanceRoute) -> bool {
        if self.discrete && w <= self.max_loss {
            return false;
        }
        match route {
            AcceptanceRoute::Precomputed => w >= self.threshold,
            AcceptanceRoute::Direct => accept_with_tol(&self.gamble, w, DEFAULT_TOL),
        }
    }

    /// Next wealth after accepting at `w`; stays positive because
    /// `w > L` for discrete offers and `w >= L`, `X + L > 0` for densities.
    fn step(&self, w: f64, p: f64) -> f64 {
        match &self.sampler {
            Sampler::Discrete { values, cum } => {
                let k = cum.partition_point(|&c| c <= p).min(values.len() - 1);
                w + values[k]
            }
            Sampler::Density(Gamble::Density(d)) => {
                let u = d.family().quantile_u(p).max(f64::MIN_POSITIVE);
                (w - self.max_loss) + u
            }
            Sampler::Density(Gamble::Discrete(_)) => unreachable!(),
        }
    }
}

fn log_increment(w: f64, next: f64) -> f64 {
    let r = (next - w) / w;
    if r > -0.5 {
        r.ln_1p()
    } else {
        (next / w).ln()
    }
}

struct PathResult {
    summary: PathSummary,
    increments: IncrementSummary,
    trajectory: Option<Vec<f64>>,
}

fn run_path(spec: &SimulationSpec, offers: &[Offer], path: u64) -> PathResult {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    rng.set_stream(path);
    let record = (path as usize) < spec.record_paths;
    let mut trajectory = record.then(|| {
        let mut v = Vec::with_capacity(spec.horizon as usize + 1);
        v.push(spec.initial_wealth);
        v
    });
    let mut w = spec.initial_wealth;
    let mut min_wealth = w;
    let mut accepted = 0;
    let mut rejected = 0;
    let mut increments = IncrementSummary::default();
    for t in 0..spec.horizon {
        let offer = &offers[(t % offers.len() as u64) as usize];
        if offer.accepts(w, spec.route) {
            let p: f64 = Open01.sample(&mut rng);
            let next = offer.step(w, p);
            increments.push(log_increment(w, next));
            w = next;
            min_wealth = min_wealth.min(w);
            accepted += 1;
        } else {
            rejected += 1;
        }
        if let Some(v) = trajectory.as_mut() {
            v.push(w);
        }
    }
    PathResult {
        summary: PathSummary {
            final_wealth: w,
            min_wealth,
            accepted,
            rejected,
        },
        increments,
        trajectory,
    }
}

/// Runs all paths of `spec` in parallel; results are independent of the
/// thread count.
pub fn simulate(spec: &SimulationSpec) -> Result<WealthPathStats> {
    spec.validate()?;
    let offers = spec.gambles.iter().map(Offer::new).collect::<Result<Vec<_>>>()?;
    let results: Vec<PathResult> = (0..spec.paths)
        .into_par_iter()
        .map(|i| run_path(spec, &offers, i))
        .collect();
    let mut increments = IncrementSummary::default();
    let mut paths = Vec::with_capacity(results.len());
    let mut trajectories = Vec::new();
    for (i, r) in results.into_iter().enumerate() {
        increments.merge(&r.increments);
        paths.push(r.summary);
        if let Some(wealth) = r.trajectory {
            trajectories.push(Trajectory {
                path: i as u64,
                wealth,
            });
        }
    }
    let n = paths.len() as f64;
    let below = THRESHOLDS
        .iter()
        .map(|&c| {
            let level = c * spec.initial_wealth;
            ThresholdFraction {
                threshold: level,
                fraction: paths.iter().filter(|p| p.min_wealth < level).count() as f64 / n,
            }
        })
        .collect();
    Ok(WealthPathStats {
        initial_wealth: spec.initial_wealth,
        horizon: spec.horizon,
        min_wealth: paths.iter().map(|p| p.min_wealth).fold(f64::INFINITY, f64::min),
        paths,
        below,
        increments,
        trajectories,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SubmartingaleReport {
    pub events: u64,
    pub mean: f64,
    pub half_width: f64,
    pub pass: bool,
}

/// Checks that the mean log-wealth increment on acceptance is at least
/// minus its 99% confidence half-width.
pub fn submartingale_check(increments: &IncrementSummary) -> Result<SubmartingaleReport> {
    if increments.count < MIN_EVENTS {
        return Err(RiskError::InsufficientEvents {
            have: increments.count,
            need: MIN_EVENTS,
        });
    }
    let half_width = increments.half_width();
    Ok(SubmartingaleReport {
        events: increments.count,
        mean: increments.mean,
        half_width,
        pass: increments.mean >= -half_width,
    })
}

/// Regime of each offered gamble, for reporting.
pub fn offered_regimes(spec: &SimulationSpec) -> Vec<Result<Regime>> {
    spec.gambles
        .iter()
        .map(|g| riskiness(g).map(|r| r.regime))
        .collect()
}
