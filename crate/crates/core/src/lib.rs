//! Extended Foster-Hart riskiness.
//!
//! The riskiness of a gamble `X` is the critical wealth below which accepting
//! `X` risks eventual bankruptcy. For finite gambles it is the reciprocal of
//! the positive root of `E log(1 + lambda X) = 0`. For gambles with a density
//! that equation may have no root below `1/L`, and the riskiness is then the
//! maximal loss `L`.
//!
//! Modules:
//! - [`gamble`] / [`family`]: validated gambles and their densities.
//! - [`phi`]: `E log(1 + lambda X)` including the boundary value at `1/L`.
//! - [`measure`]: the regime dichotomy, acceptance rule and wealth bound.
//! - [`dyadic`]: dyadic discretizations and convergence of their roots.
//! - [`tree`]: conditional riskiness on finite event trees.
//! - [`sim`]: wealth processes under the no-bankruptcy acceptance rule.
//! - [`sweep`]: parameter sweeps and regime-boundary location.
//! - [`spec`]: JSON formats.

pub mod dyadic;
pub mod error;
pub mod family;
pub mod gamble;
pub mod phi;
pub mod quadrature;
pub mod measure;
pub mod sim;
pub mod spec;
pub mod sweep;
pub mod tree;

pub use error::{Result, RiskError};
pub use family::{Family, Support, Tabulated};
pub use gamble::{max_loss, DensityGamble, DiscreteGamble, Gamble, GambleStats, Outcome};
pub use phi::{phi, phi_at_max_loss, phi_derivative, phi_with_tol, PhiEvaluation, DEFAULT_TOL};
pub use measure::{
    accept, acceptance_wealth_bound, extended_riskiness, extended_riskiness_with_tol, riskiness,
    riskiness_with_tol, static_riskiness, AcceptanceWealth, Regime, RiskinessResult,
};
