//! Parameter sweeps over a density family and location of the regime
//! boundary `phi(1/L) = 0`.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, RiskError};
use crate::gamble::{DensityGamble, Gamble};
use crate::phi::phi_at_max_loss;
use crate::measure::{extended_riskiness_with_tol, Regime};
use crate::spec::{FamilySpec, GambleSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    /// A density gamble; the swept parameter's value in it is ignored.
    pub base: GambleSpec,
    pub param: String,
    pub lo: f64,
    pub hi: f64,
    pub step: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RowRegime {
    EquationSolved,
    MaximalLoss,
    Ambiguous,
    NotAGamble,
    Failed,
}

impl RowRegime {
    pub fn as_str(&self) -> &'static str {
        match self {
            RowRegime::EquationSolved => Regime::EquationSolved.as_str(),
            RowRegime::MaximalLoss => Regime::MaximalLoss.as_str(),
            RowRegime::Ambiguous => "ambiguous",
            RowRegime::NotAGamble => "not-a-gamble",
            RowRegime::Failed => "failed",
        }
    }

    fn solved(&self) -> bool {
        matches!(self, RowRegime::EquationSolved | RowRegime::MaximalLoss)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRow {
    pub param: f64,
    pub rho: Option<f64>,
    pub lambda: Option<f64>,
    pub regime: RowRegime,
}

impl SweepSpec {
    pub fn from_json(s: &str) -> Result<Self> {
        let spec: SweepSpec = serde_json::from_str(s)?;
        spec.family()?.with_parameter(&spec.param, spec.lo)?;
        Ok(spec)
    }

    fn family(&self) -> Result<&FamilySpec> {
        match &self.base {
            GambleSpec::Density(f) => Ok(f),
            GambleSpec::Discrete { .. } => {
                Err(RiskError::Parse("sweeps need a density gamble as base".into()))
            }
        }
    }

    /// Inclusive grid `lo, lo + step, ..., hi`.
    pub fn grid(&self) -> Result<Vec<f64>> {
        if !(self.step > 0.0) || !(self.hi >= self.lo) || !self.lo.is_finite() || !self.hi.is_finite()
        {
            return Err(RiskError::Parse(format!(
                "bad sweep range [{}, {}] step {}",
                self.lo, self.hi, self.step
            )));
        }
        let span = (self.hi - self.lo) / self.step;
        let n = (span + 1e-9).floor() as usize;
        let mut pts: Vec<f64> = (0..=n).map(|i| self.lo + i as f64 * self.step).collect();
        let last = pts[n];
        if (self.hi - last).abs() <= 1e-9 * self.step {
            pts[n] = self.hi;
        } else {
            pts.push(self.hi);
        }
        Ok(pts)
    }

    /// The base family with the swept parameter set to `value`.
    pub fn family_at(&self, value: f64) -> Result<FamilySpec> {
        self.family()?.with_parameter(&self.param, value)
    }
}

fn row(spec: &SweepSpec, value: f64, tol: f64) -> SweepRow {
    let blank = |regime| SweepRow {
        param: value,
        rho: None,
        lambda: None,
        regime,
    };
    let g = match spec
        .family_at(value)
        .and_then(|f| f.to_family())
        .and_then(DensityGamble::new)
    {
        Ok(g) => g,
        Err(_) => return blank(RowRegime::NotAGamble),
    };
    match extended_riskiness_with_tol(&g, tol) {
        Ok(r) => SweepRow {
            param: value,
            rho: Some(r.rho),
            lambda: Some(r.lambda),
            regime: match r.regime {
                Regime::EquationSolved => RowRegime::EquationSolved,
                Regime::MaximalLoss => RowRegime::MaximalLoss,
            },
        },
        Err(RiskError::BoundarySignAmbiguous { .. }) => blank(RowRegime::Ambiguous),
        Err(_) => blank(RowRegime::Failed),
    }
}

/// One row per grid point, in grid order.
pub fn sweep(spec: &SweepSpec, tol: f64) -> Result<Vec<SweepRow>> {
    let grid = spec.grid()?;
    Ok(grid.par_iter().map(|&v| row(spec, v, tol)).collect())
}

/// CSV with header `param,rho,lambda,regime`; blank numbers on rows that
/// have none.
pub fn to_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("param,rho,lambda,regime\n");
    let num = |x: Option<f64>| x.map(|v| format!("{v:.16e}")).unwrap_or_default();
    for r in rows {
        let _ = writeln!(
            out,
            "{:.16e},{},{},{}",
            r.param,
            num(r.rho),
            num(r.lambda),
            r.regime.as_str()
        );
    }
    out
}

/// Pairs of consecutive solved rows whose regimes differ.
pub fn regime_boundaries(rows: &[SweepRow]) -> Vec<(f64, f64)> {
    let solved: Vec<&SweepRow> = rows.iter().filter(|r| r.regime.solved()).collect();
    solved
        .windows(2)
        .filter(|w| w[0].regime != w[1].regime)
        .map(|w| (w[0].param, w[1].param))
        .collect()
}

fn boundary_sign(spec: &SweepSpec, value: f64, tol: f64) -> Result<f64> {
    let g: Gamble = DensityGamble::new(spec.family_at(value)?.to_family()?)?.into();
    Ok(phi_at_max_loss(&g, tol).value)
}

/// Bisects `[lo, hi]` on the sign of `phi(1/L)` until it is narrower than
/// `width`.
pub fn refine_boundary(spec: &SweepSpec, lo: f64, hi: f64, width: f64) -> Result<f64> {
    let tol = 1e-13;
    let (mut a, mut b) = (lo, hi);
    let sa = boundary_sign(spec, a, tol)?;
    let sb = boundary_sign(spec, b, tol)?;
    if sa.signum() == sb.signum() {
        return Err(RiskError::Numerical(format!(
            "phi(1/L) has the same sign at {lo} and {hi}"
        )));
    }
    let a_positive = sa > 0.0;
    while (b - a).abs() > width {
        let m = 0.5 * (a + b);
        let s = boundary_sign(spec, m, tol)?;
        if s == 0.0 {
            return Ok(m);
        }
        if (s > 0.0) == a_positive {
            a = m;
        } else {
            b = m;
        }
    }
    Ok(0.5 * (a + b))
}
