use serde::{Deserialize, Serialize};

use super::{Alpha, CriticalExponents, Tau, SPECFUN_REL_TOL};
use crate::error::{Error, Result};

/// Relative tolerance for the equality tests `p = 1 + 2α`,
/// `p = 1 − 2α/τ₁` and `τ = τ₁`, `τ = −2α/(p − 1)`.
pub const EQUALITY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RegimeKind {
    UniqueExistence,
    SpecialExistence,
    NonexistenceA,
    NonexistenceB,
    NonexistenceC,
    Boundary,
}

impl RegimeKind {
    pub fn is_nonexistence(self) -> bool {
        matches!(self, Self::NonexistenceA | Self::NonexistenceB | Self::NonexistenceC)
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::UniqueExistence => "UniqueExistence",
            Self::SpecialExistence => "SpecialExistence",
            Self::NonexistenceA => "NonexistenceA",
            Self::NonexistenceB => "NonexistenceB",
            Self::NonexistenceC => "NonexistenceC",
            Self::Boundary => "Boundary",
        }
    }
}

impl std::fmt::Display for RegimeKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Outcome of [`classify`].
///
/// The zones for the rate `−2α/(p − 1)` and for the one-parameter family
/// with rate τ₁ overlap. `kind` reports the first that applies in the order
/// UniqueExistence, Boundary, SpecialExistence, Nonexistence;
/// `special_family_rate` is set whenever the family exists, whatever `kind`
/// says.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Regime {
    pub kind: RegimeKind,
    pub predicted_rate: Option<f64>,
    pub special_family_rate: Option<f64>,
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= EQUALITY_TOL * a.abs().max(b.abs()).max(1.0)
}

/// Classifies `(α, p)` and, when τ is given, the question of whether a
/// solution with `u ~ D^τ` can exist.
pub fn classify(alpha: Alpha, p: f64, tau: Option<Tau>) -> Result<Regime> {
    let crit = CriticalExponents::compute(alpha, 1e3 * SPECFUN_REL_TOL)?;
    classify_with(&crit, p, tau)
}

/// [`classify`] against precomputed critical exponents.
pub fn classify_with(crit: &CriticalExponents, p: f64, tau: Option<Tau>) -> Result<Regime> {
    if !(p > 1.0) || !p.is_finite() {
        return Err(Error::BadConfig(format!("p = {p} must be a finite number above 1")));
    }
    let a = crit.alpha.value();
    let lower = 1.0 + 2.0 * a;
    let rate = -2.0 * a / (p - 1.0);
    let tau = tau.map(Tau::value).filter(|&t| t < 0.0);

    let unique = |special_family_rate| Regime {
        kind: RegimeKind::UniqueExistence,
        predicted_rate: Some(rate),
        special_family_rate,
    };
    let plain = |kind, special_family_rate| Regime { kind, predicted_rate: None, special_family_rate };

    let Some(tau1) = crit.tau1 else {
        let kind = match tau {
            Some(t) if !close(t, rate) => {
                if p <= lower || close(p, lower) {
                    RegimeKind::NonexistenceA
                } else {
                    RegimeKind::NonexistenceB
                }
            }
            _ if close(p, lower) => RegimeKind::Boundary,
            _ if p > lower => return Ok(unique(None)),
            _ => RegimeKind::NonexistenceA,
        };
        return Ok(plain(kind, None));
    };

    let upper = 1.0 - 2.0 * a / tau1;
    let special_lower = (1.0 - 2.0 * a / tau1 + (tau1 + 1.0) / tau1).max(1.0);
    let special = p > special_lower && p < upper && !close(p, upper) && !close(p, special_lower);
    let family = special.then_some(tau1);
    let at_lower = close(p, lower);
    let at_upper = close(p, upper);
    let in_zone = p > lower && p < upper && !at_lower && !at_upper;

    let Some(t) = tau else {
        if in_zone {
            return Ok(unique(family));
        }
        if at_lower || at_upper {
            return Ok(plain(RegimeKind::Boundary, family));
        }
        if special {
            return Ok(Regime {
                kind: RegimeKind::SpecialExistence,
                predicted_rate: Some(tau1),
                special_family_rate: family,
            });
        }
        let kind = if p > upper { RegimeKind::NonexistenceC } else { RegimeKind::NonexistenceA };
        return Ok(plain(kind, family));
    };

    if p >= upper || at_upper {
        return Ok(plain(RegimeKind::NonexistenceC, family));
    }
    if close(t, tau1) {
        if special {
            return Ok(Regime {
                kind: RegimeKind::SpecialExistence,
                predicted_rate: Some(tau1),
                special_family_rate: family,
            });
        }
        return Ok(plain(RegimeKind::Boundary, family));
    }
    if p <= lower || at_lower {
        return Ok(plain(RegimeKind::NonexistenceA, family));
    }
    if close(t, rate) {
        return Ok(unique(family));
    }
    Ok(plain(RegimeKind::NonexistenceB, family))
}
