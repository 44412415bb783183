//! Post-processing of solutions and comparison functions: log-log rate
//! fits, ratio bands against a reference power of D, and the residual-sign
//! audits behind the nonexistence and special-family statements.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::{Exterior, Grid, GridFunction};
use crate::operator::{Extension, OperatorMatrix};
use crate::profiles::{build_v_tau, sample_profile, solve_torsion_with, TorsionFunction};
use crate::specfun::{classify_with, Alpha, CriticalExponents, RegimeKind, Tau};

pub const MIN_FIT_POINTS: usize = 8;
/// Nodes closer to 0 than this many local spacings are not trusted.
pub const RESOLUTION_FACTOR: f64 = 20.0;
/// Relative size of the residual slack in the zone audits.
pub const AUDIT_REL_TOL: f64 = 1e-6;
/// Band ratio max/min accepted as "bounded above and below".
pub const BAND_SPREAD_LIMIT: f64 = 10.0;

const ZONE_T: [f64; 4] = [0.5, 1.0, 2.0, 4.0];
const SCALE_STEPS: usize = 40;
const BISECTION_STEPS: usize = 30;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FitSide {
    Left,
    Right,
    Pooled,
}

/// `u ≈ amplitude · D^exponent` over the window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub exponent: f64,
    pub amplitude: f64,
    pub window: (f64, f64),
    pub residual_r2: f64,
    pub side: FitSide,
    pub n_points: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateFits {
    pub left: RateFit,
    pub right: RateFit,
    pub pooled: RateFit,
}

fn least_squares(points: &[(f64, f64)]) -> (f64, f64, f64) {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = points.iter().map(|p| (p.1 - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = points.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
    let r2 = if syy > 0.0 { (1.0 - ss_res / syy).clamp(0.0, 1.0) } else { 1.0 };
    (slope, intercept, r2)
}

fn check_window(grid: &Grid, (lo, hi): (f64, f64)) -> Result<()> {
    if !(lo > 0.0 && lo < hi && hi <= grid.delta()) {
        return Err(Error::BadConfig(format!(
            "window ({lo}, {hi}) must satisfy 0 < lo < hi <= delta = {}",
            grid.delta()
        )));
    }
    Ok(())
}

/// Least-squares line through `(log D, log u)` on the window nodes, for
/// each side and for both together.
pub fn fit_rate(u: &GridFunction, window: (f64, f64)) -> Result<RateFits> {
    let grid = u.grid();
    check_window(grid, window)?;
    let in_window = |i: usize| {
        let d = grid.dist_c(i);
        d >= window.0 && d <= window.1
    };
    let fit = |side: FitSide| -> Result<RateFit> {
        let mut pts = Vec::new();
        for i in (0..grid.len()).filter(|&i| in_window(i)) {
            let keep = match side {
                FitSide::Left => !grid.is_right(i),
                FitSide::Right => grid.is_right(i),
                FitSide::Pooled => true,
            };
            if !keep {
                continue;
            }
            let v = u.values()[i];
            if !(v > 0.0) {
                return Err(Error::BadConfig(format!("u = {v} is not positive at node {i}")));
            }
            pts.push((grid.dist_c(i).ln(), v.ln()));
        }
        if pts.len() < MIN_FIT_POINTS {
            return Err(Error::TooFewPoints { needed: MIN_FIT_POINTS, found: pts.len() });
        }
        let (slope, intercept, r2) = least_squares(&pts);
        Ok(RateFit {
            exponent: slope,
            amplitude: intercept.exp(),
            window,
            residual_r2: r2,
            side,
            n_points: pts.len(),
        })
    };
    Ok(RateFits { left: fit(FitSide::Left)?, right: fit(FitSide::Right)?, pooled: fit(FitSide::Pooled)? })
}

/// Extremes of `values / D^e` over a window of well-resolved nodes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandReport {
    pub reference_exponent: f64,
    pub window: (f64, f64),
    pub min_ratio: f64,
    pub max_ratio: f64,
    pub sign_flips: usize,
    pub n_points: usize,
}

impl BandReport {
    /// `max/min` of the ratios when they share a sign, `∞` otherwise.
    pub fn spread(&self) -> f64 {
        if self.min_ratio > 0.0 || self.max_ratio < 0.0 {
            self.max_ratio.abs().max(self.min_ratio.abs()) / self.max_ratio.abs().min(self.min_ratio.abs())
        } else {
            f64::INFINITY
        }
    }

    pub fn all_positive(&self) -> bool {
        self.min_ratio > 0.0
    }

    pub fn all_negative(&self) -> bool {
        self.max_ratio < 0.0
    }

    /// Largest `|ratio|`, the constant in `|values| ≤ C D^e`.
    pub fn bound(&self) -> f64 {
        self.min_ratio.abs().max(self.max_ratio.abs())
    }
}

/// Nodes with D in the window and `D ≥ 20 · local spacing`, ordered by D
/// on each side (left side first).
pub fn window_nodes(grid: &Grid, (lo, hi): (f64, f64)) -> Vec<usize> {
    let mut left: Vec<usize> = grid
        .well_resolved(RESOLUTION_FACTOR)
        .filter(|&i| !grid.is_right(i) && grid.dist_c(i) >= lo && grid.dist_c(i) <= hi)
        .collect();
    left.reverse();
    let right = grid
        .well_resolved(RESOLUTION_FACTOR)
        .filter(|&i| grid.is_right(i) && grid.dist_c(i) >= lo && grid.dist_c(i) <= hi);
    left.extend(right);
    left
}

pub fn check_band(grid: &Grid, values: &[f64], reference_exponent: f64, window: (f64, f64)) -> Result<BandReport> {
    if values.len() != grid.len() {
        return Err(Error::GridMismatch(format!("{} values for {} nodes", values.len(), grid.len())));
    }
    let nodes = window_nodes(grid, window);
    if nodes.len() < MIN_FIT_POINTS {
        return Err(Error::TooFewPoints { needed: MIN_FIT_POINTS, found: nodes.len() });
    }
    let ratios: Vec<f64> = nodes.iter().map(|&i| values[i] / grid.dist_c(i).powf(reference_exponent)).collect();
    let sign_flips = ratios.windows(2).filter(|w| (w[0] > 0.0) != (w[1] > 0.0)).count();
    Ok(BandReport {
        reference_exponent,
        window,
        min_ratio: ratios.iter().copied().fold(f64::INFINITY, f64::min),
        max_ratio: ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        sign_flips,
        n_points: nodes.len(),
    })
}

/// `(−Δ)^α V_τ` at the nodes, with the core exponent of the operator set
/// to τ.
pub fn apply_v_tau(alpha: Alpha, tau: Tau, grid: &Arc<Grid>) -> Result<Vec<f64>> {
    let spec = build_v_tau(tau, grid.delta())?;
    let v = sample_profile(&spec, grid, 1.0)?;
    let op = OperatorMatrix::assemble(alpha, grid.clone(), Extension::blowup(tau.value()))?;
    op.apply(&v)
}

/// The nonexistence constructions, selected by the position of τ.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Zone {
    /// α < α₀, τ ∈ (τ₁, 0): `t (V_τ + C V̄)` is a super-solution for all t.
    One,
    /// τ − 2α < τp: `t V_τ − μ V̄` is a sub-solution.
    Two,
    /// τ − 2α > τp: `t V_τ + μ V̄` is a super-solution.
    Three,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZoneEntry {
    pub t: f64,
    pub mu: f64,
    /// Smallest signed residual margin `±R_i + tol_i` over the nodes.
    pub min_margin: f64,
    pub nodes_checked: usize,
    pub passed: bool,
}

/// A supplementary inequality checked as a ratio band on a window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtraCheck {
    pub name: String,
    pub band: BandReport,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZoneAudit {
    pub zone: Zone,
    pub alpha: f64,
    pub p: f64,
    pub tau: f64,
    pub regime: RegimeKind,
    /// For Zone 1: the constant C of the lifted super-solution.
    pub lift: Option<f64>,
    pub entries: Vec<ZoneEntry>,
    pub extra: Vec<ExtraCheck>,
    /// `μ(t)/t` does not increase along the sampled t.
    pub mu_growth_linear: bool,
    pub passed: bool,
}

/// The pieces every residual evaluation needs: L applied separately to
/// `V_τ` (core exponent τ) and to `V̄` (plain operator), and the samples.
struct Ingredients {
    grid: Arc<Grid>,
    v: Vec<f64>,
    lv: Vec<f64>,
    tors: Vec<f64>,
    ltors: Vec<f64>,
}

impl Ingredients {
    fn build(alpha: Alpha, tau: f64, grid: &Arc<Grid>) -> Result<Self> {
        let spec = build_v_tau(Tau::new(tau)?, grid.delta())?;
        let v = sample_profile(&spec, grid, 1.0)?;
        let op = OperatorMatrix::assemble(alpha, grid.clone(), Extension::blowup(tau))?;
        let lv = op.apply(&v)?;
        let plain = OperatorMatrix::assemble(alpha, grid.clone(), Extension::natural(Exterior::Zero))?;
        let torsion: TorsionFunction = solve_torsion_with(&plain)?;
        let ltors = plain.apply(torsion.samples())?;
        Ok(Self { grid: grid.clone(), v: v.into_values(), lv, tors: torsion.values().to_vec(), ltors })
    }

    /// Smallest `sign · R_i + tol_i` for `w = t V_τ + m V̄`, where
    /// `R = L w + |w|^{p−1} w` and `tol_i = 1e−6 (|t L V_τ| + |m L V̄| + |w|^p)`.
    fn margin(&self, t: f64, m: f64, p: f64, sign: f64) -> f64 {
        (0..self.grid.len())
            .map(|i| {
                let w = t * self.v[i] + m * self.tors[i];
                let a = w.abs().powf(p);
                let r = t * self.lv[i] + m * self.ltors[i] + a * w.signum();
                let tol = AUDIT_REL_TOL * ((t * self.lv[i]).abs() + (m * self.ltors[i]).abs() + a);
                sign * r + tol
            })
            .fold(f64::INFINITY, f64::min)
    }
}

/// Smallest μ ≥ 0 (to relative 1e−9 by bisection after doubling) with
/// `ok(μ)`; `ok` is assumed monotone in μ.
fn smallest_mu(start: f64, mut ok: impl FnMut(f64) -> bool) -> Option<f64> {
    if ok(0.0) {
        return Some(0.0);
    }
    let mut hi = start;
    let mut steps = 0;
    while !ok(hi) {
        hi *= 2.0;
        steps += 1;
        if steps > SCALE_STEPS {
            return None;
        }
    }
    let mut lo = if steps == 0 { 0.0 } else { 0.5 * hi };
    for _ in 0..BISECTION_STEPS {
        let mid = 0.5 * (lo + hi);
        if ok(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Some(hi)
}

/// Picks the zone for a nonexistence triple.
pub fn zone_of(crit: &CriticalExponents, p: f64, tau: f64) -> Result<Zone> {
    let a = crit.alpha.value();
    if let Some(t1) = crit.tau1 {
        if tau > t1 {
            return Ok(Zone::One);
        }
    }
    let (lhs, rhs) = (tau - 2.0 * a, tau * p);
    if (lhs - rhs).abs() <= 1e-12 {
        return Err(Error::Regime(format!("tau = {tau} is the critical rate; no nonexistence zone applies")));
    }
    Ok(if lhs < rhs { Zone::Two } else { Zone::Three })
}

/// Certifies the residual signs of the zone construction for
/// `t ∈ {0.5, 1, 2, 4}`.
pub fn audit_nonexistence(alpha: Alpha, p: f64, tau: Tau, grid: &Arc<Grid>) -> Result<ZoneAudit> {
    let crit = CriticalExponents::compute(alpha, 1e-9)?;
    audit_nonexistence_with(&crit, p, tau, grid)
}

pub fn audit_nonexistence_with(crit: &CriticalExponents, p: f64, tau: Tau, grid: &Arc<Grid>) -> Result<ZoneAudit> {
    let alpha = crit.alpha;
    let regime = classify_with(crit, p, Some(tau))?;
    if !regime.kind.is_nonexistence() {
        return Err(Error::Regime(format!(
            "(alpha, p, tau) = ({}, {p}, {}) is {}, not a nonexistence case",
            alpha.value(),
            tau.value(),
            regime.kind
        )));
    }
    let t0 = tau.value();
    let zone = zone_of(crit, p, t0)?;
    let ing = Ingredients::build(alpha, t0, grid)?;
    let a = alpha.value();
    let core_window = (window_nodes(grid, (0.0, f64::INFINITY))
        .iter()
        .map(|&i| grid.dist_c(i))
        .fold(f64::INFINITY, f64::min), 0.25 * grid.delta());
    let mut extra = Vec::new();
    let mut lift = None;
    let mut entries = Vec::new();

    match zone {
        Zone::One => {
            // L(V_τ + C V̄) ≥ 0 everywhere; then t(V_τ + C V̄) is a super
            // solution for every t > 0.
            let c = smallest_mu(1.0, |c| {
                (0..grid.len()).all(|i| {
                    let l = ing.lv[i] + c * ing.ltors[i];
                    l + AUDIT_REL_TOL * (ing.lv[i].abs() + (c * ing.ltors[i]).abs()) >= 0.0
                })
            })
            .ok_or_else(|| Error::AuditFail("no torsion lift makes V_tau + C V-bar super-harmonic".into()))?;
            lift = Some(c);
            for &t in &ZONE_T {
                let margin = ing.margin(t, t * c, p, 1.0);
                entries.push(ZoneEntry { t, mu: t * c, min_margin: margin, nodes_checked: grid.len(), passed: margin >= 0.0 });
            }
            let band = check_band(grid, &ing.lv, t0 - 2.0 * a, core_window)?;
            extra.push(ExtraCheck { name: "L V_tau >= D^(tau-2a)/C near the core".into(), band, passed: band.all_positive() });
        }
        Zone::Two | Zone::Three => {
            let sign = if zone == Zone::Two { -1.0 } else { 1.0 };
            for &t in &ZONE_T {
                let mu = smallest_mu(t, |mu| ing.margin(t, sign * mu, p, sign) >= 0.0).ok_or_else(|| {
                    Error::AuditFail(format!("no mu within {SCALE_STEPS} doublings certifies zone {zone:?} at t = {t}"))
                })?;
                let margin = ing.margin(t, sign * mu, p, sign);
                entries.push(ZoneEntry { t, mu, min_margin: margin, nodes_checked: grid.len(), passed: margin >= 0.0 });
            }
            // Additional condition when τp > τ − 2α: the sub-solution must
            // satisfy L W ≤ −C D^{τ−2α} near the core.
            if zone == Zone::Two {
                let t = 1.0;
                let mu = entries.iter().find(|e| e.t == t).map_or(0.0, |e| e.mu);
                let lw: Vec<f64> = (0..grid.len()).map(|i| -(t * ing.lv[i] - mu * ing.ltors[i])).collect();
                let band = check_band(grid, &lw, t0 - 2.0 * a, core_window)?;
                extra.push(ExtraCheck { name: "-L W <= -C D^(tau-2a) near the core".into(), band, passed: band.all_positive() });
            }
        }
    }
    let ratios: Vec<f64> = entries.iter().map(|e| e.mu / e.t).collect();
    let mu_growth_linear = ratios.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-6) + 1e-12);
    let passed = entries.iter().all(|e| e.passed) && extra.iter().all(|e| e.passed);
    Ok(ZoneAudit {
        zone,
        alpha: a,
        p,
        tau: t0,
        regime: regime.kind,
        lift,
        entries,
        extra,
        mu_growth_linear,
        passed,
    })
}

/// Residual-sign check of the one-parameter family with rate τ₁:
/// `U = t V_{τ₁} + λ V̄` super and `W = t V_{τ₁} − μ V_{τ̄} − λ' V̄` sub,
/// with `τ̄ = min(τ₁ p + 2α, τ₁/2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpecialAudit {
    pub alpha: f64,
    pub p: f64,
    pub tau1: f64,
    pub tau_bar: f64,
    pub t: f64,
    pub mu: f64,
    pub super_lift: f64,
    pub sub_lift: f64,
    pub super_margin: f64,
    pub sub_margin: f64,
    pub ordered: bool,
    pub passed: bool,
}

pub fn audit_special_family(crit: &CriticalExponents, p: f64, t: f64, grid: &Arc<Grid>) -> Result<SpecialAudit> {
    let alpha = crit.alpha;
    let a = alpha.value();
    let regime = classify_with(crit, p, None)?;
    let tau1 = regime
        .special_family_rate
        .ok_or_else(|| Error::Regime(format!("(alpha, p) = ({a}, {p}) has no special family")))?;
    let tau_bar = (tau1 * p + 2.0 * a).min(0.5 * tau1);
    let main = Ingredients::build(alpha, tau1, grid)?;
    let corr = Ingredients::build(alpha, tau_bar, grid)?;
    let n = grid.len();
    let eval = |mu: f64, lift: f64, sign: f64| -> f64 {
        (0..n)
            .map(|i| {
                let w = t * main.v[i] - mu * corr.v[i] + lift * main.tors[i];
                let a = w.abs().powf(p);
                let lw = t * main.lv[i] - mu * corr.lv[i] + lift * main.ltors[i];
                let tol =
                    AUDIT_REL_TOL * ((t * main.lv[i]).abs() + (mu * corr.lv[i]).abs() + (lift * main.ltors[i]).abs() + a);
                sign * (lw + a * w.signum()) + tol
            })
            .fold(f64::INFINITY, f64::min)
    };
    let super_lift = smallest_mu(t, |l| eval(0.0, l, 1.0) >= 0.0)
        .ok_or_else(|| Error::AuditFail("no lift makes t V_tau1 a super-solution".into()))?;
    let mu = 1.0f64.max(t);
    let sub_lift = smallest_mu(t, |l| eval(mu, -l, -1.0) >= 0.0)
        .ok_or_else(|| Error::AuditFail("no lift makes t V_tau1 - mu V_taubar a sub-solution".into()))?;
    let super_margin = eval(0.0, super_lift, 1.0);
    let sub_margin = eval(mu, -sub_lift, -1.0);
    let ordered = (0..n).all(|i| {
        t * main.v[i] + super_lift * main.tors[i] >= t * main.v[i] - mu * corr.v[i] - sub_lift * main.tors[i]
    });
    Ok(SpecialAudit {
        alpha: a,
        p,
        tau1,
        tau_bar,
        t,
        mu,
        super_lift,
        sub_lift,
        super_margin,
        sub_margin,
        ordered,
        passed: ordered && super_margin >= 0.0 && sub_margin >= 0.0,
    })
}
