//! The special functions c(τ), C(τ), T(α), c″(τ), their roots and the
//! parameter-regime classifier.
//!
//! ```text
//! c(τ)  = ∫₀^∞ (|1−t|^τ + (1+t)^τ − 2) t^{−1−2α} dt
//! C(τ)  = ∫₀^∞ (χ_{(0,1)}(t)|1−t|^τ + (1+t)^τ − 2) t^{−1−2α} dt
//! T(α)  = ∫₀^∞ log|1−t²| t^{−1−2α} dt            (= c′(0))
//! c″(τ) = ∫₀^∞ (|1−t|^τ log²|1−t| + (1+t)^τ log²(1+t)) t^{−1−2α} dt
//! ```
//!
//! α₀ is the zero of T; for α < α₀ the function c has a single zero τ₁(α)
//! in (−1, 0), and τ₀(α) is the zero of C.

pub mod integrands;
mod regime;
pub mod roots;

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad::{integrate_range, integrate_singular, QuadOptions, QuadResult};

pub use integrands::{ConvexityKernel, LogKernel, PowerKernel, ShiftedPower};
pub use regime::{classify, classify_with, Regime, RegimeKind, EQUALITY_TOL};

/// Relative tolerance used for every special-function integral.
pub const SPECFUN_REL_TOL: f64 = 1e-12;
/// Distance below which α is treated as equal to α₀. Both sides of α₀
/// give τ₁ → 0, so at this distance a root in (−1, 0) is not resolvable.
pub const ALPHA0_SNAP: f64 = 1e-8;
const ROOT_MIN_GAP: f64 = 1e-6;
const ALPHA0_BRACKET: (f64, f64) = (0.01, 0.99);
const TAU_BRACKET: (f64, f64) = (-0.999, -1e-4);

#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Alpha(f64);

impl Alpha {
    pub fn new(value: f64) -> Result<Self> {
        if value > 0.0 && value < 1.0 {
            Ok(Self(value))
        } else {
            Err(Error::BadConfig(format!("alpha = {value} is not in (0, 1)")))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Tau(f64);

impl Tau {
    pub fn new(value: f64) -> Result<Self> {
        if value > -1.0 && value <= 0.0 {
            Ok(Self(value))
        } else {
            Err(Error::BadConfig(format!("tau = {value} is not in (-1, 0]")))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

fn opts() -> QuadOptions {
    QuadOptions::new(SPECFUN_REL_TOL)
}

/// c(τ) with its quadrature diagnostics.
pub fn c_tau_quad(alpha: Alpha, tau: Tau) -> Result<QuadResult> {
    if tau.value() == 0.0 {
        return Ok(QuadResult { value: 0.0, abs_err_est: 0.0, n_subdivisions: 0 });
    }
    let f = PowerKernel { alpha: alpha.value(), tau: tau.value(), truncated: false };
    integrate_singular(&f, SPECFUN_REL_TOL)
}

pub fn c_tau(alpha: Alpha, tau: Tau) -> Result<f64> {
    c_tau_quad(alpha, tau).map(|r| r.value)
}

#[allow(non_snake_case)]
pub fn C_tau(alpha: Alpha, tau: Tau) -> Result<f64> {
    let f = PowerKernel { alpha: alpha.value(), tau: tau.value(), truncated: true };
    integrate_singular(&f, SPECFUN_REL_TOL).map(|r| r.value)
}

#[allow(non_snake_case)]
pub fn T_alpha(alpha: Alpha) -> Result<f64> {
    integrate_singular(&LogKernel { alpha: alpha.value() }, SPECFUN_REL_TOL).map(|r| r.value)
}

pub fn c_second_derivative(alpha: Alpha, tau: Tau) -> Result<f64> {
    if tau.value() == 0.0 {
        return Err(Error::BadConfig("c'' is evaluated for tau in (-1, 0)".into()));
    }
    let f = ConvexityKernel { alpha: alpha.value(), tau: tau.value() };
    integrate_singular(&f, SPECFUN_REL_TOL).map(|r| r.value)
}

/// `∫₁^∞ (t − 1)^τ t^(−1−2α) dt`, which equals c(τ) − C(τ).
pub fn shifted_power_integral(alpha: Alpha, tau: Tau) -> Result<f64> {
    let f = ShiftedPower { alpha: alpha.value(), tau: tau.value() };
    integrate_range(&f, 1.0, f64::INFINITY, &opts()).map(|r| r.value)
}

fn check_root_tol(tol: f64, range: (f64, f64)) -> Result<()> {
    if tol > range.0 && tol < range.1 {
        Ok(())
    } else {
        Err(Error::BadConfig(format!("root tolerance {tol} not in ({}, {})", range.0, range.1)))
    }
}

/// The unique zero α₀ of T on (0, 1).
pub fn find_alpha0(tol: f64) -> Result<f64> {
    check_root_tol(tol, (1e-12, 1e-4))?;
    alpha0_with(tol)
}

fn alpha0_with(tol: f64) -> Result<f64> {
    let t = |a: f64| T_alpha(Alpha::new(a)?);
    let bracket = roots::grow_bracket("alpha0", t, (0.0, 1.0), ALPHA0_BRACKET, ROOT_MIN_GAP)?;
    roots::brent("alpha0", t, bracket.0, bracket.1, tol)
}

/// α₀ to full working accuracy, computed once per process.
pub fn alpha0() -> Result<f64> {
    static CACHE: OnceLock<Result<f64>> = OnceLock::new();
    CACHE.get_or_init(|| alpha0_with(1e-13)).clone()
}

/// Whether α lies in the regime where c has a zero in (−1, 0).
pub fn has_tau1(alpha: Alpha, alpha0: f64) -> bool {
    alpha.value() < alpha0 - ALPHA0_SNAP
}

/// Zero τ₁(α) of c in (−1, 0); only exists for α < α₀.
pub fn find_tau1(alpha: Alpha, tol: f64) -> Result<f64> {
    check_root_tol(tol, (1e-14, 1e-3))?;
    let a0 = alpha0()?;
    if !has_tau1(alpha, a0) {
        return Err(Error::Regime(format!(
            "alpha = {} is not below alpha0 = {a0:.10}: c has no zero in (-1, 0)",
            alpha.value()
        )));
    }
    let c = |t: f64| c_tau(alpha, Tau::new(t)?);
    let (lo, hi) = roots::grow_bracket("tau1", c, (-1.0, 0.0), TAU_BRACKET, ROOT_MIN_GAP)?;
    roots::brent("tau1", c, lo, hi, tol)
}

/// Zero τ₀(α) of C in (−1, 0).
pub fn find_tau0(alpha: Alpha, tol: f64) -> Result<f64> {
    check_root_tol(tol, (1e-14, 1e-3))?;
    #[allow(non_snake_case)]
    let C = |t: f64| C_tau(alpha, Tau::new(t)?);
    let (lo, hi) = roots::grow_bracket("tau0", C, (-1.0, 0.0), TAU_BRACKET, ROOT_MIN_GAP)?;
    roots::brent("tau0", C, lo, hi, tol)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalExponents {
    pub alpha: Alpha,
    pub alpha0: f64,
    pub tau1: Option<f64>,
    pub tau0: f64,
}

impl CriticalExponents {
    pub fn compute(alpha: Alpha, tol: f64) -> Result<Self> {
        let alpha0 = alpha0()?;
        let tau1 = if has_tau1(alpha, alpha0) { Some(find_tau1(alpha, tol)?) } else { None };
        let tau0 = find_tau0(alpha, tol)?;
        Ok(Self { alpha, alpha0, tau1, tau0 })
    }
}
