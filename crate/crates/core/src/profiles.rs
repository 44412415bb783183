//! Comparison profiles: the power profile `V_τ`, the torsion function `V̄`
//! and their affine combinations.
//!
//! `V_τ` equals `D^τ` on `A_δ = {D < δ}`, `d²` on `B_δ = {d < δ}`, and a
//! quintic in D on the band between, matched to second order at both
//! junctions so the profile is C².

use std::sync::Arc;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::{Exterior, Grid, GridFunction};
use crate::operator::{Extension, OperatorMatrix};
use crate::specfun::{Alpha, Tau};

/// Number of times δ may be halved when the quintic dips below zero.
pub const MAX_DELTA_HALVINGS: usize = 3;
const POSITIVITY_SAMPLES: usize = 4096;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileSpec {
    tau: Tau,
    delta: f64,
    /// Monomial coefficients in `s = (D − δ)/(1 − 2δ)` for the left and
    /// right sides. The geometry is symmetric, so the two rows agree.
    interpolant_coeffs: [[f64; 6]; 2],
}

/// Quintic `Σ c_k s^k` on [0, 1] with prescribed value, slope and
/// curvature at both ends.
fn quintic_hermite(left: [f64; 3], right: [f64; 3]) -> [f64; 6] {
    let (c0, c1, c2) = (left[0], left[1], 0.5 * left[2]);
    let a = right[0] - (c0 + c1 + c2);
    let b = right[1] - (c1 + 2.0 * c2);
    let c = right[2] - 2.0 * c2;
    [c0, c1, c2, 10.0 * a - 4.0 * b + 0.5 * c, -15.0 * a + 7.0 * b - c, 6.0 * a - 3.0 * b + 0.5 * c]
}

fn horner(c: &[f64; 6], s: f64) -> (f64, f64, f64) {
    let mut v = 0.0;
    let mut d1 = 0.0;
    let mut d2 = 0.0;
    for &ck in c.iter().rev() {
        d2 = d2 * s + 2.0 * d1;
        d1 = d1 * s + v;
        v = v * s + ck;
    }
    (v, d1, d2)
}

fn coefficients(tau: f64, delta: f64) -> [f64; 6] {
    let len = 1.0 - 2.0 * delta;
    let left = [
        delta.powf(tau),
        len * tau * delta.powf(tau - 1.0),
        len * len * tau * (tau - 1.0) * delta.powf(tau - 2.0),
    ];
    // d² with d = 1 − D.
    let right = [delta * delta, -2.0 * delta * len, 2.0 * len * len];
    quintic_hermite(left, right)
}

/// Builds `V_τ`. If the quintic filler is not positive, δ is halved up to
/// [`MAX_DELTA_HALVINGS`] times before giving up.
pub fn build_v_tau(tau: Tau, delta: f64) -> Result<ProfileSpec> {
    if !(delta > 0.0 && delta <= 0.25) {
        return Err(Error::BadConfig(format!("delta = {delta} is not in (0, 1/4]")));
    }
    let mut d = delta;
    for _ in 0..=MAX_DELTA_HALVINGS {
        let c = coefficients(tau.value(), d);
        let positive = (0..=POSITIVITY_SAMPLES)
            .all(|k| horner(&c, k as f64 / POSITIVITY_SAMPLES as f64).0 > 0.0);
        if positive {
            return Ok(ProfileSpec { tau, delta: d, interpolant_coeffs: [c, c] });
        }
        d *= 0.5;
    }
    Err(Error::BadConfig(format!(
        "no positive C² filler for tau = {} down to delta = {}",
        tau.value(),
        2.0 * d
    )))
}

impl ProfileSpec {
    pub fn tau(&self) -> Tau {
        self.tau
    }

    /// The δ actually used, which may be smaller than the one requested.
    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn interpolant_coeffs(&self) -> &[[f64; 6]; 2] {
        &self.interpolant_coeffs
    }

    /// `V_τ(x)`: zero outside Ω, `+∞` at 0 when τ < 0.
    pub fn eval(&self, x: f64) -> f64 {
        self.eval_with_derivatives(x).0
    }

    /// Value, first and second derivative in x. Outside Ω all three vanish.
    pub fn eval_with_derivatives(&self, x: f64) -> (f64, f64, f64) {
        if !(x > -1.0 && x < 1.0) {
            return (0.0, 0.0, 0.0);
        }
        let tau = self.tau.value();
        let dist = x.abs();
        let sign = if x < 0.0 { -1.0 } else { 1.0 };
        let dd = 1.0 - dist;
        let (v, d1, d2) = if dist < self.delta {
            if dist == 0.0 {
                return if tau == 0.0 { (1.0, 0.0, 0.0) } else { (f64::INFINITY, f64::NAN, f64::NAN) };
            }
            let v = dist.powf(tau);
            (v, tau * v / dist, tau * (tau - 1.0) * v / (dist * dist))
        } else if dd < self.delta {
            (dd * dd, -2.0 * dd, 2.0)
        } else {
            let len = 1.0 - 2.0 * self.delta;
            let side = usize::from(x > 0.0);
            let (v, s1, s2) = horner(&self.interpolant_coeffs[side], (dist - self.delta) / len);
            (v, s1 / len, s2 / (len * len))
        };
        (v, sign * d1, d2)
    }
}

/// Solution of `(−Δ)^α V̄ = 1` with zero exterior data.
#[derive(Debug, Clone)]
pub struct TorsionFunction {
    samples: GridFunction,
}

impl TorsionFunction {
    pub fn samples(&self) -> &GridFunction {
        &self.samples
    }

    pub fn values(&self) -> &[f64] {
        self.samples.values()
    }
}

pub fn solve_torsion(alpha: Alpha, grid: Arc<Grid>) -> Result<TorsionFunction> {
    let op = OperatorMatrix::assemble(alpha, grid, Extension::natural(Exterior::Zero))?;
    solve_torsion_with(&op)
}

/// Torsion solve against an already assembled operator, which must carry
/// zero exterior data and no core power.
pub fn solve_torsion_with(op: &OperatorMatrix) -> Result<TorsionFunction> {
    let ext = op.extension();
    if ext.exterior != Exterior::Zero || ext.core_exponent != 0.0 {
        return Err(Error::GridMismatch(format!("torsion needs a plain zero-exterior operator, got {ext:?}")));
    }
    let n = op.grid().len();
    let rhs = DVector::from_element(n, 1.0) + op.exterior_correction();
    let sol = op
        .matrix()
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::SingularSystem("torsion matrix has no LU solution".into()))?;
    let max = sol.amax();
    if let Some(i) = sol.iter().position(|v| !v.is_finite() || *v < -1e-10 * max) {
        return Err(Error::SingularSystem(format!("torsion value {} at node {i} breaks positivity", sol[i])));
    }
    let values = sol.iter().map(|v| v.max(0.0)).collect();
    Ok(TorsionFunction { samples: GridFunction::new(op.grid().clone(), values, Exterior::Zero)? })
}

/// `scale · V_τ` at the grid nodes, with zero exterior.
pub fn sample_profile(spec: &ProfileSpec, grid: &Arc<Grid>, scale: f64) -> Result<GridFunction> {
    GridFunction::from_fn(grid.clone(), Exterior::Zero, |x| scale * spec.eval(x))
}

/// `a·u + b·v` node by node.
pub fn combine(a: f64, u: &GridFunction, b: f64, v: &GridFunction) -> Result<GridFunction> {
    if !u.same_grid(v.grid()) {
        return Err(Error::GridMismatch("combine: operands live on different grids".into()));
    }
    let exterior = match (u.exterior(), v.exterior()) {
        (Exterior::Zero, Exterior::Zero) => Exterior::Zero,
        (Exterior::Constant(k), Exterior::Zero) => Exterior::Constant(a * k),
        (Exterior::Zero, Exterior::Constant(k)) => Exterior::Constant(b * k),
        (Exterior::Constant(k), Exterior::Constant(l)) => Exterior::Constant(a * k + b * l),
        (eu, ev) => {
            return Err(Error::GridMismatch(format!("combine: exteriors {eu:?} and {ev:?} do not combine")))
        }
    };
    let values = u.values().iter().zip(v.values()).map(|(x, y)| a * x + b * y).collect();
    GridFunction::new(u.grid().clone(), values, exterior)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::DEFAULT_DELTA;

    fn tau(v: f64) -> Tau {
        Tau::new(v).unwrap()
    }

    #[test]
    fn branches_are_exact() {
        let spec = build_v_tau(tau(-0.4), 0.2).unwrap();
        assert_eq!(spec.eval(0.1), 0.1f64.powf(-0.4));
        assert_eq!(spec.eval(-0.1), 0.1f64.powf(-0.4));
        assert!((spec.eval(0.9) - 0.01).abs() < 1e-15);
        assert_eq!(spec.eval(1.0), 0.0);
        assert_eq!(spec.eval(-3.0), 0.0);
        assert!(spec.eval(0.0).is_infinite());
    }

    #[test]
    fn junctions_are_c2() {
        for t in [-0.9, -0.5, -0.1, 0.0] {
            let spec = build_v_tau(tau(t), DEFAULT_DELTA).unwrap();
            let d = spec.delta();
            for x in [d, 1.0 - d] {
                let below = spec.eval_with_derivatives(x - 1e-12);
                let above = spec.eval_with_derivatives(x + 1e-12);
                let close = |a: f64, b: f64| (a - b).abs() <= 1e-8 * a.abs().max(1.0);
                assert!(close(below.0, above.0) && close(below.1, above.1) && close(below.2, above.2), "{t} {x}");
            }
        }
    }

    #[test]
    fn filler_is_positive() {
        for t in [-0.99, -0.7, -0.3, 0.0] {
            let spec = build_v_tau(tau(t), DEFAULT_DELTA).unwrap();
            assert!((0..1000).all(|k| spec.eval(-0.999 + 1.998 * k as f64 / 999.0) > 0.0));
        }
    }

    #[test]
    fn rejects_bad_delta() {
        assert!(build_v_tau(tau(-0.5), 0.3).is_err());
        assert!(build_v_tau(tau(-0.5), 0.0).is_err());
    }

    #[test]
    fn scaling_and_combination() {
        let grid = Arc::new(Grid::build_graded(16, 2.0, DEFAULT_DELTA).unwrap());
        let spec = build_v_tau(tau(-0.5), DEFAULT_DELTA).unwrap();
        let one = sample_profile(&spec, &grid, 1.0).unwrap();
        let two = sample_profile(&spec, &grid, 2.0).unwrap();
        let zero = sample_profile(&spec, &grid, 0.0).unwrap();
        assert!(zero.values().iter().all(|&v| v == 0.0));
        assert!(one.values().iter().zip(two.values()).all(|(a, b)| 2.0 * a == *b));
        let same = combine(1.0, &one, 0.0, &two).unwrap();
        assert_eq!(same.values(), one.values());
        let other = Arc::new(Grid::build_graded(17, 2.0, DEFAULT_DELTA).unwrap());
        let elsewhere = sample_profile(&spec, &other, 1.0).unwrap();
        assert!(matches!(combine(1.0, &one, 1.0, &elsewhere), Err(Error::GridMismatch(_))));
    }

    #[test]
    fn torsion_is_symmetric_and_positive() {
        let grid = Arc::new(Grid::build_graded(48, 2.0, DEFAULT_DELTA).unwrap());
        let t = solve_torsion(Alpha::new(0.5).unwrap(), grid.clone()).unwrap();
        for i in 0..grid.len() {
            assert!(t.values()[i] > 0.0);
            assert!((t.values()[i] - t.values()[grid.mirror(i)]).abs() < 1e-10);
        }
    }
}
