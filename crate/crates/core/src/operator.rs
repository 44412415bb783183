//! Discrete 1-D fractional Laplacian
//!
//! ```text
//! (−Δ)^α u(x) = P.V. ∫ (u(x) − u(y)) |x − y|^{−1−2α} dy
//! ```
//!
//! on a [`Grid`]. Every row is assembled in difference form
//!
//! ```text
//! L u_i = Σ_j w_ij (u_i − u_j) + e_i u_i − b_i,     w_ij ≥ 0,
//! ```
//!
//! from four pieces:
//!
//! * the self panel `|y − x_i| < h`, where u is replaced by its quadratic
//!   through the two neighbours, so the principal value reduces to a
//!   second difference;
//! * the rest of Ω, where u is the continuous piecewise-linear interpolant
//!   on each side of 0 (never across 0) and the hat-function moments of the
//!   kernel are integrated exactly;
//!
//!   with a core exponent κ ≠ 0 both models act on `u |y|^{−κ}` instead, so
//!   `|y|^κ` itself is reproduced exactly on every element;
//! * the gap between 0 and the innermost node on each side, where u is
//!   continued as `u_c (|y|/|x_c|)^κ` with the extension's core exponent κ;
//! * the exterior `|y| > 1`, integrated in closed form for constant data
//!   and by quadrature for power-type data.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::mesh::{Exterior, Grid, GridFunction};
use crate::quad::{integrate_range, kronrod15, FnIntegrand, Orders, QuadOptions};
use crate::specfun::Alpha;

const CORE_REL_TOL: f64 = 1e-11;

/// The continuation of a grid function outside its nodes: the exterior data
/// on |y| ≥ 1 and the power κ used between 0 and the innermost nodes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Extension {
    pub exterior: Exterior,
    pub core_exponent: f64,
}

impl Extension {
    /// Extension with the core exponent matching the exterior: κ = τ for
    /// power data and κ = 0 otherwise.
    pub fn natural(exterior: Exterior) -> Self {
        let core_exponent = match exterior {
            Exterior::PowerTail(tau) => tau,
            _ => 0.0,
        };
        Self { exterior, core_exponent }
    }

    /// Zero exterior data with the core behaving like `D^τ`.
    pub fn blowup(tau: f64) -> Self {
        Self { exterior: Exterior::Zero, core_exponent: tau }
    }
}

#[derive(Debug, Clone)]
pub struct OperatorMatrix {
    alpha: Alpha,
    grid: Arc<Grid>,
    extension: Extension,
    /// Off-diagonal `w_ij ≥ 0`; the diagonal is zero.
    weights: DMatrix<f64>,
    /// Weight of the boundary point ±1, which carries the exterior value.
    boundary_weights: DVector<f64>,
    boundary_value: f64,
    /// Kernel mass of the exterior `|y| > 1`.
    exterior_mass: DVector<f64>,
    /// Diagonal parts of the self-panel and core models (zero when κ = 0).
    model_diagonal: DVector<f64>,
    /// Value ϱ the exterior data is measured against (its value at ±1).
    exterior_reference: f64,
    /// `∫_{|y|>1} (u(y) − ϱ) K(x_i − y) dy`.
    exterior_data: DVector<f64>,
}

/// The pieces are kept apart so that `L` applied to the constant matching
/// a constant exterior cancels term by term.
struct Row {
    weights: Vec<f64>,
    boundary: f64,
    mass: f64,
    model: f64,
    data: f64,
}

/// `(e^z − 1)/z`, continuous at 0.
fn exprel(z: f64) -> f64 {
    if z.abs() < 1e-10 {
        1.0 + 0.5 * z
    } else {
        z.exp_m1() / z
    }
}

/// `∫_{r0}^{r1} r^{−1−2α} dr` and `∫_{r0}^{r1} r^{−2α} dr` for `0 < r0 < r1`.
fn power_moments(alpha: f64, r0: f64, r1: f64) -> (f64, f64) {
    let l = (r1 / r0).ln();
    let a2 = 2.0 * alpha;
    let m0 = -r0.powf(-a2) * (-a2 * l).exp_m1() / a2;
    let e = 1.0 - a2;
    let m1 = r0.powf(e) * l * exprel(e * l);
    (m0, m1)
}

/// Kernel moments of the two hat functions of the element `[a, b]`,
/// restricted to `[c, d] ⊆ [a, b]`, seen from a point x outside `(c, d)`.
fn hat_moments(alpha: f64, x: f64, (a, b): (f64, f64), (c, d): (f64, f64)) -> (f64, f64) {
    if d <= c {
        return (0.0, 0.0);
    }
    let w = b - a;
    let right = c >= x;
    let (r0, r1) = if right { (c - x, d - x) } else { (x - d, x - c) };
    if r1 - r0 <= r0 {
        let k = |y: f64| (x - y).abs().powf(-1.0 - 2.0 * alpha);
        let wa = kronrod15(|y| (b - y) / w * k(y), c, d);
        let wb = kronrod15(|y| (y - a) / w * k(y), c, d);
        return (wa, wb);
    }
    let (m0, m1) = power_moments(alpha, r0, r1);
    if right {
        (((b - x) * m0 - m1) / w, (m1 - (a - x) * m0) / w)
    } else {
        ((m1 - (x - b) * m0) / w, ((x - a) * m0 - m1) / w)
    }
}

/// `∫_c^d |x − y|^{−1−2α} dy` for x outside `(c, d)`.
fn kernel_mass(alpha: f64, x: f64, c: f64, d: f64) -> f64 {
    let (r0, r1) = if c >= x { (c - x, d - x) } else { (x - d, x - c) };
    power_moments(alpha, r0, r1).0
}

/// Kernel moments of `(b − y)/(b − a) (|y|/|a|)^κ` and
/// `(y − a)/(b − a) (|y|/|b|)^κ` over `[c, d] ⊆ [a, b]`, where `[a, b]`
/// lies on one side of 0. Panels are split geometrically toward x and 0 so
/// each Kronrod panel is at most twice as long as its distance to either
/// point.
fn weighted_hat_moments(
    alpha: f64,
    x: f64,
    kappa: f64,
    (a, b): (f64, f64),
    (c, d): (f64, f64),
) -> (f64, f64) {
    let w = b - a;
    let (sa, sb) = (a.abs().powf(-kappa), b.abs().powf(-kappa));
    let e = -1.0 - 2.0 * alpha;
    // Panels are integrated in r = |y − x| so the kernel keeps full relative
    // precision next to x, also where x is within rounding of ±1.
    let panel = |lo: f64, hi: f64| {
        let (sign, rl, rh) = if lo >= x { (1.0, lo - x, hi - x) } else { (-1.0, x - hi, x - lo) };
        let (bx, ax) = (b - x, a - x);
        let wa = kronrod15(|r| (bx - sign * r) / w * sa * (x + sign * r).abs().powf(kappa) * r.powf(e), rl, rh);
        let wb = kronrod15(|r| (sign * r - ax) / w * sb * (x + sign * r).abs().powf(kappa) * r.powf(e), rl, rh);
        (wa, wb)
    };
    let dist = |p: f64, lo: f64, hi: f64| if p <= lo { lo - p } else if p >= hi { p - hi } else { 0.0 };
    let (mut wa, mut wb) = (0.0, 0.0);
    let mut stack = vec![(c, d)];
    while let Some((lo, hi)) = stack.pop() {
        let (dx, d0) = (dist(x, lo, hi), dist(0.0, lo, hi));
        let (m, toward) = if dx <= d0 { (dx, x) } else { (d0, 0.0) };
        if hi - lo <= 2.0 * m || m <= 0.0 {
            let (pa, pb) = panel(lo, hi);
            wa += pa;
            wb += pb;
        } else if toward <= lo {
            stack.push((lo, lo + m));
            stack.push((lo + m, hi));
        } else {
            stack.push((hi - m, hi));
            stack.push((lo, hi - m));
        }
    }
    (wa, wb)
}

/// A reference to an interpolation point: a node or the boundary point.
#[derive(Clone, Copy)]
enum Point {
    Node(usize),
    Boundary,
}

impl OperatorMatrix {
    pub fn assemble(alpha: Alpha, grid: Arc<Grid>, extension: Extension) -> Result<Self> {
        if !extension.core_exponent.is_finite() || extension.core_exponent <= -1.0 {
            return Err(Error::BadConfig(format!(
                "core exponent {} must lie above -1",
                extension.core_exponent
            )));
        }
        if let Exterior::PowerTail(t) = extension.exterior {
            if !(t > -1.0 && t <= 0.0) {
                return Err(Error::BadConfig(format!("power tail exponent {t} not in (-1, 0]")));
            }
        }
        let n = grid.len();
        let rows: Vec<Row> = (0..n)
            .into_par_iter()
            .map(|i| assemble_row(alpha.value(), &grid, extension, i))
            .collect::<Result<_>>()?;
        let mut weights = DMatrix::zeros(n, n);
        let mut boundary_weights = DVector::zeros(n);
        let mut exterior_mass = DVector::zeros(n);
        let mut model_diagonal = DVector::zeros(n);
        let mut exterior_data = DVector::zeros(n);
        for (i, row) in rows.into_iter().enumerate() {
            for (j, w) in row.weights.into_iter().enumerate() {
                weights[(i, j)] = w;
            }
            boundary_weights[i] = row.boundary;
            exterior_mass[i] = row.mass;
            model_diagonal[i] = row.model;
            exterior_data[i] = row.data;
        }
        Ok(Self {
            alpha,
            grid,
            extension,
            weights,
            boundary_weights,
            boundary_value: extension.exterior.value_at(1.0),
            exterior_reference: extension.exterior.value_at(1.0),
            exterior_mass,
            model_diagonal,
            exterior_data,
        })
    }

    pub fn alpha(&self) -> Alpha {
        self.alpha
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn extension(&self) -> Extension {
        self.extension
    }

    /// Interior weights `w_ij` (zero diagonal).
    pub fn interior_weights(&self) -> &DMatrix<f64> {
        &self.weights
    }

    /// Per-node diagonal term `e_i`.
    pub fn diagonal_correction(&self) -> DVector<f64> {
        &self.boundary_weights + &self.exterior_mass + &self.model_diagonal
    }

    /// Per-node exterior data term `b_i`.
    pub fn exterior_correction(&self) -> DVector<f64> {
        &self.boundary_weights * self.boundary_value
            + &self.exterior_mass * self.exterior_reference
            + &self.exterior_data
    }

    /// The matrix A with `L u = A u − b`.
    pub fn matrix(&self) -> DMatrix<f64> {
        let mut a = -self.weights.clone();
        let e = self.diagonal_correction();
        for i in 0..a.nrows() {
            a[(i, i)] = self.weights.row(i).sum() + e[i];
        }
        a
    }

    /// `L u` for raw node values carrying the operator's own extension.
    pub fn apply_values(&self, u: &[f64]) -> Vec<f64> {
        let n = u.len();
        (0..n)
            .map(|i| {
                let ui = u[i];
                let mut acc = 0.0;
                for (j, &uj) in u.iter().enumerate() {
                    acc += self.weights[(i, j)] * (ui - uj);
                }
                acc + self.boundary_weights[i] * (ui - self.boundary_value)
                    + self.exterior_mass[i] * (ui - self.exterior_reference)
                    - self.exterior_data[i]
                    + self.model_diagonal[i] * ui
            })
            .collect()
    }

    pub fn apply(&self, u: &GridFunction) -> Result<Vec<f64>> {
        if !u.same_grid(&self.grid) {
            return Err(Error::GridMismatch("grid function lives on another grid".into()));
        }
        if u.exterior() != self.extension.exterior {
            return Err(Error::GridMismatch(format!(
                "grid function exterior {:?} differs from operator extension {:?}",
                u.exterior(),
                self.extension.exterior
            )));
        }
        Ok(self.apply_values(u.values()))
    }
}

fn assemble_row(alpha: f64, grid: &Grid, ext: Extension, i: usize) -> Result<Row> {
    let n = grid.n_per_side();
    let len = grid.len();
    let x = grid.x(i);
    let kappa = ext.core_exponent;
    let mut row = Row { weights: vec![0.0; len], boundary: 0.0, mass: 0.0, model: 0.0, data: 0.0 };

    let add = |row: &mut Row, p: Point, w: f64| match p {
        Point::Node(j) if j == i => {}
        Point::Node(j) => row.weights[j] += w,
        Point::Boundary => row.boundary += w,
    };

    // Interpolation points on each side, in increasing order of |y|.
    let side_points = |right: bool| -> Vec<(f64, Point)> {
        let mut pts: Vec<(f64, Point)> = (0..n)
            .map(|k| {
                let j = if right { n + k } else { n - 1 - k };
                (grid.x(j), Point::Node(j))
            })
            .collect();
        pts.push((if right { 1.0 } else { -1.0 }, Point::Boundary));
        pts
    };

    // Self panel. With κ ≠ 0 the quadratic model is applied to
    // v = u |y|^{−κ}, so that u'' is exact for |y|^κ.
    let own_right = grid.is_right(i);
    let own = side_points(own_right);
    let k = if own_right { i - n } else { n - 1 - i };
    let ax = x.abs();
    let h_in = if k == 0 { 0.5 * ax } else { ax - own[k - 1].0.abs() };
    let (out_pos, out_pt) = own[k + 1];
    let h_out = out_pos.abs() - ax;
    let h = h_in.min(h_out);
    let s = h.powf(2.0 - 2.0 * alpha) / (2.0 - 2.0 * alpha);
    let span = h_in + h_out;
    let (mut w_in, mut w_out) = (2.0 * s / (h_in * span), 2.0 * s / (h_out * span));
    if kappa != 0.0 {
        w_in *= (ax / (ax - h_in)).powf(kappa) * (1.0 - kappa * h_out / ax);
        w_out *= (ax / (ax + h_out)).powf(kappa) * (1.0 + kappa * h_in / ax);
        let centre = s
            * (2.0 / (h_in * h_out)
                - kappa * (kappa - 1.0) / (ax * ax)
                - 2.0 * kappa * (h_out - h_in) / (ax * h_in * h_out));
        row.model += centre - w_in - w_out;
    }
    if k == 0 {
        // Virtual inner point at x/2 carrying the core model value.
        row.model += w_in * (1.0 - 0.5f64.powf(kappa));
    } else {
        add(&mut row, own[k - 1].1, w_in);
    }
    add(&mut row, out_pt, w_out);
    let excluded = (x - h, x + h);

    // Interpolated part on both sides: hats, weighted by (|y|/|y_j|)^κ.
    for right in [false, true] {
        let pts = side_points(right);
        for pair in pts.windows(2) {
            let ((pa, ra), (pb, rb)) = (pair[0], pair[1]);
            let (a, b, ref_a, ref_b) = if pa < pb { (pa, pb, ra, rb) } else { (pb, pa, rb, ra) };
            let pieces = [(a, b.min(excluded.0)), (a.max(excluded.1), b)];
            let pieces: &[(f64, f64)] =
                if b <= excluded.0 || a >= excluded.1 { &[(a, b)] } else { &pieces };
            for &(c, d) in pieces {
                if d <= c {
                    continue;
                }
                let (wa, wb) = if kappa == 0.0 {
                    hat_moments(alpha, x, (a, b), (c, d))
                } else {
                    let (wa, wb) = weighted_hat_moments(alpha, x, kappa, (a, b), (c, d));
                    row.model += kernel_mass(alpha, x, c, d) - wa - wb;
                    (wa, wb)
                };
                add(&mut row, ref_a, wa);
                add(&mut row, ref_b, wb);
            }
        }
    }

    // Core gaps between 0 and the innermost nodes.
    let (inner_left, inner_right) = grid.innermost();
    for (right, c) in [(false, inner_left), (true, inner_right)] {
        let xc = grid.x(c).abs();
        let length = if c == i { xc - h } else { xc };
        let same = right == own_right;
        let (m0, mk) = core_moments(alpha, ax, xc, length, same, kappa)?;
        row.model += m0 - mk;
        add(&mut row, Point::Node(c), mk);
    }

    // Exterior.
    let a2 = 2.0 * alpha;
    let mass = ((1.0 - x).powf(-a2) + (1.0 + x).powf(-a2)) / a2;
    row.mass = mass;
    row.data = match ext.exterior {
        Exterior::Zero | Exterior::Constant(_) => 0.0,
        Exterior::PowerTail(tau) => power_tail_data(alpha, x, tau)?,
    };
    Ok(row)
}

/// `∫_0^L K dy` and `∫_0^L (y/x_c)^κ K dy` over the core gap of one side,
/// with `K = |x − y|^{−1−2α}` for a node at distance `ax` from 0 on the
/// same side (`same`) or the opposite one.
fn core_moments(alpha: f64, ax: f64, xc: f64, length: f64, same: bool, kappa: f64) -> Result<(f64, f64)> {
    let a2 = 2.0 * alpha;
    let m0 = if same {
        ((ax - length).powf(-a2) - ax.powf(-a2)) / a2
    } else {
        (ax.powf(-a2) - (ax + length).powf(-a2)) / a2
    };
    if kappa == 0.0 {
        return Ok((m0, m0));
    }
    let sign = if same { -1.0 } else { 1.0 };
    let f = FnIntegrand::new(Orders::new(kappa, 0.0, -2.0), move |s: f64| {
        s.powf(kappa) * (ax + sign * xc * s).powf(-1.0 - a2)
    });
    let r = integrate_range(&f, 0.0, length / xc, &QuadOptions::new(CORE_REL_TOL))?;
    Ok((m0, xc * r.value))
}

/// `∫_{|y|>1} (|y|^τ − 1) |x − y|^{−1−2α} dy`. On each side `|y| = 1 + t`
/// and `|x − y| = r + t` with r the distance from x to that boundary point;
/// `t < FAR_T` is covered by panels growing geometrically from r.
fn power_tail_data(alpha: f64, x: f64, tau: f64) -> Result<f64> {
    const FAR_T: f64 = 8.0;
    if tau == 0.0 {
        return Ok(0.0);
    }
    let a2 = 2.0 * alpha;
    let e = -1.0 - a2;
    let mut total = 0.0;
    for r in [1.0 - x, 1.0 + x] {
        let near = |t: f64| (tau * t.ln_1p()).exp_m1() * (r + t).powf(e);
        let mut lo = 0.0;
        let mut hi = r.min(FAR_T);
        while lo < FAR_T {
            total += kronrod15(near, lo, hi);
            lo = hi;
            hi = (2.0 * hi).min(FAR_T);
        }
        let far = FnIntegrand::new(Orders::new(0.0, 0.0, tau + e), move |s: f64| {
            FAR_T * (1.0 + FAR_T * s).powf(tau) * (r + FAR_T * s).powf(e)
        });
        let q = integrate_range(&far, 1.0, f64::INFINITY, &QuadOptions::new(CORE_REL_TOL))?;
        total += q.value - (r + FAR_T).powf(-a2) / a2;
    }
    Ok(total)
}
