//! Exhaustion solver for
//!
//! ```text
//! (−Δ)^α u + |u|^{p−1} u = 0   in (−1, 1) ∖ {0},   u = 0 outside (−1, 1).
//! ```
//!
//! Level n solves the discrete equation at the nodes of `Ω_n = {D > 1/n}`
//! with u frozen to the sub-solution elsewhere. Levels double n and are
//! warm-started from the previous one; the discrete comparison principle
//! makes the level solutions increase toward the blow-up solution.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::{Exterior, Grid, GridFunction};
use crate::operator::{Extension, OperatorMatrix};
use crate::profiles::{build_v_tau, combine, sample_profile, solve_torsion_with, ProfileSpec, TorsionFunction};
use crate::specfun::{classify, Alpha, RegimeKind, Tau};

pub const MAX_SCALE_STEPS: usize = 40;
const SCALE_BISECTIONS: usize = 24;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    /// Newton stops once every step component is below this fraction of
    /// the local value of u.
    pub newton_tol: f64,
    pub max_newton_iters: usize,
    /// Smallest line-search step before the level is declared stalled.
    pub damping_floor: f64,
    /// Relative slack for the ordering and level-monotonicity flags.
    pub audit_slack: f64,
    /// A decrease between levels larger than this (relative) is an error.
    pub monotone_tol: f64,
    /// Relative slack allowed in the sub/super inequalities.
    pub inequality_tol: f64,
    /// The sub-solution must exceed this at the innermost nodes.
    pub blowup_threshold: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            newton_tol: 1e-9,
            max_newton_iters: 60,
            damping_floor: 2f64.powi(-20),
            audit_slack: 1e-8,
            monotone_tol: 1e-6,
            inequality_tol: 1e-8,
            blowup_threshold: 10.0,
        }
    }
}

/// The problem on a fixed grid together with its ordered sub/super pair.
#[derive(Debug, Clone)]
pub struct ProblemSpec {
    pub alpha: Alpha,
    pub p: f64,
    pub grid: Arc<Grid>,
    pub sub: GridFunction,
    pub super_: GridFunction,
    operator: Arc<OperatorMatrix>,
    options: SolverOptions,
}

impl ProblemSpec {
    /// Checks the pair against `op`, which must carry zero exterior data.
    pub fn new(
        p: f64,
        operator: Arc<OperatorMatrix>,
        sub: GridFunction,
        super_: GridFunction,
        options: SolverOptions,
    ) -> Result<Self> {
        if !(p > 1.0 && p.is_finite()) {
            return Err(Error::BadConfig(format!("p = {p} must be a finite number above 1")));
        }
        let grid = operator.grid().clone();
        if operator.extension().exterior != Exterior::Zero {
            return Err(Error::GridMismatch("the solver needs a zero-exterior operator".into()));
        }
        for f in [&sub, &super_] {
            if !f.same_grid(&grid) {
                return Err(Error::GridMismatch("sub/super live on another grid".into()));
            }
            if f.exterior() != Exterior::Zero {
                return Err(Error::BadConfig("sub/super must vanish outside the domain".into()));
            }
        }
        for (i, (lo, hi)) in sub.values().iter().zip(super_.values()).enumerate() {
            if lo > hi {
                return Err(Error::NoAdmissiblePair(format!("sub {lo} exceeds super {hi} at node {i}")));
            }
        }
        let (l, r) = grid.innermost();
        let inner = sub.values()[l].min(sub.values()[r]);
        if inner < options.blowup_threshold {
            return Err(Error::NoAdmissiblePair(format!(
                "sub-solution is only {inner} at the innermost nodes (threshold {})",
                options.blowup_threshold
            )));
        }
        Ok(Self { alpha: operator.alpha(), p, grid, sub, super_, operator, options })
    }

    pub fn operator(&self) -> &Arc<OperatorMatrix> {
        &self.operator
    }

    pub fn options(&self) -> SolverOptions {
        self.options
    }

    /// `L u + |u|^{p−1} u` at every node.
    pub fn residual(&self, u: &[f64]) -> Vec<f64> {
        residual(&self.operator, self.p, u)
    }
}

fn absorption(u: f64, p: f64) -> f64 {
    u.abs().powf(p - 1.0) * u
}

fn residual(op: &OperatorMatrix, p: f64, u: &[f64]) -> Vec<f64> {
    op.apply_values(u).into_iter().zip(u).map(|(l, &v)| l + absorption(v, p)).collect()
}

/// The sub/super pair `W = λ_s V_τ`, `U = λ_b V_τ + λ_c V̄` with
/// `τ = −2α/(p − 1)`.
///
/// `λ_s` is the largest power of 2 (from 2^20 down) for which W satisfies
/// the sub inequality on `A_δ ∪ B_δ`. `λ_b` doubles from `λ_s` until U
/// satisfies the super inequality on `A_δ`, and the torsion lift `λ_c`
/// doubles until it holds at every node.
#[derive(Debug, Clone)]
pub struct SubSuperPair {
    pub sub: GridFunction,
    pub super_: GridFunction,
    pub lambda_sub: f64,
    pub lambda_super: f64,
    pub lambda_lift: f64,
    /// Whether the sub inequality also holds on the filler band between
    /// `A_δ` and `B_δ`, where it is not required.
    pub sub_global: bool,
    pub profile: ProfileSpec,
    pub operator: Arc<OperatorMatrix>,
}

impl SubSuperPair {
    pub fn into_pair(self) -> (GridFunction, GridFunction) {
        (self.sub, self.super_)
    }
}

fn holds(op: &OperatorMatrix, p: f64, u: &GridFunction, nodes: &[usize], sign: f64, tol: f64) -> bool {
    let lu = op.apply_values(u.values());
    nodes.iter().all(|&i| {
        let a = absorption(u.values()[i], p);
        sign * (lu[i] + a) >= -tol * (lu[i].abs() + a.abs())
    })
}

/// Builds the default ordered pair for a `UniqueExistence` parameter set.
pub fn default_sub_super(alpha: Alpha, p: f64, grid: Arc<Grid>, options: &SolverOptions) -> Result<SubSuperPair> {
    let regime = classify(alpha, p, None)?;
    if regime.kind != RegimeKind::UniqueExistence {
        return Err(Error::Regime(format!(
            "(alpha, p) = ({}, {p}) is {}, not UniqueExistence",
            alpha.value(),
            regime.kind
        )));
    }
    let tau = -2.0 * alpha.value() / (p - 1.0);
    let profile = build_v_tau(Tau::new(tau)?, grid.delta())?;
    let op = Arc::new(OperatorMatrix::assemble(alpha, grid.clone(), Extension::blowup(tau))?);
    let plain = OperatorMatrix::assemble(alpha, grid.clone(), Extension::natural(Exterior::Zero))?;
    let torsion = solve_torsion_with(&plain)?;
    sub_super_with(&op, p, &profile, &torsion, options)
}

/// [`default_sub_super`] with the operator, profile and torsion supplied.
pub fn sub_super_with(
    op: &Arc<OperatorMatrix>,
    p: f64,
    profile: &ProfileSpec,
    torsion: &TorsionFunction,
    options: &SolverOptions,
) -> Result<SubSuperPair> {
    let grid = op.grid().clone();
    let all: Vec<usize> = (0..grid.len()).collect();
    let near: Vec<usize> = grid.near_core().collect();
    let bands: Vec<usize> = grid.near_core().chain(grid.near_boundary()).collect();
    let tol = options.inequality_tol;
    let v = sample_profile(profile, &grid, 1.0)?;
    let scaled = |lambda: f64| combine(lambda, &v, 0.0, &v);

    let mut lambda_sub = 2f64.powi(20);
    let mut found = false;
    for _ in 0..=MAX_SCALE_STEPS {
        if holds(op, p, &scaled(lambda_sub)?, &bands, -1.0, tol) {
            found = true;
            break;
        }
        lambda_sub *= 0.5;
    }
    if !found {
        return Err(Error::NoAdmissiblePair(format!("no sub-solution scale down to {lambda_sub:e}")));
    }
    // The exhaustion pins the core values to the sub, and the pinned deficit
    // decays only algebraically away from 𝒞, so the sharpest scale matters.
    let mut bad = 2.0 * lambda_sub;
    for _ in 0..SCALE_BISECTIONS {
        let mid = 0.5 * (lambda_sub + bad);
        if holds(op, p, &scaled(mid)?, &bands, -1.0, tol) {
            lambda_sub = mid;
        } else {
            bad = mid;
        }
    }

    let mut lambda_super = lambda_sub;
    found = false;
    for _ in 0..=MAX_SCALE_STEPS {
        if holds(op, p, &scaled(lambda_super)?, &near, 1.0, tol) {
            found = true;
            break;
        }
        lambda_super *= 2.0;
    }
    if !found {
        return Err(Error::NoAdmissiblePair(format!("no super-solution scale up to {lambda_super:e} near the core")));
    }

    let lifted = |lift: f64| combine(lambda_super, &v, lift, torsion.samples());
    let mut lambda_lift = 0.0;
    let mut super_ = lifted(0.0)?;
    if !holds(op, p, &super_, &all, 1.0, tol) {
        lambda_lift = lambda_super * 2f64.powi(-10);
        found = false;
        for _ in 0..=MAX_SCALE_STEPS {
            super_ = lifted(lambda_lift)?;
            if holds(op, p, &super_, &all, 1.0, tol) {
                found = true;
                break;
            }
            lambda_lift *= 2.0;
        }
        if !found {
            return Err(Error::NoAdmissiblePair(format!("no torsion lift up to {lambda_lift:e}")));
        }
    }
    let sub = scaled(lambda_sub)?;
    let sub_global = holds(op, p, &sub, &all, -1.0, tol);
    Ok(SubSuperPair {
        sub,
        sub_global,
        super_,
        lambda_sub,
        lambda_super,
        lambda_lift,
        profile: profile.clone(),
        operator: op.clone(),
    })
}

/// What happened at one exhaustion level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelRecord {
    pub n: usize,
    pub free_nodes: usize,
    pub newton_iters: usize,
    /// Largest `|F_i / J_ii| / u_i` at acceptance.
    pub scaled_residual: f64,
    /// Largest relative decrease from the previous level (0 if none).
    pub max_decrease: f64,
    pub ordering_ok: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolveReport {
    #[serde(skip)]
    pub final_: Option<GridFunction>,
    pub n_exhaustion_levels: usize,
    pub newton_iters: Vec<usize>,
    pub levels: Vec<LevelRecord>,
    /// `max |F_i|` over the free nodes of the last level.
    pub residual_inf: f64,
    pub scaled_residual: f64,
    pub converged: bool,
    pub ordering_ok: bool,
    pub monotone_ok: bool,
}

impl SolveReport {
    pub fn solution(&self) -> &GridFunction {
        self.final_.as_ref().expect("report carries its solution")
    }
}

fn free_nodes(grid: &Grid, n: usize) -> Vec<usize> {
    let cut = 1.0 / n as f64;
    (0..grid.len()).filter(|&i| grid.dist_c(i) > cut).collect()
}

fn validate_level(grid: &Grid, n: usize) -> Result<()> {
    if n < 4 {
        return Err(Error::BadConfig(format!("exhaustion level n = {n} is below 4")));
    }
    let (_, r) = grid.innermost();
    if 1.0 / n as f64 <= grid.dist_c(r) {
        return Err(Error::BadConfig(format!(
            "level n = {n} frees the innermost node (D = {:e}); the grid cannot resolve it",
            grid.dist_c(r)
        )));
    }
    Ok(())
}

/// Largest `|F_i / J_ii|` relative to `u_i` over the free nodes, plus the
/// absolute `max |F_i|`.
fn scaled_norm(f: &[f64], jdiag: &[f64], u: &[f64], free: &[usize]) -> (f64, f64) {
    let mut scaled: f64 = 0.0;
    let mut abs: f64 = 0.0;
    let floor = 1e-300;
    for (k, &i) in free.iter().enumerate() {
        scaled = scaled.max((f[k] / jdiag[k]).abs() / u[i].abs().max(floor));
        abs = abs.max(f[k].abs());
    }
    (scaled, abs)
}

/// Damped Newton on the free nodes of level n, starting from `start`.
fn newton_level(spec: &ProblemSpec, n: usize, start: &[f64]) -> Result<(Vec<f64>, usize, f64, f64)> {
    let opts = spec.options;
    let op = &spec.operator;
    let p = spec.p;
    let free = free_nodes(&spec.grid, n);
    let a = op.matrix();
    let a_free = DMatrix::from_fn(free.len(), free.len(), |r, c| a[(free[r], free[c])]);
    let mut u = start.to_vec();
    for &i in &free {
        u[i] = u[i].clamp(spec.sub.values()[i], spec.super_.values()[i]);
    }
    let eval = |u: &[f64]| -> (Vec<f64>, Vec<f64>) {
        let res = residual(op, p, u);
        let f: Vec<f64> = free.iter().map(|&i| res[i]).collect();
        let jd: Vec<f64> =
            free.iter().enumerate().map(|(k, &i)| a_free[(k, k)] + p * u[i].abs().powf(p - 1.0)).collect();
        (f, jd)
    };
    if free.is_empty() {
        return Ok((u, 0, 0.0, 0.0));
    }
    let (mut f, mut jd) = eval(&u);
    let merit = |f: &[f64], jd: &[f64]| f.iter().zip(jd).map(|(a, b)| (a / b).powi(2)).sum::<f64>();
    for iter in 0..=opts.max_newton_iters {
        let (scaled, abs) = scaled_norm(&f, &jd, &u, &free);
        if scaled <= opts.newton_tol {
            return Ok((u, iter, scaled, abs));
        }
        if iter == opts.max_newton_iters {
            return Err(Error::NewtonStall { level: n, residual: scaled, iterations: iter });
        }
        let mut j = a_free.clone();
        for (k, &i) in free.iter().enumerate() {
            j[(k, k)] += p * u[i].abs().powf(p - 1.0);
        }
        let step = j
            .lu()
            .solve(&DVector::from_iterator(free.len(), f.iter().map(|v| -v)))
            .ok_or_else(|| Error::SingularSystem(format!("Newton Jacobian at level {n}")))?;
        let m0 = merit(&f, &jd);
        let mut t = 1.0;
        loop {
            let mut trial = u.clone();
            for (k, &i) in free.iter().enumerate() {
                trial[i] = u[i] + t * step[k];
            }
            if free.iter().all(|&i| trial[i] > 0.0) {
                let (tf, _) = eval(&trial);
                if merit(&tf, &jd) < (1.0 - 1e-4 * t) * m0 {
                    u = trial;
                    (f, jd) = eval(&u);
                    break;
                }
            }
            t *= 0.5;
            if t < opts.damping_floor {
                return Err(Error::NewtonStall { level: n, residual: scaled, iterations: iter });
            }
        }
    }
    unreachable!("loop returns on the final iteration")
}

/// Solves level n and returns the full node vector.
pub fn solve_dirichlet_level(spec: &ProblemSpec, n: usize) -> Result<GridFunction> {
    validate_level(&spec.grid, n)?;
    let (u, _, _, _) = newton_level(spec, n, spec.sub.values())?;
    GridFunction::new(spec.grid.clone(), u, Exterior::Zero)
}

/// Levels `n_start, 2 n_start, …` up to the last one not above `n_end`.
pub fn doubling_schedule(n_start: usize, n_end: usize) -> Result<Vec<usize>> {
    if n_start >= n_end || n_start < 4 {
        return Err(Error::BadConfig(format!("schedule {n_start} -> {n_end} needs 4 <= start < end")));
    }
    let mut out = vec![n_start];
    while let Some(&last) = out.last() {
        if 2 * last > n_end {
            break;
        }
        out.push(2 * last);
    }
    Ok(out)
}

/// Largest level reachable from `n_start` by doubling that still leaves
/// the innermost nodes pinned.
pub fn deepest_level(grid: &Grid, n_start: usize) -> Result<usize> {
    validate_level(grid, n_start)?;
    let mut n = n_start;
    while validate_level(grid, 2 * n).is_ok() {
        n *= 2;
    }
    Ok(n)
}

pub fn solve_blowup(spec: &ProblemSpec, n_start: usize, n_end: usize) -> Result<SolveReport> {
    solve_schedule(spec, &doubling_schedule(n_start, n_end)?)
}

/// Runs the exhaustion over an explicit increasing schedule.
pub fn solve_schedule(spec: &ProblemSpec, schedule: &[usize]) -> Result<SolveReport> {
    if schedule.is_empty() || schedule.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::BadConfig(format!("schedule {schedule:?} is not strictly increasing")));
    }
    for &n in schedule {
        validate_level(&spec.grid, n)?;
    }
    let opts = spec.options;
    let (sub, sup) = (spec.sub.values(), spec.super_.values());
    let mut u = sub.to_vec();
    let mut levels = Vec::with_capacity(schedule.len());
    let mut monotone_ok = true;
    let mut ordering_ok = true;
    let (mut scaled, mut abs) = (0.0, 0.0);
    for (level, &n) in schedule.iter().enumerate() {
        let (next, iters, s, a) = newton_level(spec, n, &u)?;
        let mut max_decrease: f64 = 0.0;
        for (i, (new, old)) in next.iter().zip(&u).enumerate() {
            let drop = (old - new) / old.abs().max(1e-300);
            if level > 0 && drop > opts.monotone_tol {
                return Err(Error::MonotoneViolation { level: n, node: i, amount: old - new });
            }
            max_decrease = max_decrease.max(drop);
        }
        if level > 0 && max_decrease > opts.audit_slack {
            monotone_ok = false;
        }
        let slack = |v: f64| opts.audit_slack * v.abs().max(1e-300);
        let ordered = next.iter().enumerate().all(|(i, &v)| v >= sub[i] - slack(v) && v <= sup[i] + slack(v));
        ordering_ok &= ordered;
        levels.push(LevelRecord {
            n,
            free_nodes: free_nodes(&spec.grid, n).len(),
            newton_iters: iters,
            scaled_residual: s,
            max_decrease: if level == 0 { 0.0 } else { max_decrease },
            ordering_ok: ordered,
        });
        (scaled, abs) = (s, a);
        u = next;
    }
    Ok(SolveReport {
        final_: Some(GridFunction::new(spec.grid.clone(), u, Exterior::Zero)?),
        n_exhaustion_levels: levels.len(),
        newton_iters: levels.iter().map(|l| l.newton_iters).collect(),
        levels,
        residual_inf: abs,
        scaled_residual: scaled,
        converged: scaled <= opts.newton_tol,
        ordering_ok,
        monotone_ok,
    })
}
