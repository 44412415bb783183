//! Graded grids on Ω = (−1, 1) with the singular point 𝒞 = {0}.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_DELTA: f64 = 0.25;
pub const MIN_NODES_PER_SIDE: usize = 16;
pub const MAX_GRADING: f64 = 6.0;

/// `D(x) = |x|`, the distance to 𝒞.
#[allow(non_snake_case)]
pub fn distance_D(x: f64) -> Result<f64> {
    check_domain(x).map(|x| x.abs())
}

/// `d(x) = min(1 − x, 1 + x)`, the distance to ∂Ω.
pub fn distance_d(x: f64) -> Result<f64> {
    check_domain(x).map(|x| (1.0 - x).min(1.0 + x))
}

fn check_domain(x: f64) -> Result<f64> {
    if x > -1.0 && x < 1.0 {
        Ok(x)
    } else {
        Err(Error::OutOfDomain(x))
    }
}

/// Node layout: indices `0..n` hold the left side (ascending, negative),
/// `n..2n` the right side. Within each side nodes are graded algebraically
/// toward both 0 and the boundary point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    nodes: Vec<f64>,
    grading_exponent: f64,
    n_per_side: usize,
    delta: f64,
}

/// Grading map of [0, 1] onto itself with `φ(ξ) ~ ξ^g` at both ends.
fn grading_map(xi: f64, g: f64) -> f64 {
    if xi <= 0.5 {
        0.5 * (2.0 * xi).powf(g)
    } else {
        1.0 - 0.5 * (2.0 * (1.0 - xi)).powf(g)
    }
}

impl Grid {
    pub fn build_graded(n_per_side: usize, grading_exponent: f64, delta: f64) -> Result<Self> {
        if n_per_side < MIN_NODES_PER_SIDE {
            return Err(Error::BadConfig(format!(
                "n_per_side = {n_per_side} is below {MIN_NODES_PER_SIDE}"
            )));
        }
        if !(1.0..=MAX_GRADING).contains(&grading_exponent) {
            return Err(Error::BadConfig(format!(
                "grading exponent {grading_exponent} is not in [1, {MAX_GRADING}]"
            )));
        }
        if !(delta > 0.0 && delta <= 0.25) {
            return Err(Error::BadConfig(format!("delta = {delta} is not in (0, 1/4]")));
        }
        let n = n_per_side;
        let right: Vec<f64> = (1..=n)
            .map(|k| grading_map((k as f64 - 0.5) / n as f64, grading_exponent))
            .collect();
        let mut nodes: Vec<f64> = right.iter().rev().map(|x| -x).collect();
        nodes.extend_from_slice(&right);
        Ok(Self { nodes, grading_exponent, n_per_side, delta })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn x(&self, i: usize) -> f64 {
        self.nodes[i]
    }

    pub fn n_per_side(&self) -> usize {
        self.n_per_side
    }

    pub fn grading_exponent(&self) -> f64 {
        self.grading_exponent
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// `D` at node i.
    pub fn dist_c(&self, i: usize) -> f64 {
        self.nodes[i].abs()
    }

    /// `d` at node i.
    pub fn dist_boundary(&self, i: usize) -> f64 {
        1.0 - self.nodes[i].abs()
    }

    pub fn is_right(&self, i: usize) -> bool {
        i >= self.n_per_side
    }

    /// Index of the node `−x_i`.
    pub fn mirror(&self, i: usize) -> usize {
        self.len() - 1 - i
    }

    /// Innermost node on each side: `(left, right)`.
    pub fn innermost(&self) -> (usize, usize) {
        (self.n_per_side - 1, self.n_per_side)
    }

    /// Largest gap from node i to its neighbours on the same side, with 0
    /// and ±1 standing in for the missing neighbours of end nodes.
    pub fn local_spacing(&self, i: usize) -> f64 {
        let x = self.nodes[i].abs();
        let k = if self.is_right(i) { i - self.n_per_side } else { self.n_per_side - 1 - i };
        let side = |k: usize| self.nodes[self.n_per_side + k];
        let inner = if k == 0 { x } else { x - side(k - 1) };
        let outer = if k + 1 == self.n_per_side { 1.0 - x } else { side(k + 1) - x };
        inner.max(outer)
    }

    /// Nodes in `A_δ = {D < δ}`.
    pub fn near_core(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(|&i| self.dist_c(i) < self.delta)
    }

    /// Nodes in `B_δ = {d < δ}`.
    pub fn near_boundary(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(|&i| self.dist_boundary(i) < self.delta)
    }

    /// Nodes with `D ≥ factor · local spacing`.
    pub fn well_resolved(&self, factor: f64) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(move |&i| self.dist_c(i) >= factor * self.local_spacing(i))
    }
}

/// How a grid function continues outside Ω.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value")]
pub enum Exterior {
    Zero,
    /// `u(y) = |y|^τ` for `|y| ≥ 1`.
    PowerTail(f64),
    Constant(f64),
}

impl Exterior {
    pub fn value_at(&self, y: f64) -> f64 {
        match *self {
            Exterior::Zero => 0.0,
            Exterior::PowerTail(tau) => y.abs().powf(tau),
            Exterior::Constant(k) => k,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    grid: Arc<Grid>,
    values: Vec<f64>,
    exterior: Exterior,
}

impl GridFunction {
    pub fn new(grid: Arc<Grid>, values: Vec<f64>, exterior: Exterior) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "{} values for a grid of {} nodes",
                values.len(),
                grid.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::BadConfig(format!("non-finite value at node {i}")));
        }
        Ok(Self { grid, values, exterior })
    }

    pub fn from_fn(grid: Arc<Grid>, exterior: Exterior, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = grid.nodes().iter().map(|&x| f(x)).collect();
        Self::new(grid, values, exterior)
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn exterior(&self) -> Exterior {
        self.exterior
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn same_grid(&self, other: &Grid) -> bool {
        std::ptr::eq(self.grid.as_ref(), other) || *self.grid == *other
    }
}
