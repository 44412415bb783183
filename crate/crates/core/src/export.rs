//! CSV writers for per-node data.
//!
//! Floats are written with Rust's shortest round-trip formatting (scientific
//! outside [1e−4, 1e6)), so a file read back yields the same bits and
//! repeated runs are byte-identical.

use std::io::Write;

use crate::analysis::RateFits;
use crate::error::{Error, Result};
use crate::mesh::{Grid, GridFunction};
use crate::operator::OperatorMatrix;

fn num(v: f64) -> String {
    let a = v.abs();
    if a == 0.0 || (1e-4..1e6).contains(&a) || !v.is_finite() {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

fn finish<W: Write>(mut w: csv::Writer<W>) -> Result<()> {
    w.flush()?;
    Ok(())
}

/// Node list: `index, x, D, d, side`.
pub fn write_grid<W: Write>(grid: &Grid, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["index", "x", "D", "d", "side"])?;
    for i in 0..grid.len() {
        let side = if grid.is_right(i) { "right" } else { "left" };
        w.write_record([
            i.to_string(),
            num(grid.x(i)),
            num(grid.dist_c(i)),
            num(grid.dist_boundary(i)),
            side.to_string(),
        ])?;
    }
    finish(w)
}

/// `(x, value)` pairs of a grid function.
pub fn write_profile<W: Write>(u: &GridFunction, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["x", "value"])?;
    for (x, v) in u.grid().nodes().iter().zip(u.values()) {
        w.write_record([num(*x), num(*v)])?;
    }
    finish(w)
}

/// The solution next to the pair that brackets it: `x, D, u, sub, super`.
pub fn write_solution<W: Write>(u: &GridFunction, sub: &GridFunction, super_: &GridFunction, out: W) -> Result<()> {
    if !u.same_grid(sub.grid()) || !u.same_grid(super_.grid()) {
        return Err(Error::GridMismatch("solution and bracketing pair live on different grids".into()));
    }
    let grid = u.grid();
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["x", "D", "u", "sub", "super"])?;
    for i in 0..grid.len() {
        w.write_record([
            num(grid.x(i)),
            num(grid.dist_c(i)),
            num(u.values()[i]),
            num(sub.values()[i]),
            num(super_.values()[i]),
        ])?;
    }
    finish(w)
}

/// One row per fitted side: `side, exponent, amplitude, d_min, d_max, r2, n_points`.
pub fn write_rate_table<W: Write>(fits: &RateFits, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["side", "exponent", "amplitude", "d_min", "d_max", "r2", "n_points"])?;
    for (name, f) in [("left", &fits.left), ("right", &fits.right), ("pooled", &fits.pooled)] {
        w.write_record([
            name.to_string(),
            num(f.exponent),
            num(f.amplitude),
            num(f.window.0),
            num(f.window.1),
            num(f.residual_r2),
            f.n_points.to_string(),
        ])?;
    }
    finish(w)
}

/// Dense dump of the operator matrix, one row per node, for debugging.
pub fn write_matrix<W: Write>(op: &OperatorMatrix, out: W) -> Result<()> {
    let m = op.matrix();
    let mut w = csv::Writer::from_writer(out);
    for r in 0..m.nrows() {
        w.write_record(m.row(r).iter().map(|v| num(*v)))?;
    }
    finish(w)
}
