use crate::error::{Error, Result};

const MAX_ITER: usize = 200;

/// Brent's method on a bracket `[a, b]` with `f(a)·f(b) ≤ 0`.
///
/// Returns once the bracket half-width is at most `tol` (plus a few ulps)
/// or an exact zero is hit.
pub fn brent(
    what: &'static str,
    mut f: impl FnMut(f64) -> Result<f64>,
    a: f64,
    b: f64,
    tol: f64,
) -> Result<f64> {
    let (mut a, mut b) = (a, b);
    let (mut fa, mut fb) = (f(a)?, f(b)?);
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(Error::BracketFailure { what, lo: a.min(b), hi: a.max(b) });
    }
    let (mut c, mut fc) = (a, fa);
    let mut d = b - a;
    let mut e = d;
    for _ in 0..MAX_ITER {
        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol1 = 2.0 * f64::EPSILON * b.abs() + 0.5 * tol;
        let xm = 0.5 * (c - b);
        if xm.abs() <= tol1 || fb == 0.0 {
            return Ok(b);
        }
        if e.abs() >= tol1 && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * xm * s;
                q = 1.0 - s;
            } else {
                let qa = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * xm * qa * (qa - r) - (b - a) * (r - 1.0));
                q = (qa - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            }
            p = p.abs();
            let min1 = 3.0 * xm * q - (tol1 * q).abs();
            let min2 = (e * q).abs();
            if 2.0 * p < min1.min(min2) {
                e = d;
                d = p / q;
            } else {
                d = xm;
                e = d;
            }
        } else {
            d = xm;
            e = d;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol1 { d } else { tol1.copysign(xm) };
        fb = f(b)?;
    }
    Ok(b)
}

/// Widens `[lo, hi]` toward the open interval `(left, right)` by shrinking
/// the gaps to the endpoints tenfold per step, down to `min_gap`, until
/// `f` changes sign. Returns the bracket found.
pub fn grow_bracket(
    what: &'static str,
    mut f: impl FnMut(f64) -> Result<f64>,
    (left, right): (f64, f64),
    (mut lo, mut hi): (f64, f64),
    min_gap: f64,
) -> Result<(f64, f64)> {
    let mut flo = f(lo)?;
    let mut fhi = f(hi)?;
    loop {
        if flo.signum() != fhi.signum() || flo == 0.0 || fhi == 0.0 {
            return Ok((lo, hi));
        }
        let gap_lo = lo - left;
        let gap_hi = right - hi;
        if gap_lo <= min_gap && gap_hi <= min_gap {
            return Err(Error::BracketFailure { what, lo, hi });
        }
        if gap_lo > min_gap {
            lo = left + (gap_lo / 10.0).max(min_gap);
            flo = f(lo)?;
        }
        if gap_hi > min_gap && flo.signum() == fhi.signum() {
            hi = right - (gap_hi / 10.0).max(min_gap);
            fhi = f(hi)?;
        }
    }
}
