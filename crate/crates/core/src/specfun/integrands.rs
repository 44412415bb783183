//! Integrands of the special functions, each with regularised evaluators
//! near the origin and near t = 1 and an exact tail beyond the cut-off.

use crate::quad::{Integrand, Orders, Side};

/// Partial sums of binomial-type series are stopped once a term drops
/// below this fraction of the running total.
const SERIES_EPS: f64 = 1e-18;
const SERIES_MAX_TERMS: usize = 400;
/// Below this t the numerator of c is evaluated from its Taylor series.
const TAYLOR_SWITCH: f64 = 0.25;

/// Generalised binomial coefficients `binom(tau, j)` for `j = 0, 1, …`.
fn binomials(tau: f64) -> impl Iterator<Item = f64> {
    let mut b = 1.0;
    let mut j = 0usize;
    std::iter::from_fn(move || {
        let current = b;
        j += 1;
        b *= (tau - (j as f64) + 1.0) / j as f64;
        Some(current)
    })
}

/// Sums `term(j, binom(tau, j))` over `j ≥ start` with `j % step == 0`
/// until the terms are negligible.
fn binomial_series(tau: f64, start: usize, step: usize, mut term: impl FnMut(usize, f64) -> f64) -> f64 {
    let mut sum = 0.0;
    for (j, b) in binomials(tau).enumerate().skip(start).take(SERIES_MAX_TERMS) {
        if j % step != 0 {
            continue;
        }
        let t = term(j, b);
        sum += t;
        if t.abs() <= SERIES_EPS * sum.abs() || b == 0.0 {
            break;
        }
    }
    sum
}

/// `(1 − t)^τ + (1 + t)^τ − 2` divided by `t²`, for `0 ≤ t < 1`.
fn even_part_over_t2(tau: f64, t: f64) -> f64 {
    if t < TAYLOR_SWITCH {
        let t2 = t * t;
        binomial_series(tau, 2, 2, |j, b| 2.0 * b * t2.powi((j / 2 - 1) as i32))
    } else {
        ((1.0 - t).powf(tau) + (1.0 + t).powf(tau) - 2.0) / (t * t)
    }
}

/// Integrand of `c(τ)` (and, with `truncated`, of `C(τ)`):
/// `(χ|1 − t|^τ + (1 + t)^τ − 2) / t^(1+2α)`, where χ is 1 everywhere for
/// c and the indicator of (0, 1) for C.
#[derive(Debug, Clone, Copy)]
pub struct PowerKernel {
    pub alpha: f64,
    pub tau: f64,
    pub truncated: bool,
}

impl PowerKernel {
    fn weight(&self, t: f64) -> f64 {
        t.powf(-1.0 - 2.0 * self.alpha)
    }
}

impl Integrand for PowerKernel {
    fn orders(&self) -> Orders {
        Orders::new(1.0 - 2.0 * self.alpha, self.tau, -1.0 - 2.0 * self.alpha)
    }

    fn singular_order(&self, side: Side) -> f64 {
        match side {
            Side::Above if self.truncated => 0.0,
            _ => self.tau,
        }
    }

    fn eval(&self, t: f64) -> f64 {
        if t < 1.0 {
            return even_part_over_t2(self.tau, t) * t * t * self.weight(t);
        }
        let near = if self.truncated { 0.0 } else { (t - 1.0).powf(self.tau) };
        (near + (1.0 + t).powf(self.tau) - 2.0) * self.weight(t)
    }

    fn eval_near_origin(&self, t: f64) -> f64 {
        // t^{-1-2α} · t^{-(1-2α)} = t^{-2}
        even_part_over_t2(self.tau, t)
    }

    fn eval_near_singular(&self, r: f64, side: Side) -> f64 {
        let t = match side {
            Side::Below => 1.0 - r,
            Side::Above => 1.0 + r,
        };
        let far = (1.0 + t).powf(self.tau) - 2.0;
        let w = self.weight(t);
        if side == Side::Above && self.truncated {
            return far * w;
        }
        // r^{-τ}(r^τ + far) = 1 + r^{-τ}·far; r^{-τ} → 0 as r → 0 for τ < 0.
        let scaled = if r == 0.0 {
            if self.tau == 0.0 { far } else { 0.0 }
        } else {
            r.powf(-self.tau) * far
        };
        (1.0 + scaled) * w
    }

    fn tail_integral(&self, t_cut: f64) -> Option<f64> {
        if t_cut <= 2.0 {
            return None;
        }
        let (a2, tau) = (2.0 * self.alpha, self.tau);
        let constant = -2.0 * t_cut.powf(-a2) / a2;
        let inv = 1.0 / t_cut;
        // (T ± 1)^τ = T^τ Σ binom(τ, j) (±1/T)^j; odd powers cancel for c.
        let (step, mult) = if self.truncated { (1, 1.0) } else { (2, 2.0) };
        let lead = t_cut.powf(tau - a2);
        let series = binomial_series(tau, 0, step, |j, b| {
            mult * b * lead * inv.powi(j as i32) / (a2 + j as f64 - tau)
        });
        Some(constant + series)
    }
}

/// Integrand of `T(α) = ∫ log|1 − t²| t^(−1−2α) dt`, which equals c′(0).
#[derive(Debug, Clone, Copy)]
pub struct LogKernel {
    pub alpha: f64,
}

/// Order declared for the logarithmic singularity at t = 1; any value in
/// (−1, 0) removes it under the panel substitution.
const LOG_SINGULAR_ORDER: f64 = -0.5;

impl Integrand for LogKernel {
    fn orders(&self) -> Orders {
        Orders::new(1.0 - 2.0 * self.alpha, LOG_SINGULAR_ORDER, -1.0 - 2.0 * self.alpha)
    }

    fn eval(&self, t: f64) -> f64 {
        let l = if t < 1.0 { (-t * t).ln_1p() } else { (t * t - 1.0).ln() };
        l * t.powf(-1.0 - 2.0 * self.alpha)
    }

    fn eval_near_origin(&self, t: f64) -> f64 {
        let t2 = t * t;
        if t2 < 1e-8 {
            -1.0 - 0.5 * t2
        } else {
            (-t2).ln_1p() / t2
        }
    }

    fn eval_near_singular(&self, r: f64, side: Side) -> f64 {
        if r == 0.0 {
            return 0.0;
        }
        let (t, other) = match side {
            Side::Below => (1.0 - r, 2.0 - r),
            Side::Above => (1.0 + r, 2.0 + r),
        };
        (r.ln() + other.ln()) * t.powf(-1.0 - 2.0 * self.alpha) * r.powf(-LOG_SINGULAR_ORDER)
    }

    fn tail_integral(&self, t_cut: f64) -> Option<f64> {
        if t_cut <= 2.0 {
            return None;
        }
        // log(t² − 1) = 2 log t − Σ_k t^{−2k}/k
        let a2 = 2.0 * self.alpha;
        let lead = 2.0 * t_cut.powf(-a2) * (t_cut.ln() / a2 + 1.0 / (a2 * a2));
        let inv2 = t_cut.powi(-2);
        let mut power = t_cut.powf(-a2);
        let mut sum = 0.0;
        for k in 1..SERIES_MAX_TERMS {
            power *= inv2;
            let kf = k as f64;
            let term = power / (kf * (2.0 * kf + a2));
            sum += term;
            if term <= SERIES_EPS * sum {
                break;
            }
        }
        Some(lead - sum)
    }
}

/// Integrand of `c″(τ)`:
/// `(|1 − t|^τ log²|1 − t| + (1 + t)^τ log²(1 + t)) / t^(1+2α)`.
#[derive(Debug, Clone, Copy)]
pub struct ConvexityKernel {
    pub alpha: f64,
    pub tau: f64,
}

impl ConvexityKernel {
    /// Declared order (τ − 1)/2 lies strictly below τ, which absorbs the
    /// squared logarithm.
    fn singular(&self) -> f64 {
        0.5 * (self.tau - 1.0)
    }
}

impl Integrand for ConvexityKernel {
    fn orders(&self) -> Orders {
        Orders::new(1.0 - 2.0 * self.alpha, self.singular(), self.tau - 1.0 - 2.0 * self.alpha)
    }

    fn eval(&self, t: f64) -> f64 {
        let r = (1.0 - t).abs();
        let lr = r.ln();
        let lp = t.ln_1p();
        (r.powf(self.tau) * lr * lr + (1.0 + t).powf(self.tau) * lp * lp)
            * t.powf(-1.0 - 2.0 * self.alpha)
    }

    fn eval_near_origin(&self, t: f64) -> f64 {
        if t == 0.0 {
            return 2.0;
        }
        let lm = (-t).ln_1p() / t;
        let lp = t.ln_1p() / t;
        (1.0 - t).powf(self.tau) * lm * lm + (1.0 + t).powf(self.tau) * lp * lp
    }

    fn eval_near_singular(&self, r: f64, side: Side) -> f64 {
        if r == 0.0 {
            return 0.0;
        }
        let sigma = self.singular();
        let t = match side {
            Side::Below => 1.0 - r,
            Side::Above => 1.0 + r,
        };
        let lr = r.ln();
        let lp = t.ln_1p();
        (r.powf(self.tau - sigma) * lr * lr + r.powf(-sigma) * (1.0 + t).powf(self.tau) * lp * lp)
            * t.powf(-1.0 - 2.0 * self.alpha)
    }
}

/// Integrand `(t − 1)^τ t^(−1−2α)` on (1, ∞), the difference c − C.
#[derive(Debug, Clone, Copy)]
pub struct ShiftedPower {
    pub alpha: f64,
    pub tau: f64,
}

impl Integrand for ShiftedPower {
    fn orders(&self) -> Orders {
        Orders::new(0.0, self.tau, self.tau - 1.0 - 2.0 * self.alpha)
    }

    fn eval(&self, t: f64) -> f64 {
        if t <= 1.0 {
            return 0.0;
        }
        (t - 1.0).powf(self.tau) * t.powf(-1.0 - 2.0 * self.alpha)
    }

    fn eval_near_singular(&self, r: f64, side: Side) -> f64 {
        match side {
            Side::Below => 0.0,
            Side::Above => (1.0 + r).powf(-1.0 - 2.0 * self.alpha),
        }
    }

    fn tail_integral(&self, t_cut: f64) -> Option<f64> {
        if t_cut <= 2.0 {
            return None;
        }
        let (a2, tau) = (2.0 * self.alpha, self.tau);
        let inv = -1.0 / t_cut;
        Some(binomial_series(tau, 0, 1, |j, b| {
            b * inv.powi(j as i32) * t_cut.powf(tau - a2) / (a2 + j as f64 - tau)
        }))
    }
}
