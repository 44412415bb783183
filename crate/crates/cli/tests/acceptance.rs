//! End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
//! exits nonzero if any criterion fails.

use std::path::Path;
use std::process::Command;
use std::sync::Arc;
use std::time::{Duration, Instant};

use blowup_core::analysis::{apply_v_tau, audit_nonexistence_with, check_band, fit_rate, window_nodes, Zone};
use blowup_core::mesh::{Exterior, Grid, GridFunction, DEFAULT_DELTA};
use blowup_core::operator::{Extension, OperatorMatrix};
use blowup_core::solver::{deepest_level, default_sub_super, solve_blowup, ProblemSpec, SolverOptions};
use blowup_core::specfun::{
    c_tau, classify_with, find_alpha0, find_tau0, find_tau1, shifted_power_integral, CriticalExponents, C_tau,
    T_alpha,
};
use blowup_core::{Alpha, RegimeKind, Tau};
use statrs::function::gamma::gamma;

/// Precomputed α₀: `T(1/2) = ∫₀^∞ log|1 − t²| t^{−2} dt` vanishes in closed
/// form.
const ALPHA0_ORACLE: f64 = 0.5;
const GRADING: f64 = 3.0;
const RESOLVED: f64 = 20.0;

type Criterion = (&'static str, Duration, fn() -> Outcome);

struct Outcome {
    passed: bool,
    detail: String,
}

fn a(v: f64) -> Alpha {
    Alpha::new(v).unwrap()
}

fn t(v: f64) -> Tau {
    Tau::new(v).unwrap()
}

fn grid(n: usize) -> Arc<Grid> {
    Arc::new(Grid::build_graded(n, GRADING, DEFAULT_DELTA).unwrap())
}

fn tenths() -> Vec<f64> {
    (1..=9).map(|k| k as f64 / 10.0).collect()
}

fn special_identities() -> Outcome {
    let worst_zero = tenths().into_iter().map(|al| c_tau(a(al), t(0.0)).unwrap().abs()).fold(0.0, f64::max);
    let mut worst_rel: f64 = 0.0;
    for al in tenths() {
        for k in 1..=9 {
            let tau = -k as f64 / 10.0;
            let lhs = c_tau(a(al), t(tau)).unwrap() - C_tau(a(al), t(tau)).unwrap();
            let rhs = shifted_power_integral(a(al), t(tau)).unwrap();
            worst_rel = worst_rel.max((lhs - rhs).abs() / rhs.abs());
        }
    }
    Outcome {
        passed: worst_zero <= 1e-10 && worst_rel <= 1e-8,
        detail: format!("max |c(a,0)| = {worst_zero:.1e}, max rel. error of c - C identity = {worst_rel:.1e}"),
    }
}

fn convexity_and_signs() -> Outcome {
    let alpha0 = ALPHA0_ORACLE;
    let taus: Vec<f64> = (1..50).map(|k| -1.0 + 0.02 * k as f64).collect();
    let mut convex = true;
    let mut sign_ok = true;
    for al in tenths() {
        let c: Vec<f64> = taus.iter().map(|&x| c_tau(a(al), t(x)).unwrap()).collect();
        convex &= c.windows(3).all(|w| w[0] - 2.0 * w[1] + w[2] > 0.0);
        if al < alpha0 {
            // Values this small sit on τ₁ itself, where the sign is roundoff.
            let signs: Vec<bool> = c.iter().filter(|v| v.abs() > 1e-12).map(|&v| v > 0.0).collect();
            sign_ok &= signs.windows(2).filter(|w| w[0] != w[1]).count() == 1;
        }
    }
    let t_vals: Vec<f64> = (1..=19).map(|k| T_alpha(a(0.05 * k as f64)).unwrap()).collect();
    let decreasing = t_vals.windows(2).all(|w| w[1] < w[0]);
    Outcome {
        passed: convex && sign_ok && decreasing,
        detail: format!("second differences positive: {convex}, one sign change below alpha0: {sign_ok}, T decreasing: {decreasing}"),
    }
}

fn critical_exponents() -> Outcome {
    let alpha0 = find_alpha0(1e-8).unwrap();
    let ordered = [0.1, 0.2, alpha0 - 0.05]
        .iter()
        .all(|&al| find_tau0(a(al), 1e-10).unwrap() < find_tau1(a(al), 1e-10).unwrap());
    let near = find_tau1(a(alpha0 - 0.01), 1e-10).unwrap();
    let small = find_tau1(a(0.05), 1e-10).unwrap();
    let err = (alpha0 - ALPHA0_ORACLE).abs();
    Outcome {
        passed: err <= 1e-6 && ordered && near > -0.2 && small < -0.8,
        detail: format!(
            "alpha0 = {alpha0:.10} (error {err:.1e}), tau0 < tau1: {ordered}, tau1(alpha0-0.01) = {near:.4}, tau1(0.05) = {small:.4}"
        ),
    }
}

fn torsion_exact(alpha: f64, x: f64) -> f64 {
    (1.0 - x * x).powf(alpha) / (gamma(-alpha).abs() * gamma(1.0 + alpha))
}

/// Worst relative error of the power identity on well-resolved nodes of
/// `g` with D in `window`.
fn power_error(alpha: f64, tau: f64, g: &Arc<Grid>, window: (f64, f64)) -> f64 {
    let c = c_tau(a(alpha), t(tau)).unwrap();
    let ext = Extension::natural(Exterior::PowerTail(tau));
    let m = OperatorMatrix::assemble(a(alpha), g.clone(), ext).unwrap();
    let u = GridFunction::from_fn(g.clone(), ext.exterior, |x| x.abs().powf(tau)).unwrap();
    let out = m.apply(&u).unwrap();
    g.well_resolved(RESOLVED)
        .filter(|&i| g.dist_c(i) >= window.0 && g.dist_c(i) <= window.1)
        .map(|i| {
            let exact = -c * g.dist_c(i).powf(tau - 2.0 * alpha);
            (out[i] - exact).abs() / exact.abs()
        })
        .fold(0.0, f64::max)
}

fn operator_fidelity() -> Outcome {
    let (coarse, fine) = (grid(256), grid(512));
    // A fixed physical window, so the doubling compares the same region.
    let d_min = coarse.well_resolved(RESOLVED).map(|i| coarse.dist_c(i)).fold(f64::INFINITY, f64::min);
    let window = (d_min, 0.75);
    let mut worst_all: f64 = 0.0;
    let mut improving = true;
    let mut table = Vec::new();
    // τ = −1/2 is avoided: it is τ₁(1/4), where c and the exact value vanish.
    for alpha in [0.25, 0.5, 0.75] {
        for tau in [-0.75, -0.6, -0.25] {
            let all = power_error(alpha, tau, &coarse, (0.0, f64::INFINITY));
            let e1 = power_error(alpha, tau, &coarse, window);
            let e2 = power_error(alpha, tau, &fine, window);
            worst_all = worst_all.max(all);
            improving &= e2 < e1;
            table.push(format!("({alpha},{tau}): {e1:.1e} -> {e2:.1e}"));
        }
    }
    let mut worst_torsion: f64 = 0.0;
    for alpha in [0.25, 0.5, 0.75] {
        let m = OperatorMatrix::assemble(a(alpha), coarse.clone(), Extension::natural(Exterior::Zero)).unwrap();
        let v = GridFunction::from_fn(coarse.clone(), Exterior::Zero, |x| torsion_exact(alpha, x)).unwrap();
        let lv = m.apply(&v).unwrap();
        for i in (0..coarse.len()).filter(|&i| coarse.dist_boundary(i) >= 0.1) {
            worst_torsion = worst_torsion.max((lv[i] - 1.0).abs());
        }
    }
    Outcome {
        passed: worst_all <= 0.05 && improving && worst_torsion <= 0.02,
        detail: format!(
            "n=256 worst {worst_all:.1e}; window ({d_min:.2e}, 0.75) n=256 -> 512: {}; torsion residual {worst_torsion:.1e}",
            table.join(", ")
        ),
    }
}

fn prop_bands() -> Outcome {
    let alpha = a(0.25);
    let crit = CriticalExponents::compute(alpha, 1e-10).unwrap();
    let tau1 = crit.tau1.unwrap();
    let g = grid(512);
    let lo = window_nodes(&g, (0.0, f64::INFINITY)).iter().map(|&i| g.dist_c(i)).fold(f64::INFINITY, f64::min);
    let window = (lo, 0.25 * DEFAULT_DELTA);
    let neg = |v: Vec<f64>| v.into_iter().map(|x| -x).collect::<Vec<f64>>();

    let below = check_band(&g, &neg(apply_v_tau(alpha, t(-0.8), &g).unwrap()), -0.8 - 0.5, window).unwrap();
    let below_ok = below.all_positive() && below.spread() <= 10.0;
    let above = check_band(&g, &neg(apply_v_tau(alpha, t(-0.25), &g).unwrap()), -0.25 - 0.5, window).unwrap();
    let above_ok = above.all_negative();

    let growth = tau1.min(2.0 * tau1 - 0.5 + 1.0);
    let bound = |n: usize| {
        let gn = grid(n);
        check_band(&gn, &apply_v_tau(alpha, t(tau1), &gn).unwrap(), growth, window).unwrap().bound()
    };
    let (b1, b2) = (bound(512), bound(1024));
    let stable = (b1 - b2).abs() <= 0.1 * b2;
    Outcome {
        passed: below_ok && above_ok && stable,
        detail: format!(
            "window ({lo:.2e}, {:.4}); tau=-0.8 band [{:.3}, {:.3}] spread {:.2}; tau=-0.25 ratios [{:.3}, {:.3}]; tau1 bound {b1:.4} (n=512) vs {b2:.4} (n=1024)",
            window.1,
            below.min_ratio,
            below.max_ratio,
            below.spread(),
            above.min_ratio,
            above.max_ratio
        ),
    }
}

fn solve_instance(alpha: f64, p: f64) -> (bool, String) {
    let g = grid(512);
    let opts = SolverOptions::default();
    let pair = default_sub_super(a(alpha), p, g.clone(), &opts).unwrap();
    let spec = ProblemSpec::new(p, pair.operator.clone(), pair.sub.clone(), pair.super_.clone(), opts).unwrap();
    let report = solve_blowup(&spec, 8, deepest_level(&g, 8).unwrap()).unwrap();
    let window = (1e-3, 5e-2);
    let fit = fit_rate(report.solution(), window).unwrap().pooled.exponent;
    let half = fit_rate(report.solution(), (window.0, 0.5 * window.1)).unwrap().pooled.exponent;
    let rate = -2.0 * alpha / (p - 1.0);
    let ok = report.converged
        && report.ordering_ok
        && report.monotone_ok
        && (fit - rate).abs() <= 0.05
        && (fit - half).abs() <= 0.02;
    let detail = format!(
        "(alpha, p) = ({alpha}, {p}): {} levels, converged {} ordered {} monotone {}, exponent {fit:.4} vs {rate:.4}, drift {:.4}",
        report.n_exhaustion_levels,
        report.converged,
        report.ordering_ok,
        report.monotone_ok,
        (fit - half).abs()
    );
    (ok, detail)
}

fn end_to_end() -> Outcome {
    // α = 1/2 ≥ α₀: the zone p > 1 + 2α is unbounded, take p = 2 + 2α.
    let wide = 0.5;
    let p_wide = 2.0 + 2.0 * wide;
    // α = 1/4 < α₀: midpoint of 1 + 2α < p < 1 − 2α/τ₁.
    let narrow = 0.25;
    let crit = CriticalExponents::compute(a(narrow), 1e-10).unwrap();
    let p_narrow = 0.5 * ((1.0 + 2.0 * narrow) + (1.0 - 2.0 * narrow / crit.tau1.unwrap()));
    let in_zone = [(wide, p_wide), (narrow, p_narrow)].iter().all(|&(al, p)| {
        let c = CriticalExponents::compute(a(al), 1e-10).unwrap();
        classify_with(&c, p, None).unwrap().kind == RegimeKind::UniqueExistence
    });
    let (ok1, d1) = solve_instance(wide, p_wide);
    let (ok2, d2) = solve_instance(narrow, p_narrow);
    Outcome { passed: in_zone && ok1 && ok2, detail: format!("{d1}; {d2}") }
}

fn audits() -> Outcome {
    let g = grid(512);
    let cases = [(0.25, 1.75, -0.25, Zone::One), (0.75, 3.0, -0.3, Zone::Two), (0.75, 3.0, -0.9, Zone::Three)];
    let mut passed = true;
    let mut parts = Vec::new();
    for (al, p, tau, zone) in cases {
        let crit = CriticalExponents::compute(a(al), 1e-10).unwrap();
        match audit_nonexistence_with(&crit, p, t(tau), &g) {
            Ok(r) => {
                let ok = r.passed && r.zone == zone && r.mu_growth_linear;
                passed &= ok;
                let mus: Vec<String> = r.entries.iter().map(|e| format!("{:.3e}", e.mu)).collect();
                parts.push(format!("{zone:?} ({al},{p},{tau}) {}: mu = [{}]", if ok { "ok" } else { "FAILED" }, mus.join(", ")));
            }
            Err(e) => {
                passed = false;
                parts.push(format!("{zone:?} ({al},{p},{tau}) error: {e}"));
            }
        }
    }
    Outcome { passed, detail: parts.join("; ") }
}

fn run_cli(args: &[&str]) -> Vec<u8> {
    let out = Command::new(env!("CARGO_BIN_EXE_blowup")).args(args).output().expect("blowup runs");
    assert!(out.status.success(), "blowup {args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    out.stdout
}

fn read_dir_sorted(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap())
        })
        .collect();
    files.sort();
    files
}

fn determinism() -> Outcome {
    let commands: [&[&str]; 4] = [
        &["specfun", "--alpha", "0.25,0.75", "--tau", "-0.9:0:0.3"],
        &["critical", "--alpha", "0.2,0.4,0.6", "--no-timestamp"],
        &["classify", "--alpha", "0.25", "--p", "1.75", "--tau", "-0.5"],
        &["audit", "--alpha", "0.75", "--p", "3", "--tau", "-0.3", "--n-per-side", "512", "--no-timestamp"],
    ];
    let mut same = commands.iter().all(|args| run_cli(args) == run_cli(args));
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    for d in &dirs {
        let out = d.path().join("run");
        run_cli(&["solve", "--alpha", "0.5", "--p", "3", "--n-per-side", "128", "--schedule", "8:max", "--no-timestamp", "--out", out.to_str().unwrap()]);
    }
    let (r1, r2) = (read_dir_sorted(&dirs[0].path().join("run")), read_dir_sorted(&dirs[1].path().join("run")));
    same &= r1 == r2 && r1.len() >= 3;
    Outcome { passed: same, detail: format!("5 commands run twice, solve wrote {} files, byte-identical: {same}", r1.len()) }
}

fn main() {
    let criteria: [Criterion; 8] = [
        ("1 special-function identities", Duration::from_secs(10), special_identities),
        ("2 convexity and sign structure", Duration::from_secs(30), convexity_and_signs),
        ("3 critical exponents", Duration::from_secs(60), critical_exponents),
        ("4 operator fidelity", Duration::from_secs(120), operator_fidelity),
        ("5 comparison-profile bands", Duration::from_secs(120), prop_bands),
        ("6 end-to-end blow-up solve", Duration::from_secs(300), end_to_end),
        ("7 nonexistence audits", Duration::from_secs(180), audits),
        ("8 determinism", Duration::from_secs(300), determinism),
    ];
    let mut failures = 0;
    for (name, limit, run) in criteria {
        let start = Instant::now();
        let outcome = run();
        let elapsed = start.elapsed();
        let passed = outcome.passed && elapsed <= limit;
        if !passed {
            failures += 1;
        }
        println!(
            "criterion {name}: {} in {:.1}s (limit {}s) | {}",
            if passed { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64(),
            limit.as_secs(),
            outcome.detail
        );
    }
    if failures > 0 {
        eprintln!("{failures} acceptance criteria failed");
        std::process::exit(1);
    }
}
