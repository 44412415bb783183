//! Special functions against independent references: the Gamma-function
//! closed form of c, the Beta-function form of c − C and high-precision
//! tabulated values.

use blowup_core::specfun::{
    c_second_derivative, c_tau, find_alpha0, find_tau0, find_tau1, shifted_power_integral,
    Alpha, C_tau, T_alpha, Tau,
};
use statrs::function::beta::beta;
use statrs::function::gamma::gamma;

fn a(v: f64) -> Alpha {
    Alpha::new(v).unwrap()
}
fn t(v: f64) -> Tau {
    Tau::new(v).unwrap()
}

/// c(τ) from Gamma functions; valid away from the pole of the last factor.
fn c_closed_form(alpha: f64, tau: f64) -> f64 {
    let sqrt_pi = std::f64::consts::PI.sqrt();
    let g_neg_alpha = gamma(1.0 - alpha) / alpha;
    -sqrt_pi * g_neg_alpha * gamma(alpha - tau / 2.0) * gamma((1.0 + tau) / 2.0)
        / (gamma(0.5 + alpha) * gamma(-tau / 2.0) * gamma((1.0 + tau) / 2.0 - alpha))
}

fn rel(x: f64, y: f64) -> f64 {
    (x - y).abs() / y.abs()
}

#[test]
fn c_matches_tabulated_references() {
    let table = [
        (0.3, -0.5, 0.516_063_789_902_987_4),
        (0.7, -0.2, 0.517_573_758_857_672_5),
        (0.75, -0.8, 9.657_220_352_408_189),
        (0.1, -0.3, -5.206_250_216_489_604),
        (0.05, -0.5, -14.743_013_771_813_463),
        (0.25, -0.999, 1_995.630_947_017_641),
        (0.9, -0.95, 46.120_736_097_584_19),
        (0.25, -0.75, 3.708_149_354_602_744),
        (0.25, -0.25, -0.701_854_299_883_226_2),
        (0.5, -0.5, std::f64::consts::FRAC_PI_2),
    ];
    for (alpha, tau, expect) in table {
        let got = c_tau(a(alpha), t(tau)).unwrap();
        assert!(rel(got, expect) < 1e-9, "c({alpha}, {tau}) = {got}, expected {expect}");
    }
}

#[test]
fn c_matches_gamma_closed_form_on_grid() {
    for i in 1..10 {
        let alpha = 0.1 * i as f64;
        for j in 1..10 {
            let tau = -0.1 * j as f64 + 0.013;
            let expect = c_closed_form(alpha, tau);
            let got = c_tau(a(alpha), t(tau)).unwrap();
            let scale = expect.abs().max(1e-3);
            assert!((got - expect).abs() < 1e-8 * scale, "c({alpha}, {tau}) = {got} vs {expect}");
        }
    }
}

#[test]
fn c_vanishes_on_the_line_tau_equals_two_alpha_minus_one() {
    let got = c_tau(a(0.25), t(-0.5)).unwrap();
    assert!(got.abs() < 1e-11, "{got}");
}

#[test]
fn difference_of_c_and_truncated_c_is_a_beta_function() {
    for (alpha, tau) in [(0.25, -0.5), (0.6, -0.9), (0.9, -0.1), (0.05, -0.3)] {
        let expect = beta(tau + 1.0, 2.0 * alpha - tau);
        let direct = shifted_power_integral(a(alpha), t(tau)).unwrap();
        assert!(rel(direct, expect) < 1e-10, "{alpha} {tau}: {direct} vs {expect}");
        let diff = c_tau(a(alpha), t(tau)).unwrap() - C_tau(a(alpha), t(tau)).unwrap();
        assert!(rel(diff, expect) < 1e-9, "{alpha} {tau}: {diff} vs {expect}");
    }
}

#[test]
fn truncated_c_at_zero() {
    for alpha in [0.1, 0.5, 0.9] {
        let got = C_tau(a(alpha), t(0.0)).unwrap();
        assert!(rel(got, -1.0 / (2.0 * alpha)) < 1e-11, "{got}");
    }
}

#[test]
fn log_kernel_matches_tabulated_references() {
    let table = [
        (0.1, 48.344_139_952_320_13),
        (0.49, 0.100_743_394_419_949_4),
        (0.51, -0.096_792_673_070_147_5),
        (0.9, -5.371_571_105_813_347),
    ];
    for (alpha, expect) in table {
        let got = T_alpha(a(alpha)).unwrap();
        assert!(rel(got, expect) < 1e-9, "T({alpha}) = {got}, expected {expect}");
    }
}

#[test]
fn log_kernel_is_the_derivative_at_zero() {
    let h = 1e-5;
    for alpha in [0.2, 0.6] {
        let fd = -c_tau(a(alpha), t(-h)).unwrap() / h;
        let exact = T_alpha(a(alpha)).unwrap();
        assert!((fd - exact).abs() < 1e-3 * exact.abs().max(1.0), "{alpha}: {fd} vs {exact}");
    }
}

#[test]
fn convexity_integral_matches_second_difference() {
    for (alpha, tau) in [(0.3, -0.5), (0.7, -0.2)] {
        let h = 1e-3;
        let c = |x: f64| c_tau(a(alpha), t(x)).unwrap();
        let fd = (c(tau + h) - 2.0 * c(tau) + c(tau - h)) / (h * h);
        let got = c_second_derivative(a(alpha), t(tau)).unwrap();
        assert!(got > 0.0);
        assert!(rel(fd, got) < 1e-4, "{alpha} {tau}: {fd} vs {got}");
    }
}

#[test]
fn critical_exponents_match_closed_forms() {
    let a0 = find_alpha0(1e-8).unwrap();
    assert!((a0 - 0.5).abs() < 1e-7, "{a0}");
    for alpha in [0.1, 0.25, 0.4] {
        let tau1 = find_tau1(a(alpha), 1e-10).unwrap();
        assert!((tau1 - (2.0 * alpha - 1.0)).abs() < 1e-8, "{alpha}: {tau1}");
        let tau0 = find_tau0(a(alpha), 1e-10).unwrap();
        assert!((tau0 - (alpha - 1.0)).abs() < 1e-8, "{alpha}: {tau0}");
    }
    let tau0 = find_tau0(a(0.6), 1e-10).unwrap();
    assert!((tau0 + 0.4).abs() < 1e-8, "{tau0}");
}
