use std::sync::Arc;

use blowup_core::mesh::{Grid, DEFAULT_DELTA};
use blowup_core::profiles::solve_torsion;
use blowup_core::Alpha;
use statrs::function::gamma::gamma;

/// For the kernel `|x − y|^{−1−2α}` without normalising constant,
/// `(1 − x²)^α / (|Γ(−α)| Γ(1 + α))` solves the torsion problem on (−1, 1).
fn exact(alpha: f64, x: f64) -> f64 {
    (1.0 - x * x).powf(alpha) / (gamma(-alpha).abs() * gamma(1.0 + alpha))
}

#[test]
fn torsion_matches_closed_form_away_from_boundary() {
    for alpha in [0.25, 0.5, 0.75] {
        let grid = Arc::new(Grid::build_graded(128, 2.0, DEFAULT_DELTA).unwrap());
        let t = solve_torsion(Alpha::new(alpha).unwrap(), grid.clone()).unwrap();
        let mut worst: f64 = 0.0;
        for (i, &x) in grid.nodes().iter().enumerate() {
            if 1.0 - x.abs() >= 0.1 {
                worst = worst.max((t.values()[i] - exact(alpha, x)).abs() / exact(alpha, x));
            }
        }
        println!("alpha {alpha}: worst relative error {worst:.3e}");
        assert!(worst < 0.02, "alpha {alpha}: {worst}");
    }
}
