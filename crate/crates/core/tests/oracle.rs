use num_complex::Complex64;
use ptwell::analysis::figure_parameters;
use ptwell::oracle::{matching_level, RegularizedProblem};
use ptwell::*;

#[test]
fn weak_coupling_levels_agree_with_shooting() {
    let (p, _) = figure_parameters(1).unwrap();
    let rp = RegularizedProblem::with_sigma(p, 1e-3).unwrap();
    for n in 1..=5 {
        let e = matching_level(&p, n).unwrap();
        let r = shoot_eigenvalue(&rp, Complex64::new(e, 0.0)).unwrap();
        assert!(
            (r.energy.re - e).abs() < 1e-2 * e,
            "level {n}: {} vs {e}",
            r.energy
        );
        assert!(r.energy.im.abs() < 1e-6 * r.energy.norm());
        // complex seeds come back to the real axis
        let c = shoot_eigenvalue(&rp, Complex64::new(e, 0.1)).unwrap();
        assert!(c.energy.im.abs() < 1e-6 * c.energy.norm());
        assert!((c.energy - r.energy).norm() < 1e-8 * e);
    }
}

#[test]
fn unconverged_energy_leaves_a_boundary_mismatch() {
    let (p, _) = figure_parameters(1).unwrap();
    let rp = RegularizedProblem::with_sigma(p, 1e-3).unwrap();
    let e = matching_level(&p, 1).unwrap();
    assert!(integrate_ode(&rp, Complex64::new(e, 0.0)).mismatch() < 1e-2);
}

#[test]
fn convergence_study_approaches_the_matching_root() {
    let (p, _) = figure_parameters(1).unwrap();
    let s = convergence_study(&p, 1, &[4e-3, 2e-3, 1e-3]).unwrap();
    assert!(s.monotone, "{:?}", s.rows);
    let before = (s.rows[2].energy - s.matching_energy).norm();
    assert!((s.extrapolated - s.matching_energy).norm() < before);
}

#[test]
fn bare_box_study_is_flat() {
    let p = WellParameters::new(0.5, 0.0, 0.0).unwrap();
    let s = convergence_study(&p, 2, &[4e-3, 2e-3, 1e-3]).unwrap();
    for r in &s.rows {
        assert!((r.energy - s.matching_energy).norm() < 1e-9 * s.matching_energy);
    }
}

#[test]
fn moderate_coupling_extrapolates_at_small_width() {
    // w^2 * sigma must be small for the Gaussians to act like deltas
    let (p, _) = figure_parameters(5).unwrap();
    let s = convergence_study(&p, 1, &[5e-4, 2.5e-4, 1.25e-4]).unwrap();
    assert!(
        (s.extrapolated.re - s.matching_energy).abs() < 1e-2 * s.matching_energy,
        "{s:?}"
    );
}

#[test]
fn step_halving_changes_little() {
    let (p, _) = figure_parameters(1).unwrap();
    let e = matching_level(&p, 3).unwrap();
    let seed = Complex64::new(e, 0.0);
    let shoot = |h: f64| {
        let rp = RegularizedProblem::new(p, 2e-3, h).unwrap();
        shoot_eigenvalue(&rp, seed).unwrap().energy
    };
    let (e1, e2) = (shoot(2e-4), shoot(1e-4));
    // fourth order: the step error at h = sigma/10 is far below the regularization error
    assert!((e1 - e2).norm() < 1e-7 * e);
}
