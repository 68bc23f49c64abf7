use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

use ptwell::analysis::figure_parameters;
use ptwell::*;

fn spectrum(p: &WellParameters, lo: f64, hi: f64) -> SpectrumReport {
    let cfg = ScanConfig::for_parameters(p, lo, hi).unwrap();
    compute_spectrum(p, &cfg, false).unwrap()
}

#[test]
fn bare_box_roots_are_exact() {
    let p = WellParameters::new(0.5, 0.0, 0.0).unwrap();
    let s = spectrum(&p, 0.0, 20.0 * std::f64::consts::PI);
    assert_eq!(s.levels.len(), 39);
    for l in &s.levels {
        assert!((l.kappa - l.n as f64 * FRAC_PI_2).abs() < 1e-10, "{l:?}");
        assert_eq!(l.flag, LevelFlag::Regular);
    }
}

#[test]
fn weak_coupling_perturbs_the_box_spectrum_slightly() {
    let (p, _) = figure_parameters(1).unwrap();
    let s = spectrum(&p, 0.0, 15.0);
    assert_eq!(s.levels.len(), 9);
    for l in &s.levels {
        assert!(
            (l.kappa - l.n as f64 * FRAC_PI_2).abs() < FRAC_PI_4,
            "{l:?}"
        );
    }
    // first levels frozen from an mpmath evaluation of the determinant
    let expect = [
        1.611_315_957_710_015_8,
        3.222_330_370_183_893_2,
        4.832_724_996_957_305,
    ];
    for (l, e) in s.levels.iter().zip(expect) {
        assert!((l.kappa - e).abs() < 1e-12, "{} vs {e}", l.kappa);
    }
}

#[test]
fn first_root_is_stable_under_density_doubling() {
    let (p, _) = figure_parameters(1).unwrap();
    let cfg = ScanConfig::for_parameters(&p, 0.0, 15.0).unwrap();
    let a = compute_spectrum(&p, &cfg, false).unwrap();
    let b = compute_spectrum(
        &p,
        &cfg.with_density(2 * cfg.samples_per_unit).unwrap(),
        false,
    )
    .unwrap();
    assert_eq!(a.levels.len(), b.levels.len());
    for (x, y) in a.levels.iter().zip(&b.levels) {
        assert!((x.kappa - y.kappa).abs() < 1e-10);
    }
}

#[test]
fn quasi_degenerate_sites_split_into_two_roots() {
    let (p, _) = figure_parameters(6).unwrap();
    let cfg = ScanConfig::for_parameters(&p, 0.0, 40.0).unwrap();
    let scan = scan_brackets(&p, &cfg).unwrap();
    assert!(!scan.suspicious.is_empty());
    for site in &scan.suspicious {
        let r = resolve_cluster(&p, site).unwrap();
        assert_eq!(r.roots.len(), 2, "{site:?}");
        assert!(r.roots[0].kappa < r.roots[1].kappa || r.roots[0].kappa_lo < r.roots[1].kappa_lo);
    }
    let s = compute_spectrum(&p, &cfg, false).unwrap();
    assert!(s
        .levels
        .iter()
        .any(|l| l.flag == LevelFlag::QuasiDegeneratePairMember));
    assert!(s.complex_pairs.is_empty());
}

#[test]
fn strong_coupling_has_no_negative_levels() {
    // the two delta-bound states sit at E = -(w^2 +- i eta)^2 / 4, off the real axis
    let (p, _) = figure_parameters(2).unwrap();
    let cfg = ScanConfig::for_parameters(&p, 0.0, 10.0).unwrap();
    let s = compute_spectrum(&p, &cfg, true).unwrap();
    assert!(s.negative_levels.is_empty());
}

#[test]
fn eta_barely_matters_at_strong_coupling() {
    let (p, _) = figure_parameters(2).unwrap();
    let q = WellParameters::new(p.a(), p.omega(), 0.0).unwrap();
    let sp = spectrum(&p, 0.0, 60.0);
    let sq = spectrum(&q, 0.0, 60.0);
    assert_eq!(sp.levels.len(), sq.levels.len());
    for (x, y) in sp.levels.iter().zip(&sq.levels) {
        assert!(
            (x.kappa - y.kappa).abs() < 1e-6 * x.kappa,
            "{} vs {}",
            x.kappa,
            y.kappa
        );
    }
}

#[test]
fn levels_are_numbered_and_ordered() {
    for id in 1..=7 {
        let (p, (lo, hi)) = figure_parameters(id).unwrap();
        let s = spectrum(&p, lo, hi);
        for (i, l) in s.levels.iter().enumerate() {
            assert_eq!(l.n, i + 1);
            assert!((l.energy - l.kappa * l.kappa).abs() <= 4.0 * f64::EPSILON * l.energy);
        }
        for w in s.levels.windows(2) {
            assert!(w[1].gap_prev.unwrap() > 0.0, "fig {id}: {w:?}");
        }
    }
}
