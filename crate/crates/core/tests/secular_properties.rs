use num_complex::Complex64;
use proptest::prelude::*;
use ptwell::*;

fn params() -> impl Strategy<Value = WellParameters> {
    (0.05f64..0.95, 0.0f64..200.0, -50.0f64..50.0)
        .prop_map(|(a, w, e)| WellParameters::new(a, w, e).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn secular_is_odd_and_real(p in params(), k in 0.05f64..60.0) {
        let plus = secular_det(&p, Complex64::new(k, 0.0)).unwrap().f;
        let minus = secular_det(&p, Complex64::new(-k, 0.0)).unwrap().f;
        let scale = p.scale(Complex64::new(k, 0.0));
        prop_assert!(plus.im.abs() <= 1e-13 * scale);
        prop_assert!((plus + minus).norm() <= 1e-13 * scale);
    }

    #[test]
    fn entire_function_commutes_with_conjugation(p in params(), re in 0.0f64..40.0, im in -2.0f64..2.0) {
        let z = Complex64::new(re, im);
        let h = entire_secular(&p, z);
        let hc = entire_secular(&p, z.conj());
        prop_assert!((h.conj() - hc).norm() <= 1e-14 * h.norm().max(1e-300));
    }

    #[test]
    fn factored_form_matches_determinant(p in params(), k in 0.1f64..60.0) {
        let det = secular_det(&p, Complex64::new(k, 0.0)).unwrap().f.re;
        let fac = secular(&p, k);
        let scale = p.scale(Complex64::new(k, 0.0));
        prop_assert!((det - fac).abs() <= 1e-12 * scale, "{det} vs {fac}");
    }

    #[test]
    fn eta_sign_does_not_matter(p in params(), k in 0.1f64..60.0) {
        let q = WellParameters::new(p.a(), p.omega(), -p.eta()).unwrap();
        prop_assert_eq!(secular(&p, k).to_bits(), secular(&q, k).to_bits());
    }
}

#[test]
fn eta_sign_gives_identical_spectra() {
    let p = WellParameters::new(0.65, 150.0, 20.0).unwrap();
    let q = WellParameters::new(0.65, 150.0, -20.0).unwrap();
    let cfg = ScanConfig::for_parameters(&p, 0.0, 40.0).unwrap();
    let sp = compute_spectrum(&p, &cfg, true).unwrap();
    let sq = compute_spectrum(&q, &cfg, true).unwrap();
    assert_eq!(sp.levels, sq.levels);
    assert_eq!(sp.negative_levels, sq.negative_levels);
}
