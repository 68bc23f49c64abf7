use num_complex::Complex64;
use ptwell::analysis::figure_parameters;
use ptwell::*;

fn levels(id: u32, hi: f64) -> (WellParameters, Vec<EigenvalueRecord>) {
    let (p, _) = figure_parameters(id).unwrap();
    let cfg = ScanConfig::for_parameters(&p, 0.0, hi).unwrap();
    (p, compute_spectrum(&p, &cfg, false).unwrap().levels)
}

/// Worst relative violation of `ψ'(x+) - ψ'(x-) = g ψ(x)` at `x = ∓a`.
fn jump_residual(psi: &Wavefunction, p: &WellParameters) -> f64 {
    let a = p.a();
    [
        (-a, Complex64::new(-p.omega_sq(), -p.eta())),
        (a, Complex64::new(-p.omega_sq(), p.eta())),
    ]
    .iter()
    .map(|&(x, g)| {
        let left = psi.evaluate_derivative_side(x, Side::Left).unwrap();
        let right = psi.evaluate_derivative_side(x, Side::Right).unwrap();
        let rhs = g * psi.evaluate(x).unwrap();
        (right - left - rhs).norm() / left.norm().max(right.norm()).max(rhs.norm())
    })
    .fold(0.0, f64::max)
}

#[test]
fn reconstructed_states_satisfy_the_matching_conditions() {
    for (id, hi, take) in [(1, 15.0, 4), (5, 30.0, 3), (6, 30.0, 3)] {
        let (p, ls) = levels(id, hi);
        for l in ls.iter().take(take) {
            let psi = eigenfunction(&p, l.kappa, l.kappa_lo).unwrap();
            let scale = psi.max_modulus(2001);
            assert!(psi.evaluate(-1.0).unwrap().norm() < 1e-12 * scale);
            assert!(psi.evaluate(1.0).unwrap().norm() < 1e-12 * scale);
            for x in [-p.a(), p.a()] {
                let l_ = psi.evaluate_side(x, Side::Left).unwrap();
                let r_ = psi.evaluate_side(x, Side::Right).unwrap();
                assert!((l_ - r_).norm() < 1e-10 * scale, "fig {id} n {}", l.n);
            }
            assert!(
                jump_residual(&psi, &p) < 1e-8,
                "fig {id} n {}: {}",
                l.n,
                jump_residual(&psi, &p)
            );
        }
    }
}

#[test]
fn ground_state_parity_and_pseudo_norm() {
    let (p, ls) = levels(1, 15.0);
    let psi = eigenfunction(&p, ls[0].kappa, ls[0].kappa_lo).unwrap();
    let parts = parity_decompose(&psi).unwrap();
    assert!(parts.residual < 1e-10);
    let scale = psi.max_modulus(1001);
    for x in [0.1, 0.5, 0.97] {
        let s = parts.psi_s(x).unwrap();
        let a = parts.psi_a(x).unwrap();
        assert!(s.abs() > 1e-6 * scale && a.abs() > 1e-6 * scale);
    }
    let (l2, pt) = norms(&psi).unwrap();
    assert!(l2 > 0.0);
    assert!(pt.im.abs() < 1e-9 * pt.norm(), "{pt}");
}

#[test]
fn pt_symmetry_of_the_state() {
    // PT psi(x) = conj psi(-x) reproduces the state up to a phase
    let (p, ls) = levels(5, 30.0);
    let psi = eigenfunction(&p, ls[2].kappa, ls[2].kappa_lo).unwrap();
    let x0 = 0.3;
    let phase = psi.evaluate(-x0).unwrap().conj() / psi.evaluate(x0).unwrap();
    assert!((phase.norm() - 1.0).abs() < 1e-9);
    for x in [-0.9, -0.4, 0.0, 0.2, 0.8] {
        let lhs = psi.evaluate(-x).unwrap().conj();
        let rhs = phase * psi.evaluate(x).unwrap();
        assert!((lhs - rhs).norm() < 1e-9 * psi.max_modulus(1001));
    }
}
