//! Shooting on a regularized potential, independent of the matching method.
//!
//! Each point interaction is replaced by a unit-mass Gaussian of width σ
//! with the same complex strength, and `-ψ'' + V ψ = E ψ` is integrated
//! from `x = -1` with classical RK4.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::realroots::find_level;
use crate::secular::WellParameters;

pub const SHOOT_TOL: f64 = 1e-10;
pub const SHOOT_BUDGET: usize = 60;
const RESCALE_AT: f64 = 1e100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegularizedProblem {
    parameters: WellParameters,
    sigma: f64,
    grid_step: f64,
    #[serde(skip)]
    potential: Vec<Complex64>,
}

impl RegularizedProblem {
    /// Requires `σ ≤ min(a, 1-a)/8` and `h ≤ σ/10`. The step is shrunk so
    /// that a whole number of steps spans `(-1, 1)`.
    pub fn new(parameters: WellParameters, sigma: f64, grid_step: f64) -> Result<Self> {
        let a = parameters.a();
        if !(sigma > 0.0) || sigma > (1.0 - a) / 8.0 || sigma > a / 8.0 {
            return Err(Error::InvalidConfig(format!(
                "sigma = {sigma} must lie in (0, min(a, 1-a)/8] for a = {a}"
            )));
        }
        if !(grid_step > 0.0) || grid_step > sigma / 10.0 {
            return Err(Error::InvalidConfig(format!(
                "grid step {grid_step} must lie in (0, sigma/10]"
            )));
        }
        let steps = (2.0 / grid_step).ceil();
        let h = 2.0 / steps;
        let n = 2 * steps as usize + 1;
        // samples at the half-step grid x_j = -1 + j h/2
        let norm = 1.0 / (sigma * (2.0 * PI).sqrt());
        let left = Complex64::new(-parameters.omega_sq(), -parameters.eta());
        let right = Complex64::new(-parameters.omega_sq(), parameters.eta());
        let bump = |d: f64| norm * (-0.5 * (d / sigma).powi(2)).exp();
        let potential = (0..n)
            .map(|j| {
                let x = -1.0 + 0.5 * h * j as f64;
                left * bump(x + a) + right * bump(x - a)
            })
            .collect();
        Ok(RegularizedProblem {
            parameters,
            sigma,
            grid_step: h,
            potential,
        })
    }

    /// Problem with the default step `h = σ/10`.
    pub fn with_sigma(parameters: WellParameters, sigma: f64) -> Result<Self> {
        RegularizedProblem::new(parameters, sigma, sigma / 10.0)
    }

    pub fn parameters(&self) -> &WellParameters {
        &self.parameters
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn grid_step(&self) -> f64 {
        self.grid_step
    }
}

/// End state of one integration. `psi_end` and `max_modulus` share a scale
/// factor `e^{log_scale}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Shot {
    pub psi_end: Complex64,
    pub max_modulus: f64,
    pub log_scale: f64,
}

impl Shot {
    /// `|ψ(1)| / max |ψ|`.
    pub fn mismatch(&self) -> f64 {
        self.psi_end.norm() / self.max_modulus
    }

    /// `ψ(1)` in absolute units, may overflow.
    pub fn psi_end_unscaled(&self) -> Complex64 {
        self.psi_end * self.log_scale.exp()
    }
}

/// Integrates from `ψ(-1) = 0, ψ'(-1) = 1` to `x = 1`.
pub fn integrate_ode(rp: &RegularizedProblem, energy: Complex64) -> Shot {
    let h = rp.grid_step;
    let v = &rp.potential;
    let steps = (v.len() - 1) / 2;
    let mut psi = Complex64::new(0.0, 0.0);
    let mut dpsi = Complex64::new(1.0, 0.0);
    let mut max_modulus: f64 = 0.0;
    let mut log_scale = 0.0;
    let rhs = |j: usize, p: Complex64| (v[j] - energy) * p;
    for i in 0..steps {
        let j = 2 * i;
        let k1p = dpsi;
        let k1d = rhs(j, psi);
        let k2p = dpsi + 0.5 * h * k1d;
        let k2d = rhs(j + 1, psi + 0.5 * h * k1p);
        let k3p = dpsi + 0.5 * h * k2d;
        let k3d = rhs(j + 1, psi + 0.5 * h * k2p);
        let k4p = dpsi + h * k3d;
        let k4d = rhs(j + 2, psi + h * k3p);
        psi += h / 6.0 * (k1p + 2.0 * k2p + 2.0 * k3p + k4p);
        dpsi += h / 6.0 * (k1d + 2.0 * k2d + 2.0 * k3d + k4d);
        let m = psi.norm();
        if m.max(dpsi.norm()) > RESCALE_AT {
            let f = 1.0 / RESCALE_AT;
            psi *= f;
            dpsi *= f;
            max_modulus *= f;
            log_scale += RESCALE_AT.ln();
        }
        max_modulus = max_modulus.max(psi.norm());
    }
    Shot {
        psi_end: psi,
        max_modulus,
        log_scale,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShootResult {
    pub energy: Complex64,
    pub iterations: usize,
    pub mismatch: f64,
}

/// Level spacing near `E`, used to detect jumps to another level.
fn local_spacing(e: Complex64) -> f64 {
    PI * e.norm().sqrt().max(1.0)
}

/// Complex Newton on `ψ(1; E) = 0` from `seed`.
pub fn shoot_eigenvalue(rp: &RegularizedProblem, seed: Complex64) -> Result<ShootResult> {
    let mut e = seed;
    for it in 0..SHOOT_BUDGET {
        let shot = integrate_ode(rp, e);
        if shot.mismatch() < SHOOT_TOL {
            if (e - seed).norm() > local_spacing(seed) {
                return Err(Error::LevelJump {
                    seed: format!("{seed}"),
                    found: format!("{e}"),
                });
            }
            return Ok(ShootResult {
                energy: e,
                iterations: it,
                mismatch: shot.mismatch(),
            });
        }
        let de = 1e-6 * e.norm().max(1.0);
        let plus = integrate_ode(rp, e + de);
        let minus = integrate_ode(rp, e - de);
        let rel = |s: &Shot| s.psi_end * (s.log_scale - shot.log_scale).exp();
        let slope = (rel(&plus) - rel(&minus)) / (2.0 * de);
        if !(slope.norm() > 0.0) || !slope.norm().is_finite() {
            break;
        }
        e -= shot.psi_end / slope;
        if !(e.re.is_finite() && e.im.is_finite()) {
            break;
        }
    }
    Err(Error::NoConvergence {
        what: "shooting",
        iterations: SHOOT_BUDGET,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub sigma: f64,
    pub energy: Complex64,
    /// `E*(σ) - κₙ²`.
    pub delta_to_matching: Complex64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceStudy {
    pub level: usize,
    pub matching_energy: f64,
    pub rows: Vec<ConvergenceRow>,
    /// First-order Richardson extrapolation `σ → 0` from the last two rows.
    pub extrapolated: Complex64,
    /// `|E*(σ) - κₙ²|` decreases along the table.
    pub monotone: bool,
}

/// `κₙ²` of positive level `level` (1-based) from the matching method.
pub fn matching_level(p: &WellParameters, level: usize) -> Result<f64> {
    Ok(find_level(p, level)?.energy)
}

/// Shoots level `level` for each σ (decreasing) with `h = σ/10`.
pub fn convergence_study(
    p: &WellParameters,
    level: usize,
    sigmas: &[f64],
) -> Result<ConvergenceStudy> {
    if sigmas.len() < 2 || sigmas.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::InvalidConfig(
            "convergence study needs at least two strictly decreasing sigmas".into(),
        ));
    }
    let target = matching_level(p, level)?;
    let problems = sigmas
        .iter()
        .map(|&s| RegularizedProblem::with_sigma(*p, s))
        .collect::<Result<Vec<_>>>()?;
    let seed = Complex64::new(target, 0.0);
    let shots = problems
        .par_iter()
        .map(|rp| shoot_eigenvalue(rp, seed))
        .collect::<Result<Vec<_>>>()?;
    let rows: Vec<ConvergenceRow> = sigmas
        .iter()
        .zip(&shots)
        .map(|(&sigma, r)| ConvergenceRow {
            sigma,
            energy: r.energy,
            delta_to_matching: r.energy - target,
        })
        .collect();
    let n = rows.len();
    let (s1, e1) = (rows[n - 2].sigma, rows[n - 2].energy);
    let (s2, e2) = (rows[n - 1].sigma, rows[n - 1].energy);
    let extrapolated = (e2 * s1 - e1 * s2) / (s1 - s2);
    let monotone = rows
        .windows(2)
        .all(|w| w[1].delta_to_matching.norm() < w[0].delta_to_matching.norm());
    Ok(ConvergenceStudy {
        level,
        matching_energy: target,
        rows,
        extrapolated,
        monotone,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    fn bare() -> WellParameters {
        WellParameters::new(0.5, 0.0, 0.0).unwrap()
    }

    #[test]
    fn problem_validation() {
        let p = WellParameters::new(0.95, 1.5, 20.0).unwrap();
        assert!(RegularizedProblem::new(p, 1e-2, 1e-3).is_err()); // σ > (1-a)/8
        assert!(RegularizedProblem::new(p, 1e-3, 2e-4).is_err());
        assert!(RegularizedProblem::new(p, 1e-3, 1e-4).is_ok());
        assert!(RegularizedProblem::new(p, 0.0, 1e-4).is_err());
    }

    #[test]
    fn bare_box_eigenvalue_and_non_eigenvalue() {
        let rp = RegularizedProblem::with_sigma(bare(), 1e-2).unwrap();
        let on = integrate_ode(&rp, Complex64::new(FRAC_PI_2 * FRAC_PI_2, 0.0));
        assert!(on.mismatch() < 1e-10);
        let off = integrate_ode(&rp, Complex64::new(2.0, 0.0));
        assert!(off.mismatch() > 1e-2);
    }

    #[test]
    fn bare_box_shooting() {
        let rp = RegularizedProblem::with_sigma(bare(), 1e-2).unwrap();
        let r = shoot_eigenvalue(&rp, Complex64::new(2.4, 0.0)).unwrap();
        assert!((r.energy - FRAC_PI_2 * FRAC_PI_2).norm() < 1e-9);
        let r = shoot_eigenvalue(&rp, Complex64::new(9.5, 0.0)).unwrap();
        assert!((r.energy - PI * PI).norm() < 1e-9);
    }

    #[test]
    fn rescaling_keeps_growing_solutions_finite() {
        let rp = RegularizedProblem::with_sigma(bare(), 1e-2).unwrap();
        let s = integrate_ode(&rp, Complex64::new(-1e5, 0.0));
        assert!(s.log_scale > 0.0);
        assert!(s.psi_end.norm().is_finite() && s.max_modulus.is_finite());
    }

    #[test]
    fn level_jump_is_reported() {
        let rp = RegularizedProblem::with_sigma(bare(), 1e-2).unwrap();
        // halfway between the first two levels, Newton lands far away or fails
        match shoot_eigenvalue(&rp, Complex64::new(0.01, 0.0)) {
            Ok(r) => assert!((r.energy - FRAC_PI_2 * FRAC_PI_2).norm() < PI),
            Err(e) => assert!(matches!(
                e,
                Error::LevelJump { .. } | Error::NoConvergence { .. }
            )),
        }
    }

    #[test]
    fn convergence_study_rejects_unsorted_sigmas() {
        assert!(convergence_study(&bare(), 1, &[1e-3, 2e-3]).is_err());
        assert!(convergence_study(&bare(), 1, &[1e-3]).is_err());
        assert!(matches!(
            matching_level(&bare(), 0),
            Err(Error::LevelNotFound(0))
        ));
    }
}
