//! Eigenfunctions from the nullspace of the matching system.
//!
//! ```text
//! ψ_L = (α - iβ) sin κ(x+1)            on (-1, -a)
//! ψ_C = γ cos κx + iδ sin κx           on (-a, a)
//! ψ_R = (α + iβ) sin κ(1-x)            on (a, 1)
//! ```
//!
//! With real κ the matching matrix is real, so the coefficients come out
//! real and `ψ = ψ_S + iψ_A` with `ψ_S` even and `ψ_A` odd.
//!
//! Full-pivot elimination decides whether the nullspace is one-dimensional;
//! the vector itself comes from the block structure of the matrix.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{null_vector, Mat4};
use crate::secular::{sin_cos_scaled_complex, WellParameters};

/// Last pivot over first pivot above this: κ is not an eigenvalue.
pub const NULL_TOL: f64 = 1e-6;
/// Third pivot over first pivot below this: two-dimensional nullspace.
pub const RANK2_TOL: f64 = 1e-10;
/// Pointwise tolerance of the parity identities, relative to `max |ψ|`.
pub const PARITY_TOL: f64 = 1e-10;
const QUAD_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    Left,
    Right,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Wavefunction {
    pub parameters: WellParameters,
    /// Eigen-momentum; the exact value is `kappa + kappa_lo`.
    pub kappa: Complex64,
    pub kappa_lo: f64,
    pub alpha: Complex64,
    pub beta: Complex64,
    pub gamma: Complex64,
    pub delta: Complex64,
    /// Pivot magnitudes of the elimination, largest first.
    pub pivots: [f64; 4],
}

/// `(sin, cos)` of `κ·len` with the split momentum.
fn trig(kappa: Complex64, kappa_lo: f64, len: f64) -> (Complex64, Complex64) {
    sin_cos_scaled_complex(kappa.re, Complex64::new(kappa_lo, kappa.im), len)
}

fn matrix(p: &WellParameters, kappa: Complex64, kappa_lo: f64) -> Mat4 {
    let k = kappa + kappa_lo;
    let (s1, c1) = trig(kappa, kappa_lo, p.outer_width());
    let (sa, ca) = trig(kappa, kappa_lo, p.a());
    let mu = c1 - p.omega_sq() / k * s1;
    let nu = p.eta() / k * s1;
    let z = Complex64::new(0.0, 0.0);
    [
        [s1, z, -ca, z],
        [z, s1, z, -sa],
        [-mu, nu, sa, z],
        [nu, mu, z, ca],
    ]
}

/// Coefficients `(α, β, γ, δ)` at an eigenvalue `kappa + kappa_lo`,
/// scaled so the largest one equals 1.
pub fn nullspace_coeffs(
    p: &WellParameters,
    kappa: Complex64,
    kappa_lo: f64,
) -> Result<Wavefunction> {
    if kappa.norm() == 0.0 {
        return Err(Error::SingularPoint);
    }
    let m = matrix(p, kappa, kappa_lo);
    let null = null_vector(&m);
    let pv = null.pivots;
    let label = || format!("{}", kappa + kappa_lo);
    if pv[2] <= RANK2_TOL * pv[0] {
        return Err(Error::DegenerateNullspace { kappa: label() });
    }
    let ratio = pv[3] / pv[0];
    if ratio > NULL_TOL {
        return Err(Error::NoNullspace {
            kappa: label(),
            ratio,
        });
    }
    let v = structured_null(&m).unwrap_or(null.vector);
    let big = v
        .iter()
        .copied()
        .max_by(|a, b| a.norm().total_cmp(&b.norm()))
        .unwrap_or(Complex64::new(1.0, 0.0));
    let c: Vec<Complex64> = v.iter().map(|x| x / big).collect();
    Ok(Wavefunction {
        parameters: *p,
        kappa,
        kappa_lo,
        alpha: c[0],
        beta: c[1],
        gamma: c[2],
        delta: c[3],
        pivots: pv,
    })
}

/// Null vector built from the block structure of the matching matrix.
///
/// Rows 1 and 2 tie `α` to `γ` and `β` to `δ`; each pair is reduced to one
/// unknown by dividing by the larger coefficient, and rows 3 and 4 become a
/// singular 2x2 system. Unlike the elimination vector, every component is
/// then accurate relative to its own size, which matters at strong coupling
/// where `ψ(±a) ~ κ/ω²`.
fn structured_null(m: &Mat4) -> Option<[Complex64; 4]> {
    let one = Complex64::new(1.0, 0.0);
    let (s1, ca, sa) = (m[0][0], -m[0][2], -m[1][3]);
    let (mu, nu) = (-m[2][0], m[2][1]);
    // α = pa·u, γ = pg·u and β = qb·w, δ = qd·w
    let (pa, pg) = if ca.norm() >= s1.norm() {
        (one, s1 / ca)
    } else {
        (ca / s1, one)
    };
    let (qb, qd) = if sa.norm() >= s1.norm() {
        (one, s1 / sa)
    } else {
        (sa / s1, one)
    };
    let r3 = [-mu * pa + sa * pg, nu * qb];
    let r4 = [nu * pa, mu * qb + ca * qd];
    let norm = |r: &[Complex64; 2]| r[0].norm().max(r[1].norm());
    let row = if norm(&r3) >= norm(&r4) { r3 } else { r4 };
    let (u, w) = if norm(&row) > 0.0 {
        (-row[1], row[0])
    } else {
        (one, Complex64::new(0.0, 0.0))
    };
    let v = [pa * u, qb * w, pg * u, qd * w];
    v.iter()
        .all(|z| z.re.is_finite() && z.im.is_finite())
        .then_some(v)
}

/// [`nullspace_coeffs`] for a real root.
pub fn eigenfunction(p: &WellParameters, kappa: f64, kappa_lo: f64) -> Result<Wavefunction> {
    nullspace_coeffs(p, Complex64::new(kappa, 0.0), kappa_lo)
}

impl Wavefunction {
    fn k(&self) -> Complex64 {
        self.kappa + self.kappa_lo
    }

    fn check(x: f64) -> Result<()> {
        if (-1.0..=1.0).contains(&x) {
            Ok(())
        } else {
            Err(Error::OutOfDomain(x))
        }
    }

    fn piece(&self, x: f64, side: Side) -> usize {
        let a = self.parameters.a();
        if x < -a || (x == -a && side == Side::Left) {
            0
        } else if x < a || (x == a && side == Side::Left) {
            1
        } else {
            2
        }
    }

    fn value_on(&self, piece: usize, x: f64) -> (Complex64, Complex64) {
        let i = Complex64::new(0.0, 1.0);
        let k = self.k();
        match piece {
            0 => {
                let (s, c) = trig(self.kappa, self.kappa_lo, x + 1.0);
                let amp = self.alpha - i * self.beta;
                (amp * s, k * amp * c)
            }
            1 => {
                let (s, c) = trig(self.kappa, self.kappa_lo, x);
                (
                    self.gamma * c + i * self.delta * s,
                    -k * self.gamma * s + i * k * self.delta * c,
                )
            }
            _ => {
                let (s, c) = trig(self.kappa, self.kappa_lo, 1.0 - x);
                let amp = self.alpha + i * self.beta;
                (amp * s, -k * amp * c)
            }
        }
    }

    /// `ψ(x)`; at `x = ±a` the left limit.
    pub fn evaluate(&self, x: f64) -> Result<Complex64> {
        self.evaluate_side(x, Side::Left)
    }

    pub fn evaluate_side(&self, x: f64, side: Side) -> Result<Complex64> {
        Self::check(x)?;
        Ok(self.value_on(self.piece(x, side), x).0)
    }

    /// `ψ'(x)`; at `x = ±a` the left limit.
    pub fn evaluate_derivative(&self, x: f64) -> Result<Complex64> {
        self.evaluate_derivative_side(x, Side::Left)
    }

    pub fn evaluate_derivative_side(&self, x: f64, side: Side) -> Result<Complex64> {
        Self::check(x)?;
        Ok(self.value_on(self.piece(x, side), x).1)
    }

    /// Largest `|ψ|` on a uniform grid of `n` points.
    pub fn max_modulus(&self, n: usize) -> f64 {
        grid(n)
            .map(|x| self.value_on(self.piece(x, Side::Left), x).0.norm())
            .fold(0.0, f64::max)
    }

    /// Matching-matrix residual `|M v|` for the stored coefficients.
    pub fn matching_residual(&self) -> f64 {
        let m = matrix(&self.parameters, self.kappa, self.kappa_lo);
        let v = [self.alpha, self.beta, self.gamma, self.delta];
        m.iter()
            .map(|row| {
                row.iter()
                    .zip(&v)
                    .map(|(a, b)| a * b)
                    .sum::<Complex64>()
                    .norm()
            })
            .fold(0.0, f64::max)
    }

    /// Copy scaled by `c`.
    pub fn scaled(&self, c: Complex64) -> Wavefunction {
        Wavefunction {
            alpha: self.alpha * c,
            beta: self.beta * c,
            gamma: self.gamma * c,
            delta: self.delta * c,
            ..*self
        }
    }

    /// Copy scaled so that the PT pseudo-norm equals 1.
    pub fn pt_normalized(&self) -> Result<Wavefunction> {
        let (_, pt) = norms(self)?;
        if pt.norm() == 0.0 {
            return Err(Error::ConventionViolation { residual: 0.0 });
        }
        Ok(self.scaled(pt.sqrt().inv()))
    }
}

fn grid(n: usize) -> impl Iterator<Item = f64> {
    let n = n.max(2);
    (0..n).map(move |i| {
        if i == n - 1 {
            1.0
        } else {
            -1.0 + 2.0 * (i as f64 / (n - 1) as f64)
        }
    })
}

/// Even and odd real parts of a wavefunction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParityParts {
    pub psi: Wavefunction,
    /// Worst violation of the parity identities found on the check grid,
    /// relative to `max |ψ|`.
    pub residual: f64,
}

impl ParityParts {
    /// `ψ_S(x) = Re[ψ(x) + ψ(-x)] / 2`.
    pub fn psi_s(&self, x: f64) -> Result<f64> {
        Ok(0.5 * (self.psi.evaluate(x)? + self.psi.evaluate(-x)?).re)
    }

    /// `ψ_A(x) = Im[ψ(x) - ψ(-x)] / 2`.
    pub fn psi_a(&self, x: f64) -> Result<f64> {
        Ok(0.5 * (self.psi.evaluate(x)? - self.psi.evaluate(-x)?).im)
    }
}

pub const PARITY_GRID: usize = 1001;

/// Splits `ψ = ψ_S + iψ_A` and checks the identities on a symmetric grid.
pub fn parity_decompose(psi: &Wavefunction) -> Result<ParityParts> {
    let scale = psi.max_modulus(PARITY_GRID);
    let mut worst: f64 = 0.0;
    for x in grid(PARITY_GRID) {
        let (u, v) = (psi.evaluate(x)?, psi.evaluate(-x)?);
        // Im of the even part and Re of the odd part must vanish
        worst = worst
            .max(0.5 * (u + v).im.abs())
            .max(0.5 * (u - v).re.abs());
    }
    let residual = if scale > 0.0 { worst / scale } else { 0.0 };
    if !(residual <= PARITY_TOL) {
        return Err(Error::ConventionViolation { residual });
    }
    Ok(ParityParts {
        psi: *psi,
        residual,
    })
}

fn simpson<F: Fn(f64) -> Complex64>(f: &F, a: f64, b: f64, tol: f64) -> Complex64 {
    #[allow(clippy::too_many_arguments)]
    fn rec<F: Fn(f64) -> Complex64>(
        f: &F,
        a: f64,
        b: f64,
        fa: Complex64,
        fm: Complex64,
        fb: Complex64,
        whole: Complex64,
        tol: f64,
        depth: u32,
    ) -> Complex64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.norm() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
            + rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
    let (fa, fm, fb) = (f(a), f(0.5 * (a + b)), f(b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    rec(f, a, b, fa, fm, fb, whole, tol, 48)
}

/// `(∫|ψ|²)^½` and `∫ψ(-x)ψ(x) dx` over `(-1, 1)`.
pub fn norms(psi: &Wavefunction) -> Result<(f64, Complex64)> {
    let a = psi.parameters.a();
    let cuts = [(-1.0, -a, 0usize), (-a, a, 1), (a, 1.0, 2)];
    // the mirror image of piece j is piece 2 - j
    let mut l2 = 0.0;
    let mut pt = Complex64::new(0.0, 0.0);
    for (lo, hi, j) in cuts {
        l2 += simpson(
            &|x| Complex64::new(psi.value_on(j, x).0.norm_sqr(), 0.0),
            lo,
            hi,
            QUAD_TOL / 3.0,
        )
        .re;
        pt += simpson(
            &|x| psi.value_on(2 - j, -x).0 * psi.value_on(j, x).0,
            lo,
            hi,
            QUAD_TOL / 3.0,
        );
    }
    Ok((l2.sqrt(), pt))
}
