//! Model parameters, the 4x4 matching system and the secular function.
//!
//! The box is `(-1, 1)` with hard walls. Two point interactions of strengths
//! `-ω² - iη` and `-ω² + iη` sit at `x = -a` and `x = +a`. With `E = κ²` the
//! matching conditions reduce to a homogeneous 4x4 system in the real
//! coefficients `(α, β, γ, δ)`; its determinant, scaled by `-2`, is the
//! secular function
//!
//! ```text
//! F(κ) = sin 2κ + (ω²/κ)[cos 2κ - cos 2κa] + ((ω⁴+η²)/κ²) sin 2κa · sin² κ(1-a)
//! ```
//!
//! Three evaluation routes are provided:
//!
//! * [`secular_det`]: the determinant of [`matching_matrix`], the reference
//!   definition of `F`;
//! * [`secular_closed_form`]: the expanded closed form, plus the variant with
//!   `sin² 2κ(1-a)` kept for comparison;
//! * [`secular`] / [`secular_complex`]: the factored form
//!   `sin 2κa (μ² + ν² - s²) + 2 cos 2κa · s μ` with `s = sin κ(1-a)`. It has no
//!   large cancelling terms and reduces the outer phase `κ(1-a)` with a
//!   compensated product, so it stays accurate at `ω ~ 10⁴` where the other two
//!   lose all digits near the doubled roots. Root finding uses this route.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::det4;

/// The triple `(a, ω, η)` defining the model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParameters")]
pub struct WellParameters {
    a: f64,
    omega: f64,
    eta: f64,
}

#[derive(Deserialize)]
struct RawParameters {
    a: f64,
    omega: f64,
    eta: f64,
}

impl TryFrom<RawParameters> for WellParameters {
    type Error = Error;

    fn try_from(raw: RawParameters) -> Result<Self> {
        WellParameters::new(raw.a, raw.omega, raw.eta)
    }
}

impl WellParameters {
    pub fn new(a: f64, omega: f64, eta: f64) -> Result<Self> {
        if !(a.is_finite() && omega.is_finite() && eta.is_finite()) {
            return Err(Error::InvalidModel(format!(
                "non-finite parameters (a = {a}, omega = {omega}, eta = {eta})"
            )));
        }
        if !(a > 0.0 && a < 1.0) {
            return Err(Error::InvalidModel(format!("a = {a} outside (0, 1)")));
        }
        if omega < 0.0 {
            return Err(Error::InvalidModel(format!("omega = {omega} is negative")));
        }
        Ok(WellParameters { a, omega, eta })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    /// `ω²`, the attractive part of each coupling.
    pub fn omega_sq(&self) -> f64 {
        self.omega * self.omega
    }

    /// `ω⁴ + η²`, the squared modulus of each coupling.
    pub fn coupling_sq(&self) -> f64 {
        let g = self.omega_sq();
        g * g + self.eta * self.eta
    }

    /// Width `1 - a` of each outer region.
    pub fn outer_width(&self) -> f64 {
        1.0 - self.a
    }

    /// Magnitude bound for `F` near `kappa`; used as the local envelope scale.
    pub fn scale(&self, kappa: Complex64) -> f64 {
        let r = kappa.norm();
        (1.0 + self.omega_sq() / r + self.coupling_sq() / (r * r)) * (2.0 * kappa.im.abs()).exp()
    }

    /// Both interactions switched off: the bare square well.
    pub fn is_bare(&self) -> bool {
        self.omega == 0.0 && self.eta == 0.0
    }
}

/// Validated constructor, see [`WellParameters::new`].
pub fn make_parameters(a: f64, omega: f64, eta: f64) -> Result<WellParameters> {
    WellParameters::new(a, omega, eta)
}

fn check_kappa(kappa: Complex64) -> Result<()> {
    if kappa.norm() == 0.0 {
        Err(Error::SingularPoint)
    } else {
        Ok(())
    }
}

/// `μ = cos κ(1-a) - (ω²/κ) sin κ(1-a)`.
pub fn mu(p: &WellParameters, kappa: Complex64) -> Result<Complex64> {
    check_kappa(kappa)?;
    let u = kappa * p.outer_width();
    Ok(u.cos() - p.omega_sq() / kappa * u.sin())
}

/// `ν = (η/κ) sin κ(1-a)`.
pub fn nu(p: &WellParameters, kappa: Complex64) -> Result<Complex64> {
    check_kappa(kappa)?;
    Ok(p.eta() / kappa * (kappa * p.outer_width()).sin())
}

/// The homogeneous system `M (α, β, γ, δ)ᵀ = 0`.
///
/// Rows 1-2 are continuity at `x = ∓a`, rows 3-4 the derivative jumps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatchingMatrix {
    pub entries: [[Complex64; 4]; 4],
    pub kappa: Complex64,
}

impl MatchingMatrix {
    pub fn determinant(&self) -> Complex64 {
        det4(&self.entries)
    }

    pub fn apply(&self, v: &[Complex64; 4]) -> [Complex64; 4] {
        let mut out = [Complex64::new(0.0, 0.0); 4];
        for (o, row) in out.iter_mut().zip(&self.entries) {
            *o = row.iter().zip(v).map(|(m, x)| m * x).sum();
        }
        out
    }
}

pub fn matching_matrix(p: &WellParameters, kappa: Complex64) -> Result<MatchingMatrix> {
    let m = mu(p, kappa)?;
    let n = nu(p, kappa)?;
    let zero = Complex64::new(0.0, 0.0);
    let s_out = (kappa * p.outer_width()).sin();
    let s_in = (kappa * p.a()).sin();
    let c_in = (kappa * p.a()).cos();
    Ok(MatchingMatrix {
        entries: [
            [s_out, zero, -c_in, zero],
            [zero, s_out, zero, -s_in],
            [-m, n, s_in, zero],
            [n, m, zero, c_in],
        ],
        kappa,
    })
}

/// Which evaluation produced a [`SecularValue`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Determinant,
    ClosedForm(ClosedForm),
    Factored,
}

/// The two closed forms in circulation.
///
/// `Expanded` carries `sin² κ(1-a)` and equals the scaled determinant.
/// `Printed` carries `sin² 2κ(1-a)`; it does not.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ClosedForm {
    Printed,
    #[default]
    Expanded,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SecularValue {
    pub f: Complex64,
    pub kappa: Complex64,
    pub method: Method,
}

/// `F(κ) = -2 det M(κ)`.
pub fn secular_det(p: &WellParameters, kappa: Complex64) -> Result<SecularValue> {
    let m = matching_matrix(p, kappa)?;
    Ok(SecularValue {
        f: -2.0 * m.determinant(),
        kappa,
        method: Method::Determinant,
    })
}

pub fn secular_closed_form(
    p: &WellParameters,
    kappa: Complex64,
    form: ClosedForm,
) -> Result<SecularValue> {
    check_kappa(kappa)?;
    let two_k = 2.0 * kappa;
    let last = match form {
        ClosedForm::Expanded => (kappa * p.outer_width()).sin(),
        ClosedForm::Printed => (two_k * p.outer_width()).sin(),
    };
    let f = two_k.sin()
        + p.omega_sq() / kappa * (two_k.cos() - (two_k * p.a()).cos())
        + p.coupling_sq() / (kappa * kappa) * (two_k * p.a()).sin() * last * last;
    Ok(SecularValue {
        f,
        kappa,
        method: Method::ClosedForm(form),
    })
}

// π/2 as an unevaluated sum hi + lo.
const FRAC_PI_2_HI: f64 = std::f64::consts::FRAC_PI_2;
const FRAC_PI_2_LO: f64 = 6.123_233_995_736_766e-17;

/// Reduces `(base + offset) * len` modulo π/2. `base * len` is formed exactly
/// with an fma; returns the quadrant and the reduced angle.
fn reduce(base: f64, offset: f64, len: f64) -> (i64, f64) {
    let prod = base * len;
    let prod_err = base.mul_add(len, -prod);
    let n = (prod / FRAC_PI_2_HI).round();
    let q = n * FRAC_PI_2_HI;
    let q_err = n.mul_add(FRAC_PI_2_HI, -q);
    let head = prod - q;
    let tail = prod_err - q_err - n * FRAC_PI_2_LO + offset * len;
    (n as i64, head + tail)
}

fn rotate<T: std::ops::Neg<Output = T>>(quadrant: i64, s: T, c: T) -> (T, T) {
    match quadrant.rem_euclid(4) {
        0 => (s, c),
        1 => (c, -s),
        2 => (-s, -c),
        _ => (-c, s),
    }
}

/// `(sin, cos)` of `(base + offset) * len` for real arguments.
pub(crate) fn sin_cos_scaled(base: f64, offset: f64, len: f64) -> (f64, f64) {
    let (n, r) = reduce(base, offset, len);
    let (s, c) = r.sin_cos();
    rotate(n, s, c)
}

/// `(sin, cos)` of `(base + offset) * len` with complex `offset`.
pub(crate) fn sin_cos_scaled_complex(
    base: f64,
    offset: Complex64,
    len: f64,
) -> (Complex64, Complex64) {
    let (n, r) = reduce(base, offset.re, len);
    let y = offset.im * len;
    let (sr, cr) = r.sin_cos();
    let (ch, sh) = (y.cosh(), y.sinh());
    let s = Complex64::new(sr * ch, cr * sh);
    let c = Complex64::new(cr * ch, -sr * sh);
    rotate(n, s, c)
}

/// Real-axis value of the factored form at `base + offset`, together with a
/// first-order bound on its rounding error.
pub(crate) fn secular_local(p: &WellParameters, base: f64, offset: f64) -> (f64, f64) {
    let kappa = base + offset;
    let g_k = p.omega_sq() / kappa;
    let (s, c) = sin_cos_scaled(base, offset, p.outer_width());
    let (big_a, big_c) = sin_cos_scaled(base, offset, 2.0 * p.a());
    let mu = c - g_k * s;
    let nu = p.eta() / kappa * s;
    let f = big_a * (mu * mu + nu * nu - s * s) + 2.0 * big_c * s * mu;

    let eps = f64::EPSILON;
    let mu_err = 2.0 * eps * (c.abs() + (g_k * s).abs());
    let noise =
        8.0 * eps * (big_a.abs() * (mu * mu + nu * nu + s * s) + 2.0 * (big_c * s * mu).abs())
            + mu_err * (2.0 * (big_a * mu).abs() + 2.0 * (big_c * s).abs());
    (f, noise)
}

/// `F(κ)` on the real axis via the factored form.
pub fn secular(p: &WellParameters, kappa: f64) -> f64 {
    secular_local(p, kappa, 0.0).0
}

struct Terms {
    kappa: Complex64,
    s: Complex64,
    c: Complex64,
    big_a: Complex64,
    big_c: Complex64,
    mu: Complex64,
    nu: Complex64,
}

impl Terms {
    fn new(p: &WellParameters, base: f64, offset: Complex64) -> Terms {
        let kappa = Complex64::new(base + offset.re, offset.im);
        let (s, c) = sin_cos_scaled_complex(base, offset, p.outer_width());
        let (big_a, big_c) = sin_cos_scaled_complex(base, offset, 2.0 * p.a());
        let mu = c - p.omega_sq() / kappa * s;
        let nu = p.eta() / kappa * s;
        Terms {
            kappa,
            s,
            c,
            big_a,
            big_c,
            mu,
            nu,
        }
    }

    fn value(&self) -> Complex64 {
        let Terms {
            s,
            big_a,
            big_c,
            mu,
            nu,
            ..
        } = *self;
        big_a * (mu * mu + nu * nu - s * s) + 2.0 * big_c * s * mu
    }

    fn derivative(&self, p: &WellParameters) -> Complex64 {
        let Terms {
            kappa,
            s,
            c,
            big_a,
            big_c,
            mu,
            nu,
        } = *self;
        let l = p.outer_width();
        let a = p.a();
        let g = p.omega_sq();
        let ds = l * c;
        let dc = -l * s;
        let d_ratio = ds / kappa - s / (kappa * kappa);
        let dmu = dc - g * d_ratio;
        let dnu = p.eta() * d_ratio;
        let da = 2.0 * a * big_c;
        let dcc = -2.0 * a * big_a;
        da * (mu * mu + nu * nu - s * s)
            + big_a * 2.0 * (mu * dmu + nu * dnu - s * ds)
            + 2.0 * dcc * s * mu
            + 2.0 * big_c * (ds * mu + s * dmu)
    }
}

/// `F(κ)` for complex `κ` via the factored form.
pub fn secular_complex(p: &WellParameters, kappa: Complex64) -> Result<SecularValue> {
    check_kappa(kappa)?;
    Ok(SecularValue {
        f: Terms::new(p, kappa.re, Complex64::new(0.0, kappa.im)).value(),
        kappa,
        method: Method::Factored,
    })
}

/// `F` and `F'` at `base + offset` for complex offsets.
pub(crate) fn secular_pair_local(
    p: &WellParameters,
    base: f64,
    offset: Complex64,
) -> (Complex64, Complex64) {
    let t = Terms::new(p, base, offset);
    (t.value(), t.derivative(p))
}

/// `H = κ² F` and `H'` at `base + offset`.
pub(crate) fn entire_local(
    p: &WellParameters,
    base: f64,
    offset: Complex64,
) -> (Complex64, Complex64) {
    let kappa = Complex64::new(base + offset.re, offset.im);
    if kappa.norm() == 0.0 {
        return (kappa, kappa);
    }
    let t = Terms::new(p, base, offset);
    let f = t.value();
    let df = t.derivative(p);
    (kappa * kappa * f, 2.0 * kappa * f + kappa * kappa * df)
}

/// `H(κ) = κ² F(κ)`, entire, with `H(0) = 0`.
pub fn entire_secular(p: &WellParameters, kappa: Complex64) -> Complex64 {
    entire_local(p, kappa.re, Complex64::new(0.0, kappa.im)).0
}

/// `H'(κ)`, analytic derivative of [`entire_secular`].
pub fn entire_derivative(p: &WellParameters, kappa: Complex64) -> Complex64 {
    entire_local(p, kappa.re, Complex64::new(0.0, kappa.im)).1
}

/// `G(τ) = Im F(iτ)` through the determinant. `F(iτ)` is purely imaginary,
/// and a root `τ*` is a bound state with `E = -τ*²`.
///
/// Overflows for large `τ(1-a)`; scans use [`scaled_imaginary_axis`].
pub fn secular_imaginary_axis(p: &WellParameters, tau: f64) -> Result<f64> {
    if !(tau > 0.0) || !tau.is_finite() {
        return Err(Error::InvalidConfig(format!(
            "tau = {tau} must be positive"
        )));
    }
    Ok(secular_det(p, Complex64::new(0.0, tau))?.f.im)
}

/// `e^{-2τ} G(τ)`, free of overflow:
///
/// `u(2)/2 - (ω²/2τ) u(1-a) u(1+a) + ((ω⁴+η²)/8τ²) u(2a) u(1-a)²`
/// with `u(x) = 1 - e^{-2τx}`.
pub fn scaled_imaginary_axis(p: &WellParameters, tau: f64) -> f64 {
    scaled_imaginary_local(p, tau).0
}

// Past this point the leading quadratic is split off exactly; the remainder
// is made of decaying exponentials and carries no cancellation.
fn use_split(p: &WellParameters, tau: f64) -> bool {
    2.0 * tau * p.a().min(p.outer_width()) > 1.0
}

pub(crate) fn scaled_imaginary_local(p: &WellParameters, tau: f64) -> (f64, f64) {
    let l = p.outer_width();
    let (g, h2) = (p.omega_sq(), p.coupling_sq());
    let eps = f64::EPSILON;
    if use_split(p, tau) {
        let e = |x: f64| (-2.0 * tau * x).exp();
        let (e2, el, ep, e2a) = (e(2.0), e(l), e(1.0 + p.a()), e(2.0 * p.a()));
        let d = 2.0 * tau - g;
        let main = (d * d + p.eta() * p.eta()) / (8.0 * tau * tau);
        let r0 = e2 / 2.0;
        let r1 = g / (2.0 * tau) * (el + ep - el * ep);
        let r2 = h2 / (8.0 * tau * tau) * (e2a * (1.0 - el) * (1.0 - el) + 2.0 * el - el * el);
        let value = main - r0 + r1 - r2;
        let noise = 8.0 * eps * (main + r0 + r1.abs() + r2.abs());
        return (value, noise);
    }
    let u = |x: f64| -(-2.0 * tau * x).exp_m1();
    let t0 = u(2.0) / 2.0;
    let t1 = g / (2.0 * tau) * u(l) * u(1.0 + p.a());
    let t2 = h2 / (8.0 * tau * tau) * u(2.0 * p.a()) * u(l) * u(l);
    let value = t0 - t1 + t2;
    (value, 16.0 * eps * (t0.abs() + t1.abs() + t2.abs()))
}

/// Analytic continuation of [`scaled_imaginary_axis`] to complex `τ`.
pub(crate) fn scaled_imaginary_complex(p: &WellParameters, tau: Complex64) -> Complex64 {
    let l = p.outer_width();
    let (g, h2) = (p.omega_sq(), p.coupling_sq());
    let one = Complex64::new(1.0, 0.0);
    if use_split(p, tau.re) {
        let e = |x: f64| (-2.0 * x * tau).exp();
        let (e2, el, ep, e2a) = (e(2.0), e(l), e(1.0 + p.a()), e(2.0 * p.a()));
        let d = 2.0 * tau - g;
        let main = (d * d + p.eta() * p.eta()) / (8.0 * tau * tau);
        return main - e2 / 2.0 + g / (2.0 * tau) * (el + ep - el * ep)
            - h2 / (8.0 * tau * tau) * (e2a * (one - el) * (one - el) + 2.0 * el - el * el);
    }
    let u = |x: f64| one - (-2.0 * x * tau).exp();
    u(2.0) / 2.0 - g / (2.0 * tau) * u(l) * u(1.0 + p.a())
        + h2 / (8.0 * tau * tau) * u(2.0 * p.a()) * u(l) * u(l)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

    fn re(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    fn fig1() -> WellParameters {
        WellParameters::new(0.95, 1.5, 20.0).unwrap()
    }

    fn fig2() -> WellParameters {
        WellParameters::new(0.95, 15000.0, 20.0).unwrap()
    }

    #[test]
    fn parameter_validation() {
        assert!(make_parameters(0.95, 1.5, 20.0).is_ok());
        let bare = make_parameters(0.5, 0.0, 0.0).unwrap();
        assert!(bare.is_bare());
        assert!(matches!(
            make_parameters(1.2, 1.0, 0.0),
            Err(Error::InvalidModel(_))
        ));
        assert!(make_parameters(0.0, 1.0, 0.0).is_err());
        assert!(make_parameters(1.0, 1.0, 0.0).is_err());
        assert!(make_parameters(0.5, -1.0, 0.0).is_err());
        assert!(make_parameters(0.5, f64::NAN, 0.0).is_err());
        assert!(make_parameters(0.5, 1.0, f64::INFINITY).is_err());
        let p = make_parameters(0.3, 2.0, -3.0).unwrap();
        assert_eq!(p.omega_sq(), 4.0);
        assert_eq!(p.coupling_sq(), 25.0);
    }

    #[test]
    fn mu_and_nu_values() {
        let bare = make_parameters(0.5, 0.0, 0.0).unwrap();
        assert!(mu(&bare, re(PI)).unwrap().norm() < 1e-15);

        // cos(0.05) - 2.25 sin(0.05), evaluated by hand
        let m = mu(&fig1(), re(1.0)).unwrap();
        let expect = 0.998_750_260_394_966 - 2.25 * 0.049_979_169_270_678_33;
        assert!((m.re - expect).abs() < 1e-14 && m.im == 0.0);

        assert_eq!(nu(&bare, re(2.7)).unwrap(), re(0.0));
        let n = nu(&fig1(), re(PI)).unwrap();
        let expect = 20.0 * (0.05 * PI).sin() / PI;
        assert!((n.re - expect).abs() < 1e-14);

        // sin(iy) = i sinh(y): nu(iτ) = (η/(iτ)) i sinh(τ(1-a)) is real
        let tau = 1.7;
        let n = nu(&fig1(), Complex64::new(0.0, tau)).unwrap();
        assert!((n.re - 20.0 / tau * (0.05 * tau).sinh()).abs() < 1e-14);
        assert!(n.im.abs() < 1e-15);

        assert_eq!(mu(&fig1(), re(0.0)), Err(Error::SingularPoint));
        assert_eq!(nu(&fig1(), re(0.0)), Err(Error::SingularPoint));
    }

    #[test]
    fn mu_small_kappa_series() {
        // (ω²/κ) sin κ(1-a) → ω²(1-a): μ stays finite, μ → 1 - ω²(1-a) + O(κ²)
        let p = fig1();
        let limit = 1.0 - p.omega_sq() * p.outer_width();
        for k in [1e-2, 1e-3, 1e-5] {
            let m = mu(&p, re(k)).unwrap().re;
            let l = p.outer_width();
            let second = -k * k * l * l / 2.0 + p.omega_sq() * k * k * l.powi(3) / 6.0;
            assert!((m - limit - second).abs() < 1e-6 * k.powi(2) + 1e-15, "{k}");
        }
    }

    #[test]
    fn matching_matrix_rows() {
        let bare = make_parameters(0.5, 0.0, 0.0).unwrap();
        let m = matching_matrix(&bare, re(FRAC_PI_2)).unwrap();
        let r = FRAC_PI_4;
        assert!((m.entries[2][0].re + r.cos()).abs() < 1e-15);
        assert_eq!(m.entries[2][1], re(0.0));
        assert!((m.entries[2][2].re - r.sin()).abs() < 1e-15);
        assert_eq!(m.entries[2][3], re(0.0));

        let m = matching_matrix(&fig2(), re(7.3)).unwrap();
        assert!(m.entries.iter().flatten().all(|e| e.im == 0.0));
    }

    #[test]
    fn determinant_matches_closed_form_at_two() {
        let p = fig1();
        let det = matching_matrix(&p, re(2.0)).unwrap().determinant();
        let f = secular_closed_form(&p, re(2.0), ClosedForm::Expanded)
            .unwrap()
            .f;
        assert!((det - f * -0.5).norm() < 1e-13 * p.scale(re(2.0)));
    }

    #[test]
    fn bare_well_secular_values() {
        let bare = make_parameters(0.3, 0.0, 0.0).unwrap();
        assert!(secular_det(&bare, re(FRAC_PI_2)).unwrap().f.norm() < 1e-15);
        assert!((secular_det(&bare, re(FRAC_PI_4)).unwrap().f - re(1.0)).norm() < 1e-15);
        for form in [ClosedForm::Printed, ClosedForm::Expanded] {
            let k = re(0.77);
            let f = secular_closed_form(&bare, k, form).unwrap().f;
            assert!((f - (2.0 * k).sin()).norm() < 1e-15);
        }
    }

    #[test]
    fn determinant_and_expanded_form_agree_at_three() {
        let p = fig1();
        let d = secular_det(&p, re(3.0)).unwrap();
        let b = secular_closed_form(&p, re(3.0), ClosedForm::Expanded).unwrap();
        assert_eq!(d.method, Method::Determinant);
        assert!((d.f - b.f).norm() <= 1e-12 * d.f.norm());
    }

    #[test]
    fn printed_form_differs_at_generic_points() {
        let p = WellParameters::new(0.5, 3.0, 2.0).unwrap();
        let k = re(1.3);
        let a = secular_closed_form(&p, k, ClosedForm::Printed).unwrap().f;
        let b = secular_closed_form(&p, k, ClosedForm::Expanded).unwrap().f;
        assert!((a - b).norm() > 1e-3);
    }

    #[test]
    fn factored_form_matches_determinant() {
        for p in [
            fig1(),
            fig2(),
            WellParameters::new(0.35, 150.0, 20.0).unwrap(),
        ] {
            for k in [0.3, 1.0, 2.5, 7.77, 19.1, 44.4] {
                let d = secular_det(&p, re(k)).unwrap().f.re;
                let f = secular(&p, k);
                assert!((d - f).abs() < 1e-12 * p.scale(re(k)), "{k}: {d} {f}");
                let z = Complex64::new(k, 0.3);
                let d = secular_det(&p, z).unwrap().f;
                let f = secular_complex(&p, z).unwrap().f;
                assert!((d - f).norm() < 1e-12 * p.scale(z));
            }
        }
    }

    #[test]
    fn compensated_reduction_matches_naive_away_from_cancellation() {
        for (b, o, l) in [
            (3.0, 0.0, 0.35),
            (100.25, 1e-9, 0.65),
            (0.1, 0.0, 0.05),
            (-4.0, 0.0, 0.5),
        ] {
            let (s, c) = sin_cos_scaled(b, o, l);
            let x = (b + o) * l;
            assert!((s - x.sin()).abs() < 1e-13 && (c - x.cos()).abs() < 1e-13);
        }
        // sin((π/0.65) * 0.65) is far smaller than the naive product error
        let base = PI / 0.65;
        let (s, _) = sin_cos_scaled(base, 0.0, 0.65);
        assert!(s.abs() < 1e-15);
    }

    #[test]
    fn entire_function_properties() {
        let p = fig1();
        assert_eq!(entire_secular(&p, re(0.0)), re(0.0));

        let bare = make_parameters(0.5, 0.0, 0.0).unwrap();
        for k in [1e-4, 1e-3] {
            let h = entire_secular(&bare, re(k)).re;
            assert!((h / (2.0 * k * k * k) - 1.0).abs() < 1e-5);
        }

        // order-3 zero: H/κ³ → 2 - 2ω²(1-a²) + 2a(1-a)²(ω⁴+η²)
        let a = p.a();
        let c3 = 2.0 - 2.0 * p.omega_sq() * (1.0 - a * a)
            + 2.0 * a * (1.0 - a).powi(2) * p.coupling_sq();
        let k = 1e-4;
        assert!((entire_secular(&p, re(k)).re / k.powi(3) - c3).abs() < 1e-4 * c3.abs());

        let z = Complex64::new(3.3, 0.7);
        let h = entire_secular(&p, z);
        let hc = entire_secular(&p, z.conj());
        assert!((hc - h.conj()).norm() <= 1e-12 * h.norm());
    }

    #[test]
    fn analytic_derivative_matches_central_difference() {
        for p in [fig1(), WellParameters::new(0.65, 150.0, 20.0).unwrap()] {
            for z in [
                Complex64::new(2.2, 0.1),
                Complex64::new(9.1, -0.3),
                Complex64::new(0.4, 0.05),
            ] {
                let h = 1e-6;
                let fd = (entire_secular(&p, z + h) - entire_secular(&p, z - h)) / (2.0 * h);
                let fd_im = (entire_secular(&p, z + Complex64::new(0.0, h))
                    - entire_secular(&p, z - Complex64::new(0.0, h)))
                    / Complex64::new(0.0, 2.0 * h);
                let an = entire_derivative(&p, z);
                assert!(
                    (fd - an).norm() < 1e-6 * an.norm().max(1.0),
                    "{z}: {fd} {an}"
                );
                assert!((fd_im - an).norm() < 1e-6 * an.norm().max(1.0));
            }
        }
    }

    #[test]
    fn imaginary_axis_bare_well() {
        let bare = make_parameters(0.5, 0.0, 0.0).unwrap();
        for tau in [0.1, 1.0, 3.0] {
            let g = secular_imaginary_axis(&bare, tau).unwrap();
            assert!((g - (2.0 * tau).sinh()).abs() < 1e-12 * (2.0 * tau).sinh());
        }
        assert!(secular_imaginary_axis(&bare, 0.0).is_err());
        assert!(secular_imaginary_axis(&bare, -1.0).is_err());
    }

    #[test]
    fn imaginary_axis_value_is_purely_imaginary() {
        let p = fig1();
        for tau in [0.2, 1.1, 4.0, 9.5] {
            let f = secular_det(&p, Complex64::new(0.0, tau)).unwrap().f;
            assert!(f.re.abs() <= 1e-13 * f.norm());
        }
    }

    #[test]
    fn scaled_imaginary_axis_matches_determinant() {
        for p in [fig1(), WellParameters::new(0.5, 5.0, 3.0).unwrap(), fig2()] {
            for tau in [0.01, 0.3, 2.0, 11.0, 40.0] {
                let g = secular_imaginary_axis(&p, tau).unwrap();
                let gs = scaled_imaginary_axis(&p, tau);
                let scale = p.scale(re(tau));
                assert!(
                    (g * (-2.0 * tau).exp() - gs).abs() < 1e-11 * scale,
                    "{tau}: {g} {gs}"
                );
                let gc = scaled_imaginary_complex(&p, re(tau));
                assert!((gc.re - gs).abs() < 1e-9 * scale);
            }
        }
    }

    #[test]
    fn strong_coupling_has_no_real_negative_energy_root() {
        // e^{-2τ} G(τ) → [(2τ - ω²)² + η²] / 8τ² > 0
        let p = fig2();
        let g = p.omega_sq();
        let tau = g / 2.0;
        let v = scaled_imaginary_axis(&p, tau);
        let expect = p.eta() * p.eta() / (8.0 * tau * tau);
        assert!(v > 0.0);
        assert!((v - expect).abs() < 1e-12 * expect);
    }

    #[test]
    fn split_and_direct_forms_agree() {
        let p = WellParameters::new(0.3, 2.0, 0.05).unwrap();
        // switch at 2τ min(a, 1-a) = 1, i.e. τ = 5/3
        for tau in [1.5, 1.66, 1.7, 2.5] {
            let direct = {
                let u = |x: f64| -(-2.0 * tau * x).exp_m1();
                u(2.0) / 2.0 - 4.0 / (2.0 * tau) * u(0.7) * u(1.3)
                    + p.coupling_sq() / (8.0 * tau * tau) * u(0.6) * u(0.7) * u(0.7)
            };
            let (v, noise) = scaled_imaginary_local(&p, tau);
            assert!((v - direct).abs() < 1e-14, "{tau}: {v} {direct}");
            assert!(noise < 1e-13);
        }
    }
}
