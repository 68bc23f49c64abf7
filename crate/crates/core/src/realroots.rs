//! Real roots of the secular function and the ordered spectrum `Eₙ = κₙ²`.
//!
//! Roots are bracketed on a uniform grid and refined by Brent's method.
//! Local minima of `|F|` without a sign change are resolved separately: at
//! strong coupling the outer-well levels come in pairs only a few ulps apart,
//! so every root carries a sub-ulp correction `kappa_lo`.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::complexroots::{contour_winding, newton_offset, CONTOUR_BUDGET};
use crate::error::{Error, Result};
use crate::secular::{
    scaled_imaginary_complex, scaled_imaginary_local, secular_local, secular_pair_local,
    WellParameters,
};

/// Grid and tolerance settings for a real-axis scan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawScanConfig")]
pub struct ScanConfig {
    pub kappa_min: f64,
    pub kappa_max: f64,
    pub samples_per_unit: usize,
    pub refine_tol: f64,
    pub cluster_threshold: f64,
}

#[derive(Deserialize)]
struct RawScanConfig {
    kappa_min: f64,
    kappa_max: f64,
    samples_per_unit: usize,
    refine_tol: f64,
    cluster_threshold: f64,
}

impl TryFrom<RawScanConfig> for ScanConfig {
    type Error = Error;

    fn try_from(r: RawScanConfig) -> Result<Self> {
        ScanConfig::new(
            r.kappa_min,
            r.kappa_max,
            r.samples_per_unit,
            r.refine_tol,
            r.cluster_threshold,
        )
    }
}

pub const DEFAULT_KAPPA_MIN: f64 = 1e-3;
pub const DEFAULT_REFINE_TOL: f64 = 1e-12;
pub const DEFAULT_CLUSTER_THRESHOLD: f64 = 0.1;
/// Largest scan grid accepted by [`ScanConfig::new`].
pub const MAX_SAMPLES: f64 = 5e7;

impl ScanConfig {
    pub fn new(
        kappa_min: f64,
        kappa_max: f64,
        samples_per_unit: usize,
        refine_tol: f64,
        cluster_threshold: f64,
    ) -> Result<Self> {
        if !(kappa_min > 0.0) || !kappa_max.is_finite() || !(kappa_min < kappa_max) {
            return Err(Error::InvalidConfig(format!(
                "need 0 < kappa_min < kappa_max (got {kappa_min}, {kappa_max})"
            )));
        }
        if samples_per_unit < 8 {
            return Err(Error::InvalidConfig(format!(
                "samples_per_unit = {samples_per_unit} is below 8"
            )));
        }
        if (kappa_max - kappa_min) * samples_per_unit as f64 > MAX_SAMPLES {
            return Err(Error::InvalidConfig(format!(
                "scan grid of {:.3e} points exceeds {MAX_SAMPLES:e}",
                (kappa_max - kappa_min) * samples_per_unit as f64
            )));
        }
        if !(refine_tol > 0.0 && refine_tol <= 1e-6) {
            return Err(Error::InvalidConfig(format!(
                "refine_tol = {refine_tol} must lie in (0, 1e-6]"
            )));
        }
        if !(cluster_threshold > 0.0 && cluster_threshold < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "cluster_threshold = {cluster_threshold} must lie in (0, 1)"
            )));
        }
        Ok(ScanConfig {
            kappa_min,
            kappa_max,
            samples_per_unit,
            refine_tol,
            cluster_threshold,
        })
    }

    /// Default settings for `p` on `(kappa_min, kappa_max)`. A `kappa_min`
    /// of zero is moved to [`DEFAULT_KAPPA_MIN`].
    pub fn for_parameters(p: &WellParameters, kappa_min: f64, kappa_max: f64) -> Result<Self> {
        let kappa_min = if kappa_min == 0.0 {
            DEFAULT_KAPPA_MIN
        } else {
            kappa_min
        };
        ScanConfig::new(
            kappa_min,
            kappa_max,
            default_density(p),
            DEFAULT_REFINE_TOL,
            DEFAULT_CLUSTER_THRESHOLD,
        )
    }

    pub fn with_density(self, samples_per_unit: usize) -> Result<Self> {
        ScanConfig::new(
            self.kappa_min,
            self.kappa_max,
            samples_per_unit,
            self.refine_tol,
            self.cluster_threshold,
        )
    }
}

/// 64 samples per unit κ, times `max(1, log10(1 + ω²))`.
pub fn default_density(p: &WellParameters) -> usize {
    (64.0 * (1.0 + p.omega_sq()).log10().max(1.0)).ceil() as usize
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LevelFlag {
    Regular,
    QuasiDegeneratePairMember,
    NegativeEnergy,
}

impl LevelFlag {
    pub fn as_str(&self) -> &'static str {
        match self {
            LevelFlag::Regular => "regular",
            LevelFlag::QuasiDegeneratePairMember => "quasi-degenerate-pair-member",
            LevelFlag::NegativeEnergy => "negative-energy",
        }
    }
}

/// One root. The exact root is `kappa + kappa_lo` with `|kappa_lo|` below
/// half an ulp of `kappa`. Negative-energy records hold `τ` in `kappa` and
/// `energy = -τ²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EigenvalueRecord {
    pub n: usize,
    pub kappa: f64,
    pub kappa_lo: f64,
    pub energy: f64,
    pub residual: f64,
    pub gap_prev: Option<f64>,
    pub flag: LevelFlag,
    /// Double root reported once.
    pub tangent: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumReport {
    pub parameters: WellParameters,
    pub config: ScanConfig,
    pub levels: Vec<EigenvalueRecord>,
    pub negative_levels: Vec<EigenvalueRecord>,
    /// Upper members of conjugate zero pairs met while resolving clusters.
    pub complex_pairs: Vec<Complex64>,
}

impl SpectrumReport {
    pub fn kappas(&self) -> Vec<f64> {
        self.levels.iter().map(|l| l.kappa).collect()
    }

    pub fn energies(&self) -> Vec<f64> {
        self.levels.iter().map(|l| l.energy).collect()
    }
}

/// A function sampled along a real axis in offset coordinates `base + offset`.
///
/// Offsets let callers resolve structure finer than one ulp of `base`.
pub trait LocalFunction: Sync {
    /// Value and a bound on its rounding error.
    fn value(&self, base: f64, offset: f64) -> (f64, f64);
    /// Typical magnitude of the function near `x`.
    fn scale(&self, x: f64) -> f64;
    /// Analytic continuation to complex offsets.
    fn analytic(&self, base: f64, offset: Complex64) -> Complex64;

    fn analytic_derivative(&self, base: f64, offset: Complex64, step: f64) -> Complex64 {
        (self.analytic(base, offset + step) - self.analytic(base, offset - step)) / (2.0 * step)
    }
}

struct Secular<'p>(&'p WellParameters);

impl LocalFunction for Secular<'_> {
    fn value(&self, base: f64, offset: f64) -> (f64, f64) {
        secular_local(self.0, base, offset)
    }

    fn scale(&self, x: f64) -> f64 {
        self.0.scale(Complex64::new(x, 0.0))
    }

    fn analytic(&self, base: f64, offset: Complex64) -> Complex64 {
        secular_pair_local(self.0, base, offset).0
    }

    fn analytic_derivative(&self, base: f64, offset: Complex64, _step: f64) -> Complex64 {
        secular_pair_local(self.0, base, offset).1
    }
}

/// `e^{-2τ} Im F(iτ)` along the positive imaginary κ-axis.
struct ImaginaryAxis<'p>(&'p WellParameters);

impl LocalFunction for ImaginaryAxis<'_> {
    fn value(&self, base: f64, offset: f64) -> (f64, f64) {
        scaled_imaginary_local(self.0, base + offset)
    }

    fn scale(&self, tau: f64) -> f64 {
        0.5 + self.0.omega_sq() / (2.0 * tau) + self.0.coupling_sq() / (8.0 * tau * tau)
    }

    fn analytic(&self, base: f64, offset: Complex64) -> Complex64 {
        scaled_imaginary_complex(self.0, base + offset)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bracket {
    pub lo: f64,
    pub hi: f64,
}

/// Local minimum of `|F|` without a sign change; `[lo, hi]` encloses it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SuspiciousSite {
    pub kappa: f64,
    pub lo: f64,
    pub hi: f64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct ScanResult {
    pub brackets: Vec<Bracket>,
    /// Sign changes found only after grid refinement near a minimum.
    pub cluster_brackets: Vec<Bracket>,
    pub suspicious: Vec<SuspiciousSite>,
}

const SITE_FLOOR: f64 = 1e-3;
const MAX_DOUBLINGS: u32 = 10;

pub(crate) fn uniform_grid(lo: f64, hi: f64, density: usize) -> Result<Vec<f64>> {
    let n = ((hi - lo) * density as f64).ceil() as usize + 1;
    if n < 4 || !(hi > lo) {
        return Err(Error::DegenerateInterval { lo, hi });
    }
    let last = (n - 1) as f64;
    Ok((0..n)
        .map(|i| {
            if i == n - 1 {
                hi
            } else {
                lo + (hi - lo) * (i as f64 / last)
            }
        })
        .collect())
}

fn sign(v: f64) -> i8 {
    if v > 0.0 {
        1
    } else if v < 0.0 {
        -1
    } else {
        0
    }
}

fn sign_changes(xs: &[f64], vs: &[f64]) -> Vec<Bracket> {
    let mut out = Vec::new();
    for i in 0..xs.len() - 1 {
        let (a, b) = (sign(vs[i]), sign(vs[i + 1]));
        if a * b < 0 {
            out.push(Bracket {
                lo: xs[i],
                hi: xs[i + 1],
            });
        } else if a == 0 && i > 0 && sign(vs[i - 1]) * b < 0 {
            out.push(Bracket {
                lo: xs[i],
                hi: xs[i],
            });
        }
    }
    out
}

fn scan_grid<F: LocalFunction>(f: &F, grid: &[f64]) -> ScanResult {
    let vs: Vec<f64> = grid.par_iter().map(|&x| f.value(x, 0.0).0).collect();
    let brackets = sign_changes(grid, &vs);

    let mut candidates = Vec::new();
    for i in 1..grid.len() - 1 {
        let (l, m, r) = (vs[i - 1], vs[i], vs[i + 1]);
        let same = sign(l) * sign(r) > 0 && sign(m) * sign(l) >= 0;
        if same
            && m.abs() < l.abs()
            && m.abs() <= r.abs()
            && m.abs() < SITE_FLOOR * f.scale(grid[i])
        {
            candidates.push(SuspiciousSite {
                kappa: grid[i],
                lo: grid[i - 1],
                hi: grid[i + 1],
                value: m,
            });
        }
    }

    let refined: Vec<std::result::Result<SuspiciousSite, Vec<Bracket>>> =
        candidates.par_iter().map(|s| refine_site(f, *s)).collect();
    let mut out = ScanResult {
        brackets,
        ..ScanResult::default()
    };
    for r in refined {
        match r {
            Ok(site) => out.suspicious.push(site),
            Err(b) => out.cluster_brackets.extend(b),
        }
    }
    out
}

/// Doubles the sampling of the site window until a sign change appears.
/// Returns the narrowed site, or the brackets that were found.
fn refine_site<F: LocalFunction>(
    f: &F,
    site: SuspiciousSite,
) -> std::result::Result<SuspiciousSite, Vec<Bracket>> {
    let mut best = site;
    for level in 1..=MAX_DOUBLINGS {
        let n = 1usize << (level + 1);
        let xs: Vec<f64> = (0..=n)
            .map(|i| site.lo + (site.hi - site.lo) * (i as f64 / n as f64))
            .collect();
        let vs: Vec<f64> = xs.iter().map(|&x| f.value(x, 0.0).0).collect();
        let b = sign_changes(&xs, &vs);
        if !b.is_empty() {
            return Err(b);
        }
        let j = (1..n)
            .min_by(|&i, &k| vs[i].abs().total_cmp(&vs[k].abs()))
            .unwrap_or(1);
        best = SuspiciousSite {
            kappa: xs[j],
            lo: xs[j - 1],
            hi: xs[j + 1],
            value: vs[j],
        };
    }
    Ok(best)
}

/// Brackets and suspicious minima of `F` on the configured grid.
pub fn scan_brackets(p: &WellParameters, cfg: &ScanConfig) -> Result<ScanResult> {
    let grid = uniform_grid(cfg.kappa_min, cfg.kappa_max, cfg.samples_per_unit)?;
    Ok(scan_grid(&Secular(p), &grid))
}

pub(crate) const BRENT_BUDGET: usize = 200;

/// Brent's method on `[a, b]`; the result never leaves the bracket.
pub(crate) fn brent<G: Fn(f64) -> f64>(g: G, a: f64, b: f64, tol: f64) -> Result<f64> {
    let (mut a, mut b) = (a, b);
    let (mut fa, mut fb) = (g(a), g(b));
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if sign(fa) == sign(fb) {
        return Err(Error::NoSignChange {
            lo: a.min(b),
            hi: a.max(b),
        });
    }
    let (mut c, mut fc) = (b, fb);
    let mut d = b - a;
    let mut e = d;
    for _ in 0..BRENT_BUDGET {
        if sign(fb) == sign(fc) {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol1 = 2.0 * f64::EPSILON * b.abs() + 0.5 * tol;
        let xm = 0.5 * (c - b);
        if xm.abs() <= tol1 || fb == 0.0 {
            return Ok(b);
        }
        if e.abs() >= tol1 && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * xm * s;
                q = 1.0 - s;
            } else {
                let qa = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * xm * qa * (qa - r) - (b - a) * (r - 1.0));
                q = (qa - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            }
            p = p.abs();
            let min1 = 3.0 * xm * q - (tol1 * q).abs();
            let min2 = (e * q).abs();
            if 2.0 * p < min1.min(min2) {
                e = d;
                d = p / q;
            } else {
                d = xm;
                e = d;
            }
        } else {
            d = xm;
            e = d;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol1 { d } else { tol1.copysign(xm) };
        fb = g(b);
    }
    Err(Error::NoConvergence {
        what: "Brent refinement",
        iterations: BRENT_BUDGET,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RefinedRoot {
    pub kappa: f64,
    pub residual: f64,
}

/// Brent refinement of a sign-change bracket of `F`.
pub fn refine_root(p: &WellParameters, bracket: (f64, f64), tol: f64) -> Result<RefinedRoot> {
    let (lo, hi) = bracket;
    let kappa = brent(|k| secular_local(p, k, 0.0).0, lo, hi, tol)?;
    Ok(RefinedRoot {
        kappa,
        residual: secular_local(p, kappa, 0.0).0.abs(),
    })
}

/// A root in double-double form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocalRoot {
    pub kappa: f64,
    pub kappa_lo: f64,
    pub tangent: bool,
}

impl LocalRoot {
    fn from_offset(base: f64, offset: f64, tangent: bool) -> LocalRoot {
        let (kappa, kappa_lo) = two_sum(base, offset);
        LocalRoot {
            kappa,
            kappa_lo,
            tangent,
        }
    }
}

fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ClusterOutcome {
    /// Minimum clearly away from zero.
    Dip,
    /// Flanks of opposite sign: one simple root.
    Single,
    /// Two simple roots.
    Pair,
    /// Double root, reported once.
    Tangency,
    /// Conjugate pair off the real axis.
    ComplexPair,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterResolution {
    pub outcome: ClusterOutcome,
    pub roots: Vec<LocalRoot>,
    pub winding: Option<i64>,
    pub complex_zero: Option<Complex64>,
}

// Minimum values below this fraction of the local scale count as zero.
const ZERO_FLOOR: f64 = 1e-9;

fn golden_min<G: Fn(f64) -> f64>(g: G, lo: f64, hi: f64, floor: f64) -> (f64, f64) {
    let r = 0.5 * (3.0 - 5f64.sqrt());
    let (mut a, mut b) = (lo, hi);
    let mut x1 = a + r * (b - a);
    let mut x2 = b - r * (b - a);
    let (mut f1, mut f2) = (g(x1), g(x2));
    for _ in 0..400 {
        if f1 < 0.0 {
            return (x1, f1);
        }
        if f2 < 0.0 {
            return (x2, f2);
        }
        if b - a <= floor {
            break;
        }
        if f1 < f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = a + r * (b - a);
            f1 = g(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = b - r * (b - a);
            f2 = g(x2);
        }
    }
    if f1 <= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// Decides how many real roots sit at a suspicious minimum of `f`.
pub fn resolve_cluster_with<F: LocalFunction>(
    f: &F,
    site: &SuspiciousSite,
) -> Result<ClusterResolution> {
    let base = site.kappa;
    let (dlo, dhi) = (site.lo - base, site.hi - base);
    if !(dlo < 0.0 && dhi > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "site window [{}, {}] does not enclose {}",
            site.lo, site.hi, site.kappa
        )));
    }
    let tiny = 1e-6 * ulp(base);
    let v = |d: f64| f.value(base, d).0;
    let (flo, fhi) = (v(dlo), v(dhi));
    let resolution = |outcome, roots, winding, complex_zero| ClusterResolution {
        outcome,
        roots,
        winding,
        complex_zero,
    };

    if sign(flo) * sign(fhi) <= 0 {
        let d = brent(v, dlo, dhi, tiny)?;
        return Ok(resolution(
            ClusterOutcome::Single,
            vec![LocalRoot::from_offset(base, d, false)],
            None,
            None,
        ));
    }
    let sgn = f64::from(sign(flo));
    let (dm, gm) = golden_min(|d| sgn * v(d), dlo, dhi, tiny);

    if gm < 0.0 {
        // re-base at the minimum so both roots are resolved below one ulp
        let (b2, _) = two_sum(base, dm);
        let shift = b2 - base;
        let w = |d: f64| f.value(b2, d).0;
        let mid = dm - shift;
        let tol = 1e-6 * ulp(b2);
        let r1 = brent(w, dlo - shift, mid, tol)?;
        let r2 = brent(w, mid, dhi - shift, tol)?;
        return Ok(resolution(
            ClusterOutcome::Pair,
            vec![
                LocalRoot::from_offset(b2, r1, false),
                LocalRoot::from_offset(b2, r2, false),
            ],
            None,
            None,
        ));
    }
    if gm > ZERO_FLOOR * f.scale(base) {
        return Ok(resolution(ClusterOutcome::Dip, vec![], None, None));
    }

    let half = 0.5 * (dm - dlo).min(dhi - dm);
    let h = |z: Complex64| f.analytic(base, z);
    let contour = contour_winding(
        &h,
        (dm - half, dm + half),
        (-half, half),
        8.0 / half,
        CONTOUR_BUDGET,
    );
    let winding = match contour {
        Ok(c) => c.winding,
        Err(_) => {
            return Err(Error::UnresolvedCluster {
                kappa: base + dm,
                winding: -1,
                real: 0,
            })
        }
    };
    let noise = f.value(base, dm).1;
    match winding {
        0 => Ok(resolution(ClusterOutcome::Dip, vec![], Some(0), None)),
        2 if gm <= noise => Ok(resolution(
            ClusterOutcome::Tangency,
            vec![LocalRoot::from_offset(base, dm, true)],
            Some(2),
            None,
        )),
        2 => {
            let step = 1e-4 * half;
            let z = newton_offset(
                |z| (f.analytic(base, z), f.analytic_derivative(base, z, step)),
                Complex64::new(dm, 0.1 * half),
                2.0 * half,
                100,
            )
            .ok()
            .map(|z| Complex64::new(base + z.re, z.im.abs()));
            Ok(resolution(ClusterOutcome::ComplexPair, vec![], Some(2), z))
        }
        w => Err(Error::UnresolvedCluster {
            kappa: base + dm,
            winding: w,
            real: 0,
        }),
    }
}

fn ulp(x: f64) -> f64 {
    let x = x.abs().max(f64::MIN_POSITIVE);
    f64::from_bits(x.to_bits() + 1) - x
}

/// [`resolve_cluster_with`] applied to `F`.
pub fn resolve_cluster(p: &WellParameters, site: &SuspiciousSite) -> Result<ClusterResolution> {
    resolve_cluster_with(&Secular(p), site)
}

struct Found {
    root: LocalRoot,
    cluster: bool,
}

struct Roots {
    found: Vec<Found>,
    complex: Vec<Complex64>,
}

fn find_roots<F: LocalFunction>(f: &F, grid: &[f64], tol: f64) -> Result<Roots> {
    let scan = scan_grid(f, grid);
    let refine = |b: &Bracket, cluster: bool| -> Result<Found> {
        let g = |x: f64| f.value(x, 0.0).0;
        let x = brent(g, b.lo, b.hi, tol).map_err(|e| e.in_window(b.lo, b.hi))?;
        let (x, lo) = newton_polish(f, x, b.lo.min(b.hi), b.lo.max(b.hi));
        Ok(Found {
            root: LocalRoot {
                kappa: x,
                kappa_lo: lo,
                tangent: false,
            },
            cluster,
        })
    };

    let mut found: Vec<Found> = scan
        .brackets
        .par_iter()
        .map(|b| refine(b, false))
        .collect::<Result<Vec<_>>>()?;
    found.extend(
        scan.cluster_brackets
            .par_iter()
            .map(|b| refine(b, true))
            .collect::<Result<Vec<_>>>()?,
    );
    let clusters: Vec<ClusterResolution> = scan
        .suspicious
        .par_iter()
        .map(|s| resolve_cluster_with(f, s).map_err(|e| e.in_window(s.lo, s.hi)))
        .collect::<Result<Vec<_>>>()?;
    let mut complex = Vec::new();
    for c in clusters {
        found.extend(c.roots.into_iter().map(|root| Found {
            root,
            cluster: true,
        }));
        complex.extend(c.complex_zero);
    }
    found.sort_by(|a, b| {
        a.root
            .kappa
            .total_cmp(&b.root.kappa)
            .then(a.root.kappa_lo.total_cmp(&b.root.kappa_lo))
    });
    found.dedup_by(|a, b| a.root.kappa == b.root.kappa && a.root.kappa_lo == b.root.kappa_lo);
    Ok(Roots { found, complex })
}

/// Double-double Newton steps from a Brent root; a step is kept only while
/// it stays in the bracket and lowers `|f|`.
fn newton_polish<F: LocalFunction>(f: &F, x: f64, lo: f64, hi: f64) -> (f64, f64) {
    let zero = Complex64::new(0.0, 0.0);
    let (mut x, mut x_lo) = (x, 0.0);
    let mut v = f.value(x, x_lo).0;
    for _ in 0..4 {
        if v == 0.0 {
            break;
        }
        let dv = f.analytic_derivative(x, zero, 1e-6 * x.abs().max(1e-3)).re;
        if !(dv.abs() > 0.0) {
            break;
        }
        let (y, y_lo) = two_sum(x, x_lo - v / dv);
        if !(y >= lo && y <= hi) {
            break;
        }
        let w = f.value(y, y_lo).0;
        if !(w.abs() < v.abs()) {
            break;
        }
        (x, x_lo, v) = (y, y_lo, w);
    }
    (x, x_lo)
}

fn gap(a: &LocalRoot, b: &LocalRoot) -> f64 {
    (b.kappa - a.kappa) + (b.kappa_lo - a.kappa_lo)
}

/// Scan, refine and resolve clusters on `(kappa_min, kappa_max)`; with
/// `include_negative` also search `τ ∈ (0, max(10, 2ω²))` for `E = -τ² < 0`.
pub fn compute_spectrum(
    p: &WellParameters,
    cfg: &ScanConfig,
    include_negative: bool,
) -> Result<SpectrumReport> {
    let grid = uniform_grid(cfg.kappa_min, cfg.kappa_max, cfg.samples_per_unit)?;
    let roots = find_roots(&Secular(p), &grid, cfg.refine_tol)?;

    let gaps: Vec<f64> = roots
        .found
        .windows(2)
        .map(|w| gap(&w[0].root, &w[1].root))
        .collect();
    let mut flagged: Vec<bool> = roots.found.iter().map(|f| f.cluster).collect();
    for (i, g) in gaps.iter().enumerate() {
        let lo = i.saturating_sub(4);
        let hi = (i + 5).min(gaps.len());
        let mean = gaps[lo..hi].iter().sum::<f64>() / (hi - lo) as f64;
        if *g < cfg.cluster_threshold * mean {
            flagged[i] = true;
            flagged[i + 1] = true;
        }
    }

    let levels = roots
        .found
        .iter()
        .enumerate()
        .map(|(i, f)| {
            let r = f.root;
            EigenvalueRecord {
                n: i + 1,
                kappa: r.kappa,
                kappa_lo: r.kappa_lo,
                energy: r.kappa * r.kappa,
                residual: secular_local(p, r.kappa, r.kappa_lo).0.abs(),
                gap_prev: if i == 0 { None } else { Some(gaps[i - 1]) },
                flag: if flagged[i] {
                    LevelFlag::QuasiDegeneratePairMember
                } else {
                    LevelFlag::Regular
                },
                tangent: r.tangent,
            }
        })
        .collect();

    let negative_levels = if include_negative {
        negative_spectrum(p, cfg.refine_tol)?
    } else {
        Vec::new()
    };

    Ok(SpectrumReport {
        parameters: *p,
        config: *cfg,
        levels,
        negative_levels,
        complex_pairs: roots.complex,
    })
}

/// Positive level `n` (1-based), widening the scan window until it holds
/// the level well inside.
pub fn find_level(p: &WellParameters, n: usize) -> Result<EigenvalueRecord> {
    if n == 0 {
        return Err(Error::LevelNotFound(0));
    }
    let mut kappa_max = 2.0 * n as f64 + 2.0;
    for _ in 0..8 {
        let Ok(cfg) = ScanConfig::for_parameters(p, 0.0, kappa_max) else {
            break;
        };
        let s = compute_spectrum(p, &cfg, false)?;
        if let Some(l) = s.levels.get(n - 1) {
            if l.kappa < 0.75 * kappa_max {
                return Ok(*l);
            }
        }
        kappa_max *= 2.0;
    }
    Err(Error::LevelNotFound(n))
}

/// Upper end of the negative-energy search, `max(10, 2ω²)`.
pub fn tau_max(p: &WellParameters) -> f64 {
    (2.0 * p.omega_sq()).max(10.0)
}

// Uniform steps of 1/64 up to τ = 64, geometric steps beyond.
fn tau_grid(tau_max: f64) -> Vec<f64> {
    let start = 1e-3;
    let uniform_end = tau_max.min(64.0);
    let n = ((uniform_end - start) * 64.0).ceil() as usize;
    let mut grid: Vec<f64> = (0..=n)
        .map(|i| start + (uniform_end - start) * (i as f64 / n as f64))
        .collect();
    let mut t = uniform_end;
    while t < tau_max {
        t = (t * (1.0 + 1.0 / 512.0)).min(tau_max);
        grid.push(t);
    }
    grid
}

fn negative_spectrum(p: &WellParameters, tol: f64) -> Result<Vec<EigenvalueRecord>> {
    let axis = ImaginaryAxis(p);
    let roots = find_roots(&axis, &tau_grid(tau_max(p)), tol)?;
    let mut prev: Option<LocalRoot> = None;
    let mut out = Vec::with_capacity(roots.found.len());
    for (i, f) in roots.found.iter().enumerate() {
        let r = f.root;
        out.push(EigenvalueRecord {
            n: i + 1,
            kappa: r.kappa,
            kappa_lo: r.kappa_lo,
            energy: -r.kappa * r.kappa,
            residual: axis.value(r.kappa, r.kappa_lo).0.abs(),
            gap_prev: prev.map(|q| gap(&q, &r)),
            flag: LevelFlag::NegativeEnergy,
            tangent: r.tangent,
        });
        prev = Some(r);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn bare() -> WellParameters {
        WellParameters::new(0.5, 0.0, 0.0).unwrap()
    }

    struct Stub;

    impl LocalFunction for Stub {
        fn value(&self, base: f64, offset: f64) -> (f64, f64) {
            let d = (base - 2.0) + offset;
            (d * d, 4.0 * f64::EPSILON * (d * d + 4.0 * f64::EPSILON))
        }
        fn scale(&self, x: f64) -> f64 {
            1.0 + x * x
        }
        fn analytic(&self, base: f64, offset: Complex64) -> Complex64 {
            let d = offset + (base - 2.0);
            d * d
        }
    }

    #[test]
    fn config_validation() {
        assert!(ScanConfig::new(0.0, 1.0, 64, 1e-12, 0.1).is_err());
        assert!(ScanConfig::new(2.0, 1.0, 64, 1e-12, 0.1).is_err());
        assert!(ScanConfig::new(0.1, 1.0, 7, 1e-12, 0.1).is_err());
        assert!(ScanConfig::new(0.1, 1.0, 8, 1e-5, 0.1).is_err());
        assert!(ScanConfig::new(0.1, 1.0, 8, 1e-12, 1.0).is_err());
        assert!(ScanConfig::new(0.1, 1.0, 8, 1e-6, 0.5).is_ok());
        assert!(ScanConfig::new(0.1, 1e9, 64, 1e-12, 0.1).is_err());
    }

    #[test]
    fn find_level_gives_up_past_the_grid_limit() {
        assert!((find_level(&bare(), 3).unwrap().kappa - 3.0 * FRAC_PI_2).abs() < 1e-12);
        assert!(matches!(
            find_level(&bare(), 10_000_000),
            Err(Error::LevelNotFound(10_000_000))
        ));
    }

    #[test]
    fn default_density_grows_with_coupling() {
        assert_eq!(default_density(&bare()), 64);
        let strong = WellParameters::new(0.35, 15000.0, 20.0).unwrap();
        assert_eq!(
            default_density(&strong),
            (64.0 * (1.0 + 2.25e8f64).log10()).ceil() as usize
        );
    }

    #[test]
    fn degenerate_interval() {
        let cfg = ScanConfig::new(1.0, 1.02, 64, 1e-12, 0.1).unwrap();
        assert!(matches!(
            scan_brackets(&bare(), &cfg),
            Err(Error::DegenerateInterval { .. })
        ));
    }

    #[test]
    fn brent_bare_roots() {
        let r = refine_root(&bare(), (1.5, 1.6), 1e-12).unwrap();
        assert!((r.kappa - FRAC_PI_2).abs() < 1e-12);
        let r = refine_root(&bare(), (3.0, 3.2), 1e-12).unwrap();
        assert!((r.kappa - PI).abs() < 1e-12);
        assert!(matches!(
            refine_root(&bare(), (1.7, 1.8), 1e-12),
            Err(Error::NoSignChange { .. })
        ));
    }

    #[test]
    fn brent_stays_in_bracket() {
        let x = brent(|x| x.powi(3) - 1e-9, -1.0, 3.0, 1e-14).unwrap();
        assert!((x - 1e-3).abs() < 1e-12);
        let x = brent(|x| (x - 0.7).signum(), 0.0, 1.0, 1e-12).unwrap();
        assert!((0.0..=1.0).contains(&x) && (x - 0.7).abs() < 1e-11);
    }

    #[test]
    fn stub_tangency_is_one_root() {
        let site = SuspiciousSite {
            kappa: 2.0 - 1e-4,
            lo: 2.0 - 3e-3,
            hi: 2.0 + 2e-3,
            value: 1e-8,
        };
        let r = resolve_cluster_with(&Stub, &site).unwrap();
        assert_eq!(r.outcome, ClusterOutcome::Tangency);
        assert_eq!(r.roots.len(), 1);
        assert!(r.roots[0].tangent);
        assert!((r.roots[0].kappa - 2.0).abs() < 1e-7);
    }

    #[test]
    fn stub_scan_reports_one_site() {
        let grid = uniform_grid(1.0, 3.0, 64).unwrap();
        let roots = find_roots(&Stub, &grid, 1e-12).unwrap();
        assert_eq!(roots.found.len(), 1);
        assert!(roots.found[0].root.tangent);
    }

    #[test]
    fn bare_spectrum() {
        let cfg = ScanConfig::new(0.1, 20.0, 64, 1e-12, 0.1).unwrap();
        let s = compute_spectrum(&bare(), &cfg, false).unwrap();
        assert_eq!(s.levels.len(), 12);
        for (i, l) in s.levels.iter().enumerate() {
            assert!((l.kappa - (i + 1) as f64 * FRAC_PI_2).abs() < 1e-11);
            assert!(l.residual < 1e-11);
            assert_eq!(l.energy, l.kappa * l.kappa);
            assert_eq!(l.flag, LevelFlag::Regular);
        }
        assert!(s.levels[0].gap_prev.is_none());
    }

    #[test]
    fn tau_grid_covers_window() {
        let g = tau_grid(4.5e8);
        assert!(g.windows(2).all(|w| w[1] > w[0]));
        assert_eq!(*g.last().unwrap(), 4.5e8);
        assert!(g[0] > 0.0);
    }

    #[test]
    fn split_bound_states_are_negative_levels() {
        // two attractive deltas with weak non-Hermiticity: both bound states survive
        let p = WellParameters::new(0.3, 3.0, 0.05).unwrap();
        let cfg = ScanConfig::for_parameters(&p, 0.1, 5.0).unwrap();
        let s = compute_spectrum(&p, &cfg, true).unwrap();
        assert_eq!(s.negative_levels.len(), 2);
        // 50-digit reference roots of the scaled τ-axis function
        let expect = [4.105_634_990_236_024, 4.752_252_642_282_284];
        for (l, e) in s.negative_levels.iter().zip(expect) {
            assert!((l.kappa - e).abs() < 1e-12, "{} vs {e}", l.kappa);
            assert_eq!(l.flag, LevelFlag::NegativeEnergy);
            assert!(l.energy < 0.0);
            assert!(l.residual < 1e-12);
        }
    }

    #[test]
    fn hermitian_strong_coupling_tangency() {
        // η = 0 at ω² = 400: the bound-state doublet is split by e^{-4τa}, far below one ulp
        let p = WellParameters::new(0.5, 20.0, 0.0).unwrap();
        let cfg = ScanConfig::for_parameters(&p, 0.1, 2.0).unwrap();
        let s = compute_spectrum(&p, &cfg, true).unwrap();
        assert_eq!(s.negative_levels.len(), 1);
        assert!(s.negative_levels[0].tangent);
        assert!((s.negative_levels[0].kappa - 200.0).abs() < 1e-6);
    }
}
