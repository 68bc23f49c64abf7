//! Zero counting and location for `H(κ) = κ² F(κ)` in the complex plane.
//!
//! `H` is entire, so the winding number of `H` along a rectangle equals the
//! number of zeros inside. A real spectrum shows up as tile counts that match
//! the real roots; any excess is a pair of conjugate zeros off the axis.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, PI};

use crate::error::{Error, Result};
use crate::realroots::{compute_spectrum, ScanConfig};
use crate::secular::{entire_local, WellParameters};

/// Rectangle `[re_min, re_max] × [im_min, im_max]` in the κ-plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComplexRegion {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
}

impl ComplexRegion {
    pub fn new(re_min: f64, re_max: f64, im_min: f64, im_max: f64) -> Result<Self> {
        let all_finite = [re_min, re_max, im_min, im_max]
            .iter()
            .all(|v| v.is_finite());
        if !all_finite || !(re_min > 0.0) || !(re_min < re_max) || !(im_min < 0.0 && im_max > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "region ({re_min}, {re_max}) x ({im_min}, {im_max}) must have 0 < re_min < re_max and im_min < 0 < im_max"
            )));
        }
        Ok(ComplexRegion {
            re_min,
            re_max,
            im_min,
            im_max,
        })
    }

    pub fn contains(&self, z: Complex64) -> bool {
        z.re > self.re_min && z.re < self.re_max && z.im > self.im_min && z.im < self.im_max
    }

    fn dilated(&self, step: u32) -> ComplexRegion {
        let f = 0.01 * f64::from(step);
        ComplexRegion {
            re_min: self.re_min * (1.0 - f),
            re_max: self.re_max * (1.0 + f),
            im_min: self.im_min * (1.0 + f),
            im_max: self.im_max * (1.0 + f),
        }
    }
}

impl std::fmt::Display for ComplexRegion {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "({}, {}) x ({}, {})",
            self.re_min, self.re_max, self.im_min, self.im_max
        )
    }
}

/// Argument-principle bookkeeping for one rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZeroCount {
    pub region: ComplexRegion,
    pub winding: i64,
    pub samples_used: usize,
    pub boundary_min_modulus: f64,
}

pub(crate) const CONTOUR_BUDGET: usize = 4_000_000;
const MAX_DILATIONS: u32 = 8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum ContourFailure {
    ZeroOnContour,
    Budget,
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct Contour {
    pub winding: i64,
    pub samples: usize,
    pub min_modulus: f64,
}

struct Walker<'f, F> {
    f: &'f F,
    samples: usize,
    budget: usize,
    min_modulus: f64,
    min_len: f64,
}

impl<F: Fn(Complex64) -> Complex64> Walker<'_, F> {
    fn eval(&mut self, z: Complex64) -> std::result::Result<Complex64, ContourFailure> {
        self.samples += 1;
        if self.samples > self.budget {
            return Err(ContourFailure::Budget);
        }
        let v = (self.f)(z);
        let m = v.norm();
        if !(m > 0.0) || !m.is_finite() {
            return Err(ContourFailure::ZeroOnContour);
        }
        self.min_modulus = self.min_modulus.min(m);
        Ok(v)
    }

    /// Phase change along `za -> zb`, bisecting until every accepted step
    /// turns the argument by less than π/2.
    fn segment(
        &mut self,
        za: Complex64,
        fa: Complex64,
        zb: Complex64,
        fb: Complex64,
    ) -> std::result::Result<f64, ContourFailure> {
        let mut total = 0.0;
        let mut stack = vec![(za, fa, zb, fb)];
        while let Some((a, fa, b, fb)) = stack.pop() {
            let m = 0.5 * (a + b);
            let fm = self.eval(m)?;
            let d1 = (fm / fa).arg();
            let d2 = (fb / fm).arg();
            if d1.abs() < FRAC_PI_2 && d2.abs() < FRAC_PI_2 {
                total += d1 + d2;
            } else {
                if (b - a).norm() < self.min_len {
                    return Err(ContourFailure::ZeroOnContour);
                }
                // right half first so the left half is processed next
                stack.push((m, fm, b, fb));
                stack.push((a, fa, m, fm));
            }
        }
        Ok(total)
    }
}

/// Winding number of `f` along the rectangle, counter-clockwise.
pub(crate) fn contour_winding<F: Fn(Complex64) -> Complex64>(
    f: &F,
    re: (f64, f64),
    im: (f64, f64),
    density: f64,
    budget: usize,
) -> std::result::Result<Contour, ContourFailure> {
    let corners = [
        Complex64::new(re.0, im.0),
        Complex64::new(re.1, im.0),
        Complex64::new(re.1, im.1),
        Complex64::new(re.0, im.1),
    ];
    let perimeter = 2.0 * ((re.1 - re.0) + (im.1 - im.0));
    let mut w = Walker {
        f,
        samples: 0,
        budget,
        min_modulus: f64::INFINITY,
        min_len: 1e-13 * perimeter,
    };
    let mut total = 0.0;
    let mut prev = w.eval(corners[0])?;
    for k in 0..4 {
        let (z0, z1) = (corners[k], corners[(k + 1) % 4]);
        let len = (z1 - z0).norm();
        let n = ((len * density).ceil() as usize).max(8);
        let mut za = z0;
        for j in 1..=n {
            let zb = if j == n {
                z1
            } else {
                z0 + (z1 - z0) * (j as f64 / n as f64)
            };
            let fb = w.eval(zb)?;
            total += w.segment(za, prev, zb, fb)?;
            za = zb;
            prev = fb;
        }
    }
    let turns = total / (2.0 * PI);
    let winding = turns.round();
    if (turns - winding).abs() > 1e-3 {
        return Err(ContourFailure::ZeroOnContour);
    }
    Ok(Contour {
        winding: winding as i64,
        samples: w.samples,
        min_modulus: w.min_modulus,
    })
}

// Initial contour samples per unit length; adaptivity refines from there.
const CONTOUR_DENSITY: f64 = 16.0;

/// Number of zeros of `H` inside `region`.
///
/// When `H` vanishes on (or numerically at) the contour, the rectangle is
/// dilated by 1% and the count retried, up to 8 times. The region actually
/// used is returned in the count.
pub fn winding_count(p: &WellParameters, region: &ComplexRegion) -> Result<ZeroCount> {
    let h = |z: Complex64| entire_local(p, z.re, Complex64::new(0.0, z.im)).0;
    for step in 0..=MAX_DILATIONS {
        let r = region.dilated(step);
        match contour_winding(
            &h,
            (r.re_min, r.re_max),
            (r.im_min, r.im_max),
            CONTOUR_DENSITY,
            CONTOUR_BUDGET,
        ) {
            Ok(c) => {
                return Ok(ZeroCount {
                    region: r,
                    winding: c.winding,
                    samples_used: c.samples,
                    boundary_min_modulus: c.min_modulus,
                })
            }
            Err(ContourFailure::Budget) => {
                return Err(Error::PhaseBudget {
                    budget: CONTOUR_BUDGET,
                })
            }
            Err(ContourFailure::ZeroOnContour) => continue,
        }
    }
    Err(Error::ContourZero {
        region: region.to_string(),
    })
}

/// Complex Newton iteration in offset coordinates `base + z`.
///
/// `eval` returns the function and its derivative. Stops when the step is
/// below `1e-13 |z|` or stalls at the rounding floor.
pub(crate) fn newton_offset<E: Fn(Complex64) -> (Complex64, Complex64)>(
    eval: E,
    seed: Complex64,
    radius: f64,
    max_iter: usize,
) -> Result<Complex64> {
    let mut z = seed;
    let mut best = (f64::INFINITY, z);
    let mut stalled = 0;
    let mut last_step = f64::INFINITY;
    for _ in 0..max_iter {
        let (h, dh) = eval(z);
        if h.norm() == 0.0 {
            return Ok(z);
        }
        if h.norm() < best.0 {
            best = (h.norm(), z);
        }
        if !(dh.norm() > 0.0) || !dh.norm().is_finite() || !h.norm().is_finite() {
            return Err(Error::NoConvergence {
                what: "complex Newton",
                iterations: max_iter,
            });
        }
        let step = h / dh;
        z -= step;
        if (z - seed).norm() > radius {
            return Err(Error::Diverged {
                near: format!("{seed}"),
            });
        }
        let s = step.norm();
        if s <= 1e-13 * z.norm() || s == 0.0 {
            return Ok(z);
        }
        if s >= 0.5 * last_step {
            stalled += 1;
        } else {
            stalled = 0;
        }
        if stalled >= 4 && s <= 1e-6 * z.norm() {
            return Ok(best.1);
        }
        last_step = s;
    }
    Err(Error::NoConvergence {
        what: "complex Newton",
        iterations: max_iter,
    })
}

/// Refines a zero of `H` from `seed` by Newton's method with the analytic
/// derivative `H'`. The iterate must stay within distance 1 of the seed.
pub fn locate_complex_zero(p: &WellParameters, seed: Complex64) -> Result<Complex64> {
    locate_in_disc(p, seed, 1.0)
}

fn locate_in_disc(p: &WellParameters, seed: Complex64, radius: f64) -> Result<Complex64> {
    let base = seed.re;
    let z0 = Complex64::new(0.0, seed.im);
    let z = newton_offset(|z| entire_local(p, base, z), z0, radius, 100)?;
    let kappa = Complex64::new(base + z.re, z.im);
    let (h, _) = entire_local(p, base, z);
    let scale = kappa.norm_sqr() * p.scale(kappa);
    if h.norm() > 1e-10 * scale {
        return Err(Error::NoConvergence {
            what: "complex Newton",
            iterations: 100,
        });
    }
    Ok(kappa)
}

/// Winding count of one tile of the strip.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TileCount {
    pub count: ZeroCount,
    pub real_roots: usize,
}

/// Outcome of [`breaking_search`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BreakingReport {
    pub real_roots: usize,
    pub winding_total: i64,
    pub tiles: Vec<TileCount>,
    /// Certified off-axis zeros, listed in conjugate pairs.
    pub off_axis: Vec<Complex64>,
    /// Excess zeros that Newton did not pin down.
    pub unlocated: i64,
}

impl BreakingReport {
    pub fn is_real(&self) -> bool {
        self.off_axis.is_empty()
            && self.unlocated == 0
            && self.winding_total == self.real_roots as i64
    }
}

// Left edge of the searched strip; keeps the order-3 zero at the origin out.
pub const STRIP_START: f64 = 0.1;

/// Searches `(0.1, kappa_max) × (-h, h)` for zeros of `H` off the real axis.
pub fn breaking_search(
    p: &WellParameters,
    kappa_max: f64,
    strip_height: f64,
) -> Result<BreakingReport> {
    if !(kappa_max > 1.0) || !(strip_height > 0.0) || !kappa_max.is_finite() {
        return Err(Error::InvalidConfig(format!(
            "breaking search needs kappa_max > 1 and strip_height > 0 (got {kappa_max}, {strip_height})"
        )));
    }
    let cfg = ScanConfig::for_parameters(p, STRIP_START, kappa_max)?;
    let spectrum = compute_spectrum(p, &cfg, false)?;
    let roots: Vec<f64> = spectrum.levels.iter().map(|l| l.kappa).collect();

    let mut avoid: Vec<f64> = roots.clone();
    avoid.extend(spectrum.complex_pairs.iter().map(|z| z.re));
    avoid.sort_by(f64::total_cmp);
    let bounds = tile_bounds(STRIP_START, kappa_max, &avoid);

    let tiles: Vec<Result<TileCount>> = bounds
        .par_windows(2)
        .map(|w| {
            let region = ComplexRegion::new(w[0], w[1], -strip_height, strip_height)?;
            let count = winding_count(p, &region).map_err(|e| e.in_window(w[0], w[1]))?;
            let r = count.region;
            let real_roots = roots
                .iter()
                .filter(|&&k| k > r.re_min && k < r.re_max)
                .count();
            Ok(TileCount { count, real_roots })
        })
        .collect();
    let tiles = tiles.into_iter().collect::<Result<Vec<_>>>()?;

    let mut off_axis = Vec::new();
    let mut unlocated = 0;
    for tile in &tiles {
        let excess = tile.count.winding - tile.real_roots as i64;
        if excess == 0 {
            continue;
        }
        if excess < 0 {
            unlocated += excess;
            continue;
        }
        let found = off_axis_in_tile(p, &tile.count.region, &spectrum.complex_pairs, excess);
        unlocated += excess - 2 * found.len() as i64;
        for z in found {
            off_axis.push(z);
            off_axis.push(z.conj());
        }
    }
    off_axis.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));

    Ok(BreakingReport {
        real_roots: roots.len(),
        winding_total: tiles.iter().map(|t| t.count.winding).sum(),
        tiles,
        off_axis,
        unlocated,
    })
}

/// Tile edges of width about 1, pushed to the middle of a gap when a known
/// root sits within a quarter gap of a nominal edge.
fn tile_bounds(start: f64, end: f64, avoid: &[f64]) -> Vec<f64> {
    let n = ((end - start).ceil() as usize).max(1);
    let width = (end - start) / n as f64;
    let mut bounds = vec![start];
    for i in 1..n {
        let mut b = start + width * i as f64;
        let j = avoid.partition_point(|&r| r < b);
        let lo = if j > 0 { avoid[j - 1] } else { start };
        let hi = avoid.get(j).copied().unwrap_or(end);
        let gap = hi - lo;
        if b - lo < 0.25 * gap || hi - b < 0.25 * gap {
            b = 0.5 * (lo + hi);
        }
        if b > *bounds.last().unwrap() && b < end {
            bounds.push(b);
        }
    }
    bounds.push(end);
    bounds
}

/// Locates upper-half-plane zeros inside a tile and certifies each with a
/// small winding count that excludes the real axis.
fn off_axis_in_tile(
    p: &WellParameters,
    region: &ComplexRegion,
    hints: &[Complex64],
    excess: i64,
) -> Vec<Complex64> {
    let mut seeds: Vec<Complex64> = hints
        .iter()
        .filter(|z| z.re > region.re_min && z.re < region.re_max)
        .map(|z| Complex64::new(z.re, z.im.abs()))
        .collect();
    for i in 0..5 {
        let re = region.re_min + (region.re_max - region.re_min) * (i as f64 + 0.5) / 5.0;
        for f in [0.25, 0.5, 0.75] {
            seeds.push(Complex64::new(re, region.im_max * f));
        }
    }

    let mut found: Vec<Complex64> = Vec::new();
    for seed in seeds {
        if 2 * found.len() as i64 >= excess {
            break;
        }
        let Ok(z) = locate_in_disc(p, seed, region.re_max - region.re_min) else {
            continue;
        };
        let z = Complex64::new(z.re, z.im.abs());
        if !region.contains(z) || z.im == 0.0 {
            continue;
        }
        if found.iter().any(|w| (w - z).norm() < 1e-3 * z.im) {
            continue;
        }
        if certify(p, z) {
            found.push(z);
        }
    }
    found
}

/// Exactly one zero in a box around `z` that stays clear of the real axis.
fn certify(p: &WellParameters, z: Complex64) -> bool {
    let half = 0.5 * z.im;
    let base = z.re;
    let h = |w: Complex64| entire_local(p, base, w).0;
    matches!(
        contour_winding(
            &h,
            (-half, half),
            (z.im - half, z.im + half),
            4.0 / half,
            CONTOUR_BUDGET
        ),
        Ok(Contour { winding: 1, .. })
    )
}
