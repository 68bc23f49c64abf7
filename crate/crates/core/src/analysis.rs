//! Envelopes, beats and gap statistics of `F(κ)` and its roots, plus the
//! bundled datasets behind the seven reference figures.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::realroots::{compute_spectrum, uniform_grid, ScanConfig, SpectrumReport};
use crate::secular::{entire_secular, secular, WellParameters};

/// Minimum number of maxima of `F` for an envelope.
pub const MIN_MAXIMA: usize = 8;
/// Levels on each side of a gap in the rolling-median window.
pub const MEDIAN_HALF_WINDOW: usize = 4;
pub const DEFAULT_PROMINENCE: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Extremum {
    pub kappa: f64,
    pub value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExtremumKind {
    Max,
    Min,
}

impl ExtremumKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ExtremumKind::Max => "max",
            ExtremumKind::Min => "min",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeExtremum {
    pub kappa: f64,
    pub value: f64,
    pub kind: ExtremumKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeOptions {
    /// A turning point of the envelope counts only if the envelope moves
    /// back by this relative amount before the next one.
    pub prominence: f64,
    /// Number of subdominant maxima families to trace (0 = none).
    pub subdominant: usize,
}

impl Default for EnvelopeOptions {
    fn default() -> Self {
        EnvelopeOptions {
            prominence: DEFAULT_PROMINENCE,
            subdominant: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeTrace {
    pub maxima: Vec<Extremum>,
    pub minima: Vec<Extremum>,
    /// Turning points of the polyline through `(κ, |F|)` at the maxima.
    pub envelope_extrema: Vec<EnvelopeExtremum>,
    /// Family `r` holds, for each run of maxima between two envelope
    /// minima, the maximum ranked `r + 2` by size.
    pub subdominant: Vec<Vec<Extremum>>,
}

impl EnvelopeTrace {
    pub fn envelope(&self) -> Vec<Extremum> {
        self.maxima
            .iter()
            .map(|m| Extremum {
                kappa: m.kappa,
                value: m.value.abs(),
            })
            .collect()
    }
}

/// Vertex of the parabola through three points.
fn parabola_vertex(x: [f64; 3], y: [f64; 3]) -> Option<(f64, f64)> {
    let (d1, d2) = (x[1] - x[0], x[2] - x[1]);
    let s1 = (y[1] - y[0]) / d1;
    let s2 = (y[2] - y[1]) / d2;
    let curv = (s2 - s1) / (x[2] - x[0]);
    if curv == 0.0 || !curv.is_finite() {
        return None;
    }
    // y = y1 + b (t - x1) + curv (t - x1)^2 around the middle point
    let b = s1 + curv * d1;
    let t = x[1] - b / (2.0 * curv);
    if !(t >= x[0] && t <= x[2]) {
        return None;
    }
    Some((t, y[1] - b * b / (4.0 * curv)))
}

fn refine(x: [f64; 3], y: [f64; 3]) -> Extremum {
    match parabola_vertex(x, y) {
        Some((kappa, value)) => Extremum { kappa, value },
        None => Extremum {
            kappa: x[1],
            value: y[1],
        },
    }
}

/// Three-point local extrema of `ys` over `xs`, refined by parabolas.
/// Plateaus count once, at their first sample.
pub fn local_extrema(xs: &[f64], ys: &[f64]) -> (Vec<Extremum>, Vec<Extremum>) {
    let mut maxima = Vec::new();
    let mut minima = Vec::new();
    for i in 1..xs.len().saturating_sub(1) {
        let (l, c, r) = (ys[i - 1], ys[i], ys[i + 1]);
        let x = [xs[i - 1], xs[i], xs[i + 1]];
        if c > l && c >= r {
            maxima.push(refine(x, [l, c, r]));
        } else if c < l && c <= r {
            minima.push(refine(x, [l, c, r]));
        }
    }
    (maxima, minima)
}

/// Turning points of a positive sequence with hysteresis on `ln v`: a
/// maximum is confirmed once the sequence has fallen by the factor
/// `1 + prominence` below it, a minimum once it has risen by that factor.
/// Confirmed points alternate in kind.
fn turning_points(seq: &[Extremum], prominence: f64) -> Vec<EnvelopeExtremum> {
    let mut out: Vec<EnvelopeExtremum> = Vec::new();
    if seq.len() < 3 {
        return out;
    }
    let threshold = prominence.ln_1p();
    let (xs, vals): (Vec<f64>, Vec<f64>) = seq.iter().map(|e| (e.kappa, e.value)).unzip();
    let ys: Vec<f64> = vals.iter().map(|v| v.max(f64::MIN_POSITIVE).ln()).collect();
    let point = |i: usize, kind| {
        let e = if i > 0 && i + 1 < seq.len() {
            refine(
                [xs[i - 1], xs[i], xs[i + 1]],
                [vals[i - 1], vals[i], vals[i + 1]],
            )
        } else {
            seq[i]
        };
        EnvelopeExtremum {
            kappa: e.kappa,
            value: e.value,
            kind,
        }
    };
    // direction unknown until the sequence moves by the threshold
    let (mut hi, mut lo) = (0usize, 0usize);
    let mut rising: Option<bool> = None;
    for i in 1..seq.len() {
        let v = ys[i];
        match rising {
            None => {
                if v > ys[hi] {
                    hi = i;
                }
                if v < ys[lo] {
                    lo = i;
                }
                if ys[hi] - ys[lo] > threshold {
                    rising = Some(hi > lo);
                }
            }
            Some(true) => {
                if v >= ys[hi] {
                    hi = i;
                } else if ys[hi] - v > threshold {
                    if hi > 0 {
                        out.push(point(hi, ExtremumKind::Max));
                    }
                    lo = i;
                    rising = Some(false);
                }
            }
            Some(false) => {
                if v <= ys[lo] {
                    lo = i;
                } else if v - ys[lo] > threshold {
                    if lo > 0 {
                        out.push(point(lo, ExtremumKind::Min));
                    }
                    hi = i;
                    rising = Some(true);
                }
            }
        }
    }
    out
}

fn subdominant_families(
    envelope: &[Extremum],
    turning: &[EnvelopeExtremum],
    count: usize,
) -> Vec<Vec<Extremum>> {
    let mut cuts: Vec<f64> = turning
        .iter()
        .filter(|t| t.kind == ExtremumKind::Min)
        .map(|t| t.kappa)
        .collect();
    cuts.push(f64::INFINITY);
    let mut runs: Vec<Vec<Extremum>> = vec![Vec::new(); cuts.len()];
    for e in envelope {
        let k = cuts
            .iter()
            .position(|&c| e.kappa < c)
            .unwrap_or(cuts.len() - 1);
        runs[k].push(*e);
    }
    (0..count)
        .map(|r| {
            runs.iter()
                .filter_map(|run| {
                    let mut sorted = run.clone();
                    sorted.sort_by(|x, y| y.value.total_cmp(&x.value));
                    sorted.get(r + 1).copied()
                })
                .collect()
        })
        .collect()
}

/// Samples of `F` on a uniform grid of `density` points per unit κ.
pub fn sample_secular(
    p: &WellParameters,
    lo: f64,
    hi: f64,
    density: usize,
) -> Result<Vec<(f64, f64)>> {
    if !(lo > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "scan range must start above 0, got {lo}"
        )));
    }
    let grid = uniform_grid(lo, hi, density)?;
    Ok(grid.par_iter().map(|&k| (k, secular(p, k))).collect())
}

/// Samples of `H(κ) = κ² F(κ)` on the real axis; `lo = 0` is allowed.
pub fn sample_entire(
    p: &WellParameters,
    lo: f64,
    hi: f64,
    density: usize,
) -> Result<Vec<(f64, f64)>> {
    if !(lo >= 0.0) {
        return Err(Error::InvalidConfig(format!(
            "scan range must start at or above 0, got {lo}"
        )));
    }
    let grid = uniform_grid(lo, hi, density)?;
    Ok(grid
        .par_iter()
        .map(|&k| (k, entire_secular(p, Complex64::new(k, 0.0)).re))
        .collect())
}

pub fn trace_envelope(
    p: &WellParameters,
    lo: f64,
    hi: f64,
    density: usize,
) -> Result<EnvelopeTrace> {
    trace_envelope_with(p, lo, hi, density, &EnvelopeOptions::default())
}

pub fn trace_envelope_with(
    p: &WellParameters,
    lo: f64,
    hi: f64,
    density: usize,
    opts: &EnvelopeOptions,
) -> Result<EnvelopeTrace> {
    let samples = sample_secular(p, lo, hi, density)?;
    trace_samples(&samples, opts)
}

pub fn trace_samples(samples: &[(f64, f64)], opts: &EnvelopeOptions) -> Result<EnvelopeTrace> {
    if !(opts.prominence >= 0.0) {
        return Err(Error::InvalidConfig(
            "prominence must be non-negative".into(),
        ));
    }
    let (xs, ys): (Vec<f64>, Vec<f64>) = samples.iter().copied().unzip();
    let (maxima, minima) = local_extrema(&xs, &ys);
    if maxima.len() < MIN_MAXIMA {
        return Err(Error::InsufficientExtrema {
            found: maxima.len(),
            needed: MIN_MAXIMA,
        });
    }
    let mut trace = EnvelopeTrace {
        maxima,
        minima,
        envelope_extrema: Vec::new(),
        subdominant: Vec::new(),
    };
    let env = trace.envelope();
    trace.envelope_extrema = turning_points(&env, opts.prominence);
    trace.subdominant = subdominant_families(&env, &trace.envelope_extrema, opts.subdominant);
    Ok(trace)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeatPeriod {
    pub mean: f64,
    pub std: f64,
    /// κ-distances between successive envelope extrema of the same kind.
    pub spacings: Vec<f64>,
}

impl BeatPeriod {
    pub fn relative_std(&self) -> f64 {
        self.std / self.mean
    }
}

pub fn beat_period(trace: &EnvelopeTrace) -> Result<BeatPeriod> {
    let ext = &trace.envelope_extrema;
    if ext.len() < 3 {
        return Err(Error::InsufficientExtrema {
            found: ext.len(),
            needed: 3,
        });
    }
    let mut spacings = Vec::new();
    for kind in [ExtremumKind::Max, ExtremumKind::Min] {
        let ks: Vec<f64> = ext
            .iter()
            .filter(|e| e.kind == kind)
            .map(|e| e.kappa)
            .collect();
        spacings.extend(ks.windows(2).map(|w| w[1] - w[0]));
    }
    let n = spacings.len() as f64;
    let mean = spacings.iter().sum::<f64>() / n;
    let var = spacings.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / n;
    Ok(BeatPeriod {
        mean,
        std: var.sqrt(),
        spacings,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuasiDegeneratePair {
    /// 1-based level numbers.
    pub lower: usize,
    pub upper: usize,
    /// Gap over the rolling median around it.
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapStatistics {
    pub gaps: Vec<f64>,
    pub median_gap: f64,
    pub rolling_median: Vec<f64>,
    pub quasi_degenerate_pairs: Vec<QuasiDegeneratePair>,
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Gap `i` is compared with the median of gaps `i-4 ..= i+4` (clipped at the
/// ends of the spectrum).
pub fn gap_statistics(report: &SpectrumReport, threshold: f64) -> Result<GapStatistics> {
    let levels = &report.levels;
    if levels.len() < 4 {
        return Err(Error::TooFewLevels {
            found: levels.len(),
            needed: 4,
        });
    }
    if !(threshold > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "threshold must be positive, got {threshold}"
        )));
    }
    let gaps: Vec<f64> = levels
        .windows(2)
        .map(|w| w[1].gap_prev.unwrap_or(w[1].kappa - w[0].kappa))
        .collect();
    let median_gap = median(&mut gaps.clone());
    let rolling_median: Vec<f64> = (0..gaps.len())
        .map(|i| {
            let lo = i.saturating_sub(MEDIAN_HALF_WINDOW);
            let hi = (i + MEDIAN_HALF_WINDOW + 1).min(gaps.len());
            median(&mut gaps[lo..hi].to_vec())
        })
        .collect();
    let quasi_degenerate_pairs = gaps
        .iter()
        .zip(&rolling_median)
        .enumerate()
        .filter(|(_, (&g, &m))| g < threshold * m)
        .map(|(i, (&g, &m))| QuasiDegeneratePair {
            lower: levels[i].n,
            upper: levels[i + 1].n,
            ratio: g / m,
        })
        .collect();
    Ok(GapStatistics {
        gaps,
        median_gap,
        rolling_median,
        quasi_degenerate_pairs,
    })
}

/// Parameters and default κ range of reference figure `id`.
pub fn figure_parameters(id: u32) -> Result<(WellParameters, (f64, f64))> {
    let (a, omega, eta, hi) = match id {
        1 => (0.95, 1.5, 20.0, 15.0),
        2 => (0.95, 15000.0, 20.0, 60.0),
        3 => (0.85, 15000.0, 20.0, 60.0),
        4 => (0.65, 15000.0, 20.0, 60.0),
        5 => (0.65, 150.0, 20.0, 60.0),
        6 => (0.35, 15000.0, 20.0, 60.0),
        7 => (0.35, 150.0, 20.0, 60.0),
        _ => return Err(Error::InvalidFigure(id)),
    };
    Ok((WellParameters::new(a, omega, eta)?, (0.0, hi)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FigureDataset {
    pub id: u32,
    pub parameters: WellParameters,
    pub kappa_range: (f64, f64),
    pub samples: Vec<(f64, f64)>,
    pub spectrum: SpectrumReport,
    /// `None` when the window holds fewer than [`MIN_MAXIMA`] maxima.
    pub envelope: Option<EnvelopeTrace>,
    pub gaps: GapStatistics,
}

pub fn figure_data(id: u32) -> Result<FigureDataset> {
    figure_data_with(id, None, None)
}

/// `range` overrides the default κ window, `density` the samples per unit κ.
pub fn figure_data_with(
    id: u32,
    range: Option<(f64, f64)>,
    density: Option<usize>,
) -> Result<FigureDataset> {
    let (p, default_range) = figure_parameters(id)?;
    let kappa_range = range.unwrap_or(default_range);
    let cfg = ScanConfig::for_parameters(&p, kappa_range.0, kappa_range.1)?;
    let cfg = match density {
        Some(d) => cfg.with_density(d)?,
        None => cfg,
    };
    let spectrum = compute_spectrum(&p, &cfg, false)?;
    let samples = sample_secular(&p, cfg.kappa_min, cfg.kappa_max, cfg.samples_per_unit)?;
    let envelope = match trace_samples(&samples, &EnvelopeOptions::default()) {
        Ok(t) => Some(t),
        Err(Error::InsufficientExtrema { .. }) => None,
        Err(e) => return Err(e),
    };
    let gaps = gap_statistics(&spectrum, cfg.cluster_threshold)?;
    Ok(FigureDataset {
        id,
        parameters: p,
        kappa_range,
        samples,
        spectrum,
        envelope,
        gaps,
    })
}
