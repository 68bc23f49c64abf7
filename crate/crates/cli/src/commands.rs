use std::fs;
use std::path::Path;

use num_complex::Complex64;
use ptwell::analysis::{
    figure_data_with, figure_parameters, sample_entire, sample_secular, FigureDataset,
};
use ptwell::complexroots::STRIP_START;
use ptwell::oracle::RegularizedProblem;
use ptwell::{
    breaking_search, compute_spectrum, convergence_study, eigenfunction, find_level,
    parity_decompose, ComplexRegion, EigenvalueRecord, Error, ScanConfig, Side, WellParameters,
};
use serde::Serialize;

use crate::output::{float, opt_float, write_csv, write_json};
use crate::{
    BreakingArgs, Failure, FigureArgs, Format, ModelArgs, OracleArgs, ScanArgs, SpectrumArgs,
    WavefunctionArgs,
};

fn usage(e: Error) -> Failure {
    Failure::Usage(e.to_string())
}

fn computation(e: Error) -> Failure {
    Failure::Computation(e.to_string())
}

fn model(m: &ModelArgs) -> Result<WellParameters, Failure> {
    WellParameters::new(m.a, m.omega, m.eta).map_err(usage)
}

fn scan_config(
    p: &WellParameters,
    kappa_min: f64,
    kappa_max: f64,
    density: Option<usize>,
    tol: Option<f64>,
) -> Result<ScanConfig, Failure> {
    let mut cfg = ScanConfig::for_parameters(p, kappa_min, kappa_max).map_err(usage)?;
    if let Some(d) = density {
        cfg = cfg.with_density(d).map_err(usage)?;
    }
    if let Some(t) = tol {
        cfg = ScanConfig::new(
            cfg.kappa_min,
            cfg.kappa_max,
            cfg.samples_per_unit,
            t,
            cfg.cluster_threshold,
        )
        .map_err(usage)?;
    }
    Ok(cfg)
}

pub const SPECTRUM_HEADER: [&str; 6] = ["n", "kappa", "energy", "residual", "gap_prev", "flag"];

fn level_row(l: &EigenvalueRecord) -> Vec<String> {
    vec![
        l.n.to_string(),
        float(l.kappa),
        float(l.energy),
        float(l.residual),
        opt_float(l.gap_prev),
        l.flag.as_str().to_string(),
    ]
}

pub fn spectrum(args: &SpectrumArgs) -> Result<(), Failure> {
    let p = model(&args.model)?;
    let cfg = scan_config(&p, args.kappa_min, args.kappa_max, args.density, args.tol)?;
    let report = compute_spectrum(&p, &cfg, args.negative).map_err(computation)?;
    let out = args.output.out.as_deref();
    match args.output.format {
        Format::Json => write_json(out, &report),
        Format::Csv => {
            // negative energies first, in increasing energy
            let rows: Vec<Vec<String>> = report
                .negative_levels
                .iter()
                .rev()
                .chain(&report.levels)
                .map(level_row)
                .collect();
            write_csv(out, &SPECTRUM_HEADER, &rows)
        }
    }
}

#[derive(Serialize)]
struct Sample {
    kappa: f64,
    value: f64,
}

pub fn scan(args: &ScanArgs) -> Result<(), Failure> {
    let p = model(&args.model)?;
    let cfg = scan_config(&p, args.kappa_min, args.kappa_max, args.density, None)?;
    let samples = if args.entire {
        sample_entire(&p, args.kappa_min, cfg.kappa_max, cfg.samples_per_unit)
    } else {
        sample_secular(&p, cfg.kappa_min, cfg.kappa_max, cfg.samples_per_unit)
    }
    .map_err(computation)?;
    let column = if args.entire { "H" } else { "F" };
    let out = args.output.out.as_deref();
    match args.output.format {
        Format::Json => {
            let v: Vec<Sample> = samples
                .iter()
                .map(|&(kappa, value)| Sample { kappa, value })
                .collect();
            write_json(out, &v)
        }
        Format::Csv => {
            let rows: Vec<Vec<String>> = samples
                .iter()
                .map(|&(k, v)| vec![float(k), float(v)])
                .collect();
            write_csv(out, &["kappa", column], &rows)
        }
    }
}

#[derive(Serialize)]
struct BreakingOutput {
    real_roots: usize,
    winding_total: i64,
    off_axis: Vec<Complex64>,
    unlocated: i64,
}

pub fn breaking(args: &BreakingArgs) -> Result<(), Failure> {
    let p = model(&args.model)?;
    let h = args.strip_height;
    ComplexRegion::new(STRIP_START, args.kappa_max, -h, h).map_err(usage)?;
    let r = breaking_search(&p, args.kappa_max, h).map_err(computation)?;
    let out = BreakingOutput {
        real_roots: r.real_roots,
        winding_total: r.winding_total,
        off_axis: r.off_axis,
        unlocated: r.unlocated,
    };
    write_json(args.out.as_deref(), &out)
}

#[derive(Serialize)]
struct GridRow {
    x: f64,
    side: &'static str,
    re_psi: f64,
    im_psi: f64,
    psi_s: f64,
    psi_a: f64,
}

pub fn wavefunction(args: &WavefunctionArgs) -> Result<(), Failure> {
    let p = model(&args.model)?;
    if args.level == 0 {
        return Err(Failure::Usage("--level counts from 1".into()));
    }
    if args.points < 2 {
        return Err(Failure::Usage("--points must be at least 2".into()));
    }
    let level = find_level(&p, args.level).map_err(computation)?;
    let psi = eigenfunction(&p, level.kappa, level.kappa_lo).map_err(computation)?;
    let parts = parity_decompose(&psi).map_err(computation)?;
    let a = p.a();
    let n = args.points;
    let mut xs: Vec<(f64, Side, &'static str)> = (0..n)
        .map(|i| {
            if i == n - 1 {
                1.0
            } else {
                -1.0 + 2.0 * i as f64 / (n - 1) as f64
            }
        })
        .filter(|&x| x != a && x != -a)
        .map(|x| (x, Side::Left, "-"))
        .collect();
    for x in [-a, a] {
        xs.push((x, Side::Left, "L"));
        xs.push((x, Side::Right, "R"));
    }
    // stable sort keeps L before R at the same x
    xs.sort_by(|u, v| u.0.total_cmp(&v.0));
    let rows = xs
        .iter()
        .map(|&(x, side, tag)| {
            let v = psi.evaluate_side(x, side)?;
            Ok(GridRow {
                x,
                side: tag,
                re_psi: v.re,
                im_psi: v.im,
                psi_s: parts.psi_s(x)?,
                psi_a: parts.psi_a(x)?,
            })
        })
        .collect::<Result<Vec<_>, Error>>()
        .map_err(computation)?;
    let out = args.output.out.as_deref();
    match args.output.format {
        Format::Json => write_json(out, &rows),
        Format::Csv => {
            let table: Vec<Vec<String>> = rows
                .iter()
                .map(|r| {
                    vec![
                        float(r.x),
                        r.side.to_string(),
                        float(r.re_psi),
                        float(r.im_psi),
                        float(r.psi_s),
                        float(r.psi_a),
                    ]
                })
                .collect();
            write_csv(
                out,
                &["x", "side", "re_psi", "im_psi", "psi_S", "psi_A"],
                &table,
            )
        }
    }
}

#[derive(Serialize)]
struct Manifest<'a> {
    id: u32,
    parameters: &'a WellParameters,
    kappa_min: f64,
    kappa_max: f64,
    samples_per_unit: usize,
    levels: usize,
    quasi_degenerate_pairs: usize,
    envelope_extrema: Option<usize>,
    files: Vec<&'static str>,
}

fn write_figure(dir: &Path, d: &FigureDataset) -> Result<(), Failure> {
    let samples: Vec<Vec<String>> = d
        .samples
        .iter()
        .map(|&(k, f)| vec![float(k), float(f)])
        .collect();
    write_csv(Some(&dir.join("samples.csv")), &["kappa", "F"], &samples)?;
    let levels: Vec<Vec<String>> = d.spectrum.levels.iter().map(level_row).collect();
    write_csv(Some(&dir.join("roots.csv")), &SPECTRUM_HEADER, &levels)?;
    let gaps: Vec<Vec<String>> = d
        .gaps
        .gaps
        .iter()
        .zip(&d.gaps.rolling_median)
        .enumerate()
        .map(|(i, (&g, &m))| {
            vec![
                d.spectrum.levels[i].n.to_string(),
                d.spectrum.levels[i + 1].n.to_string(),
                float(g),
                float(m),
                float(g / m),
            ]
        })
        .collect();
    write_csv(
        Some(&dir.join("gaps.csv")),
        &["lower", "upper", "gap", "rolling_median", "ratio"],
        &gaps,
    )?;
    let mut files = vec!["samples.csv", "roots.csv", "gaps.csv"];
    if let Some(t) = &d.envelope {
        let mut rows: Vec<Vec<String>> = Vec::new();
        for (series, list) in [("maxima", &t.maxima), ("minima", &t.minima)] {
            rows.extend(
                list.iter()
                    .map(|e| vec![series.into(), String::new(), float(e.kappa), float(e.value)]),
            );
        }
        rows.extend(t.envelope_extrema.iter().map(|e| {
            vec![
                "envelope".into(),
                e.kind.as_str().into(),
                float(e.kappa),
                float(e.value),
            ]
        }));
        write_csv(
            Some(&dir.join("envelope.csv")),
            &["series", "kind", "kappa", "value"],
            &rows,
        )?;
        files.push("envelope.csv");
    }
    let manifest = Manifest {
        id: d.id,
        parameters: &d.parameters,
        kappa_min: d.spectrum.config.kappa_min,
        kappa_max: d.spectrum.config.kappa_max,
        samples_per_unit: d.spectrum.config.samples_per_unit,
        levels: d.spectrum.levels.len(),
        quasi_degenerate_pairs: d.gaps.quasi_degenerate_pairs.len(),
        envelope_extrema: d.envelope.as_ref().map(|t| t.envelope_extrema.len()),
        files,
    };
    write_json(Some(&dir.join("manifest.json")), &manifest)
}

pub fn figure(args: &FigureArgs) -> Result<(), Failure> {
    let (p, (lo, hi)) = figure_parameters(args.id).map_err(usage)?;
    let range = (args.kappa_min.unwrap_or(lo), args.kappa_max.unwrap_or(hi));
    scan_config(&p, range.0, range.1, args.density, None)?;
    let d = figure_data_with(args.id, Some(range), args.density).map_err(computation)?;
    fs::create_dir_all(&args.out)
        .map_err(|e| Failure::Computation(format!("{}: {e}", args.out.display())))?;
    write_figure(&args.out, &d)
}

pub fn oracle(args: &OracleArgs) -> Result<(), Failure> {
    let p = model(&args.model)?;
    if args.level == 0 {
        return Err(Failure::Usage("--level counts from 1".into()));
    }
    if args.sigmas.len() < 2
        || args
            .sigmas
            .windows(2)
            .any(|w| w[1].partial_cmp(&w[0]) != Some(std::cmp::Ordering::Less))
    {
        return Err(Failure::Usage(
            "--sigmas needs at least two strictly decreasing values".into(),
        ));
    }
    for &s in &args.sigmas {
        RegularizedProblem::with_sigma(p, s).map_err(usage)?;
    }
    let study = convergence_study(&p, args.level, &args.sigmas).map_err(computation)?;
    let out = args.output.out.as_deref();
    match args.output.format {
        Format::Json => write_json(out, &study),
        Format::Csv => {
            let rows: Vec<Vec<String>> = study
                .rows
                .iter()
                .map(|r| {
                    vec![
                        float(r.sigma),
                        float(r.energy.re),
                        float(r.energy.im),
                        float(r.delta_to_matching.re),
                    ]
                })
                .collect();
            write_csv(out, &["sigma", "re_E", "im_E", "delta_to_matching"], &rows)
        }
    }
}
