//! One function per subcommand. Each returns whether its checks passed.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use anyhow::{Context as _, Result};
use hecke_core::bfree::{
    build_bset, default_prime_limit, direct_sign_count, lower_bound_count, partition_signs, sieve_bfree, BElement,
};
use hecke_core::intervals::{c_n_with_exponent, verify_short_interval, IntervalConfig, IntervalReport};
use hecke_core::verify::{self, Context, CriterionResult};
use hecke_core::voronoi::{residual_scan, summarize, ScanSummary, VoronoiEvaluation};
use hecke_core::{forms::write_coefficients, EigenForm};
use serde::Serialize;

use crate::config::{Format, FormSpec, RunConfig};
use crate::output::{fmt_f64, write_json};
use crate::UsageError;

/// Default table length for `coeffs` when no bound is given (files keep their own).
pub const DEFAULT_COEFF_BOUND: u64 = 1000;

fn load(cfg: &RunConfig, bound: u64) -> Result<EigenForm> {
    let form = cfg.form.load(bound).with_context(|| format!("building form {}", describe(&cfg.form)))?;
    if let FormSpec::File(_) = cfg.form {
        if form.bound() < bound {
            return Err(UsageError(format!(
                "coefficient file stops at n = {}, this run needs n up to {bound}",
                form.bound()
            ))
            .into());
        }
    }
    Ok(form)
}

fn describe(spec: &FormSpec) -> String {
    match spec {
        FormSpec::Level1 { weight } => format!("level1:{weight}"),
        FormSpec::Curve { level, .. } => format!("curve of conductor {level}"),
        FormSpec::File(path) => format!("file:{}", path.display()),
    }
}

fn stdout() -> BufWriter<io::StdoutLock<'static>> {
    BufWriter::new(io::stdout().lock())
}

#[derive(Serialize)]
struct CoefficientDump {
    weight: u32,
    level: u64,
    /// Decimal strings: the integers outgrow every JSON number type.
    coefficients: Vec<String>,
}

pub fn coeffs(cfg: &RunConfig, out: Option<&Path>) -> Result<bool> {
    let bound = match (&cfg.form, cfg.bound) {
        (_, Some(b)) => b,
        (FormSpec::File(_), None) => 0,
        _ => DEFAULT_COEFF_BOUND,
    };
    let form = load(cfg, bound)?;
    let sink: Box<dyn Write> = match out {
        Some(path) => Box::new(BufWriter::new(
            File::create(path).with_context(|| format!("creating {}", path.display()))?,
        )),
        None => Box::new(stdout()),
    };
    match cfg.format {
        Format::Csv => write_coefficients(&form, sink)?,
        Format::Json => write_json(
            sink,
            &CoefficientDump {
                weight: form.weight(),
                level: form.level(),
                coefficients: form.coefficients().iter().map(|a| a.to_string()).collect(),
            },
        )?,
    }
    Ok(true)
}

#[derive(Clone, Debug, Serialize)]
pub struct SignsRow {
    pub x: u64,
    pub plus: u64,
    pub minus: u64,
    pub plus_density: f64,
    pub minus_density: f64,
    pub lower_plus: u64,
    pub lower_minus: u64,
    pub lower_plus_density: f64,
    pub lower_minus_density: f64,
    pub bfree: u64,
    pub bfree_density: f64,
    pub density_product: f64,
}

/// Powers of ten below `bound`, then `bound` itself.
pub fn signs_grid(bound: u64) -> Vec<u64> {
    let mut grid: Vec<u64> = std::iter::successors(Some(10u64), |x| x.checked_mul(10))
        .take_while(|&x| x < bound)
        .collect();
    grid.push(bound);
    grid
}

pub fn signs(cfg: &RunConfig) -> Result<bool> {
    let grid: Vec<u64> = match (&cfg.x, cfg.bound) {
        (Some(xs), _) => xs.0.iter().map(|x| x.floor() as u64).collect(),
        (None, Some(b)) => signs_grid(b),
        (None, None) => return Err(UsageError("signs needs --bound or --x".into()).into()),
    };
    let top = grid.iter().copied().max().unwrap_or(10);
    let bound = cfg.bound_for(top)?;
    let form = load(cfg, bound)?;
    let prime_limit = cfg.p.unwrap_or_else(|| default_prime_limit(top));
    let bset = build_bset(&form, prime_limit)?;
    let sieve = sieve_bfree(&bset, top);
    let partition = partition_signs(&form, &sieve)?;
    let density_product = bset.density_product();

    let mut ok = true;
    let mut rows = Vec::with_capacity(grid.len());
    for &x in &grid {
        let direct = direct_sign_count(&form, x)?;
        let lower = lower_bound_count(&form, &partition, x)?;
        // the B-free construction only ever undercounts each sign
        ok &= lower.plus <= direct.plus && lower.minus <= direct.minus;
        let xf = x as f64;
        let bfree = sieve.count_up_to(x);
        rows.push(SignsRow {
            x,
            plus: direct.plus,
            minus: direct.minus,
            plus_density: direct.plus as f64 / xf,
            minus_density: direct.minus as f64 / xf,
            lower_plus: lower.plus,
            lower_minus: lower.minus,
            lower_plus_density: lower.plus as f64 / xf,
            lower_minus_density: lower.minus as f64 / xf,
            bfree,
            bfree_density: bfree as f64 / xf,
            density_product,
        });
    }

    let mut out = stdout();
    match cfg.format {
        Format::Csv => {
            writeln!(
                out,
                "x,plus,minus,plus_density,minus_density,lower_plus,lower_minus,\
                 lower_plus_density,lower_minus_density,bfree,bfree_density,density_product"
            )?;
            for r in &rows {
                writeln!(
                    out,
                    "{},{},{},{},{},{},{},{},{},{},{},{}",
                    r.x,
                    r.plus,
                    r.minus,
                    fmt_f64(r.plus_density),
                    fmt_f64(r.minus_density),
                    r.lower_plus,
                    r.lower_minus,
                    fmt_f64(r.lower_plus_density),
                    fmt_f64(r.lower_minus_density),
                    r.bfree,
                    fmt_f64(r.bfree_density),
                    fmt_f64(r.density_product),
                )?;
            }
        }
        Format::Json => {
            #[derive(Serialize)]
            struct Report<'a> {
                weight: u32,
                level: u64,
                prime_limit: u64,
                least_negative_prime: u64,
                b_set: &'a [BElement],
                rows: &'a [SignsRow],
                pass: bool,
            }
            write_json(
                &mut out,
                &Report {
                    weight: form.weight(),
                    level: form.level(),
                    prime_limit,
                    least_negative_prime: form.least_negative_prime()?,
                    b_set: bset.elements(),
                    rows: &rows,
                    pass: ok,
                },
            )?;
        }
    }
    out.flush()?;
    Ok(ok)
}

pub fn bfree(cfg: &RunConfig) -> Result<bool> {
    let limit = cfg
        .bound
        .ok_or_else(|| UsageError("bfree needs --bound (the sieve limit)".into()))?;
    let form = load(cfg, limit)?;
    let prime_limit = cfg.p.unwrap_or_else(|| default_prime_limit(limit));
    let bset = build_bset(&form, prime_limit)?;
    let sieve = sieve_bfree(&bset, limit);
    let mut out = stdout();
    match cfg.format {
        Format::Csv => hecke_core::bfree::write_membership_csv(&form, &sieve, &mut out)?,
        Format::Json => {
            #[derive(Serialize)]
            struct Report<'a> {
                limit: u64,
                prime_limit: u64,
                b_set: &'a [BElement],
                count: u64,
                density: f64,
                density_product: f64,
                members: Vec<u64>,
            }
            let count = sieve.count_up_to(limit);
            write_json(
                &mut out,
                &Report {
                    limit,
                    prime_limit,
                    b_set: bset.elements(),
                    count,
                    density: count as f64 / limit as f64,
                    density_product: bset.density_product(),
                    members: sieve.iter().collect(),
                },
            )?;
        }
    }
    out.flush()?;
    Ok(true)
}

fn required_x(cfg: &RunConfig, cmd: &str) -> Result<Vec<f64>> {
    cfg.x
        .as_ref()
        .map(|r| r.0.clone())
        .ok_or_else(|| UsageError(format!("{cmd} needs --x lo:hi:count or --x value")).into())
}

pub fn write_voronoi_csv<W: Write>(mut out: W, rows: &[VoronoiEvaluation]) -> io::Result<()> {
    writeln!(out, "x,M,direct,main,residual,residual_over_x4")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            fmt_f64(r.x),
            r.m,
            fmt_f64(r.direct),
            fmt_f64(r.main),
            fmt_f64(r.residual),
            fmt_f64(r.residual_over_x4)
        )?;
    }
    Ok(())
}

pub fn voronoi(cfg: &RunConfig) -> Result<bool> {
    let xs = required_x(cfg, "voronoi")?;
    let top = xs.iter().copied().fold(0.0, f64::max);
    let form = load(cfg, cfg.bound_for(top.floor() as u64)?)?;
    let rows = residual_scan(&form, &xs, cfg.m.policy(), cfg.precision)?;
    let mut out = stdout();
    match cfg.format {
        Format::Csv => write_voronoi_csv(&mut out, &rows)?,
        Format::Json => {
            #[derive(Serialize)]
            struct Report<'a> {
                weight: u32,
                level: u64,
                front_sign: i8,
                rows: &'a [VoronoiEvaluation],
                summary: ScanSummary,
            }
            write_json(
                &mut out,
                &Report {
                    weight: form.weight(),
                    level: form.level(),
                    front_sign: rows.first().map_or(0, |r| r.sign),
                    rows: &rows,
                    summary: summarize(&rows),
                },
            )?;
        }
    }
    out.flush()?;
    Ok(true)
}

pub fn write_intervals_csv<W: Write>(mut out: W, rows: &[IntervalReport]) -> io::Result<()> {
    writeln!(out, "x,h,plus,minus,threshold,pass,x1,x2,x3")?;
    for r in rows {
        let triple = match r.triple {
            Some(t) => t.map(fmt_f64).join(","),
            None => ",,".into(),
        };
        writeln!(
            out,
            "{},{},{},{},{},{},{triple}",
            fmt_f64(r.x),
            fmt_f64(r.h),
            r.plus,
            r.minus,
            fmt_f64(r.threshold),
            r.pass
        )?;
    }
    Ok(())
}

pub fn intervals(cfg: &RunConfig, x_floor: f64) -> Result<bool> {
    let xs = required_x(cfg, "intervals")?;
    let icfg = IntervalConfig {
        c: cfg.c,
        eps: cfg.eps,
        x_floor,
        ..IntervalConfig::default()
    };
    // enough coefficients for both the window and the follow-up triple search
    let level = match cfg.form.level() {
        Some(n) => n,
        None => cfg.form.load(10)?.level(),
    };
    let cn = c_n_with_exponent(level, icfg.c, icfg.psi_exponent);
    let need = xs
        .iter()
        .map(|&x| {
            let y = x + cn * x.sqrt();
            (y + cn * y.sqrt()).ceil() as u64 + 1
        })
        .max()
        .unwrap_or(10);
    let form = load(cfg, cfg.bound_for(need)?)?;
    let reports: Vec<IntervalReport> = xs
        .iter()
        .map(|&x| verify_short_interval(&form, x, &icfg))
        .collect::<hecke_core::Result<_>>()?;
    let ok = reports.iter().all(|r| r.pass || r.below_floor);
    let mut out = stdout();
    match cfg.format {
        Format::Csv => write_intervals_csv(&mut out, &reports)?,
        Format::Json if reports.len() == 1 => write_json(&mut out, &reports[0])?,
        Format::Json => write_json(&mut out, &reports)?,
    }
    out.flush()?;
    Ok(ok)
}

pub fn verify(ids: &[u8], format: Format) -> Result<bool> {
    let ids: Vec<u8> = if ids.is_empty() {
        (1..=verify::CRITERIA).collect()
    } else {
        ids.to_vec()
    };
    if let Some(bad) = ids.iter().find(|&&id| id == 0 || id > verify::CRITERIA) {
        return Err(UsageError(format!("no criterion {bad}; valid ids are 1 to {}", verify::CRITERIA)).into());
    }
    let ctx = Context::lazy();
    let mut results: Vec<CriterionResult> = Vec::with_capacity(ids.len());
    let mut out = stdout();
    for id in ids {
        let r = verify::run(&ctx, id)?;
        if format == Format::Csv {
            writeln!(out, "{r}")?;
            out.flush()?;
        }
        results.push(r);
    }
    let ok = results.iter().all(|r| r.passed);
    if format == Format::Json {
        write_json(&mut out, &results)?;
    }
    out.flush()?;
    Ok(ok)
}
