//! Run configuration: command-line flags merged over an optional key=value file.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};
use hecke_core::voronoi::{log_spaced, TruncationPolicy};
use hecke_core::{EigenForm, Precision, Weierstrass};

use crate::UsageError;

/// Which form to load or generate.
#[derive(Clone, Debug, PartialEq)]
pub enum FormSpec {
    Level1 { weight: i64 },
    Curve { curve: Weierstrass, level: u64 },
    File(PathBuf),
}

impl FromStr for FormSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let (kind, rest) = s
            .split_once(':')
            .ok_or_else(|| format!("form spec `{s}` must look like level1:k, curve:a1,a2,a3,a4,a6,N or file:path"))?;
        match kind {
            "level1" => rest
                .trim()
                .parse()
                .map(|weight| FormSpec::Level1 { weight })
                .map_err(|_| format!("weight `{rest}` is not an integer")),
            "curve" => {
                let parts: Vec<&str> = rest.split(',').map(str::trim).collect();
                if parts.len() != 6 {
                    return Err(format!("curve spec needs a1,a2,a3,a4,a6,N; got `{rest}`"));
                }
                let coeffs: Vec<i64> = parts[..5]
                    .iter()
                    .map(|p| p.parse().map_err(|_| format!("curve coefficient `{p}` is not an integer")))
                    .collect::<Result<_, _>>()?;
                let level = parts[5]
                    .parse()
                    .map_err(|_| format!("conductor `{}` is not a positive integer", parts[5]))?;
                Ok(FormSpec::Curve {
                    curve: Weierstrass::new(coeffs[0], coeffs[1], coeffs[2], coeffs[3], coeffs[4]),
                    level,
                })
            }
            "file" if !rest.is_empty() => Ok(FormSpec::File(PathBuf::from(rest))),
            _ => Err(format!("unknown form spec `{s}`")),
        }
    }
}

impl FormSpec {
    /// Builds the form with coefficients up to `bound`; files carry their own bound.
    pub fn load(&self, bound: u64) -> hecke_core::Result<EigenForm> {
        match self {
            FormSpec::Level1 { weight } => EigenForm::from_level1(*weight, bound),
            FormSpec::Curve { curve, level } => EigenForm::from_elliptic_curve(curve, *level, bound),
            FormSpec::File(path) => EigenForm::from_file(path),
        }
    }

    pub fn level(&self) -> Option<u64> {
        match self {
            FormSpec::Level1 { .. } => Some(1),
            FormSpec::Curve { level, .. } => Some(*level),
            FormSpec::File(_) => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            _ => Err(format!("format must be csv or json, got `{s}`")),
        }
    }
}

/// `--M`: `x`, `x/k`, `x^A` or a fixed integer.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum MPolicy {
    Scaled(TruncationPolicy),
    Fixed(u64),
}

impl MPolicy {
    /// A fixed `M` is the policy `m * x^0`.
    pub fn policy(&self) -> TruncationPolicy {
        match self {
            MPolicy::Scaled(p) => *p,
            MPolicy::Fixed(m) => TruncationPolicy {
                scale: *m as f64,
                exponent: 0.0,
            },
        }
    }
}

impl Default for MPolicy {
    fn default() -> Self {
        MPolicy::Scaled(TruncationPolicy::default())
    }
}

impl FromStr for MPolicy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let s = s.trim();
        if s == "x" {
            return Ok(MPolicy::default());
        }
        if let Some(k) = s.strip_prefix("x/") {
            let k: f64 = k.parse().map_err(|_| format!("bad divisor in M policy `{s}`"))?;
            if k.is_nan() || k <= 0.0 {
                return Err(format!("divisor in M policy `{s}` must be positive"));
            }
            return Ok(MPolicy::Scaled(TruncationPolicy::fraction(k)));
        }
        if let Some(a) = s.strip_prefix("x^") {
            let a: f64 = a.parse().map_err(|_| format!("bad exponent in M policy `{s}`"))?;
            return TruncationPolicy::power(a).map(MPolicy::Scaled).map_err(|e| e.to_string());
        }
        s.parse()
            .map(MPolicy::Fixed)
            .map_err(|_| format!("M policy must be x, x/k, x^A or an integer; got `{s}`"))
    }
}

/// `lo:hi:count` (log-spaced) or a single value.
#[derive(Clone, Debug, PartialEq)]
pub struct XRange(pub Vec<f64>);

impl FromStr for XRange {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let num = |v: &str| -> Result<f64, String> {
            let x: f64 = v.trim().parse().map_err(|_| format!("`{v}` is not a number in range `{s}`"))?;
            if !(x.is_finite() && x >= 1.0) {
                return Err(format!("range values must be finite and >= 1, got `{v}`"));
            }
            Ok(x)
        };
        let parts: Vec<&str> = s.split(':').collect();
        match parts.as_slice() {
            [one] => Ok(XRange(vec![num(one)?])),
            [lo, hi, count] => {
                let (lo, hi) = (num(lo)?, num(hi)?);
                let count: usize = count
                    .trim()
                    .parse()
                    .map_err(|_| format!("count `{count}` in range `{s}` is not a positive integer"))?;
                if count == 0 || lo > hi {
                    return Err(format!("range `{s}` needs lo <= hi and count >= 1"));
                }
                Ok(XRange(log_spaced(lo, hi, count)))
            }
            _ => Err(format!("range `{s}` must be lo:hi:count or a single value")),
        }
    }
}

/// Every knob a subcommand may use. Unset values are `None` until resolved.
#[derive(Clone, Debug, Default)]
pub struct RawConfig {
    pub form: Option<String>,
    pub bound: Option<String>,
    pub format: Option<String>,
    pub m: Option<String>,
    pub c: Option<String>,
    pub eps: Option<String>,
    pub p: Option<String>,
    pub precision: Option<String>,
    pub x: Option<String>,
}

const KEYS: [&str; 9] = ["form", "bound", "format", "M", "C", "eps", "P", "precision", "x"];

impl RawConfig {
    fn slot(&mut self, key: &str) -> Option<&mut Option<String>> {
        Some(match key {
            "form" => &mut self.form,
            "bound" => &mut self.bound,
            "format" => &mut self.format,
            "M" => &mut self.m,
            "C" => &mut self.c,
            "eps" => &mut self.eps,
            "P" => &mut self.p,
            "precision" => &mut self.precision,
            "x" => &mut self.x,
            _ => return None,
        })
    }

    /// Fills every unset knob from `file`.
    pub fn merge_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config file {}", path.display()))
            .map_err(|e| UsageError(format!("{e:#}")))?;
        for (key, value) in parse_config(&text).map_err(|e| UsageError(format!("{}: {e}", path.display())))? {
            let slot = self.slot(&key).expect("keys validated by parse_config");
            if slot.is_none() {
                *slot = Some(value);
            }
        }
        Ok(())
    }
}

/// `key = value` lines; `#` starts a comment.
pub fn parse_config(text: &str) -> Result<BTreeMap<String, String>, String> {
    let mut out = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| format!("line {}: expected key=value", i + 1))?;
        let key = key.trim().trim_start_matches("--");
        if !KEYS.contains(&key) {
            return Err(format!("line {}: unknown key `{key}` (known: {})", i + 1, KEYS.join(", ")));
        }
        out.insert(key.to_string(), value.trim().to_string());
    }
    Ok(out)
}

fn parse_opt<T: FromStr>(name: &str, value: &Option<String>) -> Result<Option<T>>
where
    T::Err: std::fmt::Display,
{
    value
        .as_deref()
        .map(|v| v.parse::<T>().map_err(|e| anyhow!(UsageError(format!("--{name}: {e}")))))
        .transpose()
}

/// Validated run configuration.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub form: FormSpec,
    /// Explicit coefficient bound, if any; otherwise each command derives one.
    pub bound: Option<u64>,
    pub format: Format,
    pub m: MPolicy,
    pub c: f64,
    pub eps: f64,
    pub p: Option<u64>,
    pub precision: Precision,
    pub x: Option<XRange>,
}

impl RunConfig {
    pub fn resolve(raw: &RawConfig) -> Result<RunConfig> {
        let form: FormSpec = parse_opt("form", &raw.form)?
            .ok_or_else(|| UsageError("a form is required: --form level1:k | curve:a1,a2,a3,a4,a6,N | file:path".into()))?;
        let bound: Option<u64> = parse_opt::<f64>("bound", &raw.bound)?
            .map(|b| {
                if b.fract() != 0.0 || !(10.0..=1e10).contains(&b) {
                    Err(UsageError(format!("--bound must be an integer >= 10, got {b}")))
                } else {
                    Ok(b as u64)
                }
            })
            .transpose()?;
        let c: f64 = parse_opt("C", &raw.c)?.unwrap_or(3.0);
        if !(c > 0.0 && c.is_finite()) {
            bail!(UsageError(format!("--C must be positive, got {c}")));
        }
        let eps: f64 = parse_opt("eps", &raw.eps)?.unwrap_or(0.1);
        if !(0.0..0.25).contains(&eps) {
            bail!(UsageError(format!("--eps must lie in [0, 1/4), got {eps}")));
        }
        let p: Option<u64> = parse_opt("P", &raw.p)?;
        if p == Some(0) {
            bail!(UsageError("--P must be positive".into()));
        }
        Ok(RunConfig {
            form,
            bound,
            format: parse_opt("format", &raw.format)?.unwrap_or_default(),
            m: parse_opt("M", &raw.m)?.unwrap_or_default(),
            c,
            eps,
            p,
            precision: parse_opt("precision", &raw.precision)?.unwrap_or_default(),
            x: parse_opt("x", &raw.x)?,
        })
    }

    /// The explicit bound if given (it must cover `needed`), else `needed` itself.
    pub fn bound_for(&self, needed: u64) -> Result<u64> {
        let needed = needed.max(10);
        match self.bound {
            Some(b) if b < needed && !matches!(self.form, FormSpec::File(_)) => Err(UsageError(format!(
                "--bound {b} is too small; this run needs coefficients up to {needed}"
            ))
            .into()),
            Some(b) => Ok(b),
            None => Ok(needed),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn form_specs() {
        assert_eq!("level1:12".parse::<FormSpec>().unwrap(), FormSpec::Level1 { weight: 12 });
        assert_eq!(
            "curve:0,-1,1,-10,-20,11".parse::<FormSpec>().unwrap(),
            FormSpec::Curve {
                curve: Weierstrass::new(0, -1, 1, -10, -20),
                level: 11
            }
        );
        assert_eq!("file:a.txt".parse::<FormSpec>().unwrap(), FormSpec::File("a.txt".into()));
        for bad in ["level1", "level1:x", "curve:1,2,3", "curve:0,-1,1,-10,-20,z", "file:", "maass:1"] {
            assert!(bad.parse::<FormSpec>().is_err(), "{bad}");
        }
    }

    #[test]
    fn m_policies() {
        assert_eq!("x".parse::<MPolicy>().unwrap().policy().truncation(1000.5), 1000);
        assert_eq!("x/100".parse::<MPolicy>().unwrap().policy().truncation(1000.5), 10);
        assert_eq!("x^0.5".parse::<MPolicy>().unwrap().policy().truncation(10000.0), 100);
        assert_eq!("250".parse::<MPolicy>().unwrap().policy().truncation(1e6), 250);
        for bad in ["y", "x/0", "x^3", "x/", "-4"] {
            assert!(bad.parse::<MPolicy>().is_err(), "{bad}");
        }
    }

    #[test]
    fn ranges() {
        let r: XRange = "1e3:1e5:3".parse().unwrap();
        assert_eq!(r.0.len(), 3);
        assert!((r.0[1] - 1e4).abs() < 1e-6);
        assert_eq!("1e5".parse::<XRange>().unwrap().0, vec![1e5]);
        for bad in ["1e3:1e5", "1e5:1e3:4", "a:b:c", "1e3:1e5:0", "0.5", "1:2:3:4"] {
            assert!(bad.parse::<XRange>().is_err(), "{bad}");
        }
    }

    #[test]
    fn config_files() {
        let m = parse_config("# comment\nform = level1:12\n--bound=100 # trailing\n\nM = x/10\n").unwrap();
        assert_eq!(m["form"], "level1:12");
        assert_eq!(m["bound"], "100");
        assert_eq!(m["M"], "x/10");
        assert!(parse_config("colour = red").is_err());
        assert!(parse_config("just words").is_err());
    }

    #[test]
    fn resolution_and_bounds() {
        let raw = RawConfig {
            form: Some("level1:12".into()),
            bound: Some("1000".into()),
            ..Default::default()
        };
        let cfg = RunConfig::resolve(&raw).unwrap();
        assert_eq!(cfg.bound_for(500).unwrap(), 1000);
        assert!(cfg.bound_for(5000).is_err());
        let raw = RawConfig {
            form: Some("level1:12".into()),
            ..Default::default()
        };
        assert_eq!(RunConfig::resolve(&raw).unwrap().bound_for(3).unwrap(), 10);
        for (field, value) in [("bound", "5"), ("eps", "0.3"), ("C", "-1"), ("format", "xml"), ("P", "0")] {
            let mut raw = RawConfig {
                form: Some("level1:12".into()),
                ..Default::default()
            };
            *raw.slot(if field == "C" { "C" } else if field == "P" { "P" } else { field }).unwrap() = Some(value.into());
            assert!(RunConfig::resolve(&raw).is_err(), "{field} = {value}");
        }
        assert!(RunConfig::resolve(&RawConfig::default()).is_err());
    }
}
