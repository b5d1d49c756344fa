//! Command-line front end: `length`, `reparam`, `continue`, `classify`.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 domain
//! violation, 3 divergent length, 4 not analytic at ∞.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::curve::{AnalyticCurve, Catalog, ClosedForm, Interval};
use crate::error::{Error, Result};
use crate::functionals::{builtin, JetFunctional};
use crate::quad::QuadOptions;
use crate::reparam::{
    default_anchor, reparametrize_improper, total_length_profile, unit_speed_residual, CurveSpeed,
    LengthMap, LengthOptions,
};
use crate::series::TruncatedSeries;
use crate::sphere::{classify_endpoint, continue_curve, End, EndpointClass, TailStats};

/// Remaining length allowed outside the truncated interval when
/// reparametrizing over an infinite domain.
pub const IMPROPER_TAIL_TOL: f64 = 1e-6;

#[derive(Debug, Parser)]
#[command(name = "arcparam", version, about = "Arc-length reparametrization of analytic curves")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verb {
    Length,
    Reparam,
    Continue,
    Classify,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Total length of a curve under a functional.
    Length(RunArgs),
    /// Reparametrize by length and sample the result.
    Reparam(RunArgs),
    /// Continue a curve through ∞ in its spherical parameter.
    Continue(RunArgs),
    /// Classify the limit sets at both ends.
    Classify(RunArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EndArg {
    Left,
    Right,
    Both,
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    /// Catalog id, or path to a curve spec JSON file.
    #[arg(long)]
    pub curve: Option<String>,
    /// Chart file: a curve spec JSON or a bare array of series.
    #[arg(long)]
    pub charts: Option<PathBuf>,
    /// euclidean, spherical or hyperbolic.
    #[arg(long)]
    pub metric: Option<String>,
    /// `lo,hi`; `inf` and `-inf` are accepted.
    #[arg(long, allow_hyphen_values = true)]
    pub domain: Option<String>,
    #[arg(long, default_value_t = 101)]
    pub samples: usize,
    /// CSV output for `reparam`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// JSON report path; stdout when absent.
    #[arg(long)]
    pub report: Option<PathBuf>,
    #[arg(long, default_value_t = 1e-10)]
    pub tol_quad: f64,
    #[arg(long, default_value_t = 1e-13)]
    pub tol_inv: f64,
    #[arg(long, default_value_t = 1e-8)]
    pub tol_residual: f64,
    #[arg(long, default_value_t = 1)]
    pub max_steps: usize,
    /// Parameter where the length is zero.
    #[arg(long, allow_hyphen_values = true)]
    pub anchor: Option<f64>,
    #[arg(long, value_enum, default_value_t = EndArg::Right)]
    pub end: EndArg,
}

/// Curve spec JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveSpec {
    pub kind: String,
    #[serde(default)]
    pub name: Option<String>,
    /// Catalog parameters: `scale` and `offset`, each `[re, im]`.
    #[serde(default)]
    pub params: Option<CurveParams>,
    #[serde(default)]
    pub domain: Option<[Option<f64>; 2]>,
    #[serde(default)]
    pub charts: Option<Vec<TruncatedSeries>>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurveParams {
    #[serde(default)]
    pub scale: Option<Complex64>,
    #[serde(default)]
    pub offset: Option<Complex64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum CurveSource {
    Catalog {
        kind: Catalog,
        params: CurveParams,
        domain: Option<Interval>,
    },
    Charts {
        charts: Vec<TruncatedSeries>,
        domain: Option<Interval>,
    },
}

/// A validated command configuration.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub verb: Verb,
    pub source: CurveSource,
    pub metric: Option<String>,
    pub domain: Option<Interval>,
    pub samples: usize,
    pub out: Option<PathBuf>,
    pub report: Option<PathBuf>,
    pub tol_quad: f64,
    pub tol_inv: f64,
    pub tol_residual: f64,
    pub max_steps: usize,
    pub anchor: Option<f64>,
    pub end: EndArg,
}

fn parse_bound(s: &str) -> Result<f64> {
    match s.trim().to_ascii_lowercase().as_str() {
        "inf" | "+inf" | "infinity" => Ok(f64::INFINITY),
        "-inf" | "-infinity" => Ok(f64::NEG_INFINITY),
        t => t
            .parse::<f64>()
            .map_err(|_| Error::InvalidConfig(format!("bad domain bound {s:?}"))),
    }
}

/// Finite ends are closed, infinite ends open.
pub fn interval_from_bounds(lo: f64, hi: f64) -> Result<Interval> {
    Interval::new(lo, hi, lo.is_finite(), hi.is_finite())
}

pub fn parse_domain(s: &str) -> Result<Interval> {
    let parts: Vec<&str> = s.split(',').collect();
    let [lo, hi] = parts.as_slice() else {
        return Err(Error::InvalidConfig(format!("domain must be lo,hi, got {s:?}")));
    };
    interval_from_bounds(parse_bound(lo)?, parse_bound(hi)?)
}

fn spec_domain(d: Option<[Option<f64>; 2]>) -> Result<Option<Interval>> {
    d.map(|[lo, hi]| interval_from_bounds(lo.unwrap_or(f64::NEG_INFINITY), hi.unwrap_or(f64::INFINITY)))
        .transpose()
}

fn source_from_spec(spec: CurveSpec) -> Result<CurveSource> {
    let domain = spec_domain(spec.domain)?;
    match spec.kind.as_str() {
        "catalog" => {
            let name = spec
                .name
                .ok_or_else(|| Error::InvalidConfig("catalog spec needs a name".into()))?;
            let kind = Catalog::from_id(&name)
                .ok_or_else(|| Error::InvalidConfig(format!("unknown catalog curve {name:?}")))?;
            Ok(CurveSource::Catalog {
                kind,
                params: spec.params.unwrap_or_default(),
                domain,
            })
        }
        "charts" => Ok(CurveSource::Charts {
            charts: spec
                .charts
                .ok_or_else(|| Error::InvalidConfig("charts spec needs charts".into()))?,
            domain,
        }),
        k => Err(Error::InvalidConfig(format!("unknown curve spec kind {k:?}"))),
    }
}

fn read_spec(path: &Path) -> Result<CurveSource> {
    let text = fs::read_to_string(path)?;
    if let Ok(spec) = serde_json::from_str::<CurveSpec>(&text) {
        return source_from_spec(spec);
    }
    let charts: Vec<TruncatedSeries> = serde_json::from_str(&text)?;
    Ok(CurveSource::Charts { charts, domain: None })
}

impl RunConfig {
    pub fn from_args(verb: Verb, a: RunArgs) -> Result<Self> {
        let source = match (&a.curve, &a.charts) {
            (Some(_), Some(_)) => {
                return Err(Error::InvalidConfig("give either --curve or --charts, not both".into()))
            }
            (None, None) => return Err(Error::InvalidConfig("one of --curve or --charts is required".into())),
            (Some(c), None) => match Catalog::from_id(c) {
                Some(kind) => CurveSource::Catalog {
                    kind,
                    params: CurveParams::default(),
                    domain: None,
                },
                None if Path::new(c).is_file() => read_spec(Path::new(c))?,
                None => return Err(Error::InvalidConfig(format!("unknown curve {c:?}"))),
            },
            (None, Some(p)) => read_spec(p)?,
        };
        for (name, v) in [
            ("--tol-quad", a.tol_quad),
            ("--tol-inv", a.tol_inv),
            ("--tol-residual", a.tol_residual),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidConfig(format!("{name} must be positive, got {v}")));
            }
        }
        if a.samples < 2 {
            return Err(Error::InvalidConfig("--samples must be at least 2".into()));
        }
        if let Some(m) = &a.metric {
            if builtin(m).is_none() {
                return Err(Error::InvalidConfig(format!("unknown metric {m:?}")));
            }
            if verb == Verb::Continue && m != "spherical" {
                return Err(Error::InvalidConfig("continue uses the spherical metric".into()));
            }
        }
        let domain = a.domain.as_deref().map(parse_domain).transpose()?;
        Ok(Self {
            verb,
            source,
            metric: a.metric,
            domain,
            samples: a.samples,
            out: a.out,
            report: a.report,
            tol_quad: a.tol_quad,
            tol_inv: a.tol_inv,
            tol_residual: a.tol_residual,
            max_steps: a.max_steps,
            anchor: a.anchor,
            end: a.end,
        })
    }

    pub fn functional(&self) -> JetFunctional {
        let name = match self.verb {
            Verb::Continue => "spherical",
            _ => self.metric.as_deref().unwrap_or("euclidean"),
        };
        builtin(name).expect("metric validated")
    }

    pub fn metric_name(&self) -> String {
        self.functional().kind().to_string()
    }

    pub fn quad(&self) -> QuadOptions {
        QuadOptions {
            abs_tol: 1e-2 * self.tol_quad,
            rel_tol: self.tol_quad,
            ..QuadOptions::default()
        }
    }

    pub fn length_options(&self) -> LengthOptions {
        LengthOptions {
            quad: self.quad(),
            inv_tol: self.tol_inv,
            ..LengthOptions::default()
        }
    }

    /// The curve on the effective domain.
    pub fn curve(&self) -> Result<AnalyticCurve> {
        match &self.source {
            CurveSource::Catalog { kind, params, domain } => {
                let mut form = kind.closed_form();
                if let Some(s) = params.scale {
                    form = ClosedForm::Scaled(s, Box::new(form));
                }
                if let Some(o) = params.offset {
                    form = ClosedForm::Sum(vec![form, ClosedForm::Polynomial(vec![o])]);
                }
                let d = self.domain.or(*domain).unwrap_or_else(|| kind.default_domain());
                Ok(AnalyticCurve::from_closed_form(form, d))
            }
            CurveSource::Charts { charts, domain } => {
                let d = self
                    .domain
                    .or(*domain)
                    .ok_or_else(|| Error::InvalidConfig("chart curves need a domain".into()))?;
                AnalyticCurve::from_charts(charts.clone(), d)
            }
        }
    }

    pub fn curve_name(&self) -> String {
        match &self.source {
            CurveSource::Catalog { kind, .. } => kind.id().to_string(),
            CurveSource::Charts { .. } => "charts".to_string(),
        }
    }
}

/// `[lo, hi]` with `null` for infinite bounds.
mod bounds {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(d: &[f64; 2], s: S) -> Result<S::Ok, S::Error> {
        [d[0].is_finite().then_some(d[0]), d[1].is_finite().then_some(d[1])].serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<[f64; 2], D::Error> {
        let [lo, hi] = <[Option<f64>; 2]>::deserialize(d)?;
        Ok([lo.unwrap_or(f64::NEG_INFINITY), hi.unwrap_or(f64::INFINITY)])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChartSummary {
    pub center: f64,
    pub radius: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LengthReport {
    pub curve: String,
    pub metric: String,
    #[serde(with = "bounds")]
    pub domain: [f64; 2],
    pub total_length: f64,
    /// Chart seam disagreement, or the last tail piece for improper lengths.
    pub residual: f64,
    pub charts: Vec<ChartSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReparamReport {
    pub curve: String,
    pub metric: String,
    /// Parameter interval that was reparametrized.
    #[serde(with = "bounds")]
    pub source: [f64; 2],
    /// `[A, B]` in the length parameter.
    pub domain: [f64; 2],
    pub total_length: f64,
    pub anchor: f64,
    /// `max |F(jet of δ) − 1|` over the samples.
    pub residual: f64,
    pub residual_ok: bool,
    pub samples: usize,
    pub chart_radii: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EndClassification {
    pub classification: EndpointClass,
    pub tail: TailStats,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifyReport {
    pub curve: String,
    #[serde(with = "bounds")]
    pub domain: [f64; 2],
    pub left: EndClassification,
    pub right: EndClassification,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    pub error: String,
    pub exit_code: i32,
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::DivergentLength(_) => 3,
        Error::NotAnalyticAtInfinity(_) => 4,
        Error::InvalidConfig(_) | Error::InvalidInterval(_) | Error::InvalidSeries(_) | Error::InvalidCharts(_) | Error::Io(_) => 1,
        _ => 2,
    }
}

fn anchor_for(cfg: &RunConfig, d: &Interval) -> f64 {
    cfg.anchor.unwrap_or_else(|| default_anchor(d))
}

pub fn cmd_length(cfg: &RunConfig) -> Result<LengthReport> {
    let curve = cfg.curve()?;
    let d = curve.domain();
    let f = cfg.functional();
    let (total, residual, charts) = if d.is_finite() {
        let map = LengthMap::build(
            Arc::new(CurveSpeed::new(curve.clone(), f)),
            Interval::closed(d.lo, d.hi)?,
            anchor_for(cfg, &Interval::closed(d.lo, d.hi)?),
            cfg.length_options(),
        )?;
        let charts = map
            .charts()
            .iter()
            .map(|c| ChartSummary {
                center: c.center,
                radius: c.radius,
            })
            .collect();
        (map.total(), map.seam_residual(), charts)
    } else {
        let profile = CurveSpeed::new(curve.clone(), f);
        let t = total_length_profile(&profile, d.lo, d.hi, &cfg.quad())?;
        (t.value, t.tail, Vec::new())
    };
    Ok(LengthReport {
        curve: cfg.curve_name(),
        metric: cfg.metric_name(),
        domain: [d.lo, d.hi],
        total_length: total,
        residual,
        charts,
    })
}

/// One CSV row per sample: `s,t,re,im`.
pub type Samples = Vec<[f64; 4]>;

pub fn cmd_reparam(cfg: &RunConfig) -> Result<(ReparamReport, Samples)> {
    let curve = cfg.curve()?;
    let d = curve.domain();
    let f = cfg.functional();
    let anchor = anchor_for(cfg, &d);
    let rc = reparametrize_improper(&curve, &f, d, anchor, IMPROPER_TAIL_TOL, cfg.length_options())?;
    let (a, b) = rc.domain();
    let n = cfg.samples;
    let mut samples = Vec::with_capacity(n);
    let mut residual: f64 = 0.0;
    for i in 0..n {
        let s = if i == n - 1 { b } else { a + (b - a) * i as f64 / (n - 1) as f64 };
        let t = rc.t_of_s(s)?;
        let jet = rc.jet(s, f.order())?;
        residual = residual.max((f.eval(&jet)? - 1.0).norm());
        let z = jet.derivative(0);
        samples.push([s, t, z.re, z.im]);
    }
    residual = residual.max(unit_speed_residual(&rc, 2)?);
    Ok((
        ReparamReport {
            curve: cfg.curve_name(),
            metric: cfg.metric_name(),
            source: [d.lo, d.hi],
            domain: [a, b],
            total_length: b - a,
            anchor,
            residual,
            residual_ok: residual <= cfg.tol_residual,
            samples: n,
            chart_radii: rc.chart_radii(),
        },
        samples,
    ))
}

pub fn write_csv(path: &Path, samples: &Samples) -> Result<()> {
    let mut out = String::from("s,t,re,im\n");
    for r in samples {
        out.push_str(&format!("{:.16e},{:.16e},{:.16e},{:.16e}\n", r[0], r[1], r[2], r[3]));
    }
    fs::write(path, out)?;
    Ok(())
}

/// An [`ExtensionReport`](crate::sphere::ExtensionReport) for one end, or a
/// [`DomainReport`](crate::sphere::DomainReport) for both.
pub fn cmd_continue(cfg: &RunConfig) -> Result<serde_json::Value> {
    let curve = cfg.curve()?;
    let ends: Vec<End> = match cfg.end {
        EndArg::Left => vec![End::Left],
        EndArg::Right => vec![End::Right],
        EndArg::Both => vec![End::Left, End::Right],
    };
    let (report, _) = continue_curve(&curve, &ends, cfg.max_steps)?;
    Ok(match cfg.end {
        EndArg::Left => serde_json::to_value(report.left)?,
        EndArg::Right => serde_json::to_value(report.right)?,
        EndArg::Both => serde_json::to_value(report)?,
    })
}

pub fn cmd_classify(cfg: &RunConfig) -> Result<ClassifyReport> {
    let curve = cfg.curve()?;
    let d = curve.domain();
    let entry = |end| {
        let (classification, tail) = classify_endpoint(&curve, end);
        EndClassification { classification, tail }
    };
    Ok(ClassifyReport {
        curve: cfg.curve_name(),
        domain: [d.lo, d.hi],
        left: entry(End::Left),
        right: entry(End::Right),
    })
}

fn emit(cfg: &RunConfig, value: &impl Serialize, stdout: &mut dyn Write) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    match &cfg.report {
        Some(p) => fs::write(p, text + "\n")?,
        None => writeln!(stdout, "{text}")?,
    }
    Ok(())
}

pub fn execute(cfg: &RunConfig, stdout: &mut dyn Write) -> Result<()> {
    match cfg.verb {
        Verb::Length => emit(cfg, &cmd_length(cfg)?, stdout),
        Verb::Reparam => {
            let (report, samples) = cmd_reparam(cfg)?;
            if let Some(p) = &cfg.out {
                write_csv(p, &samples)?;
            }
            emit(cfg, &report, stdout)
        }
        Verb::Continue => emit(cfg, &cmd_continue(cfg)?, stdout),
        Verb::Classify => emit(cfg, &cmd_classify(cfg)?, stdout),
    }
}

/// Parses `args` (program name first), runs the command, and returns the
/// process exit code. Failures after parsing also produce an error report.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 {
                write!(stdout, "{text}")
            } else {
                write!(stderr, "{text}")
            };
            return code;
        }
    };
    let (verb, args) = match cli.command {
        Command::Length(a) => (Verb::Length, a),
        Command::Reparam(a) => (Verb::Reparam, a),
        Command::Continue(a) => (Verb::Continue, a),
        Command::Classify(a) => (Verb::Classify, a),
    };
    let cfg = match RunConfig::from_args(verb, args) {
        Ok(c) => c,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            return exit_code(&e);
        }
    };
    match execute(&cfg, stdout) {
        Ok(()) => 0,
        Err(e) => {
            let code = exit_code(&e);
            let _ = writeln!(stderr, "error: {e}");
            if code > 1 {
                let report = ErrorReport {
                    error: e.to_string(),
                    exit_code: code,
                };
                let _ = emit(&cfg, &report, stdout);
            }
            code
        }
    }
}
