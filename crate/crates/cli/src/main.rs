//! `berkline`: command-line front end for series arithmetic, Berkovich
//! dynamics of bicritical maps and the numeric cross-checks.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use berkline_core::algebra::{poly_roots, Ext, Scalar, ToleranceConfig, ONE, ZERO};
use berkline_core::berkovich::{
    hyp_distance, image_type_ii, on_ramification, on_segment, point_on_segment, spanning_tree, TypeIIPoint,
};
use berkline_core::dynamics::{
    classify_type_ii_cycle, find_cycle_type_ii, holes_of_iterate, is_conjugate_to_power_map, rescaling_limit,
    rivera_count_check, Classification, CycleRecord, RiveraInstance, MAX_PERIOD,
};
use berkline_core::families::{
    degeneracy_check, example_map, milnor_map, milnor_map_series, published_cubic_pair, solve_example_coefficients,
    verify_example, ExampleParams,
};
use berkline_core::numeric::{
    circle, cross_validate_rescaling, moduli_coordinates, nonrepelling_census, strictly_decreasing, ConjugacyCurve,
};
use berkline_core::puiseux::{ExpQ, Series, DEFAULT_PRECISION, RAMIFICATION_BOUND};
use berkline_core::ratmap::{ComplexRatMap, ProjPointL, RationalMapL, DEFAULT_DEGREE_CAP};
use berkline_core::text::{fmt_complex, round12};
use berkline_core::Error;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;
use serde_json::{json, Value};

const SCHEMA: u32 = 1;

#[derive(Parser, Debug)]
#[command(name = "berkline", version, about = "Non-Archimedean dynamics of bicritical rational maps")]
struct Cli {
    /// Working precision `p` (series known to O(t^p)), e.g. `6` or `13/2`.
    #[arg(long, global = true, env = "BERKLINE_PRECISION")]
    precision: Option<String>,
    /// `abs` or `abs,rel,match` zero and root-matching tolerances.
    #[arg(long, global = true)]
    tolerance: Option<String>,
    /// TOML file with `family`, `d`, `u`, `v`, `g` and run settings.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Largest degree allowed for iterates.
    #[arg(long, global = true)]
    degree_cap: Option<usize>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
enum Format {
    Json,
    Csv,
    Dot,
    Text,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Series utilities.
    Series {
        #[command(subcommand)]
        cmd: SeriesCmd,
    },
    /// Reductions of maps over the series field.
    Map {
        #[command(subcommand)]
        cmd: MapCmd,
    },
    /// Type II points: images, cycles and skeleta.
    Berk {
        #[command(subcommand)]
        cmd: BerkCmd,
    },
    /// The worked example family.
    Example {
        #[command(subcommand)]
        cmd: ExampleCmd,
    },
    /// The Milnor family along a parameter curve.
    Family {
        #[command(subcommand)]
        cmd: FamilyCmd,
    },
    /// Nonrepelling cycle census of a complex map.
    Census(CensusArgs),
    /// Numeric convergence of rescalings.
    Rescale {
        #[command(subcommand)]
        cmd: RescaleCmd,
    },
}

#[derive(Subcommand, Debug)]
enum SeriesCmd {
    /// Parses a series and reports its normal form, valuation and value.
    Eval {
        expr: String,
        /// Evaluate numerically at this real t > 0.
        #[arg(long)]
        t: Option<f64>,
    },
}

#[derive(Subcommand, Debug)]
enum MapCmd {
    /// Reduction modulo t of the map or an iterate, with holes.
    Reduce {
        #[command(flatten)]
        map: MapArgs,
        #[arg(long, default_value_t = 1)]
        iterate: usize,
    },
}

#[derive(Subcommand, Debug)]
enum BerkCmd {
    /// Image of a type II point and the tangent map.
    Image {
        #[command(flatten)]
        map: MapArgs,
        #[arg(long)]
        point: String,
    },
    /// Cycle through the orbit of a type II point.
    Cycle {
        #[command(flatten)]
        map: MapArgs,
        /// `gauss` or `xi("<series>"; p/q)`.
        #[arg(long, default_value = "gauss")]
        seed: String,
        #[arg(long, default_value_t = MAX_PERIOD)]
        max_period: usize,
    },
    /// DOT skeleton of the joins of the listed points.
    Tree {
        #[command(flatten)]
        map: MapArgs,
        /// Type II points; repeat the flag for each.
        #[arg(long = "point", required = true)]
        points: Vec<String>,
    },
}

#[derive(Subcommand, Debug)]
enum ExampleCmd {
    /// Runs the full pipeline for the example family of degree d.
    Verify {
        #[arg(long)]
        d: Option<usize>,
        /// Coefficients a_1, a_2, ... of g(t) for the Gauss-cycle checks.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        g: Vec<String>,
    },
}

#[derive(Subcommand, Debug)]
enum FamilyCmd {
    /// Degeneracy class and moduli coordinates along `(u(t), v(t))`.
    Track {
        #[arg(long, allow_hyphen_values = true)]
        u: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        v: Option<String>,
        #[arg(long)]
        d: Option<usize>,
        #[arg(long, value_delimiter = ',', default_value = "1e-1,1e-2,1e-3,1e-4")]
        ts: Vec<f64>,
    },
}

#[derive(Args, Debug)]
struct CensusArgs {
    /// Complex rational map in z, e.g. `z^2-1` or `(z^2+1)/(2*z)`; or a
    /// Milnor map given by `--u`, `--v`, `--d`.
    #[arg(long, allow_hyphen_values = true)]
    map: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    u: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    v: Option<String>,
    #[arg(long)]
    d: Option<usize>,
    #[arg(long, default_value_t = 4)]
    max_period: usize,
}

#[derive(Subcommand, Debug)]
enum RescaleCmd {
    /// Compares `M_t^-1 f_t^q M_t` with the rescaling limit at a cycle point.
    Check {
        #[command(flatten)]
        map: MapArgs,
        /// Type II point on the cycle; its center and radius define `M_t`.
        #[arg(long, default_value = "gauss")]
        point: String,
        #[arg(long)]
        q: Option<usize>,
        #[arg(long, default_value_t = 1.0)]
        radius: f64,
        #[arg(long, default_value_t = 20)]
        count: usize,
        #[arg(long, value_delimiter = ',', default_value = "1e-2,1e-3,1e-4,1e-5")]
        ts: Vec<f64>,
        /// Largest acceptable final error.
        #[arg(long, default_value_t = 1e-3)]
        bound: f64,
        /// Use the verified coefficients of the 3-cycle for the example.
        #[arg(long)]
        solved: bool,
    },
}

/// Which map a command acts on.
#[derive(Args, Debug, Clone, Default)]
struct MapArgs {
    /// `example`, `milnor`, or a literal `ratmap { num = [...], den = [...] }`.
    #[arg(long, allow_hyphen_values = true)]
    map: Option<String>,
    #[arg(long)]
    d: Option<usize>,
    /// Example coefficients a_1, a_2, ... (complex literals).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    g: Vec<String>,
    #[arg(long, allow_hyphen_values = true)]
    u: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    v: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    family: Option<String>,
    d: Option<usize>,
    u: Option<String>,
    v: Option<String>,
    g: Option<Vec<String>>,
    precision: Option<String>,
    tolerance: Option<ToleranceConfig>,
    degree_cap: Option<usize>,
    ramification_bound: Option<i64>,
    format: Option<Format>,
}

/// Resolved run settings.
#[derive(Debug, Clone)]
struct RunConfig {
    precision: ExpQ,
    tol: ToleranceConfig,
    degree_cap: usize,
    format: Format,
    family: MapArgs,
}

/// Failure of a command: bad input (exit 2) or a failed computation or
/// verification (exit 1).
#[derive(Debug)]
enum Failure {
    Input(String, String),
    Verification(String, String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Failure {
        let kind = format!("{e:?}").split(['(', ' ', '{']).next().unwrap_or("Error").to_string();
        match e {
            Error::SyntaxError { .. }
            | Error::InvalidArgument(_)
            | Error::RamificationBound(..)
            | Error::Degenerate
            | Error::HoleProximity(_)
            | Error::PrecisionIncrease { .. } => Failure::Input(kind, e.to_string()),
            _ => Failure::Verification(kind, e.to_string()),
        }
    }
}

fn input(msg: impl Into<String>) -> Failure {
    Failure::Input("InvalidArgument".into(), msg.into())
}

/// A report plus whether every check in it passed.
struct Report {
    value: Value,
    ok: bool,
    table: Option<Table>,
    dot: Option<String>,
}

struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Report {
    fn new(value: Value, ok: bool) -> Report {
        Report {
            value,
            ok,
            table: None,
            dot: None,
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                e.exit();
            }
            emit_error("UsageError", &e.to_string());
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok((text, ok)) => {
            print!("{text}");
            if ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(Failure::Input(kind, msg)) => {
            emit_error(&kind, &msg);
            ExitCode::from(2)
        }
        Err(Failure::Verification(kind, msg)) => {
            emit_error(&kind, &msg);
            ExitCode::from(1)
        }
    }
}

fn emit_error(kind: &str, msg: &str) {
    let v = json!({"schema": SCHEMA, "error": {"kind": kind, "message": msg.trim()}});
    eprintln!("{v}");
}

fn run(cli: Cli) -> Result<(String, bool), Failure> {
    let cfg = resolve(&cli)?;
    let report = match &cli.cmd {
        Cmd::Series { cmd: SeriesCmd::Eval { expr, t } } => series_eval(&cfg, expr, *t)?,
        Cmd::Map { cmd: MapCmd::Reduce { map, iterate } } => map_reduce(&cfg, map, *iterate)?,
        Cmd::Berk { cmd } => match cmd {
            BerkCmd::Image { map, point } => berk_image(&cfg, map, point)?,
            BerkCmd::Cycle { map, seed, max_period } => berk_cycle(&cfg, map, seed, *max_period)?,
            BerkCmd::Tree { map, points } => berk_tree(&cfg, map, points)?,
        },
        Cmd::Example { cmd: ExampleCmd::Verify { d, g } } => example_verify(&cfg, *d, g)?,
        Cmd::Family { cmd: FamilyCmd::Track { u, v, d, ts } } => family_track(&cfg, u, v, *d, ts)?,
        Cmd::Census(a) => census(&cfg, a)?,
        Cmd::Rescale {
            cmd:
                RescaleCmd::Check {
                    map,
                    point,
                    q,
                    radius,
                    count,
                    ts,
                    bound,
                    solved,
                },
        } => rescale_check(&cfg, map, point, *q, *radius, *count, ts, *bound, *solved)?,
    };
    render(&cfg, report)
}

fn resolve(cli: &Cli) -> Result<RunConfig, Failure> {
    let file: ConfigFile = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| input(format!("cannot read {}: {e}", path.display())))?;
            toml::from_str(&text).map_err(|e| Failure::Input("ConfigError".into(), e.to_string()))?
        }
        None => ConfigFile::default(),
    };
    if let Some(b) = file.ramification_bound {
        if b != RAMIFICATION_BOUND {
            return Err(input(format!("ramification bound is fixed at {RAMIFICATION_BOUND}")));
        }
    }
    let prec_text = cli.precision.clone().or(file.precision.clone());
    let precision = match prec_text {
        Some(p) => p
            .trim()
            .parse::<ExpQ>()
            .map_err(|_| input(format!("bad precision '{p}'")))?,
        None => ExpQ::from_int(DEFAULT_PRECISION),
    };
    if !precision.is_positive() {
        return Err(input("precision must be positive"));
    }
    let mut tol = file.tolerance.unwrap_or_default();
    if let Some(t) = &cli.tolerance {
        let parts: Vec<f64> = t
            .split(',')
            .map(|x| x.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|_| input(format!("bad tolerance '{t}'")))?;
        match parts.as_slice() {
            [a] => tol.zero_abs = *a,
            [a, r] => {
                tol.zero_abs = *a;
                tol.zero_rel = *r;
            }
            [a, r, m] => {
                tol = ToleranceConfig::new(*a, *r, *m)?;
            }
            _ => return Err(input("tolerance takes one to three values")),
        }
    }
    tol.validate()?;
    let degree_cap = cli.degree_cap.or(file.degree_cap).unwrap_or(DEFAULT_DEGREE_CAP);
    if degree_cap == 0 {
        return Err(input("degree cap must be positive"));
    }
    let family = MapArgs {
        map: file.family.clone(),
        d: file.d,
        g: file.g.clone().unwrap_or_default(),
        u: file.u.clone(),
        v: file.v.clone(),
    };
    Ok(RunConfig {
        precision,
        tol,
        degree_cap,
        format: cli.format.or(file.format).unwrap_or(Format::Json),
        family,
    })
}

// ---------------------------------------------------------------------------
// Inputs

fn parse_scalar(s: &str) -> Result<Scalar, Failure> {
    let series = Series::parse(s.trim())?;
    if series.terms().iter().any(|(e, _)| !e.is_zero()) {
        return Err(input(format!("'{s}' is not a complex constant")));
    }
    Ok(series.coeff_at(ExpQ::zero()))
}

fn parse_series(cfg: &RunConfig, s: &str) -> Result<Series, Failure> {
    let x = Series::parse(s)?;
    Ok(match x.prec() {
        Some(p) if p > cfg.precision => x.truncate(cfg.precision),
        _ => x,
    })
}

/// Merges command-line map flags over the config file.
fn merged(cfg: &RunConfig, a: &MapArgs) -> MapArgs {
    MapArgs {
        map: a.map.clone().or(cfg.family.map.clone()),
        d: a.d.or(cfg.family.d),
        g: if a.g.is_empty() { cfg.family.g.clone() } else { a.g.clone() },
        u: a.u.clone().or(cfg.family.u.clone()),
        v: a.v.clone().or(cfg.family.v.clone()),
    }
}

fn example_params(d: usize, g: &[String]) -> Result<ExampleParams, Failure> {
    let g = g.iter().map(|x| parse_scalar(x)).collect::<Result<Vec<_>, _>>()?;
    Ok(ExampleParams::new(d, g)?)
}

fn build_map(cfg: &RunConfig, a: &MapArgs) -> Result<RationalMapL, Failure> {
    let a = merged(cfg, a);
    let kind = a.map.as_deref().unwrap_or("example");
    match kind {
        "example" => {
            let p = example_params(a.d.unwrap_or(2), &a.g)?;
            Ok(example_map(&p, cfg.precision))
        }
        "milnor" => {
            let u = parse_series(cfg, a.u.as_deref().ok_or_else(|| input("milnor needs --u"))?)?;
            let v = parse_series(cfg, a.v.as_deref().ok_or_else(|| input("milnor needs --v"))?)?;
            Ok(milnor_map_series(&u, &v, a.d.unwrap_or(2), &cfg.tol)?)
        }
        lit if lit.trim_start().starts_with("ratmap") => {
            let m = RationalMapL::parse(lit)?;
            let trunc = |v: &[Series]| -> Vec<Series> {
                v.iter()
                    .map(|c| match c.prec() {
                        Some(p) if p > cfg.precision => c.truncate(cfg.precision),
                        _ => c.clone(),
                    })
                    .collect()
            };
            Ok(RationalMapL::with_degree(trunc(m.num()), trunc(m.den()), m.degree())?)
        }
        other => Err(input(format!("unknown map '{other}'"))),
    }
}

fn parse_point(s: &str) -> Result<TypeIIPoint, Failure> {
    Ok(TypeIIPoint::parse(s)?)
}

// ---------------------------------------------------------------------------
// Output

/// Rounds every float to 12 significant digits.
fn round_floats(v: Value) -> Value {
    match v {
        Value::Number(n) if n.is_f64() => {
            let x = n.as_f64().unwrap_or(0.0);
            serde_json::Number::from_f64(round12(x)).map_or(Value::Null, Value::Number)
        }
        Value::Array(a) => Value::Array(a.into_iter().map(round_floats).collect()),
        Value::Object(m) => Value::Object(m.into_iter().map(|(k, v)| (k, round_floats(v))).collect()),
        v => v,
    }
}

fn num(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else {
        json!(x.to_string())
    }
}

fn cx(c: Scalar) -> Value {
    json!(fmt_complex(c))
}

fn ext(z: Ext) -> Value {
    json!(z.to_string())
}

fn to_value<T: serde::Serialize>(x: &T) -> Value {
    serde_json::to_value(x).unwrap_or(Value::Null)
}

fn scalar_text(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Null => String::new(),
        v => v.to_string(),
    }
}

fn render(cfg: &RunConfig, r: Report) -> Result<(String, bool), Failure> {
    let mut body = r.value;
    if let Value::Object(m) = &mut body {
        m.insert("schema".into(), json!(SCHEMA));
        m.insert("passed".into(), json!(r.ok));
    }
    let body = round_floats(body);
    let out = match cfg.format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(&body).map_err(|e| input(e.to_string()))?;
            s.push('\n');
            s
        }
        Format::Dot => r.dot.ok_or_else(|| input("dot output is only available for 'berk tree'"))?,
        Format::Csv => {
            let table = r.table.unwrap_or_else(|| flat_table(&body));
            let mut w = csv::Writer::from_writer(Vec::new());
            let err = |e: csv::Error| input(e.to_string());
            w.write_record(&table.header).map_err(err)?;
            for row in &table.rows {
                w.write_record(row).map_err(err)?;
            }
            String::from_utf8(w.into_inner().map_err(|e| input(e.to_string()))?).unwrap_or_default()
        }
        Format::Text => {
            let mut s = String::new();
            for row in flat_table(&body).rows {
                let _ = writeln!(s, "{}: {}", row[0], row[1]);
            }
            s
        }
    };
    Ok((out, r.ok))
}

/// `key,value` rows with dotted paths for nested values.
fn flat_table(v: &Value) -> Table {
    fn walk(prefix: &str, v: &Value, rows: &mut Vec<Vec<String>>) {
        match v {
            Value::Object(m) => {
                for (k, x) in m {
                    let p = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                    walk(&p, x, rows);
                }
            }
            Value::Array(a) => {
                for (i, x) in a.iter().enumerate() {
                    walk(&format!("{prefix}.{i}"), x, rows);
                }
            }
            x => rows.push(vec![prefix.to_string(), scalar_text(x)]),
        }
    }
    let mut rows = Vec::new();
    walk("", v, &mut rows);
    Table {
        header: vec!["key".into(), "value".into()],
        rows,
    }
}

// ---------------------------------------------------------------------------
// Commands

fn series_eval(cfg: &RunConfig, expr: &str, t: Option<f64>) -> Result<Report, Failure> {
    let s = parse_series(cfg, expr)?;
    let val = match s.valuation().finite() {
        Some(v) => json!(v.to_string()),
        None => match s.valuation().lower() {
            Some(p) => json!(format!(">= {p}")),
            None => json!("inf"),
        },
    };
    let mut out = json!({
        "series": s.to_string(),
        "valuation": val,
        "precision": s.prec().map_or("exact".to_string(), |p| p.to_string()),
        "ramification": s.ramification(),
    });
    if let Some(t) = t {
        if !(t > 0.0) {
            return Err(input("t must be positive"));
        }
        out["t"] = num(t);
        out["value"] = cx(s.eval_at(t));
    }
    Ok(Report::new(out, true))
}

fn holes_json(holes: &[(Ext, usize)]) -> Value {
    Value::Array(
        holes
            .iter()
            .map(|(z, m)| json!({"point": ext(*z), "multiplicity": m}))
            .collect(),
    )
}

fn map_reduce(cfg: &RunConfig, a: &MapArgs, q: usize) -> Result<Report, Failure> {
    if q == 0 {
        return Err(input("iterate must be at least 1"));
    }
    let phi = build_map(cfg, a)?;
    let red = holes_of_iterate(&phi, q, cfg.degree_cap, &cfg.tol)?;
    let out = json!({
        "map": phi.to_string(),
        "iterate": q,
        "reduction": red.map.to_string(),
        "reducedDegree": red.map.degree(),
        "holes": holes_json(&red.holes),
        "holeCount": red.hole_count(),
    });
    let mut r = Report::new(out, true);
    r.table = Some(Table {
        header: vec!["point".into(), "multiplicity".into()],
        rows: red
            .holes
            .iter()
            .map(|(z, m)| vec![z.to_string(), m.to_string()])
            .collect(),
    });
    Ok(r)
}

fn berk_image(cfg: &RunConfig, a: &MapArgs, point: &str) -> Result<Report, Failure> {
    let phi = build_map(cfg, a)?;
    let xi = parse_point(point)?;
    let td = image_type_ii(&phi, &xi, &cfg.tol)?;
    Ok(Report::new(
        json!({
            "source": td.source.to_string(),
            "image": td.image.to_string(),
            "localDegree": td.local_degree,
            "tangentMap": td.map.to_string_var('u'),
        }),
        true,
    ))
}

fn cycle_json(rec: &CycleRecord, tol: &ToleranceConfig) -> Result<Value, Failure> {
    let mut v = to_value(rec);
    v["rescalingLimit"] = match rescaling_limit(rec) {
        Ok(g) => json!(g.to_string()),
        Err(_) => Value::Null,
    };
    v["radii"] = json!(rec.points.iter().map(|p| p.rexp().to_string()).collect::<Vec<_>>());
    if rec.first_return.degree() >= 2 {
        let c = is_conjugate_to_power_map(&ComplexRatMap::from_ratfunc(&rec.first_return), tol)?;
        v["powerMapConjugate"] = json!(c.conjugate);
        v["powerMapResidual"] = num(c.residual);
    }
    Ok(v)
}

fn berk_cycle(cfg: &RunConfig, a: &MapArgs, seed: &str, max_period: usize) -> Result<Report, Failure> {
    let phi = build_map(cfg, a)?;
    let xi = parse_point(seed)?;
    match find_cycle_type_ii(&phi, &xi, max_period, &cfg.tol)? {
        Some(rec) => Ok(Report::new(cycle_json(&rec, &cfg.tol)?, true)),
        None => Ok(Report::new(
            json!({"seed": xi.to_string(), "cycle": Value::Null, "maxPeriod": max_period}),
            false,
        )),
    }
}

fn berk_tree(cfg: &RunConfig, a: &MapArgs, points: &[String]) -> Result<Report, Failure> {
    let pts = points.iter().map(|p| parse_point(p)).collect::<Result<Vec<_>, _>>()?;
    let crit = if a.map.is_some() || cfg.family.map.is_some() {
        Some(build_map(cfg, a)?.critical_points_bicritical(&cfg.tol)?)
    } else {
        None
    };
    let tol = &cfg.tol;
    let tree = spanning_tree(&pts, tol);
    let mut dot = String::from("graph skeleton {\n");
    let mut edges = Vec::new();
    for v in &tree.vertices {
        let listed = pts.iter().any(|p| p.same_point(v, tol));
        let _ = writeln!(
            dot,
            "  \"{}\" [shape={}];",
            v.to_string().replace('"', "\\\""),
            if listed { "box" } else { "point" }
        );
    }
    for &(c, p, len) in &tree.edges {
        let (child, parent) = (&tree.vertices[c], &tree.vertices[p]);
        let mid = point_on_segment(child, parent, len / ExpQ::from_int(2), tol)?;
        let hull = (0..pts.len()).any(|i| (i + 1..pts.len()).any(|j| on_segment(&mid, &pts[i], &pts[j], tol)));
        let ramified = match &crit {
            Some(c) => on_ramification(&mid, &c.c1, &c.c2, tol)?,
            None => false,
        };
        let _ = writeln!(
            dot,
            "  \"{}\" -- \"{}\" [label=\"{}\", hull={}, ramified={}];",
            child.to_string().replace('"', "\\\""),
            parent.to_string().replace('"', "\\\""),
            len,
            hull,
            ramified
        );
        edges.push(json!({
            "child": child.to_string(),
            "parent": parent.to_string(),
            "length": len.to_string(),
            "hull": hull,
            "ramified": ramified,
        }));
    }
    dot.push_str("}\n");
    let diameter = tree
        .vertices
        .iter()
        .flat_map(|a| tree.vertices.iter().map(move |b| (a, b)))
        .map(|(a, b)| hyp_distance(a, b, tol))
        .max()
        .unwrap_or(ExpQ::zero());
    let mut r = Report::new(
        json!({
            "vertices": tree.vertices.iter().map(|v| v.to_string()).collect::<Vec<_>>(),
            "edges": edges,
            "diameter": diameter.to_string(),
        }),
        true,
    );
    r.dot = Some(dot);
    Ok(r)
}

fn check(name: &str, ok: bool, detail: Value) -> Value {
    json!({"check": name, "passed": ok, "detail": detail})
}

/// `((a1+1) z^d + d - a1 - 1) / (a1 z^d + d - a1)` evaluated at `z`.
fn closed_form_g(d: usize, a1: Scalar, z: Scalar) -> Scalar {
    let dd = Scalar::new(d as f64, 0.0);
    let zd = z.powu(d as u32);
    ((a1 + 1.0) * zd + dd - a1 - 1.0) / (a1 * zd + dd - a1)
}

fn example_verify(cfg: &RunConfig, d: Option<usize>, g: &[String]) -> Result<Report, Failure> {
    let d = d.or(cfg.family.d).unwrap_or(2);
    let g = if g.is_empty() { cfg.family.g.clone() } else { g.to_vec() };
    let params = example_params(d, &g)?;
    let a1 = params.g.first().copied().unwrap_or(ZERO);
    let tol = &cfg.tol;
    let prec = cfg.precision;
    let phi = example_map(&params, prec);
    let mut checks = Vec::new();

    // the 2-cycle through the Gauss point
    let rec = find_cycle_type_ii(&phi, &TypeIIPoint::gauss(), 4, tol)?;
    let two = rec.as_ref().map_or(false, |r| {
        r.period == 2 && r.local_degrees == vec![d, 1] && classify_type_ii_cycle(r) == Classification::Repelling
    });
    checks.push(check(
        "gaussTwoCycle",
        two,
        rec.as_ref().map_or(Value::Null, |r| to_value(r)),
    ));

    // closed form of the return map
    let mut g_ok = false;
    let mut g_text = Value::Null;
    let mut gauss_g = None;
    if let Some(r) = rec.as_ref().filter(|_| two) {
        let rf = rescaling_limit(r)?.to_ratfunc()?;
        let samples = circle(Scalar::new(0.1, 0.05), 0.7, 12);
        let err = samples
            .iter()
            .map(|&z| (rf.eval_finite(z) - closed_form_g(d, a1, z)).norm())
            .fold(0.0f64, f64::max);
        let one = rf.eval_finite(ONE);
        let dg = rf.derivative().eval_finite(ONE);
        g_ok = err <= 1e-9 && (one - ONE).norm() <= 1e-9 && (dg - ONE).norm() <= 1e-9;
        g_text = json!({"map": rf.to_string_var('z'), "maxError": num(err), "valueAtOne": cx(one), "derivativeAtOne": cx(dg)});
        gauss_g = Some(rf);
    }
    checks.push(check("returnMapClosedForm", g_ok, g_text));

    // holes of phi^2: the solutions of G(z) = 1, each d - 1 times
    let red = holes_of_iterate(&phi, 2, cfg.degree_cap, tol)?;
    let card = red.hole_count();
    let holes_ok = match &gauss_g {
        Some(rf) => {
            let level = poly_roots(&rf.num().sub(rf.den()), tol)?;
            card == d * d - d
                && red.holes.len() == level.len()
                && level.iter().all(|(w, m)| {
                    red.holes
                        .iter()
                        .any(|(z, k)| z.finite().map_or(false, |z| (z - w).norm() <= 1e-7) && *k == m * (d - 1))
                })
        }
        None => false,
    };
    checks.push(check(
        "holesOfSecondIterate",
        holes_ok,
        json!({"holes": holes_json(&red.holes), "count": card, "expectedCount": d * d - d}),
    ));

    // coefficient solve and the 3-cycle
    let cands = solve_example_coefficients(d, prec, tol);
    let (solve_ok, cand_json, first) = match &cands {
        Ok(c) => {
            let list: Vec<Value> = c
                .iter()
                .map(|x| {
                    json!({
                        "h": cx(x.h),
                        "g": x.g.iter().map(|c| fmt_complex(*c)).collect::<Vec<_>>(),
                        "period": x.verification.period,
                        "conjugate": x.verification.conjugate,
                        "residual": num(x.verification.residual),
                        "passed": x.verification.passed(),
                    })
                })
                .collect();
            let ok = c.iter().any(|x| x.verification.passed() && x.verification.residual <= 1e-7);
            (ok, Value::Array(list), c.first().cloned())
        }
        Err(e) => (false, json!(e.to_string()), None),
    };
    checks.push(check("coefficientSolve", solve_ok, cand_json));
    if let Some(c) = &first {
        let p3 = ExampleParams::new(d, c.g.clone())?;
        let phi3 = example_map(&p3, prec);
        let xi = TypeIIPoint::new(&Series::zero(), ExpQ::new(1, d as i64 - 1))?;
        let rec3 = find_cycle_type_ii(&phi3, &xi, 6, tol)?;
        let ok3 = rec3.as_ref().map_or(false, |r| r.period == 3);
        let detail = match &rec3 {
            Some(r) => cycle_json(r, tol)?,
            None => Value::Null,
        };
        let pm = detail.get("powerMapConjugate").and_then(Value::as_bool).unwrap_or(false)
            && detail
                .get("powerMapResidual")
                .and_then(Value::as_f64)
                .map_or(false, |x| x <= 1e-7);
        checks.push(check(
            "threeCycle",
            ok3,
            json!({"r": format!("{}", ExpQ::new(1, d as i64 - 1)), "cycle": detail}),
        ));
        checks.push(check("powerMapConjugacy", pm, Value::Null));
    }
    if d == 3 {
        let (pa1, pa2) = published_cubic_pair();
        let v = verify_example(&ExampleParams::new(3, vec![pa1, pa2])?, prec, tol)?;
        // informative: the outcome is recorded without affecting the verdict
        let mut rec = json!({
            "a1": cx(pa1),
            "a2": cx(pa2),
            "verification": to_value(&v),
            "verifies": v.passed(),
        });
        rec["informative"] = json!(true);
        checks.push(check("publishedCubicPair", true, rec));
    }

    // Rivera count for fixed points of phi in the domain between the
    // Gauss cycle points
    let rivera = match rec.filter(|_| two) {
        Some(r) => match RiveraInstance::from_cycle(&phi, r, tol) {
            Ok(inst) => {
                let seeds = fixed_point_seeds(d);
                match rivera_count_check(&phi, &inst, 1, &seeds, ExpQ::from_int(4), cfg.degree_cap, tol) {
                    Ok(rc) => {
                        let resid_ok = rc
                            .lifted
                            .iter()
                            .all(|c| c.residual_valuation.map_or(true, |v| v >= ExpQ::from_int(4)));
                        (
                            rc.observed as i64 == rc.formula && resid_ok,
                            json!({"center": inst.center.to_string(), "observed": rc.observed, "formula": rc.formula,
                                   "lifted": to_value(&rc.lifted)}),
                        )
                    }
                    Err(e) => (false, json!(e.to_string())),
                }
            }
            Err(e) => (false, json!(e.to_string())),
        },
        None => (false, Value::Null),
    };
    checks.push(check("riveraCount", rivera.0, rivera.1));

    let ok = checks.iter().all(|c| c["passed"].as_bool().unwrap_or(false));
    let rows = checks
        .iter()
        .map(|c| vec![scalar_text(&c["check"]), c["passed"].to_string()])
        .collect();
    let mut r = Report::new(json!({"d": d, "g": g, "checks": checks}), ok);
    r.table = Some(Table {
        header: vec!["check".into(), "passed".into()],
        rows,
    });
    Ok(r)
}

/// First-order seeds for the `d + 1` fixed points of the example: `1 ±
/// i sqrt(t/d)` and the nontrivial `d`-th roots of unity.
fn fixed_point_seeds(d: usize) -> Vec<ProjPointL> {
    let s = (1.0 / d as f64).sqrt();
    let mut out: Vec<ProjPointL> = [s, -s]
        .iter()
        .map(|&y| {
            ProjPointL::finite(Series::exact(vec![
                (ExpQ::zero(), ONE),
                (ExpQ::new(1, 2), Scalar::new(0.0, y)),
            ]))
        })
        .collect();
    for k in 1..d {
        let z = Scalar::from_polar(1.0, std::f64::consts::TAU * k as f64 / d as f64);
        out.push(ProjPointL::finite(Series::constant(z)));
    }
    out
}

fn family_track(
    cfg: &RunConfig,
    u: &Option<String>,
    v: &Option<String>,
    d: Option<usize>,
    ts: &[f64],
) -> Result<Report, Failure> {
    let us = u.clone().or(cfg.family.u.clone()).ok_or_else(|| input("--u is required"))?;
    let vs = v.clone().or(cfg.family.v.clone()).ok_or_else(|| input("--v is required"))?;
    let d = d.or(cfg.family.d).unwrap_or(2);
    let (u, v) = (parse_series(cfg, &us)?, parse_series(cfg, &vs)?);
    let class = degeneracy_check(&u, &v, &cfg.tol)?;
    let mut rows = Vec::new();
    let mut table = Vec::new();
    for &t in ts {
        if !(t > 0.0) {
            return Err(input("t values must be positive"));
        }
        let (ut, vt) = (u.eval_at(t), v.eval_at(t));
        let row = match milnor_map(ut, vt, d, &cfg.tol).and_then(|f| moduli_coordinates(&f, &cfg.tol)) {
            Ok((s1, sd)) => json!({"t": num(t), "sigma1": cx(s1), "sigmaD": cx(sd), "size": num(s1.norm() + sd.norm())}),
            Err(e) => json!({"t": num(t), "error": e.to_string()}),
        };
        table.push(vec![
            t.to_string(),
            scalar_text(&row["sigma1"]),
            scalar_text(&row["sigmaD"]),
            scalar_text(&round_floats(row["size"].clone())),
        ]);
        rows.push(row);
    }
    let mut r = Report::new(
        json!({"u": u.to_string(), "v": v.to_string(), "d": d, "degeneracy": to_value(&class), "rows": rows}),
        true,
    );
    r.table = Some(Table {
        header: vec!["t".into(), "sigma1".into(), "sigmaD".into(), "size".into()],
        rows: table,
    });
    Ok(r)
}

fn census(cfg: &RunConfig, a: &CensusArgs) -> Result<Report, Failure> {
    if a.max_period == 0 || a.max_period > 6 {
        return Err(input("max period must be in 1..=6"));
    }
    let f = match (&a.map, &a.u, &a.v) {
        (Some(m), _, _) => ComplexRatMap::parse(m, &cfg.tol)?,
        (None, Some(u), Some(v)) => milnor_map(parse_scalar(u)?, parse_scalar(v)?, a.d.unwrap_or(2), &cfg.tol)?,
        _ => return Err(input("census needs --map or --u and --v")),
    };
    if f.degree() < 2 {
        return Err(input("census needs a map of degree at least 2"));
    }
    let rep = nonrepelling_census(&f, a.max_period, &cfg.tol)?;
    let ok = !rep.flagged;
    let rows = rep
        .cycles
        .iter()
        .map(|c| {
            vec![
                c.period.to_string(),
                c.points.iter().map(|p| p.to_string()).collect::<Vec<_>>().join(" "),
                fmt_complex(c.multiplier),
                scalar_text(&to_value(&c.class)),
            ]
        })
        .collect();
    let mut v = to_value(&rep);
    v["map"] = json!(f.to_string());
    let mut r = Report::new(v, ok);
    r.table = Some(Table {
        header: vec!["period".into(), "points".into(), "multiplier".into(), "class".into()],
        rows,
    });
    Ok(r)
}

#[allow(clippy::too_many_arguments)]
fn rescale_check(
    cfg: &RunConfig,
    a: &MapArgs,
    point: &str,
    q: Option<usize>,
    radius: f64,
    count: usize,
    ts: &[f64],
    bound: f64,
    solved: bool,
) -> Result<Report, Failure> {
    let tol = &cfg.tol;
    let phi = if solved {
        let m = merged(cfg, a);
        let d = m.d.unwrap_or(2);
        let c = solve_example_coefficients(d, cfg.precision, tol)?;
        let best = c
            .into_iter()
            .find(|x| x.verification.passed())
            .ok_or_else(|| Failure::Verification("NoSolution".into(), "no verified coefficients".into()))?;
        example_map(&ExampleParams::new(d, best.g)?, cfg.precision)
    } else {
        build_map(cfg, a)?
    };
    let xi = parse_point(point)?;
    let rec = find_cycle_type_ii(&phi, &xi, MAX_PERIOD, tol)?
        .ok_or_else(|| Failure::Verification("NoSolution".into(), format!("{xi} is not periodic")))?;
    let q = q.unwrap_or(rec.period);
    if q % rec.period != 0 {
        return Err(input(format!("q must be a multiple of the period {}", rec.period)));
    }
    let g = if q == rec.period {
        rescaling_limit(&rec)?
    } else {
        ComplexRatMap::from_ratfunc(&rec.tangent_of_iterate(0, q, tol)?)
    };
    if !(radius > 0.0) || count == 0 {
        return Err(input("radius and count must be positive"));
    }
    let curve = ConjugacyCurve {
        a: xi.center().clone(),
        r: xi.rexp(),
    };
    let zs = circle(ZERO, radius, count);
    let rows = cross_validate_rescaling(&phi, &curve, q, &g, ts, &zs, cfg.degree_cap, tol)?;
    let decreasing = strictly_decreasing(&rows);
    let last = rows.last().map_or(f64::INFINITY, |r| r.sup_error);
    let ok = decreasing && last <= bound;
    let mut r = Report::new(
        json!({
            "point": xi.to_string(),
            "q": q,
            "limit": g.to_string(),
            "rows": to_value(&rows),
            "strictlyDecreasing": decreasing,
            "finalError": num(last),
            "bound": num(bound),
        }),
        ok,
    );
    r.table = Some(Table {
        header: vec!["t".into(), "supError".into()],
        rows: rows
            .iter()
            .map(|x| vec![berkline_core::text::fmt_real(x.t), berkline_core::text::fmt_real(x.sup_error)])
            .collect(),
    });
    Ok(r)
}
