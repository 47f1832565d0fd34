//! Command-line front end. `main.rs` only forwards to [`run`].
//!
//! Exit codes: 0 on success, 1 on a failed computation or a FAIL from
//! `verify`, 2 on a usage error.

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Map, Value};
use thiserror::Error;

use crate::basin::{decompose_1d, rasterize_2d, RasterOptions, Rect, DEFAULT_DEPTH};
use crate::classify::{auto_certificate, estimate_limit, LimitOptions};
use crate::expr::{PlanarFn, ScalarFn};
use crate::families::{classify_family, registry, settle_fiber, Family, System};
use crate::fecld::{check_certificate, hyperbolic_envelope, Decay, Envelope, EnvelopeSpec};
use crate::jacobsthal::{jacobsthal_decay, verify_jacobsthal};
use crate::maps::{iterate, IterateOptions, PlanarMap, TriangularMap};
use crate::suite::{run_criterion, SuiteOptions, CRITERIA, DEFAULT_SEED};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Failed(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Failed(_) | CliError::Io(_) => 1,
        }
    }
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn failed(e: impl std::fmt::Display) -> CliError {
    CliError::Failed(e.to_string())
}

#[derive(Debug, Parser)]
#[command(name = "trimap", version, about = "Limit dynamics of triangular maps and related difference equations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Iterate a map or family and print the orbit as CSV.
    #[command(allow_negative_numbers = true)]
    Simulate(SimulateArgs),
    /// Decide the limit regime and estimate the limit (JSON).
    #[command(allow_negative_numbers = true)]
    Classify(ClassifyArgs),
    /// Check envelope conditions H1-H4 for a map near a fiber (JSON).
    #[command(allow_negative_numbers = true)]
    Certify(CertifyArgs),
    /// 1-D interval decomposition or 2-D basin raster.
    #[command(allow_negative_numbers = true)]
    Basin(BasinArgs),
    /// Registry of named families.
    Families {
        #[command(subcommand)]
        command: FamiliesCommand,
    },
    /// Run the reproduction checks, or a single verifier.
    #[command(allow_negative_numbers = true)]
    Verify(VerifyArgs),
}

#[derive(Debug, Subcommand)]
enum FamiliesCommand {
    /// Print every family with its parameters and formula.
    List {
        #[arg(long)]
        json: bool,
    },
}

/// Inline triangular map `x' = f0(u) + f1(u) x`, `u' = phi(u)`.
#[derive(Debug, Args)]
struct MapArgs {
    #[arg(long, allow_hyphen_values = true)]
    f0: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    f1: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    phi: Option<String>,
}

impl MapArgs {
    fn given(&self) -> bool {
        self.f0.is_some() || self.f1.is_some() || self.phi.is_some()
    }

    fn build(&self) -> Result<TriangularMap, CliError> {
        let (Some(f0), Some(f1), Some(phi)) = (&self.f0, &self.f1, &self.phi) else {
            return Err(usage("an inline map needs all of --f0, --f1 and --phi"));
        };
        TriangularMap::parse(f0, f1, phi).map_err(|e| usage(format!("cannot parse map: {e}")))
    }
}

/// Named family plus its parameters, given as flags or as `--params JSON`.
#[derive(Debug, Args)]
struct FamilyArgs {
    /// Family name, see `families list`.
    #[arg(long)]
    family: Option<String>,
    /// Parameters as a JSON object; individual flags override it.
    #[arg(long)]
    params: Option<String>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    mu: Option<f64>,
    #[arg(long)]
    a: Option<f64>,
    #[arg(long)]
    b: Option<f64>,
    #[arg(long)]
    d: Option<f64>,
    #[arg(long)]
    j: Option<f64>,
    #[arg(long)]
    l: Option<f64>,
    #[arg(long)]
    k: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    p: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    q: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    g: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    f: Option<String>,
}

fn number(v: f64) -> Value {
    if v.fract() == 0.0 && v.abs() < 9e15 {
        json!(v as i64)
    } else {
        json!(v)
    }
}

type NamedSystem = (Family, Box<dyn System>);

impl FamilyArgs {
    fn to_json(&self) -> Result<Option<Value>, CliError> {
        let Some(name) = &self.family else {
            return Ok(None);
        };
        let mut obj = match &self.params {
            Some(text) => match serde_json::from_str::<Value>(text) {
                Ok(Value::Object(m)) => m,
                Ok(_) => return Err(usage("--params must be a JSON object")),
                Err(e) => return Err(usage(format!("--params: {e}"))),
            },
            None => Map::new(),
        };
        obj.insert("family".into(), json!(name));
        let numeric = [
            ("lambda", self.lambda),
            ("mu", self.mu),
            ("a", self.a),
            ("b", self.b),
            ("d", self.d),
            ("j", self.j),
            ("l", self.l),
            ("k", self.k),
            ("alpha", self.alpha),
            ("beta", self.beta),
            ("gamma", self.gamma),
        ];
        for (key, v) in numeric {
            if let Some(v) = v {
                obj.insert(key.into(), number(v));
            }
        }
        for (key, v) in [("p", &self.p), ("q", &self.q), ("g", &self.g), ("f", &self.f)] {
            if let Some(v) = v {
                obj.insert(key.into(), json!(v));
            }
        }
        Ok(Some(Value::Object(obj)))
    }

    fn build(&self) -> Result<Option<NamedSystem>, CliError> {
        let Some(value) = self.to_json()? else {
            return Ok(None);
        };
        let family = Family::from_json(value).map_err(|e| usage(e.to_string()))?;
        let system = family.build().map_err(|e| usage(e.to_string()))?;
        Ok(Some((family, system)))
    }
}

#[derive(Debug, Args)]
struct InitArgs {
    #[arg(long)]
    x0: Option<f64>,
    #[arg(long)]
    x1: Option<f64>,
    #[arg(long)]
    x2: Option<f64>,
    #[arg(long)]
    u0: Option<f64>,
    #[arg(long)]
    y0: Option<f64>,
    /// All initial values at once, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    init: Option<Vec<f64>>,
}

impl InitArgs {
    fn values(&self, names: &[String]) -> Result<Vec<f64>, CliError> {
        if let Some(v) = &self.init {
            if v.len() != names.len() {
                return Err(usage(format!("--init needs {} values ({})", names.len(), names.join(","))));
            }
            return Ok(v.clone());
        }
        names
            .iter()
            .map(|n| {
                let v = match n.as_str() {
                    "x0" => self.x0,
                    "x1" => self.x1,
                    "x2" => self.x2,
                    "u0" => self.u0,
                    "y0" => self.y0,
                    _ => None,
                };
                v.ok_or_else(|| usage(format!("missing initial value --{n} (or --init {})", names.join(","))))
            })
            .collect()
    }
}

#[derive(Debug, Args)]
struct CommonArgs {
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    budget: Option<usize>,
    #[arg(long)]
    escape: Option<f64>,
    /// Worker threads for rasters; defaults to all cores.
    #[arg(long)]
    jobs: Option<usize>,
    /// Seed for randomized checks; FD_SEED overrides it.
    #[arg(long)]
    seed: Option<u64>,
}

impl CommonArgs {
    fn validate(&self) -> Result<(), CliError> {
        if let Some(t) = self.tol {
            if !(t > 0.0) {
                return Err(usage("--tol must be positive"));
            }
        }
        if let Some(r) = self.escape {
            if !(r > 0.0) {
                return Err(usage("--escape must be positive"));
            }
        }
        if self.budget == Some(0) {
            return Err(usage("--budget must be positive"));
        }
        Ok(())
    }

    fn seed(&self) -> Result<u64, CliError> {
        match std::env::var("FD_SEED") {
            Ok(s) => s.trim().parse().map_err(|_| usage(format!("FD_SEED must be an integer, got {s:?}"))),
            Err(_) => Ok(self.seed.unwrap_or(DEFAULT_SEED)),
        }
    }

    fn limit_options(&self) -> LimitOptions {
        let d = LimitOptions::default();
        LimitOptions {
            tol: self.tol.unwrap_or(d.tol),
            budget: self.budget.unwrap_or(d.budget),
            escape_radius: self.escape.unwrap_or(d.escape_radius),
            ..d
        }
    }
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[command(flatten)]
    map: MapArgs,
    #[command(flatten)]
    family: FamilyArgs,
    #[command(flatten)]
    init: InitArgs,
    #[command(flatten)]
    common: CommonArgs,
    /// Number of steps (same as --budget).
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ClassifyArgs {
    #[command(flatten)]
    map: MapArgs,
    #[command(flatten)]
    family: FamilyArgs,
    #[command(flatten)]
    init: InitArgs,
    #[command(flatten)]
    common: CommonArgs,
    /// The attracting fiber; found by iterating phi when omitted.
    #[arg(long)]
    u_star: Option<f64>,
    /// Skip the automatic envelope certificate.
    #[arg(long)]
    no_certificate: bool,
}

#[derive(Debug, Args)]
struct CertifyArgs {
    #[command(flatten)]
    map: MapArgs,
    #[command(flatten)]
    family: FamilyArgs,
    #[command(flatten)]
    init: InitArgs,
    #[arg(long)]
    u_star: Option<f64>,
    /// Window half-width around u*.
    #[arg(long)]
    epsilon: Option<f64>,
    /// `zero`, `linear:C`, `power:C,E` or an expression in u.
    #[arg(long, allow_hyphen_values = true)]
    v: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    w: Option<String>,
    /// `geometric:C,RATIO`, `power:C,R`, `jacobsthal:K,A,DELTA` or `table:P0,P1,...`.
    #[arg(long)]
    decay: Option<String>,
    #[arg(long, default_value_t = 512)]
    samples: usize,
}

#[derive(Debug, Args)]
struct BasinArgs {
    #[command(flatten)]
    family: FamilyArgs,
    /// Fiber map for a 1-D decomposition.
    #[arg(long, allow_hyphen_values = true, conflicts_with = "family")]
    phi: Option<String>,
    #[arg(long, num_args = 2, value_names = ["LO", "HI"])]
    window: Option<Vec<f64>>,
    #[arg(long, default_value_t = DEFAULT_DEPTH)]
    depth: usize,
    /// Planar map components, instead of a family.
    #[arg(long = "x-map", allow_hyphen_values = true, requires = "y_map")]
    x_map: Option<String>,
    #[arg(long = "y-map", allow_hyphen_values = true, requires = "x_map")]
    y_map: Option<String>,
    #[arg(long, num_args = 4, value_names = ["XMIN", "YMIN", "XMAX", "YMAX"])]
    rect: Option<Vec<f64>>,
    /// Cells per side, or `--res NX --res NY`.
    #[arg(long, num_args = 1..=2)]
    res: Option<Vec<usize>>,
    /// Attractor point, repeatable; defaults to the origin.
    #[arg(long, num_args = 2, action = clap::ArgAction::Append, value_names = ["X", "Y"])]
    attractor: Vec<f64>,
    /// PGM output; the JSON sidecar goes next to it.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    ppm: Option<PathBuf>,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Debug, Args)]
#[command(args_conflicts_with_subcommands = true)]
struct VerifyArgs {
    #[command(subcommand)]
    command: Option<VerifyCommand>,
    /// Run only these criteria.
    #[arg(long, value_delimiter = ',')]
    criterion: Vec<u32>,
    #[arg(long)]
    json: bool,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Debug, Subcommand)]
enum VerifyCommand {
    /// Check the rate `((k-1) a n)^(-1/(k-1))` for `u' = f(u)`.
    #[command(allow_negative_numbers = true)]
    Jacobsthal(JacobsthalArgs),
}

#[derive(Debug, Args)]
struct JacobsthalArgs {
    /// The map; defaults to `u - a u^k`.
    #[arg(long, allow_hyphen_values = true)]
    f: Option<String>,
    #[arg(long)]
    k: f64,
    #[arg(long)]
    a: f64,
    #[arg(long)]
    u0: f64,
    #[arg(long, value_delimiter = ',', default_value = "100,1000,10000")]
    probes: Vec<u64>,
    /// Allowed distance between the last rescaled value and the prediction.
    #[arg(long, default_value_t = 0.01)]
    tol: f64,
}

/// Parses `args` (including the program name), runs the command and returns
/// the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let stdout = io::stdout();
    let stderr = io::stderr();
    run_with(args, &mut stdout.lock(), &mut stderr.lock())
}

pub fn run_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 { out.write_all(text.as_bytes()) } else { err.write_all(text.as_bytes()) };
            return code;
        }
    };
    match dispatch(cli.command, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(command: Command, out: &mut dyn Write) -> Result<i32, CliError> {
    match command {
        Command::Simulate(a) => simulate(a, out).map(|_| 0),
        Command::Classify(a) => classify(a, out).map(|_| 0),
        Command::Certify(a) => certify(a, out).map(|_| 0),
        Command::Basin(a) => basin(a, out).map(|_| 0),
        Command::Families { command: FamiliesCommand::List { json } } => families_list(json, out).map(|_| 0),
        Command::Verify(a) => verify(a, out),
    }
}

/// Pretty JSON with sorted keys.
fn print_json<T: Serialize>(value: &T, out: &mut dyn Write) -> Result<(), CliError> {
    let v = serde_json::to_value(value).map_err(failed)?;
    serde_json::to_writer_pretty(&mut *out, &v).map_err(failed)?;
    writeln!(out)?;
    Ok(())
}

enum Target {
    Map(TriangularMap),
    Family(Family, Box<dyn System>),
}

fn target(map: &MapArgs, family: &FamilyArgs) -> Result<Target, CliError> {
    match (map.given(), family.build()?) {
        (true, Some(_)) => Err(usage("give either --family or --f0/--f1/--phi, not both")),
        (true, None) => Ok(Target::Map(map.build()?)),
        (false, Some((f, s))) => Ok(Target::Family(f, s)),
        (false, None) => Err(usage("give --family NAME or an inline map --f0 --f1 --phi")),
    }
}

fn open_out(path: &Option<PathBuf>) -> Result<Option<BufWriter<File>>, CliError> {
    Ok(match path {
        Some(p) => Some(BufWriter::new(File::create(p)?)),
        None => None,
    })
}

fn simulate(a: SimulateArgs, out: &mut dyn Write) -> Result<(), CliError> {
    a.common.validate()?;
    let budget = a.steps.or(a.common.budget).unwrap_or(1000);
    let opts = IterateOptions { budget, escape_radius: a.common.escape.unwrap_or(1e6), record: true };
    let target = target(&a.map, &a.family)?;
    let mut file = open_out(&a.out)?;
    let sink: &mut dyn Write = match file.as_mut() {
        Some(f) => f,
        None => out,
    };
    match target {
        Target::Map(map) => {
            let init = a.init.values(&["x0".into(), "u0".into()])?;
            iterate(&map, [init[0], init[1]], opts).write_csv(&mut *sink, "u")?;
        }
        Target::Family(_, system) => {
            let init = a.init.values(&system.initial_names())?;
            system.orbit(&init, opts).map_err(failed)?.write_csv(&mut *sink)?;
        }
    }
    sink.flush()?;
    Ok(())
}

fn classify(a: ClassifyArgs, out: &mut dyn Write) -> Result<(), CliError> {
    a.common.validate()?;
    let opts = a.common.limit_options();
    match target(&a.map, &a.family)? {
        Target::Map(map) => {
            let init = a.init.values(&["x0".into(), "u0".into()])?;
            let u_star = match a.u_star {
                Some(u) => u,
                None => settle_fiber(&map.phi, init[1], 100_000)
                    .ok_or_else(|| failed(format!("phi does not settle from u0 = {}; pass --u-star", init[1])))?,
            };
            let cert = if a.no_certificate { None } else { auto_certificate(&map, u_star) };
            let report = estimate_limit(&map, [init[0], init[1]], u_star, cert.as_ref(), &opts).map_err(failed)?;
            print_json(&report, out)
        }
        Target::Family(family, system) => {
            let init = a.init.values(&system.initial_names())?;
            let report = classify_family(family.name(), system.as_ref(), &init, a.u_star, &opts).map_err(failed)?;
            print_json(&report, out)
        }
    }
}

fn parse_list(text: &str) -> Result<Vec<f64>, CliError> {
    text.split(',')
        .map(|s| s.trim().parse::<f64>().map_err(|_| usage(format!("not a number: {s:?}"))))
        .collect()
}

fn parse_envelope(text: &str) -> Result<Envelope, CliError> {
    if text == "zero" || text == "0" {
        return Ok(Envelope::zero());
    }
    if let Some(rest) = text.strip_prefix("linear:") {
        let v = parse_list(rest)?;
        return match v[..] {
            [c] => Ok(Envelope::linear(c)),
            _ => Err(usage("linear:C takes one number")),
        };
    }
    if let Some(rest) = text.strip_prefix("power:") {
        let v = parse_list(rest)?;
        return match v[..] {
            [c, e] => Ok(Envelope::power(c, e)),
            _ => Err(usage("power:C,E takes two numbers")),
        };
    }
    ScalarFn::parse(text).map(Envelope::Custom).map_err(|e| usage(format!("envelope {text:?}: {e}")))
}

fn parse_decay(text: &str) -> Result<Decay, CliError> {
    let (kind, rest) = text.split_once(':').ok_or_else(|| usage(format!("decay {text:?} needs KIND:VALUES")))?;
    let v = parse_list(rest)?;
    match (kind, &v[..]) {
        ("geometric", &[c, ratio]) => Ok(Decay::Geometric { c, ratio }),
        ("power", &[c, r]) => Ok(Decay::PowerLaw { c, r }),
        ("jacobsthal", &[k, a, delta]) => jacobsthal_decay(k, a, delta).map_err(|e| usage(e.to_string())),
        ("table", values) if !values.is_empty() => Ok(Decay::Table { values: values.to_vec() }),
        _ => Err(usage(format!("cannot read decay {text:?}"))),
    }
}

fn certify(a: CertifyArgs, out: &mut dyn Write) -> Result<(), CliError> {
    if a.samples < 2 {
        return Err(usage("--samples must be at least 2"));
    }
    let (map, default_u) = match target(&a.map, &a.family)? {
        Target::Map(map) => (map, None),
        Target::Family(_, system) => {
            let init = a.init.values(&system.initial_names())?;
            let red = system.reduce(&init).map_err(failed)?;
            let u = red.u_star.or_else(|| settle_fiber(&red.map.phi, red.starts[0][1], 100_000));
            (red.map, u)
        }
    };
    let u_star = a.u_star.or(default_u).ok_or_else(|| usage("pass --u-star"))?;
    let epsilon = a.epsilon.unwrap_or(0.1 * u_star.abs().max(1.0));
    if !(epsilon > 0.0) {
        return Err(usage("--epsilon must be positive"));
    }
    let custom = a.v.is_some() || a.w.is_some() || a.decay.is_some();
    let spec = if custom {
        let (Some(v), Some(decay)) = (&a.v, &a.decay) else {
            return Err(usage("a custom envelope needs --v and --decay (and optionally --w)"));
        };
        let w = a.w.as_deref().map(parse_envelope).transpose()?.unwrap_or_else(Envelope::zero);
        EnvelopeSpec::new(parse_envelope(v)?, w, epsilon, parse_decay(decay)?)
    } else {
        hyperbolic_envelope(&map, u_star, epsilon).map_err(failed)?
    };
    let cert = check_certificate(&map, u_star, &spec, a.samples).map_err(failed)?;
    print_json(&cert, out)
}

fn sidecar_path(pgm: &Path) -> PathBuf {
    pgm.with_extension("json")
}

fn basin(a: BasinArgs, out: &mut dyn Write) -> Result<(), CliError> {
    a.common.validate()?;
    if let Some(phi) = &a.phi {
        let phi = ScalarFn::parse(phi).map_err(|e| usage(format!("--phi: {e}")))?;
        let (lo, hi) = match a.window.as_deref() {
            Some(&[lo, hi]) => (lo, hi),
            _ => return Err(usage("1-D mode needs --window LO HI")),
        };
        if a.depth == 0 {
            return Err(usage("--depth must be at least 1"));
        }
        let d = decompose_1d(&phi, (lo, hi), a.depth).map_err(|e| usage(e.to_string()))?;
        let mut file = open_out(&a.out)?;
        let sink: &mut dyn Write = match file.as_mut() {
            Some(f) => f,
            None => out,
        };
        return print_json(&d, sink);
    }

    let map: PlanarMap = match (&a.x_map, &a.y_map, a.family.build()?) {
        (Some(_), _, Some(_)) => return Err(usage("give either --family or --x-map/--y-map")),
        (Some(x), Some(y), None) => PlanarMap::new(
            PlanarFn::parse(x).map_err(|e| usage(format!("--x-map: {e}")))?,
            PlanarFn::parse(y).map_err(|e| usage(format!("--y-map: {e}")))?,
        ),
        (None, _, Some((family, system))) => {
            system.planar().ok_or_else(|| usage(format!("{} has no planar form", family.name())))?.map
        }
        _ => return Err(usage("give --family, --x-map/--y-map, or --phi with --window")),
    };
    let rect = match a.rect.as_deref() {
        Some(&[x0, y0, x1, y1]) => Rect::new(x0, y0, x1, y1),
        _ => return Err(usage("2-D mode needs --rect XMIN YMIN XMAX YMAX")),
    };
    let (nx, ny) = match a.res.as_deref() {
        Some(&[n]) => (n, n),
        Some(&[nx, ny]) => (nx, ny),
        _ => (400, 400),
    };
    let attractors: Vec<[f64; 2]> =
        if a.attractor.is_empty() { vec![[0.0, 0.0]] } else { a.attractor.chunks(2).map(|c| [c[0], c[1]]).collect() };
    let Some(path) = &a.out else {
        return Err(usage("2-D mode needs --out FILE.pgm"));
    };
    let d = RasterOptions::default();
    let opts = RasterOptions {
        budget: a.common.budget.unwrap_or(d.budget),
        escape_radius: a.common.escape.unwrap_or(d.escape_radius),
        tol: a.common.tol.unwrap_or(d.tol),
        jobs: a.common.jobs.unwrap_or(0),
    };
    let grid = rasterize_2d(&map, rect, nx, ny, &attractors, &opts).map_err(|e| usage(e.to_string()))?;
    let mut pgm = BufWriter::new(File::create(path)?);
    grid.write_pgm(&mut pgm)?;
    pgm.flush()?;
    if let Some(p) = &a.ppm {
        let mut ppm = BufWriter::new(File::create(p)?);
        grid.write_ppm(&mut ppm)?;
        ppm.flush()?;
    }
    let side = grid.sidecar();
    let mut f = BufWriter::new(File::create(sidecar_path(path))?);
    print_json(&side, &mut f)?;
    f.flush()?;
    print_json(&side["counts"], out)
}

fn families_list(as_json: bool, out: &mut dyn Write) -> Result<(), CliError> {
    if as_json {
        return print_json(&registry(), out);
    }
    for info in registry() {
        writeln!(out, "{} ({}) start {}", info.name, info.params.join(", "), info.initial.join(","))?;
        writeln!(out, "    {}", info.description)?;
    }
    Ok(())
}

fn verify(a: VerifyArgs, out: &mut dyn Write) -> Result<i32, CliError> {
    if let Some(VerifyCommand::Jacobsthal(j)) = a.command {
        let f = match &j.f {
            Some(text) => ScalarFn::parse(text).map_err(|e| usage(format!("--f: {e}")))?,
            None => {
                let (k, coef) = (j.k, j.a);
                ScalarFn::builtin(format!("u - {coef}*u^{k}"), move |u| u - coef * u.powf(k))
            }
        };
        let report = verify_jacobsthal(&f, j.k, j.a, j.u0, &j.probes).map_err(failed)?;
        print_json(&report, out)?;
        return Ok(if report.within(j.tol) { 0 } else { 1 });
    }
    a.common.validate()?;
    let opts = SuiteOptions { seed: a.common.seed()?, jobs: a.common.jobs.unwrap_or(0) };
    let ids: Vec<u32> = if a.criterion.is_empty() { CRITERIA.iter().map(|c| c.0).collect() } else { a.criterion };
    let mut all = true;
    let mut results = Vec::new();
    for id in ids {
        let r = run_criterion(id, &opts).ok_or_else(|| usage(format!("no criterion {id}")))?;
        all &= r.passed;
        if !a.json {
            writeln!(out, "{r}")?;
            out.flush()?;
        }
        results.push(r);
    }
    if a.json {
        print_json(&json!({ "seed": opts.seed, "results": results }), out)?;
    }
    Ok(if all { 0 } else { 1 })
}
