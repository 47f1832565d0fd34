//! Named systems and their reductions to triangular form.
//!
//! Every family is addressable by name plus a JSON parameter object, e.g.
//! `{"family": "bajo-liz", "a": -1, "b": 1}`. [`Family::build`] turns the
//! parameters into a [`System`], which knows how to iterate its raw form and
//! how to rewrite itself as one or more interleaved triangular subsystems.

mod planar;
mod products;
mod recurrences;

use std::io::{self, Write};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classify::{auto_certificate, estimate_limit, ClassifyError, LimitOptions, LimitReport, Regime};
use crate::expr::{DomainError, DomainErrorKind, EvalResult, ParseError, ScalarFn};
use crate::fixed::TOL_ROOT;
use crate::maps::{iterate, IterateOptions, OrbitTrace, PlanarMap, PlanarStep, State, Termination, TriangularMap};

pub use planar::{CubicOutcome, PowerPerturbation, QuasiHomogeneous, QuasiHomogeneousCubic};
pub use products::{LinearProduct, LogProduct, NonhyperbolicProduct, PowerProduct};
pub use recurrences::{
    AdditiveOrderK, AdditiveOutcome, AdditiveRecurrence, AdditiveShift, BajoLiz, BajoLizOutcome, FiberOutcome, LogMultiplicative,
    Mobius, MobiusCase, MultiplicativeRecurrence, ThirdOrderMobius,
};

#[derive(Debug, Error)]
pub enum FamilyError {
    #[error("degenerate parameters: {0}")]
    Degenerate(String),
    #[error("invalid family parameters: {0}")]
    Params(String),
    #[error("cannot parse {field}: {source}")]
    Parse { field: &'static str, source: ParseError },
    #[error("expected {expected} initial values ({names}), got {got}")]
    InitialValues { expected: usize, names: String, got: usize },
    #[error("states must be positive, got {0}")]
    NonPositive(f64),
    #[error("{0} has no triangular reduction")]
    NoReduction(&'static str),
    #[error("the fiber map does not settle from u0 = {0}; pass u* explicitly")]
    NoLimitFiber(f64),
    #[error("initial values leave the good set: {0}")]
    OutsideGoodSet(DomainError),
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error(transparent)]
    Classify(#[from] ClassifyError),
}

/// Family name and parameters, as read from JSON or command-line flags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Family {
    PowerPerturbation { lambda: f64, mu: f64, a: f64, j: u32, l: u32 },
    QuasiHomogeneous { alpha: u32, beta: i32, p: String, q: String },
    QuasiHomogeneousCubic { d: f64 },
    Mobius { a: f64, b: f64 },
    BajoLiz { a: f64, b: f64 },
    Multiplicative { k: usize, g: String },
    Additive { b: f64, g: String },
    LinearProduct { a: f64, lambda: f64 },
    LogProduct { lambda: f64 },
    PowerProduct { a: f64, b: f64, alpha: f64, lambda: f64 },
    NonhyperbolicProduct { a: f64, b: f64, alpha: f64, k: f64 },
    ThirdOrderMobius { a: f64, b: f64 },
    LogMultiplicative { gamma: f64, g: String },
    AdditiveOrderK { k: usize, f: String },
    AdditiveShift { a: f64, f: String },
}

fn parse_fn(field: &'static str, text: &str) -> Result<ScalarFn, FamilyError> {
    ScalarFn::parse(text).map_err(|source| FamilyError::Parse { field, source })
}

impl Family {
    pub fn from_json(value: serde_json::Value) -> Result<Self, FamilyError> {
        serde_json::from_value(value).map_err(|e| FamilyError::Params(e.to_string()))
    }

    pub fn name(&self) -> &'static str {
        match self {
            Family::PowerPerturbation { .. } => "power-perturbation",
            Family::QuasiHomogeneous { .. } => "quasi-homogeneous",
            Family::QuasiHomogeneousCubic { .. } => "quasi-homogeneous-cubic",
            Family::Mobius { .. } => "mobius",
            Family::BajoLiz { .. } => "bajo-liz",
            Family::Multiplicative { .. } => "multiplicative",
            Family::Additive { .. } => "additive",
            Family::LinearProduct { .. } => "linear-product",
            Family::LogProduct { .. } => "log-product",
            Family::PowerProduct { .. } => "power-product",
            Family::NonhyperbolicProduct { .. } => "nonhyperbolic-product",
            Family::ThirdOrderMobius { .. } => "third-order-mobius",
            Family::LogMultiplicative { .. } => "log-multiplicative",
            Family::AdditiveOrderK { .. } => "additive-order-k",
            Family::AdditiveShift { .. } => "additive-shift",
        }
    }

    pub fn build(&self) -> Result<Box<dyn System>, FamilyError> {
        Ok(match self {
            &Family::PowerPerturbation { lambda, mu, a, j, l } => Box::new(PowerPerturbation::new(lambda, mu, a, j, l)?),
            Family::QuasiHomogeneous { alpha, beta, p, q } => {
                Box::new(QuasiHomogeneous::new(*alpha, *beta, parse_fn("p", p)?, parse_fn("q", q)?)?)
            }
            &Family::QuasiHomogeneousCubic { d } => Box::new(QuasiHomogeneousCubic::new(d)?),
            &Family::Mobius { a, b } => Box::new(Mobius::new(a, b)?),
            &Family::BajoLiz { a, b } => Box::new(BajoLiz::new(a, b)?),
            Family::Multiplicative { k, g } => Box::new(MultiplicativeRecurrence::new(*k, parse_fn("g", g)?)?),
            Family::Additive { b, g } => Box::new(AdditiveRecurrence::new(*b, parse_fn("g", g)?)),
            &Family::LinearProduct { a, lambda } => Box::new(LinearProduct::new(a, lambda)?),
            &Family::LogProduct { lambda } => Box::new(LogProduct::new(lambda)?),
            &Family::PowerProduct { a, b, alpha, lambda } => Box::new(PowerProduct::new(a, b, alpha, lambda)?),
            &Family::NonhyperbolicProduct { a, b, alpha, k } => Box::new(NonhyperbolicProduct::new(a, b, alpha, k)?),
            &Family::ThirdOrderMobius { a, b } => Box::new(ThirdOrderMobius::new(a, b)),
            Family::LogMultiplicative { gamma, g } => Box::new(LogMultiplicative::new(*gamma, parse_fn("g", g)?)),
            Family::AdditiveOrderK { k, f } => Box::new(AdditiveOrderK::new(*k, parse_fn("f", f)?)?),
            Family::AdditiveShift { a, f } => Box::new(AdditiveShift::new(*a, parse_fn("f", f)?)),
        })
    }
}

/// Registry entry printed by `families list`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct FamilyInfo {
    pub name: &'static str,
    pub params: &'static [&'static str],
    pub initial: &'static [&'static str],
    pub description: &'static str,
}

pub fn registry() -> &'static [FamilyInfo] {
    const R: &[FamilyInfo] = &[
        FamilyInfo {
            name: "power-perturbation",
            params: &["lambda", "mu", "a", "j", "l"],
            initial: &["x0", "u0"],
            description: "x' = mu x + a u^j x^l, u' = lambda u; invariant curve u^j x^(l-1) = (lambda^alpha - mu)/a with alpha = -j/(l-1)",
        },
        FamilyInfo {
            name: "quasi-homogeneous",
            params: &["alpha", "beta", "p", "q"],
            initial: &["x0", "y0"],
            description: "x' = x p(w), y' = y q(w) with w = x^-beta y^alpha; w' = w p(w)^-beta q(w)^alpha",
        },
        FamilyInfo {
            name: "quasi-homogeneous-cubic",
            params: &["d"],
            initial: &["x0", "y0"],
            description: "x' = x (4 - x y)/(6 d), y' = d y (1 + x y); w = x y follows w' = w (4 - w)(1 + w)/6",
        },
        FamilyInfo {
            name: "mobius",
            params: &["a", "b"],
            initial: &["u0"],
            description: "u' = u/(a + b u); fixed points 0 and (1 - a)/b, pole at -a/b",
        },
        FamilyInfo {
            name: "bajo-liz",
            params: &["a", "b"],
            initial: &["x0", "x1"],
            description: "x(n+2) = x(n)/(a + b x(n) x(n+1)); two-step reduction z' = z/(a + b v), v' = v/(a^2 + b(1 + a) v)",
        },
        FamilyInfo {
            name: "multiplicative",
            params: &["k", "g"],
            initial: &["x0", "..", "x(k-1)"],
            description: "x(n+k) = x(n) g(x(n) x(n+1) ... x(n+k-1)); k subsystems z' = g(v) z, v' = phi^k(v), phi(v) = v g(v)",
        },
        FamilyInfo {
            name: "additive",
            params: &["b", "g"],
            initial: &["x0", "x1"],
            description: "x(n+2) = -b x(n+1) + g(x(n+1) + b x(n)); triangular x' = u - b x, u' = g(u)",
        },
        FamilyInfo {
            name: "linear-product",
            params: &["a", "lambda"],
            initial: &["x0", "u0"],
            description: "x' = (1 + a u) x, u' = lambda u; x converges to x0 prod(1 + a lambda^k u0)",
        },
        FamilyInfo {
            name: "log-product",
            params: &["lambda"],
            initial: &["x0", "u0"],
            description: "x' = (1 - 1/ln|u|) x, u' = lambda u; the product diverges",
        },
        FamilyInfo {
            name: "power-product",
            params: &["a", "b", "alpha", "lambda"],
            initial: &["x0", "u0"],
            description: "x' = (a + b |u|^alpha) x with a = 1 or -1, u' = lambda u",
        },
        FamilyInfo {
            name: "nonhyperbolic-product",
            params: &["a", "b", "alpha", "k"],
            initial: &["x0", "u0"],
            description: "x' = (1 + b |u|^alpha) x, u' = |u| - a |u|^k; x converges iff alpha > k - 1",
        },
        FamilyInfo {
            name: "third-order-mobius",
            params: &["a", "b"],
            initial: &["x0", "x1", "x2"],
            description: "x(n+3) = x(n+2) x(n)/(x(n+1) (a + b x(n+2) x(n))); four subsystems z' = z/(a^2 + b(1 + a) v) on v = x(n) x(n+2)",
        },
        FamilyInfo {
            name: "log-multiplicative",
            params: &["gamma", "g"],
            initial: &["x0", "x1"],
            description: "x(n+2) = x(n)^gamma g(x(n+1) x(n)^gamma)/x(n+1)^(gamma-1), x > 0; y = ln x follows y' = ln u - gamma y, u' = u g(u)",
        },
        FamilyInfo {
            name: "additive-order-k",
            params: &["k", "f"],
            initial: &["x0", "..", "x(k-1)"],
            description: "x(n+k) = x(n) + f(x(n) + ... + x(n+k-1)); k subsystems z' = z + f(v), v' = phi^k(v), phi(v) = v + f(v)",
        },
        FamilyInfo {
            name: "additive-shift",
            params: &["a", "f"],
            initial: &["x0", "x1"],
            description: "x(n+2) = a x(n) + (1 - a) x(n+1) + f(x(n+1) + a x(n)); triangular x' = u - a x, u' = u + f(u)",
        },
    ];
    R
}

/// A family instance: raw iteration plus its triangular reduction.
pub trait System: Send + Sync {
    /// Names of the initial values, e.g. `["x0", "x1"]`.
    fn initial_names(&self) -> Vec<String>;

    /// Iterates the system in its own coordinates.
    fn orbit(&self, init: &[f64], opts: IterateOptions) -> Result<Orbit, FamilyError>;

    fn reduce(&self, _init: &[f64]) -> Result<Reduction, FamilyError> {
        Err(FamilyError::NoReduction("this family"))
    }

    /// Planar form, for basin rasters.
    fn planar(&self) -> Option<PlanarSystem> {
        None
    }

    /// Family-specific facts (fixed points, predicted outcome for `init`).
    fn analysis(&self, _init: &[f64]) -> serde_json::Value {
        serde_json::Value::Null
    }
}

pub(crate) fn expect_len(names: &[String], init: &[f64]) -> Result<(), FamilyError> {
    if names.len() != init.len() {
        return Err(FamilyError::InitialValues { expected: names.len(), names: names.join(","), got: init.len() });
    }
    Ok(())
}

pub(crate) fn names(list: &[&str]) -> Vec<String> {
    list.iter().map(|s| s.to_string()).collect()
}

/// An orbit in the coordinates of the family.
#[derive(Debug, Clone)]
pub struct Orbit {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub reason: Termination,
}

impl Orbit {
    pub(crate) fn from_trace(trace: OrbitTrace, columns: [&str; 2]) -> Self {
        Orbit {
            columns: names(&columns),
            rows: trace.states.iter().map(|s| s.to_vec()).collect(),
            reason: trace.reason,
        }
    }

    /// Header `n,<columns>`, one row per state, then `# reason=...`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "n,{}", self.columns.join(","))?;
        for (n, row) in self.rows.iter().enumerate() {
            write!(out, "{n}")?;
            for v in row {
                write!(out, ",{v}")?;
            }
            writeln!(out)?;
        }
        writeln!(out, "# reason={}", self.reason)
    }
}

type NextFn = dyn Fn(&[f64]) -> EvalResult + Send + Sync;

/// Scalar recurrence `x(n+order) = next(x(n), ..., x(n+order-1))`.
#[derive(Clone)]
pub struct Recurrence {
    pub order: usize,
    next: Arc<NextFn>,
}

impl std::fmt::Debug for Recurrence {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Recurrence(order {})", self.order)
    }
}

impl Recurrence {
    pub fn new(order: usize, next: impl Fn(&[f64]) -> EvalResult + Send + Sync + 'static) -> Self {
        Recurrence { order, next: Arc::new(next) }
    }

    /// Computes up to `opts.budget` new terms after `init`. A pole (a zero
    /// denominator) stops the run with [`Termination::Pole`] at the index of
    /// the term that could not be computed.
    pub fn run(&self, init: &[f64], opts: IterateOptions) -> Vec<f64> {
        self.run_traced(init, opts).0
    }

    pub fn run_traced(&self, init: &[f64], opts: IterateOptions) -> (Vec<f64>, Termination) {
        let k = self.order;
        let mut xs = init.to_vec();
        for _ in 0..opts.budget {
            let n = xs.len();
            match (self.next)(&xs[n - k..]) {
                Ok(v) => {
                    xs.push(v);
                    if !v.is_finite() || v.abs() > opts.escape_radius {
                        return (xs, Termination::Escaped { radius: opts.escape_radius });
                    }
                }
                Err(e) if e.is_pole() => return (xs, Termination::Pole { step: n, detail: e.to_string() }),
                Err(e) => return (xs, Termination::DomainError { step: n, detail: e.to_string() }),
            }
        }
        (xs, Termination::Budget)
    }

    pub(crate) fn orbit(&self, init: &[f64], opts: IterateOptions, column: &str) -> Orbit {
        let (xs, reason) = self.run_traced(init, opts);
        Orbit { columns: vec![column.to_string()], rows: xs.into_iter().map(|x| vec![x]).collect(), reason }
    }
}

pub(crate) fn division(num: f64, den: f64, what: &str, at: f64) -> EvalResult {
    if den == 0.0 {
        Err(DomainError::new(DomainErrorKind::DivisionByZero, what, at))
    } else {
        Ok(num / den)
    }
}

/// How the limits of interleaved subsystems combine.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Combine {
    None,
    /// The product of the subsystem limits is `u*`.
    Product,
    /// The sum of the subsystem limits is `u*`.
    Sum,
}

/// A family rewritten as `stride` interleaved copies of one triangular
/// system: subsystem `i` started at `starts[i]` produces `x(i + stride m)`
/// as its first coordinate (or `ln x` when `log_coordinates`).
#[derive(Debug, Clone)]
pub struct Reduction {
    pub map: TriangularMap,
    pub starts: Vec<State>,
    pub stride: usize,
    /// The fiber the family's theory points at, when it does not depend on
    /// the start.
    pub u_star: Option<f64>,
    pub log_coordinates: bool,
    pub combine: Combine,
}

impl Reduction {
    pub(crate) fn single(map: TriangularMap, start: State, u_star: Option<f64>) -> Self {
        Reduction { map, starts: vec![start], stride: 1, u_star, log_coordinates: false, combine: Combine::None }
    }

    /// First `len` terms rebuilt by interleaving the subsystem orbits.
    pub fn interleave(&self, len: usize) -> Result<Vec<f64>, DomainError> {
        let mut out = vec![0.0; len];
        for (i, &start) in self.starts.iter().enumerate() {
            let mut s = start;
            let mut n = i;
            while n < len {
                out[n] = s[0];
                n += self.stride;
                if n < len {
                    s = self.map.step(s)?;
                }
            }
        }
        Ok(out)
    }
}

/// A planar map together with the fiber coordinate it preserves and the
/// induced 1-D map.
#[derive(Clone)]
pub struct PlanarSystem {
    pub map: PlanarMap,
    pub phi: ScalarFn,
    pub fiber: Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>,
}

/// Limit of the fiber map from `u0`, found by iterating until it stops
/// moving. Only works when the convergence is geometric.
pub fn settle_fiber(phi: &ScalarFn, u0: f64, budget: usize) -> Option<f64> {
    let mut u = u0;
    let mut close = None;
    for i in 0..budget {
        let v = phi.eval(u).ok()?;
        if !v.is_finite() {
            return None;
        }
        if v == u {
            return Some(v);
        }
        if (v - u).abs() < 1e-3 * TOL_ROOT * u.abs().max(1.0) {
            // A few more steps usually reach the exact fixed point.
            match close {
                None => close = Some(i),
                Some(start) if i - start >= 64 => return Some(snap_fixed(phi, v)),
                _ => {}
            }
        }
        u = v;
    }
    close.map(|_| snap_fixed(phi, u))
}

/// Replaces `u` by a nearby short decimal when that is an exact fixed point.
fn snap_fixed(phi: &ScalarFn, u: f64) -> f64 {
    let c = (u * 1e8).round() / 1e8;
    if c != u && phi.eval(c).ok() == Some(c) {
        c
    } else {
        u
    }
}

/// Classification of every subsystem of a reduction.
#[derive(Debug, Clone, Serialize)]
pub struct FamilyReport {
    pub family: String,
    pub u_star: f64,
    pub stride: usize,
    pub subsystems: Vec<LimitReport>,
    /// Product or sum of the subsystem limits, when they combine to `u*`.
    pub combined: Option<f64>,
    pub combine: Combine,
    pub analysis: serde_json::Value,
}

/// Reduces the family at `init` and estimates the limit of every subsystem
/// near `u_star` (the family default, or where the fiber map settles).
pub fn classify_family(
    name: &str,
    system: &dyn System,
    init: &[f64],
    u_star: Option<f64>,
    opts: &LimitOptions,
) -> Result<FamilyReport, FamilyError> {
    let red = system.reduce(init)?;
    let u0 = red.starts[0][1];
    let u_star = match u_star.or(red.u_star) {
        Some(u) => u,
        None => settle_fiber(&red.map.phi, u0, 100_000).ok_or(FamilyError::NoLimitFiber(u0))?,
    };
    let cert = auto_certificate(&red.map, u_star);
    let mut subsystems = Vec::with_capacity(red.starts.len());
    for &start in &red.starts {
        subsystems.push(estimate_limit(&red.map, start, u_star, cert.as_ref(), opts)?);
    }
    let limits: Option<Vec<f64>> = subsystems
        .iter()
        .map(|r| if r.regime == Regime::FixedPointFiber { r.limit } else { None })
        .collect();
    let combined = match (red.combine, limits) {
        (Combine::Product, Some(ls)) => Some(ls.iter().product()),
        (Combine::Sum, Some(ls)) => Some(ls.iter().sum()),
        _ => None,
    };
    Ok(FamilyReport {
        family: name.to_string(),
        u_star,
        stride: red.stride,
        subsystems,
        combined,
        combine: red.combine,
        analysis: system.analysis(init),
    })
}

pub(crate) fn triangular_orbit(map: &TriangularMap, init: &[f64], opts: IterateOptions) -> Result<Orbit, FamilyError> {
    expect_len(&names(&["x0", "u0"]), init)?;
    Ok(Orbit::from_trace(iterate(map, [init[0], init[1]], opts), ["x", "u"]))
}

/// `x^n` by repeated multiplication.
pub(crate) fn ipow(x: f64, n: u32) -> f64 {
    let mut r = 1.0;
    for _ in 0..n {
        r *= x;
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn registry_names_match_serde_tags() {
        for info in registry() {
            let mut obj = serde_json::Map::new();
            obj.insert("family".into(), json!(info.name));
            let err = Family::from_json(serde_json::Value::Object(obj)).unwrap_err().to_string();
            assert!(err.contains("missing field"), "{}: {err}", info.name);
        }
        assert_eq!(registry().len(), 15);
    }

    #[test]
    fn unknown_fields_rejected() {
        let f = Family::from_json(json!({"family": "bajo-liz", "a": -1, "b": 1})).unwrap();
        assert_eq!(f, Family::BajoLiz { a: -1.0, b: 1.0 });
        assert_eq!(f.name(), "bajo-liz");
        assert!(Family::from_json(json!({"family": "bajo-liz", "a": -1, "b": 1, "c": 2})).is_err());
        assert!(Family::from_json(json!({"family": "nope"})).is_err());
    }

    #[test]
    fn every_registry_entry_builds() {
        let samples = [
            json!({"family": "power-perturbation", "lambda": 0.5, "mu": 1, "a": 1, "j": 1, "l": 2}),
            json!({"family": "quasi-homogeneous", "alpha": 1, "beta": -1, "p": "0.5", "q": "0.5"}),
            json!({"family": "quasi-homogeneous-cubic", "d": 0.8}),
            json!({"family": "mobius", "a": 2, "b": 1}),
            json!({"family": "bajo-liz", "a": 0.5, "b": 1}),
            json!({"family": "multiplicative", "k": 3, "g": "-1"}),
            json!({"family": "additive", "b": 0.5, "g": "(u+1)/2"}),
            json!({"family": "linear-product", "a": 1, "lambda": 0.5}),
            json!({"family": "log-product", "lambda": 0.5}),
            json!({"family": "power-product", "a": -1, "b": 1, "alpha": 1, "lambda": 0.5}),
            json!({"family": "nonhyperbolic-product", "a": 1, "b": 1, "alpha": 2, "k": 2}),
            json!({"family": "third-order-mobius", "a": 1, "b": 0}),
            json!({"family": "log-multiplicative", "gamma": 1, "g": "1"}),
            json!({"family": "additive-order-k", "k": 1, "f": "-u/2"}),
            json!({"family": "additive-shift", "a": 0.5, "f": "-u/2"}),
        ];
        for s in samples {
            let f = Family::from_json(s.clone()).unwrap();
            let sys = f.build().unwrap_or_else(|e| panic!("{s}: {e}"));
            let init: Vec<f64> = (0..sys.initial_names().len()).map(|i| 0.25 + 0.5 * i as f64).collect();
            let orbit = sys.orbit(&init, IterateOptions { budget: 10, ..Default::default() }).unwrap();
            assert!(!orbit.rows.is_empty());
        }
        assert!(matches!(
            Family::from_json(json!({"family": "quasi-homogeneous", "alpha": 1, "beta": -1, "p": "w", "q": "1"}))
                .unwrap()
                .build(),
            Err(FamilyError::Parse { field: "p", .. })
        ));
    }

    #[test]
    fn orbit_csv() {
        let sys = Mobius::new(-1.0, 1.0).unwrap();
        let o = sys.orbit(&[3.0], IterateOptions { budget: 2, ..Default::default() }).unwrap();
        let mut buf = Vec::new();
        o.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "n,u\n0,3\n1,1.5\n2,3\n# reason=budget\n");
    }

    #[test]
    fn bajo_liz_classification_product() {
        let f = Family::BajoLiz { a: 0.5, b: 1.0 };
        let sys = f.build().unwrap();
        let r = classify_family(f.name(), sys.as_ref(), &[1.0, 2.0], None, &LimitOptions::default()).unwrap();
        assert_eq!(r.u_star, 0.5);
        assert_eq!(r.subsystems.len(), 2);
        assert!(r.subsystems.iter().all(|s| s.regime == Regime::FixedPointFiber));
        assert!((r.combined.unwrap() - 0.5).abs() < 1e-6);
    }

    #[test]
    fn settle_fiber_finds_attractor() {
        let g = ScalarFn::parse("(u+1)/2").unwrap();
        assert_eq!(settle_fiber(&g, 7.0, 1000), Some(1.0));
        assert_eq!(settle_fiber(&ScalarFn::parse("u+1").unwrap(), 0.0, 1000), None);
        assert_eq!(settle_fiber(&ScalarFn::parse("u/2").unwrap(), 1.0, 10_000), Some(0.0));
    }
}
