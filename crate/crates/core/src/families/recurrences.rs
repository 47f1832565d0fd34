//! Scalar difference equations that reduce to triangular systems through a
//! product or sum of consecutive terms.

use serde::Serialize;
use serde_json::json;

use super::{division, expect_len, names, Combine, FamilyError, Orbit, Recurrence, Reduction, System};
use crate::expr::{DomainError, DomainErrorKind, ScalarFn};
use crate::maps::{IterateOptions, Termination, TriangularMap};

fn mobius_fixed_attractor(a: f64, b: f64) -> Option<f64> {
    if a.abs() > 1.0 || a == 1.0 {
        Some(0.0)
    } else if a.abs() < 1.0 {
        Some((1.0 - a) / b)
    } else {
        None
    }
}

/// `u' = u/(a + b u)`.
#[derive(Debug, Clone, Copy)]
pub struct Mobius {
    pub a: f64,
    pub b: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum MobiusCase {
    /// `|a| > 1`: good-set orbits other than the fixed point `(1-a)/b` tend to 0.
    AttractedToZero,
    /// `|a| < 1`: good-set orbits other than 0 tend to `(1-a)/b`.
    AttractedToNonzero,
    /// `a = -1`: every good-set orbit is 2-periodic.
    TwoPeriodic,
    /// `a = 1`: every good-set orbit tends to 0, like `1/n`.
    ParabolicToZero,
}

impl Mobius {
    pub fn new(a: f64, b: f64) -> Result<Self, FamilyError> {
        if b == 0.0 {
            return Err(FamilyError::Degenerate("b = 0 makes the map linear".into()));
        }
        Ok(Mobius { a, b })
    }

    pub fn phi(&self) -> ScalarFn {
        ScalarFn::mobius(self.a, self.b)
    }

    pub fn fixed_points(&self) -> [f64; 2] {
        [0.0, (1.0 - self.a) / self.b]
    }

    /// Derivatives `1/a` at 0 and `a` at `(1-a)/b`.
    pub fn multipliers(&self) -> [f64; 2] {
        [1.0 / self.a, self.a]
    }

    pub fn case(&self) -> MobiusCase {
        let a = self.a;
        if a == 1.0 {
            MobiusCase::ParabolicToZero
        } else if a == -1.0 {
            MobiusCase::TwoPeriodic
        } else if a.abs() > 1.0 {
            MobiusCase::AttractedToZero
        } else {
            MobiusCase::AttractedToNonzero
        }
    }

    /// The pole `-a/b`, excluded from the good set with all its preimages.
    pub fn pole(&self) -> f64 {
        -self.a / self.b
    }

    /// The pole followed by its first preimages `w -> a w/(1 - b w)`, stopping
    /// early when a preimage is at infinity.
    pub fn pole_preimages(&self, depth: usize) -> Vec<f64> {
        let mut out = vec![self.pole()];
        let mut w = self.pole();
        for _ in 0..depth {
            let den = 1.0 - self.b * w;
            if den == 0.0 {
                break;
            }
            w = self.a * w / den;
            out.push(w);
        }
        out
    }

    /// `u0/(1 + b u0 n)`, the orbit when `a = 1`.
    pub fn parabolic_orbit(&self, u0: f64, n: u32) -> Option<f64> {
        (self.a == 1.0).then(|| u0 / (1.0 + self.b * u0 * n as f64))
    }
}

impl System for Mobius {
    fn initial_names(&self) -> Vec<String> {
        names(&["u0"])
    }

    fn orbit(&self, init: &[f64], opts: IterateOptions) -> Result<Orbit, FamilyError> {
        expect_len(&self.initial_names(), init)?;
        let phi = self.phi();
        Ok(Recurrence::new(1, move |x| phi.eval(x[0])).orbit(init, opts, "u"))
    }

    fn analysis(&self, _init: &[f64]) -> serde_json::Value {
        json!({
            "fixed_points": self.fixed_points(),
            "multipliers": self.multipliers(),
            "case": self.case(),
            "pole": self.pole(),
            "pole_preimages": self.pole_preimages(8),
        })
    }
}

/// `x(n+2) = x(n)/(a + b x(n) x(n+1))`.
#[derive(Debug, Clone, Copy)]
pub struct BajoLiz {
    pub a: f64,
    pub b: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "outcome", rename_all = "kebab-case")]
pub enum BajoLizOutcome {
    AllZero,
    ConvergesToZero,
    /// Exactly 2-periodic from the start.
    TwoPeriodic,
    FourPeriodic,
    /// Even and odd terms converge to limits whose product is `product`.
    TwoPeriodicLimit { product: f64 },
    Unbounded,
}

impl BajoLiz {
    pub fn new(a: f64, b: f64) -> Result<Self, FamilyError> {
        if b == 0.0 {
            return Err(FamilyError::Degenerate("b = 0 decouples the equation".into()));
        }
        Ok(BajoLiz { a, b })
    }

    pub fn recurrence(&self) -> Recurrence {
        let (a, b) = (self.a, self.b);
        Recurrence::new(2, move |x| division(x[0], a + b * x[0] * x[1], "x(n)/(a + b x(n) x(n+1))", x[0] * x[1]))
    }

    pub fn mobius(&self) -> Mobius {
        Mobius { a: self.a, b: self.b }
    }

    /// The same equation as an order-2 multiplicative recurrence with
    /// `g(u) = 1/(a + b u)`.
    pub fn as_multiplicative(&self) -> MultiplicativeRecurrence {
        let (a, b) = (self.a, self.b);
        let g = ScalarFn::builtin_checked(format!("1/({a} + {b}*u)"), move |u| division(1.0, a + b * u, "1/(a + b u)", u));
        MultiplicativeRecurrence { k: 2, g }
    }

    /// `x(2m) = x0/(b x0 x1 - 1)^m`, `x(2m+1) = x1 (b x0 x1 - 1)^m`; only for `a = -1`.
    pub fn closed_form_minus_one(&self, x0: f64, x1: f64, n: u32) -> Option<f64> {
        if self.a != -1.0 {
            return None;
        }
        let r = self.b * x0 * x1 - 1.0;
        let m = (n / 2) as i32;
        Some(if n.is_multiple_of(2) { x0 / r.powi(m) } else { x1 * r.powi(m) })
    }

    /// `v0/(1 + 2 b v0 n)`: the product `x(2n) x(2n+1)` when `a = 1`.
    pub fn closed_form_product(&self, v0: f64, n: u32) -> Option<f64> {
        (self.a == 1.0).then(|| v0 / (1.0 + 2.0 * self.b * v0 * n as f64))
    }

    /// Expected long-run behavior from `(x0, x1)`, assuming the start lies
    /// in the good set.
    pub fn predict(&self, x0: f64, x1: f64) -> BajoLizOutcome {
        let (a, b) = (self.a, self.b);
        let u = x0 * x1;
        let u_star = (1.0 - a) / b;
        if x0 == 0.0 && x1 == 0.0 {
            return BajoLizOutcome::AllZero;
        }
        if a == -1.0 {
            return if u == 0.0 {
                BajoLizOutcome::FourPeriodic
            } else if u == u_star {
                BajoLizOutcome::TwoPeriodic
            } else {
                BajoLizOutcome::Unbounded
            };
        }
        if a == 1.0 {
            return if u == 0.0 { BajoLizOutcome::TwoPeriodic } else { BajoLizOutcome::ConvergesToZero };
        }
        if u == u_star {
            return BajoLizOutcome::TwoPeriodic;
        }
        if a.abs() > 1.0 {
            BajoLizOutcome::ConvergesToZero
        } else if u == 0.0 {
            BajoLizOutcome::Unbounded
        } else {
            BajoLizOutcome::TwoPeriodicLimit { product: u_star }
        }
    }

    /// Whether `u0 = x0 x1` avoids the pole of the Möbius map for `steps`
    /// iterations.
    pub fn in_good_set(&self, u0: f64, steps: usize) -> bool {
        let phi = self.mobius().phi();
        let mut u = u0;
        for _ in 0..steps {
            match phi.eval(u) {
                Ok(v) => u = v,
                Err(_) => return false,
            }
        }
        true
    }
}

impl System for BajoLiz {
    fn initial_names(&self) -> Vec<String> {
        names(&["x0", "x1"])
    }

    fn orbit(&self, init: &[f64], opts: IterateOptions) -> Result<Orbit, FamilyError> {
        expect_len(&self.initial_names(), init)?;
        Ok(self.recurrence().orbit(init, opts, "x"))
    }

    fn reduce(&self, init: &[f64]) -> Result<Reduction, FamilyError> {
        let mut r = self.as_multiplicative().reduce(init)?;
        r.u_star = mobius_fixed_attractor(self.a, self.b);
        Ok(r)
    }

    fn analysis(&self, init: &[f64]) -> serde_json::Value {
        json!({
            "u_star": (1.0 - self.a) / self.b,
            "mobius_case": self.mobius().case(),
            "prediction": (init.len() == 2).then(|| self.predict(init[0], init[1])),
        })
    }
}

/// `x(n+k) = x(n) g(x(n) x(n+1) ... x(n+k-1))`.
#[derive(Debug, Clone)]
pub struct MultiplicativeRecurrence {
    pub k: usize,
    pub g: ScalarFn,
}

/// Long-run behavior on an invariant product fiber.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "outcome", rename_all = "kebab-case")]
pub enum FiberOutcome {
    Periodic { period: usize },
    ToZero,
    Unbounded,
    Undetermined,
}

fn product(xs: &[f64]) -> f64 {
    xs.iter().fold(1.0, |p, &x| p * x)
}

impl MultiplicativeRecurrence {
    pub fn new(k: usize, g: ScalarFn) -> Result<Self, FamilyError> {
        if k < 2 {
            return Err(FamilyError::Degenerate("order k must be at least 2".into()));
        }
        Ok(MultiplicativeRecurrence { k, g })
    }

    pub fn recurrence(&self) -> Recurrence {
        let g = self.g.clone();
        Recurrence::new(self.k, move |x| Ok(x[0] * g.eval(product(x))?))
    }

    /// `phi(v) = v g(v)`, the map of the product of `k` consecutive terms.
    pub fn phi(&self) -> ScalarFn {
        let g = self.g.clone();
        ScalarFn::builtin_checked(format!("u*({})", self.g), move |v| Ok(v * g.eval(v)?))
    }

    /// Starts with a zero product: decided by `g(0)`.
    pub fn zero_fiber_outcome(&self) -> Result<FiberOutcome, DomainError> {
        let g0 = self.g.eval(0.0)?;
        Ok(if g0 == -1.0 {
            FiberOutcome::Periodic { period: 2 * self.k }
        } else if g0 == 1.0 {
            FiberOutcome::Periodic { period: self.k }
        } else if g0.abs() < 1.0 {
            FiberOutcome::ToZero
        } else {
            FiberOutcome::Unbounded
        })
    }
}

impl System for MultiplicativeRecurrence {
    fn initial_names(&self) -> Vec<String> {
        (0..self.k).map(|i| format!("x{i}")).collect()
    }

    fn orbit(&self, init: &[f64], opts: IterateOptions) -> Result<Orbit, FamilyError> {
        expect_len(&self.initial_names(), init)?;
        Ok(self.recurrence().orbit(init, opts, "x"))
    }

    /// `k` subsystems `z' = g(v) z`, `v' = phi^k(v)` started at
    /// `(x_i, x_i ... x_{i+k-1})`.
    fn reduce(&self, init: &[f64]) -> Result<Reduction, FamilyError> {
        expect_len(&self.initial_names(), init)?;
        let k = self.k;
        let xs = leading_terms(&self.recurrence(), init, k - 1)?;
        let starts = (0..k).map(|i| [xs[i], product(&xs[i..i + k])]).collect();
        Ok(Reduction {
            map: TriangularMap::multiplicative(self.g.clone(), self.phi().iterate(k)),
            starts,
            stride: k,
            u_star: None,
            log_coordinates: false,
            combine: Combine::Product,
        })
    }

    fn analysis(&self, init: &[f64]) -> serde_json::Value {
        let zero = init.len() == self.k && product(init) == 0.0;
        json!({
            "zero_product_start": zero,
            "zero_fiber_outcome": self.zero_fiber_outcome().ok(),
        })
    }
}

/// `init` followed by `extra` more terms; a pole among them means the
/// start is outside the good set.
fn leading_terms(rec: &Recurrence, init: &[f64], extra: usize) -> Result<Vec<f64>, FamilyError> {
    let opts = IterateOptions { budget: extra, escape_radius: f64::INFINITY, record: true };
    let (xs, reason) = rec.run_traced(init, opts);
    match reason {
        Termination::Pole { detail, .. } | Termination::DomainError { detail, .. } => Err(FamilyError::OutsideGoodSet(
            DomainError::new(DomainErrorKind::Other, detail, xs.last().copied().unwrap_or(f64::NAN)),
        )),
        _ if xs.len() < init.len() + extra => {
            Err(FamilyError::Degenerate("the leading terms overflowed".into()))
        }
        _ => Ok(xs),
    }
}

/// `x(n+2) = -b x(n+1) + g(x(n+1) + b x(n))`.
#[derive(Debug, Clone)]
pub struct AdditiveRecurrence {
    pub b: f64,
    pub g: ScalarFn,
}

impl AdditiveRecurrence {
    pub fn new(b: f64, g: ScalarFn) -> Self {
        AdditiveRecurrence { b, g }
    }

    pub fn recurrence(&self) -> Recurrence {
        let (b, g) = (self.b, self.g.clone());
        Recurrence::new(2, move |x| Ok(-b * x[1] + g.eval(x[1] + b * x[0])?))
    }

    /// `x' = u - b x`, `u' = g(u)`.
    pub fn map(&self) -> TriangularMap {
        TriangularMap::new(ScalarFn::identity(), ScalarFn::constant(-self.b), self.g.clone())
    }

    /// Outcome for starts in the basin of the attracting fixed point `u_star`
    /// of `g` (or, for the unbounded cases, on its fiber).
    pub fn predict(&self, u_star: f64) -> AdditiveOutcome {
        let b = self.b;
        if b.abs() < 1.0 {
            AdditiveOutcome::Limit { value: u_star / (1.0 + b) }
        } else if b == 1.0 {
            AdditiveOutcome::TwoPeriodicLimit { sum: u_star }
        } else if b == -1.0 && u_star == 0.0 {
            AdditiveOutcome::FixedLimit
        } else {
            AdditiveOutcome::Unbounded
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "outcome", rename_all = "kebab-case")]
pub enum AdditiveOutcome {
    Limit { value: f64 },
    /// Even and odd terms converge, and their limits add up to `sum`.
    TwoPeriodicLimit { sum: f64 },
    /// Converges to a limit that depends on the start.
    FixedLimit,
    Unbounded,
}

impl System for AdditiveRecurrence {
    fn initial_names(&self) -> Vec<String> {
        names(&["x0", "x1"])
    }

    fn orbit(&self, init: &[f64], opts: IterateOptions) -> Result<Orbit, FamilyError> {
        expect_len(&self.initial_names(), init)?;
        Ok(self.recurrence().orbit(init, opts, "x"))
    }

    fn reduce(&self, init: &[f64]) -> Result<Reduction, FamilyError> {
        expect_len(&self.initial_names(), init)?;
        Ok(Reduction::single(self.map(), [init[0], init[1] + self.b * init[0]], None))
    }

    fn analysis(&self, init: &[f64]) -> serde_json::Value {
        let u0 = (init.len() == 2).then(|| init[1] + self.b * init[0]);
        let u_star = u0.and_then(|u0| super::settle_fiber(&self.g, u0, 100_000));
        json!({ "u0": u0, "u_star": u_star, "prediction": u_star.map(|u| self.predict(u)) })
    }
}

/// `x(n+2) = a x(n) + (1 - a) x(n+1) + f(x(n+1) + a x(n))`.
#[derive(Debug, Clone)]
pub struct AdditiveShift {
    pub a: f64,
    pub f: ScalarFn,
}

impl AdditiveShift {
    pub fn new(a: f64, f: ScalarFn) -> Self {
        AdditiveShift { a, f }
    }

    pub fn recurrence(&self) -> Recurrence {
        let (a, f) = (self.a, self.f.clone());
        Recurrence::new(2, move |x| Ok(a * x[0] + (1.0 - a) * x[1] + f.eval(x[1] + a * x[0])?))
    }

    pub fn phi(&self) -> ScalarFn {
        let f = self.f.clone();
        ScalarFn::builtin_checked(format!("u + {}", self.f), move |u| Ok(u + f.eval(u)?))
    }

    /// `x' = u - a x`, `u' = u + f(u)`.
    pub fn map(&self) -> TriangularMap {
        TriangularMap::new(ScalarFn::identity(), ScalarFn::constant(-self.a), self.phi())
    }
}

impl System for AdditiveShift {
    fn initial_names(&self) -> Vec<String> {
        names(&["x0", "x1"])
    }

    fn orbit(&self, init: &[f64], opts: IterateOptions) -> Result<Orbit, FamilyError> {
        expect_len(&self.initial_names(), init)?;
        Ok(self.recurrence().orbit(init, opts, "x"))
    }

    fn reduce(&self, init: &[f64]) -> Result<Reduction, FamilyError> {
        expect_len(&self.initial_names(), init)?;
        Ok(Reduction::single(self.map(), [init[0], init[1] + self.a * init[0]], None))
    }
}

/// `x(n+k) = x(n) + f(x(n) + ... + x(n+k-1))`.
#[derive(Debug, Clone)]
pub struct AdditiveOrderK {
    pub k: usize,
    pub f: ScalarFn,
}

fn sum(xs: &[f64]) -> f64 {
    xs.iter().fold(0.0, |s, &x| s + x)
}

impl AdditiveOrderK {
    pub fn new(k: usize, f: ScalarFn) -> Result<Self, FamilyError> {
        if k == 0 {
            return Err(FamilyError::Degenerate("order k must be at least 1".into()));
        }
        Ok(AdditiveOrderK { k, f })
    }

    pub fn recurrence(&self) -> Recurrence {
        let f = self.f.clone();
        Recurrence::new(self.k, move |x| Ok(x[0] + f.eval(sum(x))?))
    }

    /// `phi(v) = v + f(v)`, the map of the sum of `k` consecutive terms.
    pub fn phi(&self) -> ScalarFn {
        let f = self.f.clone();
        ScalarFn::builtin_checked(format!("u + {}", self.f), move |u| Ok(u + f.eval(u)?))
    }
}

impl System for AdditiveOrderK {
    fn initial_names(&self) -> Vec<String> {
        (0..self.k).map(|i| format!("x{i}")).collect()
    }

    fn orbit(&self, init: &[f64], opts: IterateOptions) -> Result<Orbit, FamilyError> {
        expect_len(&self.initial_names(), init)?;
        Ok(self.recurrence().orbit(init, opts, "x"))
    }

    /// `k` subsystems `z' = z + f(v)`, `v' = phi^k(v)`.
    fn reduce(&self, init: &[f64]) -> Result<Reduction, FamilyError> {
        expect_len(&self.initial_names(), init)?;
        let k = self.k;
        let xs = leading_terms(&self.recurrence(), init, k - 1)?;
        let starts = (0..k).map(|i| [xs[i], sum(&xs[i..i + k])]).collect();
        Ok(Reduction {
            map: TriangularMap::new(self.f.clone(), ScalarFn::constant(1.0), self.phi().iterate(k)),
            starts,
            stride: k,
            u_star: None,
            log_coordinates: false,
            combine: Combine::Sum,
        })
    }
}

/// `x(n+3) = x(n+2) x(n) / (x(n+1) (a + b x(n+2) x(n)))`. The product
/// `u(n) = x(n) x(n+2)` follows `u' = u/(a + b u)`.
#[derive(Debug, Clone, Copy)]
pub struct ThirdOrderMobius {
    pub a: f64,
    pub b: f64,
}

impl ThirdOrderMobius {
    pub fn new(a: f64, b: f64) -> Self {
        ThirdOrderMobius { a, b }
    }

    pub fn recurrence(&self) -> Recurrence {
        let (a, b) = (self.a, self.b);
        Recurrence::new(3, move |x| {
            let u = x[2] * x[0];
            division(u, x[1] * (a + b * u), "x(n+2) x(n)/(x(n+1) (a + b x(n+2) x(n)))", u)
        })
    }

    /// `v/(a^2 + b (1 + a) v)`: two steps of the product map, which governs
    /// the pairs `y(n+1) y(n) = v(n)` with `y(n) = x(2n + i)`.
    pub fn mobius_squared(&self) -> ScalarFn {
        let (a, b) = (self.a, self.b);
        ScalarFn::builtin_checked(format!("u/({} + {}*u)", a * a, b * (1.0 + a)), move |v| {
            division(v, a * a + b * (1.0 + a) * v, "v/(a^2 + b(1 + a) v)", v)
        })
    }
}

impl System for ThirdOrderMobius {
    fn initial_names(&self) -> Vec<String> {
        names(&["x0", "x1", "x2"])
    }

    fn orbit(&self, init: &[f64], opts: IterateOptions) -> Result<Orbit, FamilyError> {
        expect_len(&self.initial_names(), init)?;
        Ok(self.recurrence().orbit(init, opts, "x"))
    }

    /// Four subsystems `z' = z/(a^2 + b (1 + a) v)`, `v' = phi^4(v)` started
    /// at `(x_i, x_i x_{i+2})`, `i = 0..3`.
    fn reduce(&self, init: &[f64]) -> Result<Reduction, FamilyError> {
        expect_len(&self.initial_names(), init)?;
        let xs = leading_terms(&self.recurrence(), init, 3)?;
        let (a, b) = (self.a, self.b);
        let f1 = ScalarFn::builtin_checked(format!("1/({} + {}*u)", a * a, b * (1.0 + a)), move |v| {
            division(1.0, a * a + b * (1.0 + a) * v, "1/(a^2 + b(1 + a) v)", v)
        });
        let sq = self.mobius_squared();
        Ok(Reduction {
            map: TriangularMap::multiplicative(f1, sq.compose(&sq)),
            starts: (0..4).map(|i| [xs[i], xs[i] * xs[i + 2]]).collect(),
            stride: 4,
            u_star: mobius_fixed_attractor(a, b),
            log_coordinates: false,
            combine: Combine::None,
        })
    }
}

/// `x(n+2) = x(n)^gamma g(x(n+1) x(n)^gamma) / x(n+1)^(gamma - 1)` on
/// positive states.
#[derive(Debug, Clone)]
pub struct LogMultiplicative {
    pub gamma: f64,
    pub g: ScalarFn,
}

impl LogMultiplicative {
    pub fn new(gamma: f64, g: ScalarFn) -> Self {
        LogMultiplicative { gamma, g }
    }

    pub fn recurrence(&self) -> Recurrence {
        let (gamma, g) = (self.gamma, self.g.clone());
        Recurrence::new(2, move |x| {
            if x[0] <= 0.0 || x[1] <= 0.0 {
                return Err(DomainError::new(DomainErrorKind::Other, "positive states", x[0].min(x[1])));
            }
            let xg = x[0].powf(gamma);
            Ok(xg * g.eval(x[1] * xg)? / x[1].powf(gamma - 1.0))
        })
    }

    /// `y' = ln u - gamma y`, `u' = u g(u)` with `y = ln x`.
    pub fn map(&self) -> TriangularMap {
        let ln = ScalarFn::builtin_checked("ln(u)", |u| {
            if u > 0.0 {
                Ok(u.ln())
            } else {
                Err(DomainError::new(DomainErrorKind::LogNonPositive, "ln(u)", u))
            }
        });
        let g = self.g.clone();
        let phi = ScalarFn::builtin_checked(format!("u*({})", self.g), move |u| Ok(u * g.eval(u)?));
        TriangularMap::new(ln, ScalarFn::constant(-self.gamma), phi)
    }
}

impl System for LogMultiplicative {
    fn initial_names(&self) -> Vec<String> {
        names(&["x0", "x1"])
    }

    fn orbit(&self, init: &[f64], opts: IterateOptions) -> Result<Orbit, FamilyError> {
        expect_len(&self.initial_names(), init)?;
        if let Some(&x) = init.iter().find(|&&x| !(x > 0.0)) {
            return Err(FamilyError::NonPositive(x));
        }
        Ok(self.recurrence().orbit(init, opts, "x"))
    }

    /// One subsystem in `(ln x, x1 x0^gamma)`; its first coordinate is `ln x(n)`.
    fn reduce(&self, init: &[f64]) -> Result<Reduction, FamilyError> {
        expect_len(&self.initial_names(), init)?;
        if let Some(&x) = init.iter().find(|&&x| !(x > 0.0)) {
            return Err(FamilyError::NonPositive(x));
        }
        let mut r = Reduction::single(self.map(), [init[0].ln(), init[1] * init[0].powf(self.gamma)], None);
        r.log_coordinates = true;
        Ok(r)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classify::{classify_regime, estimate_limit, LimitOptions, Regime};
    use crate::maps::iterate;
    use proptest::prelude::*;

    fn opts(n: usize) -> IterateOptions {
        IterateOptions { budget: n, escape_radius: 1e300, record: true }
    }

    #[test]
    fn mobius_cases() {
        let m = Mobius::new(2.0, 1.0).unwrap();
        assert_eq!(m.case(), MobiusCase::AttractedToZero);
        assert_eq!(m.fixed_points(), [0.0, -1.0]);
        let xs = Recurrence::new(1, move |x| m.phi().eval(x[0])).run(&[5.0], opts(200));
        assert!(xs.last().unwrap().abs() < 1e-12);

        let p = Mobius::new(-1.0, 1.0).unwrap();
        let o = p.orbit(&[3.0], opts(2)).unwrap();
        assert_eq!(o.rows, vec![vec![3.0], vec![1.5], vec![3.0]]);
        assert_eq!(p.case(), MobiusCase::TwoPeriodic);

        let q = Mobius::new(1.0, 2.0).unwrap();
        let o = q.orbit(&[1.0], opts(5)).unwrap();
        for (n, row) in o.rows.iter().enumerate() {
            let exact = 1.0 / (1.0 + 2.0 * n as f64);
            assert!((row[0] - exact).abs() <= 1e-15);
            assert_eq!(q.parabolic_orbit(1.0, n as u32), Some(exact));
        }
        assert!(Mobius::new(1.0, 0.0).is_err());
    }

    #[test]
    fn pole_preimages_hit_the_pole() {
        let m = Mobius::new(2.0, 1.0).unwrap();
        let pre = m.pole_preimages(4);
        assert_eq!(pre[0], -2.0);
        let phi = m.phi();
        for w in pre.windows(2) {
            assert!((phi.eval(w[1]).unwrap() - w[0]).abs() < 1e-12);
        }
        let exact = Mobius::new(3.0, 1.0).unwrap();
        assert_eq!(exact.pole_preimages(1), vec![-3.0, -2.25]);
        let o = exact.orbit(&[-2.25], opts(10)).unwrap();
        assert!(matches!(o.reason, Termination::Pole { step: 2, .. }));
    }

    #[test]
    fn bajo_liz_examples() {
        let m = BajoLiz::new(-1.0, 1.0).unwrap();
        let xs = m.recurrence().run(&[1.0, 3.0], opts(4));
        assert_eq!(xs[2], 0.5);
        assert_eq!(xs[4], 0.25);
        assert_eq!(m.closed_form_minus_one(1.0, 3.0, 4), Some(0.25));

        let one = BajoLiz::new(1.0, 1.0).unwrap();
        assert_eq!(one.closed_form_product(1.0, 3), Some(1.0 / 7.0));
        let xs = one.recurrence().run(&[1.0, 1.0], opts(7));
        assert!((xs[6] * xs[7] - 1.0 / 7.0).abs() < 1e-15);

        let two = BajoLiz::new(2.0, 1.0).unwrap();
        assert_eq!(two.predict(1.0, -1.0), BajoLizOutcome::TwoPeriodic);
        let xs = two.recurrence().run(&[1.0, -1.0], opts(10));
        for n in 2..xs.len() {
            assert_eq!(xs[n], xs[n - 2]);
        }
    }

    #[test]
    fn bajo_liz_reduction_is_the_two_step_system() {
        let m = BajoLiz::new(0.5, 1.0).unwrap();
        let r = m.reduce(&[1.0, 2.0]).unwrap();
        assert_eq!(r.stride, 2);
        assert_eq!(r.u_star, Some(0.5));
        for v in [0.3, 1.0, 2.0] {
            let expect = v / (0.25 + 1.5 * v);
            assert!((r.map.phi.eval(v).unwrap() - expect).abs() < 1e-15);
            assert_eq!(r.map.f1.eval(v).unwrap(), 1.0 / (0.5 + v));
        }
        assert_eq!(classify_regime(&r.map, 0.5).unwrap(), Regime::FixedPointFiber);
    }

    #[test]
    fn zero_product_periods() {
        let m = MultiplicativeRecurrence::new(3, ScalarFn::constant(-1.0)).unwrap();
        let xs = m.recurrence().run(&[0.0, 1.0, 2.0], opts(12));
        assert_eq!(&xs[..7], &[0.0, 1.0, 2.0, 0.0, -1.0, -2.0, 0.0]);
        for n in 6..xs.len() {
            assert_eq!(xs[n], xs[n - 6]);
        }
        assert_eq!(m.zero_fiber_outcome().unwrap(), FiberOutcome::Periodic { period: 6 });
        let zeros = m.recurrence().run(&[0.0, 0.0, 0.0], opts(10));
        assert!(zeros.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn additive_limits() {
        let g = ScalarFn::parse("(u+1)/2").unwrap();
        let m = AdditiveRecurrence::new(0.5, g.clone());
        assert_eq!(m.predict(1.0), AdditiveOutcome::Limit { value: 2.0 / 3.0 });
        let xs = m.recurrence().run(&[0.0, 0.7], opts(500));
        assert!((xs[500] - 2.0 / 3.0).abs() < 1e-12);
        let r = m.reduce(&[0.0, 0.7]).unwrap();
        let rep = estimate_limit(&r.map, r.starts[0], 1.0, None, &LimitOptions::default()).unwrap();
        assert_eq!(rep.limit, Some(1.0 / 1.5));

        let periodic = AdditiveRecurrence::new(1.0, ScalarFn::parse("u/2").unwrap());
        assert_eq!(periodic.predict(0.0), AdditiveOutcome::TwoPeriodicLimit { sum: 0.0 });
        let xs = periodic.recurrence().run(&[3.0, -3.0], opts(200));
        assert!((xs[200] + xs[199]).abs() < 1e-12);

        let shifted = AdditiveRecurrence::new(-1.0, g);
        assert_eq!(shifted.predict(1.0), AdditiveOutcome::Unbounded);
        // On the fiber u = 1 the terms grow by 1 per step.
        let (xs, reason) =
            shifted.recurrence().run_traced(&[0.0, 1.0], IterateOptions { budget: 2_000_000, escape_radius: 1e6, record: true });
        assert!(matches!(reason, Termination::Escaped { .. }));
        assert!(xs.last().unwrap().abs() > 1e6);
    }

    #[test]
    fn third_order_degenerate_identity() {
        let m = ThirdOrderMobius::new(1.0, 0.0);
        let xs = m.recurrence().run(&[1.0, 2.0, 3.0], opts(3));
        assert_eq!(xs[3], 3.0 * 1.0 / 2.0);
        assert_eq!(m.mobius_squared().eval(0.7).unwrap(), 0.7);
        let r = m.reduce(&[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(r.map.phi.eval(0.7).unwrap(), 0.7);
    }

    #[test]
    fn third_order_reduction_interleaves() {
        let m = ThirdOrderMobius::new(2.0, 1.0);
        let init = [0.5, 1.25, 0.75];
        let raw = m.recurrence().run(&init, opts(37));
        let red = m.reduce(&init).unwrap().interleave(40).unwrap();
        for (a, b) in raw.iter().zip(&red) {
            assert!((a - b).abs() <= 1e-12 * a.abs().max(1e-300), "{a} vs {b}");
        }
    }

    #[test]
    fn log_multiplicative_two_periodic_fiber() {
        let m = LogMultiplicative::new(1.0, ScalarFn::constant(1.0));
        let r = m.reduce(&[1.0, std::f64::consts::E]).unwrap();
        assert!(r.log_coordinates);
        assert_eq!(classify_regime(&r.map, r.starts[0][1]).unwrap(), Regime::TwoPeriodicFiber);
        assert!(matches!(m.orbit(&[-1.0, 2.0], opts(3)), Err(FamilyError::NonPositive(_))));
        let raw = m.recurrence().run(&[2.0, 3.0], opts(20));
        let r = m.reduce(&[2.0, 3.0]).unwrap();
        let ys = r.interleave(21).unwrap();
        for (x, y) in raw.iter().zip(&ys) {
            assert!((x.ln() - y).abs() < 1e-12);
        }
    }

    #[test]
    fn additive_order_k_one_converges() {
        let m = AdditiveOrderK::new(1, ScalarFn::parse("-u/2").unwrap()).unwrap();
        let xs = m.recurrence().run(&[4.0], opts(100));
        assert!(xs[100].abs() < 1e-20);
        let r = m.reduce(&[4.0]).unwrap();
        assert_eq!(classify_regime(&r.map, 0.0).unwrap(), Regime::FixedPointFiber);
    }

    #[test]
    fn additive_shift_regime_a() {
        let m = AdditiveShift::new(0.5, ScalarFn::parse("-u/2").unwrap());
        let r = m.reduce(&[1.0, 2.0]).unwrap();
        assert_eq!(classify_regime(&r.map, 0.0).unwrap(), Regime::GlobalAttractor);
        let rep = estimate_limit(&r.map, r.starts[0], 0.0, None, &LimitOptions::default()).unwrap();
        assert_eq!(rep.limit, Some(0.0));
        let xs = m.recurrence().run(&[1.0, 2.0], opts(200));
        assert!(xs[200].abs() < 1e-12);
    }

    fn dyadic_g() -> impl Strategy<Value = ScalarFn> {
        prop::sample::select(vec![0usize, 1, 2]).prop_map(|which| match which {
            0 => ScalarFn::builtin("sgn", |u: f64| if u > 0.0 { 0.5 } else { -2.0 }),
            1 => ScalarFn::builtin("step", |u: f64| if u.abs() > 1.0 { 0.5 } else { -1.0 }),
            _ => ScalarFn::builtin("tri", |u: f64| if u < -1.0 { 2.0 } else if u < 1.0 { -0.5 } else { 1.0 }),
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]

        #[test]
        fn multiplicative_reduction_reproduces_raw(k in 2usize..=4, g in dyadic_g(), xs in prop::collection::vec(-8i32..8, 4)) {
            let m = MultiplicativeRecurrence::new(k, g).unwrap();
            let init: Vec<f64> = xs[..k].iter().map(|&x| x as f64 / 4.0).collect();
            let raw = m.recurrence().run(&init, opts(60 - k));
            let red = m.reduce(&init).unwrap().interleave(60).unwrap();
            prop_assert_eq!(raw, red);
        }

        #[test]
        fn additive_fiber_coordinate_matches(b in prop::sample::select(vec![0.5, -0.5, 1.0, -1.0, 0.25]), x0 in -16i32..16, x1 in -16i32..16) {
            let m = AdditiveRecurrence::new(b, ScalarFn::parse("(u+1)/2").unwrap());
            let init = [x0 as f64 / 4.0, x1 as f64 / 4.0];
            let raw = m.recurrence().run(&init, opts(40));
            let r = m.reduce(&init).unwrap();
            let t = iterate(&r.map, r.starts[0], opts(40));
            for n in 0..40 {
                prop_assert_eq!(t.states[n][1], raw[n + 1] + b * raw[n]);
            }
        }
    }
}
