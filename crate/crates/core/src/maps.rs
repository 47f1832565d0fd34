//! Triangular and general planar maps, and orbit iteration.

use std::fmt;
use std::io::{self, Write};

use serde::Serialize;

use crate::expr::{DomainError, PlanarFn, ScalarFn};

/// A state of a planar system. For triangular maps the coordinates are
/// `(x, u)`; for general planar maps `(x, y)`.
pub type State = [f64; 2];

/// One step of a deterministic planar system.
pub trait PlanarStep: Send + Sync {
    fn step(&self, s: State) -> Result<State, DomainError>;
}

/// `(x, u) -> (f0(u) + f1(u) x, phi(u))`.
#[derive(Debug, Clone)]
pub struct TriangularMap {
    pub f0: ScalarFn,
    pub f1: ScalarFn,
    pub phi: ScalarFn,
}

impl TriangularMap {
    pub fn new(f0: ScalarFn, f1: ScalarFn, phi: ScalarFn) -> Self {
        TriangularMap { f0, f1, phi }
    }

    /// Parses the three components as expressions in `u`.
    pub fn parse(f0: &str, f1: &str, phi: &str) -> Result<Self, crate::expr::ParseError> {
        Ok(Self::new(ScalarFn::parse(f0)?, ScalarFn::parse(f1)?, ScalarFn::parse(phi)?))
    }

    /// Multiplicative system `x' = g(u) x`, `u' = phi(u)`.
    pub fn multiplicative(g: ScalarFn, phi: ScalarFn) -> Self {
        Self::new(ScalarFn::constant(0.0), g, phi)
    }

    /// The same system viewed two steps at a time. Stepping it is exactly
    /// two steps of `self`.
    pub fn two_step(&self) -> TwoStep {
        TwoStep { inner: self.clone() }
    }
}

impl PlanarStep for TriangularMap {
    fn step(&self, [x, u]: State) -> Result<State, DomainError> {
        let a = self.f0.eval(u)?;
        let b = self.f1.eval(u)?;
        let v = self.phi.eval(u)?;
        Ok([a + b * x, v])
    }
}

/// Second iterate of a triangular map, itself triangular with
/// `F0(u) = f0(phi(u)) + f1(phi(u)) f0(u)`, `F1(u) = f1(phi(u)) f1(u)`
/// and fiber map `phi∘phi`.
#[derive(Debug, Clone)]
pub struct TwoStep {
    inner: TriangularMap,
}

impl TwoStep {
    pub fn inner(&self) -> &TriangularMap {
        &self.inner
    }

    /// The reduced system written out in affine form. Agrees with
    /// [`PlanarStep::step`] up to rounding.
    pub fn as_triangular(&self) -> TriangularMap {
        let m = &self.inner;
        let f0_phi = m.f0.compose(&m.phi);
        let f1_phi = m.f1.compose(&m.phi);
        TriangularMap {
            f0: f0_phi.add(&f1_phi.mul(&m.f0)),
            f1: f1_phi.mul(&m.f1),
            phi: m.phi.iterate(2),
        }
    }
}

impl PlanarStep for TwoStep {
    fn step(&self, s: State) -> Result<State, DomainError> {
        self.inner.step(self.inner.step(s)?)
    }
}

/// `(x, y) -> (X(x, y), Y(x, y))` with no fiber structure assumed.
#[derive(Debug, Clone)]
pub struct PlanarMap {
    pub x: PlanarFn,
    pub y: PlanarFn,
}

impl PlanarMap {
    pub fn new(x: PlanarFn, y: PlanarFn) -> Self {
        PlanarMap { x, y }
    }

    pub fn parse(x: &str, y: &str) -> Result<Self, crate::expr::ParseError> {
        Ok(Self::new(PlanarFn::parse(x)?, PlanarFn::parse(y)?))
    }
}

impl PlanarStep for PlanarMap {
    fn step(&self, [x, y]: State) -> Result<State, DomainError> {
        Ok([self.x.eval(x, y)?, self.y.eval(x, y)?])
    }
}

impl<T: PlanarStep + ?Sized> PlanarStep for &T {
    fn step(&self, s: State) -> Result<State, DomainError> {
        (**self).step(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "reason", rename_all = "kebab-case")]
pub enum Termination {
    Budget,
    Escaped { radius: f64 },
    /// Evaluating the map at `states[step]` left the domain.
    DomainError { step: usize, detail: String },
    /// A pole was hit at `states[step]`: the start is outside the good set.
    Pole { step: usize, detail: String },
    Converged,
}

impl Termination {
    fn from_error(step: usize, e: &DomainError) -> Self {
        if e.is_pole() {
            Termination::Pole { step, detail: e.to_string() }
        } else {
            Termination::DomainError { step, detail: e.to_string() }
        }
    }
}

impl fmt::Display for Termination {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Termination::Budget => f.write_str("budget"),
            Termination::Escaped { radius } => write!(f, "escaped({radius})"),
            Termination::DomainError { step, .. } => write!(f, "domain-error({step})"),
            Termination::Pole { step, .. } => write!(f, "pole({step})"),
            Termination::Converged => f.write_str("converged"),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct IterateOptions {
    pub budget: usize,
    pub escape_radius: f64,
    /// Keep every state; otherwise only the start and the last state.
    pub record: bool,
}

impl Default for IterateOptions {
    fn default() -> Self {
        IterateOptions { budget: 1000, escape_radius: 1e6, record: true }
    }
}

#[derive(Debug, Clone)]
pub struct OrbitTrace {
    pub start: State,
    /// `states[0]` is the start. When not recording, holds the start and the
    /// final state only.
    pub states: Vec<State>,
    pub reason: Termination,
    pub steps: usize,
}

impl OrbitTrace {
    pub fn last(&self) -> State {
        *self.states.last().expect("trace holds at least the start")
    }

    /// `n,x,u` rows then a `# reason=...` line. Only meaningful for recorded traces.
    pub fn write_csv<W: Write>(&self, mut out: W, second: &str) -> io::Result<()> {
        writeln!(out, "n,x,{second}")?;
        for (n, [a, b]) in self.states.iter().enumerate() {
            writeln!(out, "{n},{a},{b}")?;
        }
        writeln!(out, "# reason={}", self.reason)
    }

    pub fn to_csv(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf, "u").expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("csv is ascii")
    }
}

fn escaped(s: State, radius: f64) -> bool {
    let m = s[0].abs() + s[1].abs();
    !m.is_finite() || m > radius
}

/// Iterates `map` from `start` until the budget is spent, `|x|+|u|` exceeds
/// the escape radius (non-finite states count as escaped), or a domain error
/// stops the orbit.
pub fn iterate<M: PlanarStep + ?Sized>(map: &M, start: State, opts: IterateOptions) -> OrbitTrace {
    let mut states = vec![start];
    let mut cur = start;
    if escaped(cur, opts.escape_radius) {
        return OrbitTrace {
            start,
            states,
            reason: Termination::Escaped { radius: opts.escape_radius },
            steps: 0,
        };
    }
    for n in 0..opts.budget {
        match map.step(cur) {
            Ok(next) => {
                cur = next;
                if opts.record {
                    states.push(cur);
                }
                if escaped(cur, opts.escape_radius) {
                    if !opts.record {
                        states.push(cur);
                    }
                    return OrbitTrace {
                        start,
                        states,
                        reason: Termination::Escaped { radius: opts.escape_radius },
                        steps: n + 1,
                    };
                }
            }
            Err(e) => {
                if !opts.record && n > 0 {
                    states.push(cur);
                }
                return OrbitTrace { start, states, reason: Termination::from_error(n, &e), steps: n };
            }
        }
    }
    if !opts.record && opts.budget > 0 {
        states.push(cur);
    }
    OrbitTrace { start, states, reason: Termination::Budget, steps: opts.budget }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn opts(budget: usize) -> IterateOptions {
        IterateOptions { budget, ..Default::default() }
    }

    #[test]
    fn identity_fiber_keeps_x() {
        let m = TriangularMap::parse("0", "1", "u/2").unwrap();
        let t = iterate(&m, [5.0, 1.0], opts(40));
        assert_eq!(t.reason, Termination::Budget);
        assert_eq!(t.states.len(), 41);
        for (n, s) in t.states.iter().enumerate() {
            assert_eq!(s[0], 5.0);
            assert_eq!(s[1], 0.5f64.powi(n as i32));
        }
    }

    #[test]
    fn power_perturbation_on_invariant_curve() {
        // x' = x + u x^2, u' = u/2 from (2, 1/2): u x stays 1
        let m = PlanarMap::parse("x + y*x^2", "y/2").unwrap();
        let t = iterate(&m, [2.0, 0.5], opts(10));
        assert_eq!(t.states[1], [4.0, 0.25]);
        for s in &t.states {
            assert_eq!(s[0] * s[1], 1.0);
        }
    }

    #[test]
    fn escape_and_domain_error() {
        let m = TriangularMap::parse("0", "2", "u").unwrap();
        let t = iterate(&m, [1.0, 0.0], IterateOptions { budget: 100, escape_radius: 1e3, record: true });
        assert_eq!(t.reason, Termination::Escaped { radius: 1e3 });
        assert_eq!(t.steps, 10);
        assert_eq!(t.last()[0], 1024.0);

        let m = TriangularMap::parse("0", "1/u", "u-1").unwrap();
        let t = iterate(&m, [1.0, 2.0], opts(10));
        assert!(matches!(t.reason, Termination::Pole { step: 2, .. }));
        assert_eq!(t.states.len(), 3);

        let m = TriangularMap::parse("ln(u)", "1", "u-1").unwrap();
        let t = iterate(&m, [1.0, 1.0], opts(10));
        assert!(matches!(t.reason, Termination::DomainError { step: 1, .. }));
    }

    #[test]
    fn non_finite_counts_as_escape() {
        let m = TriangularMap::parse("0", "exp(u)", "u*1000").unwrap();
        let t = iterate(&m, [1.0, 1.0], IterateOptions { budget: 10, escape_radius: f64::INFINITY, record: true });
        assert!(matches!(t.reason, Termination::Escaped { .. }));
    }

    #[test]
    fn last_state_only() {
        let m = TriangularMap::parse("1", "0.5", "u/2").unwrap();
        let full = iterate(&m, [0.0, 1.0], opts(50));
        let short = iterate(&m, [0.0, 1.0], IterateOptions { record: false, ..opts(50) });
        assert_eq!(short.states.len(), 2);
        assert_eq!(short.last(), full.last());
        assert_eq!(iterate(&m, [0.0, 1.0], opts(0)).states.len(), 1);
    }

    #[test]
    fn csv_format() {
        let m = TriangularMap::parse("0", "1", "u/2").unwrap();
        let csv = iterate(&m, [5.0, 1.0], opts(2)).to_csv();
        assert_eq!(csv, "n,x,u\n0,5,1\n1,5,0.5\n2,5,0.25\n# reason=budget\n");
    }

    #[test]
    fn two_step_affine_form_matches_composite() {
        let m = TriangularMap::parse("1+u", "-1+u^2", "u/2 + u^2/5").unwrap();
        let two = m.two_step();
        let affine = two.as_triangular();
        for &(x, u) in &[(0.3, 0.4), (-2.0, 0.1), (7.0, -0.6)] {
            let a = two.step([x, u]).unwrap();
            let b = affine.step([x, u]).unwrap();
            assert!((a[0] - b[0]).abs() <= 1e-12 * (1.0 + a[0].abs()));
            assert_eq!(a[1], b[1]);
        }
    }

    proptest! {
        #[test]
        fn trace_replays_bit_for_bit(x0 in -5.0f64..5.0, u0 in -1.0f64..1.0, c in -0.9f64..0.9) {
            let m = TriangularMap::new(
                ScalarFn::builtin("f0", move |u| c + u * u),
                ScalarFn::builtin("f1", move |u| c * u - 0.5),
                ScalarFn::builtin("phi", move |u| c * u + 0.1 * u * u),
            );
            let t = iterate(&m, [x0, u0], opts(200));
            prop_assert!(t.states.len() <= 201);
            for w in t.states.windows(2) {
                prop_assert_eq!(m.step(w[0]).unwrap(), w[1]);
            }
        }
    }
}
