//! Limit regimes near an attracting fiber `{u = u*}` and limit estimation.
//!
//! * A: `|f1(u*)| < 1`. Every orbit in the basin tends to
//!   `(f0(u*) / (1 - f1(u*)), u*)`.
//! * B: `f1(u*) = 1`, `f0(u*) = 0`. The fiber is filled with fixed points;
//!   the limit depends on the start.
//! * C: `f1(u*) = -1`. The fiber is filled with 2-cycles; even and odd
//!   subsequences converge to `l` and `f0(u*) - l`.
//! * `f1(u*) = 1` with `f0(u*) != 0`: there are unbounded orbits.
//! * `|f1(u*)| > 1`: not decided here.

use serde::Serialize;
use thiserror::Error;

use crate::expr::DomainError;
use crate::fecld::{
    cauchy_tail_bound, check_certificate, hyperbolic_envelope, FecldCertificate, FecldError, Verdict,
};
use crate::fixed::{local_contractivity, Contractivity, TOL_H, TOL_ROOT};
use crate::maps::{iterate, IterateOptions, PlanarStep, State, Termination, TriangularMap};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Regime {
    #[serde(rename = "A-global-attractor")]
    GlobalAttractor,
    #[serde(rename = "B-fixed-point-fiber")]
    FixedPointFiber,
    #[serde(rename = "C-two-periodic-fiber")]
    TwoPeriodicFiber,
    #[serde(rename = "unbounded")]
    Unbounded,
    #[serde(rename = "undecided")]
    Undecided,
}

#[derive(Debug, Error)]
pub enum ClassifyError {
    #[error("u* = {u_star} is not a fixed point of phi (|phi(u*) - u*| = {residual})")]
    NotAFixedPoint { u_star: f64, residual: f64 },
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error(transparent)]
    Certificate(#[from] FecldError),
}

/// Regime of the fiber `{u = u_star}`.
pub fn classify_regime(map: &TriangularMap, u_star: f64) -> Result<Regime, ClassifyError> {
    let residual = (map.phi.eval(u_star)? - u_star).abs();
    if !(residual < TOL_ROOT) {
        return Err(ClassifyError::NotAFixedPoint { u_star, residual });
    }
    let f0 = map.f0.eval(u_star)?;
    let f1 = map.f1.eval(u_star)?;
    Ok(if f1.abs() < 1.0 - TOL_H {
        Regime::GlobalAttractor
    } else if (f1 - 1.0).abs() <= TOL_H {
        if f0.abs() <= TOL_H {
            Regime::FixedPointFiber
        } else {
            Regime::Unbounded
        }
    } else if (f1 + 1.0).abs() <= TOL_H {
        Regime::TwoPeriodicFiber
    } else {
        Regime::Undecided
    })
}

#[derive(Debug, Clone, Copy)]
pub struct LimitOptions {
    pub tol: f64,
    pub budget: usize,
    pub escape_radius: f64,
    /// Consecutive steps within `tol` for the heuristic stopping rule.
    pub window: usize,
}

impl Default for LimitOptions {
    fn default() -> Self {
        LimitOptions { tol: 1e-9, budget: 1_000_000, escape_radius: 1e6, window: 64 }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct LimitReport {
    pub regime: Regime,
    pub u_star: f64,
    pub limit: Option<f64>,
    pub limit_even: Option<f64>,
    pub limit_odd: Option<f64>,
    pub error_bound: Option<f64>,
    /// The error bound comes from a certificate's tail rule rather than the
    /// heuristic window test.
    pub rigorous: bool,
    pub iterations: usize,
    pub note: String,
}

impl LimitReport {
    fn bare(regime: Regime, u_star: f64, iterations: usize, note: impl Into<String>) -> Self {
        LimitReport {
            regime,
            u_star,
            limit: None,
            limit_even: None,
            limit_odd: None,
            error_bound: None,
            rigorous: false,
            iterations,
            note: note.into(),
        }
    }
}

/// Outcome of following one orbit that should settle on a fixed point of
/// the fiber.
enum Settle {
    Limit { value: f64, error: f64, rigorous: bool, iterations: usize, note: String },
    Stopped { regime: Regime, iterations: usize, note: String },
}

fn stop_for(reason: &Termination, iterations: usize) -> Settle {
    match reason {
        Termination::Escaped { radius } => Settle::Stopped {
            regime: Regime::Unbounded,
            iterations,
            note: format!("|x|+|u| exceeded {radius} at step {iterations}"),
        },
        Termination::DomainError { step, detail } | Termination::Pole { step, detail } => Settle::Stopped {
            regime: Regime::Undecided,
            iterations,
            note: format!("domain error at step {step}: {detail}"),
        },
        _ => Settle::Stopped { regime: Regime::Undecided, iterations, note: "budget exhausted".into() },
    }
}

/// Follows an orbit of `step` (a map whose fiber `{u*}` consists of fixed
/// points) until the certificate tail bound or the heuristic window test
/// drops below `tol`. `exact_fiber` records whether `f0(u*) = 0` and
/// `f1(u*) = 1` hold exactly, which the rigorous bound needs.
fn settle<M: PlanarStep + ?Sized>(
    step: &M,
    start: State,
    u_star: f64,
    cert: Option<&FecldCertificate>,
    exact_fiber: bool,
    opts: &LimitOptions,
) -> Settle {
    let one = IterateOptions { budget: 1, escape_radius: opts.escape_radius, record: false };
    let mut s = start;
    let mut n = 0usize;
    let mut note = String::new();

    if let Some(cert) = cert.filter(|c| c.has_tails()) {
        let p0 = cert.spec.decay.get(0).unwrap_or(0.0);
        while !((s[1] - u_star).abs() <= p0) {
            if n >= opts.budget {
                return Settle::Stopped {
                    regime: Regime::Undecided,
                    iterations: n,
                    note: "fiber coordinate never entered the certificate window".into(),
                };
            }
            let t = iterate(step, s, one);
            if t.reason != Termination::Budget {
                return stop_for(&t.reason, n);
            }
            s = t.last();
            n += 1;
        }
        let r = cert.orbit_bound(s[0]);
        let mut j = 0usize;
        loop {
            let dominated = cert.spec.decay.get(j).is_some_and(|p| (s[1] - u_star).abs() <= p);
            if !dominated {
                note = format!("decay stopped dominating the orbit {j} steps into the window; ");
                break;
            }
            if let Ok(bound) = cauchy_tail_bound(cert, r, j) {
                if bound < opts.tol {
                    let rigorous = exact_fiber;
                    let note = if rigorous {
                        format!("certificate tail bound from step {}", n - j)
                    } else {
                        "certificate tail bound; fiber values hold only to rounding".to_string()
                    };
                    return Settle::Limit { value: s[0], error: bound, rigorous, iterations: n, note };
                }
            }
            if n >= opts.budget {
                return Settle::Stopped { regime: Regime::Undecided, iterations: n, note: "budget exhausted".into() };
            }
            let t = iterate(step, s, one);
            if t.reason != Termination::Budget {
                return stop_for(&t.reason, n);
            }
            s = t.last();
            n += 1;
            j += 1;
        }
    }

    let mut anchor = s[0];
    let mut run = 0usize;
    while n < opts.budget {
        let t = iterate(step, s, one);
        if t.reason != Termination::Budget {
            return stop_for(&t.reason, n);
        }
        s = t.last();
        n += 1;
        if (s[0] - anchor).abs() < opts.tol {
            run += 1;
            if run >= opts.window {
                note.push_str(&format!("heuristic: {} consecutive steps within tol", opts.window));
                return Settle::Limit { value: s[0], error: opts.tol, rigorous: false, iterations: n, note };
            }
        } else {
            anchor = s[0];
            run = 0;
        }
    }
    Settle::Stopped { regime: Regime::Undecided, iterations: n, note: "budget exhausted".into() }
}

/// Estimates the limit of the orbit of `start` near the fiber `{u = u_star}`.
/// With a certificate (of `map` itself) the stopping rule is the Cauchy tail
/// bound; otherwise the heuristic window test.
pub fn estimate_limit(
    map: &TriangularMap,
    start: State,
    u_star: f64,
    cert: Option<&FecldCertificate>,
    opts: &LimitOptions,
) -> Result<LimitReport, ClassifyError> {
    let regime = classify_regime(map, u_star)?;
    let f0s = map.f0.eval(u_star)?;
    let f1s = map.f1.eval(u_star)?;
    match regime {
        Regime::GlobalAttractor => {
            let limit = f0s / (1.0 - f1s);
            let mut s = start;
            let one = IterateOptions { budget: 1, escape_radius: opts.escape_radius, record: false };
            for n in 0..=opts.budget {
                if (s[0] - limit).abs() <= opts.tol && (s[1] - u_star).abs() <= opts.tol {
                    let mut r = LimitReport::bare(regime, u_star, n, format!("orbit within tol of the attractor after {n} steps"));
                    r.limit = Some(limit);
                    r.error_bound = Some(0.0);
                    r.rigorous = true;
                    return Ok(r);
                }
                if n == opts.budget {
                    break;
                }
                let t = iterate(map, s, one);
                if t.reason != Termination::Budget {
                    return Ok(stopped_report(stop_for(&t.reason, n), u_star));
                }
                s = t.last();
            }
            let mut r = LimitReport::bare(Regime::Undecided, u_star, opts.budget, "budget exhausted before the orbit reached the attractor");
            r.limit = Some(limit);
            Ok(r)
        }
        Regime::FixedPointFiber => {
            let cert = cert.filter(|c| c.verdict != Verdict::Refuted);
            let exact = f0s == 0.0 && f1s == 1.0;
            let out = settle(map, start, u_star, cert, exact, opts);
            Ok(match out {
                Settle::Limit { value, error, rigorous, iterations, note } => LimitReport {
                    regime,
                    u_star,
                    limit: Some(value),
                    limit_even: None,
                    limit_odd: None,
                    error_bound: Some(error),
                    rigorous,
                    iterations,
                    note,
                },
                stopped => stopped_report(stopped, u_star),
            })
        }
        Regime::TwoPeriodicFiber => two_periodic(map, start, u_star, f0s, cert, opts),
        Regime::Unbounded => {
            let r = detect_unbounded(map, start, opts.escape_radius, opts.budget);
            let (n, note) = match r {
                Unboundedness::Escaped { step } => (step, format!("escaped at step {step}; f1(u*) = 1 with f0(u*) = {f0s}")),
                Unboundedness::BoundedSoFar { .. } => (opts.budget, format!("bounded so far; f1(u*) = 1 with f0(u*) = {f0s} admits unbounded orbits")),
            };
            Ok(LimitReport::bare(Regime::Unbounded, u_star, n, note))
        }
        Regime::Undecided => Ok(LimitReport::bare(
            regime,
            u_star,
            0,
            format!("|f1(u*)| = {} > 1: the fiber repels in x", f1s.abs()),
        )),
    }
}

fn stopped_report(s: Settle, u_star: f64) -> LimitReport {
    match s {
        Settle::Stopped { regime, iterations, note } => LimitReport::bare(regime, u_star, iterations, note),
        Settle::Limit { .. } => unreachable!("only called for stopped orbits"),
    }
}

fn two_periodic(
    map: &TriangularMap,
    start: State,
    u_star: f64,
    f0s: f64,
    cert: Option<&FecldCertificate>,
    opts: &LimitOptions,
) -> Result<LimitReport, ClassifyError> {
    if local_contractivity(&map.phi, u_star) == Contractivity::No {
        return Ok(LimitReport::bare(
            Regime::Undecided,
            u_star,
            0,
            "phi is not locally contractive at u*; the 2-periodic fiber result does not apply",
        ));
    }
    let two = map.two_step();
    let affine = two.as_triangular();
    let exact = affine.f0.eval(u_star)? == 0.0 && affine.f1.eval(u_star)? == 1.0;
    let reduced_cert = match cert.filter(|c| c.verdict != Verdict::Refuted) {
        Some(c) => {
            let spec = c.spec.two_step(map, u_star)?;
            Some(check_certificate(&affine, u_star, &spec, 256)?)
        }
        None => None,
    };
    let reduced_cert = reduced_cert.as_ref().filter(|c| c.verdict != Verdict::Refuted);
    let odd_start = match map.step(start) {
        Ok(s) => s,
        Err(e) => {
            return Ok(LimitReport::bare(Regime::Undecided, u_star, 0, format!("domain error at step 0: {e}")));
        }
    };
    let budget = LimitOptions { budget: opts.budget / 2, ..*opts };
    let even = settle(&two, start, u_star, reduced_cert, exact, &budget);
    let odd = settle(&two, odd_start, u_star, reduced_cert, exact, &budget);
    match (even, odd) {
        (
            Settle::Limit { value: le, error: ee, rigorous: re, iterations: ne, note },
            Settle::Limit { value: lo, error: eo, rigorous: ro, iterations: no, .. },
        ) => {
            let pairing = (le + lo - f0s).abs() / 2.0;
            let error = ee.max(eo).max(pairing);
            Ok(LimitReport {
                regime: Regime::TwoPeriodicFiber,
                u_star,
                limit: Some(le),
                limit_even: Some(le),
                limit_odd: Some(lo),
                error_bound: Some(error),
                rigorous: re && ro,
                iterations: (2 * ne).max(2 * no + 1),
                note: format!("two-step reduction; {note}"),
            })
        }
        (Settle::Stopped { regime, iterations, note }, _) => {
            Ok(LimitReport::bare(regime, u_star, 2 * iterations, format!("even subsequence: {note}")))
        }
        (_, Settle::Stopped { regime, iterations, note }) => {
            Ok(LimitReport::bare(regime, u_star, 2 * iterations + 1, format!("odd subsequence: {note}")))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Unboundedness {
    Escaped { step: usize },
    BoundedSoFar { max_abs: f64 },
}

/// Whether `|x| + |u|` exceeds `escape_radius` within `budget` steps.
pub fn detect_unbounded<M: PlanarStep + ?Sized>(
    map: &M,
    start: State,
    escape_radius: f64,
    budget: usize,
) -> Unboundedness {
    let mut s = start;
    let mut max_abs = s[0].abs() + s[1].abs();
    for n in 0..budget {
        if !max_abs.is_finite() || max_abs > escape_radius {
            return Unboundedness::Escaped { step: n };
        }
        match map.step(s) {
            Ok(next) => s = next,
            Err(_) => return Unboundedness::BoundedSoFar { max_abs },
        }
        let m = s[0].abs() + s[1].abs();
        if !m.is_finite() || m > escape_radius {
            return Unboundedness::Escaped { step: n + 1 };
        }
        max_abs = max_abs.max(m);
    }
    Unboundedness::BoundedSoFar { max_abs }
}

/// Tries the derivative-bound envelope on shrinking windows and returns the
/// first certificate that is not refuted.
pub fn auto_certificate(map: &TriangularMap, u_star: f64) -> Option<FecldCertificate> {
    let scale = u_star.abs().max(1.0);
    for eps in [0.25, 0.1, 0.03, 0.01].map(|f| f * scale) {
        let Ok(env) = hyperbolic_envelope(map, u_star, eps) else { continue };
        if let Ok(cert) = check_certificate(map, u_star, &env, 512) {
            if cert.verdict != Verdict::Refuted {
                return Some(cert);
            }
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::ScalarFn;
    use crate::maps::iterate;
    use approx::assert_abs_diff_eq;

    #[test]
    fn regimes() {
        let a = TriangularMap::parse("1+u", "0.5", "u/2").unwrap();
        assert_eq!(classify_regime(&a, 0.0).unwrap(), Regime::GlobalAttractor);
        let b = TriangularMap::parse("0", "1+u", "u/2").unwrap();
        assert_eq!(classify_regime(&b, 0.0).unwrap(), Regime::FixedPointFiber);
        let c = TriangularMap::parse("0", "-1+u^2", "u/2").unwrap();
        assert_eq!(classify_regime(&c, 0.0).unwrap(), Regime::TwoPeriodicFiber);
        let un = TriangularMap::parse("1", "1", "u/2").unwrap();
        assert_eq!(classify_regime(&un, 0.0).unwrap(), Regime::Unbounded);
        let rep = TriangularMap::parse("0", "2", "u/2").unwrap();
        assert_eq!(classify_regime(&rep, 0.0).unwrap(), Regime::Undecided);
        assert!(matches!(classify_regime(&a, 1.0), Err(ClassifyError::NotAFixedPoint { .. })));
    }

    #[test]
    fn regime_a_formula() {
        let a = TriangularMap::parse("1+u", "0.5", "u/2").unwrap();
        let r = estimate_limit(&a, [7.0, 0.3], 0.0, None, &LimitOptions::default()).unwrap();
        assert_eq!(r.limit, Some(2.0));
        assert!(r.rigorous);
        let t = iterate(&a, [7.0, 0.3], IterateOptions { budget: 200, ..Default::default() });
        assert_abs_diff_eq!(t.last()[0], 2.0, epsilon = 1e-12);
    }

    #[test]
    fn constant_fiber_keeps_x() {
        let m = TriangularMap::parse("0", "1", "u/3").unwrap();
        let r = estimate_limit(&m, [4.5, 0.7], 0.0, None, &LimitOptions::default()).unwrap();
        assert_eq!(r.regime, Regime::FixedPointFiber);
        assert_eq!(r.limit, Some(4.5));
        let cert = auto_certificate(&m, 0.0).unwrap();
        let r = estimate_limit(&m, [4.5, 0.7], 0.0, Some(&cert), &LimitOptions::default()).unwrap();
        assert_eq!(r.limit, Some(4.5));
        assert_eq!(r.error_bound, Some(0.0));
        assert!(r.rigorous);
    }

    #[test]
    fn product_limit_with_certificate() {
        let m = TriangularMap::new(ScalarFn::constant(0.0), ScalarFn::parse("1+u").unwrap(), ScalarFn::linear(0.5));
        let oracle: f64 = (0..200).map(|k| 1.0 + 0.5f64.powi(k + 1)).product();
        let cert = auto_certificate(&m, 0.0).unwrap();
        let r = estimate_limit(&m, [1.0, 0.5], 0.0, Some(&cert), &LimitOptions::default()).unwrap();
        assert!(r.rigorous);
        assert!(r.error_bound.unwrap() < 1e-9);
        assert_abs_diff_eq!(r.limit.unwrap(), oracle, epsilon = 1e-9);
        let h = estimate_limit(&m, [1.0, 0.5], 0.0, None, &LimitOptions::default()).unwrap();
        assert!(!h.rigorous);
        assert_abs_diff_eq!(h.limit.unwrap(), oracle, epsilon = 1e-9);
    }

    #[test]
    fn two_periodic_pairing() {
        let m = TriangularMap::new(
            ScalarFn::constant(0.0),
            ScalarFn::builtin("-1+|u|", |u| -1.0 + u.abs()),
            ScalarFn::linear(0.5),
        );
        let cert = auto_certificate(&m, 0.0);
        let r = estimate_limit(&m, [1.0, 0.5], 0.0, cert.as_ref(), &LimitOptions::default()).unwrap();
        assert_eq!(r.regime, Regime::TwoPeriodicFiber);
        let (le, lo) = (r.limit_even.unwrap(), r.limit_odd.unwrap());
        assert!((le + lo).abs() <= 2.0 * r.error_bound.unwrap());
        assert!(r.error_bound.unwrap() < 1e-8);
    }

    #[test]
    fn non_contractive_fiber_is_undecided() {
        let m = TriangularMap::new(ScalarFn::constant(0.0), ScalarFn::constant(-1.0), ScalarFn::parse("-u-u^2").unwrap());
        let r = estimate_limit(&m, [1.0, 0.01], 0.0, None, &LimitOptions::default()).unwrap();
        assert_eq!(r.regime, Regime::Undecided);
        assert!(r.note.contains("contractive"));
    }

    #[test]
    fn unbounded_detection() {
        let m = TriangularMap::parse("0", "0.5", "u/2").unwrap();
        assert!(matches!(detect_unbounded(&m, [3.0, 1.0], 1e6, 1000), Unboundedness::BoundedSoFar { .. }));
        let m = TriangularMap::parse("1", "1", "u/2").unwrap();
        assert_eq!(detect_unbounded(&m, [0.0, 0.0], 10.0, 1000), Unboundedness::Escaped { step: 11 });
        let r = estimate_limit(&m, [0.0, 0.0], 0.0, None, &LimitOptions { escape_radius: 100.0, ..Default::default() }).unwrap();
        assert_eq!(r.regime, Regime::Unbounded);
    }

    #[test]
    fn report_json() {
        let m = TriangularMap::parse("1+u", "0.5", "u/2").unwrap();
        let r = estimate_limit(&m, [7.0, 0.3], 0.0, None, &LimitOptions::default()).unwrap();
        let v = serde_json::to_value(&r).unwrap();
        assert_eq!(v["regime"], "A-global-attractor");
        for k in ["u_star", "limit", "limit_even", "limit_odd", "error_bound", "rigorous", "iterations"] {
            assert!(v.get(k).is_some());
        }
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(32))]

        #[test]
        fn regime_a_orbits_reach_formula(c in -0.9f64..0.9, a in -3.0f64..3.0, x0 in -10.0f64..10.0, u0 in -0.9f64..0.9) {
            let m = TriangularMap::new(
                ScalarFn::builtin("f0", move |u| a + u),
                ScalarFn::builtin("f1", move |u| c + 0.05 * u),
                ScalarFn::linear(0.5),
            );
            let r = estimate_limit(&m, [x0, u0], 0.0, None, &LimitOptions::default()).unwrap();
            let ell = a / (1.0 - c);
            proptest::prop_assert_eq!(r.limit, Some(ell));
            let t = iterate(&m, [x0, u0], IterateOptions { budget: 2000, record: false, ..Default::default() });
            proptest::prop_assert!((t.last()[0] - ell).abs() <= 1e-9 * (1.0 + ell.abs()));
        }

        #[test]
        fn two_periodic_limits_pair_up(f0s in -2.0f64..2.0, x0 in -3.0f64..3.0, u0 in -0.5f64..0.5) {
            let m = TriangularMap::new(
                ScalarFn::builtin("f0", move |u| f0s + u),
                ScalarFn::builtin("f1", |u| -1.0 + u * u),
                ScalarFn::linear(0.5),
            );
            let cert = auto_certificate(&m, 0.0);
            let r = estimate_limit(&m, [x0, u0], 0.0, cert.as_ref(), &LimitOptions::default()).unwrap();
            proptest::prop_assert_eq!(r.regime, Regime::TwoPeriodicFiber);
            let (le, lo) = (r.limit_even.unwrap(), r.limit_odd.unwrap());
            proptest::prop_assert!((le + lo - f0s).abs() <= 2.0 * r.error_bound.unwrap());
        }

        #[test]
        fn rigorous_bound_holds_ten_times_longer(b in 0.1f64..2.0, x0 in -5.0f64..5.0, u0 in -0.2f64..0.2, q in 0.2f64..0.8) {
            let m = TriangularMap::new(
                ScalarFn::builtin("f0", move |u| u * u),
                ScalarFn::builtin("f1", move |u| 1.0 + b * u),
                ScalarFn::linear(q),
            );
            let cert = auto_certificate(&m, 0.0).unwrap();
            let opts = LimitOptions { tol: 1e-6, ..Default::default() };
            let r = estimate_limit(&m, [x0, u0], 0.0, Some(&cert), &opts).unwrap();
            proptest::prop_assert!(r.rigorous);
            let bound = r.error_bound.unwrap();
            let n = r.iterations;
            let t = iterate(&m, [x0, u0], IterateOptions { budget: 11 * n.max(1), record: true, ..Default::default() });
            let xn = t.states[n][0];
            for s in &t.states[n..] {
                proptest::prop_assert!((s[0] - xn).abs() <= bound, "moved {} > {}", (s[0] - xn).abs(), bound);
            }
        }
    }
}
