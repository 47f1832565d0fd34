//! Reproduction checks run by `trimap verify` and the acceptance tests.
//!
//! Each criterion is a self-contained computation that compares library
//! output against closed forms or independent brute-force loops and reports
//! PASS or FAIL with a one-line detail.

use std::fmt::Write as _;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::basin::{consistency_1d_2d, decompose_1d, rasterize_2d, CellLabel, Label1D, RasterOptions, Rect};
use crate::classify::{auto_certificate, estimate_limit, LimitOptions, Regime};
use crate::expr::{BinaryOp, Expr, ScalarFn, UnaryOp};
use crate::families::{
    classify_family, AdditiveRecurrence, BajoLiz, FiberOutcome, LogProduct, MultiplicativeRecurrence,
    NonhyperbolicProduct, PowerPerturbation, QuasiHomogeneous, QuasiHomogeneousCubic, System,
};
use crate::fecld::{check_certificate, hyperbolic_envelope, Verdict};
use crate::fixed::{find_fixed_points, find_two_cycles, preimages, DEFAULT_GRID};
use crate::jacobsthal::verify_jacobsthal;
use crate::maps::{iterate, IterateOptions, PlanarStep, Termination, TriangularMap};

pub const DEFAULT_SEED: u64 = 0x7a1_2026;

#[derive(Debug, Clone, Copy)]
pub struct SuiteOptions {
    pub seed: u64,
    /// Threads for the basin raster; 0 means all cores.
    pub jobs: usize,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        SuiteOptions { seed: DEFAULT_SEED, jobs: 0 }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CriterionResult {
    pub id: u32,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

impl std::fmt::Display for CriterionResult {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let status = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "{status} [{:>2}] {} ({:.2}s): {}", self.id, self.name, self.seconds, self.detail)
    }
}

type Check = fn(&SuiteOptions) -> Checks;

pub const CRITERIA: &[(u32, &str)] = &[
    (1, "cubic fiber map: fixed points, 2-cycle, preimages"),
    (2, "bajo-liz sweep over a"),
    (3, "invariant curve of the power perturbation"),
    (4, "infinite product limit with certified bound"),
    (5, "log-product: ln|x_n| falls by 3 within 10^4 steps"),
    (6, "nonhyperbolic product threshold"),
    (7, "parabolic decay rates"),
    (8, "cubic planar basin raster"),
    (9, "zero-product fibers of order-3 multiplicative recurrences"),
    (10, "additive recurrence limits"),
    (11, "randomized property suites"),
];

fn check_fn(id: u32) -> Option<Check> {
    Some(match id {
        1 => cubic_fiber_map,
        2 => bajo_liz_sweep,
        3 => invariant_curve,
        4 => product_limit,
        5 => log_product,
        6 => nonhyperbolic_threshold,
        7 => parabolic_rates,
        8 => basin_raster,
        9 => zero_product_fibers,
        10 => additive_limits,
        11 => property_suites,
        _ => return None,
    })
}

/// Runs one criterion; `None` for an unknown id.
pub fn run_criterion(id: u32, opts: &SuiteOptions) -> Option<CriterionResult> {
    let name = CRITERIA.iter().find(|c| c.0 == id)?.1;
    let f = check_fn(id)?;
    let start = Instant::now();
    let checks = f(opts);
    Some(CriterionResult {
        id,
        name,
        passed: checks.failures.is_empty(),
        detail: checks.summary(),
        seconds: start.elapsed().as_secs_f64(),
    })
}

pub fn run_suite(opts: &SuiteOptions) -> Vec<CriterionResult> {
    CRITERIA.iter().filter_map(|&(id, _)| run_criterion(id, opts)).collect()
}

/// Failed checks and notes collected by one criterion.
#[derive(Debug, Default)]
struct Checks {
    failures: Vec<String>,
    notes: Vec<String>,
}

impl Checks {
    fn check(&mut self, ok: bool, what: impl FnOnce() -> String) {
        if !ok {
            self.failures.push(what());
        }
    }

    fn note(&mut self, s: impl Into<String>) {
        self.notes.push(s.into());
    }

    fn fail(&mut self, s: impl Into<String>) {
        self.failures.push(s.into());
    }

    fn summary(&self) -> String {
        let mut out = String::new();
        if !self.failures.is_empty() {
            let shown: Vec<&str> = self.failures.iter().take(3).map(String::as_str).collect();
            let _ = write!(out, "{} failed: {}", self.failures.len(), shown.join("; "));
            if !self.notes.is_empty() {
                out.push_str(" | ");
            }
        }
        out.push_str(&self.notes.join("; "));
        out
    }
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() < tol
}

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * b.abs()
}

fn cubic_fiber_map(_: &SuiteOptions) -> Checks {
    let mut c = Checks::default();
    let start = Instant::now();
    let psi = QuasiHomogeneousCubic::cubic();
    let fixed = find_fixed_points(&psi, -3.0, 5.0, DEFAULT_GRID);
    let locs: Vec<f64> = fixed.iter().map(|f| f.location).collect();
    c.check(fixed.len() == 3, || format!("fixed points {locs:?}"));
    for (f, (loc, mult)) in fixed.iter().zip([(0.0, 2.0 / 3.0), (1.0, 7.0 / 6.0), (2.0, 2.0 / 3.0)]) {
        c.check(close(f.location, loc, 1e-9), || format!("fixed point {} vs {loc}", f.location));
        c.check(close(f.multiplier, mult, 1e-6), || format!("multiplier at {loc}: {} vs {mult}", f.multiplier));
    }
    let s13 = 13f64.sqrt();
    let pairs = find_two_cycles(&psi, -3.0, 5.0, DEFAULT_GRID).pairs().to_vec();
    match pairs.iter().find(|p| close(p.0, 1.0 - s13, 1e-9) && close(p.1, 1.0 + s13, 1e-9)) {
        Some(&(qm, qp)) => {
            let back = psi.eval(qp).unwrap_or(f64::NAN);
            c.check(close(back, qm, 1e-12), || format!("phi(q+) - q- = {:e}", back - qm));
        }
        None => c.fail(format!("2-cycle 1 +- sqrt 13 not found in {pairs:?}")),
    }
    let pre = preimages(&psi, 1.0, -3.0, 5.0, DEFAULT_GRID);
    let s7 = 7f64.sqrt();
    for target in [1.0 - s7, 1.0 + s7] {
        c.check(pre.iter().any(|&p| close(p, target, 1e-9)), || format!("preimage {target} missing from {pre:?}"));
    }
    let secs = start.elapsed().as_secs_f64();
    c.check(secs < 1.0, || format!("took {secs:.3}s"));
    c.note(format!("fixed {locs:.12?}, preimages of 1 {pre:.12?}"));
    c
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Case {
    ToZero,
    ToZeroSlowly,
    PairedLimits,
    Unbounded,
}

fn bajo_liz_sweep(opts: &SuiteOptions) -> Checks {
    let mut c = Checks::default();
    let b = 1.0;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ 0xba10);
    let mut tested = 0;
    for a in [-2.0, -1.0, -0.5, 0.5, 1.0, 2.0] {
        let m = BajoLiz::new(a, b).expect("b != 0");
        let rec = m.recurrence();
        let u_star = (1.0 - a) / b;
        let case = match a {
            x if f64::abs(x) > 1.0 => Case::ToZero,
            -1.0 => Case::Unbounded,
            1.0 => Case::ToZeroSlowly,
            _ => Case::PairedLimits,
        };
        let mut starts = Vec::new();
        while starts.len() < 20 {
            let (x0, x1): (f64, f64) = (rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
            let u = x0 * x1;
            if u.abs() < 0.05 || (u - u_star).abs() < 0.05 || !m.in_good_set(u, 10_000) {
                continue;
            }
            starts.push([x0, x1]);
        }
        for [x0, x1] in starts {
            tested += 1;
            let tag = format!("a={a} start=({x0:.4},{x1:.4})");
            match case {
                Case::ToZero => {
                    let xs = rec.run(&[x0, x1], opts_budget(10_000));
                    let tail = xs[xs.len() - 2..].iter().fold(0.0f64, |m, x| m.max(x.abs()));
                    c.check(tail < 1e-9, || format!("{tag}: |x| = {tail:e} after 10^4 steps"));
                }
                Case::ToZeroSlowly => {
                    let xs = rec.run(&[x0, x1], opts_budget(2_000_001));
                    let early = xs[2000].abs().max(xs[2001].abs());
                    let late = xs[2_000_000].abs().max(xs[2_000_001].abs());
                    c.check(late / early < 0.05, || format!("{tag}: decay ratio {}", late / early));
                    let v0 = x0 * x1;
                    for n in 0..15u32 {
                        let exact = m.closed_form_product(v0, n).unwrap();
                        let got = xs[2 * n as usize] * xs[2 * n as usize + 1];
                        c.check(rel_close(got, exact, 1e-9), || format!("{tag}: product closed form at n={n}"));
                    }
                }
                Case::PairedLimits => {
                    let sys: &dyn System = &m;
                    match classify_family("bajo-liz", sys, &[x0, x1], None, &LimitOptions::default()) {
                        Ok(r) => {
                            let b_fiber = r.subsystems.iter().all(|s| s.regime == Regime::FixedPointFiber);
                            c.check(b_fiber, || format!("{tag}: subsystems not on a fixed-point fiber"));
                            match r.combined {
                                Some(p) => c.check(close(p, u_star, 1e-6), || format!("{tag}: product {p} vs {u_star}")),
                                None => c.fail(format!("{tag}: no combined limit")),
                            }
                        }
                        Err(e) => c.fail(format!("{tag}: {e}")),
                    }
                    let xs = rec.run(&[x0, x1], opts_budget(20_001));
                    let p = xs[20_000] * xs[20_001];
                    c.check(close(p, u_star, 1e-6), || format!("{tag}: raw product {p}"));
                }
                Case::Unbounded => {
                    let (_, reason) = rec.run_traced(
                        &[x0, x1],
                        IterateOptions { budget: 1_000_000, escape_radius: 1e6, record: true },
                    );
                    c.check(matches!(reason, Termination::Escaped { .. }), || format!("{tag}: {reason}"));
                    let xs = rec.run(&[x0, x1], opts_budget(30));
                    for n in 0..30u32 {
                        let exact = m.closed_form_minus_one(x0, x1, n).unwrap();
                        c.check(rel_close(xs[n as usize], exact, 1e-9), || format!("{tag}: closed form at n={n}"));
                    }
                }
            }
        }
        // exact special fibers
        let special: Vec<([f64; 2], usize)> = match case {
            Case::Unbounded => vec![([2.0, 1.0], 2), ([0.0, 3.0], 4)],
            Case::ToZeroSlowly => vec![([0.0, 3.0], 2)],
            _ => vec![([1.0, u_star], 2)],
        };
        for (init, period) in special {
            let xs = rec.run(&init, opts_budget(40));
            let periodic = (period..xs.len()).all(|n| xs[n] == xs[n - period]);
            c.check(periodic, || format!("a={a} start {init:?} not exactly {period}-periodic"));
        }
        if case == Case::PairedLimits {
            let (_, reason) = rec.run_traced(&[0.0, 1.0], IterateOptions { budget: 10_000, escape_radius: 1e6, record: true });
            c.check(matches!(reason, Termination::Escaped { .. }), || format!("a={a} zero product start: {reason}"));
        }
    }
    c.note(format!("{tested} random starts over 6 values of a, plus exact periodic fibers"));
    c
}

fn opts_budget(budget: usize) -> IterateOptions {
    IterateOptions { budget, escape_radius: f64::INFINITY, record: true }
}

fn invariant_curve(_: &SuiteOptions) -> Checks {
    let mut c = Checks::default();
    let m = PowerPerturbation::new(0.5, 1.0, 1.0, 1, 2).expect("valid parameters");
    let mut last_escape = 0;
    for u0 in [0.5, 1.0, 2.0, 0.25, 4.0, 0.3] {
        let s0 = match m.point_on_curve(u0) {
            Ok(s) => s,
            Err(e) => {
                c.fail(format!("u0={u0}: {e}"));
                continue;
            }
        };
        let t = iterate(&m.map(), s0, IterateOptions { budget: 20, escape_radius: f64::INFINITY, record: true });
        for (n, s) in t.states.iter().enumerate() {
            let expect = 2f64.powi(n as i32) * s0[0];
            c.check(close(s[1] * s[0], 1.0, 1e-9), || format!("u0={u0} n={n}: u x = {}", s[1] * s[0]));
            c.check(rel_close(s[0], expect, 1e-9), || format!("u0={u0} n={n}: x = {} vs {expect}", s[0]));
        }
        let t = iterate(&m.map(), s0, IterateOptions { budget: 25, escape_radius: 1e6, record: false });
        c.check(matches!(t.reason, Termination::Escaped { .. }), || format!("u0={u0}: no escape by n=25"));
        last_escape = last_escape.max(t.steps);
    }
    c.note(format!("6 starts on u x = 1; latest escape past 1e6 at n = {last_escape}"));
    c
}

fn product_limit(_: &SuiteOptions) -> Checks {
    let mut c = Checks::default();
    let brute: f64 = (0..200).map(|k| 1.0 + 0.5f64.powi(k + 1)).product();
    let map = TriangularMap::parse("0", "1+u", "u/2").expect("valid expressions");
    let cert = hyperbolic_envelope(&map, 0.0, 0.5).and_then(|env| check_certificate(&map, 0.0, &env, 256));
    let cert = match cert {
        Ok(cert) => cert,
        Err(e) => {
            c.fail(format!("certificate: {e}"));
            return c;
        }
    };
    c.check(cert.verdict != Verdict::Refuted, || format!("certificate verdict {:?}", cert.verdict));
    let opts = LimitOptions { tol: 1e-10, ..Default::default() };
    match estimate_limit(&map, [1.0, 0.5], 0.0, Some(&cert), &opts) {
        Ok(r) => {
            let ell = r.limit.unwrap_or(f64::NAN);
            let bound = r.error_bound.unwrap_or(f64::INFINITY);
            c.check(close(ell, brute, 1e-9), || format!("limit {ell} vs product {brute}"));
            c.check(r.rigorous && bound < 1e-9, || format!("bound {bound:e}, rigorous {}", r.rigorous));
            c.note(format!("limit {ell:.15}, brute product {brute:.15}, bound {bound:.2e} after {} steps", r.iterations));
        }
        Err(e) => c.fail(e.to_string()),
    }
    c
}

/// Fails by construction: the factor `1 - 1/ln|u|` exceeds 1 for `|u| < 1`,
/// so `|x_n|` grows. The detail reports the observed change.
fn log_product(_: &SuiteOptions) -> Checks {
    let mut c = Checks::default();
    let m = LogProduct::new(0.5).expect("|lambda| < 1");
    let t = iterate(&m.map(), [1.0, 0.5], IterateOptions { budget: 10_000, escape_radius: f64::INFINITY, record: true });
    let logs: Vec<f64> = t.states.iter().map(|s| s[0].abs().ln()).collect();
    let ln0 = logs[0];
    let reached = logs.iter().position(|&l| l < ln0 - 3.0);
    let last = *logs.last().unwrap();
    let min = logs.iter().cloned().fold(f64::INFINITY, f64::min);
    let nondecreasing = logs.windows(2).all(|w| w[1] >= w[0]);
    let underflow = t.states.iter().position(|s| s[1] == 0.0);
    // exact-arithmetic partial sum of ln(1 - 1/ln|u_k|) with u_k = 2^-(k+1)
    let exact: f64 = (0..10_000).map(|k| (1.0 + 1.0 / ((k + 1) as f64 * 2f64.ln())).ln()).sum();
    c.check(reached.is_some(), || format!("ln|x_n| - ln|x_0| never drops below {:.3}", min - ln0));
    c.note(format!(
        "ln|x_n| is {}; ln|x_n| - ln|x_0| = {:.3} at n = 10^4 (exact partial sum {exact:.3}, \
         float u_n reaches 0 at n = {}); |x_n| grows without bound",
        if nondecreasing { "nondecreasing" } else { "not monotone" },
        last - ln0,
        underflow.map_or("-".into(), |n| n.to_string()),
    ));
    c
}

fn nonhyperbolic_threshold(_: &SuiteOptions) -> Checks {
    let mut c = Checks::default();
    let window = 64;
    let conv = NonhyperbolicProduct::new(1.0, 1.0, 2.0, 2.0).expect("valid parameters");
    let t = iterate(&conv.map(), [1.0, 0.5], IterateOptions { budget: 100_000 + window, escape_radius: 1e6, record: true });
    let xs: Vec<f64> = t.states.iter().map(|s| s[0]).collect();
    let settled = (0..=100_000.min(xs.len().saturating_sub(window + 1)))
        .find(|&n| xs[n + 1..=n + window].iter().all(|x| (x - xs[n]).abs() < 1e-6));
    c.check(settled.is_some(), || "alpha = 2: no Cauchy window of width 1e-6 by n = 10^5".to_string());
    let div = NonhyperbolicProduct::new(1.0, 1.0, 1.0, 2.0).expect("valid parameters");
    let t = iterate(&div.map(), [1.0, 0.5], IterateOptions { budget: 10_000, escape_radius: f64::INFINITY, record: true });
    let crossed = t.states.iter().position(|s| s[0] > 100.0);
    c.check(crossed.is_some(), || format!("alpha = 1: x_n/x_0 = {} at n = 10^4", t.last()[0]));
    let mut refuted = Vec::new();
    for alpha in [0.5, 1.0, 1.5, 2.0, 3.0] {
        let m = NonhyperbolicProduct::new(1.0, 1.0, alpha, 2.0).expect("valid parameters");
        let cert = m.envelope(0.01).map_err(|e| e.to_string()).and_then(|env| {
            check_certificate(&m.map(), 0.0, &env, 256).map_err(|e| e.to_string())
        });
        match cert {
            Ok(cert) => {
                let r = cert.verdict == Verdict::Refuted;
                c.check(r == (alpha <= 1.0), || format!("alpha = {alpha}: verdict {:?}", cert.verdict));
                if r {
                    refuted.push(alpha);
                }
            }
            Err(e) => c.fail(format!("alpha = {alpha}: {e}")),
        }
    }
    c.note(format!(
        "alpha = 2 settles at n = {}, x -> {:.6}; alpha = 1 passes 100 x0 at n = {}; refuted for alpha in {refuted:?}",
        settled.map_or("-".into(), |n| n.to_string()),
        settled.map_or(f64::NAN, |n| xs[n]),
        crossed.map_or("-".into(), |n| n.to_string()),
    ));
    c
}

fn parabolic_rates(_: &SuiteOptions) -> Checks {
    let mut c = Checks::default();
    let start = Instant::now();
    let runs = [("u - u^2", 2.0, 1.0, 0.5, 10_000u64), ("u - 2*u^3", 3.0, 2.0, 0.3, 1_000_000)];
    for (expr, k, a, u0, n) in runs {
        let f = ScalarFn::parse(expr).expect("valid expression");
        match verify_jacobsthal(&f, k, a, u0, &[100, 1000, n]) {
            Ok(r) => {
                c.check(r.within(0.01), || format!("{expr}: {} vs {}", r.limit_estimate, r.predicted));
                c.note(format!("{expr}: n^(1/(k-1)) u_n = {:.6} at n = {n}", r.limit_estimate));
            }
            Err(e) => c.fail(format!("{expr}: {e}")),
        }
    }
    let secs = start.elapsed().as_secs_f64();
    c.check(secs < 5.0, || format!("took {secs:.2}s"));
    c
}

fn basin_raster(opts: &SuiteOptions) -> Checks {
    let mut c = Checks::default();
    let rect = Rect::square(4.0);
    let n = 400;
    let origin = [[0.0, 0.0]];
    let serial = RasterOptions { jobs: 1, ..Default::default() };
    let cubic = match QuasiHomogeneousCubic::new(0.8) {
        Ok(m) => m,
        Err(e) => {
            c.fail(e.to_string());
            return c;
        }
    };
    let start = Instant::now();
    let grid = match rasterize_2d(&cubic.map(), rect, n, n, &origin, &serial) {
        Ok(g) => g,
        Err(e) => {
            c.fail(e.to_string());
            return c;
        }
    };
    let serial_secs = start.elapsed().as_secs_f64();
    c.check(serial_secs < 60.0, || format!("serial raster took {serial_secs:.1}s"));
    c.check(grid.is_point_symmetric(), || "raster differs from its point reflection".to_string());

    let decomp = match decompose_1d(&QuasiHomogeneousCubic::cubic(), (-17.0, 17.0), crate::basin::DEFAULT_DEPTH) {
        Ok(d) => d,
        Err(e) => {
            c.fail(e.to_string());
            return c;
        }
    };
    let origin_index = decomp.attractors.iter().position(|a| a.abs() < 1e-9);
    let expect = |l: Label1D| match l {
        Label1D::Attractor(i) if Some(i) == origin_index => Some(CellLabel::Attractor(0)),
        Label1D::Attractor(_) | Label1D::Escape => Some(CellLabel::Escaped),
        Label1D::Undecided => None,
    };
    let rep = consistency_1d_2d(&grid, &decomp, |x, y| x * y, expect, 0.05, usize::MAX);
    c.check(rep.mismatch_fraction <= 0.01, || format!("d = 0.8: mismatch fraction {:.4}", rep.mismatch_fraction));

    let jobs = if opts.jobs == 0 { std::thread::available_parallelism().map_or(1, |n| n.get()) } else { opts.jobs };
    let mut speed = format!("{jobs} worker(s) available, no parallel timing");
    if jobs > 1 {
        let start = Instant::now();
        match rasterize_2d(&cubic.map(), rect, n, n, &origin, &RasterOptions { jobs, ..serial }) {
            Ok(par) => {
                let secs = start.elapsed().as_secs_f64();
                c.check(par.labels == grid.labels, || format!("--jobs {jobs} changed the labels"));
                speed = format!("{jobs} jobs {secs:.2}s, speedup {:.2}", serial_secs / secs);
            }
            Err(e) => c.fail(e.to_string()),
        }
    }

    let fast = QuasiHomogeneousCubic::new(2.0).expect("d != 0");
    match rasterize_2d(&fast.map(), rect, n, n, &origin, &RasterOptions { jobs, ..serial }) {
        Ok(g) => {
            let mut bad = 0;
            for j in 0..n {
                for i in 0..n {
                    let [x, y] = g.cell_center(i, j);
                    let l = g.label(i, j);
                    if x != 0.0 && y != 0.0 && l.is_decided() && l != CellLabel::Escaped {
                        bad += 1;
                    }
                }
            }
            c.check(bad == 0, || format!("d = 2: {bad} decided off-axis cells not escaped"));
            c.note(format!("d = 2: {} of {} cells escaped", g.count(CellLabel::Escaped), n * n));
        }
        Err(e) => c.fail(e.to_string()),
    }
    c.note(format!(
        "d = 0.8: {} origin / {} escaped / {} undecided; {} checked, {} mismatches ({:.3}%), {} in margin; serial {serial_secs:.2}s; {speed}",
        grid.count(CellLabel::Attractor(0)),
        grid.count(CellLabel::Escaped),
        grid.count(CellLabel::Undecided),
        rep.checked,
        rep.mismatches,
        100.0 * rep.mismatch_fraction,
        rep.excluded,
    ));
    c
}

fn zero_product_fibers(opts: &SuiteOptions) -> Checks {
    let mut c = Checks::default();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ 0x2e0);
    let cases = [("u - 1", FiberOutcome::Periodic { period: 6 }), ("u + 1", FiberOutcome::Periodic { period: 3 }), ("u + 0.5", FiberOutcome::ToZero), ("u - 0.5", FiberOutcome::ToZero), ("u + 2", FiberOutcome::Unbounded), ("u - 2", FiberOutcome::Unbounded)];
    let mut count = 0;
    for (g, outcome) in cases {
        let m = MultiplicativeRecurrence::new(3, ScalarFn::parse(g).expect("valid expression")).expect("k = 3");
        c.check(m.zero_fiber_outcome().ok() == Some(outcome), || format!("g = {g}: predicted {:?}", m.zero_fiber_outcome()));
        let rec = m.recurrence();
        for _ in 0..20 {
            count += 1;
            let mut init: Vec<f64> = (0..3).map(|_| rng.gen_range(-9i32..=9) as f64).collect();
            init[rng.gen_range(0..3)] = 0.0;
            let tag = format!("g = {g}, start {init:?}");
            match outcome {
                FiberOutcome::Periodic { period } => {
                    let xs = rec.run(&init, opts_budget(60));
                    let exact = (period..xs.len()).all(|n| xs[n] == xs[n - period]);
                    c.check(exact, || format!("{tag}: not exactly {period}-periodic"));
                }
                FiberOutcome::ToZero => {
                    let xs = rec.run(&init, opts_budget(600));
                    let tail = xs[xs.len() - 3..].iter().fold(0.0f64, |m, x| m.max(x.abs()));
                    c.check(tail < 1e-12, || format!("{tag}: |x| = {tail:e} after 600 steps"));
                }
                FiberOutcome::Unbounded => {
                    let nonzero = init.iter().any(|&x| x != 0.0);
                    let (_, reason) = rec.run_traced(&init, IterateOptions { budget: 1000, escape_radius: 1e6, record: true });
                    let escaped = matches!(reason, Termination::Escaped { .. });
                    c.check(escaped == nonzero, || format!("{tag}: {reason}"));
                }
                FiberOutcome::Undetermined => {}
            }
        }
    }
    c.note(format!("{count} integer starts with a zero entry, 6 choices of g"));
    c
}

fn additive_limits(_: &SuiteOptions) -> Checks {
    let mut c = Checks::default();
    let g = ScalarFn::parse("(u+1)/2").expect("valid expression");
    let opts = LimitOptions::default();
    let init = [0.3, 0.2];

    let half = AdditiveRecurrence::new(0.5, g.clone());
    match classify_family("additive", &half, &init, None, &opts) {
        Ok(r) => {
            let s = &r.subsystems[0];
            let ell = s.limit.unwrap_or(f64::NAN);
            c.check(s.regime == Regime::GlobalAttractor, || format!("b = 1/2: regime {:?}", s.regime));
            c.check(close(ell, 2.0 / 3.0, 1e-9), || format!("b = 1/2: limit {ell}"));
            let xs = half.recurrence().run(&init, opts_budget(1000));
            c.check(close(xs[1000], 2.0 / 3.0, 1e-9), || format!("b = 1/2: raw x = {}", xs[1000]));
            c.note(format!("b = 1/2 limit {ell}"));
        }
        Err(e) => c.fail(format!("b = 1/2: {e}")),
    }

    let one = AdditiveRecurrence::new(1.0, g.clone());
    match classify_family("additive", &one, &init, None, &opts) {
        Ok(r) => {
            let s = &r.subsystems[0];
            c.check(s.regime == Regime::TwoPeriodicFiber, || format!("b = 1: regime {:?}", s.regime));
            match (s.limit_even, s.limit_odd) {
                (Some(le), Some(lo)) => {
                    c.check(close(le + lo, r.u_star, 1e-6) && close(r.u_star, 1.0, 1e-12), || {
                        format!("b = 1: {le} + {lo} vs u* = {}", r.u_star)
                    });
                    c.note(format!("b = 1 limits {le:.9} + {lo:.9}"));
                }
                _ => c.fail("b = 1: no even/odd limits"),
            }
            let xs = one.recurrence().run(&init, opts_budget(2001));
            let sum = xs[2000] + xs[2001];
            c.check(close(sum, 1.0, 1e-6), || format!("b = 1: raw x(2n) + x(2n+1) = {sum}"));
        }
        Err(e) => c.fail(format!("b = 1: {e}")),
    }

    let minus = AdditiveRecurrence::new(-1.0, g);
    let (_, reason) =
        minus.recurrence().run_traced(&init, IterateOptions { budget: 3_000_000, escape_radius: 1e6, record: false });
    c.check(matches!(reason, Termination::Escaped { .. }), || format!("b = -1: {reason}"));
    c.note(format!("b = -1: {reason}"));
    c
}

fn property_suites(opts: &SuiteOptions) -> Checks {
    const N: usize = 100;
    let mut c = Checks::default();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ 0x9e0);

    // fiber preservation: the u column never depends on x
    for i in 0..N {
        let (q, r) = (rng.gen_range(-0.9..0.9), rng.gen_range(-0.5..0.5));
        let (a0, a1, b0, b1) = (rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0), rng.gen_range(-1.5..1.5), rng.gen_range(-1.0..1.0));
        let phi = ScalarFn::builtin("phi", move |u| q * u + r * u * u);
        let map = TriangularMap::new(
            ScalarFn::builtin("f0", move |u| a0 + a1 * u),
            ScalarFn::builtin("f1", move |u| b0 + b1 * u),
            phi.clone(),
        );
        let (x0, u0) = (rng.gen_range(-5.0..5.0), rng.gen_range(-0.5..0.5));
        let t = iterate(&map, [x0, u0], IterateOptions { budget: 50, escape_radius: f64::INFINITY, record: true });
        let mut u = u0;
        for s in &t.states {
            c.check(s[1] == u, || format!("fiber instance {i}: u drifted"));
            u = phi.eval(u).unwrap();
        }
        let d = [0.75, 0.5, 2.0][i % 3];
        let qh = QuasiHomogeneous::new(1, -1, ScalarFn::constant(d), ScalarFn::constant(0.5)).expect("coprime weights");
        let psi = qh.fiber_map();
        let mut s = [rng.gen_range(-64i32..64) as f64 / 8.0, rng.gen_range(-64i32..64) as f64 / 8.0];
        let mut w = qh.fiber_coordinate(s[0], s[1]);
        for _ in 0..20 {
            s = qh.map().step(s).unwrap();
            w = psi.eval(w).unwrap();
            c.check(qh.fiber_coordinate(s[0], s[1]) == w, || format!("quasi-homogeneous instance {i}: fiber drifted"));
        }
    }

    // regime-C pairing
    for i in 0..N {
        let f0s = rng.gen_range(-2.0..2.0);
        let (x0, u0) = (rng.gen_range(-3.0..3.0), rng.gen_range(-0.5..0.5));
        let m = TriangularMap::new(
            ScalarFn::builtin("f0", move |u| f0s + u),
            ScalarFn::builtin("f1", |u| -1.0 + u * u),
            ScalarFn::linear(0.5),
        );
        let cert = auto_certificate(&m, 0.0);
        match estimate_limit(&m, [x0, u0], 0.0, cert.as_ref(), &LimitOptions::default()) {
            Ok(r) => match (r.limit_even, r.limit_odd, r.error_bound) {
                (Some(le), Some(lo), Some(e)) => {
                    c.check(r.regime == Regime::TwoPeriodicFiber, || format!("pairing {i}: regime {:?}", r.regime));
                    c.check((le + lo - f0s).abs() <= 2.0 * e.max(1e-12), || format!("pairing {i}: {le} + {lo} vs {f0s}"));
                }
                _ => c.fail(format!("pairing {i}: missing limits")),
            },
            Err(e) => c.fail(format!("pairing {i}: {e}")),
        }
    }

    // reduction interleaving, exact on dyadic states
    for i in 0..N {
        let k = 2 + i % 3;
        let g = match rng.gen_range(0..3) {
            0 => ScalarFn::builtin("sgn", |u: f64| if u > 0.0 { 0.5 } else { -2.0 }),
            1 => ScalarFn::builtin("step", |u: f64| if u.abs() > 1.0 { 0.5 } else { -1.0 }),
            _ => ScalarFn::builtin("tri", |u: f64| if u < -1.0 { 2.0 } else if u < 1.0 { -0.5 } else { 1.0 }),
        };
        let m = MultiplicativeRecurrence::new(k, g).expect("k >= 2");
        let init: Vec<f64> = (0..k).map(|_| rng.gen_range(-8i32..8) as f64 / 4.0).collect();
        let raw = m.recurrence().run(&init, opts_budget(60 - k));
        match m.reduce(&init).map(|r| r.interleave(60)) {
            Ok(Ok(red)) => c.check(red == raw, || format!("interleave {i}: k = {k}, start {init:?}")),
            Ok(Err(e)) => c.fail(format!("interleave {i}: {e}")),
            Err(e) => c.fail(format!("interleave {i}: {e}")),
        }
    }

    // rigorous bounds survive 10x longer runs
    for i in 0..N {
        let (b, q) = (rng.gen_range(0.1..2.0), rng.gen_range(0.2..0.8));
        let (x0, u0) = (rng.gen_range(-5.0..5.0), rng.gen_range(-0.2..0.2));
        let m = TriangularMap::new(
            ScalarFn::builtin("f0", |u| u * u),
            ScalarFn::builtin("f1", move |u| 1.0 + b * u),
            ScalarFn::linear(q),
        );
        let Some(cert) = auto_certificate(&m, 0.0) else {
            c.fail(format!("soundness {i}: no certificate"));
            continue;
        };
        let opts = LimitOptions { tol: 1e-6, ..Default::default() };
        match estimate_limit(&m, [x0, u0], 0.0, Some(&cert), &opts) {
            Ok(r) if r.rigorous => {
                let bound = r.error_bound.unwrap_or(0.0);
                let n = r.iterations;
                let t = iterate(&m, [x0, u0], IterateOptions { budget: 11 * n.max(1), escape_radius: f64::INFINITY, record: true });
                let xn = t.states[n][0];
                let worst = t.states[n..].iter().map(|s| (s[0] - xn).abs()).fold(0.0, f64::max);
                c.check(worst <= bound, || format!("soundness {i}: moved {worst:e} > bound {bound:e}"));
            }
            Ok(_) => c.fail(format!("soundness {i}: bound not rigorous")),
            Err(e) => c.fail(format!("soundness {i}: {e}")),
        }
    }

    // parser round trip
    for i in 0..N {
        let e = random_expr(&mut rng, 6);
        let printed = e.to_string();
        match crate::expr::parse(&printed, &["u"]) {
            Ok(back) => c.check(back == e, || format!("round trip {i}: {printed}")),
            Err(err) => c.fail(format!("round trip {i}: {printed}: {err}")),
        }
    }
    c.note(format!("{N} seeded instances each: fiber preservation (two kinds), regime-C pairing, interleaving, bound soundness, parser round trip"));
    c
}

fn random_expr(rng: &mut ChaCha8Rng, depth: usize) -> Expr {
    if depth == 0 || rng.gen_bool(0.3) {
        return match rng.gen_range(0..3) {
            0 => Expr::Const(rng.gen_range(0.0..1e6)),
            1 => Expr::Const(rng.gen_range(0u32..1000) as f64),
            _ => Expr::Var("u".into()),
        };
    }
    if rng.gen_bool(0.3) {
        let op = [UnaryOp::Neg, UnaryOp::Abs, UnaryOp::Ln, UnaryOp::Exp, UnaryOp::Sqrt][rng.gen_range(0..5)];
        Expr::Unary(op, Box::new(random_expr(rng, depth - 1)))
    } else {
        let op = [BinaryOp::Add, BinaryOp::Sub, BinaryOp::Mul, BinaryOp::Div, BinaryOp::Pow][rng.gen_range(0..5)];
        Expr::Binary(op, Box::new(random_expr(rng, depth - 1)), Box::new(random_expr(rng, depth - 1)))
    }
}
