//! Envelope certificates for convergence on a fiber `{u = u*}` with
//! `|f1(u*)| = 1`, and the Cauchy tail bound they imply.
//!
//! A certificate consists of envelopes `V`, `W` on `[0, eps)` bounding
//! `|f1(u) - f1(u*)|` and `|f0(u) - f0(u*)|` in terms of `|u - u*|`, plus a
//! decay sequence `p_n` dominating `|u_n - u*|`. Checks:
//!
//! * H1: `|f0(u) - f0(u*)| <= W(|u - u*|) <= W_bar`
//! * H2: `|f1(u) - f1(u*)| <= V(|u - u*|) <= V_bar`
//! * H3: `V`, `W` non-decreasing
//! * H4: `S_W = sum W(p_j)` and `S_V = sum V(p_j)` finite
//!
//! H1 to H3 are sampled. H4 is decided by closed-form tails when the
//! envelopes are power terms and the decay is geometric or a power law;
//! otherwise only partial sums are available.

use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::expr::{DomainError, ScalarFn};
use crate::fixed::TOL_H;
use crate::maps::TriangularMap;

/// Default number of terms summed for table decays or custom envelopes.
pub const PARTIAL_SUM_TERMS: usize = 1_000_000;

/// `coef * nu^exponent`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PowerTerm {
    pub coef: f64,
    pub exponent: f64,
}

#[derive(Debug, Clone)]
pub enum Envelope {
    /// Sum of power terms with positive exponents and nonnegative
    /// coefficients; the empty sum is the zero envelope.
    Powers(Vec<PowerTerm>),
    Custom(ScalarFn),
}

impl Envelope {
    pub fn zero() -> Self {
        Envelope::Powers(Vec::new())
    }

    pub fn power(coef: f64, exponent: f64) -> Self {
        Envelope::Powers(vec![PowerTerm { coef, exponent }])
    }

    pub fn linear(coef: f64) -> Self {
        Self::power(coef, 1.0)
    }

    pub fn eval(&self, nu: f64) -> Result<f64, DomainError> {
        match self {
            Envelope::Powers(terms) => Ok(terms.iter().map(|t| t.coef * nu.powf(t.exponent)).sum()),
            Envelope::Custom(f) => f.eval(nu),
        }
    }

    /// `a * self + b * other`, term by term.
    pub fn combine(&self, a: f64, other: &Envelope, b: f64) -> Envelope {
        match (self, other) {
            (Envelope::Powers(s), Envelope::Powers(o)) => {
                let mut terms: Vec<PowerTerm> = Vec::new();
                for (scale, t) in s.iter().map(|t| (a, t)).chain(o.iter().map(|t| (b, t))) {
                    let coef = scale * t.coef;
                    if coef == 0.0 {
                        continue;
                    }
                    match terms.iter_mut().find(|e| e.exponent == t.exponent) {
                        Some(e) => e.coef += coef,
                        None => terms.push(PowerTerm { coef, exponent: t.exponent }),
                    }
                }
                Envelope::Powers(terms)
            }
            _ => {
                let (s, o) = (self.clone(), other.clone());
                Envelope::Custom(ScalarFn::builtin_checked(format!("{a}*({self}) + {b}*({other})"), move |nu| {
                    Ok(a * s.eval(nu)? + b * o.eval(nu)?)
                }))
            }
        }
    }

    fn is_closed_form(&self) -> bool {
        match self {
            Envelope::Powers(terms) => terms.iter().all(|t| t.exponent > 0.0 && t.coef >= 0.0),
            Envelope::Custom(_) => false,
        }
    }
}

impl fmt::Display for Envelope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Envelope::Powers(terms) if terms.is_empty() => f.write_str("0"),
            Envelope::Powers(terms) => {
                for (i, t) in terms.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" + ")?;
                    }
                    write!(f, "{}*nu^{}", t.coef, t.exponent)?;
                }
                Ok(())
            }
            Envelope::Custom(func) => write!(f, "{func}"),
        }
    }
}

/// Decay sequence `p_n`.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Decay {
    /// `c * ratio^n`.
    Geometric { c: f64, ratio: f64 },
    /// `c * n^(-r)` for `n >= 1`, and `p_0 = c`.
    PowerLaw { c: f64, r: f64 },
    Table { values: Vec<f64> },
}

impl Decay {
    pub fn get(&self, n: usize) -> Option<f64> {
        match self {
            Decay::Geometric { c, ratio } => Some(c * ratio.powi(n.min(i32::MAX as usize) as i32)),
            Decay::PowerLaw { c, .. } if n == 0 => Some(*c),
            Decay::PowerLaw { c, r } => Some(c * (n as f64).powf(-r)),
            Decay::Table { values } => values.get(n).copied(),
        }
    }

    /// Decay of the subsequence `p_0, p_2, p_4, ...` (or a sequence
    /// dominating it).
    pub fn every_other(&self) -> Decay {
        match self {
            Decay::Geometric { c, ratio } => Decay::Geometric { c: *c, ratio: ratio * ratio },
            // c (2j)^-r <= c j^-r
            Decay::PowerLaw { c, r } => Decay::PowerLaw { c: *c, r: *r },
            Decay::Table { values } => Decay::Table { values: values.iter().step_by(2).copied().collect() },
        }
    }

    fn len(&self) -> Option<usize> {
        match self {
            Decay::Table { values } => Some(values.len()),
            _ => None,
        }
    }
}

impl fmt::Display for Decay {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Decay::Geometric { c, ratio } => write!(f, "{c}*{ratio}^n"),
            Decay::PowerLaw { c, r } => write!(f, "{c}*n^-{r}"),
            Decay::Table { values } => write!(f, "table[{}]", values.len()),
        }
    }
}

/// `sum_{j >= n} coef * p_j^exponent` for closed-form decays; `None` when
/// no closed form applies, `Some(inf)` when the series diverges. Power-law
/// tails use the integral bound `m^-s + m^(1-s)/(s-1)` for `sum_{j>=m} j^-s`.
fn power_tail(t: PowerTerm, decay: &Decay, n: usize) -> Option<f64> {
    if t.coef == 0.0 {
        return Some(0.0);
    }
    let a = t.exponent;
    match *decay {
        Decay::Geometric { c, ratio } => {
            let q = ratio.powf(a);
            if q >= 1.0 {
                return Some(f64::INFINITY);
            }
            let first = t.coef * c.powf(a) * ratio.powf(a * n as f64);
            Some(first / (1.0 - q))
        }
        Decay::PowerLaw { c, r } => {
            let s = r * a;
            if s <= 1.0 {
                return Some(f64::INFINITY);
            }
            let scale = t.coef * c.powf(a);
            let m = n.max(1) as f64;
            let tail = m.powf(-s) + m.powf(1.0 - s) / (s - 1.0);
            Some(scale * (tail + if n == 0 { 1.0 } else { 0.0 }))
        }
        Decay::Table { .. } => None,
    }
}

/// Pairwise summation, stable under any worker split.
fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 8 {
        return xs.iter().sum();
    }
    let (a, b) = xs.split_at(xs.len() / 2);
    pairwise_sum(a) + pairwise_sum(b)
}

#[derive(Debug, Clone)]
pub struct EnvelopeSpec {
    pub v: Envelope,
    pub w: Envelope,
    pub epsilon: f64,
    pub decay: Decay,
    /// Upper bounds for `V`, `W` on the window; default `V(eps)`, `W(eps)`.
    pub v_bar: Option<f64>,
    pub w_bar: Option<f64>,
}

impl EnvelopeSpec {
    pub fn new(v: Envelope, w: Envelope, epsilon: f64, decay: Decay) -> Self {
        EnvelopeSpec { v, w, epsilon, decay, v_bar: None, w_bar: None }
    }

    fn closed_form(&self) -> bool {
        self.v.is_closed_form() && self.w.is_closed_form() && !matches!(self.decay, Decay::Table { .. })
    }

    /// Tail `sum_{j >= n} E(p_j)` when closed forms exist.
    fn tail(&self, env: &Envelope, n: usize) -> Option<f64> {
        match env {
            Envelope::Powers(terms) => {
                let mut total = 0.0;
                for t in terms {
                    total += power_tail(*t, &self.decay, n)?;
                }
                Some(total)
            }
            Envelope::Custom(_) => None,
        }
    }

    /// Envelopes for the two-step reduced system `(F0, F1, phi∘phi)`:
    /// `W^ = (1 + C) W + |f0(u*)| V`, `V^ = (1 + C) V` where `C` bounds
    /// `|f1|` on the window, with every other term of the decay. Valid when
    /// `phi` maps the window into itself without increasing `|u - u*|`.
    pub fn two_step(&self, map: &TriangularMap, u_star: f64) -> Result<EnvelopeSpec, FecldError> {
        let f0s = map.f0.eval(u_star)?;
        let mut c: f64 = 0.0;
        for u in window_grid(u_star, self.epsilon, 4096) {
            c = c.max(map.f1.eval(u)?.abs());
        }
        let one_c = 1.0 + c;
        let v = self.v.combine(one_c, &Envelope::zero(), 0.0);
        let w = self.w.combine(one_c, &self.v, f0s.abs());
        Ok(EnvelopeSpec::new(v, w, self.epsilon, self.decay.every_other()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CheckStatus {
    Pass,
    Fail,
    EvidenceOnly,
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub status: CheckStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Witness>,
    #[serde(skip_serializing_if = "String::is_empty")]
    pub note: String,
}

impl Check {
    fn pass() -> Self {
        Check { status: CheckStatus::Pass, witness: None, note: String::new() }
    }

    fn fail(witness: Witness, note: impl Into<String>) -> Self {
        Check { status: CheckStatus::Fail, witness: Some(witness), note: note.into() }
    }
}

/// Concrete data reproducing a failed check.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Witness {
    /// `|f(u) - f(u*)| = lhs > envelope(nu) = rhs` at `u`.
    Point { u: f64, nu: f64, lhs: f64, rhs: f64 },
    /// Envelope decreases between `nu_lo` and `nu_hi`.
    Decrease { nu_lo: f64, nu_hi: f64, lo_value: f64, hi_value: f64 },
    /// The series has no finite closed-form tail (`exponent <= 1`) or its
    /// terms decay like `j^-exponent` with `exponent <= 1` near `j`.
    Divergent { series: String, exponent: f64, index: usize },
    /// `p_index = value` outside `[0, eps]` or increasing.
    DecayOutOfRange { index: usize, value: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    CertifiedByClosedForm,
    NumericallySupported,
    Refuted,
}

#[derive(Debug, Clone, Serialize)]
pub struct EnvelopeDescriptor {
    #[serde(rename = "V")]
    pub v: String,
    #[serde(rename = "W")]
    pub w: String,
    pub decay: Decay,
    #[serde(rename = "V_bar")]
    pub v_bar: f64,
    #[serde(rename = "W_bar")]
    pub w_bar: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct FecldCertificate {
    pub verdict: Verdict,
    pub u_star: f64,
    pub epsilon: f64,
    #[serde(rename = "H1")]
    pub h1: Check,
    #[serde(rename = "H2")]
    pub h2: Check,
    #[serde(rename = "H3")]
    pub h3: Check,
    #[serde(rename = "H4")]
    pub h4: Check,
    #[serde(rename = "S_V")]
    pub s_v: f64,
    #[serde(rename = "S_W")]
    pub s_w: f64,
    pub envelope: EnvelopeDescriptor,
    #[serde(skip)]
    pub spec: EnvelopeSpec,
}

impl FecldCertificate {
    pub fn v_bar(&self) -> f64 {
        self.envelope.v_bar
    }

    pub fn w_bar(&self) -> f64 {
        self.envelope.w_bar
    }

    /// Whether [`cauchy_tail_bound`] is available.
    pub fn has_tails(&self) -> bool {
        self.verdict != Verdict::Refuted && self.spec.closed_form()
    }

    /// Orbit bound `R = W_bar + P S_W + P |x|` with `P = exp(S_V)`, for an
    /// orbit whose fiber coordinate is dominated by the decay from the
    /// state with first coordinate `x` onwards.
    pub fn orbit_bound(&self, x: f64) -> f64 {
        let p = self.s_v.exp();
        self.w_bar() + p * self.s_w + p * x.abs()
    }
}

#[derive(Debug, Error)]
pub enum FecldError {
    #[error("|f1(u*)| = {value} is not within {tol} of 1; the certificate applies only to fibers with |f1(u*)| = 1")]
    Precondition { value: f64, tol: f64 },
    #[error("fiber map is not hyperbolic on the window: sampled sup |phi'| = {mu}")]
    NotHyperbolic { mu: f64 },
    #[error("certificate is refuted")]
    Refuted,
    #[error("tails are not available in closed form; only partial sums were computed")]
    EvidenceOnly,
    #[error("epsilon must be positive")]
    BadEpsilon,
    #[error(transparent)]
    Domain(#[from] DomainError),
}

/// `samples` log-spaced offsets in `[eps 1e-12, eps)`.
fn log_offsets(epsilon: f64, samples: usize) -> Vec<f64> {
    let lo = (epsilon * 1e-12).ln();
    let hi = epsilon.ln();
    (0..samples).map(|i| (lo + (hi - lo) * i as f64 / samples as f64).exp()).collect()
}

/// `[u* - eps, u* + eps]` on a uniform grid including both ends.
fn window_grid(u_star: f64, epsilon: f64, n: usize) -> impl Iterator<Item = f64> {
    (0..=n).map(move |i| u_star - epsilon + 2.0 * epsilon * i as f64 / n as f64)
}

fn slack(a: f64, b: f64) -> f64 {
    4.0 * f64::EPSILON * (a.abs() + b.abs())
}

fn check_envelope(
    f: &ScalarFn,
    env: &Envelope,
    bar: f64,
    u_star: f64,
    offsets: &[f64],
) -> Result<Check, FecldError> {
    let fs = f.eval(u_star)?;
    for &nu in offsets {
        for u in [u_star - nu, u_star + nu] {
            let d = (u - u_star).abs();
            let fu = f.eval(u)?;
            let lhs = (fu - fs).abs();
            let rhs = env.eval(d)?;
            if lhs > rhs + slack(fu, fs) {
                return Ok(Check::fail(Witness::Point { u, nu: d, lhs, rhs }, "envelope inequality violated"));
            }
            if rhs > bar * (1.0 + 1e-12) {
                return Ok(Check::fail(Witness::Point { u, nu: d, lhs: rhs, rhs: bar }, "envelope exceeds its bound"));
            }
        }
    }
    Ok(Check::pass())
}

fn check_monotone(env: &Envelope, offsets: &[f64]) -> Result<Option<Witness>, FecldError> {
    let mut prev = (0.0, env.eval(0.0)?);
    for &nu in offsets {
        let v = env.eval(nu)?;
        if v < prev.1 - 1e-12 * prev.1.abs() {
            return Ok(Some(Witness::Decrease { nu_lo: prev.0, nu_hi: nu, lo_value: prev.1, hi_value: v }));
        }
        prev = (nu, v);
    }
    Ok(None)
}

/// Sum of a series by partial sums, flagging divergence when the terms near
/// the end decay no faster than `j^-1`.
fn partial_sum(
    spec: &EnvelopeSpec,
    env: &Envelope,
    name: &str,
    terms: usize,
) -> Result<(f64, Option<Witness>), FecldError> {
    let limit = spec.decay.len().map_or(terms, |l| l.min(terms));
    let mut vals = Vec::with_capacity(limit);
    for j in 0..limit {
        let p = spec.decay.get(j).expect("index within length");
        // past underflow the remaining terms carry no information
        if p < f64::MIN_POSITIVE && j > 0 {
            break;
        }
        vals.push(env.eval(p)?);
    }
    let n = vals.len();
    let sum = pairwise_sum(&vals);
    if n >= 64 {
        let (a, b) = (vals[n / 2 - 1], vals[n - 1]);
        if a > 0.0 && b > 0.0 {
            let exponent = (a / b).ln() / ((n as f64) / (n / 2) as f64).ln();
            if exponent <= 1.0 {
                return Ok((
                    sum,
                    Some(Witness::Divergent { series: name.to_string(), exponent, index: n - 1 }),
                ));
            }
        }
    }
    Ok((sum, None))
}

/// Checks H1 to H4 for `map` at `u_star` against `env`. `samples` is the
/// number of log-spaced offsets per side.
pub fn check_certificate(
    map: &TriangularMap,
    u_star: f64,
    env: &EnvelopeSpec,
    samples: usize,
) -> Result<FecldCertificate, FecldError> {
    check_certificate_with_terms(map, u_star, env, samples, PARTIAL_SUM_TERMS)
}

/// [`check_certificate`] with an explicit number of partial-sum terms.
pub fn check_certificate_with_terms(
    map: &TriangularMap,
    u_star: f64,
    env: &EnvelopeSpec,
    samples: usize,
    terms: usize,
) -> Result<FecldCertificate, FecldError> {
    if !(env.epsilon > 0.0) {
        return Err(FecldError::BadEpsilon);
    }
    let f1s = map.f1.eval(u_star)?;
    if (f1s.abs() - 1.0).abs() > TOL_H {
        return Err(FecldError::Precondition { value: f1s, tol: TOL_H });
    }
    let samples = samples.max(64);
    let offsets = log_offsets(env.epsilon, samples);
    let v_bar = match env.v_bar {
        Some(b) => b,
        None => env.v.eval(env.epsilon)?,
    };
    let w_bar = match env.w_bar {
        Some(b) => b,
        None => env.w.eval(env.epsilon)?,
    };

    let h1 = check_envelope(&map.f0, &env.w, w_bar, u_star, &offsets)?;
    let mut h2 = check_envelope(&map.f1, &env.v, v_bar, u_star, &offsets)?;
    let v0 = env.v.eval(0.0)?;
    if h2.status == CheckStatus::Pass && v0 != 0.0 {
        h2 = Check::fail(Witness::Point { u: u_star, nu: 0.0, lhs: v0, rhs: 0.0 }, "V(0) must be 0");
    }

    let h3 = match (check_monotone(&env.v, &offsets)?, check_monotone(&env.w, &offsets)?) {
        (Some(w), _) => Check::fail(w, "V decreases"),
        (None, Some(w)) => Check::fail(w, "W decreases"),
        (None, None) => Check::pass(),
    };

    let (h4, s_v, s_w) = check_h4(env, terms)?;

    let checks = [&h1, &h2, &h3, &h4];
    let verdict = if checks.iter().any(|c| c.status == CheckStatus::Fail) {
        Verdict::Refuted
    } else if env.closed_form() && checks.iter().all(|c| c.status == CheckStatus::Pass) {
        Verdict::CertifiedByClosedForm
    } else {
        Verdict::NumericallySupported
    };
    Ok(FecldCertificate {
        verdict,
        u_star,
        epsilon: env.epsilon,
        h1,
        h2,
        h3,
        h4,
        s_v,
        s_w,
        envelope: EnvelopeDescriptor {
            v: env.v.to_string(),
            w: env.w.to_string(),
            decay: env.decay.clone(),
            v_bar,
            w_bar,
        },
        spec: env.clone(),
    })
}

fn check_h4(env: &EnvelopeSpec, terms: usize) -> Result<(Check, f64, f64), FecldError> {
    // p_n must stay in [0, eps] and not increase
    let probe = env.decay.len().unwrap_or(1000).min(1000);
    let mut prev = f64::INFINITY;
    for n in 0..probe {
        let p = env.decay.get(n).expect("within probe length");
        if !(p >= 0.0 && p <= env.epsilon * (1.0 + 1e-12) && p <= prev) {
            let w = Witness::DecayOutOfRange { index: n, value: p };
            return Ok((Check::fail(w, "decay must be non-increasing within [0, eps]"), f64::NAN, f64::NAN));
        }
        prev = p;
    }
    let closed = (env.tail(&env.v, 0), env.tail(&env.w, 0));
    if let (Some(s_v), Some(s_w)) = closed {
        if env.closed_form() {
            for (name, s, e) in [("S_V", s_v, &env.v), ("S_W", s_w, &env.w)] {
                if !s.is_finite() {
                    let exponent = divergent_exponent(e, &env.decay);
                    let w = Witness::Divergent { series: name.into(), exponent, index: 0 };
                    return Ok((Check::fail(w, format!("{name} diverges")), s_v, s_w));
                }
            }
            return Ok((Check::pass(), s_v, s_w));
        }
    }
    let (s_v, wv) = partial_sum(env, &env.v, "S_V", terms)?;
    let (s_w, ww) = partial_sum(env, &env.w, "S_W", terms)?;
    if let Some(w) = wv.or(ww) {
        return Ok((Check::fail(w, "terms decay like a divergent p-series"), s_v, s_w));
    }
    let check = Check {
        status: CheckStatus::EvidenceOnly,
        witness: None,
        note: format!("partial sums over {} terms; convergence not certified", env.decay.len().unwrap_or(terms).min(terms)),
    };
    Ok((check, s_v, s_w))
}

fn divergent_exponent(env: &Envelope, decay: &Decay) -> f64 {
    let Envelope::Powers(terms) = env else { return f64::NAN };
    let r = match decay {
        Decay::PowerLaw { r, .. } => *r,
        _ => return 0.0,
    };
    terms.iter().filter(|t| t.coef != 0.0).map(|t| r * t.exponent).fold(f64::INFINITY, f64::min)
}

/// Bound on `|x_{n+m} - x_n|` for every `m >= 0`, where indices count from
/// the state at which the decay starts to dominate the orbit:
/// `sum_{j>=n} W(p_j) + R sum_{j>=n} V(p_j)`.
pub fn cauchy_tail_bound(cert: &FecldCertificate, r: f64, n: usize) -> Result<f64, FecldError> {
    if cert.verdict == Verdict::Refuted {
        return Err(FecldError::Refuted);
    }
    let spec = &cert.spec;
    if !spec.closed_form() {
        return Err(FecldError::EvidenceOnly);
    }
    let tw = spec.tail(&spec.w, n).ok_or(FecldError::EvidenceOnly)?;
    let tv = spec.tail(&spec.v, n).ok_or(FecldError::EvidenceOnly)?;
    let tv_term = if tv == 0.0 { 0.0 } else { r * tv };
    Ok(tw + tv_term)
}

/// Envelopes from derivative bounds on `[u* - eps, u* + eps]`:
/// `V(nu) = B nu`, `W(nu) = A nu` with `A = sup |f0'|`, `B = sup |f1'|`, and
/// geometric decay `eps mu^n` with `mu = sup |phi'| < 1`. Every orbit that
/// enters the window stays within `eps mu^n` of `u*`.
pub fn hyperbolic_envelope(map: &TriangularMap, u_star: f64, epsilon: f64) -> Result<EnvelopeSpec, FecldError> {
    if !(epsilon > 0.0) {
        return Err(FecldError::BadEpsilon);
    }
    let (mut a, mut b, mut mu): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for u in window_grid(u_star, epsilon, 16384) {
        a = a.max(map.f0.derivative_at(u)?.abs());
        b = b.max(map.f1.derivative_at(u)?.abs());
        mu = mu.max(map.phi.derivative_at(u)?.abs());
    }
    if !(mu < 1.0 - TOL_H) {
        return Err(FecldError::NotHyperbolic { mu });
    }
    // finite-difference rounding must not undercut the true suprema
    let pad = 1.0 + 1e-6;
    let (a, b, mu) = (a * pad, b * pad, (mu * pad).min(0.5 * (1.0 + mu)));
    let env = |c: f64| if c == 0.0 { Envelope::zero() } else { Envelope::linear(c) };
    Ok(EnvelopeSpec::new(env(b), env(a), epsilon, Decay::Geometric { c: epsilon, ratio: mu }))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn power_product(a: f64, b: f64, alpha: f64, lambda: f64) -> TriangularMap {
        TriangularMap::new(
            ScalarFn::constant(0.0),
            ScalarFn::builtin("a+b|u|^alpha", move |u| a + b * u.abs().powf(alpha)),
            ScalarFn::linear(lambda),
        )
    }

    #[test]
    fn geometric_power_envelope_sum() {
        let map = power_product(1.0, 1.0, 1.0, 0.5);
        let env = EnvelopeSpec::new(Envelope::power(1.0, 1.0), Envelope::zero(), 0.6, Decay::Geometric {
            c: 0.5,
            ratio: 0.5,
        });
        let cert = check_certificate(&map, 0.0, &env, 256).unwrap();
        assert_eq!(cert.verdict, Verdict::CertifiedByClosedForm);
        assert_eq!(cert.s_w, 0.0);
        assert!((cert.s_v - 1.0).abs() < 1e-15);
        // B |u0|^alpha / (1 - |lambda|^alpha) for other parameters
        let map = power_product(-1.0, 2.0, 1.5, 0.3);
        let env = EnvelopeSpec::new(Envelope::power(2.0, 1.5), Envelope::zero(), 0.5, Decay::Geometric {
            c: 0.4,
            ratio: 0.3,
        });
        let cert = check_certificate(&map, 0.0, &env, 256).unwrap();
        let oracle: f64 = (0..2000).map(|j| 2.0 * (0.4 * 0.3f64.powi(j)).powf(1.5)).sum();
        assert!((cert.s_v - oracle).abs() < 1e-14);
        assert_eq!(cert.verdict, Verdict::CertifiedByClosedForm);
    }

    #[test]
    fn slow_decay_is_refuted() {
        for (alpha, refuted) in [(0.5, true), (1.0, true), (1.5, false), (2.0, false), (3.0, false)] {
            let map = TriangularMap::new(
                ScalarFn::constant(0.0),
                ScalarFn::builtin("1+|u|^alpha", move |u| 1.0 + u.abs().powf(alpha)),
                ScalarFn::builtin("|u|-u^2", |u| u.abs() - u * u),
            );
            let env = EnvelopeSpec::new(
                Envelope::power(1.0, alpha),
                Envelope::zero(),
                1.0,
                Decay::PowerLaw { c: 1.0, r: 0.99 },
            );
            let cert = check_certificate(&map, 0.0, &env, 128).unwrap();
            assert_eq!(cert.verdict == Verdict::Refuted, refuted, "alpha {alpha}");
            if refuted {
                assert_eq!(cert.h4.status, CheckStatus::Fail);
                assert!(matches!(cert.h4.witness, Some(Witness::Divergent { .. })));
            }
        }
    }

    #[test]
    fn exact_limit_dynamics() {
        let map = TriangularMap::parse("3", "-1", "u/2").unwrap();
        let env = EnvelopeSpec::new(Envelope::zero(), Envelope::zero(), 1.0, Decay::Geometric { c: 1.0, ratio: 0.5 });
        let cert = check_certificate(&map, 0.0, &env, 64).unwrap();
        assert_eq!(cert.verdict, Verdict::CertifiedByClosedForm);
        assert_eq!((cert.s_v, cert.s_w), (0.0, 0.0));
        assert_eq!(cauchy_tail_bound(&cert, 1e9, 0).unwrap(), 0.0);
    }

    #[test]
    fn precondition() {
        let map = TriangularMap::parse("0", "0.5", "u/2").unwrap();
        let env = EnvelopeSpec::new(Envelope::zero(), Envelope::zero(), 1.0, Decay::Geometric { c: 1.0, ratio: 0.5 });
        assert!(matches!(check_certificate(&map, 0.0, &env, 64), Err(FecldError::Precondition { .. })));
    }

    #[test]
    fn witness_reproduces_violation() {
        // |f1(u) - 1| = 2|u| is not bounded by |u|
        let map = TriangularMap::parse("0", "1+2*u", "u/2").unwrap();
        let env = EnvelopeSpec::new(Envelope::linear(1.0), Envelope::zero(), 0.5, Decay::Geometric { c: 0.5, ratio: 0.5 });
        let cert = check_certificate(&map, 0.0, &env, 64).unwrap();
        assert_eq!(cert.verdict, Verdict::Refuted);
        let Some(Witness::Point { u, nu, .. }) = cert.h2.witness else { panic!("expected point witness") };
        let lhs = (map.f1.eval(u).unwrap() - 1.0).abs();
        assert!(lhs > env.v.eval(nu).unwrap());
        assert!(cauchy_tail_bound(&cert, 1.0, 0).is_err());
    }

    #[test]
    fn decreasing_envelope_fails_h3() {
        let map = TriangularMap::parse("0", "1", "u/2").unwrap();
        let v = Envelope::Custom(ScalarFn::parse_in("sqrt(u)*(1-u)^4", "u").unwrap());
        let env = EnvelopeSpec::new(v, Envelope::zero(), 0.9, Decay::Geometric { c: 0.9, ratio: 0.5 });
        let cert = check_certificate(&map, 0.0, &env, 128).unwrap();
        assert_eq!(cert.h3.status, CheckStatus::Fail);
        assert!(matches!(cert.h3.witness, Some(Witness::Decrease { .. })));
    }

    #[test]
    fn harmonic_like_custom_sum_is_flagged() {
        // f1 = 1 - 1/ln|u|: with V(nu) = 1/|ln nu| the terms along geometric
        // decay behave like 1/j
        let f1 = ScalarFn::builtin("1-1/ln|u|", |u| if u == 0.0 { 1.0 } else { 1.0 - 1.0 / u.abs().ln() });
        let map = TriangularMap::new(ScalarFn::constant(0.0), f1, ScalarFn::linear(0.5));
        let v = Envelope::Custom(ScalarFn::builtin("1/|ln nu|", |nu| if nu == 0.0 { 0.0 } else { 1.0 / nu.ln().abs() }));
        let env = EnvelopeSpec::new(v, Envelope::zero(), 0.5, Decay::Geometric { c: 0.5, ratio: 0.5 });
        let cert = check_certificate_with_terms(&map, 0.0, &env, 128, 100_000).unwrap();
        assert_eq!(cert.h1.status, CheckStatus::Pass);
        assert_eq!(cert.h2.status, CheckStatus::Pass);
        assert_eq!(cert.verdict, Verdict::Refuted);
        assert!(matches!(cert.h4.witness, Some(Witness::Divergent { exponent, .. }) if exponent <= 1.0));

        // the automatic linear envelope cannot bound it near 0
        let auto = hyperbolic_envelope(&map, 0.0, 0.25).unwrap();
        let cert = check_certificate(&map, 0.0, &auto, 256).unwrap();
        assert_eq!(cert.verdict, Verdict::Refuted);
        assert_eq!(cert.h2.status, CheckStatus::Fail);
    }

    #[test]
    fn convergent_custom_sum_is_evidence_only() {
        let map = TriangularMap::parse("0", "1+u^2", "u/2").unwrap();
        let v = Envelope::Custom(ScalarFn::parse("u^2").unwrap());
        let env = EnvelopeSpec::new(v, Envelope::zero(), 0.5, Decay::Table { values: (0..100).map(|j| 0.5 * 0.5f64.powi(j)).collect() });
        let cert = check_certificate(&map, 0.0, &env, 64).unwrap();
        assert_eq!(cert.h4.status, CheckStatus::EvidenceOnly);
        assert_eq!(cert.verdict, Verdict::NumericallySupported);
        assert!((cert.s_v - 0.25 / 0.75).abs() < 1e-12);
        assert!(matches!(cauchy_tail_bound(&cert, 1.0, 3), Err(FecldError::EvidenceOnly)));
    }

    #[test]
    fn hyperbolic_constructor() {
        let map = TriangularMap::parse("0", "1", "u/2").unwrap();
        let env = hyperbolic_envelope(&map, 0.0, 1.0).unwrap();
        let Decay::Geometric { c, ratio } = env.decay else { panic!() };
        assert_eq!(c, 1.0);
        assert!((ratio - 0.5).abs() < 1e-5);
        let cert = check_certificate(&map, 0.0, &env, 64).unwrap();
        assert_eq!((cert.s_v, cert.s_w), (0.0, 0.0));

        let map = TriangularMap::parse("0", "1+u", "u/2").unwrap();
        let env = hyperbolic_envelope(&map, 0.0, 1.0).unwrap();
        // sampled suprema of |f1'| and |phi'|
        let Envelope::Powers(ref t) = env.v else { panic!() };
        assert!((t[0].coef - 1.0).abs() < 1e-5);
        let Decay::Geometric { ratio, .. } = env.decay else { panic!() };
        assert!((ratio - 0.5).abs() < 1e-5);
        let cert = check_certificate(&map, 0.0, &env, 256).unwrap();
        assert_eq!(cert.verdict, Verdict::CertifiedByClosedForm);
        // S_V = sum_j 1 * 0.5^j = 2 |u0| with u0 = eps = 1
        assert!((cert.s_v - 2.0).abs() < 1e-4);

        let map = TriangularMap::parse("0", "1", "u-u^2").unwrap();
        assert!(matches!(hyperbolic_envelope(&map, 0.0, 0.1), Err(FecldError::NotHyperbolic { .. })));
    }

    #[test]
    fn tail_examples() {
        let map = TriangularMap::parse("0", "1+u", "u/2").unwrap();
        let env = EnvelopeSpec::new(Envelope::linear(1.0), Envelope::zero(), 0.5, Decay::Geometric { c: 0.5, ratio: 0.5 });
        let cert = check_certificate(&map, 0.0, &env, 64).unwrap();
        for n in 0..40 {
            let b = cauchy_tail_bound(&cert, 10.0, n).unwrap();
            assert!((b - 10.0 * 0.5f64.powi(n as i32)).abs() <= 1e-15 * b.max(1e-300));
        }

        let map = TriangularMap::parse("0", "1+u", "u-u^2").unwrap();
        let env = EnvelopeSpec::new(Envelope::linear(1.0), Envelope::zero(), 1.0, Decay::PowerLaw { c: 1.0, r: 2.0 });
        let cert = check_certificate(&map, 0.0, &env, 64).unwrap();
        let b = cauchy_tail_bound(&cert, 1.0, 100).unwrap();
        let oracle: f64 = (100..2_000_000).map(|j| (j as f64).powi(-2)).sum::<f64>();
        assert!(b >= oracle && b <= 1.0 / 99.0, "{b} vs {oracle}");
        let mut prev = f64::INFINITY;
        for n in [0, 1, 2, 5, 10, 100, 1000, 100_000] {
            let b = cauchy_tail_bound(&cert, 1.0, n).unwrap();
            assert!(b <= prev);
            prev = b;
        }
        assert!(prev < 1e-4);
    }

    #[test]
    fn two_step_envelopes_hold_for_reduced_map() {
        // f1(u*) = -1 fiber; the composed envelopes must pass on F0, F1
        let map = TriangularMap::parse("1+u", "-1+u", "u/2").unwrap();
        let env = hyperbolic_envelope(&map, 0.0, 0.5).unwrap();
        let reduced = env.two_step(&map, 0.0).unwrap();
        let affine = map.two_step().as_triangular();
        let cert = check_certificate(&affine, 0.0, &reduced, 512).unwrap();
        assert_eq!(cert.verdict, Verdict::CertifiedByClosedForm, "{cert:?}");
        let Decay::Geometric { ratio, .. } = reduced.decay else { panic!() };
        assert!((ratio - 0.25).abs() < 1e-5);
    }

    #[test]
    fn json_fields() {
        let map = TriangularMap::parse("0", "1+u", "u/2").unwrap();
        let env = hyperbolic_envelope(&map, 0.0, 0.5).unwrap();
        let cert = check_certificate(&map, 0.0, &env, 64).unwrap();
        let v: serde_json::Value = serde_json::to_value(&cert).unwrap();
        for key in ["verdict", "H1", "H2", "H3", "H4", "S_V", "S_W", "epsilon", "envelope"] {
            assert!(v.get(key).is_some(), "missing {key}");
        }
        assert_eq!(v["verdict"], "certified-by-closed-form");
        assert_eq!(v["H1"]["status"], "pass");
    }
}
