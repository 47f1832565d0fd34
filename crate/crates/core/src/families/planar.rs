//! Planar families: a power perturbation with an invariant curve, and
//! quasi-homogeneous maps `(x p(w), y q(w))` with `w = x^-beta y^alpha`.

use std::sync::Arc;

use serde::Serialize;
use serde_json::json;

use super::{expect_len, ipow, names, FamilyError, Orbit, PlanarSystem, Reduction, System};
use crate::expr::{PlanarFn, ScalarFn};
use crate::maps::{iterate, IterateOptions, PlanarMap, State, TriangularMap};

/// `x' = mu x + a u^j x^l`, `u' = lambda u`.
#[derive(Debug, Clone, Copy)]
pub struct PowerPerturbation {
    pub lambda: f64,
    pub mu: f64,
    pub a: f64,
    pub j: u32,
    pub l: u32,
}

impl PowerPerturbation {
    pub fn new(lambda: f64, mu: f64, a: f64, j: u32, l: u32) -> Result<Self, FamilyError> {
        if a == 0.0 || l <= 1 || j == 0 {
            return Err(FamilyError::Degenerate("need a != 0, j >= 1 and l >= 2".into()));
        }
        if !(lambda.abs() < 1.0) || !(mu.abs() <= 1.0) {
            return Err(FamilyError::Degenerate("need |lambda| < 1 and |mu| <= 1".into()));
        }
        Ok(PowerPerturbation { lambda, mu, a, j, l })
    }

    pub fn map(&self) -> PlanarMap {
        let PowerPerturbation { lambda, mu, a, j, l } = *self;
        PlanarMap::new(
            PlanarFn::builtin(format!("{mu}*x + {a}*u^{j}*x^{l}"), move |x, u| Ok(mu * x + a * ipow(u, j) * ipow(x, l))),
            PlanarFn::builtin(format!("{lambda}*u"), move |_, u| Ok(lambda * u)),
        )
    }

    /// `alpha = -j/(l-1)`.
    pub fn alpha(&self) -> f64 {
        -(self.j as f64) / (self.l as f64 - 1.0)
    }

    /// Growth factor `lambda^alpha` of `x` along the invariant curve.
    pub fn growth(&self) -> Result<f64, FamilyError> {
        let alpha = self.alpha();
        let g = if alpha.fract() == 0.0 { self.lambda.powi(alpha as i32) } else { self.lambda.powf(alpha) };
        if g.is_finite() {
            Ok(g)
        } else {
            Err(FamilyError::Degenerate(format!("lambda^alpha is not real for lambda = {}", self.lambda)))
        }
    }

    /// Level `(lambda^alpha - mu)/a` of `u^j x^(l-1)` on the invariant curve.
    pub fn curve_level(&self) -> Result<f64, FamilyError> {
        Ok((self.growth()? - self.mu) / self.a)
    }

    /// `u^j x^(l-1)`.
    pub fn curve_value(&self, [x, u]: State) -> f64 {
        ipow(u, self.j) * ipow(x, self.l - 1)
    }

    /// The point of the invariant curve above `u0` (the positive branch when
    /// `l - 1` is even).
    pub fn point_on_curve(&self, u0: f64) -> Result<State, FamilyError> {
        let t = self.curve_level()? / ipow(u0, self.j);
        let m = self.l - 1;
        let x = if m == 1 {
            t
        } else if m % 2 == 1 {
            t.signum() * t.abs().powf(1.0 / m as f64)
        } else if t >= 0.0 {
            t.powf(1.0 / m as f64)
        } else {
            return Err(FamilyError::Degenerate(format!("no real point on the curve above u = {u0}")));
        };
        if !x.is_finite() {
            return Err(FamilyError::Degenerate(format!("no finite point on the curve above u = {u0}")));
        }
        Ok([x, u0])
    }

    /// `(lambda^alpha)^n x0`, `lambda^n u0`: the orbit of a point on the curve.
    pub fn curve_orbit(&self, [x0, u0]: State, n: u32) -> Result<State, FamilyError> {
        let g = self.growth()?;
        Ok([ipow(g, n) * x0, ipow(self.lambda, n) * u0])
    }

    /// Orbits on the curve are unbounded exactly when `|lambda^alpha| > 1`.
    pub fn curve_unbounded(&self) -> Result<bool, FamilyError> {
        Ok(self.growth()?.abs() > 1.0)
    }
}

impl System for PowerPerturbation {
    fn initial_names(&self) -> Vec<String> {
        names(&["x0", "u0"])
    }

    fn orbit(&self, init: &[f64], opts: IterateOptions) -> Result<Orbit, FamilyError> {
        expect_len(&self.initial_names(), init)?;
        Ok(Orbit::from_trace(iterate(&self.map(), [init[0], init[1]], opts), ["x", "u"]))
    }

    fn analysis(&self, init: &[f64]) -> serde_json::Value {
        let level = self.curve_level().ok();
        let on_curve = match (level, init) {
            (Some(c), [x, u]) => Some((self.curve_value([*x, *u]) - c).abs() <= 1e-12 * c.abs().max(1.0)),
            _ => None,
        };
        json!({
            "alpha": self.alpha(),
            "curve_level": level,
            "growth_on_curve": self.growth().ok(),
            "start_on_curve": on_curve,
            "curve_orbits_unbounded": self.curve_unbounded().ok(),
        })
    }
}

/// `(x, y) -> (x p(w), y q(w))` with `w = x^-beta y^alpha`, `alpha > 0 > beta`.
#[derive(Debug, Clone)]
pub struct QuasiHomogeneous {
    pub alpha: u32,
    pub beta: i32,
    pub p: ScalarFn,
    pub q: ScalarFn,
}

fn gcd(a: u32, b: u32) -> u32 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

impl QuasiHomogeneous {
    pub fn new(alpha: u32, beta: i32, p: ScalarFn, q: ScalarFn) -> Result<Self, FamilyError> {
        if alpha == 0 || beta >= 0 {
            return Err(FamilyError::Degenerate("weights need alpha > 0 > beta".into()));
        }
        if gcd(alpha, beta.unsigned_abs()) != 1 {
            return Err(FamilyError::Degenerate(format!("weights ({alpha}, {beta}) are not coprime")));
        }
        Ok(QuasiHomogeneous { alpha, beta, p, q })
    }

    /// `w = x^-beta y^alpha` by repeated multiplication, so signs of odd
    /// powers survive.
    pub fn fiber_coordinate(&self, x: f64, y: f64) -> f64 {
        ipow(x, self.beta.unsigned_abs()) * ipow(y, self.alpha)
    }

    pub fn map(&self) -> PlanarMap {
        let (a, b) = (self.alpha, self.beta.unsigned_abs());
        let (p, q) = (self.p.clone(), self.q.clone());
        let name_x = format!("x*({})(x^{b} y^{a})", self.p);
        let name_y = format!("y*({})(x^{b} y^{a})", self.q);
        PlanarMap::new(
            PlanarFn::builtin(name_x, move |x, y| Ok(x * p.eval(ipow(x, b) * ipow(y, a))?)),
            PlanarFn::builtin(name_y, move |x, y| Ok(y * q.eval(ipow(x, b) * ipow(y, a))?)),
        )
    }

    /// `psi(w) = w p(w)^-beta q(w)^alpha`.
    pub fn fiber_map(&self) -> ScalarFn {
        let (a, b) = (self.alpha, self.beta.unsigned_abs());
        let (p, q) = (self.p.clone(), self.q.clone());
        ScalarFn::builtin_checked(format!("u*({})^{b}*({})^{a}", self.p, self.q), move |u| {
            Ok(u * ipow(p.eval(u)?, b) * ipow(q.eval(u)?, a))
        })
    }

    /// `x' = x p(w)`, `w' = psi(w)`.
    pub fn x_side(&self) -> TriangularMap {
        TriangularMap::multiplicative(self.p.clone(), self.fiber_map())
    }

    /// `y' = y q(w)`, `w' = psi(w)`.
    pub fn y_side(&self) -> TriangularMap {
        TriangularMap::multiplicative(self.q.clone(), self.fiber_map())
    }

    /// `|p(0)| < 1` and `|q(0)| < 1`: then every start whose `w` lies in the
    /// basin of `0` for `psi` tends to the origin.
    pub fn origin_attracts(&self) -> Result<bool, FamilyError> {
        Ok(self.p.eval(0.0)?.abs() < 1.0 && self.q.eval(0.0)?.abs() < 1.0)
    }

    fn planar_system(&self) -> PlanarSystem {
        let this = self.clone();
        PlanarSystem {
            map: self.map(),
            phi: self.fiber_map(),
            fiber: Arc::new(move |x, y| this.fiber_coordinate(x, y)),
        }
    }
}

impl System for QuasiHomogeneous {
    fn initial_names(&self) -> Vec<String> {
        names(&["x0", "y0"])
    }

    fn orbit(&self, init: &[f64], opts: IterateOptions) -> Result<Orbit, FamilyError> {
        expect_len(&self.initial_names(), init)?;
        Ok(Orbit::from_trace(iterate(&self.map(), [init[0], init[1]], opts), ["x", "y"]))
    }

    fn reduce(&self, init: &[f64]) -> Result<Reduction, FamilyError> {
        expect_len(&self.initial_names(), init)?;
        let w0 = self.fiber_coordinate(init[0], init[1]);
        Ok(Reduction::single(self.x_side(), [init[0], w0], None))
    }

    fn planar(&self) -> Option<PlanarSystem> {
        Some(self.planar_system())
    }

    fn analysis(&self, init: &[f64]) -> serde_json::Value {
        json!({
            "w0": (init.len() == 2).then(|| self.fiber_coordinate(init[0], init[1])),
            "origin_attracts_along_basin": self.origin_attracts().ok(),
        })
    }
}

/// `x' = x (4 - x y)/(6 d)`, `y' = d y (1 + x y)`. The product `w = x y`
/// follows `w' = w (4 - w)(1 + w)/6` for every `d`.
#[derive(Debug, Clone)]
pub struct QuasiHomogeneousCubic {
    pub d: f64,
    inner: QuasiHomogeneous,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CubicOutcome {
    ToOrigin,
    Unbounded,
    Undetermined,
}

impl QuasiHomogeneousCubic {
    pub fn new(d: f64) -> Result<Self, FamilyError> {
        if d == 0.0 || !d.is_finite() {
            return Err(FamilyError::Degenerate("d must be non-zero".into()));
        }
        let p = ScalarFn::builtin(format!("(4 - u)/(6*{d})"), move |u| (4.0 - u) / (6.0 * d));
        let q = ScalarFn::builtin(format!("{d}*(1 + u)"), move |u| d * (1.0 + u));
        Ok(QuasiHomogeneousCubic { d, inner: QuasiHomogeneous::new(1, -1, p, q)? })
    }

    /// `w (4 - w)(1 + w)/6` with its derivative.
    pub fn cubic() -> ScalarFn {
        ScalarFn::builtin("u*(4-u)*(1+u)/6", |u| u * (4.0 - u) * (1.0 + u) / 6.0)
            .with_derivative(ScalarFn::builtin("(4 + 6u - 3u^2)/6", |u| (4.0 + 6.0 * u - 3.0 * u * u) / 6.0))
    }

    pub fn map(&self) -> PlanarMap {
        let d = self.d;
        PlanarMap::new(
            PlanarFn::builtin(format!("x*(4 - x*y)/(6*{d})"), move |x, y| Ok(x * (4.0 - x * y) / (6.0 * d))),
            PlanarFn::builtin(format!("{d}*y*(1 + x*y)"), move |x, y| Ok(d * y * (1.0 + x * y))),
        )
    }

    pub fn as_quasi_homogeneous(&self) -> &QuasiHomogeneous {
        &self.inner
    }

    /// Products `x y` of the invariant hyperbolas: the fixed points 0, 1, 2
    /// and the 2-cycle `1 -+ sqrt(13)` of the cubic.
    pub fn invariant_products() -> [f64; 5] {
        let r = 13f64.sqrt();
        [0.0, 1.0, 2.0, 1.0 - r, 1.0 + r]
    }

    /// Predicted fate of `(x0, y0)`: for `2/3 < |d| < 1` the origin attracts
    /// exactly the starts with `x0 y0` in the basin of 0 for the cubic; for
    /// `|d|` outside `[2/3, 1]` every start off the axes escapes.
    pub fn predict(&self, x0: f64, y0: f64) -> CubicOutcome {
        let w0 = x0 * y0;
        let ad = self.d.abs();
        if ad > 2.0 / 3.0 && ad < 1.0 {
            let phi = Self::cubic();
            let mut w = w0;
            for _ in 0..10_000 {
                if w.abs() < 1e-12 {
                    return CubicOutcome::ToOrigin;
                }
                w = phi.eval(w).unwrap_or(f64::NAN);
                if !w.is_finite() {
                    break;
                }
            }
            CubicOutcome::Unbounded
        } else if !(2.0 / 3.0..=1.0).contains(&ad) && w0 != 0.0 {
            CubicOutcome::Unbounded
        } else {
            CubicOutcome::Undetermined
        }
    }
}

impl System for QuasiHomogeneousCubic {
    fn initial_names(&self) -> Vec<String> {
        names(&["x0", "y0"])
    }

    fn orbit(&self, init: &[f64], opts: IterateOptions) -> Result<Orbit, FamilyError> {
        expect_len(&self.initial_names(), init)?;
        Ok(Orbit::from_trace(iterate(&self.map(), [init[0], init[1]], opts), ["x", "y"]))
    }

    fn reduce(&self, init: &[f64]) -> Result<Reduction, FamilyError> {
        expect_len(&self.initial_names(), init)?;
        let map = TriangularMap::multiplicative(self.inner.p.clone(), Self::cubic());
        Ok(Reduction::single(map, [init[0], init[0] * init[1]], Some(0.0)))
    }

    fn planar(&self) -> Option<PlanarSystem> {
        Some(PlanarSystem { map: self.map(), phi: Self::cubic(), fiber: Arc::new(|x, y| x * y) })
    }

    fn analysis(&self, init: &[f64]) -> serde_json::Value {
        json!({
            "invariant_products": Self::invariant_products(),
            "prediction": (init.len() == 2).then(|| self.predict(init[0], init[1])),
        })
    }
}
