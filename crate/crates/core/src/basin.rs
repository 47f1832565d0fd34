//! Basins of attraction.
//!
//! In one dimension the basin boundary is built from repelling fixed points,
//! 2-cycles and their preimages, generation by generation; every gap between
//! consecutive boundary points is then labeled by iterating its midpoint. In
//! two dimensions each cell center of a rectangle is iterated and labeled.

use std::io::{self, Write};

use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;
use thiserror::Error;

use crate::expr::ScalarFn;
use crate::fixed::{find_fixed_points, find_two_cycles, preimages, FixedPointClass, DEFAULT_GRID, TOL_SEP};
use crate::maps::{PlanarStep, State};

/// Consecutive steps an orbit must stay near an attractor to be labeled.
pub const PERSISTENCE: usize = 8;
pub const DEFAULT_DEPTH: usize = 6;
/// Boundary sets larger than this stop the decomposition early.
const MAX_BOUNDARY: usize = 200_000;
const ORBIT_BUDGET_1D: usize = 100_000;
const ESCAPE_1D: f64 = 1e12;

#[derive(Debug, Error)]
pub enum BasinError {
    #[error("invalid window [{0}, {1}]")]
    Window(f64, f64),
    #[error("invalid raster: {0}")]
    Raster(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", content = "index", rename_all = "kebab-case")]
pub enum Label1D {
    Attractor(usize),
    Escape,
    Undecided,
}

#[derive(Debug, Clone, Serialize)]
pub struct BasinInterval {
    pub lo: f64,
    pub hi: f64,
    pub label: Label1D,
    /// 1 for the interval containing its attractor, `n + 1` when the
    /// midpoint needs `n` steps to land there.
    pub generation: Option<usize>,
}

impl BasinInterval {
    pub fn contains(&self, u: f64) -> bool {
        self.lo < u && u < self.hi
    }

    fn midpoint(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct IntervalDecomposition {
    pub window: (f64, f64),
    pub depth: usize,
    pub attractors: Vec<f64>,
    pub repellers: Vec<f64>,
    /// Outermost 2-cycle `(q-, q+)`, if any.
    pub bounding_cycle: Option<(f64, f64)>,
    /// Sorted boundary points inside the window.
    pub boundary: Vec<f64>,
    /// Boundary points added by each generation; entry 0 holds the repellers
    /// and 2-cycle points.
    pub generations: Vec<Vec<f64>>,
    pub intervals: Vec<BasinInterval>,
    pub warnings: Vec<String>,
}

impl IntervalDecomposition {
    pub fn label_of(&self, u: f64) -> Option<Label1D> {
        self.intervals.iter().find(|iv| iv.contains(u)).map(|iv| iv.label)
    }

    /// Distance from `u` to the nearest boundary point.
    pub fn boundary_distance(&self, u: f64) -> f64 {
        let i = self.boundary.partition_point(|&b| b < u);
        let mut d = f64::INFINITY;
        if i < self.boundary.len() {
            d = d.min(self.boundary[i] - u);
        }
        if i > 0 {
            d = d.min(u - self.boundary[i - 1]);
        }
        d
    }

    /// Basin intervals of `attractor`, in increasing order.
    pub fn basin(&self, attractor: usize) -> Vec<&BasinInterval> {
        self.intervals.iter().filter(|iv| iv.label == Label1D::Attractor(attractor)).collect()
    }

    /// The interval that contains attractor `i`.
    pub fn immediate_basin(&self, i: usize) -> Option<&BasinInterval> {
        self.intervals.iter().find(|iv| iv.label == Label1D::Attractor(i) && iv.generation == Some(1))
    }

    /// Labels of the intervals strictly inside the bounding 2-cycle, left to
    /// right, written `I3`, `J2`, ...: letter by attractor (`I`, `J`, `K`,
    /// ...), number by generation.
    pub fn interlacing(&self) -> Vec<String> {
        let (lo, hi) = self.bounding_cycle.unwrap_or(self.window);
        self.intervals
            .iter()
            .filter(|iv| iv.lo >= lo && iv.hi <= hi)
            .map(|iv| match (iv.label, iv.generation) {
                (Label1D::Attractor(i), Some(g)) => format!("{}{g}", (b'I' + i as u8) as char),
                (Label1D::Attractor(i), None) => format!("{}?", (b'I' + i as u8) as char),
                (Label1D::Escape, _) => "E".to_string(),
                (Label1D::Undecided, _) => "?".to_string(),
            })
            .collect()
    }
}

fn classify_point(phi: &ScalarFn, attractors: &[f64], u0: f64) -> (Label1D, usize) {
    let mut u = u0;
    for n in 0..ORBIT_BUDGET_1D {
        if let Some(i) = attractors.iter().position(|&a| (u - a).abs() <= 1e-9 * a.abs().max(1.0)) {
            return (Label1D::Attractor(i), n);
        }
        match phi.eval(u) {
            Ok(v) if v.is_finite() && v.abs() <= ESCAPE_1D => u = v,
            _ => return (Label1D::Escape, n),
        }
    }
    (Label1D::Undecided, ORBIT_BUDGET_1D)
}

/// Points of `[lo, hi]` where `phi` blows up: a sign change of `phi` across
/// a grid cell whose values grow without bound under bisection.
pub fn find_poles(phi: &ScalarFn, lo: f64, hi: f64, grid: usize) -> Vec<f64> {
    let eval = |u: f64| phi.eval(u).ok().filter(|v| v.is_finite());
    let step = (hi - lo) / grid as f64;
    let mut poles = Vec::new();
    for i in 1..grid {
        let u = lo + step * i as f64;
        if eval(u).is_none() && eval(u - step).is_some() && eval(u + step).is_some() {
            poles.push(u);
        }
    }
    for i in 0..grid {
        let (mut a, mut b) = (lo + step * i as f64, lo + step * (i + 1) as f64);
        let (Some(fa), Some(fb)) = (eval(a), eval(b)) else { continue };
        if fa.signum() == fb.signum() {
            continue;
        }
        let mut fa = fa;
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            if m <= a || m >= b {
                break;
            }
            match eval(m) {
                None => {
                    a = m;
                    b = m;
                    break;
                }
                Some(fm) if fm.signum() == fa.signum() => {
                    a = m;
                    fa = fm;
                }
                Some(_) => b = m,
            }
        }
        let c = 0.5 * (a + b);
        let blows_up = match (eval(a), eval(b)) {
            (Some(x), Some(y)) => x.abs().min(y.abs()) > 1e8 * c.abs().max(1.0),
            _ => true,
        };
        if blows_up {
            poles.push(c);
        }
    }
    poles.sort_by(f64::total_cmp);
    poles
}

/// Steps until `u` enters the interval.
fn steps_into(phi: &ScalarFn, iv: &BasinInterval, mut u: f64, budget: usize) -> Option<usize> {
    for n in 0..budget {
        if iv.contains(u) {
            return Some(n);
        }
        u = phi.eval(u).ok()?;
    }
    None
}

fn insert_sorted(set: &mut Vec<f64>, u: f64) -> bool {
    let i = set.partition_point(|&b| b < u);
    let near = |j: usize| set.get(j).is_some_and(|&b| (b - u).abs() < TOL_SEP);
    if near(i) || (i > 0 && near(i - 1)) {
        return false;
    }
    set.insert(i, u);
    true
}

/// Splits `[lo, hi]` into basin intervals of the attracting fixed points of
/// `phi`, an escape region and undecided gaps, using `depth` generations of
/// preimages of the repelling fixed points and 2-cycles as boundary.
pub fn decompose_1d(phi: &ScalarFn, (lo, hi): (f64, f64), depth: usize) -> Result<IntervalDecomposition, BasinError> {
    if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(BasinError::Window(lo, hi));
    }
    let fixed = find_fixed_points(phi, lo, hi, DEFAULT_GRID);
    let attractors: Vec<f64> = fixed
        .iter()
        .filter(|f| f.class == FixedPointClass::HyperbolicAttractor)
        .map(|f| f.location)
        .collect();
    let repellers: Vec<f64> = fixed
        .iter()
        .filter(|f| f.class != FixedPointClass::HyperbolicAttractor)
        .map(|f| f.location)
        .collect();
    let cycles = find_two_cycles(phi, lo, hi, DEFAULT_GRID);
    let bounding_cycle = cycles.pairs().iter().copied().min_by(|a, b| a.0.total_cmp(&b.0));

    let mut boundary = Vec::new();
    let mut seed = Vec::new();
    let poles = find_poles(phi, lo, hi, DEFAULT_GRID);
    for u in repellers
        .iter()
        .copied()
        .chain(cycles.pairs().iter().flat_map(|&(a, b)| [a, b]))
        .chain(poles.iter().copied())
    {
        if insert_sorted(&mut boundary, u) {
            seed.push(u);
        }
    }
    let mut generations = vec![seed];
    let mut warnings = Vec::new();
    for g in 1..=depth {
        let mut fresh = Vec::new();
        for &target in &generations[g - 1] {
            for p in preimages(phi, target, lo, hi, DEFAULT_GRID) {
                if insert_sorted(&mut boundary, p) {
                    fresh.push(p);
                }
            }
        }
        let empty = fresh.is_empty();
        generations.push(fresh);
        if boundary.len() > MAX_BOUNDARY {
            warnings.push(format!("stopped after generation {g}: {} boundary points", boundary.len()));
            break;
        }
        if empty {
            break;
        }
    }

    let mut cuts = Vec::with_capacity(boundary.len() + 2);
    cuts.push(lo);
    cuts.extend(boundary.iter().copied().filter(|&b| b > lo && b < hi));
    cuts.push(hi);
    let mut intervals: Vec<BasinInterval> = cuts
        .windows(2)
        .map(|w| {
            let mid = 0.5 * (w[0] + w[1]);
            BasinInterval { lo: w[0], hi: w[1], label: classify_point(phi, &attractors, mid).0, generation: None }
        })
        .collect();
    let immediate: Vec<Option<BasinInterval>> = attractors
        .iter()
        .map(|&a| intervals.iter().find(|iv| iv.lo <= a && a <= iv.hi).cloned())
        .collect();
    for iv in &mut intervals {
        if let Label1D::Attractor(i) = iv.label {
            if let Some(home) = &immediate[i] {
                iv.generation = steps_into(phi, home, iv.midpoint(), ORBIT_BUDGET_1D).map(|n| n + 1);
            }
        }
    }
    Ok(IntervalDecomposition {
        window: (lo, hi),
        depth,
        attractors,
        repellers,
        bounding_cycle,
        boundary,
        generations,
        intervals,
        warnings,
    })
}

/// `[x_min, x_max] x [y_min, y_max]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Rect {
    pub x_min: f64,
    pub y_min: f64,
    pub x_max: f64,
    pub y_max: f64,
}

impl Rect {
    pub fn new(x_min: f64, y_min: f64, x_max: f64, y_max: f64) -> Self {
        Rect { x_min, y_min, x_max, y_max }
    }

    pub fn square(half: f64) -> Self {
        Rect::new(-half, -half, half, half)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", content = "index", rename_all = "kebab-case")]
pub enum CellLabel {
    Attractor(u8),
    Escaped,
    Undecided,
    DomainError,
}

impl CellLabel {
    pub fn gray(self) -> u8 {
        match self {
            CellLabel::Attractor(0) => 200,
            CellLabel::Attractor(1) => 120,
            CellLabel::Attractor(_) => 160,
            CellLabel::Escaped => 30,
            CellLabel::Undecided => 80,
            CellLabel::DomainError => 0,
        }
    }

    pub fn rgb(self) -> [u8; 3] {
        match self {
            CellLabel::Attractor(0) => [70, 130, 180],
            CellLabel::Attractor(1) => [220, 120, 40],
            CellLabel::Attractor(_) => [90, 170, 90],
            CellLabel::Escaped => [245, 245, 245],
            CellLabel::Undecided => [128, 128, 128],
            CellLabel::DomainError => [0, 0, 0],
        }
    }

    pub fn is_decided(self) -> bool {
        matches!(self, CellLabel::Attractor(_) | CellLabel::Escaped)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct RasterOptions {
    pub budget: usize,
    pub escape_radius: f64,
    pub tol: f64,
    /// Worker threads; 0 means all available cores.
    pub jobs: usize,
}

impl Default for RasterOptions {
    fn default() -> Self {
        // Orbits may pass close to a repelling fiber and grow for a while
        // before they settle, so the radius is generous.
        RasterOptions { budget: 2000, escape_radius: 1e12, tol: 1e-9, jobs: 0 }
    }
}

/// Labels of a row-major grid; row 0 is the top (`y_max`).
#[derive(Debug, Clone, Serialize)]
pub struct BasinGrid {
    pub rect: Rect,
    pub nx: usize,
    pub ny: usize,
    pub attractors: Vec<State>,
    pub budget: usize,
    pub escape_radius: f64,
    pub tol: f64,
    #[serde(skip)]
    pub labels: Vec<CellLabel>,
}

impl BasinGrid {
    pub fn cell_center(&self, i: usize, j: usize) -> State {
        cell_center(&self.rect, self.nx, self.ny, i, j)
    }

    pub fn label(&self, i: usize, j: usize) -> CellLabel {
        self.labels[j * self.nx + i]
    }

    pub fn count(&self, label: CellLabel) -> usize {
        self.labels.iter().filter(|&&l| l == label).count()
    }

    /// Whether the labels are unchanged by the point reflection of the grid.
    pub fn is_point_symmetric(&self) -> bool {
        let n = self.labels.len();
        (0..n).all(|k| self.labels[k] == self.labels[n - 1 - k])
    }

    /// Binary PGM, one byte per cell (see [`CellLabel::gray`]).
    pub fn write_pgm<W: Write>(&self, mut out: W) -> io::Result<()> {
        write!(out, "P5\n{} {}\n255\n", self.nx, self.ny)?;
        let bytes: Vec<u8> = self.labels.iter().map(|l| l.gray()).collect();
        out.write_all(&bytes)
    }

    /// Binary PPM with the palette of [`CellLabel::rgb`].
    pub fn write_ppm<W: Write>(&self, mut out: W) -> io::Result<()> {
        write!(out, "P6\n{} {}\n255\n", self.nx, self.ny)?;
        let bytes: Vec<u8> = self.labels.iter().flat_map(|l| l.rgb()).collect();
        out.write_all(&bytes)
    }

    /// Bounds, resolution, legend and label counts.
    pub fn sidecar(&self) -> serde_json::Value {
        let mut legend = serde_json::Map::new();
        let mut counts = serde_json::Map::new();
        for (i, a) in self.attractors.iter().enumerate() {
            let l = CellLabel::Attractor(i as u8);
            legend.insert(l.gray().to_string(), json!(format!("attractor {i} at ({}, {})", a[0], a[1])));
            counts.insert(format!("attractor-{i}"), json!(self.count(l)));
        }
        for (l, name) in [
            (CellLabel::Escaped, "escaped"),
            (CellLabel::Undecided, "undecided"),
            (CellLabel::DomainError, "domain-error"),
        ] {
            legend.insert(l.gray().to_string(), json!(name));
            counts.insert(name.to_string(), json!(self.count(l)));
        }
        json!({
            "rect": self.rect,
            "nx": self.nx,
            "ny": self.ny,
            "rows": "top row is y_max",
            "attractors": self.attractors,
            "budget": self.budget,
            "escape_radius": self.escape_radius,
            "tol": self.tol,
            "persistence": PERSISTENCE,
            "legend": legend,
            "counts": counts,
        })
    }
}

fn cell_center(r: &Rect, nx: usize, ny: usize, i: usize, j: usize) -> State {
    let dx = (r.x_max - r.x_min) / nx as f64;
    let dy = (r.y_max - r.y_min) / ny as f64;
    let cx = 0.5 * (r.x_min + r.x_max);
    let cy = 0.5 * (r.y_min + r.y_max);
    [cx + (i as f64 + 0.5 - nx as f64 / 2.0) * dx, cy - (j as f64 + 0.5 - ny as f64 / 2.0) * dy]
}

fn classify_cell<M: PlanarStep + ?Sized>(map: &M, attractors: &[State], start: State, opts: &RasterOptions) -> CellLabel {
    let near = |s: State| {
        attractors.iter().position(|a| (s[0] - a[0]).abs().max((s[1] - a[1]).abs()) < opts.tol)
    };
    let mut s = start;
    let mut streak: Option<(usize, usize)> = None;
    for _ in 0..opts.budget {
        match near(s) {
            Some(i) => {
                let count = match streak {
                    Some((j, c)) if j == i => c + 1,
                    _ => 1,
                };
                if count >= PERSISTENCE {
                    return CellLabel::Attractor(i as u8);
                }
                streak = Some((i, count));
            }
            None => streak = None,
        }
        s = match map.step(s) {
            Ok(next) => next,
            Err(_) => return CellLabel::DomainError,
        };
        let m = s[0].abs().max(s[1].abs());
        if !m.is_finite() || m > opts.escape_radius {
            return CellLabel::Escaped;
        }
    }
    CellLabel::Undecided
}

/// Iterates every cell center of an `nx` by `ny` grid over `rect`. Rows are
/// split among `opts.jobs` threads; the result does not depend on the split.
pub fn rasterize_2d<M: PlanarStep + Sync + ?Sized>(
    map: &M,
    rect: Rect,
    nx: usize,
    ny: usize,
    attractors: &[State],
    opts: &RasterOptions,
) -> Result<BasinGrid, BasinError> {
    if nx < 2 || ny < 2 {
        return Err(BasinError::Raster(format!("need at least 2x2 cells, got {nx}x{ny}")));
    }
    if !(rect.x_min < rect.x_max && rect.y_min < rect.y_max) {
        return Err(BasinError::Raster("empty rectangle".into()));
    }
    if attractors.len() > u8::MAX as usize {
        return Err(BasinError::Raster("too many attractors".into()));
    }
    for (i, a) in attractors.iter().enumerate() {
        if attractors[..i].contains(a) {
            return Err(BasinError::Raster(format!("attractor ({}, {}) listed twice", a[0], a[1])));
        }
    }
    let mut labels = vec![CellLabel::Undecided; nx * ny];
    let fill = |labels: &mut Vec<CellLabel>| {
        labels.par_chunks_mut(nx).enumerate().for_each(|(j, row)| {
            for (i, cell) in row.iter_mut().enumerate() {
                *cell = classify_cell(map, attractors, cell_center(&rect, nx, ny, i, j), opts);
            }
        })
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.jobs)
        .build()
        .map_err(|e| BasinError::Raster(e.to_string()))?;
    pool.install(|| fill(&mut labels));
    Ok(BasinGrid {
        rect,
        nx,
        ny,
        attractors: attractors.to_vec(),
        budget: opts.budget,
        escape_radius: opts.escape_radius,
        tol: opts.tol,
        labels,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ConsistencyReport {
    pub checked: usize,
    pub mismatches: usize,
    /// Decided cells skipped for lying within the margin of a 1-D boundary
    /// or in an undecided 1-D gap.
    pub excluded: usize,
    pub mismatch_fraction: f64,
    /// Up to 10 mismatching cells as `(x, y, u)`.
    pub examples: Vec<[f64; 3]>,
}

/// Compares decided cells of `grid` with the 1-D label of `u_of(x, y)`.
/// `expect` maps a 1-D label to the cell label it implies. About `samples`
/// cells are checked, evenly spaced in row-major order.
pub fn consistency_1d_2d(
    grid: &BasinGrid,
    decomp: &IntervalDecomposition,
    u_of: impl Fn(f64, f64) -> f64,
    expect: impl Fn(Label1D) -> Option<CellLabel>,
    margin: f64,
    samples: usize,
) -> ConsistencyReport {
    let total = grid.labels.len();
    let stride = (total / samples.max(1)).max(1);
    let (mut checked, mut mismatches, mut excluded) = (0, 0, 0);
    let mut examples = Vec::new();
    for k in (0..total).step_by(stride) {
        let label = grid.labels[k];
        if !label.is_decided() {
            continue;
        }
        let [x, y] = grid.cell_center(k % grid.nx, k / grid.nx);
        let u = u_of(x, y);
        let expected = if decomp.boundary_distance(u) < margin
            || u - decomp.window.0 < margin
            || decomp.window.1 - u < margin
        {
            None
        } else {
            decomp.label_of(u).and_then(&expect)
        };
        let Some(expected) = expected else {
            excluded += 1;
            continue;
        };
        checked += 1;
        if expected != label {
            mismatches += 1;
            if examples.len() < 10 {
                examples.push([x, y, u]);
            }
        }
    }
    ConsistencyReport {
        checked,
        mismatches,
        excluded,
        mismatch_fraction: if checked == 0 { 0.0 } else { mismatches as f64 / checked as f64 },
        examples,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::PlanarFn;
    use crate::maps::PlanarMap;

    fn cubic() -> ScalarFn {
        ScalarFn::parse("u*(4-u)*(1+u)/6").unwrap()
    }

    #[test]
    fn contraction_is_one_basin() {
        let d = decompose_1d(&ScalarFn::parse("u/2").unwrap(), (-3.0, 5.0), 6).unwrap();
        assert!(d.boundary.is_empty());
        assert_eq!(d.intervals.len(), 1);
        assert_eq!(d.intervals[0].label, Label1D::Attractor(0));
        assert_eq!(d.attractors, vec![0.0]);
    }

    #[test]
    fn cubic_basins() {
        let d = decompose_1d(&cubic(), (-3.0, 5.0), 6).unwrap();
        let s7 = 7f64.sqrt();
        let s13 = 13f64.sqrt();
        assert_eq!(d.attractors.len(), 2);
        assert!(d.attractors[0].abs() < 1e-12 && (d.attractors[1] - 2.0).abs() < 1e-12);
        let (qm, qp) = d.bounding_cycle.unwrap();
        assert!((qm - (1.0 - s13)).abs() < 1e-9 && (qp - (1.0 + s13)).abs() < 1e-9);
        let i1 = d.immediate_basin(0).unwrap();
        assert!((i1.lo - (1.0 - s7)).abs() < 1e-9 && (i1.hi - 1.0).abs() < 1e-9);
        let j1 = d.immediate_basin(1).unwrap();
        assert!((j1.lo - 1.0).abs() < 1e-9 && (j1.hi - (1.0 + s7)).abs() < 1e-9);
        for iv in d.basin(0).iter().chain(d.basin(1).iter()) {
            assert!(iv.lo >= qm - 1e-9 && iv.hi <= qp + 1e-9);
        }
        // preimage soundness: each new point maps onto an older one
        let phi = cubic();
        for g in 1..d.generations.len() {
            for &e in &d.generations[g] {
                let image = phi.eval(e).unwrap();
                assert!(d.generations[g - 1].iter().any(|&p| (image - p).abs() < 1e-9), "{e}");
            }
        }
        assert!(d.label_of(3.0 * d.window.1).is_none());
        assert_eq!(d.label_of(4.9), Some(Label1D::Escape));
    }

    #[test]
    fn cubic_interlacing() {
        let d = decompose_1d(&cubic(), (-3.0, 5.0), 6).unwrap();
        let order = d.interlacing();
        let centre = order.iter().position(|s| s == "I1").unwrap();
        assert_eq!(order[centre + 1], "J1");
        for step in 1..4 {
            let left = &order[centre - step];
            let right = &order[centre + 1 + step];
            let g = step + 1;
            let (l, r) = if step % 2 == 1 { ("J", "I") } else { ("I", "J") };
            assert_eq!(left, &format!("{l}{g}"));
            assert_eq!(right, &format!("{r}{g}"));
        }
    }

    fn halving() -> PlanarMap {
        PlanarMap::new(PlanarFn::builtin("x/2", |x, _| Ok(x / 2.0)), PlanarFn::builtin("y/2", |_, y| Ok(y / 2.0)))
    }

    #[test]
    fn contraction_raster() {
        let opts = RasterOptions { jobs: 2, ..Default::default() };
        let g = rasterize_2d(&halving(), Rect::square(1.0), 8, 4, &[[0.0, 0.0]], &opts).unwrap();
        assert_eq!(g.count(CellLabel::Attractor(0)), 32);
        assert_eq!(g.cell_center(0, 0), [-0.875, 0.75]);
        let d = decompose_1d(&ScalarFn::parse("u/4").unwrap(), (-2.0, 2.0), 6).unwrap();
        let rep = consistency_1d_2d(&g, &d, |x, y| x * y, |l| match l {
            Label1D::Attractor(0) => Some(CellLabel::Attractor(0)),
            _ => Some(CellLabel::Escaped),
        }, 0.05, usize::MAX);
        assert_eq!(rep.mismatches, 0);
        assert_eq!(rep.checked, 32);
        assert!(rasterize_2d(&halving(), Rect::square(1.0), 1, 6, &[[0.0, 0.0]], &opts).is_err());
    }

    #[test]
    fn raster_independent_of_jobs() {
        let map = PlanarMap::parse("x*(4-x*y)/(6*0.8)", "0.8*y*(1+x*y)").unwrap();
        let base = RasterOptions { budget: 500, ..Default::default() };
        let one = rasterize_2d(&map, Rect::square(4.0), 24, 20, &[[0.0, 0.0]], &RasterOptions { jobs: 1, ..base }).unwrap();
        let three = rasterize_2d(&map, Rect::square(4.0), 24, 20, &[[0.0, 0.0]], &RasterOptions { jobs: 3, ..base }).unwrap();
        assert_eq!(one.labels, three.labels);
        assert!(one.is_point_symmetric());
    }

    #[test]
    fn pgm_layout() {
        let g = BasinGrid {
            rect: Rect::square(1.0),
            nx: 2,
            ny: 2,
            attractors: vec![[0.0, 0.0]],
            budget: 1,
            escape_radius: 1.0,
            tol: 1.0,
            labels: vec![CellLabel::Attractor(0), CellLabel::Escaped, CellLabel::Undecided, CellLabel::DomainError],
        };
        let mut buf = Vec::new();
        g.write_pgm(&mut buf).unwrap();
        assert_eq!(buf, b"P5\n2 2\n255\n\xc8\x1e\x50\x00");
        let side = g.sidecar();
        assert_eq!(side["legend"]["200"], "attractor 0 at (0, 0)");
        assert_eq!(side["counts"]["escaped"], 1);
        let mut ppm = Vec::new();
        g.write_ppm(&mut ppm).unwrap();
        assert_eq!(ppm.len(), "P6\n2 2\n255\n".len() + 12);
    }

    #[test]
    fn poles_become_boundary() {
        let phi = ScalarFn::parse("u/(2+u)").unwrap();
        let poles = find_poles(&phi, -5.0, 5.0, DEFAULT_GRID);
        assert_eq!(poles.len(), 1);
        assert!((poles[0] + 2.0).abs() < 1e-9, "{poles:?}");
        assert!(find_poles(&phi, -5.0, 5.0 + 1.0 / 3.0, DEFAULT_GRID).iter().all(|p| (p + 2.0).abs() < 1e-9));
        assert!(find_poles(&ScalarFn::parse("u^3 - u").unwrap(), -3.0, 3.0, DEFAULT_GRID).is_empty());
        let d = decompose_1d(&phi, (-5.0, 5.0), 3).unwrap();
        // The pole -2 and its preimage -4/3 (phi(-4/3) = -2) split the window.
        assert!(d.boundary.iter().any(|b| (b + 2.0).abs() < 1e-9));
        assert!(d.boundary.iter().any(|b| (b + 4.0 / 3.0).abs() < 1e-9));
        assert!(d.intervals.iter().all(|iv| iv.label == Label1D::Attractor(0)));
    }
}
