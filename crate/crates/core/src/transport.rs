//! Exact solutions of `∂_t u + H(t)·∇u = 0` with boundary data `g`, by the
//! method of characteristics: `u` is constant along `s ↦ x − X(t) + X(s)`,
//! where `X(t) = ∫_0^t H`.

use std::f64::consts::PI;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{BoundaryGrid, Domain, Point, QuadratureGrid};
use crate::quadrature::{weighted_sum, TimeGrid};
use crate::velocity::{FieldKind, VelocityField};

/// Bisection tolerance (in time) for boundary entry times.
pub const ENTRY_TIME_TOL: f64 = 1e-12;
const TABLE_CELLS: usize = 2048;
/// Target cell width of the Hermite displacement table.
const HERMITE_CELL: f64 = 1e-3;

/// Smooth spatial profiles used as initial data and manufactured solutions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Profile {
    Zero,
    Constant(f64),
    /// `slope·x + offset`.
    Linear { slope: Point, offset: f64 },
    /// `amplitude · exp(−|x − center|² / width²)`.
    Gaussian { center: Point, width: f64, amplitude: f64 },
    /// `exp(1 − 1/(1 − |(x − center)/radius|²))` inside the disk, 0 outside.
    Bump { center: Point, radius: f64 },
    /// `amplitude · cos(k·x + phase)`.
    Cosine { wavevector: Point, phase: f64, amplitude: f64 },
}

impl Profile {
    pub fn eval(&self, x: &Point) -> f64 {
        match self {
            Profile::Zero => 0.0,
            Profile::Constant(c) => *c,
            Profile::Linear { slope, offset } => slope.dot(x) + offset,
            Profile::Gaussian { center, width, amplitude } => {
                amplitude * (-(x - center).norm_squared() / (width * width)).exp()
            }
            Profile::Bump { center, radius } => {
                let r2 = (x - center).norm_squared() / (radius * radius);
                if r2 < 1.0 {
                    (1.0 - 1.0 / (1.0 - r2)).exp()
                } else {
                    0.0
                }
            }
            Profile::Cosine { wavevector, phase, amplitude } => {
                amplitude * (wavevector.dot(x) + phase).cos()
            }
        }
    }

    /// Spatial gradient (used for residual checks).
    pub fn gradient(&self, x: &Point) -> Point {
        match self {
            Profile::Zero | Profile::Constant(_) => Point::zeros(),
            Profile::Linear { slope, .. } => *slope,
            Profile::Gaussian { center, width, .. } => {
                -2.0 * (x - center) / (width * width) * self.eval(x)
            }
            Profile::Bump { center, radius } => {
                let r2 = (x - center).norm_squared() / (radius * radius);
                if r2 < 1.0 {
                    let d = 1.0 - r2;
                    -2.0 * (x - center) / (radius * radius * d * d) * self.eval(x)
                } else {
                    Point::zeros()
                }
            }
            Profile::Cosine { wavevector, phase, amplitude } => {
                -amplitude * (wavevector.dot(x) + phase).sin() * wavevector
            }
        }
    }
}

/// Domain, field and the spatial grids a family of solutions shares.
#[derive(Debug, Clone, PartialEq)]
pub struct Discretization {
    pub domain: Domain,
    pub field: VelocityField,
    pub interior: QuadratureGrid,
    pub boundary: BoundaryGrid,
}

impl Discretization {
    /// Interior and boundary grids at resolution `h`.
    pub fn new(domain: Domain, field: VelocityField, h: f64) -> Result<Arc<Self>> {
        if domain.dimension() == 1 {
            let probe = (0..=64).map(|k| field.eval(field.horizon() * k as f64 / 64.0).y.abs());
            if probe.fold(0.0, f64::max) > 0.0 {
                return Err(Error::InvalidField("a 1D domain needs a field along the x axis".into()));
            }
        }
        let interior = domain.interior_grid(h)?;
        let boundary = domain.boundary_grid(h)?;
        Ok(Arc::new(Self { domain, field, interior, boundary }))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Provenance {
    Manufactured,
    InitialBoundary,
    Counterexample,
    /// Built from an arbitrary rule; not necessarily a solution.
    Synthetic,
}

/// Samples of `u` on the interior and boundary grids at every time sample.
#[derive(Debug, Clone)]
pub struct SolutionField {
    setup: Arc<Discretization>,
    times: TimeGrid,
    interior: Vec<f64>,
    boundary: Vec<f64>,
    residual: Option<Vec<f64>>,
    provenance: Provenance,
    warnings: Vec<String>,
}

impl SolutionField {
    /// Tabulate an arbitrary rule `u(x, t)` with optional residual `Pu(x, t)`.
    pub fn from_fn<U, R>(
        setup: Arc<Discretization>,
        times: TimeGrid,
        u: U,
        residual: Option<R>,
        provenance: Provenance,
    ) -> Result<Self>
    where
        U: Fn(&Point, f64) -> f64 + Sync,
        R: Fn(&Point, f64) -> f64 + Sync,
    {
        check_times(&setup.field, &times)?;
        let tabulate = |nodes: &[Point], f: &(dyn Fn(&Point, f64) -> f64 + Sync)| -> Vec<f64> {
            times
                .times()
                .par_iter()
                .flat_map_iter(|&t| nodes.iter().map(move |x| f(x, t)))
                .collect()
        };
        let interior = tabulate(setup.interior.nodes(), &u);
        let boundary = tabulate(setup.boundary.nodes(), &u);
        let residual = residual.map(|r| tabulate(setup.interior.nodes(), &r));
        Ok(Self { setup, times, interior, boundary, residual, provenance, warnings: Vec::new() })
    }

    pub fn setup(&self) -> &Arc<Discretization> {
        &self.setup
    }

    pub fn times(&self) -> &TimeGrid {
        &self.times
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    /// Data-compatibility warnings collected by the solver.
    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    pub fn interior_slice(&self, k: usize) -> &[f64] {
        let n = self.setup.interior.len();
        &self.interior[k * n..(k + 1) * n]
    }

    pub fn boundary_slice(&self, k: usize) -> &[f64] {
        let n = self.setup.boundary.len();
        &self.boundary[k * n..(k + 1) * n]
    }

    /// `Pu` at interior nodes; `None` means identically zero.
    pub fn residual_slice(&self, k: usize) -> Option<&[f64]> {
        let n = self.setup.interior.len();
        self.residual.as_ref().map(|r| &r[k * n..(k + 1) * n])
    }

    /// `∫_Ω |u(x, t_k)|² dx` by the interior quadrature.
    pub fn energy(&self, k: usize) -> f64 {
        let sq: Vec<f64> = self.interior_slice(k).iter().map(|u| u * u).collect();
        weighted_sum(self.setup.interior.weights(), &sq)
    }

    /// The same field multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        let scale = |v: &Vec<f64>| v.iter().map(|u| factor * u).collect::<Vec<_>>();
        Self {
            setup: self.setup.clone(),
            times: self.times.clone(),
            interior: scale(&self.interior),
            boundary: scale(&self.boundary),
            residual: self.residual.as_ref().map(scale),
            provenance: self.provenance,
            warnings: self.warnings.clone(),
        }
    }
}

fn check_times(field: &VelocityField, times: &TimeGrid) -> Result<()> {
    let horizon = field.horizon();
    for &t in [times.start(), times.end()].iter() {
        if t < -1e-12 * horizon || t > horizon * (1.0 + 1e-12) {
            return Err(Error::OutOfHorizon { t, horizon });
        }
    }
    Ok(())
}

/// `u(x, t) = F(x − X(t))`, an exact solution for any profile `F`.
pub fn manufactured_solution(
    setup: Arc<Discretization>,
    profile: &Profile,
    times: TimeGrid,
) -> Result<SolutionField> {
    check_times(&setup.field, &times)?;
    let shifts: Vec<Point> =
        times.times().par_iter().map(|&t| setup.field.displacement(t)).collect::<Result<_>>()?;
    let tabulate = |nodes: &[Point]| -> Vec<f64> {
        shifts
            .par_iter()
            .flat_map_iter(|shift| nodes.iter().map(move |x| profile.eval(&(x - shift))))
            .collect()
    };
    let interior = tabulate(setup.interior.nodes());
    let boundary = tabulate(setup.boundary.nodes());
    Ok(SolutionField {
        setup,
        times,
        interior,
        boundary,
        residual: None,
        provenance: Provenance::Manufactured,
        warnings: Vec::new(),
    })
}

/// Backward characteristic tracing with a cached displacement table.
pub struct CharacteristicTracer<'a> {
    domain: &'a Domain,
    field: &'a VelocityField,
    /// `X` at the cell boundaries, accumulated cell by cell.
    table: Vec<Point>,
    /// `H` at the cell boundaries (smooth fields only).
    speeds: Vec<Point>,
    cell: f64,
    max_speed: f64,
    min_step: f64,
}

impl<'a> CharacteristicTracer<'a> {
    pub fn new(domain: &'a Domain, field: &'a VelocityField) -> Self {
        let horizon = field.horizon();
        let smooth = field.is_c1();
        let cells = if smooth {
            ((horizon / HERMITE_CELL).ceil() as usize).clamp(TABLE_CELLS, 1 << 22)
        } else {
            TABLE_CELLS
        };
        let cell = horizon / cells as f64;
        let knot = |k: usize| if k == cells { horizon } else { k as f64 * cell };
        let increments: Vec<Point> = (0..cells).into_par_iter().map(|k| field.integral(knot(k), knot(k + 1))).collect();
        let mut table = Vec::with_capacity(cells + 1);
        let mut acc = Point::zeros();
        table.push(acc);
        for d in increments {
            acc += d;
            table.push(acc);
        }
        let speeds = if smooth { (0..=cells).map(|k| field.eval(knot(k))).collect() } else { Vec::new() };
        let max_speed = field.max_speed();
        let min_step = (1e-4 * horizon).min(1e-3 * domain.diameter() / max_speed);
        Self { domain, field, table, speeds, cell, max_speed, min_step }
    }

    /// `X(s)` from the table: cubic Hermite interpolation with exact end
    /// slopes for C¹ fields, a local adaptive Simpson correction otherwise.
    pub fn displacement(&self, s: f64) -> Point {
        let cells = self.table.len() - 1;
        let k = ((s / self.cell).floor().max(0.0) as usize).min(cells - 1);
        let a = k as f64 * self.cell;
        if self.speeds.is_empty() {
            return self.table[k] + self.field.integral(a, s);
        }
        let d = self.cell;
        let u = (s - a) / d;
        let (u2, u3) = (u * u, u * u * u);
        self.table[k] * (2.0 * u3 - 3.0 * u2 + 1.0)
            + self.speeds[k] * (d * (u3 - 2.0 * u2 + u))
            + self.table[k + 1] * (3.0 * u2 - 2.0 * u3)
            + self.speeds[k + 1] * (d * (u3 - u2))
    }

    /// Value at `(x, t)` of the solution that equals `initial` at time
    /// `t_start` and `boundary` on the lateral boundary.
    pub fn value<I, G>(&self, x: &Point, t: f64, t_start: f64, initial: &I, boundary: &G) -> f64
    where
        I: Fn(&Point) -> f64 + ?Sized,
        G: Fn(&Point, f64) -> f64 + ?Sized,
    {
        let base = x - self.displacement(t);
        let at = |s: f64| base + self.displacement(s);
        let mut s_in = t;
        let mut s = t;
        loop {
            let y = if s == t { *x } else { at(s) };
            let depth = self.domain.signed_distance(&y);
            if depth < -crate::geometry::MEMBERSHIP_TOL {
                let entry = self.entry_time(&at, s, s_in);
                return boundary(&at(entry), entry);
            }
            if s <= t_start {
                return initial(&y);
            }
            s_in = s;
            let step = (depth.max(0.0) / self.max_speed).max(self.min_step);
            s = (s - step).max(t_start);
        }
    }

    /// Bisection for the last entry time in `(outside, inside]`.
    fn entry_time<F: Fn(f64) -> Point>(&self, at: &F, mut outside: f64, mut inside: f64) -> f64 {
        for _ in 0..200 {
            if inside - outside <= ENTRY_TIME_TOL {
                break;
            }
            let mid = 0.5 * (outside + inside);
            if self.domain.signed_distance(&at(mid)) < -crate::geometry::MEMBERSHIP_TOL {
                outside = mid;
            } else {
                inside = mid;
            }
        }
        inside
    }
}

/// Solve the initial-boundary value problem with initial data `initial` and
/// lateral data `boundary` by tracing every node back along its
/// characteristic. Incompatible data at inflow points at `t = 0` only produce
/// warnings.
pub fn solve_characteristics<I, G>(
    setup: Arc<Discretization>,
    initial: &I,
    boundary: &G,
    times: TimeGrid,
) -> Result<SolutionField>
where
    I: Fn(&Point) -> f64 + Sync + ?Sized,
    G: Fn(&Point, f64) -> f64 + Sync + ?Sized,
{
    check_times(&setup.field, &times)?;
    let tracer = CharacteristicTracer::new(&setup.domain, &setup.field);
    let t0 = times.start();
    let tabulate = |nodes: &[Point]| -> Vec<f64> {
        times
            .times()
            .par_iter()
            .flat_map_iter(|&t| {
                let tracer = &tracer;
                nodes.iter().map(move |x| tracer.value(x, t, t0, initial, boundary))
            })
            .collect()
    };
    let interior = tabulate(setup.interior.nodes());
    let boundary_values = tabulate(setup.boundary.nodes());

    let h0 = setup.field.eval(t0);
    let mut warnings = Vec::new();
    for (b, n) in setup.boundary.nodes().iter().zip(setup.boundary.normals()) {
        if h0.dot(n) < 0.0 {
            let (u, g) = (initial(b), boundary(b, t0));
            if (u - g).abs() > 1e-9 * u.abs().max(g.abs()).max(1.0) {
                warnings.push(format!(
                    "initial and boundary data differ at inflow point ({:.6}, {:.6}): {u} vs {g}",
                    b.x, b.y
                ));
            }
        }
    }
    if !warnings.is_empty() {
        log::warn!("{} incompatible inflow points", warnings.len());
    }
    Ok(SolutionField {
        setup,
        times,
        interior,
        boundary: boundary_values,
        residual: None,
        provenance: Provenance::InitialBoundary,
        warnings,
    })
}

/// Lateral trace of a solution with the exit-set mask `H(t)·ν(x) ≥ 0`.
#[derive(Debug, Clone)]
pub struct TraceField {
    times: TimeGrid,
    weights: Vec<f64>,
    nodes: Vec<Point>,
    values: Vec<f64>,
    normal_speed: Vec<f64>,
    mask: Vec<bool>,
}

pub fn boundary_trace(solution: &SolutionField) -> TraceField {
    let setup = solution.setup();
    let grid = &setup.boundary;
    let normal_speed: Vec<f64> = solution
        .times()
        .times()
        .iter()
        .flat_map(|&t| {
            let h = setup.field.eval(t);
            grid.normals().iter().map(move |n| h.dot(n))
        })
        .collect();
    let mask = normal_speed.iter().map(|&v| v >= 0.0).collect();
    TraceField {
        times: solution.times().clone(),
        weights: grid.weights().to_vec(),
        nodes: grid.nodes().to_vec(),
        values: solution.boundary.clone(),
        normal_speed,
        mask,
    }
}

impl TraceField {
    pub fn times(&self) -> &TimeGrid {
        &self.times
    }

    pub fn nodes(&self) -> &[Point] {
        &self.nodes
    }

    fn row(&self, k: usize) -> std::ops::Range<usize> {
        let n = self.nodes.len();
        k * n..(k + 1) * n
    }

    pub fn values(&self, k: usize) -> &[f64] {
        &self.values[self.row(k)]
    }

    /// `H(t_k)·ν` at each boundary node.
    pub fn normal_speed(&self, k: usize) -> &[f64] {
        &self.normal_speed[self.row(k)]
    }

    /// Exit-set membership at each boundary node.
    pub fn mask(&self, k: usize) -> &[bool] {
        &self.mask[self.row(k)]
    }

    fn space_integral(&self, k: usize, f: impl Fn(f64, f64, bool) -> f64) -> f64 {
        let r = self.row(k);
        let vals: Vec<f64> = self.values[r.clone()]
            .iter()
            .zip(&self.normal_speed[r.clone()])
            .zip(&self.mask[r])
            .map(|((&g, &hn), &m)| f(g, hn, m))
            .collect();
        weighted_sum(&self.weights, &vals)
    }

    /// `∫_{∂Ω} (H·ν) |g|² dγ` at slice `k`.
    pub fn flux(&self, k: usize) -> f64 {
        self.space_integral(k, |g, hn, _| hn * g * g)
    }

    fn time_integral(&self, f: impl Fn(usize) -> f64) -> f64 {
        let per_slice: Vec<f64> = (0..self.times.len()).map(f).collect();
        weighted_sum(&self.times.weights(), &per_slice)
    }

    /// `‖g‖²` over `∂Ω × (t_start, t_end)`.
    pub fn norm_sq(&self) -> f64 {
        self.time_integral(|k| self.space_integral(k, |g, _, _| g * g))
    }

    /// `∫_Σ |g|²` over the exit set.
    pub fn sigma_norm_sq(&self) -> f64 {
        self.time_integral(|k| self.space_integral(k, |g, _, m| if m { g * g } else { 0.0 }))
    }
}

/// Rotating-bump scenario on a disk: a bump of radius `ρ/2` centred at
/// `(ρ cos t, ρ sin t)` never reaches the boundary of the radius-`σ` disk, so
/// the lateral data vanish identically while the interior norm does not.
#[derive(Debug, Clone, PartialEq)]
pub struct Counterexample {
    pub domain: Domain,
    pub field: VelocityField,
    pub initial: Profile,
    pub sigma: f64,
    pub rho: f64,
}

/// Build the rotating-bump scenario on `[0, horizon]`; `bump_radius`
/// defaults to `ρ/2` and may not exceed it.
pub fn rotating_bump_counterexample(
    sigma: f64,
    rho: f64,
    bump_radius: Option<f64>,
    horizon: f64,
) -> Result<Counterexample> {
    let limit = 2.0 * sigma / 3.0;
    if !(sigma > 0.0) {
        return Err(Error::InvalidParameter(format!("sigma = {sigma} must be positive")));
    }
    if !(rho > 0.0 && rho < limit) {
        return Err(Error::RhoOutOfRange { rho, limit });
    }
    let radius = bump_radius.unwrap_or(0.5 * rho);
    if !(radius > 0.0 && radius <= 0.5 * rho) {
        return Err(Error::InvalidParameter(format!("bump radius {radius} must lie in (0, rho/2]")));
    }
    let domain = Domain::disk(Point::zeros(), sigma)?;
    // H = α'(t) with α(t) = ρ (cos t, sin t)
    let field = VelocityField::new(FieldKind::Rotation { radius: rho, rate: 1.0, phase: PI / 2.0 }, horizon)?;
    let initial = Profile::Bump { center: Point::new(rho, 0.0), radius };
    Ok(Counterexample { domain, field, initial, sigma, rho })
}

impl Counterexample {
    /// Centre `α(t)` of the moving support.
    pub fn support_center(&self, t: f64) -> Point {
        self.rho * Point::new(t.cos(), t.sin())
    }

    /// Closed form `v(x, t) = f(x − α(t) + α(0))` with `f` the initial profile.
    pub fn exact(&self, x: &Point, t: f64) -> f64 {
        self.initial.eval(&(x - self.support_center(t) + self.support_center(0.0)))
    }

    /// Solve with zero lateral data.
    pub fn solve(&self, h: f64, times: TimeGrid) -> Result<SolutionField> {
        let setup = Discretization::new(self.domain.clone(), self.field.clone(), h)?;
        let initial = |x: &Point| self.initial.eval(x);
        let mut solution = solve_characteristics(setup, &initial, &|_: &Point, _: f64| 0.0, times)?;
        solution.provenance = Provenance::Counterexample;
        Ok(solution)
    }
}
