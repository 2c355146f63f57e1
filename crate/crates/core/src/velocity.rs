//! Time-dependent, space-independent velocity fields `H(t)` on `[0, T]`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::quadrature::adaptive_simpson_vec;

/// Uniform sample count used when validating `min |H| > 0` and for the
/// default extremum search.
pub const DEFAULT_SAMPLES: usize = 10_001;
/// Per-component absolute tolerance of the displacement quadrature.
pub const DISPLACEMENT_TOL: f64 = 1e-12;
const DEGENERATE_SPEED: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum FieldKind {
    Constant(Point),
    /// `radius * (cos(rate t + phase), sin(rate t + phase))`.
    Rotation { radius: f64, rate: f64, phase: f64 },
    /// Piecewise-linear interpolation of `(t, H)` samples.
    Tabulated { times: Vec<f64>, values: Vec<Point> },
    /// Pointwise sum of component fields.
    Composite(Vec<FieldKind>),
}

impl FieldKind {
    fn eval(&self, t: f64) -> Point {
        match self {
            FieldKind::Constant(v) => *v,
            FieldKind::Rotation { radius, rate, phase } => {
                let a = rate * t + phase;
                *radius * Point::new(a.cos(), a.sin())
            }
            FieldKind::Tabulated { times, values } => {
                let k = times.partition_point(|&s| s <= t).clamp(1, times.len() - 1);
                let (t0, t1) = (times[k - 1], times[k]);
                let s = ((t - t0) / (t1 - t0)).clamp(0.0, 1.0);
                values[k - 1] + s * (values[k] - values[k - 1])
            }
            FieldKind::Composite(parts) => parts.iter().map(|p| p.eval(t)).sum(),
        }
    }

    fn analytic_derivative(&self, t: f64) -> Option<Point> {
        match self {
            FieldKind::Constant(_) => Some(Point::zeros()),
            FieldKind::Rotation { radius, rate, phase } => {
                let a = rate * t + phase;
                Some(radius * rate * Point::new(-a.sin(), a.cos()))
            }
            FieldKind::Tabulated { .. } => None,
            FieldKind::Composite(parts) => {
                parts.iter().map(|p| p.analytic_derivative(t)).sum::<Option<Point>>()
            }
        }
    }

    fn is_analytic(&self) -> bool {
        match self {
            FieldKind::Tabulated { .. } => false,
            FieldKind::Composite(parts) => parts.iter().all(FieldKind::is_analytic),
            _ => true,
        }
    }

    fn knots(&self, out: &mut Vec<f64>) {
        match self {
            FieldKind::Tabulated { times, .. } => out.extend_from_slice(times),
            FieldKind::Composite(parts) => parts.iter().for_each(|p| p.knots(out)),
            _ => {}
        }
    }

    fn validate(&self, horizon: f64) -> Result<()> {
        match self {
            FieldKind::Constant(v) if !(v.x.is_finite() && v.y.is_finite()) => {
                Err(Error::InvalidField("constant vector must be finite".into()))
            }
            FieldKind::Rotation { radius, rate, phase }
                if !(radius.is_finite() && rate.is_finite() && phase.is_finite()) =>
            {
                Err(Error::InvalidField("rotation parameters must be finite".into()))
            }
            FieldKind::Tabulated { times, values } => {
                if times.len() < 2 || times.len() != values.len() {
                    return Err(Error::InvalidField("table needs at least two (t, H) rows".into()));
                }
                if times.windows(2).any(|w| !(w[1] > w[0])) {
                    return Err(Error::InvalidField("table times must be strictly increasing".into()));
                }
                if times[0] > 0.0 || *times.last().unwrap() < horizon {
                    return Err(Error::InvalidField(format!("table must cover [0, {horizon}]")));
                }
                Ok(())
            }
            FieldKind::Composite(parts) => {
                if parts.is_empty() {
                    return Err(Error::InvalidField("composite field has no components".into()));
                }
                parts.iter().try_for_each(|p| p.validate(horizon))
            }
            _ => Ok(()),
        }
    }
}

/// A velocity field `H(t)` on the horizon `[0, T]` satisfying `min |H| > 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VelocityField {
    kind: FieldKind,
    horizon: f64,
    /// Table knots in `(0, T)` where a tabulated component has kinks.
    knots: Vec<f64>,
    min_speed: f64,
    max_speed: f64,
}

impl VelocityField {
    pub fn constant(v: Point, horizon: f64) -> Result<Self> {
        Self::new(FieldKind::Constant(v), horizon)
    }

    pub fn rotation(radius: f64, rate: f64, phase: f64, horizon: f64) -> Result<Self> {
        Self::new(FieldKind::Rotation { radius, rate, phase }, horizon)
    }

    pub fn tabulated(times: Vec<f64>, values: Vec<Point>, horizon: f64) -> Result<Self> {
        Self::new(FieldKind::Tabulated { times, values }, horizon)
    }

    /// Validates the parameters and `min |H| > 0` by dense sampling.
    pub fn new(kind: FieldKind, horizon: f64) -> Result<Self> {
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::InvalidField(format!("horizon {horizon} must be positive")));
        }
        kind.validate(horizon)?;
        let mut knots = Vec::new();
        kind.knots(&mut knots);
        knots.retain(|&t| t > 0.0 && t < horizon);
        knots.sort_by(f64::total_cmp);
        knots.dedup();
        let mut field = Self { kind, horizon, knots, min_speed: 0.0, max_speed: 0.0 };
        let (lo, hi) = field.bounds(DEFAULT_SAMPLES)?;
        field.min_speed = lo;
        field.max_speed = hi;
        Ok(field)
    }

    pub fn kind(&self) -> &FieldKind {
        &self.kind
    }

    /// The horizon `T`.
    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// `H(t)`; arguments outside `[0, T]` are evaluated by the same formula.
    pub fn eval(&self, t: f64) -> Point {
        self.kind.eval(t)
    }

    /// True when `H'` is available in closed form (the field is C¹).
    pub fn is_c1(&self) -> bool {
        self.kind.is_analytic()
    }

    /// `H0 = min |H|` from the construction-time sampling.
    pub fn min_speed(&self) -> f64 {
        self.min_speed
    }

    /// `H* = max |H|` from the construction-time sampling.
    pub fn max_speed(&self) -> f64 {
        self.max_speed
    }

    fn check_time(&self, t: f64) -> Result<()> {
        let tol = 1e-12 * self.horizon;
        if t < -tol || t > self.horizon + tol || t.is_nan() {
            Err(Error::OutOfHorizon { t, horizon: self.horizon })
        } else {
            Ok(())
        }
    }

    /// `(min |H|, max |H|)` over `[0, T]` from `n_samples` uniform samples,
    /// refined by golden-section search around the extremal samples.
    pub fn bounds(&self, n_samples: usize) -> Result<(f64, f64)> {
        if n_samples < 2 {
            return Err(Error::InvalidParameter("bounds needs at least 2 samples".into()));
        }
        let dt = self.horizon / (n_samples - 1) as f64;
        let speed = |t: f64| self.eval(t).norm();
        let samples: Vec<f64> = (0..n_samples).map(|k| speed(k as f64 * dt)).collect();
        let argmin = (0..n_samples).min_by(|&a, &b| samples[a].total_cmp(&samples[b])).unwrap();
        let argmax = (0..n_samples).max_by(|&a, &b| samples[a].total_cmp(&samples[b])).unwrap();
        let bracket = |k: usize| {
            let a = k.saturating_sub(1) as f64 * dt;
            let b = ((k + 1).min(n_samples - 1)) as f64 * dt;
            (a, b)
        };
        let (a, b) = bracket(argmin);
        let lo = samples[argmin].min(golden_section(&speed, a, b, false));
        let (a, b) = bracket(argmax);
        let hi = samples[argmax].max(golden_section(&speed, a, b, true));
        if lo <= DEGENERATE_SPEED {
            return Err(Error::DegenerateField { min_speed: lo });
        }
        Ok((lo, hi))
    }

    /// Lipschitz constant estimate: `safety * max |H'|` over uniform samples
    /// for C¹ fields, `safety * max` divided difference otherwise.
    pub fn lipschitz_estimate(&self, n_samples: usize, safety: f64) -> Result<f64> {
        if n_samples < 3 {
            return Err(Error::InvalidParameter("lipschitz estimate needs at least 3 samples".into()));
        }
        if !(safety >= 1.0) {
            return Err(Error::InvalidParameter(format!("safety factor {safety} must be >= 1")));
        }
        let dt = self.horizon / (n_samples - 1) as f64;
        let max_slope = if self.is_c1() {
            (0..n_samples)
                .map(|k| self.kind.analytic_derivative(k as f64 * dt).unwrap().norm())
                .fold(0.0, f64::max)
        } else {
            // sample grid merged with the table knots, where slopes change
            let mut ts: Vec<f64> = (0..n_samples).map(|k| k as f64 * dt).collect();
            ts.extend_from_slice(&self.knots);
            ts.sort_by(f64::total_cmp);
            ts.dedup();
            ts.windows(2)
                .filter(|w| w[1] > w[0])
                .map(|w| (self.eval(w[1]) - self.eval(w[0])).norm() / (w[1] - w[0]))
                .fold(0.0, f64::max)
        };
        Ok(max_slope * safety)
    }

    /// `X(t) = ∫_0^t H(s) ds` by adaptive Simpson quadrature.
    pub fn displacement(&self, t: f64) -> Result<Point> {
        self.check_time(t)?;
        Ok(self.integral(0.0, t.clamp(0.0, self.horizon)))
    }

    /// `∫_a^b H(s) ds` for `0 <= a <= b <= T`, split at table knots.
    pub fn integral(&self, a: f64, b: f64) -> Point {
        if b <= a {
            return -self.integral_ordered(b, a);
        }
        self.integral_ordered(a, b)
    }

    fn integral_ordered(&self, a: f64, b: f64) -> Point {
        let f = |s: f64| self.eval(s);
        let mut total = Point::zeros();
        let mut left = a;
        for &k in self.knots.iter().filter(|&&k| k > a && k < b) {
            total += adaptive_simpson_vec(&f, left, k, DISPLACEMENT_TOL);
            left = k;
        }
        total + adaptive_simpson_vec(&f, left, b, DISPLACEMENT_TOL)
    }

    /// `H'(t)`: closed form for C¹ kinds, central differences with step
    /// `1e-6 T` otherwise.
    pub fn derivative(&self, t: f64) -> Result<Point> {
        self.check_time(t)?;
        if let Some(d) = self.kind.analytic_derivative(t) {
            return Ok(d);
        }
        let step = 1e-6 * self.horizon;
        let a = (t - step).max(0.0);
        let b = (t + step).min(self.horizon);
        Ok((self.eval(b) - self.eval(a)) / (b - a))
    }
}

/// Golden-section search for the minimum (or maximum) of `f` on `[a, b]`.
fn golden_section<F: Fn(f64) -> f64>(f: &F, mut a: f64, mut b: f64, maximize: bool) -> f64 {
    let sign = if maximize { -1.0 } else { 1.0 };
    let g = |t: f64| sign * f(t);
    let ratio = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - ratio * (b - a);
    let mut d = a + ratio * (b - a);
    let (mut fc, mut fd) = (g(c), g(d));
    for _ in 0..100 {
        if (b - a).abs() <= 1e-14 * (1.0 + a.abs()) {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - ratio * (b - a);
            fc = g(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + ratio * (b - a);
            fd = g(d);
        }
    }
    sign * fc.min(fd)
}
