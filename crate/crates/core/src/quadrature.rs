//! Shared quadrature primitives: reproducible summation, log-domain
//! accumulation, adaptive Simpson integration and piecewise Simpson time grids.

use crate::error::{Error, Result};
use crate::geometry::Point;

/// Pairwise (cascade) summation. The result depends only on the order of
/// `values`, so parallel producers that collect in order stay reproducible.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    const BLOCK: usize = 32;
    if values.len() <= BLOCK {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

/// Pairwise sum of `weights[i] * values[i]`.
pub fn weighted_sum(weights: &[f64], values: &[f64]) -> f64 {
    debug_assert_eq!(weights.len(), values.len());
    let products: Vec<f64> = weights.iter().zip(values).map(|(w, v)| w * v).collect();
    pairwise_sum(&products)
}

/// `ln(sum exp(terms))`, ignoring `-inf` entries. Returns `-inf` for an empty
/// or all-`-inf` input.
pub fn log_sum_exp(terms: &[f64]) -> f64 {
    let max = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    if max == f64::INFINITY {
        return f64::INFINITY;
    }
    let shifted: Vec<f64> = terms.iter().map(|t| (t - max).exp()).collect();
    max + pairwise_sum(&shifted).ln()
}

/// `ln(exp(a) + exp(b))`.
pub fn log_add_exp(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    if hi == f64::NEG_INFINITY {
        return hi;
    }
    hi + (lo - hi).exp().ln_1p()
}

const MAX_SIMPSON_DEPTH: u32 = 48;

/// Adaptive Simpson quadrature of a vector-valued integrand on `[a, b]`
/// with absolute tolerance `tol` per component.
pub fn adaptive_simpson_vec<F>(f: &F, a: f64, b: f64, tol: f64) -> Point
where
    F: Fn(f64) -> Point + ?Sized,
{
    if a == b {
        return Point::zeros();
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (fa + 4.0 * fm + fb) * ((b - a) / 6.0);
    simpson_step(f, a, b, fa, fm, fb, whole, tol, MAX_SIMPSON_DEPTH)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<F>(
    f: &F,
    a: f64,
    b: f64,
    fa: Point,
    fm: Point,
    fb: Point,
    whole: Point,
    tol: f64,
    depth: u32,
) -> Point
where
    F: Fn(f64) -> Point + ?Sized,
{
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (fa + 4.0 * flm + fm) * ((m - a) / 6.0);
    let right = (fm + 4.0 * frm + fb) * ((b - m) / 6.0);
    let delta = left + right - whole;
    let err = delta.amax();
    let scale = (left + right).amax();
    if depth == 0 || err <= 15.0 * tol || err <= 4.0 * f64::EPSILON * scale || m <= a || m >= b {
        return left + right + delta / 15.0;
    }
    simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

/// Scalar adaptive Simpson.
pub fn adaptive_simpson<F>(f: &F, a: f64, b: f64, tol: f64) -> f64
where
    F: Fn(f64) -> f64 + ?Sized,
{
    adaptive_simpson_vec(&|t| Point::new(f(t), 0.0), a, b, tol).x
}

/// Composite Simpson weights for `panels` (even) equal panels of width `dt`.
fn simpson_panel_weights(panels: usize, dt: f64) -> Vec<f64> {
    debug_assert!(panels >= 2 && panels.is_multiple_of(2));
    (0..=panels)
        .map(|i| {
            let c = if i == 0 || i == panels {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            };
            c * dt / 3.0
        })
        .collect()
}

/// Cumulative trapezoid integral of samples `values` at `times`, starting at 0.
pub fn cumulative_trapezoid(times: &[f64], values: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(times.len());
    let mut acc = 0.0;
    for (k, _) in times.iter().enumerate() {
        if k > 0 {
            acc += 0.5 * (times[k] - times[k - 1]) * (values[k] + values[k - 1]);
        }
        out.push(acc);
    }
    out
}

/// A time sampling made of consecutive segments, each a uniform grid with an
/// even number of panels so that composite Simpson applies per segment.
/// Adjacent segments share their endpoint sample.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid {
    times: Vec<f64>,
    /// Inclusive sample index ranges `(first, last)` of each segment.
    segments: Vec<(usize, usize)>,
}

impl TimeGrid {
    /// Uniform grid on `[t0, t1]`; an odd panel count is rounded up.
    pub fn uniform(t0: f64, t1: f64, panels: usize) -> Result<Self> {
        Self::from_segments(&[(t0, t1, panels)])
    }

    /// Segments between consecutive `breakpoints`, each with the smallest even
    /// panel count whose step does not exceed `max_step`.
    pub fn with_breakpoints(breakpoints: &[f64], max_step: f64) -> Result<Self> {
        if !(max_step > 0.0) {
            return Err(Error::InvalidParameter(format!("time step {max_step} must be positive")));
        }
        let segs: Vec<(f64, f64, usize)> = breakpoints
            .windows(2)
            .map(|w| {
                let n = ((w[1] - w[0]) / max_step - 1e-9).ceil().max(2.0) as usize;
                (w[0], w[1], n)
            })
            .collect();
        Self::from_segments(&segs)
    }

    /// Build from explicit `(start, end, panels)` segments.
    pub fn from_segments(segments: &[(f64, f64, usize)]) -> Result<Self> {
        if segments.is_empty() {
            return Err(Error::InvalidParameter("time grid needs at least one segment".into()));
        }
        let mut times = Vec::new();
        let mut ranges = Vec::with_capacity(segments.len());
        for (i, &(a, b, panels)) in segments.iter().enumerate() {
            if !(b > a) || !a.is_finite() || !b.is_finite() {
                return Err(Error::InvalidParameter(format!("time segment [{a}, {b}] is empty")));
            }
            if i > 0 {
                let prev_end = segments[i - 1].1;
                if (prev_end - a).abs() > 1e-12 * b.abs().max(1.0) {
                    return Err(Error::InvalidParameter(format!(
                        "time segments are not contiguous at {prev_end} / {a}"
                    )));
                }
            }
            let panels = panels.max(2);
            let panels = panels + panels % 2;
            let first = if i == 0 { 0 } else { times.len() - 1 };
            let start_k = if i == 0 { 0 } else { 1 };
            for k in start_k..=panels {
                let t = if k == panels { b } else { a + (b - a) * k as f64 / panels as f64 };
                times.push(t);
            }
            ranges.push((first, times.len() - 1));
        }
        Ok(Self { times, segments: ranges })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn start(&self) -> f64 {
        self.times[0]
    }

    pub fn end(&self) -> f64 {
        *self.times.last().expect("non-empty time grid")
    }

    /// Inclusive `(first, last)` sample indices of every segment.
    pub fn segments(&self) -> &[(usize, usize)] {
        &self.segments
    }

    /// Simpson weights of one segment, aligned with its sample indices.
    pub fn segment_weights(&self, segment: usize) -> Vec<f64> {
        let (first, last) = self.segments[segment];
        let panels = last - first;
        let dt = (self.times[last] - self.times[first]) / panels as f64;
        simpson_panel_weights(panels, dt)
    }

    /// Simpson weights of the whole grid (shared endpoints accumulate).
    pub fn weights(&self) -> Vec<f64> {
        let mut w = vec![0.0; self.times.len()];
        for s in 0..self.segments.len() {
            let first = self.segments[s].0;
            for (k, ws) in self.segment_weights(s).into_iter().enumerate() {
                w[first + k] += ws;
            }
        }
        w
    }

    /// Index of the sample equal to `t` (relative tolerance 1e-12).
    pub fn index_of(&self, t: f64) -> Option<usize> {
        let tol = 1e-12 * t.abs().max(1.0);
        let pos = self.times.partition_point(|&s| s < t - tol);
        (pos < self.times.len() && (self.times[pos] - t).abs() <= tol).then_some(pos)
    }

    /// True if `t` coincides with a segment boundary.
    pub fn is_breakpoint(&self, t: f64) -> bool {
        match self.index_of(t) {
            Some(i) => self.segments.iter().any(|&(a, b)| a == i || b == i),
            None => false,
        }
    }
}
