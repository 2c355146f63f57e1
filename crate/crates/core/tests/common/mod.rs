//! Independent oracles shared by the integration tests.

#![allow(dead_code)]

use carleman_core::{Point, VelocityField};

/// First-order upwind finite volumes for `u_t + H(t)·∇u = 0` on the box
/// `[lo, hi]` with `n × n` cells. Inflow ghost cells take `g` at the face
/// centre. Returns cell-centre values at each requested time, row-major in
/// `(j, i)` with `i` along x.
pub fn upwind_box<U, G>(
    lo: Point,
    hi: Point,
    n: usize,
    field: &VelocityField,
    u0: U,
    g: G,
    times: &[f64],
) -> Vec<Vec<f64>>
where
    U: Fn(&Point) -> f64,
    G: Fn(&Point, f64) -> f64,
{
    let dx = (hi.x - lo.x) / n as f64;
    let dy = (hi.y - lo.y) / n as f64;
    let center = |i: usize, j: usize| Point::new(lo.x + (i as f64 + 0.5) * dx, lo.y + (j as f64 + 0.5) * dy);
    let mut u: Vec<f64> = (0..n * n).map(|k| u0(&center(k % n, k / n))).collect();
    let speed = field.max_speed();
    let cfl = 0.4 / (speed / dx + speed / dy);
    let mut out = Vec::with_capacity(times.len());
    let mut t = 0.0;
    for &target in times {
        let span = target - t;
        if span > 0.0 {
            let steps = (span / cfl).ceil() as usize;
            let dt = span / steps as f64;
            for _ in 0..steps {
                let h = field.eval(t);
                let mut next = u.clone();
                for j in 0..n {
                    for i in 0..n {
                        let c = center(i, j);
                        let here = u[j * n + i];
                        let west = if i > 0 { u[j * n + i - 1] } else { g(&Point::new(lo.x, c.y), t) };
                        let east = if i + 1 < n { u[j * n + i + 1] } else { g(&Point::new(hi.x, c.y), t) };
                        let south = if j > 0 { u[(j - 1) * n + i] } else { g(&Point::new(c.x, lo.y), t) };
                        let north = if j + 1 < n { u[(j + 1) * n + i] } else { g(&Point::new(c.x, hi.y), t) };
                        let ux = if h.x >= 0.0 { (here - west) / dx } else { (east - here) / dx };
                        let uy = if h.y >= 0.0 { (here - south) / dy } else { (north - here) / dy };
                        next[j * n + i] = here - dt * (h.x * ux + h.y * uy);
                    }
                }
                u = next;
                t += dt;
            }
            t = target;
        }
        out.push(u.clone());
    }
    out
}

/// `∫_{R²} f(x)² dx` for the radial bump `f = exp(1 − 1/(1 − |x/R|²))` by
/// adaptive Simpson in the radius.
pub fn bump_norm_sq(radius: f64) -> f64 {
    let integrand = |q: f64| {
        if q >= 1.0 {
            0.0
        } else {
            (2.0 - 2.0 / (1.0 - q * q)).exp() * q
        }
    };
    2.0 * std::f64::consts::PI * radius * radius * simpson(&integrand, 0.0, 1.0, 1e-14, 50)
}

fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let whole = (b - a) / 6.0 * (f(a) + 4.0 * f(m) + f(b));
    refine(f, a, b, f(a), f(m), f(b), whole, tol, depth)
}

#[allow(clippy::too_many_arguments)]
fn refine<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
        return left + right + (left + right - whole) / 15.0;
    }
    refine(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) + refine(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * b.abs()
}
