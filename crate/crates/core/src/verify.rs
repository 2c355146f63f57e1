//! Quadrature checks of the weighted estimate, the energy identity and
//! estimates, and the observability inequality on computed solutions.
//!
//! Weighted integrals are carried in log space: `e^{2sφ}` overflows long
//! before the scanned `s` range ends, so every term is stored as its natural
//! logarithm and compared through `log_add_exp`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{cumulative_trapezoid, log_add_exp, log_sum_exp, weighted_sum, TimeGrid};
use crate::transport::{boundary_trace, SolutionField};
use crate::weight::{CarlemanWeight, ObservabilityCondition};

/// Ratio `‖g‖ / sup_t ‖u(t)‖` below which the trace counts as zero.
pub const ZERO_TRACE_RATIO: f64 = 1e-12;

/// `n` log-spaced values on `[max(1, s0), 100 max(1, s0)]`.
pub fn default_s_grid(s0: f64, n: usize) -> Vec<f64> {
    let lo = s0.max(1.0);
    let hi = 100.0 * lo;
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n)
            .map(|k| {
                if k == n - 1 {
                    hi
                } else {
                    lo * (hi / lo).powf(k as f64 / (n - 1) as f64)
                }
            })
            .collect(),
    }
}

/// A time grid with a segment boundary at every partition time of `weight`.
pub fn weight_time_grid(weight: &CarlemanWeight, max_step: f64) -> Result<TimeGrid> {
    TimeGrid::with_breakpoints(weight.partition().times(), max_step)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyProfile {
    pub times: Vec<f64>,
    /// `E(t) = ∫_Ω |u(x, t)|² dx`
    pub energy: Vec<f64>,
    /// `f(t) = ∫_{∂Ω} (H(t)·ν) |g|² dγ`
    pub flux: Vec<f64>,
    /// `|E(t) − E(0) + ∫_0^t f|`
    pub identity_residual: Vec<f64>,
    /// `‖g‖²` over the whole lateral boundary
    pub trace_norm_sq: f64,
    pub max_speed: f64,
    /// `E(0) + H*‖g‖² − E(t)`
    pub forward_slack: Vec<f64>,
    /// `E(t) + H*‖g‖² − E(0)`
    pub backward_slack: Vec<f64>,
    /// Quadrature tolerance used for the estimate checks.
    pub tolerance: f64,
}

impl EnergyProfile {
    pub fn max_identity_residual(&self) -> f64 {
        self.identity_residual.iter().copied().fold(0.0, f64::max)
    }

    /// Smallest slack of either estimate over all slices.
    pub fn min_slack(&self) -> f64 {
        self.forward_slack
            .iter()
            .chain(&self.backward_slack)
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    /// Both estimates hold at every slice up to the tolerance.
    pub fn estimates_hold(&self) -> bool {
        self.min_slack() >= -self.tolerance
    }
}

/// Energy, boundary flux, identity residual and both energy estimates.
pub fn energy_profile(solution: &SolutionField) -> Result<EnergyProfile> {
    let times = solution.times();
    if times.len() < 2 {
        return Err(Error::InvalidParameter("energy profile needs at least two time slices".into()));
    }
    let trace = boundary_trace(solution);
    let n = times.len();
    let energy: Vec<f64> = (0..n).map(|k| solution.energy(k)).collect();
    let flux: Vec<f64> = (0..n).map(|k| trace.flux(k)).collect();
    let outflow = cumulative_trapezoid(times.times(), &flux);
    let identity_residual: Vec<f64> =
        energy.iter().zip(&outflow).map(|(e, f)| (e - energy[0] + f).abs()).collect();
    let trace_norm_sq = trace.norm_sq();
    let max_speed = solution.setup().field.max_speed();
    let budget = max_speed * trace_norm_sq;
    let forward_slack = energy.iter().map(|e| energy[0] + budget - e).collect();
    let backward_slack = energy.iter().map(|e| e + budget - energy[0]).collect();
    let max_energy = energy.iter().copied().fold(0.0, f64::max);
    let max_residual = identity_residual.iter().copied().fold(0.0, f64::max);
    let tolerance = max_residual + 64.0 * f64::EPSILON * max_energy.max(budget);
    Ok(EnergyProfile {
        times: times.times().to_vec(),
        energy,
        flux,
        identity_residual,
        trace_norm_sq,
        max_speed,
        forward_slack,
        backward_slack,
        tolerance,
    })
}

/// Per-`s` terms of the weighted estimate, all as natural logarithms
/// (`-inf` for a vanishing term), and the minimal constant at each `s`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CarlemanReport {
    pub s_values: Vec<f64>,
    pub c0: f64,
    /// `ln(s² ∫_Q |u|² e^{2sφ})`
    pub ln_bulk: Vec<f64>,
    /// `ln Σ_j ∫_Ω |u(t_j)|²`
    pub ln_slices: f64,
    /// `ln ∫_Q |Pu|² e^{2sφ}`
    pub ln_residual: Vec<f64>,
    /// `∫_Σ |u|²` over the exit set
    pub sigma: f64,
    /// `∫_Ω |u(T)|²`
    pub final_energy: f64,
    /// Minimal `C ≥ 1` at each `s`.
    pub constants: Vec<f64>,
}

impl CarlemanReport {
    /// `ln(s² ∫|u|²e^{2sφ} + s e^{−C0 s} Σ_j ∫|u(t_j)|²)` at index `i`.
    pub fn ln_lhs(&self, i: usize) -> f64 {
        let s = self.s_values[i];
        log_add_exp(self.ln_bulk[i], s.ln() - self.c0 * s + self.ln_slices)
    }

    /// `ln(C ∫|Pu|²e^{2sφ} + C s e^{Cs} (∫_Σ|u|² + ∫|u(T)|²))` at index `i`.
    pub fn ln_rhs(&self, i: usize, c: f64) -> f64 {
        let s = self.s_values[i];
        let ln_c = c.ln();
        let ln_data = (self.sigma + self.final_energy).ln();
        log_add_exp(ln_c + self.ln_residual[i], ln_c + s.ln() + c * s + ln_data)
    }

    /// Whether the estimate holds with constant `c` at every scanned `s`.
    pub fn holds_with(&self, c: f64) -> bool {
        (0..self.s_values.len()).all(|i| self.holds_at(i, c))
    }

    pub fn holds_at(&self, i: usize, c: f64) -> bool {
        let lhs = self.ln_lhs(i);
        lhs == f64::NEG_INFINITY || lhs <= self.ln_rhs(i, c)
    }

    pub fn max_constant(&self) -> f64 {
        self.constants.iter().copied().fold(1.0, f64::max)
    }
}

/// Smallest `C ≥ 1` with `lhs ≤ rhs(C)` for the increasing map `rhs`.
fn minimal_constant(lhs: f64, rhs: impl Fn(f64) -> f64) -> f64 {
    if lhs == f64::NEG_INFINITY || lhs <= rhs(1.0) {
        return 1.0;
    }
    if rhs(f64::MAX) == f64::NEG_INFINITY {
        return f64::INFINITY;
    }
    let (mut lo, mut hi) = (1.0, 2.0);
    while rhs(hi) < lhs {
        lo = hi;
        hi *= 2.0;
        if !hi.is_finite() {
            return f64::INFINITY;
        }
    }
    while hi - lo > 4.0 * f64::EPSILON * hi {
        let mid = 0.5 * (lo + hi);
        if rhs(mid) >= lhs {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// Log-space integrand samples `(ln(w |v|²), φ)` on `Ω × (0, T)`.
fn weighted_samples(
    solution: &SolutionField,
    weight: &CarlemanWeight,
    values: impl Fn(usize) -> Option<Vec<f64>> + Sync,
) -> Vec<(f64, f64)> {
    let times = solution.times();
    let grid = &solution.setup().interior;
    let partition = weight.partition();
    (0..times.segments().len())
        .into_par_iter()
        .flat_map_iter(|seg| {
            let (first, last) = times.segments()[seg];
            let mid = 0.5 * (times.times()[first] + times.times()[last]);
            let j = partition.interval_index(mid);
            let tw = times.segment_weights(seg);
            let mut out = Vec::new();
            for (k, wt) in (first..=last).zip(tw) {
                let t = times.times()[k];
                let Some(vals) = values(k) else { continue };
                for ((x, wx), v) in grid.nodes().iter().zip(grid.weights()).zip(vals) {
                    let m = wt * wx * v * v;
                    if m > 0.0 {
                        out.push((m.ln(), weight.phi_branch(j, x, t)));
                    }
                }
            }
            out
        })
        .collect()
}

fn ln_weighted_integral(samples: &[(f64, f64)], s: f64) -> f64 {
    let terms: Vec<f64> = samples.iter().map(|(a, phi)| a + 2.0 * s * phi).collect();
    log_sum_exp(&terms)
}

/// Evaluate every term of the weighted estimate at each `s` and the minimal
/// constant `C(s) ≥ 1`.
pub fn carleman_report(
    solution: &SolutionField,
    weight: &CarlemanWeight,
    s_values: &[f64],
    c0: f64,
) -> Result<CarlemanReport> {
    let setup = solution.setup();
    if !setup.field.is_c1() {
        return Err(Error::NotC1);
    }
    if s_values.is_empty() || s_values.iter().any(|s| !(*s > 0.0)) || s_values.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter("s values must be positive and increasing".into()));
    }
    if !(c0 > 0.0) {
        return Err(Error::InvalidParameter(format!("C0 = {c0} must be positive")));
    }
    let times = solution.times();
    let horizon = weight.horizon();
    let tol = 1e-12 * horizon.max(1.0);
    if (setup.field.horizon() - horizon).abs() > tol
        || (setup.field.min_speed() - weight.min_speed()).abs() > 1e-12 * weight.min_speed()
        || (setup.field.max_speed() - weight.max_speed()).abs() > 1e-12 * weight.max_speed()
    {
        return Err(Error::GridMismatch("solution and weight use different velocity fields".into()));
    }
    if times.start().abs() > tol || (times.end() - horizon).abs() > tol {
        return Err(Error::GridMismatch(format!(
            "time grid covers [{}, {}] but the weight lives on [0, {horizon}]",
            times.start(),
            times.end()
        )));
    }
    let pieces = weight.partition().times();
    for &t in &pieces[1..pieces.len() - 1] {
        if !times.is_breakpoint(t) {
            return Err(Error::GridMismatch(format!("partition time {t} is not a time-grid breakpoint")));
        }
    }

    let bulk = weighted_samples(solution, weight, |k| Some(solution.interior_slice(k).to_vec()));
    let residual = weighted_samples(solution, weight, |k| solution.residual_slice(k).map(<[f64]>::to_vec));
    let slice_energy: Vec<f64> = pieces[..pieces.len() - 1]
        .iter()
        .map(|&t| times.index_of(t).map(|k| solution.energy(k)))
        .collect::<Option<_>>()
        .ok_or_else(|| Error::GridMismatch("partition time missing from the time grid".into()))?;
    let ln_slices = crate::quadrature::pairwise_sum(&slice_energy).ln();
    let trace = boundary_trace(solution);
    let sigma = trace.sigma_norm_sq();
    let final_energy = solution.energy(times.len() - 1);

    let per_s: Vec<(f64, f64)> = s_values
        .par_iter()
        .map(|&s| (2.0 * s.ln() + ln_weighted_integral(&bulk, s), ln_weighted_integral(&residual, s)))
        .collect();
    let mut report = CarlemanReport {
        s_values: s_values.to_vec(),
        c0,
        ln_bulk: per_s.iter().map(|p| p.0).collect(),
        ln_slices,
        ln_residual: per_s.iter().map(|p| p.1).collect(),
        sigma,
        final_energy,
        constants: Vec::new(),
    };
    report.constants = (0..s_values.len())
        .map(|i| minimal_constant(report.ln_lhs(i), |c| report.ln_rhs(i, c)))
        .collect();
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstantFit {
    /// Largest `C(s)` over the fitting reports.
    pub c_uniform: f64,
    pub valid_on_holdout: bool,
    /// `(holdout index, s)` pairs where the estimate fails with `c_uniform`.
    pub failures: Vec<(usize, f64)>,
}

/// Fit one constant on `fit` and test it on `holdout`.
pub fn fit_constants(fit: &[CarlemanReport], holdout: &[CarlemanReport]) -> Result<ConstantFit> {
    let Some(first) = fit.first() else {
        return Err(Error::InvalidParameter("no fitting reports".into()));
    };
    for r in fit.iter().chain(holdout) {
        if r.s_values != first.s_values || r.c0 != first.c0 {
            return Err(Error::GridMismatch("reports use different s grids or C0".into()));
        }
    }
    let c_uniform = fit.iter().map(CarlemanReport::max_constant).fold(1.0, f64::max);
    let failures: Vec<(usize, f64)> = holdout
        .iter()
        .enumerate()
        .flat_map(|(n, r)| {
            (0..r.s_values.len()).filter(|&i| !r.holds_at(i, c_uniform)).map(move |i| (n, r.s_values[i]))
        })
        .collect();
    Ok(ConstantFit { c_uniform, valid_on_holdout: failures.is_empty(), failures })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    /// Quantitative condition holds and every ratio is finite.
    Observable,
    /// All ratios finite but the sufficient condition fails.
    ConditionFails,
    /// Some solution has a nonzero interior with zero trace.
    Fails,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::Observable => "observable",
            Verdict::ConditionFails => "quantitative condition fails",
            Verdict::Fails => "observability fails",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservabilityReport {
    /// `sup_t ‖u(t)‖ / ‖g‖`, `+inf` for a vanishing trace.
    pub ratios: Vec<f64>,
    pub sup_norms: Vec<f64>,
    pub trace_norms: Vec<f64>,
    pub family_sup: f64,
    pub condition: ObservabilityCondition,
    pub verdict: Verdict,
}

/// Interior-to-trace ratios of a family of solutions with the quantitative
/// condition of `weight` attached.
pub fn observability_ratio(
    solutions: &[SolutionField],
    weight: &CarlemanWeight,
) -> Result<ObservabilityReport> {
    let rows: Vec<(f64, f64, f64)> = solutions
        .par_iter()
        .map(|u| {
            let sup = (0..u.times().len()).map(|k| u.energy(k).sqrt()).fold(0.0, f64::max);
            let g = boundary_trace(u).norm_sq().max(0.0).sqrt();
            let ratio = if g <= ZERO_TRACE_RATIO * sup {
                if sup == 0.0 { 0.0 } else { f64::INFINITY }
            } else {
                sup / g
            };
            (ratio, sup, g)
        })
        .collect();
    let ratios: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let condition = weight.observability_condition();
    let verdict = if ratios.iter().any(|r| r.is_infinite()) {
        Verdict::Fails
    } else if condition.holds {
        Verdict::Observable
    } else {
        Verdict::ConditionFails
    };
    Ok(ObservabilityReport {
        family_sup: ratios.iter().copied().fold(0.0, f64::max),
        sup_norms: rows.iter().map(|r| r.1).collect(),
        trace_norms: rows.iter().map(|r| r.2).collect(),
        ratios,
        condition,
        verdict,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowCheck {
    /// Zero trace: nothing to extend.
    pub skipped: bool,
    /// `sup ‖u(t)‖² / ‖g‖²` over the window.
    pub window_sup: f64,
    pub premise: bool,
    /// `sup ‖u(t)‖² / ‖g‖²` on `[0, s1]` and its bound `C² + 2H*`.
    pub before: (f64, f64),
    /// `sup ‖u(t)‖² / ‖g‖²` on `[s2, T]` and its bound `C² + H*`.
    pub after: (f64, f64),
    pub tolerance: f64,
}

impl WindowCheck {
    /// True when skipped, when the premise fails, or when both bounds hold.
    pub fn holds(&self) -> bool {
        self.skipped
            || !self.premise
            || (self.before.0 <= self.before.1 + self.tolerance && self.after.0 <= self.after.1 + self.tolerance)
    }
}

/// Check that an observability bound `c_window` on `[s1, s2]` extends to
/// `[0, T]` with squared constants `C² + 2H*` before and `C² + H*` after.
pub fn extend_window_check(solution: &SolutionField, window: (f64, f64), c_window: f64) -> Result<WindowCheck> {
    let (s1, s2) = window;
    let times = solution.times();
    let horizon = times.end();
    if !(s1 >= times.start() && s1 < s2 && s2 <= horizon) {
        return Err(Error::WindowOutOfRange { s1, s2, horizon });
    }
    let profile = energy_profile(solution)?;
    let g2 = profile.trace_norm_sq;
    let sup_e = profile.energy.iter().copied().fold(0.0, f64::max);
    if g2.sqrt() <= ZERO_TRACE_RATIO * sup_e.sqrt() {
        return Ok(WindowCheck {
            skipped: true,
            window_sup: f64::INFINITY,
            premise: false,
            before: (f64::INFINITY, f64::INFINITY),
            after: (f64::INFINITY, f64::INFINITY),
            tolerance: 0.0,
        });
    }
    let sup_on = |lo: f64, hi: f64| {
        profile
            .times
            .iter()
            .zip(&profile.energy)
            .filter(|(t, _)| **t >= lo && **t <= hi)
            .map(|(_, e)| e / g2)
            .fold(0.0, f64::max)
    };
    let window_sup = sup_on(s1, s2);
    let c2 = c_window * c_window;
    let hstar = profile.max_speed;
    Ok(WindowCheck {
        skipped: false,
        window_sup,
        premise: window_sup <= c2,
        before: (sup_on(times.start(), s1), c2 + 2.0 * hstar),
        after: (sup_on(s2, horizon), c2 + hstar),
        tolerance: 2.0 * profile.tolerance / g2,
    })
}

/// `∫_Q |u|²` over the solution's space-time grid.
pub fn space_time_norm_sq(solution: &SolutionField) -> f64 {
    let e: Vec<f64> = (0..solution.times().len()).map(|k| solution.energy(k)).collect();
    weighted_sum(&solution.times().weights(), &e)
}
