//! The piecewise Carleman weight
//!
//! ```text
//! φ(x, t) = −β (t − t_j) + |x − x_j|²,   t ∈ [t_j, t_{j+1}),
//! ```
//!
//! with apexes `x_j = −R_j η_j` pushed outside the domain at doubling radii,
//! and the pointwise checks that make the weight work: every apex sees the
//! whole domain inside a cone of half-aperture `arccos S*`, successive apexes
//! are strictly separated, and `Pφ = ∂_t φ + H·∇φ` stays above `C* H0 μ0`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Domain, Point, QuadratureGrid};
use crate::partition::ConePartition;
use crate::velocity::VelocityField;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CarlemanWeight {
    partition: ConePartition,
    apexes: Vec<Point>,
    radii: Vec<f64>,
    beta: f64,
    slack: f64,
    diameter: f64,
    /// `μ_j = min_{x∈Ω̄} |x − x_j|`
    near: Vec<f64>,
    /// `M_j = max_{x∈Ω̄} |x − x_j|`
    far: Vec<f64>,
    h0: f64,
    hstar: f64,
}

/// `C* = 2 S*² − 1`.
pub fn cone_constant(sstar: f64) -> f64 {
    2.0 * sstar * sstar - 1.0
}

/// Apex radii `R_0 = (1+S*)/(1−S*) δ` and `R_j = 2^j R_0 + (2^j − 1)(δ + r)`.
pub fn apex_radii(pieces: usize, sstar: f64, diameter: f64, slack: f64) -> Vec<f64> {
    let r0 = (1.0 + sstar) / (1.0 - sstar) * diameter;
    (0..pieces)
        .map(|j| {
            let p = 2f64.powi(j as i32);
            p * r0 + (p - 1.0) * (diameter + slack)
        })
        .collect()
}

impl CarlemanWeight {
    pub fn build(
        domain: &Domain,
        field: &VelocityField,
        partition: &ConePartition,
        slack: f64,
    ) -> Result<Self> {
        if !(slack > 0.0) {
            return Err(Error::SlackNonpositive(slack));
        }
        let margin = partition.certificate().min_margin;
        if !(margin >= 0.0) {
            return Err(Error::InvalidPartition { margin });
        }
        if (partition.horizon() - field.horizon()).abs() > 1e-12 * field.horizon() {
            return Err(Error::GridMismatch("partition and field horizons differ".into()));
        }
        let diameter = domain.diameter();
        let radii = apex_radii(partition.len(), partition.sstar(), diameter, slack);
        let apexes: Vec<Point> =
            radii.iter().zip(partition.axes()).map(|(r, eta)| -*r * eta).collect();
        let (near, far): (Vec<f64>, Vec<f64>) =
            apexes.iter().map(|x| domain.distance_extremes(x)).unzip();
        debug_assert!(apexes.iter().all(|x| !domain.contains(x)));
        let h0 = field.min_speed();
        let beta = cone_constant(partition.sstar()) * h0 * near[0];
        Ok(Self {
            partition: partition.clone(),
            apexes,
            radii,
            beta,
            slack,
            diameter,
            near,
            far,
            h0,
            hstar: field.max_speed(),
        })
    }

    pub fn partition(&self) -> &ConePartition {
        &self.partition
    }

    pub fn apexes(&self) -> &[Point] {
        &self.apexes
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    /// Time drift `β = C* H0 μ0`.
    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn slack(&self) -> f64 {
        self.slack
    }

    pub fn diameter(&self) -> f64 {
        self.diameter
    }

    /// Distances `μ_j` from each apex to the domain.
    pub fn near(&self) -> &[f64] {
        &self.near
    }

    /// Farthest distances `M_j` from each apex to the domain.
    pub fn far(&self) -> &[f64] {
        &self.far
    }

    pub fn sstar(&self) -> f64 {
        self.partition.sstar()
    }

    pub fn cone_constant(&self) -> f64 {
        cone_constant(self.sstar())
    }

    pub fn min_speed(&self) -> f64 {
        self.h0
    }

    pub fn max_speed(&self) -> f64 {
        self.hstar
    }

    pub fn horizon(&self) -> f64 {
        self.partition.horizon()
    }

    /// Branch `φ_j(x, t)` without domain checks.
    pub fn phi_branch(&self, j: usize, x: &Point, t: f64) -> f64 {
        -self.beta * (t - self.partition.times()[j]) + (x - self.apexes[j]).norm_squared()
    }

    /// `Pφ_j = −β + 2 H(t)·(x − x_j)` without domain checks.
    pub fn p_phi_branch(&self, j: usize, h: &Point, x: &Point) -> f64 {
        -self.beta + 2.0 * h.dot(&(x - self.apexes[j]))
    }

    fn locate(&self, domain: &Domain, x: &Point, t: f64) -> Result<usize> {
        let horizon = self.horizon();
        if !(t >= 0.0 && t <= horizon) {
            return Err(Error::OutOfHorizon { t, horizon });
        }
        if !domain.contains(x) {
            return Err(Error::OutOfDomain { x: x.x, y: x.y });
        }
        Ok(self.partition.interval_index(t))
    }

    /// `φ(x, t)`, using the branch of the half-open piece containing `t` and
    /// the last branch at `t = T`.
    pub fn phi(&self, domain: &Domain, x: &Point, t: f64) -> Result<f64> {
        let j = self.locate(domain, x, t)?;
        Ok(self.phi_branch(j, x, t))
    }

    /// `(∂_t + H(t)·∇) φ` at `(x, t)`.
    pub fn p_phi(&self, domain: &Domain, field: &VelocityField, x: &Point, t: f64) -> Result<f64> {
        let j = self.locate(domain, x, t)?;
        Ok(self.p_phi_branch(j, &field.eval(t), x))
    }

    /// `min_{j, x} (x + R_j η_j)·η_j − S* |x + R_j η_j|` over the grid nodes;
    /// nonnegative when every apex cone contains the domain.
    pub fn check_apex_cone(&self, grid: &QuadratureGrid) -> f64 {
        let sstar = self.sstar();
        self.partition
            .axes()
            .par_iter()
            .zip(self.radii.par_iter())
            .map(|(eta, r)| {
                grid.nodes()
                    .iter()
                    .map(|x| {
                        let v = x + *r * eta;
                        v.dot(eta) - sstar * v.norm()
                    })
                    .fold(f64::INFINITY, f64::min)
            })
            .reduce(|| f64::INFINITY, f64::min)
    }

    /// Gaps `μ_{j+1} − M_j` and the extremal-index structure
    /// `max_j M_j = M_{m−1}`, `min_j μ_j = μ_0`.
    pub fn check_separation(&self) -> SeparationCheck {
        let gaps: Vec<f64> = self.near.iter().skip(1).zip(&self.far).map(|(n, f)| n - f).collect();
        let last_far = *self.far.last().unwrap();
        let max_far = self.far.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let min_near = self.near.iter().copied().fold(f64::INFINITY, f64::min);
        SeparationCheck {
            ok: gaps.iter().all(|&g| g > 0.0),
            extremes_ok: max_far == last_far && min_near == self.near[0],
            gaps,
        }
    }

    /// `min (Pφ_j − C* H0 μ0)` over grid nodes and `t_samples` equispaced
    /// times in each closed piece `[t_j, t_{j+1}]`.
    pub fn check_pphi_lower_bound(
        &self,
        field: &VelocityField,
        grid: &QuadratureGrid,
        t_samples: usize,
    ) -> f64 {
        let floor = self.cone_constant() * self.h0 * self.near[0];
        let times = self.partition.times();
        let n = t_samples.max(2);
        (0..self.partition.len())
            .into_par_iter()
            .flat_map_iter(|j| (0..n).map(move |k| (j, k)))
            .map(|(j, k)| {
                let t = times[j] + (times[j + 1] - times[j]) * k as f64 / (n - 1) as f64;
                let h = field.eval(t);
                grid.nodes()
                    .iter()
                    .map(|x| self.p_phi_branch(j, &h, x) - floor)
                    .fold(f64::INFINITY, f64::min)
            })
            .reduce(|| f64::INFINITY, f64::min)
    }

    /// Length `M_j² / (μ_j H0 C*)` piece `j` must exceed for the quantitative
    /// observability condition to hold on it.
    pub fn critical_length(&self, j: usize) -> f64 {
        self.far[j].powi(2) / (self.near[j] * self.h0 * self.cone_constant())
    }

    /// Evaluate `max_j (t_{j+1} − t_j) μ_j / M_j² > 1 / (H0 C*)`.
    pub fn observability_condition(&self) -> ObservabilityCondition {
        let times = self.partition.times();
        let ratios: Vec<f64> = (0..self.partition.len())
            .map(|j| (times[j + 1] - times[j]) * self.near[j] / self.far[j].powi(2))
            .collect();
        let threshold = 1.0 / (self.h0 * self.cone_constant());
        let max = ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let holds = max > threshold;
        let jstar = if holds { ratios.iter().position(|&q| q == max) } else { None };
        ObservabilityCondition { holds, jstar, ratios, threshold }
    }

    /// Smallest `s` in `s_grid` for which the slice coefficients
    ///
    /// ```text
    /// q_j(x) = (2H(t_j)·(x−x_j) − β) e^{2s|x−x_j|²} − (2H(t_j)·(x−x_{j−1}) − β) e^{2s|x−x_{j−1}|²}
    /// ```
    ///
    /// dominate `(μ0 H0 / 2) e^{2s μ_j²}` at every node and every `j ≥ 1`.
    /// Falls back to the closed-form bound with `C̃ = C*` when no grid value
    /// qualifies.
    pub fn estimate_s0(&self, field: &VelocityField, grid: &QuadratureGrid, s_grid: &[f64]) -> S0Estimate {
        let mut sorted: Vec<f64> = s_grid.iter().copied().filter(|s| s.is_finite()).collect();
        sorted.sort_by(f64::total_cmp);
        if self.partition.len() == 1 {
            return match sorted.first() {
                Some(&s) => S0Estimate { s0: s, source: S0Source::Scan },
                None => S0Estimate { s0: 0.0, source: S0Source::AnalyticFallback },
            };
        }
        for &s in &sorted {
            if self.slice_coefficients_dominate(field, grid, s) {
                return S0Estimate { s0: s, source: S0Source::Scan };
            }
        }
        S0Estimate { s0: self.analytic_s0(), source: S0Source::AnalyticFallback }
    }

    /// Whether `q_j(x) ≥ (μ0 H0 / 2) e^{2s μ_j²}` at every node for `j ≥ 1`.
    pub fn slice_coefficients_dominate(&self, field: &VelocityField, grid: &QuadratureGrid, s: f64) -> bool {
        let target = 0.5 * self.near[0] * self.h0;
        (1..self.partition.len()).into_par_iter().all(|j| {
            let h = field.eval(self.partition.times()[j]);
            let mu2 = self.near[j].powi(2);
            grid.nodes().iter().all(|x| {
                let a = self.p_phi_branch(j, &h, x);
                let b = self.p_phi_branch(j - 1, &h, x);
                // everything divided by e^{2s μ_j²}
                let ea = 2.0 * s * ((x - self.apexes[j]).norm_squared() - mu2);
                let eb = 2.0 * s * ((x - self.apexes[j - 1]).norm_squared() - mu2);
                if a <= 0.0 {
                    return false;
                }
                if ea > 700.0 {
                    return true;
                }
                a * ea.exp() - b * eb.exp() >= target
            })
        })
    }

    /// `max_j log(2 H* M* / (C̃ μ0 H0)) / (2 (μ_j² − M_{j−1}²))` with `C̃ = C*`.
    pub fn analytic_s0(&self) -> f64 {
        let m_star = *self.far.last().unwrap();
        let ctilde = self.cone_constant();
        let log_term = (2.0 * self.hstar * m_star / (ctilde * self.near[0] * self.h0)).ln();
        (1..self.partition.len())
            .map(|j| log_term / (2.0 * (self.near[j].powi(2) - self.far[j - 1].powi(2))))
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeparationCheck {
    pub ok: bool,
    pub extremes_ok: bool,
    pub gaps: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservabilityCondition {
    pub holds: bool,
    /// Smallest index attaining the maximal ratio, when the condition holds.
    pub jstar: Option<usize>,
    /// `(t_{j+1} − t_j) μ_j / M_j²` per piece.
    pub ratios: Vec<f64>,
    /// `1 / (H0 C*)`.
    pub threshold: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum S0Source {
    Scan,
    AnalyticFallback,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct S0Estimate {
    pub s0: f64,
    pub source: S0Source,
}
