//! Cone partitions of `[0, T]`: on every piece `[t_j, t_{j+1}]` the direction
//! of `H(t)` stays within angle `arccos S*` of the anchor axis
//! `η_j = H(t_j) / |H(t_j)|`.

use std::f64::consts::FRAC_1_SQRT_2;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::velocity::{VelocityField, DEFAULT_SAMPLES};

/// Certificate sample count per subinterval.
pub const DEFAULT_CERTIFICATE_SAMPLES: usize = 1_000;
/// Safety margin added to `S*` by the greedy scan.
pub const DEFAULT_GREEDY_MARGIN: f64 = 0.01;
/// Dense-grid size of the greedy scan over `[0, T]`.
pub const DEFAULT_GREEDY_SAMPLES: usize = 20_001;

/// Outcome of a sampled check of the cone condition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConeCertificate {
    /// `min_j min_t (H(t)/|H(t)|)·η_j − S*` over the samples.
    pub min_margin: f64,
    /// Time at which the minimum is attained.
    pub worst_time: f64,
    /// Bound `L Δt / H0` on how much the continuum minimum may undercut the
    /// sampled one.
    pub sampling_gap: f64,
}

impl ConeCertificate {
    pub fn is_valid(&self) -> bool {
        self.min_margin >= 0.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConePartition {
    times: Vec<f64>,
    axes: Vec<Point>,
    sstar: f64,
    certificate: ConeCertificate,
}

/// Reject apertures outside `(1/√2, 1)`.
pub fn check_aperture(sstar: f64) -> Result<()> {
    if sstar > FRAC_1_SQRT_2 && sstar < 1.0 {
        Ok(())
    } else {
        Err(Error::ApertureOutOfRange(sstar))
    }
}

impl ConePartition {
    /// Build a partition from explicit times, anchoring axes at `H(t_j)` and
    /// certifying it with [`DEFAULT_CERTIFICATE_SAMPLES`] per piece. The
    /// certificate may be negative; callers decide whether that is fatal.
    pub fn from_times(field: &VelocityField, times: Vec<f64>, sstar: f64) -> Result<Self> {
        check_aperture(sstar)?;
        let horizon = field.horizon();
        if times.len() < 2 || times[0] != 0.0 || *times.last().unwrap() != horizon {
            return Err(Error::PartitionFailure(format!(
                "partition must run from 0 to T = {horizon} exactly"
            )));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::PartitionFailure("partition times must increase strictly".into()));
        }
        let axes = times[..times.len() - 1].iter().map(|&t| field.eval(t).normalize()).collect();
        let mut partition = Self {
            times,
            axes,
            sstar,
            certificate: ConeCertificate { min_margin: f64::NAN, worst_time: 0.0, sampling_gap: 0.0 },
        };
        partition.certificate = verify_cone_condition(&partition, field, DEFAULT_CERTIFICATE_SAMPLES)?;
        Ok(partition)
    }

    /// `t_0 = 0 < t_1 < … < t_m = T`.
    pub fn times(&self) -> &[f64] {
        &self.times
    }

    /// Unit axes `η_0 … η_{m−1}`.
    pub fn axes(&self) -> &[Point] {
        &self.axes
    }

    /// Number of pieces `m`.
    pub fn len(&self) -> usize {
        self.axes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.axes.is_empty()
    }

    pub fn sstar(&self) -> f64 {
        self.sstar
    }

    pub fn horizon(&self) -> f64 {
        *self.times.last().unwrap()
    }

    pub fn certificate(&self) -> &ConeCertificate {
        &self.certificate
    }

    /// Index `j` with `t ∈ [t_j, t_{j+1})`; `t = T` maps to the last piece.
    pub fn interval_index(&self, t: f64) -> usize {
        let m = self.len();
        self.times[1..m].partition_point(|&s| s <= t).min(m - 1)
    }
}

/// The uniform partition with `m = ceil(2 L T / (H0 (1 − S*)))` pieces, which
/// satisfies the cone condition for any `L`-Lipschitz field with `min |H| = H0`.
pub fn uniform_partition(field: &VelocityField, sstar: f64) -> Result<ConePartition> {
    check_aperture(sstar)?;
    let pieces = uniform_piece_count(field, sstar)?;
    let horizon = field.horizon();
    let times = (0..=pieces)
        .map(|j| if j == pieces { horizon } else { horizon * j as f64 / pieces as f64 })
        .collect();
    let partition = ConePartition::from_times(field, times, sstar)?;
    if !partition.certificate.is_valid() {
        return Err(Error::InvalidPartition { margin: partition.certificate.min_margin });
    }
    Ok(partition)
}

fn uniform_piece_count(field: &VelocityField, sstar: f64) -> Result<usize> {
    let (h0, _) = field.bounds(DEFAULT_SAMPLES)?;
    let lipschitz = field.lipschitz_estimate(DEFAULT_SAMPLES, 1.0)?;
    let bound = 2.0 * lipschitz * field.horizon() / (h0 * (1.0 - sstar));
    Ok(((bound - 1e-9).ceil() as usize).max(1))
}

/// Greedy cone partition: from each anchor, advance along a dense grid while
/// `(H/|H|)·η_j ≥ S* + margin` holds, and cut at the last such sample. When
/// the result has more pieces than the uniform partition, the uniform one is
/// returned instead.
pub fn greedy_partition(
    field: &VelocityField,
    sstar: f64,
    sampling: usize,
    margin: f64,
) -> Result<ConePartition> {
    check_aperture(sstar)?;
    if sampling < 2 {
        return Err(Error::InvalidParameter("greedy scan needs at least 2 samples".into()));
    }
    if !(margin >= 0.0) {
        return Err(Error::InvalidParameter(format!("greedy margin {margin} must be >= 0")));
    }
    let horizon = field.horizon();
    let last = sampling - 1;
    let grid = |k: usize| if k == last { horizon } else { horizon * k as f64 / last as f64 };
    let directions: Vec<Point> = (0..=last).map(|k| field.eval(grid(k)).normalize()).collect();
    let level = sstar + margin;

    let mut times = vec![0.0];
    let mut anchor = 0;
    while anchor < last {
        let axis = directions[anchor];
        let mut k = anchor;
        while k < last && directions[k + 1].dot(&axis) >= level {
            k += 1;
        }
        if k == anchor {
            return Err(Error::PartitionFailure(format!(
                "cannot advance past t = {} at sampling {sampling}",
                grid(anchor)
            )));
        }
        times.push(grid(k));
        anchor = k;
    }
    let greedy = ConePartition::from_times(field, times, sstar)?;
    let uniform_count = uniform_piece_count(field, sstar)?;
    if greedy.len() > uniform_count {
        log::debug!("greedy partition ({} pieces) exceeds uniform ({uniform_count})", greedy.len());
        return uniform_partition(field, sstar);
    }
    Ok(greedy)
}

/// Per-piece minimum of `(H/|H|)·η_j − S*` and the time attaining it, over
/// `n_samples` equispaced points per piece, endpoints included.
pub fn piece_margins(partition: &ConePartition, field: &VelocityField, n_samples: usize) -> Result<Vec<(f64, f64)>> {
    if n_samples < 2 {
        return Err(Error::InvalidParameter("certificate needs at least 2 samples per piece".into()));
    }
    let sstar = partition.sstar;
    Ok((0..partition.len())
        .into_par_iter()
        .map(|j| {
            let (a, b) = (partition.times[j], partition.times[j + 1]);
            let axis = partition.axes[j];
            (0..n_samples)
                .map(|k| {
                    let t = a + (b - a) * k as f64 / (n_samples - 1) as f64;
                    (field.eval(t).normalize().dot(&axis) - sstar, t)
                })
                .fold((f64::INFINITY, a), |acc, v| if v.0 < acc.0 { v } else { acc })
        })
        .collect())
}

/// Sampled certificate of the cone condition: `n_samples` equispaced points
/// per piece, endpoints included.
pub fn verify_cone_condition(
    partition: &ConePartition,
    field: &VelocityField,
    n_samples: usize,
) -> Result<ConeCertificate> {
    let per_piece = piece_margins(partition, field, n_samples)?;
    let (min_margin, worst_time) =
        per_piece.into_iter().fold((f64::INFINITY, 0.0), |acc, v| if v.0 < acc.0 { v } else { acc });
    let widest = partition.times.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
    let lipschitz = field.lipschitz_estimate(DEFAULT_SAMPLES, 1.1)?;
    let sampling_gap = lipschitz * widest / (n_samples - 1) as f64 / field.min_speed();
    Ok(ConeCertificate { min_margin, worst_time, sampling_gap })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn rotation(horizon: f64) -> VelocityField {
        VelocityField::rotation(1.0, 1.0, 0.0, horizon).unwrap()
    }

    /// Oracle: for H = (cos t, sin t) the dot against η_j is cos(t − t_j), so
    /// a maximal greedy step has length arccos(level).
    fn arccos_step_count(horizon: f64, level: f64) -> usize {
        (horizon / level.acos()).ceil() as usize
    }

    #[test]
    fn constant_field_needs_one_piece() {
        let f = VelocityField::constant(Point::new(1.0, 0.0), 1.0).unwrap();
        let p = uniform_partition(&f, 0.8).unwrap();
        assert_eq!(p.times(), &[0.0, 1.0]);
        assert_eq!(p.axes(), &[Point::new(1.0, 0.0)]);
        assert!((p.certificate().min_margin - 0.2).abs() < 1e-15);
        let g = greedy_partition(&f, 0.8, 1001, DEFAULT_GREEDY_MARGIN).unwrap();
        assert_eq!(g.len(), 1);
    }

    #[test]
    fn uniform_counts_follow_the_lipschitz_bound() {
        let p = uniform_partition(&rotation(FRAC_PI_2), 0.75).unwrap();
        assert_eq!(p.len(), (4.0 * PI).ceil() as usize);
        assert_eq!(p.len(), 13);
        assert!(p.certificate().is_valid());

        let alpha_prime = VelocityField::rotation(0.5, 1.0, FRAC_PI_2, 2.0 * PI).unwrap();
        let p = uniform_partition(&alpha_prime, 0.75).unwrap();
        // L / H0 = 1, so m = ceil(2 · 2π / (1 − S*))
        assert_eq!(p.len(), (16.0 * PI).ceil() as usize);
        assert_eq!(p.len(), 51);
        assert!(p.certificate().is_valid());
    }

    #[test]
    fn greedy_counts_match_arccos_oracle() {
        let f = rotation(FRAC_PI_2);
        let g = greedy_partition(&f, 0.75, DEFAULT_GREEDY_SAMPLES, 0.0).unwrap();
        assert_eq!(g.len(), arccos_step_count(FRAC_PI_2, 0.75));
        assert_eq!(g.len(), 3);
        assert!(g.certificate().is_valid());
        let g = greedy_partition(&f, 0.99, DEFAULT_GREEDY_SAMPLES, 0.0).unwrap();
        assert_eq!(g.len(), arccos_step_count(FRAC_PI_2, 0.99));
        assert_eq!(g.len(), 12);
    }

    #[test]
    fn single_piece_over_quarter_turn_is_invalid() {
        let f = rotation(FRAC_PI_2);
        let p = ConePartition::from_times(&f, vec![0.0, FRAC_PI_2], 0.75).unwrap();
        let c = verify_cone_condition(&p, &f, 1000).unwrap();
        assert!((c.min_margin - (FRAC_PI_2.cos() - 0.75)).abs() < 1e-12);
        assert!(!c.is_valid());
        assert!((c.worst_time - FRAC_PI_2).abs() < 1e-12);
    }

    #[test]
    fn aperture_is_range_checked() {
        let f = rotation(1.0);
        assert!(matches!(uniform_partition(&f, 0.5), Err(Error::ApertureOutOfRange(_))));
        assert!(matches!(uniform_partition(&f, 1.0), Err(Error::ApertureOutOfRange(_))));
        assert!(matches!(
            greedy_partition(&f, FRAC_1_SQRT_2, 100, 0.0),
            Err(Error::ApertureOutOfRange(_))
        ));
    }

    #[test]
    fn interval_lookup_is_half_open() {
        let f = rotation(FRAC_PI_2);
        let p = uniform_partition(&f, 0.75).unwrap();
        let t = p.times().to_vec();
        assert_eq!(p.interval_index(0.0), 0);
        assert_eq!(p.interval_index(t[1]), 1);
        assert_eq!(p.interval_index(0.5 * (t[1] + t[2])), 1);
        assert_eq!(p.interval_index(FRAC_PI_2), p.len() - 1);
    }

    #[test]
    fn repeated_axes_are_allowed() {
        let f = VelocityField::constant(Point::new(0.0, 2.0), 2.0).unwrap();
        let p = ConePartition::from_times(&f, vec![0.0, 1.0, 2.0], 0.8).unwrap();
        assert_eq!(p.axes()[0], p.axes()[1]);
        assert!((p.certificate().min_margin - 0.2).abs() < 1e-15);
    }
}
