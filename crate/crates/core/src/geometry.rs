//! Bounded convex spatial domains (intervals, disks, axis-aligned boxes and
//! convex polygons), their metric quantities and quadrature grids.
//!
//! Every domain lives in the plane; an interval `[lo, hi]` is embedded as the
//! segment `[lo, hi] x {0}` so one point type serves both dimensions.

use std::f64::consts::PI;

use nalgebra::Vector2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Point = Vector2<f64>;

/// Closed-membership tolerance (absolute).
pub const MEMBERSHIP_TOL: f64 = 1e-12;
/// Distance below which a point counts as lying on the boundary.
pub const BOUNDARY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum DomainKind {
    Interval { lo: f64, hi: f64 },
    Disk { center: Point, radius: f64 },
    AxisBox { min: Point, max: Point },
    /// Strictly convex, counterclockwise vertex list.
    ConvexPolygon { vertices: Vec<Point> },
}

/// A bounded convex domain containing the origin in its closure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Domain {
    kind: DomainKind,
}

impl Domain {
    pub fn interval(lo: f64, hi: f64) -> Result<Self> {
        Self::new(DomainKind::Interval { lo, hi })
    }

    pub fn disk(center: Point, radius: f64) -> Result<Self> {
        Self::new(DomainKind::Disk { center, radius })
    }

    pub fn axis_box(min: Point, max: Point) -> Result<Self> {
        Self::new(DomainKind::AxisBox { min, max })
    }

    pub fn convex_polygon(vertices: Vec<Point>) -> Result<Self> {
        Self::new(DomainKind::ConvexPolygon { vertices })
    }

    pub fn new(kind: DomainKind) -> Result<Self> {
        let finite = |p: &Point| p.x.is_finite() && p.y.is_finite();
        match &kind {
            DomainKind::Interval { lo, hi } => {
                if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                    return Err(Error::InvalidDomain(format!("interval [{lo}, {hi}] is empty")));
                }
            }
            DomainKind::Disk { center, radius } => {
                if !(finite(center) && radius.is_finite() && *radius > 0.0) {
                    return Err(Error::InvalidDomain(format!("disk radius {radius} must be positive")));
                }
            }
            DomainKind::AxisBox { min, max } => {
                if !(finite(min) && finite(max) && min.x < max.x && min.y < max.y) {
                    return Err(Error::InvalidDomain("box corners must satisfy min < max".into()));
                }
            }
            DomainKind::ConvexPolygon { vertices } => {
                let n = vertices.len();
                if n < 3 || !vertices.iter().all(finite) {
                    return Err(Error::InvalidDomain("polygon needs at least 3 finite vertices".into()));
                }
                for i in 0..n {
                    let a = vertices[i];
                    let b = vertices[(i + 1) % n];
                    let c = vertices[(i + 2) % n];
                    let scale = (b - a).norm() * (c - b).norm();
                    if cross(b - a, c - b) <= 1e-12 * scale {
                        return Err(Error::InvalidDomain(format!(
                            "polygon vertices {i}..{} are not strictly counterclockwise-convex",
                            i + 2
                        )));
                    }
                }
            }
        }
        let domain = Self { kind };
        if !domain.contains(&Point::zeros()) {
            return Err(Error::InvalidDomain("the origin must lie in the closed domain".into()));
        }
        Ok(domain)
    }

    pub fn kind(&self) -> &DomainKind {
        &self.kind
    }

    /// Spatial dimension (1 for intervals, 2 otherwise).
    pub fn dimension(&self) -> usize {
        match self.kind {
            DomainKind::Interval { .. } => 1,
            _ => 2,
        }
    }

    /// `sup |x - y|` over the closure.
    pub fn diameter(&self) -> f64 {
        match &self.kind {
            DomainKind::Interval { lo, hi } => hi - lo,
            DomainKind::Disk { radius, .. } => 2.0 * radius,
            DomainKind::AxisBox { min, max } => (max - min).norm(),
            DomainKind::ConvexPolygon { vertices } => {
                let mut best: f64 = 0.0;
                for (i, a) in vertices.iter().enumerate() {
                    for b in &vertices[i + 1..] {
                        best = best.max((a - b).norm());
                    }
                }
                best
            }
        }
    }

    /// Lebesgue measure (length in 1D, area in 2D).
    pub fn volume(&self) -> f64 {
        match &self.kind {
            DomainKind::Interval { lo, hi } => hi - lo,
            DomainKind::Disk { radius, .. } => PI * radius * radius,
            DomainKind::AxisBox { min, max } => (max.x - min.x) * (max.y - min.y),
            DomainKind::ConvexPolygon { vertices } => {
                let n = vertices.len();
                0.5 * (0..n).map(|i| cross(vertices[i], vertices[(i + 1) % n])).sum::<f64>()
            }
        }
    }

    /// Boundary measure (perimeter in 2D, endpoint count in 1D).
    pub fn boundary_measure(&self) -> f64 {
        match &self.kind {
            DomainKind::Interval { .. } => 2.0,
            DomainKind::Disk { radius, .. } => 2.0 * PI * radius,
            DomainKind::AxisBox { min, max } => 2.0 * ((max.x - min.x) + (max.y - min.y)),
            DomainKind::ConvexPolygon { vertices } => {
                let n = vertices.len();
                (0..n).map(|i| (vertices[(i + 1) % n] - vertices[i]).norm()).sum()
            }
        }
    }

    /// A point in the interior.
    pub fn centroid(&self) -> Point {
        match &self.kind {
            DomainKind::Interval { lo, hi } => Point::new(0.5 * (lo + hi), 0.0),
            DomainKind::Disk { center, .. } => *center,
            DomainKind::AxisBox { min, max } => 0.5 * (min + max),
            DomainKind::ConvexPolygon { vertices } => {
                vertices.iter().fold(Point::zeros(), |acc, v| acc + v) / vertices.len() as f64
            }
        }
    }

    /// `(min, max)` of `|x - p|` over the closed domain.
    pub fn distance_extremes(&self, p: &Point) -> (f64, f64) {
        match &self.kind {
            DomainKind::Interval { lo, hi } => {
                let a = Point::new(*lo, 0.0);
                let b = Point::new(*hi, 0.0);
                (segment_distance(p, &a, &b), (p - a).norm().max((p - b).norm()))
            }
            DomainKind::Disk { center, radius } => {
                let d = (p - center).norm();
                ((d - radius).max(0.0), d + radius)
            }
            DomainKind::AxisBox { min, max } => {
                let clamped = Point::new(p.x.clamp(min.x, max.x), p.y.clamp(min.y, max.y));
                let far = Point::new(
                    if (p.x - min.x).abs() > (p.x - max.x).abs() { min.x } else { max.x },
                    if (p.y - min.y).abs() > (p.y - max.y).abs() { min.y } else { max.y },
                );
                ((p - clamped).norm(), (p - far).norm())
            }
            DomainKind::ConvexPolygon { vertices } => {
                let n = vertices.len();
                let far = vertices.iter().map(|v| (p - v).norm()).fold(0.0, f64::max);
                if self.contains(p) {
                    return (0.0, far);
                }
                let near = (0..n)
                    .map(|i| segment_distance(p, &vertices[i], &vertices[(i + 1) % n]))
                    .fold(f64::INFINITY, f64::min);
                (near, far)
            }
        }
    }

    /// Signed distance-like function: exact distance to the boundary inside
    /// (positive), a negative lower bound of the distance outside.
    pub fn signed_distance(&self, p: &Point) -> f64 {
        match &self.kind {
            DomainKind::Interval { lo, hi } => (p.x - lo).min(hi - p.x),
            DomainKind::Disk { center, radius } => radius - (p - center).norm(),
            DomainKind::AxisBox { min, max } => {
                (p.x - min.x).min(max.x - p.x).min(p.y - min.y).min(max.y - p.y)
            }
            DomainKind::ConvexPolygon { vertices } => {
                let n = vertices.len();
                (0..n)
                    .map(|i| {
                        let a = vertices[i];
                        let e = vertices[(i + 1) % n] - a;
                        cross(e, p - a) / e.norm()
                    })
                    .fold(f64::INFINITY, f64::min)
            }
        }
    }

    /// Closed membership with absolute tolerance [`MEMBERSHIP_TOL`].
    pub fn contains(&self, p: &Point) -> bool {
        if let DomainKind::Interval { .. } = self.kind {
            if p.y.abs() > MEMBERSHIP_TOL {
                return false;
            }
        }
        self.signed_distance(p) >= -MEMBERSHIP_TOL
    }

    /// Unit outward normal at a boundary point.
    pub fn outward_normal(&self, b: &Point) -> Result<Point> {
        if self.signed_distance(b).abs() > BOUNDARY_TOL
            || (self.dimension() == 1 && b.y.abs() > BOUNDARY_TOL)
        {
            return Err(Error::NotOnBoundary { x: b.x, y: b.y });
        }
        let corner = || Error::CornerPoint { x: b.x, y: b.y };
        match &self.kind {
            DomainKind::Interval { lo, hi } => {
                if (b.x - lo).abs() <= BOUNDARY_TOL {
                    Ok(Point::new(-1.0, 0.0))
                } else if (b.x - hi).abs() <= BOUNDARY_TOL {
                    Ok(Point::new(1.0, 0.0))
                } else {
                    Err(Error::NotOnBoundary { x: b.x, y: b.y })
                }
            }
            DomainKind::Disk { center, .. } => Ok((b - center).normalize()),
            DomainKind::AxisBox { min, max } => {
                let faces = [
                    ((b.x - min.x).abs(), Point::new(-1.0, 0.0)),
                    ((max.x - b.x).abs(), Point::new(1.0, 0.0)),
                    ((b.y - min.y).abs(), Point::new(0.0, -1.0)),
                    ((max.y - b.y).abs(), Point::new(0.0, 1.0)),
                ];
                let mut hits = faces.iter().filter(|(d, _)| *d <= BOUNDARY_TOL);
                match (hits.next(), hits.next()) {
                    (Some((_, n)), None) => Ok(*n),
                    (Some(_), Some(_)) => Err(corner()),
                    _ => Err(Error::NotOnBoundary { x: b.x, y: b.y }),
                }
            }
            DomainKind::ConvexPolygon { vertices } => {
                if vertices.iter().any(|v| (b - v).norm() <= BOUNDARY_TOL) {
                    return Err(corner());
                }
                let n = vertices.len();
                (0..n)
                    .find(|&i| {
                        segment_distance(b, &vertices[i], &vertices[(i + 1) % n]) <= BOUNDARY_TOL
                    })
                    .map(|i| edge_normal(&vertices[i], &vertices[(i + 1) % n]))
                    .ok_or(Error::NotOnBoundary { x: b.x, y: b.y })
            }
        }
    }

    fn bounding_box(&self) -> (Point, Point) {
        match &self.kind {
            DomainKind::Interval { lo, hi } => (Point::new(*lo, 0.0), Point::new(*hi, 0.0)),
            DomainKind::Disk { center, radius } => {
                let r = Point::new(*radius, *radius);
                (center - r, center + r)
            }
            DomainKind::AxisBox { min, max } => (*min, *max),
            DomainKind::ConvexPolygon { vertices } => {
                let mut lo = vertices[0];
                let mut hi = vertices[0];
                for v in vertices {
                    lo = lo.inf(v);
                    hi = hi.sup(v);
                }
                (lo, hi)
            }
        }
    }

    /// Midpoint-rule tensor grid clipped to the domain: a cell contributes its
    /// full volume iff its centroid lies in the closed domain.
    pub fn interior_grid(&self, h: f64) -> Result<QuadratureGrid> {
        check_resolution(h)?;
        let (lo, hi) = self.bounding_box();
        let cells = |len: f64| ((len / h) - 1e-9).ceil().max(1.0) as usize;
        let mut nodes = Vec::new();
        let mut weights = Vec::new();
        if self.dimension() == 1 {
            let n = cells(hi.x - lo.x);
            let dx = (hi.x - lo.x) / n as f64;
            for i in 0..n {
                nodes.push(Point::new(lo.x + (i as f64 + 0.5) * dx, 0.0));
                weights.push(dx);
            }
        } else {
            let nx = cells(hi.x - lo.x);
            let ny = cells(hi.y - lo.y);
            let dx = (hi.x - lo.x) / nx as f64;
            let dy = (hi.y - lo.y) / ny as f64;
            for j in 0..ny {
                for i in 0..nx {
                    let c = Point::new(lo.x + (i as f64 + 0.5) * dx, lo.y + (j as f64 + 0.5) * dy);
                    if self.contains(&c) {
                        nodes.push(c);
                        weights.push(dx * dy);
                    }
                }
            }
        }
        if nodes.is_empty() {
            return Err(Error::ResolutionTooCoarse { h });
        }
        Ok(QuadratureGrid { nodes, weights, h })
    }

    /// Arc-length midpoint grid on the boundary with outward normals. Nodes
    /// are always edge-interior, so corner normals are never needed.
    pub fn boundary_grid(&self, h: f64) -> Result<BoundaryGrid> {
        check_resolution(h)?;
        let mut grid = BoundaryGrid { nodes: Vec::new(), weights: Vec::new(), normals: Vec::new(), h };
        match &self.kind {
            DomainKind::Interval { lo, hi } => {
                grid.push(Point::new(*lo, 0.0), 1.0, Point::new(-1.0, 0.0));
                grid.push(Point::new(*hi, 0.0), 1.0, Point::new(1.0, 0.0));
            }
            DomainKind::Disk { center, radius } => {
                let n = ((2.0 * PI * radius / h) - 1e-9).ceil().max(3.0) as usize;
                let w = 2.0 * PI * radius / n as f64;
                for k in 0..n {
                    let theta = 2.0 * PI * (k as f64 + 0.5) / n as f64;
                    let normal = Point::new(theta.cos(), theta.sin());
                    grid.push(center + *radius * normal, w, normal);
                }
            }
            DomainKind::AxisBox { min, max } => {
                let corners = [*min, Point::new(max.x, min.y), *max, Point::new(min.x, max.y)];
                polygon_boundary(&corners, h, &mut grid);
            }
            DomainKind::ConvexPolygon { vertices } => polygon_boundary(vertices, h, &mut grid),
        }
        if grid.nodes.is_empty() {
            return Err(Error::ResolutionTooCoarse { h });
        }
        Ok(grid)
    }
}

fn check_resolution(h: f64) -> Result<()> {
    if h > 0.0 && h.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("resolution h = {h} must be positive")))
    }
}

fn polygon_boundary(vertices: &[Point], h: f64, grid: &mut BoundaryGrid) {
    let n = vertices.len();
    for i in 0..n {
        let a = vertices[i];
        let b = vertices[(i + 1) % n];
        let len = (b - a).norm();
        let pieces = ((len / h) - 1e-9).ceil().max(1.0) as usize;
        let normal = edge_normal(&a, &b);
        for k in 0..pieces {
            let s = (k as f64 + 0.5) / pieces as f64;
            grid.push(a + s * (b - a), len / pieces as f64, normal);
        }
    }
}

fn cross(a: Point, b: Point) -> f64 {
    a.x * b.y - a.y * b.x
}

fn edge_normal(a: &Point, b: &Point) -> Point {
    let e = b - a;
    Point::new(e.y, -e.x).normalize()
}

fn segment_distance(p: &Point, a: &Point, b: &Point) -> f64 {
    let e = b - a;
    let s = ((p - a).dot(&e) / e.norm_squared()).clamp(0.0, 1.0);
    (p - (a + s * e)).norm()
}

/// Interior quadrature nodes and cell weights.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureGrid {
    nodes: Vec<Point>,
    weights: Vec<f64>,
    h: f64,
}

impl QuadratureGrid {
    /// Assemble a grid from explicit nodes and weights.
    pub fn from_parts(nodes: Vec<Point>, weights: Vec<f64>, h: f64) -> Result<Self> {
        if nodes.is_empty() || nodes.len() != weights.len() {
            return Err(Error::InvalidParameter("grid needs matching, non-empty nodes and weights".into()));
        }
        Ok(Self { nodes, weights, h })
    }

    pub fn nodes(&self) -> &[Point] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn resolution(&self) -> f64 {
        self.h
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn total_weight(&self) -> f64 {
        crate::quadrature::pairwise_sum(&self.weights)
    }

    /// The interior nodes together with `boundary` nodes, for pointwise
    /// checks over the closed domain. Boundary nodes get zero weight.
    pub fn with_boundary(&self, boundary: &BoundaryGrid) -> Self {
        let mut nodes = self.nodes.clone();
        let mut weights = self.weights.clone();
        nodes.extend_from_slice(&boundary.nodes);
        weights.extend(std::iter::repeat_n(0.0, boundary.nodes.len()));
        Self { nodes, weights, h: self.h }
    }
}

/// Boundary quadrature nodes with surface weights and outward normals.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryGrid {
    nodes: Vec<Point>,
    weights: Vec<f64>,
    normals: Vec<Point>,
    h: f64,
}

impl BoundaryGrid {
    fn push(&mut self, node: Point, weight: f64, normal: Point) {
        self.nodes.push(node);
        self.weights.push(weight);
        self.normals.push(normal);
    }

    pub fn nodes(&self) -> &[Point] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn normals(&self) -> &[Point] {
        &self.normals
    }

    pub fn resolution(&self) -> f64 {
        self.h
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn total_weight(&self) -> f64 {
        crate::quadrature::pairwise_sum(&self.weights)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_disk() -> Domain {
        Domain::disk(Point::zeros(), 1.0).unwrap()
    }

    #[test]
    fn diameters() {
        assert_eq!(unit_disk().diameter(), 2.0);
        assert_eq!(Domain::disk(Point::new(1.0, 0.0), 3.0).unwrap().diameter(), 6.0);
        let b = Domain::axis_box(Point::zeros(), Point::new(1.0, 2.0)).unwrap();
        // brute force over corner pairs
        let corners = [Point::zeros(), Point::new(1.0, 0.0), Point::new(1.0, 2.0), Point::new(0.0, 2.0)];
        let brute = corners
            .iter()
            .flat_map(|a| corners.iter().map(move |c| (a - c).norm()))
            .fold(0.0, f64::max);
        assert!((b.diameter() - brute).abs() < 1e-15);
        assert!((b.diameter() - 5f64.sqrt()).abs() < 1e-15);
    }

    fn sampled_extremes(d: &Domain, p: &Point) -> (f64, f64) {
        let g = d.boundary_grid(1e-3).unwrap();
        let corners = match d.kind() {
            DomainKind::AxisBox { min, max } => {
                vec![*min, Point::new(max.x, min.y), *max, Point::new(min.x, max.y)]
            }
            DomainKind::ConvexPolygon { vertices } => vertices.clone(),
            _ => Vec::new(),
        };
        g.nodes().iter().chain(&corners).map(|b| (p - b).norm()).fold((f64::INFINITY, 0.0), |(lo, hi), r| {
            (lo.min(r), hi.max(r))
        })
    }

    #[test]
    fn distance_extremes_match_sampling_oracle() {
        let d = unit_disk();
        let p = Point::new(-18.0, 0.0);
        let (lo, hi) = d.distance_extremes(&p);
        assert!((lo - 17.0).abs() < 1e-12 && (hi - 19.0).abs() < 1e-12);
        let (slo, shi) = sampled_extremes(&d, &p);
        assert!((slo - 17.0).abs() < 1e-5 && (shi - 19.0).abs() < 1e-5);

        let d3 = Domain::disk(Point::new(1.0, 0.0), 3.0).unwrap();
        let (lo, hi) = d3.distance_extremes(&Point::new(4.0, 0.0));
        assert!(lo.abs() < 1e-15 && (hi - 6.0).abs() < 1e-15);

        let iv = Domain::interval(-1.0, 1.0).unwrap();
        assert_eq!(iv.distance_extremes(&Point::new(-5.0, 0.0)), (4.0, 6.0));
        // endpoint scan oracle
        let ends = [-1.0f64, 1.0];
        let far = ends.iter().map(|e| (e + 5.0f64).abs()).fold(0.0, f64::max);
        assert_eq!(far, 6.0);
    }

    #[test]
    fn box_and_polygon_extremes_match_sampling() {
        let b = Domain::axis_box(Point::new(-1.0, -0.5), Point::new(2.0, 1.0)).unwrap();
        let poly = Domain::convex_polygon(vec![
            Point::new(-1.0, -1.0),
            Point::new(1.5, -0.5),
            Point::new(1.0, 1.0),
            Point::new(-0.5, 1.2),
        ])
        .unwrap();
        for d in [&b, &poly] {
            for p in [Point::new(-7.0, 3.0), Point::new(4.0, -2.5), Point::new(0.3, 9.0)] {
                let (lo, hi) = d.distance_extremes(&p);
                let (slo, shi) = sampled_extremes(d, &p);
                assert!((lo - slo).abs() < 1e-5, "{lo} vs {slo}");
                assert!((hi - shi).abs() < 1e-5, "{hi} vs {shi}");
            }
        }
    }

    #[test]
    fn membership() {
        let d = unit_disk();
        assert!(d.contains(&Point::zeros()));
        assert!(d.contains(&Point::new(1.0, 0.0)));
        assert!(!d.contains(&Point::new(1.001, 0.0)));
    }

    #[test]
    fn normals() {
        let d = unit_disk();
        assert_eq!(d.outward_normal(&Point::new(1.0, 0.0)).unwrap(), Point::new(1.0, 0.0));
        assert_eq!(d.outward_normal(&Point::new(0.0, -1.0)).unwrap(), Point::new(0.0, -1.0));
        let b = Domain::axis_box(Point::zeros(), Point::new(1.0, 1.0)).unwrap();
        assert_eq!(b.outward_normal(&Point::new(0.5, 0.0)).unwrap(), Point::new(0.0, -1.0));
        assert!(matches!(b.outward_normal(&Point::new(1.0, 1.0)), Err(Error::CornerPoint { .. })));
        assert!(matches!(d.outward_normal(&Point::new(0.5, 0.0)), Err(Error::NotOnBoundary { .. })));
    }

    #[test]
    fn interior_grids() {
        let d = unit_disk();
        let g = d.interior_grid(0.05).unwrap();
        assert!((g.total_weight() - PI).abs() / PI < 0.02);
        assert!(g.nodes().iter().all(|n| d.contains(n)));

        let b = Domain::axis_box(Point::zeros(), Point::new(1.0, 1.0)).unwrap();
        let g = b.interior_grid(0.25).unwrap();
        assert_eq!(g.len(), 16);
        assert_eq!(g.total_weight(), 1.0);

        let iv = Domain::interval(-1.0, 1.0).unwrap();
        let g = iv.interior_grid(0.5).unwrap();
        let xs: Vec<f64> = g.nodes().iter().map(|p| p.x).collect();
        assert_eq!(xs, vec![-0.75, -0.25, 0.25, 0.75]);
        assert!(g.weights().iter().all(|&w| w == 0.5));
    }

    #[test]
    fn too_coarse_grid_is_rejected() {
        // a thin sliver that misses every cell centroid
        let tri = Domain::convex_polygon(vec![
            Point::new(0.0, 0.0),
            Point::new(1.0, 0.5),
            Point::new(0.98, 0.51),
        ])
        .unwrap();
        assert!(matches!(tri.interior_grid(0.3), Err(Error::ResolutionTooCoarse { .. })));
        assert!(tri.interior_grid(0.01).is_ok());
    }

    #[test]
    fn disk_area_converges_at_first_order() {
        let d = unit_disk();
        let hs = [0.1, 0.05, 0.025, 0.0125];
        let errs: Vec<f64> =
            hs.iter().map(|&h| (d.interior_grid(h).unwrap().total_weight() - PI).abs()).collect();
        // least-squares slope in log-log
        let xs: Vec<f64> = hs.iter().map(|h| h.ln()).collect();
        let ys: Vec<f64> = errs.iter().map(|e| e.ln()).collect();
        let mx = xs.iter().sum::<f64>() / 4.0;
        let my = ys.iter().sum::<f64>() / 4.0;
        let slope = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>()
            / xs.iter().map(|x| (x - mx).powi(2)).sum::<f64>();
        assert!(slope >= 1.0, "observed order {slope}, errors {errs:?}");
    }

    #[test]
    fn boundary_grids() {
        let d = unit_disk();
        let g = d.boundary_grid(0.01).unwrap();
        assert!((g.total_weight() - 2.0 * PI).abs() < 1e-12);
        for (n, b) in g.normals().iter().zip(g.nodes()) {
            assert!((n.norm() - 1.0).abs() < 1e-12);
            assert!(n.dot(&(b - d.centroid())) > 0.0);
        }
        let b = Domain::axis_box(Point::zeros(), Point::new(1.0, 1.0)).unwrap();
        assert_eq!(b.boundary_grid(0.25).unwrap().total_weight(), 4.0);
        let iv = Domain::interval(-1.0, 1.0).unwrap();
        let g = iv.boundary_grid(0.1).unwrap();
        assert_eq!(g.nodes(), &[Point::new(-1.0, 0.0), Point::new(1.0, 0.0)]);
        assert_eq!(g.normals(), &[Point::new(-1.0, 0.0), Point::new(1.0, 0.0)]);
        assert_eq!(g.weights(), &[1.0, 1.0]);
    }

    #[test]
    fn rejects_invalid_domains() {
        assert!(Domain::disk(Point::new(3.0, 0.0), 1.0).is_err());
        assert!(Domain::interval(1.0, -1.0).is_err());
        assert!(Domain::convex_polygon(vec![
            Point::new(-1.0, -1.0),
            Point::new(-1.0, 1.0),
            Point::new(1.0, 1.0),
        ])
        .is_err());
    }
}
