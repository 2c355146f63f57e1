//! Fixtures shared by the criterion benches.

use std::sync::Arc;

use carleman_core::verify::weight_time_grid;
use carleman_core::{
    manufactured_solution, uniform_partition, CarlemanWeight, Discretization, Domain, Point, Profile, Result,
    SolutionField, VelocityField,
};

/// Unit disk with a unit field along `x` over `[0, horizon]`.
pub fn disk_weight(horizon: f64) -> Result<(Domain, VelocityField, CarlemanWeight)> {
    let domain = Domain::disk(Point::zeros(), 1.0)?;
    let field = VelocityField::constant(Point::new(1.0, 0.0), horizon)?;
    let partition = uniform_partition(&field, 0.8)?;
    let weight = CarlemanWeight::build(&domain, &field, &partition, 2.0)?;
    Ok((domain, field, weight))
}

pub fn gaussian() -> Profile {
    Profile::Gaussian { center: Point::new(0.1, -0.2), width: 0.5, amplitude: 1.0 }
}

/// Manufactured Gaussian on the disk fixture at resolution `h` and time step `dt`.
pub fn disk_solution(horizon: f64, h: f64, dt: f64) -> Result<(Arc<Discretization>, CarlemanWeight, SolutionField)> {
    let (domain, field, weight) = disk_weight(horizon)?;
    let setup = Discretization::new(domain, field, h)?;
    let u = manufactured_solution(setup.clone(), &gaussian(), weight_time_grid(&weight, dt)?)?;
    Ok((setup, weight, u))
}
