//! Normed-space primitives and the domain catalog.

pub mod bvh;
pub mod domain;
pub mod knn;
pub mod norm;
pub mod polyline;
pub mod predicates;
pub mod sampling;

pub use domain::{Domain, DomainSpec, ObstacleSpec, ShapeSpec, Window};
pub use norm::{Norm, NormSpace, Point};
pub use polyline::Polyline;
pub use sampling::sample_interior;
