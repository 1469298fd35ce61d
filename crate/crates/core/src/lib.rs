//! Pleasant-route recommendation over a city grid.
//!
//! The pipeline: tile a bounding box into a [`geo_grid::LocationGraph`],
//! score every cell for beauty, quiet and happiness from pairwise scene votes
//! ([`perception`]) or photo metadata ([`flickr_proxy`]), and pick among the
//! k shortest walks the one with the best mean rank ([`route_engine`]).
//! [`evaluation`] measures recommended routes against the shortest ones.

pub mod fixtures;
pub mod flickr_proxy;
pub mod artifacts;
pub mod evaluation;
pub mod geo_grid;
pub mod perception;
pub mod route_engine;

pub use geo_grid::{BoundingBox, LocationGraph};
pub use perception::{Quality, QualityField, ScoringCurve};
pub use route_engine::{ExplorationPolicy, PathCandidate, RoutePlan, RouteVariant, RoutingGraph};
