//! Convex planar polygons and the domain families used by the solvers.

mod domain;
mod io;
mod point;
mod polygon;

pub use domain::{make_perforated_square, Domain, PerforatedSquare, HOLE_VERTICES};
pub use io::{format_polygon, parse_domain_spec, parse_polygon, read_domain, read_polygon};
pub use point::Point;
pub use polygon::{ConvexPolygon, HalfPlane, DISC_VERTICES};
