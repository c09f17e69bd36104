//! Lattice Riemannian metrics built from field samples, shortest-path
//! crossing lengths, distances, diameters and Weyl scaling.

pub mod families;
pub mod lattice;
pub mod paths;

pub use families::{
    chaining_family, chaining_report, crosses, ik_family, ik_lower_bound, ik_scales, lemcro_cover, max_crossing, min_crossing, nested_crossings, ChainingReport, NestedCrossings,
    OrientedRect,
};
pub use lattice::{build_metric, build_metric_with, weyl_scale, Edge, LatticeMetric, Stencil};
pub use paths::{crossing_length, diameter, distances_from, path_length, point_distance, sides, CrossingResult, DiameterBounds, Orientation};
