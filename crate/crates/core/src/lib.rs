//! Thickness functions on convex cores, the radial/reciprocal return map
//! F = π∘Φ they induce, and tools to study F as a discrete dynamical system:
//! equilibria, Morse indices, orbit audits and local linearization.

pub mod error;
pub mod fd;
pub mod geometry2d;
pub mod linalg;
pub mod boundary;
pub mod sphere;
pub mod thickness;
pub mod return_map;
pub mod morse;
pub mod dynamics;
pub mod linearization;
pub mod scenario;
pub mod verification;

pub use error::{Error, Result};
pub use boundary::{BoundaryPoint, Core};
pub use dynamics::{basin_scan, cycle_audit, descent_audit, iterate_orbit, monotonicity_audit, LyapunovSense, OrbitParams, OrbitTrace};
pub use linearization::{curvature_gap_spectrum, local_estimates, normal_form_frame, operator_a, stability_classify, Convention};
pub use morse::{analyze, locate_equilibria, morse_catalog, topology_audit, Classification, EquilibriumRecord, MorseCatalog, TopologyDescriptor};
pub use return_map::{admissibility_audit, ReturnMapSystem, Tolerances};
pub use scenario::{parse_scenario, Scenario, SeedSpec};
pub use thickness::ThicknessField;
