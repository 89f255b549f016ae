//! Exact-arithmetic toolkit for normal and almost-normal surface theory over
//! triangulated closed orientable 3-manifolds.
//!
//! The crate is organised around the pipeline that turns a gluing table into
//! Heegaard-surface candidates:
//!
//! - [`tri`]: gluing tables, skeletal orbits, orientability.
//! - [`coords`]: normal/almost-normal coordinate vectors, matching equations,
//!   admissibility, Haken sums.
//! - [`hilbert`]: vertex and fundamental (Hilbert-basis) solutions of the
//!   admissible cone, and decomposition over them.
//! - [`topology`]: cellular reconstruction of carried surfaces and component
//!   classification.
//! - [`intersect`]: double-curve tracing, triple-point counts and homology
//!   classes of intersection curves.
//! - [`carrier`]: branched surfaces assembled from disk-type supports, branch
//!   equations, vertical-boundary circuits, and bounded disk searches.
//! - [`pipeline`]: torus/non-torus splitting, coefficient-bounded candidate
//!   streams, balanced-curve reduction, twist normalisation and regular-set
//!   checks.

pub mod coords;
pub mod hilbert;
pub mod carrier;
pub mod intersect;
pub mod pipeline;
pub mod topology;
pub mod tri;

pub use coords::{MatchingSystem, SurfaceVector};
pub use hilbert::{EnumLimits, FundamentalSet, SupportFace};
pub use carrier::{BranchedCarrier, Circuit, DiskDirection, DiskSearchResult};
pub use intersect::{intersection_complexity, IntersectionReport};
pub use pipeline::{BalancedSequence, Decomposition, RegularSetReport};
pub use topology::{CarriedSurface, ComponentReport, SurfaceKind};
pub use tri::{Skeleton, Triangulation};
