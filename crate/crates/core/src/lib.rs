//! Rearranged conditionally convergent series as walk generators.
//!
//! A rearranged series is studied through its walk, the sequence of partial
//! sums. This crate builds the classical walks whose limit sets exhibit the
//! finite-dimensional dichotomy and its failure in `c0`, rearranges series
//! toward prescribed limit sets, and estimates limit sets from finite
//! prefixes.

pub mod analysis;
pub mod error;
pub mod generators;
pub mod io;
pub mod metric;
pub mod plot;
pub mod rearrange;
pub mod scalar;
pub mod seqspace;
pub mod series;
pub mod vector;
pub mod walk;

pub use error::{Error, Result};
pub use metric::{gap_chainable, gap_components, hausdorff_distance, PointSample};
pub use scalar::{Dyadic, Scalar};
pub use vector::{NormKind, Point, SparseVec, Vector};
pub use walk::{build_xwalk, walk_to_series, PartialPermutation, SignedSeries, Walk};
