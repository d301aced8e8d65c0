//! Workload characterization and moldable-job scheduling for multi-GPU
//! training nodes.
//!
//! The crate is `no_std` (it needs `alloc`) and contains only the numerical
//! parts of the toolkit:
//!
//! * [`model`]: domain types shared by every analysis (metric matrices,
//!   kernel records, moldable jobs) and their validation.
//! * [`stats`]: z-score standardization, a cyclic Jacobi eigensolver and
//!   principal component analysis over a workload/metric matrix.
//! * [`cluster`]: pairwise distances, agglomerative clustering, dendrogram
//!   cuts, medoid selection and subset coverage.
//! * [`roofline`]: arithmetic intensity, attainable performance and
//!   memory/compute boundedness.
//! * [`sched`]: naive, list, exhaustive and branch-and-bound scheduling of
//!   moldable jobs on identical GPUs.
//!
//! Parsing, file formats and the command-line front end live in the
//! `perf-charter` crate.
#![no_std]
#![deny(missing_docs)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod cluster;
pub mod matrix;
pub mod model;
pub mod roofline;
pub mod sched;
pub mod stats;

pub use matrix::Matrix;
