//! Privacy-preserving recovery of multi-attribute sensor matrices.
//!
//! The crate is organised bottom-up:
//!
//! * [`matrix`]: environment/mask/sensed/recovered matrix types, NSE, spectrum
//!   analysis, normalization and the CSV interchange format.
//! * [`kvp`]: K-vector perturbation (public vectors, private keys, encrypt/decrypt).
//! * [`recovery`]: alternating least-squares completion, single attribute and
//!   multi-attribute with a shared component, plus the encrypt-recover-decrypt
//!   pipelines.
//! * [`jsd`]: joint sparse decomposition over an orthonormal Haar basis, used as a
//!   correlation diagnostic.
//! * [`data`]: record parsing, ground-truth extraction, outlier clamping, mask
//!   generation and a synthetic dataset generator.
//! * [`experiment`]: the seeded sampling-rate sweep, aggregation and result files.
//!
//! Column-wise solves, JSD column decompositions and sweep cells run on rayon when
//! the `parallel` feature (on by default) is enabled, and sequentially otherwise.
//! Results are identical either way.

pub mod data;
pub mod error;
pub mod experiment;
pub mod jsd;
pub mod kvp;
pub mod matrix;
mod par;
pub mod recovery;
pub mod seed;

pub use error::{Error, Result};
pub use nalgebra::DMatrix;
