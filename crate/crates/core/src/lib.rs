//! Numerical laboratory for centralizers on finite-dimensional Köthe lattices.
//!
//! * [`measure`]: atomic measure spaces, vectors, rearrangements, rank function.
//! * [`spaces`]: norm oracles for the example lattices.
//! * [`centralizers`]: Kalton-Peck, Kalton's κ, interpolation derivations,
//!   numerical Lozanovskii factorization and the twisted-sum quasi-norm.
//! * [`diagnostics`]: sign averages ∇, growth parameters M/m, triviality
//!   distances and the two-sided tracks for the super-disjoint-singularity
//!   modulus.
//! * [`battery`]: the acceptance battery shared by tests and the CLI.

pub mod battery;
pub mod centralizers;
pub mod diagnostics;
pub mod error;
pub mod measure;
pub mod spaces;

pub use centralizers::{Centralizer, CentralizerKind, Decomposition, SolverConfig};
pub use error::{Result, TwistError};
pub use measure::{AtomSpace, DisjointFamily, KVec};
pub use spaces::{KotheNorm, NormKind};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
