//! Numerical laboratory for entanglement of convex cones.
//!
//! The crate is organised around a handful of subsystems:
//!
//! - [`jordan`]: Euclidean Jordan algebras (spin factors and complex
//!   Hermitian matrices) with their spectral calculus.
//! - [`cones`]: proper cones, maximal tensor product membership against
//!   `ℓ1` factors, twirling, isotropic and central maps.
//! - [`certificate`]: self-checking evidence objects.
//! - [`compalg`]: real composition algebras and the distillation-style
//!   protocol iteration on Lorentz cones.
//! - [`hurwitz`]: Hurwitz–Radon families and witness tensors.
//! - [`psdmaps`]: positive maps on Hermitian matrices and their Lorentz
//!   factorizations.
//! - [`norms`]: injective/projective tensor norms, nuclear norms and
//!   tensor-radius bounds.
//! - [`sinkhorn`]: operator scaling on symmetric cones and the explicit
//!   `ℓ1` entanglement-breaking decomposition.
//! - [`suite`]: the acceptance battery used by tests and the CLI.

pub mod certificate;
pub mod compalg;
pub mod cones;
pub mod error;
pub mod hurwitz;
pub mod jordan;
pub mod linalg;
pub mod norms;
pub mod psdmaps;
pub mod serde_util;
pub mod sinkhorn;
pub mod suite;
pub mod tensor;

pub use error::{Error, Result};

/// Default relative tolerance for cone and idempotency checks.
pub const DEFAULT_TOL: f64 = 1e-9;
