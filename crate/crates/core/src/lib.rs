//! Markov dynamics on the duals of U(N) and U_q(N) and multilevel dynamics
//! on Gelfand-Tsetlin patterns.
//!
//! Kernels are built by determinantal formulas over the Laurent coefficients
//! of a Voiculescu function and checked against an independent fusion-rule
//! route built from Littlewood-Richardson coefficients and (quantum)
//! dimensions.

pub mod error;
pub mod evolve;
pub mod generators;
pub mod io;
pub mod linalg;
pub mod links;
pub mod oracle;
pub mod signatures;
pub mod symfunc;
pub mod toeplitz;
pub mod verify;
pub mod voiculescu;

pub use error::{Error, Result};
pub use generators::{Deformation, KernelKind, KernelMatrix, Measure};
pub use signatures::{GTPattern, Signature, SignatureBox, XConfig};
pub use voiculescu::{CoeffWindow, OmegaPoint};
