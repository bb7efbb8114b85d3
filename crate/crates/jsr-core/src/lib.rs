//! Certified bounds on the joint spectral radius of a finite family of
//! real square matrices, plus detectors that recognize families whose
//! joint spectral radius is attained by a finite product and emit
//! checkable certificates for them.
//!
//! The crate is organized in layers. [`matrix`] and [`eigen`] provide the
//! dense linear-algebra kernels (products, Gram matrices, eigenvalues by
//! balanced Hessenberg QR, symmetric eigenvalues by Jacobi rotations).
//! [`words`] handles finite words over the family and their products.
//! [`bounds`] turns product scans into certified lower/upper bounds,
//! [`criteria`] hosts the certificate detectors behind a runtime registry,
//! and [`switching`] analyzes a parametric pair family through an
//! extremal-norm construction and switching-frequency estimates.
//!
//! Numeric routines return [`error::Error`] instead of panicking, and all
//! enumeration respects explicit node budgets so worst-case exponential
//! scans fail fast with an accounting of what they would have cost.

pub mod bounds;
pub mod config;
pub mod criteria;
pub mod eigen;
pub mod error;
pub mod matrix;
pub mod switching;
#[cfg(any(test, feature = "testutil"))]
pub mod testutil;
pub mod words;

pub use config::Config;
pub use error::{Error, Result};
pub use matrix::Matrix;
pub use words::{MatrixSet, Word};
