//! Continuous and discrete Moyal-type phase-space representations of a
//! quantum spin.
//!
//! A spin-s operator can be traded for a function on the sphere (its
//! symbol) through an operator kernel satisfying Stratonovich-Weyl-type
//! postulates. This crate implements both flavours of that correspondence:
//!
//! - **continuous**: self-dual Wigner kernels and dual (Berezin) P/Q kernel
//!   pairs, with symbols defined everywhere on the sphere;
//! - **discrete**: kernels supported on a constellation of (2s+1)^2 points,
//!   whose symbols carry exactly the information content of the operator
//!   and double as measurable Stern-Gerlach probabilities.
//!
//! Supporting modules provide the angular-momentum special functions
//! (`angular`), dense operator algebra (`opalg`), sphere quadrature
//! (`quadrature`), constellation generators and validity tests
//! (`constellation`), closed-form spin-1/2 oracles (`spinhalf`) and state
//! reconstruction (`tomography`).

pub mod angular;
pub mod constellation;
pub mod continuous;
pub mod discrete;
pub mod error;
pub mod opalg;
pub mod quadrature;
pub mod spinhalf;
pub mod tomography;

pub use angular::{Direction, SpinJ, StereoPoint};
pub use error::{Error, Result};
pub use opalg::{Operator, RealMatrix};
