#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

//! Numerical laboratory for fourth-order Willmore energies of 4-dimensional
//! immersions: pointwise extrinsic geometry from exact jets, inversion and its
//! boundary residue, triharmonic interpolation on annuli, the associated
//! bilinear-form energy ledger, and trace-norm rotation alignment.

pub mod bilinear;
pub mod error;
pub mod geometry;
pub mod harmonics;
pub mod inversion;
pub mod jet;
pub mod pipeline;
pub mod quadrature;
pub mod rotation;
pub mod scalar;
pub mod triharmonic;

pub use bilinear::{energy_difference, gram_matrix, EnergyLedger, GramMatrix};
pub use error::{Error, Result};
pub use geometry::{EnergyBreakdown, ImmersionPatch};
pub use harmonics::{Bilinear, FormCoefficients, Trilinear};
pub use pipeline::{ConnectedSumSpec, MarginReport};
pub use quadrature::{Domain, QuadSpec, VOL_S3};
pub use rotation::{RotationResult, TracelessFormTuple};
pub use triharmonic::{Family, Interpolant};
