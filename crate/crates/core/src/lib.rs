// SPDX-License-Identifier: MIT OR Apache-2.0
//! Minimal weighted L² integrals with gain on products of model Riemann surfaces.
//!
//! The crate models products of unit discs and round annuli, the
//! plurisubharmonic weights built from their Green functions, and the
//! jet-constrained minimal L² integral `G(t; c)` over sublevel sets.  Around
//! that engine sit closed forms for the linear case, concavity and linearity
//! diagnostics of `r ↦ G(h⁻¹(r))`, Bergman-kernel based Suita and Ohsawa checks,
//! and an independent quadrature oracle.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod closedforms;
pub mod error;
pub mod gain;
pub mod l2min;
pub mod numerics;
pub mod oracle;
pub mod suita;
pub mod surfaces;
pub mod weights;

pub use error::{Error, Result};
pub use gain::GainFunction;
pub use l2min::{BasisSpec, GramMatrix, L2Problem, MinimizerResult};
pub use num_complex::Complex64;
pub use surfaces::{CharacterPeriod, HarmonicWeight, ModelSurface};
pub use weights::{FactorSpec, JetGerm, Mass, MultiIndexSet, Perturbation, WeightSpec};
