//! Coherence quantification on top of pure-state coherence measures.
//!
//! The crate is organised bottom-up:
//!
//! * [`states`] validated density matrices, pure states and coherence vectors;
//! * [`pscm`] pure-state coherence measures on coherence vectors and a
//!   sampling verifier for the four defining conditions;
//! * [`majorization`] the majorization order and the pure-state incoherent
//!   transformability test built on it;
//! * [`decomposition`] spectral data and pure-state ensembles of a density matrix;
//! * [`quantifiers`] the mixed-state quantifiers (C_P, convex roof) and the
//!   non-convexity search;
//! * [`cli`] the `coherence-lab` command line.

pub mod cli;
pub mod decomposition;
pub mod error;
pub mod majorization;
pub mod pscm;
pub mod quantifiers;
pub mod seeds;
pub mod states;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
