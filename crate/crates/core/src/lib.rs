//! Second-order asymptotics for fixed-length visible source coding of mixed
//! sources.
//!
//! A mixed source emits all `n` letters from one of finitely many memoryless
//! components, chosen once with fixed prior weights. Every component here shares
//! one eigenbasis, so all quantities of interest depend only on the component
//! spectra (probability vectors).
//!
//! The crate has two halves:
//!
//! - asymptotic predictions: entropies and varentropies ([`model`]), the
//!   Gaussian helpers ([`gaussian`]) and the second-order rate equations
//!   ([`rates`]);
//! - an exact finite-blocklength oracle built from type classes
//!   ([`spectrum`], [`universal`]) that the predictions are checked against
//!   ([`experiments`]).
//!
//! The [`cli`] module wraps everything behind the `soca` binary.

#![forbid(unsafe_code)]

pub mod cli;
pub mod error;
pub mod experiments;
pub mod gaussian;
pub mod model;
pub mod rates;
pub mod spectrum;
pub mod sum;
pub mod universal;

pub use error::{Error, Result, ValidationError};
pub use model::{EntropyClasses, MixedSourceSpec, SourceSpectrum, SourceStats};
pub use rates::{RateCase, RateQuery, RateResult};
pub use spectrum::{Spectrum, SpectrumAtom, TypeCap, TypeComposition};

pub use universal::UniversalDims;
