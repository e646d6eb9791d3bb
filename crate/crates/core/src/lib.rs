//! Matroid tableaux and a decision procedure for gammoid class membership.
//!
//! The crate is organised bottom-up:
//!
//! * [`matroid`], [`canonical`] and [`minors`]: explicit matroids by basis
//!   family with rank, closure, flats, duality, minors and exact isomorphism
//!   keys.
//! * [`invariants`]: the α-invariant and the certificate tests (strict
//!   gammoid, strongly base-orderable, excluded minors, rank-3 contractions).
//! * [`extension`]: modular cuts, single-element extensions, deflation and
//!   enumeration of extensions up to isomorphism.
//! * [`oracle`]: gammoids built from digraphs by vertex-disjoint routings.
//! * [`tableau`] and [`kb`]: matroid tableaux, their derivations and the
//!   knowledge-base file format.
//! * [`engine`]: the step-by-step decision procedure, sequential or with
//!   several workers sharing one tableau.

pub mod canonical;
pub mod catalog;
pub mod engine;
pub mod error;
pub mod extension;
pub mod format;
pub mod invariants;
pub mod kb;
pub mod matroid;
pub mod minors;
pub mod oracle;
pub mod set;
pub mod tableau;

pub use canonical::{canonical_key, is_isomorphic, CanonicalKey, CANONICAL_CAP};
pub use error::{Error, Result};
pub use matroid::{Matroid, MinorSpec};
pub use set::{ElementSet, MAX_ELEMENTS};
