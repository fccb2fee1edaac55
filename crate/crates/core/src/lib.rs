//! Constructive pipeline from EndOfTheLine instances to Lipschitz Brouwer maps
//! and imitation games, with exhaustive desk-scale verifiers.
//!
//! The stages are:
//!
//! 1. [`end_of_line`]: successor/predecessor circuits and their solutions.
//! 2. [`embed`]: vertex-disjoint paths on the `(2n+1)`-cube with local queries.
//! 3. [`brouwer`]: a displacement field on `[0,1]^(2n+2)` whose near-zeros sit
//!    exactly at path ends and extra path starts.
//! 4. [`imitation`]: the two-group imitation game whose well-supported
//!    equilibria encode approximate fixed points.
//!
//! [`verify`] and [`solve`] hold the certifiers and brute-force oracles.

pub mod brouwer;
pub mod circuits;
pub mod embed;
pub mod end_of_line;
pub mod error;
pub mod exact;
pub mod formats;
pub mod imitation;
pub mod solve;
pub mod verify;

pub use brouwer::{BrouwerMap, Point, RegionDescriptor, RegionKind, ToySpec};
pub use circuits::{BitCircuit, Gate, GateKind, Ref};
pub use embed::{LocalPathInfo, PathVertex};
pub use end_of_line::{EolInstance, EolSolution, SolutionKind};
pub use error::{Error, Result};
pub use imitation::{ImitationGame, MixedProfile};
pub use verify::{Game, Mode, VerificationReport};
