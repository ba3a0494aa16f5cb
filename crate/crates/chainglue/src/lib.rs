//! Stationary distributions of finite continuous-time Markov chains that are
//! built by gluing two irreducible chains together at one or two shared states.
//!
//! The crate has four layers:
//!
//! * [`chain`] — rate matrices, generator validation, irreducibility, and the
//!   direct null-space stationary solver that serves as the reference route.
//! * [`excursion`] — everything a single chain knows about two marked states:
//!   first-passage (excursion) probabilities, conditional occupation
//!   expectations, crossing intensities, and the weight vectors combining them.
//! * [`compose`] — the gluing constructions themselves plus the stationary
//!   formulas: one-state gluing, the excursion-decomposition solution for
//!   two-state gluing, the parallel-case closed form, and sandwich bounds for
//!   the non-parallel case.
//! * [`simulate`] — a seeded jump-process simulator and regenerative-cycle
//!   statistics used as an independent empirical check of the linear-algebra
//!   routes.
//!
//! All operations are pure functions of immutable inputs and are safe to call
//! concurrently.

pub mod chain;
pub mod compose;
pub mod error;
pub mod excursion;
pub mod simulate;

pub use chain::{is_irreducible, stationary_direct, validate, ChainModel, RateMatrix};
pub use chain::{Method, StationaryResult, ValidationReport};
pub use compose::{glue_one, glue_two, GlueSpec, GluedChain};
pub use error::{Error, Result};
pub use excursion::{ExcursionProfile, Mark, MarkedChain};
