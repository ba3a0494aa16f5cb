//! Error type shared by all modules.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// The model breaks a structural invariant (shape, labels, generator rows).
    #[error("invalid chain model: {0}")]
    InvalidModel(String),

    /// The positive-rate digraph is not strongly connected.
    #[error("chain is reducible; the stationary distribution is not unique")]
    ReducibleChain,

    /// A dense solve degenerated; signals an invariant violation upstream.
    #[error("singular linear system in stationary solve")]
    SingularSystem,

    /// The marked-column hitting matrix lost full rank; impossible for valid
    /// irreducible input, so this signals corruption or a bug.
    #[error("hitting-system matrix is singular")]
    SingularHittingMatrix,

    /// A solved quantity left its mathematically guaranteed range by more
    /// than the accepted tolerance.
    #[error("numerical drift: {0}")]
    NumericalDrift(String),

    #[error("invalid glue spec: {0}")]
    InvalidGlueSpec(String),

    /// The parallel-case closed form was requested although the stationary
    /// ratios at the glued states differ.
    #[error("glued-state stationary ratios are not parallel: {0}")]
    NotParallel(String),

    /// Crossing intensities between the glued states vanished; impossible for
    /// irreducible inputs.
    #[error("degenerate crossing intensities: {0}")]
    DegenerateIntensities(String),

    /// Weight recovery from stationary vectors is undefined when the ratios
    /// are parallel (the defining denominators vanish).
    #[error("weights from stationary vectors are undefined in the parallel case: {0}")]
    ParallelCase(String),

    /// A simulated excursion failed to absorb within the jump budget.
    #[error("simulation watchdog tripped after {jumps} jumps without absorption")]
    Watchdog { jumps: u64 },
}

pub type Result<T> = std::result::Result<T, Error>;
