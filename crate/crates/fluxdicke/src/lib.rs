//! Spectral toolkit for two superconducting flux qubits sharing an LC resonator.
//!
//! The crate models a pair of four-junction flux qubits galvanically coupled to
//! a lumped-element resonator deep in the ultrastrong-coupling regime
//! (coupling rates a sizeable fraction of the resonator frequency). It covers
//! the full chain from circuit to data:
//!
//! * [`linalg`] / [`operators`] — dense complex matrices, tensor products,
//!   bosonic and spin operators, and a checked Hermitian eigensolver.
//! * [`model`] — the two-qubit-plus-resonator Hamiltonian in the flux basis,
//!   the rotated (qubit-diagonal) frame, and a renormalized-gap
//!   non-interacting reference model.
//! * [`longitudinal`] — exact closed-form solution of the zero-gap
//!   (purely longitudinal) limit, used as an oracle for the numerics and as
//!   the explanation for the spectrum's sign asymmetry in the qubit bias.
//! * [`spectrum`] — bias sweeps, transition-frequency tables, bare-state
//!   projections, avoided-crossing search, and dressed-frequency extraction.
//! * [`circuit`] — charge-basis quantization of the underlying junction
//!   circuit: qubit levels, coupling matrix elements, and the two-level
//!   reduction that feeds the model parameters.
//! * [`fit`] / [`nelder_mead`] — recovery of the eleven device parameters
//!   from measured peak positions by staged derivative-free least squares.
//! * [`config`] / [`run`] — the sectioned key=value config format and the
//!   command drivers shared by the `fluxdicke` binary and the examples.
//!
//! All energies are linear frequencies in GHz (h = 1); the subsystem order is
//! fixed everywhere as (qubit 1, qubit 2, resonator).
//!
//! # Examples
//!
//! Each major capability has a runnable example:
//!
//! ```text
//! cargo run --release --example sweep          # transition spectrum vs bias
//! cargo run --release --example anticross      # avoided-crossing search
//! cargo run --release --example projections    # bare-state composition
//! cargo run --release --example oracle         # longitudinal-limit checks
//! cargo run --release --example fit_roundtrip  # parameter recovery
//! cargo run --release --example quantize       # circuit-level reduction
//! cargo run --release --example reference      # non-interacting reference
//! ```
//!
//! The `fluxdicke` binary exposes the same capabilities as config-driven
//! subcommands (`sweep | anticross | project | oracle | fit | quantize`).

pub mod circuit;
pub mod config;
pub mod fit;
pub mod linalg;
pub mod longitudinal;
pub mod model;
pub mod nelder_mead;
pub mod operators;
pub mod run;
pub mod spectrum;

pub use linalg::{hermitian_eig, hermitian_eigenvalues, kron, CMatrix, EigenDecomposition};
pub use model::{
    build_h_dicke, build_h_flux, build_h_reference, mixing_angle, qubit_frequency, DickeParams,
};
pub use spectrum::{
    apply_crosstalk, bias_to_epsilon, epsilon_to_bias, find_anticrossing, sweep, SweepCalibration,
};

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Input to the eigensolver was not Hermitian within tolerance.
    #[error(
        "matrix is not Hermitian: max |H - H^\u{2020}| = {max_asymmetry:.3e} \
         exceeds {tol:.3e} (1e-12 of the largest element)"
    )]
    NotHermitian { max_asymmetry: f64, tol: f64 },

    /// The backend failed to converge on a decomposition.
    #[error("eigendecomposition failed: {0}")]
    EigenFailed(String),

    /// A produced decomposition violated its accuracy contract.
    #[error("eigendecomposition {what} check failed: {value:.3e} > {tol:.3e}")]
    EigenContract {
        what: &'static str,
        value: f64,
        tol: f64,
    },

    /// Operator or state dimensions do not match.
    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    /// A parameter failed validation.
    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    /// An avoided-crossing search window contained no interior gap minimum.
    #[error(
        "gap is monotone over the search window (gap {gap_start:.6} GHz at the start, \
         {gap_stop:.6} GHz at the end); no avoided crossing reported"
    )]
    MonotoneGap { gap_start: f64, gap_stop: f64 },

    /// A basis-cutoff convergence check failed.
    #[error("not converged: {0}")]
    NotConverged(String),

    /// A bare-state label was outside the configured basis.
    #[error("unknown state label `{0}`")]
    UnknownLabel(String),

    /// Config file syntax or content error, anchored to a line.
    #[error("config line {line}: {message}")]
    Config { line: usize, message: String },

    /// CSV input error, anchored to a line.
    #[error("csv line {line}: {message}")]
    Csv { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
