//! Discrete-time quantum dynamics recast as ground-state and linear-system
//! problems on a composite system-time Hilbert space.
//!
//! A trajectory |Ψ_0⟩, U_0|Ψ_0⟩, U_1 U_0|Ψ_0⟩, … is encoded in a single
//! history state on the system⊗time space. The [`clock`] module builds the
//! Hermitian clock operator whose ground state is that history state, the
//! [`pint`] module solves the equivalent positive-definite linear system in
//! parallel over time slices, [`spin`] applies configuration-interaction
//! truncations in trajectory space to a three-spin model, and [`metrics`]
//! quantifies basis-truncation error through norm loss.
//!
//! Dense kernels live in [`linalg`]; concrete propagators (exponential,
//! enforced time-reversal symmetry, split-operator Fourier) in
//! [`propagators`].

pub mod clock;
mod error;
pub mod linalg;
pub mod metrics;
pub mod pint;
pub mod propagators;
pub mod spin;

pub use error::{Error, Result};
pub use linalg::{C64, DenseHermitian, HermitianOp, HistoryState, StateVector};
pub use propagators::PropagatorProvider;
