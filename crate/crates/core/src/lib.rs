//! Feasible-mass laboratory for generic and constraint-enhanced QAOA on
//! permutation-constrained problems.
//!
//! * [`instance`]: instance parsing, one-hot penalty cost, permutation feasibility.
//! * [`fullspace`]: dense `2^{n^2}` statevector simulation with the X mixer.
//! * [`subspace`]: `n^n` block-one-hot simulation with the block XY mixer.
//! * [`harmonic`]: Walsh spectra, Krawtchouk polynomials, permutation spectrum.
//! * [`bounds`]: closed-form envelopes evaluated in log space.
//! * [`experiments`]: grid searches, angle averages, transfer and shot runs.

pub mod bounds;
pub mod error;
pub mod experiments;
pub mod fullspace;
pub mod harmonic;
pub mod instance;
pub mod linalg;
pub mod sampling;
pub mod subspace;

pub use error::{Error, Result};
pub use fullspace::{AngleSchedule, CostTable, FullState, Precision};
pub use instance::{Bitstring, DiagonalCost, ProblemInstance};
pub use subspace::{BlockMixer, BlockPermutation, SubspaceState};
