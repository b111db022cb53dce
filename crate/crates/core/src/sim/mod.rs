//! Sparse state-vector simulator with register bookkeeping and gate
//! accounting, plus a brute-force dense oracle for verification.

pub mod amplify;
pub mod counter;
pub mod dense;
pub mod dump;
pub mod label;
pub mod layout;
pub mod state;

pub use amplify::{amplitude_amplify_region, AmplifyReport};
pub use counter::GateCounter;
pub use dense::DenseState;
pub use label::{BasisLabel, Span};
pub use layout::{RegisterId, RegisterLayout, DEFAULT_WIDTH_CAP};
pub use state::{
    check_unitary, hadamard, pauli_x, pauli_z, BitIsOne, BranchBijection, LiveOp, NonZeroField,
    Op, OpLog, PhasePredicate, SparseState, XorConstField, NORM_TOL, PRUNE_TOL,
};
