//! Generalized Kloosterman sums attached to local representations.

pub mod crt;
pub mod fiber;
pub mod local;

pub use crt::{h_crt, Family};
pub use fiber::{norm_fiber_table, NormFiberTable};
pub use local::{
    h_local, local_invariants, write_table_csv, LocalInvariants, LocalKind, LocalRepDescriptor, NormalizedKloosterman, Rational,
};
