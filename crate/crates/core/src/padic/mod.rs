//! Exact arithmetic in `Z/p^k` and `O_L/p^k O_L`.

pub mod log;
pub mod modulus;
pub mod quad;
pub mod snf;
pub mod units;

pub use log::{padic_exp, padic_log};
pub use modulus::{Modulus, ResidueInt};
pub use quad::{quad_ext_arith, El, ExtKind, QuadExtDescriptor, QuadExtElement, QuadOp, QuadOpResult, Ring};
pub use units::{discrete_log, unit_group_structure, UnitGroupStructure};
