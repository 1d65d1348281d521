//! Characters of `(Z/p^k)^x` and `(O_L/p^k)^x`.

pub mod admissible;
pub mod character;
pub mod postnikov;

pub use admissible::{admissible_pairs, eta_on_units, AdmissiblePair, PairData};
pub use character::{conductor, cyclic_chars, enumerate_chars, CharLabel, MultChar};
pub use postnikov::{postnikov_ell, PostnikovElement};
