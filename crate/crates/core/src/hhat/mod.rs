//! The multiplicative transform `hat H(psi, a1, a2, a3)` of local
//! Kloosterman sums: brute force, closed forms, critical sets and bounds.

pub mod bounds;
pub mod brute;
pub mod closed;
pub mod critical;
pub mod mult;
pub mod query;

pub use bounds::{
    certify_bounds, certify_value, hhat_degenerate_support, hhat_eval, BoundCertificate, BoundKind, Support, Verdict,
};
pub use brute::{hhat_bruteforce, hhat_definition, hhat_exact, hhat_table, hhat_uform, HhatTable};
pub use closed::{
    calibrate_ramified_constant, critical_term, gp_prime, hhat_closed_form, hhat_closed_form_with, hhat_trivial,
    ramified_constant, Calibration, ClosedFormOptions,
};
pub use critical::{critical_sets, critical_sets_for, CriticalData, CriticalKind, CriticalSet};
pub use mult::{epsilon_factor, epsilon_multiplicativity, hhat_composite_bruteforce, MSplit, MultCheck, PsiPart};
pub use query::{psi_from_index, psi_index, Branch, CyclicUnits, HhatQuery, HhatValue, DEFAULT_BUDGET};
