//! Exponential sums: classical sums, quadratic Gauss sums, square-root
//! counts and stationary-phase reductions.

pub mod classical;
pub mod cyclo;
pub mod poly;
pub mod quadform;
pub mod rho;
pub mod roots;
pub mod stationary;
pub mod value;

pub use classical::{gauss_sum_mult, kloosterman_classical, kloosterman_hist, ramanujan};
pub use cyclo::Cyclotomic;
pub use poly::{Jet, Poly, RatFn};
pub use quadform::{quad_gauss, quad_gauss_brute, QuadraticFormFp};
pub use rho::{rho, rho_brute};
pub use roots::{e_c, RootTable};
pub use stationary::{reduce_stationary_even, reduce_stationary_odd, ReducedSum, StationaryProblem};
pub use value::{ExpSumValue, KahanSum, PhaseHist};
