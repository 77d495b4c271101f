//! Coarse quasihyperbolic length, solidity, neargeodesics and cone checks.

pub mod coarse;
pub mod cone;
pub mod neargeodesic;
pub mod solidity;

pub use coarse::{all_subarc_lower, all_subarc_upper, coarse_qh_length, coarse_qh_length_range, CoarseLength, KInterval, PairTable};
pub use cone::{cone_report, deepest_vertex, rho1_check, ConeReport, ConeWitness, Rho1Report};
pub use neargeodesic::{construct_neargeodesic, construct_neargeodesic_with, neargeodesic_worst, NeargeodesicOptions};
pub use solidity::{curve_k_table, solidity_profile, SolidityEntry, SolidityReport};
