//! Finite-state Markov chain machinery: generator assembly, semigroups,
//! absorption and reversibility checks.

pub mod absorption;
pub mod balance;
pub mod generator;
pub mod semigroup;

pub use absorption::{absorption_distribution, absorption_table, AbsorptionTable};
pub use balance::detailed_balance_check;
pub use generator::{
    build_absorbing_dual_generator, build_labeled_generator, build_sector_generator,
    labeled_states, FloatGenerator, GeneratorMatrix, STATE_GUARD,
};
pub use semigroup::{semigroup_apply, SemigroupResult};
