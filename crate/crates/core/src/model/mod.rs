//! Graphs, configurations and the rates of every process.

pub mod config;
pub mod graph;
pub mod process;

pub use config::{
    configs_with_max, configs_with_total, configs_with_total_at_most, LabeledConfig,
    OccupationConfig,
};
pub use graph::{validate_kernel, KernelKind, KernelViolation, SiteGraph};
pub use process::{
    apply_move, boundary_birth_rate, boundary_death_rate, enumerate_absorbing_dual_moves,
    enumerate_labeled_moves, enumerate_moves, labeled_jump_rate, sep_jump_rate, sip_jump_rate,
    Move, MoveKind, Process, ProcessSpec, Side,
};
