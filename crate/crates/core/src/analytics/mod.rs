//! Analytical EDCA model: the per-station three-dimensional chain, its
//! closed-form transmission probability, the BSS fixed point, and the
//! throughput/airtime metrics built on top.

pub mod chain;
pub mod fixed_point;
pub mod metrics;
pub mod oracle;
pub mod tau;

pub use chain::{stationary_distribution, ChainState, StateSpace, StationaryDistribution, WindowConvention};
pub use fixed_point::{solve_bss_fixed_point, BssState};
pub use metrics::{
    airtime, airtime_tau_form, busy_probability, p_idle, p_succ, tau_from_x, throughput,
    throughput_tau_form, x_from_tau,
};
pub use oracle::{reference_tau, TransitionMatrix};
pub use tau::{tau_exclusive_window, tau_from_params, tau_terms, tau_upper_bound, TauTerms};
