//! Degrees of freedom of the 3-user MIMO Y-channel.
//!
//! Three users exchange pairwise messages through a single relay. This crate
//! computes the sum-DoF bounds, builds the alignment/zero-forcing transmit
//! plan that achieves them for any antenna configuration, and simulates the
//! resulting two-hop chain to measure the rate slope numerically.

pub mod bounds;
pub mod channel;
pub mod cli;
pub mod error;
pub mod linalg;
pub mod scheme;
pub mod simulator;

pub use bounds::{theorem_sum_dof, BindingCase, DofBoundSet};
pub use channel::{
    extend_channel, sample_channel, sample_channel_trial, validate_and_order, AntennaConfig, ChannelRealization,
    PowerConfig, UserPermutation,
};
pub use error::{Error, Result};
pub use scheme::{allocate_streams, build_plan, validate_plan, BeamformingPlan, DofAllocation, Pair, ReducedConfig};
pub use simulator::{
    analytic_rates, estimate_dof, monte_carlo, run_chain, DofReport, MonteCarloReport, RateReport, StreamSymbols,
};
