//! SARSA with linear function approximation over bucketed attributes.

pub mod attributes;
pub mod bucket;
pub mod sarsa;

pub use attributes::{Attribute, Direction, StateAttributes, NUM_ATTRIBUTES};
pub use bucket::{default_starts, BucketSpec};
pub use sarsa::{
    feature, feature_vector, greedy, init_theta, q_of, q_value, rate_schedule, sarsa_step, sarsa_update, select_action, dot,
    storage_estimate, tabular_size, FeatureVector, RlParams,
};
