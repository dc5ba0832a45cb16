//! The learned warp scheduler: attribute extraction, action feasibility and
//! resolution, reward wiring and the per-SM policy.

pub mod actions;
pub mod extract;
pub mod policy;

pub use actions::{
    fallback_pick, feasible_pipeline_actions, resolve_meta, resolve_warp, MetaAction, MetaSlotState, PipelineAction,
};
pub use extract::{attribute_value, extract_attributes};
pub use policy::{
    theta_to_text, ActionSet, AttributeSetting, DecisionRecord, RlwsConfig, RlwsPolicy, NUM_ACTIONS,
};
