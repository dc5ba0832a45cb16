use std::fmt;
use std::str::FromStr;

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::actions::{
    fallback_pick, feasible_pipeline_actions, resolve_meta, resolve_warp, MetaAction, MetaSlotState,
    PipelineAction,
};
use super::extract::attribute_value;
use crate::error::{Error, Result};
use crate::rl::{
    dot, feature, init_theta, rate_schedule, sarsa_step, select_action, Attribute, BucketSpec, Direction, RlParams,
};
use crate::sched::{PolicyExtras, SchedulerPolicy, SchedulerView};
use crate::sim::{WarpId, SLOTS_PER_SM};

pub const NUM_ACTIONS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActionSet {
    /// Choose an execution pipeline; the warp follows from the resolution rule.
    Pipeline,
    /// Choose a warp-selection rule.
    Meta,
}

impl ActionSet {
    pub fn action_name(self, index: usize) -> &'static str {
        match self {
            ActionSet::Pipeline => PipelineAction::from_index(index).name(),
            ActionSet::Meta => MetaAction::from_index(index).name(),
        }
    }
}

/// One observed attribute and its bucketing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttributeSetting {
    pub attribute: Attribute,
    pub buckets: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub direction: Option<Direction>,
    /// Explicit lower bounds in percent of range; overrides `buckets`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub starts: Option<Vec<f64>>,
}

impl AttributeSetting {
    pub fn new(attribute: Attribute, buckets: usize) -> Self {
        AttributeSetting {
            attribute,
            buckets,
            direction: None,
            starts: None,
        }
    }

    pub fn spec(&self) -> Result<BucketSpec> {
        let spec = match &self.starts {
            Some(s) => BucketSpec::explicit(self.attribute, s.clone())?,
            None => BucketSpec::with_direction(
                self.attribute,
                self.buckets,
                self.direction.unwrap_or(self.attribute.direction()),
            )?,
        };
        if spec.count() != self.buckets {
            return Err(Error::Bucket(format!(
                "{}: {} boundaries given for {} buckets",
                self.attribute,
                spec.count(),
                self.buckets
            )));
        }
        Ok(spec)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RlwsConfig {
    pub actions: ActionSet,
    pub params: RlParams,
    pub attributes: Vec<AttributeSetting>,
    /// Choose a new action every this many scheduler calls of a slot.
    #[serde(default = "one")]
    pub decision_interval: u32,
    #[serde(default)]
    pub record_decisions: bool,
}

fn one() -> u32 {
    1
}

impl RlwsConfig {
    /// Pipeline-selection agent with the default parameter set.
    pub fn rlws() -> Self {
        use Attribute::*;
        RlwsConfig {
            actions: ActionSet::Pipeline,
            params: RlParams::default(),
            attributes: [
                (Agml, 2),
                (Gnmie, 8),
                (L1mp, 8),
                (L2mp, 2),
                (Nfmi, 4),
                (Nipl1m, 4),
                (Nrai, 4),
                (Smnmie, 4),
            ]
            .into_iter()
            .map(|(a, b)| AttributeSetting::new(a, b))
            .collect(),
            decision_interval: 1,
            record_decisions: false,
        }
    }

    /// Meta-action agent with its default parameter set.
    pub fn rlws_ms() -> Self {
        use Attribute::*;
        RlwsConfig {
            actions: ActionSet::Meta,
            params: RlParams {
                alpha: 0.01,
                epsilon: 0.01,
                gamma: 0.999,
                reward: 1.0,
                penalty: 0.0,
                ..RlParams::default()
            },
            attributes: [
                (Atbwb, 2),
                (Atbwf, 2),
                (Naipmi, 8),
                (Nrgmi, 8),
                (Nsw, 4),
                (Nws, 2),
                (Rspi, 2),
            ]
            .into_iter()
            .map(|(a, b)| AttributeSetting::new(a, b))
            .collect(),
            decision_interval: 1,
            record_decisions: false,
        }
    }

    pub fn specs(&self) -> Result<Vec<BucketSpec>> {
        self.attributes.iter().map(|s| s.spec()).collect()
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        if self.attributes.is_empty() {
            return Err(Error::Config("at least one attribute is required".into()));
        }
        let mut seen = std::collections::HashSet::new();
        for s in &self.attributes {
            if !seen.insert(s.attribute) {
                return Err(Error::Config(format!("attribute {} listed twice", s.attribute)));
            }
        }
        self.specs()?;
        if self.decision_interval == 0 {
            return Err(Error::Config("decision_interval must be at least 1".into()));
        }
        Ok(())
    }

    pub fn name(&self) -> &'static str {
        match self.actions {
            ActionSet::Pipeline => "rlws",
            ActionSet::Meta => "rlws_ms",
        }
    }
}

/// One logged decision.
#[derive(Debug, Clone, PartialEq)]
pub struct DecisionRecord {
    pub cycle: u64,
    pub sm: usize,
    pub slot: usize,
    pub state: Vec<u8>,
    /// Bit `i` set when action `i` was feasible.
    pub feasible: u8,
    pub action: u8,
    pub actions: ActionSet,
    pub explored: bool,
    pub warp: Option<WarpId>,
    /// Reward credited to the previous decision of this slot.
    pub reward_prev: Option<f64>,
    pub phase: u8,
}

impl fmt::Display for DecisionRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let state: Vec<String> = self.state.iter().map(|v| v.to_string()).collect();
        write!(
            f,
            "{} {} {} state={} feasible={:05b} action={} explored={} warp={} reward={} phase={}",
            self.cycle,
            self.sm,
            self.slot,
            state.join("."),
            self.feasible,
            self.actions.action_name(self.action as usize),
            self.explored as u8,
            self.warp.map_or("NONE".to_string(), |w| w.to_string()),
            self.reward_prev.map_or("-".to_string(), |r| r.to_string()),
            self.phase
        )
    }
}

impl FromStr for DecisionRecord {
    type Err = String;

    fn from_str(line: &str) -> std::result::Result<Self, Self::Err> {
        let f: Vec<&str> = line.split_whitespace().collect();
        if f.len() != 10 {
            return Err(format!("expected 10 fields, found {}", f.len()));
        }
        let num = |s: &str, what: &str| s.parse::<u64>().map_err(|_| format!("invalid {what} `{s}`"));
        let kv = |s: &'_ str, key: &str| -> std::result::Result<String, String> {
            s.strip_prefix(key)
                .and_then(|r| r.strip_prefix('='))
                .map(str::to_string)
                .ok_or_else(|| format!("expected `{key}=`, found `{s}`"))
        };
        let state_s = kv(f[3], "state")?;
        let state = if state_s.is_empty() {
            Vec::new()
        } else {
            state_s
                .split('.')
                .map(|v| v.parse::<u8>().map_err(|_| format!("invalid bucket `{v}`")))
                .collect::<std::result::Result<_, _>>()?
        };
        let feasible = u8::from_str_radix(&kv(f[4], "feasible")?, 2).map_err(|e| e.to_string())?;
        let action_name = kv(f[5], "action")?;
        let (actions, action) = [ActionSet::Pipeline, ActionSet::Meta]
            .iter()
            .find_map(|&set| {
                (0..NUM_ACTIONS)
                    .find(|&i| set.action_name(i) == action_name)
                    .map(|i| (set, i as u8))
            })
            .ok_or_else(|| format!("unknown action `{action_name}`"))?;
        let warp_s = kv(f[7], "warp")?;
        let reward_s = kv(f[8], "reward")?;
        Ok(DecisionRecord {
            cycle: num(f[0], "cycle")?,
            sm: num(f[1], "sm")? as usize,
            slot: num(f[2], "slot")? as usize,
            state,
            feasible,
            action,
            actions,
            explored: kv(f[6], "explored")? == "1",
            warp: if warp_s == "NONE" {
                None
            } else {
                Some(warp_s.parse().map_err(|_| format!("invalid warp `{warp_s}`"))?)
            },
            reward_prev: if reward_s == "-" {
                None
            } else {
                Some(reward_s.parse().map_err(|_| format!("invalid reward `{reward_s}`"))?)
            },
            phase: num(&kv(f[9], "phase")?, "phase")? as u8,
        })
    }
}

#[derive(Debug, Clone, Default)]
struct SlotAgent {
    /// Feature values of the previous decision's state; empty before the first.
    last_feats: Vec<f64>,
    last_action: Option<usize>,
    last_issued: Option<WarpId>,
    calls_since_decision: u32,
    reward_sum: f64,
    reward_n: u32,
}

/// Learned scheduler for one SM. Both slots share the weight vector; each
/// slot keeps its own previous state-action pair and reward.
pub struct RlwsPolicy {
    cfg: RlwsConfig,
    specs: Vec<BucketSpec>,
    theta: Vec<f64>,
    slots: [SlotAgent; SLOTS_PER_SM],
    rng: ChaCha8Rng,
    sm: usize,
    phase1_steps: u64,
    extras: PolicyExtras,
    decisions: Vec<DecisionRecord>,
    buckets: Vec<u8>,
    feats: Vec<f64>,
    candidates: Vec<(usize, f64)>,
    /// Set once the phase-1 decay has reached its floor.
    decay_floored: bool,
}

impl RlwsPolicy {
    pub fn new(cfg: &RlwsConfig, sm: usize, seed: u64) -> Result<Self> {
        cfg.validate()?;
        let specs = cfg.specs()?;
        let theta = init_theta(cfg.params.r_max(), cfg.params.gamma, specs.len(), NUM_ACTIONS)?;
        Ok(RlwsPolicy {
            cfg: cfg.clone(),
            buckets: Vec::with_capacity(specs.len()),
            feats: Vec::with_capacity(specs.len()),
            specs,
            theta,
            slots: Default::default(),
            rng: crate::seed::rng(seed),
            sm,
            phase1_steps: 0,
            extras: PolicyExtras::default(),
            decisions: Vec::new(),
            candidates: Vec::with_capacity(NUM_ACTIONS),
            decay_floored: false,
        })
    }

    /// Starts from previously learned weights instead of the optimistic ones.
    pub fn with_theta(mut self, theta: Vec<f64>) -> Result<Self> {
        if theta.len() != self.theta.len() {
            return Err(Error::Config(format!(
                "weight vector has {} entries, expected {}",
                theta.len(),
                self.theta.len()
            )));
        }
        self.theta = theta;
        Ok(self)
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn config(&self) -> &RlwsConfig {
        &self.cfg
    }

    fn bucketize(&mut self, view: &SchedulerView<'_>) {
        self.buckets.clear();
        self.feats.clear();
        for spec in &self.specs {
            let b = spec.bucketize(attribute_value(spec.attribute, view));
            self.buckets.push(b);
            self.feats.push(feature(b));
        }
    }

    fn rates(&mut self, phase: u8) -> (f64, f64) {
        let p = &self.cfg.params;
        if phase != 1 {
            return (p.alpha, p.epsilon);
        }
        let step = self.phase1_steps;
        self.phase1_steps += 1;
        if self.decay_floored {
            return (p.alpha * p.decay_floor, p.epsilon * p.decay_floor);
        }
        let rates = rate_schedule(1, step, p);
        self.decay_floored = rates.0 <= p.alpha * p.decay_floor;
        rates
    }

    fn resolve(&self, action: usize, view: &SchedulerView<'_>, slot: usize) -> Option<WarpId> {
        let last = self.slots[slot].last_issued;
        match self.cfg.actions {
            ActionSet::Pipeline => resolve_warp(PipelineAction::from_index(action), view.ready, last),
            ActionSet::Meta => resolve_meta(
                MetaAction::from_index(action),
                view.ready,
                view.sm,
                &MetaSlotState { last_issued: last },
            ),
        }
    }

    fn feasible(&self, view: &SchedulerView<'_>, slot: usize) -> u8 {
        match self.cfg.actions {
            ActionSet::Pipeline => feasible_pipeline_actions(
                view.ready,
                self.slots[slot].last_action.map(PipelineAction::from_index),
            ),
            ActionSet::Meta => (1 << NUM_ACTIONS) - 1,
        }
    }

    fn decide(&mut self, view: &SchedulerView<'_>) -> Result<Option<WarpId>> {
        let slot = view.slot;
        let reward_prev = {
            let s = &self.slots[slot];
            s.last_action.map(|_| s.reward_sum / s.reward_n.max(1) as f64)
        };
        self.bucketize(view);
        let feasible = self.feasible(view, slot);
        let phase = if view.global.tb_queue_len > 0 { 1 } else { 2 };
        let (alpha, epsilon) = self.rates(phase);

        let n = self.feats.len();
        self.candidates.clear();
        for a in 0..NUM_ACTIONS {
            if feasible & (1 << a) != 0 {
                let q = dot(&self.theta[a * n..(a + 1) * n], &self.feats);
                self.candidates.push((a, q));
            }
        }
        let (action, explored) = select_action(&self.candidates, epsilon, &mut self.rng);

        let s = &mut self.slots[slot];
        if let (Some(prev), Some(r)) = (s.last_action, reward_prev) {
            let q_curr = self.candidates.iter().find(|c| c.0 == action).map_or(0.0, |c| c.1);
            sarsa_step(&mut self.theta, prev, &s.last_feats, r, q_curr, alpha, self.cfg.params.gamma).map_err(|e| match e {
                Error::LearningFault(m) => Error::LearningFault(format!("SM {} slot {slot} cycle {}: {m}", self.sm, view.cycle)),
                e => e,
            })?;
            self.extras.updates += 1;
        }

        let warp = self.resolve(action, view, slot);
        debug_assert!(
            action == 0 && self.cfg.actions == ActionSet::Pipeline || warp.is_some() || view.ready.is_empty(),
            "feasible action resolved to no warp"
        );
        let s = &mut self.slots[slot];
        s.last_feats.clear();
        s.last_feats.extend_from_slice(&self.feats);
        s.last_action = Some(action);
        self.extras.decisions += 1;
        self.extras.explored += explored as u64;
        if self.cfg.record_decisions {
            self.decisions.push(DecisionRecord {
                cycle: view.cycle,
                sm: self.sm,
                slot,
                state: self.buckets.clone(),
                feasible,
                action: action as u8,
                actions: self.cfg.actions,
                explored,
                warp,
                reward_prev,
                phase,
            });
        }
        Ok(warp)
    }

    /// A call between decisions: carry out the held action, falling back to
    /// greedy-then-oldest when it cannot be carried out (a held NO_INSTR is
    /// never repeated while a warp is ready).
    fn hold(&self, view: &SchedulerView<'_>) -> Option<WarpId> {
        let slot = view.slot;
        let s = &self.slots[slot];
        let action = s.last_action.unwrap_or(0);
        self.resolve(action, view, slot)
            .or_else(|| fallback_pick(view, s.last_issued))
    }
}

impl SchedulerPolicy for RlwsPolicy {
    fn name(&self) -> &str {
        self.cfg.name()
    }

    fn pick(&mut self, view: &SchedulerView<'_>) -> Result<Option<WarpId>> {
        let slot = view.slot;
        let interval = self.cfg.decision_interval;
        let deciding = self.slots[slot].calls_since_decision == 0;
        let warp = if deciding { self.decide(view)? } else { self.hold(view) };

        let p = &self.cfg.params;
        let s = &mut self.slots[slot];
        let r = if warp.is_some() { p.reward } else { p.penalty };
        if deciding {
            s.reward_sum = r;
            s.reward_n = 1;
        } else {
            s.reward_sum += r;
            s.reward_n += 1;
        }
        s.calls_since_decision = (s.calls_since_decision + 1) % interval;
        if warp.is_some() {
            s.last_issued = warp;
        }
        Ok(warp)
    }

    fn extras(&self) -> PolicyExtras {
        self.extras
    }

    fn take_decisions(&mut self) -> Vec<DecisionRecord> {
        std::mem::take(&mut self.decisions)
    }

    fn theta_snapshot(&self) -> Option<Vec<f64>> {
        Some(self.theta.clone())
    }
}

/// Weight vector as a text matrix: one row per action, one column per
/// attribute.
pub fn theta_to_text(theta: &[f64], cfg: &RlwsConfig) -> String {
    let n = cfg.attributes.len();
    let mut out = String::from("action");
    for a in &cfg.attributes {
        out.push(' ');
        out.push_str(a.attribute.symbol());
    }
    out.push('\n');
    for (i, row) in theta.chunks(n).enumerate() {
        out.push_str(cfg.actions.action_name(i));
        for v in row {
            out.push_str(&format!(" {v:.9e}"));
        }
        out.push('\n');
    }
    out
}
