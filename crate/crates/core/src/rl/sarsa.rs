use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RlParams {
    pub alpha: f64,
    pub epsilon: f64,
    pub gamma: f64,
    pub reward: f64,
    pub penalty: f64,
    /// Phase-1 multiplicative decay applied per `decay_interval` decisions.
    pub decay: f64,
    pub decay_interval: u64,
    /// Phase-1 rates never drop below this fraction of their initial value.
    pub decay_floor: f64,
}

impl Default for RlParams {
    fn default() -> Self {
        RlParams {
            alpha: 0.09,
            epsilon: 0.04,
            gamma: 0.95,
            reward: 1.0,
            penalty: 0.0,
            decay: 0.5,
            decay_interval: 100_000,
            decay_floor: 0.1,
        }
    }
}

impl RlParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return bad(format!("alpha = {} must lie in (0, 1]", self.alpha));
        }
        if !(0.0..=1.0).contains(&self.epsilon) {
            return bad(format!("epsilon = {} must lie in [0, 1]", self.epsilon));
        }
        if !(0.0..1.0).contains(&self.gamma) {
            return bad(format!("gamma = {} must lie in [0, 1)", self.gamma));
        }
        if !self.reward.is_finite() || !self.penalty.is_finite() {
            return bad("reward and penalty must be finite".into());
        }
        if !(self.decay > 0.0 && self.decay <= 1.0) || self.decay_interval == 0 {
            return bad("decay must lie in (0, 1] and decay_interval must be positive".into());
        }
        if !(0.0..=1.0).contains(&self.decay_floor) {
            return bad("decay_floor must lie in [0, 1]".into());
        }
        Ok(())
    }

    pub fn r_max(&self) -> f64 {
        self.reward.max(self.penalty)
    }
}

/// Learning and exploration rates for a decision.
pub fn rate_schedule(phase: u8, step_in_phase: u64, p: &RlParams) -> (f64, f64) {
    if phase != 1 {
        return (p.alpha, p.epsilon);
    }
    let factor = p
        .decay
        .powf(step_in_phase as f64 / p.decay_interval as f64)
        .max(p.decay_floor);
    (p.alpha * factor, p.epsilon * factor)
}

const POW2_NEG: [f64; 8] = [1.0, 0.5, 0.25, 0.125, 0.0625, 0.03125, 0.015625, 0.0078125];

/// Feature value `2^-v` of bucket index `v`.
pub fn feature(v: u8) -> f64 {
    POW2_NEG
        .get(v as usize)
        .copied()
        .unwrap_or_else(|| 0.5f64.powi(v as i32))
}

/// Sparse view of `φ(s, a)`: block `action` holds `2^-v_i`, every other block is
/// zero.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct FeatureVector {
    pub action: usize,
    pub buckets: Vec<u8>,
}

impl FeatureVector {
    pub fn new(buckets: &[u8], action: usize) -> Self {
        FeatureVector {
            action,
            buckets: buckets.to_vec(),
        }
    }

    pub fn set(&mut self, buckets: &[u8], action: usize) {
        self.action = action;
        self.buckets.clear();
        self.buckets.extend_from_slice(buckets);
    }

    pub fn n(&self) -> usize {
        self.buckets.len()
    }

    /// Full `N·A` vector.
    pub fn dense(&self, num_actions: usize) -> Vec<f64> {
        let n = self.n();
        let mut out = vec![0.0; n * num_actions];
        for (i, &v) in self.buckets.iter().enumerate() {
            out[self.action * n + i] = feature(v);
        }
        out
    }
}

pub fn feature_vector(buckets: &[u8], action: usize, num_actions: usize) -> Vec<f64> {
    assert!(action < num_actions, "action {action} out of range");
    FeatureVector::new(buckets, action).dense(num_actions)
}

/// `φ(s, a)ᵀ θ`.
pub fn q_value(theta: &[f64], phi: &FeatureVector) -> f64 {
    q_of(theta, &phi.buckets, phi.action)
}

pub fn q_of(theta: &[f64], buckets: &[u8], action: usize) -> f64 {
    let n = buckets.len();
    let block = &theta[action * n..(action + 1) * n];
    block.iter().zip(buckets).map(|(t, &v)| t * feature(v)).sum()
}

/// Optimistic weights: every component `(r_max / (1 - γ)) / N`.
pub fn init_theta(r_max: f64, gamma: f64, n: usize, num_actions: usize) -> Result<Vec<f64>> {
    if !(0.0..1.0).contains(&gamma) {
        return Err(Error::Config(format!("gamma = {gamma} must lie in [0, 1)")));
    }
    if n == 0 || num_actions == 0 {
        return Err(Error::Config("need at least one attribute and one action".into()));
    }
    let ceiling = r_max / (1.0 - gamma);
    Ok(vec![ceiling / n as f64; n * num_actions])
}

/// One SARSA step: `θ += α δ φ_prev` with
/// `δ = r + γ q_curr - φ_prevᵀθ` evaluated before the update. Returns δ.
pub fn sarsa_update(
    theta: &mut [f64],
    phi_prev: &FeatureVector,
    r: f64,
    q_curr: f64,
    alpha: f64,
    gamma: f64,
) -> Result<f64> {
    let feats: Vec<f64> = phi_prev.buckets.iter().map(|&v| feature(v)).collect();
    sarsa_step(theta, phi_prev.action, &feats, r, q_curr, alpha, gamma)
        .map_err(|e| match e {
            Error::LearningFault(m) => Error::LearningFault(format!("{m} buckets={:?}", phi_prev.buckets)),
            e => e,
        })
}

/// [`sarsa_update`] on precomputed feature values `2^-v_i` of the previous
/// state; `action` selects the weight block.
pub fn sarsa_step(
    theta: &mut [f64],
    action: usize,
    feats: &[f64],
    r: f64,
    q_curr: f64,
    alpha: f64,
    gamma: f64,
) -> Result<f64> {
    let n = feats.len();
    let block = &mut theta[action * n..(action + 1) * n];
    let q_prev = dot(block, feats);
    let delta = r + gamma * q_curr - q_prev;
    if !delta.is_finite() {
        return Err(Error::LearningFault(format!(
            "non-finite TD error: r={r} q_curr={q_curr:e} q_prev={q_prev:e} alpha={alpha} gamma={gamma} action={action}"
        )));
    }
    let step = alpha * delta;
    let mut finite = true;
    for (t, &f) in block.iter_mut().zip(feats) {
        *t += step * f;
        finite &= t.is_finite();
    }
    if !finite {
        return Err(Error::LearningFault(format!(
            "weights of action {action} became non-finite after update with delta={delta}"
        )));
    }
    Ok(delta)
}

/// `Σ θ_i f_i` over one weight block.
pub fn dot(block: &[f64], feats: &[f64]) -> f64 {
    block.iter().zip(feats).map(|(t, f)| t * f).sum()
}

/// ε-greedy choice over `(action, q)` candidates. Greedy ties go to the
/// lowest action index. Returns the action and whether it was an exploratory
/// draw.
pub fn select_action<R: Rng + ?Sized>(candidates: &[(usize, f64)], epsilon: f64, rng: &mut R) -> (usize, bool) {
    assert!(!candidates.is_empty(), "select_action needs a feasible action");
    if epsilon > 0.0 && rng.gen::<f64>() < epsilon {
        let i = rng.gen_range(0..candidates.len());
        return (candidates[i].0, true);
    }
    (greedy(candidates), false)
}

pub fn greedy(candidates: &[(usize, f64)]) -> usize {
    let mut best = candidates[0];
    for &c in &candidates[1..] {
        if c.1 > best.1 || (c.1 == best.1 && c.0 < best.0) {
            best = c;
        }
    }
    best.0
}

/// Registers for the linear approximator: `N (A + 1) + 4`.
pub fn storage_estimate(n: usize, num_actions: usize) -> usize {
    n * (num_actions + 1) + 4
}

/// Q-table entries a tabular agent would need.
pub fn tabular_size(bucket_counts: &[usize], num_actions: usize) -> u128 {
    bucket_counts.iter().map(|&c| c as u128).product::<u128>() * num_actions as u128
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed;

    #[test]
    fn feature_layout() {
        assert_eq!(
            feature_vector(&[0, 1, 3], 1, 2),
            vec![0.0, 0.0, 0.0, 1.0, 0.5, 0.125]
        );
    }

    #[test]
    fn q_values() {
        let theta = init_theta(1.0, 0.95, 4, 5).unwrap();
        let q = q_of(&theta, &[0, 0, 0, 0], 3);
        assert!((q - 20.0).abs() < 1e-12);
        let mut theta = vec![0.0; 3];
        assert_eq!(q_of(&theta, &[1, 2, 3], 0), 0.0);
        theta[2] = 8.0;
        assert_eq!(q_of(&theta, &[1, 2, 3], 0), 1.0);
    }

    #[test]
    fn init_ceilings() {
        let t = init_theta(1.0, 0.999, 2, 1).unwrap();
        assert!((t.iter().sum::<f64>() - 1000.0).abs() < 1e-9);
        let t = init_theta(1.0, 0.0, 1, 1).unwrap();
        assert_eq!(t, vec![1.0]);
        assert!(init_theta(1.0, 1.0, 1, 1).is_err());
    }

    #[test]
    fn update_examples() {
        let mut theta = init_theta(1.0, 0.95, 3, 2).unwrap();
        let phi = FeatureVector::new(&[0, 1, 2], 0);
        let before = theta.clone();
        let q = q_value(&theta, &FeatureVector::new(&[0, 0, 0], 1));
        assert!((q - 20.0).abs() < 1e-12);
        let d = sarsa_update(&mut theta, &FeatureVector::new(&[0, 0, 0], 0), 1.0, 20.0, 0.09, 0.95).unwrap();
        assert!(d.abs() < 1e-12);
        for (t, b) in theta.iter().zip(&before) {
            assert!((t - b).abs() < 1e-12);
        }

        let before = theta.clone();
        let q_prev = q_value(&theta, &phi);
        let d = sarsa_update(&mut theta, &phi, 0.0, q_prev, 0.09, 0.95).unwrap();
        assert!((d - (0.95 * q_prev - q_prev)).abs() < 1e-12);
        for i in 0..3 {
            let want = before[i] + 0.09 * d * feature(i as u8);
            assert!((theta[i] - want).abs() < 1e-15);
        }
        assert_eq!(&theta[3..], &before[3..]);
    }

    #[test]
    fn update_rejects_non_finite() {
        let mut theta = vec![1.0; 2];
        let phi = FeatureVector::new(&[0, 0], 0);
        assert!(sarsa_update(&mut theta, &phi, f64::NAN, 0.0, 0.1, 0.9).is_err());
    }

    #[test]
    fn greedy_and_ties() {
        let mut rng = seed::rng(1);
        assert_eq!(select_action(&[(0, 5.0), (1, 7.0), (2, 3.0)], 0.0, &mut rng), (1, false));
        assert_eq!(select_action(&[(0, 7.0), (1, 7.0)], 0.0, &mut rng), (0, false));
        assert_eq!(greedy(&[(3, 1.0), (1, 1.0)]), 1);
    }

    #[test]
    fn rates() {
        let p = RlParams::default();
        assert_eq!(rate_schedule(2, 12345, &p), (0.09, 0.04));
        assert_eq!(rate_schedule(1, 0, &p), (0.09, 0.04));
        let (a, e) = rate_schedule(1, 100_000, &p);
        assert!((a - 0.045).abs() < 1e-15 && (e - 0.02).abs() < 1e-15);
        let (a, _) = rate_schedule(1, 10_000_000, &p);
        assert!((a - 0.009).abs() < 1e-15);
    }

    #[test]
    fn storage() {
        assert_eq!(storage_estimate(8, 5), 52);
        assert_eq!(storage_estimate(1, 1), 6);
        assert_eq!(tabular_size(&[4; 7], 5), 81920);
    }
}
