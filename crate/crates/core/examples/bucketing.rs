//! Bucketed state attributes, their features and one SARSA update done by
//! hand.

use warpsched::rl::{
    feature, init_theta, q_of, sarsa_update, storage_estimate, Attribute, BucketSpec, FeatureVector, RlParams,
};

fn main() -> warpsched::Result<()> {
    let l1 = BucketSpec::new(Attribute::L1mp, 4)?;
    let inflight = BucketSpec::new(Attribute::Nrai, 4)?;
    println!("L1mp bucket starts {:?}", l1.starts);
    for miss in [0.0, 12.5, 40.0, 75.0, 100.0] {
        let b = l1.bucketize(miss);
        println!("  L1 miss {miss:>5}% -> bucket {b}, feature {}", feature(b));
    }
    println!("Nrai bucket starts {:?}", inflight.starts);

    let p = RlParams::default();
    let actions = 5;
    let mut theta = init_theta(p.r_max(), p.gamma, 2, actions)?;
    let state = [l1.bucketize(40.0), inflight.bucketize(3.0)];
    let next = [l1.bucketize(75.0), inflight.bucketize(10.0)];
    println!("Q(s, a) before: {:.4}", q_of(&theta, &state, 2));
    let q_next = q_of(&theta, &next, 1);
    let delta = sarsa_update(&mut theta, &FeatureVector::new(&state, 2), p.penalty, q_next, p.alpha, p.gamma)?;
    println!("TD error {delta:.4}, Q(s, a) after: {:.4}", q_of(&theta, &state, 2));
    println!("approximator registers for 8 attributes: {}", storage_estimate(8, actions));
    Ok(())
}
