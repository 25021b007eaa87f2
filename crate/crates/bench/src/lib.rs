//! Deterministic synthetic workloads.

use ddac_core::{ChannelKind, ComparisonOp, Condition, ConditionGroup, Rule, RuleSet, Scalar, TickEvent, Trace};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Number of distinct `actor.vN` variables the synthetic rules read.
pub const VARIABLES: usize = 32;

fn var(i: usize) -> String {
    format!("v{}", i % VARIABLES)
}

/// A ruleset with `rules` rules per channel, each an AND of `conditions`
/// integer comparisons over `actor.v0..v31`. Priorities cycle through 1..=20.
pub fn ruleset(rules: usize, conditions: usize) -> RuleSet {
    let mut rs = RuleSet::new("idle", false, false, 1.0);
    for kind in ChannelKind::ALL {
        for i in 0..rules {
            let items = (0..conditions)
                .map(|c| {
                    let op = ComparisonOp::ALL[(i + c) % 4];
                    Condition::property("actor", &var(i * conditions + c), op, (i % 5) as i64)
                })
                .collect();
            let value = match kind {
                ChannelKind::Animation => Scalar::Text(format!("anim{i}")),
                ChannelKind::HFlip | ChannelKind::VFlip => Scalar::Bool(i % 2 == 0),
                ChannelKind::SpeedScale => Scalar::Real(1.0 + i as f64 / 100.0),
            };
            let rule = Rule::new(&format!("r{i}"), (i % 20) as u32 + 1, value, ConditionGroup::all(items));
            rs = rs.with_rule(kind, rule);
        }
    }
    rs
}

/// A trace that sets every variable on tick 0, then rewrites `churn` random
/// variables per tick with values in `0..5`.
pub fn trace(ticks: usize, churn: usize, seed: u64) -> Trace {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ticks = (0..ticks)
        .map(|t| {
            let mut ev = TickEvent::new();
            if t == 0 {
                for i in 0..VARIABLES {
                    ev = ev.with(&format!("actor.{}", var(i)), rng.random_range(0..5i64));
                }
            } else {
                for _ in 0..churn {
                    let i = rng.random_range(0..VARIABLES);
                    ev = ev.with(&format!("actor.{}", var(i)), rng.random_range(0..5i64));
                }
            }
            ev
        })
        .collect();
    Trace { ticks }
}
