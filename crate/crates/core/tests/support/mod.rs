#![allow(dead_code)]

use ddac_core::*;
use proptest::collection::vec;
use proptest::prelude::*;

pub const SOURCES: [&str; 2] = ["player", "enemy"];
pub const NAMES: [&str; 4] = ["a", "b", "c", "d"];

pub fn var_key() -> impl Strategy<Value = VarKey> {
    (0..SOURCES.len(), 0..NAMES.len(), any::<bool>()).prop_map(|(s, n, f)| {
        if f {
            VarKey::function(SOURCES[s], NAMES[n])
        } else {
            VarKey::property(SOURCES[s], NAMES[n])
        }
    })
}

/// Small value domain so that comparisons collide often.
pub fn small_scalar() -> impl Strategy<Value = Scalar> {
    prop_oneof![
        4 => any::<bool>().prop_map(Scalar::Bool),
        4 => (-2i64..=2).prop_map(Scalar::Int),
        2 => prop::sample::select(vec![-1.5, 0.0, 0.5, 1.0, 2.0]).prop_map(Scalar::Real),
        1 => prop::sample::select(vec!["x", "y"]).prop_map(Scalar::from),
    ]
}

pub fn op() -> impl Strategy<Value = ComparisonOp> {
    prop::sample::select(ComparisonOp::ALL.to_vec())
}

pub fn condition() -> impl Strategy<Value = Condition> {
    (var_key(), op(), small_scalar()).prop_map(|(k, op, reference)| Condition {
        source: k.source,
        name: k.name,
        mode: k.mode,
        op,
        reference,
    })
}

pub fn group(max_items: usize) -> impl Strategy<Value = ConditionGroup> {
    (any::<bool>(), vec(condition(), 1..=max_items)).prop_map(|(and, items)| ConditionGroup {
        mode: if and { GroupMode::And } else { GroupMode::Or },
        items,
    })
}

pub fn channel_value(kind: ChannelKind) -> BoxedStrategy<Scalar> {
    match kind {
        ChannelKind::Animation => prop::sample::select(vec!["idle", "run", "jump", "wall", "hurt"])
            .prop_map(Scalar::from)
            .boxed(),
        ChannelKind::HFlip | ChannelKind::VFlip => any::<bool>().prop_map(Scalar::Bool).boxed(),
        ChannelKind::SpeedScale => prop::sample::select(vec![0.5, 1.0, 1.5, 2.0])
            .prop_map(Scalar::Real)
            .boxed(),
    }
}

pub fn channel(
    kind: ChannelKind,
    max_rules: usize,
    max_conds: usize,
    max_priority: u32,
) -> impl Strategy<Value = Channel> {
    let rule = (
        1..=max_priority,
        channel_value(kind),
        group(max_conds),
        prop::bool::weighted(0.1),
    );
    (channel_value(kind), vec(rule, 0..=max_rules)).prop_map(move |(default, rules)| Channel {
        kind,
        default,
        rules: rules
            .into_iter()
            .enumerate()
            .map(|(i, (priority, value, conditions, disabled))| Rule {
                id: format!("r{i}"),
                priority,
                value,
                conditions,
                disabled,
            })
            .collect(),
    })
}

pub fn ruleset(max_rules: usize, max_conds: usize, max_priority: u32) -> impl Strategy<Value = RuleSet> {
    (
        channel(ChannelKind::Animation, max_rules, max_conds, max_priority),
        channel(ChannelKind::HFlip, max_rules, max_conds, max_priority),
        channel(ChannelKind::VFlip, max_rules, max_conds, max_priority),
        channel(ChannelKind::SpeedScale, max_rules, max_conds, max_priority),
    )
        .prop_map(|(animation, h_flip, v_flip, speed_scale)| RuleSet {
            version: 1,
            channels: PerChannel {
                animation,
                h_flip,
                v_flip,
                speed_scale,
            },
        })
}

/// Assigns most of the variable pool; some keys stay missing.
pub fn snapshot() -> impl Strategy<Value = Snapshot> {
    vec((var_key(), small_scalar()), 0..12).prop_map(|kv| kv.into_iter().collect())
}

pub fn fixture(path: &str) -> Vec<u8> {
    let p = format!("{}/../../fixtures/{path}", env!("CARGO_MANIFEST_DIR"));
    std::fs::read(&p).unwrap_or_else(|e| panic!("{p}: {e}"))
}

/// Every key in the pool assigned a boolean or number.
pub fn full_snapshot() -> impl Strategy<Value = Snapshot> {
    let keys: Vec<VarKey> = SOURCES
        .iter()
        .flat_map(|s| {
            NAMES
                .iter()
                .flat_map(move |n| [VarKey::property(s, n), VarKey::function(s, n)])
        })
        .collect();
    let n = keys.len();
    vec(
        prop_oneof![any::<bool>().prop_map(Scalar::Bool), (-2i64..=2).prop_map(Scalar::Int)],
        n,
    )
    .prop_map(move |vals| keys.iter().cloned().zip(vals).collect())
}
