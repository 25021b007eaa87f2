mod support;

use ddac_core::*;
use proptest::prelude::*;
use support::*;

fn candidates(ch: &Channel, s: &Snapshot) -> Vec<usize> {
    ch.rules
        .iter()
        .enumerate()
        .filter(|(_, r)| !r.disabled && eval_group(&r.conditions, s).matched)
        .map(|(i, _)| i)
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn resolve_channel_matches_oracle(ch in channel(ChannelKind::Animation, 8, 3, 6), s in snapshot()) {
        prop_assert_eq!(resolve_channel(&ch, &s), oracle_resolve(&ch, &s));
    }

    #[test]
    fn winners_hold_the_maximum_candidate_priority(rs in ruleset(8, 3, 20), s in snapshot()) {
        for (_, ch) in rs.channels.iter() {
            let r = resolve_channel(ch, &s);
            let cands = candidates(ch, &s);
            let top = cands.iter().map(|&i| ch.rules[i].priority).max();
            match top {
                None => {
                    prop_assert!(r.winners.is_empty());
                    prop_assert_eq!(&r.value, &ch.default);
                }
                Some(top) => {
                    let expected: Vec<String> = cands
                        .iter()
                        .filter(|&&i| ch.rules[i].priority == top)
                        .map(|&i| ch.rules[i].id.clone())
                        .collect();
                    prop_assert_eq!(&r.winners, &expected);
                    let last = ch.rule(expected.last().unwrap()).unwrap();
                    prop_assert_eq!(&r.value, &last.value);
                    for t in &r.traces {
                        prop_assert_eq!(t.excluded_by_priority, t.matched && t.priority < top);
                    }
                }
            }
        }
    }

    #[test]
    fn channel_values_are_always_well_formed(rs in ruleset(6, 3, 10), s in snapshot()) {
        let state = resolve_tick(&rs, &s, None);
        prop_assert!(!state.animation.is_empty());
        prop_assert!(state.speed_scale > 0.0 && state.speed_scale.is_finite());
        for (kind, winners) in state.winners.iter() {
            if winners.is_empty() {
                prop_assert_eq!(state.value(kind), rs.channel(kind).default.clone());
            }
        }
    }

    #[test]
    fn resolution_is_deterministic(rs in ruleset(6, 3, 10), s in snapshot()) {
        let a = resolve_tick(&rs, &s, None);
        let b = resolve_tick(&rs.clone(), &s.clone(), None);
        prop_assert_eq!(&a, &b);
        prop_assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    }

    #[test]
    fn strictly_increasing_priority_maps_preserve_the_outcome(
        ch in channel(ChannelKind::Animation, 8, 3, 20),
        s in snapshot(),
        steps in prop::collection::vec(1u32..50, 20),
    ) {
        // map p -> sum(steps[..p]), strictly increasing over 1..=20
        let remap = |p: u32| steps[..p as usize].iter().sum::<u32>();
        let mut mapped = ch.clone();
        for r in &mut mapped.rules {
            r.priority = remap(r.priority);
        }
        let (a, b) = (resolve_channel(&ch, &s), resolve_channel(&mapped, &s));
        prop_assert_eq!(a.winners, b.winners);
        prop_assert_eq!(a.value, b.value);
    }

    #[test]
    fn lower_priority_rules_never_change_the_outcome(
        ch in channel(ChannelKind::Animation, 6, 3, 10),
        extra in channel(ChannelKind::Animation, 1, 3, 10),
        pos in any::<prop::sample::Index>(),
        s in snapshot(),
    ) {
        let before = resolve_channel(&ch, &s);
        let Some(top) = before.winners.first().map(|id| ch.rule(id).unwrap().priority) else {
            return Ok(());
        };
        prop_assume!(top > 1 && !extra.rules.is_empty());
        let mut rule = extra.rules[0].clone();
        rule.id = "extra".into();
        rule.priority = 1 + rule.priority % (top - 1);
        let mut grown = ch.clone();
        grown.rules.insert(pos.index(ch.rules.len() + 1), rule);
        let after = resolve_channel(&grown, &s);
        prop_assert_eq!(before.winners, after.winners);
        prop_assert_eq!(before.value, after.value);
    }

    #[test]
    fn and_or_duality_over_equality(g in group(4), s in full_snapshot()) {
        let g = ConditionGroup {
            mode: GroupMode::And,
            items: g.items.into_iter().map(|mut c| {
                if c.op.complement().is_none() { c.op = ComparisonOp::Eq; }
                if let Scalar::Text(_) = c.reference { c.reference = Scalar::Int(0); }
                c
            }).collect(),
        };
        let eval = eval_group(&g, &s);
        prop_assume!(!eval.traces.iter().any(|t| t.outcome.is_error()));
        let negated = ConditionGroup {
            mode: GroupMode::Or,
            items: g.items.iter().cloned().map(|mut c| { c.op = c.op.complement().unwrap(); c }).collect(),
        };
        prop_assert_eq!(!eval.matched, eval_group(&negated, &s).matched);
    }

    #[test]
    fn group_traces_are_complete(g in group(4), s in snapshot()) {
        let eval = eval_group(&g, &s);
        prop_assert_eq!(eval.traces.len(), g.items.len());
        for (i, t) in eval.traces.iter().enumerate() {
            prop_assert_eq!(t.index, i);
            prop_assert_eq!(t.observed.is_none(), t.outcome == Outcome::Error(ErrorReason::Missing));
        }
        if eval.matched {
            prop_assert!(eval.traces.iter().all(|t| !t.outcome.is_error()));
        }
    }

    #[test]
    fn document_round_trip(rs in ruleset(5, 3, 1000)) {
        let bytes = serialize_ruleset(&rs);
        let back = parse_ruleset(&bytes).unwrap();
        prop_assert_eq!(&back, &rs);
        prop_assert_eq!(serialize_ruleset(&back), bytes);
    }

    #[test]
    fn arbitrary_reals_and_text_round_trip(
        reference in any::<f64>().prop_filter("finite", |r| r.is_finite()),
        speed in (1e-300f64..1e300),
        anim in "\\PC{1,12}",
        text in any::<String>(),
        prio in 1u32..=u32::MAX,
    ) {
        let rs = RuleSet::new(&anim, false, true, speed).with_rule(
            ChannelKind::Animation,
            Rule::new("r", prio, anim.as_str(), ConditionGroup::any(vec![
                Condition::property("p", "x", ComparisonOp::Gt, reference),
                Condition::function("p", "y", ComparisonOp::Ne, text.as_str()),
            ])),
        );
        let bytes = serialize_ruleset(&rs);
        prop_assert_eq!(parse_ruleset(&bytes).unwrap(), rs);
    }

    #[test]
    fn snapshot_isolation(writes in prop::collection::vec((var_key(), small_scalar(), any::<bool>()), 0..30)) {
        let mut bb = Blackboard::new();
        let mut shadow = std::collections::BTreeMap::new();
        let mut taken = Vec::new();
        for (k, v, snap_after) in writes {
            bb.set_var(k.clone(), v.clone()).unwrap();
            shadow.insert(k, v);
            if snap_after {
                taken.push((bb.snapshot(taken.len() as u64), shadow.clone()));
            }
        }
        for (snap, expected) in taken {
            let got: std::collections::BTreeMap<_, _> = snap.iter().map(|(k, v)| (k.clone(), v.clone())).collect();
            prop_assert_eq!(got, expected);
        }
    }

    #[test]
    fn modes_are_separate(k in var_key(), a in small_scalar(), b in small_scalar()) {
        let other = VarKey { mode: match k.mode { ValueMode::Property => ValueMode::Function, ValueMode::Function => ValueMode::Property }, ..k.clone() };
        let mut bb = Blackboard::new();
        bb.set_var(k.clone(), a.clone()).unwrap();
        let before = bb.snapshot(0);
        bb.set_var(other.clone(), b).unwrap();
        let after = bb.snapshot(1);
        prop_assert_eq!(after.read(&k), Some(&a));
        prop_assert_eq!(before.read(&other), None);
    }
}

mod simulator_properties {
    use super::*;

    fn trace() -> impl Strategy<Value = Trace> {
        prop::collection::vec(prop::collection::vec((var_key(), small_scalar()), 0..4), 0..12).prop_map(|ticks| Trace {
            ticks: ticks
                .into_iter()
                .map(|w| TickEvent {
                    set: w.into_iter().map(|(k, v)| (k.to_string(), v)).collect(),
                })
                .collect(),
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(128))]

        #[test]
        fn replay_is_byte_deterministic(rs in ruleset(5, 3, 10), t in trace()) {
            let a = run_trace(&rs, &t).unwrap().to_json();
            let b = run_trace(&rs, &t).unwrap().to_json();
            prop_assert_eq!(a, b);
        }

        #[test]
        fn every_tick_agrees_with_the_oracle(rs in ruleset(5, 3, 10), t in trace()) {
            let tl = run_trace(&rs, &t).unwrap();
            prop_assert_eq!(tl.len(), t.ticks.len());
            let mut bb = Blackboard::new();
            for (i, (ev, entry)) in t.ticks.iter().zip(&tl.entries).enumerate() {
                prop_assert_eq!(entry.tick, i as u64);
                for (addr, v) in &ev.set {
                    bb.set_var(addr.parse().unwrap(), v.clone()).unwrap();
                }
                let snap = bb.snapshot(i as u64);
                for kind in ChannelKind::ALL {
                    let o = oracle_resolve(rs.channel(kind), &snap);
                    prop_assert_eq!(entry.value(kind), o.value);
                    prop_assert_eq!(&entry.winners[kind], &o.winners);
                    prop_assert_eq!(&entry.traces[kind], &o.traces);
                }
            }
        }

        #[test]
        fn unwritten_variables_persist(rs in ruleset(5, 3, 10), k in var_key(), v in small_scalar(), quiet in 1usize..6) {
            let mut ticks = vec![TickEvent { set: [(k.to_string(), v.clone())].into() }];
            ticks.extend(std::iter::repeat_with(TickEvent::new).take(quiet));
            let tl = run_trace(&rs, &Trace { ticks }).unwrap();
            let first = &tl.entries[0];
            for e in &tl.entries[1..] {
                prop_assert!(first.same_values(e));
                prop_assert!(!e.changed);
                for kind in ChannelKind::ALL {
                    prop_assert_eq!(&first.traces[kind], &e.traces[kind]);
                }
            }
        }
    }
}

#[test]
fn fixture_documents_are_canonical() {
    for name in ["minimal", "platformer", "damaged", "tie"] {
        let bytes = fixture(&format!("rules/{name}.json"));
        let rs = parse_ruleset(&bytes).unwrap();
        assert_eq!(
            String::from_utf8(serialize_ruleset(&rs)).unwrap(),
            String::from_utf8(bytes).unwrap(),
            "{name}"
        );
    }
}

#[test]
fn fixture_rejections() {
    let e = parse_ruleset(&fixture("rules/bad_kind.json")).unwrap_err();
    assert_eq!(e.kind.code(), "value-kind-mismatch");
    let e = parse_ruleset(&fixture("rules/malformed.json")).unwrap_err();
    assert_eq!(e.kind.code(), "syntax");
    assert!(e.location.starts_with("line "));
}
