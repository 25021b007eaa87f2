//! Per-tick condition evaluation and prioritized resolution.
//!
//! Each channel is resolved independently against one snapshot:
//!
//! 1. every enabled rule whose condition group matches becomes a candidate;
//! 2. with no candidates the channel default applies;
//! 3. otherwise the highest candidate priority is found and every candidate
//!    at that priority wins, in rule-array order. All lower-priority
//!    candidates are excluded.
//!
//! A channel holds one value, so among tied winners the last one in array
//! order supplies it.

use std::cmp::Ordering;
use std::fmt;

use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};
use unicode_normalization::UnicodeNormalization;

use crate::blackboard::Snapshot;
use crate::model::{Channel, ChannelKind, ComparisonOp, Condition, ConditionGroup, GroupMode, PerChannel, RuleSet};
use crate::scalar::Scalar;

/// Why a condition could not be evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ErrorReason {
    /// The variable is not on the blackboard.
    Missing,
    /// `gt`/`lt` with a text operand.
    OrderingOnText,
    /// Equality between text and a non-text value.
    TypeMismatch,
    NonFinite,
}

impl ErrorReason {
    pub fn token(self) -> &'static str {
        match self {
            ErrorReason::Missing => "missing",
            ErrorReason::OrderingOnText => "ordering-on-text",
            ErrorReason::TypeMismatch => "type-mismatch",
            ErrorReason::NonFinite => "non-finite",
        }
    }
}

impl fmt::Display for ErrorReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Outcome {
    True,
    False,
    Error(ErrorReason),
}

impl Outcome {
    fn from_bool(b: bool) -> Self {
        if b {
            Outcome::True
        } else {
            Outcome::False
        }
    }

    pub fn is_true(self) -> bool {
        self == Outcome::True
    }

    pub fn is_error(self) -> bool {
        matches!(self, Outcome::Error(_))
    }

    pub fn error_reason(self) -> Option<ErrorReason> {
        match self {
            Outcome::Error(r) => Some(r),
            _ => None,
        }
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Outcome::True => f.write_str("TRUE"),
            Outcome::False => f.write_str("FALSE"),
            Outcome::Error(r) => write!(f, "ERROR({r})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CondTrace {
    pub index: usize,
    /// `None` when the variable was missing.
    pub observed: Option<Scalar>,
    pub outcome: Outcome,
}

impl Serialize for CondTrace {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let reason = self.outcome.error_reason();
        let mut st = serializer.serialize_struct("CondTrace", if reason.is_some() { 4 } else { 3 })?;
        st.serialize_field("index", &self.index)?;
        st.serialize_field("observed", &self.observed)?;
        st.serialize_field(
            "outcome",
            match self.outcome {
                Outcome::True => "true",
                Outcome::False => "false",
                Outcome::Error(_) => "error",
            },
        )?;
        if let Some(r) = reason {
            st.serialize_field("error", r.token())?;
        }
        st.end()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RuleTrace {
    pub id: String,
    pub priority: u32,
    pub matched: bool,
    pub excluded_by_priority: bool,
    #[serde(skip_serializing_if = "std::ops::Not::not")]
    pub disabled: bool,
    pub conditions: Vec<CondTrace>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroupEval {
    pub matched: bool,
    pub traces: Vec<CondTrace>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelResolution {
    pub value: Scalar,
    /// Ids of the maximal-priority candidates in rule-array order; empty
    /// when the default applied.
    pub winners: Vec<String>,
    pub traces: Vec<RuleTrace>,
}

/// Output of one tick: the four channel values plus the explanation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResolvedState {
    pub tick: u64,
    pub animation: String,
    pub h_flip: bool,
    pub v_flip: bool,
    pub speed_scale: f64,
    pub winners: PerChannel<Vec<String>>,
    /// True on the first tick and whenever any channel value differs from
    /// the previous tick.
    pub changed: bool,
    pub traces: PerChannel<Vec<RuleTrace>>,
}

impl ResolvedState {
    pub fn value(&self, kind: ChannelKind) -> Scalar {
        match kind {
            ChannelKind::Animation => Scalar::Text(self.animation.clone()),
            ChannelKind::HFlip => Scalar::Bool(self.h_flip),
            ChannelKind::VFlip => Scalar::Bool(self.v_flip),
            ChannelKind::SpeedScale => Scalar::Real(self.speed_scale),
        }
    }

    pub fn values(&self) -> PerChannel<Scalar> {
        PerChannel::from_fn(|k| self.value(k))
    }

    pub fn same_values(&self, other: &ResolvedState) -> bool {
        self.animation == other.animation
            && self.h_flip == other.h_flip
            && self.v_flip == other.v_flip
            && self.speed_scale == other.speed_scale
    }
}

fn text_eq(a: &str, b: &str) -> bool {
    a == b || (!(a.is_ascii() && b.is_ascii()) && a.nfc().eq(b.nfc()))
}

enum Number {
    Int(i64),
    Real(f64),
}

fn number(s: &Scalar) -> Option<Number> {
    match s {
        Scalar::Bool(b) => Some(Number::Int(i64::from(*b))),
        Scalar::Int(i) => Some(Number::Int(*i)),
        Scalar::Real(r) => Some(Number::Real(*r)),
        Scalar::Text(_) => None,
    }
}

fn ordering(observed: &Scalar, reference: &Scalar) -> Result<Ordering, ErrorReason> {
    match (number(observed), number(reference)) {
        (Some(Number::Int(a)), Some(Number::Int(b))) => Ok(a.cmp(&b)),
        (Some(a), Some(b)) => {
            let widen = |n: Number| match n {
                Number::Int(i) => i as f64,
                Number::Real(r) => r,
            };
            widen(a).partial_cmp(&widen(b)).ok_or(ErrorReason::NonFinite)
        }
        _ => Err(ErrorReason::TypeMismatch),
    }
}

/// Compares an observed value against a reference under `op`.
///
/// Integers and reals compare numerically, a boolean counts as 0/1 against
/// numbers (and two booleans order `false < true`), and text supports only
/// equality, on NFC-normalized form. Everything else is an error.
pub fn compare(observed: &Scalar, op: ComparisonOp, reference: &Scalar) -> Outcome {
    let is_order = matches!(op, ComparisonOp::Gt | ComparisonOp::Lt);
    let ord = match (observed, reference) {
        (Scalar::Text(a), Scalar::Text(b)) => {
            if is_order {
                return Outcome::Error(ErrorReason::OrderingOnText);
            }
            if text_eq(a, b) {
                Ordering::Equal
            } else {
                Ordering::Less
            }
        }
        (Scalar::Text(_), _) | (_, Scalar::Text(_)) => {
            return Outcome::Error(if is_order {
                ErrorReason::OrderingOnText
            } else {
                ErrorReason::TypeMismatch
            })
        }
        _ => match ordering(observed, reference) {
            Ok(o) => o,
            Err(e) => return Outcome::Error(e),
        },
    };
    Outcome::from_bool(match op {
        ComparisonOp::Eq => ord == Ordering::Equal,
        ComparisonOp::Ne => ord != Ordering::Equal,
        ComparisonOp::Gt => ord == Ordering::Greater,
        ComparisonOp::Lt => ord == Ordering::Less,
    })
}

/// Evaluates one condition against a snapshot.
pub fn eval_condition(c: &Condition, s: &Snapshot) -> Outcome {
    trace_condition(0, c, s).outcome
}

fn trace_condition(index: usize, c: &Condition, s: &Snapshot) -> CondTrace {
    match s.read_for(c) {
        None => CondTrace {
            index,
            observed: None,
            outcome: Outcome::Error(ErrorReason::Missing),
        },
        Some(v) => CondTrace {
            index,
            observed: Some(v.clone()),
            outcome: compare(v, c.op, &c.reference),
        },
    }
}

/// Evaluates every condition in the group (no short-circuit) and combines
/// the outcomes. Any error makes the group fail, under either mode.
pub fn eval_group(g: &ConditionGroup, s: &Snapshot) -> GroupEval {
    let traces: Vec<CondTrace> = g
        .items
        .iter()
        .enumerate()
        .map(|(i, c)| trace_condition(i, c, s))
        .collect();
    let clean = !traces.iter().any(|t| t.outcome.is_error());
    let matched = clean
        && match g.mode {
            GroupMode::And => traces.iter().all(|t| t.outcome.is_true()),
            GroupMode::Or => traces.iter().any(|t| t.outcome.is_true()),
        };
    GroupEval { matched, traces }
}

/// Resolves one channel against a snapshot.
pub fn resolve_channel(ch: &Channel, s: &Snapshot) -> ChannelResolution {
    let mut traces = Vec::with_capacity(ch.rules.len());
    let mut top: Option<u32> = None;
    for rule in &ch.rules {
        let eval = eval_group(&rule.conditions, s);
        let matched = eval.matched && !rule.disabled;
        if matched {
            top = top.max(Some(rule.priority));
        }
        traces.push(RuleTrace {
            id: rule.id.clone(),
            priority: rule.priority,
            matched,
            excluded_by_priority: false,
            disabled: rule.disabled,
            conditions: eval.traces,
        });
    }

    let Some(top) = top else {
        return ChannelResolution {
            value: ch.default.clone(),
            winners: Vec::new(),
            traces,
        };
    };

    let mut winners = Vec::new();
    let mut value = &ch.default;
    for (rule, trace) in ch.rules.iter().zip(traces.iter_mut()) {
        if !trace.matched {
            continue;
        }
        if rule.priority == top {
            winners.push(rule.id.clone());
            value = &rule.value;
        } else {
            trace.excluded_by_priority = true;
        }
    }
    ChannelResolution {
        value: value.clone(),
        winners,
        traces,
    }
}

/// Resolves all four channels against the same snapshot.
///
/// `prev` is the previous tick's state, used only for the `changed` flag.
pub fn resolve_tick(rs: &RuleSet, s: &Snapshot, prev: Option<&ResolvedState>) -> ResolvedState {
    let mut res = rs.channels.map(|_, ch| resolve_channel(ch, s));
    let take_value = |r: &mut ChannelResolution| std::mem::replace(&mut r.value, Scalar::Bool(false));
    let animation = match take_value(&mut res.animation) {
        Scalar::Text(t) => t,
        other => unreachable!("animation channel resolved to {other:?}"),
    };
    let h_flip = take_value(&mut res.h_flip).as_bool().expect("h_flip is boolean");
    let v_flip = take_value(&mut res.v_flip).as_bool().expect("v_flip is boolean");
    let speed_scale = take_value(&mut res.speed_scale).as_real().expect("speed_scale is real");

    let mut state = ResolvedState {
        tick: s.tick(),
        animation,
        h_flip,
        v_flip,
        speed_scale,
        winners: PerChannel::default(),
        changed: true,
        traces: PerChannel::default(),
    };
    for kind in ChannelKind::ALL {
        let r = &mut res[kind];
        state.winners[kind] = std::mem::take(&mut r.winners);
        state.traces[kind] = std::mem::take(&mut r.traces);
    }
    state.changed = prev.is_none_or(|p| !p.same_values(&state));
    state
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::blackboard::{Blackboard, VarKey};
    use crate::model::{ComparisonOp::*, Rule};

    fn snap(vars: &[(&str, Scalar)]) -> Snapshot {
        let mut bb = Blackboard::new();
        for (addr, v) in vars {
            bb.set_var(addr.parse().unwrap(), v.clone()).unwrap();
        }
        bb.snapshot(0)
    }

    fn cond(addr: &str, op: ComparisonOp, r: impl Into<Scalar>) -> Condition {
        let key: VarKey = addr.parse().unwrap();
        Condition {
            source: key.source,
            name: key.name,
            mode: key.mode,
            op,
            reference: r.into(),
        }
    }

    fn rule(id: &str, priority: u32, value: &str, items: Vec<Condition>) -> Rule {
        Rule::new(id, priority, value, ConditionGroup::all(items))
    }

    #[test]
    fn direction_ne_zero() {
        let s = snap(&[("player.direction", 1.into())]);
        assert_eq!(eval_condition(&cond("player.direction", Ne, 0), &s), Outcome::True);
    }

    #[test]
    fn function_output_eq_true() {
        let s = snap(&[("player.is_on_floor()", true.into())]);
        assert_eq!(
            eval_condition(&cond("player.is_on_floor()", Eq, true), &s),
            Outcome::True
        );
    }

    #[test]
    fn ordering_on_text_is_an_error() {
        let s = snap(&[("player.speed", 2.5.into())]);
        assert_eq!(
            eval_condition(&cond("player.speed", Gt, "fast"), &s),
            Outcome::Error(ErrorReason::OrderingOnText)
        );
    }

    #[test]
    fn boolean_coerces_against_integer() {
        let s = snap(&[("player.is_on_floor()", true.into())]);
        assert_eq!(eval_condition(&cond("player.is_on_floor()", Eq, 1), &s), Outcome::True);
        assert_eq!(eval_condition(&cond("player.is_on_floor()", Eq, 0), &s), Outcome::False);
        assert_eq!(
            eval_condition(&cond("player.is_on_floor()", Gt, 0.5), &s),
            Outcome::True
        );
    }

    #[test]
    fn comparison_table() {
        use Outcome::{Error, False, True};
        let cases: Vec<(Scalar, ComparisonOp, Scalar, Outcome)> = vec![
            (1.into(), Eq, 1.0.into(), True),
            (2.into(), Gt, 1.5.into(), True),
            ((-1).into(), Lt, 0.into(), True),
            (0.into(), Ne, 0.into(), False),
            (false.into(), Lt, true.into(), True),
            (true.into(), Gt, false.into(), True),
            (true.into(), Eq, true.into(), True),
            ("run".into(), Eq, "run".into(), True),
            ("run".into(), Ne, "idle".into(), True),
            ("caf\u{e9}".into(), Eq, "cafe\u{301}".into(), True),
            ("a".into(), Lt, "b".into(), Error(ErrorReason::OrderingOnText)),
            ("1".into(), Eq, 1.into(), Error(ErrorReason::TypeMismatch)),
            (true.into(), Ne, "true".into(), Error(ErrorReason::TypeMismatch)),
            (1.0.into(), Gt, "x".into(), Error(ErrorReason::OrderingOnText)),
            (f64::NAN.into(), Eq, 1.into(), Error(ErrorReason::NonFinite)),
        ];
        for (obs, op, r, want) in cases {
            assert_eq!(compare(&obs, op, &r), want, "{obs} {} {r}", op.symbol());
        }
    }

    #[test]
    fn missing_variable_is_an_error() {
        let s = snap(&[]);
        assert_eq!(
            eval_condition(&cond("player.direction", Ne, 0), &s),
            Outcome::Error(ErrorReason::Missing)
        );
    }

    #[test]
    fn group_semantics() {
        let s = snap(&[("p.a", true.into()), ("p.b", false.into())]);
        let and = ConditionGroup::all(vec![cond("p.a", Eq, true), cond("p.a", Ne, false)]);
        assert!(eval_group(&and, &s).matched);
        let or = ConditionGroup::any(vec![cond("p.b", Eq, true), cond("p.a", Eq, true)]);
        assert!(eval_group(&or, &s).matched);
        let erroring = ConditionGroup::all(vec![cond("p.a", Eq, true), cond("p.zzz", Eq, true)]);
        let eval = eval_group(&erroring, &s);
        assert!(!eval.matched);
        assert_eq!(eval.traces[1].outcome, Outcome::Error(ErrorReason::Missing));
        assert_eq!(eval.traces[1].observed, None);
    }

    #[test]
    fn error_is_not_rescued_by_or() {
        let s = snap(&[("p.a", true.into())]);
        let g = ConditionGroup::any(vec![cond("p.a", Eq, true), cond("p.missing", Eq, true)]);
        let eval = eval_group(&g, &s);
        assert!(!eval.matched);
        assert_eq!(eval.traces.len(), 2);
    }

    #[test]
    fn higher_priority_supersedes() {
        let ch = Channel::new(ChannelKind::Animation, "idle")
            .with_rule(rule("run", 1, "run", vec![cond("p.direction", Ne, 0)]))
            .with_rule(rule("damaged", 10, "damaged", vec![cond("p.hurt", Eq, true)]));
        let s = snap(&[("p.direction", 1.into()), ("p.hurt", true.into())]);
        let r = resolve_channel(&ch, &s);
        assert_eq!(r.value, Scalar::from("damaged"));
        assert_eq!(r.winners, vec!["damaged"]);
        assert!(r.traces[0].matched && r.traces[0].excluded_by_priority);
        assert!(!r.traces[1].excluded_by_priority);
    }

    #[test]
    fn default_when_no_candidates() {
        let ch = Channel::new(ChannelKind::Animation, "idle").with_rule(rule(
            "run",
            1,
            "run",
            vec![cond("p.direction", Ne, 0)],
        ));
        let r = resolve_channel(&ch, &snap(&[("p.direction", 0.into())]));
        assert_eq!(r.value, Scalar::from("idle"));
        assert!(r.winners.is_empty());
    }

    #[test]
    fn ties_all_win_and_last_supplies_value() {
        let ch = Channel::new(ChannelKind::Animation, "idle")
            .with_rule(rule("a", 5, "x", vec![cond("p.v", Eq, 1)]))
            .with_rule(rule("b", 5, "y", vec![cond("p.v", Eq, 1)]));
        let r = resolve_channel(&ch, &snap(&[("p.v", 1.into())]));
        assert_eq!(r.winners, vec!["a", "b"]);
        assert_eq!(r.value, Scalar::from("y"));
    }

    #[test]
    fn disabled_rules_never_win() {
        let mut damaged = rule("damaged", 10, "damaged", vec![cond("p.hurt", Eq, true)]);
        damaged.disabled = true;
        let ch = Channel::new(ChannelKind::Animation, "idle")
            .with_rule(rule("run", 1, "run", vec![cond("p.direction", Ne, 0)]))
            .with_rule(damaged);
        let r = resolve_channel(&ch, &snap(&[("p.direction", 1.into()), ("p.hurt", true.into())]));
        assert_eq!(r.winners, vec!["run"]);
        assert!(r.traces[1].disabled && !r.traces[1].matched);
    }

    #[test]
    fn changed_flag_tracks_values_only() {
        let rs = RuleSet::new("idle", false, false, 1.0);
        let s = snap(&[]);
        let first = resolve_tick(&rs, &s, None);
        assert!(first.changed);
        let second = resolve_tick(&rs, &s, Some(&first));
        assert!(!second.changed);
        let rs2 = RuleSet::new("idle", true, false, 1.0);
        assert!(resolve_tick(&rs2, &s, Some(&second)).changed);
    }

    #[test]
    fn resolved_state_json_shape() {
        let rs = RuleSet::new("idle", false, false, 1.0).with_rule(
            ChannelKind::Animation,
            rule("run", 1, "run", vec![cond("p.direction", Ne, 0)]),
        );
        let state = resolve_tick(&rs, &snap(&[]), None);
        let v = serde_json::to_value(&state).unwrap();
        assert_eq!(v["animation"], "idle");
        assert_eq!(v["speed_scale"], 1.0);
        assert_eq!(v["winners"]["animation"], serde_json::json!([]));
        let c = &v["traces"]["animation"][0]["conditions"][0];
        assert_eq!(c["observed"], serde_json::Value::Null);
        assert_eq!(c["outcome"], "error");
        assert_eq!(c["error"], "missing");
    }
}
