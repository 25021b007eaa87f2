//! Brute-force reference resolver used for differential testing.
//!
//! Deliberately shares no evaluation or comparison code with
//! [`crate::resolver`]: it re-derives every outcome from an explicit
//! operand-pair table, collects all matches, stable-sorts them by priority
//! and takes the maximal prefix.

use unicode_normalization::UnicodeNormalization;

use crate::blackboard::{Snapshot, VarKey};
use crate::model::{Channel, ComparisonOp, Condition, GroupMode};
use crate::resolver::{ChannelResolution, CondTrace, ErrorReason, Outcome, RuleTrace};
use crate::scalar::Scalar;

fn verdict(op: ComparisonOp, less: bool, equal: bool) -> Outcome {
    let greater = !less && !equal;
    let b = match op {
        ComparisonOp::Eq => equal,
        ComparisonOp::Ne => !equal,
        ComparisonOp::Gt => greater,
        ComparisonOp::Lt => less,
    };
    if b {
        Outcome::True
    } else {
        Outcome::False
    }
}

fn reals(op: ComparisonOp, a: f64, b: f64) -> Outcome {
    if a.is_nan() || b.is_nan() {
        return Outcome::Error(ErrorReason::NonFinite);
    }
    verdict(op, a < b, a == b)
}

fn b2i(b: bool) -> i64 {
    if b {
        1
    } else {
        0
    }
}

fn oracle_compare(observed: &Scalar, op: ComparisonOp, reference: &Scalar) -> Outcome {
    use Scalar::*;
    let ordering_op = op == ComparisonOp::Gt || op == ComparisonOp::Lt;
    match (observed, reference) {
        (Int(a), Int(b)) => verdict(op, a < b, a == b),
        (Int(a), Real(b)) => reals(op, *a as f64, *b),
        (Real(a), Int(b)) => reals(op, *a, *b as f64),
        (Real(a), Real(b)) => reals(op, *a, *b),
        (Bool(a), Bool(b)) => verdict(op, !*a && *b, a == b),
        (Bool(a), Int(b)) => {
            let a = b2i(*a);
            verdict(op, a < *b, a == *b)
        }
        (Int(a), Bool(b)) => {
            let b = b2i(*b);
            verdict(op, *a < b, *a == b)
        }
        (Bool(a), Real(b)) => reals(op, b2i(*a) as f64, *b),
        (Real(a), Bool(b)) => reals(op, *a, b2i(*b) as f64),
        (Text(a), Text(b)) => {
            if ordering_op {
                Outcome::Error(ErrorReason::OrderingOnText)
            } else {
                let a: String = a.nfc().collect();
                let b: String = b.nfc().collect();
                verdict(op, false, a == b)
            }
        }
        (Text(_), _) | (_, Text(_)) => {
            if ordering_op {
                Outcome::Error(ErrorReason::OrderingOnText)
            } else {
                Outcome::Error(ErrorReason::TypeMismatch)
            }
        }
    }
}

fn oracle_condition(index: usize, c: &Condition, s: &Snapshot) -> CondTrace {
    let key = VarKey {
        source: c.source.clone(),
        name: c.name.clone(),
        mode: c.mode,
    };
    let observed = s.iter().find(|(k, _)| **k == key).map(|(_, v)| v.clone());
    let outcome = match &observed {
        None => Outcome::Error(ErrorReason::Missing),
        Some(v) => oracle_compare(v, c.op, &c.reference),
    };
    CondTrace {
        index,
        observed,
        outcome,
    }
}

/// Independent reference implementation of [`crate::resolver::resolve_channel`].
pub fn oracle_resolve(ch: &Channel, s: &Snapshot) -> ChannelResolution {
    let mut traces: Vec<RuleTrace> = Vec::new();
    let mut matched: Vec<(usize, u32)> = Vec::new();
    for (i, rule) in ch.rules.iter().enumerate() {
        let conds: Vec<CondTrace> = (0..rule.conditions.items.len())
            .map(|j| oracle_condition(j, &rule.conditions.items[j], s))
            .collect();
        let mut errors = 0;
        let mut trues = 0;
        for c in &conds {
            match c.outcome {
                Outcome::True => trues += 1,
                Outcome::Error(_) => errors += 1,
                Outcome::False => {}
            }
        }
        let group_ok = match rule.conditions.mode {
            GroupMode::And => trues == conds.len(),
            GroupMode::Or => trues > 0,
        };
        let is_match = errors == 0 && group_ok && !rule.disabled;
        if is_match {
            matched.push((i, rule.priority));
        }
        traces.push(RuleTrace {
            id: rule.id.clone(),
            priority: rule.priority,
            matched: is_match,
            excluded_by_priority: false,
            disabled: rule.disabled,
            conditions: conds,
        });
    }

    // Stable: equal priorities keep ascending array index.
    matched.sort_by_key(|m| std::cmp::Reverse(m.1));
    let prefix: Vec<usize> = match matched.first() {
        None => Vec::new(),
        Some(&(_, top)) => matched.iter().take_while(|m| m.1 == top).map(|m| m.0).collect(),
    };
    for &(i, _) in &matched {
        if !prefix.contains(&i) {
            traces[i].excluded_by_priority = true;
        }
    }
    let value = match prefix.last() {
        Some(&i) => ch.rules[i].value.clone(),
        None => ch.default.clone(),
    };
    ChannelResolution {
        value,
        winners: prefix.iter().map(|&i| ch.rules[i].id.clone()).collect(),
        traces,
    }
}
