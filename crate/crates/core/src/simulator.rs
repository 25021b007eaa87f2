//! Deterministic trace replay: scripted variable writes in, one resolved
//! state per tick out.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::blackboard::{Blackboard, VarKey};
use crate::document::{json_error, ParseError, ParseErrorKind};
use crate::model::{ChannelKind, PerChannel, RuleSet};
use crate::resolver::{resolve_tick, ResolvedState};
use crate::scalar::Scalar;

/// Writes applied at the start of one tick, keyed by trace address.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TickEvent {
    pub set: BTreeMap<String, Scalar>,
}

impl TickEvent {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, address: &str, value: impl Into<Scalar>) -> Self {
        self.set.insert(address.to_owned(), value.into());
        self
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trace {
    pub ticks: Vec<TickEvent>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TraceError {
    #[error("trace document {0}")]
    Document(#[from] ParseError),
    #[error("tick {tick}: malformed address `{address}`")]
    BadAddress { tick: usize, address: String },
    #[error("tick {tick}: non-finite value for `{address}`")]
    NonFinite { tick: usize, address: String },
}

fn pointer_escape(s: &str) -> String {
    s.replace('~', "~0").replace('/', "~1")
}

impl Trace {
    /// Parses `{"ticks":[{"set":{"player.direction":1}}, ...]}`. A tick may
    /// omit `set`. Addresses are checked when the trace runs.
    pub fn from_json(bytes: &[u8]) -> Result<Trace, TraceError> {
        let doc: Value = serde_json::from_slice(bytes).map_err(|e| json_error(&e))?;
        let wrong = |path: String, what| TraceError::Document(ParseError::new(path, ParseErrorKind::WrongType(what)));
        let root = doc.as_object().ok_or_else(|| wrong(String::new(), "object"))?;
        if let Some(k) = root.keys().find(|k| *k != "ticks") {
            return Err(ParseError::new(
                format!("/{}", pointer_escape(k)),
                ParseErrorKind::UnknownField(k.clone()),
            )
            .into());
        }
        let ticks = root
            .get("ticks")
            .ok_or_else(|| ParseError::new("", ParseErrorKind::MissingField("ticks")))?
            .as_array()
            .ok_or_else(|| wrong("/ticks".into(), "array"))?;
        let mut out = Vec::with_capacity(ticks.len());
        for (i, t) in ticks.iter().enumerate() {
            let obj = t.as_object().ok_or_else(|| wrong(format!("/ticks/{i}"), "object"))?;
            if let Some(k) = obj.keys().find(|k| *k != "set") {
                return Err(ParseError::new(
                    format!("/ticks/{i}/{}", pointer_escape(k)),
                    ParseErrorKind::UnknownField(k.clone()),
                )
                .into());
            }
            let mut ev = TickEvent::new();
            if let Some(set) = obj.get("set") {
                let set = set
                    .as_object()
                    .ok_or_else(|| wrong(format!("/ticks/{i}/set"), "object"))?;
                for (addr, v) in set {
                    let s = Scalar::from_json(v).ok_or_else(|| {
                        wrong(
                            format!("/ticks/{i}/set/{}", pointer_escape(addr)),
                            "boolean, integer, real or string",
                        )
                    })?;
                    ev.set.insert(addr.clone(), s);
                }
            }
            out.push(ev);
        }
        Ok(Trace { ticks: out })
    }

    pub fn to_json(&self) -> Vec<u8> {
        #[derive(Serialize)]
        struct Out<'a> {
            ticks: Vec<Tick<'a>>,
        }
        #[derive(Serialize)]
        struct Tick<'a> {
            set: &'a BTreeMap<String, Scalar>,
        }
        let out = Out {
            ticks: self.ticks.iter().map(|t| Tick { set: &t.set }).collect(),
        };
        let mut v = serde_json::to_vec_pretty(&out).expect("traces always serialize");
        v.push(b'\n');
        v
    }
}

/// One resolved state per tick, ticks numbered from 0.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Timeline {
    pub entries: Vec<ResolvedState>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EntryRepr {
    tick: u64,
    animation: String,
    h_flip: bool,
    v_flip: bool,
    speed_scale: f64,
    winners: PerChannel<Vec<String>>,
    changed: bool,
}

impl<'de> Deserialize<'de> for PerChannel<Vec<String>> {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct Repr {
            animation: Vec<String>,
            h_flip: Vec<String>,
            v_flip: Vec<String>,
            speed_scale: Vec<String>,
        }
        let r = Repr::deserialize(d)?;
        Ok(PerChannel {
            animation: r.animation,
            h_flip: r.h_flip,
            v_flip: r.v_flip,
            speed_scale: r.speed_scale,
        })
    }
}

impl Timeline {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Canonical timeline file bytes. Explanation traces are not included.
    pub fn to_json(&self) -> Vec<u8> {
        let reprs: Vec<EntryRepr> = self
            .entries
            .iter()
            .map(|e| EntryRepr {
                tick: e.tick,
                animation: e.animation.clone(),
                h_flip: e.h_flip,
                v_flip: e.v_flip,
                speed_scale: e.speed_scale,
                winners: e.winners.clone(),
                changed: e.changed,
            })
            .collect();
        let mut v = serde_json::to_vec_pretty(&reprs).expect("timelines always serialize");
        v.push(b'\n');
        v
    }

    /// Reads a timeline file (for example a golden). Entries come back with
    /// empty explanation traces.
    pub fn from_json(bytes: &[u8]) -> Result<Timeline, ParseError> {
        let reprs: Vec<EntryRepr> = serde_json::from_slice(bytes).map_err(|e| json_error(&e))?;
        Ok(Timeline {
            entries: reprs
                .into_iter()
                .map(|r| ResolvedState {
                    tick: r.tick,
                    animation: r.animation,
                    h_flip: r.h_flip,
                    v_flip: r.v_flip,
                    speed_scale: r.speed_scale,
                    winners: r.winners,
                    changed: r.changed,
                    traces: PerChannel::default(),
                })
                .collect(),
        })
    }
}

/// Applies one tick's writes to a blackboard.
pub fn apply_event(bb: &mut Blackboard, tick: usize, ev: &TickEvent) -> Result<(), TraceError> {
    for (address, value) in &ev.set {
        let key: VarKey = address.parse().map_err(|_| TraceError::BadAddress {
            tick,
            address: address.clone(),
        })?;
        bb.set_var(key, value.clone()).map_err(|_| TraceError::NonFinite {
            tick,
            address: address.clone(),
        })?;
    }
    Ok(())
}

/// Replays `trace` against `rs`: per tick, apply writes, snapshot, resolve.
pub fn run_trace(rs: &RuleSet, trace: &Trace) -> Result<Timeline, TraceError> {
    let mut bb = Blackboard::new();
    let mut entries: Vec<ResolvedState> = Vec::with_capacity(trace.ticks.len());
    for (i, ev) in trace.ticks.iter().enumerate() {
        apply_event(&mut bb, i, ev)?;
        let snap = bb.snapshot(i as u64);
        let state = resolve_tick(rs, &snap, entries.last());
        entries.push(state);
    }
    Ok(Timeline { entries })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "field", rename_all = "lowercase")]
pub enum Mismatch {
    Value { actual: Scalar, expected: Scalar },
    Winners { actual: Vec<String>, expected: Vec<String> },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Divergence {
    pub tick: u64,
    pub channel: ChannelKind,
    #[serde(flatten)]
    pub mismatch: Mismatch,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("timeline length mismatch: actual {actual} ticks, expected {expected}")]
pub struct LengthMismatch {
    pub actual: usize,
    pub expected: usize,
}

/// Compares channel values tick by tick; with `strict`, winner lists too.
/// Divergences are ordered by tick, then channel.
pub fn diff_timeline(actual: &Timeline, expected: &Timeline, strict: bool) -> Result<Vec<Divergence>, LengthMismatch> {
    if actual.len() != expected.len() {
        return Err(LengthMismatch {
            actual: actual.len(),
            expected: expected.len(),
        });
    }
    let mut out = Vec::new();
    for (a, e) in actual.entries.iter().zip(&expected.entries) {
        for kind in ChannelKind::ALL {
            let (av, ev) = (a.value(kind), e.value(kind));
            if av != ev {
                out.push(Divergence {
                    tick: e.tick,
                    channel: kind,
                    mismatch: Mismatch::Value {
                        actual: av,
                        expected: ev,
                    },
                });
            }
            if strict && a.winners[kind] != e.winners[kind] {
                out.push(Divergence {
                    tick: e.tick,
                    channel: kind,
                    mismatch: Mismatch::Winners {
                        actual: a.winners[kind].clone(),
                        expected: e.winners[kind].clone(),
                    },
                });
            }
        }
    }
    Ok(out)
}
