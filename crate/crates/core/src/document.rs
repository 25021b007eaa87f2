//! JSON rule documents: parsing, invariant checking and canonical
//! serialization.
//!
//! Locations in errors are JSON pointers into the document
//! (`/channels/animation/rules/0/priority`), or `line L, column C` for errors
//! raised by the JSON tokenizer itself.

use std::collections::HashSet;

use serde::Serialize;
use serde_json::{Map, Value};

use crate::model::{
    Channel, ChannelKind, ChannelValueError, ComparisonOp, Condition, ConditionGroup, GroupMode, PerChannel, Rule,
    RuleSet, ValueMode, DEFAULT_PRIORITY, FORMAT_VERSION,
};
use crate::scalar::{Scalar, ValueKind};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{location}: {kind}")]
pub struct ParseError {
    pub location: String,
    pub kind: ParseErrorKind,
}

impl ParseError {
    pub fn new(location: impl Into<String>, kind: ParseErrorKind) -> Self {
        ParseError {
            location: location.into(),
            kind,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ParseErrorKind {
    #[error("malformed JSON: {0}")]
    Syntax(String),
    #[error("expected {0}")]
    WrongType(&'static str),
    #[error("unknown field `{0}`")]
    UnknownField(String),
    #[error("missing field `{0}`")]
    MissingField(&'static str),
    #[error("unsupported version {0}")]
    UnsupportedVersion(String),
    #[error("missing channel `{0}`")]
    MissingChannel(ChannelKind),
    #[error("unknown channel `{0}`")]
    UnknownChannel(String),
    #[error("unknown {field} token `{token}`")]
    UnknownToken { field: &'static str, token: String },
    #[error("duplicate rule id `{0}`")]
    DuplicateRuleId(String),
    #[error("priority 0 is reserved for the channel default")]
    ReservedPriority,
    #[error("priority must be an integer between 1 and {}", u32::MAX)]
    InvalidPriority,
    #[error("value-kind mismatch: {channel} expects {expected}, found {found}")]
    ValueKindMismatch {
        channel: ChannelKind,
        expected: ValueKind,
        found: ValueKind,
    },
    #[error("animation name must be nonempty")]
    EmptyAnimationName,
    #[error("speed scale must be greater than zero")]
    NonPositiveSpeed,
    #[error("condition group must contain at least one condition")]
    EmptyConditionGroup,
    #[error("non-finite real")]
    NonFiniteReal,
    #[error("identifier must be nonempty")]
    EmptyIdentifier,
    #[error("identifier `{0}` contains the reserved separator '.'")]
    ReservedSeparator(String),
}

impl ParseErrorKind {
    /// Stable machine-readable code.
    pub fn code(&self) -> &'static str {
        match self {
            ParseErrorKind::Syntax(_) => "syntax",
            ParseErrorKind::WrongType(_) => "wrong-type",
            ParseErrorKind::UnknownField(_) => "unknown-field",
            ParseErrorKind::MissingField(_) => "missing-field",
            ParseErrorKind::UnsupportedVersion(_) => "unsupported-version",
            ParseErrorKind::MissingChannel(_) => "missing-channel",
            ParseErrorKind::UnknownChannel(_) => "unknown-channel",
            ParseErrorKind::UnknownToken { .. } => "unknown-token",
            ParseErrorKind::DuplicateRuleId(_) => "duplicate-rule-id",
            ParseErrorKind::ReservedPriority => "reserved-priority",
            ParseErrorKind::InvalidPriority => "invalid-priority",
            ParseErrorKind::ValueKindMismatch { .. } => "value-kind-mismatch",
            ParseErrorKind::EmptyAnimationName => "empty-animation-name",
            ParseErrorKind::NonPositiveSpeed => "non-positive-speed",
            ParseErrorKind::EmptyConditionGroup => "empty-condition-group",
            ParseErrorKind::NonFiniteReal => "non-finite-real",
            ParseErrorKind::EmptyIdentifier => "empty-identifier",
            ParseErrorKind::ReservedSeparator(_) => "reserved-separator",
        }
    }
}

impl From<ChannelValueError> for ParseErrorKind {
    fn from(e: ChannelValueError) -> Self {
        match e {
            ChannelValueError::KindMismatch {
                channel,
                expected,
                found,
            } => ParseErrorKind::ValueKindMismatch {
                channel,
                expected,
                found,
            },
            ChannelValueError::EmptyAnimation => ParseErrorKind::EmptyAnimationName,
            ChannelValueError::NonPositiveSpeed => ParseErrorKind::NonPositiveSpeed,
            ChannelValueError::NonFinite => ParseErrorKind::NonFiniteReal,
        }
    }
}

/// Maps a tokenizer error onto a [`ParseError`]. Reals that overflow to
/// infinity surface from serde_json as "number out of range".
pub fn json_error(e: &serde_json::Error) -> ParseError {
    let location = format!("line {}, column {}", e.line(), e.column());
    let msg = e.to_string();
    if msg.starts_with("number out of range") {
        ParseError::new(location, ParseErrorKind::NonFiniteReal)
    } else {
        ParseError::new(location, ParseErrorKind::Syntax(msg))
    }
}

/// Parses a UTF-8 JSON rule document.
pub fn parse_ruleset(document: &[u8]) -> Result<RuleSet, ParseError> {
    let value: Value = serde_json::from_slice(document).map_err(|e| json_error(&e))?;
    parse_ruleset_value(&value)
}

/// Parses an already-decoded rule document.
pub fn parse_ruleset_value(value: &Value) -> Result<RuleSet, ParseError> {
    let rs = read_ruleset(value)?;
    check_ruleset(&rs)?;
    Ok(rs)
}

/// Parses a condition group (`{"mode":..,"items":[..]}`) found at `path`.
pub fn parse_condition_group(value: &Value, path: &str) -> Result<ConditionGroup, ParseError> {
    let group = read_group(value, path)?;
    check_group(&group, path)?;
    Ok(group)
}

/// Parses a value that must be admissible on channel `kind`.
pub fn parse_channel_value(kind: ChannelKind, value: &Value, path: &str) -> Result<Scalar, ParseError> {
    let s = read_scalar(value, path)?;
    kind.check_value(&s).map_err(|e| ParseError::new(path, e.into()))?;
    Ok(s)
}

/// Parses a rule priority found at `path`.
pub fn parse_priority(value: &Value, path: &str) -> Result<u32, ParseError> {
    let p = read_priority(value, path)?;
    if p == DEFAULT_PRIORITY {
        return Err(ParseError::new(path, ParseErrorKind::ReservedPriority));
    }
    Ok(p)
}

fn object<'a>(value: &'a Value, path: &str, allowed: &[&str]) -> Result<&'a Map<String, Value>, ParseError> {
    let map = value
        .as_object()
        .ok_or_else(|| ParseError::new(path, ParseErrorKind::WrongType("object")))?;
    if let Some(k) = map.keys().find(|k| !allowed.contains(&k.as_str())) {
        return Err(ParseError::new(
            format!("{path}/{k}"),
            ParseErrorKind::UnknownField(k.clone()),
        ));
    }
    Ok(map)
}

fn field<'a>(map: &'a Map<String, Value>, key: &'static str, path: &str) -> Result<&'a Value, ParseError> {
    map.get(key)
        .ok_or_else(|| ParseError::new(path, ParseErrorKind::MissingField(key)))
}

fn string<'a>(value: &'a Value, path: &str) -> Result<&'a str, ParseError> {
    value
        .as_str()
        .ok_or_else(|| ParseError::new(path, ParseErrorKind::WrongType("string")))
}

fn token<T: std::str::FromStr>(value: &Value, field: &'static str, path: &str) -> Result<T, ParseError> {
    let s = string(value, path)?;
    s.parse().map_err(|_| {
        ParseError::new(
            path,
            ParseErrorKind::UnknownToken {
                field,
                token: s.to_owned(),
            },
        )
    })
}

fn read_scalar(value: &Value, path: &str) -> Result<Scalar, ParseError> {
    Scalar::from_json(value)
        .ok_or_else(|| ParseError::new(path, ParseErrorKind::WrongType("boolean, integer, real or string")))
}

fn read_priority(value: &Value, path: &str) -> Result<u32, ParseError> {
    value
        .as_u64()
        .and_then(|p| u32::try_from(p).ok())
        .ok_or_else(|| ParseError::new(path, ParseErrorKind::InvalidPriority))
}

fn read_ruleset(value: &Value) -> Result<RuleSet, ParseError> {
    let root = "";
    let map = object(value, root, &["version", "channels"])?;
    let version = field(map, "version", root)?;
    if version.as_u64() != Some(u64::from(FORMAT_VERSION)) {
        return Err(ParseError::new(
            "/version",
            ParseErrorKind::UnsupportedVersion(version.to_string()),
        ));
    }
    let channels = field(map, "channels", root)?;
    let cmap = channels
        .as_object()
        .ok_or_else(|| ParseError::new("/channels", ParseErrorKind::WrongType("object")))?;
    if let Some(k) = cmap.keys().find(|k| k.parse::<ChannelKind>().is_err()) {
        return Err(ParseError::new(
            format!("/channels/{k}"),
            ParseErrorKind::UnknownChannel(k.clone()),
        ));
    }
    let mut out = Vec::with_capacity(4);
    for kind in ChannelKind::ALL {
        let v = cmap
            .get(kind.token())
            .ok_or_else(|| ParseError::new("/channels", ParseErrorKind::MissingChannel(kind)))?;
        out.push(read_channel(kind, v, &format!("/channels/{kind}"))?);
    }
    let mut it = out.into_iter();
    let mut next = || it.next().expect("four channels");
    Ok(RuleSet {
        version: FORMAT_VERSION,
        channels: PerChannel {
            animation: next(),
            h_flip: next(),
            v_flip: next(),
            speed_scale: next(),
        },
    })
}

fn read_channel(kind: ChannelKind, value: &Value, path: &str) -> Result<Channel, ParseError> {
    let map = object(value, path, &["default", "rules"])?;
    let default = read_scalar(field(map, "default", path)?, &format!("{path}/default"))?;
    let rules = match map.get("rules") {
        None => Vec::new(),
        Some(v) => v
            .as_array()
            .ok_or_else(|| ParseError::new(format!("{path}/rules"), ParseErrorKind::WrongType("array")))?
            .iter()
            .enumerate()
            .map(|(i, r)| read_rule(r, &format!("{path}/rules/{i}")))
            .collect::<Result<_, _>>()?,
    };
    Ok(Channel { kind, default, rules })
}

fn read_rule(value: &Value, path: &str) -> Result<Rule, ParseError> {
    let map = object(value, path, &["id", "priority", "value", "conditions", "disabled"])?;
    let id = string(field(map, "id", path)?, &format!("{path}/id"))?.to_owned();
    let priority = read_priority(field(map, "priority", path)?, &format!("{path}/priority"))?;
    let value = read_scalar(field(map, "value", path)?, &format!("{path}/value"))?;
    let conditions = read_group(field(map, "conditions", path)?, &format!("{path}/conditions"))?;
    let disabled = match map.get("disabled") {
        None => false,
        Some(v) => v
            .as_bool()
            .ok_or_else(|| ParseError::new(format!("{path}/disabled"), ParseErrorKind::WrongType("boolean")))?,
    };
    Ok(Rule {
        id,
        priority,
        value,
        conditions,
        disabled,
    })
}

fn read_group(value: &Value, path: &str) -> Result<ConditionGroup, ParseError> {
    let map = object(value, path, &["mode", "items"])?;
    let mode: GroupMode = token(field(map, "mode", path)?, "group mode", &format!("{path}/mode"))?;
    let items = field(map, "items", path)?
        .as_array()
        .ok_or_else(|| ParseError::new(format!("{path}/items"), ParseErrorKind::WrongType("array")))?
        .iter()
        .enumerate()
        .map(|(i, c)| read_condition(c, &format!("{path}/items/{i}")))
        .collect::<Result<_, _>>()?;
    Ok(ConditionGroup { mode, items })
}

fn read_condition(value: &Value, path: &str) -> Result<Condition, ParseError> {
    let map = object(value, path, &["source", "name", "kind", "op", "ref"])?;
    let source = string(field(map, "source", path)?, &format!("{path}/source"))?.to_owned();
    let name = string(field(map, "name", path)?, &format!("{path}/name"))?.to_owned();
    let mode: ValueMode = token(field(map, "kind", path)?, "value mode", &format!("{path}/kind"))?;
    let op: ComparisonOp = token(field(map, "op", path)?, "comparison", &format!("{path}/op"))?;
    let reference = read_scalar(field(map, "ref", path)?, &format!("{path}/ref"))?;
    Ok(Condition {
        source,
        name,
        mode,
        op,
        reference,
    })
}

/// Checks every ruleset invariant on an already-constructed value.
///
/// [`parse_ruleset`] runs this after decoding; callers that build or edit a
/// [`RuleSet`] in code use it to get the same guarantees.
pub fn check_ruleset(rs: &RuleSet) -> Result<(), ParseError> {
    if rs.version != FORMAT_VERSION {
        return Err(ParseError::new(
            "/version",
            ParseErrorKind::UnsupportedVersion(rs.version.to_string()),
        ));
    }
    for (kind, ch) in rs.channels.iter() {
        let path = format!("/channels/{kind}");
        if ch.kind != kind {
            return Err(ParseError::new(path, ParseErrorKind::MissingChannel(kind)));
        }
        kind.check_value(&ch.default)
            .map_err(|e| ParseError::new(format!("{path}/default"), e.into()))?;
        let mut seen = HashSet::new();
        for (i, rule) in ch.rules.iter().enumerate() {
            check_rule(kind, rule, &format!("{path}/rules/{i}"))?;
            if !seen.insert(rule.id.as_str()) {
                return Err(ParseError::new(
                    format!("{path}/rules/{i}/id"),
                    ParseErrorKind::DuplicateRuleId(rule.id.clone()),
                ));
            }
        }
    }
    Ok(())
}

/// Checks a single rule against the invariants of channel `kind`.
pub fn check_rule(kind: ChannelKind, rule: &Rule, path: &str) -> Result<(), ParseError> {
    if rule.id.is_empty() {
        return Err(ParseError::new(format!("{path}/id"), ParseErrorKind::EmptyIdentifier));
    }
    if rule.priority == DEFAULT_PRIORITY {
        return Err(ParseError::new(
            format!("{path}/priority"),
            ParseErrorKind::ReservedPriority,
        ));
    }
    kind.check_value(&rule.value)
        .map_err(|e| ParseError::new(format!("{path}/value"), e.into()))?;
    check_group(&rule.conditions, &format!("{path}/conditions"))
}

fn check_group(group: &ConditionGroup, path: &str) -> Result<(), ParseError> {
    if group.items.is_empty() {
        return Err(ParseError::new(
            format!("{path}/items"),
            ParseErrorKind::EmptyConditionGroup,
        ));
    }
    for (i, c) in group.items.iter().enumerate() {
        let path = format!("{path}/items/{i}");
        check_identifier(&c.source, &format!("{path}/source"))?;
        check_identifier(&c.name, &format!("{path}/name"))?;
        if !c.reference.is_finite() {
            return Err(ParseError::new(format!("{path}/ref"), ParseErrorKind::NonFiniteReal));
        }
    }
    Ok(())
}

fn check_identifier(s: &str, path: &str) -> Result<(), ParseError> {
    if s.is_empty() {
        Err(ParseError::new(path, ParseErrorKind::EmptyIdentifier))
    } else if s.contains('.') {
        Err(ParseError::new(path, ParseErrorKind::ReservedSeparator(s.to_owned())))
    } else {
        Ok(())
    }
}

/// Canonical serialization view of a [`RuleSet`].
///
/// Keys are emitted in a fixed order, reals always carry a fraction or
/// exponent and `disabled` only appears when true.
#[derive(Debug, Clone, Copy)]
pub struct Canonical<'a>(pub &'a RuleSet);

#[derive(Serialize)]
struct DocOut<'a> {
    version: u32,
    channels: PerChannel<ChannelOut<'a>>,
}

#[derive(Serialize)]
struct ChannelOut<'a> {
    default: &'a Scalar,
    rules: Vec<RuleOut<'a>>,
}

#[derive(Serialize)]
struct RuleOut<'a> {
    id: &'a str,
    priority: u32,
    value: &'a Scalar,
    conditions: GroupOut<'a>,
    #[serde(skip_serializing_if = "std::ops::Not::not")]
    disabled: bool,
}

#[derive(Serialize)]
pub(crate) struct GroupOut<'a> {
    mode: &'static str,
    items: Vec<CondOut<'a>>,
}

#[derive(Serialize)]
struct CondOut<'a> {
    source: &'a str,
    name: &'a str,
    kind: &'static str,
    op: &'static str,
    #[serde(rename = "ref")]
    reference: &'a Scalar,
}

impl<'a> GroupOut<'a> {
    pub(crate) fn new(g: &'a ConditionGroup) -> Self {
        GroupOut {
            mode: g.mode.token(),
            items: g
                .items
                .iter()
                .map(|c| CondOut {
                    source: &c.source,
                    name: &c.name,
                    kind: c.mode.token(),
                    op: c.op.token(),
                    reference: &c.reference,
                })
                .collect(),
        }
    }
}

impl Serialize for Canonical<'_> {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let rs = self.0;
        let doc = DocOut {
            version: rs.version,
            channels: PerChannel::from_fn(|k| ChannelOut {
                default: &rs.channels[k].default,
                rules: rs.channels[k]
                    .rules
                    .iter()
                    .map(|r| RuleOut {
                        id: &r.id,
                        priority: r.priority,
                        value: &r.value,
                        conditions: GroupOut::new(&r.conditions),
                        disabled: r.disabled,
                    })
                    .collect(),
            }),
        };
        doc.serialize(serializer)
    }
}

/// Serializes a ruleset to its canonical document bytes (pretty-printed,
/// two-space indent, trailing newline).
pub fn serialize_ruleset(rs: &RuleSet) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(&Canonical(rs)).expect("rule documents always serialize");
    out.push(b'\n');
    out
}
