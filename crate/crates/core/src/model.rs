//! Rule data model: conditions, groups, prioritized rules and the four output
//! channels they drive.

use std::fmt;
use std::ops::{Index, IndexMut};
use std::str::FromStr;

use serde::Serialize;

use crate::scalar::{Scalar, ValueKind};

/// Priority reserved for the implicit channel default.
pub const DEFAULT_PRIORITY: u32 = 0;

/// Document format version understood by this crate.
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ComparisonOp {
    Eq,
    Ne,
    Gt,
    Lt,
}

impl ComparisonOp {
    pub const ALL: [ComparisonOp; 4] = [ComparisonOp::Eq, ComparisonOp::Ne, ComparisonOp::Gt, ComparisonOp::Lt];

    pub fn token(self) -> &'static str {
        match self {
            ComparisonOp::Eq => "eq",
            ComparisonOp::Ne => "ne",
            ComparisonOp::Gt => "gt",
            ComparisonOp::Lt => "lt",
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            ComparisonOp::Eq => "==",
            ComparisonOp::Ne => "!=",
            ComparisonOp::Gt => ">",
            ComparisonOp::Lt => "<",
        }
    }

    /// Logical complement within the operator set. Only `Eq`/`Ne` have one;
    /// the complement of `Gt` would be "less or equal", which is not an operator.
    pub fn complement(self) -> Option<ComparisonOp> {
        match self {
            ComparisonOp::Eq => Some(ComparisonOp::Ne),
            ComparisonOp::Ne => Some(ComparisonOp::Eq),
            ComparisonOp::Gt | ComparisonOp::Lt => None,
        }
    }
}

impl FromStr for ComparisonOp {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        ComparisonOp::ALL.into_iter().find(|op| op.token() == s).ok_or(())
    }
}

/// How a condition reads its observed value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ValueMode {
    /// A plain variable on the source.
    Property,
    /// The output of a zero-argument function on the source.
    Function,
}

impl ValueMode {
    pub fn token(self) -> &'static str {
        match self {
            ValueMode::Property => "property",
            ValueMode::Function => "function",
        }
    }
}

impl FromStr for ValueMode {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        match s {
            "property" => Ok(ValueMode::Property),
            "function" => Ok(ValueMode::Function),
            _ => Err(()),
        }
    }
}

/// How the outcomes of a condition group are combined.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GroupMode {
    And,
    Or,
}

impl GroupMode {
    pub fn token(self) -> &'static str {
        match self {
            GroupMode::And => "and",
            GroupMode::Or => "or",
        }
    }
}

impl FromStr for GroupMode {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        match s {
            "and" => Ok(GroupMode::And),
            "or" => Ok(GroupMode::Or),
            _ => Err(()),
        }
    }
}

/// One comparison of an external variable against a reference value.
#[derive(Debug, Clone, PartialEq)]
pub struct Condition {
    pub source: String,
    pub name: String,
    pub mode: ValueMode,
    pub op: ComparisonOp,
    pub reference: Scalar,
}

impl Condition {
    pub fn property(source: &str, name: &str, op: ComparisonOp, reference: impl Into<Scalar>) -> Self {
        Condition {
            source: source.to_owned(),
            name: name.to_owned(),
            mode: ValueMode::Property,
            op,
            reference: reference.into(),
        }
    }

    pub fn function(source: &str, name: &str, op: ComparisonOp, reference: impl Into<Scalar>) -> Self {
        Condition {
            mode: ValueMode::Function,
            ..Condition::property(source, name, op, reference)
        }
    }

    /// The trace address of the variable this condition reads.
    pub fn address(&self) -> String {
        match self.mode {
            ValueMode::Property => format!("{}.{}", self.source, self.name),
            ValueMode::Function => format!("{}.{}()", self.source, self.name),
        }
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}", self.address(), self.op.symbol(), self.reference)
    }
}

/// A nonempty list of conditions combined with AND or OR.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionGroup {
    pub mode: GroupMode,
    pub items: Vec<Condition>,
}

impl ConditionGroup {
    pub fn all(items: Vec<Condition>) -> Self {
        ConditionGroup {
            mode: GroupMode::And,
            items,
        }
    }

    pub fn any(items: Vec<Condition>) -> Self {
        ConditionGroup {
            mode: GroupMode::Or,
            items,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Rule {
    pub id: String,
    /// Always at least 1; 0 belongs to the channel default.
    pub priority: u32,
    pub value: Scalar,
    pub conditions: ConditionGroup,
    /// Disabled rules stay in the document but never become candidates.
    pub disabled: bool,
}

impl Rule {
    pub fn new(id: &str, priority: u32, value: impl Into<Scalar>, conditions: ConditionGroup) -> Self {
        Rule {
            id: id.to_owned(),
            priority,
            value: value.into(),
            conditions,
            disabled: false,
        }
    }
}

/// The four visual outputs driven by rules.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ChannelKind {
    Animation,
    HFlip,
    VFlip,
    SpeedScale,
}

impl ChannelKind {
    /// Canonical order, used for serialization and iteration.
    pub const ALL: [ChannelKind; 4] = [
        ChannelKind::Animation,
        ChannelKind::HFlip,
        ChannelKind::VFlip,
        ChannelKind::SpeedScale,
    ];

    pub fn token(self) -> &'static str {
        match self {
            ChannelKind::Animation => "animation",
            ChannelKind::HFlip => "h_flip",
            ChannelKind::VFlip => "v_flip",
            ChannelKind::SpeedScale => "speed_scale",
        }
    }

    pub fn value_kind(self) -> ValueKind {
        match self {
            ChannelKind::Animation => ValueKind::Text,
            ChannelKind::HFlip | ChannelKind::VFlip => ValueKind::Bool,
            ChannelKind::SpeedScale => ValueKind::Real,
        }
    }

    /// Checks that `value` may be emitted on this channel: the variant must
    /// match, animation names must be nonempty and speed scales finite and
    /// strictly positive.
    pub fn check_value(self, value: &Scalar) -> Result<(), ChannelValueError> {
        if value.kind() != self.value_kind() {
            return Err(ChannelValueError::KindMismatch {
                channel: self,
                expected: self.value_kind(),
                found: value.kind(),
            });
        }
        match (self, value) {
            (ChannelKind::Animation, Scalar::Text(s)) if s.is_empty() => Err(ChannelValueError::EmptyAnimation),
            (ChannelKind::SpeedScale, Scalar::Real(r)) if !r.is_finite() => Err(ChannelValueError::NonFinite),
            (ChannelKind::SpeedScale, Scalar::Real(r)) if *r <= 0.0 => Err(ChannelValueError::NonPositiveSpeed),
            _ => Ok(()),
        }
    }
}

impl fmt::Display for ChannelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

impl Serialize for ChannelKind {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.token())
    }
}

impl FromStr for ChannelKind {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        ChannelKind::ALL.into_iter().find(|k| k.token() == s).ok_or(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ChannelValueError {
    #[error("value-kind mismatch: {channel} expects {expected}, found {found}")]
    KindMismatch {
        channel: ChannelKind,
        expected: ValueKind,
        found: ValueKind,
    },
    #[error("animation name must be nonempty")]
    EmptyAnimation,
    #[error("speed scale must be greater than zero")]
    NonPositiveSpeed,
    #[error("non-finite real")]
    NonFinite,
}

/// One value per channel, laid out in canonical channel order.
#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct PerChannel<T> {
    pub animation: T,
    pub h_flip: T,
    pub v_flip: T,
    pub speed_scale: T,
}

impl<T> PerChannel<T> {
    pub fn from_fn(mut f: impl FnMut(ChannelKind) -> T) -> Self {
        PerChannel {
            animation: f(ChannelKind::Animation),
            h_flip: f(ChannelKind::HFlip),
            v_flip: f(ChannelKind::VFlip),
            speed_scale: f(ChannelKind::SpeedScale),
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (ChannelKind, &T)> {
        ChannelKind::ALL.into_iter().map(move |k| (k, &self[k]))
    }

    pub fn map<U>(&self, mut f: impl FnMut(ChannelKind, &T) -> U) -> PerChannel<U> {
        PerChannel::from_fn(|k| f(k, &self[k]))
    }
}

impl<T> Index<ChannelKind> for PerChannel<T> {
    type Output = T;

    fn index(&self, kind: ChannelKind) -> &T {
        match kind {
            ChannelKind::Animation => &self.animation,
            ChannelKind::HFlip => &self.h_flip,
            ChannelKind::VFlip => &self.v_flip,
            ChannelKind::SpeedScale => &self.speed_scale,
        }
    }
}

impl<T> IndexMut<ChannelKind> for PerChannel<T> {
    fn index_mut(&mut self, kind: ChannelKind) -> &mut T {
        match kind {
            ChannelKind::Animation => &mut self.animation,
            ChannelKind::HFlip => &mut self.h_flip,
            ChannelKind::VFlip => &mut self.v_flip,
            ChannelKind::SpeedScale => &mut self.speed_scale,
        }
    }
}

/// A channel's fallback value plus its ordered rules.
///
/// The default behaves like a rule of priority [`DEFAULT_PRIORITY`] whose
/// condition is always true; it is stored as a bare value.
#[derive(Debug, Clone, PartialEq)]
pub struct Channel {
    pub kind: ChannelKind,
    pub default: Scalar,
    pub rules: Vec<Rule>,
}

impl Channel {
    pub fn new(kind: ChannelKind, default: impl Into<Scalar>) -> Self {
        Channel {
            kind,
            default: default.into(),
            rules: Vec::new(),
        }
    }

    pub fn with_rule(mut self, rule: Rule) -> Self {
        self.rules.push(rule);
        self
    }

    pub fn rule(&self, id: &str) -> Option<&Rule> {
        self.rules.iter().find(|r| r.id == id)
    }

    pub fn rule_mut(&mut self, id: &str) -> Option<&mut Rule> {
        self.rules.iter_mut().find(|r| r.id == id)
    }
}

/// A complete rule document: all four channels, each with a default.
#[derive(Debug, Clone, PartialEq)]
pub struct RuleSet {
    pub version: u32,
    pub channels: PerChannel<Channel>,
}

impl RuleSet {
    /// A ruleset with no rules and the given channel defaults.
    pub fn new(animation: &str, h_flip: bool, v_flip: bool, speed_scale: f64) -> Self {
        RuleSet {
            version: FORMAT_VERSION,
            channels: PerChannel {
                animation: Channel::new(ChannelKind::Animation, animation),
                h_flip: Channel::new(ChannelKind::HFlip, h_flip),
                v_flip: Channel::new(ChannelKind::VFlip, v_flip),
                speed_scale: Channel::new(ChannelKind::SpeedScale, speed_scale),
            },
        }
    }

    pub fn channel(&self, kind: ChannelKind) -> &Channel {
        &self.channels[kind]
    }

    pub fn channel_mut(&mut self, kind: ChannelKind) -> &mut Channel {
        &mut self.channels[kind]
    }

    pub fn with_rule(mut self, kind: ChannelKind, rule: Rule) -> Self {
        self.channels[kind].rules.push(rule);
        self
    }

    pub fn conditions(&self) -> impl Iterator<Item = (ChannelKind, &Rule, &Condition)> {
        self.channels.iter().flat_map(|(k, ch)| {
            ch.rules
                .iter()
                .flat_map(move |r| r.conditions.items.iter().map(move |c| (k, r, c)))
        })
    }
}
