//! Data-driven animation control.
//!
//! Declarative, prioritized rules map externally observed variables onto
//! four visual outputs (animation name, horizontal flip, vertical flip and
//! speed scale). Every tick each channel collects the rules whose conditions
//! hold, keeps only those at the highest priority and takes its value from
//! them, falling back to the channel default when nothing matches.
//!
//! ```
//! use ddac_core::{parse_ruleset, resolve_tick, Blackboard, VarKey};
//!
//! let doc = br#"{"version":1,"channels":{
//!   "animation":{"default":"idle","rules":[{"id":"run","priority":1,"value":"run",
//!     "conditions":{"mode":"and","items":[
//!       {"source":"player","name":"direction","kind":"property","op":"ne","ref":0}]}}]},
//!   "h_flip":{"default":false,"rules":[]},
//!   "v_flip":{"default":false,"rules":[]},
//!   "speed_scale":{"default":1.0,"rules":[]}}}"#;
//! let rules = parse_ruleset(doc).unwrap();
//!
//! let mut bb = Blackboard::new();
//! bb.set_var(VarKey::property("player", "direction"), 1.into()).unwrap();
//! let state = resolve_tick(&rules, &bb.snapshot(0), None);
//! assert_eq!(state.animation, "run");
//! assert_eq!(state.winners.animation, ["run"]);
//! ```

pub mod blackboard;
pub mod document;
pub mod model;
pub mod oracle;
pub mod resolver;
pub mod scalar;
pub mod simulator;
pub mod validate;

pub use blackboard::{AddressError, Blackboard, NonFiniteValue, Snapshot, VarKey};
pub use document::{check_ruleset, parse_ruleset, serialize_ruleset, Canonical, ParseError, ParseErrorKind};
pub use model::{
    Channel, ChannelKind, ComparisonOp, Condition, ConditionGroup, GroupMode, PerChannel, Rule, RuleSet, ValueMode,
};
pub use oracle::oracle_resolve;
pub use resolver::{
    eval_condition, eval_group, resolve_channel, resolve_tick, ChannelResolution, CondTrace, ErrorReason, Outcome,
    ResolvedState, RuleTrace,
};
pub use scalar::{Scalar, ValueKind};
pub use simulator::{
    diff_timeline, run_trace, Divergence, LengthMismatch, Mismatch, TickEvent, Timeline, Trace, TraceError,
};
pub use validate::{validate_ruleset, Diagnostic, Finding, Severity};
