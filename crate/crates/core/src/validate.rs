//! Non-fatal diagnostics over a parsed ruleset.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use serde::Serialize;

use crate::model::{ChannelKind, RuleSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Info,
    Warn,
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Severity::Info => "INFO",
            Severity::Warn => "WARN",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "code", rename_all = "kebab-case")]
pub enum Finding {
    /// Several enabled rules share a priority; which one supplies the value
    /// depends on their order in the document.
    TieOrderDependent {
        channel: ChannelKind,
        priority: u32,
        rules: Vec<String>,
    },
    /// `rule` has the same conditions as `shadowed_by`, which has a higher
    /// priority, so `rule` can never win.
    Unreachable {
        channel: ChannelKind,
        rule: String,
        shadowed_by: String,
    },
    /// Only one condition in the whole document reads this variable, which
    /// is often a typo.
    SingleReference { source: String, name: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    pub severity: Severity,
    #[serde(flatten)]
    pub finding: Finding,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: ", self.severity)?;
        match &self.finding {
            Finding::TieOrderDependent {
                channel,
                priority,
                rules,
            } => write!(
                f,
                "tie-order-dependent: {channel} rules [{}] share priority {priority}; the last matching one in document order supplies the value",
                rules.join(", ")
            ),
            Finding::Unreachable {
                channel,
                rule,
                shadowed_by,
            } => write!(
                f,
                "unreachable: {channel} rule `{rule}` has the same conditions as higher-priority rule `{shadowed_by}`"
            ),
            Finding::SingleReference { source, name } => {
                write!(f, "single-reference: `{source}.{name}` is read by only one condition")
            }
        }
    }
}

/// Reports tie-order dependence, shadowed rules and singly referenced
/// variables. Disabled rules take no part in the first two checks.
pub fn validate_ruleset(rs: &RuleSet) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    for (kind, ch) in rs.channels.iter() {
        let mut by_priority: BTreeMap<u32, Vec<&str>> = BTreeMap::new();
        for r in ch.rules.iter().filter(|r| !r.disabled) {
            by_priority.entry(r.priority).or_default().push(&r.id);
        }
        for (priority, ids) in by_priority.into_iter().rev() {
            if ids.len() > 1 {
                out.push(Diagnostic {
                    severity: Severity::Warn,
                    finding: Finding::TieOrderDependent {
                        channel: kind,
                        priority,
                        rules: ids.into_iter().map(str::to_owned).collect(),
                    },
                });
            }
        }
        for r in ch.rules.iter().filter(|r| !r.disabled) {
            let shadow = ch
                .rules
                .iter()
                .filter(|o| !o.disabled && o.priority > r.priority && o.conditions == r.conditions)
                .max_by_key(|o| o.priority);
            if let Some(o) = shadow {
                out.push(Diagnostic {
                    severity: Severity::Warn,
                    finding: Finding::Unreachable {
                        channel: kind,
                        rule: r.id.clone(),
                        shadowed_by: o.id.clone(),
                    },
                });
            }
        }
    }

    let mut refs: HashMap<(&str, &str), usize> = HashMap::new();
    let mut order = Vec::new();
    for (_, _, c) in rs.conditions() {
        let n = refs.entry((&c.source, &c.name)).or_insert(0);
        if *n == 0 {
            order.push((c.source.as_str(), c.name.as_str()));
        }
        *n += 1;
    }
    for key in order {
        if refs[&key] == 1 {
            out.push(Diagnostic {
                severity: Severity::Info,
                finding: Finding::SingleReference {
                    source: key.0.to_owned(),
                    name: key.1.to_owned(),
                },
            });
        }
    }
    out
}
