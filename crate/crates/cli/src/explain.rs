//! Plain-text explanation of one resolved tick.

use std::fmt::Write;

use ddac_core::{ChannelKind, Outcome, ResolvedState, RuleSet};

use crate::style::Style;

pub fn render(rs: &RuleSet, state: &ResolvedState, channels: &[ChannelKind], style: Style) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{}", style.bold(&format!("tick {}", state.tick)));
    for &kind in channels {
        let ch = rs.channel(kind);
        let traces = &state.traces[kind];
        let winners = &state.winners[kind];
        let _ = writeln!(out, "\n{}", style.bold(&format!("[{kind}]")));
        for (rule, trace) in ch.rules.iter().zip(traces) {
            let status = if trace.disabled {
                style.dim("disabled")
            } else if !trace.matched {
                "not matched".to_owned()
            } else if trace.excluded_by_priority {
                style.yellow("matched, excluded by priority")
            } else {
                style.green("matched, winner")
            };
            let _ = writeln!(
                out,
                "  rule {} (priority {}, {}): {status}",
                rule.id,
                rule.priority,
                rule.conditions.mode.token()
            );
            for (cond, ct) in rule.conditions.items.iter().zip(&trace.conditions) {
                let observed = ct
                    .observed
                    .as_ref()
                    .map_or_else(|| "<missing>".to_owned(), |v| v.to_string());
                let outcome = match ct.outcome {
                    Outcome::Error(_) => style.red(&ct.outcome.to_string()),
                    _ => ct.outcome.to_string(),
                };
                let _ = writeln!(out, "    [{}] {cond}: observed {observed} -> {outcome}", ct.index);
            }
        }
        let candidates: Vec<String> = traces
            .iter()
            .filter(|t| t.matched)
            .map(|t| format!("{} (priority {})", t.id, t.priority))
            .collect();
        let top = traces.iter().filter(|t| t.matched).map(|t| t.priority).max();
        let value = state.value(kind);
        if candidates.is_empty() {
            let _ = writeln!(out, "  candidates: none");
            let _ = writeln!(out, "  max priority: -");
            let _ = writeln!(out, "  winners: default");
            let _ = writeln!(out, "  value: {value} (default)");
        } else {
            let _ = writeln!(out, "  candidates: {}", candidates.join(", "));
            let _ = writeln!(out, "  max priority: {}", top.unwrap_or_default());
            let _ = writeln!(out, "  winners: {}", style.green(&winners.join(", ")));
            let tie = if winners.len() > 1 {
                format!(" (last of {} tied winners)", winners.len())
            } else {
                String::new()
            };
            let _ = writeln!(out, "  value: {value}{tie}");
        }
    }
    out
}
