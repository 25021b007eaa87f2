//! The single live session: ruleset, blackboard, tick counter and the last
//! resolved state. Every successful mutation bumps the revision; a failed
//! one leaves everything untouched.

use ddac_core::document::{check_rule, json_error, parse_channel_value, parse_condition_group, parse_priority};
use ddac_core::{
    parse_ruleset, resolve_tick, serialize_ruleset, Blackboard, Canonical, ChannelKind, ParseError, ResolvedState,
    RuleSet, Scalar, VarKey,
};
use serde::Serialize;
use serde_json::Value;

/// Upper bound on ticks advanced by one step request.
pub const MAX_STEP: i64 = 1_000_000;

/// Problem-detail error returned by every failing operation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ApiError {
    pub status: u16,
    pub code: String,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub location: Option<String>,
}

impl ApiError {
    pub fn new(status: u16, code: &str, message: impl Into<String>) -> Self {
        ApiError {
            status,
            code: code.to_owned(),
            message: message.into(),
            location: None,
        }
    }

    fn parse(status: u16, e: ParseError) -> Self {
        ApiError {
            status,
            code: e.kind.code().to_owned(),
            message: e.kind.to_string(),
            location: Some(e.location),
        }
    }
}

/// A change broadcast to event subscribers.
#[derive(Debug, Clone, PartialEq)]
pub struct Event {
    pub kind: &'static str,
    pub revision: u64,
    /// Complete `{"type","revision","payload"}` JSON object.
    pub json: String,
}

impl Event {
    fn new(kind: &'static str, revision: u64, payload: &impl Serialize) -> Self {
        #[derive(Serialize)]
        struct Wire<'a, P> {
            #[serde(rename = "type")]
            kind: &'static str,
            revision: u64,
            payload: &'a P,
        }
        let json = serde_json::to_string(&Wire {
            kind,
            revision,
            payload,
        })
        .expect("event payloads serialize");
        Event { kind, revision, json }
    }
}

#[derive(Debug, Clone)]
pub struct Session {
    ruleset: RuleSet,
    blackboard: Blackboard,
    tick: u64,
    last: Option<ResolvedState>,
    revision: u64,
}

impl Session {
    pub fn new(ruleset: RuleSet) -> Self {
        Session {
            ruleset,
            blackboard: Blackboard::new(),
            tick: 0,
            last: None,
            revision: 0,
        }
    }

    pub fn revision(&self) -> u64 {
        self.revision
    }

    pub fn tick(&self) -> u64 {
        self.tick
    }

    pub fn ruleset(&self) -> &RuleSet {
        &self.ruleset
    }

    pub fn blackboard(&self) -> &Blackboard {
        &self.blackboard
    }

    pub fn last(&self) -> Option<&ResolvedState> {
        self.last.as_ref()
    }

    /// Canonical document bytes of the current ruleset.
    pub fn ruleset_document(&self) -> Vec<u8> {
        serialize_ruleset(&self.ruleset)
    }

    /// Variables keyed by trace address.
    pub fn variables(&self) -> serde_json::Map<String, Value> {
        self.blackboard
            .iter()
            .map(|(k, v)| (k.to_string(), v.to_json()))
            .collect()
    }

    /// Snapshot of everything a new subscriber needs.
    pub fn sync_event(&self) -> Event {
        #[derive(Serialize)]
        struct Sync<'a> {
            ruleset: Canonical<'a>,
            variables: serde_json::Map<String, Value>,
            tick: u64,
            state: Option<&'a ResolvedState>,
        }
        Event::new(
            "sync",
            self.revision,
            &Sync {
                ruleset: Canonical(&self.ruleset),
                variables: self.variables(),
                tick: self.tick,
                state: self.last.as_ref(),
            },
        )
    }

    fn ruleset_event(&self) -> Event {
        Event::new("ruleset", self.revision, &Canonical(&self.ruleset))
    }

    /// Replaces the ruleset. The next step uses it; nothing is re-resolved now.
    pub fn put_ruleset(&mut self, document: &[u8]) -> Result<Event, ApiError> {
        let rs = parse_ruleset(document).map_err(|e| ApiError::parse(422, e))?;
        self.ruleset = rs;
        self.revision += 1;
        Ok(self.ruleset_event())
    }

    /// Edits one rule from a partial `{priority?, value?, conditions?, disabled?}` body.
    pub fn patch_rule(&mut self, channel: &str, id: &str, body: &[u8]) -> Result<Event, ApiError> {
        let kind: ChannelKind = channel
            .parse()
            .map_err(|_| ApiError::new(404, "unknown-channel", format!("no channel `{channel}`")))?;
        let ch = self.ruleset.channel(kind);
        let index = ch
            .rules
            .iter()
            .position(|r| r.id == id)
            .ok_or_else(|| ApiError::new(404, "unknown-rule", format!("no rule `{id}` in channel {kind}")))?;

        let patch: Value = serde_json::from_slice(body).map_err(|e| ApiError::parse(422, json_error(&e)))?;
        let fields = patch
            .as_object()
            .ok_or_else(|| ApiError::new(422, "wrong-type", "patch body must be a JSON object"))?;

        let mut rule = ch.rules[index].clone();
        for (key, v) in fields {
            let path = format!("/{key}");
            match key.as_str() {
                "priority" => rule.priority = parse_priority(v, &path).map_err(|e| ApiError::parse(422, e))?,
                "value" => rule.value = parse_channel_value(kind, v, &path).map_err(|e| ApiError::parse(422, e))?,
                "conditions" => {
                    rule.conditions = parse_condition_group(v, &path).map_err(|e| ApiError::parse(422, e))?
                }
                "disabled" => {
                    rule.disabled = v.as_bool().ok_or_else(|| {
                        let mut e = ApiError::new(422, "wrong-type", "expected boolean");
                        e.location = Some(path.clone());
                        e
                    })?
                }
                other => {
                    let mut e = ApiError::new(422, "unknown-field", format!("unknown field `{other}`"));
                    e.location = Some(path);
                    return Err(e);
                }
            }
        }
        check_rule(kind, &rule, "").map_err(|e| ApiError::parse(422, e))?;

        self.ruleset.channel_mut(kind).rules[index] = rule;
        self.revision += 1;
        Ok(self.ruleset_event())
    }

    /// Writes one blackboard variable from a JSON scalar body.
    pub fn set_variable(&mut self, address: &str, body: &[u8]) -> Result<Event, ApiError> {
        let key: VarKey = address
            .parse()
            .map_err(|e: ddac_core::AddressError| ApiError::new(400, "bad-address", e.to_string()))?;
        let v: Value = serde_json::from_slice(body).map_err(|e| {
            let pe = json_error(&e);
            ApiError::new(400, pe.kind.code(), pe.kind.to_string())
        })?;
        let value = Scalar::from_json(&v)
            .ok_or_else(|| ApiError::new(400, "wrong-type", "expected a boolean, integer, real or string"))?;
        self.blackboard
            .set_var(key.clone(), value.clone())
            .map_err(|e| ApiError::new(400, "non-finite-real", e.to_string()))?;
        self.revision += 1;
        #[derive(Serialize)]
        struct Payload<'a> {
            address: String,
            value: &'a Scalar,
        }
        Ok(Event::new(
            "variable",
            self.revision,
            &Payload {
                address: key.to_string(),
                value: &value,
            },
        ))
    }

    /// Advances `n` ticks and returns the final state.
    pub fn step(&mut self, n: i64) -> Result<Event, ApiError> {
        if n < 1 {
            return Err(ApiError::new(400, "invalid-step", "n must be at least 1"));
        }
        if n > MAX_STEP {
            return Err(ApiError::new(
                400,
                "invalid-step",
                format!("n must be at most {MAX_STEP}"),
            ));
        }
        for _ in 0..n {
            let snap = self.blackboard.snapshot(self.tick);
            let state = resolve_tick(&self.ruleset, &snap, self.last.as_ref());
            self.last = Some(state);
            self.tick += 1;
        }
        self.revision += 1;
        Ok(Event::new("state", self.revision, &self.last))
    }
}
