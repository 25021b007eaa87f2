//! Dynamically typed values flowing from the blackboard into conditions and
//! out of rule actions.

use std::fmt;

use serde::{Serialize, Serializer};
use serde_json::Value;

/// One of the four value kinds a [`Scalar`] can carry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ValueKind {
    Bool,
    Int,
    Real,
    Text,
}

impl fmt::Display for ValueKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ValueKind::Bool => "boolean",
            ValueKind::Int => "integer",
            ValueKind::Real => "real",
            ValueKind::Text => "text",
        })
    }
}

/// A dynamically typed value.
///
/// `Real` payloads must be finite. The variant itself cannot enforce that, so
/// every boundary that admits a scalar (document parsing, blackboard writes,
/// trace files) checks [`Scalar::is_finite`].
#[derive(Debug, Clone, PartialEq)]
pub enum Scalar {
    Bool(bool),
    Int(i64),
    Real(f64),
    Text(String),
}

impl Scalar {
    pub fn kind(&self) -> ValueKind {
        match self {
            Scalar::Bool(_) => ValueKind::Bool,
            Scalar::Int(_) => ValueKind::Int,
            Scalar::Real(_) => ValueKind::Real,
            Scalar::Text(_) => ValueKind::Text,
        }
    }

    /// False only for a non-finite `Real`.
    pub fn is_finite(&self) -> bool {
        match self {
            Scalar::Real(r) => r.is_finite(),
            _ => true,
        }
    }

    pub fn as_bool(&self) -> Option<bool> {
        match self {
            Scalar::Bool(b) => Some(*b),
            _ => None,
        }
    }

    pub fn as_real(&self) -> Option<f64> {
        match self {
            Scalar::Real(r) => Some(*r),
            _ => None,
        }
    }

    pub fn as_text(&self) -> Option<&str> {
        match self {
            Scalar::Text(s) => Some(s),
            _ => None,
        }
    }

    /// Converts a JSON value into a scalar.
    ///
    /// Numbers written with a fraction or exponent become `Real`, all others
    /// `Int`. Returns `None` for null, arrays, objects and integers outside
    /// the `i64` range.
    pub fn from_json(value: &Value) -> Option<Scalar> {
        match value {
            Value::Bool(b) => Some(Scalar::Bool(*b)),
            Value::String(s) => Some(Scalar::Text(s.clone())),
            Value::Number(n) => {
                if let Some(i) = n.as_i64() {
                    Some(Scalar::Int(i))
                } else if n.is_u64() {
                    None
                } else {
                    n.as_f64().map(Scalar::Real)
                }
            }
            _ => None,
        }
    }

    pub fn to_json(&self) -> Value {
        match self {
            Scalar::Bool(b) => Value::Bool(*b),
            Scalar::Int(i) => Value::from(*i),
            Scalar::Real(r) => serde_json::Number::from_f64(*r)
                .map(Value::Number)
                .unwrap_or(Value::Null),
            Scalar::Text(s) => Value::String(s.clone()),
        }
    }
}

impl Serialize for Scalar {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            Scalar::Bool(b) => serializer.serialize_bool(*b),
            Scalar::Int(i) => serializer.serialize_i64(*i),
            Scalar::Real(r) => serializer.serialize_f64(*r),
            Scalar::Text(s) => serializer.serialize_str(s),
        }
    }
}

/// Formats the way the value is written in a rule document.
impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match serde_json::to_string(self) {
            Ok(s) => f.write_str(&s),
            Err(_) => write!(f, "{self:?}"),
        }
    }
}

impl From<bool> for Scalar {
    fn from(b: bool) -> Self {
        Scalar::Bool(b)
    }
}

impl From<i64> for Scalar {
    fn from(i: i64) -> Self {
        Scalar::Int(i)
    }
}

impl From<i32> for Scalar {
    fn from(i: i32) -> Self {
        Scalar::Int(i64::from(i))
    }
}

impl From<f64> for Scalar {
    fn from(r: f64) -> Self {
        Scalar::Real(r)
    }
}

impl From<&str> for Scalar {
    fn from(s: &str) -> Self {
        Scalar::Text(s.to_owned())
    }
}

impl From<String> for Scalar {
    fn from(s: String) -> Self {
        Scalar::Text(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_numbers_keep_int_real_distinction() {
        let v: Value = serde_json::from_str("[1, 1.0, 1e3, -7, 2.5]").unwrap();
        let got: Vec<_> = v
            .as_array()
            .unwrap()
            .iter()
            .map(|x| Scalar::from_json(x).unwrap())
            .collect();
        assert_eq!(
            got,
            vec![
                Scalar::Int(1),
                Scalar::Real(1.0),
                Scalar::Real(1000.0),
                Scalar::Int(-7),
                Scalar::Real(2.5)
            ]
        );
    }

    #[test]
    fn out_of_range_and_structured_values_are_rejected() {
        for doc in ["null", "[1]", "{}", "18446744073709551615"] {
            let v: Value = serde_json::from_str(doc).unwrap();
            assert_eq!(Scalar::from_json(&v), None, "{doc}");
        }
    }

    #[test]
    fn reals_always_print_with_fraction_or_exponent() {
        assert_eq!(Scalar::Real(1.0).to_string(), "1.0");
        assert_eq!(Scalar::Int(1).to_string(), "1");
        assert_eq!(Scalar::Text("run".into()).to_string(), "\"run\"");
        let big = Scalar::Real(1e20).to_string();
        assert!(big.contains('e') || big.contains('.'), "{big}");
    }

    #[test]
    fn finiteness() {
        assert!(Scalar::Real(0.5).is_finite());
        assert!(!Scalar::Real(f64::NAN).is_finite());
        assert!(!Scalar::Real(f64::NEG_INFINITY).is_finite());
        assert!(Scalar::Text("x".into()).is_finite());
    }
}
