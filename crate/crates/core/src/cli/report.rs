//! Flat key-value report documents.
//!
//! Keys are dotted paths, values are JSON scalars. Non-finite numbers are
//! stored as the strings `"NaN"`, `"inf"` and `"-inf"`.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde_json::Value;

use crate::grid::GridPoint;
use crate::mat::Mat2;
use crate::tolerance::Tolerances;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Envelope {
    entries: BTreeMap<String, Value>,
}

#[derive(Debug, thiserror::Error)]
pub enum EnvelopeError {
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error("report must be a flat object; `{0}` holds a nested value")]
    Nested(String),
    #[error("report must be a JSON object")]
    NotAnObject,
}

impl Envelope {
    pub fn new(command: &str) -> Envelope {
        let mut e = Envelope::default();
        e.text("command", command);
        e
    }

    pub fn set(&mut self, key: impl Into<String>, value: Value) {
        self.entries.insert(key.into(), value);
    }

    pub fn text(&mut self, key: impl Into<String>, value: impl Into<String>) {
        self.set(key, Value::String(value.into()));
    }

    pub fn flag(&mut self, key: impl Into<String>, value: bool) {
        self.set(key, Value::Bool(value));
    }

    pub fn int(&mut self, key: impl Into<String>, value: i64) {
        self.set(key, Value::from(value));
    }

    pub fn num(&mut self, key: impl Into<String>, value: f64) {
        let v = if value.is_finite() {
            Value::from(value)
        } else if value.is_nan() {
            Value::from("NaN")
        } else if value > 0.0 {
            Value::from("inf")
        } else {
            Value::from("-inf")
        };
        self.set(key, v);
    }

    pub fn opt_num(&mut self, key: impl Into<String>, value: Option<f64>) {
        match value {
            Some(v) => self.num(key, v),
            None => self.set(key, Value::Null),
        }
    }

    pub fn point(&mut self, prefix: &str, p: Option<GridPoint>) {
        match p {
            Some(p) => {
                self.int(format!("{prefix}.ix"), p.ix as i64);
                self.int(format!("{prefix}.iy"), p.iy as i64);
                self.num(format!("{prefix}.x"), p.x);
                self.num(format!("{prefix}.y"), p.y);
            }
            None => self.set(prefix, Value::Null),
        }
    }

    pub fn matrix(&mut self, prefix: &str, m: &Mat2<f64>) {
        for i in 0..2 {
            for j in 0..2 {
                self.num(format!("{prefix}.{}.{}", i + 1, j + 1), m.0[i][j]);
            }
        }
    }

    pub fn tolerances(&mut self, tol: &Tolerances) {
        for (name, v) in tol.entries() {
            self.num(format!("tolerance.{name}"), v);
        }
    }

    pub fn get(&self, key: &str) -> Option<&Value> {
        self.entries.get(key)
    }

    pub fn entries(&self) -> &BTreeMap<String, Value> {
        &self.entries
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.entries).expect("scalar map serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Envelope, EnvelopeError> {
        let Value::Object(map) = serde_json::from_str::<Value>(text)? else {
            return Err(EnvelopeError::NotAnObject);
        };
        let mut entries = BTreeMap::new();
        for (k, v) in map {
            if v.is_object() || v.is_array() {
                return Err(EnvelopeError::Nested(k));
            }
            entries.insert(k, v);
        }
        Ok(Envelope { entries })
    }

    /// One `key = value` line per entry; strings unquoted.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for (k, v) in &self.entries {
            match v {
                Value::String(t) => writeln!(s, "{k} = {t}"),
                other => writeln!(s, "{k} = {other}"),
            }
            .expect("writing to a string");
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trips() {
        let mut e = Envelope::new("check");
        e.num("a.value", 0.1 + 0.2);
        e.num("a.tiny", 3.0e-300);
        e.num("a.nan", f64::NAN);
        e.num("a.inf", f64::NEG_INFINITY);
        e.flag("ok", true);
        e.int("n", -3);
        e.opt_num("missing", None);
        e.text("expr", "exp(2*x) / \"q\"");
        e.matrix("g", &Mat2::new(1.0, 0.5, 0.5, 2.0));
        e.tolerances(&Tolerances::default());
        let back = Envelope::from_json(&e.to_json()).unwrap();
        assert_eq!(back, e);
        assert_eq!(back.get("a.value").unwrap().as_f64(), Some(0.1 + 0.2));
        assert_eq!(back.get("tolerance.skew").unwrap().as_f64(), Some(1e-8));
    }

    #[test]
    fn rejects_nested() {
        assert!(matches!(
            Envelope::from_json("{\"a\": {\"b\": 1}}"),
            Err(EnvelopeError::Nested(_))
        ));
        assert!(matches!(
            Envelope::from_json("[1]"),
            Err(EnvelopeError::NotAnObject)
        ));
    }

    #[test]
    fn text_form() {
        let mut e = Envelope::new("check");
        e.flag("ok", false);
        assert_eq!(e.to_text(), "command = check\nok = false\n");
    }
}
