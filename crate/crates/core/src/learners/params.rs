//! Typed access to a family's parameter block, with per-family defaults.

use serde_json::{json, Map, Value};

use super::Family;
use crate::error::{Error, Result};

pub(crate) struct ParamReader<'a> {
    family: Family,
    map: &'a Map<String, Value>,
}

impl<'a> ParamReader<'a> {
    pub(crate) fn new(family: Family, map: &'a Map<String, Value>, allowed: &[&str]) -> Result<Self> {
        if let Some(k) = map.keys().find(|k| !allowed.contains(&k.as_str())) {
            return Err(Error::field(
                format!("{}.{k}", family.name()),
                format!("unknown parameter; accepted: {}", allowed.join(", ")),
            ));
        }
        Ok(ParamReader { family, map })
    }

    fn err(&self, key: &str, msg: &str) -> Error {
        Error::field(format!("{}.{key}", self.family.name()), msg)
    }

    pub(crate) fn f64(&self, key: &str, default: f64) -> Result<f64> {
        match self.map.get(key) {
            None => Ok(default),
            Some(Value::Number(n)) => n
                .as_f64()
                .filter(|v| v.is_finite())
                .ok_or_else(|| self.err(key, "expected a finite number")),
            Some(_) => Err(self.err(key, "expected a number")),
        }
    }

    pub(crate) fn positive_f64(&self, key: &str, default: f64) -> Result<f64> {
        let v = self.f64(key, default)?;
        if v > 0.0 {
            Ok(v)
        } else {
            Err(self.err(key, "must be positive"))
        }
    }

    pub(crate) fn non_negative_f64(&self, key: &str, default: f64) -> Result<f64> {
        let v = self.f64(key, default)?;
        if v >= 0.0 {
            Ok(v)
        } else {
            Err(self.err(key, "must be non-negative"))
        }
    }

    pub(crate) fn required_f64(&self, key: &str) -> Result<f64> {
        if !self.map.contains_key(key) {
            return Err(Error::MissingField(format!("{}.{key}", self.family.name())));
        }
        self.f64(key, 0.0)
    }

    pub(crate) fn usize(&self, key: &str, default: usize) -> Result<usize> {
        match self.map.get(key) {
            None => Ok(default),
            Some(v) => as_usize(v).ok_or_else(|| self.err(key, "expected a non-negative integer")),
        }
    }

    pub(crate) fn required_usize(&self, key: &str) -> Result<usize> {
        if !self.map.contains_key(key) {
            return Err(Error::MissingField(format!("{}.{key}", self.family.name())));
        }
        self.usize(key, 0)
    }

    /// Integer, or unlimited when absent, `null` or `"none"`.
    pub(crate) fn opt_usize(&self, key: &str) -> Result<Option<usize>> {
        match self.map.get(key) {
            None | Some(Value::Null) => Ok(None),
            Some(Value::String(s)) if s.eq_ignore_ascii_case("none") => Ok(None),
            Some(v) => as_usize(v)
                .map(Some)
                .ok_or_else(|| self.err(key, "expected a non-negative integer or null")),
        }
    }

    pub(crate) fn bool(&self, key: &str, default: bool) -> Result<bool> {
        match self.map.get(key) {
            None => Ok(default),
            Some(Value::Bool(b)) => Ok(*b),
            Some(_) => Err(self.err(key, "expected true or false")),
        }
    }

    pub(crate) fn choice<T: Copy>(&self, key: &str, default: T, choices: &[(&str, T)]) -> Result<T> {
        match self.map.get(key) {
            None => Ok(default),
            Some(Value::String(s)) => choices
                .iter()
                .find(|(n, _)| n == s)
                .map(|(_, v)| *v)
                .ok_or_else(|| Error::InvalidEnum {
                    field: format!("{}.{key}", self.family.name()),
                    value: format!("\"{s}\""),
                    allowed: choices.iter().map(|(n, _)| n.to_string()).collect(),
                }),
            Some(_) => Err(self.err(key, "expected a string")),
        }
    }

    pub(crate) fn raw(&self, key: &str) -> Option<&'a Value> {
        self.map.get(key)
    }
}

fn as_usize(v: &Value) -> Option<usize> {
    match v {
        Value::Number(n) => n.as_u64().map(|u| u as usize).or_else(|| {
            n.as_f64()
                .filter(|f| f.fract() == 0.0 && *f >= 0.0)
                .map(|f| f as usize)
        }),
        _ => None,
    }
}

/// `hidden` accepts a width or a list of widths.
pub(crate) fn hidden_layers(reader: &ParamReader<'_>, default: &[usize]) -> Result<Vec<usize>> {
    let bad = || reader.err("hidden", "expected a positive width or a list of positive widths");
    let layers = match reader.raw("hidden") {
        None => default.to_vec(),
        Some(Value::Array(items)) => items.iter().map(|v| as_usize(v).ok_or_else(bad)).collect::<Result<Vec<_>>>()?,
        Some(v) => vec![as_usize(v).ok_or_else(bad)?],
    };
    if layers.contains(&0) {
        return Err(bad());
    }
    Ok(layers)
}

pub(crate) fn opt_json(v: Option<usize>) -> Value {
    v.map_or(Value::Null, |x| json!(x))
}
