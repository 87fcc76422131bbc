//! Parsing of the `Action Input` payload into typed tool arguments.

use serde_json::{Map, Value};

use crate::domain::{FieldKind, ToolSpec};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ArgError {
    #[error("Action Input must be a JSON object with fields {0}")]
    NotAnObject(String),
    #[error("missing required field `{0}`")]
    Missing(String),
    #[error("field `{field}` must be {expected}")]
    WrongType { field: String, expected: &'static str },
}

/// Validated argument object for one tool call.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ToolArgs {
    fields: Map<String, Value>,
}

impl ToolArgs {
    pub fn from_map(fields: Map<String, Value>) -> Self {
        ToolArgs { fields }
    }

    /// Accepts a JSON object (trailing text after it is ignored). Tools with a
    /// single required string field also accept a bare or quoted string.
    pub fn parse(input: &str, spec: &ToolSpec) -> Result<ToolArgs, ArgError> {
        let text = strip_fences(input.trim());
        let first = serde_json::Deserializer::from_str(text)
            .into_iter::<Value>()
            .next()
            .and_then(Result::ok);
        let single_string = single_required_string(spec);
        let fields = match (first, single_string) {
            (Some(Value::Object(map)), _) => map,
            (Some(Value::String(s)), Some(field)) => Map::from_iter([(field.to_string(), Value::String(s))]),
            (None, Some(field)) if !text.is_empty() && !text.starts_with('{') => {
                let bare = text.trim_matches(|c| c == '\'' || c == '"').trim();
                Map::from_iter([(field.to_string(), Value::String(bare.to_string()))])
            }
            _ => {
                let names: Vec<&str> = spec.inputs.iter().map(|f| f.name.as_str()).collect();
                return Err(ArgError::NotAnObject(format!("[{}]", names.join(", "))));
            }
        };
        let args = ToolArgs { fields };
        for field in spec.inputs.iter().filter(|f| f.required) {
            match args.fields.get(&field.name) {
                None | Some(Value::Null) => return Err(ArgError::Missing(field.name.clone())),
                Some(_) => {}
            }
        }
        Ok(args)
    }

    pub fn raw(&self, name: &str) -> Option<&Value> {
        self.fields.get(name).filter(|v| !v.is_null())
    }

    pub fn str(&self, name: &str) -> Result<Option<String>, ArgError> {
        match self.raw(name) {
            None => Ok(None),
            Some(Value::String(s)) => Ok(Some(s.clone())),
            Some(Value::Number(n)) => Ok(Some(n.to_string())),
            Some(_) => Err(wrong(name, "a string")),
        }
    }

    pub fn req_str(&self, name: &str) -> Result<String, ArgError> {
        self.str(name)?.ok_or_else(|| ArgError::Missing(name.to_string()))
    }

    /// Numbers, or strings holding a number.
    pub fn number(&self, name: &str) -> Result<Option<f64>, ArgError> {
        match self.raw(name) {
            None => Ok(None),
            Some(Value::Number(n)) => n.as_f64().map(Some).ok_or_else(|| wrong(name, "a number")),
            Some(Value::String(s)) => s
                .trim()
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .map(Some)
                .ok_or_else(|| wrong(name, "a number")),
            Some(_) => Err(wrong(name, "a number")),
        }
    }

    pub fn req_number(&self, name: &str) -> Result<f64, ArgError> {
        self.number(name)?.ok_or_else(|| ArgError::Missing(name.to_string()))
    }

    pub fn integer(&self, name: &str) -> Result<Option<i64>, ArgError> {
        match self.number(name) {
            Ok(Some(v)) if v.fract() == 0.0 && v.abs() < 9.0e15 => Ok(Some(v as i64)),
            Ok(Some(_)) | Err(_) => Err(wrong(name, "an integer")),
            Ok(None) => Ok(None),
        }
    }

    pub fn req_integer(&self, name: &str) -> Result<i64, ArgError> {
        self.integer(name)?.ok_or_else(|| ArgError::Missing(name.to_string()))
    }

    /// `0`/`1`, booleans, or their string forms.
    pub fn flag(&self, name: &str) -> Result<Option<bool>, ArgError> {
        match self.raw(name) {
            None => Ok(None),
            Some(Value::Bool(b)) => Ok(Some(*b)),
            Some(Value::Number(n)) if n.as_f64() == Some(0.0) => Ok(Some(false)),
            Some(Value::Number(n)) if n.as_f64() == Some(1.0) => Ok(Some(true)),
            Some(Value::String(s)) => match s.trim().to_ascii_lowercase().as_str() {
                "0" | "false" => Ok(Some(false)),
                "1" | "true" => Ok(Some(true)),
                _ => Err(wrong(name, "0 or 1")),
            },
            Some(_) => Err(wrong(name, "0 or 1")),
        }
    }
}

fn wrong(field: &str, expected: &'static str) -> ArgError {
    ArgError::WrongType {
        field: field.to_string(),
        expected,
    }
}

fn single_required_string(spec: &ToolSpec) -> Option<&str> {
    let required: Vec<_> = spec.inputs.iter().filter(|f| f.required).collect();
    match required.as_slice() {
        [only] if only.kind == FieldKind::String => Some(only.name.as_str()),
        _ => None,
    }
}

fn strip_fences(text: &str) -> &str {
    let Some(rest) = text.strip_prefix("```") else {
        return text;
    };
    let rest = rest.strip_prefix("json").unwrap_or(rest);
    rest.strip_suffix("```").unwrap_or(rest).trim()
}
