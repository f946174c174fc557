//! Output schema descriptors and payload validation.

use serde_json::{json, Map, Value};

#[derive(Debug, Clone, PartialEq)]
pub enum FieldType {
    String,
    Integer { min: Option<i64>, max: Option<i64> },
    Number { min: Option<f64>, max: Option<f64> },
    Bool,
    Enum(Vec<String>),
    IntEnum(Vec<i64>),
    List(Box<FieldType>),
    Object(Vec<Field>),
    /// String keys, uniformly typed values.
    Map(Box<FieldType>),
}

impl FieldType {
    pub fn int() -> Self {
        FieldType::Integer { min: None, max: None }
    }

    pub fn unit_interval() -> Self {
        FieldType::Number {
            min: Some(0.0),
            max: Some(1.0),
        }
    }

    pub fn list(of: FieldType) -> Self {
        FieldType::List(Box::new(of))
    }

    pub fn enumeration<S: AsRef<str>>(values: &[S]) -> Self {
        FieldType::Enum(values.iter().map(|s| s.as_ref().to_string()).collect())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    pub name: String,
    pub ty: FieldType,
    pub required: bool,
    pub description: Option<String>,
}

impl Field {
    pub fn new(name: &str, ty: FieldType) -> Self {
        Field {
            name: name.to_string(),
            ty,
            required: true,
            description: None,
        }
    }

    pub fn describe(mut self, d: &str) -> Self {
        self.description = Some(d.to_string());
        self
    }

    pub fn optional(mut self) -> Self {
        self.required = false;
        self
    }
}

/// Named object schema. The root is always an object.
#[derive(Debug, Clone, PartialEq)]
pub struct Schema {
    pub name: String,
    pub description: String,
    pub fields: Vec<Field>,
}

impl Schema {
    pub fn new(name: &str, description: &str, fields: Vec<Field>) -> Self {
        Schema {
            name: name.to_string(),
            description: description.to_string(),
            fields,
        }
    }

    pub fn to_json_schema(&self) -> Value {
        let mut v = object_schema(&self.fields);
        v["title"] = json!(self.name);
        if !self.description.is_empty() {
            v["description"] = json!(self.description);
        }
        v
    }

    /// A minimal payload that passes validation.
    pub fn default_payload(&self) -> Value {
        default_object(&self.fields)
    }
}

fn object_schema(fields: &[Field]) -> Value {
    let mut props = Map::new();
    let mut required = Vec::new();
    for f in fields {
        let mut p = type_schema(&f.ty);
        if let Some(d) = &f.description {
            p["description"] = json!(d);
        }
        props.insert(f.name.clone(), p);
        if f.required {
            required.push(json!(f.name));
        }
    }
    json!({"type": "object", "properties": props, "required": required})
}

fn type_schema(ty: &FieldType) -> Value {
    match ty {
        FieldType::String => json!({"type": "string"}),
        FieldType::Bool => json!({"type": "boolean"}),
        FieldType::Integer { min, max } => {
            let mut v = json!({"type": "integer"});
            if let Some(m) = min {
                v["minimum"] = json!(m);
            }
            if let Some(m) = max {
                v["maximum"] = json!(m);
            }
            v
        }
        FieldType::Number { min, max } => {
            let mut v = json!({"type": "number"});
            if let Some(m) = min {
                v["minimum"] = json!(m);
            }
            if let Some(m) = max {
                v["maximum"] = json!(m);
            }
            v
        }
        FieldType::Enum(values) => json!({"type": "string", "enum": values}),
        FieldType::IntEnum(values) => json!({"type": "integer", "enum": values}),
        FieldType::List(of) => json!({"type": "array", "items": type_schema(of)}),
        FieldType::Object(fields) => object_schema(fields),
        FieldType::Map(of) => json!({"type": "object", "additionalProperties": type_schema(of)}),
    }
}

fn default_object(fields: &[Field]) -> Value {
    let mut m = Map::new();
    for f in fields.iter().filter(|f| f.required) {
        m.insert(f.name.clone(), default_value(&f.ty));
    }
    Value::Object(m)
}

fn default_value(ty: &FieldType) -> Value {
    match ty {
        FieldType::String => json!(""),
        FieldType::Bool => json!(false),
        FieldType::Integer { min, .. } => json!(min.unwrap_or(0)),
        FieldType::Number { min, .. } => json!(min.unwrap_or(0.0)),
        FieldType::Enum(v) => json!(v.first().cloned().unwrap_or_default()),
        FieldType::IntEnum(v) => json!(v.first().copied().unwrap_or(0)),
        FieldType::List(_) => json!([]),
        FieldType::Object(fields) => default_object(fields),
        FieldType::Map(_) => json!({}),
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ValidationError {
    #[error("InvalidJson: {0}")]
    InvalidJson(String),
    #[error("MissingField: `{0}`")]
    MissingField(String),
    #[error("TypeMismatch at `{path}`: expected {expected}")]
    TypeMismatch { path: String, expected: &'static str },
    #[error("RangeViolation at `{path}`: {value} outside [{min}, {max}]")]
    RangeViolation {
        path: String,
        value: String,
        min: String,
        max: String,
    },
    #[error("EnumViolation at `{path}`: `{value}` not among {allowed:?}")]
    EnumViolation {
        path: String,
        value: String,
        allowed: Vec<String>,
    },
}

impl ValidationError {
    /// Short class name used in diagnostics and failure reports.
    pub fn class(&self) -> &'static str {
        match self {
            ValidationError::InvalidJson(_) => "InvalidJson",
            ValidationError::MissingField(_) => "MissingField",
            ValidationError::TypeMismatch { .. } => "TypeMismatch",
            ValidationError::RangeViolation { .. } => "RangeViolation",
            ValidationError::EnumViolation { .. } => "EnumViolation",
        }
    }
}

/// Strip a surrounding markdown code fence, which some providers add.
fn unfence(raw: &str) -> &str {
    let t = raw.trim();
    if let Some(rest) = t.strip_prefix("```") {
        let rest = rest.trim_start_matches(|c: char| c.is_ascii_alphanumeric());
        if let Some(body) = rest.trim_end().strip_suffix("```") {
            return body.trim();
        }
    }
    t
}

pub fn validate_payload(raw: &str, schema: &Schema) -> Result<Value, ValidationError> {
    let value: Value = serde_json::from_str(unfence(raw)).map_err(|e| ValidationError::InvalidJson(e.to_string()))?;
    validate_value(&value, schema)?;
    Ok(value)
}

pub fn validate_value(value: &Value, schema: &Schema) -> Result<(), ValidationError> {
    check_object(value, &schema.fields, "")
}

fn join(path: &str, name: &str) -> String {
    if path.is_empty() {
        name.to_string()
    } else {
        format!("{path}.{name}")
    }
}

fn mismatch(path: &str, expected: &'static str) -> ValidationError {
    ValidationError::TypeMismatch {
        path: if path.is_empty() { "$".into() } else { path.into() },
        expected,
    }
}

fn check_object(value: &Value, fields: &[Field], path: &str) -> Result<(), ValidationError> {
    let obj = value.as_object().ok_or_else(|| mismatch(path, "object"))?;
    for f in fields {
        let p = join(path, &f.name);
        match obj.get(&f.name) {
            None | Some(Value::Null) if f.required => return Err(ValidationError::MissingField(p)),
            None | Some(Value::Null) => {}
            Some(v) => check(v, &f.ty, &p)?,
        }
    }
    Ok(())
}

fn check(value: &Value, ty: &FieldType, path: &str) -> Result<(), ValidationError> {
    match ty {
        FieldType::String => {
            value.as_str().ok_or_else(|| mismatch(path, "string"))?;
        }
        FieldType::Bool => {
            value.as_bool().ok_or_else(|| mismatch(path, "boolean"))?;
        }
        FieldType::Integer { min, max } => {
            let v = as_integer(value).ok_or_else(|| mismatch(path, "integer"))?;
            if min.is_some_and(|m| v < m) || max.is_some_and(|m| v > m) {
                return Err(ValidationError::RangeViolation {
                    path: path.into(),
                    value: v.to_string(),
                    min: min.map_or("-inf".into(), |m| m.to_string()),
                    max: max.map_or("inf".into(), |m| m.to_string()),
                });
            }
        }
        FieldType::Number { min, max } => {
            let v = value.as_f64().filter(|v| v.is_finite()).ok_or_else(|| mismatch(path, "number"))?;
            if min.is_some_and(|m| v < m) || max.is_some_and(|m| v > m) {
                return Err(ValidationError::RangeViolation {
                    path: path.into(),
                    value: v.to_string(),
                    min: min.map_or("-inf".into(), |m| m.to_string()),
                    max: max.map_or("inf".into(), |m| m.to_string()),
                });
            }
        }
        FieldType::Enum(allowed) => {
            let s = value.as_str().ok_or_else(|| mismatch(path, "string"))?;
            if !allowed.iter().any(|a| a == s) {
                return Err(ValidationError::EnumViolation {
                    path: path.into(),
                    value: s.into(),
                    allowed: allowed.clone(),
                });
            }
        }
        FieldType::IntEnum(allowed) => {
            let v = as_integer(value).ok_or_else(|| mismatch(path, "integer"))?;
            if !allowed.contains(&v) {
                return Err(ValidationError::EnumViolation {
                    path: path.into(),
                    value: v.to_string(),
                    allowed: allowed.iter().map(|a| a.to_string()).collect(),
                });
            }
        }
        FieldType::List(of) => {
            let items = value.as_array().ok_or_else(|| mismatch(path, "array"))?;
            for (i, item) in items.iter().enumerate() {
                check(item, of, &format!("{path}[{i}]"))?;
            }
        }
        FieldType::Object(fields) => check_object(value, fields, path)?,
        FieldType::Map(of) => {
            let obj = value.as_object().ok_or_else(|| mismatch(path, "object"))?;
            for (k, v) in obj {
                check(v, of, &join(path, k))?;
            }
        }
    }
    Ok(())
}

/// Integers may arrive as `3` or `3.0`.
fn as_integer(v: &Value) -> Option<i64> {
    if let Some(i) = v.as_i64() {
        return Some(i);
    }
    v.as_f64().filter(|f| f.fract() == 0.0 && f.abs() < 9.0e15).map(|f| f as i64)
}
