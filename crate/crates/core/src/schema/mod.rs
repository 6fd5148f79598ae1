//! Port data-type schemas.
//!
//! A [`SchemaDoc`] is a closed-world description of the values a port may
//! carry. The language is a small decidable subset of json-schema: numeric
//! ranges, string enums, bounded arrays, closed objects and unions. Every
//! valid schema has a non-empty value domain, which keeps subtyping exact on
//! the union-free fragment.

mod enumerate;
mod generate;
mod subtype;
mod validate;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use enumerate::{enumerate_values, Enumeration};
pub use generate::{generate_value, GenerateError, ProfileRange, ValueProfile};
pub use subtype::{is_subtype, join, meet, Compat};
pub use validate::{conforms, validate_value, Validation, Violation};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SchemaError {
    #[error("{path}: minimum exceeds maximum")]
    InvertedBounds { path: String },
    #[error("{path}: minLen exceeds maxLen")]
    InvertedLength { path: String },
    #[error("{path}: integer bound {bound} is not integral")]
    NonIntegralBound { path: String, bound: f64 },
    #[error("{path}: bound is not finite")]
    NonFiniteBound { path: String },
    #[error("{path}: required name `{name}` is not a declared property")]
    RequiredUndeclared { path: String, name: String },
    #[error("{path}: union has no arms")]
    EmptyUnion { path: String },
    #[error("{path}: string enum admits no values")]
    EmptyEnum { path: String },
    #[error("key `{key}` is not allowed on kind `{kind}`")]
    MisplacedKey { kind: String, key: &'static str },
    #[error("kind `{kind}` requires key `{key}`")]
    MissingKey { kind: String, key: &'static str },
    #[error("unknown kind `{0}`")]
    UnknownKind(String),
    #[error("{0}")]
    Json(String),
}

/// Inclusive numeric bounds; `None` is unbounded on that side.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Range {
    pub min: Option<f64>,
    pub max: Option<f64>,
}

impl Range {
    pub const UNBOUNDED: Range = Range { min: None, max: None };

    pub fn new(min: Option<f64>, max: Option<f64>) -> Self {
        Range { min, max }
    }

    pub fn between(min: f64, max: f64) -> Self {
        Range {
            min: Some(min),
            max: Some(max),
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        self.min.is_none_or(|m| x >= m) && self.max.is_none_or(|m| x <= m)
    }

    /// `self` lies entirely within `outer`.
    pub fn within(&self, outer: &Range) -> bool {
        let lo = match (outer.min, self.min) {
            (None, _) => true,
            (Some(_), None) => false,
            (Some(o), Some(s)) => s >= o,
        };
        let hi = match (outer.max, self.max) {
            (None, _) => true,
            (Some(_), None) => false,
            (Some(o), Some(s)) => s <= o,
        };
        lo && hi
    }

    pub fn intersect(&self, other: &Range) -> Range {
        Range {
            min: max_opt(self.min, other.min),
            max: min_opt(self.max, other.max),
        }
    }

    pub fn is_empty(&self) -> bool {
        matches!((self.min, self.max), (Some(a), Some(b)) if a > b)
    }

    pub fn hull(&self, other: &Range) -> Range {
        Range {
            min: self.min.zip(other.min).map(|(a, b)| a.min(b)),
            max: self.max.zip(other.max).map(|(a, b)| a.max(b)),
        }
    }
}

fn max_opt(a: Option<f64>, b: Option<f64>) -> Option<f64> {
    match (a, b) {
        (Some(a), Some(b)) => Some(a.max(b)),
        (a, None) => a,
        (None, b) => b,
    }
}

fn min_opt(a: Option<f64>, b: Option<f64>) -> Option<f64> {
    match (a, b) {
        (Some(a), Some(b)) => Some(a.min(b)),
        (a, None) => a,
        (None, b) => b,
    }
}

/// Inclusive array length bounds. A missing minimum means 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct LenRange {
    pub min: Option<u64>,
    pub max: Option<u64>,
}

impl LenRange {
    pub fn lo(&self) -> u64 {
        self.min.unwrap_or(0)
    }

    pub fn contains(&self, n: u64) -> bool {
        n >= self.lo() && self.max.is_none_or(|m| n <= m)
    }

    pub fn within(&self, outer: &LenRange) -> bool {
        self.lo() >= outer.lo()
            && match (outer.max, self.max) {
                (None, _) => true,
                (Some(_), None) => false,
                (Some(o), Some(s)) => s <= o,
            }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSchema", into = "RawSchema")]
pub enum SchemaDoc {
    Boolean,
    Integer(Range),
    Number(Range),
    /// `None` admits every string.
    String(Option<BTreeSet<String>>),
    Array {
        items: Box<SchemaDoc>,
        len: LenRange,
    },
    Object {
        properties: BTreeMap<String, SchemaDoc>,
        required: BTreeSet<String>,
    },
    Union(Vec<SchemaDoc>),
}

impl SchemaDoc {
    pub fn boolean() -> Self {
        SchemaDoc::Boolean
    }

    pub fn integer() -> Self {
        SchemaDoc::Integer(Range::UNBOUNDED)
    }

    pub fn integer_range(min: i64, max: i64) -> Self {
        SchemaDoc::Integer(Range::between(min as f64, max as f64))
    }

    pub fn number() -> Self {
        SchemaDoc::Number(Range::UNBOUNDED)
    }

    pub fn number_range(min: f64, max: f64) -> Self {
        SchemaDoc::Number(Range::between(min, max))
    }

    pub fn string() -> Self {
        SchemaDoc::String(None)
    }

    pub fn string_enum<I, S>(values: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        SchemaDoc::String(Some(values.into_iter().map(Into::into).collect()))
    }

    pub fn array(items: SchemaDoc) -> Self {
        SchemaDoc::Array {
            items: Box::new(items),
            len: LenRange::default(),
        }
    }

    pub fn array_len(items: SchemaDoc, min: Option<u64>, max: Option<u64>) -> Self {
        SchemaDoc::Array {
            items: Box::new(items),
            len: LenRange { min, max },
        }
    }

    /// Closed object where every listed property is required.
    pub fn object<I, S>(props: I) -> Self
    where
        I: IntoIterator<Item = (S, SchemaDoc)>,
        S: Into<String>,
    {
        let properties: BTreeMap<String, SchemaDoc> =
            props.into_iter().map(|(k, v)| (k.into(), v)).collect();
        let required = properties.keys().cloned().collect();
        SchemaDoc::Object {
            properties,
            required,
        }
    }

    /// Closed object with an explicit required set.
    pub fn object_with<I, S, R, T>(props: I, required: R) -> Self
    where
        I: IntoIterator<Item = (S, SchemaDoc)>,
        S: Into<String>,
        R: IntoIterator<Item = T>,
        T: Into<String>,
    {
        SchemaDoc::Object {
            properties: props.into_iter().map(|(k, v)| (k.into(), v)).collect(),
            required: required.into_iter().map(Into::into).collect(),
        }
    }

    pub fn empty_object() -> Self {
        SchemaDoc::Object {
            properties: BTreeMap::new(),
            required: BTreeSet::new(),
        }
    }

    pub fn union(arms: Vec<SchemaDoc>) -> Self {
        SchemaDoc::Union(arms)
    }

    pub fn kind(&self) -> &'static str {
        match self {
            SchemaDoc::Boolean => "boolean",
            SchemaDoc::Integer(_) => "integer",
            SchemaDoc::Number(_) => "number",
            SchemaDoc::String(_) => "string",
            SchemaDoc::Array { .. } => "array",
            SchemaDoc::Object { .. } => "object",
            SchemaDoc::Union(_) => "union",
        }
    }

    pub fn is_union_free(&self) -> bool {
        match self {
            SchemaDoc::Union(_) => false,
            SchemaDoc::Array { items, .. } => items.is_union_free(),
            SchemaDoc::Object { properties, .. } => properties.values().all(|s| s.is_union_free()),
            _ => true,
        }
    }

    /// Union arms, or the schema itself as a single arm.
    pub fn arms(&self) -> Vec<&SchemaDoc> {
        match self {
            SchemaDoc::Union(arms) => arms.iter().collect(),
            other => vec![other],
        }
    }

    /// Schema of a `.a.b` property path, if every segment names an object property.
    pub fn at_path(&self, path: &str) -> Option<&SchemaDoc> {
        let mut cur = self;
        for seg in path.split('.').filter(|s| !s.is_empty()) {
            match cur {
                SchemaDoc::Object { properties, .. } => cur = properties.get(seg)?,
                _ => return None,
            }
        }
        Some(cur)
    }

    /// Check every structural invariant of the document.
    pub fn check(&self) -> Result<(), SchemaError> {
        self.check_at("")
    }

    fn check_at(&self, path: &str) -> Result<(), SchemaError> {
        match self {
            SchemaDoc::Boolean => Ok(()),
            SchemaDoc::Integer(r) | SchemaDoc::Number(r) => {
                for b in [r.min, r.max].into_iter().flatten() {
                    if !b.is_finite() {
                        return Err(SchemaError::NonFiniteBound { path: path.into() });
                    }
                    if matches!(self, SchemaDoc::Integer(_)) && b.fract() != 0.0 {
                        return Err(SchemaError::NonIntegralBound {
                            path: path.into(),
                            bound: b,
                        });
                    }
                }
                if r.is_empty() {
                    return Err(SchemaError::InvertedBounds { path: path.into() });
                }
                Ok(())
            }
            SchemaDoc::String(Some(values)) if values.is_empty() => {
                Err(SchemaError::EmptyEnum { path: path.into() })
            }
            SchemaDoc::String(_) => Ok(()),
            SchemaDoc::Array { items, len } => {
                if let (Some(a), Some(b)) = (len.min, len.max) {
                    if a > b {
                        return Err(SchemaError::InvertedLength { path: path.into() });
                    }
                }
                items.check_at(&format!("{path}[]"))
            }
            SchemaDoc::Object {
                properties,
                required,
            } => {
                if let Some(name) = required.iter().find(|n| !properties.contains_key(*n)) {
                    return Err(SchemaError::RequiredUndeclared {
                        path: path.into(),
                        name: name.clone(),
                    });
                }
                properties
                    .iter()
                    .try_for_each(|(k, s)| s.check_at(&format!("{path}.{k}")))
            }
            SchemaDoc::Union(arms) => {
                if arms.is_empty() {
                    return Err(SchemaError::EmptyUnion { path: path.into() });
                }
                arms.iter().try_for_each(|a| a.check_at(path))
            }
        }
    }

    pub fn from_json(text: &str) -> Result<Self, SchemaError> {
        serde_json::from_str(text).map_err(|e| SchemaError::Json(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("schema serialization is infallible")
    }
}

impl fmt::Display for SchemaDoc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_json())
    }
}

/// Flat wire form of a schema document.
#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSchema {
    kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none", with = "bound")]
    min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none", with = "bound")]
    max: Option<f64>,
    #[serde(default, rename = "enum", skip_serializing_if = "Option::is_none")]
    values: Option<BTreeSet<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    items: Option<Box<SchemaDoc>>,
    #[serde(default, rename = "minLen", skip_serializing_if = "Option::is_none")]
    min_len: Option<u64>,
    #[serde(default, rename = "maxLen", skip_serializing_if = "Option::is_none")]
    max_len: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    properties: Option<BTreeMap<String, SchemaDoc>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    required: Option<BTreeSet<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    arms: Option<Vec<SchemaDoc>>,
}

mod bound {
    use serde::{Deserialize, Deserializer, Serializer};

    // Integral bounds print without a fraction so `0` stays `0`.
    pub fn serialize<S: Serializer>(v: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
        match v {
            Some(x) if x.fract() == 0.0 && x.abs() < 9.0e15 => s.serialize_i64(*x as i64),
            Some(x) => s.serialize_f64(*x),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<f64>, D::Error> {
        Option::<f64>::deserialize(d)
    }
}

impl RawSchema {
    fn forbid(&self, kind: &str, allowed: &[&'static str]) -> Result<(), SchemaError> {
        let present: [(&'static str, bool); 9] = [
            ("min", self.min.is_some()),
            ("max", self.max.is_some()),
            ("enum", self.values.is_some()),
            ("items", self.items.is_some()),
            ("minLen", self.min_len.is_some()),
            ("maxLen", self.max_len.is_some()),
            ("properties", self.properties.is_some()),
            ("required", self.required.is_some()),
            ("arms", self.arms.is_some()),
        ];
        match present
            .iter()
            .find(|(key, set)| *set && !allowed.contains(key))
        {
            Some((key, _)) => Err(SchemaError::MisplacedKey {
                kind: kind.to_string(),
                key,
            }),
            None => Ok(()),
        }
    }
}

impl TryFrom<RawSchema> for SchemaDoc {
    type Error = SchemaError;

    fn try_from(raw: RawSchema) -> Result<Self, Self::Error> {
        let kind = raw.kind.clone();
        let doc = match kind.as_str() {
            "boolean" => {
                raw.forbid(&kind, &[])?;
                SchemaDoc::Boolean
            }
            "integer" | "number" => {
                raw.forbid(&kind, &["min", "max"])?;
                let r = Range::new(raw.min, raw.max);
                if kind == "integer" {
                    SchemaDoc::Integer(r)
                } else {
                    SchemaDoc::Number(r)
                }
            }
            "string" => {
                raw.forbid(&kind, &["enum"])?;
                SchemaDoc::String(raw.values)
            }
            "array" => {
                raw.forbid(&kind, &["items", "minLen", "maxLen"])?;
                let items = raw.items.ok_or(SchemaError::MissingKey {
                    kind: kind.clone(),
                    key: "items",
                })?;
                SchemaDoc::Array {
                    items,
                    len: LenRange {
                        min: raw.min_len,
                        max: raw.max_len,
                    },
                }
            }
            "object" => {
                raw.forbid(&kind, &["properties", "required"])?;
                SchemaDoc::Object {
                    properties: raw.properties.unwrap_or_default(),
                    required: raw.required.unwrap_or_default(),
                }
            }
            "union" => {
                raw.forbid(&kind, &["arms"])?;
                SchemaDoc::Union(raw.arms.ok_or(SchemaError::MissingKey {
                    kind: kind.clone(),
                    key: "arms",
                })?)
            }
            other => return Err(SchemaError::UnknownKind(other.to_string())),
        };
        doc.check()?;
        Ok(doc)
    }
}

impl From<SchemaDoc> for RawSchema {
    fn from(doc: SchemaDoc) -> Self {
        let kind = doc.kind().to_string();
        match doc {
            SchemaDoc::Boolean => RawSchema {
                kind,
                ..Default::default()
            },
            SchemaDoc::Integer(r) | SchemaDoc::Number(r) => RawSchema {
                kind,
                min: r.min,
                max: r.max,
                ..Default::default()
            },
            SchemaDoc::String(values) => RawSchema {
                kind,
                values,
                ..Default::default()
            },
            SchemaDoc::Array { items, len } => RawSchema {
                kind,
                items: Some(items),
                min_len: len.min,
                max_len: len.max,
                ..Default::default()
            },
            SchemaDoc::Object {
                properties,
                required,
            } => RawSchema {
                kind,
                properties: Some(properties),
                required: (!required.is_empty()).then_some(required),
                ..Default::default()
            },
            SchemaDoc::Union(arms) => RawSchema {
                kind,
                arms: Some(arms),
                ..Default::default()
            },
        }
    }
}

/// Append an object-property segment to a violation path.
pub(crate) fn prop_path(base: &str, name: &str) -> String {
    format!("{base}.{name}")
}
