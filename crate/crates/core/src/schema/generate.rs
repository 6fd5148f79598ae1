use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use thiserror::Error;

use super::{Range, SchemaDoc, SchemaError};

/// A named context for a datasource: per-field sub-ranges such as
/// "office lighting" for a light sensor's `lux`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValueProfile {
    pub name: String,
    /// Keyed by property path (`.lux`, `.a.b`; `""` is the root value).
    pub ranges: BTreeMap<String, ProfileRange>,
    #[serde(default)]
    pub description: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ProfileRange {
    Numeric { min: f64, max: f64 },
    Enum {
        #[serde(rename = "enum")]
        values: BTreeSet<String>,
    },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GenerateError {
    #[error(transparent)]
    Schema(#[from] SchemaError),
    #[error("profile `{profile}`: no field at path `{path}`")]
    UnknownPath { profile: String, path: String },
    #[error("profile `{profile}`: range at `{path}` does not apply to that field")]
    KindMismatch { profile: String, path: String },
    #[error("profile `{profile}`: empty value domain at `{path}`")]
    EmptyDomain { profile: String, path: String },
    #[error("profile `{profile}`: range at `{path}` is not contained in the schema range")]
    NotContained { profile: String, path: String },
}

impl ValueProfile {
    pub fn numeric(name: &str, description: &str, path: &str, min: f64, max: f64) -> Self {
        ValueProfile {
            name: name.into(),
            ranges: BTreeMap::from([(path.to_string(), ProfileRange::Numeric { min, max })]),
            description: description.into(),
        }
    }

    /// The schema with every profiled field intersected with its sub-range.
    pub fn narrow(&self, schema: &SchemaDoc) -> Result<SchemaDoc, GenerateError> {
        let mut out = schema.clone();
        for (path, range) in &self.ranges {
            let segments: Vec<&str> = path.split('.').filter(|s| !s.is_empty()).collect();
            out = self.narrow_at(&out, &segments, path, range)?;
        }
        Ok(out)
    }

    /// Strict membership: every sub-range must already lie inside the schema.
    pub fn check_contained(&self, schema: &SchemaDoc) -> Result<(), GenerateError> {
        for (path, range) in &self.ranges {
            let field = schema.at_path(path).ok_or_else(|| GenerateError::UnknownPath {
                profile: self.name.clone(),
                path: path.clone(),
            })?;
            let inside = match (field, range) {
                (SchemaDoc::Number(r), ProfileRange::Numeric { min, max })
                | (SchemaDoc::Integer(r), ProfileRange::Numeric { min, max }) => {
                    min <= max && Range::between(*min, *max).within(r)
                }
                (SchemaDoc::String(allowed), ProfileRange::Enum { values }) => {
                    !values.is_empty()
                        && allowed.as_ref().is_none_or(|a| values.is_subset(a))
                }
                _ => {
                    return Err(GenerateError::KindMismatch {
                        profile: self.name.clone(),
                        path: path.clone(),
                    })
                }
            };
            if !inside {
                return Err(GenerateError::NotContained {
                    profile: self.name.clone(),
                    path: path.clone(),
                });
            }
        }
        Ok(())
    }

    fn narrow_at(
        &self,
        schema: &SchemaDoc,
        segments: &[&str],
        path: &str,
        range: &ProfileRange,
    ) -> Result<SchemaDoc, GenerateError> {
        let empty = || GenerateError::EmptyDomain {
            profile: self.name.clone(),
            path: path.to_string(),
        };
        if let SchemaDoc::Union(arms) = schema {
            let narrowed: Vec<SchemaDoc> = arms
                .iter()
                .filter_map(|a| self.narrow_at(a, segments, path, range).ok())
                .collect();
            return match narrowed.len() {
                0 => Err(empty()),
                _ => Ok(SchemaDoc::Union(narrowed)),
            };
        }
        let Some((head, rest)) = segments.split_first() else {
            return match (schema, range) {
                (SchemaDoc::Number(r), ProfileRange::Numeric { min, max }) => {
                    let n = r.intersect(&Range::between(*min, *max));
                    if n.is_empty() {
                        Err(empty())
                    } else {
                        Ok(SchemaDoc::Number(n))
                    }
                }
                (SchemaDoc::Integer(r), ProfileRange::Numeric { min, max }) => {
                    let n = r.intersect(&Range::between(min.ceil(), max.floor()));
                    if n.is_empty() {
                        Err(empty())
                    } else {
                        Ok(SchemaDoc::Integer(n))
                    }
                }
                (SchemaDoc::String(allowed), ProfileRange::Enum { values }) => {
                    let n: BTreeSet<String> = match allowed {
                        None => values.clone(),
                        Some(a) => a.intersection(values).cloned().collect(),
                    };
                    if n.is_empty() {
                        Err(empty())
                    } else {
                        Ok(SchemaDoc::String(Some(n)))
                    }
                }
                _ => Err(GenerateError::KindMismatch {
                    profile: self.name.clone(),
                    path: path.to_string(),
                }),
            };
        };
        match schema {
            SchemaDoc::Object {
                properties,
                required,
            } => {
                let field = properties.get(*head).ok_or_else(|| GenerateError::UnknownPath {
                    profile: self.name.clone(),
                    path: path.to_string(),
                })?;
                let mut properties = properties.clone();
                properties.insert(
                    head.to_string(),
                    self.narrow_at(field, rest, path, range)?,
                );
                Ok(SchemaDoc::Object {
                    properties,
                    required: required.clone(),
                })
            }
            _ => Err(GenerateError::UnknownPath {
                profile: self.name.clone(),
                path: path.to_string(),
            }),
        }
    }
}

/// Draw a value conforming to `schema`, optionally restricted by `profile`.
///
/// Deterministic for a given RNG state.
pub fn generate_value<R: Rng + ?Sized>(
    schema: &SchemaDoc,
    profile: Option<&ValueProfile>,
    rng: &mut R,
) -> Result<Value, GenerateError> {
    schema.check()?;
    let narrowed;
    let target = match profile {
        Some(p) => {
            narrowed = p.narrow(schema)?;
            &narrowed
        }
        None => schema,
    };
    Ok(draw(target, rng))
}

const DEFAULT_SPAN: f64 = 1000.0;
const DEFAULT_MAX_EXTRA_LEN: u64 = 4;
const ALPHABET: &[u8] = b"abcdefghijklmnopqrstuvwxyz0123456789";

fn span(r: &Range) -> (f64, f64) {
    match (r.min, r.max) {
        (Some(a), Some(b)) => (a, b),
        (Some(a), None) => (a, a + 2.0 * DEFAULT_SPAN),
        (None, Some(b)) => (b - 2.0 * DEFAULT_SPAN, b),
        (None, None) => (-DEFAULT_SPAN, DEFAULT_SPAN),
    }
}

pub(crate) fn draw<R: Rng + ?Sized>(schema: &SchemaDoc, rng: &mut R) -> Value {
    match schema {
        SchemaDoc::Boolean => Value::Bool(rng.gen_bool(0.5)),
        SchemaDoc::Integer(r) => {
            let (lo, hi) = span(r);
            let (lo, hi) = (lo as i64, hi as i64);
            // Bias towards the bounds so edge cases show up often.
            let x = match rng.gen_range(0..10) {
                0 => lo,
                1 => hi,
                _ => rng.gen_range(lo..=hi),
            };
            Value::from(x)
        }
        SchemaDoc::Number(r) => {
            let (lo, hi) = span(r);
            let x = match rng.gen_range(0..10) {
                0 => lo,
                1 => hi,
                _ if lo == hi => lo,
                _ => rng.gen_range(lo..=hi),
            };
            Value::from(x)
        }
        SchemaDoc::String(Some(values)) => {
            let all: Vec<&String> = values.iter().collect();
            Value::from(all.choose(rng).expect("enum is non-empty").as_str())
        }
        SchemaDoc::String(None) => {
            let n = rng.gen_range(0..8);
            let s: String = (0..n)
                .map(|_| *ALPHABET.choose(rng).expect("alphabet") as char)
                .collect();
            Value::from(s)
        }
        SchemaDoc::Array { items, len } => {
            let lo = len.lo();
            let hi = len.max.unwrap_or(lo + DEFAULT_MAX_EXTRA_LEN);
            let n = rng.gen_range(lo..=hi);
            Value::Array((0..n).map(|_| draw(items, rng)).collect())
        }
        SchemaDoc::Object {
            properties,
            required,
        } => {
            let mut obj = Map::new();
            for (name, s) in properties {
                if required.contains(name) || rng.gen_bool(0.5) {
                    obj.insert(name.clone(), draw(s, rng));
                }
            }
            Value::Object(obj)
        }
        SchemaDoc::Union(arms) => draw(arms.choose(rng).expect("union is non-empty"), rng),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schema::conforms;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn light() -> SchemaDoc {
        SchemaDoc::object([
            ("ts", SchemaDoc::number()),
            ("lux", SchemaDoc::number_range(0.0, 130000.0)),
        ])
    }

    #[test]
    fn office_profile_stays_in_range() {
        let p = ValueProfile::numeric("office lighting", "", ".lux", 320.0, 500.0);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..500 {
            let v = generate_value(&light(), Some(&p), &mut rng).unwrap();
            let lux = v["lux"].as_f64().unwrap();
            assert!((320.0..=500.0).contains(&lux));
            assert!(conforms(&v, &light()));
        }
    }

    #[test]
    fn overcast_profile_centres_on_1000() {
        let p = ValueProfile::numeric("overcast day", "", ".lux", 800.0, 1200.0);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let v = generate_value(&light(), Some(&p), &mut rng).unwrap();
        assert!((800.0..=1200.0).contains(&v["lux"].as_f64().unwrap()));
    }

    #[test]
    fn same_seed_same_value() {
        let draw_once = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            generate_value(&SchemaDoc::boolean(), None, &mut rng).unwrap()
        };
        assert_eq!(draw_once(42), draw_once(42));
    }

    #[test]
    fn empty_intersection_is_an_error() {
        let p = ValueProfile::numeric("too bright", "", ".lux", 200000.0, 300000.0);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(matches!(
            generate_value(&light(), Some(&p), &mut rng),
            Err(GenerateError::EmptyDomain { .. })
        ));
        assert!(p.check_contained(&light()).is_err());
    }

    #[test]
    fn unknown_profile_path() {
        let p = ValueProfile::numeric("x", "", ".nope", 0.0, 1.0);
        assert!(matches!(
            p.narrow(&light()),
            Err(GenerateError::UnknownPath { .. })
        ));
    }

    #[test]
    fn root_profile_on_scalar_schema() {
        let p = ValueProfile::numeric("low", "", "", 0.0, 0.2);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let v = generate_value(&SchemaDoc::number_range(0.0, 1.0), Some(&p), &mut rng).unwrap();
        assert!(v.as_f64().unwrap() <= 0.2);
    }
}
