use serde::Serialize;
use serde_json::Value;

use super::{prop_path, SchemaDoc, SchemaError};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub path: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Validation {
    pub valid: bool,
    pub violations: Vec<Violation>,
}

/// Validate `value` against `schema`, collecting the path of every violation.
pub fn validate_value(value: &Value, schema: &SchemaDoc) -> Result<Validation, SchemaError> {
    schema.check()?;
    let mut violations = Vec::new();
    collect(value, schema, "", &mut violations);
    Ok(Validation {
        valid: violations.is_empty(),
        violations,
    })
}

/// Fast yes/no conformance for schemas already known to be valid.
pub fn conforms(value: &Value, schema: &SchemaDoc) -> bool {
    match schema {
        SchemaDoc::Boolean => value.is_boolean(),
        SchemaDoc::Integer(r) => value.as_i64().is_some_and(|i| r.contains(i as f64)),
        SchemaDoc::Number(r) => value.as_f64().is_some_and(|x| r.contains(x)),
        SchemaDoc::String(values) => value
            .as_str()
            .is_some_and(|s| values.as_ref().is_none_or(|v| v.contains(s))),
        SchemaDoc::Array { items, len } => value.as_array().is_some_and(|a| {
            len.contains(a.len() as u64) && a.iter().all(|v| conforms(v, items))
        }),
        SchemaDoc::Object {
            properties,
            required,
        } => value.as_object().is_some_and(|o| {
            required.iter().all(|r| o.contains_key(r))
                && o.iter()
                    .all(|(k, v)| properties.get(k).is_some_and(|s| conforms(v, s)))
        }),
        SchemaDoc::Union(arms) => arms.iter().any(|a| conforms(value, a)),
    }
}

fn collect(value: &Value, schema: &SchemaDoc, path: &str, out: &mut Vec<Violation>) {
    let mut fail = |reason: String| {
        out.push(Violation {
            path: path.to_string(),
            reason,
        })
    };
    match schema {
        SchemaDoc::Boolean if !value.is_boolean() => fail("expected boolean".into()),
        SchemaDoc::Integer(r) => match value.as_i64() {
            None => fail("expected integer".into()),
            Some(i) if !r.contains(i as f64) => fail(format!("{i} is out of range")),
            _ => {}
        },
        SchemaDoc::Number(r) => match value.as_f64() {
            None => fail("expected number".into()),
            Some(x) if !r.contains(x) => fail(format!("{x} is out of range")),
            _ => {}
        },
        SchemaDoc::String(values) => match value.as_str() {
            None => fail("expected string".into()),
            Some(s) if values.as_ref().is_some_and(|v| !v.contains(s)) => {
                fail(format!("\"{s}\" is not an admitted value"))
            }
            _ => {}
        },
        SchemaDoc::Array { items, len } => match value.as_array() {
            None => fail("expected array".into()),
            Some(a) => {
                if !len.contains(a.len() as u64) {
                    fail(format!("length {} is out of range", a.len()));
                }
                for (i, v) in a.iter().enumerate() {
                    collect(v, items, &format!("{path}[{i}]"), out);
                }
            }
        },
        SchemaDoc::Object {
            properties,
            required,
        } => match value.as_object() {
            None => fail("expected object".into()),
            Some(o) => {
                for r in required.iter().filter(|r| !o.contains_key(*r)) {
                    out.push(Violation {
                        path: prop_path(path, r),
                        reason: "required property is missing".into(),
                    });
                }
                for (k, v) in o {
                    match properties.get(k) {
                        Some(s) => collect(v, s, &prop_path(path, k), out),
                        None => out.push(Violation {
                            path: prop_path(path, k),
                            reason: "property is not declared".into(),
                        }),
                    }
                }
            }
        },
        SchemaDoc::Union(arms) if !arms.iter().any(|a| conforms(value, a)) => {
            fail("no union arm admits the value".into())
        }
        _ => {}
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn lux_obj() -> SchemaDoc {
        SchemaDoc::object([("lux", SchemaDoc::number())])
    }

    #[test]
    fn office_lux_inside_sensor_range() {
        let s = SchemaDoc::number_range(0.0, 130000.0);
        assert!(validate_value(&json!(410), &s).unwrap().valid);
    }

    #[test]
    fn missing_required_property() {
        let v = validate_value(&json!({}), &lux_obj()).unwrap();
        assert!(!v.valid);
        assert_eq!(v.violations[0].path, ".lux");
    }

    #[test]
    fn closed_world_rejects_extras() {
        let v = validate_value(&json!({"lux": 50, "extra": 1}), &lux_obj()).unwrap();
        assert_eq!(
            v.violations.iter().map(|x| x.path.as_str()).collect::<Vec<_>>(),
            vec![".extra"]
        );
    }

    #[test]
    fn malformed_schema_is_an_error_not_false() {
        let bad = SchemaDoc::Union(vec![]);
        assert!(validate_value(&json!(1), &bad).is_err());
    }

    #[test]
    fn integer_excludes_floats() {
        assert!(!conforms(&json!(3.0), &SchemaDoc::integer()));
        assert!(conforms(&json!(3), &SchemaDoc::number()));
    }

    #[test]
    fn nested_paths() {
        let s = SchemaDoc::array(SchemaDoc::object([("a", SchemaDoc::boolean())]));
        let v = validate_value(&json!([{"a": true}, {"a": 1}]), &s).unwrap();
        assert_eq!(v.violations[0].path, "[1].a");
    }
}
