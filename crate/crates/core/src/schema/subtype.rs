use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use super::{prop_path, LenRange, Range, SchemaDoc, SchemaError};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "result", rename_all = "kebab-case")]
pub enum Compat {
    Compatible,
    Incompatible { path: String, reason: String },
}

impl Compat {
    pub fn is_compatible(&self) -> bool {
        matches!(self, Compat::Compatible)
    }
}

/// Structural subtyping: `Compatible` guarantees every producer value is a
/// consumer value.
///
/// Exact on union-free schemas. A union consumer only accepts a producer
/// that fits one of its arms, so some sound pairs are rejected there.
pub fn is_subtype(producer: &SchemaDoc, consumer: &SchemaDoc) -> Result<Compat, SchemaError> {
    producer.check()?;
    consumer.check()?;
    Ok(match sub(producer, consumer, "") {
        Ok(()) => Compat::Compatible,
        Err((path, reason)) => Compat::Incompatible { path, reason },
    })
}

pub(crate) fn subtype_unchecked(producer: &SchemaDoc, consumer: &SchemaDoc) -> bool {
    sub(producer, consumer, "").is_ok()
}

type Mismatch = (String, String);

fn sub(p: &SchemaDoc, c: &SchemaDoc, path: &str) -> Result<(), Mismatch> {
    use SchemaDoc::*;
    let mismatch = |reason: std::string::String| Err((path.to_string(), reason));
    match (p, c) {
        (Union(arms), _) => arms.iter().try_for_each(|a| sub(a, c, path)),
        (_, Union(arms)) => {
            if arms.iter().any(|a| sub(p, a, path).is_ok()) {
                Ok(())
            } else {
                mismatch(format!("no union arm accepts {}", p.kind()))
            }
        }
        (Boolean, Boolean) => Ok(()),
        (Integer(pr), Integer(cr)) | (Integer(pr), Number(cr)) | (Number(pr), Number(cr)) => {
            if pr.within(cr) {
                Ok(())
            } else {
                mismatch("producer range exceeds consumer range".into())
            }
        }
        (String(pv), String(cv)) => match (pv, cv) {
            (_, None) => Ok(()),
            (Some(pv), Some(cv)) => match pv.iter().find(|s| !cv.contains(*s)) {
                None => Ok(()),
                Some(s) => mismatch(format!("\"{s}\" is not admitted by consumer")),
            },
            (None, Some(_)) => mismatch("unconstrained string into enum".into()),
        },
        (
            Array {
                items: pi,
                len: pl,
            },
            Array {
                items: ci,
                len: cl,
            },
        ) => {
            if !pl.within(cl) {
                return mismatch("producer length range exceeds consumer's".into());
            }
            if pl.max == Some(0) {
                // only [] is produced
                return Ok(());
            }
            sub(pi, ci, &format!("{path}[]"))
        }
        (
            Object {
                properties: pp,
                required: pr,
            },
            Object {
                properties: cp,
                required: cr,
            },
        ) => {
            if let Some(name) = cr.iter().find(|n| !pr.contains(*n)) {
                let reason = if pp.contains_key(name) {
                    "required by consumer but optional in producer"
                } else {
                    "required by consumer but never produced"
                };
                return Err((prop_path(path, name), reason.into()));
            }
            for (name, ps) in pp {
                match cp.get(name) {
                    None => {
                        return Err((
                            prop_path(path, name),
                            "produced but not declared by consumer".into(),
                        ))
                    }
                    Some(cs) => sub(ps, cs, &prop_path(path, name))?,
                }
            }
            Ok(())
        }
        _ => mismatch(format!("{} is not compatible with {}", p.kind(), c.kind())),
    }
}

/// Least common supertype when the two schemas are comparable.
pub fn join(a: &SchemaDoc, b: &SchemaDoc) -> Option<SchemaDoc> {
    if subtype_unchecked(a, b) {
        Some(b.clone())
    } else if subtype_unchecked(b, a) {
        Some(a.clone())
    } else {
        None
    }
}

/// The most permissive schema accepted by both `a` and `b`, or `None` when
/// they share no value.
pub fn meet(a: &SchemaDoc, b: &SchemaDoc) -> Option<SchemaDoc> {
    use SchemaDoc::*;
    if subtype_unchecked(a, b) {
        return Some(a.clone());
    }
    if subtype_unchecked(b, a) {
        return Some(b.clone());
    }
    match (a, b) {
        (Union(arms), other) | (other, Union(arms)) => {
            let mut parts: Vec<SchemaDoc> = arms.iter().filter_map(|x| meet(x, other)).collect();
            match parts.len() {
                0 => None,
                1 => parts.pop(),
                _ => Some(Union(parts)),
            }
        }
        (Boolean, Boolean) => Some(Boolean),
        (Integer(x), Integer(y)) | (Integer(x), Number(y)) | (Number(x), Integer(y)) => {
            let r = x.intersect(y);
            let r = Range::new(r.min.map(f64::ceil), r.max.map(f64::floor));
            (!r.is_empty()).then_some(Integer(r))
        }
        (Number(x), Number(y)) => {
            let r = x.intersect(y);
            (!r.is_empty()).then_some(Number(r))
        }
        (String(x), String(y)) => match (x, y) {
            (None, v) | (v, None) => Some(String(v.clone())),
            (Some(x), Some(y)) => {
                let both: BTreeSet<_> = x.intersection(y).cloned().collect();
                (!both.is_empty()).then_some(String(Some(both)))
            }
        },
        (
            Array {
                items: xi,
                len: xl,
            },
            Array {
                items: yi,
                len: yl,
            },
        ) => {
            let lo = xl.lo().max(yl.lo());
            let hi = match (xl.max, yl.max) {
                (Some(a), Some(b)) => Some(a.min(b)),
                (a, None) => a,
                (None, b) => b,
            };
            if hi.is_some_and(|h| lo > h) {
                return None;
            }
            let len = LenRange {
                min: (lo > 0).then_some(lo),
                max: hi,
            };
            match meet(xi, yi) {
                Some(items) => Some(Array {
                    items: Box::new(items),
                    len,
                }),
                None if lo == 0 => Some(Array {
                    items: xi.clone(),
                    len: LenRange {
                        min: None,
                        max: Some(0),
                    },
                }),
                None => None,
            }
        }
        (
            Object {
                properties: xp,
                required: xr,
            },
            Object {
                properties: yp,
                required: yr,
            },
        ) => {
            let required: BTreeSet<std::string::String> = xr.union(yr).cloned().collect();
            let mut properties = BTreeMap::new();
            for (name, xs) in xp {
                let Some(ys) = yp.get(name) else { continue };
                match meet(xs, ys) {
                    Some(s) => {
                        properties.insert(name.clone(), s);
                    }
                    None if required.contains(name) => return None,
                    None => {}
                }
            }
            if required.iter().any(|r| !properties.contains_key(r)) {
                return None;
            }
            Some(Object {
                properties,
                required,
            })
        }
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn compat(p: &SchemaDoc, c: &SchemaDoc) -> Compat {
        is_subtype(p, c).unwrap()
    }

    #[test]
    fn range_widening() {
        let p = SchemaDoc::number_range(0.0, 130000.0);
        assert!(compat(&p, &SchemaDoc::number()).is_compatible());
        assert!(!compat(&SchemaDoc::number(), &p).is_compatible());
    }

    #[test]
    fn accelerometer_cannot_feed_lux() {
        let accel = SchemaDoc::object([
            ("x", SchemaDoc::number()),
            ("y", SchemaDoc::number()),
            ("z", SchemaDoc::number()),
        ]);
        let lux = SchemaDoc::object([("lux", SchemaDoc::number())]);
        assert_eq!(
            compat(&accel, &lux),
            Compat::Incompatible {
                path: ".lux".into(),
                reason: "required by consumer but never produced".into()
            }
        );
    }

    #[test]
    fn enum_into_plain_string() {
        let p = SchemaDoc::string_enum(["on", "off"]);
        assert!(compat(&p, &SchemaDoc::string()).is_compatible());
        assert!(!compat(&SchemaDoc::string(), &p).is_compatible());
    }

    #[test]
    fn union_producer_all_arms() {
        let p = SchemaDoc::union(vec![
            SchemaDoc::integer_range(0, 5),
            SchemaDoc::integer_range(10, 20),
        ]);
        assert!(compat(&p, &SchemaDoc::integer_range(0, 20)).is_compatible());
        assert!(!compat(&p, &SchemaDoc::integer_range(0, 19)).is_compatible());
    }

    #[test]
    fn integer_widens_to_number_not_back() {
        assert!(compat(&SchemaDoc::integer_range(1, 3), &SchemaDoc::number_range(0.5, 3.5)).is_compatible());
        assert!(!compat(&SchemaDoc::number_range(1.0, 1.0), &SchemaDoc::integer()).is_compatible());
    }

    #[test]
    fn empty_arrays_ignore_items() {
        let p = SchemaDoc::array_len(SchemaDoc::string(), None, Some(0));
        let c = SchemaDoc::array(SchemaDoc::boolean());
        assert!(compat(&p, &c).is_compatible());
    }

    #[test]
    fn optional_producer_field_into_required() {
        let p = SchemaDoc::object_with([("a", SchemaDoc::boolean())], Vec::<String>::new());
        let c = SchemaDoc::object([("a", SchemaDoc::boolean())]);
        assert!(matches!(compat(&p, &c), Compat::Incompatible { path, .. } if path == ".a"));
        assert!(compat(&c, &p).is_compatible());
    }

    #[test]
    fn meet_of_ranges_and_conflict() {
        let m = meet(&SchemaDoc::number_range(0.0, 10.0), &SchemaDoc::integer_range(5, 20)).unwrap();
        assert_eq!(m, SchemaDoc::integer_range(5, 10));
        assert!(meet(&SchemaDoc::boolean(), &SchemaDoc::number()).is_none());
    }

    #[test]
    fn meet_of_objects_keeps_common_names() {
        let a = SchemaDoc::object_with(
            [("x", SchemaDoc::number()), ("y", SchemaDoc::number())],
            ["x"],
        );
        let b = SchemaDoc::object_with(
            [("x", SchemaDoc::integer()), ("z", SchemaDoc::number())],
            Vec::<String>::new(),
        );
        let m = meet(&a, &b).unwrap();
        assert_eq!(m, SchemaDoc::object([("x", SchemaDoc::integer())]));
    }

    #[test]
    fn join_requires_comparability() {
        let a = SchemaDoc::integer_range(0, 5);
        assert_eq!(join(&a, &SchemaDoc::number()), Some(SchemaDoc::number()));
        assert_eq!(join(&a, &SchemaDoc::boolean()), None);
    }
}
