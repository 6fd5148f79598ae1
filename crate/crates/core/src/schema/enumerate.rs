use std::collections::BTreeSet;

use serde_json::{Map, Value};

use super::SchemaDoc;

#[derive(Debug, Clone, PartialEq)]
pub enum Enumeration {
    Values(Vec<Value>),
    TooLarge,
}

impl Enumeration {
    pub fn values(self) -> Option<Vec<Value>> {
        match self {
            Enumeration::Values(v) => Some(v),
            Enumeration::TooLarge => None,
        }
    }
}

/// Enumerate the whole value domain when it is finite and has at most
/// `budget` members.
pub fn enumerate_values(schema: &SchemaDoc, budget: usize) -> Enumeration {
    assert!(budget > 0, "enumeration budget must be positive");
    match enumerate(schema, budget) {
        Some(v) => Enumeration::Values(v),
        None => Enumeration::TooLarge,
    }
}

fn enumerate(schema: &SchemaDoc, budget: usize) -> Option<Vec<Value>> {
    match schema {
        SchemaDoc::Boolean => fits(vec![Value::Bool(true), Value::Bool(false)], budget),
        SchemaDoc::Integer(r) => {
            let (lo, hi) = (r.min? as i64, r.max? as i64);
            let n = (hi as i128 - lo as i128 + 1) as u128;
            if n > budget as u128 {
                return None;
            }
            Some((lo..=hi).map(Value::from).collect())
        }
        SchemaDoc::Number(r) => match (r.min, r.max) {
            (Some(a), Some(b)) if a == b => fits(vec![Value::from(a)], budget),
            _ => None,
        },
        SchemaDoc::String(values) => fits(
            values.as_ref()?.iter().map(|s| Value::from(s.as_str())).collect(),
            budget,
        ),
        SchemaDoc::Array { items, len } => {
            let hi = len.max?;
            let lo = len.lo();
            if hi == 0 {
                return fits(vec![Value::Array(vec![])], budget);
            }
            let domain = enumerate(items, budget)?;
            let mut total: u128 = 0;
            for n in lo..=hi {
                total = total.saturating_add((domain.len() as u128).saturating_pow(n as u32));
                if total > budget as u128 {
                    return None;
                }
            }
            let mut out = Vec::with_capacity(total as usize);
            for n in lo..=hi {
                product(&vec![domain.as_slice(); n as usize], &mut |picks| {
                    out.push(Value::Array(picks.to_vec()))
                });
            }
            Some(out)
        }
        SchemaDoc::Object {
            properties,
            required,
        } => {
            // `None` stands for an absent optional property.
            let mut choices: Vec<(&String, Vec<Option<Value>>)> = Vec::new();
            let mut total: u128 = 1;
            for (name, s) in properties {
                let mut opts: Vec<Option<Value>> = Vec::new();
                if !required.contains(name) {
                    opts.push(None);
                }
                opts.extend(enumerate(s, budget)?.into_iter().map(Some));
                total = total.saturating_mul(opts.len() as u128);
                if total > budget as u128 {
                    return None;
                }
                choices.push((name, opts));
            }
            let columns: Vec<&[Option<Value>]> = choices.iter().map(|(_, o)| o.as_slice()).collect();
            let mut out = Vec::with_capacity(total as usize);
            product(&columns, &mut |picks| {
                let mut obj = Map::new();
                for ((name, _), pick) in choices.iter().zip(picks) {
                    if let Some(v) = pick {
                        obj.insert((*name).clone(), v.clone());
                    }
                }
                out.push(Value::Object(obj));
            });
            Some(out)
        }
        SchemaDoc::Union(arms) => {
            let mut seen = BTreeSet::new();
            let mut out = Vec::new();
            for arm in arms {
                for v in enumerate(arm, budget)? {
                    if seen.insert(v.to_string()) {
                        out.push(v);
                    }
                }
                if out.len() > budget {
                    return None;
                }
            }
            Some(out)
        }
    }
}

fn fits(values: Vec<Value>, budget: usize) -> Option<Vec<Value>> {
    (values.len() <= budget).then_some(values)
}

/// Visit the cartesian product of `columns` in odometer order.
fn product<T: Clone>(columns: &[&[T]], visit: &mut dyn FnMut(&[T])) {
    if columns.iter().any(|c| c.is_empty()) {
        return;
    }
    let mut idx = vec![0usize; columns.len()];
    let mut picks: Vec<T> = columns.iter().map(|c| c[0].clone()).collect();
    loop {
        visit(&picks);
        let mut k = columns.len();
        loop {
            if k == 0 {
                return;
            }
            k -= 1;
            idx[k] += 1;
            if idx[k] < columns[k].len() {
                picks[k] = columns[k][idx[k]].clone();
                break;
            }
            idx[k] = 0;
            picks[k] = columns[k][0].clone();
        }
    }
}
