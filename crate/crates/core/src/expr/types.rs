use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::schema::{LenRange, Range, SchemaDoc};

/// Static types of the expression language. Numeric ranges, string enums
/// and array length bounds of schemas are erased.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ExprType {
    /// Element type of the empty array literal; a subtype of everything.
    Never,
    Bool,
    Int,
    Num,
    Str,
    Arr(Box<ExprType>),
    Obj(BTreeMap<String, FieldType>),
    Union(Vec<ExprType>),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FieldType {
    pub ty: ExprType,
    pub optional: bool,
}

impl ExprType {
    pub fn arr(item: ExprType) -> Self {
        ExprType::Arr(Box::new(item))
    }

    pub fn obj<I, S>(fields: I) -> Self
    where
        I: IntoIterator<Item = (S, ExprType, bool)>,
        S: Into<String>,
    {
        ExprType::Obj(
            fields
                .into_iter()
                .map(|(k, ty, optional)| (k.into(), FieldType { ty, optional }))
                .collect(),
        )
    }

    pub fn is_numeric(&self) -> bool {
        matches!(self, ExprType::Int | ExprType::Num)
    }
}

impl fmt::Display for ExprType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExprType::Never => f.write_str("Never"),
            ExprType::Bool => f.write_str("Bool"),
            ExprType::Int => f.write_str("Int"),
            ExprType::Num => f.write_str("Num"),
            ExprType::Str => f.write_str("Str"),
            ExprType::Arr(t) => write!(f, "[{t}]"),
            ExprType::Obj(fields) => {
                f.write_str("{")?;
                for (i, (k, ft)) in fields.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    let q = if ft.optional { "?" } else { "" };
                    write!(f, "{k}{q}: {}", ft.ty)?;
                }
                f.write_str("}")
            }
            ExprType::Union(arms) => {
                for (i, a) in arms.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" | ")?;
                    }
                    write!(f, "{a}")?;
                }
                Ok(())
            }
        }
    }
}

pub fn schema_to_type(schema: &SchemaDoc) -> ExprType {
    match schema {
        SchemaDoc::Boolean => ExprType::Bool,
        SchemaDoc::Integer(_) => ExprType::Int,
        SchemaDoc::Number(_) => ExprType::Num,
        SchemaDoc::String(_) => ExprType::Str,
        SchemaDoc::Array { items, .. } => ExprType::arr(schema_to_type(items)),
        SchemaDoc::Object {
            properties,
            required,
        } => ExprType::Obj(
            properties
                .iter()
                .map(|(k, v)| {
                    (
                        k.clone(),
                        FieldType {
                            ty: schema_to_type(v),
                            optional: !required.contains(k),
                        },
                    )
                })
                .collect(),
        ),
        SchemaDoc::Union(arms) => normalize_union(arms.iter().map(schema_to_type).collect()),
    }
}

/// The unconstrained schema of a type. `Never` only occurs as the item
/// type of an empty array, which maps to an array of length zero.
pub fn type_to_schema(ty: &ExprType) -> SchemaDoc {
    match ty {
        ExprType::Never => SchemaDoc::empty_object(),
        ExprType::Bool => SchemaDoc::Boolean,
        ExprType::Int => SchemaDoc::Integer(Range::UNBOUNDED),
        ExprType::Num => SchemaDoc::Number(Range::UNBOUNDED),
        ExprType::Str => SchemaDoc::String(None),
        ExprType::Arr(item) if **item == ExprType::Never => SchemaDoc::Array {
            items: Box::new(SchemaDoc::empty_object()),
            len: LenRange {
                min: None,
                max: Some(0),
            },
        },
        ExprType::Arr(item) => SchemaDoc::array(type_to_schema(item)),
        ExprType::Obj(fields) => SchemaDoc::Object {
            properties: fields
                .iter()
                .map(|(k, f)| (k.clone(), type_to_schema(&f.ty)))
                .collect(),
            required: fields
                .iter()
                .filter(|(_, f)| !f.optional)
                .map(|(k, _)| k.clone())
                .collect(),
        },
        ExprType::Union(arms) => SchemaDoc::Union(arms.iter().map(type_to_schema).collect()),
    }
}

/// Type-level subtyping, mirroring schema subtyping with ranges erased.
pub fn is_subtype(a: &ExprType, b: &ExprType) -> bool {
    use ExprType::*;
    match (a, b) {
        (Never, _) => true,
        (Union(arms), _) => arms.iter().all(|x| is_subtype(x, b)),
        (_, Union(arms)) => arms.iter().any(|y| is_subtype(a, y)),
        (Bool, Bool) | (Int, Int) | (Int, Num) | (Num, Num) | (Str, Str) => true,
        (Arr(x), Arr(y)) => is_subtype(x, y),
        (Obj(fa), Obj(fb)) => {
            fa.iter().all(|(k, f)| {
                fb.get(k)
                    .is_some_and(|g| is_subtype(&f.ty, &g.ty) && (g.optional || !f.optional))
            }) && fb
                .iter()
                .all(|(k, g)| g.optional || fa.get(k).is_some_and(|f| !f.optional))
        }
        _ => false,
    }
}

/// Least common supertype without introducing a union.
pub fn unify(a: &ExprType, b: &ExprType) -> Option<ExprType> {
    use ExprType::*;
    if a == b {
        return Some(a.clone());
    }
    match (a, b) {
        (Never, t) | (t, Never) => Some(t.clone()),
        (Int, Num) | (Num, Int) => Some(Num),
        (Arr(x), Arr(y)) => unify(x, y).map(ExprType::arr),
        (Obj(fa), Obj(fb)) => {
            let keys: BTreeSet<&String> = fa.keys().chain(fb.keys()).collect();
            let mut out = BTreeMap::new();
            for k in keys {
                let field = match (fa.get(k), fb.get(k)) {
                    (Some(f), Some(g)) => FieldType {
                        ty: unify(&f.ty, &g.ty)?,
                        optional: f.optional || g.optional,
                    },
                    (Some(f), None) | (None, Some(f)) => FieldType {
                        ty: f.ty.clone(),
                        optional: true,
                    },
                    (None, None) => unreachable!("key came from one of the maps"),
                };
                out.insert(k.clone(), field);
            }
            Some(Obj(out))
        }
        _ => None,
    }
}

/// Least common supertype, falling back to a union.
pub fn join(a: &ExprType, b: &ExprType) -> ExprType {
    unify(a, b).unwrap_or_else(|| normalize_union(vec![a.clone(), b.clone()]))
}

/// Flatten nested unions and drop arms subsumed by another arm.
pub fn normalize_union(arms: Vec<ExprType>) -> ExprType {
    let mut flat: Vec<ExprType> = Vec::new();
    let mut stack = arms;
    stack.reverse();
    while let Some(t) = stack.pop() {
        match t {
            ExprType::Union(inner) => stack.extend(inner.into_iter().rev()),
            ExprType::Never => {}
            t if !flat.contains(&t) => flat.push(t),
            _ => {}
        }
    }
    let kept: Vec<ExprType> = flat
        .iter()
        .enumerate()
        .filter(|(i, t)| {
            !flat
                .iter()
                .enumerate()
                .any(|(j, u)| j != *i && is_subtype(t, u) && (!is_subtype(u, t) || j < *i))
        })
        .map(|(_, t)| t.clone())
        .collect();
    match kept.len() {
        0 => ExprType::Never,
        1 => kept.into_iter().next().expect("one arm"),
        _ => ExprType::Union(kept),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ExprType::*;

    #[test]
    fn schema_type_bijection_on_union_free_fragment() {
        let s = SchemaDoc::object_with(
            [
                ("a", SchemaDoc::integer()),
                ("b", SchemaDoc::array(SchemaDoc::string())),
                ("c", SchemaDoc::boolean()),
            ],
            ["a", "b"],
        );
        let t = schema_to_type(&s);
        assert_eq!(
            t,
            ExprType::obj([("a", Int, false), ("b", ExprType::arr(Str), false), ("c", Bool, true)])
        );
        assert_eq!(type_to_schema(&t), s);
        assert_eq!(schema_to_type(&type_to_schema(&t)), t);
    }

    #[test]
    fn ranges_are_erased() {
        assert_eq!(schema_to_type(&SchemaDoc::number_range(0.0, 1.0)), Num);
        assert_eq!(schema_to_type(&SchemaDoc::string_enum(["on", "off"])), Str);
    }

    #[test]
    fn int_widens_to_num_only() {
        assert!(is_subtype(&Int, &Num));
        assert!(!is_subtype(&Num, &Int));
        assert_eq!(unify(&Int, &Num), Some(Num));
    }

    #[test]
    fn optional_fields_in_subtyping() {
        let req = ExprType::obj([("a", Num, false)]);
        let opt = ExprType::obj([("a", Num, true)]);
        assert!(is_subtype(&req, &opt));
        assert!(!is_subtype(&opt, &req));
        assert!(is_subtype(&ExprType::obj::<[(&str, ExprType, bool); 0], &str>([]), &opt));
    }

    #[test]
    fn join_falls_back_to_union() {
        assert_eq!(join(&Bool, &Str), Union(vec![Bool, Str]));
        assert_eq!(join(&Int, &Num), Num);
        assert_eq!(normalize_union(vec![Int, Num, Union(vec![Int])]), Num);
        assert_eq!(join(&ExprType::arr(Never), &ExprType::arr(Int)), ExprType::arr(Int));
    }

    #[test]
    fn empty_array_schema_fits_any_array() {
        let s = type_to_schema(&ExprType::arr(Never));
        let c = SchemaDoc::array(SchemaDoc::number());
        assert!(crate::schema::is_subtype(&s, &c).unwrap().is_compatible());
    }
}
