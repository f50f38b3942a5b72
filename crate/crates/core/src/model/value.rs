use serde::{Deserialize, Serialize};

use super::{DataType, Literal};

/// A concrete argument value: a scalar or a (possibly nested) container
/// literal.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "items", rename_all = "kebab-case")]
pub enum Value {
    Scalar(Literal),
    List(Vec<Value>),
    Tuple(Vec<Value>),
    Set(Vec<Value>),
    Dict(Vec<(Value, Value)>),
}

impl Value {
    pub fn int(i: i64) -> Value {
        Value::Scalar(Literal::Int(i))
    }

    pub fn float(x: f64) -> Value {
        Value::Scalar(Literal::Float(x))
    }

    pub fn str(s: &str) -> Value {
        Value::Scalar(Literal::Str(s.to_string()))
    }

    pub fn none() -> Value {
        Value::Scalar(Literal::None)
    }

    pub fn as_scalar(&self) -> Option<&Literal> {
        match self {
            Value::Scalar(l) => Some(l),
            _ => None,
        }
    }

    /// Elements of a sequence container (list or tuple).
    pub fn sequence_items(&self) -> Option<&[Value]> {
        match self {
            Value::List(v) | Value::Tuple(v) => Some(v),
            _ => None,
        }
    }

    /// Every scalar leaf, in order. Dict keys are not leaves.
    pub fn leaves(&self) -> Vec<&Literal> {
        let mut out = Vec::new();
        self.collect_leaves(&mut out);
        out
    }

    fn collect_leaves<'a>(&'a self, out: &mut Vec<&'a Literal>) {
        match self {
            Value::Scalar(l) => out.push(l),
            Value::List(v) | Value::Tuple(v) | Value::Set(v) => {
                v.iter().for_each(|x| x.collect_leaves(out))
            }
            Value::Dict(kv) => kv.iter().for_each(|(_, x)| x.collect_leaves(out)),
        }
    }

    /// Nesting depth of sequence containers: 0 for scalars, 1 for a flat
    /// list, 2 for a list of lists. `None` when siblings disagree.
    pub fn depth(&self) -> Option<usize> {
        match self {
            Value::Scalar(_) => Some(0),
            Value::Set(_) | Value::Dict(_) => Some(1),
            Value::List(v) | Value::Tuple(v) => {
                let mut child: Option<usize> = None;
                for x in v {
                    let d = x.depth()?;
                    match child {
                        None => child = Some(d),
                        Some(c) if c != d => return None,
                        _ => {}
                    }
                }
                Some(1 + child.unwrap_or(0))
            }
        }
    }

    /// Lengths along each nesting level when the value is rectangular.
    pub fn shape(&self) -> Option<Vec<usize>> {
        match self {
            Value::Scalar(_) => Some(Vec::new()),
            Value::Set(v) => Some(vec![v.len()]),
            Value::Dict(kv) => Some(vec![kv.len()]),
            Value::List(v) | Value::Tuple(v) => {
                let mut inner: Option<Vec<usize>> = None;
                for x in v {
                    let s = x.shape()?;
                    match &inner {
                        None => inner = Some(s),
                        Some(prev) if *prev != s => return None,
                        _ => {}
                    }
                }
                let mut out = vec![v.len()];
                out.extend(inner.unwrap_or_default());
                Some(out)
            }
        }
    }

    /// The common element type of the leaves: float if ints and floats mix.
    /// `None` when empty, heterogeneous, or containing `None`/opaque leaves.
    pub fn element_type(&self) -> Option<DataType> {
        let mut acc: Option<DataType> = None;
        for leaf in self.leaves() {
            let t = DataType::of(leaf)?;
            acc = Some(match (acc, t) {
                (None, t) => t,
                (Some(a), t) if a == t => a,
                (Some(DataType::Float), DataType::Integer)
                | (Some(DataType::Integer), DataType::Float) => DataType::Float,
                _ => return None,
            });
        }
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(rows: &[&[i64]]) -> Value {
        Value::List(
            rows.iter()
                .map(|r| Value::List(r.iter().map(|&i| Value::int(i)).collect()))
                .collect(),
        )
    }

    #[test]
    fn depth_and_shape() {
        let v = grid(&[&[0, 0], &[12, 3]]);
        assert_eq!(v.depth(), Some(2));
        assert_eq!(v.shape(), Some(vec![2, 2]));
        assert_eq!(v.element_type(), Some(DataType::Integer));
        let ragged = grid(&[&[1], &[1, 2]]);
        assert_eq!(ragged.shape(), None);
        assert_eq!(ragged.depth(), Some(2));
        assert_eq!(Value::int(3).depth(), Some(0));
        assert_eq!(Value::List(vec![]).shape(), Some(vec![0]));
    }

    #[test]
    fn mixed_numeric_is_float() {
        let v = Value::List(vec![Value::int(1), Value::float(2.5)]);
        assert_eq!(v.element_type(), Some(DataType::Float));
        let v = Value::List(vec![Value::int(1), Value::str("a")]);
        assert_eq!(v.element_type(), None);
    }
}
