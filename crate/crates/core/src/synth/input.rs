//! Constraint-guided argument synthesis.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;

use super::{GenConfig, SynthError};
use crate::model::{DataType, Dim, Literal, LiteralKind, ParamConstraint, ParamSpec, Structure, Value};
use crate::oracle::check_value;

/// What to pass for one parameter.
#[derive(Clone, Debug, PartialEq)]
pub enum SynthArg {
    /// Reuse an existing variable of the test.
    Var(String),
    /// A new literal (possibly reused from an earlier test).
    Fresh(Value),
    /// Leave the parameter out.
    Omit,
}

/// Chooses an argument for `param`.
///
/// Optional parameters are included with `p_include_optional`; an included
/// one takes its default with `p_use_default`, provided the constraint
/// accepts it. Otherwise a variable of the test whose value satisfies the
/// constraint is reused (latest first), then a satisfying value archived
/// from earlier tests (with `p_reuse_archive`), and failing both a fresh
/// value is generated. A constraint that says nothing about the value yields
/// a random primitive.
pub fn synth_input<R: Rng>(
    param: &ParamSpec,
    constraint: &ParamConstraint,
    pool: &[(String, Value)],
    archive: &[Value],
    rng: &mut R,
    cfg: &GenConfig,
) -> Result<SynthArg, SynthError> {
    if param.variadic {
        return Ok(SynthArg::Omit);
    }
    if !param.is_required {
        if !rng.gen_bool(cfg.p_include_optional) {
            return Ok(SynthArg::Omit);
        }
        // The mined default wins over the signature's; a default that the
        // constraint rejects is not used.
        let default = constraint.default_value.as_ref().map(|m| &m.value).or(param.declared_default.as_ref());
        if let Some(d) = default {
            if rng.gen_bool(cfg.p_use_default) {
                match d {
                    Literal::Opaque(_) => return Ok(SynthArg::Omit),
                    lit => {
                        let v = Value::Scalar(lit.clone());
                        if check_value(&v, constraint).is_ok() {
                            return Ok(SynthArg::Fresh(v));
                        }
                    }
                }
            }
        }
    }
    if constraint.describes_no_value() {
        return Ok(SynthArg::Fresh(random_primitive(rng, cfg)));
    }
    if let Some((var, _)) = pool.iter().rev().find(|(_, v)| check_value(v, constraint).is_ok()) {
        return Ok(SynthArg::Var(var.clone()));
    }
    if !archive.is_empty() && rng.gen_bool(cfg.p_reuse_archive) {
        if let Some(v) = archive.iter().rev().find(|v| check_value(v, constraint).is_ok()) {
            return Ok(SynthArg::Fresh(v.clone()));
        }
    }
    generate_value(constraint, rng, cfg).map(SynthArg::Fresh)
}

/// A random integer, float, string or boolean.
pub fn random_primitive<R: Rng>(rng: &mut R, cfg: &GenConfig) -> Value {
    let t = *[DataType::Integer, DataType::Float, DataType::String, DataType::Boolean]
        .choose(rng)
        .expect("nonempty");
    Value::Scalar(random_scalar(t, rng, cfg))
}

pub fn random_scalar<R: Rng>(t: DataType, rng: &mut R, cfg: &GenConfig) -> Literal {
    match t {
        DataType::Integer => Literal::Int(rng.gen_range(cfg.int_range.0..=cfg.int_range.1)),
        DataType::Float => {
            let x: f64 = rng.gen_range(cfg.float_range.0..=cfg.float_range.1);
            Literal::Float((x * 1e4).round() / 1e4)
        }
        DataType::String => {
            let alphabet: Vec<char> = cfg.string_alphabet.chars().collect();
            let len = rng.gen_range(1..=cfg.string_max_len);
            Literal::Str((0..len).map(|_| *alphabet.choose(rng).expect("nonempty alphabet")).collect())
        }
        DataType::Boolean => Literal::Bool(rng.gen_bool(0.5)),
    }
}

fn literal_kind(t: DataType) -> LiteralKind {
    match t {
        DataType::Integer => LiteralKind::Int,
        DataType::Float => LiteralKind::Float,
        DataType::String => LiteralKind::Str,
        DataType::Boolean => LiteralKind::Bool,
    }
}

fn contradiction(msg: impl Into<String>) -> SynthError {
    SynthError::Contradiction(msg.into())
}

/// Generates a value satisfying every defined field of `c`.
pub fn generate_value<R: Rng>(c: &ParamConstraint, rng: &mut R, cfg: &GenConfig) -> Result<Value, SynthError> {
    let allowed: Vec<&Literal> = c
        .allowed_values
        .iter()
        .flat_map(|m| &m.value)
        .filter(|l| !matches!(l, Literal::Opaque(_)))
        .collect();
    if c.allowed_values.is_some() && allowed.is_empty() {
        return Err(contradiction("allowed values contain no literal"));
    }
    let dtype = c.data_type.as_ref().map(|m| *m.value.choose(rng).expect("nonempty field"));

    if !allowed.is_empty() {
        // A generated value of an enumerated kind would have to be one of
        // the enumerated values anyway.
        let kind_clash = dtype.is_some_and(|t| allowed.iter().any(|a| a.kind() == literal_kind(t)));
        if dtype.is_none() || kind_clash || rng.gen_bool(0.5) {
            return Ok(Value::Scalar((*allowed.choose(rng).expect("nonempty")).clone()));
        }
    }

    let structures: Vec<Structure> = match &c.structure {
        Some(m) => m.value.iter().copied().filter(|s| *s != Structure::SparseMatrix).collect(),
        None if c.shape.is_none() && c.size.is_none() && c.dimension.is_none() => vec![Structure::Scalar],
        None => vec![Structure::ArrayLike],
    };
    if structures.is_empty() {
        return Err(contradiction("no literal form for a sparse matrix"));
    }
    let structure = *structures.choose(rng).expect("nonempty");
    let dims = pick_dims(c, structure, rng, cfg)?;
    let elem = dtype.unwrap_or_else(|| {
        match structure {
            Structure::ArrayLike => *[DataType::Integer, DataType::Float].choose(rng).expect("nonempty"),
            // Set members and dict keys must hash and stay distinct.
            Structure::Set => DataType::Integer,
            _ => *[DataType::Integer, DataType::Float, DataType::String, DataType::Boolean]
                .choose(rng)
                .expect("nonempty"),
        }
    });
    build(structure, &dims, elem, rng, cfg)
}

/// Concrete lengths per nesting level (empty for scalars).
fn pick_dims<R: Rng>(
    c: &ParamConstraint,
    structure: Structure,
    rng: &mut R,
    cfg: &GenConfig,
) -> Result<Vec<usize>, SynthError> {
    let dimension = c.dimension.as_ref().map(|m| m.value as usize);
    let size = c.size.as_ref().map(|m| m.value as usize);
    if structure == Structure::Scalar {
        if dimension.is_some() || c.shape.is_some() || size.is_some() {
            return Err(contradiction("scalar structure with a dimension, shape or size"));
        }
        return Ok(Vec::new());
    }
    let flat_only = matches!(structure, Structure::Set | Structure::Dict);
    let mut dims = match &c.shape {
        Some(m) => {
            let fitting: Vec<_> = m
                .value
                .iter()
                .filter(|s| dimension.is_none_or(|d| s.rank() == d))
                .filter(|s| match (s.dims.first(), size) {
                    (Some(Dim::Fixed(n)), Some(k)) => *n as usize == k,
                    _ => true,
                })
                .collect();
            let Some(shape) = fitting.choose(rng) else {
                return Err(contradiction("no shape agrees with the dimension and size"));
            };
            let mut bound: BTreeMap<&str, usize> = BTreeMap::new();
            if let (Some(Dim::Symbol(s)), Some(k)) = (shape.dims.first(), size) {
                bound.insert(s, k);
            }
            shape
                .dims
                .iter()
                .map(|d| match d {
                    Dim::Fixed(n) => *n as usize,
                    Dim::Symbol(s) => *bound
                        .entry(s)
                        .or_insert_with(|| rng.gen_range(cfg.dim_range.0..=cfg.dim_range.1)),
                })
                .collect()
        }
        None => {
            let rank = match (dimension, structure) {
                (Some(d), _) => d,
                (None, Structure::ArrayLike) => rng.gen_range(1..=2),
                (None, _) => 1,
            };
            (0..rank)
                .map(|_| rng.gen_range(cfg.dim_range.0..=cfg.dim_range.1))
                .collect::<Vec<_>>()
        }
    };
    if let Some(k) = size {
        if let Some(first) = dims.first_mut() {
            *first = k;
        }
    }
    if dims.is_empty() {
        return Err(contradiction("container with no dimensions"));
    }
    if flat_only && dims.len() > 1 {
        return Err(contradiction(format!("{structure} cannot have {} dimensions", dims.len())));
    }
    Ok(dims)
}

fn build<R: Rng>(
    structure: Structure,
    dims: &[usize],
    elem: DataType,
    rng: &mut R,
    cfg: &GenConfig,
) -> Result<Value, SynthError> {
    match structure {
        Structure::Scalar => Ok(Value::Scalar(random_scalar(elem, rng, cfg))),
        Structure::Set => {
            let items = distinct_scalars(dims[0], elem, rng, cfg)?;
            Ok(Value::Set(items.into_iter().map(Value::Scalar).collect()))
        }
        Structure::Dict => {
            let keys = distinct_scalars(dims[0], DataType::String, rng, cfg)?;
            Ok(Value::Dict(
                keys.into_iter()
                    .map(|k| (Value::Scalar(k), Value::Scalar(random_scalar(elem, rng, cfg))))
                    .collect(),
            ))
        }
        Structure::Tuple => {
            let items = (0..dims[0]).map(|_| nested(&dims[1..], elem, rng, cfg)).collect();
            Ok(Value::Tuple(items))
        }
        Structure::ArrayLike | Structure::List | Structure::Sequence | Structure::SparseMatrix => {
            Ok(nested(dims, elem, rng, cfg))
        }
    }
}

fn nested<R: Rng>(dims: &[usize], elem: DataType, rng: &mut R, cfg: &GenConfig) -> Value {
    match dims.split_first() {
        None => Value::Scalar(random_scalar(elem, rng, cfg)),
        Some((n, rest)) => Value::List((0..*n).map(|_| nested(rest, elem, rng, cfg)).collect()),
    }
}

fn distinct_scalars<R: Rng>(n: usize, t: DataType, rng: &mut R, cfg: &GenConfig) -> Result<Vec<Literal>, SynthError> {
    let mut out: Vec<Literal> = Vec::with_capacity(n);
    let mut tries = 0;
    while out.len() < n {
        let x = random_scalar(t, rng, cfg);
        if !out.contains(&x) {
            out.push(x);
        }
        tries += 1;
        if tries > 100 * (n + 1) {
            return Err(contradiction(format!("cannot draw {n} distinct {t} values")));
        }
    }
    Ok(out)
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::model::{Mined, Provenance, ShapeSpec};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn m<T>(v: T) -> Option<Mined<T>> {
        Some(Mined::new(v, Provenance::ParametricPage))
    }

    pub(crate) fn fit_x() -> ParamConstraint {
        ParamConstraint {
            structure: m(vec![Structure::ArrayLike]),
            data_type: m(vec![DataType::Integer]),
            dimension: m(2),
            shape: m(vec![ShapeSpec::parse("(n, n)").unwrap()]),
            optional: m(false),
            ..ParamConstraint::default()
        }
    }

    #[test]
    fn square_integer_matrix() {
        let cfg = GenConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let v = generate_value(&fit_x(), &mut rng, &cfg).unwrap();
            let shape = v.shape().unwrap();
            assert_eq!(shape.len(), 2);
            assert_eq!(shape[0], shape[1]);
            assert_eq!(v.element_type(), Some(DataType::Integer));
            assert!(check_value(&v, &fit_x()).is_ok());
        }
    }

    #[test]
    fn undefined_gives_primitive_and_enumerations_pick_members() {
        let cfg = GenConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let p = ParamSpec::required("x", 0);
        for _ in 0..20 {
            match synth_input(&p, &ParamConstraint::default(), &[], &[], &mut rng, &cfg).unwrap() {
                SynthArg::Fresh(Value::Scalar(l)) => assert!(DataType::of(&l).is_some()),
                other => panic!("{other:?}"),
            }
        }
        let e = ParamConstraint {
            allowed_values: m(vec![Literal::Str("text".into()), Literal::Str("diagram".into())]),
            ..ParamConstraint::default()
        };
        for _ in 0..20 {
            let v = generate_value(&e, &mut rng, &cfg).unwrap();
            assert!(matches!(v.as_scalar(), Some(Literal::Str(s)) if s == "text" || s == "diagram"));
        }
    }

    #[test]
    fn pool_reuse_prefers_latest_match() {
        let cfg = GenConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let grid = Value::List(vec![
            Value::List(vec![Value::int(1), Value::int(2)]),
            Value::List(vec![Value::int(3), Value::int(4)]),
        ]);
        let pool = vec![
            ("a".to_string(), grid.clone()),
            ("b".to_string(), Value::str("no")),
            ("c".to_string(), grid),
        ];
        let p = ParamSpec::required("X", 0);
        assert_eq!(
            synth_input(&p, &fit_x(), &pool, &[], &mut rng, &cfg).unwrap(),
            SynthArg::Var("c".into())
        );
    }

    #[test]
    fn contradictions_are_named() {
        let cfg = GenConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let c = ParamConstraint {
            dimension: m(1),
            shape: m(vec![ShapeSpec::parse("(n, m)").unwrap()]),
            ..ParamConstraint::default()
        };
        assert!(matches!(generate_value(&c, &mut rng, &cfg), Err(SynthError::Contradiction(_))));
        let c = ParamConstraint {
            structure: m(vec![Structure::Scalar]),
            dimension: m(2),
            ..ParamConstraint::default()
        };
        assert!(matches!(generate_value(&c, &mut rng, &cfg), Err(SynthError::Contradiction(_))));
        let c = ParamConstraint {
            structure: m(vec![Structure::SparseMatrix]),
            ..ParamConstraint::default()
        };
        assert!(generate_value(&c, &mut rng, &cfg).is_err());
    }

    #[test]
    fn seeded_output_is_stable() {
        let cfg = GenConfig::default();
        let a = generate_value(&fit_x(), &mut ChaCha8Rng::seed_from_u64(42), &cfg).unwrap();
        let b = generate_value(&fit_x(), &mut ChaCha8Rng::seed_from_u64(42), &cfg).unwrap();
        assert_eq!(a, b);
    }
}
