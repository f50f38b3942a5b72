use std::fmt;

use serde::{Deserialize, Serialize};

use super::Literal;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Structure {
    ArrayLike,
    List,
    Tuple,
    Set,
    Dict,
    SparseMatrix,
    Sequence,
    Scalar,
}

impl Structure {
    /// Maps a documentation word onto the closed structure vocabulary.
    pub fn from_word(word: &str) -> Option<Structure> {
        let w = word.trim().to_ascii_lowercase();
        let w = w.trim_end_matches('s');
        Some(match w {
            "array-like" | "array_like" | "array" | "ndarray" | "matrix" | "matrice" => {
                Structure::ArrayLike
            }
            "list" => Structure::List,
            "tuple" => Structure::Tuple,
            "set" => Structure::Set,
            "dict" | "dictionary" => Structure::Dict,
            "sparse matrix" | "sparse matrice" => Structure::SparseMatrix,
            "sequence" => Structure::Sequence,
            "scalar" => Structure::Scalar,
            _ => return None,
        })
    }
}

impl fmt::Display for Structure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Structure::ArrayLike => "array-like",
            Structure::List => "list",
            Structure::Tuple => "tuple",
            Structure::Set => "set",
            Structure::Dict => "dict",
            Structure::SparseMatrix => "sparse-matrix",
            Structure::Sequence => "sequence",
            Structure::Scalar => "scalar",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DataType {
    Integer,
    Float,
    String,
    Boolean,
}

impl DataType {
    pub fn from_word(word: &str) -> Option<DataType> {
        let w = word.trim().to_ascii_lowercase();
        let w = w.strip_suffix('s').unwrap_or(&w);
        Some(match w {
            "int" | "integer" => DataType::Integer,
            "float" => DataType::Float,
            "str" | "string" => DataType::String,
            "bool" | "boolean" => DataType::Boolean,
            _ => return None,
        })
    }

    /// The data type of a scalar literal; `None` and opaque expressions have none.
    pub fn of(lit: &Literal) -> Option<DataType> {
        match lit {
            Literal::Int(_) => Some(DataType::Integer),
            Literal::Float(_) => Some(DataType::Float),
            Literal::Str(_) => Some(DataType::String),
            Literal::Bool(_) => Some(DataType::Boolean),
            Literal::None | Literal::Opaque(_) => None,
        }
    }

    /// Whether a value of type `actual` is acceptable where `self` is expected.
    /// Integers are accepted for floats; booleans are not integers.
    pub fn accepts(self, actual: DataType) -> bool {
        self == actual || (self == DataType::Float && actual == DataType::Integer)
    }
}

impl fmt::Display for DataType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            DataType::Integer => "integer",
            DataType::Float => "float",
            DataType::String => "string",
            DataType::Boolean => "boolean",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Dim {
    Fixed(u64),
    Symbol(String),
}

impl fmt::Display for Dim {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Dim::Fixed(n) => write!(f, "{n}"),
            Dim::Symbol(s) => f.write_str(s),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ShapeSpec {
    pub dims: Vec<Dim>,
}

impl ShapeSpec {
    pub fn new(dims: Vec<Dim>) -> ShapeSpec {
        ShapeSpec { dims }
    }

    /// Parses `(n_samples, n_features)`, `(n_samples,)` or `(2, 3)`.
    pub fn parse(text: &str) -> Option<ShapeSpec> {
        let inner = text.trim().strip_prefix('(')?.strip_suffix(')')?;
        let mut dims = Vec::new();
        for part in inner.split(',') {
            let p = part.trim();
            if p.is_empty() {
                continue;
            }
            let dim = match p.parse::<u64>() {
                Ok(0) => return None,
                Ok(n) => Dim::Fixed(n),
                Err(_) if p.chars().all(|c| c.is_alphanumeric() || c == '_') => {
                    Dim::Symbol(p.to_string())
                }
                Err(_) => return None,
            };
            dims.push(dim);
        }
        if dims.is_empty() {
            None
        } else {
            Some(ShapeSpec { dims })
        }
    }

    pub fn rank(&self) -> usize {
        self.dims.len()
    }
}

impl fmt::Display for ShapeSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        for (i, d) in self.dims.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{d}")?;
        }
        if self.dims.len() == 1 {
            f.write_str(",")?;
        }
        f.write_str(")")
    }
}

/// Where a constraint field came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    Signature,
    ParametricPage,
    ExampleCode,
    Propagated,
}

impl Provenance {
    /// Merge precedence: example code > parametric page > signature > propagated.
    pub fn rank(self) -> u8 {
        match self {
            Provenance::ExampleCode => 3,
            Provenance::ParametricPage => 2,
            Provenance::Signature => 1,
            Provenance::Propagated => 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mined<T> {
    pub value: T,
    pub provenance: Provenance,
}

impl<T> Mined<T> {
    pub fn new(value: T, provenance: Provenance) -> Mined<T> {
        Mined { value, provenance }
    }
}

/// Per-parameter constraint record. A `None` field is explicitly undefined.
/// Alternatives (`int or float`, `{array-like, sparse matrix}`, two shapes)
/// are kept in order, the first being the primary reading.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ParamConstraint {
    pub structure: Option<Mined<Vec<Structure>>>,
    pub data_type: Option<Mined<Vec<DataType>>>,
    pub default_value: Option<Mined<Literal>>,
    pub shape: Option<Mined<Vec<ShapeSpec>>>,
    pub size: Option<Mined<u64>>,
    pub dimension: Option<Mined<u32>>,
    pub allowed_values: Option<Mined<Vec<Literal>>>,
    pub optional: Option<Mined<bool>>,
}

/// Names the constraint fields, used for reporting and merge logs.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FieldKind {
    Structure,
    DataType,
    DefaultValue,
    Shape,
    Size,
    Dimension,
    AllowedValues,
    Optional,
}

impl fmt::Display for FieldKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            FieldKind::Structure => "structure",
            FieldKind::DataType => "data_type",
            FieldKind::DefaultValue => "default_value",
            FieldKind::Shape => "shape",
            FieldKind::Size => "size",
            FieldKind::Dimension => "dimension",
            FieldKind::AllowedValues => "allowed_values",
            FieldKind::Optional => "optional",
        };
        f.write_str(s)
    }
}

impl ParamConstraint {
    /// Field kinds that carry a value.
    pub fn defined_fields(&self) -> Vec<FieldKind> {
        let mut out = Vec::new();
        if self.structure.is_some() {
            out.push(FieldKind::Structure);
        }
        if self.data_type.is_some() {
            out.push(FieldKind::DataType);
        }
        if self.default_value.is_some() {
            out.push(FieldKind::DefaultValue);
        }
        if self.shape.is_some() {
            out.push(FieldKind::Shape);
        }
        if self.size.is_some() {
            out.push(FieldKind::Size);
        }
        if self.dimension.is_some() {
            out.push(FieldKind::Dimension);
        }
        if self.allowed_values.is_some() {
            out.push(FieldKind::AllowedValues);
        }
        if self.optional.is_some() {
            out.push(FieldKind::Optional);
        }
        out
    }

    pub fn is_undefined(&self) -> bool {
        self.defined_fields().is_empty()
    }

    /// True when nothing constrains the form of a value (defaults and
    /// optionality do not).
    pub fn describes_no_value(&self) -> bool {
        self.structure.is_none()
            && self.data_type.is_none()
            && self.shape.is_none()
            && self.size.is_none()
            && self.dimension.is_none()
            && self.allowed_values.is_none()
    }

    /// Fills every undefined field of `self` from `other`, keeping the
    /// provenance `other` carries.
    pub fn fill_missing_from(&mut self, other: &ParamConstraint) {
        fill(&mut self.structure, &other.structure);
        fill(&mut self.data_type, &other.data_type);
        fill(&mut self.default_value, &other.default_value);
        fill(&mut self.shape, &other.shape);
        fill(&mut self.size, &other.size);
        fill(&mut self.dimension, &other.dimension);
        fill(&mut self.allowed_values, &other.allowed_values);
        fill(&mut self.optional, &other.optional);
    }

    /// Rewrites the provenance tag of every defined field.
    pub fn with_provenance(mut self, provenance: Provenance) -> ParamConstraint {
        fn set<T>(slot: &mut Option<Mined<T>>, p: Provenance) {
            if let Some(m) = slot {
                m.provenance = p;
            }
        }
        set(&mut self.structure, provenance);
        set(&mut self.data_type, provenance);
        set(&mut self.default_value, provenance);
        set(&mut self.shape, provenance);
        set(&mut self.size, provenance);
        set(&mut self.dimension, provenance);
        set(&mut self.allowed_values, provenance);
        set(&mut self.optional, provenance);
        self
    }

    /// Keeps only the fields tagged with `provenance`.
    pub fn only_provenance(mut self, provenance: Provenance) -> ParamConstraint {
        fn keep<T>(slot: &mut Option<Mined<T>>, p: Provenance) {
            if slot.as_ref().is_some_and(|m| m.provenance != p) {
                *slot = None;
            }
        }
        keep(&mut self.structure, provenance);
        keep(&mut self.data_type, provenance);
        keep(&mut self.default_value, provenance);
        keep(&mut self.shape, provenance);
        keep(&mut self.size, provenance);
        keep(&mut self.dimension, provenance);
        keep(&mut self.allowed_values, provenance);
        keep(&mut self.optional, provenance);
        self
    }
}

fn fill<T: Clone>(slot: &mut Option<Mined<T>>, from: &Option<Mined<T>>) {
    if slot.is_none() {
        slot.clone_from(from);
    }
}
