//! Shared domain types for API knowledge: signatures, per-parameter
//! constraints and the knowledge base that holds them.

mod constraint;
mod kb;
mod literal;
mod value;

pub use constraint::{
    DataType, Dim, FieldKind, Mined, ParamConstraint, Provenance, ShapeSpec, Structure,
};
pub use kb::{InvariantViolation, KbEntry, KbError, KnowledgeBase, MergeConflict};
pub use literal::{Literal, LiteralKind};
pub use value::Value;

use serde::{Deserialize, Serialize};

/// Fully qualified dotted API name, e.g. `fixture.cluster.KMeans.fit`.
pub type ApiId = String;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ApiKind {
    ClassConstructor,
    FreeFunction,
    Method,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamSpec {
    pub name: String,
    pub position: usize,
    pub is_required: bool,
    pub declared_default: Option<Literal>,
    /// `*args` / `**kwargs` pseudo-parameter: optional, never passed.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub variadic: bool,
}

impl ParamSpec {
    pub fn required(name: &str, position: usize) -> ParamSpec {
        ParamSpec {
            name: name.to_string(),
            position,
            is_required: true,
            declared_default: None,
            variadic: false,
        }
    }

    pub fn optional(name: &str, position: usize, default: Literal) -> ParamSpec {
        ParamSpec {
            name: name.to_string(),
            position,
            is_required: false,
            declared_default: Some(default),
            variadic: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ApiSpec {
    pub api_id: ApiId,
    pub kind: ApiKind,
    pub owner: Option<ApiId>,
    pub params: Vec<ParamSpec>,
}

impl ApiSpec {
    /// Last dotted segment of the id.
    pub fn simple_name(&self) -> &str {
        simple_name(&self.api_id)
    }

    /// Dotted path of the importable module that holds this API.
    pub fn module_path(&self) -> &str {
        let anchor = match (&self.kind, &self.owner) {
            (ApiKind::Method, Some(owner)) => owner.as_str(),
            _ => self.api_id.as_str(),
        };
        anchor.rsplit_once('.').map(|(m, _)| m).unwrap_or("")
    }

    pub fn param(&self, name: &str) -> Option<&ParamSpec> {
        self.params.iter().find(|p| p.name == name)
    }

    /// Parameters a caller can bind (variadic pseudo-parameters excluded).
    pub fn bindable_params(&self) -> impl Iterator<Item = &ParamSpec> {
        self.params.iter().filter(|p| !p.variadic)
    }
}

pub fn simple_name(api_id: &str) -> &str {
    api_id.rsplit('.').next().unwrap_or(api_id)
}
