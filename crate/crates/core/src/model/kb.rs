use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{ApiId, ApiKind, ApiSpec, FieldKind, Mined, ParamConstraint, Provenance};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KbEntry {
    pub spec: ApiSpec,
    /// Keyed by parameter name.
    pub constraints: BTreeMap<String, ParamConstraint>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KnowledgeBase {
    pub framework: String,
    pub version: String,
    pub entries: BTreeMap<ApiId, KbEntry>,
    /// Parametric page fingerprint -> (api_id, parameter) pairs documented by
    /// that page.
    #[serde(default)]
    pub parametric_page_fingerprints: BTreeMap<String, Vec<(ApiId, String)>>,
}

#[derive(Debug, Error)]
pub enum KbError {
    #[error("knowledge base file not found: {}", .0.display())]
    Missing(PathBuf),
    #[error("i/o error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("malformed knowledge base {}: {message}", path.display())]
    Malformed { path: PathBuf, message: String },
    #[error("knowledge base invariant violated: {0}")]
    Invariant(#[from] InvariantViolation),
    #[error("cannot merge knowledge bases of different frameworks: {0} vs {1}")]
    FrameworkMismatch(String, String),
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum InvariantViolation {
    #[error("empty api_id")]
    EmptyApiId,
    #[error("entry key {key} does not match its api_id {api_id}")]
    KeyMismatch { key: String, api_id: String },
    #[error("{api_id}: constraint names parameter {param} absent from the signature")]
    UnknownParam { api_id: String, param: String },
    #[error("{api_id}: parameter positions are not contiguous from 0")]
    ParamPositions { api_id: String },
    #[error("{api_id}: duplicate parameter {param}")]
    DuplicateParam { api_id: String, param: String },
    #[error("{api_id}.{param}: is_required must hold exactly when no default is declared")]
    RequiredDefaultMismatch { api_id: String, param: String },
    #[error("{api_id}: a method must name its owner")]
    MethodWithoutOwner { api_id: String },
    #[error("{api_id}: only methods may have an owner")]
    UnexpectedOwner { api_id: String },
    #[error("{api_id}.{param}: dimension must be >= 1")]
    ZeroDimension { api_id: String, param: String },
    #[error("{api_id}.{param}: {field} must not be empty")]
    EmptyField {
        api_id: String,
        param: String,
        field: FieldKind,
    },
    #[error("{api_id}.{param}: concrete shape dimensions must be > 0")]
    NonPositiveDim { api_id: String, param: String },
    #[error("fingerprint {fingerprint} references unknown parameter {api_id}.{param}")]
    DanglingFingerprint {
        fingerprint: String,
        api_id: String,
        param: String,
    },
}

/// A field on which two merged sources disagreed.
#[derive(Clone, Debug, PartialEq)]
pub struct MergeConflict {
    pub api_id: ApiId,
    pub param: String,
    pub field: FieldKind,
    pub kept: Provenance,
    pub dropped: Provenance,
}

impl KnowledgeBase {
    pub fn new(framework: &str, version: &str) -> KnowledgeBase {
        KnowledgeBase {
            framework: framework.to_string(),
            version: version.to_string(),
            entries: BTreeMap::new(),
            parametric_page_fingerprints: BTreeMap::new(),
        }
    }

    pub fn insert(&mut self, spec: ApiSpec, constraints: BTreeMap<String, ParamConstraint>) {
        let id = spec.api_id.clone();
        self.entries.insert(id, KbEntry { spec, constraints });
    }

    /// Exact, case-sensitive lookup.
    pub fn lookup(&self, api_id: &str) -> Option<(&ApiSpec, &BTreeMap<String, ParamConstraint>)> {
        self.entries.get(api_id).map(|e| (&e.spec, &e.constraints))
    }

    pub fn constraint(&self, api_id: &str, param: &str) -> Option<&ParamConstraint> {
        self.entries.get(api_id)?.constraints.get(param)
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// APIs whose id lies under the dotted module prefix `module`.
    pub fn module_apis(&self, module: &str) -> Vec<&ApiSpec> {
        let prefix = format!("{module}.");
        self.entries
            .values()
            .filter(|e| e.spec.api_id.starts_with(&prefix))
            .map(|e| &e.spec)
            .collect()
    }

    /// Same signatures, every constraint field undefined, no fingerprints.
    /// This is what a generator knows from inspecting the module alone.
    pub fn signatures_only(&self) -> KnowledgeBase {
        let mut out = KnowledgeBase::new(&self.framework, &self.version);
        for entry in self.entries.values() {
            let constraints = entry
                .spec
                .params
                .iter()
                .map(|p| (p.name.clone(), ParamConstraint::default()))
                .collect();
            out.insert(entry.spec.clone(), constraints);
        }
        out
    }

    pub fn validate(&self) -> Result<(), InvariantViolation> {
        for (key, entry) in &self.entries {
            let spec = &entry.spec;
            let id = &spec.api_id;
            if id.is_empty() {
                return Err(InvariantViolation::EmptyApiId);
            }
            if key != id {
                return Err(InvariantViolation::KeyMismatch {
                    key: key.clone(),
                    api_id: id.clone(),
                });
            }
            match (spec.kind, &spec.owner) {
                (ApiKind::Method, None) => {
                    return Err(InvariantViolation::MethodWithoutOwner { api_id: id.clone() })
                }
                (ApiKind::ClassConstructor | ApiKind::FreeFunction, Some(_)) => {
                    return Err(InvariantViolation::UnexpectedOwner { api_id: id.clone() })
                }
                _ => {}
            }
            let mut seen = BTreeSet::new();
            for (i, p) in spec.params.iter().enumerate() {
                if p.position != i {
                    return Err(InvariantViolation::ParamPositions { api_id: id.clone() });
                }
                if !seen.insert(p.name.as_str()) {
                    return Err(InvariantViolation::DuplicateParam {
                        api_id: id.clone(),
                        param: p.name.clone(),
                    });
                }
                if !p.variadic && p.is_required != p.declared_default.is_none() {
                    return Err(InvariantViolation::RequiredDefaultMismatch {
                        api_id: id.clone(),
                        param: p.name.clone(),
                    });
                }
            }
            for (param, c) in &entry.constraints {
                if spec.param(param).is_none() {
                    return Err(InvariantViolation::UnknownParam {
                        api_id: id.clone(),
                        param: param.clone(),
                    });
                }
                validate_constraint(id, param, c)?;
            }
        }
        for (fingerprint, pairs) in &self.parametric_page_fingerprints {
            for (api_id, param) in pairs {
                let known = self
                    .entries
                    .get(api_id)
                    .is_some_and(|e| e.spec.param(param).is_some());
                if !known {
                    return Err(InvariantViolation::DanglingFingerprint {
                        fingerprint: fingerprint.clone(),
                        api_id: api_id.clone(),
                        param: param.clone(),
                    });
                }
            }
        }
        Ok(())
    }

    /// Serializes to the KB file layout. The output has no trailing newline
    /// so that any truncation breaks the closing brace.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("knowledge base serializes")
    }

    pub fn save(&self, path: &Path) -> Result<(), KbError> {
        fs::write(path, self.to_json()).map_err(|source| KbError::Io {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn load(path: &Path) -> Result<KnowledgeBase, KbError> {
        let text = fs::read_to_string(path).map_err(|source| {
            if source.kind() == io::ErrorKind::NotFound {
                KbError::Missing(path.to_path_buf())
            } else {
                KbError::Io {
                    path: path.to_path_buf(),
                    source,
                }
            }
        })?;
        KnowledgeBase::from_json(&text).map_err(|e| match e {
            KbError::Malformed { message, .. } => KbError::Malformed {
                path: path.to_path_buf(),
                message,
            },
            other => other,
        })
    }

    pub fn from_json(text: &str) -> Result<KnowledgeBase, KbError> {
        let kb: KnowledgeBase = serde_json::from_str(text).map_err(|e| KbError::Malformed {
            path: PathBuf::from("<memory>"),
            message: e.to_string(),
        })?;
        kb.validate()?;
        Ok(kb)
    }

    /// Unions two knowledge bases. Per field the higher-precedence provenance
    /// wins (example code > parametric page > signature > propagated); on a
    /// tie `self` wins. Optionality is the exception: a signature-derived
    /// value always wins, since a declared default is what makes a parameter
    /// optional.
    pub fn merge(&self, other: &KnowledgeBase) -> Result<KnowledgeBase, KbError> {
        self.merge_with_conflicts(other).map(|(kb, _)| kb)
    }

    pub fn merge_with_conflicts(
        &self,
        other: &KnowledgeBase,
    ) -> Result<(KnowledgeBase, Vec<MergeConflict>), KbError> {
        if self.framework != other.framework {
            return Err(KbError::FrameworkMismatch(
                self.framework.clone(),
                other.framework.clone(),
            ));
        }
        let mut out = self.clone();
        let mut conflicts = Vec::new();
        for (id, theirs) in &other.entries {
            match out.entries.get_mut(id) {
                None => {
                    out.entries.insert(id.clone(), theirs.clone());
                }
                Some(ours) => {
                    if ours.spec != theirs.spec {
                        log::warn!("{id}: signatures differ between merged sources, keeping the first");
                    }
                    for (param, their_c) in &theirs.constraints {
                        if ours.spec.param(param).is_none() {
                            log::warn!("{id}: dropping constraint for unknown parameter {param}");
                            continue;
                        }
                        let our_c = ours.constraints.entry(param.clone()).or_default();
                        merge_constraint(id, param, our_c, their_c, &mut conflicts);
                    }
                }
            }
        }
        for (fp, pairs) in &other.parametric_page_fingerprints {
            let slot = out.parametric_page_fingerprints.entry(fp.clone()).or_default();
            for pair in pairs {
                if !slot.contains(pair) {
                    slot.push(pair.clone());
                }
            }
            slot.sort();
        }
        for c in &conflicts {
            log::info!(
                "merge conflict on {}.{} {}: kept {:?}, dropped {:?}",
                c.api_id,
                c.param,
                c.field,
                c.kept,
                c.dropped
            );
        }
        Ok((out, conflicts))
    }
}

fn validate_constraint(
    api_id: &str,
    param: &str,
    c: &ParamConstraint,
) -> Result<(), InvariantViolation> {
    let empty = |field| InvariantViolation::EmptyField {
        api_id: api_id.to_string(),
        param: param.to_string(),
        field,
    };
    if c.structure.as_ref().is_some_and(|m| m.value.is_empty()) {
        return Err(empty(FieldKind::Structure));
    }
    if c.data_type.as_ref().is_some_and(|m| m.value.is_empty()) {
        return Err(empty(FieldKind::DataType));
    }
    if c.allowed_values.as_ref().is_some_and(|m| m.value.is_empty()) {
        return Err(empty(FieldKind::AllowedValues));
    }
    if let Some(shapes) = &c.shape {
        if shapes.value.is_empty() || shapes.value.iter().any(|s| s.dims.is_empty()) {
            return Err(empty(FieldKind::Shape));
        }
        let zero = shapes
            .value
            .iter()
            .flat_map(|s| &s.dims)
            .any(|d| matches!(d, super::Dim::Fixed(0)));
        if zero {
            return Err(InvariantViolation::NonPositiveDim {
                api_id: api_id.to_string(),
                param: param.to_string(),
            });
        }
    }
    if c.dimension.as_ref().is_some_and(|m| m.value == 0) {
        return Err(InvariantViolation::ZeroDimension {
            api_id: api_id.to_string(),
            param: param.to_string(),
        });
    }
    Ok(())
}

fn merge_constraint(
    api_id: &str,
    param: &str,
    ours: &mut ParamConstraint,
    theirs: &ParamConstraint,
    conflicts: &mut Vec<MergeConflict>,
) {
    let mut ctx = FieldMerge {
        api_id,
        param,
        conflicts,
    };
    ctx.field(FieldKind::Structure, &mut ours.structure, &theirs.structure, Provenance::rank);
    ctx.field(FieldKind::DataType, &mut ours.data_type, &theirs.data_type, Provenance::rank);
    ctx.field(
        FieldKind::DefaultValue,
        &mut ours.default_value,
        &theirs.default_value,
        Provenance::rank,
    );
    ctx.field(FieldKind::Shape, &mut ours.shape, &theirs.shape, Provenance::rank);
    ctx.field(FieldKind::Size, &mut ours.size, &theirs.size, Provenance::rank);
    ctx.field(FieldKind::Dimension, &mut ours.dimension, &theirs.dimension, Provenance::rank);
    ctx.field(
        FieldKind::AllowedValues,
        &mut ours.allowed_values,
        &theirs.allowed_values,
        Provenance::rank,
    );
    ctx.field(FieldKind::Optional, &mut ours.optional, &theirs.optional, optional_rank);
}

fn optional_rank(p: Provenance) -> u8 {
    match p {
        Provenance::Signature => 4,
        other => other.rank(),
    }
}

struct FieldMerge<'a> {
    api_id: &'a str,
    param: &'a str,
    conflicts: &'a mut Vec<MergeConflict>,
}

impl FieldMerge<'_> {
    fn field<T: Clone + PartialEq>(
        &mut self,
        kind: FieldKind,
        ours: &mut Option<Mined<T>>,
        theirs: &Option<Mined<T>>,
        rank: fn(Provenance) -> u8,
    ) {
        let Some(t) = theirs else { return };
        match ours {
            None => *ours = Some(t.clone()),
            Some(o) => {
                let take_theirs = rank(t.provenance) > rank(o.provenance);
                if o.value != t.value {
                    let (kept, dropped) = if take_theirs {
                        (t.provenance, o.provenance)
                    } else {
                        (o.provenance, t.provenance)
                    };
                    self.conflicts.push(MergeConflict {
                        api_id: self.api_id.to_string(),
                        param: self.param.to_string(),
                        field: kind,
                        kept,
                        dropped,
                    });
                }
                if take_theirs {
                    *ours = Some(t.clone());
                }
            }
        }
    }
}
