//! Documentation mining: signatures, parametric pages and example code are
//! mined per API record and merged into a [`KnowledgeBase`].

mod example;
mod rules;
mod signature;

pub use example::{mine_example, ValueObservation};
pub use rules::{
    apply_rules, mine_parametric_page, normalize_sentence, rules, split_sentences, LinguisticRule,
    RuleId, RuleMatch,
};
pub use signature::{parse_signature, ParsedSignature, SignatureError};

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::model::{
    simple_name, ApiId, ApiKind, ApiSpec, KnowledgeBase, Mined, ParamConstraint, Provenance,
};

/// One API's documentation, as ingested from the corpus file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DocRecord {
    pub api_id: ApiId,
    pub signature: String,
    /// Parameter name -> its raw documentation text.
    #[serde(default)]
    pub params: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub example: Option<String>,
}

impl DocRecord {
    /// Hash of the whitespace-normalized parameter documentation. Records
    /// without parameter docs have no page and hence no fingerprint.
    pub fn fingerprint(&self) -> Option<String> {
        if self.params.is_empty() {
            return None;
        }
        let mut h = Sha256::new();
        for (name, doc) in &self.params {
            let text = doc.split_whitespace().collect::<Vec<_>>().join(" ");
            h.update(name.as_bytes());
            h.update(b": ");
            h.update(text.as_bytes());
            h.update(b"\n");
        }
        Some(h.finalize().iter().map(|b| format!("{b:02x}")).collect())
    }
}

#[derive(Debug, Error)]
pub enum DocError {
    #[error("doc corpus not found: {}", .0.display())]
    Missing(PathBuf),
    #[error("i/o error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{}:{line}: malformed doc record: {message}", path.display())]
    Malformed {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("duplicate api_id {0} in doc corpus")]
    DuplicateApiId(ApiId),
    #[error("{api_id}: empty signature")]
    EmptySignature { api_id: ApiId },
    #[error("{api_id}: {source}")]
    Signature {
        api_id: ApiId,
        #[source]
        source: SignatureError,
    },
}

/// Reads a corpus file: one JSON record per line, blank lines ignored.
pub fn load_corpus(path: &Path) -> Result<Vec<DocRecord>, DocError> {
    let text = fs::read_to_string(path).map_err(|e| match e.kind() {
        io::ErrorKind::NotFound => DocError::Missing(path.to_path_buf()),
        _ => DocError::Io {
            path: path.to_path_buf(),
            source: e,
        },
    })?;
    parse_corpus(&text).map_err(|(line, message)| DocError::Malformed {
        path: path.to_path_buf(),
        line,
        message,
    })
}

/// Parses corpus text; on failure returns the 1-based line and the reason.
pub fn parse_corpus(text: &str) -> Result<Vec<DocRecord>, (usize, String)> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let rec: DocRecord = serde_json::from_str(line).map_err(|e| (i + 1, e.to_string()))?;
        out.push(rec);
    }
    Ok(out)
}

pub fn save_corpus(records: &[DocRecord], path: &Path) -> Result<(), DocError> {
    let mut text = String::new();
    for r in records {
        text.push_str(&serde_json::to_string(r).expect("doc records serialize"));
        text.push('\n');
    }
    fs::write(path, text).map_err(|source| DocError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Kind and owner implied by a dotted id: a capitalized last segment is a
/// class; a capitalized parent makes a method of that class.
pub fn infer_kind(api_id: &str) -> (ApiKind, Option<ApiId>) {
    let upper = |s: &str| s.chars().next().is_some_and(char::is_uppercase);
    if upper(simple_name(api_id)) {
        return (ApiKind::ClassConstructor, None);
    }
    match api_id.rsplit_once('.') {
        Some((parent, _)) if upper(simple_name(parent)) => (ApiKind::Method, Some(parent.to_string())),
        _ => (ApiKind::FreeFunction, None),
    }
}

/// Signature-derived spec for a record.
pub fn record_spec(rec: &DocRecord) -> Result<ApiSpec, DocError> {
    if rec.signature.trim().is_empty() {
        return Err(DocError::EmptySignature {
            api_id: rec.api_id.clone(),
        });
    }
    let sig = parse_signature(&rec.signature).map_err(|source| DocError::Signature {
        api_id: rec.api_id.clone(),
        source,
    })?;
    if sig.name != simple_name(&rec.api_id) && sig.name != "__init__" {
        log::warn!("{}: signature declares {}", rec.api_id, sig.name);
    }
    let (kind, owner) = infer_kind(&rec.api_id);
    Ok(ApiSpec {
        api_id: rec.api_id.clone(),
        kind,
        owner,
        params: sig.params,
    })
}

fn signature_constraint(p: &crate::model::ParamSpec) -> ParamConstraint {
    let mut c = ParamConstraint {
        optional: Some(Mined::new(!p.is_required, Provenance::Signature)),
        ..ParamConstraint::default()
    };
    if let Some(d) = &p.declared_default {
        c.default_value = Some(Mined::new(d.clone(), Provenance::Signature));
    }
    c
}

/// Framework name shared by every id's first segment, else `unknown`.
fn framework_of(records: &[DocRecord]) -> String {
    let roots: BTreeSet<&str> = records
        .iter()
        .map(|r| r.api_id.split('.').next().unwrap_or(""))
        .collect();
    match roots.into_iter().collect::<Vec<_>>().as_slice() {
        [one] if !one.is_empty() && records.iter().all(|r| r.api_id.contains('.')) => one.to_string(),
        _ => "unknown".to_string(),
    }
}

/// Mines the whole corpus. Records are processed in api_id order, so the
/// result does not depend on corpus order.
pub fn build_kb(records: &[DocRecord]) -> Result<KnowledgeBase, DocError> {
    let mut sorted: Vec<&DocRecord> = records.iter().collect();
    sorted.sort_by(|a, b| a.api_id.cmp(&b.api_id));
    for w in sorted.windows(2) {
        if w[0].api_id == w[1].api_id {
            return Err(DocError::DuplicateApiId(w[0].api_id.clone()));
        }
    }
    let framework = framework_of(records);
    let version = "unversioned";

    let mut specs = BTreeMap::new();
    for rec in &sorted {
        specs.insert(rec.api_id.clone(), record_spec(rec)?);
    }

    let mut from_sig = KnowledgeBase::new(&framework, version);
    let mut from_page = KnowledgeBase::new(&framework, version);
    for rec in &sorted {
        let spec = &specs[&rec.api_id];
        let sig: BTreeMap<_, _> = spec
            .params
            .iter()
            .map(|p| (p.name.clone(), signature_constraint(p)))
            .collect();
        from_sig.insert(spec.clone(), sig);

        let mut page = BTreeMap::new();
        for (name, doc) in &rec.params {
            if spec.param(name).is_none() {
                log::warn!("{}: documented parameter {name} is not in the signature", rec.api_id);
                continue;
            }
            page.insert(name.clone(), mine_parametric_page(doc));
        }
        from_page.insert(spec.clone(), page);
        if let Some(fp) = rec.fingerprint() {
            let slot = from_page.parametric_page_fingerprints.entry(fp).or_default();
            for name in rec.params.keys().filter(|n| spec.param(n).is_some()) {
                slot.push((rec.api_id.clone(), name.clone()));
            }
            slot.sort();
        }
    }

    let mut from_examples = KnowledgeBase::new(&framework, version);
    for rec in &sorted {
        let Some(code) = &rec.example else { continue };
        for obs in mine_example(code, &specs) {
            let spec = &specs[&obs.api_id];
            let entry = from_examples
                .entries
                .entry(obs.api_id.clone())
                .or_insert_with(|| crate::model::KbEntry {
                    spec: spec.clone(),
                    constraints: BTreeMap::new(),
                });
            match entry.constraints.get_mut(&obs.param) {
                // Later observations only fill gaps.
                Some(c) => c.fill_missing_from(&obs.to_constraint()),
                None => {
                    entry.constraints.insert(obs.param.clone(), obs.to_constraint());
                }
            }
        }
    }

    let merged = from_sig
        .merge(&from_page)
        .and_then(|kb| kb.merge(&from_examples))
        .expect("stages share one framework name");
    Ok(propagate_shared(&merged))
}

/// Copies example-derived fields between parameters documented by the same
/// page. A parameter that already has example-derived fields is left alone;
/// otherwise only its undefined fields are filled, tagged as propagated.
pub fn propagate_shared(kb: &KnowledgeBase) -> KnowledgeBase {
    let mut out = kb.clone();
    let from_example = |c: &ParamConstraint| {
        let e = c.clone().only_provenance(Provenance::ExampleCode);
        (!e.is_undefined()).then_some(e)
    };
    for members in kb.parametric_page_fingerprints.values() {
        for (api, param) in members {
            let Some(target) = kb.constraint(api, param) else { continue };
            if from_example(target).is_some() {
                continue;
            }
            // Donors: same page, same parameter name, own example evidence.
            let donor = members
                .iter()
                .filter(|(a, p)| a != api && p == param)
                .find_map(|(a, p)| kb.constraint(a, p).and_then(from_example));
            if let Some(d) = donor {
                let c = out
                    .entries
                    .get_mut(api)
                    .and_then(|e| e.constraints.get_mut(param))
                    .expect("constraint exists");
                c.fill_missing_from(&d.with_provenance(Provenance::Propagated));
                log::debug!("{api}.{param}: propagated example-derived fields");
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{DataType, Literal};

    fn rec(id: &str, sig: &str, params: &[(&str, &str)], example: Option<&str>) -> DocRecord {
        DocRecord {
            api_id: id.into(),
            signature: sig.into(),
            params: params.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect(),
            example: example.map(str::to_string),
        }
    }

    #[test]
    fn kinds() {
        assert_eq!(infer_kind("fx.cluster.KMeans"), (ApiKind::ClassConstructor, None));
        assert_eq!(
            infer_kind("fx.cluster.KMeans.fit"),
            (ApiKind::Method, Some("fx.cluster.KMeans".into()))
        );
        assert_eq!(infer_kind("fx.metrics.accuracy"), (ApiKind::FreeFunction, None));
    }

    #[test]
    fn fingerprint_ignores_whitespace_only() {
        let a = rec("fx.a", "a(x)", &[("x", "int,  default=0")], None);
        let b = rec("fx.b", "b(x)", &[("x", "int, default=0\n")], None);
        let c = rec("fx.c", "c(x)", &[("x", "float, default=0")], None);
        assert_eq!(a.fingerprint(), b.fingerprint());
        assert_ne!(a.fingerprint(), c.fingerprint());
        assert_eq!(rec("fx.d", "d()", &[], None).fingerprint(), None);
    }

    #[test]
    fn signature_only_record() {
        let kb = build_kb(&[rec("fx.f", "f(a, b=2)", &[], None)]).unwrap();
        let (_, cs) = kb.lookup("fx.f").unwrap();
        assert_eq!(cs["a"].defined_fields().len(), 1);
        assert!(!cs["a"].optional.as_ref().unwrap().value);
        assert_eq!(cs["b"].default_value.as_ref().unwrap().value, Literal::Int(2));
        assert_eq!(kb.framework, "fx");
    }

    #[test]
    fn duplicates_and_empty() {
        assert!(build_kb(&[]).unwrap().is_empty());
        let r = rec("fx.f", "f()", &[], None);
        assert!(matches!(build_kb(&[r.clone(), r]), Err(DocError::DuplicateApiId(_))));
    }

    #[test]
    fn propagation_fills_only_missing_example_fields() {
        let page = [("X", "array of shape (n, m)")];
        let records = vec![
            rec("fx.A", "A()", &[], None),
            rec("fx.A.fit", "fit(X)", &page, Some("A().fit([[1, 2], [3, 4]])")),
            rec("fx.B", "B()", &[], None),
            rec("fx.B.fit", "fit(X)", &page, None),
        ];
        let kb = build_kb(&records).unwrap();
        let b = kb.constraint("fx.B.fit", "X").unwrap();
        let dt = b.data_type.as_ref().unwrap();
        assert_eq!(dt.value, vec![DataType::Integer]);
        assert_eq!(dt.provenance, Provenance::Propagated);
        // Page-derived structure stays page-derived.
        assert_eq!(b.structure.as_ref().unwrap().provenance, Provenance::ParametricPage);
        let a = kb.constraint("fx.A.fit", "X").unwrap();
        assert_eq!(a.data_type.as_ref().unwrap().provenance, Provenance::ExampleCode);
        // Idempotent: a second pass changes nothing.
        assert_eq!(propagate_shared(&kb), kb);
    }

    #[test]
    fn corpus_round_trip_and_line_errors() {
        let dir = std::env::temp_dir().join(format!("apiknow-docs-{}", std::process::id()));
        fs::create_dir_all(&dir).unwrap();
        let path = dir.join("docs.jsonl");
        let records = vec![rec("fx.f", "f(a)", &[("a", "int")], Some("f(1)"))];
        save_corpus(&records, &path).unwrap();
        assert_eq!(load_corpus(&path).unwrap(), records);
        fs::write(&path, "\n{\"api_id\": \"x\"}\n").unwrap();
        match load_corpus(&path) {
            Err(DocError::Malformed { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
        fs::remove_dir_all(&dir).unwrap();
    }
}
