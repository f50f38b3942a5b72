//! Resolves calls found in code fragments to known API ids.

use std::collections::{BTreeMap, BTreeSet};

use crate::fragment::{self, CallSite, Receiver, Token};
use crate::model::{simple_name, ApiId};

/// A set of known API ids indexed by simple name.
#[derive(Clone, Debug, Default)]
pub struct KnownApis {
    ids: BTreeSet<ApiId>,
    by_name: BTreeMap<String, Vec<ApiId>>,
}

impl KnownApis {
    pub fn new<I, S>(ids: I) -> KnownApis
    where
        I: IntoIterator<Item = S>,
        S: Into<ApiId>,
    {
        let mut known = KnownApis::default();
        for id in ids {
            let id = id.into();
            known
                .by_name
                .entry(simple_name(&id).to_string())
                .or_default()
                .push(id.clone());
            known.ids.insert(id);
        }
        for v in known.by_name.values_mut() {
            v.sort();
            v.dedup();
        }
        known
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn contains(&self, id: &str) -> bool {
        self.ids.contains(id)
    }

    fn candidates(&self, name: &str) -> &[ApiId] {
        self.by_name.get(name).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Whether `name` is the simple name of a known class (an id whose last
    /// segment starts with an uppercase letter).
    fn is_class(&self, name: &str) -> bool {
        name.chars().next().is_some_and(char::is_uppercase) && !self.candidates(name).is_empty()
    }
}

/// Owning class simple name implied by an id, e.g. `KMeans` for
/// `a.b.KMeans.fit`.
pub fn owner_class(id: &str) -> Option<&str> {
    let (parent, _) = id.rsplit_once('.')?;
    let last = simple_name(parent);
    last.chars().next().is_some_and(char::is_uppercase).then_some(last)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ResolvedCall {
    pub api_id: ApiId,
    /// Index into the call list returned by [`fragment::scan_calls`].
    pub site: usize,
}

/// Call sites of a fragment together with their resolutions.
pub struct FragmentCalls {
    pub tokens: Vec<Token>,
    pub sites: Vec<CallSite>,
    pub resolved: Vec<ResolvedCall>,
}

/// Resolves every call in `src` against `known`, in textual order.
///
/// Import aliases are expanded; method calls are disambiguated by the class
/// of their receiver when it can be traced to a constructor call (directly,
/// through a chained call, or through a variable assigned from one). Calls
/// that stay ambiguous are dropped.
pub fn resolve_calls(src: &str, known: &KnownApis) -> FragmentCalls {
    let (tokens, err) = fragment::tokenize(src);
    if let Some(e) = err {
        log::debug!("fragment lex problem ({e}); continuing best-effort");
    }
    let sites = fragment::scan_calls(&tokens);
    let imports = fragment::scan_imports(&tokens);
    let assignments = fragment::scan_assignments(&tokens);

    let site_at: BTreeMap<usize, usize> = sites.iter().enumerate().map(|(i, s)| (s.token, i)).collect();
    let mut class_of_site: BTreeMap<usize, String> = BTreeMap::new();
    let mut var_class: BTreeMap<String, (usize, String)> = BTreeMap::new();
    let mut resolved = Vec::new();

    for (i, site) in sites.iter().enumerate() {
        // Update variable classes for assignments that end before this call.
        for a in &assignments {
            if a.end <= site.token && !var_class.get(&a.target).is_some_and(|(end, _)| *end >= a.end) {
                let first_class = sites
                    .iter()
                    .enumerate()
                    .filter(|(_, s)| s.token >= a.start && s.token < a.end)
                    .find_map(|(j, _)| class_of_site.get(&j).cloned());
                if let Some(c) = first_class {
                    var_class.insert(a.target.clone(), (a.end, c));
                } else {
                    var_class.remove(&a.target);
                }
            }
        }

        let local = imports
            .get(&site.name)
            .map(|p| simple_name(p).to_string())
            .unwrap_or_else(|| site.name.clone());
        let full_path = match &site.receiver {
            Receiver::None => imports.get(&site.name).cloned(),
            Receiver::Path(path) => {
                let mut parts = path.clone();
                if let Some(expanded) = imports.get(&parts[0]) {
                    parts[0] = expanded.clone();
                }
                parts.push(site.name.clone());
                Some(parts.join("."))
            }
            Receiver::Call(_) => None,
        };
        let owner_hint: Option<String> = match &site.receiver {
            Receiver::Path(path) if path.len() == 1 => var_class
                .get(&path[0])
                .map(|(_, c)| c.clone())
                .or_else(|| known.is_class(&path[0]).then(|| path[0].clone())),
            Receiver::Call(tok) => site_at.get(tok).and_then(|j| class_of_site.get(j)).cloned(),
            _ => None,
        };

        let id = pick(known, &local, full_path.as_deref(), owner_hint.as_deref());
        if let Some(id) = &id {
            let cls = if known.is_class(&local) && simple_name(id) == local {
                Some(local.clone())
            } else {
                // Chained method calls keep the receiver's class (fit returns self).
                owner_class(id).map(str::to_string)
            };
            if let Some(c) = cls {
                class_of_site.insert(i, c);
            }
            resolved.push(ResolvedCall {
                api_id: id.clone(),
                site: i,
            });
        }
    }
    FragmentCalls {
        tokens,
        sites,
        resolved,
    }
}

fn pick(known: &KnownApis, name: &str, full_path: Option<&str>, owner: Option<&str>) -> Option<ApiId> {
    if let Some(p) = full_path {
        if known.contains(p) {
            return Some(p.to_string());
        }
    }
    let cands = known.candidates(name);
    match cands {
        [] => None,
        [one] => Some(one.clone()),
        many => {
            let by_owner: Vec<&ApiId> = match owner {
                Some(o) => many.iter().filter(|id| owner_class(id) == Some(o)).collect(),
                None => Vec::new(),
            };
            if let [one] = by_owner.as_slice() {
                return Some((*one).clone());
            }
            if let Some(p) = full_path {
                let suffix: Vec<&ApiId> = many.iter().filter(|id| id.ends_with(p) || p.ends_with(id.as_str())).collect();
                if let [one] = suffix.as_slice() {
                    return Some((*one).clone());
                }
            }
            log::debug!("ambiguous call {name}: {} candidates", many.len());
            None
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const FIG6: &str = "from sklearn.cluster import KMeans\nimport numpy as np\nX = np.array([[1, 2], [1, 4], [1, 0],\n    [10, 2], [10, 4], [10, 0]])\nkmeans = KMeans(n_clusters=2,\nrandom_state=0).fit(X)\nkmeans.predict([[0, 0], [12, 3]])\n";

    fn ids(src: &str, known: &KnownApis) -> Vec<String> {
        resolve_calls(src, known).resolved.into_iter().map(|r| r.api_id).collect()
    }

    #[test]
    fn simple_names() {
        let known = KnownApis::new(["KMeans", "fit", "predict"]);
        assert_eq!(ids(FIG6, &known), vec!["KMeans", "fit", "predict"]);
    }

    #[test]
    fn disambiguates_by_receiver_class() {
        let known = KnownApis::new([
            "fx.cluster.KMeans",
            "fx.cluster.KMeans.fit",
            "fx.cluster.KMeans.predict",
            "fx.preprocessing.StandardScaler",
            "fx.preprocessing.StandardScaler.fit",
        ]);
        assert_eq!(
            ids(FIG6, &known),
            vec!["fx.cluster.KMeans", "fx.cluster.KMeans.fit", "fx.cluster.KMeans.predict"]
        );
        let src = "s = StandardScaler()\ns.fit(X)\nm = KMeans(3)\nm.fit(X)\n";
        assert_eq!(
            ids(src, &known),
            vec![
                "fx.preprocessing.StandardScaler",
                "fx.preprocessing.StandardScaler.fit",
                "fx.cluster.KMeans",
                "fx.cluster.KMeans.fit"
            ]
        );
        // Receiver of unknown origin: ambiguous, dropped.
        assert_eq!(ids("model.fit(X)\n", &known), Vec::<String>::new());
    }

    #[test]
    fn aliases() {
        let known = KnownApis::new(["fx.cluster.KMeans"]);
        let src = "from fx.cluster import KMeans as KM\nm = KM(2)\nimport fx.cluster as c\nc.KMeans(3)\n";
        assert_eq!(ids(src, &known), vec!["fx.cluster.KMeans", "fx.cluster.KMeans"]);
    }
}
