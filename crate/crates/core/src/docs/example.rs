use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::fragment::{self, TokenKind};
use crate::model::{ApiId, ApiSpec, DataType, Mined, ParamConstraint, Provenance, Structure, Value};
use crate::resolve::{resolve_calls, KnownApis};

/// A concrete input value seen bound to a parameter in example code.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValueObservation {
    pub api_id: ApiId,
    pub param: String,
    pub structure: Structure,
    pub data_type: Option<DataType>,
    /// Lengths along each nesting level; empty for scalars.
    pub dims: Vec<usize>,
    pub source: Provenance,
}

impl ValueObservation {
    fn from_value(api_id: &str, param: &str, value: &Value, array_wrapped: bool) -> Option<ValueObservation> {
        let depth = value.depth()?;
        let structure = match value {
            _ if array_wrapped => Structure::ArrayLike,
            Value::Scalar(_) => Structure::Scalar,
            Value::List(_) if depth >= 2 => Structure::ArrayLike,
            Value::List(_) => Structure::List,
            Value::Tuple(_) => Structure::Tuple,
            Value::Set(_) => Structure::Set,
            Value::Dict(_) => Structure::Dict,
        };
        Some(ValueObservation {
            api_id: api_id.to_string(),
            param: param.to_string(),
            structure,
            data_type: value.element_type(),
            dims: value.shape().unwrap_or_default(),
            source: Provenance::ExampleCode,
        })
    }

    /// Nesting depth implied by `dims` (0 for scalars).
    pub fn dimension(&self) -> usize {
        self.dims.len()
    }

    /// The constraint fields this observation supports: structure, element
    /// type and dimension. Concrete lengths stay in the observation; they
    /// describe one example, not the parameter.
    pub fn to_constraint(&self) -> ParamConstraint {
        let mut c = ParamConstraint {
            structure: Some(Mined::new(vec![self.structure], Provenance::ExampleCode)),
            ..ParamConstraint::default()
        };
        if let Some(t) = self.data_type {
            c.data_type = Some(Mined::new(vec![t], Provenance::ExampleCode));
        }
        if self.structure != Structure::Scalar && !self.dims.is_empty() {
            c.dimension = Some(Mined::new(self.dims.len() as u32, Provenance::ExampleCode));
        }
        c
    }
}

/// Extracts concrete literal inputs bound to parameters of known APIs.
///
/// Arguments are bound by keyword or by position against the API's
/// signature. A bare variable argument is followed back to the latest
/// preceding assignment of a literal (`X = np.array([...])`). Anything else
/// yields no observation.
pub fn mine_example(code: &str, known: &BTreeMap<ApiId, ApiSpec>) -> Vec<ValueObservation> {
    if known.is_empty() {
        return Vec::new();
    }
    let (_, lex_err) = fragment::tokenize(code);
    if let Some(e) = lex_err {
        log::warn!("example fragment does not lex cleanly ({e}); no observations taken");
        return Vec::new();
    }
    let index = KnownApis::new(known.keys().cloned());
    let calls = resolve_calls(code, &index);
    let tokens = &calls.tokens;
    let assignments = fragment::scan_assignments(tokens);

    let mut out = Vec::new();
    for rc in &calls.resolved {
        let Some(spec) = known.get(&rc.api_id) else { continue };
        let site = &calls.sites[rc.site];
        let positional: Vec<_> = spec.bindable_params().filter(|p| !p.name.starts_with('*')).collect();
        let mut pos = 0;
        for arg in &site.args {
            let param = match &arg.keyword {
                Some(k) => spec.param(k).map(|p| p.name.clone()),
                None => {
                    let p = positional.get(pos).map(|p| p.name.clone());
                    pos += 1;
                    p
                }
            };
            let Some(param) = param else {
                log::debug!("{}: argument does not bind to a parameter", rc.api_id);
                continue;
            };
            let literal = fragment::parse_literal(tokens, arg.start, arg.end).or_else(|| {
                // A single name: follow it to its latest literal assignment.
                let single = arg.end == arg.start + 1 && tokens[arg.start].kind == TokenKind::Name;
                if !single {
                    return None;
                }
                let name = &tokens[arg.start].text;
                assignments
                    .iter().rfind(|a| &a.target == name && a.end <= site.token)
                    .and_then(|a| fragment::parse_literal(tokens, a.start, a.end))
            });
            if let Some(lit) = literal {
                if let Some(obs) = ValueObservation::from_value(&rc.api_id, &param, &lit.value, lit.array_wrapped) {
                    out.push(obs);
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ApiKind, Literal, ParamSpec};

    pub(crate) const FIG6: &str = "from sklearn.cluster import KMeans\nimport numpy as np\nX = np.array([[1, 2], [1, 4], [1, 0],\n    [10, 2], [10, 4], [10, 0]])\nkmeans = KMeans(n_clusters=2,\nrandom_state=0).fit(X)\nkmeans.predict([[0, 0], [12, 3]])\n";

    fn known() -> BTreeMap<ApiId, ApiSpec> {
        let ctor = ApiSpec {
            api_id: "KMeans".into(),
            kind: ApiKind::ClassConstructor,
            owner: None,
            params: vec![
                ParamSpec::optional("n_clusters", 0, Literal::Int(8)),
                ParamSpec::optional("random_state", 1, Literal::None),
            ],
        };
        let fit = ApiSpec {
            api_id: "fit".into(),
            kind: ApiKind::Method,
            owner: Some("KMeans".into()),
            params: vec![
                ParamSpec::required("X", 0),
                ParamSpec::optional("y", 1, Literal::None),
                ParamSpec::optional("sample_weight", 2, Literal::None),
            ],
        };
        let predict = ApiSpec {
            api_id: "predict".into(),
            kind: ApiKind::Method,
            owner: Some("KMeans".into()),
            params: vec![ParamSpec::required("X", 0)],
        };
        [ctor, fit, predict].into_iter().map(|s| (s.api_id.clone(), s)).collect()
    }

    #[test]
    fn fig6_fit_x_is_2d_integer_array() {
        let obs = mine_example(FIG6, &known());
        let fit_x = obs.iter().find(|o| o.api_id == "fit" && o.param == "X").unwrap();
        assert_eq!(fit_x.structure, Structure::ArrayLike);
        assert_eq!(fit_x.data_type, Some(DataType::Integer));
        assert_eq!(fit_x.dimension(), 2);
        assert_eq!(fit_x.dims, vec![6, 2]);
    }

    #[test]
    fn predict_literal_dims() {
        let obs = mine_example("kmeans.predict([[0, 0], [12, 3]])", &known());
        assert_eq!(obs.len(), 1);
        assert_eq!(obs[0].api_id, "predict");
        assert_eq!(obs[0].structure, Structure::ArrayLike);
        assert_eq!(obs[0].data_type, Some(DataType::Integer));
        assert_eq!(obs[0].dims, vec![2, 2]);
    }

    #[test]
    fn constructor_scalars_and_non_literals() {
        let obs = mine_example(FIG6, &known());
        let n = obs.iter().find(|o| o.param == "n_clusters").unwrap();
        assert_eq!(n.structure, Structure::Scalar);
        assert_eq!(n.data_type, Some(DataType::Integer));
        assert!(n.to_constraint().dimension.is_none());
        let obs = mine_example("kmeans.predict(load())", &known());
        assert!(obs.is_empty());
    }

    #[test]
    fn no_known_calls_or_broken_fragment() {
        assert!(mine_example("x = helper(1)\n", &known()).is_empty());
        assert!(mine_example("kmeans.predict([[0, 0]", &known()).is_empty());
    }
}
