//! Instance files.
//!
//! ```text
//! {
//!   "n": 3,
//!   "edges": [ { "verts": [0, 1, 2], "w": "1" } ],
//!   "demand": ["1", "0", "-1"]
//! }
//! ```
//!
//! Scalars are strings `"a"`, `"a*2^-q"` or exact decimals such as `"0.1875"`,
//! or JSON integers. Float literals and decimals that are not dyadic are
//! rejected. A missing `demand` means the zero vector.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::dyadic::Dyadic;
use crate::hypergraph::{Demand, Edge, Hypergraph, InstanceError};

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("malformed instance file: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Instance(#[from] InstanceError),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeRecord {
    pub verts: Vec<usize>,
    pub w: Dyadic,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    pub n: usize,
    pub edges: Vec<EdgeRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub demand: Option<Vec<Dyadic>>,
}

impl InstanceFile {
    pub fn from_parts(h: &Hypergraph, s: &Demand) -> Self {
        Self {
            n: h.vertex_count(),
            edges: h
                .edges()
                .iter()
                .map(|e| EdgeRecord {
                    verts: e.vertices.clone(),
                    w: e.weight.clone(),
                })
                .collect(),
            demand: Some(s.0.clone()),
        }
    }

    /// Builds the hypergraph; a missing demand becomes zero. Length is checked by validation.
    pub fn into_parts(self) -> Result<(Hypergraph, Demand), InstanceError> {
        let h = Hypergraph::new(
            self.n,
            self.edges
                .into_iter()
                .map(|e| Edge {
                    vertices: e.verts,
                    weight: e.w,
                })
                .collect(),
        )?;
        let s = match self.demand {
            Some(values) => Demand(values),
            None => Demand::zeros(h.vertex_count()),
        };
        Ok((h, s))
    }

    /// Canonical text: compact JSON with canonical dyadic strings.
    pub fn to_canonical_string(&self) -> String {
        serde_json::to_string(self).expect("instance serialization is infallible")
    }

    pub fn sha256_hex(&self) -> String {
        hex::encode(Sha256::digest(self.to_canonical_string().as_bytes()))
    }
}

pub fn parse_instance(text: &str) -> Result<(Hypergraph, Demand), FormatError> {
    let file: InstanceFile = serde_json::from_str(text)?;
    Ok(file.into_parts()?)
}

pub fn write_instance(h: &Hypergraph, s: &Demand) -> String {
    InstanceFile::from_parts(h, s).to_canonical_string()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_mixed_scalar_forms() {
        let text = r#"{"n":3,"edges":[{"verts":[0,1,2],"w":"3*2^-4"},{"verts":[1,2],"w":"0.1875"},{"verts":[0,2],"w":7}],"demand":["1",0,"-1"]}"#;
        let (h, s) = parse_instance(text).unwrap();
        assert_eq!(h.edge(0).weight, Dyadic::new(3, 4));
        assert_eq!(h.edge(1).weight, Dyadic::new(3, 4));
        assert_eq!(h.edge(2).weight, Dyadic::from_int(7));
        assert_eq!(s.0[2], Dyadic::from_int(-1));
    }

    #[test]
    fn rejects_floats_and_non_dyadic_decimals() {
        assert!(parse_instance(r#"{"n":2,"edges":[{"verts":[0,1],"w":0.5}]}"#).is_err());
        assert!(parse_instance(r#"{"n":2,"edges":[{"verts":[0,1],"w":"0.1"}]}"#).is_err());
        assert!(matches!(
            parse_instance(r#"{"n":2,"edges":[{"verts":[0],"w":"1"}]}"#),
            Err(FormatError::Instance(InstanceError::EmptyEdge { edge: 0 }))
        ));
    }

    #[test]
    fn canonical_round_trip_is_bit_exact() {
        let text = r#"{"n":3,"edges":[{"verts":[2,0,1],"w":"0.375"}],"demand":["-0.5","1","-0.5"]}"#;
        let (h, s) = parse_instance(text).unwrap();
        let canonical = write_instance(&h, &s);
        assert_eq!(
            canonical,
            r#"{"n":3,"edges":[{"verts":[2,0,1],"w":"3*2^-3"}],"demand":["-1*2^-1","1","-1*2^-1"]}"#
        );
        let (h2, s2) = parse_instance(&canonical).unwrap();
        assert_eq!((h2.clone(), s2.clone()), (h, s));
        assert_eq!(write_instance(&h2, &s2), canonical);
    }

    #[test]
    fn missing_demand_is_zero() {
        let (_, s) = parse_instance(r#"{"n":2,"edges":[{"verts":[0,1],"w":"1"}]}"#).unwrap();
        assert_eq!(s, Demand::zeros(2));
    }
}
