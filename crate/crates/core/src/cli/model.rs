//! The JSON model file.
//!
//! Explicit form:
//!
//! ```json
//! {
//!   "quiver": {"vertices": [{"id": "a", "kind": "input", "layer": 0}, ...],
//!              "edges": [{"id": "a->h", "source": "a", "target": "h"}, ...]},
//!   "weights": {"a->h": [0.5, 0.0], ...},
//!   "activations": {"h": "relu", "g": {"scaled": {"base": "tanh", "tau": [2.0, 0.0]}}},
//!   "pool_rules": {"m": "min"},
//!   "weight_architecture": {"tie_classes": [["e1", "e2"]], "fixed": {"e3": [1.0, 0.0]}}
//! }
//! ```
//!
//! Hidden vertices list their loop among the edges. Builder form:
//! `{"layers": [LayerSpec, ...], "d": 2, "k": 1, "weights": {param: [re, im]}, "seed": 0}`;
//! parameters without a value are drawn from `seed`.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::layers::{build_network, LayerSpec, WeightArchitecture};
use crate::network::{Activation, NeuralNetwork, PoolRule, ThinRep};
use crate::quiver::{validate_network_quiver, NetworkQuiver, Quiver, VertexKind};
use crate::C64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VertexEntry {
    pub id: String,
    pub kind: VertexKind,
    pub layer: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeEntry {
    pub id: String,
    pub source: String,
    pub target: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuiverEntry {
    pub vertices: Vec<VertexEntry>,
    pub edges: Vec<EdgeEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExplicitModel {
    pub quiver: QuiverEntry,
    pub weights: BTreeMap<String, C64>,
    #[serde(default)]
    pub activations: BTreeMap<String, Activation>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub pool_rules: BTreeMap<String, PoolRule>,
    #[serde(default, skip_serializing_if = "WeightArchitecture::is_empty")]
    pub weight_architecture: WeightArchitecture,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BuilderModel {
    pub layers: Vec<LayerSpec>,
    pub d: usize,
    pub k: usize,
    #[serde(default)]
    pub weights: BTreeMap<String, C64>,
    /// Overrides the default activations (ReLU, Identity after pooling/batch norm).
    #[serde(default)]
    pub activations: BTreeMap<String, Activation>,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ModelFile {
    Explicit(ExplicitModel),
    Builder(BuilderModel),
}

/// A parsed model: the network and its weight architecture.
#[derive(Debug, Clone)]
pub struct Model {
    pub net: NeuralNetwork,
    pub arch: WeightArchitecture,
}

impl QuiverEntry {
    pub fn to_network_quiver(&self) -> Result<NetworkQuiver> {
        let mut q = Quiver::new();
        let mut kinds = HashMap::new();
        let mut layers = HashMap::new();
        for v in &self.vertices {
            q.add_vertex(v.id.clone())?;
            kinds.insert(v.id.clone(), v.kind);
            layers.insert(v.id.clone(), v.layer);
        }
        for e in &self.edges {
            q.add_edge_by_id(e.id.clone(), &e.source, &e.target)?;
        }
        validate_network_quiver(q, &kinds, &layers)
    }

    pub fn from_network_quiver(nq: &NetworkQuiver) -> Self {
        Self {
            vertices: (0..nq.vertex_count())
                .map(|v| VertexEntry {
                    id: nq.vertex_id(v).to_string(),
                    kind: nq.kind(v),
                    layer: nq.layer(v),
                })
                .collect(),
            edges: nq
                .quiver()
                .edges()
                .iter()
                .map(|e| EdgeEntry {
                    id: e.id.clone(),
                    source: nq.vertex_id(e.source).to_string(),
                    target: nq.vertex_id(e.target).to_string(),
                })
                .collect(),
        }
    }
}

impl ModelFile {
    pub fn parse(text: &str) -> Result<Self> {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        // pick the form explicitly so field errors are reported against it
        let explicit = value.get("quiver").is_some();
        let parsed = if explicit {
            serde_json::from_value(value).map(ModelFile::Explicit)
        } else {
            serde_json::from_value(value).map(ModelFile::Builder)
        };
        parsed.map_err(|e| {
            let form = if explicit {
                "explicit model"
            } else {
                "builder model"
            };
            Error::Parse(format!("{form}: {e}"))
        })
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| match e {
            Error::Parse(m) => Error::Parse(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn into_model(self) -> Result<Model> {
        match self {
            ModelFile::Explicit(m) => {
                let nq = Arc::new(m.quiver.to_network_quiver()?);
                let rep = ThinRep::from_map(nq, &m.weights)?;
                let mut net = NeuralNetwork::new(rep, &m.activations)?;
                for (v, rule) in m.pool_rules {
                    net = net.with_pool_rule(&v, rule)?;
                }
                m.weight_architecture.validate(net.quiver())?;
                Ok(Model {
                    net,
                    arch: m.weight_architecture,
                })
            }
            ModelFile::Builder(m) => {
                let built = build_network(&m.layers, m.d, m.k)?;
                for label in m.weights.keys() {
                    if !built.params.contains_key(label) {
                        return Err(Error::UnknownEdge(label.clone()));
                    }
                }
                let mut rng = ChaCha8Rng::seed_from_u64(m.seed);
                let random = built.random_rep(&mut rng);
                let mut values: BTreeMap<String, C64> = built
                    .params
                    .iter()
                    .map(|(label, p)| {
                        (
                            label.clone(),
                            random.weight(&p.edges[0]).expect("edge exists"),
                        )
                    })
                    .collect();
                values.extend(m.weights);
                let rep = built.rep_with(&values)?;
                let mut activations = built.activations.clone();
                activations.extend(m.activations);
                Ok(Model {
                    net: NeuralNetwork::new(rep, &activations)?,
                    arch: built.architecture,
                })
            }
        }
    }
}

impl Model {
    pub fn read(path: &Path) -> Result<Self> {
        ModelFile::read(path)?.into_model()
    }

    pub fn to_file(&self) -> ModelFile {
        let nq = self.net.quiver();
        let pool_rules = self
            .net
            .pool_rules()
            .into_iter()
            .filter(|(_, r)| *r != PoolRule::Max)
            .collect();
        ModelFile::Explicit(ExplicitModel {
            quiver: QuiverEntry::from_network_quiver(nq),
            weights: self.net.rep().to_map(),
            activations: self.net.activations(),
            pool_rules,
            weight_architecture: self.arch.clone(),
        })
    }

    /// Pretty JSON with sorted keys and a trailing newline.
    pub fn to_json_string(&self) -> String {
        let value = serde_json::to_value(self.to_file()).expect("model serializes");
        let mut s = serde_json::to_string_pretty(&value).expect("value serializes");
        s.push('\n');
        s
    }
}
