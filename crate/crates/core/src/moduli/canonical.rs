use std::collections::BTreeMap;
use std::sync::Arc;

use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::datarep::{data_representation_with, DataRepOptions};
use crate::error::{Error, Result};
use crate::network::{forward_linear, NeuralNetwork, ThinRep};
use crate::quiver::{EdgeId, NetworkQuiver, VertexId};
use crate::{C64, ZERO_TOL};

/// `#E° − #Ṽ`: delooped edges minus hidden vertices.
pub fn moduli_dimension(nq: &NetworkQuiver) -> usize {
    nq.edge_count() - nq.hidden().len()
}

/// Hex sha256 over the vertices (id, kind, layer) and edges (id, source,
/// target) of the quiver, in declaration order.
pub fn quiver_hash(nq: &NetworkQuiver) -> String {
    let mut h = Sha256::new();
    for v in 0..nq.vertex_count() {
        h.update(format!(
            "v\t{}\t{:?}\t{}\n",
            nq.vertex_id(v),
            nq.kind(v),
            nq.layer(v)
        ));
    }
    for e in nq.quiver().edges() {
        h.update(format!(
            "e\t{}\t{}\t{}\n",
            e.id,
            nq.vertex_id(e.source),
            nq.vertex_id(e.target)
        ));
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

/// One chosen incoming edge per hidden vertex: the one with the smallest id.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GaugeForest {
    /// Hidden vertex → chosen edge.
    pub chosen: BTreeMap<VertexId, EdgeId>,
    /// Non-hidden vertices at the root of some tree, sorted.
    pub roots: Vec<VertexId>,
    edges: Vec<usize>,
}

impl GaugeForest {
    pub fn new(nq: &NetworkQuiver) -> Self {
        let mut chosen = BTreeMap::new();
        let mut edges = Vec::with_capacity(nq.hidden().len());
        let mut root_of = vec![usize::MAX; nq.vertex_count()];
        let mut roots = Vec::new();
        for &v in nq.hidden() {
            // incoming edges are sorted by id
            let e = nq.incoming(v)[0];
            let s = nq.edge(e).source;
            root_of[v] = if nq.is_hidden(s) { root_of[s] } else { s };
            roots.push(nq.vertex_id(root_of[v]).to_string());
            chosen.insert(nq.vertex_id(v).to_string(), nq.edge(e).id.clone());
            edges.push(e);
        }
        roots.sort();
        roots.dedup();
        Self {
            chosen,
            roots,
            edges,
        }
    }

    /// Delooped edge positions of the forest, aligned with `nq.hidden()`.
    pub(crate) fn edge_positions(&self) -> &[usize] {
        &self.edges
    }

    pub fn edge_ids(&self) -> Vec<&str> {
        let mut ids: Vec<&str> = self.chosen.values().map(String::as_str).collect();
        ids.sort();
        ids
    }
}

/// Canonical coordinates of an orbit: the non-forest weights of the
/// representative whose forest weights are all 1.
#[derive(Debug, Clone, PartialEq)]
pub struct ModuliPoint {
    pub quiver_hash: String,
    pub forest: GaugeForest,
    /// Sorted by edge id.
    pub coordinates: Vec<(EdgeId, C64)>,
}

impl ModuliPoint {
    pub fn values(&self) -> impl Iterator<Item = C64> + '_ {
        self.coordinates.iter().map(|(_, z)| *z)
    }

    pub fn dimension(&self) -> usize {
        self.coordinates.len()
    }

    /// Componentwise absolute comparison; false when the quivers differ.
    pub fn approx_eq(&self, other: &ModuliPoint, tol: f64) -> bool {
        self.quiver_hash == other.quiver_hash
            && self.coordinates.len() == other.coordinates.len()
            && self
                .coordinates
                .iter()
                .zip(&other.coordinates)
                .all(|((a, x), (b, y))| a == b && (x - y).norm() <= tol)
    }

    /// `{"quiver_hash", "forest": [edge ids], "coordinates": [[id, re, im]]}`.
    pub fn to_json(&self) -> Value {
        json!({
            "quiver_hash": self.quiver_hash,
            "forest": self.forest.edge_ids(),
            "coordinates": self
                .coordinates
                .iter()
                .map(|(e, z)| json!([e, z.re, z.im]))
                .collect::<Vec<_>>(),
        })
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CanonicalOptions {
    /// Replace a vanishing forest weight `w` by `w + ε` instead of failing.
    pub perturb: Option<f64>,
}

/// Default `ε` for [`CanonicalOptions::perturb`].
pub const PERTURB_EPS: f64 = 1e-9;

pub fn canonicalize(rep: &ThinRep) -> Result<ModuliPoint> {
    canonicalize_with(rep, CanonicalOptions::default())
}

/// The change of basis that sets every forest weight to 1, applied in
/// topological order: `τ_t = τ_s / W_α` for the chosen edge `α: s → t`.
pub(crate) fn gauge_scales(
    rep: &ThinRep,
    forest: &GaugeForest,
    opts: CanonicalOptions,
) -> Result<Vec<C64>> {
    let nq = rep.quiver();
    let w = rep.weights();
    let mut tau = vec![C64::new(1.0, 0.0); nq.vertex_count()];
    for (&v, &e) in nq.hidden().iter().zip(forest.edge_positions()) {
        let mut we = w[e];
        if we.norm() <= ZERO_TOL {
            match opts.perturb {
                Some(eps) => we += eps,
                None => {
                    return Err(Error::ZeroOnForestEdge {
                        edge: nq.edge(e).id.clone(),
                        dead_source: None,
                    })
                }
            }
        }
        tau[v] = tau[nq.edge(e).source] / we;
    }
    Ok(tau)
}

pub fn canonicalize_with(rep: &ThinRep, opts: CanonicalOptions) -> Result<ModuliPoint> {
    let nq = rep.quiver();
    let forest = GaugeForest::new(nq);
    let tau = gauge_scales(rep, &forest, opts)?;
    let mut in_forest = vec![false; nq.edge_count()];
    for &e in forest.edge_positions() {
        in_forest[e] = true;
    }
    let mut coordinates: Vec<(EdgeId, C64)> = rep
        .weights()
        .iter()
        .enumerate()
        .filter(|(i, _)| !in_forest[*i])
        .map(|(i, w)| {
            let e = nq.edge(i);
            (e.id.clone(), w * tau[e.target] / tau[e.source])
        })
        .collect();
    coordinates.sort_by(|a, b| a.0.cmp(&b.0));
    Ok(ModuliPoint {
        quiver_hash: quiver_hash(nq),
        forest,
        coordinates,
    })
}

/// Whether `a` and `b` have the same canonical coordinates within `tol`.
pub fn orbit_equal(a: &ThinRep, b: &ThinRep, tol: f64) -> Result<bool> {
    if a.quiver() != b.quiver() {
        return Err(Error::QuiverMismatch);
    }
    Ok(canonicalize(a)?.approx_eq(&canonicalize(b)?, tol))
}

/// The canonical representative of `p` on `nq`: forest weights 1,
/// coordinates elsewhere.
pub fn representative(p: &ModuliPoint, nq: &Arc<NetworkQuiver>) -> Result<ThinRep> {
    if p.quiver_hash != quiver_hash(nq) {
        return Err(Error::QuiverMismatch);
    }
    let mut map: BTreeMap<String, C64> = p.coordinates.iter().cloned().collect();
    for e in p.forest.chosen.values() {
        map.insert(e.clone(), C64::new(1.0, 0.0));
    }
    ThinRep::from_map(nq.clone(), &map)
}

/// `Ψ̂(p) = Ψ(V, 1)(1^d)` for the canonical representative `V` of `p`.
pub fn psi_hat(p: &ModuliPoint, nq: &Arc<NetworkQuiver>) -> Result<Vec<C64>> {
    let rep = representative(p, nq)?;
    let ones = vec![C64::new(1.0, 0.0); nq.input_dim()];
    Ok(forward_linear(&rep, &ones)?.into_output())
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ModuliMapOptions {
    pub data: DataRepOptions,
    pub canonical: CanonicalOptions,
}

/// `φ(W, f)(x)`: the canonical coordinates of the data representation.
pub fn moduli_map(net: &NeuralNetwork, x: &[C64]) -> Result<ModuliPoint> {
    moduli_map_with(net, x, ModuliMapOptions::default())
}

/// As [`moduli_map`]. A vanishing forest weight caused by a hidden source whose
/// activation output is zero names that source in the error.
pub fn moduli_map_with(
    net: &NeuralNetwork,
    x: &[C64],
    opts: ModuliMapOptions,
) -> Result<ModuliPoint> {
    let dr = data_representation_with(net, x, opts.data)?;
    canonicalize_with(&dr.rep, opts.canonical).map_err(|err| match err {
        Error::ZeroOnForestEdge { edge, .. } => {
            let nq = net.quiver();
            let i = nq.edge_position(&edge).expect("forest edge exists");
            let s = nq.edge(i).source;
            // a nonzero original weight can only vanish through a zero activation output
            let dead = nq.is_hidden(s) && net.rep().weights()[i].norm() > ZERO_TOL;
            Error::ZeroOnForestEdge {
                edge,
                dead_source: dead.then(|| nq.vertex_id(s).to_string()),
            }
        }
        other => other,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PruningProfile {
    /// Fraction of samples on which `|(W_x^f)_ε| < threshold`, per edge.
    pub frequency: BTreeMap<EdgeId, f64>,
    /// Edges with frequency at least 0.5, sorted.
    pub prunable: Vec<EdgeId>,
}

/// How often each edge of the data representation is (near) zero across
/// `dataset`. Max-pool vertices use indicator mode.
pub fn pruning_profile(
    net: &NeuralNetwork,
    dataset: &[Vec<C64>],
    threshold: f64,
) -> Result<PruningProfile> {
    let nq = net.quiver();
    let mut counts = vec![0usize; nq.edge_count()];
    let opts = DataRepOptions {
        max_pool_indicator: true,
    };
    for x in dataset {
        let dr = data_representation_with(net, x, opts)?;
        for (c, w) in counts.iter_mut().zip(dr.rep.weights()) {
            if w.norm() < threshold {
                *c += 1;
            }
        }
    }
    let n = dataset.len().max(1) as f64;
    let frequency: BTreeMap<EdgeId, f64> = counts
        .iter()
        .enumerate()
        .map(|(i, &c)| (nq.edge(i).id.clone(), c as f64 / n))
        .collect();
    let prunable = frequency
        .iter()
        .filter(|(_, &f)| f >= 0.5)
        .map(|(e, _)| e.clone())
        .collect();
    Ok(PruningProfile {
        frequency,
        prunable,
    })
}
