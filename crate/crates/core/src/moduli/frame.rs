use std::collections::{BTreeMap, HashMap, HashSet};
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::network::ThinRep;
use crate::quiver::{hidden_quiver, EdgeId, HiddenQuiver, NetworkQuiver, VertexId, VertexKind};
use crate::{C64, ZERO_TOL};

/// A thin representation of the hidden quiver with an input framing `ell`
/// and an output framing `h`.
#[derive(Debug, Clone, PartialEq)]
pub struct DoubleFramedRep {
    parent: Arc<NetworkQuiver>,
    hidden: HiddenQuiver,
    /// Aligned with the edges of `hidden.quiver`.
    pub weights: Vec<C64>,
    /// Framing sources in coordinate order: inputs, then (if folded) biases.
    pub framing_sources: Vec<VertexId>,
    /// One vector per hidden vertex fed by a framing source.
    pub ell: BTreeMap<VertexId, Vec<C64>>,
    /// One vector (over output vertices) per hidden vertex feeding an output.
    pub h: BTreeMap<VertexId, Vec<C64>>,
    /// Edges from framing sources straight into outputs, carried unchanged.
    pub passthrough: BTreeMap<EdgeId, C64>,
}

impl PartialEq for HiddenQuiver {
    fn eq(&self, other: &Self) -> bool {
        self.quiver == other.quiver && self.parent_edges == other.parent_edges
    }
}

impl DoubleFramedRep {
    pub fn hidden(&self) -> &HiddenQuiver {
        &self.hidden
    }

    pub fn parent(&self) -> &Arc<NetworkQuiver> {
        &self.parent
    }

    /// Builds a framed representation directly. `weights` follow the edge
    /// order of the hidden quiver of `parent`; missing framing entries are zero.
    pub fn from_parts(
        parent: Arc<NetworkQuiver>,
        weights: Vec<C64>,
        ell: BTreeMap<VertexId, Vec<C64>>,
        h: BTreeMap<VertexId, Vec<C64>>,
        fold_bias: bool,
    ) -> Result<Self> {
        let hidden = hidden_quiver(&parent);
        if weights.len() != hidden.quiver.edge_count() {
            return Err(Error::DimensionMismatch {
                expected: hidden.quiver.edge_count(),
                got: weights.len(),
            });
        }
        let framing_sources = framing_sources(&parent, fold_bias);
        if let Some(v) = ell
            .keys()
            .chain(h.keys())
            .find(|v| hidden.quiver.vertex(v).is_none())
        {
            return Err(Error::VertexSetMismatch(format!("`{v}` is not hidden")));
        }
        for vec in ell.values() {
            if vec.len() != framing_sources.len() {
                return Err(Error::DimensionMismatch {
                    expected: framing_sources.len(),
                    got: vec.len(),
                });
            }
        }
        for vec in h.values() {
            if vec.len() != parent.output_dim() {
                return Err(Error::DimensionMismatch {
                    expected: parent.output_dim(),
                    got: vec.len(),
                });
            }
        }
        Ok(Self {
            parent,
            hidden,
            weights,
            framing_sources,
            ell,
            h,
            passthrough: BTreeMap::new(),
        })
    }

    fn ell_at(&self, v: &str) -> bool {
        self.ell
            .get(v)
            .is_some_and(|l| l.iter().any(|z| z.norm() > ZERO_TOL))
    }

    fn h_at(&self, v: &str) -> bool {
        self.h
            .get(v)
            .is_some_and(|l| l.iter().any(|z| z.norm() > ZERO_TOL))
    }

    /// Per hidden vertex (in hidden-quiver order): nonzero input framing.
    pub(crate) fn ell_support(&self) -> Vec<bool> {
        self.hidden
            .quiver
            .vertices()
            .iter()
            .map(|v| self.ell_at(v))
            .collect()
    }

    /// Per hidden vertex: nonzero output framing.
    pub(crate) fn h_support(&self) -> Vec<bool> {
        self.hidden
            .quiver
            .vertices()
            .iter()
            .map(|v| self.h_at(v))
            .collect()
    }

    /// Successors along nonzero hidden edges, by hidden-quiver vertex index.
    pub(crate) fn successors(&self) -> Vec<Vec<usize>> {
        let q = &self.hidden.quiver;
        let mut out = vec![Vec::new(); q.vertex_count()];
        for (e, w) in q.edges().iter().zip(&self.weights) {
            if w.norm() > ZERO_TOL {
                out[e.source].push(e.target);
            }
        }
        out
    }
}

fn framing_sources(nq: &NetworkQuiver, fold_bias: bool) -> Vec<VertexId> {
    let mut out: Vec<VertexId> = nq
        .inputs()
        .iter()
        .map(|&v| nq.vertex_id(v).to_string())
        .collect();
    if fold_bias {
        out.extend(nq.biases().iter().map(|&v| nq.vertex_id(v).to_string()));
    }
    out
}

/// Splits a representation of the delooped quiver into `(ell, W̃, h)`.
///
/// With `fold_bias`, bias vertices are framed like extra inputs; otherwise a
/// bias vertex is an error.
pub fn double_frame(rep: &ThinRep, fold_bias: bool) -> Result<DoubleFramedRep> {
    let nq = rep.quiver();
    if !fold_bias {
        if let Some(&b) = nq.biases().first() {
            return Err(Error::UnfoldedBias(nq.vertex_id(b).to_string()));
        }
    }
    let hidden = hidden_quiver(nq);
    let sources = framing_sources(nq, fold_bias);
    let source_pos: HashMap<&str, usize> = sources
        .iter()
        .enumerate()
        .map(|(i, s)| (s.as_str(), i))
        .collect();
    let output_pos: HashMap<usize, usize> = nq
        .outputs()
        .iter()
        .enumerate()
        .map(|(i, &v)| (v, i))
        .collect();
    let w = rep.weights();

    let mut seen = HashSet::new();
    let mut ell: BTreeMap<VertexId, Vec<C64>> = BTreeMap::new();
    let mut h: BTreeMap<VertexId, Vec<C64>> = BTreeMap::new();
    let mut passthrough = BTreeMap::new();
    let zero = C64::new(0.0, 0.0);
    for (i, e) in nq.delooped().edges().iter().enumerate() {
        let (s, t) = (nq.kind(e.source), nq.kind(e.target));
        let framing = !s.is_hidden() || !t.is_hidden();
        if framing && !seen.insert((e.source, e.target)) {
            return Err(Error::ParallelFramingEdges(
                nq.vertex_id(e.source).to_string(),
                nq.vertex_id(e.target).to_string(),
            ));
        }
        match (s.is_hidden(), t == VertexKind::Output) {
            (true, false) => {}
            (false, false) => {
                let row = ell
                    .entry(nq.vertex_id(e.target).to_string())
                    .or_insert_with(|| vec![zero; sources.len()]);
                row[source_pos[nq.vertex_id(e.source)]] = w[i];
            }
            (true, true) => {
                let col = h
                    .entry(nq.vertex_id(e.source).to_string())
                    .or_insert_with(|| vec![zero; nq.output_dim()]);
                col[output_pos[&e.target]] = w[i];
            }
            (false, true) => {
                passthrough.insert(e.id.clone(), w[i]);
            }
        }
    }
    let weights = hidden.parent_edges.iter().map(|&i| w[i]).collect();
    Ok(DoubleFramedRep {
        parent: nq.clone(),
        hidden,
        weights,
        framing_sources: sources,
        ell,
        h,
        passthrough,
    })
}

/// Inverse of [`double_frame`].
pub fn undouble_frame(dfr: &DoubleFramedRep) -> Result<ThinRep> {
    let nq = &dfr.parent;
    let mut w = vec![C64::new(0.0, 0.0); nq.edge_count()];
    for (&i, &x) in dfr.hidden.parent_edges.iter().zip(&dfr.weights) {
        w[i] = x;
    }
    let mut edge_between: HashMap<(&str, &str), usize> = HashMap::new();
    for (i, e) in nq.delooped().edges().iter().enumerate() {
        edge_between.insert((nq.vertex_id(e.source), nq.vertex_id(e.target)), i);
    }
    let mut place = |s: &str, t: &str, value: C64| -> Result<()> {
        match edge_between.get(&(s, t)) {
            Some(&i) => w[i] = value,
            None if value.norm() > ZERO_TOL => {
                return Err(Error::FramingWithoutEdge(format!("{s}->{t}")))
            }
            None => {}
        }
        Ok(())
    };
    for (v, row) in &dfr.ell {
        for (s, value) in dfr.framing_sources.iter().zip(row) {
            place(s, v, *value)?;
        }
    }
    for (v, col) in &dfr.h {
        for (&o, value) in nq.outputs().iter().zip(col) {
            place(v, nq.vertex_id(o), *value)?;
        }
    }
    for (id, value) in &dfr.passthrough {
        let i = nq
            .edge_position(id)
            .ok_or_else(|| Error::UnknownEdge(id.clone()))?;
        w[i] = *value;
    }
    ThinRep::new(nq.clone(), w)
}
