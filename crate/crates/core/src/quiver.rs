//! Quivers, network quivers and the subquivers derived from them.
//!
//! A [`Quiver`] is a directed multigraph with string identifiers. A
//! [`NetworkQuiver`] adds vertex kinds and a layering, and is only obtainable
//! through [`validate_network_quiver`] (or [`NetworkQuiverBuilder`]), so every
//! value of that type satisfies the network-quiver axioms.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type VertexId = String;
pub type EdgeId = String;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Edge {
    pub id: EdgeId,
    pub source: usize,
    pub target: usize,
}

impl Edge {
    pub fn is_loop(&self) -> bool {
        self.source == self.target
    }
}

/// A directed multigraph. Loops and parallel edges are allowed.
#[derive(Debug, Clone, Default)]
pub struct Quiver {
    vertices: Vec<VertexId>,
    edges: Vec<Edge>,
    vertex_index: HashMap<VertexId, usize>,
    edge_index: HashMap<EdgeId, usize>,
}

impl PartialEq for Quiver {
    fn eq(&self, other: &Self) -> bool {
        self.vertices == other.vertices && self.edges == other.edges
    }
}

impl Quiver {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a quiver from vertex ids and `(edge id, source id, target id)` triples.
    pub fn from_parts<V, E, S>(vertices: V, edges: E) -> Result<Self>
    where
        V: IntoIterator,
        V::Item: Into<String>,
        E: IntoIterator<Item = (S, S, S)>,
        S: Into<String>,
    {
        let mut q = Quiver::new();
        for v in vertices {
            q.add_vertex(v)?;
        }
        for (id, s, t) in edges {
            let (s, t) = (s.into(), t.into());
            q.add_edge_by_id(id, &s, &t)?;
        }
        Ok(q)
    }

    pub fn add_vertex(&mut self, id: impl Into<String>) -> Result<usize> {
        let id = id.into();
        if self.vertex_index.contains_key(&id) {
            return Err(Error::DuplicateId(id));
        }
        let idx = self.vertices.len();
        self.vertex_index.insert(id.clone(), idx);
        self.vertices.push(id);
        Ok(idx)
    }

    pub fn add_edge(
        &mut self,
        id: impl Into<String>,
        source: usize,
        target: usize,
    ) -> Result<usize> {
        let id = id.into();
        if self.edge_index.contains_key(&id) {
            return Err(Error::DuplicateId(id));
        }
        for v in [source, target] {
            if v >= self.vertices.len() {
                return Err(Error::UnknownVertex {
                    edge: id,
                    vertex: format!("#{v}"),
                });
            }
        }
        let idx = self.edges.len();
        self.edge_index.insert(id.clone(), idx);
        self.edges.push(Edge { id, source, target });
        Ok(idx)
    }

    pub fn add_edge_by_id(
        &mut self,
        id: impl Into<String>,
        source: &str,
        target: &str,
    ) -> Result<usize> {
        let id = id.into();
        let lookup = |v: &str| {
            self.vertex(v).ok_or_else(|| Error::UnknownVertex {
                edge: id.clone(),
                vertex: v.to_string(),
            })
        };
        let (s, t) = (lookup(source)?, lookup(target)?);
        self.add_edge(id, s, t)
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn loop_count(&self) -> usize {
        self.edges.iter().filter(|e| e.is_loop()).count()
    }

    pub fn vertices(&self) -> &[VertexId] {
        &self.vertices
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn vertex_id(&self, idx: usize) -> &str {
        &self.vertices[idx]
    }

    pub fn vertex(&self, id: &str) -> Option<usize> {
        self.vertex_index.get(id).copied()
    }

    pub fn edge(&self, idx: usize) -> &Edge {
        &self.edges[idx]
    }

    pub fn edge_position(&self, id: &str) -> Option<usize> {
        self.edge_index.get(id).copied()
    }

    /// The same quiver with every loop removed. Edge ids and relative order are kept.
    pub fn without_loops(&self) -> Quiver {
        let mut q = Quiver {
            vertices: self.vertices.clone(),
            vertex_index: self.vertex_index.clone(),
            ..Quiver::default()
        };
        for e in self.edges.iter().filter(|e| !e.is_loop()) {
            q.edge_index.insert(e.id.clone(), q.edges.len());
            q.edges.push(e.clone());
        }
        q
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VertexKind {
    Input,
    Bias,
    Hidden,
    Output,
    MaxPool,
}

impl VertexKind {
    pub fn is_source(self) -> bool {
        matches!(self, VertexKind::Input | VertexKind::Bias)
    }

    /// Hidden in the sense of the change-of-basis group: plain hidden and max-pool vertices.
    pub fn is_hidden(self) -> bool {
        matches!(self, VertexKind::Hidden | VertexKind::MaxPool)
    }
}

impl fmt::Display for VertexKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            VertexKind::Input => "input",
            VertexKind::Bias => "bias",
            VertexKind::Hidden => "hidden",
            VertexKind::Output => "output",
            VertexKind::MaxPool => "max_pool",
        };
        f.write_str(s)
    }
}

/// A quiver satisfying the network-quiver axioms, together with the derived
/// data every later stage needs (delooped quiver, evaluation order, adjacency).
#[derive(Debug, Clone)]
pub struct NetworkQuiver {
    quiver: Quiver,
    delooped: Quiver,
    kinds: Vec<VertexKind>,
    layers: Vec<usize>,
    order: Vec<usize>,
    // delooped edge positions, sorted by edge id
    incoming: Vec<Vec<usize>>,
    outgoing: Vec<Vec<usize>>,
    inputs: Vec<usize>,
    outputs: Vec<usize>,
    biases: Vec<usize>,
    hidden: Vec<usize>,
}

impl PartialEq for NetworkQuiver {
    fn eq(&self, other: &Self) -> bool {
        self.quiver == other.quiver && self.kinds == other.kinds && self.layers == other.layers
    }
}

/// Checks the network-quiver axioms and returns the validated quiver, or the
/// first violated axiom.
///
/// `kinds` and `layers` must name every vertex of `q`.
pub fn validate_network_quiver(
    q: Quiver,
    kinds: &HashMap<VertexId, VertexKind>,
    layers: &HashMap<VertexId, usize>,
) -> Result<NetworkQuiver> {
    let n = q.vertex_count();
    let mut kind_vec = Vec::with_capacity(n);
    let mut layer_vec = Vec::with_capacity(n);
    for v in q.vertices() {
        let kind = kinds.get(v).copied().ok_or_else(|| Error::KindMismatch {
            vertex: v.clone(),
            declared: "nothing".into(),
            reason: "no kind declared".into(),
        })?;
        let layer = layers.get(v).copied().ok_or_else(|| Error::KindMismatch {
            vertex: v.clone(),
            declared: kind.to_string(),
            reason: "no layer declared".into(),
        })?;
        kind_vec.push(kind);
        layer_vec.push(layer);
    }

    let mut loops = vec![0usize; n];
    for e in q.edges() {
        if e.is_loop() {
            loops[e.source] += 1;
        }
    }
    // Sources and sinks: no loops, and sources take no incoming edges.
    for (v, &kind) in kind_vec.iter().enumerate() {
        let id = q.vertex_id(v);
        if matches!(
            kind,
            VertexKind::Input | VertexKind::Bias | VertexKind::Output
        ) && loops[v] > 0
        {
            return Err(Error::LoopOnSourceOrSink(id.to_string()));
        }
    }
    for e in q.edges().iter().filter(|e| !e.is_loop()) {
        if kind_vec[e.target].is_source() {
            return Err(Error::LoopOnSourceOrSink(q.vertex_id(e.target).to_string()));
        }
        if kind_vec[e.source] == VertexKind::Output {
            return Err(Error::LoopOnSourceOrSink(q.vertex_id(e.source).to_string()));
        }
    }
    for (v, &kind) in kind_vec.iter().enumerate() {
        if kind.is_hidden() && loops[v] != 1 {
            return Err(Error::MissingHiddenLoop {
                vertex: q.vertex_id(v).to_string(),
                found: loops[v],
            });
        }
    }

    for e in q.edges().iter().filter(|e| !e.is_loop()) {
        let (ls, lt) = (layer_vec[e.source], layer_vec[e.target]);
        if lt < ls {
            return Err(Error::BackwardEdge(e.id.clone()));
        }
        if lt == ls && kind_vec[e.source] != VertexKind::Bias {
            return Err(Error::IntraLayerEdge(e.id.clone()));
        }
    }

    if !kind_vec.iter().any(|k| k.is_hidden()) {
        return Err(Error::NoHiddenVertices);
    }
    if !kind_vec.contains(&VertexKind::Input) || !kind_vec.contains(&VertexKind::Output) {
        return Err(Error::MissingInputOrOutput);
    }

    let delooped = q.without_loops();
    let mut nq = NetworkQuiver {
        incoming: vec![Vec::new(); n],
        outgoing: vec![Vec::new(); n],
        order: Vec::new(),
        inputs: Vec::new(),
        outputs: Vec::new(),
        biases: Vec::new(),
        hidden: Vec::new(),
        quiver: q,
        delooped,
        kinds: kind_vec,
        layers: layer_vec,
    };
    for (i, e) in nq.delooped.edges().iter().enumerate() {
        nq.incoming[e.target].push(i);
        nq.outgoing[e.source].push(i);
    }
    let delooped = &nq.delooped;
    for list in nq.incoming.iter_mut().chain(nq.outgoing.iter_mut()) {
        list.sort_by(|&a, &b| delooped.edge(a).id.cmp(&delooped.edge(b).id));
    }
    check_kinds(&nq)?;
    nq.order = kahn_order(&nq)?;
    for (v, kind) in nq.kinds.iter().enumerate() {
        match kind {
            VertexKind::Input => nq.inputs.push(v),
            VertexKind::Output => nq.outputs.push(v),
            VertexKind::Bias => nq.biases.push(v),
            _ => {}
        }
    }
    nq.hidden = nq
        .order
        .iter()
        .copied()
        .filter(|&v| nq.kinds[v].is_hidden())
        .collect();
    validate_layer_placement(&nq)?;
    Ok(nq)
}

fn mismatch(nq: &NetworkQuiver, v: usize, reason: &str) -> Error {
    Error::KindMismatch {
        vertex: nq.quiver.vertex_id(v).to_string(),
        declared: nq.kinds[v].to_string(),
        reason: reason.to_string(),
    }
}

fn check_kinds(nq: &NetworkQuiver) -> Result<()> {
    for (v, &kind) in nq.kinds.iter().enumerate() {
        let (ins, outs) = (nq.incoming[v].len(), nq.outgoing[v].len());
        match kind {
            VertexKind::Input | VertexKind::Bias if outs == 0 => {
                return Err(mismatch(nq, v, "source vertex without outgoing edges"))
            }
            VertexKind::Hidden | VertexKind::MaxPool if ins == 0 => {
                return Err(mismatch(nq, v, "source vertex must be input or bias"))
            }
            VertexKind::Hidden | VertexKind::MaxPool if outs == 0 => {
                return Err(mismatch(nq, v, "sink vertex must be output"))
            }
            VertexKind::Output if ins == 0 => {
                return Err(mismatch(nq, v, "output vertex without incoming edges"))
            }
            _ => {}
        }
    }
    Ok(())
}

fn validate_layer_placement(nq: &NetworkQuiver) -> Result<()> {
    let last = nq.layers.iter().copied().max().unwrap_or(0);
    for (v, &kind) in nq.kinds.iter().enumerate() {
        let layer = nq.layers[v];
        let ok = match kind {
            VertexKind::Input => layer == 0,
            VertexKind::Output => layer == last,
            VertexKind::Bias => layer < last,
            VertexKind::Hidden | VertexKind::MaxPool => layer > 0 && layer < last,
        };
        if !ok {
            return Err(mismatch(nq, v, &format!("not allowed in layer {layer}")));
        }
    }
    Ok(())
}

fn kahn_order(nq: &NetworkQuiver) -> Result<Vec<usize>> {
    let n = nq.quiver.vertex_count();
    let mut indeg: Vec<usize> = nq.incoming.iter().map(Vec::len).collect();
    let key = |v: usize| Reverse((nq.layers[v], nq.quiver.vertex_id(v).to_string(), v));
    let mut heap: BinaryHeap<_> = (0..n).filter(|&v| indeg[v] == 0).map(key).collect();
    let mut order = Vec::with_capacity(n);
    while let Some(Reverse((_, _, v))) = heap.pop() {
        order.push(v);
        for &e in &nq.outgoing[v] {
            let t = nq.delooped.edge(e).target;
            indeg[t] -= 1;
            if indeg[t] == 0 {
                heap.push(key(t));
            }
        }
    }
    if order.len() != n {
        return Err(Error::CycleDetected);
    }
    Ok(order)
}

impl NetworkQuiver {
    pub fn quiver(&self) -> &Quiver {
        &self.quiver
    }

    /// The delooped quiver; thin representations are indexed by its edges.
    pub fn delooped(&self) -> &Quiver {
        &self.delooped
    }

    pub fn kind(&self, v: usize) -> VertexKind {
        self.kinds[v]
    }

    pub fn kind_of(&self, id: &str) -> Option<VertexKind> {
        self.quiver.vertex(id).map(|v| self.kinds[v])
    }

    pub fn layer(&self, v: usize) -> usize {
        self.layers[v]
    }

    pub fn layer_count(&self) -> usize {
        self.layers.iter().copied().max().unwrap_or(0) + 1
    }

    pub fn vertex_count(&self) -> usize {
        self.quiver.vertex_count()
    }

    pub fn vertex(&self, id: &str) -> Option<usize> {
        self.quiver.vertex(id)
    }

    pub fn vertex_id(&self, v: usize) -> &str {
        self.quiver.vertex_id(v)
    }

    /// Number of delooped edges.
    pub fn edge_count(&self) -> usize {
        self.delooped.edge_count()
    }

    /// Delooped edge at position `e`.
    pub fn edge(&self, e: usize) -> &Edge {
        self.delooped.edge(e)
    }

    pub fn edge_position(&self, id: &str) -> Option<usize> {
        self.delooped.edge_position(id)
    }

    /// Delooped edges into `v`, sorted by edge id.
    pub fn incoming(&self, v: usize) -> &[usize] {
        &self.incoming[v]
    }

    /// Delooped edges out of `v`, sorted by edge id.
    pub fn outgoing(&self, v: usize) -> &[usize] {
        &self.outgoing[v]
    }

    /// Input vertices in declaration order; input vectors are indexed this way.
    pub fn inputs(&self) -> &[usize] {
        &self.inputs
    }

    /// Output vertices in declaration order.
    pub fn outputs(&self) -> &[usize] {
        &self.outputs
    }

    pub fn biases(&self) -> &[usize] {
        &self.biases
    }

    /// Hidden and max-pool vertices in topological order.
    pub fn hidden(&self) -> &[usize] {
        &self.hidden
    }

    pub fn order(&self) -> &[usize] {
        &self.order
    }

    pub fn input_dim(&self) -> usize {
        self.inputs.len()
    }

    pub fn output_dim(&self) -> usize {
        self.outputs.len()
    }

    pub fn is_hidden(&self, v: usize) -> bool {
        self.kinds[v].is_hidden()
    }

    pub fn has_max_pool(&self) -> bool {
        self.kinds.contains(&VertexKind::MaxPool)
    }

    /// Position of each vertex within `order()`.
    pub fn order_positions(&self) -> Vec<usize> {
        let mut pos = vec![0; self.vertex_count()];
        for (i, &v) in self.order.iter().enumerate() {
            pos[v] = i;
        }
        pos
    }
}

/// Removes every loop, keeping vertices and edge ids.
pub fn deloop(nq: &NetworkQuiver) -> Quiver {
    nq.delooped.clone()
}

/// The subquiver on hidden vertices with the hidden-to-hidden edges, plus the
/// vertices framed by the input and output layers.
#[derive(Debug, Clone)]
pub struct HiddenQuiver {
    pub quiver: Quiver,
    /// Hidden vertices with an edge from an input vertex.
    pub input_vertices: Vec<VertexId>,
    /// Hidden vertices with an edge into an output vertex.
    pub output_vertices: Vec<VertexId>,
    /// For each edge of `quiver`, its position among the delooped edges of the parent.
    pub parent_edges: Vec<usize>,
}

pub fn hidden_quiver(nq: &NetworkQuiver) -> HiddenQuiver {
    let mut q = Quiver::new();
    for &v in nq.hidden() {
        q.add_vertex(nq.vertex_id(v))
            .expect("vertex ids are unique");
    }
    let mut parent_edges = Vec::new();
    for (i, e) in nq.delooped().edges().iter().enumerate() {
        if nq.is_hidden(e.source) && nq.is_hidden(e.target) {
            q.add_edge_by_id(e.id.clone(), nq.vertex_id(e.source), nq.vertex_id(e.target))
                .expect("edge ids are unique");
            parent_edges.push(i);
        }
    }
    let framed = |side: VertexKind, incoming: bool| -> Vec<VertexId> {
        nq.hidden()
            .iter()
            .copied()
            .filter(|&v| {
                let edges = if incoming {
                    nq.incoming(v)
                } else {
                    nq.outgoing(v)
                };
                edges.iter().any(|&e| {
                    let other = if incoming {
                        nq.edge(e).source
                    } else {
                        nq.edge(e).target
                    };
                    nq.kind(other) == side
                })
            })
            .map(|v| nq.vertex_id(v).to_string())
            .collect()
    };
    HiddenQuiver {
        input_vertices: framed(VertexKind::Input, true),
        output_vertices: framed(VertexKind::Output, false),
        quiver: q,
        parent_edges,
    }
}

/// Evaluation order: every non-loop edge goes forward. Ties are broken by
/// layer, then by vertex id, so the result does not depend on edge order.
pub fn topological_order(nq: &NetworkQuiver) -> Vec<VertexId> {
    nq.order()
        .iter()
        .map(|&v| nq.vertex_id(v).to_string())
        .collect()
}

/// Returns the declared kinds after cross-checking them against in/out degrees.
pub fn classify_vertices(nq: &NetworkQuiver) -> Result<BTreeMap<VertexId, VertexKind>> {
    check_kinds(nq)?;
    Ok((0..nq.vertex_count())
        .map(|v| (nq.vertex_id(v).to_string(), nq.kind(v)))
        .collect())
}

/// Incremental construction of a network quiver. Hidden and max-pool vertices
/// get their loop added automatically (edge id `<vertex>.loop`).
#[derive(Debug, Default, Clone)]
pub struct NetworkQuiverBuilder {
    quiver: Quiver,
    kinds: HashMap<VertexId, VertexKind>,
    layers: HashMap<VertexId, usize>,
    pending_loops: Vec<usize>,
}

impl NetworkQuiverBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn vertex(
        &mut self,
        id: impl Into<String>,
        kind: VertexKind,
        layer: usize,
    ) -> Result<usize> {
        let id = id.into();
        let idx = self.quiver.add_vertex(id.clone())?;
        self.kinds.insert(id.clone(), kind);
        self.layers.insert(id, layer);
        if kind.is_hidden() {
            self.pending_loops.push(idx);
        }
        Ok(idx)
    }

    pub fn edge(&mut self, id: impl Into<String>, source: usize, target: usize) -> Result<usize> {
        self.quiver.add_edge(id, source, target)
    }

    pub fn edge_by_id(
        &mut self,
        id: impl Into<String>,
        source: &str,
        target: &str,
    ) -> Result<usize> {
        self.quiver.add_edge_by_id(id, source, target)
    }

    pub fn vertex_count(&self) -> usize {
        self.quiver.vertex_count()
    }

    pub fn edge_count(&self) -> usize {
        self.quiver.edge_count()
    }

    pub fn build(mut self) -> Result<NetworkQuiver> {
        for v in std::mem::take(&mut self.pending_loops) {
            let id = format!("{}.loop", self.quiver.vertex_id(v));
            self.quiver.add_edge(id, v, v)?;
        }
        validate_network_quiver(self.quiver, &self.kinds, &self.layers)
    }
}

/// Convenience constructor for fully connected layered quivers. `widths[0]` is
/// the input size and the last entry the output size; edges are named
/// `<source>-><target>` and vertices `l<layer>_<index>`.
pub fn layered_mlp(widths: &[usize]) -> Result<NetworkQuiver> {
    if widths.len() < 3 {
        return Err(Error::NoHiddenVertices);
    }
    let mut b = NetworkQuiverBuilder::new();
    let last = widths.len() - 1;
    let mut prev: Vec<usize> = Vec::new();
    for (layer, &w) in widths.iter().enumerate() {
        let kind = match layer {
            0 => VertexKind::Input,
            l if l == last => VertexKind::Output,
            _ => VertexKind::Hidden,
        };
        let cur: Vec<usize> = (0..w)
            .map(|i| b.vertex(format!("l{layer}_{i}"), kind, layer))
            .collect::<Result<_>>()?;
        for &t in &cur {
            for &s in &prev {
                let id = format!("{}->{}", b.quiver.vertex_id(s), b.quiver.vertex_id(t));
                b.edge(id, s, t)?;
            }
        }
        prev = cur;
    }
    b.build()
}
