use std::sync::Arc;

use super::{check_finite, NeuralNetwork, NeuronRule, PoolRule, ThinRep};
use crate::error::{Error, Result};
use crate::quiver::{NetworkQuiver, VertexKind};
use crate::C64;

/// Everything computed during one forward pass.
#[derive(Debug, Clone)]
pub struct ForwardTrace {
    quiver: Arc<NetworkQuiver>,
    pre: Vec<C64>,
    act: Vec<C64>,
    selected: Vec<Option<usize>>,
    output: Vec<C64>,
}

impl ForwardTrace {
    /// Sum into the vertex (the selected term for max-pool vertices; the
    /// vertex value itself for inputs and bias vertices).
    pub fn pre_activation(&self, vertex: &str) -> Option<C64> {
        self.quiver.vertex(vertex).map(|v| self.pre[v])
    }

    pub fn activation_output(&self, vertex: &str) -> Option<C64> {
        self.quiver.vertex(vertex).map(|v| self.act[v])
    }

    /// The incoming edge selected by a max-pool vertex.
    pub fn selected_edge(&self, vertex: &str) -> Option<&str> {
        let v = self.quiver.vertex(vertex)?;
        self.selected[v].map(|e| self.quiver.edge(e).id.as_str())
    }

    pub fn output(&self) -> &[C64] {
        &self.output
    }

    pub fn into_output(self) -> Vec<C64> {
        self.output
    }

    pub(crate) fn pre_slice(&self) -> &[C64] {
        &self.pre
    }

    pub(crate) fn act_slice(&self) -> &[C64] {
        &self.act
    }

    pub(crate) fn selected_slice(&self) -> &[Option<usize>] {
        &self.selected
    }
}

fn check_input(nq: &NetworkQuiver, x: &[C64]) -> Result<()> {
    if x.len() != nq.input_dim() {
        return Err(Error::DimensionMismatch {
            expected: nq.input_dim(),
            got: x.len(),
        });
    }
    for (&v, z) in nq.inputs().iter().zip(x) {
        check_finite(nq.vertex_id(v), *z)?;
    }
    Ok(())
}

fn run(rep: &ThinRep, rules: Option<&[Option<NeuronRule>]>, x: &[C64]) -> Result<ForwardTrace> {
    let nq = rep.quiver();
    check_input(nq, x)?;
    let n = nq.vertex_count();
    let w = rep.weights();
    let zero = C64::new(0.0, 0.0);
    let mut pre = vec![zero; n];
    let mut act = vec![zero; n];
    let mut selected = vec![None; n];
    for (&v, &z) in nq.inputs().iter().zip(x) {
        pre[v] = z;
        act[v] = z;
    }
    for &v in nq.order() {
        match nq.kind(v) {
            VertexKind::Input => {}
            VertexKind::Bias => {
                pre[v] = C64::new(1.0, 0.0);
                act[v] = pre[v];
            }
            VertexKind::MaxPool if rules.is_some() => {
                let rule = match rules.and_then(|r| r[v].as_ref()) {
                    Some(NeuronRule::Pool(r)) => *r,
                    _ => PoolRule::Max,
                };
                let mut best: Option<(usize, C64)> = None;
                // incoming edges are sorted by id, so strict comparison keeps the lowest id on ties
                for &e in nq.incoming(v) {
                    let term = w[e] * act[nq.edge(e).source];
                    let better = match (best, rule) {
                        (None, _) => true,
                        (Some((_, b)), PoolRule::Max) => term.re > b.re,
                        (Some((_, b)), PoolRule::Min) => term.re < b.re,
                    };
                    if better {
                        best = Some((e, term));
                    }
                }
                let (e, term) = best.expect("validated hidden vertices have incoming edges");
                selected[v] = Some(e);
                pre[v] = term;
                act[v] = term;
            }
            kind => {
                let sum: C64 = nq
                    .incoming(v)
                    .iter()
                    .map(|&e| w[e] * act[nq.edge(e).source])
                    .sum();
                pre[v] = sum;
                act[v] = match (kind, rules.and_then(|r| r[v].as_ref())) {
                    (VertexKind::Hidden, Some(NeuronRule::Activation(f))) => f.eval(sum),
                    _ => sum,
                };
            }
        }
    }
    let output = nq.outputs().iter().map(|&v| act[v]).collect();
    Ok(ForwardTrace {
        quiver: nq.clone(),
        pre,
        act,
        selected,
        output,
    })
}

/// Forward pass in topological order. Inputs emit `x`, bias vertices emit 1,
/// hidden vertices apply their activation to the weighted sum of incoming
/// activation outputs, max-pool vertices select the term with the largest
/// (or, under a `Min` rule, smallest) real part, outputs emit the plain sum.
pub fn forward(net: &NeuralNetwork, x: &[C64]) -> Result<ForwardTrace> {
    run(net.rep(), Some(net.rules()), x)
}

pub fn network_function(net: &NeuralNetwork, x: &[C64]) -> Result<Vec<C64>> {
    forward(net, x).map(ForwardTrace::into_output)
}

/// Forward pass of `(rep, 1)`: every hidden vertex, max-pool ones included,
/// outputs its plain weighted sum.
pub fn forward_linear(rep: &ThinRep, x: &[C64]) -> Result<ForwardTrace> {
    run(rep, None, x)
}
