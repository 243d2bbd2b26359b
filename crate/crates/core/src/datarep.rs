//! The thin representation induced by a single input.
//!
//! For a network `(W, f)` and input `x`, [`data_representation`] rescales every
//! edge so that the plain linear forward pass on the all-ones input reproduces
//! `Ψ(W, f)(x)`: edges out of input vertices absorb `x`, edges out of hidden
//! vertices absorb the ratio of activation output to pre-activation.

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::network::{forward, forward_linear, NeuralNetwork, NeuronRule, ThinRep};
use crate::quiver::{VertexId, VertexKind};
use crate::{C64, ZERO_TOL};

/// Substituted for a vanishing pre-activation.
pub const ETA: f64 = 1.0;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct DataRepOptions {
    /// At a max-pool vertex keep only the selected incoming edge; the others
    /// get weight 0. Without it max-pool vertices are rejected.
    pub max_pool_indicator: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DataRep {
    pub rep: ThinRep,
    /// Hidden vertices whose pre-activation vanished and was replaced by `ETA`.
    pub eta_fixes: BTreeSet<VertexId>,
    pub source_input: Vec<C64>,
}

impl DataRep {
    /// `Ψ(W_x^f, 1)(1^d)`.
    pub fn output(&self) -> Result<Vec<C64>> {
        let ones = vec![C64::new(1.0, 0.0); self.rep.quiver().input_dim()];
        Ok(forward_linear(&self.rep, &ones)?.into_output())
    }
}

pub fn data_representation(net: &NeuralNetwork, x: &[C64]) -> Result<DataRep> {
    data_representation_with(net, x, DataRepOptions::default())
}

/// Builds `W_x^f`.
///
/// When a hidden pre-activation vanishes, the vertex is treated as having
/// pre-activation `ETA`: outgoing ratios use `ETA` as denominator and
/// `ETA / value(source)` is added to its lowest-id incoming edge (the selected
/// edge at a max-pool vertex), so the linear pass carries the adjusted value
/// downstream and the output identity still holds.
pub fn data_representation_with(
    net: &NeuralNetwork,
    x: &[C64],
    opts: DataRepOptions,
) -> Result<DataRep> {
    let nq = net.quiver();
    if !opts.max_pool_indicator {
        if let Some(&v) = nq
            .hidden()
            .iter()
            .find(|&&v| nq.kind(v) == VertexKind::MaxPool)
        {
            return Err(Error::UnsupportedMaxPool(nq.vertex_id(v).to_string()));
        }
    }
    let trace = forward(net, x)?;
    let (pre, act, selected) = (trace.pre_slice(), trace.act_slice(), trace.selected_slice());
    let one = C64::new(1.0, 0.0);

    // value of each vertex in the linear pass on 1^d
    let mut value = vec![one; nq.vertex_count()];
    let mut eta_fixes = BTreeSet::new();
    for &v in nq.hidden() {
        value[v] = if pre[v].norm() < ZERO_TOL {
            eta_fixes.insert(nq.vertex_id(v).to_string());
            pre[v] + ETA
        } else {
            pre[v]
        };
    }

    let w = net.rep().weights();
    let mut out = vec![C64::new(0.0, 0.0); w.len()];
    for (i, weight) in out.iter_mut().enumerate() {
        let e = nq.edge(i);
        if nq.kind(e.target) == VertexKind::MaxPool && selected[e.target] != Some(i) {
            continue;
        }
        *weight = match nq.kind(e.source) {
            VertexKind::Input => w[i] * act[e.source],
            VertexKind::Bias => w[i],
            // exact when the activation passes its argument through
            _ if act[e.source] == value[e.source] => w[i],
            _ => w[i] * (act[e.source] / value[e.source]),
        };
    }
    for id in &eta_fixes {
        let v = nq.vertex(id).expect("fixed vertex is in the quiver");
        let e = selected[v].unwrap_or_else(|| nq.incoming(v)[0]);
        out[e] += ETA / value[nq.edge(e).source];
    }

    Ok(DataRep {
        rep: ThinRep::new(nq.clone(), out)?,
        eta_fixes,
        source_input: x.to_vec(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DataTheoremReport {
    /// `Ψ(W_x^f, 1)(1^d)`.
    pub data_output: Vec<C64>,
    /// `Ψ(W, f)(x)`.
    pub network_output: Vec<C64>,
    pub output_residual: f64,
    /// Max over hidden vertices without an η-fix of
    /// `|f_v(a(W_x^f, 1)_v(1^d)) − a(W, f)_v(x)|`.
    pub vertex_residual: f64,
    /// Max over hidden vertices of `|a(W_x^f, 1)_v(1^d) − pre_v(x)|`, with the
    /// η-adjusted pre-activation at fixed vertices.
    pub preactivation_residual: f64,
    pub eta_fixes: BTreeSet<VertexId>,
    pub passed: bool,
}

/// Evaluates both sides of `Ψ(W_x^f, 1)(1^d) = Ψ(W, f)(x)` and the per-vertex
/// identities behind it. Passes when every residual is within
/// `tol · max(1, |reference|)`.
pub fn verify_data_theorem(net: &NeuralNetwork, x: &[C64], tol: f64) -> Result<DataTheoremReport> {
    verify_data_theorem_with(net, x, tol, DataRepOptions::default())
}

pub fn verify_data_theorem_with(
    net: &NeuralNetwork,
    x: &[C64],
    tol: f64,
    opts: DataRepOptions,
) -> Result<DataTheoremReport> {
    let nq = net.quiver();
    let dr = data_representation_with(net, x, opts)?;
    let original = forward(net, x)?;
    let ones = vec![C64::new(1.0, 0.0); nq.input_dim()];
    let linear = forward_linear(&dr.rep, &ones)?;
    let mut passed = true;
    let mut check = |got: C64, want: C64| {
        let r = (got - want).norm();
        let r = if r.is_nan() { f64::INFINITY } else { r };
        if r > tol * want.norm().max(1.0) {
            passed = false;
        }
        r
    };

    let mut output_residual: f64 = 0.0;
    for (a, b) in linear.output().iter().zip(original.output()) {
        output_residual = output_residual.max(check(*a, *b));
    }
    let (mut vertex_residual, mut preactivation_residual) = (0.0f64, 0.0f64);
    for &v in nq.hidden() {
        let data_value = linear.act_slice()[v];
        let fixed = dr.eta_fixes.contains(nq.vertex_id(v));
        let pre = original.pre_slice()[v] + if fixed { ETA } else { 0.0 };
        preactivation_residual = preactivation_residual.max(check(data_value, pre));
        if !fixed {
            let applied = match net.rule(v) {
                Some(NeuronRule::Activation(f)) => f.eval(data_value),
                _ => data_value,
            };
            vertex_residual = vertex_residual.max(check(applied, original.act_slice()[v]));
        }
    }
    Ok(DataTheoremReport {
        data_output: linear.into_output(),
        network_output: original.into_output(),
        output_residual,
        vertex_residual,
        preactivation_residual,
        eta_fixes: dr.eta_fixes,
        passed,
    })
}
