use std::collections::BTreeMap;

use super::{check_finite, NeuralNetwork, NeuronRule, ThinRep};
use crate::error::{Error, Result};
use crate::quiver::{NetworkQuiver, VertexId};
use crate::{C64, ZERO_TOL};

/// An element of the change-of-basis group: one nonzero scalar per hidden
/// vertex. Non-hidden vertices implicitly carry 1.
#[derive(Debug, Clone, PartialEq)]
pub struct ChangeOfBasis {
    tau: BTreeMap<VertexId, C64>,
}

impl ChangeOfBasis {
    pub fn new(tau: BTreeMap<VertexId, C64>) -> Result<Self> {
        for (v, t) in &tau {
            check_finite(v, *t)?;
            if t.norm() <= ZERO_TOL {
                return Err(Error::ZeroScale(v.clone()));
            }
        }
        Ok(Self { tau })
    }

    pub fn identity(nq: &NetworkQuiver) -> Self {
        Self::from_fn(nq, |_| C64::new(1.0, 0.0))
    }

    /// Builds τ by calling `f` on every hidden vertex id, in topological order.
    pub fn from_fn(nq: &NetworkQuiver, mut f: impl FnMut(&str) -> C64) -> Self {
        let tau = nq
            .hidden()
            .iter()
            .map(|&v| {
                let id = nq.vertex_id(v);
                (id.to_string(), f(id))
            })
            .collect();
        Self { tau }
    }

    pub fn get(&self, vertex: &str) -> Option<C64> {
        self.tau.get(vertex).copied()
    }

    pub fn as_map(&self) -> &BTreeMap<VertexId, C64> {
        &self.tau
    }

    /// Group law: `(self · other)_v = self_v · other_v`.
    pub fn compose(&self, other: &ChangeOfBasis) -> Result<Self> {
        if self.tau.len() != other.tau.len() || self.tau.keys().ne(other.tau.keys()) {
            return Err(Error::VertexSetMismatch(
                "operands have different vertex sets".into(),
            ));
        }
        let tau = self
            .tau
            .iter()
            .zip(other.tau.values())
            .map(|((v, a), b)| (v.clone(), a * b))
            .collect();
        Ok(Self { tau })
    }

    pub fn inverse(&self) -> Self {
        Self {
            tau: self.tau.iter().map(|(v, t)| (v.clone(), t.inv())).collect(),
        }
    }

    pub fn is_identity(&self) -> bool {
        self.tau.values().all(|t| *t == C64::new(1.0, 0.0))
    }

    /// Per-vertex scalars for `nq`, with 1 on non-hidden vertices. Fails unless
    /// the keys are exactly the hidden vertices of `nq`.
    pub fn resolve(&self, nq: &NetworkQuiver) -> Result<Vec<C64>> {
        let mut out = vec![C64::new(1.0, 0.0); nq.vertex_count()];
        for (id, t) in &self.tau {
            match nq.vertex(id) {
                Some(v) if nq.is_hidden(v) => out[v] = *t,
                Some(_) => return Err(Error::VertexSetMismatch(format!("`{id}` is not hidden"))),
                None => return Err(Error::VertexSetMismatch(format!("unknown vertex `{id}`"))),
            }
        }
        if let Some(&v) = nq
            .hidden()
            .iter()
            .find(|&&v| !self.tau.contains_key(nq.vertex_id(v)))
        {
            return Err(Error::VertexSetMismatch(format!(
                "no scale for hidden vertex `{}`",
                nq.vertex_id(v)
            )));
        }
        Ok(out)
    }
}

/// `(τ·W)_ε = W_ε · τ_{t(ε)} / τ_{s(ε)}`.
pub fn act_on_weights(tau: &ChangeOfBasis, rep: &ThinRep) -> Result<ThinRep> {
    let nq = rep.quiver();
    let t = tau.resolve(nq)?;
    let mut out = rep.clone();
    for (i, w) in out.weights_mut().iter_mut().enumerate() {
        let e = nq.edge(i);
        *w = *w * t[e.target] / t[e.source];
    }
    Ok(out)
}

/// `τ·(W, f) = (τ·W, τ·f)` with `(τ·f)_v(z) = τ_v f_v(z / τ_v)`. Max-pool
/// vertices switch between max and min according to the sign of `Re τ_v`.
pub fn act_on_network(tau: &ChangeOfBasis, net: &NeuralNetwork) -> Result<NeuralNetwork> {
    let nq = net.quiver();
    let t = tau.resolve(nq)?;
    let rep = act_on_weights(tau, net.rep())?;
    let rules = net
        .rules()
        .iter()
        .enumerate()
        .map(|(v, r)| {
            r.as_ref().map(|r| match r {
                NeuronRule::Activation(f) => NeuronRule::Activation(f.scaled(t[v])),
                NeuronRule::Pool(p) => NeuronRule::Pool(p.after_scale(t[v])),
            })
        })
        .collect();
    Ok(NeuralNetwork { rep, rules })
}
