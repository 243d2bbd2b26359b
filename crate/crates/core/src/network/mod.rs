//! Thin representations, neural networks over a network quiver, the forward
//! pass and the change-of-basis group.

mod action;
mod activation;
mod forward;
mod iso;

use std::collections::BTreeMap;
use std::sync::Arc;

pub use action::{act_on_network, act_on_weights, ChangeOfBasis};
pub use activation::{Activation, PoolRule};
pub use forward::{forward, forward_linear, network_function, ForwardTrace};
pub use iso::{activation_sample_points, verify_isomorphism, Check, IsoReport};

use crate::error::{Error, Result};
use crate::quiver::{NetworkQuiver, VertexId, VertexKind};
use crate::{C64, ZERO_TOL};

/// One complex weight per delooped edge of a network quiver.
#[derive(Debug, Clone)]
pub struct ThinRep {
    quiver: Arc<NetworkQuiver>,
    weights: Vec<C64>,
}

impl PartialEq for ThinRep {
    fn eq(&self, other: &Self) -> bool {
        (Arc::ptr_eq(&self.quiver, &other.quiver) || self.quiver == other.quiver)
            && self.weights == other.weights
    }
}

pub(crate) fn check_finite(label: &str, z: C64) -> Result<()> {
    if z.re.is_finite() && z.im.is_finite() {
        Ok(())
    } else {
        Err(Error::NonFinite(label.to_string()))
    }
}

impl ThinRep {
    /// `weights[i]` is the weight of delooped edge `i`.
    pub fn new(quiver: Arc<NetworkQuiver>, weights: Vec<C64>) -> Result<Self> {
        if weights.len() != quiver.edge_count() {
            return Err(Error::DimensionMismatch {
                expected: quiver.edge_count(),
                got: weights.len(),
            });
        }
        for (i, w) in weights.iter().enumerate() {
            check_finite(&quiver.edge(i).id, *w)?;
        }
        Ok(Self { quiver, weights })
    }

    pub fn from_map(quiver: Arc<NetworkQuiver>, weights: &BTreeMap<String, C64>) -> Result<Self> {
        for id in weights.keys() {
            if quiver.edge_position(id).is_none() {
                return Err(Error::UnknownEdge(id.clone()));
            }
        }
        let ws = quiver
            .delooped()
            .edges()
            .iter()
            .map(|e| {
                weights
                    .get(&e.id)
                    .copied()
                    .ok_or_else(|| Error::MissingWeight(e.id.clone()))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(quiver, ws)
    }

    pub fn constant(quiver: Arc<NetworkQuiver>, value: C64) -> Self {
        let weights = vec![value; quiver.edge_count()];
        Self { quiver, weights }
    }

    pub fn quiver(&self) -> &Arc<NetworkQuiver> {
        &self.quiver
    }

    pub fn weights(&self) -> &[C64] {
        &self.weights
    }

    pub(crate) fn weights_mut(&mut self) -> &mut [C64] {
        &mut self.weights
    }

    pub fn weight(&self, edge: &str) -> Option<C64> {
        self.quiver.edge_position(edge).map(|i| self.weights[i])
    }

    pub fn set_weight(&mut self, edge: &str, value: C64) -> Result<()> {
        let i = self
            .quiver
            .edge_position(edge)
            .ok_or_else(|| Error::UnknownEdge(edge.to_string()))?;
        check_finite(edge, value)?;
        self.weights[i] = value;
        Ok(())
    }

    pub fn to_map(&self) -> BTreeMap<String, C64> {
        self.quiver
            .delooped()
            .edges()
            .iter()
            .zip(&self.weights)
            .map(|(e, w)| (e.id.clone(), *w))
            .collect()
    }

    /// True iff every weight has modulus above [`ZERO_TOL`].
    pub fn all_nonzero(&self) -> bool {
        self.weights.iter().all(|w| w.norm() > ZERO_TOL)
    }

    pub fn is_real(&self) -> bool {
        self.weights.iter().all(|w| w.im == 0.0)
    }

    pub(crate) fn same_quiver(&self, other: &ThinRep) -> bool {
        Arc::ptr_eq(&self.quiver, &other.quiver) || *self.quiver == *other.quiver
    }
}

/// What a hidden vertex computes after summing (or pooling) its inputs.
#[derive(Debug, Clone, PartialEq)]
pub enum NeuronRule {
    Activation(Activation),
    Pool(PoolRule),
}

/// A thin representation together with one activation per hidden vertex.
/// Max-pool vertices carry a [`PoolRule`] instead.
#[derive(Debug, Clone, PartialEq)]
pub struct NeuralNetwork {
    rep: ThinRep,
    rules: Vec<Option<NeuronRule>>,
}

impl NeuralNetwork {
    pub fn new(rep: ThinRep, activations: &BTreeMap<VertexId, Activation>) -> Result<Self> {
        let nq = rep.quiver().clone();
        for id in activations.keys() {
            match nq.kind_of(id) {
                Some(VertexKind::Hidden) => {}
                _ => return Err(Error::ActivationMismatch(id.clone())),
            }
        }
        let rules = (0..nq.vertex_count())
            .map(|v| match nq.kind(v) {
                VertexKind::Hidden => activations
                    .get(nq.vertex_id(v))
                    .cloned()
                    .map(|a| Some(NeuronRule::Activation(a)))
                    .ok_or_else(|| Error::ActivationMismatch(nq.vertex_id(v).to_string())),
                VertexKind::MaxPool => Ok(Some(NeuronRule::Pool(PoolRule::Max))),
                _ => Ok(None),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { rep, rules })
    }

    /// Every hidden (non-pool) vertex gets `act`.
    pub fn uniform(rep: ThinRep, act: Activation) -> Self {
        let nq = rep.quiver().clone();
        let rules = (0..nq.vertex_count())
            .map(|v| match nq.kind(v) {
                VertexKind::Hidden => Some(NeuronRule::Activation(act.clone())),
                VertexKind::MaxPool => Some(NeuronRule::Pool(PoolRule::Max)),
                _ => None,
            })
            .collect();
        Self { rep, rules }
    }

    pub fn with_pool_rule(mut self, vertex: &str, rule: PoolRule) -> Result<Self> {
        let v = self
            .rep
            .quiver()
            .vertex(vertex)
            .filter(|&v| self.rep.quiver().kind(v) == VertexKind::MaxPool)
            .ok_or_else(|| Error::ActivationMismatch(vertex.to_string()))?;
        self.rules[v] = Some(NeuronRule::Pool(rule));
        Ok(self)
    }

    pub fn rep(&self) -> &ThinRep {
        &self.rep
    }

    pub fn quiver(&self) -> &Arc<NetworkQuiver> {
        self.rep.quiver()
    }

    pub fn with_rep(&self, rep: ThinRep) -> Result<Self> {
        if !self.rep.same_quiver(&rep) {
            return Err(Error::QuiverMismatch);
        }
        Ok(Self {
            rep,
            rules: self.rules.clone(),
        })
    }

    pub(crate) fn rules(&self) -> &[Option<NeuronRule>] {
        &self.rules
    }

    pub(crate) fn rule(&self, v: usize) -> Option<&NeuronRule> {
        self.rules[v].as_ref()
    }

    pub fn activation(&self, vertex: &str) -> Option<&Activation> {
        let v = self.quiver().vertex(vertex)?;
        match &self.rules[v] {
            Some(NeuronRule::Activation(a)) => Some(a),
            _ => None,
        }
    }

    pub fn pool_rule(&self, vertex: &str) -> Option<PoolRule> {
        let v = self.quiver().vertex(vertex)?;
        match &self.rules[v] {
            Some(NeuronRule::Pool(r)) => Some(*r),
            _ => None,
        }
    }

    pub fn activations(&self) -> BTreeMap<VertexId, Activation> {
        self.rules
            .iter()
            .enumerate()
            .filter_map(|(v, r)| match r {
                Some(NeuronRule::Activation(a)) => {
                    Some((self.quiver().vertex_id(v).to_string(), a.clone()))
                }
                _ => None,
            })
            .collect()
    }

    pub fn pool_rules(&self) -> BTreeMap<VertexId, PoolRule> {
        self.rules
            .iter()
            .enumerate()
            .filter_map(|(v, r)| match r {
                Some(NeuronRule::Pool(p)) => Some((self.quiver().vertex_id(v).to_string(), *p)),
                _ => None,
            })
            .collect()
    }
}
