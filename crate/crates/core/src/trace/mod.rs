//! Full-batch gradient descent on real networks, and the trajectory of the
//! moduli points `φ(W_i, f)(x_j)` along the way.

mod record;

pub use record::{moduli_trajectory, SamplePoint, TrajectoryRecord, TrajectoryStep};

use std::collections::{BTreeMap, HashSet};

use crate::error::{Error, Result};
use crate::layers::WeightArchitecture;
use crate::network::{forward, NeuralNetwork, NeuronRule};
use crate::quiver::{EdgeId, VertexKind};
use crate::C64;

/// One training pair `(x, target)`.
pub type Sample = (Vec<C64>, Vec<C64>);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    /// Step size; 0 leaves the weights untouched.
    pub learning_rate: f64,
    pub steps: usize,
}

impl TrainConfig {
    fn validate(&self) -> Result<()> {
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "learning rate {}",
                self.learning_rate
            )));
        }
        if self.steps == 0 {
            return Err(Error::InvalidConfig("steps must be at least 1".into()));
        }
        Ok(())
    }
}

fn ensure_real(net: &NeuralNetwork) -> Result<()> {
    let nq = net.quiver();
    if let Some(i) = net.rep().weights().iter().position(|w| w.im != 0.0) {
        return Err(Error::ComplexNetwork(nq.edge(i).id.clone()));
    }
    for (v, f) in net.activations() {
        if !f.is_real() {
            return Err(Error::ComplexNetwork(v));
        }
    }
    Ok(())
}

fn ensure_real_values(what: &str, xs: &[C64]) -> Result<()> {
    match xs.iter().any(|z| z.im != 0.0) {
        true => Err(Error::ComplexNetwork(what.to_string())),
        false => Ok(()),
    }
}

/// Loss `½‖Ψ(x) − target‖²` and its gradient for every delooped edge.
fn raw_gradient(net: &NeuralNetwork, x: &[C64], target: &[C64]) -> Result<(f64, Vec<f64>)> {
    let nq = net.quiver();
    if target.len() != nq.output_dim() {
        return Err(Error::DimensionMismatch {
            expected: nq.output_dim(),
            got: target.len(),
        });
    }
    ensure_real_values("input", x)?;
    ensure_real_values("target", target)?;
    let trace = forward(net, x)?;
    let (pre, act, selected) = (trace.pre_slice(), trace.act_slice(), trace.selected_slice());
    let w = net.rep().weights();
    let mut d_act = vec![0.0; nq.vertex_count()];
    let mut loss = 0.0;
    for ((&v, y), t) in nq.outputs().iter().zip(trace.output()).zip(target) {
        let r = y.re - t.re;
        loss += 0.5 * r * r;
        d_act[v] = r;
    }
    let mut grad = vec![0.0; w.len()];
    for &v in nq.order().iter().rev() {
        let d_pre = match (nq.kind(v), net.rule(v)) {
            (VertexKind::Input | VertexKind::Bias, _) => continue,
            (VertexKind::Hidden, Some(NeuronRule::Activation(f))) => {
                let fp = f
                    .derivative_real(pre[v].re)
                    .ok_or_else(|| Error::ComplexNetwork(nq.vertex_id(v).to_string()))?;
                d_act[v] * fp
            }
            _ => d_act[v],
        };
        let incoming: &[usize] = match selected[v] {
            Some(ref e) => std::slice::from_ref(e),
            None => nq.incoming(v),
        };
        for &e in incoming {
            let s = nq.edge(e).source;
            grad[e] += d_pre * act[s].re;
            d_act[s] += d_pre * w[e].re;
        }
    }
    Ok((loss, grad))
}

/// How per-edge gradients map onto trainable parameters.
struct Params {
    /// Representative edge position → all edge positions sharing its value.
    groups: Vec<(usize, Vec<usize>)>,
}

impl Params {
    fn new(net: &NeuralNetwork, arch: &WeightArchitecture) -> Result<Self> {
        let nq = net.quiver();
        arch.validate(nq)?;
        let mut claimed = HashSet::new();
        let mut groups = Vec::new();
        for class in &arch.tie_classes {
            let mut pos: Vec<usize> = class.iter().filter_map(|e| nq.edge_position(e)).collect();
            pos.sort_by(|a, b| nq.edge(*a).id.cmp(&nq.edge(*b).id));
            for &p in &pos {
                claimed.insert(p);
            }
            if class.iter().any(|e| arch.fixed.contains_key(e)) || pos.is_empty() {
                continue;
            }
            groups.push((pos[0], pos));
        }
        for i in 0..nq.edge_count() {
            if !claimed.contains(&i) && !arch.fixed.contains_key(&nq.edge(i).id) {
                groups.push((i, vec![i]));
            }
        }
        Ok(Self { groups })
    }

    fn reduce(&self, raw: &[f64]) -> Vec<f64> {
        self.groups
            .iter()
            .map(|(_, g)| g.iter().map(|&i| raw[i]).sum())
            .collect()
    }
}

/// Mean loss over `data`.
pub fn loss(net: &NeuralNetwork, data: &[Sample]) -> Result<f64> {
    let mut total = 0.0;
    for (x, t) in data {
        total += raw_gradient(net, x, t)?.0;
    }
    Ok(total / data.len().max(1) as f64)
}

/// `∂(½‖Ψ(x) − target‖²)/∂W_ε` per trainable parameter. A tie class is
/// reported once, on its smallest edge id, with the summed gradient of its
/// members; fixed edges are omitted. Requires real weights, inputs, targets
/// and activations.
pub fn gradients(
    net: &NeuralNetwork,
    arch: &WeightArchitecture,
    x: &[C64],
    target: &[C64],
) -> Result<BTreeMap<EdgeId, f64>> {
    ensure_real(net)?;
    let params = Params::new(net, arch)?;
    let (_, raw) = raw_gradient(net, x, target)?;
    let nq = net.quiver();
    Ok(params
        .groups
        .iter()
        .zip(params.reduce(&raw))
        .map(|((rep, _), g)| (nq.edge(*rep).id.clone(), g))
        .collect())
}

/// Output of [`train`].
#[derive(Debug, Clone)]
pub struct TrainRun {
    /// Mean loss of the starting network.
    pub initial_loss: f64,
    /// `snapshots[i]` is the network after update `i + 1`.
    pub snapshots: Vec<NeuralNetwork>,
    /// `losses[i]` is the mean loss of `snapshots[i]`.
    pub losses: Vec<f64>,
}

impl TrainRun {
    pub fn final_loss(&self) -> f64 {
        self.losses.last().copied().unwrap_or(self.initial_loss)
    }

    pub fn last(&self) -> &NeuralNetwork {
        self.snapshots.last().expect("at least one step")
    }

    /// [`moduli_trajectory`] of the snapshots, with losses attached.
    pub fn trajectory(&self, samples: &[Vec<C64>]) -> Result<TrajectoryRecord> {
        let mut record = moduli_trajectory(&self.snapshots, samples)?;
        for (step, l) in record.steps.iter_mut().zip(&self.losses) {
            step.loss = Some(*l);
        }
        Ok(record)
    }
}

/// Full-batch gradient descent on the mean loss. Tied edges move together,
/// fixed edges never move.
pub fn train(
    net: &NeuralNetwork,
    arch: &WeightArchitecture,
    data: &[Sample],
    cfg: TrainConfig,
) -> Result<TrainRun> {
    cfg.validate()?;
    if data.is_empty() {
        return Err(Error::InvalidConfig("empty dataset".into()));
    }
    ensure_real(net)?;
    let params = Params::new(net, arch)?;
    let n = data.len() as f64;
    let mut current = net.clone();
    let mut snapshots = Vec::with_capacity(cfg.steps);
    let mut losses = Vec::with_capacity(cfg.steps);
    let mut initial_loss = 0.0;
    for step in 0..cfg.steps {
        let mut total = 0.0;
        let mut raw = vec![0.0; current.rep().weights().len()];
        for (x, t) in data {
            let (l, g) = raw_gradient(&current, x, t)?;
            total += l;
            raw.iter_mut().zip(g).for_each(|(a, b)| *a += b);
        }
        if step == 0 {
            initial_loss = total / n;
        } else {
            losses.push(total / n);
        }
        let mut rep = current.rep().clone();
        let w = rep.weights_mut();
        for ((head, members), g) in params.groups.iter().zip(params.reduce(&raw)) {
            let value = w[*head] - C64::new(cfg.learning_rate * g / n, 0.0);
            for &i in members {
                w[i] = value;
            }
        }
        current = current.with_rep(rep)?;
        snapshots.push(current.clone());
    }
    losses.push(loss(&current, data)?);
    Ok(TrainRun {
        initial_loss,
        snapshots,
        losses,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{Activation, ThinRep};
    use crate::quiver::layered_mlp;
    use crate::testutil::{c, reference_mlp};
    use std::sync::Arc;

    fn chain(w1: f64, w2: f64, act: Activation) -> NeuralNetwork {
        let nq = Arc::new(layered_mlp(&[1, 1, 1]).unwrap());
        NeuralNetwork::uniform(ThinRep::new(nq, vec![c(w1, 0.0), c(w2, 0.0)]).unwrap(), act)
    }

    #[test]
    fn chain_rule_by_hand() {
        let (w1, w2, x, t) = (0.7, -1.3, 0.9, 0.4);
        let g = gradients(
            &chain(w1, w2, Activation::Identity),
            &Default::default(),
            &[c(x, 0.0)],
            &[c(t, 0.0)],
        )
        .unwrap();
        let r = w1 * w2 * x - t;
        assert!((g["l0_0->l1_0"] - r * w2 * x).abs() < 1e-15);
        assert!((g["l1_0->l2_0"] - r * w1 * x).abs() < 1e-15);
    }

    #[test]
    fn dead_relu_has_zero_incoming_gradient() {
        let g = gradients(
            &chain(-1.0, 2.0, Activation::Relu),
            &Default::default(),
            &[c(1.0, 0.0)],
            &[c(3.0, 0.0)],
        )
        .unwrap();
        assert_eq!(g["l0_0->l1_0"], 0.0);
    }

    #[test]
    fn ties_sum_and_fixed_edges_are_skipped() {
        let net = NeuralNetwork::uniform(reference_mlp().rep().clone(), Activation::Tanh);
        let x = [c(0.3, 0.0), c(-0.5, 0.0)];
        let t = [c(1.0, 0.0), c(0.0, 0.0)];
        let free = gradients(&net, &Default::default(), &x, &t).unwrap();
        let arch = WeightArchitecture {
            tie_classes: vec![vec!["l1_1->l2_0".into(), "l1_0->l2_1".into()]],
            fixed: BTreeMap::from([("l2_2->l3_1".to_string(), c(0.1, 0.0))]),
        };
        let g = gradients(&net, &arch, &x, &t).unwrap();
        assert_eq!(g.len(), free.len() - 2);
        assert!(!g.contains_key("l1_1->l2_0") && !g.contains_key("l2_2->l3_1"));
        assert_eq!(g["l1_0->l2_1"], free["l1_0->l2_1"] + free["l1_1->l2_0"]);
    }

    #[test]
    fn complex_networks_are_rejected() {
        let mut rep = reference_mlp().rep().clone();
        rep.set_weight("l0_0->l1_0", c(0.2, 0.1)).unwrap();
        let net = NeuralNetwork::uniform(rep, Activation::Relu);
        let err = gradients(
            &net,
            &Default::default(),
            &[c(1.0, 0.0), c(1.0, 0.0)],
            &[c(0.0, 0.0), c(0.0, 0.0)],
        );
        assert_eq!(err.unwrap_err(), Error::ComplexNetwork("l0_0->l1_0".into()));
    }

    #[test]
    fn convex_chain_loss_decreases() {
        let net = chain(0.5, 0.5, Activation::Identity);
        let data = vec![
            (vec![c(1.0, 0.0)], vec![c(2.0, 0.0)]),
            (vec![c(-0.5, 0.0)], vec![c(-1.0, 0.0)]),
        ];
        let run = train(
            &net,
            &Default::default(),
            &data,
            TrainConfig {
                learning_rate: 0.05,
                steps: 50,
            },
        )
        .unwrap();
        assert_eq!(run.snapshots.len(), 50);
        let mut prev = run.initial_loss;
        for &l in &run.losses {
            assert!(l < prev);
            prev = l;
        }
    }

    #[test]
    fn zero_rate_keeps_weights() {
        let net = chain(0.5, 0.5, Activation::Tanh);
        let data = vec![(vec![c(1.0, 0.0)], vec![c(2.0, 0.0)])];
        let run = train(
            &net,
            &Default::default(),
            &data,
            TrainConfig {
                learning_rate: 0.0,
                steps: 3,
            },
        )
        .unwrap();
        assert!(run.snapshots.iter().all(|s| s.rep() == net.rep()));
        let bad = TrainConfig {
            learning_rate: -1.0,
            steps: 3,
        };
        assert!(matches!(
            train(&net, &Default::default(), &data, bad),
            Err(Error::InvalidConfig(_))
        ));
    }
}
