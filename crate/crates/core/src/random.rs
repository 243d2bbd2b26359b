//! Seeded random network quivers, weights, inputs and changes of basis for
//! property tests and examples.

use std::collections::{BTreeMap, HashSet};
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::network::{Activation, ChangeOfBasis, ThinRep};
use crate::quiver::{NetworkQuiver, NetworkQuiverBuilder, VertexId, VertexKind};
use crate::C64;

#[derive(Debug, Clone, PartialEq)]
pub struct RandomQuiverConfig {
    /// Total layers including input and output; at least 3.
    pub max_layers: usize,
    pub max_width: usize,
    pub max_inputs: usize,
    pub max_outputs: usize,
    /// Probability of each edge between consecutive layers.
    pub edge_prob: f64,
    /// Probability of each edge skipping at least one layer.
    pub skip_prob: f64,
    /// Probability that a non-output layer gets a bias vertex.
    pub bias_prob: f64,
    /// Probability that a hidden vertex is a max-pool vertex.
    pub max_pool_prob: f64,
}

impl Default for RandomQuiverConfig {
    fn default() -> Self {
        Self {
            max_layers: 5,
            max_width: 8,
            max_inputs: 4,
            max_outputs: 3,
            edge_prob: 0.6,
            skip_prob: 0.1,
            bias_prob: 0.4,
            max_pool_prob: 0.0,
        }
    }
}

/// A random valid network quiver: no parallel edges, every vertex on some
/// input-to-output path. Vertices are `v<layer>_<i>` and `b<layer>`.
pub fn random_network_quiver<R: Rng>(rng: &mut R, cfg: &RandomQuiverConfig) -> Arc<NetworkQuiver> {
    let n_layers = rng.gen_range(3..=cfg.max_layers.max(3));
    let last = n_layers - 1;
    let widths: Vec<usize> = (0..n_layers)
        .map(|l| match l {
            0 => rng.gen_range(1..=cfg.max_inputs),
            l if l == last => rng.gen_range(1..=cfg.max_outputs),
            _ => rng.gen_range(1..=cfg.max_width),
        })
        .collect();
    let mut b = NetworkQuiverBuilder::new();
    let mut layers: Vec<Vec<usize>> = Vec::new();
    let mut names: Vec<String> = Vec::new();
    for (l, &w) in widths.iter().enumerate() {
        let mut layer = Vec::new();
        for i in 0..w {
            let kind = match l {
                0 => VertexKind::Input,
                l if l == last => VertexKind::Output,
                _ if rng.gen_bool(cfg.max_pool_prob) => VertexKind::MaxPool,
                _ => VertexKind::Hidden,
            };
            let id = format!("v{l}_{i}");
            layer.push(b.vertex(id.clone(), kind, l).expect("fresh id"));
            names.push(id);
        }
        layers.push(layer);
    }

    let mut pairs: HashSet<(usize, usize)> = HashSet::new();
    let mut edges: Vec<(usize, usize)> = Vec::new();
    let mut add = |s: usize, t: usize, pairs: &mut HashSet<(usize, usize)>| {
        if pairs.insert((s, t)) {
            edges.push((s, t));
        }
    };
    for l in 1..n_layers {
        for &t in &layers[l] {
            for &s in &layers[l - 1] {
                if rng.gen_bool(cfg.edge_prob) {
                    add(s, t, &mut pairs);
                }
            }
            for &s in layers[..l.saturating_sub(1)].iter().flatten() {
                if rng.gen_bool(cfg.skip_prob) {
                    add(s, t, &mut pairs);
                }
            }
            if !pairs.iter().any(|&(_, tt)| tt == t) {
                let s = *layers[l - 1].choose(rng).expect("layers are nonempty");
                add(s, t, &mut pairs);
            }
        }
    }
    for l in 0..last {
        for &s in &layers[l] {
            if !pairs.iter().any(|&(ss, _)| ss == s) {
                let t = *layers[l + 1].choose(rng).expect("layers are nonempty");
                add(s, t, &mut pairs);
            }
        }
    }
    for l in 0..last {
        if !rng.gen_bool(cfg.bias_prob) {
            continue;
        }
        let id = format!("b{l}");
        let bias = b.vertex(id.clone(), VertexKind::Bias, l).expect("fresh id");
        names.push(id);
        let targets: Vec<usize> = layers[l + 1..].iter().flatten().copied().collect();
        let mut hit = false;
        for &t in &targets {
            if rng.gen_bool(0.5) {
                add(bias, t, &mut pairs);
                hit = true;
            }
        }
        if !hit {
            add(
                bias,
                *layers[l + 1].choose(rng).expect("layers are nonempty"),
                &mut pairs,
            );
        }
    }
    for (s, t) in edges {
        b.edge(format!("{}->{}", names[s], names[t]), s, t)
            .expect("endpoints exist");
    }
    Arc::new(b.build().expect("random construction satisfies the axioms"))
}

fn random_scalar<R: Rng>(rng: &mut R, complex: bool, lo: f64, hi: f64) -> C64 {
    let m = rng.gen_range(lo.ln()..hi.ln()).exp();
    if complex {
        C64::from_polar(
            m,
            rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI),
        )
    } else if rng.gen_bool(0.5) {
        C64::new(m, 0.0)
    } else {
        C64::new(-m, 0.0)
    }
}

/// Weights with modulus log-uniform in `[0.2, 1.5]`, never zero.
pub fn random_rep<R: Rng>(rng: &mut R, nq: &Arc<NetworkQuiver>, complex: bool) -> ThinRep {
    let w = (0..nq.edge_count())
        .map(|_| random_scalar(rng, complex, 0.2, 1.5))
        .collect();
    ThinRep::new(nq.clone(), w).expect("one finite weight per edge")
}

/// Scales with modulus log-uniform in `[0.1, 10]`.
pub fn random_tau<R: Rng>(rng: &mut R, nq: &NetworkQuiver, complex: bool) -> ChangeOfBasis {
    ChangeOfBasis::from_fn(nq, |_| random_scalar(rng, complex, 0.1, 10.0))
}

/// Real (or complex) entries uniform in `[-2, 2]` per component.
pub fn random_input<R: Rng>(rng: &mut R, d: usize, complex: bool) -> Vec<C64> {
    (0..d)
        .map(|_| {
            let im = if complex {
                rng.gen_range(-2.0..2.0)
            } else {
                0.0
            };
            C64::new(rng.gen_range(-2.0..2.0), im)
        })
        .collect()
}

/// An activation drawn from `choices` for every non-pool hidden vertex.
pub fn random_activations<R: Rng>(
    rng: &mut R,
    nq: &NetworkQuiver,
    choices: &[Activation],
) -> BTreeMap<VertexId, Activation> {
    nq.hidden()
        .iter()
        .filter(|&&v| nq.kind(v) == VertexKind::Hidden)
        .map(|&v| {
            let f = choices
                .choose(rng)
                .expect("at least one activation")
                .clone();
            (nq.vertex_id(v).to_string(), f)
        })
        .collect()
}
