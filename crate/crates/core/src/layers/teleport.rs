use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{check_weight_architecture, WeightArchitecture};
use crate::error::{Error, Result};
use crate::network::{act_on_network, act_on_weights, ChangeOfBasis, NeuralNetwork};
use crate::quiver::NetworkQuiver;
use crate::{C64, ZERO_TOL};

const TELEPORT_TOL: f64 = 1e-9;

/// `τ·(W, f)`, provided `τ·W` still satisfies `arch`. The activations may
/// change; tie classes and fixed weights are preserved.
pub fn teleport(
    net: &NeuralNetwork,
    tau: &ChangeOfBasis,
    arch: &WeightArchitecture,
) -> Result<NeuralNetwork> {
    let moved = act_on_weights(tau, net.rep())?;
    let report = check_weight_architecture(&moved, arch, TELEPORT_TOL);
    if let Some(v) = report.worst() {
        return Err(Error::BreaksWeightArchitecture {
            location: v.location.clone(),
            residual: v.residual,
        });
    }
    act_on_network(tau, net)
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (a, b) = (self.find(a), self.find(b));
        if a != b {
            self.parent[a.max(b)] = a.min(b);
        }
    }
}

/// A random real change of basis under which every tie class and fixed
/// weight of `arch` is preserved, so [`teleport`] accepts it.
///
/// Vertices are grouped by union-find: all targets of a tie class share one
/// scale, as do all its sources, and both ends of a nonzero fixed edge
/// share one. Groups containing a non-hidden vertex get scale 1; every other
/// group gets `±m` with `m` log-uniform in `[0.1, 10]`.
pub fn admissible_tau(arch: &WeightArchitecture, nq: &NetworkQuiver, seed: u64) -> ChangeOfBasis {
    let n = nq.vertex_count();
    let one = n;
    let mut uf = UnionFind::new(n + 1);
    for v in 0..n {
        if !nq.is_hidden(v) {
            uf.union(v, one);
        }
    }
    for class in &arch.tie_classes {
        let edges: Vec<_> = class
            .iter()
            .filter_map(|e| nq.edge_position(e))
            .map(|i| nq.edge(i))
            .collect();
        for pair in edges.windows(2) {
            uf.union(pair[0].target, pair[1].target);
            uf.union(pair[0].source, pair[1].source);
        }
    }
    for (e, value) in &arch.fixed {
        if value.norm() <= ZERO_TOL {
            continue;
        }
        if let Some(i) = nq.edge_position(e) {
            let edge = nq.edge(i);
            uf.union(edge.source, edge.target);
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let root_one = uf.find(one);
    let mut scales: BTreeMap<usize, C64> = BTreeMap::new();
    scales.insert(root_one, C64::new(1.0, 0.0));
    ChangeOfBasis::from_fn(nq, |id| {
        let v = nq.vertex(id).expect("hidden vertex belongs to the quiver");
        let root = uf.find(v);
        *scales.entry(root).or_insert_with(|| {
            let m = rng.gen_range(0.1f64.ln()..10f64.ln()).exp();
            let s = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
            C64::new(s * m, 0.0)
        })
    })
}
