//! The small 2-3-3-2 ReLU perceptron used throughout the documentation and
//! tests as a worked example, with its input and a change of basis.
//!
//! Vertices are named `l<layer>_<index>` and edges `<source>-><target>`, as
//! produced by [`layered_mlp`].

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::network::{Activation, ChangeOfBasis, NeuralNetwork, ThinRep};
use crate::quiver::layered_mlp;
use crate::C64;

/// Rows are targets, columns are sources.
pub const W1: [[f64; 2]; 3] = [[0.2, -0.4], [-1.1, 1.0], [-0.1, -0.2]];
pub const W2: [[f64; 3]; 3] = [[-0.6, -0.2, -0.3], [0.3, 1.2, -0.4], [-0.1, -1.0, 0.2]];
pub const W3: [[f64; 3]; 2] = [[0.5, -0.7, 0.3], [-1.2, 0.1, -0.6]];
pub const INPUT: [f64; 2] = [-1.2, 0.3];
/// Change of basis on the two hidden layers.
pub const TAU: [[f64; 3]; 2] = [[-0.2, 0.3, -1.1], [1.0, -1.0, 0.1]];

fn add_matrix<const R: usize, const C: usize>(
    map: &mut BTreeMap<String, C64>,
    layer: usize,
    m: &[[f64; C]; R],
) {
    for (i, row) in m.iter().enumerate() {
        for (j, w) in row.iter().enumerate() {
            map.insert(
                format!("l{}_{j}->l{}_{i}", layer - 1, layer),
                C64::new(*w, 0.0),
            );
        }
    }
}

pub fn reference_weights() -> BTreeMap<String, C64> {
    let mut map = BTreeMap::new();
    add_matrix(&mut map, 1, &W1);
    add_matrix(&mut map, 2, &W2);
    add_matrix(&mut map, 3, &W3);
    map
}

pub fn reference_mlp() -> NeuralNetwork {
    let nq = Arc::new(layered_mlp(&[2, 3, 3, 2]).expect("static quiver is valid"));
    let rep = ThinRep::from_map(nq, &reference_weights()).expect("weights cover every edge");
    NeuralNetwork::uniform(rep, Activation::Relu)
}

pub fn reference_input() -> Vec<C64> {
    INPUT.iter().map(|&x| C64::new(x, 0.0)).collect()
}

pub fn reference_tau() -> ChangeOfBasis {
    let mut map = BTreeMap::new();
    for (l, row) in TAU.iter().enumerate() {
        for (i, t) in row.iter().enumerate() {
            map.insert(format!("l{}_{i}", l + 1), C64::new(*t, 0.0));
        }
    }
    ChangeOfBasis::new(map).expect("scales are nonzero")
}
