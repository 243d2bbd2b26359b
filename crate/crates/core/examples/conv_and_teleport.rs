//! A small conv / max-pool / dense network built from layer specs, then
//! teleported by a random change of basis that keeps the shared kernels shared.

use quiver_net::layers::{
    admissible_tau, build_network, check_weight_architecture, teleport, LayerSpec,
};
use quiver_net::network::network_function;
use quiver_net::random::random_input;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> quiver_net::Result<()> {
    let specs = [
        LayerSpec::Conv1d {
            length: 8,
            channels_in: 1,
            channels_out: 2,
            kernel: 3,
            stride: 1,
            padding: 1,
            bias: true,
        },
        LayerSpec::MaxPool {
            window: 2,
            stride: 2,
        },
        LayerSpec::FullyConnected {
            inputs: 8,
            out: 3,
            bias: true,
        },
    ];
    let built = build_network(&specs, 8, 3)?;
    let nq = &built.quiver;
    println!(
        "{} vertices, {} edges, {} parameters",
        nq.vertex_count(),
        nq.edge_count(),
        built.params.len()
    );
    println!(
        "{} tie classes, {} fixed edges",
        built.architecture.tie_classes.len(),
        built.architecture.fixed.len()
    );

    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let net = built.network(built.random_rep(&mut rng))?;
    let tau = admissible_tau(&built.architecture, nq, 42);
    let moved = teleport(&net, &tau, &built.architecture)?;
    let report = check_weight_architecture(moved.rep(), &built.architecture, 1e-9);
    println!("architecture kept: {}", report.passed());

    let x = random_input(&mut rng, 8, false);
    let (a, b) = (network_function(&net, &x)?, network_function(&moved, &x)?);
    let gap = a
        .iter()
        .zip(&b)
        .map(|(p, q)| (p - q).norm())
        .fold(0.0, f64::max);
    println!("max output difference after teleport: {gap:.1e}");
    let moved_weight = nq
        .delooped()
        .edges()
        .iter()
        .zip(moved.rep().weights())
        .zip(net.rep().weights());
    let changed = moved_weight
        .filter(|((_, w1), w0)| (*w1 - **w0).norm() > 1e-9)
        .count();
    println!("{changed} weights changed");
    Ok(())
}
