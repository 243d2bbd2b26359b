//! The reference 2-3-3-2 ReLU network: forward pass, a change of basis, and
//! a check that the transformed network computes the same function.

use quiver_net::network::{act_on_network, forward, network_function, verify_isomorphism};
use quiver_net::reference::{reference_input, reference_mlp, reference_tau};
use quiver_net::C64;

fn main() -> quiver_net::Result<()> {
    let net = reference_mlp();
    let x = reference_input();
    let trace = forward(&net, &x)?;
    println!("Ψ(x) = {:?}", trace.output());
    for v in ["l1_0", "l1_1", "l1_2"] {
        println!(
            "  {v}: pre {:.3}, act {:.3}",
            trace.pre_activation(v).unwrap().re,
            trace.activation_output(v).unwrap().re
        );
    }

    // negative scales turn ReLU into a reflected activation
    let tau = reference_tau();
    let moved = act_on_network(&tau, &net)?;
    println!(
        "activation at l1_0 after τ: {:?}",
        moved.activation("l1_0").unwrap()
    );
    println!("τ·Ψ(x) = {:?}", network_function(&moved, &x)?);

    let samples = vec![x, vec![C64::new(0.7, 0.0), C64::new(-2.0, 0.0)]];
    let report = verify_isomorphism(&tau, &net, &moved, &samples, 1e-9)?;
    println!(
        "isomorphism: {} (worst weight residual {:.1e})",
        report.passed(),
        report.weights.max_residual
    );
    Ok(())
}
