//! The data representation of one input: a linear network with the same
//! quiver whose output on the all-ones vector equals Ψ(x).

use quiver_net::datarep::{data_representation, verify_data_theorem};
use quiver_net::network::{forward_linear, network_function};
use quiver_net::reference::{reference_input, reference_mlp};
use quiver_net::C64;

fn main() -> quiver_net::Result<()> {
    let net = reference_mlp();
    let x = reference_input();
    let dr = data_representation(&net, &x)?;
    println!("weights of W_x^f into layer 1 and 2:");
    for (id, w) in dr.rep.to_map() {
        if id.contains("->l2_") {
            println!("  {id}: {:+.4}", w.re);
        }
    }
    let ones = vec![C64::new(1.0, 0.0); 2];
    println!("W_x^f(1) = {:?}", forward_linear(&dr.rep, &ones)?.output());
    println!("Ψ(x)     = {:?}", network_function(&net, &x)?);
    let report = verify_data_theorem(&net, &x, 1e-12)?;
    println!(
        "output residual {:.1e}, vertices fixed for zero values: {:?}",
        report.output_residual, report.eta_fixes
    );
    Ok(())
}
