//! Double framing and stability. The reference weights are stable; the data
//! representation at the reference input is not, because l1_0 is dead.

use quiver_net::datarep::data_representation;
use quiver_net::moduli::{double_frame, stability_by_enumeration, stability_check, undouble_frame};
use quiver_net::reference::{reference_input, reference_mlp};

fn main() -> quiver_net::Result<()> {
    let net = reference_mlp();
    let framed = double_frame(net.rep(), false)?;
    println!("framing sources: {:?}", framed.framing_sources);
    let report = stability_check(&framed);
    println!(
        "weights stable: {} (enumeration agrees: {:?})",
        report.stable,
        stability_by_enumeration(&framed)
    );
    assert_eq!(&undouble_frame(&framed)?, net.rep());

    let dr = data_representation(&net, &reference_input())?;
    let report = stability_check(&double_frame(&dr.rep, false)?);
    println!(
        "data representation stable: {}, failed {:?}, witness {:?}",
        report.stable, report.failed, report.witness
    );
    Ok(())
}
