//! The JSON model format: an explicit model written and read back, and a
//! model described by layer specs.

use quiver_net::cli::{Model, ModelFile};
use quiver_net::layers::WeightArchitecture;
use quiver_net::network::network_function;
use quiver_net::reference::{reference_input, reference_mlp};

fn main() -> quiver_net::Result<()> {
    let model = Model {
        net: reference_mlp(),
        arch: WeightArchitecture::default(),
    };
    let text = model.to_json_string();
    println!("explicit model: {} lines", text.lines().count());
    let back = ModelFile::parse(&text)?.into_model()?;
    println!(
        "round trip Ψ(x) = {:?}",
        network_function(&back.net, &reference_input())?
    );

    let builder = r#"{
        "layers": [
            {"type": "fully_connected", "in": 2, "out": 4, "bias": true},
            {"type": "fully_connected", "in": 4, "out": 4, "bias": false},
            {"type": "fully_connected", "in": 4, "out": 4, "bias": false},
            {"type": "residual", "from_layer": 1, "to_layer": 3}
        ],
        "d": 2, "k": 1, "seed": 5,
        "activations": {"L1_0": "tanh"}
    }"#;
    let m = ModelFile::parse(builder)?.into_model()?;
    println!(
        "builder model: {} edges, fixed {:?}",
        m.net.quiver().edge_count(),
        m.arch.fixed.keys().collect::<Vec<_>>()
    );
    Ok(())
}
