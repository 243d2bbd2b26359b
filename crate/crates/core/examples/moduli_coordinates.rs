//! Orbit coordinates: the gauge forest, invariance under change of basis, and
//! the moduli map φ(W, f)(x) together with the output recovered from it.

use quiver_net::moduli::{
    canonicalize, moduli_dimension, moduli_map_with, psi_hat, CanonicalOptions, ModuliMapOptions,
};
use quiver_net::network::{act_on_weights, network_function, Activation, NeuralNetwork};
use quiver_net::random::{random_input, random_rep, random_tau};
use quiver_net::reference::{reference_input, reference_mlp};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> quiver_net::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let nq = reference_mlp().quiver().clone();
    println!("dim = {}", moduli_dimension(&nq));

    let rep = random_rep(&mut rng, &nq, true);
    let tau = random_tau(&mut rng, &nq, true);
    let (p, q) = (
        canonicalize(&rep)?,
        canonicalize(&act_on_weights(&tau, &rep)?)?,
    );
    println!("forest {:?}", p.forest);
    println!("same point after τ: {}", p.approx_eq(&q, 1e-9));

    // a ReLU unit is dead at the reference input, so a forest weight vanishes
    let net = reference_mlp();
    match moduli_map_with(&net, &reference_input(), ModuliMapOptions::default()) {
        Err(e) => println!("φ undefined: {e}"),
        Ok(_) => unreachable!(),
    }
    let perturbed = ModuliMapOptions {
        canonical: CanonicalOptions {
            perturb: Some(1e-9),
        },
        ..Default::default()
    };
    let p = moduli_map_with(&net, &reference_input(), perturbed)?;
    println!("with perturbation: {} coordinates", p.dimension());

    let tanh = NeuralNetwork::uniform(random_rep(&mut rng, &nq, false), Activation::Tanh);
    let x = random_input(&mut rng, 2, false);
    let p = moduli_map_with(&tanh, &x, ModuliMapOptions::default())?;
    println!("ψ̂(φ(x)) = {:?}", psi_hat(&p, &nq)?);
    println!("Ψ(x)     = {:?}", network_function(&tanh, &x)?);
    Ok(())
}
