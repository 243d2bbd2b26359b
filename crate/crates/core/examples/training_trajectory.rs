//! Gradient descent on a tanh network while recording the moduli trajectory
//! of the training inputs.

use quiver_net::network::{Activation, NeuralNetwork};
use quiver_net::random::{random_input, random_rep};
use quiver_net::reference::reference_mlp;
use quiver_net::trace::{train, Sample, TrainConfig};
use quiver_net::C64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> quiver_net::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let nq = reference_mlp().quiver().clone();
    let net = NeuralNetwork::uniform(random_rep(&mut rng, &nq, false), Activation::Tanh);
    let data: Vec<Sample> = (0..8)
        .map(|_| {
            let x = random_input(&mut rng, 2, false);
            let y = vec![
                C64::new((x[0].re - x[1].re).sin(), 0.0),
                C64::new(x[0].re * x[1].re / 4.0, 0.0),
            ];
            (x, y)
        })
        .collect();
    let run = train(
        &net,
        &Default::default(),
        &data,
        TrainConfig {
            learning_rate: 0.05,
            steps: 200,
        },
    )?;
    println!("loss {:.4} -> {:.4}", run.initial_loss, run.final_loss());

    let inputs: Vec<Vec<C64>> = data.iter().map(|(x, _)| x.clone()).collect();
    let record = run.trajectory(&inputs[..2])?;
    for step in record.steps.iter().step_by(50) {
        let p = step.samples[0]
            .point
            .as_ref()
            .expect("tanh never vanishes here");
        let head: Vec<String> = p
            .values()
            .take(3)
            .map(|z| format!("{:+.3}", z.re))
            .collect();
        println!("step {:>3}: φ(x_0) starts {}", step.step, head.join(" "));
    }
    println!("{} csv rows", record.to_csv().lines().count() - 1);
    Ok(())
}
