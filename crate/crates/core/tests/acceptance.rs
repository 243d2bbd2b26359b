//! Acceptance criteria, one PASS/FAIL line each. Runs without the libtest
//! harness so the lines are always printed; exits nonzero if any fails.

use std::collections::BTreeMap;
use std::sync::Arc;
use std::time::{Duration, Instant};

use quiver_net::datarep::{data_representation, verify_data_theorem};
use quiver_net::layers::{
    admissible_tau, build_network, check_weight_architecture, teleport, LayerSpec,
};
use quiver_net::moduli::{
    canonicalize, double_frame, moduli_dimension, moduli_map, psi_hat, stability_by_enumeration,
    stability_check, Instability,
};
use quiver_net::network::{
    act_on_network, act_on_weights, forward, forward_linear, network_function, Activation,
    ChangeOfBasis, NeuralNetwork, ThinRep,
};
use quiver_net::quiver::{layered_mlp, NetworkQuiver, NetworkQuiverBuilder, VertexKind};
use quiver_net::random::{
    random_activations, random_input, random_network_quiver, random_rep, random_tau,
    RandomQuiverConfig,
};
use quiver_net::reference::{reference_input, reference_mlp, reference_tau};
use quiver_net::trace::{gradients, train, Sample, TrainConfig};
use quiver_net::C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

fn reals(v: &[f64]) -> Vec<C64> {
    v.iter().map(|&x| c(x)).collect()
}

/// `max_i |a_i − b_i| / max(1, |b_i|)`.
fn rel_err(a: &[C64], b: &[C64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).norm() / y.norm().max(1.0))
        .fold(0.0, f64::max)
}

fn abs_err(a: &[C64], b: &[C64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn small_quivers() -> RandomQuiverConfig {
    RandomQuiverConfig::default()
}

// 1 -------------------------------------------------------------------------

fn forward_reproduction() -> Outcome {
    // best of five, so a busy machine does not decide the timing
    let mut elapsed = Duration::MAX;
    let mut t = None;
    for _ in 0..5 {
        let start = Instant::now();
        let net = reference_mlp();
        t = Some(forward(&net, &reference_input()).map_err(|e| e.to_string())?);
        elapsed = elapsed.min(start.elapsed());
    }
    let t = t.unwrap();
    let pre = |layer: usize| -> Vec<C64> {
        (0..3)
            .map(|i| t.pre_activation(&format!("l{layer}_{i}")).unwrap())
            .collect()
    };
    let err = abs_err(t.output(), &reals(&[-1.344, 0.192]))
        .max(abs_err(&pre(1), &reals(&[-0.36, 1.62, 0.06])))
        .max(abs_err(&pre(2), &reals(&[-0.342, 1.92, -1.608])));
    check(
        err <= 1e-9 && elapsed < Duration::from_millis(1),
        format!("max error {err:.1e}, {elapsed:?}"),
    )
}

// 2 -------------------------------------------------------------------------

fn isomorphism_reproduction() -> Outcome {
    let net = reference_mlp();
    let tau = reference_tau();
    let moved_rep = act_on_weights(&tau, net.rep()).map_err(|e| e.to_string())?;
    let want = [[-0.04, 0.08], [-0.33, 0.3], [0.11, 0.22]];
    let mut w_err: f64 = 0.0;
    for (i, row) in want.iter().enumerate() {
        for (j, &w) in row.iter().enumerate() {
            let got = moved_rep.weight(&format!("l0_{j}->l1_{i}")).unwrap();
            w_err = w_err.max((got - c(w)).norm());
        }
    }
    let moved = act_on_network(&tau, &net).map_err(|e| e.to_string())?;
    let g = Activation::FlippedRelu;
    let r = Activation::Relu;
    let want_acts = [&g, &r, &g, &r, &g, &r];
    let names = ["l1_0", "l1_1", "l1_2", "l2_0", "l2_1", "l2_2"];
    let acts_ok = names
        .iter()
        .zip(want_acts)
        .all(|(v, f)| moved.activation(v) == Some(f));

    let x = reference_input();
    let (ta, tb) = (forward(&net, &x).unwrap(), forward(&moved, &x).unwrap());
    let psi_err = abs_err(tb.output(), ta.output());
    let post1: Vec<C64> = (0..3)
        .map(|i| tb.activation_output(&format!("l1_{i}")).unwrap())
        .collect();
    let mut scale_err = abs_err(&post1, &reals(&[0.0, 0.486, -0.066]));
    for v in names {
        let want = tau.get(v).unwrap() * ta.activation_output(v).unwrap();
        scale_err = scale_err.max((tb.activation_output(v).unwrap() - want).norm());
    }
    check(
        w_err <= 1e-12 && acts_ok && psi_err <= 1e-9 && scale_err <= 1e-9,
        format!("τW₁ error {w_err:.1e}, activations {acts_ok}, Ψ error {psi_err:.1e}, scaling error {scale_err:.1e}"),
    )
}

// 3 -------------------------------------------------------------------------

fn data_rep_reproduction() -> Outcome {
    let net = reference_mlp();
    let dr = data_representation(&net, &reference_input()).map_err(|e| e.to_string())?;
    let v1 = [[-0.24, -0.12], [1.32, 0.3], [0.12, -0.06]];
    let v2 = [[0.0, -0.2, -0.3], [0.0, 1.2, -0.4], [0.0, -1.0, 0.2]];
    let v3 = [[0.0, -0.7, 0.0], [0.0, 0.1, 0.0]];
    let mut err: f64 = 0.0;
    let mut cmp = |layer: usize, rows: &[&[f64]]| {
        for (i, row) in rows.iter().enumerate() {
            for (j, &w) in row.iter().enumerate() {
                let got = dr
                    .rep
                    .weight(&format!("l{}_{j}->l{layer}_{i}", layer - 1))
                    .unwrap();
                err = err.max((got - c(w)).norm());
            }
        }
    };
    cmp(1, &v1.iter().map(|r| &r[..]).collect::<Vec<_>>());
    cmp(2, &v2.iter().map(|r| &r[..]).collect::<Vec<_>>());
    cmp(3, &v3.iter().map(|r| &r[..]).collect::<Vec<_>>());
    let out = forward_linear(&dr.rep, &reals(&[1.0, 1.0])).unwrap();
    let psi_err = abs_err(out.output(), &reals(&[-1.344, 0.192]));
    check(
        err <= 1e-12 && psi_err <= 1e-9,
        format!("V error {err:.1e}, Ψ(W_x^f)(1) error {psi_err:.1e}"),
    )
}

// 4 -------------------------------------------------------------------------

fn invariance_suite() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let choices = [
        Activation::Relu,
        Activation::Tanh,
        Activation::Sigmoid,
        Activation::Identity,
    ];
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let nq = random_network_quiver(&mut rng, &small_quivers());
        let acts = random_activations(&mut rng, &nq, &choices);
        let net = NeuralNetwork::new(random_rep(&mut rng, &nq, true), &acts).unwrap();
        let inputs: Vec<Vec<C64>> = (0..20)
            .map(|_| random_input(&mut rng, nq.input_dim(), true))
            .collect();
        let base: Vec<Vec<C64>> = inputs
            .iter()
            .map(|x| network_function(&net, x).unwrap())
            .collect();
        for _ in 0..10 {
            let tau = random_tau(&mut rng, &nq, true);
            let moved = act_on_network(&tau, &net).unwrap();
            for (x, want) in inputs.iter().zip(&base) {
                worst = worst.max(rel_err(&network_function(&moved, x).unwrap(), want));
            }
        }
    }
    let elapsed = start.elapsed();
    check(
        worst <= 1e-9 && elapsed < Duration::from_secs(30),
        format!("10000 comparisons, max relative error {worst:.1e}, {elapsed:.2?}"),
    )
}

// 5 -------------------------------------------------------------------------

fn relu_and_max_pool_invariance() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (mut relu_worst, mut structural) = (0.0f64, true);
    for _ in 0..50 {
        let nq = random_network_quiver(&mut rng, &small_quivers());
        let net = NeuralNetwork::uniform(random_rep(&mut rng, &nq, false), Activation::Relu);
        let tau = ChangeOfBasis::from_fn(&nq, |_| c(rng.gen_range(0.1f64.ln()..10f64.ln()).exp()));
        let moved = act_on_network(&tau, &net).unwrap();
        structural &= moved.activations() == net.activations();
        for _ in 0..20 {
            let x = random_input(&mut rng, nq.input_dim(), false);
            relu_worst = relu_worst.max(rel_err(
                &network_function(&moved, &x).unwrap(),
                &network_function(&net, &x).unwrap(),
            ));
        }
    }
    let cfg = RandomQuiverConfig {
        max_pool_prob: 0.4,
        ..small_quivers()
    };
    let (mut pool_worst, mut pools) = (0.0f64, 0);
    for _ in 0..50 {
        let nq = random_network_quiver(&mut rng, &cfg);
        pools += nq.has_max_pool() as usize;
        let acts = random_activations(&mut rng, &nq, &[Activation::Relu, Activation::Tanh]);
        let net = NeuralNetwork::new(random_rep(&mut rng, &nq, false), &acts).unwrap();
        let tau = random_tau(&mut rng, &nq, false);
        let moved = act_on_network(&tau, &net).unwrap();
        for _ in 0..20 {
            let x = random_input(&mut rng, nq.input_dim(), false);
            pool_worst = pool_worst.max(rel_err(
                &network_function(&moved, &x).unwrap(),
                &network_function(&net, &x).unwrap(),
            ));
        }
    }
    check(
        structural && relu_worst <= 1e-12 && pool_worst <= 1e-9 && pools >= 25,
        format!(
            "ReLU maps unchanged {structural}, positive-τ error {relu_worst:.1e}; \
             {pools} max-pool nets, real-τ error {pool_worst:.1e}"
        ),
    )
}

// 6 -------------------------------------------------------------------------

/// A net whose vertex `z` has pre-activation exactly 0 at `x = (a, a)`:
/// `z` receives `w·x0 − w·x1`, and also feeds a deeper layer so the fix matters.
fn engineered_zero(rng: &mut ChaCha8Rng, f: Activation) -> (NeuralNetwork, Vec<C64>) {
    let mut b = NetworkQuiverBuilder::new();
    let x0 = b.vertex("x0", VertexKind::Input, 0).unwrap();
    let x1 = b.vertex("x1", VertexKind::Input, 0).unwrap();
    let z = b.vertex("z", VertexKind::Hidden, 1).unwrap();
    let h = b.vertex("h", VertexKind::Hidden, 1).unwrap();
    let g = b.vertex("g", VertexKind::Hidden, 2).unwrap();
    let y = b.vertex("y", VertexKind::Output, 3).unwrap();
    let mut weights = Vec::new();
    let w: f64 = rng.gen_range(0.2..1.5);
    for (s, t, v) in [
        (x0, z, w),
        (x1, z, -w),
        (x0, h, rng.gen_range(-1.5..1.5)),
        (x1, h, rng.gen_range(-1.5..1.5)),
        (z, g, rng.gen_range(-1.5..1.5)),
        (h, g, rng.gen_range(-1.5..1.5)),
        (g, y, rng.gen_range(-1.5..1.5)),
        (z, y, rng.gen_range(-1.5..1.5)),
    ] {
        b.edge(format!("{s}-{t}"), s, t).unwrap();
        weights.push(c(v));
    }
    let nq = Arc::new(b.build().unwrap());
    let acts: BTreeMap<String, Activation> = [("z", f.clone()), ("h", Activation::Tanh), ("g", f)]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect();
    let net = NeuralNetwork::new(ThinRep::new(nq, weights).unwrap(), &acts).unwrap();
    let a = rng.gen_range(-2.0..2.0);
    (net, vec![c(a), c(a)])
}

fn data_theorem_suite() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let choices = [Activation::Relu, Activation::Tanh, Activation::Sigmoid];
    let (mut worst, mut failures) = (0.0f64, 0);
    for _ in 0..50 {
        let nq = random_network_quiver(&mut rng, &small_quivers());
        let acts = random_activations(&mut rng, &nq, &choices);
        let net = NeuralNetwork::new(random_rep(&mut rng, &nq, false), &acts).unwrap();
        for _ in 0..20 {
            let x = random_input(&mut rng, nq.input_dim(), false);
            let r = verify_data_theorem(&net, &x, 1e-9).unwrap();
            worst = worst.max(rel_err(&r.data_output, &r.network_output));
            failures += usize::from(!r.passed);
        }
    }
    let mut fixed_cases = 0;
    for f in [
        Activation::Sigmoid,
        Activation::Tanh,
        Activation::Relu,
        Activation::Sigmoid,
        Activation::Tanh,
        Activation::Relu,
    ] {
        let (net, x) = engineered_zero(&mut rng, f);
        assert_eq!(forward(&net, &x).unwrap().pre_activation("z"), Some(c(0.0)));
        let r = verify_data_theorem(&net, &x, 1e-9).unwrap();
        worst = worst.max(rel_err(&r.data_output, &r.network_output));
        failures += usize::from(!r.passed);
        fixed_cases += usize::from(r.eta_fixes.contains("z"));
    }
    check(
        worst <= 1e-9 && failures == 0 && fixed_cases >= 5,
        format!("1006 cases, max relative error {worst:.1e}, {fixed_cases} exact-zero cases used the η fix"),
    )
}

// 7 -------------------------------------------------------------------------

fn canonical_form_suite() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let reference_dim = moduli_dimension(reference_mlp().quiver());
    let (mut dims_ok, mut worst, mut free) = (reference_dim == 15, 0.0f64, true);
    for _ in 0..50 {
        let nq = random_network_quiver(&mut rng, &small_quivers());
        let rep = random_rep(&mut rng, &nq, true);
        let p = canonicalize(&rep).unwrap();
        dims_ok &= p.dimension() == nq.edge_count() - nq.hidden().len()
            && p.dimension() == moduli_dimension(&nq);
        for _ in 0..100 {
            let tau = random_tau(&mut rng, &nq, true);
            let q = canonicalize(&act_on_weights(&tau, &rep).unwrap()).unwrap();
            worst = worst.max(rel_err(
                &q.values().collect::<Vec<_>>(),
                &p.values().collect::<Vec<_>>(),
            ));
        }
        // a change of basis moving one vertex only must still move the weights
        let hidden = nq.hidden().to_vec();
        for (k, &v) in hidden.iter().enumerate().take(3) {
            let target = nq.vertex_id(v).to_string();
            let scale = random_tau(&mut rng, &nq, true).get(&target).unwrap();
            let tau = ChangeOfBasis::from_fn(&nq, |id| if id == target { scale } else { c(1.0) });
            let moved = act_on_weights(&tau, &rep).unwrap();
            free &= tau.is_identity() || moved.weights() != rep.weights();
            if k == 0 {
                let tau = random_tau(&mut rng, &nq, true);
                free &= act_on_weights(&tau, &rep).unwrap().weights() != rep.weights();
            }
        }
    }
    check(
        dims_ok && worst <= 1e-9 && free,
        format!("dimensions {dims_ok} (reference {reference_dim}), invariance error {worst:.1e}, free {free}"),
    )
}

// 8 -------------------------------------------------------------------------

fn stability_suite() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let cfg = RandomQuiverConfig {
        max_width: 4,
        ..small_quivers()
    };
    let (mut agree, mut nonzero_stable, mut unstable_seen) = (0, true, 0);
    for _ in 0..200 {
        let nq = random_network_quiver(&mut rng, &cfg);
        let rep = random_rep(&mut rng, &nq, true);
        nonzero_stable &= stability_check(&double_frame(&rep, true).unwrap()).stable;
        let p_zero = rng.gen_range(0.1..0.6);
        let w: Vec<C64> = rep
            .weights()
            .iter()
            .map(|&x| if rng.gen_bool(p_zero) { c(0.0) } else { x })
            .collect();
        let dfr = double_frame(&ThinRep::new(nq.clone(), w).unwrap(), true).unwrap();
        assert!(dfr.hidden().quiver.vertex_count() <= 12);
        let r = stability_check(&dfr);
        let (kernel_ok, image_ok) = stability_by_enumeration(&dfr);
        let expected = match (kernel_ok, image_ok) {
            (true, true) => None,
            (false, _) => Some(Instability::KernelOfH),
            (true, false) => Some(Instability::ImageOfEll),
        };
        agree += usize::from(r.stable == (kernel_ok && image_ok) && r.failed == expected);
        unstable_seen += usize::from(!r.stable);
    }
    check(
        agree == 200 && nonzero_stable,
        format!("{agree}/200 agree ({unstable_seen} unstable), all-nonzero always stable {nonzero_stable}"),
    )
}

// 9 -------------------------------------------------------------------------

fn decomposition_suite() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut worst: f64 = 0.0;
    for _ in 0..30 {
        let nq = random_network_quiver(&mut rng, &small_quivers());
        let net = NeuralNetwork::uniform(random_rep(&mut rng, &nq, false), Activation::Tanh);
        for _ in 0..20 {
            let x = random_input(&mut rng, nq.input_dim(), false);
            let p = moduli_map(&net, &x).map_err(|e| e.to_string())?;
            let got = psi_hat(&p, &nq).unwrap();
            worst = worst.max(abs_err(&got, &network_function(&net, &x).unwrap()));
        }
    }
    check(worst <= 1e-9, format!("600 points, max error {worst:.1e}"))
}

// 10 ------------------------------------------------------------------------

fn relu(x: f64) -> f64 {
    x.max(0.0)
}

/// Direct N-d convolution, channel-major row-major layout. `kernel[o][c]` is a
/// flat row-major window; the window is reversed before sliding (true
/// convolution rather than correlation).
#[allow(clippy::too_many_arguments)]
fn conv_oracle(
    x: &[f64],
    dims: &[usize],
    cin: usize,
    kernel: &[Vec<Vec<f64>>],
    kdims: &[usize],
    bias: &[f64],
    stride: usize,
    pad: usize,
) -> Vec<f64> {
    let nd = dims.len();
    let out_dims: Vec<usize> = (0..nd)
        .map(|a| (dims[a] + 2 * pad - kdims[a]) / stride + 1)
        .collect();
    let in_size: usize = dims.iter().product();
    let per_out: usize = out_dims.iter().product();
    let kn: usize = kdims.iter().product();
    let mut y = Vec::new();
    for (o, ko) in kernel.iter().enumerate() {
        for pos in 0..per_out {
            let (mut rem, mut oi) = (pos, vec![0; nd]);
            for a in (0..nd).rev() {
                oi[a] = rem % out_dims[a];
                rem /= out_dims[a];
            }
            let mut acc = bias[o];
            for (ch, kc) in ko.iter().enumerate().take(cin) {
                let flipped: Vec<f64> = kc.iter().rev().copied().collect();
                for (kp, kv) in flipped.iter().enumerate().take(kn) {
                    let (mut rem, mut ki) = (kp, vec![0; nd]);
                    for a in (0..nd).rev() {
                        ki[a] = rem % kdims[a];
                        rem /= kdims[a];
                    }
                    let mut flat = 0usize;
                    let mut inside = true;
                    for a in 0..nd {
                        let p = (oi[a] * stride + ki[a]) as isize - pad as isize;
                        inside &= p >= 0 && (p as usize) < dims[a];
                        flat = flat * dims[a] + p.max(0) as usize;
                    }
                    if inside {
                        acc += kv * x[ch * in_size + flat];
                    }
                }
            }
            y.push(relu(acc));
        }
    }
    y
}

fn pool_oracle(
    x: &[f64],
    channels: usize,
    dims: &[usize],
    window: usize,
    stride: usize,
    max: bool,
) -> Vec<f64> {
    let nd = dims.len();
    let out_dims: Vec<usize> = dims.iter().map(|&n| (n - window) / stride + 1).collect();
    let in_size: usize = dims.iter().product();
    let mut y = Vec::new();
    for ch in 0..channels {
        for pos in 0..out_dims.iter().product::<usize>() {
            let (mut rem, mut oi) = (pos, vec![0; nd]);
            for a in (0..nd).rev() {
                oi[a] = rem % out_dims[a];
                rem /= out_dims[a];
            }
            let mut vals = Vec::new();
            for wp in 0..window.pow(nd as u32) {
                let (mut rem, mut flat) = (wp, 0);
                let mut wi = vec![0; nd];
                for a in (0..nd).rev() {
                    wi[a] = rem % window;
                    rem /= window;
                }
                for a in 0..nd {
                    flat = flat * dims[a] + oi[a] * stride + wi[a];
                }
                vals.push(x[ch * in_size + flat]);
            }
            y.push(if max {
                vals.iter().copied().fold(f64::NEG_INFINITY, f64::max)
            } else {
                vals.iter().sum::<f64>() / vals.len() as f64
            });
        }
    }
    y
}

fn layer_outputs(net: &NeuralNetwork, vertices: &[String], x: &[f64]) -> Vec<f64> {
    let t = forward(net, &reals(x)).unwrap();
    vertices
        .iter()
        .map(|v| t.activation_output(v).unwrap().re)
        .collect()
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs() / y.abs().max(1.0))
        .fold(0.0, f64::max)
}

/// One random conv layer (1-d or 2-d), optionally followed by a pooling layer.
/// Returns the error of the conv layer and, if present, the pooling layer.
fn conv_case(rng: &mut ChaCha8Rng, two_d: bool, pool: Option<bool>) -> (f64, f64) {
    let cin = rng.gen_range(1..=2);
    let cout = rng.gen_range(1..=3);
    // every input must be read, so strided windows are at least as wide as
    // the stride and tile the padded input exactly
    let stride = rng.gen_range(1..=2);
    let kdims: Vec<usize> = (0..if two_d { 2 } else { 1 })
        .map(|_| rng.gen_range(stride..=3))
        .collect();
    let pad = rng.gen_range(0..*kdims.iter().min().unwrap()).min(1);
    let dims: Vec<usize> = kdims
        .iter()
        .map(|&k| k + stride * rng.gen_range(1..=3))
        .collect();
    let bias = rng.gen_bool(0.5);
    let conv = if two_d {
        LayerSpec::Conv2d {
            h: dims[0],
            w: dims[1],
            channels_in: cin,
            channels_out: cout,
            kernel_h: kdims[0],
            kernel_w: kdims[1],
            stride,
            padding: pad,
            bias,
        }
    } else {
        LayerSpec::Conv1d {
            length: dims[0],
            channels_in: cin,
            channels_out: cout,
            kernel: kdims[0],
            stride,
            padding: pad,
            bias,
        }
    };
    let out_dims: Vec<usize> = (0..dims.len())
        .map(|a| (dims[a] + 2 * pad - kdims[a]) / stride + 1)
        .collect();
    let mut specs = vec![conv];
    let window = out_dims.iter().copied().min().unwrap().min(2);
    if let Some(max) = pool {
        specs.push(if max {
            LayerSpec::MaxPool { window, stride: 1 }
        } else {
            LayerSpec::AvgPool { window, stride: 1 }
        });
    }
    let d = cin * dims.iter().product::<usize>();
    let built = build_network(&specs, d, 1).unwrap();

    let kn: usize = kdims.iter().product();
    let kernel: Vec<Vec<Vec<f64>>> = (0..cout)
        .map(|_| {
            (0..cin)
                .map(|_| (0..kn).map(|_| rng.gen_range(-1.0..1.0)).collect())
                .collect()
        })
        .collect();
    let biases: Vec<f64> = (0..cout)
        .map(|_| if bias { rng.gen_range(-0.5..0.5) } else { 0.0 })
        .collect();
    let mut values = BTreeMap::new();
    for (o, ko) in kernel.iter().enumerate() {
        for (ch, kc) in ko.iter().enumerate() {
            for (kp, &v) in kc.iter().enumerate() {
                let idx = if two_d {
                    format!("{},{}", kp / kdims[1], kp % kdims[1])
                } else {
                    kp.to_string()
                };
                values.insert(format!("L1.k[o{o},c{ch},{idx}]"), c(v));
            }
        }
        values.insert(format!("L1.b[o{o}]"), c(biases[o]));
    }
    for (label, p) in &built.params {
        if p.fixed.is_none() && !values.contains_key(label) {
            values.insert(label.clone(), c(rng.gen_range(-1.0..1.0)));
        }
    }
    let net = built.network(built.rep_with(&values).unwrap()).unwrap();
    let x: Vec<f64> = (0..d).map(|_| rng.gen_range(-2.0..2.0)).collect();
    let want = conv_oracle(&x, &dims, cin, &kernel, &kdims, &biases, stride, pad);
    let conv_err = max_diff(&layer_outputs(&net, built.spec_vertices(0), &x), &want);
    let pool_err = match pool {
        Some(max) => {
            let want_pool = pool_oracle(&want, cout, &out_dims, window, 1, max);
            max_diff(&layer_outputs(&net, built.spec_vertices(1), &x), &want_pool)
        }
        None => 0.0,
    };
    (conv_err, pool_err)
}

fn pool_on_input(rng: &mut ChaCha8Rng, max: bool) -> f64 {
    let stride = rng.gen_range(1..=2);
    let window = rng.gen_range(stride..=3);
    let d = window + stride * rng.gen_range(0..=3);
    let spec = if max {
        LayerSpec::MaxPool { window, stride }
    } else {
        LayerSpec::AvgPool { window, stride }
    };
    let built = build_network(&[spec], d, 1).unwrap();
    let net = built.network(built.random_rep(rng)).unwrap();
    let x: Vec<f64> = (0..d).map(|_| rng.gen_range(-2.0..2.0)).collect();
    max_diff(
        &layer_outputs(&net, built.spec_vertices(0), &x),
        &pool_oracle(&x, 1, &[d], window, stride, max),
    )
}

fn random_constrained_specs(rng: &mut ChaCha8Rng) -> (Vec<LayerSpec>, usize) {
    let mut specs = Vec::new();
    let d;
    match rng.gen_range(0..3) {
        0 => {
            let length = 2 * rng.gen_range(2..=4);
            d = length;
            specs.push(LayerSpec::Conv1d {
                length,
                channels_in: 1,
                channels_out: 2,
                kernel: 3,
                stride: 1,
                padding: 1,
                bias: true,
            });
            specs.push(if rng.gen_bool(0.5) {
                LayerSpec::MaxPool {
                    window: 2,
                    stride: 2,
                }
            } else {
                LayerSpec::AvgPool {
                    window: 2,
                    stride: 2,
                }
            });
            let width = length;
            specs.push(LayerSpec::FullyConnected {
                inputs: width,
                out: 3,
                bias: true,
            });
        }
        1 => {
            d = 3;
            specs.push(LayerSpec::FullyConnected {
                inputs: 3,
                out: 4,
                bias: true,
            });
            specs.push(LayerSpec::batch_norm(4));
            specs.push(LayerSpec::FullyConnected {
                inputs: 4,
                out: 4,
                bias: false,
            });
            specs.push(LayerSpec::Residual {
                from_layer: 1,
                to_layer: 4,
            });
        }
        _ => {
            d = 16;
            specs.push(LayerSpec::Conv2d {
                h: 4,
                w: 4,
                channels_in: 1,
                channels_out: 2,
                kernel_h: 2,
                kernel_w: 2,
                stride: 1,
                padding: 0,
                bias: true,
            });
            specs.push(LayerSpec::MaxPool {
                window: 2,
                stride: 1,
            });
        }
    }
    (specs, d)
}

fn layer_oracles() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut worst: f64 = 0.0;
    for i in 0..25 {
        worst = worst.max(conv_case(&mut rng, false, None).0);
        worst = worst.max(conv_case(&mut rng, true, None).0);
        let (a, b) = conv_case(&mut rng, i % 2 == 1, Some(false));
        worst = worst.max(a).max(b).max(pool_on_input(&mut rng, false));
        let (a, b) = conv_case(&mut rng, i % 2 == 0, Some(true));
        worst = worst.max(a).max(b).max(pool_on_input(&mut rng, true));
    }

    let mut bn_worst: f64 = 0.0;
    for _ in 0..20 {
        let n = rng.gen_range(1..=5);
        let draw = |rng: &mut ChaCha8Rng, lo: f64, hi: f64| -> Vec<f64> {
            (0..n).map(|_| rng.gen_range(lo..hi)).collect()
        };
        let (mean, variance, gamma, beta) = (
            draw(&mut rng, -1.0, 1.0),
            draw(&mut rng, 0.2, 2.0),
            draw(&mut rng, -2.0, 2.0),
            draw(&mut rng, -1.0, 1.0),
        );
        let spec = LayerSpec::BatchNorm {
            size: n,
            mean: mean.clone(),
            variance: variance.clone(),
            gamma: gamma.clone(),
            beta: beta.clone(),
        };
        let built = build_network(&[spec], n, 1).unwrap();
        let out_weights = built
            .params
            .keys()
            .filter(|k| k.starts_with("out"))
            .map(|k| (k.clone(), c(1.0)))
            .collect();
        let net = built
            .network(built.rep_with(&out_weights).unwrap())
            .unwrap();
        let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let want: Vec<f64> = (0..n)
            .map(|i| (x[i] - mean[i]) * (gamma[i] / variance[i]) + beta[i])
            .collect();
        bn_worst = bn_worst.max(max_diff(
            &layer_outputs(&net, built.spec_vertices(0), &x),
            &want,
        ));
    }

    let (mut tele_ok, mut tele_worst) = (0, 0.0f64);
    for seed in 0..50 {
        let (specs, d) = random_constrained_specs(&mut rng);
        let built = build_network(&specs, d, 2).unwrap();
        let net = built.network(built.random_rep(&mut rng)).unwrap();
        let tau = admissible_tau(&built.architecture, &built.quiver, seed);
        let moved = teleport(&net, &tau, &built.architecture).unwrap();
        tele_ok += usize::from(
            check_weight_architecture(moved.rep(), &built.architecture, 1e-9).passed()
                && !tau.is_identity(),
        );
        for _ in 0..5 {
            let x = random_input(&mut rng, d, false);
            tele_worst = tele_worst.max(rel_err(
                &network_function(&moved, &x).unwrap(),
                &network_function(&net, &x).unwrap(),
            ));
        }
    }
    check(
        worst <= 1e-9 && bn_worst <= 1e-12 && tele_ok == 50 && tele_worst <= 1e-9,
        format!(
            "conv/pool error {worst:.1e}, batch-norm error {bn_worst:.1e}, \
             teleport keeps architecture {tele_ok}/50 with Ψ error {tele_worst:.1e}"
        ),
    )
}

// 11 ------------------------------------------------------------------------

fn half_sq(net: &NeuralNetwork, x: &[C64], t: &[C64]) -> f64 {
    let y = network_function(net, x).unwrap();
    0.5 * y
        .iter()
        .zip(t)
        .map(|(a, b)| (a - b).norm_sqr())
        .sum::<f64>()
}

fn gradient_suite() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let smooth = [Activation::Tanh, Activation::Sigmoid, Activation::Identity];
    let h = 1e-6;
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let nq: Arc<NetworkQuiver> = random_network_quiver(&mut rng, &small_quivers());
        let acts = random_activations(&mut rng, &nq, &smooth);
        let net = NeuralNetwork::new(random_rep(&mut rng, &nq, false), &acts).unwrap();
        let x = random_input(&mut rng, nq.input_dim(), false);
        let t = random_input(&mut rng, nq.output_dim(), false);
        let g = gradients(&net, &Default::default(), &x, &t).unwrap();
        for e in nq.delooped().edges() {
            let w = net.rep().weight(&e.id).unwrap();
            let nudged = |delta: f64| {
                let mut rep = net.rep().clone();
                rep.set_weight(&e.id, w + c(delta)).unwrap();
                half_sq(&net.with_rep(rep).unwrap(), &x, &t)
            };
            let fd = (nudged(h) - nudged(-h)) / (2.0 * h);
            let an = g[&e.id];
            // relative error with the denominator floored at 1e-3
            worst = worst.max((an - fd).abs() / an.abs().max(fd.abs()).max(1e-3));
        }
    }

    let nq = Arc::new(layered_mlp(&[2, 4, 1]).unwrap());
    let w: Vec<C64> = (0..nq.edge_count())
        .map(|_| c(rng.gen_range(-1.0..1.0)))
        .collect();
    let net = NeuralNetwork::uniform(ThinRep::new(nq, w).unwrap(), Activation::Tanh);
    let data: Vec<Sample> = [
        ([0.0, 0.0], 0.0),
        ([0.0, 1.0], 1.0),
        ([1.0, 0.0], 1.0),
        ([1.0, 1.0], 0.0),
    ]
    .iter()
    .map(|(x, y)| (reals(x), vec![c(*y)]))
    .collect();
    let run = train(
        &net,
        &Default::default(),
        &data,
        TrainConfig {
            learning_rate: 0.1,
            steps: 500,
        },
    )
    .unwrap();
    let decreased =
        run.final_loss() < run.initial_loss && run.losses.iter().all(|&l| l < run.initial_loss);
    check(
        worst <= 1e-5 && decreased,
        format!(
            "max gradient relative error {worst:.1e}; 2-4-1 loss {:.4} -> {:.4}",
            run.initial_loss,
            run.final_loss()
        ),
    )
}

fn main() {
    let criteria: [Criterion; 11] = [
        ("forward reproduction", forward_reproduction),
        ("isomorphism reproduction", isomorphism_reproduction),
        ("data representation reproduction", data_rep_reproduction),
        ("Ψ invariance under change of basis", invariance_suite),
        (
            "ReLU positive scaling and max-pool invariance",
            relu_and_max_pool_invariance,
        ),
        ("data representation theorem", data_theorem_suite),
        ("moduli dimension and canonical form", canonical_form_suite),
        ("stability oracle equivalence", stability_suite),
        ("decomposition Ψ = Ψ̂∘φ", decomposition_suite),
        ("layer oracles and teleport", layer_oracles),
        ("gradient check and training", gradient_suite),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let outcome = std::panic::catch_unwind(f).unwrap_or_else(|_| Err("panicked".into()));
        match outcome {
            Ok(detail) => println!("PASS {:>2} {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {detail}", i + 1);
            }
        }
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
