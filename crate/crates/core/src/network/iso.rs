use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{act_on_weights, forward, ChangeOfBasis, NeuralNetwork, NeuronRule};
use crate::error::Result;
use crate::C64;

/// Outcome of one commutativity check.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub passed: bool,
    /// Largest absolute discrepancy seen.
    pub max_residual: f64,
    /// Where the largest discrepancy occurred.
    pub worst: Option<String>,
}

impl Check {
    fn new() -> Self {
        Self {
            passed: true,
            max_residual: 0.0,
            worst: None,
        }
    }

    /// Records `|got - expected|`; fails when it exceeds `tol · max(1, |expected|)`.
    fn record(&mut self, at: impl FnOnce() -> String, got: C64, expected: C64, tol: f64) {
        let r = (got - expected).norm();
        let r = if r.is_nan() { f64::INFINITY } else { r };
        if r > tol * expected.norm().max(1.0) {
            self.passed = false;
        }
        if r > self.max_residual {
            self.max_residual = r;
            self.worst = Some(at());
        }
    }

    fn fail(&mut self, at: String) {
        self.passed = false;
        self.max_residual = f64::INFINITY;
        self.worst = Some(at);
    }
}

/// Result of [`verify_isomorphism`].
#[derive(Debug, Clone, PartialEq)]
pub struct IsoReport {
    /// Weight squares: `V = τ·W`.
    pub weights: Check,
    /// Activation squares: `g_v(τ_v z) = τ_v f_v(z)` on sample points.
    pub activations: Check,
    /// Activation outputs scale by `τ_v` at every vertex on the sample inputs.
    pub vertex_scaling: Check,
    /// Network functions agree on the sample inputs.
    pub outputs: Check,
}

impl IsoReport {
    pub fn passed(&self) -> bool {
        self.weights.passed
            && self.activations.passed
            && self.vertex_scaling.passed
            && self.outputs.passed
    }
}

const ACTIVATION_SAMPLE_SEED: u64 = 0x7175_6976;

/// 64 real points on a symmetric logarithmic grid in `[-10, 10]` and 16
/// seeded random complex points.
pub fn activation_sample_points() -> Vec<C64> {
    let mut pts = Vec::with_capacity(80);
    let (lo, hi) = (1e-3f64.ln(), 10f64.ln());
    for i in 0..32 {
        let m = (lo + (hi - lo) * i as f64 / 31.0).exp();
        pts.push(C64::new(m, 0.0));
        pts.push(C64::new(-m, 0.0));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(ACTIVATION_SAMPLE_SEED);
    for _ in 0..16 {
        pts.push(C64::new(rng.gen_range(-3.0..3.0), rng.gen_range(-1.0..1.0)));
    }
    pts
}

/// Checks that `tau` is an isomorphism of neural networks from `a` to `b`:
/// every weight square and activation square commutes, activation outputs
/// scale by `tau`, and the network functions agree on `samples`.
pub fn verify_isomorphism(
    tau: &ChangeOfBasis,
    a: &NeuralNetwork,
    b: &NeuralNetwork,
    samples: &[Vec<C64>],
    tol: f64,
) -> Result<IsoReport> {
    let nq = a.quiver();
    let t = tau.resolve(nq)?;
    let expected = act_on_weights(tau, a.rep())?;
    let mut report = IsoReport {
        weights: Check::new(),
        activations: Check::new(),
        vertex_scaling: Check::new(),
        outputs: Check::new(),
    };
    if !a.rep().same_quiver(b.rep()) {
        report.weights.fail("quivers differ".into());
        return Ok(report);
    }

    for (i, (got, want)) in b.rep().weights().iter().zip(expected.weights()).enumerate() {
        report
            .weights
            .record(|| nq.edge(i).id.clone(), *got, *want, tol);
    }

    let points = activation_sample_points();
    for &v in nq.hidden() {
        let id = nq.vertex_id(v);
        match (a.rule(v), b.rule(v)) {
            (Some(NeuronRule::Activation(f)), Some(NeuronRule::Activation(g))) => {
                for z in &points {
                    let lhs = g.eval(t[v] * z);
                    let rhs = t[v] * f.eval(*z);
                    report
                        .activations
                        .record(|| format!("{id} at {z}"), lhs, rhs, tol);
                }
            }
            (Some(NeuronRule::Pool(p)), Some(NeuronRule::Pool(q))) if p.after_scale(t[v]) == *q => {
            }
            _ => report
                .activations
                .fail(format!("{id}: computation rules do not correspond")),
        }
    }

    for x in samples {
        let ta = forward(a, x)?;
        let tb = forward(b, x)?;
        for &v in nq.order() {
            let scaled = t[v] * ta.act_slice()[v];
            report.vertex_scaling.record(
                || nq.vertex_id(v).to_string(),
                tb.act_slice()[v],
                scaled,
                tol,
            );
        }
        for (k, (p, q)) in ta.output().iter().zip(tb.output()).enumerate() {
            report.outputs.record(|| format!("output {k}"), *q, *p, tol);
        }
    }
    Ok(report)
}
