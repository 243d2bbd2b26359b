use std::fmt::Write as _;

use serde_json::{json, Value};

use crate::datarep::DataRepOptions;
use crate::error::{Error, Result};
use crate::moduli::{moduli_map_with, ModuliMapOptions, ModuliPoint};
use crate::network::{network_function, NeuralNetwork};
use crate::quiver::EdgeId;
use crate::C64;

#[derive(Debug, Clone, PartialEq)]
pub struct SamplePoint {
    /// `φ(W_i, f)(x_j)`, or the forest edge that vanished.
    pub point: std::result::Result<ModuliPoint, EdgeId>,
    /// `Ψ(W_i, f)(x_j)`.
    pub output: Vec<C64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryStep {
    /// 1-based update count.
    pub step: usize,
    pub loss: Option<f64>,
    pub samples: Vec<SamplePoint>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrajectoryRecord {
    pub steps: Vec<TrajectoryStep>,
}

impl TrajectoryRecord {
    /// Rows `step,sample,coordinate,value` with the real part of each
    /// coordinate. An undefined point is one row with an empty coordinate and
    /// value `undefined`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("step,sample,coordinate,value\n");
        for s in &self.steps {
            for (j, p) in s.samples.iter().enumerate() {
                match &p.point {
                    Ok(point) => {
                        for (k, z) in point.values().enumerate() {
                            writeln!(out, "{},{j},{k},{:.12e}", s.step, z.re)
                                .expect("writing to a String");
                        }
                    }
                    Err(_) => {
                        writeln!(out, "{},{j},,undefined", s.step).expect("writing to a String")
                    }
                }
            }
        }
        out
    }

    pub fn to_json(&self) -> Value {
        let steps: Vec<Value> = self
            .steps
            .iter()
            .map(|s| {
                let samples: Vec<Value> = s
                    .samples
                    .iter()
                    .map(|p| {
                        let output: Vec<Value> = p.output.iter().map(|z| json!([z.re, z.im])).collect();
                        match &p.point {
                            Ok(point) => json!({"point": point.to_json(), "output": output}),
                            Err(edge) => json!({"point": null, "zero_on_forest_edge": edge, "output": output}),
                        }
                    })
                    .collect();
                json!({"step": s.step, "loss": s.loss, "samples": samples})
            })
            .collect();
        json!({ "steps": steps })
    }
}

/// `φ(W_i, f)(x_j)` and `Ψ(W_i, f)(x_j)` for every snapshot `i` and sample
/// `j`. Points whose forest hits a zero weight are recorded as undefined.
pub fn moduli_trajectory(
    snapshots: &[NeuralNetwork],
    samples: &[Vec<C64>],
) -> Result<TrajectoryRecord> {
    if let Some(first) = snapshots.first() {
        if snapshots.iter().any(|s| s.quiver() != first.quiver()) {
            return Err(Error::QuiverMismatch);
        }
    }
    let opts = ModuliMapOptions {
        data: DataRepOptions {
            max_pool_indicator: true,
        },
        ..Default::default()
    };
    let mut steps = Vec::with_capacity(snapshots.len());
    for (i, net) in snapshots.iter().enumerate() {
        let mut points = Vec::with_capacity(samples.len());
        for x in samples {
            let point = match moduli_map_with(net, x, opts) {
                Ok(p) => Ok(p),
                Err(Error::ZeroOnForestEdge { edge, .. }) => Err(edge),
                Err(e) => return Err(e),
            };
            points.push(SamplePoint {
                point,
                output: network_function(net, x)?,
            });
        }
        steps.push(TrajectoryStep {
            step: i + 1,
            loss: None,
            samples: points,
        });
    }
    Ok(TrajectoryRecord { steps })
}
