use std::collections::BTreeMap;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::WeightArchitecture;
use crate::error::{Error, Result};
use crate::network::{Activation, NeuralNetwork, ThinRep};
use crate::quiver::{NetworkQuiver, NetworkQuiverBuilder, VertexId, VertexKind};
use crate::C64;

fn one() -> usize {
    1
}

/// One block of a layered architecture. Every variant except `Residual` adds
/// hidden layers on top of the current feature layer; `BatchNorm` adds two.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum LayerSpec {
    FullyConnected {
        #[serde(rename = "in")]
        inputs: usize,
        out: usize,
        #[serde(default)]
        bias: bool,
    },
    Conv1d {
        length: usize,
        channels_in: usize,
        channels_out: usize,
        kernel: usize,
        #[serde(default = "one")]
        stride: usize,
        #[serde(default)]
        padding: usize,
        #[serde(default)]
        bias: bool,
    },
    Conv2d {
        h: usize,
        w: usize,
        channels_in: usize,
        channels_out: usize,
        kernel_h: usize,
        kernel_w: usize,
        #[serde(default = "one")]
        stride: usize,
        #[serde(default)]
        padding: usize,
        #[serde(default)]
        bias: bool,
    },
    AvgPool {
        window: usize,
        #[serde(default = "one")]
        stride: usize,
    },
    MaxPool {
        window: usize,
        #[serde(default = "one")]
        stride: usize,
    },
    /// Inference-time batch normalization `x ↦ (x − μ)(γ/σ²) + β`. Empty
    /// statistics default to μ = 0, σ² = 1, γ = 1, β = 0.
    BatchNorm {
        size: usize,
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        mean: Vec<f64>,
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        variance: Vec<f64>,
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        gamma: Vec<f64>,
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        beta: Vec<f64>,
    },
    /// Identity skip edges (fixed to 1) between two already built layers of
    /// equal width. Layer 0 is the input layer.
    Residual { from_layer: usize, to_layer: usize },
}

impl LayerSpec {
    pub fn batch_norm(size: usize) -> Self {
        LayerSpec::BatchNorm {
            size,
            mean: Vec::new(),
            variance: Vec::new(),
            gamma: Vec::new(),
            beta: Vec::new(),
        }
    }
}

/// One named parameter of a built network: a set of edges that share a value.
#[derive(Debug, Clone, PartialEq)]
pub struct Param {
    pub edges: Vec<String>,
    /// Pinned by the architecture (pooling, residual, batch-norm statistics).
    pub fixed: Option<C64>,
    /// Value used by [`BuiltNetwork::rep_with`] when none is supplied.
    pub default: Option<C64>,
}

/// A network quiver produced from [`LayerSpec`]s, with its weight
/// architecture, default activations and named parameters.
#[derive(Debug, Clone)]
pub struct BuiltNetwork {
    pub quiver: Arc<NetworkQuiver>,
    pub architecture: WeightArchitecture,
    pub activations: BTreeMap<VertexId, Activation>,
    /// Keyed by parameter label, e.g. `L1.k[o0,c0,0]` or `out.w[1,2]`.
    pub params: BTreeMap<String, Param>,
    /// Feature vertices of every network layer (input layer first, output last).
    pub layer_vertices: Vec<Vec<VertexId>>,
    /// For each spec, the network layer holding its result.
    pub spec_layers: Vec<usize>,
}

impl BuiltNetwork {
    /// Weights from named parameter values; fixed parameters ignore `values`.
    pub fn rep_with(&self, values: &BTreeMap<String, C64>) -> Result<ThinRep> {
        let mut map = BTreeMap::new();
        for (label, p) in &self.params {
            let v = match p.fixed {
                Some(v) => v,
                None => values
                    .get(label)
                    .copied()
                    .or(p.default)
                    .ok_or_else(|| Error::MissingWeight(label.clone()))?,
            };
            for e in &p.edges {
                map.insert(e.clone(), v);
            }
        }
        ThinRep::from_map(self.quiver.clone(), &map)
    }

    /// Random real weights satisfying the architecture: every free parameter
    /// is drawn with modulus in `[0.1, 1]` and a random sign.
    pub fn random_rep<R: Rng>(&self, rng: &mut R) -> ThinRep {
        let values = self
            .params
            .keys()
            .map(|k| {
                let m: f64 = rng.gen_range(0.1..1.0);
                let s = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
                (k.clone(), C64::new(s * m, 0.0))
            })
            .collect();
        self.rep_with(&values).expect("every parameter has a value")
    }

    pub fn network(&self, rep: ThinRep) -> Result<NeuralNetwork> {
        NeuralNetwork::new(rep, &self.activations)
    }

    /// Feature vertices produced by spec `i`.
    pub fn spec_vertices(&self, i: usize) -> &[VertexId] {
        &self.layer_vertices[self.spec_layers[i]]
    }

    pub fn output_vertices(&self) -> &[VertexId] {
        self.layer_vertices.last().map(Vec::as_slice).unwrap_or(&[])
    }
}

#[derive(Debug, Clone)]
struct Shape {
    channels: usize,
    spatial: Vec<usize>,
}

impl Shape {
    fn flat(&self) -> usize {
        self.channels * self.spatial.iter().product::<usize>()
    }
}

fn extent(layer: usize, n: usize, pad: usize, kernel: usize, stride: usize) -> Result<usize> {
    if kernel == 0 || stride == 0 {
        return Err(Error::LayerDimension {
            layer,
            detail: "kernel and stride must be positive".into(),
        });
    }
    if n + 2 * pad < kernel {
        return Err(Error::EmptyOutput(layer));
    }
    Ok((n + 2 * pad - kernel) / stride + 1)
}

struct Builder {
    q: NetworkQuiverBuilder,
    params: BTreeMap<String, Param>,
    activations: BTreeMap<VertexId, Activation>,
    layers: Vec<Vec<usize>>,
    names: Vec<String>,
    shape: Shape,
}

fn pad_width(n: usize) -> usize {
    n.saturating_sub(1).to_string().len()
}

impl Builder {
    fn vertex(&mut self, id: String, kind: VertexKind, layer: usize) -> Result<usize> {
        let v = self.q.vertex(id.clone(), kind, layer)?;
        self.names.push(id);
        Ok(v)
    }

    fn new_layer(
        &mut self,
        n: usize,
        kind: VertexKind,
        act: Option<Activation>,
    ) -> Result<Vec<usize>> {
        let layer = self.layers.len();
        let w = pad_width(n);
        let vs = (0..n)
            .map(|i| {
                let id = format!("L{layer}_{i:0w$}");
                if let Some(a) = &act {
                    self.activations.insert(id.clone(), a.clone());
                }
                self.vertex(id, kind, layer)
            })
            .collect::<Result<Vec<_>>>()?;
        self.layers.push(vs.clone());
        Ok(vs)
    }

    /// A bias vertex in the current last layer, feeding the next one.
    fn bias_vertex(&mut self) -> Result<usize> {
        let layer = self.layers.len() - 1;
        self.vertex(format!("b{}", layer + 1), VertexKind::Bias, layer)
    }

    fn edge(
        &mut self,
        s: usize,
        t: usize,
        label: String,
        fixed: Option<C64>,
        default: Option<C64>,
    ) -> Result<()> {
        let id = format!("{}->{}", self.names[s], self.names[t]);
        self.q.edge(id.clone(), s, t)?;
        let p = self.params.entry(label).or_insert(Param {
            edges: Vec::new(),
            fixed,
            default,
        });
        p.edges.push(id);
        Ok(())
    }

    fn current(&self) -> Vec<usize> {
        self.layers.last().cloned().unwrap_or_default()
    }

    fn expect_flat(&self, layer: usize, n: usize) -> Result<()> {
        if self.shape.flat() != n {
            return Err(Error::LayerDimension {
                layer,
                detail: format!(
                    "expects {n} inputs, previous layer has {}",
                    self.shape.flat()
                ),
            });
        }
        Ok(())
    }

    fn fully_connected(&mut self, inputs: usize, out: usize, bias: bool) -> Result<()> {
        let layer = self.layers.len();
        self.expect_flat(layer, inputs)?;
        if out == 0 {
            return Err(Error::EmptyOutput(layer));
        }
        let prev = self.current();
        let b = if bias {
            Some(self.bias_vertex()?)
        } else {
            None
        };
        let cur = self.new_layer(out, VertexKind::Hidden, Some(Activation::Relu))?;
        for (i, &t) in cur.iter().enumerate() {
            for (j, &s) in prev.iter().enumerate() {
                self.edge(s, t, format!("L{layer}.w[{i},{j}]"), None, None)?;
            }
            if let Some(b) = b {
                self.edge(b, t, format!("L{layer}.b[{i}]"), None, None)?;
            }
        }
        self.shape = Shape {
            channels: 1,
            spatial: vec![out],
        };
        Ok(())
    }

    #[allow(clippy::too_many_arguments)]
    fn conv(
        &mut self,
        dims: &[usize],
        channels_in: usize,
        channels_out: usize,
        kernel: &[usize],
        stride: usize,
        padding: usize,
        bias: bool,
    ) -> Result<()> {
        let layer = self.layers.len();
        if dims.iter().chain(kernel).any(|&d| d == 0) || channels_in == 0 || channels_out == 0 {
            return Err(Error::LayerDimension {
                layer,
                detail: "dimensions must be positive".into(),
            });
        }
        if kernel.iter().any(|&k| padding >= k) {
            // an output window lying wholly in the padding would have no edges
            return Err(Error::LayerDimension {
                layer,
                detail: format!("padding {padding} must be smaller than the kernel"),
            });
        }
        self.expect_flat(layer, channels_in * dims.iter().product::<usize>())?;
        let out_dims = dims
            .iter()
            .zip(kernel)
            .map(|(&n, &k)| extent(layer, n, padding, k, stride))
            .collect::<Result<Vec<_>>>()?;
        let prev = self.current();
        let b = if bias {
            Some(self.bias_vertex()?)
        } else {
            None
        };
        let per_out: usize = out_dims.iter().product();
        let cur = self.new_layer(
            channels_out * per_out,
            VertexKind::Hidden,
            Some(Activation::Relu),
        )?;
        let in_size: usize = dims.iter().product();
        let kernel_positions: usize = kernel.iter().product();
        for o in 0..channels_out {
            for pos in 0..per_out {
                let out_idx = unflatten(pos, &out_dims);
                let t = cur[o * per_out + pos];
                for c in 0..channels_in {
                    for kpos in 0..kernel_positions {
                        let k_idx = unflatten(kpos, kernel);
                        // flipped kernel: offset k reads input position out*stride - pad + (K-1-k)
                        let mut in_idx = Vec::with_capacity(dims.len());
                        for a in 0..dims.len() {
                            let p = (out_idx[a] * stride + kernel[a] - 1 - k_idx[a]) as isize
                                - padding as isize;
                            if p < 0 || p as usize >= dims[a] {
                                break;
                            }
                            in_idx.push(p as usize);
                        }
                        if in_idx.len() != dims.len() {
                            continue;
                        }
                        let s = prev[c * in_size + flatten(&in_idx, dims)];
                        let k_label = k_idx
                            .iter()
                            .map(|k| k.to_string())
                            .collect::<Vec<_>>()
                            .join(",");
                        self.edge(s, t, format!("L{layer}.k[o{o},c{c},{k_label}]"), None, None)?;
                    }
                }
                if let Some(b) = b {
                    self.edge(b, t, format!("L{layer}.b[o{o}]"), None, None)?;
                }
            }
        }
        self.shape = Shape {
            channels: channels_out,
            spatial: out_dims,
        };
        Ok(())
    }

    fn pool(&mut self, window: usize, stride: usize, max: bool) -> Result<()> {
        let layer = self.layers.len();
        let dims = self.shape.spatial.clone();
        let kernel = vec![window; dims.len()];
        let out_dims = dims
            .iter()
            .map(|&n| extent(layer, n, 0, window, stride))
            .collect::<Result<Vec<_>>>()?;
        let prev = self.current();
        let per_out: usize = out_dims.iter().product();
        let in_size: usize = dims.iter().product();
        let channels = self.shape.channels;
        let (kind, act, value, label) = if max {
            (
                VertexKind::MaxPool,
                None,
                C64::new(1.0, 0.0),
                format!("L{layer}.max"),
            )
        } else {
            let n = kernel.iter().product::<usize>() as f64;
            (
                VertexKind::Hidden,
                Some(Activation::Identity),
                C64::new(1.0 / n, 0.0),
                format!("L{layer}.avg"),
            )
        };
        let cur = self.new_layer(channels * per_out, kind, act)?;
        let window_positions: usize = kernel.iter().product();
        for c in 0..channels {
            for pos in 0..per_out {
                let out_idx = unflatten(pos, &out_dims);
                let t = cur[c * per_out + pos];
                for wpos in 0..window_positions {
                    let w_idx = unflatten(wpos, &kernel);
                    let in_idx: Vec<usize> = (0..dims.len())
                        .map(|a| out_idx[a] * stride + w_idx[a])
                        .collect();
                    let s = prev[c * in_size + flatten(&in_idx, &dims)];
                    self.edge(s, t, label.clone(), Some(value), None)?;
                }
            }
        }
        self.shape.spatial = out_dims;
        Ok(())
    }

    fn batch_norm(&mut self, size: usize, stats: [&[f64]; 4]) -> Result<()> {
        let layer = self.layers.len();
        self.expect_flat(layer, size)?;
        let defaults = [0.0, 1.0, 1.0, 0.0];
        let mut cols = [vec![], vec![], vec![], vec![]];
        for (k, s) in stats.iter().enumerate() {
            cols[k] = match s.len() {
                0 => vec![defaults[k]; size],
                n if n == size => s.to_vec(),
                n => {
                    return Err(Error::LayerDimension {
                        layer,
                        detail: format!("batch-norm statistic has {n} entries, expected {size}"),
                    })
                }
            };
        }
        let [mean, var, gamma, beta] = cols;
        if var.contains(&0.0) {
            return Err(Error::LayerDimension {
                layer,
                detail: "batch-norm variance must be nonzero".into(),
            });
        }
        let prev = self.current();
        let b1 = self.bias_vertex()?;
        let centred = self.new_layer(size, VertexKind::Hidden, Some(Activation::Identity))?;
        let b2 = self.bias_vertex()?;
        let scaled = self.new_layer(size, VertexKind::Hidden, Some(Activation::Identity))?;
        let one = C64::new(1.0, 0.0);
        for i in 0..size {
            self.edge(
                prev[i],
                centred[i],
                format!("L{layer}.bn_in"),
                Some(one),
                None,
            )?;
            self.edge(
                b1,
                centred[i],
                format!("L{layer}.bn_mean[{i}]"),
                Some(C64::new(-mean[i], 0.0)),
                None,
            )?;
            let scale = C64::new(gamma[i] / var[i], 0.0);
            self.edge(
                centred[i],
                scaled[i],
                format!("L{}.bn_scale[{i}]", layer + 1),
                None,
                Some(scale),
            )?;
            self.edge(
                b2,
                scaled[i],
                format!("L{}.bn_beta[{i}]", layer + 1),
                None,
                Some(C64::new(beta[i], 0.0)),
            )?;
        }
        Ok(())
    }

    fn residual(&mut self, index: usize, from: usize, to: usize) -> Result<()> {
        let layer = self.layers.len();
        if to >= layer || from + 2 > to {
            return Err(Error::LayerDimension {
                layer,
                detail: format!("residual {from}->{to} must skip at least one built layer"),
            });
        }
        let (src, dst) = (self.layers[from].clone(), self.layers[to].clone());
        if src.len() != dst.len() {
            return Err(Error::LayerDimension {
                layer,
                detail: format!(
                    "residual joins layers of width {} and {}",
                    src.len(),
                    dst.len()
                ),
            });
        }
        for (&s, &t) in src.iter().zip(&dst) {
            self.edge(
                s,
                t,
                format!("R{index}.skip"),
                Some(C64::new(1.0, 0.0)),
                None,
            )?;
        }
        Ok(())
    }
}

fn unflatten(mut i: usize, dims: &[usize]) -> Vec<usize> {
    let mut out = vec![0; dims.len()];
    for a in (0..dims.len()).rev() {
        out[a] = i % dims[a];
        i /= dims[a];
    }
    out
}

fn flatten(idx: &[usize], dims: &[usize]) -> usize {
    idx.iter().zip(dims).fold(0, |acc, (i, d)| acc * d + i)
}

/// Builds the network quiver for `specs` on `d` inputs, closed by a fully
/// connected projection onto `k` outputs.
///
/// Vertices are named `x<i>` (inputs), `L<layer>_<i>` (hidden), `b<layer>`
/// (bias feeding `layer`) and `y<i>` (outputs); edges `<source>-><target>`.
pub fn build_network(specs: &[LayerSpec], d: usize, k: usize) -> Result<BuiltNetwork> {
    if d == 0 || k == 0 {
        return Err(Error::MissingInputOrOutput);
    }
    let mut b = Builder {
        q: NetworkQuiverBuilder::new(),
        params: BTreeMap::new(),
        activations: BTreeMap::new(),
        layers: Vec::new(),
        names: Vec::new(),
        shape: Shape {
            channels: 1,
            spatial: vec![d],
        },
    };
    let w = pad_width(d);
    let inputs = (0..d)
        .map(|i| b.vertex(format!("x{i:0w$}"), VertexKind::Input, 0))
        .collect::<Result<Vec<_>>>()?;
    b.layers.push(inputs);
    let mut spec_layers = Vec::with_capacity(specs.len());
    for (n, spec) in specs.iter().enumerate() {
        match spec {
            LayerSpec::FullyConnected { inputs, out, bias } => {
                b.fully_connected(*inputs, *out, *bias)?
            }
            LayerSpec::Conv1d {
                length,
                channels_in,
                channels_out,
                kernel,
                stride,
                padding,
                bias,
            } => b.conv(
                &[*length],
                *channels_in,
                *channels_out,
                &[*kernel],
                *stride,
                *padding,
                *bias,
            )?,
            LayerSpec::Conv2d {
                h,
                w,
                channels_in,
                channels_out,
                kernel_h,
                kernel_w,
                stride,
                padding,
                bias,
            } => b.conv(
                &[*h, *w],
                *channels_in,
                *channels_out,
                &[*kernel_h, *kernel_w],
                *stride,
                *padding,
                *bias,
            )?,
            LayerSpec::AvgPool { window, stride } => b.pool(*window, *stride, false)?,
            LayerSpec::MaxPool { window, stride } => b.pool(*window, *stride, true)?,
            LayerSpec::BatchNorm {
                size,
                mean,
                variance,
                gamma,
                beta,
            } => b.batch_norm(*size, [mean, variance, gamma, beta])?,
            LayerSpec::Residual {
                from_layer,
                to_layer,
            } => b.residual(n, *from_layer, *to_layer)?,
        }
        spec_layers.push(b.layers.len() - 1);
    }
    if b.layers.len() < 2 {
        return Err(Error::NoHiddenVertices);
    }
    let out_layer = b.layers.len();
    let prev = b.current();
    let w = pad_width(k);
    let outs = (0..k)
        .map(|i| b.vertex(format!("y{i:0w$}"), VertexKind::Output, out_layer))
        .collect::<Result<Vec<_>>>()?;
    for (i, &t) in outs.iter().enumerate() {
        for (j, &s) in prev.iter().enumerate() {
            b.edge(s, t, format!("out.w[{i},{j}]"), None, None)?;
        }
    }
    b.layers.push(outs);

    let names = b.names.clone();
    let layer_vertices = b
        .layers
        .iter()
        .map(|l| l.iter().map(|&v| names[v].clone()).collect())
        .collect();
    let quiver = Arc::new(b.q.build()?);
    let mut architecture = WeightArchitecture::default();
    for p in b.params.values() {
        match p.fixed {
            Some(v) => architecture
                .fixed
                .extend(p.edges.iter().map(|e| (e.clone(), v))),
            None if p.edges.len() > 1 => architecture.tie_classes.push(p.edges.clone()),
            None => {}
        }
    }
    Ok(BuiltNetwork {
        quiver,
        architecture,
        activations: b.activations,
        params: b.params,
        layer_vertices,
        spec_layers,
    })
}
