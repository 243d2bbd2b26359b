//! The `quiver` command line. [`run`] is the whole program; the binary only
//! forwards `std::env::args` and the standard streams.
//!
//! Exit codes: 0 success, 2 invalid model or failed check, 3 numeric
//! failure (such as a zero forest weight), 4 I/O. Errors are written to
//! stderr as `{"error": <code>, "detail": <message>}`.

mod model;

pub use model::{
    BuilderModel, EdgeEntry, ExplicitModel, Model, ModelFile, QuiverEntry, VertexEntry,
};

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use crate::datarep::{data_representation_with, verify_data_theorem_with, DataRepOptions};
use crate::error::{Error, Result};
use crate::layers::{admissible_tau, teleport, WeightArchitecture};
use crate::moduli::{
    canonicalize_with, double_frame, moduli_dimension, pruning_profile, stability_check,
    CanonicalOptions, PERTURB_EPS,
};
use crate::network::{
    act_on_network, forward, verify_isomorphism, Activation, ChangeOfBasis, NeuralNetwork,
};
use crate::quiver::{NetworkQuiverBuilder, VertexKind};
use crate::trace::{train, Sample, TrainConfig};
use crate::C64;

#[derive(Debug, Parser)]
#[command(
    name = "quiver",
    version,
    about = "Neural networks as quiver representations"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
struct InputArg {
    /// Comma-separated real input, e.g. "-1.2,0.3".
    #[arg(long, allow_hyphen_values = true)]
    input: Option<String>,
    /// JSON array of [re, im] pairs.
    #[arg(long)]
    input_json: Option<String>,
}

#[derive(Debug, Args)]
struct OutArg {
    /// Write here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check the network-quiver axioms and the weight architecture.
    Validate { model: PathBuf },
    /// Print Ψ(x); with --trace also every pre-activation and activation output.
    Forward {
        model: PathBuf,
        #[command(flatten)]
        input: InputArg,
        #[arg(long)]
        trace: bool,
    },
    /// Apply a change of basis and write the transformed model.
    Act {
        model: PathBuf,
        /// JSON object mapping hidden vertices to [re, im].
        #[arg(long, conflicts_with = "random", required_unless_present = "random")]
        tau: Option<PathBuf>,
        /// Draw an architecture-preserving real τ from this seed.
        #[arg(long)]
        random: Option<u64>,
        #[command(flatten)]
        out: OutArg,
    },
    /// Check that τ is an isomorphism from the first model to the second.
    VerifyIso {
        model_a: PathBuf,
        model_b: PathBuf,
        #[arg(long)]
        tau: PathBuf,
        /// Inputs to compare Ψ on (one comma-separated row per line).
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
    },
    /// Write the data representation of one input as a model with identity activations.
    Datarep {
        model: PathBuf,
        #[command(flatten)]
        input: InputArg,
        /// Keep only the selected edge at max-pool vertices.
        #[arg(long)]
        max_pool_indicator: bool,
        #[command(flatten)]
        out: OutArg,
    },
    /// Print the canonical orbit coordinates of the model's weights.
    Canonical {
        model: PathBuf,
        /// Nudge vanishing forest weights instead of failing.
        #[arg(long)]
        perturb: bool,
    },
    /// Print the moduli-space dimension.
    Dim { model: PathBuf },
    /// Check stability of the double-framed representation (bias folded).
    Stability {
        model: PathBuf,
        /// Check the data representation of this input instead of the weights.
        #[arg(long, allow_hyphen_values = true)]
        input: Option<String>,
    },
    /// Apply a random architecture-preserving change of basis.
    Teleport {
        model: PathBuf,
        #[arg(long)]
        seed: u64,
        #[command(flatten)]
        out: OutArg,
    },
    /// Per-edge frequency of vanishing data-representation weights.
    PruneProfile {
        model: PathBuf,
        /// One comma-separated input per line.
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value_t = 1e-12)]
        threshold: f64,
    },
    /// Full-batch gradient descent; rows of --data are d inputs then k targets.
    Train {
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        rate: f64,
        #[arg(long)]
        steps: usize,
        /// CSV of the moduli trajectory of the training inputs.
        #[arg(long)]
        trace_moduli: Option<PathBuf>,
        /// JSON mirror of the trajectory.
        #[arg(long)]
        trace_json: Option<PathBuf>,
        #[command(flatten)]
        out: OutArg,
    },
}

/// Runs the command line on `args` (program name first) and returns the exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let rendered = e.render().to_string();
            if code == 0 {
                let _ = write!(stdout, "{rendered}");
            } else {
                let _ = writeln!(
                    stderr,
                    "{}",
                    json!({"error": "Usage", "detail": rendered.trim_end()})
                );
            }
            return code;
        }
    };
    match execute(cli.command, stdout) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(
                stderr,
                "{}",
                json!({"error": e.code(), "detail": e.to_string()})
            );
            exit_code(&e)
        }
    }
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Io(_) => 4,
        e if e.is_numeric() => 3,
        _ => 2,
    }
}

/// Fixed-point with 12 decimals; complex values as `re+imi`.
pub fn format_complex(z: C64) -> String {
    if z.im == 0.0 {
        format!("{:.12}", z.re)
    } else {
        format!("{:.12}{:+.12}i", z.re, z.im)
    }
}

fn format_vector(v: &[C64]) -> String {
    v.iter()
        .map(|z| format_complex(*z))
        .collect::<Vec<_>>()
        .join(", ")
}

fn parse_csv_row(s: &str) -> Result<Vec<C64>> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map(|x| C64::new(x, 0.0))
                .map_err(|_| Error::Parse(format!("not a number: `{}`", t.trim())))
        })
        .collect()
}

fn read_csv_rows(path: &Path) -> Result<Vec<Vec<C64>>> {
    let text =
        std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    text.lines()
        .filter(|l| !l.trim().is_empty() && !l.trim_start().starts_with('#'))
        .enumerate()
        .map(|(i, l)| {
            parse_csv_row(l)
                .map_err(|e| Error::Parse(format!("{}: row {}: {e}", path.display(), i + 1)))
        })
        .collect()
}

fn parse_input(arg: &InputArg) -> Result<Vec<C64>> {
    match (&arg.input, &arg.input_json) {
        (Some(s), _) => parse_csv_row(s),
        (_, Some(j)) => {
            serde_json::from_str(j).map_err(|e| Error::Parse(format!("--input-json: {e}")))
        }
        _ => unreachable!("clap requires one input form"),
    }
}

fn read_tau(path: &Path) -> Result<ChangeOfBasis> {
    let text =
        std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    let map: BTreeMap<String, C64> = serde_json::from_str(&text)
        .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    ChangeOfBasis::new(map)
}

fn emit(out: &OutArg, text: &str, stdout: &mut dyn Write) -> Result<()> {
    match &out.out {
        Some(p) => std::fs::write(p, text).map_err(|e| Error::Io(format!("{}: {e}", p.display()))),
        None => stdout
            .write_all(text.as_bytes())
            .map_err(|e| Error::Io(e.to_string())),
    }
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

macro_rules! say {
    ($out:expr, $($arg:tt)*) => {
        writeln!($out, $($arg)*).map_err(|e| Error::Io(e.to_string()))?
    };
}

/// The data representation as a model: max-pool vertices become plain hidden
/// vertices so that every hidden vertex sums, and every activation is the identity.
fn datarep_model(net: &NeuralNetwork, x: &[C64], opts: DataRepOptions) -> Result<Model> {
    let dr = data_representation_with(net, x, opts)?;
    let nq = net.quiver();
    let mut b = NetworkQuiverBuilder::new();
    for v in 0..nq.vertex_count() {
        let kind = match nq.kind(v) {
            VertexKind::MaxPool => VertexKind::Hidden,
            k => k,
        };
        b.vertex(nq.vertex_id(v), kind, nq.layer(v))?;
    }
    for e in nq.delooped().edges() {
        b.edge(e.id.clone(), e.source, e.target)?;
    }
    let plain = Arc::new(b.build()?);
    let rep = crate::network::ThinRep::from_map(plain, &dr.rep.to_map())?;
    Ok(Model {
        net: NeuralNetwork::uniform(rep, Activation::Identity),
        arch: WeightArchitecture::default(),
    })
}

fn execute(cmd: Command, stdout: &mut dyn Write) -> Result<i32> {
    match cmd {
        Command::Validate { model } => {
            let m = Model::read(&model)?;
            let nq = m.net.quiver();
            let report = crate::layers::check_weight_architecture(m.net.rep(), &m.arch, 1e-9);
            if let Some(v) = report.worst() {
                return Err(Error::BreaksWeightArchitecture {
                    location: v.location.clone(),
                    residual: v.residual,
                });
            }
            say!(
                stdout,
                "valid: {} vertices, {} edges, {} hidden, d={}, k={}",
                nq.vertex_count(),
                nq.edge_count(),
                nq.hidden().len(),
                nq.input_dim(),
                nq.output_dim()
            );
        }
        Command::Forward {
            model,
            input,
            trace,
        } => {
            let m = Model::read(&model)?;
            let x = parse_input(&input)?;
            let t = forward(&m.net, &x)?;
            say!(stdout, "{}", format_vector(t.output()));
            if trace {
                let nq = m.net.quiver();
                for &v in nq.order() {
                    let id = nq.vertex_id(v);
                    let pre = t.pre_activation(id).expect("vertex exists");
                    let act = t.activation_output(id).expect("vertex exists");
                    say!(
                        stdout,
                        "{id}\tpre={}\tact={}",
                        format_complex(pre),
                        format_complex(act)
                    );
                }
            }
        }
        Command::Act {
            model,
            tau,
            random,
            out,
        } => {
            let m = Model::read(&model)?;
            let tau = match (tau, random) {
                (Some(p), _) => read_tau(&p)?,
                (None, Some(seed)) => admissible_tau(&m.arch, m.net.quiver(), seed),
                (None, None) => unreachable!("clap requires --tau or --random"),
            };
            let moved = Model {
                net: act_on_network(&tau, &m.net)?,
                arch: m.arch,
            };
            emit(&out, &moved.to_json_string(), stdout)?;
        }
        Command::VerifyIso {
            model_a,
            model_b,
            tau,
            data,
            tol,
        } => {
            let a = Model::read(&model_a)?;
            let b = Model::read(&model_b)?;
            let tau = read_tau(&tau)?;
            let samples = match data {
                Some(p) => read_csv_rows(&p)?,
                None => vec![vec![C64::new(1.0, 0.0); a.net.quiver().input_dim()]],
            };
            let r = verify_isomorphism(&tau, &a.net, &b.net, &samples, tol)?;
            for (name, c) in [
                ("weights", &r.weights),
                ("activations", &r.activations),
                ("vertex_scaling", &r.vertex_scaling),
                ("outputs", &r.outputs),
            ] {
                let status = if c.passed { "pass" } else { "FAIL" };
                let at = c
                    .worst
                    .as_deref()
                    .map(|w| format!(" at {w}"))
                    .unwrap_or_default();
                say!(
                    stdout,
                    "{name}: {status} (max residual {:.3e}{at})",
                    c.max_residual
                );
            }
            if !r.passed() {
                say!(stdout, "not an isomorphism");
                return Ok(2);
            }
            say!(stdout, "isomorphism verified");
        }
        Command::Datarep {
            model,
            input,
            max_pool_indicator,
            out,
        } => {
            let m = Model::read(&model)?;
            let x = parse_input(&input)?;
            let opts = DataRepOptions { max_pool_indicator };
            let dm = datarep_model(&m.net, &x, opts)?;
            let report = verify_data_theorem_with(&m.net, &x, 1e-9, opts)?;
            if !report.passed {
                return Err(Error::NonFinite(format!(
                    "data representation residual {:e}",
                    report.output_residual
                )));
            }
            emit(&out, &dm.to_json_string(), stdout)?;
        }
        Command::Canonical { model, perturb } => {
            let m = Model::read(&model)?;
            let opts = CanonicalOptions {
                perturb: perturb.then_some(PERTURB_EPS),
            };
            let p = canonicalize_with(m.net.rep(), opts)?;
            say!(
                stdout,
                "{}",
                serde_json::to_string_pretty(&p.to_json()).expect("json")
            );
        }
        Command::Dim { model } => {
            let m = Model::read(&model)?;
            say!(stdout, "{}", moduli_dimension(m.net.quiver()));
        }
        Command::Stability { model, input } => {
            let m = Model::read(&model)?;
            let rep = match input {
                Some(s) => {
                    let opts = DataRepOptions {
                        max_pool_indicator: true,
                    };
                    data_representation_with(&m.net, &parse_csv_row(&s)?, opts)?.rep
                }
                None => m.net.rep().clone(),
            };
            let r = stability_check(&double_frame(&rep, true)?);
            let failed = r.failed.map(|f| match f {
                crate::moduli::Instability::KernelOfH => "kernel_of_h",
                crate::moduli::Instability::ImageOfEll => "image_of_ell",
            });
            let v = json!({"stable": r.stable, "failed": failed, "witness": r.witness});
            say!(stdout, "{}", v);
        }
        Command::Teleport { model, seed, out } => {
            let m = Model::read(&model)?;
            let tau = admissible_tau(&m.arch, m.net.quiver(), seed);
            let moved = Model {
                net: teleport(&m.net, &tau, &m.arch)?,
                arch: m.arch,
            };
            emit(&out, &moved.to_json_string(), stdout)?;
        }
        Command::PruneProfile {
            model,
            data,
            threshold,
        } => {
            let m = Model::read(&model)?;
            let rows = read_csv_rows(&data)?;
            let prof = pruning_profile(&m.net, &rows, threshold)?;
            say!(stdout, "edge,frequency,prunable");
            for (e, f) in &prof.frequency {
                say!(stdout, "{e},{f:.12},{}", *f >= 0.5);
            }
        }
        Command::Train {
            model,
            data,
            rate,
            steps,
            trace_moduli,
            trace_json,
            out,
        } => {
            let m = Model::read(&model)?;
            let (d, k) = (m.net.quiver().input_dim(), m.net.quiver().output_dim());
            let rows = read_csv_rows(&data)?;
            let samples: Vec<Sample> = rows
                .into_iter()
                .map(|r| match r.len() == d + k {
                    true => Ok((r[..d].to_vec(), r[d..].to_vec())),
                    false => Err(Error::DimensionMismatch {
                        expected: d + k,
                        got: r.len(),
                    }),
                })
                .collect::<Result<_>>()?;
            let run = train(
                &m.net,
                &m.arch,
                &samples,
                TrainConfig {
                    learning_rate: rate,
                    steps,
                },
            )?;
            if trace_moduli.is_some() || trace_json.is_some() {
                let inputs: Vec<Vec<C64>> = samples.iter().map(|(x, _)| x.clone()).collect();
                let record = run.trajectory(&inputs)?;
                if let Some(p) = trace_moduli {
                    write_file(&p, &record.to_csv())?;
                }
                if let Some(p) = trace_json {
                    write_file(
                        &p,
                        &(serde_json::to_string_pretty(&record.to_json()).expect("json") + "\n"),
                    )?;
                }
            }
            let trained = Model {
                net: run.last().clone(),
                arch: m.arch,
            };
            if let Some(p) = out.out {
                write_file(&p, &trained.to_json_string())?;
            }
            say!(stdout, "initial loss {:.12}", run.initial_loss);
            say!(stdout, "final loss {:.12}", run.final_loss());
        }
    }
    Ok(0)
}
