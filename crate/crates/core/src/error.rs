use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Every failure the library can report.
///
/// Variants are grouped by the stage that raises them; [`Error::code`] gives
/// the stable machine-readable name used on the command line.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    // quiver construction and validation
    #[error("duplicate identifier `{0}`")]
    DuplicateId(String),
    #[error("edge `{edge}` references undeclared vertex `{vertex}`")]
    UnknownVertex { edge: String, vertex: String },
    #[error("vertex `{0}` is a source or sink but carries a loop or an incoming edge")]
    LoopOnSourceOrSink(String),
    #[error("hidden vertex `{vertex}` must carry exactly one loop, found {found}")]
    MissingHiddenLoop { vertex: String, found: usize },
    #[error("edge `{0}` points from a deeper layer to a shallower one")]
    BackwardEdge(String),
    #[error("edge `{0}` joins two vertices of the same layer")]
    IntraLayerEdge(String),
    #[error("network quiver has no hidden vertices")]
    NoHiddenVertices,
    #[error("network quiver needs at least one input and one output vertex")]
    MissingInputOrOutput,
    #[error("vertex `{vertex}` declared {declared} contradicts the graph: {reason}")]
    KindMismatch {
        vertex: String,
        declared: String,
        reason: String,
    },
    #[error("cycle detected among non-loop edges")]
    CycleDetected,

    // representations and networks
    #[error("expected {expected} values, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("no weight given for edge `{0}`")]
    MissingWeight(String),
    #[error("`{0}` is not a delooped edge of this quiver")]
    UnknownEdge(String),
    #[error("non-finite value for `{0}`")]
    NonFinite(String),
    #[error("change of basis does not match the hidden vertices: {0}")]
    VertexSetMismatch(String),
    #[error("change of basis is zero at vertex `{0}`")]
    ZeroScale(String),
    #[error("activation assignment mismatch at vertex `{0}`")]
    ActivationMismatch(String),
    #[error("representations live on different quivers")]
    QuiverMismatch,

    // layers
    #[error("layer {layer}: {detail}")]
    LayerDimension { layer: usize, detail: String },
    #[error("layer {0} produces an empty output")]
    EmptyOutput(usize),
    #[error("weight architecture broken at {location}: residual {residual:e}")]
    BreaksWeightArchitecture { location: String, residual: f64 },
    #[error("conflicting architecture constraint on edge `{0}`")]
    ConflictingConstraint(String),

    // data representations
    #[error("max-pooling vertex `{0}` needs indicator mode")]
    UnsupportedMaxPool(String),

    // moduli
    #[error("bias vertex `{0}` present and bias folding is disabled")]
    UnfoldedBias(String),
    #[error("parallel edges between `{0}` and `{1}` cannot be framed")]
    ParallelFramingEdges(String, String),
    #[error("framing entry for `{0}` has no edge in the quiver but is nonzero")]
    FramingWithoutEdge(String),
    #[error("{}", zero_on_forest_message(.edge, .dead_source))]
    ZeroOnForestEdge {
        edge: String,
        dead_source: Option<String>,
    },

    // training
    #[error("edge or vertex `{0}` carries a complex value; training is real-only")]
    ComplexNetwork(String),
    #[error("invalid training configuration: {0}")]
    InvalidConfig(String),

    // I/O
    #[error("{0}")]
    Parse(String),
    #[error("{0}")]
    Io(String),
}

fn zero_on_forest_message(edge: &str, dead: &Option<String>) -> String {
    match dead {
        Some(v) => format!("gauge forest edge `{edge}` is zero because vertex `{v}` is inactive"),
        None => format!("gauge forest edge `{edge}` has zero weight"),
    }
}

impl Error {
    pub fn code(&self) -> &'static str {
        match self {
            Error::DuplicateId(_) => "DuplicateId",
            Error::UnknownVertex { .. } => "UnknownVertex",
            Error::LoopOnSourceOrSink(_) => "LoopOnSourceOrSink",
            Error::MissingHiddenLoop { .. } => "MissingHiddenLoop",
            Error::BackwardEdge(_) => "BackwardEdge",
            Error::IntraLayerEdge(_) => "IntraLayerEdge",
            Error::NoHiddenVertices => "NoHiddenVertices",
            Error::MissingInputOrOutput => "MissingInputOrOutput",
            Error::KindMismatch { .. } => "KindMismatch",
            Error::CycleDetected => "CycleDetected",
            Error::DimensionMismatch { .. } => "DimensionMismatch",
            Error::MissingWeight(_) => "MissingWeight",
            Error::UnknownEdge(_) => "UnknownEdge",
            Error::NonFinite(_) => "NonFinite",
            Error::VertexSetMismatch(_) => "VertexSetMismatch",
            Error::ZeroScale(_) => "ZeroScale",
            Error::ActivationMismatch(_) => "ActivationMismatch",
            Error::QuiverMismatch => "QuiverMismatch",
            Error::LayerDimension { .. } => "DimensionMismatch",
            Error::EmptyOutput(_) => "EmptyOutput",
            Error::BreaksWeightArchitecture { .. } => "BreaksWeightArchitecture",
            Error::ConflictingConstraint(_) => "ConflictingConstraint",
            Error::UnsupportedMaxPool(_) => "UnsupportedMaxPool",
            Error::UnfoldedBias(_) => "UnfoldedBias",
            Error::ParallelFramingEdges(..) => "ParallelFramingEdges",
            Error::FramingWithoutEdge(_) => "FramingWithoutEdge",
            Error::ZeroOnForestEdge { .. } => "ZeroOnForestEdge",
            Error::ComplexNetwork(_) => "ComplexNetwork",
            Error::InvalidConfig(_) => "InvalidConfig",
            Error::Parse(_) => "Parse",
            Error::Io(_) => "Io",
        }
    }

    /// True for errors caused by numerical degeneracy rather than a malformed model.
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            Error::ZeroOnForestEdge { .. }
                | Error::ZeroScale(_)
                | Error::NonFinite(_)
                | Error::BreaksWeightArchitecture { .. }
        )
    }
}
