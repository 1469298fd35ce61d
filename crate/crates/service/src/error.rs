//! One error type with a machine-readable code for the CLI and the service.

use std::fmt;

use happypath_core::artifacts::ArtifactError;
use happypath_core::evaluation::EvalError;
use happypath_core::flickr_proxy::ProxyError;
use happypath_core::geo_grid::GridError;
use happypath_core::perception::PerceptionError;
use happypath_core::route_engine::RouteError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AppError {
    pub code: &'static str,
    pub message: String,
}

impl AppError {
    pub fn new(code: &'static str, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }

    /// Request errors are the caller's fault; everything else is a 500.
    pub fn is_client_error(&self) -> bool {
        matches!(
            self.code,
            "OUT_OF_BBOX" | "BAD_QUALITY" | "BAD_CURVE" | "BAD_COORDINATES" | "BAD_PARAMETER"
        )
    }
}

impl fmt::Display for AppError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.code, self.message)
    }
}

impl std::error::Error for AppError {}

fn grid_code(e: &GridError) -> &'static str {
    match e {
        GridError::InvalidBbox(_) => "INVALID_BBOX",
        GridError::InvalidCellSize(_) => "INVALID_CELL_SIZE",
        GridError::OutOfBounds { .. } => "OUT_OF_BBOX",
        GridError::GraphTooSmall(_) => "GRAPH_TOO_SMALL",
        GridError::UnknownCell(_) => "UNKNOWN_CELL",
    }
}

fn perception_code(e: &PerceptionError) -> &'static str {
    match e {
        PerceptionError::NoScoredScenes => "NO_SCORED_SCENES",
        PerceptionError::SceneOutsideBbox(_) => "SCENE_OUT_OF_BBOX",
        PerceptionError::RawOutOfRange { .. } => "RAW_OUT_OF_RANGE",
        PerceptionError::DegenerateField(_) => "DEGENERATE_FIELD",
        PerceptionError::EmptyField => "EMPTY_FIELD",
        PerceptionError::UnknownQuality(_) => "BAD_QUALITY",
        PerceptionError::UnknownCurve(_) => "BAD_CURVE",
        PerceptionError::InvalidIdw(_) => "INVALID_IDW",
        PerceptionError::FieldSet(_) => "FIELD_MISMATCH",
        PerceptionError::Grid(g) => grid_code(g),
    }
}

fn route_code(e: &RouteError) -> &'static str {
    match e {
        RouteError::UnknownCell(_) => "UNKNOWN_CELL",
        RouteError::Unreachable { .. } => "UNREACHABLE",
        RouteError::FieldMismatch { .. } => "FIELD_MISMATCH",
        RouteError::InvalidPolicy(_) => "INVALID_POLICY",
    }
}

fn proxy_code(e: &ProxyError) -> &'static str {
    match e {
        ProxyError::Lexicon(_) => "LEXICON",
        ProxyError::Regression(_) | ProxyError::RankDeficient { .. } => "REGRESSION",
        ProxyError::TooFewCells(_) => "TOO_FEW_CELLS",
        ProxyError::Unpredictable(_) => "UNPREDICTABLE",
        ProxyError::NoPhotos => "NO_PHOTOS",
        ProxyError::Csv(_) => "CSV",
        ProxyError::Grid(g) => grid_code(g),
        ProxyError::Perception(p) => perception_code(p),
    }
}

fn eval_code(e: &EvalError) -> &'static str {
    match e {
        EvalError::Landmark(_) => "LANDMARKS",
        EvalError::FieldMismatch { .. } => "FIELD_MISMATCH",
        EvalError::MvtEnabled => "MVT_ENABLED",
        EvalError::Correlation(_) => "CORRELATION",
        EvalError::Route(r) => route_code(r),
        EvalError::Perception(p) => perception_code(p),
        EvalError::Grid(g) => grid_code(g),
    }
}

fn artifact_code(e: &ArtifactError) -> &'static str {
    match e {
        ArtifactError::Io { .. } => "IO",
        ArtifactError::Json { .. } => "BAD_JSON",
        ArtifactError::Schema { .. } => "SCHEMA_VERSION",
        ArtifactError::FingerprintMismatch { .. } => "FINGERPRINT_MISMATCH",
        ArtifactError::GraphTampered => "GRAPH_TAMPERED",
        ArtifactError::Csv { .. } => "CSV",
        ArtifactError::Grid(g) => grid_code(g),
        ArtifactError::Perception(p) => perception_code(p),
        ArtifactError::Proxy(p) => proxy_code(p),
        ArtifactError::Eval(v) => eval_code(v),
    }
}

macro_rules! from_core {
    ($($ty:ty => $f:ident),* $(,)?) => {
        $(impl From<$ty> for AppError {
            fn from(e: $ty) -> Self {
                AppError::new($f(&e), e.to_string())
            }
        })*
    };
}

from_core! {
    GridError => grid_code,
    PerceptionError => perception_code,
    RouteError => route_code,
    ProxyError => proxy_code,
    EvalError => eval_code,
    ArtifactError => artifact_code,
}
