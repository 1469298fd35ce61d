//! Versioned JSON artifacts, CSV inputs and the workspace configuration.
//!
//! Every artifact carries `schema_version` and, except the graph itself, the
//! fingerprint of the graph it was computed on: the SHA-256 of the graph's
//! compact JSON. Loading checks both.

use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::evaluation::{
    read_landmarks, Correlation, EvalError, ExplorationCurve, ImprovementReport, LandmarkSet, LengthTradeoff,
};
use crate::flickr_proxy::{BeautyModel, ProxyError};
use crate::geo_grid::{Cell, GridError, GridSpec, LocationGraph};
use crate::perception::{FieldSet, PerceptionError, Quality, QualityField, Scene, ScoringCurve, VoteRecord};
use crate::route_engine::ExplorationPolicy;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ArtifactError {
    #[error("{path}: {message}")]
    Io { path: PathBuf, message: String },
    #[error("{what}: {message}")]
    Json { what: String, message: String },
    #[error("{what}: schema_version {found}, expected {SCHEMA_VERSION}")]
    Schema { what: String, found: u32 },
    #[error("{what} was computed on graph {found}, loaded graph is {expected}")]
    FingerprintMismatch {
        what: String,
        expected: String,
        found: String,
    },
    #[error("graph document does not match the graph its grid spec builds")]
    GraphTampered,
    #[error("{what}: {message}")]
    Csv { what: String, message: String },
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Perception(#[from] PerceptionError),
    #[error(transparent)]
    Proxy(#[from] ProxyError),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// SHA-256 hex of the graph's compact JSON.
pub fn graph_fingerprint(graph: &LocationGraph) -> String {
    let bytes = serde_json::to_vec(graph).expect("graph serializes");
    hex::encode(Sha256::digest(&bytes))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphDocument {
    pub schema_version: u32,
    pub fingerprint: String,
    pub grid: GridSpec,
    pub cells: Vec<Cell>,
    pub adjacency: Vec<Vec<(usize, f64)>>,
}

impl GraphDocument {
    pub fn new(graph: &LocationGraph) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            fingerprint: graph_fingerprint(graph),
            grid: graph.grid,
            cells: graph.cells.clone(),
            adjacency: graph.adjacency.clone(),
        }
    }

    /// Rebuilds the graph from the grid spec and checks it matches the
    /// stored cells, adjacency and fingerprint.
    pub fn into_graph(self) -> Result<LocationGraph, ArtifactError> {
        check_schema("graph", self.schema_version)?;
        let graph = LocationGraph {
            grid: self.grid,
            cells: self.cells,
            adjacency: self.adjacency,
        };
        let fp = graph_fingerprint(&graph);
        if fp != self.fingerprint {
            return Err(ArtifactError::FingerprintMismatch {
                what: "graph".into(),
                expected: fp,
                found: self.fingerprint,
            });
        }
        let rebuilt = LocationGraph::build(graph.grid.bbox, graph.grid.cell_size_m)?;
        if rebuilt != graph {
            return Err(ArtifactError::GraphTampered);
        }
        Ok(graph)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldsDocument {
    pub schema_version: u32,
    pub graph_fingerprint: String,
    pub fields: FieldSet,
}

/// Output of photo ingestion: a beauty field plus the model behind it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeautyFieldDocument {
    pub schema_version: u32,
    pub graph_fingerprint: String,
    pub model: BeautyModel,
    /// Cells without photos, filled with the median prediction.
    pub cells_without_photos: usize,
    /// Photos outside the bounding box.
    pub photos_outside: Vec<String>,
    pub field: QualityField,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportDocument {
    pub schema_version: u32,
    pub graph_fingerprint: String,
    pub policy: ExplorationPolicy,
    pub improvement: ImprovementReport,
    pub length_tradeoff: LengthTradeoff,
    pub correlations: Vec<Correlation>,
    pub exploration: Vec<ExplorationCurve>,
}

/// Documents that carry a graph fingerprint.
pub trait Fingerprinted {
    const WHAT: &'static str;
    fn schema_version(&self) -> u32;
    fn graph_fingerprint(&self) -> &str;
}

macro_rules! fingerprinted {
    ($t:ty, $what:literal) => {
        impl Fingerprinted for $t {
            const WHAT: &'static str = $what;
            fn schema_version(&self) -> u32 {
                self.schema_version
            }
            fn graph_fingerprint(&self) -> &str {
                &self.graph_fingerprint
            }
        }
    };
}

fingerprinted!(FieldsDocument, "fields");
fingerprinted!(BeautyFieldDocument, "beauty field");
fingerprinted!(ReportDocument, "report");

fn check_schema(what: &str, found: u32) -> Result<(), ArtifactError> {
    if found == SCHEMA_VERSION {
        Ok(())
    } else {
        Err(ArtifactError::Schema {
            what: what.into(),
            found,
        })
    }
}

/// Checks schema version and that `doc` belongs to the graph with
/// fingerprint `expected`.
pub fn check_document<T: Fingerprinted>(doc: &T, expected: &str) -> Result<(), ArtifactError> {
    check_schema(T::WHAT, doc.schema_version())?;
    if doc.graph_fingerprint() != expected {
        return Err(ArtifactError::FingerprintMismatch {
            what: T::WHAT.into(),
            expected: expected.into(),
            found: doc.graph_fingerprint().into(),
        });
    }
    Ok(())
}

/// Pretty JSON with a trailing newline; the on-disk form of every artifact.
pub fn to_json<T: Serialize>(doc: &T) -> String {
    let mut s = serde_json::to_string_pretty(doc).expect("artifact serializes");
    s.push('\n');
    s
}

pub fn from_json<T: DeserializeOwned>(what: &str, text: &str) -> Result<T, ArtifactError> {
    serde_json::from_str(text).map_err(|e| ArtifactError::Json {
        what: what.into(),
        message: e.to_string(),
    })
}

pub fn read_text(path: &Path) -> Result<String, ArtifactError> {
    fs::read_to_string(path).map_err(|e| ArtifactError::Io {
        path: path.into(),
        message: e.to_string(),
    })
}

pub fn write_text(path: &Path, text: &str) -> Result<(), ArtifactError> {
    let io = |e: std::io::Error| ArtifactError::Io {
        path: path.into(),
        message: e.to_string(),
    };
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(io)?;
    }
    fs::write(path, text).map_err(io)
}

pub fn open(path: &Path) -> Result<fs::File, ArtifactError> {
    fs::File::open(path).map_err(|e| ArtifactError::Io {
        path: path.into(),
        message: e.to_string(),
    })
}

pub fn load_graph(path: &Path) -> Result<LocationGraph, ArtifactError> {
    from_json::<GraphDocument>(&path.display().to_string(), &read_text(path)?)?.into_graph()
}

/// Loads a fingerprinted document and checks it against `fingerprint`.
pub fn load_document<T: Fingerprinted + DeserializeOwned>(path: &Path, fingerprint: &str) -> Result<T, ArtifactError> {
    let doc: T = from_json(&path.display().to_string(), &read_text(path)?)?;
    check_document(&doc, fingerprint)?;
    Ok(doc)
}

pub fn load_fields(path: &Path, fingerprint: &str) -> Result<FieldSet, ArtifactError> {
    let doc: FieldsDocument = load_document(path, fingerprint)?;
    doc.fields.validate()?;
    Ok(doc.fields)
}

#[derive(Deserialize)]
struct VoteRow {
    quality: String,
    scene_a: String,
    scene_b: String,
    outcome: String,
}

/// Reads `quality,scene_a,scene_b,outcome` rows with a header. Outcomes are
/// `a`, `b` or `tie` (also `cant_tell`).
pub fn read_votes<R: Read>(reader: R) -> Result<Vec<VoteRecord>, ArtifactError> {
    let csv_err = |m: String| ArtifactError::Csv {
        what: "votes".into(),
        message: m,
    };
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    rdr.deserialize::<VoteRow>()
        .enumerate()
        .map(|(i, row)| {
            let row = row.map_err(|e| csv_err(e.to_string()))?;
            let outcome = serde_json::from_value(serde_json::Value::String(row.outcome.to_lowercase()))
                .map_err(|_| csv_err(format!("row {}: unknown outcome {:?}", i + 1, row.outcome)))?;
            Ok(VoteRecord {
                quality: row.quality.parse()?,
                scene_a: row.scene_a,
                scene_b: row.scene_b,
                outcome,
            })
        })
        .collect()
}

/// Reads `scene_id,lat,lon,source` rows with a header.
pub fn read_scenes<R: Read>(reader: R) -> Result<Vec<Scene>, ArtifactError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    rdr.deserialize::<Scene>()
        .map(|r| {
            r.map_err(|e| ArtifactError::Csv {
                what: "scenes".into(),
                message: e.to_string(),
            })
        })
        .collect()
}

/// One row per landmark pair: lengths, and per recommended quality the
/// length overhead and the score gain in each quality.
pub fn write_pairs_csv<W: Write>(report: &ImprovementReport, writer: W) -> Result<(), ArtifactError> {
    use crate::evaluation::Measure;
    let err = |e: csv::Error| ArtifactError::Csv {
        what: "pairs".into(),
        message: e.to_string(),
    };
    let mut w = csv::Writer::from_writer(writer);
    let mut header: Vec<String> = ["from", "to", "from_cell", "to_cell", "shortest_m"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    for row in Quality::ALL {
        header.push(format!("{row}_length_m"));
        header.push(format!("{row}_delta_length_pct"));
        for col in Quality::ALL {
            header.push(format!("{row}_delta_{col}_pct"));
        }
    }
    w.write_record(&header).map_err(err)?;
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for p in &report.pairs {
        let mut rec = vec![
            p.from.clone(),
            p.to.clone(),
            p.from_cell.to_string(),
            p.to_cell.to_string(),
            p.shortest.length_m.to_string(),
        ];
        for row in Quality::ALL {
            rec.push(p.recommended[row.index()].length_m.to_string());
            rec.push(p.delta_length_pct(row).to_string());
            for col in Quality::ALL {
                rec.push(opt(p.delta_pct(row, col, Measure::Score)));
            }
        }
        w.write_record(&rec).map_err(err)?;
    }
    w.flush().map_err(|e| ArtifactError::Csv {
        what: "pairs".into(),
        message: e.to_string(),
    })
}

pub const DEFAULT_HOST: &str = "127.0.0.1";
pub const DEFAULT_PORT: u16 = 8080;

/// Plain-JSON workspace configuration. Relative paths resolve against the
/// directory holding the config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WorkspaceConfig {
    pub graph: PathBuf,
    pub fields: PathBuf,
    pub landmarks: Option<PathBuf>,
    pub curve: ScoringCurve,
    pub policy: ExplorationPolicy,
    pub host: String,
    pub port: u16,
}

impl Default for WorkspaceConfig {
    fn default() -> Self {
        Self {
            graph: "graph.json".into(),
            fields: "fields.json".into(),
            landmarks: Some("landmarks.csv".into()),
            curve: ScoringCurve::default(),
            policy: ExplorationPolicy::default(),
            host: DEFAULT_HOST.into(),
            port: DEFAULT_PORT,
        }
    }
}

/// Artifacts loaded from a workspace, fingerprints checked.
#[derive(Debug, Clone)]
pub struct Workspace {
    pub config: WorkspaceConfig,
    pub root: PathBuf,
    pub graph: LocationGraph,
    pub fingerprint: String,
    /// Under the configured curve.
    pub fields: FieldSet,
    pub landmarks: Option<LandmarkSet>,
}

impl WorkspaceConfig {
    pub fn load(path: &Path) -> Result<Self, ArtifactError> {
        from_json(&path.display().to_string(), &read_text(path)?)
    }
}

impl Workspace {
    pub fn load(config_path: &Path) -> Result<Self, ArtifactError> {
        let config = WorkspaceConfig::load(config_path)?;
        let root = config_path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::open(config, root)
    }

    pub fn open(config: WorkspaceConfig, root: PathBuf) -> Result<Self, ArtifactError> {
        config.policy.validate().map_err(EvalError::from)?;
        let graph = load_graph(&root.join(&config.graph))?;
        let fingerprint = graph_fingerprint(&graph);
        let fields = load_fields(&root.join(&config.fields), &fingerprint)?;
        if fields.n_cells() != graph.n_cells() {
            return Err(EvalError::FieldMismatch {
                expected: graph.n_cells(),
                got: fields.n_cells(),
            }
            .into());
        }
        let fields = fields.with_curve(config.curve)?;
        let landmarks = match &config.landmarks {
            Some(p) => {
                let pts = read_landmarks(open(&root.join(p))?)?;
                Some(LandmarkSet::snap(&graph, &pts)?)
            }
            None => None,
        };
        Ok(Self {
            config,
            root,
            graph,
            fingerprint,
            fields,
            landmarks,
        })
    }
}
