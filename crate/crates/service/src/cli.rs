//! `happypath` subcommands.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use happypath_core::artifacts::{
    graph_fingerprint, load_document, load_fields, load_graph, open, read_scenes, read_text, read_votes, to_json,
    write_pairs_csv, write_text, BeautyFieldDocument, FieldsDocument, GraphDocument, ReportDocument, Workspace,
    WorkspaceConfig, SCHEMA_VERSION,
};
use happypath_core::evaluation::{
    exploration_curve, improvement_matrix, length_tradeoff, quality_correlations, read_landmarks, LandmarkSet,
};
use happypath_core::fixtures::{
    city_fields, london_bbox, london_landmarks, synthetic_city, write_landmarks, write_photos, write_scenes,
    write_votes, SyntheticConfig,
};
use happypath_core::flickr_proxy::{
    beauty_proxy, emotion_features, fit_beauty_model, parse_stopwords, read_photos, BeautyModel, LiwcLexicon,
    DEFAULT_STOPWORDS,
};
use happypath_core::geo_grid::{BoundingBox, DEFAULT_CELL_SIZE_M};
use happypath_core::perception::{field_from_votes, FieldSet, IdwParams, Quality, ScoringCurve};
use happypath_core::route_engine::{ExplorationPolicy, RoutingGraph};
use happypath_core::LocationGraph;

use crate::geojson::{parse_point, parse_variants, route_response, RouteRequest};
use crate::server;
use crate::AppError;

#[derive(Debug, Parser)]
#[command(name = "happypath", version, about = "Pleasant walking routes from crowdsourced perception")]
pub struct Cli {
    /// Seed for randomized fixture generation.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Tile a bounding box and write the location graph.
    BuildGrid(BuildGridArgs),
    /// Aggregate votes into per-cell fields for all three qualities.
    Score(ScoreArgs),
    /// Estimate a beauty field from photo tags.
    IngestPhotos(IngestArgs),
    /// Shortest and pleasant routes between two points, as GeoJSON.
    Route(RouteArgs),
    /// Improvement matrix, length trade-off, correlations and exploration curves.
    Evaluate(EvaluateArgs),
    /// Serve a workspace over HTTP.
    Serve(ServeArgs),
    /// Write a synthetic demo workspace.
    Fixtures(FixturesArgs),
}

#[derive(Debug, Args)]
pub struct BuildGridArgs {
    /// min_lat,min_lon,max_lat,max_lon
    #[arg(long)]
    pub bbox: String,
    #[arg(long, default_value_t = DEFAULT_CELL_SIZE_M)]
    pub cell: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    #[arg(long)]
    pub graph: PathBuf,
    #[arg(long)]
    pub votes: PathBuf,
    #[arg(long)]
    pub scenes: PathBuf,
    #[arg(long, default_value = "cubic")]
    pub curve: ScoringCurve,
    #[arg(long, default_value_t = IdwParams::default().k)]
    pub idw_k: usize,
    #[arg(long, default_value_t = IdwParams::default().power)]
    pub idw_power: f64,
    /// Replace the vote-based beauty field with one from `ingest-photos`.
    #[arg(long)]
    pub beauty: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    #[arg(long)]
    pub graph: PathBuf,
    #[arg(long)]
    pub photos: PathBuf,
    /// `category<TAB>pattern` lines; the bundled lexicon when omitted.
    #[arg(long)]
    pub lexicon: Option<PathBuf>,
    /// One stopword per line; the bundled list when omitted.
    #[arg(long)]
    pub stopwords: Option<PathBuf>,
    /// Refit the model against the beauty scores in this fields file
    /// instead of using the London coefficients.
    #[arg(long)]
    pub fit_to: Option<PathBuf>,
    #[arg(long, default_value = "cubic")]
    pub curve: ScoringCurve,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct PolicyArgs {
    #[arg(long)]
    pub m_max: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    /// Read exactly m_max walks instead of stopping by marginal value.
    #[arg(long)]
    pub no_mvt: bool,
    /// Drop walks that revisit a cell.
    #[arg(long)]
    pub simple: bool,
}

impl PolicyArgs {
    fn policy(&self) -> ExplorationPolicy {
        let d = ExplorationPolicy::default();
        ExplorationPolicy {
            m_max: self.m_max.unwrap_or(d.m_max),
            batch_size: self.batch_size.unwrap_or(d.batch_size),
            mvt_enabled: !self.no_mvt,
            simple_paths_only: self.simple,
            ..d
        }
    }
}

#[derive(Debug, Args)]
pub struct RouteArgs {
    #[arg(long)]
    pub graph: PathBuf,
    #[arg(long)]
    pub fields: PathBuf,
    /// lat,lon
    #[arg(long, allow_hyphen_values = true)]
    pub from: String,
    /// lat,lon
    #[arg(long, allow_hyphen_values = true)]
    pub to: String,
    /// beauty, quiet, happy, shortest or all
    #[arg(long, default_value = "all")]
    pub quality: String,
    /// Defaults to the curve stored in the fields file.
    #[arg(long)]
    pub curve: Option<ScoringCurve>,
    #[command(flatten)]
    pub policy: PolicyArgs,
    /// Write here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub graph: PathBuf,
    #[arg(long)]
    pub fields: PathBuf,
    #[arg(long)]
    pub landmarks: PathBuf,
    #[arg(long)]
    pub curve: Option<ScoringCurve>,
    #[command(flatten)]
    pub policy: PolicyArgs,
    /// Largest m of the exploration sweep.
    #[arg(long, default_value_t = 1000)]
    pub sweep_m_max: usize,
    #[arg(long)]
    pub out: PathBuf,
    /// Also write per-pair records as CSV.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, default_value = "workspace.json")]
    pub config: PathBuf,
    #[arg(long)]
    pub host: Option<String>,
    #[arg(long)]
    pub port: Option<u16>,
}

#[derive(Debug, Args)]
pub struct FixturesArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = SyntheticConfig::default().n_scenes)]
    pub scenes: usize,
    #[arg(long, default_value_t = SyntheticConfig::default().votes_per_quality)]
    pub votes: usize,
    #[arg(long, default_value_t = SyntheticConfig::default().n_photos)]
    pub photos: usize,
    #[arg(long, default_value = "cubic")]
    pub curve: ScoringCurve,
}

pub fn run(cli: Cli) -> Result<(), AppError> {
    match cli.command {
        Command::BuildGrid(a) => build_grid(&a),
        Command::Score(a) => score(&a),
        Command::IngestPhotos(a) => ingest_photos(&a),
        Command::Route(a) => route(&a),
        Command::Evaluate(a) => evaluate(&a),
        Command::Serve(a) => serve(&a),
        Command::Fixtures(a) => fixtures(&a, cli.seed),
    }
}

fn write_graph(graph: &LocationGraph, out: &Path) -> Result<(), AppError> {
    write_text(out, &to_json(&GraphDocument::new(graph)))?;
    Ok(())
}

fn build_grid(a: &BuildGridArgs) -> Result<(), AppError> {
    let graph = LocationGraph::build(BoundingBox::parse(&a.bbox)?, a.cell)?;
    write_graph(&graph, &a.out)?;
    eprintln!(
        "wrote {} ({} x {} = {} cells)",
        a.out.display(),
        graph.grid.rows,
        graph.grid.cols,
        graph.n_cells()
    );
    Ok(())
}

fn write_fields(fields: &FieldSet, fingerprint: &str, out: &Path) -> Result<(), AppError> {
    let doc = FieldsDocument {
        schema_version: SCHEMA_VERSION,
        graph_fingerprint: fingerprint.to_string(),
        fields: fields.clone(),
    };
    write_text(out, &to_json(&doc))?;
    Ok(())
}

fn score(a: &ScoreArgs) -> Result<(), AppError> {
    let graph = load_graph(&a.graph)?;
    let fp = graph_fingerprint(&graph);
    let scenes = read_scenes(open(&a.scenes)?)?;
    let votes = read_votes(open(&a.votes)?)?;
    let idw = IdwParams {
        k: a.idw_k,
        power: a.idw_power,
    };
    let mut out = Vec::with_capacity(3);
    for q in Quality::ALL {
        let (field, agg) = field_from_votes(&graph, &scenes, &votes, q, a.curve, idw)?;
        eprintln!("{q}: {} scored scenes, {} rejected votes", agg.n_scored(), agg.rejected);
        out.push(field);
    }
    let happy = out.pop().expect("three fields");
    let quiet = out.pop().expect("three fields");
    let beauty = out.pop().expect("three fields");
    let mut fields = FieldSet::new(beauty, quiet, happy)?;
    if let Some(path) = &a.beauty {
        let doc: BeautyFieldDocument = load_document(path, &fp)?;
        fields.set(doc.field.with_curve(a.curve)?);
        eprintln!("beauty: taken from {}", path.display());
    }
    write_fields(&fields, &fp, &a.out)?;
    eprintln!("wrote {}", a.out.display());
    Ok(())
}

fn ingest_photos(a: &IngestArgs) -> Result<(), AppError> {
    let graph = load_graph(&a.graph)?;
    let fp = graph_fingerprint(&graph);
    let photos = read_photos(open(&a.photos)?)?;
    let lexicon = match &a.lexicon {
        Some(p) => LiwcLexicon::parse_tsv(&read_text(p)?)?,
        None => LiwcLexicon::default_lexicon(),
    };
    let stopwords = match &a.stopwords {
        Some(p) => parse_stopwords(&read_text(p)?),
        None => parse_stopwords(DEFAULT_STOPWORDS),
    };
    let mut model = BeautyModel::LONDON;
    let mut proxy = beauty_proxy(&graph, &photos, &lexicon, &stopwords, &model)?;
    if let Some(path) = &a.fit_to {
        let target = load_fields(path, &fp)?;
        let emo = emotion_features(&proxy.normalized, &lexicon)?;
        let (rows, y): (Vec<[f64; 3]>, Vec<f64>) = proxy
            .tally
            .cells
            .iter()
            .zip(&emo)
            .zip(&target.beauty.raw)
            .filter(|((s, _), _)| s.n_photos > 0)
            .map(|((s, &(fp, fn_)), &b)| ([(s.n_photos as f64).ln(), fp, fn_], b))
            .unzip();
        let fit = fit_beauty_model(&rows, &y)?;
        eprintln!(
            "fitted on {} cells: intercept {:.4}, log density {:.4}, f_p {:.4}, f_n {:.4}, R^2 {:.4}",
            rows.len(),
            fit.model.intercept,
            fit.model.coef_log_density,
            fit.model.coef_fp,
            fit.model.coef_fn,
            fit.r_squared
        );
        model = fit.model;
        proxy = beauty_proxy(&graph, &photos, &lexicon, &stopwords, &model)?;
    }
    let doc = BeautyFieldDocument {
        schema_version: SCHEMA_VERSION,
        graph_fingerprint: fp,
        model,
        cells_without_photos: proxy.predicted.iter().filter(|p| p.is_none()).count(),
        photos_outside: proxy.tally.outside.clone(),
        field: proxy.field(a.curve)?,
    };
    write_text(&a.out, &to_json(&doc))?;
    eprintln!(
        "wrote {} ({} photos, {} outside the bbox, {} cells without photos)",
        a.out.display(),
        photos.len(),
        doc.photos_outside.len(),
        doc.cells_without_photos
    );
    Ok(())
}

fn load_pair(graph: &Path, fields: &Path, curve: Option<ScoringCurve>) -> Result<(LocationGraph, String, FieldSet), AppError> {
    let graph = load_graph(graph)?;
    let fp = graph_fingerprint(&graph);
    let mut fields = load_fields(fields, &fp)?;
    if let Some(c) = curve {
        fields = fields.with_curve(c)?;
    }
    Ok((graph, fp, fields))
}

fn route(a: &RouteArgs) -> Result<(), AppError> {
    let (graph, fp, fields) = load_pair(&a.graph, &a.fields, a.curve)?;
    let policy = a.policy.policy();
    policy.validate()?;
    let routing = RoutingGraph::new(&graph);
    let req = RouteRequest {
        from: parse_point(&a.from)?,
        to: parse_point(&a.to)?,
        variants: parse_variants(&a.quality)?,
        policy,
    };
    let body = to_json(&route_response(&routing, &fp, &fields, fields.beauty.curve, &req)?);
    match &a.out {
        Some(p) => write_text(p, &body)?,
        None => print!("{body}"),
    }
    Ok(())
}

fn evaluate(a: &EvaluateArgs) -> Result<(), AppError> {
    let (graph, fp, fields) = load_pair(&a.graph, &a.fields, a.curve)?;
    let landmarks = LandmarkSet::snap(&graph, &read_landmarks(open(&a.landmarks)?)?)?;
    let policy = a.policy.policy();
    let routing = RoutingGraph::new(&graph);
    let improvement = improvement_matrix(&routing, &fields, &landmarks, &policy)?;
    let pairs: Vec<(usize, usize)> = landmarks
        .pairs()
        .into_iter()
        .map(|(i, j)| (landmarks.landmarks[i].cell, landmarks.landmarks[j].cell))
        .collect();
    let sweep = ExplorationPolicy {
        m_max: a.sweep_m_max.max(1),
        batch_size: policy.batch_size.min(a.sweep_m_max.max(1)),
        mvt_enabled: false,
        ..policy
    };
    let exploration = Quality::ALL
        .iter()
        .map(|&q| exploration_curve(&routing, fields.get(q), &pairs, &sweep))
        .collect::<Result<Vec<_>, _>>()?;
    let doc = ReportDocument {
        schema_version: SCHEMA_VERSION,
        graph_fingerprint: fp,
        policy,
        length_tradeoff: length_tradeoff(&improvement),
        correlations: quality_correlations(&fields)?,
        improvement,
        exploration,
    };
    write_text(&a.out, &to_json(&doc))?;
    if let Some(p) = &a.csv {
        let mut buf = Vec::new();
        write_pairs_csv(&doc.improvement, &mut buf)?;
        write_text(p, &String::from_utf8(buf).expect("csv is utf-8"))?;
    }
    let diag = doc.improvement.score.diagonal();
    let fmt = |v: Option<f64>| v.map_or("n/a".to_string(), |x| format!("{x:.1}%"));
    eprintln!(
        "{} pairs; diagonal beauty {} quiet {} happy {}; mean length overhead {:.1}%, {:.1} extra min; {} dominance violations",
        doc.improvement.pairs.len(),
        fmt(diag[0]),
        fmt(diag[1]),
        fmt(diag[2]),
        doc.length_tradeoff.mean_delta_length_pct,
        doc.length_tradeoff.mean_extra_minutes,
        doc.improvement.dominance_violations
    );
    Ok(())
}

fn serve(a: &ServeArgs) -> Result<(), AppError> {
    let ws = Workspace::load(&a.config)?;
    let addr = server::bind_address(&ws)?;
    let addr = match (&a.host, a.port) {
        (None, None) => addr,
        (host, port) => {
            let (h, p) = addr.rsplit_once(':').expect("host:port");
            format!(
                "{}:{}",
                host.as_deref().unwrap_or(h),
                port.map_or(p.to_string(), |p| p.to_string())
            )
        }
    };
    let rt = tokio::runtime::Runtime::new().map_err(|e| AppError::new("IO", e.to_string()))?;
    rt.block_on(server::serve(ws, &addr))
}

fn fixtures(a: &FixturesArgs, seed: u64) -> Result<(), AppError> {
    let graph = LocationGraph::build(london_bbox(), DEFAULT_CELL_SIZE_M)?;
    let fp = graph_fingerprint(&graph);
    let config = SyntheticConfig {
        n_scenes: a.scenes,
        votes_per_quality: a.votes,
        n_photos: a.photos,
        ..Default::default()
    };
    let city = synthetic_city(&graph, &config, seed);
    let csv_err = |what: &str, e: csv::Error| AppError::new("CSV", format!("{what}: {e}"));
    let write_csv = |name: &str, f: &dyn Fn(&mut Vec<u8>) -> csv::Result<()>| -> Result<(), AppError> {
        let mut buf = Vec::new();
        f(&mut buf).map_err(|e| csv_err(name, e))?;
        write_text(&a.out.join(name), &String::from_utf8(buf).expect("csv is utf-8"))?;
        Ok(())
    };
    write_graph(&graph, &a.out.join("graph.json"))?;
    write_csv("scenes.csv", &|w| write_scenes(&city.scenes, w))?;
    write_csv("votes.csv", &|w| write_votes(&city.votes, w))?;
    write_csv("photos.csv", &|w| write_photos(&city.photos, w))?;
    write_csv("landmarks.csv", &|w| write_landmarks(&london_landmarks(), w))?;
    let fields = city_fields(&graph, &city, a.curve)?;
    write_fields(&fields, &fp, &a.out.join("fields.json"))?;
    let ws = WorkspaceConfig {
        curve: a.curve,
        ..Default::default()
    };
    write_text(&a.out.join("workspace.json"), &to_json(&ws))?;
    eprintln!(
        "wrote demo workspace to {} (seed {seed}, {} cells, {} scenes, {} votes, {} photos)",
        a.out.display(),
        graph.n_cells(),
        city.scenes.len(),
        city.votes.len(),
        city.photos.len()
    );
    Ok(())
}
