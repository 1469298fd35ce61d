//! GeoJSON documents served by `/route` and `/cells`.
//!
//! Coordinates are `[lon, lat]`. Routes are polylines through cell
//! centroids; a route whose endpoints share a cell is a single Point.

use serde::Serialize;

use happypath_core::evaluation::summarize_path;
use happypath_core::perception::{FieldSet, Quality, ScoringCurve};
use happypath_core::route_engine::{ExplorationPolicy, RouteVariant, RoutingGraph};
use happypath_core::LocationGraph;

use crate::AppError;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "type")]
pub enum Geometry {
    Point { coordinates: [f64; 2] },
    LineString { coordinates: Vec<[f64; 2]> },
    Polygon { coordinates: Vec<Vec<[f64; 2]>> },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Feature<P> {
    #[serde(rename = "type")]
    pub kind: &'static str,
    pub geometry: Geometry,
    pub properties: P,
}

impl<P> Feature<P> {
    pub fn new(geometry: Geometry, properties: P) -> Self {
        Self {
            kind: "Feature",
            geometry,
            properties,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PerQuality {
    pub beauty: f64,
    pub quiet: f64,
    pub happy: f64,
}

impl From<[f64; 3]> for PerQuality {
    fn from(v: [f64; 3]) -> Self {
        Self {
            beauty: v[0],
            quiet: v[1],
            happy: v[2],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RouteProperties {
    pub quality: RouteVariant,
    pub length_m: f64,
    pub walk_min: f64,
    pub avg_rank: PerQuality,
    pub mean_score: PerQuality,
    pub mean_prob: PerQuality,
    /// Length over the shortest route, percent.
    pub delta_length_pct: f64,
    pub paths_explored: usize,
    pub cells: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Endpoint {
    pub lat: f64,
    pub lon: f64,
    pub cell: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RouteResponse {
    #[serde(rename = "type")]
    pub kind: &'static str,
    pub graph_fingerprint: String,
    pub curve: ScoringCurve,
    pub from: Endpoint,
    pub to: Endpoint,
    pub features: Vec<Feature<RouteProperties>>,
}

/// `all` gives every variant; a single quality gives the shortest route and
/// that quality's route.
pub fn parse_variants(s: &str) -> Result<Vec<RouteVariant>, AppError> {
    if s.trim().eq_ignore_ascii_case("all") {
        return Ok(RouteVariant::ALL.to_vec());
    }
    let v: RouteVariant = s
        .parse()
        .map_err(|_| AppError::new("BAD_QUALITY", format!("unknown quality {s:?}")))?;
    Ok(match v {
        RouteVariant::Shortest => vec![RouteVariant::Shortest],
        q => vec![RouteVariant::Shortest, q],
    })
}

pub fn parse_point(s: &str) -> Result<(f64, f64), AppError> {
    let bad = || AppError::new("BAD_COORDINATES", format!("expected lat,lon, got {s:?}"));
    let (lat, lon) = s.split_once(',').ok_or_else(bad)?;
    let lat: f64 = lat.trim().parse().map_err(|_| bad())?;
    let lon: f64 = lon.trim().parse().map_err(|_| bad())?;
    if !lat.is_finite() || !lon.is_finite() {
        return Err(bad());
    }
    Ok((lat, lon))
}

fn lon_lat(graph: &LocationGraph, cell: usize) -> [f64; 2] {
    let c = &graph.cells[cell];
    [c.lon, c.lat]
}

pub struct RouteRequest {
    pub from: (f64, f64),
    pub to: (f64, f64),
    pub variants: Vec<RouteVariant>,
    pub policy: ExplorationPolicy,
}

/// `fields` must already be under `curve`.
pub fn route_response(
    routing: &RoutingGraph,
    fingerprint: &str,
    fields: &FieldSet,
    curve: ScoringCurve,
    req: &RouteRequest,
) -> Result<RouteResponse, AppError> {
    let graph = routing.graph();
    let endpoint = |(lat, lon): (f64, f64)| -> Result<Endpoint, AppError> {
        Ok(Endpoint {
            lat,
            lon,
            cell: graph.cell_of(lat, lon)?,
        })
    };
    let from = endpoint(req.from)?;
    let to = endpoint(req.to)?;
    let shortest = routing.shortest_path(from.cell, to.cell)?;

    let mut features = Vec::with_capacity(req.variants.len());
    if from.cell == to.cell {
        let s = summarize_path(&shortest.cells, 0.0, fields, 1);
        features.push(Feature::new(
            Geometry::Point {
                coordinates: lon_lat(graph, from.cell),
            },
            RouteProperties {
                quality: RouteVariant::Shortest,
                length_m: 0.0,
                walk_min: 0.0,
                avg_rank: s.avg_rank.into(),
                mean_score: s.mean_score.into(),
                mean_prob: s.mean_prob.into(),
                delta_length_pct: 0.0,
                paths_explored: 1,
                cells: s.cells,
            },
        ));
    } else {
        for &variant in &req.variants {
            let (cells, length_m, explored) = match variant.quality() {
                None => (shortest.cells.clone(), shortest.length_m, 1),
                Some(q) => {
                    let plan =
                        routing.best_pleasant_path(&fields.get(q).rank, variant, from.cell, to.cell, &req.policy)?;
                    (plan.path.cells, plan.path.length_m, plan.paths_explored)
                }
            };
            let s = summarize_path(&cells, length_m, fields, explored);
            features.push(Feature::new(
                Geometry::LineString {
                    coordinates: cells.iter().map(|&c| lon_lat(graph, c)).collect(),
                },
                RouteProperties {
                    quality: variant,
                    length_m,
                    walk_min: s.walk_min,
                    avg_rank: s.avg_rank.into(),
                    mean_score: s.mean_score.into(),
                    mean_prob: s.mean_prob.into(),
                    delta_length_pct: 100.0 * (length_m - shortest.length_m) / shortest.length_m,
                    paths_explored: explored,
                    cells: s.cells,
                },
            ));
        }
    }
    Ok(RouteResponse {
        kind: "FeatureCollection",
        graph_fingerprint: fingerprint.to_string(),
        curve,
        from,
        to,
        features,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellQuality {
    pub score: f64,
    pub prob: f64,
    pub rank: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellProperties {
    pub cell: usize,
    pub row: usize,
    pub col: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beauty: Option<CellQuality>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub quiet: Option<CellQuality>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub happy: Option<CellQuality>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellsResponse {
    #[serde(rename = "type")]
    pub kind: &'static str,
    pub graph_fingerprint: String,
    pub curve: ScoringCurve,
    pub features: Vec<Feature<CellProperties>>,
}

/// `all` or a single quality.
pub fn parse_qualities(s: &str) -> Result<Vec<Quality>, AppError> {
    if s.trim().eq_ignore_ascii_case("all") {
        return Ok(Quality::ALL.to_vec());
    }
    s.parse::<Quality>()
        .map(|q| vec![q])
        .map_err(|_| AppError::new("BAD_QUALITY", format!("unknown quality {s:?}")))
}

pub fn cells_response(
    graph: &LocationGraph,
    fingerprint: &str,
    fields: &FieldSet,
    curve: ScoringCurve,
    qualities: &[Quality],
) -> CellsResponse {
    let pick = |q: Quality, cell: usize| {
        qualities.contains(&q).then(|| {
            let f = fields.get(q);
            CellQuality {
                score: f.raw[cell],
                prob: f.prob[cell],
                rank: f.rank[cell],
            }
        })
    };
    let features = graph
        .cells
        .iter()
        .map(|c| {
            let ring = graph.grid.tile_ring(c.id).iter().map(|&(lat, lon)| [lon, lat]).collect();
            Feature::new(
                Geometry::Polygon { coordinates: vec![ring] },
                CellProperties {
                    cell: c.id,
                    row: c.row,
                    col: c.col,
                    beauty: pick(Quality::Beauty, c.id),
                    quiet: pick(Quality::Quiet, c.id),
                    happy: pick(Quality::Happy, c.id),
                },
            )
        })
        .collect();
    CellsResponse {
        kind: "FeatureCollection",
        graph_fingerprint: fingerprint.to_string(),
        curve,
        features,
    }
}
