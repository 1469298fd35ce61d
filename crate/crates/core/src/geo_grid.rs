//! Grid-cell location graph over a city bounding box.
//!
//! The bounding box is projected to local meters with an equirectangular
//! approximation, tiled into square cells and turned into a graph where every
//! cell links to its eight geographic neighbours. Boundary cells, which have
//! fewer than eight neighbours, are linked to the nearest other boundary cells
//! until they reach eight links; the reverse links are then added so the graph
//! stays symmetric.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Mean Earth radius used by the local projection.
pub const EARTH_RADIUS_M: f64 = 6_371_000.0;

/// Default cell side in meters.
pub const DEFAULT_CELL_SIZE_M: f64 = 200.0;

/// Walking speed used to turn meters into minutes (200 m in 2.5 min).
pub const WALK_SPEED_M_PER_MIN: f64 = 80.0;

/// Target degree of every node in the location graph.
pub const TARGET_DEGREE: usize = 8;

// Slack, in cell units, applied when snapping points and tile counts.
const SNAP_EPS: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GridError {
    #[error("invalid bounding box: {0}")]
    InvalidBbox(String),
    #[error("invalid cell size {0} m")]
    InvalidCellSize(f64),
    #[error("point ({lat}, {lon}) is outside the bounding box")]
    OutOfBounds { lat: f64, lon: f64 },
    #[error("graph needs at least 9 cells, grid has {0}")]
    GraphTooSmall(usize),
    #[error("unknown cell id {0}")]
    UnknownCell(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub min_lat: f64,
    pub min_lon: f64,
    pub max_lat: f64,
    pub max_lon: f64,
}

impl BoundingBox {
    pub fn new(min_lat: f64, min_lon: f64, max_lat: f64, max_lon: f64) -> Result<Self, GridError> {
        let bbox = Self {
            min_lat,
            min_lon,
            max_lat,
            max_lon,
        };
        bbox.validate()?;
        Ok(bbox)
    }

    /// Parses `minlat,minlon,maxlat,maxlon`.
    pub fn parse(s: &str) -> Result<Self, GridError> {
        let parts: Vec<f64> = s
            .split(',')
            .map(|p| p.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|e| GridError::InvalidBbox(format!("{s:?}: {e}")))?;
        match parts.as_slice() {
            [a, b, c, d] => Self::new(*a, *b, *c, *d),
            _ => Err(GridError::InvalidBbox(format!(
                "{s:?}: expected minlat,minlon,maxlat,maxlon"
            ))),
        }
    }

    pub fn validate(&self) -> Result<(), GridError> {
        let vals = [self.min_lat, self.min_lon, self.max_lat, self.max_lon];
        if vals.iter().any(|v| !v.is_finite()) {
            return Err(GridError::InvalidBbox("non-finite coordinate".into()));
        }
        if self.min_lat < -90.0 || self.max_lat > 90.0 {
            return Err(GridError::InvalidBbox("latitude out of range".into()));
        }
        if self.min_lat >= self.max_lat || self.min_lon >= self.max_lon {
            return Err(GridError::InvalidBbox("zero or negative area".into()));
        }
        if self.max_lat - self.min_lat >= 2.0 || self.max_lon - self.min_lon >= 2.0 {
            return Err(GridError::InvalidBbox("span must be below 2 degrees".into()));
        }
        Ok(())
    }

    pub fn contains(&self, lat: f64, lon: f64) -> bool {
        lat >= self.min_lat && lat <= self.max_lat && lon >= self.min_lon && lon <= self.max_lon
    }

    fn cos_mid_lat(&self) -> f64 {
        (0.5 * (self.min_lat + self.max_lat)).to_radians().cos()
    }

    /// Projected `(width, height)` in meters.
    pub fn extent_m(&self) -> (f64, f64) {
        project_unchecked(self, self.max_lat, self.max_lon)
    }
}

fn project_unchecked(bbox: &BoundingBox, lat: f64, lon: f64) -> (f64, f64) {
    let k = EARTH_RADIUS_M * std::f64::consts::PI / 180.0;
    let x = k * (lon - bbox.min_lon) * bbox.cos_mid_lat();
    let y = k * (lat - bbox.min_lat);
    (x, y)
}

/// Equirectangular projection of a point inside `bbox` to local meters,
/// with `(min_lat, min_lon)` at the origin.
pub fn project(bbox: &BoundingBox, lat: f64, lon: f64) -> Result<(f64, f64), GridError> {
    if !bbox.contains(lat, lon) {
        return Err(GridError::OutOfBounds { lat, lon });
    }
    Ok(project_unchecked(bbox, lat, lon))
}

/// Inverse of [`project`]. Does not check bounds.
pub fn unproject(bbox: &BoundingBox, x_m: f64, y_m: f64) -> (f64, f64) {
    let k = EARTH_RADIUS_M * std::f64::consts::PI / 180.0;
    let lat = bbox.min_lat + y_m / k;
    let lon = bbox.min_lon + x_m / (k * bbox.cos_mid_lat());
    (lat, lon)
}

/// Tiling parameters. Tiles are laid out row-major with row 0 at the
/// southern edge; the tiling is centered on the bounding box so that every
/// centroid falls inside it even when the extent is not a multiple of the
/// cell size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub bbox: BoundingBox,
    pub cell_size_m: f64,
    pub rows: usize,
    pub cols: usize,
    /// Projected x of the western edge of column 0 (zero or negative).
    pub origin_x_m: f64,
    /// Projected y of the southern edge of row 0 (zero or negative).
    pub origin_y_m: f64,
}

impl GridSpec {
    pub fn n_cells(&self) -> usize {
        self.rows * self.cols
    }

    pub fn cell_id(&self, row: usize, col: usize) -> usize {
        row * self.cols + col
    }

    pub fn row_col(&self, id: usize) -> (usize, usize) {
        (id / self.cols, id % self.cols)
    }

    fn centroid_m(&self, row: usize, col: usize) -> (f64, f64) {
        (
            self.origin_x_m + (col as f64 + 0.5) * self.cell_size_m,
            self.origin_y_m + (row as f64 + 0.5) * self.cell_size_m,
        )
    }

    /// Tile corners `(lat, lon)` counter-clockwise from the south-west,
    /// closed (first point repeated).
    pub fn tile_ring(&self, id: usize) -> [(f64, f64); 5] {
        let (row, col) = self.row_col(id);
        let x0 = self.origin_x_m + col as f64 * self.cell_size_m;
        let y0 = self.origin_y_m + row as f64 * self.cell_size_m;
        let x1 = x0 + self.cell_size_m;
        let y1 = y0 + self.cell_size_m;
        let sw = unproject(&self.bbox, x0, y0);
        [
            sw,
            unproject(&self.bbox, x1, y0),
            unproject(&self.bbox, x1, y1),
            unproject(&self.bbox, x0, y1),
            sw,
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub id: usize,
    pub row: usize,
    pub col: usize,
    pub lat: f64,
    pub lon: f64,
    pub x_m: f64,
    pub y_m: f64,
}

/// Tiles `bbox` into square cells of `cell_size_m`.
pub fn build_grid(bbox: BoundingBox, cell_size_m: f64) -> Result<(GridSpec, Vec<Cell>), GridError> {
    bbox.validate()?;
    if !(cell_size_m.is_finite() && cell_size_m > 0.0) {
        return Err(GridError::InvalidCellSize(cell_size_m));
    }
    let (width, height) = bbox.extent_m();
    let tiles = |extent: f64| ((extent / cell_size_m - SNAP_EPS).ceil() as usize).max(1);
    let cols = tiles(width);
    let rows = tiles(height);
    let grid = GridSpec {
        bbox,
        cell_size_m,
        rows,
        cols,
        origin_x_m: 0.5 * (width - cols as f64 * cell_size_m),
        origin_y_m: 0.5 * (height - rows as f64 * cell_size_m),
    };
    let cells = (0..rows)
        .flat_map(|row| (0..cols).map(move |col| (row, col)))
        .map(|(row, col)| {
            let (x_m, y_m) = grid.centroid_m(row, col);
            let (lat, lon) = unproject(&bbox, x_m, y_m);
            Cell {
                id: grid.cell_id(row, col),
                row,
                col,
                lat,
                lon,
                x_m,
                y_m,
            }
        })
        .collect();
    Ok((grid, cells))
}

/// Cells plus symmetric weighted adjacency. Immutable once built.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocationGraph {
    pub grid: GridSpec,
    pub cells: Vec<Cell>,
    /// Per cell, `(neighbor_id, edge_length_m)` sorted by neighbor id.
    pub adjacency: Vec<Vec<(usize, f64)>>,
}

/// Builds the location graph over a tiled grid.
///
/// Every cell links to its geometric neighbours (edge length = centroid
/// distance). Boundary cells, having fewer than eight, are topped up with
/// the closest other boundary cells, ties by ascending id, and every link is
/// then mirrored.
pub fn build_graph(grid: GridSpec, cells: Vec<Cell>) -> Result<LocationGraph, GridError> {
    let n = grid.n_cells();
    if n < 9 {
        return Err(GridError::GraphTooSmall(n));
    }
    debug_assert_eq!(cells.len(), n);

    let links = directed_links(&grid);

    // mirror augmented links
    let mut sym: Vec<Vec<usize>> = links.clone();
    for (u, out) in links.iter().enumerate() {
        for &v in out {
            if !sym[v].contains(&u) {
                sym[v].push(u);
            }
        }
    }

    let adjacency = sym
        .into_iter()
        .enumerate()
        .map(|(u, mut out)| {
            out.sort_unstable();
            out.into_iter()
                .map(|v| (v, grid.cell_size_m * (sq_grid_dist(&grid, u, v) as f64).sqrt()))
                .collect()
        })
        .collect();

    Ok(LocationGraph {
        grid,
        cells,
        adjacency,
    })
}

fn sq_grid_dist(grid: &GridSpec, a: usize, b: usize) -> u64 {
    let (ra, ca) = grid.row_col(a);
    let (rb, cb) = grid.row_col(b);
    let dr = ra.abs_diff(rb) as u64;
    let dc = ca.abs_diff(cb) as u64;
    dr * dr + dc * dc
}

fn geometric_neighbors(grid: &GridSpec, id: usize) -> Vec<usize> {
    let (row, col) = grid.row_col(id);
    let mut out = Vec::with_capacity(TARGET_DEGREE);
    for r in row.saturating_sub(1)..=(row + 1).min(grid.rows - 1) {
        for c in col.saturating_sub(1)..=(col + 1).min(grid.cols - 1) {
            if (r, c) != (row, col) {
                out.push(grid.cell_id(r, c));
            }
        }
    }
    out
}

/// Outgoing links before mirroring. Boundary cells are topped up from the
/// other boundary cells only, so mirrored links never land on an interior
/// cell and interior cells keep exactly eight neighbours.
fn directed_links(grid: &GridSpec) -> Vec<Vec<usize>> {
    let n = grid.n_cells();
    let geometric: Vec<Vec<usize>> = (0..n).map(|id| geometric_neighbors(grid, id)).collect();
    let boundary: Vec<usize> = (0..n).filter(|&id| geometric[id].len() < TARGET_DEGREE).collect();
    geometric
        .iter()
        .enumerate()
        .map(|(id, geo)| {
            let mut out = geo.clone();
            if out.len() < TARGET_DEGREE {
                let mut extra: Vec<usize> = boundary
                    .iter()
                    .copied()
                    .filter(|&v| v != id && !out.contains(&v))
                    .collect();
                extra.sort_by_key(|&v| (sq_grid_dist(grid, id, v), v));
                let need = TARGET_DEGREE - out.len();
                out.extend(extra.into_iter().take(need));
            }
            out
        })
        .collect()
}

impl LocationGraph {
    /// Grid plus graph in one call.
    pub fn build(bbox: BoundingBox, cell_size_m: f64) -> Result<Self, GridError> {
        let (grid, cells) = build_grid(bbox, cell_size_m)?;
        build_graph(grid, cells)
    }

    pub fn n_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn neighbors(&self, id: usize) -> &[(usize, f64)] {
        &self.adjacency[id]
    }

    pub fn check_cell(&self, id: usize) -> Result<(), GridError> {
        if id < self.n_cells() {
            Ok(())
        } else {
            Err(GridError::UnknownCell(id))
        }
    }

    /// Length of the edge `u -> v`, if present.
    pub fn edge_length(&self, u: usize, v: usize) -> Option<f64> {
        self.adjacency[u]
            .binary_search_by_key(&v, |&(w, _)| w)
            .ok()
            .map(|i| self.adjacency[u][i].1)
    }

    /// Cell whose tile contains the point. Points on a tile boundary go to
    /// the higher row/column.
    pub fn cell_of(&self, lat: f64, lon: f64) -> Result<usize, GridError> {
        cell_of(self, lat, lon)
    }
}

pub fn cell_of(graph: &LocationGraph, lat: f64, lon: f64) -> Result<usize, GridError> {
    let grid = &graph.grid;
    let (x, y) = project(&grid.bbox, lat, lon)?;
    let index = |v: f64, origin: f64, n: usize| -> usize {
        let t = ((v - origin) / grid.cell_size_m + SNAP_EPS).floor();
        (t.max(0.0) as usize).min(n - 1)
    };
    Ok(grid.cell_id(index(y, grid.origin_y_m, grid.rows), index(x, grid.origin_x_m, grid.cols)))
}
