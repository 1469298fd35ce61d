//! Measuring recommended routes against the shortest ones.
//!
//! For every pair of landmarks the shortest path and the three recommended
//! paths are summarized by the mean raw score, probability and rank of each
//! quality along them. From these come the improvement matrix (rows: the
//! quality a route was recommended for, columns: the quality measured), the
//! length overhead binned by distance, exploration curves over `m`, and the
//! pairwise correlation of the quality fields.

use std::io::Read;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};
use thiserror::Error;

use crate::geo_grid::{GridError, LocationGraph, WALK_SPEED_M_PER_MIN};
use crate::perception::{FieldSet, PerceptionError, Quality, QualityField};
use crate::route_engine::{average_rank, ExplorationPolicy, RouteError, RouteVariant, RoutingGraph};

/// Width of the distance bins of the length trade-off curve.
pub const DISTANCE_BIN_KM: f64 = 0.5;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error("landmarks: {0}")]
    Landmark(String),
    #[error("fields cover {got} cells, graph has {expected}")]
    FieldMismatch { expected: usize, got: usize },
    #[error("exploration curves need the marginal-value stop disabled")]
    MvtEnabled,
    #[error("correlation: {0}")]
    Correlation(String),
    #[error(transparent)]
    Route(#[from] RouteError),
    #[error(transparent)]
    Perception(#[from] PerceptionError),
    #[error(transparent)]
    Grid(#[from] GridError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Landmark {
    pub name: String,
    pub lat: f64,
    pub lon: f64,
    pub cell: usize,
}

/// Named cells used as route endpoints, all in distinct cells.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LandmarkSet {
    pub landmarks: Vec<Landmark>,
}

#[derive(Deserialize)]
struct LandmarkRow {
    name: String,
    lat: f64,
    lon: f64,
}

/// Reads `name,lat,lon` rows with a header.
pub fn read_landmarks<R: Read>(reader: R) -> Result<Vec<(String, f64, f64)>, EvalError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    rdr.deserialize::<LandmarkRow>()
        .map(|r| {
            r.map(|r| (r.name, r.lat, r.lon))
                .map_err(|e| EvalError::Landmark(e.to_string()))
        })
        .collect()
}

impl LandmarkSet {
    /// Snaps named points to cells.
    pub fn snap(graph: &LocationGraph, points: &[(String, f64, f64)]) -> Result<Self, EvalError> {
        let mut landmarks: Vec<Landmark> = Vec::with_capacity(points.len());
        for (name, lat, lon) in points {
            let cell = graph
                .cell_of(*lat, *lon)
                .map_err(|e| EvalError::Landmark(format!("{name}: {e}")))?;
            if let Some(other) = landmarks.iter().find(|l| l.cell == cell) {
                return Err(EvalError::Landmark(format!(
                    "{name} and {} fall in the same cell {cell}",
                    other.name
                )));
            }
            landmarks.push(Landmark {
                name: name.clone(),
                lat: *lat,
                lon: *lon,
                cell,
            });
        }
        if landmarks.len() < 2 {
            return Err(EvalError::Landmark("need at least two landmarks".into()));
        }
        Ok(Self { landmarks })
    }

    pub fn len(&self) -> usize {
        self.landmarks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.landmarks.is_empty()
    }

    /// Unordered pairs as landmark indices, `i < j`.
    pub fn pairs(&self) -> Vec<(usize, usize)> {
        let n = self.landmarks.len();
        (0..n).flat_map(|i| ((i + 1)..n).map(move |j| (i, j))).collect()
    }
}

/// Per-quality averages along one path, repeats counted per visit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathSummary {
    pub cells: Vec<usize>,
    pub length_m: f64,
    pub walk_min: f64,
    /// Indexed like [`Quality::ALL`].
    pub mean_score: [f64; 3],
    pub mean_prob: [f64; 3],
    pub avg_rank: [f64; 3],
    pub paths_explored: usize,
}

pub fn summarize_path(cells: &[usize], length_m: f64, fields: &FieldSet, paths_explored: usize) -> PathSummary {
    let mean = |v: &[f64]| cells.iter().map(|&c| v[c]).sum::<f64>() / cells.len() as f64;
    let per = |f: &dyn Fn(&QualityField) -> f64| Quality::ALL.map(|q| f(fields.get(q)));
    PathSummary {
        cells: cells.to_vec(),
        length_m,
        walk_min: length_m / WALK_SPEED_M_PER_MIN,
        mean_score: per(&|f| mean(&f.raw)),
        mean_prob: per(&|f| mean(&f.prob)),
        avg_rank: per(&|f| average_rank(cells, &f.rank)),
        paths_explored,
    }
}

/// Shortest and recommended paths for one landmark pair. Endpoints are
/// ordered by cell id so that a pair gives the same record either way round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairRecord {
    pub from: String,
    pub to: String,
    pub from_cell: usize,
    pub to_cell: usize,
    pub shortest: PathSummary,
    /// Indexed like [`Quality::ALL`].
    pub recommended: [PathSummary; 3],
}

/// Score and probability gains are relative increases of the path mean;
/// rank gains are relative decreases (a lower rank is better).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Measure {
    Score,
    Prob,
    Rank,
}

impl PairRecord {
    /// Percent improvement of column quality `col` on the route recommended
    /// for `row`; `None` when the shortest path's mean is zero.
    pub fn delta_pct(&self, row: Quality, col: Quality, measure: Measure) -> Option<f64> {
        let rec = &self.recommended[row.index()];
        let c = col.index();
        let (base, new) = match measure {
            Measure::Score => (self.shortest.mean_score[c], rec.mean_score[c]),
            Measure::Prob => (self.shortest.mean_prob[c], rec.mean_prob[c]),
            Measure::Rank => (self.shortest.avg_rank[c], rec.avg_rank[c]),
        };
        if base == 0.0 {
            return None;
        }
        let gain = if measure == Measure::Rank { base - new } else { new - base };
        Some(100.0 * gain / base)
    }

    pub fn delta_length_pct(&self, row: Quality) -> f64 {
        pct_over(self.shortest.length_m, self.recommended[row.index()].length_m)
    }
}

fn pct_over(base: f64, new: f64) -> f64 {
    if base == 0.0 {
        0.0
    } else {
        100.0 * (new - base) / base
    }
}

/// 3x3 means over pairs; rows are the recommended-for quality, columns the
/// measured quality.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    pub values: [[Option<f64>; 3]; 3],
    /// Pairs left out of each entry because the shortest-path mean was zero.
    pub excluded: [[usize; 3]; 3],
}

impl Matrix {
    pub fn diagonal(&self) -> [Option<f64>; 3] {
        [self.values[0][0], self.values[1][1], self.values[2][2]]
    }

    fn from_pairs(pairs: &[PairRecord], measure: Measure) -> Self {
        let mut values = [[None; 3]; 3];
        let mut excluded = [[0; 3]; 3];
        for row in Quality::ALL {
            for col in Quality::ALL {
                let deltas: Vec<f64> = pairs.iter().filter_map(|p| p.delta_pct(row, col, measure)).collect();
                excluded[row.index()][col.index()] = pairs.len() - deltas.len();
                if !deltas.is_empty() {
                    values[row.index()][col.index()] = Some(deltas.iter().sum::<f64>() / deltas.len() as f64);
                }
            }
        }
        Self { values, excluded }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImprovementReport {
    pub qualities: [Quality; 3],
    pub score: Matrix,
    pub prob: Matrix,
    pub rank: Matrix,
    /// Per recommended-for quality.
    pub mean_delta_length_pct: [f64; 3],
    pub mean_extra_minutes: [f64; 3],
    /// Pairs whose recommended route ranks worse than the shortest path in
    /// its own quality.
    pub dominance_violations: usize,
    pub cell_size_m: f64,
    pub pairs: Vec<PairRecord>,
}

impl ImprovementReport {
    pub fn from_pairs(pairs: Vec<PairRecord>, cell_size_m: f64) -> Self {
        let n = pairs.len().max(1) as f64;
        let mut mean_delta_length_pct = [0.0; 3];
        let mut mean_extra_minutes = [0.0; 3];
        let mut dominance_violations = 0;
        for q in Quality::ALL {
            let i = q.index();
            mean_delta_length_pct[i] = pairs.iter().map(|p| p.delta_length_pct(q)).sum::<f64>() / n;
            mean_extra_minutes[i] = pairs
                .iter()
                .map(|p| (p.recommended[i].length_m - p.shortest.length_m) / WALK_SPEED_M_PER_MIN)
                .sum::<f64>()
                / n;
            dominance_violations += pairs
                .iter()
                .filter(|p| p.recommended[i].avg_rank[i] > p.shortest.avg_rank[i])
                .count();
        }
        Self {
            qualities: Quality::ALL,
            score: Matrix::from_pairs(&pairs, Measure::Score),
            prob: Matrix::from_pairs(&pairs, Measure::Prob),
            rank: Matrix::from_pairs(&pairs, Measure::Rank),
            mean_delta_length_pct,
            mean_extra_minutes,
            dominance_violations,
            cell_size_m,
            pairs,
        }
    }
}

fn check_fields(routing: &RoutingGraph, fields: &FieldSet) -> Result<(), EvalError> {
    fields.validate()?;
    let expected = routing.graph().n_cells();
    if fields.n_cells() != expected {
        return Err(EvalError::FieldMismatch {
            expected,
            got: fields.n_cells(),
        });
    }
    Ok(())
}

/// Shortest and recommended paths between two cells, endpoints ordered by
/// cell id.
pub fn evaluate_pair(
    routing: &RoutingGraph,
    fields: &FieldSet,
    a: (&str, usize),
    b: (&str, usize),
    policy: &ExplorationPolicy,
) -> Result<PairRecord, EvalError> {
    let (from, to) = if a.1 <= b.1 { (a, b) } else { (b, a) };
    let shortest = routing.shortest_path(from.1, to.1)?;
    let recommended = Quality::ALL.try_map_compat(|q| -> Result<PathSummary, EvalError> {
        let plan = routing.best_pleasant_path(&fields.get(q).rank, RouteVariant::from(q), from.1, to.1, policy)?;
        Ok(summarize_path(&plan.path.cells, plan.path.length_m, fields, plan.paths_explored))
    })?;
    Ok(PairRecord {
        from: from.0.to_string(),
        to: to.0.to_string(),
        from_cell: from.1,
        to_cell: to.1,
        shortest: summarize_path(&shortest.cells, shortest.length_m, fields, 1),
        recommended,
    })
}

// `[T; 3]::try_map` is unstable.
trait TryMapCompat<T> {
    fn try_map_compat<U, E>(self, f: impl FnMut(T) -> Result<U, E>) -> Result<[U; 3], E>;
}

impl<T: Copy> TryMapCompat<T> for [T; 3] {
    fn try_map_compat<U, E>(self, mut f: impl FnMut(T) -> Result<U, E>) -> Result<[U; 3], E> {
        Ok([f(self[0])?, f(self[1])?, f(self[2])?])
    }
}

/// Evaluates every unordered landmark pair.
pub fn improvement_matrix(
    routing: &RoutingGraph,
    fields: &FieldSet,
    landmarks: &LandmarkSet,
    policy: &ExplorationPolicy,
) -> Result<ImprovementReport, EvalError> {
    check_fields(routing, fields)?;
    policy.validate()?;
    let pairs = landmarks
        .pairs()
        .into_iter()
        .map(|(i, j)| {
            let (a, b) = (&landmarks.landmarks[i], &landmarks.landmarks[j]);
            evaluate_pair(routing, fields, (&a.name, a.cell), (&b.name, b.cell), policy)
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(ImprovementReport::from_pairs(pairs, routing.graph().grid.cell_size_m))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LengthSample {
    pub shortest_m: f64,
    pub recommended_m: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TradeoffBin {
    pub lo_km: f64,
    pub hi_km: f64,
    pub n: usize,
    pub mean_delta_length_pct: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LengthTradeoff {
    pub n: usize,
    pub mean_delta_length_pct: f64,
    pub mean_extra_m: f64,
    pub mean_extra_cells: f64,
    pub mean_extra_minutes: f64,
    /// Non-empty bins of shortest-path length.
    pub bins: Vec<TradeoffBin>,
    /// Bin centers in km.
    pub curve_x_km: Vec<f64>,
    pub curve_y_pct: Vec<f64>,
}

/// Length overhead over samples with a nonzero shortest length.
pub fn tradeoff_from_samples(samples: &[LengthSample], cell_size_m: f64) -> LengthTradeoff {
    let samples: Vec<&LengthSample> = samples.iter().filter(|s| s.shortest_m > 0.0).collect();
    let n = samples.len();
    let denom = n.max(1) as f64;
    let pct = |s: &LengthSample| pct_over(s.shortest_m, s.recommended_m);
    let mean_delta_length_pct = samples.iter().map(|s| pct(s)).sum::<f64>() / denom;
    let mean_extra_m = samples.iter().map(|s| s.recommended_m - s.shortest_m).sum::<f64>() / denom;

    let mut bins: Vec<(usize, usize, f64)> = Vec::new();
    for s in &samples {
        let b = (s.shortest_m / 1000.0 / DISTANCE_BIN_KM).floor() as usize;
        match bins.iter_mut().find(|e| e.0 == b) {
            Some(e) => {
                e.1 += 1;
                e.2 += pct(s);
            }
            None => bins.push((b, 1, pct(s))),
        }
    }
    bins.sort_by_key(|e| e.0);
    let bins: Vec<TradeoffBin> = bins
        .into_iter()
        .map(|(b, count, sum)| TradeoffBin {
            lo_km: b as f64 * DISTANCE_BIN_KM,
            hi_km: (b + 1) as f64 * DISTANCE_BIN_KM,
            n: count,
            mean_delta_length_pct: sum / count as f64,
        })
        .collect();
    LengthTradeoff {
        n,
        mean_delta_length_pct,
        mean_extra_m,
        mean_extra_cells: mean_extra_m / cell_size_m,
        mean_extra_minutes: mean_extra_m / WALK_SPEED_M_PER_MIN,
        curve_x_km: bins.iter().map(|b| 0.5 * (b.lo_km + b.hi_km)).collect(),
        curve_y_pct: bins.iter().map(|b| b.mean_delta_length_pct).collect(),
        bins,
    }
}

/// Length overhead pooled over every pair and recommended quality.
pub fn length_tradeoff(report: &ImprovementReport) -> LengthTradeoff {
    let samples: Vec<LengthSample> = report
        .pairs
        .iter()
        .flat_map(|p| {
            p.recommended.iter().map(|r| LengthSample {
                shortest_m: p.shortest.length_m,
                recommended_m: r.length_m,
            })
        })
        .collect();
    tradeoff_from_samples(&samples, report.cell_size_m)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Correlation {
    pub a: Quality,
    pub b: Quality,
    pub n: usize,
    /// `None` when either field has zero variance.
    pub r: Option<f64>,
    pub p_value: Option<f64>,
}

/// Pearson r with a two-sided p-value from Student's t on `n - 2` degrees
/// of freedom. `None` when either series is constant.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<Option<(f64, f64)>, EvalError> {
    if x.len() != y.len() {
        return Err(EvalError::Correlation(format!("lengths {} and {} differ", x.len(), y.len())));
    }
    let n = x.len();
    if n < 3 {
        return Err(EvalError::Correlation(format!("need at least 3 cells, got {n}")));
    }
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Ok(None);
    }
    let r = (sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0);
    let df = nf - 2.0;
    let p = if r.abs() == 1.0 {
        0.0
    } else {
        let t = r * (df / (1.0 - r * r)).sqrt();
        let dist = StudentsT::new(0.0, 1.0, df).map_err(|e| EvalError::Correlation(e.to_string()))?;
        (2.0 * (1.0 - dist.cdf(t.abs()))).clamp(0.0, 1.0)
    };
    Ok(Some((r, p)))
}

/// Correlation of raw scores across cells for beauty-quiet, beauty-happy and
/// quiet-happy.
pub fn quality_correlations(fields: &FieldSet) -> Result<Vec<Correlation>, EvalError> {
    fields.validate()?;
    let combos = [
        (Quality::Beauty, Quality::Quiet),
        (Quality::Beauty, Quality::Happy),
        (Quality::Quiet, Quality::Happy),
    ];
    combos
        .into_iter()
        .map(|(a, b)| {
            let res = pearson(&fields.get(a).raw, &fields.get(b).raw)?;
            Ok(Correlation {
                a,
                b,
                n: fields.n_cells(),
                r: res.map(|v| v.0),
                p_value: res.map(|v| v.1),
            })
        })
        .collect()
}

/// 1, 2, 5, 10, 20, 50, ... up to `m_max`, which is always included.
pub fn m_grid(m_max: usize) -> Vec<usize> {
    let mut out = Vec::new();
    let mut decade = 1usize;
    'outer: loop {
        for step in [1, 2, 5] {
            let m = decade.saturating_mul(step);
            if m > m_max {
                break 'outer;
            }
            out.push(m);
        }
        decade = decade.saturating_mul(10);
    }
    if out.last() != Some(&m_max) && m_max > 0 {
        out.push(m_max);
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairCurve {
    pub from_cell: usize,
    pub to_cell: usize,
    /// Rank of the first walk minus the best rank among the first `m`.
    pub delta_rank: Vec<f64>,
    /// Length overhead of that best walk over the first walk, percent.
    pub delta_length_pct: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExplorationCurve {
    pub quality: Quality,
    pub m: Vec<usize>,
    pub mean_delta_rank: Vec<f64>,
    pub mean_delta_length_pct: Vec<f64>,
    pub per_pair: Vec<PairCurve>,
}

/// Best-rank improvement and length overhead as a function of the number of
/// walks read, for a fixed sweep of `m` up to `policy.m_max`.
pub fn exploration_curve(
    routing: &RoutingGraph,
    field: &QualityField,
    pairs: &[(usize, usize)],
    policy: &ExplorationPolicy,
) -> Result<ExplorationCurve, EvalError> {
    if policy.mvt_enabled {
        return Err(EvalError::MvtEnabled);
    }
    let ms = m_grid(policy.m_max);
    let mut per_pair = Vec::with_capacity(pairs.len());
    for &(a, b) in pairs {
        let (s, d) = (a.min(b), a.max(b));
        let mut ex = routing.explorer(&field.rank, s, d, policy.simple_paths_only)?;
        ex.advance_to(1);
        let (Some(r1), Some(l1)) = (ex.best_avg_rank(), ex.best_length_m()) else {
            return Err(RouteError::Unreachable { from: s, to: d }.into());
        };
        let mut curve = PairCurve {
            from_cell: s,
            to_cell: d,
            delta_rank: Vec::with_capacity(ms.len()),
            delta_length_pct: Vec::with_capacity(ms.len()),
        };
        for &m in &ms {
            ex.advance_to(m);
            curve.delta_rank.push(r1 - ex.best_avg_rank().expect("nonempty"));
            curve.delta_length_pct.push(pct_over(l1, ex.best_length_m().expect("nonempty")));
        }
        per_pair.push(curve);
    }
    let n = per_pair.len().max(1) as f64;
    let mean_at = |i: usize, f: fn(&PairCurve) -> &Vec<f64>| per_pair.iter().map(|c| f(c)[i]).sum::<f64>() / n;
    Ok(ExplorationCurve {
        quality: field.quality,
        mean_delta_rank: (0..ms.len()).map(|i| mean_at(i, |c| &c.delta_rank)).collect(),
        mean_delta_length_pct: (0..ms.len()).map(|i| mean_at(i, |c| &c.delta_length_pct)).collect(),
        m: ms,
        per_pair,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geo_grid::{unproject, BoundingBox};
    use crate::perception::ScoringCurve;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn graph(w: f64, h: f64) -> LocationGraph {
        let probe = BoundingBox::new(51.5, -0.1, 51.6, 0.0).unwrap();
        let (lat, lon) = unproject(&probe, w, h);
        LocationGraph::build(BoundingBox::new(51.5, -0.1, lat, lon).unwrap(), 200.0).unwrap()
    }

    fn uniform(n: usize) -> FieldSet {
        let f = |q| QualityField::from_raw(q, vec![0.5; n], ScoringCurve::Cubic).unwrap();
        FieldSet::new(f(Quality::Beauty), f(Quality::Quiet), f(Quality::Happy)).unwrap()
    }

    fn landmarks(g: &LocationGraph, cells: &[usize]) -> LandmarkSet {
        let pts: Vec<(String, f64, f64)> = cells
            .iter()
            .map(|&c| (format!("c{c}"), g.cells[c].lat, g.cells[c].lon))
            .collect();
        LandmarkSet::snap(g, &pts).unwrap()
    }

    #[test]
    fn uniform_fields_give_zero_matrix() {
        let g = graph(1000.0, 1000.0);
        let r = RoutingGraph::new(&g);
        let report = improvement_matrix(
            &r,
            &uniform(g.n_cells()),
            &landmarks(&g, &[0, 4, 12, 20, 24]),
            &ExplorationPolicy::default(),
        )
        .unwrap();
        assert_eq!(report.pairs.len(), 10);
        // ranks still differ by the id tie rule, so only scores and
        // probabilities are flat along every path
        for m in [&report.score, &report.prob] {
            for row in m.values {
                for v in row {
                    assert_eq!(v, Some(0.0));
                }
            }
        }
        assert_eq!(report.dominance_violations, 0);
        let same: Vec<LengthSample> = report
            .pairs
            .iter()
            .map(|p| LengthSample {
                shortest_m: p.shortest.length_m,
                recommended_m: p.shortest.length_m,
            })
            .collect();
        let t = tradeoff_from_samples(&same, 200.0);
        assert_eq!(t.mean_delta_length_pct, 0.0);
        assert_eq!(t.mean_extra_cells, 0.0);
        assert_eq!(t.mean_extra_minutes, 0.0);
        assert!(t.curve_y_pct.iter().all(|&y| y == 0.0));
    }

    #[test]
    fn landmark_count_gives_pair_count() {
        let g = graph(5000.0, 1000.0);
        let cells: Vec<usize> = (0..20).collect();
        assert_eq!(landmarks(&g, &cells).pairs().len(), 190);
    }

    #[test]
    fn landmarks_must_be_distinct_and_inside() {
        let g = graph(1000.0, 1000.0);
        let c = &g.cells[3];
        let pts = vec![("a".to_string(), c.lat, c.lon), ("b".to_string(), c.lat, c.lon)];
        assert!(matches!(LandmarkSet::snap(&g, &pts), Err(EvalError::Landmark(_))));
        let pts = vec![("a".to_string(), c.lat, c.lon), ("far".to_string(), 10.0, 10.0)];
        assert!(LandmarkSet::snap(&g, &pts).is_err());
    }

    #[test]
    fn landmark_csv() {
        let pts = read_landmarks("name,lat,lon\nTate Modern,51.5076,-0.0994\n\"A, B\",51.5,-0.1\n".as_bytes()).unwrap();
        assert_eq!(pts[1].0, "A, B");
        assert!(read_landmarks("name,lat,lon\nx,north,0\n".as_bytes()).is_err());
    }

    #[test]
    fn single_pair_tradeoff_arithmetic() {
        let t = tradeoff_from_samples(
            &[LengthSample {
                shortest_m: 1000.0,
                recommended_m: 1120.0,
            }],
            200.0,
        );
        assert_relative_eq!(t.mean_delta_length_pct, 12.0, epsilon = 1e-12);
        assert_relative_eq!(t.mean_extra_cells, 0.6, epsilon = 1e-12);
        assert_relative_eq!(t.mean_extra_minutes, 1.5, epsilon = 1e-12);
        assert_eq!(t.bins.len(), 1);
        assert_eq!((t.bins[0].lo_km, t.bins[0].hi_km), (1.0, 1.5));
        assert_eq!(t.curve_x_km, vec![1.25]);
    }

    #[test]
    fn bins_are_half_km_wide() {
        let s = |a: f64, b: f64| LengthSample {
            shortest_m: a,
            recommended_m: b,
        };
        let t = tradeoff_from_samples(&[s(400.0, 600.0), s(499.0, 499.0), s(2600.0, 2860.0), s(0.0, 0.0)], 200.0);
        assert_eq!(t.n, 3);
        assert_eq!(t.bins.len(), 2);
        assert_eq!(t.bins[0].n, 2);
        assert_relative_eq!(t.bins[0].mean_delta_length_pct, 25.0);
        assert_eq!((t.bins[1].lo_km, t.bins[1].hi_km), (2.5, 3.0));
        assert_relative_eq!(t.bins[1].mean_delta_length_pct, 10.0, epsilon = 1e-12);
    }

    #[test]
    fn zero_shortest_mean_is_excluded() {
        let g = graph(1000.0, 1000.0);
        let n = g.n_cells();
        let mut fields = uniform(n);
        // beauty is zero everywhere except one cell far from the pair
        let mut raw = vec![0.0; n];
        raw[20] = 1.0;
        fields.set(QualityField::from_raw(Quality::Beauty, raw, ScoringCurve::Linear).unwrap());
        let r = RoutingGraph::new(&g);
        let report = improvement_matrix(&r, &fields, &landmarks(&g, &[0, 4]), &ExplorationPolicy::default()).unwrap();
        assert_eq!(report.score.excluded[1][0], 1);
        assert_eq!(report.score.values[1][0], None);
        assert_eq!(report.score.excluded[1][1], 0);
    }

    #[test]
    fn pair_records_do_not_depend_on_endpoint_order() {
        let g = graph(1400.0, 1000.0);
        let n = g.n_cells();
        let raw: Vec<f64> = (0..n).map(|i| ((i * 37) % 11) as f64 / 10.0).collect();
        let mut fields = uniform(n);
        fields.set(QualityField::from_raw(Quality::Beauty, raw, ScoringCurve::Cubic).unwrap());
        let r = RoutingGraph::new(&g);
        let p = ExplorationPolicy::default();
        let ab = evaluate_pair(&r, &fields, ("a", 3), ("b", 30), &p).unwrap();
        let ba = evaluate_pair(&r, &fields, ("b", 30), ("a", 3), &p).unwrap();
        assert_eq!(ab, ba);
        for q in Quality::ALL {
            assert_eq!(ab.delta_pct(q, q, Measure::Score), ba.delta_pct(q, q, Measure::Score));
        }
    }

    #[test]
    fn correlations_of_self_and_negation() {
        let x: Vec<f64> = (0..30).map(|i| ((i * 7) % 13) as f64 / 13.0).collect();
        let neg: Vec<f64> = x.iter().map(|v| 1.0 - v).collect();
        let (r, p) = pearson(&x, &x).unwrap().unwrap();
        assert_relative_eq!(r, 1.0, epsilon = 1e-12);
        assert_eq!(p, 0.0);
        assert_relative_eq!(pearson(&x, &neg).unwrap().unwrap().0, -1.0, epsilon = 1e-12);
        assert_eq!(pearson(&x, &[0.3; 30]).unwrap(), None);
        assert!(pearson(&x[..2], &x[..2]).is_err());
    }

    #[test]
    fn p_value_matches_t_table() {
        // r = 0.5 with n = 12: t = 0.5 * sqrt(10 / 0.75) = 1.8257, two-sided p = 0.0978
        let x: Vec<f64> = (0..12).map(|i| i as f64).collect();
        let noise = [3.0, -4.0, 1.0, 5.0, -2.0, -6.0, 2.0, 4.0, -3.0, 6.0, -5.0, 0.0];
        let y: Vec<f64> = x.iter().zip(noise).map(|(a, e)| a + e).collect();
        let (r, p) = pearson(&x, &y).unwrap().unwrap();
        let t = r * (10.0 / (1.0 - r * r)).sqrt();
        // independent check by Simpson integration of the t density
        let dens = |u: f64| (1.0 + u * u / 10.0).powf(-5.5);
        let norm = {
            let h = 1e-3;
            let steps = 200_000;
            (0..=steps)
                .map(|i| {
                    let w = if i == 0 || i == steps { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 };
                    w * dens(-100.0 + i as f64 * h)
                })
                .sum::<f64>()
                * h
                / 3.0
        };
        let tail = {
            let steps = 200_000;
            let h = (100.0 - t.abs()) / steps as f64;
            (0..=steps)
                .map(|i| {
                    let w = if i == 0 || i == steps { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 };
                    w * dens(t.abs() + i as f64 * h)
                })
                .sum::<f64>()
                * h
                / 3.0
        };
        assert_relative_eq!(p, 2.0 * tail / norm, epsilon = 1e-6);
    }

    #[test]
    fn grid_of_m() {
        assert_eq!(m_grid(1), vec![1]);
        assert_eq!(m_grid(100), vec![1, 2, 5, 10, 20, 50, 100]);
        assert_eq!(m_grid(300), vec![1, 2, 5, 10, 20, 50, 100, 200, 300]);
    }

    #[test]
    fn exploration_needs_mvt_off() {
        let g = graph(1000.0, 1000.0);
        let r = RoutingGraph::new(&g);
        let f = uniform(g.n_cells());
        let res = exploration_curve(&r, &f.beauty, &[(0, 24)], &ExplorationPolicy::default());
        assert_eq!(res, Err(EvalError::MvtEnabled));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn exploration_curve_is_monotone(seed in any::<u64>()) {
            let g = graph(1000.0, 1000.0);
            let n = g.n_cells();
            let raw: Vec<f64> = (0..n).map(|i| ((seed.wrapping_mul(6364136223846793005).wrapping_add((i as u64).wrapping_mul(1442695040888963407)) >> 33) % 1000) as f64 / 1000.0).collect();
            let field = QualityField::from_raw(Quality::Happy, raw, ScoringCurve::Cubic).unwrap();
            let r = RoutingGraph::new(&g);
            let policy = ExplorationPolicy { m_max: 500, mvt_enabled: false, ..Default::default() };
            let c = exploration_curve(&r, &field, &[(0, 24), (4, 20), (7, 17)], &policy).unwrap();
            prop_assert_eq!(c.m[0], 1);
            for p in &c.per_pair {
                prop_assert_eq!(p.delta_rank[0], 0.0);
                prop_assert_eq!(p.delta_length_pct[0], 0.0);
                for w in p.delta_rank.windows(2) {
                    prop_assert!(w[1] >= w[0]);
                }
            }
        }

        #[test]
        fn correlations_bounded_and_symmetric(x in prop::collection::vec(0.0f64..1.0, 3..40), seed in any::<u64>()) {
            let y: Vec<f64> = x.iter().enumerate().map(|(i, v)| (v * 7.3 + (seed % 97) as f64 * 0.01 + i as f64 * 0.37).fract()).collect();
            let a = pearson(&x, &y).unwrap();
            let b = pearson(&y, &x).unwrap();
            match (a, b) {
                (Some((ra, pa)), Some((rb, pb))) => {
                    prop_assert!((-1.0..=1.0).contains(&ra));
                    prop_assert!((ra - rb).abs() < 1e-12);
                    prop_assert!((pa - pb).abs() < 1e-9);
                    prop_assert!((0.0..=1.0).contains(&pa));
                }
                (None, None) => {}
                other => prop_assert!(false, "{:?}", other),
            }
        }
    }
}
