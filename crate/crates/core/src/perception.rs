//! Per-cell perception scores from pairwise street-scene votes.
//!
//! Votes are aggregated into a win fraction per scene, scenes are mapped onto
//! grid cells (empty cells filled by inverse-distance weighting), and the
//! resulting raw scores are pushed through a scoring curve, normalized so the
//! best cell has probability 1, and ranked best-first.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geo_grid::{project, GridError, LocationGraph};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PerceptionError {
    #[error("zero scored scenes")]
    NoScoredScenes,
    #[error("scene {0} lies outside the bounding box")]
    SceneOutsideBbox(String),
    #[error("raw score {value} of cell {cell} is outside [0, 1]")]
    RawOutOfRange { cell: usize, value: f64 },
    #[error("degenerate field: curve {0} maps every cell to zero")]
    DegenerateField(ScoringCurve),
    #[error("empty field")]
    EmptyField,
    #[error("unknown quality {0:?}")]
    UnknownQuality(String),
    #[error("unknown curve {0:?}")]
    UnknownCurve(String),
    #[error("invalid interpolation parameters: {0}")]
    InvalidIdw(String),
    #[error("field set: {0}")]
    FieldSet(String),
    #[error(transparent)]
    Grid(#[from] GridError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Quality {
    Beauty,
    Quiet,
    Happy,
}

impl Quality {
    pub const ALL: [Quality; 3] = [Quality::Beauty, Quality::Quiet, Quality::Happy];

    /// Position in [`Quality::ALL`].
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Quality::Beauty => "beauty",
            Quality::Quiet => "quiet",
            Quality::Happy => "happy",
        }
    }
}

impl fmt::Display for Quality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Quality {
    type Err = PerceptionError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "beauty" | "beautiful" => Ok(Quality::Beauty),
            "quiet" => Ok(Quality::Quiet),
            "happy" | "happiness" => Ok(Quality::Happy),
            _ => Err(PerceptionError::UnknownQuality(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SceneSource {
    #[serde(alias = "streetview")]
    StreetView,
    Geograph,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scene {
    pub scene_id: String,
    pub lat: f64,
    pub lon: f64,
    pub source: SceneSource,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    #[serde(alias = "A")]
    A,
    #[serde(alias = "B")]
    B,
    /// "Can't Tell" answers.
    #[serde(alias = "Tie", alias = "cant_tell", alias = "CantTell")]
    Tie,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VoteRecord {
    pub quality: Quality,
    pub scene_a: String,
    pub scene_b: String,
    pub outcome: Outcome,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneScore {
    pub scene_id: String,
    pub quality: Quality,
    pub wins: u32,
    pub losses: u32,
    pub ties: u32,
    /// Win fraction; `None` when the scene never won or lost a vote.
    pub score: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Aggregation {
    /// One entry per known scene, in scene order.
    pub scores: Vec<SceneScore>,
    /// Votes for this quality that referenced an unknown scene or paired a
    /// scene with itself.
    pub rejected: usize,
}

impl Aggregation {
    pub fn n_scored(&self) -> usize {
        self.scores.iter().filter(|s| s.score.is_some()).count()
    }
}

/// Win-fraction score per scene for one quality. Ties are counted but left
/// out of the fraction.
pub fn aggregate_votes(votes: &[VoteRecord], quality: Quality, scenes: &[Scene]) -> Aggregation {
    let index: HashMap<&str, usize> = scenes
        .iter()
        .enumerate()
        .map(|(i, s)| (s.scene_id.as_str(), i))
        .collect();
    let mut tally = vec![(0u32, 0u32, 0u32); scenes.len()];
    let mut rejected = 0;
    for vote in votes.iter().filter(|v| v.quality == quality) {
        let (Some(&a), Some(&b)) = (index.get(vote.scene_a.as_str()), index.get(vote.scene_b.as_str()))
        else {
            rejected += 1;
            continue;
        };
        if a == b {
            rejected += 1;
            continue;
        }
        match vote.outcome {
            Outcome::A => {
                tally[a].0 += 1;
                tally[b].1 += 1;
            }
            Outcome::B => {
                tally[b].0 += 1;
                tally[a].1 += 1;
            }
            Outcome::Tie => {
                tally[a].2 += 1;
                tally[b].2 += 1;
            }
        }
    }
    let scores = scenes
        .iter()
        .zip(tally)
        .map(|(scene, (wins, losses, ties))| SceneScore {
            scene_id: scene.scene_id.clone(),
            quality,
            wins,
            losses,
            ties,
            score: (wins + losses > 0).then(|| f64::from(wins) / f64::from(wins + losses)),
        })
        .collect();
    Aggregation { scores, rejected }
}

/// Inverse-distance-weighting parameters for cells without a scene.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IdwParams {
    pub k: usize,
    pub power: f64,
}

impl Default for IdwParams {
    fn default() -> Self {
        Self { k: 3, power: 2.0 }
    }
}

/// Raw per-cell scores: mean of the scene scores inside a cell, IDW of the
/// `k` nearest scored scenes otherwise. With fewer than `k` scored scenes,
/// empty cells take the median scene score.
///
/// `scores` must be aligned with `scenes`.
pub fn scenes_to_cells(
    graph: &LocationGraph,
    scenes: &[Scene],
    scores: &[SceneScore],
    idw: IdwParams,
) -> Result<Vec<f64>, PerceptionError> {
    if idw.k == 0 || !(idw.power.is_finite() && idw.power >= 0.0) {
        return Err(PerceptionError::InvalidIdw(format!("{idw:?}")));
    }
    let bbox = &graph.grid.bbox;
    let mut scored: Vec<((f64, f64), f64)> = Vec::new();
    let n = graph.n_cells();
    let mut sums = vec![(0.0f64, 0usize); n];
    for (scene, s) in scenes.iter().zip(scores) {
        let Some(value) = s.score else { continue };
        let xy = project(bbox, scene.lat, scene.lon)
            .map_err(|_| PerceptionError::SceneOutsideBbox(scene.scene_id.clone()))?;
        let cell = graph.cell_of(scene.lat, scene.lon)?;
        sums[cell].0 += value;
        sums[cell].1 += 1;
        scored.push((xy, value));
    }
    if scored.is_empty() {
        return Err(PerceptionError::NoScoredScenes);
    }

    let fallback = if scored.len() < idw.k {
        let mut values: Vec<f64> = scored.iter().map(|s| s.1).collect();
        values.sort_by(f64::total_cmp);
        Some(median_sorted(&values))
    } else {
        None
    };

    let raw = graph
        .cells
        .iter()
        .zip(&sums)
        .map(|(cell, &(sum, count))| {
            if count > 0 {
                return sum / count as f64;
            }
            if let Some(m) = fallback {
                return m;
            }
            let mut near: Vec<(f64, usize)> = scored
                .iter()
                .enumerate()
                .map(|(i, ((x, y), _))| ((x - cell.x_m).hypot(y - cell.y_m), i))
                .collect();
            near.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            near.truncate(idw.k);
            if let Some(&(d, i)) = near.first() {
                if d == 0.0 {
                    return scored[i].1;
                }
            }
            let (num, den) = near.iter().fold((0.0, 0.0), |(num, den), &(d, i)| {
                let w = d.powf(-idw.power);
                (num + w * scored[i].1, den + w)
            });
            num / den
        })
        .collect();
    Ok(raw)
}

pub(crate) fn median_sorted(values: &[f64]) -> f64 {
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Maps a raw score in `[0, 1]` to an unnormalized visit likelihood.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScoringCurve {
    Linear,
    #[default]
    Cubic,
    Exponential,
    SquareRoot,
    Sigmoid,
}

impl ScoringCurve {
    pub const ALL: [ScoringCurve; 5] = [
        ScoringCurve::Linear,
        ScoringCurve::Cubic,
        ScoringCurve::Exponential,
        ScoringCurve::SquareRoot,
        ScoringCurve::Sigmoid,
    ];

    pub fn apply(self, h: f64) -> f64 {
        match self {
            ScoringCurve::Linear => h,
            ScoringCurve::Cubic => h * h * h,
            ScoringCurve::Exponential => h.exp(),
            ScoringCurve::SquareRoot => h.sqrt(),
            ScoringCurve::Sigmoid => 1.0 / (1.0 + (-h).exp()),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ScoringCurve::Linear => "linear",
            ScoringCurve::Cubic => "cubic",
            ScoringCurve::Exponential => "exponential",
            ScoringCurve::SquareRoot => "square_root",
            ScoringCurve::Sigmoid => "sigmoid",
        }
    }
}

impl fmt::Display for ScoringCurve {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ScoringCurve {
    type Err = PerceptionError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "linear" => Ok(ScoringCurve::Linear),
            "cubic" => Ok(ScoringCurve::Cubic),
            "exponential" | "exp" => Ok(ScoringCurve::Exponential),
            "square_root" | "sqrt" | "squareroot" => Ok(ScoringCurve::SquareRoot),
            "sigmoid" => Ok(ScoringCurve::Sigmoid),
            _ => Err(PerceptionError::UnknownCurve(s.to_string())),
        }
    }
}

/// Applies `curve` to every cell and divides by the maximum. Returns the
/// probabilities and the normalization constant `k = 1 / max f(raw)`.
pub fn score_to_probability(raw: &[f64], curve: ScoringCurve) -> Result<(Vec<f64>, f64), PerceptionError> {
    if raw.is_empty() {
        return Err(PerceptionError::EmptyField);
    }
    if let Some((cell, &value)) = raw
        .iter()
        .enumerate()
        .find(|(_, v)| !(0.0..=1.0).contains(*v))
    {
        return Err(PerceptionError::RawOutOfRange { cell, value });
    }
    let f: Vec<f64> = raw.iter().map(|&h| curve.apply(h)).collect();
    let max = f.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max <= 0.0 {
        return Err(PerceptionError::DegenerateField(curve));
    }
    let k = 1.0 / max;
    // divide rather than multiply by k so the maximum maps to exactly 1
    let prob = f.into_iter().map(|v| v / max).collect();
    Ok((prob, k))
}

/// Rank 1 for the most likely cell; ties by ascending cell id.
pub fn rank_cells(prob: &[f64]) -> Vec<u32> {
    let mut order: Vec<usize> = (0..prob.len()).collect();
    order.sort_by(|&a, &b| prob[b].total_cmp(&prob[a]).then(a.cmp(&b)));
    let mut rank = vec![0u32; prob.len()];
    for (pos, cell) in order.into_iter().enumerate() {
        rank[cell] = pos as u32 + 1;
    }
    rank
}

/// Score, probability and rank of every cell for one quality.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QualityField {
    pub quality: Quality,
    pub curve: ScoringCurve,
    pub k: f64,
    pub raw: Vec<f64>,
    pub prob: Vec<f64>,
    pub rank: Vec<u32>,
}

impl QualityField {
    pub fn from_raw(quality: Quality, raw: Vec<f64>, curve: ScoringCurve) -> Result<Self, PerceptionError> {
        let (prob, k) = score_to_probability(&raw, curve)?;
        let rank = rank_cells(&prob);
        Ok(Self {
            quality,
            curve,
            k,
            raw,
            prob,
            rank,
        })
    }

    /// Same raw scores under a different curve.
    pub fn with_curve(&self, curve: ScoringCurve) -> Result<Self, PerceptionError> {
        if curve == self.curve {
            return Ok(self.clone());
        }
        Self::from_raw(self.quality, self.raw.clone(), curve)
    }

    pub fn n_cells(&self) -> usize {
        self.raw.len()
    }
}

/// One field per quality over the same cells.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldSet {
    pub beauty: QualityField,
    pub quiet: QualityField,
    pub happy: QualityField,
}

impl FieldSet {
    pub fn new(beauty: QualityField, quiet: QualityField, happy: QualityField) -> Result<Self, PerceptionError> {
        let set = Self { beauty, quiet, happy };
        set.validate()?;
        Ok(set)
    }

    pub fn validate(&self) -> Result<(), PerceptionError> {
        let n = self.beauty.n_cells();
        for q in Quality::ALL {
            let f = self.get(q);
            if f.quality != q {
                return Err(PerceptionError::FieldSet(format!("{q} slot holds a {} field", f.quality)));
            }
            if f.n_cells() != n || f.prob.len() != n || f.rank.len() != n {
                return Err(PerceptionError::FieldSet(format!("{q} field has {} cells, expected {n}", f.n_cells())));
            }
        }
        Ok(())
    }

    pub fn get(&self, quality: Quality) -> &QualityField {
        match quality {
            Quality::Beauty => &self.beauty,
            Quality::Quiet => &self.quiet,
            Quality::Happy => &self.happy,
        }
    }

    pub fn set(&mut self, field: QualityField) {
        match field.quality {
            Quality::Beauty => self.beauty = field,
            Quality::Quiet => self.quiet = field,
            Quality::Happy => self.happy = field,
        }
    }

    pub fn n_cells(&self) -> usize {
        self.beauty.n_cells()
    }

    pub fn with_curve(&self, curve: ScoringCurve) -> Result<Self, PerceptionError> {
        Ok(Self {
            beauty: self.beauty.with_curve(curve)?,
            quiet: self.quiet.with_curve(curve)?,
            happy: self.happy.with_curve(curve)?,
        })
    }
}

/// Full pipeline for one quality: votes to ranked field.
pub fn field_from_votes(
    graph: &LocationGraph,
    scenes: &[Scene],
    votes: &[VoteRecord],
    quality: Quality,
    curve: ScoringCurve,
    idw: IdwParams,
) -> Result<(QualityField, Aggregation), PerceptionError> {
    let agg = aggregate_votes(votes, quality, scenes);
    let raw = scenes_to_cells(graph, scenes, &agg.scores, idw)?;
    let field = QualityField::from_raw(quality, raw, curve)?;
    Ok((field, agg))
}
