//! Beauty scores predicted from photo metadata.
//!
//! Photo tags are lowercased, stripped of stopwords and matched against a
//! category lexicon. Per cell, the fraction of classified tags falling in each
//! category is standardized across cells, and a linear model over photo
//! density, the positive-emotion share and the negative-emotion share gives
//! the predicted beauty.

pub mod lexicon;
pub mod regression;

use std::collections::HashSet;
use std::io::Read;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geo_grid::{GridError, LocationGraph};
use crate::perception::{median_sorted, PerceptionError, Quality, QualityField, ScoringCurve};

pub use lexicon::{
    clean_tags, parse_stopwords, CategoryCounts, LiwcLexicon, DEFAULT_LEXICON_TSV, DEFAULT_STOPWORDS, NEGATIVE_CATEGORIES,
    POSITIVE_CATEGORY,
};
pub use regression::{ols, OlsFit};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProxyError {
    #[error("lexicon: {0}")]
    Lexicon(String),
    #[error("regression: {0}")]
    Regression(String),
    #[error("rank-deficient design: column {column} is collinear with {collinear_with:?}")]
    RankDeficient {
        column: String,
        collinear_with: Vec<String>,
    },
    #[error("need at least 2 cells with classified tags, got {0}")]
    TooFewCells(usize),
    #[error("photo density {0} is not positive")]
    Unpredictable(f64),
    #[error("no cell has any photo")]
    NoPhotos,
    #[error("photos csv: {0}")]
    Csv(String),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Perception(#[from] PerceptionError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhotoMeta {
    pub photo_id: String,
    pub lat: f64,
    pub lon: f64,
    pub tags: Vec<String>,
    pub n_views: u64,
    pub n_favorites: u64,
    pub n_comments: u64,
}

#[derive(Deserialize)]
struct PhotoRow {
    photo_id: String,
    lat: f64,
    lon: f64,
    views: u64,
    favorites: u64,
    comments: u64,
    #[serde(default)]
    tags: String,
}

/// Reads `photo_id,lat,lon,views,favorites,comments,tags` with a header
/// row; tags are `;`-separated.
pub fn read_photos<R: Read>(reader: R) -> Result<Vec<PhotoMeta>, ProxyError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    rdr.deserialize::<PhotoRow>()
        .map(|row| {
            let row = row.map_err(|e| ProxyError::Csv(e.to_string()))?;
            Ok(PhotoMeta {
                photo_id: row.photo_id,
                lat: row.lat,
                lon: row.lon,
                tags: row
                    .tags
                    .split(';')
                    .map(str::trim)
                    .filter(|t| !t.is_empty())
                    .map(String::from)
                    .collect(),
                n_views: row.views,
                n_favorites: row.favorites,
                n_comments: row.comments,
            })
        })
        .collect()
}

/// Photo and tag tallies for one cell.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct CellTagStats {
    pub n_photos: u64,
    pub n_views: u64,
    pub n_favorites: u64,
    pub n_comments: u64,
    pub classified: u64,
    pub unclassified: u64,
    /// Indexed like the lexicon's category names.
    pub per_category: Vec<u64>,
}

impl CellTagStats {
    /// Fraction of classified tags in each category; zeros for a cell with
    /// no classified tag.
    pub fn fractions(&self) -> Vec<f64> {
        if self.classified == 0 {
            return vec![0.0; self.per_category.len()];
        }
        let total = self.classified as f64;
        self.per_category.iter().map(|&c| c as f64 / total).collect()
    }
}

/// Result of tallying photos onto the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct CellTally {
    pub cells: Vec<CellTagStats>,
    /// Photos whose coordinates fall outside the bounding box.
    pub outside: Vec<String>,
}

pub fn tally_photos(
    graph: &LocationGraph,
    photos: &[PhotoMeta],
    lexicon: &LiwcLexicon,
    stopwords: &HashSet<String>,
) -> CellTally {
    let n_cat = lexicon.category_names().len();
    let mut cells = vec![
        CellTagStats {
            per_category: vec![0; n_cat],
            ..Default::default()
        };
        graph.n_cells()
    ];
    let mut outside = Vec::new();
    for photo in photos {
        let Ok(cell) = graph.cell_of(photo.lat, photo.lon) else {
            outside.push(photo.photo_id.clone());
            continue;
        };
        let counts = lexicon.classify_tags(&clean_tags(&photo.tags, stopwords));
        let s = &mut cells[cell];
        s.n_photos += 1;
        s.n_views += photo.n_views;
        s.n_favorites += photo.n_favorites;
        s.n_comments += photo.n_comments;
        s.classified += counts.classified;
        s.unclassified += counts.unclassified;
        for (a, b) in s.per_category.iter_mut().zip(&counts.per_category) {
            *a += b;
        }
    }
    CellTally { cells, outside }
}

/// Mean, population standard deviation and standardized values; all
/// standardized values are 0 when the deviation is 0.
///
/// The sum is carried as a compensated pair so that deviations from the mean
/// are symmetric whenever the inputs are.
pub fn standardize(values: &[f64]) -> (f64, f64, Vec<f64>) {
    let n = values.len() as f64;
    let (mut hi, mut lo) = (0.0f64, 0.0f64);
    for &v in values {
        // two-sum
        let s = hi + v;
        let bp = s - hi;
        lo += (hi - (s - bp)) + (v - bp);
        hi = s;
    }
    let dev: Vec<f64> = values.iter().map(|&v| ((n * v - hi) - lo) / n).collect();
    let mu = (hi + lo) / n;
    let sigma = (dev.iter().map(|d| d * d).sum::<f64>() / n).sqrt();
    let f = if sigma > 0.0 {
        dev.iter().map(|d| d / sigma).collect()
    } else {
        vec![0.0; values.len()]
    };
    (mu, sigma, f)
}

/// Category fractions standardized across cells.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizedCounts {
    /// `w[cell][category]`
    pub w: Vec<Vec<f64>>,
    pub mu: Vec<f64>,
    pub sigma: Vec<f64>,
    /// `f[cell][category]`
    pub f: Vec<Vec<f64>>,
}

pub fn normalized_counts(stats: &[CellTagStats]) -> Result<NormalizedCounts, ProxyError> {
    let usable = stats.iter().filter(|s| s.classified > 0).count();
    if usable < 2 {
        return Err(ProxyError::TooFewCells(usable));
    }
    let w: Vec<Vec<f64>> = stats.iter().map(CellTagStats::fractions).collect();
    let n_cat = w[0].len();
    let mut f = vec![vec![0.0; n_cat]; w.len()];
    let mut mu = Vec::with_capacity(n_cat);
    let mut sigma = Vec::with_capacity(n_cat);
    for c in 0..n_cat {
        let column: Vec<f64> = w.iter().map(|row| row[c]).collect();
        let (m, s, z) = standardize(&column);
        mu.push(m);
        sigma.push(s);
        for (row, v) in f.iter_mut().zip(z) {
            row[c] = v;
        }
    }
    Ok(NormalizedCounts { w, mu, sigma, f })
}

/// Linear beauty model over natural-log photo density and the standardized
/// positive and negative emotion shares.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BeautyModel {
    pub intercept: f64,
    pub coef_log_density: f64,
    pub coef_fp: f64,
    pub coef_fn: f64,
}

impl BeautyModel {
    /// Coefficients published for London.
    pub const LONDON: BeautyModel = BeautyModel {
        intercept: 0.37,
        coef_log_density: 0.03,
        coef_fp: 0.20,
        coef_fn: -0.21,
    };
}

impl Default for BeautyModel {
    fn default() -> Self {
        Self::LONDON
    }
}

/// Unclamped prediction. Fails for a cell without photos.
pub fn predict_beauty(density: f64, f_p: f64, f_n: f64, model: &BeautyModel) -> Result<f64, ProxyError> {
    if !(density > 0.0) {
        return Err(ProxyError::Unpredictable(density));
    }
    Ok(model.intercept + model.coef_log_density * density.ln() + model.coef_fp * f_p + model.coef_fn * f_n)
}

/// Per-cell `(f_p, f_n)`: the positive category and the mean of the five
/// negative categories.
pub fn emotion_features(norm: &NormalizedCounts, lexicon: &LiwcLexicon) -> Result<Vec<(f64, f64)>, ProxyError> {
    lexicon.require_model_categories()?;
    let pos = lexicon.category_index(POSITIVE_CATEGORY).expect("checked");
    let neg: Vec<usize> = NEGATIVE_CATEGORIES
        .iter()
        .map(|c| lexicon.category_index(c).expect("checked"))
        .collect();
    Ok(norm
        .f
        .iter()
        .map(|row| {
            let f_n = neg.iter().map(|&c| row[c]).sum::<f64>() / neg.len() as f64;
            (row[pos], f_n)
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct BeautyFit {
    pub model: BeautyModel,
    pub r_squared: f64,
    /// Intercept, log density, f_p, f_n.
    pub std_errors: [f64; 4],
    pub ols: OlsFit,
}

pub const FEATURE_NAMES: [&str; 3] = ["log_density", "f_p", "f_n"];

/// Least-squares fit on rows of `(log density, f_p, f_n)`.
pub fn fit_beauty_model(features: &[[f64; 3]], targets: &[f64]) -> Result<BeautyFit, ProxyError> {
    let rows: Vec<Vec<f64>> = features.iter().map(|r| r.to_vec()).collect();
    let fit = ols(&rows, targets, &FEATURE_NAMES)?;
    let b = &fit.coefficients;
    let se = &fit.std_errors;
    Ok(BeautyFit {
        model: BeautyModel {
            intercept: b[0],
            coef_log_density: b[1],
            coef_fp: b[2],
            coef_fn: b[3],
        },
        r_squared: fit.r_squared,
        std_errors: [se[0], se[1], se[2], se[3]],
        ols: fit,
    })
}

/// Per-cell outcome of the photo pipeline.
#[derive(Debug, Clone, PartialEq)]
pub struct BeautyProxy {
    pub tally: CellTally,
    pub normalized: NormalizedCounts,
    /// Unclamped prediction; `None` for cells without photos.
    pub predicted: Vec<Option<f64>>,
    /// Clamped to `[0, 1]`, photo-less cells at the median clamped prediction.
    pub scores: Vec<f64>,
}

impl BeautyProxy {
    pub fn field(&self, curve: ScoringCurve) -> Result<QualityField, ProxyError> {
        Ok(QualityField::from_raw(Quality::Beauty, self.scores.clone(), curve)?)
    }
}

pub fn beauty_proxy(
    graph: &LocationGraph,
    photos: &[PhotoMeta],
    lexicon: &LiwcLexicon,
    stopwords: &HashSet<String>,
    model: &BeautyModel,
) -> Result<BeautyProxy, ProxyError> {
    lexicon.require_model_categories()?;
    let tally = tally_photos(graph, photos, lexicon, stopwords);
    let normalized = normalized_counts(&tally.cells)?;
    let features = emotion_features(&normalized, lexicon)?;
    let predicted: Vec<Option<f64>> = tally
        .cells
        .iter()
        .zip(&features)
        .map(|(s, &(f_p, f_n))| predict_beauty(s.n_photos as f64, f_p, f_n, model).ok())
        .collect();
    let mut known: Vec<f64> = predicted.iter().flatten().map(|v| v.clamp(0.0, 1.0)).collect();
    if known.is_empty() {
        return Err(ProxyError::NoPhotos);
    }
    known.sort_by(f64::total_cmp);
    let fallback = median_sorted(&known);
    let scores = predicted
        .iter()
        .map(|p| p.map_or(fallback, |v| v.clamp(0.0, 1.0)))
        .collect();
    Ok(BeautyProxy {
        tally,
        normalized,
        predicted,
        scores,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geo_grid::{unproject, BoundingBox};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn stats(w: &[f64]) -> Vec<CellTagStats> {
        // 10 classified tags per cell, category 0 holds w * 10 of them
        w.iter()
            .map(|&x| CellTagStats {
                n_photos: 1,
                classified: 10,
                per_category: vec![(x * 10.0).round() as u64],
                ..Default::default()
            })
            .collect()
    }

    #[test]
    fn two_point_standardization() {
        let n = normalized_counts(&stats(&[0.2, 0.4])).unwrap();
        assert_relative_eq!(n.mu[0], 0.3, epsilon = 1e-15);
        assert_relative_eq!(n.sigma[0], 0.1, epsilon = 1e-15);
        assert_eq!(n.f[0][0], -1.0);
        assert_eq!(n.f[1][0], 1.0);
    }

    #[test]
    fn three_point_standardization() {
        let n = normalized_counts(&stats(&[0.0, 0.3, 0.6])).unwrap();
        // population sigma of {0, .3, .6} is sqrt(0.06)
        assert_relative_eq!(n.sigma[0], 0.06f64.sqrt(), epsilon = 1e-12);
        assert_relative_eq!(n.f[0][0], -1.224744871391589, epsilon = 1e-9);
        assert_relative_eq!(n.f[1][0], 0.0, epsilon = 1e-12);
        assert_relative_eq!(n.f[2][0], 1.224744871391589, epsilon = 1e-9);
    }

    #[test]
    fn constant_fractions_give_zero() {
        let n = normalized_counts(&stats(&[0.5, 0.5, 0.5])).unwrap();
        assert!(n.f.iter().all(|r| r[0] == 0.0));
    }

    #[test]
    fn needs_two_usable_cells() {
        let mut s = stats(&[0.5, 0.5]);
        s[1].classified = 0;
        s[1].per_category = vec![0];
        assert_eq!(normalized_counts(&s), Err(ProxyError::TooFewCells(1)));
    }

    #[test]
    fn empty_cells_count_as_zero_fraction() {
        let mut s = stats(&[0.2, 0.4]);
        s.push(CellTagStats {
            per_category: vec![0],
            ..Default::default()
        });
        let n = normalized_counts(&s).unwrap();
        assert_relative_eq!(n.mu[0], 0.2, epsilon = 1e-15);
    }

    #[test]
    fn prediction_examples() {
        let m = BeautyModel::LONDON;
        assert_eq!(predict_beauty(1.0, 0.0, 0.0, &m).unwrap(), 0.37);
        assert_relative_eq!(predict_beauty(std::f64::consts::E, 1.0, 1.0, &m).unwrap(), 0.39, epsilon = 1e-12);
        let low = predict_beauty(1.0, -1.0, 1.0, &m).unwrap();
        assert_relative_eq!(low, -0.04, epsilon = 1e-12);
        assert_eq!(low.clamp(0.0, 1.0), 0.0);
        assert_eq!(predict_beauty(0.0, 0.0, 0.0, &m), Err(ProxyError::Unpredictable(0.0)));
    }

    #[test]
    fn constant_targets_fit_flat() {
        let x: Vec<[f64; 3]> = (0..12)
            .map(|i| {
                let i = i as f64;
                [(1.0 + i).ln(), (i * 0.7).sin(), (i * 1.3).cos()]
            })
            .collect();
        let fit = fit_beauty_model(&x, &[0.5; 12]).unwrap();
        assert_relative_eq!(fit.model.intercept, 0.5, epsilon = 1e-12);
        assert!(fit.model.coef_log_density.abs() < 1e-12);
        assert!(fit.model.coef_fp.abs() < 1e-12);
        assert!(fit.model.coef_fn.abs() < 1e-12);
        assert_eq!(fit.r_squared, 0.0);
    }

    #[test]
    fn csv_round() {
        let text = "photo_id,lat,lon,views,favorites,comments,tags\n\
                    p1,51.5,-0.1,10,2,0,\"Happy;the; london \"\n\
                    p2,51.6,-0.2,0,0,0,\n";
        let photos = read_photos(text.as_bytes()).unwrap();
        assert_eq!(photos.len(), 2);
        assert_eq!(photos[0].tags, vec!["Happy", "the", "london"]);
        assert!(photos[1].tags.is_empty());
        assert!(read_photos("photo_id,lat,lon,views,favorites,comments,tags\np,x,0,0,0,0,\n".as_bytes()).is_err());
        assert!(read_photos("photo_id,lat,lon,views,favorites,comments,tags\np,1,0,-3,0,0,\n".as_bytes()).is_err());
    }

    #[test]
    fn pipeline_on_small_grid() {
        let bbox = BoundingBox::new(51.50, -0.12, 51.5054, -0.1114).unwrap();
        let graph = LocationGraph::build(bbox, 200.0).unwrap();
        let lex = LiwcLexicon::default_lexicon();
        let stop = parse_stopwords(lexicon::DEFAULT_STOPWORDS);
        let at = |id: usize| (graph.cells[id].lat, graph.cells[id].lon);
        let photo = |id: &str, cell: usize, tags: &[&str]| PhotoMeta {
            photo_id: id.into(),
            lat: at(cell).0,
            lon: at(cell).1,
            tags: tags.iter().map(|t| t.to_string()).collect(),
            n_views: 1,
            n_favorites: 0,
            n_comments: 0,
        };
        let (far_lat, far_lon) = unproject(&bbox, -500.0, -500.0);
        let mut photos = vec![
            photo("a", 0, &["happy", "beautiful", "the"]),
            photo("b", 0, &["lovely"]),
            photo("c", 4, &["hostility", "sad"]),
        ];
        photos.push(PhotoMeta {
            lat: far_lat,
            lon: far_lon,
            ..photo("x", 0, &[])
        });
        let proxy = beauty_proxy(&graph, &photos, &lex, &stop, &BeautyModel::LONDON).unwrap();
        assert_eq!(proxy.tally.outside, vec!["x"]);
        assert_eq!(proxy.tally.cells[0].n_photos, 2);
        assert!(proxy.predicted[0].unwrap() > proxy.predicted[4].unwrap());
        let fallback = proxy.scores[1];
        assert!(proxy.predicted[1].is_none());
        let mut known = [proxy.scores[0], proxy.scores[4]];
        known.sort_by(f64::total_cmp);
        assert_relative_eq!(fallback, 0.5 * (known[0] + known[1]), epsilon = 1e-15);
        assert!(proxy.scores.iter().all(|s| (0.0..=1.0).contains(s)));
        let field = proxy.field(ScoringCurve::Cubic).unwrap();
        assert_eq!(field.rank[0], 1);
    }

    proptest! {
        #[test]
        fn deviations_sum_to_zero(w in prop::collection::vec(0.0f64..=1.0, 2..40)) {
            let (mu, _, _) = standardize(&w);
            let total: f64 = w.iter().map(|v| v - mu).sum();
            prop_assert!(total.abs() < 1e-9);
        }

        #[test]
        fn prediction_monotone(d in 1.0f64..1e4, fp in -3.0f64..3.0, fnn in -3.0f64..3.0, step in 1e-3f64..2.0) {
            let m = BeautyModel::LONDON;
            let base = predict_beauty(d, fp, fnn, &m).unwrap();
            prop_assert!(predict_beauty(d, fp + step, fnn, &m).unwrap() > base);
            prop_assert!(predict_beauty(d, fp, fnn + step, &m).unwrap() < base);
        }

        #[test]
        fn residuals_orthogonal_to_features(rows in prop::collection::vec((0.0f64..5.0, -2.0f64..2.0, -2.0f64..2.0, 0.0f64..1.0), 8..40)) {
            let x: Vec<[f64; 3]> = rows.iter().map(|r| [r.0, r.1, r.2]).collect();
            let y: Vec<f64> = rows.iter().map(|r| r.3).collect();
            let Ok(fit) = fit_beauty_model(&x, &y) else { return Ok(()) };
            for j in 0..3 {
                let dot: f64 = x.iter().zip(&fit.ols.residuals).map(|(r, e)| r[j] * e).sum();
                prop_assert!(dot.abs() < 1e-8, "column {} dot {}", j, dot);
            }
            let sum: f64 = fit.ols.residuals.iter().sum();
            prop_assert!(sum.abs() < 1e-8);
            for (r, fitted) in x.iter().zip(&fit.ols.fitted) {
                let m = fit.model;
                let p = m.intercept + m.coef_log_density * r[0] + m.coef_fp * r[1] + m.coef_fn * r[2];
                prop_assert!((p - fitted).abs() < 1e-12);
            }
        }
    }
}
