//! Seeded synthetic city data for demos and tests.
//!
//! Three latent quality surfaces are drawn over a grid, each a mix of smooth
//! Gaussian bumps plus a few pleasant bands that run off the straight lines
//! between landmarks. Street scenes are scattered over the box and pairwise
//! votes are simulated from the latent values with logistic noise and a
//! share of "Can't Tell" answers. Photos are denser in beautiful cells and
//! carry more positive tags there.

use std::io::Write;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};

use crate::flickr_proxy::PhotoMeta;
use crate::geo_grid::{unproject, BoundingBox, LocationGraph};
use crate::perception::{
    field_from_votes, FieldSet, IdwParams, Outcome, PerceptionError, Quality, Scene, SceneSource, ScoringCurve,
    VoteRecord,
};

/// Central London, 19 x 28 cells of 200 m.
pub fn london_bbox() -> BoundingBox {
    BoundingBox {
        min_lat: 51.4985,
        min_lon: -0.1570,
        max_lat: 51.5320,
        max_lon: -0.0770,
    }
}

/// Twenty well-known central London sites inside [`london_bbox`].
pub const LONDON_LANDMARKS: [(&str, f64, f64); 20] = [
    ("Euston Square", 51.5257, -0.1359),
    ("Tate Modern", 51.5076, -0.0994),
    ("British Museum", 51.5194, -0.1270),
    ("Trafalgar Square", 51.5080, -0.1281),
    ("Buckingham Palace", 51.5014, -0.1419),
    ("Westminster Abbey", 51.4994, -0.1273),
    ("St Paul's Cathedral", 51.5138, -0.0984),
    ("Monument", 51.5101, -0.0860),
    ("London Eye", 51.5033, -0.1196),
    ("Covent Garden", 51.5117, -0.1240),
    ("Piccadilly Circus", 51.5101, -0.1340),
    ("Oxford Circus", 51.5152, -0.1418),
    ("King's Cross", 51.5308, -0.1238),
    ("Waterloo", 51.5031, -0.1132),
    ("Hyde Park Corner", 51.5027, -0.1527),
    ("Bond Street", 51.5142, -0.1494),
    ("Leicester Square", 51.5113, -0.1285),
    ("Barbican", 51.5200, -0.0937),
    ("Liverpool Street", 51.5178, -0.0823),
    ("Borough Market", 51.5055, -0.0910),
];

pub fn london_landmarks() -> Vec<(String, f64, f64)> {
    LONDON_LANDMARKS
        .iter()
        .map(|&(n, lat, lon)| (n.to_string(), lat, lon))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticConfig {
    pub n_scenes: usize,
    /// Votes per quality.
    pub votes_per_quality: usize,
    pub tie_share: f64,
    /// Logistic slope of the vote model on the latent difference.
    pub vote_sharpness: f64,
    pub n_photos: usize,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            n_scenes: 600,
            votes_per_quality: 4000,
            tie_share: 0.1,
            vote_sharpness: 6.0,
            n_photos: 3000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticCity {
    /// Latent value in `[0, 1]` per cell, indexed like [`Quality::ALL`].
    pub latent: [Vec<f64>; 3],
    pub scenes: Vec<Scene>,
    pub votes: Vec<VoteRecord>,
    pub photos: Vec<PhotoMeta>,
}

const POSITIVE_TAGS: [&str; 10] = [
    "beautiful", "lovely", "happy", "love", "sunny", "peaceful", "charming", "gorgeous", "delight", "nice",
];
const NEGATIVE_TAGS: [&str; 10] = [
    "ugly", "dirty", "sad", "angry", "hate", "scary", "noisy", "hostile", "damn", "nervous",
];
const NEUTRAL_TAGS: [&str; 12] = [
    "london", "street", "uk", "city", "building", "bus", "road", "people", "architecture", "england", "urban",
    "walk",
];
const STOP_TAGS: [&str; 4] = ["the", "and", "of", "a"];

// Latent mixing so that beauty-happy correlate most and quiet weakly with
// both (targets 0.64, 0.33, 0.29 before vote noise).
const MIX: [[f64; 3]; 3] = [[1.0, 0.0, 0.0], [0.33, 0.1023, 0.9384], [0.64, 0.7684, 0.0]];

fn smooth_surface(graph: &LocationGraph, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let (w, h) = graph.grid.bbox.extent_m();
    let bumps: Vec<(f64, f64, f64, f64)> = (0..8)
        .map(|_| {
            (
                rng.random_range(0.0..w),
                rng.random_range(0.0..h),
                rng.random_range(300.0..900.0),
                rng.random_range(-1.0..1.0),
            )
        })
        .collect();
    let raw: Vec<f64> = graph
        .cells
        .iter()
        .map(|c| {
            bumps
                .iter()
                .map(|&(x, y, s, a)| a * (-((c.x_m - x).powi(2) + (c.y_m - y).powi(2)) / (2.0 * s * s)).exp())
                .sum::<f64>()
                + 0.35 * rng.random_range(-1.0..1.0)
        })
        .collect();
    standardize(&raw)
}

fn standardize(v: &[f64]) -> Vec<f64> {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    let s = (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n).sqrt().max(1e-12);
    v.iter().map(|x| (x - m) / s).collect()
}

// Bands along a few rows and columns, one per quality, that make detours
// worthwhile.
fn corridor_bonus(graph: &LocationGraph, quality: usize) -> Vec<f64> {
    let rows = graph.grid.rows;
    let cols = graph.grid.cols;
    let (band_rows, band_cols): (Vec<usize>, Vec<usize>) = match quality {
        0 => (vec![rows / 3], vec![cols / 4, (3 * cols) / 4]),
        1 => (vec![(2 * rows) / 3], vec![cols / 2]),
        _ => (vec![rows / 2], vec![cols / 3, (2 * cols) / 3]),
    };
    graph
        .cells
        .iter()
        .map(|c| {
            if band_rows.contains(&c.row) || band_cols.contains(&c.col) {
                1.6
            } else {
                0.0
            }
        })
        .collect()
}

fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

pub fn synthetic_city(graph: &LocationGraph, config: &SyntheticConfig, seed: u64) -> SyntheticCity {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let base: Vec<Vec<f64>> = (0..3)
        .map(|k| {
            let s = smooth_surface(graph, &mut rng);
            let bonus = corridor_bonus(graph, k);
            standardize(&s.iter().zip(&bonus).map(|(a, b)| a + b).collect::<Vec<_>>())
        })
        .collect();
    let latent: [Vec<f64>; 3] = std::array::from_fn(|q| {
        (0..graph.n_cells())
            .map(|i| {
                let z: f64 = (0..3).map(|k| MIX[q][k] * base[k][i]).sum::<f64>();
                logistic(1.2 * z - 0.3)
            })
            .collect()
    });

    let bbox = graph.grid.bbox;
    let (w, h) = bbox.extent_m();
    let scenes: Vec<Scene> = (0..config.n_scenes)
        .map(|i| {
            let (lat, lon) = unproject(&bbox, rng.random_range(0.0..w), rng.random_range(0.0..h));
            Scene {
                scene_id: format!("s{i:04}"),
                lat: lat.clamp(bbox.min_lat, bbox.max_lat),
                lon: lon.clamp(bbox.min_lon, bbox.max_lon),
                source: if i % 4 == 0 { SceneSource::Geograph } else { SceneSource::StreetView },
            }
        })
        .collect();
    let scene_cell: Vec<usize> = scenes
        .iter()
        .map(|s| graph.cell_of(s.lat, s.lon).expect("scene inside bbox"))
        .collect();

    let mut votes = Vec::with_capacity(3 * config.votes_per_quality);
    if scenes.len() >= 2 {
        for q in Quality::ALL {
            let lat = &latent[q.index()];
            for _ in 0..config.votes_per_quality {
                let a = rng.random_range(0..scenes.len());
                let mut b = rng.random_range(0..scenes.len() - 1);
                if b >= a {
                    b += 1;
                }
                let outcome = if rng.random::<f64>() < config.tie_share {
                    Outcome::Tie
                } else {
                    let p = logistic(config.vote_sharpness * (lat[scene_cell[a]] - lat[scene_cell[b]]));
                    if rng.random::<f64>() < p {
                        Outcome::A
                    } else {
                        Outcome::B
                    }
                };
                votes.push(VoteRecord {
                    quality: q,
                    scene_a: scenes[a].scene_id.clone(),
                    scene_b: scenes[b].scene_id.clone(),
                    outcome,
                });
            }
        }
    }

    let beauty = &latent[0];
    let weights: Vec<f64> = beauty.iter().map(|b| 0.2 + b * b).collect();
    let total: f64 = weights.iter().sum();
    let tag_count = Poisson::new(5.0).expect("positive rate");
    let jitter = Normal::new(0.0, 0.3).expect("finite sd");
    let cell_size = graph.grid.cell_size_m;
    let photos = (0..config.n_photos)
        .map(|i| {
            let mut pick = rng.random::<f64>() * total;
            let mut cell = weights.len() - 1;
            for (c, wgt) in weights.iter().enumerate() {
                if pick < *wgt {
                    cell = c;
                    break;
                }
                pick -= wgt;
            }
            let c = &graph.cells[cell];
            let dx = (rng.random::<f64>() - 0.5) * cell_size * 0.9;
            let dy = (rng.random::<f64>() - 0.5) * cell_size * 0.9;
            let (lat, lon) = unproject(&bbox, c.x_m + dx, c.y_m + dy);
            let mood = (beauty[cell] + jitter.sample(&mut rng)).clamp(0.0, 1.0);
            let n_tags = tag_count.sample(&mut rng) as usize;
            let tags = (0..n_tags)
                .map(|_| {
                    let u = rng.random::<f64>();
                    let list: &[&str] = if u < 0.35 * mood {
                        &POSITIVE_TAGS
                    } else if u < 0.35 * mood + 0.25 * (1.0 - mood) {
                        &NEGATIVE_TAGS
                    } else if u < 0.9 {
                        &NEUTRAL_TAGS
                    } else {
                        &STOP_TAGS
                    };
                    let t = list.choose(&mut rng).expect("nonempty");
                    if rng.random::<f64>() < 0.2 {
                        t.to_uppercase()
                    } else {
                        t.to_string()
                    }
                })
                .collect();
            PhotoMeta {
                photo_id: format!("p{i:05}"),
                lat: lat.clamp(bbox.min_lat, bbox.max_lat),
                lon: lon.clamp(bbox.min_lon, bbox.max_lon),
                tags,
                n_views: rng.random_range(0..5000),
                n_favorites: rng.random_range(0..50),
                n_comments: rng.random_range(0..20),
            }
        })
        .collect();

    SyntheticCity {
        latent,
        scenes,
        votes,
        photos,
    }
}

/// Vote-derived fields for all three qualities of a synthetic city.
pub fn city_fields(graph: &LocationGraph, city: &SyntheticCity, curve: ScoringCurve) -> Result<FieldSet, PerceptionError> {
    let field = |q| field_from_votes(graph, &city.scenes, &city.votes, q, curve, IdwParams::default()).map(|(f, _)| f);
    FieldSet::new(field(Quality::Beauty)?, field(Quality::Quiet)?, field(Quality::Happy)?)
}

/// Rank field with every rank `1..=n` used once, uniformly shuffled.
pub fn random_rank_field(n: usize, rng: &mut impl Rng) -> Vec<u32> {
    use rand::seq::SliceRandom;
    let mut ranks: Vec<u32> = (1..=n as u32).collect();
    ranks.shuffle(rng);
    ranks
}

pub fn write_scenes<W: Write>(scenes: &[Scene], w: W) -> csv::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for s in scenes {
        out.serialize(s)?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_votes<W: Write>(votes: &[VoteRecord], w: W) -> csv::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for v in votes {
        out.serialize(v)?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_photos<W: Write>(photos: &[PhotoMeta], w: W) -> csv::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["photo_id", "lat", "lon", "views", "favorites", "comments", "tags"])?;
    for p in photos {
        out.write_record([
            p.photo_id.clone(),
            p.lat.to_string(),
            p.lon.to_string(),
            p.n_views.to_string(),
            p.n_favorites.to_string(),
            p.n_comments.to_string(),
            p.tags.join(";"),
        ])?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_landmarks<W: Write>(points: &[(String, f64, f64)], w: W) -> csv::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["name", "lat", "lon"])?;
    for (name, lat, lon) in points {
        out.write_record([name.clone(), lat.to_string(), lon.to_string()])?;
    }
    out.flush()?;
    Ok(())
}
