//! Route selection over the location graph.
//!
//! Candidate walks come out of a k-shortest walk enumeration in
//! nondecreasing length. They are scored by the mean rank of the cells they
//! visit, and exploration stops with a marginal-value rule: keep reading
//! batches of candidates while the marginal rank gain per candidate beats the
//! average gain per candidate so far.

pub mod eppstein;

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geo_grid::{LocationGraph, WALK_SPEED_M_PER_MIN};
use crate::perception::{PerceptionError, Quality};

pub use eppstein::{Digraph, ReverseTree, WalkEnumerator, WalkHandle};

/// Integer length units per meter used for exact ordering of walks.
pub const UNITS_PER_M: f64 = 1e6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RouteError {
    #[error("unknown cell id {0}")]
    UnknownCell(usize),
    #[error("cell {to} is unreachable from cell {from}")]
    Unreachable { from: usize, to: usize },
    #[error("rank field covers {got} cells, graph has {expected}")]
    FieldMismatch { expected: usize, got: usize },
    #[error("invalid exploration policy: {0}")]
    InvalidPolicy(String),
}

/// A walk between two cells.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathCandidate {
    pub cells: Vec<usize>,
    pub length_m: f64,
    /// Mean rank over every visit; `None` when no rank field was supplied.
    pub avg_rank: Option<f64>,
    /// 1-based position in the enumeration.
    pub index_in_enumeration: usize,
}

impl PathCandidate {
    pub fn walk_min(&self) -> f64 {
        self.length_m / WALK_SPEED_M_PER_MIN
    }

    pub fn is_simple(&self) -> bool {
        is_simple(&self.cells)
    }
}

pub fn is_simple(cells: &[usize]) -> bool {
    let mut seen: Vec<usize> = cells.to_vec();
    seen.sort_unstable();
    seen.windows(2).all(|w| w[0] != w[1])
}

/// Mean of `ranks` over every visit on `cells`.
pub fn average_rank(cells: &[usize], ranks: &[u32]) -> f64 {
    let sum: u64 = cells.iter().map(|&c| u64::from(ranks[c])).sum();
    sum as f64 / cells.len() as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExplorationPolicy {
    pub m_max: usize,
    pub batch_size: usize,
    pub epsilon: f64,
    pub mvt_enabled: bool,
    pub simple_paths_only: bool,
}

impl Default for ExplorationPolicy {
    fn default() -> Self {
        Self {
            m_max: 1_000_000,
            batch_size: 100,
            epsilon: 0.0,
            mvt_enabled: true,
            simple_paths_only: false,
        }
    }
}

impl ExplorationPolicy {
    pub fn validate(&self) -> Result<(), RouteError> {
        if self.batch_size == 0 {
            return Err(RouteError::InvalidPolicy("batch_size must be at least 1".into()));
        }
        if self.m_max < self.batch_size {
            return Err(RouteError::InvalidPolicy(format!(
                "m_max {} is below batch_size {}",
                self.m_max, self.batch_size
            )));
        }
        if !(self.epsilon >= 0.0) {
            return Err(RouteError::InvalidPolicy("epsilon must be non-negative".into()));
        }
        Ok(())
    }
}

/// Which route a plan stands for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RouteVariant {
    Shortest,
    Beauty,
    Quiet,
    Happy,
}

impl RouteVariant {
    pub const ALL: [RouteVariant; 4] = [
        RouteVariant::Shortest,
        RouteVariant::Beauty,
        RouteVariant::Quiet,
        RouteVariant::Happy,
    ];

    pub fn quality(self) -> Option<Quality> {
        match self {
            RouteVariant::Shortest => None,
            RouteVariant::Beauty => Some(Quality::Beauty),
            RouteVariant::Quiet => Some(Quality::Quiet),
            RouteVariant::Happy => Some(Quality::Happy),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            RouteVariant::Shortest => "shortest",
            q => q.quality().map(Quality::as_str).unwrap_or_default(),
        }
    }
}

impl From<Quality> for RouteVariant {
    fn from(q: Quality) -> Self {
        match q {
            Quality::Beauty => RouteVariant::Beauty,
            Quality::Quiet => RouteVariant::Quiet,
            Quality::Happy => RouteVariant::Happy,
        }
    }
}

impl fmt::Display for RouteVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RouteVariant {
    type Err = PerceptionError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.trim().eq_ignore_ascii_case("shortest") {
            Ok(RouteVariant::Shortest)
        } else {
            s.parse::<Quality>().map(RouteVariant::from)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoutePlan {
    pub variant: RouteVariant,
    pub path: PathCandidate,
    pub walk_min: f64,
    pub paths_explored: usize,
    /// `(m, best average rank among the first m candidates)` at every batch
    /// boundary.
    pub best_rank_trace: Vec<(usize, f64)>,
}

/// Marginal-value stopping rule.
///
/// `gains` holds `(m, G(m))` checkpoints where `G` is the cumulative rank
/// improvement since the first checkpoint. Stop when the last batch gained
/// less than `epsilon`, or when `G > 0` and the marginal gain per candidate
/// over the last batch is no better than the average gain per candidate.
pub fn mvt_should_stop(gains: &[(usize, f64)], epsilon: f64) -> bool {
    let [.., (m0, g0), (m1, g1)] = gains else {
        return false;
    };
    let step = g1 - g0;
    if step < epsilon {
        return true;
    }
    if *g1 <= 0.0 || m1 <= m0 {
        return false;
    }
    step / (m1 - m0) as f64 <= g1 / *m1 as f64
}

fn to_units(length_m: f64) -> u64 {
    (length_m * UNITS_PER_M).round() as u64
}

fn from_units(units: u64) -> f64 {
    units as f64 / UNITS_PER_M
}

/// Location graph plus its integer-weighted digraph, built once per graph
/// and shared by any number of queries.
#[derive(Debug, Clone)]
pub struct RoutingGraph<'a> {
    graph: &'a LocationGraph,
    digraph: Digraph,
    max_edge: u64,
}

impl<'a> RoutingGraph<'a> {
    pub fn new(graph: &'a LocationGraph) -> Self {
        let heads: Vec<Vec<(usize, u64)>> = graph
            .adjacency
            .iter()
            .map(|out| out.iter().map(|&(v, len)| (v, to_units(len))).collect())
            .collect();
        let max_edge = heads.iter().flatten().map(|e| e.1).max().unwrap_or(0);
        Self {
            graph,
            digraph: Digraph::from_adjacency(heads),
            max_edge,
        }
    }

    pub fn graph(&self) -> &'a LocationGraph {
        self.graph
    }

    pub fn digraph(&self) -> &Digraph {
        &self.digraph
    }

    fn check(&self, cell: usize) -> Result<(), RouteError> {
        if cell < self.graph.n_cells() {
            Ok(())
        } else {
            Err(RouteError::UnknownCell(cell))
        }
    }

    fn check_ranks(&self, ranks: &[u32]) -> Result<(), RouteError> {
        if ranks.len() == self.graph.n_cells() {
            Ok(())
        } else {
            Err(RouteError::FieldMismatch {
                expected: self.graph.n_cells(),
                got: ranks.len(),
            })
        }
    }

    /// Minimum-length path; among equally short ones the lexicographically
    /// smallest cell sequence.
    pub fn shortest_path(&self, s: usize, d: usize) -> Result<PathCandidate, RouteError> {
        self.check(s)?;
        self.check(d)?;
        let tree = ReverseTree::build(&self.digraph, d);
        let cells = tree
            .path_from(s)
            .ok_or(RouteError::Unreachable { from: s, to: d })?;
        Ok(PathCandidate {
            cells,
            length_m: from_units(tree.dist[s]),
            avg_rank: None,
            index_in_enumeration: 1,
        })
    }

    /// Lazy stream of `s -> d` walks in nondecreasing length.
    pub fn k_shortest_paths(&self, s: usize, d: usize) -> Result<PathStream<'_>, RouteError> {
        self.check(s)?;
        self.check(d)?;
        Ok(PathStream {
            enumerator: WalkEnumerator::new(&self.digraph, s, d),
            ranks: None,
            simple_only: false,
            simple_cutoff: self.simple_cutoff(),
            emitted: 0,
            trivial: s == d,
        })
    }

    // no simple path is longer than (n - 1) of the longest edges
    fn simple_cutoff(&self) -> u64 {
        self.max_edge
            .saturating_mul(self.graph.n_cells().saturating_sub(1) as u64)
    }

    pub fn explorer<'s>(
        &'s self,
        ranks: &'s [u32],
        s: usize,
        d: usize,
        simple_only: bool,
    ) -> Result<Explorer<'s>, RouteError> {
        self.check(s)?;
        self.check(d)?;
        self.check_ranks(ranks)?;
        let costs: Vec<u64> = ranks.iter().map(|&r| u64::from(r)).collect();
        Ok(Explorer {
            enumerator: WalkEnumerator::with_node_costs(&self.digraph, s, d, &costs),
            ranks,
            simple_only,
            simple_cutoff: self.simple_cutoff(),
            explored: 0,
            exhausted: false,
            best: None,
        })
    }

    /// Best average-rank walk among the k shortest, with the marginal-value
    /// stopping rule (when enabled) deciding how far to read.
    pub fn best_pleasant_path(
        &self,
        ranks: &[u32],
        variant: RouteVariant,
        s: usize,
        d: usize,
        policy: &ExplorationPolicy,
    ) -> Result<RoutePlan, RouteError> {
        policy.validate()?;
        let mut explorer = self.explorer(ranks, s, d, policy.simple_paths_only)?;
        if s == d {
            explorer.advance_to(1);
            let path = explorer.best_path().ok_or(RouteError::Unreachable { from: s, to: d })?;
            return Ok(RoutePlan {
                variant,
                walk_min: path.walk_min(),
                path,
                paths_explored: 1,
                best_rank_trace: vec![(1, explorer.best_avg_rank().unwrap_or(0.0))],
            });
        }

        let mut trace: Vec<(usize, f64)> = Vec::new();
        loop {
            let target = (explorer.explored() + policy.batch_size).min(policy.m_max);
            explorer.advance_to(target);
            let best = explorer
                .best_avg_rank()
                .ok_or(RouteError::Unreachable { from: s, to: d })?;
            trace.push((explorer.explored(), best));
            if explorer.is_exhausted() || explorer.explored() >= policy.m_max {
                break;
            }
            if policy.mvt_enabled {
                let first = trace[0].1;
                // the rule only reads the last two checkpoints
                let tail = &trace[trace.len().saturating_sub(2)..];
                let gains: Vec<(usize, f64)> = tail.iter().map(|&(m, r)| (m, first - r)).collect();
                if mvt_should_stop(&gains, policy.epsilon) {
                    break;
                }
            }
        }
        let path = explorer.best_path().expect("at least one candidate");
        Ok(RoutePlan {
            variant,
            walk_min: path.walk_min(),
            path,
            paths_explored: explorer.explored(),
            best_rank_trace: trace,
        })
    }

    /// Shortest path as a plan; `ranks` only fills in its average rank.
    pub fn shortest_plan(&self, ranks: Option<&[u32]>, s: usize, d: usize) -> Result<RoutePlan, RouteError> {
        let mut path = self.shortest_path(s, d)?;
        if let Some(r) = ranks {
            self.check_ranks(r)?;
            path.avg_rank = Some(average_rank(&path.cells, r));
        }
        Ok(RoutePlan {
            variant: RouteVariant::Shortest,
            walk_min: path.walk_min(),
            path,
            paths_explored: 1,
            best_rank_trace: Vec::new(),
        })
    }
}

/// Stream returned by [`RoutingGraph::k_shortest_paths`].
#[derive(Debug)]
pub struct PathStream<'a> {
    enumerator: WalkEnumerator<'a>,
    ranks: Option<&'a [u32]>,
    simple_only: bool,
    simple_cutoff: u64,
    emitted: usize,
    // s = d: every later walk revisits s
    trivial: bool,
}

impl<'a> PathStream<'a> {
    /// Fill `avg_rank` on every candidate.
    pub fn with_ranks(mut self, ranks: &'a [u32]) -> Self {
        self.ranks = Some(ranks);
        self
    }

    /// Drop walks that revisit a cell.
    pub fn simple_only(mut self, on: bool) -> Self {
        self.simple_only = on;
        self
    }
}

impl Iterator for PathStream<'_> {
    type Item = PathCandidate;

    fn next(&mut self) -> Option<PathCandidate> {
        loop {
            if self.simple_only && self.trivial && self.emitted > 0 {
                return None;
            }
            let walk = self.enumerator.next_walk()?;
            if self.simple_only && walk.length > self.simple_cutoff {
                return None;
            }
            let cells = self.enumerator.nodes(&walk);
            if self.simple_only && !is_simple(&cells) {
                continue;
            }
            self.emitted += 1;
            return Some(PathCandidate {
                avg_rank: self.ranks.map(|r| average_rank(&cells, r)),
                cells,
                length_m: from_units(walk.length),
                index_in_enumeration: self.emitted,
            });
        }
    }
}

#[derive(Debug, Clone)]
struct Best {
    walk: WalkHandle,
    cells: Vec<usize>,
    index: usize,
}

/// Reads candidates in enumeration order and keeps the best one seen:
/// lowest mean rank, then shorter, then lexicographically smaller cells.
#[derive(Debug)]
pub struct Explorer<'a> {
    enumerator: WalkEnumerator<'a>,
    ranks: &'a [u32],
    simple_only: bool,
    simple_cutoff: u64,
    explored: usize,
    exhausted: bool,
    best: Option<Best>,
}

impl Explorer<'_> {
    pub fn explored(&self) -> usize {
        self.explored
    }

    pub fn is_exhausted(&self) -> bool {
        self.exhausted
    }

    /// Reads candidates until `m` have been explored or the stream ends.
    pub fn advance_to(&mut self, m: usize) {
        while self.explored < m && !self.exhausted {
            let Some(walk) = self.enumerator.next_walk() else {
                self.exhausted = true;
                break;
            };
            let mut cells = None;
            if self.simple_only {
                if walk.length > self.simple_cutoff {
                    self.exhausted = true;
                    break;
                }
                let c = self.enumerator.nodes(&walk);
                if !is_simple(&c) {
                    continue;
                }
                cells = Some(c);
            }
            self.explored += 1;
            self.offer(walk, cells);
        }
    }

    fn offer(&mut self, walk: WalkHandle, cells: Option<Vec<usize>>) {
        let ord = match &self.best {
            None => Ordering::Less,
            Some(best) => {
                // exact comparison of the two means
                let lhs = u128::from(walk.cost_sum) * u128::from(best.walk.visits);
                let rhs = u128::from(best.walk.cost_sum) * u128::from(walk.visits);
                lhs.cmp(&rhs).then(walk.length.cmp(&best.walk.length))
            }
        };
        let better = match ord {
            Ordering::Less => true,
            Ordering::Greater => false,
            Ordering::Equal => self.best.as_ref().is_some_and(|b| match &cells {
                Some(c) => *c < b.cells,
                None => self.enumerator.cmp_nodes(&walk, &b.cells) == Ordering::Less,
            }),
        };
        if better {
            let cells = cells.unwrap_or_else(|| self.enumerator.nodes(&walk));
            self.best = Some(Best {
                walk,
                cells,
                index: self.explored,
            });
        }
    }

    pub fn best_avg_rank(&self) -> Option<f64> {
        self.best
            .as_ref()
            .map(|b| b.walk.cost_sum as f64 / b.walk.visits as f64)
    }

    pub fn best_length_m(&self) -> Option<f64> {
        self.best.as_ref().map(|b| from_units(b.walk.length))
    }

    pub fn best_path(&self) -> Option<PathCandidate> {
        let b = self.best.as_ref()?;
        Some(PathCandidate {
            cells: b.cells.clone(),
            length_m: from_units(b.walk.length),
            avg_rank: Some(average_rank(&b.cells, self.ranks)),
            index_in_enumeration: b.index,
        })
    }
}

/// See [`RoutingGraph::shortest_path`].
pub fn shortest_path(graph: &LocationGraph, s: usize, d: usize) -> Result<PathCandidate, RouteError> {
    RoutingGraph::new(graph).shortest_path(s, d)
}

/// See [`RoutingGraph::best_pleasant_path`].
pub fn best_pleasant_path(
    graph: &LocationGraph,
    ranks: &[u32],
    variant: RouteVariant,
    s: usize,
    d: usize,
    policy: &ExplorationPolicy,
) -> Result<RoutePlan, RouteError> {
    RoutingGraph::new(graph).best_pleasant_path(ranks, variant, s, d, policy)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geo_grid::{BoundingBox, EARTH_RADIUS_M};
    use approx::assert_relative_eq;

    fn grid(w: f64, h: f64) -> LocationGraph {
        let k = EARTH_RADIUS_M * std::f64::consts::PI / 180.0;
        let max_lat = 51.5 + h / k;
        let cos = (0.5 * (51.5 + max_lat)).to_radians().cos();
        let bbox = BoundingBox::new(51.5, 0.0, max_lat, w / (k * cos)).unwrap();
        LocationGraph::build(bbox, 200.0).unwrap()
    }

    #[test]
    fn shortest_path_examples() {
        let g = grid(1000.0, 1000.0);
        let p = shortest_path(&g, 6, 6).unwrap();
        assert_eq!((p.cells, p.length_m), (vec![6], 0.0));

        let p = shortest_path(&g, 0, 4).unwrap();
        assert_eq!(p.cells, vec![0, 1, 2, 3, 4]);
        assert_relative_eq!(p.length_m, 800.0, epsilon = 1e-9);

        let p = shortest_path(&g, 0, 24).unwrap();
        assert_eq!(p.cells, vec![0, 6, 12, 18, 24]);
        assert_relative_eq!(p.length_m, 4.0 * 200.0 * 2f64.sqrt(), epsilon = 1e-5);
        assert!(shortest_path(&g, 0, 25).is_err());
    }

    #[test]
    fn mvt_rule_examples() {
        // flat over the last batch with positive gain
        assert!(mvt_should_stop(&[(100, 0.0), (200, 3.0), (300, 3.0)], 0.0));
        // marginal 0.05 beats average 0.025
        assert!(!mvt_should_stop(&[(100, 0.0), (200, 5.0)], 0.0));
        // no gain yet: only epsilon can stop
        assert!(!mvt_should_stop(&[(100, 0.0), (200, 0.0)], 0.0));
        assert!(mvt_should_stop(&[(100, 0.0), (200, 0.0)], 0.5));
        assert!(!mvt_should_stop(&[(100, 0.0)], 0.0));
        // marginal 1/100 vs average 6/300
        assert!(mvt_should_stop(&[(100, 0.0), (200, 5.0), (300, 6.0)], 0.0));
    }

    #[test]
    fn uniform_ranks_pick_the_shortest_path() {
        let g = grid(1000.0, 1000.0);
        let rg = RoutingGraph::new(&g);
        let ranks = vec![7u32; 25];
        let policy = ExplorationPolicy {
            m_max: 2000,
            ..Default::default()
        };
        for (s, d) in [(0, 24), (3, 21), (10, 14)] {
            let plan = rg.best_pleasant_path(&ranks, RouteVariant::Beauty, s, d, &policy).unwrap();
            assert_eq!(plan.path.cells, rg.shortest_path(s, d).unwrap().cells);
            assert_eq!(plan.path.index_in_enumeration, 1);
        }
    }

    #[test]
    fn same_cell_is_a_trivial_plan() {
        let g = grid(1000.0, 1000.0);
        let ranks: Vec<u32> = (1..=25).collect();
        let plan = best_pleasant_path(&g, &ranks, RouteVariant::Quiet, 12, 12, &Default::default()).unwrap();
        assert_eq!(plan.path.cells, vec![12]);
        assert_eq!(plan.paths_explored, 1);
        assert_eq!(plan.path.length_m, 0.0);
    }

    #[test]
    fn dominates_shortest_and_trace_is_monotone() {
        let g = grid(1000.0, 1000.0);
        let rg = RoutingGraph::new(&g);
        let ranks: Vec<u32> = (0..25u32).map(|i| (i * 7) % 25 + 1).collect();
        for (s, d) in [(0, 24), (4, 20), (2, 22)] {
            let plan = rg
                .best_pleasant_path(&ranks, RouteVariant::Happy, s, d, &Default::default())
                .unwrap();
            let short = rg.shortest_plan(Some(&ranks), s, d).unwrap();
            assert!(plan.path.avg_rank.unwrap() <= short.path.avg_rank.unwrap());
            assert!(plan.best_rank_trace.windows(2).all(|w| w[1].1 <= w[0].1));
            assert_eq!(plan.walk_min, plan.path.length_m / 80.0);
            assert!(plan.path.length_m >= short.path.length_m);
        }
    }

    #[test]
    fn stream_respects_simple_filter() {
        let g = grid(1000.0, 1000.0);
        let rg = RoutingGraph::new(&g);
        let paths: Vec<_> = rg.k_shortest_paths(0, 24).unwrap().simple_only(true).take(50).collect();
        assert!(paths.iter().all(PathCandidate::is_simple));
        assert!(paths.windows(2).all(|w| w[0].length_m <= w[1].length_m));
        assert_eq!(paths[49].index_in_enumeration, 50);
    }

    #[test]
    fn policy_validation() {
        let bad = ExplorationPolicy {
            batch_size: 0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = ExplorationPolicy {
            m_max: 10,
            batch_size: 100,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        assert!(ExplorationPolicy::default().validate().is_ok());
    }
}
