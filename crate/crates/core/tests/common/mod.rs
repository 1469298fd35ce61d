//! Brute-force reference implementations shared by the integration tests.
#![allow(dead_code)]

use std::cmp::Ordering;

use happypath_core::geo_grid::{BoundingBox, LocationGraph, EARTH_RADIUS_M};
use happypath_core::route_engine::Digraph;

/// `rows x cols` grid of 200 m cells.
pub fn grid(rows: usize, cols: usize) -> LocationGraph {
    let k = EARTH_RADIUS_M * std::f64::consts::PI / 180.0;
    let max_lat = 51.5 + (rows as f64 * 200.0 - 1.0) / k;
    let cos = (0.5 * (51.5 + max_lat)).to_radians().cos();
    let max_lon = -0.1 + (cols as f64 * 200.0 - 1.0) / (k * cos);
    let g = LocationGraph::build(BoundingBox::new(51.5, -0.1, max_lat, max_lon).unwrap(), 200.0).unwrap();
    assert_eq!((g.grid.rows, g.grid.cols), (rows, cols));
    g
}

/// Distance to `target` from every node, by repeated relaxation.
pub fn distances_to(graph: &Digraph, target: usize) -> Vec<Option<u64>> {
    let n = graph.n_nodes();
    let mut dist = vec![None; n];
    dist[target] = Some(0);
    loop {
        let mut changed = false;
        for u in 0..n {
            for &(v, w) in graph.out_edges(u) {
                if let Some(dv) = dist[v] {
                    let cand = dv + w;
                    if dist[u].is_none_or(|du| cand < du) {
                        dist[u] = Some(cand);
                        changed = true;
                    }
                }
            }
        }
        if !changed {
            return dist;
        }
    }
}

/// Every `s -> d` walk (loops allowed, may pass through `d`) no longer than
/// `limit`, sorted by length then node sequence.
pub fn walks_up_to(graph: &Digraph, s: usize, d: usize, limit: u64) -> Vec<(u64, Vec<usize>)> {
    let dist = distances_to(graph, d);
    let mut out = Vec::new();
    let mut path = vec![s];
    fn rec(
        g: &Digraph,
        d: usize,
        limit: u64,
        dist: &[Option<u64>],
        len: u64,
        path: &mut Vec<usize>,
        out: &mut Vec<(u64, Vec<usize>)>,
    ) {
        let u = *path.last().unwrap();
        if u == d {
            out.push((len, path.clone()));
        }
        for &(v, w) in g.out_edges(u) {
            match dist[v] {
                Some(dv) if len + w + dv <= limit => {
                    path.push(v);
                    rec(g, d, limit, dist, len + w, path, out);
                    path.pop();
                }
                _ => {}
            }
        }
    }
    if dist[s].is_some_and(|ds| ds <= limit) {
        rec(graph, d, limit, &dist, 0, &mut path, &mut out);
    }
    out.sort();
    out
}

/// Every loopless `s -> d` path no longer than `limit`.
pub fn simple_paths_up_to(graph: &Digraph, s: usize, d: usize, limit: u64) -> Vec<(u64, Vec<usize>)> {
    let dist = distances_to(graph, d);
    let mut out = Vec::new();
    let mut on_path = vec![false; graph.n_nodes()];
    fn rec(
        g: &Digraph,
        d: usize,
        limit: u64,
        dist: &[Option<u64>],
        len: u64,
        path: &mut Vec<usize>,
        on_path: &mut [bool],
        out: &mut Vec<(u64, Vec<usize>)>,
    ) {
        let u = *path.last().unwrap();
        if u == d {
            out.push((len, path.clone()));
            return;
        }
        for &(v, w) in g.out_edges(u) {
            if on_path[v] {
                continue;
            }
            match dist[v] {
                Some(dv) if len + w + dv <= limit => {
                    on_path[v] = true;
                    path.push(v);
                    rec(g, d, limit, dist, len + w, path, on_path, out);
                    path.pop();
                    on_path[v] = false;
                }
                _ => {}
            }
        }
    }
    if dist[s].is_some_and(|ds| ds <= limit) {
        on_path[s] = true;
        rec(graph, d, limit, &dist, 0, &mut vec![s], &mut on_path, &mut out);
    }
    out.sort();
    out
}

pub fn walk_length(graph: &Digraph, walk: &[usize]) -> u64 {
    walk.windows(2)
        .map(|w| graph.weight(w[0], w[1]).expect("walk uses graph edges"))
        .sum()
}

/// Checks that `got` (in emission order) is a valid first-k prefix of the
/// sorted oracle list `all`, which must hold every walk up to the last
/// emitted length. Returns a description of the first mismatch.
pub fn check_prefix(graph: &Digraph, got: &[(u64, Vec<usize>)], all: &[(u64, Vec<usize>)]) -> Result<(), String> {
    for (len, walk) in got {
        if walk_length(graph, walk) != *len {
            return Err(format!("reported length {len} for {walk:?}"));
        }
    }
    let got_lengths: Vec<u64> = got.iter().map(|w| w.0).collect();
    let want_lengths: Vec<u64> = all.iter().take(got.len()).map(|w| w.0).collect();
    if got_lengths != want_lengths {
        return Err(format!("lengths {got_lengths:?} != oracle {want_lengths:?}"));
    }
    let Some(&last) = got_lengths.last() else {
        return if all.is_empty() { Ok(()) } else { Err("enumeration empty, oracle not".into()) };
    };
    let mut mine: Vec<&(u64, Vec<usize>)> = got.iter().collect();
    mine.sort();
    // below the last length the sets must coincide, at it mine is a subset
    let below: Vec<&(u64, Vec<usize>)> = all.iter().filter(|w| w.0 < last).collect();
    let mine_below: Vec<&(u64, Vec<usize>)> = mine.iter().copied().filter(|w| w.0 < last).collect();
    if below != mine_below {
        return Err(format!("walk sets differ below length {last}"));
    }
    let at: Vec<&(u64, Vec<usize>)> = all.iter().filter(|w| w.0 == last).collect();
    let mut prev: Option<&(u64, Vec<usize>)> = None;
    for w in mine.iter().filter(|w| w.0 == last) {
        if prev == Some(*w) {
            return Err(format!("duplicate walk {:?}", w.1));
        }
        if !at.contains(w) {
            return Err(format!("walk {:?} not in oracle", w.1));
        }
        prev = Some(*w);
    }
    Ok(())
}

/// Exact comparison of average ranks `a_sum / a_len` and `b_sum / b_len`.
pub fn cmp_mean(a_sum: u64, a_len: usize, b_sum: u64, b_len: usize) -> Ordering {
    (u128::from(a_sum) * b_len as u128).cmp(&(u128::from(b_sum) * a_len as u128))
}

/// Best walk among `walks` by mean rank, then length, then cell order.
pub fn best_by_rank<'a>(walks: &'a [(u64, Vec<usize>)], ranks: &[u32]) -> &'a (u64, Vec<usize>) {
    let sum = |w: &[usize]| w.iter().map(|&c| u64::from(ranks[c])).sum::<u64>();
    walks
        .iter()
        .min_by(|a, b| {
            cmp_mean(sum(&a.1), a.1.len(), sum(&b.1), b.1.len())
                .then(a.0.cmp(&b.0))
                .then(a.1.cmp(&b.1))
        })
        .expect("nonempty")
}
