//! Lazy k-shortest walk enumeration (Eppstein).
//!
//! A reverse Dijkstra from the target gives the shortest-path tree. Every
//! non-tree edge `(u, w)` is a *sidetrack* with detour cost
//! `delta = len(u, w) + dist(w) - dist(u) >= 0`, and every s-t walk is the
//! tree path from `s` with an ordered sequence of sidetracks spliced in.
//! For each vertex `v` a persistent leftist heap `H(v)` holds the sidetracks
//! leaving the tree path `v -> t`; `H(v)` shares structure with
//! `H(next(v))`, so all heaps take `O(E log V)` nodes together. Walks are then
//! enumerated best-first over the implicit path graph: from the state whose
//! last sidetrack is heap node `x`, either swap `x` for one of its heap
//! children or append the root of `H(head(x))`.
//!
//! Weights are integers so that lengths, and therefore ties, are exact.
//!
//! Each emitted walk also carries the sum of per-node costs over every visit
//! and the number of visits. Both are additive over sidetracks, so callers
//! can score millions of walks without materializing them.

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

const NIL: u32 = u32::MAX;

/// Directed graph with non-negative integer edge weights.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Digraph {
    heads: Vec<Vec<(usize, u64)>>,
}

impl Digraph {
    pub fn new(n: usize) -> Self {
        Self {
            heads: vec![Vec::new(); n],
        }
    }

    pub fn from_adjacency(heads: Vec<Vec<(usize, u64)>>) -> Self {
        Self { heads }
    }

    pub fn add_edge(&mut self, from: usize, to: usize, weight: u64) {
        self.heads[from].push((to, weight));
    }

    pub fn n_nodes(&self) -> usize {
        self.heads.len()
    }

    pub fn out_edges(&self, v: usize) -> &[(usize, u64)] {
        &self.heads[v]
    }

    /// Weight of the lightest `u -> v` edge.
    pub fn weight(&self, u: usize, v: usize) -> Option<u64> {
        self.heads[u].iter().filter(|e| e.0 == v).map(|e| e.1).min()
    }
}

/// Shortest-path tree towards a fixed target.
#[derive(Debug, Clone)]
pub struct ReverseTree {
    pub target: usize,
    /// `u64::MAX` where the target is unreachable.
    pub dist: Vec<u64>,
    /// Next hop towards the target; `None` at the target and where unreachable.
    pub next: Vec<Option<usize>>,
    /// Index into `out_edges(v)` of the tree edge.
    next_edge: Vec<u32>,
}

impl ReverseTree {
    /// Dijkstra on reversed edges. Among equally short continuations the
    /// smallest next hop wins, so following `next` spells the
    /// lexicographically smallest shortest path.
    pub fn build(graph: &Digraph, target: usize) -> Self {
        let n = graph.n_nodes();
        let mut rev: Vec<Vec<(usize, u64)>> = vec![Vec::new(); n];
        for u in 0..n {
            for &(v, w) in graph.out_edges(u) {
                rev[v].push((u, w));
            }
        }
        let mut dist = vec![u64::MAX; n];
        let mut heap = BinaryHeap::new();
        dist[target] = 0;
        heap.push(Reverse((0u64, target)));
        while let Some(Reverse((d, v))) = heap.pop() {
            if d > dist[v] {
                continue;
            }
            for &(u, w) in &rev[v] {
                let nd = d.saturating_add(w);
                if nd < dist[u] {
                    dist[u] = nd;
                    heap.push(Reverse((nd, u)));
                }
            }
        }

        let mut next = vec![None; n];
        let mut next_edge = vec![NIL; n];
        for u in 0..n {
            if u == target || dist[u] == u64::MAX {
                continue;
            }
            let mut best: Option<(usize, usize)> = None;
            for (i, &(v, w)) in graph.out_edges(u).iter().enumerate() {
                if dist[v] != u64::MAX && dist[v] + w == dist[u] && best.is_none_or(|(bv, _)| v < bv) {
                    best = Some((v, i));
                }
            }
            let (v, i) = best.expect("reachable vertex has a tree edge");
            next[u] = Some(v);
            next_edge[u] = i as u32;
        }
        Self {
            target,
            dist,
            next,
            next_edge,
        }
    }

    pub fn reaches_target(&self, v: usize) -> bool {
        self.dist[v] != u64::MAX
    }

    /// Tree path `v -> target`.
    pub fn path_from(&self, mut v: usize) -> Option<Vec<usize>> {
        if !self.reaches_target(v) {
            return None;
        }
        let mut path = vec![v];
        while let Some(n) = self.next[v] {
            path.push(n);
            v = n;
        }
        Some(path)
    }
}

#[derive(Debug, Clone, Copy)]
struct Sidetrack {
    tail: u32,
    head: u32,
    delta: u64,
    /// Change in node-cost sum and visit count when spliced in.
    cost_delta: i64,
    visit_delta: i64,
}

#[derive(Debug, Clone, Copy)]
struct HeapNode {
    sidetrack: u32,
    left: u32,
    right: u32,
    /// Leftist null-path length.
    npl: u32,
}

/// Arena of persistent leftist heaps keyed by sidetrack delta.
#[derive(Debug, Default)]
struct HeapArena {
    nodes: Vec<HeapNode>,
}

impl HeapArena {
    fn npl(&self, h: u32) -> u32 {
        if h == NIL {
            0
        } else {
            self.nodes[h as usize].npl
        }
    }

    fn key(&self, sidetracks: &[Sidetrack], h: u32) -> (u64, u32) {
        let s = self.nodes[h as usize].sidetrack;
        (sidetracks[s as usize].delta, s)
    }

    fn singleton(&mut self, sidetrack: u32) -> u32 {
        self.nodes.push(HeapNode {
            sidetrack,
            left: NIL,
            right: NIL,
            npl: 1,
        });
        (self.nodes.len() - 1) as u32
    }

    /// Non-destructive merge; copies only the right spine.
    fn merge(&mut self, sidetracks: &[Sidetrack], a: u32, b: u32) -> u32 {
        if a == NIL {
            return b;
        }
        if b == NIL {
            return a;
        }
        let (top, other) = if self.key(sidetracks, a) <= self.key(sidetracks, b) {
            (a, b)
        } else {
            (b, a)
        };
        let node = self.nodes[top as usize];
        let merged = self.merge(sidetracks, node.right, other);
        let (left, right) = if self.npl(node.left) >= self.npl(merged) {
            (node.left, merged)
        } else {
            (merged, node.left)
        };
        self.nodes.push(HeapNode {
            sidetrack: node.sidetrack,
            left,
            right,
            npl: self.npl(right) + 1,
        });
        (self.nodes.len() - 1) as u32
    }
}

/// One enumerated walk, identified by its slot in the enumerator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WalkHandle {
    /// 1-based position in the enumeration.
    pub index: usize,
    pub length: u64,
    /// Sum of node costs over all visits (each repeat counted).
    pub cost_sum: u64,
    /// Number of nodes on the walk, repeats included.
    pub visits: u64,
    state: u32,
}

#[derive(Debug, Clone, Copy)]
struct State {
    sidetrack: u32,
    /// State holding the preceding sidetracks, or `NIL`.
    prefix: u32,
    /// Earliest sidetrack on the walk.
    first: u32,
    length: u64,
    cost_sum: u64,
    visits: u64,
}

// Queue key: length, then prefix state (NIL first), then heap node. A heap
// node is reached at most once per prefix, so keys are unique and the
// order is total.
fn pending_key(length: u64, prefix: u32, node: u32) -> u128 {
    (u128::from(length) << 64) | (u128::from(prefix.wrapping_add(1)) << 32) | u128::from(node)
}

fn unpack(key: u128) -> (u64, u32, u32) {
    ((key >> 64) as u64, ((key >> 32) as u32).wrapping_sub(1), key as u32)
}

/// Walks from `source` to `target` in nondecreasing length. Equal lengths
/// come out in a fixed order determined by the graph alone.
#[derive(Debug)]
pub struct WalkEnumerator<'g> {
    graph: &'g Digraph,
    tree: ReverseTree,
    source: usize,
    sidetracks: Vec<Sidetrack>,
    arena: HeapArena,
    /// Root of `H(v)` per vertex.
    roots: Vec<u32>,
    queue: BinaryHeap<Reverse<u128>>,
    states: Vec<State>,
    emitted: usize,
    first_pending: bool,
    base_cost: u64,
    base_visits: u64,
}

impl<'g> WalkEnumerator<'g> {
    pub fn new(graph: &'g Digraph, source: usize, target: usize) -> Self {
        Self::with_node_costs(graph, source, target, &vec![0; graph.n_nodes()])
    }

    /// `node_costs[v]` is added to a walk's `cost_sum` on every visit of `v`.
    pub fn with_node_costs(graph: &'g Digraph, source: usize, target: usize, node_costs: &[u64]) -> Self {
        assert_eq!(node_costs.len(), graph.n_nodes(), "one cost per node");
        let n = graph.n_nodes();
        let tree = ReverseTree::build(graph, target);

        // node-cost sum and visit count along the tree path v -> target
        let mut order = Vec::with_capacity(n);
        let mut children: Vec<Vec<usize>> = vec![Vec::new(); n];
        for v in 0..n {
            if let Some(p) = tree.next[v] {
                children[p].push(v);
            }
        }
        order.push(target);
        let mut i = 0;
        while i < order.len() {
            let v = order[i];
            order.extend(children[v].iter().copied());
            i += 1;
        }
        let mut path_cost = vec![0u64; n];
        let mut path_visits = vec![0u64; n];
        for &v in &order {
            let (c, k) = tree.next[v].map_or((0, 0), |p| (path_cost[p], path_visits[p]));
            path_cost[v] = c + node_costs[v];
            path_visits[v] = k + 1;
        }

        let mut sidetracks = Vec::new();
        let mut out_of: Vec<Vec<u32>> = vec![Vec::new(); n];
        for u in 0..n {
            if !tree.reaches_target(u) {
                continue;
            }
            for (i, &(w, len)) in graph.out_edges(u).iter().enumerate() {
                if !tree.reaches_target(w) || tree.next_edge[u] == i as u32 {
                    continue;
                }
                let delta = len + tree.dist[w] - tree.dist[u];
                out_of[u].push(sidetracks.len() as u32);
                sidetracks.push(Sidetrack {
                    tail: u as u32,
                    head: w as u32,
                    delta,
                    cost_delta: node_costs[u] as i64 + path_cost[w] as i64 - path_cost[u] as i64,
                    visit_delta: 1 + path_visits[w] as i64 - path_visits[u] as i64,
                });
            }
        }

        let mut arena = HeapArena::default();
        let mut roots = vec![NIL; n];
        for &v in &order {
            let mut h = tree.next[v].map_or(NIL, |p| roots[p]);
            for &s in &out_of[v] {
                let single = arena.singleton(s);
                h = arena.merge(&sidetracks, h, single);
            }
            roots[v] = h;
        }

        let reachable = tree.reaches_target(source);
        Self {
            graph,
            base_cost: path_cost[source],
            base_visits: path_visits[source],
            tree,
            source,
            sidetracks,
            arena,
            roots,
            queue: BinaryHeap::new(),
            states: Vec::new(),
            emitted: 0,
            first_pending: reachable,
        }
    }

    pub fn tree(&self) -> &ReverseTree {
        &self.tree
    }

    pub fn graph(&self) -> &Digraph {
        self.graph
    }

    pub fn emitted(&self) -> usize {
        self.emitted
    }

    // length, cost sum and visits of the walk a prefix state stands for
    fn prefix_totals(&self, prefix: u32) -> (u64, u64, u64) {
        if prefix == NIL {
            (self.tree.dist[self.source], self.base_cost, self.base_visits)
        } else {
            let st = &self.states[prefix as usize];
            (st.length, st.cost_sum, st.visits)
        }
    }

    fn push(&mut self, prefix_length: u64, node: u32, prefix: u32) {
        let s = &self.sidetracks[self.arena.nodes[node as usize].sidetrack as usize];
        self.queue.push(Reverse(pending_key(prefix_length + s.delta, prefix, node)));
    }

    /// Next walk, or `None` once every walk has been produced.
    pub fn next_walk(&mut self) -> Option<WalkHandle> {
        if self.first_pending {
            self.first_pending = false;
            self.emitted += 1;
            let length = self.tree.dist[self.source];
            let root = self.roots[self.source];
            if root != NIL {
                self.push(length, root, NIL);
            }
            return Some(WalkHandle {
                index: self.emitted,
                length,
                cost_sum: self.base_cost,
                visits: self.base_visits,
                state: NIL,
            });
        }
        let Reverse(key) = self.queue.pop()?;
        let (length, prefix, node_id) = unpack(key);
        let node = self.arena.nodes[node_id as usize];
        let cur = self.sidetracks[node.sidetrack as usize];
        let (base_length, base_cost, base_visits) = self.prefix_totals(prefix);
        let cost_sum = apply(base_cost, cur.cost_delta);
        let visits = apply(base_visits, cur.visit_delta);
        let state = self.states.len() as u32;
        let first = if prefix == NIL {
            node.sidetrack
        } else {
            self.states[prefix as usize].first
        };
        self.states.push(State {
            sidetrack: node.sidetrack,
            prefix,
            first,
            length,
            cost_sum,
            visits,
        });
        // swap the last sidetrack for a heap child
        for child in [node.left, node.right] {
            if child != NIL {
                self.push(base_length, child, prefix);
            }
        }
        // append one more sidetrack after this one
        let root = self.roots[cur.head as usize];
        if root != NIL {
            self.push(length, root, state);
        }

        self.emitted += 1;
        Some(WalkHandle {
            index: self.emitted,
            length,
            cost_sum,
            visits,
            state,
        })
    }

    fn splices(&self, walk: &WalkHandle) -> Vec<Sidetrack> {
        let mut splices = Vec::new();
        let mut s = walk.state;
        while s != NIL {
            let st = self.states[s as usize];
            splices.push(self.sidetracks[st.sidetrack as usize]);
            s = st.prefix;
        }
        splices.reverse();
        splices
    }

    // Feeds the node sequence to `visit` until it returns false.
    fn walk_nodes(&self, walk: &WalkHandle, mut visit: impl FnMut(usize) -> bool) {
        let mut cur = self.source;
        if !visit(cur) {
            return;
        }
        for st in self.splices(walk) {
            while cur != st.tail as usize {
                cur = self.tree.next[cur].expect("sidetrack tail lies on the tree path");
                if !visit(cur) {
                    return;
                }
            }
            cur = st.head as usize;
            if !visit(cur) {
                return;
            }
        }
        while let Some(n) = self.tree.next[cur] {
            cur = n;
            if !visit(cur) {
                return;
            }
        }
    }

    /// Node sequence of a walk produced by this enumerator.
    pub fn nodes(&self, walk: &WalkHandle) -> Vec<usize> {
        let mut path = Vec::new();
        self.walk_nodes(walk, |v| {
            path.push(v);
            true
        });
        path
    }

    /// Lexicographic comparison of a walk's node sequence with `other`,
    /// stopping at the first difference.
    pub fn cmp_nodes(&self, walk: &WalkHandle, other: &[usize]) -> Ordering {
        // most comparisons settle before the end of the first splice
        if walk.state != NIL {
            let first = self.sidetracks[self.states[walk.state as usize].first as usize];
            let mut cur = self.source;
            let mut i = 0;
            loop {
                match other.get(i).map(|o| cur.cmp(o)) {
                    None => return Ordering::Greater,
                    Some(Ordering::Equal) => {}
                    Some(ord) => return ord,
                }
                i += 1;
                if cur == first.head as usize && i > 1 {
                    break;
                }
                cur = if cur == first.tail as usize {
                    first.head as usize
                } else {
                    self.tree.next[cur].expect("sidetrack tail lies on the tree path")
                };
            }
        }
        let mut i = 0;
        let mut ord = Ordering::Equal;
        self.walk_nodes(walk, |v| {
            ord = match other.get(i) {
                None => Ordering::Greater,
                Some(o) => v.cmp(o),
            };
            i += 1;
            ord == Ordering::Equal
        });
        if ord == Ordering::Equal && i < other.len() {
            Ordering::Less
        } else {
            ord
        }
    }
}

fn apply(value: u64, delta: i64) -> u64 {
    (value as i64 + delta) as u64
}

impl Iterator for WalkEnumerator<'_> {
    type Item = (Vec<usize>, u64);

    fn next(&mut self) -> Option<Self::Item> {
        let w = self.next_walk()?;
        Some((self.nodes(&w), w.length))
    }
}
