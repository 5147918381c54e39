//! Finite models of a metric graph and chip-firing on them.
//!
//! A [`Model`] subdivides every edge at a sorted list of interior offsets.
//! When all segments have one common length (a *uniform* model), a divisor
//! supported on model vertices is a chip configuration on a finite multigraph,
//! and firing a vertex set once moves each boundary chip exactly one segment.
//! Reduced divisors of such divisors with respect to a model vertex are again
//! supported on model vertices, so every reduction here is finite.

use std::collections::{BTreeSet, VecDeque};
use std::sync::Arc;

use num_traits::Zero;

use crate::divisor::Divisor;
use crate::error::{Error, Result};
use crate::graph::{EdgeId, MetricGraph, Point};
use crate::rational::{exact_quotient, gcd_all, int, to_usize, Rational};

const MAX_NODES: usize = 4_000_000;

#[derive(Debug, Clone)]
pub(crate) struct Model {
    graph: Arc<MetricGraph>,
    segment: Option<Rational>,
    breaks: Vec<Vec<Rational>>,
    first: Vec<usize>,
    adj: Vec<Vec<usize>>,
}

/// A recorded firing on a uniform model.
#[derive(Debug, Clone)]
pub(crate) enum SetFiring {
    /// Every node of `set` fires `times` times, each time by one segment.
    Repeat { set: Vec<bool>, times: i64 },
    /// The closure of `set` fires once by `steps` segments: the set grows by
    /// one node along each leaving direction after every segment.
    Sweep { set: Vec<bool>, steps: usize },
}

impl Model {
    fn from_breaks(graph: &Arc<MetricGraph>, breaks: Vec<Vec<Rational>>, segment: Option<Rational>) -> Result<Self> {
        let mut first = Vec::with_capacity(breaks.len());
        let mut next = graph.vertex_count();
        for b in &breaks {
            first.push(next);
            next += b.len();
            if next > MAX_NODES {
                return Err(Error::ModelTooLarge(next));
            }
        }
        let mut model = Model { graph: graph.clone(), segment, breaks, first, adj: vec![Vec::new(); next] };
        for (e, _) in graph.edges() {
            let chain = model.chain(e);
            for w in chain.windows(2) {
                if w[0] != w[1] {
                    model.adj[w[0]].push(w[1]);
                    model.adj[w[1]].push(w[0]);
                }
            }
        }
        Ok(model)
    }

    /// Equal segments of length `segment`, which must divide every edge.
    pub fn uniform(graph: &Arc<MetricGraph>, segment: &Rational) -> Result<Self> {
        let mut breaks = Vec::with_capacity(graph.edge_count());
        let mut total = 0usize;
        for (_, e) in graph.edges() {
            let n = exact_quotient(&e.length, segment)
                .and_then(|n| to_usize(&n))
                .ok_or_else(|| Error::XNotClosed(format!("segment does not divide edge {}", e.name)))?;
            total += n.saturating_sub(1);
            if total > MAX_NODES {
                return Err(Error::ModelTooLarge(total));
            }
            breaks.push((1..n).map(|k| segment * int(k as i64)).collect());
        }
        Self::from_breaks(graph, breaks, Some(segment.clone()))
    }

    /// Coarsest uniform model having every point of `marks` as a vertex,
    /// refined `resolution` times.
    pub fn uniform_for<'a>(
        graph: &Arc<MetricGraph>,
        marks: impl IntoIterator<Item = &'a Point>,
        resolution: u32,
    ) -> Result<Self> {
        let lengths: Vec<Rational> = graph.edges().map(|(_, e)| e.length.clone()).collect();
        let offsets: Vec<Rational> = marks.into_iter().filter_map(|p| p.offset().cloned()).collect();
        let unit = gcd_all(lengths.iter().chain(offsets.iter())).expect("graph has edges or marks");
        Self::uniform(graph, &(unit / int(resolution as i64)))
    }

    /// Vertices exactly at the graph vertices and at `marks`.
    pub fn marked<'a>(graph: &Arc<MetricGraph>, marks: impl IntoIterator<Item = &'a Point>) -> Result<Self> {
        let mut cuts: Vec<BTreeSet<Rational>> = vec![BTreeSet::new(); graph.edge_count()];
        for p in marks {
            graph.check_point(p)?;
            if let Point::Interior { edge, offset } = p {
                cuts[edge.0].insert(offset.clone());
            }
        }
        Self::from_breaks(graph, cuts.into_iter().map(|c| c.into_iter().collect()).collect(), None)
    }

    pub fn graph(&self) -> &Arc<MetricGraph> {
        &self.graph
    }

    pub fn segment(&self) -> Option<&Rational> {
        self.segment.as_ref()
    }

    pub fn len(&self) -> usize {
        self.adj.len()
    }

    #[cfg(test)]
    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adj[v]
    }

    /// Nodes along `e` from tail to head, endpoints included.
    pub fn chain(&self, e: EdgeId) -> Vec<usize> {
        let edge = self.graph.edge(e);
        let start = self.first[e.0];
        let mut out = Vec::with_capacity(self.breaks[e.0].len() + 2);
        out.push(edge.tail.0);
        out.extend(start..start + self.breaks[e.0].len());
        out.push(edge.head.0);
        out
    }

    /// Offsets of the nodes returned by [`Model::chain`].
    pub fn chain_offsets(&self, e: EdgeId) -> Vec<Rational> {
        let mut out = Vec::with_capacity(self.breaks[e.0].len() + 2);
        out.push(Rational::zero());
        out.extend(self.breaks[e.0].iter().cloned());
        out.push(self.graph.edge(e).length.clone());
        out
    }

    pub fn node(&self, p: &Point) -> Option<usize> {
        match p {
            Point::Vertex(v) => (v.0 < self.graph.vertex_count()).then_some(v.0),
            Point::Interior { edge, offset } => {
                let b = self.breaks.get(edge.0)?;
                b.binary_search(offset).ok().map(|i| self.first[edge.0] + i)
            }
        }
    }

    pub fn point(&self, node: usize) -> Point {
        let nv = self.graph.vertex_count();
        if node < nv {
            return Point::Vertex(crate::graph::VertexId(node));
        }
        let e = self.first.partition_point(|&f| f <= node) - 1;
        // Edges without breaks share their `first` with the next edge.
        let e = (0..=e).rev().find(|&i| node < self.first[i] + self.breaks[i].len()).expect("node in range");
        Point::Interior { edge: EdgeId(e), offset: self.breaks[e][node - self.first[e]].clone() }
    }

    #[cfg(test)]
    pub fn points(&self) -> Vec<Point> {
        (0..self.len()).map(|n| self.point(n)).collect()
    }

    /// Chip vector of a divisor supported on model vertices.
    pub fn chips(&self, d: &Divisor) -> Vec<i64> {
        let mut chips = vec![0i64; self.len()];
        for (p, c) in d.iter() {
            let n = self.node(p).expect("divisor support lies on model vertices");
            chips[n] += c;
        }
        chips
    }

    pub fn divisor(&self, chips: &[i64]) -> Divisor {
        let mut d = Divisor::zero(&self.graph);
        for (n, &c) in chips.iter().enumerate() {
            if c != 0 {
                d.add_unchecked(self.point(n), c);
            }
        }
        d
    }

    pub fn bfs_distances(&self, base: usize) -> Vec<usize> {
        let mut dist = vec![usize::MAX; self.len()];
        dist[base] = 0;
        let mut queue = VecDeque::from([base]);
        while let Some(v) = queue.pop_front() {
            for &w in &self.adj[v] {
                if dist[w] == usize::MAX {
                    dist[w] = dist[v] + 1;
                    queue.push_back(w);
                }
            }
        }
        dist
    }

    /// Fire spreading from `base`: each chip at a node stops one incoming
    /// fire; a node burns once more fires arrive than it has chips. Returns
    /// the burned flags and the number of fires that reached each node.
    pub fn burn_with_hits(&self, chips: &[i64], base: usize) -> (Vec<bool>, Vec<i64>) {
        let n = self.len();
        let mut burned = vec![false; n];
        let mut hits = vec![0i64; n];
        burned[base] = true;
        let mut queue = VecDeque::from([base]);
        while let Some(v) = queue.pop_front() {
            for &w in &self.adj[v] {
                if burned[w] {
                    continue;
                }
                hits[w] += 1;
                if hits[w] > chips[w] {
                    burned[w] = true;
                    queue.push_back(w);
                }
            }
        }
        (burned, hits)
    }

    pub fn burn(&self, chips: &[i64], base: usize) -> Vec<bool> {
        self.burn_with_hits(chips, base).0
    }

    pub fn fire(&self, chips: &mut [i64], set: &[bool], times: i64) {
        for (v, inside) in set.iter().enumerate() {
            if !inside {
                continue;
            }
            for &w in &self.adj[v] {
                if !set[w] {
                    chips[v] -= times;
                    chips[w] += times;
                }
            }
        }
    }

    /// Next node after `cur` when arriving from `prev` along a chain
    /// through an interior node.
    fn step(&self, prev: usize, cur: usize) -> usize {
        let n = &self.adj[cur];
        debug_assert_eq!(n.len(), 2);
        if n[0] == prev {
            n[1]
        } else {
            n[0]
        }
    }

    /// Whether a chip moving along an edge has to stop at `node`.
    fn is_event(&self, chips: &[i64], node: usize, base: usize) -> bool {
        node < self.graph.vertex_count() || node == base || chips[node] != 0
    }

    /// Leaving directions of `set` as (boundary node, first node outside).
    fn leaving(&self, set: &[bool]) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (x, &inside) in set.iter().enumerate() {
            if inside {
                out.extend(self.adj[x].iter().filter(|&&y| !set[y]).map(|&y| (x, y)));
            }
        }
        out
    }

    /// Node reached after `steps` segments from `x` through `y`.
    fn walk(&self, x: usize, y: usize, steps: usize) -> usize {
        let (mut prev, mut cur) = (x, y);
        for _ in 1..steps {
            let next = self.step(prev, cur);
            prev = cur;
            cur = next;
        }
        cur
    }

    /// Dhar iteration: while the fire from `base` leaves an unburned set,
    /// slide one chip along each leaving direction of that set until the
    /// first chip meets another chip, a graph vertex or the base. Requires
    /// chips to be non-negative away from `base`; that stays true.
    ///
    /// Every chip only moves toward the burned region, and the number of
    /// boundary chips that can stop before reaching `base` is finite, which
    /// bounds the number of sweeps.
    pub fn dhar(&self, chips: &mut [i64], base: usize, mut log: Option<&mut Vec<SetFiring>>) {
        loop {
            let burned = self.burn(chips, base);
            if burned.iter().all(|&b| b) {
                return;
            }
            let set: Vec<bool> = burned.iter().map(|b| !b).collect();
            let dirs = self.leaving(&set);
            // The unburned set withstands the fire, so it has a boundary.
            assert!(!dirs.is_empty(), "unburned set has no boundary");
            let mut steps = usize::MAX;
            for &(x, y) in &dirs {
                let (mut prev, mut cur, mut run) = (x, y, 1);
                while run < steps && !self.is_event(chips, cur, base) {
                    let next = self.step(prev, cur);
                    prev = cur;
                    cur = next;
                    run += 1;
                }
                steps = steps.min(run);
            }
            for &(x, y) in &dirs {
                let target = self.walk(x, y, steps);
                chips[x] -= 1;
                chips[target] += 1;
            }
            debug_assert!((0..self.len()).all(|v| v == base || chips[v] >= 0));
            if let Some(log) = log.as_deref_mut() {
                log.push(SetFiring::Sweep { set, steps });
            }
        }
    }

    /// Expands a recorded firing into `(set, times)` firings by one segment.
    pub fn unit_firings(&self, firing: &SetFiring) -> Vec<(Vec<bool>, i64)> {
        match firing {
            SetFiring::Repeat { set, times } => vec![(set.clone(), *times)],
            SetFiring::Sweep { set, steps } => {
                let dirs = self.leaving(set);
                let mut cur = set.clone();
                let mut heads: Vec<(usize, usize)> = dirs;
                let mut out = Vec::with_capacity(*steps);
                for k in 0..*steps {
                    out.push((cur.clone(), 1));
                    if k + 1 < *steps {
                        cur = cur.clone();
                        for h in heads.iter_mut() {
                            cur[h.1] = true;
                            *h = (h.1, self.step(h.0, h.1));
                        }
                    }
                }
                out
            }
        }
    }

    /// Moves all debt away from non-base nodes onto `base`.
    ///
    /// Layers are processed from the farthest BFS distance inward. For layer
    /// `m`, the ball of radius `m - 1` around `base` is fired just often
    /// enough to pay every debt in layer `m`; only layers `m - 1` and `m`
    /// change. The potential is the vector of total debt per layer, read from
    /// the outside in: each firing zeroes the outermost indebted layer and
    /// leaves every layer beyond it untouched, so it decreases
    /// lexicographically.
    pub fn collect_debt(&self, chips: &mut [i64], base: usize, mut log: Option<&mut Vec<SetFiring>>) {
        let dist = self.bfs_distances(base);
        let depth = dist.iter().copied().max().unwrap_or(0);
        let mut layers = vec![Vec::new(); depth + 1];
        for (v, &d) in dist.iter().enumerate() {
            layers[d].push(v);
        }
        for m in (1..=depth).rev() {
            let mut times = 0i64;
            for &v in &layers[m] {
                if chips[v] < 0 {
                    let inner = self.adj[v].iter().filter(|&&w| dist[w] + 1 == m).count() as i64;
                    times = times.max((-chips[v] + inner - 1) / inner);
                }
            }
            if times == 0 {
                continue;
            }
            let set: Vec<bool> = dist.iter().map(|&d| d < m).collect();
            self.fire(chips, &set, times);
            assert!(layers[m].iter().all(|&v| chips[v] >= 0), "layer {m} still in debt");
            if let Some(log) = log.as_deref_mut() {
                log.push(SetFiring::Repeat { set, times });
            }
        }
    }

    /// The `base`-reduced chip configuration equivalent to `chips`.
    pub fn reduce(&self, chips: &mut [i64], base: usize, mut log: Option<&mut Vec<SetFiring>>) {
        self.collect_debt(chips, base, log.as_deref_mut());
        self.dhar(chips, base, log);
    }
}
