//! Finite graphs and the rooted d-ary tree with breadth-first numbering.
//!
//! In a tree of degree `d` the root is vertex `0`, the children of `v` are
//! `d*v + 1 ..= d*v + d` and level `m` is the contiguous id range
//! `[(d^m - 1)/(d - 1), (d^(m+1) - 1)/(d - 1))`.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::vertex_set::VertexSet;

pub type Vertex = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TopologyKind {
    Generic,
    RootedTree { degree: usize, height: usize },
}

/// A directed edge `(from, to)`; each undirected edge contributes two arcs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Arc {
    pub from: Vertex,
    pub to: Vertex,
}

#[derive(Debug, Clone)]
pub struct GraphTopology {
    adjacency: Vec<Vec<Vertex>>,
    edges: Vec<(Vertex, Vertex)>,
    arcs: Vec<Arc>,
    out_arcs: Vec<Vec<usize>>,
    kind: TopologyKind,
}

/// Number of vertices of the d-ary tree of height n, or `None` on overflow.
pub fn dary_tree_size(d: usize, n: usize) -> Option<usize> {
    // 1 + d + ... + d^n
    let mut total: usize = 0;
    let mut layer: usize = 1;
    for m in 0..=n {
        total = total.checked_add(layer)?;
        if m < n {
            layer = layer.checked_mul(d)?;
        }
    }
    Some(total)
}

impl GraphTopology {
    /// Generic graph from an undirected edge list.
    pub fn from_edges(vertex_count: usize, edges: &[(Vertex, Vertex)]) -> Result<Self> {
        let mut adjacency = vec![Vec::new(); vertex_count];
        let mut canon = Vec::with_capacity(edges.len());
        for &(u, v) in edges {
            if u >= vertex_count || v >= vertex_count {
                return Err(Error::domain(format!(
                    "edge ({u}, {v}) references a vertex outside 0..{vertex_count}"
                )));
            }
            if u == v {
                return Err(Error::domain(format!("self-loop at vertex {u}")));
            }
            if adjacency[u].contains(&v) {
                return Err(Error::domain(format!("duplicate edge ({u}, {v})")));
            }
            adjacency[u].push(v);
            adjacency[v].push(u);
            canon.push((u.min(v), u.max(v)));
        }
        Ok(Self::assemble(adjacency, canon, TopologyKind::Generic))
    }

    fn assemble(
        adjacency: Vec<Vec<Vertex>>,
        edges: Vec<(Vertex, Vertex)>,
        kind: TopologyKind,
    ) -> Self {
        let mut arcs = Vec::with_capacity(2 * edges.len());
        let mut out_arcs = vec![Vec::new(); adjacency.len()];
        for &(u, v) in &edges {
            out_arcs[u].push(arcs.len());
            arcs.push(Arc { from: u, to: v });
            out_arcs[v].push(arcs.len());
            arcs.push(Arc { from: v, to: u });
        }
        GraphTopology {
            adjacency,
            edges,
            arcs,
            out_arcs,
            kind,
        }
    }

    /// Rooted tree of height `n` in which every non-leaf has `d` children.
    pub fn dary_tree(d: usize, n: usize) -> Result<Self> {
        if d < 2 {
            return Err(Error::domain(format!("tree degree must be >= 2, got {d}")));
        }
        let size = dary_tree_size(d, n)
            .ok_or_else(|| Error::Size(format!("d={d}, n={n} overflows the vertex count")))?;
        let mut adjacency = vec![Vec::new(); size];
        let mut edges = Vec::with_capacity(size.saturating_sub(1));
        for c in 1..size {
            let p = (c - 1) / d;
            adjacency[p].push(c);
            adjacency[c].push(p);
            edges.push((p, c));
        }
        Ok(Self::assemble(
            adjacency,
            edges,
            TopologyKind::RootedTree {
                degree: d,
                height: n,
            },
        ))
    }

    pub fn path(k: usize) -> Self {
        let edges: Vec<_> = (1..k).map(|i| (i - 1, i)).collect();
        Self::from_edges(k, &edges).expect("path edges are valid")
    }

    pub fn single_vertex() -> Self {
        Self::path(1)
    }

    /// Parses the edge-list text format: one `u v` pair per line, `#` comments.
    /// The vertex count is one more than the largest id seen (or the value of
    /// an optional `# vertices N` header, if larger).
    pub fn parse_edge_list(text: &str) -> Result<Self> {
        let mut edges = Vec::new();
        let mut count = 0usize;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if let Some(rest) = line.strip_prefix('#') {
                let mut words = rest.split_whitespace();
                if words.next() == Some("vertices") {
                    if let Some(n) = words.next().and_then(|w| w.parse::<usize>().ok()) {
                        count = count.max(n);
                    }
                }
                continue;
            }
            if line.is_empty() {
                continue;
            }
            let ids: Vec<&str> = line.split_whitespace().collect();
            if ids.len() != 2 {
                return Err(Error::Parse(format!(
                    "line {}: expected `u v`, got {line:?}",
                    lineno + 1
                )));
            }
            let parse = |s: &str| {
                s.parse::<usize>()
                    .map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 1)))
            };
            let (u, v) = (parse(ids[0])?, parse(ids[1])?);
            count = count.max(u + 1).max(v + 1);
            edges.push((u, v));
        }
        Self::from_edges(count, &edges)
    }

    pub fn to_edge_list(&self) -> String {
        let mut out = format!("# vertices {}\n", self.vertex_count());
        for &(u, v) in &self.edges {
            out.push_str(&format!("{u} {v}\n"));
        }
        out
    }

    pub fn vertex_count(&self) -> usize {
        self.adjacency.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn kind(&self) -> TopologyKind {
        self.kind
    }

    pub fn edges(&self) -> &[(Vertex, Vertex)] {
        &self.edges
    }

    pub fn neighbors(&self, v: Vertex) -> &[Vertex] {
        &self.adjacency[v]
    }

    pub fn degree(&self, v: Vertex) -> usize {
        self.adjacency[v].len()
    }

    pub fn arcs(&self) -> &[Arc] {
        &self.arcs
    }

    /// Arc ids leaving `v`.
    pub fn out_arcs(&self, v: Vertex) -> &[usize] {
        &self.out_arcs[v]
    }

    pub fn empty_set(&self) -> VertexSet {
        VertexSet::empty(self.vertex_count())
    }

    pub fn full_set(&self) -> VertexSet {
        VertexSet::full(self.vertex_count())
    }

    pub fn is_tree(&self) -> bool {
        matches!(self.kind, TopologyKind::RootedTree { .. })
    }

    /// `(degree, height)` for rooted trees, domain error otherwise.
    pub fn tree_shape(&self) -> Result<(usize, usize)> {
        match self.kind {
            TopologyKind::RootedTree { degree, height } => Ok((degree, height)),
            TopologyKind::Generic => Err(Error::domain(
                "operation requires a rooted d-ary tree, got a generic graph",
            )),
        }
    }

    pub fn root(&self) -> Result<Vertex> {
        self.tree_shape().map(|_| 0)
    }

    fn check_vertex(&self, v: Vertex) -> Result<()> {
        if v >= self.vertex_count() {
            Err(Error::domain(format!(
                "vertex {v} outside 0..{}",
                self.vertex_count()
            )))
        } else {
            Ok(())
        }
    }

    /// First id and length of level `m`.
    fn level_span(d: usize, m: usize) -> (usize, usize) {
        let width = d.pow(m as u32);
        let start = (width - 1) / (d - 1);
        (start, width)
    }

    /// Distance from the root.
    pub fn depth(&self, v: Vertex) -> Result<usize> {
        let (d, n) = self.tree_shape()?;
        self.check_vertex(v)?;
        for m in 0..=n {
            let (start, width) = Self::level_span(d, m);
            if v < start + width {
                return Ok(m);
            }
        }
        unreachable!("vertex id checked against tree size")
    }

    /// Vertices at distance `m` from the root.
    pub fn level(&self, m: usize) -> Result<VertexSet> {
        let (lo, hi) = self.level_range(m)?;
        Ok(VertexSet::range(self.vertex_count(), lo, hi))
    }

    /// Id range `[lo, hi)` of level `m`.
    pub fn level_range(&self, m: usize) -> Result<(usize, usize)> {
        let (d, n) = self.tree_shape()?;
        if m > n {
            return Err(Error::domain(format!("level {m} exceeds tree height {n}")));
        }
        let (start, width) = Self::level_span(d, m);
        Ok((start, start + width))
    }

    pub fn children(&self, v: Vertex) -> Result<std::ops::Range<Vertex>> {
        let (d, _) = self.tree_shape()?;
        self.check_vertex(v)?;
        let first = d * v + 1;
        if first >= self.vertex_count() {
            Ok(first..first)
        } else {
            Ok(first..first + d)
        }
    }

    /// Parent of `y`, `None` for the root.
    pub fn parent(&self, y: Vertex) -> Result<Option<Vertex>> {
        let (d, _) = self.tree_shape()?;
        self.check_vertex(y)?;
        Ok(if y == 0 { None } else { Some((y - 1) / d) })
    }

    /// The `i`-th ancestor of `y`; `parent_i(y, 1)` is the parent.
    pub fn parent_i(&self, y: Vertex, i: usize) -> Result<Vertex> {
        let depth = self.depth(y)?;
        if i > depth {
            return Err(Error::domain(format!(
                "vertex {y} at depth {depth} has no ancestor {i} levels up"
            )));
        }
        let (d, _) = self.tree_shape()?;
        let mut v = y;
        for _ in 0..i {
            v = (v - 1) / d;
        }
        Ok(v)
    }

    pub fn is_ancestor_or_self(&self, x: Vertex, y: Vertex) -> Result<bool> {
        let (dx, dy) = (self.depth(x)?, self.depth(y)?);
        if dx > dy {
            return Ok(false);
        }
        Ok(self.parent_i(y, dy - dx)? == x)
    }

    /// Height of the subtree rooted at `x`.
    pub fn subtree_height(&self, x: Vertex) -> Result<usize> {
        let (_, n) = self.tree_shape()?;
        Ok(n - self.depth(x)?)
    }

    /// Descendants of `x` at distance `m` below it, as an id range.
    pub fn sublevel_range(&self, x: Vertex, m: usize) -> Result<(usize, usize)> {
        let (d, _) = self.tree_shape()?;
        let below = self.subtree_height(x)?;
        if m > below {
            return Err(Error::domain(format!(
                "sublevel {m} exceeds the height {below} of the subtree at {x}"
            )));
        }
        // Leftmost descendant at distance m: apply v -> d*v + 1 m times.
        let mut lo = x;
        for _ in 0..m {
            lo = d * lo + 1;
        }
        Ok((lo, lo + d.pow(m as u32)))
    }

    pub fn sublevel(&self, x: Vertex, m: usize) -> Result<VertexSet> {
        let (lo, hi) = self.sublevel_range(x, m)?;
        Ok(VertexSet::range(self.vertex_count(), lo, hi))
    }

    /// `x` and all of its descendants.
    pub fn subtree(&self, x: Vertex) -> Result<VertexSet> {
        let below = self.subtree_height(x)?;
        self.subtree_ball(x, below)
    }

    /// Descendants of `x` (including `x`) within distance `k`.
    pub fn subtree_ball(&self, x: Vertex, k: usize) -> Result<VertexSet> {
        let below = self.subtree_height(x)?;
        let mut s = self.empty_set();
        for m in 0..=k.min(below) {
            let (lo, hi) = self.sublevel_range(x, m)?;
            for v in lo..hi {
                s.insert(v);
            }
        }
        Ok(s)
    }

    /// Subtree at `x` listed in its own breadth-first order, so that index `i`
    /// of the result is vertex `i` of a standalone tree of the subtree's height.
    pub fn subtree_embedding(&self, x: Vertex) -> Result<Vec<Vertex>> {
        let below = self.subtree_height(x)?;
        let mut out = Vec::new();
        for m in 0..=below {
            let (lo, hi) = self.sublevel_range(x, m)?;
            out.extend(lo..hi);
        }
        Ok(out)
    }

    /// Graph distance; uses ancestry on trees and BFS otherwise.
    /// Returns `None` when `y` is unreachable from `x`.
    pub fn dist(&self, x: Vertex, y: Vertex) -> Result<Option<usize>> {
        self.check_vertex(x)?;
        self.check_vertex(y)?;
        if self.is_tree() {
            let (mut a, mut b) = (x, y);
            let (mut da, mut db) = (self.depth(a)?, self.depth(b)?);
            let mut steps = 0;
            let (d, _) = self.tree_shape()?;
            while da > db {
                a = (a - 1) / d;
                da -= 1;
                steps += 1;
            }
            while db > da {
                b = (b - 1) / d;
                db -= 1;
                steps += 1;
            }
            while a != b {
                a = (a - 1) / d;
                b = (b - 1) / d;
                steps += 2;
            }
            return Ok(Some(steps));
        }
        Ok(self.bfs_distances(x)[y])
    }

    pub fn bfs_distances(&self, x: Vertex) -> Vec<Option<usize>> {
        let mut dist = vec![None; self.vertex_count()];
        let mut queue = VecDeque::new();
        dist[x] = Some(0);
        queue.push_back(x);
        while let Some(u) = queue.pop_front() {
            let du = dist[u].expect("queued vertices have a distance");
            for &w in &self.adjacency[u] {
                if dist[w].is_none() {
                    dist[w] = Some(du + 1);
                    queue.push_back(w);
                }
            }
        }
        dist
    }

    /// Ball `B(x, r)` in the graph metric.
    pub fn ball(&self, x: Vertex, r: usize) -> Result<VertexSet> {
        self.check_vertex(x)?;
        let dist = self.bfs_distances(x);
        Ok(VertexSet::from_iter_in(
            self.vertex_count(),
            dist.iter()
                .enumerate()
                .filter(|(_, d)| matches!(d, Some(k) if *k <= r))
                .map(|(v, _)| v),
        ))
    }
}
