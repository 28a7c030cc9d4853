//! Partitioned simple graphs, bipartite views and edge-set colourings.

use std::collections::{BTreeMap, HashMap};

use fixedbitset::FixedBitSet;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Edge = (usize, usize);

/// Canonical `(min, max)` form of an undirected edge.
pub fn edge_key(u: usize, v: usize) -> Edge {
    if u < v {
        (u, v)
    } else {
        (v, u)
    }
}

pub(crate) fn bitset_from(len: usize, items: impl IntoIterator<Item = usize>) -> FixedBitSet {
    let mut b = FixedBitSet::with_capacity(len);
    for i in items {
        b.insert(i);
    }
    b
}

/// A simple undirected graph on `0..n` together with an ordered vertex partition.
#[derive(Clone, Debug)]
pub struct PartitionedGraph {
    part_of: Vec<usize>,
    parts: Vec<Vec<usize>>,
    adj: Vec<Vec<usize>>,
    rows: Vec<FixedBitSet>,
    edges: Vec<Edge>,
}

impl PartialEq for PartitionedGraph {
    fn eq(&self, other: &Self) -> bool {
        self.parts == other.parts && self.edges == other.edges
    }
}

impl PartitionedGraph {
    /// Vertices are numbered consecutively through the parts: part 0 holds
    /// `0..part_sizes[0]`, part 1 the next block, and so on.
    pub fn build(part_sizes: &[usize], edges: &[Edge]) -> Result<Self> {
        let mut parts = Vec::with_capacity(part_sizes.len());
        let mut next = 0;
        for &s in part_sizes {
            parts.push((next..next + s).collect());
            next += s;
        }
        Self::with_parts(next, parts, edges)
    }

    /// Arbitrary partition of `0..n` given as explicit vertex lists.
    pub fn with_parts(n: usize, parts: Vec<Vec<usize>>, edges: &[Edge]) -> Result<Self> {
        let mut part_of = vec![usize::MAX; n];
        for (i, p) in parts.iter().enumerate() {
            for &v in p {
                if v >= n {
                    return Err(Error::invalid(format!("part {i} names vertex {v} >= {n}")));
                }
                if part_of[v] != usize::MAX {
                    return Err(Error::invalid(format!("vertex {v} lies in two parts")));
                }
                part_of[v] = i;
            }
        }
        if let Some(v) = part_of.iter().position(|&p| p == usize::MAX) {
            return Err(Error::invalid(format!("vertex {v} lies in no part")));
        }
        let mut adj = vec![Vec::new(); n];
        let mut rows = vec![FixedBitSet::with_capacity(n); n];
        let mut list = Vec::with_capacity(edges.len());
        for &(u, v) in edges {
            if u >= n || v >= n {
                return Err(Error::invalid(format!("edge ({u},{v}) leaves 0..{n}")));
            }
            if u == v {
                return Err(Error::invalid(format!("self-loop at {u}")));
            }
            if rows[u].contains(v) {
                return Err(Error::invalid(format!("duplicate edge ({u},{v})")));
            }
            rows[u].insert(v);
            rows[v].insert(u);
            adj[u].push(v);
            adj[v].push(u);
            list.push(edge_key(u, v));
        }
        for a in &mut adj {
            a.sort_unstable();
        }
        list.sort_unstable();
        Ok(PartitionedGraph {
            part_of,
            parts,
            adj,
            rows,
            edges: list,
        })
    }

    /// Same edges, new partition.
    pub fn repartition(&self, parts: Vec<Vec<usize>>) -> Result<Self> {
        Self::with_parts(self.n(), parts, &self.edges)
    }

    /// Same vertices and partition, edges restricted by `keep`.
    pub fn edge_subgraph(&self, keep: impl Fn(Edge) -> bool) -> Self {
        let edges: Vec<Edge> = self.edges.iter().copied().filter(|&e| keep(e)).collect();
        Self::with_parts(self.n(), self.parts.clone(), &edges).expect("subgraph of a valid graph")
    }

    /// Induced subgraph on `vertices` relabelled to `0..vertices.len()` as a single part.
    pub fn induced(&self, vertices: &[usize]) -> Self {
        let mut local = HashMap::with_capacity(vertices.len());
        for (i, &v) in vertices.iter().enumerate() {
            local.insert(v, i);
        }
        let mut edges = Vec::new();
        for (i, &v) in vertices.iter().enumerate() {
            for &w in &self.adj[v] {
                if let Some(&j) = local.get(&w) {
                    if i < j {
                        edges.push((i, j));
                    }
                }
            }
        }
        Self::build(&[vertices.len()], &edges).expect("induced subgraph of a valid graph")
    }

    pub fn n(&self) -> usize {
        self.adj.len()
    }

    pub fn part_count(&self) -> usize {
        self.parts.len()
    }

    pub fn parts(&self) -> &[Vec<usize>] {
        &self.parts
    }

    pub fn part(&self, i: usize) -> &[usize] {
        &self.parts[i]
    }

    pub fn part_of(&self, v: usize) -> usize {
        self.part_of[v]
    }

    pub fn neighbours(&self, v: usize) -> &[usize] {
        &self.adj[v]
    }

    pub fn row(&self, v: usize) -> &FixedBitSet {
        &self.rows[v]
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        u < self.n() && v < self.n() && self.rows[u].contains(v)
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adj[v].len()
    }

    /// Number of neighbours of `v` inside `set`.
    pub fn degree_into(&self, v: usize, set: &FixedBitSet) -> usize {
        self.rows[v].intersection_count(set)
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn max_degree(&self) -> usize {
        self.adj.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn vertex_set(&self, vertices: &[usize]) -> FixedBitSet {
        bitset_from(self.n(), vertices.iter().copied())
    }

    /// `e(S, T) / (|S||T|)` for vertex lists `s`, `t`.
    pub fn density(&self, s: &[usize], t: &[usize]) -> Density {
        let tb = self.vertex_set(t);
        let edges = s.iter().map(|&v| self.degree_into(v, &tb)).sum();
        Density {
            edges,
            pairs: s.len() * t.len(),
        }
    }

    /// The bipartite graph `G[left, right]` with local indices following the given order.
    pub fn bipartite(&self, left: &[usize], right: &[usize]) -> Bipartite {
        let pos: HashMap<usize, usize> = right.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        let mut b = Bipartite::empty(left.to_vec(), right.to_vec());
        for (i, &u) in left.iter().enumerate() {
            for w in &self.adj[u] {
                if let Some(&j) = pos.get(w) {
                    b.insert(i, j);
                }
            }
        }
        b
    }

    /// Square graph: same vertices, `uv` an edge iff `0 < dist(u, v) <= 2`.
    pub fn square(&self) -> Self {
        let n = self.n();
        let mut edges = Vec::new();
        for u in 0..n {
            let mut reach = self.rows[u].clone();
            for &w in &self.adj[u] {
                reach.union_with(&self.rows[w]);
            }
            for v in reach.ones() {
                if u < v {
                    edges.push((u, v));
                }
            }
        }
        Self::with_parts(n, self.parts.clone(), &edges).expect("square of a valid graph")
    }

    /// Breadth-first distances from `source` (`usize::MAX` when unreachable).
    pub fn distances(&self, source: usize) -> Vec<usize> {
        let mut dist = vec![usize::MAX; self.n()];
        let mut queue = std::collections::VecDeque::new();
        dist[source] = 0;
        queue.push_back(source);
        while let Some(u) = queue.pop_front() {
            for &w in &self.adj[u] {
                if dist[w] == usize::MAX {
                    dist[w] = dist[u] + 1;
                    queue.push_back(w);
                }
            }
        }
        dist
    }

    pub fn is_independent(&self, set: &[usize]) -> bool {
        let b = self.vertex_set(set);
        set.iter().all(|&v| self.rows[v].is_disjoint(&b))
    }

    /// No two vertices of `set` are adjacent or share a neighbour.
    pub fn is_two_independent(&self, set: &[usize]) -> bool {
        if !self.is_independent(set) {
            return false;
        }
        let mut seen = FixedBitSet::with_capacity(self.n());
        for &v in set {
            for &w in &self.adj[v] {
                if seen.contains(w) {
                    return false;
                }
                seen.insert(w);
            }
        }
        true
    }

    pub fn is_connected(&self) -> bool {
        self.n() == 0 || self.distances(0).iter().all(|&d| d != usize::MAX)
    }

    pub fn is_tree(&self) -> bool {
        self.n() > 0 && self.edge_count() + 1 == self.n() && self.is_connected()
    }
}

/// An exact density `edges / pairs`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Density {
    pub edges: usize,
    pub pairs: usize,
}

impl Density {
    pub fn value(&self) -> f64 {
        if self.pairs == 0 {
            0.0
        } else {
            self.edges as f64 / self.pairs as f64
        }
    }
}

/// A bipartite graph between two labelled vertex lists, stored as bit matrices
/// in both directions. Local indices are positions in the label lists.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Bipartite {
    left: Vec<usize>,
    right: Vec<usize>,
    rows: Vec<FixedBitSet>,
    cols: Vec<FixedBitSet>,
}

impl Bipartite {
    pub fn empty(left: Vec<usize>, right: Vec<usize>) -> Self {
        let rows = vec![FixedBitSet::with_capacity(right.len()); left.len()];
        let cols = vec![FixedBitSet::with_capacity(left.len()); right.len()];
        Bipartite {
            left,
            right,
            rows,
            cols,
        }
    }

    pub fn complete(left: Vec<usize>, right: Vec<usize>) -> Self {
        let mut b = Self::empty(left, right);
        for r in &mut b.rows {
            r.insert_range(..);
        }
        for c in &mut b.cols {
            c.insert_range(..);
        }
        b
    }

    /// Unlabelled graph on `0..nl` and `0..nr` with local edges.
    pub fn from_edges(nl: usize, nr: usize, edges: &[(usize, usize)]) -> Self {
        let mut b = Self::empty((0..nl).collect(), (0..nr).collect());
        for &(l, r) in edges {
            b.insert(l, r);
        }
        b
    }

    pub fn insert(&mut self, l: usize, r: usize) {
        self.rows[l].insert(r);
        self.cols[r].insert(l);
    }

    pub fn remove(&mut self, l: usize, r: usize) {
        self.rows[l].set(r, false);
        self.cols[r].set(l, false);
    }

    pub fn has(&self, l: usize, r: usize) -> bool {
        self.rows[l].contains(r)
    }

    pub fn left_len(&self) -> usize {
        self.left.len()
    }

    pub fn right_len(&self) -> usize {
        self.right.len()
    }

    pub fn left_labels(&self) -> &[usize] {
        &self.left
    }

    pub fn right_labels(&self) -> &[usize] {
        &self.right
    }

    pub fn row(&self, l: usize) -> &FixedBitSet {
        &self.rows[l]
    }

    pub fn col(&self, r: usize) -> &FixedBitSet {
        &self.cols[r]
    }

    pub fn left_degree(&self, l: usize) -> usize {
        self.rows[l].count_ones(..)
    }

    pub fn right_degree(&self, r: usize) -> usize {
        self.cols[r].count_ones(..)
    }

    pub fn edge_count(&self) -> usize {
        self.rows.iter().map(|r| r.count_ones(..)).sum()
    }

    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (l, row) in self.rows.iter().enumerate() {
            out.extend(row.ones().map(|r| (l, r)));
        }
        out
    }

    pub fn density(&self) -> f64 {
        let pairs = self.left.len() * self.right.len();
        if pairs == 0 {
            0.0
        } else {
            self.edge_count() as f64 / pairs as f64
        }
    }

    /// `e(S, T)` for local index lists.
    pub fn count_between(&self, s: &[usize], t: &FixedBitSet) -> usize {
        s.iter().map(|&l| self.rows[l].intersection_count(t)).sum()
    }

    /// Keep only the edges accepted by `keep`.
    pub fn filtered(&self, mut keep: impl FnMut(usize, usize) -> bool) -> Self {
        let mut b = Self::empty(self.left.clone(), self.right.clone());
        for (l, r) in self.edges() {
            if keep(l, r) {
                b.insert(l, r);
            }
        }
        b
    }

    /// Edge-wise intersection with a graph on the same index spaces.
    pub fn intersection(&self, other: &Bipartite) -> Self {
        let mut b = self.clone();
        for (l, row) in b.rows.iter_mut().enumerate() {
            row.intersect_with(&other.rows[l]);
        }
        for (r, col) in b.cols.iter_mut().enumerate() {
            col.intersect_with(&other.cols[r]);
        }
        b
    }

    /// Same edges with the two sides exchanged.
    pub fn transposed(&self) -> Self {
        Bipartite {
            left: self.right.clone(),
            right: self.left.clone(),
            rows: self.cols.clone(),
            cols: self.rows.clone(),
        }
    }

    pub fn relabelled(&self, left: Vec<usize>, right: Vec<usize>) -> Self {
        assert_eq!(left.len(), self.left.len());
        assert_eq!(right.len(), self.right.len());
        Bipartite {
            left,
            right,
            rows: self.rows.clone(),
            cols: self.cols.clone(),
        }
    }
}

/// An assignment of colour sets to edges, colours drawn from `0..universe`.
/// Edges without an entry carry the empty set.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct EdgeSetColouring {
    universe: usize,
    sets: HashMap<Edge, Vec<usize>>,
}

impl EdgeSetColouring {
    pub fn new(universe: usize) -> Self {
        EdgeSetColouring {
            universe,
            sets: HashMap::new(),
        }
    }

    pub fn universe(&self) -> usize {
        self.universe
    }

    pub fn set_universe(&mut self, universe: usize) -> Result<()> {
        if self.sets.values().flatten().any(|&c| c >= universe) {
            return Err(Error::invalid("shrinking the universe would drop used colours"));
        }
        self.universe = universe;
        Ok(())
    }

    /// Assign `colours` to edge `uv`, replacing any previous set.
    pub fn assign(&mut self, u: usize, v: usize, colours: &[usize]) -> Result<()> {
        let mut set = colours.to_vec();
        set.sort_unstable();
        set.dedup();
        if let Some(&c) = set.iter().find(|&&c| c >= self.universe) {
            return Err(Error::invalid(format!("colour {c} outside universe {}", self.universe)));
        }
        self.sets.insert(edge_key(u, v), set);
        Ok(())
    }

    pub fn get(&self, u: usize, v: usize) -> &[usize] {
        self.sets.get(&edge_key(u, v)).map_or(&[], Vec::as_slice)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Edge, &Vec<usize>)> {
        self.sets.iter()
    }

    /// Check that every coloured pair is an edge of `g`.
    pub fn validate(&self, g: &PartitionedGraph) -> Result<()> {
        for &(u, v) in self.sets.keys() {
            if !g.has_edge(u, v) {
                return Err(Error::invalid(format!("colour assigned to non-edge ({u},{v})")));
            }
        }
        Ok(())
    }

    /// Number of edges of `g` carrying each colour.
    pub fn colour_counts(&self, g: &PartitionedGraph) -> Vec<usize> {
        let mut counts = vec![0; self.universe];
        for &(u, v) in g.edges() {
            for &c in self.get(u, v) {
                counts[c] += 1;
            }
        }
        counts
    }

    /// Number of edges of `g` at `v` whose set contains `colour`.
    pub fn colour_degree(&self, g: &PartitionedGraph, v: usize, colour: usize) -> usize {
        g.neighbours(v)
            .iter()
            .filter(|&&w| self.get(v, w).contains(&colour))
            .count()
    }

    /// `(k, Δ)`: the largest number of edges sharing a colour and the largest set size.
    pub fn boundedness(&self, g: &PartitionedGraph) -> (usize, usize) {
        let k = self.colour_counts(g).into_iter().max().unwrap_or(0);
        let delta = g
            .edges()
            .iter()
            .map(|&(u, v)| self.get(u, v).len())
            .max()
            .unwrap_or(0);
        (k, delta)
    }

    /// Spanning subgraph `G_{C'}` of edges whose whole set lies in `allowed`.
    pub fn restrict(&self, g: &PartitionedGraph, allowed: &FixedBitSet) -> PartitionedGraph {
        g.edge_subgraph(|(u, v)| self.get(u, v).iter().all(|&c| allowed.contains(c)))
    }

    /// Whether the listed edges have pairwise disjoint colour sets; on failure the
    /// first clashing pair in list order and the shared colour.
    pub fn rainbow_clash(&self, edges: &[Edge]) -> Option<(Edge, Edge, usize)> {
        let mut owner: HashMap<usize, Edge> = HashMap::new();
        for &(u, v) in edges {
            let e = edge_key(u, v);
            for &c in self.get(u, v) {
                if let Some(&f) = owner.get(&c) {
                    if f != e {
                        return Some((f, e, c));
                    }
                }
                owner.insert(c, e);
            }
        }
        None
    }

    pub fn is_rainbow(&self, edges: &[Edge]) -> bool {
        self.rainbow_clash(edges).is_none()
    }

    /// Rename colours through `map` (old colour -> new colour) into a universe of `universe`.
    pub fn remapped(&self, map: &[usize], universe: usize) -> Self {
        let mut out = EdgeSetColouring::new(universe);
        for (&(u, v), set) in &self.sets {
            let mapped: Vec<usize> = set.iter().map(|&c| map[c]).collect();
            out.assign(u, v, &mapped).expect("map stays in universe");
        }
        out
    }
}

/// JSON form of a graph, optionally coloured.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct GraphJson {
    pub parts: Vec<usize>,
    pub edges: Vec<[usize; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub colours: Option<ColoursJson>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ColoursJson {
    pub universe: usize,
    pub assignment: Vec<(usize, usize, Vec<usize>)>,
}

impl GraphJson {
    /// Canonical encoding: `u < v`, edges sorted, colour sets sorted.
    pub fn encode(g: &PartitionedGraph, c: Option<&EdgeSetColouring>) -> Self {
        let contiguous = {
            let mut next = 0;
            g.parts().iter().all(|p| {
                let ok = p.iter().enumerate().all(|(i, &v)| v == next + i);
                next += p.len();
                ok
            })
        };
        assert!(contiguous, "JSON encoding needs consecutively numbered parts");
        let colours = c.map(|c| {
            let mut assignment: Vec<_> = g
                .edges()
                .iter()
                .map(|&(u, v)| (u, v, c.get(u, v).to_vec()))
                .collect();
            assignment.sort();
            ColoursJson {
                universe: c.universe(),
                assignment,
            }
        });
        GraphJson {
            parts: g.parts().iter().map(Vec::len).collect(),
            edges: g.edges().iter().map(|&(u, v)| [u, v]).collect(),
            colours,
        }
    }

    pub fn decode(&self) -> Result<(PartitionedGraph, Option<EdgeSetColouring>)> {
        let edges: Vec<Edge> = self.edges.iter().map(|e| (e[0], e[1])).collect();
        let g = PartitionedGraph::build(&self.parts, &edges)?;
        let c = match &self.colours {
            None => None,
            Some(cj) => {
                let mut c = EdgeSetColouring::new(cj.universe);
                let mut seen = BTreeMap::new();
                for (u, v, set) in &cj.assignment {
                    if seen.insert(edge_key(*u, *v), ()).is_some() {
                        return Err(Error::invalid(format!("edge ({u},{v}) coloured twice")));
                    }
                    c.assign(*u, *v, set)?;
                }
                c.validate(&g)?;
                Some(c)
            }
        };
        Ok((g, c))
    }
}
