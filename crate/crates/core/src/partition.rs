//! Vertex partitions: equitable colourings, 2-independent refinements, round
//! schedules for the reduced graph and cyclic partitions of trees.

use std::collections::VecDeque;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::PartitionedGraph;
use crate::seed;

const RESTARTS: u64 = 24;
const EXHAUSTIVE_BELOW: usize = 12;

#[cfg(test)]
fn class_sizes_ok(classes: &[Vec<usize>]) -> bool {
    let max = classes.iter().map(Vec::len).max().unwrap_or(0);
    let min = classes.iter().map(Vec::len).min().unwrap_or(0);
    max - min <= 1
}

/// Proper colouring of `g` with `k` classes whose sizes differ by at most one.
///
/// Greedy colouring followed by balancing moves along chains of classes
/// (a vertex of class `X` with no neighbour in `Y` may move to `Y`); restarts
/// with shuffled orders, and falls back to exhaustive search on small graphs.
pub fn equitable_colouring(g: &PartitionedGraph, k: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    let n = g.n();
    if k == 0 || k > n.max(1) {
        return Err(Error::pre(format!("need 0 < k <= n, got k = {k}, n = {n}")));
    }
    if g.max_degree() >= k {
        return Err(Error::pre(format!(
            "maximum degree {} is not below k = {k}",
            g.max_degree()
        )));
    }
    for attempt in 0..RESTARTS {
        let mut order: Vec<usize> = (0..n).collect();
        if attempt == 0 {
            order.sort_by_key(|&v| std::cmp::Reverse(g.degree(v)));
        } else {
            order.shuffle(&mut seed::rng(seed, "equitable-order", attempt));
        }
        let mut colour = vec![usize::MAX; n];
        let mut sizes = vec![0usize; k];
        for &v in &order {
            let mut used = vec![false; k];
            for &w in g.neighbours(v) {
                if colour[w] != usize::MAX {
                    used[colour[w]] = true;
                }
            }
            let c = (0..k)
                .filter(|&c| !used[c])
                .min_by_key(|&c| sizes[c])
                .expect("degree below k leaves a free class");
            colour[v] = c;
            sizes[c] += 1;
        }
        if balance(g, &mut colour, k) {
            return Ok(classes_of(&colour, k));
        }
    }
    if n < EXHAUSTIVE_BELOW {
        if let Some(colour) = exhaustive_equitable(g, k) {
            return Ok(classes_of(&colour, k));
        }
    }
    Err(Error::budget(
        "equitable_colouring",
        RESTARTS as usize,
        format!("no balanced {k}-colouring found"),
    ))
}

fn classes_of(colour: &[usize], k: usize) -> Vec<Vec<usize>> {
    let mut classes = vec![Vec::new(); k];
    for (v, &c) in colour.iter().enumerate() {
        classes[c].push(v);
    }
    classes
}

/// Move vertices along chains from largest to smallest classes until sizes
/// differ by at most one. Each successful chain lowers the sum of squared
/// class sizes, so the loop ends.
fn balance(g: &PartitionedGraph, colour: &mut [usize], k: usize) -> bool {
    loop {
        let classes = classes_of(colour, k);
        let max = classes.iter().map(Vec::len).max().unwrap_or(0);
        let min = classes.iter().map(Vec::len).min().unwrap_or(0);
        if max - min <= 1 {
            return true;
        }
        let movable = |v: usize, y: usize| g.neighbours(v).iter().all(|&w| colour[w] != y);
        // BFS over classes; parent[y] = (x, vertex moved from x to y).
        let mut parent: Vec<Option<(usize, usize)>> = vec![None; k];
        let mut seen = vec![false; k];
        let mut queue = VecDeque::new();
        for (x, c) in classes.iter().enumerate() {
            if c.len() == max {
                seen[x] = true;
                queue.push_back(x);
            }
        }
        let mut target = None;
        'bfs: while let Some(x) = queue.pop_front() {
            for y in 0..k {
                if seen[y] {
                    continue;
                }
                if let Some(&v) = classes[x].iter().find(|&&v| movable(v, y)) {
                    seen[y] = true;
                    parent[y] = Some((x, v));
                    if classes[y].len() == min {
                        target = Some(y);
                        break 'bfs;
                    }
                    queue.push_back(y);
                }
            }
        }
        let Some(mut y) = target else {
            return false;
        };
        while let Some((x, v)) = parent[y] {
            colour[v] = y;
            y = x;
        }
    }
}

fn exhaustive_equitable(g: &PartitionedGraph, k: usize) -> Option<Vec<usize>> {
    let n = g.n();
    let lo = n / k;
    let big = n % k;
    fn rec(
        g: &PartitionedGraph,
        v: usize,
        k: usize,
        lo: usize,
        big: usize,
        colour: &mut Vec<usize>,
        sizes: &mut Vec<usize>,
    ) -> bool {
        if v == g.n() {
            return true;
        }
        let at_big = sizes.iter().filter(|&&s| s == lo + 1).count();
        for c in 0..k {
            let full = sizes[c] > lo || (sizes[c] == lo && at_big == big);
            if full {
                continue;
            }
            if g.neighbours(v).iter().any(|&w| w < v && colour[w] == c) {
                continue;
            }
            colour[v] = c;
            sizes[c] += 1;
            if rec(g, v + 1, k, lo, big, colour, sizes) {
                return true;
            }
            sizes[c] -= 1;
        }
        colour[v] = usize::MAX;
        false
    }
    let mut colour = vec![usize::MAX; n];
    let mut sizes = vec![0; k];
    rec(g, 0, k, lo, big, &mut colour, &mut sizes).then_some(colour)
}

/// Split `class` into `parts` sets that are 2-independent in `h`, with sizes
/// differing by at most one (exactly equal when `exact` is set).
pub fn two_independent_refine(
    h: &PartitionedGraph,
    class: &[usize],
    parts: usize,
    exact: bool,
    seed: u64,
) -> Result<Vec<Vec<usize>>> {
    if exact && !class.len().is_multiple_of(parts.max(1)) {
        return Err(Error::pre(format!(
            "class of size {} does not split into {parts} equal parts",
            class.len()
        )));
    }
    let sq = h.square().induced(class);
    if sq.max_degree() >= parts {
        return Err(Error::pre(format!(
            "square of the class has maximum degree {} >= {parts} parts",
            sq.max_degree()
        )));
    }
    let local = equitable_colouring(&sq, parts, seed)?;
    Ok(local
        .into_iter()
        .map(|c| c.into_iter().map(|i| class[i]).collect())
        .collect())
}

/// Assignment of clusters to rounds. `psi[0] = 0` stands for the exceptional
/// part; clusters `1..=r` get rounds in `1..=rounds`, and clusters at distance
/// at most two in the reduced graph never share a round.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoundColouring {
    pub psi: Vec<usize>,
    pub rounds: usize,
    /// Upper bound `Δ_R² + 1` on the number of rounds.
    pub bound: usize,
}

impl RoundColouring {
    /// Clusters assigned to round `t`.
    pub fn round(&self, t: usize) -> Vec<usize> {
        (1..self.psi.len()).filter(|&j| self.psi[j] == t).collect()
    }

    /// Largest number of earlier-round reduced-graph neighbours of a cluster.
    pub fn max_back_degree(&self, r_graph: &PartitionedGraph) -> usize {
        (1..self.psi.len())
            .map(|j| {
                r_graph
                    .neighbours(j)
                    .iter()
                    .filter(|&&i| self.psi[i] < self.psi[j])
                    .count()
            })
            .max()
            .unwrap_or(0)
    }

    /// Distinct unordered round pairs over reduced-graph edges.
    pub fn pair_count(&self, r_graph: &PartitionedGraph) -> usize {
        let mut pairs: Vec<(usize, usize)> = r_graph
            .edges()
            .iter()
            .map(|&(i, j)| crate::graph::edge_key(self.psi[i], self.psi[j]))
            .collect();
        pairs.sort_unstable();
        pairs.dedup();
        pairs.len()
    }
}

const SEARCH_NODES: usize = 400_000;

/// Colour the square of the reduced graph (vertices `1..=r`, vertex 0 isolated)
/// with at most `Δ_R² + 1` rounds. Greedy in breadth-first order; with
/// `optimise`, a bounded search also minimises the number of earlier
/// neighbours per cluster, then the number of round pairs, then rounds.
pub fn round_colouring(r_graph: &PartitionedGraph, optimise: bool) -> Result<RoundColouring> {
    let r = r_graph.n().saturating_sub(1);
    if r_graph.n() > 0 && r_graph.degree(0) != 0 {
        return Err(Error::invalid("vertex 0 of the reduced graph must be isolated"));
    }
    let delta = r_graph.max_degree();
    let bound = delta * delta + 1;
    let sq = r_graph.square();
    let order = bfs_order(r_graph);
    let mut psi = vec![0usize; r + 1];
    for &j in &order {
        let used: Vec<usize> = sq.neighbours(j).iter().map(|&i| psi[i]).collect();
        psi[j] = (1..).find(|t| !used.contains(t)).expect("unbounded search");
    }
    let rounds = psi.iter().copied().max().unwrap_or(0);
    let mut best = RoundColouring { psi, rounds, bound };
    if optimise && r > 0 {
        let score = |c: &RoundColouring| (c.max_back_degree(r_graph), c.pair_count(r_graph), c.rounds);
        let mut best_score = score(&best);
        let mut psi = vec![0usize; r + 1];
        let mut nodes = 0;
        search(
            &sq,
            &order,
            0,
            bound,
            &mut psi,
            &mut nodes,
            &mut |psi: &[usize]| {
                let rounds = psi.iter().copied().max().unwrap_or(0);
                let cand = RoundColouring {
                    psi: psi.to_vec(),
                    rounds,
                    bound,
                };
                let s = score(&cand);
                if s < best_score {
                    best_score = s;
                    best = cand;
                }
            },
        );
    }
    if best.rounds > bound {
        return Err(Error::Invariant(format!(
            "round colouring used {} > {bound} rounds",
            best.rounds
        )));
    }
    Ok(best)
}

fn search(
    sq: &PartitionedGraph,
    order: &[usize],
    at: usize,
    bound: usize,
    psi: &mut Vec<usize>,
    nodes: &mut usize,
    visit: &mut dyn FnMut(&[usize]),
) {
    *nodes += 1;
    if *nodes > SEARCH_NODES {
        return;
    }
    if at == order.len() {
        visit(psi);
        return;
    }
    let j = order[at];
    for t in 1..=bound {
        if sq.neighbours(j).iter().any(|&i| psi[i] == t) {
            continue;
        }
        psi[j] = t;
        search(sq, order, at + 1, bound, psi, nodes, visit);
        psi[j] = 0;
    }
}

fn bfs_order(r_graph: &PartitionedGraph) -> Vec<usize> {
    let n = r_graph.n();
    let mut seen = vec![false; n];
    let mut order = Vec::new();
    let mut starts: Vec<usize> = (1..n).collect();
    starts.sort_by_key(|&v| (std::cmp::Reverse(r_graph.degree(v)), v));
    for s in starts {
        if seen[s] {
            continue;
        }
        seen[s] = true;
        let mut queue = VecDeque::from([s]);
        while let Some(u) = queue.pop_front() {
            order.push(u);
            for &w in r_graph.neighbours(u) {
                if !seen[w] {
                    seen[w] = true;
                    queue.push_back(w);
                }
            }
        }
    }
    order
}

/// A partition of a tree into `r` classes placed around a cycle.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreePartition {
    /// `classes[i]` is the class at cycle position `i`.
    pub classes: Vec<Vec<usize>>,
    pub position: Vec<usize>,
    /// For each position, vertices whose whole neighbourhood lies in the previous class.
    pub inward: Vec<Vec<usize>>,
}

/// Place the vertices of tree `t` on the positions of an `r`-cycle so that
/// every edge joins consecutive positions and class sizes are within
/// `(1 ± slack)·n/r`. Retries up to `budget` random roots.
pub fn tree_cycle_partition(
    t: &PartitionedGraph,
    r: usize,
    slack: f64,
    seed: u64,
    budget: usize,
) -> Result<TreePartition> {
    if r < 3 || r.is_multiple_of(2) {
        return Err(Error::pre(format!("cycle length must be odd and at least 3, got {r}")));
    }
    if !t.is_tree() {
        return Err(Error::pre("input is not a tree"));
    }
    let n = t.n();
    let target = n as f64 / r as f64;
    let (lo, hi) = ((1.0 - slack) * target, (1.0 + slack) * target);
    let mut best_spread = f64::INFINITY;
    for attempt in 0..budget {
        let mut rng = seed::rng(seed, "tree-partition", attempt as u64);
        let root = rng.random_range(0..n);
        let mut position = vec![usize::MAX; n];
        let mut sizes = vec![0usize; r];
        position[root] = rng.random_range(0..r);
        sizes[position[root]] += 1;
        let mut queue = VecDeque::from([root]);
        while let Some(u) = queue.pop_front() {
            for &w in t.neighbours(u) {
                if position[w] != usize::MAX {
                    continue;
                }
                let up = (position[u] + 1) % r;
                let down = (position[u] + r - 1) % r;
                let prefer_up = match sizes[up].cmp(&sizes[down]) {
                    std::cmp::Ordering::Less => rng.random_bool(0.75),
                    std::cmp::Ordering::Greater => rng.random_bool(0.25),
                    std::cmp::Ordering::Equal => rng.random_bool(0.5),
                };
                position[w] = if prefer_up { up } else { down };
                sizes[position[w]] += 1;
                queue.push_back(w);
            }
        }
        let spread = sizes
            .iter()
            .map(|&s| (s as f64 - target).abs() / target)
            .fold(0.0, f64::max);
        best_spread = best_spread.min(spread);
        if sizes.iter().all(|&s| s as f64 >= lo - 1e-9 && s as f64 <= hi + 1e-9) {
            let mut classes = vec![Vec::new(); r];
            for (v, &p) in position.iter().enumerate() {
                classes[p].push(v);
            }
            let inward = (0..r)
                .map(|i| {
                    let prev = (i + r - 1) % r;
                    classes[i]
                        .iter()
                        .copied()
                        .filter(|&v| t.neighbours(v).iter().all(|&w| position[w] == prev))
                        .collect()
                })
                .collect();
            return Ok(TreePartition {
                classes,
                position,
                inward,
            });
        }
    }
    Err(Error::budget(
        "tree_cycle_partition",
        budget,
        format!("best relative size deviation {best_spread:.3} exceeds slack {slack}"),
    ))
}
