//! Random instance generation, deterministic per seed.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use rainbow_core::embedder::{BlowUpInstance, BlowUpJson, Params};
use rainbow_core::error::{Error, Result};
use rainbow_core::graph::{edge_key, EdgeSetColouring, GraphJson, PartitionedGraph};
use rainbow_core::seed;

use crate::json::InstanceJson;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    MatchingsBlowup,
    GeneralBlowup,
    DiracTree,
    Quasirandom,
    PartialEmbed,
}

/// Shape of the reduced graph on the clusters.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Shape {
    Path,
    Cycle,
    Complete,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GenSpec {
    pub kind: Kind,
    /// Number of clusters (ignored by `quasirandom`).
    pub clusters: usize,
    /// Vertices per cluster, or the total for `quasirandom`.
    pub cluster_size: usize,
    /// Edge probability of every dense pair.
    pub density: f64,
    pub shape: Shape,
    /// Every colour appears on at most this many edges.
    pub k_bound: usize,
    /// Colours per edge.
    pub set_size: usize,
    /// Palette size; `None` picks the smallest palette the bound allows.
    pub palette: Option<usize>,
    /// Degree bound of the target (trees and `quasirandom`), or matchings per
    /// dense pair for `general-blowup`.
    pub target_degree: usize,
    /// Target vertices embedded by `partial-embed`.
    pub partial_size: usize,
    pub eps: f64,
    /// `None` uses half the pair density.
    pub d: Option<f64>,
    /// `None` uses `k_bound / n`.
    pub mu: Option<f64>,
}

impl Default for GenSpec {
    fn default() -> Self {
        GenSpec {
            kind: Kind::MatchingsBlowup,
            clusters: 2,
            cluster_size: 20,
            density: 0.8,
            shape: Shape::Path,
            k_bound: 1,
            set_size: 1,
            palette: None,
            target_degree: 2,
            partial_size: 6,
            eps: 0.2,
            d: None,
            mu: None,
        }
    }
}

/// Colour sets for `edges` edges with every colour on at most `k` edges and
/// `set_size` colours per edge. Colours are dealt round-robin over a shuffled
/// palette, so counts never differ by more than one.
pub fn bounded_colouring<R: Rng>(
    edges: usize,
    k: usize,
    set_size: usize,
    palette: Option<usize>,
    rng: &mut R,
) -> Result<(usize, Vec<Vec<usize>>)> {
    if k == 0 || set_size == 0 {
        return Err(Error::Invalid("k-bound and colours per edge must be positive".into()));
    }
    let need = (set_size * edges).div_ceil(k).max(set_size);
    let palette = palette.unwrap_or(need);
    if k * palette < set_size * edges {
        return Err(Error::Invalid(format!(
            "palette of {palette} colours with k = {k} cannot carry {edges} edges with {set_size} colours each"
        )));
    }
    if palette < set_size {
        return Err(Error::Invalid(format!("palette of {palette} colours is smaller than {set_size} colours per edge")));
    }
    let mut order: Vec<usize> = (0..palette).collect();
    order.shuffle(rng);
    let sets = (0..edges)
        .map(|e| {
            let mut s: Vec<usize> = (0..set_size).map(|j| order[(e * set_size + j) % palette]).collect();
            s.sort_unstable();
            s
        })
        .collect();
    Ok((palette, sets))
}

fn reduced_edges(r: usize, shape: Shape) -> Vec<(usize, usize)> {
    match shape {
        Shape::Path => (1..r).map(|i| (i, i + 1)).collect(),
        Shape::Cycle if r >= 3 => (1..r).map(|i| (i, i + 1)).chain(std::iter::once((1, r))).collect(),
        Shape::Cycle => (1..r).map(|i| (i, i + 1)).collect(),
        Shape::Complete => (1..=r).flat_map(|i| (i + 1..=r).map(move |j| (i, j))).collect(),
    }
}

/// Clusters `1..=r` of size `m` at ids `(i-1)·m..i·m`, dense pairs along `pairs`.
fn clustered_host<R: Rng>(r: usize, m: usize, p: f64, pairs: &[(usize, usize)], rng: &mut R) -> Result<PartitionedGraph> {
    let mut edges = Vec::new();
    for &(i, j) in pairs {
        for a in 0..m {
            for b in 0..m {
                if rng.random_bool(p) {
                    edges.push(edge_key((i - 1) * m + a, (j - 1) * m + b));
                }
            }
        }
    }
    let mut sizes = vec![0];
    sizes.extend(std::iter::repeat_n(m, r));
    PartitionedGraph::build(&sizes, &edges)
}

fn colour<R: Rng>(g: &PartitionedGraph, spec: &GenSpec, rng: &mut R) -> Result<EdgeSetColouring> {
    let (universe, sets) = bounded_colouring(g.edge_count(), spec.k_bound, spec.set_size, spec.palette, rng)?;
    let mut c = EdgeSetColouring::new(universe);
    for (&(u, v), s) in g.edges().iter().zip(&sets) {
        c.assign(u, v, s)?;
    }
    Ok(c)
}

fn random_perfect_matching<R: Rng>(m: usize, rng: &mut R) -> Vec<usize> {
    let mut perm: Vec<usize> = (0..m).collect();
    perm.shuffle(rng);
    perm
}

/// Random spanning tree on `n` vertices with maximum degree at most `delta`:
/// every new vertex attaches to a uniformly chosen earlier vertex with spare degree.
pub fn random_bounded_tree<R: Rng>(n: usize, delta: usize, rng: &mut R) -> Vec<(usize, usize)> {
    let mut degree = vec![0usize; n];
    let mut open: Vec<usize> = Vec::new();
    let mut edges = Vec::with_capacity(n.saturating_sub(1));
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    for (k, &v) in order.iter().enumerate() {
        if k > 0 {
            let idx = rng.random_range(0..open.len());
            let u = open[idx];
            edges.push(edge_key(u, v));
            degree[u] += 1;
            degree[v] += 1;
            if degree[u] == delta {
                open.swap_remove(idx);
            }
        }
        if degree[v] < delta {
            open.push(v);
        }
    }
    edges.sort_unstable();
    edges
}

fn params(spec: &GenSpec, n: usize, delta: usize) -> Params {
    Params {
        eps: spec.eps,
        d: spec.d.unwrap_or(spec.density / 2.0),
        mu: spec.mu.unwrap_or(spec.k_bound as f64 / n.max(1) as f64),
        delta,
    }
}

/// Generate an instance of `spec.kind` from `seed`.
pub fn gen_instance(spec: &GenSpec, seed: u64) -> Result<InstanceJson> {
    if !(0.0..=1.0).contains(&spec.density) {
        return Err(Error::Invalid(format!("density {} outside [0, 1]", spec.density)));
    }
    if spec.cluster_size == 0 {
        return Err(Error::Invalid("cluster size must be positive".into()));
    }
    let mut rng = seed::rng(seed, "gen", 0);
    let (r, m) = (spec.clusters, spec.cluster_size);
    match spec.kind {
        Kind::MatchingsBlowup | Kind::GeneralBlowup => {
            if r == 0 {
                return Err(Error::Invalid("need at least one cluster".into()));
            }
            let pairs = reduced_edges(r, spec.shape);
            let g = clustered_host(r, m, spec.density, &pairs, &mut rng)?;
            let copies = if spec.kind == Kind::MatchingsBlowup { 1 } else { spec.target_degree.max(1) };
            let mut h_edges = Vec::new();
            for &(i, j) in &pairs {
                for _ in 0..copies {
                    let perm = random_perfect_matching(m, &mut rng);
                    h_edges.extend((0..m).map(|a| edge_key((i - 1) * m + a, (j - 1) * m + perm[a])));
                }
            }
            h_edges.sort_unstable();
            h_edges.dedup();
            let mut sizes = vec![0];
            sizes.extend(std::iter::repeat_n(m, r));
            let h = PartitionedGraph::build(&sizes, &h_edges)?;
            let reduced = PartitionedGraph::build(&[r + 1], &pairs)?;
            let colouring = colour(&g, spec, &mut rng)?;
            let delta = h.max_degree().max(reduced.max_degree());
            let inst = BlowUpInstance {
                candidacy: BlowUpInstance::complete_candidacy(&h, &g),
                params: params(spec, r * m, delta),
                h,
                g,
                reduced,
                colouring,
                phi0: Vec::new(),
            };
            Ok(InstanceJson::Blowup(BlowUpJson::encode(&inst, true)))
        }
        Kind::DiracTree => {
            let g = clustered_host(r, m, spec.density, &reduced_edges(r, Shape::Cycle), &mut rng)?;
            let colouring = colour(&g, spec, &mut rng)?;
            let n = r * m;
            let tree = PartitionedGraph::build(&[n], &random_bounded_tree(n, spec.target_degree.max(2), &mut rng))?;
            Ok(InstanceJson::DiracTree {
                g: GraphJson::encode(&g, Some(&colouring)),
                tree: GraphJson::encode(&tree, None),
                params: params(spec, n, tree.max_degree()),
            })
        }
        Kind::Quasirandom => {
            let n = m;
            let mut edges = Vec::new();
            for u in 0..n {
                for v in u + 1..n {
                    if rng.random_bool(spec.density) {
                        edges.push((u, v));
                    }
                }
            }
            let g = PartitionedGraph::build(&[n], &edges)?;
            let colouring = colour(&g, spec, &mut rng)?;
            let mut h_edges = Vec::new();
            for _ in 0..spec.target_degree.max(1) {
                let perm = random_perfect_matching(n, &mut rng);
                h_edges.extend(perm.chunks_exact(2).map(|p| edge_key(p[0], p[1])));
            }
            h_edges.sort_unstable();
            h_edges.dedup();
            let h = PartitionedGraph::build(&[n], &h_edges)?;
            Ok(InstanceJson::Quasirandom {
                g: GraphJson::encode(&g, Some(&colouring)),
                h: GraphJson::encode(&h, None),
                params: params(spec, n, h.max_degree()),
            })
        }
        Kind::PartialEmbed => {
            if r < 2 {
                return Err(Error::Invalid("partial embedding needs at least two clusters".into()));
            }
            let pairs = reduced_edges(r, spec.shape);
            let g = clustered_host(r, m, spec.density, &pairs, &mut rng)?;
            let colouring = colour(&g, spec, &mut rng)?;
            // a walk along the reduced graph, alternately embedded and left for later
            let total = 2 * spec.partial_size.max(1);
            let mut cluster = 1;
            let mut of = Vec::with_capacity(total);
            for _ in 0..total {
                of.push(cluster);
                let next: Vec<usize> = pairs
                    .iter()
                    .filter_map(|&(i, j)| if i == cluster { Some(j) } else if j == cluster { Some(i) } else { None })
                    .collect();
                cluster = next[rng.random_range(0..next.len())];
            }
            // keep the target parts contiguous for the JSON encoding
            let mut ids: Vec<usize> = (0..total).collect();
            ids.sort_by_key(|&k| (of[k], k));
            let mut id = vec![0; total];
            for (new, &old) in ids.iter().enumerate() {
                id[old] = new;
            }
            let mut sizes = vec![0; r + 1];
            for &c in &of {
                sizes[c] += 1;
            }
            let h_edges: Vec<(usize, usize)> = (0..total - 1).map(|k| edge_key(id[k], id[k + 1])).collect();
            let h = PartitionedGraph::build(&sizes, &h_edges)?;
            let mut x: Vec<usize> = (0..total).step_by(2).map(|k| id[k]).collect();
            x.sort_unstable();
            Ok(InstanceJson::PartialEmbed {
                g: GraphJson::encode(&g, Some(&colouring)),
                reduced: pairs.iter().map(|&(i, j)| [i, j]).collect(),
                h: GraphJson::encode(&h, None),
                x,
                params: params(spec, r * m, 2),
                d_prime: 0.01,
            })
        }
    }
}
