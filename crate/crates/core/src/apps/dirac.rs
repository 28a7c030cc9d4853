use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::app_embed_config;
use crate::embedder::rounds::CheckMode;
use crate::embedder::{rainbow_blowup_embed, BlowUpInstance, EmbedConfig, EmbedReport, Params};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::graph::{Bipartite, EdgeSetColouring, PartitionedGraph};
use crate::matching::perfect_matching;
use crate::partition::tree_cycle_partition;
use crate::regularity::{test_pair, Flavour, PairSpec};
use crate::seed;

/// A host already split into clusters `V_1, …, V_r` (part 0 is an initial
/// exceptional set, possibly empty) and a spanning tree to embed.
#[derive(Clone, Debug)]
pub struct DiracInstance {
    pub g: PartitionedGraph,
    pub colouring: EdgeSetColouring,
    /// Tree on the same number of vertices as `g`, as a single-part graph.
    pub tree: PartitionedGraph,
    pub params: Params,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DiracConfig {
    /// Fraction of every cluster moved to the exceptional set before matching sizes.
    pub trim: f64,
    /// Allowed relative deviation of tree class sizes from `n/r`.
    pub slack: f64,
    pub partition_budget: usize,
    pub check: CheckMode,
    pub embed: EmbedConfig,
}

impl Default for DiracConfig {
    fn default() -> Self {
        DiracConfig {
            trim: 0.1,
            slack: 0.3,
            partition_budget: 500,
            check: CheckMode::Auto,
            embed: app_embed_config(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DiracOutcome {
    pub phi: Vec<usize>,
    /// Host clusters in Hamilton cycle order.
    pub cycle: Vec<usize>,
    /// Cluster pairs that passed the lower-regularity test.
    pub dense_pairs: Vec<(usize, usize)>,
    /// Every cluster is dense to at least half of the others.
    pub dirac_condition: bool,
    /// Tree vertices moved to the exceptional set, per cycle position.
    pub hat_sizes: Vec<usize>,
    /// Smallest relative degree of a kept host vertex into a neighbouring cluster.
    pub min_pair_ratio: f64,
    pub report: EmbedReport,
}

/// A Hamilton cycle of the graph on `0..n` with adjacency `adj`, starting at 0,
/// by dynamic programming over subsets. `None` if there is none.
pub fn hamilton_cycle(n: usize, adj: &[Vec<bool>]) -> Option<Vec<usize>> {
    match n {
        0 => return None,
        1 => return Some(vec![0]),
        2 => return None,
        _ => {}
    }
    assert!(n <= 20, "subset search is limited to 20 vertices");
    let full = 1usize << n;
    // reach[mask][v]: a path from 0 through mask ending at v exists; parent for recovery
    let mut parent = vec![vec![usize::MAX; n]; full];
    parent[1][0] = 0;
    for mask in 1..full {
        if mask & 1 == 0 {
            continue;
        }
        for v in 0..n {
            if parent[mask][v] == usize::MAX || mask >> v & 1 == 0 {
                continue;
            }
            for w in 0..n {
                if mask >> w & 1 == 0 && adj[v][w] && parent[mask | 1 << w][w] == usize::MAX {
                    parent[mask | 1 << w][w] = v;
                }
            }
        }
    }
    let last = (1..n).find(|&v| parent[full - 1][v] != usize::MAX && adj[v][0])?;
    let mut order = Vec::with_capacity(n);
    let (mut mask, mut v) = (full - 1, last);
    while v != 0 || mask != 1 {
        order.push(v);
        let p = parent[mask][v];
        mask &= !(1 << v);
        v = p;
    }
    order.push(0);
    order.reverse();
    Some(order)
}

fn hat_sets(tree: &PartitionedGraph, inward: &[Vec<usize>], sizes: &[usize], seed: u64) -> Result<Vec<Vec<usize>>> {
    let mut rng = seed::rng(seed, "hat-sets", 0);
    let mut blocked = vec![false; tree.n()];
    let mut out = Vec::with_capacity(inward.len());
    for (p, cand) in inward.iter().enumerate() {
        let mut cand = cand.clone();
        cand.shuffle(&mut rng);
        let mut picked = Vec::with_capacity(sizes[p]);
        for x in cand {
            if picked.len() == sizes[p] {
                break;
            }
            if blocked[x] {
                continue;
            }
            picked.push(x);
            blocked[x] = true;
            for &y in tree.neighbours(x) {
                blocked[y] = true;
                for &z in tree.neighbours(y) {
                    blocked[z] = true;
                }
            }
        }
        if picked.len() < sizes[p] {
            return Err(Error::pre(format!(
                "cycle position {p}: only {} of {} exceptional tree vertices available",
                picked.len(),
                sizes[p]
            )));
        }
        out.push(picked);
    }
    Ok(out)
}

/// Embed a spanning tree as a rainbow subgraph of a clustered host: find a
/// Hamilton cycle of dense cluster pairs, place the tree around it, move
/// a few host vertices and matching tree vertices to exceptional sets, map
/// those by a perfect matching, restrict candidates of their neighbours and
/// run the blow-up embedder.
pub fn dirac_tree_embed(inst: &DiracInstance, cfg: DiracConfig, seed: u64, exec: Execution) -> Result<DiracOutcome> {
    let (g, t, p) = (&inst.g, &inst.tree, inst.params);
    if t.n() != g.n() {
        return Err(Error::invalid(format!("tree has {} vertices, host has {}", t.n(), g.n())));
    }
    if !t.is_tree() {
        return Err(Error::invalid("target is not a tree"));
    }
    if t.max_degree() > p.delta {
        return Err(Error::pre(format!("tree has maximum degree {} above {}", t.max_degree(), p.delta)));
    }
    let r = g.part_count() - 1;
    if r < 3 || r % 2 == 0 || r > 15 {
        return Err(Error::pre(format!("cluster count must be odd and in 3..=15, got {r}")));
    }

    // dense pairs and a Hamilton cycle through them
    let mut adj = vec![vec![false; r]; r];
    let mut dense_pairs = Vec::new();
    for i in 1..=r {
        for j in i + 1..=r {
            let b = g.bipartite(g.part(i), g.part(j));
            let spec = PairSpec::new(p.eps, p.d, Flavour::LowerRegular);
            let mode = cfg.check.mode(&b, seed::derive(seed, "dense-pair", (i * (r + 1) + j) as u64));
            if test_pair(&b, spec, mode, exec)?.passed {
                adj[i - 1][j - 1] = true;
                adj[j - 1][i - 1] = true;
                dense_pairs.push((i, j));
            }
        }
    }
    let dirac_condition = adj.iter().all(|row| 2 * row.iter().filter(|&&a| a).count() >= r);
    let order = hamilton_cycle(r, &adj)
        .ok_or_else(|| Error::pre("dense cluster pairs contain no Hamilton cycle"))?;
    let cycle: Vec<usize> = order.iter().map(|&k| k + 1).collect();

    let tp = tree_cycle_partition(t, r, cfg.slack, seed::derive(seed, "tree-partition", 0), cfg.partition_budget)?;

    // trim: keep |V'_p| = min(|V_p|, |X_p|) minus a margin, dropping the weakest vertices
    let mut kept: Vec<Vec<usize>> = Vec::with_capacity(r);
    let mut moved: Vec<usize> = g.part(0).to_vec();
    for (pos, &c) in cycle.iter().enumerate() {
        let (prev, next) = (cycle[(pos + r - 1) % r], cycle[(pos + 1) % r]);
        let score = |v: usize| {
            let into = |k: usize| {
                let set = g.vertex_set(g.part(k));
                g.degree_into(v, &set) as f64 / g.part(k).len().max(1) as f64
            };
            into(prev).min(into(next))
        };
        let mut vs: Vec<(f64, usize)> = g.part(c).iter().map(|&v| (score(v), v)).collect();
        vs.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        let margin = (cfg.trim * vs.len() as f64).ceil() as usize;
        let keep = vs.len().min(tp.classes[pos].len()).saturating_sub(margin);
        moved.extend(vs[keep..].iter().map(|&(_, v)| v));
        kept.push(vs[..keep].iter().map(|&(_, v)| v).collect());
    }
    let mut min_pair_ratio = f64::INFINITY;
    for pos in 0..r {
        for other in [(pos + r - 1) % r, (pos + 1) % r] {
            let set = g.vertex_set(&kept[other]);
            for &v in &kept[pos] {
                let ratio = g.degree_into(v, &set) as f64 / kept[other].len().max(1) as f64;
                min_pair_ratio = min_pair_ratio.min(ratio);
            }
        }
    }

    let hat_sizes: Vec<usize> = (0..r).map(|pos| tp.classes[pos].len() - kept[pos].len()).collect();
    let hats = hat_sets(t, &tp.inward, &hat_sizes, seed)?;
    let mut is_hat = vec![false; t.n()];
    for &x in hats.iter().flatten() {
        is_hat[x] = true;
    }
    let x0: Vec<usize> = hats.iter().flatten().copied().collect();
    if x0.len() != moved.len() {
        return Err(Error::Invariant(format!(
            "{} exceptional tree vertices for {} exceptional host vertices",
            x0.len(),
            moved.len()
        )));
    }

    // exceptional host vertices matched to hat vertices dense to the preceding cluster
    let sets: Vec<_> = kept.iter().map(|k| g.vertex_set(k)).collect();
    let mut aux = Bipartite::empty(x0.clone(), moved.clone());
    for (l, &x) in x0.iter().enumerate() {
        let prev = (tp.position[x] + r - 1) % r;
        for (k, &v) in moved.iter().enumerate() {
            let need = p.d * kept[prev].len() as f64 / 2.0;
            if g.degree_into(v, &sets[prev]) as f64 >= need {
                aux.insert(l, k);
            }
        }
    }
    let m = perfect_matching(&aux)?;
    let mut phi0_of = vec![None; t.n()];
    let phi0: Vec<(usize, usize)> = x0
        .iter()
        .enumerate()
        .map(|(l, &x)| {
            phi0_of[x] = Some(moved[m.mate[l]]);
            (x, moved[m.mate[l]])
        })
        .collect();

    let x_parts: Vec<Vec<usize>> = std::iter::once(x0.clone())
        .chain(tp.classes.iter().map(|c| c.iter().copied().filter(|&x| !is_hat[x]).collect()))
        .collect();
    let v_parts: Vec<Vec<usize>> = std::iter::once(moved.clone()).chain(kept.iter().cloned()).collect();
    let h = t.repartition(x_parts.clone())?;
    let host = g.repartition(v_parts.clone())?;
    let mut candidacy = vec![Bipartite::empty(Vec::new(), Vec::new())];
    for j in 1..=r {
        let a = Bipartite::complete(x_parts[j].clone(), v_parts[j].clone());
        let restricted = a.filtered(|l, k| {
            let y = x_parts[j][l];
            t.neighbours(y)
                .iter()
                .filter_map(|&x| phi0_of[x])
                .all(|w| g.has_edge(w, v_parts[j][k]))
        });
        candidacy.push(restricted);
    }
    let mut reduced_edges: Vec<(usize, usize)> = (1..r).map(|j| (j, j + 1)).collect();
    reduced_edges.push((1, r));
    let blow = BlowUpInstance {
        h,
        g: host,
        reduced: PartitionedGraph::build(&[r + 1], &reduced_edges)?,
        candidacy,
        colouring: inst.colouring.clone(),
        phi0,
        params: Params { d: p.d / 2.0, ..p },
    };
    let out = rainbow_blowup_embed(&blow, cfg.embed, seed::derive(seed, "blow-up", 0), exec)?;
    Ok(DiracOutcome {
        phi: out.phi,
        cycle,
        dense_pairs,
        dirac_condition,
        hat_sizes,
        min_pair_ratio,
        report: out.report,
    })
}
