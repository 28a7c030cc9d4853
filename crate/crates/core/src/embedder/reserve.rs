use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::instance::BlowUpInstance;
use crate::coloursplit::{separate_colours, SeparateConfig, SliceCheck, SplitStrategy};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::graph::{bitset_from, edge_key, Bipartite, EdgeSetColouring, PartitionedGraph};
use crate::partition::RoundColouring;
use crate::regularity::{Flavour, DEFAULT_TRIALS};

/// How colours are kept apart between rounds.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ColourPolicy {
    /// Split the palette into one class per pair of rounds and sparsify the host.
    Reserved,
    /// One class holding every colour; clashes with earlier rounds are avoided
    /// by dropping candidate edges against a ledger of used colours.
    Ledger,
}

/// The host and candidacy graphs joined into one graph: vertices of `G` keep
/// their ids, target vertex `x` becomes `offset + x`. Parts `1..=r` are the
/// host clusters, parts `r+1..=2r` the target clusters, part 0 the rest.
#[derive(Clone, Debug)]
pub struct Lifted {
    pub graph: PartitionedGraph,
    pub colouring: EdgeSetColouring,
    pub offset: usize,
    /// `(k, Δ)` of the lifted colouring on candidacy edges.
    pub candidacy_bound: (usize, usize),
}

/// Colour of candidacy edge `xv`: the union of `c(φ0(x')v)` over exceptional
/// neighbours `x'` of `x`.
pub fn lifted_colour(inst: &BlowUpInstance, phi0: &[Option<usize>], x: usize, v: usize) -> Vec<usize> {
    let mut out = Vec::new();
    for &y in inst.h.neighbours(x) {
        if inst.h.part_of(y) == 0 {
            if let Some(w) = phi0[y] {
                out.extend_from_slice(inst.colouring.get(w, v));
            }
        }
    }
    out.sort_unstable();
    out.dedup();
    out
}

/// Build the union of the host (on reduced-graph pairs) and the candidacy
/// graphs, with the exceptional colouring lifted onto candidacy edges.
pub fn lift_exceptional_colouring(inst: &BlowUpInstance) -> Result<Lifted> {
    let (h, g, r) = (&inst.h, &inst.g, inst.r());
    let offset = g.n();
    let phi0 = inst.phi0_map();
    let mut parts: Vec<Vec<usize>> = vec![g.part(0).to_vec()];
    parts[0].extend(h.part(0).iter().map(|&x| offset + x));
    for j in 1..=r {
        parts.push(g.part(j).to_vec());
    }
    for j in 1..=r {
        parts.push(h.part(j).iter().map(|&x| offset + x).collect());
    }
    let mut edges = Vec::new();
    let mut sets = Vec::new();
    for &(i, j) in inst.reduced.edges() {
        for &u in g.part(i) {
            for &w in g.neighbours(u) {
                if g.part_of(w) == j {
                    edges.push((u, w));
                    sets.push(inst.colouring.get(u, w).to_vec());
                }
            }
        }
    }
    let mut cand_counts: BTreeMap<usize, usize> = BTreeMap::new();
    let mut cand_delta = 0;
    for j in 1..=r {
        let a = &inst.candidacy[j];
        for (l, rr) in a.edges() {
            let (x, v) = (a.left_labels()[l], a.right_labels()[rr]);
            let set = lifted_colour(inst, &phi0, x, v);
            cand_delta = cand_delta.max(set.len());
            for &c in &set {
                *cand_counts.entry(c).or_default() += 1;
            }
            edges.push((offset + x, v));
            sets.push(set);
        }
    }
    let graph = PartitionedGraph::with_parts(offset + h.n(), parts, &edges)?;
    let mut colouring = EdgeSetColouring::new(inst.colouring.universe());
    for (&(u, v), set) in edges.iter().zip(&sets) {
        if !set.is_empty() {
            colouring.assign(u, v, set)?;
        }
    }
    let k = cand_counts.values().copied().max().unwrap_or(0);
    Ok(Lifted {
        graph,
        colouring,
        offset,
        candidacy_bound: (k, cand_delta),
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReserveConfig {
    pub eps: f64,
    pub d: f64,
    pub mu: f64,
    pub strategy: SplitStrategy,
    pub trials: usize,
    pub budget: usize,
    pub split_budget: usize,
}

impl ReserveConfig {
    pub fn from_params(eps: f64, d: f64, mu: f64) -> Self {
        ReserveConfig {
            eps,
            d,
            mu,
            strategy: SplitStrategy::Retry,
            trials: DEFAULT_TRIALS,
            budget: 10,
            split_budget: 20,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ReserveReport {
    pub policy: ColourPolicy,
    /// Round pair `(t1, t2)`, `t1 < t2`, owning each class.
    pub class_pairs: Vec<(usize, usize)>,
    pub class_sizes: Vec<usize>,
    /// Largest colour set on the lifted graph (the exponent in `d'`).
    pub set_size: usize,
    pub lifted_bound: (usize, usize),
    pub lifted_cap: f64,
    pub host_edges: usize,
    pub kept_edges: usize,
    pub candidacy_edges: usize,
    pub kept_candidacy_edges: usize,
    pub checks: Vec<SliceCheck>,
    pub attempts: usize,
}

/// Sparsified host, reduced candidacy graphs and colour classes.
#[derive(Clone, Debug)]
pub struct Reservation {
    pub g_star: PartitionedGraph,
    pub a0: Vec<Bipartite>,
    /// Class of every colour, `None` for colours in no class.
    pub class_of: Vec<Option<usize>>,
    pub class_index: BTreeMap<(usize, usize), usize>,
    pub report: ReserveReport,
}

impl Reservation {
    /// Colours allowed after round `t`: every class whose later round is at most `t`.
    pub fn allowed_after(&self, t: usize) -> Vec<bool> {
        let ok: Vec<bool> = self.report.class_pairs.iter().map(|&(_, t2)| t2 <= t).collect();
        self.class_of.iter().map(|c| c.is_some_and(|k| ok[k])).collect()
    }

    pub fn classes(&self) -> usize {
        self.report.class_pairs.len()
    }
}

fn pair_key(psi: &RoundColouring, i: usize, j: usize) -> (usize, usize) {
    edge_key(psi.psi[i], psi.psi[j])
}

/// Reserve colour classes for pairs of rounds and sparsify the host so that
/// every kept edge between `V_i` and `V_j` carries only colours of the class
/// of `(ψ(i), ψ(j))`, and candidacy graphs only keep edges whose lifted
/// colours lie in the class reserved for the exceptional edges of their round.
pub fn reserve_colours(
    inst: &BlowUpInstance,
    psi: &RoundColouring,
    policy: ColourPolicy,
    cfg: ReserveConfig,
    seed: u64,
    exec: Execution,
) -> Result<Reservation> {
    let (g, r) = (&inst.g, inst.r());
    let lifted = lift_exceptional_colouring(inst)?;
    let lifted_cap = 2.0 * cfg.mu * inst.n() as f64;
    let set_size = lifted
        .graph
        .edges()
        .iter()
        .map(|&(u, v)| lifted.colouring.get(u, v).len())
        .max()
        .unwrap_or(0)
        .max(1);
    let host_edges = inst
        .reduced
        .edges()
        .iter()
        .map(|&(i, j)| g.bipartite(g.part(i), g.part(j)).edge_count())
        .sum::<usize>()
        + (1..=r).map(|j| g.bipartite(g.part(0), g.part(j)).edge_count()).sum::<usize>();
    let candidacy_edges: usize = inst.candidacy.iter().skip(1).map(Bipartite::edge_count).sum();

    let mut active: Vec<(usize, usize)> = inst.reduced.edges().iter().map(|&(i, j)| pair_key(psi, i, j)).collect();
    if policy == ColourPolicy::Reserved {
        for j in 1..=r {
            let a = &inst.candidacy[j];
            let lifted_here = a.edges().into_iter().any(|(l, rr)| {
                let x = lifted.offset + a.left_labels()[l];
                !lifted.colouring.get(x, a.right_labels()[rr]).is_empty()
            });
            if lifted_here {
                active.push((0, psi.psi[j]));
            }
        }
    }
    active.sort_unstable();
    active.dedup();

    if policy == ColourPolicy::Ledger || active.len() <= 1 {
        let pair = active.first().copied().unwrap_or((0, 1));
        let g_star = g.edge_subgraph(|(u, v)| {
            let (i, j) = (g.part_of(u), g.part_of(v));
            (i == 0) != (j == 0) || (i != 0 && inst.reduced.has_edge(i, j))
        });
        let kept_edges = g_star.edge_count();
        return Ok(Reservation {
            g_star,
            a0: inst.candidacy.clone(),
            class_of: vec![Some(0); inst.colouring.universe()],
            class_index: BTreeMap::from([(pair, 0)]),
            report: ReserveReport {
                policy,
                class_pairs: vec![pair],
                class_sizes: vec![inst.colouring.universe()],
                set_size,
                lifted_bound: lifted.candidacy_bound,
                lifted_cap,
                host_edges,
                kept_edges,
                candidacy_edges,
                kept_candidacy_edges: candidacy_edges,
                checks: Vec::new(),
                attempts: 0,
            },
        });
    }

    let class_index: BTreeMap<(usize, usize), usize> = active.iter().enumerate().map(|(k, &p)| (p, k)).collect();
    let mut pairs = Vec::new();
    let mut required = Vec::new();
    for &(i, j) in inst.reduced.edges() {
        required.push((pairs.len(), class_index[&pair_key(psi, i, j)]));
        pairs.push((i, j));
    }
    for j in 1..=r {
        if let Some(&k) = class_index.get(&(0, psi.psi[j])) {
            required.push((pairs.len(), k));
            pairs.push((j, j + r));
        }
    }
    let sep_cfg = SeparateConfig {
        t: active.len(),
        eps: cfg.eps,
        d: cfg.d,
        flavour: Flavour::LowerSuper,
        strategy: cfg.strategy,
        kappa: None,
        pad_bound: (cfg.mu * inst.n() as f64).floor().max(1.0) as usize,
        trials: cfg.trials,
        budget: cfg.budget,
        split_budget: cfg.split_budget,
    };
    let sep = separate_colours(&lifted.graph, &lifted.colouring, &pairs, Some(&required), sep_cfg, seed, exec)?;
    let classes: Vec<_> = sep
        .classes
        .iter()
        .map(|cl| bitset_from(inst.colouring.universe(), cl.iter().copied()))
        .collect();
    let inside = |set: &[usize], k: usize| set.iter().all(|&a| classes[k].contains(a));

    let g_star = g.edge_subgraph(|(u, v)| {
        let (i, j) = (g.part_of(u), g.part_of(v));
        let set = inst.colouring.get(u, v);
        if i != 0 && j != 0 {
            inst.reduced.has_edge(i, j) && inside(set, class_index[&pair_key(psi, i, j)])
        } else if i == 0 && j == 0 {
            false
        } else {
            let cluster = i.max(j);
            class_index.get(&(0, psi.psi[cluster])).is_some_and(|&k| inside(set, k))
        }
    });
    let phi0 = inst.phi0_map();
    let mut a0 = vec![Bipartite::empty(Vec::new(), Vec::new())];
    for j in 1..=r {
        let a = &inst.candidacy[j];
        let class = class_index.get(&(0, psi.psi[j])).copied();
        a0.push(a.filtered(|l, rr| {
            let set = lifted_colour(inst, &phi0, a.left_labels()[l], a.right_labels()[rr]);
            set.is_empty() || class.is_some_and(|k| inside(&set, k))
        }));
    }

    // Admissible colours on every kept edge, and kept exceptional neighbourhoods.
    for &(u, v) in g_star.edges() {
        let (i, j) = (g.part_of(u), g.part_of(v));
        let k = if i != 0 && j != 0 {
            class_index[&pair_key(psi, i, j)]
        } else {
            class_index[&(0, psi.psi[i.max(j)])]
        };
        if !inside(inst.colouring.get(u, v), k) {
            return Err(Error::Invariant(format!("kept edge ({u},{v}) carries a colour outside its class")));
        }
    }
    for &(x0, w) in &inst.phi0 {
        for &x in inst.h.neighbours(x0) {
            let j = inst.h.part_of(x);
            if j == 0 {
                continue;
            }
            let a = &a0[j];
            let l = a.left_labels().iter().position(|&z| z == x).expect("cluster member");
            for rr in a.row(l).ones() {
                let v = a.right_labels()[rr];
                if !g_star.has_edge(w, v) {
                    return Err(Error::Invariant(format!(
                        "candidate {v} of {x} is not joined to the image {w} of its exceptional neighbour"
                    )));
                }
            }
        }
    }

    let mut class_of = vec![None; inst.colouring.universe()];
    for (a, &k) in sep.class_of.iter().enumerate() {
        class_of[a] = Some(k);
    }
    let kept_edges = g_star.edge_count();
    Ok(Reservation {
        g_star,
        class_of,
        report: ReserveReport {
            policy,
            class_pairs: active,
            class_sizes: sep.classes.iter().map(Vec::len).collect(),
            set_size,
            lifted_bound: lifted.candidacy_bound,
            lifted_cap,
            host_edges,
            kept_edges,
            candidacy_edges,
            kept_candidacy_edges: a0.iter().skip(1).map(Bipartite::edge_count).sum(),
            checks: sep.checks,
            attempts: sep.attempts,
        },
        a0,
        class_index,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedder::instance::Params;
    use crate::partition::round_colouring;
    use rand::{Rng, SeedableRng};

    /// Matchings-form instance on a path of `r` clusters of size `m`, random
    /// host pairs of density `p`, distinct singleton colours.
    fn path_instance(r: usize, m: usize, p: f64, x0: usize, seed: u64) -> BlowUpInstance {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut sizes = vec![x0];
        sizes.extend(std::iter::repeat_n(m, r));
        let base = |j: usize| x0 + (j - 1) * m;
        let mut h_edges = Vec::new();
        for j in 1..r {
            for k in 0..m {
                h_edges.push((base(j) + k, base(j + 1) + k));
            }
        }
        // exceptional vertex e joins the first vertex of cluster 1 + e
        for e in 0..x0 {
            h_edges.push((e, base(1) + e));
        }
        let mut g_edges = Vec::new();
        for j in 1..r {
            for a in 0..m {
                for b in 0..m {
                    if rng.random_bool(p) {
                        g_edges.push((base(j) + a, base(j + 1) + b));
                    }
                }
            }
        }
        for e in 0..x0 {
            for b in 0..m {
                g_edges.push((e, base(1) + b));
            }
        }
        let h = PartitionedGraph::build(&sizes, &h_edges).unwrap();
        let g = PartitionedGraph::build(&sizes, &g_edges).unwrap();
        let mut c = EdgeSetColouring::new(g.edge_count());
        for (k, &(u, v)) in g.edges().iter().enumerate() {
            c.assign(u, v, &[k]).unwrap();
        }
        let reduced: Vec<(usize, usize)> = (1..r).map(|j| (j, j + 1)).collect();
        BlowUpInstance {
            candidacy: BlowUpInstance::complete_candidacy(&h, &g),
            reduced: PartitionedGraph::build(&[r + 1], &reduced).unwrap(),
            phi0: (0..x0).map(|e| (e, e)).collect(),
            h,
            g,
            colouring: c,
            params: Params {
                eps: 0.1,
                d: 0.6,
                mu: 0.05,
                delta: 2,
            },
        }
    }

    #[test]
    fn two_rounds_give_one_class_holding_the_pair() {
        let inst = path_instance(2, 12, 0.9, 0, 1);
        let psi = round_colouring(&inst.reduced, true).unwrap();
        let res = reserve_colours(&inst, &psi, ColourPolicy::Reserved, ReserveConfig::from_params(0.2, 0.6, 0.05), 3, Execution::Sequential).unwrap();
        assert_eq!(res.classes(), 1);
        assert_eq!(res.report.class_pairs, vec![(1, 2)]);
        assert_eq!(res.g_star.edge_count(), inst.g.edge_count());
    }

    #[test]
    fn exceptional_free_instances_keep_candidacy() {
        let inst = path_instance(3, 12, 0.9, 0, 2);
        let psi = round_colouring(&inst.reduced, true).unwrap();
        let res = reserve_colours(&inst, &psi, ColourPolicy::Reserved, ReserveConfig::from_params(0.2, 0.6, 0.05), 3, Execution::Sequential).unwrap();
        assert_eq!(res.a0, inst.candidacy);
        assert!(res.report.class_pairs.iter().all(|&(t1, _)| t1 > 0));
    }

    #[test]
    fn kept_edges_carry_only_their_class() {
        let inst = path_instance(4, 14, 0.9, 2, 5);
        let lifted = lift_exceptional_colouring(&inst).unwrap();
        // x = first vertex of cluster 1 has exceptional neighbour 0, so its
        // candidacy edge to v carries the colour of 0v.
        let (x, v) = (2, 2);
        assert_eq!(lifted.colouring.get(lifted.offset + x, v), inst.colouring.get(0, v));
        let psi = round_colouring(&inst.reduced, true).unwrap();
        let res = reserve_colours(&inst, &psi, ColourPolicy::Reserved, ReserveConfig::from_params(0.2, 0.6, 0.05), 9, Execution::Parallel).unwrap();
        for &(u, w) in res.g_star.edges() {
            let (i, j) = (inst.g.part_of(u), inst.g.part_of(w));
            let pair = if i == 0 || j == 0 {
                (0, psi.psi[i.max(j)])
            } else {
                edge_key(psi.psi[i], psi.psi[j])
            };
            let k = res.class_index[&pair];
            for &a in inst.colouring.get(u, w) {
                assert_eq!(res.class_of[a], Some(k));
            }
        }
        assert!(res.class_index.contains_key(&(0, psi.psi[1])));
    }
}
