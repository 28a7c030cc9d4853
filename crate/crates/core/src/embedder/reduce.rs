use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::feasibility::check_feasible;
use super::instance::BlowUpInstance;
use crate::error::{Error, Result};
use crate::graph::{Bipartite, PartitionedGraph};
use crate::matching::perfect_matching;
use crate::partition::two_independent_refine;
use crate::seed;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReduceConfig {
    /// Sub-clusters per cluster; `None` means `Δ²`.
    pub parts: Option<usize>,
    /// Equal sub-cluster sizes, moving the remainder of every cluster into the
    /// exceptional set. Otherwise sizes differ by at most one.
    pub exact: bool,
    /// Random host refinements tried before giving up.
    pub attempts: usize,
}

impl Default for ReduceConfig {
    fn default() -> Self {
        ReduceConfig {
            parts: None,
            exact: false,
            attempts: 64,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReduceStats {
    pub parts: usize,
    pub clusters: usize,
    pub reduced_edges: usize,
    /// Vertices moved from clusters to the exceptional set.
    pub moved: usize,
    /// Cluster vertices whose only exceptional neighbour is a moved vertex.
    pub new_exceptional_neighbours: usize,
    /// Moved vertices whose image misses the neighbourhood threshold.
    pub image_shortfall: usize,
    pub attempts: usize,
    /// Smallest `d_G(v, V*)/|V*|` over new reduced pairs.
    pub min_host_ratio: f64,
    /// Smallest `d_A(x, V*)/|V*|` over new candidacy graphs.
    pub min_candidacy_ratio: f64,
}

#[derive(Clone, Debug)]
pub struct Reduction {
    /// Same vertex ids as the input; only the partitions, reduced graph,
    /// candidacy graphs and `φ0` change, so an embedding of the result is an
    /// embedding of the input.
    pub instance: BlowUpInstance,
    /// Original cluster of every new cluster (`0` for the exceptional part).
    pub parent: Vec<usize>,
    pub stats: ReduceStats,
}

/// `B ⊆ X_1 ∪ … ∪ X_r` with `|B ∩ X_i| = moves[i]` such that `X_0 ∪ B` is
/// independent and two of its vertices share a neighbour only inside `X_0`.
fn pick_moved(inst: &BlowUpInstance, moves: &[usize]) -> Result<Vec<usize>> {
    let h = &inst.h;
    // blocked: within distance two of X_0 ∪ B (excluding X_0's own common neighbours)
    let mut blocked = vec![false; h.n()];
    let block_around = |blocked: &mut Vec<bool>, x: usize| {
        blocked[x] = true;
        for &y in h.neighbours(x) {
            blocked[y] = true;
            for &z in h.neighbours(y) {
                blocked[z] = true;
            }
        }
    };
    for &x in inst.x(0) {
        block_around(&mut blocked, x);
    }
    let mut out = Vec::new();
    for i in 1..=inst.r() {
        let mut taken = 0;
        for &x in inst.x(i) {
            if taken == moves[i] {
                break;
            }
            if !blocked[x] {
                block_around(&mut blocked, x);
                out.push(x);
                taken += 1;
            }
        }
        if taken < moves[i] {
            return Err(Error::pre(format!(
                "cluster {i}: only {taken} of {} vertices can move to the exceptional set",
                moves[i]
            )));
        }
    }
    Ok(out)
}

/// Refine a general instance into partial-matchings form: every cluster is
/// split into 2-independent sub-clusters, every host cluster into random parts
/// of matching sizes, and the candidacy graphs restricted accordingly. In
/// exact mode the size remainders first move to the exceptional set and `φ0`
/// is extended greedily. The reduced graph joins sub-clusters that `H` joins.
pub fn reduce_to_matchings(inst: &BlowUpInstance, cfg: ReduceConfig, seed: u64) -> Result<Reduction> {
    let (h, g) = (&inst.h, &inst.g);
    let r = inst.r();
    let p = inst.params;
    let q = cfg.parts.unwrap_or(p.delta.max(1).pow(2)).max(1);

    let moves: Vec<usize> = (0..=r)
        .map(|i| if i == 0 || !cfg.exact { 0 } else { inst.x(i).len() % q })
        .collect();
    let moved = pick_moved(inst, &moves)?;
    let mut is_moved = vec![false; h.n()];
    for &x in &moved {
        is_moved[x] = true;
    }

    // images of moved vertices: candidates of x keeping most of each neighbour's candidates
    let mut phi0 = inst.phi0.clone();
    let mut used = vec![false; g.n()];
    let pos_h = super::rounds::positions(h);
    let pos_g = super::rounds::positions(g);
    let mut shortfall = 0;
    for &x in &moved {
        let j = h.part_of(x);
        let a = &inst.candidacy[j];
        let mut best: Option<(f64, usize)> = None;
        for rr in a.row(pos_h[x]).ones() {
            let v = a.right_labels()[rr];
            if used[v] {
                continue;
            }
            let mut worst = f64::INFINITY;
            for &y in h.neighbours(x) {
                let i = h.part_of(y);
                if i == 0 {
                    continue;
                }
                let ai = &inst.candidacy[i];
                let cand: Vec<usize> = ai.row(pos_h[y]).ones().map(|c| ai.right_labels()[c]).collect();
                if cand.is_empty() {
                    continue;
                }
                let hit = cand.iter().filter(|&&w| g.has_edge(v, w)).count();
                worst = worst.min(hit as f64 / cand.len() as f64);
            }
            if best.is_none_or(|(b, _)| worst > b) {
                best = Some((worst, v));
            }
        }
        let Some((ratio, v)) = best else {
            return Err(Error::pre(format!("moved vertex {x} has no free candidate")));
        };
        if ratio < p.d - p.eps {
            shortfall += 1;
        }
        used[v] = true;
        phi0.push((x, v));
    }
    let moved_image: Vec<Option<usize>> = {
        let mut m = vec![None; h.n()];
        for &(x, v) in &phi0[inst.phi0.len()..] {
            m[x] = Some(v);
        }
        m
    };

    // candidacy restricted for vertices whose exceptional neighbour moved
    let mut w_b = 0;
    let mut restricted: Vec<Bipartite> = inst.candidacy.clone();
    for a in restricted.iter_mut().skip(1) {
        let images: Vec<Option<usize>> = a
            .left_labels()
            .iter()
            .map(|&y| h.neighbours(y).iter().find_map(|&x| moved_image[x]))
            .collect();
        w_b += images.iter().filter(|m| m.is_some()).count();
        let labels = a.right_labels().to_vec();
        *a = a.filtered(|l, rr| images[l].is_none_or(|w| g.has_edge(w, labels[rr])));
    }

    // target refinement
    let mut x_parts: Vec<Vec<usize>> = vec![inst.x(0).iter().copied().chain(moved.iter().copied()).collect()];
    let mut parent = vec![0];
    for i in 1..=r {
        let class: Vec<usize> = inst.x(i).iter().copied().filter(|&x| !is_moved[x]).collect();
        let split = two_independent_refine(h, &class, q, cfg.exact, seed::derive(seed, "refine-target", i as u64))?;
        for part in split {
            x_parts.push(part);
            parent.push(i);
        }
    }
    let clusters = x_parts.len() - 1;

    // reduced graph: sub-clusters joined by an H-edge
    let mut part_of_x = vec![0; h.n()];
    for (k, part) in x_parts.iter().enumerate() {
        for &x in part {
            part_of_x[x] = k;
        }
    }
    let mut reduced_edges: Vec<(usize, usize)> = h
        .edges()
        .iter()
        .map(|&(x, y)| (part_of_x[x], part_of_x[y]))
        .filter(|&(a, b)| a != 0 && b != 0)
        .map(|(a, b)| (a.min(b), a.max(b)))
        .collect();
    reduced_edges.sort_unstable();
    reduced_edges.dedup();
    let reduced = PartitionedGraph::build(&[clusters + 1], &reduced_edges)?;

    // host refinement
    let v0: Vec<usize> = inst.v(0).iter().copied().chain(phi0[inst.phi0.len()..].iter().map(|&(_, v)| v)).collect();
    let d_cand = p.d * p.d / 2.0;
    let slack = 3.0 * p.eps.sqrt();
    let good_slack = 8.0 * (p.delta.max(1) as f64).powi(2) * p.eps;
    let mut best_ratios = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    for attempt in 0..cfg.attempts.max(1) {
        let mut rng = seed::rng(seed, "refine-host", attempt as u64);
        let mut v_parts: Vec<Vec<usize>> = vec![v0.clone()];
        for i in 1..=r {
            let subs: Vec<usize> = (1..=clusters).filter(|&k| parent[k] == i).collect();
            let mut cap: Vec<usize> = subs.iter().map(|&k| x_parts[k].len()).collect();
            let mut assigned: Vec<Vec<usize>> = vec![Vec::new(); subs.len()];
            let a = &restricted[i];
            let free: Vec<usize> = inst.v(i).iter().copied().filter(|&v| !used[v]).collect();
            let ratio = |v: usize, s: usize| {
                let part = &x_parts[subs[s]];
                let deg = part.iter().filter(|&&x| a.has(pos_h[x], pos_g[v])).count();
                deg as f64 / part.len().max(1) as f64
            };
            let mut rest = Vec::new();
            for &v in &free {
                let ratios: Vec<f64> = (0..subs.len()).map(|s| ratio(v, s)).collect();
                let good = ratios.iter().all(|&x| x >= d_cand - good_slack);
                if good {
                    rest.push(v);
                    continue;
                }
                let pick = (0..subs.len())
                    .filter(|&s| cap[s] > 0)
                    .max_by(|&s, &t| ratios[s].total_cmp(&ratios[t]));
                match pick {
                    Some(s) => {
                        cap[s] -= 1;
                        assigned[s].push(v);
                    }
                    None => rest.push(v),
                }
            }
            rest.shuffle(&mut rng);
            let mut it = rest.into_iter();
            for s in 0..subs.len() {
                assigned[s].extend(it.by_ref().take(cap[s]));
            }
            v_parts.extend(assigned);
        }
        let g_new = PartitionedGraph::with_parts(g.n(), v_parts.clone(), g.edges())?;
        let candidacy: Vec<Bipartite> = (0..=clusters)
            .map(|k| {
                if k == 0 {
                    return Bipartite::empty(Vec::new(), Vec::new());
                }
                let a = &restricted[parent[k]];
                let mut b = Bipartite::empty(x_parts[k].clone(), v_parts[k].clone());
                for (l, &x) in x_parts[k].iter().enumerate() {
                    for (rr, &v) in v_parts[k].iter().enumerate() {
                        if a.has(pos_h[x], pos_g[v]) {
                            b.insert(l, rr);
                        }
                    }
                }
                b
            })
            .collect();
        let mut host_ratio = f64::INFINITY;
        for &(k, m) in &reduced_edges {
            for (s, t) in [(k, m), (m, k)] {
                let target = &v_parts[t];
                for &v in &v_parts[s] {
                    let deg = g.neighbours(v).iter().filter(|&&w| g_new.part_of(w) == t).count();
                    host_ratio = host_ratio.min(deg as f64 / target.len().max(1) as f64);
                }
            }
        }
        let mut cand_ratio = f64::INFINITY;
        for b in &candidacy[1..] {
            for l in 0..b.left_len() {
                cand_ratio = cand_ratio.min(b.left_degree(l) as f64 / b.right_len().max(1) as f64);
            }
        }
        if host_ratio.is_finite() || cand_ratio.is_finite() {
            best_ratios = (best_ratios.0.max(host_ratio), best_ratios.1.max(cand_ratio));
        }
        let ok = host_ratio >= p.d - slack
            && cand_ratio >= d_cand - slack
            && host_ratio > 0.0
            && candidacy[1..].iter().all(|b| perfect_matching(b).is_ok());
        if !ok {
            continue;
        }
        let h_new = PartitionedGraph::with_parts(h.n(), x_parts.clone(), h.edges())?;
        let out = BlowUpInstance {
            h: h_new,
            g: g_new,
            reduced,
            candidacy,
            colouring: inst.colouring.clone(),
            phi0,
            params: p,
        };
        let f = check_feasible(&out, f64::INFINITY)?;
        if f.neighbourhoods.is_some() || f.colour_clash.is_some() {
            return Err(Error::Invariant(format!("refined exceptional map is not feasible: {f:?}")));
        }
        let stats = ReduceStats {
            parts: q,
            clusters,
            reduced_edges: reduced_edges.len(),
            moved: moved.len(),
            new_exceptional_neighbours: w_b,
            image_shortfall: shortfall,
            attempts: attempt + 1,
            min_host_ratio: if host_ratio.is_finite() { host_ratio } else { 1.0 },
            min_candidacy_ratio: if cand_ratio.is_finite() { cand_ratio } else { 1.0 },
        };
        return Ok(Reduction {
            instance: out,
            parent,
            stats,
        });
    }
    Err(Error::budget(
        "reduce_to_matchings",
        cfg.attempts,
        format!(
            "best host degree ratio {:.3}, best candidacy ratio {:.3}",
            best_ratios.0, best_ratios.1
        ),
    ))
}
