use std::collections::{BTreeMap, HashMap};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::graph::{EdgeSetColouring, PartitionedGraph};
use crate::matching::{covering_conflict_free_matching, CoverGroup, SampleMode};
use crate::partition::two_independent_refine;
use crate::seed;

/// A clustered host (`g` parts `1..=r`, part 0 unused) and a small target
/// whose parts `Z_i = X_i ∪ Y_i` follow the reduced graph; `x` lists the
/// vertices to embed now, the rest of the target only receives candidate sets.
#[derive(Clone, Debug)]
pub struct PartialInstance {
    pub g: PartitionedGraph,
    pub reduced: PartitionedGraph,
    pub h: PartitionedGraph,
    pub x: Vec<usize>,
    pub colouring: EdgeSetColouring,
    pub eps: f64,
    pub d: f64,
    pub mu: f64,
    pub delta: usize,
    /// Required candidate set size as a fraction of `n/r`.
    pub d_prime: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PartialConfig {
    pub attempts: usize,
    pub sample: SampleMode,
    /// Whole-run retries after a round fails.
    pub retries: usize,
}

impl Default for PartialConfig {
    fn default() -> Self {
        PartialConfig {
            attempts: 4096,
            sample: SampleMode::chain(),
            retries: 8,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PartialChecks {
    /// Every embedded vertex lies in its own cluster.
    pub location: bool,
    /// Smallest candidate set, against the required size.
    pub min_candidates: usize,
    pub required: f64,
    pub sizes: bool,
    /// Candidates are joined to every embedded neighbour by reserved-colour edges.
    pub reserved_edges: bool,
    /// Edges from two embedded neighbours to a common candidate never share a colour.
    pub distinct_colours: bool,
    /// The embedded part is a rainbow subgraph avoiding the reserve.
    pub rainbow: bool,
}

impl PartialChecks {
    pub fn passed(&self) -> bool {
        self.location && self.sizes && self.reserved_edges && self.distinct_colours && self.rainbow
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PartialRound {
    pub round: usize,
    pub embedded: usize,
    pub pruned: usize,
    pub sampling_attempts: usize,
    pub min_candidates: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PartialEmbedding {
    pub phi: Vec<(usize, usize)>,
    pub candidates: Vec<(usize, Vec<usize>)>,
    /// Colours set aside for the edges from embedded vertices to candidates.
    pub reserve: Vec<usize>,
    pub class_pairs: Vec<(usize, usize)>,
    pub rounds: Vec<PartialRound>,
    pub tries: usize,
    /// The target has at most `ε·n/r` vertices.
    pub small_target: bool,
    pub checks: PartialChecks,
}

struct Setup {
    /// Round of each target vertex: `1..=T` for `x`, `T + 1` for the rest.
    round: Vec<usize>,
    rounds: usize,
    /// Class of each colour, `usize::MAX` for colours left out.
    class_of: Vec<usize>,
    class_index: BTreeMap<(usize, usize), usize>,
}

fn edge_class(c: &EdgeSetColouring, class_of: &[usize], u: usize, v: usize) -> Option<usize> {
    let set = c.get(u, v);
    let first = *class_of.get(*set.first()?)?;
    (first != usize::MAX && set.iter().all(|&a| class_of[a] == first)).then_some(first)
}

fn reserve_colours(setup: &Setup) -> Vec<usize> {
    let t_last = setup.rounds + 1;
    let classes: Vec<usize> = setup
        .class_index
        .iter()
        .filter(|(&(_, t2), _)| t2 == t_last)
        .map(|(_, &k)| k)
        .collect();
    (0..setup.class_of.len()).filter(|&a| classes.contains(&setup.class_of[a])).collect()
}

fn check(
    inst: &PartialInstance,
    reserve: &[usize],
    phi: &HashMap<usize, usize>,
    cand: &HashMap<usize, Vec<usize>>,
) -> PartialChecks {
    let (g, h, c) = (&inst.g, &inst.h, &inst.colouring);
    let r = (g.part_count() - 1).max(1);
    let n: usize = (1..g.part_count()).map(|i| g.part(i).len()).sum();
    let mut in_reserve = vec![false; c.universe()];
    for &a in reserve {
        if a < in_reserve.len() {
            in_reserve[a] = true;
        }
    }
    let reserve_class = |a: usize| in_reserve.get(a).copied().unwrap_or(false);
    let location = phi.iter().all(|(&x, &v)| g.part_of(v) == h.part_of(x));
    let required = inst.d_prime * n as f64 / r as f64;
    let min_candidates = cand.values().map(Vec::len).min().unwrap_or(usize::MAX);
    let sizes = cand.values().all(|s| s.len() as f64 >= required - 1e-9);
    let mut reserved_edges = true;
    let mut distinct_colours = true;
    for (&y, s) in cand {
        let images: Vec<usize> = h.neighbours(y).iter().filter_map(|x| phi.get(x).copied()).collect();
        for &v in s {
            for (k, &w) in images.iter().enumerate() {
                if !g.has_edge(w, v) || !c.get(w, v).iter().all(|&a| reserve_class(a)) {
                    reserved_edges = false;
                }
                for &w2 in &images[k + 1..] {
                    if c.get(w, v).iter().any(|a| c.get(w2, v).contains(a)) {
                        distinct_colours = false;
                    }
                }
            }
        }
    }
    let mut seen = std::collections::HashSet::new();
    let mut rainbow = true;
    for &(a, b) in h.edges() {
        if let (Some(&u), Some(&v)) = (phi.get(&a), phi.get(&b)) {
            if !g.has_edge(u, v) {
                rainbow = false;
                continue;
            }
            for &col in c.get(u, v) {
                if reserve_class(col) || !seen.insert(col) {
                    rainbow = false;
                }
            }
        }
    }
    let mut images: Vec<usize> = phi.values().copied().collect();
    images.sort_unstable();
    let injective = images.windows(2).all(|w| w[0] != w[1]);
    PartialChecks {
        location: location && injective,
        min_candidates,
        required,
        sizes,
        reserved_edges,
        distinct_colours,
        rainbow,
    }
}

fn setup(inst: &PartialInstance, seed: u64) -> Result<Setup> {
    let (h, c) = (&inst.h, &inst.colouring);
    let t = inst.delta.max(1).pow(2) + 1;
    // fewer embedded vertices than classes: every vertex gets its own round
    let classes = if inst.x.len() < t {
        inst.x.iter().map(|&x| vec![x]).collect()
    } else {
        two_independent_refine(h, &inst.x, t, false, seed::derive(seed, "partial-classes", 0))?
    };
    let mut round = vec![t + 1; h.n()];
    for (k, class) in classes.iter().enumerate() {
        for &x in class {
            round[x] = k + 1;
        }
    }
    let mut pairs: Vec<(usize, usize)> = h
        .edges()
        .iter()
        .map(|&(a, b)| (round[a].min(round[b]), round[a].max(round[b])))
        .filter(|&(t1, _)| t1 <= t)
        .collect();
    pairs.sort_unstable();
    pairs.dedup();
    let class_index: BTreeMap<(usize, usize), usize> = pairs.iter().enumerate().map(|(k, &p)| (p, k)).collect();
    let mut rng = seed::rng(seed, "partial-colours", 0);
    let class_of = (0..c.universe())
        .map(|_| if pairs.is_empty() { usize::MAX } else { rng.random_range(0..pairs.len()) })
        .collect();
    Ok(Setup {
        round,
        rounds: t,
        class_of,
        class_index,
    })
}

type RoundResult = (HashMap<usize, usize>, HashMap<usize, Vec<usize>>, Vec<PartialRound>);

fn run(inst: &PartialInstance, s: &Setup, cfg: PartialConfig, seed: u64, exec: Execution) -> Result<RoundResult> {
    let (g, h, c) = (&inst.g, &inst.h, &inst.colouring);
    let in_class = |u: usize, v: usize, t1: usize, t2: usize| {
        let key = (t1.min(t2), t1.max(t2));
        match (s.class_index.get(&key), edge_class(c, &s.class_of, u, v)) {
            (Some(&k), Some(e)) => k == e && g.has_edge(u, v),
            _ => false,
        }
    };
    let mut cand: HashMap<usize, Vec<usize>> = (0..h.n()).map(|z| (z, g.part(h.part_of(z)).to_vec())).collect();
    let mut phi: HashMap<usize, usize> = HashMap::new();
    let mut used = vec![false; g.n()];
    let mut stats = Vec::new();
    for t in 1..=s.rounds {
        let members: Vec<usize> = (0..h.n()).filter(|&x| s.round[x] == t).collect();
        if members.is_empty() {
            continue;
        }
        // keep candidates with a typical number of neighbours in every later neighbour's set
        let mut pruned = 0;
        for &x in &members {
            let later: Vec<usize> = h.neighbours(x).iter().copied().filter(|&y| s.round[y] > t).collect();
            let before = cand[&x].len();
            let keep: Vec<usize> = cand[&x]
                .iter()
                .copied()
                .filter(|&v| {
                    later.iter().all(|&y| {
                        let sy = &cand[&y];
                        let hits = sy.iter().filter(|&&w| in_class(v, w, t, s.round[y])).count();
                        let density = class_density(g, c, s, h.part_of(x), h.part_of(y), t, s.round[y]);
                        hits as f64 >= 0.75 * density * sy.len() as f64
                    })
                })
                .filter(|&v| !used[v])
                .collect();
            pruned += before - keep.len();
            cand.insert(x, keep);
        }
        // one cover group per cluster; forced colours from earlier neighbours
        let mut by_cluster: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for &x in &members {
            by_cluster.entry(h.part_of(x)).or_default().push(x);
        }
        let mut groups = Vec::new();
        let mut forced: Vec<((usize, usize), Vec<usize>)> = Vec::new();
        for (&i, xs) in &by_cluster {
            let vs: Vec<usize> = g.part(i).iter().copied().filter(|&v| !used[v]).collect();
            let pos: HashMap<usize, usize> = vs.iter().enumerate().map(|(k, &v)| (v, k)).collect();
            let mut edges = Vec::new();
            for (l, &x) in xs.iter().enumerate() {
                for &v in &cand[&x] {
                    if let Some(&k) = pos.get(&v) {
                        edges.push((l, k));
                        let mut z: Vec<usize> = h
                            .neighbours(x)
                            .iter()
                            .filter_map(|y| phi.get(y))
                            .flat_map(|&w| c.get(w, v).iter().copied())
                            .collect();
                        z.sort_unstable();
                        forced.push(((x, v), z));
                    }
                }
            }
            groups.push(CoverGroup {
                xs: xs.clone(),
                vs,
                edges,
            });
        }
        let mut by_colour: HashMap<usize, Vec<(usize, usize)>> = HashMap::new();
        for (e, z) in &forced {
            for &a in z {
                by_colour.entry(a).or_default().push(*e);
            }
        }
        let mut conflicts = Vec::new();
        for list in by_colour.values() {
            for (k, &e) in list.iter().enumerate() {
                for &f in &list[k + 1..] {
                    conflicts.push((e, f));
                }
            }
        }
        let (matching, attempts) = covering_conflict_free_matching(
            &groups,
            &conflicts,
            Some(1),
            cfg.sample,
            cfg.attempts,
            seed::derive(seed, "partial-round", t as u64),
            exec,
        )?;
        for &(x, v) in &matching {
            phi.insert(x, v);
            used[v] = true;
        }
        // shrink the candidate sets of later vertices
        let mut min_candidates = usize::MAX;
        for z in 0..h.n() {
            if s.round[z] <= t {
                continue;
            }
            let anchor = h.neighbours(z).iter().copied().find(|y| s.round[*y] == t);
            let set: Vec<usize> = cand[&z]
                .iter()
                .copied()
                .filter(|&v| !used[v] && anchor.is_none_or(|y| in_class(phi[&y], v, t, s.round[z])))
                .collect();
            min_candidates = min_candidates.min(set.len());
            if set.is_empty() {
                return Err(Error::budget("partial_embed", 1, format!("round {t}: candidate set of {z} is empty")));
            }
            cand.insert(z, set);
        }
        stats.push(PartialRound {
            round: t,
            embedded: matching.len(),
            pruned,
            sampling_attempts: attempts,
            min_candidates,
        });
    }
    let y_cand: HashMap<usize, Vec<usize>> = cand
        .into_iter()
        .filter(|(z, _)| s.round[*z] == s.rounds + 1 && h.neighbours(*z).iter().any(|x| phi.contains_key(x)))
        .collect();
    Ok((phi, y_cand, stats))
}

fn class_density(g: &PartitionedGraph, c: &EdgeSetColouring, s: &Setup, i: usize, j: usize, t1: usize, t2: usize) -> f64 {
    let key = (t1.min(t2), t1.max(t2));
    let Some(&k) = s.class_index.get(&key) else { return 0.0 };
    let (a, b) = (g.part(i), g.part(j));
    let mut hits = 0usize;
    for &u in a {
        for &v in g.neighbours(u) {
            if g.part_of(v) == j && edge_class(c, &s.class_of, u, v) == Some(k) {
                hits += 1;
            }
        }
    }
    hits as f64 / (a.len() * b.len()).max(1) as f64
}

/// Rainbow embedding of the `x` vertices round by round (one 2-independent
/// class per round) with a private colour class per pair of rounds, while
/// every other vertex adjacent to them keeps a large candidate set joined to
/// the images of its embedded neighbours by distinctly coloured edges from
/// the reserve. All three properties are rechecked before returning.
pub fn partial_embed(inst: &PartialInstance, cfg: PartialConfig, seed: u64, exec: Execution) -> Result<PartialEmbedding> {
    let (g, h) = (&inst.g, &inst.h);
    if h.part_count() != g.part_count() || inst.reduced.n() != g.part_count() {
        return Err(Error::invalid("target, host and reduced graph disagree on the cluster count"));
    }
    if h.max_degree() > inst.delta {
        return Err(Error::pre(format!("target has maximum degree {} above {}", h.max_degree(), inst.delta)));
    }
    for i in 0..h.part_count() {
        if !h.is_independent(h.part(i)) {
            return Err(Error::pre(format!("target part {i} spans an edge")));
        }
    }
    if let Some(&(a, b)) = h.edges().iter().find(|&&(a, b)| !inst.reduced.has_edge(h.part_of(a), h.part_of(b))) {
        return Err(Error::pre(format!("target edge ({a},{b}) joins non-adjacent clusters")));
    }
    if inst.x.iter().any(|&x| x >= h.n() || h.part_of(x) == 0) {
        return Err(Error::invalid("embedded vertices must lie in clusters 1..=r"));
    }
    let r = (g.part_count() - 1).max(1);
    let n: usize = (1..g.part_count()).map(|i| g.part(i).len()).sum();
    let small_target = h.n() as f64 <= inst.eps * n as f64 / r as f64;

    let mut last = None;
    for attempt in 0..cfg.retries.max(1) {
        let tseed = seed::derive(seed, "partial-try", attempt as u64);
        let s = setup(inst, tseed)?;
        match run(inst, &s, cfg, tseed, exec) {
            Ok((phi, cand, rounds)) => {
                let reserve = reserve_colours(&s);
                let checks = check(inst, &reserve, &phi, &cand);
                if !checks.location || !checks.reserved_edges || !checks.distinct_colours || !checks.rainbow {
                    return Err(Error::Invariant(format!("partial embedding failed its recheck: {checks:?}")));
                }
                if !checks.sizes {
                    last = Some(format!("candidate sets fell to {} below {:.1}", checks.min_candidates, checks.required));
                    continue;
                }
                let mut phi: Vec<(usize, usize)> = phi.into_iter().collect();
                phi.sort_unstable();
                let mut candidates: Vec<(usize, Vec<usize>)> = cand.into_iter().collect();
                candidates.sort_unstable();
                return Ok(PartialEmbedding {
                    phi,
                    candidates,
                    reserve,
                    class_pairs: s.class_index.keys().copied().collect(),
                    rounds,
                    tries: attempt + 1,
                    small_target,
                    checks,
                });
            }
            Err(e @ (Error::Budget { .. } | Error::NoPerfectMatching { .. } | Error::Precondition(_))) => {
                last = Some(e.to_string())
            }
            Err(e) => return Err(e),
        }
    }
    Err(Error::budget(
        "partial_embed",
        cfg.retries,
        last.unwrap_or_default(),
    ))
}

/// Recheck a reported partial embedding against `inst` from scratch, using
/// only the embedding, the candidate sets and the reserved colours it lists.
pub fn recheck_partial(inst: &PartialInstance, out: &PartialEmbedding) -> PartialChecks {
    let phi: HashMap<usize, usize> = out.phi.iter().copied().collect();
    let cand: HashMap<usize, Vec<usize>> = out.candidates.iter().cloned().collect();
    let mut checks = check(inst, &out.reserve, &phi, &cand);
    checks.location &= phi.len() == out.phi.len() && inst.x.iter().all(|x| phi.contains_key(x));
    checks
}
