//! Perfect matchings in bipartite graphs: maximum matchings with Hall
//! violators, the switch Markov chain, exact enumeration and rejection
//! sampling of matchings that avoid a conflict system.

use std::collections::{HashMap, VecDeque};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::graph::Bipartite;
use crate::seed::{self, Rng as SeededRng};

/// Largest side for exhaustive enumeration.
pub const ENUMERATION_CAP: usize = 12;
/// Largest number of matchings kept by exhaustive enumeration.
pub const ENUMERATION_LIMIT: usize = 1 << 20;
const BATCH: usize = 64;

/// A perfect matching given by `mate[l] = r`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PerfectMatching {
    pub mate: Vec<usize>,
}

impl PerfectMatching {
    pub fn inverse(&self) -> Vec<usize> {
        let mut inv = vec![usize::MAX; self.mate.len()];
        for (l, &r) in self.mate.iter().enumerate() {
            inv[r] = l;
        }
        inv
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.mate.iter().copied().enumerate()
    }

    /// Whether this is a perfect matching of `b`.
    pub fn is_perfect_in(&self, b: &Bipartite) -> bool {
        let n = self.mate.len();
        if b.left_len() != n || b.right_len() != n {
            return false;
        }
        let mut seen = vec![false; n];
        self.edges().all(|(l, r)| {
            let fresh = r < n && !std::mem::replace(&mut seen[r], true);
            fresh && b.has(l, r)
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MaximumMatching {
    pub left_mate: Vec<Option<usize>>,
    pub right_mate: Vec<Option<usize>>,
    pub size: usize,
}

fn adjacency(b: &Bipartite) -> Vec<Vec<usize>> {
    (0..b.left_len()).map(|l| b.row(l).ones().collect()).collect()
}

/// Hopcroft–Karp maximum matching.
pub fn maximum_matching(b: &Bipartite) -> MaximumMatching {
    let adj = adjacency(b);
    let (nl, nr) = (b.left_len(), b.right_len());
    let mut left_mate: Vec<Option<usize>> = vec![None; nl];
    let mut right_mate: Vec<Option<usize>> = vec![None; nr];
    let mut dist = vec![usize::MAX; nl];
    let mut size = 0;
    loop {
        let mut queue = VecDeque::new();
        for l in 0..nl {
            if left_mate[l].is_none() {
                dist[l] = 0;
                queue.push_back(l);
            } else {
                dist[l] = usize::MAX;
            }
        }
        let mut found = false;
        while let Some(l) = queue.pop_front() {
            for &r in &adj[l] {
                match right_mate[r] {
                    None => found = true,
                    Some(l2) if dist[l2] == usize::MAX => {
                        dist[l2] = dist[l] + 1;
                        queue.push_back(l2);
                    }
                    _ => {}
                }
            }
        }
        if !found {
            break;
        }
        fn augment(
            l: usize,
            adj: &[Vec<usize>],
            dist: &mut [usize],
            left_mate: &mut [Option<usize>],
            right_mate: &mut [Option<usize>],
        ) -> bool {
            for &r in &adj[l] {
                let ok = match right_mate[r] {
                    None => true,
                    Some(l2) => dist[l2] == dist[l] + 1 && augment(l2, adj, dist, left_mate, right_mate),
                };
                if ok {
                    left_mate[l] = Some(r);
                    right_mate[r] = Some(l);
                    return true;
                }
            }
            dist[l] = usize::MAX;
            false
        }
        for l in 0..nl {
            if left_mate[l].is_none() && augment(l, &adj, &mut dist, &mut left_mate, &mut right_mate) {
                size += 1;
            }
        }
    }
    MaximumMatching {
        left_mate,
        right_mate,
        size,
    }
}

/// A left set `S` with `|N(S)| < |S|`, read off alternating paths from an
/// unmatched left vertex of a maximum matching.
pub fn hall_violator(b: &Bipartite, m: &MaximumMatching) -> Option<(Vec<usize>, usize)> {
    let start = m.left_mate.iter().position(Option::is_none)?;
    let mut in_s = vec![false; b.left_len()];
    let mut in_n = vec![false; b.right_len()];
    let mut queue = VecDeque::from([start]);
    in_s[start] = true;
    while let Some(l) = queue.pop_front() {
        for r in b.row(l).ones() {
            if !in_n[r] {
                in_n[r] = true;
                if let Some(l2) = m.right_mate[r] {
                    if !in_s[l2] {
                        in_s[l2] = true;
                        queue.push_back(l2);
                    }
                }
            }
        }
    }
    let s: Vec<usize> = (0..b.left_len()).filter(|&l| in_s[l]).collect();
    let n = in_n.iter().filter(|&&x| x).count();
    Some((s, n))
}

/// Some perfect matching of `b`, or the Hall violator that rules one out.
pub fn perfect_matching(b: &Bipartite) -> Result<PerfectMatching> {
    if b.left_len() != b.right_len() {
        return Err(Error::pre("perfect matching needs equal sides"));
    }
    let m = maximum_matching(b);
    if m.size == b.left_len() {
        return Ok(PerfectMatching {
            mate: m.left_mate.into_iter().map(|r| r.expect("perfect")).collect(),
        });
    }
    let (violator, neighbourhood) = hall_violator(b, &m).expect("unmatched left vertex exists");
    Err(Error::NoPerfectMatching {
        violator: violator.iter().map(|&l| b.left_labels()[l]).collect(),
        neighbourhood,
    })
}

/// Every perfect matching, in lexicographic order of `mate`.
pub fn enumerate_perfect_matchings(b: &Bipartite) -> Result<Vec<PerfectMatching>> {
    let n = b.left_len();
    if n != b.right_len() {
        return Err(Error::pre("perfect matching needs equal sides"));
    }
    if n > ENUMERATION_CAP {
        return Err(Error::pre(format!("enumeration limited to {ENUMERATION_CAP} per side")));
    }
    fn rec(b: &Bipartite, l: usize, used: &mut Vec<bool>, cur: &mut Vec<usize>, out: &mut Vec<PerfectMatching>) -> bool {
        if l == b.left_len() {
            out.push(PerfectMatching { mate: cur.clone() });
            return out.len() <= ENUMERATION_LIMIT;
        }
        for r in b.row(l).ones() {
            if !used[r] {
                used[r] = true;
                cur.push(r);
                let go_on = rec(b, l + 1, used, cur, out);
                cur.pop();
                used[r] = false;
                if !go_on {
                    return false;
                }
            }
        }
        true
    }
    let mut out = Vec::new();
    if !rec(b, 0, &mut vec![false; n], &mut Vec::new(), &mut out) {
        return Err(Error::pre(format!("more than {ENUMERATION_LIMIT} perfect matchings")));
    }
    Ok(out)
}

/// For `e = a1 b1 ∈ M` and `ab ∉ M`, with `a2 = M⁻¹(b)` and `b2 = M(a)`, the
/// edge `ab` is switchable when `a1 b2` and `a2 b1` are edges. When `a = a1`
/// or `b = b1` only the one new edge that is not `ab` itself is needed.
pub fn is_switchable(b: &Bipartite, m: &PerfectMatching, inv: &[usize], a1: usize, (a, bb): (usize, usize)) -> bool {
    let b1 = m.mate[a1];
    if m.mate[a] == bb || !b.has(a, bb) {
        return false;
    }
    let a2 = inv[bb];
    let b2 = m.mate[a];
    if a == a1 {
        b.has(a2, b1)
    } else if bb == b1 {
        b.has(a1, b2)
    } else {
        b.has(a1, b2) && b.has(a2, b1)
    }
}

/// Apply the switch of `ab` with respect to `e = a1 M(a1)`: a 3-edge rotation
/// around a 6-cycle, or a 2-edge swap around a 4-cycle in the degenerate cases.
pub fn apply_switch(m: &mut PerfectMatching, inv: &mut [usize], a1: usize, (a, bb): (usize, usize)) {
    let b1 = m.mate[a1];
    let a2 = inv[bb];
    let b2 = m.mate[a];
    let mut set = |l: usize, r: usize| {
        m.mate[l] = r;
        inv[r] = l;
    };
    if a == a1 {
        set(a1, bb);
        set(a2, b1);
    } else if bb == b1 {
        set(a, b1);
        set(a1, b2);
    } else {
        set(a, bb);
        set(a1, b2);
        set(a2, b1);
    }
}

/// Edges switchable with respect to `e = a1 M(a1)`.
pub fn switchable_edges(b: &Bipartite, m: &PerfectMatching, a1: usize) -> Vec<(usize, usize)> {
    let inv = m.inverse();
    b.edges()
        .into_iter()
        .filter(|&f| is_switchable(b, m, &inv, a1, f))
        .collect()
}

pub fn count_switchable(b: &Bipartite, m: &PerfectMatching, a1: usize) -> usize {
    switchable_edges(b, m, a1).len()
}

/// The switch chain: pick `e ∈ M` and `f ∈ E \ M` uniformly and switch `f`
/// when it is switchable. Each move has the same number of proposals in both
/// directions, so the chain is symmetric and its stationary law is uniform.
pub struct SwitchChain<'a> {
    b: &'a Bipartite,
    edges: Vec<(usize, usize)>,
    m: PerfectMatching,
    inv: Vec<usize>,
    rng: SeededRng,
}

impl<'a> SwitchChain<'a> {
    pub fn new(b: &'a Bipartite, start: PerfectMatching, rng: SeededRng) -> Self {
        let inv = start.inverse();
        SwitchChain {
            b,
            edges: b.edges(),
            m: start,
            inv,
            rng,
        }
    }

    pub fn step(&mut self) {
        let n = self.m.mate.len();
        // holding half the time keeps the chain aperiodic (on K_{2,2} every move switches)
        if self.edges.len() <= n || self.rng.random_bool(0.5) {
            return;
        }
        let a1 = self.rng.random_range(0..n);
        let f = loop {
            let f = self.edges[self.rng.random_range(0..self.edges.len())];
            if self.m.mate[f.0] != f.1 {
                break f;
            }
        };
        if is_switchable(self.b, &self.m, &self.inv, a1, f) {
            apply_switch(&mut self.m, &mut self.inv, a1, f);
        }
    }

    pub fn run(&mut self, steps: usize) {
        for _ in 0..steps {
            self.step();
        }
    }

    pub fn current(&self) -> &PerfectMatching {
        &self.m
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SampleMode {
    /// Uniform choice from the full enumeration.
    Exact,
    /// Switch chain with `burn_in` steps (default `40|E|`) and `thin` steps
    /// between consecutive samples of one chain (default `2|E|`).
    Chain { burn_in: Option<usize>, thin: Option<usize> },
}

impl SampleMode {
    pub fn chain() -> Self {
        SampleMode::Chain {
            burn_in: None,
            thin: None,
        }
    }

    /// Exact for sides up to 8, otherwise the chain with defaults.
    pub fn auto(b: &Bipartite) -> Self {
        if b.left_len() <= 8 {
            SampleMode::Exact
        } else {
            Self::chain()
        }
    }
}

/// A stream of approximately uniform perfect matchings.
enum Sampler<'a> {
    Exact(std::sync::Arc<Vec<PerfectMatching>>, SeededRng),
    Chain { chain: SwitchChain<'a>, thin: usize, fresh: bool },
}

impl<'a> Sampler<'a> {
    fn new(b: &'a Bipartite, mode: SampleMode, all: Option<std::sync::Arc<Vec<PerfectMatching>>>, rng: SeededRng) -> Result<Self> {
        Ok(match mode {
            SampleMode::Exact => Sampler::Exact(all.expect("enumerated"), rng),
            SampleMode::Chain { burn_in, thin } => {
                let start = perfect_matching(b)?;
                let mut chain = SwitchChain::new(b, start, rng);
                let e = chain.edge_count();
                chain.run(burn_in.unwrap_or(40 * e));
                Sampler::Chain {
                    chain,
                    thin: thin.unwrap_or(2 * e),
                    fresh: true,
                }
            }
        })
    }

    fn next(&mut self) -> PerfectMatching {
        match self {
            Sampler::Exact(all, rng) => all[rng.random_range(0..all.len())].clone(),
            Sampler::Chain { chain, thin, fresh } => {
                if !std::mem::take(fresh) {
                    chain.run(*thin);
                }
                chain.current().clone()
            }
        }
    }
}

fn enumerate_for(b: &Bipartite, mode: SampleMode) -> Result<Option<std::sync::Arc<Vec<PerfectMatching>>>> {
    if mode != SampleMode::Exact {
        return Ok(None);
    }
    let all = enumerate_perfect_matchings(b)?;
    if all.is_empty() {
        perfect_matching(b)?;
    }
    Ok(Some(std::sync::Arc::new(all)))
}

/// One perfect matching, uniform in exact mode and approximately uniform otherwise.
pub fn sample_uniform_pm(b: &Bipartite, mode: SampleMode, seed: u64) -> Result<PerfectMatching> {
    let all = enumerate_for(b, mode)?;
    Ok(Sampler::new(b, mode, all, seed::rng(seed, "uniform-pm", 0))?.next())
}

/// Pairs of edges (by local indices) that may not both be used.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ConflictSystem {
    partners: HashMap<(usize, usize), Vec<(usize, usize)>>,
    pairs: usize,
}

impl ConflictSystem {
    pub fn new(pairs: impl IntoIterator<Item = ((usize, usize), (usize, usize))>) -> Self {
        let mut partners: HashMap<(usize, usize), Vec<(usize, usize)>> = HashMap::new();
        for (e, f) in pairs {
            if e != f {
                partners.entry(e).or_default().push(f);
                partners.entry(f).or_default().push(e);
            }
        }
        let mut count = 0;
        for list in partners.values_mut() {
            list.sort_unstable();
            list.dedup();
            count += list.len();
        }
        ConflictSystem {
            partners,
            pairs: count / 2,
        }
    }

    pub fn pair_count(&self) -> usize {
        self.pairs
    }

    /// Largest number of conflicts at one edge.
    pub fn bound(&self) -> usize {
        self.partners.values().map(Vec::len).max().unwrap_or(0)
    }

    pub fn partners(&self, e: (usize, usize)) -> &[(usize, usize)] {
        self.partners.get(&e).map_or(&[], Vec::as_slice)
    }

    /// A conflicting pair inside `m`, if any.
    pub fn first_conflict(&self, m: &PerfectMatching) -> Option<((usize, usize), (usize, usize))> {
        for (l, r) in m.edges() {
            for &(l2, r2) in self.partners((l, r)) {
                if m.mate[l2] == r2 {
                    return Some(((l, r), (l2, r2)));
                }
            }
        }
        None
    }

    pub fn is_conflict_free(&self, m: &PerfectMatching) -> bool {
        self.first_conflict(m).is_none()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConflictFree {
    pub matching: PerfectMatching,
    pub attempts: usize,
}

/// Rejection sampling: draw matchings until one avoids every conflict pair.
/// Attempts run in batches with their own streams; the first success in
/// batch order is returned, so the result does not depend on `exec`.
pub fn sample_conflict_free_pm(
    b: &Bipartite,
    f: &ConflictSystem,
    mode: SampleMode,
    max_attempts: usize,
    seed: u64,
    exec: Execution,
) -> Result<ConflictFree> {
    let all = enumerate_for(b, mode)?;
    if mode != SampleMode::Exact {
        perfect_matching(b)?;
    }
    let batches = max_attempts.div_ceil(BATCH);
    let hit = exec.find_first(batches, |bi| {
        let rng = seed::rng(seed, "conflict-free", bi as u64);
        let mut sampler = Sampler::new(b, mode, all.clone(), rng).ok()?;
        let count = BATCH.min(max_attempts - bi * BATCH);
        (0..count).find_map(|k| {
            let m = sampler.next();
            f.is_conflict_free(&m).then_some((k, m))
        })
    });
    match hit {
        Some((bi, (k, matching))) => Ok(ConflictFree {
            matching,
            attempts: bi * BATCH + k + 1,
        }),
        None => Err(Error::budget(
            "sample_conflict_free_pm",
            max_attempts,
            format!("{} conflict pairs, none of the samples avoided them", f.pair_count()),
        )),
    }
}

/// Fraction of `attempts` draws that are conflict free.
pub fn acceptance_rate(
    b: &Bipartite,
    f: &ConflictSystem,
    mode: SampleMode,
    attempts: usize,
    seed: u64,
    exec: Execution,
) -> Result<f64> {
    let all = enumerate_for(b, mode)?;
    let batches = attempts.div_ceil(BATCH);
    let counts: Vec<Result<usize>> = exec.map(batches, |bi| {
        let rng = seed::rng(seed, "acceptance", bi as u64);
        let mut sampler = Sampler::new(b, mode, all.clone(), rng)?;
        let count = BATCH.min(attempts - bi * BATCH);
        Ok((0..count).filter(|_| f.is_conflict_free(&sampler.next())).count())
    });
    let ok: usize = counts.into_iter().sum::<Result<usize>>()?;
    Ok(ok as f64 / attempts as f64)
}

/// A group for [`covering_conflict_free_matching`]: left labels `xs`, right
/// labels `vs` (`|xs| <= |vs|`) and the allowed edges as local pairs.
#[derive(Clone, Debug)]
pub struct CoverGroup {
    pub xs: Vec<usize>,
    pub vs: Vec<usize>,
    pub edges: Vec<(usize, usize)>,
}

/// A conflict-free matching covering every `xs` of every group. Each group is
/// padded with dummy left vertices joined to all of `vs`, a conflict-free
/// perfect matching of the padded graph is sampled, and the dummies are
/// dropped. Conflicts are given on `(x label, v label)` pairs. With
/// `min_degree`, each `x` must have at least that many allowed edges.
pub fn covering_conflict_free_matching(
    groups: &[CoverGroup],
    conflicts: &[((usize, usize), (usize, usize))],
    min_degree: Option<usize>,
    mode: SampleMode,
    max_attempts: usize,
    seed: u64,
    exec: Execution,
) -> Result<(Vec<(usize, usize)>, usize)> {
    let mut left = Vec::new();
    let mut right = Vec::new();
    let mut local_edges = Vec::new();
    let mut index: HashMap<(usize, usize), (usize, usize)> = HashMap::new();
    let mut real_left = Vec::new();
    for g in groups {
        if g.xs.len() > g.vs.len() {
            return Err(Error::pre(format!(
                "group with {} left and {} right vertices cannot be covered",
                g.xs.len(),
                g.vs.len()
            )));
        }
        let (l0, r0) = (left.len(), right.len());
        let mut deg = vec![0; g.xs.len()];
        for &(x, v) in &g.edges {
            deg[x] += 1;
            local_edges.push((l0 + x, r0 + v));
            index.insert((g.xs[x], g.vs[v]), (l0 + x, r0 + v));
        }
        if let Some(k) = min_degree {
            if let Some(x) = deg.iter().position(|&d| d < k) {
                return Err(Error::pre(format!("vertex {} has {} < {k} allowed edges", g.xs[x], deg[x])));
            }
        }
        for (i, &x) in g.xs.iter().enumerate() {
            left.push(x);
            real_left.push(Some(i));
        }
        for _ in g.xs.len()..g.vs.len() {
            let l = left.len();
            left.push(usize::MAX);
            real_left.push(None);
            for v in 0..g.vs.len() {
                local_edges.push((l, r0 + v));
            }
        }
        right.extend_from_slice(&g.vs);
    }
    let mut b = Bipartite::empty(left.clone(), right.clone());
    for &(l, r) in &local_edges {
        b.insert(l, r);
    }
    let system = ConflictSystem::new(
        conflicts
            .iter()
            .filter_map(|(e, f)| Some((*index.get(e)?, *index.get(f)?))),
    );
    let out = sample_conflict_free_pm(&b, &system, mode, max_attempts, seed, exec)?;
    let pairs = out
        .matching
        .edges()
        .filter(|&(l, _)| real_left[l].is_some())
        .map(|(l, r)| (left[l], right[r]))
        .collect();
    Ok((pairs, out.attempts))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    fn complete(n: usize) -> Bipartite {
        Bipartite::complete((0..n).collect(), (0..n).collect())
    }

    fn random_bipartite(n: usize, p: f64, seed: u64) -> Bipartite {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut b = Bipartite::from_edges(n, n, &[]);
        for l in 0..n {
            for r in 0..n {
                if rng.random_bool(p) {
                    b.insert(l, r);
                }
            }
        }
        b
    }

    /// Switchability straight from the six-edge description.
    fn switchable_oracle(b: &Bipartite, m: &PerfectMatching, a1: usize, (a, bb): (usize, usize)) -> bool {
        if !b.has(a, bb) || m.mate[a] == bb {
            return false;
        }
        let mut after = m.clone();
        let mut inv = m.inverse();
        apply_switch(&mut after, &mut inv, a1, (a, bb));
        let removed: Vec<(usize, usize)> = m.edges().filter(|&(l, r)| after.mate[l] != r).collect();
        let added: Vec<(usize, usize)> = after.edges().filter(|&(l, r)| m.mate[l] != r).collect();
        after.is_perfect_in(b)
            && added.contains(&(a, bb))
            && removed.contains(&(a1, m.mate[a1]))
            && (removed.len() == 3 || (removed.len() == 2 && (a == a1 || bb == m.mate[a1])))
    }

    #[test]
    fn complete_graphs_have_n_squared_minus_n_switchable_edges() {
        for n in 3..=5 {
            let b = complete(n);
            for m in enumerate_perfect_matchings(&b).unwrap() {
                for a1 in 0..n {
                    assert_eq!(count_switchable(&b, &m, a1), n * n - n);
                }
            }
        }
    }

    #[test]
    fn six_cycle_has_one_switchable_edge() {
        // a_i b_i and a_i b_{i+1} for i in 0..3.
        let edges: Vec<_> = (0..3).flat_map(|i| [(i, i), (i, (i + 1) % 3)]).collect();
        let b = Bipartite::from_edges(3, 3, &edges);
        let m = PerfectMatching { mate: vec![0, 1, 2] };
        assert_eq!(switchable_edges(&b, &m, 0), vec![(1, 2)]);
    }

    #[test]
    fn hall_violator_on_deficient_graph() {
        let b = Bipartite::from_edges(3, 3, &[(0, 0), (1, 0), (2, 1), (2, 2)]);
        match perfect_matching(&b) {
            Err(Error::NoPerfectMatching { violator, neighbourhood }) => {
                assert_eq!(violator, vec![0, 1]);
                assert_eq!(neighbourhood, 1);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn exact_rejection_finds_the_only_conflict_free_matching() {
        let b = complete(3);
        // Forbid every matching but the identity via pairs inside the others.
        let all = enumerate_perfect_matchings(&b).unwrap();
        let mut pairs = Vec::new();
        for m in &all {
            if m.mate != vec![0, 1, 2] {
                let e: Vec<_> = m.edges().filter(|&(l, r)| l != r).collect();
                pairs.push((e[0], e[1]));
            }
        }
        let f = ConflictSystem::new(pairs);
        let out = sample_conflict_free_pm(&b, &f, SampleMode::Exact, 1000, 3, Execution::Sequential).unwrap();
        assert_eq!(out.matching.mate, vec![0, 1, 2]);
        let chained = sample_conflict_free_pm(&b, &f, SampleMode::chain(), 1000, 3, Execution::Parallel).unwrap();
        assert_eq!(chained.matching.mate, vec![0, 1, 2]);
    }

    #[test]
    fn covering_matching_drops_padding() {
        let groups = vec![CoverGroup {
            xs: vec![100, 101],
            vs: vec![7, 8, 9, 10],
            edges: vec![(0, 0), (0, 1), (1, 1), (1, 2)],
        }];
        let conflicts = vec![((100, 8), (101, 9))];
        let (pairs, _) = covering_conflict_free_matching(&groups, &conflicts, Some(2), SampleMode::Exact, 500, 1, Execution::Sequential).unwrap();
        assert_eq!(pairs.len(), 2);
        assert!(!(pairs.contains(&(100, 8)) && pairs.contains(&(101, 9))));
        assert!(covering_conflict_free_matching(&groups, &conflicts, Some(3), SampleMode::Exact, 5, 1, Execution::Sequential).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn switch_rule_matches_oracle(n in 2usize..7, p in 0.3f64..1.0, seed: u64) {
            let b = random_bipartite(n, p, seed);
            let Ok(m) = perfect_matching(&b) else { return Ok(()); };
            let inv = m.inverse();
            for a1 in 0..n {
                for f in b.edges() {
                    prop_assert_eq!(is_switchable(&b, &m, &inv, a1, f), switchable_oracle(&b, &m, a1, f));
                }
            }
        }

        #[test]
        fn chain_stays_on_perfect_matchings(n in 2usize..9, p in 0.3f64..1.0, seed: u64) {
            let b = random_bipartite(n, p, seed);
            let Ok(m) = perfect_matching(&b) else { return Ok(()); };
            let mut chain = SwitchChain::new(&b, m, seed::rng(seed, "t", 0));
            for _ in 0..50 {
                chain.run(7);
                prop_assert!(chain.current().is_perfect_in(&b));
            }
        }

        #[test]
        fn hopcroft_karp_agrees_with_enumeration(n in 1usize..7, p in 0.0f64..1.0, seed: u64) {
            let b = random_bipartite(n, p, seed);
            let all = enumerate_perfect_matchings(&b).unwrap();
            match perfect_matching(&b) {
                Ok(m) => prop_assert!(all.contains(&m)),
                Err(Error::NoPerfectMatching { violator, neighbourhood }) => {
                    prop_assert!(all.is_empty());
                    prop_assert!(neighbourhood < violator.len());
                }
                Err(e) => prop_assert!(false, "{e}"),
            }
        }
    }
}
