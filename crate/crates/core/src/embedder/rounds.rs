use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::instance::BlowUpInstance;
use super::reserve::{ColourPolicy, Reservation};
use super::verify::verify_embedding;
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::graph::{edge_key, Bipartite, PartitionedGraph};
use crate::matching::{perfect_matching, sample_conflict_free_pm, ConflictSystem, SampleMode};
use crate::partition::RoundColouring;
use crate::regularity::{filter_triple_condition, test_pair, Flavour, Mode, PairSpec, TripleSide, Verdict, EXACT_CAP};
use crate::seed;

/// How regularity checks pick their tester.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CheckMode {
    /// Exhaustive up to the exact cap, sampled above it.
    #[default]
    Auto,
    /// Same as `Auto`; kept distinct so reports show the request.
    Exact,
    /// Always sampled.
    Sampled,
}

impl CheckMode {
    pub fn mode(self, b: &Bipartite, seed: u64) -> Mode {
        let small = b.left_len() <= EXACT_CAP && b.right_len() <= EXACT_CAP;
        match self {
            CheckMode::Sampled => Mode::Sampled {
                trials: crate::regularity::DEFAULT_TRIALS,
                seed,
            },
            _ if small => Mode::Exact,
            _ => Mode::auto(b, seed),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RoundsConfig {
    /// Conflict-free sampling attempts per try of a round.
    pub attempts: usize,
    /// Tries of one round before backtracking.
    pub retries: usize,
    /// Rounds that may be undone in total.
    pub backtracks: usize,
    /// Tries over all rounds.
    pub budget: usize,
    pub sample: Option<SampleMode>,
    pub check: CheckMode,
    /// Restrict each round graph to edges with typical common neighbourhoods.
    pub filter: bool,
    /// Precondition breaches abort instead of dropping the offending edges.
    pub strict: bool,
    /// First rung of the regularity ladder.
    pub eps0: f64,
    /// Density floor base: after round `t` candidacy densities must reach `d'^{t+1}`.
    pub d_prime: f64,
    /// Reference for the conflict bound, `4μΔ²n`.
    pub conflict_reference: f64,
}

impl RoundsConfig {
    pub fn new(eps0: f64, d_prime: f64) -> Self {
        RoundsConfig {
            attempts: 4096,
            retries: 4,
            backtracks: 2,
            budget: 40,
            sample: None,
            check: CheckMode::Auto,
            filter: true,
            strict: false,
            eps0,
            d_prime,
            conflict_reference: f64::INFINITY,
        }
    }

    /// `ε_0, ε_1, …` with `ε_{t+1} = 2√ε_t`.
    pub fn ladder(&self, len: usize) -> Vec<f64> {
        let mut out = vec![self.eps0];
        while out.len() < len {
            let last = *out.last().expect("non-empty");
            out.push(2.0 * last.sqrt());
        }
        out
    }
}

/// A partial embedding between rounds.
#[derive(Clone, Debug)]
pub struct EmbeddingState {
    /// Last completed round.
    pub round: usize,
    pub phi: Vec<Option<usize>>,
    /// Current candidacy graph of every cluster (frozen once embedded).
    pub candidacy: Vec<Bipartite>,
    pub used: Vec<bool>,
}

impl EmbeddingState {
    pub fn initial(inst: &BlowUpInstance, res: &Reservation) -> Self {
        EmbeddingState {
            round: 0,
            phi: inst.phi0_map(),
            candidacy: res.a0.clone(),
            used: vec![false; inst.colouring.universe()],
        }
    }
}

/// Position of every vertex inside its part.
pub fn positions(g: &PartitionedGraph) -> Vec<usize> {
    let mut pos = vec![0; g.n()];
    for p in g.parts() {
        for (k, &v) in p.iter().enumerate() {
            pos[v] = k;
        }
    }
    pos
}

/// Candidates `v` of `x`: `xv` is an edge of `a` and every embedded target
/// neighbour `y` of `x` has `φ(y)v` in `g_star`. Every cluster containing a
/// target neighbour of `a`'s left side must be fully embedded or not at all.
pub fn update_candidacy(
    h: &PartitionedGraph,
    g_star: &PartitionedGraph,
    a: &Bipartite,
    phi: &[Option<usize>],
) -> Result<Bipartite> {
    let mut touched: Vec<usize> = Vec::new();
    for &x in a.left_labels() {
        touched.extend(h.neighbours(x).iter().map(|&y| h.part_of(y)));
    }
    touched.sort_unstable();
    touched.dedup();
    for &i in &touched {
        let done = h.part(i).iter().filter(|&&y| phi[y].is_some()).count();
        if done != 0 && done != h.part(i).len() {
            return Err(Error::pre(format!("cluster {i} is only partly embedded ({done} of {})", h.part(i).len())));
        }
    }
    let images: Vec<Vec<usize>> = a
        .left_labels()
        .iter()
        .map(|&x| h.neighbours(x).iter().filter_map(|&y| phi[y]).collect())
        .collect();
    Ok(a.filtered(|l, r| {
        let v = a.right_labels()[r];
        images[l].iter().all(|&w| g_star.has_edge(w, v))
    }))
}

/// For each vertex of `X_i` (in part order) its unique target neighbour in
/// `X_j`, or `None` if it has none; `None` overall if some vertex has two.
pub fn mates(h: &PartitionedGraph, i: usize, j: usize) -> Option<Vec<Option<usize>>> {
    let mut out = Vec::with_capacity(h.part(i).len());
    for &x in h.part(i) {
        let mut it = h.neighbours(x).iter().filter(|&&y| h.part_of(y) == j);
        let first = it.next().copied();
        if it.next().is_some() {
            return None;
        }
        out.push(first);
    }
    Some(out)
}

#[derive(Clone, Debug)]
pub struct RoundConflicts {
    pub system: ConflictSystem,
    /// `Z_xv` by local edge of the round graph.
    pub forced: HashMap<(usize, usize), Vec<usize>>,
    /// Edges whose forced colour sets overlap each other or the used colours.
    pub breaches: Vec<(usize, usize)>,
}

/// Forced colours of every edge `xv` of the round graph `block` (labels are
/// target and host vertices): the colours on `φ(y)v` over embedded target
/// neighbours `y` of `x`. Two edges conflict when their forced colours meet.
/// Edges with internally overlapping forced colours, or forced colours
/// already used, are reported as breaches and left out of the system.
pub fn round_conflict_system(
    inst: &BlowUpInstance,
    block: &Bipartite,
    phi: &[Option<usize>],
    used: &[bool],
) -> RoundConflicts {
    let (h, c) = (&inst.h, &inst.colouring);
    let mut forced = HashMap::new();
    let mut breaches = Vec::new();
    let mut by_colour: HashMap<usize, Vec<(usize, usize)>> = HashMap::new();
    for (l, r) in block.edges() {
        let (x, v) = (block.left_labels()[l], block.right_labels()[r]);
        let mut z = Vec::new();
        let mut overlap = false;
        for &y in h.neighbours(x) {
            if let Some(w) = phi[y] {
                for &a in c.get(w, v) {
                    if used[a] || z.contains(&a) {
                        overlap = true;
                    }
                    z.push(a);
                }
            }
        }
        if overlap {
            breaches.push((l, r));
            continue;
        }
        z.sort_unstable();
        for &a in &z {
            by_colour.entry(a).or_default().push((l, r));
        }
        forced.insert((l, r), z);
    }
    let mut pairs = Vec::new();
    for list in by_colour.values() {
        for (k, &e) in list.iter().enumerate() {
            for &f in &list[k + 1..] {
                pairs.push((e, f));
            }
        }
    }
    RoundConflicts {
        system: ConflictSystem::new(pairs),
        forced,
        breaches,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClusterCheck {
    pub cluster: usize,
    pub density: f64,
    pub hall: bool,
    /// `None` when the regularity test was vacuous (`ε ≥ 1`).
    pub verdict: Option<Verdict>,
    pub density_floor: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RoundStats {
    pub round: usize,
    pub try_index: usize,
    pub clusters: Vec<usize>,
    pub eps: f64,
    /// Fraction of candidacy edges dropped by the common-neighbourhood filter, per cluster.
    pub filter_removed: Vec<f64>,
    /// Clusters whose filtered graph had no perfect matching.
    pub filter_fallback: Vec<usize>,
    pub round_edges: usize,
    pub conflict_pairs: usize,
    pub conflict_bound: usize,
    pub conflict_reference: f64,
    pub breaches: usize,
    /// Forced colours pairwise disjoint and unused on every round edge.
    pub forced_disjoint: bool,
    pub sampling_attempts: usize,
    pub used_colours: usize,
    /// Used colours all lie in the classes released up to this round.
    pub within_reserved: bool,
    pub checks: Vec<ClusterCheck>,
    pub outcome: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RoundsOutcome {
    pub phi: Vec<usize>,
    /// Statistics of the rounds on the final path.
    pub rounds: Vec<RoundStats>,
    /// Every failed try, in order.
    pub failures: Vec<RoundStats>,
    pub tries: usize,
    pub backtracks: usize,
}

enum RoundError {
    Retry(Box<RoundStats>),
    Fatal(Error),
}

struct Ctx<'a> {
    inst: &'a BlowUpInstance,
    psi: &'a RoundColouring,
    res: &'a Reservation,
    cfg: RoundsConfig,
    ladder: Vec<f64>,
    pos_h: Vec<usize>,
    exec: Execution,
}

/// Common-neighbourhood filter of `a` (cluster `i`) against every reduced
/// neighbour `j` embedded later, where the target matches `X_i` into `X_j`.
fn filter_round_graph(ctx: &Ctx, state: &EmbeddingState, i: usize, k: usize, eps: f64) -> Bipartite {
    let (inst, g_star) = (ctx.inst, &ctx.res.g_star);
    let a = &state.candidacy[i];
    let mut out = a.clone();
    for &j in inst.reduced.neighbours(i) {
        if ctx.psi.psi[j] <= k {
            continue;
        }
        let Some(m) = mates(&inst.h, i, j) else { continue };
        let aj = &state.candidacy[j];
        let mut p = Bipartite::empty(inst.x(i).to_vec(), inst.v(j).to_vec());
        for (l, mate) in m.iter().enumerate() {
            if let Some(y) = mate {
                for r in aj.row(ctx.pos_h[*y]).ones() {
                    p.insert(l, r);
                }
            }
        }
        let gij = g_star.bipartite(inst.v(i), inst.v(j));
        let side = TripleSide {
            first: &p,
            second: &gij,
            d_first: aj.density(),
            d_second: gij.density(),
        };
        let (kept, _) = filter_triple_condition(&out, &[side], eps, inst.v(j).len() as f64);
        out = out.filtered(|l, r| m[l].is_none() || kept.has(l, r));
    }
    out
}

fn run_round(ctx: &Ctx, state: &EmbeddingState, k: usize, seed: u64) -> std::result::Result<(EmbeddingState, RoundStats), RoundError> {
    let inst = ctx.inst;
    let clusters = ctx.psi.round(k);
    let eps = ctx.ladder[k - 1];
    let mut stats = RoundStats {
        round: k,
        clusters: clusters.clone(),
        eps,
        conflict_reference: ctx.cfg.conflict_reference,
        forced_disjoint: true,
        within_reserved: true,
        ..RoundStats::default()
    };
    let fail = |mut stats: RoundStats, why: String| {
        stats.outcome = why;
        Err(RoundError::Retry(Box::new(stats)))
    };

    let mut graphs = Vec::with_capacity(clusters.len());
    for &i in &clusters {
        let a = &state.candidacy[i];
        if !ctx.cfg.filter {
            graphs.push(a.clone());
            stats.filter_removed.push(0.0);
            continue;
        }
        let f = filter_round_graph(ctx, state, i, k, eps);
        let removed = if a.edge_count() == 0 {
            0.0
        } else {
            1.0 - f.edge_count() as f64 / a.edge_count() as f64
        };
        stats.filter_removed.push(removed);
        if perfect_matching(&f).is_ok() {
            graphs.push(f);
        } else {
            stats.filter_fallback.push(i);
            graphs.push(a.clone());
        }
    }

    let left: Vec<usize> = clusters.iter().flat_map(|&i| inst.x(i).iter().copied()).collect();
    let right: Vec<usize> = clusters.iter().flat_map(|&i| inst.v(i).iter().copied()).collect();
    let mut block = Bipartite::empty(left, right);
    let mut offset = 0;
    for a in &graphs {
        for (l, r) in a.edges() {
            block.insert(offset + l, offset + r);
        }
        offset += a.left_len();
    }

    let conflicts = round_conflict_system(inst, &block, &state.phi, &state.used);
    stats.breaches = conflicts.breaches.len();
    stats.forced_disjoint = conflicts.breaches.is_empty();
    if !conflicts.breaches.is_empty() {
        if ctx.cfg.strict {
            let (l, r) = conflicts.breaches[0];
            return Err(RoundError::Fatal(Error::Invariant(format!(
                "round {k}: forced colours of candidate edge ({},{}) overlap",
                block.left_labels()[l],
                block.right_labels()[r]
            ))));
        }
        for &(l, r) in &conflicts.breaches {
            block.remove(l, r);
        }
    }
    stats.round_edges = block.edge_count();
    stats.conflict_pairs = conflicts.system.pair_count();
    stats.conflict_bound = conflicts.system.bound();

    if let Err(e) = perfect_matching(&block) {
        return fail(stats, format!("round graph has no perfect matching: {e}"));
    }
    let mode = ctx.cfg.sample.unwrap_or_else(|| SampleMode::auto(&block));
    let sample = match sample_conflict_free_pm(&block, &conflicts.system, mode, ctx.cfg.attempts, seed, ctx.exec) {
        Ok(s) => s,
        Err(Error::Budget { detail, .. }) => {
            stats.sampling_attempts = ctx.cfg.attempts;
            return fail(stats, format!("no conflict-free matching: {detail}"));
        }
        Err(e) => return Err(RoundError::Fatal(e)),
    };
    stats.sampling_attempts = sample.attempts;

    let mut next = state.clone();
    next.round = k;
    for (l, r) in sample.matching.edges() {
        let (x, v) = (block.left_labels()[l], block.right_labels()[r]);
        next.phi[x] = Some(v);
        for &a in &conflicts.forced[&(l, r)] {
            if std::mem::replace(&mut next.used[a], true) {
                return Err(RoundError::Fatal(Error::Invariant(format!("round {k}: colour {a} used twice"))));
            }
        }
    }
    stats.used_colours = next.used.iter().filter(|&&u| u).count();
    if ctx.res.report.policy == ColourPolicy::Reserved {
        let allowed = ctx.res.allowed_after(k);
        stats.within_reserved = next.used.iter().zip(&allowed).all(|(&u, &ok)| !u || ok);
        if !stats.within_reserved && ctx.cfg.strict {
            return Err(RoundError::Fatal(Error::Invariant(format!(
                "round {k}: a used colour lies outside the released classes"
            ))));
        }
    }

    let eps_next = ctx.ladder[k];
    let floor = ctx.cfg.d_prime.powi(k as i32 + 1);
    let mut failed = None;
    for j in 1..=inst.r() {
        if ctx.psi.psi[j] <= k || !inst.reduced.neighbours(j).iter().any(|i| clusters.contains(i)) {
            continue;
        }
        let a = match update_candidacy(&inst.h, &ctx.res.g_star, &state.candidacy[j], &next.phi) {
            Ok(a) => a,
            Err(e) => return Err(RoundError::Fatal(e)),
        };
        let density = a.density();
        let hall = perfect_matching(&a).is_ok();
        let verdict = if eps_next < 1.0 && hall {
            let spec = PairSpec::new(eps_next, density, Flavour::Super);
            let mode = ctx.cfg.check.mode(&a, seed::derive(seed, "candidacy-check", j as u64));
            Some(test_pair(&a, spec, mode, ctx.exec).map_err(RoundError::Fatal)?)
        } else {
            None
        };
        let passed = hall && density + 1e-12 >= floor && verdict.as_ref().is_none_or(|v| v.passed);
        if !passed && failed.is_none() {
            failed = Some(j);
        }
        stats.checks.push(ClusterCheck {
            cluster: j,
            density,
            hall,
            verdict,
            density_floor: floor,
            passed,
        });
        next.candidacy[j] = a;
    }
    if let Some(j) = failed {
        let c = stats.checks.iter().find(|c| c.cluster == j).expect("recorded check");
        let why = format!(
            "candidacy graph of cluster {j} failed its check (density {:.3}, floor {:.3}, hall {}, regular {:?})",
            c.density,
            c.density_floor,
            c.hall,
            c.verdict.as_ref().map(|v| v.passed)
        );
        return fail(stats, why);
    }
    stats.outcome = "ok".into();
    Ok((next, stats))
}

/// Embed the clusters round by round: each round samples a conflict-free
/// perfect matching of the (filtered) candidacy graphs of its clusters,
/// extends the map and shrinks the candidacy graphs of later clusters. Failed
/// rounds are retried, then the previous round is redone, within the budgets.
pub fn embed_rounds(
    inst: &BlowUpInstance,
    psi: &RoundColouring,
    res: &Reservation,
    cfg: RoundsConfig,
    seed: u64,
    exec: Execution,
) -> Result<RoundsOutcome> {
    let rounds = psi.rounds;
    let ctx = Ctx {
        inst,
        psi,
        res,
        cfg,
        ladder: cfg.ladder(rounds + 1),
        pos_h: positions(&inst.h),
        exec,
    };
    let mut stack = vec![EmbeddingState::initial(inst, res)];
    let mut path: Vec<RoundStats> = Vec::new();
    let mut failures: Vec<RoundStats> = Vec::new();
    let mut fails_here = vec![0usize; rounds + 2];
    let (mut tries, mut backtracks) = (0usize, 0usize);
    let mut k = 1;
    while k <= rounds {
        if tries >= cfg.budget {
            return Err(Error::budget("embed_rounds", cfg.budget, diagnostics(&failures)));
        }
        tries += 1;
        let state = stack.last().expect("initial state");
        match run_round(&ctx, state, k, seed::derive(seed, "round", tries as u64)) {
            Ok((next, mut stats)) => {
                stats.try_index = fails_here[k];
                stack.push(next);
                path.push(stats);
                k += 1;
            }
            Err(RoundError::Fatal(e)) => return Err(e),
            Err(RoundError::Retry(mut stats)) => {
                stats.try_index = fails_here[k];
                failures.push(*stats);
                fails_here[k] += 1;
                if fails_here[k] >= cfg.retries {
                    if k == 1 || backtracks >= cfg.backtracks {
                        return Err(Error::budget("embed_rounds", cfg.retries, diagnostics(&failures)));
                    }
                    backtracks += 1;
                    fails_here[k] = 0;
                    stack.pop();
                    path.pop();
                    k -= 1;
                }
            }
        }
    }
    let state = stack.pop().expect("final state");
    let phi: Vec<usize> = state
        .phi
        .iter()
        .enumerate()
        .map(|(x, v)| v.ok_or_else(|| Error::Invariant(format!("vertex {x} left unembedded"))))
        .collect::<Result<_>>()?;
    let v = verify_embedding(inst, &phi);
    if !v.passed() {
        return Err(Error::Invariant(format!("round embedding failed verification: {:?}", v.failures)));
    }
    Ok(RoundsOutcome {
        phi,
        rounds: path,
        failures,
        tries,
        backtracks,
    })
}

fn diagnostics(failures: &[RoundStats]) -> String {
    let mut counts: std::collections::BTreeMap<(usize, &str), usize> = Default::default();
    for f in failures {
        let kind = f.outcome.split([':', '(']).next().unwrap_or("").trim_end();
        *counts.entry((f.round, kind)).or_default() += 1;
    }
    counts
        .iter()
        .map(|((round, kind), n)| format!("round {round}: {kind} x{n}"))
        .chain(failures.last().map(|f| format!("last: {}", f.outcome)))
        .collect::<Vec<_>>()
        .join("; ")
}

/// Undirected edge set `{φ(x)φ(y)}` of the embedded target edges.
pub fn image_edges(h: &PartitionedGraph, phi: &[usize]) -> Vec<(usize, usize)> {
    h.edges().iter().map(|&(x, y)| edge_key(phi[x], phi[y])).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedder::instance::Params;
    use crate::embedder::reserve::{reserve_colours, ReserveConfig};
    use crate::fourgraphs::{a_sigma, project_candidacy};
    use crate::graph::EdgeSetColouring;
    use crate::matching::PerfectMatching;
    use crate::partition::round_colouring;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    fn instance(r: usize, m: usize, p: f64, cycle: bool, seed: u64) -> BlowUpInstance {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let base = |j: usize| (j - 1) * m;
        let mut reduced: Vec<(usize, usize)> = (1..r).map(|j| (j, j + 1)).collect();
        if cycle && r > 2 {
            reduced.push((1, r));
        }
        let mut h_edges = Vec::new();
        let mut g_edges = Vec::new();
        for &(i, j) in &reduced {
            let mut perm: Vec<usize> = (0..m).collect();
            for a in (1..m).rev() {
                perm.swap(a, rng.random_range(0..=a));
            }
            for a in 0..m {
                h_edges.push((base(i) + a, base(j) + perm[a]));
                for b in 0..m {
                    if rng.random_bool(p) {
                        g_edges.push((base(i) + a, base(j) + b));
                    }
                }
            }
        }
        let mut sizes = vec![0];
        sizes.extend(std::iter::repeat_n(m, r));
        let h = PartitionedGraph::build(&sizes, &h_edges).unwrap();
        let g = PartitionedGraph::build(&sizes, &g_edges).unwrap();
        let mut c = EdgeSetColouring::new(g.edge_count());
        for (k, &(u, v)) in g.edges().iter().enumerate() {
            c.assign(u, v, &[k / 2]).unwrap();
        }
        BlowUpInstance {
            candidacy: BlowUpInstance::complete_candidacy(&h, &g),
            reduced: PartitionedGraph::build(&[r + 1], &reduced).unwrap(),
            h,
            g,
            colouring: c,
            phi0: Vec::new(),
            params: Params {
                eps: 0.2,
                d: 0.6,
                mu: 0.05,
                delta: 2,
            },
        }
    }

    fn run(inst: &BlowUpInstance, policy: ColourPolicy, seed: u64) -> Result<RoundsOutcome> {
        let psi = round_colouring(&inst.reduced, true).unwrap();
        let res = reserve_colours(inst, &psi, policy, ReserveConfig::from_params(0.2, 0.6, 0.05), seed, Execution::Sequential)?;
        let mut cfg = RoundsConfig::new(0.4, 0.6 / res.classes() as f64);
        cfg.strict = policy == ColourPolicy::Reserved;
        embed_rounds(inst, &psi, &res, cfg, seed, Execution::Parallel)
    }

    #[test]
    fn single_cluster_without_edges_takes_one_round() {
        let h = PartitionedGraph::build(&[0, 5], &[]).unwrap();
        let g = PartitionedGraph::build(&[0, 5], &[]).unwrap();
        let inst = BlowUpInstance {
            candidacy: BlowUpInstance::complete_candidacy(&h, &g),
            reduced: PartitionedGraph::build(&[2], &[]).unwrap(),
            h,
            g,
            colouring: EdgeSetColouring::new(0),
            phi0: Vec::new(),
            params: Params {
                eps: 0.2,
                d: 0.5,
                mu: 0.1,
                delta: 1,
            },
        };
        let out = run(&inst, ColourPolicy::Reserved, 1).unwrap();
        assert_eq!(out.rounds.len(), 1);
        assert_eq!(out.tries, 1);
    }

    #[test]
    fn matching_between_two_complete_clusters_embeds() {
        let inst = instance(2, 8, 1.0, false, 3);
        let out = run(&inst, ColourPolicy::Reserved, 2).unwrap();
        assert!(verify_embedding(&inst, &out.phi).passed());
        assert!(out.rounds.iter().all(|s| s.within_reserved && s.forced_disjoint));
    }

    #[test]
    fn paths_and_triangles_embed() {
        for (cycle, policy) in [(false, ColourPolicy::Reserved), (true, ColourPolicy::Ledger)] {
            let inst = instance(3, 24, 0.9, cycle, 7);
            let out = run(&inst, policy, 11).unwrap();
            assert!(verify_embedding(&inst, &out.phi).passed());
            assert!(out.rounds.iter().all(|s| s.within_reserved));
        }
    }

    #[test]
    fn conflicts_follow_shared_forced_colours() {
        // X_1 = {0, 1} embedded on V_1 = {0, 1}; X_2 = {2, 3} with 0-2, 1-3 in H.
        let h = PartitionedGraph::build(&[0, 2, 2], &[(0, 2), (1, 3)]).unwrap();
        let edges = [(0, 2), (0, 3), (1, 2), (1, 3)];
        let g = PartitionedGraph::build(&[0, 2, 2], &edges).unwrap();
        let mut c = EdgeSetColouring::new(4);
        for (k, &(u, v)) in edges.iter().enumerate() {
            c.assign(u, v, &[if k == 3 { 0 } else { k }]).unwrap();
        }
        let inst = BlowUpInstance {
            candidacy: BlowUpInstance::complete_candidacy(&h, &g),
            reduced: PartitionedGraph::build(&[3], &[(1, 2)]).unwrap(),
            h,
            g,
            colouring: c,
            phi0: Vec::new(),
            params: Params {
                eps: 0.2,
                d: 0.5,
                mu: 1.0,
                delta: 1,
            },
        };
        let phi = vec![Some(0), Some(1), None, None];
        let block = inst.candidacy[2].clone();
        let none = round_conflict_system(&inst, &block, &[None; 4], &[false; 4]);
        assert_eq!(none.system.pair_count(), 0);
        let rc = round_conflict_system(&inst, &block, &phi, &[false; 4]);
        // 2 -> 2 forces 0-2 (colour 0), 3 -> 3 forces 1-3 (colour 0)
        assert_eq!(rc.system.pair_count(), 1);
        assert_eq!(rc.system.partners((0, 0)), &[(1, 1)]);
        let used = round_conflict_system(&inst, &block, &phi, &[true, false, false, false]);
        assert_eq!(used.breaches.len(), 2);
    }

    fn brute_candidacy(inst: &BlowUpInstance, g_star: &PartitionedGraph, a: &Bipartite, phi: &[Option<usize>]) -> Bipartite {
        let mut out = Bipartite::empty(a.left_labels().to_vec(), a.right_labels().to_vec());
        for (l, &x) in a.left_labels().iter().enumerate() {
            for (r, &v) in a.right_labels().iter().enumerate() {
                let ok = a.has(l, r) && inst.h.neighbours(x).iter().all(|&y| phi[y].is_none_or(|w| g_star.has_edge(w, v)));
                if ok {
                    out.insert(l, r);
                }
            }
        }
        out
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        /// The candidate relation against its definition, and against the
        /// four-graphs composition for a single embedded neighbour cluster.
        #[test]
        fn update_matches_definition_and_composition(seed: u64, m in 3usize..16) {
            let inst = instance(3, m, 0.5, false, seed);
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed ^ 1);
            let mut perm: Vec<usize> = (0..m).collect();
            for a in (1..m).rev() {
                perm.swap(a, rng.random_range(0..=a));
            }
            let mut phi = vec![None; inst.h.n()];
            for (a, &x) in inst.x(2).iter().enumerate() {
                phi[x] = Some(inst.v(2)[perm[a]]);
            }
            let a0 = inst.candidacy[1].filtered(|_, _| rng.random_bool(0.7));
            let got = update_candidacy(&inst.h, &inst.g, &a0, &phi).unwrap();
            prop_assert_eq!(&got, &brute_candidacy(&inst, &inst.g, &a0, &phi));

            // σ: X_2 -> V_2 as a perfect matching of the complete graph.
            let sigma = PerfectMatching { mate: perm.clone() };
            let g12 = Bipartite::complete(inst.x(2).to_vec(), inst.v(2).to_vec());
            let pos = positions(&inst.h);
            let m21 = mates(&inst.h, 2, 1).unwrap();
            let mut p = Bipartite::empty(inst.x(2).to_vec(), inst.v(1).to_vec());
            for (l, y) in m21.iter().enumerate() {
                for r in a0.row(pos[y.unwrap()]).ones() {
                    p.insert(l, r);
                }
            }
            let g23 = inst.g.bipartite(inst.v(2), inst.v(1));
            let comp = a_sigma(&sigma, &g12, &p, &g23).unwrap();
            let pi: Vec<usize> = m21.iter().map(|y| pos[y.unwrap()]).collect();
            let projected = project_candidacy(&comp, &pi, inst.x(1).to_vec()).unwrap();
            prop_assert_eq!(got, projected);
        }
    }
}
