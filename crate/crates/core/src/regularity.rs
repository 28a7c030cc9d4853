//! Regular-pair tests. Exact mode enumerates every left subset and picks the
//! extremal right subset of each size by sorting degrees, which decides the
//! density conditions exactly. Sampled mode does the same for random left
//! subsets of the minimum admissible size and checks degrees exhaustively.

use rand::seq::index::sample;
use serde::{Deserialize, Serialize};

use crate::exec::Execution;
use crate::graph::{bitset_from, Bipartite, PartitionedGraph};
use crate::error::{Error, Result};
use crate::seed;

/// Largest side handled by exact mode.
pub const EXACT_CAP: usize = 16;
pub const DEFAULT_TRIALS: usize = 2000;
const BATCH: usize = 250;
const TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Flavour {
    /// `|d(S,T) - d| <= ε` on large subsets.
    Regular,
    /// `d(S,T) >= d - ε` on large subsets.
    LowerRegular,
    /// Regular, and every degree is `(d ± ε)` times the other side.
    Super,
    /// Lower-regular, and every degree is at least `(d - ε)` times the other side.
    LowerSuper,
}

impl Flavour {
    fn two_sided(self) -> bool {
        matches!(self, Flavour::Regular | Flavour::Super)
    }

    fn degrees(self) -> bool {
        matches!(self, Flavour::Super | Flavour::LowerSuper)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Mode {
    Exact,
    Sampled { trials: usize, seed: u64 },
}

impl Mode {
    /// Exact when both sides fit under the cap, otherwise sampled.
    pub fn auto(b: &Bipartite, seed: u64) -> Mode {
        if b.left_len() <= EXACT_CAP && b.right_len() <= EXACT_CAP {
            Mode::Exact
        } else {
            Mode::Sampled {
                trials: DEFAULT_TRIALS,
                seed,
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PairSpec {
    pub eps: f64,
    pub d: f64,
    pub flavour: Flavour,
}

impl PairSpec {
    pub fn new(eps: f64, d: f64, flavour: Flavour) -> Self {
        PairSpec { eps, d, flavour }
    }
}

/// Evidence that a pair fails its test. Vertices are reported by label.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum Witness {
    Density {
        left: Vec<usize>,
        right: Vec<usize>,
        edges: usize,
        density: f64,
    },
    Degree {
        vertex: usize,
        left_side: bool,
        degree: usize,
        other_side: usize,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub passed: bool,
    pub exact: bool,
    pub trials: usize,
    pub witness: Option<Witness>,
}

/// `⌈ε m⌉`, robust to rounding noise in the product.
pub fn min_subset(eps: f64, m: usize) -> usize {
    ((eps * m as f64) - TOL).ceil().max(0.0) as usize
}

fn violates(edges: usize, s: usize, t: usize, spec: &PairSpec) -> bool {
    let pairs = (s * t) as f64;
    let e = edges as f64;
    e < (spec.d - spec.eps) * pairs - TOL
        || (spec.flavour.two_sided() && e > (spec.d + spec.eps) * pairs + TOL)
}

fn degree_witness(b: &Bipartite, spec: &PairSpec) -> Option<Witness> {
    if !spec.flavour.degrees() {
        return None;
    }
    let bad = |deg: usize, other: usize| {
        let deg = deg as f64;
        let other = other as f64;
        deg < (spec.d - spec.eps) * other - TOL
            || (spec.flavour.two_sided() && deg > (spec.d + spec.eps) * other + TOL)
    };
    for l in 0..b.left_len() {
        let deg = b.left_degree(l);
        if bad(deg, b.right_len()) {
            return Some(Witness::Degree {
                vertex: b.left_labels()[l],
                left_side: true,
                degree: deg,
                other_side: b.right_len(),
            });
        }
    }
    for r in 0..b.right_len() {
        let deg = b.right_degree(r);
        if bad(deg, b.left_len()) {
            return Some(Witness::Degree {
                vertex: b.right_labels()[r],
                left_side: false,
                degree: deg,
                other_side: b.left_len(),
            });
        }
    }
    None
}

/// Given a left subset, look for a violating right subset among sizes in
/// `sizes`, choosing the `k` lowest (and highest) degree vertices into `s`.
fn best_right(
    b: &Bipartite,
    s: &[usize],
    sizes: std::ops::RangeInclusive<usize>,
    spec: &PairSpec,
) -> Option<Witness> {
    let sb = bitset_from(b.left_len(), s.iter().copied());
    let mut degs: Vec<(usize, usize)> = (0..b.right_len())
        .map(|r| (b.col(r).intersection_count(&sb), r))
        .collect();
    degs.sort_unstable();
    let mut low = 0;
    let mut prefix_low = Vec::with_capacity(degs.len() + 1);
    prefix_low.push(0);
    for &(d, _) in &degs {
        low += d;
        prefix_low.push(low);
    }
    let total = low;
    let witness = |t: Vec<usize>, edges: usize| Witness::Density {
        left: s.iter().map(|&l| b.left_labels()[l]).collect(),
        right: t.iter().map(|&r| b.right_labels()[r]).collect(),
        edges,
        density: edges as f64 / (s.len() * t.len()) as f64,
    };
    for k in sizes {
        let lo = prefix_low[k];
        if (lo as f64) < (spec.d - spec.eps) * (s.len() * k) as f64 - TOL {
            return Some(witness(degs[..k].iter().map(|&(_, r)| r).collect(), lo));
        }
        if spec.flavour.two_sided() {
            let hi = total - prefix_low[degs.len() - k];
            if violates(hi, s.len(), k, spec) {
                return Some(witness(degs[degs.len() - k..].iter().map(|&(_, r)| r).collect(), hi));
            }
        }
    }
    None
}

fn check_spec(b: &Bipartite, spec: &PairSpec) -> Result<(usize, usize)> {
    if !(spec.eps > 0.0 && spec.eps < 1.0) {
        return Err(Error::invalid(format!("ε = {} outside (0,1)", spec.eps)));
    }
    if !(0.0..=1.0).contains(&spec.d) {
        return Err(Error::invalid(format!("d = {} outside [0,1]", spec.d)));
    }
    let s0 = min_subset(spec.eps, b.left_len());
    let t0 = min_subset(spec.eps, b.right_len());
    if s0 == 0 || t0 == 0 {
        return Err(Error::invalid("degenerate pair: ⌈ε|V|⌉ = 0"));
    }
    Ok((s0, t0))
}

/// Test `b` as a pair `(V1, V2)` = (left, right).
pub fn test_pair(b: &Bipartite, spec: PairSpec, mode: Mode, exec: Execution) -> Result<Verdict> {
    let (s0, t0) = check_spec(b, &spec)?;
    if let Some(w) = degree_witness(b, &spec) {
        return Ok(Verdict {
            passed: false,
            exact: matches!(mode, Mode::Exact),
            trials: 0,
            witness: Some(w),
        });
    }
    match mode {
        Mode::Exact => exact(b, &spec, s0, t0),
        Mode::Sampled { trials, seed } => sampled(b, &spec, s0, t0, trials, seed, exec),
    }
}

/// Test `G[V1, V2]`.
pub fn test_graph_pair(
    g: &PartitionedGraph,
    v1: &[usize],
    v2: &[usize],
    spec: PairSpec,
    mode: Mode,
    exec: Execution,
) -> Result<Verdict> {
    test_pair(&g.bipartite(v1, v2), spec, mode, exec)
}

fn exact(b: &Bipartite, spec: &PairSpec, s0: usize, t0: usize) -> Result<Verdict> {
    let (n1, n2) = (b.left_len(), b.right_len());
    if n1 > EXACT_CAP || n2 > EXACT_CAP {
        return Err(Error::pre(format!(
            "exact mode limited to {EXACT_CAP} per side, got {n1} x {n2}"
        )));
    }
    let mut checked = 0;
    for mask in 1u32..(1u32 << n1) {
        if (mask.count_ones() as usize) < s0 {
            continue;
        }
        checked += 1;
        let s: Vec<usize> = (0..n1).filter(|&i| mask >> i & 1 == 1).collect();
        if let Some(w) = best_right(b, &s, t0..=n2, spec) {
            return Ok(Verdict {
                passed: false,
                exact: true,
                trials: checked,
                witness: Some(w),
            });
        }
    }
    Ok(Verdict {
        passed: true,
        exact: true,
        trials: checked,
        witness: None,
    })
}

fn binomial_at_most(n: usize, k: usize, cap: usize) -> Option<usize> {
    let mut acc: u128 = 1;
    for i in 0..k.min(n - k) {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
        if acc > cap as u128 {
            return None;
        }
    }
    Some(acc as usize)
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            if n - i < k - cur.len() {
                break;
            }
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, k, &mut Vec::new(), &mut out);
    out
}

fn sampled(
    b: &Bipartite,
    spec: &PairSpec,
    s0: usize,
    t0: usize,
    trials: usize,
    seed: u64,
    exec: Execution,
) -> Result<Verdict> {
    let n1 = b.left_len();
    // A trial space no larger than the trial count is covered completely.
    if let Some(space) = binomial_at_most(n1, s0, trials) {
        let all = combinations(n1, s0);
        let hit = exec.find_first(all.len(), |i| best_right(b, &all[i], t0..=t0, spec));
        return Ok(Verdict {
            passed: hit.is_none(),
            exact: false,
            trials: hit.as_ref().map_or(space, |(i, _)| i + 1),
            witness: hit.map(|(_, w)| w),
        });
    }
    let batches = trials.div_ceil(BATCH);
    let hit = exec.find_first(batches, |bi| {
        let mut rng = seed::rng(seed, "regularity-trials", bi as u64);
        let count = BATCH.min(trials - bi * BATCH);
        (0..count).find_map(|ti| {
            let s = sample(&mut rng, n1, s0).into_vec();
            best_right(b, &s, t0..=t0, spec).map(|w| (ti, w))
        })
    });
    Ok(match hit {
        Some((bi, (ti, w))) => Verdict {
            passed: false,
            exact: false,
            trials: bi * BATCH + ti + 1,
            witness: Some(w),
        },
        None => Verdict {
            passed: true,
            exact: false,
            trials,
            witness: None,
        },
    })
}

/// Split of `A` into vertices with typical degree into `Y` and the rest.
#[derive(Clone, Debug, PartialEq)]
pub struct TypicalSplit {
    pub good: Vec<usize>,
    pub bad: Vec<usize>,
    /// Whether `|bad| <= ε|A|`, as guaranteed for a lower-regular pair.
    pub bound_holds: bool,
}

/// Left vertices of `b` with at least `(d - ε)|Y|` neighbours on the right.
pub fn typical_degree_filter(b: &Bipartite, eps: f64, d: f64) -> TypicalSplit {
    let need = (d - eps) * b.right_len() as f64 - TOL;
    let (good, bad): (Vec<usize>, Vec<usize>) =
        (0..b.left_len()).partition(|&l| b.left_degree(l) as f64 >= need);
    let bound_holds = bad.len() as f64 <= eps * b.left_len() as f64 + TOL;
    TypicalSplit {
        good,
        bad,
        bound_holds,
    }
}

#[derive(Clone, Debug)]
pub struct Pruned {
    pub graph: Bipartite,
    pub verdict: Verdict,
    /// 0 when the input already passed.
    pub attempts: usize,
}

/// Randomly thin a lower-regular pair with equal sides to a super-regular one
/// of density `d²/2`, keeping edge `uv` with probability
/// `min(1, θ·sqrt(|V1||V2| / (deg u · deg v)))`, `θ = d²/2`, and verifying
/// against `(eps_out, d²/2)`.
pub fn prune_to_super_regular(
    b: &Bipartite,
    eps: f64,
    d: f64,
    eps_out: f64,
    seed: u64,
    budget: usize,
    exec: Execution,
) -> Result<Pruned> {
    if b.left_len() != b.right_len() {
        return Err(Error::pre("pruning needs equal sides"));
    }
    let theta = d * d / 2.0;
    let spec = PairSpec::new(eps_out, theta, Flavour::Super);
    let mode = |i: u64| Mode::auto(b, seed::derive(seed, "prune-check", i));
    let first = test_pair(b, spec, mode(0), exec)?;
    if first.passed {
        return Ok(Pruned {
            graph: b.clone(),
            verdict: first,
            attempts: 0,
        });
    }
    let lower = test_pair(b, PairSpec::new(eps, d, Flavour::LowerSuper), mode(u64::MAX), exec)?;
    if !lower.passed {
        return Err(Error::pre("input pair is not lower super-regular"));
    }
    let scale = (b.left_len() * b.right_len()) as f64;
    let mut last = first;
    for attempt in 1..=budget {
        let mut rng = seed::rng(seed, "prune", attempt as u64);
        let out = b.filtered(|l, r| {
            let p = (theta * (scale / (b.left_degree(l) * b.right_degree(r)) as f64).sqrt()).min(1.0);
            rand::Rng::random_bool(&mut rng, p)
        });
        let verdict = test_pair(&out, spec, mode(attempt as u64), exec)?;
        if verdict.passed {
            return Ok(Pruned {
                graph: out,
                verdict,
                attempts: attempt,
            });
        }
        last = verdict;
    }
    Err(Error::budget(
        "prune_to_super_regular",
        budget,
        format!("last witness {:?}", last.witness),
    ))
}

/// One side condition for [`filter_triple_condition`]: graphs `V1 × Vj` and
/// `V2 × Vj` with their reference densities.
#[derive(Clone, Copy, Debug)]
pub struct TripleSide<'a> {
    pub first: &'a Bipartite,
    pub second: &'a Bipartite,
    pub d_first: f64,
    pub d_second: f64,
}

/// Keep `v1v2` iff for every side `|N_first(v1) ∩ N_second(v2)|` lies in
/// `[(d_first·d_second - ε)·scale, (d_first·d_second + ε)·scale]`.
/// Returns the kept graph and the removed fraction.
pub fn filter_triple_condition(
    g12: &Bipartite,
    sides: &[TripleSide<'_>],
    eps: f64,
    scale: f64,
) -> (Bipartite, f64) {
    let total = g12.edge_count();
    let kept = g12.filtered(|l, r| {
        sides.iter().all(|s| {
            let common = s.first.row(l).intersection_count(s.second.row(r)) as f64;
            let centre = s.d_first * s.d_second;
            common >= (centre - eps) * scale - TOL && common <= (centre + eps) * scale + TOL
        })
    });
    let removed = if total == 0 {
        0.0
    } else {
        (total - kept.edge_count()) as f64 / total as f64
    };
    (kept, removed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    fn random_bipartite(n1: usize, n2: usize, p: f64, seed: u64) -> Bipartite {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut b = Bipartite::from_edges(n1, n2, &[]);
        for l in 0..n1 {
            for r in 0..n2 {
                if rng.random_bool(p) {
                    b.insert(l, r);
                }
            }
        }
        b
    }

    /// Every subset pair, written independently of the degree-sorting shortcut.
    fn brute_force(b: &Bipartite, spec: &PairSpec) -> bool {
        let (n1, n2) = (b.left_len(), b.right_len());
        let s0 = min_subset(spec.eps, n1);
        let t0 = min_subset(spec.eps, n2);
        for l in 0..n1 {
            let deg = b.left_degree(l) as f64;
            let other = n2 as f64;
            if spec.flavour.degrees()
                && (deg < (spec.d - spec.eps) * other - TOL
                    || (spec.flavour.two_sided() && deg > (spec.d + spec.eps) * other + TOL))
            {
                return false;
            }
        }
        for r in 0..n2 {
            let deg = b.right_degree(r) as f64;
            let other = n1 as f64;
            if spec.flavour.degrees()
                && (deg < (spec.d - spec.eps) * other - TOL
                    || (spec.flavour.two_sided() && deg > (spec.d + spec.eps) * other + TOL))
            {
                return false;
            }
        }
        for sm in 1u32..1 << n1 {
            if (sm.count_ones() as usize) < s0 {
                continue;
            }
            for tm in 1u32..1 << n2 {
                if (tm.count_ones() as usize) < t0 {
                    continue;
                }
                let mut e = 0;
                for l in 0..n1 {
                    for r in 0..n2 {
                        if sm >> l & 1 == 1 && tm >> r & 1 == 1 && b.has(l, r) {
                            e += 1;
                        }
                    }
                }
                if violates(e, sm.count_ones() as usize, tm.count_ones() as usize, spec) {
                    return false;
                }
            }
        }
        true
    }

    #[test]
    fn complete_pair_passes_everything() {
        let b = Bipartite::complete((0..4).collect(), (4..8).collect());
        for f in [Flavour::Regular, Flavour::LowerRegular, Flavour::Super, Flavour::LowerSuper] {
            let v = test_pair(&b, PairSpec::new(0.25, 1.0, f), Mode::Exact, Execution::Sequential)
                .unwrap();
            assert!(v.passed, "{f:?}");
        }
    }

    #[test]
    fn empty_pair_fails_with_degree_witness() {
        let b = Bipartite::from_edges(4, 4, &[]);
        let v = test_pair(&b, PairSpec::new(0.25, 0.5, Flavour::LowerSuper), Mode::Exact, Execution::Sequential)
            .unwrap();
        assert!(!v.passed);
        assert!(matches!(v.witness, Some(Witness::Degree { degree: 0, .. })));
    }

    #[test]
    fn witness_recount_violates() {
        // Half of the left side is isolated.
        let mut b = Bipartite::from_edges(6, 6, &[]);
        for l in 0..3 {
            for r in 0..6 {
                b.insert(l, r);
            }
        }
        let spec = PairSpec::new(0.4, 0.5, Flavour::Regular);
        let v = test_pair(&b, spec, Mode::Exact, Execution::Sequential).unwrap();
        let Some(Witness::Density { left, right, edges, .. }) = v.witness else {
            panic!("expected density witness");
        };
        let rb = bitset_from(6, right.iter().copied());
        assert_eq!(b.count_between(&left, &rb), edges);
        assert!(violates(edges, left.len(), right.len(), &spec));
    }

    #[test]
    fn degenerate_and_oversized_inputs() {
        let b = Bipartite::from_edges(0, 3, &[]);
        assert!(test_pair(&b, PairSpec::new(0.5, 0.5, Flavour::Regular), Mode::Exact, Execution::Sequential).is_err());
        let big = Bipartite::from_edges(17, 3, &[]);
        assert!(test_pair(&big, PairSpec::new(0.5, 0.0, Flavour::LowerRegular), Mode::Exact, Execution::Sequential).is_err());
    }

    #[test]
    fn sampled_agrees_across_execution_modes() {
        let b = random_bipartite(30, 30, 0.5, 4);
        let spec = PairSpec::new(0.2, 0.5, Flavour::Regular);
        let mode = Mode::Sampled { trials: 2000, seed: 11 };
        let s = test_pair(&b, spec, mode, Execution::Sequential).unwrap();
        let p = test_pair(&b, spec, mode, Execution::Parallel).unwrap();
        assert_eq!(s, p);
    }

    #[test]
    fn typical_filter_on_star_like_pair() {
        let b = Bipartite::from_edges(4, 4, &[(0, 0), (0, 1), (0, 2), (1, 0)]);
        let t = typical_degree_filter(&b, 0.25, 0.75);
        assert_eq!(t.good, vec![0]);
        assert_eq!(t.bad, vec![1, 2, 3]);
        assert!(!t.bound_holds);
    }

    #[test]
    fn prune_complete_pair_to_half_density() {
        let b = Bipartite::complete((0..40).collect(), (40..80).collect());
        let out = prune_to_super_regular(&b, 0.1, 1.0, 0.3, 5, 20, Execution::Sequential).unwrap();
        assert!(out.verdict.passed);
        assert!(out.attempts >= 1);
        assert!((out.graph.density() - 0.5).abs() < 0.1);
        let unequal = Bipartite::complete((0..3).collect(), (3..7).collect());
        assert!(prune_to_super_regular(&unequal, 0.1, 1.0, 0.3, 5, 1, Execution::Sequential).is_err());
    }

    #[test]
    fn triple_filter_keeps_typical_edges() {
        let g12 = Bipartite::complete((0..3).collect(), (0..3).collect());
        let g13 = Bipartite::complete((0..3).collect(), (0..4).collect());
        let mut g23 = Bipartite::complete((0..3).collect(), (0..4).collect());
        for r in 0..4 {
            g23.remove(2, r);
        }
        let side = TripleSide { first: &g13, second: &g23, d_first: 1.0, d_second: 1.0 };
        let (kept, removed) = filter_triple_condition(&g12, &[side], 0.25, 4.0);
        assert_eq!(kept.edge_count(), 6);
        assert!((removed - 1.0 / 3.0).abs() < 1e-12);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(96))]

        #[test]
        fn exact_matches_brute_force(
            n1 in 1usize..6, n2 in 1usize..6, p in 0.0f64..1.0, seed: u64,
            eps in 0.1f64..0.6, d in 0.0f64..1.0, f in 0usize..4,
        ) {
            let b = random_bipartite(n1, n2, p, seed);
            let flavour = [Flavour::Regular, Flavour::LowerRegular, Flavour::Super, Flavour::LowerSuper][f];
            let spec = PairSpec::new(eps, d, flavour);
            let v = test_pair(&b, spec, Mode::Exact, Execution::Sequential).unwrap();
            prop_assert_eq!(v.passed, brute_force(&b, &spec));
        }

        #[test]
        fn sampled_never_passes_when_exact_finds_minimum_size_witness(
            p in 0.1f64..0.9, seed: u64, eps in 0.15f64..0.5, d in 0.1f64..0.9,
        ) {
            let b = random_bipartite(7, 7, p, seed);
            let spec = PairSpec::new(eps, d, Flavour::LowerRegular);
            let s0 = min_subset(eps, 7) as u32;
            let mut min_size_violation = false;
            for sm in 0u32..1 << 7 {
                for tm in 0u32..1 << 7 {
                    if sm.count_ones() != s0 || tm.count_ones() != s0 {
                        continue;
                    }
                    let e = (0..7)
                        .flat_map(|l| (0..7).map(move |r| (l, r)))
                        .filter(|&(l, r)| sm >> l & 1 == 1 && tm >> r & 1 == 1 && b.has(l, r))
                        .count();
                    min_size_violation |= violates(e, s0 as usize, s0 as usize, &spec);
                }
            }
            let v = test_pair(&b, spec, Mode::Sampled { trials: 2000, seed }, Execution::Sequential).unwrap();
            prop_assert!(!(min_size_violation && v.passed));
        }
    }
}
