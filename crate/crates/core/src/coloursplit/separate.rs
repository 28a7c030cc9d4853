use serde::{Deserialize, Serialize};

use super::degree::{degree_split, pad_to_uniform, DegreeSplit, DegreeSplitConfig, SplitStrategy};
use super::classes_of;
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::graph::{bitset_from, Bipartite, EdgeSetColouring, PartitionedGraph};
use crate::regularity::{test_pair, Flavour, Mode, PairSpec, Verdict};
use crate::seed;

/// Test `G_{C'}[V1, V2]` against `(2ε, p^Δ d)` in the given flavour.
#[allow(clippy::too_many_arguments)]
pub fn sliced_regularity_check(
    g: &PartitionedGraph,
    v1: &[usize],
    v2: &[usize],
    c: &EdgeSetColouring,
    allowed: &[usize],
    base: PairSpec,
    p: f64,
    delta: usize,
    mode: Mode,
    exec: Execution,
) -> Result<Verdict> {
    let b = slice(g, c, v1, v2, allowed);
    let spec = PairSpec::new(2.0 * base.eps, p.powi(delta as i32) * base.d, base.flavour);
    test_pair(&b, spec, mode, exec)
}

fn slice(g: &PartitionedGraph, c: &EdgeSetColouring, v1: &[usize], v2: &[usize], allowed: &[usize]) -> Bipartite {
    let ok = bitset_from(c.universe(), allowed.iter().copied());
    let b = g.bipartite(v1, v2);
    b.filtered(|l, r| c.get(v1[l], v2[r]).iter().all(|&a| ok.contains(a)))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SeparateConfig {
    pub t: usize,
    /// Base regularity of the input pairs.
    pub eps: f64,
    pub d: f64,
    pub flavour: Flavour,
    pub strategy: SplitStrategy,
    pub kappa: Option<f64>,
    /// Maximum uses of one dummy colour (the `μn` bound).
    pub pad_bound: usize,
    pub trials: usize,
    /// Whole redraws of the split.
    pub budget: usize,
    /// Redraws or resamples inside one degree split.
    pub split_budget: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SliceCheck {
    pub pair: (usize, usize),
    pub class: usize,
    pub density: f64,
    pub verdict: Verdict,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeparatedColours {
    /// Class of each real colour.
    pub class_of: Vec<usize>,
    pub classes: Vec<Vec<usize>>,
    /// Uniform set size after padding.
    pub delta: usize,
    pub dummies: usize,
    pub attempts: usize,
    pub split: DegreeSplit,
    pub checks: Vec<SliceCheck>,
}

impl SeparatedColours {
    /// `G_{C_ℓ}[V_i, V_j]` with `V_i`, `V_j` the parts of `g`.
    pub fn slice(&self, g: &PartitionedGraph, c: &EdgeSetColouring, pair: (usize, usize), class: usize) -> Bipartite {
        slice(g, c, g.part(pair.0), g.part(pair.1), &self.classes[class])
    }
}

/// Split the colours of `g` into `cfg.t` classes so that, for every listed
/// pair of parts and class, the slice `G_{C_ℓ}[V_i, V_j]` passes the sliced
/// regularity test. `required` narrows the checked `(pair index, class)`
/// combinations; by default all are checked.
///
/// The colouring is padded with dummy colours to uniform size, split with
/// degree windows on every part of every neighbourhood, and the dummies are
/// dropped again.
pub fn separate_colours(
    g: &PartitionedGraph,
    c: &EdgeSetColouring,
    pairs: &[(usize, usize)],
    required: Option<&[(usize, usize)]>,
    cfg: SeparateConfig,
    seed: u64,
    exec: Execution,
) -> Result<SeparatedColours> {
    if cfg.t == 0 {
        return Err(Error::invalid("need at least one class"));
    }
    let delta = g
        .edges()
        .iter()
        .map(|&(u, v)| c.get(u, v).len())
        .max()
        .unwrap_or(0)
        .max(1);
    let padded = pad_to_uniform(g, c, delta, cfg.pad_bound.max(1), seed::derive(seed, "separate-pad", 0))?;
    let part: Vec<usize> = (0..g.n()).map(|v| g.part_of(v)).collect();
    let combos: Vec<(usize, usize)> = match required {
        Some(r) => r.to_vec(),
        None => (0..pairs.len())
            .flat_map(|p| (0..cfg.t).map(move |l| (p, l)))
            .collect(),
    };
    let mut last_failure = String::new();
    for attempt in 1..=cfg.budget {
        let split_cfg = DegreeSplitConfig {
            t: cfg.t,
            kappa: cfg.kappa,
            strategy: cfg.strategy,
            budget: cfg.split_budget,
        };
        let split = match degree_split(
            g,
            &padded.colouring,
            split_cfg,
            Some(&part),
            seed::derive(seed, "separate-split", attempt as u64),
        ) {
            Ok(s) => s,
            Err(Error::Budget { detail, .. }) => {
                last_failure = detail;
                continue;
            }
            Err(e) => return Err(e),
        };
        let class_of: Vec<usize> = split.class_of[..padded.real_universe].to_vec();
        let classes = classes_of(&class_of, cfg.t);
        let checks: Vec<Result<SliceCheck>> = exec.map(combos.len(), |k| {
            let (p, l) = combos[k];
            let (i, j) = pairs[p];
            let b = slice(g, c, g.part(i), g.part(j), &classes[l]);
            let spec = PairSpec::new(
                2.0 * cfg.eps,
                (cfg.t as f64).powi(-(delta as i32)) * cfg.d,
                cfg.flavour,
            );
            let mode = if b.left_len() <= crate::regularity::EXACT_CAP
                && b.right_len() <= crate::regularity::EXACT_CAP
            {
                Mode::Exact
            } else {
                Mode::Sampled {
                    trials: cfg.trials,
                    seed: seed::derive(seed, "separate-check", (attempt * combos.len() + k) as u64),
                }
            };
            Ok(SliceCheck {
                pair: (i, j),
                class: l,
                density: b.density(),
                verdict: test_pair(&b, spec, mode, Execution::Sequential)?,
            })
        });
        let checks: Vec<SliceCheck> = checks.into_iter().collect::<Result<_>>()?;
        if let Some(bad) = checks.iter().find(|s| !s.verdict.passed) {
            last_failure = format!("slice {:?} class {} failed", bad.pair, bad.class);
            continue;
        }
        return Ok(SeparatedColours {
            class_of,
            classes,
            delta,
            dummies: padded.dummies,
            attempts: attempt,
            split,
            checks,
        });
    }
    Err(Error::budget("separate_colours", cfg.budget, last_failure))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn clustered(m: usize, p: f64, seed: u64) -> (PartitionedGraph, EdgeSetColouring) {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut edges = Vec::new();
        for (a, b) in [(1, 2), (2, 3)] {
            for u in (a - 1) * m..a * m {
                for v in (b - 1) * m..b * m {
                    if rng.random_bool(p) {
                        edges.push((u + 1, v + 1));
                    }
                }
            }
        }
        // Part 0 is a single isolated vertex.
        let g = PartitionedGraph::build(&[1, m, m, m], &edges).unwrap();
        let mut c = EdgeSetColouring::new(g.edge_count());
        for (i, &(u, v)) in g.edges().iter().enumerate() {
            c.assign(u, v, &[i]).unwrap();
        }
        (g, c)
    }

    fn cfg(t: usize) -> SeparateConfig {
        SeparateConfig {
            t,
            eps: 0.15,
            d: 0.8,
            flavour: Flavour::LowerSuper,
            strategy: SplitStrategy::Retry,
            kappa: Some(0.5),
            pad_bound: 4,
            trials: 500,
            budget: 10,
            split_budget: 10,
        }
    }

    #[test]
    fn singleton_colouring_slices_equal_restrictions() {
        let (g, c) = clustered(30, 0.9, 1);
        let out = separate_colours(&g, &c, &[(1, 2), (2, 3)], None, cfg(2), 7, Execution::Sequential).unwrap();
        assert_eq!(out.checks.len(), 4);
        assert_eq!(out.dummies, 0);
        for l in 0..2 {
            let allowed = bitset_from(c.universe(), out.classes[l].iter().copied());
            let restricted = c.restrict(&g, &allowed);
            let s = out.slice(&g, &c, (1, 2), l);
            assert_eq!(s, restricted.bipartite(g.part(1), g.part(2)));
        }
    }

    #[test]
    fn required_combinations_limit_the_checks() {
        let (g, c) = clustered(30, 0.9, 2);
        let out = separate_colours(&g, &c, &[(1, 2), (2, 3)], Some(&[(0, 1)]), cfg(3), 7, Execution::Parallel).unwrap();
        assert_eq!(out.checks.len(), 1);
        assert_eq!(out.checks[0].class, 1);
    }

    #[test]
    fn impossible_density_exhausts_budget() {
        let (g, c) = clustered(12, 0.3, 3);
        let mut strict = cfg(2);
        strict.d = 1.0;
        strict.eps = 0.05;
        strict.budget = 2;
        assert!(matches!(
            separate_colours(&g, &c, &[(1, 2)], None, strict, 1, Execution::Sequential),
            Err(Error::Budget { .. })
        ));
    }
}
