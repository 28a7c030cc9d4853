use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::app_embed_config;
use crate::embedder::rounds::CheckMode;
use crate::embedder::{rainbow_blowup_embed, BlowUpInstance, EmbedConfig, EmbedReport, Params};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::graph::{EdgeSetColouring, PartitionedGraph};
use crate::partition::equitable_colouring;
use crate::regularity::{test_pair, Flavour, PairSpec};
use crate::seed;

/// Host and target on the same number of vertices, both as single-part graphs.
#[derive(Clone, Debug)]
pub struct QuasirandomInstance {
    pub g: PartitionedGraph,
    pub h: PartitionedGraph,
    pub colouring: EdgeSetColouring,
    pub params: Params,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuasirandomConfig {
    /// Random disjoint set pairs drawn for the density spot-check.
    pub spot_checks: usize,
    /// Random host partitions tried before giving up.
    pub partition_budget: usize,
    pub check: CheckMode,
    pub embed: EmbedConfig,
}

impl Default for QuasirandomConfig {
    fn default() -> Self {
        QuasirandomConfig {
            spot_checks: 200,
            partition_budget: 20,
            check: CheckMode::Auto,
            embed: app_embed_config(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct QuasirandomOutcome {
    pub phi: Vec<usize>,
    pub min_degree: usize,
    /// Smallest `e(S,T)/(|S||T|)` seen in the spot-check.
    pub spot_density: f64,
    pub partition_attempts: usize,
    pub report: EmbedReport,
}

/// Spanning rainbow embedding into a dense host: split the target into
/// `Δ+1` equitable independent classes, split the host randomly into parts of
/// the same sizes until every pair is lower super-regular, and embed with the
/// complete reduced graph and unrestricted candidates.
pub fn quasirandom_embed(
    inst: &QuasirandomInstance,
    cfg: QuasirandomConfig,
    seed: u64,
    exec: Execution,
) -> Result<QuasirandomOutcome> {
    let (g, h, p) = (&inst.g, &inst.h, inst.params);
    let n = g.n();
    if h.n() != n {
        return Err(Error::invalid(format!("target has {} vertices, host has {n}", h.n())));
    }
    if h.max_degree() > p.delta {
        return Err(Error::pre(format!("target has maximum degree {} above {}", h.max_degree(), p.delta)));
    }
    let min_degree = (0..n).map(|v| g.degree(v)).min().unwrap_or(0);
    if (min_degree as f64) < p.d * n as f64 - 1e-9 {
        return Err(Error::pre(format!("host minimum degree {min_degree} is below d·n = {:.1}", p.d * n as f64)));
    }
    let side = ((p.eps * n as f64).ceil() as usize).max(1);
    let mut spot_density = 1.0f64;
    if 2 * side <= n {
        let mut rng = seed::rng(seed, "spot-check", 0);
        let mut order: Vec<usize> = (0..n).collect();
        for _ in 0..cfg.spot_checks {
            order.shuffle(&mut rng);
            let (s, t) = (&order[..side], &order[side..2 * side]);
            spot_density = spot_density.min(g.density(s, t).value());
        }
        if spot_density < p.d - 1e-9 {
            return Err(Error::pre(format!(
                "spot-check found two sets of size {side} with density {spot_density:.3} below {}",
                p.d
            )));
        }
    }

    let k = p.delta + 1;
    let classes = equitable_colouring(h, k, seed::derive(seed, "target-classes", 0))?;
    let mut rng = seed::rng(seed, "host-partition", 0);
    for attempt in 0..cfg.partition_budget.max(1) {
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut rng);
        let mut parts = vec![Vec::new()];
        let mut it = order.into_iter();
        for c in &classes {
            parts.push(it.by_ref().take(c.len()).collect::<Vec<_>>());
        }
        let host = g.repartition(parts.clone())?;
        let mut ok = true;
        'pairs: for i in 1..=k {
            for j in i + 1..=k {
                let b = host.bipartite(&parts[i], &parts[j]);
                let spec = PairSpec::new(2.0 * p.eps, p.d / 2.0, Flavour::LowerSuper);
                let mode = cfg.check.mode(&b, seed::derive(seed, "pair", (attempt * k * k + i * k + j) as u64));
                if !test_pair(&b, spec, mode, exec)?.passed {
                    ok = false;
                    break 'pairs;
                }
            }
        }
        if !ok {
            continue;
        }
        let mut x_parts = vec![Vec::new()];
        x_parts.extend(classes.iter().cloned());
        let target = h.repartition(x_parts)?;
        let reduced: Vec<(usize, usize)> = (1..=k).flat_map(|i| (i + 1..=k).map(move |j| (i, j))).collect();
        let blow = BlowUpInstance {
            candidacy: BlowUpInstance::complete_candidacy(&target, &host),
            h: target,
            g: host,
            reduced: PartitionedGraph::build(&[k + 1], &reduced)?,
            colouring: inst.colouring.clone(),
            phi0: Vec::new(),
            params: Params { d: p.d / 2.0, ..p },
        };
        let out = rainbow_blowup_embed(&blow, cfg.embed, seed::derive(seed, "blow-up", 0), exec)?;
        return Ok(QuasirandomOutcome {
            phi: out.phi,
            min_degree,
            spot_density,
            partition_attempts: attempt + 1,
            report: out.report,
        });
    }
    Err(Error::budget(
        "quasirandom_embed",
        cfg.partition_budget,
        "no random host partition made every pair lower super-regular",
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn instance(n: usize, p: f64, h_edges: &[(usize, usize)], delta: usize, seed: u64) -> QuasirandomInstance {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut edges = Vec::new();
        for u in 0..n {
            for v in u + 1..n {
                if rng.random_bool(p) {
                    edges.push((u, v));
                }
            }
        }
        let g = PartitionedGraph::build(&[n], &edges).unwrap();
        let mut c = EdgeSetColouring::new(g.edge_count());
        for (k, &(u, v)) in g.edges().iter().enumerate() {
            c.assign(u, v, &[k]).unwrap();
        }
        QuasirandomInstance {
            g,
            h: PartitionedGraph::build(&[n], h_edges).unwrap(),
            colouring: c,
            params: Params {
                eps: 0.2,
                d: 0.3,
                mu: 0.05,
                delta,
            },
        }
    }

    #[test]
    fn edgeless_target_embeds() {
        let inst = instance(20, 0.8, &[], 1, 1);
        let out = quasirandom_embed(&inst, QuasirandomConfig::default(), 2, Execution::Sequential).unwrap();
        let mut images = out.phi.clone();
        images.sort_unstable();
        assert_eq!(images, (0..20).collect::<Vec<_>>());
    }

    #[test]
    fn perfect_matching_into_dense_random_host() {
        let h: Vec<(usize, usize)> = (0..20).map(|k| (2 * k, 2 * k + 1)).collect();
        let inst = instance(40, 0.7, &h, 1, 3);
        let out = quasirandom_embed(&inst, QuasirandomConfig::default(), 4, Execution::Parallel).unwrap();
        for &(a, b) in &h {
            assert!(inst.g.has_edge(out.phi[a], out.phi[b]));
        }
    }

    #[test]
    fn sparse_host_fails_the_degree_precheck() {
        let inst = instance(20, 0.05, &[], 1, 1);
        let err = quasirandom_embed(&inst, QuasirandomConfig::default(), 2, Execution::Sequential).unwrap_err();
        assert!(matches!(err, Error::Precondition(_)));
    }
}
