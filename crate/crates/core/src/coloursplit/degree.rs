use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::pra::{pra_run, AtomicEvent, BadEvent, FractionalHittingSet, Variables};
use super::{multinomial, random_colour_partition, simplex};
use crate::error::{Error, Result};
use crate::graph::{EdgeSetColouring, PartitionedGraph};
use crate::seed;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SplitStrategy {
    /// Redraw independent uniform splits until every window holds.
    Retry,
    /// Partial resampling over the upper-tail events.
    Pra,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DegreeSplitConfig {
    pub t: usize,
    /// Window parameter; derived from the colouring when `None`.
    pub kappa: Option<f64>,
    pub strategy: SplitStrategy,
    /// Redraws for `Retry`, resamples for `Pra`.
    pub budget: usize,
}

/// A vertex, or a vertex restricted to one part of its neighbourhood, with the
/// colour sets on its edges grouped by set.
#[derive(Clone, Debug)]
struct Unit {
    degree: usize,
    sets: Vec<(Vec<usize>, usize)>,
}

fn units(g: &PartitionedGraph, c: &EdgeSetColouring, vertex_part: Option<&[usize]>) -> Vec<Unit> {
    let mut out = Vec::new();
    for v in 0..g.n() {
        let mut groups: BTreeMap<usize, BTreeMap<Vec<usize>, usize>> = BTreeMap::new();
        for &w in g.neighbours(v) {
            let key = vertex_part.map_or(0, |p| p[w]);
            *groups.entry(key).or_default().entry(c.get(v, w).to_vec()).or_default() += 1;
        }
        for (_, sets) in groups {
            let degree = sets.values().sum();
            out.push(Unit {
                degree,
                sets: sets.into_iter().collect(),
            });
        }
    }
    out
}

fn type_of(set: &[usize], class_of: &[usize], t: usize) -> Vec<usize> {
    let mut s = vec![0; t];
    for &a in set {
        s[class_of[a]] += 1;
    }
    s
}

/// `Q_{v,s}(Y) = d_I(v) / denom` for every `Y` assigning the colours of `I` to
/// classes with counts `s`.
#[derive(Clone, Debug)]
pub struct DegreeHittingSet {
    sets: Vec<(Vec<usize>, usize)>,
    s: Vec<usize>,
    denom: f64,
}

impl DegreeHittingSet {
    /// Hitting set of the event `d_{s,v} >= denom` at vertex `v` of `g`.
    pub fn at_vertex(
        g: &PartitionedGraph,
        c: &EdgeSetColouring,
        v: usize,
        s: &[usize],
        denom: f64,
    ) -> Self {
        let mut sets: BTreeMap<Vec<usize>, usize> = BTreeMap::new();
        for &w in g.neighbours(v) {
            *sets.entry(c.get(v, w).to_vec()).or_default() += 1;
        }
        DegreeHittingSet {
            sets: sets.into_iter().collect(),
            s: s.to_vec(),
            denom,
        }
    }

    /// Assignments of `set` to classes realising the counts `s`.
    fn typed_assignments(&self, set: &[usize]) -> Vec<AtomicEvent> {
        fn rec(set: &[usize], left: &mut Vec<usize>, cur: &mut Vec<(usize, usize)>, out: &mut Vec<AtomicEvent>) {
            if cur.len() == set.len() {
                out.push(AtomicEvent::new(cur.clone()).expect("distinct colours"));
                return;
            }
            let colour = set[cur.len()];
            for j in 0..left.len() {
                if left[j] > 0 {
                    left[j] -= 1;
                    cur.push((colour, j));
                    rec(set, left, cur, out);
                    cur.pop();
                    left[j] += 1;
                }
            }
        }
        let mut out = Vec::new();
        rec(set, &mut self.s.clone(), &mut Vec::new(), &mut out);
        out
    }
}

impl FractionalHittingSet for DegreeHittingSet {
    fn support(&self) -> Vec<(AtomicEvent, f64)> {
        let mut out = Vec::new();
        for (set, d) in &self.sets {
            for y in self.typed_assignments(set) {
                out.push((y, *d as f64 / self.denom));
            }
        }
        out
    }

    fn within(&self, assignment: &[usize]) -> Vec<(AtomicEvent, f64)> {
        let t = self.s.len();
        self.sets
            .iter()
            .filter(|(set, _)| type_of(set, assignment, t) == self.s)
            .map(|(set, d)| {
                let y = AtomicEvent::new(set.iter().map(|&a| (a, assignment[a])).collect())
                    .expect("distinct colours");
                (y, *d as f64 / self.denom)
            })
            .collect()
    }
}

struct DegreeEvent {
    q: DegreeHittingSet,
}

impl BadEvent for DegreeEvent {
    fn holds(&self, assignment: &[usize]) -> bool {
        let t = self.q.s.len();
        let d: usize = self
            .q
            .sets
            .iter()
            .filter(|(set, _)| type_of(set, assignment, t) == self.q.s)
            .map(|(_, d)| d)
            .sum();
        d as f64 >= self.q.denom - 1e-9
    }

    fn hitting_set(&self) -> &dyn FractionalHittingSet {
        &self.q
    }
}

/// Result of a degree split.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DegreeSplit {
    /// Class in `0..t` of every colour of the universe.
    pub class_of: Vec<usize>,
    pub t: usize,
    pub delta: usize,
    pub kappa: f64,
    /// Number of (split) vertices the windows are measured over.
    pub units: usize,
    /// Half-width `(2t)^Δ κ n` of every degree window.
    pub window: f64,
    /// Largest `|d_{s,v} - mean| / window` observed.
    pub worst_ratio: f64,
    pub attempts: usize,
    pub resamples: usize,
    /// `Σ λ_ij` over the colours in use, the bound on expected resamples.
    pub lambda_sum: f64,
}

fn uniform_delta(g: &PartitionedGraph, c: &EdgeSetColouring) -> Result<usize> {
    let mut delta = None;
    for &(u, v) in g.edges() {
        let k = c.get(u, v).len();
        match delta {
            None => delta = Some(k),
            Some(d) if d != k => {
                return Err(Error::pre("colour sets are not of uniform size; pad first"))
            }
            _ => {}
        }
    }
    match delta {
        Some(d) if d > 0 => Ok(d),
        _ => Err(Error::pre("degree split needs a non-empty uniform colouring")),
    }
}

/// Default window parameter `4·sqrt(t^Δ μ / d)` with `μ = k/n` and `d = δ/n`.
fn default_kappa(g: &PartitionedGraph, c: &EdgeSetColouring, t: usize, delta: usize) -> f64 {
    let n = g.n() as f64;
    let (k, _) = c.boundedness(g);
    let min_deg = (0..g.n()).map(|v| g.degree(v)).filter(|&d| d > 0).min().unwrap_or(1);
    let mu = k as f64 / n;
    let d = min_deg as f64 / n;
    4.0 * ((t as f64).powi(delta as i32) * mu / d).sqrt()
}

fn worst_ratio(units: &[Unit], class_of: &[usize], t: usize, delta: usize, window: f64) -> f64 {
    let simplex = simplex(t, delta);
    let scale = (t as f64).powi(-(delta as i32));
    let mut worst: f64 = 0.0;
    for u in units {
        for s in &simplex {
            let count: usize = u
                .sets
                .iter()
                .filter(|(set, _)| &type_of(set, class_of, t) == s)
                .map(|(_, d)| d)
                .sum();
            let mean = multinomial(delta, s) as f64 * scale * u.degree as f64;
            worst = worst.max((count as f64 - mean).abs() / window);
        }
    }
    worst
}

/// Split the colours of a uniform colouring into `t` classes so that every
/// vertex (or every part of a vertex neighbourhood, given `vertex_part`) sees
/// each class pattern `s` on `binom(Δ,s) t^{-Δ} d(v) ± (2t)^Δ κ n` edges.
pub fn degree_split(
    g: &PartitionedGraph,
    c: &EdgeSetColouring,
    cfg: DegreeSplitConfig,
    vertex_part: Option<&[usize]>,
    seed: u64,
) -> Result<DegreeSplit> {
    if cfg.t == 0 {
        return Err(Error::invalid("need at least one class"));
    }
    let delta = uniform_delta(g, c)?;
    let kappa = cfg.kappa.unwrap_or_else(|| default_kappa(g, c, cfg.t, delta));
    if kappa <= 0.0 {
        return Err(Error::invalid("κ must be positive"));
    }
    let units = units(g, c, vertex_part);
    let n_units = units.len() as f64;
    let window = (2.0 * cfg.t as f64).powi(delta as i32) * kappa * n_units;
    let used = c.colour_counts(g).iter().filter(|&&k| k > 0).count();
    let lambda_sum = used as f64 * (1.0 + kappa);
    let done = |class_of: Vec<usize>, attempts, resamples| {
        let worst = worst_ratio(&units, &class_of, cfg.t, delta, window);
        DegreeSplit {
            class_of,
            t: cfg.t,
            delta,
            kappa,
            units: units.len(),
            window,
            worst_ratio: worst,
            attempts,
            resamples,
            lambda_sum,
        }
    };
    match cfg.strategy {
        SplitStrategy::Retry => {
            let mut best = f64::INFINITY;
            for attempt in 1..=cfg.budget {
                let mut rng = seed::rng(seed, "degree-split", attempt as u64);
                let class_of = random_colour_partition(c.universe(), cfg.t, None, &mut rng)?;
                let ratio = worst_ratio(&units, &class_of, cfg.t, delta, window);
                if ratio <= 1.0 + 1e-12 {
                    return Ok(done(class_of, attempt, 0));
                }
                best = best.min(ratio);
            }
            Err(Error::budget(
                "degree_split",
                cfg.budget,
                format!("best window ratio {best:.3}"),
            ))
        }
        SplitStrategy::Pra => {
            let scale = (cfg.t as f64).powi(-(delta as i32));
            let upper = 2f64.powi(delta as i32) * kappa * n_units;
            let simplex = simplex(cfg.t, delta);
            let mut events = Vec::new();
            for u in &units {
                for s in &simplex {
                    events.push(DegreeEvent {
                        q: DegreeHittingSet {
                            sets: u.sets.clone(),
                            s: s.clone(),
                            denom: multinomial(delta, s) as f64 * scale * u.degree as f64 + upper,
                        },
                    });
                }
            }
            let refs: Vec<&dyn BadEvent> = events.iter().map(|e| e as &dyn BadEvent).collect();
            let vars = Variables::uniform(c.universe(), cfg.t);
            let out = pra_run(&vars, &refs, seed::derive(seed, "degree-split-pra", 0), cfg.budget)?;
            let split = done(out.assignment, 1, out.resamples);
            if split.worst_ratio > 1.0 + 1e-12 {
                return Err(Error::Invariant(format!(
                    "resampling finished but a window is off by ratio {:.3}",
                    split.worst_ratio
                )));
            }
            Ok(split)
        }
    }
}

/// A colouring padded with dummy colours to uniform set size.
#[derive(Clone, Debug, PartialEq)]
pub struct Padded {
    pub colouring: EdgeSetColouring,
    /// Colours `0..real_universe` are the original ones; the rest are dummies.
    pub real_universe: usize,
    pub dummies: usize,
}

/// Extend every colour set of `g`'s edges to exactly `delta` colours using
/// fresh dummy colours handed out round-robin, each used at most `bound` times.
pub fn pad_to_uniform(
    g: &PartitionedGraph,
    c: &EdgeSetColouring,
    delta: usize,
    bound: usize,
    seed: u64,
) -> Result<Padded> {
    let mut needed = 0;
    for &(u, v) in g.edges() {
        let k = c.get(u, v).len();
        if k > delta {
            return Err(Error::pre(format!("edge ({u},{v}) already has {k} > {delta} colours")));
        }
        needed += delta - k;
    }
    let real = c.universe();
    if needed == 0 {
        return Ok(Padded {
            colouring: c.clone(),
            real_universe: real,
            dummies: 0,
        });
    }
    if bound == 0 {
        return Err(Error::pre("dummy bound must be positive"));
    }
    let dummies = needed.div_ceil(bound).max(delta);
    let mut out = c.clone();
    out.set_universe(real + dummies)?;
    let mut order: Vec<(usize, usize)> = g.edges().to_vec();
    rand::seq::SliceRandom::shuffle(order.as_mut_slice(), &mut seed::rng(seed, "pad", 0));
    let mut next = 0;
    for (u, v) in order {
        let mut set = c.get(u, v).to_vec();
        for _ in set.len()..delta {
            set.push(real + next);
            next = (next + 1) % dummies;
        }
        out.assign(u, v, &set)?;
    }
    Ok(Padded {
        colouring: out,
        real_universe: real,
        dummies,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coloursplit::pra::check_hitting_set;
    use rand::{Rng, SeedableRng};

    fn random_host(n: usize, p: f64, seed: u64) -> PartitionedGraph {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let half = n / 2;
        let mut edges = Vec::new();
        for u in 0..half {
            for v in half..n {
                if rng.random_bool(p) {
                    edges.push((u, v));
                }
            }
        }
        PartitionedGraph::build(&[half, n - half], &edges).unwrap()
    }

    fn singleton_colouring(g: &PartitionedGraph, per_colour: usize) -> EdgeSetColouring {
        let universe = g.edge_count().div_ceil(per_colour);
        let mut c = EdgeSetColouring::new(universe);
        for (i, &(u, v)) in g.edges().iter().enumerate() {
            c.assign(u, v, &[i % universe]).unwrap();
        }
        c
    }

    #[test]
    fn hitting_set_covers_every_bad_assignment() {
        let g = PartitionedGraph::build(&[1, 3], &[(0, 1), (0, 2), (0, 3)]).unwrap();
        let mut c = EdgeSetColouring::new(6);
        c.assign(0, 1, &[0, 1]).unwrap();
        c.assign(0, 2, &[2, 3]).unwrap();
        c.assign(0, 3, &[4, 5]).unwrap();
        let s = vec![1, 1];
        let q = DegreeHittingSet::at_vertex(&g, &c, 0, &s, 2.0);
        assert_eq!(q.support().len(), 6);
        let ev = DegreeEvent { q: q.clone() };
        let bad: Vec<Vec<usize>> = (0..64u32)
            .map(|m| (0..6).map(|i| (m >> i & 1) as usize).collect())
            .filter(|a: &Vec<usize>| ev.holds(a))
            .collect();
        assert!(!bad.is_empty());
        check_hitting_set(&q, &bad).unwrap();
    }

    #[test]
    fn padding_is_uniform_and_bounded() {
        let g = random_host(20, 0.5, 1);
        let mut c = EdgeSetColouring::new(3);
        for (i, &(u, v)) in g.edges().iter().enumerate() {
            c.assign(u, v, &[i % 3][..i % 2]).unwrap();
        }
        let p = pad_to_uniform(&g, &c, 2, 5, 9).unwrap();
        for &(u, v) in g.edges() {
            let set = p.colouring.get(u, v);
            assert_eq!(set.len(), 2);
            assert!(c.get(u, v).iter().all(|x| set.contains(x)));
        }
        let counts = p.colouring.colour_counts(&g);
        assert!(counts[3..].iter().all(|&k| k <= 5));
        assert!(pad_to_uniform(&g, &c, 0, 5, 9).is_err());
    }

    #[test]
    fn retry_and_pra_meet_windows() {
        let g = random_host(60, 0.5, 2);
        let c = singleton_colouring(&g, 3);
        for strategy in [SplitStrategy::Retry, SplitStrategy::Pra] {
            let cfg = DegreeSplitConfig {
                t: 2,
                kappa: Some(0.04),
                strategy,
                budget: 20_000,
            };
            let out = degree_split(&g, &c, cfg, None, 5).unwrap();
            assert!(out.worst_ratio <= 1.0);
            assert_eq!(out.class_of.len(), c.universe());
        }
    }

    #[test]
    fn neighbourhood_parts_split_each_vertex() {
        let g = random_host(40, 0.6, 3);
        let c = singleton_colouring(&g, 2);
        let part: Vec<usize> = (0..40).map(|v| v % 3).collect();
        let cfg = DegreeSplitConfig {
            t: 2,
            kappa: Some(0.02),
            strategy: SplitStrategy::Pra,
            budget: 50_000,
        };
        let out = degree_split(&g, &c, cfg, Some(&part), 1).unwrap();
        assert!(out.units > 40);
        assert!(out.worst_ratio <= 1.0);
    }

    #[test]
    fn non_uniform_input_is_rejected() {
        let g = PartitionedGraph::build(&[1, 2], &[(0, 1), (0, 2)]).unwrap();
        let mut c = EdgeSetColouring::new(3);
        c.assign(0, 1, &[0]).unwrap();
        c.assign(0, 2, &[1, 2]).unwrap();
        let cfg = DegreeSplitConfig {
            t: 2,
            kappa: Some(0.1),
            strategy: SplitStrategy::Retry,
            budget: 1,
        };
        assert!(degree_split(&g, &c, cfg, None, 0).is_err());
    }
}
