//! Triples of bipartite graphs on `V1, V2, V3`: the common-neighbourhood
//! condition, the subgraph `A_σ` cut out by a matching of `V1 × V2`, and the
//! relabelling of a candidacy graph along a matching of the target graph.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::graph::Bipartite;
use crate::matching::PerfectMatching;
use crate::regularity::{test_pair, Flavour, Mode, PairSpec, Verdict};
use crate::seed;

const TOL: f64 = 1e-9;

/// Graphs `g12 ⊆ V1×V2`, `g13 ⊆ V1×V3`, `g23 ⊆ V2×V3` on classes of equal size.
#[derive(Clone, Debug)]
pub struct RegularTriple {
    pub g12: Bipartite,
    pub g13: Bipartite,
    pub g23: Bipartite,
    pub d12: f64,
    pub d13: f64,
    pub d23: f64,
    pub eps: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WindowViolation {
    pub v1: usize,
    pub v2: usize,
    pub common: usize,
    pub low: f64,
    pub high: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TripleVerdict {
    pub passed: bool,
    pub pairs: Vec<Verdict>,
    pub window: Option<WindowViolation>,
}

impl RegularTriple {
    fn size(&self) -> Result<usize> {
        let n = self.g12.left_len();
        let sizes = [
            self.g12.right_len(),
            self.g13.left_len(),
            self.g13.right_len(),
            self.g23.left_len(),
            self.g23.right_len(),
        ];
        if sizes.iter().any(|&s| s != n) {
            return Err(Error::invalid("triple classes must have equal size"));
        }
        Ok(n)
    }

    /// First edge `v1v2` of `g12` whose common neighbourhood in `V3` leaves
    /// `(d13·d23 ± ε)n`.
    pub fn window_violation(&self) -> Result<Option<WindowViolation>> {
        let n = self.size()? as f64;
        let centre = self.d13 * self.d23;
        let (low, high) = ((centre - self.eps) * n, (centre + self.eps) * n);
        Ok(self.g12.edges().into_iter().find_map(|(l, r)| {
            let common = self.g13.row(l).intersection_count(self.g23.row(r));
            let c = common as f64;
            (c < low - TOL || c > high + TOL).then(|| WindowViolation {
                v1: self.g12.left_labels()[l],
                v2: self.g12.right_labels()[r],
                common,
                low,
                high,
            })
        }))
    }
}

/// Super-regularity of all three pairs plus the common-neighbourhood window
/// for every edge of `g12`.
pub fn check_triple_regular(t: &RegularTriple, seed: u64, exec: Execution) -> Result<TripleVerdict> {
    t.size()?;
    let graphs = [(&t.g12, t.d12), (&t.g13, t.d13), (&t.g23, t.d23)];
    let mut pairs = Vec::with_capacity(3);
    for (k, (b, d)) in graphs.into_iter().enumerate() {
        let spec = PairSpec::new(t.eps, d, Flavour::Super);
        pairs.push(test_pair(b, spec, Mode::auto(b, seed::derive(seed, "triple", k as u64)), exec)?);
    }
    let window = t.window_violation()?;
    Ok(TripleVerdict {
        passed: window.is_none() && pairs.iter().all(|v| v.passed),
        pairs,
        window,
    })
}

/// The spanning subgraph of `g13` keeping `v1v3` iff `σ(v1)v3 ∈ g23`.
pub fn a_sigma(sigma: &PerfectMatching, g12: &Bipartite, g13: &Bipartite, g23: &Bipartite) -> Result<Bipartite> {
    if !sigma.is_perfect_in(g12) {
        return Err(Error::invalid("σ is not a perfect matching of the first graph"));
    }
    if g13.left_len() != g12.left_len() || g23.left_len() != g12.right_len() || g13.right_len() != g23.right_len() {
        return Err(Error::invalid("triple graphs do not share their classes"));
    }
    Ok(g13.filtered(|l, r| g23.has(sigma.mate[l], r)))
}

/// Relabel the left side of `a` (on `X_j × V_j`) along `pi: X_j → X_i`:
/// row `pi[x]` of the result is row `x` of `a`. `labels` names `X_i`.
pub fn project_candidacy(a: &Bipartite, pi: &[usize], labels: Vec<usize>) -> Result<Bipartite> {
    let n = a.left_len();
    if pi.len() != n || labels.len() != n {
        return Err(Error::invalid("projection needs a bijection of the left side"));
    }
    let mut seen = vec![false; n];
    for &p in pi {
        if p >= n || std::mem::replace(&mut seen[p], true) {
            return Err(Error::invalid("projection map is not a bijection"));
        }
    }
    let mut out = Bipartite::empty(labels, a.right_labels().to_vec());
    for (x, v) in a.edges() {
        out.insert(pi[x], v);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matching::{enumerate_perfect_matchings, perfect_matching};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    fn random(n: usize, p: f64, rng: &mut impl Rng) -> Bipartite {
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

    fn complete(n: usize) -> Bipartite {
        Bipartite::complete((0..n).collect(), (0..n).collect())
    }

    #[test]
    fn complete_triple_passes() {
        let t = RegularTriple {
            g12: complete(6),
            g13: complete(6),
            g23: complete(6),
            d12: 1.0,
            d13: 1.0,
            d23: 1.0,
            eps: 0.1,
        };
        assert!(check_triple_regular(&t, 1, Execution::Sequential).unwrap().passed);
    }

    #[test]
    fn empty_third_graph_breaks_the_window() {
        let t = RegularTriple {
            g12: complete(5),
            g13: complete(5),
            g23: Bipartite::from_edges(5, 5, &[]),
            d12: 1.0,
            d13: 1.0,
            d23: 0.5,
            eps: 0.1,
        };
        let v = check_triple_regular(&t, 1, Execution::Sequential).unwrap();
        assert!(!v.passed);
        assert_eq!(v.window.unwrap().common, 0);
    }

    #[test]
    fn a_sigma_extremes() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        let g13 = random(6, 0.5, &mut rng);
        let sigma = perfect_matching(&complete(6)).unwrap();
        assert_eq!(a_sigma(&sigma, &complete(6), &g13, &complete(6)).unwrap(), g13);
        let empty = Bipartite::from_edges(6, 6, &[]);
        assert_eq!(a_sigma(&sigma, &complete(6), &g13, &empty).unwrap().edge_count(), 0);
    }

    #[test]
    fn transposition_swaps_candidate_sets() {
        let a = Bipartite::from_edges(3, 3, &[(0, 0), (1, 1), (1, 2), (2, 2)]);
        let p = project_candidacy(&a, &[1, 0, 2], vec![10, 11, 12]).unwrap();
        assert_eq!(p.row(0).ones().collect::<Vec<_>>(), vec![1, 2]);
        assert_eq!(p.row(1).ones().collect::<Vec<_>>(), vec![0]);
        assert!(project_candidacy(&a, &[0, 0, 2], vec![0, 1, 2]).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn a_sigma_matches_double_loop(seed: u64, p in 0.2f64..0.9) {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let (g12, g13, g23) = (random(4, 0.8, &mut rng), random(4, p, &mut rng), random(4, p, &mut rng));
            for sigma in enumerate_perfect_matchings(&g12).unwrap() {
                let a = a_sigma(&sigma, &g12, &g13, &g23).unwrap();
                for v1 in 0..4 {
                    for v3 in 0..4 {
                        prop_assert_eq!(a.has(v1, v3), g13.has(v1, v3) && g23.has(sigma.mate[v1], v3));
                    }
                    let expected = g13.row(v1).intersection_count(g23.row(sigma.mate[v1]));
                    prop_assert_eq!(a.left_degree(v1), expected);
                }
            }
        }

        #[test]
        fn window_matches_recount(seed: u64) {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let n = 30;
            let t = RegularTriple {
                g12: random(n, 0.5, &mut rng),
                g13: random(n, 0.5, &mut rng),
                g23: random(n, 0.5, &mut rng),
                d12: 0.5,
                d13: 0.5,
                d23: 0.5,
                eps: 0.2,
            };
            let mut expected = true;
            for (l, r) in t.g12.edges() {
                let common = (0..n).filter(|&v| t.g13.has(l, v) && t.g23.has(r, v)).count() as f64;
                if (common - 0.25 * n as f64).abs() > 0.2 * n as f64 + 1e-9 {
                    expected = false;
                }
            }
            prop_assert_eq!(t.window_violation().unwrap().is_none(), expected);
        }

        #[test]
        fn projection_round_trips_and_keeps_degrees(seed: u64) {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let a = random(7, 0.4, &mut rng);
            let mut pi: Vec<usize> = (0..7).collect();
            for i in (1..7).rev() {
                pi.swap(i, rng.random_range(0..=i));
            }
            let mut inv = vec![0; 7];
            for (x, &p) in pi.iter().enumerate() {
                inv[p] = x;
            }
            let p = project_candidacy(&a, &pi, (0..7).collect()).unwrap();
            let mut da: Vec<usize> = (0..7).map(|x| a.left_degree(x)).collect();
            let mut dp: Vec<usize> = (0..7).map(|x| p.left_degree(x)).collect();
            da.sort_unstable();
            dp.sort_unstable();
            prop_assert_eq!(da, dp);
            prop_assert_eq!(project_candidacy(&p, &inv, (0..7).collect()).unwrap(), a);
        }
    }
}
