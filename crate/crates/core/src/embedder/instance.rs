use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::graph::{Bipartite, EdgeSetColouring, GraphJson, PartitionedGraph};
use crate::regularity::{test_pair, Flavour, Mode, PairSpec, Verdict};
use crate::seed;

/// Regularity and boundedness parameters of an instance.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Params {
    pub eps: f64,
    pub d: f64,
    pub mu: f64,
    /// Degree bound for `H` and the reduced graph.
    pub delta: usize,
}

/// Target `H` with parts `X_0..X_r`, host `G` with parts `V_0..V_r`, reduced
/// graph on `0..=r` (vertex 0 isolated), candidacy graphs on `X_j × V_j`
/// (index 0 unused), host colouring and the pre-embedding `φ0: X_0 → V_0`.
#[derive(Clone, Debug)]
pub struct BlowUpInstance {
    pub h: PartitionedGraph,
    pub g: PartitionedGraph,
    pub reduced: PartitionedGraph,
    pub candidacy: Vec<Bipartite>,
    pub colouring: EdgeSetColouring,
    pub phi0: Vec<(usize, usize)>,
    pub params: Params,
}

/// How strictly `H` is structured between adjacent clusters.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Form {
    General,
    /// `H[X_i, X_j]` is a perfect matching for every reduced edge.
    Matchings,
    /// `H[X_i, X_j]` is a (possibly partial) matching for every reduced edge.
    PartialMatchings,
}

impl BlowUpInstance {
    pub fn r(&self) -> usize {
        self.reduced.n() - 1
    }

    pub fn x(&self, j: usize) -> &[usize] {
        self.h.part(j)
    }

    pub fn v(&self, j: usize) -> &[usize] {
        self.g.part(j)
    }

    /// `Σ_{j≥1} |V_j|`, the scale behind `μn`.
    pub fn n(&self) -> usize {
        (1..=self.r()).map(|j| self.v(j).len()).sum()
    }

    /// `φ0` as a map over `V(H)`.
    pub fn phi0_map(&self) -> Vec<Option<usize>> {
        let mut map = vec![None; self.h.n()];
        for &(x, v) in &self.phi0 {
            if x < map.len() {
                map[x] = Some(v);
            }
        }
        map
    }

    /// Complete candidacy graphs for every cluster.
    pub fn complete_candidacy(h: &PartitionedGraph, g: &PartitionedGraph) -> Vec<Bipartite> {
        (0..h.part_count())
            .map(|j| {
                if j == 0 {
                    Bipartite::empty(Vec::new(), Vec::new())
                } else {
                    Bipartite::complete(h.part(j).to_vec(), g.part(j).to_vec())
                }
            })
            .collect()
    }

    /// The form `H` actually has between reduced-adjacent clusters.
    pub fn detected_form(&self) -> Form {
        let mut perfect = true;
        for &(i, j) in self.reduced.edges() {
            let mut deg = std::collections::HashMap::new();
            let mut edges = 0;
            for &x in self.x(i) {
                for &y in self.h.neighbours(x) {
                    if self.h.part_of(y) == j {
                        edges += 1;
                        *deg.entry(x).or_insert(0) += 1;
                        *deg.entry(y).or_insert(0) += 1;
                    }
                }
            }
            if deg.values().any(|&d| d > 1) {
                return Form::General;
            }
            if edges != self.x(i).len() || edges != self.x(j).len() {
                perfect = false;
            }
        }
        if perfect {
            Form::Matchings
        } else {
            Form::PartialMatchings
        }
    }
}

/// JSON form of a blow-up instance. Candidacy pairs use global vertex ids;
/// when absent every candidacy graph is complete.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlowUpJson {
    pub h: GraphJson,
    pub g: GraphJson,
    pub reduced: Vec<[usize; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub candidacy: Option<Vec<Vec<[usize; 2]>>>,
    #[serde(default)]
    pub phi0: Vec<[usize; 2]>,
    pub params: Params,
}

impl BlowUpJson {
    pub fn encode(inst: &BlowUpInstance, complete_candidacy: bool) -> Self {
        let candidacy = (!complete_candidacy).then(|| {
            (1..=inst.r())
                .map(|j| {
                    let a = &inst.candidacy[j];
                    a.edges()
                        .into_iter()
                        .map(|(l, r)| [a.left_labels()[l], a.right_labels()[r]])
                        .collect()
                })
                .collect()
        });
        BlowUpJson {
            h: GraphJson::encode(&inst.h, None),
            g: GraphJson::encode(&inst.g, Some(&inst.colouring)),
            reduced: inst.reduced.edges().iter().map(|&(i, j)| [i, j]).collect(),
            candidacy,
            phi0: inst.phi0.iter().map(|&(x, v)| [x, v]).collect(),
            params: inst.params,
        }
    }

    pub fn decode(&self) -> Result<BlowUpInstance> {
        let (h, _) = self.h.decode()?;
        let (g, c) = self.g.decode()?;
        let colouring = c.ok_or_else(|| Error::invalid("host graph carries no colouring"))?;
        if h.part_count() != g.part_count() || h.part_count() == 0 {
            return Err(Error::invalid(format!(
                "target has {} parts, host has {}",
                h.part_count(),
                g.part_count()
            )));
        }
        let r = h.part_count() - 1;
        let edges: Vec<(usize, usize)> = self.reduced.iter().map(|e| (e[0], e[1])).collect();
        if edges.iter().any(|&(i, j)| i == 0 || j == 0) {
            return Err(Error::invalid("reduced graph lives on clusters 1..=r"));
        }
        let reduced = PartitionedGraph::build(&[r + 1], &edges)?;
        let candidacy = match &self.candidacy {
            None => BlowUpInstance::complete_candidacy(&h, &g),
            Some(lists) => {
                if lists.len() != r {
                    return Err(Error::invalid(format!("{} candidacy lists for {r} clusters", lists.len())));
                }
                let mut out = vec![Bipartite::empty(Vec::new(), Vec::new())];
                for (k, list) in lists.iter().enumerate() {
                    let j = k + 1;
                    let (xs, vs) = (h.part(j), g.part(j));
                    let mut a = Bipartite::empty(xs.to_vec(), vs.to_vec());
                    for &[x, v] in list {
                        let (Some(l), Some(rr)) = (xs.iter().position(|&y| y == x), vs.iter().position(|&w| w == v)) else {
                            return Err(Error::invalid(format!("candidacy pair ({x},{v}) outside cluster {j}")));
                        };
                        a.insert(l, rr);
                    }
                    out.push(a);
                }
                out
            }
        };
        Ok(BlowUpInstance {
            h,
            g,
            reduced,
            candidacy,
            colouring,
            phi0: self.phi0.iter().map(|p| (p[0], p[1])).collect(),
            params: self.params,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

impl Check {
    fn new(name: &str, failure: Option<String>) -> Self {
        Check {
            name: name.to_string(),
            passed: failure.is_none(),
            detail: failure,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairVerdict {
    pub pair: (usize, usize),
    pub candidacy: bool,
    pub verdict: Verdict,
}

/// Structural checks must pass for any embedding attempt; hypothesis and
/// regularity checks are reported for diagnosis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub form: Form,
    pub structural: Vec<Check>,
    pub hypotheses: Vec<Check>,
    pub regularity: Vec<PairVerdict>,
}

impl ValidationReport {
    pub fn structural_ok(&self) -> bool {
        self.structural.iter().all(|c| c.passed)
    }

    pub fn first_failure(&self) -> Option<&Check> {
        self.structural.iter().find(|c| !c.passed)
    }
}

fn first<T>(mut it: impl Iterator<Item = T>) -> Option<T> {
    it.next()
}

fn structural(inst: &BlowUpInstance, form: Form) -> Vec<Check> {
    let (h, g) = (&inst.h, &inst.g);
    let r_ok = h.part_count() == g.part_count() && inst.reduced.n() == h.part_count();
    let mut out = vec![Check::new(
        "part-counts",
        (!r_ok).then(|| {
            format!(
                "target {} parts, host {} parts, reduced graph {} vertices",
                h.part_count(),
                g.part_count(),
                inst.reduced.n()
            )
        }),
    )];
    if !r_ok {
        return out;
    }
    let r = inst.r();
    out.push(Check::new(
        "reduced-graph",
        (inst.reduced.degree(0) != 0).then(|| "vertex 0 of the reduced graph has neighbours".to_string()),
    ));
    out.push(Check::new(
        "cluster-sizes",
        first((0..=r).filter(|&i| inst.x(i).len() != inst.v(i).len()))
            .map(|i| format!("|X_{i}| = {} but |V_{i}| = {}", inst.x(i).len(), inst.v(i).len())),
    ));
    out.push(Check::new(
        "independent-clusters",
        first((0..=r).filter(|&i| !h.is_independent(inst.x(i)))).map(|i| format!("X_{i} spans an edge")),
    ));
    out.push(Check::new(
        "edges-follow-reduced-graph",
        first(h.edges().iter().filter(|&&(x, y)| {
            let (i, j) = (h.part_of(x), h.part_of(y));
            i != 0 && j != 0 && !inst.reduced.has_edge(i, j)
        }))
        .map(|&(x, y)| format!("edge ({x},{y}) joins clusters {} and {} which are not adjacent", h.part_of(x), h.part_of(y))),
    ));
    if form != Form::General {
        let mut failure = None;
        'pairs: for &(i, j) in inst.reduced.edges() {
            for (a, b) in [(i, j), (j, i)] {
                for &x in inst.x(a) {
                    let d = h.neighbours(x).iter().filter(|&&y| h.part_of(y) == b).count();
                    let bad = if form == Form::Matchings { d != 1 } else { d > 1 };
                    if bad {
                        failure = Some(format!("vertex {x} of X_{a} has {d} neighbours in X_{b}"));
                        break 'pairs;
                    }
                }
            }
        }
        out.push(Check::new("matchings", failure));
    }
    let cand = (1..=r).find_map(|j| {
        let a = inst.candidacy.get(j)?;
        (a.left_labels() != inst.x(j) || a.right_labels() != inst.v(j)).then_some(j)
    });
    out.push(Check::new(
        "candidacy-shape",
        if inst.candidacy.len() != r + 1 {
            Some(format!("{} candidacy graphs for {r} clusters", inst.candidacy.len().saturating_sub(1)))
        } else {
            cand.map(|j| format!("candidacy graph {j} is not on X_{j} × V_{j}"))
        },
    ));
    out.push(Check::new(
        "colouring",
        match inst.colouring.validate(g) {
            Err(e) => Some(e.to_string()),
            Ok(()) => first(g.edges().iter().filter(|&&(u, v)| inst.colouring.get(u, v).is_empty()))
                .map(|&(u, v)| format!("edge ({u},{v}) has no colour")),
        },
    ));
    out.push(Check::new("phi0", phi0_failure(inst)));
    out
}

fn phi0_failure(inst: &BlowUpInstance) -> Option<String> {
    let (x0, v0) = (inst.x(0), inst.v(0));
    if inst.phi0.len() != x0.len() {
        return Some(format!("φ0 has {} pairs for {} exceptional vertices", inst.phi0.len(), x0.len()));
    }
    let mut seen_x = std::collections::HashSet::new();
    let mut seen_v = std::collections::HashSet::new();
    for &(x, v) in &inst.phi0 {
        if x >= inst.h.n() || inst.h.part_of(x) != 0 {
            return Some(format!("φ0 maps {x}, which is not in X_0"));
        }
        if v >= inst.g.n() || inst.g.part_of(v) != 0 {
            return Some(format!("φ0 image {v} is not in V_0"));
        }
        if !seen_x.insert(x) || !seen_v.insert(v) {
            return Some(format!("φ0 is not injective at ({x},{v})"));
        }
    }
    let _ = v0;
    None
}

fn hypotheses(inst: &BlowUpInstance, form: Form) -> Vec<Check> {
    let p = inst.params;
    let (h, r) = (&inst.h, inst.r());
    let mut out = Vec::new();
    out.push(Check::new(
        "reduced-degree",
        (inst.reduced.max_degree() > p.delta).then(|| format!("Δ(R) = {} > {}", inst.reduced.max_degree(), p.delta)),
    ));
    let degree_of = |x: usize| -> usize {
        if form == Form::General {
            h.degree(x)
        } else {
            h.neighbours(x).iter().filter(|&&y| h.part_of(y) == 0).count()
        }
    };
    out.push(Check::new(
        "target-degree",
        first((0..h.n()).filter(|&x| h.part_of(x) != 0 && degree_of(x) > p.delta))
            .map(|x| format!("vertex {x} has degree {} > {}", degree_of(x), p.delta)),
    ));
    let n = inst.n() as f64;
    let mean = if r == 0 { 0.0 } else { n / r as f64 };
    let tol = if form == Form::General { p.eps * mean } else { 0.0 };
    out.push(Check::new(
        "cluster-balance",
        first((1..=r).filter(|&i| (inst.v(i).len() as f64 - mean).abs() > tol + 1e-9))
            .map(|i| format!("|V_{i}| = {} against n/r = {mean:.2}", inst.v(i).len())),
    ));
    if form == Form::General {
        let cap = (2.0 * p.delta as f64).powi(-4);
        out.push(Check::new(
            "exceptional-neighbours",
            first((1..=r).filter_map(|i| {
                let touching = inst
                    .x(i)
                    .iter()
                    .filter(|&&x| h.neighbours(x).iter().any(|&y| h.part_of(y) == 0))
                    .count();
                (touching as f64 > cap * inst.x(i).len() as f64 + 1e-9).then_some((i, touching))
            }))
            .map(|(i, k)| format!("{k} vertices of X_{i} touch X_0, above (2Δ)^-4·|X_{i}|")),
        ));
    }
    let (k, dc) = inst.colouring.boundedness(&inst.g);
    let bound = p.mu * n;
    out.push(Check::new(
        "colour-bound",
        (k as f64 > bound + 1e-9 || dc > p.delta.max(1))
            .then(|| format!("colouring is ({k},{dc})-bounded, allowed ({bound:.1},{})", p.delta.max(1))),
    ));
    out
}

/// Check an instance. Regularity of host pairs and candidacy graphs is tested
/// only when `regularity` is set (lower super-regular for the general form,
/// super-regular otherwise).
pub fn validate_instance(
    inst: &BlowUpInstance,
    form: Form,
    regularity: bool,
    seed: u64,
    exec: Execution,
) -> Result<ValidationReport> {
    let structural = structural(inst, form);
    let ok = structural.iter().all(|c| c.passed);
    let hypotheses = if ok { hypotheses(inst, form) } else { Vec::new() };
    let mut verdicts = Vec::new();
    if ok && regularity {
        let p = inst.params;
        let flavour = if form == Form::General {
            Flavour::LowerSuper
        } else {
            Flavour::Super
        };
        let mut jobs: Vec<(usize, usize, bool)> = inst.reduced.edges().iter().map(|&(i, j)| (i, j, false)).collect();
        jobs.extend((1..=inst.r()).map(|j| (j, j, true)));
        for (k, &(i, j, cand)) in jobs.iter().enumerate() {
            let b = if cand {
                inst.candidacy[j].clone()
            } else {
                inst.g.bipartite(inst.v(i), inst.v(j))
            };
            if b.left_len() == 0 || b.right_len() == 0 {
                continue;
            }
            let spec = if flavour == Flavour::Super {
                PairSpec::new(p.eps, b.density(), flavour)
            } else {
                PairSpec::new(p.eps, p.d, flavour)
            };
            let verdict = test_pair(&b, spec, Mode::auto(&b, seed::derive(seed, "validate", k as u64)), exec)?;
            verdicts.push(PairVerdict {
                pair: (i, j),
                candidacy: cand,
                verdict,
            });
        }
    }
    Ok(ValidationReport {
        form,
        structural,
        hypotheses,
        regularity: verdicts,
    })
}
