use serde::{Deserialize, Serialize};

use super::instance::BlowUpInstance;
use crate::graph::edge_key;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum Failure {
    /// `phi` has the wrong length or an image outside `V(G)`.
    Shape { detail: String },
    /// `x` in cluster `cluster` is sent outside `V_cluster`, or onto an image already taken by `other`.
    Bijection { cluster: usize, x: usize, image: usize, other: Option<usize> },
    Phi0 { x: usize, expected: usize, found: usize },
    NonEdge { x: usize, y: usize, images: (usize, usize) },
    Rainbow { first: (usize, usize), second: (usize, usize), colour: usize },
    Candidacy { x: usize, image: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Verification {
    pub bijection: bool,
    pub extends_phi0: bool,
    pub edges: bool,
    pub rainbow: bool,
    pub candidacy: bool,
    pub failures: Vec<Failure>,
}

impl Verification {
    pub fn passed(&self) -> bool {
        self.bijection && self.extends_phi0 && self.edges && self.rainbow && self.candidacy
    }
}

const MAX_WITNESSES: usize = 16;

/// Check `phi` (indexed by target vertex) against the instance: a bijection
/// `X_i → V_i` for every cluster, extending `φ0`, mapping every target edge to
/// a host edge, rainbow image, and every image a candidate.
pub fn verify_embedding(inst: &BlowUpInstance, phi: &[usize]) -> Verification {
    let (h, g) = (&inst.h, &inst.g);
    let mut out = Verification {
        bijection: true,
        extends_phi0: true,
        edges: true,
        rainbow: true,
        candidacy: true,
        failures: Vec::new(),
    };
    let push = |out: &mut Verification, f: Failure| {
        if out.failures.len() < MAX_WITNESSES {
            out.failures.push(f);
        }
    };
    if phi.len() != h.n() || phi.iter().any(|&v| v >= g.n()) || h.part_count() != g.part_count() {
        out.bijection = false;
        out.extends_phi0 = false;
        out.edges = false;
        out.rainbow = false;
        out.candidacy = false;
        let detail = format!(
            "map of length {} for {} target vertices into {} host vertices",
            phi.len(),
            h.n(),
            g.n()
        );
        push(&mut out, Failure::Shape { detail });
        return out;
    }
    let mut owner = vec![None; g.n()];
    for (x, &v) in phi.iter().enumerate() {
        let i = h.part_of(x);
        let taken = owner[v].replace(x);
        if g.part_of(v) != i || taken.is_some() {
            out.bijection = false;
            push(&mut out, Failure::Bijection { cluster: i, x, image: v, other: taken });
        }
    }
    for &(x, v) in &inst.phi0 {
        if x < phi.len() && phi[x] != v {
            out.extends_phi0 = false;
            push(&mut out, Failure::Phi0 { x, expected: v, found: phi[x] });
        }
    }
    let mut images = Vec::with_capacity(h.edge_count());
    for &(x, y) in h.edges() {
        let (u, v) = (phi[x], phi[y]);
        if g.has_edge(u, v) {
            images.push(edge_key(u, v));
        } else {
            out.edges = false;
            push(&mut out, Failure::NonEdge { x, y, images: (u, v) });
        }
    }
    if let Some((first, second, colour)) = inst.colouring.rainbow_clash(&images) {
        out.rainbow = false;
        push(&mut out, Failure::Rainbow { first, second, colour });
    }
    for j in 1..inst.candidacy.len() {
        let a = &inst.candidacy[j];
        for (l, &x) in a.left_labels().iter().enumerate() {
            let ok = a.right_labels().iter().position(|&w| w == phi[x]).is_some_and(|r| a.has(l, r));
            if !ok {
                out.candidacy = false;
                push(&mut out, Failure::Candidacy { x, image: phi[x] });
            }
        }
    }
    out
}

/// `phi` as a total map from `(x, v)` pairs; `None` if some vertex is missing or repeated.
pub fn phi_from_pairs(n: usize, pairs: &[(usize, usize)]) -> Option<Vec<usize>> {
    let mut phi = vec![usize::MAX; n];
    for &(x, v) in pairs {
        if x >= n || phi[x] != usize::MAX {
            return None;
        }
        phi[x] = v;
    }
    phi.iter().all(|&v| v != usize::MAX).then_some(phi)
}
