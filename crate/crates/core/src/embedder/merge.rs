use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::feasibility::{check_feasible, colour_loads};
use super::instance::BlowUpInstance;
use crate::error::{Error, Result};
use crate::graph::{edge_key, EdgeSetColouring};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MergeStats {
    pub before: usize,
    pub after: usize,
    pub critical: usize,
    pub blocking_pairs: usize,
    /// `7μ^{-1}Δ²n`, the size the palette is expected to fall under.
    pub target: f64,
}

#[derive(Clone, Debug)]
pub struct Merged {
    pub colouring: EdgeSetColouring,
    /// New colour of each old colour. Unused old colours map to colour 0; on
    /// colours that occur the map is injective except where merges happened.
    pub translation: Vec<usize>,
    pub stats: MergeStats,
}

/// Unordered colour pairs that meet at a candidate `v` of a common neighbour
/// of two exceptional vertices.
pub fn blocking_pairs(inst: &BlowUpInstance) -> HashSet<(usize, usize)> {
    let (h, c) = (&inst.h, &inst.colouring);
    let phi = inst.phi0_map();
    let mut out = HashSet::new();
    for y in 0..h.n() {
        let j = h.part_of(y);
        if j == 0 {
            continue;
        }
        let exc: Vec<usize> = h.neighbours(y).iter().copied().filter(|&x| h.part_of(x) == 0).collect();
        if exc.len() < 2 {
            continue;
        }
        let a = &inst.candidacy[j];
        let Some(l) = a.left_labels().iter().position(|&z| z == y) else {
            continue;
        };
        for r in a.row(l).ones() {
            let v = a.right_labels()[r];
            for (k, &x) in exc.iter().enumerate() {
                for &x1 in &exc[k + 1..] {
                    let (Some(p), Some(q)) = (phi[x], phi[x1]) else { continue };
                    for &al in c.get(p, v) {
                        for &be in c.get(q, v) {
                            if al != be {
                                out.insert(edge_key(al, be));
                            }
                        }
                    }
                }
            }
        }
    }
    out
}

struct Group {
    members: Vec<usize>,
    count: usize,
    load: usize,
}

/// Merge pairs of rare colours while keeping the colouring `(μn, Δ)`-bounded
/// and `φ0` `μn`-feasible. Critical colours (load at least `μn/2`) are never
/// merged, nor are colours that block each other. First-fit over colours in
/// increasing count, then pairwise passes over the groups until nothing changes.
pub fn merge_rare_colours(inst: &BlowUpInstance, mu: f64) -> Result<Merged> {
    let g = &inst.g;
    let c = &inst.colouring;
    let n = inst.n();
    let cap = mu * n as f64;
    let counts = c.colour_counts(g);
    let loads = colour_loads(inst);
    let blocks = blocking_pairs(inst);
    let half = cap / 2.0;
    let is_critical = |l: usize| l as f64 >= half - 1e-9;
    let critical = loads.iter().filter(|&&l| is_critical(l) && l > 0).count();

    let mut order: Vec<usize> = (0..c.universe()).filter(|&a| counts[a] > 0).collect();
    order.sort_by_key(|&a| (counts[a], a));
    let mut groups: Vec<Group> = Vec::new();
    let mut frozen: Vec<Group> = Vec::new();
    let blocked = |members: &[usize], a: usize| members.iter().any(|&b| blocks.contains(&edge_key(a, b)));
    for &a in &order {
        let single = Group {
            members: vec![a],
            count: counts[a],
            load: loads[a],
        };
        if is_critical(loads[a]) || counts[a] as f64 > cap {
            frozen.push(single);
            continue;
        }
        let slot = groups.iter().position(|gr| {
            !is_critical(gr.load) && (gr.count + counts[a]) as f64 <= cap + 1e-9 && !blocked(&gr.members, a)
        });
        match slot {
            Some(k) => {
                let gr = &mut groups[k];
                gr.members.push(a);
                gr.count += counts[a];
                gr.load += loads[a];
            }
            None => groups.push(single),
        }
    }
    loop {
        let mut changed = false;
        let mut k = 0;
        while k < groups.len() {
            let mut m = k + 1;
            while m < groups.len() {
                let (a, b) = (&groups[k], &groups[m]);
                let ok = !is_critical(a.load)
                    && !is_critical(b.load)
                    && (a.count + b.count) as f64 <= cap + 1e-9
                    && !b.members.iter().any(|&x| blocked(&a.members, x));
                if ok {
                    let b = groups.remove(m);
                    let a = &mut groups[k];
                    a.members.extend(b.members);
                    a.count += b.count;
                    a.load += b.load;
                    changed = true;
                } else {
                    m += 1;
                }
            }
            k += 1;
        }
        if !changed {
            break;
        }
    }
    groups.extend(frozen);
    groups.sort_by_key(|gr| *gr.members.iter().min().expect("non-empty group"));
    let mut translation = vec![0; c.universe()];
    for (id, gr) in groups.iter().enumerate() {
        for &a in &gr.members {
            translation[a] = id;
        }
    }
    let colouring = c.remapped(&translation, groups.len());
    let delta = inst.params.delta.max(1) as f64;
    let stats = MergeStats {
        before: order.len(),
        after: groups.len(),
        critical,
        blocking_pairs: blocks.len(),
        target: 7.0 / mu * delta * delta * n as f64,
    };
    let merged = BlowUpInstance {
        colouring: colouring.clone(),
        ..inst.clone()
    };
    let (k, _) = colouring.boundedness(g);
    if k as f64 > cap.max(c.boundedness(g).0 as f64) + 1e-9 {
        return Err(Error::Invariant(format!("merged colouring is {k}-bounded, above {cap:.1}")));
    }
    let before = check_feasible(inst, f64::INFINITY)?;
    let after = check_feasible(&merged, cap.max(before.load.load as f64))?;
    if !after.load.passed || (before.colour_clash.is_none() && after.colour_clash.is_some()) {
        return Err(Error::Invariant(format!("merging broke feasibility: {after:?}")));
    }
    Ok(Merged {
        colouring,
        translation,
        stats,
    })
}
