use serde::{Deserialize, Serialize};

use super::instance::BlowUpInstance;
use crate::error::{Error, Result};

/// A target neighbour `y` of exceptional `x` with a candidate `v` outside `N_G(φ0(x))`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NeighbourhoodWitness {
    pub x: usize,
    pub y: usize,
    pub v: usize,
}

/// Exceptional neighbours `x0, x1` of `y` whose edges to candidate `v` share `colour`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClashWitness {
    pub x0: usize,
    pub x1: usize,
    pub y: usize,
    pub v: usize,
    pub colour: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DegreeLoad {
    /// Colour with the largest weighted load, if any colour has load.
    pub colour: Option<usize>,
    pub load: usize,
    pub bound: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Feasibility {
    pub neighbourhoods: Option<NeighbourhoodWitness>,
    pub colour_clash: Option<ClashWitness>,
    pub load: DegreeLoad,
}

impl Feasibility {
    pub fn feasible(&self) -> bool {
        self.neighbourhoods.is_none() && self.colour_clash.is_none() && self.load.passed
    }
}

/// `Σ_{x∈X_0} d^α_G(φ0(x))·d_H(x)` for every colour `α`.
pub fn colour_loads(inst: &BlowUpInstance) -> Vec<usize> {
    let mut load = vec![0; inst.colouring.universe()];
    for &(x, v) in &inst.phi0 {
        let dh = inst.h.degree(x);
        if dh == 0 {
            continue;
        }
        for &w in inst.g.neighbours(v) {
            for &a in inst.colouring.get(v, w) {
                load[a] += dh;
            }
        }
    }
    load
}

fn check_bijection(inst: &BlowUpInstance) -> Result<()> {
    let (x0, v0) = (inst.x(0), inst.v(0));
    if inst.phi0.len() != x0.len() || x0.len() != v0.len() {
        return Err(Error::invalid("φ0 is not a bijection between the exceptional sets"));
    }
    let mut seen_v = vec![false; inst.g.n()];
    let mut seen_x = vec![false; inst.h.n()];
    for &(x, v) in &inst.phi0 {
        if x >= inst.h.n() || v >= inst.g.n() || inst.h.part_of(x) != 0 || inst.g.part_of(v) != 0 {
            return Err(Error::invalid(format!("φ0 pair ({x},{v}) leaves the exceptional sets")));
        }
        if std::mem::replace(&mut seen_x[x], true) || std::mem::replace(&mut seen_v[v], true) {
            return Err(Error::invalid(format!("φ0 repeats a vertex at ({x},{v})")));
        }
    }
    Ok(())
}

/// Evaluate the three feasibility conditions of `φ0` exactly, with bound `d_bound`
/// on the colour loads.
pub fn check_feasible(inst: &BlowUpInstance, d_bound: f64) -> Result<Feasibility> {
    check_bijection(inst)?;
    let phi = inst.phi0_map();
    let (h, g, c) = (&inst.h, &inst.g, &inst.colouring);
    let mut neighbourhoods = None;
    let mut colour_clash = None;
    for y in 0..h.n() {
        let j = h.part_of(y);
        if j == 0 {
            continue;
        }
        let exc: Vec<usize> = h.neighbours(y).iter().copied().filter(|&x| h.part_of(x) == 0).collect();
        if exc.is_empty() {
            continue;
        }
        let a = &inst.candidacy[j];
        let Some(l) = a.left_labels().iter().position(|&z| z == y) else {
            continue;
        };
        for r in a.row(l).ones() {
            let v = a.right_labels()[r];
            for (k, &x) in exc.iter().enumerate() {
                let img = phi[x].expect("bijection checked");
                if neighbourhoods.is_none() && !g.has_edge(img, v) {
                    neighbourhoods = Some(NeighbourhoodWitness { x, y, v });
                }
                if colour_clash.is_some() {
                    continue;
                }
                for &x1 in &exc[k + 1..] {
                    let img1 = phi[x1].expect("bijection checked");
                    let s1 = c.get(img1, v);
                    if let Some(&colour) = c.get(img, v).iter().find(|a| s1.contains(a)) {
                        colour_clash = Some(ClashWitness { x0: x, x1, y, v, colour });
                        break;
                    }
                }
            }
        }
    }
    let loads = colour_loads(inst);
    let (colour, load) = loads
        .iter()
        .enumerate()
        .max_by_key(|&(a, &l)| (l, std::cmp::Reverse(a)))
        .map_or((None, 0), |(a, &l)| ((l > 0).then_some(a), l));
    Ok(Feasibility {
        neighbourhoods,
        colour_clash,
        load: DegreeLoad {
            colour,
            load,
            bound: d_bound,
            passed: load as f64 <= d_bound + 1e-9,
        },
    })
}
