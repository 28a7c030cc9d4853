//! Partial resampling over independent discrete variables.
//!
//! Each variable `i` takes value `j` with probability `p[i][j]`. A bad event
//! comes with a fractional hitting set `Q`: weights on atomic events (sets of
//! variable/value pairs, at most one value per variable) such that every
//! assignment in the event contains atomic events of total weight at least 1.
//! While a bad event holds, an atomic event `Y` inside the current assignment
//! is chosen with probability proportional to `Q(Y)` and only the variables of
//! `Y` are redrawn.

use rand::Rng;

use crate::error::{Error, Result};
use crate::seed::{self, Rng as SeededRng};

/// A set of `(variable, value)` pairs with at most one value per variable.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AtomicEvent(Vec<(usize, usize)>);

impl AtomicEvent {
    pub fn new(mut elements: Vec<(usize, usize)>) -> Result<Self> {
        elements.sort_unstable();
        elements.dedup();
        if elements.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::invalid("atomic event gives a variable two values"));
        }
        Ok(AtomicEvent(elements))
    }

    pub fn elements(&self) -> &[(usize, usize)] {
        &self.0
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Whether `assignment` agrees with every element.
    pub fn holds(&self, assignment: &[usize]) -> bool {
        self.0.iter().all(|&(i, j)| assignment[i] == j)
    }

    pub fn touches(&self, var: usize) -> bool {
        self.0.iter().any(|&(i, _)| i == var)
    }

    /// `λ^Y`, the product of `λ` over the elements.
    pub fn weight(&self, lambda: &[Vec<f64>]) -> f64 {
        self.0.iter().map(|&(i, j)| lambda[i][j]).product()
    }
}

/// Weights on atomic events. `within` lists the support inside an assignment.
pub trait FractionalHittingSet: Sync {
    fn support(&self) -> Vec<(AtomicEvent, f64)>;

    fn within(&self, assignment: &[usize]) -> Vec<(AtomicEvent, f64)> {
        self.support()
            .into_iter()
            .filter(|(y, _)| y.holds(assignment))
            .collect()
    }
}

/// A hitting set given by an explicit list.
#[derive(Clone, Debug, Default)]
pub struct ExplicitHittingSet(pub Vec<(AtomicEvent, f64)>);

impl FractionalHittingSet for ExplicitHittingSet {
    fn support(&self) -> Vec<(AtomicEvent, f64)> {
        self.0.clone()
    }
}

/// Check `Q(∅) = 0` and `Σ_{Y ⊆ B} Q(Y) >= 1` for each listed bad assignment.
pub fn check_hitting_set(q: &dyn FractionalHittingSet, bad: &[Vec<usize>]) -> Result<()> {
    let support = q.support();
    if support.iter().any(|(y, w)| y.is_empty() && *w != 0.0) {
        return Err(Error::invalid("hitting set puts weight on the empty event"));
    }
    for b in bad {
        let total: f64 = support.iter().filter(|(y, _)| y.holds(b)).map(|(_, w)| w).sum();
        if total < 1.0 - 1e-9 {
            return Err(Error::invalid(format!(
                "assignment {b:?} is hit with total weight {total} < 1"
            )));
        }
    }
    Ok(())
}

/// `Γ(Q, λ) = Σ_Y Q(Y) λ^Y`, or only over `Y` touching `var` when given.
pub fn gamma(q: &dyn FractionalHittingSet, lambda: &[Vec<f64>], var: Option<usize>) -> f64 {
    q.support()
        .iter()
        .filter(|(y, _)| var.is_none_or(|i| y.touches(i)))
        .map(|(y, w)| w * y.weight(lambda))
        .sum()
}

pub trait BadEvent: Sync {
    fn holds(&self, assignment: &[usize]) -> bool;
    fn hitting_set(&self) -> &dyn FractionalHittingSet;
}

/// Independent variables with value distributions `p[i]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Variables {
    pub p: Vec<Vec<f64>>,
}

impl Variables {
    pub fn uniform(count: usize, values: usize) -> Self {
        Variables {
            p: vec![vec![1.0 / values as f64; values]; count],
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (i, dist) in self.p.iter().enumerate() {
            let total: f64 = dist.iter().sum();
            if dist.is_empty() || dist.iter().any(|&x| x < 0.0) || (total - 1.0).abs() > 1e-9 {
                return Err(Error::invalid(format!("variable {i} has no valid distribution")));
            }
        }
        Ok(())
    }

    pub fn draw(&self, i: usize, rng: &mut SeededRng) -> usize {
        let x: f64 = rng.random();
        let mut acc = 0.0;
        for (j, &p) in self.p[i].iter().enumerate() {
            acc += p;
            if x < acc {
                return j;
            }
        }
        self.p[i].len() - 1
    }

    pub fn draw_all(&self, rng: &mut SeededRng) -> Vec<usize> {
        (0..self.p.len()).map(|i| self.draw(i, rng)).collect()
    }

    /// `λ_ij = (1 + κ) p_ij`.
    pub fn inflated(&self, kappa: f64) -> Vec<Vec<f64>> {
        self.p
            .iter()
            .map(|d| d.iter().map(|&p| (1.0 + kappa) * p).collect())
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PraOutcome {
    pub assignment: Vec<usize>,
    pub resamples: usize,
}

/// Run the resampling loop until no event holds. Events are scanned in the
/// given order and the first true one is addressed.
pub fn pra_run(
    vars: &Variables,
    events: &[&dyn BadEvent],
    seed: u64,
    max_resamples: usize,
) -> Result<PraOutcome> {
    vars.validate()?;
    let mut rng = seed::rng(seed, "pra", 0);
    let mut assignment = vars.draw_all(&mut rng);
    let mut resamples = 0;
    loop {
        let hit = (0..events.len()).find(|&k| events[k].holds(&assignment));
        let Some(k) = hit else {
            return Ok(PraOutcome {
                assignment,
                resamples,
            });
        };
        if resamples == max_resamples {
            return Err(Error::budget(
                "pra_run",
                max_resamples,
                format!("event {k} still holds"),
            ));
        }
        let inside = events[k].hitting_set().within(&assignment);
        let total: f64 = inside.iter().map(|(_, w)| w).sum();
        if total <= 0.0 {
            return Err(Error::Invariant(format!(
                "event {k} holds but its hitting set has no weight inside the assignment"
            )));
        }
        let mut x = rng.random::<f64>() * total;
        let mut chosen = &inside[inside.len() - 1].0;
        for (y, w) in &inside {
            if x < *w {
                chosen = y;
                break;
            }
            x -= w;
        }
        for &(i, _) in chosen.elements() {
            assignment[i] = vars.draw(i, &mut rng);
        }
        resamples += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// "All of the first three variables equal 0", hit by the full assignment.
    struct AllZero {
        q: ExplicitHittingSet,
    }

    impl BadEvent for AllZero {
        fn holds(&self, a: &[usize]) -> bool {
            a[..3].iter().all(|&x| x == 0)
        }
        fn hitting_set(&self) -> &dyn FractionalHittingSet {
            &self.q
        }
    }

    #[test]
    fn atomic_events_reject_conflicts() {
        assert!(AtomicEvent::new(vec![(0, 1), (0, 2)]).is_err());
        let y = AtomicEvent::new(vec![(2, 1), (0, 0)]).unwrap();
        assert_eq!(y.elements(), &[(0, 0), (2, 1)]);
        assert!(y.holds(&[0, 5, 1]));
        assert!(y.touches(2) && !y.touches(1));
    }

    #[test]
    fn gamma_sums_weighted_products() {
        let q = ExplicitHittingSet(vec![
            (AtomicEvent::new(vec![(0, 0)]).unwrap(), 0.5),
            (AtomicEvent::new(vec![(1, 1)]).unwrap(), 2.0),
        ]);
        let lambda = vec![vec![0.25, 0.75], vec![0.5, 0.5]];
        assert!((gamma(&q, &lambda, None) - (0.125 + 1.0)).abs() < 1e-12);
        assert!((gamma(&q, &lambda, Some(1)) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn hitting_set_validation() {
        let y = AtomicEvent::new(vec![(0, 0), (1, 0), (2, 0)]).unwrap();
        let q = ExplicitHittingSet(vec![(y.clone(), 1.0)]);
        assert!(check_hitting_set(&q, &[vec![0, 0, 0, 1]]).is_ok());
        let half = ExplicitHittingSet(vec![(y, 0.5)]);
        assert!(check_hitting_set(&half, &[vec![0, 0, 0, 1]]).is_err());
        let empty = ExplicitHittingSet(vec![(AtomicEvent::new(vec![]).unwrap(), 1.0)]);
        assert!(check_hitting_set(&empty, &[]).is_err());
    }

    #[test]
    fn resampling_escapes_a_single_event() {
        let y = AtomicEvent::new(vec![(0, 0), (1, 0), (2, 0)]).unwrap();
        let ev = AllZero {
            q: ExplicitHittingSet(vec![(y, 1.0)]),
        };
        let vars = Variables {
            p: vec![vec![0.9, 0.1]; 4],
        };
        for s in 0..20 {
            let out = pra_run(&vars, &[&ev], s, 10_000).unwrap();
            assert!(!ev.holds(&out.assignment));
        }
        let stuck = Variables {
            p: vec![vec![1.0, 0.0]; 4],
        };
        assert!(matches!(
            pra_run(&stuck, &[&ev], 0, 5),
            Err(Error::Budget { .. })
        ));
    }
}
