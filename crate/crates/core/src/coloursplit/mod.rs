//! Random colour splitting: simplex counting, partial resampling, degree-window
//! splits, dummy padding and regularity-preserving colour separation.

mod degree;
pub mod pra;
mod separate;

pub use degree::{
    degree_split, pad_to_uniform, DegreeHittingSet, DegreeSplit, DegreeSplitConfig, Padded,
    SplitStrategy,
};
pub use separate::{separate_colours, sliced_regularity_check, SeparateConfig, SeparatedColours, SliceCheck};


use crate::error::{Error, Result};
use crate::seed::Rng as SeededRng;

/// All `s ∈ ℕ^t` with `Σ s_j = delta`, in lexicographic order.
pub fn simplex(t: usize, delta: usize) -> Vec<Vec<usize>> {
    fn rec(t: usize, left: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() + 1 == t {
            cur.push(left);
            out.push(cur.clone());
            cur.pop();
            return;
        }
        for x in 0..=left {
            cur.push(x);
            rec(t, left - x, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if t > 0 {
        rec(t, delta, &mut Vec::new(), &mut out);
    }
    out
}

/// `delta! / (s_1! ⋯ s_t!)`, with `Σ s = delta` assumed.
pub fn multinomial(delta: usize, s: &[usize]) -> u128 {
    let mut acc: u128 = 1;
    let mut remaining = delta as u128;
    for &x in s {
        for i in 0..x as u128 {
            acc = acc * (remaining - i) / (i + 1);
        }
        remaining -= x as u128;
    }
    acc
}

/// Class (in `0..t`) of each of `universe` colours, drawn independently with
/// probabilities `probs` (uniform when `None`).
pub fn random_colour_partition(
    universe: usize,
    t: usize,
    probs: Option<&[f64]>,
    rng: &mut SeededRng,
) -> Result<Vec<usize>> {
    if t == 0 {
        return Err(Error::invalid("need at least one class"));
    }
    let uniform = vec![1.0 / t as f64; t];
    let p = probs.unwrap_or(&uniform);
    if p.len() != t || p.iter().any(|&x| x < 0.0) || (p.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(Error::invalid("class probabilities must be t non-negative numbers summing to 1"));
    }
    let vars = pra::Variables {
        p: vec![p.to_vec(); universe],
    };
    Ok((0..universe).map(|i| vars.draw(i, rng)).collect())
}

/// Colour lists of each class.
pub fn classes_of(class_of: &[usize], t: usize) -> Vec<Vec<usize>> {
    let mut classes = vec![Vec::new(); t];
    for (c, &l) in class_of.iter().enumerate() {
        classes[l].push(c);
    }
    classes
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simplex_sizes_and_order() {
        assert_eq!(simplex(2, 2), vec![vec![0, 2], vec![1, 1], vec![2, 0]]);
        assert_eq!(simplex(3, 2).len(), 6);
        assert_eq!(simplex(1, 4), vec![vec![4]]);
    }

    #[test]
    fn multinomial_identity() {
        for t in 1..=6usize {
            for delta in 1..=6usize {
                let total: u128 = simplex(t, delta).iter().map(|s| multinomial(delta, s)).sum();
                assert_eq!(total, (t as u128).pow(delta as u32));
            }
        }
        assert_eq!(multinomial(4, &[2, 1, 1]), 12);
    }

    #[test]
    fn partition_respects_probabilities() {
        let mut rng = crate::seed::rng(3, "t", 0);
        let classes = random_colour_partition(10_000, 2, Some(&[0.25, 0.75]), &mut rng).unwrap();
        let ones = classes.iter().filter(|&&c| c == 1).count();
        assert!((ones as f64 / 10_000.0 - 0.75).abs() < 0.03);
        assert!(random_colour_partition(5, 2, Some(&[0.5, 0.6]), &mut rng).is_err());
    }
}
