use std::collections::{BTreeMap, HashMap};
use std::hash::Hash;

use super::{Result, StatsError};

fn pairs(n: u128) -> u128 {
    n * n.saturating_sub(1) / 2
}

/// Rand index between two labelings of the same items, given as aligned
/// slices. Counts agreeing pairs through the contingency table, in exact
/// integer arithmetic.
pub fn rand_index<A: Hash + Eq, B: Hash + Eq>(a: &[A], b: &[B]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(StatsError::MismatchedItems);
    }
    let n = a.len();
    if n < 2 {
        return Err(StatsError::TooFewItems(n));
    }
    let mut joint: HashMap<(&A, &B), u128> = HashMap::new();
    let mut rows: HashMap<&A, u128> = HashMap::new();
    let mut cols: HashMap<&B, u128> = HashMap::new();
    for (x, y) in a.iter().zip(b) {
        *joint.entry((x, y)).or_insert(0) += 1;
        *rows.entry(x).or_insert(0) += 1;
        *cols.entry(y).or_insert(0) += 1;
    }
    let total = pairs(n as u128);
    let together_both: u128 = joint.values().map(|&c| pairs(c)).sum();
    let together_a: u128 = rows.values().map(|&c| pairs(c)).sum();
    let together_b: u128 = cols.values().map(|&c| pairs(c)).sum();
    // pairs apart in both = total - together_a - together_b + together_both
    let agree = total + 2 * together_both - together_a - together_b;
    Ok(agree as f64 / total as f64)
}

/// Rand index between two item -> label maps over the same item set.
pub fn rand_index_by_item<K: Ord, A: Hash + Eq, B: Hash + Eq>(a: &BTreeMap<K, A>, b: &BTreeMap<K, B>) -> Result<f64> {
    if a.len() != b.len() || a.keys().zip(b.keys()).any(|(x, y)| x != y) {
        return Err(StatsError::MismatchedItems);
    }
    let la: Vec<&A> = a.values().collect();
    let lb: Vec<&B> = b.values().collect();
    rand_index(&la, &lb)
}

/// Pearson product-moment correlation.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(StatsError::LengthMismatch(x.len(), y.len()));
    }
    if x.len() < 2 {
        return Err(StatsError::TooFewItems(x.len()));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx <= 0.0 || syy <= 0.0 {
        return Err(StatsError::ZeroVariance);
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Direct pair enumeration.
    fn brute_rand(a: &[u8], b: &[u8]) -> f64 {
        let n = a.len();
        let mut agree = 0usize;
        let mut total = 0usize;
        for i in 0..n {
            for j in i + 1..n {
                total += 1;
                if (a[i] == a[j]) == (b[i] == b[j]) {
                    agree += 1;
                }
            }
        }
        agree as f64 / total as f64
    }

    #[test]
    fn rand_examples() {
        assert_eq!(rand_index(&[1, 1, 2, 2], &[1, 1, 2, 2]).unwrap(), 1.0);
        assert!((rand_index(&[1, 1, 2, 2], &[1, 2, 1, 2]).unwrap() - 2.0 / 6.0).abs() < 1e-15);
        assert_eq!(rand_index(&[1, 1, 2, 2], &["b", "b", "a", "a"]).unwrap(), 1.0);
        assert_eq!(rand_index(&[1], &[1]), Err(StatsError::TooFewItems(1)));
        assert_eq!(rand_index(&[1, 2], &[1]), Err(StatsError::MismatchedItems));
    }

    #[test]
    fn rand_by_item_needs_same_keys() {
        let a = BTreeMap::from([("x", 0), ("y", 1)]);
        let b = BTreeMap::from([("x", 0), ("z", 1)]);
        assert_eq!(rand_index_by_item(&a, &b), Err(StatsError::MismatchedItems));
        assert_eq!(rand_index_by_item(&a, &a).unwrap(), 1.0);
    }

    #[test]
    fn pearson_examples() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let lin: Vec<f64> = x.iter().map(|v| 2.0 * v + 1.0).collect();
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        assert!((pearson(&x, &lin).unwrap() - 1.0).abs() < 1e-15);
        assert!((pearson(&x, &neg).unwrap() + 1.0).abs() < 1e-15);
        // sxy = 4, sxx = syy = 5
        assert!((pearson(&x, &[1.0, 3.0, 2.0, 4.0]).unwrap() - 0.8).abs() < 1e-15);
        assert_eq!(pearson(&x, &[1.0; 4]), Err(StatsError::ZeroVariance));
        assert_eq!(pearson(&x, &[1.0]), Err(StatsError::LengthMismatch(4, 1)));
    }

    proptest! {
        #[test]
        fn rand_matches_pair_enumeration(
            labels in proptest::collection::vec((0u8..4, 0u8..4), 2..13)
        ) {
            let (a, b): (Vec<u8>, Vec<u8>) = labels.into_iter().unzip();
            let got = rand_index(&a, &b).unwrap();
            prop_assert!((got - brute_rand(&a, &b)).abs() <= 1e-12);
            prop_assert_eq!(got, rand_index(&b, &a).unwrap());
            let relabeled: Vec<u8> = a.iter().map(|l| 3 - l).collect();
            prop_assert_eq!(got, rand_index(&relabeled, &b).unwrap());
        }

        #[test]
        fn pearson_affine_invariance(
            xs in proptest::collection::vec((-100.0f64..100.0, -100.0f64..100.0), 3..30),
            scale in 0.1f64..10.0,
            shift in -50.0f64..50.0,
        ) {
            let (x, y): (Vec<f64>, Vec<f64>) = xs.into_iter().unzip();
            if let Ok(r) = pearson(&x, &y) {
                let tx: Vec<f64> = x.iter().map(|v| scale * v + shift).collect();
                let ny: Vec<f64> = y.iter().map(|v| -v).collect();
                prop_assert!((pearson(&tx, &y).unwrap() - r).abs() < 1e-9);
                prop_assert!((pearson(&x, &ny).unwrap() + r).abs() < 1e-9);
            }
        }
    }
}
