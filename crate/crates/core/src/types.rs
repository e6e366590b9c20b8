//! Method-of-types helpers: empirical distributions, type enumeration and
//! type-class sampling.

use rand::Rng;

use crate::channel::Dist;
use crate::error::{AvcError, Result};
use crate::scalar::Scalar;

/// Empirical distribution `Q(a) = |{i : seq_i = a}| / n`.
pub fn empirical_type<T: Scalar>(seq: &[usize], alphabet_size: usize) -> Result<Dist<T>> {
    if seq.is_empty() {
        return Err(AvcError::EmptySequence);
    }
    Dist::from_counts(&counts_of(seq, alphabet_size)?)
}

/// Symbol counts of `seq`.
pub fn counts_of(seq: &[usize], alphabet_size: usize) -> Result<Vec<usize>> {
    let mut counts = vec![0usize; alphabet_size];
    for &a in seq {
        if a >= alphabet_size {
            return Err(AvcError::SymbolOutOfRange {
                symbol: a,
                size: alphabet_size,
            });
        }
        counts[a] += 1;
    }
    Ok(counts)
}

/// All count vectors of length `k` summing to `n`, in lexicographic order
/// (first coordinate largest first).
pub fn compositions(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if k == 0 {
        return out;
    }
    let mut cur = vec![0usize; k];
    fn rec(pos: usize, left: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if pos + 1 == cur.len() {
            cur[pos] = left;
            out.push(cur.clone());
            return;
        }
        for c in (0..=left).rev() {
            cur[pos] = c;
            rec(pos + 1, left - c, cur, out);
        }
    }
    rec(0, n, &mut cur, &mut out);
    out
}

/// The set of `n`-types over an alphabet of size `k`; there are
/// `binomial(n+k-1, k-1)` of them.
pub fn enumerate_types<T: Scalar>(n: usize, alphabet_size: usize) -> Result<Vec<Dist<T>>> {
    if n == 0 {
        return Err(AvcError::ZeroBlocklength);
    }
    if alphabet_size == 0 {
        return Err(AvcError::InvalidArgument("empty alphabet".into()));
    }
    compositions(n, alphabet_size)
        .iter()
        .map(|c| Dist::from_counts(c))
        .collect()
}

/// `binomial(n, k)` as `f64`.
pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Size of the type class with the given counts (multinomial coefficient).
pub fn type_class_size(counts: &[usize]) -> f64 {
    let mut left: usize = counts.iter().sum();
    let mut size = 1.0;
    for &c in counts {
        size *= binomial(left, c);
        left -= c;
    }
    size.round()
}

/// The canonical member of a type class: symbols in increasing order.
pub fn canonical_sequence(counts: &[usize]) -> Vec<usize> {
    counts
        .iter()
        .enumerate()
        .flat_map(|(a, &c)| std::iter::repeat(a).take(c))
        .collect()
}

/// Uniform draw from the type class with the given counts.
pub fn sample_type_class<R: Rng + ?Sized>(counts: &[usize], rng: &mut R) -> Vec<usize> {
    let mut seq = canonical_sequence(counts);
    // Fisher-Yates
    for i in (1..seq.len()).rev() {
        let j = rng.gen_range(0..=i);
        seq.swap(i, j);
    }
    seq
}

/// Every member of the type class, in lexicographic order.
pub fn type_class_members(counts: &[usize]) -> Vec<Vec<usize>> {
    let n: usize = counts.iter().sum();
    let mut out = Vec::new();
    let mut left = counts.to_vec();
    let mut cur = Vec::with_capacity(n);
    fn rec(left: &mut [usize], cur: &mut Vec<usize>, n: usize, out: &mut Vec<Vec<usize>>) {
        if cur.len() == n {
            out.push(cur.clone());
            return;
        }
        for a in 0..left.len() {
            if left[a] > 0 {
                left[a] -= 1;
                cur.push(a);
                rec(left, cur, n, out);
                cur.pop();
                left[a] += 1;
            }
        }
    }
    rec(&mut left, &mut cur, n, &mut out);
    out
}

/// All length-`n` sequences over `0..k` whose total cost is at most `n·budget`,
/// or an error when there would be more than `limit` of them.
pub fn feasible_sequences(
    n: usize,
    costs: &[f64],
    budget: f64,
    limit: u128,
) -> Result<Vec<Vec<usize>>> {
    let k = costs.len();
    // Count feasible sequences per type before materializing any.
    let mut needed: u128 = 0;
    let mut feasible_types = Vec::new();
    for c in compositions(n, k) {
        let total: f64 = c.iter().zip(costs).map(|(&m, &l)| m as f64 * l).sum();
        if total <= n as f64 * budget {
            needed += type_class_size(&c) as u128;
            feasible_types.push(c);
        }
    }
    if needed > limit {
        return Err(AvcError::GuardExceeded {
            what: "feasible state sequences".into(),
            needed,
            limit,
        });
    }
    let mut out: Vec<Vec<usize>> = feasible_types
        .iter()
        .flat_map(|c| type_class_members(c))
        .collect();
    out.sort();
    Ok(out)
}

/// Joint type of several equal-length sequences as a flat count vector indexed
/// row-major by `sizes`.
pub fn joint_counts(seqs: &[&[usize]], sizes: &[usize]) -> Vec<u32> {
    let total: usize = sizes.iter().product();
    let mut counts = vec![0u32; total];
    let n = seqs.first().map_or(0, |s| s.len());
    for i in 0..n {
        let mut idx = 0;
        for (seq, &size) in seqs.iter().zip(sizes) {
            idx = idx * size + seq[i];
        }
        counts[idx] += 1;
    }
    counts
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn empirical_types() {
        let q: Dist = empirical_type(&[0, 1, 1, 0], 2).unwrap();
        assert_eq!(q.probs(), &[0.5, 0.5]);
        let q: Dist = empirical_type(&[2, 2, 2], 3).unwrap();
        assert_eq!(q.probs(), &[0.0, 0.0, 1.0]);
        let q: Dist = empirical_type(&[0, 0, 1], 2).unwrap();
        assert!((q.probs()[0] - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(empirical_type::<f64>(&[], 2), Err(AvcError::EmptySequence));
    }

    #[test]
    fn type_counts() {
        let t: Vec<Dist> = enumerate_types(2, 2).unwrap();
        assert_eq!(t.len(), 3);
        assert!(t.iter().any(|d| d.probs() == [0.5, 0.5]));
        assert_eq!(enumerate_types::<f64>(4, 2).unwrap().len(), 5);
        assert_eq!(enumerate_types::<f64>(3, 3).unwrap().len(), 10);
        assert_eq!(enumerate_types::<f64>(0, 3), Err(AvcError::ZeroBlocklength));
    }

    #[test]
    fn type_class_sizes() {
        assert_eq!(type_class_size(&[2, 2]), 6.0);
        assert_eq!(type_class_size(&[4, 4]), 70.0);
        assert_eq!(type_class_members(&[2, 2]).len(), 6);
        assert_eq!(type_class_members(&[1, 1, 1]).len(), 6);
    }

    #[test]
    fn feasible_sequence_count() {
        let seqs = feasible_sequences(8, &[0.0, 1.0], 0.125, 1_000_000).unwrap();
        assert_eq!(seqs.len(), 9);
        assert!(feasible_sequences(30, &[0.0, 1.0], 0.5, 1000).is_err());
    }

    #[test]
    fn sampled_members_stay_in_class() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let s = sample_type_class(&[2, 2], &mut rng);
            assert_eq!(s.iter().filter(|&&a| a == 1).count(), 2);
        }
    }

    proptest! {
        #[test]
        fn types_are_multiples_of_one_over_n(n in 1usize..8, k in 1usize..4) {
            let types: Vec<Dist> = enumerate_types(n, k).unwrap();
            let expected = binomial(n + k - 1, k - 1) as usize;
            prop_assert_eq!(types.len(), expected);
            for t in &types {
                prop_assert!(t.as_type(n).is_some());
            }
        }

        #[test]
        fn concatenation_mixes_types(
            a in proptest::collection::vec(0usize..3, 1..12),
            b in proptest::collection::vec(0usize..3, 1..12),
        ) {
            let qa: Dist = empirical_type(&a, 3).unwrap();
            let qb: Dist = empirical_type(&b, 3).unwrap();
            let joined: Vec<usize> = a.iter().chain(&b).copied().collect();
            let qj: Dist = empirical_type(&joined, 3).unwrap();
            let w = b.len() as f64 / joined.len() as f64;
            let mixed = qa.mix(&qb, w).unwrap();
            prop_assert!(mixed.linf_distance(&qj) < 1e-12);
        }
    }
}
