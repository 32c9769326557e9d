use super::Dataset;
use crate::error::{Error, Result};
use crate::rng::SplitMix64;

/// Random record-level split. The test side takes the first
/// `round(test_fraction * N)` entries of a SplitMix64 Fisher–Yates
/// permutation; both sides keep the original record order.
pub fn split_random(dataset: &Dataset, test_fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::invalid(format!("test_fraction must be in (0, 1), got {test_fraction}")));
    }
    let n = dataset.len();
    if n < 2 {
        return Err(Error::invalid(format!("need at least 2 records to split, got {n}")));
    }
    let (train, test) = random_partition(n, test_fraction, seed);
    Ok((dataset.subset(&train), dataset.subset(&test)))
}

/// Index-level form of [`split_random`]: `(train, test)`, both ascending.
pub(crate) fn random_partition(n: usize, test_fraction: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let n_test = (test_fraction * n as f64).round() as usize;
    let perm = SplitMix64::new(seed).permutation(n);
    let mut test: Vec<usize> = perm[..n_test].to_vec();
    let mut train: Vec<usize> = perm[n_test..].to_vec();
    test.sort_unstable();
    train.sort_unstable();
    (train, test)
}

/// Holds out every record of the named series.
pub fn split_by_series(dataset: &Dataset, held_out: &[u32]) -> Result<(Dataset, Dataset)> {
    let known = dataset.series_ids();
    if let Some(&bad) = held_out.iter().find(|id| !known.contains(id)) {
        return Err(Error::UnknownSeries(bad));
    }
    let (test, train): (Vec<usize>, Vec<usize>) =
        (0..dataset.len()).partition(|&i| held_out.contains(&dataset.records()[i].series_id));
    Ok((dataset.subset(&train), dataset.subset(&test)))
}

/// `k` disjoint folds covering `0..n`. Positions of a seeded permutation are
/// dealt out in contiguous blocks, the first `n % k` folds one larger.
pub fn kfold_indices(n: usize, k: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if k < 2 {
        return Err(Error::invalid(format!("k must be at least 2, got {k}")));
    }
    if n < k {
        return Err(Error::invalid(format!("n = {n} is smaller than k = {k}")));
    }
    let perm = SplitMix64::new(seed).permutation(n);
    let base = n / k;
    let extra = n % k;
    let mut folds = Vec::with_capacity(k);
    let mut start = 0;
    for j in 0..k {
        let size = base + usize::from(j < extra);
        let mut fold = perm[start..start + size].to_vec();
        fold.sort_unstable();
        folds.push(fold);
        start += size;
    }
    Ok(folds)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::testutil::toy_dataset;
    use proptest::prelude::*;

    #[test]
    fn paper_ratio_sizes() {
        let d = toy_dataset(4, 25, 4);
        let (train, test) = split_random(&d, 0.15, 1).unwrap();
        assert_eq!((train.len(), test.len()), (85, 15));
    }

    #[test]
    fn two_records_half() {
        let d = toy_dataset(1, 2, 4);
        let (train, test) = split_random(&d, 0.5, 9).unwrap();
        assert_eq!((train.len(), test.len()), (1, 1));
    }

    #[test]
    fn too_small_or_bad_fraction() {
        let d = toy_dataset(1, 1, 4);
        assert!(split_random(&d, 0.5, 0).is_err());
        let d = toy_dataset(1, 4, 4);
        assert!(split_random(&d, 0.0, 0).is_err());
        assert!(split_random(&d, 1.0, 0).is_err());
    }

    #[test]
    fn same_seed_same_split() {
        let d = toy_dataset(3, 10, 4);
        let a = split_random(&d, 0.3, 77).unwrap();
        let b = split_random(&d, 0.3, 77).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn frozen_partition_for_seed_42() {
        // Computed with an independent implementation of the documented generator.
        let (train, test) = random_partition(10, 0.3, 42);
        assert_eq!(test, vec![3, 6, 8]);
        assert_eq!(train, vec![0, 1, 2, 4, 5, 7, 9]);
    }

    #[test]
    fn series_holdout() {
        let d = toy_dataset(39, 3, 4);
        let (train, test) = split_by_series(&d, &[5, 17]).unwrap();
        assert_eq!(test.len(), 6);
        assert!(test.records().iter().all(|r| r.series_id == 5 || r.series_id == 17));
        assert_eq!(train.len(), 37 * 3);

        let (train, test) = split_by_series(&d, &[]).unwrap();
        assert!(test.is_empty());
        assert_eq!(train.len(), d.len());

        let all: Vec<u32> = (0..39).collect();
        let (train, test) = split_by_series(&d, &all).unwrap();
        assert!(train.is_empty());
        assert_eq!(test.len(), d.len());

        assert!(matches!(split_by_series(&d, &[99]), Err(Error::UnknownSeries(99))));
    }

    #[test]
    fn kfold_sizes() {
        let folds = kfold_indices(10, 5, 0).unwrap();
        assert!(folds.iter().all(|f| f.len() == 2));
        let mut sizes: Vec<usize> = kfold_indices(11, 5, 0).unwrap().iter().map(Vec::len).collect();
        sizes.sort_unstable();
        assert_eq!(sizes, vec![2, 2, 2, 2, 3]);
        assert!(kfold_indices(3, 5, 0).is_err());
        assert!(kfold_indices(3, 1, 0).is_err());
    }

    proptest! {
        #[test]
        fn folds_partition(n in 2usize..200, k in 2usize..10, seed: u64) {
            prop_assume!(n >= k);
            let folds = kfold_indices(n, k, seed).unwrap();
            let mut all: Vec<usize> = folds.concat();
            all.sort_unstable();
            prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
            let max = folds.iter().map(Vec::len).max().unwrap();
            let min = folds.iter().map(Vec::len).min().unwrap();
            prop_assert!(max - min <= 1);
        }

        #[test]
        fn random_split_partitions(n in 2usize..300, frac in 0.01f64..0.99, seed: u64) {
            let (train, test) = random_partition(n, frac, seed);
            prop_assert_eq!(test.len(), (frac * n as f64).round() as usize);
            let mut all = [train, test].concat();
            all.sort_unstable();
            prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
        }

        #[test]
        fn series_never_straddle(held in proptest::collection::vec(0u32..6, 0..4)) {
            let d = toy_dataset(6, 4, 4);
            let (train, test) = split_by_series(&d, &held).unwrap();
            for r in train.records() {
                prop_assert!(!test.records().iter().any(|t| t.series_id == r.series_id));
            }
        }
    }
}
