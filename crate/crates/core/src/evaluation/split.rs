use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::rng::{rng_from, streams};

/// Indices of each class, shuffled with the split stream of `seed`.
fn shuffled_classes(labels: &[u8], seed: u64) -> [Vec<usize>; 2] {
    let mut rng = rng_from(seed, streams::SPLIT);
    let mut classes = [Vec::new(), Vec::new()];
    for (i, &l) in labels.iter().enumerate() {
        classes[(l != 0) as usize].push(i);
    }
    for c in &mut classes {
        c.shuffle(&mut rng);
    }
    classes
}

/// Stratified k-fold assignment. Each class is shuffled, the classes are
/// concatenated and position `i` goes to fold `i mod k`, so fold sizes differ
/// by at most one and so do per-fold class counts.
pub fn stratified_folds(labels: &[u8], k: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if k < 2 {
        return Err(Error::invalid(format!("k must be at least 2, got {k}")));
    }
    if labels.len() < k {
        return Err(Error::invalid(format!(
            "{} samples cannot fill {k} folds",
            labels.len()
        )));
    }
    let [neg, pos] = shuffled_classes(labels, seed);
    if neg.len() < 2 || pos.len() < 2 {
        return Err(Error::Data(format!(
            "stratified folds need at least two samples per class, got {} negative and {} positive",
            neg.len(),
            pos.len()
        )));
    }
    let mut folds = vec![Vec::new(); k];
    for (i, idx) in pos.into_iter().chain(neg).enumerate() {
        folds[i % k].push(idx);
    }
    Ok(folds)
}

/// Stratified train/test split: each class contributes `round(ratio · count)`
/// training rows (halves round up). Returns `(train, test)`.
pub fn stratified_split(labels: &[u8], ratio: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::invalid(format!("split ratio must lie in (0, 1), got {ratio}")));
    }
    let mut train = Vec::new();
    let mut test = Vec::new();
    for class in shuffled_classes(labels, seed) {
        let n_train = (ratio * class.len() as f64).round() as usize;
        train.extend_from_slice(&class[..n_train]);
        test.extend_from_slice(&class[n_train..]);
    }
    let has_both = |idx: &[usize]| {
        let pos = idx.iter().filter(|&&i| labels[i] != 0).count();
        pos > 0 && pos < idx.len()
    };
    if !has_both(&train) || !has_both(&test) {
        return Err(Error::Data("split leaves a side without both classes".into()));
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}

/// Complement of `fold` within `0..n`, in ascending order.
pub(crate) fn complement(n: usize, fold: &[usize]) -> Vec<usize> {
    let mut held = vec![false; n];
    for &i in fold {
        held[i] = true;
    }
    (0..n).filter(|&i| !held[i]).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn labels(pos: usize, neg: usize) -> Vec<u8> {
        let mut l = vec![1u8; pos];
        l.extend(vec![0u8; neg]);
        l
    }

    #[test]
    fn fold_sizes() {
        let f = stratified_folds(&labels(90, 60), 10, 1).unwrap();
        assert!(f.iter().all(|f| f.len() == 15));
        let f = stratified_folds(&labels(97, 54), 10, 1).unwrap();
        let mut sizes: Vec<usize> = f.iter().map(Vec::len).collect();
        sizes.sort_unstable();
        assert_eq!(sizes, [15, 15, 15, 15, 15, 15, 15, 15, 15, 16]);
    }

    #[test]
    fn folds_are_seeded() {
        let l = labels(30, 20);
        assert_eq!(stratified_folds(&l, 5, 3).unwrap(), stratified_folds(&l, 5, 3).unwrap());
        assert_ne!(stratified_folds(&l, 5, 3).unwrap(), stratified_folds(&l, 5, 4).unwrap());
    }

    #[test]
    fn degenerate_inputs_rejected() {
        assert!(stratified_folds(&labels(5, 1), 2, 0).is_err());
        assert!(stratified_folds(&labels(3, 3), 10, 0).is_err());
        assert!(stratified_folds(&labels(3, 3), 1, 0).is_err());
        assert!(stratified_split(&labels(3, 3), 1.0, 0).is_err());
        assert!(stratified_split(&labels(3, 1), 0.5, 0).is_err());
    }

    #[test]
    fn half_split_of_151() {
        let (train, test) = stratified_split(&labels(97, 54), 0.5, 9).unwrap();
        assert_eq!(train.len(), 76);
        assert_eq!(test.len(), 75);
        assert_eq!(train.iter().filter(|&&i| i < 97).count(), 49);
    }

    proptest! {
        #[test]
        fn folds_partition_and_stratify(pos in 2usize..60, neg in 2usize..60, k in 2usize..11, seed in any::<u64>()) {
            prop_assume!(pos + neg >= k);
            let l = labels(pos, neg);
            let folds = stratified_folds(&l, k, seed).unwrap();
            let mut all: Vec<usize> = folds.iter().flatten().copied().collect();
            all.sort_unstable();
            prop_assert_eq!(all, (0..l.len()).collect::<Vec<_>>());
            let global = pos as f64 / l.len() as f64;
            for f in &folds {
                let frac = f.iter().filter(|&&i| l[i] == 1).count() as f64 / f.len() as f64;
                prop_assert!((frac - global).abs() <= 1.0 / f.len() as f64 + 1e-12);
            }
        }

        #[test]
        fn split_partitions(pos in 2usize..60, neg in 2usize..60, seed in any::<u64>()) {
            let l = labels(pos, neg);
            let (train, test) = stratified_split(&l, 0.5, seed).unwrap();
            let mut all = train.clone();
            all.extend(&test);
            all.sort_unstable();
            prop_assert_eq!(all, (0..l.len()).collect::<Vec<_>>());
            prop_assert_eq!(complement(l.len(), &test), train);
        }
    }
}
