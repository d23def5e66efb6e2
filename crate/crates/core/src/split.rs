//! Stratified dataset splitting.
//!
//! Both splitters keep the class mixture of every part as close to the
//! whole dataset's as integer counts allow, and both are deterministic
//! given the seed.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::CoreError;
use crate::math;

/// One train/test partition, as indices into the original sample list,
/// each sorted ascending.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fold {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

fn group_by_class(labels: &[usize]) -> BTreeMap<usize, Vec<usize>> {
    let mut by_class: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, &label) in labels.iter().enumerate() {
        by_class.entry(label).or_default().push(i);
    }
    by_class
}

/// `k`-fold cross-validation plan: each sample lands in exactly one test
/// fold, and within every class the fold sizes differ by at most one.
/// Requires every class to have at least `k` samples.
pub fn stratified_kfold(labels: &[usize], k: usize, seed: u64) -> Result<Vec<Fold>, CoreError> {
    if k < 2 {
        return Err(CoreError::InvalidConfig("k-fold needs k >= 2"));
    }
    if labels.is_empty() {
        return Err(CoreError::InvalidConfig("cannot split an empty dataset"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut buckets: Vec<Vec<usize>> = (0..k).map(|_| Vec::new()).collect();
    for (class, mut members) in group_by_class(labels) {
        if members.len() < k {
            return Err(CoreError::Stratification {
                class,
                count: members.len(),
                k,
            });
        }
        members.shuffle(&mut rng);
        for (j, idx) in members.into_iter().enumerate() {
            buckets[j % k].push(idx);
        }
    }
    let folds = (0..k)
        .map(|f| {
            let mut test = buckets[f].clone();
            let mut train: Vec<usize> = buckets
                .iter()
                .enumerate()
                .filter(|(b, _)| *b != f)
                .flat_map(|(_, v)| v.iter().copied())
                .collect();
            test.sort_unstable();
            train.sort_unstable();
            Fold { train, test }
        })
        .collect();
    Ok(folds)
}

/// Single stratified holdout: per class, a seeded shuffle sets aside
/// `round(test_fraction * count)` samples (round half away from zero) for
/// the test side.
pub fn stratified_train_test(
    labels: &[usize],
    test_fraction: f64,
    seed: u64,
) -> Result<Fold, CoreError> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(CoreError::InvalidConfig("test fraction must lie in (0, 1)"));
    }
    if labels.is_empty() {
        return Err(CoreError::InvalidConfig("cannot split an empty dataset"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train = Vec::new();
    let mut test = Vec::new();
    for (_, mut members) in group_by_class(labels) {
        members.shuffle(&mut rng);
        let n_test = (math::round(test_fraction * members.len() as f64) as usize).min(members.len());
        for (j, idx) in members.into_iter().enumerate() {
            if j < n_test {
                test.push(idx);
            } else {
                train.push(idx);
            }
        }
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok(Fold { train, test })
}
