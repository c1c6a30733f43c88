use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use super::Split;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitRatios {
    pub train: f64,
    pub val: f64,
    pub test: f64,
}

impl Default for SplitRatios {
    fn default() -> Self {
        Self {
            train: 0.70,
            val: 0.15,
            test: 0.15,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SplitError {
    #[error("split ratios must be non-negative and sum to 1, got {0:?}")]
    BadRatios(SplitRatios),
    #[error("{scenes} scenes cannot fill {buckets} nonzero split buckets")]
    TooFewScenes { scenes: usize, buckets: usize },
    #[error("duplicate scene id {0:?}")]
    DuplicateScene(String),
}

/// Bucket sizes by largest remainder (ties go to the earlier bucket), then
/// topped up so every nonzero bucket has at least one scene, taking from the
/// largest bucket.
pub(crate) fn bucket_counts(n: usize, ratios: &SplitRatios) -> [usize; 3] {
    let r = [ratios.train, ratios.val, ratios.test];
    let quotas: Vec<f64> = r.iter().map(|q| q * n as f64).collect();
    let mut counts: [usize; 3] = [0; 3];
    for i in 0..3 {
        counts[i] = (quotas[i] + 1e-9).floor() as usize;
    }
    let mut left = n - counts.iter().sum::<usize>().min(n);
    let mut order: Vec<usize> = (0..3).collect();
    order.sort_by(|&a, &b| {
        let ra = quotas[a] - counts[a] as f64;
        let rb = quotas[b] - counts[b] as f64;
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    for &i in order.iter().cycle() {
        if left == 0 {
            break;
        }
        if r[i] > 0.0 {
            counts[i] += 1;
            left -= 1;
        }
    }
    for i in 0..3 {
        if r[i] > 0.0 && counts[i] == 0 {
            let donor = (0..3).max_by_key(|&j| (counts[j], std::cmp::Reverse(j))).unwrap();
            counts[donor] -= 1;
            counts[i] += 1;
        }
    }
    counts
}

/// Assigns whole scenes to train/val/test by a seeded shuffle.
pub fn split_assign(
    scene_ids: &[String],
    ratios: &SplitRatios,
    seed: u64,
) -> Result<BTreeMap<String, Split>, SplitError> {
    let r = [ratios.train, ratios.val, ratios.test];
    if r.iter().any(|q| !(q.is_finite() && *q >= 0.0)) || (r.iter().sum::<f64>() - 1.0).abs() > 1e-9
    {
        return Err(SplitError::BadRatios(*ratios));
    }
    let mut ids: Vec<String> = scene_ids.to_vec();
    ids.sort();
    if let Some(w) = ids.windows(2).find(|w| w[0] == w[1]) {
        return Err(SplitError::DuplicateScene(w[0].clone()));
    }
    let buckets = r.iter().filter(|q| **q > 0.0).count();
    if ids.len() < buckets {
        return Err(SplitError::TooFewScenes {
            scenes: ids.len(),
            buckets,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    ids.shuffle(&mut rng);
    let counts = bucket_counts(ids.len(), ratios);
    let mut out = BTreeMap::new();
    let mut it = ids.into_iter();
    for (split, n) in Split::ALL.into_iter().zip(counts) {
        for id in it.by_ref().take(n) {
            out.insert(id, split);
        }
    }
    Ok(out)
}
