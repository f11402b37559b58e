//! Undersampling strategies and the K-segments under-bagging ensemble.
//!
//! The ensemble splits the majority class into K disjoint, near-equal
//! segments, trains one random forest per segment merged with the full
//! minority class, and combines members by averaging their probabilities.
//! All of the majority data is used exactly once across members.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::LabeledDataset;
use crate::error::{Error, Result};
use crate::forest::{train_forest, ForestModel, ForestParams};

/// Disjoint cover of the majority-class index set by K segments whose sizes
/// differ by at most one.
#[derive(Debug, Clone)]
pub struct SegmentPartition {
    segments: Vec<Vec<usize>>,
}

impl SegmentPartition {
    pub fn k(&self) -> usize {
        self.segments.len()
    }

    pub fn segments(&self) -> &[Vec<usize>] {
        &self.segments
    }
}

/// Randomly partitions the majority class (label 0) into K disjoint
/// segments; the remainder is spread so sizes differ by at most one and
/// every majority point is used.
pub fn partition_majority(ds: &LabeledDataset, k: usize, seed: u64) -> Result<SegmentPartition> {
    if k == 0 {
        return Err(Error::InvalidParam("K must be >= 1".into()));
    }
    let (mut majority, _) = ds.class_indices();
    if majority.len() < k {
        return Err(Error::ClassTooSmall {
            class: 0,
            count: majority.len(),
            required: k,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    majority.shuffle(&mut rng);

    let base = majority.len() / k;
    let remainder = majority.len() % k;
    let mut segments = Vec::with_capacity(k);
    let mut cursor = 0;
    for s in 0..k {
        let size = base + usize::from(s < remainder);
        segments.push(majority[cursor..cursor + size].to_vec());
        cursor += size;
    }
    Ok(SegmentPartition { segments })
}

/// How member outputs are combined into one prediction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum VoteRule {
    /// Mean of member probabilities, thresholded at 0.5; ties go to the
    /// minority (fraud) class.
    MeanProbability,
}

/// K per-segment forests plus the vote combiner.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KSubEnsemble {
    members: Vec<ForestModel>,
    vote: VoteRule,
}

impl KSubEnsemble {
    pub fn members(&self) -> &[ForestModel] {
        &self.members
    }

    pub fn vote(&self) -> VoteRule {
        self.vote
    }

    /// Ensemble score (mean member probability) and hard class for `x`.
    pub fn predict(&self, x: &[f64]) -> Result<(u8, f64)> {
        let mut scores = Vec::with_capacity(self.members.len());
        for member in &self.members {
            scores.push(member.predict_proba(x)?);
        }
        Ok(combine_scores(&scores))
    }
}

/// Mean-probability vote: class 1 iff the mean score is at least 0.5.
/// Permutation-invariant in member order.
pub fn combine_scores(scores: &[f64]) -> (u8, f64) {
    let score = scores.iter().sum::<f64>() / scores.len() as f64;
    (u8::from(score >= 0.5), score)
}

/// The per-member training index sets: segment k of the majority merged
/// with the full minority class.
pub fn ksub_training_indices(
    ds: &LabeledDataset,
    k: usize,
    seed: u64,
) -> Result<Vec<Vec<usize>>> {
    let (_, minority) = ds.class_indices();
    if minority.is_empty() {
        return Err(Error::ClassTooSmall {
            class: 1,
            count: 0,
            required: 1,
        });
    }
    let partition = partition_majority(ds, k, seed)?;
    Ok(partition
        .segments()
        .iter()
        .map(|segment| {
            let mut indices = segment.clone();
            indices.extend_from_slice(&minority);
            indices
        })
        .collect())
}

/// Trains the K-segments under-bagging ensemble: one forest per majority
/// segment merged with all minority points, combined by mean probability.
pub fn train_ksub(
    ds: &LabeledDataset,
    k: usize,
    forest_params: &ForestParams,
    seed: u64,
) -> Result<KSubEnsemble> {
    let member_indices = ksub_training_indices(ds, k, seed)?;
    let mut master = ChaCha8Rng::seed_from_u64(seed);
    let member_seeds: Vec<u64> = (0..k).map(|_| master.gen()).collect();

    let members: Vec<ForestModel> = member_indices
        .par_iter()
        .zip(member_seeds.par_iter())
        .map(|(indices, &member_seed)| {
            let subset = ds.subset(indices);
            train_forest(&subset, forest_params, member_seed)
        })
        .collect::<Result<_>>()?;

    Ok(KSubEnsemble {
        members,
        vote: VoteRule::MeanProbability,
    })
}

/// Keeps all minority points and subsamples the majority without
/// replacement down to `ceil(|minority| / ratio)` points, where `ratio` is
/// the target minority/majority ratio. Row order is preserved.
pub fn random_undersample(ds: &LabeledDataset, ratio: f64, seed: u64) -> Result<LabeledDataset> {
    let (majority, minority) = ds.class_indices();
    let target = undersample_target(minority.len(), majority.len(), ratio)?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut shuffled = majority;
    shuffled.shuffle(&mut rng);
    let mut keep: Vec<usize> = shuffled[..target].to_vec();
    keep.extend_from_slice(&minority);
    keep.sort_unstable();
    Ok(ds.subset(&keep))
}

fn undersample_target(n_minority: usize, n_majority: usize, ratio: f64) -> Result<usize> {
    if !(ratio > 0.0) || !ratio.is_finite() {
        return Err(Error::InvalidParam(format!(
            "ratio must be a positive real, got {ratio}"
        )));
    }
    if n_minority == 0 {
        return Err(Error::ClassTooSmall {
            class: 1,
            count: 0,
            required: 1,
        });
    }
    let target = (n_minority as f64 / ratio).ceil() as usize;
    if target == 0 {
        return Err(Error::InvalidParam("ratio too large: zero majority target".into()));
    }
    if target > n_majority {
        return Err(Error::InvalidParam(format!(
            "ratio {ratio} needs {target} majority points but only {n_majority} exist"
        )));
    }
    Ok(target)
}

/// k-means configuration: k-means++ seeding, Euclidean distance, iteration
/// cap, and relative inertia tolerance.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KMeansParams {
    pub max_iters: usize,
    pub tol: f64,
}

impl Default for KMeansParams {
    fn default() -> Self {
        Self {
            max_iters: 300,
            tol: 1e-4,
        }
    }
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Lloyd's k-means with k-means++ seeding. `data` is row-major with
/// `n_features` columns; returns `k` centroids in creation order.
/// Deterministic for a fixed seed.
pub fn kmeans(
    data: &[f64],
    n_features: usize,
    k: usize,
    params: &KMeansParams,
    seed: u64,
) -> Result<Vec<f64>> {
    if n_features == 0 || data.len() % n_features != 0 {
        return Err(Error::InvalidParam("bad k-means data shape".into()));
    }
    let n = data.len() / n_features;
    if k == 0 || k > n {
        return Err(Error::InvalidParam(format!(
            "k must be in 1..={n}, got {k}"
        )));
    }
    let row = |i: usize| &data[i * n_features..(i + 1) * n_features];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    // k-means++ seeding: first centroid uniform, then proportional to the
    // squared distance to the nearest chosen centroid.
    let mut centroids: Vec<f64> = Vec::with_capacity(k * n_features);
    let first = rng.gen_range(0..n);
    centroids.extend_from_slice(row(first));
    let mut nearest_sq: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| sq_dist(row(i), row(first)))
        .collect();
    for _ in 1..k {
        let total: f64 = nearest_sq.iter().sum();
        if total <= 0.0 {
            let distinct = centroids.len() / n_features;
            return Err(Error::KMeansInit {
                requested: k,
                distinct,
            });
        }
        let mut target = rng.gen::<f64>() * total;
        let mut chosen = n - 1;
        for (i, &d) in nearest_sq.iter().enumerate() {
            target -= d;
            if target <= 0.0 {
                chosen = i;
                break;
            }
        }
        let start = centroids.len();
        centroids.extend_from_slice(row(chosen));
        let new_centroid = centroids[start..].to_vec();
        nearest_sq
            .par_iter_mut()
            .enumerate()
            .for_each(|(i, d)| *d = d.min(sq_dist(row(i), &new_centroid)));
    }

    let mut assignment = vec![0usize; n];
    let mut prev_inertia = f64::INFINITY;
    for _ in 0..params.max_iters {
        // assignment step (parallel, deterministic: ties to lowest index)
        let pairs: Vec<(usize, f64)> = (0..n)
            .into_par_iter()
            .map(|i| {
                let mut best = 0usize;
                let mut best_d = f64::INFINITY;
                for c in 0..k {
                    let d = sq_dist(row(i), &centroids[c * n_features..(c + 1) * n_features]);
                    if d < best_d {
                        best_d = d;
                        best = c;
                    }
                }
                (best, best_d)
            })
            .collect();
        let mut inertia = 0.0;
        for (i, (c, d)) in pairs.iter().enumerate() {
            assignment[i] = *c;
            inertia += d;
        }

        // update step (sequential for reproducible float sums)
        let mut sums = vec![0.0f64; k * n_features];
        let mut counts = vec![0usize; k];
        for i in 0..n {
            let c = assignment[i];
            counts[c] += 1;
            for (s, &v) in sums[c * n_features..(c + 1) * n_features]
                .iter_mut()
                .zip(row(i))
            {
                *s += v;
            }
        }
        let mut revived: Vec<usize> = Vec::new();
        for c in 0..k {
            if counts[c] == 0 {
                // revive an empty cluster at the point farthest from its
                // assigned centroid (lowest index on ties), one point per
                // empty cluster
                let mut far = 0usize;
                let mut far_d = -1.0;
                for (i, (a, d)) in pairs.iter().enumerate() {
                    if counts[*a] > 1 && *d > far_d && !revived.contains(&i) {
                        far_d = *d;
                        far = i;
                    }
                }
                revived.push(far);
                centroids[c * n_features..(c + 1) * n_features].copy_from_slice(row(far));
            } else {
                for (dst, &s) in centroids[c * n_features..(c + 1) * n_features]
                    .iter_mut()
                    .zip(&sums[c * n_features..(c + 1) * n_features])
                {
                    *dst = s / counts[c] as f64;
                }
            }
        }

        if prev_inertia.is_finite() {
            let change = (prev_inertia - inertia).abs();
            if change <= params.tol * prev_inertia.max(f64::MIN_POSITIVE) {
                break;
            }
        }
        prev_inertia = inertia;
    }
    Ok(centroids)
}

/// Cluster-centroids undersampling: the majority class is replaced by the
/// k-means centroids of its points (`k = ceil(|minority| / ratio)`); the
/// minority rows are kept verbatim, first, in their original order.
/// Features are clustered as-is; rescale beforehand if their ranges differ
/// wildly.
pub fn cluster_centroids(
    ds: &LabeledDataset,
    ratio: f64,
    params: &KMeansParams,
    seed: u64,
) -> Result<LabeledDataset> {
    let (majority, minority) = ds.class_indices();
    let k = undersample_target(minority.len(), majority.len(), ratio)?;

    let n_features = ds.n_features();
    let mut major_data = Vec::with_capacity(majority.len() * n_features);
    for &i in &majority {
        major_data.extend_from_slice(ds.row(i));
    }
    let centroids = kmeans(&major_data, n_features, k, params, seed)?;

    let mut features = Vec::with_capacity((minority.len() + k) * n_features);
    let mut labels = Vec::with_capacity(minority.len() + k);
    for &i in &minority {
        features.extend_from_slice(ds.row(i));
        labels.push(1);
    }
    features.extend_from_slice(&centroids);
    labels.extend(std::iter::repeat(0).take(k));

    LabeledDataset::new(
        features,
        n_features,
        labels,
        None,
        ds.feature_names().to_vec(),
    )
}
