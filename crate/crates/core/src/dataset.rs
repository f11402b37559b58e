//! Labeled transaction datasets: CSV ingestion, stratified cross-validation
//! folds, and equal-duration time-frame splitting.

use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// A dense feature matrix with binary labels and optional per-sample
/// timestamps (seconds). Label 1 marks the fraud/minority class.
///
/// Immutable after construction; cheap to share across threads.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    features: Vec<f64>,
    n_features: usize,
    labels: Vec<u8>,
    timestamps: Option<Vec<f64>>,
    feature_names: Vec<String>,
}

impl LabeledDataset {
    /// Builds a dataset from a row-major feature buffer, validating the
    /// structural invariants: consistent lengths, binary labels, finite
    /// feature values.
    pub fn new(
        features: Vec<f64>,
        n_features: usize,
        labels: Vec<u8>,
        timestamps: Option<Vec<f64>>,
        feature_names: Vec<String>,
    ) -> Result<Self> {
        if n_features == 0 {
            return Err(Error::InvalidParam("n_features must be >= 1".into()));
        }
        if features.len() % n_features != 0 {
            return Err(Error::InvalidParam(format!(
                "feature buffer length {} is not a multiple of n_features {}",
                features.len(),
                n_features
            )));
        }
        let n_samples = features.len() / n_features;
        if labels.len() != n_samples {
            return Err(Error::LengthMismatch {
                what: "rows vs labels",
                left: n_samples,
                right: labels.len(),
            });
        }
        if let Some(ts) = &timestamps {
            if ts.len() != n_samples {
                return Err(Error::LengthMismatch {
                    what: "rows vs timestamps",
                    left: n_samples,
                    right: ts.len(),
                });
            }
        }
        if feature_names.len() != n_features {
            return Err(Error::LengthMismatch {
                what: "n_features vs feature_names",
                left: n_features,
                right: feature_names.len(),
            });
        }
        for (row, &label) in labels.iter().enumerate() {
            if label > 1 {
                return Err(Error::NonBinaryLabel {
                    value: label.to_string(),
                    row,
                });
            }
        }
        for (idx, &v) in features.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFiniteCell {
                    column: feature_names[idx % n_features].clone(),
                    row: idx / n_features,
                });
            }
        }
        Ok(Self {
            features,
            n_features,
            labels,
            timestamps,
            feature_names,
        })
    }

    /// Convenience constructor from per-row feature vectors.
    pub fn from_rows(
        rows: Vec<Vec<f64>>,
        labels: Vec<u8>,
        timestamps: Option<Vec<f64>>,
        feature_names: Vec<String>,
    ) -> Result<Self> {
        let n_features = rows.first().map(Vec::len).unwrap_or(0);
        if rows.iter().any(|r| r.len() != n_features) {
            return Err(Error::InvalidParam("ragged feature rows".into()));
        }
        let features = rows.into_iter().flatten().collect();
        Self::new(features, n_features, labels, timestamps, feature_names)
    }

    pub fn n_samples(&self) -> usize {
        self.labels.len()
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.n_features..(i + 1) * self.n_features]
    }

    pub fn label(&self, i: usize) -> u8 {
        self.labels[i]
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn features_raw(&self) -> &[f64] {
        &self.features
    }

    pub fn timestamps(&self) -> Option<&[f64]> {
        self.timestamps.as_deref()
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    /// Index of a feature column by name.
    pub fn feature_index(&self, name: &str) -> Option<usize> {
        self.feature_names.iter().position(|n| n == name)
    }

    /// Indices of the majority (label 0) and minority (label 1) classes,
    /// in row order.
    pub fn class_indices(&self) -> (Vec<usize>, Vec<usize>) {
        let mut majority = Vec::new();
        let mut minority = Vec::new();
        for (i, &l) in self.labels.iter().enumerate() {
            if l == 1 {
                minority.push(i);
            } else {
                majority.push(i);
            }
        }
        (majority, minority)
    }

    pub fn n_positives(&self) -> usize {
        self.labels.iter().filter(|&&l| l == 1).count()
    }

    /// Copies the given rows into a new dataset, preserving order.
    pub fn subset(&self, indices: &[usize]) -> Self {
        let mut features = Vec::with_capacity(indices.len() * self.n_features);
        let mut labels = Vec::with_capacity(indices.len());
        let mut timestamps = self.timestamps.as_ref().map(|_| Vec::with_capacity(indices.len()));
        for &i in indices {
            features.extend_from_slice(self.row(i));
            labels.push(self.labels[i]);
            if let (Some(out), Some(ts)) = (timestamps.as_mut(), self.timestamps.as_ref()) {
                out.push(ts[i]);
            }
        }
        Self {
            features,
            n_features: self.n_features,
            labels,
            timestamps,
            feature_names: self.feature_names.clone(),
        }
    }
}

/// Loads a CSV file with a header row into a [`LabeledDataset`].
///
/// Every column other than `label_column` and the optional `time_column`
/// becomes a feature, in header order. Label values must be the integers
/// 0 or 1; feature cells must parse as finite numbers; the time column must
/// hold non-negative real seconds.
pub fn load_csv(
    path: impl AsRef<Path>,
    label_column: &str,
    time_column: Option<&str>,
) -> Result<LabeledDataset> {
    let path = path.as_ref();
    if !path.exists() {
        return Err(Error::MissingFile(path.to_path_buf()));
    }
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_path(path)?;
    let headers: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();

    let find_unique = |name: &str| -> Result<usize> {
        let hits: Vec<usize> = headers
            .iter()
            .enumerate()
            .filter(|(_, h)| h.as_str() == name)
            .map(|(i, _)| i)
            .collect();
        match hits.len() {
            0 => Err(Error::MissingColumn(name.to_string())),
            1 => Ok(hits[0]),
            _ => Err(Error::DuplicateColumn(name.to_string())),
        }
    };

    let label_idx = find_unique(label_column)?;
    let time_idx = match time_column {
        Some(name) => Some(find_unique(name)?),
        None => None,
    };
    if time_idx == Some(label_idx) {
        return Err(Error::InvalidParam(
            "label column and time column must differ".into(),
        ));
    }

    let feature_cols: Vec<usize> = (0..headers.len())
        .filter(|&i| i != label_idx && Some(i) != time_idx)
        .collect();
    if feature_cols.is_empty() {
        return Err(Error::EmptyInput("no feature columns"));
    }
    let feature_names: Vec<String> = feature_cols.iter().map(|&i| headers[i].clone()).collect();

    let mut features = Vec::new();
    let mut labels = Vec::new();
    let mut timestamps = time_idx.map(|_| Vec::new());

    for (row, record) in reader.records().enumerate() {
        let record = record?;
        let label_raw = record.get(label_idx).unwrap_or("");
        let label: i64 = label_raw.trim().parse().map_err(|_| Error::NonBinaryLabel {
            value: label_raw.to_string(),
            row,
        })?;
        if label != 0 && label != 1 {
            return Err(Error::NonBinaryLabel {
                value: label_raw.to_string(),
                row,
            });
        }
        labels.push(label as u8);

        if let (Some(ts), Some(ti)) = (timestamps.as_mut(), time_idx) {
            let raw = record.get(ti).unwrap_or("");
            let t: f64 = raw.trim().parse().map_err(|_| Error::NonNumericCell {
                column: headers[ti].clone(),
                value: raw.to_string(),
                row,
            })?;
            if !t.is_finite() || t < 0.0 {
                return Err(Error::InvalidParam(format!(
                    "time column {:?} must hold non-negative finite seconds (row {})",
                    headers[ti], row
                )));
            }
            ts.push(t);
        }

        for (&col, name) in feature_cols.iter().zip(&feature_names) {
            let raw = record.get(col).unwrap_or("");
            let v: f64 = raw.trim().parse().map_err(|_| Error::NonNumericCell {
                column: name.clone(),
                value: raw.to_string(),
                row,
            })?;
            if !v.is_finite() {
                return Err(Error::NonFiniteCell {
                    column: name.clone(),
                    row,
                });
            }
            features.push(v);
        }
    }

    if labels.is_empty() {
        return Err(Error::EmptyInput("no data rows"));
    }
    LabeledDataset::new(
        features,
        feature_names.len(),
        labels,
        timestamps,
        feature_names,
    )
}

/// Assignment of every sample to one of `k` cross-validation folds,
/// stratified so per-class counts differ by at most one across folds.
#[derive(Debug, Clone)]
pub struct FoldAssignment {
    fold_of: Vec<usize>,
    k: usize,
}

impl FoldAssignment {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn fold_of(&self) -> &[usize] {
        &self.fold_of
    }

    /// Row indices held out by the given fold.
    pub fn test_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.fold_of.len())
            .filter(|&i| self.fold_of[i] == fold)
            .collect()
    }

    /// Row indices used for training when the given fold is held out.
    pub fn train_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.fold_of.len())
            .filter(|&i| self.fold_of[i] != fold)
            .collect()
    }
}

/// Stratified k-fold assignment: each class is shuffled independently with
/// the seed and dealt round-robin, so per-fold class counts differ by at
/// most one.
pub fn stratified_kfold(ds: &LabeledDataset, k: usize, seed: u64) -> Result<FoldAssignment> {
    if k < 2 {
        return Err(Error::InvalidParam(format!("k must be >= 2, got {k}")));
    }
    let (majority, minority) = ds.class_indices();
    for (class, members) in [(0u8, &majority), (1u8, &minority)] {
        if members.len() < k {
            return Err(Error::ClassTooSmall {
                class,
                count: members.len(),
                required: k,
            });
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut fold_of = vec![0usize; ds.n_samples()];
    for members in [majority, minority] {
        let mut shuffled = members;
        shuffled.shuffle(&mut rng);
        for (pos, idx) in shuffled.into_iter().enumerate() {
            fold_of[idx] = pos % k;
        }
    }
    Ok(FoldAssignment { fold_of, k })
}

/// Assignment of every sample to one of `F` contiguous, equal-duration
/// time frames spanning `[min(t), max(t)]`.
#[derive(Debug, Clone)]
pub struct TimeFrameSplit {
    frame_of: Vec<usize>,
    n_frames: usize,
    boundaries: Vec<f64>,
}

impl TimeFrameSplit {
    pub fn n_frames(&self) -> usize {
        self.n_frames
    }

    pub fn frame_of(&self) -> &[usize] {
        &self.frame_of
    }

    /// The `F + 1` frame boundaries; frame `i` spans
    /// `[boundaries[i], boundaries[i+1])`, with the global maximum clamped
    /// into the last frame.
    pub fn boundaries(&self) -> &[f64] {
        &self.boundaries
    }

    /// Row indices per frame, in row order.
    pub fn frame_rows(&self) -> Vec<Vec<usize>> {
        let mut rows = vec![Vec::new(); self.n_frames];
        for (i, &f) in self.frame_of.iter().enumerate() {
            rows[f].push(i);
        }
        rows
    }
}

/// Splits the dataset's time span into `n_frames` equal-duration frames.
/// Frames are half-open `[b_i, b_{i+1})`; the maximum timestamp is clamped
/// into the last frame.
pub fn split_time_frames(ds: &LabeledDataset, n_frames: usize) -> Result<TimeFrameSplit> {
    if n_frames == 0 {
        return Err(Error::InvalidParam("n_frames must be >= 1".into()));
    }
    let ts = ds.timestamps().ok_or(Error::MissingTimestamps)?;
    if ts.is_empty() {
        return Err(Error::EmptyInput("no timestamps"));
    }
    let t_min = ts.iter().cloned().fold(f64::INFINITY, f64::min);
    let t_max = ts.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if n_frames > 1 && t_max <= t_min {
        return Err(Error::DegenerateTimeRange);
    }

    let span = t_max - t_min;
    let mut boundaries = Vec::with_capacity(n_frames + 1);
    for i in 0..=n_frames {
        boundaries.push(t_min + span * i as f64 / n_frames as f64);
    }
    boundaries[n_frames] = t_max;

    let frame_of = ts
        .iter()
        .map(|&t| {
            let mut f = if span > 0.0 {
                (((t - t_min) / span) * n_frames as f64).floor() as usize
            } else {
                0
            };
            f = f.min(n_frames - 1);
            // Settle float edge cases against the boundary array so every
            // index is consistent with its half-open frame interval.
            while f > 0 && t < boundaries[f] {
                f -= 1;
            }
            while f < n_frames - 1 && t >= boundaries[f + 1] {
                f += 1;
            }
            f
        })
        .collect();

    Ok(TimeFrameSplit {
        frame_of,
        n_frames,
        boundaries,
    })
}

/// Stratified train/test holdout with an exact test-set size. Class test
/// quotas are apportioned by largest remainder, then filled from a seeded
/// shuffle of each class.
pub fn stratified_holdout(
    labels: &[u8],
    test_size: usize,
    seed: u64,
) -> Result<(Vec<usize>, Vec<usize>)> {
    let n = labels.len();
    if test_size == 0 || test_size >= n {
        return Err(Error::InvalidParam(format!(
            "test_size must be in 1..{n}, got {test_size}"
        )));
    }
    let mut classes: Vec<Vec<usize>> = vec![Vec::new(), Vec::new()];
    for (i, &l) in labels.iter().enumerate() {
        classes[l as usize].push(i);
    }

    // Largest-remainder apportionment of the test quota over classes.
    let mut quotas = [0usize; 2];
    let mut remainders = [0f64; 2];
    let mut assigned = 0usize;
    for c in 0..2 {
        let exact = test_size as f64 * classes[c].len() as f64 / n as f64;
        quotas[c] = exact.floor() as usize;
        remainders[c] = exact - exact.floor();
        assigned += quotas[c];
    }
    let mut order = [0usize, 1];
    order.sort_by(|&a, &b| remainders[b].partial_cmp(&remainders[a]).unwrap());
    let mut left = test_size - assigned;
    for &c in &order {
        if left == 0 {
            break;
        }
        quotas[c] += 1;
        left -= 1;
    }
    for c in 0..2 {
        quotas[c] = quotas[c].min(classes[c].len());
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut test = Vec::with_capacity(test_size);
    let mut train = Vec::new();
    for c in 0..2 {
        let mut members = classes[c].clone();
        members.shuffle(&mut rng);
        test.extend_from_slice(&members[..quotas[c]]);
        train.extend_from_slice(&members[quotas[c]..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}
