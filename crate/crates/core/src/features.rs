//! Trailing-window transaction aggregation features.
//!
//! For each transaction, aggregates (average/sum/count) are computed over
//! the amounts of strictly earlier transactions in the same group (same
//! card id, customer id, ...) that fall inside each trailing window of
//! `t_p` hours. The current transaction is never included in its own
//! aggregate, so no information from the present or future leaks into the
//! feature. Implemented as a per-group time-sorted sliding window, O(n log n)
//! overall.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::dataset::LabeledDataset;
use crate::error::{Error, Result};

/// Aggregation function applied to amounts inside a window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AggFunction {
    Average,
    Sum,
    Count,
}

impl AggFunction {
    pub fn name(&self) -> &'static str {
        match self {
            AggFunction::Average => "avg",
            AggFunction::Sum => "sum",
            AggFunction::Count => "count",
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        match text.trim().to_ascii_lowercase().as_str() {
            "avg" | "average" | "mean" => Ok(AggFunction::Average),
            "sum" | "total" => Ok(AggFunction::Sum),
            "count" => Ok(AggFunction::Count),
            other => Err(Error::InvalidParam(format!(
                "unknown aggregation function {other:?} (expected avg, sum, or count)"
            ))),
        }
    }
}

/// What to aggregate: the grouping column, the trailing windows in hours
/// (ascending), and the functions to apply per window.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AggregationSpec {
    pub group_by: String,
    pub windows_hours: Vec<f64>,
    pub functions: Vec<AggFunction>,
}

/// The customary trailing windows, in hours.
pub const DEFAULT_WINDOWS_HOURS: [f64; 8] = [1.0, 3.0, 6.0, 12.0, 18.0, 24.0, 72.0, 168.0];

impl AggregationSpec {
    fn validate(&self) -> Result<()> {
        if self.functions.is_empty() {
            return Err(Error::InvalidParam(
                "aggregation needs at least one function".into(),
            ));
        }
        if self.windows_hours.is_empty() {
            return Err(Error::InvalidParam(
                "aggregation needs at least one window".into(),
            ));
        }
        if self.windows_hours.iter().any(|&w| !(w > 0.0) || !w.is_finite()) {
            return Err(Error::InvalidParam("windows must be positive".into()));
        }
        for w in self.windows_hours.windows(2) {
            if w[0] >= w[1] {
                return Err(Error::InvalidParam(
                    "windows must be strictly ascending".into(),
                ));
            }
        }
        Ok(())
    }
}

/// Hours elapsed from `earlier` to `later`.
#[inline]
pub fn hours_between(later: f64, earlier: f64) -> f64 {
    (later - earlier) / 3600.0
}

/// Whether a transaction at `t_j` belongs to the trailing `window_hours`
/// aggregate of a transaction at `t_i`: strictly earlier and strictly
/// inside the window.
#[inline]
pub fn in_window(t_i: f64, t_j: f64, window_hours: f64) -> bool {
    t_j < t_i && hours_between(t_i, t_j) < window_hours
}

/// Appends one feature per (window, function) pair, window-major, named
/// `{amount}_{function}_{window}h`. Empty aggregates contribute 0 for all
/// functions.
pub fn aggregate(
    ds: &LabeledDataset,
    amount_column: &str,
    spec: &AggregationSpec,
) -> Result<LabeledDataset> {
    spec.validate()?;
    let timestamps = ds.timestamps().ok_or(Error::MissingTimestamps)?;
    let group_col = ds
        .feature_index(&spec.group_by)
        .ok_or_else(|| Error::MissingColumn(spec.group_by.clone()))?;
    let amount_col = ds
        .feature_index(amount_column)
        .ok_or_else(|| Error::MissingColumn(amount_column.to_string()))?;

    let n = ds.n_samples();
    let n_windows = spec.windows_hours.len();
    // per row: (sum, count) per window
    let mut window_stats = vec![(0.0f64, 0usize); n * n_windows];

    let mut groups: HashMap<u64, Vec<usize>> = HashMap::new();
    for i in 0..n {
        groups
            .entry(ds.row(i)[group_col].to_bits())
            .or_default()
            .push(i);
    }

    for rows in groups.values() {
        let mut order = rows.clone();
        order.sort_by(|&a, &b| timestamps[a].total_cmp(&timestamps[b]).then(a.cmp(&b)));

        // `hi` counts strictly-earlier rows; one (lo, sum, count) state
        // slides per window.
        let mut hi = 0usize;
        let mut lo = vec![0usize; n_windows];
        let mut sum = vec![0.0f64; n_windows];
        let mut count = vec![0usize; n_windows];
        for &i in &order {
            let t_i = timestamps[i];
            while hi < order.len() && timestamps[order[hi]] < t_i {
                let amount = ds.row(order[hi])[amount_col];
                for w in 0..n_windows {
                    sum[w] += amount;
                    count[w] += 1;
                }
                hi += 1;
            }
            for (w, &window) in spec.windows_hours.iter().enumerate() {
                while lo[w] < hi && !in_window(t_i, timestamps[order[lo[w]]], window) {
                    let amount = ds.row(order[lo[w]])[amount_col];
                    sum[w] -= amount;
                    count[w] -= 1;
                    lo[w] += 1;
                }
                window_stats[i * n_windows + w] = (sum[w], count[w]);
            }
        }
    }

    build_augmented(ds, amount_column, spec, &window_stats)
}

/// Reference aggregation by a full scan of all pairs. Quadratic; used to
/// cross-check the sliding-window implementation.
pub fn aggregate_naive(
    ds: &LabeledDataset,
    amount_column: &str,
    spec: &AggregationSpec,
) -> Result<LabeledDataset> {
    spec.validate()?;
    let timestamps = ds.timestamps().ok_or(Error::MissingTimestamps)?;
    let group_col = ds
        .feature_index(&spec.group_by)
        .ok_or_else(|| Error::MissingColumn(spec.group_by.clone()))?;
    let amount_col = ds
        .feature_index(amount_column)
        .ok_or_else(|| Error::MissingColumn(amount_column.to_string()))?;

    let n = ds.n_samples();
    let n_windows = spec.windows_hours.len();
    let mut window_stats = vec![(0.0f64, 0usize); n * n_windows];
    for i in 0..n {
        let group = ds.row(i)[group_col];
        for (w, &window) in spec.windows_hours.iter().enumerate() {
            let mut sum = 0.0f64;
            let mut count = 0usize;
            for j in 0..n {
                if ds.row(j)[group_col] == group && in_window(timestamps[i], timestamps[j], window)
                {
                    sum += ds.row(j)[amount_col];
                    count += 1;
                }
            }
            window_stats[i * n_windows + w] = (sum, count);
        }
    }
    build_augmented(ds, amount_column, spec, &window_stats)
}

fn build_augmented(
    ds: &LabeledDataset,
    amount_column: &str,
    spec: &AggregationSpec,
    window_stats: &[(f64, usize)],
) -> Result<LabeledDataset> {
    let n = ds.n_samples();
    let n_features = ds.n_features();
    let n_windows = spec.windows_hours.len();
    let n_new = n_windows * spec.functions.len();

    let mut features = Vec::with_capacity(n * (n_features + n_new));
    for i in 0..n {
        features.extend_from_slice(ds.row(i));
        for w in 0..n_windows {
            let (sum, count) = window_stats[i * n_windows + w];
            for func in &spec.functions {
                features.push(match func {
                    AggFunction::Average => {
                        if count == 0 {
                            0.0
                        } else {
                            sum / count as f64
                        }
                    }
                    AggFunction::Sum => sum,
                    AggFunction::Count => count as f64,
                });
            }
        }
    }

    let mut names = ds.feature_names().to_vec();
    for &w in &spec.windows_hours {
        for func in &spec.functions {
            names.push(format!("{amount_column}_{}_{w}h", func.name()));
        }
    }

    LabeledDataset::new(
        features,
        n_features + n_new,
        ds.labels().to_vec(),
        ds.timestamps().map(|t| t.to_vec()),
        names,
    )
}
