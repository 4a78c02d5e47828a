//! Topic-diversity profiling of a benchmark's contexts: average pairwise
//! cosine distance, silhouette-selected cluster count, silhouette score,
//! normalized topic entropy, and a 2D projection export.

pub mod kmeans;
pub mod pca;

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::embed::EmbeddingSet;
pub use kmeans::{kmeans, KMeansFit};
pub use pca::project_2d;

/// Error from diagnostics.
#[derive(Debug, thiserror::Error)]
pub enum DiagnoseError {
    #[error("need at least {required} points, got {n}")]
    TooFewPoints { n: usize, required: usize },
    #[error("k = {k} is out of range for {n} points")]
    InvalidK { k: usize, n: usize },
    #[error("invalid cluster range [{k_min}, {k_max}]")]
    InvalidRange { k_min: usize, k_max: usize },
    #[error("fewer than two non-empty clusters")]
    SingleCluster,
    #[error("empty assignments")]
    EmptyAssignments,
    #[error("vectors must have dimension >= 2, got {0}")]
    DimensionTooSmall(usize),
    #[error("data has rank zero (all points identical)")]
    RankZero,
}

/// Converts f32 vectors to unit-norm f64 rows.
pub fn normalize_rows(rows: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
    rows.into_iter()
        .map(|mut row| {
            let norm = row.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 0.0 {
                for x in row.iter_mut() {
                    *x /= norm;
                }
            }
            row
        })
        .collect()
}

fn set_to_unit_rows(set: &EmbeddingSet) -> Vec<Vec<f64>> {
    normalize_rows(
        set.ids()
            .iter()
            .map(|id| {
                set.pooled(id)
                    .expect("id present")
                    .iter()
                    .map(|&x| f64::from(x))
                    .collect()
            })
            .collect(),
    )
}

fn cosine_distance(a: &[f64], b: &[f64]) -> f64 {
    1.0 - a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>()
}

/// Mean over all unordered pairs of (1 - dot), for unit vectors. In [0, 2].
pub fn avg_pairwise_cosine_distance(data: &[Vec<f64>]) -> Result<f64, DiagnoseError> {
    let n = data.len();
    if n < 2 {
        return Err(DiagnoseError::TooFewPoints { n, required: 2 });
    }
    let mut total = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            total += cosine_distance(&data[i], &data[j]);
        }
    }
    Ok(total / (n * (n - 1) / 2) as f64)
}

/// Mean silhouette over all points using cosine distance: s(i) =
/// (b - a) / max(a, b), where a is the mean distance to co-members and b the
/// smallest mean distance to another cluster. Singleton points score 0.
pub fn silhouette(data: &[Vec<f64>], assignments: &[usize]) -> Result<f64, DiagnoseError> {
    assert_eq!(data.len(), assignments.len());
    let n = data.len();
    if n == 0 {
        return Err(DiagnoseError::EmptyAssignments);
    }
    let max_label = *assignments.iter().max().expect("non-empty") + 1;
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); max_label];
    for (i, &a) in assignments.iter().enumerate() {
        members[a].push(i);
    }
    let non_empty: Vec<usize> = (0..max_label).filter(|&c| !members[c].is_empty()).collect();
    if non_empty.len() < 2 {
        return Err(DiagnoseError::SingleCluster);
    }

    let scores: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| {
            let own = assignments[i];
            if members[own].len() == 1 {
                return 0.0;
            }
            let a: f64 = members[own]
                .iter()
                .filter(|&&j| j != i)
                .map(|&j| cosine_distance(&data[i], &data[j]))
                .sum::<f64>()
                / (members[own].len() - 1) as f64;
            let b = non_empty
                .iter()
                .filter(|&&c| c != own)
                .map(|&c| {
                    members[c]
                        .iter()
                        .map(|&j| cosine_distance(&data[i], &data[j]))
                        .sum::<f64>()
                        / members[c].len() as f64
                })
                .fold(f64::INFINITY, f64::min);
            let denom = a.max(b);
            if denom > 0.0 {
                (b - a) / denom
            } else {
                0.0
            }
        })
        .collect();

    Ok(scores.iter().sum::<f64>() / n as f64)
}

/// Normalized Shannon entropy of the cluster-size distribution over non-empty
/// clusters: -sum p ln p / ln(k_nonempty), 0 when one cluster holds
/// everything. Invariant under relabeling; in [0, 1].
pub fn topic_entropy(assignments: &[usize], k: usize) -> Result<f64, DiagnoseError> {
    if assignments.is_empty() {
        return Err(DiagnoseError::EmptyAssignments);
    }
    let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
    for &a in assignments {
        debug_assert!(k == 0 || a < k, "label {a} out of range for k = {k}");
        *counts.entry(a).or_insert(0) += 1;
    }
    let k_nonempty = counts.len();
    if k_nonempty <= 1 {
        return Ok(0.0);
    }
    // Summing in sorted-size order makes the value exactly invariant under
    // cluster relabeling.
    let mut sizes: Vec<usize> = counts.into_values().collect();
    sizes.sort_unstable();
    let n = assignments.len() as f64;
    let h: f64 = sizes
        .iter()
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.ln()
        })
        .sum();
    Ok((h / (k_nonempty as f64).ln()).clamp(0.0, 1.0))
}

/// Tuning knobs for clustering-based metrics.
#[derive(Debug, Clone)]
pub struct ClusterOptions {
    pub k_min: usize,
    pub k_max: usize,
    pub max_iters: usize,
    pub tol: f64,
}

impl Default for ClusterOptions {
    fn default() -> Self {
        Self {
            k_min: 2,
            k_max: 30,
            max_iters: 300,
            tol: 1e-4,
        }
    }
}

/// The chosen cluster count with its silhouette and fit.
#[derive(Debug, Clone)]
pub struct KSelection {
    pub k: usize,
    pub silhouette: f64,
    pub fit: KMeansFit,
}

/// Sweeps k over [k_min, min(k_max, n-1)], fitting k-means per k, and returns
/// the silhouette argmax; exact ties go to the smallest k. Values of k whose
/// fit collapses to a single non-empty cluster are skipped.
pub fn select_optimal_k(
    data: &[Vec<f64>],
    opts: &ClusterOptions,
    seed: u64,
) -> Result<KSelection, DiagnoseError> {
    let n = data.len();
    if n < 3 {
        return Err(DiagnoseError::TooFewPoints { n, required: 3 });
    }
    if opts.k_min < 2 || opts.k_max < opts.k_min {
        return Err(DiagnoseError::InvalidRange {
            k_min: opts.k_min,
            k_max: opts.k_max,
        });
    }
    let k_max = opts.k_max.min(n - 1);
    if k_max < opts.k_min {
        return Err(DiagnoseError::InvalidRange {
            k_min: opts.k_min,
            k_max,
        });
    }

    let ks: Vec<usize> = (opts.k_min..=k_max).collect();
    let candidates: Vec<(usize, Result<(f64, KMeansFit), DiagnoseError>)> = ks
        .par_iter()
        .map(|&k| {
            let result = kmeans(data, k, seed, opts.max_iters, opts.tol).and_then(|fit| {
                let s = silhouette(data, &fit.assignments)?;
                Ok((s, fit))
            });
            (k, result)
        })
        .collect();

    let mut best: Option<KSelection> = None;
    for (k, outcome) in candidates {
        match outcome {
            Ok((s, fit)) => {
                let better = match &best {
                    None => true,
                    Some(b) => s > b.silhouette,
                };
                if better {
                    best = Some(KSelection {
                        k,
                        silhouette: s,
                        fit,
                    });
                }
            }
            // Degenerate k (single non-empty cluster): skip.
            Err(DiagnoseError::SingleCluster) => {}
            Err(e) => return Err(e),
        }
    }
    best.ok_or(DiagnoseError::SingleCluster)
}

/// The four diversity metrics of a benchmark profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiversityMetrics {
    pub n_contexts: usize,
    pub avg_cosine_distance: f64,
    pub optimal_k: usize,
    pub silhouette: f64,
    pub topic_entropy: f64,
}

/// Full profile: metrics plus per-context cluster assignments and 2D
/// projection coordinates.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BenchmarkProfile {
    pub metrics: DiversityMetrics,
    pub assignments: BTreeMap<String, usize>,
    pub projection: BTreeMap<String, (f64, f64)>,
}

impl BenchmarkProfile {
    /// Plot-ready CSV: header `id,x,y,cluster`, one row per context sorted
    /// by id.
    pub fn projection_csv(&self) -> String {
        let mut out = String::from("id,x,y,cluster\n");
        for (id, (x, y)) in &self.projection {
            let cluster = self.assignments.get(id).copied().unwrap_or(0);
            out.push_str(&format!("{id},{x:.6},{y:.6},{cluster}\n"));
        }
        out
    }
}

/// Computes the full diversity profile of a context embedding set.
/// Deterministic for a fixed seed.
pub fn profile_benchmark(
    contexts: &EmbeddingSet,
    opts: &ClusterOptions,
    seed: u64,
) -> Result<BenchmarkProfile, DiagnoseError> {
    let n = contexts.len();
    if n < 3 {
        return Err(DiagnoseError::TooFewPoints { n, required: 3 });
    }
    let data = set_to_unit_rows(contexts);
    let avg_cosine_distance = avg_pairwise_cosine_distance(&data)?;
    let selection = select_optimal_k(&data, opts, seed)?;
    let entropy = topic_entropy(&selection.fit.assignments, selection.k)?;
    let coords = project_2d(&data)?;

    let ids = contexts.ids();
    let assignments: BTreeMap<String, usize> = ids
        .iter()
        .cloned()
        .zip(selection.fit.assignments.iter().copied())
        .collect();
    let projection: BTreeMap<String, (f64, f64)> =
        ids.iter().cloned().zip(coords).collect();

    Ok(BenchmarkProfile {
        metrics: DiversityMetrics {
            n_contexts: n,
            avg_cosine_distance,
            optimal_k: selection.k,
            silhouette: selection.silhouette,
            topic_entropy: entropy,
        },
        assignments,
        projection,
    })
}

/// One metric's values in two profiles and the percent difference of b
/// relative to a; undefined when the base value is 0.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricDiff {
    pub metric: String,
    pub base: f64,
    pub other: f64,
    pub percent: Option<f64>,
}

impl MetricDiff {
    /// Percent difference at one-decimal display rounding, or "undefined".
    pub fn percent_display(&self) -> String {
        match self.percent {
            Some(p) => format!("{p:+.1}%"),
            None => "undefined".to_string(),
        }
    }
}

/// Per-metric difference table between two profiles.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProfileDiff {
    pub rows: Vec<MetricDiff>,
}

fn percent_diff(base: f64, other: f64) -> Option<f64> {
    if base == 0.0 {
        None
    } else {
        Some(100.0 * (other - base) / base)
    }
}

/// Compares two profiles metric by metric: percent difference of `b`
/// relative to `a`.
pub fn compare_profiles(a: &DiversityMetrics, b: &DiversityMetrics) -> ProfileDiff {
    let rows = vec![
        MetricDiff {
            metric: "avg_cosine_distance".to_string(),
            base: a.avg_cosine_distance,
            other: b.avg_cosine_distance,
            percent: percent_diff(a.avg_cosine_distance, b.avg_cosine_distance),
        },
        MetricDiff {
            metric: "optimal_k".to_string(),
            base: a.optimal_k as f64,
            other: b.optimal_k as f64,
            percent: percent_diff(a.optimal_k as f64, b.optimal_k as f64),
        },
        MetricDiff {
            metric: "silhouette".to_string(),
            base: a.silhouette,
            other: b.silhouette,
            percent: percent_diff(a.silhouette, b.silhouette),
        },
        MetricDiff {
            metric: "topic_entropy".to_string(),
            base: a.topic_entropy,
            other: b.topic_entropy,
            percent: percent_diff(a.topic_entropy, b.topic_entropy),
        },
    ];
    ProfileDiff { rows }
}
