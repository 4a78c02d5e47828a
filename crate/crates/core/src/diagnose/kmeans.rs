//! Lloyd's k-means with k-means++ seeding, on unit-normalized vectors.
//! Squared Euclidean distance on the unit sphere is monotone in cosine
//! distance, so clustering geometry matches the cosine metrics elsewhere.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::DiagnoseError;

/// A fitted clustering.
#[derive(Debug, Clone)]
pub struct KMeansFit {
    pub assignments: Vec<usize>,
    pub centroids: Vec<Vec<f64>>,
    /// Sum of squared distances to assigned centroids at convergence.
    pub objective: f64,
    pub iterations: usize,
    /// Objective after each assignment step; non-increasing.
    pub objective_trace: Vec<f64>,
}

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Nearest centroid by squared distance; ties go to the lowest index.
fn nearest(point: &[f64], centroids: &[Vec<f64>]) -> (usize, f64) {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (i, c) in centroids.iter().enumerate() {
        let d = dist2(point, c);
        if d < best_d {
            best_d = d;
            best = i;
        }
    }
    (best, best_d)
}

/// k-means++ seeding from the given generator. When every remaining point
/// coincides with a chosen centroid, the lowest unchosen index is taken so
/// the procedure stays deterministic.
fn seed_centroids(data: &[Vec<f64>], k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let n = data.len();
    let first = rng.gen_range(0..n);
    let mut chosen_idx = vec![first];
    let mut centroids = vec![data[first].clone()];
    let mut d2: Vec<f64> = data.iter().map(|p| dist2(p, &centroids[0])).collect();

    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        let next_idx = if total > 0.0 {
            let target = rng.gen::<f64>() * total;
            let mut acc = 0.0;
            let mut pick = n - 1;
            for (i, &d) in d2.iter().enumerate() {
                acc += d;
                if acc >= target && d > 0.0 {
                    pick = i;
                    break;
                }
            }
            pick
        } else {
            (0..n)
                .find(|i| !chosen_idx.contains(i))
                .unwrap_or(0)
        };
        chosen_idx.push(next_idx);
        centroids.push(data[next_idx].clone());
        for (i, p) in data.iter().enumerate() {
            let d = dist2(p, centroids.last().expect("just pushed"));
            if d < d2[i] {
                d2[i] = d;
            }
        }
    }
    centroids
}

fn assign(data: &[Vec<f64>], centroids: &[Vec<f64>]) -> (Vec<usize>, f64) {
    let mut assignments = Vec::with_capacity(data.len());
    let mut objective = 0.0;
    for point in data {
        let (idx, d) = nearest(point, centroids);
        assignments.push(idx);
        objective += d;
    }
    (assignments, objective)
}

/// Lloyd iterations with k-means++ seeding. Deterministic for a fixed seed;
/// the objective never increases between iterations. An emptied cluster keeps
/// its previous centroid.
pub fn kmeans(
    data: &[Vec<f64>],
    k: usize,
    seed: u64,
    max_iters: usize,
    tol: f64,
) -> Result<KMeansFit, DiagnoseError> {
    let n = data.len();
    if k == 0 || k > n {
        return Err(DiagnoseError::InvalidK { k, n });
    }
    let dim = data[0].len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centroids = seed_centroids(data, k, &mut rng);

    let (mut assignments, mut objective) = assign(data, &centroids);
    let mut trace = vec![objective];
    let mut iterations = 1;

    while iterations < max_iters {
        // Update step: move each non-empty centroid to its members' mean.
        let mut sums = vec![vec![0.0f64; dim]; k];
        let mut counts = vec![0usize; k];
        for (point, &a) in data.iter().zip(&assignments) {
            counts[a] += 1;
            for (s, &x) in sums[a].iter_mut().zip(point) {
                *s += x;
            }
        }
        for (c, (sum, &count)) in centroids.iter_mut().zip(sums.iter().zip(&counts)) {
            if count > 0 {
                for (ci, &s) in c.iter_mut().zip(sum) {
                    *ci = s / count as f64;
                }
            }
        }

        let (new_assignments, new_objective) = assign(data, &centroids);
        trace.push(new_objective);
        iterations += 1;

        let stable = new_assignments == assignments;
        let improved = objective - new_objective;
        assignments = new_assignments;
        objective = new_objective;
        if stable || improved <= tol * objective.abs().max(f64::MIN_POSITIVE) {
            break;
        }
    }

    Ok(KMeansFit {
        assignments,
        centroids,
        objective,
        iterations,
        objective_trace: trace,
    })
}
