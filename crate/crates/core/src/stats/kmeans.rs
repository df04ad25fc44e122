//! Lloyd's k-means with k-means++ seeding.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Result, StatsError};

pub const MAX_ITERATIONS: usize = 300;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterModel {
    pub k: usize,
    pub centroids: Vec<Vec<f64>>,
    /// Cluster index per input point.
    pub assignments: Vec<usize>,
    /// Sum of squared distances to the assigned centroid.
    pub inertia: f64,
    pub iterations: usize,
    /// Inertia after seeding, then after every Lloyd iteration.
    pub inertia_trace: Vec<f64>,
}

impl ClusterModel {
    pub fn cluster_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &a in &self.assignments {
            sizes[a] += 1;
        }
        sizes
    }
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Nearest centroid; ties go to the lower index.
fn nearest(p: &[f64], centroids: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (j, c) in centroids.iter().enumerate() {
        let d = sq_dist(p, c);
        if d < best.1 {
            best = (j, d);
        }
    }
    best
}

fn assign(points: &[Vec<f64>], centroids: &[Vec<f64>]) -> (Vec<usize>, f64) {
    let mut inertia = 0.0;
    let labels = points
        .iter()
        .map(|p| {
            let (j, d) = nearest(p, centroids);
            inertia += d;
            j
        })
        .collect();
    (labels, inertia)
}

fn seed_centroids(points: &[Vec<f64>], k: usize, rng: &mut impl Rng) -> Vec<Vec<f64>> {
    let n = points.len();
    let mut centroids = vec![points[rng.random_range(0..n)].clone()];
    let mut d2: Vec<f64> = points.iter().map(|p| sq_dist(p, &centroids[0])).collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut chosen = n - 1;
            for (i, w) in d2.iter().enumerate() {
                if target < *w {
                    chosen = i;
                    break;
                }
                target -= w;
            }
            chosen
        } else {
            rng.random_range(0..n)
        };
        let c = points[pick].clone();
        for (i, p) in points.iter().enumerate() {
            d2[i] = d2[i].min(sq_dist(p, &c));
        }
        centroids.push(c);
    }
    centroids
}

/// Clusters `points` into `k` groups. Deterministic for a given seed.
pub fn kmeans(points: &[Vec<f64>], k: usize, seed: u64) -> Result<ClusterModel> {
    let n = points.len();
    if k == 0 || n < k {
        return Err(StatsError::TooFewPoints { n, k });
    }
    let dim = points[0].len();
    for (i, p) in points.iter().enumerate() {
        if p.len() != dim {
            return Err(StatsError::RaggedPoints);
        }
        if p.iter().any(|x| !x.is_finite()) {
            return Err(StatsError::NonFinitePoint(i));
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centroids = seed_centroids(points, k, &mut rng);
    let (mut labels, mut inertia) = assign(points, &centroids);
    let mut trace = vec![inertia];
    let mut iterations = 0;

    while iterations < MAX_ITERATIONS {
        iterations += 1;
        let mut sums = vec![vec![0.0; dim]; k];
        let mut sizes = vec![0usize; k];
        for (p, &l) in points.iter().zip(&labels) {
            sizes[l] += 1;
            for (s, x) in sums[l].iter_mut().zip(p) {
                *s += x;
            }
        }
        for j in 0..k {
            // an emptied cluster keeps its previous centroid
            if sizes[j] > 0 {
                centroids[j] = sums[j].iter().map(|s| s / sizes[j] as f64).collect();
            }
        }
        let (next, next_inertia) = assign(points, &centroids);
        let changed = next != labels;
        labels = next;
        inertia = next_inertia;
        trace.push(inertia);
        if !changed {
            break;
        }
    }

    Ok(ClusterModel {
        k,
        centroids,
        assignments: labels,
        inertia,
        iterations,
        inertia_trace: trace,
    })
}

/// Per-column z-scores; constant columns map to zero.
pub fn standardize(points: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let Some(first) = points.first() else {
        return Vec::new();
    };
    let n = points.len() as f64;
    let dim = first.len();
    let mut out = points.to_vec();
    for j in 0..dim {
        let mean = points.iter().map(|p| p[j]).sum::<f64>() / n;
        let sd = (points.iter().map(|p| (p[j] - mean).powi(2)).sum::<f64>() / n).sqrt();
        for row in out.iter_mut() {
            row[j] = if sd > 1e-12 { (row[j] - mean) / sd } else { 0.0 };
        }
    }
    out
}
