use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::color::LabPixel;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KMeansConfig {
    pub k: usize,
    pub seed: u64,
    pub max_iter: usize,
    /// Stop once no centroid moves farther than this (Lab units).
    pub tol: f64,
}

impl KMeansConfig {
    pub fn new(k: usize, seed: u64) -> Self {
        Self {
            k,
            seed,
            max_iter: 100,
            tol: 1e-4,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansResult {
    pub centroids: Vec<LabPixel>,
    pub assignments: Vec<usize>,
    /// Sum of squared distances of points to their assigned centroid.
    pub inertia: f64,
    pub iterations: usize,
    /// Inertia after every assignment step, ending with `inertia`.
    pub inertia_history: Vec<f64>,
}

impl KMeansResult {
    pub fn cluster_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.centroids.len()];
        for &a in &self.assignments {
            sizes[a] += 1;
        }
        sizes
    }
}

#[inline]
fn dist2(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    let d0 = a[0] - b[0];
    let d1 = a[1] - b[1];
    let d2 = a[2] - b[2];
    d0 * d0 + d1 * d1 + d2 * d2
}

fn plus_plus_init(points: &[[f64; 3]], k: usize, rng: &mut ChaCha8Rng) -> Vec<[f64; 3]> {
    let mut centroids = Vec::with_capacity(k);
    centroids.push(points[rng.random_range(0..points.len())]);
    let mut d2: Vec<f64> = points.iter().map(|p| dist2(p, &centroids[0])).collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut pick = points.len() - 1;
            for (i, &d) in d2.iter().enumerate() {
                if target < d {
                    pick = i;
                    break;
                }
                target -= d;
            }
            pick
        } else {
            // Fewer distinct points than k; duplicates end up as empty clusters.
            rng.random_range(0..points.len())
        };
        let c = points[next];
        for (d, p) in d2.iter_mut().zip(points) {
            *d = d.min(dist2(p, &c));
        }
        centroids.push(c);
    }
    centroids
}

/// Nearest centroid per point (ties to the lowest index) and the total inertia.
fn assign(points: &[[f64; 3]], centroids: &[[f64; 3]], out: &mut [usize]) -> f64 {
    let mut inertia = 0.0;
    for (p, a) in points.iter().zip(out.iter_mut()) {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (j, c) in centroids.iter().enumerate() {
            let d = dist2(p, c);
            if d < best_d {
                best_d = d;
                best = j;
            }
        }
        *a = best;
        inertia += best_d;
    }
    inertia
}

/// Lloyd's algorithm from a seeded k-means++ start. Empty clusters keep
/// their previous centroid, which keeps the inertia sequence non-increasing.
pub fn kmeans(points: &[LabPixel], cfg: &KMeansConfig) -> Result<KMeansResult> {
    let k = cfg.k;
    if points.is_empty() {
        return Err(Error::InvalidK("no points to cluster".into()));
    }
    if k == 0 || k > points.len() {
        return Err(Error::InvalidK(format!("k must be in 1..={}, got {k}", points.len())));
    }
    let pts: Vec<[f64; 3]> = points.iter().map(|p| p.to_array()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut centroids = plus_plus_init(&pts, k, &mut rng);
    let mut assignments = vec![0usize; pts.len()];
    let mut history = Vec::new();
    let mut iterations = 0;

    while iterations < cfg.max_iter.max(1) {
        history.push(assign(&pts, &centroids, &mut assignments));
        iterations += 1;

        let mut sums = vec![[0.0f64; 3]; k];
        let mut counts = vec![0usize; k];
        for (p, &a) in pts.iter().zip(&assignments) {
            counts[a] += 1;
            for c in 0..3 {
                sums[a][c] += p[c];
            }
        }
        let mut shift: f64 = 0.0;
        for j in 0..k {
            if counts[j] == 0 {
                continue;
            }
            let n = counts[j] as f64;
            let next = [sums[j][0] / n, sums[j][1] / n, sums[j][2] / n];
            shift = shift.max(dist2(&next, &centroids[j]).sqrt());
            centroids[j] = next;
        }
        if shift < cfg.tol {
            break;
        }
    }
    let inertia = assign(&pts, &centroids, &mut assignments);
    history.push(inertia);
    Ok(KMeansResult {
        centroids: centroids.into_iter().map(LabPixel::from_array).collect(),
        assignments,
        inertia,
        iterations,
        inertia_history: history,
    })
}
