//! Rating-prediction error and the unsupervised clustering study: seeded
//! k-means over item representations and the pooled within-cluster
//! sum-of-distances score (WCSS).

use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};

use crate::data::DatasetView;
use crate::error::{Error, Result};
use crate::model::Predictor;
use crate::rng::SplitMix64;

/// Root mean squared error over (actual, predicted) pairs.
pub fn rmse(pairs: &[(f64, f64)]) -> Result<f64> {
    if pairs.is_empty() {
        return Err(Error::EmptyEvaluation);
    }
    let mut sse = 0.0;
    for &(actual, predicted) in pairs {
        if !actual.is_finite() || !predicted.is_finite() {
            return Err(Error::NonFinite {
                what: format!("rmse input pair ({actual}, {predicted})"),
            });
        }
        let e = actual - predicted;
        sse += e * e;
    }
    Ok((sse / pairs.len() as f64).sqrt())
}

/// Test RMSE of a predictor over a view.
pub fn rmse_over(view: &DatasetView, model: &impl Predictor) -> Result<f64> {
    let mut pairs = Vec::with_capacity(view.len());
    for t in view.iter() {
        pairs.push((t.rating, model.predict(t.user as usize, t.item as usize)?));
    }
    rmse(&pairs)
}

/// Distance convention for the pooled within-cluster score. The pairwise
/// formula reads on plain Euclidean distances; the squared mode (which makes
/// the pooled score coincide with the centroid inertia) is kept behind this
/// switch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DistanceMode {
    Euclidean,
    Squared,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterResult {
    pub k: usize,
    /// Point index -> cluster index in `[0, k)`.
    pub assignments: Vec<usize>,
    pub centroids: Vec<Vec<f64>>,
    /// Pooled within-cluster sum of pairwise Euclidean distances, each
    /// cluster normalized by `2 n_r`.
    pub wcss: f64,
    /// Within-cluster sum of squared distances to centroids (the objective
    /// minimized across restarts).
    pub inertia: f64,
    pub restarts_used: usize,
    pub seed: u64,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = 0.0;
    for (x, y) in a.iter().zip(b) {
        let d = x - y;
        acc += d * d;
    }
    acc
}

/// Pooled within-cluster sum of pairwise distances:
/// `sum_r 1/(2 n_r) sum_{i,j in C_r} d(i, j)`, the double sum counting each
/// unordered pair twice.
pub fn wcss(points: ArrayView2<'_, f64>, assignments: &[usize], k: usize, mode: DistanceMode) -> f64 {
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); k];
    for (idx, &c) in assignments.iter().enumerate() {
        members[c].push(idx);
    }
    let mut total = 0.0;
    for cluster in &members {
        let n_r = cluster.len();
        if n_r == 0 {
            continue;
        }
        let mut pair_sum = 0.0;
        for (a, &i) in cluster.iter().enumerate() {
            for &j in &cluster[a + 1..] {
                let d2 = sq_dist(
                    points.row(i).as_slice().unwrap(),
                    points.row(j).as_slice().unwrap(),
                );
                let d = match mode {
                    DistanceMode::Euclidean => d2.sqrt(),
                    DistanceMode::Squared => d2,
                };
                pair_sum += 2.0 * d;
            }
        }
        total += pair_sum / (2.0 * n_r as f64);
    }
    total
}

struct LloydOutcome {
    assignments: Vec<usize>,
    centroids: Vec<Vec<f64>>,
    inertia: f64,
}

/// One k-means run: k-means++ seeding then Lloyd iterations to an assignment
/// fixed point. An emptied cluster is re-seeded at the point farthest from
/// its assigned centroid.
fn lloyd_run(points: ArrayView2<'_, f64>, k: usize, rng: &mut SplitMix64, max_iters: usize) -> LloydOutcome {
    let m = points.nrows();
    let d = points.ncols();

    // k-means++ seeding: first centroid uniform, then proportional to the
    // squared distance to the nearest chosen centroid.
    let mut centroids: Vec<Vec<f64>> = Vec::with_capacity(k);
    let first = rng.next_below(m as u64) as usize;
    centroids.push(points.row(first).to_vec());
    let mut d2 = vec![0.0f64; m];
    while centroids.len() < k {
        let mut total = 0.0;
        for i in 0..m {
            let mut best = f64::INFINITY;
            for c in &centroids {
                best = best.min(sq_dist(points.row(i).as_slice().unwrap(), c));
            }
            d2[i] = best;
            total += best;
        }
        let chosen = if total > 0.0 {
            let target = rng.next_f64() * total;
            let mut acc = 0.0;
            let mut pick = m - 1;
            for (i, &w) in d2.iter().enumerate() {
                acc += w;
                if acc > target {
                    pick = i;
                    break;
                }
            }
            pick
        } else {
            // All remaining mass is zero (duplicate points); any index works.
            rng.next_below(m as u64) as usize
        };
        centroids.push(points.row(chosen).to_vec());
    }

    let mut assignments = vec![0usize; m];
    let mut counts = vec![0usize; k];
    for _iter in 0..max_iters {
        // Assignment step; nearest centroid, ties to the lower index.
        let mut changed = false;
        for i in 0..m {
            let row = points.row(i);
            let row = row.as_slice().unwrap();
            let mut best = 0usize;
            let mut best_d = f64::INFINITY;
            for (c, centroid) in centroids.iter().enumerate() {
                let dist = sq_dist(row, centroid);
                if dist < best_d {
                    best_d = dist;
                    best = c;
                }
            }
            if assignments[i] != best {
                assignments[i] = best;
                changed = true;
            }
        }

        // Re-seed empty clusters at the farthest point from its centroid.
        counts.fill(0);
        for &c in &assignments {
            counts[c] += 1;
        }
        let mut reseeded = false;
        let mut taken: Vec<usize> = Vec::new();
        for c in 0..k {
            if counts[c] > 0 {
                continue;
            }
            let mut far_idx = None;
            let mut far_d = -1.0;
            for i in 0..m {
                if taken.contains(&i) || counts[assignments[i]] <= 1 {
                    continue;
                }
                let dist = sq_dist(
                    points.row(i).as_slice().unwrap(),
                    &centroids[assignments[i]],
                );
                if dist > far_d {
                    far_d = dist;
                    far_idx = Some(i);
                }
            }
            if let Some(i) = far_idx {
                counts[assignments[i]] -= 1;
                assignments[i] = c;
                counts[c] += 1;
                taken.push(i);
                reseeded = true;
            }
        }

        if !changed && !reseeded {
            break;
        }

        // Update step: centroid = mean of its members.
        for c in centroids.iter_mut() {
            c.iter_mut().for_each(|v| *v = 0.0);
        }
        for (i, &c) in assignments.iter().enumerate() {
            let row = points.row(i);
            for (dst, &v) in centroids[c].iter_mut().zip(row.iter()) {
                *dst += v;
            }
        }
        for (c, centroid) in centroids.iter_mut().enumerate() {
            if counts[c] > 0 {
                centroid.iter_mut().for_each(|v| *v /= counts[c] as f64);
            }
        }
        let _ = d;
    }

    let mut inertia = 0.0;
    for (i, &c) in assignments.iter().enumerate() {
        inertia += sq_dist(points.row(i).as_slice().unwrap(), &centroids[c]);
    }
    LloydOutcome {
        assignments,
        centroids,
        inertia,
    }
}

/// Seeded k-means with restarts. Points are rows. Each restart draws its own
/// generator from a seed list produced by `SplitMix64::new(seed)`, so the
/// result is deterministic in (seed, restarts) and restarts are independent;
/// ties on the objective keep the earliest restart.
pub fn kmeans(
    points: ArrayView2<'_, f64>,
    k: usize,
    seed: u64,
    restarts: usize,
    max_iters: usize,
) -> Result<ClusterResult> {
    let m = points.nrows();
    if k == 0 || k > m {
        return Err(Error::Config(format!(
            "k must be in [1, {m}], got {k} for {m} points"
        )));
    }
    if restarts == 0 || max_iters == 0 {
        return Err(Error::Config(
            "restarts and max_iters must be at least 1".into(),
        ));
    }
    let mut seeder = SplitMix64::new(seed);
    let restart_seeds: Vec<u64> = (0..restarts).map(|_| seeder.next_u64()).collect();

    let mut best: Option<LloydOutcome> = None;
    for rs in restart_seeds {
        let mut rng = SplitMix64::new(rs);
        let outcome = lloyd_run(points, k, &mut rng, max_iters);
        let better = match &best {
            None => true,
            Some(b) => outcome.inertia < b.inertia,
        };
        if better {
            best = Some(outcome);
        }
    }
    let best = best.expect("at least one restart");
    let score = wcss(points, &best.assignments, k, DistanceMode::Euclidean);
    Ok(ClusterResult {
        k,
        assignments: best.assignments,
        centroids: best.centroids,
        wcss: score,
        inertia: best.inertia,
        restarts_used: restarts,
        seed,
    })
}
