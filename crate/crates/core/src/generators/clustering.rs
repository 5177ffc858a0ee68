//! K-Means, DBSCAN and flat-kernel Mean Shift on 2-D points.

use rand::Rng;

use super::GenError;
use crate::geometry::Point2D;
use crate::seed::Seed;

const KMEANS_MAX_ITER: usize = 100;
const KMEANS_TOL: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansResult {
    pub labels: Vec<i64>,
    pub centers: Vec<Point2D>,
    /// Within-cluster sum of squares after each assignment step.
    pub inertia: Vec<f64>,
    pub iterations: usize,
}

fn sq(a: &Point2D, b: &Point2D) -> f64 {
    (a.x - b.x).powi(2) + (a.y - b.y).powi(2)
}

fn nearest(p: &Point2D, centers: &[Point2D]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (j, c) in centers.iter().enumerate() {
        let d = sq(p, c);
        if d < best.1 {
            best = (j, d);
        }
    }
    best
}

fn plus_plus_init(points: &[Point2D], k: usize, rng: &mut impl Rng) -> Vec<Point2D> {
    let mut centers = vec![points[rng.random_range(0..points.len())]];
    let mut d2: Vec<f64> = points.iter().map(|p| sq(p, &centers[0])).collect();
    while centers.len() < k {
        let total: f64 = d2.iter().sum();
        let idx = if total <= 0.0 {
            rng.random_range(0..points.len())
        } else {
            let mut r = rng.random::<f64>() * total;
            let mut pick = points.len() - 1;
            for (i, &d) in d2.iter().enumerate() {
                if r < d {
                    pick = i;
                    break;
                }
                r -= d;
            }
            pick
        };
        let c = points[idx];
        for (i, p) in points.iter().enumerate() {
            d2[i] = d2[i].min(sq(p, &c));
        }
        centers.push(c);
    }
    centers
}

pub fn kmeans(points: &[Point2D], k: usize, seed: Seed) -> Result<Vec<i64>, GenError> {
    Ok(kmeans_with_history(points, k, seed)?.labels)
}

/// Lloyd's algorithm with k-means++ seeding.
pub fn kmeans_with_history(points: &[Point2D], k: usize, seed: Seed) -> Result<KMeansResult, GenError> {
    if k == 0 {
        return Err(GenError::InvalidParam("k must be at least 1".into()));
    }
    if points.len() < k {
        return Err(GenError::InvalidParam(format!("{} points cannot form {k} clusters", points.len())));
    }
    let mut rng = seed.rng();
    let mut centers = plus_plus_init(points, k, &mut rng);
    let mut labels = vec![0i64; points.len()];
    let mut inertia = Vec::new();
    let mut iterations = 0;
    for _ in 0..KMEANS_MAX_ITER {
        iterations += 1;
        let mut total = 0.0;
        for (i, p) in points.iter().enumerate() {
            let (j, d) = nearest(p, &centers);
            labels[i] = j as i64;
            total += d;
        }
        inertia.push(total);

        let mut sums = vec![(0.0, 0.0, 0usize); k];
        for (p, &l) in points.iter().zip(&labels) {
            let s = &mut sums[l as usize];
            s.0 += p.x;
            s.1 += p.y;
            s.2 += 1;
        }
        let mut shift: f64 = 0.0;
        for (c, s) in centers.iter_mut().zip(&sums) {
            if s.2 == 0 {
                continue;
            }
            let next = Point2D::new(s.0 / s.2 as f64, s.1 / s.2 as f64);
            shift = shift.max(c.distance(&next));
            *c = next;
        }
        if shift < KMEANS_TOL {
            break;
        }
    }
    // final assignment against the converged centers
    for (i, p) in points.iter().enumerate() {
        labels[i] = nearest(p, &centers).0 as i64;
    }
    Ok(KMeansResult {
        labels,
        centers,
        inertia,
        iterations,
    })
}

/// DBSCAN. A point is core when at least `min_samples` points (itself
/// included) lie within `eps`. Noise is labelled `-1`.
pub fn dbscan(points: &[Point2D], eps: f64, min_samples: usize) -> Result<Vec<i64>, GenError> {
    if !(eps > 0.0) {
        return Err(GenError::InvalidParam(format!("eps must be positive, got {eps}")));
    }
    if min_samples == 0 {
        return Err(GenError::InvalidParam("min_samples must be positive".into()));
    }
    let n = points.len();
    let eps2 = eps * eps;
    let neighbours: Vec<Vec<usize>> = (0..n)
        .map(|i| (0..n).filter(|&j| sq(&points[i], &points[j]) <= eps2).collect())
        .collect();
    let core: Vec<bool> = neighbours.iter().map(|nb| nb.len() >= min_samples).collect();
    let mut labels = vec![-1i64; n];
    let mut next = 0i64;
    for start in 0..n {
        if labels[start] != -1 || !core[start] {
            continue;
        }
        labels[start] = next;
        let mut stack = vec![start];
        while let Some(i) = stack.pop() {
            for &j in &neighbours[i] {
                if labels[j] == -1 {
                    labels[j] = next;
                    if core[j] {
                        stack.push(j);
                    }
                }
            }
        }
        next += 1;
    }
    Ok(labels)
}

/// Flat-kernel mean shift seeded from every point. Converged modes closer
/// than `bandwidth / 2` are merged, better-supported modes first, and each
/// point takes the label of its nearest surviving mode.
pub fn mean_shift(points: &[Point2D], bandwidth: f64) -> Result<Vec<i64>, GenError> {
    if !(bandwidth > 0.0) {
        return Err(GenError::InvalidParam(format!("bandwidth must be positive, got {bandwidth}")));
    }
    if points.is_empty() {
        return Ok(Vec::new());
    }
    let bw2 = bandwidth * bandwidth;
    let stop = 1e-3 * bandwidth;
    let mut modes: Vec<(Point2D, usize)> = Vec::with_capacity(points.len());
    for p in points {
        let mut m = *p;
        let mut support = 0;
        for _ in 0..300 {
            let (mut sx, mut sy, mut c) = (0.0, 0.0, 0usize);
            for q in points {
                if sq(&m, q) <= bw2 {
                    sx += q.x;
                    sy += q.y;
                    c += 1;
                }
            }
            support = c;
            if c == 0 {
                break;
            }
            let next = Point2D::new(sx / c as f64, sy / c as f64);
            let moved = m.distance(&next);
            m = next;
            if moved < stop {
                break;
            }
        }
        modes.push((m, support));
    }
    let mut order: Vec<usize> = (0..modes.len()).collect();
    order.sort_by(|&a, &b| modes[b].1.cmp(&modes[a].1).then(a.cmp(&b)));
    let mut kept: Vec<Point2D> = Vec::new();
    for i in order {
        let m = modes[i].0;
        if kept.iter().all(|k| k.distance(&m) >= bandwidth / 2.0) {
            kept.push(m);
        }
    }
    Ok(points.iter().map(|p| nearest(p, &kept).0 as i64).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_distr::{Distribution, Normal};
    use std::collections::HashMap;

    fn two_blobs(seed: u64, sep: f64, std: f64) -> (Vec<Point2D>, Vec<i64>) {
        let mut rng = Seed(seed).rng();
        let noise = Normal::new(0.0, std).unwrap();
        let mut pts = Vec::new();
        let mut truth = Vec::new();
        for (label, cx) in [(0i64, 0.0), (1, sep)] {
            for _ in 0..50 {
                pts.push(Point2D::new(cx + noise.sample(&mut rng), noise.sample(&mut rng)));
                truth.push(label);
            }
        }
        (pts, truth)
    }

    /// True when `a` and `b` induce the same partition.
    fn same_partition(a: &[i64], b: &[i64]) -> bool {
        let mut fwd = HashMap::new();
        let mut back = HashMap::new();
        a.iter().zip(b).all(|(x, y)| *fwd.entry(x).or_insert(y) == y && *back.entry(y).or_insert(x) == x)
    }

    #[test]
    fn kmeans_single_cluster() {
        let (pts, _) = two_blobs(1, 10.0, 1.0);
        assert!(kmeans(&pts, 1, Seed(0)).unwrap().iter().all(|&l| l == 0));
        assert!(kmeans(&pts[..2], 3, Seed(0)).is_err());
    }

    #[test]
    fn kmeans_recovers_separated_blobs() {
        for s in 0..10 {
            let (pts, truth) = two_blobs(s, 10.0, 1.0);
            let r = kmeans_with_history(&pts, 2, Seed(s)).unwrap();
            assert!(same_partition(&r.labels, &truth));
            assert!(r.inertia.windows(2).all(|w| w[1] <= w[0] + 1e-9), "{:?}", r.inertia);
        }
    }

    #[test]
    fn dbscan_cases() {
        let same = vec![Point2D::new(1.0, 1.0); 12];
        assert!(dbscan(&same, 0.5, 5).unwrap().iter().all(|&l| l == 0));
        let eps = 0.5;
        let (pts, truth) = two_blobs(3, 20.0 * eps * 2.0, 0.05);
        let labels = dbscan(&pts, eps, 4).unwrap();
        assert!(labels.iter().all(|&l| l >= 0));
        assert!(same_partition(&labels, &truth));
        assert!(dbscan(&pts, 0.0, 3).is_err());
    }

    #[test]
    fn dbscan_marks_isolated_noise() {
        let mut pts = vec![Point2D::new(0.0, 0.0); 5];
        pts.push(Point2D::new(100.0, 100.0));
        let labels = dbscan(&pts, 1.0, 3).unwrap();
        assert_eq!(labels[5], -1);
        assert!(labels[..5].iter().all(|&l| l == 0));
    }

    #[test]
    fn mean_shift_cases() {
        let (pts, _) = two_blobs(4, 0.0, 0.3);
        assert!(mean_shift(&pts, 50.0).unwrap().iter().all(|&l| l == 0));
        let (pts, truth) = two_blobs(5, 10.0, 0.5);
        let labels = mean_shift(&pts, 3.0).unwrap();
        assert!(same_partition(&labels, &truth));
        assert!(mean_shift(&pts, -1.0).is_err());
    }
}
