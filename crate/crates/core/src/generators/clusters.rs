use std::collections::BTreeMap;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::clustering::{dbscan, kmeans, mean_shift};
use super::GenError;
use crate::geometry::{BoundingBox, Interval, Point2D};
use crate::seed::Seed;
use crate::stats::percentile;

const MAX_CENTER_DRAWS: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClusterAlgorithm {
    Kmeans,
    MeanShift,
    Dbscan,
    None,
}

impl ClusterAlgorithm {
    pub const ALL: [ClusterAlgorithm; 4] = [
        ClusterAlgorithm::Kmeans,
        ClusterAlgorithm::MeanShift,
        ClusterAlgorithm::Dbscan,
        ClusterAlgorithm::None,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            ClusterAlgorithm::Kmeans => "kmeans",
            ClusterAlgorithm::MeanShift => "mean_shift",
            ClusterAlgorithm::Dbscan => "dbscan",
            ClusterAlgorithm::None => "none",
        }
    }

    /// Human label used in feature tables.
    pub fn display_name(&self) -> &'static str {
        match self {
            ClusterAlgorithm::Kmeans => "K-Means",
            ClusterAlgorithm::MeanShift => "Mean Shift",
            ClusterAlgorithm::Dbscan => "DBSCAN",
            ClusterAlgorithm::None => "One Cluster",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterMetadata {
    pub points: Vec<Point2D>,
    pub true_labels: Vec<i64>,
    pub centers: Vec<Point2D>,
    pub stds: Vec<f64>,
    pub n_clusters: usize,
    pub samples_per_cluster: Vec<usize>,
    pub algorithm: ClusterAlgorithm,
    pub algorithm_params: BTreeMap<String, f64>,
    pub displayed_labels: Vec<i64>,
    pub biggest_label: i64,
}

impl ClusterMetadata {
    pub fn validate(&self) -> Result<(), GenError> {
        let n = self.points.len();
        if self.true_labels.len() != n || self.displayed_labels.len() != n {
            return Err(GenError::Invariant("label arrays must match point count".into()));
        }
        if self.centers.len() != self.n_clusters || self.stds.len() != self.n_clusters {
            return Err(GenError::Invariant("one center and std per cluster".into()));
        }
        if self.samples_per_cluster.iter().sum::<usize>() != n {
            return Err(GenError::Invariant("samples_per_cluster must sum to point count".into()));
        }
        if biggest_label(&self.true_labels) != self.biggest_label {
            return Err(GenError::Invariant("biggest_label is not the largest true cluster".into()));
        }
        Ok(())
    }

    pub fn cluster_points(&self, label: i64) -> impl Iterator<Item = &Point2D> {
        self.points
            .iter()
            .zip(&self.true_labels)
            .filter(move |(_, &l)| l == label)
            .map(|(p, _)| p)
    }

    /// Minimal axis-aligned box of each true cluster, in label order.
    pub fn cluster_boxes(&self) -> Vec<BoundingBox> {
        (0..self.n_clusters as i64)
            .map(|l| BoundingBox::enclosing(self.cluster_points(l)).expect("every cluster has points"))
            .collect()
    }

    pub fn biggest_box(&self) -> BoundingBox {
        BoundingBox::enclosing(self.cluster_points(self.biggest_label)).expect("biggest cluster has points")
    }

    /// Number of distinct colour groups in the rendered plot, noise excluded.
    pub fn displayed_groups(&self) -> usize {
        let mut seen: Vec<i64> = self.displayed_labels.iter().copied().filter(|&l| l >= 0).collect();
        seen.sort_unstable();
        seen.dedup();
        seen.len()
    }
}

/// The label with the most points, lowest label on ties.
pub fn biggest_label(labels: &[i64]) -> i64 {
    let mut counts: BTreeMap<i64, usize> = BTreeMap::new();
    for &l in labels {
        *counts.entry(l).or_default() += 1;
    }
    let mut best = (i64::MAX, 0usize);
    for (l, c) in counts {
        if c > best.1 {
            best = (l, c);
        }
    }
    best.0
}

/// Isotropic Gaussian blobs around centers drawn uniformly in `bbox`,
/// pairwise at least `1.5 * max(stds)` apart. No clustering is applied:
/// `displayed_labels` equals `true_labels`.
pub fn gen_blobs(
    seed: Seed,
    n_clusters: usize,
    samples: &[usize],
    stds: &[f64],
    bbox: BoundingBox,
) -> Result<ClusterMetadata, GenError> {
    if !(2..=7).contains(&n_clusters) {
        return Err(GenError::InvalidParam(format!("n_clusters must be in [2, 7], got {n_clusters}")));
    }
    if samples.len() != n_clusters || stds.len() != n_clusters {
        return Err(GenError::InvalidParam("need one sample count and std per cluster".into()));
    }
    if samples.contains(&0) {
        return Err(GenError::InvalidParam("every cluster needs at least one point".into()));
    }
    if stds.iter().any(|s| !(*s >= 0.0) || !s.is_finite()) {
        return Err(GenError::InvalidParam("stds must be finite and non-negative".into()));
    }
    let min_sep = 1.5 * stds.iter().cloned().fold(0.0, f64::max);
    let mut rng = seed.child("blobs.centers").rng();
    let mut centers: Vec<Point2D> = Vec::with_capacity(n_clusters);
    let mut draws = 0;
    while centers.len() < n_clusters {
        if draws == MAX_CENTER_DRAWS {
            return Err(GenError::Unsatisfiable(format!(
                "could not place {n_clusters} centers {min_sep:.3} apart in {MAX_CENTER_DRAWS} draws"
            )));
        }
        draws += 1;
        let c = Point2D::new(
            rng.random_range(bbox.x.lo()..=bbox.x.hi()),
            rng.random_range(bbox.y.lo()..=bbox.y.hi()),
        );
        if centers.iter().all(|o| o.distance(&c) >= min_sep) {
            centers.push(c);
        }
    }

    let mut rng = seed.child("blobs.points").rng();
    let total: usize = samples.iter().sum();
    let mut points = Vec::with_capacity(total);
    let mut true_labels = Vec::with_capacity(total);
    for (label, ((c, &m), &s)) in centers.iter().zip(samples).zip(stds).enumerate() {
        for _ in 0..m {
            let dx: f64 = StandardNormal.sample(&mut rng);
            let dy: f64 = StandardNormal.sample(&mut rng);
            points.push(Point2D::new(c.x + s * dx, c.y + s * dy));
            true_labels.push(label as i64);
        }
    }
    let biggest = biggest_label(&true_labels);
    Ok(ClusterMetadata {
        displayed_labels: true_labels.clone(),
        points,
        true_labels,
        centers,
        stds: stds.to_vec(),
        n_clusters,
        samples_per_cluster: samples.to_vec(),
        algorithm: ClusterAlgorithm::None,
        algorithm_params: BTreeMap::new(),
        biggest_label: biggest,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ClusterConfig {
    pub n_clusters: (usize, usize),
    pub samples: (usize, usize),
    pub stds: (f64, f64),
    pub bbox: BoundingBox,
    pub algorithms: Vec<ClusterAlgorithm>,
    pub kmeans_k: (usize, usize),
    pub dbscan_eps_factor: (f64, f64),
    pub dbscan_min_samples: (usize, usize),
    pub bandwidth_factor: (f64, f64),
}

impl Default for ClusterConfig {
    fn default() -> Self {
        let side = Interval::new(0.0, 100.0).unwrap();
        ClusterConfig {
            n_clusters: (2, 7),
            samples: (20, 100),
            stds: (0.5, 3.0),
            bbox: BoundingBox::new(side, side),
            algorithms: ClusterAlgorithm::ALL.to_vec(),
            kmeans_k: (2, 7),
            dbscan_eps_factor: (1.5, 3.0),
            dbscan_min_samples: (3, 10),
            bandwidth_factor: (0.8, 1.5),
        }
    }
}

fn median_nn_distance(points: &[Point2D]) -> f64 {
    let nn: Vec<f64> = points
        .iter()
        .enumerate()
        .map(|(i, p)| {
            points
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != i)
                .map(|(_, q)| p.distance(q))
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    percentile(&nn, 50.0)
}

/// Blobs with randomly drawn parameters, then one randomly chosen clustering
/// algorithm (or none) deciding the displayed colours.
pub fn gen_clusters(seed: Seed, cfg: &ClusterConfig) -> Result<ClusterMetadata, GenError> {
    if cfg.algorithms.is_empty() {
        return Err(GenError::InvalidParam("at least one clustering algorithm must be enabled".into()));
    }
    let mut rng = seed.child("clusters.params").rng();
    let n = rng.random_range(cfg.n_clusters.0..=cfg.n_clusters.1);
    let samples: Vec<usize> = (0..n).map(|_| rng.random_range(cfg.samples.0..=cfg.samples.1)).collect();
    let stds: Vec<f64> = (0..n).map(|_| rng.random_range(cfg.stds.0..=cfg.stds.1)).collect();
    let mut meta = gen_blobs(seed.child("clusters.blobs"), n, &samples, &stds, cfg.bbox)?;

    let algorithm = cfg.algorithms[rng.random_range(0..cfg.algorithms.len())];
    let mut params = BTreeMap::new();
    let labels = match algorithm {
        ClusterAlgorithm::Kmeans => {
            let k = rng.random_range(cfg.kmeans_k.0..=cfg.kmeans_k.1);
            params.insert("n_clusters".to_string(), k as f64);
            kmeans(&meta.points, k, seed.child("clusters.kmeans"))?
        }
        ClusterAlgorithm::Dbscan => {
            let eps = median_nn_distance(&meta.points)
                * rng.random_range(cfg.dbscan_eps_factor.0..=cfg.dbscan_eps_factor.1);
            let min_samples = rng.random_range(cfg.dbscan_min_samples.0..=cfg.dbscan_min_samples.1);
            params.insert("eps".to_string(), eps);
            params.insert("min_samples".to_string(), min_samples as f64);
            dbscan(&meta.points, eps.max(1e-9), min_samples)?
        }
        ClusterAlgorithm::MeanShift => {
            let mean_std = stds.iter().sum::<f64>() / n as f64;
            let bw = mean_std * rng.random_range(cfg.bandwidth_factor.0..=cfg.bandwidth_factor.1);
            params.insert("bandwidth".to_string(), bw);
            mean_shift(&meta.points, bw)?
        }
        ClusterAlgorithm::None => vec![0; meta.points.len()],
    };
    meta.algorithm = algorithm;
    meta.algorithm_params = params;
    meta.displayed_labels = labels;
    meta.validate()?;
    Ok(meta)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square() -> BoundingBox {
        let side = Interval::new(0.0, 100.0).unwrap();
        BoundingBox::new(side, side)
    }

    #[test]
    fn zero_std_points_sit_on_centers() {
        let m = gen_blobs(Seed(1), 3, &[5, 6, 7], &[0.0; 3], square()).unwrap();
        assert_eq!(m.points.len(), 18);
        for (p, &l) in m.points.iter().zip(&m.true_labels) {
            assert_eq!(*p, m.centers[l as usize]);
        }
        assert_eq!(m.biggest_label, 2);
        m.validate().unwrap();
    }

    #[test]
    fn cluster_means_near_centers() {
        for s in 0..10 {
            let stds = [0.5, 1.5, 3.0, 2.0];
            let samples = [40, 60, 80, 100];
            let m = gen_blobs(Seed(s), 4, &samples, &stds, square()).unwrap();
            for l in 0..4 {
                let pts: Vec<_> = m.cluster_points(l).collect();
                let mx = pts.iter().map(|p| p.x).sum::<f64>() / pts.len() as f64;
                let my = pts.iter().map(|p| p.y).sum::<f64>() / pts.len() as f64;
                let tol = 4.0 * stds[l as usize] / (samples[l as usize] as f64).sqrt();
                assert!((mx - m.centers[l as usize].x).abs() <= tol);
                assert!((my - m.centers[l as usize].y).abs() <= tol);
            }
            for i in 0..4 {
                for j in i + 1..4 {
                    assert!(m.centers[i].distance(&m.centers[j]) >= 4.5);
                }
            }
        }
    }

    #[test]
    fn tie_goes_to_lowest_label() {
        assert_eq!(biggest_label(&[1, 1, 0, 0, 2]), 0);
        let m = gen_blobs(Seed(3), 2, &[10, 10], &[1.0, 1.0], square()).unwrap();
        assert_eq!(m.biggest_label, 0);
    }

    #[test]
    fn separation_can_be_unsatisfiable() {
        let tiny = BoundingBox::new(Interval::new(0.0, 1.0).unwrap(), Interval::new(0.0, 1.0).unwrap());
        let r = gen_blobs(Seed(1), 7, &[5; 7], &[3.0; 7], tiny);
        assert!(matches!(r, Err(GenError::Unsatisfiable(_))));
        assert!(gen_blobs(Seed(1), 8, &[5; 8], &[1.0; 8], square()).is_err());
    }

    #[test]
    fn generated_configurations_cover_all_algorithms() {
        let cfg = ClusterConfig::default();
        let mut seen = std::collections::BTreeSet::new();
        for s in 0..40 {
            let m = gen_clusters(Seed(s), &cfg).unwrap();
            m.validate().unwrap();
            assert!((2..=7).contains(&m.n_clusters));
            seen.insert(m.algorithm);
            assert_eq!(m, gen_clusters(Seed(s), &cfg).unwrap());
        }
        assert_eq!(seen.len(), 4);
    }
}
