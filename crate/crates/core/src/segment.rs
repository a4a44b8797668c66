//! k-means clustering and lesion segmentation in L\*a\*b\* space.

use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::colorspace::LabImage;
use crate::raster::BinaryMask;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SegmentError {
    #[error("cluster count must be at least 1")]
    BadK,
    #[error("k-means needs at least k = {k} points, got {n}")]
    TooFewPoints { n: usize, k: usize },
    #[error("max_iter must be >= 1 and tol >= 0 (got {max_iter}, {tol})")]
    BadParameters { max_iter: usize, tol: f64 },
    #[error("point data length {len} is not a multiple of dimension {dim}")]
    BadShape { len: usize, dim: usize },
}

/// `n` points of dimension `dim`, stored contiguously.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSet {
    dim: usize,
    data: Vec<f64>,
}

impl PointSet {
    pub fn new(dim: usize, data: Vec<f64>) -> Result<Self, SegmentError> {
        if dim == 0 || !data.len().is_multiple_of(dim) {
            return Err(SegmentError::BadShape { len: data.len(), dim });
        }
        Ok(Self { dim, data })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self, SegmentError> {
        let dim = rows.first().map_or(1, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * dim);
        for r in rows {
            let r = r.as_ref();
            if r.len() != dim {
                return Err(SegmentError::BadShape { len: r.len(), dim });
            }
            data.extend_from_slice(r);
        }
        Self::new(dim, data)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn point(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }
}

#[inline]
pub fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

#[derive(Debug, Clone, PartialEq)]
pub struct KmeansResult {
    /// `k` centroids, each of the input dimension.
    pub centroids: Vec<Vec<f64>>,
    pub assignments: Vec<usize>,
    /// Within-cluster sum of squared distances for the final assignment.
    pub objective: f64,
    pub iterations: usize,
    /// Objective after each assign/update round, ending with the final value.
    pub objective_trace: Vec<f64>,
    pub converged: bool,
}

/// Sum of squared distances from each point to its assigned centroid.
pub fn kmeans_objective(points: &PointSet, centroids: &[Vec<f64>], assignments: &[usize]) -> f64 {
    assignments
        .iter()
        .enumerate()
        .map(|(i, &c)| squared_distance(points.point(i), &centroids[c]))
        .sum()
}

/// Index of the nearest centroid; ties go to the lowest index.
#[inline]
pub fn nearest_centroid(point: &[f64], centroids: &[Vec<f64>]) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (j, c) in centroids.iter().enumerate() {
        let d = squared_distance(point, c);
        if d < best_d {
            best_d = d;
            best = j;
        }
    }
    best
}

fn plus_plus_init(points: &PointSet, k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let n = points.len();
    let mut centroids = Vec::with_capacity(k);
    centroids.push(points.point(rng.gen_range(0..n)).to_vec());
    let mut d2: Vec<f64> = (0..n).map(|i| squared_distance(points.point(i), &centroids[0])).collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let target = rng.gen::<f64>() * total;
            let mut acc = 0.0;
            let mut chosen = None;
            for (i, &w) in d2.iter().enumerate() {
                if w <= 0.0 {
                    continue;
                }
                acc += w;
                chosen = Some(i);
                if acc > target {
                    break;
                }
            }
            chosen.expect("positive total weight has a positive entry")
        } else {
            rng.gen_range(0..n)
        };
        let c = points.point(pick).to_vec();
        for (i, d) in d2.iter_mut().enumerate() {
            *d = d.min(squared_distance(points.point(i), &c));
        }
        centroids.push(c);
    }
    centroids
}

fn assign(points: &PointSet, centroids: &[Vec<f64>], labels: &mut [usize]) -> usize {
    let mut changes = 0;
    for (i, label) in labels.iter_mut().enumerate() {
        let best = nearest_centroid(points.point(i), centroids);
        if *label != best {
            *label = best;
            changes += 1;
        }
    }
    changes
}

/// Moves the point farthest from its own centroid into each empty cluster.
fn repair_empty(points: &PointSet, centroids: &mut [Vec<f64>], labels: &mut [usize]) {
    let k = centroids.len();
    let mut counts = vec![0usize; k];
    for &l in labels.iter() {
        counts[l] += 1;
    }
    for e in 0..k {
        if counts[e] > 0 {
            continue;
        }
        let mut far = None;
        let mut far_d = -1.0;
        for (i, &l) in labels.iter().enumerate() {
            if counts[l] < 2 {
                continue;
            }
            let d = squared_distance(points.point(i), &centroids[l]);
            if d > far_d {
                far_d = d;
                far = Some(i);
            }
        }
        let Some(i) = far else { break };
        counts[labels[i]] -= 1;
        labels[i] = e;
        counts[e] = 1;
        centroids[e] = points.point(i).to_vec();
    }
}

fn cluster_means(points: &PointSet, labels: &[usize], previous: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let k = previous.len();
    let dim = points.dim();
    let mut sums = vec![vec![0.0; dim]; k];
    let mut counts = vec![0usize; k];
    for (i, &l) in labels.iter().enumerate() {
        counts[l] += 1;
        for (s, v) in sums[l].iter_mut().zip(points.point(i)) {
            *s += v;
        }
    }
    sums.into_iter()
        .zip(counts)
        .zip(previous)
        .map(|((mut s, c), prev)| {
            if c == 0 {
                return prev.clone();
            }
            for v in &mut s {
                *v /= c as f64;
            }
            s
        })
        .collect()
}

/// Lloyd's algorithm with k-means++ seeding.
///
/// Stops when an assignment round changes nothing, when no centroid moves
/// by `tol` or more, or after `max_iter` rounds. A last assignment pass
/// then makes every label point at its nearest centroid.
pub fn kmeans(
    points: &PointSet,
    k: usize,
    seed: u64,
    max_iter: usize,
    tol: f64,
) -> Result<KmeansResult, SegmentError> {
    if k == 0 {
        return Err(SegmentError::BadK);
    }
    let n = points.len();
    if n < k {
        return Err(SegmentError::TooFewPoints { n, k });
    }
    if max_iter == 0 || !(tol >= 0.0) {
        return Err(SegmentError::BadParameters { max_iter, tol });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centroids = plus_plus_init(points, k, &mut rng);
    let mut labels = vec![usize::MAX; n];
    let mut trace = Vec::new();
    let mut iterations = 0;
    let mut converged = false;

    while iterations < max_iter {
        iterations += 1;
        let changes = assign(points, &centroids, &mut labels);
        repair_empty(points, &mut centroids, &mut labels);
        let updated = cluster_means(points, &labels, &centroids);
        let shift = updated
            .iter()
            .zip(&centroids)
            .map(|(a, b)| libm::sqrt(squared_distance(a, b)))
            .fold(0.0, f64::max);
        centroids = updated;
        trace.push(kmeans_objective(points, &centroids, &labels));
        if changes == 0 || shift < tol {
            converged = true;
            break;
        }
    }

    if assign(points, &centroids, &mut labels) > 0 {
        trace.push(kmeans_objective(points, &centroids, &labels));
    }
    let objective = kmeans_objective(points, &centroids, &labels);
    Ok(KmeansResult {
        centroids,
        assignments: labels,
        objective,
        iterations,
        objective_trace: trace,
        converged,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClusterFeatures {
    /// Cluster on (a\*, b\*) only.
    #[default]
    Chroma,
    /// Cluster on (L\*, a\*, b\*).
    Full,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SegmentConfig {
    pub k: usize,
    pub seed: u64,
    pub max_iter: usize,
    pub tol: f64,
    pub features: ClusterFeatures,
}

impl Default for SegmentConfig {
    fn default() -> Self {
        Self {
            k: 3,
            seed: 42,
            max_iter: 100,
            tol: 1e-6,
            features: ClusterFeatures::Chroma,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClusterStats {
    pub count: usize,
    pub mean_l: f64,
    pub mean_a: f64,
    pub mean_b: f64,
}

impl ClusterStats {
    /// Redness plus half the lightness; reddish or pale regions score high.
    pub fn lesion_score(&self) -> f64 {
        self.mean_a + self.mean_l / 2.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SegmentationResult {
    pub width: usize,
    pub height: usize,
    pub label_map: Vec<usize>,
    pub cluster_stats: Vec<ClusterStats>,
    pub infected_cluster: usize,
    pub mask: BinaryMask,
    pub objective: f64,
    pub iterations: usize,
}

/// Highest [`ClusterStats::lesion_score`] among nonempty clusters, lowest
/// index on ties. Returns 0 when no cluster has pixels.
pub fn select_infected_cluster(stats: &[ClusterStats]) -> usize {
    let mut best = 0;
    let mut best_score = f64::NEG_INFINITY;
    for (i, s) in stats.iter().enumerate() {
        if s.count == 0 {
            continue;
        }
        let score = s.lesion_score();
        if score > best_score {
            best_score = score;
            best = i;
        }
    }
    best
}

pub fn segment_lab_image(image: &LabImage, config: &SegmentConfig) -> Result<SegmentationResult, SegmentError> {
    let (dim, data): (usize, Vec<f64>) = match config.features {
        ClusterFeatures::Chroma => (2, image.pixels().iter().flat_map(|p| [p.a, p.b]).collect()),
        ClusterFeatures::Full => (3, image.pixels().iter().flat_map(|p| [p.l, p.a, p.b]).collect()),
    };
    let points = PointSet::new(dim, data)?;
    let result = kmeans(&points, config.k, config.seed, config.max_iter, config.tol)?;

    let mut sums = vec![[0.0f64; 3]; config.k];
    let mut counts = vec![0usize; config.k];
    for (p, &l) in image.pixels().iter().zip(&result.assignments) {
        counts[l] += 1;
        sums[l][0] += p.l;
        sums[l][1] += p.a;
        sums[l][2] += p.b;
    }
    let cluster_stats: Vec<ClusterStats> = sums
        .iter()
        .zip(&counts)
        .map(|(s, &c)| {
            let d = if c == 0 { 1.0 } else { c as f64 };
            ClusterStats { count: c, mean_l: s[0] / d, mean_a: s[1] / d, mean_b: s[2] / d }
        })
        .collect();
    let infected_cluster = select_infected_cluster(&cluster_stats);
    let bits = result.assignments.iter().map(|&l| l == infected_cluster).collect();
    let mask = BinaryMask::new(image.width(), image.height(), bits).expect("one label per pixel");
    Ok(SegmentationResult {
        width: image.width(),
        height: image.height(),
        label_map: result.assignments,
        cluster_stats,
        infected_cluster,
        mask,
        objective: result.objective,
        iterations: result.iterations,
    })
}
