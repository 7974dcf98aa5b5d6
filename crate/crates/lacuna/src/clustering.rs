//! K-means on the primary index diagram, silhouette analysis and per-patient
//! medians.
//!
//! Everything here is deterministic: k-means++ seeding draws from a ChaCha8
//! stream derived from the configured seed, ties resolve to the lowest
//! cluster id, and restart selection is (inertia, restart index) minimal, so
//! results are bit-identical across runs, platforms and parallelism degrees.

use crate::indices::IndexRecord;
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use rayon::prelude::*;
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ClusteringError {
    #[error("k-means needs at least k = {k} points, got {n}")]
    TooFewPoints { n: usize, k: usize },
    #[error("invalid k-means config: {0}")]
    InvalidConfig(String),
    #[error("silhouette is undefined with fewer than two clusters present")]
    SingleCluster,
    #[error("assignments length {got} does not match point count {expected}")]
    AssignmentLength { got: usize, expected: usize },
    #[error("k range [{lo}, {hi}] is not within [2, {max}]")]
    InvalidKRange { lo: usize, hi: usize, max: usize },
}

/// One point of the primary index diagram: coordinates (tau, eta).
#[derive(Debug, Clone, PartialEq)]
pub struct DiagramPoint {
    pub eta: f64,
    pub tau: f64,
    pub patient_id: String,
    pub image_id: String,
}

impl DiagramPoint {
    #[inline]
    fn coords(&self) -> (f64, f64) {
        (self.tau, self.eta)
    }
}

impl From<&IndexRecord> for DiagramPoint {
    fn from(rec: &IndexRecord) -> Self {
        Self {
            eta: rec.eta,
            tau: rec.tau,
            patient_id: rec.patient_id.clone(),
            image_id: rec.image_id.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KMeansConfig {
    pub k: usize,
    pub seed: u64,
    pub restarts: usize,
    pub max_iters: usize,
    /// Convergence threshold on the largest centroid shift per iteration.
    pub tol: f64,
}

impl Default for KMeansConfig {
    fn default() -> Self {
        Self {
            k: 2,
            seed: 0,
            restarts: 10,
            max_iters: 300,
            tol: 1e-6,
        }
    }
}

impl KMeansConfig {
    fn validate(&self) -> Result<(), ClusteringError> {
        if self.k < 2 {
            return Err(ClusteringError::InvalidConfig(format!(
                "k must be >= 2, got {}",
                self.k
            )));
        }
        if self.restarts < 1 {
            return Err(ClusteringError::InvalidConfig("restarts must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterResult {
    pub assignments: Vec<usize>,
    pub centroids: Vec<(f64, f64)>,
    pub inertia: f64,
    pub silhouette_mean: f64,
    pub silhouette_per_point: Vec<f64>,
}

#[inline]
fn dist2(a: (f64, f64), b: (f64, f64)) -> f64 {
    let (dx, dy) = (a.0 - b.0, a.1 - b.1);
    dx * dx + dy * dy
}

/// Uniform f64 in [0, 1) from the raw stream (platform-independent).
#[inline]
fn unit_f64(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64
}

fn kmeans_plusplus(coords: &[(f64, f64)], k: usize, rng: &mut ChaCha8Rng) -> Vec<(f64, f64)> {
    let n = coords.len();
    let first = (rng.next_u64() % n as u64) as usize;
    let mut centroids = vec![coords[first]];
    let mut d2: Vec<f64> = coords.iter().map(|&p| dist2(p, coords[first])).collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let target = unit_f64(rng) * total;
            let mut acc = 0.0;
            let mut chosen = n - 1;
            for (i, &w) in d2.iter().enumerate() {
                acc += w;
                if acc > target {
                    chosen = i;
                    break;
                }
            }
            chosen
        } else {
            (rng.next_u64() % n as u64) as usize
        };
        let c = coords[next];
        centroids.push(c);
        for (i, &p) in coords.iter().enumerate() {
            let d = dist2(p, c);
            if d < d2[i] {
                d2[i] = d;
            }
        }
    }
    centroids
}

fn assign(coords: &[(f64, f64)], centroids: &[(f64, f64)], out: &mut Vec<usize>) {
    out.clear();
    for &p in coords {
        let mut best = 0usize;
        let mut best_d = f64::INFINITY;
        for (cid, &c) in centroids.iter().enumerate() {
            let d = dist2(p, c);
            // Strict < keeps the lowest cluster id on ties.
            if d < best_d {
                best_d = d;
                best = cid;
            }
        }
        out.push(best);
    }
}

fn inertia_of(coords: &[(f64, f64)], centroids: &[(f64, f64)], assignments: &[usize]) -> f64 {
    coords
        .iter()
        .zip(assignments)
        .map(|(&p, &a)| dist2(p, centroids[a]))
        .sum()
}

fn lloyd(coords: &[(f64, f64)], k: usize, cfg: &KMeansConfig, seed: u64) -> (Vec<usize>, Vec<(f64, f64)>, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centroids = kmeans_plusplus(coords, k, &mut rng);
    let mut assignments = Vec::with_capacity(coords.len());

    #[cfg(debug_assertions)]
    let mut prev_inertia = f64::INFINITY;

    for _ in 0..cfg.max_iters {
        assign(coords, &centroids, &mut assignments);

        #[cfg(debug_assertions)]
        {
            let cur = inertia_of(coords, &centroids, &assignments);
            debug_assert!(
                cur <= prev_inertia * (1.0 + 1e-12) + 1e-12,
                "Lloyd iteration increased inertia: {prev_inertia} -> {cur}"
            );
            prev_inertia = cur;
        }

        // Means per cluster.
        let mut sums = vec![(0.0f64, 0.0f64); k];
        let mut counts = vec![0usize; k];
        for (&p, &a) in coords.iter().zip(&assignments) {
            sums[a].0 += p.0;
            sums[a].1 += p.1;
            counts[a] += 1;
        }
        let mut new_centroids = centroids.clone();
        for cid in 0..k {
            if counts[cid] > 0 {
                new_centroids[cid] = (sums[cid].0 / counts[cid] as f64, sums[cid].1 / counts[cid] as f64);
            }
        }

        // Empty clusters: reseed at the point farthest from its assigned
        // centroid (ties -> lowest point index), one point per empty slot.
        let mut used: Vec<usize> = Vec::new();
        for cid in 0..k {
            if counts[cid] > 0 {
                continue;
            }
            let mut far_idx = usize::MAX;
            let mut far_d = -1.0;
            for (i, &p) in coords.iter().enumerate() {
                if used.contains(&i) {
                    continue;
                }
                let d = dist2(p, new_centroids[assignments[i]]);
                if d > far_d {
                    far_d = d;
                    far_idx = i;
                }
            }
            if far_idx != usize::MAX {
                new_centroids[cid] = coords[far_idx];
                used.push(far_idx);
            }
        }

        let shift = centroids
            .iter()
            .zip(&new_centroids)
            .map(|(&a, &b)| dist2(a, b).sqrt())
            .fold(0.0f64, f64::max);
        centroids = new_centroids;
        if shift <= cfg.tol {
            break;
        }
    }

    // Final assignment so every point sits at its nearest centroid.
    assign(coords, &centroids, &mut assignments);
    let inertia = inertia_of(coords, &centroids, &assignments);
    (assignments, centroids, inertia)
}

/// Lloyd's algorithm with k-means++ initialisation and deterministic
/// restarts; returns the restart with minimal inertia (ties: lowest restart
/// index).
pub fn kmeans_fit(points: &[DiagramPoint], cfg: &KMeansConfig) -> Result<ClusterResult, ClusteringError> {
    cfg.validate()?;
    if points.len() < cfg.k {
        return Err(ClusteringError::TooFewPoints {
            n: points.len(),
            k: cfg.k,
        });
    }
    let coords: Vec<(f64, f64)> = points.iter().map(|p| p.coords()).collect();

    let mut master = ChaCha8Rng::seed_from_u64(cfg.seed);
    let restart_seeds: Vec<u64> = (0..cfg.restarts).map(|_| master.next_u64()).collect();

    let runs: Vec<(Vec<usize>, Vec<(f64, f64)>, f64)> = restart_seeds
        .par_iter()
        .map(|&seed| lloyd(&coords, cfg.k, cfg, seed))
        .collect();
    let best = runs
        .into_iter()
        .enumerate()
        .min_by(|(ia, a), (ib, b)| a.2.total_cmp(&b.2).then(ia.cmp(ib)))
        .expect("restarts >= 1");
    let (assignments, centroids, inertia) = best.1;

    let clusters_present = {
        let mut seen = vec![false; cfg.k];
        for &a in &assignments {
            seen[a] = true;
        }
        seen.iter().filter(|&&s| s).count()
    };
    let silhouette_per_point = if clusters_present >= 2 {
        silhouette_from_coords(&coords, &assignments)?
    } else {
        // Degenerate fit (e.g. all points identical): silhouettes are 0.
        vec![0.0; coords.len()]
    };
    let silhouette_mean = if silhouette_per_point.is_empty() {
        0.0
    } else {
        silhouette_per_point.iter().sum::<f64>() / silhouette_per_point.len() as f64
    };

    Ok(ClusterResult {
        assignments,
        centroids,
        inertia,
        silhouette_mean,
        silhouette_per_point,
    })
}

fn silhouette_from_coords(
    coords: &[(f64, f64)],
    assignments: &[usize],
) -> Result<Vec<f64>, ClusteringError> {
    if assignments.len() != coords.len() {
        return Err(ClusteringError::AssignmentLength {
            got: assignments.len(),
            expected: coords.len(),
        });
    }
    let k = assignments.iter().copied().max().map_or(0, |m| m + 1);
    let mut sizes = vec![0usize; k];
    for &a in assignments {
        sizes[a] += 1;
    }
    if sizes.iter().filter(|&&s| s > 0).count() < 2 {
        return Err(ClusteringError::SingleCluster);
    }

    let n = coords.len();
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let own = assignments[i];
        if sizes[own] <= 1 {
            out.push(0.0);
            continue;
        }
        // Mean distance to every cluster.
        let mut sums = vec![0.0f64; k];
        for j in 0..n {
            if j == i {
                continue;
            }
            sums[assignments[j]] += dist2(coords[i], coords[j]).sqrt();
        }
        let a = sums[own] / (sizes[own] - 1) as f64;
        let mut b = f64::INFINITY;
        for cid in 0..k {
            if cid == own || sizes[cid] == 0 {
                continue;
            }
            let mean = sums[cid] / sizes[cid] as f64;
            if mean < b {
                b = mean;
            }
        }
        let denom = a.max(b);
        out.push(if denom > 0.0 { (b - a) / denom } else { 0.0 });
    }
    Ok(out)
}

/// Per-point silhouette values `s(i) = (b - a) / max(a, b)` with Euclidean
/// distance on (tau, eta); points in singleton clusters get 0.
pub fn silhouette_samples(
    points: &[DiagramPoint],
    assignments: &[usize],
) -> Result<Vec<f64>, ClusteringError> {
    let coords: Vec<(f64, f64)> = points.iter().map(|p| p.coords()).collect();
    silhouette_from_coords(&coords, assignments)
}

/// Silhouette scan across cluster counts.
#[derive(Debug, Clone, PartialEq)]
pub struct SilhouetteScan {
    /// (k, mean silhouette) per scanned k, ascending in k.
    pub rows: Vec<(usize, f64)>,
    /// Argmax k (ties -> lowest k).
    pub best_k: usize,
}

/// Fit every k in `[k_lo, k_hi]` and score it by mean silhouette.
pub fn silhouette_scan(
    points: &[DiagramPoint],
    k_lo: usize,
    k_hi: usize,
    cfg: &KMeansConfig,
) -> Result<SilhouetteScan, ClusteringError> {
    let max = points.len().saturating_sub(1);
    if k_lo < 2 || k_hi < k_lo || k_hi > max {
        return Err(ClusteringError::InvalidKRange {
            lo: k_lo,
            hi: k_hi,
            max,
        });
    }
    let mut rows = Vec::with_capacity(k_hi - k_lo + 1);
    for k in k_lo..=k_hi {
        let result = kmeans_fit(points, &KMeansConfig { k, ..*cfg })?;
        rows.push((k, result.silhouette_mean));
    }
    let best_k = rows
        .iter()
        .copied()
        .max_by(|a, b| a.1.total_cmp(&b.1).then(b.0.cmp(&a.0)))
        .map(|(k, _)| k)
        .expect("non-empty range");
    Ok(SilhouetteScan { rows, best_k })
}

/// Component-wise median of (tau, eta) per patient, sorted by patient id.
///
/// Even counts take the mean of the two middle values. The emitted points
/// carry `image_id = "median"`.
pub fn patient_medians(points: &[DiagramPoint]) -> Vec<DiagramPoint> {
    let mut groups: BTreeMap<&str, (Vec<f64>, Vec<f64>)> = BTreeMap::new();
    for p in points {
        let entry = groups.entry(&p.patient_id).or_default();
        entry.0.push(p.tau);
        entry.1.push(p.eta);
    }
    groups
        .into_iter()
        .map(|(patient, (mut taus, mut etas))| {
            let tau = median_in_place(&mut taus);
            let eta = median_in_place(&mut etas);
            DiagramPoint {
                eta,
                tau,
                patient_id: patient.to_string(),
                image_id: "median".to_string(),
            }
        })
        .collect()
}

fn median_in_place(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        (values[n / 2 - 1] + values[n / 2]) / 2.0
    }
}

/// Deterministic 4-blob generator used by tests and examples: Gaussian-ish
/// blobs via Box-Muller on the ChaCha stream.
pub fn gaussian_blobs(
    centers: &[(f64, f64)],
    per_blob: usize,
    sigma: f64,
    seed: u64,
) -> (Vec<DiagramPoint>, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points = Vec::with_capacity(centers.len() * per_blob);
    let mut labels = Vec::with_capacity(centers.len() * per_blob);
    for (bi, &(cx, cy)) in centers.iter().enumerate() {
        for i in 0..per_blob {
            let (u1, u2) = (unit_f64(&mut rng).max(1e-12), unit_f64(&mut rng));
            let r = (-2.0 * u1.ln()).sqrt();
            let (gx, gy) = (
                r * (2.0 * std::f64::consts::PI * u2).cos(),
                r * (2.0 * std::f64::consts::PI * u2).sin(),
            );
            points.push(DiagramPoint {
                tau: cx + sigma * gx,
                eta: cy + sigma * gy,
                patient_id: format!("blob{bi}"),
                image_id: format!("{i}"),
            });
            labels.push(bi);
        }
    }
    (points, labels)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn point(tau: f64, eta: f64) -> DiagramPoint {
        DiagramPoint {
            eta,
            tau,
            patient_id: "p".into(),
            image_id: "i".into(),
        }
    }

    #[test]
    fn separable_duplicates() {
        let mut pts = Vec::new();
        for _ in 0..5 {
            pts.push(point(0.0, 0.0));
            pts.push(point(1.0, 1.0));
        }
        let result = kmeans_fit(&pts, &KMeansConfig { k: 2, ..Default::default() }).unwrap();
        assert_eq!(result.inertia, 0.0);
        let mut centroids = result.centroids.clone();
        centroids.sort_by(|a, b| a.0.total_cmp(&b.0));
        assert_eq!(centroids, vec![(0.0, 0.0), (1.0, 1.0)]);
        // All silhouettes are 1: a = 0, b > 0.
        assert!(result.silhouette_per_point.iter().all(|&s| s == 1.0));
    }

    #[test]
    fn k_equals_n_gives_zero_inertia() {
        let pts: Vec<DiagramPoint> = (0..6)
            .map(|i| point(i as f64 * 0.1, (5 - i) as f64 * 0.13))
            .collect();
        let result = kmeans_fit(&pts, &KMeansConfig { k: 6, ..Default::default() }).unwrap();
        assert!(result.inertia < 1e-30, "inertia = {}", result.inertia);
    }

    #[test]
    fn too_few_points_errors() {
        let pts = vec![point(0.0, 0.0)];
        assert!(matches!(
            kmeans_fit(&pts, &KMeansConfig { k: 2, ..Default::default() }),
            Err(ClusteringError::TooFewPoints { n: 1, k: 2 })
        ));
    }

    #[test]
    fn blob_recovery() {
        let centers = [(0.2, 0.2), (0.2, 0.8), (0.8, 0.2), (0.8, 0.8)];
        let (pts, labels) = gaussian_blobs(&centers, 50, 0.02, 99);
        let result = kmeans_fit(&pts, &KMeansConfig { k: 4, seed: 7, ..Default::default() }).unwrap();
        let agreement = best_label_agreement(&labels, &result.assignments, 4);
        assert!(agreement >= 0.99, "agreement = {agreement}");
    }

    /// Brute-force label matching over all k! permutations.
    pub(super) fn best_label_agreement(truth: &[usize], got: &[usize], k: usize) -> f64 {
        fn permutations(k: usize) -> Vec<Vec<usize>> {
            fn rec(k: usize, used: &mut [bool], cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
                if cur.len() == k {
                    out.push(cur.clone());
                    return;
                }
                for i in 0..k {
                    if !used[i] {
                        used[i] = true;
                        cur.push(i);
                        rec(k, used, cur, out);
                        cur.pop();
                        used[i] = false;
                    }
                }
            }
            let mut out = Vec::new();
            rec(k, &mut vec![false; k], &mut Vec::new(), &mut out);
            out
        }
        let mut best = 0usize;
        for perm in permutations(k) {
            let matches = truth
                .iter()
                .zip(got)
                .filter(|&(&t, &g)| perm[t] == g)
                .count();
            best = best.max(matches);
        }
        best as f64 / truth.len() as f64
    }

    #[test]
    fn silhouette_hand_example() {
        let pts = vec![
            point(0.0, 0.0),
            point(0.1, 0.0),
            point(10.0, 0.0),
            point(10.2, 0.0),
        ];
        let s = silhouette_samples(&pts, &[0, 0, 1, 1]).unwrap();
        let expect = (10.1 - 0.1) / 10.1;
        assert!((s[0] - expect).abs() < 1e-12, "s0 = {}", s[0]);
    }

    #[test]
    fn silhouette_identical_points_in_two_clusters() {
        let pts = vec![
            point(0.0, 0.0),
            point(0.0, 0.0),
            point(1.0, 1.0),
            point(1.0, 1.0),
        ];
        let s = silhouette_samples(&pts, &[0, 0, 1, 1]).unwrap();
        assert!(s.iter().all(|&v| v == 1.0));
    }

    #[test]
    fn silhouette_equidistant_is_zero() {
        let pts = vec![
            point(0.0, 0.0),
            point(-2.0, 0.0),
            point(2.0, 0.0),
            point(2.0, 0.0),
        ];
        // Point 0 sits exactly between its own mate and the other cluster.
        let s = silhouette_samples(&pts, &[0, 0, 1, 1]).unwrap();
        assert!(s[0].abs() <= 1e-12);
    }

    #[test]
    fn silhouette_singleton_cluster_gets_zero() {
        let pts = vec![point(0.0, 0.0), point(1.0, 0.0), point(1.1, 0.0)];
        let s = silhouette_samples(&pts, &[0, 1, 1]).unwrap();
        assert_eq!(s[0], 0.0);
    }

    #[test]
    fn silhouette_single_cluster_errors() {
        let pts = vec![point(0.0, 0.0), point(1.0, 0.0)];
        assert_eq!(
            silhouette_samples(&pts, &[0, 0]),
            Err(ClusteringError::SingleCluster)
        );
    }

    #[test]
    fn silhouette_bounds_and_mean() {
        let (pts, _) = gaussian_blobs(&[(0.2, 0.3), (0.7, 0.6)], 40, 0.08, 3);
        let result = kmeans_fit(&pts, &KMeansConfig { k: 3, seed: 1, ..Default::default() }).unwrap();
        assert!(result
            .silhouette_per_point
            .iter()
            .all(|&s| (-1.0..=1.0).contains(&s)));
        let mean = result.silhouette_per_point.iter().sum::<f64>()
            / result.silhouette_per_point.len() as f64;
        assert_eq!(mean, result.silhouette_mean);
    }

    #[test]
    fn assignment_optimality_after_convergence() {
        let (pts, _) = gaussian_blobs(&[(0.1, 0.1), (0.9, 0.9), (0.1, 0.9)], 30, 0.05, 17);
        let result = kmeans_fit(&pts, &KMeansConfig { k: 3, seed: 5, ..Default::default() }).unwrap();
        for (i, p) in pts.iter().enumerate() {
            let own = dist2(p.coords(), result.centroids[result.assignments[i]]);
            for &c in &result.centroids {
                assert!(own <= dist2(p.coords(), c) + 1e-15);
            }
        }
    }

    #[test]
    fn scan_picks_four_blobs() {
        let centers = [(0.2, 0.2), (0.2, 0.8), (0.8, 0.2), (0.8, 0.8)];
        let (pts, _) = gaussian_blobs(&centers, 50, 0.02, 123);
        let scan = silhouette_scan(&pts, 3, 6, &KMeansConfig { seed: 11, ..Default::default() }).unwrap();
        assert_eq!(scan.best_k, 4);
        assert_eq!(scan.rows.len(), 4);

        let (two, _) = gaussian_blobs(&[(0.2, 0.2), (0.8, 0.8)], 60, 0.02, 5);
        let scan = silhouette_scan(&two, 2, 4, &KMeansConfig { seed: 11, ..Default::default() }).unwrap();
        assert_eq!(scan.best_k, 2);
    }

    #[test]
    fn scan_rejects_bad_range() {
        let (pts, _) = gaussian_blobs(&[(0.2, 0.2), (0.8, 0.8)], 3, 0.02, 5);
        assert!(silhouette_scan(&pts, 1, 3, &KMeansConfig::default()).is_err());
        assert!(silhouette_scan(&pts, 2, 6, &KMeansConfig::default()).is_err());
    }

    #[test]
    fn fit_is_deterministic() {
        let (pts, _) = gaussian_blobs(&[(0.3, 0.3), (0.7, 0.7)], 50, 0.05, 8);
        let cfg = KMeansConfig { k: 2, seed: 42, ..Default::default() };
        let a = kmeans_fit(&pts, &cfg).unwrap();
        let b = kmeans_fit(&pts, &cfg).unwrap();
        assert_eq!(a, b);
        for (x, y) in a.centroids.iter().zip(&b.centroids) {
            assert_eq!(x.0.to_bits(), y.0.to_bits());
            assert_eq!(x.1.to_bits(), y.1.to_bits());
        }
    }

    #[test]
    fn medians_component_wise() {
        let mk = |pid: &str, tau: f64, eta: f64| DiagramPoint {
            eta,
            tau,
            patient_id: pid.into(),
            image_id: "x".into(),
        };
        let pts = vec![
            mk("b", 0.1, 0.1),
            mk("b", 0.3, 0.5),
            mk("b", 0.2, 0.9),
            mk("a", 0.4, 0.6),
        ];
        let medians = patient_medians(&pts);
        assert_eq!(medians.len(), 2);
        assert_eq!(medians[0].patient_id, "a");
        assert_eq!(medians[0].tau, 0.4);
        assert_eq!(medians[1].patient_id, "b");
        assert_eq!(medians[1].tau, 0.2);
        assert_eq!(medians[1].eta, 0.5);

        // Even count: mean of the two middle values.
        let pts = vec![mk("c", 0.1, 0.0), mk("c", 0.2, 0.0), mk("c", 0.6, 0.0), mk("c", 0.9, 0.0)];
        let medians = patient_medians(&pts);
        assert_eq!(medians[0].tau, 0.4);
    }
}
