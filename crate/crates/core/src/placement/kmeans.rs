use rand::Rng;

use crate::scenario::{Point2, RandomSource};

#[derive(Debug, Clone, PartialEq)]
pub struct Clustering {
    /// Cluster index per input point.
    pub labels: Vec<usize>,
    pub centroids: Vec<Point2>,
    /// Within-cluster sum of squares after every Lloyd iteration.
    pub sse: Vec<f64>,
}

impl Clustering {
    pub fn members(&self, cluster: usize) -> Vec<usize> {
        (0..self.labels.len()).filter(|&i| self.labels[i] == cluster).collect()
    }
}

fn nearest(p: Point2, centroids: &[Point2]) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (j, c) in centroids.iter().enumerate() {
        let d = p.dist2(*c);
        if d < best_d {
            best_d = d;
            best = j;
        }
    }
    best
}

fn sse(points: &[Point2], labels: &[usize], centroids: &[Point2]) -> f64 {
    points.iter().zip(labels).map(|(p, &l)| p.dist2(centroids[l])).sum()
}

/// k-means++ seeding.
fn seed_centroids(points: &[Point2], k: usize, rs: &RandomSource) -> Vec<Point2> {
    let mut rng = rs.rng();
    let mut centroids = vec![points[rng.gen_range(0..points.len())]];
    while centroids.len() < k {
        let d2: Vec<f64> =
            points.iter().map(|p| centroids.iter().map(|c| p.dist2(*c)).fold(f64::INFINITY, f64::min)).collect();
        let total: f64 = d2.iter().sum();
        if total <= 0.0 {
            // Every point coincides with a centroid; duplicates are fine.
            centroids.push(points[centroids.len() % points.len()]);
            continue;
        }
        let mut r = rng.gen::<f64>() * total;
        let mut pick = points.len() - 1;
        for (i, d) in d2.iter().enumerate() {
            if r < *d {
                pick = i;
                break;
            }
            r -= d;
        }
        centroids.push(points[pick]);
    }
    centroids
}

/// Lloyd's algorithm with k-means++ seeding, or warm-started from `init`
/// when it holds `k` centroids. Stops when assignments stop changing or
/// after `max_iterations`. An emptied cluster is reseeded with the point
/// farthest from its centroid. With fewer points than clusters every point
/// gets its own cluster and the surplus is dropped.
pub fn cluster_users(
    points: &[Point2],
    k: usize,
    init: Option<&[Point2]>,
    rs: &RandomSource,
    max_iterations: usize,
) -> Clustering {
    if points.is_empty() || k == 0 {
        return Clustering { labels: vec![0; points.len()], centroids: Vec::new(), sse: Vec::new() };
    }
    if points.len() <= k {
        return Clustering { labels: (0..points.len()).collect(), centroids: points.to_vec(), sse: vec![0.0] };
    }
    let mut centroids = match init {
        Some(c) if c.len() == k => c.to_vec(),
        _ => seed_centroids(points, k, rs),
    };
    let mut labels: Vec<usize> = points.iter().map(|p| nearest(*p, &centroids)).collect();
    let mut history = Vec::new();
    for _ in 0..max_iterations.max(1) {
        let mut sum = vec![(0.0, 0.0, 0usize); k];
        for (p, &l) in points.iter().zip(&labels) {
            sum[l].0 += p.x;
            sum[l].1 += p.y;
            sum[l].2 += 1;
        }
        for j in 0..k {
            if sum[j].2 > 0 {
                centroids[j] = Point2::new(sum[j].0 / sum[j].2 as f64, sum[j].1 / sum[j].2 as f64);
            }
        }
        for j in 0..k {
            if labels.contains(&j) {
                continue;
            }
            let counts = |labels: &[usize], c: usize| labels.iter().filter(|&&l| l == c).count();
            let far = (0..points.len())
                .filter(|&i| counts(&labels, labels[i]) > 1)
                .max_by(|&a, &b| {
                    points[a]
                        .dist2(centroids[labels[a]])
                        .total_cmp(&points[b].dist2(centroids[labels[b]]))
                        .then(b.cmp(&a))
                })
                .expect("more points than clusters");
            labels[far] = j;
            centroids[j] = points[far];
        }
        history.push(sse(points, &labels, &centroids));
        let next: Vec<usize> = points.iter().map(|p| nearest(*p, &centroids)).collect();
        if next == labels {
            break;
        }
        labels = next;
    }
    Clustering { labels, centroids, sse: history }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;

    fn cloud(center: Point2, n: usize, spread: f64, seed: u64) -> Vec<Point2> {
        let mut rng = RandomSource::new(seed).rng();
        (0..n)
            .map(|_| Point2::new(center.x + rng.gen_range(-spread..spread), center.y + rng.gen_range(-spread..spread)))
            .collect()
    }

    #[test]
    fn separated_clouds_recovered() {
        let mut pts = cloud(Point2::new(-200.0, 0.0), 15, 10.0, 1);
        pts.extend(cloud(Point2::new(200.0, 0.0), 15, 10.0, 2));
        let c = cluster_users(&pts, 2, None, &RandomSource::new(3), 100);
        let first = c.labels[0];
        assert!(c.labels[..15].iter().all(|&l| l == first));
        assert!(c.labels[15..].iter().all(|&l| l != first));
    }

    #[test]
    fn single_cluster_is_mean() {
        let pts = cloud(Point2::new(30.0, -40.0), 20, 50.0, 4);
        let c = cluster_users(&pts, 1, None, &RandomSource::new(5), 100);
        let mx = pts.iter().map(|p| p.x).sum::<f64>() / 20.0;
        let my = pts.iter().map(|p| p.y).sum::<f64>() / 20.0;
        assert!((c.centroids[0].x - mx).abs() < 1e-9 && (c.centroids[0].y - my).abs() < 1e-9);
    }

    #[test]
    fn fewer_points_than_clusters() {
        let pts = vec![Point2::new(0.0, 0.0), Point2::new(5.0, 5.0)];
        let c = cluster_users(&pts, 4, None, &RandomSource::new(1), 100);
        assert_eq!(c.labels, vec![0, 1]);
        assert_eq!(c.centroids.len(), 2);
    }

    #[test]
    fn warm_start_keeps_converged_solution() {
        let mut pts = cloud(Point2::new(-200.0, 0.0), 10, 10.0, 6);
        pts.extend(cloud(Point2::new(200.0, 0.0), 10, 10.0, 7));
        let a = cluster_users(&pts, 2, None, &RandomSource::new(8), 100);
        let b = cluster_users(&pts, 2, Some(&a.centroids), &RandomSource::new(99), 100);
        assert_eq!(a.labels, b.labels);
        assert_eq!(b.sse.len(), 1);
    }

    #[test]
    fn empty_cluster_reseeded() {
        let pts: Vec<Point2> = (0..6).map(|i| Point2::new(i as f64, 0.0)).collect();
        let init = [Point2::new(2.5, 0.0), Point2::new(1000.0, 1000.0)];
        let c = cluster_users(&pts, 2, Some(&init), &RandomSource::new(1), 100);
        assert!(c.labels.contains(&0) && c.labels.contains(&1));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn sse_nonincreasing(seed in 0u64..5000, n in 1usize..40, k in 1usize..6) {
            let pts = cloud(Point2::new(0.0, 0.0), n, 300.0, seed);
            let c = cluster_users(&pts, k, None, &RandomSource::new(seed + 1), 100);
            for w in c.sse.windows(2) {
                prop_assert!(w[1] <= w[0] + 1e-9 * w[0].max(1.0));
            }
            prop_assert_eq!(c.labels.len(), n);
            for j in 0..c.centroids.len() {
                prop_assert!(c.labels.contains(&j));
            }
        }
    }
}
