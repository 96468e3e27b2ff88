use rand::seq::index::sample;
use serde::{Deserialize, Serialize};

use crate::scenario::RandomSource;

/// Predicted demand of one user in one sub-period: the request distribution
/// and the power a UAV saves per content if that content is cached.
#[derive(Debug, Clone, PartialEq)]
pub struct CacheDemand {
    pub probs: Vec<f64>,
    pub saving_w: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct CachePlan {
    /// Cached contents, sorted and distinct.
    pub contents: Vec<usize>,
    /// Expected saving of each cached content, aligned with `contents`.
    pub expected_saving_w: Vec<f64>,
}

impl CachePlan {
    pub fn total_saving_w(&self) -> f64 {
        self.expected_saving_w.iter().sum()
    }
}

/// Power saved by serving from cache instead of through the wireless
/// fronthaul, with both powers capped at the UAV maximum.
pub fn power_saving(uncached_w: f64, cached_w: f64, max_w: f64) -> f64 {
    (uncached_w.min(max_w) - cached_w.min(max_w)).max(0.0)
}

/// Σ p[n]·ΔP[n] over every demand, per content.
pub fn content_scores(demands: &[CacheDemand], contents: usize) -> Vec<f64> {
    let mut s = vec![0.0; contents];
    for d in demands {
        for n in 0..contents {
            s[n] += d.probs.get(n).copied().unwrap_or(0.0) * d.saving_w.get(n).copied().unwrap_or(0.0);
        }
    }
    s
}

fn plan_from(mut chosen: Vec<usize>, scores: &[f64]) -> CachePlan {
    chosen.sort_unstable();
    let expected_saving_w = chosen.iter().map(|&n| scores[n]).collect();
    CachePlan { contents: chosen, expected_saving_w }
}

/// The expected saving is additive over cached contents, so the best cache
/// is the `capacity` highest-scoring contents. Ties go to the lower id.
pub fn select_cache(demands: &[CacheDemand], contents: usize, capacity: usize) -> CachePlan {
    let scores = content_scores(demands, contents);
    let mut order: Vec<usize> = (0..contents).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    order.truncate(capacity.min(contents));
    plan_from(order, &scores)
}

/// Brute force over every subset of size `min(capacity, contents)`; the
/// first best subset in lexicographic order wins.
pub fn exhaustive_cache(demands: &[CacheDemand], contents: usize, capacity: usize) -> CachePlan {
    let scores = content_scores(demands, contents);
    let c = capacity.min(contents);
    let mut best: Option<(f64, Vec<usize>)> = None;
    let mut subset: Vec<usize> = (0..c).collect();
    loop {
        let total: f64 = subset.iter().map(|&n| scores[n]).sum();
        if best.as_ref().is_none_or(|(b, _)| total > *b) {
            best = Some((total, subset.clone()));
        }
        // Next combination in lexicographic order.
        let mut i = c;
        while i > 0 && subset[i - 1] == contents - c + i - 1 {
            i -= 1;
        }
        if i == 0 {
            break;
        }
        subset[i - 1] += 1;
        for j in i..c {
            subset[j] = subset[j - 1] + 1;
        }
    }
    plan_from(best.map(|(_, s)| s).unwrap_or_default(), &scores)
}

/// `capacity` contents drawn uniformly without replacement.
pub fn random_cache(demands: &[CacheDemand], contents: usize, capacity: usize, rs: &RandomSource) -> CachePlan {
    let scores = content_scores(demands, contents);
    let chosen = sample(&mut rs.rng(), contents, capacity.min(contents)).into_vec();
    plan_from(chosen, &scores)
}
