use serde::{Deserialize, Serialize};

use crate::qoe::target_delay;
use crate::scenario::ScenarioConfig;

/// A user that could be served by a terrestrial cluster, with its predicted
/// zero-forcing rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RrhCandidate {
    pub user: usize,
    /// Nearest cluster with room, or `None` when no cluster can take the
    /// user.
    pub cluster: Option<usize>,
    /// Predicted access rate C^H/Δτ (bit/s).
    pub rate_bps: f64,
    /// Device requirement δ_S (bit/s).
    pub device_req_bps: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct AssociationPlan {
    /// `(user, cluster)` pairs served by radio heads, sorted by user.
    pub rrh: Vec<(usize, usize)>,
    /// Users left for the UAVs, sorted.
    pub uav_pool: Vec<usize>,
}

impl AssociationPlan {
    /// N_FR, the number of users sharing the wired fronthaul.
    pub fn rrh_count(&self) -> usize {
        self.rrh.len()
    }
}

/// Access rate (bit/s) a radio-head user needs so that the wired hop plus
/// the access hop meet the target delay when `n_fr` users share the wired
/// fronthaul. Infinite when the wired hop alone uses up the budget.
pub fn rrh_delay_rate(n_fr: usize, cfg: &ScenarioConfig) -> f64 {
    let l = cfg.content_size_bits;
    let per_user = cfg.fronthaul_rate_bps / n_fr.max(1) as f64;
    let budget = target_delay(cfg) - l / per_user;
    if budget > 0.0 {
        l / budget
    } else {
        f64::INFINITY
    }
}

/// Whether a candidate meets the radio-head rate requirement at `n_fr`.
pub fn meets_rrh_threshold(c: &RrhCandidate, n_fr: usize, cfg: &ScenarioConfig) -> bool {
    c.cluster.is_some() && c.rate_bps >= rrh_delay_rate(n_fr, cfg).max(c.device_req_bps)
}

/// Radio-head association.
///
/// The threshold rises with the number N_FR of radio-head users, so the
/// plan is the largest k for which at least k candidates pass at N_FR = k;
/// the k fastest of those are admitted (ties by user id). Every admitted
/// user passes at the final N_FR, and admitting one more would fail at
/// N_FR + 1.
pub fn associate_rrh(candidates: &[RrhCandidate], cfg: &ScenarioConfig) -> AssociationPlan {
    let mut order: Vec<&RrhCandidate> = candidates.iter().collect();
    order.sort_by(|a, b| b.rate_bps.total_cmp(&a.rate_bps).then(a.user.cmp(&b.user)));
    let passing =
        |k: usize| -> Vec<&RrhCandidate> { order.iter().copied().filter(|c| meets_rrh_threshold(c, k, cfg)).collect() };
    let mut chosen: Vec<&RrhCandidate> = Vec::new();
    for k in (1..=order.len()).rev() {
        let pass = passing(k);
        if pass.len() >= k {
            chosen = pass.into_iter().take(k).collect();
            break;
        }
    }
    let mut rrh: Vec<(usize, usize)> =
        chosen.iter().map(|c| (c.user, c.cluster.expect("passing users have a cluster"))).collect();
    rrh.sort_unstable();
    let mut uav_pool: Vec<usize> =
        candidates.iter().map(|c| c.user).filter(|u| rrh.binary_search_by_key(u, |&(x, _)| x).is_err()).collect();
    uav_pool.sort_unstable();
    AssociationPlan { rrh, uav_pool }
}
