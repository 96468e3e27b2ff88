//! Association, clustering, cache selection and UAV positioning.

mod association;
mod cache;
mod kmeans;
mod position;

use thiserror::Error;

pub use association::{associate_rrh, meets_rrh_threshold, rrh_delay_rate, AssociationPlan, RrhCandidate};
pub use cache::{content_scores, exhaustive_cache, power_saving, random_cache, select_cache, CacheDemand, CachePlan};
pub use kmeans::{cluster_users, Clustering};
pub use position::{
    closed_form_xy, place_closed_form, place_exhaustive, place_fixed, place_local_search, place_uav, regime,
    uav_objective, user_powers, PlacementMethod, PlacementResult, PlacementUser, Regime,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PlacementError {
    #[error("no users to place a UAV for")]
    NoUsers,
    #[error("empty search grid")]
    EmptyGrid,
}

/// Sum of every UAV's objective; each entry is a position, its users and
/// the number of users sharing its band.
pub fn total_power_objective(
    uavs: &[(crate::scenario::Point3, Vec<PlacementUser>, usize)],
    cfg: &crate::scenario::ScenarioConfig,
) -> f64 {
    uavs.iter().map(|(p, users, share)| uav_objective(*p, users, *share, cfg)).sum()
}
