//! Delay, opinion scores, rate requirements and minimum transmit power.
//!
//! Slot capacities are bits per slot (see [`crate::channel`]); a delay is
//! the content size over the slot-average rate, `L·Δτ/C`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::channel::{free_space_pl, uav_user_pathloss, FadingDraw};
use crate::scenario::{ChannelParams, Point2, Point3, ScenarioConfig};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QoeError {
    #[error("zero rate on a used link component")]
    ZeroRate,
    #[error("delay budget exhausted: the content cannot reach the target score even at infinite access rate")]
    InfeasibleBudget,
    #[error("required power {required_w:.4e} W exceeds the UAV maximum")]
    ExceedsMaxPower { required_w: f64 },
    #[error("delay {0:.6} s exceeds the slot; delivery failed")]
    Undeliverable(f64),
}

/// How a content reaches a user, with the capacities of each hop in bits
/// per slot (the RRH fronthaul share is a plain rate in bit/s).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum DeliveryPath {
    /// Content server, wired fronthaul, zero-forcing RRHs.
    ServerViaRrh { fronthaul_bps: f64, access_bits: f64 },
    /// Content server, wireless fronthaul, UAV.
    ServerViaUav { fronthaul_bits: f64, access_bits: f64 },
    /// Straight from the UAV cache.
    UavCache { access_bits: f64 },
}

impl DeliveryPath {
    pub fn link(&self) -> Link {
        match self {
            DeliveryPath::ServerViaRrh { .. } => Link::A,
            DeliveryPath::ServerViaUav { .. } => Link::B,
            DeliveryPath::UavCache { .. } => Link::C,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, PartialOrd, Ord)]
pub enum Link {
    A,
    B,
    C,
}

impl Link {
    pub fn as_str(self) -> &'static str {
        match self {
            Link::A => "a",
            Link::B => "b",
            Link::C => "c",
        }
    }
}

/// Delivery delay in seconds.
pub fn delay(path: &DeliveryPath, content_bits: f64, slot_s: f64) -> Result<f64, QoeError> {
    let hop = |cap_bits: f64| {
        if cap_bits > 0.0 {
            Ok(content_bits * slot_s / cap_bits)
        } else {
            Err(QoeError::ZeroRate)
        }
    };
    match *path {
        DeliveryPath::ServerViaRrh { fronthaul_bps, access_bits } => {
            if !(fronthaul_bps > 0.0) {
                return Err(QoeError::ZeroRate);
            }
            Ok(content_bits / fronthaul_bps + hop(access_bits)?)
        }
        DeliveryPath::ServerViaUav { fronthaul_bits, access_bits } => {
            let f = if fronthaul_bits.is_infinite() { 0.0 } else { hop(fronthaul_bits)? };
            Ok(f + hop(access_bits)?)
        }
        DeliveryPath::UavCache { access_bits } => hop(access_bits),
    }
}

/// Best-case UAV access rate (bit/s): full band, maximum power, minimum
/// altitude directly overhead, and a four-sigma favourable shadowing margin.
pub fn max_uav_rate_bps(cfg: &ScenarioConfig) -> f64 {
    let p = &cfg.pathloss;
    let l = free_space_pl(p.fs_ref_distance_m, p.carrier_hz) + 10.0 * p.exponent_los * cfg.min_altitude_m.log10()
        - 4.0 * p.shadow_std_los_db;
    cfg.uav_bandwidth_hz * (1.0 + cfg.uav_max_power_w / (10f64.powf(l / 10.0) * cfg.noise_power_w)).log2()
}

/// Smallest delay any delivery can achieve: min{L/v_F, L/C_max}.
pub fn delay_lower_bound(cfg: &ScenarioConfig) -> f64 {
    let l = cfg.content_size_bits;
    (l / cfg.fronthaul_rate_bps).min(l / max_uav_rate_bps(cfg))
}

/// Linear delay-to-opinion map, clamped to [0, 1]. A delay beyond the slot
/// is a failed delivery.
pub fn delay_score(delay_s: f64, cfg: &ScenarioConfig) -> Result<f64, QoeError> {
    if delay_s > cfg.slot_duration_s {
        return Err(QoeError::Undeliverable(delay_s));
    }
    let dt = cfg.slot_duration_s;
    let s = (dt - delay_s) / (dt - delay_lower_bound(cfg));
    Ok(s.clamp(0.0, 1.0))
}

/// Device-rate requirement δ = S_i·Ĉ_n (bit/s).
pub fn device_requirement(screen_factor: f64, base_rate_bps: f64) -> f64 {
    screen_factor * base_rate_bps
}

/// 1 iff the interval rate meets the device requirement.
pub fn device_score(rate_bps: f64, requirement_bps: f64) -> u8 {
    u8::from(rate_bps >= requirement_bps)
}

/// Five-bin opinion scale.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MosLabel {
    Poor,
    Fair,
    Good,
    VeryGood,
    Excellent,
}

impl MosLabel {
    pub fn from_score(q: f64) -> MosLabel {
        if q >= 0.8 {
            MosLabel::Excellent
        } else if q >= 0.6 {
            MosLabel::VeryGood
        } else if q >= 0.4 {
            MosLabel::Good
        } else if q >= 0.2 {
            MosLabel::Fair
        } else {
            MosLabel::Poor
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            MosLabel::Poor => "Poor",
            MosLabel::Fair => "Fair",
            MosLabel::Good => "Good",
            MosLabel::VeryGood => "Very Good",
            MosLabel::Excellent => "Excellent",
        }
    }
}

/// Q = ζ1·D̄ + ζ2·(ΣV)/F with its opinion bin.
pub fn qoe_score(delay_score: f64, device_scores: &[u8], zeta1: f64, zeta2: f64) -> (f64, MosLabel) {
    let f = device_scores.len().max(1) as f64;
    let v: u32 = device_scores.iter().map(|&x| u32::from(x)).sum();
    let q = zeta1 * delay_score + zeta2 * f64::from(v) / f;
    (q, MosLabel::from_score(q))
}

/// Delay that exactly reaches the target delay score.
pub fn target_delay(cfg: &ScenarioConfig) -> f64 {
    let dt = cfg.slot_duration_s;
    dt - cfg.qoe.mos_min * (dt - delay_lower_bound(cfg))
}

/// Access capacity (bits per slot) needed to reach the target delay score,
/// with the wireless fronthaul hop when the content is not cached.
pub fn delay_rate_requirement(cached: bool, fronthaul_bits: f64, cfg: &ScenarioConfig) -> Result<f64, QoeError> {
    let dt = cfg.slot_duration_s;
    let l = cfg.content_size_bits;
    let mut budget = target_delay(cfg);
    if !cached {
        if !(fronthaul_bits > 0.0) {
            return Err(QoeError::InfeasibleBudget);
        }
        if fronthaul_bits.is_finite() {
            budget -= l * dt / fronthaul_bits;
        }
    }
    if budget <= 0.0 {
        return Err(QoeError::InfeasibleBudget);
    }
    Ok(l * dt / budget)
}

/// Rate (bit/s) a UAV user needs in every interval: the larger of the delay
/// and device requirements.
pub fn rate_target(delay_req_bits: f64, device_req_bps: f64, cfg: &ScenarioConfig) -> f64 {
    (delay_req_bits / cfg.slot_duration_s).max(device_req_bps)
}

/// (2^(δ·U_k/B_V) - 1)·σ²·10^(l/10) for a given path loss in dB.
#[inline]
pub fn min_power_for_pathloss(rate_bps: f64, users: usize, pathloss_db: f64, bandwidth_hz: f64, noise_w: f64) -> f64 {
    let x = rate_bps * users as f64 / bandwidth_hz;
    (x * std::f64::consts::LN_2).exp_m1() * noise_w * 10f64.powf(pathloss_db / 10.0)
}

/// Smallest UAV power meeting `rate_bps` at `user` with expected path loss.
/// Exceeding the maximum is an error carrying the required value.
pub fn min_uav_power(
    uav: Point3,
    user: Point2,
    rate_bps: f64,
    users: usize,
    cfg: &ScenarioConfig,
) -> Result<f64, QoeError> {
    let l = uav_user_pathloss(uav, user, &cfg.pathloss, &FadingDraw::MEAN).map_err(|_| QoeError::ZeroRate)?;
    let p = min_power_for_pathloss(rate_bps, users, l, cfg.uav_bandwidth_hz, cfg.noise_power_w);
    if p > cfg.uav_max_power_w {
        Err(QoeError::ExceedsMaxPower { required_w: p })
    } else {
        Ok(p)
    }
}

/// Interval rate (bit/s) achieved with `power_w` over a link with the given
/// path loss, when the band is split among `users`.
#[inline]
pub fn rate_for_power(power_w: f64, users: usize, pathloss_db: f64, bandwidth_hz: f64, noise_w: f64) -> f64 {
    let snr = power_w / (10f64.powf(pathloss_db / 10.0) * noise_w);
    bandwidth_hz / users as f64 * snr.ln_1p() / std::f64::consts::LN_2
}

/// Path loss recomputation helper for callers holding only parameters.
pub fn expected_pathloss(uav: Point3, user: Point2, p: &ChannelParams) -> Option<f64> {
    uav_user_pathloss(uav, user, p, &FadingDraw::MEAN).ok()
}

/// One user's outcome in one slot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QoeReport {
    pub slot: usize,
    pub user: usize,
    pub content: usize,
    /// Link used, or `None` for a failed delivery.
    pub link: Option<Link>,
    /// Serving RRH cluster or UAV id.
    pub server: Option<usize>,
    pub delay_s: f64,
    pub delay_score: f64,
    pub device_score_sum: u32,
    pub intervals: usize,
    pub qoe: f64,
    pub label: MosLabel,
    pub satisfied: bool,
    pub power_spent_w: f64,
    /// The minimum power exceeded the UAV maximum in some interval.
    pub power_clamped: bool,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::uav_user_snr;
    use crate::scenario::DEFAULT_NOISE_W;
    use proptest::prelude::*;

    fn cfg() -> ScenarioConfig {
        ScenarioConfig::default()
    }

    #[test]
    fn delay_examples() {
        let d = delay(&DeliveryPath::UavCache { access_bits: 5e6 }, 1e6, 1.0).unwrap();
        assert!((d - 0.2).abs() < 1e-15);
        let b =
            delay(&DeliveryPath::ServerViaUav { fronthaul_bits: f64::INFINITY, access_bits: 5e6 }, 1e6, 1.0).unwrap();
        assert_eq!(b, d);
        let a = delay(&DeliveryPath::ServerViaRrh { fronthaul_bps: 2e7, access_bits: 5e6 }, 1e6, 1.0).unwrap();
        let b = delay(&DeliveryPath::ServerViaUav { fronthaul_bits: 2e7, access_bits: 5e6 }, 1e6, 1.0).unwrap();
        assert!((a - b).abs() < 1e-15);
        assert_eq!(delay(&DeliveryPath::UavCache { access_bits: 0.0 }, 1e6, 1.0), Err(QoeError::ZeroRate));
    }

    #[test]
    fn lower_bound_direct_evaluation() {
        let c = cfg();
        let lfs = 20.0 * (4.0 * std::f64::consts::PI * 5.0 * 38e9 / 3e8).log10();
        let l = lfs + 10.0 * 2.0 * 2.0 - 4.0 * 5.3;
        let cmax = 1e9 * (1.0 + 20.0 / (10f64.powf(l / 10.0) * DEFAULT_NOISE_W)).log2();
        let oracle = (1e6 / 100e6_f64).min(1e6 / cmax);
        assert!((delay_lower_bound(&c) - oracle).abs() / oracle < 1e-12);
        assert!(oracle < 1e-3);

        // A starved wired fronthaul leaves the UAV branch as the minimum;
        // an unbounded one drives the bound to zero.
        let slow = ScenarioConfig { fronthaul_rate_bps: 1.0, ..cfg() };
        assert_eq!(delay_lower_bound(&slow), 1e6 / max_uav_rate_bps(&slow));
        let inf = ScenarioConfig { fronthaul_rate_bps: f64::INFINITY, ..cfg() };
        assert_eq!(delay_lower_bound(&inf), 0.0);
    }

    #[test]
    fn delay_score_examples() {
        let c = cfg();
        let lb = delay_lower_bound(&c);
        assert_eq!(delay_score(lb, &c).unwrap(), 1.0);
        assert_eq!(delay_score(1.0, &c).unwrap(), 0.0);
        let mid = (1.0 + lb) / 2.0;
        assert!((delay_score(mid, &c).unwrap() - 0.5).abs() < 1e-12);
        assert!(matches!(delay_score(1.5, &c), Err(QoeError::Undeliverable(_))));
    }

    #[test]
    fn device_score_examples() {
        assert_eq!(device_score(5e6, 5e6), 1);
        assert_eq!(device_score(0.0, 1.0), 0);
        assert_eq!(device_requirement(2.0, 5e6), 2.0 * device_requirement(1.0, 5e6));
    }

    #[test]
    fn qoe_examples() {
        let (q, l) = qoe_score(1.0, &[1; 10], 0.5, 0.5);
        assert_eq!((q, l), (1.0, MosLabel::Excellent));
        let (q, l) = qoe_score(0.0, &[0; 10], 0.5, 0.5);
        assert_eq!((q, l), (0.0, MosLabel::Poor));
        let (q, l) = qoe_score(1.0, &[0; 10], 0.5, 0.5);
        assert_eq!((q, l), (0.5, MosLabel::Good));
        assert_eq!(MosLabel::from_score(0.6), MosLabel::VeryGood);
        assert_eq!(MosLabel::from_score(0.2), MosLabel::Fair);
    }

    #[test]
    fn rate_requirement_examples() {
        // bound pinned at 0.01 s through the wired fronthaul rate
        let c = ScenarioConfig { fronthaul_rate_bps: 1e8, ..cfg() };
        let c = ScenarioConfig { content_size_bits: 1e6, ..c };
        let lb = delay_lower_bound(&c);
        let cached = delay_rate_requirement(true, 0.0, &c).unwrap();
        assert!((cached - 1e6 / (1.0 - 0.8 * (1.0 - lb))).abs() < 1e-6);

        let pinned = ScenarioConfig { uav_max_power_w: 1e-30, ..c.clone() };
        assert!((delay_lower_bound(&pinned) - 0.01).abs() < 1e-15);
        let cached = delay_rate_requirement(true, 0.0, &pinned).unwrap();
        assert!((cached - 1e6 / 0.208).abs() < 1e-6);

        let inf = delay_rate_requirement(false, f64::INFINITY, &c).unwrap();
        assert_eq!(inf, delay_rate_requirement(true, 0.0, &c).unwrap());
        for cf in [6e6, 1e7, 1e8, 1e10] {
            assert!(delay_rate_requirement(false, cf, &c).unwrap() > delay_rate_requirement(true, cf, &c).unwrap());
        }
        assert_eq!(delay_rate_requirement(false, 4e6, &c), Err(QoeError::InfeasibleBudget));
    }

    #[test]
    fn min_power_direct_evaluation() {
        let p = min_power_for_pathloss(5e6, 1, 100.0, 1e9, DEFAULT_NOISE_W);
        let oracle = (2f64.powf(5e6 / 1e9) - 1.0) * DEFAULT_NOISE_W * 1e10;
        assert!((p - oracle).abs() / oracle < 1e-12);
        assert!((p - 1.10e-5).abs() < 0.01e-5);
        assert_eq!(min_power_for_pathloss(0.0, 1, 100.0, 1e9, DEFAULT_NOISE_W), 0.0);
        assert!(min_power_for_pathloss(5e6, 2, 100.0, 1e9, DEFAULT_NOISE_W) > p);
    }

    #[test]
    fn min_power_flags_excess() {
        let c = cfg();
        let far = min_uav_power(Point3::new(0.0, 0.0, 100.0), Point2::new(450.0, 0.0), 5e9, 10, &c);
        assert!(matches!(far, Err(QoeError::ExceedsMaxPower { .. })));
    }

    proptest! {
        #[test]
        fn power_rate_round_trip(rate in 1e3f64..5e8, users in 1usize..40, l in 60.0f64..160.0) {
            let p = min_power_for_pathloss(rate, users, l, 1e9, DEFAULT_NOISE_W);
            let snr = uav_user_snr(p, l, DEFAULT_NOISE_W);
            let back = 1e9 / users as f64 * (1.0 + snr).log2();
            prop_assert!((back - rate).abs() / rate <= crate::numerics::tol::ROUND_TRIP);
            let back2 = rate_for_power(p, users, l, 1e9, DEFAULT_NOISE_W);
            prop_assert!((back2 - rate).abs() / rate <= crate::numerics::tol::ROUND_TRIP);
        }

        #[test]
        fn qoe_monotone_in_access_rate(r1 in 1e6f64..1e9, r2 in 1e6f64..1e9, req in 1e6f64..1e8) {
            let c = cfg();
            let (lo, hi) = if r1 <= r2 { (r1, r2) } else { (r2, r1) };
            let score = |r: f64| {
                let d = delay(&DeliveryPath::UavCache { access_bits: r }, c.content_size_bits, 1.0).unwrap();
                let ds = delay_score(d, &c).unwrap_or(0.0);
                qoe_score(ds, &[device_score(r, req); 4], 0.5, 0.5).0
            };
            prop_assert!(score(lo) <= score(hi));
        }

        #[test]
        fn caching_never_raises_requirement(cf in 5.1e6f64..1e12) {
            let c = cfg();
            if let Ok(u) = delay_rate_requirement(false, cf, &c) {
                prop_assert!(delay_rate_requirement(true, cf, &c).unwrap() <= u);
            }
        }
    }
}
