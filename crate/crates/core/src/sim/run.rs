//! Slot-by-slot orchestration: forecast, associate, cluster, cache, place,
//! deliver, score.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{
    bbu_interference, g2a_fronthaul_rate, rrh_slot_capacity, uav_user_pathloss, zfbf_sinr, ChannelError, FadingDraw,
};
use crate::placement::{
    associate_rrh, cluster_users, place_fixed, place_uav, power_saving, random_cache, select_cache, user_powers,
    AssociationPlan, CacheDemand, CachePlan, PlacementMethod, PlacementUser, RrhCandidate,
};
use crate::qoe::{
    delay, delay_lower_bound, delay_rate_requirement, delay_score, device_score, min_power_for_pathloss, qoe_score,
    rate_for_power, rate_target, DeliveryPath, Link, MosLabel, QoeReport,
};
use crate::scenario::{FadingMode, Point2, Point3, RandomSource, RrhCluster, ScenarioConfig};

use super::generator::{absolute_slot, interval_time_s, World};
use super::predict::{forecast_error, PeriodForecast, Predictor};
use super::SimError;

/// Power headroom over the exact minimum, so rounding never leaves a user
/// a hair short of its rate target.
const POWER_HEADROOM: f64 = 1.0 + 1e-9;

/// Where the BBU sits.
const BBU: Point2 = Point2::ORIGIN;

/// Pipeline stage switched off for comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Baseline {
    /// Radio heads only; users they cannot take go unserved.
    NoUav,
    /// UAVs fetch every content over the wireless fronthaul.
    NoCache,
    /// Each UAV caches contents drawn uniformly at random.
    RandomCache,
    /// UAVs hover at their cluster centroid at minimum altitude.
    FixedPlacement,
}

impl Baseline {
    pub const ALL: [Baseline; 4] =
        [Baseline::NoUav, Baseline::NoCache, Baseline::RandomCache, Baseline::FixedPlacement];

    pub fn as_str(self) -> &'static str {
        match self {
            Baseline::NoUav => "no_uav",
            Baseline::NoCache => "no_cache",
            Baseline::RandomCache => "random_cache",
            Baseline::FixedPlacement => "fixed_placement",
        }
    }
}

impl fmt::Display for Baseline {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Baseline {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Baseline::ALL.into_iter().find(|b| b.as_str() == s).ok_or_else(|| {
            format!("unknown baseline '{s}' (expected no_uav, no_cache, random_cache or fixed_placement)")
        })
    }
}

/// One UAV in one slot.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UavSlot {
    pub uav: usize,
    pub position: Point3,
    pub users: usize,
    pub requests: usize,
    pub cache_hits: usize,
    /// Sum over served users of the interval-averaged transmit power (W).
    pub power_w: f64,
    pub method: Option<PlacementMethod>,
    /// Planned objective Σ F·P_min at the chosen position (W).
    pub planned_objective_w: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct SlotTotals {
    pub requests: usize,
    pub rrh: usize,
    pub uav_fronthaul: usize,
    pub uav_cache: usize,
    pub failures: usize,
    pub satisfied: usize,
    pub cache_hits: usize,
    pub power_clamped: usize,
    pub uav_power_w: f64,
}

impl SlotTotals {
    pub fn delivered(&self) -> usize {
        self.rrh + self.uav_fronthaul + self.uav_cache
    }

    fn from_parts(reports: &[QoeReport], uavs: &[UavSlot]) -> SlotTotals {
        let mut t = SlotTotals { requests: reports.len(), ..SlotTotals::default() };
        for r in reports {
            match r.link {
                Some(Link::A) => t.rrh += 1,
                Some(Link::B) => t.uav_fronthaul += 1,
                Some(Link::C) => t.uav_cache += 1,
                None => t.failures += 1,
            }
            t.satisfied += usize::from(r.satisfied);
            t.power_clamped += usize::from(r.power_clamped);
        }
        for u in uavs {
            t.cache_hits += u.cache_hits;
            t.uav_power_w += u.power_w;
        }
        t
    }
}

/// Everything that happened in one slot.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SlotLog {
    pub slot: usize,
    pub period: usize,
    /// Radio-head users that requested, N_FR.
    pub n_fr: usize,
    pub reports: Vec<QoeReport>,
    pub uavs: Vec<UavSlot>,
    pub totals: SlotTotals,
}

impl SlotLog {
    pub fn line(&self) -> String {
        let t = &self.totals;
        format!(
            "slot {:>4}  requests {:>4}  rrh {:>3}  uav {:>3}  hits {:>3}  failed {:>3}  satisfied {:>4}  uav power {:.4} W",
            self.slot,
            t.requests,
            t.rrh,
            t.uav_fronthaul + t.uav_cache,
            t.cache_hits,
            t.failures,
            t.satisfied,
            t.uav_power_w
        )
    }
}

/// Planned association of one slot.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SlotPlan {
    pub slot: usize,
    /// `(user, cluster)` pairs served by radio heads.
    pub rrh: Vec<(usize, usize)>,
    /// Users of each UAV.
    pub uav_users: Vec<Vec<usize>>,
    pub centroids: Vec<Point2>,
}

/// Cache contents chosen at the start of a period.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PeriodPlan {
    pub period: usize,
    pub caches: Vec<CachePlan>,
    pub slots: Vec<SlotPlan>,
}

/// Run totals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub schema_version: u32,
    pub mode: String,
    pub baseline: Option<String>,
    pub seed: u64,
    pub slots: usize,
    pub users: usize,
    pub uavs: usize,
    pub cache_size: usize,
    pub requests: usize,
    pub delivered: usize,
    pub failures: usize,
    pub satisfied: usize,
    pub satisfied_fraction: f64,
    pub rrh_deliveries: usize,
    pub uav_deliveries: usize,
    pub cache_hits: usize,
    /// Hits over requests from UAV users.
    pub cache_hit_rate: f64,
    pub total_uav_power_w: f64,
    /// Total power over slots and UAVs.
    pub mean_uav_power_w: f64,
    pub infeasible_user_slots: usize,
    /// Mean altitude of UAVs that served someone.
    pub mean_altitude_m: f64,
    /// Smallest delay of any delivered content; null when nothing was
    /// delivered.
    pub min_delay_s: Option<f64>,
    pub delay_lower_bound_s: f64,
    pub mean_rrh_users: f64,
    pub mean_position_error_m: f64,
    pub mean_request_tv: f64,
}

pub const SUMMARY_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub logs: Vec<SlotLog>,
    pub plans: Vec<PeriodPlan>,
    pub summary: Summary,
}

/// Random propagation terms of one slot. Every link keeps one draw for the
/// whole slot.
struct SlotFading {
    sampled: bool,
    rrh: Vec<Vec<Vec<f64>>>,
    bbu: Vec<f64>,
    access: Vec<FadingDraw>,
    g2a: Vec<FadingDraw>,
}

impl SlotFading {
    fn new(world: &World, rs: &RandomSource, abs_slot: usize) -> SlotFading {
        let cfg = &world.cfg;
        if cfg.fading == FadingMode::Expected {
            return SlotFading {
                sampled: false,
                rrh: Vec::new(),
                bbu: Vec::new(),
                access: Vec::new(),
                g2a: Vec::new(),
            };
        }
        let rs = rs.derive_index("slot", abs_slot as u64);
        let p = &cfg.pathloss;
        let users = world.users.len();
        let draw = |label: String| FadingDraw::for_link(&rs, &label, 0, p);
        SlotFading {
            sampled: true,
            rrh: world
                .rrh_clusters
                .iter()
                .map(|c| {
                    (0..c.rrhs.len())
                        .map(|j| (0..users).map(|u| draw(format!("rrh-{}-{j}-{u}", c.id)).rayleigh_gain).collect())
                        .collect()
                })
                .collect(),
            bbu: (0..users).map(|u| draw(format!("bbu-{u}")).rayleigh_gain).collect(),
            access: (0..users).map(|u| draw(format!("access-{u}"))).collect(),
            g2a: (0..cfg.num_uavs).map(|k| draw(format!("g2a-{k}"))).collect(),
        }
    }

    fn rrh(&self, cluster: usize, rrh: usize, user: usize) -> f64 {
        if self.sampled {
            self.rrh[cluster][rrh][user]
        } else {
            1.0
        }
    }

    fn bbu(&self, user: usize) -> f64 {
        if self.sampled {
            self.bbu[user]
        } else {
            1.0
        }
    }

    fn access(&self, user: usize) -> FadingDraw {
        if self.sampled {
            self.access[user]
        } else {
            FadingDraw::MEAN
        }
    }

    fn g2a(&self, uav: usize) -> FadingDraw {
        if self.sampled {
            self.g2a[uav]
        } else {
            FadingDraw::MEAN
        }
    }
}

/// Zero-forcing SINR per user. A cluster whose channel turns out rank
/// deficient drops its last member, who gets zero SINR.
fn zf_sinr(
    clusters: &[RrhCluster],
    positions: &dyn Fn(usize) -> Point2,
    fading: &SlotFading,
    cfg: &ScenarioConfig,
) -> Result<Vec<(usize, f64)>, SimError> {
    let mut cl = clusters.to_vec();
    let mut dropped = Vec::new();
    loop {
        let out = zfbf_sinr(
            &cl,
            positions,
            cfg.rrh_power_w,
            cfg.noise_power_w,
            &|u| bbu_interference(positions(u), BBU, cfg.bbu_power_w, &cfg.pathloss, fading.bbu(u)),
            &|q, j, u| fading.rrh(q, j, u),
            &cfg.pathloss,
        );
        match out {
            Ok(z) => {
                let mut v: Vec<(usize, f64)> = z.sinr.into_iter().flatten().collect();
                v.extend(dropped.iter().map(|&u| (u, 0.0)));
                return Ok(v);
            }
            Err(ChannelError::RankDeficient { cluster }) => {
                let c = cl.iter_mut().find(|c| c.id == cluster).expect("cluster ids come from the list");
                dropped.push(c.users.pop().expect("rank deficiency needs a member"));
            }
            Err(e) => return Err(SimError::Channel(e)),
        }
    }
}

fn device_req(world: &World, user: usize) -> f64 {
    world.users[user].device_requirement_bps(&world.cfg)
}

/// Radio-head association at forecast positions. Each user is a candidate
/// of the cluster owning its nearest RRH, and a cluster takes at most one
/// candidate per RRH, those closest to one of its RRHs. Admission shrinks the
/// clusters, which raises the SINR of those left, so rates are recomputed
/// until the admitted set settles. When nobody passes, the weakest candidate
/// is dropped and the rest tried again.
fn associate(world: &World, positions: &[Point2]) -> Result<AssociationPlan, SimError> {
    let cfg = &world.cfg;
    let clusters = &world.rrh_clusters;
    let nearest = |p: Point2| -> (usize, f64) {
        let mut best = (0, f64::INFINITY);
        for c in clusters {
            for r in &c.rrhs {
                let d = p.dist(*r);
                if d < best.1 {
                    best = (c.id, d);
                }
            }
        }
        best
    };
    let near: Vec<(usize, f64)> = positions.iter().map(|p| nearest(*p)).collect();
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); clusters.len()];
    for (u, &(q, _)) in near.iter().enumerate() {
        members[q].push(u);
    }
    for (q, m) in members.iter_mut().enumerate() {
        m.sort_by(|&a, &b| near[a].1.total_cmp(&near[b].1).then(a.cmp(&b)));
        m.truncate(clusters[q].rrhs.len());
    }
    let mean = SlotFading { sampled: false, rrh: Vec::new(), bbu: Vec::new(), access: Vec::new(), g2a: Vec::new() };
    loop {
        let current: Vec<RrhCluster> =
            clusters.iter().zip(&members).map(|(c, m)| RrhCluster { users: m.clone(), ..c.clone() }).collect();
        let sinr = zf_sinr(&current, &|u| positions[u], &mean, cfg)?;
        let mut cands: Vec<RrhCandidate> = (0..positions.len())
            .map(|u| RrhCandidate { user: u, cluster: None, rate_bps: 0.0, device_req_bps: device_req(world, u) })
            .collect();
        for (q, m) in members.iter().enumerate() {
            for &u in m {
                cands[u].cluster = Some(q);
            }
        }
        for &(u, s) in &sinr {
            cands[u].rate_bps =
                rrh_slot_capacity(&[s], cfg.rrh_bandwidth_hz, cfg.slot_duration_s) / cfg.slot_duration_s;
        }
        let plan = associate_rrh(&cands, cfg);
        let total: usize = members.iter().map(Vec::len).sum();
        if plan.rrh.len() == total {
            return Ok(plan);
        }
        if plan.rrh.is_empty() {
            let worst = sinr
                .iter()
                .min_by(|a, b| a.1.total_cmp(&b.1).then(b.0.cmp(&a.0)))
                .map(|&(u, _)| u)
                .expect("members are nonempty");
            for m in &mut members {
                m.retain(|&u| u != worst);
            }
        } else {
            for m in &mut members {
                m.retain(|u| plan.rrh.iter().any(|(x, _)| x == u));
            }
        }
    }
}

fn argmax(p: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in p.iter().enumerate() {
        if *x > p[best] {
            best = i;
        }
    }
    best
}

/// Bits per slot the BBU can push to a UAV at `pos`.
fn fronthaul_bits(cfg: &ScenarioConfig, pos: Point3, fetching: usize, fading: &FadingDraw) -> f64 {
    g2a_fronthaul_rate(
        pos,
        BBU,
        fetching,
        cfg.bbu_power_w,
        cfg.g2a_bandwidth_hz,
        cfg.noise_power_w,
        cfg.slot_duration_s,
        &cfg.pathloss,
        fading,
    )
    .unwrap_or(0.0)
}

/// Rate (bit/s) a UAV user needs in every interval; `None` when the delay
/// budget cannot be met at any access rate.
fn uav_rate(world: &World, user: usize, cached: bool, fronthaul: f64) -> Option<f64> {
    let cfg = &world.cfg;
    delay_rate_requirement(cached, fronthaul, cfg).ok().map(|bits| rate_target(bits, device_req(world, user), cfg))
}

fn failure(
    slot: usize,
    user: usize,
    content: usize,
    server: Option<usize>,
    delay_s: f64,
    power_w: f64,
    clamped: bool,
) -> QoeReport {
    QoeReport {
        slot,
        user,
        content,
        link: None,
        server,
        delay_s,
        delay_score: 0.0,
        device_score_sum: 0,
        intervals: 0,
        qoe: 0.0,
        label: MosLabel::Poor,
        satisfied: false,
        power_spent_w: power_w,
        power_clamped: clamped,
    }
}

/// Scores a delivery that got through, or turns it into a failure when the
/// delay exceeds the slot.
fn score(
    cfg: &ScenarioConfig,
    slot: usize,
    user: usize,
    content: usize,
    server: usize,
    path: DeliveryPath,
    devices: &[u8],
    power_w: f64,
    clamped: bool,
) -> QoeReport {
    let d = match delay(&path, cfg.content_size_bits, cfg.slot_duration_s) {
        Ok(d) => d,
        Err(_) => return failure(slot, user, content, Some(server), f64::INFINITY, power_w, clamped),
    };
    let Ok(ds) = delay_score(d, cfg) else {
        return failure(slot, user, content, Some(server), d, power_w, clamped);
    };
    let (q, label) = qoe_score(ds, devices, cfg.qoe.zeta1, cfg.qoe.zeta2);
    QoeReport {
        slot,
        user,
        content,
        link: Some(path.link()),
        server: Some(server),
        delay_s: d,
        delay_score: ds,
        device_score_sum: devices.iter().map(|&v| u32::from(v)).sum(),
        intervals: devices.len(),
        qoe: q,
        label,
        satisfied: q >= cfg.qoe.satisfied_threshold && !clamped,
        power_spent_w: power_w,
        power_clamped: clamped,
    }
}

struct Sim<'a> {
    world: &'a World,
    baseline: Option<Baseline>,
    rs: RandomSource,
}

impl Sim<'_> {
    fn cfg(&self) -> &ScenarioConfig {
        &self.world.cfg
    }

    fn with_uavs(&self) -> bool {
        self.baseline != Some(Baseline::NoUav)
    }

    /// Association and clustering of every slot of a period, from the
    /// forecast. Clustering warm-starts from the previous slot's centroids.
    fn plan_slots(
        &self,
        p: usize,
        f: &PeriodForecast,
        prev: &mut Option<Vec<Point2>>,
    ) -> Result<Vec<SlotPlan>, SimError> {
        let cfg = self.cfg();
        let mut out = Vec::with_capacity(cfg.slots_per_cache_period);
        for tau in 0..cfg.slots_per_cache_period {
            let positions: Vec<Point2> = f.positions.iter().map(|u| u[tau]).collect();
            let assoc = associate(self.world, &positions)?;
            let mut uav_users = vec![Vec::new(); cfg.num_uavs];
            let mut centroids = prev.clone().unwrap_or_else(|| vec![Point2::ORIGIN; cfg.num_uavs]);
            if self.with_uavs() && !assoc.uav_pool.is_empty() {
                let pts: Vec<Point2> = assoc.uav_pool.iter().map(|&u| positions[u]).collect();
                let abs = absolute_slot(cfg, p, tau) as u64;
                let c = cluster_users(
                    &pts,
                    cfg.num_uavs,
                    prev.as_deref(),
                    &self.rs.derive_index("kmeans", abs),
                    cfg.placement.kmeans_max_iterations,
                );
                for (i, &l) in c.labels.iter().enumerate() {
                    uav_users[l].push(assoc.uav_pool[i]);
                }
                for (k, cen) in c.centroids.iter().enumerate() {
                    centroids[k] = *cen;
                }
                if c.centroids.len() == cfg.num_uavs {
                    *prev = Some(c.centroids);
                }
            }
            out.push(SlotPlan { slot: p * cfg.slots_per_cache_period + tau, rrh: assoc.rrh, uav_users, centroids });
        }
        Ok(out)
    }

    /// Caches for the period: each UAV weighs every content by the forecast
    /// request probability of its users times the power caching would save
    /// them, over all slots of the period.
    fn plan_caches(&self, p: usize, f: &PeriodForecast, slots: &[SlotPlan]) -> Vec<CachePlan> {
        let cfg = self.cfg();
        let k_count = cfg.num_uavs;
        if !self.with_uavs() || self.baseline == Some(Baseline::NoCache) {
            return vec![CachePlan::default(); k_count];
        }
        let h = cfg.slots_per_collection;
        let n = cfg.num_contents;
        let weight = cfg.intervals_per_slot as f64;
        let mut demands: Vec<Vec<CacheDemand>> = vec![Vec::new(); k_count];
        for (tau, sp) in slots.iter().enumerate() {
            let fetching = sp.uav_users.iter().filter(|u| !u.is_empty()).count();
            for k in 0..k_count {
                let users = &sp.uav_users[k];
                if users.is_empty() {
                    continue;
                }
                let pos = sp.centroids[k].at_height(cfg.min_altitude_m);
                let fh = fronthaul_bits(cfg, pos, fetching, &FadingDraw::MEAN);
                for &u in users {
                    let power = |cached: bool| {
                        uav_rate(self.world, u, cached, fh).map_or(f64::INFINITY, |r| {
                            let pu = PlacementUser { position: f.positions[u][tau], rate_bps: r, weight: 1.0 };
                            user_powers(pos, &[pu], users.len(), cfg)[0]
                        })
                    };
                    let saving = weight * power_saving(power(false), power(true), cfg.uav_max_power_w);
                    demands[k].push(CacheDemand { probs: f.requests[u][tau / h].clone(), saving_w: vec![saving; n] });
                }
            }
        }
        demands
            .iter()
            .enumerate()
            .map(|(k, d)| match self.baseline {
                Some(Baseline::RandomCache) => random_cache(
                    d,
                    n,
                    cfg.cache_size,
                    &self.rs.derive_index("random-cache", p as u64).derive_index("uav", k as u64),
                ),
                _ => select_cache(d, n, cfg.cache_size),
            })
            .collect()
    }

    /// Positions every UAV for its planned users, assuming each requests its
    /// most likely content.
    fn place(
        &self,
        tau: usize,
        f: &PeriodForecast,
        sp: &SlotPlan,
        caches: &[CachePlan],
        last: &[Point3],
    ) -> Vec<(Point3, Option<PlacementMethod>, f64)> {
        let cfg = self.cfg();
        let h = cfg.slots_per_collection;
        let mode = |u: usize| argmax(&f.requests[u][tau / h]);
        let fetching = (0..cfg.num_uavs)
            .filter(|&k| sp.uav_users[k].iter().any(|&u| caches[k].contents.binary_search(&mode(u)).is_err()))
            .count();
        (0..cfg.num_uavs)
            .into_par_iter()
            .map(|k| {
                let users = &sp.uav_users[k];
                if users.is_empty() {
                    return (last[k], None, 0.0);
                }
                let anchor = sp.centroids[k].at_height(cfg.min_altitude_m);
                let fh = fronthaul_bits(cfg, anchor, fetching, &FadingDraw::MEAN);
                let pu: Vec<PlacementUser> = users
                    .iter()
                    .map(|&u| {
                        let cached = caches[k].contents.binary_search(&mode(u)).is_ok();
                        let rate = uav_rate(self.world, u, cached, fh).unwrap_or_else(|| device_req(self.world, u));
                        PlacementUser {
                            position: f.positions[u][tau],
                            rate_bps: rate,
                            weight: cfg.intervals_per_slot as f64,
                        }
                    })
                    .collect();
                let r = if self.baseline == Some(Baseline::FixedPlacement) {
                    place_fixed(&pu, pu.len(), anchor, cfg)
                } else {
                    place_uav(&pu, pu.len(), cfg).expect("users are nonempty")
                };
                (r.position, Some(r.method), r.objective_w)
            })
            .collect()
    }

    fn deliver_rrh(
        &self,
        p: usize,
        tau: usize,
        slot: usize,
        sp: &SlotPlan,
        requests: &[Option<usize>],
        fading: &SlotFading,
    ) -> Result<Vec<QoeReport>, SimError> {
        let cfg = self.cfg();
        let world = self.world;
        let active: Vec<(usize, usize)> = sp.rrh.iter().copied().filter(|&(u, _)| requests[u].is_some()).collect();
        if active.is_empty() {
            return Ok(Vec::new());
        }
        let clusters: Vec<RrhCluster> = world
            .rrh_clusters
            .iter()
            .map(|c| RrhCluster {
                users: active.iter().filter(|&&(_, q)| q == c.id).map(|&(u, _)| u).collect(),
                ..c.clone()
            })
            .collect();
        let f = cfg.intervals_per_slot;
        let mut sinr: Vec<Vec<f64>> = vec![Vec::with_capacity(f); world.users.len()];
        for t in 0..f {
            let time = interval_time_s(cfg, p, tau, t);
            for (u, s) in zf_sinr(&clusters, &|u| world.position_at(u, time), fading, cfg)? {
                sinr[u].push(s);
            }
        }
        let v_fu = cfg.fronthaul_rate_bps / active.len() as f64;
        Ok(active
            .iter()
            .map(|&(u, q)| {
                let n = requests[u].expect("active users request");
                let req = device_req(world, u);
                let devices: Vec<u8> =
                    sinr[u].iter().map(|s| device_score(cfg.rrh_bandwidth_hz * (1.0 + s).log2(), req)).collect();
                let access_bits = rrh_slot_capacity(&sinr[u], cfg.rrh_bandwidth_hz, cfg.slot_duration_s);
                let path = DeliveryPath::ServerViaRrh { fronthaul_bps: v_fu, access_bits };
                score(cfg, slot, u, n, q, path, &devices, 0.0, false)
            })
            .collect())
    }

    /// Serves the requests of one UAV's users. Every interval the UAV spends
    /// exactly the power each user needs, capped at its maximum.
    fn deliver_uav(
        &self,
        p: usize,
        tau: usize,
        slot: usize,
        k: usize,
        users: &[usize],
        pos: Point3,
        cache: &CachePlan,
        requests: &[Option<usize>],
        fetching: usize,
        fading: &SlotFading,
    ) -> (Vec<QoeReport>, usize, f64) {
        let cfg = self.cfg();
        let world = self.world;
        let asking: Vec<(usize, usize)> = users.iter().filter_map(|&u| requests[u].map(|n| (u, n))).collect();
        let share = asking.len();
        let fh = fronthaul_bits(cfg, pos, fetching, &fading.g2a(k));
        let f = cfg.intervals_per_slot;
        let mut hits = 0;
        let mut total = 0.0;
        let mut reports = Vec::with_capacity(share);
        for &(u, n) in &asking {
            let cached = cache.contents.binary_search(&n).is_ok();
            hits += usize::from(cached);
            let req = device_req(world, u);
            let target = uav_rate(world, u, cached, fh);
            let mut clamped = target.is_none();
            let mut devices = Vec::with_capacity(f);
            let mut bits = 0.0;
            let mut spent = 0.0;
            let draw = fading.access(u);
            for t in 0..f {
                let at = world.position_at(u, interval_time_s(cfg, p, tau, t));
                let Ok(pl) = uav_user_pathloss(pos, at, &cfg.pathloss, &draw) else {
                    devices.push(0);
                    continue;
                };
                let mut power = match target {
                    Some(r) => {
                        POWER_HEADROOM * min_power_for_pathloss(r, share, pl, cfg.uav_bandwidth_hz, cfg.noise_power_w)
                    }
                    None => cfg.uav_max_power_w,
                };
                if power > cfg.uav_max_power_w {
                    power = cfg.uav_max_power_w;
                    clamped = true;
                }
                let rate = rate_for_power(power, share, pl, cfg.uav_bandwidth_hz, cfg.noise_power_w);
                devices.push(device_score(rate, req));
                bits += rate * cfg.slot_duration_s / f as f64;
                spent += power / f as f64;
            }
            total += spent;
            let path = if cached {
                DeliveryPath::UavCache { access_bits: bits }
            } else {
                DeliveryPath::ServerViaUav { fronthaul_bits: fh, access_bits: bits }
            };
            reports.push(score(cfg, slot, u, n, k, path, &devices, spent, clamped));
        }
        (reports, hits, total)
    }
}

fn check_slot(log: &SlotLog, caches: &[CachePlan], cfg: &ScenarioConfig) -> Result<(), SimError> {
    let bad = |message: String| Err(SimError::Invariant { slot: log.slot, message });
    let t = &log.totals;
    if t.requests != t.delivered() + t.failures {
        return bad(format!("{} requests but {} delivered and {} failed", t.requests, t.delivered(), t.failures));
    }
    if *t != SlotTotals::from_parts(&log.reports, &log.uavs) {
        return bad("slot totals differ from the sum of their parts".into());
    }
    let bound = delay_lower_bound(cfg);
    for r in &log.reports {
        if r.link.is_some() && r.delay_s < bound {
            return bad(format!("user {} delay {} below the lower bound {}", r.user, r.delay_s, bound));
        }
    }
    for (k, c) in caches.iter().enumerate() {
        if c.contents.len() > cfg.cache_size || c.contents.windows(2).any(|w| w[0] >= w[1]) {
            return bad(format!("UAV {k} cache {:?} is not a set of at most {}", c.contents, cfg.cache_size));
        }
    }
    for u in &log.uavs {
        if u.position.h < cfg.min_altitude_m {
            return bad(format!("UAV {} at {} m, below the minimum altitude", u.uav, u.position.h));
        }
    }
    Ok(())
}

/// Runs every period of the scenario.
pub fn run(cfg: &ScenarioConfig, predictor: Predictor, baseline: Option<Baseline>) -> Result<RunOutput, SimError> {
    let world = World::generate(cfg);
    run_world(&world, predictor, baseline)
}

pub fn run_world(world: &World, predictor: Predictor, baseline: Option<Baseline>) -> Result<RunOutput, SimError> {
    let cfg = &world.cfg;
    let sim = Sim { world, baseline, rs: RandomSource::new(cfg.seed).derive("run") };
    let fading_rs = RandomSource::new(cfg.seed).derive("fading");
    let mut logs = Vec::with_capacity(cfg.total_slots());
    let mut plans = Vec::with_capacity(cfg.num_periods);
    let mut prev_centroids: Option<Vec<Point2>> = None;
    let mut uav_pos: Vec<Point3> = vec![Point2::ORIGIN.at_height(cfg.min_altitude_m); cfg.num_uavs];
    let (mut pos_err, mut tv) = (0.0, 0.0);
    for p in 0..cfg.num_periods {
        let forecast = predictor.forecast(world, p)?;
        let (e, d) = forecast_error(world, p, &forecast);
        pos_err += e / cfg.num_periods as f64;
        tv += d / cfg.num_periods as f64;
        let slot_plans = sim.plan_slots(p, &forecast, &mut prev_centroids)?;
        let caches = sim.plan_caches(p, &forecast, &slot_plans);
        for (tau, sp) in slot_plans.iter().enumerate() {
            let slot = sp.slot;
            let abs = absolute_slot(cfg, p, tau);
            let requests: Vec<Option<usize>> = (0..world.users.len()).map(|u| world.request(u, abs)).collect();
            let fading = SlotFading::new(world, &fading_rs, abs);
            let mut reports = sim.deliver_rrh(p, tau, slot, sp, &requests, &fading)?;
            let mut uavs = Vec::with_capacity(cfg.num_uavs);
            if sim.with_uavs() {
                let placed = sim.place(tau, &forecast, sp, &caches, &uav_pos);
                let fetching = (0..cfg.num_uavs)
                    .filter(|&k| {
                        sp.uav_users[k]
                            .iter()
                            .any(|&u| requests[u].is_some_and(|n| caches[k].contents.binary_search(&n).is_err()))
                    })
                    .count();
                let delivered: Vec<(Vec<QoeReport>, usize, f64)> = (0..cfg.num_uavs)
                    .into_par_iter()
                    .map(|k| {
                        sim.deliver_uav(
                            p,
                            tau,
                            slot,
                            k,
                            &sp.uav_users[k],
                            placed[k].0,
                            &caches[k],
                            &requests,
                            fetching,
                            &fading,
                        )
                    })
                    .collect();
                for (k, ((pos, method, objective), (r, hits, power))) in placed.into_iter().zip(delivered).enumerate() {
                    uav_pos[k] = pos;
                    uavs.push(UavSlot {
                        uav: k,
                        position: pos,
                        users: sp.uav_users[k].len(),
                        requests: r.len(),
                        cache_hits: hits,
                        power_w: power,
                        method,
                        planned_objective_w: objective,
                    });
                    reports.extend(r);
                }
            } else {
                // Nobody was clustered; every pool user is unserved.
                let served: std::collections::BTreeSet<usize> = sp.rrh.iter().map(|&(u, _)| u).collect();
                for u in 0..world.users.len() {
                    if let (false, Some(n)) = (served.contains(&u), requests[u]) {
                        reports.push(failure(slot, u, n, None, f64::INFINITY, 0.0, false));
                    }
                }
            }
            reports.sort_by_key(|r| r.user);
            let n_fr = reports.iter().filter(|r| r.link == Some(Link::A)).count();
            let totals = SlotTotals::from_parts(&reports, &uavs);
            let log = SlotLog { slot, period: p, n_fr, reports, uavs, totals };
            check_slot(&log, &caches, cfg)?;
            logs.push(log);
        }
        plans.push(PeriodPlan { period: p, caches, slots: slot_plans });
    }
    let summary = summarize(cfg, &logs, &predictor, baseline, pos_err, tv);
    Ok(RunOutput { logs, plans, summary })
}

fn summarize(
    cfg: &ScenarioConfig,
    logs: &[SlotLog],
    predictor: &Predictor,
    baseline: Option<Baseline>,
    pos_err: f64,
    tv: f64,
) -> Summary {
    let mut t = SlotTotals::default();
    let mut alt = (0.0, 0usize);
    let mut min_delay: Option<f64> = None;
    let mut uav_requests = 0;
    for l in logs {
        let s = &l.totals;
        t.requests += s.requests;
        t.rrh += s.rrh;
        t.uav_fronthaul += s.uav_fronthaul;
        t.uav_cache += s.uav_cache;
        t.failures += s.failures;
        t.satisfied += s.satisfied;
        t.cache_hits += s.cache_hits;
        t.power_clamped += s.power_clamped;
        t.uav_power_w += s.uav_power_w;
        for u in &l.uavs {
            uav_requests += u.requests;
            if u.users > 0 {
                alt.0 += u.position.h;
                alt.1 += 1;
            }
        }
        for r in l.reports.iter().filter(|r| r.link.is_some()) {
            min_delay = Some(min_delay.map_or(r.delay_s, |m: f64| m.min(r.delay_s)));
        }
    }
    let ratio = |a: usize, b: usize| if b > 0 { a as f64 / b as f64 } else { 0.0 };
    let slots = logs.len();
    Summary {
        schema_version: SUMMARY_SCHEMA_VERSION,
        mode: match predictor {
            Predictor::Oracle => "oracle",
            Predictor::Esn(_) => "esn",
        }
        .into(),
        baseline: baseline.map(|b| b.as_str().to_string()),
        seed: cfg.seed,
        slots,
        users: cfg.num_users,
        uavs: cfg.num_uavs,
        cache_size: cfg.cache_size,
        requests: t.requests,
        delivered: t.delivered(),
        failures: t.failures,
        satisfied: t.satisfied,
        satisfied_fraction: ratio(t.satisfied, t.requests),
        rrh_deliveries: t.rrh,
        uav_deliveries: t.uav_fronthaul + t.uav_cache,
        cache_hits: t.cache_hits,
        cache_hit_rate: ratio(t.cache_hits, uav_requests),
        total_uav_power_w: t.uav_power_w,
        mean_uav_power_w: if slots > 0 { t.uav_power_w / (slots * cfg.num_uavs) as f64 } else { 0.0 },
        infeasible_user_slots: t.power_clamped,
        mean_altitude_m: if alt.1 > 0 { alt.0 / alt.1 as f64 } else { 0.0 },
        min_delay_s: min_delay,
        delay_lower_bound_s: delay_lower_bound(cfg),
        mean_rrh_users: if slots > 0 { logs.iter().map(|l| l.n_fr).sum::<usize>() as f64 / slots as f64 } else { 0.0 },
        mean_position_error_m: pos_err,
        mean_request_tv: tv,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick() -> ScenarioConfig {
        let mut c = ScenarioConfig::desk();
        c.intervals_per_slot = 20;
        c.slots_per_cache_period = 8;
        c
    }

    #[test]
    fn zero_users_give_empty_reports_and_no_power() {
        let cfg = ScenarioConfig { num_users: 0, ..quick() };
        let out = run(&cfg, Predictor::Oracle, None).unwrap();
        assert!(out.logs.iter().all(|l| l.reports.is_empty()));
        assert_eq!(out.summary.total_uav_power_w, 0.0);
        assert_eq!(out.summary.requests, 0);
    }

    #[test]
    fn full_catalog_cache_hits_every_uav_delivery() {
        let cfg = ScenarioConfig { cache_size: 25, ..quick() };
        let out = run(&cfg, Predictor::Oracle, None).unwrap();
        let s = &out.summary;
        assert!(s.uav_deliveries > 0);
        let uav_requests: usize = out.logs.iter().flat_map(|l| &l.uavs).map(|u| u.requests).sum();
        assert_eq!(s.cache_hits, uav_requests);
        assert!(out.logs.iter().flat_map(|l| &l.reports).all(|r| r.link != Some(Link::B)));
    }

    #[test]
    fn no_uav_spends_nothing_and_serves_only_by_rrh() {
        let out = run(&quick(), Predictor::Oracle, Some(Baseline::NoUav)).unwrap();
        assert_eq!(out.summary.total_uav_power_w, 0.0);
        assert_eq!(out.summary.uav_deliveries, 0);
        assert_eq!(out.summary.rrh_deliveries + out.summary.failures, out.summary.requests);
        assert!(out
            .logs
            .iter()
            .flat_map(|l| &l.reports)
            .all(|r| r.satisfied == (r.link == Some(Link::A) && r.satisfied)));
    }

    #[test]
    fn every_request_is_accounted_for() {
        let out = run(&quick(), Predictor::Oracle, None).unwrap();
        for l in &out.logs {
            assert_eq!(l.reports.len(), l.totals.requests);
            let users: Vec<usize> = l.reports.iter().map(|r| r.user).collect();
            assert!(users.windows(2).all(|w| w[0] < w[1]));
        }
        assert_eq!(out.summary.requests, quick().num_users * quick().total_slots());
        let bound = out.summary.delay_lower_bound_s;
        assert!(out.summary.min_delay_s.unwrap() >= bound);
    }

    #[test]
    fn caches_change_only_between_periods() {
        let cfg = ScenarioConfig { num_periods: 2, ..quick() };
        let out = run(&cfg, Predictor::Oracle, None).unwrap();
        assert_eq!(out.plans.len(), 2);
        assert_eq!(out.plans[1].slots[0].slot, cfg.slots_per_cache_period);
        assert_eq!(out.logs.len(), 2 * cfg.slots_per_cache_period);
    }

    #[test]
    fn runs_are_deterministic() {
        let a = run(&quick(), Predictor::Oracle, None).unwrap();
        let b = run(&quick(), Predictor::Oracle, None).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn sampled_fading_runs_and_respects_invariants() {
        let cfg = ScenarioConfig { fading: FadingMode::Sampled, ..quick() };
        let out = run(&cfg, Predictor::Oracle, None).unwrap();
        assert!(out.summary.total_uav_power_w > 0.0);
    }

    #[test]
    fn fixed_placement_stays_at_minimum_altitude() {
        let out = run(&quick(), Predictor::Oracle, Some(Baseline::FixedPlacement)).unwrap();
        for u in out.logs.iter().flat_map(|l| &l.uavs).filter(|u| u.users > 0) {
            assert_eq!(u.position.h, quick().min_altitude_m);
            assert_eq!(u.method, Some(PlacementMethod::Fixed));
        }
    }

    #[test]
    fn baseline_names_round_trip() {
        for b in Baseline::ALL {
            assert_eq!(b.as_str().parse::<Baseline>(), Ok(b));
        }
        assert!("greedy".parse::<Baseline>().is_err());
    }
}
