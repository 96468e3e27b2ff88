//! Synthetic users with known ground truth.
//!
//! Every user has a home, a workplace and two leisure spots; some
//! workplaces sit next to a radio head, as offices host small cells.
//! Weekdays run home, commute, work, leisure, home; weekends stay home apart
//! from a midday outing. Hourly waypoints get Gaussian jitter and users move
//! at constant speed between consecutive waypoints. Requests follow a Zipf
//! law over a per-profile ranking, reshaped by the hour of day.

use rand::Rng;
use rand_distr::{Distribution, Normal, WeightedIndex};

use crate::qoe::device_requirement;
use crate::scenario::{Point2, RandomSource, RrhCluster, ScenarioConfig};

pub const HOURS_PER_WEEK: usize = 168;
pub const SECONDS_PER_HOUR: f64 = 3600.0;
/// Working hours on weekdays, [start, end).
pub const WORK_HOURS: (usize, usize) = (9, 17);

/// Work profile.
pub const PROFILE_WORK: usize = 0;
/// Entertainment profile.
pub const PROFILE_LEISURE: usize = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticUser {
    pub id: usize,
    pub home: Point2,
    pub work: Point2,
    pub leisure: Point2,
    pub outing: Point2,
    /// Hours by which this user's weekday schedule is late.
    pub shift_h: usize,
    pub stationary: bool,
    pub profile: usize,
    pub device: usize,
    pub screen_factor: f64,
}

impl SyntheticUser {
    /// Noise-free waypoint at an hour of a weekday or weekend day.
    pub fn template(&self, weekend: bool, hour: usize) -> Point2 {
        if self.stationary {
            return self.home;
        }
        if weekend {
            return if (11..16).contains(&hour) { self.outing } else { self.home };
        }
        let h = hour as isize - self.shift_h as isize;
        match h {
            ..=6 => self.home,
            7..=15 => self.work,
            16..=17 => self.leisure,
            _ => self.home,
        }
    }

    pub fn device_requirement_bps(&self, cfg: &ScenarioConfig) -> f64 {
        device_requirement(self.screen_factor, cfg.device.base_rate_bps)
    }
}

pub fn day_of_week(abs_hour: usize) -> usize {
    (abs_hour / 24) % 7
}

pub fn is_weekend(abs_hour: usize) -> bool {
    day_of_week(abs_hour) >= 5
}

pub fn hour_of_day(abs_hour: usize) -> usize {
    abs_hour % 24
}

fn working_time(abs_hour: usize) -> bool {
    !is_weekend(abs_hour) && (WORK_HOURS.0..WORK_HOURS.1).contains(&hour_of_day(abs_hour))
}

/// Absolute hour (from Monday 00:00 of the first history week) at which
/// cache period `p` starts.
pub fn period_start_hour(cfg: &ScenarioConfig, p: usize) -> usize {
    let g = &cfg.generators;
    g.history_weeks * HOURS_PER_WEEK + g.start_day * 24 + g.start_hour + p * cfg.hours_per_period()
}

/// Clock time of slot `tau` of period `p`, in seconds. The H slots of an
/// hour are spread evenly over it.
pub fn slot_time_s(cfg: &ScenarioConfig, p: usize, tau: usize) -> f64 {
    period_start_hour(cfg, p) as f64 * SECONDS_PER_HOUR
        + tau as f64 * SECONDS_PER_HOUR / cfg.slots_per_collection as f64
}

/// Clock time at the middle of interval `t` of a slot.
pub fn interval_time_s(cfg: &ScenarioConfig, p: usize, tau: usize, t: usize) -> f64 {
    slot_time_s(cfg, p, tau) + (t as f64 + 0.5) * cfg.interval_duration_s()
}

/// Absolute slot index, used to key per-slot random streams.
pub fn absolute_slot(cfg: &ScenarioConfig, p: usize, tau: usize) -> usize {
    period_start_hour(cfg, p) * cfg.slots_per_collection + tau
}

/// The whole synthetic population and its ground truth.
#[derive(Debug, Clone)]
pub struct World {
    pub cfg: ScenarioConfig,
    pub users: Vec<SyntheticUser>,
    /// RRH clusters with no users attached.
    pub rrh_clusters: Vec<RrhCluster>,
    waypoints: Vec<Vec<Point2>>,
    /// Request distribution per [profile][weekend][hour of day].
    truth: Vec<Vec<Vec<Vec<f64>>>>,
    rs: RandomSource,
}

fn uniform_in_disk<R: Rng>(rng: &mut R, r: f64) -> Point2 {
    let rho = r * rng.gen::<f64>().sqrt();
    let a = rng.gen_range(0.0..std::f64::consts::TAU);
    Point2::new(rho * a.cos(), rho * a.sin())
}

/// E clusters on a ring at 0.6 r, each holding its share of the R RRHs on a
/// 60 m circle around the cluster centre.
pub fn rrh_layout(cfg: &ScenarioConfig, rs: &RandomSource) -> Vec<RrhCluster> {
    let mut rng = rs.derive("rrh-layout").rng();
    let e = cfg.num_rrh_clusters;
    let phase = rng.gen_range(0.0..std::f64::consts::TAU);
    (0..e)
        .map(|q| {
            let a = phase + std::f64::consts::TAU * q as f64 / e as f64;
            let c = Point2::new(0.6 * cfg.area_radius_m * a.cos(), 0.6 * cfg.area_radius_m * a.sin());
            let count = cfg.num_rrhs / e + usize::from(q < cfg.num_rrhs % e);
            let spin = rng.gen_range(0.0..std::f64::consts::TAU);
            let rrhs = (0..count)
                .map(|j| {
                    let b = spin + std::f64::consts::TAU * j as f64 / count as f64;
                    Point2::new(c.x + 60.0 * b.cos(), c.y + 60.0 * b.sin()).clamp_to_disk(cfg.area_radius_m)
                })
                .collect();
            RrhCluster { id: q, rrhs, users: Vec::new() }
        })
        .collect()
}

/// Ranking of contents for a profile: the work profile ranks contents in id
/// order, the leisure profile starts further down the catalog, by half the
/// catalog when the profiles share nothing.
pub fn profile_ranking(cfg: &ScenarioConfig, profile: usize) -> Vec<usize> {
    let n = cfg.num_contents;
    let shift = if profile == PROFILE_WORK {
        0
    } else {
        ((1.0 - cfg.generators.profile_overlap) * n as f64 / 2.0).round() as usize
    };
    (0..n).map(|r| (r + shift) % n).collect()
}

/// Whether a content is work material (the first half of the catalog).
pub fn is_work_content(cfg: &ScenarioConfig, n: usize) -> bool {
    n < cfg.num_contents.div_ceil(2)
}

/// Exact request distribution of a profile at an absolute hour. During
/// working time work-profile users favour work content by the modulation
/// factor; otherwise both profiles favour leisure content.
pub fn request_distribution(cfg: &ScenarioConfig, profile: usize, abs_hour: usize) -> Vec<f64> {
    let g = &cfg.generators;
    let n = cfg.num_contents;
    let mut w = vec![0.0; n];
    for (rank, &c) in profile_ranking(cfg, profile).iter().enumerate() {
        w[c] = ((rank + 1) as f64).powf(-g.zipf_exponent);
    }
    let working = working_time(abs_hour);
    for (c, x) in w.iter_mut().enumerate() {
        let work = is_work_content(cfg, c);
        let boost = match (profile, working) {
            (PROFILE_WORK, true) => work,
            (_, false) => !work,
            _ => false,
        };
        if boost {
            *x *= g.hour_modulation;
        }
    }
    let total: f64 = w.iter().sum();
    w.iter().map(|x| x / total).collect()
}

impl World {
    pub fn generate(cfg: &ScenarioConfig) -> World {
        let rs = RandomSource::new(cfg.seed).derive("world");
        let g = &cfg.generators;
        let r = cfg.area_radius_m;
        let profiles = WeightedIndex::new(&g.profile_weights).expect("validated weights");
        let devices = WeightedIndex::new(&g.device_weights).expect("validated weights");
        let rrh_clusters = rrh_layout(cfg, &rs);
        let rrhs: Vec<Point2> = rrh_clusters.iter().flat_map(|c| c.rrhs.iter().copied()).collect();
        let users: Vec<SyntheticUser> = (0..cfg.num_users)
            .map(|id| {
                let mut rng = rs.derive_index("user", id as u64).rng();
                let home = uniform_in_disk(&mut rng, 0.95 * r);
                let mut work = uniform_in_disk(&mut rng, 0.95 * r);
                let leisure = uniform_in_disk(&mut rng, 0.95 * r);
                let outing = uniform_in_disk(&mut rng, 0.95 * r);
                let shift_h = rng.gen_range(0..3);
                let stationary = rng.gen::<f64>() < g.stationary_fraction;
                let profile = profiles.sample(&mut rng);
                let device = devices.sample(&mut rng);
                if rng.gen::<f64>() < g.rrh_hotspot_fraction && !rrhs.is_empty() {
                    let site = rrhs[rng.gen_range(0..rrhs.len())];
                    let d = uniform_in_disk(&mut rng, g.rrh_hotspot_radius_m);
                    work = Point2::new(site.x + d.x, site.y + d.y).clamp_to_disk(r);
                }
                SyntheticUser {
                    id,
                    home,
                    work,
                    leisure,
                    outing,
                    shift_h,
                    stationary,
                    profile,
                    device,
                    screen_factor: cfg.device.screen_factors[device],
                }
            })
            .collect();
        let hours = period_start_hour(cfg, cfg.num_periods) + cfg.esn.horizon + 2;
        let noise = Normal::new(0.0, g.position_noise_m).expect("validated noise");
        let waypoints = users
            .iter()
            .map(|u| {
                let mut rng = rs.derive_index("waypoints", u.id as u64).rng();
                (0..hours)
                    .map(|a| {
                        let base = u.template(is_weekend(a), hour_of_day(a));
                        let jitter = Point2::new(noise.sample(&mut rng), noise.sample(&mut rng));
                        Point2::new(base.x + jitter.x, base.y + jitter.y).clamp_to_disk(r)
                    })
                    .collect()
            })
            .collect();
        let truth = (0..2)
            .map(|p| {
                [false, true]
                    .iter()
                    .map(|&weekend| {
                        // Monday (hour 0..) or Saturday (hour 120..) as representatives.
                        let day0 = if weekend { 5 * 24 } else { 0 };
                        (0..24).map(|h| request_distribution(cfg, p, day0 + h)).collect()
                    })
                    .collect()
            })
            .collect();
        World { cfg: cfg.clone(), rrh_clusters, users, waypoints, truth, rs }
    }

    /// Hours of waypoints generated.
    pub fn hours(&self) -> usize {
        self.waypoints.first().map_or(0, Vec::len)
    }

    pub fn waypoint(&self, user: usize, abs_hour: usize) -> Point2 {
        let w = &self.waypoints[user];
        w[abs_hour.min(w.len() - 1)]
    }

    /// Position at a clock time, moving at constant speed between the
    /// surrounding hourly waypoints.
    pub fn position_at(&self, user: usize, time_s: f64) -> Point2 {
        let h = (time_s / SECONDS_PER_HOUR).max(0.0);
        let a = h.floor() as usize;
        self.waypoint(user, a).lerp(self.waypoint(user, a + 1), h - a as f64)
    }

    /// The exact distribution user requests are drawn from at an hour.
    pub fn true_distribution(&self, user: usize, abs_hour: usize) -> &[f64] {
        &self.truth[self.users[user].profile][usize::from(is_weekend(abs_hour))][hour_of_day(abs_hour)]
    }

    /// Request of a user in an absolute slot, if any.
    pub fn request(&self, user: usize, abs_slot: usize) -> Option<usize> {
        let mut rng = self.rs.derive_index("requests", user as u64).derive_index("slot", abs_slot as u64).rng();
        if rng.gen::<f64>() >= self.cfg.generators.request_probability {
            return None;
        }
        let hour = abs_slot / self.cfg.slots_per_collection;
        let p = self.true_distribution(user, hour);
        Some(WeightedIndex::new(p).expect("valid distribution").sample(&mut rng))
    }

    /// Requests of a user in every slot of the hours before `end_hour`, as
    /// (absolute hour, content) pairs.
    pub fn request_history(&self, user: usize, end_hour: usize) -> Vec<(usize, usize)> {
        let h = self.cfg.slots_per_collection;
        (0..end_hour * h).filter_map(|s| self.request(user, s).map(|c| (s / h, c))).collect()
    }
}
