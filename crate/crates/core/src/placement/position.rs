use serde::{Deserialize, Serialize};

use crate::channel::{free_space_pl, los_probability_at, pathloss_from, FadingDraw};
use crate::qoe::min_power_for_pathloss;
use crate::scenario::{Point2, Point3, ScenarioConfig};

use super::PlacementError;

/// A UAV user as seen by the position optimizer: where it is, the rate it
/// needs in every interval, and how many intervals it stands for.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlacementUser {
    pub position: Point2,
    pub rate_bps: f64,
    pub weight: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlacementMethod {
    ClosedForm,
    LocalSearch,
    Exhaustive,
    Fixed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// Altitude small against the coverage radius.
    Low,
    /// Altitude large against the coverage radius.
    High,
    Intermediate,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlacementResult {
    pub position: Point3,
    /// Σ weight·P_min over the UAV's users (W).
    pub objective_w: f64,
    pub method: PlacementMethod,
    pub evaluations: usize,
    pub accepted_moves: usize,
    /// Some user needs more than the UAV maximum power at this position.
    pub infeasible: bool,
}

/// Objective evaluator with the free-space term hoisted out.
struct Objective<'a> {
    users: &'a [PlacementUser],
    share: usize,
    cfg: &'a ScenarioConfig,
    l_fs: f64,
    evaluations: usize,
}

impl<'a> Objective<'a> {
    fn new(users: &'a [PlacementUser], share: usize, cfg: &'a ScenarioConfig) -> Self {
        let l_fs = free_space_pl(cfg.pathloss.fs_ref_distance_m, cfg.pathloss.carrier_hz);
        Objective { users, share, cfg, l_fs, evaluations: 0 }
    }

    fn pathloss(&self, uav: Point3, user: Point2) -> f64 {
        let d = uav.dist_to(user);
        let phi = (uav.h / d).clamp(-1.0, 1.0).asin().to_degrees();
        let pr = los_probability_at(phi, &self.cfg.pathloss);
        pathloss_from(d, pr, self.l_fs, &self.cfg.pathloss, &FadingDraw::MEAN)
    }

    fn power(&self, uav: Point3, u: &PlacementUser) -> f64 {
        let l = self.pathloss(uav, u.position);
        min_power_for_pathloss(u.rate_bps, self.share, l, self.cfg.uav_bandwidth_hz, self.cfg.noise_power_w)
    }

    fn eval(&mut self, uav: Point3) -> f64 {
        self.evaluations += 1;
        self.users.iter().map(|u| u.weight * self.power(uav, u)).sum()
    }

    fn infeasible(&self, uav: Point3) -> bool {
        self.users.iter().any(|u| self.power(uav, u) > self.cfg.uav_max_power_w)
    }

    fn result(&mut self, position: Point3, method: PlacementMethod, accepted_moves: usize) -> PlacementResult {
        let objective_w = self.eval(position);
        PlacementResult {
            position,
            objective_w,
            method,
            evaluations: self.evaluations,
            accepted_moves,
            infeasible: self.infeasible(position),
        }
    }
}

/// Σ weight·P_min for a UAV at `uav` whose band is split among `share`
/// users, with shadowing at its mean.
pub fn uav_objective(uav: Point3, users: &[PlacementUser], share: usize, cfg: &ScenarioConfig) -> f64 {
    Objective::new(users, share, cfg).eval(uav)
}

/// Minimum power each user needs at `uav`, in input order.
pub fn user_powers(uav: Point3, users: &[PlacementUser], share: usize, cfg: &ScenarioConfig) -> Vec<f64> {
    let o = Objective::new(users, share, cfg);
    users.iter().map(|u| o.power(uav, u)).collect()
}

/// ln ψ without the factors every user shares (noise and free-space loss),
/// which cancel in the weighted centroid. Stays finite where 2^x overflows.
fn ln_psi(u: &PlacementUser, share: usize, bandwidth_hz: f64) -> f64 {
    let x = u.rate_bps * share as f64 / bandwidth_hz * std::f64::consts::LN_2;
    let core = if x > 40.0 { x } else { x.exp_m1().ln() };
    core + u.weight.ln()
}

/// ψ-weighted centroid of the users, the power-optimal ground position when
/// the altitude is either negligible or dominant against the coverage
/// radius.
pub fn closed_form_xy(users: &[PlacementUser], share: usize, cfg: &ScenarioConfig) -> Result<Point2, PlacementError> {
    if users.is_empty() {
        return Err(PlacementError::NoUsers);
    }
    let logs: Vec<f64> = users.iter().map(|u| ln_psi(u, share, cfg.uav_bandwidth_hz)).collect();
    let top = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = if top.is_finite() {
        logs.iter().map(|l| (l - top).exp()).collect()
    } else {
        // All rates zero: every user weighs the same.
        vec![1.0; users.len()]
    };
    let total: f64 = w.iter().sum();
    let x = users.iter().zip(&w).map(|(u, w)| u.position.x * w).sum::<f64>() / total;
    let y = users.iter().zip(&w).map(|(u, w)| u.position.y * w).sum::<f64>() / total;
    Ok(Point2::new(x, y))
}

/// Which closed-form case applies at altitude `h` over `center`, judged by
/// the distance to the farthest user.
pub fn regime(users: &[PlacementUser], center: Point2, h: f64, cfg: &ScenarioConfig) -> Regime {
    let r2 = users.iter().map(|u| u.position.dist2(center)).fold(0.0, f64::max);
    let h2 = h * h;
    if h2 >= cfg.placement.high_regime_ratio * r2 {
        Regime::High
    } else if h2 <= cfg.placement.low_regime_ratio * r2 && cfg.pathloss.exponent_nlos == 2.0 {
        Regime::Low
    } else {
        Regime::Intermediate
    }
}

/// Best altitude over `xy`: a geometric scan of the allowed range, refined
/// by golden-section search around the best scan point.
fn best_altitude(o: &mut Objective, xy: Point2, h_min: f64, h_max: f64) -> f64 {
    const SCAN: usize = 24;
    let ratio = (h_max / h_min).powf(1.0 / (SCAN - 1) as f64);
    let hs: Vec<f64> = (0..SCAN).map(|k| h_min * ratio.powi(k as i32)).collect();
    let vals: Vec<f64> = hs.iter().map(|&h| o.eval(xy.at_height(h))).collect();
    let k = (0..SCAN).min_by(|&a, &b| vals[a].total_cmp(&vals[b]).then(a.cmp(&b))).unwrap_or(0);
    let (mut a, mut b) = (hs[k.saturating_sub(1)], hs[(k + 1).min(SCAN - 1)]);
    let g = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..40 {
        let c = b - g * (b - a);
        let d = a + g * (b - a);
        if o.eval(xy.at_height(c)) <= o.eval(xy.at_height(d)) {
            b = d;
        } else {
            a = c;
        }
    }
    let mid = 0.5 * (a + b);
    if o.eval(xy.at_height(mid)) < vals[k] {
        mid
    } else {
        hs[k]
    }
}

/// Coordinate descent with ±step moves tried in the order x, y, h. Only
/// strict improvements are taken; the altitude stays within the configured
/// band. Stops at a local optimum or when the evaluation budget runs out.
pub fn place_local_search(
    users: &[PlacementUser],
    share: usize,
    init: Point3,
    cfg: &ScenarioConfig,
) -> Result<PlacementResult, PlacementError> {
    if users.is_empty() {
        return Err(PlacementError::NoUsers);
    }
    let mut o = Objective::new(users, share, cfg);
    local_search(&mut o, init, 0)
}

fn local_search(o: &mut Objective, init: Point3, spent: usize) -> Result<PlacementResult, PlacementError> {
    let cfg = o.cfg;
    let (h_min, h_max) = (cfg.min_altitude_m, cfg.placement.max_altitude_m);
    let step = cfg.placement.step_m;
    let budget = cfg.placement.max_evaluations;
    let mut pos = Point3::new(init.x, init.y, init.h.clamp(h_min, h_max));
    let mut best = o.eval(pos);
    let mut moves = 0;
    let deltas =
        [(step, 0.0, 0.0), (-step, 0.0, 0.0), (0.0, step, 0.0), (0.0, -step, 0.0), (0.0, 0.0, step), (0.0, 0.0, -step)];
    'outer: loop {
        let mut improved = false;
        for (dx, dy, dh) in deltas {
            if o.evaluations + spent >= budget {
                break 'outer;
            }
            let cand = Point3::new(pos.x + dx, pos.y + dy, (pos.h + dh).clamp(h_min, h_max));
            if cand == pos {
                continue;
            }
            let v = o.eval(cand);
            if v < best {
                best = v;
                pos = cand;
                moves += 1;
                improved = true;
            }
        }
        if !improved {
            break;
        }
    }
    Ok(o.result(pos, PlacementMethod::LocalSearch, moves))
}

/// Closed form at the minimum altitude when a closed-form case applies,
/// otherwise an altitude search over the closed-form ground position
/// followed by local search.
pub fn place_uav(
    users: &[PlacementUser],
    share: usize,
    cfg: &ScenarioConfig,
) -> Result<PlacementResult, PlacementError> {
    let xy = closed_form_xy(users, share, cfg)?;
    let mut o = Objective::new(users, share, cfg);
    if regime(users, xy, cfg.min_altitude_m, cfg) != Regime::Intermediate {
        return Ok(o.result(xy.at_height(cfg.min_altitude_m), PlacementMethod::ClosedForm, 0));
    }
    let h = best_altitude(&mut o, xy, cfg.min_altitude_m, cfg.placement.max_altitude_m);
    local_search(&mut o, xy.at_height(h), 0)
}

/// Closed-form ground position at the minimum altitude, whatever the
/// regime.
pub fn place_closed_form(
    users: &[PlacementUser],
    share: usize,
    cfg: &ScenarioConfig,
) -> Result<PlacementResult, PlacementError> {
    let xy = closed_form_xy(users, share, cfg)?;
    Ok(Objective::new(users, share, cfg).result(xy.at_height(cfg.min_altitude_m), PlacementMethod::ClosedForm, 0))
}

/// Evaluates a given position without optimizing.
pub fn place_fixed(users: &[PlacementUser], share: usize, position: Point3, cfg: &ScenarioConfig) -> PlacementResult {
    Objective::new(users, share, cfg).result(position, PlacementMethod::Fixed, 0)
}

/// Grid search over the users' bounding box padded by `pad_m`, with ground
/// spacing `step_m` and the given altitudes. Ties keep the first point in
/// x, y, h order.
pub fn place_exhaustive(
    users: &[PlacementUser],
    share: usize,
    step_m: f64,
    pad_m: f64,
    h_grid: &[f64],
    cfg: &ScenarioConfig,
) -> Result<PlacementResult, PlacementError> {
    if users.is_empty() {
        return Err(PlacementError::NoUsers);
    }
    if !(step_m > 0.0) || h_grid.is_empty() || h_grid.iter().any(|h| !(*h > 0.0)) {
        return Err(PlacementError::EmptyGrid);
    }
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for u in users {
        x0 = x0.min(u.position.x);
        x1 = x1.max(u.position.x);
        y0 = y0.min(u.position.y);
        y1 = y1.max(u.position.y);
    }
    let (x0, y0) = (x0 - pad_m, y0 - pad_m);
    let nx = ((x1 + pad_m - x0) / step_m).floor() as usize + 1;
    let ny = ((y1 + pad_m - y0) / step_m).floor() as usize + 1;
    let mut o = Objective::new(users, share, cfg);
    let mut best = (f64::INFINITY, Point3::new(x0, y0, h_grid[0]));
    for i in 0..nx {
        for j in 0..ny {
            for &h in h_grid {
                let p = Point3::new(x0 + i as f64 * step_m, y0 + j as f64 * step_m, h);
                let v = o.eval(p);
                if v < best.0 {
                    best = (v, p);
                }
            }
        }
    }
    Ok(o.result(best.1, PlacementMethod::Exhaustive, 0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qoe::min_uav_power;
    use crate::scenario::RandomSource;
    use proptest::prelude::*;
    use rand::Rng;

    fn user(x: f64, y: f64, rate: f64) -> PlacementUser {
        PlacementUser { position: Point2::new(x, y), rate_bps: rate, weight: 1.0 }
    }

    #[test]
    fn objective_matches_per_user_power() {
        let cfg = ScenarioConfig::default();
        let uav = Point3::new(10.0, -20.0, 120.0);
        let users = [user(0.0, 0.0, 5e6), user(50.0, 30.0, 2e7)];
        let direct: f64 = users.iter().map(|u| min_uav_power(uav, u.position, u.rate_bps, 2, &cfg).unwrap()).sum();
        assert!((uav_objective(uav, &users, 2, &cfg) - direct).abs() <= 1e-12 * direct);
    }

    #[test]
    fn symmetric_pair_centroid() {
        let cfg = ScenarioConfig::default();
        let xy = closed_form_xy(&[user(0.0, 0.0, 5e6), user(10.0, 0.0, 5e6)], 2, &cfg).unwrap();
        assert_eq!(xy, Point2::new(5.0, 0.0));
        let one = closed_form_xy(&[user(7.0, -3.0, 1e7)], 1, &cfg).unwrap();
        assert_eq!(one, Point2::new(7.0, -3.0));
        assert_eq!(closed_form_xy(&[], 1, &cfg), Err(PlacementError::NoUsers));
    }

    #[test]
    fn heavier_rate_pulls_centroid() {
        let cfg = ScenarioConfig::default();
        let xy = closed_form_xy(&[user(0.0, 0.0, 5e6), user(10.0, 0.0, 5e9)], 2, &cfg).unwrap();
        assert!(xy.x > 5.0);
        // Rates far beyond the band overflow 2^x; the weights must not.
        let xy = closed_form_xy(&[user(0.0, 0.0, 1e12), user(10.0, 0.0, 2e12)], 2, &cfg).unwrap();
        assert!((xy.x - 10.0).abs() < 1e-9);
    }

    fn high_regime_instance(seed: u64) -> (Vec<PlacementUser>, ScenarioConfig) {
        let cfg = ScenarioConfig::default();
        let mut rng = RandomSource::new(seed).rng();
        let (cx, cy) = (rng.gen_range(-300.0..300.0), rng.gen_range(-300.0..300.0));
        let n = rng.gen_range(1..=10);
        let users = (0..n)
            .map(|_| {
                let r = rng.gen_range(0.0..9.0);
                let a = rng.gen_range(0.0..std::f64::consts::TAU);
                user(cx + r * a.cos(), cy + r * a.sin(), rng.gen_range(2e6..4e8))
            })
            .collect();
        (users, cfg)
    }

    #[test]
    fn closed_form_near_grid_optimum_in_regime() {
        for seed in 0..3 {
            let (users, cfg) = high_regime_instance(seed);
            let share = users.len();
            let cf = place_uav(&users, share, &cfg).unwrap();
            assert_eq!(cf.method, PlacementMethod::ClosedForm);
            let grid = place_exhaustive(&users, share, 3.0, 100.0, &[100.0, 110.0], &cfg).unwrap();
            assert!(cf.objective_w <= 1.1 * grid.objective_w);
        }
    }

    #[test]
    fn local_search_from_optimum_barely_moves() {
        let (users, cfg) = high_regime_instance(4);
        let cf = place_closed_form(&users, users.len(), &cfg).unwrap();
        let ls = place_local_search(&users, users.len(), cf.position, &cfg).unwrap();
        assert!(ls.accepted_moves <= 1, "{}", ls.accepted_moves);
        assert!(ls.objective_w <= cf.objective_w);
    }

    #[test]
    fn single_user_grid_optimum_overhead_at_min_altitude() {
        let cfg = ScenarioConfig::default();
        let users = [user(12.0, -6.0, 1e7)];
        let r = place_exhaustive(&users, 1, 3.0, 30.0, &[100.0, 150.0, 200.0], &cfg).unwrap();
        assert_eq!(r.position.h, 100.0);
        assert!(r.position.ground().dist(users[0].position) < 3.0);
    }

    #[test]
    fn refining_grid_never_worse() {
        let (users, cfg) = high_regime_instance(9);
        let coarse = place_exhaustive(&users, 3, 6.0, 30.0, &[100.0], &cfg).unwrap();
        let fine = place_exhaustive(&users, 3, 3.0, 30.0, &[100.0], &cfg).unwrap();
        assert!(fine.objective_w <= coarse.objective_w);
        assert_eq!(place_exhaustive(&users, 3, 3.0, 30.0, &[], &cfg), Err(PlacementError::EmptyGrid));
    }

    #[test]
    fn intermediate_regime_uses_search() {
        let cfg = ScenarioConfig::default();
        let users: Vec<_> = (0..6).map(|k| user(40.0 * k as f64, 25.0 * (k % 3) as f64, 1e7)).collect();
        let xy = closed_form_xy(&users, 6, &cfg).unwrap();
        assert_eq!(regime(&users, xy, cfg.min_altitude_m, &cfg), Regime::Intermediate);
        let r = place_uav(&users, 6, &cfg).unwrap();
        assert_eq!(r.method, PlacementMethod::LocalSearch);
        assert!(r.position.h >= cfg.min_altitude_m);
        let at_cf = uav_objective(xy.at_height(cfg.min_altitude_m), &users, 6, &cfg);
        assert!(r.objective_w <= at_cf);
    }

    #[test]
    fn low_regime_closed_form_exact_with_square_law() {
        let mut cfg = ScenarioConfig::default();
        cfg.pathloss.exponent_nlos = 2.0;
        cfg.min_altitude_m = 2.0;
        let users = [user(0.0, 0.0, 1e7), user(300.0, 0.0, 2e7), user(0.0, 250.0, 1e7)];
        let xy = closed_form_xy(&users, 3, &cfg).unwrap();
        assert_eq!(regime(&users, xy, 2.0, &cfg), Regime::Low);
        let cf = place_uav(&users, 3, &cfg).unwrap();
        let grid = place_exhaustive(&users, 3, 3.0, 10.0, &[2.0], &cfg).unwrap();
        assert!(cf.objective_w <= grid.objective_w * (1.0 + 1e-6));
    }

    #[test]
    fn infeasible_flagged() {
        let cfg = ScenarioConfig::default();
        let r = place_fixed(&[user(0.0, 0.0, 5e10)], 1, Point3::new(0.0, 0.0, 100.0), &cfg);
        assert!(r.infeasible);
        let r = place_fixed(&[user(0.0, 0.0, 1e6)], 1, Point3::new(0.0, 0.0, 100.0), &cfg);
        assert!(!r.infeasible);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]
        #[test]
        fn centroid_translates(seed in 0u64..10_000, a in -500.0f64..500.0, b in -500.0f64..500.0) {
            let (users, cfg) = high_regime_instance(seed);
            let moved: Vec<_> = users.iter().map(|u| PlacementUser {
                position: Point2::new(u.position.x + a, u.position.y + b), ..*u
            }).collect();
            let p = closed_form_xy(&users, users.len(), &cfg).unwrap();
            let q = closed_form_xy(&moved, users.len(), &cfg).unwrap();
            prop_assert!((q.x - p.x - a).abs() < 1e-7 && (q.y - p.y - b).abs() < 1e-7);
        }

        #[test]
        fn local_search_never_worsens(seed in 0u64..10_000) {
            let cfg = ScenarioConfig::default();
            let mut rng = RandomSource::new(seed).rng();
            let users: Vec<_> = (0..rng.gen_range(1..8))
                .map(|_| user(rng.gen_range(-200.0..200.0), rng.gen_range(-200.0..200.0), rng.gen_range(1e6..5e7)))
                .collect();
            let init = Point3::new(rng.gen_range(-100.0..100.0), rng.gen_range(-100.0..100.0), rng.gen_range(100.0..300.0));
            let start = uav_objective(init, &users, users.len(), &cfg);
            let r = place_local_search(&users, users.len(), init, &cfg).unwrap();
            prop_assert!(r.objective_w <= start);
            prop_assert!(r.position.h >= cfg.min_altitude_m);
            prop_assert!(r.evaluations <= cfg.placement.max_evaluations + 1);
        }
    }
}
