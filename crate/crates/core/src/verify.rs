//! Cross-module property checks behind `skycache verify`.
//!
//! Every property runs on randomized instances drawn from the configuration
//! and reports pass or fail, the number of cases checked and, on failure,
//! the first counterexample.

use rand::Rng;
use rand_distr::Exp1;
use serde::Serialize;

use crate::cesn::{compute_conceptor, conceptor_not, conceptor_or, Conceptor, EsnModel};
use crate::channel::{cluster_channel, zf_precoder};
use crate::numerics::{raw_reservoir, spectral_radius, tol, Mat};
use crate::placement::{
    exhaustive_cache, place_closed_form, place_exhaustive, place_local_search, regime, select_cache, CacheDemand,
    PlacementUser, Regime,
};
use crate::qoe::{delay, delay_lower_bound, max_uav_rate_bps, DeliveryPath};
use crate::scenario::{validate, Point2, RandomSource, ScenarioConfig};
use crate::sim::generator::rrh_layout;
use crate::sim::{run, Predictor, SimError};

/// Property names in report order.
pub const PROPERTIES: [&str; 6] =
    ["echo_state", "delay_lower_bound", "conceptor_algebra", "zero_forcing", "cache_selection", "placement"];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PropertyReport {
    pub name: &'static str,
    pub passed: bool,
    pub cases: usize,
    pub detail: String,
    pub counterexample: Option<String>,
}

impl PropertyReport {
    pub fn line(&self) -> String {
        let verdict = if self.passed { "PASS" } else { "FAIL" };
        let mut s = format!("{verdict} {} ({} cases): {}", self.name, self.cases, self.detail);
        if let Some(c) = &self.counterexample {
            s.push_str("\n  counterexample: ");
            s.push_str(c);
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub properties: Vec<PropertyReport>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.properties.iter().all(|p| p.passed)
    }
}

/// Runs every property against `cfg`. The configuration need not be valid;
/// broken fields show up as failures of the properties that depend on them.
pub fn verify(cfg: &ScenarioConfig) -> VerifyReport {
    let rs = RandomSource::new(cfg.seed).derive("verify");
    VerifyReport {
        properties: vec![
            echo_state(cfg, &rs.derive("echo-state")),
            delay_bound(cfg, &rs.derive("delay")),
            conceptor_algebra(cfg, &rs.derive("conceptor")),
            zero_forcing(cfg, &rs.derive("zero-forcing")),
            cache_selection(&rs.derive("cache")),
            placement(cfg, &rs.derive("placement")),
        ],
    }
}

fn report(name: &'static str, cases: usize, detail: String, counterexample: Option<String>) -> PropertyReport {
    PropertyReport { name, passed: counterexample.is_none(), cases, detail, counterexample }
}

const ECHO_STEPS: usize = 300;
const ECHO_CONTRACTION: f64 = 1e-6;

/// Reservoir spectral radius below one, and two different initial states
/// under a common input converge.
fn echo_state(cfg: &ScenarioConfig, rs: &RandomSource) -> PropertyReport {
    let e = &cfg.esn;
    let name = PROPERTIES[0];
    if e.reservoir_size == 0 || !(e.spectral_radius > 0.0) || !e.spectral_radius.is_finite() {
        let c = format!("reservoir_size {}, spectral_radius {}", e.reservoir_size, e.spectral_radius);
        return report(name, 0, "reservoir cannot be built".into(), Some(c));
    }
    let density = if e.density > 0.0 && e.density <= 1.0 { e.density } else { 0.1 };
    let w = match raw_reservoir(e.reservoir_size, density, e.spectral_radius, &rs.derive("reservoir")) {
        Ok(w) => w,
        Err(err) => return report(name, 0, "reservoir cannot be built".into(), Some(err.to_string())),
    };
    let rho = spectral_radius(&w);
    let n = w.rows();
    let mut rng = rs.derive("drive").rng();
    let input_dim = 3;
    let w_in_data: Vec<f64> = (0..n * input_dim).map(|_| e.input_scale * rng.gen_range(-1.0..1.0)).collect();
    let bias: Vec<f64> = (0..n).map(|_| e.bias_scale * rng.gen_range(-1.0..1.0)).collect();
    let model = match EsnModel::from_parts(Mat::from_rows(n, input_dim, &w_in_data), w, bias, 1, 1.0, 0.0, 0) {
        Ok(m) => m,
        Err(err) => return report(name, 0, "reservoir cannot be built".into(), Some(err.to_string())),
    };
    let inputs: Vec<Vec<f64>> =
        (0..ECHO_STEPS).map(|_| (0..input_dim).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
    let a0: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let b0: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let gap = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let (a, b) = match (model.drive(&inputs, &a0), model.drive(&inputs, &b0)) {
        (Ok(a), Ok(b)) => (a, b),
        (Err(err), _) | (_, Err(err)) => return report(name, 0, "drive failed".into(), Some(err.to_string())),
    };
    let start = gap(&a0, &b0);
    let end = gap(&a[ECHO_STEPS - 1], &b[ECHO_STEPS - 1]);
    let detail = format!("spectral radius {rho:.6}, state gap {start:.3e} -> {end:.3e} after {ECHO_STEPS} steps");
    let bad = if rho >= 1.0 {
        Some(format!("spectral radius {rho:.6} >= 1 (configured {})", e.spectral_radius))
    } else if end > ECHO_CONTRACTION * start {
        Some(format!("state gap only shrank from {start:.3e} to {end:.3e}"))
    } else {
        None
    };
    report(name, 1, detail, bad)
}

const DELAY_PATHS: usize = 10_000;

/// No delivery beats the delay lower bound: random paths within the
/// physical rate limits, then every delivery of an oracle run.
fn delay_bound(cfg: &ScenarioConfig, rs: &RandomSource) -> PropertyReport {
    let name = PROPERTIES[1];
    let bound = delay_lower_bound(cfg);
    let l = cfg.content_size_bits;
    let slot = cfg.slot_duration_s;
    let c_max = max_uav_rate_bps(cfg) * slot;
    let mut rng = rs.rng();
    let mut cases = 0;
    for _ in 0..DELAY_PATHS {
        let access = c_max * rng.gen_range(1e-6..=1.0);
        let path = match rng.gen_range(0..3) {
            0 => DeliveryPath::ServerViaRrh {
                fronthaul_bps: cfg.fronthaul_rate_bps * rng.gen_range(1e-6..=1.0),
                access_bits: access,
            },
            1 => DeliveryPath::ServerViaUav {
                fronthaul_bits: if rng.gen_bool(0.2) { f64::INFINITY } else { c_max * rng.gen_range(1e-6..=1.0) },
                access_bits: access,
            },
            _ => DeliveryPath::UavCache { access_bits: access },
        };
        let Ok(d) = delay(&path, l, slot) else { continue };
        cases += 1;
        if d < bound {
            return report(name, cases, format!("bound {bound:.6e} s"), Some(format!("{path:?}: delay {d:.6e} s")));
        }
    }
    let runnable = validate(cfg).iter().all(|v| v.path.starts_with("esn."));
    if !runnable {
        return report(name, cases, format!("bound {bound:.6e} s; scenario run skipped (invalid config)"), None);
    }
    let out = match run(cfg, Predictor::Oracle, None) {
        Ok(out) => out,
        Err(SimError::Invariant { slot, message }) => {
            return report(name, cases, format!("bound {bound:.6e} s"), Some(format!("slot {slot}: {message}")))
        }
        Err(err) => return report(name, cases, "scenario run failed".into(), Some(err.to_string())),
    };
    for r in out.logs.iter().flat_map(|l| &l.reports).filter(|r| r.link.is_some()) {
        cases += 1;
        if r.delay_s < bound {
            let c = format!("slot {} user {} link {:?}: delay {:.6e} s", r.slot, r.user, r.link, r.delay_s);
            return report(name, cases, format!("bound {bound:.6e} s"), Some(c));
        }
    }
    report(name, cases, format!("bound {bound:.6e} s"), None)
}

const CONCEPTORS: usize = 100;
const CONCEPTOR_DIM: usize = 10;

/// Eigenvalues in [0, 1), double negation, OR with zero and OR
/// commutativity on random conceptors.
fn conceptor_algebra(cfg: &ScenarioConfig, rs: &RandomSource) -> PropertyReport {
    let name = PROPERTIES[2];
    let aperture = if cfg.esn.aperture > 0.0 && cfg.esn.aperture.is_finite() { cfg.esn.aperture } else { 10.0 };
    let eps = tol::CONCEPTOR_ALGEBRA;
    let mut rng = rs.rng();
    let random = |rng: &mut rand_chacha::ChaCha8Rng| {
        let len = rng.gen_range(2..4 * CONCEPTOR_DIM);
        let rank = rng.gen_range(1..=CONCEPTOR_DIM);
        let basis: Vec<f64> = (0..CONCEPTOR_DIM * rank).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let basis = Mat::from_rows(CONCEPTOR_DIM, rank, &basis);
        let coef: Vec<f64> = (0..rank * len).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let states = &basis * &Mat::from_rows(rank, len, &coef);
        compute_conceptor(&states, aperture)
    };
    let zero = Conceptor::zero(CONCEPTOR_DIM, aperture);
    let mut worst = 0.0_f64;
    for case in 1..=CONCEPTORS {
        let a = random(&mut rng);
        let b = random(&mut rng);
        let eig = a.eigenvalues();
        if let Some(&e) = eig.iter().find(|&&e| e < -eps || e >= 1.0) {
            return report(name, case, String::new(), Some(format!("eigenvalue {e:.17} outside [0, 1): {eig:?}")));
        }
        let checks = [
            ("not not M = M", (&conceptor_not(&conceptor_not(&a)).m - &a.m).max_abs()),
            ("M or 0 = M", (&conceptor_or(&a, &zero).map(|c| c.m).unwrap_or_else(|_| zero.m.clone()) - &a.m).max_abs()),
            (
                "M or N = N or M",
                match (conceptor_or(&a, &b), conceptor_or(&b, &a)) {
                    (Ok(ab), Ok(ba)) => (&ab.m - &ba.m).max_abs(),
                    _ => f64::INFINITY,
                },
            ),
        ];
        for (law, err) in checks {
            worst = worst.max(err);
            if !(err <= eps) {
                return report(name, case, String::new(), Some(format!("{law}: deviation {err:.3e} in case {case}")));
            }
        }
    }
    report(name, CONCEPTORS, format!("largest deviation {worst:.3e} (limit {eps:.0e})"), None)
}

const ZF_INSTANCES: usize = 1000;
const ZF_SPREAD_M: f64 = 100.0;

/// ‖H·F − I‖∞ on random users around the configured RRH clusters with
/// Rayleigh fading. Rank-deficient draws are infeasible and skipped.
fn zero_forcing(cfg: &ScenarioConfig, rs: &RandomSource) -> PropertyReport {
    let name = PROPERTIES[3];
    let clusters: Vec<_> = rrh_layout(cfg, &rs.derive("layout")).into_iter().filter(|c| !c.rrhs.is_empty()).collect();
    if clusters.is_empty() {
        return report(name, 0, "no radio heads configured".into(), None);
    }
    let mut rng = rs.rng();
    let (mut cases, mut skipped, mut worst) = (0, 0, 0.0_f64);
    while cases < ZF_INSTANCES && skipped < 10 * ZF_INSTANCES {
        let c = &clusters[rng.gen_range(0..clusters.len())];
        let users = rng.gen_range(1..=c.rrhs.len());
        let centre = c.centroid();
        let members: Vec<(usize, Point2)> = (0..users)
            .map(|u| {
                let r = ZF_SPREAD_M * rng.gen::<f64>().sqrt();
                let a = rng.gen_range(0.0..std::f64::consts::TAU);
                (u, Point2::new(centre.x + r * a.cos(), centre.y + r * a.sin()))
            })
            .collect();
        let gains: Vec<f64> = (0..users * c.rrhs.len()).map(|_| rng.sample::<f64, _>(Exp1)).collect();
        let rrhs = c.rrhs.len();
        let h = cluster_channel(&c.rrhs, &members, &cfg.pathloss, &|j, u| gains[u * rrhs + j]);
        let Ok(f) = zf_precoder(&h, c.id) else {
            skipped += 1;
            continue;
        };
        cases += 1;
        let err = (&(&h * &f) - &Mat::identity(users)).norm_inf();
        worst = worst.max(err);
        if !(err <= tol::ZERO_FORCING) {
            let c = format!("cluster {} users {:?}: residual {err:.3e}", c.id, members);
            return report(name, cases, String::new(), Some(c));
        }
    }
    report(name, cases, format!("largest residual {worst:.3e}, {skipped} rank-deficient draws skipped"), None)
}

const CACHE_INSTANCES: usize = 100;

/// Top-C selection equals exhaustive subset search on small catalogs.
fn cache_selection(rs: &RandomSource) -> PropertyReport {
    let name = PROPERTIES[4];
    let mut rng = rs.rng();
    for case in 1..=CACHE_INSTANCES {
        let contents = rng.gen_range(1..=8);
        let capacity = rng.gen_range(0..=3);
        let demands: Vec<CacheDemand> = (0..rng.gen_range(1..=6))
            .map(|_| {
                let raw: Vec<f64> = (0..contents).map(|_| rng.gen::<f64>()).collect();
                let s: f64 = raw.iter().sum();
                CacheDemand {
                    probs: raw.iter().map(|p| p / s).collect(),
                    saving_w: (0..contents).map(|_| rng.gen_range(0.0..20.0)).collect(),
                }
            })
            .collect();
        let greedy = select_cache(&demands, contents, capacity);
        let brute = exhaustive_cache(&demands, contents, capacity);
        if greedy.contents != brute.contents {
            let c = format!(
                "N={contents} C={capacity}: top-C {:?}, exhaustive {:?}, demands {demands:?}",
                greedy.contents, brute.contents
            );
            return report(name, case, String::new(), Some(c));
        }
    }
    report(name, CACHE_INSTANCES, "top-C matches exhaustive search on every instance".into(), None)
}

const PLACEMENT_INSTANCES: usize = 10;
const GRID_STEP_M: f64 = 3.0;
const GRID_PAD_M: f64 = 30.0;
const CLOSED_FORM_SLACK: f64 = 1.10;
const LOCAL_SEARCH_SLACK: f64 = 1.05;

/// Single-UAV instances tight enough for the high-altitude closed form:
/// closed form within 10% of a 3 m grid search, local search from it within
/// 5%.
fn placement(cfg: &ScenarioConfig, rs: &RandomSource) -> PropertyReport {
    let name = PROPERTIES[5];
    let h = cfg.min_altitude_m;
    if !(h > 0.0) || !(cfg.placement.high_regime_ratio > 0.0) {
        return report(name, 0, "altitude floor or regime ratio not positive".into(), Some(format!("h_min {h}")));
    }
    // The weighted centroid stays inside the disk, so no user is farther
    // than its diameter.
    let radius = 0.45 * h / cfg.placement.high_regime_ratio.sqrt();
    let mut rng = rs.rng();
    let mut worst = (0.0_f64, 0.0_f64);
    for case in 1..=PLACEMENT_INSTANCES {
        let (cx, cy) = (rng.gen_range(-300.0..300.0), rng.gen_range(-300.0..300.0));
        let users: Vec<PlacementUser> = (0..rng.gen_range(1..=10))
            .map(|_| {
                let r = radius * rng.gen::<f64>().sqrt();
                let a = rng.gen_range(0.0..std::f64::consts::TAU);
                PlacementUser {
                    position: Point2::new(cx + r * a.cos(), cy + r * a.sin()),
                    rate_bps: rng.gen_range(2e6..4e8),
                    weight: 1.0,
                }
            })
            .collect();
        let share = users.len();
        let dump = || format!("{users:?}");
        let (cf, grid) = match (
            place_closed_form(&users, share, cfg),
            place_exhaustive(&users, share, GRID_STEP_M, GRID_PAD_M, &[h, h + GRID_STEP_M], cfg),
        ) {
            (Ok(cf), Ok(grid)) => (cf, grid),
            (Err(e), _) | (_, Err(e)) => return report(name, case, String::new(), Some(format!("{e}: {}", dump()))),
        };
        if regime(&users, cf.position.ground(), h, cfg) != Regime::High {
            return report(name, case, String::new(), Some(format!("instance left the regime: {}", dump())));
        }
        let ls = match place_local_search(&users, share, cf.position, cfg) {
            Ok(ls) => ls,
            Err(e) => return report(name, case, String::new(), Some(format!("{e}: {}", dump()))),
        };
        let (rc, rl) = (cf.objective_w / grid.objective_w, ls.objective_w / grid.objective_w);
        worst = (worst.0.max(rc), worst.1.max(rl));
        if !(rc <= CLOSED_FORM_SLACK) || !(rl <= LOCAL_SEARCH_SLACK) {
            let c = format!("closed form {rc:.4}x, local search {rl:.4}x of grid optimum: {}", dump());
            return report(name, case, String::new(), Some(c));
        }
    }
    let detail = format!("worst ratio to grid optimum: closed form {:.4}, local search {:.4}", worst.0, worst.1);
    report(name, PLACEMENT_INSTANCES, detail, None)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn desk_config_passes_and_lists_each_property_once() {
        let r = verify(&ScenarioConfig::desk());
        for p in &r.properties {
            assert!(p.passed, "{}", p.line());
        }
        let names: Vec<&str> = r.properties.iter().map(|p| p.name).collect();
        assert_eq!(names, PROPERTIES);
    }

    #[test]
    fn injected_spectral_radius_fails_echo_state() {
        let mut cfg = ScenarioConfig::desk();
        cfg.esn.spectral_radius = 1.2;
        let r = echo_state(&cfg, &RandomSource::new(3));
        assert!(!r.passed);
        assert!(r.counterexample.unwrap().contains(">= 1"));
    }

    #[test]
    fn zero_reservoir_fails_echo_state() {
        let mut cfg = ScenarioConfig::desk();
        cfg.esn.reservoir_size = 0;
        assert!(!echo_state(&cfg, &RandomSource::new(3)).passed);
    }
}
