//! Forecasts of positions and request distributions for a cache period,
//! either from the generator's ground truth or from trained per-user
//! conceptor ESNs.

use rayon::prelude::*;
use serde::Serialize;

use crate::cesn::{nrmse, CesnError, EsnModel};
use crate::numerics::Mat;
use crate::scenario::{Point2, RandomSource, ScenarioConfig};

use super::generator::{
    hour_of_day, is_weekend, period_start_hour, slot_time_s, World, PROFILE_LEISURE, SECONDS_PER_HOUR,
};
use super::SimError;

/// What the planner believes about one cache period.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodForecast {
    /// Position per user per slot of the period, at mid-slot.
    pub positions: Vec<Vec<Point2>>,
    /// Request distribution per user per hour of the period.
    pub requests: Vec<Vec<Vec<f64>>>,
}

/// The two models of one user.
#[derive(Debug, Clone)]
pub struct UserModels {
    pub content: EsnModel,
    pub mobility: EsnModel,
}

#[derive(Debug, Clone, Copy)]
pub enum Predictor<'a> {
    /// Generator ground truth.
    Oracle,
    /// One pair of trained models per user, in user order.
    Esn(&'a [UserModels]),
}

/// One row of the training report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrainRow {
    pub user: usize,
    pub model: &'static str,
    pub pattern: usize,
    /// Hour of day for content patterns, day type for mobility patterns.
    pub label: String,
    pub steps: usize,
    pub nrmse: f64,
    pub quota_used: f64,
    pub quota_after: f64,
}

/// Context features: time of day on the unit circle, a weekday/weekend
/// code and a profile code, zero-padded to the configured width.
pub fn context_vector(cfg: &ScenarioConfig, hour: usize, weekend: bool, profile: usize) -> Vec<f64> {
    let mut c = vec![0.0; cfg.esn.context_dim];
    let a = std::f64::consts::TAU * hour as f64 / 24.0;
    c[0] = a.sin();
    c[1] = a.cos();
    c[2] = if weekend { 1.0 } else { -1.0 };
    c[3] = if profile == PROFILE_LEISURE { 1.0 } else { -1.0 };
    c
}

/// Hours of day the simulated periods touch, in order of first use. Each
/// gets its own content pattern.
pub fn content_hours(cfg: &ScenarioConfig) -> Vec<usize> {
    let mut out = Vec::new();
    for p in 0..cfg.num_periods {
        for j in 0..cfg.hours_per_period() {
            let h = hour_of_day(period_start_hour(cfg, p) + j);
            if !out.contains(&h) {
                out.push(h);
            }
        }
    }
    out
}

/// Mobility patterns: weekdays and weekends.
pub const MOBILITY_PATTERNS: [&str; 2] = ["weekday", "weekend"];

fn mobility_pattern(abs_hour: usize) -> usize {
    usize::from(is_weekend(abs_hour))
}

pub fn content_dims(cfg: &ScenarioConfig) -> (usize, usize) {
    (cfg.esn.context_dim, cfg.num_contents)
}

pub fn mobility_dims(cfg: &ScenarioConfig) -> (usize, usize) {
    (cfg.esn.context_dim + 2, 2 * cfg.esn.horizon)
}

fn mobility_input(world: &World, user: usize, a: usize) -> Vec<f64> {
    let cfg = &world.cfg;
    let p = world.waypoint(user, a);
    let mut x = vec![p.x / cfg.area_radius_m, p.y / cfg.area_radius_m];
    x.extend(context_vector(cfg, hour_of_day(a), is_weekend(a), world.users[user].profile));
    x
}

fn one_hot(n: usize, k: usize) -> Vec<f64> {
    let mut v = vec![0.0; n];
    v[k] = 1.0;
    v
}

fn frequencies(n: usize, samples: &[usize]) -> Vec<f64> {
    if samples.is_empty() {
        return vec![1.0 / n as f64; n];
    }
    let mut f = vec![0.0; n];
    for &c in samples {
        f[c] += 1.0;
    }
    f.iter().map(|x| x / samples.len() as f64).collect()
}

/// Trains the content model of one user: one pattern per simulated hour of
/// day, a weekday block followed by a weekend block, each cycling through
/// the requests observed at that hour.
fn train_content(world: &World, user: usize, rs: &RandomSource) -> Result<(EsnModel, Vec<TrainRow>), CesnError> {
    let cfg = &world.cfg;
    let (din, dout) = content_dims(cfg);
    let mut model = EsnModel::new(din, dout, &cfg.esn, rs)?;
    let history = world.request_history(user, period_start_hour(cfg, 0));
    let profile = world.users[user].profile;
    let n = cfg.num_contents;
    let len = cfg.esn.training_length;
    let mut loads = Vec::new();
    let mut samples = Vec::new();
    for &hour in &content_hours(cfg) {
        let mut inputs = Vec::with_capacity(len);
        let mut targets = Vec::with_capacity(len);
        let mut both = Vec::new();
        for (weekend, steps) in [(false, len / 2), (true, len - len / 2)] {
            let seen: Vec<usize> = history
                .iter()
                .filter(|(a, _)| hour_of_day(*a) == hour && is_weekend(*a) == weekend)
                .map(|&(_, c)| c)
                .collect();
            let x = context_vector(cfg, hour, weekend, profile);
            let freq = frequencies(n, &seen);
            for k in 0..steps {
                inputs.push(x.clone());
                targets.push(if seen.is_empty() { freq.clone() } else { one_hot(n, seen[k % seen.len()]) });
            }
            both.push((x, freq));
        }
        loads.push(model.load_pattern(&inputs, &targets)?);
        samples.push(both);
    }
    model.train_readout()?;
    model.finish_training();
    let mut rows = Vec::new();
    for (k, (load, both)) in loads.iter().zip(&samples).enumerate() {
        let mut pred = Vec::new();
        let mut truth = Vec::new();
        for (x, freq) in both {
            pred.extend(model.predict_request_distribution(x, Some(k))?);
            truth.extend(freq);
        }
        rows.push(TrainRow {
            user,
            model: "content",
            pattern: k,
            label: format!("hour-{:02}", content_hours(cfg)[k]),
            steps: len,
            nrmse: nrmse(&pred, &truth).unwrap_or(f64::NAN),
            quota_used: load.used(),
            quota_after: load.quota_after,
        });
    }
    Ok((model, rows))
}

/// Trains the mobility model of one user on the observed hourly waypoints:
/// one chronological drive, then weekday and weekend hours loaded as two
/// patterns, each step targeting the next `horizon` waypoints.
fn train_mobility(world: &World, user: usize, rs: &RandomSource) -> Result<(EsnModel, Vec<TrainRow>), CesnError> {
    let cfg = &world.cfg;
    let (din, dout) = mobility_dims(cfg);
    let mut model = EsnModel::new(din, dout, &cfg.esn, rs)?;
    let end = period_start_hour(cfg, 0);
    let ns = cfg.esn.horizon;
    let r = cfg.area_radius_m;
    let inputs: Vec<Vec<f64>> = (0..end).map(|a| mobility_input(world, user, a)).collect();
    let n = model.size();
    let states = model.drive(&inputs, &vec![0.0; n])?;
    let target = |a: usize| -> Vec<f64> {
        let mut y: Vec<f64> = (1..=ns).map(|k| world.waypoint(user, a + k).x / r).collect();
        y.extend((1..=ns).map(|k| world.waypoint(user, a + k).y / r));
        y
    };
    let mut cols_by_pattern = Vec::new();
    let mut loads = Vec::new();
    for k in 0..MOBILITY_PATTERNS.len() {
        let cols: Vec<usize> =
            (cfg.esn.washout.max(1)..end.saturating_sub(ns)).filter(|&a| mobility_pattern(a) == k).collect();
        if cols.is_empty() {
            return Err(CesnError::Dimension(format!("no {} history to train on", MOBILITY_PATTERNS[k])));
        }
        let prev: Vec<Vec<f64>> = cols.iter().map(|&a| states[a - 1].clone()).collect();
        let cur: Vec<Vec<f64>> = cols.iter().map(|&a| states[a].clone()).collect();
        let xs: Vec<Vec<f64>> = cols.iter().map(|&a| inputs[a].clone()).collect();
        let ys: Vec<Vec<f64>> = cols.iter().map(|&a| target(a)).collect();
        loads.push(model.load_states(
            &Mat::from_columns(n, &prev),
            &Mat::from_columns(n, &cur),
            &Mat::from_columns(din, &xs),
            &Mat::from_columns(dout, &ys),
        )?);
        cols_by_pattern.push(cols);
    }
    model.train_readout()?;
    model.finish_training();
    let w_out = model.w_out.clone().expect("readout just trained");
    let mut rows = Vec::new();
    for (k, (load, cols)) in loads.iter().zip(&cols_by_pattern).enumerate() {
        let c = &model.conceptors[k].m;
        let mut pred = Vec::new();
        let mut truth = Vec::new();
        for &a in cols {
            pred.extend(w_out.mul_vec(&c.mul_vec(&states[a])));
            truth.extend(target(a));
        }
        rows.push(TrainRow {
            user,
            model: "mobility",
            pattern: k,
            label: MOBILITY_PATTERNS[k].to_string(),
            steps: cols.len(),
            nrmse: nrmse(&pred, &truth).unwrap_or(f64::NAN),
            quota_used: load.used(),
            quota_after: load.quota_after,
        });
    }
    Ok((model, rows))
}

/// Trains both models of every user, in parallel across users.
pub fn train_models(world: &World) -> Result<(Vec<UserModels>, Vec<TrainRow>), SimError> {
    let rs = RandomSource::new(world.cfg.seed).derive("esn");
    let trained: Vec<Result<(UserModels, Vec<TrainRow>), CesnError>> = (0..world.users.len())
        .into_par_iter()
        .map(|u| {
            let (content, mut rows) = train_content(world, u, &rs.derive_index("content", u as u64))?;
            let (mobility, m_rows) = train_mobility(world, u, &rs.derive_index("mobility", u as u64))?;
            rows.extend(m_rows);
            Ok((UserModels { content, mobility }, rows))
        })
        .collect();
    let mut models = Vec::with_capacity(trained.len());
    let mut report = Vec::new();
    for (u, t) in trained.into_iter().enumerate() {
        let (m, rows) = t.map_err(|e| SimError::Model { user: u, source: e })?;
        models.push(m);
        report.extend(rows);
    }
    Ok((models, report))
}

/// Checks that loaded models match the configuration they are used with.
pub fn check_models(models: &[UserModels], cfg: &ScenarioConfig) -> Result<(), SimError> {
    if models.len() != cfg.num_users {
        return Err(SimError::ModelMismatch(format!("{} model pairs for {} users", models.len(), cfg.num_users)));
    }
    let want = [
        ("content", content_dims(cfg), content_hours(cfg).len()),
        ("mobility", mobility_dims(cfg), MOBILITY_PATTERNS.len()),
    ];
    for (u, m) in models.iter().enumerate() {
        for ((name, (din, dout), patterns), model) in want.iter().zip([&m.content, &m.mobility]) {
            let got = (model.input_dim(), model.output_dim, model.conceptors.len());
            if got != (*din, *dout, *patterns) || !model.is_trained() {
                return Err(SimError::ModelMismatch(format!(
                    "user {u} {name} model has (inputs, outputs, patterns) = {got:?}, config needs {:?}",
                    (din, dout, patterns)
                )));
            }
        }
    }
    Ok(())
}

fn mid_slot(cfg: &ScenarioConfig, p: usize, tau: usize) -> f64 {
    slot_time_s(cfg, p, tau) + 0.5 * cfg.slot_duration_s
}

impl Predictor<'_> {
    pub fn forecast(&self, world: &World, p: usize) -> Result<PeriodForecast, SimError> {
        let cfg = &world.cfg;
        let ah0 = period_start_hour(cfg, p);
        let hours = cfg.hours_per_period();
        let slots = cfg.slots_per_cache_period;
        match self {
            Predictor::Oracle => Ok(PeriodForecast {
                positions: (0..world.users.len())
                    .map(|u| (0..slots).map(|t| world.position_at(u, mid_slot(cfg, p, t))).collect())
                    .collect(),
                requests: (0..world.users.len())
                    .map(|u| (0..hours).map(|j| world.true_distribution(u, ah0 + j).to_vec()).collect())
                    .collect(),
            }),
            Predictor::Esn(models) => {
                let chours = content_hours(cfg);
                let per_user: Vec<Result<(Vec<Point2>, Vec<Vec<f64>>), CesnError>> = models
                    .par_iter()
                    .enumerate()
                    .map(|(u, m)| {
                        let history: Vec<Vec<f64>> = (0..=ah0).map(|a| mobility_input(world, u, a)).collect();
                        let ahead =
                            m.mobility.predict_locations(&history, cfg.area_radius_m, Some(mobility_pattern(ah0)))?;
                        let wp = |k: usize| {
                            if k == 0 {
                                world.waypoint(u, ah0)
                            } else {
                                ahead[(k - 1).min(ahead.len() - 1)]
                            }
                        };
                        let positions = (0..slots)
                            .map(|t| {
                                let f = mid_slot(cfg, p, t) / SECONDS_PER_HOUR - ah0 as f64;
                                let j = f.floor().max(0.0) as usize;
                                wp(j).lerp(wp(j + 1), f - j as f64)
                            })
                            .collect();
                        let profile = world.users[u].profile;
                        let requests = (0..hours)
                            .map(|j| {
                                let a = ah0 + j;
                                let hour = hour_of_day(a);
                                let pattern = chours.iter().position(|&h| h == hour);
                                m.content.predict_request_distribution(
                                    &context_vector(cfg, hour, is_weekend(a), profile),
                                    pattern,
                                )
                            })
                            .collect::<Result<_, _>>()?;
                        Ok((positions, requests))
                    })
                    .collect();
                let mut positions = Vec::with_capacity(per_user.len());
                let mut requests = Vec::with_capacity(per_user.len());
                for (u, r) in per_user.into_iter().enumerate() {
                    let (pos, req) = r.map_err(|e| SimError::Model { user: u, source: e })?;
                    positions.push(pos);
                    requests.push(req);
                }
                Ok(PeriodForecast { positions, requests })
            }
        }
    }
}

/// Mean distance between forecast and true mid-slot positions, and mean
/// total-variation distance between forecast and true request laws.
pub fn forecast_error(world: &World, p: usize, f: &PeriodForecast) -> (f64, f64) {
    let cfg = &world.cfg;
    let ah0 = period_start_hour(cfg, p);
    let (mut pos, mut np) = (0.0, 0usize);
    let (mut tv, mut nt) = (0.0, 0usize);
    for u in 0..f.positions.len() {
        for (t, q) in f.positions[u].iter().enumerate() {
            pos += q.dist(world.position_at(u, mid_slot(cfg, p, t)));
            np += 1;
        }
        for (j, d) in f.requests[u].iter().enumerate() {
            let truth = world.true_distribution(u, ah0 + j);
            tv += 0.5 * d.iter().zip(truth).map(|(a, b)| (a - b).abs()).sum::<f64>();
            nt += 1;
        }
    }
    (if np > 0 { pos / np as f64 } else { 0.0 }, if nt > 0 { tv / nt as f64 } else { 0.0 })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> ScenarioConfig {
        let mut cfg = ScenarioConfig::desk();
        cfg.num_users = 4;
        cfg.num_uavs = 2;
        cfg.esn.reservoir_size = 60;
        cfg.esn.training_length = 300;
        cfg
    }

    #[test]
    fn oracle_forecast_has_zero_error() {
        let w = World::generate(&small());
        let f = Predictor::Oracle.forecast(&w, 0).unwrap();
        assert_eq!(forecast_error(&w, 0, &f), (0.0, 0.0));
        assert_eq!(f.positions[0].len(), w.cfg.slots_per_cache_period);
        assert_eq!(f.requests[0].len(), w.cfg.hours_per_period());
    }

    #[test]
    fn esn_forecasts_beat_uninformed_guesses() {
        let cfg = small();
        let w = World::generate(&cfg);
        let (models, report) = train_models(&w).unwrap();
        check_models(&models, &cfg).unwrap();
        let f = Predictor::Esn(&models).forecast(&w, 0).unwrap();
        let (pos_err, tv) = forecast_error(&w, 0, &f);
        // Uniform guess over the catalog and the disk centre as baselines.
        let uniform = vec![1.0 / cfg.num_contents as f64; cfg.num_contents];
        let oracle = Predictor::Oracle.forecast(&w, 0).unwrap();
        let blind = PeriodForecast {
            positions: oracle.positions.iter().map(|p| vec![Point2::ORIGIN; p.len()]).collect(),
            requests: oracle.requests.iter().map(|r| vec![uniform.clone(); r.len()]).collect(),
        };
        let (blind_pos, blind_tv) = forecast_error(&w, 0, &blind);
        assert!(pos_err < blind_pos, "{pos_err} vs {blind_pos}");
        assert!(tv < blind_tv, "{tv} vs {blind_tv}");
        for d in f.requests.iter().flatten() {
            assert!((d.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
        // Quota never grows as patterns are loaded.
        for u in 0..cfg.num_users {
            for model in ["content", "mobility"] {
                let q: Vec<f64> =
                    report.iter().filter(|r| r.user == u && r.model == model).map(|r| r.quota_after).collect();
                assert!(q.windows(2).all(|w| w[1] <= w[0]));
            }
        }
    }

    #[test]
    fn mismatched_models_are_rejected() {
        let cfg = small();
        let w = World::generate(&cfg);
        let (models, _) = train_models(&w).unwrap();
        let other = ScenarioConfig { num_contents: 30, ..cfg.clone() };
        assert!(matches!(check_models(&models, &other), Err(SimError::ModelMismatch(_))));
        assert!(matches!(check_models(&models[..2], &cfg), Err(SimError::ModelMismatch(_))));
    }

    #[test]
    fn context_layout() {
        let cfg = ScenarioConfig::default();
        let c = context_vector(&cfg, 6, true, PROFILE_LEISURE);
        assert!((c[0] - 1.0).abs() < 1e-12 && c[1].abs() < 1e-12);
        assert_eq!((c[2], c[3]), (1.0, 1.0));
        assert_eq!(content_hours(&ScenarioConfig::desk()), vec![8, 9, 10, 11, 12, 13]);
    }
}
