use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

/// Propagation constants shared by the access, fronthaul and RRH links.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChannelParams {
    /// Free-space reference distance d0 (m).
    pub fs_ref_distance_m: f64,
    pub carrier_hz: f64,
    pub exponent_los: f64,
    pub exponent_nlos: f64,
    pub shadow_std_los_db: f64,
    pub shadow_std_nlos_db: f64,
    /// Environment constant X of the line-of-sight logistic (degrees).
    pub env_x: f64,
    /// Environment constant Y of the line-of-sight logistic (1/degree).
    pub env_y: f64,
    /// Ground and ground-to-air path-loss exponent β.
    pub g2a_exponent: f64,
    /// Extra linear attenuation η of non-line-of-sight ground-to-air links.
    pub g2a_nlos_factor: f64,
    /// Ground distances are floored here before applying d^-β.
    pub ground_min_distance_m: f64,
}

impl Default for ChannelParams {
    fn default() -> Self {
        ChannelParams {
            fs_ref_distance_m: 5.0,
            carrier_hz: 38e9,
            exponent_los: 2.0,
            exponent_nlos: 2.4,
            shadow_std_los_db: 5.3,
            shadow_std_nlos_db: 5.27,
            env_x: 11.9,
            env_y: 0.13,
            g2a_exponent: 2.0,
            g2a_nlos_factor: 100.0,
            ground_min_distance_m: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QoeConfig {
    pub zeta1: f64,
    pub zeta2: f64,
    /// Target delay score D̄_min.
    pub mos_min: f64,
    /// QoE at or above which a delivery counts as satisfied.
    pub satisfied_threshold: f64,
}

impl Default for QoeConfig {
    fn default() -> Self {
        QoeConfig { zeta1: 0.5, zeta2: 0.5, mos_min: 0.8, satisfied_threshold: 0.8 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DeviceConfig {
    /// Per-content playback rate Ĉ_n for a unit screen factor (bit/s).
    pub base_rate_bps: f64,
    /// Screen factor S_i for each device type.
    pub screen_factors: Vec<f64>,
}

impl Default for DeviceConfig {
    fn default() -> Self {
        DeviceConfig { base_rate_bps: 5e6, screen_factors: vec![0.5, 1.0, 1.5] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EsnConfig {
    pub reservoir_size: usize,
    pub spectral_radius: f64,
    pub density: f64,
    pub input_scale: f64,
    pub bias_scale: f64,
    pub aperture: f64,
    pub ridge: f64,
    pub washout: usize,
    pub training_length: usize,
    /// Context features per input sample (N_x).
    pub context_dim: usize,
    /// Future collection points predicted by the mobility model (N_s).
    pub horizon: usize,
}

impl Default for EsnConfig {
    fn default() -> Self {
        EsnConfig {
            reservoir_size: 200,
            spectral_radius: 0.9,
            density: 0.1,
            input_scale: 1.0,
            bias_scale: 0.2,
            aperture: 15.0,
            ridge: 0.01,
            washout: 50,
            training_length: 1000,
            context_dim: 4,
            horizon: 12,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeneratorConfig {
    /// Weeks of history generated before the simulated period, for training.
    pub history_weeks: usize,
    /// Day of week (0 = Monday) on which the simulated period starts.
    pub start_day: usize,
    /// Hour of day at which the simulated period starts.
    pub start_hour: usize,
    /// Gaussian jitter on every hourly waypoint (m).
    pub position_noise_m: f64,
    /// Fraction of users who never leave home.
    pub stationary_fraction: f64,
    /// Sampling weights of the work and entertainment profiles.
    pub profile_weights: Vec<f64>,
    /// Sampling weights over `device.screen_factors`.
    pub device_weights: Vec<f64>,
    /// Zipf exponent of each profile's content popularity.
    pub zipf_exponent: f64,
    /// Share of catalog ranks shared by both profiles' top lists.
    pub profile_overlap: f64,
    /// Probability that a user requests a content in a slot.
    pub request_probability: f64,
    /// Multiplier on work content during working hours for work-profile
    /// users (and on entertainment content outside them).
    pub hour_modulation: f64,
    /// Fraction of users whose workplace lies next to a radio head.
    pub rrh_hotspot_fraction: f64,
    /// How close such a workplace is to its radio head (m).
    pub rrh_hotspot_radius_m: f64,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig {
            history_weeks: 3,
            start_day: 0,
            start_hour: 8,
            position_noise_m: 10.0,
            stationary_fraction: 0.1,
            profile_weights: vec![0.5, 0.5],
            device_weights: vec![1.0, 1.0, 1.0],
            zipf_exponent: 1.0,
            profile_overlap: 0.5,
            request_probability: 1.0,
            hour_modulation: 3.0,
            rrh_hotspot_fraction: 0.3,
            rrh_hotspot_radius_m: 15.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlacementConfig {
    /// Coordinate step of the local search (m).
    pub step_m: f64,
    pub max_evaluations: usize,
    /// Low-altitude regime when h² ≤ ratio · span².
    pub low_regime_ratio: f64,
    /// High-altitude regime when h² ≥ ratio · span².
    pub high_regime_ratio: f64,
    pub kmeans_max_iterations: usize,
    /// Ceiling of the altitude search (m).
    pub max_altitude_m: f64,
}

impl Default for PlacementConfig {
    fn default() -> Self {
        PlacementConfig {
            step_m: 3.0,
            max_evaluations: 10_000,
            low_regime_ratio: 0.01,
            high_regime_ratio: 100.0,
            kmeans_max_iterations: 100,
            max_altitude_m: 2000.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum FadingMode {
    /// Shadowing at its mean and unit Rayleigh gain.
    #[default]
    Expected,
    /// Fresh shadowing and Rayleigh draws per interval.
    Sampled,
}

/// Every scenario parameter. Units are SI throughout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub seed: u64,
    pub area_radius_m: f64,
    pub num_users: usize,
    pub num_rrhs: usize,
    pub num_rrh_clusters: usize,
    pub num_uavs: usize,
    pub num_contents: usize,
    pub cache_size: usize,
    pub content_size_bits: f64,
    pub intervals_per_slot: usize,
    pub slots_per_collection: usize,
    pub slots_per_cache_period: usize,
    pub num_periods: usize,
    pub slot_duration_s: f64,
    pub rrh_power_w: f64,
    pub bbu_power_w: f64,
    pub uav_max_power_w: f64,
    pub rrh_bandwidth_hz: f64,
    pub uav_bandwidth_hz: f64,
    /// Licensed band shared by the BBU-to-UAV wireless fronthaul.
    pub g2a_bandwidth_hz: f64,
    pub noise_power_w: f64,
    /// Wired RRH fronthaul rate v_F, shared by all RRH-served users.
    pub fronthaul_rate_bps: f64,
    pub min_altitude_m: f64,
    pub fading: FadingMode,
    pub pathloss: ChannelParams,
    pub qoe: QoeConfig,
    pub device: DeviceConfig,
    pub esn: EsnConfig,
    pub generators: GeneratorConfig,
    pub placement: PlacementConfig,
}

/// -95 dBm.
pub const DEFAULT_NOISE_W: f64 = 3.162_277_660_168_379_5e-13;

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            seed: 1,
            area_radius_m: 500.0,
            num_users: 70,
            num_rrhs: 20,
            num_rrh_clusters: 5,
            num_uavs: 5,
            num_contents: 25,
            cache_size: 1,
            content_size_bits: 1e6,
            intervals_per_slot: 1000,
            slots_per_collection: 10,
            slots_per_cache_period: 120,
            num_periods: 1,
            slot_duration_s: 1.0,
            rrh_power_w: 0.1,
            bbu_power_w: 1.0,
            uav_max_power_w: 20.0,
            rrh_bandwidth_hz: 1e6,
            uav_bandwidth_hz: 1e9,
            g2a_bandwidth_hz: 2.5e6,
            noise_power_w: DEFAULT_NOISE_W,
            fronthaul_rate_bps: 100e6,
            min_altitude_m: 100.0,
            fading: FadingMode::Expected,
            pathloss: ChannelParams::default(),
            qoe: QoeConfig::default(),
            device: DeviceConfig::default(),
            esn: EsnConfig::default(),
            generators: GeneratorConfig::default(),
            placement: PlacementConfig::default(),
        }
    }
}

impl ScenarioConfig {
    /// Reduced scale used by the command-line tools unless the full scale is
    /// requested: fewer intervals and a shorter period.
    pub fn desk() -> Self {
        ScenarioConfig {
            intervals_per_slot: 100,
            slots_per_collection: 4,
            slots_per_cache_period: 24,
            ..ScenarioConfig::default()
        }
    }

    /// Hours covered by one cache period.
    pub fn hours_per_period(&self) -> usize {
        self.slots_per_cache_period / self.slots_per_collection.max(1)
    }

    pub fn total_slots(&self) -> usize {
        self.slots_per_cache_period * self.num_periods
    }

    pub fn interval_duration_s(&self) -> f64 {
        self.slot_duration_s / self.intervals_per_slot as f64
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}

/// One failed invariant, addressed by its dotted field path.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub path: String,
    pub message: String,
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("invalid config:\n{}", list(.0))]
    Invalid(Vec<Violation>),
}

fn list(v: &[Violation]) -> String {
    v.iter().map(|x| format!("  - {x}")).collect::<Vec<_>>().join("\n")
}

/// Parses a JSON document over the full-scale defaults and validates it.
pub fn load_config(text: &str) -> Result<ScenarioConfig, ConfigError> {
    load_config_over(text, &ScenarioConfig::default())
}

/// Parses a JSON document over `base`; fields absent from the document keep
/// their value in `base`.
pub fn load_config_over(text: &str, base: &ScenarioConfig) -> Result<ScenarioConfig, ConfigError> {
    let cfg = parse_config_over(text, base)?;
    let violations = validate(&cfg);
    if violations.is_empty() {
        Ok(cfg)
    } else {
        Err(ConfigError::Invalid(violations))
    }
}

/// Parses without validating. Used by the invariant checker, which must be
/// able to inspect deliberately broken configurations.
pub fn parse_config_over(text: &str, base: &ScenarioConfig) -> Result<ScenarioConfig, ConfigError> {
    let doc: Value = if text.trim().is_empty() {
        Value::Object(Default::default())
    } else {
        serde_json::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?
    };
    if !doc.is_object() {
        return Err(ConfigError::Parse("top level must be an object".into()));
    }
    let mut merged = serde_json::to_value(base).expect("config serializes");
    merge(&mut merged, doc);
    serde_json::from_value(merged).map_err(|e| ConfigError::Parse(e.to_string()))
}

fn merge(dst: &mut Value, src: Value) {
    match (dst, src) {
        (Value::Object(d), Value::Object(s)) => {
            for (k, v) in s {
                match d.get_mut(&k) {
                    Some(slot) if slot.is_object() && v.is_object() => merge(slot, v),
                    _ => {
                        d.insert(k, v);
                    }
                }
            }
        }
        (d, s) => *d = s,
    }
}

/// Lists every violated invariant.
pub fn validate(c: &ScenarioConfig) -> Vec<Violation> {
    let mut v = Vec::new();
    let mut err = |path: &str, message: String| v.push(Violation { path: path.into(), message });

    let positive = [
        ("area_radius_m", c.area_radius_m),
        ("content_size_bits", c.content_size_bits),
        ("slot_duration_s", c.slot_duration_s),
        ("rrh_power_w", c.rrh_power_w),
        ("bbu_power_w", c.bbu_power_w),
        ("uav_max_power_w", c.uav_max_power_w),
        ("rrh_bandwidth_hz", c.rrh_bandwidth_hz),
        ("uav_bandwidth_hz", c.uav_bandwidth_hz),
        ("g2a_bandwidth_hz", c.g2a_bandwidth_hz),
        ("noise_power_w", c.noise_power_w),
        ("fronthaul_rate_bps", c.fronthaul_rate_bps),
        ("min_altitude_m", c.min_altitude_m),
        ("pathloss.fs_ref_distance_m", c.pathloss.fs_ref_distance_m),
        ("pathloss.carrier_hz", c.pathloss.carrier_hz),
        ("pathloss.env_x", c.pathloss.env_x),
        ("pathloss.env_y", c.pathloss.env_y),
        ("pathloss.g2a_exponent", c.pathloss.g2a_exponent),
        ("pathloss.ground_min_distance_m", c.pathloss.ground_min_distance_m),
        ("device.base_rate_bps", c.device.base_rate_bps),
        ("esn.aperture", c.esn.aperture),
        ("esn.input_scale", c.esn.input_scale),
        ("placement.step_m", c.placement.step_m),
        ("placement.low_regime_ratio", c.placement.low_regime_ratio),
        ("placement.high_regime_ratio", c.placement.high_regime_ratio),
    ];
    for (path, x) in positive {
        if !(x > 0.0 && x.is_finite()) {
            err(path, format!("must be positive and finite, got {x}"));
        }
    }

    if c.num_uavs < 1 {
        err("num_uavs", "at least one UAV required".into());
    }
    if c.num_users < c.num_uavs {
        err("num_users", format!("need at least as many users as UAVs ({} < {})", c.num_users, c.num_uavs));
    }
    if c.num_contents < 1 {
        err("num_contents", "catalog must be nonempty".into());
    }
    if c.cache_size > c.num_contents {
        err("cache_size", format!("cache size exceeds catalog ({} > {})", c.cache_size, c.num_contents));
    }
    if c.num_rrh_clusters < 1 {
        err("num_rrh_clusters", "at least one RRH cluster required".into());
    }
    if c.num_rrhs < c.num_rrh_clusters {
        err("num_rrhs", "every RRH cluster needs at least one RRH".into());
    }
    if c.intervals_per_slot < 1 {
        err("intervals_per_slot", "must be at least 1".into());
    }
    if c.slots_per_collection < 1 {
        err("slots_per_collection", "must be at least 1".into());
    } else if !c.slots_per_cache_period.is_multiple_of(c.slots_per_collection) {
        err(
            "slots_per_cache_period",
            format!("must be a multiple of slots_per_collection ({})", c.slots_per_collection),
        );
    }
    if c.slots_per_cache_period < 1 {
        err("slots_per_cache_period", "must be at least 1".into());
    }
    if c.num_periods < 1 {
        err("num_periods", "must be at least 1".into());
    }
    if c.slots_per_collection >= 1 && c.hours_per_period() > c.esn.horizon {
        err("esn.horizon", format!("must cover one cache period ({} collection points)", c.hours_per_period()));
    }
    if c.min_altitude_m >= 1e4 {
        err("min_altitude_m", "implausibly high".into());
    }

    let p = &c.pathloss;
    if !(p.exponent_los > 0.0) {
        err("pathloss.exponent_los", "must be positive".into());
    }
    if !(p.exponent_nlos >= p.exponent_los) {
        err("pathloss.exponent_nlos", "must be at least exponent_los".into());
    }
    if !(p.g2a_nlos_factor >= 1.0) {
        err("pathloss.g2a_nlos_factor", "must be at least 1".into());
    }
    if !(p.shadow_std_los_db >= 0.0) {
        err("pathloss.shadow_std_los_db", "must be nonnegative".into());
    }
    if !(p.shadow_std_nlos_db >= 0.0) {
        err("pathloss.shadow_std_nlos_db", "must be nonnegative".into());
    }

    let q = &c.qoe;
    if !(q.zeta1 >= 0.0 && q.zeta2 >= 0.0) {
        err("qoe", "weights must be nonnegative".into());
    }
    if (q.zeta1 + q.zeta2 - 1.0).abs() > 4.0 * f64::EPSILON {
        err("qoe", format!("weights must sum to 1 (zeta1 + zeta2 = {})", q.zeta1 + q.zeta2));
    }
    if !(q.mos_min > 0.0 && q.mos_min <= 1.0) {
        err("qoe.mos_min", "must lie in (0, 1]".into());
    }
    if !(q.satisfied_threshold > 0.0 && q.satisfied_threshold <= 1.0) {
        err("qoe.satisfied_threshold", "must lie in (0, 1]".into());
    }

    if c.device.screen_factors.is_empty() {
        err("device.screen_factors", "at least one device type required".into());
    }
    for (i, s) in c.device.screen_factors.iter().enumerate() {
        if !(*s > 0.0 && s.is_finite()) {
            err(&format!("device.screen_factors[{i}]"), format!("must be positive, got {s}"));
        }
    }

    let e = &c.esn;
    if e.reservoir_size < 1 {
        err("esn.reservoir_size", "must be at least 1".into());
    }
    if !(e.spectral_radius > 0.0 && e.spectral_radius < 1.0) {
        err("esn.spectral_radius", format!("must lie in (0, 1), got {}", e.spectral_radius));
    }
    if !(e.density > 0.0 && e.density <= 1.0) {
        err("esn.density", "must lie in (0, 1]".into());
    }
    if !(e.bias_scale >= 0.0) {
        err("esn.bias_scale", "must be nonnegative".into());
    }
    if !(e.ridge >= 0.0) {
        err("esn.ridge", "must be nonnegative".into());
    }
    if e.washout >= e.training_length {
        err("esn.washout", "must be shorter than training_length".into());
    }
    if e.context_dim < 4 {
        err("esn.context_dim", "the content encoding needs at least 4 features".into());
    }
    if e.horizon < 1 {
        err("esn.horizon", "must be at least 1".into());
    }

    let g = &c.generators;
    if g.start_day >= 7 {
        err("generators.start_day", "must be 0..6".into());
    }
    if g.start_hour >= 24 {
        err("generators.start_hour", "must be 0..23".into());
    }
    if g.history_weeks < 1 {
        err("generators.history_weeks", "must be at least 1".into());
    }
    if !(g.position_noise_m >= 0.0) {
        err("generators.position_noise_m", "must be nonnegative".into());
    }
    if !(0.0..=1.0).contains(&g.stationary_fraction) {
        err("generators.stationary_fraction", "must lie in [0, 1]".into());
    }
    if !(0.0..=1.0).contains(&g.request_probability) {
        err("generators.request_probability", "must lie in [0, 1]".into());
    }
    if !(0.0..=1.0).contains(&g.profile_overlap) {
        err("generators.profile_overlap", "must lie in [0, 1]".into());
    }
    if !(g.zipf_exponent >= 0.0) {
        err("generators.zipf_exponent", "must be nonnegative".into());
    }
    if !(g.hour_modulation >= 1.0) {
        err("generators.hour_modulation", "must be at least 1".into());
    }
    if !(0.0..=1.0).contains(&g.rrh_hotspot_fraction) {
        err("generators.rrh_hotspot_fraction", "must lie in [0, 1]".into());
    }
    if !(g.rrh_hotspot_radius_m >= 0.0 && g.rrh_hotspot_radius_m.is_finite()) {
        err("generators.rrh_hotspot_radius_m", "must be nonnegative".into());
    }
    check_weights(&mut v, "generators.profile_weights", &g.profile_weights, Some(2));
    check_weights(&mut v, "generators.device_weights", &g.device_weights, Some(c.device.screen_factors.len()));

    let pl = &c.placement;
    if pl.max_evaluations < 1 {
        v.push(Violation { path: "placement.max_evaluations".into(), message: "must be at least 1".into() });
    }
    if pl.kmeans_max_iterations < 1 {
        v.push(Violation { path: "placement.kmeans_max_iterations".into(), message: "must be at least 1".into() });
    }
    if !(pl.max_altitude_m > c.min_altitude_m && pl.max_altitude_m.is_finite()) {
        v.push(Violation {
            path: "placement.max_altitude_m".into(),
            message: format!("must be finite and above min_altitude_m ({})", c.min_altitude_m),
        });
    }
    v
}

fn check_weights(v: &mut Vec<Violation>, path: &str, w: &[f64], len: Option<usize>) {
    if let Some(n) = len {
        if w.len() != n {
            v.push(Violation { path: path.into(), message: format!("expected {n} weights, got {}", w.len()) });
            return;
        }
    }
    if w.iter().any(|x| !(*x >= 0.0 && x.is_finite())) || w.iter().sum::<f64>() <= 0.0 {
        v.push(Violation { path: path.into(), message: "weights must be nonnegative with a positive sum".into() });
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_gives_table_defaults() {
        let c = load_config("{}").unwrap();
        assert_eq!(c.intervals_per_slot, 1000);
        assert_eq!(c.num_uavs, 5);
        assert_eq!(c.num_contents, 25);
        assert_eq!(c.cache_size, 1);
        assert_eq!(c.uav_bandwidth_hz, 1e9);
        assert_eq!(c.min_altitude_m, 100.0);
        assert_eq!(c.pathloss.env_x, 11.9);
        assert_eq!(c.pathloss.env_y, 0.13);
        assert_eq!(load_config("").unwrap(), c);
    }

    #[test]
    fn noise_default_is_minus_95_dbm() {
        let dbm = 10.0 * (DEFAULT_NOISE_W * 1e3).log10();
        assert!((dbm + 95.0).abs() < 1e-12);
    }

    #[test]
    fn weights_must_sum_to_one() {
        let err = load_config(r#"{"qoe": {"zeta1": 0.7, "zeta2": 0.2}}"#).unwrap_err();
        assert!(err.to_string().contains("weights must sum to 1"), "{err}");
    }

    #[test]
    fn cache_larger_than_catalog() {
        let err = load_config(r#"{"cache_size": 30, "num_contents": 25}"#).unwrap_err();
        assert!(err.to_string().contains("cache size exceeds catalog"), "{err}");
    }

    #[test]
    fn all_violations_reported_with_paths() {
        let err =
            load_config(r#"{"cache_size": 30, "qoe": {"zeta1": 0.9}, "esn": {"spectral_radius": 1.2}}"#).unwrap_err();
        let ConfigError::Invalid(v) = err else { panic!("expected violations") };
        let paths: Vec<_> = v.iter().map(|x| x.path.as_str()).collect();
        assert!(paths.contains(&"cache_size"));
        assert!(paths.contains(&"qoe"));
        assert!(paths.contains(&"esn.spectral_radius"));
    }

    #[test]
    fn nested_override_keeps_siblings() {
        let c = load_config(r#"{"pathloss": {"env_x": 9.6}}"#).unwrap();
        assert_eq!(c.pathloss.env_x, 9.6);
        assert_eq!(c.pathloss.env_y, 0.13);
    }

    #[test]
    fn unknown_fields_rejected() {
        assert!(matches!(load_config(r#"{"num_user": 3}"#), Err(ConfigError::Parse(_))));
        assert!(matches!(load_config(r#"{"esn": {"size": 3}}"#), Err(ConfigError::Parse(_))));
        assert!(matches!(load_config("[1,2]"), Err(ConfigError::Parse(_))));
        assert!(matches!(load_config("{"), Err(ConfigError::Parse(_))));
    }

    #[test]
    fn period_must_divide_into_collections() {
        let err = load_config(r#"{"slots_per_cache_period": 25}"#).unwrap_err();
        assert!(err.to_string().contains("slots_per_cache_period"));
    }

    #[test]
    fn desk_profile_is_valid_and_overridable() {
        let base = ScenarioConfig::desk();
        assert!(validate(&base).is_empty());
        let c = load_config_over(r#"{"num_users": 90}"#, &base).unwrap();
        assert_eq!(c.num_users, 90);
        assert_eq!(c.intervals_per_slot, 100);
    }

    #[test]
    fn round_trip_default() {
        let c = ScenarioConfig::default();
        assert_eq!(load_config(&c.to_json()).unwrap(), c);
    }
}
