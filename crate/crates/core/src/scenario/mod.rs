//! Configuration, domain types and the deterministic random source.

mod config;
mod rng;
mod types;

pub use config::{
    load_config, load_config_over, parse_config_over, validate, ChannelParams, ConfigError, DeviceConfig, EsnConfig,
    FadingMode, GeneratorConfig, PlacementConfig, QoeConfig, ScenarioConfig, Violation, DEFAULT_NOISE_W,
};
pub use rng::{derive_stream, RandomSource};
pub use types::{Association, Point2, Point3, RrhCluster, UavState, UserState};
