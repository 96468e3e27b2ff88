//! Simulator and optimizer for cache-enabled UAV base stations in a cloud
//! radio access network.
//!
//! Per-user conceptor echo state networks predict mobility and content
//! demand. From those predictions the optimizer picks which users the
//! terrestrial radio heads serve, clusters the rest around UAVs, fills UAV
//! caches and positions the UAVs for minimum transmit power under a
//! quality-of-experience floor.

pub mod cesn;
pub mod channel;
pub mod numerics;
pub mod placement;
pub mod qoe;
pub mod scenario;
pub mod sim;
pub mod verify;
