//! Radio propagation and link rates.
//!
//! Three link families: the mmWave UAV-to-user access link, the licensed-band
//! BBU-to-UAV wireless fronthaul, and the zero-forcing RRH-to-user link.
//!
//! The elevation angle in the line-of-sight logistic is in **degrees**; the
//! environment constant `env_x` = 11.9 is an angle threshold.
//!
//! Slot capacities are in bits: each of the F interval rates is multiplied
//! by the interval duration Δτ/F, so `content_size / capacity` is a delay in
//! seconds.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use thiserror::Error;

use crate::numerics::{tol, Mat};
use crate::scenario::{ChannelParams, Point2, Point3, RandomSource, RrhCluster};

/// Speed of light used in the free-space term (m/s).
pub const SPEED_OF_LIGHT: f64 = 3e8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ChannelError {
    #[error("zero link distance")]
    ZeroDistance,
    #[error("UAV altitude must be positive")]
    NonPositiveAltitude,
    #[error("no users share this UAV")]
    EmptyAssociation,
    #[error("cluster {cluster}: channel matrix is rank deficient")]
    RankDeficient { cluster: usize },
    #[error("cluster {cluster}: {users} users exceed {antennas} antennas")]
    TooManyUsers { cluster: usize, users: usize, antennas: usize },
}

/// Random propagation terms of one link in one interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FadingDraw {
    pub shadow_los_db: f64,
    pub shadow_nlos_db: f64,
    /// Unit-mean exponential power gain.
    pub rayleigh_gain: f64,
}

impl FadingDraw {
    /// Shadowing at its zero mean and unit Rayleigh gain.
    pub const MEAN: FadingDraw = FadingDraw { shadow_los_db: 0.0, shadow_nlos_db: 0.0, rayleigh_gain: 1.0 };

    pub fn sample<R: Rng>(rng: &mut R, p: &ChannelParams) -> FadingDraw {
        let z1: f64 = StandardNormal.sample(rng);
        let z2: f64 = StandardNormal.sample(rng);
        let g: f64 = Exp1.sample(rng);
        FadingDraw {
            shadow_los_db: z1 * p.shadow_std_los_db,
            shadow_nlos_db: z2 * p.shadow_std_nlos_db,
            rayleigh_gain: g,
        }
    }

    /// Draw for one (link, interval) from a dedicated stream, so the result
    /// does not depend on evaluation order.
    pub fn for_link(rs: &RandomSource, link: &str, interval: u64, p: &ChannelParams) -> FadingDraw {
        FadingDraw::sample(&mut rs.derive(link).derive_index("t", interval).rng(), p)
    }
}

/// Free-space loss at the reference distance, 20·log10(4π d0 f_c / c), in dB.
pub fn free_space_pl(d0: f64, f_c: f64) -> f64 {
    20.0 * (4.0 * std::f64::consts::PI * d0 * f_c / SPEED_OF_LIGHT).log10()
}

/// Elevation angle from a ground point up to `air`, in degrees.
pub fn elevation_deg(air: Point3, ground: Point2) -> Result<f64, ChannelError> {
    let d = air.dist_to(ground);
    if d <= 0.0 {
        return Err(ChannelError::ZeroDistance);
    }
    Ok((air.h / d).clamp(-1.0, 1.0).asin().to_degrees())
}

/// Line-of-sight probability 1/(1 + X·exp(-Y(φ - X))).
pub fn los_probability_at(phi_deg: f64, p: &ChannelParams) -> f64 {
    1.0 / (1.0 + p.env_x * (-p.env_y * (phi_deg - p.env_x)).exp())
}

pub fn los_probability(uav: Point3, user: Point2, p: &ChannelParams) -> Result<f64, ChannelError> {
    if uav.h <= 0.0 {
        return Err(ChannelError::NonPositiveAltitude);
    }
    Ok(los_probability_at(elevation_deg(uav, user)?, p))
}

/// LoS-probability-weighted UAV-to-user path loss in dB.
pub fn uav_user_pathloss(
    uav: Point3,
    user: Point2,
    p: &ChannelParams,
    fading: &FadingDraw,
) -> Result<f64, ChannelError> {
    let d = uav.dist_to(user);
    let pr = los_probability(uav, user, p)?;
    Ok(pathloss_from(d, pr, free_space_pl(p.fs_ref_distance_m, p.carrier_hz), p, fading))
}

/// Same as [`uav_user_pathloss`] with precomputed distance, LoS probability
/// and free-space term, for inner loops.
#[inline]
pub fn pathloss_from(d: f64, pr_los: f64, l_fs: f64, p: &ChannelParams, fading: &FadingDraw) -> f64 {
    let lg = d.log10();
    let l_los = l_fs + 10.0 * p.exponent_los * lg + fading.shadow_los_db;
    let l_nlos = l_fs + 10.0 * p.exponent_nlos * lg + fading.shadow_nlos_db;
    pr_los * l_los + (1.0 - pr_los) * l_nlos
}

/// P / (10^(l/10)·σ²).
pub fn uav_user_snr(power_w: f64, pathloss_db: f64, noise_w: f64) -> f64 {
    power_w / (db_to_linear(pathloss_db) * noise_w)
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Bits delivered in one slot over the UAV access link: the band is split
/// equally among the UAV's `users` and each of the F interval rates is
/// weighted by Δτ/F.
pub fn uav_slot_capacity(snr: &[f64], users: usize, bandwidth_hz: f64, slot_s: f64) -> Result<f64, ChannelError> {
    if users == 0 {
        return Err(ChannelError::EmptyAssociation);
    }
    Ok(slot_bits(snr, bandwidth_hz / users as f64, slot_s))
}

/// Bits delivered in one slot over a zero-forcing RRH link on the full band.
pub fn rrh_slot_capacity(sinr: &[f64], bandwidth_hz: f64, slot_s: f64) -> f64 {
    slot_bits(sinr, bandwidth_hz, slot_s)
}

fn slot_bits(snr: &[f64], bw: f64, slot_s: f64) -> f64 {
    if snr.is_empty() {
        return 0.0;
    }
    let dt = slot_s / snr.len() as f64;
    snr.iter().map(|g| bw * (1.0 + g).log2() * dt).sum()
}

/// Linear ground-to-air power gain: d^-β for line of sight, d^-β/η
/// otherwise, averaged with the LoS probability.
pub fn g2a_gain(uav: Point3, bbu: Point2, p: &ChannelParams, fading: &FadingDraw) -> Result<f64, ChannelError> {
    let d = uav.dist_to(bbu);
    let pr = los_probability(uav, bbu, p)?;
    let base = d.powf(-p.g2a_exponent);
    Ok(base * (pr + (1.0 - pr) / p.g2a_nlos_factor) * fading.rayleigh_gain)
}

/// Bits per slot the BBU can push to one UAV when `sharing` UAVs fetch in
/// the same slot and split the band equally.
pub fn g2a_fronthaul_rate(
    uav: Point3,
    bbu: Point2,
    sharing: usize,
    bbu_power_w: f64,
    bandwidth_hz: f64,
    noise_w: f64,
    slot_s: f64,
    p: &ChannelParams,
    fading: &FadingDraw,
) -> Result<f64, ChannelError> {
    let g = g2a_gain(uav, bbu, p, fading)?;
    let bw = bandwidth_hz / sharing.max(1) as f64;
    Ok(bw * (1.0 + bbu_power_w * g / noise_w).log2() * slot_s)
}

/// Power gain d^-β of a ground link, distance floored at the configured
/// minimum.
#[inline]
pub fn ground_gain(a: Point2, b: Point2, p: &ChannelParams) -> f64 {
    a.dist(b).max(p.ground_min_distance_m).powf(-p.g2a_exponent)
}

/// Received interference from the BBU's fronthaul transmission at a user.
pub fn bbu_interference(user: Point2, bbu: Point2, bbu_power_w: f64, p: &ChannelParams, rayleigh: f64) -> f64 {
    bbu_power_w * rayleigh * ground_gain(user, bbu, p)
}

/// Unnormalized zero-forcing precoder Hᵀ(HHᵀ)⁻¹ so that H·F = I.
pub fn zf_precoder(h: &Mat, cluster: usize) -> Result<Mat, ChannelError> {
    let (u, r) = h.shape();
    if u > r {
        return Err(ChannelError::TooManyUsers { cluster, users: u, antennas: r });
    }
    let sv = h.0.singular_values();
    let smax = sv.iter().cloned().fold(0.0, f64::max);
    let smin = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    if !(smax > 0.0) || smin <= tol::RANK_RELATIVE * smax {
        return Err(ChannelError::RankDeficient { cluster });
    }
    let gram = &h.0 * h.0.transpose();
    let inv = gram.try_inverse().ok_or(ChannelError::RankDeficient { cluster })?;
    let mut f = h.0.transpose() * inv;
    // Refinement F += F(I - HF) squares the residual, recovering what the
    // Gram inverse loses on ill-conditioned channels.
    let eye = DMatrix::identity(u, u);
    for _ in 0..3 {
        let e = &eye - &h.0 * &f;
        if e.amax() <= f64::EPSILON {
            break;
        }
        f += &f * e;
    }
    Ok(Mat(f))
}

/// Channel amplitudes from a cluster's RRHs to a set of users:
/// h = sqrt(g·d^-β) with `rayleigh(rrh_index, user)` supplying g.
pub fn cluster_channel(
    rrhs: &[Point2],
    users: &[(usize, Point2)],
    p: &ChannelParams,
    rayleigh: &dyn Fn(usize, usize) -> f64,
) -> Mat {
    let mut h = DMatrix::zeros(users.len(), rrhs.len());
    for (a, &(uid, up)) in users.iter().enumerate() {
        for (j, &rp) in rrhs.iter().enumerate() {
            h[(a, j)] = (rayleigh(j, uid) * ground_gain(rp, up, p)).sqrt();
        }
    }
    Mat(h)
}

/// Per-user SINR of zero-forcing RRH clusters.
#[derive(Debug, Clone, PartialEq)]
pub struct ZfOutcome {
    /// `(user id, SINR)` per cluster, in cluster member order.
    pub sinr: Vec<Vec<(usize, f64)>>,
    /// Largest |H·F - I| entry over all clusters.
    pub residual: f64,
}

/// SINR of every user served by a zero-forcing cluster.
///
/// Intra-cluster interference is nulled; other clusters' precoded streams,
/// the BBU fronthaul interference `bbu_interference(user)` and noise remain.
/// `rayleigh(cluster, rrh, user)` is the fading power gain of each link.
pub fn zfbf_sinr(
    clusters: &[RrhCluster],
    positions: &dyn Fn(usize) -> Point2,
    rrh_power_w: f64,
    noise_w: f64,
    bbu_interference: &dyn Fn(usize) -> f64,
    rayleigh: &dyn Fn(usize, usize, usize) -> f64,
    p: &ChannelParams,
) -> Result<ZfOutcome, ChannelError> {
    let mut precoders: Vec<Option<Mat>> = Vec::with_capacity(clusters.len());
    let mut own: Vec<Mat> = Vec::with_capacity(clusters.len());
    let mut residual = 0.0_f64;
    for c in clusters {
        if c.users.len() > c.rrhs.len() {
            return Err(ChannelError::TooManyUsers { cluster: c.id, users: c.users.len(), antennas: c.rrhs.len() });
        }
        let members: Vec<(usize, Point2)> = c.users.iter().map(|&u| (u, positions(u))).collect();
        let h = cluster_channel(&c.rrhs, &members, p, &|j, u| rayleigh(c.id, j, u));
        if members.is_empty() {
            precoders.push(None);
        } else {
            let f = zf_precoder(&h, c.id)?;
            let hf = &h * &f;
            residual = residual.max((&hf - &Mat::identity(members.len())).max_abs());
            precoders.push(Some(f));
        }
        own.push(h);
    }

    let mut sinr = Vec::with_capacity(clusters.len());
    for (q, c) in clusters.iter().enumerate() {
        let mut row = Vec::with_capacity(c.users.len());
        for (a, &uid) in c.users.iter().enumerate() {
            let f = precoders[q].as_ref().expect("nonempty cluster has a precoder");
            let hrow = own[q].0.row(a);
            let s = hrow.dot(&f.0.column(a).transpose());
            let signal = rrh_power_w * s * s;
            let up = positions(uid);
            let mut interference = 0.0;
            for (j, other) in clusters.iter().enumerate() {
                if j == q {
                    continue;
                }
                let Some(fj) = precoders[j].as_ref() else { continue };
                for col in 0..other.users.len() {
                    let mut acc = 0.0;
                    for (l, &rp) in other.rrhs.iter().enumerate() {
                        let amp = (rayleigh(other.id, l, uid) * ground_gain(rp, up, p)).sqrt();
                        acc += amp * fj[(l, col)];
                    }
                    interference += rrh_power_w * acc * acc;
                }
            }
            row.push((uid, signal / (interference + bbu_interference(uid) + noise_w)));
        }
        sinr.push(row);
    }
    Ok(ZfOutcome { sinr, residual })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{RandomSource, DEFAULT_NOISE_W};
    use rand::Rng;

    fn params() -> ChannelParams {
        ChannelParams::default()
    }

    #[test]
    fn free_space_reference() {
        let oracle = 20.0 * (4.0 * std::f64::consts::PI * 5.0 * 38e9 / 3e8).log10();
        assert!((free_space_pl(5.0, 38e9) - oracle).abs() < 1e-12);
        assert!((free_space_pl(5.0, 38e9) - 78.0).abs() < 0.05);
        let unit = 3e8 / (4.0 * std::f64::consts::PI * 38e9);
        assert!(free_space_pl(unit, 38e9).abs() < 1e-12);
        let diff = free_space_pl(10.0, 38e9) - free_space_pl(5.0, 38e9);
        assert!((diff - 20.0 * 2f64.log10()).abs() < 1e-12);
    }

    #[test]
    fn los_probability_examples() {
        let p = params();
        assert!((los_probability_at(11.9, &p) - 1.0 / 12.9).abs() < 1e-15);
        let overhead = los_probability(Point3::new(0.0, 0.0, 100.0), Point2::ORIGIN, &p).unwrap();
        let oracle = 1.0 / (1.0 + 11.9 * (-0.13f64 * (90.0 - 11.9)).exp());
        assert!((overhead - oracle).abs() < 1e-15);
        assert!((overhead - 0.9995).abs() < 1e-4);
        assert!(los_probability(Point3::new(0.0, 0.0, 0.0), Point2::ORIGIN, &p).is_err());
    }

    #[test]
    fn los_probability_increases_with_altitude() {
        let p = params();
        let user = Point2::new(200.0, 0.0);
        let mut prev = 0.0;
        for h in [10.0, 50.0, 100.0, 200.0, 400.0] {
            let pr = los_probability(Point3::new(0.0, 0.0, h), user, &p).unwrap();
            assert!(pr > prev && pr < 1.0);
            prev = pr;
        }
    }

    #[test]
    fn expected_pathloss_direct_evaluation() {
        let p = params();
        let uav = Point3::new(0.0, 0.0, 100.0);
        let user = Point2::ORIGIN;
        let pr = los_probability(uav, user, &p).unwrap();
        let oracle = free_space_pl(5.0, 38e9) + pr * 20.0 * 2.0 + (1.0 - pr) * 24.0 * 2.0;
        let got = uav_user_pathloss(uav, user, &p, &FadingDraw::MEAN).unwrap();
        assert!((got - oracle).abs() < 1e-10);
    }

    #[test]
    fn equal_exponents_make_los_irrelevant() {
        let p = ChannelParams { exponent_nlos: 2.0, shadow_std_nlos_db: 5.3, ..params() };
        let a = uav_user_pathloss(Point3::new(0.0, 0.0, 100.0), Point2::new(10.0, 0.0), &p, &FadingDraw::MEAN).unwrap();
        let b = uav_user_pathloss(
            Point3::new(0.0, 0.0, 100.0),
            Point2::new(10.0, 0.0),
            &ChannelParams { env_x: 30.0, ..p.clone() },
            &FadingDraw::MEAN,
        )
        .unwrap();
        assert!((a - b).abs() < 1e-10);
    }

    #[test]
    fn forced_los_gives_los_pathloss() {
        let p = ChannelParams { env_x: 1e-3, env_y: 50.0, ..params() };
        let uav = Point3::new(0.0, 0.0, 100.0);
        let got = uav_user_pathloss(uav, Point2::ORIGIN, &p, &FadingDraw::MEAN).unwrap();
        assert!((got - (free_space_pl(5.0, 38e9) + 40.0)).abs() < 1e-9);
    }

    #[test]
    fn snr_examples() {
        let snr = uav_user_snr(1.0, 100.0, DEFAULT_NOISE_W);
        assert!((snr - 316.227_766).abs() < 1e-3);
        assert!((uav_user_snr(2.0, 0.0, 2.0) - 1.0).abs() < 1e-15);
        let r = uav_user_snr(1.0, 110.0, DEFAULT_NOISE_W) / snr;
        assert!((r - 0.1).abs() < 1e-12);
    }

    #[test]
    fn slot_capacities() {
        let c = uav_slot_capacity(&[1.0; 10], 1, 1e9, 1.0).unwrap();
        assert!((c - 1e9).abs() < 1e-3);
        assert_eq!(uav_slot_capacity(&[0.0; 10], 1, 1e9, 1.0).unwrap(), 0.0);
        let half = uav_slot_capacity(&[1.0; 10], 2, 1e9, 1.0).unwrap();
        assert!((half - 5e8).abs() < 1e-3);
        assert_eq!(uav_slot_capacity(&[1.0], 0, 1e9, 1.0), Err(ChannelError::EmptyAssociation));

        assert!((rrh_slot_capacity(&[3.0; 7], 1e6, 1.0) - 2e6).abs() < 1e-6);
        assert_eq!(rrh_slot_capacity(&[0.0; 7], 1e6, 1.0), 0.0);
        // F intervals of duration Δτ/F: doubling Δτ doubles the bits.
        let one = rrh_slot_capacity(&[3.0], 1e6, 1.0);
        assert!((rrh_slot_capacity(&[3.0; 50], 1e6, 2.0) - 2.0 * one).abs() < 1e-6);
    }

    #[test]
    fn g2a_direct_evaluation() {
        let p = params();
        let uav = Point3::new(0.0, 0.0, 100.0);
        let pr = 1.0 / (1.0 + 11.9 * (-0.13f64 * (90.0 - 11.9)).exp());
        let gain = 100f64.powi(-2) * (pr + (1.0 - pr) / 100.0);
        let oracle = 1e6 * (1.0 + 1.0 * gain / DEFAULT_NOISE_W).log2();
        let got =
            g2a_fronthaul_rate(uav, Point2::ORIGIN, 1, 1.0, 1e6, DEFAULT_NOISE_W, 1.0, &p, &FadingDraw::MEAN).unwrap();
        assert!((got - oracle).abs() / oracle < 1e-12);
        let shared =
            g2a_fronthaul_rate(uav, Point2::ORIGIN, 4, 1.0, 1e6, DEFAULT_NOISE_W, 1.0, &p, &FadingDraw::MEAN).unwrap();
        assert!((shared * 4.0 - got).abs() / got < 1e-12);
    }

    #[test]
    fn g2a_unit_eta_ignores_los() {
        let p = ChannelParams { g2a_nlos_factor: 1.0, ..params() };
        let uav = Point3::new(300.0, 0.0, 120.0);
        let a = g2a_gain(uav, Point2::ORIGIN, &p, &FadingDraw::MEAN).unwrap();
        let b = g2a_gain(uav, Point2::ORIGIN, &ChannelParams { env_x: 40.0, ..p.clone() }, &FadingDraw::MEAN).unwrap();
        assert!((a - b).abs() / a < 1e-12);
        assert!((a - uav.dist_to(Point2::ORIGIN).powi(-2)).abs() / a < 1e-12);
    }

    #[test]
    fn g2a_rate_falls_with_horizontal_distance() {
        let p = params();
        let mut prev = f64::INFINITY;
        for i in 0..50 {
            let uav = Point3::new(i as f64 * 10.0, 0.0, 100.0);
            let r = g2a_fronthaul_rate(uav, Point2::ORIGIN, 1, 1.0, 1e6, DEFAULT_NOISE_W, 1.0, &p, &FadingDraw::MEAN)
                .unwrap();
            assert!(r < prev, "step {i}");
            prev = r;
        }
    }

    fn random_h(u: usize, r: usize, rng: &mut impl Rng) -> Mat {
        let data: Vec<f64> = (0..u * r).map(|_| rng.gen_range(-1.0..1.0)).collect();
        Mat::from_rows(u, r, &data)
    }

    #[test]
    fn zf_identity_on_random_channels() {
        let mut rng = RandomSource::new(5).rng();
        for _ in 0..50 {
            let h = random_h(2, 3, &mut rng);
            let f = zf_precoder(&h, 0).unwrap();
            assert!((&(&h * &f) - &Mat::identity(2)).max_abs() <= tol::ZERO_FORCING);
        }
    }

    #[test]
    fn zf_rejects_rank_deficient_and_overloaded() {
        let h = Mat::from_rows(2, 3, &[1.0, 2.0, 3.0, 2.0, 4.0, 6.0]);
        assert_eq!(zf_precoder(&h, 4), Err(ChannelError::RankDeficient { cluster: 4 }));
        let h = Mat::from_rows(3, 2, &[1.0, 0.0, 0.0, 1.0, 1.0, 1.0]);
        assert!(matches!(zf_precoder(&h, 1), Err(ChannelError::TooManyUsers { .. })));
    }

    fn cluster(id: usize, rrhs: Vec<Point2>, users: Vec<usize>) -> RrhCluster {
        RrhCluster { id, rrhs, users }
    }

    #[test]
    fn single_user_cluster_gets_full_power() {
        let p = params();
        let cl = vec![cluster(0, vec![Point2::new(0.0, 0.0), Point2::new(50.0, 0.0)], vec![7])];
        let pos = |_u: usize| Point2::new(20.0, 30.0);
        let out = zfbf_sinr(&cl, &pos, 0.1, DEFAULT_NOISE_W, &|_| 0.0, &|_, _, _| 1.0, &p).unwrap();
        let (uid, s) = out.sinr[0][0];
        assert_eq!(uid, 7);
        assert!((s - 0.1 / DEFAULT_NOISE_W).abs() / s < 1e-9);
    }

    #[test]
    fn distant_cluster_interference_vanishes() {
        let p = params();
        let near = cluster(0, vec![Point2::new(0.0, 0.0), Point2::new(30.0, 0.0)], vec![0]);
        let positions = |u: usize| if u == 0 { Point2::new(10.0, 10.0) } else { Point2::new(1e10, 10.0) };
        let far = cluster(1, vec![Point2::new(1e10, 0.0), Point2::new(1e10 + 30.0, 0.0)], vec![1]);
        let alone =
            zfbf_sinr(std::slice::from_ref(&near), &positions, 0.1, DEFAULT_NOISE_W, &|_| 1e-9, &|_, _, _| 1.0, &p)
                .unwrap();
        let both = zfbf_sinr(&[near, far], &positions, 0.1, DEFAULT_NOISE_W, &|_| 1e-9, &|_, _, _| 1.0, &p).unwrap();
        let a = alone.sinr[0][0].1;
        let b = both.sinr[0][0].1;
        assert!((a - b).abs() / a < 1e-6, "{a} vs {b}");
    }

    #[test]
    fn interference_lowers_sinr() {
        let p = params();
        let a = cluster(0, vec![Point2::new(0.0, 0.0), Point2::new(30.0, 0.0)], vec![0]);
        let b = cluster(1, vec![Point2::new(60.0, 0.0), Point2::new(90.0, 0.0)], vec![1]);
        let pos = |u: usize| if u == 0 { Point2::new(20.0, 10.0) } else { Point2::new(70.0, 10.0) };
        let alone =
            zfbf_sinr(std::slice::from_ref(&a), &pos, 0.1, DEFAULT_NOISE_W, &|_| 0.0, &|_, _, _| 1.0, &p).unwrap();
        let both = zfbf_sinr(&[a, b], &pos, 0.1, DEFAULT_NOISE_W, &|_| 0.0, &|_, _, _| 1.0, &p).unwrap();
        assert!(both.sinr[0][0].1 < alone.sinr[0][0].1);
        assert!(both.residual <= tol::ZERO_FORCING);
    }

    #[test]
    fn overloaded_cluster_reported() {
        let p = params();
        let c = cluster(3, vec![Point2::ORIGIN], vec![0, 1]);
        let err = zfbf_sinr(&[c], &|_| Point2::new(1.0, 1.0), 0.1, 1e-13, &|_| 0.0, &|_, _, _| 1.0, &p).unwrap_err();
        assert_eq!(err, ChannelError::TooManyUsers { cluster: 3, users: 2, antennas: 1 });
    }

    #[test]
    fn sampled_fading_is_reproducible() {
        let rs = RandomSource::new(9).derive("fading");
        let p = params();
        assert_eq!(FadingDraw::for_link(&rs, "uav0-user3", 5, &p), FadingDraw::for_link(&rs, "uav0-user3", 5, &p));
        assert_ne!(FadingDraw::for_link(&rs, "uav0-user3", 5, &p), FadingDraw::for_link(&rs, "uav0-user3", 6, &p));
    }
}
