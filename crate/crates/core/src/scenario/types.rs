use serde::{Deserialize, Serialize};

/// Ground position (m).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const ORIGIN: Point2 = Point2 { x: 0.0, y: 0.0 };

    pub fn new(x: f64, y: f64) -> Self {
        Point2 { x, y }
    }

    pub fn dist(self, o: Point2) -> f64 {
        (self.x - o.x).hypot(self.y - o.y)
    }

    pub fn dist2(self, o: Point2) -> f64 {
        let (dx, dy) = (self.x - o.x, self.y - o.y);
        dx * dx + dy * dy
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    /// Projects onto the disk of radius `r` centred at the origin.
    pub fn clamp_to_disk(self, r: f64) -> Point2 {
        let n = self.norm();
        if n <= r {
            self
        } else {
            Point2::new(self.x * r / n, self.y * r / n)
        }
    }

    pub fn lerp(self, o: Point2, s: f64) -> Point2 {
        Point2::new(self.x + (o.x - self.x) * s, self.y + (o.y - self.y) * s)
    }

    pub fn at_height(self, h: f64) -> Point3 {
        Point3 { x: self.x, y: self.y, h }
    }
}

/// Airborne position (m); `h` is height above ground.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point3 {
    pub x: f64,
    pub y: f64,
    pub h: f64,
}

impl Point3 {
    pub fn new(x: f64, y: f64, h: f64) -> Self {
        Point3 { x, y, h }
    }

    pub fn ground(self) -> Point2 {
        Point2::new(self.x, self.y)
    }

    /// Slant distance to a ground point.
    pub fn dist_to(self, p: Point2) -> f64 {
        let d2 = self.ground().dist2(p);
        (d2 + self.h * self.h).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum Association {
    Rrh(usize),
    Uav(usize),
    #[default]
    Unserved,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserState {
    pub id: usize,
    pub position: Point2,
    /// 0 = work profile, 1 = entertainment profile.
    pub profile: usize,
    /// Index into the configured device types.
    pub device: usize,
    pub screen_factor: f64,
    pub request: Option<usize>,
    pub association: Association,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UavState {
    pub id: usize,
    pub position: Point3,
    /// Cached content ids, sorted and distinct.
    pub cache: Vec<usize>,
    pub users: Vec<usize>,
}

impl UavState {
    pub fn caches(&self, content: usize) -> bool {
        self.cache.binary_search(&content).is_ok()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RrhCluster {
    pub id: usize,
    pub rrhs: Vec<Point2>,
    pub users: Vec<usize>,
}

impl RrhCluster {
    pub fn centroid(&self) -> Point2 {
        let n = self.rrhs.len().max(1) as f64;
        let (sx, sy) = self.rrhs.iter().fold((0.0, 0.0), |(a, b), p| (a + p.x, b + p.y));
        Point2::new(sx / n, sy / n)
    }

    /// Zero-forcing needs no more users than antennas.
    pub fn has_room(&self) -> bool {
        self.users.len() < self.rrhs.len()
    }
}
