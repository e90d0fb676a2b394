//! Sensor synthesis: raycasting against the scene, camera products (RGB,
//! planar depth, semantic segmentation), and 360-degree lidar sweeps.
//!
//! Sensors mount on the ego in a carrier frame with +x along the ego
//! heading, +y to its left, +z up. The camera looks along +x with the usual
//! image convention (+z forward, +x right, +y down); lidar azimuth 0 is
//! forward and grows counter-clockwise, channel 0 is the lowest elevation.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::annotate::intrinsics;
use crate::geom::{heading_dir, Vec2, Vec3};
use crate::scene::{Scene, SceneObject, SemanticClass};
use crate::sim::AgentState;

/// Rays ignore intersections closer than this.
pub const RAY_EPS: f64 = 1e-6;

/// Default sensor height above ground, meters.
pub const DEFAULT_SENSOR_HEIGHT: f64 = 2.4;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("invalid camera config: {0}")]
    Camera(String),
    #[error("invalid lidar config: {0}")]
    Lidar(String),
}

/// Rigid sensor offset from the ego reference point, in the carrier frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Mount {
    pub forward: f64,
    pub left: f64,
    pub up: f64,
}

impl Default for Mount {
    fn default() -> Self {
        Mount {
            forward: 0.0,
            left: 0.0,
            up: DEFAULT_SENSOR_HEIGHT,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default)]
pub struct CameraConfig {
    pub width: u32,
    pub height: u32,
    pub hfov_deg: f64,
    pub fps: f64,
    pub mount: Mount,
}

impl Default for CameraConfig {
    fn default() -> Self {
        CameraConfig {
            width: 1280,
            height: 720,
            hfov_deg: 90.0,
            fps: 15.0,
            mount: Mount::default(),
        }
    }
}

impl CameraConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.width < 1 || self.height < 1 {
            return Err(ConfigError::Camera(format!(
                "resolution {}x{} is empty",
                self.width, self.height
            )));
        }
        if !(self.hfov_deg > 0.0 && self.hfov_deg < 180.0) {
            return Err(ConfigError::Camera(format!(
                "horizontal fov {} must be in (0, 180)",
                self.hfov_deg
            )));
        }
        if !(self.fps > 0.0) {
            return Err(ConfigError::Camera(format!("fps {} must be positive", self.fps)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default)]
pub struct LidarConfig {
    pub channels: u32,
    pub azimuth_steps: u32,
    pub vfov_lo_deg: f64,
    pub vfov_hi_deg: f64,
    pub range_m: f64,
    pub rate_hz: f64,
    pub mount: Mount,
}

impl Default for LidarConfig {
    fn default() -> Self {
        LidarConfig {
            channels: 32,
            azimuth_steps: 688,
            vfov_lo_deg: -25.0,
            vfov_hi_deg: 15.0,
            range_m: 40.0,
            rate_hz: 15.0,
            mount: Mount::default(),
        }
    }
}

impl LidarConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.channels < 1 || self.azimuth_steps < 1 {
            return Err(ConfigError::Lidar("channels and azimuthSteps must be at least 1".into()));
        }
        if !(self.vfov_lo_deg < self.vfov_hi_deg) {
            return Err(ConfigError::Lidar(format!(
                "vertical fov [{}, {}] is empty",
                self.vfov_lo_deg, self.vfov_hi_deg
            )));
        }
        if !(self.range_m > 0.0) {
            return Err(ConfigError::Lidar(format!("range {} must be positive", self.range_m)));
        }
        if !(self.rate_hz > 0.0) {
            return Err(ConfigError::Lidar(format!("rate {} must be positive", self.rate_hz)));
        }
        Ok(())
    }

    /// Beam elevation of one channel, degrees; channel 0 is the lowest.
    pub fn elevation_deg(&self, channel: u32) -> f64 {
        if self.channels == 1 {
            self.vfov_lo_deg
        } else {
            self.vfov_lo_deg
                + channel as f64 * (self.vfov_hi_deg - self.vfov_lo_deg) / (self.channels - 1) as f64
        }
    }
}

/// Sensor carrier frame of an ego state plus mount offset.
#[derive(Debug, Clone, Copy)]
pub struct SensorFrame {
    pub origin: Vec3,
    fwd: Vec3,
    left: Vec3,
}

impl SensorFrame {
    pub fn new(ego: &AgentState, mount: &Mount) -> Self {
        let f2 = heading_dir(ego.heading);
        let l2 = heading_dir(ego.heading + std::f64::consts::FRAC_PI_2);
        let fwd = Vec3::new(f2.x, f2.y, 0.0);
        let left = Vec3::new(l2.x, l2.y, 0.0);
        let origin = Vec3::new(ego.x, ego.y, 0.0)
            + fwd * mount.forward
            + left * mount.left
            + Vec3::new(0.0, 0.0, mount.up);
        SensorFrame { origin, fwd, left }
    }

    /// Carrier-frame direction (x fwd, y left, z up) to world.
    pub fn dir_to_world(&self, v: Vec3) -> Vec3 {
        self.fwd * v.x + self.left * v.y + Vec3::new(0.0, 0.0, v.z)
    }

    /// World point to carrier-frame coordinates.
    pub fn point_to_local(&self, p: Vec3) -> Vec3 {
        let rel = p - self.origin;
        Vec3::new(rel.dot(self.fwd), rel.dot(self.left), rel.z)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hit {
    pub t: f64,
    pub class: SemanticClass,
    /// Scene object id, or 0 for the ground plane.
    pub obj_id: u32,
    /// Outward normal of the struck face, world frame.
    pub normal: Vec3,
}

/// Nearest intersection of a ray with the ground plane and every object box.
/// Rays starting inside a box hit its far face. `None` on a miss.
pub fn ray_cast(origin: Vec3, dir: Vec3, scene: &Scene) -> Option<Hit> {
    debug_assert!((dir.norm() - 1.0).abs() < 1e-9, "dir must be a unit vector");
    let mut best: Option<Hit> = None;

    if dir.z < 0.0 {
        let t = -origin.z / dir.z;
        if t > RAY_EPS {
            let p = origin + dir * t;
            best = Some(Hit {
                t,
                class: scene.world.ground_class_at(Vec2::new(p.x, p.y)),
                obj_id: 0,
                normal: Vec3::new(0.0, 0.0, 1.0),
            });
        }
    }

    for obj in &scene.objects {
        if let Some(hit) = ray_box(origin, dir, obj) {
            if best.as_ref().is_none_or(|b| hit.t < b.t) {
                best = Some(hit);
            }
        }
    }
    best
}

/// Slab test in the box's local frame.
fn ray_box(origin: Vec3, dir: Vec3, obj: &SceneObject) -> Option<Hit> {
    let f2 = heading_dir(obj.heading);
    let l2 = heading_dir(obj.heading + std::f64::consts::FRAC_PI_2);
    let axes = [
        Vec3::new(f2.x, f2.y, 0.0),
        Vec3::new(l2.x, l2.y, 0.0),
        Vec3::new(0.0, 0.0, 1.0),
    ];
    let half = [
        obj.dims.length / 2.0,
        obj.dims.width / 2.0,
        obj.dims.height / 2.0,
    ];
    let center = Vec3::new(obj.x, obj.y, obj.center_z());
    let rel = origin - center;

    let mut t_min = f64::NEG_INFINITY;
    let mut t_max = f64::INFINITY;
    // Axis index and direction sign that bound the interval.
    let mut enter_axis = 0usize;
    let mut exit_axis = 0usize;

    for k in 0..3 {
        let o = rel.dot(axes[k]);
        let d = dir.dot(axes[k]);
        if d.abs() < 1e-12 {
            if o.abs() > half[k] {
                return None;
            }
            continue;
        }
        let mut t1 = (-half[k] - o) / d;
        let mut t2 = (half[k] - o) / d;
        if t1 > t2 {
            std::mem::swap(&mut t1, &mut t2);
        }
        if t1 > t_min {
            t_min = t1;
            enter_axis = k;
        }
        if t2 < t_max {
            t_max = t2;
            exit_axis = k;
        }
        if t_min > t_max {
            return None;
        }
    }

    let (t, axis, outward_sign) = if t_min > RAY_EPS {
        // Entering through a face whose outward normal opposes the ray.
        let d = dir.dot(axes[enter_axis]);
        (t_min, enter_axis, -d.signum())
    } else if t_max > RAY_EPS {
        let d = dir.dot(axes[exit_axis]);
        (t_max, exit_axis, d.signum())
    } else {
        return None;
    };

    Some(Hit {
        t,
        class: obj.class,
        obj_id: obj.id,
        normal: axes[axis] * outward_sign,
    })
}

/// Per-pixel products of one camera exposure; planes share dimensions and
/// `depth` is planar z-depth with `+inf` on sky.
#[derive(Debug, Clone, PartialEq)]
pub struct CameraFrame {
    pub width: u32,
    pub height: u32,
    /// Row-major RGB triplets.
    pub rgb: Vec<u8>,
    pub depth: Vec<f32>,
    /// Class ids.
    pub semseg: Vec<u8>,
}

impl CameraFrame {
    pub fn pixel_index(&self, u: u32, v: u32) -> usize {
        (v * self.width + u) as usize
    }
}

const LIGHT_DIR: Vec3 = Vec3::new(1.0, 1.0, 2.0);

fn shade(color: [u8; 3], normal: Vec3) -> [u8; 3] {
    let l = LIGHT_DIR.normalized();
    let lambert = normal.dot(l).max(0.2);
    let mut out = [0u8; 3];
    for (o, c) in out.iter_mut().zip(color) {
        *o = (c as f64 * lambert).round().clamp(0.0, 255.0) as u8;
    }
    out
}

/// Render RGB, depth, and semantic segmentation through a pinhole camera.
pub fn render_camera(scene: &Scene, ego: &AgentState, cfg: &CameraConfig) -> CameraFrame {
    let k = intrinsics(cfg);
    let frame = SensorFrame::new(ego, &cfg.mount);
    let (w, h) = (cfg.width, cfg.height);
    let n = (w * h) as usize;
    let mut rgb = vec![0u8; n * 3];
    let mut depth = vec![f32::INFINITY; n];
    let mut semseg = vec![0u8; n];
    let sky = SemanticClass::None.color();

    for v in 0..h {
        for u in 0..w {
            let px = (u as f64 + 0.5 - k.cx) / k.fx;
            let py = (v as f64 + 0.5 - k.cy) / k.fy;
            let inv_len = 1.0 / (px * px + py * py + 1.0).sqrt();
            // Camera (+z fwd, +x right, +y down) to carrier (x fwd, y left, z up).
            let local = Vec3::new(inv_len, -px * inv_len, -py * inv_len);
            let dir = frame.dir_to_world(local);
            let idx = (v * w + u) as usize;
            match ray_cast(frame.origin, dir, scene) {
                Some(hit) => {
                    depth[idx] = (hit.t * inv_len) as f32;
                    semseg[idx] = hit.class.id();
                    let c = shade(hit.class.color(), hit.normal);
                    rgb[idx * 3..idx * 3 + 3].copy_from_slice(&c);
                }
                None => {
                    rgb[idx * 3..idx * 3 + 3].copy_from_slice(&sky);
                }
            }
        }
    }

    CameraFrame {
        width: w,
        height: h,
        rgb,
        depth,
        semseg,
    }
}

/// One labeled return in the lidar frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LidarPoint {
    pub x: f32,
    pub y: f32,
    pub z: f32,
    pub class_id: u8,
    pub ring: u8,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct LidarSweep {
    pub points: Vec<LidarPoint>,
}

/// Cast the full channel-by-azimuth ray grid; hits farther than the range
/// produce no point. The sweep is instantaneous.
pub fn sweep_lidar(scene: &Scene, ego: &AgentState, cfg: &LidarConfig) -> LidarSweep {
    let frame = SensorFrame::new(ego, &cfg.mount);
    let mut points = Vec::new();
    for c in 0..cfg.channels {
        let elev = cfg.elevation_deg(c).to_radians();
        let (se, ce) = elev.sin_cos();
        for a in 0..cfg.azimuth_steps {
            let az = (a as f64 * 360.0 / cfg.azimuth_steps as f64).to_radians();
            let (sa, ca) = az.sin_cos();
            let local = Vec3::new(ce * ca, ce * sa, se);
            let dir = frame.dir_to_world(local);
            if let Some(hit) = ray_cast(frame.origin, dir, scene) {
                if hit.t <= cfg.range_m {
                    let p = local * hit.t;
                    points.push(LidarPoint {
                        x: p.x as f32,
                        y: p.y as f32,
                        z: p.z as f32,
                        class_id: hit.class.id(),
                        ring: c as u8,
                    });
                }
            }
        }
    }
    LidarSweep { points }
}
