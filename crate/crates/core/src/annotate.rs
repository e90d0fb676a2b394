//! Ground-truth annotations: the camera calibration matrix, 3-D oriented
//! boxes in the lidar frame, and their projection to 2-D image boxes.
//!
//! The lidar frame has +x along the ego heading, +y left, +z up, origin at
//! the sensor. The camera frame has +z forward, +x right, +y down; with the
//! co-located default rig the mapping is `x_cam = -y_lidar, y_cam = -z_lidar,
//! z_cam = +x_lidar`.

use serde::{Deserialize, Serialize};

use crate::geom::{normalize_angle, Vec3};
use crate::scene::Scene;
use crate::sensor::{CameraConfig, Mount, SensorFrame};
use crate::sim::AgentState;

/// Pinhole intrinsics `[[fx, 0, cx], [0, fy, cy], [0, 0, 1]]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationMatrix {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
}

impl CalibrationMatrix {
    pub fn rows(&self) -> [[f64; 3]; 3] {
        [
            [self.fx, 0.0, self.cx],
            [0.0, self.fy, self.cy],
            [0.0, 0.0, 1.0],
        ]
    }
}

/// Intrinsics implied by a camera config: square pixels, principal point at
/// the image center, focal length from the horizontal field of view.
///
/// The half-angle tangent is computed as `sin(h) / (1 + cos(h))`, which is
/// exact at the common 90-degree setting where `tan(h/2)` rounds away from 1.
pub fn intrinsics(cfg: &CameraConfig) -> CalibrationMatrix {
    let hfov = cfg.hfov_deg.to_radians();
    let tan_half = hfov.sin() / (1.0 + hfov.cos());
    let fx = (cfg.width as f64 / 2.0) / tan_half;
    CalibrationMatrix {
        fx,
        fy: fx,
        cx: cfg.width as f64 / 2.0,
        cy: cfg.height as f64 / 2.0,
    }
}

/// Oriented 3-D box in the lidar frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Obb3d {
    /// Body center.
    pub center: [f64; 3],
    /// Length, width, height.
    pub dims: [f64; 3],
    /// Rotation about lidar +z, radians in `(-pi, pi]`.
    pub yaw: f64,
    pub class_id: u8,
    pub obj_id: u32,
}

impl Obb3d {
    pub fn corners(&self) -> [Vec3; 8] {
        let c = Vec3::new(self.center[0], self.center[1], self.center[2]);
        let (sy, cy) = self.yaw.sin_cos();
        let ax = Vec3::new(cy, sy, 0.0) * (self.dims[0] / 2.0);
        let ay = Vec3::new(-sy, cy, 0.0) * (self.dims[1] / 2.0);
        let az = Vec3::new(0.0, 0.0, 1.0) * (self.dims[2] / 2.0);
        let mut out = [Vec3::new(0.0, 0.0, 0.0); 8];
        let mut i = 0;
        for sx in [-1.0, 1.0] {
            for sy_ in [-1.0, 1.0] {
                for sz in [-1.0, 1.0] {
                    out[i] = c + ax * sx + ay * sy_ + az * sz;
                    i += 1;
                }
            }
        }
        out
    }
}

/// Axis-aligned 2-D image box, pixels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Box2d {
    pub xmin: f64,
    pub ymin: f64,
    pub xmax: f64,
    pub ymax: f64,
    pub class_id: u8,
    pub obj_id: u32,
}

/// Rigid offset between the lidar and camera mounts, carrier-frame axes;
/// zero for the default co-located rig.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LidarToCam {
    pub dx: f64,
    pub dy: f64,
    pub dz: f64,
}

impl LidarToCam {
    /// Offset that maps points from a lidar mount into a camera mount.
    pub fn between(lidar_mount: &Mount, camera_mount: &Mount) -> Self {
        LidarToCam {
            dx: lidar_mount.forward - camera_mount.forward,
            dy: lidar_mount.left - camera_mount.left,
            dz: lidar_mount.up - camera_mount.up,
        }
    }

    /// Lidar-frame point to camera-frame coordinates.
    pub fn transform(&self, p: Vec3) -> Vec3 {
        let x = p.x + self.dx;
        let y = p.y + self.dy;
        let z = p.z + self.dz;
        Vec3::new(-y, -z, x)
    }
}

/// Near-plane distance for corner culling, meters.
pub const NEAR_PLANE: f64 = 0.1;

/// Ground-truth boxes for every non-ego object, in the lidar frame of the
/// given mount.
pub fn boxes_3d(scene: &Scene, ego: &AgentState, lidar_mount: &Mount) -> Vec<Obb3d> {
    let frame = SensorFrame::new(ego, lidar_mount);
    scene
        .objects
        .iter()
        .filter(|o| !o.is_ego)
        .map(|o| {
            let center = frame.point_to_local(Vec3::new(o.x, o.y, o.center_z()));
            Obb3d {
                center: [center.x, center.y, center.z],
                dims: [o.dims.length, o.dims.width, o.dims.height],
                yaw: normalize_angle(o.heading - ego.heading),
                class_id: o.class.id(),
                obj_id: o.id,
            }
        })
        .collect()
}

/// Project a 3-D box to the image plane: corners behind the near plane are
/// dropped (fewer than two survivors give `None`), the rest are projected
/// and wrapped in a min/max box clipped to the image. Partially culled boxes
/// are therefore approximate rather than snug.
pub fn project_box(
    obb: &Obb3d,
    k: &CalibrationMatrix,
    lidar_to_cam: &LidarToCam,
    image_dims: (u32, u32),
) -> Option<Box2d> {
    let mut kept = 0usize;
    let (mut umin, mut umax) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut vmin, mut vmax) = (f64::INFINITY, f64::NEG_INFINITY);
    for corner in obb.corners() {
        let cam = lidar_to_cam.transform(corner);
        if cam.z <= NEAR_PLANE {
            continue;
        }
        kept += 1;
        let u = k.fx * cam.x / cam.z + k.cx;
        let v = k.fy * cam.y / cam.z + k.cy;
        umin = umin.min(u);
        umax = umax.max(u);
        vmin = vmin.min(v);
        vmax = vmax.max(v);
    }
    if kept < 2 {
        return None;
    }
    let (w, h) = (image_dims.0 as f64, image_dims.1 as f64);
    let xmin = umin.clamp(0.0, w - 1.0);
    let xmax = umax.clamp(0.0, w - 1.0);
    let ymin = vmin.clamp(0.0, h - 1.0);
    let ymax = vmax.clamp(0.0, h - 1.0);
    if xmax - xmin <= 0.0 || ymax - ymin <= 0.0 {
        return None;
    }
    Some(Box2d {
        xmin,
        ymin,
        xmax,
        ymax,
        class_id: obb.class_id,
        obj_id: obb.obj_id,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::{Dims, SceneObject, SemanticClass};
    use crate::world::WorldModel;

    #[test]
    fn default_camera_intrinsics_are_exact() {
        let k = intrinsics(&CameraConfig::default());
        assert_eq!(k.fx, 640.0);
        assert_eq!(k.fy, 640.0);
        assert_eq!(k.cx, 640.0);
        assert_eq!(k.cy, 360.0);
        assert_eq!(k.rows(), [[640.0, 0.0, 640.0], [0.0, 640.0, 360.0], [0.0, 0.0, 1.0]]);
    }

    #[test]
    fn two_pixel_wide_image() {
        let cfg = CameraConfig {
            width: 2,
            height: 2,
            ..CameraConfig::default()
        };
        assert_eq!(intrinsics(&cfg).fx, 1.0);
    }

    fn obj(id: u32, x: f64, y: f64, heading: f64, dims: Dims, is_ego: bool) -> SceneObject {
        SceneObject {
            id,
            class: SemanticClass::Vehicle,
            x,
            y,
            z: 0.0,
            heading,
            dims,
            behavior: None,
            is_ego,
            allow_collisions: false,
            color: None,
        }
    }

    #[test]
    fn box_ahead_lands_on_the_lidar_x_axis() {
        let dims = Dims::new(4.6, 2.0, 1.5);
        let scene = Scene {
            objects: vec![
                obj(1, 0.0, 0.0, 0.0, dims, true),
                obj(2, 0.0, 10.0, 0.0, dims, false),
            ],
            world: WorldModel::flat_ground(),
            seed: 0,
            program_hash: 0,
        };
        let ego = AgentState {
            x: 0.0,
            y: 0.0,
            heading: 0.0,
            speed: 0.0,
        };
        let boxes = boxes_3d(&scene, &ego, &Mount::default());
        assert_eq!(boxes.len(), 1);
        let b = boxes[0];
        assert!((b.center[0] - 10.0).abs() < 1e-12);
        assert!(b.center[1].abs() < 1e-12);
        assert!((b.center[2] - (1.5 / 2.0 - 2.4)).abs() < 1e-12);
        assert_eq!(b.yaw, 0.0);
        assert_eq!(b.obj_id, 2);
    }

    #[test]
    fn rotated_coincident_object_keeps_pure_yaw() {
        let dims = Dims::new(4.6, 2.0, 1.5);
        let scene = Scene {
            objects: vec![
                obj(1, 0.0, 0.0, 0.0, dims, true),
                obj(2, 0.0, 0.0, std::f64::consts::FRAC_PI_2, dims, false),
            ],
            world: WorldModel::flat_ground(),
            seed: 0,
            program_hash: 0,
        };
        let ego = AgentState {
            x: 0.0,
            y: 0.0,
            heading: 0.0,
            speed: 0.0,
        };
        let boxes = boxes_3d(&scene, &ego, &Mount::default());
        assert!(boxes[0].center[0].abs() < 1e-12);
        assert!(boxes[0].center[1].abs() < 1e-12);
        assert!((boxes[0].yaw - std::f64::consts::FRAC_PI_2).abs() < 1e-12);
    }

    #[test]
    fn box_fully_behind_projects_to_none() {
        let k = intrinsics(&CameraConfig::default());
        let obb = Obb3d {
            center: [-10.0, 0.0, 0.0],
            dims: [1.0, 1.0, 1.0],
            yaw: 0.0,
            class_id: 4,
            obj_id: 1,
        };
        assert_eq!(project_box(&obb, &k, &LidarToCam::default(), (1280, 720)), None);
    }

    #[test]
    fn unit_cube_on_axis_matches_hand_projection() {
        let k = intrinsics(&CameraConfig::default());
        // Camera z of 10 means lidar x of 10 on the default rig.
        let obb = Obb3d {
            center: [10.0, 0.0, 0.0],
            dims: [1.0, 1.0, 1.0],
            yaw: 0.0,
            class_id: 4,
            obj_id: 1,
        };
        let b = project_box(&obb, &k, &LidarToCam::default(), (1280, 720)).unwrap();
        let expect_lo = 640.0 - 640.0 * 0.5 / 9.5;
        let expect_hi = 640.0 + 640.0 * 0.5 / 9.5;
        assert!((b.xmin - expect_lo).abs() < 1e-9, "xmin = {}", b.xmin);
        assert!((b.xmax - expect_hi).abs() < 1e-9);
        assert!((b.ymin - (360.0 - 640.0 * 0.5 / 9.5)).abs() < 1e-9);
        assert!((b.ymax - (360.0 + 640.0 * 0.5 / 9.5)).abs() < 1e-9);
    }

    #[test]
    fn containment_of_projected_corners() {
        let k = intrinsics(&CameraConfig::default());
        let obb = Obb3d {
            center: [18.0, 1.5, -0.4],
            dims: [4.6, 2.0, 1.5],
            yaw: 0.6,
            class_id: 4,
            obj_id: 3,
        };
        let b = project_box(&obb, &k, &LidarToCam::default(), (1280, 720)).unwrap();
        for corner in obb.corners() {
            let cam = LidarToCam::default().transform(corner);
            assert!(cam.z > NEAR_PLANE);
            let u = k.fx * cam.x / cam.z + k.cx;
            let v = k.fy * cam.y / cam.z + k.cy;
            assert!(u >= b.xmin - 1e-9 && u <= b.xmax + 1e-9);
            assert!(v >= b.ymin - 1e-9 && v <= b.ymax + 1e-9);
        }
    }

    #[test]
    fn shrinking_a_centered_box_never_grows_it() {
        let k = intrinsics(&CameraConfig::default());
        let mut prev_area = f64::INFINITY;
        for i in 0..10 {
            let s = 1.0 - i as f64 * 0.09;
            let obb = Obb3d {
                center: [12.0, 0.0, 0.0],
                dims: [3.0 * s, 2.0 * s, 1.5 * s],
                yaw: 0.35,
                class_id: 4,
                obj_id: 1,
            };
            let b = project_box(&obb, &k, &LidarToCam::default(), (1280, 720)).unwrap();
            let area = (b.xmax - b.xmin) * (b.ymax - b.ymin);
            assert!(area <= prev_area + 1e-9);
            prev_area = area;
        }
    }

    #[test]
    fn projection_round_trip() {
        let k = intrinsics(&CameraConfig::default());
        // Camera-frame point, reprojected from its pixel and depth.
        let p = Vec3::new(1.25, -0.5, 7.0);
        let u = k.fx * p.x / p.z + k.cx;
        let v = k.fy * p.y / p.z + k.cy;
        let back = Vec3::new((u - k.cx) * p.z / k.fx, (v - k.cy) * p.z / k.fy, p.z);
        assert!((back - p).norm() / p.norm() < 1e-9);
    }

    // Transforming world corners directly into the camera frame must agree
    // with going through the lidar frame.
    #[test]
    fn frame_composition_consistency() {
        let dims = Dims::new(4.2, 1.9, 1.6);
        let ego = AgentState {
            x: 3.0,
            y: -2.0,
            heading: 0.8,
            speed: 0.0,
        };
        let scene = Scene {
            objects: vec![
                obj(1, ego.x, ego.y, ego.heading, dims, true),
                obj(2, 9.0, 6.0, -0.4, dims, false),
            ],
            world: WorldModel::flat_ground(),
            seed: 0,
            program_hash: 0,
        };
        let mount = Mount::default();
        let boxes = boxes_3d(&scene, &ego, &mount);
        let sf = SensorFrame::new(&ego, &mount);
        let via_lidar: Vec<Vec3> = boxes[0]
            .corners()
            .iter()
            .map(|c| LidarToCam::default().transform(*c))
            .collect();

        // Independent path: world corner -> carrier frame -> camera axes.
        let o = &scene.objects[1];
        let (sy, cy) = o.heading.sin_cos();
        let fwd = Vec3::new(-sy, cy, 0.0) * (dims.length / 2.0);
        let left = Vec3::new(-cy, -sy, 0.0) * (dims.width / 2.0);
        let up = Vec3::new(0.0, 0.0, dims.height / 2.0);
        let center = Vec3::new(o.x, o.y, o.center_z());
        let mut direct = Vec::new();
        for sx in [-1.0, 1.0] {
            for sy_ in [-1.0, 1.0] {
                for sz in [-1.0, 1.0] {
                    let world = center + fwd * sx + left * sy_ + up * sz;
                    let local = sf.point_to_local(world);
                    direct.push(Vec3::new(-local.y, -local.z, local.x));
                }
            }
        }
        for (a, b) in via_lidar.iter().zip(&direct) {
            assert!((*a - *b).norm() < 1e-9, "{a:?} vs {b:?}");
        }
    }
}
