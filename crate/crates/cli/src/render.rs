//! Visualization of stored frames as PPM images.

use std::path::Path;
use std::str::FromStr;

use scenegen_core::annotate::{intrinsics, LidarToCam, Obb3d, NEAR_PLANE};
use scenegen_core::dataset::{write_ppm, ClassEntry, RunHandle};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Layer {
    Boxes2d,
    Boxes3d,
    Depth,
    Semseg,
    LidarBev,
}

impl Layer {
    pub fn file_stem(self) -> &'static str {
        match self {
            Layer::Boxes2d => "boxes2d",
            Layer::Boxes3d => "boxes3d",
            Layer::Depth => "depth",
            Layer::Semseg => "semseg",
            Layer::LidarBev => "lidar-bev",
        }
    }
}

impl FromStr for Layer {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "boxes2d" => Ok(Layer::Boxes2d),
            "boxes3d" => Ok(Layer::Boxes3d),
            "depth" => Ok(Layer::Depth),
            "semseg" => Ok(Layer::Semseg),
            "lidar-bev" => Ok(Layer::LidarBev),
            other => Err(format!(
                "unknown layer '{other}' (expected boxes2d, boxes3d, depth, semseg, lidar-bev)"
            )),
        }
    }
}

/// Render the requested layers of one frame. A single layer writes exactly
/// `out`; multiple layers write `<layer>.ppm` files into `out` as a
/// directory.
pub fn cmd_render(
    run_dir: &Path,
    frame_index: u32,
    layers: &[Layer],
    out: &Path,
) -> Result<(), CliError> {
    if layers.is_empty() {
        return Err(CliError::Config("no layers requested".into()));
    }
    let run = RunHandle::open(run_dir.to_path_buf())?;
    if frame_index >= run.manifest().frame_count {
        return Err(CliError::Config(format!(
            "frame {frame_index} out of range; run has {} frames",
            run.manifest().frame_count
        )));
    }
    let frame = run.frame(frame_index)?;

    let single = layers.len() == 1;
    if !single {
        std::fs::create_dir_all(out)?;
    }
    for layer in layers {
        let path = if single {
            out.to_path_buf()
        } else {
            out.join(format!("{}.ppm", layer.file_stem()))
        };
        let (w, h, rgb) = render_layer(&run, &frame, *layer)?;
        write_ppm(&path, w, h, &rgb)?;
    }
    Ok(())
}

fn class_color(table: &[ClassEntry], id: u8) -> [u8; 3] {
    table
        .iter()
        .find(|c| c.id == id)
        .map(|c| c.color)
        .unwrap_or([255, 255, 255])
}

fn render_layer(
    run: &RunHandle,
    frame: &scenegen_core::dataset::FrameRecord,
    layer: Layer,
) -> Result<(u32, u32, Vec<u8>), CliError> {
    let table = &run.manifest().class_table;
    match layer {
        Layer::Boxes2d => {
            let (w, h, mut rgb) = frame.read_rgb()?;
            for b in frame.read_boxes2d()? {
                draw_rect_outline(&mut rgb, w, h, &b, class_color(table, b.class_id));
            }
            Ok((w, h, rgb))
        }
        Layer::Boxes3d => {
            let (w, h, mut rgb) = frame.read_rgb()?;
            let rig = &run.manifest().sensor_rig;
            let cam = rig.cameras.first().copied().unwrap_or_default();
            let k = intrinsics(&cam);
            let l2c = LidarToCam::between(&rig.lidar_mount(), &cam.mount);
            for b in frame.read_boxes3d()? {
                draw_wireframe(&mut rgb, w, h, &b, &k, &l2c, class_color(table, b.class_id));
            }
            Ok((w, h, rgb))
        }
        Layer::Depth => {
            let (w, h, depth) = frame.read_depth()?;
            let mut rgb = vec![0u8; (w * h) as usize * 3];
            for (i, d) in depth.iter().enumerate() {
                let v = (255.0 * (1.0 - *d as f64 / 60.0)).round().clamp(0.0, 255.0) as u8;
                rgb[i * 3] = v;
                rgb[i * 3 + 1] = v;
                rgb[i * 3 + 2] = v;
            }
            Ok((w, h, rgb))
        }
        Layer::Semseg => {
            let (w, h, ids) = frame.read_semseg()?;
            let mut rgb = vec![0u8; (w * h) as usize * 3];
            for (i, id) in ids.iter().enumerate() {
                let c = class_color(table, *id);
                rgb[i * 3..i * 3 + 3].copy_from_slice(&c);
            }
            Ok((w, h, rgb))
        }
        Layer::LidarBev => {
            const SIZE: u32 = 800;
            const PX_PER_M: f64 = 10.0;
            let sweep = frame.read_lidar()?;
            let mut rgb = vec![0u8; (SIZE * SIZE) as usize * 3];
            for p in &sweep.points {
                // Forward (+x lidar) is up, left (+y lidar) is left.
                let u = (SIZE as f64 / 2.0 - p.y as f64 * PX_PER_M).round();
                let v = (SIZE as f64 / 2.0 - p.x as f64 * PX_PER_M).round();
                if u < 0.0 || v < 0.0 || u >= SIZE as f64 || v >= SIZE as f64 {
                    continue;
                }
                let idx = (v as u32 * SIZE + u as u32) as usize * 3;
                let c = class_color(table, p.class_id);
                rgb[idx..idx + 3].copy_from_slice(&c);
            }
            Ok((SIZE, SIZE, rgb))
        }
    }
}

/// Two-pixel-wide rectangle outline, clipped to the image.
fn draw_rect_outline(
    rgb: &mut [u8],
    w: u32,
    h: u32,
    b: &scenegen_core::annotate::Box2d,
    color: [u8; 3],
) {
    let x0 = b.xmin.round().max(0.0) as i64;
    let x1 = b.xmax.round().min(w as f64 - 1.0) as i64;
    let y0 = b.ymin.round().max(0.0) as i64;
    let y1 = b.ymax.round().min(h as f64 - 1.0) as i64;
    for y in y0..=y1 {
        for x in x0..=x1 {
            let on_border = x <= x0 + 1 || x >= x1 - 1 || y <= y0 + 1 || y >= y1 - 1;
            if on_border {
                let idx = (y as u32 * w + x as u32) as usize * 3;
                rgb[idx..idx + 3].copy_from_slice(&color);
            }
        }
    }
}

/// The 12 edges connect corners whose index bits differ in one position.
fn draw_wireframe(
    rgb: &mut [u8],
    w: u32,
    h: u32,
    obb: &Obb3d,
    k: &scenegen_core::annotate::CalibrationMatrix,
    l2c: &LidarToCam,
    color: [u8; 3],
) {
    let cams: Vec<_> = obb.corners().iter().map(|c| l2c.transform(*c)).collect();
    for i in 0..8usize {
        for bit in [1usize, 2, 4] {
            let j = i ^ bit;
            if j < i {
                continue;
            }
            let (a, b) = (cams[i], cams[j]);
            if a.z <= NEAR_PLANE || b.z <= NEAR_PLANE {
                continue;
            }
            let pa = (k.fx * a.x / a.z + k.cx, k.fy * a.y / a.z + k.cy);
            let pb = (k.fx * b.x / b.z + k.cx, k.fy * b.y / b.z + k.cy);
            draw_line(rgb, w, h, pa, pb, color);
        }
    }
}

fn draw_line(rgb: &mut [u8], w: u32, h: u32, a: (f64, f64), b: (f64, f64), color: [u8; 3]) {
    let steps = ((b.0 - a.0).abs().max((b.1 - a.1).abs()).ceil() as usize).max(1);
    for s in 0..=steps {
        let t = s as f64 / steps as f64;
        let x = (a.0 + (b.0 - a.0) * t).round();
        let y = (a.1 + (b.1 - a.1) * t).round();
        if x < 0.0 || y < 0.0 || x >= w as f64 || y >= h as f64 {
            continue;
        }
        let idx = (y as u32 * w + x as u32) as usize * 3;
        rgb[idx..idx + 3].copy_from_slice(&color);
    }
}
