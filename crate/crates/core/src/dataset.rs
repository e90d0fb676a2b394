//! Bit-exact dataset storage and the browse API.
//!
//! A dataset root holds one directory per run, named `<scenarioStem>_<seed>`:
//!
//! ```text
//! run/
//!   manifest.json          written last, acts as the commit marker
//!   scene.json             the sampled scene
//!   frames/000000/
//!     rgb.ppm              binary PPM (P6)
//!     depth.f32            "SGDEPTH1", u32 width, u32 height, then f32 LE
//!     semseg.pgm           binary PGM (P5) of class ids
//!     lidar.bin            "SGLIDAR1", u32 count, u32 reserved, then
//!                          (f32 x, f32 y, f32 z, u8 class, u8 ring, u16 pad)
//!     boxes3d.json         oriented boxes, lidar frame
//!     boxes2d.json         image boxes of the recording camera
//!     states.json          agent states and the actions taken
//! ```
//!
//! Additional sensors append an index to the stem (`rgb_1.ppm`, ...). All
//! JSON is written with sorted keys and shortest-round-trip floats, and all
//! binary numbers are little-endian, so identical inputs produce
//! byte-identical trees.

use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::annotate::{intrinsics, project_box, Box2d, LidarToCam, Obb3d};
use crate::protocol::{WireAction, WireAgentState};
use crate::rng::fnv1a64;
use crate::scene::{Scene, SemanticClass};
use crate::sensor::{CameraConfig, CameraFrame, LidarConfig, LidarPoint, LidarSweep, Mount};

pub const FORMAT_VERSION: u32 = 1;
const DEPTH_MAGIC: &[u8; 8] = b"SGDEPTH1";
const LIDAR_MAGIC: &[u8; 8] = b"SGLIDAR1";

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("output directory {0} exists and is not empty")]
    NonEmptyDir(PathBuf),
    #[error("unsupported dataset format version {0}")]
    Version(u32),
    #[error("corrupt run {run}: {artifact}: {detail}")]
    CorruptRun {
        run: String,
        artifact: String,
        detail: String,
    },
}

/// Serialize with sorted keys and shortest-round-trip floats, one trailing
/// newline.
pub fn to_canonical_json<T: Serialize>(value: &T) -> Result<String, DatasetError> {
    let v = serde_json::to_value(value)?;
    let mut s = serde_json::to_string(&v)?;
    s.push('\n');
    Ok(s)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensorRig {
    pub cameras: Vec<CameraConfig>,
    pub lidars: Vec<LidarConfig>,
}

impl SensorRig {
    /// Mount of the recording lidar; co-located default when absent.
    pub fn lidar_mount(&self) -> Mount {
        self.lidars.first().map(|l| l.mount).unwrap_or_default()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ClassEntry {
    pub id: u8,
    pub name: String,
    pub color: [u8; 3],
}

/// The builtin class table, embedded in every manifest so readers never
/// depend on code constants.
pub fn class_table() -> Vec<ClassEntry> {
    SemanticClass::ALL
        .iter()
        .map(|c| ClassEntry {
            id: c.id(),
            name: c.name().to_string(),
            color: c.color(),
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RunManifest {
    pub format_version: u32,
    pub scenario_path: String,
    pub program_hash: u64,
    pub seed: u64,
    pub dt: f64,
    pub duration: f64,
    pub sensor_rig: SensorRig,
    pub frame_count: u32,
    pub class_table: Vec<ClassEntry>,
    /// Steps at which objects interpenetrated; the run records and continues.
    #[serde(default)]
    pub collision_steps: Vec<usize>,
}

/// Ground truth stored per frame in `states.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameStates {
    pub time: f64,
    pub agents: Vec<WireAgentState>,
    pub actions: Vec<WireAction>,
}

/// Everything one frame writes to disk.
#[derive(Debug, Clone)]
pub struct FrameData {
    pub cameras: Vec<CameraFrame>,
    pub sweeps: Vec<LidarSweep>,
    pub boxes3d: Vec<Obb3d>,
    pub boxes2d: Vec<Box2d>,
    pub states: FrameStates,
}

fn suffixed(stem: &str, ext: &str, index: usize) -> String {
    if index == 0 {
        format!("{stem}.{ext}")
    } else {
        format!("{stem}_{index}.{ext}")
    }
}

/// Streams frames into a run directory; the manifest commits the run at
/// [`RunWriter::finish`].
pub struct RunWriter {
    dir: PathBuf,
    frames: u32,
}

impl RunWriter {
    /// Fails with [`DatasetError::NonEmptyDir`] if the directory already has
    /// entries.
    pub fn create(dir: &Path) -> Result<Self, DatasetError> {
        if dir.exists() && fs::read_dir(dir)?.next().is_some() {
            return Err(DatasetError::NonEmptyDir(dir.to_path_buf()));
        }
        fs::create_dir_all(dir.join("frames"))?;
        Ok(RunWriter {
            dir: dir.to_path_buf(),
            frames: 0,
        })
    }

    pub fn write_scene(&self, scene: &Scene) -> Result<(), DatasetError> {
        fs::write(self.dir.join("scene.json"), to_canonical_json(scene)?)?;
        Ok(())
    }

    pub fn frames_written(&self) -> u32 {
        self.frames
    }

    pub fn write_frame(&mut self, frame: &FrameData) -> Result<(), DatasetError> {
        let fdir = self.dir.join("frames").join(format!("{:06}", self.frames));
        fs::create_dir_all(&fdir)?;
        for (i, cam) in frame.cameras.iter().enumerate() {
            write_ppm(&fdir.join(suffixed("rgb", "ppm", i)), cam.width, cam.height, &cam.rgb)?;
            write_depth(&fdir.join(suffixed("depth", "f32", i)), cam.width, cam.height, &cam.depth)?;
            write_pgm(&fdir.join(suffixed("semseg", "pgm", i)), cam.width, cam.height, &cam.semseg)?;
        }
        for (i, sweep) in frame.sweeps.iter().enumerate() {
            write_lidar(&fdir.join(suffixed("lidar", "bin", i)), sweep)?;
        }
        fs::write(fdir.join("boxes3d.json"), to_canonical_json(&frame.boxes3d)?)?;
        fs::write(fdir.join("boxes2d.json"), to_canonical_json(&frame.boxes2d)?)?;
        fs::write(fdir.join("states.json"), to_canonical_json(&frame.states)?)?;
        self.frames += 1;
        Ok(())
    }

    /// Write the manifest last; `manifest.frame_count` must match the frames
    /// actually written.
    pub fn finish(self, manifest: &RunManifest) -> Result<(), DatasetError> {
        assert_eq!(
            manifest.frame_count, self.frames,
            "manifest frame count must match written frames"
        );
        fs::write(self.dir.join("manifest.json"), to_canonical_json(manifest)?)?;
        Ok(())
    }
}

/// A dataset root; runs are listed in lexicographic order.
#[derive(Debug, Clone)]
pub struct Dataset {
    root: PathBuf,
    run_ids: Vec<String>,
}

pub fn open_dataset(path: &Path) -> Result<Dataset, DatasetError> {
    let mut run_ids = Vec::new();
    if path.exists() {
        for entry in fs::read_dir(path)? {
            let entry = entry?;
            if entry.path().is_dir() && entry.path().join("manifest.json").is_file() {
                run_ids.push(entry.file_name().to_string_lossy().into_owned());
            }
        }
    }
    run_ids.sort();
    Ok(Dataset {
        root: path.to_path_buf(),
        run_ids,
    })
}

impl Dataset {
    pub fn run_ids(&self) -> &[String] {
        &self.run_ids
    }

    pub fn open_run(&self, run_id: &str) -> Result<RunHandle, DatasetError> {
        RunHandle::open(self.root.join(run_id))
    }
}

#[derive(Debug, Clone)]
pub struct RunHandle {
    dir: PathBuf,
    run_id: String,
    manifest: RunManifest,
}

impl RunHandle {
    pub fn open(dir: PathBuf) -> Result<Self, DatasetError> {
        let run_id = dir
            .file_name()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        let text = fs::read_to_string(dir.join("manifest.json"))?;
        let manifest: RunManifest = serde_json::from_str(&text)?;
        if manifest.format_version != FORMAT_VERSION {
            return Err(DatasetError::Version(manifest.format_version));
        }
        Ok(RunHandle {
            dir,
            run_id,
            manifest,
        })
    }

    pub fn manifest(&self) -> &RunManifest {
        &self.manifest
    }

    pub fn run_id(&self) -> &str {
        &self.run_id
    }

    pub fn scene(&self) -> Result<Scene, DatasetError> {
        let text = fs::read_to_string(self.dir.join("scene.json"))?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn frame(&self, index: u32) -> Result<FrameRecord, DatasetError> {
        let dir = self.dir.join("frames").join(format!("{index:06}"));
        let record = FrameRecord {
            run_id: self.run_id.clone(),
            index,
            dir,
        };
        record.validate()?;
        Ok(record)
    }

    /// Lazily iterate the run's frames in order.
    pub fn frames(&self) -> impl Iterator<Item = Result<FrameRecord, DatasetError>> + '_ {
        (0..self.manifest.frame_count).map(|i| self.frame(i))
    }

    /// Project the stored 3-D boxes of one frame onto any camera. For the
    /// recording camera this reproduces the stored `boxes2d.json` exactly.
    pub fn reproject_boxes(
        &self,
        frame: &FrameRecord,
        camera: &CameraConfig,
    ) -> Result<Vec<Box2d>, DatasetError> {
        let boxes3d = frame.read_boxes3d()?;
        let k = intrinsics(camera);
        let l2c = LidarToCam::between(&self.manifest.sensor_rig.lidar_mount(), &camera.mount);
        Ok(boxes3d
            .iter()
            .filter_map(|b| project_box(b, &k, &l2c, (camera.width, camera.height)))
            .collect())
    }
}

/// One frame's artifact paths.
#[derive(Debug, Clone)]
pub struct FrameRecord {
    pub run_id: String,
    pub index: u32,
    pub dir: PathBuf,
}

impl FrameRecord {
    fn corrupt(&self, artifact: &str, detail: impl Into<String>) -> DatasetError {
        DatasetError::CorruptRun {
            run: self.run_id.clone(),
            artifact: artifact.to_string(),
            detail: detail.into(),
        }
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    /// All primary artifacts exist and the binary lengths are consistent.
    pub fn validate(&self) -> Result<(), DatasetError> {
        for artifact in [
            "rgb.ppm",
            "depth.f32",
            "semseg.pgm",
            "lidar.bin",
            "boxes3d.json",
            "boxes2d.json",
            "states.json",
        ] {
            if !self.path(artifact).is_file() {
                return Err(self.corrupt(artifact, "missing"));
            }
        }
        // Cheap structural check on the lidar payload length.
        let bytes = fs::read(self.path("lidar.bin"))?;
        if bytes.len() < 16 || &bytes[0..8] != LIDAR_MAGIC {
            return Err(self.corrupt("lidar.bin", "bad header"));
        }
        let count = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
        if bytes.len() != 16 + count * 16 {
            return Err(self.corrupt(
                "lidar.bin",
                format!("payload length {} does not match count {count}", bytes.len() - 16),
            ));
        }
        Ok(())
    }

    pub fn read_rgb(&self) -> Result<(u32, u32, Vec<u8>), DatasetError> {
        read_ppm(&self.path("rgb.ppm")).map_err(|e| self.wrap("rgb.ppm", e))
    }

    pub fn read_semseg(&self) -> Result<(u32, u32, Vec<u8>), DatasetError> {
        read_pgm(&self.path("semseg.pgm")).map_err(|e| self.wrap("semseg.pgm", e))
    }

    pub fn read_depth(&self) -> Result<(u32, u32, Vec<f32>), DatasetError> {
        read_depth(&self.path("depth.f32")).map_err(|e| self.wrap("depth.f32", e))
    }

    pub fn read_lidar(&self) -> Result<LidarSweep, DatasetError> {
        read_lidar(&self.path("lidar.bin")).map_err(|e| self.wrap("lidar.bin", e))
    }

    pub fn read_boxes3d(&self) -> Result<Vec<Obb3d>, DatasetError> {
        let text = fs::read_to_string(self.path("boxes3d.json"))?;
        serde_json::from_str(&text).map_err(|e| self.corrupt("boxes3d.json", e.to_string()))
    }

    pub fn read_boxes2d(&self) -> Result<Vec<Box2d>, DatasetError> {
        let text = fs::read_to_string(self.path("boxes2d.json"))?;
        serde_json::from_str(&text).map_err(|e| self.corrupt("boxes2d.json", e.to_string()))
    }

    pub fn read_states(&self) -> Result<FrameStates, DatasetError> {
        let text = fs::read_to_string(self.path("states.json"))?;
        serde_json::from_str(&text).map_err(|e| self.corrupt("states.json", e.to_string()))
    }

    fn wrap(&self, artifact: &str, e: DatasetError) -> DatasetError {
        match e {
            DatasetError::Io(io) => DatasetError::Io(io),
            other => self.corrupt(artifact, other.to_string()),
        }
    }
}

/// Write a colored point cloud as ASCII PLY using the run's class table.
pub fn export_pointcloud_ply(
    frame: &FrameRecord,
    class_table: &[ClassEntry],
    out: &Path,
) -> Result<(), DatasetError> {
    let sweep = frame.read_lidar()?;
    let mut text = String::new();
    text.push_str("ply\nformat ascii 1.0\n");
    text.push_str(&format!("element vertex {}\n", sweep.points.len()));
    text.push_str("property float x\nproperty float y\nproperty float z\n");
    text.push_str("property uchar red\nproperty uchar green\nproperty uchar blue\n");
    text.push_str("end_header\n");
    for p in &sweep.points {
        let color = class_table
            .iter()
            .find(|c| c.id == p.class_id)
            .map(|c| c.color)
            .unwrap_or([0, 0, 0]);
        text.push_str(&format!(
            "{} {} {} {} {} {}\n",
            p.x, p.y, p.z, color[0], color[1], color[2]
        ));
    }
    fs::write(out, text)?;
    Ok(())
}

// --- pixel and binary formats ---

pub fn write_ppm(path: &Path, width: u32, height: u32, rgb: &[u8]) -> Result<(), DatasetError> {
    debug_assert_eq!(rgb.len(), (width * height * 3) as usize);
    let mut f = fs::File::create(path)?;
    write!(f, "P6\n{width} {height}\n255\n")?;
    f.write_all(rgb)?;
    Ok(())
}

pub fn write_pgm(path: &Path, width: u32, height: u32, gray: &[u8]) -> Result<(), DatasetError> {
    debug_assert_eq!(gray.len(), (width * height) as usize);
    let mut f = fs::File::create(path)?;
    write!(f, "P5\n{width} {height}\n255\n")?;
    f.write_all(gray)?;
    Ok(())
}

/// Parse the canonical `magic\nW H\n255\n` header byte-wise (the payload
/// that follows is binary and must not be touched) and return the payload
/// offset.
fn parse_netpbm_header(bytes: &[u8], magic: &str) -> Result<(u32, u32, usize), DatasetError> {
    let header_err = || {
        DatasetError::Io(std::io::Error::new(
            std::io::ErrorKind::InvalidData,
            format!("bad {magic} header"),
        ))
    };
    let mut pos = 0usize;
    let token = |pos: &mut usize| -> Option<&[u8]> {
        let start = *pos;
        while *pos < bytes.len() && !bytes[*pos].is_ascii_whitespace() {
            *pos += 1;
        }
        if *pos >= bytes.len() || *pos == start {
            return None;
        }
        let tok = &bytes[start..*pos];
        *pos += 1; // exactly one whitespace byte separates header fields
        Some(tok)
    };
    if token(&mut pos) != Some(magic.as_bytes()) {
        return Err(header_err());
    }
    let parse_num = |tok: Option<&[u8]>| -> Option<u32> {
        std::str::from_utf8(tok?).ok()?.parse().ok()
    };
    let width = parse_num(token(&mut pos)).ok_or_else(header_err)?;
    let height = parse_num(token(&mut pos)).ok_or_else(header_err)?;
    let maxval = parse_num(token(&mut pos)).ok_or_else(header_err)?;
    if maxval != 255 {
        return Err(header_err());
    }
    Ok((width, height, pos))
}

pub fn read_ppm(path: &Path) -> Result<(u32, u32, Vec<u8>), DatasetError> {
    let bytes = fs::read(path)?;
    let (w, h, off) = parse_netpbm_header(&bytes, "P6")?;
    let expected = (w * h * 3) as usize;
    if bytes.len() != off + expected {
        return Err(DatasetError::Io(std::io::Error::new(
            std::io::ErrorKind::InvalidData,
            "ppm payload length mismatch",
        )));
    }
    Ok((w, h, bytes[off..].to_vec()))
}

pub fn read_pgm(path: &Path) -> Result<(u32, u32, Vec<u8>), DatasetError> {
    let bytes = fs::read(path)?;
    let (w, h, off) = parse_netpbm_header(&bytes, "P5")?;
    let expected = (w * h) as usize;
    if bytes.len() != off + expected {
        return Err(DatasetError::Io(std::io::Error::new(
            std::io::ErrorKind::InvalidData,
            "pgm payload length mismatch",
        )));
    }
    Ok((w, h, bytes[off..].to_vec()))
}

pub fn write_depth(path: &Path, width: u32, height: u32, depth: &[f32]) -> Result<(), DatasetError> {
    debug_assert_eq!(depth.len(), (width * height) as usize);
    let mut f = fs::File::create(path)?;
    f.write_all(DEPTH_MAGIC)?;
    f.write_all(&width.to_le_bytes())?;
    f.write_all(&height.to_le_bytes())?;
    let mut buf = Vec::with_capacity(depth.len() * 4);
    for d in depth {
        buf.extend_from_slice(&d.to_le_bytes());
    }
    f.write_all(&buf)?;
    Ok(())
}

pub fn read_depth(path: &Path) -> Result<(u32, u32, Vec<f32>), DatasetError> {
    let mut f = fs::File::open(path)?;
    let mut header = [0u8; 16];
    f.read_exact(&mut header)?;
    if &header[0..8] != DEPTH_MAGIC {
        return Err(DatasetError::Io(std::io::Error::new(
            std::io::ErrorKind::InvalidData,
            "bad depth magic",
        )));
    }
    let width = u32::from_le_bytes(header[8..12].try_into().unwrap());
    let height = u32::from_le_bytes(header[12..16].try_into().unwrap());
    let mut payload = Vec::new();
    f.read_to_end(&mut payload)?;
    if payload.len() != (width * height) as usize * 4 {
        return Err(DatasetError::Io(std::io::Error::new(
            std::io::ErrorKind::InvalidData,
            "depth payload length mismatch",
        )));
    }
    let depth = payload
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok((width, height, depth))
}

pub fn write_lidar(path: &Path, sweep: &LidarSweep) -> Result<(), DatasetError> {
    let mut f = fs::File::create(path)?;
    f.write_all(LIDAR_MAGIC)?;
    f.write_all(&(sweep.points.len() as u32).to_le_bytes())?;
    f.write_all(&0u32.to_le_bytes())?;
    let mut buf = Vec::with_capacity(sweep.points.len() * 16);
    for p in &sweep.points {
        buf.extend_from_slice(&p.x.to_le_bytes());
        buf.extend_from_slice(&p.y.to_le_bytes());
        buf.extend_from_slice(&p.z.to_le_bytes());
        buf.push(p.class_id);
        buf.push(p.ring);
        buf.extend_from_slice(&0u16.to_le_bytes());
    }
    f.write_all(&buf)?;
    Ok(())
}

pub fn read_lidar(path: &Path) -> Result<LidarSweep, DatasetError> {
    let bytes = fs::read(path)?;
    let invalid = |msg: &str| {
        DatasetError::Io(std::io::Error::new(std::io::ErrorKind::InvalidData, msg.to_string()))
    };
    if bytes.len() < 16 || &bytes[0..8] != LIDAR_MAGIC {
        return Err(invalid("bad lidar magic"));
    }
    let count = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    if bytes.len() != 16 + count * 16 {
        return Err(invalid("lidar payload length mismatch"));
    }
    let mut points = Vec::with_capacity(count);
    for rec in bytes[16..].chunks_exact(16) {
        points.push(LidarPoint {
            x: f32::from_le_bytes(rec[0..4].try_into().unwrap()),
            y: f32::from_le_bytes(rec[4..8].try_into().unwrap()),
            z: f32::from_le_bytes(rec[8..12].try_into().unwrap()),
            class_id: rec[12],
            ring: rec[13],
        });
    }
    Ok(LidarSweep { points })
}

/// Order-independent fingerprint of a directory tree: relative paths and
/// file bytes, visited in sorted order.
pub fn hash_tree(root: &Path) -> Result<u64, DatasetError> {
    fn walk(dir: &Path, root: &Path, acc: &mut Vec<(String, u64)>) -> Result<(), DatasetError> {
        let mut entries: Vec<PathBuf> = fs::read_dir(dir)?.map(|e| e.map(|e| e.path())).collect::<Result<_, _>>()?;
        entries.sort();
        for path in entries {
            if path.is_dir() {
                walk(&path, root, acc)?;
            } else {
                let rel = path.strip_prefix(root).unwrap().to_string_lossy().into_owned();
                let bytes = fs::read(&path)?;
                acc.push((rel, fnv1a64(&bytes)));
            }
        }
        Ok(())
    }
    let mut acc = Vec::new();
    walk(root, root, &mut acc)?;
    let mut blob = Vec::new();
    for (rel, h) in acc {
        blob.extend_from_slice(rel.as_bytes());
        blob.push(0);
        blob.extend_from_slice(&h.to_le_bytes());
    }
    Ok(fnv1a64(&blob))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_json_sorts_keys() {
        #[derive(Serialize)]
        struct Unsorted {
            zebra: u32,
            apple: u32,
            mango: f64,
        }
        let s = to_canonical_json(&Unsorted {
            zebra: 1,
            apple: 2,
            mango: 0.1,
        })
        .unwrap();
        assert_eq!(s, "{\"apple\":2,\"mango\":0.1,\"zebra\":1}\n");
    }

    #[test]
    fn canonical_json_is_shortest_round_trip() {
        let s = to_canonical_json(&vec![1.0f64 / 3.0, 0.1 + 0.2]).unwrap();
        assert_eq!(s, "[0.3333333333333333,0.30000000000000004]\n");
    }

    #[test]
    fn u64_hashes_survive_json() {
        let h = u64::MAX - 12345;
        let s = to_canonical_json(&h).unwrap();
        let back: u64 = serde_json::from_str(s.trim()).unwrap();
        assert_eq!(back, h);
    }

    #[test]
    fn depth_round_trip_preserves_infinity() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.f32");
        let depth = vec![1.5f32, f32::INFINITY, 0.25, 1e-20];
        write_depth(&path, 2, 2, &depth).unwrap();
        let (w, h, back) = read_depth(&path).unwrap();
        assert_eq!((w, h), (2, 2));
        assert_eq!(back[0], 1.5);
        assert!(back[1].is_infinite());
        assert_eq!(back.iter().map(|f| f.to_bits()).collect::<Vec<_>>(),
                   depth.iter().map(|f| f.to_bits()).collect::<Vec<_>>());
    }

    #[test]
    fn lidar_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("l.bin");
        let sweep = LidarSweep {
            points: vec![
                LidarPoint { x: 1.0, y: -2.0, z: 0.5, class_id: 2, ring: 0 },
                LidarPoint { x: 0.0, y: 0.25, z: -1.5, class_id: 4, ring: 31 },
            ],
        };
        write_lidar(&path, &sweep).unwrap();
        assert_eq!(read_lidar(&path).unwrap(), sweep);
        // Empty sweep is valid too.
        write_lidar(&path, &LidarSweep::default()).unwrap();
        assert!(read_lidar(&path).unwrap().points.is_empty());
    }

    #[test]
    fn truncated_lidar_is_detected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("l.bin");
        let sweep = LidarSweep {
            points: vec![LidarPoint { x: 1.0, y: 2.0, z: 3.0, class_id: 1, ring: 0 }],
        };
        write_lidar(&path, &sweep).unwrap();
        let mut bytes = fs::read(&path).unwrap();
        bytes.truncate(bytes.len() - 4);
        fs::write(&path, bytes).unwrap();
        assert!(read_lidar(&path).is_err());
    }

    #[test]
    fn ppm_and_pgm_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("img.ppm");
        let rgb: Vec<u8> = (0..2 * 3 * 3).map(|i| i as u8).collect();
        write_ppm(&p, 3, 2, &rgb).unwrap();
        assert_eq!(read_ppm(&p).unwrap(), (3, 2, rgb));

        let g = dir.path().join("img.pgm");
        let gray = vec![0u8, 1, 2, 3, 4, 5];
        write_pgm(&g, 3, 2, &gray).unwrap();
        assert_eq!(read_pgm(&g).unwrap(), (3, 2, gray));
    }

    #[test]
    fn ply_export_counts_and_colors() {
        let dir = tempfile::tempdir().unwrap();
        let run = dir.path().join("run");
        let mut writer = RunWriter::create(&run).unwrap();
        let sweep = LidarSweep {
            points: vec![
                LidarPoint { x: 1.0, y: 0.0, z: 0.0, class_id: 1, ring: 0 },
                LidarPoint { x: 2.0, y: 0.0, z: 0.0, class_id: 1, ring: 1 },
            ],
        };
        writer
            .write_frame(&FrameData {
                cameras: vec![CameraFrame {
                    width: 1,
                    height: 1,
                    rgb: vec![0, 0, 0],
                    depth: vec![f32::INFINITY],
                    semseg: vec![0],
                }],
                sweeps: vec![sweep],
                boxes3d: vec![],
                boxes2d: vec![],
                states: FrameStates {
                    time: 0.0,
                    agents: vec![],
                    actions: vec![],
                },
            })
            .unwrap();
        let frame = FrameRecord {
            run_id: "run".into(),
            index: 0,
            dir: run.join("frames/000000"),
        };
        let out = dir.path().join("cloud.ply");
        export_pointcloud_ply(&frame, &class_table(), &out).unwrap();
        let text = fs::read_to_string(&out).unwrap();
        assert!(text.contains("element vertex 2"));
        // Ground points take the ground palette entry.
        assert!(text.contains("1 0 0 80 120 80"));
    }

    #[test]
    fn nonempty_dir_is_refused() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("stale"), b"x").unwrap();
        assert!(matches!(
            RunWriter::create(dir.path()),
            Err(DatasetError::NonEmptyDir(_))
        ));
    }

    #[test]
    fn tree_hash_differs_on_content_change() {
        let dir = tempfile::tempdir().unwrap();
        fs::create_dir(dir.path().join("a")).unwrap();
        fs::write(dir.path().join("a/f"), b"one").unwrap();
        let h1 = hash_tree(dir.path()).unwrap();
        fs::write(dir.path().join("a/f"), b"two").unwrap();
        let h2 = hash_tree(dir.path()).unwrap();
        assert_ne!(h1, h2);
        fs::write(dir.path().join("a/f"), b"one").unwrap();
        assert_eq!(hash_tree(dir.path()).unwrap(), h1);
    }
}
