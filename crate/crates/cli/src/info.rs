//! Dataset summary report.

use std::collections::BTreeMap;
use std::fmt::Write;
use std::path::Path;

use scenegen_core::dataset::open_dataset;

use crate::CliError;

/// Text report: run list, then per-class lidar point and box counts summed
/// over every frame of every run.
pub fn cmd_info(dataset_path: &Path) -> Result<String, CliError> {
    let dataset = open_dataset(dataset_path)?;
    let mut out = String::new();
    writeln!(out, "runs={}", dataset.run_ids().len()).unwrap();

    let mut points: BTreeMap<String, u64> = BTreeMap::new();
    let mut boxes2d: BTreeMap<String, u64> = BTreeMap::new();
    let mut boxes3d: BTreeMap<String, u64> = BTreeMap::new();
    let mut total_frames = 0u64;

    for run_id in dataset.run_ids() {
        let run = dataset.open_run(run_id)?;
        let manifest = run.manifest();
        writeln!(
            out,
            "run {run_id}: frames={} seed={} collisions={}",
            manifest.frame_count,
            manifest.seed,
            manifest.collision_steps.len()
        )
        .unwrap();
        total_frames += manifest.frame_count as u64;

        let class_name = |id: u8| {
            manifest
                .class_table
                .iter()
                .find(|c| c.id == id)
                .map(|c| c.name.clone())
                .unwrap_or_else(|| format!("class{id}"))
        };
        for frame in run.frames() {
            let frame = frame?;
            for p in frame.read_lidar()?.points {
                *points.entry(class_name(p.class_id)).or_default() += 1;
            }
            for b in frame.read_boxes2d()? {
                *boxes2d.entry(class_name(b.class_id)).or_default() += 1;
            }
            for b in frame.read_boxes3d()? {
                *boxes3d.entry(class_name(b.class_id)).or_default() += 1;
            }
        }
    }

    let mut classes: Vec<String> = points
        .keys()
        .chain(boxes2d.keys())
        .chain(boxes3d.keys())
        .cloned()
        .collect();
    classes.sort();
    classes.dedup();
    for class in classes {
        writeln!(
            out,
            "class {class}: points={} boxes2d={} boxes3d={}",
            points.get(&class).copied().unwrap_or(0),
            boxes2d.get(&class).copied().unwrap_or(0),
            boxes3d.get(&class).copied().unwrap_or(0)
        )
        .unwrap();
    }
    writeln!(out, "frames={total_frames}").unwrap();
    Ok(out)
}
