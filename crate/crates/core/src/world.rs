//! Static world geometry: named lanes over a flat ground plane, plus fixed
//! props copied into every sampled scene.
//!
//! World files are JSON:
//!
//! ```json
//! {
//!   "lanes": [{"name": "main", "centerline": [[0, -40], [0, 160]], "width": 3.5}],
//!   "ground": "ground",
//!   "props": [{"class": "building", "x": -12, "y": 60, "heading": 0, "dims": [10, 8, 9]}]
//! }
//! ```
//!
//! Lengths are meters, headings radians.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::{Polyline, Vec2};
use crate::scene::{Dims, SceneObject, SemanticClass};

#[derive(Debug, Error)]
pub enum WorldError {
    #[error("failed to read world file: {0}")]
    Io(#[from] std::io::Error),
    #[error("invalid world json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("invalid world: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lane {
    pub name: String,
    /// At least two points.
    pub centerline: Vec<[f64; 2]>,
    pub width: f64,
}

impl Lane {
    pub fn polyline(&self) -> Polyline {
        Polyline::new(self.centerline.iter().map(|p| Vec2::new(p[0], p[1])).collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropSpec {
    pub class: String,
    pub x: f64,
    pub y: f64,
    #[serde(default)]
    pub heading: f64,
    /// Length, width, height.
    pub dims: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldModel {
    pub lanes: Vec<Lane>,
    /// Semantic class of bare ground outside every lane.
    #[serde(rename = "ground")]
    pub ground_class: SemanticClass,
    #[serde(default)]
    pub props: Vec<PropSpec>,
}

impl WorldModel {
    /// A minimal world: no lanes, no props, plain ground.
    pub fn flat_ground() -> Self {
        WorldModel {
            lanes: Vec::new(),
            ground_class: SemanticClass::Ground,
            props: Vec::new(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self, WorldError> {
        let world: WorldModel = serde_json::from_str(text)?;
        world.validate()?;
        Ok(world)
    }

    pub fn load(path: &Path) -> Result<Self, WorldError> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<(), WorldError> {
        let mut seen = std::collections::BTreeSet::new();
        for lane in &self.lanes {
            if !seen.insert(lane.name.as_str()) {
                return Err(WorldError::Invalid(format!("duplicate lane name: {}", lane.name)));
            }
            if lane.centerline.len() < 2 {
                return Err(WorldError::Invalid(format!(
                    "lane {} needs at least two centerline points",
                    lane.name
                )));
            }
            if !(lane.width > 0.0) {
                return Err(WorldError::Invalid(format!("lane {} width must be positive", lane.name)));
            }
        }
        for prop in &self.props {
            if SemanticClass::from_name(&prop.class).is_none() {
                return Err(WorldError::Invalid(format!("unknown prop class: {}", prop.class)));
            }
            if prop.dims.iter().any(|d| !(*d > 0.0)) {
                return Err(WorldError::Invalid("prop dims must be positive".into()));
            }
        }
        Ok(())
    }

    pub fn lane(&self, name: &str) -> Option<&Lane> {
        self.lanes.iter().find(|l| l.name == name)
    }

    /// Semantic class of the ground surface at a point: road inside any
    /// lane's lateral half-width, the world's ground class otherwise.
    pub fn ground_class_at(&self, p: Vec2) -> SemanticClass {
        for lane in &self.lanes {
            if lane.polyline().distance_to(p) <= lane.width / 2.0 {
                return SemanticClass::Road;
            }
        }
        self.ground_class
    }

    /// Props as scene objects, ids assigned from `first_id`.
    pub fn prop_objects(&self, first_id: u32) -> Vec<SceneObject> {
        self.props
            .iter()
            .enumerate()
            .map(|(k, p)| SceneObject {
                id: first_id + k as u32,
                class: SemanticClass::from_name(&p.class).expect("validated prop class"),
                x: p.x,
                y: p.y,
                z: 0.0,
                heading: crate::geom::normalize_angle(p.heading),
                dims: Dims::new(p.dims[0], p.dims[1], p.dims[2]),
                behavior: None,
                is_ego: false,
                allow_collisions: false,
                color: None,
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const WORLD: &str = r#"{
        "lanes": [{"name": "main", "centerline": [[0, -10], [0, 50]], "width": 3.5}],
        "ground": "ground",
        "props": [{"class": "building", "x": 10, "y": 10, "heading": 0, "dims": [5, 5, 5]}]
    }"#;

    #[test]
    fn parses_and_classifies_ground() {
        let w = WorldModel::from_json(WORLD).unwrap();
        assert_eq!(w.ground_class_at(Vec2::new(0.0, 0.0)), SemanticClass::Road);
        assert_eq!(w.ground_class_at(Vec2::new(1.74, 0.0)), SemanticClass::Road);
        assert_eq!(w.ground_class_at(Vec2::new(5.0, 0.0)), SemanticClass::Ground);
    }

    #[test]
    fn rejects_duplicate_lane_names() {
        let bad = r#"{
            "lanes": [
                {"name": "a", "centerline": [[0,0],[1,1]], "width": 1},
                {"name": "a", "centerline": [[0,0],[1,1]], "width": 1}
            ],
            "ground": "ground"
        }"#;
        assert!(matches!(WorldModel::from_json(bad), Err(WorldError::Invalid(_))));
    }

    #[test]
    fn rejects_short_centerline() {
        let bad = r#"{"lanes": [{"name": "a", "centerline": [[0,0]], "width": 1}], "ground": "ground"}"#;
        assert!(WorldModel::from_json(bad).is_err());
    }
}
