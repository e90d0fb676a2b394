//! Sampled scenes: concrete object placements plus the world they live in.

use serde::{Deserialize, Serialize};

use crate::geom::{rect_corners, rects_intersect, Vec2};
use crate::world::WorldModel;

/// Stable semantic label ids; the numeric values are part of the dataset
/// format and must never be reordered.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SemanticClass {
    None = 0,
    Ground = 1,
    Road = 2,
    Building = 3,
    Vehicle = 4,
    Pedestrian = 5,
}

impl SemanticClass {
    pub const ALL: [SemanticClass; 6] = [
        SemanticClass::None,
        SemanticClass::Ground,
        SemanticClass::Road,
        SemanticClass::Building,
        SemanticClass::Vehicle,
        SemanticClass::Pedestrian,
    ];

    pub fn id(self) -> u8 {
        self as u8
    }

    pub fn from_id(id: u8) -> Option<SemanticClass> {
        Self::ALL.get(id as usize).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            SemanticClass::None => "none",
            SemanticClass::Ground => "ground",
            SemanticClass::Road => "road",
            SemanticClass::Building => "building",
            SemanticClass::Vehicle => "vehicle",
            SemanticClass::Pedestrian => "pedestrian",
        }
    }

    pub fn from_name(name: &str) -> Option<SemanticClass> {
        Self::ALL.iter().copied().find(|c| c.name() == name)
    }

    /// Fixed render/visualization palette.
    pub fn color(self) -> [u8; 3] {
        match self {
            SemanticClass::None => [135, 206, 235],
            SemanticClass::Ground => [80, 120, 80],
            SemanticClass::Road => [70, 70, 70],
            SemanticClass::Building => [150, 150, 150],
            SemanticClass::Vehicle => [0, 0, 200],
            SemanticClass::Pedestrian => [200, 0, 0],
        }
    }
}

/// Object classes constructible from a scenario program.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ObjectClass {
    Car,
    Pedestrian,
    Building,
    Prop,
}

impl ObjectClass {
    pub fn from_name(name: &str) -> Option<ObjectClass> {
        match name {
            "Car" => Some(ObjectClass::Car),
            "Pedestrian" => Some(ObjectClass::Pedestrian),
            "Building" => Some(ObjectClass::Building),
            "Prop" => Some(ObjectClass::Prop),
            _ => None,
        }
    }

    pub fn semantic_class(self) -> SemanticClass {
        match self {
            ObjectClass::Car => SemanticClass::Vehicle,
            ObjectClass::Pedestrian => SemanticClass::Pedestrian,
            ObjectClass::Building | ObjectClass::Prop => SemanticClass::Building,
        }
    }

    /// Default length, width, height in meters.
    pub fn default_dims(self) -> Dims {
        match self {
            ObjectClass::Car => Dims::new(4.6, 2.0, 1.5),
            ObjectClass::Pedestrian => Dims::new(0.5, 0.5, 1.8),
            ObjectClass::Building => Dims::new(10.0, 10.0, 8.0),
            ObjectClass::Prop => Dims::new(1.0, 1.0, 1.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Dims {
    pub length: f64,
    pub width: f64,
    pub height: f64,
}

impl Dims {
    pub const fn new(length: f64, width: f64, height: f64) -> Self {
        Dims {
            length,
            width,
            height,
        }
    }
}

/// A runtime argument bound when a behavior is attached to an object.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundValue {
    Scalar(f64),
    Bool(bool),
    Point([f64; 2]),
    Object(u32),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BehaviorBinding {
    pub name: String,
    pub args: Vec<BoundValue>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SceneObject {
    pub id: u32,
    pub class: SemanticClass,
    pub x: f64,
    pub y: f64,
    /// Bottom face height; objects rest on the ground plane.
    pub z: f64,
    /// Radians in `(-pi, pi]`.
    pub heading: f64,
    pub dims: Dims,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub behavior: Option<BehaviorBinding>,
    pub is_ego: bool,
    #[serde(default)]
    pub allow_collisions: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub color: Option<f64>,
}

impl SceneObject {
    pub fn position(&self) -> Vec2 {
        Vec2::new(self.x, self.y)
    }

    /// Vertical center of the body, bottom face at `z`.
    pub fn center_z(&self) -> f64 {
        self.z + self.dims.height / 2.0
    }

    pub fn footprint(&self) -> [Vec2; 4] {
        rect_corners(self.position(), self.dims.length, self.dims.width, self.heading)
    }
}

/// True iff the ground-plane oriented rectangles of the two objects
/// intersect (separating-axis test; touching counts).
pub fn footprints_overlap(a: &SceneObject, b: &SceneObject) -> bool {
    rects_intersect(&a.footprint(), &b.footprint())
}

/// One sampled static world: the accepted result of scene sampling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Scene {
    pub objects: Vec<SceneObject>,
    pub world: WorldModel,
    pub seed: u64,
    pub program_hash: u64,
}

impl Scene {
    pub fn ego(&self) -> &SceneObject {
        self.objects
            .iter()
            .find(|o| o.is_ego)
            .expect("scene invariant: exactly one ego")
    }

    pub fn object(&self, id: u32) -> Option<&SceneObject> {
        self.objects.iter().find(|o| o.id == id)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn class_ids_are_stable() {
        for (i, c) in SemanticClass::ALL.iter().enumerate() {
            assert_eq!(c.id() as usize, i);
            assert_eq!(SemanticClass::from_id(c.id()), Some(*c));
            assert_eq!(SemanticClass::from_name(c.name()), Some(*c));
        }
        assert_eq!(SemanticClass::from_id(6), None);
    }

    #[test]
    fn overlap_uses_oriented_footprints() {
        let mk = |x: f64, heading: f64| SceneObject {
            id: 1,
            class: SemanticClass::Vehicle,
            x,
            y: 0.0,
            z: 0.0,
            heading,
            dims: Dims::new(4.0, 2.0, 1.5),
            behavior: None,
            is_ego: false,
            allow_collisions: false,
            color: None,
        };
        assert!(footprints_overlap(&mk(0.0, 0.0), &mk(0.0, 0.0)));
        assert!(!footprints_overlap(&mk(0.0, 0.0), &mk(10.0, 0.0)));
    }
}
