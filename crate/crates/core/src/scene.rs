//! JSON scene descriptions.
//!
//! Every node is `{"op": <name>, "args": {...}}`:
//!
//! ```json
//! {"op": "union", "args": {"children": [
//!     {"op": "sphere", "args": {"center": [0, 0, 0], "radius": 0.5}},
//!     {"op": "torus", "args": {"major": 0.6, "minor": 0.1}}
//! ]}}
//! ```
//!
//! Grid and mesh leaves name a file; relative paths resolve against the
//! scene file's directory.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use nalgebra::{Rotation3, Unit};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{FieldExpr, GridField, MeshField, TriMesh};
use crate::geometry::Vec3;

fn zero() -> [f64; 3] {
    [0.0; 3]
}

fn z_axis() -> [f64; 3] {
    [0.0, 0.0, 1.0]
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", content = "args", rename_all = "snake_case", deny_unknown_fields)]
pub enum SceneNode {
    Sphere {
        #[serde(default = "zero")]
        center: [f64; 3],
        radius: f64,
    },
    Box {
        #[serde(default = "zero")]
        center: [f64; 3],
        half_extents: [f64; 3],
    },
    Torus {
        #[serde(default = "zero")]
        center: [f64; 3],
        major: f64,
        minor: f64,
    },
    Plane {
        normal: [f64; 3],
        #[serde(default)]
        offset: f64,
    },
    Constant {
        value: f64,
    },
    Union {
        children: Vec<SceneNode>,
    },
    Intersection {
        children: Vec<SceneNode>,
    },
    Complement {
        child: Box<SceneNode>,
    },
    Offset {
        child: Box<SceneNode>,
        delta: f64,
    },
    Abs {
        child: Box<SceneNode>,
    },
    Transform {
        child: Box<SceneNode>,
        #[serde(default = "z_axis")]
        axis: [f64; 3],
        /// Radians.
        #[serde(default)]
        angle: f64,
        #[serde(default = "zero")]
        translation: [f64; 3],
        #[serde(default = "one")]
        scale: f64,
    },
    Grid {
        path: PathBuf,
    },
    Mesh {
        path: PathBuf,
        /// Treat the mesh as an unsigned surface even if it is closed.
        #[serde(default)]
        unsigned: bool,
    },
}

fn v(a: [f64; 3]) -> Vec3 {
    Vec3::from(a)
}

fn positive(x: f64, what: &str) -> Result<f64> {
    if x > 0.0 && x.is_finite() { Ok(x) } else { Err(Error::Scene(format!("{what} must be positive, got {x}"))) }
}

impl SceneNode {
    pub fn parse(json: &str) -> Result<Self> {
        serde_json::from_str(json).map_err(|e| Error::Scene(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<(Self, PathBuf)> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let node = Self::parse(&text).map_err(|e| match e {
            Error::Scene(m) => Error::parse(path, m),
            other => other,
        })?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok((node, base))
    }

    /// Build the field expression, loading file leaves relative to `base`.
    pub fn build(&self, base: &Path) -> Result<FieldExpr> {
        let many = |cs: &[SceneNode]| -> Result<Vec<FieldExpr>> {
            if cs.is_empty() {
                return Err(Error::Scene("combinator needs at least one child".into()));
            }
            cs.iter().map(|c| c.build(base)).collect()
        };
        Ok(match self {
            SceneNode::Sphere { center, radius } => FieldExpr::sphere(v(*center), positive(*radius, "radius")?),
            SceneNode::Box { center, half_extents } => {
                for h in half_extents {
                    positive(*h, "half extent")?;
                }
                FieldExpr::cuboid(v(*center), v(*half_extents))
            }
            SceneNode::Torus { center, major, minor } => {
                FieldExpr::torus(v(*center), positive(*major, "major radius")?, positive(*minor, "minor radius")?)
            }
            SceneNode::Plane { normal, offset } => {
                positive(v(*normal).norm(), "normal length")?;
                FieldExpr::plane(v(*normal), *offset)
            }
            SceneNode::Constant { value } => FieldExpr::Constant(*value),
            SceneNode::Union { children } => FieldExpr::union(many(children)?),
            SceneNode::Intersection { children } => FieldExpr::intersection(many(children)?),
            SceneNode::Complement { child } => child.build(base)?.complement(),
            SceneNode::Offset { child, delta } => child.build(base)?.offset(*delta),
            SceneNode::Abs { child } => child.build(base)?.absolute(),
            SceneNode::Transform { child, axis, angle, translation, scale } => {
                positive(v(*axis).norm(), "rotation axis length")?;
                let rotation = Rotation3::from_axis_angle(&Unit::new_normalize(v(*axis)), *angle);
                child.build(base)?.transformed(rotation, v(*translation), positive(*scale, "scale")?)
            }
            SceneNode::Grid { path } => FieldExpr::Grid(Arc::new(GridField::load(base.join(path))?)),
            SceneNode::Mesh { path, unsigned } => {
                let mesh = MeshField::new(TriMesh::load(base.join(path))?)?;
                FieldExpr::Mesh(Arc::new(if *unsigned { mesh.unsigned() } else { mesh }))
            }
        })
    }
}
