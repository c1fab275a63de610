//! Scenario configuration: a versioned JSON schema describing the system,
//! forces, integrator and output cadence.

use crate::body::{MassDistribution, SpatialInertia};
use crate::multibody::{Joint, JointPosition, MultibodyTree, RotationParameterization, TreeBody};
use crate::rotation::{Quaternion, UnitQuaternion};
use crate::spatial::{Mat3, MotionTransform, RotationMatrix, Vec3, Vec6};
use nalgebra::DVector;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("config error: {0}")]
    Config(String),
    #[error("numerical failure at t = {time}: {message}")]
    Numerical { time: f64, message: String },
    #[error("state became non-finite; last good time t = {time}")]
    NonFinite { time: f64 },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl From<serde_json::Error> for SimError {
    fn from(e: serde_json::Error) -> Self {
        SimError::Config(e.to_string())
    }
}

/// Top-level config file: either one scenario or a list to run in batch.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ScenarioFile {
    Single(Scenario),
    List(ScenarioList),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioList {
    pub schema: u32,
    pub scenarios: Vec<Scenario>,
}

impl ScenarioFile {
    pub fn parse(text: &str) -> Result<ScenarioFile, SimError> {
        // parse single-scenario form directly for precise error messages,
        // falling back to the list form
        let as_value: serde_json::Value = serde_json::from_str(text)?;
        let parsed = if as_value.get("scenarios").is_some() {
            ScenarioFile::List(serde_json::from_value(as_value)?)
        } else {
            ScenarioFile::Single(serde_json::from_value(as_value)?)
        };
        match &parsed {
            ScenarioFile::Single(s) => s.validate()?,
            ScenarioFile::List(l) => {
                if l.schema != 1 {
                    return Err(SimError::Config(format!(
                        "unsupported schema version {}",
                        l.schema
                    )));
                }
                for s in &l.scenarios {
                    s.validate()?;
                }
            }
        }
        Ok(parsed)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub schema: u32,
    #[serde(default = "default_name")]
    pub name: String,
    pub system: SystemSpec,
    #[serde(default)]
    pub forces: ForceSpec,
    #[serde(default)]
    pub integrator: IntegratorKind,
    pub step: f64,
    pub duration: f64,
    #[serde(default = "default_output_every")]
    pub output_every: usize,
    #[serde(default)]
    pub rotation_param: RotationParamSpec,
    #[serde(default = "default_true")]
    pub renormalize_quaternions: bool,
    #[serde(default)]
    pub project_constraints: bool,
}

fn default_name() -> String {
    "scenario".into()
}

fn default_output_every() -> usize {
    1
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum IntegratorKind {
    #[default]
    Rk4,
    Euler,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum RotationParamSpec {
    #[default]
    Quaternion,
    Euler,
    Fedorov,
}

impl From<RotationParamSpec> for RotationParameterization {
    fn from(s: RotationParamSpec) -> Self {
        match s {
            RotationParamSpec::Quaternion => RotationParameterization::Quaternion,
            RotationParamSpec::Euler => RotationParameterization::Euler,
            RotationParamSpec::Fedorov => RotationParameterization::Fedorov,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum SystemSpec {
    MassPoints { points: Vec<PointSpec> },
    RigidBody(Box<RigidBodySpec>),
    Multibody { bodies: Vec<BodySpec> },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointSpec {
    pub mass: f64,
    pub position: [f64; 3],
    pub velocity: [f64; 3],
    #[serde(default)]
    pub constraint: Option<ConstraintSpec>,
    #[serde(default)]
    pub label: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ConstraintSpec {
    Circle { radius: f64 },
    Sphere { radius: f64 },
    Plane { origin: [f64; 3], u: [f64; 3], v: [f64; 3] },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RigidBodySpec {
    pub inertia: InertiaSpec,
    pub pose: PoseSpec,
    pub twist: [f64; 6],
    #[serde(default)]
    pub label: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InertiaSpec {
    /// `(mass, body-frame position)` atoms.
    Points(Vec<(f64, [f64; 3])>),
    /// Full 6×6 matrix, row-major.
    Matrix(Vec<f64>),
}

impl InertiaSpec {
    pub fn build(&self) -> Result<SpatialInertia, SimError> {
        match self {
            InertiaSpec::Points(pts) => {
                let dist = MassDistribution::from_points(
                    pts.iter().map(|(m, p)| (*m, vec3(*p))).collect(),
                );
                SpatialInertia::assemble(&dist)
                    .map_err(|e| SimError::Config(format!("inertia: {e}")))
            }
            InertiaSpec::Matrix(vals) => {
                if vals.len() != 36 {
                    return Err(SimError::Config(format!(
                        "inertia matrix needs 36 entries, got {}",
                        vals.len()
                    )));
                }
                let m = nalgebra::Matrix6::from_row_slice(vals);
                SpatialInertia::from_matrix(m)
                    .map_err(|e| SimError::Config(format!("inertia: {e}")))
            }
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoseSpec {
    /// Scalar-first unit quaternion `(w, x, y, z)`.
    pub quaternion: [f64; 4],
    pub displacement: [f64; 3],
}

impl PoseSpec {
    pub fn build(&self) -> Result<(UnitQuaternion, Vec3), SimError> {
        let q = Quaternion::new(
            self.quaternion[0],
            Vec3::new(self.quaternion[1], self.quaternion[2], self.quaternion[3]),
        );
        let uq = UnitQuaternion::new(q)
            .map_err(|e| SimError::Config(format!("pose.quaternion: {e}")))?;
        Ok((uq, vec3(self.displacement)))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BodySpec {
    pub label: String,
    pub parent: Option<usize>,
    pub joint: JointSpec,
    pub inertia: InertiaSpec,
    /// Scalar joint coordinate (revolute angle / prismatic displacement).
    #[serde(default)]
    pub q: Option<f64>,
    #[serde(default)]
    pub qdot: Option<f64>,
    /// Free-joint state.
    #[serde(default)]
    pub pose: Option<PoseSpec>,
    #[serde(default)]
    pub twist: Option<[f64; 6]>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum JointSpec {
    Revolute {
        axis: [f64; 3],
        #[serde(default)]
        offset: OffsetSpec,
    },
    Prismatic {
        axis: [f64; 3],
        #[serde(default)]
        offset: OffsetSpec,
    },
    Free6 {
        #[serde(default)]
        offset: OffsetSpec,
    },
    Fixed {
        #[serde(default)]
        offset: OffsetSpec,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct OffsetSpec {
    /// Axis-angle rotation of the joint frame in the parent frame.
    #[serde(default)]
    pub rotation: Option<AxisAngleSpec>,
    #[serde(default)]
    pub displacement: [f64; 3],
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisAngleSpec {
    pub axis: [f64; 3],
    pub angle: f64,
}

impl OffsetSpec {
    pub fn build(&self) -> Result<MotionTransform, SimError> {
        let rot = match &self.rotation {
            None => RotationMatrix::identity(),
            Some(aa) => {
                let axis = vec3(aa.axis);
                if axis.norm() < 1e-12 {
                    return Err(SimError::Config("offset.rotation.axis is zero".into()));
                }
                crate::rotation::rot_axis_angle(&axis, aa.angle)
            }
        };
        Ok(MotionTransform::new(rot, vec3(self.displacement)))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct ForceSpec {
    /// Uniform gravity field (world frame).
    #[serde(default)]
    pub uniform_gravity: Option<[f64; 3]>,
    /// Pairwise gravitational constant for mass-point systems.
    #[serde(default)]
    pub newtonian_gamma: Option<f64>,
    /// Constant per-body wrenches in body frames (multibody systems).
    #[serde(default)]
    pub applied_wrenches: Option<Vec<[f64; 6]>>,
}

impl Scenario {
    pub fn validate(&self) -> Result<(), SimError> {
        if self.schema != 1 {
            return Err(SimError::Config(format!(
                "unsupported schema version {}",
                self.schema
            )));
        }
        if !self.step.is_finite() || self.step <= 0.0 {
            return Err(SimError::Config("step must be positive".into()));
        }
        if self.duration < self.step {
            return Err(SimError::Config("duration must be at least one step".into()));
        }
        if self.output_every == 0 {
            return Err(SimError::Config("output_every must be at least 1".into()));
        }
        for c in self.name.chars() {
            if !(c.is_ascii_alphanumeric() || c == '_' || c == '-') {
                return Err(SimError::Config(format!(
                    "scenario name must be [A-Za-z0-9_-], got {:?}",
                    self.name
                )));
            }
        }
        match &self.system {
            SystemSpec::MassPoints { points } => {
                if points.is_empty() {
                    return Err(SimError::Config("mass_points: empty point list".into()));
                }
                for (i, p) in points.iter().enumerate() {
                    if !p.mass.is_finite() || p.mass <= 0.0 {
                        return Err(SimError::Config(format!("point {i}: mass must be > 0")));
                    }
                }
            }
            SystemSpec::RigidBody(spec) => {
                spec.inertia.build()?;
                spec.pose.build()?;
            }
            SystemSpec::Multibody { bodies } => {
                if bodies.is_empty() {
                    return Err(SimError::Config("multibody: empty body list".into()));
                }
                if let Some(wr) = &self.forces.applied_wrenches {
                    if wr.len() != bodies.len() {
                        return Err(SimError::Config(format!(
                            "applied_wrenches has {} entries for {} bodies",
                            wr.len(),
                            bodies.len()
                        )));
                    }
                }
                self.build_tree()?;
            }
        }
        Ok(())
    }

    /// Builds the runtime tree plus its initial state for multibody and
    /// rigid-body systems.
    pub fn build_tree(
        &self,
    ) -> Result<(MultibodyTree, Vec<JointPosition>, DVector<f64>), SimError> {
        let specs: Vec<BodySpec> = match &self.system {
            SystemSpec::Multibody { bodies } => bodies.clone(),
            SystemSpec::RigidBody(spec) => vec![BodySpec {
                label: spec.label.clone().unwrap_or_else(|| "body".into()),
                parent: None,
                joint: JointSpec::Free6 {
                    offset: OffsetSpec::default(),
                },
                inertia: spec.inertia.clone(),
                q: None,
                qdot: None,
                pose: Some(spec.pose.clone()),
                twist: Some(spec.twist),
            }],
            SystemSpec::MassPoints { .. } => {
                return Err(SimError::Config(
                    "mass-point system has no body tree".into(),
                ))
            }
        };

        let mut bodies = Vec::with_capacity(specs.len());
        let mut q = Vec::with_capacity(specs.len());
        let mut u: Vec<f64> = Vec::new();
        for (i, spec) in specs.iter().enumerate() {
            let (joint, pos, vel): (Joint, JointPosition, Vec<f64>) = match &spec.joint {
                JointSpec::Revolute { axis, offset } => {
                    let a = unit_axis(*axis, i)?;
                    (
                        Joint::revolute(a, offset.build()?),
                        JointPosition::Scalar(spec.q.unwrap_or(0.0)),
                        vec![spec.qdot.unwrap_or(0.0)],
                    )
                }
                JointSpec::Prismatic { axis, offset } => {
                    let a = unit_axis(*axis, i)?;
                    (
                        Joint::prismatic(a, offset.build()?),
                        JointPosition::Scalar(spec.q.unwrap_or(0.0)),
                        vec![spec.qdot.unwrap_or(0.0)],
                    )
                }
                JointSpec::Free6 { offset } => {
                    let (orientation, position) = match &spec.pose {
                        Some(p) => p.build()?,
                        None => (UnitQuaternion::identity(), Vec3::zeros()),
                    };
                    let twist = spec.twist.unwrap_or([0.0; 6]);
                    (
                        Joint::free6(offset.build()?),
                        JointPosition::Free {
                            orientation,
                            position,
                        },
                        twist.to_vec(),
                    )
                }
                JointSpec::Fixed { offset } => (
                    Joint::fixed(offset.build()?),
                    JointPosition::Scalar(0.0),
                    vec![],
                ),
            };
            bodies.push(TreeBody {
                inertia: spec.inertia.build()?,
                joint,
                parent: spec.parent,
                label: spec.label.clone(),
            });
            q.push(pos);
            u.extend(vel);
        }
        let tree = MultibodyTree::new(bodies).map_err(|e| SimError::Config(e.to_string()))?;
        Ok((tree, q, DVector::from_vec(u)))
    }

    pub fn gravity(&self) -> Vec3 {
        self.forces
            .uniform_gravity
            .map(vec3)
            .unwrap_or_else(Vec3::zeros)
    }

    pub fn applied_wrenches(&self, k: usize) -> Vec<Vec6> {
        match &self.forces.applied_wrenches {
            Some(list) => list
                .iter()
                .map(|w| Vec6::from_column_slice(w))
                .collect(),
            None => vec![Vec6::zeros(); k],
        }
    }
}

pub(crate) fn vec3(a: [f64; 3]) -> Vec3 {
    Vec3::new(a[0], a[1], a[2])
}

fn unit_axis(a: [f64; 3], body: usize) -> Result<Vec3, SimError> {
    let v = vec3(a);
    let n = v.norm();
    if (n - 1.0).abs() > 1e-6 {
        return Err(SimError::Config(format!(
            "body {body}: joint axis must be unit length (norm {n})"
        )));
    }
    Ok(v / n)
}

/// 3×3 matrix helper for CLI parsing.
pub fn mat3_from_rows(rows: &[f64]) -> Mat3 {
    Mat3::from_row_slice(rows)
}
