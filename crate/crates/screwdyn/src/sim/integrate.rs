//! Fixed-step integration of the coupled dynamic and kinematic equations.
//!
//! Trees integrate joint coordinates plus quasi-velocities; constrained
//! mass points integrate ambient position and velocity with the
//! constraint acceleration derived from the differentiated level set, so
//! constraint drift is observable and monitored rather than hidden.

use super::scenario::{vec3, ConstraintSpec, Scenario, SimError, SystemSpec};
use crate::multibody::{JointKind, JointPosition, MultibodyTree, RotationParameterization};
use crate::point::{gravity_forces, ConstraintManifold, LevelSet, MassPoint};
use crate::rotation::{EulerAngles, FedorovParam, Quaternion, UnitQuaternion};
use crate::spatial::{split6, Vec3, Vec6};
use nalgebra::{DMatrix, DVector};

/// One emitted sample: per-body pose (quaternion + displacement),
/// body-frame twist, and the energy split.
#[derive(Debug, Clone)]
pub struct TrajectoryRecord {
    pub time: f64,
    pub bodies: Vec<BodyRecord>,
    /// Max-norm of the holonomic constraint residuals at this sample.
    pub constraint_residual: f64,
}

#[derive(Debug, Clone)]
pub struct BodyRecord {
    pub label: String,
    /// Scalar-first `(w, x, y, z)`.
    pub quat: [f64; 4],
    pub displacement: Vec3,
    pub linear: Vec3,
    pub angular: Vec3,
    pub e_kin: f64,
    pub e_pot: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct Summary {
    pub records: usize,
    pub final_time: f64,
    pub energy_drift: f64,
    pub max_constraint_residual: f64,
}

#[derive(Debug)]
pub struct SimOutput {
    pub records: Vec<TrajectoryRecord>,
    pub summary: Summary,
}

/// Runs a scenario to completion with its fixed-step integrator.
pub fn integrate(scenario: &Scenario) -> Result<SimOutput, SimError> {
    match &scenario.system {
        SystemSpec::MassPoints { points } => {
            let engine = PointsEngine::new(scenario)?;
            drive(scenario, engine, points.len())
        }
        _ => {
            let engine = TreeEngine::new(scenario)?;
            let k = engine.tree.len();
            drive(scenario, engine, k)
        }
    }
}

trait Engine {
    fn state(&self) -> DVector<f64>;
    fn derivative(&self, t: f64, s: &DVector<f64>) -> Result<DVector<f64>, SimError>;
    fn post_step(&self, s: &mut DVector<f64>);
    fn record(&self, t: f64, s: &DVector<f64>) -> TrajectoryRecord;
}

fn drive<E: Engine>(scenario: &Scenario, engine: E, _k: usize) -> Result<SimOutput, SimError> {
    let h = scenario.step;
    let steps = (scenario.duration / h).round().max(1.0) as usize;
    let mut state = engine.state();
    let mut records = Vec::new();
    let first = engine.record(0.0, &state);
    let e0: f64 = first.bodies.iter().map(|b| b.e_kin + b.e_pot).sum();
    let mut energy_drift = 0.0f64;
    let mut max_residual = first.constraint_residual;
    records.push(first);

    let rk4 = matches!(scenario.integrator, super::scenario::IntegratorKind::Rk4);
    for step in 1..=steps {
        let t = (step - 1) as f64 * h;
        if rk4 {
            let k1 = engine.derivative(t, &state)?;
            let k2 = engine.derivative(t + 0.5 * h, &(&state + 0.5 * h * &k1))?;
            let k3 = engine.derivative(t + 0.5 * h, &(&state + 0.5 * h * &k2))?;
            let k4 = engine.derivative(t + h, &(&state + h * &k3))?;
            state += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        } else {
            let k1 = engine.derivative(t, &state)?;
            state += h * k1;
        }
        engine.post_step(&mut state);
        if state.iter().any(|x| !x.is_finite()) {
            return Err(SimError::NonFinite { time: t });
        }
        let now = step as f64 * h;
        if step % scenario.output_every == 0 || step == steps {
            let rec = engine.record(now, &state);
            let e: f64 = rec.bodies.iter().map(|b| b.e_kin + b.e_pot).sum();
            energy_drift = energy_drift.max((e - e0).abs());
            max_residual = max_residual.max(rec.constraint_residual);
            records.push(rec);
        }
    }
    let summary = Summary {
        records: records.len(),
        final_time: steps as f64 * h,
        energy_drift,
        max_constraint_residual: max_residual,
    };
    Ok(SimOutput { records, summary })
}

// ---------------------------------------------------------------- trees

struct TreeEngine {
    tree: MultibodyTree,
    param: RotationParameterization,
    gravity: Vec3,
    applied: Vec<Vec6>,
    renormalize: bool,
    /// per-joint (position-slot offset, position-slot width)
    layout: Vec<(usize, usize)>,
    pos_len: usize,
    initial: DVector<f64>,
}

impl TreeEngine {
    fn new(scenario: &Scenario) -> Result<TreeEngine, SimError> {
        let (tree, q0, u0) = scenario.build_tree()?;
        let param: RotationParameterization = scenario.rotation_param.into();
        let mut layout = Vec::with_capacity(tree.len());
        let mut off = 0;
        for i in 0..tree.len() {
            let width = match tree.body(i).joint.kind {
                JointKind::Revolute(_) | JointKind::Prismatic(_) => 1,
                JointKind::Fixed => 0,
                JointKind::Free6 => match param {
                    RotationParameterization::Quaternion => 7,
                    _ => 6,
                },
            };
            layout.push((off, width));
            off += width;
        }
        let pos_len = off;
        let dof = tree.dof();
        let mut initial = DVector::zeros(pos_len + dof);
        for (i, pos) in q0.iter().enumerate() {
            let (o, w) = layout[i];
            match (pos, w) {
                (JointPosition::Scalar(v), 1) => initial[o] = *v,
                (JointPosition::Scalar(_), 0) => {}
                (
                    JointPosition::Free {
                        orientation,
                        position,
                    },
                    7,
                ) => {
                    let q = orientation.quaternion();
                    initial[o] = q.scalar;
                    initial[o + 1] = q.vector.x;
                    initial[o + 2] = q.vector.y;
                    initial[o + 3] = q.vector.z;
                    for r in 0..3 {
                        initial[o + 4 + r] = position[r];
                    }
                }
                (
                    JointPosition::Free {
                        orientation,
                        position,
                    },
                    6,
                ) => {
                    let c = orientation.to_rotation();
                    let lambda = match param {
                        RotationParameterization::Euler => {
                            let e = EulerAngles::from_rotation(&c)
                                .map_err(|e| SimError::Config(e.to_string()))?;
                            Vec3::new(e.phi, e.theta, e.psi)
                        }
                        RotationParameterization::Fedorov => {
                            FedorovParam::from_rotation(&c)
                                .map_err(|e| SimError::Config(e.to_string()))?
                                .0
                        }
                        RotationParameterization::Quaternion => unreachable!(),
                    };
                    for r in 0..3 {
                        initial[o + r] = lambda[r];
                        initial[o + 3 + r] = position[r];
                    }
                }
                _ => return Err(SimError::Config("joint state mismatch".into())),
            }
        }
        initial.rows_mut(pos_len, dof).copy_from(&u0);
        let applied = scenario.applied_wrenches(tree.len());
        Ok(TreeEngine {
            tree,
            param,
            gravity: scenario.gravity(),
            applied,
            renormalize: scenario.renormalize_quaternions,
            layout,
            pos_len,
            initial,
        })
    }

    fn positions(&self, s: &DVector<f64>) -> Result<Vec<JointPosition>, SimError> {
        let mut out = Vec::with_capacity(self.tree.len());
        for i in 0..self.tree.len() {
            let (o, w) = self.layout[i];
            let pos = match w {
                0 | 1 => JointPosition::Scalar(if w == 1 { s[o] } else { 0.0 }),
                7 => {
                    let q = Quaternion::new(s[o], Vec3::new(s[o + 1], s[o + 2], s[o + 3]));
                    let uq = UnitQuaternion::normalize(q).map_err(|e| SimError::Numerical {
                        time: f64::NAN,
                        message: e.to_string(),
                    })?;
                    JointPosition::Free {
                        orientation: uq,
                        position: Vec3::new(s[o + 4], s[o + 5], s[o + 6]),
                    }
                }
                6 => {
                    let lambda = Vec3::new(s[o], s[o + 1], s[o + 2]);
                    let c = match self.param {
                        RotationParameterization::Euler => {
                            EulerAngles::new(lambda.x, lambda.y, lambda.z).to_rotation()
                        }
                        RotationParameterization::Fedorov => FedorovParam(lambda).to_rotation(),
                        RotationParameterization::Quaternion => unreachable!(),
                    };
                    JointPosition::Free {
                        orientation: UnitQuaternion::from_rotation(&c),
                        position: Vec3::new(s[o + 3], s[o + 4], s[o + 5]),
                    }
                }
                _ => unreachable!(),
            };
            out.push(pos);
        }
        Ok(out)
    }

    fn velocities(&self, s: &DVector<f64>) -> DVector<f64> {
        s.rows(self.pos_len, s.len() - self.pos_len).into_owned()
    }
}

impl Engine for TreeEngine {
    fn state(&self) -> DVector<f64> {
        self.initial.clone()
    }

    fn derivative(&self, t: f64, s: &DVector<f64>) -> Result<DVector<f64>, SimError> {
        let q = self.positions(s)?;
        let u = self.velocities(s);
        let udot = self
            .tree
            .forward_dynamics_newton_euler(&q, &u, &self.gravity, &self.applied)
            .map_err(|e| SimError::Numerical {
                time: t,
                message: e.to_string(),
            })?;

        let mut ds = DVector::zeros(s.len());
        let mut uoff = 0;
        for i in 0..self.tree.len() {
            let (o, w) = self.layout[i];
            let n = self.tree.body(i).joint.dof();
            match w {
                0 => {}
                1 => ds[o] = u[uoff],
                7 => {
                    let quat = Quaternion::new(s[o], Vec3::new(s[o + 1], s[o + 2], s[o + 3]));
                    let rel = Vec6::from_column_slice(u.rows(uoff, 6).as_slice());
                    let (v, w3) = split6(&rel);
                    // the flow is linear in the quadruple, so evaluate it on
                    // the stored (possibly slightly non-unit) components
                    let unit = UnitQuaternion::normalize(quat).map_err(|e| {
                        SimError::Numerical {
                            time: t,
                            message: e.to_string(),
                        }
                    })?;
                    let scale = quat.norm();
                    let qdot = unit.rate(&w3).scaled(scale);
                    ds[o] = qdot.scalar;
                    ds[o + 1] = qdot.vector.x;
                    ds[o + 2] = qdot.vector.y;
                    ds[o + 3] = qdot.vector.z;
                    let ddot = unit.to_rotation().matrix() * v;
                    for r in 0..3 {
                        ds[o + 4 + r] = ddot[r];
                    }
                }
                6 => {
                    let lambda = Vec3::new(s[o], s[o + 1], s[o + 2]);
                    let rel = Vec6::from_column_slice(u.rows(uoff, 6).as_slice());
                    let (v, w3) = split6(&rel);
                    let (ldot, c) = match self.param {
                        RotationParameterization::Euler => {
                            let e = EulerAngles::new(lambda.x, lambda.y, lambda.z);
                            let rate = e.rate(&w3).map_err(|err| SimError::Numerical {
                                time: t,
                                message: err.to_string(),
                            })?;
                            (rate, e.to_rotation())
                        }
                        RotationParameterization::Fedorov => {
                            let f = FedorovParam(lambda);
                            (f.rate(&w3), f.to_rotation())
                        }
                        RotationParameterization::Quaternion => unreachable!(),
                    };
                    let ddot = c.matrix() * v;
                    for r in 0..3 {
                        ds[o + r] = ldot[r];
                        ds[o + 3 + r] = ddot[r];
                    }
                }
                _ => unreachable!(),
            }
            uoff += n;
        }
        ds.rows_mut(self.pos_len, udot.len()).copy_from(&udot);
        Ok(ds)
    }

    fn post_step(&self, s: &mut DVector<f64>) {
        if !self.renormalize {
            return;
        }
        for i in 0..self.tree.len() {
            let (o, w) = self.layout[i];
            if w == 7 {
                let n = (s[o] * s[o] + s[o + 1] * s[o + 1] + s[o + 2] * s[o + 2]
                    + s[o + 3] * s[o + 3])
                    .sqrt();
                if n > 0.0 {
                    for r in 0..4 {
                        s[o + r] /= n;
                    }
                }
            }
        }
    }

    fn record(&self, t: f64, s: &DVector<f64>) -> TrajectoryRecord {
        let q = self.positions(s).expect("state was finite after stepping");
        let u = self.velocities(s);
        let poses = self.tree.absolute_poses(&q);
        let v_abs = self.tree.absolute_velocities(&q, &u);
        let mut bodies = Vec::with_capacity(self.tree.len());
        for (i, pose) in poses.iter().enumerate() {
            let body = self.tree.body(i);
            let vi = Vec6::from_column_slice(v_abs.rows(6 * i, 6).as_slice());
            let (lin, ang) = split6(&vi);
            let e_kin = 0.5 * vi.dot(&(body.inertia.matrix() * vi));
            let first = body.inertia.first_moment();
            let com_world =
                pose.rotation.matrix() * first + body.inertia.mass() * pose.displacement;
            let e_pot = -self.gravity.dot(&com_world);
            let quat = UnitQuaternion::from_rotation(&pose.rotation);
            bodies.push(BodyRecord {
                label: body.label.clone(),
                quat: [
                    quat.quaternion().scalar,
                    quat.quaternion().vector.x,
                    quat.quaternion().vector.y,
                    quat.quaternion().vector.z,
                ],
                displacement: pose.displacement,
                linear: lin,
                angular: ang,
                e_kin,
                e_pot,
            });
        }
        TrajectoryRecord {
            time: t,
            bodies,
            constraint_residual: 0.0,
        }
    }
}

// ---------------------------------------------------------- mass points

struct PointsEngine {
    masses: Vec<f64>,
    labels: Vec<String>,
    constraints: Vec<Option<ConstraintManifold>>,
    gravity: Vec3,
    gamma: Option<f64>,
    project: bool,
    initial: DVector<f64>,
}

impl PointsEngine {
    fn new(scenario: &Scenario) -> Result<PointsEngine, SimError> {
        let specs = match &scenario.system {
            SystemSpec::MassPoints { points } => points,
            _ => unreachable!(),
        };
        let mut initial = DVector::zeros(6 * specs.len());
        let mut masses = Vec::new();
        let mut labels = Vec::new();
        let mut constraints = Vec::new();
        for (i, p) in specs.iter().enumerate() {
            masses.push(p.mass);
            labels.push(p.label.clone().unwrap_or_else(|| format!("point{i}")));
            let manifold = match &p.constraint {
                None => None,
                Some(ConstraintSpec::Circle { radius }) => {
                    Some(ConstraintManifold::circle(*radius))
                }
                Some(ConstraintSpec::Sphere { radius }) => {
                    Some(ConstraintManifold::sphere(*radius))
                }
                Some(ConstraintSpec::Plane { origin, u, v }) => Some(ConstraintManifold::plane(
                    vec3(*origin),
                    vec3(*u),
                    vec3(*v),
                )),
            };
            if let Some(m) = &manifold {
                let level = m.level().expect("builtin manifolds carry a level set");
                let r = vec3(p.position);
                let sigma = (level.sigma)(&r);
                if sigma.amax() > 1e-6 {
                    return Err(SimError::Config(format!(
                        "point {i}: initial position violates its constraint (residual {:.3e})",
                        sigma.amax()
                    )));
                }
            }
            constraints.push(manifold);
            for r in 0..3 {
                initial[6 * i + r] = p.position[r];
                initial[6 * i + 3 + r] = p.velocity[r];
            }
        }
        Ok(PointsEngine {
            masses,
            labels,
            constraints,
            gravity: scenario.gravity(),
            gamma: scenario.forces.newtonian_gamma,
            project: scenario.project_constraints,
            initial,
        })
    }

    fn forces(&self, t: f64, s: &DVector<f64>) -> Result<Vec<Vec3>, SimError> {
        let n = self.masses.len();
        let mut f: Vec<Vec3> = (0..n).map(|i| self.masses[i] * self.gravity).collect();
        if let Some(gamma) = self.gamma {
            let pts: Vec<MassPoint> = (0..n)
                .map(|i| {
                    MassPoint::new(
                        self.masses[i],
                        Vec3::new(s[6 * i], s[6 * i + 1], s[6 * i + 2]),
                        Vec3::zeros(),
                    )
                })
                .collect();
            let grav = gravity_forces(&pts, gamma).map_err(|e| SimError::Numerical {
                time: t,
                message: e.to_string(),
            })?;
            for i in 0..n {
                f[i] += grav[i];
            }
        }
        Ok(f)
    }
}

/// Ambient acceleration of an ideally constrained point from the level
/// set alone: `a = f/m + ν λ` with `λ` solving `νᵀa = −H(v, v)`, the
/// curvature term taken by central differences of `ν` along the motion.
fn ambient_constrained_accel(
    level: &LevelSet,
    r: &Vec3,
    v: &Vec3,
    f: &Vec3,
    mass: f64,
) -> Vec3 {
    let nu = (level.normal_basis)(r);
    let gram = nu.transpose() * &nu;
    let inv = gram.try_inverse().expect("normal basis is full rank");
    let speed = v.norm();
    let h_vv = if speed == 0.0 {
        DVector::zeros(nu.ncols())
    } else {
        let dir = v / speed;
        let h = 1e-6 * r.norm().max(1.0);
        let nup = (level.normal_basis)(&(r + h * dir));
        let num = (level.normal_basis)(&(r - h * dir));
        let dnu: DMatrix<f64> = (nup - num) / (2.0 * h);
        let vd = DVector::from_column_slice(&[v.x, v.y, v.z]);
        speed * (dnu.transpose() * vd)
    };
    let fd = DVector::from_column_slice(&[f.x / mass, f.y / mass, f.z / mass]);
    let lambda = &inv * (-h_vv - nu.transpose() * &fd);
    let corr = nu * lambda;
    f / mass + Vec3::new(corr[0], corr[1], corr[2])
}

impl Engine for PointsEngine {
    fn state(&self) -> DVector<f64> {
        self.initial.clone()
    }

    fn derivative(&self, t: f64, s: &DVector<f64>) -> Result<DVector<f64>, SimError> {
        let n = self.masses.len();
        let forces = self.forces(t, s)?;
        let mut ds = DVector::zeros(6 * n);
        for i in 0..n {
            let r = Vec3::new(s[6 * i], s[6 * i + 1], s[6 * i + 2]);
            let v = Vec3::new(s[6 * i + 3], s[6 * i + 4], s[6 * i + 5]);
            let a = match &self.constraints[i] {
                None => forces[i] / self.masses[i],
                Some(m) => {
                    let level = m.level().expect("builtin manifolds carry a level set");
                    ambient_constrained_accel(level, &r, &v, &forces[i], self.masses[i])
                }
            };
            for k in 0..3 {
                ds[6 * i + k] = v[k];
                ds[6 * i + 3 + k] = a[k];
            }
        }
        Ok(ds)
    }

    fn post_step(&self, s: &mut DVector<f64>) {
        if !self.project {
            return;
        }
        for (i, c) in self.constraints.iter().enumerate() {
            let Some(m) = c else { continue };
            let level = m.level().expect("builtin manifolds carry a level set");
            let mut r = Vec3::new(s[6 * i], s[6 * i + 1], s[6 * i + 2]);
            for _ in 0..2 {
                let sigma = (level.sigma)(&r);
                let nu = (level.normal_basis)(&r);
                let gram = nu.transpose() * &nu;
                let Some(inv) = gram.try_inverse() else { break };
                let corr = nu * (inv * sigma);
                r -= Vec3::new(corr[0], corr[1], corr[2]);
            }
            let nu = (level.normal_basis)(&r);
            let gram = nu.transpose() * &nu;
            if let Some(inv) = gram.try_inverse() {
                let mut v = Vec3::new(s[6 * i + 3], s[6 * i + 4], s[6 * i + 5]);
                let vd = DVector::from_column_slice(&[v.x, v.y, v.z]);
                let normal_part = &nu * (inv * (nu.transpose() * vd));
                v -= Vec3::new(normal_part[0], normal_part[1], normal_part[2]);
                for k in 0..3 {
                    s[6 * i + 3 + k] = v[k];
                }
            }
            for k in 0..3 {
                s[6 * i + k] = r[k];
            }
        }
    }

    fn record(&self, t: f64, s: &DVector<f64>) -> TrajectoryRecord {
        let n = self.masses.len();
        let mut bodies = Vec::with_capacity(n);
        let mut residual = 0.0f64;

        // pairwise gravitational potential split evenly over each pair
        let mut pair_pot = vec![0.0; n];
        if let Some(gamma) = self.gamma {
            for i in 0..n {
                for j in (i + 1)..n {
                    let ri = Vec3::new(s[6 * i], s[6 * i + 1], s[6 * i + 2]);
                    let rj = Vec3::new(s[6 * j], s[6 * j + 1], s[6 * j + 2]);
                    let dist = (rj - ri).norm();
                    if dist > 0.0 {
                        let u = -gamma * self.masses[i] * self.masses[j] / dist;
                        pair_pot[i] += 0.5 * u;
                        pair_pot[j] += 0.5 * u;
                    }
                }
            }
        }

        for i in 0..n {
            let r = Vec3::new(s[6 * i], s[6 * i + 1], s[6 * i + 2]);
            let v = Vec3::new(s[6 * i + 3], s[6 * i + 4], s[6 * i + 5]);
            if let Some(m) = &self.constraints[i] {
                let level = m.level().expect("builtin manifolds carry a level set");
                residual = residual.max((level.sigma)(&r).amax());
            }
            bodies.push(BodyRecord {
                label: self.labels[i].clone(),
                quat: [1.0, 0.0, 0.0, 0.0],
                displacement: r,
                linear: v,
                angular: Vec3::zeros(),
                e_kin: 0.5 * self.masses[i] * v.norm_squared(),
                e_pot: -self.masses[i] * self.gravity.dot(&r) + pair_pot[i],
            });
        }
        TrajectoryRecord {
            time: t,
            bodies,
            constraint_residual: residual,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::scenario::ScenarioFile;

    fn pendulum_scenario(duration: f64, step: f64, every: usize) -> Scenario {
        let cfg = format!(
            r#"{{
            "schema": 1,
            "name": "spherical-pendulum",
            "system": {{
                "type": "mass_points",
                "points": [{{
                    "mass": 1.0,
                    "position": [0.76771252364956322, 0.15562303292945553, -0.62160996827066439],
                    "velocity": [0.011580410084108761, 0.88153222693808131, 0.23499807288824501],
                    "constraint": {{"type": "sphere", "radius": 1.0}}
                }}]
            }},
            "forces": {{"uniform_gravity": [0.0, 0.0, -9.81]}},
            "integrator": "rk4",
            "step": {step},
            "duration": {duration},
            "output_every": {every}
        }}"#
        );
        match ScenarioFile::parse(&cfg).unwrap() {
            ScenarioFile::Single(s) => s,
            _ => unreachable!(),
        }
    }

    #[test]
    fn spherical_pendulum_energy_and_residual_short_run() {
        let s = pendulum_scenario(1.0, 1e-3, 100);
        let out = integrate(&s).unwrap();
        assert!(out.summary.energy_drift < 1e-8, "{}", out.summary.energy_drift);
        assert!(
            out.summary.max_constraint_residual < 1e-8,
            "{}",
            out.summary.max_constraint_residual
        );
        assert_eq!(out.summary.final_time, 1.0);
    }

    #[test]
    fn free_body_advances_as_exact_screw_motion() {
        // zero force, constant twist: compare against the closed-form
        // screw displacement at integrator accuracy
        let cfg = r#"{
            "schema": 1,
            "system": {
                "type": "rigid_body",
                "inertia": {"points": [[1.0, [0.3, 0.0, 0.0]], [1.0, [-0.3, 0.0, 0.0]],
                                        [1.0, [0.0, 0.4, 0.0]], [1.0, [0.0, -0.4, 0.0]],
                                        [1.0, [0.0, 0.0, 0.5]], [1.0, [0.0, 0.0, -0.5]]]},
                "pose": {"quaternion": [1.0, 0.0, 0.0, 0.0], "displacement": [0.0, 0.0, 0.0]},
                "twist": [0.3, -0.1, 0.2, 0.0, 0.0, 1.1]
            },
            "step": 1e-3,
            "duration": 1.0,
            "output_every": 1000
        }"#;
        let s = match ScenarioFile::parse(cfg).unwrap() {
            ScenarioFile::Single(s) => s,
            _ => unreachable!(),
        };
        let out = integrate(&s).unwrap();
        let last = out.records.last().unwrap();
        let b = &last.bodies[0];

        // balanced body spinning about the principal z axis: the spin stays
        // put and the world velocity C(t)v(t) is a constant of motion, so
        // C(t) = rot_z(ωt) and d(t) = v₀ t exactly
        let w = 1.1f64;
        let t = 1.0;
        let v = Vec3::new(0.3, -0.1, 0.2);
        let c = crate::rotation::rot_z(w * t);
        let d_exact = v * t;
        let expected_quat = UnitQuaternion::from_rotation(&c);
        let got_quat = Quaternion::new(b.quat[0], Vec3::new(b.quat[1], b.quat[2], b.quat[3]));
        assert!(
            (got_quat.scalar - expected_quat.quaternion().scalar).abs() < 1e-9
                && (got_quat.vector - expected_quat.quaternion().vector).norm() < 1e-9,
            "quaternion mismatch"
        );
        assert!((b.displacement - d_exact).norm() < 1e-9, "displacement mismatch");
    }

    #[test]
    fn doubled_step_scales_error_sixteen_fold() {
        // classical 4th-order convergence on the double pendulum
        let cfg = |step: f64| {
            format!(
                r#"{{
                "schema": 1,
                "system": {{
                    "type": "multibody",
                    "bodies": [
                        {{"label": "a", "parent": null,
                         "joint": {{"type": "revolute", "axis": [0.0, 1.0, 0.0]}},
                         "inertia": {{"points": [[1.3, [0.0, 0.0, -1.1]]]}},
                         "q": 0.4, "qdot": 0.0}},
                        {{"label": "b", "parent": 0,
                         "joint": {{"type": "revolute", "axis": [0.0, 1.0, 0.0],
                                   "offset": {{"displacement": [0.0, 0.0, -1.1]}}}},
                         "inertia": {{"points": [[0.7, [0.0, 0.0, -0.8]]]}},
                         "q": -0.3, "qdot": 0.2}}
                    ]
                }},
                "forces": {{"uniform_gravity": [0.0, 0.0, -9.81]}},
                "step": {step},
                "duration": 1.0,
                "output_every": 100000
            }}"#
            )
        };
        let run = |step: f64| {
            let s = match ScenarioFile::parse(&cfg(step)).unwrap() {
                ScenarioFile::Single(s) => s,
                _ => unreachable!(),
            };
            let out = integrate(&s).unwrap();
            out.records.last().unwrap().bodies[1].displacement
        };
        let reference = run(2.5e-5);
        let coarse = run(4e-3);
        let fine = run(2e-3);
        let e_coarse = (coarse - reference).norm();
        let e_fine = (fine - reference).norm();
        let ratio = e_coarse / e_fine;
        assert!(
            (10.0..24.0).contains(&ratio),
            "expected ~16x, got {ratio} ({e_coarse} -> {e_fine})"
        );
    }

    #[test]
    fn quaternion_norm_drift_without_renormalization_stays_tiny() {
        let cfg = r#"{
            "schema": 1,
            "system": {
                "type": "rigid_body",
                "inertia": {"points": [[1.0, [0.3, 0.1, 0.0]], [1.5, [-0.3, 0.0, 0.2]],
                                        [0.8, [0.0, 0.4, -0.3]]]},
                "pose": {"quaternion": [1.0, 0.0, 0.0, 0.0], "displacement": [0.0, 0.0, 0.0]},
                "twist": [0.0, 0.0, 0.0, 0.9, -0.7, 0.5]
            },
            "forces": {"uniform_gravity": [0.0, 0.0, -9.81]},
            "step": 1e-3,
            "duration": 1.0,
            "output_every": 1,
            "renormalize_quaternions": false
        }"#;
        let s = match ScenarioFile::parse(cfg).unwrap() {
            ScenarioFile::Single(s) => s,
            _ => unreachable!(),
        };
        let engine = TreeEngine::new(&s).unwrap();
        let mut state = engine.state();
        let h = 1e-3;
        for step in 0..1000 {
            let t = step as f64 * h;
            let k1 = engine.derivative(t, &state).unwrap();
            let k2 = engine.derivative(t, &(&state + 0.5 * h * &k1)).unwrap();
            let k3 = engine.derivative(t, &(&state + 0.5 * h * &k2)).unwrap();
            let k4 = engine.derivative(t, &(&state + h * &k3)).unwrap();
            state += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
        let norm = (state[0] * state[0] + state[1] * state[1] + state[2] * state[2]
            + state[3] * state[3])
            .sqrt();
        assert!((norm - 1.0).abs() < 1e-9, "drift {}", (norm - 1.0).abs());
    }

    #[test]
    fn non_finite_state_aborts_with_last_good_time() {
        // absurd coupling makes the pair force overflow immediately
        let cfg = r#"{
            "schema": 1,
            "system": {
                "type": "mass_points",
                "points": [
                    {"mass": 1e8, "position": [0.0, 0.0, 0.0], "velocity": [0.0, 0.0, 0.0]},
                    {"mass": 1e8, "position": [1e-3, 0.0, 0.0], "velocity": [0.0, 0.0, 0.0]}
                ]
            },
            "forces": {"newtonian_gamma": 1e300},
            "step": 1e-2,
            "duration": 10.0
        }"#;
        let s = match ScenarioFile::parse(cfg).unwrap() {
            ScenarioFile::Single(s) => s,
            _ => unreachable!(),
        };
        match integrate(&s) {
            Err(SimError::NonFinite { time }) => assert!(time.is_finite()),
            other => panic!("expected non-finite abort, got {other:?}"),
        }
    }

    #[test]
    fn free_joint_charts_agree_pairwise() {
        // the same tumbling body integrated under each rotation chart ends
        // at the same pose (quaternion output is chart-independent)
        let cfg = |param: &str| {
            format!(
                r#"{{
                "schema": 1,
                "system": {{
                    "type": "rigid_body",
                    "inertia": {{"points": [[1.0, [0.3, 0.1, 0.0]], [1.5, [-0.3, 0.0, 0.2]],
                                            [0.8, [0.0, 0.4, -0.3]], [1.1, [0.1, -0.2, 0.25]]]}},
                    "pose": {{"quaternion": [1.0, 0.0, 0.0, 0.0], "displacement": [0.0, 0.0, 0.0]}},
                    "twist": [0.2, -0.1, 0.3, 0.9, -0.7, 0.5]
                }},
                "forces": {{"uniform_gravity": [0.0, 0.0, -9.81]}},
                "rotation_param": "{param}",
                "step": 1e-3,
                "duration": 0.5,
                "output_every": 500
            }}"#
            )
        };
        let run = |param: &str| {
            let s = match ScenarioFile::parse(&cfg(param)).unwrap() {
                ScenarioFile::Single(s) => s,
                _ => unreachable!(),
            };
            let out = integrate(&s).unwrap();
            out.records.last().unwrap().bodies[0].clone()
        };
        let reference = run("quaternion");
        for param in ["euler", "fedorov"] {
            let b = run(param);
            for i in 0..4 {
                assert!(
                    (b.quat[i] - reference.quat[i]).abs() < 1e-9,
                    "{param} quat[{i}]: {} vs {}",
                    b.quat[i],
                    reference.quat[i]
                );
            }
            assert!((b.displacement - reference.displacement).norm() < 1e-9);
        }
    }

    #[test]
    fn singular_dynamics_error_carries_timestamp() {
        // a lone point mass has a rank-3 inertia: the free-joint mass
        // matrix is singular and the failure is annotated with the time
        let cfg = r#"{
            "schema": 1,
            "system": {
                "type": "rigid_body",
                "inertia": {"points": [[1.0, [0.0, 0.0, 0.0]]]},
                "pose": {"quaternion": [1.0, 0.0, 0.0, 0.0], "displacement": [0.0, 0.0, 0.0]},
                "twist": [0.0, 0.0, 0.0, 0.0, 0.0, 0.0]
            },
            "step": 1e-3,
            "duration": 1.0
        }"#;
        let s = match ScenarioFile::parse(cfg).unwrap() {
            ScenarioFile::Single(s) => s,
            _ => unreachable!(),
        };
        match integrate(&s) {
            Err(SimError::Numerical { time, message }) => {
                assert!(time.is_finite());
                assert!(message.contains("singular"), "message {message}");
            }
            other => panic!("expected a singular-mass failure, got {other:?}"),
        }
    }

    #[test]
    fn projection_flag_reduces_long_run_drift() {
        let mut s = pendulum_scenario(2.0, 1e-2, 10);
        s.project_constraints = false;
        let free = integrate(&s).unwrap();
        s.project_constraints = true;
        let projected = integrate(&s).unwrap();
        assert!(free.summary.max_constraint_residual < 1e-6);
        assert!(projected.summary.max_constraint_residual < 1e-12);
        assert!(
            projected.summary.max_constraint_residual
                <= free.summary.max_constraint_residual
        );
    }
}
