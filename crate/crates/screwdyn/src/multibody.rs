//! Tree-structured multibody dynamics.
//!
//! Bodies are connected parent-before-child by joints restricting the
//! relative motion. Stacking the per-body balance `A V•_a + B V_a = F_a`
//! and substituting the kinematic relation `V_a = L V_r` (lower block
//! triangular `L` of relative twist transports) gives the Newton–Euler
//! form in relative quasi-velocities,
//!
//! ```text
//! A L V•_r + (A L• + B L) V_r = F_a
//! ```
//!
//! projected onto the joint motion subspaces. Substituting canonical
//! coordinates `V_r = M q•` instead yields the Lagrange second-kind form
//! `𝒜 q•• + ℬ q• = ℱ` with `𝒜 = (LM)ᵀ A (LM)`.
//!
//! Closed kinematic loops are out of scope. Joining two tree bodies `a`,
//! `b` by an extra edge adds the loop-closure constraints — the
//! displacement vectors around the loop must sum to zero and the rotation
//! matrices around it must compose to the identity — which restrict the
//! joint coordinates implicitly; this module documents those equations
//! but only solves tree topologies.

use crate::body::SpatialInertia;
use crate::rotation::{EulerAngles, FedorovParam, RotationError, UnitQuaternion};
use crate::spatial::{
    cross_matrix, phi_matrix, stack6, Mat3, Mat6, MotionTransform, RotationMatrix, ScrewKind,
    Vec3, Vec6,
};
use nalgebra::{DMatrix, DVector};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MultibodyError {
    #[error("bodies must be listed parent-before-child: body {0} has parent {1}")]
    BadTopology(usize, usize),
    #[error("reduced mass matrix is singular: condition {0:.3e}")]
    SingularMass(f64),
    #[error("selection matrix is degenerate: NᵀN condition {0:.3e}")]
    DegenerateSelection(f64),
    #[error("second-kind form needs a 3-parameter rotation chart: {0}")]
    UnsupportedParameterization(String),
    #[error(transparent)]
    Rotation(#[from] RotationError),
}

/// Rotation chart used for free-joint kinematics and the Lagrange form.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RotationParameterization {
    Euler,
    Fedorov,
    Quaternion,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum JointKind {
    /// Rotation about a unit axis fixed in the child frame.
    Revolute(Vec3),
    /// Translation along a unit axis fixed in the child frame.
    Prismatic(Vec3),
    /// Unconstrained 6-DOF motion.
    Free6,
    /// Rigid attachment.
    Fixed,
}

/// Joint definition: motion kind plus the parent-frame pose of the joint
/// at zero coordinate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Joint {
    pub kind: JointKind,
    pub offset: MotionTransform,
}

impl Joint {
    pub fn revolute(axis: Vec3, offset: MotionTransform) -> Joint {
        let n = axis.norm();
        assert!((n - 1.0).abs() < 1e-6, "joint axis must be unit length");
        Joint {
            kind: JointKind::Revolute(axis / n),
            offset,
        }
    }

    pub fn prismatic(axis: Vec3, offset: MotionTransform) -> Joint {
        let n = axis.norm();
        assert!((n - 1.0).abs() < 1e-6, "joint axis must be unit length");
        Joint {
            kind: JointKind::Prismatic(axis / n),
            offset,
        }
    }

    pub fn free6(offset: MotionTransform) -> Joint {
        Joint {
            kind: JointKind::Free6,
            offset,
        }
    }

    pub fn fixed(offset: MotionTransform) -> Joint {
        Joint {
            kind: JointKind::Fixed,
            offset,
        }
    }

    /// Velocity degrees of freedom.
    pub fn dof(&self) -> usize {
        match self.kind {
            JointKind::Revolute(_) | JointKind::Prismatic(_) => 1,
            JointKind::Free6 => 6,
            JointKind::Fixed => 0,
        }
    }

    /// 6×dof motion-subspace block mapping joint rates to the relative
    /// twist `(v; ω)` in the child frame.
    pub fn motion_subspace(&self) -> DMatrix<f64> {
        match self.kind {
            JointKind::Revolute(axis) => {
                DMatrix::from_column_slice(6, 1, &[0.0, 0.0, 0.0, axis.x, axis.y, axis.z])
            }
            JointKind::Prismatic(axis) => {
                DMatrix::from_column_slice(6, 1, &[axis.x, axis.y, axis.z, 0.0, 0.0, 0.0])
            }
            JointKind::Free6 => DMatrix::identity(6, 6),
            JointKind::Fixed => DMatrix::zeros(6, 0),
        }
    }
}

/// Joint position state.
#[derive(Debug, Clone, PartialEq)]
pub enum JointPosition {
    /// Angle (revolute) or displacement (prismatic); fixed joints ignore it.
    Scalar(f64),
    /// Free joint: orientation plus position of the child origin in the
    /// joint (offset) frame.
    Free {
        orientation: UnitQuaternion,
        position: Vec3,
    },
}

impl JointPosition {
    pub fn zero(kind: &JointKind) -> JointPosition {
        match kind {
            JointKind::Free6 => JointPosition::Free {
                orientation: UnitQuaternion::identity(),
                position: Vec3::zeros(),
            },
            _ => JointPosition::Scalar(0.0),
        }
    }
}

/// One body of the tree: inertia, the joint to its parent, the parent
/// index (`None` = world), and a label for output.
pub struct TreeBody {
    pub inertia: SpatialInertia,
    pub joint: Joint,
    pub parent: Option<usize>,
    pub label: String,
}

/// Topologically ordered tree of rigid bodies.
pub struct MultibodyTree {
    bodies: Vec<TreeBody>,
}

impl MultibodyTree {
    /// Bodies must come parent-before-child; the order is validated, not
    /// re-sorted, so the triangular structure of `L` is deterministic.
    pub fn new(bodies: Vec<TreeBody>) -> Result<MultibodyTree, MultibodyError> {
        for (i, b) in bodies.iter().enumerate() {
            if let Some(p) = b.parent {
                if p >= i {
                    return Err(MultibodyError::BadTopology(i, p));
                }
            }
        }
        Ok(MultibodyTree { bodies })
    }

    pub fn len(&self) -> usize {
        self.bodies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bodies.is_empty()
    }

    pub fn body(&self, i: usize) -> &TreeBody {
        &self.bodies[i]
    }

    pub fn bodies(&self) -> &[TreeBody] {
        &self.bodies
    }

    /// Total velocity degrees of freedom.
    pub fn dof(&self) -> usize {
        self.bodies.iter().map(|b| b.joint.dof()).sum()
    }

    /// Pose of body `i` relative to its parent: `C_{p-1,p}` and
    /// `d_{p-1,p}` in the parent frame.
    pub fn relative_pose(&self, i: usize, q: &JointPosition) -> MotionTransform {
        let joint = &self.bodies[i].joint;
        let local = match (&joint.kind, q) {
            (JointKind::Revolute(axis), JointPosition::Scalar(angle)) => MotionTransform::new(
                crate::rotation::rot_axis_angle(axis, *angle),
                Vec3::zeros(),
            ),
            (JointKind::Prismatic(axis), JointPosition::Scalar(s)) => {
                MotionTransform::new(RotationMatrix::identity(), axis * *s)
            }
            (
                JointKind::Free6,
                JointPosition::Free {
                    orientation,
                    position,
                },
            ) => MotionTransform::new(orientation.to_rotation(), *position),
            (JointKind::Fixed, _) => MotionTransform::identity(),
            _ => panic!("joint position does not match joint kind"),
        };
        joint.offset.compose(&local)
    }

    /// World poses of all bodies.
    pub fn absolute_poses(&self, q: &[JointPosition]) -> Vec<MotionTransform> {
        let mut out: Vec<MotionTransform> = Vec::with_capacity(self.bodies.len());
        for (i, b) in self.bodies.iter().enumerate() {
            let rel = self.relative_pose(i, &q[i]);
            let pose = match b.parent {
                None => rel,
                Some(p) => out[p].compose(&rel),
            };
            out.push(pose);
        }
        out
    }

    /// Relative twists `V_{p-1,p}` stacked per body from joint rates.
    pub fn relative_velocities(&self, u: &DVector<f64>) -> DVector<f64> {
        let k = self.bodies.len();
        let mut v_r = DVector::zeros(6 * k);
        let mut off = 0;
        for (i, b) in self.bodies.iter().enumerate() {
            let s = b.joint.motion_subspace();
            let n = b.joint.dof();
            let vi = s * u.rows(off, n);
            v_r.rows_mut(6 * i, 6).copy_from(&vi);
            off += n;
        }
        v_r
    }

    /// Absolute quasi-velocities `V_a = L V_r`.
    pub fn absolute_velocities(&self, q: &[JointPosition], u: &DVector<f64>) -> DVector<f64> {
        let l = self.twist_transport_matrix(q);
        l * self.relative_velocities(u)
    }

    /// The lower block-triangular kinematic matrix `L` with identity
    /// diagonal blocks: `V_a = L V_r`.
    pub fn twist_transport_matrix(&self, q: &[JointPosition]) -> DMatrix<f64> {
        let rel: Vec<MotionTransform> = (0..self.bodies.len())
            .map(|i| self.relative_pose(i, &q[i]))
            .collect();
        self.transport_from_relative(&rel)
    }

    fn transport_from_relative(&self, rel: &[MotionTransform]) -> DMatrix<f64> {
        let k = self.bodies.len();
        let mut l = DMatrix::zeros(6 * k, 6 * k);
        for (i, b) in self.bodies.iter().enumerate() {
            set_block(&mut l, i, i, &Mat6::identity());
            if let Some(p) = b.parent {
                // L_{i,j} = L^tw_{i,p} L_{p,j} down the path to the root
                let step = relative_twist_transform(&rel[i].inverse());
                for j in 0..=p {
                    let lpj = get_block(&l, p, j);
                    if lpj.amax() != 0.0 {
                        set_block(&mut l, i, j, &(step * lpj));
                    }
                }
            }
        }
        l
    }

    /// Blockwise rate of `L` from the group derivative law: each
    /// off-diagonal block obeys
    /// `L•_{p,j} = L_{p,j} Φ^tw(V_j) − Φ^tw(V_p) L_{p,j}`.
    pub fn twist_transport_rate(&self, l: &DMatrix<f64>, v_abs: &DVector<f64>) -> DMatrix<f64> {
        let k = self.bodies.len();
        let mut ld = DMatrix::zeros(6 * k, 6 * k);
        for p in 0..k {
            let vp = Vec6::from_column_slice(v_abs.rows(6 * p, 6).as_slice());
            let phi_p = phi_matrix(&vp, ScrewKind::Twist);
            for j in 0..p {
                let lpj = get_block(l, p, j);
                if lpj.amax() != 0.0 {
                    let vj = Vec6::from_column_slice(v_abs.rows(6 * j, 6).as_slice());
                    let phi_j = phi_matrix(&vj, ScrewKind::Twist);
                    set_block(&mut ld, p, j, &(lpj * phi_j - phi_p * lpj));
                }
            }
        }
        ld
    }

    /// Gravity wrench stack: `F_p = Θ_p (C_{0,p}ᵀ g; 0)` per body.
    pub fn gravity_wrenches(&self, poses: &[MotionTransform], g: &Vec3) -> DVector<f64> {
        let k = self.bodies.len();
        let mut f = DVector::zeros(6 * k);
        for (i, (body, pose)) in self.bodies.iter().zip(poses).enumerate() {
            let gb = pose.rotation.transpose() * *g;
            let w = body.inertia.matrix() * stack6(&gb, &Vec3::zeros());
            f.rows_mut(6 * i, 6).copy_from_slice(w.as_slice());
        }
        f
    }

    /// Assembles the stacked system at a state: block-diagonal `A`, `B`,
    /// the transport matrix `L` with its rate, the applied wrench stack
    /// (gravity plus per-body extras, both in body frames), and the joint
    /// motion subspace.
    pub fn assemble_system(
        &self,
        q: &[JointPosition],
        u: &DVector<f64>,
        gravity: &Vec3,
        applied: &[Vec6],
    ) -> SystemMatrices {
        let k = self.bodies.len();
        let poses = self.absolute_poses(q);
        let l = self.twist_transport_matrix(q);
        let v_abs = &l * self.relative_velocities(u);
        let l_dot = self.twist_transport_rate(&l, &v_abs);

        let mut a = DMatrix::zeros(6 * k, 6 * k);
        let mut b = DMatrix::zeros(6 * k, 6 * k);
        for i in 0..k {
            let theta = self.bodies[i].inertia.matrix();
            set_block(&mut a, i, i, theta);
            let vi = Vec6::from_column_slice(v_abs.rows(6 * i, 6).as_slice());
            set_block(&mut b, i, i, &(phi_matrix(&vi, ScrewKind::Wrench) * theta));
        }

        let mut f_a = self.gravity_wrenches(&poses, gravity);
        for (i, w) in applied.iter().enumerate() {
            for r in 0..6 {
                f_a[6 * i + r] += w[r];
            }
        }

        let m = self.dof();
        let mut subspace = DMatrix::zeros(6 * k, m);
        let mut off = 0;
        for (i, body) in self.bodies.iter().enumerate() {
            let s = body.joint.motion_subspace();
            let n = body.joint.dof();
            subspace.view_mut((6 * i, off), (6, n)).copy_from(&s);
            off += n;
        }

        SystemMatrices {
            a,
            b,
            l,
            l_dot,
            f_a,
            subspace,
            v_abs,
        }
    }

    /// Joint accelerations `u•` from the Newton–Euler form projected onto
    /// the joint motion subspaces; ideal joint reactions drop out.
    pub fn forward_dynamics_newton_euler(
        &self,
        q: &[JointPosition],
        u: &DVector<f64>,
        gravity: &Vec3,
        applied: &[Vec6],
    ) -> Result<DVector<f64>, MultibodyError> {
        let sys = self.assemble_system(q, u, gravity, applied);
        let ls = &sys.l * &sys.subspace;
        let mass = ls.transpose() * &sys.a * &ls;
        let cond = condition(&mass);
        if cond > 1e12 {
            return Err(MultibodyError::SingularMass(cond));
        }
        let bias = (&sys.a * &sys.l_dot * &sys.subspace + &sys.b * &ls) * u;
        let rhs = ls.transpose() * (&sys.f_a - bias);
        mass.lu()
            .solve(&rhs)
            .ok_or(MultibodyError::SingularMass(cond))
    }

    /// Kinetic energy `½ V_aᵀ A V_a` at a state.
    pub fn kinetic_energy(&self, q: &[JointPosition], u: &DVector<f64>) -> f64 {
        let v = self.absolute_velocities(q, u);
        let mut e = 0.0;
        for i in 0..self.bodies.len() {
            let vi = Vec6::from_column_slice(v.rows(6 * i, 6).as_slice());
            e += 0.5 * vi.dot(&(self.bodies[i].inertia.matrix() * vi));
        }
        e
    }

    /// Gravitational potential `−Σ m_p ⟨g, world com_p⟩`.
    pub fn potential_energy(&self, q: &[JointPosition], gravity: &Vec3) -> f64 {
        let poses = self.absolute_poses(q);
        let mut e = 0.0;
        for (i, b) in self.bodies.iter().enumerate() {
            let first = b.inertia.first_moment();
            let com_world =
                poses[i].rotation.matrix() * first + b.inertia.mass() * poses[i].displacement;
            e -= gravity.dot(&com_world);
        }
        e
    }

    /// Lagrange second-kind matrices in canonical coordinates
    /// `q_j = (d_{p-1,p} in parent frame; λ_j)` per joint, with the chart
    /// of `param` for each λ. Quaternions are refused: the 7-parameter
    /// chart makes the mass matrix singular.
    pub fn lagrange_matrices(
        &self,
        lag: &LagrangeState,
        param: RotationParameterization,
        gravity: &Vec3,
        applied: &[Vec6],
    ) -> Result<LagrangeMatrices, MultibodyError> {
        if param == RotationParameterization::Quaternion {
            return Err(MultibodyError::UnsupportedParameterization(
                "quaternion chart has 4 rotation parameters; use Euler or Fedorov".into(),
            ));
        }
        let k = self.bodies.len();
        assert_eq!(lag.q.len(), 6 * k, "expected 6 coordinates per joint");
        assert_eq!(lag.qdot.len(), 6 * k);

        let mut rel_poses = Vec::with_capacity(k);
        let mut m = DMatrix::zeros(6 * k, 6 * k);
        let mut m_dot = DMatrix::zeros(6 * k, 6 * k);
        let mut v_rel = DVector::zeros(6 * k);
        for i in 0..k {
            let d = Vec3::from_column_slice(lag.q.rows(6 * i, 3).as_slice());
            let lambda = Vec3::from_column_slice(lag.q.rows(6 * i + 3, 3).as_slice());
            let d_dot = Vec3::from_column_slice(lag.qdot.rows(6 * i, 3).as_slice());
            let lambda_dot = Vec3::from_column_slice(lag.qdot.rows(6 * i + 3, 3).as_slice());

            let (c_local, rate, rate_dot) = chart_rotation(param, &lambda, &lambda_dot)?;
            let offset_rot = self.bodies[i].joint.offset.rotation;
            let c_rel = offset_rot * c_local;
            rel_poses.push(MotionTransform::new(c_rel, d));

            let omega = rate * lambda_dot;
            let c_pp = c_rel.transpose();
            let c_pp_dot = -cross_matrix(&omega) * c_pp.matrix();
            let v = c_pp.matrix() * d_dot;

            set_block3(&mut m, 2 * i, 2 * i, c_pp.matrix());
            set_block3(&mut m, 2 * i + 1, 2 * i + 1, &rate);
            set_block3(&mut m_dot, 2 * i, 2 * i, &c_pp_dot);
            set_block3(&mut m_dot, 2 * i + 1, 2 * i + 1, &rate_dot);
            v_rel
                .rows_mut(6 * i, 6)
                .copy_from_slice(stack6(&v, &omega).as_slice());
        }

        let l = self.transport_from_relative(&rel_poses);
        let v_abs = &l * &v_rel;
        let l_dot = self.twist_transport_rate(&l, &v_abs);

        let mut a = DMatrix::zeros(6 * k, 6 * k);
        let mut b_mat = DMatrix::zeros(6 * k, 6 * k);
        let mut poses: Vec<MotionTransform> = Vec::with_capacity(k);
        for (i, body) in self.bodies.iter().enumerate() {
            let pose = match body.parent {
                None => rel_poses[i],
                Some(p) => poses[p].compose(&rel_poses[i]),
            };
            poses.push(pose);
            let theta = body.inertia.matrix();
            set_block(&mut a, i, i, theta);
            let vi = Vec6::from_column_slice(v_abs.rows(6 * i, 6).as_slice());
            set_block(&mut b_mat, i, i, &(phi_matrix(&vi, ScrewKind::Wrench) * theta));
        }
        let mut f_a = self.gravity_wrenches(&poses, gravity);
        for (i, w) in applied.iter().enumerate() {
            for r in 0..6 {
                f_a[6 * i + r] += w[r];
            }
        }

        let lm = &l * &m;
        let cal_a = lm.transpose() * &a * &lm;
        let cal_b = lm.transpose() * (&a * &l * &m_dot + (&a * &l_dot + &b_mat * &l) * &m);
        let cal_f = lm.transpose() * &f_a;
        Ok(LagrangeMatrices {
            cal_a,
            cal_b,
            cal_f,
            m,
            m_dot,
        })
    }
}

/// Canonical-coordinate state for the Lagrange form: per joint the stacked
/// block `(d (3), λ (3))` and its rate.
pub struct LagrangeState {
    pub q: DVector<f64>,
    pub qdot: DVector<f64>,
}

/// Output of [`MultibodyTree::lagrange_matrices`]:
/// `𝒜 q•• + ℬ q• = ℱ` plus the kinematic blocks used to build it.
#[derive(Debug)]
pub struct LagrangeMatrices {
    pub cal_a: DMatrix<f64>,
    pub cal_b: DMatrix<f64>,
    pub cal_f: DVector<f64>,
    pub m: DMatrix<f64>,
    pub m_dot: DMatrix<f64>,
}

/// Stacked system matrices of the Newton–Euler form.
pub struct SystemMatrices {
    /// Block-diagonal spatial inertias.
    pub a: DMatrix<f64>,
    /// Block-diagonal gyroscopic matrices `Φ^wr(V_p) Θ_p`.
    pub b: DMatrix<f64>,
    /// Lower block-triangular twist transport, identity diagonal.
    pub l: DMatrix<f64>,
    /// Blockwise rate of `l`.
    pub l_dot: DMatrix<f64>,
    /// Applied wrench stack in body frames (gravity included).
    pub f_a: DVector<f64>,
    /// Block-diagonal joint motion subspace (6k × dof).
    pub subspace: DMatrix<f64>,
    /// Absolute quasi-velocities at the assembled state.
    pub v_abs: DVector<f64>,
}

/// Exact block layout `[C O; O C][I d^×; O I]` of a relative twist
/// transport, built from the pose of the target frame expressed in the
/// source frame (for a child body: the parent pose in child coordinates).
pub fn relative_twist_transform(t: &MotionTransform) -> Mat6 {
    let c = t.rotation.matrix();
    let dx = cross_matrix(&(t.rotation.transpose().matrix() * t.displacement));
    let mut rot = Mat6::zeros();
    rot.fixed_view_mut::<3, 3>(0, 0).copy_from(c);
    rot.fixed_view_mut::<3, 3>(3, 3).copy_from(c);
    let mut shift = Mat6::identity();
    shift.fixed_view_mut::<3, 3>(0, 3).copy_from(&dx);
    rot * shift
}

/// Chart rotation, rate matrix and its time derivative for a 3-parameter
/// rotation chart.
fn chart_rotation(
    param: RotationParameterization,
    lambda: &Vec3,
    lambda_dot: &Vec3,
) -> Result<(RotationMatrix, Mat3, Mat3), MultibodyError> {
    match param {
        RotationParameterization::Euler => {
            let e = EulerAngles::new(lambda.x, lambda.y, lambda.z);
            let rate = e.rate_matrix();
            if !rate.is_invertible() {
                return Err(MultibodyError::Rotation(RotationError::GimbalLock(
                    rate.det.abs(),
                )));
            }
            Ok((e.to_rotation(), rate.d, e.rate_matrix_dot(lambda_dot)))
        }
        RotationParameterization::Fedorov => {
            let f = FedorovParam(*lambda);
            Ok((
                f.to_rotation(),
                f.rate_matrix().d,
                f.rate_matrix_dot(lambda_dot),
            ))
        }
        RotationParameterization::Quaternion => Err(MultibodyError::UnsupportedParameterization(
            "quaternion chart has 4 rotation parameters".into(),
        )),
    }
}

/// Reduced second-kind system `(𝒜_c, ℬ_c, ℱ_c)`.
pub type ReducedSystem = (DMatrix<f64>, DMatrix<f64>, DVector<f64>);

/// Reduction `q = N q_c` onto `m ≤ 6k` coordinates: requires `NᵀN`
/// non-degenerate and returns `(Nᵀ𝒜N, NᵀℬN, Nᵀℱ)`.
pub fn reduce_coordinates(
    cal_a: &DMatrix<f64>,
    cal_b: &DMatrix<f64>,
    cal_f: &DVector<f64>,
    n: &DMatrix<f64>,
) -> Result<ReducedSystem, MultibodyError> {
    let gram = n.transpose() * n;
    let cond = condition(&gram);
    if cond > 1e12 {
        return Err(MultibodyError::DegenerateSelection(cond));
    }
    Ok((
        n.transpose() * cal_a * n,
        n.transpose() * cal_b * n,
        n.transpose() * cal_f,
    ))
}

/// Fedorov-chart embedding of a revolute-only tree: joint angles `θ`
/// become `λ_j = tan(θ_j/2)·axis_j` with the displacement blocks pinned to
/// the joint offsets. Returns the canonical state, the constant selection
/// matrix `N` (`q• = N q̇_c`), and `q̇_c` with `q̇_c,j = ½(1+tan²(θ_j/2))θ̇_j`.
pub fn fedorov_revolute_embedding(
    tree: &MultibodyTree,
    thetas: &DVector<f64>,
    theta_dots: &DVector<f64>,
) -> (LagrangeState, DMatrix<f64>, DVector<f64>) {
    let k = tree.len();
    let mut q = DVector::zeros(6 * k);
    let mut n = DMatrix::zeros(6 * k, k);
    let mut qc_dot = DVector::zeros(k);
    for i in 0..k {
        let axis = match tree.body(i).joint.kind {
            JointKind::Revolute(a) => a,
            _ => panic!("embedding requires revolute joints"),
        };
        let off = tree.body(i).joint.offset.displacement;
        let qc = (thetas[i] / 2.0).tan();
        qc_dot[i] = 0.5 * (1.0 + qc * qc) * theta_dots[i];
        for r in 0..3 {
            q[6 * i + r] = off[r];
            q[6 * i + 3 + r] = axis[r] * qc;
            n[(6 * i + 3 + r, i)] = axis[r];
        }
    }
    let qdot = &n * &qc_dot;
    (LagrangeState { q, qdot }, n, qc_dot)
}

fn condition(m: &DMatrix<f64>) -> f64 {
    let svd = m.clone().svd(false, false);
    let max = svd.singular_values.max();
    let min = svd
        .singular_values
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min);
    if min <= 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

fn set_block(m: &mut DMatrix<f64>, bi: usize, bj: usize, block: &Mat6) {
    for r in 0..6 {
        for c in 0..6 {
            m[(6 * bi + r, 6 * bj + c)] = block[(r, c)];
        }
    }
}

fn set_block3(m: &mut DMatrix<f64>, bi: usize, bj: usize, block: &Mat3) {
    for r in 0..3 {
        for c in 0..3 {
            m[(3 * bi + r, 3 * bj + c)] = block[(r, c)];
        }
    }
}

fn get_block(m: &DMatrix<f64>, bi: usize, bj: usize) -> Mat6 {
    Mat6::from_fn(|r, c| m[(6 * bi + r, 6 * bj + c)])
}
