//! Screw elements, wrench/twist coordinates and the 6×6 motion groups.
//!
//! A screw is determined by its element of reduction at a point: a resultant
//! vector `r` and a total moment `μ_a` obeying the shift law
//! `μ_a = μ_b + ab × r`. Wrenches stack `(resultant; moment)`, twists the
//! dual order, which for kinematic twists means `(linear velocity; angular
//! velocity)`. Frame changes act multiplicatively through `L^wr` and `L^tw`.

use thiserror::Error;

pub type Vec3 = nalgebra::Vector3<f64>;
pub type Mat3 = nalgebra::Matrix3<f64>;
pub type Vec6 = nalgebra::Vector6<f64>;
pub type Mat6 = nalgebra::Matrix6<f64>;

/// Orthonormality drift accepted silently by [`RotationMatrix::new`].
pub const ROT_ORTHO_TOL: f64 = 1e-9;
/// Largest drift the constructor will repair by re-orthonormalization.
pub const ROT_REPAIR_TOL: f64 = 1e-6;

#[derive(Debug, Error, PartialEq)]
pub enum SpatialError {
    #[error("matrix is not skew-symmetric: symmetric part has max entry {0:.3e}")]
    NotSkew(f64),
    #[error("matrix is not a rotation: orthonormality drift {drift:.3e}, det {det:.6}")]
    NotRotation { drift: f64, det: f64 },
}

/// Cross-product matrix `f^×` with `f^× g = f × g`.
pub fn cross_matrix(f: &Vec3) -> Mat3 {
    Mat3::new(0.0, -f.z, f.y, f.z, 0.0, -f.x, -f.y, f.x, 0.0)
}

/// Inverse of [`cross_matrix`] for skew-symmetric input.
pub fn uncross(m: &Mat3) -> Result<Vec3, SpatialError> {
    let sym = 0.5 * (m + m.transpose());
    let drift = sym.amax();
    if drift > 1e-9 {
        return Err(SpatialError::NotSkew(drift));
    }
    Ok(Vec3::new(
        0.5 * (m[(2, 1)] - m[(1, 2)]),
        0.5 * (m[(0, 2)] - m[(2, 0)]),
        0.5 * (m[(1, 0)] - m[(0, 1)]),
    ))
}

/// Proper orthogonal 3×3 matrix, column-normalized on construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotationMatrix(Mat3);

impl RotationMatrix {
    pub fn identity() -> Self {
        RotationMatrix(Mat3::identity())
    }

    /// Accepts `m` if orthonormal within `1e-9` per entry; repairs drift up
    /// to `1e-6` by projecting onto the nearest proper orthogonal matrix;
    /// rejects anything beyond that or with negative determinant.
    pub fn new(m: Mat3) -> Result<Self, SpatialError> {
        let drift = (m.transpose() * m - Mat3::identity()).amax();
        let det = m.determinant();
        if det <= 0.0 || drift > ROT_REPAIR_TOL {
            return Err(SpatialError::NotRotation { drift, det });
        }
        if drift <= ROT_ORTHO_TOL {
            return Ok(RotationMatrix(m));
        }
        let fixed = nearest_orthogonal(&m)?;
        Ok(RotationMatrix(fixed))
    }

    /// Trusted constructor for products of already-valid rotations.
    pub(crate) fn from_orthonormal(m: Mat3) -> Self {
        debug_assert!((m.transpose() * m - Mat3::identity()).amax() < 1e-7);
        RotationMatrix(m)
    }

    pub fn matrix(&self) -> &Mat3 {
        &self.0
    }

    pub fn transpose(&self) -> RotationMatrix {
        RotationMatrix(self.0.transpose())
    }

    /// Projects back onto the group; used after long integrations.
    pub fn renormalized(&self) -> RotationMatrix {
        match nearest_orthogonal(&self.0) {
            Ok(m) => RotationMatrix(m),
            Err(_) => *self,
        }
    }
}

impl std::ops::Mul for RotationMatrix {
    type Output = RotationMatrix;
    fn mul(self, rhs: RotationMatrix) -> RotationMatrix {
        RotationMatrix::from_orthonormal(self.0 * rhs.0)
    }
}

impl std::ops::Mul<Vec3> for RotationMatrix {
    type Output = Vec3;
    fn mul(self, rhs: Vec3) -> Vec3 {
        self.0 * rhs
    }
}

fn nearest_orthogonal(m: &Mat3) -> Result<Mat3, SpatialError> {
    let svd = m.svd(true, true);
    let (u, vt) = (svd.u.unwrap(), svd.v_t.unwrap());
    let mut r = u * vt;
    if r.determinant() < 0.0 {
        // flip the weakest singular direction to stay in SO(3)
        let mut u2 = u;
        u2.column_mut(2).neg_mut();
        r = u2 * vt;
    }
    let drift = (r.transpose() * r - Mat3::identity()).amax();
    if drift > ROT_ORTHO_TOL {
        return Err(SpatialError::NotRotation {
            drift,
            det: r.determinant(),
        });
    }
    Ok(r)
}

/// Which operator-column convention a 6-vector or group element follows.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScrewKind {
    /// `(resultant; moment)` — force-like.
    Wrench,
    /// `(moment-analog; resultant)` — for kinematic twists `(v; ω)`.
    Twist,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScrewClass {
    Slider,
    Couple,
    General,
}

/// Element of reduction of a screw at a chosen point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScrewElement {
    pub resultant: Vec3,
    pub moment: Vec3,
    pub kind: ScrewKind,
}

impl ScrewElement {
    pub fn wrench(resultant: Vec3, moment: Vec3) -> Self {
        ScrewElement {
            resultant,
            moment,
            kind: ScrewKind::Wrench,
        }
    }

    pub fn twist(resultant: Vec3, moment: Vec3) -> Self {
        ScrewElement {
            resultant,
            moment,
            kind: ScrewKind::Twist,
        }
    }

    /// Moves the reduction point: `ab` is the vector from the new point `a`
    /// to the current point `b`. The resultant is invariant and
    /// `μ_a = μ_b + ab × r` for both column conventions.
    pub fn shift_reduction_point(&self, ab: &Vec3) -> ScrewElement {
        ScrewElement {
            resultant: self.resultant,
            moment: self.moment + ab.cross(&self.resultant),
            kind: self.kind,
        }
    }

    /// Slider: `r × μ = 0` everywhere (the zero screw counts as a slider);
    /// couple: zero resultant with nonzero spatially constant moment.
    pub fn classify(&self) -> ScrewClass {
        let r = self.resultant.norm();
        let mu = self.moment.norm();
        if r <= 1e-12 {
            if mu <= 1e-12 {
                return ScrewClass::Slider;
            }
            return ScrewClass::Couple;
        }
        let cross = self.resultant.cross(&self.moment).norm();
        if cross <= 1e-12 * r * mu.max(1.0) {
            ScrewClass::Slider
        } else {
            ScrewClass::General
        }
    }

    /// Coordinate column in this element's own convention.
    pub fn to_vec6(&self) -> Vec6 {
        match self.kind {
            ScrewKind::Wrench => stack6(&self.resultant, &self.moment),
            ScrewKind::Twist => stack6(&self.moment, &self.resultant),
        }
    }

    pub fn from_vec6(v: &Vec6, kind: ScrewKind) -> ScrewElement {
        let (top, bottom) = split6(v);
        match kind {
            ScrewKind::Wrench => ScrewElement::wrench(top, bottom),
            ScrewKind::Twist => ScrewElement::twist(bottom, top),
        }
    }
}

pub fn stack6(top: &Vec3, bottom: &Vec3) -> Vec6 {
    Vec6::new(top.x, top.y, top.z, bottom.x, bottom.y, bottom.z)
}

pub fn split6(v: &Vec6) -> (Vec3, Vec3) {
    (Vec3::new(v[0], v[1], v[2]), Vec3::new(v[3], v[4], v[5]))
}

/// Rigid frame change: the pose of a frame `E_p` with respect to `E_0`.
///
/// `rotation` is `C_{0,p}` (maps `E_p` coordinates to `E_0` coordinates) and
/// `displacement` is `d_{0,p}` — the position of `O_p` relative to `O_0` —
/// expressed in `E_0`. Points map as `x^0 = C x^p + d`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MotionTransform {
    pub rotation: RotationMatrix,
    pub displacement: Vec3,
}

impl MotionTransform {
    pub fn identity() -> Self {
        MotionTransform {
            rotation: RotationMatrix::identity(),
            displacement: Vec3::zeros(),
        }
    }

    pub fn new(rotation: RotationMatrix, displacement: Vec3) -> Self {
        MotionTransform {
            rotation,
            displacement,
        }
    }

    pub fn apply_point(&self, p: &Vec3) -> Vec3 {
        self.rotation.matrix() * p + self.displacement
    }

    /// The 6×6 group element transporting screw coordinates from this
    /// frame's point to the reference point.
    ///
    /// Wrench form factors as `T(d) C^⊗`; the twist form is the 3×3-block
    /// swap conjugation of it.
    pub fn motion_group_element(&self, kind: ScrewKind) -> Mat6 {
        let c = self.rotation.matrix();
        let dx = cross_matrix(&self.displacement);
        let mut m = Mat6::zeros();
        match kind {
            ScrewKind::Wrench => {
                // [ C    O ]
                // [ d×C  C ]
                m.fixed_view_mut::<3, 3>(0, 0).copy_from(c);
                m.fixed_view_mut::<3, 3>(3, 0).copy_from(&(dx * c));
                m.fixed_view_mut::<3, 3>(3, 3).copy_from(c);
            }
            ScrewKind::Twist => {
                // [ C  d×C ]
                // [ O    C ]
                m.fixed_view_mut::<3, 3>(0, 0).copy_from(c);
                m.fixed_view_mut::<3, 3>(0, 3).copy_from(&(dx * c));
                m.fixed_view_mut::<3, 3>(3, 3).copy_from(c);
            }
        }
        m
    }

    /// Frame composition: `self` = pose of `E_p` in `E_0`, `other` = pose of
    /// `E_k` in `E_p`; the result is the pose of `E_k` in `E_0`. Group
    /// elements multiply accordingly.
    pub fn compose(&self, other: &MotionTransform) -> MotionTransform {
        MotionTransform {
            rotation: self.rotation * other.rotation,
            displacement: self.displacement + self.rotation.matrix() * other.displacement,
        }
    }

    pub fn inverse(&self) -> MotionTransform {
        let ct = self.rotation.transpose();
        MotionTransform {
            rotation: ct,
            displacement: -(ct.matrix() * self.displacement),
        }
    }

    /// Transports a 6-coordinate column by the group element of the matching
    /// kind.
    pub fn transform_screw(&self, s6: &Vec6, kind: ScrewKind) -> Vec6 {
        self.motion_group_element(kind) * s6
    }

    /// Rate of the group element: `L• = L Φ` with `Φ` built from the
    /// quasi-velocity `vrel` of the moving frame in its own coordinates.
    pub fn motion_transform_rate(&self, vrel: &Vec6, kind: ScrewKind) -> Mat6 {
        self.motion_group_element(kind) * phi_matrix(vrel, kind)
    }
}

/// Velocity-coupling matrix of the motion-group derivative law.
///
/// For a twist `V = (v; ω)` the wrench form is `[ω× O; v× ω×]` and the twist
/// form is `−(Φ^wr)ᵀ`.
pub fn phi_matrix(v: &Vec6, kind: ScrewKind) -> Mat6 {
    let (lin, ang) = split6(v);
    let vx = cross_matrix(&lin);
    let wx = cross_matrix(&ang);
    let mut m = Mat6::zeros();
    match kind {
        ScrewKind::Wrench => {
            m.fixed_view_mut::<3, 3>(0, 0).copy_from(&wx);
            m.fixed_view_mut::<3, 3>(3, 0).copy_from(&vx);
            m.fixed_view_mut::<3, 3>(3, 3).copy_from(&wx);
        }
        ScrewKind::Twist => {
            // −(Φ^wr)ᵀ; skew blocks negate under transposition
            m.fixed_view_mut::<3, 3>(0, 0).copy_from(&wx);
            m.fixed_view_mut::<3, 3>(0, 3).copy_from(&vx);
            m.fixed_view_mut::<3, 3>(3, 3).copy_from(&wx);
        }
    }
    m
}
