//! Rotation parameterizations and their kinematic rate equations.
//!
//! Three charts on the rotation group are provided: x-y-z Euler angles,
//! the Fedorov vector-parameter (Cayley chart, `f = tan(θ/2)·axis`), and
//! unit quaternions. Each comes with the rate map connecting parameter
//! rates to the body-frame angular velocity `ω` of `C• = C ω^×`.

use crate::spatial::{cross_matrix, uncross, Mat3, RotationMatrix, Vec3};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum RotationError {
    #[error("gimbal lock: |det D| = {0:.3e} below threshold 1e-8")]
    GimbalLock(f64),
    #[error("rotation angle at π: 1 + tr C = {0:.3e}, vector-parameter undefined")]
    PiRotation(f64),
    #[error("quaternion is not unit: |norm - 1| = {0:.3e}")]
    NotUnit(f64),
}

/// Rotation about the x axis.
pub fn rot_x(a: f64) -> RotationMatrix {
    let (s, c) = a.sin_cos();
    RotationMatrix::from_orthonormal(Mat3::new(1.0, 0.0, 0.0, 0.0, c, -s, 0.0, s, c))
}

/// Rotation about the y axis.
pub fn rot_y(a: f64) -> RotationMatrix {
    let (s, c) = a.sin_cos();
    RotationMatrix::from_orthonormal(Mat3::new(c, 0.0, s, 0.0, 1.0, 0.0, -s, 0.0, c))
}

/// Rotation about the z axis.
pub fn rot_z(a: f64) -> RotationMatrix {
    let (s, c) = a.sin_cos();
    RotationMatrix::from_orthonormal(Mat3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0))
}

/// Rotation by `angle` about a unit `axis` (Rodrigues form).
pub fn rot_axis_angle(axis: &Vec3, angle: f64) -> RotationMatrix {
    let k = cross_matrix(&axis.normalize());
    let m = Mat3::identity() + angle.sin() * k + (1.0 - angle.cos()) * (k * k);
    RotationMatrix::from_orthonormal(m)
}

/// Rate map `ω = D·(parameter rate)` with its determinant.
#[derive(Debug, Clone, Copy)]
pub struct RateMatrix {
    pub d: Mat3,
    pub det: f64,
}

impl RateMatrix {
    fn new(d: Mat3) -> Self {
        RateMatrix {
            d,
            det: d.determinant(),
        }
    }

    pub fn is_invertible(&self) -> bool {
        self.det.abs() > 1e-8
    }

    /// Solves `D·rate = omega`.
    pub fn solve(&self, omega: &Vec3) -> Result<Vec3, RotationError> {
        if !self.is_invertible() {
            return Err(RotationError::GimbalLock(self.det.abs()));
        }
        self.d
            .lu()
            .solve(omega)
            .ok_or(RotationError::GimbalLock(self.det.abs()))
    }
}

/// Angles `(φ, ϑ, ψ)` of the factorization `C = C1(φ) C2(ϑ) C3(ψ)` into
/// simple rotations about x, y, z.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EulerAngles {
    pub phi: f64,
    pub theta: f64,
    pub psi: f64,
}

impl EulerAngles {
    pub fn new(phi: f64, theta: f64, psi: f64) -> Self {
        EulerAngles { phi, theta, psi }
    }

    pub fn to_rotation(&self) -> RotationMatrix {
        rot_x(self.phi) * rot_y(self.theta) * rot_z(self.psi)
    }

    /// `D` defined by `Cᵀ C• = (D λ̇)^×`, assembled column-wise from the
    /// partial derivatives of the factorization: the column for each angle
    /// is `uncross(Cᵀ ∂C/∂angle)`, which reduces to
    /// `[(C2 C3)ᵀ e1, C3ᵀ e2, e3]`.
    pub fn rate_matrix(&self) -> RateMatrix {
        let c2 = rot_y(self.theta);
        let c3 = rot_z(self.psi);
        let col1 = (c2 * c3).transpose() * Vec3::x();
        let col2 = c3.transpose() * Vec3::y();
        let col3 = Vec3::z();
        RateMatrix::new(Mat3::from_columns(&[col1, col2, col3]))
    }

    /// Angle rates for a body-frame angular velocity; fails at gimbal lock.
    pub fn rate(&self, omega: &Vec3) -> Result<Vec3, RotationError> {
        self.rate_matrix().solve(omega)
    }

    /// Analytic time derivative of the rate matrix along angle rates
    /// `edot = (φ̇, ϑ̇, ψ̇)`, from the factor derivatives
    /// `C2• = C2 e2^× ϑ̇`, `C3• = C3 e3^× ψ̇`.
    pub fn rate_matrix_dot(&self, edot: &Vec3) -> Mat3 {
        let c2 = rot_y(self.theta);
        let c3 = rot_z(self.psi);
        let e1 = Vec3::x();
        let e2 = Vec3::y();
        let e3x = cross_matrix(&Vec3::z());
        let c3t = c3.transpose();
        let col1 = -edot.y * (c3t.matrix() * (cross_matrix(&e2) * (c2.transpose() * e1)))
            - edot.z * (e3x * ((c2 * c3).transpose() * e1));
        let col2 = -edot.z * (e3x * (c3t * e2));
        Mat3::from_columns(&[col1, col2, Vec3::zeros()])
    }

    /// Extracts the angles of `C = C1 C2 C3` from a rotation matrix.
    /// Fails where the factorization is non-unique (`|cos ϑ| ≈ 0`).
    pub fn from_rotation(c: &RotationMatrix) -> Result<EulerAngles, RotationError> {
        let m = c.matrix();
        let s_theta = m[(0, 2)].clamp(-1.0, 1.0);
        if 1.0 - s_theta.abs() < 1e-9 {
            return Err(RotationError::GimbalLock(0.0));
        }
        Ok(EulerAngles {
            phi: (-m[(1, 2)]).atan2(m[(2, 2)]),
            theta: s_theta.asin(),
            psi: (-m[(0, 1)]).atan2(m[(0, 0)]),
        })
    }
}

/// Cayley vector-parameter of a rotation: `f^× = (C − I)(C + I)⁻¹`,
/// equal to `tan(θ/2)·axis`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FedorovParam(pub Vec3);

impl FedorovParam {
    /// `f = uncross((C − Cᵀ)/(1 + tr C))`; undefined at rotation angle π.
    pub fn from_rotation(c: &RotationMatrix) -> Result<FedorovParam, RotationError> {
        let m = c.matrix();
        let denom = 1.0 + m.trace();
        if denom <= 1e-8 {
            return Err(RotationError::PiRotation(denom));
        }
        let skew = (m - m.transpose()) / denom;
        Ok(FedorovParam(uncross(&skew).expect("C - Cᵀ is skew")))
    }

    /// `C = ((1 − ‖f‖²)I + 2ffᵀ + 2f^×)/(1 + ‖f‖²)`.
    pub fn to_rotation(&self) -> RotationMatrix {
        let f = self.0;
        let s = 1.0 + f.norm_squared();
        let m = ((1.0 - f.norm_squared()) * Mat3::identity()
            + 2.0 * f * f.transpose()
            + 2.0 * cross_matrix(&f))
            / s;
        RotationMatrix::from_orthonormal(m)
    }

    /// Rate map for the body-frame angular velocity of `C• = C ω^×`:
    /// `D = 2/(1+‖f‖²)(I − f^×)`, always invertible
    /// (`det D = 8/(1+‖f‖²)²`).
    pub fn rate_matrix(&self) -> RateMatrix {
        let f = self.0;
        let s = 1.0 + f.norm_squared();
        RateMatrix::new(2.0 / s * (Mat3::identity() - cross_matrix(&f)))
    }

    /// `ḟ = D⁻¹ ω`, computed by numerical inversion of the rate matrix.
    pub fn rate(&self, omega: &Vec3) -> Vec3 {
        self.rate_matrix()
            .solve(omega)
            .expect("vector-parameter rate matrix is always invertible")
    }

    /// Analytic time derivative of the rate matrix along `ḟ`.
    pub fn rate_matrix_dot(&self, fdot: &Vec3) -> Mat3 {
        let f = self.0;
        let s = 1.0 + f.norm_squared();
        let sdot = 2.0 * f.dot(fdot);
        -(sdot / s) * self.rate_matrix().d - (2.0 / s) * cross_matrix(fdot)
    }
}

/// Quaternion quadruple `{λ0, λ⃗}` with the product
/// `Λ∘M = {λ0 μ0 − ⟨λ⃗, μ⃗⟩, λ0 μ⃗ + μ0 λ⃗ + λ⃗ × μ⃗}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quaternion {
    pub scalar: f64,
    pub vector: Vec3,
}

impl Quaternion {
    pub fn new(scalar: f64, vector: Vec3) -> Self {
        Quaternion { scalar, vector }
    }

    pub fn identity() -> Self {
        Quaternion::new(1.0, Vec3::zeros())
    }

    pub fn from_vector(v: Vec3) -> Self {
        Quaternion::new(0.0, v)
    }

    pub fn product(&self, other: &Quaternion) -> Quaternion {
        Quaternion {
            scalar: self.scalar * other.scalar - self.vector.dot(&other.vector),
            vector: self.scalar * other.vector
                + other.scalar * self.vector
                + self.vector.cross(&other.vector),
        }
    }

    /// Scalar part kept, vector part negated; `q ∘ q̃ = {‖q‖², 0}`.
    pub fn conjugate(&self) -> Quaternion {
        Quaternion::new(self.scalar, -self.vector)
    }

    pub fn norm(&self) -> f64 {
        (self.scalar * self.scalar + self.vector.norm_squared()).sqrt()
    }

    pub fn dot(&self, other: &Quaternion) -> f64 {
        self.scalar * other.scalar + self.vector.dot(&other.vector)
    }

    pub fn scaled(&self, k: f64) -> Quaternion {
        Quaternion::new(k * self.scalar, k * self.vector)
    }

    pub fn add(&self, other: &Quaternion) -> Quaternion {
        Quaternion::new(self.scalar + other.scalar, self.vector + other.vector)
    }
}

/// Quaternion constrained to unit norm (Euler–Rodrigues parameters).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitQuaternion(Quaternion);

impl UnitQuaternion {
    pub fn identity() -> Self {
        UnitQuaternion(Quaternion::identity())
    }

    /// Accepts a quadruple with `|‖q‖ − 1| ≤ 1e-9`, renormalizing the
    /// residual drift.
    pub fn new(q: Quaternion) -> Result<Self, RotationError> {
        let n = q.norm();
        if (n - 1.0).abs() > 1e-9 {
            return Err(RotationError::NotUnit((n - 1.0).abs()));
        }
        Ok(UnitQuaternion(q.scaled(1.0 / n)))
    }

    /// Renormalizes an arbitrary nonzero quadruple onto the unit sphere.
    pub fn normalize(q: Quaternion) -> Result<Self, RotationError> {
        let n = q.norm();
        if n < 1e-12 {
            return Err(RotationError::NotUnit(1.0));
        }
        Ok(UnitQuaternion(q.scaled(1.0 / n)))
    }

    pub fn quaternion(&self) -> &Quaternion {
        &self.0
    }

    /// The rotation matrix quadratic in the four parameters.
    pub fn to_rotation(&self) -> RotationMatrix {
        let l0 = self.0.scalar;
        let (l1, l2, l3) = (self.0.vector.x, self.0.vector.y, self.0.vector.z);
        let m = Mat3::new(
            l0 * l0 + l1 * l1 - l2 * l2 - l3 * l3,
            2.0 * l1 * l2 - 2.0 * l0 * l3,
            2.0 * l1 * l3 + 2.0 * l0 * l2,
            2.0 * l1 * l2 + 2.0 * l0 * l3,
            l0 * l0 - l1 * l1 + l2 * l2 - l3 * l3,
            2.0 * l2 * l3 - 2.0 * l0 * l1,
            2.0 * l1 * l3 - 2.0 * l0 * l2,
            2.0 * l2 * l3 + 2.0 * l0 * l1,
            l0 * l0 - l1 * l1 - l2 * l2 + l3 * l3,
        );
        RotationMatrix::from_orthonormal(m)
    }

    /// Stable extraction via the largest of the four squared parameters;
    /// sign fixed by a non-negative scalar part.
    pub fn from_rotation(c: &RotationMatrix) -> UnitQuaternion {
        let m = c.matrix();
        let tr = m.trace();
        let w2 = 0.25 * (1.0 + tr);
        let x2 = 0.25 * (1.0 + m[(0, 0)] - m[(1, 1)] - m[(2, 2)]);
        let y2 = 0.25 * (1.0 - m[(0, 0)] + m[(1, 1)] - m[(2, 2)]);
        let z2 = 0.25 * (1.0 - m[(0, 0)] - m[(1, 1)] + m[(2, 2)]);

        let candidates = [w2, x2, y2, z2];
        let best = (0..4).max_by(|&a, &b| candidates[a].total_cmp(&candidates[b])).unwrap();
        let q = match best {
            0 => {
                let w = w2.max(0.0).sqrt();
                let k = 0.25 / w;
                Quaternion::new(
                    w,
                    Vec3::new(
                        k * (m[(2, 1)] - m[(1, 2)]),
                        k * (m[(0, 2)] - m[(2, 0)]),
                        k * (m[(1, 0)] - m[(0, 1)]),
                    ),
                )
            }
            1 => {
                let x = x2.max(0.0).sqrt();
                let k = 0.25 / x;
                Quaternion::new(
                    k * (m[(2, 1)] - m[(1, 2)]),
                    Vec3::new(x, k * (m[(0, 1)] + m[(1, 0)]), k * (m[(0, 2)] + m[(2, 0)])),
                )
            }
            2 => {
                let y = y2.max(0.0).sqrt();
                let k = 0.25 / y;
                Quaternion::new(
                    k * (m[(0, 2)] - m[(2, 0)]),
                    Vec3::new(k * (m[(0, 1)] + m[(1, 0)]), y, k * (m[(1, 2)] + m[(2, 1)])),
                )
            }
            _ => {
                let z = z2.max(0.0).sqrt();
                let k = 0.25 / z;
                Quaternion::new(
                    k * (m[(1, 0)] - m[(0, 1)]),
                    Vec3::new(k * (m[(0, 2)] + m[(2, 0)]), k * (m[(1, 2)] + m[(2, 1)]), z),
                )
            }
        };
        let q = if q.scalar < 0.0 { q.scaled(-1.0) } else { q };
        UnitQuaternion(q.scaled(1.0 / q.norm()))
    }

    /// Norm-preserving kinematic flow for a body-frame angular velocity:
    /// the 4×4 skew action, equal to `½ Λ ∘ {0, ω}`.
    pub fn rate(&self, omega: &Vec3) -> Quaternion {
        let (w1, w2, w3) = (omega.x, omega.y, omega.z);
        let l = [
            self.0.scalar,
            self.0.vector.x,
            self.0.vector.y,
            self.0.vector.z,
        ];
        Quaternion::new(
            0.5 * (-w1 * l[1] - w2 * l[2] - w3 * l[3]),
            Vec3::new(
                0.5 * (w1 * l[0] + w3 * l[2] - w2 * l[3]),
                0.5 * (w2 * l[0] - w3 * l[1] + w1 * l[3]),
                0.5 * (w3 * l[0] + w2 * l[1] - w1 * l[2]),
            ),
        )
    }
}

/// Euler kinematic relation `C• = C ω^×` for a body-frame `ω`.
pub fn rotation_rate(c: &RotationMatrix, omega: &Vec3) -> Mat3 {
    c.matrix() * cross_matrix(omega)
}
