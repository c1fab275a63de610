//! Shared oracles for the integration suites. Everything here is
//! independent of the library's own transform/integration paths.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use screwdyn::spatial::{cross_matrix, Mat3, MotionTransform, RotationMatrix, Vec3};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn rand_vec3(r: &mut ChaCha8Rng) -> Vec3 {
    Vec3::new(
        r.random_range(-1.0..1.0),
        r.random_range(-1.0..1.0),
        r.random_range(-1.0..1.0),
    )
}

pub fn rand_rotation(r: &mut ChaCha8Rng) -> RotationMatrix {
    let axis = rand_vec3(r).normalize();
    let angle = r.random_range(-3.0..3.0);
    rotation_exp(&(axis * angle))
}

pub fn rand_transform(r: &mut ChaCha8Rng) -> MotionTransform {
    MotionTransform::new(rand_rotation(r), rand_vec3(r))
}

/// Rodrigues exponential, written out independently of the library.
pub fn rotation_exp(w: &Vec3) -> RotationMatrix {
    let angle = w.norm();
    if angle < 1e-300 {
        return RotationMatrix::identity();
    }
    let k = cross_matrix(&(w / angle));
    let m = Mat3::identity() + angle.sin() * k + (1.0 - angle.cos()) * (k * k);
    RotationMatrix::new(m).expect("exponential of a skew matrix is a rotation")
}

/// Closed-form pose advance under a constant body-frame twist `(v, ω)`:
/// `C(t) = C0 exp(t ω^×)`, `d(t) = d0 + C0 A(t) v` with
/// `A(t) = t I + (1 − cos θ)/‖ω‖² ω^× + (t − sin θ/‖ω‖)/‖ω‖² (ω^×)²`,
/// `θ = t‖ω‖`.
pub fn screw_advance(pose: &MotionTransform, v: &Vec3, w: &Vec3, t: f64) -> MotionTransform {
    let wn = w.norm();
    let c_next = pose.rotation * rotation_exp(&(w * t));
    let a = if wn < 1e-12 {
        t * Mat3::identity()
    } else {
        let wx = cross_matrix(w);
        let theta = t * wn;
        t * Mat3::identity() + (1.0 - theta.cos()) / (wn * wn) * wx
            + (t - theta.sin() / wn) / (wn * wn) * (wx * wx)
    };
    MotionTransform::new(c_next, pose.displacement + pose.rotation.matrix() * (a * v))
}
