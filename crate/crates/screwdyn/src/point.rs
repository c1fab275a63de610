//! Free and constrained mass-point dynamics.
//!
//! A mass-point is an atom of the mass measure: nonzero mass at zero
//! volume. Free motion follows `m v• = f`; ideal scleronomic holonomic
//! constraints confine the point to a manifold `r = η(q)` and the motion
//! equation projects onto its tangent space, with the constraint force
//! recoverable in the normal space.

use crate::spatial::{Mat3, Vec3};
use nalgebra::{DMatrix, DVector};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PointError {
    #[error("coincident points {0} and {1}: pairwise distance below 1e-12")]
    CoincidentPoints(usize, usize),
    #[error("tangent basis is rank deficient: Gram condition {0:.3e}")]
    RankDeficient(f64),
    #[error("velocity-constraint Gram matrix is singular")]
    SingularGram,
}

/// Point of the pure-point mass component: mass, position, velocity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MassPoint {
    pub mass: f64,
    pub position: Vec3,
    pub velocity: Vec3,
}

impl MassPoint {
    pub fn new(mass: f64, position: Vec3, velocity: Vec3) -> Self {
        assert!(mass > 0.0, "mass must be positive");
        MassPoint {
            mass,
            position,
            velocity,
        }
    }
}

/// Pairwise gravitational forces with the exact `1/r²` kernel.
///
/// Force on point `i` is `γ m_i Σ_{j≠i} m_j (r_j − r_i)/‖r_j − r_i‖³`
/// (attraction). The pair actions are skew, so the forces sum to zero.
pub fn gravity_forces(points: &[MassPoint], gamma: f64) -> Result<Vec<Vec3>, PointError> {
    let mut forces = vec![Vec3::zeros(); points.len()];
    for i in 0..points.len() {
        for j in (i + 1)..points.len() {
            let sep = points[j].position - points[i].position;
            let dist = sep.norm();
            if dist < 1e-12 {
                return Err(PointError::CoincidentPoints(i, j));
            }
            let f = gamma * points[i].mass * points[j].mass / (dist * dist * dist) * sep;
            forces[i] += f;
            forces[j] -= f;
        }
    }
    Ok(forces)
}

/// Second Newton's law for a free mass-point: `v• = f/m`.
pub fn free_accel(p: &MassPoint, f: &Vec3) -> Vec3 {
    f / p.mass
}

type EmbeddingFn = dyn Fn(&DVector<f64>) -> Vec3 + Send + Sync;
type TangentFn = dyn Fn(&DVector<f64>) -> DMatrix<f64> + Send + Sync;
type LevelFn = dyn Fn(&Vec3) -> DVector<f64> + Send + Sync;
type NormalFn = dyn Fn(&Vec3) -> DMatrix<f64> + Send + Sync;

/// Holonomic scleronomic constraint manifold `r = η(q)`, `dim q ∈ {1, 2}`.
///
/// `tangent_basis` returns the 3×dim matrix `τ = ∂η/∂qᵀ` whose columns span
/// the tangent space; the optional level set supplies `σ(r) = 0` with its
/// normal basis `ν = ∂σ/∂rᵀ`.
pub struct ConstraintManifold {
    embedding: Box<EmbeddingFn>,
    tangent_basis: Box<TangentFn>,
    level: Option<LevelSet>,
    dim_q: usize,
}

/// Level-set description `σ(r) = 0` with normal basis `ν` (3×codim).
pub struct LevelSet {
    pub sigma: Box<LevelFn>,
    pub normal_basis: Box<NormalFn>,
}

impl ConstraintManifold {
    pub fn new(
        embedding: Box<EmbeddingFn>,
        tangent_basis: Box<TangentFn>,
        level: Option<LevelSet>,
        dim_q: usize,
    ) -> Self {
        assert!(dim_q == 1 || dim_q == 2, "dim_q must be 1 or 2");
        ConstraintManifold {
            embedding,
            tangent_basis,
            level,
            dim_q,
        }
    }

    pub fn dim_q(&self) -> usize {
        self.dim_q
    }

    pub fn embed(&self, q: &DVector<f64>) -> Vec3 {
        (self.embedding)(q)
    }

    pub fn tangent_basis(&self, q: &DVector<f64>) -> DMatrix<f64> {
        (self.tangent_basis)(q)
    }

    pub fn level(&self) -> Option<&LevelSet> {
        self.level.as_ref()
    }

    /// Ambient velocity of the constrained point: `r• = τ q•`.
    pub fn ambient_velocity(&self, q: &DVector<f64>, qdot: &DVector<f64>) -> Vec3 {
        let tau = self.tangent_basis(q);
        let v = tau * qdot;
        Vec3::new(v[0], v[1], v[2])
    }

    /// Circle of radius `r` in the x–y plane, `q = [angle]`.
    pub fn circle(radius: f64) -> ConstraintManifold {
        let r = radius;
        ConstraintManifold::new(
            Box::new(move |q: &DVector<f64>| Vec3::new(r * q[0].cos(), r * q[0].sin(), 0.0)),
            Box::new(move |q: &DVector<f64>| {
                DMatrix::from_column_slice(3, 1, &[-r * q[0].sin(), r * q[0].cos(), 0.0])
            }),
            Some(LevelSet {
                sigma: Box::new(move |p: &Vec3| {
                    DVector::from_column_slice(&[p.x * p.x + p.y * p.y - r * r, p.z])
                }),
                normal_basis: Box::new(|p: &Vec3| {
                    DMatrix::from_column_slice(3, 2, &[2.0 * p.x, 2.0 * p.y, 0.0, 0.0, 0.0, 1.0])
                }),
            }),
            1,
        )
    }

    /// Sphere of radius `r`, `q = [polar, azimuth]` measured from the −z pole.
    pub fn sphere(radius: f64) -> ConstraintManifold {
        let r = radius;
        ConstraintManifold::new(
            Box::new(move |q: &DVector<f64>| {
                let (th, ph) = (q[0], q[1]);
                Vec3::new(
                    r * th.sin() * ph.cos(),
                    r * th.sin() * ph.sin(),
                    -r * th.cos(),
                )
            }),
            Box::new(move |q: &DVector<f64>| {
                let (th, ph) = (q[0], q[1]);
                DMatrix::from_column_slice(
                    3,
                    2,
                    &[
                        r * th.cos() * ph.cos(),
                        r * th.cos() * ph.sin(),
                        r * th.sin(),
                        -r * th.sin() * ph.sin(),
                        r * th.sin() * ph.cos(),
                        0.0,
                    ],
                )
            }),
            Some(LevelSet {
                sigma: Box::new(move |p: &Vec3| {
                    DVector::from_column_slice(&[p.norm_squared() - r * r])
                }),
                normal_basis: Box::new(|p: &Vec3| {
                    DMatrix::from_column_slice(3, 1, &[2.0 * p.x, 2.0 * p.y, 2.0 * p.z])
                }),
            }),
            2,
        )
    }

    /// Plane through `origin` spanned by orthonormalized `u`, `v`.
    pub fn plane(origin: Vec3, u: Vec3, v: Vec3) -> ConstraintManifold {
        let eu = u.normalize();
        let ev = (v - v.dot(&eu) * eu).normalize();
        let n = eu.cross(&ev);
        ConstraintManifold::new(
            Box::new(move |q: &DVector<f64>| origin + q[0] * eu + q[1] * ev),
            Box::new(move |_q: &DVector<f64>| {
                DMatrix::from_column_slice(3, 2, &[eu.x, eu.y, eu.z, ev.x, ev.y, ev.z])
            }),
            Some(LevelSet {
                sigma: Box::new(move |p: &Vec3| DVector::from_column_slice(&[(p - origin).dot(&n)])),
                normal_basis: Box::new(move |_p: &Vec3| {
                    DMatrix::from_column_slice(3, 1, &[n.x, n.y, n.z])
                }),
            }),
            2,
        )
    }
}

fn gram_condition(g: &DMatrix<f64>) -> f64 {
    let svd = g.clone().svd(false, false);
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

/// Tangent-coordinate extractor `(τᵀτ)⁻¹τᵀ` (dim×3): maps ambient vectors
/// to tangent coordinates.
pub fn tangent_coordinates(
    m: &ConstraintManifold,
    q: &DVector<f64>,
) -> Result<DMatrix<f64>, PointError> {
    let tau = m.tangent_basis(q);
    let gram = tau.transpose() * &tau;
    let cond = gram_condition(&gram);
    if cond > 1e12 {
        return Err(PointError::RankDeficient(cond));
    }
    let inv = gram
        .try_inverse()
        .ok_or(PointError::RankDeficient(f64::INFINITY))?;
    Ok(inv * tau.transpose())
}

/// Genuine 3×3 orthogonal projector onto the tangent space: `τ (τᵀτ)⁻¹ τᵀ`.
pub fn tangent_projection(m: &ConstraintManifold, q: &DVector<f64>) -> Result<Mat3, PointError> {
    let tau = m.tangent_basis(q);
    let coords = tangent_coordinates(m, q)?;
    let p = tau * coords;
    Ok(Mat3::from_fn(|i, j| p[(i, j)]))
}

/// 3×3 projector onto the normal space: `ν (νᵀν)⁻¹ νᵀ` when a level set is
/// given, otherwise the tangent complement `I − P_τ`.
pub fn normal_projection(m: &ConstraintManifold, q: &DVector<f64>) -> Result<Mat3, PointError> {
    if let Some(level) = m.level() {
        let r = m.embed(q);
        let nu = (level.normal_basis)(&r);
        let gram = nu.transpose() * &nu;
        let cond = gram_condition(&gram);
        if cond > 1e12 {
            return Err(PointError::RankDeficient(cond));
        }
        let inv = gram
            .try_inverse()
            .ok_or(PointError::RankDeficient(f64::INFINITY))?;
        let p = nu.clone() * inv * nu.transpose();
        Ok(Mat3::from_fn(|i, j| p[(i, j)]))
    } else {
        Ok(Mat3::identity() - tangent_projection(m, q)?)
    }
}

/// Directional derivative `(∂τ/∂qᵀ q•) q•` via central differences of the
/// tangent basis, step `1e-6·max(1, ‖q‖)`.
fn curvature_term(m: &ConstraintManifold, q: &DVector<f64>, qdot: &DVector<f64>) -> Vec3 {
    let speed = qdot.norm();
    if speed == 0.0 {
        return Vec3::zeros();
    }
    let dir = qdot / speed;
    let h = 1e-6 * q.norm().max(1.0);
    let tp = m.tangent_basis(&(q + h * &dir));
    let tm = m.tangent_basis(&(q - h * &dir));
    let dtau = (tp - tm) / (2.0 * h);
    let v = dtau * qdot * speed;
    Vec3::new(v[0], v[1], v[2])
}

/// Generalized acceleration of an ideally constrained point:
/// `q•• = P_τ f/m − P_τ (∂τ/∂qᵀ q•) q•` with the tangent-coordinate
/// extractor `P_τ = (τᵀτ)⁻¹τᵀ`.
pub fn constrained_accel(
    m: &ConstraintManifold,
    q: &DVector<f64>,
    qdot: &DVector<f64>,
    f: &Vec3,
    mass: f64,
) -> Result<DVector<f64>, PointError> {
    let coords = tangent_coordinates(m, q)?;
    let curve = curvature_term(m, q, qdot);
    let rhs = f / mass - curve;
    let rhs_d = DVector::from_column_slice(&[rhs.x, rhs.y, rhs.z]);
    Ok(coords * rhs_d)
}

/// Constraint force `c = m P_ν (∂τ/∂qᵀ q•) q• − P_ν f`; lies in the normal
/// space by construction.
pub fn constraint_force(
    m: &ConstraintManifold,
    q: &DVector<f64>,
    qdot: &DVector<f64>,
    f: &Vec3,
    mass: f64,
) -> Result<Vec3, PointError> {
    let p_nu = normal_projection(m, q)?;
    let curve = curvature_term(m, q, qdot);
    Ok(mass * (p_nu * curve) - p_nu * f)
}

/// State passed to a velocity-level constraint function.
#[derive(Debug, Clone, Copy)]
pub struct PointState {
    pub position: Vec3,
    pub velocity: Vec3,
    pub time: f64,
}

/// Differentiable constraint `σ(r, v, t) = 0` of arbitrary output dimension.
pub trait VelocityConstraint {
    fn eval(&self, state: &PointState) -> DVector<f64>;
}

impl<F: Fn(&PointState) -> DVector<f64>> VelocityConstraint for F {
    fn eval(&self, state: &PointState) -> DVector<f64> {
        self(state)
    }
}

/// Least-norm acceleration keeping `σ(r, v, t) = 0` differentiated once:
/// `v• = −Jᵀ (J Jᵀ)⁻¹ (G v + σ_t)` with `J = ∂σ/∂vᵀ`, `G = ∂σ/∂rᵀ`.
/// Jacobians come from central differences.
pub fn velocity_constraint_accel(
    sigma: &dyn VelocityConstraint,
    state: &PointState,
) -> Result<Vec3, PointError> {
    let k = sigma.eval(state).len();
    let h = 1e-6;
    let mut jv = DMatrix::zeros(k, 3);
    let mut jr = DMatrix::zeros(k, 3);
    for axis in 0..3 {
        let mut e = Vec3::zeros();
        e[axis] = h;
        let vp = sigma.eval(&PointState {
            velocity: state.velocity + e,
            ..*state
        });
        let vm = sigma.eval(&PointState {
            velocity: state.velocity - e,
            ..*state
        });
        let rp = sigma.eval(&PointState {
            position: state.position + e,
            ..*state
        });
        let rm = sigma.eval(&PointState {
            position: state.position - e,
            ..*state
        });
        for row in 0..k {
            jv[(row, axis)] = (vp[row] - vm[row]) / (2.0 * h);
            jr[(row, axis)] = (rp[row] - rm[row]) / (2.0 * h);
        }
    }
    let tp = sigma.eval(&PointState {
        time: state.time + h,
        ..*state
    });
    let tm = sigma.eval(&PointState {
        time: state.time - h,
        ..*state
    });
    let sigma_t = (tp - tm) / (2.0 * h);

    let gram = &jv * jv.transpose();
    if gram_condition(&gram) > 1e12 {
        return Err(PointError::SingularGram);
    }
    let inv = gram.try_inverse().ok_or(PointError::SingularGram)?;
    let vel = DVector::from_column_slice(&[state.velocity.x, state.velocity.y, state.velocity.z]);
    let rhs = jr * vel + sigma_t;
    let a = -jv.transpose() * inv * rhs;
    Ok(Vec3::new(a[0], a[1], a[2]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::Rng;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng() -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(0x9017)
    }

    fn rand_vec3(r: &mut ChaCha8Rng) -> Vec3 {
        Vec3::new(
            r.random_range(-1.0..1.0),
            r.random_range(-1.0..1.0),
            r.random_range(-1.0..1.0),
        )
    }

    #[test]
    fn two_body_gravity_is_equal_and_opposite() {
        let points = [
            MassPoint::new(1.0, Vec3::zeros(), Vec3::zeros()),
            MassPoint::new(1.0, Vec3::new(1.0, 0.0, 0.0), Vec3::zeros()),
        ];
        let f = gravity_forces(&points, 1.0).unwrap();
        assert_abs_diff_eq!(f[0], Vec3::new(1.0, 0.0, 0.0), epsilon = 1e-15);
        assert_abs_diff_eq!(f[1], Vec3::new(-1.0, 0.0, 0.0), epsilon = 1e-15);
    }

    #[test]
    fn single_point_feels_nothing() {
        let points = [MassPoint::new(2.0, Vec3::zeros(), Vec3::zeros())];
        assert_eq!(gravity_forces(&points, 1.0).unwrap()[0], Vec3::zeros());
    }

    #[test]
    fn gravity_forces_sum_to_zero_and_pair_forces_are_collinear() {
        let mut r = rng();
        for _ in 0..20 {
            let points: Vec<MassPoint> = (0..3)
                .map(|_| {
                    MassPoint::new(
                        r.random_range(0.5..2.0),
                        rand_vec3(&mut r) * 3.0,
                        Vec3::zeros(),
                    )
                })
                .collect();
            let f = gravity_forces(&points, 1.0).unwrap();
            let total: Vec3 = f.iter().sum();
            assert!(total.norm() < 1e-12);

            let pair = [points[0], points[1]];
            let fp = gravity_forces(&pair, 1.0).unwrap();
            assert!((fp[0] + fp[1]).norm() < 1e-12);
            let sep = pair[1].position - pair[0].position;
            assert!(fp[0].cross(&sep).norm() < 1e-12 * fp[0].norm() * sep.norm());
        }
    }

    #[test]
    fn coincident_points_error() {
        let points = [
            MassPoint::new(1.0, Vec3::zeros(), Vec3::zeros()),
            MassPoint::new(1.0, Vec3::zeros(), Vec3::zeros()),
        ];
        assert!(matches!(
            gravity_forces(&points, 1.0),
            Err(PointError::CoincidentPoints(0, 1))
        ));
    }

    #[test]
    fn free_accel_divides_by_mass() {
        let p = MassPoint::new(2.0, Vec3::zeros(), Vec3::zeros());
        assert_eq!(free_accel(&p, &Vec3::zeros()), Vec3::zeros());
        assert_eq!(
            free_accel(&p, &Vec3::new(2.0, 0.0, 0.0)),
            Vec3::new(1.0, 0.0, 0.0)
        );
    }

    #[test]
    fn two_body_circular_orbit_matches_kepler() {
        // unit masses, unit separation, γ = 1: each orbits the barycenter
        // at radius 1/2 with ω = √2, period 2π/√2
        let omega = 2.0f64.sqrt();
        let period = 2.0 * std::f64::consts::PI / omega;
        let mut p = [
            MassPoint::new(
                1.0,
                Vec3::new(0.5, 0.0, 0.0),
                Vec3::new(0.0, 0.5 * omega, 0.0),
            ),
            MassPoint::new(
                1.0,
                Vec3::new(-0.5, 0.0, 0.0),
                Vec3::new(0.0, -0.5 * omega, 0.0),
            ),
        ];
        let start = p;
        let h = 1e-4;
        let steps = (period / h).round() as usize;
        let hh = period / steps as f64;
        let deriv = |pts: &[MassPoint; 2]| {
            let f = gravity_forces(pts, 1.0).unwrap();
            [
                (pts[0].velocity, free_accel(&pts[0], &f[0])),
                (pts[1].velocity, free_accel(&pts[1], &f[1])),
            ]
        };
        let advance = |pts: &[MassPoint; 2], d: &[(Vec3, Vec3); 2], dt: f64| {
            let mut out = *pts;
            for i in 0..2 {
                out[i].position += dt * d[i].0;
                out[i].velocity += dt * d[i].1;
            }
            out
        };
        for _ in 0..steps {
            let k1 = deriv(&p);
            let k2 = deriv(&advance(&p, &k1, 0.5 * hh));
            let k3 = deriv(&advance(&p, &k2, 0.5 * hh));
            let k4 = deriv(&advance(&p, &k3, hh));
            for i in 0..2 {
                p[i].position +=
                    hh / 6.0 * (k1[i].0 + 2.0 * k2[i].0 + 2.0 * k3[i].0 + k4[i].0);
                p[i].velocity +=
                    hh / 6.0 * (k1[i].1 + 2.0 * k2[i].1 + 2.0 * k3[i].1 + k4[i].1);
            }
        }
        for i in 0..2 {
            assert!((p[i].position - start[i].position).norm() < 1e-4);
        }
    }

    #[test]
    fn projections_on_builtin_manifolds() {
        // sphere point whose normal is e3 (the top of the sphere, θ = π)
        let sphere = ConstraintManifold::sphere(1.0);
        let q = DVector::from_column_slice(&[std::f64::consts::PI, 0.0]);
        let p_nu = normal_projection(&sphere, &q).unwrap();
        let e3 = Vec3::z();
        assert!((p_nu - e3 * e3.transpose()).amax() < 1e-10);

        let mut r = rng();
        for _ in 0..20 {
            let q = DVector::from_column_slice(&[
                r.random_range(0.5..2.5),
                r.random_range(-3.0..3.0),
            ]);
            let p_nu = normal_projection(&sphere, &q).unwrap();
            assert!((p_nu * p_nu - p_nu).amax() < 1e-10);
            assert!((p_nu - p_nu.transpose()).amax() < 1e-10);

            let p_tau = tangent_projection(&sphere, &q).unwrap();
            let nu = Vec3::from_iterator(
                (sphere.level().unwrap().normal_basis)(&sphere.embed(&q))
                    .column(0)
                    .iter()
                    .cloned(),
            );
            assert!((p_tau * nu).norm() < 1e-10 * nu.norm());
        }
    }

    #[test]
    fn uniform_circular_motion_has_zero_generalized_accel() {
        let circle = ConstraintManifold::circle(1.0);
        let q = DVector::from_column_slice(&[0.7]);
        let qdot = DVector::from_column_slice(&[2.5]);
        let acc = constrained_accel(&circle, &q, &qdot, &Vec3::zeros(), 1.0).unwrap();
        assert!(acc[0].abs() < 1e-9);
    }

    #[test]
    fn particle_on_plane_with_in_plane_force() {
        let plane = ConstraintManifold::plane(Vec3::zeros(), Vec3::x(), Vec3::y());
        let q = DVector::from_column_slice(&[0.3, -0.2]);
        let qdot = DVector::from_column_slice(&[1.0, 0.5]);
        let f = Vec3::new(2.0, -1.0, 0.0);
        let mass = 2.0;
        let acc = constrained_accel(&plane, &q, &qdot, &f, mass).unwrap();
        assert_abs_diff_eq!(acc[0], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(acc[1], -0.5, epsilon = 1e-12);
    }

    #[test]
    fn centripetal_constraint_force() {
        // radius r, speed v, no applied force: ‖c‖ = m v²/r toward center
        let radius = 1.7;
        let circle = ConstraintManifold::circle(radius);
        let q = DVector::from_column_slice(&[0.9]);
        let angular = 1.3;
        let qdot = DVector::from_column_slice(&[angular]);
        let mass = 2.2;
        let c = constraint_force(&circle, &q, &qdot, &Vec3::zeros(), mass).unwrap();
        let speed = radius * angular;
        let target = mass * speed * speed / radius;
        assert!((c.norm() - target).abs() < 1e-10 * target.max(1.0));
        let inward = -circle.embed(&q).normalize();
        assert!((c.normalize() - inward).norm() < 1e-9);
    }

    #[test]
    fn static_plane_force_balance() {
        let plane = ConstraintManifold::plane(Vec3::zeros(), Vec3::x(), Vec3::y());
        let q = DVector::from_column_slice(&[0.0, 0.0]);
        let qdot = DVector::from_column_slice(&[0.0, 0.0]);
        let f = Vec3::new(0.4, -0.3, -2.0);
        let c = constraint_force(&plane, &q, &qdot, &f, 1.0).unwrap();
        let p_nu = normal_projection(&plane, &q).unwrap();
        assert_abs_diff_eq!(c, -(p_nu * f), epsilon = 1e-12);
    }

    #[test]
    fn constraint_force_is_normal_valued() {
        let sphere = ConstraintManifold::sphere(1.0);
        let mut r = rng();
        for _ in 0..20 {
            let q = DVector::from_column_slice(&[
                r.random_range(0.5..2.5),
                r.random_range(-3.0..3.0),
            ]);
            let qdot =
                DVector::from_column_slice(&[r.random_range(-1.0..1.0), r.random_range(-1.0..1.0)]);
            let f = rand_vec3(&mut r) * 5.0;
            let c = constraint_force(&sphere, &q, &qdot, &f, 1.5).unwrap();
            let p_nu = normal_projection(&sphere, &q).unwrap();
            assert!((p_nu * c - c).norm() < 1e-10 * c.norm().max(1.0));
            let p_tau = tangent_projection(&sphere, &q).unwrap();
            assert!((p_tau * c).norm() < 1e-10 * c.norm().max(1.0));
        }
    }

    #[test]
    fn spherical_pendulum_matches_reference_integration() {
        // chart-space RK4 at h=1e-3 vs reference at h=1e-6, t = 1
        let sphere = ConstraintManifold::sphere(1.0);
        let g = Vec3::new(0.0, 0.0, -9.81);
        let mass = 1.0;
        let accel = |q: &DVector<f64>, qdot: &DVector<f64>| {
            constrained_accel(&sphere, q, qdot, &(mass * g), mass).unwrap()
        };
        let run = |h: f64| {
            let mut q = DVector::from_column_slice(&[0.9, 0.2]);
            let mut qd = DVector::from_column_slice(&[0.3, 1.1]);
            let steps = (1.0 / h).round() as usize;
            for _ in 0..steps {
                let k1q = qd.clone();
                let k1v = accel(&q, &qd);
                let k2q = &qd + 0.5 * h * &k1v;
                let k2v = accel(&(&q + 0.5 * h * &k1q), &k2q);
                let k3q = &qd + 0.5 * h * &k2v;
                let k3v = accel(&(&q + 0.5 * h * &k2q), &k3q);
                let k4q = &qd + h * &k3v;
                let k4v = accel(&(&q + h * &k3q), &k4q);
                q += h / 6.0 * (&k1q + 2.0 * &k2q + 2.0 * &k3q + &k4q);
                qd += h / 6.0 * (&k1v + 2.0 * &k2v + 2.0 * &k3v + &k4v);
            }
            (q, qd)
        };
        let (q_coarse, _) = run(1e-3);
        let (q_ref, _) = run(1e-6);
        let err = (sphere.embed(&q_coarse) - sphere.embed(&q_ref)).norm();
        assert!(err < 1e-6, "trajectory error {err}");
    }

    #[test]
    fn velocity_constraint_cases() {
        // constant speed: σ = ‖v‖² − 1 keeps v• ⟂ v
        let speed =
            |s: &PointState| DVector::from_column_slice(&[s.velocity.norm_squared() - 1.0]);
        let state = PointState {
            position: Vec3::new(0.3, 0.1, -0.2),
            velocity: Vec3::new(0.6, 0.8, 0.0),
            time: 0.0,
        };
        let a = velocity_constraint_accel(&speed, &state).unwrap();
        assert!(a.dot(&state.velocity).abs() < 1e-8);

        // σ independent of v: zero Jacobian, singular Gram
        let pos_only = |s: &PointState| DVector::from_column_slice(&[s.position.x]);
        assert!(matches!(
            velocity_constraint_accel(&pos_only, &state),
            Err(PointError::SingularGram)
        ));
    }

    #[test]
    fn velocity_constraint_affine_identity() {
        // random affine σ(v) = Av + G r + b t: the linear identity
        // J v• + G v + σ_t = 0 holds to high accuracy
        let mut r = rng();
        for _ in 0..20 {
            let a_rows: Vec<Vec3> = (0..2).map(|_| rand_vec3(&mut r)).collect();
            let g_rows: Vec<Vec3> = (0..2).map(|_| rand_vec3(&mut r)).collect();
            let b = [r.random_range(-1.0..1.0), r.random_range(-1.0..1.0)];
            let rows_a = a_rows.clone();
            let rows_g = g_rows.clone();
            let sigma = move |s: &PointState| {
                DVector::from_column_slice(&[
                    rows_a[0].dot(&s.velocity) + rows_g[0].dot(&s.position) + b[0] * s.time,
                    rows_a[1].dot(&s.velocity) + rows_g[1].dot(&s.position) + b[1] * s.time,
                ])
            };
            let state = PointState {
                position: rand_vec3(&mut r),
                velocity: rand_vec3(&mut r),
                time: r.random_range(0.0..1.0),
            };
            let acc = velocity_constraint_accel(&sigma, &state).unwrap();
            for row in 0..2 {
                let resid = a_rows[row].dot(&acc) + g_rows[row].dot(&state.velocity) + b[row];
                assert!(resid.abs() < 1e-8, "residual {resid}");
            }
        }
    }
}
