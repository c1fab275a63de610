//! Spatial inertia and single rigid-body dynamics in the body frame.
//!
//! The 6×6 spatial inertia `Θ` aggregates a mass distribution so that
//! `Θ V` is the body's momentum wrench for a quasi-velocity `V = (v; ω)`.
//! Motion obeys `Θ V• + Φ^wr(V) Θ V = F` with the applied wrench reduced
//! at the body origin in body coordinates.

use crate::spatial::{cross_matrix, phi_matrix, Mat3, Mat6, ScrewKind, Vec3, Vec6};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum BodyError {
    #[error("mass distribution is empty")]
    EmptyDistribution,
    #[error("spatial inertia is singular: condition number {0:.3e}")]
    SingularInertia(f64),
}

/// Unit-mass inertia block of a point at body-frame position `r`:
/// `[I, −r^×; r^×, −(r^×)²]`.
pub fn point_inertia_block(r: &Vec3) -> Mat6 {
    let rx = cross_matrix(r);
    let mut m = Mat6::zeros();
    m.fixed_view_mut::<3, 3>(0, 0).copy_from(&Mat3::identity());
    m.fixed_view_mut::<3, 3>(0, 3).copy_from(&(-rx));
    m.fixed_view_mut::<3, 3>(3, 0).copy_from(&rx);
    m.fixed_view_mut::<3, 3>(3, 3).copy_from(&(-(rx * rx)));
    m
}

/// Mass distribution over a body frame: discrete atoms plus optional
/// quadrature samples of a continuous density.
#[derive(Debug, Clone, Default)]
pub struct MassDistribution {
    /// `(mass, position)` atoms of the pure-point component.
    pub discrete: Vec<(f64, Vec3)>,
    /// `(density, position, volume weight)` samples of the continuous
    /// component; each contributes `ρ·w` of mass.
    pub continuous: Vec<(f64, Vec3, f64)>,
}

impl MassDistribution {
    pub fn from_points(points: Vec<(f64, Vec3)>) -> Self {
        MassDistribution {
            discrete: points,
            continuous: Vec::new(),
        }
    }

    pub fn total_mass(&self) -> f64 {
        self.discrete.iter().map(|(m, _)| m).sum::<f64>()
            + self
                .continuous
                .iter()
                .map(|(rho, _, w)| rho * w)
                .sum::<f64>()
    }
}

/// Symmetric positive-semidefinite 6×6 inertia with `m·I` upper-left block.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpatialInertia {
    theta: Mat6,
}

impl SpatialInertia {
    /// Sums point blocks over both measure components:
    /// `Θ = Σ m_i Θ(r_i) + Σ ρ_j w_j Θ(r_j)`.
    pub fn assemble(dist: &MassDistribution) -> Result<SpatialInertia, BodyError> {
        if dist.discrete.is_empty() && dist.continuous.is_empty() {
            return Err(BodyError::EmptyDistribution);
        }
        let mut theta = Mat6::zeros();
        for (m, r) in &dist.discrete {
            assert!(*m >= 0.0, "negative mass");
            theta += *m * point_inertia_block(r);
        }
        for (rho, r, w) in &dist.continuous {
            assert!(*rho >= 0.0 && *w >= 0.0, "negative density or weight");
            theta += rho * w * point_inertia_block(r);
        }
        // symmetrize away accumulation noise
        theta = 0.5 * (theta + theta.transpose());
        Ok(SpatialInertia { theta })
    }

    /// Wraps a precomputed matrix, requiring symmetry.
    pub fn from_matrix(theta: Mat6) -> Result<SpatialInertia, BodyError> {
        if (theta - theta.transpose()).amax() > 1e-10 * theta.amax().max(1.0) {
            return Err(BodyError::SingularInertia(f64::INFINITY));
        }
        Ok(SpatialInertia {
            theta: 0.5 * (theta + theta.transpose()),
        })
    }

    pub fn matrix(&self) -> &Mat6 {
        &self.theta
    }

    pub fn mass(&self) -> f64 {
        (self.theta[(0, 0)] + self.theta[(1, 1)] + self.theta[(2, 2)]) / 3.0
    }

    /// First mass moment `Σ m r` in body coordinates; the lower-left block
    /// of `Θ` is its cross matrix.
    pub fn first_moment(&self) -> Vec3 {
        Vec3::new(self.theta[(5, 1)], self.theta[(3, 2)], self.theta[(4, 0)])
    }

    pub fn condition_number(&self) -> f64 {
        let svd = self.theta.svd(false, false);
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
}

/// Gyroscopic wrench `Φ^wr(V) Θ V`.
pub fn gyroscopic_wrench(theta: &SpatialInertia, v: &Vec6) -> Vec6 {
    phi_matrix(v, ScrewKind::Wrench) * theta.matrix() * v
}

/// Body-frame acceleration from the Newton–Euler balance:
/// `V• = Θ⁻¹ (F − Φ^wr(V) Θ V)`, with `F` reduced at the body origin in
/// body coordinates.
pub fn newton_euler_accel(
    theta: &SpatialInertia,
    v: &Vec6,
    wrench: &Vec6,
) -> Result<Vec6, BodyError> {
    let cond = theta.condition_number();
    if cond > 1e12 {
        return Err(BodyError::SingularInertia(cond));
    }
    let rhs = wrench - gyroscopic_wrench(theta, v);
    theta
        .matrix()
        .lu()
        .solve(&rhs)
        .ok_or(BodyError::SingularInertia(cond))
}
