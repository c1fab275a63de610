//! Quasi-linear isotropic constitutive relations.
//!
//! The stress matrix is a linear combination of an isotropic basis built
//! from the strain matrix (or its rate) `U`:
//!
//! ```text
//! T = −r0 I + r1 (tr U) I + r2 E2 + r3 E3
//! ```
//!
//! with two basis conventions: `E2 = sym U, E3 = ant U`, or `E2 = U,
//! E3 = Uᵀ`. Rheological coefficients are rotation-invariant scalars,
//! possibly functions of the matrix invariants of `U`. The relation is
//! invertible (the continuum is correct) iff `(r1 tr I + r2) r2 r3 ≠ 0`
//! in the sym/ant convention; no symmetry is imposed on `T`.

pub mod field;

use crate::spatial::Mat3;
use std::sync::Arc;
use thiserror::Error;

pub type Mat2 = nalgebra::Matrix2<f64>;

#[derive(Debug, Error)]
pub enum ConstitutiveError {
    #[error("constitutive relation is not invertible: (r1·trI + r2)·r2·r3 = {0:.3e}")]
    Incorrect(f64),
    #[error("moduli denominators vanish: r1(trI − 1) + r2 = {0:.3e}")]
    DegenerateCoeffs(f64),
    #[error("matrix is degenerate for the 2-d basis (scalar or skew multiple)")]
    DegenerateU,
    #[error("inversion requires constant coefficients")]
    InvariantCoefficients,
}

/// Which four-matrix basis the coefficients weight.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BasisTag {
    /// `E2 = sym U`, `E3 = ant U`.
    SymAnt,
    /// `E2 = U`, `E3 = Uᵀ`.
    Transpose,
}

/// Rotation-invariant scalar coefficient: a constant or a function of the
/// principal invariants `(tr U, ½(tr²U − tr U²), det U)`.
#[derive(Clone)]
pub enum Coefficient {
    Constant(f64),
    OfInvariants(Arc<dyn Fn(f64, f64, f64) -> f64 + Send + Sync>),
}

impl Coefficient {
    pub fn eval(&self, inv: (f64, f64, f64)) -> f64 {
        match self {
            Coefficient::Constant(c) => *c,
            Coefficient::OfInvariants(f) => f(inv.0, inv.1, inv.2),
        }
    }

    pub fn as_constant(&self) -> Option<f64> {
        match self {
            Coefficient::Constant(c) => Some(*c),
            Coefficient::OfInvariants(_) => None,
        }
    }
}

impl std::fmt::Debug for Coefficient {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Coefficient::Constant(c) => write!(f, "Constant({c})"),
            Coefficient::OfInvariants(_) => write!(f, "OfInvariants(..)"),
        }
    }
}

/// Rheological coefficients `(r0, r1, r2, r3)` over a chosen basis.
/// `r0` is the Pascal pressure, stored positive for fluids and applied as
/// `−r0·I`.
#[derive(Debug, Clone)]
pub struct RheologyCoeffs {
    pub r0: Coefficient,
    pub r1: Coefficient,
    pub r2: Coefficient,
    pub r3: Coefficient,
    pub basis: BasisTag,
}

impl RheologyCoeffs {
    pub fn constant(r0: f64, r1: f64, r2: f64, r3: f64, basis: BasisTag) -> Self {
        RheologyCoeffs {
            r0: Coefficient::Constant(r0),
            r1: Coefficient::Constant(r1),
            r2: Coefficient::Constant(r2),
            r3: Coefficient::Constant(r3),
            basis,
        }
    }

    /// Ideal fluid: pressure only.
    pub fn ideal_fluid(pressure: f64) -> Self {
        RheologyCoeffs::constant(pressure, 0.0, 0.0, 0.0, BasisTag::SymAnt)
    }

    /// Navier–Stokes–Lamé type: no antisymmetric response (`r3 = 0`),
    /// hence not invertible.
    pub fn navier_stokes_lame(pressure: f64, r1: f64, r2: f64) -> Self {
        RheologyCoeffs::constant(pressure, r1, r2, 0.0, BasisTag::SymAnt)
    }

    fn eval(&self, inv: (f64, f64, f64)) -> (f64, f64, f64, f64) {
        (
            self.r0.eval(inv),
            self.r1.eval(inv),
            self.r2.eval(inv),
            self.r3.eval(inv),
        )
    }

    fn constants(&self) -> Result<(f64, f64, f64, f64), ConstitutiveError> {
        match (
            self.r0.as_constant(),
            self.r1.as_constant(),
            self.r2.as_constant(),
            self.r3.as_constant(),
        ) {
            (Some(a), Some(b), Some(c), Some(d)) => Ok((a, b, c, d)),
            _ => Err(ConstitutiveError::InvariantCoefficients),
        }
    }

    /// Sym/ant-equivalent `(r2, r3)`: the transpose basis re-bases as
    /// `r2 U + r3 Uᵀ = (r2+r3) sym U + (r2−r3) ant U`.
    fn sym_ant_equivalent(&self, r2: f64, r3: f64) -> (f64, f64) {
        match self.basis {
            BasisTag::SymAnt => (r2, r3),
            BasisTag::Transpose => (r2 + r3, r2 - r3),
        }
    }
}

pub fn matrix_invariants(u: &Mat3) -> (f64, f64, f64) {
    let i1 = u.trace();
    let i2 = 0.5 * (i1 * i1 - (u * u).trace());
    (i1, i2, u.determinant())
}

pub fn matrix_invariants_2d(u: &Mat2) -> (f64, f64, f64) {
    (u.trace(), u.determinant(), 0.0)
}

/// The four basis matrices `E0..E3` for the selected convention.
pub fn isotropic_basis(u: &Mat3, tag: BasisTag) -> [Mat3; 4] {
    let e0 = Mat3::identity();
    let e1 = u.trace() * Mat3::identity();
    match tag {
        BasisTag::SymAnt => [
            e0,
            e1,
            0.5 * (u + u.transpose()),
            0.5 * (u - u.transpose()),
        ],
        BasisTag::Transpose => [e0, e1, *u, u.transpose()],
    }
}

/// Stress from strain (or strain rate): `T = −r0 E0 + r1 E1 + r2 E2 + r3 E3`.
pub fn constitutive_apply(r: &RheologyCoeffs, u: &Mat3) -> Mat3 {
    let (r0, r1, r2, r3) = r.eval(matrix_invariants(u));
    let [e0, e1, e2, e3] = isotropic_basis(u, r.basis);
    -r0 * e0 + r1 * e1 + r2 * e2 + r3 * e3
}

/// 2-d specialization of the same four-term structure (`I` is 2×2).
pub fn constitutive_apply_2d(r: &RheologyCoeffs, u: &Mat2) -> Mat2 {
    let (r0, r1, r2, r3) = r.eval(matrix_invariants_2d(u));
    let e1 = u.trace() * Mat2::identity();
    let (e2, e3) = match r.basis {
        BasisTag::SymAnt => (0.5 * (u + u.transpose()), 0.5 * (u - u.transpose())),
        BasisTag::Transpose => (*u, u.transpose()),
    };
    -r0 * Mat2::identity() + r1 * e1 + r2 * e2 + r3 * e3
}

fn invert_coeffs(
    r: &RheologyCoeffs,
    tr_i: f64,
) -> Result<(f64, f64, f64, f64), ConstitutiveError> {
    let (r0, r1, r2_raw, r3_raw) = r.constants()?;
    let (r2, r3) = r.sym_ant_equivalent(r2_raw, r3_raw);
    let product = (r1 * tr_i + r2) * r2 * r3;
    if product.abs() <= 1e-12 {
        return Err(ConstitutiveError::Incorrect(product));
    }
    Ok((r0, r1, r2, r3))
}

fn inverse_weights(r0: f64, r1: f64, r2: f64, r3: f64, tr_i: f64) -> (f64, f64, f64, f64) {
    let n0 = r0 / (r1 * tr_i + r2);
    let n1 = -r1 / (r2 * (r1 * tr_i + r2));
    let n2 = 1.0 / r2;
    let n3 = 1.0 / r3;
    (n0, n1, n2, n3)
}

/// Inverse map of the correct continuum:
/// `U = n0 I + n1 (tr T) I + n2 sym T + n3 ant T`. Constant coefficients
/// only; transpose-basis coefficients are re-based first.
pub fn constitutive_invert(r: &RheologyCoeffs, t: &Mat3) -> Result<Mat3, ConstitutiveError> {
    let (r0, r1, r2, r3) = invert_coeffs(r, 3.0)?;
    let (n0, n1, n2, n3) = inverse_weights(r0, r1, r2, r3, 3.0);
    let sym = 0.5 * (t + t.transpose());
    let ant = 0.5 * (t - t.transpose());
    Ok(n0 * Mat3::identity() + n1 * t.trace() * Mat3::identity() + n2 * sym + n3 * ant)
}

/// 2-d inverse with `tr I = 2`.
pub fn constitutive_invert_2d(r: &RheologyCoeffs, t: &Mat2) -> Result<Mat2, ConstitutiveError> {
    let (r0, r1, r2, r3) = invert_coeffs(r, 2.0)?;
    let (n0, n1, n2, n3) = inverse_weights(r0, r1, r2, r3, 2.0);
    let sym = 0.5 * (t + t.transpose());
    let ant = 0.5 * (t - t.transpose());
    Ok(n0 * Mat2::identity() + n1 * t.trace() * Mat2::identity() + n2 * sym + n3 * ant)
}

/// The skew unit `Ĩ = [0 −1; 1 0]`.
pub fn skew_unit_2d() -> Mat2 {
    Mat2::new(0.0, -1.0, 1.0, 0.0)
}

/// `pf U = tr(Ĩ U)`.
pub fn pfaffian_2d(u: &Mat2) -> f64 {
    (skew_unit_2d() * u).trace()
}

/// Full 2-d constitutive relation including the skew-unit terms:
/// `T = −r0 I + r̃0 Ĩ + r1 (tr U) I + r̃1 (pf U) Ĩ + r2 U + r3 Uᵀ
///  + r4 ĨU + r5 ĨUĨ`.
#[derive(Debug, Clone, Copy)]
pub struct Coeffs2dFull {
    pub r0: f64,
    pub r0_tilde: f64,
    pub r1: f64,
    pub r1_tilde: f64,
    pub r2: f64,
    pub r3: f64,
    pub r4: f64,
    pub r5: f64,
}

pub fn constitutive_apply_2d_full(c: &Coeffs2dFull, u: &Mat2) -> Mat2 {
    let i = Mat2::identity();
    let it = skew_unit_2d();
    -c.r0 * i
        + c.r0_tilde * it
        + c.r1 * u.trace() * i
        + c.r1_tilde * pfaffian_2d(u) * it
        + c.r2 * u
        + c.r3 * u.transpose()
        + c.r4 * (it * u)
        + c.r5 * (it * u * it)
}

/// Rank report for the 2-d matrix manifold generated by
/// `{U, Uᵀ, ĨU, ĨUᵀ, UĨ, UᵀĨ, ĨUĨ, ĨUᵀĨ}`.
#[derive(Debug, Clone, Copy)]
pub struct RankReport2d {
    /// Rank of the vectorized span of `{E2, E3, E4, E5}`.
    pub rank: usize,
    /// Largest least-squares residual of the remaining products against
    /// that span.
    pub max_residual: f64,
}

/// Verifies that `{E2 = U, E3 = Uᵀ, E4 = ĨU, E5 = ĨUᵀ}` is a basis for a
/// generic `U` and that the remaining products lie in its span.
pub fn basis_independence_2d(u: &Mat2) -> Result<RankReport2d, ConstitutiveError> {
    let it = skew_unit_2d();
    let e = [
        *u,
        u.transpose(),
        it * u,
        it * u.transpose(),
        u * it,
        u.transpose() * it,
        it * u * it,
        it * u.transpose() * it,
    ];
    let vec4 = |m: &Mat2| nalgebra::Vector4::new(m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]);
    let span =
        nalgebra::Matrix4::from_columns(&[vec4(&e[0]), vec4(&e[1]), vec4(&e[2]), vec4(&e[3])]);
    let svd = span.svd(true, true);
    let smax = svd.singular_values.max();
    let rank = svd
        .singular_values
        .iter()
        .filter(|&&s| s > 1e-10 * smax.max(1.0))
        .count();
    if rank < 4 {
        return Err(ConstitutiveError::DegenerateU);
    }
    let mut max_residual: f64 = 0.0;
    for extra in &e[4..] {
        let rhs = vec4(extra);
        let coeffs = svd
            .solve(&rhs, 1e-12)
            .map_err(|_| ConstitutiveError::DegenerateU)?;
        let resid = (span * coeffs - rhs).norm();
        max_residual = max_residual.max(resid);
    }
    Ok(RankReport2d { rank, max_residual })
}

/// Elastic moduli in the sym/ant convention.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moduli {
    pub young: f64,
    pub shear: f64,
    pub poisson: f64,
}

/// Moduli from constant `r1, r2`; the dimension enters through `tr I`.
///
/// `ε = r2(r1 trI + r2)/(r1(trI−1) + r2)`, `μ = r2/2`,
/// `ν = r1/(r1(trI−1) + r2)`, and `ε = 2μ(1+ν)` identically.
pub fn moduli(r: &RheologyCoeffs, dim: usize) -> Result<Moduli, ConstitutiveError> {
    assert!(dim == 2 || dim == 3, "dimension must be 2 or 3");
    let (_, r1, r2_raw, r3_raw) = r.constants()?;
    let (r2, _) = r.sym_ant_equivalent(r2_raw, r3_raw);
    let tr_i = dim as f64;
    let denom = r1 * (tr_i - 1.0) + r2;
    if denom.abs() <= 1e-12 {
        return Err(ConstitutiveError::DegenerateCoeffs(denom));
    }
    Ok(Moduli {
        young: r2 * (r1 * tr_i + r2) / denom,
        shear: r2 / 2.0,
        poisson: r1 / denom,
    })
}

/// Strain matrix and its rate at a material point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StrainState {
    pub z: Mat3,
    pub zdot: Mat3,
}

impl StrainState {
    pub fn initial() -> Self {
        StrainState {
            z: Mat3::identity(),
            zdot: Mat3::zeros(),
        }
    }
}

/// Integrates the strain equation exactly as stated: `Z•(t) = G(t)` with
/// `Z(t0) = I`, so `Z(t) = I + ∫ G dt'` by composite Simpson quadrature.
/// Note this is linear accumulation of the gradient, not the classical
/// multiplicative flow: a rigid rotation field `v = ω×r` yields
/// `Z = I + ω^× (t − t0)`.
pub fn strain_integrate(
    gradient: impl Fn(f64) -> Mat3,
    t0: f64,
    t1: f64,
    steps: usize,
) -> StrainState {
    let n = steps.max(1);
    let h = (t1 - t0) / n as f64;
    let mut acc = Mat3::zeros();
    for i in 0..n {
        let a = t0 + i as f64 * h;
        acc += h / 6.0 * (gradient(a) + 4.0 * gradient(a + 0.5 * h) + gradient(a + h));
    }
    StrainState {
        z: Mat3::identity() + acc,
        zdot: gradient(t1),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rotation::rot_axis_angle;
    use crate::spatial::{cross_matrix, Vec3};
    use rand::Rng;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng() -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(0xc057)
    }

    fn rand_mat3(r: &mut ChaCha8Rng) -> Mat3 {
        Mat3::from_fn(|_, _| r.random_range(-1.0..1.0))
    }

    fn rand_mat2(r: &mut ChaCha8Rng) -> Mat2 {
        Mat2::from_fn(|_, _| r.random_range(-1.0..1.0))
    }

    #[test]
    fn basis_cases() {
        let [e0, e1, e2, e3] = isotropic_basis(&Mat3::identity(), BasisTag::SymAnt);
        assert_eq!(e0, Mat3::identity());
        assert_eq!(e1, 3.0 * Mat3::identity());
        assert_eq!(e2, Mat3::identity());
        assert_eq!(e3, Mat3::zeros());

        let skew = cross_matrix(&Vec3::new(1.0, -2.0, 0.5));
        let [_, _, e2, e3] = isotropic_basis(&skew, BasisTag::SymAnt);
        assert_eq!(e2, Mat3::zeros());
        assert_eq!(e3, skew);
        let [_, _, e2t, e3t] = isotropic_basis(&skew, BasisTag::Transpose);
        assert_eq!(e2t, skew);
        assert_eq!(e3t, skew.transpose());
    }

    #[test]
    fn basis_is_rotation_equivariant() {
        // C E_i(U) Cᵀ = E_i(C U Cᵀ) for both conventions
        let mut r = rng();
        for tag in [BasisTag::SymAnt, BasisTag::Transpose] {
            for _ in 0..50 {
                let u = rand_mat3(&mut r);
                let axis = Vec3::new(
                    r.random_range(-1.0..1.0),
                    r.random_range(-1.0..1.0),
                    r.random_range(-1.0..1.0),
                )
                .normalize();
                let c = rot_axis_angle(&axis, r.random_range(-3.0..3.0));
                let cm = c.matrix();
                let rotated = isotropic_basis(&(cm * u * cm.transpose()), tag);
                let original = isotropic_basis(&u, tag);
                for i in 0..4 {
                    let lhs = cm * original[i] * cm.transpose();
                    assert!((lhs - rotated[i]).amax() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn apply_cases() {
        // r = (0, 1, 1, 0) on U = I in the sym/ant basis: T = 3I + I = 4I
        let r = RheologyCoeffs::constant(0.0, 1.0, 1.0, 0.0, BasisTag::SymAnt);
        let t = constitutive_apply(&r, &Mat3::identity());
        assert!((t - 4.0 * Mat3::identity()).amax() < 1e-15);

        // ideal fluid preset: T = −p I
        let fluid = RheologyCoeffs::ideal_fluid(2.5);
        let t = constitutive_apply(&fluid, &rand_mat3(&mut rng()));
        assert!((t + 2.5 * Mat3::identity()).amax() < 1e-15);

        // zero strain: T = −r0 I
        let r = RheologyCoeffs::constant(1.3, 0.7, 0.4, 0.2, BasisTag::SymAnt);
        let t = constitutive_apply(&r, &Mat3::zeros());
        assert!((t + 1.3 * Mat3::identity()).amax() < 1e-15);
    }

    #[test]
    fn apply_is_isotropic_with_invariant_coefficients() {
        let mut r = rng();
        let coeffs = RheologyCoeffs {
            r0: Coefficient::Constant(0.4),
            r1: Coefficient::OfInvariants(Arc::new(|i1, _, _| 0.5 + 0.1 * i1 * i1)),
            r2: Coefficient::OfInvariants(Arc::new(|_, i2, _| 1.0 + 0.2 * i2)),
            r3: Coefficient::OfInvariants(Arc::new(|_, _, i3| 0.7 + 0.05 * i3)),
            basis: BasisTag::SymAnt,
        };
        for _ in 0..100 {
            let u = rand_mat3(&mut r);
            let axis = Vec3::new(
                r.random_range(-1.0..1.0),
                r.random_range(-1.0..1.0),
                r.random_range(-1.0..1.0),
            )
            .normalize();
            let c = rot_axis_angle(&axis, r.random_range(-3.0..3.0));
            let cm = c.matrix();
            let lhs = constitutive_apply(&coeffs, &(cm * u * cm.transpose()));
            let rhs = cm * constitutive_apply(&coeffs, &u) * cm.transpose();
            assert!((lhs - rhs).amax() < 1e-10);
        }
    }

    #[test]
    fn invert_round_trip() {
        let mut rr = rng();
        let r = RheologyCoeffs::constant(1.0, 2.0, 3.0, 4.0, BasisTag::SymAnt);
        for _ in 0..200 {
            let u = rand_mat3(&mut rr);
            let t = constitutive_apply(&r, &u);
            let back = constitutive_invert(&r, &t).unwrap();
            assert!((back - u).amax() < 1e-12 * u.amax().max(1.0));

            let u2 = rand_mat2(&mut rr);
            let t2 = constitutive_apply_2d(&r, &u2);
            let back2 = constitutive_invert_2d(&r, &t2).unwrap();
            assert!((back2 - u2).amax() < 1e-12 * u2.amax().max(1.0));
        }
    }

    #[test]
    fn invert_round_trip_transpose_basis() {
        let mut rr = rng();
        let r = RheologyCoeffs::constant(0.5, 1.0, 3.0, 1.0, BasisTag::Transpose);
        for _ in 0..100 {
            let u = rand_mat3(&mut rr);
            let t = constitutive_apply(&r, &u);
            let back = constitutive_invert(&r, &t).unwrap();
            assert!((back - u).amax() < 1e-12 * u.amax().max(1.0));
        }
    }

    #[test]
    fn zero_antisymmetric_response_is_incorrect() {
        let r = RheologyCoeffs::navier_stokes_lame(1.0, 2.0, 3.0);
        let err = constitutive_invert(&r, &Mat3::identity()).unwrap_err();
        assert!(matches!(err, ConstitutiveError::Incorrect(_)));
    }

    #[test]
    fn pressure_only_stress_inverts_to_zero_strain() {
        let r = RheologyCoeffs::constant(1.5, 2.0, 3.0, 4.0, BasisTag::SymAnt);
        let t = -1.5 * Mat3::identity();
        let u = constitutive_invert(&r, &t).unwrap();
        assert!(u.amax() < 1e-14);
    }

    #[test]
    fn full_2d_relation_cases() {
        // pf(I) = 0, pf(Ĩ) = tr(Ĩ²) = −2
        assert_eq!(pfaffian_2d(&Mat2::identity()), 0.0);
        assert_eq!(pfaffian_2d(&skew_unit_2d()), -2.0);

        let c = Coeffs2dFull {
            r0: 0.3,
            r0_tilde: 0.2,
            r1: 0.5,
            r1_tilde: 0.1,
            r2: 0.7,
            r3: 0.4,
            r4: 0.6,
            r5: 0.9,
        };
        // termwise hand evaluation at U = I: tr U = 2, pf U = 0, ĨIĨ = −I
        let t = constitutive_apply_2d_full(&c, &Mat2::identity());
        let expected = (-c.r0 + 2.0 * c.r1 + c.r2 + c.r3 - c.r5) * Mat2::identity()
            + (c.r0_tilde + c.r4) * skew_unit_2d();
        assert!((t - expected).amax() < 1e-15);

        // zero U with no skew pressure: T = −r0 I
        let c0 = Coeffs2dFull { r0_tilde: 0.0, ..c };
        let t = constitutive_apply_2d_full(&c0, &Mat2::zeros());
        assert!((t + c.r0 * Mat2::identity()).amax() < 1e-15);
    }

    #[test]
    fn generic_2d_matrix_spans_rank_four() {
        let mut r = rng();
        for _ in 0..50 {
            let u = rand_mat2(&mut r);
            // skip near-degenerate draws
            if (u - u.trace() / 2.0 * Mat2::identity()).amax() < 0.1 {
                continue;
            }
            match basis_independence_2d(&u) {
                Ok(report) => {
                    assert_eq!(report.rank, 4);
                    assert!(report.max_residual < 1e-10);
                }
                Err(ConstitutiveError::DegenerateU) => {}
                Err(e) => panic!("unexpected error {e:?}"),
            }
        }
        // scalar multiples of I are degenerate: E2 = E3
        assert!(matches!(
            basis_independence_2d(&Mat2::identity()),
            Err(ConstitutiveError::DegenerateU)
        ));
    }

    #[test]
    fn skew_conjugation_stays_in_span() {
        // ĨUĨ expands exactly in the four-matrix basis
        let mut r = rng();
        for _ in 0..20 {
            let u = rand_mat2(&mut r) + 2.0 * Mat2::new(0.0, 1.0, 0.0, 0.0);
            if let Ok(report) = basis_independence_2d(&u) {
                assert!(report.max_residual < 1e-12);
            }
        }
    }

    #[test]
    fn moduli_cases() {
        let r = RheologyCoeffs::constant(0.0, 1.0, 2.0, 0.0, BasisTag::SymAnt);
        let m = moduli(&r, 3).unwrap();
        assert!((m.young - 2.5).abs() < 1e-15);
        assert!((m.shear - 1.0).abs() < 1e-15);
        assert!((m.poisson - 0.25).abs() < 1e-15);
        assert!((m.young - 2.0 * m.shear * (1.0 + m.poisson)).abs() < 1e-15);

        // r1 = 0: ν = 0 and ε = r2 = 2μ
        let r = RheologyCoeffs::constant(0.0, 0.0, 2.0, 0.0, BasisTag::SymAnt);
        let m = moduli(&r, 3).unwrap();
        assert_eq!(m.poisson, 0.0);
        assert_eq!(m.young, 2.0);
        assert_eq!(m.young, 2.0 * m.shear);
    }

    #[test]
    fn young_shear_poisson_identity_holds() {
        let mut rr = rng();
        for dim in [2usize, 3] {
            for _ in 0..1000 {
                let r1 = rr.random_range(-2.0..2.0);
                let r2 = rr.random_range(0.1..3.0);
                let r = RheologyCoeffs::constant(0.0, r1, r2, 1.0, BasisTag::SymAnt);
                match moduli(&r, dim) {
                    Ok(m) => {
                        let lhs = m.young;
                        let rhs = 2.0 * m.shear * (1.0 + m.poisson);
                        assert!(
                            (lhs - rhs).abs() <= 1e-15 * lhs.abs().max(1.0),
                            "identity violated: {lhs} vs {rhs}"
                        );
                    }
                    Err(ConstitutiveError::DegenerateCoeffs(_)) => {}
                    Err(e) => panic!("unexpected {e:?}"),
                }
            }
        }
    }

    #[test]
    fn degenerate_moduli_denominator_errors() {
        // r1(trI − 1) + r2 = 0 at r1 = 1, r2 = −2, dim 3
        let r = RheologyCoeffs::constant(0.0, 1.0, -2.0, 1.0, BasisTag::SymAnt);
        assert!(matches!(
            moduli(&r, 3),
            Err(ConstitutiveError::DegenerateCoeffs(_))
        ));
    }

    #[test]
    fn strain_integration_cases() {
        // zero field: Z = I forever
        let s = strain_integrate(|_| Mat3::zeros(), 0.0, 5.0, 100);
        assert_eq!(s.z, Mat3::identity());

        // constant gradient: Z(t) = I + G (t − t0) exactly
        let g = Mat3::new(0.1, 0.2, 0.0, -0.3, 0.05, 0.0, 0.0, 0.4, -0.2);
        let s = strain_integrate(|_| g, 1.0, 3.0, 64);
        assert!((s.z - (Mat3::identity() + 2.0 * g)).amax() < 1e-13);
        assert_eq!(s.zdot, g);

        // rigid rotation field v = ω×r: the stated linear accumulation
        // gives Z = I + ω^× (t−t0), not the orthogonal matrix of the
        // classical multiplicative strain flow
        let w = Vec3::new(0.0, 0.0, 1.2);
        let s = strain_integrate(|_| cross_matrix(&w), 0.0, 1.0, 64);
        assert!((s.z - (Mat3::identity() + cross_matrix(&w))).amax() < 1e-13);
        let ortho_defect = (s.z.transpose() * s.z - Mat3::identity()).amax();
        assert!(ortho_defect > 0.5, "linear accumulation is not orthogonal");
    }
}
