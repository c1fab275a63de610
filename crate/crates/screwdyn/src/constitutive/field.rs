//! Sampled-field operators on rectangular lattices.
//!
//! Fields live on a regular grid with spacing `h`; spatial derivatives use
//! second-order central differences in the interior and one-sided
//! three-point stencils at the boundary. The stress divergence follows the
//! row-wise convention `Div T = col{div T¹, div T², div T³}` and is
//! assembled term by term from the constitutive expansion
//!
//! ```text
//! Div T = −grad r0 + (tr U) grad r1 + r1 grad(tr U)
//!       + ½ r2 (Div U + Div Uᵀ) + ½ r3 (Div U − Div Uᵀ)
//!       + ½ (U + Uᵀ) grad r2 + ½ (U − Uᵀ) grad r3
//! ```
//!
//! with the gradient terms dropped for constant coefficients.

use super::{BasisTag, RheologyCoeffs};
use crate::spatial::{Mat3, Vec3};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum FieldError {
    #[error("grid too small: need at least 3 samples per dimension, got {0}×{1}×{2}")]
    GridTooSmall(usize, usize, usize),
    #[error("field length {0} does not match grid size {1}")]
    LengthMismatch(usize, usize),
}

/// Rectangular lattice: `nx × ny × nz` points with spacing `h`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub nx: usize,
    pub ny: usize,
    pub nz: usize,
    pub h: f64,
    pub origin: Vec3,
}

impl Grid {
    pub fn new(nx: usize, ny: usize, nz: usize, h: f64, origin: Vec3) -> Result<Grid, FieldError> {
        if nx < 3 || ny < 3 || nz < 3 {
            return Err(FieldError::GridTooSmall(nx, ny, nz));
        }
        Ok(Grid {
            nx,
            ny,
            nz,
            h,
            origin,
        })
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny * self.nz
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.nx * (j + self.ny * k)
    }

    pub fn point(&self, i: usize, j: usize, k: usize) -> Vec3 {
        self.origin + self.h * Vec3::new(i as f64, j as f64, k as f64)
    }

    /// Iterates `(i, j, k)` in storage order (x fastest).
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, usize)> + '_ {
        let (nx, ny, nz) = (self.nx, self.ny, self.nz);
        (0..nz).flat_map(move |k| (0..ny).flat_map(move |j| (0..nx).map(move |i| (i, j, k))))
    }
}

#[derive(Debug, Clone)]
pub struct Field<T> {
    pub grid: Grid,
    pub data: Vec<T>,
}

pub type ScalarField = Field<f64>;
pub type VectorField = Field<Vec3>;
pub type MatrixField = Field<Mat3>;

impl<T: Copy> Field<T> {
    pub fn new(grid: Grid, data: Vec<T>) -> Result<Field<T>, FieldError> {
        if data.len() != grid.len() {
            return Err(FieldError::LengthMismatch(data.len(), grid.len()));
        }
        Ok(Field { grid, data })
    }

    pub fn from_fn(grid: Grid, f: impl Fn(Vec3) -> T) -> Field<T> {
        let data = grid.iter().map(|(i, j, k)| f(grid.point(i, j, k))).collect();
        Field { grid, data }
    }

    pub fn at(&self, i: usize, j: usize, k: usize) -> T {
        self.data[self.grid.index(i, j, k)]
    }
}

/// Second-order derivative stencil along one axis: central in the
/// interior, three-point one-sided at the faces.
fn d_axis<T, F>(field: &Field<T>, get: F, i: usize, j: usize, k: usize, axis: usize) -> f64
where
    T: Copy,
    F: Fn(T) -> f64,
{
    let g = &field.grid;
    let n = [g.nx, g.ny, g.nz][axis];
    let pos = [i, j, k][axis];
    let sample = |p: usize| -> f64 {
        let (mut ii, mut jj, mut kk) = (i, j, k);
        match axis {
            0 => ii = p,
            1 => jj = p,
            _ => kk = p,
        }
        get(field.at(ii, jj, kk))
    };
    let h = g.h;
    if pos == 0 {
        (-3.0 * sample(0) + 4.0 * sample(1) - sample(2)) / (2.0 * h)
    } else if pos == n - 1 {
        (3.0 * sample(n - 1) - 4.0 * sample(n - 2) + sample(n - 3)) / (2.0 * h)
    } else {
        (sample(pos + 1) - sample(pos - 1)) / (2.0 * h)
    }
}

/// Gradient of a scalar field.
pub fn gradient(f: &ScalarField) -> VectorField {
    let grid = f.grid;
    let data = grid
        .iter()
        .map(|(i, j, k)| {
            Vec3::new(
                d_axis(f, |v| v, i, j, k, 0),
                d_axis(f, |v| v, i, j, k, 1),
                d_axis(f, |v| v, i, j, k, 2),
            )
        })
        .collect();
    VectorField { grid, data }
}

/// Scalar divergence of a vector field.
pub fn divergence(f: &VectorField) -> ScalarField {
    let grid = f.grid;
    let data = grid
        .iter()
        .map(|(i, j, k)| {
            d_axis(f, |v| v.x, i, j, k, 0)
                + d_axis(f, |v| v.y, i, j, k, 1)
                + d_axis(f, |v| v.z, i, j, k, 2)
        })
        .collect();
    ScalarField { grid, data }
}

/// Row-wise divergence of a matrix field:
/// `(Div M)_j = Σ_k ∂M_{jk}/∂x_k`.
pub fn divergence_rows(f: &MatrixField) -> VectorField {
    let grid = f.grid;
    let data = grid
        .iter()
        .map(|(i, j, k)| {
            Vec3::from_fn(|row, _| {
                d_axis(f, |m| m[(row, 0)], i, j, k, 0)
                    + d_axis(f, |m| m[(row, 1)], i, j, k, 1)
                    + d_axis(f, |m| m[(row, 2)], i, j, k, 2)
            })
        })
        .collect();
    VectorField { grid, data }
}

/// Spatially varying rheological coefficients: per-point samples aligned
/// with the strain-field grid. `None` means the corresponding constant
/// from the base coefficients applies everywhere.
#[derive(Debug, Clone, Default)]
pub struct CoefficientFields {
    pub r0: Option<ScalarField>,
    pub r1: Option<ScalarField>,
    pub r2: Option<ScalarField>,
    pub r3: Option<ScalarField>,
}

fn coeff_field(
    grid: Grid,
    sample: &Option<ScalarField>,
    constant: f64,
) -> ScalarField {
    match sample {
        Some(f) => f.clone(),
        None => ScalarField {
            grid,
            data: vec![constant; grid.len()],
        },
    }
}

/// Divergence of the stress field induced by `U` under the sym/ant
/// constitutive expansion, assembled term by term. Gradient-of-coefficient
/// terms contribute only where coefficient fields are supplied; transpose-
/// basis coefficients are re-based first.
pub fn div_stress_field(
    u: &MatrixField,
    coeffs: &RheologyCoeffs,
    fields: &CoefficientFields,
) -> Result<VectorField, FieldError> {
    let grid = u.grid;
    let (c0, c1, c2r, c3r) = (
        coeffs.r0.as_constant().unwrap_or(0.0),
        coeffs.r1.as_constant().unwrap_or(0.0),
        coeffs.r2.as_constant().unwrap_or(0.0),
        coeffs.r3.as_constant().unwrap_or(0.0),
    );
    let (c2, c3) = match coeffs.basis {
        BasisTag::SymAnt => (c2r, c3r),
        BasisTag::Transpose => (c2r + c3r, c2r - c3r),
    };
    let r0 = coeff_field(grid, &fields.r0, c0);
    let r1 = coeff_field(grid, &fields.r1, c1);
    let r2 = coeff_field(grid, &fields.r2, c2);
    let r3 = coeff_field(grid, &fields.r3, c3);

    let grad_r0 = gradient(&r0);
    let grad_r1 = gradient(&r1);
    let grad_r2 = gradient(&r2);
    let grad_r3 = gradient(&r3);

    let trace_u = ScalarField {
        grid,
        data: u.data.iter().map(|m| m.trace()).collect(),
    };
    let grad_tr = gradient(&trace_u);
    let div_u = divergence_rows(u);
    let u_t = MatrixField {
        grid,
        data: u.data.iter().map(|m| m.transpose()).collect(),
    };
    let div_ut = divergence_rows(&u_t);

    let data = grid
        .iter()
        .map(|(i, j, k)| {
            let idx = grid.index(i, j, k);
            let um = u.data[idx];
            let sym = 0.5 * (um + um.transpose());
            let ant = 0.5 * (um - um.transpose());
            -grad_r0.data[idx]
                + um.trace() * grad_r1.data[idx]
                + r1.data[idx] * grad_tr.data[idx]
                + 0.5 * r2.data[idx] * (div_u.data[idx] + div_ut.data[idx])
                + 0.5 * r3.data[idx] * (div_u.data[idx] - div_ut.data[idx])
                + sym * grad_r2.data[idx]
                + ant * grad_r3.data[idx]
        })
        .collect();
    Ok(VectorField { grid, data })
}

/// Pointwise stress field from the constitutive relation at each sample.
pub fn stress_field(u: &MatrixField, coeffs: &RheologyCoeffs) -> MatrixField {
    MatrixField {
        grid: u.grid,
        data: u
            .data
            .iter()
            .map(|m| super::constitutive_apply(coeffs, m))
            .collect(),
    }
}

/// Pointwise residuals of the continuum balance laws on sampled fields:
/// momentum `ρ v• − ρ g − Div T` (with `v•` from two consecutive time
/// samples) and continuity `ρ• + div(ρ v)`.
#[allow(clippy::too_many_arguments)]
pub fn momentum_residual(
    rho_prev: &ScalarField,
    rho_next: &ScalarField,
    v_prev: &VectorField,
    v_next: &VectorField,
    stress: &MatrixField,
    gravity: &Vec3,
    dt: f64,
) -> Result<(VectorField, ScalarField), FieldError> {
    let grid = stress.grid;
    let div_t = divergence_rows(stress);
    let momentum = grid
        .iter()
        .map(|(i, j, k)| {
            let idx = grid.index(i, j, k);
            let rho = rho_next.data[idx];
            let vdot = (v_next.data[idx] - v_prev.data[idx]) / dt;
            rho * vdot - rho * gravity - div_t.data[idx]
        })
        .collect();

    let rho_v = VectorField {
        grid,
        data: grid
            .iter()
            .map(|(i, j, k)| {
                let idx = grid.index(i, j, k);
                rho_next.data[idx] * v_next.data[idx]
            })
            .collect(),
    };
    let div_rho_v = divergence(&rho_v);
    let continuity = grid
        .iter()
        .map(|(i, j, k)| {
            let idx = grid.index(i, j, k);
            (rho_next.data[idx] - rho_prev.data[idx]) / dt + div_rho_v.data[idx]
        })
        .collect();
    Ok((
        VectorField {
            grid,
            data: momentum,
        },
        ScalarField {
            grid,
            data: continuity,
        },
    ))
}
