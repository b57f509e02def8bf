//! Differential operators and integration in the round orthonormal frame.

use std::f64::consts::PI;

use super::field::{ScalarField, SpectralField, SymTensorField, TangentField};
use super::grid::GridSpec;
use super::transform::{analyze_to, synthesize_derivatives};
use crate::error::Result;

/// Grid values of a band-limited field and all its derivatives up to order two.
///
/// φ-derivatives are coordinate derivatives; use [`gradient`](Self::gradient)
/// and [`hessian`](Self::hessian) for frame components.
#[derive(Clone, Debug)]
pub struct Derivatives {
    pub value: ScalarField,
    pub d_theta: ScalarField,
    pub d_phi: ScalarField,
    pub d_theta_phi: ScalarField,
    pub d_phi_phi: ScalarField,
    pub d_theta_theta: ScalarField,
    pub laplacian: ScalarField,
}

impl Derivatives {
    pub fn of(c: &SpectralField, grid: &GridSpec) -> Result<Self> {
        let raw = synthesize_derivatives(c, grid)?;
        let wrap = |v| ScalarField::from_raw(grid.clone(), v);
        Ok(Self {
            value: wrap(raw.value),
            d_theta: wrap(raw.d_theta),
            d_phi: wrap(raw.d_phi),
            d_theta_phi: wrap(raw.d_theta_phi),
            d_phi_phi: wrap(raw.d_phi_phi),
            d_theta_theta: wrap(raw.d_theta_theta),
            laplacian: wrap(raw.laplacian),
        })
    }

    pub fn grid(&self) -> &GridSpec {
        self.value.grid()
    }

    pub fn gradient(&self) -> TangentField {
        let grid = self.grid();
        TangentField {
            theta: self.d_theta.clone(),
            phi: ring_map(grid, |i, k| self.d_phi.values()[k] / grid.sin_theta()[i]),
        }
    }

    pub fn hessian(&self) -> SymTensorField {
        let grid = self.grid();
        let (ct, st) = (grid.cos_theta(), grid.sin_theta());
        let tp = ring_map(grid, |i, k| {
            self.d_theta_phi.values()[k] / st[i] - ct[i] / (st[i] * st[i]) * self.d_phi.values()[k]
        });
        let pp = ring_map(grid, |i, k| {
            self.d_phi_phi.values()[k] / (st[i] * st[i]) + ct[i] / st[i] * self.d_theta.values()[k]
        });
        SymTensorField {
            tt: self.d_theta_theta.clone(),
            tp,
            pp,
        }
    }
}

/// Builds a field from `f(ring index, flat index)`.
pub(crate) fn ring_map(grid: &GridSpec, f: impl Fn(usize, usize) -> f64) -> ScalarField {
    let n_phi = grid.n_phi();
    let values = (0..grid.len()).map(|k| f(k / n_phi, k)).collect();
    ScalarField::from_raw(grid.clone(), values)
}

fn derivatives_of(f: &ScalarField) -> Result<Derivatives> {
    let grid = f.grid();
    let c = analyze_to(f, grid.max_degree())?;
    Derivatives::of(&c, grid)
}

pub fn gradient(f: &ScalarField) -> Result<TangentField> {
    Ok(derivatives_of(f)?.gradient())
}

pub fn laplacian(f: &ScalarField) -> Result<ScalarField> {
    let grid = f.grid();
    let c = analyze_to(f, grid.max_degree())?;
    super::transform::synthesize(&c.laplacian(), grid)
}

pub fn hessian(f: &ScalarField) -> Result<SymTensorField> {
    Ok(derivatives_of(f)?.hessian())
}

/// Quadrature `Σ f w_i 2π/n_phi`, summed ring by ring in a fixed order.
pub fn integrate(f: &ScalarField) -> f64 {
    let grid = f.grid();
    let n_phi = grid.n_phi();
    let mut acc = 0.0;
    for (i, row) in f.values().chunks_exact(n_phi).enumerate() {
        acc += grid.point_weight(i) * row.iter().sum::<f64>();
    }
    acc
}

/// Embedding `x = (sinθ sinφ, sinθ cosφ, cosθ)` of the unit sphere.
pub fn unit_vector(theta: f64, phi: f64) -> [f64; 3] {
    let s = theta.sin();
    [s * phi.sin(), s * phi.cos(), theta.cos()]
}

/// Inverse of [`unit_vector`]; `φ ∈ [0, 2π)`. The input need not be normalized.
pub fn angles_from_vector(x: [f64; 3]) -> (f64, f64) {
    let rho = (x[0] * x[0] + x[1] * x[1]).sqrt();
    let theta = rho.atan2(x[2]);
    let mut phi = x[0].atan2(x[1]);
    if phi < 0.0 {
        phi += 2.0 * PI;
    }
    (theta, phi)
}

/// The coordinate functions `(f_1, f_2, f_3)` on the grid.
pub fn first_harmonics(grid: &GridSpec) -> [ScalarField; 3] {
    [0, 1, 2].map(|k| ScalarField::from_fn(grid, |t, p| unit_vector(t, p)[k]))
}
