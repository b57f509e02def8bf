//! Grid-valued and spectral fields on the round sphere.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::grid::GridSpec;
use crate::error::{Error, Result};

/// Real function sampled on a [`GridSpec`], stored row-major in θ.
#[derive(Clone, Debug)]
pub struct ScalarField {
    grid: GridSpec,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(grid: GridSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::ShapeMismatch {
                expected: grid.len(),
                actual: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("non-finite field value".into()));
        }
        Ok(Self { grid, values })
    }

    /// Values are trusted to be finite and of the right length.
    pub(crate) fn from_raw(grid: GridSpec, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Self { grid, values }
    }

    pub fn constant(grid: &GridSpec, value: f64) -> Self {
        Self::from_raw(grid.clone(), vec![value; grid.len()])
    }

    pub fn from_fn(grid: &GridSpec, f: impl Fn(f64, f64) -> f64) -> Self {
        let values = grid.points().map(|(t, p)| f(t, p)).collect();
        Self::from_raw(grid.clone(), values)
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.grid.n_phi() + j]
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self::from_raw(self.grid.clone(), self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn zip_map(&self, other: &ScalarField, f: impl Fn(f64, f64) -> f64) -> Self {
        assert!(self.grid.same_as(&other.grid), "fields live on different grids");
        let values = self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect();
        Self::from_raw(self.grid.clone(), values)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Real spherical-harmonic coefficients `c_{lm}` for `0 ≤ l ≤ L`, `-l ≤ m ≤ l`.
///
/// The basis is the real orthonormal one built from [`P̃_l^m`](super::legendre):
/// `Y_l^0 = P̃_l^0 / √(2π)`, `Y_l^m = P̃_l^m cos(mφ) / √π` and
/// `Y_l^{-m} = P̃_l^m sin(mφ) / √π` for `m > 0`. No Condon–Shortley phase.
/// Storage order is `l` ascending, `m` ascending within `l`.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralField {
    lmax: usize,
    coeffs: Vec<f64>,
}

#[inline]
pub(crate) fn coeff_index(l: usize, m: i64) -> usize {
    ((l * l + l) as i64 + m) as usize
}

impl SpectralField {
    pub fn zeros(lmax: usize) -> Self {
        Self {
            lmax,
            coeffs: vec![0.0; (lmax + 1) * (lmax + 1)],
        }
    }

    pub fn from_coeffs(lmax: usize, coeffs: Vec<f64>) -> Result<Self> {
        let expected = (lmax + 1) * (lmax + 1);
        if coeffs.len() != expected {
            return Err(Error::ShapeMismatch {
                expected,
                actual: coeffs.len(),
            });
        }
        Ok(Self { lmax, coeffs })
    }

    /// Single normalized harmonic `Y_l^m`.
    pub fn harmonic(lmax: usize, l: usize, m: i64) -> Self {
        let mut c = Self::zeros(lmax);
        c.set(l, m, 1.0);
        c
    }

    pub fn bandlimit(&self) -> usize {
        self.lmax
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [f64] {
        &mut self.coeffs
    }

    pub fn get(&self, l: usize, m: i64) -> f64 {
        if l > self.lmax || m.unsigned_abs() as usize > l {
            return 0.0;
        }
        self.coeffs[coeff_index(l, m)]
    }

    pub fn set(&mut self, l: usize, m: i64, value: f64) {
        assert!(l <= self.lmax && m.unsigned_abs() as usize <= l, "({l},{m}) out of range");
        self.coeffs[coeff_index(l, m)] = value;
    }

    /// Iterator over `(l, m, c_lm)` in storage order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, i64, f64)> + '_ {
        (0..=self.lmax).flat_map(move |l| {
            (-(l as i64)..=l as i64).map(move |m| (l, m, self.coeffs[coeff_index(l, m)]))
        })
    }

    /// Same field at a different bandlimit: truncated or zero-padded.
    pub fn resized(&self, lmax: usize) -> Self {
        let mut out = Self::zeros(lmax);
        let n = (lmax.min(self.lmax) + 1).pow(2);
        out.coeffs[..n].copy_from_slice(&self.coeffs[..n]);
        out
    }

    pub fn scale(&self, factor: f64) -> Self {
        Self {
            lmax: self.lmax,
            coeffs: self.coeffs.iter().map(|c| c * factor).collect(),
        }
    }

    /// `self + factor · other`, at the larger bandlimit.
    pub fn add_scaled(&self, other: &SpectralField, factor: f64) -> Self {
        let lmax = self.lmax.max(other.lmax);
        let mut out = self.resized(lmax);
        for (k, c) in other.coeffs.iter().enumerate() {
            out.coeffs[k] += factor * c;
        }
        out
    }

    pub fn sub(&self, other: &SpectralField) -> Self {
        self.add_scaled(other, -1.0)
    }

    /// Multiplies each degree block by `f(l)`.
    pub fn map_degree(&self, f: impl Fn(usize) -> f64) -> Self {
        let mut out = self.clone();
        for l in 0..=self.lmax {
            let s = f(l);
            for c in &mut out.coeffs[l * l..(l + 1) * (l + 1)] {
                *c *= s;
            }
        }
        out
    }

    /// Spectral Laplacian: `c_lm ↦ -l(l+1) c_lm`.
    pub fn laplacian(&self) -> Self {
        self.map_degree(|l| -((l * (l + 1)) as f64))
    }

    /// Keeps only the listed degrees. Idempotent and L²-orthogonal.
    pub fn project_degrees(&self, degrees: &BTreeSet<usize>) -> Self {
        self.map_degree(|l| if degrees.contains(&l) { 1.0 } else { 0.0 })
    }

    pub fn l2_norm_sq(&self) -> f64 {
        self.coeffs.iter().map(|c| c * c).sum()
    }

    pub fn l2_norm(&self) -> f64 {
        self.l2_norm_sq().sqrt()
    }

    pub fn dot(&self, other: &SpectralField) -> f64 {
        self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a * b).sum()
    }

    /// Zeroes the trailing degrees whose coefficients all lie below
    /// `rel_tol · ‖c‖`, so that roundoff is not amplified by derivatives.
    pub fn chopped(&self, rel_tol: f64) -> Self {
        let floor = rel_tol * self.l2_norm();
        let last = (0..=self.lmax)
            .rev()
            .find(|&l| self.coeffs[l * l..(l + 1) * (l + 1)].iter().any(|c| c.abs() > floor))
            .unwrap_or(0);
        self.map_degree(|l| if l <= last { 1.0 } else { 0.0 })
    }

    /// Energy `Σ c²` carried by degrees strictly above `l0`.
    pub fn energy_above(&self, l0: usize) -> f64 {
        if l0 >= self.lmax {
            return 0.0;
        }
        self.coeffs[(l0 + 1) * (l0 + 1)..].iter().map(|c| c * c).sum()
    }

    /// Spectral Sobolev norm `(Σ (1 + l(l+1))² c_lm²)^{1/2}`.
    pub fn w22_norm(&self) -> f64 {
        let mut acc = 0.0;
        for l in 0..=self.lmax {
            let w = (1 + l * (l + 1)) as f64;
            let block: f64 = self.coeffs[l * l..(l + 1) * (l + 1)].iter().map(|c| c * c).sum();
            acc += w * w * block;
        }
        acc.sqrt()
    }
}

/// Serialized form of a [`SpectralField`]: `{"bandlimit": L, "coeffs": [[l, m, value], ...]}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SpectralFieldJson {
    pub bandlimit: usize,
    pub coeffs: Vec<(usize, i64, f64)>,
}

impl From<&SpectralField> for SpectralFieldJson {
    fn from(c: &SpectralField) -> Self {
        Self {
            bandlimit: c.bandlimit(),
            coeffs: c.iter().collect(),
        }
    }
}

impl TryFrom<SpectralFieldJson> for SpectralField {
    type Error = Error;

    fn try_from(json: SpectralFieldJson) -> Result<Self> {
        coeffs_from_triples(json.bandlimit, &json.coeffs)
    }
}

pub(crate) fn coeffs_from_triples(lmax: usize, triples: &[(usize, i64, f64)]) -> Result<SpectralField> {
    let mut out = SpectralField::zeros(lmax);
    for &(l, m, v) in triples {
        if l > lmax || m.unsigned_abs() as usize > l {
            return Err(Error::InvalidInput(format!("coefficient ({l},{m}) outside bandlimit {lmax}")));
        }
        if !v.is_finite() {
            return Err(Error::InvalidInput(format!("coefficient ({l},{m}) is not finite")));
        }
        out.set(l, m, v);
    }
    Ok(out)
}

/// Tangent vector field in the round orthonormal frame `(e_θ, e_φ = ∂_φ / sin θ)`.
#[derive(Clone, Debug)]
pub struct TangentField {
    pub theta: ScalarField,
    pub phi: ScalarField,
}

impl TangentField {
    /// Pointwise round norm squared.
    pub fn norm_sq(&self) -> ScalarField {
        self.theta.zip_map(&self.phi, |a, b| a * a + b * b)
    }
}

/// Symmetric 2-tensor in the round orthonormal frame.
#[derive(Clone, Debug)]
pub struct SymTensorField {
    pub tt: ScalarField,
    pub tp: ScalarField,
    pub pp: ScalarField,
}

impl SymTensorField {
    pub fn trace(&self) -> ScalarField {
        self.tt.zip_map(&self.pp, |a, b| a + b)
    }

    pub fn tracefree(&self) -> SymTensorField {
        let half = self.tt.zip_map(&self.pp, |a, b| 0.5 * (a - b));
        SymTensorField {
            tt: half.clone(),
            tp: self.tp.clone(),
            pp: half.map(|v| -v),
        }
    }

    /// Pointwise frame norm `T_θθ² + 2 T_θφ² + T_φφ²`.
    pub fn norm_sq(&self) -> ScalarField {
        let diag = self.tt.zip_map(&self.pp, |a, b| a * a + b * b);
        diag.zip_map(&self.tp, |d, c| d + 2.0 * c * c)
    }

    /// Pointwise frame inner product with another tensor.
    pub fn dot(&self, other: &SymTensorField) -> ScalarField {
        let diag = self.tt.zip_map(&other.tt, |a, b| a * b);
        let diag = diag.zip_map(&self.pp.zip_map(&other.pp, |a, b| a * b), |a, b| a + b);
        diag.zip_map(&self.tp.zip_map(&other.tp, |a, b| a * b), |d, c| d + 2.0 * c)
    }
}
