//! The restricted Lorentz group and its action on lightcone cross sections.
//!
//! Signature is `(−,+,+,+)` and components are ordered `(t, x¹, x², x³)`.
//! A general transformation is written `Λ = Λ_a ∘ D` (rotate, then boost),
//! and acts on a section by pulling `ω` back along the Möbius map of the
//! sphere it induces.

use std::f64::consts::PI;
use std::fmt;

use nalgebra::{Matrix3, Matrix4, Rotation3, Unit, Vector3, Vector4};
use serde::{Deserialize, Serialize};

use crate::cross_section::CrossSection;
use crate::error::{Error, Result};
use crate::sphere::{analyze_to, evaluate_at, first_harmonics, integrate, GridSpec, ScalarField};

/// Relative tolerance used when checking group membership.
const MEMBERSHIP_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FourVector(pub [f64; 4]);

impl FourVector {
    pub fn new(t: f64, x: f64, y: f64, z: f64) -> Self {
        Self([t, x, y, z])
    }

    pub fn time(&self) -> f64 {
        self.0[0]
    }

    pub fn spatial(&self) -> Vector3<f64> {
        Vector3::new(self.0[1], self.0[2], self.0[3])
    }

    /// `η(p, p) = −(p⁰)² + |p⃗|²`.
    pub fn minkowski_norm_sq(&self) -> f64 {
        -self.0[0] * self.0[0] + self.spatial().norm_squared()
    }

    pub fn is_future_timelike(&self) -> bool {
        self.0[0] > 0.0 && self.minkowski_norm_sq() < 0.0
    }

    /// `√(−η(p, p))`; NaN for non-timelike vectors.
    pub fn lorentz_length(&self) -> f64 {
        (-self.minkowski_norm_sq()).sqrt()
    }

    pub fn scale(&self, c: f64) -> Self {
        Self(self.0.map(|x| c * x))
    }

    pub fn max_abs_diff(&self, other: &FourVector) -> f64 {
        (0..4).fold(0.0, |m, i| f64::max(m, (self.0[i] - other.0[i]).abs()))
    }

    fn as_vector(&self) -> Vector4<f64> {
        Vector4::from(self.0)
    }
}

/// Element of `SO⁺(1,3)`, serialized as 16 row-major doubles.
#[derive(Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct LorentzMatrix(Matrix4<f64>);

impl fmt::Debug for LorentzMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "LorentzMatrix({:?})", self.row_major())
    }
}

impl TryFrom<Vec<f64>> for LorentzMatrix {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        let rows: [f64; 16] = v
            .try_into()
            .map_err(|v: Vec<f64>| Error::InvalidInput(format!("expected 16 matrix entries, got {}", v.len())))?;
        Self::from_row_major(rows)
    }
}

impl From<LorentzMatrix> for Vec<f64> {
    fn from(m: LorentzMatrix) -> Self {
        m.row_major().to_vec()
    }
}

fn eta() -> Matrix4<f64> {
    Matrix4::from_diagonal(&Vector4::new(-1.0, 1.0, 1.0, 1.0))
}

impl LorentzMatrix {
    pub fn identity() -> Self {
        Self(Matrix4::identity())
    }

    /// Validates `MᵀηM = η`, `det M = 1` and `M⁰₀ ≥ 1`.
    pub fn new(m: Matrix4<f64>) -> Result<Self> {
        if m.iter().any(|x| !x.is_finite()) {
            return Err(Error::NotRestrictedLorentz("non-finite entry".into()));
        }
        let scale = m.abs().max().powi(2).max(1.0);
        let defect = (m.transpose() * eta() * m - eta()).abs().max();
        if defect > MEMBERSHIP_TOL * scale {
            return Err(Error::NotRestrictedLorentz(format!("metric defect {defect:e}")));
        }
        let det = m.determinant();
        if (det - 1.0).abs() > MEMBERSHIP_TOL * scale {
            return Err(Error::NotRestrictedLorentz(format!("determinant {det}")));
        }
        if m[(0, 0)] < 1.0 - MEMBERSHIP_TOL * scale {
            return Err(Error::NotRestrictedLorentz(format!("time component {}", m[(0, 0)])));
        }
        Ok(Self(m))
    }

    pub fn from_row_major(rows: [f64; 16]) -> Result<Self> {
        Self::new(Matrix4::from_row_slice(&rows))
    }

    pub fn row_major(&self) -> [f64; 16] {
        let mut out = [0.0; 16];
        for r in 0..4 {
            for c in 0..4 {
                out[4 * r + c] = self.0[(r, c)];
            }
        }
        out
    }

    pub fn matrix(&self) -> &Matrix4<f64> {
        &self.0
    }

    /// `Λ⁻¹ = η Λᵀ η`.
    pub fn inverse(&self) -> Self {
        Self(eta() * self.0.transpose() * eta())
    }

    pub fn compose(&self, other: &LorentzMatrix) -> Self {
        Self(self.0 * other.0)
    }

    pub fn apply(&self, p: &FourVector) -> FourVector {
        let q = self.0 * p.as_vector();
        FourVector([q[0], q[1], q[2], q[3]])
    }

    pub fn from_rotation(r: &Rotation3<f64>) -> Self {
        let mut m = Matrix4::identity();
        m.fixed_view_mut::<3, 3>(1, 1).copy_from(r.matrix());
        Self(m)
    }

    /// Spatial rotation about `axis` by `angle` (right-handed).
    pub fn rotation(axis: [f64; 3], angle: f64) -> Result<Self> {
        let v = Vector3::from(axis);
        if !(v.norm() > 0.0) || !angle.is_finite() {
            return Err(Error::InvalidInput("rotation axis must be nonzero and finite".into()));
        }
        Ok(Self::from_rotation(&Rotation3::from_axis_angle(&Unit::new_normalize(v), angle)))
    }

    /// Largest componentwise deviation from another matrix.
    pub fn max_abs_diff(&self, other: &LorentzMatrix) -> f64 {
        (self.0 - other.0).abs().max()
    }
}

impl std::ops::Mul for LorentzMatrix {
    type Output = LorentzMatrix;

    fn mul(self, rhs: LorentzMatrix) -> LorentzMatrix {
        self.compose(&rhs)
    }
}

/// Boost along `x³` with rapidity parameter `a`, `b = √(1+a²)`.
pub fn special_boost(a: f64) -> LorentzMatrix {
    let b = (1.0 + a * a).sqrt();
    let mut m = Matrix4::identity();
    m[(0, 0)] = b;
    m[(0, 3)] = a;
    m[(3, 0)] = a;
    m[(3, 3)] = b;
    LorentzMatrix(m)
}

/// Rotation taking `e₃` to `â` with no twist about `â`.
pub fn axis_rotation(a: &Vector3<f64>) -> Rotation3<f64> {
    let n = a.norm();
    if n == 0.0 {
        return Rotation3::identity();
    }
    let e3 = Vector3::z();
    Rotation3::rotation_between(&e3, &(a / n))
        .unwrap_or_else(|| Rotation3::from_axis_angle(&Vector3::x_axis(), PI))
}

/// `Λ_a = D_a ∘ Λ_{|a|} ∘ D_a⁻¹`, so that `Λ_a(∂_t) = (√(1+|a|²), a)`.
pub fn boost_toward(a: [f64; 3]) -> LorentzMatrix {
    let v = Vector3::from(a);
    let n = v.norm();
    if n == 0.0 {
        return LorentzMatrix::identity();
    }
    let d = LorentzMatrix::from_rotation(&axis_rotation(&v));
    d * special_boost(n) * d.inverse()
}

/// Splits `Λ = Λ_a ∘ D` into the boost vector `a` and a spatial rotation `D`.
pub fn decompose(lambda: &LorentzMatrix) -> Result<([f64; 3], LorentzMatrix)> {
    let checked = LorentzMatrix::new(lambda.0)?;
    let a = [checked.0[(1, 0)], checked.0[(2, 0)], checked.0[(3, 0)]];
    let mut d = boost_toward(a).inverse().0 * checked.0;
    // the exact result has zero time row/column; clean the rounding there
    for k in 1..4 {
        d[(0, k)] = 0.0;
        d[(k, 0)] = 0.0;
    }
    d[(0, 0)] = 1.0;
    Ok((a, LorentzMatrix(d)))
}

/// The sphere map `Φ_Λ` and its conformal factor, for `Λ = Λ_a ∘ D`.
#[derive(Clone, Debug)]
pub struct MoebiusMap {
    /// `|a|`
    pub boost: f64,
    /// `D_a`, taking `e₃` to `a/|a|`
    pub axis: Rotation3<f64>,
    /// the spatial part of `D`
    pub rotation: Rotation3<f64>,
}

impl MoebiusMap {
    pub fn identity() -> Self {
        Self {
            boost: 0.0,
            axis: Rotation3::identity(),
            rotation: Rotation3::identity(),
        }
    }

    pub fn from_lorentz(lambda: &LorentzMatrix) -> Result<Self> {
        let (a, d) = decompose(lambda)?;
        let a = Vector3::from(a);
        let block: Matrix3<f64> = d.0.fixed_view::<3, 3>(1, 1).into_owned();
        Ok(Self {
            boost: a.norm(),
            axis: axis_rotation(&a),
            rotation: Rotation3::from_matrix(&block),
        })
    }

    pub fn boost_vector(&self) -> Vector3<f64> {
        self.axis * Vector3::z() * self.boost
    }

    /// `n = Φ_Λ(n')`: the point of the original section seen in direction `n'`
    /// after the transformation.
    pub fn pullback(&self, n_prime: &Vector3<f64>) -> Vector3<f64> {
        let a = self.boost;
        let b = (1.0 + a * a).sqrt();
        let m = self.axis.inverse() * n_prime;
        let den = b - a * m[2];
        // axis-aligned boost: cos θ = (b cos θ' − a)/(b − a cos θ'), φ = φ'
        let pulled = Vector3::new(m[0] / den, m[1] / den, (b * m[2] - a) / den);
        self.rotation.inverse() * (self.axis * pulled)
    }

    /// `√(1+|a|²) − a·n'`.
    pub fn denominator(&self, n_prime: &Vector3<f64>) -> f64 {
        let b = (1.0 + self.boost * self.boost).sqrt();
        b - self.boost_vector().dot(n_prime)
    }
}

/// `Λ(Σ)`, re-analyzed at the bandlimit of `Σ`.
pub fn apply_to_section(lambda: &LorentzMatrix, section: &CrossSection) -> Result<CrossSection> {
    Ok(apply_to_section_report(lambda, section)?.0)
}

/// Like [`apply_to_section`], also returning the relative spectral energy
/// above degree `0.9 L` of the mapped factor.
pub fn apply_to_section_report(lambda: &LorentzMatrix, section: &CrossSection) -> Result<(CrossSection, f64)> {
    let map = MoebiusMap::from_lorentz(lambda)?;
    let l = section.bandlimit();
    let fine = GridSpec::oversampled(l)?;
    let targets: Vec<Vector3<f64>> = fine
        .points()
        .map(|(t, p)| Vector3::from(crate::sphere::unit_vector(t, p)))
        .collect();
    let sources: Vec<(f64, f64)> = targets
        .iter()
        .map(|n| crate::sphere::angles_from_vector(map.pullback(n).into()))
        .collect();
    let pulled = evaluate_at(section.omega(), &sources);
    let values: Vec<f64> = pulled
        .iter()
        .zip(&targets)
        .map(|(w, n)| w / map.denominator(n))
        .collect();
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    if !(min > 0.0) {
        return Err(Error::MappedSectionInvalid(min));
    }
    let coeffs = analyze_to(&ScalarField::new(fine, values)?, l)?;
    let total = coeffs.l2_norm_sq();
    let tail = coeffs.energy_above((0.9 * l as f64).floor() as usize);
    let residual = (tail / total).sqrt();
    match CrossSection::new(coeffs) {
        Ok(s) => Ok((s, residual)),
        Err(Error::DegenerateSection { min, .. }) => Err(Error::MappedSectionInvalid(min)),
        Err(e) => Err(e),
    }
}

/// `Z = (∫ω³, ∫f_i ω³) / |Σ|`.
pub fn z_vector(section: &CrossSection) -> Result<FourVector> {
    let w = section.omega_fine();
    let cube = w.map(|x| x * x * x);
    let area = section.area();
    let [f1, f2, f3] = first_harmonics(w.grid());
    let moment = |f: &ScalarField| integrate(&f.zip_map(&cube, |a, b| a * b)) / area;
    let z = FourVector([integrate(&cube) / area, moment(&f1), moment(&f2), moment(&f3)]);
    if !z.is_future_timelike() {
        return Err(Error::Internal(format!("associated vector {:?} is not future timelike", z.0)));
    }
    Ok(z)
}

/// `ω_z = −η(z,z)/(z⁰ − z⃗·x)`, the STCMC factor with associated vector `z`.
pub fn stcmc_factor(z: &FourVector, x: [f64; 3]) -> f64 {
    let s = z.spatial();
    -z.minkowski_norm_sq() / (z.time() - s[0] * x[0] - s[1] * x[1] - s[2] * x[2])
}

/// The STCMC section `ω_z` at the given bandlimit.
pub fn stcmc_from_z(z: &FourVector, bandlimit: usize) -> Result<CrossSection> {
    if !z.0.iter().all(|x| x.is_finite()) || !z.is_future_timelike() {
        return Err(Error::InvalidReferenceVector(z.0));
    }
    let z = *z;
    CrossSection::from_fn(bandlimit, move |t, p| stcmc_factor(&z, crate::sphere::unit_vector(t, p)))
}

/// Result of [`balance`].
#[derive(Clone, Debug)]
pub struct Balanced {
    pub section: CrossSection,
    /// accumulated transformation, `section = lambda(original)`
    pub lambda: LorentzMatrix,
    pub iterations: usize,
    /// `max_i |∫f_i ω³| / ∫ω³`
    pub residual: f64,
}

pub const BALANCE_TOL: f64 = 1e-8;
pub const BALANCE_MAX_ITER: usize = 5;

fn balance_residual(z: &FourVector) -> f64 {
    z.spatial().amax() / z.time()
}

/// Boosts `Σ` so that its first moments `∫f_i ω³` vanish.
pub fn balance(section: &CrossSection) -> Result<Balanced> {
    let mut current = section.clone();
    let mut lambda = LorentzMatrix::identity();
    let mut z = z_vector(&current)?;
    let mut iterations = 0;
    while balance_residual(&z) > BALANCE_TOL {
        if iterations == BALANCE_MAX_ITER {
            return Err(Error::BalanceFailed {
                residual: balance_residual(&z),
            });
        }
        let r = z.lorentz_length();
        let a = z.spatial() / r;
        let step = boost_toward([-a[0], -a[1], -a[2]]);
        current = apply_to_section(&step, &current)?;
        lambda = step * lambda;
        z = z_vector(&current)?;
        iterations += 1;
    }
    Ok(Balanced {
        section: current,
        lambda,
        iterations,
        residual: balance_residual(&z),
    })
}

/// `κ = max(max ω/ω_Z, max ω_Z/ω) − 1`.
///
/// The extremes of `ln(ω/ω_Z)` are located on the fine grid and then polished
/// by a local pattern search on the spectral `ω`, so the result does not
/// depend on where the grid happens to sample.
pub fn kappa_bound(section: &CrossSection) -> Result<f64> {
    let z = z_vector(section)?;
    let w = section.omega_fine();
    let grid = w.grid();
    let log_ratio = |t: f64, p: f64, w: f64| (w / stcmc_factor(&z, crate::sphere::unit_vector(t, p))).ln();
    let (mut hi, mut lo) = ((f64::NEG_INFINITY, 0.0, 0.0), (f64::INFINITY, 0.0, 0.0));
    for (k, (t, p)) in grid.points().enumerate() {
        let g = log_ratio(t, p, w.values()[k]);
        if g > hi.0 {
            hi = (g, t, p);
        }
        if g < lo.0 {
            lo = (g, t, p);
        }
    }
    let at = |t: f64, p: f64| {
        // reflect through the poles so θ stays in [0, π]
        let (t, p) = if t < 0.0 {
            (-t, p + PI)
        } else if t > PI {
            (2.0 * PI - t, p + PI)
        } else {
            (t, p)
        };
        log_ratio(t, p, evaluate_at(section.omega(), &[(t, p)])[0])
    };
    let step = PI / grid.n_theta() as f64;
    let worst = polish(at, hi, step).max(polish(|t, p| -at(t, p), (-lo.0, lo.1, lo.2), step));
    Ok(worst.max(0.0).exp() - 1.0)
}

/// Compass search for a local maximum of `f(θ, φ)` starting at `(value, θ, φ)`.
fn polish(f: impl Fn(f64, f64) -> f64, start: (f64, f64, f64), mut step: f64) -> f64 {
    let (mut best, mut t, mut p) = start;
    while step > 1e-10 {
        let mut moved = false;
        for (dt, dp) in [(step, 0.0), (-step, 0.0), (0.0, step), (0.0, -step)] {
            let (tn, pn) = (t + dt, p + dp);
            let v = f(tn, pn);
            if v > best {
                (best, t, p, moved) = (v, tn, pn, true);
                break;
            }
        }
        if !moved {
            step *= 0.5;
        }
    }
    best
}
