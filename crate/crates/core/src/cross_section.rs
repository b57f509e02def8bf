//! Spacelike cross sections `Σ_ω = {r = ω}` of the future lightcone.
//!
//! A section is stored as the spectral coefficients of its conformal factor
//! at a fixed bandlimit `L`. Everything metric is reduced to round-sphere
//! operators: products and quotients are formed on the oversampled grid and
//! re-analyzed up to degree `2L` before they are differentiated.

use std::sync::{Arc, OnceLock};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::estimates::tracefree_gap;
use crate::lorentz::{kappa_bound, stcmc_from_z, z_vector, FourVector};
use crate::sphere::calculus::ring_map;
use crate::sphere::{
    analyze_to, integrate, synthesize, Derivatives, GridSpec, ScalarField, SpectralField, SymTensorField,
    TangentField,
};

/// Sections with `min ω < DEGENERACY · max ω` are rejected.
pub const DEGENERACY: f64 = 1e-8;

/// Relative noise floor below which trailing degrees of `1/ω` are dropped.
const CHOP_TOL: f64 = 1e-13;

#[derive(Clone, Debug)]
pub struct CrossSection {
    omega: SpectralField,
    grid: GridSpec,
    omega_grid: ScalarField,
    v: ScalarField,
    u: ScalarField,
    geometry: Arc<OnceLock<Geometry>>,
}

/// Fine-grid fields shared by every geometric quantity.
#[derive(Debug)]
struct Geometry {
    fine: GridSpec,
    omega: Derivatives,
    v_coeffs: SpectralField,
    v: Derivatives,
    h2: ScalarField,
    /// trace-free round Hessian of `v = 1/ω`
    ess: SymTensorField,
    /// `|Å|²_γ = 16 v² |Åess v|²`
    a_density: ScalarField,
    area: f64,
}

impl CrossSection {
    pub fn new(omega: SpectralField) -> Result<Self> {
        let grid = GridSpec::new(omega.bandlimit())?;
        let omega_grid = synthesize(&omega, &grid)?;
        let (min, max) = (omega_grid.min(), omega_grid.max());
        if !(min > 0.0) || min < DEGENERACY * max {
            return Err(Error::DegenerateSection { min, max });
        }
        let v = omega_grid.map(|w| 1.0 / w);
        let u = omega_grid.map(f64::ln);
        let section = Self {
            omega,
            grid,
            omega_grid,
            v,
            u,
            geometry: Arc::new(OnceLock::new()),
        };
        // positivity is also required between the base nodes
        let fine_min = section.geometry().omega.value.min();
        if !(fine_min > 0.0) || fine_min < DEGENERACY * max {
            return Err(Error::DegenerateSection { min: fine_min, max });
        }
        Ok(section)
    }

    /// Projects a closed-form conformal factor onto degree `≤ L`.
    pub fn from_fn(bandlimit: usize, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let fine = GridSpec::oversampled(bandlimit)?;
        Self::from_samples(&ScalarField::from_fn(&fine, f))
    }

    /// Projects samples on an oversampled grid onto the grid's bandlimit.
    pub fn from_samples(samples: &ScalarField) -> Result<Self> {
        if samples.values().iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("conformal factor is not finite".into()));
        }
        Self::new(analyze_to(samples, samples.grid().bandlimit())?)
    }

    /// Round sphere of radius `ρ`.
    pub fn round(bandlimit: usize, rho: f64) -> Result<Self> {
        let mut c = SpectralField::zeros(bandlimit);
        c.set(0, 0, rho * (4.0 * std::f64::consts::PI).sqrt());
        Self::new(c)
    }

    pub fn omega(&self) -> &SpectralField {
        &self.omega
    }

    pub fn bandlimit(&self) -> usize {
        self.omega.bandlimit()
    }

    /// Base analysis grid.
    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    /// Oversampled grid on which all geometric fields are returned.
    pub fn fine_grid(&self) -> &GridSpec {
        &self.geometry().fine
    }

    pub fn omega_values(&self) -> &ScalarField {
        &self.omega_grid
    }

    /// `v = 1/ω` on the base grid.
    pub fn v(&self) -> &ScalarField {
        &self.v
    }

    /// `u = ln ω` on the base grid.
    pub fn u(&self) -> &ScalarField {
        &self.u
    }

    /// `ω` on the oversampled grid.
    pub fn omega_fine(&self) -> &ScalarField {
        &self.geometry().omega.value
    }

    pub fn scaled(&self, c: f64) -> Result<Self> {
        Self::new(self.omega.scale(c))
    }

    fn geometry(&self) -> &Geometry {
        self.geometry.get_or_init(|| Geometry::compute(&self.omega))
    }

    pub fn area(&self) -> f64 {
        self.geometry().area
    }

    pub fn area_radius(&self) -> f64 {
        (self.area() / (4.0 * std::f64::consts::PI)).sqrt()
    }

    /// `H² = 4(v² − |∇v|² + vΔv)` with `v = 1/ω`.
    pub fn spacetime_mean_curvature(&self) -> &ScalarField {
        &self.geometry().h2
    }

    /// The same field from `u = ln ω`: `H² = 4e^{−2u}(1 − Δu)`.
    pub fn spacetime_mean_curvature_u_form(&self) -> Result<ScalarField> {
        let g = self.geometry();
        let u = g.omega.value.map(f64::ln);
        let uc = analyze_to(&u, g.fine.max_degree())?;
        let lap = synthesize(&uc.laplacian(), &g.fine)?;
        Ok(u.zip_map(&lap, |u, l| 4.0 * (-2.0 * u).exp() * (1.0 - l)))
    }

    /// `𝒦 = H²/4`.
    pub fn gauss_curvature(&self) -> ScalarField {
        self.spacetime_mean_curvature().map(|h| 0.25 * h)
    }

    /// `(θ̄, θ) = (2/ω, ωH²/2)`.
    pub fn null_expansions(&self) -> (ScalarField, ScalarField) {
        let g = self.geometry();
        let bar = g.omega.value.map(|w| 2.0 / w);
        let theta = g.omega.value.zip_map(&g.h2, |w, h| 0.5 * w * h);
        (bar, theta)
    }

    /// `θ = 2(1/ω + |∇ω|²_γ/ω − Δ_γω)` evaluated from round derivatives of ω.
    pub fn expansion_direct(&self) -> ScalarField {
        let d = &self.geometry().omega;
        let grad2 = d.gradient().norm_sq();
        let n = d.value.grid().len();
        let vals = (0..n)
            .map(|k| {
                let w = d.value.values()[k];
                let w2 = w * w;
                2.0 * (1.0 / w + grad2.values()[k] / (w2 * w) - d.laplacian.values()[k] / w2)
            })
            .collect();
        ScalarField::from_raw(d.value.grid().clone(), vals)
    }

    /// `ζ = −dω/ω` in the round frame.
    pub fn connection_one_form(&self) -> TangentField {
        let d = &self.geometry().omega;
        let grad = d.gradient();
        TangentField {
            theta: grad.theta.zip_map(&d.value, |a, w| -a / w),
            phi: grad.phi.zip_map(&d.value, |a, w| -a / w),
        }
    }

    /// Round-frame components of `Åess_{S²}(1/ω)` and the density `|Å|²_γ`.
    pub fn tracefree_a(&self) -> (SymTensorField, ScalarField) {
        let g = self.geometry();
        (g.ess.clone(), g.a_density.clone())
    }

    /// `∫_Σ |Å|² dμ`.
    pub fn tracefree_norm_sq(&self) -> f64 {
        self.integrate_on_surface(&self.geometry().a_density)
    }

    /// `‖Å‖_{L²(Σ)}`.
    pub fn tracefree_norm(&self) -> f64 {
        self.tracefree_norm_sq().max(0.0).sqrt()
    }

    /// Round-frame components of the full `A`, computed from ω alone.
    pub fn scalar_second_ff(&self) -> SymTensorField {
        let d = &self.geometry().omega;
        let grad = d.gradient();
        let hess = d.hessian();
        let w = &d.value;
        let n = w.grid().len();
        let (mut tt, mut tp, mut pp) = (Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n));
        for k in 0..n {
            let om = w.values()[k];
            let (gt, gp) = (grad.theta.values()[k], grad.phi.values()[k]);
            let iso = 2.0 * (1.0 - (gt * gt + gp * gp) / (om * om));
            let c = 8.0 / (om * om);
            tt.push(iso - 4.0 / om * hess.tt.values()[k] + c * gt * gt);
            tp.push(-4.0 / om * hess.tp.values()[k] + c * gt * gp);
            pp.push(iso - 4.0 / om * hess.pp.values()[k] + c * gp * gp);
        }
        let grid = w.grid().clone();
        SymTensorField {
            tt: ScalarField::from_raw(grid.clone(), tt),
            tp: ScalarField::from_raw(grid.clone(), tp),
            pp: ScalarField::from_raw(grid, pp),
        }
    }

    /// `|A|²_γ = ω^{−4} |A|²_frame`.
    pub fn full_a_density(&self) -> ScalarField {
        let a = self.scalar_second_ff();
        a.norm_sq().zip_map(self.omega_fine(), |n, w| n / w.powi(4))
    }

    /// `⟨χ, ūχ⟩_γ = tr_γ A / 2`, with `A` taken from [`scalar_second_ff`](Self::scalar_second_ff).
    pub fn second_ff_contraction(&self) -> ScalarField {
        let tr = self.scalar_second_ff().trace();
        tr.zip_map(self.omega_fine(), |t, w| 0.5 * t / (w * w))
    }

    /// `∫ density · ω² dΩ²`. The density may live on any grid able to
    /// resolve `ω`.
    pub fn integrate_on_surface(&self, density: &ScalarField) -> f64 {
        let g = self.geometry();
        let prod = if density.grid().same_as(&g.fine) {
            density.zip_map(&g.omega.value, |d, w| d * w * w)
        } else {
            let w = synthesize(&self.omega, density.grid()).expect("density grid too coarse for the section");
            density.zip_map(&w, |d, w| d * w * w)
        };
        integrate(&prod)
    }

    /// `∫_Σ H² dμ`.
    pub fn integral_h2(&self) -> f64 {
        self.integrate_on_surface(self.spacetime_mean_curvature())
    }

    /// Surface average `⨏H²`.
    pub fn mean_h2(&self) -> f64 {
        self.integral_h2() / self.area()
    }

    pub fn min_h2(&self) -> f64 {
        self.spacetime_mean_curvature().min()
    }

    pub fn max_h2(&self) -> f64 {
        self.spacetime_mean_curvature().max()
    }

    /// Both sides of the Codazzi identity as round-frame one-forms:
    /// `(div_γ Å, ½ dH²)`.
    pub fn codazzi_sides(&self) -> Result<(TangentField, TangentField)> {
        let g = self.geometry();
        let fine = &g.fine;
        let dv = g.v.gradient();
        let dlap = Derivatives::of(&g.v_coeffs.laplacian(), fine)?.gradient();
        let dw = g.omega.gradient();
        let e = &g.ess;
        let w = g.omega.value.values();
        // div(4ω Åess v) = 4ω(½ dΔv + dv) + 4 Åess v(∇ω, ·), then div_γ = ω^{−2} div
        let lhs_t = ring_map(fine, |_, k| {
            let div = 4.0 * w[k] * (0.5 * dlap.theta.values()[k] + dv.theta.values()[k])
                + 4.0 * (e.tt.values()[k] * dw.theta.values()[k] + e.tp.values()[k] * dw.phi.values()[k]);
            div / (w[k] * w[k])
        });
        let lhs_p = ring_map(fine, |_, k| {
            let div = 4.0 * w[k] * (0.5 * dlap.phi.values()[k] + dv.phi.values()[k])
                + 4.0 * (e.tp.values()[k] * dw.theta.values()[k] + e.pp.values()[k] * dw.phi.values()[k]);
            div / (w[k] * w[k])
        });
        let hc = analyze_to(&g.h2, fine.max_degree())?;
        let dh = Derivatives::of(&hc, fine)?.gradient();
        let rhs = TangentField {
            theta: dh.theta.map(|x| 0.5 * x),
            phi: dh.phi.map(|x| 0.5 * x),
        };
        Ok((
            TangentField {
                theta: lhs_t,
                phi: lhs_p,
            },
            rhs,
        ))
    }

    /// Grid maximum of `|div_γ Å − ½ dH²|_γ`.
    pub fn codazzi_residual(&self) -> Result<f64> {
        let (lhs, rhs) = self.codazzi_sides()?;
        let w = self.omega_fine().values();
        let mut worst: f64 = 0.0;
        for k in 0..w.len() {
            let dt = lhs.theta.values()[k] - rhs.theta.values()[k];
            let dp = lhs.phi.values()[k] - rhs.phi.values()[k];
            worst = worst.max((dt * dt + dp * dp).sqrt() / w[k]);
        }
        Ok(worst)
    }

    /// `H²` derivatives straight from the spectral data of `v`:
    /// `dH² = 4(2v dv − 2 Hess v(∇v) + Δv dv + v dΔv)`.
    pub(crate) fn grad_h2_analytic(&self) -> Result<TangentField> {
        let g = self.geometry();
        let dv = g.v.gradient();
        let h = g.v.hessian();
        let dlap = Derivatives::of(&g.v_coeffs.laplacian(), &g.fine)?.gradient();
        let v = g.v.value.values();
        let lap = g.v.laplacian.values();
        let comp = |k: usize, first: bool| {
            let (gt, gp) = (dv.theta.values()[k], dv.phi.values()[k]);
            let (hg, d, dl) = if first {
                (h.tt.values()[k] * gt + h.tp.values()[k] * gp, gt, dlap.theta.values()[k])
            } else {
                (h.tp.values()[k] * gt + h.pp.values()[k] * gp, gp, dlap.phi.values()[k])
            };
            4.0 * (2.0 * v[k] * d - 2.0 * hg + lap[k] * d + v[k] * dl)
        };
        Ok(TangentField {
            theta: ring_map(&g.fine, |_, k| comp(k, true)),
            phi: ring_map(&g.fine, |_, k| comp(k, false)),
        })
    }

    /// Derivative data of `ω` on the fine grid.
    pub(crate) fn omega_derivatives(&self) -> &Derivatives {
        &self.geometry().omega
    }
}

impl Geometry {
    fn compute(omega: &SpectralField) -> Self {
        let fine = GridSpec::oversampled(omega.bandlimit()).expect("bandlimit validated");
        let od = Derivatives::of(omega, &fine).expect("fine grid resolves ω");
        let v = od.value.map(|w| 1.0 / w);
        let v_coeffs = analyze_to(&v, fine.max_degree())
            .expect("fine grid exact degree")
            .chopped(CHOP_TOL);
        let vd = Derivatives::of(&v_coeffs, &fine).expect("fine grid exact degree");
        let grad2 = vd.gradient().norm_sq();
        let n = fine.len();
        let h2 = (0..n)
            .map(|k| {
                let v = vd.value.values()[k];
                4.0 * (v * v - grad2.values()[k] + v * vd.laplacian.values()[k])
            })
            .collect();
        let h2 = ScalarField::from_raw(fine.clone(), h2);
        let ess = vd.hessian().tracefree();
        let a_density = ess
            .norm_sq()
            .zip_map(&vd.value, |e, v| 16.0 * v * v * e);
        let area = integrate(&od.value.map(|w| w * w));
        Self {
            fine,
            omega: od,
            v_coeffs,
            v: vd,
            h2,
            ess,
            a_density,
            area,
        }
    }
}

/// Spectral `W^{2,2}` distance `(Σ (1 + l(l+1))² (a − b)_lm²)^{1/2}`.
pub fn w22_distance(a: &SpectralField, b: &SpectralField) -> Result<f64> {
    if a.bandlimit() != b.bandlimit() {
        return Err(Error::BandlimitMismatch(a.bandlimit(), b.bandlimit()));
    }
    Ok(a.sub(b).w22_norm())
}

/// Summary of every scalar diagnostic of a section.
#[derive(Clone, Debug, Serialize)]
pub struct GeometryReport {
    pub bandlimit: usize,
    pub area: f64,
    pub area_radius: f64,
    pub min_h2: f64,
    pub max_h2: f64,
    pub int_h2: f64,
    pub norm_a_tracefree: f64,
    pub gap_lhs: f64,
    pub gap_rhs: f64,
    pub z_vector: FourVector,
    pub kappa: f64,
    pub codazzi_residual: f64,
    /// `W^{2,2}` distance to the reference, by default the STCMC section `ω_Z`
    pub w22_to_reference: f64,
}

impl GeometryReport {
    pub fn of(section: &CrossSection, reference: Option<&CrossSection>) -> Result<Self> {
        let z = z_vector(section)?;
        let w22_to_reference = match reference {
            Some(r) => w22_distance(section.omega(), &r.omega().resized(section.bandlimit()))?,
            None => w22_distance(section.omega(), stcmc_from_z(&z, section.bandlimit())?.omega())?,
        };
        let gap = tracefree_gap(section);
        let area = section.area();
        Ok(Self {
            bandlimit: section.bandlimit(),
            area,
            area_radius: section.area_radius(),
            min_h2: section.min_h2(),
            max_h2: section.max_h2(),
            int_h2: section.integral_h2(),
            norm_a_tracefree: section.tracefree_norm(),
            gap_lhs: gap.lhs,
            gap_rhs: gap.rhs,
            z_vector: z,
            kappa: kappa_bound(section)?,
            codazzi_residual: section.codazzi_residual()?,
            w22_to_reference,
        })
    }
}
