//! Evaluators for the sharp trace-free estimate and the inequalities around it.
//!
//! Every evaluator returns both sides of its inequality rather than a bare
//! verdict, so that sharpness and slack can be measured.

use std::f64::consts::PI;

use serde::Serialize;

use crate::cross_section::{w22_distance, CrossSection};
use crate::error::{Error, Result};
use crate::families::{divergent_bandlimit, divergent_member, modulated_stcmc, random_field, rng_for};
use crate::lorentz::{balance, kappa_bound, stcmc_from_z, z_vector, FourVector};
use crate::sphere::calculus::ring_map;
use crate::sphere::{analyze_to, integrate, synthesize, Derivatives, ScalarField, SpectralField, SymTensorField};

/// `‖Å‖_{L²(Σ)}` at or below this counts as constant spacetime mean curvature.
pub const STCMC_TOL: f64 = 1e-6;
/// `min H²` below `−HYPOTHESIS_TOL` violates the hypothesis `H² ≥ 0`.
pub const HYPOTHESIS_TOL: f64 = 1e-10;
/// Relative slack allowed on `lhs ≤ rhs`.
pub const INEQUALITY_SLACK: f64 = 1e-8;
/// `ratio ≥ 1 − EQUALITY_TOL` is reported as equality.
pub const EQUALITY_TOL: f64 = 1e-6;

#[derive(Clone, Debug, Serialize)]
pub struct InequalityReport {
    pub lhs: f64,
    pub rhs: f64,
    /// `lhs/rhs`, with `0/0 ↦ 0`
    pub ratio: f64,
    pub min_h2: f64,
    pub is_stcmc: bool,
    pub equality: bool,
    pub hypothesis_violated: bool,
    pub passed: bool,
    /// Largest relative disagreement between independent evaluations of the same quantity.
    pub cross_check: f64,
}

impl InequalityReport {
    fn new(lhs: f64, rhs: f64, min_h2: f64, is_stcmc: bool, equality_tol: f64, cross_check: f64) -> Self {
        let ratio = if is_stcmc || (lhs == 0.0 && rhs == 0.0) { 0.0 } else { lhs / rhs };
        Self {
            lhs,
            rhs,
            ratio,
            min_h2,
            is_stcmc,
            equality: is_stcmc || ratio >= 1.0 - equality_tol,
            hypothesis_violated: min_h2 < -HYPOTHESIS_TOL,
            passed: is_stcmc || lhs <= rhs * (1.0 + INEQUALITY_SLACK),
            cross_check,
        }
    }

    /// A failure that counts: the inequality is violated although its hypothesis holds.
    pub fn is_failure(&self) -> bool {
        !self.passed && !self.hypothesis_violated
    }
}

fn rel_diff(a: f64, b: f64, floor: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(floor)
}

/// `∫_Σ (H² − ⨏H²)² dμ`.
fn h2_variance(section: &CrossSection) -> f64 {
    let mean = section.mean_h2();
    section.integrate_on_surface(&section.spacetime_mean_curvature().map(|h| (h - mean) * (h - mean)))
}

/// `|Σ|∫|A|² − 128π²`, the rewrite of the gap through the full `A`.
fn gap_via_full_a(section: &CrossSection) -> f64 {
    section.area() * section.integrate_on_surface(&section.full_a_density()) - 128.0 * PI * PI
}

/// `|Σ|∫|A − (⨏H²/2)γ|² ≤ 2|Σ|∫|Å|²`.
///
/// The left side is evaluated through the orthogonal splitting of `A`; the
/// rewrite through `∫|A|²` and the identity `⨏H²/2 = 2/r²` are cross-checks.
pub fn tracefree_gap(section: &CrossSection) -> InequalityReport {
    let area = section.area();
    let a2 = section.tracefree_norm_sq();
    let lhs = area * (a2 + 0.5 * h2_variance(section));
    let rhs = 2.0 * area * a2;
    let r = section.area_radius();
    let check = rel_diff(lhs, gap_via_full_a(section), 1.0)
        .max(rel_diff(0.5 * section.mean_h2(), 2.0 / (r * r), 0.0));
    InequalityReport::new(
        lhs,
        rhs,
        section.min_h2(),
        a2.max(0.0).sqrt() <= STCMC_TOL,
        EQUALITY_TOL,
        check,
    )
}

/// `|Σ|‖H² − ⨏H²‖² ≤ 2|Σ|‖Å‖²`.
///
/// The cross-check is the identity `gap_lhs = |Σ|‖Å‖² + ½ schur_lhs`, with
/// the gap taken from the `∫|A|²` rewrite.
pub fn almost_schur(section: &CrossSection) -> InequalityReport {
    let area = section.area();
    let a2 = section.tracefree_norm_sq();
    let lhs = area * h2_variance(section);
    let rhs = 2.0 * area * a2;
    let check = rel_diff(gap_via_full_a(section), area * a2 + 0.5 * lhs, 1.0);
    InequalityReport::new(
        lhs,
        rhs,
        section.min_h2(),
        a2.max(0.0).sqrt() <= STCMC_TOL,
        EQUALITY_TOL,
        check,
    )
}

/// `∫f dμ · ∫f² dμ ≤ μ(X) ∫f³ dμ` for `f ≥ 0`, with `dμ = measure · dΩ²`.
pub fn hoelder_lemma(f: &ScalarField, measure: &ScalarField) -> Result<InequalityReport> {
    if f.values().len() != measure.values().len() {
        return Err(Error::ShapeMismatch {
            expected: f.values().len(),
            actual: measure.values().len(),
        });
    }
    if f.min() < 0.0 {
        return Err(Error::InvalidInput(format!("f must be nonnegative, min {:e}", f.min())));
    }
    let moment = |p: i32| integrate(&f.zip_map(measure, |x, w| x.powi(p) * w));
    let (m0, m1, m2, m3) = (moment(0), moment(1), moment(2), moment(3));
    if !(m1 > 0.0) {
        return Err(Error::InvalidInput("f has zero integral".into()));
    }
    let (lhs, rhs) = (m1 * m2, m0 * m3);
    let mut report = InequalityReport::new(lhs, rhs, f.min(), false, 1e-9, 0.0);
    report.hypothesis_violated = false;
    Ok(report)
}

/// Zero-mean solution of `Δ_γ f = rhs`.
#[derive(Clone, Debug)]
pub struct PoissonSolution {
    /// degree `≤ 2L` coefficients, zero mean with respect to `dΩ²`
    pub coeffs: SpectralField,
    pub values: ScalarField,
    /// `max |Δ_γ f − rhs|` on the oversampled grid
    pub residual: f64,
}

/// Solves `Δ_γ f = rhs` through `Δ_{S²} f = ω² rhs`. `rhs` lives on the
/// section's oversampled grid.
pub fn poisson_solve(section: &CrossSection, rhs: &ScalarField) -> Result<PoissonSolution> {
    let fine = section.fine_grid();
    if rhs.values().len() != fine.len() || rhs.grid().n_theta() != fine.n_theta() {
        return Err(Error::ShapeMismatch {
            expected: fine.len(),
            actual: rhs.values().len(),
        });
    }
    let mean = section.integrate_on_surface(rhs);
    let scale = section.integrate_on_surface(&rhs.map(f64::abs));
    if mean.abs() > 1e-9 * scale.max(1.0) {
        return Err(Error::InvalidRhs(mean));
    }
    let w = section.omega_fine();
    let g = analyze_to(&rhs.zip_map(w, |r, w| r * w * w), fine.max_degree())?;
    let coeffs = g.map_degree(|l| if l == 0 { 0.0 } else { -1.0 / (l * (l + 1)) as f64 });
    let values = synthesize(&coeffs, fine)?;
    let lap = synthesize(&coeffs.laplacian(), fine)?;
    let mut residual: f64 = 0.0;
    for k in 0..fine.len() {
        let wk = w.values()[k];
        residual = residual.max((lap.values()[k] / (wk * wk) - rhs.values()[k]).abs());
    }
    Ok(PoissonSolution {
        coeffs,
        values,
        residual,
    })
}

/// Round-frame components of `Hess_γ f` for `γ = e^{2φ} dΩ²`:
/// `Hess f − (dφ⊗df + df⊗dφ − ⟨dφ, df⟩ dΩ²)`.
pub fn conformal_hessian(hess: [f64; 3], df: [f64; 2], dphi: [f64; 2]) -> [f64; 3] {
    let diag = dphi[0] * df[0] - dphi[1] * df[1];
    [hess[0] - diag, hess[1] - (dphi[0] * df[1] + dphi[1] * df[0]), hess[2] + diag]
}

/// The integrals in the Bochner argument for the almost-Schur inequality.
#[derive(Clone, Debug, Serialize)]
pub struct BochnerChain {
    /// `∫(H² − ⨏H²)²`
    pub variance: f64,
    /// `2∫⟨Å, Åess_γ f⟩_γ`
    pub pairing: f64,
    /// `2‖Å‖ ‖Åess_γ f‖`
    pub cauchy_schwarz: f64,
    /// `‖Åess_γ f‖²`, direct
    pub hessian_norm_sq: f64,
    /// `∫(½(Δ_γ f)² − ¼H²|∇f|²_γ)`
    pub bochner: f64,
    pub equality_error: f64,
    pub bochner_error: f64,
    pub poisson_residual: f64,
}

const CHAIN_FLOOR: f64 = 1e-12;

pub fn bochner_chain(section: &CrossSection) -> Result<BochnerChain> {
    let fine = section.fine_grid().clone();
    let h2 = section.spacetime_mean_curvature();
    let mean = section.mean_h2();
    let sol = poisson_solve(section, &h2.map(|h| h - mean))?;
    let fd = Derivatives::of(&sol.coeffs, &fine)?;
    let (df, hf) = (fd.gradient(), fd.hessian());
    let wd = section.omega_derivatives();
    let dw = wd.gradient();
    let w = wd.value.values();
    let comp = |k: usize| {
        let dphi = [dw.theta.values()[k] / w[k], dw.phi.values()[k] / w[k]];
        conformal_hessian(
            [hf.tt.values()[k], hf.tp.values()[k], hf.pp.values()[k]],
            [df.theta.values()[k], df.phi.values()[k]],
            dphi,
        )
    };
    let t = SymTensorField {
        tt: ring_map(&fine, |_, k| comp(k)[0]),
        tp: ring_map(&fine, |_, k| comp(k)[1]),
        pp: ring_map(&fine, |_, k| comp(k)[2]),
    }
    .tracefree();
    let (ess, _) = section.tracefree_a();
    // Å has frame components 4ω Åess v, and ⟨S, T⟩_γ = ω⁻⁴ S·T
    let pairing_density = ess.dot(&t).zip_map(&wd.value, |p, w| 4.0 * p / (w * w * w));
    let pairing = 2.0 * section.integrate_on_surface(&pairing_density);
    let hessian_norm_sq = section.integrate_on_surface(&t.norm_sq().zip_map(&wd.value, |n, w| n / w.powi(4)));
    let grad2 = df.norm_sq();
    let bochner_density = ring_map(&fine, |_, k| {
        let w2 = w[k] * w[k];
        let lap = fd.laplacian.values()[k] / w2;
        0.5 * lap * lap - 0.25 * h2.values()[k] * grad2.values()[k] / w2
    });
    let bochner = section.integrate_on_surface(&bochner_density);
    let variance = h2_variance(section);
    let cauchy_schwarz = 2.0 * section.tracefree_norm() * hessian_norm_sq.max(0.0).sqrt();
    Ok(BochnerChain {
        variance,
        pairing,
        cauchy_schwarz,
        hessian_norm_sq,
        bochner,
        equality_error: rel_diff(variance, pairing, CHAIN_FLOOR),
        bochner_error: rel_diff(hessian_norm_sq, bochner, CHAIN_FLOOR),
        poisson_residual: sol.residual,
    })
}

/// `F_C(s)` along `ω_s = 1/(1 + s Y_l^m)` and its second derivative at 0.
#[derive(Clone, Debug, Serialize)]
pub struct OptimalityScan {
    pub c: f64,
    pub degree: usize,
    pub order: i64,
    pub bandlimit: usize,
    pub s_values: Vec<f64>,
    pub f_values: Vec<f64>,
    /// five-point central difference with step `s_max/2`
    pub second_derivative_fd: f64,
    /// `64π((C−2)μ² + (8−2C)μ − 6)`
    pub second_derivative_formula: f64,
    /// `64π((C−2)μ² + (8−2C)μ − 8)`, the value the second variation actually takes
    pub second_derivative_corrected: f64,
}

/// `64π((C−2)μ² + (8−2C)μ − 6)`, `μ = l(l+1)`.
pub fn second_variation_formula(c: f64, degree: usize) -> f64 {
    let mu = (degree * (degree + 1)) as f64;
    64.0 * PI * ((c - 2.0) * mu * mu + (8.0 - 2.0 * c) * mu - 6.0)
}

/// The second variation with the area term `6∫f²` of `d²/ds² ∫(1+sf)⁻²`.
pub fn second_variation_corrected(c: f64, degree: usize) -> f64 {
    second_variation_formula(c, degree) - 128.0 * PI
}

/// `F_C = C|Σ|∫|Å|² + 256π² − |Σ|∫(H²)²`.
pub fn f_c(section: &CrossSection, c: f64) -> f64 {
    let area = section.area();
    let h4 = section.integrate_on_surface(&section.spacetime_mean_curvature().map(|h| h * h));
    c * area * section.tracefree_norm_sq() + 256.0 * PI * PI - area * h4
}

pub fn optimality_scan(c: f64, degree: usize, order: i64, s_max: f64, n: usize) -> Result<OptimalityScan> {
    if degree == 0 || order.unsigned_abs() as usize > degree {
        return Err(Error::InvalidInput(format!("no harmonic of degree {degree}, order {order}")));
    }
    if n < 2 || !(s_max > 0.0) {
        return Err(Error::InvalidInput("need n ≥ 2 samples and s_max > 0".into()));
    }
    let bandlimit = (4 * degree).max(16);
    let eval = |s: f64| -> Result<f64> {
        Ok(f_c(&crate::families::inverse_harmonic(bandlimit, degree, order, s)?, c))
    };
    let s_values: Vec<f64> = (0..n)
        .map(|i| s_max * (2 * i as i64 - (n as i64 - 1)) as f64 / (n - 1) as f64)
        .collect();
    let f_values = s_values.iter().map(|&s| eval(s)).collect::<Result<Vec<_>>>()?;
    let lookup = |s: f64| -> Result<f64> {
        match s_values.iter().position(|&x| (x - s).abs() <= 1e-15 * s_max) {
            Some(i) => Ok(f_values[i]),
            None => eval(s),
        }
    };
    let h = 0.5 * s_max;
    let fd = (-lookup(2.0 * h)? + 16.0 * lookup(h)? - 30.0 * lookup(0.0)? + 16.0 * lookup(-h)? - lookup(-2.0 * h)?)
        / (12.0 * h * h);
    Ok(OptimalityScan {
        c,
        degree,
        order,
        bandlimit,
        s_values,
        f_values,
        second_derivative_fd: fd,
        second_derivative_formula: second_variation_formula(c, degree),
        second_derivative_corrected: second_variation_corrected(c, degree),
    })
}

/// Distance to the reference STCMC surface against `|Σ| ‖Å‖`.
#[derive(Clone, Debug, Serialize)]
pub struct DlmRatio {
    /// `‖ω − ω_Z‖_{W^{2,2}}`
    pub w22_dist: f64,
    /// `|Σ| ‖Å‖_{L²(Σ)}`
    pub rhs: f64,
    pub ratio: f64,
    /// `‖ω/r − ω_Z/r_Z‖²_{W^{2,2}}`
    pub w22_rescaled_sq: f64,
    /// `|Σ| ‖Å‖²_{L²(Σ)}`
    pub rhs_rescaled: f64,
    pub ratio_rescaled: f64,
    pub kappa: f64,
    pub z: FourVector,
    pub is_stcmc: bool,
    pub hypothesis_violated: bool,
}

pub fn dlm_ratio(section: &CrossSection) -> Result<DlmRatio> {
    let z = z_vector(section)?;
    let wz = stcmc_from_z(&z, section.bandlimit())?;
    let w22_dist = w22_distance(section.omega(), wz.omega())?;
    let a = section.tracefree_norm();
    let area = section.area();
    let rhs = area * a;
    let (r, rz) = (section.area_radius(), z.lorentz_length());
    let rescaled = section.omega().scale(1.0 / r).sub(&wz.omega().scale(1.0 / rz)).w22_norm();
    let rhs_rescaled = area * a * a;
    let is_stcmc = a <= STCMC_TOL;
    Ok(DlmRatio {
        w22_dist,
        rhs,
        ratio: if is_stcmc { 0.0 } else { w22_dist / rhs },
        w22_rescaled_sq: rescaled * rescaled,
        rhs_rescaled,
        ratio_rescaled: if is_stcmc { 0.0 } else { rescaled * rescaled / rhs_rescaled },
        kappa: kappa_bound(section)?,
        z,
        is_stcmc,
        hypothesis_violated: section.min_h2() < -HYPOTHESIS_TOL,
    })
}

/// Curvature control of a balanced, area-`4π` section.
#[derive(Clone, Debug, Serialize)]
pub struct K2Distance {
    /// `‖𝒦 − 1‖_{L²(S², dΩ²)}`
    pub k_dist: f64,
    /// `‖ω − 1‖_{W^{2,2}}`
    pub w22_dist: f64,
    pub ratio: f64,
}

/// Largest tolerated first-moment residual `max|∫f_i ω³| / ∫ω³`.
pub const K2_BALANCE_TOL: f64 = 1e-6;

pub fn k2_distance(section: &CrossSection) -> Result<K2Distance> {
    let z = z_vector(section)?;
    let residual = z.spatial().amax() / z.time();
    if residual > K2_BALANCE_TOL {
        return Err(Error::PreconditionViolated(format!("section is not balanced (residual {residual:e})")));
    }
    let area_err = (section.area() / (4.0 * PI) - 1.0).abs();
    if area_err > K2_BALANCE_TOL {
        return Err(Error::PreconditionViolated(format!(
            "area differs from 4π by relative {area_err:e}"
        )));
    }
    let k = section.gauss_curvature();
    let k_dist = integrate(&k.map(|x| (x - 1.0) * (x - 1.0))).max(0.0).sqrt();
    let mut d = section.omega().clone();
    d.set(0, 0, d.get(0, 0) - (4.0 * PI).sqrt());
    let w22_dist = d.w22_norm();
    let ratio = if k_dist == 0.0 && w22_dist == 0.0 { 0.0 } else { w22_dist / k_dist };
    Ok(K2Distance { k_dist, w22_dist, ratio })
}

/// Balances `Σ` and rescales it to area `4π`.
pub fn normalize_for_k2(section: &CrossSection) -> Result<CrossSection> {
    let b = balance(section)?;
    b.section.scaled((4.0 * PI / b.section.area()).sqrt())
}

/// `(∫_Σ (𝒦 − 1)² dμ)^{1/2}`, invariant under Lorentz transformations.
pub fn curvature_deviation(section: &CrossSection) -> f64 {
    section
        .integrate_on_surface(&section.gauss_curvature().map(|k| (k - 1.0) * (k - 1.0)))
        .max(0.0)
        .sqrt()
}

/// One term of a compactness sequence.
#[derive(Clone, Debug, Serialize)]
pub struct CompactnessTerm {
    pub index: usize,
    pub parameter: f64,
    pub bandlimit: usize,
    pub area_radius: f64,
    pub tracefree_norm: f64,
    pub min_h2: f64,
    pub kappa: f64,
    /// `Z/r_Z`
    pub z_normalized: FourVector,
    /// `‖ω/r − ω̃‖_{W^{2,2}}` to the limit, convergent mode only
    pub w22_to_limit: Option<f64>,
    /// `max |Z/r_Z − Z̃/r_Z̃|`, convergent mode only
    pub z_to_limit: Option<f64>,
    /// `sup |ω_k − ω_{k−1}|`, divergent mode only
    pub c0_to_previous: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct CompactnessSeries {
    pub mode: String,
    pub seed: u64,
    /// `Z̃/r_Z̃` of the limit, convergent mode only
    pub limit_z: Option<FourVector>,
    pub terms: Vec<CompactnessTerm>,
}

/// A seeded sequence `ρ_k ω_Z̃ e^{ε_k u}` with `ε_k = 0.2 · 2^{−k}` and random
/// scales `ρ_k`, whose normalizations converge to `ω_Z̃/r_Z̃`.
pub fn compactness_convergent(n: usize, seed: u64, bandlimit: usize) -> Result<CompactnessSeries> {
    use rand::Rng;
    use rand_distr::{Distribution, StandardNormal, UnitSphere};
    let mut rng = rng_for(seed, 0);
    let dir: [f64; 3] = UnitSphere.sample(&mut rng);
    let speed = 0.5 * rng.gen::<f64>();
    let a = [speed * dir[0], speed * dir[1], speed * dir[2]];
    let limit_z = FourVector::new((1.0 + speed * speed).sqrt(), a[0], a[1], a[2]);
    let limit = stcmc_from_z(&limit_z, bandlimit)?;
    let u = random_field(8.min(bandlimit), &mut rng);
    let mut terms = Vec::with_capacity(n);
    for k in 0..n {
        let eps = 0.2 * 0.5f64.powi(k as i32);
        let g: f64 = StandardNormal.sample(&mut rng);
        let rho = (0.5 * g).exp();
        let s = modulated_stcmc(bandlimit, &limit_z.scale(rho), &u, eps)?;
        let z = z_vector(&s)?;
        let zn = z.scale(1.0 / z.lorentz_length());
        let w22 = s.omega().scale(1.0 / s.area_radius()).sub(limit.omega()).w22_norm();
        terms.push(CompactnessTerm {
            index: k,
            parameter: eps,
            bandlimit,
            area_radius: s.area_radius(),
            tracefree_norm: s.tracefree_norm(),
            min_h2: s.min_h2(),
            kappa: kappa_bound(&s)?,
            z_normalized: zn,
            w22_to_limit: Some(w22),
            z_to_limit: Some(zn.max_abs_diff(&limit_z)),
            c0_to_previous: None,
        });
    }
    Ok(CompactnessSeries {
        mode: "convergent".into(),
        seed,
        limit_z: Some(limit_z),
        terms,
    })
}

/// `ω_k = 1/(√(1+k²) − k cos θ)`, `k = 1..=n`: STCMC for every `k` with no
/// convergent subsequence.
pub fn compactness_divergent(n: usize) -> Result<CompactnessSeries> {
    let mut terms = Vec::with_capacity(n);
    let mut previous: Option<CrossSection> = None;
    for k in 1..=n {
        let kf = k as f64;
        let bandlimit = divergent_bandlimit(kf);
        let s = divergent_member(kf, bandlimit)?;
        let c0 = match &previous {
            Some(p) => {
                let prev = synthesize(p.omega(), s.fine_grid())?;
                Some(prev.zip_map(s.omega_fine(), |a, b| (a - b).abs()).max())
            }
            None => None,
        };
        let z = z_vector(&s)?;
        terms.push(CompactnessTerm {
            index: k,
            parameter: kf,
            bandlimit,
            area_radius: s.area_radius(),
            tracefree_norm: s.tracefree_norm(),
            min_h2: s.min_h2(),
            kappa: kappa_bound(&s)?,
            z_normalized: z.scale(1.0 / z.lorentz_length()),
            w22_to_limit: None,
            z_to_limit: None,
            c0_to_previous: c0,
        });
        previous = Some(s);
    }
    Ok(CompactnessSeries {
        mode: "divergent".into(),
        seed: 0,
        limit_z: None,
        terms,
    })
}
