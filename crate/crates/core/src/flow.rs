//! Null mean curvature flow `∂_t ω = −ω𝒦` of lightcone cross sections.
//!
//! In the round conformal class this is 2d Ricci flow. Time stepping is
//! classical RK4 on the spectral coefficients of ω; the velocity is formed on
//! the oversampled grid and projected back to the section's bandlimit.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::cross_section::CrossSection;
use crate::error::{Error, Result};
use crate::sphere::{analyze_to, synthesize, GridSpec, ScalarField, SpectralField};

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FlowConfig {
    /// Largest step ever taken.
    pub dt_initial: f64,
    pub t_max: f64,
    /// Rescale to the initial area after every step.
    pub normalized: bool,
    pub cfl_safety: f64,
    /// Normalized runs stop once `‖Å‖_{L²}` drops below this.
    pub stop_tracefree_tol: f64,
    pub max_steps: usize,
}

impl Default for FlowConfig {
    fn default() -> Self {
        Self {
            dt_initial: 1e-2,
            t_max: 1.0,
            normalized: false,
            cfl_safety: 0.8,
            stop_tracefree_tol: 1e-6,
            max_steps: 100_000,
        }
    }
}

impl FlowConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt_initial > 0.0 && self.dt_initial.is_finite()) {
            return Err(Error::InvalidInput(format!("dt must be positive, got {}", self.dt_initial)));
        }
        if !(self.cfl_safety > 0.0 && self.cfl_safety <= 1.0) {
            return Err(Error::InvalidInput(format!("cfl safety must lie in (0, 1], got {}", self.cfl_safety)));
        }
        if !(self.t_max >= 0.0 && self.t_max.is_finite()) {
            return Err(Error::InvalidInput(format!("invalid t_max {}", self.t_max)));
        }
        Ok(())
    }
}

/// Quantities recomputed from the section at every accepted step.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Diagnostics {
    pub area: f64,
    pub area_radius: f64,
    pub q: f64,
    pub min_h2: f64,
    pub max_k: f64,
    /// `None` where `min H² ≤ 0`.
    pub gradient_monitor: Option<f64>,
    pub norm_a_tracefree: f64,
    pub min_omega: f64,
    pub max_omega: f64,
}

impl Diagnostics {
    pub fn of(section: &CrossSection) -> Self {
        let h2 = section.spacetime_mean_curvature();
        Self {
            area: section.area(),
            area_radius: section.area_radius(),
            q: monotone_quantity(section),
            min_h2: h2.min(),
            max_k: 0.25 * h2.max(),
            gradient_monitor: gradient_monitor(section).ok(),
            norm_a_tracefree: section.tracefree_norm(),
            min_omega: section.omega_fine().min(),
            max_omega: section.omega_fine().max(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct FlowState {
    pub t: f64,
    pub section: CrossSection,
    pub diagnostics: Diagnostics,
}

impl FlowState {
    pub fn new(t: f64, section: CrossSection) -> Self {
        let diagnostics = Diagnostics::of(&section);
        Self { t, section, diagnostics }
    }

    pub fn sample(&self) -> FlowSample {
        FlowSample {
            t: self.t,
            diagnostics: self.diagnostics.clone(),
        }
    }
}

/// Diagnostics of one accepted step. Runs keep these rather than the
/// sections, whose cached geometry is large.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FlowSample {
    pub t: f64,
    pub diagnostics: Diagnostics,
}

/// Why a run ended.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FlowOutcome {
    Completed,
    Converged,
    Singular,
    StepLimit,
}

#[derive(Clone, Debug)]
pub struct FlowRun {
    /// Every accepted step, starting with the initial data.
    pub samples: Vec<FlowSample>,
    pub last: FlowState,
    pub outcome: FlowOutcome,
}

impl FlowRun {
    pub fn last(&self) -> &FlowState {
        &self.last
    }
}

/// `−ωH²/4 = −ω𝒦` on the oversampled grid.
pub fn velocity(section: &CrossSection) -> ScalarField {
    section
        .omega_fine()
        .zip_map(section.spacetime_mean_curvature(), |w, h| -0.25 * w * h)
}

/// Coefficients of the velocity from the `u = ln ω` form `−(1 − Δu)/ω`.
fn velocity_coeffs(omega: &SpectralField, fine: &GridSpec) -> Result<SpectralField> {
    let w = synthesize(omega, fine)?;
    let min = w.min();
    if !(min > 0.0) {
        return Err(Error::DegenerateSection { min, max: w.max() });
    }
    let u = w.map(f64::ln);
    let lap = synthesize(&analyze_to(&u, fine.max_degree())?.laplacian(), fine)?;
    let vel = w.zip_map(&lap, |w, l| -(1.0 - l) / w);
    analyze_to(&vel, omega.bandlimit())
}

fn rk4(omega: &SpectralField, dt: f64, fine: &GridSpec) -> Result<SpectralField> {
    let k1 = velocity_coeffs(omega, fine)?;
    let k2 = velocity_coeffs(&omega.add_scaled(&k1, 0.5 * dt), fine)?;
    let k3 = velocity_coeffs(&omega.add_scaled(&k2, 0.5 * dt), fine)?;
    let k4 = velocity_coeffs(&omega.add_scaled(&k3, dt), fine)?;
    let incr = k1.add_scaled(&k2, 2.0).add_scaled(&k3, 2.0).add_scaled(&k4, 1.0);
    Ok(omega.add_scaled(&incr, dt / 6.0))
}

/// Step size: the curvature rule `cfl · (min ω / r)² / (32 max|𝒦|)` capped by
/// the RK4 stability limit of the top retained mode, `2.5 cfl · min ω² / (L(L+1))`.
///
/// Measuring `min ω` against the area radius keeps the curvature rule scale
/// invariant, so shrinking round spheres take geometrically shrinking steps.
pub fn stable_dt(section: &CrossSection, config: &FlowConfig) -> f64 {
    let w = section.omega_fine();
    let min_w2 = w.min().powi(2);
    let max_k = 0.25 * section.spacetime_mean_curvature().max_abs();
    let l = section.bandlimit() as f64;
    let r2 = section.area_radius().powi(2);
    let curvature = if max_k > 0.0 {
        config.cfl_safety * min_w2 / (r2 * 32.0 * max_k)
    } else {
        f64::INFINITY
    };
    let stability = 2.5 * config.cfl_safety * min_w2 / (l * (l + 1.0));
    config.dt_initial.min(curvature).min(stability)
}

/// Number of times a rejected step is retried with half the step.
pub const MAX_HALVINGS: usize = 10;

/// One RK4 step of size at most `dt` (halved on loss of positivity). In
/// normalized mode the result is rescaled to area radius `r_target`.
pub fn step(state: &FlowState, dt: f64, r_target: Option<f64>) -> Result<FlowState> {
    let fine = state.section.fine_grid().clone();
    let mut h = dt;
    for _ in 0..=MAX_HALVINGS {
        let attempt = rk4(state.section.omega(), h, &fine).and_then(|mut c| {
            if let Some(r) = r_target {
                // area is Σ c² by Parseval
                let current = (c.l2_norm_sq() / (4.0 * PI)).sqrt();
                c = c.scale(r / current);
            }
            CrossSection::new(c)
        });
        match attempt {
            Ok(section) => return Ok(FlowState::new(state.t + h, section)),
            Err(Error::DegenerateSection { .. }) => h *= 0.5,
            Err(e) => return Err(e),
        }
    }
    Err(Error::DegenerateSection {
        min: 0.0,
        max: state.section.omega_fine().max(),
    })
}

/// Runs the flow until `t_max`, convergence, singularity or the step limit.
pub fn run(initial: &CrossSection, config: &FlowConfig) -> Result<FlowRun> {
    config.validate()?;
    let w0 = initial.omega_fine().min();
    let r_target = config.normalized.then(|| initial.area_radius());
    let mut cur = FlowState::new(0.0, initial.clone());
    let mut samples = vec![cur.sample()];
    let outcome = loop {
        if config.normalized && cur.diagnostics.norm_a_tracefree < config.stop_tracefree_tol {
            break FlowOutcome::Converged;
        }
        let remaining = config.t_max - cur.t;
        if remaining <= 1e-12 * config.t_max.max(1.0) {
            break FlowOutcome::Completed;
        }
        if samples.len() > config.max_steps {
            break FlowOutcome::StepLimit;
        }
        let dt = stable_dt(&cur.section, config).min(remaining);
        let next = match step(&cur, dt, r_target) {
            Ok(s) => s,
            Err(Error::DegenerateSection { .. }) => break FlowOutcome::Singular,
            Err(e) => return Err(e),
        };
        let singular = next.section.omega_fine().min() < 1e-3 * w0;
        samples.push(next.sample());
        cur = next;
        if singular {
            break FlowOutcome::Singular;
        }
    };
    Ok(FlowRun {
        samples,
        last: cur,
        outcome,
    })
}

/// `Q = |Σ| ∫(½(H²)² − 2|Å|²) dμ`.
pub fn monotone_quantity(section: &CrossSection) -> f64 {
    let h2 = section.spacetime_mean_curvature();
    let (_, a) = section.tracefree_a();
    let density = h2.zip_map(&a, |h, a| 0.5 * h * h - 2.0 * a);
    section.area() * section.integrate_on_surface(&density)
}

/// `G = max (|∇H²|²_γ / H² + 3|Å|²_γ)` over the fine grid.
pub fn gradient_monitor(section: &CrossSection) -> Result<f64> {
    let h2 = section.spacetime_mean_curvature();
    let min = h2.min();
    if !(min > 0.0) {
        return Err(Error::MonitorUndefined(min));
    }
    let grad = section.grad_h2_analytic()?;
    let (_, a) = section.tracefree_a();
    let w = section.omega_fine().values();
    let mut g: f64 = 0.0;
    for k in 0..w.len() {
        let dh = grad.theta.values()[k].powi(2) + grad.phi.values()[k].powi(2);
        g = g.max(dh / (w[k] * w[k] * h2.values()[k]) + 3.0 * a.values()[k]);
    }
    Ok(g)
}

/// CSV header of [`write_csv`].
pub const CSV_HEADER: &str = "t,area,area_radius,Q,min_H2,max_K,norm_A_tracefree,gradient_monitor";

/// One row per sample, floats with 17 significant digits.
pub fn write_csv(samples: &[FlowSample], mut out: impl std::io::Write) -> std::io::Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for s in samples {
        let d = &s.diagnostics;
        let g = d.gradient_monitor.unwrap_or(f64::NAN);
        let cols = [s.t, d.area, d.area_radius, d.q, d.min_h2, d.max_k, d.norm_a_tracefree, g];
        let row: Vec<String> = cols.iter().map(|x| crate::io::format_f64(*x)).collect();
        writeln!(out, "{}", row.join(","))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lorentz::{apply_to_section, special_boost};
    use crate::sphere::unit_vector;

    #[test]
    fn velocity_examples() {
        let s = CrossSection::round(8, 1.0).unwrap();
        assert!(velocity(&s).values().iter().all(|v| (v + 1.0).abs() < 1e-12));
        let s = CrossSection::round(8, 2.0).unwrap();
        assert!(velocity(&s).values().iter().all(|v| (v + 0.5).abs() < 1e-12));
        let b = apply_to_section(&special_boost(0.6), &CrossSection::round(24, 1.0).unwrap()).unwrap();
        let vel = velocity(&b);
        for (v, w) in vel.values().iter().zip(b.omega_fine().values()) {
            assert!((v + w).abs() < 1e-8);
        }
    }

    #[test]
    fn fast_velocity_matches_definition() {
        let s = CrossSection::from_fn(16, |t, p| {
            let x = unit_vector(t, p);
            (0.2 * x[0] * x[2] + 0.1 * x[1]).exp()
        })
        .unwrap();
        let fast = velocity_coeffs(s.omega(), s.fine_grid()).unwrap();
        let slow = analyze_to(&velocity(&s), 16).unwrap();
        assert!(fast.sub(&slow).l2_norm() < 1e-9);
    }

    #[test]
    fn round_data_follows_closed_form() {
        let s = CrossSection::round(8, 1.0).unwrap();
        let cfg = FlowConfig {
            dt_initial: 1e-4,
            t_max: 0.1,
            ..FlowConfig::default()
        };
        let run = run(&s, &cfg).unwrap();
        assert_eq!(run.outcome, FlowOutcome::Completed);
        for st in run.samples.iter().step_by(97) {
            let want = (1.0 - 2.0 * st.t).sqrt();
            assert!((st.diagnostics.min_omega - want).abs() < 1e-8);
            assert!((st.diagnostics.max_omega - want).abs() < 1e-8);
        }
        assert!((run.last().t - 0.1).abs() < 1e-12);
    }

    #[test]
    fn rk4_order_on_round_data() {
        let s = CrossSection::round(4, 1.0).unwrap();
        let exact = (1.0f64 - 2.0 * 0.2).sqrt();
        let err = |n: usize| {
            let mut st = FlowState::new(0.0, s.clone());
            for _ in 0..n {
                st = step(&st, 0.2 / n as f64, None).unwrap();
            }
            (st.section.omega_fine().values()[0] - exact).abs()
        };
        let (e1, e2) = (err(16), err(32));
        let order = (e1 / e2).log2();
        assert!(order >= 3.8, "order {order}");
    }

    #[test]
    fn normalized_step_keeps_radius() {
        let s = CrossSection::from_fn(12, |t, _| (0.1 * t.cos().powi(2)).exp()).unwrap();
        let r0 = s.area_radius();
        let st = step(&FlowState::new(0.0, s), 1e-3, Some(r0)).unwrap();
        assert!((st.diagnostics.area_radius - r0).abs() < 1e-12);
    }

    #[test]
    fn unnormalized_round_flow_becomes_singular_at_half() {
        let s = CrossSection::round(4, 1.0).unwrap();
        let cfg = FlowConfig {
            dt_initial: 1e-2,
            t_max: 1.0,
            ..FlowConfig::default()
        };
        let run = run(&s, &cfg).unwrap();
        let last = run.last();
        assert_eq!(run.outcome, FlowOutcome::Singular, "t={} steps={}", last.t, run.samples.len());
        assert!((last.t - 0.5).abs() < 1e-4);
    }

    #[test]
    fn monotone_quantity_examples() {
        let bound = 128.0 * PI * PI;
        for rho in [0.5, 1.0, 3.0] {
            let s = CrossSection::round(8, rho).unwrap();
            assert!((monotone_quantity(&s) - bound).abs() < 1e-9 * bound);
        }
        let b = apply_to_section(&special_boost(0.6), &CrossSection::round(32, 1.0).unwrap()).unwrap();
        assert!((monotone_quantity(&b) - bound).abs() < 1e-7 * bound);
        let p = CrossSection::from_fn(24, |t, p| (0.1 * (t.sin() * t.cos() * p.cos())).exp()).unwrap();
        let q = monotone_quantity(&p);
        assert!(q < bound - 1e-4);
        for c in [0.5, 2.0, 10.0] {
            let qs = monotone_quantity(&p.scaled(c).unwrap());
            assert!((qs - q).abs() < 1e-10 * q);
        }
    }

    #[test]
    fn gradient_monitor_vanishes_on_stcmc_and_scales_quadratically() {
        let b = apply_to_section(&special_boost(0.4), &CrossSection::round(24, 1.0).unwrap()).unwrap();
        assert!(gradient_monitor(&b).unwrap() < 1e-10);
        let g = |eps: f64| {
            let y20 = SpectralField::harmonic(16, 2, 0).scale(eps);
            let s = CrossSection::from_fn(16, |t, p| crate::sphere::evaluate_at(&y20, &[(t, p)])[0].exp()).unwrap();
            gradient_monitor(&s).unwrap()
        };
        // least-squares slope through three equally spaced decades
        let slope = (g(1e-1).log10() - g(1e-3).log10()) / 2.0;
        assert!((slope - 2.0).abs() < 0.1, "{slope}");
    }

    #[test]
    fn csv_has_header_and_rows() {
        let s = CrossSection::round(4, 1.0).unwrap();
        let mut buf = Vec::new();
        write_csv(&[FlowState::new(0.0, s).sample()], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), CSV_HEADER);
        assert_eq!(lines.next().unwrap().split(',').count(), 8);
    }
}
