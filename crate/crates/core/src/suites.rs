//! Seeded verification suites over random sections.
//!
//! Section `i` of a run with seed `s` is drawn from stream `i` of `s`, so
//! results do not depend on thread scheduling and any single failure can be
//! replayed on its own.

use std::f64::consts::PI;
use std::str::FromStr;

use nalgebra::Vector3;
use rand::Rng;
use rand_distr::{Distribution, UnitSphere};
use rayon::prelude::*;
use serde::Serialize;

use crate::cross_section::CrossSection;
use crate::error::{Error, Result};
use crate::estimates::{
    almost_schur, bochner_chain, curvature_deviation, hoelder_lemma, tracefree_gap, InequalityReport,
};
use crate::families::{random_section, rng_for, RandomSpec};
use crate::lorentz::{apply_to_section, balance, boost_toward, z_vector, LorentzMatrix};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Identities,
    Inequalities,
    Equivariance,
    All,
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "identities" => Ok(Suite::Identities),
            "inequalities" => Ok(Suite::Inequalities),
            "equivariance" => Ok(Suite::Equivariance),
            "all" => Ok(Suite::All),
            _ => Err(Error::InvalidInput(format!("unknown suite '{s}'"))),
        }
    }
}

impl Suite {
    fn includes(self, other: Suite) -> bool {
        self == Suite::All || self == other
    }
}

/// Boost speeds cycled through by the equivariance suite.
pub const BOOST_SPEEDS: [f64; 3] = [0.2, 0.6, 1.0];

/// One tolerance check on one section.
#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub section: usize,
    pub name: &'static str,
    pub value: f64,
    pub tolerance: f64,
    pub passed: bool,
    /// hypothesis of the underlying statement not met; reported, not counted
    pub flagged: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub report: Option<InequalityReport>,
}

impl Check {
    fn at_most(section: usize, name: &'static str, value: f64, tolerance: f64) -> Self {
        Self {
            section,
            name,
            value,
            tolerance,
            passed: value <= tolerance,
            flagged: false,
            report: None,
        }
    }

    fn inequality(section: usize, name: &'static str, report: InequalityReport) -> Self {
        Self {
            section,
            name,
            value: report.ratio,
            tolerance: 1.0,
            passed: report.passed,
            flagged: report.hypothesis_violated,
            report: Some(report),
        }
    }

    pub fn is_failure(&self) -> bool {
        !self.passed && !self.flagged
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Summary {
    pub n_pass: usize,
    pub n_fail: usize,
    pub n_flagged: usize,
    /// largest trace-free gap ratio among unflagged sections
    pub max_ratio: f64,
    pub seed: u64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SuiteOutput {
    pub suite: Suite,
    pub n: usize,
    pub seed: u64,
    pub bandlimit: usize,
    pub checks: Vec<Check>,
    pub summary: Summary,
}

impl SuiteOutput {
    pub fn all_passed(&self) -> bool {
        self.summary.n_fail == 0
    }
}

/// The section drawn for index `i`.
pub fn suite_section(spec: &RandomSpec, seed: u64, i: usize) -> Result<CrossSection> {
    random_section(spec, &mut rng_for(seed, i as u64))
}

/// Identity checks on one section.
pub fn identity_checks(i: usize, s: &CrossSection) -> Result<Vec<Check>> {
    let mut out = Vec::new();
    out.push(Check::at_most(
        i,
        "gauss_bonnet",
        (s.integral_h2() / (16.0 * PI) - 1.0).abs(),
        1e-8,
    ));
    let h2 = s.spacetime_mean_curvature();
    let hu = s.spacetime_mean_curvature_u_form()?;
    let scale = h2.max_abs().max(1.0);
    out.push(Check::at_most(
        i,
        "h2_u_form",
        h2.zip_map(&hu, |a, b| (a - b).abs()).max() / scale,
        1e-8,
    ));
    let (_, theta) = s.null_expansions();
    let direct = s.expansion_direct();
    out.push(Check::at_most(
        i,
        "expansion_direct",
        theta.zip_map(&direct, |a, b| (a - b).abs()).max() / theta.max_abs().max(1.0),
        1e-8,
    ));
    out.push(Check::at_most(i, "codazzi", s.codazzi_residual()?, 1e-6));
    out.push(Check::at_most(i, "gap_cross_check", tracefree_gap(s).cross_check, 1e-8));
    out.push(Check::at_most(i, "schur_identity", almost_schur(s).cross_check, 1e-9));
    let chain = bochner_chain(s)?;
    out.push(Check::at_most(i, "bochner_equality", chain.equality_error, 1e-6));
    out.push(Check::at_most(i, "bochner_identity", chain.bochner_error, 1e-6));
    out.push(Check::at_most(i, "poisson_residual", chain.poisson_residual, 1e-7));
    let r = s.area_radius();
    let rz = z_vector(s)?.lorentz_length();
    out.push(Check::at_most(i, "rz_at_least_r", (r - rz) / r, 1e-10));
    Ok(out)
}

/// Inequality checks on one section.
pub fn inequality_checks(i: usize, s: &CrossSection) -> Result<Vec<Check>> {
    let gap = tracefree_gap(s);
    // equality is reserved for STCMC sections
    let spurious_equality = gap.equality && !gap.is_stcmc;
    let mut out = vec![
        Check::inequality(i, "tracefree_gap", gap),
        Check::inequality(i, "almost_schur", almost_schur(s)),
    ];
    out.push(Check::at_most(i, "equality_only_if_stcmc", spurious_equality as u8 as f64, 0.0));
    let measure = s.omega_fine().map(|w| w * w);
    let h2 = s.spacetime_mean_curvature();
    if h2.min() >= 0.0 {
        out.push(Check::inequality(i, "hoelder", hoelder_lemma(h2, &measure)?));
    }
    Ok(out)
}

/// The transformation applied to section `i`: a boost of speed
/// `BOOST_SPEEDS[i mod 3]` in a seeded direction after a seeded rotation.
pub fn suite_transformation(seed: u64, i: usize) -> Result<LorentzMatrix> {
    let mut rng = rng_for(seed ^ 0x5eed_b005, i as u64);
    let dir: [f64; 3] = UnitSphere.sample(&mut rng);
    let axis: [f64; 3] = UnitSphere.sample(&mut rng);
    let angle = 2.0 * PI * rng.gen::<f64>();
    let a = BOOST_SPEEDS[i % BOOST_SPEEDS.len()];
    let boost = boost_toward([a * dir[0], a * dir[1], a * dir[2]]);
    Ok(boost * LorentzMatrix::rotation(axis, angle)?)
}

/// Equivariance and balancing checks on one section.
pub fn equivariance_checks(i: usize, s: &CrossSection, lambda: &LorentzMatrix) -> Result<Vec<Check>> {
    let mut out = Vec::new();
    let mapped = apply_to_section(lambda, s)?;
    let z = z_vector(s)?;
    let zm = z_vector(&mapped)?;
    out.push(Check::at_most(i, "z_equivariance", zm.max_abs_diff(&lambda.apply(&z)), 1e-7));
    out.push(Check::at_most(i, "area_invariance", (mapped.area() / s.area() - 1.0).abs(), 1e-8));
    let (k0, k1) = (curvature_deviation(s), curvature_deviation(&mapped));
    out.push(Check::at_most(i, "curvature_invariance", (k1 - k0).abs() / k0.max(1e-300), 1e-6));
    let b = balance(s)?;
    out.push(Check::at_most(i, "balance_residual", b.residual, 1e-8));
    out.push(Check::at_most(i, "balance_iterations", b.iterations as f64, 2.0));
    let spatial: Vector3<f64> = z_vector(&b.section)?.spatial();
    out.push(Check::at_most(i, "balanced_moments", spatial.amax() / z_vector(&b.section)?.time(), 1e-8));
    Ok(out)
}

fn checks_for(suite: Suite, spec: &RandomSpec, seed: u64, i: usize) -> Result<Vec<Check>> {
    let s = suite_section(spec, seed, i)?;
    let mut out = Vec::new();
    if suite.includes(Suite::Identities) {
        out.extend(identity_checks(i, &s)?);
    }
    if suite.includes(Suite::Inequalities) {
        out.extend(inequality_checks(i, &s)?);
    }
    if suite.includes(Suite::Equivariance) {
        out.extend(equivariance_checks(i, &s, &suite_transformation(seed, i)?)?);
    }
    Ok(out)
}

/// Runs `n` seeded sections through the suite. Sections are processed in
/// parallel; results are collected in index order.
pub fn run_suite(suite: Suite, n: usize, seed: u64, spec: &RandomSpec) -> Result<SuiteOutput> {
    let per_section: Vec<Vec<Check>> = (0..n)
        .into_par_iter()
        .map(|i| checks_for(suite, spec, seed, i))
        .collect::<Result<_>>()?;
    let checks: Vec<Check> = per_section.into_iter().flatten().collect();
    let n_fail = checks.iter().filter(|c| c.is_failure()).count();
    let n_flagged = checks.iter().filter(|c| c.flagged).count();
    let max_ratio = checks
        .iter()
        .filter(|c| c.name == "tracefree_gap" && !c.flagged)
        .map(|c| c.value)
        .fold(0.0, f64::max);
    let summary = Summary {
        n_pass: checks.iter().filter(|c| c.passed).count(),
        n_fail,
        n_flagged,
        max_ratio,
        seed,
    };
    Ok(SuiteOutput {
        suite,
        n,
        seed,
        bandlimit: spec.bandlimit,
        checks,
        summary,
    })
}
