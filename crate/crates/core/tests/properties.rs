use std::collections::BTreeSet;
use std::f64::consts::PI;

use lightcone::cross_section::{w22_distance, CrossSection};
use lightcone::estimates::{almost_schur, tracefree_gap};
use lightcone::families::{boosted_round, perturbed_stcmc, random_field, random_section, rng_for, RandomSpec};
use lightcone::flow::{self, monotone_quantity, FlowConfig};
use lightcone::lorentz::{apply_to_section, boost_toward, decompose, kappa_bound, z_vector, FourVector, LorentzMatrix};
use lightcone::sphere::{
    analyze_to, hessian, integrate, laplacian, synthesize, GridSpec, SpectralField,
};
use proptest::prelude::*;

fn field(seed: u64, l: usize) -> SpectralField {
    random_field(l, &mut rng_for(seed, 0))
}

fn section(seed: u64, bandlimit: usize, amplitude: f64) -> CrossSection {
    let spec = RandomSpec {
        bandlimit,
        l_gen: bandlimit / 3,
        amplitude,
        require_nonneg_h2: false,
        ..RandomSpec::default()
    };
    random_section(&spec, &mut rng_for(seed, 1)).unwrap()
}

fn boost_vec() -> impl Strategy<Value = [f64; 3]> {
    (0.0..0.6f64, 0.0..PI, 0.0..2.0 * PI).prop_map(|(a, t, p)| {
        [a * t.sin() * p.cos(), a * t.sin() * p.sin(), a * t.cos()]
    })
}

fn rotation() -> impl Strategy<Value = LorentzMatrix> {
    (0.1..PI, 0.0..2.0 * PI, -PI..PI).prop_map(|(t, p, angle)| {
        LorentzMatrix::rotation([t.sin() * p.cos(), t.sin() * p.sin(), t.cos()], angle).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn parseval(seed in any::<u64>(), l in 4usize..=12) {
        let (f, g) = (field(seed, l), field(seed ^ 1, l).add_scaled(&SpectralField::harmonic(l, 0, 0), 0.7));
        let grid = GridSpec::oversampled(l).unwrap();
        let (fv, gv) = (synthesize(&f, &grid).unwrap(), synthesize(&g, &grid).unwrap());
        let quad = integrate(&fv.zip_map(&gv, |a, b| a * b));
        let exact = f.dot(&g);
        prop_assert!((quad - exact).abs() <= 1e-10 * f.l2_norm() * g.l2_norm());
    }

    #[test]
    fn harmonics_are_laplacian_eigenfunctions(l in 0usize..=16, m_frac in 0.0..1.0f64) {
        let m = (m_frac * (2 * l + 1) as f64).floor() as i64 - l as i64;
        let grid = GridSpec::new(16).unwrap();
        let y = synthesize(&SpectralField::harmonic(16, l, m), &grid).unwrap();
        let lap = laplacian(&y).unwrap();
        let mu = (l * (l + 1)) as f64;
        let err = lap.zip_map(&y, |a, b| (a + mu * b).abs()).max();
        prop_assert!(err <= 1e-9 * mu.max(1.0), "l={} m={} err={}", l, m, err);
    }

    #[test]
    fn hessian_trace_is_laplacian(seed in any::<u64>(), l in 4usize..=16) {
        let grid = GridSpec::new(l).unwrap();
        let f = synthesize(&field(seed, l), &grid).unwrap();
        let tr = hessian(&f).unwrap().trace();
        let lap = laplacian(&f).unwrap();
        prop_assert!(tr.zip_map(&lap, |a, b| (a - b).abs()).max() <= 1e-8);
    }

    #[test]
    fn tracefree_hessian_kernel(l in 0usize..=8, m_frac in 0.0..1.0f64) {
        let m = (m_frac * (2 * l + 1) as f64).floor() as i64 - l as i64;
        let grid = GridSpec::new(8).unwrap();
        let y = synthesize(&SpectralField::harmonic(8, l, m), &grid).unwrap();
        let tf = hessian(&y).unwrap().tracefree().norm_sq().max().sqrt();
        if l <= 1 {
            prop_assert!(tf <= 1e-9, "l={} m={} |tf|={}", l, m, tf);
        } else {
            prop_assert!(tf > 1e-3, "l={} m={} |tf|={}", l, m, tf);
        }
    }

    #[test]
    fn gauss_bonnet(seed in any::<u64>(), amp in 0.02..0.3f64) {
        let s = section(seed, 24, amp);
        prop_assert!((s.integral_h2() / (16.0 * PI) - 1.0).abs() <= 1e-8);
    }

    #[test]
    fn mean_curvature_forms_agree(seed in any::<u64>(), amp in 0.02..0.3f64) {
        let s = section(seed, 24, amp);
        let h2 = s.spacetime_mean_curvature();
        let hu = s.spacetime_mean_curvature_u_form().unwrap();
        let scale = h2.max_abs().max(1.0);
        prop_assert!(h2.zip_map(&hu, |a, b| (a - b).abs()).max() <= 1e-8 * scale);
        let half = s.second_ff_contraction();
        prop_assert!(half.zip_map(h2, |c, h| (c - 0.5 * h).abs()).max() <= 1e-9 * scale);
    }

    #[test]
    fn codazzi_holds(seed in any::<u64>(), amp in 0.02..0.3f64) {
        let s = section(seed, 32, amp);
        prop_assert!(s.codazzi_residual().unwrap() <= 1e-6);
    }

    #[test]
    fn tracefree_part_detects_stcmc(a in boost_vec(), rho in 0.3..3.0f64, l in 2usize..=4, eps in 0.02..0.1f64) {
        let s = boosted_round(24, rho, a).unwrap();
        prop_assert!(s.tracefree_norm() <= 1e-8);
        let b = (1.0 + a[0] * a[0] + a[1] * a[1] + a[2] * a[2]).sqrt();
        let z = FourVector::new(rho * b, rho * a[0], rho * a[1], rho * a[2]);
        let p = perturbed_stcmc(24, &z, l, 0, eps).unwrap();
        prop_assert!(p.tracefree_norm() >= 1e-3);
    }

    #[test]
    fn w22_is_a_norm(seed in any::<u64>()) {
        let [a, b, c] = [0, 1, 2].map(|k| field(seed.wrapping_add(k), 10));
        let ab = w22_distance(&a, &b).unwrap();
        prop_assert_eq!(ab, w22_distance(&b, &a).unwrap());
        let ac = w22_distance(&a, &c).unwrap();
        let cb = w22_distance(&c, &b).unwrap();
        prop_assert!(ab <= ac + cb + 1e-12);
        prop_assert_eq!(w22_distance(&a, &a).unwrap(), 0.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn z_vector_equivariance_and_area(seed in any::<u64>(), a in boost_vec(), rot in rotation()) {
        let s = section(seed, 48, 0.2);
        let lam = boost_toward(a) * rot;
        let out = apply_to_section(&lam, &s).unwrap();
        let (z, zm) = (z_vector(&s).unwrap(), z_vector(&out).unwrap());
        prop_assert!(zm.max_abs_diff(&lam.apply(&z)) <= 1e-7);
        prop_assert!((out.area() / s.area() - 1.0).abs() <= 1e-8);
    }

    #[test]
    fn group_law(seed in any::<u64>(), a in boost_vec(), b in boost_vec(), rot in rotation()) {
        let s = section(seed, 32, 0.15);
        let (l1, l2) = (boost_toward(a) * rot, boost_toward(b));
        let once = apply_to_section(&(l1 * l2), &s).unwrap();
        let twice = apply_to_section(&l1, &apply_to_section(&l2, &s).unwrap()).unwrap();
        let d = once.omega().sub(twice.omega()).l2_norm() / once.omega().l2_norm();
        prop_assert!(d <= 1e-6, "relative difference {}", d);
    }

    #[test]
    fn decompose_recomposes(a in boost_vec(), rot in rotation()) {
        let lam = boost_toward(a) * rot;
        let (av, d) = decompose(&lam).unwrap();
        prop_assert!((boost_toward(av) * d).max_abs_diff(&lam) <= 1e-9);
        for k in 0..3 {
            prop_assert!((av[k] - a[k]).abs() <= 1e-12);
        }
    }

    #[test]
    fn kappa_is_lorentz_invariant(seed in any::<u64>(), a in boost_vec()) {
        let s = section(seed, 48, 0.1);
        let out = apply_to_section(&boost_toward(a), &s).unwrap();
        let (k0, k1) = (kappa_bound(&s).unwrap(), kappa_bound(&out).unwrap());
        prop_assert!((k0 - k1).abs() <= 1e-6, "kappa {} vs {}", k0, k1);
    }

    #[test]
    fn z_radius_dominates_area_radius(seed in any::<u64>(), amp in 0.0..0.3f64) {
        let s = section(seed, 24, amp);
        let r = s.area_radius();
        let rz = z_vector(&s).unwrap().lorentz_length();
        prop_assert!(rz >= r * (1.0 - 1e-10));
    }

    #[test]
    fn sharp_inequalities_hold(seed in any::<u64>()) {
        let spec = RandomSpec { bandlimit: 24, l_gen: 8, ..RandomSpec::default() };
        let s = random_section(&spec, &mut rng_for(seed, 2)).unwrap();
        let gap = tracefree_gap(&s);
        prop_assert!(gap.passed && gap.ratio <= 1.0 && !gap.equality);
        prop_assert!(gap.cross_check <= 1e-8);
        let schur = almost_schur(&s);
        prop_assert!(schur.passed && schur.cross_check <= 1e-9);
    }

    #[test]
    fn q_is_scaling_invariant_and_bounded(seed in any::<u64>(), amp in 0.02..0.3f64) {
        let s = section(seed, 24, amp);
        let q = monotone_quantity(&s);
        prop_assert!(q <= 128.0 * PI * PI * (1.0 + 1e-8));
        for c in [0.5, 2.0, 10.0] {
            let qc = monotone_quantity(&s.scaled(c).unwrap());
            prop_assert!((qc / q - 1.0).abs() <= 1e-10);
        }
    }

    #[test]
    fn round_flow_is_exact(rho in 0.5..2.0f64) {
        let s = CrossSection::round(4, rho).unwrap();
        let cfg = FlowConfig { dt_initial: 1e-4, t_max: 0.02, ..FlowConfig::default() };
        let run = flow::run(&s, &cfg).unwrap();
        for st in &run.samples {
            let want = (rho * rho - 2.0 * st.t).sqrt();
            prop_assert!((st.diagnostics.min_omega - want).abs() <= 1e-8);
            prop_assert!((st.diagnostics.max_omega - want).abs() <= 1e-8);
        }
    }
}

#[test]
fn flow_area_law_and_monotonicity() {
    let s = section(5, 16, 0.15);
    let cfg = FlowConfig {
        t_max: 0.05,
        ..FlowConfig::default()
    };
    let run = flow::run(&s, &cfg).unwrap();
    let st = &run.samples;
    assert!(st.len() > 4);
    for w in st.windows(3) {
        let slope = (w[2].diagnostics.area - w[0].diagnostics.area) / (w[2].t - w[0].t);
        assert!((slope + 8.0 * PI).abs() <= 1e-5, "slope {slope}");
    }
    for w in st.windows(2) {
        if w[0].diagnostics.min_h2 >= 0.0 {
            assert!(w[1].diagnostics.q >= w[0].diagnostics.q * (1.0 - 1e-6));
        }
    }
}

#[test]
fn project_degrees_selects_blocks() {
    let f = field(2, 6);
    let low: BTreeSet<usize> = (0..=2).collect();
    let high: BTreeSet<usize> = (3..=6).collect();
    let sum = f.project_degrees(&low).add_scaled(&f.project_degrees(&high), 1.0);
    assert_eq!(sum, f);
    let g = analyze_to(&synthesize(&f, &GridSpec::new(6).unwrap()).unwrap(), 6).unwrap();
    assert!(g.sub(&f).l2_norm() < 1e-13);
}
