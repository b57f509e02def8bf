//! Spherical-harmonic analysis and synthesis on Gauss–Legendre grids.
//!
//! Both directions are separable: an FFT along each latitude ring and a
//! Legendre sum per order `m`. θ-derivatives come from the Legendre derivative
//! recurrence and φ-derivatives from multiplying Fourier modes by `m`, so no
//! grid differencing is involved anywhere.

use std::f64::consts::PI;

use rayon::prelude::*;
use rustfft::num_complex::Complex64;

use super::field::{coeff_index, ScalarField, SpectralField};
use super::grid::GridSpec;
use super::legendre::LegendreTable;
use crate::error::{Error, Result};

fn order_norm(m: usize) -> f64 {
    if m == 0 {
        1.0 / (2.0 * PI).sqrt()
    } else {
        1.0 / PI.sqrt()
    }
}

/// Coefficients at the grid's nominal bandlimit.
pub fn analyze(f: &ScalarField) -> SpectralField {
    analyze_to(f, f.grid().bandlimit()).expect("grid bandlimit is always exact")
}

/// Quadrature projection onto degrees `≤ lmax`; exact for fields of degree
/// `≤ grid.max_degree()` when `lmax ≤ grid.max_degree()`.
pub fn analyze_to(f: &ScalarField, lmax: usize) -> Result<SpectralField> {
    let grid = f.grid();
    if lmax > grid.max_degree() {
        return Err(Error::GridTooCoarse {
            degree: lmax,
            grid_degree: grid.max_degree(),
        });
    }
    let n_phi = grid.n_phi();
    let table = LegendreTable::new(lmax);
    let mut p = vec![0.0; table.len()];
    let mut ring = vec![Complex64::new(0.0, 0.0); n_phi];
    let mut out = SpectralField::zeros(lmax);
    let coeffs = out.coeffs_mut();
    let fft = grid.fft_forward().clone();
    let dphi = grid.phi_step();
    for i in 0..grid.n_theta() {
        for (z, v) in ring.iter_mut().zip(&f.values()[i * n_phi..(i + 1) * n_phi]) {
            *z = Complex64::new(*v, 0.0);
        }
        fft.process(&mut ring);
        let cut = table.fill(grid.cos_theta()[i], grid.sin_theta()[i], &mut p);
        let w = grid.glq_weights()[i] * dphi;
        for m in 0..cut.min(lmax + 1) {
            let a = w * order_norm(m) * ring[m].re;
            let b = -w * order_norm(m) * ring[m].im;
            for l in m..=lmax {
                let pv = p[table.index(l, m)];
                coeffs[coeff_index(l, m as i64)] += a * pv;
                if m > 0 {
                    coeffs[coeff_index(l, -(m as i64))] += b * pv;
                }
            }
        }
    }
    Ok(out)
}

/// Pointwise synthesis `Σ c_lm Y_l^m` on the grid.
pub fn synthesize(c: &SpectralField, grid: &GridSpec) -> Result<ScalarField> {
    let out = synthesize_impl(c, grid, false)?;
    Ok(ScalarField::from_raw(grid.clone(), out.value))
}

/// Grid values of a field together with its coordinate derivatives.
///
/// `d_phi`, `d_theta_phi` and `d_phi_phi` are coordinate derivatives in φ;
/// frame quantities are assembled in [`calculus`](super::calculus).
#[derive(Clone, Debug)]
pub struct RawDerivatives {
    pub value: Vec<f64>,
    pub d_theta: Vec<f64>,
    pub d_phi: Vec<f64>,
    pub d_theta_phi: Vec<f64>,
    pub d_phi_phi: Vec<f64>,
    pub d_theta_theta: Vec<f64>,
    pub laplacian: Vec<f64>,
}

pub(crate) fn synthesize_derivatives(c: &SpectralField, grid: &GridSpec) -> Result<RawDerivatives> {
    synthesize_impl(c, grid, true)
}

fn synthesize_impl(c: &SpectralField, grid: &GridSpec, derivs: bool) -> Result<RawDerivatives> {
    let lmax = c.bandlimit();
    if lmax > grid.max_degree() {
        return Err(Error::GridTooCoarse {
            degree: lmax,
            grid_degree: grid.max_degree(),
        });
    }
    let n_phi = grid.n_phi();
    let n = grid.len();
    let table = LegendreTable::new(lmax);
    let mut p = vec![0.0; table.len()];
    let mut dp = vec![0.0; if derivs { table.len() } else { 0 }];
    let coeffs = c.coeffs();
    let fft = grid.fft_inverse().clone();

    let alloc = |on: bool| if on { vec![0.0; n] } else { Vec::new() };
    let mut out = RawDerivatives {
        value: vec![0.0; n],
        d_theta: alloc(derivs),
        d_phi: alloc(derivs),
        d_theta_phi: alloc(derivs),
        d_phi_phi: alloc(derivs),
        d_theta_theta: alloc(derivs),
        laplacian: alloc(derivs),
    };

    // Fourier cosine/sine amplitudes per order for S0 = Σ c P, S1 = Σ c P', S2 = Σ l(l+1) c P
    let mut s0 = vec![(0.0, 0.0); lmax + 1];
    let mut s1 = vec![(0.0, 0.0); lmax + 1];
    let mut s2 = vec![(0.0, 0.0); lmax + 1];
    let mut ring = vec![Complex64::new(0.0, 0.0); n_phi];

    let mut emit = |amps: &mut dyn Iterator<Item = (usize, f64, f64)>, dst: &mut [f64]| {
        for z in ring.iter_mut() {
            *z = Complex64::new(0.0, 0.0);
        }
        for (m, cm, sm) in amps {
            if m == 0 {
                ring[0] = Complex64::new(cm, 0.0);
            } else {
                ring[m] = Complex64::new(0.5 * cm, -0.5 * sm);
                ring[n_phi - m] = Complex64::new(0.5 * cm, 0.5 * sm);
            }
        }
        fft.process(&mut ring);
        for (d, z) in dst.iter_mut().zip(&ring) {
            *d = z.re;
        }
    };

    for i in 0..grid.n_theta() {
        let (x, s) = (grid.cos_theta()[i], grid.sin_theta()[i]);
        let cut = table.fill(x, s, &mut p).min(lmax + 1);
        if derivs {
            table.fill_derivative(x, s, &p, &mut dp, cut);
        }
        for m in 0..=lmax {
            s0[m] = (0.0, 0.0);
            s1[m] = (0.0, 0.0);
            s2[m] = (0.0, 0.0);
        }
        for m in 0..cut {
            let norm = order_norm(m);
            let (mut c0, mut d0, mut c1, mut d1, mut c2, mut d2) = (0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
            for l in m..=lmax {
                let k = table.index(l, m);
                let cc = coeffs[coeff_index(l, m as i64)];
                let cs = if m > 0 { coeffs[coeff_index(l, -(m as i64))] } else { 0.0 };
                let pv = p[k];
                c0 += cc * pv;
                d0 += cs * pv;
                if derivs {
                    let dv = dp[k];
                    c1 += cc * dv;
                    d1 += cs * dv;
                    let ll = (l * (l + 1)) as f64;
                    c2 += ll * cc * pv;
                    d2 += ll * cs * pv;
                }
            }
            s0[m] = (norm * c0, norm * d0);
            s1[m] = (norm * c1, norm * d1);
            s2[m] = (norm * c2, norm * d2);
        }
        let row = i * n_phi..(i + 1) * n_phi;
        emit(&mut s0.iter().enumerate().map(|(m, &(a, b))| (m, a, b)), &mut out.value[row.clone()]);
        if !derivs {
            continue;
        }
        emit(&mut s1.iter().enumerate().map(|(m, &(a, b))| (m, a, b)), &mut out.d_theta[row.clone()]);
        emit(
            &mut s0.iter().enumerate().map(|(m, &(a, b))| (m, m as f64 * b, -(m as f64) * a)),
            &mut out.d_phi[row.clone()],
        );
        emit(
            &mut s1.iter().enumerate().map(|(m, &(a, b))| (m, m as f64 * b, -(m as f64) * a)),
            &mut out.d_theta_phi[row.clone()],
        );
        emit(
            &mut s0.iter().enumerate().map(|(m, &(a, b))| {
                let mm = (m * m) as f64;
                (m, -mm * a, -mm * b)
            }),
            &mut out.d_phi_phi[row.clone()],
        );
        emit(&mut s2.iter().enumerate().map(|(m, &(a, b))| (m, -a, -b)), &mut out.laplacian[row.clone()]);
        // Legendre equation: ∂²_θ f = Δf - cot θ ∂_θ f - ∂²_φ f / sin²θ
        let cot = x / s;
        let inv_s2 = 1.0 / (s * s);
        for k in row {
            out.d_theta_theta[k] = out.laplacian[k] - cot * out.d_theta[k] - inv_s2 * out.d_phi_phi[k];
        }
    }
    Ok(out)
}

/// Exact synthesis at arbitrary points `(θ, φ)`; pole points take the `m = 0` limit.
pub fn evaluate_at(c: &SpectralField, points: &[(f64, f64)]) -> Vec<f64> {
    let lmax = c.bandlimit();
    let table = LegendreTable::new(lmax);
    let coeffs = c.coeffs();
    points
        .par_chunks(256)
        .flat_map_iter(|chunk| {
            let mut p = vec![0.0; table.len()];
            chunk
                .iter()
                .map(|&(theta, phi)| {
                    let (x, s) = (theta.cos(), theta.sin().abs());
                    let cut = table.fill(x, s, &mut p).min(lmax + 1);
                    let (c1, s1) = (phi.cos(), phi.sin());
                    let (mut cm, mut sm) = (1.0, 0.0);
                    let mut acc = 0.0;
                    for m in 0..cut {
                        if m > 0 {
                            let next = (cm * c1 - sm * s1, sm * c1 + cm * s1);
                            cm = next.0;
                            sm = next.1;
                        }
                        let (mut a, mut b) = (0.0, 0.0);
                        for l in m..=lmax {
                            let pv = p[table.index(l, m)];
                            a += coeffs[coeff_index(l, m as i64)] * pv;
                            if m > 0 {
                                b += coeffs[coeff_index(l, -(m as i64))] * pv;
                            }
                        }
                        acc += order_norm(m) * (a * cm + b * sm);
                    }
                    acc
                })
                .collect::<Vec<_>>()
        })
        .collect()
}
