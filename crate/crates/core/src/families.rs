//! Seeded random sections and the closed-form families used in experiments.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::cross_section::CrossSection;
use crate::error::{Error, Result};
use crate::lorentz::{stcmc_factor, FourVector};
use crate::sphere::{synthesize, unit_vector, GridSpec, ScalarField, SpectralField};

/// Generator stream for item `index` of a seeded collection.
pub fn rng_for(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Band-limited random field with Gaussian spectral envelope `e^{−l²/25}`,
/// zero mean, normalized so that the RMS of its Laplacian is one.
pub fn random_field(l_gen: usize, rng: &mut ChaCha8Rng) -> SpectralField {
    let mut c = SpectralField::zeros(l_gen);
    for l in 1..=l_gen {
        let env = (-((l * l) as f64) / 25.0).exp();
        for m in -(l as i64)..=l as i64 {
            let g: f64 = StandardNormal.sample(rng);
            c.set(l, m, g * env);
        }
    }
    let rms_lap = c.laplacian().l2_norm() / (4.0 * std::f64::consts::PI).sqrt();
    c.scale(1.0 / rms_lap)
}

/// `ω = base · exp(c·u)` for a spectral `u`, projected to the bandlimit.
fn modulated(bandlimit: usize, base: impl Fn(f64, f64) -> f64, u: &SpectralField, c: f64) -> Result<CrossSection> {
    let fine = GridSpec::oversampled(bandlimit)?;
    let uv = synthesize(&u.resized(u.bandlimit().min(fine.max_degree())), &fine)?;
    let values = fine
        .points()
        .zip(uv.values())
        .map(|((t, p), u)| base(t, p) * (c * u).exp())
        .collect();
    CrossSection::from_samples(&ScalarField::new(fine, values)?)
}

/// `ω = exp(c·u)` for a spectral `u`, projected to the bandlimit.
pub fn exp_section(bandlimit: usize, u: &SpectralField, c: f64) -> Result<CrossSection> {
    modulated(bandlimit, |_, _| 1.0, u, c)
}

/// Parameters of [`random_section`].
#[derive(Clone, Copy, Debug)]
pub struct RandomSpec {
    pub bandlimit: usize,
    pub l_gen: usize,
    pub amplitude: f64,
    /// Reject draws with `min H² < 0`.
    pub require_nonneg_h2: bool,
    pub max_attempts: usize,
}

impl Default for RandomSpec {
    fn default() -> Self {
        Self {
            bandlimit: 48,
            l_gen: 12,
            amplitude: 0.3,
            require_nonneg_h2: true,
            max_attempts: 64,
        }
    }
}

/// Random section `exp(c·u)`, rejection-sampled on `min H² ≥ 0` if requested.
pub fn random_section(spec: &RandomSpec, rng: &mut ChaCha8Rng) -> Result<CrossSection> {
    if spec.l_gen == 0 || spec.l_gen > spec.bandlimit {
        return Err(Error::InvalidInput(format!(
            "generation degree {} must lie in 1..={}",
            spec.l_gen, spec.bandlimit
        )));
    }
    for _ in 0..spec.max_attempts {
        let u = random_field(spec.l_gen, rng);
        let s = exp_section(spec.bandlimit, &u, spec.amplitude)?;
        if !spec.require_nonneg_h2 || s.min_h2() >= 0.0 {
            return Ok(s);
        }
    }
    Err(Error::GenerationFailed(format!(
        "no section with nonnegative H² in {} attempts",
        spec.max_attempts
    )))
}

/// `ρ/(√(1+|a|²) − a·x)`, the image of the round sphere of radius ρ under `Λ_a`.
pub fn boosted_round(bandlimit: usize, rho: f64, a: [f64; 3]) -> Result<CrossSection> {
    if !(rho > 0.0) {
        return Err(Error::GenerationFailed(format!("radius must be positive, got {rho}")));
    }
    let b = (1.0 + a[0] * a[0] + a[1] * a[1] + a[2] * a[2]).sqrt();
    let z = FourVector::new(rho * b, rho * a[0], rho * a[1], rho * a[2]);
    CrossSection::from_fn(bandlimit, move |t, p| stcmc_factor(&z, unit_vector(t, p)))
}

/// `ω_z · exp(ε Y_l^m)`.
pub fn perturbed_stcmc(bandlimit: usize, z: &FourVector, l: usize, m: i64, eps: f64) -> Result<CrossSection> {
    modulated_stcmc(bandlimit, z, &SpectralField::harmonic(l, l, m), eps)
}

/// `ω_z · exp(ε u)`.
pub fn modulated_stcmc(bandlimit: usize, z: &FourVector, u: &SpectralField, eps: f64) -> Result<CrossSection> {
    let z = *z;
    modulated(bandlimit, move |t, p| stcmc_factor(&z, unit_vector(t, p)), u, eps)
}

/// `1/(1 + s Y_l^m)`.
pub fn inverse_harmonic(bandlimit: usize, l: usize, m: i64, s: f64) -> Result<CrossSection> {
    if 2 * l > bandlimit {
        return Err(Error::InvalidInput(format!("degree {l} needs bandlimit at least {}", 2 * l)));
    }
    let fine = GridSpec::oversampled(bandlimit)?;
    let yv = synthesize(&SpectralField::harmonic(l, l, m), &fine)?;
    let min = 1.0 - s.abs() * yv.max_abs();
    if !(min > 0.0) {
        return Err(Error::SRangeTooLarge(min));
    }
    CrossSection::from_samples(&yv.map(|y| 1.0 / (1.0 + s * y)))
}

/// Smallest bandlimit at which `1/(√(1+k²) − k cos θ)` is resolved to
/// double precision (its Legendre coefficients decay like `tᴸ`,
/// `t = (√(1+k²) − 1)/k`).
pub fn divergent_bandlimit(k: f64) -> usize {
    if k.abs() < 1e-12 {
        return crate::sphere::MIN_BANDLIMIT;
    }
    let t = ((1.0 + k * k).sqrt() - 1.0) / k.abs();
    let wmax = (1.0 + k * k).sqrt() + k.abs();
    let l = ((1e-17 / wmax).ln() / t.ln()).ceil() as usize;
    l.max(crate::sphere::MIN_BANDLIMIT)
}

/// Member `k` of the divergent STCMC family `1/(√(1+k²) − k cos θ)`.
///
/// The coefficients are exact rather than projected: by Heine's formula
/// `1/(z − x) = Σ (2l+1) Q_l(z) P_l(x)`, and sampling noise would otherwise
/// be amplified by `l²` in every curvature quantity at these bandlimits.
pub fn divergent_member(k: f64, bandlimit: usize) -> Result<CrossSection> {
    if k.abs() < 1e-12 {
        return CrossSection::round(bandlimit, 1.0);
    }
    let (sign, k) = (k.signum(), k.abs());
    let b = (1.0 + k * k).sqrt();
    let z = b / k;
    // Q_0(z) with z − 1 = 1/(k(b + k)) formed without cancellation
    let q0 = 0.5 * ((z + 1.0) * k * (b + k)).ln();
    // backward recurrence for r_l = Q_l/Q_{l−1}, started at the asymptotic ratio
    let t = (b - 1.0) / k;
    let n = bandlimit + 64;
    let mut r = vec![0.0; n + 2];
    r[n + 1] = t;
    for l in (1..=n).rev() {
        r[l] = l as f64 / ((2 * l + 1) as f64 * z - (l + 1) as f64 * r[l + 1]);
    }
    let mut c = SpectralField::zeros(bandlimit);
    let mut q = q0;
    for l in 0..=bandlimit {
        if l > 0 {
            q *= r[l];
        }
        let norm = (4.0 * std::f64::consts::PI * (2 * l + 1) as f64).sqrt() / k;
        let parity = if l % 2 == 1 { sign } else { 1.0 };
        c.set(l, 0, parity * norm * q);
    }
    CrossSection::new(c)
}
