//! Gauss–Legendre × equispaced-longitude quadrature grids.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Smallest bandlimit accepted by the grid constructors.
pub const MIN_BANDLIMIT: usize = 4;

/// Quadrature grid on the round sphere.
///
/// Colatitudes are the Gauss–Legendre nodes in `cos θ` (sorted so that θ
/// increases); longitudes are `φ_j = 2πj / n_phi`. No node sits on a pole.
/// Cloning is cheap: the node tables and FFT plans are shared.
#[derive(Clone)]
pub struct GridSpec {
    inner: Arc<GridData>,
}

struct GridData {
    bandlimit: usize,
    n_theta: usize,
    n_phi: usize,
    theta: Vec<f64>,
    cos_theta: Vec<f64>,
    sin_theta: Vec<f64>,
    weights: Vec<f64>,
    fft_forward: Arc<dyn Fft<f64>>,
    fft_inverse: Arc<dyn Fft<f64>>,
}

impl GridSpec {
    /// Analysis grid for degree-`L` fields: `L+1` colatitudes, `2L+2` longitudes.
    pub fn new(bandlimit: usize) -> Result<Self> {
        Self::with_size(bandlimit, bandlimit + 1, 2 * bandlimit + 2)
    }

    /// Oversampled grid (`2L+1` × `4L+2`), exact for products of two degree-`L` fields.
    pub fn oversampled(bandlimit: usize) -> Result<Self> {
        Self::with_size(bandlimit, 2 * bandlimit + 1, 4 * bandlimit + 2)
    }

    pub fn with_size(bandlimit: usize, n_theta: usize, n_phi: usize) -> Result<Self> {
        if bandlimit < MIN_BANDLIMIT {
            return Err(Error::InvalidBandlimit(bandlimit));
        }
        if n_theta < bandlimit + 1 || n_phi < 2 * bandlimit + 1 {
            return Err(Error::GridTooCoarse {
                degree: bandlimit,
                grid_degree: (n_theta.saturating_sub(1)).min(n_phi.saturating_sub(1) / 2),
            });
        }
        let (nodes, weights) = gauss_legendre(n_theta);
        // nodes are ascending in x = cos θ; reverse for ascending θ
        let cos_theta: Vec<f64> = nodes.iter().rev().copied().collect();
        let weights: Vec<f64> = weights.iter().rev().copied().collect();
        let theta: Vec<f64> = cos_theta.iter().map(|x| x.acos()).collect();
        let sin_theta: Vec<f64> = cos_theta.iter().map(|x| (1.0 - x * x).sqrt()).collect();
        let mut planner = FftPlanner::new();
        let fft_forward = planner.plan_fft_forward(n_phi);
        let fft_inverse = planner.plan_fft_inverse(n_phi);
        Ok(Self {
            inner: Arc::new(GridData {
                bandlimit,
                n_theta,
                n_phi,
                theta,
                cos_theta,
                sin_theta,
                weights,
                fft_forward,
                fft_inverse,
            }),
        })
    }

    pub fn bandlimit(&self) -> usize {
        self.inner.bandlimit
    }

    pub fn n_theta(&self) -> usize {
        self.inner.n_theta
    }

    pub fn n_phi(&self) -> usize {
        self.inner.n_phi
    }

    pub fn len(&self) -> usize {
        self.inner.n_theta * self.inner.n_phi
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn theta_nodes(&self) -> &[f64] {
        &self.inner.theta
    }

    pub fn cos_theta(&self) -> &[f64] {
        &self.inner.cos_theta
    }

    pub fn sin_theta(&self) -> &[f64] {
        &self.inner.sin_theta
    }

    pub fn glq_weights(&self) -> &[f64] {
        &self.inner.weights
    }

    pub fn phi_step(&self) -> f64 {
        2.0 * PI / self.inner.n_phi as f64
    }

    pub fn phi(&self, j: usize) -> f64 {
        self.phi_step() * j as f64
    }

    /// Highest degree `K` for which analysis of a degree-`K` field is exact.
    pub fn max_degree(&self) -> usize {
        (self.inner.n_theta - 1).min((self.inner.n_phi - 1) / 2)
    }

    /// Quadrature weight attached to grid point `(i, j)`.
    pub fn point_weight(&self, i: usize) -> f64 {
        self.inner.weights[i] * self.phi_step()
    }

    pub fn total_weight(&self) -> f64 {
        self.inner.weights.iter().sum::<f64>() * self.phi_step() * self.inner.n_phi as f64
    }

    /// Iterator over `(θ, φ)` in storage order (row-major in θ).
    pub fn points(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        let n_phi = self.inner.n_phi;
        (0..self.len()).map(move |k| (self.inner.theta[k / n_phi], self.phi(k % n_phi)))
    }

    pub(crate) fn fft_forward(&self) -> &Arc<dyn Fft<f64>> {
        &self.inner.fft_forward
    }

    pub(crate) fn fft_inverse(&self) -> &Arc<dyn Fft<f64>> {
        &self.inner.fft_inverse
    }

    pub(crate) fn same_as(&self, other: &GridSpec) -> bool {
        Arc::ptr_eq(&self.inner, &other.inner) || self == other
    }
}

impl PartialEq for GridSpec {
    fn eq(&self, other: &Self) -> bool {
        self.inner.bandlimit == other.inner.bandlimit
            && self.inner.n_theta == other.inner.n_theta
            && self.inner.n_phi == other.inner.n_phi
    }
}

impl fmt::Debug for GridSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GridSpec")
            .field("bandlimit", &self.inner.bandlimit)
            .field("n_theta", &self.inner.n_theta)
            .field("n_phi", &self.inner.n_phi)
            .finish()
    }
}

/// Gauss–Legendre nodes (ascending) and weights on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let half = n.div_ceil(2);
    for i in 0..half {
        // Tricomi initial guess for the i-th largest root
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_p_and_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_p_and_derivative(n, x);
        if d.is_finite() {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[n - 1 - i] = x;
        weights[n - 1 - i] = w;
        nodes[i] = -x;
        weights[i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

fn legendre_p_and_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 1..n {
        let p2 = ((2 * k + 1) as f64 * x * p1 - k as f64 * p0) / (k + 1) as f64;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}
