//! Fully normalized associated Legendre functions.
//!
//! `P̃_l^m(cos θ)` is normalized so that `∫₀^π (P̃_l^m)² sin θ dθ = 1` and carries
//! no Condon–Shortley phase. Values are produced for all `0 ≤ m ≤ l ≤ lmax` at
//! one colatitude with the standard stable three-term recurrence in `l`,
//! seeded from the sectoral diagonal.

/// Precomputed recurrence coefficients for a fixed `lmax`.
pub(crate) struct LegendreTable {
    lmax: usize,
    /// `a_lm` in `P̃_lm = a_lm (x P̃_{l-1,m} - b_lm P̃_{l-2,m})`
    a: Vec<f64>,
    b: Vec<f64>,
    /// `sqrt((2l+1)/(2l-1) (l²-m²))`, used by the θ-derivative
    d: Vec<f64>,
    offsets: Vec<usize>,
}

/// Below this magnitude the sectoral seed is flushed to zero together with
/// every higher order on the same ring.
const UNDERFLOW: f64 = 1e-290;

impl LegendreTable {
    pub(crate) fn new(lmax: usize) -> Self {
        let mut offsets = Vec::with_capacity(lmax + 2);
        let mut acc = 0;
        for m in 0..=lmax {
            offsets.push(acc);
            acc += lmax + 1 - m;
        }
        offsets.push(acc);
        let mut a = vec![0.0; acc];
        let mut b = vec![0.0; acc];
        let mut d = vec![0.0; acc];
        for m in 0..=lmax {
            for l in m..=lmax {
                let k = offsets[m] + (l - m);
                let (lf, mf) = (l as f64, m as f64);
                if l >= m + 2 {
                    a[k] = ((4.0 * lf * lf - 1.0) / (lf * lf - mf * mf)).sqrt();
                    let l1 = lf - 1.0;
                    b[k] = ((l1 * l1 - mf * mf) / (4.0 * l1 * l1 - 1.0)).sqrt();
                }
                if l > m {
                    d[k] = ((2.0 * lf + 1.0) / (2.0 * lf - 1.0) * (lf * lf - mf * mf)).sqrt();
                }
            }
        }
        Self {
            lmax,
            a,
            b,
            d,
            offsets,
        }
    }

    pub(crate) fn len(&self) -> usize {
        self.offsets[self.lmax + 1]
    }

    /// Position of `(l, m)` in the m-major value buffers.
    #[inline]
    pub(crate) fn index(&self, l: usize, m: usize) -> usize {
        self.offsets[m] + (l - m)
    }

    /// Fills `p` with `P̃_l^m(x)` for `x = cos θ`, `s = sin θ ≥ 0`.
    ///
    /// Returns the first order `m` whose values were flushed to zero (or
    /// `lmax + 1` if none were).
    pub(crate) fn fill(&self, x: f64, s: f64, p: &mut [f64]) -> usize {
        let lmax = self.lmax;
        let mut diag = std::f64::consts::FRAC_1_SQRT_2;
        let mut cut = lmax + 1;
        for m in 0..=lmax {
            if m > 0 {
                let mf = m as f64;
                diag *= ((2.0 * mf + 1.0) / (2.0 * mf)).sqrt() * s;
            }
            if diag.abs() < UNDERFLOW {
                cut = m;
                for v in &mut p[self.offsets[m]..self.offsets[lmax + 1]] {
                    *v = 0.0;
                }
                break;
            }
            let base = self.offsets[m];
            p[base] = diag;
            if m < lmax {
                p[base + 1] = (2.0 * m as f64 + 3.0).sqrt() * x * diag;
            }
            for l in (m + 2)..=lmax {
                let k = base + (l - m);
                p[k] = self.a[k] * (x * p[k - 1] - self.b[k] * p[k - 2]);
            }
        }
        cut
    }

    /// Fills `dp` with `dP̃_l^m/dθ` given values from [`fill`](Self::fill).
    /// Requires `s > 0`.
    pub(crate) fn fill_derivative(&self, x: f64, s: f64, p: &[f64], dp: &mut [f64], cut: usize) {
        let inv_s = 1.0 / s;
        for m in 0..cut.min(self.lmax + 1) {
            let base = self.offsets[m];
            for l in m..=self.lmax {
                let k = base + (l - m);
                let prev = if l > m { p[k - 1] } else { 0.0 };
                dp[k] = (l as f64 * x * p[k] - self.d[k] * prev) * inv_s;
            }
        }
        for v in &mut dp[self.offsets[cut.min(self.lmax + 1)]..] {
            *v = 0.0;
        }
    }
}
