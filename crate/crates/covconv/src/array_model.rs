//! ULA array response, real measurement kernels, and the closed-form Gram
//! matrices.
//!
//! A ULA covariance is Hermitian Toeplitz, so it is fully described by its
//! first column. Splitting that column into real and imaginary parts gives
//! 2N real measurement kernels
//!
//! ```text
//! g_m(θ) = (1/N) cos(z_m sinθ)        m = 0..N-1,  z_m = 2π (d/λ) m
//! g_{N+m}(θ) = (1/N) sin(z_m sinθ)
//! ```
//!
//! over the sector `[-π/2, π/2]`. All pairwise inner products reduce to
//! integrals of the form `∫ cos(z sinθ) dθ = π J0(z)`, which yields the
//! analytic block-diagonal Gram matrices `G^u` (UL/UL) and `Q` (DL/UL).

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use crate::{C64, CVec, Error, RMat, Result};

/// Bessel function of the first kind, order zero.
///
/// Absolute error below 1e-10 for |x| ≤ 1e4. Power series up to |x| < 14,
/// Hankel asymptotic expansion beyond.
pub fn bessel_j0(x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::Domain(format!("bessel_j0: non-finite input {x}")));
    }
    Ok(j0(x))
}

pub(crate) fn j0(x: f64) -> f64 {
    let ax = x.abs();
    if ax < 14.0 {
        j0_series(ax)
    } else {
        j0_asymptotic(ax)
    }
}

fn j0_series(ax: f64) -> f64 {
    let q = 0.25 * ax * ax;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..200 {
        let k = k as f64;
        term *= -q / (k * k);
        sum += term;
        if term.abs() < 1e-18 {
            break;
        }
    }
    sum
}

/// Hankel expansion: J0 ~ sqrt(2/(πx)) [P(x) cos(x-π/4) - Q(x) sin(x-π/4)],
/// with the asymptotic series truncated at its smallest term.
fn j0_asymptotic(ax: f64) -> f64 {
    let z = 1.0 / ax;
    // signed Hankel coefficients a_k = (-1)(-9)...(-(2k-1)^2) / (k! 8^k)
    let mut a = 1.0f64;
    let mut p = 0.0;
    let mut q = 0.0;
    let mut zp = 1.0; // z^k
    let mut prev = f64::INFINITY;
    for k in 0u32..40 {
        let term = a * zp;
        if term.abs() >= prev {
            break; // divergent tail reached
        }
        prev = term.abs();
        // (-1)^(k/2) pattern for the alternating outer sums
        let sign = if (k / 2) % 2 == 0 { 1.0 } else { -1.0 };
        if k % 2 == 0 {
            p += sign * term;
        } else {
            q += sign * term;
        }
        let kf = (k + 1) as f64;
        a *= -(2.0 * kf - 1.0) * (2.0 * kf - 1.0) / (8.0 * kf);
        zp *= z;
        if prev < 1e-18 {
            break;
        }
    }
    let chi = ax - FRAC_PI_4;
    (2.0 / (PI * ax)).sqrt() * (p * chi.cos() - q * chi.sin())
}

/// Uniform linear array geometry: antenna count, element spacing, and carrier
/// wavelength.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArrayGeometry {
    n_antennas: usize,
    spacing_m: f64,
    wavelength_m: f64,
}

impl ArrayGeometry {
    pub fn new(n_antennas: usize, spacing_m: f64, wavelength_m: f64) -> Result<Self> {
        if n_antennas == 0 {
            return Err(Error::InvalidInput("antenna count must be >= 1".into()));
        }
        if spacing_m.is_nan() || spacing_m <= 0.0 || wavelength_m.is_nan() || wavelength_m <= 0.0 {
            return Err(Error::InvalidInput(format!(
                "spacing and wavelength must be positive (got d={spacing_m}, lambda={wavelength_m})"
            )));
        }
        Ok(Self {
            n_antennas,
            spacing_m,
            wavelength_m,
        })
    }

    /// Half-wavelength spacing at the given carrier frequency.
    pub fn half_wavelength(n_antennas: usize, freq_hz: f64) -> Result<Self> {
        let lambda = 299_792_458.0 / freq_hz;
        Self::new(n_antennas, lambda / 2.0, lambda)
    }

    pub fn n_antennas(&self) -> usize {
        self.n_antennas
    }

    pub fn spacing_m(&self) -> f64 {
        self.spacing_m
    }

    pub fn wavelength_m(&self) -> f64 {
        self.wavelength_m
    }

    /// Spatial frequency of element `n` (0-based): z_n = 2π (d/λ) n.
    pub fn spatial_freq(&self, n: usize) -> f64 {
        2.0 * PI * self.spacing_m / self.wavelength_m * n as f64
    }

    /// ULA steering vector a(θ), unit Euclidean norm, θ in [-π/2, π/2].
    pub fn array_response(&self, theta: f64) -> Result<CVec> {
        check_sector(theta)?;
        let scale = 1.0 / (self.n_antennas as f64).sqrt();
        let s = theta.sin();
        Ok(CVec::from_fn(self.n_antennas, |n, _| {
            let phase = self.spatial_freq(n) * s;
            C64::new(phase.cos() * scale, phase.sin() * scale)
        }))
    }

    /// Measurement kernel g_m(θ), m 0-based in 0..2N.
    ///
    /// m < N selects the cosine (real-part) kernels, m >= N the sine
    /// (imaginary-part) kernels of the first covariance column.
    pub fn kernel_value(&self, m: usize, theta: f64) -> Result<f64> {
        check_sector(theta)?;
        let n = self.n_antennas;
        if m >= 2 * n {
            return Err(Error::Domain(format!(
                "kernel index {m} out of range for 2N = {}",
                2 * n
            )));
        }
        let inv_n = 1.0 / n as f64;
        let s = theta.sin();
        if m < n {
            Ok(inv_n * (self.spatial_freq(m) * s).cos())
        } else {
            Ok(inv_n * (self.spatial_freq(m - n) * s).sin())
        }
    }
}

fn check_sector(theta: f64) -> Result<()> {
    if !theta.is_finite() || !(-FRAC_PI_2..=FRAC_PI_2).contains(&theta) {
        return Err(Error::Domain(format!(
            "angle {theta} outside the sector [-pi/2, pi/2]"
        )));
    }
    Ok(())
}

/// UL/DL geometry pair sharing the same physical array.
#[derive(Debug, Clone, Copy)]
pub struct DuplexPair {
    uplink: ArrayGeometry,
    downlink: ArrayGeometry,
}

impl DuplexPair {
    pub fn new(uplink: ArrayGeometry, downlink: ArrayGeometry) -> Result<Self> {
        if uplink.n_antennas != downlink.n_antennas {
            return Err(Error::InvalidInput(
                "UL and DL geometries must share the antenna count".into(),
            ));
        }
        if uplink.spacing_m != downlink.spacing_m {
            return Err(Error::InvalidInput(
                "UL and DL geometries must share the element spacing".into(),
            ));
        }
        Ok(Self { uplink, downlink })
    }

    /// Standard setup: spacing d = λ_ul/2, wavelengths from carrier frequencies.
    pub fn from_frequencies(n_antennas: usize, ul_freq_hz: f64, dl_freq_hz: f64) -> Result<Self> {
        let ul = ArrayGeometry::half_wavelength(n_antennas, ul_freq_hz)?;
        let dl = ArrayGeometry::new(n_antennas, ul.spacing_m(), 299_792_458.0 / dl_freq_hz)?;
        Self::new(ul, dl)
    }

    pub fn uplink(&self) -> &ArrayGeometry {
        &self.uplink
    }

    pub fn downlink(&self) -> &ArrayGeometry {
        &self.downlink
    }

    pub fn n_antennas(&self) -> usize {
        self.uplink.n_antennas
    }
}

/// The analytic Gram blocks. `g_*` are UL/UL inner products, `q_*` DL/UL.
/// All include the π/(2N²) prefactor.
#[derive(Debug, Clone)]
pub struct GramOperators {
    pub g_re: RMat,
    pub g_im: RMat,
    pub q_re: RMat,
    pub q_im: RMat,
}

impl GramOperators {
    /// Closed-form evaluation from the geometry alone.
    pub fn compute(pair: &DuplexPair) -> Self {
        let n = pair.n_antennas();
        let d = pair.uplink().spacing_m();
        let lu = pair.uplink().wavelength_m();
        let ld = pair.downlink().wavelength_m();
        let pref = PI / (2.0 * (n * n) as f64);
        let tau = 2.0 * PI * d;

        let mut g_re = RMat::zeros(n, n);
        let mut g_im = RMat::zeros(n, n);
        let mut q_re = RMat::zeros(n, n);
        let mut q_im = RMat::zeros(n, n);
        for row in 0..n {
            for col in 0..n {
                let x = tau / lu * (row as f64 - col as f64);
                let y = tau / lu * (row as f64 + col as f64);
                let p = tau * (row as f64 / ld - col as f64 / lu);
                let q = tau * (row as f64 / ld + col as f64 / lu);
                let (jx, jy) = (j0(x), j0(y));
                let (jp, jq) = (j0(p), j0(q));
                g_re[(row, col)] = pref * (jx + jy);
                g_im[(row, col)] = pref * (jx - jy);
                q_re[(row, col)] = pref * (jp + jq);
                q_im[(row, col)] = pref * (jp - jq);
            }
        }
        Self {
            g_re,
            g_im,
            q_re,
            q_im,
        }
    }

    pub fn n(&self) -> usize {
        self.g_re.nrows()
    }

    /// Assembled 2N×2N uplink Gram matrix blkdiag(G_Re, G_Im).
    pub fn uplink_gram(&self) -> RMat {
        block_diag(&self.g_re, &self.g_im)
    }

    /// Assembled 2N×2N duplex matrix blkdiag(Q_Re, Q_Im).
    pub fn duplex_gram(&self) -> RMat {
        block_diag(&self.q_re, &self.q_im)
    }
}

fn block_diag(a: &RMat, b: &RMat) -> RMat {
    let n = a.nrows();
    let mut out = RMat::zeros(2 * n, 2 * n);
    out.view_mut((0, 0), (n, n)).copy_from(a);
    out.view_mut((n, n), (n, n)).copy_from(b);
    out
}
