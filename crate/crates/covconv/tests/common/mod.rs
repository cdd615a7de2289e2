//! Independent numerical oracles shared by the integration tests. Everything
//! here is computed from first principles (series, quadrature, brute-force
//! search) and must stay decoupled from the library's own evaluation paths.

#![allow(dead_code)]

use covconv::{C64, CMat, RVec};

/// J0 by its power series, summed to machine precision. Only valid for
/// moderate |x| (cancellation grows with x), which is all the tests need.
pub fn j0_series_oracle(x: f64) -> f64 {
    let q = 0.25 * x * x;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..300 {
        let k = k as f64;
        term *= -q / (k * k);
        sum += term;
        if term.abs() < 1e-20 {
            break;
        }
    }
    sum
}

/// Composite-midpoint quadrature of `f` over [-π/2, π/2].
pub fn midpoint_quadrature(n: usize, f: impl Fn(f64) -> f64) -> f64 {
    let h = std::f64::consts::PI / n as f64;
    (0..n)
        .map(|i| f(-std::f64::consts::FRAC_PI_2 + (i as f64 + 0.5) * h))
        .sum::<f64>()
        * h
}

/// Measurement kernel from its definition: real/imaginary split of the first
/// column of a(θ)a(θ)^H for a ULA with N antennas and spacing ratio d/λ.
pub fn kernel_oracle(n_antennas: usize, d_over_lambda: f64, m: usize, theta: f64) -> f64 {
    let inv_n = 1.0 / n_antennas as f64;
    let s = theta.sin();
    if m < n_antennas {
        inv_n * (2.0 * std::f64::consts::PI * d_over_lambda * m as f64 * s).cos()
    } else {
        inv_n * (2.0 * std::f64::consts::PI * d_over_lambda * (m - n_antennas) as f64 * s).sin()
    }
}

/// Quadrature oracle for the Gram entry `<g_row(λ_row), g_col(λ_col)>`.
pub fn gram_entry_oracle(
    n_antennas: usize,
    d_over_lambda_row: f64,
    d_over_lambda_col: f64,
    row: usize,
    col: usize,
    n_quad: usize,
) -> f64 {
    midpoint_quadrature(n_quad, |theta| {
        kernel_oracle(n_antennas, d_over_lambda_row, row, theta)
            * kernel_oracle(n_antennas, d_over_lambda_col, col, theta)
    })
}

/// Brute-force nearest PSD Hermitian Toeplitz 2x2 matrix, by shrinking-grid
/// search over (c0, Re c1, Im c1) with the PSD constraint c0 >= |c1|.
pub fn toeplitz_psd_2x2_oracle(h: &CMat) -> CMat {
    assert_eq!(h.nrows(), 2);
    let (a, d, b) = (h[(0, 0)].re, h[(1, 1)].re, h[(1, 0)]);
    // squared Frobenius distance to [[c0, conj(c1)], [c1, c0]], c1 = re1+i*im1
    let dist = |c0: f64, re1: f64, im1: f64| -> f64 {
        (c0 - a).powi(2) + (c0 - d).powi(2) + 2.0 * ((re1 - b.re).powi(2) + (im1 - b.im).powi(2))
    };
    let scale = h.norm().max(1.0);
    let (mut c0, mut re1, mut im1) = (scale / 2.0, 0.0, 0.0);
    let mut half_width = 2.0 * scale;
    for _round in 0..60 {
        let steps = 16i32;
        let mut best = (dist(c0, re1, im1), c0, re1, im1);
        for i in -steps..=steps {
            let cc = c0 + half_width * i as f64 / steps as f64;
            if cc < 0.0 {
                continue;
            }
            for j in -steps..=steps {
                let rr = re1 + half_width * j as f64 / steps as f64;
                for k in -steps..=steps {
                    let ii = im1 + half_width * k as f64 / steps as f64;
                    // clamp radially onto |c1| <= c0, so the cone boundary
                    // (where the optimum usually sits) is sampled densely
                    let mag = rr.hypot(ii);
                    let (rr, ii) = if mag > cc {
                        (rr * cc / mag, ii * cc / mag)
                    } else {
                        (rr, ii)
                    };
                    let d = dist(cc, rr, ii);
                    if d < best.0 {
                        best = (d, cc, rr, ii);
                    }
                }
            }
        }
        (_, c0, re1, im1) = best;
        // slow shrink: the objective has a flat valley and a fast shrink can
        // recenter outside it
        half_width /= 2.0;
        if half_width < 1e-9 {
            break;
        }
    }
    CMat::from_row_slice(
        2,
        2,
        &[
            C64::new(c0, 0.0),
            C64::new(re1, -im1),
            C64::new(re1, im1),
            C64::new(c0, 0.0),
        ],
    )
}

/// Small deterministic generator for test data (split from the library RNG on
/// purpose).
pub struct TestRng(u64);

impl TestRng {
    pub fn new(seed: u64) -> Self {
        Self(seed.wrapping_mul(0x9e3779b97f4a7c15) | 1)
    }

    pub fn next_u64(&mut self) -> u64 {
        let mut z = self.0.wrapping_add(0x9e3779b97f4a7c15);
        self.0 = z;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
        z ^ (z >> 31)
    }

    /// Uniform on [-1, 1).
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 52) as f64 - 1.0
    }

    pub fn hermitian(&mut self, n: usize) -> CMat {
        let raw = CMat::from_fn(n, n, |_, _| C64::new(self.uniform(), self.uniform()));
        (&raw + raw.adjoint()).map(|z| z * 0.5)
    }

    pub fn positive_definite(&mut self, n: usize) -> CMat {
        let raw = CMat::from_fn(n, n, |_, _| C64::new(self.uniform(), self.uniform()));
        &raw * raw.adjoint() + CMat::identity(n, n).map(|z| z * 0.1)
    }

    pub fn real_vector(&mut self, n: usize) -> RVec {
        RVec::from_fn(n, |_, _| self.uniform())
    }
}
