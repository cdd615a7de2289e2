//! Hermitian-Toeplitz covariance representation and the matrix-space
//! projections used for preprocessing noisy sample covariances.
//!
//! The working Hilbert space is the set of N×N Hermitian matrices with the
//! trace inner product. Projections onto the PSD cone (eigenvalue clamping)
//! and onto the Toeplitz subspace (diagonal averaging) are combined by
//! Dykstra's alternating-projection algorithm to obtain the Frobenius-nearest
//! point of their intersection.

use serde::{Deserialize, Serialize};

use crate::{C64, CMat, Error, RVec, Result};

/// Hermitian Toeplitz covariance stored as its first column `c_0 .. c_{N-1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianToeplitzCov {
    first_column: Vec<C64>,
}

impl HermitianToeplitzCov {
    /// Builds from the first column; `Im(c_0)` must vanish (up to roundoff,
    /// it is zeroed).
    pub fn new(first_column: Vec<C64>) -> Result<Self> {
        if first_column.is_empty() {
            return Err(Error::InvalidInput("empty first column".into()));
        }
        let scale = first_column.iter().map(|c| c.norm()).fold(1.0, f64::max);
        if first_column[0].im.abs() > 1e-8 * scale {
            return Err(Error::InvalidInput(format!(
                "first diagonal entry has imaginary part {}",
                first_column[0].im
            )));
        }
        let mut col = first_column;
        col[0].im = 0.0;
        Ok(Self { first_column: col })
    }

    pub fn zero(n: usize) -> Self {
        Self {
            first_column: vec![C64::new(0.0, 0.0); n],
        }
    }

    pub fn n(&self) -> usize {
        self.first_column.len()
    }

    pub fn first_column(&self) -> &[C64] {
        &self.first_column
    }

    /// Dense expansion: `R[n,m] = c_{n-m}` with `c_{-k} = conj(c_k)`.
    pub fn expand(&self) -> CMat {
        let n = self.n();
        CMat::from_fn(n, n, |r, c| {
            if r >= c {
                self.first_column[r - c]
            } else {
                self.first_column[c - r].conj()
            }
        })
    }

    /// Real constraint vector `[Re(c); Im(c)]` of length 2N.
    pub fn to_constraint_vector(&self) -> RVec {
        let n = self.n();
        RVec::from_fn(2 * n, |i, _| {
            if i < n {
                self.first_column[i].re
            } else {
                self.first_column[i - n].im
            }
        })
    }

    /// Inverse of [`to_constraint_vector`]: entry N (the first imaginary
    /// component) must be zero up to tolerance.
    ///
    /// [`to_constraint_vector`]: Self::to_constraint_vector
    pub fn from_constraint_vector(v: &RVec) -> Result<Self> {
        if !v.len().is_multiple_of(2) || v.is_empty() {
            return Err(Error::InvalidInput(format!(
                "constraint vector length {} is not an even positive number",
                v.len()
            )));
        }
        let n = v.len() / 2;
        let scale = v.iter().map(|x| x.abs()).fold(1.0, f64::max);
        if v[n].abs() > 1e-8 * scale {
            return Err(Error::InvalidInput(format!(
                "imaginary part of the diagonal entry is {} (must be 0)",
                v[n]
            )));
        }
        let col = (0..n).map(|i| C64::new(v[i], if i == 0 { 0.0 } else { v[n + i] })).collect();
        Self::new(col)
    }

    /// Extracts the first column of a dense Hermitian matrix, without
    /// imposing Toeplitz structure on the rest.
    pub fn from_first_column_of(m: &CMat) -> Result<Self> {
        Self::new(m.column(0).iter().cloned().collect())
    }
}

/// Fails unless `m` equals its conjugate transpose within 1e-12 relative.
pub fn validate_hermitian(m: &CMat) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(Error::InvalidInput("matrix is not square".into()));
    }
    let dev = (m - m.adjoint()).norm();
    if dev > 1e-12 * m.norm().max(1.0) {
        return Err(Error::InvalidInput(format!(
            "matrix is not Hermitian (asymmetry {dev:.3e})"
        )));
    }
    Ok(())
}

fn hermitize(m: &CMat) -> CMat {
    (m + m.adjoint()).map(|z| z * 0.5)
}

/// Frobenius-nearest PSD matrix: eigendecompose and clamp negative
/// eigenvalues to zero.
pub fn project_psd(h: &CMat) -> CMat {
    let sym = hermitize(h);
    let n = sym.nrows();
    let eig = sym.symmetric_eigen();
    let mut out = CMat::zeros(n, n);
    for (i, &lambda) in eig.eigenvalues.iter().enumerate() {
        if lambda > 0.0 {
            let v = eig.eigenvectors.column(i);
            // out += lambda v v^H
            for r in 0..n {
                for c in 0..n {
                    out[(r, c)] += v[r] * v[c].conj() * C64::new(lambda, 0.0);
                }
            }
        }
    }
    out
}

/// Frobenius projection onto the Hermitian Toeplitz subspace: every diagonal
/// is replaced by its arithmetic mean.
pub fn project_toeplitz(h: &CMat) -> CMat {
    let sym = hermitize(h);
    let n = sym.nrows();
    let mut means = vec![C64::new(0.0, 0.0); n];
    for k in 0..n {
        let mut acc = C64::new(0.0, 0.0);
        for r in k..n {
            acc += sym[(r, r - k)];
        }
        means[k] = acc / C64::new((n - k) as f64, 0.0);
    }
    means[0].im = 0.0;
    CMat::from_fn(n, n, |r, c| {
        if r >= c {
            means[r - c]
        } else {
            means[c - r].conj()
        }
    })
}

/// Outcome of the Dykstra projection onto PSD ∩ Toeplitz.
#[derive(Debug, Clone)]
pub struct ToeplitzPsdOutcome {
    pub cov: HermitianToeplitzCov,
    pub converged: bool,
    pub iterations: usize,
}

pub const DYKSTRA_MAX_ITER: usize = 500;
pub const DYKSTRA_TOL: f64 = 1e-9;

/// Dykstra's alternating projections between the PSD cone and the Toeplitz
/// subspace. The Toeplitz projection is applied last, so the output satisfies
/// the Toeplitz structure exactly; iteration continues until the output is
/// also PSD within `tol` (min eigenvalue ≥ −tol·λ_max).
pub fn project_toeplitz_psd(
    h: &CMat,
    max_iter: usize,
    tol: f64,
) -> Result<ToeplitzPsdOutcome> {
    validate_hermitian(h)?;
    let mut x = hermitize(h);
    let n = x.nrows();
    let mut p = CMat::zeros(n, n); // correction for the PSD cone
    let mut converged = false;
    let mut iterations = 0;
    for it in 0..max_iter {
        iterations = it + 1;
        let y = project_psd(&(&x + &p));
        p = &x + &p - &y;
        // no correction needed for the Toeplitz subspace (linear set)
        let x_next = project_toeplitz(&y);
        let delta = (&x_next - &x).norm();
        x = x_next;
        if !delta.is_finite() {
            return Err(Error::Numeric("Dykstra iterate diverged".into()));
        }
        if delta < tol {
            let eig = x.clone().symmetric_eigen();
            let lmax = eig.eigenvalues.iter().cloned().fold(0.0f64, f64::max);
            let lmin = eig.eigenvalues.iter().cloned().fold(f64::MAX, f64::min);
            if lmin >= -tol * lmax.max(f64::MIN_POSITIVE) {
                converged = true;
                break;
            }
        }
    }
    Ok(ToeplitzPsdOutcome {
        cov: HermitianToeplitzCov::from_first_column_of(&x)?,
        converged,
        iterations,
    })
}

/// Hermitian square root of a PSD matrix. Eigenvalues in
/// `[-1e-10·λ_max, 0)` are clamped to zero; anything below `-1e-6·λ_max`
/// is rejected as not PSD.
pub fn psd_sqrt(r: &CMat) -> Result<CMat> {
    validate_hermitian(r)?;
    let sym = hermitize(r);
    let n = sym.nrows();
    let eig = sym.symmetric_eigen();
    let lmax = eig.eigenvalues.iter().cloned().fold(0.0f64, f64::max);
    let mut out = CMat::zeros(n, n);
    for (i, &lambda) in eig.eigenvalues.iter().enumerate() {
        if lambda < -1e-6 * lmax.max(1e-300) {
            return Err(Error::Numeric(format!(
                "matrix is not PSD: eigenvalue {lambda:.3e} (max {lmax:.3e})"
            )));
        }
        if lambda <= 0.0 {
            continue;
        }
        let s = lambda.sqrt();
        let v = eig.eigenvectors.column(i);
        for r_ in 0..n {
            for c in 0..n {
                out[(r_, c)] += v[r_] * v[c].conj() * C64::new(s, 0.0);
            }
        }
    }
    Ok(out)
}

/// On-disk covariance format shared with the CLI:
/// `{ "n": N, "re": [N*N row-major], "im": [N*N row-major] }`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CovarianceJson {
    pub n: usize,
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

impl CovarianceJson {
    pub fn from_matrix(m: &CMat) -> Self {
        let n = m.nrows();
        let mut re = Vec::with_capacity(n * n);
        let mut im = Vec::with_capacity(n * n);
        for r in 0..n {
            for c in 0..n {
                re.push(m[(r, c)].re);
                im.push(m[(r, c)].im);
            }
        }
        Self { n, re, im }
    }

    /// Rebuilds the dense matrix, validating shape and Hermitian symmetry.
    pub fn to_matrix(&self) -> Result<CMat> {
        if self.re.len() != self.n * self.n || self.im.len() != self.n * self.n {
            return Err(Error::InvalidInput(format!(
                "covariance file claims n={} but carries {}/{} entries",
                self.n,
                self.re.len(),
                self.im.len()
            )));
        }
        let m = CMat::from_fn(self.n, self.n, |r, c| {
            C64::new(self.re[r * self.n + c], self.im[r * self.n + c])
        });
        validate_hermitian(&m)?;
        Ok(m)
    }
}
