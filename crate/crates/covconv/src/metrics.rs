//! Covariance error metrics: normalized Euclidean distance, affine-invariant
//! Riemannian distance, and the Grassmann distance between principal
//! subspaces.

use crate::covariance_core::validate_hermitian;
use crate::{CMat, Error, Result};

/// All three metrics for one (truth, estimate) pair. `p_used` is the shared
/// principal-subspace dimension of the Grassmann metric.
#[derive(Debug, Clone, Copy)]
pub struct MetricReport {
    pub euclid: f64,
    pub affine_inv: f64,
    pub grassmann: f64,
    pub p_used: usize,
    pub rank_deficient: bool,
}

impl MetricReport {
    pub fn compute(truth: &CMat, estimate: &CMat) -> Result<Self> {
        let g = dist_grassmann(truth, estimate, 0.95)?;
        Ok(Self {
            euclid: dist_euclid_norm(truth, estimate)?,
            affine_inv: dist_affine_invariant(truth, estimate, DEFAULT_RIDGE)?,
            grassmann: g.distance,
            p_used: g.p,
            rank_deficient: g.rank_deficient,
        })
    }
}

/// `‖R − R̂‖_F / ‖R‖_F`.
pub fn dist_euclid_norm(truth: &CMat, estimate: &CMat) -> Result<f64> {
    if truth.shape() != estimate.shape() {
        return Err(Error::InvalidInput("dimension mismatch".into()));
    }
    let denom = truth.norm();
    if denom == 0.0 {
        return Err(Error::Domain("reference covariance is zero".into()));
    }
    Ok((truth - estimate).norm() / denom)
}

pub const DEFAULT_RIDGE: f64 = 1e-10;

/// Affine-invariant Riemannian distance `‖log(R^{1/2} R̂^{-1} R^{1/2})‖_F`,
/// computed from the generalized eigenvalues of the pair.
///
/// A trace-scaled ridge `reg·(trace/N)·I` is added to either matrix whose
/// minimum eigenvalue falls below that level, so near-singular estimates stay
/// comparable instead of blowing up.
pub fn dist_affine_invariant(truth: &CMat, estimate: &CMat, reg: f64) -> Result<f64> {
    if truth.shape() != estimate.shape() {
        return Err(Error::InvalidInput("dimension mismatch".into()));
    }
    validate_hermitian(truth)?;
    validate_hermitian(estimate)?;
    if truth.norm() == 0.0 && estimate.norm() == 0.0 {
        return Err(Error::Domain(
            "affine-invariant distance unavailable for two zero matrices".into(),
        ));
    }
    let a = regularize(truth, reg);
    let b = regularize(estimate, reg);
    // eigenvalues of B^{-1}A via the Hermitian form L^{-1} A L^{-H}, B = L L^H
    let chol = b
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Numeric("estimate not positive definite after ridge".into()))?;
    let l_inv = chol
        .l()
        .try_inverse()
        .ok_or_else(|| Error::Numeric("Cholesky factor not invertible".into()))?;
    let m = &l_inv * a * l_inv.adjoint();
    let eig = m.symmetric_eigen();
    let lmax = eig.eigenvalues.iter().cloned().fold(0.0f64, f64::max);
    if lmax <= 0.0 {
        return Err(Error::Numeric(
            "no positive generalized eigenvalue after ridge".into(),
        ));
    }
    // both matrices are PD after the ridge, so any nonpositive computed
    // eigenvalue is eigensolver roundoff; clamp it to the noise floor
    let floor = f64::EPSILON * lmax;
    let mut acc = 0.0;
    for &lambda in eig.eigenvalues.iter() {
        let l = lambda.max(floor).ln();
        acc += l * l;
    }
    Ok(acc.sqrt())
}

fn regularize(m: &CMat, reg: f64) -> CMat {
    let n = m.nrows();
    let level = reg * m.trace().re / n as f64;
    let eig = m.clone().symmetric_eigen();
    let lmin = eig.eigenvalues.iter().cloned().fold(f64::MAX, f64::min);
    if lmin < level || level <= 0.0 {
        // lift the spectrum to the regularization level; indefinite
        // estimates need more than the bare ridge to become invertible
        let bump = (level - lmin).max(level).max(reg);
        m + CMat::identity(n, n).map(|z| z * bump)
    } else {
        m.clone()
    }
}

/// Grassmann distance between principal subspaces.
#[derive(Debug, Clone, Copy)]
pub struct GrassmannDistance {
    pub distance: f64,
    /// Shared subspace dimension max(p_R, p_R̂).
    pub p: usize,
    /// Set when either matrix had numerical rank below `p`.
    pub rank_deficient: bool,
}

/// Sorted eigenpairs (descending eigenvalue, ties by ascending index).
fn sorted_eigen(m: &CMat) -> (Vec<f64>, CMat) {
    let eig = m.clone().symmetric_eigen();
    let n = m.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .partial_cmp(&eig.eigenvalues[a])
            .unwrap()
            .then(a.cmp(&b))
    });
    let values: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = CMat::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.column_mut(dst).copy_from(&eig.eigenvectors.column(src));
    }
    (values, vectors)
}

/// Minimum count of leading eigenvalues reaching `energy_frac` of the total
/// (negatives clamped to zero for the sums).
fn energy_rank(values: &[f64], energy_frac: f64) -> usize {
    let total: f64 = values.iter().map(|&l| l.max(0.0)).sum();
    if total <= 0.0 {
        return 1;
    }
    let mut acc = 0.0;
    for (i, &l) in values.iter().enumerate() {
        acc += l.max(0.0);
        if acc / total >= energy_frac {
            return i + 1;
        }
    }
    values.len()
}

/// Principal-angle distance `sqrt(Σ γ_n²)` between the dominant
/// `p = max(p_R, p_R̂)` eigenspaces. The angles come from the singular values
/// of `U_p^H Û_p` (cosines); small angles are recovered from the singular
/// values of `Û_p − U_p (U_p^H Û_p)` (sines) instead, since `acos` near 1
/// amplifies roundoff from O(ε) to O(√ε).
pub fn dist_grassmann(truth: &CMat, estimate: &CMat, energy_frac: f64) -> Result<GrassmannDistance> {
    if truth.shape() != estimate.shape() {
        return Err(Error::InvalidInput("dimension mismatch".into()));
    }
    validate_hermitian(truth)?;
    validate_hermitian(estimate)?;
    let (lv, uv) = sorted_eigen(truth);
    let (le, ue) = sorted_eigen(estimate);
    let p = energy_rank(&lv, energy_frac).max(energy_rank(&le, energy_frac));

    // numerical rank guard: count strictly positive eigenvalues
    let rank = |vals: &[f64]| {
        let lmax = vals.first().cloned().unwrap_or(0.0).max(0.0);
        vals.iter().filter(|&&l| l > 1e-12 * lmax.max(1e-300)).count()
    };
    let available = rank(&lv).min(rank(&le));
    let rank_deficient = available < p;
    let p_eff = p.min(available).max(1);

    let n = truth.nrows();
    let u_p = uv.view((0, 0), (n, p_eff));
    let uhat_p = ue.view((0, 0), (n, p_eff));
    let overlap: CMat = u_p.adjoint() * uhat_p;
    let residual: CMat = uhat_p - u_p * &overlap;
    let mut cosines: Vec<f64> = overlap
        .svd(false, false)
        .singular_values
        .iter()
        .cloned()
        .collect();
    let mut sines: Vec<f64> = residual
        .svd(false, false)
        .singular_values
        .iter()
        .cloned()
        .collect();
    // cosines descending and sines ascending both order the angles smallest
    // first, so the k-th entries describe the same principal angle
    cosines.sort_by(|a, b| b.partial_cmp(a).unwrap());
    sines.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut acc = 0.0;
    for (&c, &s) in cosines.iter().zip(&sines) {
        let gamma = if c * c > 0.5 {
            s.clamp(0.0, 1.0).asin()
        } else {
            c.clamp(0.0, 1.0).acos()
        };
        acc += gamma * gamma;
    }
    Ok(GrassmannDistance {
        distance: acc.sqrt(),
        p,
        rank_deficient,
    })
}

/// `MSE = mean of squared errors`.
pub fn aggregate_mse(samples: &[f64]) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::Domain("MSE of an empty sample list".into()));
    }
    Ok(samples.iter().map(|e| e * e).sum::<f64>() / samples.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::C64;
    use approx::assert_abs_diff_eq;

    fn diag(values: &[f64]) -> CMat {
        CMat::from_diagonal(&crate::CVec::from_iterator(
            values.len(),
            values.iter().map(|&v| C64::new(v, 0.0)),
        ))
    }

    #[test]
    fn euclid_basics() {
        let r = CMat::identity(2, 2);
        assert_eq!(dist_euclid_norm(&r, &r).unwrap(), 0.0);
        assert_abs_diff_eq!(
            dist_euclid_norm(&r, &CMat::zeros(2, 2)).unwrap(),
            1.0,
            epsilon = 1e-15
        );
        let r = diag(&[3.0, 4.0, 0.0]);
        assert_abs_diff_eq!(
            dist_euclid_norm(&r, &CMat::zeros(3, 3)).unwrap(),
            1.0,
            epsilon = 1e-15
        );
        assert!(dist_euclid_norm(&CMat::zeros(2, 2), &r.view((0, 0), (2, 2)).into()).is_err());
    }

    #[test]
    fn affine_invariant_basics() {
        let r = diag(&[1.0, 2.0, 0.5]);
        assert!(dist_affine_invariant(&r, &r, DEFAULT_RIDGE).unwrap() < 1e-8);
        // R = I, R̂ = cI: distance √N |log c|
        let n = 3;
        let c = 4.0;
        let d = dist_affine_invariant(
            &CMat::identity(n, n),
            &CMat::identity(n, n).map(|z| z * c),
            DEFAULT_RIDGE,
        )
        .unwrap();
        assert_abs_diff_eq!(d, (n as f64).sqrt() * c.ln(), epsilon = 1e-10);
    }

    #[test]
    fn affine_invariant_is_symmetric() {
        let a = diag(&[1.0, 3.0, 0.7]);
        let mut b = diag(&[2.0, 0.4, 1.1]);
        b[(0, 1)] = C64::new(0.2, 0.1);
        b[(1, 0)] = C64::new(0.2, -0.1);
        let d1 = dist_affine_invariant(&a, &b, DEFAULT_RIDGE).unwrap();
        let d2 = dist_affine_invariant(&b, &a, DEFAULT_RIDGE).unwrap();
        assert_abs_diff_eq!(d1, d2, epsilon = 1e-8);
    }

    #[test]
    fn affine_invariant_rejects_double_zero() {
        let z = CMat::zeros(2, 2);
        assert!(dist_affine_invariant(&z, &z, DEFAULT_RIDGE).is_err());
    }

    #[test]
    fn grassmann_identical_subspaces() {
        let r = diag(&[5.0, 1.0, 0.1]);
        let g = dist_grassmann(&r, &r, 0.95).unwrap();
        assert!(g.distance < 1e-8);
    }

    #[test]
    fn grassmann_orthogonal_lines() {
        let r = diag(&[1.0, 0.0]);
        let rh = diag(&[0.0, 1.0]);
        let g = dist_grassmann(&r, &rh, 0.95).unwrap();
        assert_eq!(g.p, 1);
        assert_abs_diff_eq!(g.distance, std::f64::consts::FRAC_PI_2, epsilon = 1e-10);
    }

    #[test]
    fn mse_basics() {
        assert_eq!(aggregate_mse(&[0.0, 0.0, 0.0]).unwrap(), 0.0);
        assert_eq!(aggregate_mse(&[1.0, 1.0]).unwrap(), 1.0);
        assert_abs_diff_eq!(aggregate_mse(&[3.0, 4.0]).unwrap(), 12.5, epsilon = 1e-15);
        assert!(aggregate_mse(&[]).is_err());
    }
}
