//! Angular power spectrum estimation from the UL constraint vector and
//! conversion to the DL covariance.
//!
//! Algorithm 1: the minimum-norm feasible APS is `ρ̂ = Σ α_m g^u_m` with
//! `G^u α = r^u` solved in the pseudo-inverse sense; the DL constraint vector
//! is then `r̂^d = Q α` with no integration at all.
//!
//! Algorithm 2 (EAPM): starting from `ρ^(0) = P_V(0)`, iterate
//!
//! ```text
//! ρ^(i+1) = ρ^(i) + ν K_i [ P_V(P_Z(ρ^(i))) − ρ^(i) ]
//! ```
//!
//! where `P_Z` clamps negative values, `P_V` re-imposes the measurement
//! constraints, and `K_i` is the extrapolation factor
//! `‖P_Z(ρ)−ρ‖² / ‖P_V(P_Z(ρ))−ρ‖²` (1 when ρ is already nonnegative).
//! Grid functions use the midpoint rule on `[-π/2, π/2]`.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::array_model::{ArrayGeometry, DuplexPair, GramOperators};
use crate::covariance_core::{
    project_toeplitz_psd, validate_hermitian, HermitianToeplitzCov, DYKSTRA_MAX_ITER, DYKSTRA_TOL,
};
use crate::{CMat, Error, RMat, RVec, Result};

/// Uniform midpoint grid over the sector [-π/2, π/2].
#[derive(Debug, Clone, PartialEq)]
pub struct ThetaGrid {
    points: Vec<f64>,
    weight: f64,
}

impl ThetaGrid {
    pub fn midpoint(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidInput("grid size must be positive".into()));
        }
        let h = std::f64::consts::PI / n as f64;
        let points = (0..n)
            .map(|i| -std::f64::consts::FRAC_PI_2 + (i as f64 + 0.5) * h)
            .collect();
        Ok(Self { points, weight: h })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    /// Quadrature weight π/Nθ.
    pub fn weight(&self) -> f64 {
        self.weight
    }
}

/// A real function sampled on a [`ThetaGrid`].
#[derive(Debug, Clone)]
pub struct GridFunction {
    pub grid: Arc<ThetaGrid>,
    pub values: RVec,
}

impl GridFunction {
    pub fn new(grid: Arc<ThetaGrid>, values: RVec) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidInput(format!(
                "value count {} does not match grid size {}",
                values.len(),
                grid.len()
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn zero(grid: Arc<ThetaGrid>) -> Self {
        let n = grid.len();
        Self {
            grid,
            values: RVec::zeros(n),
        }
    }

    /// L² norm under the midpoint quadrature.
    pub fn norm(&self) -> f64 {
        (self.grid.weight() * self.values.iter().map(|v| v * v).sum::<f64>()).sqrt()
    }

    /// Quadrature inner product with another function on the same grid.
    pub fn inner(&self, other: &GridFunction) -> f64 {
        self.grid.weight() * self.values.dot(&other.values)
    }
}

/// Kernel value table: row m holds g_m sampled on the grid (2N × Nθ).
pub(crate) fn kernel_matrix(geom: &ArrayGeometry, grid: &ThetaGrid) -> RMat {
    let n = geom.n_antennas();
    let inv_n = 1.0 / n as f64;
    let mut out = RMat::zeros(2 * n, grid.len());
    for (j, &theta) in grid.points().iter().enumerate() {
        let s = theta.sin();
        for m in 0..n {
            let arg = geom.spatial_freq(m) * s;
            out[(m, j)] = inv_n * arg.cos();
            out[(n + m, j)] = inv_n * arg.sin();
        }
    }
    out
}

/// Pseudo-inverse solver for the (PSD, possibly singular) Gram system,
/// with eigenvalues below 1e-10·λ_max treated as zero.
#[derive(Debug, Clone)]
pub(crate) struct GramSolver {
    vectors: RMat,
    inv_eigenvalues: RVec,
}

pub(crate) const GRAM_EIGENVALUE_CUTOFF: f64 = 1e-10;

impl GramSolver {
    pub fn new(gram: &RMat) -> Result<Self> {
        if gram.nrows() != gram.ncols() {
            return Err(Error::InvalidInput("Gram matrix must be square".into()));
        }
        let eig = gram.clone().symmetric_eigen();
        let lmax = eig.eigenvalues.iter().cloned().fold(0.0f64, f64::max);
        let cutoff = GRAM_EIGENVALUE_CUTOFF * lmax;
        let inv = RVec::from_iterator(
            eig.eigenvalues.len(),
            eig.eigenvalues
                .iter()
                .map(|&l| if l > cutoff { 1.0 / l } else { 0.0 }),
        );
        Ok(Self {
            vectors: eig.eigenvectors,
            inv_eigenvalues: inv,
        })
    }

    pub fn solve(&self, rhs: &RVec) -> Result<RVec> {
        if rhs.len() != self.vectors.nrows() {
            return Err(Error::InvalidInput(format!(
                "right-hand side length {} does not match system size {}",
                rhs.len(),
                self.vectors.nrows()
            )));
        }
        let mut proj = self.vectors.transpose() * rhs;
        proj.component_mul_assign(&self.inv_eigenvalues);
        Ok(&self.vectors * proj)
    }
}

/// Minimum-norm least-squares solution of `G α = r` via spectral
/// decomposition with a 1e-10 relative eigenvalue cutoff.
pub fn solve_gram(gram: &RMat, rhs: &RVec) -> Result<RVec> {
    GramSolver::new(gram)?.solve(rhs)
}

/// Algorithm 1: coefficients of the minimum-norm APS `P_V(0)`.
pub fn estimate_alg1(ops: &GramOperators, r_u: &RVec) -> Result<RVec> {
    solve_gram(&ops.uplink_gram(), r_u)
}

/// Evaluates `ρ̂(θ) = Σ α_m g_m(θ)` on a grid.
pub fn aps_evaluate(alpha: &RVec, geom: &ArrayGeometry, grid: Arc<ThetaGrid>) -> Result<GridFunction> {
    if alpha.len() != 2 * geom.n_antennas() {
        return Err(Error::InvalidInput(format!(
            "coefficient count {} does not match 2N = {}",
            alpha.len(),
            2 * geom.n_antennas()
        )));
    }
    let kernels = kernel_matrix(geom, &grid);
    let values = kernels.transpose() * alpha;
    GridFunction::new(grid, values)
}

/// Projection onto the cone of nonnegative functions: pointwise clamp.
pub fn project_nonneg(f: &GridFunction) -> GridFunction {
    GridFunction {
        grid: f.grid.clone(),
        values: f.values.map(|v| v.max(0.0)),
    }
}

/// Precomputed state for repeated conversions with a fixed geometry and grid.
#[derive(Debug, Clone)]
pub struct ApsWorkspace {
    pair: DuplexPair,
    ops: GramOperators,
    solver: GramSolver,
    kernels_ul: RMat,
    kernels_dl: RMat,
    grid: Arc<ThetaGrid>,
}

impl ApsWorkspace {
    pub fn new(pair: &DuplexPair, n_theta: usize) -> Result<Self> {
        if n_theta < 4 * pair.n_antennas() {
            return Err(Error::InvalidInput(format!(
                "grid size {} below the 4N = {} minimum",
                n_theta,
                4 * pair.n_antennas()
            )));
        }
        let ops = GramOperators::compute(pair);
        let solver = GramSolver::new(&ops.uplink_gram())?;
        let grid = Arc::new(ThetaGrid::midpoint(n_theta)?);
        Ok(Self {
            pair: *pair,
            ops,
            solver,
            kernels_ul: kernel_matrix(pair.uplink(), &grid),
            kernels_dl: kernel_matrix(pair.downlink(), &grid),
            grid: grid.clone(),
        })
    }

    pub fn ops(&self) -> &GramOperators {
        &self.ops
    }

    pub fn grid(&self) -> Arc<ThetaGrid> {
        self.grid.clone()
    }

    pub fn alg1_coefficients(&self, r_u: &RVec) -> Result<RVec> {
        self.solver.solve(r_u)
    }

    /// Quadrature inner products `b_m = <f, g^u_m>` for all kernels.
    pub fn uplink_inner_products(&self, values: &RVec) -> RVec {
        self.grid.weight() * (&self.kernels_ul * values)
    }

    pub fn evaluate_uplink_aps(&self, alpha: &RVec) -> RVec {
        self.kernels_ul.transpose() * alpha
    }

    /// `max_m |<f, g^u_m> - r_m|` — feasibility residual of a grid function.
    pub fn constraint_residual(&self, values: &RVec, r_u: &RVec) -> f64 {
        let b = self.uplink_inner_products(values);
        (b - r_u).amax()
    }

    /// Variety projection `P_V(f) = f - Σ β_m g^u_m + P_V(0)`.
    fn project_variety_values(&self, values: &RVec, pv0: &RVec) -> Result<RVec> {
        let b = self.uplink_inner_products(values);
        let beta = self.solver.solve(&b)?;
        Ok(values - self.kernels_ul.transpose() * beta + pv0)
    }

    pub fn convert_alg1(&self, alpha: &RVec) -> RVec {
        self.ops.duplex_gram() * alpha
    }

    pub fn convert_alg2(&self, values: &RVec) -> RVec {
        self.grid.weight() * (&self.kernels_dl * values)
    }

    /// EAPM main loop; see module docs.
    pub fn eapm(&self, r_u: &RVec, config: &EapmConfig) -> Result<(GridFunction, EapmDiagnostics)> {
        config.validate(self.pair.n_antennas())?;
        if self.grid.len() != config.n_theta {
            return Err(Error::InvalidInput(format!(
                "workspace grid size {} does not match config n_theta {}",
                self.grid.len(),
                config.n_theta
            )));
        }
        let alpha = self.alg1_coefficients(r_u)?;
        let pv0 = self.evaluate_uplink_aps(&alpha);
        let w = self.grid.weight();

        let mut rho = pv0.clone();
        let mut iterations = 0;
        let mut converged = false;
        let mut max_iterate_residual = 0.0f64;
        for _ in 0..config.max_iter {
            iterations += 1;
            max_iterate_residual = max_iterate_residual.max(self.constraint_residual(&rho, r_u));
            let scale = rho.amax();
            let min = rho.min();
            let in_z = min >= -config.neg_tol * scale;

            let clamped = rho.map(|v| v.max(0.0));
            let pv_clamped = self.project_variety_values(&clamped, &pv0)?;
            let direction = &pv_clamped - &rho;
            let dir_norm_sq = w * direction.norm_squared();

            let k = if in_z {
                1.0
            } else {
                if dir_norm_sq < 1e-14 {
                    converged = true; // fixed point
                    break;
                }
                let clamp_norm_sq = w * (&clamped - &rho).norm_squared();
                clamp_norm_sq / dir_norm_sq
            };

            let step = config.nu * k;
            rho += direction.map(|v| v * step);
            if !rho.iter().all(|v| v.is_finite()) {
                return Err(Error::Numeric("EAPM iterate became non-finite".into()));
            }
            let update_norm = step * dir_norm_sq.sqrt();
            let rho_norm = (w * rho.norm_squared()).sqrt();
            if update_norm <= config.feas_tol * rho_norm {
                converged = true;
                break;
            }
        }

        let max = rho.max();
        let negativity = if max > 0.0 { rho.min() / max } else { rho.min() };
        let final_residual = self.constraint_residual(&rho, r_u);
        let diagnostics = EapmDiagnostics {
            iterations,
            converged,
            negativity,
            constraint_residual: final_residual,
            max_iterate_residual: max_iterate_residual.max(final_residual),
        };
        Ok((GridFunction::new(self.grid.clone(), rho)?, diagnostics))
    }
}

/// EAPM parameters. `neg_tol` is relative to the iterate's amplitude and
/// decides the `ρ ∈ Z` test of the extrapolation factor.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default)]
pub struct EapmConfig {
    pub nu: f64,
    pub max_iter: usize,
    pub feas_tol: f64,
    pub neg_tol: f64,
    pub n_theta: usize,
}

impl Default for EapmConfig {
    fn default() -> Self {
        Self {
            nu: 1.0,
            max_iter: 500,
            feas_tol: 1e-8,
            neg_tol: 1e-12,
            n_theta: 2048,
        }
    }
}

impl EapmConfig {
    pub fn validate(&self, n_antennas: usize) -> Result<()> {
        if !(self.nu > 0.0 && self.nu < 2.0) {
            return Err(Error::InvalidInput(format!(
                "step size nu = {} outside (0, 2)",
                self.nu
            )));
        }
        if self.n_theta < 4 * n_antennas {
            return Err(Error::InvalidInput(format!(
                "n_theta = {} below the 4N = {} minimum",
                self.n_theta,
                4 * n_antennas
            )));
        }
        Ok(())
    }
}

/// Per-run EAPM diagnostics. `negativity` is min/max of the final grid values.
#[derive(Debug, Clone, Copy)]
pub struct EapmDiagnostics {
    pub iterations: usize,
    pub converged: bool,
    pub negativity: f64,
    /// `max_m |<ρ, g_m> - r_m|` of the final iterate.
    pub constraint_residual: f64,
    /// Worst constraint residual seen across all iterates.
    pub max_iterate_residual: f64,
}

/// Variety projection of an arbitrary grid function (one-shot API).
pub fn project_variety(f: &GridFunction, pair: &DuplexPair, r_u: &RVec) -> Result<GridFunction> {
    let ws = ApsWorkspace::new(pair, f.grid.len())?;
    let alpha = ws.alg1_coefficients(r_u)?;
    let pv0 = ws.evaluate_uplink_aps(&alpha);
    let values = ws.project_variety_values(&f.values, &pv0)?;
    GridFunction::new(f.grid.clone(), values)
}

/// One-shot EAPM run (builds the workspace internally).
pub fn eapm_run(
    pair: &DuplexPair,
    r_u: &RVec,
    config: &EapmConfig,
) -> Result<(GridFunction, EapmDiagnostics)> {
    ApsWorkspace::new(pair, config.n_theta)?.eapm(r_u, config)
}

/// DL constraint vector from Algorithm 1 coefficients: `r̂^d = Q α`.
pub fn convert_alg1(alpha: &RVec, ops: &GramOperators) -> Result<RVec> {
    if alpha.len() != 2 * ops.n() {
        return Err(Error::InvalidInput(format!(
            "coefficient count {} does not match 2N = {}",
            alpha.len(),
            2 * ops.n()
        )));
    }
    Ok(ops.duplex_gram() * alpha)
}

/// DL constraint vector from a sampled APS: `r̂^d_m = <ρ̂, g^d_m>` by
/// midpoint quadrature.
pub fn convert_alg2(rho: &GridFunction, geom: &ArrayGeometry) -> RVec {
    let kernels = kernel_matrix(geom, &rho.grid);
    rho.grid.weight() * (kernels * &rho.values)
}

/// Which APS estimator a conversion should use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Alg1,
    Alg2,
}

impl std::str::FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "alg1" => Ok(Algorithm::Alg1),
            "alg2" => Ok(Algorithm::Alg2),
            other => Err(Error::InvalidInput(format!(
                "unknown algorithm '{other}' (expected alg1 or alg2)"
            ))),
        }
    }
}

/// Full conversion from a noisy UL sample covariance: subtract the noise
/// floor, project onto PSD∩Toeplitz, estimate the APS, integrate against the
/// DL kernels.
pub fn convert_pipeline(
    sample_cov: &CMat,
    noise_power: f64,
    algorithm: Algorithm,
    pair: &DuplexPair,
    eapm_config: &EapmConfig,
) -> Result<HermitianToeplitzCov> {
    validate_hermitian(sample_cov)?;
    if noise_power.is_nan() || noise_power < 0.0 {
        return Err(Error::InvalidInput(format!(
            "noise power must be nonnegative, got {noise_power}"
        )));
    }
    if sample_cov.nrows() != pair.n_antennas() {
        return Err(Error::InvalidInput(format!(
            "covariance size {} does not match N = {}",
            sample_cov.nrows(),
            pair.n_antennas()
        )));
    }
    let n = sample_cov.nrows();
    let rbar = sample_cov - CMat::identity(n, n).map(|z| z * noise_power);
    let ws = ApsWorkspace::new(pair, eapm_config.n_theta.max(4 * n))?;
    convert_preprocessed(&rbar, algorithm, &ws, eapm_config)
}

/// Pipeline body shared with the campaign runner: input is the (possibly
/// indefinite) noise-subtracted covariance.
pub fn convert_preprocessed(
    rbar: &CMat,
    algorithm: Algorithm,
    ws: &ApsWorkspace,
    eapm_config: &EapmConfig,
) -> Result<HermitianToeplitzCov> {
    let projected = project_toeplitz_psd(rbar, DYKSTRA_MAX_ITER, DYKSTRA_TOL)?;
    let r_u = projected.cov.to_constraint_vector();
    let r_d = match algorithm {
        Algorithm::Alg1 => {
            let alpha = ws.alg1_coefficients(&r_u)?;
            ws.convert_alg1(&alpha)
        }
        Algorithm::Alg2 => {
            let (rho, _diag) = ws.eapm(&r_u, eapm_config)?;
            ws.convert_alg2(&rho.values)
        }
    };
    HermitianToeplitzCov::from_constraint_vector(&r_d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn pair(n: usize) -> DuplexPair {
        DuplexPair::from_frequencies(n, 1.8e9, 1.9e9).unwrap()
    }

    #[test]
    fn solve_gram_identity() {
        let g = RMat::identity(4, 4);
        let r = RVec::from_vec(vec![1.0, -2.0, 0.5, 3.0]);
        let alpha = solve_gram(&g, &r).unwrap();
        assert!((alpha - r).amax() < 1e-12);
    }

    #[test]
    fn solve_gram_annihilates_null_space() {
        let g = RMat::from_diagonal(&RVec::from_vec(vec![1.0, 0.0]));
        let r = RVec::from_vec(vec![2.0, 0.0]);
        let alpha = solve_gram(&g, &r).unwrap();
        assert_abs_diff_eq!(alpha[0], 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(alpha[1], 0.0, epsilon = 1e-12);
    }

    #[test]
    fn solve_gram_consistent_singular_system() {
        // r constructed in the range of a singular G
        let p = pair(6);
        let g = GramOperators::compute(&p).uplink_gram();
        let alpha0 = RVec::from_fn(12, |i, _| ((i * 7 + 3) % 5) as f64 - 2.0);
        let r = &g * &alpha0;
        let alpha = solve_gram(&g, &r).unwrap();
        let resid = (&g * alpha - &r).norm();
        assert!(resid <= 1e-8 * r.norm(), "residual {resid}");
    }

    #[test]
    fn solve_gram_rejects_dimension_mismatch() {
        let g = RMat::identity(4, 4);
        let r = RVec::from_vec(vec![1.0; 3]);
        assert!(solve_gram(&g, &r).is_err());
    }

    #[test]
    fn alg1_zero_input_gives_zero_aps() {
        let p = pair(4);
        let ops = GramOperators::compute(&p);
        let alpha = estimate_alg1(&ops, &RVec::zeros(8)).unwrap();
        assert!(alpha.amax() < 1e-14);
    }

    #[test]
    fn aps_evaluate_basis_vector_is_constant_kernel() {
        let p = pair(4);
        let grid = Arc::new(ThetaGrid::midpoint(64).unwrap());
        let mut alpha = RVec::zeros(8);
        alpha[0] = 1.0;
        let f = aps_evaluate(&alpha, p.uplink(), grid).unwrap();
        for v in f.values.iter() {
            assert_abs_diff_eq!(*v, 0.25, epsilon = 1e-14);
        }
        let zero = aps_evaluate(&RVec::zeros(8), p.uplink(), f.grid.clone()).unwrap();
        assert!(zero.values.amax() < 1e-15);
    }

    #[test]
    fn nonneg_projection_clamps_pointwise() {
        let grid = Arc::new(ThetaGrid::midpoint(32).unwrap());
        let f = GridFunction::new(
            grid.clone(),
            RVec::from_fn(32, |i, _| (i as f64 * 0.5).sin()),
        )
        .unwrap();
        let p = project_nonneg(&f);
        for (a, b) in f.values.iter().zip(p.values.iter()) {
            assert_eq!(*b, a.max(0.0));
        }
        // idempotent and fixed point on nonnegative input
        let pp = project_nonneg(&p);
        assert_eq!(p.values, pp.values);
    }

    #[test]
    fn variety_projection_restores_feasibility() {
        let p = pair(4);
        let ws = ApsWorkspace::new(&p, 512).unwrap();
        // feasible target from a synthetic constraint vector
        let g = ws.ops().uplink_gram();
        let alpha0 = RVec::from_fn(8, |i, _| 0.1 * (i as f64 + 1.0));
        let r_u = &g * &alpha0;

        // projecting zero gives P_V(0)
        let zero = GridFunction::zero(ws.grid());
        let pv0 = project_variety(&zero, &p, &r_u).unwrap();
        assert!(ws.constraint_residual(&pv0.values, &r_u) < 1e-7);

        // projection is idempotent
        let again = project_variety(&pv0, &p, &r_u).unwrap();
        assert!((again.values - &pv0.values).amax() < 1e-8);

        // a perturbed function is brought back onto the variety
        let mut bumpy = pv0.clone();
        for (i, v) in bumpy.values.iter_mut().enumerate() {
            *v += 0.3 * ((i as f64) * 0.05).cos();
        }
        let proj = project_variety(&bumpy, &p, &r_u).unwrap();
        assert!(ws.constraint_residual(&proj.values, &r_u) < 1e-6);
    }

    #[test]
    fn eapm_feasible_start_returns_immediately() {
        // constant nonnegative APS: P_V(0) is already in V ∩ Z
        let p = pair(4);
        let ws = ApsWorkspace::new(&p, 512).unwrap();
        let cfg = EapmConfig {
            n_theta: 512,
            ..EapmConfig::default()
        };
        // r_u of a constant APS c = 1: r_m = <1, g_m>
        let ones = RVec::from_element(512, 1.0);
        let r_u = ws.uplink_inner_products(&ones);
        let (rho, diag) = ws.eapm(&r_u, &cfg).unwrap();
        assert!(diag.converged);
        assert!(diag.iterations <= 2, "took {} iterations", diag.iterations);
        assert!(rho.values.min() >= -1e-10);
    }

    #[test]
    fn eapm_rejects_bad_config() {
        let p = pair(4);
        let bad = EapmConfig {
            nu: 2.5,
            ..EapmConfig::default()
        };
        assert!(eapm_run(&p, &RVec::zeros(8), &bad).is_err());
        let small_grid = EapmConfig {
            n_theta: 8,
            ..EapmConfig::default()
        };
        assert!(eapm_run(&p, &RVec::zeros(8), &small_grid).is_err());
    }

    #[test]
    fn convert_alg1_zero_duplex_gap_is_identity() {
        let ul = ArrayGeometry::half_wavelength(6, 1.8e9).unwrap();
        let p = DuplexPair::new(ul, ul).unwrap();
        let ops = GramOperators::compute(&p);
        // consistent r_u
        let g = ops.uplink_gram();
        let alpha0 = RVec::from_fn(12, |i, _| (i as f64 * 0.3).cos());
        let r_u = &g * &alpha0;
        let alpha = estimate_alg1(&ops, &r_u).unwrap();
        let r_d = convert_alg1(&alpha, &ops).unwrap();
        assert!((&r_d - &r_u).norm() <= 1e-8 * r_u.norm());
    }

    #[test]
    fn convert_alg2_constant_aps_matches_bessel_identity() {
        // <c, g_m> = c (π/N) J0(z_m) for the cosine kernels
        let p = pair(4);
        let grid = Arc::new(ThetaGrid::midpoint(4096).unwrap());
        let c = 0.7;
        let rho = GridFunction::new(grid, RVec::from_element(4096, c)).unwrap();
        let r = convert_alg2(&rho, p.downlink());
        let geom = p.downlink();
        for m in 0..4 {
            let expected =
                c * std::f64::consts::PI / 4.0 * crate::array_model::j0(geom.spatial_freq(m));
            assert_abs_diff_eq!(r[m], expected, epsilon = 1e-9);
            assert_abs_diff_eq!(r[4 + m], 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn convert_alg2_matches_alg1_on_min_norm_aps() {
        let p = pair(6);
        let ws = ApsWorkspace::new(&p, 2048).unwrap();
        let g = ws.ops().uplink_gram();
        let alpha0 = RVec::from_fn(12, |i, _| 0.2 * ((i + 1) as f64).sqrt());
        let r_u = &g * &alpha0;
        let alpha = ws.alg1_coefficients(&r_u).unwrap();
        let rho = GridFunction::new(ws.grid(), ws.evaluate_uplink_aps(&alpha)).unwrap();
        let via_quadrature = convert_alg2(&rho, p.downlink());
        let analytic = ws.convert_alg1(&alpha);
        assert!((via_quadrature - analytic).amax() < 1e-6);
    }

    #[test]
    fn pipeline_identity_on_clean_input() {
        let ul = ArrayGeometry::half_wavelength(4, 1.8e9).unwrap();
        let p = DuplexPair::new(ul, ul).unwrap();
        // a valid PSD Toeplitz covariance: from a constant APS
        let ws = ApsWorkspace::new(&p, 2048).unwrap();
        let ones = RVec::from_element(2048, 1.0);
        let r_u = ws.uplink_inner_products(&ones);
        let cov = HermitianToeplitzCov::from_constraint_vector(&r_u).unwrap();
        let out = convert_pipeline(
            &cov.expand(),
            0.0,
            Algorithm::Alg1,
            &p,
            &EapmConfig::default(),
        )
        .unwrap();
        let err = (out.expand() - cov.expand()).norm() / cov.expand().norm();
        assert!(err <= 1e-6, "relative error {err}");
    }

    #[test]
    fn pipeline_zero_input_gives_zero() {
        let p = pair(3);
        let out = convert_pipeline(
            &CMat::zeros(3, 3),
            0.0,
            Algorithm::Alg1,
            &p,
            &EapmConfig::default(),
        )
        .unwrap();
        assert!(out.expand().norm() < 1e-12);
    }
}
