//! Geometry-based stochastic channel model: ground-truth angular power
//! spectra, true covariances by quadrature, and noisy channel snapshots.
//!
//! The APS is a weighted mixture of Gaussian clusters truncated to the sector
//! `[-π/2, π/2]` and renormalized per cluster, so the total integrated power
//! equals `P_RX` exactly. The same `ApsModel` feeds both the UL and DL
//! covariance syntheses (frequency invariance).

use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erf;

use crate::aps_conversion::ThetaGrid;
use crate::array_model::ArrayGeometry;
use crate::covariance_core::{psd_sqrt, HermitianToeplitzCov};
use crate::{C64, CMat, CVec, Error, Result};

use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, SQRT_2};

/// One scatterer cluster: Gaussian angular density with mean, spread
/// (standard deviation), and power weight.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cluster {
    pub mean_rad: f64,
    pub spread_rad: f64,
    pub weight: f64,
}

/// Ground-truth angular power spectrum: a cluster mixture with total
/// integrated power `total_power`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApsModel {
    pub clusters: Vec<Cluster>,
    pub total_power: f64,
}

impl ApsModel {
    pub fn new(clusters: Vec<Cluster>, total_power: f64) -> Result<Self> {
        if clusters.is_empty() {
            return Err(Error::InvalidInput("at least one cluster required".into()));
        }
        for c in &clusters {
            if c.spread_rad.is_nan() || c.spread_rad <= 0.0 {
                return Err(Error::InvalidInput(format!(
                    "cluster spread must be positive, got {}",
                    c.spread_rad
                )));
            }
            if c.weight.is_nan() || c.weight < 0.0 {
                return Err(Error::InvalidInput(format!(
                    "cluster weight must be nonnegative, got {}",
                    c.weight
                )));
            }
        }
        let sum: f64 = clusters.iter().map(|c| c.weight).sum();
        if (sum - total_power).abs() > 1e-9 * total_power.max(1.0) {
            return Err(Error::InvalidInput(format!(
                "cluster weights sum to {sum}, expected total power {total_power}"
            )));
        }
        Ok(Self {
            clusters,
            total_power,
        })
    }
}

fn normal_cdf(x: f64) -> f64 {
    0.5 * (1.0 + erf(x / SQRT_2))
}

/// Mixture density at `theta`; each Gaussian cluster is truncated to the
/// sector and renormalized to unit mass before weighting.
pub fn aps_density(model: &ApsModel, theta: f64) -> f64 {
    let mut acc = 0.0;
    for c in &model.clusters {
        if c.weight == 0.0 {
            continue;
        }
        let z = (theta - c.mean_rad) / c.spread_rad;
        let mass = normal_cdf((FRAC_PI_2 - c.mean_rad) / c.spread_rad)
            - normal_cdf((-FRAC_PI_2 - c.mean_rad) / c.spread_rad);
        let pdf = (-0.5 * z * z).exp() / (c.spread_rad * (2.0 * std::f64::consts::PI).sqrt());
        acc += c.weight * pdf / mass;
    }
    acc
}

/// Scenario randomization ranges (defaults follow the usual cellular GSCM
/// setup: 1..=5 clusters, means in ±60°, spreads 3°..8°, SNR 10..30 dB,
/// K = 1000 snapshots, unit total power).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct ScenarioConfig {
    pub cluster_count_choices: Vec<usize>,
    pub mean_range_rad: (f64, f64),
    pub spread_range_rad: (f64, f64),
    pub snr_range_db: (f64, f64),
    pub n_snapshots: usize,
    pub total_power: f64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        let deg = std::f64::consts::PI / 180.0;
        Self {
            cluster_count_choices: vec![1, 2, 3, 4, 5],
            mean_range_rad: (-FRAC_PI_3, FRAC_PI_3),
            spread_range_rad: (3.0 * deg, 8.0 * deg),
            snr_range_db: (10.0, 30.0),
            n_snapshots: 1000,
            total_power: 1.0,
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        if self.cluster_count_choices.is_empty() {
            return Err(Error::InvalidInput("empty cluster count choices".into()));
        }
        if self.n_snapshots == 0 {
            return Err(Error::InvalidInput("snapshot count must be >= 1".into()));
        }
        for (lo, hi, what) in [
            (self.mean_range_rad.0, self.mean_range_rad.1, "mean"),
            (self.spread_range_rad.0, self.spread_range_rad.1, "spread"),
            (self.snr_range_db.0, self.snr_range_db.1, "SNR"),
        ] {
            if lo > hi {
                return Err(Error::InvalidInput(format!("empty {what} range")));
            }
        }
        if self.spread_range_rad.0.is_nan() || self.spread_range_rad.0 <= 0.0 {
            return Err(Error::InvalidInput("spreads must be positive".into()));
        }
        Ok(())
    }
}

fn uniform(rng: &mut impl Rng, range: (f64, f64)) -> f64 {
    if range.0 == range.1 {
        range.0
    } else {
        rng.gen_range(range.0..range.1)
    }
}

/// Draws a random (APS model, SNR) pair; fully determined by the RNG state.
pub fn sample_scenario(rng: &mut impl Rng, config: &ScenarioConfig) -> Result<(ApsModel, f64)> {
    config.validate()?;
    let count_idx = rng.gen_range(0..config.cluster_count_choices.len());
    let count = config.cluster_count_choices[count_idx];
    let mut clusters = Vec::with_capacity(count);
    for _ in 0..count {
        clusters.push(Cluster {
            mean_rad: uniform(rng, config.mean_range_rad),
            spread_rad: uniform(rng, config.spread_range_rad),
            weight: rng.gen_range(0.0..1.0f64),
        });
    }
    let raw_sum: f64 = clusters.iter().map(|c| c.weight).sum();
    for c in &mut clusters {
        c.weight *= config.total_power / raw_sum;
    }
    let snr_db = uniform(rng, config.snr_range_db);
    Ok((ApsModel::new(clusters, config.total_power)?, snr_db))
}

pub const SYNTHESIS_N_THETA: usize = 2048;

/// True covariance of a model: first-column entries
/// `c_n = ∫ ρ(θ) (1/N) e^{j z_n sinθ} dθ` by midpoint quadrature.
pub fn synthesize_covariance(
    model: &ApsModel,
    geom: &ArrayGeometry,
) -> Result<HermitianToeplitzCov> {
    let grid = ThetaGrid::midpoint(SYNTHESIS_N_THETA)?;
    let w = grid.weight();
    let n = geom.n_antennas();
    let inv_n = 1.0 / n as f64;
    let density: Vec<f64> = grid.points().iter().map(|&t| aps_density(model, t)).collect();
    let sines: Vec<f64> = grid.points().iter().map(|&t| t.sin()).collect();
    let mut col = vec![C64::new(0.0, 0.0); n];
    for (k, entry) in col.iter_mut().enumerate() {
        let z = geom.spatial_freq(k);
        let mut re = 0.0;
        let mut im = 0.0;
        for (d, s) in density.iter().zip(&sines) {
            let phase = z * s;
            re += d * phase.cos();
            im += d * phase.sin();
        }
        *entry = C64::new(w * inv_n * re, w * inv_n * im);
    }
    let cov = HermitianToeplitzCov::new(col)?;
    // sanity: a true covariance must be (numerically) PSD
    let eig = cov.expand().symmetric_eigen();
    let lmax = eig.eigenvalues.iter().cloned().fold(0.0f64, f64::max);
    let lmin = eig.eigenvalues.iter().cloned().fold(f64::MAX, f64::min);
    if lmin < -1e-8 * lmax.max(1e-300) {
        return Err(Error::Numeric(format!(
            "synthesized covariance is not PSD (min eig {lmin:.3e}, max {lmax:.3e})"
        )));
    }
    Ok(cov)
}

/// K noisy channel estimates `ĥ[k] = R^{1/2} w[k] + z[k]`, with the noise
/// power set from the per-antenna received SNR.
#[derive(Debug, Clone)]
pub struct ChannelSnapshotSet {
    pub estimates: Vec<CVec>,
    pub noise_power: f64,
}

/// Circular complex Gaussian vector with unit per-entry variance.
fn standard_complex_gaussian(rng: &mut impl Rng, n: usize) -> CVec {
    use rand_distr::{Distribution, StandardNormal};
    let scale = 0.5f64.sqrt();
    CVec::from_fn(n, |_, _| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        C64::new(re * scale, im * scale)
    })
}

/// Draws K snapshots conditioned on `R`; σ_z² = (trace(R)/N) / 10^(snr/10).
pub fn sample_channel_snapshots(
    r: &HermitianToeplitzCov,
    k: usize,
    snr_db: f64,
    rng: &mut impl Rng,
) -> Result<ChannelSnapshotSet> {
    if k == 0 {
        return Err(Error::InvalidInput("snapshot count must be >= 1".into()));
    }
    let n = r.n();
    let dense = r.expand();
    let sqrt = psd_sqrt(&dense)?;
    let avg_power = dense.trace().re / n as f64;
    let noise_power = avg_power / 10f64.powf(snr_db / 10.0);
    let noise_std = noise_power.sqrt();
    let mut estimates = Vec::with_capacity(k);
    for _ in 0..k {
        let h = &sqrt * standard_complex_gaussian(rng, n);
        let est = if noise_power > 0.0 {
            h + standard_complex_gaussian(rng, n).map(|z| z * noise_std)
        } else {
            h
        };
        estimates.push(est);
    }
    Ok(ChannelSnapshotSet {
        estimates,
        noise_power,
    })
}

/// Sample covariance `C̄ = (1/K) Σ ĥ ĥ^H` and its noise-subtracted version
/// `R̄ = C̄ − σ_z² I`.
pub fn sample_covariance(snapshots: &ChannelSnapshotSet) -> (CMat, CMat) {
    let k = snapshots.estimates.len();
    let n = snapshots.estimates[0].len();
    let mut c = CMat::zeros(n, n);
    for h in &snapshots.estimates {
        for r in 0..n {
            for col in 0..n {
                c[(r, col)] += h[r] * h[col].conj();
            }
        }
    }
    c /= C64::new(k as f64, 0.0);
    let rbar = &c - CMat::identity(n, n).map(|z| z * snapshots.noise_power);
    (c, rbar)
}
