//! Seeded Monte Carlo campaigns comparing DL covariance estimators.
//!
//! Per run: draw a GSCM scenario, build the true UL/DL covariances by
//! quadrature, simulate K noisy snapshots, preprocess (noise subtraction +
//! Toeplitz-PSD projection), run every configured estimator, and score all
//! three metrics against the true DL covariance. Runs are independent and
//! execute in parallel; each owns an RNG stream derived from
//! (seed, N, run index), so results are byte-identical across thread counts.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::aps_conversion::{convert_preprocessed, Algorithm, ApsWorkspace, EapmConfig};
use crate::array_model::{ArrayGeometry, DuplexPair};
use crate::covariance_core::{project_toeplitz_psd, DYKSTRA_MAX_ITER, DYKSTRA_TOL};
use crate::gscm_sim::{
    sample_channel_snapshots, sample_covariance, sample_scenario, synthesize_covariance,
    ScenarioConfig,
};
use crate::metrics::MetricReport;
use crate::{CMat, Error, Result};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// DL covariance estimators a campaign can compare.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimator {
    /// Algorithm 1: minimum-norm APS, analytic conversion.
    Alg1,
    /// Algorithm 2: EAPM with the nonnegativity constraint.
    Alg2,
    /// Uses the preprocessed UL covariance directly as the DL estimate.
    UlPassthrough,
    /// DL sample covariance at the same K and SNR, Toeplitz-PSD corrected.
    DlSampleCov,
}

impl Estimator {
    pub fn name(&self) -> &'static str {
        match self {
            Estimator::Alg1 => "alg1",
            Estimator::Alg2 => "alg2",
            Estimator::UlPassthrough => "ul_passthrough",
            Estimator::DlSampleCov => "dl_sample_cov",
        }
    }
}

impl std::fmt::Display for Estimator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

pub const METRIC_NAMES: [&str; 3] = ["euclid", "affine_inv", "grassmann"];

/// Campaign definition; all fields have §-style defaults and may be omitted
/// from the TOML file.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct CampaignConfig {
    pub antenna_counts: Vec<usize>,
    pub ul_freq_hz: f64,
    pub dl_freq_hz: f64,
    /// Element spacing in meters; `None` means half the UL wavelength.
    pub spacing_m: Option<f64>,
    pub runs: usize,
    pub estimators: Vec<Estimator>,
    pub seed: u64,
    /// Skip snapshot simulation and feed the exact covariances.
    pub perfect_covariance: bool,
    pub output_path: Option<String>,
    pub scenario: ScenarioConfig,
    pub eapm: EapmConfig,
}

impl Default for CampaignConfig {
    fn default() -> Self {
        Self {
            antenna_counts: vec![8, 16, 32, 64],
            ul_freq_hz: 1.8e9,
            dl_freq_hz: 1.9e9,
            spacing_m: None,
            runs: 100,
            estimators: vec![
                Estimator::Alg1,
                Estimator::Alg2,
                Estimator::UlPassthrough,
                Estimator::DlSampleCov,
            ],
            seed: 1,
            perfect_covariance: false,
            output_path: None,
            scenario: ScenarioConfig::default(),
            eapm: EapmConfig::default(),
        }
    }
}

impl CampaignConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let config: CampaignConfig =
            toml::from_str(text).map_err(|e| Error::InvalidInput(format!("bad config: {e}")))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.antenna_counts.is_empty() {
            return Err(Error::InvalidInput("no antenna counts".into()));
        }
        if self.runs == 0 {
            return Err(Error::InvalidInput("runs must be >= 1".into()));
        }
        if self.estimators.is_empty() {
            return Err(Error::InvalidInput("estimator set is empty".into()));
        }
        if !(self.ul_freq_hz > 0.0 && self.dl_freq_hz > 0.0) {
            return Err(Error::InvalidInput("carrier frequencies must be positive".into()));
        }
        self.scenario.validate()
    }

    pub fn duplex_pair(&self, n_antennas: usize) -> Result<DuplexPair> {
        let lambda_u = SPEED_OF_LIGHT / self.ul_freq_hz;
        let lambda_d = SPEED_OF_LIGHT / self.dl_freq_hz;
        let d = self.spacing_m.unwrap_or(lambda_u / 2.0);
        DuplexPair::new(
            ArrayGeometry::new(n_antennas, d, lambda_u)?,
            ArrayGeometry::new(n_antennas, d, lambda_d)?,
        )
    }
}

/// One aggregated campaign result.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub n_antennas: usize,
    pub estimator: Estimator,
    pub metric: &'static str,
    pub mse: f64,
    pub run_count: usize,
    pub seed: u64,
}

/// splitmix64-based per-run stream seed. Deliberately independent of N:
/// every antenna count sees the same scenario/SNR draw at a given run index
/// (common random numbers), so MSE trends across N are paired comparisons.
fn run_seed(seed: u64, run: usize) -> u64 {
    let mut z = seed.wrapping_add((run as u64).wrapping_mul(0x9e3779b97f4a7c15));
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

struct RunScores {
    per_estimator: Vec<(Estimator, MetricReport)>,
}

fn run_one(
    config: &CampaignConfig,
    pair: &DuplexPair,
    ws: &ApsWorkspace,
    run: usize,
) -> Result<RunScores> {
    let mut rng = ChaCha8Rng::seed_from_u64(run_seed(config.seed, run));
    let (model, snr_db) = sample_scenario(&mut rng, &config.scenario)?;
    let r_u_true = synthesize_covariance(&model, pair.uplink())?;
    let r_d_true = synthesize_covariance(&model, pair.downlink())?;
    let truth = r_d_true.expand();

    // same draw structure regardless of the estimator list, so the stream
    // stays aligned across configs that differ only in estimators
    let ul_input: CMat = if config.perfect_covariance {
        r_u_true.expand()
    } else {
        let snapshots =
            sample_channel_snapshots(&r_u_true, config.scenario.n_snapshots, snr_db, &mut rng)?;
        sample_covariance(&snapshots).1
    };
    let need_dl = config.estimators.contains(&Estimator::DlSampleCov);
    let dl_input: Option<CMat> = if !need_dl {
        None
    } else if config.perfect_covariance {
        Some(truth.clone())
    } else {
        let snapshots =
            sample_channel_snapshots(&r_d_true, config.scenario.n_snapshots, snr_db, &mut rng)?;
        Some(sample_covariance(&snapshots).1)
    };

    let mut per_estimator = Vec::with_capacity(config.estimators.len());
    for &estimator in &config.estimators {
        let estimate = match estimator {
            Estimator::Alg1 => {
                convert_preprocessed(&ul_input, Algorithm::Alg1, ws, &config.eapm)?.expand()
            }
            Estimator::Alg2 => {
                convert_preprocessed(&ul_input, Algorithm::Alg2, ws, &config.eapm)?.expand()
            }
            Estimator::UlPassthrough => {
                project_toeplitz_psd(&ul_input, DYKSTRA_MAX_ITER, DYKSTRA_TOL)?
                    .cov
                    .expand()
            }
            Estimator::DlSampleCov => {
                let input = dl_input.as_ref().expect("dl input prepared above");
                project_toeplitz_psd(input, DYKSTRA_MAX_ITER, DYKSTRA_TOL)?
                    .cov
                    .expand()
            }
        };
        per_estimator.push((estimator, MetricReport::compute(&truth, &estimate)?));
    }
    Ok(RunScores { per_estimator })
}

/// Runs the full campaign; fails if more than 10% of the runs abort.
pub fn run_campaign(config: &CampaignConfig) -> Result<Vec<ResultRow>> {
    config.validate()?;
    let mut rows = Vec::new();
    for &n in &config.antenna_counts {
        let pair = config.duplex_pair(n)?;
        let ws = ApsWorkspace::new(&pair, config.eapm.n_theta.max(4 * n))?;
        let eapm = EapmConfig {
            n_theta: config.eapm.n_theta.max(4 * n),
            ..config.eapm
        };
        let run_config = CampaignConfig {
            eapm,
            ..config.clone()
        };
        let outcomes: Vec<Result<RunScores>> = (0..config.runs)
            .into_par_iter()
            .map(|run| run_one(&run_config, &pair, &ws, run))
            .collect();

        let mut scores = Vec::new();
        let mut failures = 0usize;
        for (run, outcome) in outcomes.into_iter().enumerate() {
            match outcome {
                Ok(s) => scores.push(s),
                Err(e) => {
                    failures += 1;
                    eprintln!("run {run} (N = {n}) aborted: {e}");
                }
            }
        }
        if failures * 10 > config.runs {
            return Err(Error::Numeric(format!(
                "{failures}/{} runs aborted at N = {n}",
                config.runs
            )));
        }
        let run_count = scores.len();
        for &estimator in &config.estimators {
            for metric in METRIC_NAMES {
                let errors: Vec<f64> = scores
                    .iter()
                    .flat_map(|s| {
                        s.per_estimator
                            .iter()
                            .filter(|(e, _)| *e == estimator)
                            .map(|(_, report)| match metric {
                                "euclid" => report.euclid,
                                "affine_inv" => report.affine_inv,
                                _ => report.grassmann,
                            })
                    })
                    .collect();
                rows.push(ResultRow {
                    n_antennas: n,
                    estimator,
                    metric,
                    mse: crate::metrics::aggregate_mse(&errors)?,
                    run_count,
                    seed: config.seed,
                });
            }
        }
    }
    rows.sort_by(|a, b| {
        (a.n_antennas, a.estimator, a.metric).cmp(&(b.n_antennas, b.estimator, b.metric))
    });
    Ok(rows)
}

/// Stable CSV schema: `n,estimator,metric,mse,runs,seed`.
pub fn rows_to_csv(rows: &[ResultRow]) -> String {
    let mut out = String::from("n,estimator,metric,mse,runs,seed\n");
    for row in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            row.n_antennas, row.estimator, row.metric, row.mse, row.run_count, row.seed
        ));
    }
    out
}
