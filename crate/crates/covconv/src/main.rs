//! `covconv` command line: Monte Carlo campaigns and single-shot conversion
//! utilities around the UL→DL covariance conversion library.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use covconv::aps_conversion::{aps_evaluate, Algorithm, ApsWorkspace, EapmConfig};
use covconv::array_model::{ArrayGeometry, DuplexPair, GramOperators};
use covconv::campaign::{run_campaign, rows_to_csv, CampaignConfig, SPEED_OF_LIGHT};
use covconv::covariance_core::CovarianceJson;
use covconv::{Error, Result};

#[derive(Parser)]
#[command(name = "covconv", about = "UL-to-DL spatial covariance conversion for FDD massive MIMO")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args, Debug, Clone)]
struct GeometryArgs {
    /// UL carrier frequency in Hz
    #[arg(long, default_value_t = 1.8e9)]
    ul_freq: f64,
    /// DL carrier frequency in Hz
    #[arg(long, default_value_t = 1.9e9)]
    dl_freq: f64,
    /// Element spacing in meters (default: half UL wavelength)
    #[arg(long)]
    spacing: Option<f64>,
}

impl GeometryArgs {
    fn pair(&self, n: usize) -> Result<DuplexPair> {
        let lambda_u = SPEED_OF_LIGHT / self.ul_freq;
        let lambda_d = SPEED_OF_LIGHT / self.dl_freq;
        let d = self.spacing.unwrap_or(lambda_u / 2.0);
        DuplexPair::new(
            ArrayGeometry::new(n, d, lambda_u)?,
            ArrayGeometry::new(n, d, lambda_d)?,
        )
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run a Monte Carlo campaign from a TOML config and write CSV results
    Simulate {
        config: PathBuf,
        /// Override the config seed
        #[arg(long)]
        seed: Option<u64>,
        /// Override the output path (default: config output_path or stdout)
        #[arg(long)]
        out: Option<PathBuf>,
        /// Override the EAPM grid size
        #[arg(long)]
        ntheta: Option<usize>,
    },
    /// Convert one UL covariance (JSON) to a DL covariance estimate (JSON)
    Convert {
        /// UL covariance file
        #[arg(long)]
        ul: PathBuf,
        /// Noise power sigma_z^2 subtracted before preprocessing
        #[arg(long, default_value_t = 0.0)]
        noise: f64,
        /// APS estimator: alg1 or alg2
        #[arg(long, default_value = "alg1")]
        alg: String,
        #[arg(long)]
        ntheta: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        geometry: GeometryArgs,
    },
    /// Dump the analytic Gram matrices G^u and Q as JSON
    Gram {
        /// Antenna count
        #[arg(long)]
        n: usize,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        geometry: GeometryArgs,
    },
    /// Dump the APS estimated from a UL covariance as CSV (theta,value)
    Aps {
        /// UL covariance file
        #[arg(long)]
        ul: PathBuf,
        #[arg(long, default_value_t = 0.0)]
        noise: f64,
        #[arg(long, default_value = "alg1")]
        alg: String,
        #[arg(long)]
        ntheta: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        geometry: GeometryArgs,
    },
}

fn write_output(out: Option<&PathBuf>, content: &str) -> Result<()> {
    match out {
        Some(path) => fs::write(path, content)?,
        None => print!("{content}"),
    }
    Ok(())
}

fn load_covariance(path: &PathBuf) -> Result<covconv::CMat> {
    let text = fs::read_to_string(path)?;
    let parsed: CovarianceJson = serde_json::from_str(&text)
        .map_err(|e| Error::InvalidInput(format!("bad covariance file {}: {e}", path.display())))?;
    parsed.to_matrix()
}

fn preprocess_to_constraints(
    cov: &covconv::CMat,
    noise: f64,
    pair: &DuplexPair,
) -> Result<covconv::RVec> {
    if noise.is_nan() || noise < 0.0 {
        return Err(Error::InvalidInput("noise power must be nonnegative".into()));
    }
    let n = pair.n_antennas();
    let rbar = cov - covconv::CMat::identity(n, n).map(|z| z * noise);
    let projected = covconv::covariance_core::project_toeplitz_psd(
        &rbar,
        covconv::covariance_core::DYKSTRA_MAX_ITER,
        covconv::covariance_core::DYKSTRA_TOL,
    )?;
    Ok(projected.cov.to_constraint_vector())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate {
            config,
            seed,
            out,
            ntheta,
        } => {
            let text = fs::read_to_string(&config)?;
            let mut cfg = CampaignConfig::from_toml_str(&text)?;
            if let Some(seed) = seed {
                cfg.seed = seed;
            }
            if let Some(n_theta) = ntheta {
                cfg.eapm.n_theta = n_theta;
            }
            let rows = run_campaign(&cfg)?;
            let csv = rows_to_csv(&rows);
            let path = out.or_else(|| cfg.output_path.as_ref().map(PathBuf::from));
            write_output(path.as_ref(), &csv)?;
            if let Some(p) = &path {
                eprintln!("wrote {} rows (seed {}) to {}", rows.len(), cfg.seed, p.display());
            }
            Ok(())
        }
        Command::Convert {
            ul,
            noise,
            alg,
            ntheta,
            out,
            geometry,
        } => {
            let cov = load_covariance(&ul)?;
            let pair = geometry.pair(cov.nrows())?;
            let algorithm: Algorithm = alg.parse()?;
            let eapm = EapmConfig {
                n_theta: ntheta.unwrap_or(2048).max(4 * cov.nrows()),
                ..EapmConfig::default()
            };
            let estimate =
                covconv::aps_conversion::convert_pipeline(&cov, noise, algorithm, &pair, &eapm)?;
            let json = serde_json::to_string_pretty(&CovarianceJson::from_matrix(
                &estimate.expand(),
            ))
            .expect("serializable");
            write_output(out.as_ref(), &json)?;
            Ok(())
        }
        Command::Gram { n, out, geometry } => {
            let pair = geometry.pair(n)?;
            let ops = GramOperators::compute(&pair);
            let to_vec = |m: &covconv::RMat| -> Vec<f64> {
                let mut v = Vec::with_capacity(n * n);
                for r in 0..n {
                    for c in 0..n {
                        v.push(m[(r, c)]);
                    }
                }
                v
            };
            let json = serde_json::json!({
                "n": n,
                "g_re": to_vec(&ops.g_re),
                "g_im": to_vec(&ops.g_im),
                "q_re": to_vec(&ops.q_re),
                "q_im": to_vec(&ops.q_im),
            });
            write_output(out.as_ref(), &serde_json::to_string_pretty(&json).expect("serializable"))?;
            Ok(())
        }
        Command::Aps {
            ul,
            noise,
            alg,
            ntheta,
            out,
            geometry,
        } => {
            let cov = load_covariance(&ul)?;
            let n = cov.nrows();
            let pair = geometry.pair(n)?;
            let algorithm: Algorithm = alg.parse()?;
            let eapm = EapmConfig {
                n_theta: ntheta.unwrap_or(2048).max(4 * n),
                ..EapmConfig::default()
            };
            let r_u = preprocess_to_constraints(&cov, noise, &pair)?;
            let ws = ApsWorkspace::new(&pair, eapm.n_theta)?;
            let rho = match algorithm {
                Algorithm::Alg1 => {
                    let alpha = ws.alg1_coefficients(&r_u)?;
                    aps_evaluate(&alpha, pair.uplink(), ws.grid())?
                }
                Algorithm::Alg2 => ws.eapm(&r_u, &eapm)?.0,
            };
            let mut csv = String::from("theta,value\n");
            for (theta, value) in rho.grid.points().iter().zip(rho.values.iter()) {
                csv.push_str(&format!("{theta},{value}\n"));
            }
            write_output(out.as_ref(), &csv)?;
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // clap prints help/version on stdout with success status
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e @ (Error::Domain(_) | Error::InvalidInput(_) | Error::Io(_))) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
