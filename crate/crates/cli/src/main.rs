//! `dsm`: synthesize far-field data, corrupt it, reconstruct with sampling
//! indicators, verify the indicator inequalities and render grids.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};
use dsm_core::verify::SuiteConfig;

use commands::*;
use config::RunConfig;

#[derive(Parser)]
#[command(name = "dsm", version, about = "Direct sampling reconstructions from far-field data")]
struct Cli {
    /// Worker threads for grid evaluation (default: all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute a clean far-field matrix.
    Synthesize {
        #[command(flatten)]
        common: Common,
        /// Use the closed-form disk/ball oracle instead of quadrature.
        #[arg(long)]
        analytic: bool,
        /// Gauss-Legendre nodes per polar direction.
        #[arg(long)]
        quad_level: Option<usize>,
    },
    /// Apply multiplicative noise to a far-field file.
    Corrupt {
        input: PathBuf,
        /// Noise level, or a comma-separated batch written into --out as a directory.
        #[arg(long)]
        delta: Option<String>,
        #[arg(long)]
        seed: Option<u64>,
        /// Allow corrupting data that is already noisy.
        #[arg(long)]
        force: bool,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate indicators over a sampling grid.
    Reconstruct {
        input: PathBuf,
        #[command(flatten)]
        common: Common,
        /// "x_lo,x_hi,y_lo,y_hi,nx,ny".
        #[arg(long)]
        grid: Option<String>,
        /// Sampling plane for 3D data, e.g. "yz:0".
        #[arg(long)]
        plane: Option<String>,
        /// Comma-separated subset of dsm,fdsm,tdsm,fm.
        #[arg(long)]
        indicators: Option<String>,
        #[arg(long)]
        alpha: Option<f64>,
        /// Sharpening exponent applied after normalization.
        #[arg(long)]
        p: Option<f64>,
        /// Level-set threshold.
        #[arg(long)]
        tau: Option<f64>,
    },
    /// Check the indicator inequalities on synthetic normal operators.
    Verify {
        /// "a..b" or a comma-separated list.
        #[arg(long, default_value = "1")]
        seeds: String,
        /// Multiplies the constructed coercivity constant (values > 1 must fail).
        #[arg(long, default_value_t = 1.0)]
        mu_scale: f64,
        #[arg(long = "M", default_value_t = 64)]
        m: usize,
        #[arg(long, default_value_t = 10.0)]
        k: f64,
        #[arg(long, default_value_t = 1000)]
        num_z: usize,
        #[arg(long, default_value_t = dsm_core::filter::DEFAULT_ALPHA)]
        alpha: f64,
        #[arg(long, default_value = "verify")]
        out: PathBuf,
    },
    /// Convert an indicator CSV into a PGM image.
    Render {
        input: PathBuf,
        #[arg(long, default_value_t = 1.0)]
        p: f64,
        #[arg(long)]
        out: PathBuf,
    },
}

/// Flags shared by synthesize and reconstruct; they override the config file.
#[derive(Args)]
struct Common {
    /// JSON run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// pear, star, peanut, disk:R or ball:R (reconstruct: truth for metrics).
    #[arg(long)]
    shape: Option<String>,
    #[arg(long)]
    k: Option<f64>,
    #[arg(long)]
    n: Option<f64>,
    #[arg(long = "M")]
    m: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Common {
    fn merged(self) -> Result<RunConfig> {
        let mut c = RunConfig::load_optional(self.config.as_deref())?;
        c.shape = self.shape.or(c.shape);
        c.k = self.k.or(c.k);
        c.n = self.n.or(c.n);
        c.m = self.m.or(c.m);
        c.out = self.out.or(c.out);
        Ok(c)
    }
}

fn run(cli: Cli) -> Result<i32> {
    if let Some(n) = cli.workers {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    match cli.command {
        Command::Synthesize {
            common,
            analytic,
            quad_level,
        } => {
            let mut config = common.merged()?;
            config.analytic = Some(analytic || config.analytic.unwrap_or(false));
            config.quad_level = quad_level.or(config.quad_level);
            let out = config.out.clone().unwrap_or_else(|| "farfield.json".into());
            synthesize(SynthesizeArgs { config, out })
        }
        Command::Corrupt {
            input,
            delta,
            seed,
            force,
            config,
            out,
        } => {
            let c = RunConfig::load_optional(config.as_deref())?;
            let deltas = match delta {
                Some(spec) => parse_deltas(&spec)?,
                None => vec![c.delta.unwrap_or(0.05)],
            };
            corrupt_cmd(CorruptArgs {
                input,
                deltas,
                seed: seed.or(c.seed).unwrap_or(1),
                force,
                out: out.or(c.out).unwrap_or_else(|| "farfield_noisy.json".into()),
            })
        }
        Command::Reconstruct {
            input,
            common,
            grid,
            plane,
            indicators,
            alpha,
            p,
            tau,
        } => {
            let mut config = common.merged()?;
            config.grid = grid.or(config.grid);
            config.plane = plane.or(config.plane);
            config.indicators = indicators.or(config.indicators);
            config.alpha = alpha.or(config.alpha);
            config.p = p.or(config.p);
            config.tau = tau.or(config.tau);
            let out = config.out.clone().unwrap_or_else(|| "out".into());
            reconstruct(ReconstructArgs { input, config, out })
        }
        Command::Verify {
            seeds,
            mu_scale,
            m,
            k,
            num_z,
            alpha,
            out,
        } => verify(VerifyArgs {
            seeds: parse_seeds(&seeds)?,
            suite: SuiteConfig {
                m,
                k,
                num_z,
                alpha,
                mu_scale,
                ..SuiteConfig::default()
            },
            out,
        }),
        Command::Render { input, p, out } => render(RenderArgs { input, p, out }),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
