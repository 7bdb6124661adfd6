//! `valleon`: valley-Hall photonic lattice pipelines.
//!
//! Subcommands run one analysis stage each and write deterministic
//! artifacts (CSV/JSON/SVG plus a digest manifest) into the output
//! directory. Exit codes: 0 success, 2 configuration error, 3 runtime
//! (numerical or IO) failure.

mod config;
mod emit;
mod manifest;
mod pipeline;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{parse_config, validate, ConfigError, RunConfig};
use pipeline::{run_pipeline, Command as PipelineCommand, ReproTarget};

#[derive(Debug, Parser)]
#[command(name = "valleon", version, about = "Valley-Hall lattice simulation pipelines")]
struct Cli {
    #[command(flatten)]
    common: CommonArgs,
    #[command(subcommand)]
    command: CliCommand,
}

#[derive(Debug, Args)]
struct CommonArgs {
    /// Path to a JSON run configuration (defaults apply when omitted).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides `output.dir`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Seed override (overrides `seed`).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Comma-separated output formats (overrides `output.formats`).
    #[arg(long, global = true, value_delimiter = ',')]
    format: Option<Vec<String>>,
}

#[derive(Debug, Subcommand)]
enum CliCommand {
    /// Band structure along the high-symmetry path.
    Bands,
    /// Berry curvature map and valley-Chern report.
    Berry,
    /// Domain-wall ribbon spectrum and edge branches.
    Ribbon {
        /// Interface type: I12 or I21.
        #[arg(long)]
        interface: Option<String>,
    },
    /// Edge-wavepacket transport through a finite device.
    Transport {
        /// Device geometry: straight | z | omega | hsbs.
        #[arg(long)]
        geometry: Option<String>,
        /// Rectangle half-width in lattice constants.
        #[arg(long)]
        extent: Option<usize>,
        /// Carrier valley: K or Kprime.
        #[arg(long)]
        carrier: Option<String>,
        /// Peak absorber rate.
        #[arg(long)]
        gamma: Option<f64>,
        /// Number of integrator steps.
        #[arg(long)]
        steps: Option<usize>,
    },
    /// Hong-Ou-Mandel delay scan through the ideal splitter cascade.
    Hom {
        /// Coincidence pair, e.g. `c,d`.
        #[arg(long, value_delimiter = ',')]
        pair: Option<Vec<String>>,
        /// Source indistinguishability V0.
        #[arg(long)]
        v0: Option<f64>,
        /// Spectral width sigma (1/ps).
        #[arg(long)]
        sigma: Option<f64>,
    },
    /// Cascaded-circuit coincidence scan (same artifacts as `hom`).
    Circuit {
        #[arg(long, value_delimiter = ',')]
        pair: Option<Vec<String>>,
        #[arg(long)]
        v0: Option<f64>,
        #[arg(long)]
        sigma: Option<f64>,
    },
    /// Fit a coincidence scan (hom.csv) to the dip/peak model.
    Fit {
        /// Path to a hom.csv artifact.
        input: PathBuf,
        /// Feature shape: dip or peak.
        #[arg(long)]
        shape: Option<String>,
    },
    /// Reproduction pipelines with pinned parameters.
    #[command(name = "repro-fig1c")]
    ReproFig1c,
    #[command(name = "repro-fig1d")]
    ReproFig1d,
    #[command(name = "repro-fig2d")]
    ReproFig2d,
    #[command(name = "repro-fig3de")]
    ReproFig3de,
    #[command(name = "repro-fig4a")]
    ReproFig4a,
    #[command(name = "repro-fig4b")]
    ReproFig4b,
    #[command(name = "repro-fig4c")]
    ReproFig4c,
    #[command(name = "repro-fig4d")]
    ReproFig4d,
}

fn load_config(common: &CommonArgs) -> Result<RunConfig, ConfigError> {
    let mut config = match &common.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| {
                ConfigError::Invalid(vec![format!("config `{}`: {e}", path.display())])
            })?;
            parse_config(&text)?
        }
        None => RunConfig::default(),
    };
    if let Some(out) = &common.out {
        config.output.dir = out.display().to_string();
    }
    if let Some(seed) = common.seed {
        config.seed = seed;
    }
    if let Some(formats) = &common.format {
        config.output.formats = formats.clone();
    }
    Ok(config)
}

fn apply_command_overrides(config: &mut RunConfig, command: &CliCommand) {
    match command {
        CliCommand::Ribbon { interface } => {
            if let Some(i) = interface {
                config.ribbon.interface = i.clone();
            }
        }
        CliCommand::Transport { geometry, extent, carrier, gamma, steps } => {
            if let Some(g) = geometry {
                config.device.geometry = g.clone();
            }
            if let Some(e) = extent {
                config.device.extent = *e;
            }
            if let Some(c) = carrier {
                config.transport.carrier = c.clone();
            }
            if let Some(g) = gamma {
                config.transport.gamma = *g;
            }
            if let Some(s) = steps {
                config.transport.steps = *s;
            }
        }
        CliCommand::Hom { pair, v0, sigma } | CliCommand::Circuit { pair, v0, sigma } => {
            if let Some(p) = pair {
                config.quantum.pair = p.clone();
            }
            if let Some(v) = v0 {
                config.quantum.v0 = *v;
            }
            if let Some(s) = sigma {
                config.quantum.sigma = *s;
            }
        }
        CliCommand::Fit { shape, .. } => {
            if let Some(s) = shape {
                config.fit.shape = s.clone();
            }
        }
        _ => {}
    }
}

fn pipeline_command(command: &CliCommand) -> PipelineCommand {
    match command {
        CliCommand::Bands => PipelineCommand::Bands,
        CliCommand::Berry => PipelineCommand::Berry,
        CliCommand::Ribbon { .. } => PipelineCommand::Ribbon,
        CliCommand::Transport { .. } => PipelineCommand::Transport,
        CliCommand::Hom { .. } => PipelineCommand::Hom,
        CliCommand::Circuit { .. } => PipelineCommand::Circuit,
        CliCommand::Fit { input, .. } => {
            PipelineCommand::Fit { input: input.display().to_string() }
        }
        CliCommand::ReproFig1c => PipelineCommand::Repro(ReproTarget::Fig1c),
        CliCommand::ReproFig1d => PipelineCommand::Repro(ReproTarget::Fig1d),
        CliCommand::ReproFig2d => PipelineCommand::Repro(ReproTarget::Fig2d),
        CliCommand::ReproFig3de => PipelineCommand::Repro(ReproTarget::Fig3de),
        CliCommand::ReproFig4a => PipelineCommand::Repro(ReproTarget::Fig4a),
        CliCommand::ReproFig4b => PipelineCommand::Repro(ReproTarget::Fig4b),
        CliCommand::ReproFig4c => PipelineCommand::Repro(ReproTarget::Fig4c),
        CliCommand::ReproFig4d => PipelineCommand::Repro(ReproTarget::Fig4d),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut config = match load_config(&cli.common) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    apply_command_overrides(&mut config, &cli.command);
    if let Err(e) = validate(&config) {
        eprintln!("error: {e}");
        return ExitCode::from(2);
    }
    let command = pipeline_command(&cli.command);
    let out_dir = PathBuf::from(&config.output.dir);
    match run_pipeline(&config, &command, &out_dir) {
        Ok(manifest) => {
            println!(
                "{}: {} artifact(s) written to {}",
                manifest.command,
                manifest.digests.len(),
                out_dir.display()
            );
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(3)
        }
    }
}
